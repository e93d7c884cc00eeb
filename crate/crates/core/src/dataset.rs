//! Datasets, sufficient statistics and the adversarial neighbouring databases.

use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::DomainSpec;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DataPoint {
    pub x: f64,
    pub y: f64,
}

impl DataPoint {
    pub fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }
}

/// Ordered points. Cyclic SGLD consumes them in stored order.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub points: Vec<DataPoint>,
}

/// `z = Σ x²`, `q = Σ x y` over a subset of points.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct SufficientStats {
    pub z: f64,
    pub q: f64,
}

impl SufficientStats {
    pub fn of<'a>(points: impl IntoIterator<Item = &'a DataPoint>) -> Self {
        points.into_iter().fold(Self::default(), |acc, p| acc.with_point(p))
    }

    pub fn with_point(self, p: &DataPoint) -> Self {
        Self {
            z: self.z + p.x * p.x,
            q: self.q + p.x * p.y,
        }
    }
}

impl Dataset {
    pub fn new(points: Vec<DataPoint>) -> Self {
        Self { points }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn stats(&self) -> SufficientStats {
        SufficientStats::of(&self.points)
    }

    /// Number of positions at which two equal-length datasets differ.
    pub fn hamming(&self, other: &Dataset) -> Option<usize> {
        (self.len() == other.len()).then(|| {
            self.points
                .iter()
                .zip(&other.points)
                .filter(|(a, b)| a != b)
                .count()
        })
    }

    /// Reads a CSV with header `x,y`. Errors name the 1-based data row.
    pub fn read_csv<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
        let headers = rdr
            .headers()
            .map_err(|e| Error::DatasetRow { row: 0, reason: e.to_string() })?
            .clone();
        if headers.len() != 2 || &headers[0] != "x" || &headers[1] != "y" {
            return Err(Error::DatasetRow {
                row: 0,
                reason: format!("expected header `x,y`, got `{}`", headers.iter().collect::<Vec<_>>().join(",")),
            });
        }
        let mut points = Vec::new();
        for (i, rec) in rdr.records().enumerate() {
            let row = i + 1;
            let rec = rec.map_err(|e| Error::DatasetRow { row, reason: e.to_string() })?;
            if rec.len() != 2 {
                return Err(Error::DatasetRow { row, reason: format!("expected 2 fields, got {}", rec.len()) });
            }
            let parse = |s: &str, name: &str| -> Result<f64> {
                let v: f64 = s
                    .parse()
                    .map_err(|_| Error::DatasetRow { row, reason: format!("cannot parse {name} = `{s}`") })?;
                if !v.is_finite() {
                    return Err(Error::DatasetRow { row, reason: format!("{name} is not finite") });
                }
                Ok(v)
            };
            points.push(DataPoint::new(parse(&rec[0], "x")?, parse(&rec[1], "y")?));
        }
        Ok(Self { points })
    }

    pub fn read_csv_path(path: impl AsRef<Path>) -> Result<Self> {
        Self::read_csv(std::fs::File::open(path)?)
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let io = |e: csv::Error| Error::Io(std::io::Error::other(e));
        w.write_record(["x", "y"]).map_err(io)?;
        for p in &self.points {
            w.write_record([p.x.to_string(), p.y.to_string()]).map_err(io)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn write_csv_path(&self, path: impl AsRef<Path>) -> Result<()> {
        self.write_csv(std::fs::File::create(path)?)
    }
}

fn pair_with_modified_last(n: usize, x_h: f64, slope: f64) -> (Dataset, Dataset) {
    let base = DataPoint::new(x_h, slope * x_h);
    let d1 = Dataset::new(vec![base; n]);
    let mut d2 = d1.clone();
    if let Some(last) = d2.points.last_mut() {
        *last = DataPoint::new(x_h / 2.0, slope * x_h / 2.0);
    }
    (d1, d2)
}

/// `n` copies of `(x_h, c x_h)`.
pub fn make_d1(spec: &DomainSpec) -> Dataset {
    pair_with_modified_last(spec.n as usize, spec.x_h, spec.c).0
}

/// `make_d1` with the final point replaced by `(x_h/2, c x_h/2)`.
pub fn make_d2(spec: &DomainSpec) -> Dataset {
    pair_with_modified_last(spec.n as usize, spec.x_h, spec.c).1
}

/// The same pair with slope `n1^rho3` instead of `c`.
pub fn make_d3_d4(n1: usize, rho3: f64, x_h: f64) -> (Dataset, Dataset) {
    let slope = (n1 as f64).powf(rho3);
    pair_with_modified_last(n1, x_h, slope)
}
