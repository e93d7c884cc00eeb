//! Subcommands. [`execute`] runs one and returns its report; `main` only
//! prints it.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, ensure, Context, Result};
use clap::{ArgGroup, Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::Value;
use sgld_interim::dataset::{make_d1, make_d2, make_d3_d4};
use sgld_interim::mechanisms::{propose_test_sample, propose_test_sample_sgld, GateMode, PtsOutcome, PtsParams, PtsTrace};
use sgld_interim::montecarlo::{chain_rng, derive_seed, simulate_trace, ChainConfig, Order};
use sgld_interim::posterior::{posterior_adp_with, NuGrid, PosteriorReport};
use sgld_interim::sgld::{
    advance_epoch, certify_violation, coefficients, critical_epoch, gap_metric, instantiate_within_cap, state_at_epoch,
    theorem1_sizes, violation_epsilon, CertificateResult, Theorem1Sizes, Theorem1Target, DEFAULT_MAX_N,
};
use sgld_interim::wasserstein::{
    gaussian_1d, smooth, theorem2_rhs, theorem2_rhs_annulus_form, verify_bound, wasserstein2_1d, GriddedDensity,
    SmoothingConfig, VerificationReport,
};
use sgld_interim::{CriticalEpochReport, Dataset, DomainSpec, EpochState, ModelParams, SgldCoefficients};

use crate::config::ExperimentConfig;

#[derive(Debug, Parser)]
#[command(name = "sgld-interim", version, about = "Posterior sampling vs cyclic SGLD privacy experiments")]
pub struct Cli {
    /// Experiment config (JSON); defaults to the reference setting.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Replaces the config's seed list with this single seed.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Replaces the config's output directory.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Print the report as JSON instead of a text summary.
    #[arg(long, global = true)]
    pub json: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Gap-metric curve and critical epoch for the D1/D2 pair.
    Figure1(Figure1Args),
    /// (ε, δ) guarantee of exact posterior sampling.
    PosteriorPrivacy(PosteriorArgs),
    /// Exact and exponential violation certificates at the critical step.
    Certify(CertifyArgs),
    /// Runs Propose-Test-Sample once per seed.
    PtsRun(PtsArgs),
    /// Monte Carlo check of the closed-form epoch laws.
    McVerify(McArgs),
    /// Smoothed-density bound for two gridded Gaussians.
    WassersteinDemo(WassersteinArgs),
    /// Sizes the counterexample construction asks for.
    Theorem1Params(Theorem1Args),
}

#[derive(Debug, Args)]
pub struct Figure1Args {
    /// Plot at least this many epochs (default: config `epochs`).
    #[arg(long)]
    pub epochs: Option<u64>,
}

#[derive(Debug, Args)]
pub struct PosteriorArgs {
    /// Reference ε for the Rényi-order grid.
    #[arg(long, default_value_t = 1.0)]
    pub eps_ref: f64,
}

#[derive(Debug, Args)]
pub struct CertifyArgs {
    /// Level ε′ the SGLD law is tested against; must exceed the budget ε.
    #[arg(long)]
    pub epsilon_prime: f64,
    /// Size a database from the config spec (as template) instead of using
    /// it directly.
    #[arg(long)]
    pub instantiate: bool,
    #[arg(long, default_value_t = DEFAULT_MAX_N)]
    pub max_n: f64,
}

#[derive(Debug, Args)]
#[command(group(ArgGroup::new("source").required(true).args(["data", "generate_d3"])))]
pub struct PtsArgs {
    /// Dataset CSV with header `x,y`.
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// Generate the D3 database with this many records (saved as `d3.csv`).
    #[arg(long)]
    pub generate_d3: Option<usize>,
    /// Mechanism parameters (JSON); overrides the config's `pts`.
    #[arg(long)]
    pub params: Option<PathBuf>,
    /// Slope exponent of the generated database.
    #[arg(long, default_value_t = 1.15)]
    pub rho3: f64,
    /// Release with this many cyclic SGLD steps instead of an exact draw.
    #[arg(long)]
    pub sgld_steps: Option<u64>,
    /// Overrides the per-query ε of the mechanism.
    #[arg(long)]
    pub epsilon: Option<f64>,
    /// Only the structural term enters `n_min`.
    #[arg(long)]
    pub relaxed: bool,
}

#[derive(Debug, Args)]
pub struct McArgs {
    /// Domain spec (JSON); overrides the config's `spec`.
    #[arg(long)]
    pub spec: Option<PathBuf>,
    #[arg(long, default_value_t = 20_000)]
    pub chains: u64,
    /// Step size (default: the config's `1/(α + n x_h² β)²`).
    #[arg(long)]
    pub eta: Option<f64>,
    /// Epochs to simulate (default: config `epochs`, at least 1).
    #[arg(long)]
    pub epochs: Option<u64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum DemoCase {
    /// `N(0, I)` against `N(μ₂ e₁, I)`.
    Gaussians,
}

#[derive(Debug, Args)]
pub struct WassersteinArgs {
    #[arg(long, default_value_t = 1)]
    pub dim: usize,
    #[arg(long, value_enum, default_value_t = DemoCase::Gaussians)]
    pub case: DemoCase,
    /// Mean shift of the second density along the first axis.
    #[arg(long, default_value_t = 0.01)]
    pub mu2: f64,
    #[arg(long, default_value_t = 0.5)]
    pub radius: f64,
    /// Wasserstein budget ε; the check assumes `W₂ <= ε²`.
    #[arg(long, default_value_t = 0.1)]
    pub budget: f64,
    /// Lattice spacing (default 0.005 in 1-d, 0.05 in 2-d).
    #[arg(long)]
    pub spacing: Option<f64>,
    /// Half-width of the lattice.
    #[arg(long, default_value_t = 8.0)]
    pub extent: f64,
}

#[derive(Debug, Args)]
pub struct Theorem1Args {
    #[arg(long)]
    pub epsilon_prime: f64,
    #[arg(long, default_value_t = DEFAULT_MAX_N)]
    pub max_n: f64,
}

/// Result of one command.
#[derive(Debug, Clone, Default)]
pub struct Output {
    /// Main report, also written to `output_dir`.
    pub report: Value,
    /// Per-run records (one per seed for `pts-run`).
    pub lines: Vec<Value>,
    /// Short human-readable summary.
    pub text: String,
    pub files: Vec<PathBuf>,
}

pub fn resolve_config(cli: &Cli) -> Result<ExperimentConfig> {
    let mut cfg = match &cli.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::figure1(),
    };
    if let Some(out) = &cli.out {
        cfg.output_dir = out.clone();
    }
    if let Some(seed) = cli.seed {
        cfg.seeds = vec![seed];
    }
    cfg.validate()?;
    Ok(cfg)
}

pub fn execute(cli: &Cli) -> Result<Output> {
    let cfg = resolve_config(cli)?;
    match &cli.command {
        Command::Figure1(a) => figure1(&cfg, a),
        Command::PosteriorPrivacy(a) => posterior_privacy(&cfg, a),
        Command::Certify(a) => certify(&cfg, a),
        Command::PtsRun(a) => pts_run(&cfg, a),
        Command::McVerify(a) => mc_verify(&cfg, a),
        Command::WassersteinDemo(a) => wasserstein_demo(&cfg, a),
        Command::Theorem1Params(a) => theorem1_params(&cfg, a),
    }
}

fn write_json<T: Serialize>(dir: &Path, name: &str, value: &T) -> Result<(Value, PathBuf)> {
    let v = serde_json::to_value(value)?;
    let path = dir.join(name);
    fs::write(&path, serde_json::to_string_pretty(&v)? + "\n").with_context(|| format!("writing {}", path.display()))?;
    Ok((v, path))
}

fn read_json_file<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

fn posterior_or_note(spec: &DomainSpec, model: &ModelParams, delta: f64, grid: &NuGrid) -> (Option<PosteriorReport>, Option<String>) {
    match posterior_adp_with(spec, model, delta, grid) {
        Ok((budget, bound)) => (Some(PosteriorReport::new(budget, bound)), None),
        Err(e) => (None, Some(e.to_string())),
    }
}

#[derive(Debug, Serialize)]
pub struct CurveRow {
    pub epoch: u64,
    pub step: u64,
    pub gap_metric: f64,
    pub d1_mean: f64,
    pub d1_var: f64,
    pub min_component_mean: f64,
    pub max_component_mean: f64,
}

impl CurveRow {
    fn of(state: &EpochState, n: u64) -> Self {
        Self {
            epoch: state.epoch,
            step: state.epoch * n,
            gap_metric: gap_metric(state),
            d1_mean: state.d1.mean,
            d1_var: state.d1.variance,
            min_component_mean: state.min_component_mean(),
            max_component_mean: state.max_component_mean(),
        }
    }
}

#[derive(Debug, Serialize)]
pub struct Figure1Summary {
    pub spec: DomainSpec,
    pub model: ModelParams,
    pub eta: f64,
    pub epochs_plotted: u64,
    pub critical: CriticalEpochReport,
    pub peak_epoch: u64,
    pub peak_gap_metric: f64,
    pub gap_metric_at_violation_epoch: f64,
    pub certificate: CertificateResult,
    pub posterior: Option<PosteriorReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub posterior_note: Option<String>,
    pub curve_csv: String,
}

fn figure1(cfg: &ExperimentConfig, args: &Figure1Args) -> Result<Output> {
    let (spec, model, delta) = (cfg.spec, cfg.model, cfg.budget.delta);
    let coeff = coefficients(&spec, &model);
    let mut critical = critical_epoch(&coeff, &spec, &model)?;
    critical.epsilon_prime = Some(violation_epsilon(&critical, &spec, &model, delta)?);
    let last = (2 * critical.k_dot.ceil() as u64).max(args.epochs.unwrap_or(cfg.epochs));

    let csv_path = cfg.output_dir.join("figure1_curve.csv");
    let mut writer = csv::Writer::from_path(&csv_path).with_context(|| format!("writing {}", csv_path.display()))?;
    let mut state = EpochState::prior(spec.n, &model);
    let (mut peak_epoch, mut peak) = (0, f64::NEG_INFINITY);
    let mut at_violation = f64::NAN;
    let mut cert_state = None;
    for epoch in 0..=last {
        if epoch > 0 {
            state = advance_epoch(&state, &coeff);
        }
        let row = CurveRow::of(&state, spec.n);
        if row.gap_metric > peak {
            (peak_epoch, peak) = (epoch, row.gap_metric);
        }
        if epoch == critical.violation_epoch() {
            at_violation = row.gap_metric;
            cert_state = Some(state.clone());
        }
        writer.serialize(row)?;
    }
    writer.flush()?;
    let cert_state = cert_state.unwrap_or_else(|| state_at_epoch(critical.violation_epoch(), &coeff, &model));
    let certificate = certify_violation(&critical, &cert_state, cfg.budget.epsilon, delta);
    let (posterior, posterior_note) = posterior_or_note(&spec, &model, delta, &NuGrid::default());

    let summary = Figure1Summary {
        spec,
        model,
        eta: coeff.eta,
        epochs_plotted: last,
        critical,
        peak_epoch,
        peak_gap_metric: peak,
        gap_metric_at_violation_epoch: at_violation,
        certificate,
        posterior,
        posterior_note,
        curve_csv: csv_path.display().to_string(),
    };
    let (report, json_path) = write_json(&cfg.output_dir, "figure1_summary.json", &summary)?;
    let text = format!(
        "k_dot = {:.4}, k* = {}, T = {}\npeak gap metric {:.4e} at epoch {}\nexact certificate at eps = {}: violated = {} (margin {:.4})\ncurve: {}",
        critical.k_dot,
        critical.k_star,
        critical.violation_step,
        peak,
        peak_epoch,
        cfg.budget.epsilon,
        certificate.violated,
        certificate.margin_exact,
        csv_path.display()
    );
    Ok(Output { report, lines: vec![], text, files: vec![csv_path, json_path] })
}

fn posterior_privacy(cfg: &ExperimentConfig, args: &PosteriorArgs) -> Result<Output> {
    ensure!(args.eps_ref > 0.0, "--eps-ref must be positive");
    let (budget, bound) = posterior_adp_with(&cfg.spec, &cfg.model, cfg.budget.delta, &NuGrid::with_eps_ref(args.eps_ref))?;
    let rep = PosteriorReport::new(budget, bound);
    let (report, path) = write_json(&cfg.output_dir, "posterior_privacy.json", &rep)?;
    let text = format!(
        "posterior is ({:.6}, {})-DP via Rényi order {:.4} (epsilon1 = {:.6})",
        rep.epsilon, rep.delta, rep.nu, rep.epsilon1
    );
    Ok(Output { report, lines: vec![], text, files: vec![path] })
}

#[derive(Debug, Serialize)]
pub struct CertifyReport {
    pub spec: DomainSpec,
    pub model: ModelParams,
    pub critical: CriticalEpochReport,
    #[serde(flatten)]
    pub certificate: CertificateResult,
    /// Largest ε′ refuted by both the exact and the exponential masses.
    pub certified_epsilon_prime: f64,
    pub posterior: Option<PosteriorReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub posterior_note: Option<String>,
    /// Present with `--instantiate`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub literal_n_p: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub literal_feasible: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reached_target: Option<bool>,
}

fn certify(cfg: &ExperimentConfig, args: &CertifyArgs) -> Result<Output> {
    let (eps, delta) = (cfg.budget.epsilon, cfg.budget.delta);
    ensure!(
        args.epsilon_prime > eps,
        "--epsilon-prime must exceed the posterior budget epsilon = {eps}, got {}",
        args.epsilon_prime
    );
    let model = cfg.model;
    let rep = if args.instantiate {
        let target = Theorem1Target { epsilon: eps, epsilon_prime: args.epsilon_prime, delta };
        let inst = instantiate_within_cap(&target, &cfg.spec, &model, args.max_n)?;
        CertifyReport {
            spec: inst.spec,
            model,
            critical: inst.report,
            certificate: inst.certificate,
            certified_epsilon_prime: inst.certified_epsilon_prime,
            posterior: Some(PosteriorReport::new(inst.posterior_budget, inst.posterior_bound)),
            posterior_note: None,
            literal_n_p: Some(inst.literal_n_p),
            literal_feasible: Some(inst.literal_feasible),
            reached_target: Some(inst.reached_target),
        }
    } else {
        let spec = cfg.spec;
        let coeff = coefficients(&spec, &model);
        let mut critical = critical_epoch(&coeff, &spec, &model)?;
        critical.epsilon_prime = Some(violation_epsilon(&critical, &spec, &model, delta)?);
        let state = state_at_epoch(critical.violation_epoch(), &coeff, &model);
        let certificate = certify_violation(&critical, &state, args.epsilon_prime, delta);
        let (posterior, posterior_note) = posterior_or_note(&spec, &model, delta, &NuGrid::with_eps_ref(eps));
        CertifyReport {
            spec,
            model,
            critical,
            certified_epsilon_prime: certificate.max_refuted_epsilon_exact.min(certificate.max_refuted_epsilon_chernoff),
            certificate,
            posterior,
            posterior_note,
            literal_n_p: None,
            literal_feasible: None,
            reached_target: None,
        }
    };
    let (report, path) = write_json(&cfg.output_dir, "certificate.json", &rep)?;
    let c = &rep.certificate;
    let text = format!(
        "n = {}, c = {:.6e}, T = {}\nP1(S) = {}, P2(S) exact = {:.6e}, exponential = {:.6e}\nviolated at eps' = {}: exact {} (margin {:.4}), exponential {} (margin {:.4})",
        rep.spec.n,
        rep.spec.c,
        c.t,
        c.p1,
        c.p2_exact,
        c.p2_chernoff,
        c.epsilon_tested,
        c.violated,
        c.margin_exact,
        c.violated_chernoff,
        c.margin_chernoff
    );
    Ok(Output { report, lines: vec![], text, files: vec![path] })
}

#[derive(Debug, Serialize)]
pub struct PtsLine {
    pub seed: u64,
    #[serde(flatten)]
    pub trace: PtsTrace,
}

#[derive(Debug, Serialize)]
pub struct PtsSummary {
    pub runs: usize,
    pub records: usize,
    pub sampled: usize,
    pub null_at_step10: usize,
    pub null_at_step18: usize,
    pub sampled_rate: f64,
    pub params: PtsParams,
    pub sgld_steps: Option<u64>,
    pub traces: String,
}

fn pts_run(cfg: &ExperimentConfig, args: &PtsArgs) -> Result<Output> {
    let mut params = match &args.params {
        Some(path) => read_json_file::<PtsParams>(path)?,
        None => cfg.pts_params(),
    };
    if let Some(eps) = args.epsilon {
        params.epsilon = eps;
    }
    if args.relaxed {
        params.gate = GateMode::Relaxed;
    }
    params.validate()?;
    if args.sgld_steps == Some(0) {
        bail!("--sgld-steps must be at least 1");
    }
    let mut files = vec![];
    let data = match (&args.data, args.generate_d3) {
        (Some(path), _) => Dataset::read_csv_path(path).with_context(|| format!("reading {}", path.display()))?,
        (None, Some(n1)) => {
            ensure!(n1 >= 2, "--generate-d3 needs at least 2 records");
            let (d3, _) = make_d3_d4(n1, args.rho3, params.x_h);
            let path = cfg.output_dir.join("d3.csv");
            d3.write_csv_path(&path)?;
            files.push(path);
            d3
        }
        (None, None) => bail!("one of --data or --generate-d3 is required"),
    };

    let traces_path = cfg.output_dir.join("pts_traces.jsonl");
    let mut out = BufWriter::new(File::create(&traces_path).with_context(|| format!("writing {}", traces_path.display()))?);
    let mut lines = Vec::with_capacity(cfg.seeds.len());
    let mut counts = [0usize; 3];
    for &seed in &cfg.seeds {
        let mut rng = chain_rng(seed, 0);
        let (_, trace) = match args.sgld_steps {
            Some(steps) => propose_test_sample_sgld(&data, &params, steps, &mut rng)?,
            None => propose_test_sample(&data, &params, &mut rng),
        };
        counts[match trace.outcome {
            PtsOutcome::Sampled => 0,
            PtsOutcome::NullAtStep10 => 1,
            PtsOutcome::NullAtStep18 => 2,
        }] += 1;
        let v = serde_json::to_value(PtsLine { seed, trace })?;
        writeln!(out, "{}", serde_json::to_string(&v)?)?;
        lines.push(v);
    }
    out.flush()?;
    files.push(traces_path.clone());

    let runs = cfg.seeds.len();
    let summary = PtsSummary {
        runs,
        records: data.len(),
        sampled: counts[0],
        null_at_step10: counts[1],
        null_at_step18: counts[2],
        sampled_rate: counts[0] as f64 / runs as f64,
        params,
        sgld_steps: args.sgld_steps,
        traces: traces_path.display().to_string(),
    };
    let (report, path) = write_json(&cfg.output_dir, "pts_summary.json", &summary)?;
    files.push(path);
    let text = format!(
        "{runs} runs on {} records: {} sampled, {} null at step 10, {} null at step 18\ntraces: {}",
        data.len(),
        counts[0],
        counts[1],
        counts[2],
        traces_path.display()
    );
    Ok(Output { report, lines, text, files })
}

#[derive(Debug, Serialize)]
pub struct MomentCheck {
    pub epoch: u64,
    pub mean: f64,
    pub variance: f64,
    pub exact_mean: f64,
    pub exact_variance: f64,
    pub z_mean: f64,
    pub z_variance: f64,
}

#[derive(Debug, Serialize)]
pub struct KsCheck {
    pub epoch: u64,
    pub ks: f64,
    pub band: f64,
    pub inside: bool,
}

#[derive(Debug, Serialize)]
pub struct McReport {
    pub n: u64,
    pub chains: u64,
    pub eta: f64,
    pub seed: u64,
    /// Fixed cyclic order on D1, against the closed-form law.
    pub d1: Vec<MomentCheck>,
    /// Uniform random rotation on D2, against the closed-form mixture.
    pub d2: Vec<KsCheck>,
    pub max_abs_z: f64,
    pub ks_inside_fraction: f64,
    /// `max_abs_z <= 4` and at least 90% of KS distances inside the band.
    pub pass: bool,
}

const MC_STEP_BUDGET: f64 = 5e9;

fn mc_verify(cfg: &ExperimentConfig, args: &McArgs) -> Result<Output> {
    let spec = match &args.spec {
        Some(path) => read_json_file::<DomainSpec>(path)?,
        None => cfg.spec,
    };
    spec.validate()?;
    let model = cfg.model;
    let epochs = args.epochs.unwrap_or(cfg.epochs).max(1);
    ensure!(args.chains >= 100, "--chains must be at least 100");
    let work = spec.n_f64() * epochs as f64 * args.chains as f64 * 2.0;
    ensure!(
        work <= MC_STEP_BUDGET,
        "n * epochs * chains = {work:.3e} SGLD steps exceeds the {MC_STEP_BUDGET:.0e} limit; use a smaller config"
    );
    let coeff = match args.eta {
        Some(eta) => {
            ensure!(eta > 0.0, "--eta must be positive");
            SgldCoefficients::with_eta(spec.n, spec.c, spec.x_h, &model, eta)
        }
        None => coefficients(&spec, &model),
    };
    let seed = cfg.seeds[0];
    let (d1, d2) = (make_d1(&spec), make_d2(&spec));
    let steps = epochs * spec.n;
    let base = ChainConfig::cyclic(coeff.eta, steps, derive_seed(seed, 10));
    let t1 = simulate_trace(&d1, &model, &base, args.chains, spec.n);
    let rot = ChainConfig { order: Order::RandomRotation, seed: derive_seed(seed, 11), ..base };
    let t2 = simulate_trace(&d2, &model, &rot, args.chains, spec.n);

    let band = 1.63 / (args.chains as f64).sqrt();
    let mut d1_checks = vec![];
    let mut d2_checks = vec![];
    let mut state = EpochState::prior(spec.n, &model);
    for epoch in 1..=epochs {
        state = advance_epoch(&state, &coeff);
        let e = &t1[epoch as usize];
        d1_checks.push(MomentCheck {
            epoch,
            mean: e.mean(),
            variance: e.variance(),
            exact_mean: state.d1.mean,
            exact_variance: state.d1.variance,
            z_mean: (e.mean() - state.d1.mean) / e.se_mean(),
            z_variance: (e.variance() - state.d1.variance) / e.se_variance(),
        });
        let mix = state.d2_mixture();
        let ks = t2[epoch as usize].ks_distance(|x| mix.cdf(x));
        d2_checks.push(KsCheck { epoch, ks, band, inside: ks <= band });
    }
    let max_abs_z = d1_checks.iter().map(|c| c.z_mean.abs().max(c.z_variance.abs())).fold(0.0, f64::max);
    let inside = d2_checks.iter().filter(|c| c.inside).count() as f64 / d2_checks.len() as f64;
    let rep = McReport {
        n: spec.n,
        chains: args.chains,
        eta: coeff.eta,
        seed,
        d1: d1_checks,
        d2: d2_checks,
        max_abs_z,
        ks_inside_fraction: inside,
        pass: max_abs_z <= 4.0 && inside >= 0.9,
    };
    let (report, path) = write_json(&cfg.output_dir, "mc_verify.json", &rep)?;
    let text = format!(
        "{} chains, {epochs} epochs, eta = {:.4e}: max |z| = {:.2}, KS inside 1.63/sqrt(N) band for {:.0}% of epochs, pass = {}",
        args.chains,
        coeff.eta,
        max_abs_z,
        100.0 * inside,
        rep.pass
    );
    Ok(Output { report, lines: vec![], text, files: vec![path] })
}

#[derive(Debug, Serialize)]
pub struct WassersteinDemoReport {
    pub case: DemoCase,
    pub mu2: f64,
    pub spacing: f64,
    /// Exact `W₂` of the two translates, `|μ₂|`.
    pub w2_exact: f64,
    /// Quantile-function estimate (1-d only).
    pub w2_quantile_estimate: Option<f64>,
    /// Largest gap between the two algebraic forms of the bound.
    pub rhs_forms_max_abs_difference: f64,
    #[serde(flatten)]
    pub verification: VerificationReport,
}

fn gaussian_nd(dim: usize, shift: f64, lo: f64, spacing: f64, points: usize) -> Result<GriddedDensity> {
    if dim == 1 {
        return Ok(gaussian_1d(shift, 1.0, lo, spacing, points)?);
    }
    let d = dim as f64;
    let norm = (2.0 * std::f64::consts::PI).powf(-d / 2.0);
    let lipschitz = norm * (-0.5f64).exp();
    Ok(GriddedDensity::from_fn(vec![lo; dim], spacing, vec![points; dim], lipschitz, |x| {
        let r2: f64 = x.iter().enumerate().map(|(i, &v)| if i == 0 { (v - shift).powi(2) } else { v * v }).sum();
        norm * (-0.5 * r2).exp()
    })?)
}

fn wasserstein_demo(cfg: &ExperimentConfig, args: &WassersteinArgs) -> Result<Output> {
    ensure!((1..=3).contains(&args.dim), "--dim must be 1, 2 or 3");
    let config = SmoothingConfig::new(args.radius, args.budget)?;
    let spacing = args.spacing.unwrap_or(if args.dim == 1 { 0.005 } else { 0.05 });
    ensure!(spacing > 0.0 && args.extent > 0.0, "--spacing and --extent must be positive");
    let points = (2.0 * args.extent / spacing).round() as usize + 1;
    ensure!(
        (points as f64).powi(args.dim as i32) <= 2e7,
        "lattice of {points}^{} points is too large; raise --spacing",
        args.dim
    );
    let lo = -args.extent;
    let p = gaussian_nd(args.dim, 0.0, lo, spacing, points)?;
    let q = gaussian_nd(args.dim, args.mu2, lo, spacing, points)?;
    let w2_exact = args.mu2.abs();
    let w2_quantile_estimate = if args.dim == 1 { Some(wasserstein2_1d(&p, &q)?) } else { None };
    let verification = verify_bound(&p, &q, &config, Some(w2_exact))?;
    let lipschitz = p.lipschitz.max(q.lipschitz);
    let rhs_forms_max_abs_difference = smooth(&q, args.radius)?
        .values
        .iter()
        .map(|&v| {
            (theorem2_rhs(v, &config, args.dim, lipschitz) - theorem2_rhs_annulus_form(v, &config, args.dim, lipschitz)).abs()
        })
        .fold(0.0, f64::max);
    let rep = WassersteinDemoReport {
        case: args.case,
        mu2: args.mu2,
        spacing,
        w2_exact,
        w2_quantile_estimate,
        rhs_forms_max_abs_difference,
        verification,
    };
    let (report, path) = write_json(&cfg.output_dir, &format!("wasserstein_d{}.json", args.dim), &rep)?;
    let v = &rep.verification;
    let text = format!(
        "d = {}, s = {}, budget = {}, W2 = {}: {} of {} points violate the bound (min slack {:.4e}, {} boundary points excluded); ball checks {}/{} violated",
        v.dim,
        v.radius,
        v.w2_budget,
        v.w2,
        v.violations,
        v.checked_points,
        v.min_slack,
        v.excluded_boundary_points,
        v.ball_violations,
        v.ball_checks
    );
    Ok(Output { report, lines: vec![], text, files: vec![path] })
}

#[derive(Debug, Serialize)]
pub struct Theorem1Report {
    pub target: Theorem1Target,
    pub template: DomainSpec,
    pub model: ModelParams,
    pub sizes: Theorem1Sizes,
    pub max_n: f64,
    pub literal_feasible: bool,
}

fn theorem1_params(cfg: &ExperimentConfig, args: &Theorem1Args) -> Result<Output> {
    let target = Theorem1Target { epsilon: cfg.budget.epsilon, epsilon_prime: args.epsilon_prime, delta: cfg.budget.delta };
    let sizes = theorem1_sizes(&target, &cfg.spec, &cfg.model)?;
    let rep = Theorem1Report {
        target,
        template: cfg.spec,
        model: cfg.model,
        sizes,
        max_n: args.max_n,
        literal_feasible: sizes.n_p.floor() + 1.0 <= args.max_n,
    };
    let (report, path) = write_json(&cfg.output_dir, "theorem1_params.json", &rep)?;
    let text = format!(
        "required n > {:.4e} (SGLD {:.4e}, posterior {:.4e}, RDP {:.4e}, level {:.4e}); c = n^gamma2 = {:.4e}; feasible under cap {:.1e}: {}",
        sizes.n_p, sizes.n1, sizes.n2, sizes.n3, sizes.n_eps_prime, sizes.c_p, args.max_n, rep.literal_feasible
    );
    Ok(Output { report, lines: vec![], text, files: vec![path] })
}
