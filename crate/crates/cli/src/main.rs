//! `gftree`: simulate division trees, estimate the division rate and run the
//! numerical checks from the command line.
//!
//! Exit codes: 0 success, 2 invalid usage or input, 3 runtime failure,
//! 4 a verification verdict failed.

mod parse;

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use gftree_core::estimator::{
    estimate_B, estimate_B_pooled_tau, write_estimate_json, write_estimate_tsv, CurveOnGrid, EstimatorConfig,
};
use gftree_core::experiments::{
    analyze_experimental, confidence_band, ingest_lineage_csv, run_convergence_study, variability_ablation,
    write_band_tsv, write_json, write_study_tsv, ColumnMapping, StudyConfig,
};
use gftree_core::invariant::{
    compare_with_invariant, flux_identity_error, invariant_fixed_point, solve_conservative_pde, uniform_phase_profile,
    verify_drift, PdeOptions, PdeScheme, SizeGrid, FIXED_POINT_TOL,
};
use gftree_core::model::{
    check_class_membership, ClassParams, DivisionRate, GrowthBounds, GrowthKernel, GrowthLaw, LifetimeSampler,
    ModelSpec, Scheme,
};
use gftree_core::simulator::{
    default_battery, fmt_real, many_to_one_check, read_genealogy_file, simulate_full_tree, simulate_sparse_lineage,
    write_genealogy_file, GenealogyTree, SimOptions,
};

const SEED_ENV: &str = "GFTREE_SEED";

#[derive(Parser, Debug)]
#[command(
    name = "gftree",
    version,
    about = "Division trees with variable growth: simulation, estimation and checks"
)]
struct Cli {
    /// Worker threads [default: all cores]
    #[arg(long, global = true)]
    workers: Option<usize>,

    /// Output directory
    #[arg(long, global = true, default_value = "gftree-out")]
    out: PathBuf,

    /// Leave the creation time out of manifests so reruns are byte-identical
    #[arg(long, global = true)]
    no_timestamp: bool,

    /// Master seed [default: 0]; the GFTREE_SEED environment variable overrides it
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// JSON file with optional "model" and "estimator" sections; flags override it
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Simulate a genealogy and write it as CSV
    Simulate(SimulateArgs),
    /// Estimate the division rate from a genealogy CSV
    Estimate(EstimateArgs),
    /// Monte Carlo convergence study, confidence band and variability ablation
    Study(StudyArgs),
    /// Many-to-one identity, class membership and drift condition
    Verify(VerifyArgs),
    /// Invariant density, conservative PDE and the relation between them
    PdeCheck(PdeCheckArgs),
    /// Estimate from an experimental lineage table
    Ingest(IngestArgs),
}

#[derive(Args, Debug, Clone, Default)]
struct ModelArgs {
    /// Division rate, c*x^l [default: x^2]
    #[arg(long = "b")]
    b: Option<String>,
    /// Growth kernel: dirac:R, uniform-increment:A,S, gaussian-increment:S, resample-uniform:LO,HI, resample-gaussian:M,S [default: uniform-increment:0.5,0.5]
    #[arg(long)]
    rho: Option<String>,
    /// Admissible growth rates EMIN,EMAX [default: 0.2,3]; ignored for dirac
    #[arg(long)]
    bounds: Option<String>,
}

#[derive(Args, Debug, Clone, Default)]
struct EstimatorArgs {
    /// Kernel: gaussian or order:N [default: gaussian]
    #[arg(long)]
    kernel: Option<String>,
    /// Bandwidth: power:EXP, fixed:H, theorem:S,C0 or a number [default: power:-0.3333]
    #[arg(long)]
    bandwidth: Option<String>,
    /// Denominator floor: inv_log, inv_sqrt, inv_n or a number [default: inv_log]
    #[arg(long)]
    threshold: Option<String>,
    /// Grid step [default: n^(-1/2)]
    #[arg(long)]
    dx: Option<f64>,
    /// Grid end [default: 5]
    #[arg(long)]
    x_max: Option<f64>,
}

#[derive(Args, Debug)]
struct SimulateArgs {
    /// Observation scheme: full or sparse
    #[arg(long, default_value = "full")]
    scheme: Scheme,
    /// Generations of the full tree (2^(g+1) - 1 cells)
    #[arg(long, default_value_t = 10)]
    generations: u32,
    /// Number of cells on the sparse lineage
    #[arg(long, default_value_t = 1024)]
    length: usize,
    /// Lifetime sampler: inverse_hazard or rejection
    #[arg(long, default_value = "inverse_hazard", value_parser = lifetime_sampler)]
    sampler: LifetimeSampler,
    #[command(flatten)]
    model: ModelArgs,
}

#[derive(Args, Debug)]
struct EstimateArgs {
    /// Genealogy CSV (path,size_birth,growth_rate,lifetime,birth_time)
    #[arg(long)]
    input: PathBuf,
    /// Replace every growth rate by the sample mean
    #[arg(long)]
    pooled_tau: bool,
    #[command(flatten)]
    estimator: EstimatorArgs,
}

#[derive(Args, Debug)]
struct StudyArgs {
    /// Observation scheme: full, sparse or both
    #[arg(long, default_value = "full")]
    scheme: String,
    /// Sample sizes as powers of two: A..B or a list
    #[arg(long, default_value = "5..10")]
    sizes: String,
    /// Replicates per sample size
    #[arg(long, default_value_t = 100)]
    replicates: usize,
    /// Points entering the error: raw denominator above inv_log, inv_sqrt, inv_n or a number
    #[arg(long, default_value = "inv_log")]
    conditioning: String,
    /// Use the pooled growth-rate estimator
    #[arg(long)]
    pooled_tau: bool,
    /// Also write a pointwise band at this sample size
    #[arg(long)]
    band_n: Option<usize>,
    /// Band level
    #[arg(long, default_value_t = 0.95)]
    band_level: f64,
    /// Also compare variability-aware and pooled estimators at this sample size
    #[arg(long)]
    ablation_n: Option<usize>,
    #[command(flatten)]
    model: ModelArgs,
    #[command(flatten)]
    estimator: EstimatorArgs,
}

#[derive(Args, Debug)]
struct VerifyArgs {
    /// Run only the many-to-one battery (otherwise every check runs)
    #[arg(long)]
    many_to_one: bool,
    /// Run only the class-membership and drift checks
    #[arg(long)]
    drift: bool,
    /// Time at which both sides of the identity are compared
    #[arg(long, default_value_t = 1.0)]
    t: f64,
    /// Replicates on each side
    #[arg(long, default_value_t = 20_000)]
    replicates: usize,
    /// Size of the root cell
    #[arg(long, default_value_t = 1.0)]
    root_size: f64,
    /// Allowed gap in combined standard errors
    #[arg(long, default_value_t = 3.0)]
    tolerance_se: f64,
    /// Class exponent λ
    #[arg(long, default_value_t = 2.0)]
    lambda: f64,
    /// Class radius r
    #[arg(long, default_value_t = 2.0)]
    r: f64,
    /// Class growth constant m
    #[arg(long, default_value_t = 1.0)]
    m: f64,
    /// Class lower integral ℓ
    #[arg(long, default_value_t = 1.0)]
    ell: f64,
    /// Class upper integral L
    #[arg(long, default_value_t = 2.0)]
    big_l: f64,
    /// Observation scheme for the contraction threshold: full or sparse
    #[arg(long, default_value = "sparse")]
    scheme: Scheme,
    /// Drift grid end
    #[arg(long, default_value_t = 6.0)]
    drift_x_max: f64,
    /// Drift grid points
    #[arg(long, default_value_t = 120)]
    drift_points: usize,
    #[command(flatten)]
    model: ModelArgs,
}

#[derive(Args, Debug)]
struct PdeCheckArgs {
    /// Division rate, c*x^l
    #[arg(long = "b", default_value = "x^2")]
    b: String,
    /// Constant growth rate
    #[arg(long, default_value_t = 1.0)]
    tau: f64,
    /// PDE grid step
    #[arg(long, default_value_t = 0.02)]
    pde_dx: f64,
    /// PDE domain end
    #[arg(long, default_value_t = 8.0)]
    pde_x_max: f64,
    /// Fixed-point grid step
    #[arg(long, default_value_t = 2.5e-3)]
    fixed_dx: f64,
    /// Fixed-point domain end
    #[arg(long, default_value_t = 5.0)]
    fixed_x_max: f64,
    /// Interface reconstruction: linear or upwind
    #[arg(long, default_value = "linear", value_parser = parse::pde_scheme)]
    pde_scheme: PdeScheme,
    /// Comparison window start
    #[arg(long, default_value_t = 0.5)]
    lo: f64,
    /// Comparison window end
    #[arg(long, default_value_t = 2.5)]
    hi: f64,
    /// Largest accepted relative L2 error
    #[arg(long, default_value_t = 0.02)]
    tolerance: f64,
}

#[derive(Args, Debug)]
struct IngestArgs {
    /// Lineage table (CSV with a header row)
    #[arg(long)]
    input: PathBuf,
    /// Column holding the size at birth
    #[arg(long, default_value = "size_birth")]
    size_col: String,
    /// Column holding the growth rate
    #[arg(long, default_value = "growth_rate")]
    growth_col: String,
    /// Column holding the lifetime
    #[arg(long, default_value = "lifetime")]
    lifetime_col: String,
    /// Column identifying the lineage of each row
    #[arg(long)]
    lineage_col: Option<String>,
    /// Cells dropped at the start of each lineage
    #[arg(long, default_value_t = 0)]
    drop_first: usize,
    /// Cells dropped at the end of each lineage
    #[arg(long, default_value_t = 0)]
    drop_last: usize,
    /// How the cells were observed: full or sparse
    #[arg(long, default_value = "sparse")]
    scheme: Scheme,
    /// Replace every growth rate by the sample mean
    #[arg(long)]
    pooled_tau: bool,
    #[command(flatten)]
    estimator: EstimatorArgs,
}

fn lifetime_sampler(s: &str) -> Result<LifetimeSampler, String> {
    match s {
        "inverse_hazard" => Ok(LifetimeSampler::InverseHazard),
        "rejection" => Ok(LifetimeSampler::Rejection),
        other => Err(format!("unknown sampler {other:?} (inverse_hazard or rejection)")),
    }
}

struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn usage(message: impl Into<String>) -> Self {
        Failure {
            code: 2,
            message: message.into(),
        }
    }

    fn verification(message: impl Into<String>) -> Self {
        Failure {
            code: 4,
            message: message.into(),
        }
    }
}

impl From<gftree_core::Error> for Failure {
    fn from(e: gftree_core::Error) -> Self {
        use gftree_core::Error as E;
        let code = match e {
            E::InvalidParameter(_) | E::Schema(_) | E::EmptyAfterFiltering { .. } | E::CflViolation { .. } => 2,
            _ => 3,
        };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}

type Outcome<T = ()> = Result<T, Failure>;

/// Parameters shared by every command, echoed into each report.
#[derive(Debug, Clone, Serialize, Deserialize, Default)]
struct FileConfig {
    #[serde(default)]
    model: Option<ModelSpec>,
    #[serde(default)]
    estimator: Option<EstimatorConfig>,
}

struct Context {
    out: PathBuf,
    seed: u64,
    workers: usize,
    timestamp: bool,
    file: FileConfig,
}

impl Context {
    fn path(&self, name: &str) -> PathBuf {
        self.out.join(name)
    }

    fn manifest(&self, command: &str, config: Value, extra: Value) -> Outcome {
        let mut m = json!({
            "command": command,
            "version": env!("CARGO_PKG_VERSION"),
            "seed": self.seed,
            "config": config,
        });
        if let (Value::Object(m), Value::Object(extra)) = (&mut m, extra) {
            m.extend(extra);
            if self.timestamp {
                let secs = std::time::SystemTime::now()
                    .duration_since(std::time::UNIX_EPOCH)
                    .map(|d| d.as_secs())
                    .unwrap_or(0);
                m.insert("created_unix".into(), json!(secs));
            }
        }
        write_json(&m, &self.path("manifest.json"))?;
        Ok(())
    }
}

fn model_spec(args: &ModelArgs, file: &FileConfig) -> Outcome<ModelSpec> {
    let mut spec = file.model.clone().unwrap_or_else(ModelSpec::reference);
    if let Some(b) = &args.b {
        spec.division_rate = parse::division_rate(b).map_err(Failure::usage)?;
    }
    if let Some(bounds) = &args.bounds {
        spec.bounds = parse::bounds(bounds).map_err(Failure::usage)?;
    }
    if let Some(rho) = &args.rho {
        spec.growth_kernel = parse::growth_kernel(rho).map_err(Failure::usage)?;
    }
    if let GrowthKernel::Dirac { rate } = spec.growth_kernel {
        spec.bounds = GrowthBounds {
            e_min: rate,
            e_max: rate,
        };
        spec.initial.growth = GrowthLaw::Point { value: rate };
    }
    spec.validate()?;
    Ok(spec)
}

fn estimator_config(args: &EstimatorArgs, file: &FileConfig) -> Outcome<EstimatorConfig> {
    let mut config = file.estimator.clone().unwrap_or_default();
    if let Some(k) = &args.kernel {
        config.kernel = parse::kernel(k).map_err(Failure::usage)?;
    }
    if let Some(b) = &args.bandwidth {
        config.bandwidth = parse::bandwidth(b).map_err(Failure::usage)?;
    }
    if let Some(t) = &args.threshold {
        config.threshold = parse::threshold(t).map_err(Failure::usage)?;
    }
    if let Some(dx) = args.dx {
        config.grid.dx = Some(dx);
    }
    if let Some(x_max) = args.x_max {
        config.grid.x_max = x_max;
    }
    config.kernel.validate()?;
    Ok(config)
}

fn require_file(path: &Path) -> Outcome {
    if path.is_file() {
        Ok(())
    } else {
        Err(Failure::usage(format!("input file {} does not exist", path.display())))
    }
}

fn write_lines(path: &Path, header: &str, rows: impl Iterator<Item = String>) -> Outcome {
    let io = |e: std::io::Error| Failure {
        code: 3,
        message: format!("{}: {e}", path.display()),
    };
    let mut out = BufWriter::new(File::create(path).map_err(io)?);
    writeln!(out, "{header}").map_err(io)?;
    for row in rows {
        writeln!(out, "{row}").map_err(io)?;
    }
    out.flush().map_err(io)
}

fn write_with<F>(path: &Path, f: F) -> Outcome
where
    F: FnOnce(BufWriter<File>) -> gftree_core::Result<()>,
{
    let file = File::create(path).map_err(|e| Failure {
        code: 3,
        message: format!("{}: {e}", path.display()),
    })?;
    f(BufWriter::new(file))?;
    Ok(())
}

fn simulate(ctx: &Context, args: &SimulateArgs) -> Outcome {
    let spec = model_spec(&args.model, &ctx.file)?;
    let opts = SimOptions {
        lifetime_sampler: args.sampler,
        ..SimOptions::default()
    };
    let tree = match args.scheme {
        Scheme::Full => {
            if args.generations > 24 {
                return Err(Failure::usage("at most 24 generations"));
            }
            simulate_full_tree(&spec, args.generations, ctx.seed, &opts)?
        }
        Scheme::Sparse => simulate_sparse_lineage(&spec, args.length, ctx.seed, &opts)?,
    };
    write_genealogy_file(tree.records(), ctx.path("genealogy.csv"))?;
    let config = json!({
        "model": spec,
        "scheme": args.scheme,
        "generations": args.generations,
        "length": args.length,
        "sampler": args.sampler,
    });
    ctx.manifest(
        "simulate",
        config,
        json!({ "records": tree.len(), "output": "genealogy.csv" }),
    )?;
    log::info!("wrote {} cells", tree.len());
    Ok(())
}

fn estimate(ctx: &Context, args: &EstimateArgs) -> Outcome {
    require_file(&args.input)?;
    let config = estimator_config(&args.estimator, &ctx.file)?;
    let tree = GenealogyTree::from_records(read_genealogy_file(&args.input)?)?;
    let obs = tree.observations()?;
    let est = if args.pooled_tau {
        estimate_B_pooled_tau(&obs, &config)?
    } else {
        estimate_B(&obs, &config)?
    };
    write_with(&ctx.path("estimate.tsv"), |w| write_estimate_tsv(&est, w))?;
    write_with(&ctx.path("estimate.json"), |w| write_estimate_json(&est, &config, w))?;
    let run = json!({ "input": args.input, "pooled_tau": args.pooled_tau, "estimator": config });
    ctx.manifest("estimate", run, json!({ "n": obs.len(), "grid_step": est.resolved.dx }))
}

fn study(ctx: &Context, args: &StudyArgs) -> Outcome {
    let spec = model_spec(&args.model, &ctx.file)?;
    let estimator = estimator_config(&args.estimator, &ctx.file)?;
    let schemes = match args.scheme.as_str() {
        "both" => vec![Scheme::Full, Scheme::Sparse],
        s => vec![s.parse::<Scheme>()?],
    };
    let base = StudyConfig {
        log2_sizes: parse::sizes(&args.sizes).map_err(Failure::usage)?,
        replicates: args.replicates,
        scheme: schemes[0],
        estimator: estimator.clone(),
        conditioning: parse::threshold(&args.conditioning).map_err(Failure::usage)?,
        pooled_tau: args.pooled_tau,
        seed: ctx.seed,
    };
    base.validate()?;
    let mut outputs = Vec::new();
    let mut slopes = serde_json::Map::new();
    for (k, &scheme) in schemes.iter().enumerate() {
        let config = StudyConfig { scheme, ..base.clone() };
        let study = run_convergence_study(&spec, &config)?;
        let name = format!("errors_{scheme}.tsv");
        write_study_tsv(&study, &ctx.path(&name))?;
        write_json(&study, &ctx.path(&format!("study_{scheme}.json")))?;
        outputs.push(name);
        if k == 0 {
            write_study_tsv(&study, &ctx.path("table1.tsv"))?;
            outputs.push("table1.tsv".into());
        }
        slopes.insert(
            scheme.to_string(),
            json!({ "slope": study.slope, "slope_se": study.slope_se }),
        );
    }
    if let Some(n) = args.band_n {
        let band = confidence_band(
            &spec,
            schemes[0],
            n,
            args.replicates,
            &estimator,
            args.band_level,
            ctx.seed,
        )?;
        write_band_tsv(&band, &ctx.path("band.tsv"))?;
        outputs.push("band.tsv".into());
    }
    if let Some(n) = args.ablation_n {
        let report = variability_ablation(&spec, n, args.replicates, &estimator, 2.0 / 3.0, ctx.seed)?;
        let verdict = json!({ "report": report, "pooled_worse_fraction": report.pooled_worse_fraction() });
        write_json(&verdict, &ctx.path("ablation.json"))?;
        outputs.push("ablation.json".into());
    }
    let run = json!({
        "model": spec,
        "study": base,
        "schemes": schemes,
        "band_n": args.band_n,
        "band_level": args.band_level,
        "ablation_n": args.ablation_n,
    });
    ctx.manifest("study", run, json!({ "outputs": outputs, "slopes": slopes }))
}

fn verify(ctx: &Context, args: &VerifyArgs) -> Outcome {
    let spec = model_spec(&args.model, &ctx.file)?;
    let all = !args.many_to_one && !args.drift;
    let mut verdicts = serde_json::Map::new();
    let mut failed = Vec::new();
    if all || args.many_to_one {
        let battery = default_battery();
        let report = many_to_one_check(
            &spec,
            args.root_size,
            args.t,
            args.replicates,
            &battery,
            ctx.seed,
            args.tolerance_se,
        )?;
        if !report.passes() {
            failed.push("many_to_one");
        }
        verdicts.insert(
            "many_to_one".into(),
            json!({ "pass": report.passes(), "report": report }),
        );
    }
    if all || args.drift {
        let params = ClassParams::new(args.lambda, args.r, args.m, args.ell, args.big_l)?;
        let class = check_class_membership(&params, &spec.division_rate, &spec.bounds, args.scheme);
        if !class.passes() {
            failed.push("class");
        }
        verdicts.insert("class".into(), json!({ "pass": class.passes(), "report": class }));
        let drift = verify_drift(
            &params,
            &spec.division_rate,
            &spec.bounds,
            args.drift_x_max,
            args.drift_points,
        )?;
        if !drift.pass {
            failed.push("drift");
        }
        verdicts.insert("drift".into(), json!({ "pass": drift.pass, "report": drift }));
    }
    let pass = failed.is_empty();
    write_json(&json!({ "pass": pass, "verdicts": verdicts }), &ctx.path("verify.json"))?;
    let run = json!({
        "model": spec,
        "t": args.t,
        "replicates": args.replicates,
        "root_size": args.root_size,
        "tolerance_se": args.tolerance_se,
        "class": [args.lambda, args.r, args.m, args.ell, args.big_l],
        "scheme": args.scheme,
    });
    ctx.manifest("verify", run, json!({ "pass": pass }))?;
    if pass {
        Ok(())
    } else {
        Err(Failure::verification(format!("failed checks: {}", failed.join(", "))))
    }
}

fn pde_check(ctx: &Context, args: &PdeCheckArgs) -> Outcome {
    let rate: DivisionRate = parse::division_rate(&args.b).map_err(Failure::usage)?;
    let fixed_grid = SizeGrid::new(args.fixed_dx, args.fixed_x_max)?;
    let nu = invariant_fixed_point(&rate, args.tau, &fixed_grid, FIXED_POINT_TOL)?;
    let grid = SizeGrid::new(args.pde_dx, args.pde_x_max)?;
    let opts = PdeOptions {
        scheme: args.pde_scheme,
        ..PdeOptions::default()
    };
    let state = solve_conservative_pde(&rate, args.tau, &grid, &uniform_phase_profile(&grid), &opts)?;
    let relation = compare_with_invariant(&rate, &state, &nu, args.lo, args.hi);
    let flux = flux_identity_error(&rate, args.tau, &state, args.lo, args.hi);
    let checks = [
        ("fixed_point_converged", nu.residual < 1e-9),
        ("pde_steady", state.steady),
        ("relation", relation.relative_l2 < args.tolerance),
    ];
    let pass = checks.iter().all(|c| c.1);
    let verdict = json!({
        "pass": pass,
        "checks": checks.iter().map(|(k, v)| (k.to_string(), json!(v))).collect::<serde_json::Map<_, _>>(),
        "fixed_point": { "residual": nu.residual, "iterations": nu.iterations },
        "pde": {
            "time": state.time, "steps": state.steps, "dt": state.dt, "mass": state.mass,
            "min_value": state.min_value, "averaged": state.averaged, "steady": state.steady,
        },
        "relation": relation,
        "flux_identity_error": flux,
    });
    write_json(&verdict, &ctx.path("pde_check.json"))?;
    write_curve(&ctx.path("pde_profile.tsv"), "x\tn", &state.n)?;
    write_curve(&ctx.path("invariant.tsv"), "x\tnu", &nu.nu)?;
    let run = json!({
        "b": rate, "tau": args.tau, "pde_dx": args.pde_dx, "pde_x_max": args.pde_x_max,
        "fixed_dx": args.fixed_dx, "fixed_x_max": args.fixed_x_max, "pde_scheme": args.pde_scheme,
        "window": [args.lo, args.hi], "tolerance": args.tolerance,
    });
    ctx.manifest(
        "pde-check",
        run,
        json!({ "pass": pass, "relative_l2": relation.relative_l2 }),
    )?;
    if pass {
        Ok(())
    } else {
        Err(Failure::verification(format!(
            "relation error {:.3e} (tolerance {}), steady {}",
            relation.relative_l2, args.tolerance, state.steady
        )))
    }
}

fn write_curve(path: &Path, header: &str, curve: &CurveOnGrid) -> Outcome {
    write_lines(
        path,
        header,
        curve
            .xs()
            .zip(&curve.values)
            .map(|(x, v)| format!("{}\t{}", fmt_real(x), fmt_real(*v))),
    )
}

fn ingest(ctx: &Context, args: &IngestArgs) -> Outcome {
    require_file(&args.input)?;
    let config = estimator_config(&args.estimator, &ctx.file)?;
    let mapping = ColumnMapping {
        size_birth: args.size_col.clone(),
        growth_rate: args.growth_col.clone(),
        lifetime: args.lifetime_col.clone(),
        lineage_id: args.lineage_col.clone(),
        drop_first: args.drop_first,
        drop_last: args.drop_last,
    };
    let data = ingest_lineage_csv(&args.input, &mapping)?;
    for r in &data.rejected {
        eprintln!("{}:{}: rejected: {}", args.input.display(), r.line, r.reason);
    }
    let analysis = analyze_experimental(&data.observations, &config, args.scheme, args.pooled_tau)?;
    write_with(&ctx.path("estimate.tsv"), |w| write_estimate_tsv(&analysis.estimate, w))?;
    write_curve(&ctx.path("nu.tsv"), "x\tnu_hat", &analysis.nu)?;
    let report = json!({
        "report": analysis.report,
        "lineages": data.lineages,
        "trimmed": data.trimmed,
        "rejected": data.rejected,
    });
    write_json(&report, &ctx.path("report.json"))?;
    let run = json!({ "input": args.input, "mapping": mapping, "estimator": config, "scheme": args.scheme });
    ctx.manifest(
        "ingest",
        run,
        json!({ "n": data.observations.len(), "rejected": data.rejected.len() }),
    )
}

fn seed(flag: Option<u64>) -> Outcome<u64> {
    match std::env::var(SEED_ENV) {
        Ok(v) => v
            .trim()
            .parse()
            .map_err(|_| Failure::usage(format!("{SEED_ENV}={v:?} is not an unsigned integer"))),
        Err(_) => Ok(flag.unwrap_or(0)),
    }
}

fn run(cli: Cli) -> Outcome {
    let workers = match cli.workers {
        Some(0) => return Err(Failure::usage("--workers must be positive")),
        Some(w) => w,
        None => std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1),
    };
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build_global()
        .map_err(|e| Failure {
            code: 3,
            message: e.to_string(),
        })?;
    let file = match &cli.config {
        Some(path) => {
            require_file(path)?;
            let text = std::fs::read_to_string(path).map_err(|e| Failure::usage(format!("{}: {e}", path.display())))?;
            serde_json::from_str(&text).map_err(|e| Failure::usage(format!("{}: {e}", path.display())))?
        }
        None => FileConfig::default(),
    };
    std::fs::create_dir_all(&cli.out).map_err(|e| Failure {
        code: 3,
        message: format!("{}: {e}", cli.out.display()),
    })?;
    let ctx = Context {
        out: cli.out.clone(),
        seed: seed(cli.seed)?,
        workers,
        timestamp: !cli.no_timestamp,
        file,
    };
    log::debug!("running with {} workers", ctx.workers);
    match &cli.command {
        Command::Simulate(a) => simulate(&ctx, a),
        Command::Estimate(a) => estimate(&ctx, a),
        Command::Study(a) => study(&ctx, a),
        Command::Verify(a) => verify(&ctx, a),
        Command::PdeCheck(a) => pde_check(&ctx, a),
        Command::Ingest(a) => ingest(&ctx, a),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
