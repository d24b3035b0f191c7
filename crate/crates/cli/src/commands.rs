use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{ArgGroup, Args, Parser, Subcommand};
use corecheck::{
    blocking_report, build_gadget, core_check, euclidean_config, euclidean_fixture, instance_bound, search, validate,
    BoundOptions, GadgetParams, Init, Instance, SearchParams, DEFAULT_TOL,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::clustering_spec::parse_clustering;
use crate::format::{self, digest, serialize};
use crate::plot::render_svg;
use crate::report::{num, OutputFormat, RunReport};

/// Environment variable holding the default tolerance.
pub const TOL_ENV: &str = "CORECHECK_TOL";

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAIL: i32 = 1;
pub const EXIT_INPUT: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "corecheck", version, about = "Core-stability checks for max-loss clustering instances")]
struct Cli {
    /// Output style: aligned text, or key=value lines.
    #[arg(long, value_enum, default_value_t = OutputFormat::Human, global = true)]
    format: OutputFormat,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Check the pseudometric axioms of an instance file.
    Validate(ValidateArgs),
    /// Minimum CoreCheck factor over all clusterings of an instance.
    Bound(BoundArgs),
    /// CoreCheck factor and witness for one clustering.
    Check(CheckArgs),
    /// Search planar configurations for a large bound.
    Search(SearchArgs),
    /// Render a planar instance as SVG.
    Plot(PlotArgs),
    /// Write one of the built-in instances.
    #[command(subcommand)]
    Fixture(FixtureCommand),
}

#[derive(Debug, Args)]
struct ValidateArgs {
    path: PathBuf,
    /// Axiom tolerance (default: $CORECHECK_TOL or 1e-9).
    #[arg(long)]
    tol: Option<f64>,
}

#[derive(Debug, Args)]
struct BoundArgs {
    path: PathBuf,
    #[arg(long)]
    tol: Option<f64>,
    /// Worker threads; results do not depend on this.
    #[arg(long, value_name = "N")]
    parallel: Option<usize>,
    /// Also print the witness members and their loss ratios.
    #[arg(long)]
    emit_witness: bool,
    /// Exit 1 unless the bound lies in LO..HI.
    #[arg(long, value_name = "LO..HI", value_parser = parse_range)]
    expect: Option<(f64, f64)>,
}

#[derive(Debug, Args)]
struct CheckArgs {
    path: PathBuf,
    /// Clusters separated by `;`, sites by `,`; `G1*2` takes two copies.
    clustering: String,
    #[arg(long)]
    tol: Option<f64>,
    /// List every coalition blocking at this level.
    #[arg(long, value_name = "ALPHA")]
    blocking: Option<f64>,
}

#[derive(Debug, Args)]
#[command(group(ArgGroup::new("start").required(true).args(["init", "random"])))]
struct SearchArgs {
    /// Start from the points of this instance file.
    #[arg(long, value_name = "PATH")]
    init: Option<PathBuf>,
    /// Start from uniform random free coordinates.
    #[arg(long)]
    random: bool,
    /// Layout (labels, multiplicities, pinned values) for --random; defaults to the planar fixture.
    #[arg(long, value_name = "PATH", requires = "random")]
    layout: Option<PathBuf>,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Nelder-Mead iterations per start.
    #[arg(long, default_value_t = 2000)]
    budget: usize,
    #[arg(long, default_value_t = 5)]
    restarts: usize,
    /// Scale of the Gaussian restart perturbations.
    #[arg(long, default_value_t = 0.05)]
    sigma: f64,
    /// Initial simplex edge.
    #[arg(long, default_value_t = 0.05)]
    step: f64,
    /// Uniform noise of this magnitude added to the initial coordinates.
    #[arg(long, default_value_t = 0.0)]
    jitter: f64,
    /// Box for random coordinates.
    #[arg(long = "box", value_name = "LO..HI", value_parser = parse_range, default_value = "0..1")]
    random_box: (f64, f64),
    /// Exit 1 unless the best bound reaches this value.
    #[arg(long)]
    target: Option<f64>,
    /// Let the far site w move.
    #[arg(long)]
    free_w: bool,
    /// Write the best configuration as an instance file.
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
    /// Write one line per improvement: start, iteration, beta, simplex diameter.
    #[arg(long, value_name = "PATH")]
    log: Option<PathBuf>,
    /// Worker threads for the restarts; results do not depend on this.
    #[arg(long, value_name = "N")]
    parallel: Option<usize>,
}

#[derive(Debug, Args)]
struct PlotArgs {
    path: PathBuf,
    #[arg(long, value_name = "PATH")]
    out: PathBuf,
    /// Clustering to draw; defaults to the bound's minimizer and its witness.
    #[arg(long, value_name = "SPEC")]
    clustering: Option<String>,
}

#[derive(Debug, Subcommand)]
enum FixtureCommand {
    /// The weighted-graph construction for k clusters and n agents.
    Gadget {
        #[arg(long)]
        k: usize,
        #[arg(long)]
        n: usize,
        /// Distance of w and dummy sites from everything else.
        #[arg(long, default_value_t = corecheck::fixtures::DEFAULT_FAR)]
        far: f64,
        #[arg(long, value_name = "PATH")]
        out: Option<PathBuf>,
    },
    /// The nine-agent planar instance.
    Euclid {
        #[arg(long, value_name = "PATH")]
        out: Option<PathBuf>,
    },
}

fn parse_range(s: &str) -> Result<(f64, f64), String> {
    let (lo, hi) = s.split_once("..").ok_or_else(|| format!("expected LO..HI, got `{s}`"))?;
    let lo: f64 = lo.trim().parse().map_err(|e| format!("bad lower bound: {e}"))?;
    let hi: f64 = hi.trim().parse().map_err(|e| format!("bad upper bound: {e}"))?;
    if !(lo <= hi) {
        return Err(format!("empty range {lo}..{hi}"));
    }
    Ok((lo, hi))
}

/// A failed command: message plus exit code.
struct Failure {
    code: i32,
    message: String,
}

fn input_error(e: impl std::fmt::Display) -> Failure {
    Failure { code: EXIT_INPUT, message: e.to_string() }
}

fn semantic_error(e: impl std::fmt::Display) -> Failure {
    Failure { code: EXIT_FAIL, message: e.to_string() }
}

fn default_tol(flag: Option<f64>) -> Result<f64, Failure> {
    if let Some(t) = flag {
        return Ok(t);
    }
    match std::env::var(TOL_ENV) {
        Ok(v) => v.trim().parse().map_err(|_| input_error(format!("{TOL_ENV}={v} is not a number"))),
        Err(_) => Ok(DEFAULT_TOL),
    }
}

fn load(path: &Path) -> Result<Instance, Failure> {
    format::load(path).map(|(inst, _)| inst).map_err(|e| input_error(format!("{}: {e}", path.display())))
}

fn write_file(path: &Path, contents: &str) -> Result<(), Failure> {
    std::fs::write(path, contents).map_err(|e| input_error(format!("cannot write {}: {e}", path.display())))
}

/// Runs `f` on a rayon pool of `workers` threads; `f` is told whether to
/// parallelize.
fn with_workers<T: Send>(workers: Option<usize>, f: impl FnOnce(bool) -> T + Send) -> Result<T, Failure> {
    match workers {
        Some(n) if n > 1 => {
            let pool = rayon::ThreadPoolBuilder::new().num_threads(n).build().map_err(input_error)?;
            Ok(pool.install(|| f(true)))
        }
        _ => Ok(f(false)),
    }
}

/// Parses `args` (including the program name), runs the command and
/// returns the exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let args: Vec<OsString> = args.into_iter().map(Into::into).collect();
    let cli = match Cli::try_parse_from(&args) {
        Ok(cli) => cli,
        Err(e) => {
            let text = e.render().to_string();
            let _ = if e.use_stderr() { err.write_all(text.as_bytes()) } else { out.write_all(text.as_bytes()) };
            return e.exit_code();
        }
    };
    let echo: Vec<String> = args.iter().skip(1).map(|a| a.to_string_lossy().into_owned()).collect();
    let started = Instant::now();
    let mut report = RunReport::new(echo.join(" "));
    let result = match cli.command {
        Command::Validate(a) => cmd_validate(a, &mut report),
        Command::Bound(a) => cmd_bound(a, &mut report),
        Command::Check(a) => cmd_check(a, &mut report),
        Command::Search(a) => cmd_search(a, &mut report, err),
        Command::Plot(a) => cmd_plot(a, &mut report),
        Command::Fixture(f) => return cmd_fixture(f, out, err),
    };
    report.duration = started.elapsed();
    match result {
        Ok(code) => {
            let _ = out.write_all(report.render(cli.format).as_bytes());
            code
        }
        Err(f) => {
            if !report.fields.is_empty() {
                let _ = out.write_all(report.render(cli.format).as_bytes());
            }
            let _ = writeln!(err, "error: {}", f.message);
            f.code
        }
    }
}

fn cmd_validate(a: ValidateArgs, report: &mut RunReport) -> Result<i32, Failure> {
    let tol = default_tol(a.tol)?;
    let inst = load(&a.path)?;
    report.digest = Some(digest(&inst));
    let v = validate(&inst, tol);
    report
        .field("sites", inst.num_sites())
        .field("agents", inst.num_agents())
        .field("k", inst.k())
        .field("tol", num(tol))
        .field("violations", v.violations.len());
    for (i, violation) in v.violations.iter().enumerate() {
        report.field(format!("violation.{i}"), violation.describe(inst.labels()));
    }
    Ok(if v.is_empty() { EXIT_OK } else { EXIT_FAIL })
}

/// Loads an instance and refuses to go on if it breaks the axioms.
fn load_valid(path: &Path, tol: f64, report: &mut RunReport) -> Result<Instance, Failure> {
    let inst = load(path)?;
    report.digest = Some(digest(&inst));
    let v = validate(&inst, tol);
    if !v.is_empty() {
        for (i, violation) in v.violations.iter().enumerate() {
            report.field(format!("violation.{i}"), violation.describe(inst.labels()));
        }
        return Err(semantic_error(format!("instance violates the metric axioms ({} violations)", v.violations.len())));
    }
    Ok(inst)
}

fn witness_fields(report: &mut RunReport, inst: &Instance, members: &[usize], ratios: &[f64]) {
    let names: Vec<String> = members.iter().map(|&a| inst.agent_name(a)).collect();
    report.field("witness.members", names.join(","));
    for (name, r) in names.iter().zip(ratios) {
        report.field(format!("ratio.{name}"), num(*r));
    }
}

fn cmd_bound(a: BoundArgs, report: &mut RunReport) -> Result<i32, Failure> {
    let tol = default_tol(a.tol)?;
    let inst = load_valid(&a.path, tol, report)?;
    let cert = with_workers(a.parallel, |parallel| {
        instance_bound(&inst, &BoundOptions { parallel, ..BoundOptions::default() })
    })?;
    report
        .field("agents", inst.num_agents())
        .field("k", inst.k())
        .field("beta", num(cert.beta))
        .field("argmin", cert.argmin.display(&inst))
        .field("witness", cert.report.witness.describe(&inst))
        .field("clusterings_examined", cert.clusterings_examined)
        .field("partitions_covered", cert.partitions_covered);
    if a.emit_witness {
        witness_fields(report, &inst, &cert.report.members, &cert.report.ratios);
    }
    if let Some((lo, hi)) = a.expect {
        let within = cert.beta >= lo - tol && cert.beta <= hi + tol;
        report.field("expect", format!("{lo}..{hi}")).field("within", within);
        if !within {
            return Ok(EXIT_FAIL);
        }
    }
    Ok(EXIT_OK)
}

fn cmd_check(a: CheckArgs, report: &mut RunReport) -> Result<i32, Failure> {
    let tol = default_tol(a.tol)?;
    let inst = load_valid(&a.path, tol, report)?;
    let c = parse_clustering(&inst, &a.clustering).map_err(semantic_error)?;
    let r = core_check(&c, &inst).map_err(semantic_error)?;
    report
        .field("clustering", c.display(&inst))
        .field("alpha", num(r.alpha))
        .field("witness", r.witness.describe(&inst));
    witness_fields(report, &inst, &r.members, &r.ratios);
    if let Some(alpha) = a.blocking {
        let blocking = blocking_report(&c, &inst, alpha, false);
        report.field("blocking.alpha", num(alpha)).field("blocking.count", blocking.len());
        for (i, s) in blocking.iter().enumerate() {
            report.field(format!("blocking.{i}"), s.describe(&inst));
        }
    }
    Ok(EXIT_OK)
}

fn cmd_search(a: SearchArgs, report: &mut RunReport, err: &mut dyn Write) -> Result<i32, Failure> {
    let (layout, init_coords) = match &a.init {
        Some(path) => {
            let inst = load(path)?;
            let coords = inst.coords().map(<[_]>::to_vec).ok_or_else(|| {
                input_error(format!("{}: search needs a points instance", path.display()))
            })?;
            report.digest = Some(digest(&inst));
            (inst, Some(coords))
        }
        None => {
            let inst = match &a.layout {
                Some(path) => load(path)?,
                None => euclidean_fixture(),
            };
            if inst.coords().is_none() {
                return Err(input_error("the layout must be a points instance"));
            }
            (inst, None)
        }
    };
    let reference = layout.coords().expect("checked above").to_vec();
    let mut params = SearchParams::for_instance(&layout, &reference, a.free_w);
    params.budget = a.budget;
    params.restarts = a.restarts;
    params.sigma = a.sigma;
    params.step = a.step;
    params.seed = a.seed;
    params.random_box = a.random_box;
    let init = match init_coords {
        Some(mut coords) => {
            if a.jitter > 0.0 {
                // a stream of its own so restarts are unaffected
                let mut rng = ChaCha8Rng::seed_from_u64(a.seed);
                rng.set_stream(u64::MAX);
                for v in coords.iter_mut().flatten() {
                    *v += rng.random_range(-a.jitter..=a.jitter);
                }
            }
            Init::Explicit(coords)
        }
        None => Init::Random,
    };
    let _ = writeln!(err, "seed {}", a.seed);
    let outcome = with_workers(a.parallel, |parallel| {
        params.parallel = parallel;
        search(&params, init)
    })?
    .map_err(input_error)?;
    let best = &outcome.best;
    let inst = best.instance(&params);
    report
        .field("seed", a.seed)
        .field("budget", a.budget)
        .field("restarts", a.restarts)
        .field("init_beta", num(outcome.init.beta))
        .field("beta", num(best.beta))
        .field("evaluations", outcome.evaluations)
        .field("argmin", best.certificate.argmin.display(&inst))
        .field("witness", best.certificate.report.witness.describe(&inst));
    for (label, p) in params.labels.iter().zip(&best.coords) {
        let p: Vec<String> = p.iter().map(|v| num(*v)).collect();
        report.field(format!("point.{label}"), p.join(","));
    }
    if let Some(path) = &a.out {
        write_file(path, &serialize(&inst))?;
        report.field("out", path.display());
    }
    if let Some(path) = &a.log {
        let mut text = String::from("# start iteration beta diameter\n");
        for e in &outcome.log {
            text.push_str(&format!("{} {} {} {}\n", e.start, e.iteration, num(e.beta), num(e.diameter)));
        }
        write_file(path, &text)?;
        report.field("log", path.display());
    }
    if let Some(target) = a.target {
        let reached = best.beta >= target;
        report.field("target", num(target)).field("reached", reached);
        if !reached {
            return Ok(EXIT_FAIL);
        }
    }
    Ok(EXIT_OK)
}

fn cmd_plot(a: PlotArgs, report: &mut RunReport) -> Result<i32, Failure> {
    let inst = load(&a.path)?;
    report.digest = Some(digest(&inst));
    if inst.coords().is_none_or(|c| c.iter().any(|p| p.len() != 2)) {
        return Err(input_error(crate::plot::PlotError::NotEuclidean2D));
    }
    let (clustering, witness) = match &a.clustering {
        Some(spec) => {
            let c = parse_clustering(&inst, spec).map_err(semantic_error)?;
            let r = core_check(&c, &inst).map_err(semantic_error)?;
            (c, r.members)
        }
        None => {
            let cert = instance_bound(&inst, &BoundOptions::default());
            (cert.argmin, cert.report.members)
        }
    };
    let svg = render_svg(&inst, Some(&clustering), &witness).map_err(input_error)?;
    write_file(&a.out, &svg)?;
    report
        .field("out", a.out.display())
        .field("sites", inst.num_sites())
        .field("clustering", clustering.display(&inst));
    Ok(EXIT_OK)
}

fn cmd_fixture(f: FixtureCommand, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let (inst, path) = match f {
        FixtureCommand::Gadget { k, n, far, out } => match build_gadget(&GadgetParams::new(k, n).with_far(far)) {
            Ok(inst) => (inst, out),
            Err(e) => {
                let _ = writeln!(err, "error: {e}");
                return EXIT_INPUT;
            }
        },
        FixtureCommand::Euclid { out } => {
            let inst = corecheck::from_points(&euclidean_config()).expect("fixture coordinates are finite");
            (inst, out)
        }
    };
    let text = serialize(&inst);
    match path {
        Some(p) => match std::fs::write(&p, text) {
            Ok(()) => {
                let _ = writeln!(out, "wrote {} (digest {})", p.display(), digest(&inst));
                EXIT_OK
            }
            Err(e) => {
                let _ = writeln!(err, "error: cannot write {}: {e}", p.display());
                EXIT_INPUT
            }
        },
        None => {
            let _ = out.write_all(text.as_bytes());
            EXIT_OK
        }
    }
}
