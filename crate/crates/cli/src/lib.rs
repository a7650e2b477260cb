//! The `gafzeros` command line: argument parsing, config merging and output files.
//!
//! Exit codes: `0` success, `1` numerical or statistical failure, `2` usage
//! or configuration error.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use num_complex::Complex64;

use gafzeros_core::config::{parse_points, ConfigFile};
use gafzeros_core::experiments::{run_zero_count, ExperimentConfig};
use gafzeros_core::gaf::{find_zeros, truncation_order, CountCheck, TruncatedGaf, RESIDUAL_TOL};
use gafzeros_core::intensity::{bergman_determinant, joint_intensity_numeric, MAX_PERMANENT};
use gafzeros_core::kernels::KernelEval;
use gafzeros_core::output::header_line;
use gafzeros_core::sampling::{draws_to_csv, CoefficientSampler};
use gafzeros_core::verify::{format_table, run_suite, Suite, VerifyOptions, FGN_SERIES_ORDER};
use gafzeros_core::{CovarianceMode, Error, ModelSpec};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

/// Environment variable capping the number of worker threads.
pub const THREADS_ENV: &str = "GAFZEROS_THREADS";

#[derive(Parser, Debug)]
#[command(name = "gafzeros", version, about = "Zeros of Gaussian analytic functions with Toeplitz-structured coefficients")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Write coefficient vectors as CSV.
    Sample(ModelArgs),
    /// Find the zeros of one sampled function in |z| ≤ r.
    Zeros(ModelArgs),
    /// Compare joint intensities at given points with the Bergman determinant.
    Intensity(ModelArgs),
    /// Run identity checks and print a PASS/FAIL table.
    Verify(VerifyArgs),
    /// Monte Carlo zero counts in annuli against the expected counts.
    Experiment(ModelArgs),
}

#[derive(Args, Debug, Default)]
struct ModelArgs {
    /// Flat `key = value` file; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    /// iid | tridiag | kms | fgn | fgn0
    #[arg(long)]
    model: Option<String>,
    /// Model parameter; `re,im` for complex KMS parameters.
    #[arg(long, allow_hyphen_values = true)]
    q: Option<String>,
    /// Hurst index for fgn.
    #[arg(long)]
    h: Option<f64>,
    /// inverse | direct
    #[arg(long)]
    mode: Option<String>,
    /// Truncation order (number of coefficients).
    #[arg(long = "n", alias = "N")]
    n: Option<usize>,
    /// Working radius.
    #[arg(long)]
    r: Option<f64>,
    /// Tail tolerance used to choose the truncation order.
    #[arg(long)]
    eps: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    replicates: Option<usize>,
    /// Annulus edges, comma separated.
    #[arg(long, allow_hyphen_values = true)]
    edges: Option<String>,
    /// Points as `re,im` pairs.
    #[arg(long, num_args = 1, action = clap::ArgAction::Append, allow_hyphen_values = true)]
    points: Vec<String>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    svg: Option<PathBuf>,
    #[arg(long)]
    manifest: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct VerifyArgs {
    /// kernels | schur | orthopoly | intensity | spectral | toeplitz | all
    #[arg(long, default_value = "all")]
    suite: String,
    #[arg(long, hide = true, default_value_t = 0.0, allow_hyphen_values = true)]
    perturb_psi: f64,
}

enum Failure {
    Usage(String),
    Numerical(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Config(m) => Failure::Usage(m),
            other => Failure::Numerical(other.to_string()),
        }
    }
}

type CliResult<T> = std::result::Result<T, Failure>;

impl ModelArgs {
    /// The config file (if any) with every given flag written over it.
    fn merged(&self) -> CliResult<ConfigFile> {
        let mut cfg = match &self.config {
            Some(p) => ConfigFile::load(p).map_err(|e| match e {
                Error::Io(io) => Failure::Usage(format!("cannot read {}: {io}", p.display())),
                other => other.into(),
            })?,
            None => ConfigFile::default(),
        };
        let mut set = |k: &str, v: Option<String>| -> CliResult<()> {
            if let Some(v) = v {
                cfg.set(k, v)?;
            }
            Ok(())
        };
        set("model", self.model.clone())?;
        set("q", self.q.clone())?;
        set("h", self.h.map(|v| v.to_string()))?;
        set("mode", self.mode.clone())?;
        set("n", self.n.map(|v| v.to_string()))?;
        set("r", self.r.map(|v| v.to_string()))?;
        set("eps", self.eps.map(|v| v.to_string()))?;
        set("seed", self.seed.map(|v| v.to_string()))?;
        set("replicates", self.replicates.map(|v| v.to_string()))?;
        set("edges", self.edges.clone())?;
        set("points", (!self.points.is_empty()).then(|| self.points.join(" ")))?;
        set("out", self.out.as_ref().map(|p| p.display().to_string()))?;
        set("svg", self.svg.as_ref().map(|p| p.display().to_string()))?;
        set("manifest", self.manifest.as_ref().map(|p| p.display().to_string()))?;
        Ok(cfg)
    }
}

/// Values shared by the single-function subcommands.
struct Resolved {
    spec: ModelSpec,
    mode: CovarianceMode,
    r: f64,
    eps: f64,
    seed: u64,
    cfg: ConfigFile,
}

impl Resolved {
    fn new(args: &ModelArgs) -> CliResult<Self> {
        let cfg = args.merged()?;
        let (spec, mode) = cfg.model()?;
        let r = cfg.parsed("r")?.unwrap_or(0.6);
        if !(r > 0.0 && r < 1.0) {
            return Err(Failure::Usage(format!("--r must lie in (0, 1), got {r}")));
        }
        let eps = cfg.parsed("eps")?.unwrap_or(1e-12);
        let seed = cfg.parsed("seed")?.unwrap_or(0);
        Ok(Resolved { spec, mode, r, eps, seed, cfg })
    }

    fn truncation(&self) -> CliResult<usize> {
        match self.cfg.parsed::<usize>("n")? {
            Some(n) if n >= 1 => Ok(n),
            Some(n) => Err(Failure::Usage(format!("--n must be positive, got {n}"))),
            None => Ok(truncation_order(&self.spec, self.mode, self.r, self.eps)?),
        }
    }

    fn path(&self, key: &str) -> Option<PathBuf> {
        self.cfg.get(key).map(PathBuf::from)
    }
}

fn write_file(path: &Path, contents: &str) -> CliResult<()> {
    std::fs::write(path, contents).map_err(|e| Failure::Numerical(format!("cannot write {}: {e}", path.display())))
}

/// Writes to `path` when given, otherwise to `stdout`.
fn emit(path: Option<&Path>, contents: &str, stdout: &mut (dyn Write + Send)) -> CliResult<()> {
    match path {
        Some(p) => write_file(p, contents),
        None => stdout.write_all(contents.as_bytes()).map_err(|e| Failure::Numerical(format!("cannot write output: {e}"))),
    }
}

/// An SVG document whose first line is the header, as an XML comment.
pub fn svg_with_header(header: &str, svg: &str) -> String {
    format!("<!-- {} -->\n{svg}", header.replace("--", "- -"))
}

fn cmd_sample(args: &ModelArgs, stdout: &mut (dyn Write + Send)) -> CliResult<()> {
    let res = Resolved::new(args)?;
    let n = res.truncation()?;
    let replicates: usize = res.cfg.parsed("replicates")?.unwrap_or(1);
    let sampler = CoefficientSampler::new(res.spec, res.mode, n)?;
    let draws: Vec<_> = (0..replicates as u64).map(|rep| sampler.draw(res.seed, rep)).collect();
    let header = header_line(
        "sample",
        &[
            ("model", res.spec.to_string()),
            ("mode", res.mode.to_string()),
            ("N", n.to_string()),
            ("seed", res.seed.to_string()),
            ("replicates", replicates.to_string()),
        ],
    );
    emit(res.path("out").as_deref(), &draws_to_csv(&draws, &header), stdout)
}

fn cmd_zeros(args: &ModelArgs, stdout: &mut (dyn Write + Send), stderr: &mut (dyn Write + Send)) -> CliResult<()> {
    let res = Resolved::new(args)?;
    let n = res.truncation()?;
    let draw = CoefficientSampler::new(res.spec, res.mode, n)?.draw(res.seed, 0);
    let zs = find_zeros(&TruncatedGaf::new(draw.values)?, res.r)?;
    let header = header_line(
        "zeros",
        &[
            ("model", res.spec.to_string()),
            ("mode", res.mode.to_string()),
            ("N", n.to_string()),
            ("r", res.r.to_string()),
            ("seed", res.seed.to_string()),
        ],
    );
    emit(res.path("out").as_deref(), &zs.to_csv(&header), stdout)?;
    if let Some(p) = res.path("svg") {
        write_file(&p, &svg_with_header(&header, &zs.to_svg(&format!("zeros of {} ({}), seed {}", res.spec, res.mode, res.seed))))?;
    }
    let check = match zs.count_check {
        CountCheck::Matched(k) => format!("argument principle agrees ({k})"),
        CountCheck::Mismatch { listed, contour } => format!("FLAGGED: {listed} zeros listed, argument principle gives {contour}"),
        CountCheck::Skipped { clearance } => format!("argument principle skipped, a root lies {clearance:.1e} from |z| = r"),
    };
    let _ = writeln!(stderr, "{} zeros in |z| ≤ {}; {check}", zs.count(), res.r);
    let rel = zs.max_relative_residual();
    if !(rel < RESIDUAL_TOL) {
        return Err(Failure::Numerical(format!("relative residual {rel:.3e} exceeds {RESIDUAL_TOL:e}")));
    }
    Ok(())
}

fn cmd_intensity(args: &ModelArgs, stdout: &mut (dyn Write + Send)) -> CliResult<()> {
    let res = Resolved::new(args)?;
    let points: Vec<Complex64> = match res.cfg.get("points") {
        Some(p) => parse_points(p)?,
        None => return Err(Failure::Usage("intensity needs --points re,im [re,im ...]".into())),
    };
    if points.is_empty() {
        return Err(Failure::Usage("intensity needs at least one point".into()));
    }
    if points.len() > MAX_PERMANENT {
        return Err(Failure::Usage(format!("at most {MAX_PERMANENT} points are supported")));
    }
    let n_series = res.cfg.parsed("n")?.unwrap_or(FGN_SERIES_ORDER);
    let k = KernelEval::new(res.spec, res.mode, n_series)?;
    let mut params = vec![("model", res.spec.to_string()), ("mode", res.mode.to_string())];
    if let Some(n) = k.truncation() {
        params.push(("N", n.to_string()));
    }
    params.push(("points", res.cfg.get("points").unwrap_or("").replace(' ', ";")));
    let mut s = header_line("intensity", &params);
    s.push_str("\nn,points,numeric,bergman,rel_error\n");
    let mut tuples: Vec<Vec<Complex64>> = points.iter().map(|&z| vec![z]).collect();
    if points.len() > 1 {
        tuples.push(points.clone());
    }
    for t in &tuples {
        let numeric = joint_intensity_numeric(&k, t)?;
        let bergman = bergman_determinant(t);
        let label: Vec<String> = t.iter().map(|z| format!("{},{}", z.re, z.im)).collect();
        s.push_str(&format!(
            "{},\"{}\",{:.16e},{:.16e},{:.3e}\n",
            t.len(),
            label.join(" "),
            numeric,
            bergman,
            (numeric - bergman).abs() / bergman.abs()
        ));
    }
    emit(res.path("out").as_deref(), &s, stdout)
}

fn cmd_experiment(args: &ModelArgs, stdout: &mut (dyn Write + Send), stderr: &mut (dyn Write + Send)) -> CliResult<()> {
    let cfg = args.merged()?;
    let config = ExperimentConfig::from_config(&cfg)?;
    let report = run_zero_count(&config)?;
    emit(config.out.as_deref(), &report.to_csv(), stdout)?;
    if let Some(p) = &config.svg {
        let header = header_line("experiment-svg", &config.params(report.truncation));
        write_file(p, &svg_with_header(&header, &report.to_svg()))?;
    }
    let manifest = config.manifest.clone().or_else(|| config.out.as_ref().map(|o| o.with_extension("manifest")));
    match manifest {
        Some(p) => write_file(&p, &report.manifest())?,
        None => {
            let _ = stderr.write_all(report.manifest().as_bytes());
        }
    }
    if report.count_mismatched > 0 {
        let _ = writeln!(stderr, "{} replicates flagged by the argument-principle check", report.count_mismatched);
    }
    Ok(())
}

fn cmd_verify(args: &VerifyArgs, stdout: &mut (dyn Write + Send)) -> CliResult<bool> {
    let suite: Suite = args.suite.parse()?;
    let outcomes = run_suite(suite, &VerifyOptions { psi_perturbation: args.perturb_psi });
    let _ = stdout.write_all(format_table(&outcomes).as_bytes());
    Ok(outcomes.iter().all(|o| o.passed))
}

fn thread_pool() -> std::result::Result<rayon::ThreadPool, String> {
    let mut b = rayon::ThreadPoolBuilder::new();
    if let Ok(v) = std::env::var(THREADS_ENV) {
        let n: usize = v.trim().parse().ok().filter(|&n| n > 0).ok_or_else(|| format!("{THREADS_ENV} must be a positive integer, got `{v}`"))?;
        b = b.num_threads(n);
    }
    b.build().map_err(|e| format!("cannot start worker threads: {e}"))
}

fn looks_like_point(s: &str) -> bool {
    let body = s.strip_prefix('-').unwrap_or(s);
    body.starts_with(|c: char| c.is_ascii_digit() || c == '.')
}

/// Rewrites `--points a b c` as `--points=a --points=b --points=c`, so that
/// points with a negative real part are read as values and the list ends at
/// the next flag.
fn split_point_lists(args: Vec<OsString>) -> Vec<OsString> {
    let mut out = Vec::with_capacity(args.len());
    let mut in_points = false;
    for a in args {
        let text = a.to_str().map(str::to_owned);
        match text.as_deref() {
            Some("--points") => in_points = true,
            Some(t) if in_points && looks_like_point(t) => out.push(OsString::from(format!("--points={t}"))),
            _ => {
                in_points = false;
                out.push(a);
            }
        }
    }
    out
}

/// Parses `args` (including the program name) and runs the command. Returns the exit code.
pub fn run<I, T>(args: I, stdout: &mut (dyn Write + Send), stderr: &mut (dyn Write + Send)) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let args = split_point_lists(args.into_iter().map(Into::into).collect());
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if e.use_stderr() { stderr.write_all(text.as_bytes()) } else { stdout.write_all(text.as_bytes()) };
            return code;
        }
    };
    let pool = match thread_pool() {
        Ok(p) => p,
        Err(m) => {
            let _ = writeln!(stderr, "error: {m}");
            return EXIT_USAGE;
        }
    };
    let result = pool.install(|| match &cli.command {
        Command::Sample(a) => cmd_sample(a, stdout).map(|_| true),
        Command::Zeros(a) => cmd_zeros(a, stdout, stderr).map(|_| true),
        Command::Intensity(a) => cmd_intensity(a, stdout).map(|_| true),
        Command::Experiment(a) => cmd_experiment(a, stdout, stderr).map(|_| true),
        Command::Verify(a) => cmd_verify(a, stdout),
    });
    match result {
        Ok(true) => EXIT_OK,
        Ok(false) => EXIT_FAILURE,
        Err(Failure::Usage(m)) => {
            let _ = writeln!(stderr, "error: {m}\n\nRun `gafzeros --help` for usage.");
            EXIT_USAGE
        }
        Err(Failure::Numerical(m)) => {
            let _ = writeln!(stderr, "error: {m}");
            EXIT_FAILURE
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run_str(args: &[&str]) -> (i32, String, String) {
        let (mut out, mut err) = (Vec::new(), Vec::new());
        let code = run(std::iter::once("gafzeros").chain(args.iter().copied()), &mut out, &mut err);
        (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
    }

    #[test]
    fn negative_parameters_parse() {
        let (code, out, err) = run_str(&["zeros", "--model", "tridiag", "--q", "-0.3333333", "--r", "0.6", "--seed", "7"]);
        assert_eq!(code, 0, "{err}");
        assert!(out.starts_with("# gafzeros "));
        assert!(out.lines().nth(1) == Some("re,im,residual"));
    }

    #[test]
    fn usage_errors_exit_two() {
        assert_eq!(run_str(&["zeros"]).0, EXIT_USAGE);
        assert_eq!(run_str(&["zeros", "--model", "brownian"]).0, EXIT_USAGE);
        assert_eq!(run_str(&["zeros", "--model", "tridiag", "--q", "0.7"]).0, EXIT_USAGE);
        assert_eq!(run_str(&["frobnicate"]).0, EXIT_USAGE);
        assert_eq!(run_str(&["verify", "--suite", "everything"]).0, EXIT_USAGE);
        assert_eq!(run_str(&["intensity", "--model", "iid"]).0, EXIT_USAGE);
        assert_eq!(run_str(&["experiment", "--model", "iid", "--replicates", "5"]).0, EXIT_USAGE);
        assert_eq!(run_str(&["--help"]).0, EXIT_OK);
    }

    #[test]
    fn intensity_table_for_kms() {
        let (code, out, err) = run_str(&["intensity", "--model", "kms", "--q", "0.5", "--points", "0.2,0", "-0.1,0.3"]);
        assert_eq!(code, 0, "{err}");
        let lines: Vec<&str> = out.lines().collect();
        assert_eq!(lines[1], "n,points,numeric,bergman,rel_error");
        assert_eq!(lines.len(), 2 + 3);
        for l in &lines[2..] {
            let rel: f64 = l.rsplit(',').next().unwrap().parse().unwrap();
            assert!(rel < 1e-6, "{l}");
        }
    }

    #[test]
    fn flags_override_config_file() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = dir.path().join("run.cfg");
        std::fs::write(&cfg, "model = kms\nq = 0.5\nseed = 1\n").unwrap();
        let c = cfg.to_str().unwrap();
        let (_, a, _) = run_str(&["sample", "--config", c, "--n", "4"]);
        let (_, b, _) = run_str(&["sample", "--config", c, "--n", "4", "--seed", "2"]);
        let (_, d, _) = run_str(&["sample", "--model", "kms", "--q", "0.5", "--seed", "2", "--N", "4"]);
        assert_ne!(a, b);
        assert_eq!(b, d);
        assert!(b.lines().next().unwrap().contains("seed=2"));
        std::fs::write(&cfg, "model = kms\ncolour = red\n").unwrap();
        assert_eq!(run_str(&["sample", "--config", c]).0, EXIT_USAGE);
    }

    #[test]
    fn point_lists_end_at_the_next_flag() {
        let args: Vec<OsString> = ["x", "--points", "0.2,0", "-0.1,0.3", "--out", "f", "--points", "-.5,0"].map(OsString::from).to_vec();
        let got: Vec<String> = split_point_lists(args).into_iter().map(|a| a.into_string().unwrap()).collect();
        assert_eq!(got, ["x", "--points=0.2,0", "--points=-0.1,0.3", "--out", "f", "--points=-.5,0"]);
        let (code, _, err) = run_str(&["intensity", "--model", "iid", "--points", "0.1,0", "--points", "-0.2,0.1", "--n", "40"]);
        assert_eq!(code, 0, "{err}");
        assert_eq!(run_str(&["intensity", "--model", "iid", "--points"]).0, EXIT_USAGE);
    }

    #[test]
    fn svg_header_is_a_comment() {
        let s = svg_with_header("# gafzeros x --y", "<svg></svg>\n");
        assert!(s.starts_with("<!-- # gafzeros x - -y -->\n<svg"));
    }
}
