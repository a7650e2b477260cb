//! Monte Carlo harness: zero counts of sampled GAFs in annuli, compared with
//! the expected counts of the model.

use std::fmt::Write as _;
use std::path::PathBuf;
use std::time::{Duration, Instant};

use num_complex::Complex64;
use rayon::prelude::*;

use crate::config::{parse_reals, ConfigFile};
use crate::error::{Error, Result};
use crate::gaf::{
    count_points_in_annuli, find_zeros, truncation_discrepancy, truncation_order, CountCheck, TruncatedGaf, RESIDUAL_TOL,
};
use crate::intensity::expected_count_annulus;
use crate::model::{CovarianceMode, ModelSpec};
use crate::output::{fmt_f64, header_line, svg_scatter};
use crate::sampling::CoefficientSampler;

/// Largest working radius accepted by the harness.
pub const MAX_RADIUS: f64 = 0.9;
/// Smallest replicate count accepted by the harness.
pub const MIN_REPLICATES: usize = 100;
/// Largest tolerated fraction of failed replicates.
pub const MAX_EXCLUDED_FRACTION: f64 = 0.01;

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub spec: ModelSpec,
    pub mode: CovarianceMode,
    pub r: f64,
    /// Tail tolerance used to choose the truncation order.
    pub eps: f64,
    pub replicates: usize,
    pub seed: u64,
    /// Annulus edges, strictly increasing within `[0, r]`.
    pub edges: Vec<f64>,
    /// Fixed truncation order; chosen from `eps` when absent.
    pub truncation: Option<usize>,
    /// Number of leading replicates whose zeros are kept for plotting.
    pub svg_replicates: usize,
    pub out: Option<PathBuf>,
    pub svg: Option<PathBuf>,
    pub manifest: Option<PathBuf>,
}

impl ExperimentConfig {
    /// Defaults: inverse mode, `r = 0.6`, `ε = 1e-12`, 2000 replicates,
    /// seed 0, six equal-width annuli.
    pub fn new(spec: ModelSpec) -> Self {
        let r = 0.6;
        ExperimentConfig {
            spec,
            mode: CovarianceMode::Inverse,
            r,
            eps: 1e-12,
            replicates: 2000,
            seed: 0,
            edges: equal_edges(r, 6),
            truncation: None,
            svg_replicates: 4,
            out: None,
            svg: None,
            manifest: None,
        }
    }

    pub fn from_config(cfg: &ConfigFile) -> Result<Self> {
        let (spec, mode) = cfg.model()?;
        let mut c = ExperimentConfig::new(spec);
        c.mode = mode;
        if let Some(r) = cfg.parsed("r")? {
            c.r = r;
            c.edges = equal_edges(r, 6);
        }
        if let Some(e) = cfg.parsed("eps")? {
            c.eps = e;
        }
        if let Some(m) = cfg.parsed("replicates")? {
            c.replicates = m;
        }
        if let Some(s) = cfg.parsed("seed")? {
            c.seed = s;
        }
        if let Some(n) = cfg.parsed("n")? {
            c.truncation = Some(n);
        }
        if let Some(k) = cfg.parsed("svg_replicates")? {
            c.svg_replicates = k;
        }
        if let Some(e) = cfg.get("edges") {
            c.edges = parse_reals(e)?;
        }
        c.out = cfg.get("out").map(PathBuf::from);
        c.svg = cfg.get("svg").map(PathBuf::from);
        c.manifest = cfg.get("manifest").map(PathBuf::from);
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        self.spec.validate()?;
        let bad = |m: String| Err(Error::Config(m));
        if !(self.r > 0.0 && self.r <= MAX_RADIUS) {
            return bad(format!("working radius must satisfy 0 < r ≤ {MAX_RADIUS}, got {}", self.r));
        }
        if self.replicates < MIN_REPLICATES {
            return bad(format!("need at least {MIN_REPLICATES} replicates, got {}", self.replicates));
        }
        if !(self.eps > 0.0) {
            return bad(format!("truncation tolerance must be positive, got {}", self.eps));
        }
        if self.edges.len() < 2 {
            return bad("need at least two annulus edges".into());
        }
        if self.edges.windows(2).any(|w| !(w[0] < w[1])) {
            return bad("annulus edges must be strictly increasing".into());
        }
        if self.edges[0] < 0.0 || *self.edges.last().unwrap() > self.r {
            return bad(format!("annulus edges must lie within [0, {}]", self.r));
        }
        if self.truncation == Some(0) || self.truncation == Some(1) {
            return bad("truncation order must be at least 2".into());
        }
        Ok(())
    }

    /// Parameters echoed in output headers (no paths, no timing).
    pub fn params(&self, truncation: usize) -> Vec<(&'static str, String)> {
        let edges: Vec<String> = self.edges.iter().map(|e| e.to_string()).collect();
        vec![
            ("model", self.spec.to_string()),
            ("mode", self.mode.to_string()),
            ("r", self.r.to_string()),
            ("eps", format!("{:e}", self.eps)),
            ("N", truncation.to_string()),
            ("replicates", self.replicates.to_string()),
            ("seed", self.seed.to_string()),
            ("edges", edges.join(",")),
        ]
    }
}

/// `k + 1` equally spaced edges on `[0, r]`.
pub fn equal_edges(r: f64, k: usize) -> Vec<f64> {
    (0..=k).map(|i| r * i as f64 / k as f64).collect()
}

/// What one replicate contributes to the report.
#[derive(Clone, Debug, PartialEq)]
pub struct ReplicateOutcome {
    pub counts: Vec<usize>,
    pub total: usize,
    pub count_check: CountCheck,
    pub max_relative_residual: f64,
    pub merged: usize,
    pub zeros: Vec<Complex64>,
}

impl ReplicateOutcome {
    /// Outcome for a given list of zeros inside `|z| ≤ r`.
    pub fn from_points(points: &[Complex64], edges: &[f64]) -> Self {
        ReplicateOutcome {
            counts: count_points_in_annuli(points.iter().map(|z| (z.norm(), 1)), edges),
            total: points.len(),
            count_check: CountCheck::Matched(points.len()),
            max_relative_residual: 0.0,
            merged: 0,
            zeros: points.to_vec(),
        }
    }
}

fn run_replicate(sampler: &CoefficientSampler, config: &ExperimentConfig, replicate: u64) -> Result<ReplicateOutcome> {
    let draw = sampler.draw(config.seed, replicate);
    let gaf = TruncatedGaf::new(draw.values)?;
    let zs = find_zeros(&gaf, config.r)?;
    let rel = zs.max_relative_residual();
    if !(rel < RESIDUAL_TOL) {
        return Err(Error::NoConvergence { iterations: zs.sweeps, max_correction: rel });
    }
    let mut zeros = Vec::with_capacity(zs.count());
    for z in &zs.zeros {
        zeros.extend(std::iter::repeat_n(z.z, z.multiplicity));
    }
    Ok(ReplicateOutcome {
        counts: count_points_in_annuli(zs.zeros.iter().map(|z| (z.z.norm(), z.multiplicity)), &config.edges),
        total: zs.count(),
        count_check: zs.count_check,
        max_relative_residual: rel,
        merged: zs.merged,
        zeros,
    })
}

/// Empirical and expected count for one annulus.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AnnulusRow {
    pub lo: f64,
    pub hi: f64,
    pub emp_mean: f64,
    pub emp_se: f64,
    pub samples: usize,
    pub analytic: f64,
    pub zscore: f64,
}

impl AnnulusRow {
    fn from_counts(lo: f64, hi: f64, counts: &[f64], analytic: f64) -> Self {
        let m = counts.len();
        let (mean, se) = if m == 0 {
            (0.0, f64::INFINITY)
        } else {
            let mean = counts.iter().sum::<f64>() / m as f64;
            let var = if m > 1 { counts.iter().map(|c| (c - mean) * (c - mean)).sum::<f64>() / (m - 1) as f64 } else { f64::INFINITY };
            (mean, (var / m as f64).sqrt())
        };
        let zscore = if se > 0.0 {
            (mean - analytic) / se
        } else if mean == analytic {
            0.0
        } else {
            f64::INFINITY
        };
        AnnulusRow { lo, hi, emp_mean: mean, emp_se: se, samples: m, analytic, zscore }
    }

    /// `|zscore| < k`.
    pub fn within(&self, k: f64) -> bool {
        self.zscore.abs() < k
    }
}

#[derive(Clone, Debug)]
pub struct ExperimentReport {
    pub config: ExperimentConfig,
    pub truncation: usize,
    pub rows: Vec<AnnulusRow>,
    /// The whole disc `|z| ≤ r`.
    pub total: AnnulusRow,
    pub used: usize,
    pub excluded: usize,
    pub count_matched: usize,
    pub count_mismatched: usize,
    pub count_skipped: usize,
    pub max_relative_residual: f64,
    pub merged: usize,
    pub runtime: Duration,
    /// Zeros of the first `svg_replicates` successful replicates.
    pub sample_zeros: Vec<Vec<Complex64>>,
}

/// Aggregates replicate outcomes in replicate order. `analytic` holds the
/// expected count per annulus, `analytic_total` the one for `|z| ≤ r`.
pub fn summarize(
    config: &ExperimentConfig,
    truncation: usize,
    outcomes: &[Result<ReplicateOutcome>],
    analytic: &[f64],
    analytic_total: f64,
    runtime: Duration,
) -> ExperimentReport {
    let ok: Vec<&ReplicateOutcome> = outcomes.iter().filter_map(|o| o.as_ref().ok()).collect();
    let bins = config.edges.len() - 1;
    let rows = (0..bins)
        .map(|i| {
            let counts: Vec<f64> = ok.iter().map(|o| o.counts[i] as f64).collect();
            AnnulusRow::from_counts(config.edges[i], config.edges[i + 1], &counts, analytic[i])
        })
        .collect();
    let totals: Vec<f64> = ok.iter().map(|o| o.total as f64).collect();
    let total = AnnulusRow::from_counts(0.0, config.r, &totals, analytic_total);
    let mut report = ExperimentReport {
        config: config.clone(),
        truncation,
        rows,
        total,
        used: ok.len(),
        excluded: outcomes.len() - ok.len(),
        count_matched: 0,
        count_mismatched: 0,
        count_skipped: 0,
        max_relative_residual: 0.0,
        merged: 0,
        runtime,
        sample_zeros: ok.iter().take(config.svg_replicates).map(|o| o.zeros.clone()).collect(),
    };
    for o in &ok {
        match o.count_check {
            CountCheck::Matched(_) => report.count_matched += 1,
            CountCheck::Mismatch { .. } => report.count_mismatched += 1,
            CountCheck::Skipped { .. } => report.count_skipped += 1,
        }
        report.max_relative_residual = report.max_relative_residual.max(o.max_relative_residual);
        report.merged += o.merged;
    }
    report
}

/// Runs `config.replicates` independent replicates in parallel; replicate
/// `i` uses random stream `(seed, i)`, and results are reduced in replicate
/// order, so the report does not depend on the number of threads.
pub fn run_zero_count(config: &ExperimentConfig) -> Result<ExperimentReport> {
    config.validate()?;
    let start = Instant::now();
    let n = match config.truncation {
        Some(n) => n,
        None => truncation_order(&config.spec, config.mode, config.r, config.eps)?,
    };
    let sampler = CoefficientSampler::new(config.spec, config.mode, n)?;
    let outcomes: Vec<Result<ReplicateOutcome>> = (0..config.replicates as u64)
        .into_par_iter()
        .map(|rep| run_replicate(&sampler, config, rep))
        .collect();
    let analytic: Vec<f64> = config
        .edges
        .windows(2)
        .map(|w| expected_count_annulus(&config.spec, config.mode, w[0], w[1], n))
        .collect::<Result<_>>()?;
    let analytic_total = expected_count_annulus(&config.spec, config.mode, 0.0, config.r, n)?;
    let report = summarize(config, n, &outcomes, &analytic, analytic_total, start.elapsed());
    if report.excluded as f64 > MAX_EXCLUDED_FRACTION * config.replicates as f64 {
        return Err(Error::TooManyExclusions { excluded: report.excluded, total: config.replicates });
    }
    Ok(report)
}

impl ExperimentReport {
    /// Report CSV: header line, then `annulus_lo,annulus_hi,emp_mean,emp_se,analytic,zscore`
    /// per annulus and a final row for the whole disc.
    pub fn to_csv(&self) -> String {
        let mut s = header_line("experiment", &self.config.params(self.truncation));
        s.push('\n');
        s.push_str("annulus_lo,annulus_hi,emp_mean,emp_se,analytic,zscore\n");
        for row in self.rows.iter().chain(std::iter::once(&self.total)) {
            let _ = writeln!(
                s,
                "{},{},{},{},{},{}",
                fmt_f64(row.lo),
                fmt_f64(row.hi),
                fmt_f64(row.emp_mean),
                fmt_f64(row.emp_se),
                fmt_f64(row.analytic),
                fmt_f64(row.zscore)
            );
        }
        s
    }

    /// Run manifest: configuration, versions, diagnostics and timing.
    pub fn manifest(&self) -> String {
        let mut s = header_line("experiment-manifest", &[]);
        s.push('\n');
        for (k, v) in self.config.params(self.truncation) {
            let _ = writeln!(s, "{k} = {v}");
        }
        let _ = writeln!(s, "version = {}", crate::VERSION);
        let _ = writeln!(s, "replicates_used = {}", self.used);
        let _ = writeln!(s, "replicates_excluded = {}", self.excluded);
        let _ = writeln!(s, "argument_principle_matched = {}", self.count_matched);
        let _ = writeln!(s, "argument_principle_mismatched = {}", self.count_mismatched);
        let _ = writeln!(s, "argument_principle_skipped = {}", self.count_skipped);
        let _ = writeln!(s, "max_relative_residual = {:e}", self.max_relative_residual);
        let _ = writeln!(s, "merged_roots = {}", self.merged);
        let _ = writeln!(s, "total_mean = {}", fmt_f64(self.total.emp_mean));
        let _ = writeln!(s, "total_se = {}", fmt_f64(self.total.emp_se));
        let _ = writeln!(s, "total_analytic = {}", fmt_f64(self.total.analytic));
        let _ = writeln!(s, "total_zscore = {}", fmt_f64(self.total.zscore));
        let _ = writeln!(s, "runtime_seconds = {:.3}", self.runtime.as_secs_f64());
        s
    }

    pub fn to_svg(&self) -> String {
        let pts: Vec<Complex64> = self.sample_zeros.iter().flatten().copied().collect();
        let title = format!("zeros of {} replicates, {} {}", self.sample_zeros.len(), self.config.spec, self.config.mode);
        svg_scatter(&pts, Some(self.config.r), &title)
    }

    /// Fraction of replicates whose argument-principle count matched the zero list.
    pub fn matched_fraction(&self) -> f64 {
        if self.used == 0 {
            0.0
        } else {
            self.count_matched as f64 / self.used as f64
        }
    }
}

/// Empirical and expected intensity averaged over one annulus.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RadialIntensityRow {
    pub lo: f64,
    pub hi: f64,
    pub empirical: f64,
    pub empirical_se: f64,
    pub analytic: f64,
    /// `empirical / analytic`.
    pub ratio: f64,
    pub zscore: f64,
}

/// Count per unit area in each annulus next to the average expected intensity there.
pub fn empirical_radial_intensity(report: &ExperimentReport) -> Vec<RadialIntensityRow> {
    report
        .rows
        .iter()
        .map(|row| {
            let area = std::f64::consts::PI * (row.hi * row.hi - row.lo * row.lo);
            RadialIntensityRow {
                lo: row.lo,
                hi: row.hi,
                empirical: row.emp_mean / area,
                empirical_se: row.emp_se / area,
                analytic: row.analytic / area,
                ratio: row.emp_mean / row.analytic,
                zscore: row.zscore,
            }
        })
        .collect()
}

/// Distances between zero sets at truncation orders `N` and `2N`, one per
/// seed (replicate stream 0), with `N` from the tail tolerance `eps`.
#[derive(Clone, Debug)]
pub struct StabilityReport {
    pub n: usize,
    pub distances: Vec<f64>,
}

impl StabilityReport {
    pub fn max(&self) -> f64 {
        self.distances.iter().copied().fold(0.0, f64::max)
    }
}

pub fn truncation_stability(
    spec: &ModelSpec,
    mode: CovarianceMode,
    r: f64,
    eps: f64,
    seeds: std::ops::Range<u64>,
) -> Result<StabilityReport> {
    let n = truncation_order(spec, mode, r, eps)?;
    let short = CoefficientSampler::new(*spec, mode, n)?;
    let long = CoefficientSampler::new(*spec, mode, 2 * n)?;
    let distances = seeds
        .into_par_iter()
        .map(|seed| {
            let a = find_zeros(&TruncatedGaf::new(short.draw(seed, 0).values)?, r)?;
            let b = find_zeros(&TruncatedGaf::new(long.draw(seed, 0).values)?, r)?;
            Ok(truncation_discrepancy(&a, &b))
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(StabilityReport { n, distances })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::intensity::expected_count_disc;

    fn quick(spec: ModelSpec, mode: CovarianceMode) -> ExperimentConfig {
        let mut c = ExperimentConfig::new(spec);
        c.mode = mode;
        c.replicates = 300;
        c.seed = 17;
        c
    }

    #[test]
    fn config_validation() {
        let mut c = ExperimentConfig::new(ModelSpec::Identity);
        assert!(c.validate().is_ok());
        c.r = 0.95;
        assert!(c.validate().is_err());
        c.r = 0.6;
        c.replicates = 99;
        assert!(c.validate().is_err());
        c.replicates = 100;
        c.edges = vec![0.0, 0.3, 0.3, 0.6];
        assert!(c.validate().is_err());
        c.edges = vec![0.0, 0.7];
        assert!(c.validate().is_err());
        c.edges = vec![0.1, 0.6];
        assert!(c.validate().is_ok());
    }

    #[test]
    fn config_from_file() {
        let cfg = ConfigFile::parse("model = tridiag\nq = -0.3333333\nmode = direct\nr = 0.5\nreplicates = 150\nedges = 0,0.25,0.5\n").unwrap();
        let c = ExperimentConfig::from_config(&cfg).unwrap();
        assert_eq!(c.mode, CovarianceMode::Direct);
        assert_eq!(c.edges, vec![0.0, 0.25, 0.5]);
        assert_eq!(c.replicates, 150);
        assert!(ExperimentConfig::from_config(&ConfigFile::parse("model = iid\nreplicates = 5").unwrap()).is_err());
    }

    #[test]
    fn identity_count_matches_bergman() {
        let report = run_zero_count(&quick(ModelSpec::Identity, CovarianceMode::Inverse)).unwrap();
        assert_eq!(report.used, 300);
        assert!((report.total.analytic - expected_count_disc(0.6)).abs() < 1e-15);
        assert!(report.total.within(4.0), "{:?}", report.total);
        let sum: f64 = report.rows.iter().map(|r| r.emp_mean).sum();
        assert!((sum - report.total.emp_mean).abs() < 1e-12);
        assert!(report.matched_fraction() > 0.97);
    }

    #[test]
    fn reports_are_reproducible() {
        let c = quick(ModelSpec::Kms { q: Complex64::new(0.5, 0.0) }, CovarianceMode::Inverse);
        let a = run_zero_count(&c).unwrap();
        let b = run_zero_count(&c).unwrap();
        assert_eq!(a.to_csv(), b.to_csv());
        let pool = rayon::ThreadPoolBuilder::new().num_threads(3).build().unwrap();
        let d = pool.install(|| run_zero_count(&c)).unwrap();
        assert_eq!(a.to_csv(), d.to_csv());
        let csv = a.to_csv();
        let lines: Vec<&str> = csv.lines().collect();
        assert!(lines[0].starts_with("# gafzeros"));
        assert_eq!(lines[1], "annulus_lo,annulus_hi,emp_mean,emp_se,analytic,zscore");
        assert_eq!(lines.len(), 2 + 6 + 1);
        assert!(a.manifest().contains("runtime_seconds"));
        assert!(!a.to_csv().contains("runtime"));
    }

    #[test]
    fn direct_target_is_below_bergman() {
        let report = run_zero_count(&quick(ModelSpec::Tridiagonal { q: -1.0 / 3.0 }, CovarianceMode::Direct)).unwrap();
        assert!(report.total.analytic < expected_count_disc(0.6));
        assert!(report.total.within(4.0), "{:?}", report.total);
    }

    #[test]
    fn synthetic_radial_placement_gives_unit_ratios() {
        // Place points at the quantiles of the Bergman radial law on |z| ≤ r,
        // spread round-robin over the replicates.
        let r: f64 = 0.6;
        let replicates = 10_000;
        let mut cfg = ExperimentConfig::new(ModelSpec::Identity);
        cfg.replicates = replicates;
        let total = expected_count_disc(r) * replicates as f64;
        let n_points = total.round() as usize;
        // F(s) = s²/(1-s²) normalized; inverse s = √(u F(r) / (1 + u F(r))).
        let fr = expected_count_disc(r);
        let mut per_rep: Vec<Vec<Complex64>> = vec![Vec::new(); replicates];
        for i in 0..n_points {
            let u = (i as f64 + 0.5) / n_points as f64 * fr;
            let s = (u / (1.0 + u)).sqrt();
            per_rep[i % replicates].push(Complex64::from_polar(s, i as f64));
        }
        let outcomes: Vec<Result<ReplicateOutcome>> =
            per_rep.iter().map(|p| Ok(ReplicateOutcome::from_points(p, &cfg.edges))).collect();
        let analytic: Vec<f64> = cfg.edges.windows(2).map(|w| expected_count_disc(w[1]) - expected_count_disc(w[0])).collect();
        let report = summarize(&cfg, 1, &outcomes, &analytic, fr, Duration::ZERO);
        for row in empirical_radial_intensity(&report) {
            assert!((row.ratio - 1.0).abs() < 1e-2, "{row:?}");
        }
    }

    #[test]
    fn empty_report_has_infinite_errors() {
        let cfg = ExperimentConfig::new(ModelSpec::Identity);
        let analytic = vec![0.1; 6];
        let report = summarize(&cfg, 1, &[], &analytic, 0.5625, Duration::ZERO);
        for row in empirical_radial_intensity(&report) {
            assert_eq!(row.empirical, 0.0);
            assert!(row.empirical_se.is_infinite());
        }
        assert!(report.total.emp_se.is_infinite());
    }

    #[test]
    fn excluded_replicates_are_counted() {
        let cfg = ExperimentConfig::new(ModelSpec::Identity);
        let good = Ok(ReplicateOutcome::from_points(&[Complex64::new(0.1, 0.0)], &cfg.edges));
        let bad = Err(Error::NoConvergence { iterations: 1, max_correction: 1.0 });
        let report = summarize(&cfg, 1, &[good, bad], &[0.0; 6], 0.5625, Duration::ZERO);
        assert_eq!((report.used, report.excluded), (1, 1));
    }

    #[test]
    fn zero_sets_are_stable_under_doubling() {
        let s = truncation_stability(&ModelSpec::Tridiagonal { q: -1.0 / 3.0 }, CovarianceMode::Inverse, 0.6, 1e-12, 0..20)
            .unwrap();
        assert!(s.max() < 1e-6, "{:?}", s.distances);
    }
}
