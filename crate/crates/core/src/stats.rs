//! Kolmogorov-Smirnov checks of simulated passage times and distances against
//! the limit laws, plus the replicate fan-out and report plumbing around them.

use std::io::Write;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::asymptotics::{beta_k, kappa_j, v_k, LimitLaw, Rate};
use crate::error::{Error, Result};
use crate::process::{
    simulate_replicate, simulate_replicate_with_log, volume_snapshot, Guards, ModelParams, MutationEvent, PassageRecord,
};
use crate::regimes::{classify, Regime, Scale, ScalingFamily};
use crate::rng::{ReplicateSeed, GENERATOR_NAME};

/// `c` in the asymptotic 1% Kolmogorov critical value `c / sqrt(M)`.
pub const KS_CRITICAL_COEFFICIENT: f64 = 1.63;

/// Smallest replicate count accepted for a KS target.
pub const MIN_KS_REPLICATES: usize = 100;

/// Fraction of replicates above which censoring or nesting problems are flagged.
pub const WARNING_FRACTION: f64 = 0.05;

pub fn critical_value(sample_size: usize) -> f64 {
    KS_CRITICAL_COEFFICIENT / (sample_size as f64).sqrt()
}

fn check_sample(sample: &[f64]) -> Result<()> {
    if sample.is_empty() {
        return Err(Error::InvalidSample("empty sample".into()));
    }
    if let Some(bad) = sample.iter().find(|x| !x.is_finite()) {
        return Err(Error::InvalidSample(format!("non-finite value {bad}")));
    }
    Ok(())
}

fn sorted(sample: &[f64]) -> Vec<f64> {
    let mut s = sample.to_vec();
    s.sort_by(f64::total_cmp);
    s
}

/// One-sample KS distance between `sample` (any order) and `law`.
pub fn ks_statistic(sample: &[f64], law: &LimitLaw) -> Result<f64> {
    let cdf = law.evaluator()?;
    ks_statistic_by(sample, |x| cdf.cdf(x))
}

/// One-sample KS distance against an arbitrary CDF.
pub fn ks_statistic_by<F: FnMut(f64) -> Result<f64>>(sample: &[f64], mut cdf: F) -> Result<f64> {
    check_sample(sample)?;
    let s = sorted(sample);
    let m = s.len() as f64;
    let mut sup = 0.0f64;
    for (i, &x) in s.iter().enumerate() {
        let f = cdf(x)?;
        let above = (i + 1) as f64 / m - f;
        let below = f - i as f64 / m;
        sup = sup.max(above.abs()).max(below.abs());
    }
    Ok(sup.min(1.0))
}

/// Two-sample KS distance `sup |F_a - F_b|`.
pub fn two_sample_ks(a: &[f64], b: &[f64]) -> Result<f64> {
    check_sample(a)?;
    check_sample(b)?;
    let (a, b) = (sorted(a), sorted(b));
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0usize, 0usize);
    let mut sup = 0.0f64;
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        sup = sup.max((i as f64 / na - j as f64 / nb).abs());
    }
    Ok(sup)
}

/// A statistic to check against its limit law.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", deny_unknown_fields)]
pub enum Target {
    /// `sigma_K` rescaled by the regime's time scale.
    #[serde(rename = "sigma_k_law")]
    SigmaLaw,
    /// `N mu_1 sigma_1` against Exp(1), which holds exactly for every `N`.
    #[serde(rename = "sigma1_exact")]
    Sigma1Exact,
    /// `D_{j,k} / (alpha kappa_{j+1})`.
    #[serde(rename = "distance_law")]
    DistanceLaw { j: usize, k: usize },
    /// Mean of `Y_level(t beta_K) / v_level(t beta_K)` over replicates.
    #[serde(rename = "volume_diag")]
    VolumeDiag {
        level: usize,
        /// Times in units of `beta_K`.
        times: Vec<f64>,
        /// Accepted deviation of each mean ratio from 1.
        #[serde(default = "default_volume_tolerance")]
        tolerance: f64,
        /// Replicate count; defaults to the run's.
        #[serde(default)]
        replicates: Option<usize>,
    },
}

fn default_volume_tolerance() -> f64 {
    0.1
}

impl Target {
    pub fn name(&self) -> String {
        match self {
            Target::SigmaLaw => "sigma_k_law".into(),
            Target::Sigma1Exact => "sigma1_exact".into(),
            Target::DistanceLaw { j, k } => format!("distance_law_{j}_{k}"),
            Target::VolumeDiag { level, .. } => format!("volume_diag_{level}"),
        }
    }

    fn uses_ks(&self) -> bool {
        !matches!(self, Target::VolumeDiag { .. })
    }
}

#[derive(Debug, Clone)]
pub struct ValidationConfig {
    pub params: ModelParams,
    pub family: Option<ScalingFamily>,
    /// Law to test `sigma_K` against instead of the regime's.
    pub law: Option<LimitLaw>,
    /// Index of the `beta` scale for `sigma_K` when no family is given.
    pub scale_beta_index: Option<usize>,
    pub replicates: usize,
    pub master_seed: u64,
    pub targets: Vec<Target>,
    pub ks_threshold: f64,
    /// Worker threads; 0 uses every available core.
    pub workers: usize,
    pub guards: Guards,
}

impl ValidationConfig {
    pub fn new(params: ModelParams, replicates: usize, master_seed: u64, targets: Vec<Target>) -> Self {
        Self {
            params,
            family: None,
            law: None,
            scale_beta_index: None,
            replicates,
            master_seed,
            targets,
            ks_threshold: 0.05,
            workers: 0,
            guards: Guards::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.params.validate()?;
        if self.replicates == 0 {
            return Err(Error::InvalidConfig("replicate count must be positive".into()));
        }
        if self.targets.is_empty() {
            return Err(Error::InvalidConfig("no validation targets".into()));
        }
        if !(self.ks_threshold > 0.0) {
            return Err(Error::InvalidConfig(format!("KS threshold must be positive, got {}", self.ks_threshold)));
        }
        if self.targets.iter().any(Target::uses_ks) && self.replicates < MIN_KS_REPLICATES {
            return Err(Error::InvalidConfig(format!(
                "KS targets need at least {MIN_KS_REPLICATES} replicates, got {}",
                self.replicates
            )));
        }
        if let Some(f) = &self.family {
            f.validate()?;
            if f.dim != self.params.dim || f.target != self.params.target {
                return Err(Error::InvalidConfig(format!(
                    "family (d = {}, k = {}) does not match the model (d = {}, K = {})",
                    f.dim, f.target, self.params.dim, self.params.target
                )));
            }
        }
        for t in &self.targets {
            match t {
                Target::DistanceLaw { j, k } => {
                    if !(1 <= *j && j < k && *k <= self.params.target) {
                        return Err(Error::InvalidConfig(format!(
                            "distance target needs 1 <= j < k <= K, got j = {j}, k = {k}"
                        )));
                    }
                }
                Target::VolumeDiag {
                    level,
                    times,
                    tolerance,
                    replicates,
                } => {
                    if *level == 0 || *level > self.params.target {
                        return Err(Error::TypeOutOfRange {
                            index: *level,
                            max: self.params.target,
                        });
                    }
                    if times.is_empty() || !(*tolerance > 0.0) || *replicates == Some(0) {
                        return Err(Error::InvalidConfig(
                            "volume diagnostic needs times, a positive tolerance and replicates".into(),
                        ));
                    }
                }
                Target::SigmaLaw | Target::Sigma1Exact => {}
            }
        }
        Ok(())
    }
}

/// Mean volume ratio at one time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VolumeRatio {
    pub time: f64,
    pub mean_ratio: f64,
    pub std_error: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    /// `t = 0`, where the ratio is 0/0 and reported as 1.
    pub degenerate: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TargetReport {
    pub target: Target,
    pub statistic: String,
    pub law: Option<LimitLaw>,
    pub scale: String,
    pub scale_value: f64,
    pub sample_size: usize,
    pub ks: Option<f64>,
    pub critical_value: Option<f64>,
    pub threshold: Option<f64>,
    pub passed: bool,
    pub censored: usize,
    pub nesting_violations: usize,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub volume: Vec<VolumeRatio>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
    /// Rescaled sample in replicate order (KS targets only).
    #[serde(skip)]
    pub sample: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReportMetadata {
    pub version: String,
    pub master_seed: u64,
    pub replicates: usize,
    pub generator: String,
    pub workers: usize,
    pub wall_time_seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidationReport {
    pub passed: bool,
    pub regime: Option<Regime>,
    pub targets: Vec<TargetReport>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
    pub metadata: ReportMetadata,
}

impl ValidationReport {
    pub fn target(&self, name: &str) -> Option<&TargetReport> {
        self.targets.iter().find(|t| t.target.name() == name)
    }
}

/// Report plus the replicate records it was computed from.
#[derive(Debug, Clone)]
pub struct ValidationRun {
    pub report: ValidationReport,
    pub records: Vec<PassageRecord>,
}

/// Pass rule shared by every KS target.
pub fn ks_passes(ks: f64, sample_size: usize, threshold: f64) -> bool {
    ks <= threshold.max(critical_value(sample_size))
}

fn pool(workers: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::InvalidConfig(format!("cannot start worker pool: {e}")))
}

/// Simulates replicates `0..replicates` in parallel; output is in replicate order.
pub fn simulate_replicates(
    params: &ModelParams,
    master_seed: u64,
    replicates: usize,
    guards: Guards,
    workers: usize,
) -> Result<Vec<PassageRecord>> {
    params.validate()?;
    pool(workers)?.install(|| {
        (0..replicates as u64)
            .into_par_iter()
            .map(|i| simulate_replicate(params, ReplicateSeed::new(master_seed, i), guards))
            .collect()
    })
}

/// Like [`simulate_replicates`], also returning each replicate's accepted events.
pub fn simulate_replicates_logged(
    params: &ModelParams,
    master_seed: u64,
    replicates: usize,
    guards: Guards,
    workers: usize,
) -> Result<Vec<(PassageRecord, Vec<MutationEvent>)>> {
    params.validate()?;
    pool(workers)?.install(|| {
        (0..replicates as u64)
            .into_par_iter()
            .map(|i| simulate_replicate_with_log(params, ReplicateSeed::new(master_seed, i), guards))
            .collect()
    })
}

/// Runs every target of `config` and compares it with its limit law.
pub fn run_validation(config: &ValidationConfig) -> Result<ValidationRun> {
    config.validate()?;
    let started = Instant::now();
    let params = &config.params;
    let mut warnings = params.warnings();

    let regime = match &config.family {
        Some(family) => {
            let mut family = family.clone();
            if family.c.is_none() {
                // finite-N proxy for lim mu_i / mu_1
                family.c = Some(params.mu[..params.target].iter().map(|m| Rate::Finite(m / params.mu[0])).collect());
            }
            Some(classify(&family)?)
        }
        None => None,
    };

    let needs_records = config.targets.iter().any(Target::uses_ks);
    let records = if needs_records {
        simulate_replicates(params, config.master_seed, config.replicates, config.guards, config.workers)?
    } else {
        Vec::new()
    };

    let mut targets = Vec::with_capacity(config.targets.len());
    for target in &config.targets {
        let report = match target {
            Target::SigmaLaw => {
                let (law, scale) = sigma_law_and_scale(config, regime.as_ref())?;
                let scale_value = scale.evaluate(params)?;
                let sample: Vec<f64> = records.iter().map(|r| r.sigma(params.target) / scale_value).collect();
                ks_report(
                    target,
                    format!("sigma_{} / {}", params.target, scale.describe()),
                    law,
                    scale.describe(),
                    scale_value,
                    sample,
                    config.ks_threshold,
                )?
            }
            Target::Sigma1Exact => {
                let scale_value = beta_k(params, 1)?;
                let sample: Vec<f64> = records.iter().map(|r| r.sigma(1) / scale_value).collect();
                ks_report(
                    target,
                    "N*mu_1*sigma_1".into(),
                    LimitLaw::Exp1,
                    "1/(N*mu_1)".into(),
                    scale_value,
                    sample,
                    config.ks_threshold,
                )?
            }
            Target::DistanceLaw { j, k } => {
                let scale_value = params.alpha * kappa_j(params, j + 1)?;
                let sample: Vec<f64> = records
                    .iter()
                    .map(|r| r.distance(*j, *k).expect("distance pair within target") / scale_value)
                    .collect();
                let mut report = ks_report(
                    target,
                    format!("D_{j},{k} / (alpha*kappa_{})", j + 1),
                    LimitLaw::DistanceLaw { dim: params.dim },
                    format!("alpha*kappa_{}", j + 1),
                    scale_value,
                    sample,
                    config.ks_threshold,
                )?;
                let (censored, violations) = second_arrival_counts(&records, *j, *k);
                report.censored = censored;
                report.nesting_violations = violations;
                let m = records.len() as f64;
                if violations as f64 > WARNING_FRACTION * m {
                    report.warnings.push(format!(
                        "{violations} of {} replicates saw a second type-i arrival (j <= i < k) before the first type-(i+1) mutation",
                        records.len()
                    ));
                }
                report
            }
            Target::VolumeDiag {
                level,
                times,
                tolerance,
                replicates,
            } => {
                let unit = beta_k(params, params.target)?;
                let absolute: Vec<f64> = times.iter().map(|t| t * unit).collect();
                let volume = volume_diagnostic_with(
                    params,
                    *level,
                    &absolute,
                    replicates.unwrap_or(config.replicates),
                    config.master_seed,
                    config.guards,
                    config.workers,
                )?;
                let passed = volume.iter().all(|v| v.degenerate || (v.mean_ratio - 1.0).abs() <= *tolerance);
                TargetReport {
                    target: target.clone(),
                    statistic: format!("Y_{level}(t) / v_{level}(t)"),
                    law: None,
                    scale: format!("beta_{}", params.target),
                    scale_value: unit,
                    sample_size: replicates.unwrap_or(config.replicates),
                    ks: None,
                    critical_value: None,
                    threshold: Some(*tolerance),
                    passed,
                    censored: 0,
                    nesting_violations: 0,
                    volume,
                    warnings: Vec::new(),
                    sample: Vec::new(),
                }
            }
        };
        targets.push(report);
    }

    for t in &targets {
        warnings.extend(t.warnings.iter().map(|w| format!("{}: {w}", t.target.name())));
    }
    let passed = targets.iter().all(|t| t.passed);
    let report = ValidationReport {
        passed,
        regime,
        targets,
        warnings,
        metadata: ReportMetadata {
            version: env!("CARGO_PKG_VERSION").into(),
            master_seed: config.master_seed,
            replicates: config.replicates,
            generator: GENERATOR_NAME.into(),
            workers: if config.workers == 0 {
                rayon::current_num_threads()
            } else {
                config.workers
            },
            wall_time_seconds: started.elapsed().as_secs_f64(),
        },
    };
    Ok(ValidationRun { report, records })
}

fn sigma_law_and_scale(config: &ValidationConfig, regime: Option<&Regime>) -> Result<(LimitLaw, Scale)> {
    let from_regime = match regime {
        Some(r) => {
            let (law, scale) = r.law_and_scale()?;
            Some((law.clone(), *scale))
        }
        None => None,
    };
    match (from_regime, &config.law, config.scale_beta_index) {
        (Some((_, scale)), Some(law), _) => Ok((law.clone(), scale)),
        (Some(pair), None, _) => Ok(pair),
        (None, Some(law), Some(index)) => {
            beta_k(&config.params, index)?;
            Ok((
                law.clone(),
                Scale {
                    beta_index: index,
                    exponent: Default::default(),
                },
            ))
        }
        (None, _, _) => Err(Error::InvalidConfig(
            "sigma_k_law needs a scaling family, or an explicit law with a beta scale index".into(),
        )),
    }
}

fn ks_report(
    target: &Target,
    statistic: String,
    law: LimitLaw,
    scale: String,
    scale_value: f64,
    sample: Vec<f64>,
    threshold: f64,
) -> Result<TargetReport> {
    let ks = ks_statistic(&sample, &law)?;
    let m = sample.len();
    Ok(TargetReport {
        target: target.clone(),
        statistic,
        law: Some(law),
        scale,
        scale_value,
        sample_size: m,
        ks: Some(ks),
        critical_value: Some(critical_value(m)),
        threshold: Some(threshold),
        passed: ks_passes(ks, m, threshold),
        censored: 0,
        nesting_violations: 0,
        volume: Vec::new(),
        warnings: Vec::new(),
        sample,
    })
}

/// Counts replicates with a censored second type-`i` arrival and replicates
/// where a second type-`i` arrival precedes `sigma_{i+1}`, over `j <= i < k`.
///
/// Distance samples keep every replicate; these counts describe how far the
/// single-nested-ball picture behind the distance law held.
pub fn second_arrival_counts(records: &[PassageRecord], j: usize, k: usize) -> (usize, usize) {
    let mut censored = 0;
    let mut violations = 0;
    for r in records {
        let mut any_censored = false;
        let mut any_violation = false;
        for i in j..k {
            match r.sigma2(i) {
                None => any_censored = true,
                Some(s2) if s2 < r.sigma(i + 1) => any_violation = true,
                Some(_) => {}
            }
        }
        censored += usize::from(any_censored);
        violations += usize::from(any_violation);
    }
    (censored, violations)
}

/// Longest time for which the volume approximation is claimed: `N^(1/d) / (2 alpha)`.
pub fn volume_time_limit(params: &ModelParams) -> f64 {
    params.side / (2.0 * params.alpha)
}

/// Mean of `Y_level(t) / v_level(t)` over `replicates` runs at each absolute time.
pub fn volume_diagnostic(
    params: &ModelParams,
    level: usize,
    times: &[f64],
    replicates: usize,
    master_seed: u64,
) -> Result<Vec<VolumeRatio>> {
    volume_diagnostic_with(params, level, times, replicates, master_seed, Guards::default(), 0)
}

pub fn volume_diagnostic_with(
    params: &ModelParams,
    level: usize,
    times: &[f64],
    replicates: usize,
    master_seed: u64,
    guards: Guards,
    workers: usize,
) -> Result<Vec<VolumeRatio>> {
    params.validate()?;
    if replicates < 2 {
        return Err(Error::InvalidConfig("volume diagnostic needs at least 2 replicates".into()));
    }
    let limit = volume_time_limit(params);
    if let Some(t) = times.iter().find(|t| **t > limit) {
        return Err(Error::HypothesisViolation(format!(
            "time {t} exceeds N^(1/d)/(2 alpha) = {limit}"
        )));
    }
    let mut order: Vec<usize> = (0..times.len()).collect();
    order.sort_by(|a, b| times[*a].total_cmp(&times[*b]));
    let sorted_times: Vec<f64> = order.iter().map(|i| times[*i]).collect();
    let expected: Vec<f64> = sorted_times
        .iter()
        .map(|t| v_k(params, level, *t))
        .collect::<Result<_>>()?;

    let per_replicate: Vec<Vec<f64>> = pool(workers)?.install(|| {
        (0..replicates as u64)
            .into_par_iter()
            .map(|i| {
                let samples = volume_snapshot(params, ReplicateSeed::new(master_seed, i), guards, &sorted_times, level)?;
                Ok(samples
                    .iter()
                    .zip(&expected)
                    .map(|(s, v)| if *v > 0.0 { s.estimate / v } else { 1.0 })
                    .collect())
            })
            .collect::<Result<_>>()
    })?;

    let m = replicates as f64;
    let mut out = vec![None; times.len()];
    for (col, &original) in order.iter().enumerate() {
        let t = sorted_times[col];
        let ratio = if t == 0.0 {
            VolumeRatio {
                time: t,
                mean_ratio: 1.0,
                std_error: 0.0,
                ci_low: 1.0,
                ci_high: 1.0,
                degenerate: true,
            }
        } else {
            let mean = per_replicate.iter().map(|r| r[col]).sum::<f64>() / m;
            let var = per_replicate.iter().map(|r| (r[col] - mean).powi(2)).sum::<f64>() / (m - 1.0);
            let se = (var / m).sqrt();
            VolumeRatio {
                time: t,
                mean_ratio: mean,
                std_error: se,
                ci_low: mean - 1.96 * se,
                ci_high: mean + 1.96 * se,
                degenerate: false,
            }
        };
        out[original] = Some(ratio);
    }
    Ok(out.into_iter().map(|r| r.expect("every time filled")).collect())
}

fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

/// Column names of [`write_replicates_csv`] for target type `k`.
pub fn replicate_columns(k: usize) -> Vec<String> {
    let mut cols = vec!["replicate_index".to_string()];
    cols.extend((1..=k).map(|j| format!("sigma_{j}")));
    cols.extend((1..k).map(|j| format!("sigma2_{j}")));
    for i in 1..=k {
        for j in i + 1..=k {
            cols.push(format!("D_{i}_{j}"));
        }
    }
    for j in 1..=k {
        cols.push(format!("accepted_{j}"));
        cols.push(format!("rejected_{j}"));
    }
    cols
}

/// One CSV row per replicate: passage times, second arrivals (empty when
/// censored), pairwise distances and candidate counts, followed by any
/// `extra` columns. Floats carry 17 significant digits.
pub fn write_replicates_csv<W: Write>(
    out: W,
    records: &[PassageRecord],
    extra: &[(String, Vec<f64>)],
) -> Result<()> {
    let k = records.first().map_or(0, PassageRecord::target);
    if records.iter().any(|r| r.target() != k) {
        return Err(Error::InvalidSample("records with different target types".into()));
    }
    if extra.iter().any(|(_, v)| v.len() != records.len()) {
        return Err(Error::InvalidSample("extra column length differs from record count".into()));
    }
    let mut w = csv::Writer::from_writer(out);
    let mut header = replicate_columns(k);
    header.extend(extra.iter().map(|(n, _)| n.clone()));
    w.write_record(&header)?;
    for (row, r) in records.iter().enumerate() {
        let mut fields = vec![r.seed.replicate.to_string()];
        fields.extend(r.sigma.iter().map(|s| fmt_f64(*s)));
        fields.extend(r.sigma2.iter().map(|s| s.map(fmt_f64).unwrap_or_default()));
        for i in 1..=k {
            for j in i + 1..=k {
                fields.push(r.distance(i, j).map(fmt_f64).unwrap_or_default());
            }
        }
        for c in &r.counts {
            fields.push(c.accepted.to_string());
            fields.push(c.rejected.to_string());
        }
        fields.extend(extra.iter().map(|(_, v)| fmt_f64(v[row])));
        w.write_record(&fields)?;
    }
    w.flush()?;
    Ok(())
}

/// One row per accepted event: replicate, type, birth time and origin coordinates.
pub fn write_events_csv<W: Write>(out: W, logs: &[(u64, &[MutationEvent])]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["replicate_index", "type", "time", "x", "y", "z"])?;
    for (replicate, events) in logs {
        for e in events.iter() {
            let c = e.origin.coords();
            let coord = |i: usize| c.get(i).map(|v| fmt_f64(*v)).unwrap_or_default();
            w.write_record([
                replicate.to_string(),
                e.mtype.to_string(),
                fmt_f64(e.time),
                coord(0),
                coord(1),
                coord(2),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Writes `t, F(t)` rows for `law` at each point of `grid`.
pub fn write_cdf_csv<W: Write>(out: W, law: &LimitLaw, grid: &[f64]) -> Result<()> {
    let cdf = law.evaluator()?;
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["t", "cdf"])?;
    for &t in grid {
        w.write_record([fmt_f64(t), fmt_f64(cdf.cdf(t)?)])?;
    }
    w.flush()?;
    Ok(())
}
