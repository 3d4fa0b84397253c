//! Exact event-driven simulation of the nested mutation process.
//!
//! Each mutation type `j` has its own homogeneous Poisson stream of candidate
//! space-time points with temporal rate `N mu_j` and uniform locations. The
//! globally earliest pending candidate is processed next. A type-`j` candidate
//! is accepted exactly when its site currently carries `j - 1` mutations; an
//! accepted candidate seeds a ball of type `j` that grows at rate `alpha`.
//! Streams are generated lazily because acceptance only looks at already
//! accepted events.

use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1};
use serde::{Deserialize, Serialize};

use crate::error::{Error, GuardExceeded, Result};
use crate::geometry::{
    covered_level, torus_distance, union_volume, Ball, GridIndex, Torus, TorusPoint, VolumeMethod,
};
use crate::rng::{self, Purpose, ReplicateSeed};

/// Monte Carlo sample count for volume snapshots in `d >= 2`.
pub const DEFAULT_VOLUME_SAMPLES: u64 = 1 << 16;

/// Concrete model parameters `(d, L, alpha, mu_1..mu_K, K)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub dim: usize,
    pub side: f64,
    pub alpha: f64,
    /// Per-volume mutation rates, `mu[0]` is `mu_1`.
    pub mu: Vec<f64>,
    /// Target type `K`.
    pub target: usize,
}

impl ModelParams {
    pub fn new(dim: usize, side: f64, alpha: f64, mu: Vec<f64>, target: usize) -> Result<Self> {
        let params = Self {
            dim,
            side,
            alpha,
            mu,
            target,
        };
        params.validate()?;
        Ok(params)
    }

    /// Parameters on the torus of volume `N`.
    pub fn with_volume(dim: usize, volume: f64, alpha: f64, mu: Vec<f64>, target: usize) -> Result<Self> {
        let torus = Torus::from_volume(dim, volume)?;
        Self::new(dim, torus.side(), alpha, mu, target)
    }

    pub fn validate(&self) -> Result<()> {
        Torus::new(self.dim, self.side)?;
        if !(self.alpha.is_finite() && self.alpha > 0.0) {
            return Err(Error::InvalidParams(format!("alpha must be positive, got {}", self.alpha)));
        }
        if self.target == 0 {
            return Err(Error::InvalidParams("target type K must be at least 1".into()));
        }
        if self.mu.len() < self.target {
            return Err(Error::InvalidParams(format!(
                "{} mutation rates supplied for target type {}",
                self.mu.len(),
                self.target
            )));
        }
        if let Some(bad) = self.mu.iter().find(|m| !(m.is_finite() && **m > 0.0)) {
            return Err(Error::InvalidParams(format!("mutation rates must be positive, got {bad}")));
        }
        Ok(())
    }

    /// Advisory issues that do not stop a simulation.
    pub fn warnings(&self) -> Vec<String> {
        let mut out = Vec::new();
        if self.mu.windows(2).any(|w| w[1] < w[0]) {
            out.push("mutation rates are not nondecreasing; the limit theorems assume mu_1 <= mu_2 <= ...".into());
        }
        out
    }

    pub fn torus(&self) -> Torus {
        Torus::new(self.dim, self.side).expect("validated parameters")
    }

    /// Torus volume `N = L^d`.
    pub fn volume(&self) -> f64 {
        self.side.powi(self.dim as i32)
    }

    /// `mu_j` for 1-based `j`.
    pub fn mu(&self, j: usize) -> f64 {
        self.mu[j - 1]
    }
}

/// Limits that turn a runaway replicate into an error instead of a hang.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Guards {
    pub max_events: u64,
    pub max_time: f64,
}

impl Default for Guards {
    fn default() -> Self {
        Self {
            max_events: 10_000_000,
            max_time: 1e6,
        }
    }
}

/// A candidate or accepted mutation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MutationEvent {
    pub mtype: u32,
    pub origin: TorusPoint,
    pub time: f64,
    pub accepted: bool,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CandidateCounts {
    pub generated: u64,
    pub accepted: u64,
    pub rejected: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PairDistance {
    pub i: usize,
    pub j: usize,
    pub distance: f64,
}

/// Output of one replicate run up to the first type-`K` mutation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PassageRecord {
    pub seed: ReplicateSeed,
    /// `sigma[j-1]` is the first type-`j` arrival time.
    pub sigma: Vec<f64>,
    /// Second type-`j` arrival for `j < K`; `None` when not observed by `sigma_K`.
    pub sigma2: Vec<Option<f64>>,
    pub first_locations: Vec<TorusPoint>,
    /// `D_{i,j}` for all `1 <= i < j <= K`, ordered by `(i, j)`.
    pub distances: Vec<PairDistance>,
    pub counts: Vec<CandidateCounts>,
}

impl PassageRecord {
    pub fn target(&self) -> usize {
        self.sigma.len()
    }

    pub fn sigma(&self, j: usize) -> f64 {
        self.sigma[j - 1]
    }

    pub fn sigma2(&self, j: usize) -> Option<f64> {
        self.sigma2.get(j - 1).copied().flatten()
    }

    pub fn distance(&self, i: usize, j: usize) -> Option<f64> {
        self.distances
            .iter()
            .find(|p| p.i == i && p.j == j)
            .map(|p| p.distance)
    }
}

/// Thinning rule: accept iff the site carries exactly `mtype - 1` mutations.
pub fn accept_candidate(candidate: &MutationEvent, log: &[MutationEvent], alpha: f64) -> bool {
    covered_level(&candidate.origin, candidate.time, alpha, log) + 1 == candidate.mtype
}

#[derive(Debug, Clone, Copy)]
struct Step {
    mtype: usize,
    accepted: bool,
}

struct Engine<'a> {
    params: &'a ModelParams,
    guards: Guards,
    torus: Torus,
    rates: Vec<f64>,
    arrivals: Vec<ChaCha8Rng>,
    locations: Vec<ChaCha8Rng>,
    next: Vec<f64>,
    index: GridIndex,
    log: Vec<MutationEvent>,
    counts: Vec<CandidateCounts>,
    sigma: Vec<Option<f64>>,
    sigma2: Vec<Option<f64>>,
    first: Vec<Option<TorusPoint>>,
    generated: u64,
}

impl<'a> Engine<'a> {
    fn new(params: &'a ModelParams, seed: ReplicateSeed, guards: Guards) -> Result<Self> {
        params.validate()?;
        if guards.max_events == 0 || !(guards.max_time > 0.0) {
            return Err(Error::InvalidParams("guards must be positive".into()));
        }
        let k = params.target;
        let torus = params.torus();
        let volume = params.volume();
        let rates: Vec<f64> = (1..=k).map(|j| volume * params.mu(j)).collect();
        let mut arrivals: Vec<ChaCha8Rng> = (1..=k)
            .map(|j| rng::substream(seed, j as u32, Purpose::Arrival))
            .collect();
        let locations = (1..=k)
            .map(|j| rng::substream(seed, j as u32, Purpose::Location))
            .collect();
        let next = arrivals
            .iter_mut()
            .zip(&rates)
            .map(|(r, rate)| exp_gap(r, *rate))
            .collect();
        Ok(Self {
            params,
            guards,
            torus,
            rates,
            arrivals,
            locations,
            next,
            index: GridIndex::new(torus, params.alpha),
            log: Vec::new(),
            counts: vec![CandidateCounts::default(); k],
            sigma: vec![None; k],
            sigma2: vec![None; k],
            first: vec![None; k],
            generated: 0,
        })
    }

    /// Next pending candidate as `(0-based type, time)`; lower types win ties.
    fn peek(&self) -> (usize, f64) {
        let mut best = (0, self.next[0]);
        for (j, &t) in self.next.iter().enumerate().skip(1) {
            if t < best.1 {
                best = (j, t);
            }
        }
        best
    }

    fn guard_error(&self, reason: &str, time: f64) -> Error {
        Error::ResourceLimit(Box::new(GuardExceeded {
            reason: reason.into(),
            time,
            generated: self.generated,
            counts: self.counts.clone(),
        }))
    }

    fn step(&mut self) -> Result<Step> {
        let (j, time) = self.peek();
        if time > self.guards.max_time {
            return Err(self.guard_error("max_time reached", time));
        }
        if self.generated >= self.guards.max_events {
            return Err(self.guard_error("max_events reached", time));
        }
        self.generated += 1;
        self.next[j] = time + exp_gap(&mut self.arrivals[j], self.rates[j]);

        let mtype = j + 1;
        let origin = self.torus.uniform_point(&mut self.locations[j]);
        let level = self.index.covered_level(&origin, time) as usize;
        let accepted = level + 1 == mtype;

        if self.sigma[j].is_some() && self.sigma2[j].is_none() && level + 1 >= mtype {
            self.sigma2[j] = Some(time);
        }
        let counts = &mut self.counts[j];
        counts.generated += 1;
        if accepted {
            counts.accepted += 1;
            self.index.insert(&origin, time, mtype as u32);
            self.log.push(MutationEvent {
                mtype: mtype as u32,
                origin,
                time,
                accepted: true,
            });
            if self.sigma[j].is_none() {
                self.sigma[j] = Some(time);
                self.first[j] = Some(origin);
            }
        } else {
            counts.rejected += 1;
        }
        Ok(Step { mtype, accepted })
    }

    fn into_record(self, seed: ReplicateSeed) -> (PassageRecord, Vec<MutationEvent>) {
        let k = self.params.target;
        let sigma: Vec<f64> = self.sigma.iter().map(|s| s.expect("all types reached")).collect();
        let first_locations: Vec<TorusPoint> =
            self.first.iter().map(|p| p.expect("all types reached")).collect();
        let mut distances = Vec::with_capacity(k * (k - 1) / 2);
        for i in 1..=k {
            for j in (i + 1)..=k {
                let distance = torus_distance(&first_locations[i - 1], &first_locations[j - 1])
                    .expect("points share the torus");
                distances.push(PairDistance { i, j, distance });
            }
        }
        let mut sigma2 = self.sigma2;
        sigma2.truncate(k - 1);
        let record = PassageRecord {
            seed,
            sigma,
            sigma2,
            first_locations,
            distances,
            counts: self.counts,
        };
        (record, self.log)
    }
}

fn exp_gap(rng: &mut ChaCha8Rng, rate: f64) -> f64 {
    let e: f64 = Exp1.sample(rng);
    e / rate
}

/// Runs one replicate until the first accepted type-`K` mutation.
pub fn simulate_replicate(
    params: &ModelParams,
    seed: impl Into<ReplicateSeed>,
    guards: Guards,
) -> Result<PassageRecord> {
    simulate_replicate_with_log(params, seed, guards).map(|(record, _)| record)
}

/// Like [`simulate_replicate`], also returning every accepted event.
pub fn simulate_replicate_with_log(
    params: &ModelParams,
    seed: impl Into<ReplicateSeed>,
    guards: Guards,
) -> Result<(PassageRecord, Vec<MutationEvent>)> {
    let seed = seed.into();
    let mut engine = Engine::new(params, seed, guards)?;
    loop {
        let step = engine.step()?;
        if step.accepted && step.mtype == params.target {
            return Ok(engine.into_record(seed));
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VolumeSample {
    pub time: f64,
    pub estimate: f64,
    pub half_width: f64,
}

/// Measures `Y_level(t)` at each of `times` along one replicate.
///
/// The replicate keeps running past `sigma_K` until `max(times)`. Volumes are
/// exact in one dimension and Monte Carlo with [`DEFAULT_VOLUME_SAMPLES`]
/// points otherwise.
pub fn volume_snapshot(
    params: &ModelParams,
    seed: impl Into<ReplicateSeed>,
    guards: Guards,
    times: &[f64],
    level: usize,
) -> Result<Vec<VolumeSample>> {
    volume_snapshot_with(params, seed, guards, times, level, DEFAULT_VOLUME_SAMPLES)
}

pub fn volume_snapshot_with(
    params: &ModelParams,
    seed: impl Into<ReplicateSeed>,
    guards: Guards,
    times: &[f64],
    level: usize,
    mc_samples: u64,
) -> Result<Vec<VolumeSample>> {
    let seed = seed.into();
    if level == 0 || level > params.target {
        return Err(Error::TypeOutOfRange {
            index: level,
            max: params.target,
        });
    }
    if times.windows(2).any(|w| w[1] < w[0]) || times.iter().any(|t| !(*t >= 0.0)) {
        return Err(Error::InvalidParams("snapshot times must be nonnegative and sorted".into()));
    }
    let mut engine = Engine::new(params, seed, guards)?;
    let torus = engine.torus;
    let mut out = Vec::with_capacity(times.len());
    for (i, &t) in times.iter().enumerate() {
        if t > guards.max_time {
            return Err(engine.guard_error("snapshot time beyond max_time", t));
        }
        while engine.peek().1 <= t {
            engine.step()?;
        }
        let balls: Vec<Ball> = engine
            .log
            .iter()
            .filter(|e| e.mtype as usize >= level)
            .map(|e| Ball {
                center: e.origin,
                radius: params.alpha * (t - e.time),
            })
            .collect();
        let method = if torus.dim() == 1 {
            VolumeMethod::Exact1d
        } else {
            let mc_seed = seed
                .master
                .wrapping_add(seed.replicate.wrapping_mul(0x9E37_79B9_7F4A_7C15))
                .wrapping_add(i as u64);
            VolumeMethod::monte_carlo(mc_samples, mc_seed)
        };
        let v = union_volume(&torus, &balls, method)?;
        out.push(VolumeSample {
            time: t,
            estimate: v.estimate,
            half_width: v.half_width,
        });
    }
    Ok(out)
}
