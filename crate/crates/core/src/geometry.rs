//! Torus metric, ball coverage and union-of-balls volume.
//!
//! Points live on `[0, L)^d` with every coordinate wrapped, `d` in `{1, 2, 3}`.
//! A ball contains a point when the wrapped Euclidean distance is at most its
//! radius. That test stays exact once a ball wraps around the torus and
//! overlaps itself, so no special wrap geometry is needed anywhere.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::process::MutationEvent;
use crate::rng::{self, Purpose, ReplicateSeed};

pub const MAX_DIM: usize = 3;

/// Cells per axis used by [`GridIndex::new`].
pub const DEFAULT_CELLS_PER_AXIS: usize = 16;

/// Two-sided 99% standard normal quantile.
const Z_99: f64 = 2.575_829_303_548_901;

/// The torus `[0, L)^d`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Torus {
    dim: usize,
    side: f64,
}

impl Torus {
    pub fn new(dim: usize, side: f64) -> Result<Self> {
        if !(1..=MAX_DIM).contains(&dim) {
            return Err(Error::UnsupportedDimension(dim));
        }
        if !(side.is_finite() && side > 0.0) {
            return Err(Error::InvalidParams(format!(
                "side length must be positive and finite, got {side}"
            )));
        }
        Ok(Self { dim, side })
    }

    /// Torus of the given volume `N`, so that `L = N^(1/d)`.
    pub fn from_volume(dim: usize, volume: f64) -> Result<Self> {
        if !(volume.is_finite() && volume > 0.0) {
            return Err(Error::InvalidParams(format!(
                "volume must be positive and finite, got {volume}"
            )));
        }
        let side = match dim {
            1 => volume,
            2 => volume.sqrt(),
            3 => volume.cbrt(),
            _ => return Err(Error::UnsupportedDimension(dim)),
        };
        Self::new(dim, side)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn side(&self) -> f64 {
        self.side
    }

    pub fn volume(&self) -> f64 {
        self.side.powi(self.dim as i32)
    }

    /// Largest distance between two points, `sqrt(d) L / 2`.
    pub fn max_distance(&self) -> f64 {
        (self.dim as f64).sqrt() * self.side / 2.0
    }

    pub fn point(&self, coords: &[f64]) -> Result<TorusPoint> {
        if coords.len() != self.dim {
            return Err(Error::DimensionMismatch(format!(
                "expected {} coordinates, got {}",
                self.dim,
                coords.len()
            )));
        }
        if coords.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidParams("non-finite coordinate".into()));
        }
        let mut canonical = [0.0; MAX_DIM];
        for (slot, &c) in canonical.iter_mut().zip(coords) {
            *slot = wrap(c, self.side);
        }
        Ok(TorusPoint {
            coords: canonical,
            dim: self.dim,
            side: self.side,
        })
    }

    pub fn uniform_point<R: Rng + ?Sized>(&self, rng: &mut R) -> TorusPoint {
        let mut coords = [0.0; MAX_DIM];
        for c in coords.iter_mut().take(self.dim) {
            *c = wrap(rng.random::<f64>() * self.side, self.side);
        }
        TorusPoint {
            coords,
            dim: self.dim,
            side: self.side,
        }
    }
}

fn wrap(c: f64, side: f64) -> f64 {
    let r = c.rem_euclid(side);
    if r >= side {
        0.0
    } else {
        r
    }
}

/// A point of the torus in canonical coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TorusPoint {
    coords: [f64; MAX_DIM],
    dim: usize,
    side: f64,
}

impl TorusPoint {
    pub fn coords(&self) -> &[f64] {
        &self.coords[..self.dim]
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn side(&self) -> f64 {
        self.side
    }

    pub fn torus(&self) -> Torus {
        Torus {
            dim: self.dim,
            side: self.side,
        }
    }

    /// Shifts the point by `offset`, wrapping back onto the torus.
    pub fn translate(&self, offset: &[f64]) -> Result<TorusPoint> {
        if offset.len() != self.dim {
            return Err(Error::DimensionMismatch(format!(
                "offset has {} components for a {}-dimensional torus",
                offset.len(),
                self.dim
            )));
        }
        let shifted: Vec<f64> = self.coords().iter().zip(offset).map(|(c, o)| c + o).collect();
        self.torus().point(&shifted)
    }
}

#[inline]
fn axis_gap(a: f64, b: f64, side: f64) -> f64 {
    let d = (a - b).abs();
    d.min(side - d)
}

#[inline]
pub(crate) fn distance_sq(x: &[f64; MAX_DIM], y: &[f64; MAX_DIM], dim: usize, side: f64) -> f64 {
    let mut acc = 0.0;
    for i in 0..dim {
        let g = axis_gap(x[i], y[i], side);
        acc += g * g;
    }
    acc
}

/// Wrapped Euclidean distance between two points of the same torus.
pub fn torus_distance(x: &TorusPoint, y: &TorusPoint) -> Result<f64> {
    if x.dim != y.dim || x.side != y.side {
        return Err(Error::DimensionMismatch(format!(
            "points on different tori: (d={}, L={}) vs (d={}, L={})",
            x.dim, x.side, y.dim, y.side
        )));
    }
    Ok(distance_sq(&x.coords, &y.coords, x.dim, x.side).sqrt())
}

/// Whether a ball born at `birth` around `center` and growing at rate `alpha`
/// contains `x` at time `t`. Shared by the scan and the grid index so both
/// make identical decisions on boundary cases.
#[inline]
fn ball_covers(center: &[f64; MAX_DIM], birth: f64, alpha: f64, x: &TorusPoint, t: f64) -> bool {
    if birth > t {
        return false;
    }
    let r = alpha * (t - birth);
    distance_sq(center, &x.coords, x.dim, x.side) <= r * r
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Ball {
    pub center: TorusPoint,
    pub radius: f64,
}

impl Ball {
    pub fn new(center: TorusPoint, radius: f64) -> Result<Self> {
        if !(radius >= 0.0) {
            return Err(Error::InvalidParams(format!("negative ball radius {radius}")));
        }
        Ok(Self { center, radius })
    }

    pub fn contains(&self, x: &TorusPoint) -> bool {
        distance_sq(&self.center.coords, &x.coords, x.dim, x.side) <= self.radius * self.radius
    }
}

/// Highest accepted mutation type whose ball covers `x` at time `t`, or 0.
///
/// Linear scan over `log`; [`GridIndex::covered_level`] returns the same value.
pub fn covered_level(x: &TorusPoint, t: f64, alpha: f64, log: &[MutationEvent]) -> u32 {
    log.iter()
        .filter(|e| e.accepted && ball_covers(&e.origin.coords, e.time, alpha, x, t))
        .map(|e| e.mtype)
        .max()
        .unwrap_or(0)
}

#[derive(Debug, Clone, Copy)]
struct Entry {
    center: [f64; MAX_DIM],
    birth: f64,
    level: u32,
}

/// Uniform grid over ball origins.
///
/// Each ball is filed under the cell holding its center. A query at `(x, t)`
/// visits only the cells within reach of the oldest (largest) ball, so the
/// answer always matches [`covered_level`].
#[derive(Debug, Clone)]
pub struct GridIndex {
    torus: Torus,
    alpha: f64,
    per_axis: usize,
    width: f64,
    cells: Vec<Vec<u32>>,
    entries: Vec<Entry>,
    earliest: f64,
    top_level: u32,
}

impl GridIndex {
    pub fn new(torus: Torus, alpha: f64) -> Self {
        Self::with_width(torus, alpha, torus.side() / DEFAULT_CELLS_PER_AXIS as f64)
    }

    /// Grid with `ceil(L / width)` cells per axis.
    pub fn with_width(torus: Torus, alpha: f64, width: f64) -> Self {
        let per_axis = ((torus.side() / width).ceil() as usize).max(1);
        let n_cells = per_axis.pow(torus.dim() as u32);
        Self {
            torus,
            alpha,
            per_axis,
            width: torus.side() / per_axis as f64,
            cells: vec![Vec::new(); n_cells],
            entries: Vec::new(),
            earliest: f64::INFINITY,
            top_level: 0,
        }
    }

    pub fn from_events(torus: Torus, alpha: f64, events: &[MutationEvent]) -> Self {
        let mut index = Self::new(torus, alpha);
        for e in events.iter().filter(|e| e.accepted) {
            index.insert(&e.origin, e.time, e.mtype);
        }
        index
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn insert(&mut self, center: &TorusPoint, birth: f64, level: u32) {
        debug_assert_eq!(center.dim, self.torus.dim());
        let id = self.entries.len() as u32;
        let cell = self.cell_of(&center.coords);
        self.cells[cell].push(id);
        self.entries.push(Entry {
            center: center.coords,
            birth,
            level,
        });
        self.earliest = self.earliest.min(birth);
        self.top_level = self.top_level.max(level);
    }

    fn axis_cell(&self, c: f64) -> usize {
        ((c / self.width) as usize).min(self.per_axis - 1)
    }

    fn cell_of(&self, coords: &[f64; MAX_DIM]) -> usize {
        let mut flat = 0;
        for &c in coords.iter().take(self.torus.dim()) {
            flat = flat * self.per_axis + self.axis_cell(c);
        }
        flat
    }

    /// Highest level among balls covering `x` at time `t`, or 0.
    pub fn covered_level(&self, x: &TorusPoint, t: f64) -> u32 {
        if self.entries.is_empty() || t < self.earliest {
            return 0;
        }
        let reach_radius = self.alpha * (t - self.earliest);
        let m = self.per_axis;
        let reach = if reach_radius.is_finite() {
            (reach_radius / self.width).floor() as usize + 1
        } else {
            m
        };

        let dim = self.torus.dim();
        let mut ranges: [(usize, usize); MAX_DIM] = [(0, 1); MAX_DIM];
        for (a, range) in ranges.iter_mut().enumerate().take(dim) {
            *range = if 2 * reach + 1 >= m {
                (0, m)
            } else {
                // start offset in [0, m), count of cells
                let c = self.axis_cell(x.coords[a]);
                ((c + m - reach) % m, 2 * reach + 1)
            };
        }

        let mut best = 0;
        for i in 0..ranges[0].1 {
            let c0 = (ranges[0].0 + i) % m;
            for j in 0..ranges[1].1 {
                let c1 = (ranges[1].0 + j) % m;
                for k in 0..ranges[2].1 {
                    let c2 = (ranges[2].0 + k) % m;
                    let flat = match dim {
                        1 => c0,
                        2 => c0 * m + c1,
                        _ => (c0 * m + c1) * m + c2,
                    };
                    for &id in &self.cells[flat] {
                        let e = &self.entries[id as usize];
                        if e.level > best && ball_covers(&e.center, e.birth, self.alpha, x, t) {
                            best = e.level;
                            if best == self.top_level {
                                return best;
                            }
                        }
                    }
                }
            }
        }
        best
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "kebab-case")]
pub enum VolumeMethod {
    /// Interval merge of wrapped arcs; `d = 1` only.
    Exact1d,
    /// Hit-or-miss estimate over at least `samples` points.
    MonteCarlo {
        samples: u64,
        seed: u64,
        /// Jittered grid with `ceil(n^(1/d))` points per axis, else i.i.d. uniform.
        stratified: bool,
    },
}

impl VolumeMethod {
    pub fn monte_carlo(samples: u64, seed: u64) -> Self {
        Self::MonteCarlo {
            samples,
            seed,
            stratified: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VolumeEstimate {
    pub estimate: f64,
    pub half_width: f64,
}

/// Volume of the union of `balls` on `torus`.
pub fn union_volume(torus: &Torus, balls: &[Ball], method: VolumeMethod) -> Result<VolumeEstimate> {
    for b in balls {
        if b.center.dim != torus.dim() || b.center.side != torus.side() {
            return Err(Error::DimensionMismatch("ball lies on a different torus".into()));
        }
    }
    let full = VolumeEstimate {
        estimate: torus.volume(),
        half_width: 0.0,
    };
    let empty = VolumeEstimate {
        estimate: 0.0,
        half_width: 0.0,
    };
    match method {
        VolumeMethod::Exact1d => {
            if torus.dim() != 1 {
                return Err(Error::UnsupportedMethod(format!(
                    "exact-1d volume on a {}-dimensional torus",
                    torus.dim()
                )));
            }
            Ok(VolumeEstimate {
                estimate: arc_union_length(torus.side(), balls),
                half_width: 0.0,
            })
        }
        VolumeMethod::MonteCarlo {
            samples,
            seed,
            stratified,
        } => {
            if samples == 0 {
                return Err(Error::InvalidParams("monte carlo needs at least one sample".into()));
            }
            if balls.is_empty() {
                return Ok(empty);
            }
            if balls.iter().any(|b| b.radius >= torus.max_distance()) {
                return Ok(full);
            }
            let mut index = GridIndex::new(*torus, 1.0);
            for b in balls {
                index.insert(&b.center, -b.radius, 1);
            }
            let mut rng = rng::substream(ReplicateSeed::from(seed), 0, Purpose::Volume);
            let (hits, total) = if stratified {
                stratified_hits(torus, &index, samples, &mut rng)
            } else {
                let hits = (0..samples)
                    .filter(|_| index.covered_level(&torus.uniform_point(&mut rng), 0.0) > 0)
                    .count() as u64;
                (hits, samples)
            };
            let p = hits as f64 / total as f64;
            let n = torus.volume();
            Ok(VolumeEstimate {
                estimate: n * p,
                half_width: Z_99 * n * (p * (1.0 - p) / total as f64).sqrt(),
            })
        }
    }
}

fn stratified_hits<R: Rng>(torus: &Torus, index: &GridIndex, samples: u64, rng: &mut R) -> (u64, u64) {
    let dim = torus.dim() as u32;
    let mut per_axis = (samples as f64).powf(1.0 / f64::from(dim)).floor().max(1.0) as u64;
    while per_axis.pow(dim) < samples {
        per_axis += 1;
    }
    let step = torus.side() / per_axis as f64;
    let total = per_axis.pow(dim);
    let mut hits = 0;
    let mut coords = [0.0; MAX_DIM];
    for flat in 0..total {
        let mut rest = flat;
        for c in coords.iter_mut().take(dim as usize) {
            let cell = rest % per_axis;
            rest /= per_axis;
            *c = (cell as f64 + rng.random::<f64>()) * step;
        }
        let x = torus
            .point(&coords[..dim as usize])
            .expect("sample coordinates are finite");
        if index.covered_level(&x, 0.0) > 0 {
            hits += 1;
        }
    }
    (hits, total)
}

fn arc_union_length(side: f64, balls: &[Ball]) -> f64 {
    let mut intervals = Vec::with_capacity(balls.len() * 2);
    for b in balls {
        let len = 2.0 * b.radius;
        if len >= side {
            return side;
        }
        if len == 0.0 {
            continue;
        }
        let start = wrap(b.center.coords[0] - b.radius, side);
        let end = start + len;
        if end > side {
            intervals.push((start, side));
            intervals.push((0.0, end - side));
        } else {
            intervals.push((start, end));
        }
    }
    intervals.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut total = 0.0;
    let mut current: Option<(f64, f64)> = None;
    for (lo, hi) in intervals {
        match current {
            Some((clo, chi)) if lo <= chi => current = Some((clo, chi.max(hi))),
            Some((clo, chi)) => {
                total += chi - clo;
                current = Some((lo, hi));
            }
            None => current = Some((lo, hi)),
        }
    }
    if let Some((clo, chi)) = current {
        total += chi - clo;
    }
    total.min(side)
}
