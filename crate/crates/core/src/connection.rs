//! Marks, mark laws and the connection functions `φ_1 … φ_α`.
//!
//! A family also carries the cutoff `D` beyond which no `(q+1)`-simplex can
//! form, and declares the lower bound `(δ, ε, A)` it guarantees for close
//! tuples. [`verify_v1_v2`] probes both declarations on random tuples.

use std::fmt;
use std::sync::Arc;

use rand::Rng;
use serde::{Deserialize, Serialize};
use smallvec::SmallVec;

use crate::error::{Error, Result};
use crate::geometry::{diam, dist, Point};
use crate::stream::rng_for;

/// Slack used when deciding whether balls have a common point.
pub const INTERSECTION_SLACK: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", content = "value", rename_all = "snake_case")]
pub enum Mark {
    Unit,
    /// Grain `B(0, ρ)`.
    Radius(f64),
    Scalar(f64),
}

impl Mark {
    pub fn value(&self) -> Option<f64> {
        match *self {
            Mark::Unit => None,
            Mark::Radius(r) | Mark::Scalar(r) => Some(r),
        }
    }
}

/// Distribution of marks.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MarkLaw {
    #[default]
    Unit,
    FixedRadius { radius: f64 },
    UniformRadius { min: f64, max: f64 },
    UniformScalar { lo: f64, hi: f64 },
}

impl MarkLaw {
    /// Deterministic laws consume no randomness.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Mark {
        match *self {
            MarkLaw::Unit => Mark::Unit,
            MarkLaw::FixedRadius { radius } => Mark::Radius(radius),
            MarkLaw::UniformRadius { min, max } => Mark::Radius(min + (max - min) * rng.random::<f64>()),
            MarkLaw::UniformScalar { lo, hi } => Mark::Scalar(lo + (hi - lo) * rng.random::<f64>()),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            MarkLaw::Unit => true,
            MarkLaw::FixedRadius { radius } => radius >= 0.0 && radius.is_finite(),
            MarkLaw::UniformRadius { min, max } => min >= 0.0 && max >= min && max.is_finite(),
            MarkLaw::UniformScalar { lo, hi } => hi >= lo && lo.is_finite() && hi.is_finite(),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidParameter(format!("invalid mark law {self:?}")))
        }
    }

    /// Essential supremum of the grain radius, if the law has radius marks.
    pub fn max_radius(&self) -> Option<f64> {
        match *self {
            MarkLaw::FixedRadius { radius } => Some(radius),
            MarkLaw::UniformRadius { max, .. } => Some(max),
            _ => None,
        }
    }
}

/// Interval predicate on mark values; `Unit` marks always belong.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MarkSet {
    pub lo: f64,
    pub hi: f64,
}

impl MarkSet {
    pub const ALL: MarkSet = MarkSet {
        lo: f64::NEG_INFINITY,
        hi: f64::INFINITY,
    };

    pub fn contains(&self, mark: &Mark) -> bool {
        match mark.value() {
            None => true,
            Some(v) => self.lo <= v && v <= self.hi,
        }
    }
}

/// Declared lower bound: `κ_{q+1} ≥ ε` whenever the diameter is at most `δ`
/// and every mark lies in `A`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct V1Params {
    pub delta: f64,
    pub epsilon: f64,
    pub marks: MarkSet,
}

/// Monotonically decreasing profile `ϕ: [0, ∞) → [0, 1]` of the diameter.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "snake_case")]
pub enum Kernel {
    Constant { value: f64 },
    Step { value: f64, width: f64 },
    Exponential { amplitude: f64, scale: f64 },
}

impl Kernel {
    pub fn eval(&self, diameter: f64) -> f64 {
        match *self {
            Kernel::Constant { value } => value,
            Kernel::Step { value, width } => {
                if diameter <= width {
                    value
                } else {
                    0.0
                }
            }
            Kernel::Exponential { amplitude, scale } => amplitude * (-diameter / scale).exp(),
        }
    }

    /// Largest diameter at which the profile is still positive, capped at `cap`.
    fn positive_up_to(&self, cap: f64) -> f64 {
        match *self {
            Kernel::Step { width, .. } => width.min(cap),
            _ => cap,
        }
    }

    fn is_indicator(&self) -> bool {
        match *self {
            Kernel::Constant { value } => value == 0.0 || value == 1.0,
            Kernel::Step { value, .. } => value == 0.0 || value == 1.0,
            Kernel::Exponential { amplitude, .. } => amplitude == 0.0,
        }
    }

    fn validate(&self) -> Result<()> {
        let ok = match *self {
            Kernel::Constant { value } => (0.0..=1.0).contains(&value),
            Kernel::Step { value, width } => (0.0..=1.0).contains(&value) && width >= 0.0,
            Kernel::Exponential { amplitude, scale } => (0.0..=1.0).contains(&amplitude) && scale > 0.0,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidParameter(format!("kernel {self:?} does not map into [0, 1]")))
        }
    }
}

/// A vertex as seen by a connection function.
pub type Site<'a> = (&'a [f64], Mark);

/// User-supplied connection functions.
pub trait ConnectionRule: Send + Sync {
    /// `φ_j` on `j + 1` sites.
    fn phi(&self, j: usize, sites: &[Site<'_>]) -> f64;

    /// Whether every `φ_j` only takes the values 0 and 1.
    fn is_indicator(&self) -> bool {
        false
    }

    /// Declared lower bound for `(q+1)`-simplices.
    fn v1(&self, q: usize) -> V1Params;
}

#[derive(Clone)]
pub struct CustomRule(pub Arc<dyn ConnectionRule>);

impl fmt::Debug for CustomRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("CustomRule")
    }
}

impl PartialEq for CustomRule {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.0, &other.0)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FamilyKind {
    /// `φ_j = 1{diam ≤ 2·radius}`.
    VietorisRips { radius: f64 },
    /// `φ_j = 1{⋂ B(x_i, radius) ≠ ∅}`.
    Cech { radius: f64 },
    /// Ball grains given by `Radius` marks; `inner_radius` is the declared
    /// `r_0` with positive mass, `outer_radius` the almost sure bound `R`.
    BooleanBalls { inner_radius: f64, outer_radius: f64 },
    /// `φ_j = ϕ_j(diam)` with the last function additionally cut at `D`.
    DiamKernel { kernels: Vec<Kernel> },
    #[serde(skip)]
    Custom(CustomRule),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConnectionFamily {
    #[serde(flatten)]
    pub kind: FamilyKind,
    pub alpha: usize,
    /// The cutoff `D`; also the half edge of the cube grid.
    pub cutoff: f64,
}

impl ConnectionFamily {
    pub fn vietoris_rips(radius: f64, alpha: usize) -> Self {
        Self {
            kind: FamilyKind::VietorisRips { radius },
            alpha,
            cutoff: 2.0 * radius,
        }
    }

    pub fn cech(radius: f64, alpha: usize) -> Self {
        Self {
            kind: FamilyKind::Cech { radius },
            alpha,
            cutoff: 2.0 * radius,
        }
    }

    pub fn boolean_balls(inner_radius: f64, outer_radius: f64, alpha: usize) -> Self {
        Self {
            kind: FamilyKind::BooleanBalls {
                inner_radius,
                outer_radius,
            },
            alpha,
            cutoff: 2.0 * outer_radius,
        }
    }

    pub fn diam_kernel(kernels: Vec<Kernel>, cutoff: f64) -> Self {
        let alpha = kernels.len();
        Self {
            kind: FamilyKind::DiamKernel { kernels },
            alpha,
            cutoff,
        }
    }

    pub fn custom(rule: Arc<dyn ConnectionRule>, alpha: usize, cutoff: f64) -> Self {
        Self {
            kind: FamilyKind::Custom(CustomRule(rule)),
            alpha,
            cutoff,
        }
    }

    pub fn with_cutoff(mut self, cutoff: f64) -> Self {
        self.cutoff = cutoff;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.alpha == 0 {
            return Err(Error::InvalidParameter("alpha must be at least 1".into()));
        }
        if !(self.cutoff > 0.0 && self.cutoff.is_finite()) {
            return Err(Error::InvalidParameter(format!("cutoff D must be positive, got {}", self.cutoff)));
        }
        match &self.kind {
            FamilyKind::VietorisRips { radius } | FamilyKind::Cech { radius } if !(*radius > 0.0) => {
                Err(Error::InvalidParameter(format!("radius must be positive, got {radius}")))
            }
            FamilyKind::BooleanBalls {
                inner_radius,
                outer_radius,
            } if !(*inner_radius > 0.0 && outer_radius >= inner_radius) => Err(Error::InvalidParameter(
                format!("need 0 < r_0 <= R, got r_0 = {inner_radius}, R = {outer_radius}"),
            )),
            FamilyKind::DiamKernel { kernels } => {
                if kernels.len() != self.alpha {
                    return Err(Error::InvalidParameter("one kernel per dimension 1..=alpha".into()));
                }
                kernels.iter().try_for_each(Kernel::validate)
            }
            _ => Ok(()),
        }
    }

    /// Checks that a mark law fits the family (radius marks for grains, and
    /// the declared bound `R`).
    pub fn check_marks(&self, law: &MarkLaw) -> Result<()> {
        law.validate()?;
        if let FamilyKind::BooleanBalls { outer_radius, .. } = self.kind {
            match law.max_radius() {
                Some(r) if r <= outer_radius => Ok(()),
                Some(r) => Err(Error::InvalidParameter(format!(
                    "grain radius {r} exceeds the declared bound R = {outer_radius}"
                ))),
                None => Err(Error::InvalidParameter("ball grains need radius marks".into())),
            }
        } else {
            Ok(())
        }
    }

    pub fn is_indicator(&self) -> bool {
        match &self.kind {
            FamilyKind::VietorisRips { .. } | FamilyKind::Cech { .. } | FamilyKind::BooleanBalls { .. } => true,
            FamilyKind::DiamKernel { kernels } => kernels.iter().all(Kernel::is_indicator),
            FamilyKind::Custom(rule) => rule.0.is_indicator(),
        }
    }

    /// Whether `φ_1` can be positive beyond `D`, so that the builder's
    /// truncated edge function `φ_1·1{‖x−y‖ ≤ D}` differs from `φ_1`.
    pub fn edge_truncated(&self) -> bool {
        let d = self.cutoff;
        match &self.kind {
            FamilyKind::VietorisRips { radius } | FamilyKind::Cech { radius } => 2.0 * radius > d,
            FamilyKind::BooleanBalls { outer_radius, .. } => 2.0 * outer_radius > d,
            FamilyKind::DiamKernel { kernels } => {
                self.alpha > 1
                    && match kernels[0] {
                        Kernel::Step { value, width } => value > 0.0 && width > d,
                        Kernel::Constant { value } => value > 0.0,
                        Kernel::Exponential { amplitude, .. } => amplitude > 0.0,
                    }
            }
            FamilyKind::Custom(_) => true,
        }
    }

    /// `φ_j` evaluated on `j + 1` sites.
    pub fn phi(&self, j: usize, sites: &[Site<'_>]) -> Result<f64> {
        if j == 0 || j > self.alpha {
            return Err(Error::DimensionOutOfRange { j, alpha: self.alpha });
        }
        if sites.len() != j + 1 {
            return Err(Error::VertexCount {
                expected: j + 1,
                found: sites.len(),
            });
        }
        Ok(self.phi_unchecked(j, sites))
    }

    pub(crate) fn phi_unchecked(&self, j: usize, sites: &[Site<'_>]) -> f64 {
        let positions = || sites.iter().map(|s| s.0).collect::<SmallVec<[&[f64]; 5]>>();
        match &self.kind {
            FamilyKind::VietorisRips { radius } => indicator(diam(&positions()) <= 2.0 * radius),
            FamilyKind::Cech { radius } => {
                let radii: SmallVec<[f64; 5]> = SmallVec::from_elem(*radius, sites.len());
                indicator(balls_intersect(&positions(), &radii))
            }
            FamilyKind::BooleanBalls { .. } => {
                let radii: SmallVec<[f64; 5]> = sites
                    .iter()
                    .map(|s| match s.1 {
                        Mark::Radius(r) => r,
                        _ => 0.0,
                    })
                    .collect();
                indicator(balls_intersect(&positions(), &radii))
            }
            FamilyKind::DiamKernel { kernels } => {
                let dm = diam(&positions());
                let v = kernels[j - 1].eval(dm);
                if j == self.alpha && dm > self.cutoff {
                    0.0
                } else {
                    v
                }
            }
            FamilyKind::Custom(rule) => rule.0.phi(j, sites),
        }
    }

    /// `κ_j`: product of `φ_{|I|−1}` over all sub-tuples `I` with `|I| ≥ 2`.
    pub fn kappa(&self, j: usize, sites: &[Site<'_>]) -> Result<f64> {
        if j == 0 || j > self.alpha {
            return Err(Error::DimensionOutOfRange { j, alpha: self.alpha });
        }
        if sites.len() != j + 1 {
            return Err(Error::VertexCount {
                expected: j + 1,
                found: sites.len(),
            });
        }
        let n = sites.len();
        let mut product = 1.0;
        let mut sub: SmallVec<[Site<'_>; 5]> = SmallVec::new();
        for mask in 1u32..(1 << n) {
            let size = mask.count_ones() as usize;
            if size < 2 {
                continue;
            }
            sub.clear();
            sub.extend((0..n).filter(|i| mask & (1 << i) != 0).map(|i| sites[i]));
            product *= self.phi_unchecked(size - 1, &sub);
            if product == 0.0 {
                break;
            }
        }
        Ok(product)
    }

    /// Declared lower bound for `κ_{q+1}`.
    pub fn v1(&self, q: usize) -> V1Params {
        match &self.kind {
            FamilyKind::VietorisRips { radius } => V1Params {
                delta: 2.0 * radius,
                epsilon: 1.0,
                marks: MarkSet::ALL,
            },
            FamilyKind::Cech { radius } => V1Params {
                delta: *radius,
                epsilon: 1.0,
                marks: MarkSet::ALL,
            },
            FamilyKind::BooleanBalls { inner_radius, .. } => V1Params {
                delta: *inner_radius,
                epsilon: 1.0,
                marks: MarkSet {
                    lo: *inner_radius,
                    hi: f64::INFINITY,
                },
            },
            FamilyKind::DiamKernel { kernels } => {
                let top = (q + 1).min(kernels.len());
                let b = kernels[..top]
                    .iter()
                    .fold(self.cutoff, |acc, k| k.positive_up_to(acc));
                // one factor ϕ_{k−1}(b) for each of the C(q+2, k) sub-tuples of size k
                let mut epsilon = 1.0;
                for size in 2..=q + 2 {
                    let count = binomial(q + 2, size) as i32;
                    epsilon *= kernels[(size - 2).min(kernels.len() - 1)].eval(b).powi(count);
                }
                V1Params {
                    delta: b,
                    epsilon,
                    marks: MarkSet::ALL,
                }
            }
            FamilyKind::Custom(rule) => rule.0.v1(q),
        }
    }
}

fn indicator(b: bool) -> f64 {
    if b {
        1.0
    } else {
        0.0
    }
}

pub(crate) fn binomial(n: usize, k: usize) -> u64 {
    (0..k).fold(1u64, |acc, i| acc * (n - i) as u64 / (i + 1) as u64)
}

/// Whether the closed balls `B(centers[i], radii[i])` share a point.
pub fn balls_intersect(centers: &[&[f64]], radii: &[f64]) -> bool {
    min_max_excess(centers, radii) <= INTERSECTION_SLACK
}

/// `min_y max_i (‖y − x_i‖ − ρ_i)`; non-positive exactly when the balls meet.
///
/// The minimiser is pinned by at most `d + 1` balls whose weighted distance
/// to it is equal, so every affinely independent support set is solved in
/// closed form and the excess is evaluated at each candidate point.
pub fn min_max_excess(centers: &[&[f64]], radii: &[f64]) -> f64 {
    let n = centers.len();
    assert!(n > 0 && radii.len() == n);
    let dim = centers[0].len();
    let excess = |y: &[f64]| {
        centers
            .iter()
            .zip(radii)
            .map(|(c, r)| dist(y, c) - r)
            .fold(f64::NEG_INFINITY, f64::max)
    };
    let mut best = f64::INFINITY;
    let max_support = n.min(dim + 1);
    let mut support: SmallVec<[usize; 5]> = SmallVec::new();
    for mask in 1u32..(1 << n) {
        let size = mask.count_ones() as usize;
        if size > max_support {
            continue;
        }
        support.clear();
        support.extend((0..n).filter(|i| mask & (1 << i) != 0));
        for y in support_candidates(centers, radii, &support) {
            best = best.min(excess(&y));
        }
    }
    best
}

fn support_candidates(centers: &[&[f64]], radii: &[f64], support: &[usize]) -> SmallVec<[Point; 2]> {
    let x0 = centers[support[0]];
    let r0 = radii[support[0]];
    let k = support.len() - 1;
    if k == 0 {
        return smallvec::smallvec![x0.iter().copied().collect()];
    }
    let edges: SmallVec<[Point; 4]> = support[1..]
        .iter()
        .map(|&i| centers[i].iter().zip(x0).map(|(a, b)| a - b).collect())
        .collect();
    let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
    let mut gram = vec![0.0; k * k];
    let mut p = vec![0.0; k];
    let mut g = vec![0.0; k];
    for i in 0..k {
        for j in 0..k {
            gram[i * k + j] = dot(&edges[i], &edges[j]);
        }
        let ri = radii[support[i + 1]];
        p[i] = 0.5 * (gram[i * k + i] - ri * ri + r0 * r0);
        g[i] = ri - r0;
    }
    let Some((alpha, beta)) = solve_two(&gram, &p, &g, k) else {
        return SmallVec::new();
    };
    let dim = x0.len();
    let mut a: Point = SmallVec::from_elem(0.0, dim);
    let mut b: Point = SmallVec::from_elem(0.0, dim);
    for i in 0..k {
        for c in 0..dim {
            a[c] += alpha[i] * edges[i][c];
            b[c] -= beta[i] * edges[i][c];
        }
    }
    // ‖a + t b‖ = r0 + t
    let qa = dot(&b, &b) - 1.0;
    let qb = 2.0 * (dot(&a, &b) - r0);
    let qc = dot(&a, &a) - r0 * r0;
    let mut roots: SmallVec<[f64; 2]> = SmallVec::new();
    if qa.abs() < 1e-12 {
        if qb.abs() > 1e-300 {
            roots.push(-qc / qb);
        }
    } else {
        let disc = qb * qb - 4.0 * qa * qc;
        let disc = if disc < 0.0 && disc > -1e-12 { 0.0 } else { disc };
        if disc >= 0.0 {
            let s = disc.sqrt();
            roots.push((-qb + s) / (2.0 * qa));
            roots.push((-qb - s) / (2.0 * qa));
        }
    }
    roots
        .into_iter()
        .map(|t| x0.iter().enumerate().map(|(c, v)| v + a[c] + t * b[c]).collect())
        .collect()
}

/// Solves `G·x = p` and `G·y = g` by Gaussian elimination with partial pivoting.
fn solve_two(gram: &[f64], p: &[f64], g: &[f64], k: usize) -> Option<(Vec<f64>, Vec<f64>)> {
    let w = k + 2;
    let mut m = vec![0.0; k * w];
    let scale = gram.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
    if scale == 0.0 {
        return None;
    }
    for i in 0..k {
        m[i * w..i * w + k].copy_from_slice(&gram[i * k..i * k + k]);
        m[i * w + k] = p[i];
        m[i * w + k + 1] = g[i];
    }
    for col in 0..k {
        let pivot = (col..k).max_by(|&a, &b| m[a * w + col].abs().total_cmp(&m[b * w + col].abs()))?;
        if m[pivot * w + col].abs() < 1e-12 * scale {
            return None;
        }
        if pivot != col {
            for c in 0..w {
                m.swap(pivot * w + c, col * w + c);
            }
        }
        for row in 0..k {
            if row != col {
                let f = m[row * w + col] / m[col * w + col];
                if f != 0.0 {
                    for c in col..w {
                        m[row * w + c] -= f * m[col * w + c];
                    }
                }
            }
        }
    }
    let x = (0..k).map(|i| m[i * w + k] / m[i * w + i]).collect();
    let y = (0..k).map(|i| m[i * w + k + 1] / m[i * w + i]).collect();
    Some((x, y))
}

/// A tuple on which a declared bound failed.
#[derive(Clone, Debug, Serialize)]
pub struct Counterexample {
    pub condition: &'static str,
    pub positions: Vec<Vec<f64>>,
    pub marks: Vec<Mark>,
    pub kappa: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct BoundsReport {
    pub q: usize,
    pub v1_ok: bool,
    pub v2_ok: bool,
    /// Every evaluated `φ_j` stayed inside `[0, 1]`.
    pub range_ok: bool,
    pub v1_samples: usize,
    pub v2_samples: usize,
    pub counterexamples: Vec<Counterexample>,
}

const MAX_WITNESSES: usize = 8;

/// Probes the declared bounds `ε·1{diam ≤ δ, marks ∈ A} ≤ κ_{q+1} ≤ 1{diam ≤ D}`
/// on `budget` random tuples, half of them with diameter in `(0, δ]` and marks
/// drawn from `A`, half with diameter in `(D, 3D]`.
///
/// Evaluates the family's own `φ_1`, not the truncated edge function the
/// builder uses.
pub fn verify_v1_v2(
    family: &ConnectionFamily,
    law: &MarkLaw,
    dim: usize,
    q: usize,
    budget: usize,
    seed: u64,
) -> Result<BoundsReport> {
    if budget == 0 {
        return Err(Error::InvalidParameter("sample budget must be at least 1".into()));
    }
    if q + 1 > family.alpha {
        return Err(Error::DimensionOutOfRange {
            j: q + 1,
            alpha: family.alpha,
        });
    }
    let v1 = family.v1(q);
    let mut rng = rng_for(seed, &[0x5631_5632, q as u64]);
    let k = q + 2;
    let mut report = BoundsReport {
        q,
        v1_ok: true,
        v2_ok: true,
        range_ok: true,
        v1_samples: 0,
        v2_samples: 0,
        counterexamples: Vec::new(),
    };
    let mut positions: Vec<Point> = Vec::with_capacity(k);
    let mut marks: Vec<Mark> = Vec::with_capacity(k);
    for sample in 0..budget {
        let lower = sample % 2 == 0;
        let target = if lower {
            v1.delta * (1.0 - rng.random::<f64>())
        } else {
            family.cutoff * (1.0 + 2.0 * (1.0 - rng.random::<f64>()))
        };
        random_tuple(&mut rng, dim, k, target, &mut positions);
        marks.clear();
        if lower {
            let mut tries = 0;
            while marks.len() < k {
                let m = law.sample(&mut rng);
                if v1.marks.contains(&m) {
                    marks.push(m);
                }
                tries += 1;
                if tries > 10_000 {
                    return Err(Error::InvalidParameter("the mark set A appears to have no mass".into()));
                }
            }
        } else {
            marks.extend((0..k).map(|_| law.sample(&mut rng)));
        }
        let sites: Vec<Site<'_>> = positions.iter().map(|p| p.as_slice()).zip(marks.iter().copied()).collect();
        for size in 2..=k {
            let phi = family.phi_unchecked(size - 1, &sites[..size]);
            if !(0.0..=1.0).contains(&phi) {
                report.range_ok = false;
            }
        }
        let kappa = family.kappa(q + 1, &sites)?;
        let violated = if lower {
            report.v1_samples += 1;
            kappa < v1.epsilon - INTERSECTION_SLACK
        } else {
            report.v2_samples += 1;
            kappa > 0.0
        };
        if violated {
            if lower {
                report.v1_ok = false;
            } else {
                report.v2_ok = false;
            }
            if report.counterexamples.len() < MAX_WITNESSES {
                report.counterexamples.push(Counterexample {
                    condition: if lower { "v1" } else { "v2" },
                    positions: positions.iter().map(|p| p.to_vec()).collect(),
                    marks: marks.clone(),
                    kappa,
                });
            }
        }
    }
    Ok(report)
}

/// `k` points near a random centre, rescaled to the given diameter.
fn random_tuple<R: Rng + ?Sized>(rng: &mut R, dim: usize, k: usize, diameter: f64, out: &mut Vec<Point>) {
    loop {
        out.clear();
        for _ in 0..k {
            out.push((0..dim).map(|_| 2.0 * rng.random::<f64>() - 1.0).collect());
        }
        let current = diam(out);
        if current > 1e-6 {
            let scale = diameter / current;
            let shift: Point = (0..dim).map(|_| 20.0 * rng.random::<f64>() - 10.0).collect();
            for p in out.iter_mut() {
                for (c, s) in p.iter_mut().zip(&shift) {
                    *c = *c * scale + s;
                }
            }
            // rescaling can round the diameter across the target
            let d = diam(out);
            if (d - diameter).abs() <= 1e-9 * diameter.max(1.0) {
                return;
            }
        }
    }
}
