//! Cube-revealing exploration deciding `B_r`, and Monte Carlo estimates of
//! revealments, influences and both sides of the OSSS inequality.
//!
//! The exploration runs on `Δ`, the complex on `W^(r)` without the origin.
//! It first reveals every cube within distance `D` of the sphere
//! `∂B(0, s)`, then repeatedly reveals the smallest-index cube that lies
//! within `D` of a vertex of some `q`-simplex whose `G_q`-component (on the
//! revealed cubes) meets the sphere. The decision is `B_r` evaluated on the
//! revealed cubes, with the origin present only if cube 0 was revealed.
//!
//! For `s ≥ D` the decision always equals `B_r` on the full window. For
//! `s < D` the origin's neighbours may all lie beyond the sphere inside a
//! component that never touches it, and the two can differ.

use std::collections::{BTreeSet, HashMap};

use rayon::prelude::*;
use serde::Serialize;

use crate::complex::{build, Complex};
use crate::connection::{ConnectionFamily, MarkLaw};
use crate::error::{Error, Result};
use crate::geometry::{norm, window_for_radius, CubeGrid, CubeIndex, Window};
use crate::graphs::origin_reach;
use crate::sampler::{sample, Realization};
use crate::stats::Estimate;
use crate::stream::derive_seed;

const INFLUENCE_TAG: u64 = 0x494E_464C; // "INFL"

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExplorationTrace {
    pub q: usize,
    pub r: f64,
    pub s: f64,
    /// `T_0`, in increasing index order.
    pub initial: Vec<CubeIndex>,
    /// Cubes revealed after `T_0`, in reveal order.
    pub revealed: Vec<CubeIndex>,
    /// Number of `q`-simplices in `𝒞_m` after `T_0` and after every later
    /// reveal.
    pub frontier_sizes: Vec<usize>,
    pub decision: bool,
}

impl ExplorationTrace {
    /// Every revealed cube, `T_0` first.
    pub fn all_revealed(&self) -> impl Iterator<Item = CubeIndex> + '_ {
        self.initial.iter().chain(&self.revealed).copied()
    }

    pub fn was_revealed(&self, cube: CubeIndex) -> bool {
        self.initial.binary_search(&cube).is_ok() || self.revealed.contains(&cube)
    }

    pub fn revealed_window(&self, template: &Window) -> Window {
        Window::from_cubes(template.grid, self.all_revealed())
    }
}

/// `T_0 = { i ∈ I_r : d(Q_i, ∂B(0, s)) ≤ D }`.
pub fn initial_cubes(window: &Window, s: f64, cutoff: f64) -> Vec<CubeIndex> {
    window
        .cubes()
        .iter()
        .copied()
        .filter(|&c| window.grid.sphere_distance(c, s) <= cutoff)
        .collect()
}

fn check_radii(r: f64, s: f64) -> Result<()> {
    if !(s > 0.0 && s <= r) {
        return Err(Error::InvalidParameter(format!("need 0 < s <= r, got s = {s}, r = {r}")));
    }
    Ok(())
}

struct Dsu {
    parent: Vec<u32>,
    inside: Vec<bool>,
    outside: Vec<bool>,
    members: Vec<Vec<u32>>,
}

impl Dsu {
    fn find(&mut self, mut x: u32) -> u32 {
        while self.parent[x as usize] != x {
            let up = self.parent[self.parent[x as usize] as usize];
            self.parent[x as usize] = up;
            x = up;
        }
        x
    }

    fn straddles(&self, root: u32) -> bool {
        self.inside[root as usize] && self.outside[root as usize]
    }
}

/// Runs the exploration on a complex with the origin that covers `W^(r)`.
pub fn explore_complex(complex: &Complex, q: usize, r: f64, s: f64) -> Result<ExplorationTrace> {
    check_radii(r, s)?;
    if complex.origin().is_none() {
        return Err(Error::MissingOrigin);
    }
    if q >= complex.alpha {
        return Err(Error::DimensionOutOfRange {
            j: q + 1,
            alpha: complex.alpha,
        });
    }
    let cutoff = complex.cutoff;
    let grid = complex.window.grid;
    let window = window_for_radius(r, grid, cutoff)?;
    if !window.is_subset(&complex.window) {
        return Err(Error::WindowTooSmall { r });
    }
    let full = complex.restrict(&window)?;
    let delta = full.without_origin();

    let qs = delta.simplices(q);
    let ups = delta.simplices(q + 1);
    let cube_of = |v: u32| delta.vertices[v as usize].id.cube;

    // simplices waiting on each cube, with the number of unrevealed cubes
    let mut waiting_q: HashMap<CubeIndex, Vec<u32>> = HashMap::new();
    let mut pending_q: Vec<u32> = Vec::with_capacity(qs.len());
    for (i, s) in qs.iter().enumerate() {
        let cubes: BTreeSet<CubeIndex> = s.iter().map(|&v| cube_of(v)).collect();
        pending_q.push(cubes.len() as u32);
        for c in cubes {
            waiting_q.entry(c).or_default().push(i as u32);
        }
    }
    let mut waiting_up: HashMap<CubeIndex, Vec<u32>> = HashMap::new();
    let mut pending_up: Vec<u32> = Vec::with_capacity(ups.len());
    let mut up_facets: Vec<Vec<u32>> = Vec::with_capacity(ups.len());
    for (i, pi) in ups.iter().enumerate() {
        let cubes: BTreeSet<CubeIndex> = pi.iter().map(|&v| cube_of(v)).collect();
        pending_up.push(cubes.len() as u32);
        for c in cubes {
            waiting_up.entry(c).or_default().push(i as u32);
        }
        let facets = (0..pi.len())
            .map(|skip| {
                let f: crate::complex::Simplex = pi
                    .iter()
                    .enumerate()
                    .filter(|(k, _)| *k != skip)
                    .map(|(_, &v)| v)
                    .collect();
                qs.binary_search(&f).expect("complex is downward closed") as u32
            })
            .collect();
        up_facets.push(facets);
    }

    let mut dsu = Dsu {
        parent: (0..qs.len() as u32).collect(),
        inside: vec![false; qs.len()],
        outside: vec![false; qs.len()],
        members: (0..qs.len() as u32).map(|i| vec![i]).collect(),
    };
    for (i, simplex) in qs.iter().enumerate() {
        for &v in simplex {
            let n = norm(delta.position(v));
            dsu.inside[i] |= n <= s;
            dsu.outside[i] |= n >= s;
        }
    }

    let mut revealed: BTreeSet<CubeIndex> = BTreeSet::new();
    let mut eligible: BTreeSet<CubeIndex> = BTreeSet::new();
    let mut in_frontier = vec![false; qs.len()];
    let mut vertex_done = vec![false; delta.vertices.len()];
    let mut frontier = 0usize;
    let mut frontier_sizes = Vec::new();

    // Adds a straddling component's simplices to the frontier and marks the
    // cubes near their vertices as eligible.
    let mut absorb = |root: u32,
                      dsu: &Dsu,
                      revealed: &BTreeSet<CubeIndex>,
                      eligible: &mut BTreeSet<CubeIndex>,
                      frontier: &mut usize| {
        for &m in &dsu.members[root as usize] {
            if in_frontier[m as usize] {
                continue;
            }
            in_frontier[m as usize] = true;
            *frontier += 1;
            for &v in &qs[m as usize] {
                if vertex_done[v as usize] {
                    continue;
                }
                vertex_done[v as usize] = true;
                let x = delta.position(v);
                for c in grid.neighborhood(cube_of(v), 1) {
                    if window.contains_cube(c) && !revealed.contains(&c) && grid.point_distance(c, x) <= cutoff {
                        eligible.insert(c);
                    }
                }
            }
        }
    };

    let reveal = |cube: CubeIndex,
                      dsu: &mut Dsu,
                      touched: &mut Vec<u32>,
                      pending_q: &mut Vec<u32>,
                      pending_up: &mut Vec<u32>| {
        if let Some(list) = waiting_q.get(&cube) {
            for &i in list {
                pending_q[i as usize] -= 1;
                if pending_q[i as usize] == 0 {
                    touched.push(i);
                }
            }
        }
        if let Some(list) = waiting_up.get(&cube) {
            for &p in list {
                pending_up[p as usize] -= 1;
                if pending_up[p as usize] == 0 {
                    let facets = &up_facets[p as usize];
                    let mut a = dsu.find(facets[0]);
                    for &f in &facets[1..] {
                        let b = dsu.find(f);
                        if a == b {
                            continue;
                        }
                        let (big, small) = if dsu.members[a as usize].len() >= dsu.members[b as usize].len() {
                            (a, b)
                        } else {
                            (b, a)
                        };
                        dsu.parent[small as usize] = big;
                        let moved = std::mem::take(&mut dsu.members[small as usize]);
                        dsu.members[big as usize].extend(moved);
                        dsu.inside[big as usize] |= dsu.inside[small as usize];
                        dsu.outside[big as usize] |= dsu.outside[small as usize];
                        a = big;
                    }
                    touched.push(a);
                }
            }
        }
    };

    let initial = initial_cubes(&window, s, cutoff);
    let mut touched = Vec::new();
    for &c in &initial {
        revealed.insert(c);
        reveal(c, &mut dsu, &mut touched, &mut pending_q, &mut pending_up);
    }
    let mut order = Vec::new();
    loop {
        // Simplices only activate once all their cubes are revealed, so
        // components with both flags are exactly the straddling components
        // of G_q on the revealed cubes.
        for t in touched.drain(..) {
            let root = dsu.find(t);
            if dsu.straddles(root) {
                absorb(root, &dsu, &revealed, &mut eligible, &mut frontier);
            }
        }
        frontier_sizes.push(frontier);
        eligible.retain(|c| !revealed.contains(c));
        let Some(next) = eligible.pop_first() else { break };
        revealed.insert(next);
        order.push(next);
        reveal(next, &mut dsu, &mut touched, &mut pending_q, &mut pending_up);
    }

    let decision = revealed.contains(&0) && {
        let sub = full.retain_vertices(Window::from_cubes(grid, revealed.iter().copied()), |p| {
            revealed.contains(&p.id.cube)
        });
        origin_reach(&sub, q)?.is_some_and(|reach| reach > r)
    };
    Ok(ExplorationTrace {
        q,
        r,
        s,
        initial,
        revealed: order,
        frontier_sizes,
        decision,
    })
}

/// Builds `Δ^0` on the realization and explores it.
pub fn explore(realization: &Realization, family: &ConnectionFamily, q: usize, r: f64, s: f64) -> Result<ExplorationTrace> {
    check_radii(r, s)?;
    explore_complex(&build(realization, family)?, q, r, s)
}

/// Model parameters shared by the Monte Carlo estimators.
#[derive(Clone, Copy, Debug)]
pub struct Setup<'a> {
    pub family: &'a ConnectionFamily,
    pub law: &'a MarkLaw,
    pub dim: usize,
    pub beta: f64,
    pub q: usize,
    pub r: f64,
}

impl Setup<'_> {
    /// `W^(r)` on the grid with half edge `D`.
    pub fn window(&self) -> Result<Window> {
        let grid = CubeGrid::new(self.dim, self.family.cutoff)?;
        window_for_radius(self.r, grid, self.family.cutoff)
    }

    /// Replicate `k` with the origin added.
    pub fn realization(&self, window: &Window, master_seed: u64, k: u64) -> Result<Realization> {
        sample(derive_seed(master_seed, &[k]), self.beta, window, self.law, true)
    }

    /// Whether `B_r` occurs on the realization.
    pub fn occurs(&self, realization: &Realization) -> Result<bool> {
        let complex = build(realization, self.family)?;
        Ok(origin_reach(&complex, self.q)?.is_some_and(|reach| reach > self.r))
    }

    fn check(&self, n: u64) -> Result<Window> {
        self.family.validate()?;
        self.family.check_marks(self.law)?;
        if n == 0 {
            return Err(Error::InvalidParameter("n_samples must be at least 1".into()));
        }
        self.window()
    }
}

fn influence_salt(master_seed: u64, k: u64, cube: CubeIndex) -> u64 {
    derive_seed(master_seed, &[INFLUENCE_TAG, k, cube]) | 1
}

/// Outcome of resampling one cube.
fn flip(setup: &Setup<'_>, realization: &Realization, before: bool, master_seed: u64, k: u64, cube: CubeIndex) -> Result<Flip> {
    let copy = realization.resample_cube(cube, influence_salt(master_seed, k, cube), setup.law)?;
    Ok(match (before, setup.occurs(&copy)?) {
        (false, true) => Flip::Up,
        (true, false) => Flip::Down,
        _ => Flip::None,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Flip {
    None,
    Up,
    Down,
}

/// Estimates `δ_i(s)`, the probability that cube `i` is revealed.
pub fn revealment(setup: &Setup<'_>, s: f64, cube: CubeIndex, n: u64, master_seed: u64) -> Result<Estimate> {
    check_radii(setup.r, s)?;
    let window = setup.check(n)?;
    if !window.contains_cube(cube) {
        return Err(Error::CubeOutsideWindow(cube));
    }
    let hits: Vec<bool> = (0..n)
        .into_par_iter()
        .map(|k| {
            let real = setup.realization(&window, master_seed, k)?;
            Ok(explore(&real, setup.family, setup.q, setup.r, s)?.was_revealed(cube))
        })
        .collect::<Result<_>>()?;
    Ok(Estimate::from_counts(hits.iter().filter(|&&h| h).count() as u64, n))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct InfluenceEstimate {
    pub cube: CubeIndex,
    /// Disagreement frequency `ζ̂_i`.
    pub estimate: Estimate,
    /// Samples where the original misses `B_r` and the copy hits it.
    pub up: u64,
    /// Samples where the original hits `B_r` and the copy misses it.
    pub down: u64,
}

/// Estimates `ζ_i`: cube `i` is replaced by an independent copy and the two
/// `B_r` indicators are compared.
pub fn influence(setup: &Setup<'_>, cube: CubeIndex, n: u64, master_seed: u64) -> Result<InfluenceEstimate> {
    let window = setup.check(n)?;
    if !window.contains_cube(cube) {
        return Err(Error::CubeOutsideWindow(cube));
    }
    let flips: Vec<Flip> = (0..n)
        .into_par_iter()
        .map(|k| {
            let real = setup.realization(&window, master_seed, k)?;
            let before = setup.occurs(&real)?;
            flip(setup, &real, before, master_seed, k, cube)
        })
        .collect::<Result<_>>()?;
    let up = flips.iter().filter(|&&f| f == Flip::Up).count() as u64;
    let down = flips.iter().filter(|&&f| f == Flip::Down).count() as u64;
    Ok(InfluenceEstimate {
        cube,
        estimate: Estimate::from_counts(up + down, n),
        up,
        down,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CubeTerm {
    pub cube: CubeIndex,
    pub revealment: f64,
    pub influence: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OsssReport {
    pub beta: f64,
    pub q: usize,
    pub r: f64,
    pub s: f64,
    pub theta: Estimate,
    /// `θ̂(1 − θ̂)`.
    pub lhs: f64,
    /// `Σ_i δ̂_i ζ̂_i`.
    pub rhs: f64,
    /// `rhs − lhs`.
    pub margin: f64,
    /// Standard error of the margin.
    pub se: f64,
    /// `lhs ≤ rhs + 3·se`.
    pub holds: bool,
    pub terms: Vec<CubeTerm>,
}

/// Estimates both sides of `θ_r(1 − θ_r) ≤ Σ_i δ_i(s) ζ_i` from one set of
/// replicates: each replicate is explored, and every cube of `I_r` is
/// resampled once.
pub fn osss_check(setup: &Setup<'_>, s: f64, n: u64, master_seed: u64) -> Result<OsssReport> {
    check_radii(setup.r, s)?;
    let window = setup.check(n)?;
    let cubes: Vec<CubeIndex> = window.cubes().iter().copied().collect();
    struct Row {
        decision: bool,
        revealed: Vec<bool>,
        flipped: Vec<bool>,
    }
    let rows: Vec<Row> = (0..n)
        .into_par_iter()
        .map(|k| {
            let real = setup.realization(&window, master_seed, k)?;
            let trace = explore(&real, setup.family, setup.q, setup.r, s)?;
            let decision = trace.decision;
            let revealed = cubes.iter().map(|&c| trace.was_revealed(c)).collect();
            let flipped = cubes
                .iter()
                .map(|&c| Ok(flip(setup, &real, decision, master_seed, k, c)? != Flip::None))
                .collect::<Result<_>>()?;
            Ok(Row {
                decision,
                revealed,
                flipped,
            })
        })
        .collect::<Result<_>>()?;

    let nf = n as f64;
    let theta = Estimate::from_counts(rows.iter().filter(|r| r.decision).count() as u64, n);
    let t = theta.p_hat;
    let lhs = t * (1.0 - t);
    let lhs_var = (1.0 - 2.0 * t).powi(2) * t * (1.0 - t) / nf;
    let mut rhs = 0.0;
    let mut rhs_var = 0.0;
    let mut terms = Vec::with_capacity(cubes.len());
    for (i, &cube) in cubes.iter().enumerate() {
        let d = rows.iter().filter(|r| r.revealed[i]).count() as f64 / nf;
        let z = rows.iter().filter(|r| r.flipped[i]).count() as f64 / nf;
        rhs += d * z;
        rhs_var += z * z * d * (1.0 - d) / nf + d * d * z * (1.0 - z) / nf;
        terms.push(CubeTerm {
            cube,
            revealment: d,
            influence: z,
        });
    }
    let se = (lhs_var + rhs_var).sqrt();
    Ok(OsssReport {
        beta: setup.beta,
        q: setup.q,
        r: setup.r,
        s,
        theta,
        lhs,
        rhs,
        margin: rhs - lhs,
        se,
        holds: lhs <= rhs + 3.0 * se,
        terms,
    })
}
