//! Construction of the random simplicial complex from a realization.
//!
//! A candidate simplex `σ` is kept when `u(ρ) ≤ φ_{|ρ|−1}(x_ρ)` for every
//! sub-simplex `ρ` with at least two vertices. Edges are decided first;
//! a `j`-simplex is only considered once all of its facets are present, so
//! the test reduces to `u(σ) ≤ φ_j(x_σ)` on top of the facet decisions.
//!
//! Pairs are only formed between points at distance at most `D`, i.e. the
//! builder uses the edge function `φ_1·1{‖x−y‖ ≤ D}`.

use std::collections::HashMap;
use std::ops::Range;

use serde::Serialize;
use smallvec::SmallVec;

use crate::connection::{ConnectionFamily, FamilyKind, Mark, Site};
use crate::error::{Error, Result};
use crate::geometry::{dist2, CubeIndex, Window};
use crate::sampler::{MarkedPoint, Realization};
use crate::stream::{unit_open_closed, Hasher};

/// Sorted vertex indices into [`Complex::vertices`].
pub type Simplex = SmallVec<[u32; 4]>;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Complex {
    pub vertices: Vec<MarkedPoint>,
    pub window: Window,
    pub alpha: usize,
    pub cutoff: f64,
    /// The family's `φ_1` was truncated at `D` during construction.
    pub edge_truncated: bool,
    /// `simplices[j]` holds the `j`-simplices in lexicographic order.
    simplices: Vec<Vec<Simplex>>,
}

/// The acceptance uniform `u(σ)` in (0, 1].
///
/// Drawn from the stream of the vertex with the greatest coordinates, indexed
/// by the dimension and the coordinates of the remaining vertices in
/// increasing order.
pub fn acceptance_uniform(vertices: &[&MarkedPoint]) -> f64 {
    let owner = vertices.iter().max_by_key(|p| p.id).expect("nonempty simplex");
    let mut others: SmallVec<[_; 4]> = vertices.iter().filter(|p| p.id != owner.id).map(|p| p.id).collect();
    others.sort();
    let mut h = Hasher::keyed(owner.stream_key);
    h.word(others.len() as u64);
    for id in others {
        h.word(id.cube).word(id.rank as u64);
    }
    unit_open_closed(h.finish())
}

fn accepted(family: &ConnectionFamily, vertices: &[&MarkedPoint]) -> bool {
    let j = vertices.len() - 1;
    let sites: SmallVec<[Site<'_>; 5]> = vertices.iter().map(|p| (p.position.as_slice(), p.mark)).collect();
    let phi = family.phi_unchecked(j, &sites);
    if phi >= 1.0 {
        true
    } else if phi <= 0.0 {
        false
    } else {
        acceptance_uniform(vertices) <= phi
    }
}

fn check_grid(window: &Window, cutoff: f64) -> Result<()> {
    let half = window.grid.half;
    if (half - cutoff).abs() > 1e-12 * cutoff.max(1.0) {
        return Err(Error::GridMismatch {
            expected: cutoff,
            found: half,
        });
    }
    Ok(())
}

/// Builds the complex on all points of the realization.
pub fn build(realization: &Realization, family: &ConnectionFamily) -> Result<Complex> {
    family.validate()?;
    check_grid(&realization.window, family.cutoff)?;
    if let FamilyKind::BooleanBalls { outer_radius, .. } = family.kind {
        for p in &realization.points {
            match p.mark {
                Mark::Radius(r) if (0.0..=outer_radius).contains(&r) => {}
                other => {
                    return Err(Error::InvalidParameter(format!(
                        "grain mark {other:?} violates 0 <= radius <= R = {outer_radius}"
                    )))
                }
            }
        }
    }
    let points = &realization.points;
    let n = points.len();
    let grid = realization.window.grid;
    let cutoff2 = family.cutoff * family.cutoff;

    let mut ranges: HashMap<CubeIndex, Range<usize>> = HashMap::new();
    let mut start = 0;
    while start < n {
        let cube = points[start].id.cube;
        let mut end = start + 1;
        while end < n && points[end].id.cube == cube {
            end += 1;
        }
        ranges.insert(cube, start..end);
        start = end;
    }

    let mut adjacency: Vec<Vec<u32>> = vec![Vec::new(); n];
    let mut edges: Vec<Simplex> = Vec::new();
    let mut cubes: Vec<CubeIndex> = ranges.keys().copied().collect();
    cubes.sort_unstable();
    for &cube in &cubes {
        let own = ranges[&cube].clone();
        for other in grid.neighborhood(cube, 1) {
            if other < cube {
                continue;
            }
            let Some(theirs) = ranges.get(&other) else { continue };
            for a in own.clone() {
                let lo = if other == cube { a + 1 } else { theirs.start };
                for b in lo..theirs.end {
                    if dist2(&points[a].position, &points[b].position) > cutoff2 {
                        continue;
                    }
                    if accepted(family, &[&points[a], &points[b]]) {
                        adjacency[a].push(b as u32);
                        adjacency[b].push(a as u32);
                        edges.push(smallvec::smallvec![a as u32, b as u32]);
                    }
                }
            }
        }
    }
    for list in &mut adjacency {
        list.sort_unstable();
    }
    edges.sort_unstable();

    let mut simplices: Vec<Vec<Simplex>> = vec![(0..n as u32).map(|v| smallvec::smallvec![v]).collect()];
    if family.alpha >= 1 {
        simplices.push(edges);
    }
    for j in 2..=family.alpha {
        let lower = &simplices[j - 1];
        let mut next: Vec<Simplex> = Vec::new();
        let mut candidate: Simplex = SmallVec::new();
        let mut facet: Simplex = SmallVec::new();
        for sigma in lower {
            let last = *sigma.last().unwrap();
            let above = adjacency[last as usize].partition_point(|&v| v <= last);
            'extend: for &v in &adjacency[last as usize][above..] {
                for &w in &sigma[..sigma.len() - 1] {
                    if adjacency[w as usize].binary_search(&v).is_err() {
                        continue 'extend;
                    }
                }
                candidate.clear();
                candidate.extend_from_slice(sigma);
                candidate.push(v);
                // facets other than sigma itself
                for skip in 0..candidate.len() - 1 {
                    facet.clear();
                    facet.extend(candidate.iter().enumerate().filter(|(i, _)| *i != skip).map(|(_, &x)| x));
                    if lower.binary_search(&facet).is_err() {
                        continue 'extend;
                    }
                }
                let verts: SmallVec<[&MarkedPoint; 5]> = candidate.iter().map(|&i| &points[i as usize]).collect();
                if accepted(family, &verts) {
                    next.push(candidate.clone());
                }
            }
        }
        simplices.push(next);
    }

    Ok(Complex {
        vertices: points.clone(),
        window: realization.window.clone(),
        alpha: family.alpha,
        cutoff: family.cutoff,
        edge_truncated: family.edge_truncated(),
        simplices,
    })
}

impl Complex {
    /// Assembles a complex from explicit simplex lists (index `j` holds the
    /// `j`-simplices, starting at `j = 1`); checks downward closure.
    pub fn from_parts(
        vertices: Vec<MarkedPoint>,
        window: Window,
        alpha: usize,
        cutoff: f64,
        higher: Vec<Vec<Simplex>>,
    ) -> Result<Self> {
        let n = vertices.len() as u32;
        let mut simplices: Vec<Vec<Simplex>> = vec![(0..n).map(|v| smallvec::smallvec![v]).collect()];
        for (offset, mut list) in higher.into_iter().enumerate() {
            let j = offset + 1;
            for s in &mut list {
                s.sort_unstable();
                if s.len() != j + 1 || s.windows(2).any(|w| w[0] == w[1]) || s.iter().any(|&v| v >= n) {
                    return Err(Error::InvalidParameter(format!("malformed {j}-simplex {s:?}")));
                }
            }
            list.sort_unstable();
            list.dedup();
            simplices.push(list);
        }
        if simplices.len() > alpha + 1 {
            return Err(Error::InvalidParameter("simplex above dimension alpha".into()));
        }
        simplices.resize(alpha + 1, Vec::new());
        let complex = Self {
            vertices,
            window,
            alpha,
            cutoff,
            edge_truncated: false,
            simplices,
        };
        if !complex.is_downward_closed() {
            return Err(Error::InvalidParameter("simplex lists are not closed under faces".into()));
        }
        Ok(complex)
    }

    pub fn simplices(&self, j: usize) -> &[Simplex] {
        self.simplices.get(j).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn contains(&self, simplex: &[u32]) -> bool {
        match simplex.len() {
            0 => false,
            k => self
                .simplices
                .get(k - 1)
                .is_some_and(|list| list.binary_search_by(|s| s.as_slice().cmp(simplex)).is_ok()),
        }
    }

    /// `|F_j|`.
    pub fn count_faces(&self, j: usize) -> usize {
        self.simplices(j).len()
    }

    pub fn face_counts(&self) -> Vec<usize> {
        (0..=self.alpha).map(|j| self.count_faces(j)).collect()
    }

    pub fn origin(&self) -> Option<u32> {
        self.vertices.iter().position(|p| p.is_origin).map(|i| i as u32)
    }

    pub fn position(&self, v: u32) -> &[f64] {
        &self.vertices[v as usize].position
    }

    /// Diameter of a simplex.
    pub fn diameter(&self, simplex: &[u32]) -> f64 {
        let mut best = 0.0f64;
        for (i, &a) in simplex.iter().enumerate() {
            for &b in &simplex[i + 1..] {
                best = best.max(dist2(self.position(a), self.position(b)));
            }
        }
        best.sqrt()
    }

    /// Every face of every stored simplex is stored.
    pub fn is_downward_closed(&self) -> bool {
        for j in 2..self.simplices.len() {
            for s in &self.simplices[j] {
                for skip in 0..s.len() {
                    let facet: Simplex = s.iter().enumerate().filter(|(i, _)| *i != skip).map(|(_, &x)| x).collect();
                    if self.simplices[j - 1].binary_search(&facet).is_err() {
                        return false;
                    }
                }
            }
        }
        true
    }

    /// Sub-complex on the vertices accepted by `keep`, reindexed.
    pub fn retain_vertices(&self, window: Window, keep: impl Fn(&MarkedPoint) -> bool) -> Complex {
        let mut map = vec![u32::MAX; self.vertices.len()];
        let mut vertices = Vec::new();
        for (i, p) in self.vertices.iter().enumerate() {
            if keep(p) {
                map[i] = vertices.len() as u32;
                vertices.push(p.clone());
            }
        }
        let simplices = self
            .simplices
            .iter()
            .map(|list| {
                list.iter()
                    .filter(|s| s.iter().all(|&v| map[v as usize] != u32::MAX))
                    .map(|s| s.iter().map(|&v| map[v as usize]).collect())
                    .collect()
            })
            .collect();
        Complex {
            vertices,
            window,
            alpha: self.alpha,
            cutoff: self.cutoff,
            edge_truncated: self.edge_truncated,
            simplices,
        }
    }

    /// Simplices whose vertices all lie in `sub`.
    pub fn restrict(&self, sub: &Window) -> Result<Complex> {
        if !sub.is_subset(&self.window) {
            return Err(Error::NotASubWindow);
        }
        Ok(self.retain_vertices(sub.clone(), |p| sub.contains_cube(p.id.cube)))
    }

    /// The complex with the origin and every simplex containing it removed.
    pub fn without_origin(&self) -> Complex {
        self.retain_vertices(self.window.clone(), |p| !p.is_origin)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::connection::{Kernel, MarkLaw};
    use crate::geometry::{window_for_radius, CubeGrid, Point};
    use crate::sampler::sample;
    use smallvec::smallvec;

    fn vr() -> ConnectionFamily {
        ConnectionFamily::vietoris_rips(0.3, 2).with_cutoff(0.8)
    }

    fn hand(points: &[[f64; 2]], origin: bool) -> Realization {
        let g = CubeGrid::new(2, 0.8).unwrap();
        let pts: Vec<(Point, Mark)> = points.iter().map(|p| (smallvec![p[0], p[1]], Mark::Unit)).collect();
        let w = Window::covering(g, &pts.iter().map(|p| p.0.clone()).chain([smallvec![0.0, 0.0]]).collect::<Vec<Point>>());
        Realization::from_points(1, w, pts, origin.then_some(Mark::Unit)).unwrap()
    }

    #[test]
    fn origin_alone() {
        let c = build(&hand(&[], true), &vr()).unwrap();
        assert_eq!(c.face_counts(), vec![1, 0, 0]);
    }

    #[test]
    fn triangle_of_close_points() {
        let c = build(&hand(&[[0.1, 0.1], [0.5, 0.1], [0.3, 0.4]], false), &vr()).unwrap();
        assert_eq!(c.face_counts(), vec![3, 3, 1]);
    }

    #[test]
    fn alpha_one_is_the_geometric_graph() {
        let f = ConnectionFamily::vietoris_rips(0.3, 1).with_cutoff(0.8);
        let w = window_for_radius(3.0, CubeGrid::new(2, 0.8).unwrap(), 0.8).unwrap();
        let r = sample(5, 4.0, &w, &MarkLaw::Unit, false).unwrap();
        let c = build(&r, &f).unwrap();
        let mut expect: Vec<Simplex> = Vec::new();
        for a in 0..r.points.len() {
            for b in a + 1..r.points.len() {
                if dist2(&r.points[a].position, &r.points[b].position) <= 0.36 {
                    expect.push(smallvec![a as u32, b as u32]);
                }
            }
        }
        let got: Vec<Simplex> = c.simplices(1).to_vec();
        assert_eq!(got, expect);
    }

    #[test]
    fn grid_mismatch_rejected() {
        let f = ConnectionFamily::vietoris_rips(0.3, 1);
        let r = hand(&[[0.1, 0.1]], false);
        assert!(matches!(build(&r, &f), Err(Error::GridMismatch { .. })));
    }

    #[test]
    fn built_complexes_are_closed() {
        let f = ConnectionFamily::diam_kernel(
            vec![
                Kernel::Exponential { amplitude: 0.9, scale: 0.5 },
                Kernel::Constant { value: 0.6 },
                Kernel::Constant { value: 0.5 },
            ],
            0.8,
        );
        let w = window_for_radius(2.0, CubeGrid::new(2, 0.8).unwrap(), 0.8).unwrap();
        for seed in 0..10 {
            let r = sample(seed, 6.0, &w, &MarkLaw::Unit, true).unwrap();
            let c = build(&r, &f).unwrap();
            assert!(c.is_downward_closed());
            assert!((0..=3).all(|j| c.simplices(j).iter().all(|s| s.len() == j + 1)));
            assert!(c.count_faces(2) > 0);
        }
    }

    #[test]
    fn restrict_identity_and_empty() {
        let w = window_for_radius(2.0, CubeGrid::new(2, 0.8).unwrap(), 0.8).unwrap();
        let r = sample(2, 4.0, &w, &MarkLaw::Unit, false).unwrap();
        let c = build(&r, &vr()).unwrap();
        assert_eq!(c.restrict(&w).unwrap(), c);
        let e = c.restrict(&Window::empty(w.grid)).unwrap();
        assert_eq!(e.face_counts(), vec![0, 0, 0]);
    }

    #[test]
    fn from_parts_checks_closure() {
        let g = CubeGrid::new(2, 0.8).unwrap();
        let r = hand(&[[0.1, 0.1], [0.5, 0.1], [0.3, 0.4]], false);
        let ok = Complex::from_parts(
            r.points.clone(),
            Window::covering(g, &[[0.0, 0.0]]),
            2,
            0.8,
            vec![vec![smallvec![0, 1], smallvec![0, 2], smallvec![1, 2]], vec![smallvec![0, 1, 2]]],
        );
        assert_eq!(ok.unwrap().face_counts(), vec![3, 3, 1]);
        let bad = Complex::from_parts(
            r.points,
            Window::covering(g, &[[0.0, 0.0]]),
            2,
            0.8,
            vec![vec![smallvec![0, 1]], vec![smallvec![0, 1, 2]]],
        );
        assert!(bad.is_err());
    }
}
