//! Euclidean primitives: the half-open cube partition of ℝ^d, its shell
//! enumeration, windows made of whole cubes, diameters and distances.
//!
//! Cubes are `[-t, t)^d + 2t·z` for `z ∈ ℤ^d`. Lattice vectors are numbered
//! shell by shell: first by `‖z‖_∞`, then lexicographically inside a shell,
//! so that `z_0` is the origin and indices grow with distance.

use std::cmp::Ordering;
use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use smallvec::SmallVec;

use crate::error::{Error, Result};

/// A point of ℝ^d. Inline storage covers d ≤ 3 without allocating.
pub type Point = SmallVec<[f64; 3]>;

/// A lattice vector of ℤ^d.
pub type Lattice = SmallVec<[i64; 3]>;

/// Index of a cube in the shell enumeration.
pub type CubeIndex = u64;

#[inline]
pub fn dist(a: &[f64], b: &[f64]) -> f64 {
    dist2(a, b).sqrt()
}

#[inline]
pub fn dist2(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

#[inline]
pub fn norm(a: &[f64]) -> f64 {
    a.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Lexicographic order on positions, axis by axis.
pub fn lex_cmp(a: &[f64], b: &[f64]) -> Ordering {
    for (x, y) in a.iter().zip(b) {
        match x.total_cmp(y) {
            Ordering::Equal => continue,
            other => return other,
        }
    }
    Ordering::Equal
}

/// Largest pairwise Euclidean distance; 0 for a singleton.
///
/// Panics on an empty set.
pub fn diam<P: AsRef<[f64]>>(points: &[P]) -> f64 {
    assert!(!points.is_empty(), "diameter of an empty point set");
    let mut best = 0.0f64;
    for (i, a) in points.iter().enumerate() {
        for b in &points[i + 1..] {
            best = best.max(dist2(a.as_ref(), b.as_ref()));
        }
    }
    best.sqrt()
}

fn pow(base: i64, exp: usize) -> u64 {
    (base as u64).pow(exp as u32)
}

/// Number of vectors of the box `[-a, a]^d` that are lexicographically
/// smaller than `z` (`z` itself need not lie in the box).
fn lex_count_below(z: &[i64], a: i64) -> u64 {
    let d = z.len();
    let side = 2 * a + 1;
    let mut count = 0u64;
    for (i, &zi) in z.iter().enumerate() {
        let below = (zi + a).clamp(0, side) as u64;
        count += below * pow(side, d - i - 1);
        if zi.abs() > a {
            break;
        }
    }
    count
}

/// Shell position of a lattice vector.
pub fn index_of(z: &[i64]) -> CubeIndex {
    let k = z.iter().map(|c| c.abs()).max().unwrap_or(0);
    if k == 0 {
        return 0;
    }
    let d = z.len();
    pow(2 * k - 1, d) + lex_count_below(z, k) - lex_count_below(z, k - 1)
}

/// Inverse of [`index_of`].
pub fn z_of(index: CubeIndex, dim: usize) -> Lattice {
    let mut z: Lattice = SmallVec::from_elem(0, dim);
    if index == 0 {
        return z;
    }
    // shell k holds the indices [(2k-1)^d, (2k+1)^d)
    let mut k = 1i64;
    while pow(2 * k + 1, dim) <= index {
        k += 1;
    }
    let mut rank = index - pow(2 * k - 1, dim);
    let mut prefix_max = 0i64;
    for p in 0..dim {
        let rest = dim - p - 1;
        for v in -k..=k {
            let m = prefix_max.max(v.abs());
            let completions = if m == k {
                pow(2 * k + 1, rest)
            } else {
                pow(2 * k + 1, rest) - pow(2 * k - 1, rest)
            };
            if rank < completions {
                z[p] = v;
                prefix_max = m;
                break;
            }
            rank -= completions;
        }
    }
    z
}

/// Partition of ℝ^d into half-open cubes of half edge length `half`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CubeGrid {
    pub dim: usize,
    pub half: f64,
}

impl CubeGrid {
    pub fn new(dim: usize, half: f64) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidParameter("dimension must be at least 1".into()));
        }
        if !(half > 0.0 && half.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "cube half edge length must be positive, got {half}"
            )));
        }
        Ok(Self { dim, half })
    }

    /// Lattice vector of the cube containing `x` (lower faces inclusive).
    pub fn lattice_of(&self, x: &[f64]) -> Lattice {
        let width = 2.0 * self.half;
        x.iter()
            .map(|&c| {
                let mut z = ((c + self.half) / width).floor() as i64;
                // rounding in the division can land one cube off near a face
                let lo = width * z as f64 - self.half;
                if c < lo {
                    z -= 1;
                } else if c >= lo + width {
                    z += 1;
                }
                z
            })
            .collect()
    }

    pub fn cube_index(&self, x: &[f64]) -> CubeIndex {
        index_of(&self.lattice_of(x))
    }

    pub fn center(&self, index: CubeIndex) -> Point {
        z_of(index, self.dim)
            .iter()
            .map(|&z| 2.0 * self.half * z as f64)
            .collect()
    }

    /// Lower and upper corner of the cube (the upper face is excluded).
    pub fn bounds(&self, index: CubeIndex) -> (Point, Point) {
        let c = self.center(index);
        let lo = c.iter().map(|v| v - self.half).collect();
        let hi = c.iter().map(|v| v + self.half).collect();
        (lo, hi)
    }

    pub fn contains(&self, index: CubeIndex, x: &[f64]) -> bool {
        let (lo, hi) = self.bounds(index);
        x.iter()
            .zip(lo.iter().zip(&hi))
            .all(|(c, (l, h))| *l <= *c && *c < *h)
    }

    /// Distance from `x` to the closed cube.
    pub fn point_distance(&self, index: CubeIndex, x: &[f64]) -> f64 {
        let (lo, hi) = self.bounds(index);
        x.iter()
            .zip(lo.iter().zip(&hi))
            .map(|(c, (l, h))| {
                let e = (l - c).max(0.0).max(c - h);
                e * e
            })
            .sum::<f64>()
            .sqrt()
    }

    /// Smallest and largest distance from the origin to points of the closed cube.
    pub fn radial_range(&self, index: CubeIndex) -> (f64, f64) {
        let (lo, hi) = self.bounds(index);
        let origin: Point = SmallVec::from_elem(0.0, self.dim);
        let near = self.point_distance(index, &origin);
        let far = lo
            .iter()
            .zip(&hi)
            .map(|(l, h)| l.abs().max(h.abs()).powi(2))
            .sum::<f64>()
            .sqrt();
        (near, far)
    }

    /// Distance between the closed cube and the sphere `∂B(0, s)`.
    pub fn sphere_distance(&self, index: CubeIndex, s: f64) -> f64 {
        let (near, far) = self.radial_range(index);
        if far < s {
            s - far
        } else if near > s {
            near - s
        } else {
            0.0
        }
    }

    /// Indices of the cubes whose lattice vectors differ from `index`'s by at
    /// most `reach` in every coordinate (including `index` itself).
    pub fn neighborhood(&self, index: CubeIndex, reach: i64) -> Vec<CubeIndex> {
        let z = z_of(index, self.dim);
        let side = (2 * reach + 1) as usize;
        let total = side.pow(self.dim as u32);
        let mut out = Vec::with_capacity(total);
        let mut w: Lattice = SmallVec::from_elem(0, self.dim);
        for code in 0..total {
            let mut c = code;
            for k in 0..self.dim {
                w[k] = z[k] + (c % side) as i64 - reach;
                c /= side;
            }
            out.push(index_of(&w));
        }
        out
    }
}

/// A finite union of whole cubes of a grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Window {
    pub grid: CubeGrid,
    cubes: BTreeSet<CubeIndex>,
}

impl Window {
    pub fn from_cubes(grid: CubeGrid, cubes: impl IntoIterator<Item = CubeIndex>) -> Self {
        Self {
            grid,
            cubes: cubes.into_iter().collect(),
        }
    }

    pub fn empty(grid: CubeGrid) -> Self {
        Self::from_cubes(grid, [])
    }

    /// Smallest window containing every given point.
    pub fn covering<P: AsRef<[f64]>>(grid: CubeGrid, points: &[P]) -> Self {
        Self::from_cubes(grid, points.iter().map(|p| grid.cube_index(p.as_ref())))
    }

    pub fn cubes(&self) -> &BTreeSet<CubeIndex> {
        &self.cubes
    }

    pub fn len(&self) -> usize {
        self.cubes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cubes.is_empty()
    }

    pub fn contains_cube(&self, index: CubeIndex) -> bool {
        self.cubes.contains(&index)
    }

    pub fn contains_point(&self, x: &[f64]) -> bool {
        self.cubes.contains(&self.grid.cube_index(x))
    }

    pub fn is_subset(&self, other: &Window) -> bool {
        self.grid == other.grid && self.cubes.is_subset(&other.cubes)
    }
}

/// The cubes of a grid with half edge `cutoff` meeting the closed ball
/// `B(0, r + cutoff)`.
pub fn window_for_radius(r: f64, grid: CubeGrid, cutoff: f64) -> Result<Window> {
    if !(r > 0.0) {
        return Err(Error::InvalidParameter(format!("radius must be positive, got {r}")));
    }
    if grid.half != cutoff {
        return Err(Error::GridMismatch {
            expected: cutoff,
            found: grid.half,
        });
    }
    let reach = r + cutoff;
    let k = (reach / (2.0 * grid.half)).ceil() as i64 + 1;
    let side = (2 * k + 1) as u64;
    let total = side.pow(grid.dim as u32);
    let origin: Point = SmallVec::from_elem(0.0, grid.dim);
    let mut cubes = BTreeSet::new();
    for code in 0..total {
        let mut c = code;
        let z: Lattice = (0..grid.dim)
            .map(|_| {
                let v = (c % side) as i64 - k;
                c /= side;
                v
            })
            .collect();
        let idx = index_of(&z);
        if grid.point_distance(idx, &origin) <= reach {
            cubes.insert(idx);
        }
    }
    Ok(Window { grid, cubes })
}

#[cfg(test)]
mod tests {
    use super::*;
    use smallvec::smallvec;

    #[test]
    fn origin_is_index_zero() {
        let g = CubeGrid::new(2, 0.8).unwrap();
        assert_eq!(g.cube_index(&[0.0, 0.0]), 0);
        assert_eq!(g.cube_index(&[0.79, 0.0]), 0);
        assert_eq!(g.cube_index(&[-0.8, -0.8]), 0);
    }

    #[test]
    fn upper_face_belongs_to_next_cube() {
        // brute-force enumeration of the first shell in lexicographic order
        let mut shell: Vec<[i64; 2]> = Vec::new();
        for a in -1..=1 {
            for b in -1..=1 {
                if (a, b) != (0, 0) {
                    shell.push([a, b]);
                }
            }
        }
        let pos = shell.iter().position(|z| *z == [1, 0]).unwrap() as u64 + 1;
        let g = CubeGrid::new(2, 0.8).unwrap();
        assert_eq!(g.cube_index(&[0.8, 0.0]), pos);
        assert_eq!(pos, 7);
    }

    #[test]
    fn enumeration_round_trip() {
        for dim in 1..=3 {
            for i in 0..10_000u64 {
                let z = z_of(i, dim);
                assert_eq!(index_of(&z), i, "dim {dim} index {i} -> {z:?}");
            }
        }
    }

    #[test]
    fn enumeration_matches_sorted_lattice() {
        // oracle: sort a lattice box by (sup norm, lexicographic)
        let mut all: Vec<Lattice> = Vec::new();
        for a in -3i64..=3 {
            for b in -3i64..=3 {
                all.push(smallvec![a, b]);
            }
        }
        all.sort_by(|x, y| {
            let nx = x.iter().map(|c| c.abs()).max().unwrap();
            let ny = y.iter().map(|c| c.abs()).max().unwrap();
            nx.cmp(&ny).then(x.cmp(y))
        });
        for (i, z) in all.iter().enumerate() {
            assert_eq!(index_of(z), i as u64);
        }
    }

    #[test]
    fn diameters() {
        assert_eq!(diam(&[[0.0, 0.0]]), 0.0);
        assert_eq!(diam(&[[0.0, 0.0], [3.0, 4.0]]), 5.0);
        let d = diam(&[[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]]);
        assert!((d - 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    #[should_panic]
    fn diameter_of_empty_set_panics() {
        let empty: [[f64; 2]; 0] = [];
        diam(&empty);
    }

    #[test]
    fn small_radius_window_in_one_dimension() {
        let d = 0.8;
        let g = CubeGrid::new(1, d).unwrap();
        let w = window_for_radius(0.5, g, d).unwrap();
        // cubes meeting [-1.3, 1.3]: z = -1, 0, 1
        let expect: BTreeSet<u64> = [-1i64, 0, 1].iter().map(|&z| index_of(&[z])).collect();
        assert_eq!(w.cubes(), &expect);
        // every cube meeting [-2D, 2D] when r = D
        let w = window_for_radius(d, g, d).unwrap();
        assert_eq!(w.len(), 3);
    }

    #[test]
    fn radius_ten_window_matches_dense_scan() {
        let d = 0.8;
        let r = 10.0;
        let g = CubeGrid::new(2, d).unwrap();
        let w = window_for_radius(r, g, d).unwrap();
        // oracle: scan lattice vectors with ‖2Dz‖_∞ ≤ r + D + D√2 and test a
        // dense grid of points of the closed cube against the ball
        let bound = ((r + d + d * 2f64.sqrt()) / (2.0 * d)).floor() as i64;
        let steps = 160;
        let mut count = 0;
        for a in -bound..=bound {
            for b in -bound..=bound {
                let (cx, cy) = (2.0 * d * a as f64, 2.0 * d * b as f64);
                let mut hit = false;
                'scan: for i in 0..=steps {
                    for j in 0..=steps {
                        let x = cx - d + 2.0 * d * i as f64 / steps as f64;
                        let y = cy - d + 2.0 * d * j as f64 / steps as f64;
                        if x * x + y * y <= (r + d) * (r + d) {
                            hit = true;
                            break 'scan;
                        }
                    }
                }
                if hit {
                    count += 1;
                    assert!(w.contains_cube(index_of(&[a, b])));
                }
            }
        }
        assert_eq!(w.len(), count);
        assert_eq!(count, 177);
    }

    #[test]
    fn sphere_distance_against_sampling() {
        let g = CubeGrid::new(2, 0.8).unwrap();
        for idx in 0..60u64 {
            for &s in &[0.3, 2.0, 3.7] {
                let (lo, hi) = g.bounds(idx);
                let mut best = f64::INFINITY;
                let n = 200;
                for i in 0..=n {
                    for j in 0..=n {
                        let x = lo[0] + (hi[0] - lo[0]) * i as f64 / n as f64;
                        let y = lo[1] + (hi[1] - lo[1]) * j as f64 / n as f64;
                        best = best.min(((x * x + y * y).sqrt() - s).abs());
                    }
                }
                let got = g.sphere_distance(idx, s);
                assert!((got - best).abs() < 0.02, "cube {idx} s {s}: {got} vs {best}");
            }
        }
    }
}
