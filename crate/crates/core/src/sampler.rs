//! Cube-local sampling of the marked Poisson process on a window.
//!
//! Every cube draws its points from a generator keyed by `(seed, cube, salt)`,
//! so the content of a cube never depends on which other cubes are sampled.
//! Each point receives its cube coordinates `(m, l)` (cube index and
//! lexicographic rank inside the cube) and a 128-bit stream key from which all
//! acceptance uniforms of the simplices it owns are derived.

use std::collections::BTreeMap;

use rand::Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};
use smallvec::SmallVec;

use crate::connection::{Mark, MarkLaw};
use crate::error::{Error, Result};
use crate::geometry::{lex_cmp, norm, CubeGrid, CubeIndex, Point, Window};
use crate::stream::{rng_for, unit_open_closed, Hasher};

const CUBE_TAG: u64 = 0x4355_4245; // "CUBE"
const ORIGIN_TAG: u64 = 0x4F52_4947_494E; // "ORIGIN"
const THIN_TAG: u64 = 0x5448_494E; // "THIN"
const GIVEN_TAG: u64 = 0x47_4956_454E; // "GIVEN"

/// Cube coordinates `(m, l)` of a vertex; ordered lexicographically.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct VertexId {
    pub cube: CubeIndex,
    pub rank: u32,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MarkedPoint {
    pub position: Point,
    pub mark: Mark,
    pub id: VertexId,
    pub stream_key: u128,
    #[serde(default)]
    pub is_origin: bool,
}

/// One sample of the process restricted to a window, points sorted by id.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Realization {
    pub master_seed: u64,
    pub beta: f64,
    pub window: Window,
    pub points: Vec<MarkedPoint>,
    /// Position of the added point at the origin in `points`.
    pub origin: Option<usize>,
    /// Exact positional duplicates that were redrawn.
    pub duplicates_redrawn: usize,
    /// Per-cube salts differing from 0 (cubes replaced by independent copies).
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub salts: BTreeMap<CubeIndex, u64>,
}

struct Drawn {
    position: Point,
    mark: Mark,
    stream_key: u128,
    is_origin: bool,
}

fn draw_cube(
    seed: u64,
    salt: u64,
    cube: CubeIndex,
    beta: f64,
    grid: &CubeGrid,
    law: &MarkLaw,
) -> (Vec<Drawn>, usize) {
    let mut rng = rng_for(seed, &[CUBE_TAG, cube, salt]);
    let volume = (2.0 * grid.half).powi(grid.dim as i32);
    let mean = beta * volume;
    let count = if mean > 0.0 {
        Poisson::new(mean).expect("finite positive mean").sample(&mut rng) as usize
    } else {
        0
    };
    let (lo, hi) = grid.bounds(cube);
    let draw_position = |rng: &mut rand_chacha::ChaCha8Rng| -> Point {
        loop {
            let p: Point = lo
                .iter()
                .zip(&hi)
                .map(|(l, h)| l + (h - l) * rng.random::<f64>())
                .collect();
            if p.iter().zip(&hi).all(|(c, h)| c < h) {
                return p;
            }
        }
    };
    let mut points: Vec<Drawn> = (0..count)
        .map(|_| {
            let position = draw_position(&mut rng);
            let mark = law.sample(&mut rng);
            let stream_key = rng.random::<u128>();
            Drawn {
                position,
                mark,
                stream_key,
                is_origin: false,
            }
        })
        .collect();
    // redraw the later of any two identical positions
    let mut redrawn = 0;
    loop {
        let mut order: Vec<usize> = (0..points.len()).collect();
        order.sort_by(|&a, &b| lex_cmp(&points[a].position, &points[b].position).then(a.cmp(&b)));
        let dup = order
            .windows(2)
            .find(|w| points[w[0]].position == points[w[1]].position)
            .map(|w| w[0].max(w[1]));
        match dup {
            Some(i) => {
                points[i].position = draw_position(&mut rng);
                redrawn += 1;
            }
            None => break,
        }
    }
    (points, redrawn)
}

fn origin_point(seed: u64, salt: u64, dim: usize, law: &MarkLaw) -> Drawn {
    let mut rng = rng_for(seed, &[ORIGIN_TAG, salt]);
    let mark = law.sample(&mut rng);
    let stream_key = rng.random::<u128>();
    Drawn {
        position: SmallVec::from_elem(0.0, dim),
        mark,
        stream_key,
        is_origin: true,
    }
}

/// Sorts a cube's points lexicographically and appends them with their ranks.
fn push_ranked(cube: CubeIndex, mut drawn: Vec<Drawn>, out: &mut Vec<MarkedPoint>, origin: &mut Option<usize>) {
    drawn.sort_by(|a, b| lex_cmp(&a.position, &b.position));
    for (rank, p) in drawn.into_iter().enumerate() {
        if p.is_origin {
            *origin = Some(out.len());
        }
        out.push(MarkedPoint {
            position: p.position,
            mark: p.mark,
            id: VertexId {
                cube,
                rank: rank as u32,
            },
            stream_key: p.stream_key,
            is_origin: p.is_origin,
        });
    }
}

/// Samples the process of intensity `beta` on `window`, optionally with an
/// extra point at the origin carrying an independent mark and stream.
pub fn sample(master_seed: u64, beta: f64, window: &Window, law: &MarkLaw, with_origin: bool) -> Result<Realization> {
    Realization::sample_salted(master_seed, beta, window, law, with_origin, &BTreeMap::new())
}

impl Realization {
    fn sample_salted(
        master_seed: u64,
        beta: f64,
        window: &Window,
        law: &MarkLaw,
        with_origin: bool,
        salts: &BTreeMap<CubeIndex, u64>,
    ) -> Result<Self> {
        if !(beta >= 0.0 && beta.is_finite()) {
            return Err(Error::InvalidParameter(format!("intensity must be non-negative, got {beta}")));
        }
        law.validate()?;
        let grid = window.grid;
        let mut points = Vec::new();
        let mut origin = None;
        let mut duplicates = 0;
        let mut origin_pending = with_origin;
        for &cube in window.cubes() {
            let salt = salts.get(&cube).copied().unwrap_or(0);
            let (mut drawn, dups) = draw_cube(master_seed, salt, cube, beta, &grid, law);
            duplicates += dups;
            if cube == 0 && origin_pending {
                drawn.push(origin_point(master_seed, salt, grid.dim, law));
                origin_pending = false;
            }
            push_ranked(cube, drawn, &mut points, &mut origin);
        }
        if origin_pending {
            // cube 0 lies outside the window: the origin forms a cube of its own
            let salt = salts.get(&0).copied().unwrap_or(0);
            let mut head = Vec::new();
            push_ranked(0, vec![origin_point(master_seed, salt, grid.dim, law)], &mut head, &mut origin);
            points.splice(0..0, head);
            origin = Some(0);
        }
        Ok(Self {
            master_seed,
            beta,
            window: window.clone(),
            points,
            origin,
            duplicates_redrawn: duplicates,
            salts: salts.clone(),
        })
    }

    /// The same realization with cube `cube` replaced by an independent copy
    /// drawn from a fresh salt. Replacing cube 0 also renews the origin's mark
    /// and stream.
    pub fn resample_cube(&self, cube: CubeIndex, salt: u64, law: &MarkLaw) -> Result<Self> {
        if !self.window.contains_cube(cube) {
            return Err(Error::CubeOutsideWindow(cube));
        }
        let mut salts = self.salts.clone();
        salts.insert(cube, salt);
        Self::sample_salted(self.master_seed, self.beta, &self.window, law, self.origin.is_some(), &salts)
    }

    /// Builds a realization from explicit positions; stream keys are derived
    /// from `master_seed`, the cube and the order of the points within it.
    pub fn from_points(
        master_seed: u64,
        window: Window,
        given: Vec<(Point, Mark)>,
        origin_mark: Option<Mark>,
    ) -> Result<Self> {
        let grid = window.grid;
        let mut by_cube: BTreeMap<CubeIndex, Vec<Drawn>> = BTreeMap::new();
        for (position, mark) in given {
            if position.len() != grid.dim {
                return Err(Error::InvalidParameter("point dimension differs from the grid".into()));
            }
            let cube = grid.cube_index(&position);
            if !window.contains_cube(cube) {
                return Err(Error::CubeOutsideWindow(cube));
            }
            let slot = by_cube.entry(cube).or_default();
            let mut h = Hasher::new(GIVEN_TAG);
            h.word(master_seed).word(cube).word(slot.len() as u64);
            slot.push(Drawn {
                position,
                mark,
                stream_key: h.finish128(),
                is_origin: false,
            });
        }
        if let Some(mark) = origin_mark {
            let mut h = Hasher::new(ORIGIN_TAG);
            h.word(master_seed);
            by_cube.entry(0).or_default().push(Drawn {
                position: SmallVec::from_elem(0.0, grid.dim),
                mark,
                stream_key: h.finish128(),
                is_origin: true,
            });
        }
        let mut points = Vec::new();
        let mut origin = None;
        for (cube, drawn) in by_cube {
            let mut sorted: Vec<&Point> = drawn.iter().map(|d| &d.position).collect();
            sorted.sort_by(|a, b| lex_cmp(a, b));
            if sorted.windows(2).any(|w| w[0] == w[1]) {
                return Err(Error::InvalidParameter(format!("duplicate positions in cube {cube}")));
            }
            push_ranked(cube, drawn, &mut points, &mut origin);
        }
        Ok(Self {
            master_seed,
            beta: 0.0,
            window,
            points,
            origin,
            duplicates_redrawn: 0,
            salts: BTreeMap::new(),
        })
    }

    /// Independent thinning to intensity `beta_new ≤ beta`: each point is kept
    /// when a uniform derived from its stream key is at most `beta_new/beta`.
    /// Ranks are recomputed; stream keys and the origin are kept.
    pub fn thin(&self, beta_new: f64) -> Result<Self> {
        if !(0.0..=self.beta).contains(&beta_new) {
            return Err(Error::InvalidParameter(format!(
                "thinning needs 0 <= {beta_new} <= {}",
                self.beta
            )));
        }
        let keep_prob = if self.beta > 0.0 { beta_new / self.beta } else { 0.0 };
        let mut by_cube: BTreeMap<CubeIndex, Vec<Drawn>> = BTreeMap::new();
        for p in &self.points {
            if p.is_origin || thinning_value(p.stream_key) <= keep_prob {
                by_cube.entry(p.id.cube).or_default().push(Drawn {
                    position: p.position.clone(),
                    mark: p.mark,
                    stream_key: p.stream_key,
                    is_origin: p.is_origin,
                });
            }
        }
        let mut points = Vec::new();
        let mut origin = None;
        for (cube, drawn) in by_cube {
            push_ranked(cube, drawn, &mut points, &mut origin);
        }
        Ok(Self {
            master_seed: self.master_seed,
            beta: beta_new,
            window: self.window.clone(),
            points,
            origin,
            duplicates_redrawn: self.duplicates_redrawn,
            salts: self.salts.clone(),
        })
    }

    /// Points lying in the cubes of `sub`, ranks unchanged.
    pub fn restrict(&self, sub: &Window) -> Result<Self> {
        if !sub.is_subset(&self.window) {
            return Err(Error::NotASubWindow);
        }
        let points: Vec<MarkedPoint> = self
            .points
            .iter()
            .filter(|p| sub.contains_cube(p.id.cube))
            .cloned()
            .collect();
        let origin = points.iter().position(|p| p.is_origin);
        Ok(Self {
            master_seed: self.master_seed,
            beta: self.beta,
            window: sub.clone(),
            points,
            origin,
            duplicates_redrawn: self.duplicates_redrawn,
            salts: self.salts.clone(),
        })
    }

    pub fn coordinates(&self) -> Vec<VertexId> {
        self.points.iter().map(|p| p.id).collect()
    }

    pub fn origin_point(&self) -> Option<&MarkedPoint> {
        self.origin.map(|i| &self.points[i])
    }

    pub fn grid(&self) -> CubeGrid {
        self.window.grid
    }

    /// Largest distance of a point from the origin.
    pub fn extent(&self) -> f64 {
        self.points.iter().map(|p| norm(&p.position)).fold(0.0, f64::max)
    }
}

/// Uniform in (0, 1] attached to a point for thinning.
pub fn thinning_value(stream_key: u128) -> f64 {
    let mut h = Hasher::keyed(stream_key);
    h.word(THIN_TAG);
    unit_open_closed(h.finish())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::window_for_radius;
    use smallvec::smallvec;

    fn grid() -> CubeGrid {
        CubeGrid::new(2, 0.8).unwrap()
    }

    #[test]
    fn zero_intensity_gives_only_the_origin() {
        let w = window_for_radius(3.0, grid(), 0.8).unwrap();
        let r = sample(1, 0.0, &w, &MarkLaw::Unit, false).unwrap();
        assert!(r.points.is_empty());
        let r = sample(1, 0.0, &w, &MarkLaw::Unit, true).unwrap();
        assert_eq!(r.points.len(), 1);
        assert_eq!(r.points[0].id, VertexId { cube: 0, rank: 0 });
        assert!(r.points[0].position.iter().all(|&c| c == 0.0));
    }

    #[test]
    fn negative_intensity_rejected() {
        let w = window_for_radius(3.0, grid(), 0.8).unwrap();
        assert!(sample(1, -1.0, &w, &MarkLaw::Unit, false).is_err());
    }

    #[test]
    fn deterministic() {
        let w = window_for_radius(4.0, grid(), 0.8).unwrap();
        let a = sample(9, 4.0, &w, &MarkLaw::UniformRadius { min: 0.1, max: 0.4 }, true).unwrap();
        let b = sample(9, 4.0, &w, &MarkLaw::UniformRadius { min: 0.1, max: 0.4 }, true).unwrap();
        assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
    }

    #[test]
    fn cube_locality() {
        let small = window_for_radius(2.0, grid(), 0.8).unwrap();
        let large = window_for_radius(5.0, grid(), 0.8).unwrap();
        for seed in 0..20 {
            let a = sample(seed, 4.0, &small, &MarkLaw::Unit, false).unwrap();
            let b = sample(seed, 4.0, &large, &MarkLaw::Unit, false).unwrap();
            assert_eq!(b.restrict(&small).unwrap().points, a.points);
        }
    }

    #[test]
    fn ranks_are_lexicographic() {
        let w = Window::from_cubes(grid(), [0]);
        let r = Realization::from_points(
            3,
            w,
            vec![(smallvec![0.1, 0.2], Mark::Unit), (smallvec![0.1, 0.0], Mark::Unit)],
            None,
        )
        .unwrap();
        assert_eq!(r.points[0].position.as_slice(), &[0.1, 0.0]);
        assert_eq!(r.points[0].id.rank, 0);
        assert_eq!(r.points[1].id.rank, 1);
    }

    #[test]
    fn single_point_has_rank_zero() {
        let g = grid();
        let c7 = g.center(7);
        let w = Window::from_cubes(g, [7]);
        let r = Realization::from_points(3, w, vec![(c7, Mark::Unit)], None).unwrap();
        assert_eq!(r.points[0].id, VertexId { cube: 7, rank: 0 });
    }

    #[test]
    fn origin_rank_counts_smaller_cube_zero_points() {
        let w = window_for_radius(2.0, grid(), 0.8).unwrap();
        for seed in 0..10 {
            let r = sample(seed, 6.0, &w, &MarkLaw::Unit, true).unwrap();
            let o = r.origin_point().unwrap();
            let below = r
                .points
                .iter()
                .filter(|p| p.id.cube == 0 && !p.is_origin)
                .filter(|p| lex_cmp(&p.position, &o.position).is_lt())
                .count();
            assert_eq!(o.id, VertexId { cube: 0, rank: below as u32 });
        }
    }

    #[test]
    fn resampling_touches_one_cube() {
        let w = window_for_radius(3.0, grid(), 0.8).unwrap();
        let r = sample(4, 4.0, &w, &MarkLaw::Unit, true).unwrap();
        let cube = 5;
        let s = r.resample_cube(cube, 17, &MarkLaw::Unit).unwrap();
        let keep = |x: &Realization| -> Vec<MarkedPoint> {
            x.points.iter().filter(|p| p.id.cube != cube).cloned().collect()
        };
        assert_eq!(keep(&r), keep(&s));
        let changed = |x: &Realization| -> Vec<Point> {
            x.points.iter().filter(|p| p.id.cube == cube).map(|p| p.position.clone()).collect()
        };
        assert_ne!(changed(&r), changed(&s));
    }

    #[test]
    fn thinning_keeps_a_subset() {
        let w = window_for_radius(3.0, grid(), 0.8).unwrap();
        let r = sample(4, 8.0, &w, &MarkLaw::Unit, true).unwrap();
        let t = r.thin(4.0).unwrap();
        assert!(t.points.len() < r.points.len());
        assert!(t.origin.is_some());
        for p in &t.points {
            assert!(r.points.iter().any(|o| o.stream_key == p.stream_key && o.position == p.position));
        }
    }
}
