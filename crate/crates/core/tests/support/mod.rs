//! Reference implementations used as oracles by the integration tests.
//! Everything here is deliberately naive: exhaustive subsets, plain BFS.

#![allow(dead_code)]

use std::collections::{BTreeSet, VecDeque};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rcm_core::complex::acceptance_uniform;
use rcm_core::connection::Site;
use rcm_core::geometry::{dist, norm, CubeGrid, Window};
use rcm_core::{Complex, ConnectionFamily, Mark, MarkLaw, MarkedPoint, Point, Realization};

/// Simplices of dimensions `1..=alpha` as sorted vertex index lists, found by
/// testing every subset of at most `alpha + 1` points.
pub fn brute_force(points: &[MarkedPoint], family: &ConnectionFamily) -> Vec<BTreeSet<Vec<u32>>> {
    let n = points.len();
    assert!(n <= 20, "exhaustive oracle is for tiny inputs");
    let mut out = vec![BTreeSet::new(); family.alpha + 1];
    for mask in 1u32..(1 << n) {
        let size = mask.count_ones() as usize;
        if size < 2 || size > family.alpha + 1 {
            continue;
        }
        let members: Vec<u32> = (0..n as u32).filter(|i| mask & (1 << i) != 0).collect();
        if every_face_accepted(points, &members, family) {
            out[size - 1].insert(members);
        }
    }
    out
}

fn every_face_accepted(points: &[MarkedPoint], members: &[u32], family: &ConnectionFamily) -> bool {
    let k = members.len();
    (1u32..(1 << k)).all(|sub| {
        if sub.count_ones() < 2 {
            return true;
        }
        let face: Vec<&MarkedPoint> = (0..k)
            .filter(|i| sub & (1 << i) != 0)
            .map(|i| &points[members[i] as usize])
            .collect();
        accepts(family, &face)
    })
}

/// One acceptance decision: `u(σ) ≤ φ_j`, with edges also required to have
/// length at most the cutoff.
pub fn accepts(family: &ConnectionFamily, face: &[&MarkedPoint]) -> bool {
    let j = face.len() - 1;
    let sites: Vec<Site<'_>> = face.iter().map(|p| (p.position.as_slice(), p.mark)).collect();
    let mut phi = family.phi(j, &sites).unwrap();
    if j == 1 && dist(&face[0].position, &face[1].position) > family.cutoff {
        phi = 0.0;
    }
    acceptance_uniform(face) <= phi
}

pub fn complex_sets(c: &Complex) -> Vec<BTreeSet<Vec<u32>>> {
    (0..=c.alpha)
        .map(|j| {
            if j == 0 {
                BTreeSet::new()
            } else {
                c.simplices(j).iter().map(|s| s.to_vec()).collect()
            }
        })
        .collect()
}

/// Up to `max_points` uniform points in `[-extent, extent]^2` (and an origin
/// with probability 1/2), placed through `Realization::from_points`.
pub fn tiny_realization(seed: u64, max_points: usize, extent: f64, grid: CubeGrid, law: &MarkLaw) -> Realization {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let with_origin = rng.random_bool(0.5);
    let count = rng.random_range(0..=max_points - usize::from(with_origin));
    let given: Vec<(Point, Mark)> = (0..count)
        .map(|_| {
            let p: Point = (0..grid.dim).map(|_| rng.random_range(-extent..extent)).collect();
            (p, law.sample(&mut rng))
        })
        .collect();
    let mut all: Vec<Point> = given.iter().map(|g| g.0.clone()).collect();
    all.push(Point::from_elem(0.0, grid.dim));
    let window = Window::covering(grid, &all);
    let origin_mark = with_origin.then(|| law.sample(&mut rng));
    Realization::from_points(seed, window, given, origin_mark).unwrap()
}

/// Edges of the q-up graph straight from the definition: two q-simplices
/// are adjacent when their union is a (q+1)-simplex.
pub fn up_edges(c: &Complex, q: usize) -> BTreeSet<(u32, u32)> {
    let s = c.simplices(q);
    let mut out = BTreeSet::new();
    for a in 0..s.len() {
        for b in a + 1..s.len() {
            let union: BTreeSet<u32> = s[a].iter().chain(s[b].iter()).copied().collect();
            if union.len() == q + 2 && c.contains(&union.into_iter().collect::<Vec<_>>()) {
                out.insert((a as u32, b as u32));
            }
        }
    }
    out
}

/// Edges of the down graph on (q+1)-simplices: adjacent when they share a
/// q-face, that is `q + 1` common vertices.
pub fn down_edges(c: &Complex, q: usize) -> BTreeSet<(u32, u32)> {
    let s = c.simplices(q + 1);
    let mut out = BTreeSet::new();
    for a in 0..s.len() {
        for b in a + 1..s.len() {
            if s[a].iter().filter(|v| s[b].contains(v)).count() == q + 1 {
                out.insert((a as u32, b as u32));
            }
        }
    }
    out
}

/// Duality by definition: every down component maps, through the facets of
/// its members, into one up component, and this map is a bijection onto the
/// up components with at least two members.
pub fn duality_oracle(c: &Complex, q: usize) -> bool {
    let up = c.simplices(q);
    let down = c.simplices(q + 1);
    let up_labels = bfs_labels(up.len(), &up_edges(c, q));
    let down_labels = bfs_labels(down.len(), &down_edges(c, q));
    let mut image = std::collections::BTreeMap::new();
    for (i, pi) in down.iter().enumerate() {
        for skip in 0..pi.len() {
            let facet: Vec<u32> = pi.iter().enumerate().filter(|(k, _)| *k != skip).map(|(_, &v)| v).collect();
            let at = up.iter().position(|s| s.as_slice() == facet.as_slice()).unwrap();
            if *image.entry(down_labels[i]).or_insert(up_labels[at]) != up_labels[at] {
                return false;
            }
        }
    }
    let targets: BTreeSet<u32> = image.values().copied().collect();
    if targets.len() != image.len() {
        return false;
    }
    let mut sizes = std::collections::BTreeMap::new();
    for &l in &up_labels {
        *sizes.entry(l).or_insert(0usize) += 1;
    }
    let big: BTreeSet<u32> = sizes.into_iter().filter(|&(_, n)| n >= 2).map(|(l, _)| l).collect();
    big == targets
}

/// Component labels by BFS, labelled by the smallest member.
pub fn bfs_labels(n: usize, edges: &BTreeSet<(u32, u32)>) -> Vec<u32> {
    let mut adj = vec![Vec::new(); n];
    for &(a, b) in edges {
        adj[a as usize].push(b as usize);
        adj[b as usize].push(a as usize);
    }
    let mut label = vec![u32::MAX; n];
    for start in 0..n {
        if label[start] != u32::MAX {
            continue;
        }
        label[start] = start as u32;
        let mut queue = VecDeque::from([start]);
        while let Some(v) = queue.pop_front() {
            for &w in &adj[v] {
                if label[w] == u32::MAX {
                    label[w] = start as u32;
                    queue.push_back(w);
                }
            }
        }
    }
    label
}

/// `B_r` by definition: some q-simplex in the up-graph component of a source
/// (a q-simplex containing the origin with diameter at most the cutoff) has a
/// vertex of norm greater than `r`.
pub fn b_r_oracle(c: &Complex, q: usize, r: f64) -> bool {
    let Some(o) = c.origin() else { return false };
    let s = c.simplices(q);
    let labels = bfs_labels(s.len(), &up_edges(c, q));
    let sources: BTreeSet<u32> = (0..s.len())
        .filter(|&i| s[i].contains(&o) && c.diameter(&s[i]) <= c.cutoff)
        .map(|i| labels[i])
        .collect();
    (0..s.len()).any(|i| sources.contains(&labels[i]) && s[i].iter().any(|&v| norm(c.position(v)) > r))
}
