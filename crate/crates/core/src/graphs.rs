//! Up- and down-connectivity graphs on the simplices of a complex, their
//! components, and the origin percolation event `B_r`.

use std::collections::{BTreeMap, HashMap, VecDeque};

use petgraph::unionfind::UnionFind;
use serde::Serialize;

use crate::complex::{Complex, Simplex};
use crate::error::{Error, Result};
use crate::geometry::{norm, window_for_radius};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum GraphMode {
    Up,
    Down,
}

/// Graph whose vertices are simplices of one dimension.
///
/// In up mode the vertices are the `q`-simplices and two of them are adjacent
/// when their union is a `(q+1)`-simplex. In down mode the vertices are the
/// `(q+1)`-simplices and two are adjacent when they share a `q`-face.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct QGraph {
    pub q: usize,
    pub mode: GraphMode,
    pub vertices: Vec<Simplex>,
    /// Pairs `(a, b)` with `a < b`, sorted.
    pub edges: Vec<(u32, u32)>,
}

fn check_q(complex: &Complex, q: usize) -> Result<()> {
    if q >= complex.alpha {
        return Err(Error::DimensionOutOfRange {
            j: q + 1,
            alpha: complex.alpha,
        });
    }
    Ok(())
}

fn facets(simplex: &[u32]) -> impl Iterator<Item = Simplex> + '_ {
    (0..simplex.len()).map(move |skip| {
        simplex
            .iter()
            .enumerate()
            .filter(|(i, _)| *i != skip)
            .map(|(_, &v)| v)
            .collect()
    })
}

fn finish_edges(mut edges: Vec<(u32, u32)>) -> Vec<(u32, u32)> {
    edges.sort_unstable();
    edges.dedup();
    edges
}

/// `G_q`: each `(q+1)`-simplex contributes a clique on its `q+2` facets.
pub fn up_graph(complex: &Complex, q: usize) -> Result<QGraph> {
    check_q(complex, q)?;
    let vertices = complex.simplices(q).to_vec();
    let mut edges = Vec::new();
    let mut ids: Vec<u32> = Vec::with_capacity(q + 2);
    for pi in complex.simplices(q + 1) {
        ids.clear();
        for f in facets(pi) {
            let at = vertices.binary_search(&f).expect("complex is downward closed");
            ids.push(at as u32);
        }
        ids.sort_unstable();
        for (i, &a) in ids.iter().enumerate() {
            for &b in &ids[i + 1..] {
                edges.push((a, b));
            }
        }
    }
    Ok(QGraph {
        q,
        mode: GraphMode::Up,
        vertices,
        edges: finish_edges(edges),
    })
}

/// `G̃_{q+1}`: `(q+1)`-simplices sharing a `q`-face.
pub fn down_graph(complex: &Complex, q: usize) -> Result<QGraph> {
    check_q(complex, q)?;
    let vertices = complex.simplices(q + 1).to_vec();
    let mut cofaces: HashMap<Simplex, Vec<u32>> = HashMap::new();
    for (i, pi) in vertices.iter().enumerate() {
        for f in facets(pi) {
            cofaces.entry(f).or_default().push(i as u32);
        }
    }
    let mut edges = Vec::new();
    for list in cofaces.values() {
        for (i, &a) in list.iter().enumerate() {
            for &b in &list[i + 1..] {
                edges.push((a.min(b), a.max(b)));
            }
        }
    }
    Ok(QGraph {
        q,
        mode: GraphMode::Down,
        vertices,
        edges: finish_edges(edges),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Components {
    /// Component label of each graph vertex: the smallest vertex index in
    /// its component.
    pub labels: Vec<u32>,
    /// `(component size, number of components)` in increasing size.
    pub histogram: Vec<(usize, usize)>,
    /// Vertices of the largest component (ties go to the smallest label).
    pub largest: Vec<u32>,
}

impl Components {
    pub fn count(&self) -> usize {
        self.histogram.iter().map(|&(_, c)| c).sum()
    }
}

fn union_find(n: usize, edges: &[(u32, u32)]) -> Vec<u32> {
    let mut uf = UnionFind::<u32>::new(n);
    for &(a, b) in edges {
        uf.union(a, b);
    }
    let roots = uf.into_labeling();
    let mut smallest: HashMap<u32, u32> = HashMap::new();
    for (i, &root) in roots.iter().enumerate() {
        smallest.entry(root).or_insert(i as u32);
    }
    roots.iter().map(|root| smallest[root]).collect()
}

pub fn components(graph: &QGraph) -> Components {
    let labels = union_find(graph.vertices.len(), &graph.edges);
    let mut sizes: BTreeMap<u32, usize> = BTreeMap::new();
    for &l in &labels {
        *sizes.entry(l).or_default() += 1;
    }
    let mut histogram: BTreeMap<usize, usize> = BTreeMap::new();
    for &s in sizes.values() {
        *histogram.entry(s).or_default() += 1;
    }
    let best = sizes
        .iter()
        .max_by(|a, b| a.1.cmp(b.1).then(b.0.cmp(a.0)))
        .map(|(&l, _)| l);
    let largest = match best {
        Some(l) => (0..labels.len() as u32).filter(|&i| labels[i as usize] == l).collect(),
        None => Vec::new(),
    };
    Components {
        labels,
        histogram: histogram.into_iter().collect(),
        largest,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PercolationVerdict {
    pub occurred: bool,
    /// Minimal-hop chain of adjacent `q`-simplices from the origin outwards.
    pub witness: Option<Vec<Simplex>>,
    pub r: f64,
    pub q: usize,
}

/// `q`-simplices that contain the origin and have diameter at most `D`.
fn origin_sources(complex: &Complex, q: usize, origin: u32) -> Vec<u32> {
    complex
        .simplices(q)
        .iter()
        .enumerate()
        .filter(|(_, s)| s.contains(&origin) && complex.diameter(s) <= complex.cutoff)
        .map(|(i, _)| i as u32)
        .collect()
}

fn outer_norm(complex: &Complex, simplex: &[u32]) -> f64 {
    simplex
        .iter()
        .map(|&v| norm(complex.position(v)))
        .fold(0.0, f64::max)
}

/// Decides `B_r`: some `q`-simplex at the origin with diameter at most `D` is
/// `G_q`-connected to a `q`-simplex with a vertex outside the closed ball
/// `B(0, r)`.
pub fn event_b_r(complex: &Complex, q: usize, r: f64) -> Result<PercolationVerdict> {
    let origin = complex.origin().ok_or(Error::MissingOrigin)?;
    check_q(complex, q)?;
    let needed = window_for_radius(r, complex.window.grid, complex.cutoff)?;
    if !needed.is_subset(&complex.window) {
        return Err(Error::WindowTooSmall { r });
    }
    let graph = up_graph(complex, q)?;
    let n = graph.vertices.len();
    let mut adjacency: Vec<Vec<u32>> = vec![Vec::new(); n];
    for &(a, b) in &graph.edges {
        adjacency[a as usize].push(b);
        adjacency[b as usize].push(a);
    }
    let mut parent = vec![u32::MAX; n];
    let mut queue = VecDeque::new();
    for s in origin_sources(complex, q, origin) {
        parent[s as usize] = s;
        queue.push_back(s);
    }
    while let Some(v) = queue.pop_front() {
        if outer_norm(complex, &graph.vertices[v as usize]) > r {
            let mut chain = vec![graph.vertices[v as usize].clone()];
            let mut at = v;
            while parent[at as usize] != at {
                at = parent[at as usize];
                chain.push(graph.vertices[at as usize].clone());
            }
            chain.reverse();
            return Ok(PercolationVerdict {
                occurred: true,
                witness: Some(chain),
                r,
                q,
            });
        }
        for &w in &adjacency[v as usize] {
            if parent[w as usize] == u32::MAX {
                parent[w as usize] = v;
                queue.push_back(w);
            }
        }
    }
    Ok(PercolationVerdict {
        occurred: false,
        witness: None,
        r,
        q,
    })
}

/// Largest vertex norm over the `G_q`-components that contain a `q`-simplex
/// at the origin with diameter at most `D`; `None` without such a simplex.
///
/// On a complex covering `W^(r)`, `B_r` holds exactly when the reach exceeds
/// `r`, so one complex on a large window answers every smaller radius.
pub fn origin_reach(complex: &Complex, q: usize) -> Result<Option<f64>> {
    let origin = complex.origin().ok_or(Error::MissingOrigin)?;
    check_q(complex, q)?;
    let sources = origin_sources(complex, q, origin);
    if sources.is_empty() {
        return Ok(None);
    }
    let graph = up_graph(complex, q)?;
    let labels = union_find(graph.vertices.len(), &graph.edges);
    let mut reach_of: HashMap<u32, f64> = HashMap::new();
    for (i, s) in graph.vertices.iter().enumerate() {
        let e = reach_of.entry(labels[i]).or_insert(0.0);
        *e = e.max(outer_norm(complex, s));
    }
    Ok(sources
        .iter()
        .map(|&s| reach_of[&labels[s as usize]])
        .reduce(f64::max))
}

/// Finite form of the up/down duality: sending each `G̃_{q+1}`-component to
/// the `G_q`-component holding the facets of its simplices is a bijection onto
/// the non-singleton `G_q`-components.
pub fn duality_check(complex: &Complex, q: usize) -> Result<bool> {
    let up = up_graph(complex, q)?;
    let down = down_graph(complex, q)?;
    let up_labels = union_find(up.vertices.len(), &up.edges);
    let down_labels = union_find(down.vertices.len(), &down.edges);

    let mut image: HashMap<u32, u32> = HashMap::new();
    for (i, pi) in down.vertices.iter().enumerate() {
        for f in facets(pi) {
            let at = up.vertices.binary_search(&f).expect("complex is downward closed");
            let target = up_labels[at];
            match image.insert(down_labels[i], target) {
                Some(prev) if prev != target => return Ok(false),
                _ => {}
            }
        }
    }
    let mut up_sizes: HashMap<u32, usize> = HashMap::new();
    for &l in &up_labels {
        *up_sizes.entry(l).or_default() += 1;
    }
    let mut hit: Vec<u32> = image.values().copied().collect();
    hit.sort_unstable();
    let injective = hit.windows(2).all(|w| w[0] != w[1]);
    let mut non_singleton: Vec<u32> = up_sizes.iter().filter(|(_, &s)| s > 1).map(|(&l, _)| l).collect();
    non_singleton.sort_unstable();
    Ok(injective && hit == non_singleton)
}
