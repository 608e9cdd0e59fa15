//! Explicit graphs: G(n,p) sampling, generation-by-generation bootstrap
//! percolation and an incremental cascade engine.

mod cascade;

pub use cascade::CascadeState;

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::markproc::GeometricSampler;
use crate::seed::Seed;

/// Default ceiling on the estimated memory of a sampled graph (8 GB).
pub const DEFAULT_MEMORY_CAP: u64 = 8 << 30;

/// Simple undirected graph in compressed adjacency form.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Graph {
    n: usize,
    offsets: Vec<usize>,
    targets: Vec<u32>,
}

impl Graph {
    /// Builds a graph from an edge list; rejects self-loops, duplicates and
    /// out-of-range endpoints.
    pub fn from_edges(n: usize, edges: &[(u32, u32)]) -> Result<Self> {
        let mut degree = vec![0usize; n + 1];
        for &(u, v) in edges {
            for w in [u, v] {
                if w as usize >= n {
                    return Err(Error::UnknownVertex { vertex: w as usize, n });
                }
            }
            if u == v {
                return Err(Error::InvalidParams(format!("self-loop at {u}")));
            }
            degree[u as usize] += 1;
            degree[v as usize] += 1;
        }
        let mut offsets = vec![0usize; n + 1];
        for v in 0..n {
            offsets[v + 1] = offsets[v] + degree[v];
        }
        let mut fill = offsets.clone();
        let mut targets = vec![0u32; offsets[n]];
        for &(u, v) in edges {
            targets[fill[u as usize]] = v;
            fill[u as usize] += 1;
            targets[fill[v as usize]] = u;
            fill[v as usize] += 1;
        }
        for v in 0..n {
            let list = &mut targets[offsets[v]..offsets[v + 1]];
            list.sort_unstable();
            if let Some(w) = list.windows(2).find(|w| w[0] == w[1]) {
                return Err(Error::DuplicateEdge(v, w[0] as usize));
            }
        }
        Ok(Graph { n, offsets, targets })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn edge_count(&self) -> usize {
        self.targets.len() / 2
    }

    pub fn neighbors(&self, v: usize) -> &[u32] {
        &self.targets[self.offsets[v]..self.offsets[v + 1]]
    }

    pub fn degree(&self, v: usize) -> usize {
        self.offsets[v + 1] - self.offsets[v]
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        u < self.n && v < self.n && self.neighbors(u).binary_search(&(v as u32)).is_ok()
    }

    /// Edges `(u, v)` with `u < v`, in ascending order.
    pub fn edges(&self) -> impl Iterator<Item = (u32, u32)> + '_ {
        (0..self.n).flat_map(move |u| {
            self.neighbors(u)
                .iter()
                .filter(move |&&v| v as usize > u)
                .map(move |&v| (u as u32, v))
        })
    }

    /// Writes one `u v` line per edge, 0-based and ascending.
    pub fn write_edge_list<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        for (u, v) in self.edges() {
            writeln!(out, "{u} {v}")?;
        }
        Ok(())
    }
}

/// Rough bytes needed for a G(n,p) sample: adjacency at 4 bytes per edge
/// end plus offsets, with the construction buffer counted too.
pub fn memory_estimate(n: usize, p: f64) -> u64 {
    let pairs = n as f64 * (n as f64 - 1.0) / 2.0;
    let edges = pairs * p;
    let sd = (pairs * p * (1.0 - p)).sqrt();
    let m = edges + 6.0 * sd;
    (m * 16.0 + n as f64 * 24.0) as u64
}

/// Samples G(n,p) with the default memory cap.
pub fn gen_gnp(n: usize, p: f64, seed: Seed) -> Result<Graph> {
    gen_gnp_capped(n, p, seed, DEFAULT_MEMORY_CAP)
}

/// Samples G(n,p): each unordered pair independently with probability `p`,
/// by geometric jumps over the pairs listed row by row.
pub fn gen_gnp_capped(n: usize, p: f64, seed: Seed, memory_cap: u64) -> Result<Graph> {
    if n == 0 {
        return Err(Error::InvalidParams("n must be at least 1".into()));
    }
    if !(0.0..=1.0).contains(&p) {
        return Err(crate::error::domain("p", p, "[0, 1]"));
    }
    if n > u32::MAX as usize {
        return Err(Error::TooLarge(format!("n = {n} exceeds vertex id range")));
    }
    let estimate = memory_estimate(n, p);
    if estimate > memory_cap {
        return Err(Error::TooLarge(format!(
            "G({n}, {p}) needs about {estimate} bytes, cap is {memory_cap}"
        )));
    }
    let mut rng = seed.rng();
    let sampler = GeometricSampler::new(p);
    let total = n as u64 * (n as u64 - 1) / 2;
    let mut edges = Vec::new();
    // Pair index k (0-based) in row u covers pairs (u, u+1..n).
    let mut row = 0usize;
    let mut row_start = 0u64;
    let mut row_len = (n - 1) as u64;
    let mut k = sampler.sample(&mut rng).saturating_sub(1);
    while k < total {
        while k >= row_start + row_len {
            row_start += row_len;
            row += 1;
            row_len -= 1;
        }
        let v = row + 1 + (k - row_start) as usize;
        edges.push((row as u32, v as u32));
        k = k.saturating_add(sampler.sample(&mut rng));
    }
    Graph::from_edges(n, &edges)
}

/// Result of running bootstrap percolation to its fixpoint.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BootstrapResult {
    pub active: Vec<bool>,
    pub final_size: usize,
    /// `|G_0|, |G_1|, ...` with `G_0` the (deduplicated) initial set.
    pub generation_sizes: Vec<usize>,
    pub tau: usize,
}

impl BootstrapResult {
    pub fn final_set(&self) -> Vec<u32> {
        (0..self.active.len() as u32).filter(|&v| self.active[v as usize]).collect()
    }
}

/// Classic bootstrap percolation: generation `k+1` is every inactive vertex
/// whose count of active neighbours through generation `k` reaches `r`.
pub fn bootstrap(graph: &Graph, initial: &[u32], r: u32) -> Result<BootstrapResult> {
    let n = graph.n();
    let mut active = vec![false; n];
    let mut marks = vec![0u32; n];
    let mut current = Vec::with_capacity(initial.len());
    for &v in initial {
        if v as usize >= n {
            return Err(Error::UnknownVertex { vertex: v as usize, n });
        }
        if !active[v as usize] {
            active[v as usize] = true;
            current.push(v);
        }
    }
    let mut generation_sizes = vec![current.len()];
    let mut next = Vec::new();
    while !current.is_empty() {
        for &v in &current {
            for &w in graph.neighbors(v as usize) {
                let w = w as usize;
                if !active[w] {
                    marks[w] += 1;
                    if marks[w] == r {
                        next.push(w as u32);
                    }
                }
            }
        }
        for &w in &next {
            active[w as usize] = true;
        }
        if !next.is_empty() {
            generation_sizes.push(next.len());
        }
        std::mem::swap(&mut current, &mut next);
        next.clear();
    }
    let final_size = generation_sizes.iter().sum();
    let tau = if final_size == 0 { 0 } else { generation_sizes.len() - 1 };
    Ok(BootstrapResult {
        active,
        final_size,
        generation_sizes,
        tau,
    })
}
