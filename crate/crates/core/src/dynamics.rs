//! Dynamical thresholds: how many external activations, external
//! infections or added edges it takes until the active set is big.
//!
//! "Big" means more than `big_threshold * n` active vertices.

use std::collections::HashMap;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{gen_gnp, CascadeState, Graph};
use crate::params::Params;
use crate::seed::{Seed, TrialRng};

/// One measurement of `model`; `p` is ignored by the edges model and `a`
/// by the other two.
pub fn run_model(model: DynModel, n: usize, p: f64, a: usize, r: u32, big_threshold: f64, seed: Seed) -> Result<DynOutcome> {
    match model {
        DynModel::Activation => external_activation(n, p, r, big_threshold, seed),
        DynModel::Infection => external_infection(n, p, r, big_threshold, seed),
        DynModel::Edges => edge_addition(n, a, r, big_threshold, seed),
    }
}

/// Largest `n` accepted by [`edge_addition`].
pub const EDGE_ADDITION_MAX_N: usize = 30_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DynModel {
    Activation,
    Infection,
    Edges,
}

impl std::fmt::Display for DynModel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            DynModel::Activation => "activation",
            DynModel::Infection => "infection",
            DynModel::Edges => "edges",
        })
    }
}

/// One measurement of a dynamical threshold.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DynOutcome {
    pub model: DynModel,
    /// `A0*`, `J0` or `M`.
    pub threshold_value: u64,
    pub n: usize,
    pub r: u32,
    pub p: Option<f64>,
    pub a: Option<usize>,
    pub big_threshold: f64,
    /// Set when the active set never became big; `threshold_value` is then
    /// the number of steps taken.
    pub saturated: bool,
}

fn is_big(count: usize, n: usize, big_threshold: f64) -> bool {
    count as f64 > big_threshold * n as f64
}

/// `A0*` on one graph and one uniformly random vertex order.
pub fn external_activation(n: usize, p: f64, r: u32, big_threshold: f64, seed: Seed) -> Result<DynOutcome> {
    Params::new(n, p, 0, r).with_big_threshold(big_threshold).validate()?;
    let graph = gen_gnp(n, p, seed.child(0))?;
    let mut order: Vec<u32> = (0..n as u32).collect();
    order.shuffle(&mut seed.child(1).rng());
    let (threshold_value, saturated) = activation_threshold(&graph, &order, r, big_threshold)?;
    Ok(DynOutcome {
        model: DynModel::Activation,
        threshold_value: threshold_value as u64,
        n,
        r,
        p: Some(p),
        a: None,
        big_threshold,
        saturated,
    })
}

/// Smallest prefix length of `order` whose closure is big, or `(n, true)`
/// when even the full order is not. Activates the order one vertex at a
/// time and lets each cascade run out, so the whole search is one pass
/// over the edges.
pub fn activation_threshold(graph: &Graph, order: &[u32], r: u32, big_threshold: f64) -> Result<(usize, bool)> {
    let n = graph.n();
    let mut active = vec![false; n];
    let mut marks = vec![0u32; n];
    let mut stack = Vec::new();
    let mut count = 0usize;
    for (k, &v) in order.iter().enumerate() {
        let v = v as usize;
        if v >= n {
            return Err(Error::InvalidParams(format!("vertex {v} out of range for n = {n}")));
        }
        if !active[v] {
            active[v] = true;
            count += 1;
            stack.push(v);
            while let Some(u) = stack.pop() {
                for &w in graph.neighbors(u) {
                    let w = w as usize;
                    if !active[w] {
                        marks[w] += 1;
                        if marks[w] >= r {
                            active[w] = true;
                            count += 1;
                            stack.push(w);
                        }
                    }
                }
            }
        }
        if is_big(count, n, big_threshold) {
            return Ok((k + 1, false));
        }
    }
    Ok((order.len(), true))
}

/// `J0`: uniform external infections (with replacement) on one graph until
/// the active set is big. Gives up after `draw_cap(n, r)` draws.
pub fn external_infection(n: usize, p: f64, r: u32, big_threshold: f64, seed: Seed) -> Result<DynOutcome> {
    Params::new(n, p, 0, r).with_big_threshold(big_threshold).validate()?;
    let graph = gen_gnp(n, p, seed.child(0))?;
    let mut state = CascadeState::from_graph(&graph, r);
    let (threshold_value, saturated) = infection_threshold(&mut state, big_threshold, &mut seed.child(1).rng())?;
    Ok(DynOutcome {
        model: DynModel::Infection,
        threshold_value,
        n,
        r,
        p: Some(p),
        a: None,
        big_threshold,
        saturated,
    })
}

/// Draw budget for the infection model; well beyond the coupon-collector
/// time needed to give every vertex `r` marks.
pub fn draw_cap(n: usize, r: u32) -> u64 {
    let n = n as f64;
    ((r as f64 + 2.0 * n.ln().max(1.0)) * n * 4.0 + 1000.0) as u64
}

fn infection_threshold(state: &mut CascadeState, big_threshold: f64, rng: &mut TrialRng) -> Result<(u64, bool)> {
    let n = state.n();
    let cap = draw_cap(n, state.r());
    let mut draws = 0u64;
    while !is_big(state.active_count(), n, big_threshold) {
        if draws == cap {
            return Ok((draws, true));
        }
        state.external_infect(rng.random_range(0..n))?;
        draws += 1;
    }
    Ok((draws, false))
}

/// Number of pairs `C(n, 2)`.
pub fn pair_count(n: usize) -> u64 {
    n as u64 * (n as u64).saturating_sub(1) / 2
}

/// Pair with row-major index `k` among `(u, v)`, `u < v < n`.
pub fn pair_from_index(n: usize, k: u64) -> (u32, u32) {
    // Row u starts at u * (2n - u - 1) / 2.
    let nf = n as f64;
    let start = |u: u64| u * (2 * n as u64 - u - 1) / 2;
    let mut u = ((2.0 * nf - 1.0 - ((2.0 * nf - 1.0).powi(2) - 8.0 * k as f64).max(0.0).sqrt()) / 2.0).floor() as u64;
    u = u.min(n as u64 - 2);
    while start(u) > k {
        u -= 1;
    }
    while start(u + 1) <= k {
        u += 1;
    }
    let v = u + 1 + (k - start(u));
    (u as u32, v as u32)
}

/// Uniformly random ordering of all pairs of `K_n`, produced lazily by a
/// Fisher–Yates shuffle that only stores displaced positions.
pub struct EdgeStream {
    n: usize,
    total: u64,
    next: u64,
    displaced: HashMap<u64, u64>,
    rng: TrialRng,
}

impl EdgeStream {
    pub fn new(n: usize, seed: Seed) -> Self {
        EdgeStream {
            n,
            total: pair_count(n),
            next: 0,
            displaced: HashMap::new(),
            rng: seed.rng(),
        }
    }
}

impl Iterator for EdgeStream {
    type Item = (u32, u32);

    fn next(&mut self) -> Option<(u32, u32)> {
        if self.next == self.total {
            return None;
        }
        let i = self.next;
        let j = self.rng.random_range(i..self.total);
        let at_j = self.displaced.get(&j).copied().unwrap_or(j);
        let at_i = self.displaced.remove(&i).unwrap_or(i);
        if j != i {
            self.displaced.insert(j, at_i);
        }
        self.next += 1;
        Some(pair_from_index(self.n, at_j))
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        let left = (self.total - self.next) as usize;
        (left, Some(left))
    }
}

/// `M`: edges of a uniformly random ordering of `K_n` are added one by one
/// with vertices `0..a` active until the active set is big.
pub fn edge_addition(n: usize, a: usize, r: u32, big_threshold: f64, seed: Seed) -> Result<DynOutcome> {
    Params::new(n, 0.0, a, r).with_big_threshold(big_threshold).validate()?;
    if n > EDGE_ADDITION_MAX_N {
        return Err(Error::TooLarge(format!("edge addition needs n <= {EDGE_ADDITION_MAX_N} (got {n})")));
    }
    let (threshold_value, saturated) = edge_addition_with_order(n, a, r, big_threshold, EdgeStream::new(n, seed))?;
    Ok(DynOutcome {
        model: DynModel::Edges,
        threshold_value,
        n,
        r,
        p: None,
        a: Some(a),
        big_threshold,
        saturated,
    })
}

/// `M` for a given edge order (pairs must be distinct).
pub fn edge_addition_with_order<I>(n: usize, a: usize, r: u32, big_threshold: f64, edges: I) -> Result<(u64, bool)>
where
    I: IntoIterator<Item = (u32, u32)>,
{
    let mut state = CascadeState::new(n, r);
    for v in 0..a {
        state.activate(v)?;
    }
    let mut added = 0u64;
    if is_big(state.active_count(), n, big_threshold) {
        return Ok((0, false));
    }
    for (u, v) in edges {
        if u as usize >= n || v as usize >= n {
            return Err(Error::UnknownVertex { vertex: u.max(v) as usize, n });
        }
        state.add_edge_unchecked(u as usize, v as usize);
        added += 1;
        if is_big(state.active_count(), n, big_threshold) {
            return Ok((added, false));
        }
    }
    Ok((added, true))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{bootstrap, Graph};

    #[test]
    fn activation_on_complete_graph() {
        let out = external_activation(40, 1.0, 2, 0.5, Seed::new(1, 0)).unwrap();
        assert_eq!(out.threshold_value, 2);
        assert!(!out.saturated);
    }

    #[test]
    fn activation_without_edges() {
        for (n, big) in [(40usize, 0.5), (41, 0.5), (100, 0.3)] {
            let out = external_activation(n, 0.0, 2, big, Seed::new(2, 0)).unwrap();
            assert_eq!(out.threshold_value, (big * n as f64).floor() as u64 + 1);
        }
        let out = external_activation(20, 0.0, 2, 1.0, Seed::new(2, 0)).unwrap();
        assert!(out.saturated);
    }

    #[test]
    fn activation_threshold_is_clean() {
        for s in 0..10 {
            let seed = Seed::new(6, s);
            let out = external_activation(3000, 0.004, 2, 0.5, seed).unwrap();
            let g = gen_gnp(3000, 0.004, seed.child(0)).unwrap();
            let mut order: Vec<u32> = (0..3000).collect();
            order.shuffle(&mut seed.child(1).rng());
            let k = out.threshold_value as usize;
            assert!(bootstrap(&g, &order[..k], 2).unwrap().final_size > 1500);
            assert!(bootstrap(&g, &order[..k - 1], 2).unwrap().final_size <= 1500);
        }
    }

    /// Exact law of `J0` on `K_n` with big meaning `> n/2` active, by a
    /// depth-first walk over draw sequences; each node recomputes the
    /// closure from the external marks alone.
    fn complete_graph_law(n: usize, r: u32, depth: usize) -> Vec<f64> {
        fn closure(ext: &[u32], r: u32) -> usize {
            let mut active = vec![false; ext.len()];
            loop {
                let count = active.iter().filter(|&&x| x).count() as u32;
                let mut changed = false;
                for v in 0..ext.len() {
                    if !active[v] && ext[v] + count >= r {
                        active[v] = true;
                        changed = true;
                    }
                }
                if !changed {
                    return count as usize;
                }
            }
        }
        fn walk(ext: &mut Vec<u32>, r: u32, prob: f64, steps: usize, depth: usize, law: &mut Vec<f64>) {
            let n = ext.len();
            if 2 * closure(ext, r) > n {
                law[steps] += prob;
                return;
            }
            if steps == depth {
                return;
            }
            for v in 0..n {
                ext[v] += 1;
                walk(ext, r, prob / n as f64, steps + 1, depth, law);
                ext[v] -= 1;
            }
        }
        let mut law = vec![0.0; depth + 1];
        walk(&mut vec![0; n], r, 1.0, 0, depth, &mut law);
        law
    }

    #[test]
    fn infection_on_complete_graph_matches_enumeration() {
        let law = complete_graph_law(3, 2, 14);
        assert!(law.iter().sum::<f64>() > 1.0 - 1e-5);
        let runs = 60_000u64;
        let mut hist = vec![0u64; 64];
        for s in 0..runs {
            let out = external_infection(3, 1.0, 2, 0.5, Seed::new(3, s)).unwrap();
            hist[out.threshold_value as usize] += 1;
        }
        for (k, &want) in law.iter().enumerate() {
            let got = hist[k] as f64 / runs as f64;
            let sd = (want * (1.0 - want) / runs as f64).sqrt();
            assert!((got - want).abs() < 4.5 * sd + 1e-4, "J0={k}: {got} vs {want}");
        }
    }

    #[test]
    fn infection_without_edges_is_coupon_collecting() {
        let (n, r, big) = (500usize, 3u32, 0.5);
        for s in 0..20 {
            let seed = Seed::new(4, s);
            let out = external_infection(n, 0.0, r, big, seed).unwrap();
            let mut rng = seed.child(1).rng();
            let mut marks = vec![0u32; n];
            let (mut done, mut draws) = (0usize, 0u64);
            while done as f64 <= big * n as f64 {
                let v = rng.random_range(0..n);
                marks[v] += 1;
                if marks[v] == r {
                    done += 1;
                }
                draws += 1;
            }
            assert_eq!(out.threshold_value, draws);
            assert!(out.threshold_value >= r as u64);
        }
    }

    #[test]
    fn infection_saturates_when_big_is_unreachable() {
        let out = external_infection(30, 0.1, 2, 1.0, Seed::new(5, 0)).unwrap();
        assert!(out.saturated);
        assert_eq!(out.threshold_value, draw_cap(30, 2));
    }

    #[test]
    fn pair_indexing_round_trips() {
        for n in [2usize, 3, 7, 50, 1001] {
            let mut k = 0u64;
            for u in 0..n as u32 {
                for v in u + 1..n as u32 {
                    assert_eq!(pair_from_index(n, k), (u, v));
                    k += 1;
                }
            }
            assert_eq!(k, pair_count(n));
        }
    }

    #[test]
    fn edge_stream_is_a_permutation() {
        let n = 30;
        let mut seen: Vec<(u32, u32)> = EdgeStream::new(n, Seed::new(7, 0)).collect();
        assert_eq!(seen.len() as u64, pair_count(n));
        seen.sort_unstable();
        seen.dedup();
        assert_eq!(seen.len() as u64, pair_count(n));
    }

    #[test]
    fn edge_stream_first_position_is_uniform() {
        let (n, runs) = (5usize, 50_000u64);
        let mut hits = vec![0u64; 10];
        for s in 0..runs {
            let (u, v) = EdgeStream::new(n, Seed::new(8, s)).nth(3).unwrap();
            let idx = (0..10u64).find(|&k| pair_from_index(n, k) == (u, v)).unwrap();
            hits[idx as usize] += 1;
        }
        let sd = (runs as f64 * 0.1 * 0.9).sqrt();
        assert!(hits.iter().all(|&h| (h as f64 - runs as f64 * 0.1).abs() < 4.5 * sd), "{hits:?}");
    }

    fn permutations(items: &[(u32, u32)]) -> Vec<Vec<(u32, u32)>> {
        if items.len() <= 1 {
            return vec![items.to_vec()];
        }
        let mut out = Vec::new();
        for i in 0..items.len() {
            let mut rest = items.to_vec();
            let head = rest.remove(i);
            for mut tail in permutations(&rest) {
                tail.insert(0, head);
                out.push(tail);
            }
        }
        out
    }

    #[test]
    fn edge_addition_on_k4_exhaustively() {
        // a = 2 active (0 and 1), r = 2: big (>= 3 active) happens once 2 or 3
        // is adjacent to both 0 and 1.
        let pairs: Vec<(u32, u32)> = (0..4u32).flat_map(|u| (u + 1..4).map(move |v| (u, v))).collect();
        let orders = permutations(&pairs);
        assert_eq!(orders.len(), 720);
        let mut total = 0u64;
        for order in &orders {
            let (m, saturated) = edge_addition_with_order(4, 2, 2, 0.5, order.iter().copied()).unwrap();
            assert!(!saturated);
            let want = (1..=6)
                .find(|&k| {
                    let prefix = &order[..k];
                    [2u32, 3].iter().any(|&w| prefix.contains(&(0, w)) && prefix.contains(&(1, w)))
                })
                .unwrap() as u64;
            assert_eq!(m, want);
            total += m;
        }
        let exact_mean = total as f64 / 720.0;
        let runs = 20_000u64;
        let mean = (0..runs)
            .map(|s| edge_addition(4, 2, 2, 0.5, Seed::new(10, s)).unwrap().threshold_value as f64)
            .sum::<f64>()
            / runs as f64;
        assert!((mean - exact_mean).abs() < 0.03, "{mean} vs {exact_mean}");
    }

    #[test]
    fn edge_addition_trivial_cases() {
        let out = edge_addition(10, 10, 2, 0.5, Seed::new(0, 0)).unwrap();
        assert_eq!(out.threshold_value, 0);
        let out = edge_addition(10, 1, 2, 0.5, Seed::new(0, 0)).unwrap();
        assert!(out.saturated);
        assert_eq!(out.threshold_value, pair_count(10));
        assert!(edge_addition(EDGE_ADDITION_MAX_N + 1, 2, 2, 0.5, Seed::new(0, 0)).is_err());
    }

    #[test]
    fn incremental_matches_rebuilt_prefix() {
        let (n, a) = (600usize, 12usize);
        let initial: Vec<u32> = (0..a as u32).collect();
        for s in 0..10 {
            let seed = Seed::new(11, s);
            let out = edge_addition(n, a, 2, 0.5, seed).unwrap();
            let m = out.threshold_value as usize;
            let prefix: Vec<(u32, u32)> = EdgeStream::new(n, seed).take(m).collect();
            let at = bootstrap(&Graph::from_edges(n, &prefix).unwrap(), &initial, 2).unwrap();
            let before = bootstrap(&Graph::from_edges(n, &prefix[..m - 1]).unwrap(), &initial, 2).unwrap();
            assert!(at.final_size > n / 2);
            assert!(before.final_size <= n / 2);
        }
    }
}
