use crate::error::{Error, Result};

use super::Graph;

/// Incremental bootstrap percolation. Every mutator runs the cascade it
/// triggers to quiescence before returning.
#[derive(Debug, Clone)]
pub struct CascadeState {
    r: u32,
    adjacency: Vec<Vec<u32>>,
    marks: Vec<u32>,
    active: Vec<bool>,
    queue: Vec<u32>,
    active_count: usize,
    edge_count: usize,
}

impl CascadeState {
    /// Empty graph on `n` vertices.
    pub fn new(n: usize, r: u32) -> Self {
        CascadeState {
            r,
            adjacency: vec![Vec::new(); n],
            marks: vec![0; n],
            active: vec![false; n],
            queue: Vec::new(),
            active_count: 0,
            edge_count: 0,
        }
    }

    pub fn from_graph(graph: &Graph, r: u32) -> Self {
        let mut state = CascadeState::new(graph.n(), r);
        for v in 0..graph.n() {
            state.adjacency[v].extend_from_slice(graph.neighbors(v));
        }
        state.edge_count = graph.edge_count();
        state
    }

    pub fn n(&self) -> usize {
        self.active.len()
    }

    pub fn r(&self) -> u32 {
        self.r
    }

    pub fn active_count(&self) -> usize {
        self.active_count
    }

    pub fn edge_count(&self) -> usize {
        self.edge_count
    }

    pub fn is_active(&self, v: usize) -> bool {
        self.active[v]
    }

    pub fn marks(&self, v: usize) -> u32 {
        self.marks[v]
    }

    fn check(&self, v: usize) -> Result<()> {
        if v < self.n() {
            Ok(())
        } else {
            Err(Error::UnknownVertex { vertex: v, n: self.n() })
        }
    }

    /// Activates `v` from outside; returns how many vertices became active.
    pub fn activate(&mut self, v: usize) -> Result<usize> {
        self.check(v)?;
        if self.active[v] {
            return Ok(0);
        }
        let before = self.active_count;
        self.set_active(v);
        self.drain();
        Ok(self.active_count - before)
    }

    /// Adds one external infection (mark) to `v`.
    pub fn external_infect(&mut self, v: usize) -> Result<usize> {
        self.check(v)?;
        let before = self.active_count;
        if !self.active[v] {
            self.marks[v] += 1;
            if self.marks[v] >= self.r {
                self.set_active(v);
                self.drain();
            }
        }
        Ok(self.active_count - before)
    }

    /// Adds the edge `uv`, marking whichever endpoint is inactive when the
    /// other is active.
    pub fn add_edge(&mut self, u: usize, v: usize) -> Result<usize> {
        self.check(u)?;
        self.check(v)?;
        if u == v {
            return Err(Error::InvalidParams(format!("self-loop at {u}")));
        }
        let (short, other) = if self.adjacency[u].len() <= self.adjacency[v].len() { (u, v) } else { (v, u) };
        if self.adjacency[short].contains(&(other as u32)) {
            return Err(Error::DuplicateEdge(u.min(v), u.max(v)));
        }
        Ok(self.add_edge_unchecked(u, v))
    }

    /// `add_edge` without the duplicate check, for callers that feed each
    /// pair at most once.
    pub(crate) fn add_edge_unchecked(&mut self, u: usize, v: usize) -> usize {
        self.adjacency[u].push(v as u32);
        self.adjacency[v].push(u as u32);
        self.edge_count += 1;
        let before = self.active_count;
        match (self.active[u], self.active[v]) {
            (true, false) => self.mark(v),
            (false, true) => self.mark(u),
            _ => {}
        }
        self.drain();
        self.active_count - before
    }

    #[inline]
    fn mark(&mut self, w: usize) {
        self.marks[w] += 1;
        if self.marks[w] >= self.r {
            self.set_active(w);
        }
    }

    fn set_active(&mut self, v: usize) {
        self.active[v] = true;
        self.active_count += 1;
        self.queue.push(v as u32);
    }

    fn drain(&mut self) {
        while let Some(v) = self.queue.pop() {
            let v = v as usize;
            for i in 0..self.adjacency[v].len() {
                let w = self.adjacency[v][i] as usize;
                if !self.active[w] {
                    self.mark(w);
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn isolated_vertex() {
        let mut s = CascadeState::new(5, 2);
        assert_eq!(s.activate(3).unwrap(), 1);
        assert_eq!(s.active_count(), 1);
        assert!((0..5).all(|v| s.is_active(v) == (v == 3)));
        assert_eq!(s.activate(3).unwrap(), 0);
    }

    #[test]
    fn external_infections_activate() {
        let mut s = CascadeState::new(4, 3);
        assert_eq!(s.external_infect(1).unwrap(), 0);
        assert_eq!(s.external_infect(1).unwrap(), 0);
        assert_eq!(s.external_infect(1).unwrap(), 1);
        assert!(s.is_active(1));
        assert!(s.external_infect(9).is_err());
    }

    #[test]
    fn triangle_cascade() {
        let g = Graph::from_edges(3, &[(0, 1), (1, 2), (0, 2)]).unwrap();
        let mut s = CascadeState::from_graph(&g, 2);
        assert_eq!(s.activate(0).unwrap(), 1);
        assert_eq!(s.activate(1).unwrap(), 2);
        assert!(s.is_active(2));
    }

    #[test]
    fn edges_trigger_cascades() {
        let mut s = CascadeState::new(4, 2);
        s.activate(0).unwrap();
        s.activate(1).unwrap();
        assert_eq!(s.add_edge(0, 2).unwrap(), 0);
        assert_eq!(s.marks(2), 1);
        assert_eq!(s.add_edge(3, 2).unwrap(), 0);
        // 2 activates and then 3 has marks from 2 only.
        assert_eq!(s.add_edge(1, 2).unwrap(), 1);
        assert_eq!(s.marks(3), 1);
        assert_eq!(s.add_edge(3, 0).unwrap(), 1);
        assert_eq!(s.active_count(), 4);
        assert!(matches!(s.add_edge(2, 0), Err(Error::DuplicateEdge(0, 2))));
        assert_eq!(s.edge_count(), 4);
    }
}
