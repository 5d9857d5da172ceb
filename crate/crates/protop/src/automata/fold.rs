//! Folding of edge-labeled graphs via union-find over vertices.
//!
//! An adjacency entry `(d, w)` at vertex `v` encodes a positive edge
//! `(v, d, w)` when `d > 0` and `(w, -d, v)` when `d < 0`; every edge is
//! recorded at both endpoints. Folding repeatedly merges the two targets
//! (or sources) of equally-labeled edges until the graph is deterministic
//! and co-deterministic. The result does not depend on the merge order.

use std::collections::{BTreeMap, VecDeque};

pub(crate) struct GraphBuilder {
    rank: usize,
    parent: Vec<usize>,
    adj: Vec<Vec<(i32, usize)>>,
}

impl GraphBuilder {
    pub fn new(rank: usize, num_vertices: usize) -> Self {
        GraphBuilder {
            rank,
            parent: (0..num_vertices).collect(),
            adj: vec![Vec::new(); num_vertices],
        }
    }

    pub fn add_vertex(&mut self) -> usize {
        let id = self.parent.len();
        self.parent.push(id);
        self.adj.push(Vec::new());
        id
    }

    /// Positive edge `(u, letter, v)`, letter 1-based.
    pub fn add_edge(&mut self, u: usize, letter: usize, v: usize) {
        debug_assert!(letter >= 1 && letter <= self.rank);
        self.adj[u].push((letter as i32, v));
        self.adj[v].push((-(letter as i32), u));
    }

    /// Walk `letters` from `u`, creating fresh vertices along the way.
    pub fn add_path(&mut self, mut u: usize, letters: &[i32]) -> usize {
        for &l in letters {
            let v = self.add_vertex();
            if l > 0 {
                self.add_edge(u, l as usize, v);
            } else {
                self.add_edge(v, (-l) as usize, u);
            }
            u = v;
        }
        u
    }

    pub fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    /// Merge the classes of `x` and `y`; returns the surviving root.
    pub fn merge(&mut self, x: usize, y: usize) -> usize {
        let rx = self.find(x);
        let ry = self.find(y);
        if rx == ry {
            return rx;
        }
        // small-to-large adjacency concatenation
        let (keep, drop) = if self.adj[rx].len() >= self.adj[ry].len() {
            (rx, ry)
        } else {
            (ry, rx)
        };
        self.parent[drop] = keep;
        let moved = std::mem::take(&mut self.adj[drop]);
        self.adj[keep].extend(moved);
        keep
    }

    pub fn fold(&mut self) {
        let n = self.parent.len();
        let mut queue: VecDeque<usize> = (0..n).collect();
        let mut queued = vec![true; n];
        while let Some(seed) = queue.pop_front() {
            if !queued[seed] {
                continue;
            }
            queued[seed] = false;
            let v = self.find(seed);
            let mut map: BTreeMap<i32, usize> = BTreeMap::new();
            let mut conflict: Option<(usize, usize)> = None;
            for idx in 0..self.adj[v].len() {
                let (d, nb) = self.adj[v][idx];
                let nb = self.find(nb);
                if let Some(&prev) = map.get(&d) {
                    if prev != nb {
                        conflict = Some((prev, nb));
                        break;
                    }
                } else {
                    map.insert(d, nb);
                }
            }
            match conflict {
                Some((x, y)) => {
                    let root = self.merge(x, y);
                    // the merged class and the (aborted) current class
                    // must both be rescanned
                    for w in [root, self.find(v)] {
                        if !queued[w] {
                            queued[w] = true;
                            queue.push_back(w);
                        }
                    }
                }
                None => {
                    self.adj[v] = map.into_iter().collect();
                }
            }
        }
    }

    /// Resolved edge set after folding: positive edges between class
    /// roots, deduplicated.
    pub fn resolved_edges(&mut self) -> Vec<(usize, usize, usize)> {
        let n = self.parent.len();
        let mut edges = Vec::new();
        for v in 0..n {
            if self.find(v) != v {
                continue;
            }
            for idx in 0..self.adj[v].len() {
                let (d, nb) = self.adj[v][idx];
                if d > 0 {
                    let nb = self.find(nb);
                    edges.push((v, d as usize, nb));
                }
            }
        }
        edges.sort_unstable();
        edges.dedup();
        edges
    }
}
