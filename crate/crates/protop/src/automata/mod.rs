//! Stallings automata for finitely generated subgroups of free groups:
//! folding, membership, bases, index, intersections, conjugates, cores,
//! overgroups, and low-index subgroup enumeration.
//!
//! Every public constructor returns the automaton in canonical form
//! (vertices renumbered by breadth-first traversal from the base with
//! letter order `1, -1, 2, -2, ...`), so two automata represent the same
//! subgroup if and only if they compare equal.

mod enumerate;
mod fold;
mod schreier;

pub use enumerate::{enumerate_index_subgroups, EnumBudget};
pub use schreier::{express_over_schreier_basis, schreier_ball, SchreierBall, SchreierError};

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet, VecDeque};

use thiserror::Error;

use crate::words::Word;
use fold::GraphBuilder;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum AutomatonError {
    #[error("rank mismatch: {0} vs {1}")]
    RankMismatch(usize, usize),
    #[error("subgroup has infinite index")]
    InfiniteIndex,
    #[error("budget exceeded: {0}")]
    BudgetExceeded(String),
    #[error("invalid automaton: {0}")]
    Invalid(String),
}

/// Index of a subgroup in the ambient free group.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SubgroupIndex {
    Finite(usize),
    Infinite,
}

impl SubgroupIndex {
    pub fn is_finite(&self) -> bool {
        matches!(self, SubgroupIndex::Finite(_))
    }
}

/// Rooted, folded, connected core graph of a f.g. subgroup. The base
/// vertex is always 0.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct StallingsAutomaton {
    rank: usize,
    succ: Vec<Vec<Option<u32>>>,
    pred: Vec<Vec<Option<u32>>>,
}

impl StallingsAutomaton {
    /// Folded core automaton of the subgroup generated by `gens`.
    pub fn from_generators(rank: usize, gens: &[Word]) -> Result<Self, AutomatonError> {
        for g in gens {
            if g.rank() != rank {
                return Err(AutomatonError::RankMismatch(rank, g.rank()));
            }
        }
        let mut b = GraphBuilder::new(rank, 1);
        for g in gens {
            if g.is_empty() {
                continue;
            }
            let letters = g.letters();
            let end = b.add_path(0, &letters[..letters.len() - 1]);
            let last = letters[letters.len() - 1];
            if last > 0 {
                b.add_edge(end, last as usize, 0);
            } else {
                b.add_edge(0, (-last) as usize, end);
            }
        }
        b.fold();
        Ok(Self::from_builder(b, 0, rank))
    }

    /// The whole-group automaton: one vertex with a loop per letter.
    pub fn whole_group(rank: usize) -> Self {
        let mut succ = vec![vec![None; rank]];
        let mut pred = vec![vec![None; rank]];
        for i in 0..rank {
            succ[0][i] = Some(0);
            pred[0][i] = Some(0);
        }
        StallingsAutomaton { rank, succ, pred }
    }

    /// Strict constructor from an explicit edge list (letters 1-based).
    /// The input must already be deterministic, co-deterministic and
    /// connected; the result is canonicalized.
    pub fn from_edges(
        rank: usize,
        num_vertices: usize,
        edges: &[(u32, u32, u32)],
    ) -> Result<Self, AutomatonError> {
        if num_vertices == 0 {
            return Err(AutomatonError::Invalid("no vertices".into()));
        }
        let mut succ = vec![vec![None; rank]; num_vertices];
        let mut pred = vec![vec![None; rank]; num_vertices];
        for &(u, l, v) in edges {
            if l == 0 || l as usize > rank {
                return Err(AutomatonError::Invalid(format!("letter {l} out of range")));
            }
            if u as usize >= num_vertices || v as usize >= num_vertices {
                return Err(AutomatonError::Invalid("vertex out of range".into()));
            }
            let li = l as usize - 1;
            if succ[u as usize][li].replace(v).is_some() {
                return Err(AutomatonError::Invalid(format!(
                    "two edges labeled {l} leave vertex {u}"
                )));
            }
            if pred[v as usize][li].replace(u).is_some() {
                return Err(AutomatonError::Invalid(format!(
                    "two edges labeled {l} enter vertex {v}"
                )));
            }
        }
        let aut = StallingsAutomaton { rank, succ, pred };
        if aut.reachable_from_base().len() != num_vertices {
            return Err(AutomatonError::Invalid("not connected".into()));
        }
        Ok(aut.canonical_form())
    }

    fn from_builder(mut b: GraphBuilder, base: usize, rank: usize) -> Self {
        let base = b.find(base);
        let edges = b.resolved_edges();
        // compact class roots to contiguous ids
        let mut ids: BTreeMap<usize, usize> = BTreeMap::new();
        ids.insert(base, 0);
        for &(u, _, v) in &edges {
            let next = ids.len();
            ids.entry(u).or_insert(next);
            let next = ids.len();
            ids.entry(v).or_insert(next);
        }
        let n = ids.len();
        let mut succ = vec![vec![None; rank]; n];
        let mut pred = vec![vec![None; rank]; n];
        for &(u, l, v) in &edges {
            let (u, v) = (ids[&u] as u32, ids[&v] as u32);
            succ[u as usize][l - 1] = Some(v);
            pred[v as usize][l - 1] = Some(u);
        }
        let aut = StallingsAutomaton { rank, succ, pred };
        aut.restrict_trim_canonicalize(0)
    }

    /// Keeps the base component, trims non-base vertices of degree <= 1,
    /// and renumbers canonically. `base` is the current id of the base.
    fn restrict_trim_canonicalize(&self, base: u32) -> Self {
        let n = self.succ.len();
        // base component (undirected reachability)
        let mut seen = vec![false; n];
        let mut queue = VecDeque::from([base as usize]);
        seen[base as usize] = true;
        while let Some(v) = queue.pop_front() {
            for i in 0..self.rank {
                for t in [self.succ[v][i], self.pred[v][i]].into_iter().flatten() {
                    if !seen[t as usize] {
                        seen[t as usize] = true;
                        queue.push_back(t as usize);
                    }
                }
            }
        }
        let mut alive = seen;
        // iteratively remove non-base vertices of degree <= 1
        let degree = |alive: &[bool], v: usize, this: &Self| -> usize {
            let mut d = 0;
            for i in 0..this.rank {
                if let Some(t) = this.succ[v][i] {
                    if alive[t as usize] {
                        d += 1;
                    }
                }
                if let Some(t) = this.pred[v][i] {
                    if alive[t as usize] {
                        d += 1;
                    }
                }
            }
            d
        };
        loop {
            let mut removed = false;
            for v in 0..n {
                if v as u32 != base && alive[v] && degree(&alive, v, self) <= 1 {
                    alive[v] = false;
                    removed = true;
                }
            }
            if !removed {
                break;
            }
        }
        self.renumber_bfs(base, &alive)
    }

    /// BFS renumbering from `base` over the `alive` vertices.
    fn renumber_bfs(&self, base: u32, alive: &[bool]) -> Self {
        let n = self.succ.len();
        let mut order: Vec<u32> = Vec::new();
        let mut newid = vec![u32::MAX; n];
        newid[base as usize] = 0;
        order.push(base);
        let mut head = 0;
        while head < order.len() {
            let v = order[head] as usize;
            head += 1;
            for i in 0..self.rank {
                for t in [self.succ[v][i], self.pred[v][i]].into_iter().flatten() {
                    let t = t as usize;
                    if alive[t] && newid[t] == u32::MAX {
                        newid[t] = order.len() as u32;
                        order.push(t as u32);
                    }
                }
            }
        }
        let m = order.len();
        let mut succ = vec![vec![None; self.rank]; m];
        let mut pred = vec![vec![None; self.rank]; m];
        for (new_v, &old_v) in order.iter().enumerate() {
            for i in 0..self.rank {
                if let Some(t) = self.succ[old_v as usize][i] {
                    if alive[t as usize] {
                        succ[new_v][i] = Some(newid[t as usize]);
                    }
                }
                if let Some(t) = self.pred[old_v as usize][i] {
                    if alive[t as usize] {
                        pred[new_v][i] = Some(newid[t as usize]);
                    }
                }
            }
        }
        StallingsAutomaton { rank: self.rank, succ, pred }
    }

    fn reachable_from_base(&self) -> Vec<u32> {
        let n = self.succ.len();
        let mut seen = vec![false; n];
        seen[0] = true;
        let mut order = vec![0u32];
        let mut head = 0;
        while head < order.len() {
            let v = order[head] as usize;
            head += 1;
            for i in 0..self.rank {
                for t in [self.succ[v][i], self.pred[v][i]].into_iter().flatten() {
                    if !seen[t as usize] {
                        seen[t as usize] = true;
                        order.push(t);
                    }
                }
            }
        }
        order
    }

    /// Canonical renumbering; idempotent on every public constructor's
    /// output.
    pub fn canonical_form(&self) -> Self {
        let alive = vec![true; self.succ.len()];
        self.renumber_bfs(0, &alive)
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn num_vertices(&self) -> usize {
        self.succ.len()
    }

    /// Positive edges `(src, letter, dst)` in lexicographic order.
    pub fn edges(&self) -> Vec<(u32, u32, u32)> {
        let mut out = Vec::new();
        for v in 0..self.succ.len() {
            for i in 0..self.rank {
                if let Some(t) = self.succ[v][i] {
                    out.push((v as u32, (i + 1) as u32, t));
                }
            }
        }
        out
    }

    pub fn succ_of(&self, v: u32, letter: usize) -> Option<u32> {
        self.succ[v as usize][letter - 1]
    }

    pub fn pred_of(&self, v: u32, letter: usize) -> Option<u32> {
        self.pred[v as usize][letter - 1]
    }

    /// End vertex of the path labeled `w` starting at `from`, if the
    /// whole path exists.
    pub fn trace(&self, from: u32, w: &Word) -> Option<u32> {
        let mut cur = from;
        for &l in w.letters() {
            cur = if l > 0 {
                self.succ[cur as usize][l as usize - 1]?
            } else {
                self.pred[cur as usize][(-l) as usize - 1]?
            };
        }
        Some(cur)
    }

    /// Membership: `w` labels a closed path at the base.
    pub fn member(&self, w: &Word) -> bool {
        assert_eq!(self.rank, w.rank(), "rank mismatch in member");
        self.trace(0, w) == Some(0)
    }

    fn spanning_tree(&self) -> SpanningTree {
        let n = self.succ.len();
        let mut parent: Vec<Option<(u32, i32)>> = vec![None; n];
        let mut order: Vec<u32> = vec![0];
        let mut seen = vec![false; n];
        seen[0] = true;
        let mut tree: BTreeSet<(u32, u32, u32)> = BTreeSet::new();
        let mut head = 0;
        while head < order.len() {
            let v = order[head];
            head += 1;
            for i in 1..=self.rank {
                if let Some(t) = self.succ_of(v, i) {
                    if !seen[t as usize] {
                        seen[t as usize] = true;
                        parent[t as usize] = Some((v, i as i32));
                        tree.insert((v, i as u32, t));
                        order.push(t);
                    }
                }
                if let Some(t) = self.pred_of(v, i) {
                    if !seen[t as usize] {
                        seen[t as usize] = true;
                        parent[t as usize] = Some((v, -(i as i32)));
                        tree.insert((t, i as u32, v));
                        order.push(t);
                    }
                }
            }
        }
        debug_assert_eq!(order.len(), n, "automaton must be connected");
        SpanningTree { parent, tree }
    }

    /// Word labeling the tree path from the base to `v`.
    fn tree_word(&self, tree: &SpanningTree, v: u32) -> Word {
        let mut letters = Vec::new();
        let mut cur = v;
        while let Some((p, l)) = tree.parent[cur as usize] {
            letters.push(l);
            cur = p;
        }
        letters.reverse();
        Word::from_letters(self.rank, &letters).expect("valid letters")
    }

    /// Coset representative words `alpha_v`, indexed by vertex.
    pub fn transversal(&self) -> Vec<Word> {
        let tree = self.spanning_tree();
        (0..self.num_vertices() as u32)
            .map(|v| self.tree_word(&tree, v))
            .collect()
    }

    fn non_tree_edges(&self, tree: &SpanningTree) -> Vec<(u32, u32, u32)> {
        self.edges()
            .into_iter()
            .filter(|e| !tree.tree.contains(e))
            .collect()
    }

    /// Free basis of the subgroup: one word per non-tree positive edge.
    pub fn basis(&self) -> Vec<Word> {
        let tree = self.spanning_tree();
        self.non_tree_edges(&tree)
            .into_iter()
            .map(|(u, l, v)| {
                let au = self.tree_word(&tree, u);
                let av = self.tree_word(&tree, v);
                au.concat(&Word::from_letters(self.rank, &[l as i32]).unwrap())
                    .unwrap()
                    .concat(&av.inverse())
                    .unwrap()
            })
            .collect()
    }

    /// Rewrites a member of the subgroup as a product of basis elements;
    /// entries are signed 1-based indices into `basis()`. Returns `None`
    /// when `w` is not a member.
    pub fn express_in_basis(&self, w: &Word) -> Option<Vec<i64>> {
        assert_eq!(self.rank, w.rank(), "rank mismatch");
        let tree = self.spanning_tree();
        let index: BTreeMap<(u32, u32, u32), i64> = self
            .non_tree_edges(&tree)
            .into_iter()
            .enumerate()
            .map(|(i, e)| (e, (i + 1) as i64))
            .collect();
        let mut cur = 0u32;
        let mut out = Vec::new();
        for &l in w.letters() {
            if l > 0 {
                let nxt = self.succ_of(cur, l as usize)?;
                if let Some(&i) = index.get(&(cur, l as u32, nxt)) {
                    out.push(i);
                }
                cur = nxt;
            } else {
                let nxt = self.pred_of(cur, (-l) as usize)?;
                if let Some(&i) = index.get(&(nxt, (-l) as u32, cur)) {
                    out.push(-i);
                }
                cur = nxt;
            }
        }
        if cur != 0 {
            return None;
        }
        Some(out)
    }

    pub fn is_complete(&self) -> bool {
        self.succ
            .iter()
            .zip(&self.pred)
            .all(|(s, p)| s.iter().all(Option::is_some) && p.iter().all(Option::is_some))
    }

    /// Finite iff the automaton is complete; the index is then the
    /// number of vertices.
    pub fn index(&self) -> SubgroupIndex {
        if self.is_complete() {
            SubgroupIndex::Finite(self.num_vertices())
        } else {
            SubgroupIndex::Infinite
        }
    }

    /// Automaton of the intersection of the two subgroups.
    pub fn intersect(&self, other: &StallingsAutomaton) -> Result<Self, AutomatonError> {
        if self.rank != other.rank {
            return Err(AutomatonError::RankMismatch(self.rank, other.rank));
        }
        let mut ids: HashMap<(u32, u32), u32> = HashMap::new();
        ids.insert((0, 0), 0);
        let mut pairs = vec![(0u32, 0u32)];
        let mut edges: Vec<(u32, u32, u32)> = Vec::new();
        let mut head = 0;
        while head < pairs.len() {
            let (p, q) = pairs[head];
            let v = head as u32;
            head += 1;
            for i in 1..=self.rank {
                if let (Some(tp), Some(tq)) = (self.succ_of(p, i), other.succ_of(q, i)) {
                    let next = ids.len() as u32;
                    let t = *ids.entry((tp, tq)).or_insert_with(|| {
                        pairs.push((tp, tq));
                        next
                    });
                    edges.push((v, i as u32, t));
                }
                if let (Some(tp), Some(tq)) = (self.pred_of(p, i), other.pred_of(q, i)) {
                    let next = ids.len() as u32;
                    ids.entry((tp, tq)).or_insert_with(|| {
                        pairs.push((tp, tq));
                        next
                    });
                    // edge recorded when its source is processed
                }
            }
        }
        let n = pairs.len();
        let mut succ = vec![vec![None; self.rank]; n];
        let mut pred = vec![vec![None; self.rank]; n];
        for (u, l, v) in edges {
            succ[u as usize][l as usize - 1] = Some(v);
            pred[v as usize][l as usize - 1] = Some(u);
        }
        let aut = StallingsAutomaton { rank: self.rank, succ, pred };
        Ok(aut.restrict_trim_canonicalize(0))
    }

    /// Automaton of `g^-1 H g`.
    pub fn conjugate(&self, g: &Word) -> Result<Self, AutomatonError> {
        if self.rank != g.rank() {
            return Err(AutomatonError::RankMismatch(self.rank, g.rank()));
        }
        let n = self.num_vertices();
        let mut b = GraphBuilder::new(self.rank, n);
        for (u, l, v) in self.edges() {
            b.add_edge(u as usize, l as usize, v as usize);
        }
        // new base at the far end of a fresh path spelling g from the
        // old base; closed paths there read g^-1 (old loops) g
        let new_base = b.add_path(0, g.letters());
        b.fold();
        Ok(Self::from_builder(b, new_base, self.rank))
    }

    /// Same subgroup read from a different base vertex; only meaningful
    /// for complete automata, where vertex `v` carries the coset of the
    /// transversal word `t_v` and rebasing realizes conjugation by it.
    fn rebase(&self, v: u32) -> Self {
        let alive = vec![true; self.num_vertices()];
        self.renumber_bfs(v, &alive)
    }

    /// Conjugation-invariance check; meaningful for complete automata.
    pub fn is_normal(&self) -> bool {
        if !self.is_complete() {
            return false;
        }
        (1..self.num_vertices() as u32).all(|v| self.rebase(v) == *self)
    }

    /// Core of the subgroup: the intersection of its conjugates over a
    /// coset transversal, read off the complete automaton. Returns the
    /// core automaton and the transversal.
    pub fn core_subgroup(&self) -> Result<(Self, Vec<Word>), AutomatonError> {
        if !self.is_complete() {
            return Err(AutomatonError::InfiniteIndex);
        }
        let transversal = self.transversal();
        let mut core = self.clone();
        for v in 1..self.num_vertices() as u32 {
            core = core.intersect(&self.rebase(v))?;
        }
        Ok((core, transversal))
    }

    /// All subgroups whose automaton is a folded quotient of this one,
    /// including the subgroup itself. Explored as the closure of single
    /// vertex-pair identifications followed by folding, which reaches
    /// exactly the folded quotients of the full partition lattice.
    pub fn overgroups(&self, budget: &OvergroupBudget) -> Result<Vec<Self>, AutomatonError> {
        if self.num_vertices() > budget.max_vertices {
            return Err(AutomatonError::BudgetExceeded(format!(
                "automaton has {} vertices, overgroup budget is {}",
                self.num_vertices(),
                budget.max_vertices
            )));
        }
        let start = self.canonical_form();
        let mut seen: HashSet<StallingsAutomaton> = HashSet::new();
        seen.insert(start.clone());
        let mut queue = VecDeque::from([start]);
        while let Some(a) = queue.pop_front() {
            if let Some(deadline) = budget.deadline {
                if std::time::Instant::now() > deadline {
                    return Err(AutomatonError::BudgetExceeded("wall clock".into()));
                }
            }
            let n = a.num_vertices();
            for u in 0..n {
                for v in u + 1..n {
                    let merged = a.merge_fold(u, v);
                    if !seen.contains(&merged) {
                        seen.insert(merged.clone());
                        queue.push_back(merged);
                    }
                }
            }
        }
        let mut out: Vec<StallingsAutomaton> = seen.into_iter().collect();
        out.sort_by(|a, b| {
            (a.num_vertices(), a.edges()).cmp(&(b.num_vertices(), b.edges()))
        });
        Ok(out)
    }

    fn merge_fold(&self, u: usize, v: usize) -> Self {
        let mut b = GraphBuilder::new(self.rank, self.num_vertices());
        for (s, l, t) in self.edges() {
            b.add_edge(s as usize, l as usize, t as usize);
        }
        b.merge(u, v);
        b.fold();
        Self::from_builder(b, 0, self.rank)
    }

    /// JSON wire form with lexicographic edge order.
    pub fn to_json(&self) -> serde_json::Value {
        let edges: Vec<serde_json::Value> = self
            .edges()
            .into_iter()
            .map(|(u, l, v)| serde_json::json!([u, l, v]))
            .collect();
        let mut map = serde_json::Map::new();
        map.insert("rank".into(), self.rank.into());
        map.insert("num_vertices".into(), self.num_vertices().into());
        map.insert("base".into(), 0.into());
        map.insert("edges".into(), serde_json::Value::Array(edges));
        serde_json::Value::Object(map)
    }

    pub fn from_json(value: &serde_json::Value) -> Result<Self, AutomatonError> {
        let obj = value
            .as_object()
            .ok_or_else(|| AutomatonError::Invalid("expected object".into()))?;
        let get_usize = |k: &str| -> Result<usize, AutomatonError> {
            obj.get(k)
                .and_then(|v| v.as_u64())
                .map(|v| v as usize)
                .ok_or_else(|| AutomatonError::Invalid(format!("missing field {k}")))
        };
        let rank = get_usize("rank")?;
        let nv = get_usize("num_vertices")?;
        if get_usize("base")? != 0 {
            return Err(AutomatonError::Invalid("base must be 0".into()));
        }
        let raw = obj
            .get("edges")
            .and_then(|v| v.as_array())
            .ok_or_else(|| AutomatonError::Invalid("missing edges".into()))?;
        let mut edges = Vec::with_capacity(raw.len());
        for e in raw {
            let t = e
                .as_array()
                .filter(|t| t.len() == 3)
                .ok_or_else(|| AutomatonError::Invalid("edge must be a triple".into()))?;
            let mut vals = [0u32; 3];
            for (i, x) in t.iter().enumerate() {
                vals[i] = x
                    .as_u64()
                    .ok_or_else(|| AutomatonError::Invalid("edge entries must be integers".into()))?
                    as u32;
            }
            edges.push((vals[0], vals[1], vals[2]));
        }
        Self::from_edges(rank, nv, &edges)
    }

    /// DOT export: one node per vertex (base doubled), one arc per
    /// positive edge labeled by the letter name.
    pub fn to_dot(&self) -> String {
        use std::fmt::Write;
        let mut s = String::from("digraph stallings {\n  rankdir=LR;\n");
        for v in 0..self.num_vertices() {
            let shape = if v == 0 { "doublecircle" } else { "circle" };
            writeln!(s, "  {v} [shape={shape}];").unwrap();
        }
        for (u, l, v) in self.edges() {
            let name = crate::words::letter_name(l as i32, self.rank);
            writeln!(s, "  {u} -> {v} [label=\"{name}\"];").unwrap();
        }
        s.push_str("}\n");
        s
    }
}

struct SpanningTree {
    parent: Vec<Option<(u32, i32)>>,
    tree: BTreeSet<(u32, u32, u32)>,
}

/// Budget for overgroup enumeration; exceeding it is an explicit error,
/// never silent truncation.
#[derive(Debug, Clone)]
pub struct OvergroupBudget {
    pub max_vertices: usize,
    pub deadline: Option<std::time::Instant>,
}

impl Default for OvergroupBudget {
    fn default() -> Self {
        OvergroupBudget { max_vertices: 12, deadline: None }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::words::Word;

    fn w(text: &str) -> Word {
        Word::parse(text, 2).unwrap()
    }

    fn subgroup(gens: &[&str]) -> StallingsAutomaton {
        let gens: Vec<Word> = gens.iter().map(|g| w(g)).collect();
        StallingsAutomaton::from_generators(2, &gens).unwrap()
    }

    #[test]
    fn fold_squares_and_loop() {
        // hand-folded bouquet: 0 -a-> 1, 1 -a-> 0, b-loop at 0
        let h = subgroup(&["aa", "b"]);
        assert_eq!(h.num_vertices(), 2);
        let edges = h.edges();
        assert_eq!(edges, vec![(0, 1, 1), (0, 2, 0), (1, 1, 0)]);
    }

    #[test]
    fn whole_group_from_generators() {
        let h = subgroup(&["a", "b"]);
        assert_eq!(h.num_vertices(), 1);
        assert_eq!(h, StallingsAutomaton::whole_group(2));
    }

    #[test]
    fn truncated_family_rejects_b() {
        // H1 = <a, babaB>: the word b must not be accepted
        let h = subgroup(&["a", "babaB"]);
        assert!(!h.member(&w("b")));
        assert!(h.member(&w("a")));
        assert!(h.member(&w("babaB")));
    }

    #[test]
    fn membership_examples() {
        let h = subgroup(&["aa", "b"]);
        assert!(h.member(&w("aab")));
        // tracing "a" ends at the non-base vertex
        assert!(!h.member(&w("a")));
    }

    #[test]
    fn basis_sizes() {
        assert_eq!(StallingsAutomaton::whole_group(2).basis().len(), 2);
        let h = subgroup(&["aa", "b"]);
        let basis = h.basis();
        assert_eq!(basis.len(), 2);
        // re-fold the basis and compare canonical forms
        let refolded = StallingsAutomaton::from_generators(2, &basis).unwrap();
        assert_eq!(refolded, h);
    }

    #[test]
    fn index_examples() {
        assert_eq!(subgroup(&["aa", "b"]).index(), SubgroupIndex::Infinite);
        assert_eq!(subgroup(&["aa", "bb", "ab"]).index(), SubgroupIndex::Finite(2));
        assert_eq!(StallingsAutomaton::whole_group(2).index(), SubgroupIndex::Finite(1));
    }

    #[test]
    fn intersection_identities() {
        let h = subgroup(&["aa", "b"]);
        assert_eq!(h.intersect(&h).unwrap(), h);
        assert_eq!(h.intersect(&StallingsAutomaton::whole_group(2)).unwrap(), h);
    }

    #[test]
    fn intersection_even_subgroups() {
        let h1 = subgroup(&["aa", "b"]);
        let h2 = subgroup(&["a", "bb"]);
        let cap = h1.intersect(&h2).unwrap();
        for member in ["aa", "bb", "aabb", "bbaa"] {
            assert!(cap.member(&w(member)), "{member} should be accepted");
        }
        for non in ["a", "b", "ab", "ba"] {
            assert!(!cap.member(&w(non)), "{non} should be rejected");
        }
    }

    #[test]
    fn conjugation_properties() {
        let h = subgroup(&["aa", "b"]);
        assert_eq!(h.conjugate(&Word::identity(2)).unwrap(), h);
        let g = w("ab");
        let hg = h.conjugate(&g).unwrap();
        assert_eq!(hg.conjugate(&g.inverse()).unwrap(), h);
        // membership transport: g^-1 h g in H^g iff h in H
        for t in ["aa", "b", "ab", "ba", "bab"] {
            let t = w(t);
            let moved = g.inverse().concat(&t).unwrap().concat(&g).unwrap();
            assert_eq!(hg.member(&moved), h.member(&t));
        }
        // conjugating by a nontrivial word typically moves the subgroup
        let ha = h.conjugate(&w("a")).unwrap();
        assert_ne!(ha, h);
    }

    #[test]
    fn core_of_normal_subgroup_is_itself() {
        let e = subgroup(&["aa", "bb", "ab"]);
        let (core, transversal) = e.core_subgroup().unwrap();
        assert_eq!(core, e);
        assert_eq!(transversal.len(), 2);
        assert!(e.is_normal());
    }

    #[test]
    fn core_of_whole_group() {
        let f = StallingsAutomaton::whole_group(2);
        let (core, _) = f.core_subgroup().unwrap();
        assert_eq!(core, f);
    }

    #[test]
    fn core_requires_finite_index() {
        let h = subgroup(&["aa", "b"]);
        assert_eq!(h.core_subgroup().unwrap_err(), AutomatonError::InfiniteIndex);
    }

    #[test]
    fn overgroup_counts() {
        let h = subgroup(&["aa", "b"]);
        let over = h.overgroups(&OvergroupBudget::default()).unwrap();
        assert_eq!(over.len(), 2);
        assert!(over.contains(&h));
        assert!(over.contains(&StallingsAutomaton::whole_group(2)));

        let f = StallingsAutomaton::whole_group(2);
        assert_eq!(f.overgroups(&OvergroupBudget::default()).unwrap().len(), 1);
    }

    #[test]
    fn overgroups_accept_all_generators() {
        let h = subgroup(&["ab", "ba"]);
        for k in h.overgroups(&OvergroupBudget::default()).unwrap() {
            assert!(k.member(&w("ab")));
            assert!(k.member(&w("ba")));
        }
    }

    #[test]
    fn overgroup_budget_is_enforced() {
        let h = subgroup(&["aa", "b"]);
        let budget = OvergroupBudget { max_vertices: 1, deadline: None };
        assert!(matches!(
            h.overgroups(&budget),
            Err(AutomatonError::BudgetExceeded(_))
        ));
    }

    #[test]
    fn canonical_form_idempotent() {
        let h = subgroup(&["ab", "ba", "bb"]);
        assert_eq!(h.canonical_form(), h);
        assert_eq!(h.canonical_form().canonical_form(), h);
    }

    #[test]
    fn express_in_basis_round_trip() {
        let h = subgroup(&["aa", "b", "aba"]);
        let basis = h.basis();
        let member = w("aa").concat(&w("b")).unwrap().concat(&w("aba")).unwrap();
        let factors = h.express_in_basis(&member).unwrap();
        let mut acc = Word::identity(2);
        for f in factors {
            let b = &basis[(f.unsigned_abs() - 1) as usize];
            let b = if f < 0 { b.inverse() } else { b.clone() };
            acc = acc.concat(&b).unwrap();
        }
        assert_eq!(acc, member);
        assert!(h.express_in_basis(&w("ab")).is_none() || h.member(&w("ab")));
    }

    #[test]
    fn json_round_trip() {
        let h = subgroup(&["aa", "b", "aba"]);
        let json = h.to_json();
        let back = StallingsAutomaton::from_json(&json).unwrap();
        assert_eq!(back, h);
    }

    #[test]
    fn dot_mentions_every_edge() {
        let h = subgroup(&["aa", "b"]);
        let dot = h.to_dot();
        assert!(dot.contains("doublecircle"));
        assert_eq!(dot.matches("->").count(), h.edges().len());
    }
}
