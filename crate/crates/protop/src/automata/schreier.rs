//! Radius-bounded balls of the Schreier coset graph of a subgroup given
//! only by a membership oracle. The subgroup need not be finitely
//! generated; each ball is finite and effectively constructible, and the
//! spanning trees of successive balls form an increasing chain, so the
//! basis chunks enumerate a basis of the subgroup.

use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

use crate::words::Word;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum SchreierError {
    #[error("word of length {0} exceeds ball radius {1}")]
    WordTooLong(usize, usize),
    #[error("word is not a member of the subgroup")]
    NotMember,
}

/// The induced subautomaton of the Schreier graph on the cosets within
/// distance `radius` of the base coset.
#[derive(Debug, Clone)]
pub struct SchreierBall {
    rank: usize,
    radius: usize,
    reps: Vec<Word>,
    dist: Vec<usize>,
    edges: Vec<(u32, u32, u32)>,
    tree: BTreeSet<(u32, u32, u32)>,
    basis: Vec<Word>,
    basis_edges: Vec<(u32, u32, u32)>,
}

impl SchreierBall {
    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn radius(&self) -> usize {
        self.radius
    }

    pub fn num_vertices(&self) -> usize {
        self.reps.len()
    }

    /// Coset representative words, vertex 0 = the subgroup itself.
    pub fn representatives(&self) -> &[Word] {
        &self.reps
    }

    pub fn distances(&self) -> &[usize] {
        &self.dist
    }

    /// Induced positive edges, lexicographically ordered.
    pub fn edges(&self) -> &[(u32, u32, u32)] {
        &self.edges
    }

    pub fn tree_edges(&self) -> &BTreeSet<(u32, u32, u32)> {
        &self.tree
    }

    /// Basis chunk: one word per non-tree positive edge in the ball.
    pub fn basis_chunk(&self) -> &[Word] {
        &self.basis
    }
}

/// Builds the radius-`m` ball of the Schreier graph of the subgroup
/// decided by `oracle`. When `prev` is the radius-`m-1` ball of the same
/// oracle, the new spanning tree extends the previous one (this is
/// checked); the construction is deterministic either way.
pub fn schreier_ball(
    oracle: &dyn Fn(&Word) -> bool,
    rank: usize,
    radius: usize,
    prev: Option<&SchreierBall>,
) -> SchreierBall {
    let mut reps: Vec<Word> = vec![Word::identity(rank)];
    let mut dist: Vec<usize> = vec![0];
    let mut tree: BTreeSet<(u32, u32, u32)> = BTreeSet::new();

    let find_coset = |reps: &[Word], u: &Word| -> Option<usize> {
        reps.iter()
            .position(|r| oracle(&u.concat(&r.inverse()).expect("equal ranks")))
    };

    // discovery pass: vertices in BFS order with letter order 1,-1,2,-2,...
    let mut head = 0;
    while head < reps.len() {
        let v = head;
        head += 1;
        if dist[v] == radius {
            continue;
        }
        for i in 1..=rank {
            for sign in [1i32, -1] {
                let letter = sign * i as i32;
                let u = reps[v]
                    .concat(&Word::from_letters(rank, &[letter]).unwrap())
                    .unwrap();
                if find_coset(&reps, &u).is_none() {
                    let t = reps.len() as u32;
                    reps.push(u);
                    dist.push(dist[v] + 1);
                    if letter > 0 {
                        tree.insert((v as u32, letter as u32, t));
                    } else {
                        tree.insert((t, (-letter) as u32, v as u32));
                    }
                }
            }
        }
    }

    // induced edges: for each vertex and positive letter, keep the edge
    // only when the target coset lies in the ball
    let mut edges: Vec<(u32, u32, u32)> = Vec::new();
    for v in 0..reps.len() {
        for i in 1..=rank {
            let u = reps[v]
                .concat(&Word::from_letters(rank, &[i as i32]).unwrap())
                .unwrap();
            if let Some(t) = find_coset(&reps, &u) {
                edges.push((v as u32, i as u32, t as u32));
            }
        }
    }
    edges.sort_unstable();

    let mut basis = Vec::new();
    let mut basis_edges = Vec::new();
    for &(u, l, v) in &edges {
        if tree.contains(&(u, l, v)) {
            continue;
        }
        let word = reps[u as usize]
            .concat(&Word::from_letters(rank, &[l as i32]).unwrap())
            .unwrap()
            .concat(&reps[v as usize].inverse())
            .unwrap();
        basis.push(word);
        basis_edges.push((u, l, v));
    }

    let ball = SchreierBall { rank, radius, reps, dist, edges, tree, basis, basis_edges };
    if let Some(prev) = prev {
        assert!(
            prev.reps.len() <= ball.reps.len()
                && prev.reps == ball.reps[..prev.reps.len()]
                && prev.tree.is_subset(&ball.tree),
            "oracle changed between balls: tree chain broken"
        );
    }
    ball
}

/// Factors a member of the subgroup (of length at most the radius) as a
/// signed product over the ball's basis chunk; entries are 1-based
/// indices into `basis_chunk()`.
pub fn express_over_schreier_basis(
    ball: &SchreierBall,
    h: &Word,
) -> Result<Vec<i64>, SchreierError> {
    if h.len() > ball.radius {
        return Err(SchreierError::WordTooLong(h.len(), ball.radius));
    }
    let mut fwd: BTreeMap<(u32, u32), u32> = BTreeMap::new();
    let mut bwd: BTreeMap<(u32, u32), u32> = BTreeMap::new();
    for &(u, l, v) in &ball.edges {
        fwd.insert((u, l), v);
        bwd.insert((v, l), u);
    }
    let index: BTreeMap<(u32, u32, u32), i64> = ball
        .basis_edges
        .iter()
        .enumerate()
        .map(|(i, &e)| (e, (i + 1) as i64))
        .collect();
    let mut cur = 0u32;
    let mut out = Vec::new();
    for &l in h.letters() {
        if l > 0 {
            let nxt = *fwd.get(&(cur, l as u32)).ok_or(SchreierError::NotMember)?;
            if let Some(&i) = index.get(&(cur, l as u32, nxt)) {
                out.push(i);
            }
            cur = nxt;
        } else {
            let nxt = *bwd.get(&(cur, (-l) as u32)).ok_or(SchreierError::NotMember)?;
            if let Some(&i) = index.get(&(nxt, (-l) as u32, cur)) {
                out.push(-i);
            }
            cur = nxt;
        }
    }
    if cur != 0 {
        return Err(SchreierError::NotMember);
    }
    // the factorization must re-multiply to h
    debug_assert_eq!(
        {
            let mut acc = Word::identity(ball.rank);
            for &f in &out {
                let b = &ball.basis[(f.unsigned_abs() - 1) as usize];
                let b = if f < 0 { b.inverse() } else { b.clone() };
                acc = acc.concat(&b).unwrap();
            }
            acc
        },
        *h
    );
    Ok(out)
}
