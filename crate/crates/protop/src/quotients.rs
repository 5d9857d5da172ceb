//! Finite quotients of a free group as concrete groups: construction
//! from complete normal coset automata or permutation images, derived
//! series, identity checking, and preimages of subgroups.

use std::collections::HashMap;
use std::sync::OnceLock;

use thiserror::Error;

use crate::automata::StallingsAutomaton;
use crate::words::Word;

/// Multiplication tables are materialized lazily up to this order.
const TABLE_CAP: usize = 256;

/// Identity brute force is capped at this many assignments.
const IDENTITY_ASSIGNMENT_CAP: u128 = 10_000_000;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum QuotientError {
    #[error("automaton is not complete")]
    NotComplete,
    #[error("subgroup is not normal")]
    NotNormal,
    #[error("permutation degrees do not match")]
    DegreeMismatch,
    #[error("the given subsets do not generate the group")]
    NotGenerating,
    #[error("budget exceeded: {0}")]
    BudgetExceeded(String),
    #[error("invalid permutation: {0}")]
    InvalidPermutation(String),
}

/// A pseudovariety of finite groups, either one of the built-in classes
/// or an equational class given by identity words over the variables
/// `x1..x9` (represented as words of rank 9).
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PseudovarietyDescriptor {
    /// All finite abelian groups.
    Ab,
    /// Finite abelian groups of exponent dividing `m` (m >= 1).
    AbMod(u64),
    /// Finite metabelian groups (derived length <= 2).
    Meta,
    /// Finite solvable groups of derived length <= k (k >= 1).
    Solvable(u32),
    /// Finite groups satisfying every listed identity.
    Identities(Vec<Word>),
}

impl PseudovarietyDescriptor {
    /// True when the descriptor imposes no constraint, i.e. it denotes
    /// the class of all finite groups.
    pub fn is_trivial(&self) -> bool {
        match self {
            PseudovarietyDescriptor::Identities(ws) => ws.iter().all(Word::is_empty),
            _ => false,
        }
    }
}

/// A finite quotient F_n/N with elements 0..order-1, identity 0.
/// Generator `i` acts on elements by right multiplication; products are
/// realized by walking representative words, with a full table
/// materialized lazily for small orders.
#[derive(Debug)]
pub struct FiniteQuotient {
    rank: usize,
    order: usize,
    gen_images: Vec<Vec<u32>>,
    gen_inv_images: Vec<Vec<u32>>,
    rep_words: Vec<Word>,
    table: OnceLock<Option<Vec<u32>>>,
}

impl FiniteQuotient {
    /// Quotient of the free group by the subgroup of a complete,
    /// conjugation-invariant automaton: elements are the vertices, the
    /// base is the identity, generator `i` acts by the `i`-edges.
    pub fn from_core_automaton(aut: &StallingsAutomaton) -> Result<Self, QuotientError> {
        if !aut.is_complete() {
            return Err(QuotientError::NotComplete);
        }
        if !aut.is_normal() {
            return Err(QuotientError::NotNormal);
        }
        Ok(Self::from_cayley_automaton(aut))
    }

    /// Same construction without the normality check; callers must pass
    /// a genuine Cayley automaton (e.g. the output of `core_subgroup`).
    pub(crate) fn from_cayley_automaton(aut: &StallingsAutomaton) -> Self {
        debug_assert!(aut.is_complete());
        let order = aut.num_vertices();
        let rank = aut.rank();
        let mut gen_images = vec![vec![0u32; order]; rank];
        let mut gen_inv_images = vec![vec![0u32; order]; rank];
        for v in 0..order as u32 {
            for i in 1..=rank {
                gen_images[i - 1][v as usize] = aut.succ_of(v, i).expect("complete");
                gen_inv_images[i - 1][v as usize] = aut.pred_of(v, i).expect("complete");
            }
        }
        FiniteQuotient {
            rank,
            order,
            gen_images,
            gen_inv_images,
            rep_words: aut.transversal(),
            table: OnceLock::new(),
        }
    }

    /// The group generated by the given permutations (all of a common
    /// degree), with its Cayley structure on its own elements. Also
    /// returns the permutation realizing each element.
    pub fn from_permutations(
        rank: usize,
        perms: &[Vec<usize>],
    ) -> Result<(Self, Vec<Vec<usize>>), QuotientError> {
        if perms.len() != rank {
            return Err(QuotientError::DegreeMismatch);
        }
        let degree = perms.first().map_or(0, Vec::len);
        for p in perms {
            if p.len() != degree {
                return Err(QuotientError::DegreeMismatch);
            }
            let mut seen = vec![false; degree];
            for &x in p {
                if x >= degree || seen[x] {
                    return Err(QuotientError::InvalidPermutation(format!("{p:?}")));
                }
                seen[x] = true;
            }
        }
        // apply left-to-right: (p * q)(x) = q(p(x))
        let compose = |p: &[usize], q: &[usize]| -> Vec<usize> {
            p.iter().map(|&x| q[x]).collect()
        };
        let id: Vec<usize> = (0..degree).collect();
        let mut ids: HashMap<Vec<usize>, u32> = HashMap::new();
        ids.insert(id.clone(), 0);
        let mut elems = vec![id];
        let mut rep_words = vec![Word::identity(rank)];
        let mut head = 0;
        while head < elems.len() {
            let cur = elems[head].clone();
            let cur_word = rep_words[head].clone();
            head += 1;
            for (i, p) in perms.iter().enumerate() {
                let next = compose(&cur, p);
                if !ids.contains_key(&next) {
                    ids.insert(next.clone(), elems.len() as u32);
                    elems.push(next);
                    rep_words.push(
                        cur_word
                            .concat(&Word::generator(rank, i + 1).expect("valid letter"))
                            .expect("equal ranks"),
                    );
                }
            }
        }
        let order = elems.len();
        let mut gen_images = vec![vec![0u32; order]; rank];
        let mut gen_inv_images = vec![vec![0u32; order]; rank];
        for (x, e) in elems.iter().enumerate() {
            for (i, p) in perms.iter().enumerate() {
                let y = ids[&compose(e, p)];
                gen_images[i][x] = y;
                gen_inv_images[i][y as usize] = x as u32;
            }
        }
        let q = FiniteQuotient {
            rank,
            order,
            gen_images,
            gen_inv_images,
            rep_words,
            table: OnceLock::new(),
        };
        Ok((q, elems))
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn order(&self) -> usize {
        self.order
    }

    /// Element of the image of generator `i` (1-based).
    pub fn generator_element(&self, i: usize) -> u32 {
        self.gen_images[i - 1][0]
    }

    pub fn eval_word(&self, from: u32, w: &Word) -> u32 {
        let mut cur = from;
        for &l in w.letters() {
            cur = if l > 0 {
                self.gen_images[l as usize - 1][cur as usize]
            } else {
                self.gen_inv_images[(-l) as usize - 1][cur as usize]
            };
        }
        cur
    }

    pub fn element_of_word(&self, w: &Word) -> u32 {
        self.eval_word(0, w)
    }

    fn table(&self) -> Option<&Vec<u32>> {
        self.table
            .get_or_init(|| {
                if self.order > TABLE_CAP {
                    return None;
                }
                let mut t = vec![0u32; self.order * self.order];
                for x in 0..self.order as u32 {
                    for y in 0..self.order {
                        t[x as usize * self.order + y] =
                            self.eval_word(x, &self.rep_words[y]);
                    }
                }
                Some(t)
            })
            .as_ref()
    }

    pub fn mult(&self, x: u32, y: u32) -> u32 {
        if let Some(t) = self.table() {
            t[x as usize * self.order + y as usize]
        } else {
            self.eval_word(x, &self.rep_words[y as usize])
        }
    }

    pub fn inv(&self, x: u32) -> u32 {
        self.eval_word(0, &self.rep_words[x as usize].inverse())
    }

    pub fn pow(&self, x: u32, e: u64) -> u32 {
        let mut acc = 0u32;
        let mut base = x;
        let mut e = e;
        while e > 0 {
            if e & 1 == 1 {
                acc = self.mult(acc, base);
            }
            base = self.mult(base, base);
            e >>= 1;
        }
        acc
    }

    pub fn commutator(&self, x: u32, y: u32) -> u32 {
        let xy = self.mult(x, y);
        let yx = self.mult(y, x);
        self.mult(self.inv(yx), xy)
    }

    pub fn representative(&self, x: u32) -> &Word {
        &self.rep_words[x as usize]
    }

    /// Subgroup generated by the given elements, as a sorted element
    /// list together with the generating set actually used.
    pub fn subgroup_closure(&self, gens: &[u32]) -> Vec<u32> {
        let mut full_gens: Vec<u32> = Vec::new();
        for &g in gens {
            full_gens.push(g);
            full_gens.push(self.inv(g));
        }
        let mut member = vec![false; self.order];
        member[0] = true;
        let mut queue = vec![0u32];
        let mut head = 0;
        while head < queue.len() {
            let x = queue[head];
            head += 1;
            for &g in &full_gens {
                let y = self.mult(x, g);
                if !member[y as usize] {
                    member[y as usize] = true;
                    queue.push(y);
                }
            }
        }
        queue.sort_unstable();
        queue
    }

    /// Normal closure of `seeds` inside the subgroup generated by
    /// `parent_gens`, returned as (sorted element list, generators).
    fn normal_closure_within(
        &self,
        parent_gens: &[u32],
        seeds: &[u32],
    ) -> (Vec<u32>, Vec<u32>) {
        let mut gens: Vec<u32> = seeds.iter().copied().filter(|&s| s != 0).collect();
        gens.sort_unstable();
        gens.dedup();
        loop {
            let sub = self.subgroup_closure(&gens);
            let inside = {
                let mut m = vec![false; self.order];
                for &x in &sub {
                    m[x as usize] = true;
                }
                m
            };
            let mut grew = false;
            'outer: for &x in &sub {
                for &g in parent_gens {
                    let c = self.mult(self.mult(self.inv(g), x), g);
                    if !inside[c as usize] {
                        gens.push(c);
                        grew = true;
                        break 'outer;
                    }
                }
            }
            if !grew {
                return (sub, gens);
            }
        }
    }

    /// Derived subgroup of the subgroup generated by `gens`: the normal
    /// closure (within that subgroup) of the commutators of generator
    /// pairs. Returns (sorted elements, generating set).
    fn derived_subgroup(&self, gens: &[u32]) -> (Vec<u32>, Vec<u32>) {
        let mut seeds = Vec::new();
        for &x in gens {
            for &y in gens {
                let c = self.commutator(x, y);
                if c != 0 {
                    seeds.push(c);
                }
            }
        }
        self.normal_closure_within(gens, &seeds)
    }

    /// Orders of the derived series, stopping at the first repetition
    /// (so `[1]` for the trivial group, `[6, 3, 1]` for one of derived
    /// length 2, and a terminal entry > 1 exactly for perfect tails).
    pub fn derived_series(&self) -> Vec<usize> {
        let mut orders = Vec::new();
        let mut gens: Vec<u32> = (1..=self.rank).map(|i| self.generator_element(i)).collect();
        let mut size = self.order;
        loop {
            orders.push(size);
            let (next, next_gens) = self.derived_subgroup(&gens);
            if next.len() == size {
                break;
            }
            size = next.len();
            gens = next_gens;
        }
        orders
    }

    pub fn is_solvable(&self) -> bool {
        *self.derived_series().last().unwrap() == 1
    }

    /// Number of strict steps of the derived series; `None` when the
    /// group is not solvable.
    pub fn derived_length(&self) -> Option<usize> {
        let series = self.derived_series();
        if *series.last().unwrap() == 1 {
            Some(series.len() - 1)
        } else {
            None
        }
    }

    /// Membership of the quotient in the pseudovariety.
    pub fn satisfies(&self, v: &PseudovarietyDescriptor) -> Result<bool, QuotientError> {
        match v {
            PseudovarietyDescriptor::Ab => Ok(self.generators_commute()),
            PseudovarietyDescriptor::AbMod(m) => {
                if !self.generators_commute() {
                    return Ok(false);
                }
                // exponent is not detectable on generators alone
                Ok((0..self.order as u32).all(|g| self.pow(g, *m) == 0))
            }
            PseudovarietyDescriptor::Meta => Ok(self.derived_length().is_some_and(|l| l <= 2)),
            PseudovarietyDescriptor::Solvable(k) => {
                Ok(self.derived_length().is_some_and(|l| l <= *k as usize))
            }
            PseudovarietyDescriptor::Identities(ws) => self.satisfies_identities(ws),
        }
    }

    fn generators_commute(&self) -> bool {
        let gens: Vec<u32> = (1..=self.rank).map(|i| self.generator_element(i)).collect();
        gens.iter()
            .all(|&x| gens.iter().all(|&y| self.mult(x, y) == self.mult(y, x)))
    }

    fn satisfies_identities(&self, words: &[Word]) -> Result<bool, QuotientError> {
        let inverses: Vec<u32> = (0..self.order as u32).map(|x| self.inv(x)).collect();
        for w in words {
            if w.is_empty() {
                continue;
            }
            let r = w
                .letters()
                .iter()
                .map(|l| l.unsigned_abs() as usize)
                .max()
                .unwrap();
            let total = (self.order as u128)
                .checked_pow(r as u32)
                .filter(|&t| t <= IDENTITY_ASSIGNMENT_CAP)
                .ok_or_else(|| {
                    QuotientError::BudgetExceeded(format!(
                        "identity brute force needs {}^{} assignments",
                        self.order, r
                    ))
                })?;
            let mut assign = vec![0u32; r];
            for step in 0..total {
                let mut cur = 0u32;
                for &l in w.letters() {
                    let e = assign[l.unsigned_abs() as usize - 1];
                    let e = if l < 0 { inverses[e as usize] } else { e };
                    cur = self.mult(cur, e);
                }
                if cur != 0 {
                    return Ok(false);
                }
                if step + 1 < total {
                    for digit in assign.iter_mut() {
                        *digit += 1;
                        if (*digit as usize) < self.order {
                            break;
                        }
                        *digit = 0;
                    }
                }
            }
        }
        Ok(true)
    }

    /// Coset automaton of the preimage of the subgroup generated by `s`:
    /// complete, with index equal to the subgroup's index in the
    /// quotient.
    pub fn preimage_subgroup(&self, s: &[u32]) -> StallingsAutomaton {
        let sub = self.subgroup_closure(s);
        let mut coset_of: Vec<Option<u32>> = vec![None; self.order];
        for &u in &sub {
            coset_of[u as usize] = Some(0);
        }
        let mut reps: Vec<u32> = vec![0];
        let mut edges: Vec<(u32, u32, u32)> = Vec::new();
        let mut head = 0;
        while head < reps.len() {
            let c = head as u32;
            let x = reps[head];
            head += 1;
            for i in 1..=self.rank {
                let y = self.mult(x, self.generator_element(i));
                let t = match coset_of[y as usize] {
                    Some(t) => t,
                    None => {
                        let t = reps.len() as u32;
                        reps.push(y);
                        for &u in &sub {
                            coset_of[self.mult(u, y) as usize] = Some(t);
                        }
                        t
                    }
                };
                edges.push((c, i as u32, t));
            }
        }
        StallingsAutomaton::from_edges(self.rank, reps.len(), &edges)
            .expect("coset automaton is deterministic and connected")
    }

    /// Checks the product identity `G' = N' [N,H] H'` for `G` this
    /// quotient, `N` the subgroup generated by `n_elems` (required
    /// normal) and `H` the one generated by `h_elems`, with
    /// `<N union H> = G` required. All sides are computed by commutator
    /// closure; a `false` return indicates an implementation bug.
    pub fn derp_check(&self, n_elems: &[u32], h_elems: &[u32]) -> Result<bool, QuotientError> {
        let n_sub = self.subgroup_closure(n_elems);
        let h_sub = self.subgroup_closure(h_elems);
        let in_n = {
            let mut m = vec![false; self.order];
            for &x in &n_sub {
                m[x as usize] = true;
            }
            m
        };
        for &x in &n_sub {
            for g in 0..self.order as u32 {
                let c = self.mult(self.mult(self.inv(g), x), g);
                if !in_n[c as usize] {
                    return Err(QuotientError::NotNormal);
                }
            }
        }
        let union: Vec<u32> = n_sub.iter().chain(h_sub.iter()).copied().collect();
        if self.subgroup_closure(&union).len() != self.order {
            return Err(QuotientError::NotGenerating);
        }

        let commutator_subgroup = |xs: &[u32], ys: &[u32]| -> Vec<u32> {
            let mut seeds = Vec::new();
            for &x in xs {
                for &y in ys {
                    seeds.push(self.commutator(x, y));
                }
            }
            self.subgroup_closure(&seeds)
        };
        let all: Vec<u32> = (0..self.order as u32).collect();
        let g_prime = commutator_subgroup(&all, &all);
        let n_prime = commutator_subgroup(&n_sub, &n_sub);
        let nh = commutator_subgroup(&n_sub, &h_sub);
        let h_prime = commutator_subgroup(&h_sub, &h_sub);

        let mut product = vec![false; self.order];
        for &x in &n_prime {
            for &y in &nh {
                let xy = self.mult(x, y);
                for &z in &h_prime {
                    product[self.mult(xy, z) as usize] = true;
                }
            }
        }
        let product: Vec<u32> = (0..self.order as u32)
            .filter(|&x| product[x as usize])
            .collect();
        Ok(product == g_prime)
    }
}

/// Parses cycle notation like `"(1 2)(3 4 5)"` into 1-based cycles.
/// `"()"` and the empty string denote the identity.
pub fn parse_cycles(text: &str) -> Result<Vec<Vec<usize>>, QuotientError> {
    let mut cycles = Vec::new();
    let mut rest = text.trim();
    while !rest.is_empty() {
        let Some(stripped) = rest.strip_prefix('(') else {
            return Err(QuotientError::InvalidPermutation(format!(
                "expected '(' in {text:?}"
            )));
        };
        let Some(close) = stripped.find(')') else {
            return Err(QuotientError::InvalidPermutation(format!(
                "unclosed cycle in {text:?}"
            )));
        };
        let inner = &stripped[..close];
        let mut cycle = Vec::new();
        for tok in inner.split_whitespace() {
            let p: usize = tok.parse().map_err(|_| {
                QuotientError::InvalidPermutation(format!("bad point {tok:?}"))
            })?;
            if p == 0 {
                return Err(QuotientError::InvalidPermutation("points are 1-based".into()));
            }
            cycle.push(p);
        }
        if !cycle.is_empty() {
            cycles.push(cycle);
        }
        rest = stripped[close + 1..].trim_start();
    }
    Ok(cycles)
}

/// Builds the permutation of `0..degree` given by the 1-based cycles.
pub fn permutation_from_cycles(
    cycles: &[Vec<usize>],
    degree: usize,
) -> Result<Vec<usize>, QuotientError> {
    let mut perm: Vec<usize> = (0..degree).collect();
    let mut moved = vec![false; degree];
    for cycle in cycles {
        for w in 0..cycle.len() {
            let src = cycle[w];
            let dst = cycle[(w + 1) % cycle.len()];
            if src > degree || dst > degree {
                return Err(QuotientError::InvalidPermutation(format!(
                    "point {} exceeds degree {degree}",
                    src.max(dst)
                )));
            }
            if moved[src - 1] {
                return Err(QuotientError::InvalidPermutation(format!(
                    "point {src} appears twice"
                )));
            }
            moved[src - 1] = true;
            perm[src - 1] = dst - 1;
        }
    }
    Ok(perm)
}
