//! Closures of subgroups in the topologies defined by finite abelian
//! groups, with or without a bounded exponent. The image of the
//! subgroup in Z^n carries everything: index and invariant factors come
//! from the Smith normal form, membership reduces to a linear
//! Diophantine system, and when the index is finite the closure's
//! automaton is the Cayley graph of the quotient.

use num_bigint::{BigInt, BigUint};
use num_traits::{One, ToPrimitive, Zero};
use thiserror::Error;

use crate::automata::StallingsAutomaton;
use crate::intlin::{self, IntMatrix};
use crate::words::Word;

/// Vertex budget for materializing closure automata and bases.
pub const DEFAULT_INDEX_BUDGET: usize = 1_000_000;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum AbelianError {
    #[error("closure has infinite index")]
    InfiniteIndex,
    #[error("budget exceeded: {0}")]
    BudgetExceeded(String),
}

/// Which bounded-abelian topology a closure was computed in.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AbelianTopology {
    Ab,
    AbMod(u64),
}

/// Result of a closure computation: finite-or-not verdict, quotient
/// structure, and (when materialized) the closure automaton and basis.
/// The stored lattice answers membership queries in the closure.
#[derive(Debug, Clone)]
pub struct ClosureDescriptor {
    pub topology: AbelianTopology,
    pub subgroup: StallingsAutomaton,
    pub finitely_generated: bool,
    /// `None` for infinite index.
    pub index: Option<BigUint>,
    /// Invariant factors > 1 of the quotient.
    pub invariant_factors: Vec<BigUint>,
    /// Free rank of the quotient (0 in the finite case).
    pub free_rank: usize,
    pub basis: Option<Vec<Word>>,
    pub automaton: Option<StallingsAutomaton>,
    lattice: IntMatrix,
}

impl ClosureDescriptor {
    /// Membership in the closure.
    pub fn member(&self, w: &Word) -> bool {
        assert_eq!(w.rank(), self.subgroup.rank(), "rank mismatch");
        let v: Vec<BigInt> = w.exponent_vector().into_iter().map(BigInt::from).collect();
        intlin::lattice_membership(&self.lattice, &v).is_some()
    }

    pub fn is_dense(&self) -> bool {
        self.index.as_ref().is_some_and(|i| i.is_one())
    }
}

/// Rows = exponent vectors of the words in Z^rank.
pub(crate) fn exponent_matrix(words: &[Word], rank: usize) -> IntMatrix {
    if words.is_empty() {
        return IntMatrix::zero(0, rank);
    }
    IntMatrix::from_rows(
        words
            .iter()
            .map(|w| w.exponent_vector().into_iter().map(BigInt::from).collect())
            .collect::<Vec<_>>(),
    )
}

fn augmented_matrix(m: &IntMatrix, modulus: u64, rank: usize) -> IntMatrix {
    let mut rows: Vec<Vec<BigInt>> = (0..m.rows()).map(|i| m.row(i).to_vec()).collect();
    for i in 0..rank {
        let mut r = vec![BigInt::zero(); rank];
        r[i] = BigInt::from(modulus);
        rows.push(r);
    }
    if rows.is_empty() {
        IntMatrix::zero(0, rank)
    } else {
        IntMatrix::from_rows(rows)
    }
}

/// Cayley graph of the quotient of Z^n by the row lattice, in
/// mixed-radix coordinates over the invariant factors. Only valid when
/// the quotient is finite.
fn cayley_automaton(lattice: &IntMatrix, rank: usize, budget: usize) -> Option<StallingsAutomaton> {
    let snf = intlin::smith_normal_form(lattice);
    // keep the coordinates with factor > 1; factor-1 coordinates are trivial
    let mut kept: Vec<(usize, u64)> = Vec::new();
    let mut total: u128 = 1;
    for (i, e) in snf.diagonal.iter().enumerate() {
        debug_assert!(!e.is_zero(), "finite quotient required");
        if e.is_one() {
            continue;
        }
        let e = e.to_u64()?;
        total = total.checked_mul(e as u128)?;
        if total > budget as u128 {
            return None;
        }
        kept.push((i, e));
    }
    debug_assert_eq!(snf.diagonal.len(), rank);
    let total = total as usize;
    let factors: Vec<u64> = kept.iter().map(|&(_, e)| e).collect();
    // image of generator j: row j of V, reduced mod the factors
    let mut images: Vec<Vec<u64>> = Vec::with_capacity(rank);
    for j in 0..rank {
        let img = kept
            .iter()
            .map(|&(i, e)| {
                let e_big = BigInt::from(e);
                let m = &snf.v[(j, i)] % &e_big;
                let m = if m < BigInt::zero() { m + &e_big } else { m };
                m.to_u64().expect("reduced residue fits")
            })
            .collect();
        images.push(img);
    }
    let encode = |coords: &[u64]| -> usize {
        let mut id = 0usize;
        let mut stride = 1usize;
        for (c, f) in coords.iter().zip(&factors) {
            id += (*c as usize) * stride;
            stride *= *f as usize;
        }
        id
    };
    let mut edges: Vec<(u32, u32, u32)> = Vec::with_capacity(total * rank);
    let mut coords = vec![0u64; factors.len()];
    for v in 0..total {
        for (j, img) in images.iter().enumerate() {
            let target: Vec<u64> = coords
                .iter()
                .zip(img)
                .zip(&factors)
                .map(|((c, g), f)| (c + g) % f)
                .collect();
            edges.push((v as u32, (j + 1) as u32, encode(&target) as u32));
        }
        // advance mixed-radix coordinates
        for (c, f) in coords.iter_mut().zip(&factors) {
            *c += 1;
            if *c < *f {
                break;
            }
            *c = 0;
        }
    }
    Some(
        StallingsAutomaton::from_edges(rank, total, &edges)
            .expect("Cayley graph is deterministic and connected"),
    )
}

fn closure_from_lattice(
    h: &StallingsAutomaton,
    topology: AbelianTopology,
    lattice: IntMatrix,
    budget: usize,
) -> ClosureDescriptor {
    let rank = h.rank();
    let quotient = intlin::lattice_index(&lattice, rank);
    let index = quotient.index();
    let finitely_generated = rank <= 1 || index.is_some();
    let (automaton, basis) = match (&index, rank) {
        (Some(ix), _) => {
            if ix.to_usize().is_some_and(|ix| ix <= budget) {
                let aut = cayley_automaton(&lattice, rank, budget);
                let basis = aut.as_ref().map(StallingsAutomaton::basis);
                (aut, basis)
            } else {
                (None, None)
            }
        }
        // rank <= 1 with infinite index only happens for the trivial
        // subgroup of Z, whose closure is itself
        (None, 0 | 1) => (Some(h.clone()), Some(h.basis())),
        (None, _) => (None, None),
    };
    ClosureDescriptor {
        topology,
        subgroup: h.clone(),
        finitely_generated,
        index,
        invariant_factors: quotient.nontrivial_factors(),
        free_rank: quotient.free_rank,
        basis,
        automaton,
        lattice,
    }
}

/// Closure of the subgroup in the finite-abelian topology.
pub fn ab_closure(h: &StallingsAutomaton) -> ClosureDescriptor {
    ab_closure_with_budget(h, DEFAULT_INDEX_BUDGET)
}

pub fn ab_closure_with_budget(h: &StallingsAutomaton, budget: usize) -> ClosureDescriptor {
    let lattice = exponent_matrix(&h.basis(), h.rank());
    closure_from_lattice(h, AbelianTopology::Ab, lattice, budget)
}

/// Membership of `w` in the abelian closure of the subgroup.
pub fn ab_member(h: &StallingsAutomaton, w: &Word) -> bool {
    assert_eq!(h.rank(), w.rank(), "rank mismatch");
    let lattice = exponent_matrix(&h.basis(), h.rank());
    let v: Vec<BigInt> = w.exponent_vector().into_iter().map(BigInt::from).collect();
    intlin::lattice_membership(&lattice, &v).is_some()
}

/// Density in the finite-abelian topology: the image lattice is all of
/// Z^n.
pub fn ab_is_dense(h: &StallingsAutomaton) -> bool {
    let lattice = exponent_matrix(&h.basis(), h.rank());
    intlin::lattice_index(&lattice, h.rank())
        .index()
        .is_some_and(|i| i.is_one())
}

/// Closure in the topology of finite abelian groups of exponent
/// dividing `m`; the index is always finite.
pub fn abm_closure(h: &StallingsAutomaton, m: u64) -> ClosureDescriptor {
    abm_closure_with_budget(h, m, DEFAULT_INDEX_BUDGET)
}

pub fn abm_closure_with_budget(
    h: &StallingsAutomaton,
    m: u64,
    budget: usize,
) -> ClosureDescriptor {
    assert!(m >= 1, "modulus must be positive");
    let rank = h.rank();
    let base = exponent_matrix(&h.basis(), rank);
    let lattice = augmented_matrix(&base, m, rank);
    closure_from_lattice(h, AbelianTopology::AbMod(m), lattice, budget)
}

pub fn abm_member(h: &StallingsAutomaton, w: &Word, m: u64) -> bool {
    assert_eq!(h.rank(), w.rank(), "rank mismatch");
    let lattice = exponent_matrix(&h.basis(), h.rank());
    let v: Vec<BigInt> = w.exponent_vector().into_iter().map(BigInt::from).collect();
    intlin::lattice_membership_mod(&lattice, &v, m)
}

/// Per-prime density report for the bounded-exponent topology.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DensityReport {
    pub dense: bool,
    /// Verdict for each prime dividing the modulus, ascending.
    pub per_prime: Vec<(u64, bool)>,
}

fn prime_factors(mut m: u64) -> Vec<u64> {
    let mut out = Vec::new();
    let mut p = 2u64;
    while p * p <= m {
        if m % p == 0 {
            out.push(p);
            while m % p == 0 {
                m /= p;
            }
        }
        p += 1;
    }
    if m > 1 {
        out.push(m);
    }
    out
}

/// Density verdict for exponent m (>= 2) together with the per-prime
/// verdicts; the conjunction of the latter always matches the former.
pub fn abm_is_dense(h: &StallingsAutomaton, m: u64) -> DensityReport {
    assert!(m >= 2, "per-prime density needs m >= 2");
    let rank = h.rank();
    let base = exponent_matrix(&h.basis(), rank);
    let dense_mod = |k: u64| -> bool {
        intlin::lattice_index(&augmented_matrix(&base, k, rank), rank)
            .index()
            .is_some_and(|i| i.is_one())
    };
    let dense = dense_mod(m);
    let per_prime: Vec<(u64, bool)> =
        prime_factors(m).into_iter().map(|p| (p, dense_mod(p))).collect();
    debug_assert_eq!(dense, per_prime.iter().all(|&(_, d)| d));
    DensityReport { dense, per_prime }
}

/// Verifies, at the finite level, that the abelian closure equals the
/// intersection of the bounded-exponent closures over the prime powers
/// exactly dividing the quotient exponent. Expected to return true.
pub fn ab_padic_intersection_check(
    h: &StallingsAutomaton,
    exponent_bound: u64,
) -> Result<bool, AbelianError> {
    let cl = ab_closure(h);
    if cl.index.is_none() {
        return Err(AbelianError::InfiniteIndex);
    }
    let exponent = cl
        .invariant_factors
        .last()
        .cloned()
        .unwrap_or_else(BigUint::one);
    let exponent = exponent
        .to_u64()
        .filter(|&e| e <= exponent_bound)
        .ok_or_else(|| {
            AbelianError::BudgetExceeded(format!(
                "quotient exponent {exponent} exceeds bound {exponent_bound}"
            ))
        })?;
    let cl_aut = cl
        .automaton
        .ok_or_else(|| AbelianError::BudgetExceeded("closure automaton gated".into()))?;
    if exponent == 1 {
        // dense case: the empty intersection is the whole group
        return Ok(cl_aut == StallingsAutomaton::whole_group(h.rank()));
    }
    let mut intersection = StallingsAutomaton::whole_group(h.rank());
    for p in prime_factors(exponent) {
        let mut pk = p;
        while exponent % (pk * p) == 0 {
            pk *= p;
        }
        let part = abm_closure(h, pk);
        let part_aut = part
            .automaton
            .ok_or_else(|| AbelianError::BudgetExceeded("prime-power closure gated".into()))?;
        intersection = intersection
            .intersect(&part_aut)
            .expect("equal ranks");
    }
    Ok(intersection == cl_aut)
}

/// Density for the topology of finite nilpotent groups coincides with
/// abelian density.
pub fn nilpotent_density(h: &StallingsAutomaton) -> bool {
    ab_is_dense(h)
}
