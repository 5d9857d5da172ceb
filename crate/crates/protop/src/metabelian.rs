//! The topology of finite metabelian groups. Membership in the closure
//! of a subgroup is semidecided from both sides and the two half-
//! procedures are dovetailed: the positive side searches for a
//! factorization of the query as (element of the subgroup) times
//! (element of the second derived subgroup, detected by abelianized
//! free differential calculus), while the negative side searches for a
//! separating finite-index subgroup whose core quotient is metabelian.
//! Both kinds of answer carry certificates that are re-checked on
//! emission. A closure procedure that rewrites the subgroup inside its
//! abelian closure is provided alongside a validation harness that
//! cross-examines its candidate against the certificate engine, because
//! the two routes disagree on some inputs (see `meta_closure_validated`).

use std::collections::BTreeMap;
use std::time::Instant;

use num_bigint::{BigInt, BigUint};
use num_traits::{One, ToPrimitive, Zero};
use thiserror::Error;

use crate::abelian::{self, ClosureDescriptor};
use crate::automata::{EnumBudget, StallingsAutomaton, SubgroupIndex};
use crate::intlin;
use crate::quotients::FiniteQuotient;
use crate::words::Word;

/// Abelian-certificate automata are only materialized up to this size.
const CERTIFICATE_INDEX_CAP: usize = 4096;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum MetaError {
    #[error("wall-clock deadline exceeded")]
    DeadlineExceeded,
    #[error("budget exceeded: {0}")]
    BudgetExceeded(String),
}

/// Multivariate Laurent polynomial with exact integer coefficients.
/// Zero coefficients are never stored, so equality is structural.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LaurentPoly {
    nvars: usize,
    terms: BTreeMap<Vec<i64>, BigInt>,
}

impl LaurentPoly {
    pub fn zero(nvars: usize) -> Self {
        LaurentPoly { nvars, terms: BTreeMap::new() }
    }

    pub fn monomial(nvars: usize, exps: &[i64], coeff: BigInt) -> Self {
        let mut p = LaurentPoly::zero(nvars);
        p.add_monomial(exps, coeff);
        p
    }

    pub fn one(nvars: usize) -> Self {
        Self::monomial(nvars, &vec![0; nvars], BigInt::one())
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn num_vars(&self) -> usize {
        self.nvars
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Vec<i64>, &BigInt)> {
        self.terms.iter()
    }

    pub fn add_monomial(&mut self, exps: &[i64], coeff: BigInt) {
        debug_assert_eq!(exps.len(), self.nvars);
        if coeff.is_zero() {
            return;
        }
        let entry = self.terms.entry(exps.to_vec()).or_insert_with(BigInt::zero);
        *entry += coeff;
        if entry.is_zero() {
            self.terms.remove(exps);
        }
    }

    pub fn add(&self, other: &LaurentPoly) -> LaurentPoly {
        debug_assert_eq!(self.nvars, other.nvars);
        let mut out = self.clone();
        for (e, c) in &other.terms {
            out.add_monomial(e, c.clone());
        }
        out
    }

    pub fn neg(&self) -> LaurentPoly {
        LaurentPoly {
            nvars: self.nvars,
            terms: self.terms.iter().map(|(e, c)| (e.clone(), -c)).collect(),
        }
    }

    pub fn sub(&self, other: &LaurentPoly) -> LaurentPoly {
        self.add(&other.neg())
    }

    /// Multiplication by `coeff * x^shift`.
    pub fn mul_monomial(&self, shift: &[i64], coeff: &BigInt) -> LaurentPoly {
        debug_assert_eq!(shift.len(), self.nvars);
        if coeff.is_zero() {
            return LaurentPoly::zero(self.nvars);
        }
        LaurentPoly {
            nvars: self.nvars,
            terms: self
                .terms
                .iter()
                .map(|(e, c)| {
                    let shifted: Vec<i64> =
                        e.iter().zip(shift).map(|(a, b)| a + b).collect();
                    (shifted, c * coeff)
                })
                .collect(),
        }
    }

    pub fn mul(&self, other: &LaurentPoly) -> LaurentPoly {
        debug_assert_eq!(self.nvars, other.nvars);
        let mut out = LaurentPoly::zero(self.nvars);
        for (e1, c1) in &self.terms {
            for (e2, c2) in &other.terms {
                let e: Vec<i64> = e1.iter().zip(e2).map(|(a, b)| a + b).collect();
                out.add_monomial(&e, c1 * c2);
            }
        }
        out
    }
}

/// Abelianized free derivatives `D_i(w)`, obeying `D(a_i) = e_i`,
/// `D(a_i^-1) = -x_i^-1 e_i` and `D(uv) = D(u) + x^{ab(u)} D(v)`.
pub fn fox_derivatives(w: &Word) -> Vec<LaurentPoly> {
    let n = w.rank();
    let mut d: Vec<LaurentPoly> = (0..n).map(|_| LaurentPoly::zero(n)).collect();
    let mut prefix_ab = vec![0i64; n];
    for &l in w.letters() {
        let i = l.unsigned_abs() as usize - 1;
        if l > 0 {
            d[i].add_monomial(&prefix_ab, BigInt::one());
            prefix_ab[i] += 1;
        } else {
            prefix_ab[i] -= 1;
            d[i].add_monomial(&prefix_ab, -BigInt::one());
        }
    }
    d
}

/// Membership of `w` in the second derived subgroup, by the kernel
/// criterion of the wreath-product embedding of the free metabelian
/// group: all abelianized derivatives vanish (which forces a vanishing
/// exponent vector as well).
pub fn in_second_derived(w: &Word) -> bool {
    if w.exponent_vector().iter().any(|&e| e != 0) {
        return false;
    }
    fox_derivatives(w).iter().all(LaurentPoly::is_zero)
}

/// Search budgets for the dovetailed membership engine. Exhaustion is
/// a verdict, not an error; `max_products` caps the total number of
/// subgroup-side products tested so that wide bases cannot make a
/// nominally bounded search astronomically long.
#[derive(Debug, Clone)]
pub struct Budget {
    pub max_len: usize,
    pub max_index: usize,
    pub max_products: u64,
    pub deadline: Option<Instant>,
}

impl Default for Budget {
    fn default() -> Self {
        Budget { max_len: 12, max_index: 7, max_products: 2_000_000, deadline: None }
    }
}

/// What a search consumed before giving up.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BudgetReport {
    pub max_len: usize,
    pub max_index: usize,
    pub products_tested: u64,
    pub positive_truncated: bool,
    pub negative_truncated: bool,
}

/// Member witness: `w = h * c` with `h` a product over the subgroup's
/// basis (signed 1-based indices) and `c` in the second derived
/// subgroup.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MemberWitness {
    pub factorization: Vec<i64>,
    pub subgroup_word: Word,
    pub residual: Word,
}

/// Non-member certificate: a clopen subgroup for this topology that
/// contains the subgroup but not the query word.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Certificate {
    pub subgroup: StallingsAutomaton,
    pub index: usize,
    pub core_quotient_order: usize,
    pub core_derived_series: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum MetaVerdict {
    Member(MemberWitness),
    NonMember(Box<Certificate>),
    Exhausted(BudgetReport),
}

impl MetaVerdict {
    pub fn is_member(&self) -> bool {
        matches!(self, MetaVerdict::Member(_))
    }

    pub fn is_nonmember(&self) -> bool {
        matches!(self, MetaVerdict::NonMember(_))
    }
}

fn certificate_is_valid(gens: &[Word], w: &Word, cert: &Certificate) -> bool {
    if !cert.subgroup.is_complete() || cert.subgroup.num_vertices() != cert.index {
        return false;
    }
    if !gens.iter().all(|g| cert.subgroup.member(g)) {
        return false;
    }
    if cert.subgroup.member(w) {
        return false;
    }
    let Ok((core, _)) = cert.subgroup.core_subgroup() else {
        return false;
    };
    let q = FiniteQuotient::from_cayley_automaton(&core);
    let series = q.derived_series();
    if series != cert.core_derived_series || q.order() != cert.core_quotient_order {
        return false;
    }
    *series.last().unwrap() == 1 && series.len() - 1 <= 2
}

/// Separating certificate from the abelian image, when the query's
/// exponent vector lies outside the subgroup's lattice: a violated
/// Smith coordinate yields a modulus whose bounded-exponent closure
/// excludes the query.
fn abelian_certificate(h: &StallingsAutomaton, w: &Word) -> Option<Certificate> {
    let rank = h.rank();
    let lattice = abelian::exponent_matrix(&h.basis(), rank);
    let snf = intlin::smith_normal_form(&lattice);
    let ev: Vec<BigInt> = w.exponent_vector().into_iter().map(BigInt::from).collect();
    let mut coords = vec![BigInt::zero(); rank];
    for (j, c) in coords.iter_mut().enumerate() {
        for (i, e) in ev.iter().enumerate() {
            *c += e * &snf.v[(i, j)];
        }
    }
    let mut modulus: Option<u64> = None;
    for (i, c) in coords.iter().enumerate() {
        let factor = snf.diagonal.get(i).cloned().unwrap_or_else(BigUint::zero);
        if factor.is_zero() {
            if !c.is_zero() {
                modulus = c.magnitude().to_u64().and_then(|m| m.checked_add(1));
                break;
            }
        } else if !(c % BigInt::from(factor.clone())).is_zero() {
            modulus = factor.to_u64();
            break;
        }
    }
    let m = modulus?;
    let cl = abelian::abm_closure_with_budget(h, m, CERTIFICATE_INDEX_CAP);
    let aut = cl.automaton?;
    if aut.member(w) {
        return None;
    }
    let q = FiniteQuotient::from_cayley_automaton(&aut);
    let order = q.order();
    Some(Certificate {
        index: aut.num_vertices(),
        core_quotient_order: order,
        core_derived_series: q.derived_series(),
        subgroup: aut,
    })
}

struct SignedOption {
    ab: Vec<i64>,
    derivs: Vec<LaurentPoly>,
    signed_index: i64,
    inverse_of: usize,
}

struct Engine {
    options: Vec<SignedOption>,
    target_ab: Vec<i64>,
    target_derivs: Vec<LaurentPoly>,
    products_tested: u64,
    max_products: u64,
    deadline: Option<Instant>,
    found: Option<Vec<i64>>,
}

enum BatchOutcome {
    Done,
    Truncated,
}

impl Engine {
    fn new(basis: &[Word], w: &Word, budget: &Budget) -> Self {
        debug_assert!(basis.iter().all(|b| b.rank() == w.rank()));
        let mut options = Vec::with_capacity(2 * basis.len());
        for (i, b) in basis.iter().enumerate() {
            let ab: Vec<i64> = b.exponent_vector();
            let derivs = fox_derivatives(b);
            let neg_ab: Vec<i64> = ab.iter().map(|e| -e).collect();
            // D(b^-1) = -x^{-ab(b)} D(b)
            let inv_derivs: Vec<LaurentPoly> = derivs
                .iter()
                .map(|d| d.mul_monomial(&neg_ab, &BigInt::from(-1)))
                .collect();
            options.push(SignedOption {
                ab,
                derivs,
                signed_index: (i + 1) as i64,
                inverse_of: 2 * i + 1,
            });
            options.push(SignedOption {
                ab: neg_ab,
                derivs: inv_derivs,
                signed_index: -((i + 1) as i64),
                inverse_of: 2 * i,
            });
        }
        Engine {
            options,
            target_ab: w.exponent_vector(),
            target_derivs: fox_derivatives(w),
            products_tested: 0,
            max_products: budget.max_products,
            deadline: budget.deadline,
            found: None,
        }
    }

    /// Tests every reduced product of exactly `len` basis letters.
    fn positive_batch(&mut self, len: usize) -> Result<BatchOutcome, MetaError> {
        let rank = self.target_ab.len();
        let ab = vec![0i64; rank];
        let derivs: Vec<LaurentPoly> = (0..rank).map(|_| LaurentPoly::zero(rank)).collect();
        let mut seq = Vec::with_capacity(len);
        self.dfs(len, usize::MAX, &ab, &derivs, &mut seq)
    }

    fn dfs(
        &mut self,
        remaining: usize,
        last: usize,
        ab: &[i64],
        derivs: &[LaurentPoly],
        seq: &mut Vec<i64>,
    ) -> Result<BatchOutcome, MetaError> {
        if remaining == 0 {
            self.products_tested += 1;
            if self.products_tested % 1024 == 0 {
                if let Some(deadline) = self.deadline {
                    if Instant::now() > deadline {
                        return Err(MetaError::DeadlineExceeded);
                    }
                }
            }
            if ab == self.target_ab && derivs == self.target_derivs {
                self.found = Some(seq.clone());
            }
            if self.products_tested >= self.max_products {
                return Ok(BatchOutcome::Truncated);
            }
            return Ok(BatchOutcome::Done);
        }
        for oi in 0..self.options.len() {
            if last != usize::MAX && self.options[oi].inverse_of == last {
                continue; // immediate cancellation
            }
            // D(u v) = D(u) + x^{ab(u)} D(v)
            let (next_ab, next_derivs, signed) = {
                let opt = &self.options[oi];
                let next_ab: Vec<i64> =
                    ab.iter().zip(&opt.ab).map(|(a, b)| a + b).collect();
                let next_derivs: Vec<LaurentPoly> = derivs
                    .iter()
                    .zip(&opt.derivs)
                    .map(|(du, dv)| du.add(&dv.mul_monomial(ab, &BigInt::one())))
                    .collect();
                (next_ab, next_derivs, opt.signed_index)
            };
            seq.push(signed);
            let out = self.dfs(remaining - 1, oi, &next_ab, &next_derivs, seq);
            seq.pop();
            match out? {
                BatchOutcome::Done => {
                    if self.found.is_some() {
                        return Ok(BatchOutcome::Done);
                    }
                }
                BatchOutcome::Truncated => return Ok(BatchOutcome::Truncated),
            }
        }
        Ok(BatchOutcome::Done)
    }
}

fn member_witness_from_indices(
    h: &StallingsAutomaton,
    basis: &[Word],
    w: &Word,
    indices: Vec<i64>,
) -> MemberWitness {
    let rank = h.rank();
    let mut prod = Word::identity(rank);
    for &i in &indices {
        let b = &basis[(i.unsigned_abs() - 1) as usize];
        let b = if i < 0 { b.inverse() } else { b.clone() };
        prod = prod.concat(&b).expect("equal ranks");
    }
    let residual = prod.inverse().concat(w).expect("equal ranks");
    assert!(
        in_second_derived(&residual),
        "engine invariant: residual must lie in the second derived subgroup"
    );
    MemberWitness { factorization: indices, subgroup_word: prod, residual }
}

/// Membership of `w` in the closure of the subgroup for this topology.
/// Dovetails a positive product search against a negative separating-
/// subgroup search; `Exhausted` is a first-class outcome.
pub fn meta_member(
    h: &StallingsAutomaton,
    w: &Word,
    budget: &Budget,
) -> Result<MetaVerdict, MetaError> {
    assert_eq!(h.rank(), w.rank(), "rank mismatch");
    let rank = h.rank();
    let basis = h.basis();

    // direct membership in the subgroup itself
    if let Some(factorization) = h.express_in_basis(w) {
        let witness = member_witness_from_indices(h, &basis, w, factorization);
        return Ok(MetaVerdict::Member(witness));
    }

    if rank <= 1 {
        // the second derived subgroup is trivial: the closure is the
        // subgroup, and w is not in it; certify with a cyclic quotient
        let cert = rank_one_certificate(h, w);
        debug_assert!(certificate_is_valid(&basis, w, &cert));
        return Ok(MetaVerdict::NonMember(Box::new(cert)));
    }

    // abelian pre-filter: a query outside the abelian closure is
    // separated by a finite abelian quotient
    if !abelian::ab_member(h, w) {
        if let Some(cert) = abelian_certificate(h, w) {
            assert!(certificate_is_valid(&basis, w, &cert), "emitted certificate must verify");
            return Ok(MetaVerdict::NonMember(Box::new(cert)));
        }
    }

    let mut engine = Engine::new(&basis, w, budget);
    let mut positive_truncated = false;
    let mut negative_truncated = false;
    let mut positive_done = false;
    let mut negative_done = false;
    let mut len = 0usize;
    let mut index = 1usize;
    loop {
        if let Some(deadline) = budget.deadline {
            if Instant::now() > deadline {
                return Err(MetaError::DeadlineExceeded);
            }
        }
        if positive_done && negative_done {
            return Ok(MetaVerdict::Exhausted(BudgetReport {
                max_len: budget.max_len,
                max_index: budget.max_index,
                products_tested: engine.products_tested,
                positive_truncated,
                negative_truncated,
            }));
        }
        // one positive batch, then one negative batch
        if !positive_done {
            match engine.positive_batch(len)? {
                BatchOutcome::Truncated => {
                    positive_truncated = true;
                    positive_done = true;
                }
                BatchOutcome::Done => {}
            }
            if let Some(indices) = engine.found.take() {
                let witness = member_witness_from_indices(h, &basis, w, indices);
                return Ok(MetaVerdict::Member(witness));
            }
            len += 1;
            if len > budget.max_len {
                positive_done = true;
            }
        }
        if !negative_done {
            match negative_batch(h, &basis, w, rank, index, budget)? {
                NegativeOutcome::Found(cert) => {
                    assert!(
                        certificate_is_valid(&basis, w, &cert),
                        "emitted certificate must verify"
                    );
                    return Ok(MetaVerdict::NonMember(Box::new(cert)));
                }
                NegativeOutcome::Truncated => {
                    negative_truncated = true;
                    negative_done = true;
                }
                NegativeOutcome::Exhausted => {}
            }
            index += 1;
            if index > budget.max_index {
                negative_done = true;
            }
        }
    }
}

fn rank_one_certificate(h: &StallingsAutomaton, w: &Word) -> Certificate {
    let rank = h.rank();
    debug_assert!(rank == 1, "rank-0 queries are always members");
    let aut = match h.index() {
        // H = <a^d>: H itself separates, with cyclic quotient
        SubgroupIndex::Finite(_) => h.clone(),
        // H trivial: any cycle longer than |w| avoids w
        SubgroupIndex::Infinite => {
            let n = w.len() as i64 + 1;
            let gen = Word::generator(rank, 1).unwrap().pow(n);
            StallingsAutomaton::from_generators(rank, &[gen]).unwrap()
        }
    };
    let q = FiniteQuotient::from_cayley_automaton(&aut);
    Certificate {
        index: aut.num_vertices(),
        core_quotient_order: q.order(),
        core_derived_series: q.derived_series(),
        subgroup: aut,
    }
}

enum NegativeOutcome {
    Found(Certificate),
    Exhausted,
    Truncated,
}

fn negative_batch(
    _h: &StallingsAutomaton,
    gens: &[Word],
    w: &Word,
    rank: usize,
    index: usize,
    budget: &Budget,
) -> Result<NegativeOutcome, MetaError> {
    let enum_budget = EnumBudget::default();
    let subgroups = match crate::automata::enumerate_index_subgroups(rank, index, &enum_budget) {
        Ok(s) => s,
        Err(_) => return Ok(NegativeOutcome::Truncated),
    };
    for k in subgroups {
        if let Some(deadline) = budget.deadline {
            if Instant::now() > deadline {
                return Err(MetaError::DeadlineExceeded);
            }
        }
        if !gens.iter().all(|g| k.member(g)) || k.member(w) {
            continue;
        }
        let (core, _) = k.core_subgroup().expect("enumerated automata are complete");
        let q = FiniteQuotient::from_cayley_automaton(&core);
        let series = q.derived_series();
        if *series.last().unwrap() == 1 && series.len() - 1 <= 2 {
            return Ok(NegativeOutcome::Found(Certificate {
                index,
                core_quotient_order: q.order(),
                core_derived_series: series,
                subgroup: k,
            }));
        }
    }
    Ok(NegativeOutcome::Exhausted)
}

/// Closedness is decidable outright: infinite index means not closed
/// (the closure contains the second derived subgroup), finite index
/// reduces to the core quotient being metabelian.
pub fn meta_is_closed(h: &StallingsAutomaton) -> bool {
    if h.rank() <= 1 {
        return true;
    }
    match h.index() {
        SubgroupIndex::Infinite => false,
        SubgroupIndex::Finite(_) => {
            let (core, _) = h.core_subgroup().expect("finite index");
            let q = FiniteQuotient::from_cayley_automaton(&core);
            q.derived_length().is_some_and(|l| l <= 2)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum NotDenseReason {
    /// The subgroup is not even dense for the abelian topology.
    AbelianObstruction,
    /// A specific basis letter is separated from the closure.
    Letter { letter: Word, certificate: Box<Certificate> },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum DensityVerdict {
    Dense,
    NotDense(NotDenseReason),
    Exhausted(BudgetReport),
}

/// Density: every basis letter of the ambient group must be a member
/// of the closure.
pub fn meta_is_dense(
    h: &StallingsAutomaton,
    budget: &Budget,
) -> Result<DensityVerdict, MetaError> {
    let rank = h.rank();
    if rank == 0 {
        return Ok(DensityVerdict::Dense);
    }
    // sound pre-filter: this closure is contained in the abelian one
    if !abelian::ab_is_dense(h) {
        return Ok(DensityVerdict::NotDense(NotDenseReason::AbelianObstruction));
    }
    for i in 1..=rank {
        let letter = Word::generator(rank, i).unwrap();
        match meta_member(h, &letter, budget)? {
            MetaVerdict::Member(_) => {}
            MetaVerdict::NonMember(certificate) => {
                return Ok(DensityVerdict::NotDense(NotDenseReason::Letter {
                    letter,
                    certificate,
                }));
            }
            MetaVerdict::Exhausted(report) => {
                return Ok(DensityVerdict::Exhausted(report));
            }
        }
    }
    Ok(DensityVerdict::Dense)
}

/// An index value that may be infinite.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum BigIndex {
    Finite(BigUint),
    Infinite,
}

impl BigIndex {
    pub fn finite(&self) -> Option<&BigUint> {
        match self {
            BigIndex::Finite(v) => Some(v),
            BigIndex::Infinite => None,
        }
    }
}

/// Transcription of the closure procedure that rewrites the subgroup
/// inside its abelian closure `G`, computes the relative abelian index
/// `[G : H G']`, and filters complete automata at the claimed index
/// `[F:G][G:HG']`. The report makes no soundness claim by itself;
/// cross-examine it with `meta_closure_validated`.
#[derive(Debug, Clone)]
pub struct PaperClosureReport {
    pub ab_closure: ClosureDescriptor,
    pub g_index: BigIndex,
    /// `None` when `[F:G]` is infinite and the rewriting step never ran.
    pub hg_prime_index: Option<BigIndex>,
    pub claimed_index: BigIndex,
    pub candidates: Vec<StallingsAutomaton>,
}

pub fn meta_closure_paper(h: &StallingsAutomaton) -> Result<PaperClosureReport, MetaError> {
    let g = abelian::ab_closure(h);
    let Some(g_index) = g.index.clone() else {
        return Ok(PaperClosureReport {
            ab_closure: g,
            g_index: BigIndex::Infinite,
            hg_prime_index: None,
            claimed_index: BigIndex::Infinite,
            candidates: Vec::new(),
        });
    };
    let g_aut = g.automaton.as_ref().ok_or_else(|| {
        MetaError::BudgetExceeded("abelian closure automaton was gated".into())
    })?;
    let g_basis = g.basis.clone().expect("basis accompanies the automaton");
    let sub_rank = g_basis.len();
    // rewrite the subgroup's basis over the closure's basis
    let rewritten: Vec<Word> = h
        .basis()
        .iter()
        .map(|b| {
            let indices = g_aut
                .express_in_basis(b)
                .expect("subgroup words are members of their abelian closure");
            let letters: Vec<i32> = indices.into_iter().map(|i| i as i32).collect();
            Word::from_letters(sub_rank, &letters).expect("indices are in range")
        })
        .collect();
    let lattice = abelian::exponent_matrix(&rewritten, sub_rank);
    let relative = intlin::lattice_index(&lattice, sub_rank);
    let hg_prime_index = match relative.index() {
        Some(v) => BigIndex::Finite(v),
        None => BigIndex::Infinite,
    };
    let claimed_index = match &hg_prime_index {
        BigIndex::Finite(v) => BigIndex::Finite(&g_index * v),
        BigIndex::Infinite => BigIndex::Infinite,
    };
    let candidates = match &claimed_index {
        BigIndex::Infinite => Vec::new(),
        BigIndex::Finite(c) => {
            let c = c.to_usize().ok_or_else(|| {
                MetaError::BudgetExceeded(format!("claimed index {c} too large to enumerate"))
            })?;
            let subs = crate::automata::enumerate_index_subgroups(
                h.rank(),
                c,
                &EnumBudget::default(),
            )
            .map_err(|e| MetaError::BudgetExceeded(e.to_string()))?;
            let gens = h.basis();
            subs.into_iter()
                .filter(|k| gens.iter().all(|g| k.member(g)) && meta_is_closed(k))
                .collect()
        }
    };
    Ok(PaperClosureReport {
        ab_closure: g,
        g_index: BigIndex::Finite(g_index),
        hg_prime_index: Some(hg_prime_index),
        claimed_index,
        candidates,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ValidationStatus {
    Verified,
    Contradicted,
    Unverified,
}

#[derive(Debug, Clone)]
pub struct MemberCheck {
    pub word: Word,
    pub verdict: &'static str,
}

/// Cross-examination of the closure procedure: every basis word of its
/// candidate must be certified a member of the closure by the
/// certificate engine; a non-member certificate contradicts the
/// procedure, and budget exhaustion leaves it unverified.
#[derive(Debug, Clone)]
pub struct ValidatedReport {
    pub paper: PaperClosureReport,
    pub status: ValidationStatus,
    pub note: String,
    pub checks: Vec<MemberCheck>,
    pub contradiction: Option<Certificate>,
}

pub fn meta_closure_validated(
    h: &StallingsAutomaton,
    budget: &Budget,
) -> Result<ValidatedReport, MetaError> {
    let paper = meta_closure_paper(h)?;
    if paper.claimed_index.finite().is_none() {
        return Ok(ValidatedReport {
            paper,
            status: ValidationStatus::Unverified,
            note: "procedure claims infinite index; the certificate engine has nothing \
                   finite to cross-examine"
                .into(),
            checks: Vec::new(),
            contradiction: None,
        });
    }
    if paper.candidates.len() != 1 {
        let note = if paper.candidates.is_empty() {
            "no subgroup passes the filters at the claimed index".to_string()
        } else {
            format!(
                "{} subgroups pass the filters at the claimed index; the procedure \
                 promises exactly one",
                paper.candidates.len()
            )
        };
        return Ok(ValidatedReport {
            paper,
            status: ValidationStatus::Contradicted,
            note,
            checks: Vec::new(),
            contradiction: None,
        });
    }
    let candidate = paper.candidates[0].clone();
    // the filters already require the subgroup's generators inside the
    // candidate; record it as an explicit check anyway
    let mut checks = Vec::new();
    for g in h.basis() {
        assert!(candidate.member(&g));
        checks.push(MemberCheck { word: g, verdict: "member-of-candidate" });
    }
    for b in candidate.basis() {
        match meta_member(h, &b, budget)? {
            MetaVerdict::Member(_) => {
                checks.push(MemberCheck { word: b, verdict: "member" });
            }
            MetaVerdict::NonMember(cert) => {
                checks.push(MemberCheck { word: b.clone(), verdict: "nonmember" });
                return Ok(ValidatedReport {
                    paper,
                    status: ValidationStatus::Contradicted,
                    note: format!(
                        "candidate basis word {b} is certified outside the closure"
                    ),
                    checks,
                    contradiction: Some(*cert),
                });
            }
            MetaVerdict::Exhausted(_) => {
                checks.push(MemberCheck { word: b.clone(), verdict: "exhausted" });
                return Ok(ValidatedReport {
                    paper,
                    status: ValidationStatus::Unverified,
                    note: format!("budget exhausted while checking candidate basis word {b}"),
                    checks,
                    contradiction: None,
                });
            }
        }
    }
    Ok(ValidatedReport {
        paper,
        status: ValidationStatus::Verified,
        note: "every candidate basis word is certified a member of the closure".into(),
        checks,
        contradiction: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn w(text: &str) -> Word {
        Word::parse(text, 2).unwrap()
    }

    fn subgroup(gens: &[&str]) -> StallingsAutomaton {
        let gens: Vec<Word> = gens.iter().map(|g| w(g)).collect();
        StallingsAutomaton::from_generators(2, &gens).unwrap()
    }

    #[test]
    fn fox_base_cases() {
        let d = fox_derivatives(&w("a"));
        assert_eq!(d[0], LaurentPoly::one(2));
        assert!(d[1].is_zero());

        let d = fox_derivatives(&w("A"));
        assert_eq!(
            d[0],
            LaurentPoly::monomial(2, &[-1, 0], BigInt::from(-1))
        );
    }

    #[test]
    fn fox_product_rule_on_commutator() {
        // D_a(a b^-1 a^-1 b) = 1 - y^-1 by the product rule
        let d = fox_derivatives(&w("aBAb"));
        let mut expected = LaurentPoly::one(2);
        expected.add_monomial(&[0, -1], BigInt::from(-1));
        assert_eq!(d[0], expected);
        // and D_b = y^-1 - x y^-1
        let mut expected_b = LaurentPoly::monomial(2, &[0, -1], BigInt::one());
        expected_b.add_monomial(&[1, -1], BigInt::from(-1));
        assert_eq!(d[1], expected_b);
    }

    fn fundamental_identity_holds(word: &Word) -> bool {
        let n = word.rank();
        let d = fox_derivatives(word);
        let mut lhs = LaurentPoly::zero(n);
        for (i, di) in d.iter().enumerate() {
            let mut xi_minus_1 = LaurentPoly::zero(n);
            let mut e = vec![0i64; n];
            e[i] = 1;
            xi_minus_1.add_monomial(&e, BigInt::one());
            xi_minus_1.add_monomial(&vec![0; n], BigInt::from(-1));
            lhs = lhs.add(&di.mul(&xi_minus_1));
        }
        let mut rhs = LaurentPoly::monomial(n, &word.exponent_vector(), BigInt::one());
        rhs.add_monomial(&vec![0; n], BigInt::from(-1));
        lhs == rhs
    }

    #[test]
    fn fundamental_identity_spot_checks() {
        for text in ["a", "A", "ab", "aBAb", "bbaBAA", "abABabAB"] {
            assert!(fundamental_identity_holds(&w(text)), "failed on {text}");
        }
    }

    #[test]
    fn second_derived_membership() {
        assert!(in_second_derived(&Word::identity(2)));
        assert!(!in_second_derived(&w("aBAb"))); // a single commutator
        // commutator of two derived-subgroup elements
        let c1 = w("a").commutator(&w("b")).unwrap();
        let c2 = w("a").commutator(&w("bb")).unwrap();
        let cc = c1.commutator(&c2).unwrap();
        assert!(in_second_derived(&cc));
        // invariance under conjugation
        let conj = w("ba")
            .inverse()
            .concat(&cc)
            .unwrap()
            .concat(&w("ba"))
            .unwrap();
        assert!(in_second_derived(&conj));
    }

    fn k3() -> StallingsAutomaton {
        let (q, elems) =
            FiniteQuotient::from_permutations(2, &[vec![1, 0, 2], vec![1, 2, 0]]).unwrap();
        let t = elems.iter().position(|p| *p == vec![1, 0, 2]).unwrap() as u32;
        q.preimage_subgroup(&[t])
    }

    #[test]
    fn nonmember_via_negative_search() {
        let verdict = meta_member(&k3(), &w("b"), &Budget::default()).unwrap();
        let MetaVerdict::NonMember(cert) = verdict else {
            panic!("expected a non-member verdict, got {verdict:?}");
        };
        assert_eq!(cert.index, 3);
        assert_eq!(cert.core_derived_series, vec![6, 3, 1]);
        assert!(certificate_is_valid(&k3().basis(), &w("b"), &cert));
    }

    #[test]
    fn member_via_positive_search() {
        let h = subgroup(&["aa", "b"]);
        // generator times an element of the second derived subgroup
        let c1 = w("a").commutator(&w("b")).unwrap();
        let c2 = w("a").commutator(&w("bb")).unwrap();
        let cc = c1.commutator(&c2).unwrap();
        let query = w("aa").concat(&cc).unwrap();
        let verdict = meta_member(&h, &query, &Budget::default()).unwrap();
        let MetaVerdict::Member(witness) = verdict else {
            panic!("expected member, got {verdict:?}");
        };
        let back = witness.subgroup_word.concat(&witness.residual).unwrap();
        assert_eq!(back, query);
        assert!(in_second_derived(&witness.residual));
    }

    #[test]
    fn nonmember_commutator_against_cyclic_subgroup() {
        let h = subgroup(&["a"]);
        let verdict = meta_member(&h, &w("aBAb"), &Budget::default()).unwrap();
        let MetaVerdict::NonMember(cert) = verdict else {
            panic!("expected non-member, got {verdict:?}");
        };
        assert!(certificate_is_valid(&h.basis(), &w("aBAb"), &cert));
    }

    #[test]
    fn generators_are_members() {
        let h = subgroup(&["ab", "ba"]);
        for g in h.basis() {
            assert!(meta_member(&h, &g, &Budget::default()).unwrap().is_member());
        }
    }

    #[test]
    fn member_implies_abelian_member() {
        let h = subgroup(&["aa", "b"]);
        for text in ["aab", "bba", "abab", "aB"] {
            let word = w(text);
            if meta_member(&h, &word, &Budget::default()).unwrap().is_member() {
                assert!(abelian::ab_member(&h, &word));
            }
        }
    }

    #[test]
    fn closedness_examples() {
        assert!(meta_is_closed(&k3()));
        assert!(meta_is_closed(&subgroup(&["aa", "bb", "ab"])));
        assert!(!meta_is_closed(&subgroup(&["a"])));
        assert!(meta_is_closed(&StallingsAutomaton::whole_group(2)));
    }

    #[test]
    fn density_examples() {
        let budget = Budget::default();
        assert_eq!(
            meta_is_dense(&StallingsAutomaton::whole_group(2), &budget).unwrap(),
            DensityVerdict::Dense
        );
        assert!(matches!(
            meta_is_dense(&k3(), &budget).unwrap(),
            DensityVerdict::NotDense(NotDenseReason::Letter { .. })
        ));
        assert_eq!(
            meta_is_dense(&subgroup(&["aa", "b"]), &budget).unwrap(),
            DensityVerdict::NotDense(NotDenseReason::AbelianObstruction)
        );
    }

    #[test]
    fn paper_route_on_even_subgroup() {
        let e = subgroup(&["aa", "bb", "ab"]);
        let report = meta_closure_paper(&e).unwrap();
        assert_eq!(report.g_index, BigIndex::Finite(BigUint::from(2u32)));
        assert_eq!(
            report.hg_prime_index,
            Some(BigIndex::Finite(BigUint::one()))
        );
        assert_eq!(report.claimed_index, BigIndex::Finite(BigUint::from(2u32)));
        assert_eq!(report.candidates, vec![e]);
    }

    #[test]
    fn paper_route_on_whole_group() {
        let f = StallingsAutomaton::whole_group(2);
        let report = meta_closure_paper(&f).unwrap();
        assert_eq!(report.claimed_index, BigIndex::Finite(BigUint::one()));
        assert_eq!(report.candidates, vec![f]);
    }

    #[test]
    fn validation_agrees_on_closed_fixtures() {
        let budget = Budget::default();
        let e = subgroup(&["aa", "bb", "ab"]);
        assert_eq!(
            meta_closure_validated(&e, &budget).unwrap().status,
            ValidationStatus::Verified
        );
        let f = StallingsAutomaton::whole_group(2);
        assert_eq!(
            meta_closure_validated(&f, &budget).unwrap().status,
            ValidationStatus::Verified
        );
    }

    #[test]
    fn validation_contradicts_paper_route_on_s3_preimage() {
        let report = meta_closure_validated(&k3(), &Budget::default()).unwrap();
        // the procedure claims the whole group, but the engine separates b
        assert_eq!(
            report.paper.claimed_index,
            BigIndex::Finite(BigUint::one())
        );
        assert_eq!(report.status, ValidationStatus::Contradicted);
        let cert = report.contradiction.expect("certificate attached");
        assert_eq!(cert.index, 3);
    }
}
