//! Uniform closedness and density entry points over pseudovariety
//! descriptors, the generic extension-closed closure procedure with
//! pluggable oracles, and the descriptor text grammar.

use thiserror::Error;

use crate::abelian;
use crate::automata::{AutomatonError, OvergroupBudget, StallingsAutomaton, SubgroupIndex};
use crate::metabelian::{self, Budget, ValidatedReport};
use crate::quotients::{FiniteQuotient, PseudovarietyDescriptor, QuotientError};
use crate::words::Word;

#[derive(Debug, Error)]
pub enum PvError {
    #[error("unsupported descriptor: {0}")]
    Unsupported(String),
    #[error(
        "closedness of the trivial subgroup of a rank-1 ambient group is not decided \
         for user-supplied identities"
    )]
    TrivialSubgroupRankOne,
    #[error("oracle inconsistency: {0}")]
    OracleInconsistency(String),
    #[error("descriptor parse error: {0}")]
    Parse(String),
    #[error(transparent)]
    Automaton(#[from] AutomatonError),
    #[error(transparent)]
    Quotient(#[from] QuotientError),
    #[error(transparent)]
    Meta(#[from] metabelian::MetaError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ClosednessRoute {
    /// A nontrivial identity plus infinite index forces non-closedness
    /// (for rank >= 2; the rank-1 bounded-exponent case is folded in).
    InfiniteIndexShortcut,
    /// Finite index: closed iff the core quotient lies in the class.
    CoreQuotientCheck,
    /// The descriptor is the class of all finite groups (or the ambient
    /// group is degenerate enough for the profinite argument).
    ProfiniteTrivial,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CoreQuotientSummary {
    pub order: usize,
    pub derived_series: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClosednessReport {
    pub closed: bool,
    pub route: ClosednessRoute,
    pub core_quotient: Option<CoreQuotientSummary>,
}

/// Decides whether the subgroup is closed for the topology of the
/// descriptor's pseudovariety.
pub fn is_closed(
    h: &StallingsAutomaton,
    v: &PseudovarietyDescriptor,
) -> Result<ClosednessReport, PvError> {
    if v.is_trivial() {
        // every finitely generated subgroup is closed for the full
        // profinite topology
        return Ok(ClosednessReport {
            closed: true,
            route: ClosednessRoute::ProfiniteTrivial,
            core_quotient: None,
        });
    }
    if let SubgroupIndex::Finite(_) = h.index() {
        let (core, _) = h.core_subgroup().expect("finite index");
        let q = FiniteQuotient::from_cayley_automaton(&core);
        let closed = q.satisfies(v)?;
        return Ok(ClosednessReport {
            closed,
            route: ClosednessRoute::CoreQuotientCheck,
            core_quotient: Some(CoreQuotientSummary {
                order: q.order(),
                derived_series: q.derived_series(),
            }),
        });
    }
    // infinite index
    match h.rank() {
        0 => unreachable!("rank-0 subgroups always have finite index"),
        1 => {
            // the subgroup is trivial inside Z
            match v {
                PseudovarietyDescriptor::Ab
                | PseudovarietyDescriptor::Meta
                | PseudovarietyDescriptor::Solvable(_) => Ok(ClosednessReport {
                    closed: true,
                    route: ClosednessRoute::ProfiniteTrivial,
                    core_quotient: None,
                }),
                PseudovarietyDescriptor::AbMod(_) => Ok(ClosednessReport {
                    // the closure is the nontrivial subgroup mZ
                    closed: false,
                    route: ClosednessRoute::InfiniteIndexShortcut,
                    core_quotient: None,
                }),
                PseudovarietyDescriptor::Identities(_) => Err(PvError::TrivialSubgroupRankOne),
            }
        }
        _ => Ok(ClosednessReport {
            closed: false,
            route: ClosednessRoute::InfiniteIndexShortcut,
            core_quotient: None,
        }),
    }
}

/// Topologies with a density decision procedure.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DensityQuery {
    Ab,
    AbMod(u64),
    Meta,
    Nilpotent,
}

impl DensityQuery {
    pub fn from_descriptor(v: &PseudovarietyDescriptor) -> Result<Self, PvError> {
        match v {
            PseudovarietyDescriptor::Ab | PseudovarietyDescriptor::Solvable(1) => {
                Ok(DensityQuery::Ab)
            }
            PseudovarietyDescriptor::AbMod(m) => Ok(DensityQuery::AbMod(*m)),
            PseudovarietyDescriptor::Meta | PseudovarietyDescriptor::Solvable(2) => {
                Ok(DensityQuery::Meta)
            }
            PseudovarietyDescriptor::Solvable(k) => Err(PvError::Unsupported(format!(
                "density is not decided for solvable groups of derived length {k}"
            ))),
            PseudovarietyDescriptor::Identities(_) => Err(PvError::Unsupported(
                "density is not decided for user-supplied identities".into(),
            )),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum DenseOutcome {
    Dense,
    NotDense,
    Exhausted(metabelian::BudgetReport),
}

/// Density dispatch; the metabelian engine may exhaust its budget.
pub fn is_dense(
    h: &StallingsAutomaton,
    query: &DensityQuery,
    budget: &Budget,
) -> Result<DenseOutcome, PvError> {
    match query {
        DensityQuery::Ab => Ok(if abelian::ab_is_dense(h) {
            DenseOutcome::Dense
        } else {
            DenseOutcome::NotDense
        }),
        DensityQuery::Nilpotent => Ok(if abelian::nilpotent_density(h) {
            DenseOutcome::Dense
        } else {
            DenseOutcome::NotDense
        }),
        DensityQuery::AbMod(1) => Ok(DenseOutcome::Dense),
        DensityQuery::AbMod(m) => Ok(if abelian::abm_is_dense(h, *m).dense {
            DenseOutcome::Dense
        } else {
            DenseOutcome::NotDense
        }),
        DensityQuery::Meta => Ok(match metabelian::meta_is_dense(h, budget)? {
            metabelian::DensityVerdict::Dense => DenseOutcome::Dense,
            metabelian::DensityVerdict::NotDense(_) => DenseOutcome::NotDense,
            metabelian::DensityVerdict::Exhausted(r) => DenseOutcome::Exhausted(r),
        }),
    }
}

/// The closure procedure available for every extension-closed
/// pseudovariety, driven by caller-supplied oracles: enumerate the
/// overgroups, order them so that no earlier one is contained in a
/// later one, and induct. `closed` answers whether an overgroup is
/// closed in the ambient group; `dense(h, k)` answers whether `h` is
/// dense in the overgroup `k` for the relative topology. Inconsistent
/// oracles (no viable closure, or density in two closed overgroups)
/// are reported as errors rather than guessed around.
pub fn extension_closed_closure(
    h: &StallingsAutomaton,
    closed: &mut dyn FnMut(&StallingsAutomaton) -> bool,
    dense: &mut dyn FnMut(&StallingsAutomaton, &StallingsAutomaton) -> bool,
    budget: &OvergroupBudget,
) -> Result<StallingsAutomaton, PvError> {
    let overgroups = h.overgroups(budget)?;
    let contains = |big: &StallingsAutomaton, small: &StallingsAutomaton| -> bool {
        small.basis().iter().all(|b| big.member(b))
    };
    // order by reverse inclusion: supergroups first, deterministic
    // tie-break by canonical serialization
    let mut order: Vec<usize> = Vec::new();
    let mut remaining: Vec<usize> = (0..overgroups.len()).collect();
    while !remaining.is_empty() {
        let pick = *remaining
            .iter()
            .find(|&&i| {
                remaining
                    .iter()
                    .all(|&j| j == i || !contains(&overgroups[j], &overgroups[i]))
            })
            .expect("a maximal element always exists");
        order.push(pick);
        remaining.retain(|&j| j != pick);
    }
    let ordered: Vec<&StallingsAutomaton> = order.iter().map(|&i| &overgroups[i]).collect();

    // closure_of[i] = index into `ordered` of the computed closure
    let mut closure_of: Vec<usize> = Vec::with_capacity(ordered.len());
    for i in 0..ordered.len() {
        let dense_in: Vec<usize> = (0..i)
            .filter(|&j| {
                closure_of[j] == j
                    && contains(ordered[j], ordered[i])
                    && dense(ordered[i], ordered[j])
            })
            .collect();
        match dense_in.len() {
            0 => {
                if !closed(ordered[i]) {
                    return Err(PvError::OracleInconsistency(format!(
                        "overgroup #{i} is dense in none of its closed overgroups, so it \
                         must be closed itself, but the closedness oracle disagrees"
                    )));
                }
                closure_of.push(i);
            }
            1 => closure_of.push(dense_in[0]),
            _ => {
                return Err(PvError::OracleInconsistency(format!(
                    "overgroup #{i} is dense in {} distinct closed overgroups",
                    dense_in.len()
                )));
            }
        }
    }
    let pos = ordered
        .iter()
        .position(|k| *k == h)
        .expect("the subgroup is among its own overgroups");
    Ok(ordered[closure_of[pos]].clone())
}

/// What can be said about the closure for the topology of finite
/// solvable groups of derived length <= k.
#[derive(Debug)]
pub enum SkClosureBound {
    /// k = 1: the closure itself, via the abelian machinery.
    Abelian(abelian::ClosureDescriptor),
    /// k = 2: the cross-validated metabelian report.
    Metabelian(Box<ValidatedReport>),
    /// k >= 3: the closure contains the k-th derived subgroup, and no
    /// further numeric claim is made.
    LowerBoundOnly { k: u32 },
}

pub fn sk_closure_lower_bound(
    h: &StallingsAutomaton,
    k: u32,
    budget: &Budget,
) -> Result<SkClosureBound, PvError> {
    assert!(k >= 1);
    match k {
        1 => Ok(SkClosureBound::Abelian(abelian::ab_closure(h))),
        2 => Ok(SkClosureBound::Metabelian(Box::new(
            metabelian::meta_closure_validated(h, budget)?,
        ))),
        _ => Ok(SkClosureBound::LowerBoundOnly { k }),
    }
}

/// Parses the descriptor grammar: `ab`, `ab:m`, `meta`, `sk:k`, or
/// `id:<word>;<word>;...` with identity words over the variables
/// `x1..x9` (`X` for inverses), the commutator macro `[u,v]`, and the
/// repetition suffix `^k`.
pub fn parse_descriptor(text: &str) -> Result<PseudovarietyDescriptor, PvError> {
    if text == "ab" {
        return Ok(PseudovarietyDescriptor::Ab);
    }
    if text == "meta" {
        return Ok(PseudovarietyDescriptor::Meta);
    }
    if let Some(m) = text.strip_prefix("ab:") {
        let m: u64 = m
            .parse()
            .map_err(|_| PvError::Parse(format!("bad modulus in {text:?}")))?;
        if m == 0 {
            return Err(PvError::Parse("modulus must be >= 1".into()));
        }
        return Ok(PseudovarietyDescriptor::AbMod(m));
    }
    if let Some(k) = text.strip_prefix("sk:") {
        let k: u32 = k
            .parse()
            .map_err(|_| PvError::Parse(format!("bad derived length in {text:?}")))?;
        if k == 0 {
            return Err(PvError::Parse("derived length must be >= 1".into()));
        }
        return Ok(PseudovarietyDescriptor::Solvable(k));
    }
    if let Some(body) = text.strip_prefix("id:") {
        let words = body
            .split(';')
            .filter(|s| !s.is_empty())
            .map(parse_identity_word)
            .collect::<Result<Vec<_>, _>>()?;
        if words.is_empty() {
            return Err(PvError::Parse("empty identity list".into()));
        }
        return Ok(PseudovarietyDescriptor::Identities(words));
    }
    Err(PvError::Parse(format!(
        "unknown descriptor {text:?}; expected ab, ab:m, meta, sk:k or id:..."
    )))
}

/// Identity words use the variable pool x1..x9.
pub const IDENTITY_VARIABLES: usize = 9;

pub fn parse_identity_word(text: &str) -> Result<Word, PvError> {
    let bytes = text.as_bytes();
    let mut pos = 0usize;
    let word = parse_identity_seq(bytes, &mut pos, text)?;
    if pos != bytes.len() {
        return Err(PvError::Parse(format!(
            "trailing input at byte {pos} of identity {text:?}"
        )));
    }
    Ok(word)
}

fn parse_identity_seq(bytes: &[u8], pos: &mut usize, full: &str) -> Result<Word, PvError> {
    let mut acc = Word::identity(IDENTITY_VARIABLES);
    while *pos < bytes.len() && bytes[*pos] != b',' && bytes[*pos] != b']' {
        let atom = parse_identity_atom(bytes, pos, full)?;
        acc = acc.concat(&atom).expect("equal ranks");
    }
    Ok(acc)
}

fn parse_identity_atom(bytes: &[u8], pos: &mut usize, full: &str) -> Result<Word, PvError> {
    let base = match bytes.get(*pos) {
        Some(b'x') | Some(b'X') => {
            let sign: i32 = if bytes[*pos] == b'x' { 1 } else { -1 };
            *pos += 1;
            let d = bytes
                .get(*pos)
                .filter(|c| c.is_ascii_digit())
                .ok_or_else(|| PvError::Parse(format!("expected digit in {full:?}")))?;
            let idx = (d - b'0') as i32;
            if idx == 0 || idx as usize > IDENTITY_VARIABLES {
                return Err(PvError::Parse(format!("variable index {idx} out of range")));
            }
            *pos += 1;
            Word::from_letters(IDENTITY_VARIABLES, &[sign * idx]).expect("valid letter")
        }
        Some(b'[') => {
            *pos += 1;
            let u = parse_identity_seq(bytes, pos, full)?;
            if bytes.get(*pos) != Some(&b',') {
                return Err(PvError::Parse(format!("expected ',' in {full:?}")));
            }
            *pos += 1;
            let v = parse_identity_seq(bytes, pos, full)?;
            if bytes.get(*pos) != Some(&b']') {
                return Err(PvError::Parse(format!("expected ']' in {full:?}")));
            }
            *pos += 1;
            u.commutator(&v).expect("equal ranks")
        }
        other => {
            return Err(PvError::Parse(format!(
                "unexpected {other:?} in identity {full:?}"
            )));
        }
    };
    if bytes.get(*pos) == Some(&b'^') {
        *pos += 1;
        let start = *pos;
        while bytes.get(*pos).is_some_and(u8::is_ascii_digit) {
            *pos += 1;
        }
        let k: i64 = full[start..*pos]
            .parse()
            .map_err(|_| PvError::Parse(format!("bad exponent in {full:?}")))?;
        return Ok(base.pow(k));
    }
    Ok(base)
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

    fn k3() -> StallingsAutomaton {
        let (q, elems) =
            FiniteQuotient::from_permutations(2, &[vec![1, 0, 2], vec![1, 2, 0]]).unwrap();
        let t = elems.iter().position(|p| *p == vec![1, 0, 2]).unwrap() as u32;
        q.preimage_subgroup(&[t])
    }

    #[test]
    fn closedness_battery() {
        let e = subgroup(&["aa", "bb", "ab"]);
        let r = is_closed(&e, &PseudovarietyDescriptor::Ab).unwrap();
        assert!(r.closed);
        assert_eq!(r.route, ClosednessRoute::CoreQuotientCheck);
        assert_eq!(r.core_quotient.as_ref().unwrap().order, 2);

        let k3 = k3();
        assert!(!is_closed(&k3, &PseudovarietyDescriptor::Ab).unwrap().closed);
        assert!(is_closed(&k3, &PseudovarietyDescriptor::Solvable(2)).unwrap().closed);
        assert!(!is_closed(&k3, &PseudovarietyDescriptor::Solvable(1)).unwrap().closed);
        // the documented discrepancy fixture: the finite-index route
        // answers true for the metabelian descriptor
        assert!(is_closed(&k3, &PseudovarietyDescriptor::Meta).unwrap().closed);
    }

    #[test]
    fn trivial_identities_mean_profinite() {
        let h = subgroup(&["aa", "b"]);
        let trivial = PseudovarietyDescriptor::Identities(vec![
            parse_identity_word("x1").unwrap().concat(
                &parse_identity_word("X1").unwrap(),
            ).unwrap(),
        ]);
        assert!(trivial.is_trivial());
        let r = is_closed(&h, &trivial).unwrap();
        assert!(r.closed);
        assert_eq!(r.route, ClosednessRoute::ProfiniteTrivial);
    }

    #[test]
    fn infinite_index_shortcut() {
        let h = subgroup(&["aa", "b"]);
        let r = is_closed(&h, &PseudovarietyDescriptor::Ab).unwrap();
        assert!(!r.closed);
        assert_eq!(r.route, ClosednessRoute::InfiniteIndexShortcut);
    }

    #[test]
    fn closedness_monotone_in_the_class() {
        for fixture in [
            subgroup(&["aa", "bb", "ab"]),
            k3(),
            StallingsAutomaton::whole_group(2),
        ] {
            let ab = is_closed(&fixture, &PseudovarietyDescriptor::Ab).unwrap().closed;
            let meta = is_closed(&fixture, &PseudovarietyDescriptor::Meta).unwrap().closed;
            let s3 = is_closed(&fixture, &PseudovarietyDescriptor::Solvable(3))
                .unwrap()
                .closed;
            assert!(!ab || meta, "abelian-closed must imply metabelian-closed");
            assert!(!meta || s3);
        }
    }

    #[test]
    fn density_dispatch() {
        let budget = Budget::default();
        assert_eq!(
            is_dense(&k3(), &DensityQuery::Ab, &budget).unwrap(),
            DenseOutcome::Dense
        );
        assert_eq!(
            is_dense(&k3(), &DensityQuery::Meta, &budget).unwrap(),
            DenseOutcome::NotDense
        );
        assert_eq!(
            is_dense(&subgroup(&["aa", "b"]), &DensityQuery::AbMod(2), &budget).unwrap(),
            DenseOutcome::NotDense
        );
        assert_eq!(
            is_dense(&k3(), &DensityQuery::Nilpotent, &budget).unwrap(),
            is_dense(&k3(), &DensityQuery::Ab, &budget).unwrap()
        );
        assert!(DensityQuery::from_descriptor(&PseudovarietyDescriptor::Solvable(3)).is_err());
    }

    #[test]
    fn profinite_mock_returns_the_subgroup() {
        let budget = OvergroupBudget::default();
        for gens in [vec!["aa", "b"], vec!["ab", "ba"], vec!["aa", "bb", "ab"]] {
            let h = subgroup(&gens);
            let mut closed = |_: &StallingsAutomaton| true;
            // for the full profinite topology a f.g. subgroup is dense
            // in an overgroup only when they are equal
            let mut dense =
                |a: &StallingsAutomaton, b: &StallingsAutomaton| a == b;
            let cl = extension_closed_closure(&h, &mut closed, &mut dense, &budget).unwrap();
            assert_eq!(cl, h);
        }
    }

    #[test]
    fn forced_intersection_mock() {
        let f2 = StallingsAutomaton::whole_group(2);
        for gens in [vec!["aa", "b"], vec!["ab", "ba"]] {
            let h = subgroup(&gens);
            let mut closed = |k: &StallingsAutomaton| *k == f2;
            let mut dense = |_: &StallingsAutomaton, _: &StallingsAutomaton| true;
            let cl = extension_closed_closure(
                &h,
                &mut closed,
                &mut dense,
                &OvergroupBudget::default(),
            )
            .unwrap();
            assert_eq!(cl, f2);
        }
    }

    fn relative_ab_density(
        sub: &StallingsAutomaton,
        ambient: &StallingsAutomaton,
    ) -> bool {
        // rewrite the subgroup over the ambient overgroup's basis and
        // test abelian density there
        let ambient_rank = ambient.basis().len();
        let rewritten: Vec<Word> = sub
            .basis()
            .iter()
            .map(|b| {
                let idx = ambient.express_in_basis(b).expect("contained");
                let letters: Vec<i32> = idx.into_iter().map(|i| i as i32).collect();
                Word::from_letters(ambient_rank, &letters).unwrap()
            })
            .collect();
        let folded = StallingsAutomaton::from_generators(ambient_rank, &rewritten).unwrap();
        abelian::ab_is_dense(&folded)
    }

    #[test]
    fn abelian_oracles_recover_the_closure_when_it_is_an_overgroup() {
        let budget = OvergroupBudget::default();
        let mut closed =
            |k: &StallingsAutomaton| is_closed(k, &PseudovarietyDescriptor::Ab).unwrap().closed;
        let mut dense = relative_ab_density;

        // abelian-closed subgroup: the closure is the subgroup itself
        let e = subgroup(&["aa", "bb", "ab"]);
        let cl = extension_closed_closure(&e, &mut closed, &mut dense, &budget).unwrap();
        assert_eq!(cl, e);

        // abelian-dense subgroup: the closure is the whole group, which
        // is always an overgroup
        let k3 = k3();
        let cl = extension_closed_closure(&k3, &mut closed, &mut dense, &budget).unwrap();
        assert_eq!(cl, StallingsAutomaton::whole_group(2));
        assert_eq!(
            Some(&cl),
            abelian::ab_closure(&k3).automaton.as_ref()
        );
    }

    #[test]
    fn abelian_oracles_report_inconsistency_otherwise() {
        // the abelian closure of <aa, b> (index 2) is not among its
        // overgroups, so the procedure must refuse rather than guess
        let h2 = subgroup(&["aa", "b"]);
        let over = h2.overgroups(&OvergroupBudget::default()).unwrap();
        let closure_aut = abelian::ab_closure(&h2).automaton.unwrap();
        assert!(!over.contains(&closure_aut));

        let mut closed =
            |k: &StallingsAutomaton| is_closed(k, &PseudovarietyDescriptor::Ab).unwrap().closed;
        let mut dense = relative_ab_density;
        let err = extension_closed_closure(
            &h2,
            &mut closed,
            &mut dense,
            &OvergroupBudget::default(),
        )
        .unwrap_err();
        assert!(matches!(err, PvError::OracleInconsistency(_)));
    }

    #[test]
    fn sk_bound_dispatch() {
        let budget = Budget::default();
        let e = subgroup(&["aa", "bb", "ab"]);
        assert!(matches!(
            sk_closure_lower_bound(&e, 1, &budget).unwrap(),
            SkClosureBound::Abelian(_)
        ));
        assert!(matches!(
            sk_closure_lower_bound(&e, 2, &budget).unwrap(),
            SkClosureBound::Metabelian(_)
        ));
        assert!(matches!(
            sk_closure_lower_bound(&e, 3, &budget).unwrap(),
            SkClosureBound::LowerBoundOnly { k: 3 }
        ));
    }

    #[test]
    fn descriptor_grammar() {
        assert_eq!(parse_descriptor("ab").unwrap(), PseudovarietyDescriptor::Ab);
        assert_eq!(parse_descriptor("ab:6").unwrap(), PseudovarietyDescriptor::AbMod(6));
        assert_eq!(parse_descriptor("meta").unwrap(), PseudovarietyDescriptor::Meta);
        assert_eq!(parse_descriptor("sk:3").unwrap(), PseudovarietyDescriptor::Solvable(3));
        assert!(parse_descriptor("ab:0").is_err());
        assert!(parse_descriptor("nonsense").is_err());

        let v = parse_descriptor("id:[x1,x2];x1^4").unwrap();
        let PseudovarietyDescriptor::Identities(words) = v else {
            panic!("expected identities");
        };
        assert_eq!(words[0].letters(), &[-1, -2, 1, 2]);
        assert_eq!(words[1].letters(), &[1, 1, 1, 1]);

        let nested = parse_identity_word("[[x1,x2],[x3,x4]]").unwrap();
        assert_eq!(nested.len(), 16);
        assert!(parse_identity_word("x0").is_err());
        assert!(parse_identity_word("[x1,x2").is_err());
    }
}
