//! Property-based invariants, with independent oracles where a second
//! route exists: cofactor determinants against the Smith form, box
//! search against the Diophantine solver, and partition enumeration
//! against the overgroup search.

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};
use proptest::prelude::*;

use protop::abelian;
use protop::automata::{
    enumerate_index_subgroups, schreier_ball, EnumBudget, OvergroupBudget, StallingsAutomaton,
    SubgroupIndex,
};
use protop::intlin::{self, IntMatrix};
use protop::metabelian::{fox_derivatives, LaurentPoly};
use protop::words::Word;

fn letter(rank: usize) -> impl Strategy<Value = i32> {
    (1..=rank as i32, prop::bool::ANY)
        .prop_map(|(i, neg)| if neg { -i } else { i })
}

fn word(rank: usize, max_len: usize) -> impl Strategy<Value = Word> {
    prop::collection::vec(letter(rank), 0..=max_len)
        .prop_map(move |ls| Word::from_letters(rank, &ls).unwrap())
}

fn subgroup(rank: usize, max_gens: usize, max_len: usize) -> impl Strategy<Value = StallingsAutomaton> {
    prop::collection::vec(word(rank, max_len), 1..=max_gens)
        .prop_map(move |gens| StallingsAutomaton::from_generators(rank, &gens).unwrap())
}

proptest! {
    #[test]
    fn reduction_is_idempotent_and_clean(ls in prop::collection::vec(letter(2), 0..40)) {
        let w = Word::from_letters(2, &ls).unwrap();
        for pair in w.letters().windows(2) {
            prop_assert_ne!(pair[0], -pair[1]);
        }
        let again = Word::from_letters(2, w.letters()).unwrap();
        prop_assert_eq!(again, w);
    }

    #[test]
    fn exponent_vector_is_a_homomorphism(u in word(3, 12), v in word(3, 12)) {
        let uv = u.concat(&v).unwrap();
        let sum: Vec<i64> = u
            .exponent_vector()
            .iter()
            .zip(v.exponent_vector())
            .map(|(a, b)| a + b)
            .collect();
        prop_assert_eq!(uv.exponent_vector(), sum);
        let neg: Vec<i64> = u.exponent_vector().iter().map(|e| -e).collect();
        prop_assert_eq!(u.inverse().exponent_vector(), neg);
    }

    #[test]
    fn text_round_trip(w in word(26, 16)) {
        prop_assert_eq!(Word::parse(&w.to_string(), 26).unwrap(), w);
    }

    #[test]
    fn inversion_is_an_involution(w in word(4, 16)) {
        prop_assert_eq!(w.inverse().inverse(), w.clone());
        prop_assert!(w.concat(&w.inverse()).unwrap().is_empty());
    }

    #[test]
    fn folding_is_confluent_under_generator_shuffles(
        gens in prop::collection::vec(word(2, 8), 1..5).prop_shuffle()
    ) {
        // the strategy shuffles; compare against the sorted baseline
        let mut sorted = gens.clone();
        sorted.sort();
        let a = StallingsAutomaton::from_generators(2, &gens).unwrap();
        let b = StallingsAutomaton::from_generators(2, &sorted).unwrap();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn accepted_language_is_a_subgroup(
        h in subgroup(2, 3, 6),
        picks in prop::collection::vec((0usize..3, prop::bool::ANY), 1..6)
    ) {
        // random products of generator images stay accepted
        let basis = h.basis();
        if basis.is_empty() {
            return Ok(());
        }
        let mut prod = Word::identity(2);
        for (i, invert) in picks {
            let b = &basis[i % basis.len()];
            let b = if invert { b.inverse() } else { b.clone() };
            prod = prod.concat(&b).unwrap();
        }
        prop_assert!(h.member(&prod));
        prop_assert!(h.member(&prod.inverse()));
    }

    #[test]
    fn basis_refolds_to_the_same_subgroup(h in subgroup(2, 4, 8)) {
        let refold = StallingsAutomaton::from_generators(2, &h.basis()).unwrap();
        prop_assert_eq!(refold, h);
    }

    #[test]
    fn intersection_agrees_with_membership(
        h1 in subgroup(2, 3, 6),
        h2 in subgroup(2, 3, 6),
        w in word(2, 8)
    ) {
        let cap = h1.intersect(&h2).unwrap();
        prop_assert_eq!(cap.member(&w), h1.member(&w) && h2.member(&w));
    }

    #[test]
    fn conjugation_transports_membership(
        h in subgroup(2, 3, 6),
        g in word(2, 6),
        t in word(2, 8)
    ) {
        let hg = h.conjugate(&g).unwrap();
        let moved = g.inverse().concat(&t).unwrap().concat(&g).unwrap();
        prop_assert_eq!(hg.member(&moved), h.member(&t));
    }

    #[test]
    fn smith_form_invariants(
        rows in prop::collection::vec(prop::collection::vec(-9i64..=9, 3), 1..4)
    ) {
        let m = IntMatrix::from_i64_rows(&rows);
        let snf = intlin::smith_normal_form(&m);
        prop_assert!(snf.verify(&m), "U*M*V = S, unimodular transforms, chain");
        // independent determinant oracle for the transforms
        prop_assert_eq!(cofactor_det(&snf.u).abs(), BigInt::one());
        prop_assert_eq!(cofactor_det(&snf.v).abs(), BigInt::one());
    }

    #[test]
    fn invariant_factor_product_is_the_determinant(
        rows in prop::collection::vec(prop::collection::vec(-6i64..=6, 3), 3)
    ) {
        let m = IntMatrix::from_i64_rows(&rows);
        let det = cofactor_det(&m).abs();
        let snf = intlin::smith_normal_form(&m);
        let product = snf
            .diagonal
            .iter()
            .fold(BigInt::one(), |acc, e| acc * BigInt::from(e.clone()));
        prop_assert_eq!(product, det);
    }

    #[test]
    fn diophantine_solver_agrees_with_box_search(
        rows in prop::collection::vec(prop::collection::vec(-3i64..=3, 2), 1..3),
        target in prop::collection::vec(-6i64..=6, 2)
    ) {
        let m = IntMatrix::from_i64_rows(&rows);
        let v: Vec<BigInt> = target.iter().map(|&x| BigInt::from(x)).collect();
        let solver = intlin::lattice_membership(&m, &v).is_some();
        let brute = box_search(&rows, &target, 30);
        prop_assert_eq!(solver, brute);
    }

    #[test]
    fn fox_fundamental_identity(w in word(2, 12)) {
        prop_assert!(fundamental_identity_holds(&w));
    }

    #[test]
    fn closure_is_extensive_and_idempotent(h in subgroup(2, 3, 6)) {
        let cl = abelian::ab_closure(&h);
        for b in h.basis() {
            prop_assert!(cl.member(&b));
        }
        if let Some(basis) = &cl.basis {
            let refold = StallingsAutomaton::from_generators(2, basis).unwrap();
            let cl2 = abelian::ab_closure(&refold);
            prop_assert_eq!(&cl2.automaton, &cl.automaton);
            // re-closing the closure does not move it
            for b in basis {
                prop_assert!(cl2.member(b));
            }
        }
    }

    #[test]
    fn dense_implies_dense_at_every_exponent(h in subgroup(2, 3, 6)) {
        if abelian::ab_is_dense(&h) {
            for m in 2..=12 {
                prop_assert!(abelian::abm_is_dense(&h, m).dense);
            }
        }
    }
}

/// Expansion by minors; the independent determinant route.
fn cofactor_det(m: &IntMatrix) -> BigInt {
    fn go(entries: &[Vec<BigInt>]) -> BigInt {
        let n = entries.len();
        if n == 0 {
            return BigInt::one();
        }
        if n == 1 {
            return entries[0][0].clone();
        }
        let mut acc = BigInt::zero();
        for (j, top) in entries[0].iter().enumerate() {
            if top.is_zero() {
                continue;
            }
            let minor: Vec<Vec<BigInt>> = entries[1..]
                .iter()
                .map(|row| {
                    row.iter()
                        .enumerate()
                        .filter(|&(c, _)| c != j)
                        .map(|(_, e)| e.clone())
                        .collect()
                })
                .collect();
            let term = top * go(&minor);
            if j % 2 == 0 {
                acc += term;
            } else {
                acc -= term;
            }
        }
        acc
    }
    let rows: Vec<Vec<BigInt>> = (0..m.rows()).map(|i| m.row(i).to_vec()).collect();
    go(&rows)
}

/// Brute-force membership: search integer coefficients in [-bound, bound]^k.
fn box_search(rows: &[Vec<i64>], target: &[i64], bound: i64) -> bool {
    let k = rows.len();
    let n = target.len();
    let mut coeffs = vec![-bound; k];
    loop {
        let mut ok = true;
        for j in 0..n {
            let s: i64 = rows.iter().zip(&coeffs).map(|(r, c)| r[j] * c).sum();
            if s != target[j] {
                ok = false;
                break;
            }
        }
        if ok {
            return true;
        }
        let mut i = 0;
        loop {
            if i == k {
                return false;
            }
            coeffs[i] += 1;
            if coeffs[i] <= bound {
                break;
            }
            coeffs[i] = -bound;
            i += 1;
        }
    }
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

/// Independent overgroup oracle: every overgroup arises from a vertex
/// partition; identifying the vertices `u, v` of a block amounts to
/// adjoining the word `alpha_u alpha_v^-1`, so each partition's
/// overgroup can be folded from generators alone.
fn overgroups_by_partitions(h: &StallingsAutomaton) -> Vec<StallingsAutomaton> {
    let n = h.num_vertices();
    let reps = h.transversal();
    let basis = h.basis();
    let mut seen = std::collections::BTreeSet::new();
    let mut out = Vec::new();
    // restricted growth strings enumerate the partitions
    let mut rgs = vec![0usize; n];
    loop {
        let mut gens = basis.clone();
        for u in 0..n {
            for v in u + 1..n {
                if rgs[u] == rgs[v] {
                    gens.push(reps[u].concat(&reps[v].inverse()).unwrap());
                }
            }
        }
        let k = StallingsAutomaton::from_generators(h.rank(), &gens).unwrap();
        if seen.insert(k.edges()) {
            out.push(k);
        }
        // next restricted growth string
        let mut i = n.wrapping_sub(1);
        loop {
            if i == 0 {
                return out;
            }
            let max_prev = rgs[..i].iter().copied().max().unwrap();
            if rgs[i] <= max_prev {
                rgs[i] += 1;
                for r in rgs.iter_mut().skip(i + 1) {
                    *r = 0;
                }
                break;
            }
            i -= 1;
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]
    #[test]
    fn overgroups_match_partition_enumeration(h in subgroup(2, 3, 5)) {
        prop_assume!(h.num_vertices() <= 5);
        let budget = OvergroupBudget::default();
        let fast = h.overgroups(&budget).unwrap();
        let mut slow = overgroups_by_partitions(&h);
        slow.sort_by_key(|a| (a.num_vertices(), a.edges()));
        let fast_edges: Vec<_> = fast.iter().map(|a| a.edges()).collect();
        let slow_edges: Vec<_> = slow.iter().map(|a| a.edges()).collect();
        prop_assert_eq!(fast_edges, slow_edges);
    }
}

#[test]
fn nielsen_schreier_rank_formula() {
    let budget = EnumBudget::default();
    for m in 1..=4 {
        for aut in enumerate_index_subgroups(2, m, &budget).unwrap() {
            assert_eq!(aut.basis().len(), 1 + m, "index {m} automaton");
        }
    }
}

#[test]
fn core_properties_across_index_three() {
    let budget = EnumBudget::default();
    for aut in enumerate_index_subgroups(2, 3, &budget).unwrap() {
        let (core, transversal) = aut.core_subgroup().unwrap();
        assert_eq!(transversal.len(), 3);
        // the core is contained in the subgroup
        for b in core.basis() {
            assert!(aut.member(&b));
        }
        assert!(core.is_normal());
        let SubgroupIndex::Finite(core_index) = core.index() else {
            panic!("core of a finite-index subgroup has finite index");
        };
        assert!(core_index <= 27, "index bounded by m^m");
        assert_eq!(6 % core_index, 0, "index divides m!");
    }
}

#[test]
fn schreier_ball_reconstructs_finite_index_subgroups() {
    let budget = EnumBudget::default();
    for aut in enumerate_index_subgroups(2, 3, &budget).unwrap() {
        let oracle = |w: &Word| aut.member(w);
        let radius = aut.num_vertices() + 1;
        let ball = schreier_ball(&oracle, 2, radius, None);
        assert_eq!(ball.num_vertices(), aut.num_vertices());
        let refold = StallingsAutomaton::from_generators(2, ball.basis_chunk()).unwrap();
        assert_eq!(refold, aut);
    }
}

#[test]
fn subgroup_counts_match_the_recursive_oracle() {
    // number of index-m subgroups of a rank-2 free group:
    // N_m = m * m! - sum_{i=1}^{m-1} (m-i)! * N_i
    fn factorial(k: usize) -> usize {
        (1..=k).product::<usize>().max(1)
    }
    let mut counts = vec![0usize; 5];
    for m in 1..=4usize {
        let mut n = m * factorial(m);
        for i in 1..m {
            n -= factorial(m - i) * counts[i];
        }
        counts[m] = n;
    }
    let budget = EnumBudget::default();
    for m in 1..=4 {
        assert_eq!(
            enumerate_index_subgroups(2, m, &budget).unwrap().len(),
            counts[m],
            "index {m}"
        );
    }
}
