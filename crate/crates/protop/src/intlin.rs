//! Exact integer matrix algorithms: Smith normal form with unimodular
//! transforms, lattice index and membership, and mod-m variants.
//!
//! Everything runs over arbitrary-precision integers; intermediate
//! entries blow up under elimination and must not overflow.

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_traits::{One, Signed, Zero};

/// Dense row-major matrix of arbitrary-precision integers.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IntMatrix {
    rows: usize,
    cols: usize,
    entries: Vec<BigInt>,
}

impl IntMatrix {
    pub fn zero(rows: usize, cols: usize) -> Self {
        IntMatrix { rows, cols, entries: vec![BigInt::zero(); rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = IntMatrix::zero(n, n);
        for i in 0..n {
            m[(i, i)] = BigInt::one();
        }
        m
    }

    pub fn from_rows(rows: Vec<Vec<BigInt>>) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, |row| row.len());
        assert!(rows.iter().all(|row| row.len() == c), "ragged rows");
        IntMatrix { rows: r, cols: c, entries: rows.into_iter().flatten().collect() }
    }

    pub fn from_i64_rows(rows: &[Vec<i64>]) -> Self {
        IntMatrix::from_rows(
            rows.iter()
                .map(|row| row.iter().map(|&x| BigInt::from(x)).collect())
                .collect(),
        )
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[BigInt] {
        &self.entries[i * self.cols..(i + 1) * self.cols]
    }

    pub fn mul(&self, other: &IntMatrix) -> IntMatrix {
        assert_eq!(self.cols, other.rows, "dimension mismatch");
        let mut out = IntMatrix::zero(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = &self[(i, k)];
                if a.is_zero() {
                    continue;
                }
                for j in 0..other.cols {
                    let prod = a * &other[(k, j)];
                    out[(i, j)] += prod;
                }
            }
        }
        out
    }

    /// Exact determinant via fraction-free (Bareiss) elimination.
    pub fn determinant(&self) -> BigInt {
        assert_eq!(self.rows, self.cols, "determinant of non-square matrix");
        let n = self.rows;
        if n == 0 {
            return BigInt::one();
        }
        let mut m = self.clone();
        let mut sign = BigInt::one();
        let mut prev = BigInt::one();
        for k in 0..n - 1 {
            if m[(k, k)].is_zero() {
                let Some(p) = (k + 1..n).find(|&i| !m[(i, k)].is_zero()) else {
                    return BigInt::zero();
                };
                m.swap_rows(k, p);
                sign = -sign;
            }
            for i in k + 1..n {
                for j in k + 1..n {
                    let t = &m[(i, j)] * &m[(k, k)] - &m[(i, k)] * &m[(k, j)];
                    m[(i, j)] = &t / &prev;
                }
                m[(i, k)] = BigInt::zero();
            }
            prev = m[(k, k)].clone();
        }
        sign * m[(n - 1, n - 1)].clone()
    }

    fn swap_rows(&mut self, i: usize, j: usize) {
        if i == j {
            return;
        }
        for c in 0..self.cols {
            self.entries.swap(i * self.cols + c, j * self.cols + c);
        }
    }

    fn swap_cols(&mut self, i: usize, j: usize) {
        if i == j {
            return;
        }
        for r in 0..self.rows {
            self.entries.swap(r * self.cols + i, r * self.cols + j);
        }
    }

    // row_i += q * row_j
    fn add_row_multiple(&mut self, i: usize, j: usize, q: &BigInt) {
        for c in 0..self.cols {
            let t = &self[(j, c)] * q;
            self[(i, c)] += t;
        }
    }

    // col_i += q * col_j
    fn add_col_multiple(&mut self, i: usize, j: usize, q: &BigInt) {
        for r in 0..self.rows {
            let t = &self[(r, j)] * q;
            self[(r, i)] += t;
        }
    }

    fn negate_row(&mut self, i: usize) {
        for c in 0..self.cols {
            let t = -self[(i, c)].clone();
            self[(i, c)] = t;
        }
    }

    /// JSON wire form: nested arrays of decimal strings.
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::Value::Array(
            (0..self.rows)
                .map(|i| {
                    serde_json::Value::Array(
                        self.row(i)
                            .iter()
                            .map(|e| serde_json::Value::String(e.to_string()))
                            .collect(),
                    )
                })
                .collect(),
        )
    }
}

impl std::ops::Index<(usize, usize)> for IntMatrix {
    type Output = BigInt;
    fn index(&self, (i, j): (usize, usize)) -> &BigInt {
        &self.entries[i * self.cols + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for IntMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut BigInt {
        &mut self.entries[i * self.cols + j]
    }
}

/// `U * M * V = S` with `U`, `V` unimodular and `S` diagonal with the
/// divisibility chain `e1 | e2 | ...`; zero factors trail.
#[derive(Debug, Clone)]
pub struct SmithDecomposition {
    pub u: IntMatrix,
    pub s: IntMatrix,
    pub v: IntMatrix,
    /// Full diagonal of `S` (length `min(rows, cols)`), zeros included.
    pub diagonal: Vec<BigUint>,
}

impl SmithDecomposition {
    /// Nonzero invariant factors.
    pub fn invariant_factors(&self) -> Vec<BigUint> {
        self.diagonal.iter().filter(|e| !e.is_zero()).cloned().collect()
    }

    pub fn rank(&self) -> usize {
        self.diagonal.iter().filter(|e| !e.is_zero()).count()
    }

    /// Exact check of all structural invariants against the input.
    pub fn verify(&self, m: &IntMatrix) -> bool {
        if self.u.mul(m).mul(&self.v) != self.s {
            return false;
        }
        let du = self.u.determinant();
        let dv = self.v.determinant();
        if du.abs() != BigInt::one() || dv.abs() != BigInt::one() {
            return false;
        }
        let mut seen_zero = false;
        for i in 0..self.diagonal.len() {
            if self.diagonal[i].is_zero() {
                seen_zero = true;
            } else {
                if seen_zero {
                    return false;
                }
                if i > 0
                    && !self.diagonal[i - 1].is_zero()
                    && !(&self.diagonal[i] % &self.diagonal[i - 1]).is_zero()
                {
                    return false;
                }
            }
        }
        true
    }
}

/// Smith normal form. Pivot rule: smallest nonzero absolute value,
/// ties broken by row-major position, so the output is deterministic.
pub fn smith_normal_form(m: &IntMatrix) -> SmithDecomposition {
    let rows = m.rows();
    let cols = m.cols();
    let mut s = m.clone();
    let mut u = IntMatrix::identity(rows);
    let mut v = IntMatrix::identity(cols);
    let n = rows.min(cols);

    for t in 0..n {
        'step: loop {
            let Some((pi, pj)) = pick_pivot(&s, t) else {
                break 'step; // remaining submatrix is zero
            };
            if pi != t {
                s.swap_rows(t, pi);
                u.swap_rows(t, pi);
            }
            if pj != t {
                s.swap_cols(t, pj);
                v.swap_cols(t, pj);
            }
            // clear column t below the pivot
            let mut dirty = false;
            for i in t + 1..rows {
                if s[(i, t)].is_zero() {
                    continue;
                }
                let q = -(&s[(i, t)] / &s[(t, t)]);
                if !q.is_zero() {
                    s.add_row_multiple(i, t, &q);
                    u.add_row_multiple(i, t, &q);
                }
                if !s[(i, t)].is_zero() {
                    dirty = true; // remainder left; a smaller pivot now exists
                }
            }
            if dirty {
                continue 'step;
            }
            // clear row t to the right of the pivot
            for j in t + 1..cols {
                if s[(t, j)].is_zero() {
                    continue;
                }
                let q = -(&s[(t, j)] / &s[(t, t)]);
                if !q.is_zero() {
                    s.add_col_multiple(j, t, &q);
                    v.add_col_multiple(j, t, &q);
                }
                if !s[(t, j)].is_zero() {
                    dirty = true;
                }
            }
            if dirty {
                continue 'step;
            }
            // enforce the divisibility chain: pivot must divide the rest
            for i in t + 1..rows {
                for j in t + 1..cols {
                    if !(&s[(i, j)] % &s[(t, t)]).is_zero() {
                        s.add_row_multiple(t, i, &BigInt::one());
                        u.add_row_multiple(t, i, &BigInt::one());
                        continue 'step;
                    }
                }
            }
            break 'step;
        }
        if s[(t, t)].is_negative() {
            s.negate_row(t);
            u.negate_row(t);
        }
    }

    let diagonal = (0..n)
        .map(|i| s[(i, i)].magnitude().clone())
        .collect();
    SmithDecomposition { u, s, v, diagonal }
}

fn pick_pivot(s: &IntMatrix, t: usize) -> Option<(usize, usize)> {
    let mut best: Option<(BigInt, usize, usize)> = None;
    for i in t..s.rows() {
        for j in t..s.cols() {
            let e = &s[(i, j)];
            if e.is_zero() {
                continue;
            }
            let a = e.abs();
            match &best {
                Some((b, _, _)) if *b <= a => {}
                _ => best = Some((a, i, j)),
            }
        }
    }
    best.map(|(_, i, j)| (i, j))
}

/// Structure of `Z^n` modulo the row lattice: nonzero invariant factors
/// plus the free rank of the quotient.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LatticeQuotient {
    pub invariant_factors: Vec<BigUint>,
    pub free_rank: usize,
}

impl LatticeQuotient {
    /// Total order of the quotient when finite.
    pub fn index(&self) -> Option<BigUint> {
        if self.free_rank > 0 {
            return None;
        }
        Some(self.invariant_factors.iter().product())
    }

    /// Invariant factors > 1 (the canonical report form).
    pub fn nontrivial_factors(&self) -> Vec<BigUint> {
        self.invariant_factors
            .iter()
            .filter(|e| **e > BigUint::one())
            .cloned()
            .collect()
    }

    /// Exponent of the torsion part (largest invariant factor).
    pub fn exponent(&self) -> BigUint {
        self.invariant_factors.last().cloned().unwrap_or_else(BigUint::one)
    }
}

/// Quotient of `Z^ambient_dim` by the lattice spanned by the rows.
pub fn lattice_index(gens: &IntMatrix, ambient_dim: usize) -> LatticeQuotient {
    assert_eq!(gens.cols(), ambient_dim, "ambient dimension mismatch");
    let snf = smith_normal_form(gens);
    let factors = snf.invariant_factors();
    let free_rank = ambient_dim - factors.len();
    LatticeQuotient { invariant_factors: factors, free_rank }
}

/// Integer solution `x` of `x * gens = v`, if one exists.
pub fn lattice_membership(gens: &IntMatrix, v: &[BigInt]) -> Option<Vec<BigInt>> {
    assert_eq!(gens.cols(), v.len(), "vector length mismatch");
    let k = gens.rows();
    let n = gens.cols();
    let snf = smith_normal_form(gens);
    // x*M = v  <=>  y*S = v*V with x = y*U
    let mut w = vec![BigInt::zero(); n];
    for (j, wj) in w.iter_mut().enumerate() {
        for (i, vi) in v.iter().enumerate() {
            *wj += vi * &snf.v[(i, j)];
        }
    }
    let mut y = vec![BigInt::zero(); k];
    for (j, wj) in w.iter().enumerate() {
        let e = if j < k { snf.s[(j, j)].clone() } else { BigInt::zero() };
        if e.is_zero() {
            if !wj.is_zero() {
                return None;
            }
        } else {
            let (q, r) = wj.div_rem(&e);
            if !r.is_zero() {
                return None;
            }
            y[j] = q;
        }
    }
    let mut x = vec![BigInt::zero(); k];
    for (j, xj) in x.iter_mut().enumerate() {
        for (i, yi) in y.iter().enumerate() {
            *xj += yi * &snf.u[(i, j)];
        }
    }
    debug_assert!({
        let mut check = vec![BigInt::zero(); n];
        for (i, xi) in x.iter().enumerate() {
            for (j, c) in check.iter_mut().enumerate() {
                *c += xi * &gens[(i, j)];
            }
        }
        check == v
    });
    Some(x)
}

/// Membership in the subgroup of `(Z/m)^n` generated by the rows,
/// realized as integer membership with the rows augmented by `m * I`.
pub fn lattice_membership_mod(gens: &IntMatrix, v: &[BigInt], m: u64) -> bool {
    assert!(m >= 1);
    let n = gens.cols();
    assert_eq!(n, v.len());
    let mut rows: Vec<Vec<BigInt>> = (0..gens.rows()).map(|i| gens.row(i).to_vec()).collect();
    for i in 0..n {
        let mut r = vec![BigInt::zero(); n];
        r[i] = BigInt::from(m);
        rows.push(r);
    }
    lattice_membership(&IntMatrix::from_rows(rows), v).is_some()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn biguints(xs: &[u64]) -> Vec<BigUint> {
        xs.iter().map(|&x| BigUint::from(x)).collect()
    }

    #[test]
    fn snf_identity() {
        let m = IntMatrix::identity(2);
        let snf = smith_normal_form(&m);
        assert_eq!(snf.diagonal, biguints(&[1, 1]));
        assert!(snf.verify(&m));
    }

    #[test]
    fn snf_2x2_with_growth() {
        // gcd of entries = 2 and |det| = 8, so factors are (2, 4)
        let m = IntMatrix::from_i64_rows(&[vec![2, 4], vec![6, 8]]);
        let snf = smith_normal_form(&m);
        assert_eq!(snf.diagonal, biguints(&[2, 4]));
        assert!(snf.verify(&m));
    }

    #[test]
    fn snf_zero_matrix() {
        let m = IntMatrix::zero(2, 2);
        let snf = smith_normal_form(&m);
        assert_eq!(snf.diagonal, biguints(&[0, 0]));
        assert!(snf.verify(&m));
    }

    #[test]
    fn snf_rectangular() {
        let m = IntMatrix::from_i64_rows(&[vec![2, 0], vec![0, 1], vec![4, 4]]);
        let snf = smith_normal_form(&m);
        assert!(snf.verify(&m));
        assert_eq!(snf.invariant_factors(), biguints(&[1, 2]));
    }

    #[test]
    fn membership_parity_obstruction() {
        let gens = IntMatrix::from_i64_rows(&[vec![2, 0], vec![0, 1]]);
        let v = [BigInt::from(3), BigInt::from(0)];
        assert!(lattice_membership(&gens, &v).is_none());
    }

    #[test]
    fn membership_with_witness() {
        let gens = IntMatrix::from_i64_rows(&[vec![2, 0], vec![0, 1]]);
        let v = [BigInt::from(4), BigInt::from(7)];
        let x = lattice_membership(&gens, &v).unwrap();
        // witness validity: x * gens == v
        let mut got = vec![BigInt::zero(); 2];
        for (i, xi) in x.iter().enumerate() {
            for (j, g) in got.iter_mut().enumerate() {
                *g += xi * &gens[(i, j)];
            }
        }
        assert_eq!(got, v);
    }

    #[test]
    fn membership_zero_vector() {
        let gens = IntMatrix::from_i64_rows(&[vec![2, 0], vec![0, 1]]);
        let v = [BigInt::zero(), BigInt::zero()];
        let x = lattice_membership(&gens, &v).unwrap();
        assert!(x.iter().all(|c| c.is_zero()) || {
            let mut got = vec![BigInt::zero(); 2];
            for (i, xi) in x.iter().enumerate() {
                for (j, g) in got.iter_mut().enumerate() {
                    *g += xi * &gens[(i, j)];
                }
            }
            got == v
        });
    }

    #[test]
    fn membership_empty_lattice() {
        let gens = IntMatrix::zero(0, 2);
        assert!(lattice_membership(&gens, &[BigInt::zero(), BigInt::zero()]).is_some());
        assert!(lattice_membership(&gens, &[BigInt::one(), BigInt::zero()]).is_none());
    }

    #[test]
    fn index_finite_and_infinite() {
        let q = lattice_index(&IntMatrix::from_i64_rows(&[vec![2, 0], vec![0, 1]]), 2);
        assert_eq!(q.index(), Some(BigUint::from(2u32)));
        assert_eq!(q.invariant_factors, biguints(&[1, 2]));

        let q = lattice_index(&IntMatrix::from_i64_rows(&[vec![1, 0]]), 2);
        assert_eq!(q.index(), None);
        assert_eq!(q.free_rank, 1);

        let q = lattice_index(&IntMatrix::identity(2), 2);
        assert_eq!(q.index(), Some(BigUint::one()));
    }

    #[test]
    fn membership_mod_examples() {
        let gens = IntMatrix::from_i64_rows(&[vec![2, 0], vec![0, 1]]);
        let v = [BigInt::from(1), BigInt::from(0)];
        assert!(!lattice_membership_mod(&gens, &v, 2));

        let gens = IntMatrix::from_i64_rows(&[vec![1, 0], vec![0, 2]]);
        let v = [BigInt::from(0), BigInt::from(1)];
        assert!(lattice_membership_mod(&gens, &v, 3));

        // m = 1: the trivial group contains everything
        assert!(lattice_membership_mod(&gens, &[BigInt::from(9), BigInt::from(-5)], 1));
    }

    #[test]
    fn determinant_small_cases() {
        let m = IntMatrix::from_i64_rows(&[vec![2, 4], vec![6, 8]]);
        assert_eq!(m.determinant(), BigInt::from(-8));
        let m = IntMatrix::from_i64_rows(&[vec![0, 1], vec![1, 0]]);
        assert_eq!(m.determinant(), BigInt::from(-1));
        assert_eq!(IntMatrix::identity(3).determinant(), BigInt::one());
    }
}
