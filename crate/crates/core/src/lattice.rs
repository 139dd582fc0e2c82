//! Full-rank lattices over `R = k[t]_(t)` inside `K^n`, stored in canonical Hermite form.
//!
//! Canonical form: the basis is upper triangular, column `i` has diagonal entry exactly
//! `t^{a_i}`, and every entry `(i, j)` with `i < j` only has terms of exponent `< a_i`.
//! Two lattices are equal iff their canonical bases agree entrywise.
//!
//! Canonicalization first triangularizes the generators with coefficients truncated at
//! some absolute exponent `P`, adding `t^P e_k` as extra generators so the truncated
//! span is always full rank. If the triangular result contains `t^{P-1} R^n`, the
//! truncation was invisible (Nakayama) and the answer is exact; otherwise `P` grows.

use std::fmt;

use crate::error::{Error, Result};
use crate::field::Field;
use crate::local::LocalElement;
use crate::matrix::LocalMatrix;

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Lattice {
    field: Field,
    basis: LocalMatrix,
}

impl Lattice {
    /// The lattice `R^n`.
    pub fn standard(field: Field, n: usize) -> Lattice {
        Lattice {
            field,
            basis: LocalMatrix::identity(field, n),
        }
    }

    /// `diag(t^{e_0}, ..., t^{e_{n-1}}) R^n`.
    pub fn diagonal(field: Field, exps: &[i64]) -> Lattice {
        Lattice {
            field,
            basis: LocalMatrix::t_diagonal(field, exps),
        }
    }

    /// R-span of the columns of `gens`, which must span `K^n` (`n = gens.rows()`).
    pub fn from_generators(field: Field, gens: &LocalMatrix) -> Result<Lattice> {
        Ok(Lattice {
            field,
            basis: canonical_basis(field, gens)?,
        })
    }

    pub fn field(&self) -> Field {
        self.field
    }

    pub fn ambient_rank(&self) -> usize {
        self.basis.rows()
    }

    /// The canonical basis (columns).
    pub fn basis(&self) -> &LocalMatrix {
        &self.basis
    }

    /// Diagonal exponents `a_i` of the canonical basis.
    pub fn exponents(&self) -> Vec<i64> {
        (0..self.ambient_rank())
            .map(|i| self.basis.get(i, i).t_order())
            .collect()
    }

    /// `v(det B)`; differences of this give lengths of quotients.
    pub fn volume(&self) -> i64 {
        self.exponents().iter().sum()
    }

    pub fn canonicalize(&self) -> Result<Lattice> {
        Lattice::from_generators(self.field, &self.basis)
    }

    fn check_ambient(&self, other: &Lattice) -> Result<()> {
        if self.ambient_rank() != other.ambient_rank() {
            return Err(Error::AmbientMismatch {
                left: self.ambient_rank(),
                right: other.ambient_rank(),
            });
        }
        Ok(())
    }

    pub fn sum(&self, other: &Lattice) -> Result<Lattice> {
        self.check_ambient(other)?;
        Lattice::from_generators(self.field, &self.basis.hstack(&other.basis))
    }

    /// Largest lattice contained in both, computed as `(L1^v + L2^v)^v`.
    pub fn intersect(&self, other: &Lattice) -> Result<Lattice> {
        self.check_ambient(other)?;
        if self == other {
            return Ok(self.clone());
        }
        self.dual().sum(&other.dual()).map(|s| s.dual())
    }

    /// `t^d L`. Shifting a canonical basis keeps it canonical.
    pub fn scale(&self, d: i64) -> Lattice {
        Lattice {
            field: self.field,
            basis: self.basis.shift(d),
        }
    }

    /// Inverse of the canonical basis (exact: the basis is triangular with monomial diagonal).
    pub fn basis_inverse(&self) -> LocalMatrix {
        self.basis
            .upper_triangular_inverse()
            .expect("canonical basis is triangular with monomial diagonal")
    }

    /// True iff `other ⊆ self`.
    pub fn contains(&self, other: &Lattice) -> Result<bool> {
        self.check_ambient(other)?;
        Ok(self.basis_inverse().mul(&other.basis).is_integral())
    }

    /// True iff the vector lies in the lattice.
    pub fn contains_vector(&self, v: &[LocalElement]) -> bool {
        let col = LocalMatrix::from_columns(v.len(), vec![v.to_vec()]);
        self.basis_inverse().mul(&col).is_integral()
    }

    /// Length of `self / other` as a k-vector space; requires `other ⊆ self`.
    pub fn quotient_dim(&self, other: &Lattice) -> Result<usize> {
        if !self.contains(other)? {
            return Err(Error::NotContained);
        }
        Ok((other.volume() - self.volume()) as usize)
    }

    /// The dual lattice `{x : x^T y ∈ R for all y ∈ L}`, spanned by the columns of `B^{-T}`.
    pub fn dual(&self) -> Lattice {
        let gens = self.basis_inverse().transpose();
        Lattice::from_generators(self.field, &gens).expect("dual of a full-rank lattice")
    }

    /// `A L` for `A` invertible over `K`.
    pub fn image(&self, a: &LocalMatrix) -> Result<Lattice> {
        if a.cols() != self.ambient_rank() {
            return Err(Error::ShapeMismatch(format!(
                "matrix has {} columns, lattice rank {}",
                a.cols(),
                self.ambient_rank()
            )));
        }
        Lattice::from_generators(self.field, &a.mul(&self.basis))
    }

    /// Block direct sum in the concatenated coordinates. Already canonical.
    pub fn direct_sum(field: Field, parts: &[&Lattice]) -> Lattice {
        let blocks: Vec<&LocalMatrix> = parts.iter().map(|l| &l.basis).collect();
        Lattice {
            field,
            basis: LocalMatrix::block_diag(&blocks),
        }
    }
}

/// `A src ⊆ dst`, for any (possibly singular) `A: K^{src} -> K^{dst}`.
pub fn maps_into(a: &LocalMatrix, src: &Lattice, dst: &Lattice) -> Result<bool> {
    if a.cols() != src.ambient_rank() || a.rows() != dst.ambient_rank() {
        return Err(Error::ShapeMismatch(format!(
            "{}x{} matrix between ranks {} and {}",
            a.rows(),
            a.cols(),
            src.ambient_rank(),
            dst.ambient_rank()
        )));
    }
    Ok(dst.basis_inverse().mul(a).mul(src.basis()).is_integral())
}

impl fmt::Display for Lattice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.basis)
    }
}

/// Canonical basis of the R-span of the columns of `gens`.
pub fn canonical_basis(field: Field, gens: &LocalMatrix) -> Result<LocalMatrix> {
    let n = gens.rows();
    if n == 0 {
        return Ok(LocalMatrix::zeros(0, 0));
    }
    if gens.cols() < n {
        return Err(Error::SingularBasis);
    }
    let min_exp = gens.min_valuation().ok_or(Error::SingularBasis)?;
    let mut span: i64 = 8;
    let mut rank_checked = false;
    loop {
        let bound = min_exp + span;
        let (cols, exps) = triangularize(field, n, gens, bound);
        let length: i64 = exps.iter().map(|a| a - min_exp).sum();
        let top = exps.iter().copied().max().unwrap_or(min_exp);
        if top < bound - 1 {
            let basis = reduce(field, cols, &exps, bound, min_exp);
            // exact once t^{bound-1} R^n lies in the span
            if bound > length + min_exp || contains_power(&basis, bound - 1) {
                return Ok(basis);
            }
        }
        if !rank_checked && span > 48 {
            if generic_rank(gens) < n {
                return Err(Error::SingularBasis);
            }
            rank_checked = true;
        }
        span *= 2;
    }
}

/// Whether `t^m R^n` lies in the span of a canonical basis.
fn contains_power(basis: &LocalMatrix, m: i64) -> bool {
    let inv = basis
        .upper_triangular_inverse()
        .expect("canonical basis is triangular with monomial diagonal");
    inv.min_valuation().is_none_or(|v| v + m >= 0)
}

/// Bottom-up column elimination modulo `t^bound`. Returns pivot columns indexed by
/// pivot row, and their pivot valuations.
fn triangularize(
    field: Field,
    n: usize,
    gens: &LocalMatrix,
    bound: i64,
) -> (Vec<Vec<LocalElement>>, Vec<i64>) {
    let mut active: Vec<Vec<LocalElement>> = gens
        .columns()
        .map(|c| c.iter().map(|x| x.truncate(bound)).collect::<Vec<_>>())
        .filter(|c: &Vec<LocalElement>| c.iter().any(|x| !x.is_zero()))
        .collect();
    for k in 0..n {
        let mut col = vec![LocalElement::zero(); n];
        col[k] = LocalElement::t_pow(field, bound);
        active.push(col);
    }
    let mut pivots: Vec<Vec<LocalElement>> = vec![Vec::new(); n];
    let mut exps = vec![0; n];
    for row in (0..n).rev() {
        let idx = active
            .iter()
            .enumerate()
            .filter_map(|(i, c)| c[row].valuation().map(|v| (v, i)))
            .min()
            .map(|(_, i)| i)
            .expect("t^bound generators keep every row populated");
        let mut pivot = active.remove(idx);
        let v = pivot[row].t_order();
        // make the pivot entry exactly t^v so elimination needs no cross-multiplication
        let w = pivot[row].unit_part();
        if !w.is_one() {
            let w_inv = w.inverse_series((bound - v).max(1) as usize);
            for x in pivot.iter_mut().take(row) {
                *x = x.mul_truncated(&w_inv, bound);
            }
            pivot[row] = LocalElement::t_pow(field, v);
        }
        for col in active.iter_mut() {
            if col[row].is_zero() {
                continue;
            }
            let factor = col[row].shift(-v);
            for r in 0..row {
                let x = &col[r] - &factor.mul_truncated(&pivot[r], bound);
                col[r] = x;
            }
            col[row] = LocalElement::zero();
        }
        active.retain(|c| c.iter().any(|x| !x.is_zero()));
        exps[row] = v;
        pivots[row] = pivot;
    }
    (pivots, exps)
}

/// Normalizes pivots to pure powers of `t` and reduces the off-diagonal entries.
fn reduce(
    field: Field,
    mut cols: Vec<Vec<LocalElement>>,
    exps: &[i64],
    bound: i64,
    min_exp: i64,
) -> LocalMatrix {
    let n = cols.len();
    let terms = (bound - min_exp).max(1) as usize;
    for (i, col) in cols.iter_mut().enumerate() {
        let w = col[i].unit_part();
        if !w.is_one() {
            let w_inv = w.inverse_series(terms);
            for x in col.iter_mut().take(i) {
                *x = x.mul_truncated(&w_inv, bound);
            }
        }
        col[i] = LocalElement::t_pow(field, exps[i]);
    }
    for i in (0..n).rev() {
        for j in (i + 1)..n {
            let (_, high) = cols[j][i].split_at(exps[i]);
            if high.is_zero() {
                continue;
            }
            let y = high.shift(-exps[i]);
            for r in 0..=i {
                let delta = &y * &cols[i][r];
                cols[j][r] = &cols[j][r] - &delta;
            }
        }
    }
    LocalMatrix::from_columns(n, cols)
}

/// `v(det A)` for square `A`, or `None` when `A` is singular over `K`.
///
/// Elimination modulo `t^P` always pivots on an entry of least valuation, so every
/// multiplier is integral and no precision is lost; `P` grows until all pivots are seen.
pub fn det_valuation(a: &LocalMatrix) -> Option<i64> {
    let n = a.rows();
    assert_eq!(n, a.cols(), "det_valuation of a non-square matrix");
    if n == 0 {
        return Some(0);
    }
    let min_exp = a.min_valuation()?;
    let mut span: i64 = 8;
    let mut rank_checked = false;
    loop {
        if let Some(v) = det_valuation_mod(a, min_exp, span) {
            return Some(v + n as i64 * min_exp);
        }
        if !rank_checked && span > 48 {
            if generic_rank(a) < n {
                return None;
            }
            rank_checked = true;
        }
        span *= 2;
    }
}

/// `v(det(t^{-shift} A))` computed modulo `t^bound`; `None` if the precision ran out.
fn det_valuation_mod(a: &LocalMatrix, shift: i64, bound: i64) -> Option<i64> {
    let n = a.rows();
    let mut m: Vec<Vec<LocalElement>> = (0..n)
        .map(|r| {
            (0..n)
                .map(|c| a.get(r, c).shift(-shift).truncate(bound))
                .collect()
        })
        .collect();
    let mut total = 0;
    let mut rows: Vec<usize> = (0..n).collect();
    let mut cols: Vec<usize> = (0..n).collect();
    while !rows.is_empty() {
        let (v, ri, ci) = rows
            .iter()
            .enumerate()
            .flat_map(|(ri, &r)| cols.iter().enumerate().map(move |(ci, &c)| (ri, r, ci, c)))
            .filter_map(|(ri, r, ci, c)| m[r][c].valuation().map(|v| (v, ri, ci)))
            .min()?;
        let pr = rows.swap_remove(ri);
        let pc = cols.swap_remove(ci);
        total += v;
        let w_inv = m[pr][pc]
            .unit_part()
            .inverse_series((bound - v).max(1) as usize);
        for &r in &rows {
            if m[r][pc].is_zero() {
                continue;
            }
            let factor = m[r][pc].shift(-v).mul_truncated(&w_inv, bound);
            for &c in &cols {
                if m[pr][c].is_zero() {
                    continue;
                }
                let x = &m[r][c] - &factor.mul_truncated(&m[pr][c], bound);
                m[r][c] = x;
            }
        }
    }
    Some(total)
}

/// Exact division in `k[t, t^-1]`; the caller guarantees divisibility.
fn div_exact(a: &LocalElement, b: &LocalElement) -> LocalElement {
    if a.is_zero() {
        return LocalElement::zero();
    }
    let w = b.coeffs();
    let num = a.coeffs();
    let len = num.len() + 1 - w.len();
    let w0_inv = w[0].inv();
    let mut q: Vec<_> = Vec::with_capacity(len);
    for k in 0..len {
        let mut acc = num[k].clone();
        for j in 1..=k.min(w.len() - 1) {
            acc = &acc - &(&w[j] * &q[k - j]);
        }
        q.push(&acc * &w0_inv);
    }
    LocalElement::from_coeffs(a.t_order() - b.t_order(), q)
}

/// Rank over `K` by fraction-free (Bareiss) elimination.
fn generic_rank(m: &LocalMatrix) -> usize {
    let rows = m.rows();
    let cols = m.cols();
    let mut a: Vec<Vec<LocalElement>> = (0..rows)
        .map(|r| (0..cols).map(|c| m.get(r, c).clone()).collect())
        .collect();
    let mut prev: Option<LocalElement> = None;
    let mut rank = 0;
    for c in 0..cols {
        if rank == rows {
            break;
        }
        let Some(p) = (rank..rows).find(|&r| !a[r][c].is_zero()) else {
            continue;
        };
        a.swap(rank, p);
        let piv = a[rank][c].clone();
        for r in (rank + 1)..rows {
            let f = a[r][c].clone();
            for j in (c + 1)..cols {
                let x = &(&piv * &a[r][j]) - &(&f * &a[rank][j]);
                a[r][j] = match &prev {
                    Some(d) => div_exact(&x, d),
                    None => x,
                };
            }
            a[r][c] = LocalElement::zero();
        }
        prev = Some(piv);
        rank += 1;
    }
    rank
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::Scalar;

    fn q() -> Field {
        Field::Rational
    }

    fn t(k: i64) -> LocalElement {
        LocalElement::t_pow(q(), k)
    }

    fn c(v: i64) -> LocalElement {
        LocalElement::constant(q().from_i64(v))
    }

    fn z() -> LocalElement {
        LocalElement::zero()
    }

    fn lat(cols: Vec<Vec<LocalElement>>) -> Lattice {
        let n = cols[0].len();
        Lattice::from_generators(q(), &LocalMatrix::from_columns(n, cols)).unwrap()
    }

    /// Determinant by cofactor expansion; independent of the elimination code.
    fn det(m: &[Vec<LocalElement>]) -> LocalElement {
        let n = m.len();
        if n == 1 {
            return m[0][0].clone();
        }
        let mut acc = LocalElement::zero();
        for j in 0..n {
            let minor: Vec<Vec<LocalElement>> = m[1..]
                .iter()
                .map(|row| {
                    row.iter()
                        .enumerate()
                        .filter(|(k, _)| *k != j)
                        .map(|(_, x)| x.clone())
                        .collect()
                })
                .collect();
            let term = &m[0][j] * &det(&minor);
            acc = if j % 2 == 0 {
                &acc + &term
            } else {
                &acc - &term
            };
        }
        acc
    }

    /// Cramer-rule membership: `x ∈ span_R(cols)` iff every `det(cols with x in slot i)`
    /// has valuation at least `v(det cols)`.
    fn member(cols: &[Vec<LocalElement>], x: &[LocalElement]) -> bool {
        let n = cols.len();
        let as_rows = |cs: &[Vec<LocalElement>]| -> Vec<Vec<LocalElement>> {
            (0..n)
                .map(|r| cs.iter().map(|c| c[r].clone()).collect())
                .collect()
        };
        let d = det(&as_rows(cols)).valuation().expect("nonsingular");
        (0..n).all(|i| {
            let mut cs = cols.to_vec();
            cs[i] = x.to_vec();
            det(&as_rows(&cs)).valuation().is_none_or(|v| v >= d)
        })
    }

    fn same_span(a: &[Vec<LocalElement>], b: &[Vec<LocalElement>]) -> bool {
        a.iter().all(|x| member(b, x)) && b.iter().all(|x| member(a, x))
    }

    #[test]
    fn canonicalize_identity() {
        let l = Lattice::standard(q(), 2);
        assert_eq!(
            l.canonicalize().unwrap().basis(),
            &LocalMatrix::identity(q(), 2)
        );
    }

    #[test]
    fn canonicalize_mixed_generators() {
        let gens = vec![vec![t(1), z()], vec![c(1), c(1)]];
        let l = lat(gens.clone());
        let expected = vec![vec![c(1), c(1)], vec![z(), t(1)]];
        // upper-triangular storage: columns (1, 0)... canonical is column-major with
        // column j supported on rows <= j, so transpose the row-vector description.
        let b = l.basis();
        let cols: Vec<Vec<LocalElement>> = b.columns().map(<[_]>::to_vec).collect();
        assert!(same_span(&cols, &gens));
        assert!(same_span(&cols, &expected));
        assert_eq!(l.exponents(), vec![1, 0]);
        assert!(b.is_upper_triangular());
    }

    #[test]
    fn canonicalize_negative_orders() {
        let gens = vec![vec![t(2).shift(-1), z()], vec![z(), t(-1)]];
        let l = lat(gens.clone());
        assert_eq!(l.basis(), &LocalMatrix::t_diagonal(q(), &[1, -1]));
    }

    #[test]
    fn canonical_form_is_unique_for_non_polynomial_unit_mixing() {
        // columns (1 + t, 1), (0, t^2): the unit 1 + t must be divided out exactly
        let one_plus_t = &c(1) + &t(1);
        let gens = vec![vec![one_plus_t.clone(), c(1)], vec![z(), t(2)]];
        let l = lat(gens.clone());
        let cols: Vec<Vec<LocalElement>> = l.basis().columns().map(<[_]>::to_vec).collect();
        assert!(same_span(&cols, &gens));
        // the same lattice from a reshuffled generating set
        let other = lat(vec![
            vec![&one_plus_t * &c(3), c(3)],
            vec![t(2), t(2)],
            vec![z(), t(2)],
        ]);
        assert_eq!(l, other);
    }

    #[test]
    fn singular_generators_rejected() {
        let gens = LocalMatrix::from_columns(2, vec![vec![c(1), t(1)], vec![t(1), t(2)]]);
        assert_eq!(
            Lattice::from_generators(q(), &gens),
            Err(Error::SingularBasis)
        );
        let zero = LocalMatrix::zeros(2, 3);
        assert_eq!(
            Lattice::from_generators(q(), &zero),
            Err(Error::SingularBasis)
        );
    }

    #[test]
    fn sum_examples() {
        let l = lat(vec![vec![c(1), c(1)], vec![z(), t(1)]]);
        assert_eq!(l.sum(&l).unwrap(), l);
        let r2 = Lattice::standard(q(), 2);
        assert_eq!(r2.sum(&r2.scale(-1)).unwrap(), r2.scale(-1));
        let a = Lattice::diagonal(q(), &[0, 1]);
        let b = lat(vec![vec![t(1), z()], vec![z(), c(1)]]);
        assert_eq!(a.sum(&b).unwrap(), r2);
        assert!(matches!(
            a.sum(&Lattice::standard(q(), 3)),
            Err(Error::AmbientMismatch { .. })
        ));
    }

    #[test]
    fn intersect_examples() {
        let a = Lattice::diagonal(q(), &[0, 1]);
        let b = lat(vec![vec![c(1), c(1)], vec![z(), t(1)]]);
        // (x, y) in both: x ∈ R, y ∈ tR, and x - y ∈ tR (from b) forces x ∈ tR
        assert_eq!(a.intersect(&b).unwrap(), Lattice::diagonal(q(), &[1, 1]));
        let r2 = Lattice::standard(q(), 2);
        assert_eq!(r2.intersect(&r2.scale(-1)).unwrap(), r2);
        assert_eq!(b.intersect(&b).unwrap(), b);
    }

    #[test]
    fn scale_examples() {
        let l = lat(vec![vec![c(1), c(1)], vec![z(), t(1)]]);
        assert_eq!(l.scale(0), l);
        assert_eq!(
            Lattice::standard(q(), 3).scale(1),
            Lattice::diagonal(q(), &[1, 1, 1])
        );
        let shifted = l.scale(-1);
        let oracle = lat(vec![vec![t(-1), t(-1)], vec![z(), c(1)]]);
        assert_eq!(shifted, oracle);
    }

    #[test]
    fn contains_examples() {
        let l = lat(vec![vec![c(1), c(1)], vec![z(), t(1)]]);
        assert!(l.contains(&l.scale(1)).unwrap());
        assert!(!l.scale(1).contains(&l).unwrap());
        let a = Lattice::diagonal(q(), &[0, 1]);
        let b = lat(vec![vec![t(1), t(1)], vec![z(), t(1)]]);
        assert!(a.contains(&b).unwrap());
    }

    #[test]
    fn quotient_dim_examples() {
        let l = lat(vec![vec![c(1), c(1)], vec![z(), t(1)]]);
        assert_eq!(l.quotient_dim(&l).unwrap(), 0);
        assert_eq!(l.quotient_dim(&l.scale(1)).unwrap(), 2);
        assert_eq!(Lattice::standard(q(), 2).quotient_dim(&l).unwrap(), 1);
        assert_eq!(l.scale(1).quotient_dim(&l), Err(Error::NotContained));
    }

    #[test]
    fn dual_is_involutive_and_reverses_inclusion() {
        let l = lat(vec![vec![&c(1) + &t(1), c(2)], vec![t(-1), t(2)]]);
        assert_eq!(l.dual().dual(), l);
        assert!(l.dual().contains(&l.scale(-1).dual()).unwrap());
    }

    #[test]
    fn empty_lattice() {
        let l = Lattice::standard(q(), 0);
        assert_eq!(l.canonicalize().unwrap(), l);
        assert_eq!(l.intersect(&l).unwrap(), l);
        assert_eq!(l.quotient_dim(&l).unwrap(), 0);
    }

    #[test]
    fn prime_field_canonical_form() {
        let f = Field::Prime(7);
        let s = |v| LocalElement::constant(f.from_i64(v));
        let gens = LocalMatrix::from_columns(
            2,
            vec![
                vec![s(3), &s(1) + &LocalElement::t_pow(f, 1)],
                vec![s(6), s(2)],
            ],
        );
        let l = Lattice::from_generators(f, &gens).unwrap();
        assert_eq!(l.volume(), 1);
        assert!(l.basis().is_upper_triangular());
        let _: Scalar = f.one();
    }

    #[test]
    fn bareiss_rank() {
        let m = LocalMatrix::from_columns(
            3,
            vec![
                vec![c(1), t(1), t(2)],
                vec![t(1), t(2), t(3)],
                vec![c(0), c(1), &c(1) + &t(5)],
            ],
        );
        assert_eq!(generic_rank(&m), 2);
        assert_eq!(generic_rank(&LocalMatrix::identity(q(), 4)), 4);
    }

    #[test]
    fn det_valuation_matches_volume() {
        let m = LocalMatrix::from_columns(
            3,
            vec![
                vec![c(1), t(1), t(2)],
                vec![t(1), t(2), t(3)],
                vec![c(0), c(1), &c(1) + &t(5)],
            ],
        );
        assert_eq!(det_valuation(&m), None);
        // det [[t^-1, 1], [1, t^3]] = t^2 - 1, a unit
        let a = LocalMatrix::from_columns(2, vec![vec![t(-1), c(1)], vec![c(1), t(3)]]);
        assert_eq!(det_valuation(&a), Some(0));
        let b = LocalMatrix::from_columns(2, vec![vec![t(2), t(1)], vec![t(1), &t(0) + &t(4)]]);
        let vol = Lattice::from_generators(q(), &b).unwrap().volume();
        assert_eq!(det_valuation(&b), Some(vol));
        assert_eq!(
            det_valuation(&LocalMatrix::t_diagonal(q(), &[3, -1, 7])),
            Some(9)
        );
    }
}
