//! Dense column-major matrices of [`LocalElement`], plus a few field-level helpers.

use std::fmt;

use crate::field::{Field, Scalar};
use crate::local::LocalElement;

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct LocalMatrix {
    rows: usize,
    cols: usize,
    data: Vec<LocalElement>,
}

impl LocalMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        LocalMatrix {
            rows,
            cols,
            data: vec![LocalElement::zero(); rows * cols],
        }
    }

    pub fn identity(field: Field, n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.set(i, i, LocalElement::one(field));
        }
        m
    }

    /// Diagonal matrix `diag(t^e_0, t^e_1, ...)`.
    pub fn t_diagonal(field: Field, exps: &[i64]) -> Self {
        let mut m = Self::zeros(exps.len(), exps.len());
        for (i, &e) in exps.iter().enumerate() {
            m.set(i, i, LocalElement::t_pow(field, e));
        }
        m
    }

    pub fn from_columns(rows: usize, columns: Vec<Vec<LocalElement>>) -> Self {
        let cols = columns.len();
        let mut data = Vec::with_capacity(rows * cols);
        for c in columns {
            assert_eq!(c.len(), rows, "column length mismatch");
            data.extend(c);
        }
        LocalMatrix { rows, cols, data }
    }

    pub fn from_rows(rows: Vec<Vec<LocalElement>>) -> Self {
        let nrows = rows.len();
        let ncols = rows.first().map_or(0, Vec::len);
        let mut m = Self::zeros(nrows, ncols);
        for (i, row) in rows.into_iter().enumerate() {
            assert_eq!(row.len(), ncols, "row length mismatch");
            for (j, x) in row.into_iter().enumerate() {
                m.set(i, j, x);
            }
        }
        m
    }

    /// Matrix with constant entries, given row by row.
    pub fn from_scalar_rows(rows: &[Vec<Scalar>]) -> Self {
        Self::from_rows(
            rows.iter()
                .map(|r| r.iter().cloned().map(LocalElement::constant).collect())
                .collect(),
        )
    }

    pub fn from_int_rows(field: Field, rows: &[&[i64]]) -> Self {
        Self::from_rows(
            rows.iter()
                .map(|r| {
                    r.iter()
                        .map(|&v| LocalElement::constant(field.from_i64(v)))
                        .collect()
                })
                .collect(),
        )
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, r: usize, c: usize) -> &LocalElement {
        &self.data[c * self.rows + r]
    }

    pub fn set(&mut self, r: usize, c: usize, x: LocalElement) {
        self.data[c * self.rows + r] = x;
    }

    pub fn column(&self, c: usize) -> &[LocalElement] {
        &self.data[c * self.rows..(c + 1) * self.rows]
    }

    pub fn columns(&self) -> impl Iterator<Item = &[LocalElement]> + '_ {
        (0..self.cols).map(move |c| self.column(c))
    }

    pub fn into_columns(self) -> Vec<Vec<LocalElement>> {
        if self.rows == 0 {
            return vec![Vec::new(); self.cols];
        }
        self.data.chunks(self.rows).map(<[_]>::to_vec).collect()
    }

    pub fn entries(&self) -> impl Iterator<Item = &LocalElement> + '_ {
        self.data.iter()
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn transpose(&self) -> Self {
        let mut m = Self::zeros(self.cols, self.rows);
        for c in 0..self.cols {
            for r in 0..self.rows {
                m.set(c, r, self.get(r, c).clone());
            }
        }
        m
    }

    pub fn neg(&self) -> Self {
        self.map(|x| -x)
    }

    pub fn map(&self, f: impl Fn(&LocalElement) -> LocalElement) -> Self {
        LocalMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(f).collect(),
        }
    }

    /// Multiplication of every entry by `t^d`.
    pub fn shift(&self, d: i64) -> Self {
        self.map(|x| x.shift(d))
    }

    /// Substitutes `x -> u t^e` entrywise.
    pub fn inflate(&self, e: u32, u: &Scalar) -> Self {
        self.map(|x| x.inflate(e, u))
    }

    pub fn mul(&self, rhs: &LocalMatrix) -> LocalMatrix {
        assert_eq!(self.cols, rhs.rows, "matrix product shape mismatch");
        let mut out = Self::zeros(self.rows, rhs.cols);
        for j in 0..rhs.cols {
            for k in 0..self.cols {
                let b = rhs.get(k, j);
                if b.is_zero() {
                    continue;
                }
                for i in 0..self.rows {
                    let a = self.get(i, k);
                    if a.is_zero() {
                        continue;
                    }
                    let idx = j * out.rows + i;
                    out.data[idx] = &out.data[idx] + &(a * b);
                }
            }
        }
        out
    }

    pub fn add(&self, rhs: &LocalMatrix) -> LocalMatrix {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        LocalMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&rhs.data)
                .map(|(a, b)| a + b)
                .collect(),
        }
    }

    /// Column concatenation `[self | rhs]`.
    pub fn hstack(&self, rhs: &LocalMatrix) -> LocalMatrix {
        assert_eq!(self.rows, rhs.rows);
        let mut data = self.data.clone();
        data.extend(rhs.data.iter().cloned());
        LocalMatrix {
            rows: self.rows,
            cols: self.cols + rhs.cols,
            data,
        }
    }

    pub fn block_diag(blocks: &[&LocalMatrix]) -> LocalMatrix {
        let rows = blocks.iter().map(|b| b.rows).sum();
        let cols = blocks.iter().map(|b| b.cols).sum();
        let mut m = Self::zeros(rows, cols);
        let (mut r0, mut c0) = (0, 0);
        for b in blocks {
            for c in 0..b.cols {
                for r in 0..b.rows {
                    m.set(r0 + r, c0 + c, b.get(r, c).clone());
                }
            }
            r0 += b.rows;
            c0 += b.cols;
        }
        m
    }

    /// Submatrix of the given row and column ranges.
    pub fn slice(&self, rows: std::ops::Range<usize>, cols: std::ops::Range<usize>) -> Self {
        let mut m = Self::zeros(rows.len(), cols.len());
        for (cj, c) in cols.clone().enumerate() {
            for (ri, r) in rows.clone().enumerate() {
                m.set(ri, cj, self.get(r, c).clone());
            }
        }
        m
    }

    /// All entries lie in `R`.
    pub fn is_integral(&self) -> bool {
        self.data.iter().all(LocalElement::is_integral)
    }

    pub fn min_valuation(&self) -> Option<i64> {
        self.data.iter().filter_map(LocalElement::valuation).min()
    }

    pub fn is_upper_triangular(&self) -> bool {
        (0..self.cols).all(|c| ((c + 1)..self.rows).all(|r| self.get(r, c).is_zero()))
    }

    /// Inverse of an upper-triangular matrix whose diagonal entries are monomials `c t^a`.
    /// Returns `None` when that shape condition fails.
    pub fn upper_triangular_inverse(&self) -> Option<LocalMatrix> {
        if !self.is_square() || !self.is_upper_triangular() {
            return None;
        }
        let n = self.rows;
        let mut diag_inv = Vec::with_capacity(n);
        for i in 0..n {
            let d = self.get(i, i);
            if !d.is_monomial() {
                return None;
            }
            diag_inv.push(LocalElement::monomial(d.coeffs()[0].inv(), -d.t_order()));
        }
        let mut inv = Self::zeros(n, n);
        for j in 0..n {
            inv.set(j, j, diag_inv[j].clone());
            for i in (0..j).rev() {
                let mut acc = LocalElement::zero();
                for k in (i + 1)..=j {
                    let b = self.get(i, k);
                    let x = inv.get(k, j);
                    if b.is_zero() || x.is_zero() {
                        continue;
                    }
                    acc = &acc + &(b * x);
                }
                inv.set(i, j, -&(&diag_inv[i] * &acc));
            }
        }
        Some(inv)
    }

    /// Entries that are constants, as a field matrix; `None` if some entry is not constant.
    pub fn to_constant(&self, field: Field) -> Option<ConstMatrix> {
        let mut rows = vec![vec![field.zero(); self.cols]; self.rows];
        for (r, row) in rows.iter_mut().enumerate() {
            for (c, slot) in row.iter_mut().enumerate() {
                let x = self.get(r, c);
                if x.is_zero() {
                    continue;
                }
                if x.t_order() != 0 || !x.is_monomial() {
                    return None;
                }
                *slot = x.coeffs()[0].clone();
            }
        }
        Some(ConstMatrix { rows })
    }

    /// Reduction modulo `t` of an integral matrix, as a field matrix.
    pub fn reduce_mod_t(&self, field: Field) -> ConstMatrix {
        let mut rows = vec![vec![field.zero(); self.cols]; self.rows];
        for (r, row) in rows.iter_mut().enumerate() {
            for (c, slot) in row.iter_mut().enumerate() {
                if let Some(v) = self.get(r, c).coeff(0) {
                    *slot = v.clone();
                }
            }
        }
        ConstMatrix { rows }
    }
}

impl fmt::Display for LocalMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for r in 0..self.rows {
            write!(f, "[")?;
            for c in 0..self.cols {
                if c > 0 {
                    write!(f, ", ")?;
                }
                write!(f, "{}", self.get(r, c))?;
            }
            writeln!(f, "]")?;
        }
        Ok(())
    }
}

/// A matrix over the ground field, stored by rows.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConstMatrix {
    pub rows: Vec<Vec<Scalar>>,
}

impl ConstMatrix {
    pub fn nrows(&self) -> usize {
        self.rows.len()
    }

    pub fn ncols(&self) -> usize {
        self.rows.first().map_or(0, Vec::len)
    }

    pub fn from_columns(field: Field, nrows: usize, cols: &[Vec<Scalar>]) -> Self {
        let mut rows = vec![vec![field.zero(); cols.len()]; nrows];
        for (c, col) in cols.iter().enumerate() {
            for (r, v) in col.iter().enumerate() {
                rows[r][c] = v.clone();
            }
        }
        ConstMatrix { rows }
    }

    pub fn column(&self, c: usize) -> Vec<Scalar> {
        self.rows.iter().map(|r| r[c].clone()).collect()
    }

    pub fn to_local(&self) -> LocalMatrix {
        LocalMatrix::from_scalar_rows(&self.rows)
    }

    /// Basis of the column span in reduced column-echelon form, pivots at the lowest row
    /// index. Each returned vector is paired with its pivot row.
    pub fn column_echelon(&self, field: Field) -> Vec<(usize, Vec<Scalar>)> {
        let n = self.nrows();
        let mut cols: Vec<Vec<Scalar>> = (0..self.ncols()).map(|c| self.column(c)).collect();
        let mut basis: Vec<(usize, Vec<Scalar>)> = Vec::new();
        for row in 0..n {
            let Some(p) = cols.iter().position(|c| !c[row].is_zero()) else {
                continue;
            };
            let mut piv = cols.swap_remove(p);
            let inv = piv[row].inv();
            for x in piv.iter_mut() {
                *x = &*x * &inv;
            }
            for c in cols.iter_mut() {
                if c[row].is_zero() {
                    continue;
                }
                let f = c[row].clone();
                for (x, y) in c.iter_mut().zip(&piv) {
                    *x = &*x - &(&f * y);
                }
            }
            for (_, b) in basis.iter_mut() {
                if b[row].is_zero() {
                    continue;
                }
                let f = b[row].clone();
                for (x, y) in b.iter_mut().zip(&piv) {
                    *x = &*x - &(&f * y);
                }
            }
            basis.push((row, piv));
        }
        let _ = field;
        basis
    }

    pub fn rank(&self, field: Field) -> usize {
        self.column_echelon(field).len()
    }

    /// Inverse by Gauss-Jordan elimination; `None` if singular.
    pub fn inverse(&self, field: Field) -> Option<ConstMatrix> {
        let n = self.nrows();
        if self.ncols() != n {
            return None;
        }
        let mut a = self.rows.clone();
        let mut inv: Vec<Vec<Scalar>> = (0..n)
            .map(|i| (0..n).map(|j| field.from_i64((i == j) as i64)).collect())
            .collect();
        for col in 0..n {
            let p = (col..n).find(|&r| !a[r][col].is_zero())?;
            a.swap(col, p);
            inv.swap(col, p);
            let f = a[col][col].inv();
            for j in 0..n {
                a[col][j] = &a[col][j] * &f;
                inv[col][j] = &inv[col][j] * &f;
            }
            for r in 0..n {
                if r == col || a[r][col].is_zero() {
                    continue;
                }
                let g = a[r][col].clone();
                for j in 0..n {
                    a[r][j] = &a[r][j] - &(&g * &a[col][j]);
                    inv[r][j] = &inv[r][j] - &(&g * &inv[col][j]);
                }
            }
        }
        Some(ConstMatrix { rows: inv })
    }
}
