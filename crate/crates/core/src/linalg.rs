//! Exact integer linear algebra: dense integer matrices, fraction-free
//! row reduction, rank, and primitive integer kernel bases.

use std::fmt;

use num_integer::Integer;

use crate::error::{HasError, Result};

/// Dense row-major integer matrix.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct IntMatrix {
    rows: usize,
    cols: usize,
    data: Vec<i64>,
}

impl IntMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        IntMatrix {
            rows,
            cols,
            data: vec![0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.set(i, i, 1);
        }
        m
    }

    pub fn from_rows(rows: &[Vec<i64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != cols) {
            return Err(HasError::Dimension("ragged rows".into()));
        }
        Ok(IntMatrix {
            rows: rows.len(),
            cols,
            data: rows.concat(),
        })
    }

    pub fn nrows(&self) -> usize {
        self.rows
    }

    pub fn ncols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, r: usize, c: usize) -> i64 {
        self.data[r * self.cols + c]
    }

    pub fn set(&mut self, r: usize, c: usize, v: i64) {
        self.data[r * self.cols + c] = v;
    }

    pub fn row(&self, r: usize) -> &[i64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn row_vecs(&self) -> Vec<Vec<i64>> {
        (0..self.rows).map(|r| self.row(r).to_vec()).collect()
    }

    pub fn transpose(&self) -> IntMatrix {
        let mut t = Self::zeros(self.cols, self.rows);
        for r in 0..self.rows {
            for c in 0..self.cols {
                t.set(c, r, self.get(r, c));
            }
        }
        t
    }

    /// Matrix product; zero entries of `self` are skipped.
    pub fn mul(&self, other: &IntMatrix) -> Result<IntMatrix> {
        if self.cols != other.rows {
            return Err(HasError::Dimension(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let mut out = Self::zeros(self.rows, other.cols);
        for r in 0..self.rows {
            let dst = &mut out.data[r * other.cols..(r + 1) * other.cols];
            for (j, &a) in self.row(r).iter().enumerate() {
                if a == 0 {
                    continue;
                }
                for (d, &b) in dst.iter_mut().zip(other.row(j)) {
                    *d += a * b;
                }
            }
        }
        Ok(out)
    }

    /// Matrix-vector product.
    pub fn mul_vec(&self, x: &[i64]) -> Vec<i64> {
        (0..self.rows)
            .map(|r| self.row(r).iter().zip(x).map(|(a, b)| a * b).sum())
            .collect()
    }

    pub fn mul_vec_f64(&self, x: &[f64]) -> Vec<f64> {
        (0..self.rows)
            .map(|r| self.row(r).iter().zip(x).map(|(&a, b)| a as f64 * b).sum())
            .collect()
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|&v| v == 0)
    }

    pub fn is_identity(&self) -> bool {
        self.rows == self.cols
            && (0..self.rows).all(|r| {
                self.row(r)
                    .iter()
                    .enumerate()
                    .all(|(c, &v)| v == i64::from(r == c))
            })
    }
}

impl fmt::Debug for IntMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list()
            .entries((0..self.rows).map(|r| self.row(r)))
            .finish()
    }
}

/// Reduced row echelon form over the integers: every pivot row is primitive,
/// and pivot columns are zero outside their pivot row.
#[derive(Clone, Debug)]
pub struct Rref {
    pub rows: Vec<Vec<i128>>,
    /// `(row, column)` of each pivot, in elimination order.
    pub pivots: Vec<(usize, usize)>,
    pub ncols: usize,
}

impl Rref {
    pub fn rank(&self) -> usize {
        self.pivots.len()
    }

    /// Columns without a pivot, in increasing index order.
    pub fn free_columns(&self) -> Vec<usize> {
        let mut is_pivot = vec![false; self.ncols];
        for &(_, c) in &self.pivots {
            is_pivot[c] = true;
        }
        (0..self.ncols).filter(|&c| !is_pivot[c]).collect()
    }
}

fn checked_lin(a: i128, x: i128, b: i128, y: i128) -> Result<i128> {
    a.checked_mul(x)
        .zip(b.checked_mul(y))
        .and_then(|(p, q)| p.checked_sub(q))
        .ok_or(HasError::Overflow)
}

fn make_primitive(row: &mut [i128]) {
    let g = row.iter().fold(0i128, |g, &v| g.gcd(&v));
    if g > 1 {
        for v in row.iter_mut() {
            *v /= g;
        }
    }
}

/// Row reduces `m`, choosing pivots column by column in `col_order`
/// (all columns in natural order when `None`).
pub fn rref(m: &IntMatrix, col_order: Option<&[usize]>) -> Result<Rref> {
    let natural: Vec<usize>;
    let order = match col_order {
        Some(o) => {
            let mut seen = vec![false; m.ncols()];
            if o.len() != m.ncols()
                || o.iter()
                    .any(|&c| c >= m.ncols() || std::mem::replace(&mut seen[c], true))
            {
                return Err(HasError::Dimension(
                    "column order is not a permutation".into(),
                ));
            }
            o
        }
        None => {
            natural = (0..m.ncols()).collect();
            &natural
        }
    };
    let mut rows: Vec<Vec<i128>> = (0..m.nrows())
        .map(|r| m.row(r).iter().map(|&v| v as i128).collect())
        .collect();
    let mut pivots = Vec::new();
    let mut next = 0;
    for &c in order {
        if next == rows.len() {
            break;
        }
        let Some(p) = (next..rows.len()).find(|&r| rows[r][c] != 0) else {
            continue;
        };
        rows.swap(next, p);
        if rows[next][c] < 0 {
            rows[next].iter_mut().for_each(|v| *v = -*v);
        }
        make_primitive(&mut rows[next]);
        let pivot_row = rows[next].clone();
        let pv = pivot_row[c];
        for (r, row) in rows.iter_mut().enumerate() {
            if r == next || row[c] == 0 {
                continue;
            }
            let f = row[c];
            for (x, &y) in row.iter_mut().zip(&pivot_row) {
                *x = checked_lin(pv, *x, f, y)?;
            }
            make_primitive(row);
        }
        pivots.push((next, c));
        next += 1;
    }
    Ok(Rref {
        rows,
        pivots,
        ncols: m.ncols(),
    })
}

pub fn rank(m: &IntMatrix) -> Result<usize> {
    Ok(rref(m, None)?.rank())
}

/// True if `v` lies in the rational row space of `m`.
pub fn in_row_space(m: &IntMatrix, v: &[i64]) -> Result<bool> {
    if v.len() != m.ncols() {
        return Err(HasError::Dimension(
            "vector length differs from column count".into(),
        ));
    }
    let mut rows = m.row_vecs();
    rows.push(v.to_vec());
    let extended = IntMatrix::from_rows(&rows)?;
    Ok(rank(&extended)? == rank(m)?)
}

/// Integer kernel basis of `m`, one primitive vector per free column (rows of
/// the result). Pivots are taken in `col_order`; basis vectors are listed by
/// increasing free-column index. Each vector with nonzero coordinate sum is
/// oriented so the sum is negative; the others so that the entry at their
/// free column is positive.
pub fn kernel_basis(m: &IntMatrix, col_order: Option<&[usize]>) -> Result<IntMatrix> {
    let red = rref(m, col_order)?;
    let n = m.ncols();
    let free = red.free_columns();
    let lcm = red
        .pivots
        .iter()
        .fold(1i128, |l, &(r, c)| l.lcm(&red.rows[r][c]));
    let mut basis = Vec::with_capacity(free.len());
    for &f in &free {
        let mut x = vec![0i128; n];
        x[f] = lcm;
        for &(r, c) in &red.pivots {
            let row = &red.rows[r];
            if row[f] != 0 {
                x[c] = -(lcm / row[c])
                    .checked_mul(row[f])
                    .ok_or(HasError::Overflow)?;
            }
        }
        make_primitive(&mut x);
        let sum: i128 = x.iter().sum();
        if sum > 0 {
            x.iter_mut().for_each(|v| *v = -*v);
        }
        let v = x
            .into_iter()
            .map(|v| i64::try_from(v).map_err(|_| HasError::Overflow))
            .collect::<Result<Vec<i64>>>()?;
        basis.push(v);
    }
    if basis.is_empty() {
        return Ok(IntMatrix::zeros(0, n));
    }
    IntMatrix::from_rows(&basis)
}

/// Row-style Hermite normal form of the integer lattice spanned by the rows
/// of `m`; zero rows are dropped. Two matrices span the same lattice iff
/// their normal forms are equal.
pub fn hermite_normal_form(m: &IntMatrix) -> Result<IntMatrix> {
    let mut rows: Vec<Vec<i128>> = m
        .row_vecs()
        .into_iter()
        .map(|r| r.into_iter().map(i128::from).collect())
        .collect();
    let ncols = m.ncols();
    let mut top = 0;
    for c in 0..ncols {
        if top == rows.len() {
            break;
        }
        // Euclid on column c among rows top..
        loop {
            let nz: Vec<usize> = (top..rows.len()).filter(|&r| rows[r][c] != 0).collect();
            if nz.is_empty() {
                break;
            }
            let &p = nz.iter().min_by_key(|&&r| rows[r][c].abs()).unwrap();
            rows.swap(top, p);
            if rows[top][c] < 0 {
                rows[top].iter_mut().for_each(|v| *v = -*v);
            }
            let pivot = rows[top].clone();
            let mut done = true;
            for row in rows.iter_mut().skip(top + 1) {
                if row[c] != 0 {
                    let q = row[c].div_euclid(pivot[c]);
                    for (x, &y) in row.iter_mut().zip(&pivot) {
                        *x = x
                            .checked_sub(q.checked_mul(y).ok_or(HasError::Overflow)?)
                            .ok_or(HasError::Overflow)?;
                    }
                    if row[c] != 0 {
                        done = false;
                    }
                }
            }
            if done {
                break;
            }
        }
        if rows[top][c] == 0 {
            continue;
        }
        let pivot = rows[top].clone();
        for row in rows.iter_mut().take(top) {
            let q = row[c].div_euclid(pivot[c]);
            if q != 0 {
                for (x, &y) in row.iter_mut().zip(&pivot) {
                    *x = x
                        .checked_sub(q.checked_mul(y).ok_or(HasError::Overflow)?)
                        .ok_or(HasError::Overflow)?;
                }
            }
        }
        top += 1;
    }
    rows.truncate(top);
    let out = rows
        .into_iter()
        .map(|r| {
            r.into_iter()
                .map(|v| i64::try_from(v).map_err(|_| HasError::Overflow))
                .collect::<Result<Vec<i64>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    if out.is_empty() {
        return Ok(IntMatrix::zeros(0, ncols));
    }
    IntMatrix::from_rows(&out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m(rows: &[&[i64]]) -> IntMatrix {
        IntMatrix::from_rows(&rows.iter().map(|r| r.to_vec()).collect::<Vec<_>>()).unwrap()
    }

    #[test]
    fn rank_and_kernel_small() {
        let a = m(&[&[1, 0, 1], &[0, 1, 1]]);
        assert_eq!(rank(&a).unwrap(), 2);
        let k = kernel_basis(&a, None).unwrap();
        assert_eq!(k.row_vecs(), vec![vec![-1, -1, 1]]);
        assert!(a.mul(&k.transpose()).unwrap().is_zero());
    }

    #[test]
    fn kernel_of_rank_deficient() {
        let a = m(&[&[1, 2, 3], &[2, 4, 6]]);
        assert_eq!(rank(&a).unwrap(), 1);
        let k = kernel_basis(&a, None).unwrap();
        assert_eq!(k.nrows(), 2);
        assert!(a.mul(&k.transpose()).unwrap().is_zero());
    }

    #[test]
    fn full_rank_square_has_empty_kernel() {
        let k = kernel_basis(&IntMatrix::identity(4), None).unwrap();
        assert_eq!(k.nrows(), 0);
        assert_eq!(k.ncols(), 4);
    }

    #[test]
    fn row_space_membership() {
        let a = m(&[&[1, 0, 1], &[0, 1, 1]]);
        assert!(!in_row_space(&a, &[1, 1, 1]).unwrap());
        assert!(in_row_space(&a, &[1, 1, 2]).unwrap());
    }

    #[test]
    fn column_order_changes_free_columns() {
        let a = m(&[&[1, 1, 1]]);
        let k = kernel_basis(&a, Some(&[2, 0, 1])).unwrap();
        // column 2 is the pivot, 0 and 1 are free
        assert_eq!(k.row_vecs(), vec![vec![1, 0, -1], vec![0, 1, -1]]);
    }

    #[test]
    fn hnf_identifies_lattices() {
        let a = m(&[&[1, 1, 0], &[0, 1, 1]]);
        let b = m(&[&[1, 2, 1], &[1, 1, 0]]);
        let c = m(&[&[2, 2, 0], &[0, 1, 1]]);
        assert_eq!(
            hermite_normal_form(&a).unwrap(),
            hermite_normal_form(&b).unwrap()
        );
        assert_ne!(
            hermite_normal_form(&a).unwrap(),
            hermite_normal_form(&c).unwrap()
        );
    }

    #[test]
    fn product_and_transpose() {
        let a = m(&[&[1, 2], &[3, 4]]);
        assert_eq!(a.mul(&IntMatrix::identity(2)).unwrap(), a);
        assert_eq!(a.transpose().row_vecs(), vec![vec![1, 3], vec![2, 4]]);
        assert_eq!(a.mul_vec(&[1, 1]), vec![3, 7]);
        assert!(a.mul(&m(&[&[1, 2, 3]])).is_err());
    }
}
