//! Dense linear algebra over GF(q).

use std::fmt;

use serde::{Serialize, Serializer};

use crate::error::{Error, Result};
use crate::field::{FieldElement, PrimeField};

/// Row-major dense matrix over a prime field.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    field: PrimeField,
    data: Vec<u64>,
}

impl Matrix {
    pub fn zeros(field: PrimeField, rows: usize, cols: usize) -> Self {
        Matrix { rows, cols, field, data: vec![0; rows * cols] }
    }

    pub fn identity(field: PrimeField, n: usize) -> Self {
        let mut m = Self::zeros(field, n, n);
        for i in 0..n {
            m.data[i * n + i] = 1;
        }
        m
    }

    /// Build from raw integers, reduced mod q.
    pub fn from_rows(field: PrimeField, rows: &[Vec<u64>]) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, |x| x.len());
        if rows.iter().any(|x| x.len() != c) {
            return Err(Error::Dimension("ragged rows".into()));
        }
        let data = rows.iter().flatten().map(|&v| v % field.modulus()).collect();
        Ok(Matrix { rows: r, cols: c, field, data })
    }

    /// Stack coefficient vectors as rows.
    pub fn from_vectors(field: PrimeField, vs: &[&CoeffVector]) -> Result<Self> {
        let c = vs.first().map_or(0, |v| v.len());
        let mut data = Vec::with_capacity(vs.len() * c);
        for v in vs {
            if v.len() != c {
                return Err(Error::Dimension("vectors of unequal length".into()));
            }
            if v.field != field {
                return Err(Error::FieldMismatch(v.field.modulus(), field.modulus()));
            }
            data.extend_from_slice(&v.coeffs);
        }
        Ok(Matrix { rows: vs.len(), cols: c, field, data })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn field(&self) -> PrimeField {
        self.field
    }

    pub fn get(&self, r: usize, c: usize) -> FieldElement {
        self.field.elem(self.data[r * self.cols + c])
    }

    pub fn set(&mut self, r: usize, c: usize, v: FieldElement) {
        assert_eq!(v.field(), self.field, "field mismatch");
        self.data[r * self.cols + c] = v.value();
    }

    pub(crate) fn raw(&self, r: usize, c: usize) -> u64 {
        self.data[r * self.cols + c]
    }

    pub fn row(&self, r: usize) -> CoeffVector {
        CoeffVector {
            field: self.field,
            coeffs: self.data[r * self.cols..(r + 1) * self.cols].to_vec(),
        }
    }

    pub fn column(&self, c: usize) -> CoeffVector {
        CoeffVector { field: self.field, coeffs: (0..self.rows).map(|r| self.raw(r, c)).collect() }
    }

    pub fn to_rows(&self) -> Vec<Vec<u64>> {
        self.data.chunks(self.cols.max(1)).map(|c| c.to_vec()).take(self.rows).collect()
    }

    pub fn transpose(&self) -> Matrix {
        let mut t = Matrix::zeros(self.field, self.cols, self.rows);
        for r in 0..self.rows {
            for c in 0..self.cols {
                t.data[c * self.rows + r] = self.raw(r, c);
            }
        }
        t
    }

    pub fn select_columns(&self, cols: &[usize]) -> Matrix {
        let mut m = Matrix::zeros(self.field, self.rows, cols.len());
        for r in 0..self.rows {
            for (j, &c) in cols.iter().enumerate() {
                m.data[r * cols.len() + j] = self.raw(r, c);
            }
        }
        m
    }

    pub fn mul(&self, o: &Matrix) -> Result<Matrix> {
        if self.field != o.field {
            return Err(Error::FieldMismatch(self.field.modulus(), o.field.modulus()));
        }
        if self.cols != o.rows {
            return Err(Error::Dimension(format!(
                "{}x{} times {}x{}",
                self.rows, self.cols, o.rows, o.cols
            )));
        }
        let f = self.field;
        let mut p = Matrix::zeros(f, self.rows, o.cols);
        for i in 0..self.rows {
            for l in 0..self.cols {
                let a = self.raw(i, l);
                if a == 0 {
                    continue;
                }
                for j in 0..o.cols {
                    let idx = i * o.cols + j;
                    p.data[idx] = f.add_raw(p.data[idx], f.mul_raw(a, o.raw(l, j)));
                }
            }
        }
        Ok(p)
    }

    pub fn mul_vec(&self, x: &[FieldElement]) -> Result<Vec<FieldElement>> {
        if x.len() != self.cols {
            return Err(Error::Dimension(format!("{} columns, vector of {}", self.cols, x.len())));
        }
        let f = self.field;
        let mut out = Vec::with_capacity(self.rows);
        for r in 0..self.rows {
            let mut acc = 0;
            for (c, v) in x.iter().enumerate() {
                if v.field() != f {
                    return Err(Error::FieldMismatch(v.field().modulus(), f.modulus()));
                }
                acc = f.add_raw(acc, f.mul_raw(self.raw(r, c), v.value()));
            }
            out.push(f.elem(acc));
        }
        Ok(out)
    }

    /// Reduced row echelon form in place; returns the pivot columns.
    fn rref(&mut self) -> Vec<usize> {
        let f = self.field;
        let mut pivots = Vec::new();
        let mut r = 0;
        for c in 0..self.cols {
            if r == self.rows {
                break;
            }
            let Some(p) = (r..self.rows).find(|&i| self.raw(i, c) != 0) else {
                continue;
            };
            if p != r {
                for j in 0..self.cols {
                    self.data.swap(p * self.cols + j, r * self.cols + j);
                }
            }
            let inv = f.inv_raw(self.raw(r, c)).expect("pivot is nonzero");
            for j in 0..self.cols {
                let idx = r * self.cols + j;
                self.data[idx] = f.mul_raw(self.data[idx], inv);
            }
            for i in 0..self.rows {
                if i == r {
                    continue;
                }
                let factor = self.raw(i, c);
                if factor == 0 {
                    continue;
                }
                for j in 0..self.cols {
                    let sub = f.mul_raw(factor, self.raw(r, j));
                    let idx = i * self.cols + j;
                    self.data[idx] = f.sub_raw(self.data[idx], sub);
                }
            }
            pivots.push(c);
            r += 1;
        }
        pivots
    }

    pub fn rank(&self) -> usize {
        self.clone().rref().len()
    }

    pub fn invert(&self) -> Result<Matrix> {
        if self.rows != self.cols {
            return Err(Error::Dimension(format!("cannot invert {}x{}", self.rows, self.cols)));
        }
        let n = self.rows;
        if n == 0 {
            return Ok(self.clone());
        }
        let mut aug = Matrix::zeros(self.field, n, 2 * n);
        for r in 0..n {
            for c in 0..n {
                aug.data[r * 2 * n + c] = self.raw(r, c);
            }
            aug.data[r * 2 * n + n + r] = 1;
        }
        let pivots = aug.rref();
        if pivots.len() < n || pivots[n - 1] >= n {
            return Err(Error::Singular);
        }
        let mut inv = Matrix::zeros(self.field, n, n);
        for r in 0..n {
            for c in 0..n {
                inv.data[r * n + c] = aug.raw(r, n + c);
            }
        }
        Ok(inv)
    }

    /// Solve `self * x = b` for square nonsingular `self`.
    pub fn solve(&self, b: &[FieldElement]) -> Result<Vec<FieldElement>> {
        if self.rows != self.cols || b.len() != self.rows {
            return Err(Error::Dimension(format!(
                "{}x{} system with rhs of {}",
                self.rows,
                self.cols,
                b.len()
            )));
        }
        match self.solve_any(b)? {
            Some(x) if self.rank() == self.rows => Ok(x),
            _ => Err(Error::Singular),
        }
    }

    /// Some solution of `self * x = b` for any shape, or `None` if inconsistent.
    pub fn solve_any(&self, b: &[FieldElement]) -> Result<Option<Vec<FieldElement>>> {
        if b.len() != self.rows {
            return Err(Error::Dimension(format!("{} rows, rhs of {}", self.rows, b.len())));
        }
        let n = self.cols;
        let mut aug = Matrix::zeros(self.field, self.rows, n + 1);
        for r in 0..self.rows {
            for c in 0..n {
                aug.data[r * (n + 1) + c] = self.raw(r, c);
            }
            if b[r].field() != self.field {
                return Err(Error::FieldMismatch(b[r].field().modulus(), self.field.modulus()));
            }
            aug.data[r * (n + 1) + n] = b[r].value();
        }
        let pivots = aug.rref();
        if pivots.last() == Some(&n) {
            return Ok(None);
        }
        let mut x = vec![self.field.zero(); n];
        for (r, &c) in pivots.iter().enumerate() {
            x[c] = aug.get(r, n);
        }
        Ok(Some(x))
    }
}

impl fmt::Display for Matrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for r in 0..self.rows {
            let row: Vec<String> = (0..self.cols).map(|c| self.raw(r, c).to_string()).collect();
            writeln!(f, "[{}]", row.join(" "))?;
        }
        Ok(())
    }
}

/// First singular square submatrix, as (row set, column set), scanning by
/// size. `None` means every minor is nonzero.
///
/// Minors are built bottom-up: a j x j minor is the Laplace expansion along
/// its last row of (j-1) x (j-1) minors from the previous level, so the whole
/// scan costs about sum_j C(r,j) C(c,j) j multiplications.
pub fn singular_minor(m: &Matrix) -> Option<(Vec<usize>, Vec<usize>)> {
    assert!(m.rows <= 24 && m.cols <= 24, "minor scan supports up to 24 rows and columns");
    let f = m.field;
    let bits = |mask: u32| -> Vec<usize> { (0..32).filter(|i| mask >> i & 1 == 1).collect() };
    // masks of each popcount, and each mask's position within its level
    let levels = |n: usize| -> (Vec<Vec<u32>>, Vec<usize>) {
        let mut by = vec![Vec::new(); n + 1];
        let mut pos = vec![0; 1 << n];
        for mask in 0u32..(1 << n) {
            let j = mask.count_ones() as usize;
            pos[mask as usize] = by[j].len();
            by[j].push(mask);
        }
        (by, pos)
    };
    let (rl, rpos) = levels(m.rows);
    let (cl, cpos) = levels(m.cols);
    let mut prev: Vec<u64> = vec![1];
    for j in 1..=m.rows.min(m.cols) {
        let (rs, cs, pcs) = (&rl[j], &cl[j], cl[j - 1].len());
        let mut cur = vec![0u64; rs.len() * cs.len()];
        for (ri, &r) in rs.iter().enumerate() {
            let last = 31 - r.leading_zeros();
            let base = rpos[(r & !(1 << last)) as usize] * pcs;
            for (ci, &c) in cs.iter().enumerate() {
                let mut det = 0;
                let (mut rest, mut p) = (c, 0);
                while rest != 0 {
                    let col = rest.trailing_zeros();
                    rest &= rest - 1;
                    let term = f.mul_raw(m.raw(last as usize, col as usize), prev[base + cpos[(c & !(1 << col)) as usize]]);
                    det = if (j - 1 + p) % 2 == 0 { f.add_raw(det, term) } else { f.sub_raw(det, term) };
                    p += 1;
                }
                if det == 0 {
                    return Some((bits(r), bits(c)));
                }
                cur[ri * cs.len() + ci] = det;
            }
        }
        prev = cur;
    }
    None
}

/// `rows x evals.len()` Vandermonde matrix with entry (r, c) = evals[c]^r.
pub fn vandermonde(evals: &[FieldElement], rows: usize) -> Result<Matrix> {
    if rows == 0 {
        return Err(Error::Dimension("vandermonde needs at least one row".into()));
    }
    let Some(first) = evals.first() else {
        return Err(Error::Dimension("no evaluation points".into()));
    };
    let field = first.field();
    for (i, a) in evals.iter().enumerate() {
        if a.field() != field {
            return Err(Error::FieldMismatch(a.field().modulus(), field.modulus()));
        }
        if evals[..i].contains(a) {
            return Err(Error::DuplicateEval(a.value()));
        }
    }
    let n = evals.len();
    let mut m = Matrix::zeros(field, rows, n);
    for (c, a) in evals.iter().enumerate() {
        let mut p = 1 % field.modulus();
        for r in 0..rows {
            m.data[r * n + c] = p;
            p = field.mul_raw(p, a.value());
        }
    }
    Ok(m)
}

/// A fragment written as a linear combination of the M message fragments.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct CoeffVector {
    field: PrimeField,
    coeffs: Vec<u64>,
}

impl CoeffVector {
    pub fn zero(field: PrimeField, m: usize) -> Self {
        CoeffVector { field, coeffs: vec![0; m] }
    }

    /// The message fragment `i` itself (0-based).
    pub fn unit(field: PrimeField, m: usize, i: usize) -> Self {
        let mut v = Self::zero(field, m);
        v.coeffs[i] = 1;
        v
    }

    pub fn from_values(field: PrimeField, vals: &[u64]) -> Self {
        CoeffVector { field, coeffs: vals.iter().map(|v| v % field.modulus()).collect() }
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn field(&self) -> PrimeField {
        self.field
    }

    pub fn get(&self, i: usize) -> FieldElement {
        self.field.elem(self.coeffs[i])
    }

    pub fn values(&self) -> &[u64] {
        &self.coeffs
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|&c| c == 0)
    }

    fn check(&self, o: &CoeffVector) {
        assert_eq!(self.field, o.field, "field mismatch");
        assert_eq!(self.len(), o.len(), "coefficient vectors of different length");
    }

    pub fn add(&self, o: &CoeffVector) -> CoeffVector {
        self.check(o);
        let f = self.field;
        let coeffs = self.coeffs.iter().zip(&o.coeffs).map(|(&a, &b)| f.add_raw(a, b)).collect();
        CoeffVector { field: f, coeffs }
    }

    pub fn sub(&self, o: &CoeffVector) -> CoeffVector {
        self.check(o);
        let f = self.field;
        let coeffs = self.coeffs.iter().zip(&o.coeffs).map(|(&a, &b)| f.sub_raw(a, b)).collect();
        CoeffVector { field: f, coeffs }
    }

    pub fn scale(&self, s: FieldElement) -> CoeffVector {
        assert_eq!(s.field(), self.field, "field mismatch");
        let f = self.field;
        CoeffVector { field: f, coeffs: self.coeffs.iter().map(|&a| f.mul_raw(a, s.value())).collect() }
    }

    /// self + s * o
    pub fn axpy(&self, s: FieldElement, o: &CoeffVector) -> CoeffVector {
        self.add(&o.scale(s))
    }

    /// Inner product with a concrete message.
    pub fn eval(&self, message: &[FieldElement]) -> FieldElement {
        assert_eq!(message.len(), self.len());
        let f = self.field;
        let v = self
            .coeffs
            .iter()
            .zip(message)
            .fold(0, |acc, (&c, m)| f.add_raw(acc, f.mul_raw(c, m.value())));
        f.elem(v)
    }

    /// Sum of `coeff_i * vs_i`.
    pub fn combination(field: PrimeField, m: usize, terms: &[(FieldElement, &CoeffVector)]) -> CoeffVector {
        terms.iter().fold(CoeffVector::zero(field, m), |acc, (c, v)| acc.axpy(*c, v))
    }
}

impl Serialize for CoeffVector {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.coeffs.serialize(s)
    }
}

/// Coefficients expressing `target` as a combination of `basis`, if it lies in their span.
pub fn express_in_span(basis: &[&CoeffVector], target: &CoeffVector) -> Option<Vec<FieldElement>> {
    let f = target.field();
    if basis.is_empty() {
        return target.is_zero().then(Vec::new);
    }
    // columns are the basis vectors
    let a = Matrix::from_vectors(f, basis).ok()?.transpose();
    let b: Vec<FieldElement> = (0..target.len()).map(|i| target.get(i)).collect();
    a.solve_any(&b).ok().flatten()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn gf(q: u64) -> PrimeField {
        PrimeField::new(q).unwrap()
    }

    fn elems(f: PrimeField, v: &[u64]) -> Vec<FieldElement> {
        v.iter().map(|&x| f.elem(x)).collect()
    }

    /// Determinant by cofactor expansion; an oracle independent of elimination.
    fn det_cofactor(m: &[Vec<u64>], q: u64) -> u64 {
        let n = m.len();
        if n == 1 {
            return m[0][0] % q;
        }
        let mut acc: i128 = 0;
        for c in 0..n {
            let minor: Vec<Vec<u64>> = m[1..]
                .iter()
                .map(|row| row.iter().enumerate().filter(|&(j, _)| j != c).map(|(_, &v)| v).collect())
                .collect();
            let term = (m[0][c] as i128 * det_cofactor(&minor, q) as i128) % q as i128;
            acc += if c % 2 == 0 { term } else { -term };
        }
        acc.rem_euclid(q as i128) as u64
    }

    fn subsets(n: usize, k: usize) -> Vec<Vec<usize>> {
        let mut out = Vec::new();
        let mut cur = Vec::new();
        fn go(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
            if cur.len() == k {
                out.push(cur.clone());
                return;
            }
            for i in start..n {
                cur.push(i);
                go(i + 1, n, k, cur, out);
                cur.pop();
            }
        }
        go(0, n, k, &mut cur, &mut out);
        out
    }

    #[test]
    fn vandermonde_small() {
        let f = gf(7);
        let v = vandermonde(&elems(f, &[1, 2, 3]), 3).unwrap();
        assert_eq!(v.to_rows(), vec![vec![1, 1, 1], vec![1, 2, 3], vec![1, 4, 2]]);
        let one = vandermonde(&elems(f, &[4, 5, 6, 0]), 1).unwrap();
        assert_eq!(one.to_rows(), vec![vec![1, 1, 1, 1]]);
        assert_eq!(vandermonde(&elems(f, &[1, 2, 1]), 2), Err(Error::DuplicateEval(1)));
    }

    #[test]
    fn vandermonde_submatrices_gf11() {
        let f = gf(11);
        let v = vandermonde(&elems(f, &[1, 2, 3, 4, 5]), 3).unwrap();
        let rows = v.to_rows();
        for s in subsets(5, 3) {
            let sub: Vec<Vec<u64>> = rows.iter().map(|r| s.iter().map(|&c| r[c]).collect()).collect();
            assert_ne!(det_cofactor(&sub, 11), 0, "columns {s:?}");
        }
        assert_eq!(v.rank(), 3);
    }

    #[test]
    fn invert_examples() {
        let f = gf(7);
        let id = Matrix::identity(f, 4);
        assert_eq!(id.invert().unwrap(), id);
        let a = Matrix::from_rows(f, &[vec![1, 1], vec![1, 2]]).unwrap();
        let inv = a.invert().unwrap();
        assert_eq!(inv.to_rows(), vec![vec![2, 6], vec![6, 1]]);
        assert_eq!(a.mul(&inv).unwrap(), Matrix::identity(f, 2));
        let s = Matrix::from_rows(f, &[vec![1, 1], vec![2, 2]]).unwrap();
        assert_eq!(s.invert(), Err(Error::Singular));
        let rect = Matrix::zeros(f, 2, 3);
        assert!(matches!(rect.invert(), Err(Error::Dimension(_))));
    }

    #[test]
    fn rank_examples() {
        let f = gf(13);
        assert_eq!(Matrix::identity(f, 5).rank(), 5);
        assert_eq!(Matrix::zeros(f, 3, 4).rank(), 0);
        let v = vandermonde(&elems(f, &[1, 2, 3, 4, 5, 6, 7]), 4).unwrap();
        assert_eq!(v.rank(), 4);
        assert_eq!(v.transpose().rank(), 4);
    }

    #[test]
    fn solve_examples() {
        let f = gf(11);
        let b = elems(f, &[3, 1, 4]);
        assert_eq!(Matrix::identity(f, 3).solve(&b).unwrap(), b);
        assert!(matches!(Matrix::identity(f, 3).solve(&b[..2]), Err(Error::Dimension(_))));
        let s = Matrix::from_rows(f, &[vec![1, 2], vec![2, 4]]).unwrap();
        assert_eq!(s.solve(&elems(f, &[1, 2])), Err(Error::Singular));
    }

    #[test]
    fn solve_tandem_repair_system() {
        // n=5, k=3 tandem code over GF(7), failed node 3 with helpers 2, 1 (left) and 4 (right)
        let f = gf(7);
        let g = vandermonde(&elems(f, &[1, 2, 3, 4, 5]), 3).unwrap();
        let a = g.select_columns(&[1, 0, 3]);
        let v3: Vec<FieldElement> = (0..3).map(|r| g.get(r, 2)).collect();
        let xi = a.solve(&v3).unwrap();
        assert_eq!(a.mul_vec(&xi).unwrap(), v3);
    }

    #[test]
    fn span_membership() {
        let f = gf(5);
        let a = CoeffVector::from_values(f, &[1, 0, 2]);
        let b = CoeffVector::from_values(f, &[0, 1, 1]);
        let t = a.scale(f.elem(3)).add(&b.scale(f.elem(4)));
        let c = express_in_span(&[&a, &b], &t).unwrap();
        assert_eq!(CoeffVector::combination(f, 3, &[(c[0], &a), (c[1], &b)]), t);
        assert!(express_in_span(&[&a, &b], &CoeffVector::unit(f, 3, 0)).is_none());
        assert!(express_in_span(&[], &CoeffVector::zero(f, 3)).is_some());
    }

    fn square(q: u64, n: usize) -> impl Strategy<Value = Matrix> {
        prop::collection::vec(0..q, n * n).prop_map(move |d| {
            let rows: Vec<Vec<u64>> = d.chunks(n).map(|c| c.to_vec()).collect();
            Matrix::from_rows(gf(q), &rows).unwrap()
        })
    }

    proptest! {
        #[test]
        fn invert_twice_is_identity(m in (1usize..6).prop_flat_map(|n| square(13, n))) {
            if let Ok(inv) = m.invert() {
                prop_assert_eq!(inv.invert().unwrap(), m.clone());
                prop_assert_eq!(m.mul(&inv).unwrap(), Matrix::identity(m.field(), m.rows()));
            } else {
                prop_assert!(m.rank() < m.rows());
            }
        }

        #[test]
        fn solve_substitutes_back(
            (m, b) in (1usize..6).prop_flat_map(|n| (square(101, n), prop::collection::vec(0u64..101, n)))
        ) {
            let f = m.field();
            let b: Vec<FieldElement> = b.into_iter().map(|v| f.elem(v)).collect();
            match m.solve(&b) {
                Ok(x) => prop_assert_eq!(m.mul_vec(&x).unwrap(), b),
                Err(e) => {
                    prop_assert_eq!(e, Error::Singular);
                    prop_assert!(m.rank() < m.rows());
                }
            }
        }

        #[test]
        fn vandermonde_every_square_minor_invertible(
            q in prop::sample::select(vec![7u64, 11, 13]),
            seed in any::<u64>(),
            k in 1usize..4,
        ) {
            // distinct nonzero points, at most q-1 of them and at most 8
            let f = gf(q);
            let mut pts: Vec<u64> = (1..q).collect();
            let mut s = seed;
            for i in (1..pts.len()).rev() {
                s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                pts.swap(i, (s >> 33) as usize % (i + 1));
            }
            pts.truncate(8.min(q as usize - 1));
            let n = pts.len();
            let v = vandermonde(&elems(f, &pts), k).unwrap();
            for cols in subsets(n, k) {
                let sub = v.select_columns(&cols);
                prop_assert!(sub.invert().is_ok());
                prop_assert_ne!(det_cofactor(&sub.to_rows(), q), 0);
            }
        }
    }
}
