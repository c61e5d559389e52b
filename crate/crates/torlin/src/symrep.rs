//! Symmetric-power representations of `SL2(Z)`.
//!
//! `sym_power(g, n)` is the n-dimensional representation on homogeneous
//! polynomials of degree n-1 in X, Y: a matrix g = [[a,b],[c,d]] acts by
//! substitution, `(g . P)(X, Y) = P(aX + cY, bX + dY)`, in the monomial
//! basis `X^{n-1}, X^{n-2} Y, ..., Y^{n-1}`. Vectors are columns, so the
//! case n = 2 returns g itself. All arithmetic is exact.

use crate::serial;
use crate::{Error, Result};
use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};
use std::fmt;

/// Element of `SL2(Z)`; the constructor rejects matrices with det != 1.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Mat2 {
    #[serde(with = "serial::bigint")]
    a: BigInt,
    #[serde(with = "serial::bigint")]
    b: BigInt,
    #[serde(with = "serial::bigint")]
    c: BigInt,
    #[serde(with = "serial::bigint")]
    d: BigInt,
}

impl Mat2 {
    pub fn new(a: BigInt, b: BigInt, c: BigInt, d: BigInt) -> Result<Self> {
        let det = &a * &d - &b * &c;
        if !det.is_one() {
            return Err(Error::NotUnimodular(det.to_string()));
        }
        Ok(Mat2 { a, b, c, d })
    }

    pub fn from_i64(a: i64, b: i64, c: i64, d: i64) -> Result<Self> {
        Mat2::new(BigInt::from(a), BigInt::from(b), BigInt::from(c), BigInt::from(d))
    }

    pub fn identity() -> Self {
        Mat2::from_i64(1, 0, 0, 1).unwrap()
    }

    pub fn minus_identity() -> Self {
        Mat2::from_i64(-1, 0, 0, -1).unwrap()
    }

    /// Order-4 generator S = [[0,-1],[1,0]].
    pub fn gen_s() -> Self {
        Mat2::from_i64(0, -1, 1, 0).unwrap()
    }

    /// Parabolic generator T = [[1,1],[0,1]].
    pub fn gen_t() -> Self {
        Mat2::from_i64(1, 1, 0, 1).unwrap()
    }

    pub fn a(&self) -> &BigInt {
        &self.a
    }
    pub fn b(&self) -> &BigInt {
        &self.b
    }
    pub fn c(&self) -> &BigInt {
        &self.c
    }
    pub fn d(&self) -> &BigInt {
        &self.d
    }

    pub fn trace(&self) -> BigInt {
        &self.a + &self.d
    }

    pub fn mul(&self, rhs: &Mat2) -> Mat2 {
        Mat2 {
            a: &self.a * &rhs.a + &self.b * &rhs.c,
            b: &self.a * &rhs.b + &self.b * &rhs.d,
            c: &self.c * &rhs.a + &self.d * &rhs.c,
            d: &self.c * &rhs.b + &self.d * &rhs.d,
        }
    }

    /// Exact inverse: det = 1 makes the adjugate the inverse.
    pub fn inverse(&self) -> Mat2 {
        Mat2 {
            a: self.d.clone(),
            b: -self.b.clone(),
            c: -self.c.clone(),
            d: self.a.clone(),
        }
    }

    pub fn transpose(&self) -> Mat2 {
        Mat2 {
            a: self.a.clone(),
            b: self.c.clone(),
            c: self.b.clone(),
            d: self.d.clone(),
        }
    }

    pub fn neg(&self) -> Mat2 {
        Mat2 {
            a: -self.a.clone(),
            b: -self.b.clone(),
            c: -self.c.clone(),
            d: -self.d.clone(),
        }
    }

    pub fn is_identity(&self) -> bool {
        self.a.is_one() && self.b.is_zero() && self.c.is_zero() && self.d.is_one()
    }

    pub fn entries_row_major(&self) -> [BigInt; 4] {
        [self.a.clone(), self.b.clone(), self.c.clone(), self.d.clone()]
    }
}

impl fmt::Display for Mat2 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[[{},{}],[{},{}]]", self.a, self.b, self.c, self.d)
    }
}

/// Generators of the word alphabet: S, T and their inverses.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Gen {
    S,
    SInv,
    T,
    TInv,
}

impl Gen {
    pub fn matrix(self) -> Mat2 {
        match self {
            Gen::S => Mat2::gen_s(),
            Gen::SInv => Mat2::gen_s().inverse(),
            Gen::T => Mat2::gen_t(),
            Gen::TInv => Mat2::gen_t().inverse(),
        }
    }
}

/// Word in the generators, evaluated left to right.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct GroupWord(pub Vec<Gen>);

impl GroupWord {
    pub fn concat(&self, rhs: &GroupWord) -> GroupWord {
        let mut letters = self.0.clone();
        letters.extend_from_slice(&rhs.0);
        GroupWord(letters)
    }
}

/// Multiplies out a generator word.
pub fn eval_word(word: &GroupWord) -> Mat2 {
    word.0.iter().fold(Mat2::identity(), |acc, g| acc.mul(&g.matrix()))
}

/// Homogeneous-substitution matrix over any commutative coefficient ring.
///
/// Column i holds the coefficients of `(aX + cY)^{n-1-i} (bX + dY)^i` in the
/// monomial basis indexed by the power of Y. Row-major output.
pub(crate) fn sym_power_entries<T>(a: &T, b: &T, c: &T, d: &T, n: usize) -> Vec<T>
where
    T: Clone + Zero + One,
{
    // Multiply a coefficient vector (index = Y-power) by pX + qY.
    fn mul_linear<T: Clone + Zero + One>(poly: &[T], p: &T, q: &T) -> Vec<T> {
        let mut out = vec![T::zero(); poly.len() + 1];
        for (j, coeff) in poly.iter().enumerate() {
            out[j] = out[j].clone() + p.clone() * coeff.clone();
            out[j + 1] = out[j + 1].clone() + q.clone() * coeff.clone();
        }
        out
    }

    let mut entries = vec![T::zero(); n * n];
    for i in 0..n {
        let mut col = vec![T::one()];
        for _ in 0..(n - 1 - i) {
            col = mul_linear(&col, a, c);
        }
        for _ in 0..i {
            col = mul_linear(&col, b, d);
        }
        debug_assert_eq!(col.len(), n);
        for (j, v) in col.into_iter().enumerate() {
            entries[j * n + i] = v;
        }
    }
    entries
}

/// Exact n x n integer matrix produced by the symmetric-power embedding, or
/// by matrix algebra on such images. Keeps its 2x2 source when known so
/// inverses stay exact and cheap.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RepMatrix {
    dim: usize,
    #[serde(with = "serial::bigint_vec")]
    entries: Vec<BigInt>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    source: Option<Mat2>,
}

impl RepMatrix {
    /// General constructor; validates unimodularity by exact determinant.
    pub fn new(dim: usize, entries: Vec<BigInt>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::ZeroDimension);
        }
        if entries.len() != dim * dim {
            return Err(Error::DimensionMismatch { expected: dim * dim, got: entries.len() });
        }
        let m = RepMatrix { dim, entries, source: None };
        let det = m.det();
        if !det.is_one() {
            return Err(Error::NotUnimodular(det.to_string()));
        }
        Ok(m)
    }

    pub(crate) fn from_raw(dim: usize, entries: Vec<BigInt>, source: Option<Mat2>) -> Self {
        debug_assert_eq!(entries.len(), dim * dim);
        RepMatrix { dim, entries, source }
    }

    pub fn from_rows_i64(rows: &[&[i64]]) -> Result<Self> {
        let dim = rows.len();
        let mut entries = Vec::with_capacity(dim * dim);
        for row in rows {
            if row.len() != dim {
                return Err(Error::DimensionMismatch { expected: dim, got: row.len() });
            }
            entries.extend(row.iter().map(|&x| BigInt::from(x)));
        }
        RepMatrix::new(dim, entries)
    }

    pub fn identity(dim: usize) -> Self {
        let mut entries = vec![BigInt::zero(); dim * dim];
        for i in 0..dim {
            entries[i * dim + i] = BigInt::one();
        }
        RepMatrix { dim, entries, source: None }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, row: usize, col: usize) -> &BigInt {
        &self.entries[row * self.dim + col]
    }

    pub fn entries(&self) -> &[BigInt] {
        &self.entries
    }

    pub fn source(&self) -> Option<&Mat2> {
        self.source.as_ref()
    }

    pub fn trace(&self) -> BigInt {
        (0..self.dim).map(|i| self.get(i, i).clone()).sum()
    }

    pub fn is_identity(&self) -> bool {
        *self == RepMatrix::identity(self.dim)
    }

    pub fn mul(&self, rhs: &RepMatrix) -> RepMatrix {
        assert_eq!(self.dim, rhs.dim, "matrix dimensions must agree");
        let n = self.dim;
        let mut entries = vec![BigInt::zero(); n * n];
        for i in 0..n {
            for k in 0..n {
                let aik = self.get(i, k);
                if aik.is_zero() {
                    continue;
                }
                for j in 0..n {
                    let t = aik * rhs.get(k, j);
                    entries[i * n + j] = &entries[i * n + j] + t;
                }
            }
        }
        RepMatrix { dim: n, entries, source: None }
    }

    pub fn transpose(&self) -> RepMatrix {
        let n = self.dim;
        let mut entries = vec![BigInt::zero(); n * n];
        for i in 0..n {
            for j in 0..n {
                entries[j * n + i] = self.get(i, j).clone();
            }
        }
        RepMatrix { dim: n, entries, source: None }
    }

    pub fn scale(&self, k: &BigInt) -> RepMatrix {
        RepMatrix {
            dim: self.dim,
            entries: self.entries.iter().map(|e| e * k).collect(),
            source: None,
        }
    }

    pub fn sub(&self, rhs: &RepMatrix) -> RepMatrix {
        assert_eq!(self.dim, rhs.dim, "matrix dimensions must agree");
        let entries = self
            .entries
            .iter()
            .zip(&rhs.entries)
            .map(|(x, y)| x - y)
            .collect();
        RepMatrix { dim: self.dim, entries, source: None }
    }

    pub fn apply(&self, v: &[BigInt]) -> Result<Vec<BigInt>> {
        if v.len() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, got: v.len() });
        }
        let mut out = vec![BigInt::zero(); self.dim];
        for i in 0..self.dim {
            for j in 0..self.dim {
                let t = self.get(i, j) * &v[j];
                out[i] = &out[i] + t;
            }
        }
        Ok(out)
    }

    /// Exact determinant by fraction-free (Bareiss) elimination.
    pub fn det(&self) -> BigInt {
        let n = self.dim;
        let mut a = self.entries.clone();
        let mut sign = BigInt::one();
        let mut prev = BigInt::one();
        for k in 0..n.saturating_sub(1) {
            if a[k * n + k].is_zero() {
                let Some(p) = (k + 1..n).find(|&i| !a[i * n + k].is_zero()) else {
                    return BigInt::zero();
                };
                for j in 0..n {
                    a.swap(k * n + j, p * n + j);
                }
                sign = -sign;
            }
            for i in k + 1..n {
                for j in k + 1..n {
                    let num = &a[i * n + j] * &a[k * n + k] - &a[i * n + k] * &a[k * n + j];
                    let (q, r) = num_integer::Integer::div_rem(&num, &prev);
                    debug_assert!(r.is_zero(), "Bareiss division must be exact");
                    a[i * n + j] = q;
                }
                a[i * n + k] = BigInt::zero();
            }
            prev = a[k * n + k].clone();
        }
        sign * a[(n - 1) * n + (n - 1)].clone()
    }

    /// Exact inverse. Uses the 2x2 source when available, otherwise exact
    /// rational elimination; errors unless the inverse is integral.
    pub fn try_inverse(&self) -> Result<RepMatrix> {
        if let Some(g) = &self.source {
            return sym_power(&g.inverse(), self.dim);
        }
        let entries = crate::ratmat::inverse_integer(self.dim, &self.entries)?;
        Ok(RepMatrix { dim: self.dim, entries, source: None })
    }
}

impl fmt::Display for RepMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in 0..self.dim {
            if i > 0 {
                writeln!(f)?;
            }
            let row: Vec<String> = (0..self.dim).map(|j| self.get(i, j).to_string()).collect();
            write!(f, "[{}]", row.join(", "))?;
        }
        Ok(())
    }
}

/// n-dimensional symmetric-power image of g. Requires n >= 1; n = 1 is the
/// trivial representation and n = 2 returns g itself.
pub fn sym_power(g: &Mat2, n: usize) -> Result<RepMatrix> {
    if n == 0 {
        return Err(Error::ZeroDimension);
    }
    let entries = sym_power_entries(&g.a, &g.b, &g.c, &g.d, n);
    Ok(RepMatrix::from_raw(n, entries, Some(g.clone())))
}

/// Characteristic polynomial, monic, coefficients in descending degree
/// order: `coeffs[0] = 1` is the x^n coefficient.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CharPoly {
    #[serde(with = "serial::bigint_vec")]
    pub coeffs: Vec<BigInt>,
}

impl CharPoly {
    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    /// Coefficients in ascending order (index = degree), for divisibility
    /// tests against other polynomial code.
    pub fn ascending(&self) -> Vec<BigInt> {
        let mut c = self.coeffs.clone();
        c.reverse();
        c
    }

    pub fn constant_term(&self) -> &BigInt {
        self.coeffs.last().expect("charpoly is never empty")
    }
}

/// Characteristic polynomial by the Faddeev-LeVerrier recursion; the
/// divisions by k are exact over the integers.
pub fn char_poly(m: &RepMatrix) -> CharPoly {
    let n = m.dim;
    let mut coeffs = Vec::with_capacity(n + 1);
    coeffs.push(BigInt::one());
    let mut mk = m.clone();
    for k in 1..=n {
        let ck_num = -mk.trace();
        let (ck, r) = num_integer::Integer::div_rem(&ck_num, &BigInt::from(k));
        debug_assert!(r.is_zero(), "Faddeev-LeVerrier division must be exact");
        coeffs.push(ck.clone());
        if k < n {
            let mut shifted = mk.clone();
            for i in 0..n {
                let idx = i * n + i;
                shifted.entries[idx] = &shifted.entries[idx] + &ck;
            }
            mk = m.mul(&shifted);
        }
    }
    CharPoly { coeffs }
}

/// Element u + v*lambda of Z[lambda] / (lambda^2 - t*lambda + 1).
type QuadInt = (BigInt, BigInt);

fn quad_mul(x: &QuadInt, y: &QuadInt, t: &BigInt) -> QuadInt {
    // lambda^2 = t*lambda - 1
    let u = &x.0 * &y.0 - &x.1 * &y.1;
    let v = &x.0 * &y.1 + &x.1 * &y.0 + t * (&x.1 * &y.1);
    (u, v)
}

fn lambda_pow(e: i64, t: &BigInt) -> QuadInt {
    let mut acc: QuadInt = (BigInt::one(), BigInt::zero());
    // lambda has inverse t - lambda, because lambda (t - lambda) = 1.
    let step: QuadInt = if e >= 0 {
        (BigInt::zero(), BigInt::one())
    } else {
        (t.clone(), -BigInt::one())
    };
    for _ in 0..e.unsigned_abs() {
        acc = quad_mul(&acc, &step, t);
    }
    acc
}

/// Expands `prod_i (x - lambda^{n-1-2i})` for i = 0..n-1 in the quadratic
/// ring with `lambda^2 = t*lambda - 1`. Every coefficient is symmetric under
/// `lambda -> lambda^{-1}`, hence an integer; panics if not.
pub fn expand_eigenvalue_product(trace: &BigInt, n: usize) -> Vec<BigInt> {
    assert!(n >= 1);
    let mut poly: Vec<QuadInt> = vec![(BigInt::one(), BigInt::zero())];
    for i in 0..n {
        let e = (n as i64 - 1) - 2 * i as i64;
        let root = lambda_pow(e, trace);
        let mut next: Vec<QuadInt> = vec![(BigInt::zero(), BigInt::zero()); poly.len() + 1];
        for (j, coeff) in poly.iter().enumerate() {
            // multiply by x
            next[j + 1].0 = &next[j + 1].0 + &coeff.0;
            next[j + 1].1 = &next[j + 1].1 + &coeff.1;
            // minus root times coeff
            let prod = quad_mul(coeff, &root, trace);
            next[j].0 = &next[j].0 - prod.0;
            next[j].1 = &next[j].1 - prod.1;
        }
        poly = next;
    }
    poly.reverse();
    poly.into_iter()
        .map(|(u, v)| {
            assert!(v.is_zero(), "eigenvalue product must have integer coefficients");
            u
        })
        .collect()
}

/// Sum of `lambda^{n-1-2i}` via the recursion `s_{k+1} = t s_k - s_{k-1}`,
/// `s_0 = 2`, `s_1 = t`, where `s_k = lambda^k + lambda^{-k}`.
pub fn chebyshev_trace(trace: &BigInt, n: usize) -> BigInt {
    assert!(n >= 1);
    let top = n - 1;
    let mut s_prev = BigInt::from(2); // s_0
    let mut s_cur = trace.clone(); // s_1
    let mut total = if top % 2 == 0 { BigInt::one() } else { BigInt::zero() };
    for k in 1..=top {
        if k % 2 == top % 2 {
            total = &total + &s_cur;
        }
        let s_next = trace * &s_cur - &s_prev;
        s_prev = std::mem::replace(&mut s_cur, s_next);
    }
    total
}

/// Exact spectral data of a hyperbolic symmetric-power image.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EigenvalueProfile {
    /// Trace t of the underlying 2x2 element; the eigenvalue lambda of that
    /// element satisfies lambda^2 = t*lambda - 1.
    pub trace: BigInt,
    /// Eigenvalue exponents n-1, n-3, ..., -(n-1) of the n-dimensional image.
    pub exponents: Vec<i64>,
    /// Characteristic polynomial of the image; equal, exactly, to the
    /// expanded product over the exponent list.
    pub char_poly: CharPoly,
}

/// Eigenvalue law for hyperbolic elements: the n-dimensional image of h has
/// eigenvalues `lambda^{n-1}, lambda^{n-3}, ..., lambda^{-(n-1)}` where
/// lambda is the leading eigenvalue of h. Verifies the characteristic
/// polynomial against the expanded product before returning.
pub fn eigenvalue_profile(h: &Mat2, n: usize) -> Result<EigenvalueProfile> {
    if n == 0 {
        return Err(Error::ZeroDimension);
    }
    let t = h.trace();
    if t.abs() <= BigInt::from(2) {
        return Err(Error::NotHyperbolic(format!("trace = {t}")));
    }
    let cp = char_poly(&sym_power(h, n)?);
    let expanded = expand_eigenvalue_product(&t, n);
    if cp.coeffs != expanded {
        return Err(Error::WitnessVerification(format!(
            "characteristic polynomial {:?} differs from eigenvalue product {:?}",
            cp.coeffs, expanded
        )));
    }
    let exponents = (0..n).map(|i| (n as i64 - 1) - 2 * i as i64).collect();
    Ok(EigenvalueProfile { trace: t, exponents, char_poly: cp })
}
