//! Factorization correspondence between unordered point tuples on the
//! complex projective line and binary forms.
//!
//! An unordered n-tuple of points [a_i : b_i] maps to the degree-n form
//! prod_i (a_i X + b_i Y); the inverse map strips the Y^l block (l = number
//! of [0:1] points) and root-finds the dehomogenized remainder. Both sides
//! carry the same complexified substitution action, so the correspondence
//! is equivariant, which the tests check numerically.
//!
//! Degree/dimension bookkeeping: a degree-n form has n+1 coefficients, so
//! the matching substitution matrix is the one of dimension n+1 (the module
//! acting on integer coefficient vectors indexes by dimension instead).

use crate::symrep::{sym_power_entries, Mat2};
use crate::{Error, Result};
use num_complex::Complex64;
use num_traits::{Signed, ToPrimitive};
use serde::{Deserialize, Serialize};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// Relative threshold below which a leading coefficient counts as zero
/// when locating the Y^l block in the inverse map.
pub const LEADING_THRESHOLD: f64 = 1e-10;

/// Tolerance on |det - 1| for complex 2x2 inputs.
pub const DET_TOLERANCE: f64 = 1e-9;

/// Point of the complex projective line, stored in canonical form:
/// the larger-modulus coordinate is exactly 1 (ties go to the first).
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct ProjPoint {
    a: Complex64,
    b: Complex64,
}

impl ProjPoint {
    pub fn new(a: Complex64, b: Complex64) -> Result<Self> {
        let (na, nb) = (a.norm(), b.norm());
        if na == 0.0 && nb == 0.0 {
            return Err(Error::ZeroProjPoint);
        }
        if !na.is_finite() || !nb.is_finite() {
            return Err(Error::ZeroProjPoint);
        }
        if na >= nb {
            Ok(ProjPoint { a: ONE, b: b / a })
        } else {
            Ok(ProjPoint { a: a / b, b: ONE })
        }
    }

    pub fn from_real(a: f64, b: f64) -> Result<Self> {
        ProjPoint::new(Complex64::new(a, 0.0), Complex64::new(b, 0.0))
    }

    pub fn a(&self) -> Complex64 {
        self.a
    }

    pub fn b(&self) -> Complex64 {
        self.b
    }

    /// Chordal distance |a1 b2 - a2 b1| / (|(a1,b1)| |(a2,b2)|), in [0, 1].
    pub fn chordal_distance(&self, other: &ProjPoint) -> f64 {
        let cross = self.a * other.b - other.a * self.b;
        let n1 = (self.a.norm_sqr() + self.b.norm_sqr()).sqrt();
        let n2 = (other.a.norm_sqr() + other.b.norm_sqr()).sqrt();
        cross.norm() / (n1 * n2)
    }

    fn sort_key(&self) -> [f64; 4] {
        [self.a.re, self.a.im, self.b.re, self.b.im]
    }
}

/// Unordered tuple of projective points, kept sorted for deterministic
/// serialization. Genuine multiset comparison goes through
/// [`multiset_distance`], never through coordinate order.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PointMultiset {
    points: Vec<ProjPoint>,
}

impl PointMultiset {
    pub fn new(mut points: Vec<ProjPoint>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::ZeroDimension);
        }
        points.sort_by(|p, q| {
            p.sort_key()
                .iter()
                .zip(q.sort_key().iter())
                .map(|(x, y)| x.total_cmp(y))
                .find(|o| o.is_ne())
                .unwrap_or(std::cmp::Ordering::Equal)
        });
        Ok(PointMultiset { points })
    }

    pub fn points(&self) -> &[ProjPoint] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// Binary form of degree n: coefficients c_0..c_n of X^{n-k} Y^k, canonical
/// form scaled so the first largest-modulus coefficient is exactly 1.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct HomPoly {
    coeffs: Vec<Complex64>,
}

impl HomPoly {
    pub fn new(coeffs: Vec<Complex64>) -> Result<Self> {
        if coeffs.is_empty() {
            return Err(Error::ZeroPolynomial);
        }
        let mut pivot = 0usize;
        let mut max = 0.0f64;
        for (k, c) in coeffs.iter().enumerate() {
            if !c.norm().is_finite() {
                return Err(Error::ZeroPolynomial);
            }
            if c.norm() > max {
                max = c.norm();
                pivot = k;
            }
        }
        if max == 0.0 {
            return Err(Error::ZeroPolynomial);
        }
        let scale = coeffs[pivot];
        Ok(HomPoly { coeffs: coeffs.iter().map(|c| c / scale).collect() })
    }

    pub fn from_real(coeffs: &[f64]) -> Result<Self> {
        HomPoly::new(coeffs.iter().map(|&x| Complex64::new(x, 0.0)).collect())
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn eval(&self, x: Complex64, y: Complex64) -> Complex64 {
        let n = self.degree();
        let mut acc = ZERO;
        for (k, c) in self.coeffs.iter().enumerate() {
            acc += c * x.powu((n - k) as u32) * y.powu(k as u32);
        }
        acc
    }

    /// Max coefficient deviation between the canonical forms. Canonical
    /// coefficients are bounded by 1, so this is a relative error.
    pub fn distance(&self, other: &HomPoly) -> Result<f64> {
        if self.degree() != other.degree() {
            return Err(Error::DimensionMismatch {
                expected: self.degree(),
                got: other.degree(),
            });
        }
        Ok(self
            .coeffs
            .iter()
            .zip(other.coeffs.iter())
            .map(|(c, d)| (c - d).norm())
            .fold(0.0, f64::max))
    }
}

/// Expands prod_i (a_i X + b_i Y) into a canonical degree-n form.
pub fn forward(points: &PointMultiset) -> Result<HomPoly> {
    let mut coeffs = vec![ONE];
    for p in points.points() {
        let mut next = vec![ZERO; coeffs.len() + 1];
        for (j, c) in coeffs.iter().enumerate() {
            next[j] += p.a * c;
            next[j + 1] += p.b * c;
        }
        coeffs = next;
    }
    HomPoly::new(coeffs)
}

/// Splits a form as c_l Y^l prod_i (X - z_i Y): l is the first coefficient
/// index exceeding the relative threshold, the z_i are the roots of the
/// dehomogenized remainder, and the result is l copies of [0:1] together
/// with the points [1:-z_i].
pub fn inverse(poly: &HomPoly) -> Result<PointMultiset> {
    let n = poly.degree();
    if n == 0 {
        return Err(Error::ZeroDimension);
    }
    let max = poly.coeffs().iter().map(|c| c.norm()).fold(0.0, f64::max);
    let lead = poly
        .coeffs()
        .iter()
        .position(|c| c.norm() > LEADING_THRESHOLD * max)
        .expect("canonical form has a unit coefficient");
    let mut points = Vec::with_capacity(n);
    for _ in 0..lead {
        points.push(ProjPoint::new(ZERO, ONE)?);
    }
    let desc: Vec<Complex64> = poly.coeffs()[lead..].to_vec();
    for z in poly_roots(&desc)? {
        points.push(ProjPoint::new(ONE, -z)?);
    }
    PointMultiset::new(points)
}

/// Complex 2x2 matrix with determinant 1 up to [`DET_TOLERANCE`].
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct CMat2 {
    pub a: Complex64,
    pub b: Complex64,
    pub c: Complex64,
    pub d: Complex64,
}

impl CMat2 {
    pub fn new(a: Complex64, b: Complex64, c: Complex64, d: Complex64) -> Result<Self> {
        let det = a * d - b * c;
        if (det - ONE).norm() > DET_TOLERANCE {
            return Err(Error::NotSpecialLinear(format!("det = {det}")));
        }
        Ok(CMat2 { a, b, c, d })
    }

    pub fn identity() -> Self {
        CMat2 { a: ONE, b: ZERO, c: ZERO, d: ONE }
    }

    pub fn from_integer(m: &Mat2) -> Result<Self> {
        let conv = |x: &num_bigint::BigInt| -> Result<Complex64> {
            if x.abs() > num_bigint::BigInt::from(1u64 << 53) {
                return Err(Error::EntryTooLarge);
            }
            Ok(Complex64::new(x.to_f64().expect("bounded above"), 0.0))
        };
        CMat2::new(conv(m.a())?, conv(m.b())?, conv(m.c())?, conv(m.d())?)
    }

    pub fn det(&self) -> Complex64 {
        self.a * self.d - self.b * self.c
    }
}

/// Applies g to each point as the linear map (a,b) -> (g11 a + g12 b, g21 a + g22 b).
pub fn act_on_points(g: &CMat2, points: &PointMultiset) -> Result<PointMultiset> {
    let mapped = points
        .points()
        .iter()
        .map(|p| ProjPoint::new(g.a * p.a + g.b * p.b, g.c * p.a + g.d * p.b))
        .collect::<Result<Vec<_>>>()?;
    PointMultiset::new(mapped)
}

/// Applies the complexified substitution matrix of dimension degree+1 to the
/// coefficient vector.
pub fn act_on_poly(g: &CMat2, poly: &HomPoly) -> Result<HomPoly> {
    let dim = poly.degree() + 1;
    let m = sym_power_entries(&g.a, &g.b, &g.c, &g.d, dim);
    let mut out = vec![ZERO; dim];
    for (j, slot) in out.iter_mut().enumerate() {
        for i in 0..dim {
            *slot += m[j * dim + i] * poly.coeffs()[i];
        }
    }
    HomPoly::new(out)
}

/// Minimal total chordal distance over bijections between the two multisets.
/// Zero exactly when the multisets agree up to numerical tolerance.
pub fn multiset_distance(a: &PointMultiset, b: &PointMultiset) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch { expected: a.len(), got: b.len() });
    }
    let n = a.len();
    let cost: Vec<Vec<f64>> = a
        .points()
        .iter()
        .map(|p| b.points().iter().map(|q| p.chordal_distance(q)).collect())
        .collect();
    Ok(assignment_cost(n, &cost))
}

/// Hungarian algorithm with potentials; returns the minimal assignment cost.
fn assignment_cost(n: usize, cost: &[Vec<f64>]) -> f64 {
    let mut u = vec![0.0f64; n + 1];
    let mut v = vec![0.0f64; n + 1];
    let mut matched = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    for i in 1..=n {
        matched[0] = i;
        let mut j0 = 0usize;
        let mut minv = vec![f64::INFINITY; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = matched[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0usize;
            for j in 1..=n {
                if used[j] {
                    continue;
                }
                let cur = cost[i0 - 1][j - 1] - u[i0] - v[j];
                if cur < minv[j] {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if minv[j] < delta {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[matched[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if matched[j0] == 0 {
                break;
            }
        }
        while j0 != 0 {
            let j1 = way[j0];
            matched[j0] = matched[j1];
            j0 = j1;
        }
    }
    (1..=n).map(|j| cost[matched[j] - 1][j - 1]).sum()
}

/// Roots of a complex polynomial given by descending coefficients with a
/// nonzero leading entry: companion-matrix eigenvalues via shifted
/// Hessenberg QR, then a short Newton polish.
pub fn poly_roots(desc: &[Complex64]) -> Result<Vec<Complex64>> {
    if desc.is_empty() || desc[0].norm() == 0.0 {
        return Err(Error::ZeroPolynomial);
    }
    let m = desc.len() - 1;
    if m == 0 {
        return Ok(Vec::new());
    }
    // Monic coefficients a_0..a_{m-1} of Z^k, ascending.
    let monic: Vec<Complex64> = (0..m).map(|k| desc[m - k] / desc[0]).collect();
    let mut h = vec![vec![ZERO; m]; m];
    for k in 0..m {
        if k + 1 < m {
            h[k + 1][k] = ONE;
        }
        h[k][m - 1] = -monic[k];
    }
    let mut roots = hessenberg_eigenvalues(h)?;
    for z in roots.iter_mut() {
        // Newton polish, kept only while it strictly shrinks the residual.
        // Near a multiple root p/p' is noise-dominated and a blind step
        // would scatter the (backward-stable) eigenvalue cluster.
        for _ in 0..2 {
            let (p, dp) = horner_pair(&monic, *z);
            if dp.norm() <= 1e-300 {
                break;
            }
            let step = p / dp;
            if step.norm() >= 0.5 * (1.0 + z.norm()) {
                break;
            }
            let candidate = *z - step;
            let (pc, _) = horner_pair(&monic, candidate);
            if pc.norm() < p.norm() {
                *z = candidate;
            } else {
                break;
            }
        }
    }
    roots.sort_by(|p, q| p.re.total_cmp(&q.re).then(p.im.total_cmp(&q.im)));
    Ok(roots)
}

/// Value and derivative of the monic polynomial Z^m + sum a_k Z^k at z.
fn horner_pair(monic_ascending: &[Complex64], z: Complex64) -> (Complex64, Complex64) {
    let mut p = ONE;
    let mut dp = ZERO;
    for a in monic_ascending.iter().rev() {
        dp = dp * z + p;
        p = p * z + a;
    }
    (p, dp)
}

/// Eigenvalues of a complex upper Hessenberg matrix by single-shift QR with
/// Wilkinson shifts and deflation.
fn hessenberg_eigenvalues(mut h: Vec<Vec<Complex64>>) -> Result<Vec<Complex64>> {
    let m = h.len();
    let mut eigs = Vec::with_capacity(m);
    let hnorm: f64 = h
        .iter()
        .map(|row| row.iter().map(|c| c.norm()).sum::<f64>())
        .fold(0.0, f64::max)
        .max(1.0);
    let negligible = |h: &[Vec<Complex64>], k: usize| -> bool {
        let s = h[k - 1][k - 1].norm() + h[k][k].norm();
        let s = if s == 0.0 { hnorm } else { s };
        h[k][k - 1].norm() <= f64::EPSILON * s
    };
    let mut hi = m;
    let mut stalled = 0usize;
    let mut budget = 80 * m + 200;
    while hi > 0 {
        if hi == 1 {
            eigs.push(h[0][0]);
            hi = 0;
            continue;
        }
        if negligible(&h, hi - 1) {
            h[hi - 1][hi - 2] = ZERO;
            eigs.push(h[hi - 1][hi - 1]);
            hi -= 1;
            stalled = 0;
            continue;
        }
        if budget == 0 {
            return Err(Error::RootFinding);
        }
        budget -= 1;
        let mut lo = hi - 1;
        while lo > 0 && !negligible(&h, lo) {
            lo -= 1;
        }
        if lo > 0 {
            h[lo][lo - 1] = ZERO;
        }
        stalled += 1;
        let sigma = if stalled % 12 == 0 {
            // Exceptional shift to break symmetric stalls.
            let t = h[hi - 1][hi - 2].norm();
            h[hi - 1][hi - 1] + Complex64::new(0.75 * t, -0.31 * t)
        } else {
            wilkinson_shift(
                h[hi - 2][hi - 2],
                h[hi - 2][hi - 1],
                h[hi - 1][hi - 2],
                h[hi - 1][hi - 1],
            )
        };
        qr_step(&mut h, lo, hi, sigma);
    }
    Ok(eigs)
}

/// Eigenvalue of [[a, b], [c, d]] closest to d.
fn wilkinson_shift(a: Complex64, b: Complex64, c: Complex64, d: Complex64) -> Complex64 {
    let half_tr = (a + d) / 2.0;
    let det = a * d - b * c;
    let disc = (half_tr * half_tr - det).sqrt();
    let m1 = half_tr + disc;
    let m2 = half_tr - disc;
    if (m1 - d).norm() <= (m2 - d).norm() {
        m1
    } else {
        m2
    }
}

/// One implicit-shift QR sweep on the active block h[lo..hi][lo..hi]:
/// factor (H - sigma I) = QR by Givens rotations, then form RQ + sigma I.
fn qr_step(h: &mut [Vec<Complex64>], lo: usize, hi: usize, sigma: Complex64) {
    for i in lo..hi {
        h[i][i] -= sigma;
    }
    let mut rots: Vec<(f64, Complex64)> = Vec::with_capacity(hi - lo);
    for k in lo..hi - 1 {
        let (c, s) = givens(h[k][k], h[k + 1][k]);
        for j in k..hi {
            let t1 = h[k][j];
            let t2 = h[k + 1][j];
            h[k][j] = c * t1 + s * t2;
            h[k + 1][j] = -s.conj() * t1 + c * t2;
        }
        rots.push((c, s));
    }
    for (idx, (c, s)) in rots.iter().enumerate() {
        let k = lo + idx;
        let last = (k + 2).min(hi);
        for i in lo..last {
            let t1 = h[i][k];
            let t2 = h[i][k + 1];
            h[i][k] = c * t1 + s.conj() * t2;
            h[i][k + 1] = -s * t1 + c * t2;
        }
    }
    for i in lo..hi {
        h[i][i] += sigma;
    }
}

/// Unitary rotation [[c, s], [-conj(s), c]] sending (f, g) to (r, 0).
fn givens(f: Complex64, g: Complex64) -> (f64, Complex64) {
    let (fa, ga) = (f.norm(), g.norm());
    if ga == 0.0 {
        return (1.0, ZERO);
    }
    if fa == 0.0 {
        return (0.0, g.conj() / ga);
    }
    let r = fa.hypot(ga);
    (fa / r, (f / fa) * g.conj() / r)
}
