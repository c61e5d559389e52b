//! Exact rational Gaussian elimination over `Ratio<BigInt>`.
//!
//! Used for integer kernels (denominators cleared afterwards) and for exact
//! inverses of unimodular integer matrices. Pivot choice is deterministic:
//! first nonzero entry in column order, so results do not depend on input
//! permutations beyond the usual echelon conventions.

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::Ratio;
use num_traits::{One, Signed, Zero};

type Q = Ratio<BigInt>;

fn to_rational(entries: &[BigInt]) -> Vec<Q> {
    entries.iter().map(|e| Q::from_integer(e.clone())).collect()
}

/// Row echelon form in place. Returns the pivot column of each pivot row.
fn echelon(a: &mut [Vec<Q>]) -> Vec<usize> {
    let rows = a.len();
    let cols = if rows == 0 { 0 } else { a[0].len() };
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..cols {
        let Some(p) = (r..rows).find(|&i| !a[i][c].is_zero()) else { continue };
        a.swap(r, p);
        let inv = a[r][c].clone();
        for j in c..cols {
            a[r][j] = &a[r][j] / &inv;
        }
        for i in 0..rows {
            if i != r && !a[i][c].is_zero() {
                let f = a[i][c].clone();
                for j in c..cols {
                    let t = &a[r][j] * &f;
                    a[i][j] = &a[i][j] - t;
                }
            }
        }
        pivots.push(c);
        r += 1;
        if r == rows {
            break;
        }
    }
    pivots
}

/// Clears denominators and divides by the coordinate gcd; flips sign so the
/// first nonzero coordinate is positive. Zero vectors pass through.
pub(crate) fn primitive_integer(v: &[Q]) -> Vec<BigInt> {
    let mut lcm = BigInt::one();
    for x in v {
        lcm = lcm.lcm(x.denom());
    }
    let mut ints: Vec<BigInt> = v.iter().map(|x| (x * Q::from_integer(lcm.clone())).to_integer()).collect();
    let mut g = BigInt::zero();
    for x in &ints {
        g = g.gcd(x);
    }
    if g.is_zero() {
        return ints;
    }
    for x in &mut ints {
        *x = &*x / &g;
    }
    if let Some(first) = ints.iter().find(|x| !x.is_zero()) {
        if first.is_negative() {
            for x in &mut ints {
                *x = -x.clone();
            }
        }
    }
    ints
}

/// Primitive integer basis of the kernel of a square integer matrix,
/// ordered by free column. Empty when the matrix is nonsingular.
pub(crate) fn integer_kernel_basis(dim: usize, entries: &[BigInt]) -> Vec<Vec<BigInt>> {
    assert_eq!(entries.len(), dim * dim, "entry count must match dimension");
    let q = to_rational(entries);
    let mut rows: Vec<Vec<Q>> = (0..dim).map(|i| q[i * dim..(i + 1) * dim].to_vec()).collect();
    let pivots = echelon(&mut rows);
    let free: Vec<usize> = (0..dim).filter(|c| !pivots.contains(c)).collect();
    let mut basis = Vec::new();
    for &fc in &free {
        let mut v = vec![Q::zero(); dim];
        v[fc] = Q::one();
        for (pr, &pc) in pivots.iter().enumerate() {
            v[pc] = -rows[pr][fc].clone();
        }
        basis.push(primitive_integer(&v));
    }
    basis
}

/// Exact inverse of an integer matrix, required to be integral
/// (determinant a unit). Errors when singular or non-unimodular.
pub(crate) fn inverse_integer(dim: usize, entries: &[BigInt]) -> crate::Result<Vec<BigInt>> {
    assert_eq!(entries.len(), dim * dim, "entry count must match dimension");
    let q = to_rational(entries);
    let mut rows: Vec<Vec<Q>> = (0..dim)
        .map(|i| {
            let mut row = q[i * dim..(i + 1) * dim].to_vec();
            for j in 0..dim {
                row.push(if i == j { Q::one() } else { Q::zero() });
            }
            row
        })
        .collect();
    let pivots = echelon(&mut rows);
    if pivots.len() < dim {
        return Err(crate::Error::NotInvertible);
    }
    let mut out = Vec::with_capacity(dim * dim);
    for i in 0..dim {
        for j in 0..dim {
            let x = &rows[i][dim + j];
            if !x.denom().is_one() {
                return Err(crate::Error::NotInvertible);
            }
            out.push(x.to_integer());
        }
    }
    Ok(out)
}
