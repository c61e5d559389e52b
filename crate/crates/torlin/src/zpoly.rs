//! Dense integer polynomials, ascending coefficient order (index = degree).
//!
//! Just enough arithmetic for cyclotomic polynomials: exact division by a
//! monic divisor, and the recursion `x^k - 1 = prod_{d | k} Phi_d`.

use num_bigint::BigInt;
use num_traits::{One, Zero};

pub(crate) type ZPoly = Vec<BigInt>;

pub(crate) fn trim(mut p: ZPoly) -> ZPoly {
    while p.len() > 1 && p.last().map(Zero::is_zero).unwrap_or(false) {
        p.pop();
    }
    p
}

pub(crate) fn degree(p: &ZPoly) -> usize {
    p.len().saturating_sub(1)
}

pub(crate) fn is_zero_poly(p: &ZPoly) -> bool {
    p.iter().all(Zero::is_zero)
}

/// Quotient and remainder by a monic divisor; exact integer arithmetic.
pub(crate) fn divrem_monic(num: &ZPoly, den: &ZPoly) -> (ZPoly, ZPoly) {
    assert!(den.last().map(One::is_one).unwrap_or(false), "divisor must be monic");
    let dd = degree(den);
    let mut rem = num.clone();
    if degree(&rem) < dd || is_zero_poly(&rem) {
        return (vec![BigInt::zero()], trim(rem));
    }
    let qd = degree(&rem) - dd;
    let mut quot = vec![BigInt::zero(); qd + 1];
    for k in (0..=qd).rev() {
        let c = rem[k + dd].clone();
        if c.is_zero() {
            continue;
        }
        quot[k] = c.clone();
        for (i, d) in den.iter().enumerate() {
            let t = d * &c;
            rem[k + i] = &rem[k + i] - t;
        }
    }
    (trim(quot), trim(rem))
}

/// True when the monic polynomial `den` divides `num` exactly over Z.
pub(crate) fn divides_monic(num: &ZPoly, den: &ZPoly) -> bool {
    let (_, rem) = divrem_monic(num, den);
    is_zero_poly(&rem)
}

fn x_pow_minus_one(k: usize) -> ZPoly {
    let mut p = vec![BigInt::zero(); k + 1];
    p[0] = -BigInt::one();
    p[k] = BigInt::one();
    p
}

/// k-th cyclotomic polynomial by exact recursive division of `x^k - 1`.
pub(crate) fn cyclotomic(k: usize) -> ZPoly {
    assert!(k >= 1);
    let mut p = x_pow_minus_one(k);
    for d in 1..k {
        if k % d == 0 {
            let (q, r) = divrem_monic(&p, &cyclotomic(d));
            debug_assert!(is_zero_poly(&r), "cyclotomic division must be exact");
            p = q;
        }
    }
    p
}

use std::sync::OnceLock;

const CYCLO_TABLE_MAX: usize = 288; // covers the scan bound 2 n^2 for n <= 12

/// Cyclotomic polynomial with a process-wide table for the small orders the
/// root-of-unity scans hit repeatedly. Falls back to the recursion above.
pub(crate) fn cyclotomic_cached(k: usize) -> ZPoly {
    static TABLE: OnceLock<Vec<ZPoly>> = OnceLock::new();
    if k > CYCLO_TABLE_MAX {
        return cyclotomic(k);
    }
    let table = TABLE.get_or_init(|| {
        let mut t: Vec<ZPoly> = Vec::with_capacity(CYCLO_TABLE_MAX);
        for m in 1..=CYCLO_TABLE_MAX {
            let mut p = x_pow_minus_one(m);
            for d in 1..m {
                if m % d == 0 {
                    let (q, r) = divrem_monic(&p, &t[d - 1]);
                    debug_assert!(is_zero_poly(&r));
                    p = q;
                }
            }
            t.push(p);
        }
        t
    });
    table[k - 1].clone()
}

/// Euler totient by trial-division factorization.
pub(crate) fn euler_phi(k: u64) -> u64 {
    assert!(k >= 1);
    let mut n = k;
    let mut phi = k;
    let mut p = 2;
    while p * p <= n {
        if n % p == 0 {
            while n % p == 0 {
                n /= p;
            }
            phi = phi / p * (p - 1);
        }
        p += 1;
    }
    if n > 1 {
        phi = phi / n * (n - 1);
    }
    phi
}
