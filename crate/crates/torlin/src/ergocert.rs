//! Ergodicity certificates for toral automorphisms coming from the
//! symmetric-power embedding.
//!
//! An automorphism x -> Mx of the n-torus is ergodic for Lebesgue measure
//! exactly when M has no root-of-unity eigenvalue; a non-root criterion is
//! checked exactly through cyclotomic divisibility of the characteristic
//! polynomial. Non-ergodicity is witnessed on the character lattice: the
//! dual action is by the transpose (`chi_v o M = chi_{M^T v}`), so a fixed
//! integer vector of `M^T` pins an invariant nonconstant character.

use crate::serial;
use crate::symrep::{char_poly, sym_power, CharPoly, Mat2, RepMatrix};
use crate::{zpoly, Error, Result};
use num_bigint::BigInt;
use num_traits::{Signed, Zero};
use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;

/// Trace trichotomy for elements of `SL2(Z)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ElementClass {
    /// |trace| < 2: finite order in the projective group.
    Elliptic,
    /// |trace| = 2: unipotent up to sign.
    Parabolic,
    /// |trace| > 2: two real eigenvalues `lambda, 1/lambda` with |lambda| > 1.
    Hyperbolic,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Classification {
    pub class: ElementClass,
    #[serde(with = "serial::bigint")]
    pub trace: BigInt,
}

pub fn classify_element(g: &Mat2) -> Classification {
    let trace = g.trace();
    let class = match trace.abs().cmp(&BigInt::from(2)) {
        std::cmp::Ordering::Less => ElementClass::Elliptic,
        std::cmp::Ordering::Equal => ElementClass::Parabolic,
        std::cmp::Ordering::Greater => ElementClass::Hyperbolic,
    };
    Classification { class, trace }
}

/// Largest order k whose primitive roots of unity can occur in degree n,
/// i.e. `max { k : phi(k) <= n }`. Scanning `k <= 2 n^2` is exhaustive
/// because `phi(k) >= sqrt(k / 2)`.
pub fn orders_scan_bound(n: usize) -> u64 {
    let n64 = n as u64;
    (1..=2 * n64 * n64).filter(|&k| zpoly::euler_phi(k) <= n64).max().unwrap_or(1)
}

/// All orders k such that some primitive k-th root of unity is an eigenvalue:
/// `Phi_k` is irreducible over Q, so it is an eigenvalue order exactly when
/// `Phi_k` divides the characteristic polynomial.
pub fn root_of_unity_orders(cp: &CharPoly) -> Vec<u64> {
    let n = cp.degree();
    let asc = cp.ascending();
    let n64 = n as u64;
    let mut orders = Vec::new();
    for k in 1..=2 * n64 * n64 {
        if zpoly::euler_phi(k) > n64 {
            continue;
        }
        if zpoly::divides_monic(&asc, &zpoly::cyclotomic_cached(k as usize)) {
            orders.push(k);
        }
    }
    orders
}

/// Root-of-unity eigenvalue test with the witnessing orders.
pub fn has_root_of_unity_eigenvalue(m: &RepMatrix) -> (bool, Vec<u64>) {
    let orders = root_of_unity_orders(&char_poly(m));
    (!orders.is_empty(), orders)
}

/// Integer vector on the character lattice. Comparison order is
/// lexicographic on coordinates, which keeps orbit listings canonical.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct LatticeVector(#[serde(with = "serial::bigint_vec")] pub Vec<BigInt>);

impl LatticeVector {
    pub fn from_i64(coords: &[i64]) -> Self {
        LatticeVector(coords.iter().map(|&x| BigInt::from(x)).collect())
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(Zero::is_zero)
    }

    /// Divides by the coordinate gcd and makes the first nonzero
    /// coordinate positive.
    pub fn primitive_normalized(&self) -> LatticeVector {
        let q: Vec<num_rational::Ratio<BigInt>> =
            self.0.iter().map(|x| num_rational::Ratio::from_integer(x.clone())).collect();
        LatticeVector(crate::ratmat::primitive_integer(&q))
    }

    pub fn infinity_norm(&self) -> BigInt {
        self.0.iter().map(Signed::abs).max().unwrap_or_else(BigInt::zero)
    }

    pub fn basis_vector(dim: usize, index: usize) -> Self {
        let mut coords = vec![BigInt::zero(); dim];
        coords[index] = BigInt::from(1);
        LatticeVector(coords)
    }
}

/// Primitive fixed vector of M, from the exact rational kernel of `M - I`
/// with denominators cleared. None when 1 is not an eigenvalue. The result
/// is re-verified with exact arithmetic before it is returned.
pub fn fixed_integer_vector(m: &RepMatrix) -> Option<LatticeVector> {
    let diff = m.sub(&RepMatrix::identity(m.dim()));
    let basis = crate::ratmat::integer_kernel_basis(m.dim(), diff.entries());
    let v = basis.into_iter().next()?;
    let vec = LatticeVector(v);
    let image = m.apply(&vec.0).expect("kernel vector has matching dimension");
    assert_eq!(image, vec.0, "kernel vector must be fixed exactly");
    Some(vec)
}

/// Orbit enumeration outcome. `ExceededCap` is a resource report, not a
/// proof that the orbit is infinite.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum OrbitResult {
    Finite { orbit: Vec<LatticeVector> },
    ExceededCap {
        visited: usize,
        #[serde(with = "serial::bigint")]
        max_norm: BigInt,
    },
}

/// Breadth-first closure of v under the generators and their exact
/// inverses. Levels are expanded whole, so the outcome (including the
/// cap report) depends only on the generator set, not its order. A
/// `Finite` result is the orbit as a sorted set.
pub fn orbit_closure(v: &LatticeVector, gens: &[RepMatrix], cap: usize) -> Result<OrbitResult> {
    if cap == 0 {
        return Err(Error::ZeroCap);
    }
    if v.is_zero() {
        return Err(Error::ZeroVector);
    }
    let dim = v.dim();
    let mut closed_gens: Vec<RepMatrix> = Vec::new();
    for g in gens {
        if g.dim() != dim {
            return Err(Error::DimensionMismatch { expected: dim, got: g.dim() });
        }
        let inv = g.try_inverse()?;
        for cand in [g.clone(), inv] {
            if !closed_gens.iter().any(|h| h.entries() == cand.entries()) {
                closed_gens.push(cand);
            }
        }
    }
    let mut visited: BTreeSet<Vec<BigInt>> = BTreeSet::from([v.0.clone()]);
    let mut frontier: Vec<Vec<BigInt>> = vec![v.0.clone()];
    let mut max_norm = v.infinity_norm();
    while !frontier.is_empty() {
        let mut next: BTreeSet<Vec<BigInt>> = BTreeSet::new();
        for u in &frontier {
            for g in &closed_gens {
                let w = g.apply(u)?;
                if !visited.contains(&w) {
                    next.insert(w);
                }
            }
        }
        for w in &next {
            let norm = LatticeVector(w.clone()).infinity_norm();
            if norm > max_norm {
                max_norm = norm;
            }
        }
        if visited.len() + next.len() > cap {
            return Ok(OrbitResult::ExceededCap { visited: visited.len() + next.len(), max_norm });
        }
        visited.extend(next.iter().cloned());
        frontier = next.into_iter().collect();
    }
    Ok(OrbitResult::Finite { orbit: visited.into_iter().map(LatticeVector).collect() })
}

/// True when every generator (and inverse) maps the set into itself.
pub fn orbit_is_closed(orbit: &[LatticeVector], gens: &[RepMatrix]) -> Result<bool> {
    let set: BTreeSet<&Vec<BigInt>> = orbit.iter().map(|v| &v.0).collect();
    for g in gens {
        let inv = g.try_inverse()?;
        for m in [g, &inv] {
            for v in orbit {
                if !set.contains(&m.apply(&v.0)?) {
                    return Ok(false);
                }
            }
        }
    }
    Ok(true)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Ergodic,
    NonErgodic,
}

/// Evidence carried by a certificate. Exactly one variant per verdict in
/// the certificates this crate produces; `finite_orbit` is accepted on the
/// verification path for externally assembled certificates.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Evidence {
    NoRootOfUnity { orders_checked: u64 },
    FixedVector { vector: LatticeVector, orders_found: Vec<u64> },
    FiniteOrbit { orbit: Vec<LatticeVector> },
}

/// Self-contained, re-checkable verdict on the toral automorphism induced
/// by the n-dimensional symmetric-power image of h.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ErgodicityCertificate {
    pub verdict: Verdict,
    pub n: usize,
    pub matrix: Mat2,
    pub evidence: Evidence,
}

/// Decides ergodicity of the n-dimensional image of a hyperbolic element.
/// Every non-ergodic verdict ships a witness vector that is re-verified
/// against the transpose before the certificate is returned.
pub fn ergodicity_certificate(h: &Mat2, n: usize) -> Result<ErgodicityCertificate> {
    if n == 0 {
        return Err(Error::ZeroDimension);
    }
    let cls = classify_element(h);
    if cls.class != ElementClass::Hyperbolic {
        return Err(Error::NotHyperbolic(format!(
            "classification = {:?}, trace = {}",
            cls.class, cls.trace
        )));
    }
    let m = sym_power(h, n)?;
    let orders = root_of_unity_orders(&char_poly(&m));
    if orders.is_empty() {
        return Ok(ErgodicityCertificate {
            verdict: Verdict::Ergodic,
            n,
            matrix: h.clone(),
            evidence: Evidence::NoRootOfUnity { orders_checked: orders_scan_bound(n) },
        });
    }
    // Hyperbolic images have real spectrum, so the only root of unity that
    // can occur is 1 itself and a fixed dual vector must exist.
    let mt = m.transpose();
    let vector = fixed_integer_vector(&mt).ok_or_else(|| {
        Error::WitnessVerification("root-of-unity order found but no fixed dual vector".into())
    })?;
    if mt.apply(&vector.0)? != vector.0 {
        return Err(Error::WitnessVerification("dual witness is not fixed".into()));
    }
    Ok(ErgodicityCertificate {
        verdict: Verdict::NonErgodic,
        n,
        matrix: h.clone(),
        evidence: Evidence::FixedVector { vector, orders_found: orders },
    })
}

/// Re-checks a certificate from its serialized content alone.
pub fn verify_certificate(cert: &ErgodicityCertificate) -> Result<()> {
    let cls = classify_element(&cert.matrix);
    if cls.class != ElementClass::Hyperbolic {
        return Err(Error::WitnessVerification("certificate matrix is not hyperbolic".into()));
    }
    let m = sym_power(&cert.matrix, cert.n)?;
    let orders = root_of_unity_orders(&char_poly(&m));
    match (&cert.verdict, &cert.evidence) {
        (Verdict::Ergodic, Evidence::NoRootOfUnity { orders_checked }) => {
            if !orders.is_empty() {
                return Err(Error::WitnessVerification(format!(
                    "claimed ergodic but orders {orders:?} found"
                )));
            }
            if *orders_checked != orders_scan_bound(cert.n) {
                return Err(Error::WitnessVerification("scan bound mismatch".into()));
            }
            Ok(())
        }
        (Verdict::NonErgodic, Evidence::FixedVector { vector, orders_found }) => {
            if vector.dim() != cert.n || vector.is_zero() {
                return Err(Error::WitnessVerification("malformed witness vector".into()));
            }
            if m.transpose().apply(&vector.0)? != vector.0 {
                return Err(Error::WitnessVerification("witness vector is not fixed by M^T".into()));
            }
            if orders_found != &orders {
                return Err(Error::WitnessVerification("recorded orders do not match".into()));
            }
            Ok(())
        }
        (Verdict::NonErgodic, Evidence::FiniteOrbit { orbit }) => {
            if orbit.is_empty() || orbit.iter().any(LatticeVector::is_zero) {
                return Err(Error::WitnessVerification("malformed finite orbit".into()));
            }
            if !orbit_is_closed(orbit, &[m.transpose()])? {
                return Err(Error::WitnessVerification("orbit is not closed under M^T".into()));
            }
            Ok(())
        }
        _ => Err(Error::WitnessVerification("verdict and evidence disagree".into())),
    }
}

/// The three shapes of amenable subgroup used by the positive side of the
/// odd dichotomy: a finite subgroup, a conjugate of the parabolic cyclic
/// subgroup, and a hyperbolic cyclic subgroup possibly extended to an
/// infinite dihedral group by a reflection.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum AmenableKind {
    FiniteOrder3,
    Parabolic { conjugator: Mat2 },
    HyperbolicOrDihedral { h: Mat2, reflection: Option<Mat2> },
}

/// A finite orbit on the lattice, produced constructively per subgroup kind
/// and verified by bounded breadth-first search before being reported.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct WitnessReport {
    pub case_label: String,
    pub n: usize,
    pub generators: Vec<Mat2>,
    pub vector: LatticeVector,
    pub orbit: Vec<LatticeVector>,
    pub note: String,
}

const WITNESS_ORBIT_CAP: usize = 1000;

fn finite_orbit_or_inconsistent(
    v: &LatticeVector,
    gens: &[RepMatrix],
) -> Result<Vec<LatticeVector>> {
    match orbit_closure(v, gens, WITNESS_ORBIT_CAP)? {
        OrbitResult::Finite { orbit } => Ok(orbit),
        OrbitResult::ExceededCap { .. } => Err(Error::InconsistentInput(
            "witness orbit did not close within the verification cap".into(),
        )),
    }
}

/// Produces a lattice vector with verified finite orbit under the image of
/// the given subgroup, for odd n >= 3.
///
/// Case 1 uses the standard order-3 element and the first basis vector.
/// Case 2 conjugates the fixed monomial vector of the parabolic generator:
/// T fixes `X^{n-1}`, so c T c^{-1} fixes the image of e1 under the
/// conjugator. Case 3 takes a primitive eigenvector of eigenvalue 1 of the
/// image of h; a reflection inverting h can only negate it, so the orbit
/// has at most two elements.
pub fn amenable_witness(kind: &AmenableKind, n: usize) -> Result<WitnessReport> {
    if n < 3 || n % 2 == 0 {
        return Err(Error::BadOddOrder(n));
    }
    match kind {
        AmenableKind::FiniteOrder3 => {
            let g = Mat2::from_i64(0, -1, 1, -1).unwrap();
            debug_assert!(g.mul(&g).mul(&g).is_identity());
            let vector = LatticeVector::basis_vector(n, 0);
            let orbit = finite_orbit_or_inconsistent(&vector, &[sym_power(&g, n)?])?;
            Ok(WitnessReport {
                case_label: "finite_order_3".into(),
                n,
                generators: vec![g],
                vector,
                orbit,
                note: "subgroup of order 3: the whole group is finite, so every orbit is finite"
                    .into(),
            })
        }
        AmenableKind::Parabolic { conjugator } => {
            let p = conjugator.mul(&Mat2::gen_t()).mul(&conjugator.inverse());
            let rep_c = sym_power(conjugator, n)?;
            let e1 = LatticeVector::basis_vector(n, 0);
            let vector = LatticeVector(rep_c.apply(&e1.0)?).primitive_normalized();
            let rep_p = sym_power(&p, n)?;
            if rep_p.apply(&vector.0)? != vector.0 {
                return Err(Error::WitnessVerification(
                    "conjugated monomial vector is not fixed by the parabolic generator".into(),
                ));
            }
            let orbit = finite_orbit_or_inconsistent(&vector, &[rep_p])?;
            Ok(WitnessReport {
                case_label: "parabolic".into(),
                n,
                generators: vec![p],
                vector,
                orbit,
                note: "parabolic generator fixes the conjugated leading monomial vector".into(),
            })
        }
        AmenableKind::HyperbolicOrDihedral { h, reflection } => {
            let cls = classify_element(h);
            if cls.class != ElementClass::Hyperbolic {
                return Err(Error::InconsistentInput(format!(
                    "dihedral case needs hyperbolic h, got {:?} with trace {}",
                    cls.class, cls.trace
                )));
            }
            if let Some(r) = reflection {
                if r.mul(h).mul(&r.inverse()) != h.inverse() {
                    return Err(Error::InconsistentInput(
                        "reflection does not invert h".into(),
                    ));
                }
            }
            let rep_h = sym_power(h, n)?;
            let vector = fixed_integer_vector(&rep_h).ok_or_else(|| {
                Error::WitnessVerification("odd-dimensional image of hyperbolic h must fix a vector".into())
            })?;
            let mut gens2 = vec![h.clone()];
            let mut reps = vec![rep_h];
            if let Some(r) = reflection {
                gens2.push(r.clone());
                reps.push(sym_power(r, n)?);
            }
            let orbit = finite_orbit_or_inconsistent(&vector, &reps)?;
            if orbit.len() > 2 {
                return Err(Error::WitnessVerification(format!(
                    "dihedral orbit has {} elements, expected at most two",
                    orbit.len()
                )));
            }
            Ok(WitnessReport {
                case_label: "hyperbolic_dihedral".into(),
                n,
                generators: gens2,
                vector,
                orbit,
                note: "eigenvalue-1 vector of the image of h; a reflection can only negate it"
                    .into(),
            })
        }
    }
}
