//! Finite-dimensional model of a measured equivalence relation on a finite
//! uniform probability space, normalized 2-cocycles on it, and the twisted
//! relation-algebra operators with their trace.
//!
//! The Hilbert space is spanned by the pairs of the relation, with the inner
//! product weighted by mu(x) = 1/m. The weight is the same for every basis
//! vector, so adjoints are plain conjugate transposes and tau(1) = 1 without
//! extra normalization. "Generated algebra" always means the linear span
//! closed under products and adjoints; at finite dimension the weak closure
//! adds nothing.

use crate::{Error, Result};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// Unit-modulus and identity tolerances for cocycle data and the Lemma
/// identities.
pub const PHASE_TOLERANCE: f64 = 1e-12;

/// Rank tolerance for span and commutant computations.
const SPAN_TOLERANCE: f64 = 1e-9;

/// Equivalence relation on {0..m-1} given by a partition into classes,
/// with the uniform measure.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FiniteRelation {
    size: usize,
    classes: Vec<Vec<usize>>,
    class_of: Vec<usize>,
    pairs: Vec<(usize, usize)>,
    pair_index: BTreeMap<(usize, usize), usize>,
}

impl FiniteRelation {
    pub fn from_classes(size: usize, classes: &[Vec<usize>]) -> Result<FiniteRelation> {
        if size == 0 {
            return Err(Error::ZeroDimension);
        }
        let mut class_of = vec![usize::MAX; size];
        let mut sorted_classes = Vec::with_capacity(classes.len());
        for (k, class) in classes.iter().enumerate() {
            if class.is_empty() {
                return Err(Error::BadPartition);
            }
            let mut sorted = class.clone();
            sorted.sort_unstable();
            sorted.dedup();
            if sorted.len() != class.len() {
                return Err(Error::BadPartition);
            }
            for &x in &sorted {
                if x >= size || class_of[x] != usize::MAX {
                    return Err(Error::BadPartition);
                }
                class_of[x] = k;
            }
            sorted_classes.push(sorted);
        }
        if class_of.iter().any(|&k| k == usize::MAX) {
            return Err(Error::BadPartition);
        }
        let mut pairs = Vec::new();
        for x in 0..size {
            for y in 0..size {
                if class_of[x] == class_of[y] {
                    pairs.push((x, y));
                }
            }
        }
        let pair_index = pairs.iter().enumerate().map(|(i, &p)| (p, i)).collect();
        Ok(FiniteRelation { size, classes: sorted_classes, class_of, pairs, pair_index })
    }

    /// The full relation: a single class containing every point.
    pub fn single_class(size: usize) -> Result<FiniteRelation> {
        FiniteRelation::from_classes(size, &[(0..size).collect()])
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn classes(&self) -> &[Vec<usize>] {
        &self.classes
    }

    pub fn class_of(&self, x: usize) -> usize {
        self.class_of[x]
    }

    pub fn related(&self, x: usize, y: usize) -> bool {
        self.class_of[x] == self.class_of[y]
    }

    /// Basis pairs of the relation in lexicographic order.
    pub fn pairs(&self) -> &[(usize, usize)] {
        &self.pairs
    }

    pub fn pair_count(&self) -> usize {
        self.pairs.len()
    }

    pub fn pair_position(&self, x: usize, y: usize) -> Option<usize> {
        self.pair_index.get(&(x, y)).copied()
    }

    /// Uniform point mass mu(x) = 1/m.
    pub fn point_mass(&self) -> f64 {
        1.0 / self.size as f64
    }
}

/// Normalized 2-cocycle: unit phases on chains x ~ y ~ z with
/// s(x,y,z) = 1 whenever the three points are not pairwise distinct, and
/// the chain identity s(x1,x3,x4)s(x1,x2,x3) = s(x1,x2,x4)s(x2,x3,x4).
/// Both axioms are checked exhaustively on construction.
#[derive(Clone, Debug)]
pub struct TwoCocycle {
    values: BTreeMap<(usize, usize, usize), Complex64>,
}

impl TwoCocycle {
    pub fn new(
        relation: &FiniteRelation,
        values: BTreeMap<(usize, usize, usize), Complex64>,
    ) -> Result<TwoCocycle> {
        for (&(x, y, z), v) in &values {
            if !relation.related(x, y) || !relation.related(y, z) {
                return Err(Error::InconsistentInput(format!(
                    "cocycle value on non-chain ({x},{y},{z})"
                )));
            }
            if (v.norm() - 1.0).abs() > PHASE_TOLERANCE {
                return Err(Error::NonUnimodularCocycle(format!("({x},{y},{z})")));
            }
        }
        let cocycle = TwoCocycle { values };
        cocycle.verify(relation)?;
        Ok(cocycle)
    }

    /// The constant cocycle s = 1.
    pub fn trivial(relation: &FiniteRelation) -> TwoCocycle {
        let mut values = BTreeMap::new();
        for class in relation.classes() {
            for &x in class {
                for &y in class {
                    for &z in class {
                        values.insert((x, y, z), ONE);
                    }
                }
            }
        }
        TwoCocycle { values }
    }

    /// Coboundary s(x,y,z) = b(x,y) b(y,z) / b(x,z) of a unit phase
    /// function with b(x,x) = 1 and b(y,x) = b(x,y)^{-1}; such an s
    /// satisfies both axioms identically, and they are re-verified anyway.
    pub fn coboundary(
        relation: &FiniteRelation,
        b: &BTreeMap<(usize, usize), Complex64>,
    ) -> Result<TwoCocycle> {
        let get = |x: usize, y: usize| -> Result<Complex64> {
            b.get(&(x, y)).copied().ok_or_else(|| {
                Error::InconsistentInput(format!("phase function missing at ({x},{y})"))
            })
        };
        for &(x, y) in relation.pairs() {
            let v = get(x, y)?;
            if (v.norm() - 1.0).abs() > PHASE_TOLERANCE {
                return Err(Error::NonUnimodularCocycle(format!("({x},{y})")));
            }
            if x == y && (v - ONE).norm() > PHASE_TOLERANCE {
                return Err(Error::InconsistentInput(format!(
                    "phase function must be 1 on the diagonal, got {v} at ({x},{x})"
                )));
            }
            if (v * get(y, x)? - ONE).norm() > PHASE_TOLERANCE {
                return Err(Error::InconsistentInput(format!(
                    "phase function is not antisymmetric at ({x},{y})"
                )));
            }
        }
        let mut values = BTreeMap::new();
        for class in relation.classes() {
            for &x in class {
                for &y in class {
                    for &z in class {
                        values.insert((x, y, z), get(x, y)? * get(y, z)? / get(x, z)?);
                    }
                }
            }
        }
        TwoCocycle::new(relation, values)
    }

    pub fn value(&self, x: usize, y: usize, z: usize) -> Complex64 {
        self.values[&(x, y, z)]
    }

    fn verify(&self, relation: &FiniteRelation) -> Result<()> {
        for class in relation.classes() {
            for &x in class {
                for &y in class {
                    for &z in class {
                        let v = self.values.get(&(x, y, z)).ok_or_else(|| {
                            Error::InconsistentInput(format!(
                                "cocycle undefined on chain ({x},{y},{z})"
                            ))
                        })?;
                        let distinct = x != y && y != z && x != z;
                        if !distinct && (v - ONE).norm() > PHASE_TOLERANCE {
                            return Err(Error::CocycleAxiom(format!(
                                "s({x},{y},{z}) = {v} but the points are not pairwise distinct"
                            )));
                        }
                    }
                }
            }
        }
        for class in relation.classes() {
            for &x1 in class {
                for &x2 in class {
                    for &x3 in class {
                        for &x4 in class {
                            let lhs = self.value(x1, x3, x4) * self.value(x1, x2, x3);
                            let rhs = self.value(x1, x2, x4) * self.value(x2, x3, x4);
                            if (lhs - rhs).norm() > PHASE_TOLERANCE {
                                return Err(Error::CocycleAxiom(format!(
                                    "chain ({x1},{x2},{x3},{x4})"
                                )));
                            }
                        }
                    }
                }
            }
        }
        Ok(())
    }
}

/// Class-preserving permutation of the ground set.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FullGroupElem {
    perm: Vec<usize>,
}

impl FullGroupElem {
    pub fn new(relation: &FiniteRelation, perm: Vec<usize>) -> Result<FullGroupElem> {
        let n = relation.size();
        if perm.len() != n {
            return Err(Error::NotAPermutation);
        }
        let mut seen = vec![false; n];
        for &y in &perm {
            if y >= n || seen[y] {
                return Err(Error::NotAPermutation);
            }
            seen[y] = true;
        }
        for (x, &y) in perm.iter().enumerate() {
            if !relation.related(x, y) {
                return Err(Error::NotClassPreserving);
            }
        }
        Ok(FullGroupElem { perm })
    }

    pub fn identity(relation: &FiniteRelation) -> FullGroupElem {
        FullGroupElem { perm: (0..relation.size()).collect() }
    }

    pub fn transposition(relation: &FiniteRelation, x: usize, y: usize) -> Result<FullGroupElem> {
        let mut perm: Vec<usize> = (0..relation.size()).collect();
        if x >= relation.size() || y >= relation.size() {
            return Err(Error::NotAPermutation);
        }
        perm.swap(x, y);
        FullGroupElem::new(relation, perm)
    }

    pub fn apply(&self, x: usize) -> usize {
        self.perm[x]
    }

    pub fn inverse(&self) -> FullGroupElem {
        let mut perm = vec![0usize; self.perm.len()];
        for (x, &y) in self.perm.iter().enumerate() {
            perm[y] = x;
        }
        FullGroupElem { perm }
    }

    /// (self . other)(x) = self(other(x)); class preservation is closed
    /// under composition.
    pub fn compose(&self, other: &FullGroupElem) -> FullGroupElem {
        FullGroupElem { perm: other.perm.iter().map(|&x| self.perm[x]).collect() }
    }

    pub fn fixed_point_count(&self) -> usize {
        self.perm.iter().enumerate().filter(|&(x, &y)| x == y).count()
    }
}

/// Dense operator on the span of the relation pairs.
#[derive(Clone, Debug, PartialEq)]
pub struct RelationOperator {
    dim: usize,
    entries: Vec<Complex64>,
}

impl RelationOperator {
    pub fn zero(dim: usize) -> RelationOperator {
        RelationOperator { dim, entries: vec![ZERO; dim * dim] }
    }

    pub fn identity(dim: usize) -> RelationOperator {
        let mut op = RelationOperator::zero(dim);
        for i in 0..dim {
            op.entries[i * dim + i] = ONE;
        }
        op
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn entry(&self, row: usize, col: usize) -> Complex64 {
        self.entries[row * self.dim + col]
    }

    pub fn set_entry(&mut self, row: usize, col: usize, value: Complex64) {
        self.entries[row * self.dim + col] = value;
    }

    pub fn mul(&self, other: &RelationOperator) -> RelationOperator {
        assert_eq!(self.dim, other.dim, "operator dimensions must agree");
        let n = self.dim;
        let mut out = RelationOperator::zero(n);
        for i in 0..n {
            for k in 0..n {
                let lhs = self.entries[i * n + k];
                if lhs == ZERO {
                    continue;
                }
                for j in 0..n {
                    out.entries[i * n + j] += lhs * other.entries[k * n + j];
                }
            }
        }
        out
    }

    /// Conjugate transpose; this is the Hilbert-space adjoint because every
    /// basis vector carries the same weight 1/m.
    pub fn adjoint(&self) -> RelationOperator {
        let n = self.dim;
        let mut out = RelationOperator::zero(n);
        for i in 0..n {
            for j in 0..n {
                out.entries[j * n + i] = self.entries[i * n + j].conj();
            }
        }
        out
    }

    pub fn sub(&self, other: &RelationOperator) -> RelationOperator {
        assert_eq!(self.dim, other.dim, "operator dimensions must agree");
        let entries = self
            .entries
            .iter()
            .zip(other.entries.iter())
            .map(|(a, b)| a - b)
            .collect();
        RelationOperator { dim: self.dim, entries }
    }

    pub fn max_abs_entry(&self) -> f64 {
        self.entries.iter().map(|c| c.norm()).fold(0.0, f64::max)
    }

    pub fn max_abs_diff(&self, other: &RelationOperator) -> f64 {
        self.sub(other).max_abs_entry()
    }

    fn vectorized(&self) -> Vec<Complex64> {
        self.entries.clone()
    }
}

/// Twisted translation operator: the entry at row (x,z), column
/// (phi^{-1}(x), z) is s(x, phi^{-1}(x), z).
pub fn build_u(
    relation: &FiniteRelation,
    phi: &FullGroupElem,
    s: &TwoCocycle,
) -> RelationOperator {
    let n = relation.pair_count();
    let mut op = RelationOperator::zero(n);
    let inv = phi.inverse();
    for (row, &(x, z)) in relation.pairs().iter().enumerate() {
        let y = inv.apply(x);
        let col = relation.pair_position(y, z).expect("phi preserves classes");
        op.set_entry(row, col, s.value(x, y, z));
    }
    op
}

/// Multiplication operator: diagonal with a(x) at the pair (x,z).
pub fn build_mult(relation: &FiniteRelation, a: &[Complex64]) -> Result<RelationOperator> {
    if a.len() != relation.size() {
        return Err(Error::BadPointFunction);
    }
    let n = relation.pair_count();
    let mut op = RelationOperator::zero(n);
    for (row, &(x, _)) in relation.pairs().iter().enumerate() {
        op.set_entry(row, row, a[x]);
    }
    Ok(op)
}

/// Maximal entrywise deviations of the three structure identities:
/// (A) u_theta u_phi = mult(sigma) u_{theta phi} with
///     sigma(x) = s(x, theta^{-1}(x), (theta phi)^{-1}(x)),
/// (B) u_theta^* = u_{theta^{-1}},
/// (C) u_phi mult(a) u_phi^* = mult(a . phi^{-1}).
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct RelationReport {
    pub composition_deviation: f64,
    pub adjoint_deviation: f64,
    pub covariance_deviation: f64,
}

impl RelationReport {
    pub fn max_deviation(&self) -> f64 {
        self.composition_deviation
            .max(self.adjoint_deviation)
            .max(self.covariance_deviation)
    }
}

pub fn verify_relations(
    relation: &FiniteRelation,
    s: &TwoCocycle,
    theta: &FullGroupElem,
    phi: &FullGroupElem,
    a: &[Complex64],
) -> Result<RelationReport> {
    let u_theta = build_u(relation, theta, s);
    let u_phi = build_u(relation, phi, s);
    let theta_phi = theta.compose(phi);
    let u_theta_phi = build_u(relation, &theta_phi, s);

    let theta_inv = theta.inverse();
    let theta_phi_inv = theta_phi.inverse();
    let sigma: Vec<Complex64> = (0..relation.size())
        .map(|x| s.value(x, theta_inv.apply(x), theta_phi_inv.apply(x)))
        .collect();
    let composition_deviation = u_theta
        .mul(&u_phi)
        .max_abs_diff(&build_mult(relation, &sigma)?.mul(&u_theta_phi));

    let adjoint_deviation =
        u_theta.adjoint().max_abs_diff(&build_u(relation, &theta_inv, s));

    if a.len() != relation.size() {
        return Err(Error::BadPointFunction);
    }
    let phi_inv = phi.inverse();
    let pulled: Vec<Complex64> = (0..relation.size()).map(|x| a[phi_inv.apply(x)]).collect();
    let covariance_deviation = u_phi
        .mul(&build_mult(relation, a)?)
        .mul(&u_phi.adjoint())
        .max_abs_diff(&build_mult(relation, &pulled)?);

    Ok(RelationReport { composition_deviation, adjoint_deviation, covariance_deviation })
}

/// tau(y) = <y 1_Delta, 1_Delta> with 1_Delta the indicator of the diagonal
/// pairs; tau(1) = 1 and tau(u_phi) is the measure of the fixed-point set.
pub fn trace(relation: &FiniteRelation, y: &RelationOperator) -> Result<Complex64> {
    if y.dim() != relation.pair_count() {
        return Err(Error::DimensionMismatch {
            expected: relation.pair_count(),
            got: y.dim(),
        });
    }
    let diagonal: Vec<usize> = (0..relation.size())
        .map(|x| relation.pair_position(x, x).expect("diagonal pair"))
        .collect();
    let mut acc = ZERO;
    for &row in &diagonal {
        for &col in &diagonal {
            acc += y.entry(row, col);
        }
    }
    Ok(acc * relation.point_mass())
}

/// Span of operators, closed under products and adjoints, with an
/// orthonormal vectorized basis for rank questions.
pub struct AlgebraSpan {
    ops: Vec<RelationOperator>,
    ortho: Vec<Vec<Complex64>>,
}

impl AlgebraSpan {
    pub fn dimension(&self) -> usize {
        self.ops.len()
    }

    pub fn basis(&self) -> &[RelationOperator] {
        &self.ops
    }

    fn try_insert(&mut self, op: &RelationOperator) -> bool {
        let mut v = op.vectorized();
        let norm = |v: &[Complex64]| v.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
        let original = norm(&v);
        if original == 0.0 {
            return false;
        }
        for _ in 0..2 {
            for b in &self.ortho {
                let proj: Complex64 =
                    v.iter().zip(b.iter()).map(|(x, y)| x * y.conj()).sum();
                for (x, y) in v.iter_mut().zip(b.iter()) {
                    *x -= proj * y;
                }
            }
        }
        let residual = norm(&v);
        if residual <= SPAN_TOLERANCE * original.max(1.0) {
            return false;
        }
        for x in v.iter_mut() {
            *x /= residual;
        }
        self.ortho.push(v);
        self.ops.push(op.clone());
        true
    }
}

/// Span closure of {identity, point indicators, class transpositions}
/// under products and adjoints.
pub fn generated_algebra(relation: &FiniteRelation, s: &TwoCocycle) -> Result<AlgebraSpan> {
    let mut gens = vec![RelationOperator::identity(relation.pair_count())];
    for x in 0..relation.size() {
        let mut indicator = vec![ZERO; relation.size()];
        indicator[x] = ONE;
        gens.push(build_mult(relation, &indicator)?);
    }
    for class in relation.classes() {
        for (i, &x) in class.iter().enumerate() {
            for &y in class.iter().skip(i + 1) {
                let t = FullGroupElem::transposition(relation, x, y)?;
                gens.push(build_u(relation, &t, s));
            }
        }
    }
    let mut span = AlgebraSpan { ops: Vec::new(), ortho: Vec::new() };
    for g in &gens {
        span.try_insert(g);
        span.try_insert(&g.adjoint());
    }
    loop {
        let current = span.ops.clone();
        let mut grew = false;
        for a in &current {
            for b in &current {
                let p = a.mul(b);
                if span.try_insert(&p) {
                    grew = true;
                }
                if span.try_insert(&p.adjoint()) {
                    grew = true;
                }
            }
        }
        if !grew {
            return Ok(span);
        }
    }
}

/// Indicator multiplication operators, spanning the diagonal subalgebra.
pub fn diagonal_generators(relation: &FiniteRelation) -> Result<Vec<RelationOperator>> {
    (0..relation.size())
        .map(|x| {
            let mut indicator = vec![ZERO; relation.size()];
            indicator[x] = ONE;
            build_mult(relation, &indicator)
        })
        .collect()
}

/// Dimension of {T in span : [T, G] = 0 for all supplied G}, found as the
/// nullity of the stacked commutator equations in the span's coordinates.
pub fn commutant_dimension_in(span: &AlgebraSpan, constraints: &[RelationOperator]) -> usize {
    let a_dim = span.dimension();
    if a_dim == 0 {
        return 0;
    }
    let mut rows: Vec<Vec<Complex64>> = Vec::new();
    for g in constraints {
        let commutators: Vec<Vec<Complex64>> = span
            .ops
            .iter()
            .map(|b| b.mul(g).sub(&g.mul(b)).vectorized())
            .collect();
        let entries = commutators[0].len();
        for e in 0..entries {
            rows.push(commutators.iter().map(|c| c[e]).collect());
        }
    }
    nullity(rows, a_dim)
}

/// Dimension of the center of the spanned algebra.
pub fn center_dimension(span: &AlgebraSpan) -> usize {
    commutant_dimension_in(span, &span.ops.clone())
}

/// True when the diagonal subalgebra is maximal abelian in the generated
/// algebra: its relative commutant is no larger than itself.
pub fn cartan_is_maximal_abelian(relation: &FiniteRelation, span: &AlgebraSpan) -> Result<bool> {
    let diag = diagonal_generators(relation)?;
    Ok(commutant_dimension_in(span, &diag) == relation.size())
}

/// Nullity of a complex matrix by Gaussian elimination with partial
/// pivoting; columns is the number of unknowns.
fn nullity(mut rows: Vec<Vec<Complex64>>, columns: usize) -> usize {
    let scale = rows
        .iter()
        .flat_map(|r| r.iter())
        .map(|c| c.norm())
        .fold(0.0, f64::max)
        .max(1.0);
    let tol = SPAN_TOLERANCE * scale;
    let mut rank = 0;
    let mut row = 0;
    for col in 0..columns {
        let mut best = row;
        let mut best_val = 0.0;
        for r in row..rows.len() {
            let v = rows[r][col].norm();
            if v > best_val {
                best_val = v;
                best = r;
            }
        }
        if best_val <= tol {
            continue;
        }
        rows.swap(row, best);
        let pivot = rows[row][col];
        for r in 0..rows.len() {
            if r == row {
                continue;
            }
            let factor = rows[r][col] / pivot;
            if factor.norm() == 0.0 {
                continue;
            }
            for c in col..columns {
                let delta = factor * rows[row][c];
                rows[r][c] -= delta;
            }
        }
        rank += 1;
        row += 1;
        if row == rows.len() {
            break;
        }
    }
    columns - rank
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    fn phase(rng: &mut StdRng) -> Complex64 {
        Complex64::from_polar(1.0, rng.gen_range(0.0..std::f64::consts::TAU))
    }

    fn random_coboundary(
        rng: &mut StdRng,
        relation: &FiniteRelation,
    ) -> TwoCocycle {
        let mut b = BTreeMap::new();
        for &(x, y) in relation.pairs() {
            if x == y {
                b.insert((x, y), ONE);
            } else if x < y {
                let v = phase(rng);
                b.insert((x, y), v);
                b.insert((y, x), v.conj());
            }
        }
        TwoCocycle::coboundary(relation, &b).unwrap()
    }

    fn random_full_group_elem(rng: &mut StdRng, relation: &FiniteRelation) -> FullGroupElem {
        let mut perm: Vec<usize> = (0..relation.size()).collect();
        for class in relation.classes() {
            let mut shuffled = class.clone();
            for i in (1..shuffled.len()).rev() {
                shuffled.swap(i, rng.gen_range(0..=i));
            }
            for (&src, &dst) in class.iter().zip(shuffled.iter()) {
                perm[src] = dst;
            }
        }
        FullGroupElem::new(relation, perm).unwrap()
    }

    #[test]
    fn partitions_are_validated() {
        assert!(FiniteRelation::from_classes(3, &[vec![0, 1], vec![2]]).is_ok());
        assert!(matches!(
            FiniteRelation::from_classes(3, &[vec![0, 1], vec![1, 2]]),
            Err(Error::BadPartition)
        ));
        assert!(matches!(
            FiniteRelation::from_classes(3, &[vec![0, 1]]),
            Err(Error::BadPartition)
        ));
        assert!(matches!(
            FiniteRelation::from_classes(2, &[vec![0, 1, 5]]),
            Err(Error::BadPartition)
        ));
        assert!(matches!(FiniteRelation::from_classes(0, &[]), Err(Error::ZeroDimension)));
    }

    #[test]
    fn relation_is_an_equivalence_and_measure_is_symmetric() {
        let relation = FiniteRelation::from_classes(5, &[vec![0, 2, 4], vec![1, 3]]).unwrap();
        for x in 0..5 {
            assert!(relation.related(x, x));
            for y in 0..5 {
                assert_eq!(relation.related(x, y), relation.related(y, x));
                for z in 0..5 {
                    if relation.related(x, y) && relation.related(y, z) {
                        assert!(relation.related(x, z));
                    }
                }
            }
        }
        // Both marginal sums of any function on R agree (uniform measure).
        let mut rng = StdRng::seed_from_u64(60);
        let f: BTreeMap<(usize, usize), f64> = relation
            .pairs()
            .iter()
            .map(|&p| (p, rng.gen_range(-1.0..1.0)))
            .collect();
        let by_rows: f64 = (0..5)
            .map(|x| (0..5).filter(|&y| relation.related(x, y)).map(|y| f[&(x, y)]).sum::<f64>())
            .sum();
        let by_cols: f64 = (0..5)
            .map(|y| (0..5).filter(|&x| relation.related(x, y)).map(|x| f[&(x, y)]).sum::<f64>())
            .sum();
        assert!((by_rows - by_cols).abs() < 1e-12);
        assert_eq!(relation.pair_count(), 9 + 4);
    }

    #[test]
    fn identity_element_gives_the_identity_operator() {
        let relation = FiniteRelation::single_class(4).unwrap();
        let s = TwoCocycle::trivial(&relation);
        let u = build_u(&relation, &FullGroupElem::identity(&relation), &s);
        assert_eq!(u.max_abs_diff(&RelationOperator::identity(relation.pair_count())), 0.0);
    }

    #[test]
    fn transpositions_with_trivial_cocycle_are_permutation_matrices() {
        let relation = FiniteRelation::single_class(3).unwrap();
        let s = TwoCocycle::trivial(&relation);
        let t = FullGroupElem::transposition(&relation, 0, 1).unwrap();
        let u = build_u(&relation, &t, &s);
        for row in 0..u.dim() {
            let mut ones = 0;
            for col in 0..u.dim() {
                let v = u.entry(row, col);
                assert!(v == ZERO || v == ONE);
                if v == ONE {
                    ones += 1;
                }
            }
            assert_eq!(ones, 1);
        }
        assert_eq!(u.mul(&u).max_abs_diff(&RelationOperator::identity(u.dim())), 0.0);
    }

    #[test]
    fn coboundaries_pass_the_exhaustive_axioms() {
        let relation = FiniteRelation::single_class(4).unwrap();
        let mut rng = StdRng::seed_from_u64(61);
        let _ = random_coboundary(&mut rng, &relation);
        // The explicit roots-of-unity phase function is also a coboundary.
        let m = relation.size() as f64;
        let mut b = BTreeMap::new();
        for &(x, y) in relation.pairs() {
            let arg = std::f64::consts::TAU * (x as f64 - y as f64) / m;
            b.insert((x, y), Complex64::from_polar(1.0, arg));
        }
        let s = TwoCocycle::coboundary(&relation, &b).unwrap();
        assert!((s.value(0, 1, 2).norm() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn bad_phase_functions_are_rejected() {
        let relation = FiniteRelation::single_class(2).unwrap();
        let mut not_unit = BTreeMap::new();
        not_unit.insert((0usize, 0usize), ONE);
        not_unit.insert((1, 1), ONE);
        not_unit.insert((0, 1), Complex64::new(2.0, 0.0));
        not_unit.insert((1, 0), Complex64::new(0.5, 0.0));
        assert!(matches!(
            TwoCocycle::coboundary(&relation, &not_unit),
            Err(Error::NonUnimodularCocycle(_))
        ));
        let mut skew = BTreeMap::new();
        skew.insert((0usize, 0usize), ONE);
        skew.insert((1, 1), ONE);
        skew.insert((0, 1), Complex64::from_polar(1.0, 0.3));
        skew.insert((1, 0), Complex64::from_polar(1.0, 0.4));
        assert!(matches!(
            TwoCocycle::coboundary(&relation, &skew),
            Err(Error::InconsistentInput(_))
        ));
    }

    #[test]
    fn direct_cocycle_input_is_axiom_checked() {
        let relation = FiniteRelation::single_class(2).unwrap();
        let mut values = BTreeMap::new();
        for &(x, y) in relation.pairs() {
            for z in 0..2 {
                values.insert((x, y, z), ONE);
            }
        }
        values.insert((0, 0, 1), Complex64::from_polar(1.0, 0.2));
        assert!(matches!(
            TwoCocycle::new(&relation, values),
            Err(Error::CocycleAxiom(_))
        ));
    }

    #[test]
    fn twisted_translations_are_unitary() {
        let mut rng = StdRng::seed_from_u64(62);
        let relation = FiniteRelation::from_classes(5, &[vec![0, 1, 2], vec![3, 4]]).unwrap();
        for _ in 0..10 {
            let s = random_coboundary(&mut rng, &relation);
            let phi = random_full_group_elem(&mut rng, &relation);
            let u = build_u(&relation, &phi, &s);
            let dev = u
                .adjoint()
                .mul(&u)
                .max_abs_diff(&RelationOperator::identity(u.dim()));
            assert!(dev < 1e-12, "unitarity deviation {dev}");
        }
    }

    #[test]
    fn structure_identities_hold_for_random_data() {
        let mut rng = StdRng::seed_from_u64(63);
        let relation = FiniteRelation::single_class(5).unwrap();
        for _ in 0..20 {
            let s = random_coboundary(&mut rng, &relation);
            let theta = random_full_group_elem(&mut rng, &relation);
            let phi = random_full_group_elem(&mut rng, &relation);
            let a: Vec<Complex64> = (0..5)
                .map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
                .collect();
            let report = verify_relations(&relation, &s, &theta, &phi, &a).unwrap();
            assert!(report.max_deviation() < 1e-12, "deviation {:?}", report);
        }
    }

    #[test]
    fn inverse_pairs_compose_to_the_identity() {
        let mut rng = StdRng::seed_from_u64(64);
        let relation = FiniteRelation::single_class(4).unwrap();
        let s = random_coboundary(&mut rng, &relation);
        let phi = random_full_group_elem(&mut rng, &relation);
        let product = build_u(&relation, &phi.inverse(), &s).mul(&build_u(&relation, &phi, &s));
        let dev = product.max_abs_diff(&RelationOperator::identity(product.dim()));
        assert!(dev < 1e-12);
    }

    #[test]
    fn trace_is_normalized_and_positive() {
        let relation = FiniteRelation::from_classes(4, &[vec![0, 1, 2], vec![3]]).unwrap();
        let identity = RelationOperator::identity(relation.pair_count());
        assert!((trace(&relation, &identity).unwrap() - ONE).norm() < 1e-14);
        let mut rng = StdRng::seed_from_u64(65);
        let s = random_coboundary(&mut rng, &relation);
        for _ in 0..10 {
            let phi = random_full_group_elem(&mut rng, &relation);
            let u = build_u(&relation, &phi, &s);
            let expected = phi.fixed_point_count() as f64 / relation.size() as f64;
            assert!((trace(&relation, &u).unwrap() - Complex64::new(expected, 0.0)).norm() < 1e-13);
            let positive = trace(&relation, &u.adjoint().mul(&u)).unwrap();
            assert!(positive.im.abs() < 1e-13 && positive.re >= -1e-13);
        }
    }

    #[test]
    fn trace_of_multiplication_operators_is_the_mean() {
        let relation = FiniteRelation::single_class(4).unwrap();
        let a: Vec<Complex64> = (0..4).map(|k| Complex64::new(k as f64, 1.0)).collect();
        let op = build_mult(&relation, &a).unwrap();
        let mean = a.iter().sum::<Complex64>() / 4.0;
        assert!((trace(&relation, &op).unwrap() - mean).norm() < 1e-14);
        // Indicator of a class is a projection.
        let relation2 = FiniteRelation::from_classes(4, &[vec![0, 1], vec![2, 3]]).unwrap();
        let indicator: Vec<Complex64> = vec![ONE, ONE, ZERO, ZERO];
        let p = build_mult(&relation2, &indicator).unwrap();
        assert_eq!(p.mul(&p).max_abs_diff(&p), 0.0);
        assert_eq!(p.adjoint().max_abs_diff(&p), 0.0);
        assert_eq!(p.max_abs_entry(), 1.0);
    }

    #[test]
    fn trace_is_tracial_on_random_words() {
        let mut rng = StdRng::seed_from_u64(66);
        let relation = FiniteRelation::from_classes(5, &[vec![0, 1, 4], vec![2, 3]]).unwrap();
        let s = random_coboundary(&mut rng, &relation);
        for _ in 0..50 {
            let y = random_generator_word(&mut rng, &relation, &s);
            let z = random_generator_word(&mut rng, &relation, &s);
            let yz = trace(&relation, &y.mul(&z)).unwrap();
            let zy = trace(&relation, &z.mul(&y)).unwrap();
            assert!((yz - zy).norm() < 1e-12, "traciality broke: {yz} vs {zy}");
        }
    }

    fn random_generator_word(
        rng: &mut StdRng,
        relation: &FiniteRelation,
        s: &TwoCocycle,
    ) -> RelationOperator {
        let mut op = RelationOperator::identity(relation.pair_count());
        for _ in 0..rng.gen_range(1..=3) {
            let next = if rng.gen_bool(0.5) {
                let phi = random_full_group_elem(rng, relation);
                build_u(relation, &phi, s)
            } else {
                let a: Vec<Complex64> = (0..relation.size())
                    .map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
                    .collect();
                build_mult(relation, &a).unwrap()
            };
            op = op.mul(&next);
        }
        op
    }

    #[test]
    fn single_class_algebra_has_full_matrix_dimension_and_a_cartan_diagonal() {
        let mut rng = StdRng::seed_from_u64(67);
        for m in 2..=5usize {
            let relation = FiniteRelation::single_class(m).unwrap();
            let s = if m % 2 == 0 {
                TwoCocycle::trivial(&relation)
            } else {
                random_coboundary(&mut rng, &relation)
            };
            let span = generated_algebra(&relation, &s).unwrap();
            assert_eq!(span.dimension(), m * m, "algebra dimension at m = {m}");
            assert!(cartan_is_maximal_abelian(&relation, &span).unwrap());
            assert_eq!(center_dimension(&span), 1);
        }
    }

    #[test]
    fn center_dimension_counts_classes() {
        let relation = FiniteRelation::from_classes(5, &[vec![0, 1], vec![2, 3], vec![4]]).unwrap();
        let s = TwoCocycle::trivial(&relation);
        let span = generated_algebra(&relation, &s).unwrap();
        assert_eq!(span.dimension(), 4 + 4 + 1);
        assert_eq!(center_dimension(&span), 3);
        let single = FiniteRelation::single_class(4).unwrap();
        let span_single =
            generated_algebra(&single, &TwoCocycle::trivial(&single)).unwrap();
        assert_eq!(center_dimension(&span_single), 1);
    }

    #[test]
    fn cocycle_twist_does_not_change_algebra_dimensions() {
        let mut rng = StdRng::seed_from_u64(68);
        let relation = FiniteRelation::from_classes(4, &[vec![0, 1, 2], vec![3]]).unwrap();
        let trivial_span =
            generated_algebra(&relation, &TwoCocycle::trivial(&relation)).unwrap();
        let twisted_span =
            generated_algebra(&relation, &random_coboundary(&mut rng, &relation)).unwrap();
        assert_eq!(trivial_span.dimension(), twisted_span.dimension());
        assert_eq!(center_dimension(&trivial_span), center_dimension(&twisted_span));
    }

    #[test]
    fn operator_dimension_mismatches_are_reported() {
        let relation = FiniteRelation::single_class(3).unwrap();
        let wrong = RelationOperator::identity(4);
        assert!(matches!(
            trace(&relation, &wrong),
            Err(Error::DimensionMismatch { .. })
        ));
        assert!(matches!(
            build_mult(&relation, &[ONE]),
            Err(Error::BadPointFunction)
        ));
    }
}
