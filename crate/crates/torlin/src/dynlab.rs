//! Orbit simulation for the linear torus action with equidistribution
//! diagnostics: Weyl averages, box discrepancy, invariant-character
//! witnesses, and empirical checks of the product-measure correlation
//! conditions.
//!
//! Floating orbits reduce coordinates with `rem_euclid` and accumulate
//! statistics in compensated sums. Rational orbits are exact: an integer
//! matrix never grows the common denominator, so the state space is finite
//! and eventual periodicity is detected by first repeat.

use crate::ergocert::{classify_element, fixed_integer_vector, ElementClass, LatticeVector};
use crate::symrep::{sym_power, Mat2, RepMatrix};
use crate::{Error, Result};
use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::Ratio;
use num_traits::{Signed, ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use std::collections::BTreeMap;
use std::f64::consts::TAU;

type Rational = Ratio<BigInt>;

/// Largest exact rational denominator accepted for a start point.
pub const DENOMINATOR_CAP: u64 = 1_000_000;

/// Per-orbit constancy tolerance for an invariant character (float mode).
pub const CONSTANCY_TOLERANCE: f64 = 1e-6;

/// Required pairwise gap between per-start Birkhoff averages in a
/// non-ergodicity witness.
pub const PAIRWISE_GAP: f64 = 0.1;

/// Weight-sum tolerance for empirical measures.
pub const MASS_TOLERANCE: f64 = 1e-9;

const MAX_GRID_POINTS: usize = 10_000_000;

/// Point of the n-torus with coordinates in [0,1), floating or exact.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum TorusPoint {
    Float(Vec<f64>),
    Rational(#[serde(with = "crate::serial::ratio_vec")] Vec<Rational>),
}

impl TorusPoint {
    pub fn float(coords: Vec<f64>) -> Result<TorusPoint> {
        if coords.is_empty() {
            return Err(Error::ZeroDimension);
        }
        if coords.iter().any(|c| !c.is_finite()) {
            return Err(Error::InconsistentInput("non-finite torus coordinate".into()));
        }
        Ok(TorusPoint::Float(coords.into_iter().map(reduce_f64).collect()))
    }

    pub fn rational(coords: Vec<Rational>) -> Result<TorusPoint> {
        if coords.is_empty() {
            return Err(Error::ZeroDimension);
        }
        let cap = BigInt::from(DENOMINATOR_CAP);
        let reduced: Vec<Rational> = coords.iter().map(reduce_rational).collect();
        for c in &reduced {
            if c.denom() > &cap {
                return Err(Error::DenominatorTooLarge(c.denom().to_string()));
            }
        }
        Ok(TorusPoint::Rational(reduced))
    }

    pub fn rational_from_i64(coords: &[(i64, i64)]) -> Result<TorusPoint> {
        TorusPoint::rational(
            coords
                .iter()
                .map(|&(p, q)| Rational::new(BigInt::from(p), BigInt::from(q)))
                .collect(),
        )
    }

    pub fn zero_float(dim: usize) -> Result<TorusPoint> {
        TorusPoint::float(vec![0.0; dim])
    }

    pub fn dim(&self) -> usize {
        match self {
            TorusPoint::Float(c) => c.len(),
            TorusPoint::Rational(c) => c.len(),
        }
    }

    pub fn is_rational(&self) -> bool {
        matches!(self, TorusPoint::Rational(_))
    }

    /// Coordinates as floats, exact values rounded.
    pub fn float_coords(&self) -> Vec<f64> {
        match self {
            TorusPoint::Float(c) => c.clone(),
            TorusPoint::Rational(c) => {
                c.iter().map(|r| r.to_f64().expect("reduced rational fits in f64")).collect()
            }
        }
    }
}

fn reduce_f64(c: f64) -> f64 {
    let r = c.rem_euclid(1.0);
    // rem_euclid of a tiny negative rounds up to 1.0; fold it back.
    if r >= 1.0 {
        0.0
    } else {
        r
    }
}

fn reduce_rational(c: &Rational) -> Rational {
    c - c.floor()
}

fn big_to_f64(x: &BigInt) -> Result<f64> {
    if x.abs() > BigInt::from(1u64 << 53) {
        return Err(Error::EntryTooLarge);
    }
    Ok(x.to_f64().expect("bounded integer fits in f64"))
}

fn lattice_to_f64(v: &LatticeVector) -> Result<Vec<f64>> {
    v.0.iter().map(big_to_f64).collect()
}

/// Eventual-periodicity certificate for an exact orbit: the point at
/// `preperiod` recurs every `period` steps.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct OrbitPeriod {
    pub preperiod: usize,
    pub period: usize,
}

/// A simulated orbit x_{k+1} = M x_k mod 1 of fixed length.
#[derive(Clone, Debug)]
pub struct OrbitTrace {
    matrix: RepMatrix,
    points: Vec<TorusPoint>,
    period: Option<OrbitPeriod>,
}

impl OrbitTrace {
    pub fn matrix(&self) -> &RepMatrix {
        &self.matrix
    }

    pub fn start(&self) -> &TorusPoint {
        &self.points[0]
    }

    /// All K+1 visited points, starting with x_0.
    pub fn points(&self) -> &[TorusPoint] {
        &self.points
    }

    pub fn steps(&self) -> usize {
        self.points.len() - 1
    }

    /// Exact recurrence data; only rational orbits report one.
    pub fn period(&self) -> Option<OrbitPeriod> {
        self.period
    }
}

/// Iterates the induced map for `steps` steps. Rational starts stay exact
/// (the denominator is invariant under an integer matrix) and record their
/// first recurrence.
pub fn iterate(m: &RepMatrix, x0: &TorusPoint, steps: usize) -> Result<OrbitTrace> {
    if m.dim() != x0.dim() {
        return Err(Error::DimensionMismatch { expected: m.dim(), got: x0.dim() });
    }
    match x0 {
        TorusPoint::Float(coords) => iterate_float(m, coords, steps),
        TorusPoint::Rational(coords) => iterate_rational(m, coords, steps),
    }
}

fn iterate_float(m: &RepMatrix, x0: &[f64], steps: usize) -> Result<OrbitTrace> {
    let dim = m.dim();
    let mut rows = vec![vec![0.0; dim]; dim];
    for i in 0..dim {
        for j in 0..dim {
            rows[i][j] = big_to_f64(m.get(i, j))?;
        }
    }
    let mut points = Vec::with_capacity(steps + 1);
    let mut current: Vec<f64> = x0.to_vec();
    points.push(TorusPoint::Float(current.clone()));
    for _ in 0..steps {
        let mut next = vec![0.0; dim];
        for i in 0..dim {
            let mut acc = 0.0;
            for j in 0..dim {
                acc += rows[i][j] * current[j];
            }
            next[i] = reduce_f64(acc);
        }
        points.push(TorusPoint::Float(next.clone()));
        current = next;
    }
    Ok(OrbitTrace { matrix: m.clone(), points, period: None })
}

fn iterate_rational(m: &RepMatrix, x0: &[Rational], steps: usize) -> Result<OrbitTrace> {
    let dim = m.dim();
    let mut points = Vec::with_capacity(steps + 1);
    let mut seen: BTreeMap<Vec<Rational>, usize> = BTreeMap::new();
    let mut current: Vec<Rational> = x0.to_vec();
    let mut period = None;
    points.push(TorusPoint::Rational(current.clone()));
    seen.insert(current.clone(), 0);
    for k in 1..=steps {
        if let Some(p) = period {
            // Once the cycle is known the tail is a copy of earlier points.
            let OrbitPeriod { preperiod, period } = p;
            let idx = preperiod + (k - preperiod) % period;
            points.push(points[idx].clone());
            continue;
        }
        let mut next = vec![Rational::zero(); dim];
        for (i, slot) in next.iter_mut().enumerate() {
            let mut acc = Rational::zero();
            for (j, coord) in current.iter().enumerate() {
                acc += Rational::from_integer(m.get(i, j).clone()) * coord;
            }
            *slot = reduce_rational(&acc);
        }
        points.push(TorusPoint::Rational(next.clone()));
        if let Some(&first) = seen.get(&next) {
            period = Some(OrbitPeriod { preperiod: first, period: k - first });
        } else {
            seen.insert(next.clone(), k);
        }
        current = next;
    }
    Ok(OrbitTrace { matrix: m.clone(), points, period })
}

#[derive(Clone, Copy, Default)]
struct Kahan {
    sum: f64,
    carry: f64,
}

impl Kahan {
    fn add(&mut self, x: f64) {
        let y = x - self.carry;
        let t = self.sum + y;
        self.carry = (t - self.sum) - y;
        self.sum = t;
    }

    fn value(self) -> f64 {
        self.sum
    }
}

#[derive(Clone, Copy, Default)]
struct KahanComplex {
    re: Kahan,
    im: Kahan,
}

impl KahanComplex {
    fn add(&mut self, z: Complex64) {
        self.re.add(z.re);
        self.im.add(z.im);
    }

    fn value(self) -> Complex64 {
        Complex64::new(self.re.value(), self.im.value())
    }
}

fn character_value(v: &[f64], x: &TorusPoint) -> Complex64 {
    let phase = match x {
        TorusPoint::Float(c) => v.iter().zip(c.iter()).map(|(a, b)| a * b).sum::<f64>(),
        TorusPoint::Rational(c) => v
            .iter()
            .zip(c.iter())
            .map(|(a, b)| a * b.to_f64().expect("reduced rational fits in f64"))
            .sum::<f64>(),
    };
    Complex64::from_polar(1.0, TAU * phase)
}

/// Birkhoff average of the character chi_v over the whole trace, with
/// compensated summation. The zero vector gives the constant character,
/// so the average is exactly 1.
pub fn weyl_average(trace: &OrbitTrace, v: &LatticeVector) -> Result<Complex64> {
    if v.dim() != trace.start().dim() {
        return Err(Error::DimensionMismatch { expected: trace.start().dim(), got: v.dim() });
    }
    if v.is_zero() {
        return Ok(Complex64::new(1.0, 0.0));
    }
    let vf = lattice_to_f64(v)?;
    let mut acc = KahanComplex::default();
    for x in trace.points() {
        acc.add(character_value(&vf, x));
    }
    Ok(acc.value() / trace.points().len() as f64)
}

/// Birkhoff average together with the maximal deviation of the character
/// from its value at the start.
fn character_statistics(trace: &OrbitTrace, vf: &[f64]) -> (Complex64, f64) {
    let mut acc = KahanComplex::default();
    let first = character_value(vf, trace.start());
    let mut deviation = 0.0f64;
    for x in trace.points() {
        let value = character_value(vf, x);
        acc.add(value);
        deviation = deviation.max((value - first).norm());
    }
    (acc.value() / trace.points().len() as f64, deviation)
}

#[derive(Clone, Debug, Serialize)]
pub struct StartAverage {
    pub start: Vec<f64>,
    pub average: Complex64,
    pub orbit_deviation: f64,
}

/// Non-ergodicity witness: a nonzero lattice vector fixed by the transpose
/// makes chi_v an invariant observable, so its Birkhoff average depends on
/// the start point instead of collapsing to the space average.
#[derive(Clone, Debug, Serialize)]
pub struct CharacterWitnessReport {
    pub seed: u64,
    pub vector: LatticeVector,
    pub starts: Vec<StartAverage>,
    pub min_pairwise_gap: f64,
    pub max_orbit_deviation: f64,
    pub passes: bool,
}

/// Demonstrates non-ergodicity of the degree-(n-1) action of a hyperbolic
/// element for odd n: chi_v with sym_power(h,n)^T v = v is constant along
/// every orbit while its value separates seeded random starts.
pub fn invariant_character_witness(
    h: &Mat2,
    n: usize,
    starts: usize,
    steps: usize,
    seed: u64,
) -> Result<CharacterWitnessReport> {
    if n % 2 == 0 {
        return Err(Error::BadOddOrder(n));
    }
    if classify_element(h).class != ElementClass::Hyperbolic {
        return Err(Error::NotHyperbolic(format!("trace {}", h.trace())));
    }
    if starts < 2 {
        return Err(Error::InconsistentInput("need at least two start points".into()));
    }
    // Pairwise-separated values exist on the unit circle only up to ~40.
    if starts > 40 {
        return Err(Error::InconsistentInput(format!(
            "cannot separate {starts} start values on the circle"
        )));
    }
    let rep = sym_power(h, n)?;
    let vector = fixed_integer_vector(&rep.transpose()).ok_or(Error::NoFixedVector)?;
    let vf = lattice_to_f64(&vector)?;

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut chosen: Vec<Vec<f64>> = Vec::with_capacity(starts);
    let mut values: Vec<Complex64> = Vec::with_capacity(starts);
    let mut attempts = 0usize;
    while chosen.len() < starts {
        attempts += 1;
        if attempts > 10_000 {
            return Err(Error::InconsistentInput(
                "rejection sampling failed to separate start values".into(),
            ));
        }
        let candidate: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..1.0)).collect();
        let point = TorusPoint::Float(candidate.clone());
        let value = character_value(&vf, &point);
        // Demand headroom beyond the reported gap so the averages stay
        // separated after float drift.
        if values.iter().all(|w| (value - w).norm() > 1.5 * PAIRWISE_GAP) {
            chosen.push(candidate);
            values.push(value);
        }
    }

    let mut reports = Vec::with_capacity(starts);
    let mut max_orbit_deviation = 0.0f64;
    for start in chosen {
        let trace = iterate(&rep, &TorusPoint::Float(start.clone()), steps)?;
        let (average, orbit_deviation) = character_statistics(&trace, &vf);
        max_orbit_deviation = max_orbit_deviation.max(orbit_deviation);
        reports.push(StartAverage { start, average, orbit_deviation });
    }
    let mut min_pairwise_gap = f64::INFINITY;
    for i in 0..reports.len() {
        for j in (i + 1)..reports.len() {
            min_pairwise_gap =
                min_pairwise_gap.min((reports[i].average - reports[j].average).norm());
        }
    }
    let passes = min_pairwise_gap > PAIRWISE_GAP && max_orbit_deviation < CONSTANCY_TOLERANCE;
    Ok(CharacterWitnessReport {
        seed,
        vector,
        starts: reports,
        min_pairwise_gap,
        max_orbit_deviation,
        passes,
    })
}

/// Exact version of the constancy half of the witness: along a rational
/// orbit the fractional part of <v, x_k> is checked to be literally
/// constant, with no float tolerance.
pub fn exact_character_invariance(
    h: &Mat2,
    n: usize,
    x0: &TorusPoint,
    steps: usize,
) -> Result<bool> {
    if n % 2 == 0 {
        return Err(Error::BadOddOrder(n));
    }
    let coords = match x0 {
        TorusPoint::Rational(c) => c,
        TorusPoint::Float(_) => {
            return Err(Error::InconsistentInput(
                "exact invariance needs a rational start point".into(),
            ))
        }
    };
    if coords.len() != n {
        return Err(Error::DimensionMismatch { expected: n, got: coords.len() });
    }
    if classify_element(h).class != ElementClass::Hyperbolic {
        return Err(Error::NotHyperbolic(format!("trace {}", h.trace())));
    }
    let rep = sym_power(h, n)?;
    let vector = fixed_integer_vector(&rep.transpose()).ok_or(Error::NoFixedVector)?;
    let trace = iterate(&rep, x0, steps)?;
    let pairing = |x: &TorusPoint| -> Rational {
        let TorusPoint::Rational(c) = x else { unreachable!("rational orbit stays rational") };
        let mut acc = Rational::zero();
        for (vi, xi) in vector.0.iter().zip(c.iter()) {
            acc += Rational::from_integer(vi.clone()) * xi;
        }
        reduce_rational(&acc)
    };
    let first = pairing(trace.start());
    Ok(trace.points().iter().all(|x| pairing(x) == first))
}

/// Finitely supported probability measure on the product of two copies of
/// the torus.
#[derive(Clone, Debug)]
pub struct EmpiricalMeasure {
    dim: usize,
    atoms: Vec<(TorusPoint, TorusPoint, f64)>,
}

impl EmpiricalMeasure {
    pub fn new(atoms: Vec<(TorusPoint, TorusPoint, f64)>) -> Result<EmpiricalMeasure> {
        let Some(first) = atoms.first() else {
            return Err(Error::BadEmpiricalMeasure("measure has no atoms".into()));
        };
        let dim = first.0.dim();
        let mut mass = Kahan::default();
        for (x, y, w) in &atoms {
            if x.dim() != dim || y.dim() != dim {
                return Err(Error::BadEmpiricalMeasure("mixed atom dimensions".into()));
            }
            if !w.is_finite() || *w < 0.0 {
                return Err(Error::BadEmpiricalMeasure(format!("bad atom weight {w}")));
            }
            mass.add(*w);
        }
        if (mass.value() - 1.0).abs() > MASS_TOLERANCE {
            return Err(Error::BadEmpiricalMeasure(format!(
                "atom weights sum to {}",
                mass.value()
            )));
        }
        Ok(EmpiricalMeasure { dim, atoms })
    }

    pub fn uniform(pairs: Vec<(TorusPoint, TorusPoint)>) -> Result<EmpiricalMeasure> {
        if pairs.is_empty() {
            return Err(Error::BadEmpiricalMeasure("measure has no atoms".into()));
        }
        let w = 1.0 / pairs.len() as f64;
        EmpiricalMeasure::new(pairs.into_iter().map(|(x, y)| (x, y, w)).collect())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn atoms(&self) -> &[(TorusPoint, TorusPoint, f64)] {
        &self.atoms
    }

    /// Mass on the diagonal, decided by exact coordinate equality of the
    /// two components (atoms are compared in their stored representation).
    pub fn diagonal_mass(&self) -> f64 {
        let mut acc = Kahan::default();
        for (x, y, w) in &self.atoms {
            if x == y {
                acc.add(*w);
            }
        }
        acc.value()
    }
}

/// Test observable on the torus.
#[derive(Clone, Debug, Serialize)]
pub enum Observable {
    /// x -> exp(2 pi i <v, x>).
    Character(LatticeVector),
}

impl Observable {
    pub fn character(coords: &[i64]) -> Observable {
        Observable::Character(LatticeVector::from_i64(coords))
    }

    pub fn dim(&self) -> usize {
        match self {
            Observable::Character(v) => v.dim(),
        }
    }

    pub fn eval(&self, x: &TorusPoint) -> Result<Complex64> {
        if self.dim() != x.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), got: x.dim() });
        }
        let Observable::Character(v) = self;
        Ok(character_value(&lattice_to_f64(v)?, x))
    }

    fn compiled(&self) -> Result<Vec<f64>> {
        let Observable::Character(v) = self;
        lattice_to_f64(v)
    }
}

/// Sampled transformation of the torus for pushforward tests.
#[derive(Clone, Debug)]
pub enum TorusMap {
    Identity,
    Linear(RepMatrix),
    Translate(Vec<f64>),
}

impl TorusMap {
    pub fn dim_constraint(&self) -> Option<usize> {
        match self {
            TorusMap::Identity => None,
            TorusMap::Linear(m) => Some(m.dim()),
            TorusMap::Translate(t) => Some(t.len()),
        }
    }

    pub fn apply(&self, x: &TorusPoint) -> Result<TorusPoint> {
        if let Some(d) = self.dim_constraint() {
            if d != x.dim() {
                return Err(Error::DimensionMismatch { expected: d, got: x.dim() });
            }
        }
        match self {
            TorusMap::Identity => Ok(x.clone()),
            TorusMap::Linear(m) => {
                let trace = iterate(m, x, 1)?;
                Ok(trace.points()[1].clone())
            }
            TorusMap::Translate(t) => {
                let coords = x.float_coords();
                Ok(TorusPoint::Float(
                    coords.iter().zip(t.iter()).map(|(a, b)| reduce_f64(a + b)).collect(),
                ))
            }
        }
    }
}

/// Full lattice grid {0, 1/g, ..., (g-1)/g}^dim as float points, the
/// quadrature rule used as the reference for Lebesgue integrals. Character
/// sums over this grid vanish exactly unless the frequency is a multiple
/// of g in every coordinate.
pub fn uniform_grid(dim: usize, g: usize) -> Result<Vec<TorusPoint>> {
    if dim == 0 || g == 0 {
        return Err(Error::ZeroDimension);
    }
    let mut total: usize = 1;
    for _ in 0..dim {
        total = total
            .checked_mul(g)
            .filter(|&t| t <= MAX_GRID_POINTS)
            .ok_or_else(|| Error::InconsistentInput(format!("grid {g}^{dim} is too large")))?;
    }
    let mut points = Vec::with_capacity(total);
    let mut index = vec![0usize; dim];
    loop {
        points.push(TorusPoint::Float(index.iter().map(|&i| i as f64 / g as f64).collect()));
        let mut carry = dim;
        while carry > 0 {
            index[carry - 1] += 1;
            if index[carry - 1] < g {
                break;
            }
            index[carry - 1] = 0;
            carry -= 1;
        }
        if carry == 0 {
            return Ok(points);
        }
    }
}

/// Diagnostics of one empirical measure against the product-structure
/// conditions: mass on the diagonal, marginal agreement with the reference
/// quadrature, the correlation defect per observable pair, and the
/// pushforward defect over the supplied maps (all defects estimated over
/// the given observable class only).
#[derive(Clone, Debug, Serialize)]
pub struct MeasureDiagnostics {
    pub diagonal_mass: f64,
    pub first_marginal_deviation: f64,
    pub second_marginal_deviation: f64,
    pub correlation_defects: Vec<f64>,
    pub max_correlation_defect: f64,
    pub pushforward_defect: f64,
}

pub fn check_measure_sequence(
    seq: &[EmpiricalMeasure],
    observables: &[(Observable, Observable)],
    maps: &[TorusMap],
    reference: &[TorusPoint],
) -> Result<Vec<MeasureDiagnostics>> {
    let Some(first) = seq.first() else {
        return Ok(Vec::new());
    };
    let dim = first.dim();
    if reference.is_empty() {
        return Err(Error::ZeroDimension);
    }
    for m in seq {
        if m.dim() != dim {
            return Err(Error::DimensionMismatch { expected: dim, got: m.dim() });
        }
    }
    for p in reference {
        if p.dim() != dim {
            return Err(Error::DimensionMismatch { expected: dim, got: p.dim() });
        }
    }
    for (f1, f2) in observables {
        for f in [f1, f2] {
            if f.dim() != dim {
                return Err(Error::DimensionMismatch { expected: dim, got: f.dim() });
            }
        }
    }
    for map in maps {
        if let Some(d) = map.dim_constraint() {
            if d != dim {
                return Err(Error::DimensionMismatch { expected: dim, got: d });
            }
        }
    }

    let pairs: Vec<(Vec<f64>, Vec<f64>)> = observables
        .iter()
        .map(|(f1, f2)| Ok((f1.compiled()?, f2.compiled()?)))
        .collect::<Result<_>>()?;
    // Distinct single observables for the marginal tests.
    let mut singles: Vec<Vec<f64>> = Vec::new();
    for (f1, f2) in &pairs {
        for f in [f1, f2] {
            if !singles.contains(f) {
                singles.push(f.clone());
            }
        }
    }

    let quadrature = |f: &dyn Fn(&TorusPoint) -> Complex64| -> Complex64 {
        let mut acc = KahanComplex::default();
        for p in reference {
            acc.add(f(p));
        }
        acc.value() / reference.len() as f64
    };
    let single_integrals: Vec<Complex64> =
        singles.iter().map(|v| quadrature(&|p| character_value(v, p))).collect();
    let pair_integrals: Vec<Complex64> = pairs
        .iter()
        .map(|(v1, v2)| quadrature(&|p| character_value(v1, p) * character_value(v2, p)))
        .collect();

    let mut out = Vec::with_capacity(seq.len());
    for measure in seq {
        let mut first_marginal = 0.0f64;
        let mut second_marginal = 0.0f64;
        for (v, integral) in singles.iter().zip(single_integrals.iter()) {
            let mut on_x = KahanComplex::default();
            let mut on_y = KahanComplex::default();
            for (x, y, w) in measure.atoms() {
                on_x.add(character_value(v, x) * *w);
                on_y.add(character_value(v, y) * *w);
            }
            first_marginal = first_marginal.max((on_x.value() - integral).norm());
            second_marginal = second_marginal.max((on_y.value() - integral).norm());
        }

        let mut correlation_defects = Vec::with_capacity(pairs.len());
        for ((v1, v2), integral) in pairs.iter().zip(pair_integrals.iter()) {
            let mut acc = KahanComplex::default();
            for (x, y, w) in measure.atoms() {
                acc.add(character_value(v1, x) * character_value(v2, y) * *w);
            }
            correlation_defects.push((acc.value() - integral).norm());
        }
        let max_correlation_defect = correlation_defects.iter().copied().fold(0.0, f64::max);

        let mut pushforward_defect = 0.0f64;
        for map in maps {
            for (v1, v2) in &pairs {
                let mut before = KahanComplex::default();
                let mut after = KahanComplex::default();
                for (x, y, w) in measure.atoms() {
                    before.add(character_value(v1, x) * character_value(v2, y) * *w);
                    let tx = map.apply(x)?;
                    let ty = map.apply(y)?;
                    after.add(character_value(v1, &tx) * character_value(v2, &ty) * *w);
                }
                pushforward_defect = pushforward_defect.max((after.value() - before.value()).norm());
            }
        }

        out.push(MeasureDiagnostics {
            diagonal_mass: measure.diagonal_mass(),
            first_marginal_deviation: first_marginal,
            second_marginal_deviation: second_marginal,
            correlation_defects,
            max_correlation_defect,
            pushforward_defect,
        });
    }
    Ok(out)
}

/// Axis-aligned half-open box inside the unit cube.
#[derive(Clone, Debug, Serialize)]
pub struct TorusBox {
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl TorusBox {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<TorusBox> {
        if lower.is_empty() || lower.len() != upper.len() {
            return Err(Error::BadBox);
        }
        for (lo, up) in lower.iter().zip(upper.iter()) {
            if !lo.is_finite() || !up.is_finite() || *lo < 0.0 || *up > 1.0 || lo >= up {
                return Err(Error::BadBox);
            }
        }
        Ok(TorusBox { lower, upper })
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn volume(&self) -> f64 {
        self.lower.iter().zip(self.upper.iter()).map(|(lo, up)| up - lo).product()
    }

    pub fn contains(&self, x: &TorusPoint) -> bool {
        let coords = x.float_coords();
        coords.len() == self.dim()
            && coords
                .iter()
                .zip(self.lower.iter().zip(self.upper.iter()))
                .all(|(c, (lo, up))| lo <= c && c < up)
    }
}

/// Max over boxes of |empirical frequency - volume| along the trace.
pub fn discrepancy(trace: &OrbitTrace, boxes: &[TorusBox]) -> Result<f64> {
    let dim = trace.start().dim();
    for b in boxes {
        if b.dim() != dim {
            return Err(Error::DimensionMismatch { expected: dim, got: b.dim() });
        }
    }
    let total = trace.points().len() as f64;
    let mut worst = 0.0f64;
    for b in boxes {
        let hits = trace.points().iter().filter(|x| b.contains(x)).count() as f64;
        worst = worst.max((hits / total - b.volume()).abs());
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symrep::GroupWord;
    use rand::rngs::StdRng;
    use rand::SeedableRng;

    fn hyperbolic() -> Mat2 {
        Mat2::from_i64(2, 1, 1, 1).unwrap()
    }

    fn rational(p: i64, q: i64) -> Rational {
        Rational::new(BigInt::from(p), BigInt::from(q))
    }

    #[test]
    fn coordinates_are_reduced_mod_one() {
        let p = TorusPoint::float(vec![1.25, -0.25, 1.0]).unwrap();
        assert_eq!(p.float_coords(), vec![0.25, 0.75, 0.0]);
        let q = TorusPoint::rational(vec![rational(7, 5), rational(-1, 3)]).unwrap();
        let TorusPoint::Rational(coords) = &q else { panic!() };
        assert_eq!(coords[0], rational(2, 5));
        assert_eq!(coords[1], rational(2, 3));
        assert!(matches!(
            TorusPoint::rational(vec![rational(1, 1_000_001)]),
            Err(Error::DenominatorTooLarge(_))
        ));
        assert!(matches!(
            TorusPoint::float(vec![f64::NAN]),
            Err(Error::InconsistentInput(_))
        ));
        assert!(matches!(TorusPoint::float(vec![]), Err(Error::ZeroDimension)));
    }

    #[test]
    fn fixed_point_and_identity_give_constant_traces() {
        let m = sym_power(&hyperbolic(), 2).unwrap();
        let zero = TorusPoint::zero_float(2).unwrap();
        let trace = iterate(&m, &zero, 25).unwrap();
        assert!(trace.points().iter().all(|x| *x == zero));
        let id = RepMatrix::identity(3);
        let x0 = TorusPoint::float(vec![0.3, 0.1, 0.9]).unwrap();
        let trace = iterate(&id, &x0, 10).unwrap();
        assert!(trace.points().iter().all(|x| *x == x0));
        assert_eq!(trace.steps(), 10);
    }

    #[test]
    fn rational_orbit_matches_the_mod_q_oracle_and_reports_its_period() {
        let m = sym_power(&hyperbolic(), 2).unwrap();
        let x0 = TorusPoint::rational(vec![rational(1, 5), rational(2, 5)]).unwrap();
        let trace = iterate(&m, &x0, 12).unwrap();
        // Oracle: the same orbit in (Z/5)^2 with integer arithmetic.
        let mut state = [1u64, 2u64];
        for point in trace.points() {
            let TorusPoint::Rational(c) = point else { panic!() };
            assert_eq!(c[0], rational(state[0] as i64, 5));
            assert_eq!(c[1], rational(state[1] as i64, 5));
            state = [(2 * state[0] + state[1]) % 5, (state[0] + state[1]) % 5];
        }
        assert_eq!(trace.period(), Some(OrbitPeriod { preperiod: 0, period: 2 }));
        // Denominators never grow along the orbit.
        for point in trace.points() {
            let TorusPoint::Rational(c) = point else { panic!() };
            assert!(c.iter().all(|r| r.denom() <= &BigInt::from(5)));
        }
    }

    #[test]
    fn duality_pairing_is_exact_on_rationals() {
        use crate::symrep::{eval_word, Gen};
        let mut rng = StdRng::seed_from_u64(70);
        let words: [&[Gen]; 4] = [
            &[Gen::S, Gen::T],
            &[Gen::T, Gen::SInv],
            &[Gen::S, Gen::S, Gen::T, Gen::T],
            &[Gen::T, Gen::S, Gen::TInv],
        ];
        for (i, w) in words.iter().enumerate() {
            let g = eval_word(&GroupWord(w.to_vec()));
            let n = 2 + i;
            let m = sym_power(&g, n).unwrap();
            let x: Vec<Rational> = (0..n)
                .map(|_| {
                    use rand::Rng;
                    rational(rng.gen_range(0..50), 50)
                })
                .collect();
            let v = LatticeVector::from_i64(
                &(0..n).map(|k| (k as i64) - 2).collect::<Vec<_>>(),
            );
            // <v, Mx mod 1> and <M^T v, x> agree mod 1, exactly.
            let trace =
                iterate(&m, &TorusPoint::rational(x.clone()).unwrap(), 1).unwrap();
            let TorusPoint::Rational(mx) = &trace.points()[1] else { panic!() };
            let lhs: Rational = v
                .0
                .iter()
                .zip(mx.iter())
                .map(|(a, b)| Rational::from_integer(a.clone()) * b)
                .sum();
            let vt = m.transpose().apply(&v.0).unwrap();
            let rhs: Rational = vt
                .iter()
                .zip(x.iter())
                .map(|(a, b)| Rational::from_integer(a.clone()) * b)
                .sum();
            assert_eq!(reduce_rational(&lhs), reduce_rational(&rhs));
        }
    }

    #[test]
    fn weyl_average_degenerate_cases() {
        let m = sym_power(&hyperbolic(), 2).unwrap();
        let x0 = TorusPoint::float(vec![0.123, 0.456]).unwrap();
        let trace = iterate(&m, &x0, 100).unwrap();
        let zero = LatticeVector::from_i64(&[0, 0]);
        assert_eq!(weyl_average(&trace, &zero).unwrap(), Complex64::new(1.0, 0.0));
        let origin = iterate(&m, &TorusPoint::zero_float(2).unwrap(), 100).unwrap();
        let v = LatticeVector::from_i64(&[1, 0]);
        assert!((weyl_average(&origin, &v).unwrap() - Complex64::new(1.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn invariant_character_average_equals_its_start_value() {
        let h = hyperbolic();
        let rep = sym_power(&h, 3).unwrap();
        let v = fixed_integer_vector(&rep.transpose()).unwrap();
        let x0 = TorusPoint::float(vec![0.37, 0.52, 0.81]).unwrap();
        let trace = iterate(&rep, &x0, 10_000).unwrap();
        let expected = Complex64::from_polar(
            1.0,
            TAU * v
                .0
                .iter()
                .zip(x0.float_coords())
                .map(|(a, b)| a.to_f64().unwrap() * b)
                .sum::<f64>(),
        );
        let avg = weyl_average(&trace, &v).unwrap();
        assert!((avg - expected).norm() < 1e-9, "drift {}", (avg - expected).norm());
    }

    #[test]
    fn weyl_average_decays_in_the_ergodic_even_case() {
        let m = sym_power(&hyperbolic(), 2).unwrap();
        let x0 = TorusPoint::float(vec![0.123456789, 0.987654321]).unwrap();
        let v = LatticeVector::from_i64(&[1, 0]);
        let short = iterate(&m, &x0, 10_000).unwrap();
        let long = iterate(&m, &x0, 100_000).unwrap();
        let short_avg = weyl_average(&short, &v).unwrap().norm();
        let long_avg = weyl_average(&long, &v).unwrap().norm();
        assert!(long_avg < 0.02, "long average {long_avg}");
        assert!(long_avg < short_avg + 0.005, "no decay: {short_avg} -> {long_avg}");
    }

    #[test]
    fn character_witness_separates_starts_on_the_odd_action() {
        let report = invariant_character_witness(&hyperbolic(), 3, 10, 2_000, 71).unwrap();
        assert!(report.passes);
        assert!(report.min_pairwise_gap > PAIRWISE_GAP);
        assert!(report.max_orbit_deviation < CONSTANCY_TOLERANCE);
        assert_eq!(report.starts.len(), 10);
        // The invariant frequency for trace-3 in degree 2 is (2,-1,-2)
        // up to sign, from the exact kernel of sym_power(h,3)^T - I.
        assert_eq!(report.vector, LatticeVector::from_i64(&[2, -1, -2]));
    }

    #[test]
    fn character_witness_preconditions() {
        assert!(matches!(
            invariant_character_witness(&hyperbolic(), 4, 10, 100, 72),
            Err(Error::BadOddOrder(4))
        ));
        let parabolic = Mat2::from_i64(1, 1, 0, 1).unwrap();
        assert!(matches!(
            invariant_character_witness(&parabolic, 3, 10, 100, 72),
            Err(Error::NotHyperbolic(_))
        ));
    }

    #[test]
    fn exact_invariance_holds_on_rational_orbits() {
        let x0 = TorusPoint::rational(vec![
            rational(1, 7),
            rational(3, 7),
            rational(5, 7),
        ])
        .unwrap();
        assert!(exact_character_invariance(&hyperbolic(), 3, &x0, 500).unwrap());
        let float_start = TorusPoint::float(vec![0.1, 0.2, 0.3]).unwrap();
        assert!(matches!(
            exact_character_invariance(&hyperbolic(), 3, &float_start, 10),
            Err(Error::InconsistentInput(_))
        ));
    }

    #[test]
    fn empirical_measures_are_validated() {
        let x = TorusPoint::float(vec![0.1, 0.2]).unwrap();
        let y = TorusPoint::float(vec![0.3, 0.4]).unwrap();
        assert!(matches!(
            EmpiricalMeasure::new(vec![]),
            Err(Error::BadEmpiricalMeasure(_))
        ));
        assert!(matches!(
            EmpiricalMeasure::new(vec![(x.clone(), y.clone(), 0.5)]),
            Err(Error::BadEmpiricalMeasure(_))
        ));
        assert!(matches!(
            EmpiricalMeasure::new(vec![(x.clone(), y.clone(), -1.0), (y.clone(), x.clone(), 2.0)]),
            Err(Error::BadEmpiricalMeasure(_))
        ));
        let ok = EmpiricalMeasure::new(vec![
            (x.clone(), x.clone(), 0.25),
            (x.clone(), y.clone(), 0.75),
        ])
        .unwrap();
        assert!((ok.diagonal_mass() - 0.25).abs() < 1e-15);
    }

    #[test]
    fn grid_characters_integrate_to_zero() {
        let grid = uniform_grid(2, 4).unwrap();
        assert_eq!(grid.len(), 16);
        let f = Observable::character(&[1, 0]);
        let mut acc = KahanComplex::default();
        for p in &grid {
            acc.add(f.eval(p).unwrap());
        }
        assert!(acc.value().norm() < 1e-12);
        assert!(uniform_grid(0, 4).is_err());
        assert!(matches!(uniform_grid(8, 64), Err(Error::InconsistentInput(_))));
    }

    #[test]
    fn product_measure_fails_the_correlation_condition() {
        let grid = uniform_grid(2, 8).unwrap();
        let mut pairs = Vec::new();
        for x in &grid {
            for y in &grid {
                pairs.push((x.clone(), y.clone()));
            }
        }
        let product = EmpiricalMeasure::uniform(pairs).unwrap();
        let observables =
            vec![(Observable::character(&[1, 0]), Observable::character(&[-1, 0]))];
        let reference = uniform_grid(2, 16).unwrap();
        let report =
            check_measure_sequence(&[product], &observables, &[TorusMap::Identity], &reference)
                .unwrap();
        assert_eq!(report.len(), 1);
        let check = &report[0];
        // Diagonal pairs carry 1/|grid| of the mass; marginals are exact.
        assert!(check.diagonal_mass < 0.02);
        assert!(check.first_marginal_deviation < 1e-10);
        assert!(check.second_marginal_deviation < 1e-10);
        // chi * conj(chi) integrates to 1 against Lebesgue, but the product
        // measure sees |integral of chi|^2 = 0.
        assert!(check.max_correlation_defect > 0.99);
        assert_eq!(check.pushforward_defect, 0.0);
    }

    #[test]
    fn diagonal_family_defect_decays_like_two_sin_pi_delta() {
        let grid = uniform_grid(2, 8).unwrap();
        let observables =
            vec![(Observable::character(&[1, 0]), Observable::character(&[-1, 0]))];
        let reference = uniform_grid(2, 16).unwrap();
        let deltas = [0.2, 0.1, 0.05, 0.025];
        let expected = [1.1755705, 0.6180340, 0.3128689, 0.1569182];
        let seq: Vec<EmpiricalMeasure> = deltas
            .iter()
            .map(|&d| {
                let shift = TorusMap::Translate(vec![d, 0.0]);
                EmpiricalMeasure::uniform(
                    grid.iter()
                        .map(|x| (x.clone(), shift.apply(x).unwrap()))
                        .collect(),
                )
                .unwrap()
            })
            .collect();
        let report = check_measure_sequence(&seq, &observables, &[], &reference).unwrap();
        for ((check, &want), &delta) in report.iter().zip(expected.iter()).zip(deltas.iter()) {
            assert_eq!(check.diagonal_mass, 0.0);
            assert!(
                (check.max_correlation_defect - want).abs() < 1e-6,
                "delta {delta}: defect {}",
                check.max_correlation_defect
            );
            assert!((check.max_correlation_defect - 2.0 * (std::f64::consts::PI * delta).sin())
                .abs()
                < 1e-9);
        }
        for window in report.windows(2) {
            assert!(window[1].max_correlation_defect < window[0].max_correlation_defect);
        }
    }

    #[test]
    fn pushforward_defect_vanishes_for_identity_and_sees_translations() {
        let grid = uniform_grid(2, 8).unwrap();
        let reference = uniform_grid(2, 16).unwrap();
        let pair_v_conj =
            vec![(Observable::character(&[1, 0]), Observable::character(&[-1, 0]))];
        let diagonal = EmpiricalMeasure::uniform(
            grid.iter().map(|x| (x.clone(), x.clone())).collect(),
        )
        .unwrap();
        let identity_only = check_measure_sequence(
            &[diagonal],
            &pair_v_conj,
            &[TorusMap::Identity],
            &reference,
        )
        .unwrap();
        assert_eq!(identity_only[0].pushforward_defect, 0.0);

        // A common translation multiplies a (v,w)-correlation by the phase
        // of v+w, so detecting it needs nonzero total frequency AND nonzero
        // correlation: a half-grid diagonal (nonuniform marginal) against
        // the constant observable.
        let half: Vec<_> = grid
            .iter()
            .filter(|x| x.float_coords()[0] < 0.5)
            .map(|x| (x.clone(), x.clone()))
            .collect();
        let half_diagonal = EmpiricalMeasure::uniform(half).unwrap();
        let skewed_pair =
            vec![(Observable::character(&[1, 0]), Observable::character(&[0, 0]))];
        let translated = check_measure_sequence(
            &[half_diagonal],
            &skewed_pair,
            &[TorusMap::Identity, TorusMap::Translate(vec![0.31, 0.0])],
            &reference,
        )
        .unwrap();
        assert!(
            translated[0].pushforward_defect > 0.5,
            "translation defect {}",
            translated[0].pushforward_defect
        );

        // A linear map rescales the frequency of a conjugate pair on a
        // shifted diagonal, changing the shift phase.
        let m = sym_power(&hyperbolic(), 2).unwrap();
        let shift = TorusMap::Translate(vec![0.125, 0.0]);
        let skew = EmpiricalMeasure::uniform(
            grid.iter().map(|x| (x.clone(), shift.apply(x).unwrap())).collect(),
        )
        .unwrap();
        let linear_report = check_measure_sequence(
            &[skew],
            &pair_v_conj,
            &[TorusMap::Linear(m)],
            &reference,
        )
        .unwrap();
        assert!(
            linear_report[0].pushforward_defect > 0.1,
            "linear defect {}",
            linear_report[0].pushforward_defect
        );
    }

    #[test]
    fn discrepancy_on_constant_traces() {
        let id = RepMatrix::identity(2);
        let zero = TorusPoint::zero_float(2).unwrap();
        let trace = iterate(&id, &zero, 50).unwrap();
        let whole = TorusBox::new(vec![0.0, 0.0], vec![1.0, 1.0]).unwrap();
        assert_eq!(discrepancy(&trace, &[whole]).unwrap(), 0.0);
        let off = TorusBox::new(vec![0.25, 0.25], vec![0.75, 0.75]).unwrap();
        assert!((discrepancy(&trace, &[off]).unwrap() - 0.25).abs() < 1e-15);
    }

    #[test]
    fn hyperbolic_orbits_equidistribute_over_random_boxes() {
        use rand::Rng;
        let m = sym_power(&hyperbolic(), 2).unwrap();
        let x0 = TorusPoint::float(vec![0.2137, 0.5711]).unwrap();
        let mut rng = StdRng::seed_from_u64(73);
        let boxes: Vec<TorusBox> = (0..20)
            .map(|_| {
                let lo = [rng.gen_range(0.0..0.5), rng.gen_range(0.0..0.5)];
                let up = [rng.gen_range(lo[0]..1.0), rng.gen_range(lo[1]..1.0)];
                TorusBox::new(lo.to_vec(), up.to_vec()).unwrap()
            })
            .collect();
        let short = iterate(&m, &x0, 2_000).unwrap();
        let long = iterate(&m, &x0, 40_000).unwrap();
        let d_short = discrepancy(&short, &boxes).unwrap();
        let d_long = discrepancy(&long, &boxes).unwrap();
        assert!(d_long < 0.05, "long discrepancy {d_long}");
        assert!(d_long < d_short, "no decay: {d_short} -> {d_long}");
    }

    #[test]
    fn boxes_are_validated() {
        assert!(matches!(TorusBox::new(vec![0.5], vec![0.5]), Err(Error::BadBox)));
        assert!(matches!(TorusBox::new(vec![0.0], vec![1.5]), Err(Error::BadBox)));
        assert!(matches!(TorusBox::new(vec![-0.1], vec![0.5]), Err(Error::BadBox)));
        assert!(matches!(TorusBox::new(vec![], vec![]), Err(Error::BadBox)));
        assert!(matches!(TorusBox::new(vec![0.0, 0.0], vec![1.0]), Err(Error::BadBox)));
        let b = TorusBox::new(vec![0.0, 0.5], vec![0.5, 1.0]).unwrap();
        assert!((b.volume() - 0.25).abs() < 1e-15);
        let trace =
            iterate(&RepMatrix::identity(3), &TorusPoint::zero_float(3).unwrap(), 1).unwrap();
        assert!(matches!(
            discrepancy(&trace, &[b]),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn oversized_matrix_entries_are_rejected_in_float_mode() {
        let huge = BigInt::from(1u64 << 60);
        let entries = vec![
            BigInt::from(1),
            huge.clone(),
            BigInt::zero(),
            BigInt::from(1),
        ];
        let m = RepMatrix::new(2, entries).unwrap();
        let x0 = TorusPoint::float(vec![0.5, 0.5]).unwrap();
        assert!(matches!(iterate(&m, &x0, 1), Err(Error::EntryTooLarge)));
        // The exact path has no such limit.
        let xr = TorusPoint::rational(vec![rational(1, 2), rational(1, 2)]).unwrap();
        assert!(iterate(&m, &xr, 3).is_ok());
    }
}
