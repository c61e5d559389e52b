//! Finitely supported probability-measure fields on finite group-action
//! samples, their translation defects, and the stability combinators:
//! restriction, product extension, averaging over a commuting finite group,
//! and symmetric products. A geodesic-ray field on a free-group boundary
//! sample supplies a concrete base field whose defect is exactly 2|s|/N.
//!
//! Group elements are reduced words in the free group on two letters.
//! Weights are exact rationals, so every defect value is exact.

use crate::serial;
use crate::{Error, Result};
use num_bigint::BigInt;
use num_rational::Ratio;
use num_traits::{One, Signed, Zero};
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

pub type Weight = Ratio<BigInt>;

/// Largest tolerated deviation of a measure's total mass from 1.
fn mass_tolerance() -> Weight {
    Ratio::new(BigInt::one(), BigInt::from(1_000_000_000_000u64))
}

/// Generator or inverse generator of the free group on two letters.
/// Displayed as a, A, b, B with capitals denoting inverses.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Letter {
    A,
    AInv,
    B,
    BInv,
}

impl Letter {
    pub fn inverse(self) -> Letter {
        match self {
            Letter::A => Letter::AInv,
            Letter::AInv => Letter::A,
            Letter::B => Letter::BInv,
            Letter::BInv => Letter::B,
        }
    }

    pub fn symbol(self) -> char {
        match self {
            Letter::A => 'a',
            Letter::AInv => 'A',
            Letter::B => 'b',
            Letter::BInv => 'B',
        }
    }

    pub fn from_symbol(c: char) -> Result<Letter> {
        match c {
            'a' => Ok(Letter::A),
            'A' => Ok(Letter::AInv),
            'b' => Ok(Letter::B),
            'B' => Ok(Letter::BInv),
            _ => Err(Error::BadWord(c.to_string())),
        }
    }
}

/// Reduced word in the free group on two letters. The empty word is the
/// identity and prints as "e".
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Word(Vec<Letter>);

impl Word {
    pub fn identity() -> Word {
        Word(Vec::new())
    }

    pub fn from_letters(letters: Vec<Letter>) -> Result<Word> {
        for pair in letters.windows(2) {
            if pair[0] == pair[1].inverse() {
                let shown: String = letters.iter().map(|l| l.symbol()).collect();
                return Err(Error::UnreducedWord(shown));
            }
        }
        Ok(Word(letters))
    }

    pub fn parse(s: &str) -> Result<Word> {
        if s == "e" || s.is_empty() {
            return Ok(Word::identity());
        }
        let letters = s.chars().map(Letter::from_symbol).collect::<Result<Vec<_>>>()?;
        Word::from_letters(letters)
    }

    pub fn letters(&self) -> &[Letter] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn is_identity(&self) -> bool {
        self.0.is_empty()
    }

    /// Concatenation with free reduction at the seam.
    pub fn mul(&self, other: &Word) -> Word {
        let mut out = self.0.clone();
        for &l in &other.0 {
            if out.last() == Some(&l.inverse()) {
                out.pop();
            } else {
                out.push(l);
            }
        }
        Word(out)
    }

    pub fn inverse(&self) -> Word {
        Word(self.0.iter().rev().map(|l| l.inverse()).collect())
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return write!(f, "e");
        }
        for l in &self.0 {
            write!(f, "{}", l.symbol())?;
        }
        Ok(())
    }
}

impl Serialize for Word {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for Word {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        Word::parse(&s).map_err(D::Error::custom)
    }
}

/// Finitely supported probability measure on group words with exact
/// rational weights. Zero weights are pruned on construction.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Measure {
    weights: BTreeMap<Word, Weight>,
}

impl Measure {
    pub fn new(weights: BTreeMap<Word, Weight>) -> Result<Measure> {
        let mut total = Weight::zero();
        for w in weights.values() {
            if w.is_negative() {
                return Err(Error::BadMeasure(format!("negative weight {w}")));
            }
            total += w;
        }
        let dev = (total.clone() - Weight::one()).abs();
        if dev > mass_tolerance() {
            return Err(Error::BadMeasure(total.to_string()));
        }
        Ok(Measure::prune(weights))
    }

    fn prune(weights: BTreeMap<Word, Weight>) -> Measure {
        Measure { weights: weights.into_iter().filter(|(_, w)| !w.is_zero()).collect() }
    }

    pub fn point_mass(w: Word) -> Measure {
        let mut weights = BTreeMap::new();
        weights.insert(w, Weight::one());
        Measure { weights }
    }

    /// Uniform measure on the given words; duplicates accumulate weight.
    pub fn uniform(words: &[Word]) -> Result<Measure> {
        if words.is_empty() {
            return Err(Error::BadMeasure("empty support".into()));
        }
        let share = Ratio::new(BigInt::one(), BigInt::from(words.len()));
        let mut weights: BTreeMap<Word, Weight> = BTreeMap::new();
        for w in words {
            *weights.entry(w.clone()).or_insert_with(Weight::zero) += share.clone();
        }
        Ok(Measure { weights })
    }

    pub fn weights(&self) -> &BTreeMap<Word, Weight> {
        &self.weights
    }

    pub fn weight(&self, w: &Word) -> Weight {
        self.weights.get(w).cloned().unwrap_or_else(Weight::zero)
    }

    pub fn total(&self) -> Weight {
        self.weights.values().cloned().sum()
    }

    /// Pushforward under left translation: the new measure gives s·w the
    /// old weight of w.
    pub fn translate(&self, s: &Word) -> Measure {
        Measure {
            weights: self.weights.iter().map(|(w, q)| (s.mul(w), q.clone())).collect(),
        }
    }

    /// Exact l1 distance; between probability measures this lies in [0, 2].
    pub fn l1_distance(&self, other: &Measure) -> Weight {
        let support: BTreeSet<&Word> =
            self.weights.keys().chain(other.weights.keys()).collect();
        support.into_iter().map(|w| (self.weight(w) - other.weight(w)).abs()).sum()
    }

    fn average(parts: &[&Measure]) -> Measure {
        let share = Ratio::new(BigInt::one(), BigInt::from(parts.len()));
        let mut weights: BTreeMap<Word, Weight> = BTreeMap::new();
        for m in parts {
            for (w, q) in &m.weights {
                *weights.entry(w.clone()).or_insert_with(Weight::zero) +=
                    q.clone() * share.clone();
            }
        }
        Measure::prune(weights)
    }
}

impl Serialize for Measure {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let shown: BTreeMap<String, String> =
            self.weights.iter().map(|(w, q)| (w.to_string(), q.to_string())).collect();
        shown.serialize(s)
    }
}

impl<'de> Deserialize<'de> for Measure {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let shown = BTreeMap::<String, String>::deserialize(d)?;
        let mut weights = BTreeMap::new();
        for (w, q) in shown {
            let word = Word::parse(&w).map_err(D::Error::custom)?;
            let weight = q.parse::<Weight>().map_err(D::Error::custom)?;
            weights.insert(word, weight);
        }
        Measure::new(weights).map_err(D::Error::custom)
    }
}

/// Table indices travel as JSON strings so the structure survives being
/// flattened into enclosing documents (buffered deserializers keep object
/// keys as strings).
mod action_serde {
    use super::Word;
    use serde::de::Error as _;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};
    use std::collections::BTreeMap;

    pub fn serialize<S: Serializer>(
        table: &BTreeMap<Word, BTreeMap<usize, usize>>,
        ser: S,
    ) -> Result<S::Ok, S::Error> {
        let shadow: BTreeMap<&Word, BTreeMap<String, usize>> = table
            .iter()
            .map(|(w, m)| (w, m.iter().map(|(k, v)| (k.to_string(), *v)).collect()))
            .collect();
        shadow.serialize(ser)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(
        de: D,
    ) -> Result<BTreeMap<Word, BTreeMap<usize, usize>>, D::Error> {
        let shadow = BTreeMap::<Word, BTreeMap<String, usize>>::deserialize(de)?;
        shadow
            .into_iter()
            .map(|(w, m)| {
                let inner = m
                    .into_iter()
                    .map(|(k, v)| Ok((k.parse::<usize>().map_err(D::Error::custom)?, v)))
                    .collect::<Result<BTreeMap<usize, usize>, D::Error>>()?;
                Ok((w, inner))
            })
            .collect()
    }
}

/// Finite sample of a group-space with a partial action table. The table
/// maps a word to the points it is known to move; the identity always acts
/// trivially and needs no entry.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Space {
    sample: Vec<String>,
    #[serde(with = "action_serde")]
    action: BTreeMap<Word, BTreeMap<usize, usize>>,
}

impl Space {
    pub fn new(
        sample: Vec<String>,
        action: BTreeMap<Word, BTreeMap<usize, usize>>,
    ) -> Result<Space> {
        if sample.is_empty() {
            return Err(Error::ZeroDimension);
        }
        let distinct: BTreeSet<&String> = sample.iter().collect();
        if distinct.len() != sample.len() {
            return Err(Error::InconsistentInput("duplicate sample labels".into()));
        }
        for (word, table) in &action {
            let mut seen = BTreeSet::new();
            for (&x, &y) in table {
                if x >= sample.len() || y >= sample.len() {
                    return Err(Error::InconsistentInput(format!(
                        "action of {word} references a point outside the sample"
                    )));
                }
                if word.is_identity() && x != y {
                    return Err(Error::InconsistentInput(
                        "identity word must act trivially".into(),
                    ));
                }
                if !seen.insert(y) {
                    return Err(Error::InconsistentInput(format!(
                        "action of {word} is not injective"
                    )));
                }
            }
        }
        Ok(Space { sample, action })
    }

    /// Space on which every listed element fixes every point.
    pub fn with_trivial_action(sample: Vec<String>, elements: &[Word]) -> Result<Space> {
        let identity_map: BTreeMap<usize, usize> = (0..sample.len()).map(|x| (x, x)).collect();
        let action = elements
            .iter()
            .filter(|s| !s.is_identity())
            .map(|s| (s.clone(), identity_map.clone()))
            .collect();
        Space::new(sample, action)
    }

    pub fn len(&self) -> usize {
        self.sample.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sample.is_empty()
    }

    pub fn labels(&self) -> &[String] {
        &self.sample
    }

    pub fn label(&self, x: usize) -> &str {
        &self.sample[x]
    }

    pub fn action(&self) -> &BTreeMap<Word, BTreeMap<usize, usize>> {
        &self.action
    }

    pub fn apply(&self, s: &Word, x: usize) -> Result<usize> {
        if s.is_identity() {
            return Ok(x);
        }
        self.action
            .get(s)
            .and_then(|table| table.get(&x))
            .copied()
            .ok_or_else(|| Error::MissingAction {
                element: s.to_string(),
                point: self.sample.get(x).cloned().unwrap_or_else(|| x.to_string()),
            })
    }
}

/// Assignment of a probability measure to every sample point.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MeasureField {
    #[serde(flatten)]
    space: Space,
    measures: Vec<Measure>,
}

impl MeasureField {
    pub fn new(space: Space, measures: Vec<Measure>) -> Result<MeasureField> {
        if measures.len() != space.len() {
            return Err(Error::DimensionMismatch {
                expected: space.len(),
                got: measures.len(),
            });
        }
        Ok(MeasureField { space, measures })
    }

    pub fn constant(space: Space, measure: Measure) -> MeasureField {
        let measures = vec![measure; space.len()];
        MeasureField { space, measures }
    }

    pub fn space(&self) -> &Space {
        &self.space
    }

    pub fn measures(&self) -> &[Measure] {
        &self.measures
    }

    pub fn measure(&self, x: usize) -> &Measure {
        &self.measures[x]
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DefectEntry {
    pub element: Word,
    pub point: usize,
    #[serde(with = "serial::ratio")]
    pub value: Weight,
}

/// Per-pair values of ||s·m^x - m^{sx}||_1 and their supremum over the
/// supplied finite sets of elements and points.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DefectReport {
    pub entries: Vec<DefectEntry>,
    #[serde(with = "serial::ratio")]
    pub sup: Weight,
}

impl DefectReport {
    pub fn value_at(&self, element: &Word, point: usize) -> Option<&Weight> {
        self.entries
            .iter()
            .find(|e| &e.element == element && e.point == point)
            .map(|e| &e.value)
    }
}

/// Defect over every sample point.
pub fn defect(field: &MeasureField, elements: &[Word]) -> Result<DefectReport> {
    let all: Vec<usize> = (0..field.space().len()).collect();
    defect_on(field, elements, &all)
}

/// Defect restricted to the given points; errors if the action table lacks
/// a tested pair.
pub fn defect_on(
    field: &MeasureField,
    elements: &[Word],
    points: &[usize],
) -> Result<DefectReport> {
    let mut entries = Vec::new();
    let mut sup = Weight::zero();
    for s in elements {
        for &x in points {
            if x >= field.space().len() {
                return Err(Error::InconsistentInput(format!(
                    "point index {x} outside the sample"
                )));
            }
            let y = field.space().apply(s, x)?;
            let value = field.measure(x).translate(s).l1_distance(field.measure(y));
            debug_assert!(!value.is_negative() && value <= Weight::from(BigInt::from(2)));
            if value > sup {
                sup = value.clone();
            }
            entries.push(DefectEntry { element: s.clone(), point: x, value });
        }
    }
    Ok(DefectReport { entries, sup })
}

/// Restriction to an invariant subset; invariance is checked against the
/// supplied elements. The child's defect equals the parent's pointwise.
pub fn restrict(
    field: &MeasureField,
    subset: &[usize],
    tested: &[Word],
) -> Result<MeasureField> {
    let chosen: BTreeSet<usize> = subset.iter().copied().collect();
    if chosen.is_empty() {
        return Err(Error::ZeroDimension);
    }
    if chosen.iter().any(|&x| x >= field.space().len()) {
        return Err(Error::InconsistentInput("subset index outside the sample".into()));
    }
    for s in tested {
        for &x in &chosen {
            if !chosen.contains(&field.space().apply(s, x)?) {
                return Err(Error::NonInvariantSubset);
            }
        }
    }
    let reindex: BTreeMap<usize, usize> =
        chosen.iter().enumerate().map(|(new, &old)| (old, new)).collect();
    let sample = chosen.iter().map(|&x| field.space().label(x).to_string()).collect();
    let mut action = BTreeMap::new();
    for (word, table) in field.space().action() {
        let kept: BTreeMap<usize, usize> = table
            .iter()
            .filter(|(x, y)| reindex.contains_key(x) && reindex.contains_key(y))
            .map(|(x, y)| (reindex[x], reindex[y]))
            .collect();
        if !kept.is_empty() {
            action.insert(word.clone(), kept);
        }
    }
    let measures = chosen.iter().map(|&x| field.measure(x).clone()).collect();
    MeasureField::new(Space::new(sample, action)?, measures)
}

/// Field on the product sample with n^{(x,y)} = m^x and the diagonal
/// action; the defect at (s, (x,y)) equals the defect at (s, x) exactly.
/// Point (x, y) has index x·|Y| + y.
pub fn product_extend(field: &MeasureField, factor: &Space) -> Result<MeasureField> {
    let nx = field.space().len();
    let ny = factor.len();
    let mut sample = Vec::with_capacity(nx * ny);
    for x in 0..nx {
        for y in 0..ny {
            sample.push(format!("({},{})", field.space().label(x), factor.label(y)));
        }
    }
    let mut action = BTreeMap::new();
    for (word, left) in field.space().action() {
        let Some(right) = factor.action().get(word) else { continue };
        let mut table = BTreeMap::new();
        for (&x, &sx) in left {
            for (&y, &sy) in right {
                table.insert(x * ny + y, sx * ny + sy);
            }
        }
        if !table.is_empty() {
            action.insert(word.clone(), table);
        }
    }
    let mut measures = Vec::with_capacity(nx * ny);
    for x in 0..nx {
        for _ in 0..ny {
            measures.push(field.measure(x).clone());
        }
    }
    MeasureField::new(Space::new(sample, action)?, measures)
}

/// Permutations of the sample forming a finite group that commutes with
/// the action table; duplicates are collapsed.
fn validate_group(field: &MeasureField, group: &[Vec<usize>]) -> Result<BTreeSet<Vec<usize>>> {
    let n = field.space().len();
    let set: BTreeSet<Vec<usize>> = group.iter().cloned().collect();
    if set.is_empty() {
        return Err(Error::NotAGroup);
    }
    for f in &set {
        if f.len() != n {
            return Err(Error::NotAPermutation);
        }
        let image: BTreeSet<usize> = f.iter().copied().collect();
        if image.len() != n || image.iter().any(|&y| y >= n) {
            return Err(Error::NotAPermutation);
        }
    }
    for f in &set {
        for g in &set {
            let composed: Vec<usize> = (0..n).map(|x| f[g[x]]).collect();
            if !set.contains(&composed) {
                return Err(Error::NotAGroup);
            }
        }
    }
    for table in field.space().action().values() {
        for f in &set {
            for x in 0..n {
                match (table.get(&f[x]), table.get(&x)) {
                    (None, None) => {}
                    (Some(&lhs), Some(&y)) if lhs == f[y] => {}
                    _ => {
                        return Err(Error::NonCommutingActions);
                    }
                }
            }
        }
    }
    Ok(set)
}

/// Averages the field over a finite permutation group commuting with the
/// action: n^x = (1/|F|) sum_f m^{f(x)}. The result is exactly F-invariant
/// and its sup-defect never exceeds the input's.
pub fn finite_average(field: &MeasureField, group: &[Vec<usize>]) -> Result<MeasureField> {
    let set = validate_group(field, group)?;
    let measures = (0..field.space().len())
        .map(|x| {
            let parts: Vec<&Measure> = set.iter().map(|f| field.measure(f[x])).collect();
            Measure::average(&parts)
        })
        .collect();
    MeasureField::new(field.space().clone(), measures)
}

fn decode_tuple(mut idx: usize, base: usize, len: usize) -> Vec<usize> {
    let mut digits = vec![0usize; len];
    for d in digits.iter_mut().rev() {
        *d = idx % base;
        idx /= base;
    }
    digits
}

fn encode_tuple(digits: &[usize], base: usize) -> usize {
    digits.iter().fold(0, |acc, &d| acc * base + d)
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    if n == 1 {
        return vec![vec![0]];
    }
    let mut out = Vec::new();
    for tail in permutations(n - 1) {
        for slot in 0..n {
            let mut p = tail.clone();
            p.insert(slot, n - 1);
            out.push(p);
        }
    }
    out.sort();
    out
}

/// Field on unordered n-tuples of sample points, built literally as the
/// n-fold product extension with first-coordinate measures, averaged over
/// all coordinate permutations, then pushed to the orbit sample. The
/// resulting measure at {x_1..x_n} is (1/n) sum_i m^{x_i}.
pub fn sym_product_field(field: &MeasureField, n: usize) -> Result<MeasureField> {
    if !(2..=4).contains(&n) {
        return Err(Error::BadSymDegree(n));
    }
    let m = field.space().len();
    let mut ordered = field.clone();
    for _ in 1..n {
        ordered = product_extend(&ordered, field.space())?;
    }
    let total = ordered.space().len();
    debug_assert_eq!(total, m.pow(n as u32));
    let coordinate_perms: Vec<Vec<usize>> = permutations(n)
        .iter()
        .map(|pi| {
            (0..total)
                .map(|idx| {
                    let t = decode_tuple(idx, m, n);
                    let permuted: Vec<usize> = (0..n).map(|i| t[pi[i]]).collect();
                    encode_tuple(&permuted, m)
                })
                .collect()
        })
        .collect();
    let averaged = finite_average(&ordered, &coordinate_perms)?;

    // Quotient by the orbit map: the averaged field is constant on orbits,
    // and sorted tuples enumerate the orbits in index order.
    let mut orbit_of: BTreeMap<Vec<usize>, usize> = BTreeMap::new();
    let mut reps: Vec<Vec<usize>> = Vec::new();
    for idx in 0..total {
        let mut t = decode_tuple(idx, m, n);
        t.sort_unstable();
        orbit_of.entry(t.clone()).or_insert_with(|| {
            reps.push(t);
            reps.len() - 1
        });
    }
    let sample: Vec<String> = reps
        .iter()
        .map(|t| {
            let inner: Vec<&str> = t.iter().map(|&x| field.space().label(x)).collect();
            format!("{{{}}}", inner.join(","))
        })
        .collect();
    let mut action = BTreeMap::new();
    for (word, table) in averaged.space().action() {
        let mut quotient_table = BTreeMap::new();
        for (orbit_idx, rep) in reps.iter().enumerate() {
            if let Some(&target) = table.get(&encode_tuple(rep, m)) {
                let mut sorted_target = decode_tuple(target, m, n);
                sorted_target.sort_unstable();
                quotient_table.insert(orbit_idx, orbit_of[&sorted_target]);
            }
        }
        if !quotient_table.is_empty() {
            action.insert(word.clone(), quotient_table);
        }
    }
    let measures: Vec<Measure> = reps
        .iter()
        .map(|rep| averaged.measure(encode_tuple(rep, m)).clone())
        .collect();
    if cfg!(debug_assertions) {
        for idx in 0..total {
            let mut t = decode_tuple(idx, m, n);
            t.sort_unstable();
            debug_assert_eq!(averaged.measure(idx), &measures[orbit_of[&t]]);
        }
    }
    MeasureField::new(Space::new(sample, action)?, measures)
}

/// Prepends s to the depth-D ray word, then restores depth D: overlong
/// words are truncated and short ones are extended by repeating the ray's
/// last letter. Valid whenever |s| <= D.
fn ray_translate(s: &Word, ray: &Word, depth: usize) -> Word {
    let moved = s.mul(ray);
    let mut letters: Vec<Letter> = moved.letters().to_vec();
    letters.truncate(depth);
    let continuation = *ray.letters().last().expect("rays are nonempty");
    while letters.len() < depth {
        debug_assert_ne!(letters.last(), Some(&continuation.inverse()));
        letters.push(continuation);
    }
    Word::from_letters(letters).expect("translated ray stays reduced")
}

/// Field on a sample of depth-D boundary rays: m^xi is uniform on the
/// first N vertices (the prefixes of length 0..N-1) of the ray toward xi.
/// An action entry is recorded only when the translated ray lies in the
/// sample. Requires D >= N + |s| - 1 so the windowed prefixes of the
/// translated ray are exact.
pub fn geodesic_ray_field(
    rays: &[Word],
    window: usize,
    elements: &[Word],
) -> Result<MeasureField> {
    if rays.is_empty() || window == 0 {
        return Err(Error::BadRaySample);
    }
    let depth = rays[0].len();
    if depth == 0 || rays.iter().any(|r| r.len() != depth) {
        return Err(Error::BadRaySample);
    }
    let distinct: BTreeSet<&Word> = rays.iter().collect();
    if distinct.len() != rays.len() {
        return Err(Error::BadRaySample);
    }
    if window > depth {
        return Err(Error::RayDepthTooSmall { depth, window, elem_len: 0 });
    }
    for s in elements {
        if depth < window + s.len().saturating_sub(1) {
            return Err(Error::RayDepthTooSmall {
                depth,
                window,
                elem_len: s.len(),
            });
        }
    }
    let index_of: BTreeMap<&Word, usize> =
        rays.iter().enumerate().map(|(i, r)| (r, i)).collect();
    let sample: Vec<String> = rays.iter().map(|r| r.to_string()).collect();
    let mut action = BTreeMap::new();
    for s in elements {
        if s.is_identity() {
            continue;
        }
        let mut table = BTreeMap::new();
        for (x, ray) in rays.iter().enumerate() {
            let moved = ray_translate(s, ray, depth);
            if let Some(&y) = index_of.get(&moved) {
                table.insert(x, y);
            }
        }
        if !table.is_empty() {
            action.insert(s.clone(), table);
        }
    }
    let measures = rays
        .iter()
        .map(|ray| {
            let prefixes: Vec<Word> = (0..window)
                .map(|k| Word::from_letters(ray.letters()[..k].to_vec()).expect("reduced prefix"))
                .collect();
            Measure::uniform(&prefixes)
        })
        .collect::<Result<Vec<_>>>()?;
    MeasureField::new(Space::new(sample, action)?, measures)
}
