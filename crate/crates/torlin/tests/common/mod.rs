//! Seeded random fixtures shared by the integration suites.

#![allow(dead_code)]

use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::Ratio;
use rand::rngs::StdRng;
use rand::seq::SliceRandom;
use rand::Rng;
use std::collections::{BTreeMap, BTreeSet};
use std::f64::consts::TAU;

use torlin::amencomb::{Letter, Measure, Space, Weight, Word};
use torlin::projfact::ProjPoint;
use torlin::relalg::{FiniteRelation, FullGroupElem, TwoCocycle};
use torlin::symrep::{Gen, GroupWord};

pub fn random_word(rng: &mut StdRng, max_len: usize) -> GroupWord {
    let len = rng.gen_range(0..=max_len);
    GroupWord(
        (0..len)
            .map(|_| match rng.gen_range(0..4) {
                0 => Gen::S,
                1 => Gen::SInv,
                2 => Gen::T,
                _ => Gen::TInv,
            })
            .collect(),
    )
}

/// Fubini-Study-ish random configuration, kept away from near-collisions
/// and from the coordinate axes so the root-finding stays well conditioned.
pub fn separated_points(rng: &mut StdRng, count: usize) -> Vec<ProjPoint> {
    let gauss = |rng: &mut StdRng| {
        let u: f64 = rng.gen_range(f64::EPSILON..1.0);
        let v: f64 = rng.gen_range(0.0..TAU);
        let r = (-2.0 * u.ln()).sqrt();
        Complex64::new(r * v.cos(), r * v.sin())
    };
    let mut points: Vec<ProjPoint> = Vec::new();
    while points.len() < count {
        let a = gauss(rng);
        let b = gauss(rng);
        let scale = (a.norm_sqr() + b.norm_sqr()).sqrt();
        if scale < 1e-3 || a.norm() < 0.1 * scale || b.norm() < 0.1 * scale {
            continue;
        }
        let p = ProjPoint::new(a, b).unwrap();
        if points.iter().all(|q| p.chordal_distance(q) > 0.1) {
            points.push(p);
        }
    }
    points
}

/// Reduced word over {a, A, b, B} with no immediate back-tracking.
pub fn random_free_word(rng: &mut StdRng, max_len: usize) -> Word {
    let alphabet = [Letter::A, Letter::AInv, Letter::B, Letter::BInv];
    let len = rng.gen_range(0..=max_len);
    let mut letters: Vec<Letter> = Vec::with_capacity(len);
    while letters.len() < len {
        let l = alphabet[rng.gen_range(0..4)];
        if letters.last().map_or(true, |p| p.inverse() != l) {
            letters.push(l);
        }
    }
    Word::from_letters(letters).unwrap()
}

/// Probability measure with small random support and exact rational weights.
pub fn random_measure(rng: &mut StdRng) -> Measure {
    let k = rng.gen_range(1..=4);
    let mut support: BTreeSet<Word> = BTreeSet::new();
    while support.len() < k {
        support.insert(random_free_word(rng, 3));
    }
    let raw: Vec<(Word, i64)> =
        support.into_iter().map(|w| (w, rng.gen_range(1..=9))).collect();
    let total: i64 = raw.iter().map(|(_, a)| a).sum();
    let weights: BTreeMap<Word, Weight> = raw
        .into_iter()
        .map(|(w, a)| (w, Ratio::new(BigInt::from(a), BigInt::from(total))))
        .collect();
    Measure::new(weights).unwrap()
}

/// Space on which each listed word acts by an independent random permutation.
pub fn random_permutation_space(
    prefix: &str,
    n: usize,
    words: &[&Word],
    rng: &mut StdRng,
) -> Space {
    let labels = (0..n).map(|i| format!("{prefix}{i}")).collect();
    let mut action = BTreeMap::new();
    for &w in words {
        let mut perm: Vec<usize> = (0..n).collect();
        perm.shuffle(rng);
        action.insert(w.clone(), (0..n).map(|x| (x, perm[x])).collect());
    }
    Space::new(labels, action).unwrap()
}

/// Random partition of a random number of points into orbit classes.
pub fn random_relation(rng: &mut StdRng, max_size: usize) -> FiniteRelation {
    let size = rng.gen_range(2..=max_size);
    let mut points: Vec<usize> = (0..size).collect();
    points.shuffle(rng);
    let mut classes: Vec<Vec<usize>> = Vec::new();
    let mut rest = &points[..];
    while !rest.is_empty() {
        let take = rng.gen_range(1..=rest.len());
        classes.push(rest[..take].to_vec());
        rest = &rest[take..];
    }
    FiniteRelation::from_classes(size, &classes).unwrap()
}

/// Cocycle from a random unit phase function with the required diagonal
/// and antisymmetry; construction re-runs the exhaustive axiom checks.
pub fn random_coboundary(relation: &FiniteRelation, rng: &mut StdRng) -> TwoCocycle {
    let mut b = BTreeMap::new();
    for class in relation.classes() {
        for (i, &x) in class.iter().enumerate() {
            b.insert((x, x), Complex64::new(1.0, 0.0));
            for &y in &class[i + 1..] {
                let z = Complex64::from_polar(1.0, TAU * rng.gen::<f64>());
                b.insert((x, y), z);
                b.insert((y, x), z.conj());
            }
        }
    }
    TwoCocycle::coboundary(relation, &b).unwrap()
}

/// Uniformly random class-preserving permutation.
pub fn random_full_group_elem(relation: &FiniteRelation, rng: &mut StdRng) -> FullGroupElem {
    let mut perm: Vec<usize> = (0..relation.size()).collect();
    for class in relation.classes() {
        let mut image = class.clone();
        image.shuffle(rng);
        for (&x, &y) in class.iter().zip(&image) {
            perm[x] = y;
        }
    }
    FullGroupElem::new(relation, perm).unwrap()
}
