//! Exact L2-Betti numbers of amalgamated products of finite groups.
//!
//! For `A *_C B` with finite A, B, C the Euler characteristic is
//! `1/|A| + 1/|B| - 1/|C|`; when the amalgam is infinite the first L2-Betti
//! number is `-chi` and every other one vanishes. Scaling by a positive
//! rational t models passing to a finite-index subgroup or a compression,
//! which divides every Betti number by t. All arithmetic is exact.

use crate::serial;
use crate::{Error, Result};
use num_bigint::BigInt;
use num_rational::Ratio;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

pub type Rational = Ratio<BigInt>;

/// Order of a vertex or edge group: finite or the marker for infinity.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum GroupOrder {
    Finite(u64),
    #[serde(rename = "inf")]
    Infinite,
}

impl GroupOrder {
    fn finite(self) -> Result<u64> {
        match self {
            GroupOrder::Finite(k) => Ok(k),
            GroupOrder::Infinite => Err(Error::InfiniteOrder),
        }
    }
}

/// Amalgam `A *_C B` described by the three group orders. When all orders
/// are finite the edge order must divide both vertex orders.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AmalgamSpec {
    pub a_order: GroupOrder,
    pub b_order: GroupOrder,
    pub c_order: GroupOrder,
}

impl AmalgamSpec {
    pub fn new(a_order: GroupOrder, b_order: GroupOrder, c_order: GroupOrder) -> Result<Self> {
        if let (GroupOrder::Finite(a), GroupOrder::Finite(c)) = (a_order, c_order) {
            if a == 0 || c == 0 || a % c != 0 {
                return Err(Error::BadAmalgam);
            }
        }
        if let (GroupOrder::Finite(b), GroupOrder::Finite(c)) = (b_order, c_order) {
            if b == 0 || c == 0 || b % c != 0 {
                return Err(Error::BadAmalgam);
            }
        }
        Ok(AmalgamSpec { a_order, b_order, c_order })
    }

    pub fn from_finite(a: u64, b: u64, c: u64) -> Result<Self> {
        AmalgamSpec::new(GroupOrder::Finite(a), GroupOrder::Finite(b), GroupOrder::Finite(c))
    }

    /// `SL2(Z) = C4 *_{C2} C6`.
    pub fn sl2z() -> Self {
        AmalgamSpec::from_finite(4, 6, 2).unwrap()
    }

    /// `PSL2(Z) = C2 * C3` (trivial edge group).
    pub fn psl2z() -> Self {
        AmalgamSpec::from_finite(2, 3, 1).unwrap()
    }
}

/// `chi = 1/|A| + 1/|B| - 1/|C|`, exact; errors on infinite orders.
pub fn euler_characteristic(spec: &AmalgamSpec) -> Result<Rational> {
    let a = spec.a_order.finite()?;
    let b = spec.b_order.finite()?;
    let c = spec.c_order.finite()?;
    let inv = |k: u64| Rational::new(BigInt::one(), BigInt::from(k));
    Ok(inv(a) + inv(b) - inv(c))
}

/// L2-Betti numbers `beta_0, beta_1, beta_2` as exact rationals.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BettiRecord {
    #[serde(with = "serial::ratio_vec")]
    pub betas: Vec<Rational>,
}

impl BettiRecord {
    pub fn beta(&self, k: usize) -> Rational {
        self.betas.get(k).cloned().unwrap_or_else(Rational::zero)
    }
}

/// Betti numbers of an infinite amalgam of finite groups: `beta_0 = 0`,
/// `beta_1 = -chi`, higher ones vanish. Requires `chi <= 0` and rejects
/// the degenerate case where both edge indices are 1 (a finite group).
pub fn betti_from_chi(spec: &AmalgamSpec) -> Result<BettiRecord> {
    let chi = euler_characteristic(spec)?;
    let a = spec.a_order.finite()?;
    let b = spec.b_order.finite()?;
    let c = spec.c_order.finite()?;
    if a == c && b == c {
        return Err(Error::FiniteAmalgam);
    }
    if chi.is_positive() {
        return Err(Error::PositiveChi(chi.to_string()));
    }
    Ok(BettiRecord { betas: vec![Rational::zero(), -chi, Rational::zero()] })
}

/// Divides every Betti number by t > 0 (index/compression scaling).
pub fn amplify(record: &BettiRecord, t: &Rational) -> Result<BettiRecord> {
    if !t.is_positive() {
        return Err(Error::BadAmplification(t.to_string()));
    }
    Ok(BettiRecord { betas: record.betas.iter().map(|b| b / t).collect() })
}

/// Verdict on triviality of the fundamental group of the associated
/// equivalence relation, justified by a finite positive Betti number:
/// scaling by t > 1 changes such a number, so no self-similarity is
/// possible and the fundamental group is trivial.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrivialityVerdict {
    pub trivial: bool,
    pub witness_index: Option<usize>,
    pub reason: String,
}

pub fn fundamental_group_trivial(record: &BettiRecord) -> TrivialityVerdict {
    match record.betas.iter().position(|b| b.is_positive()) {
        Some(k) => TrivialityVerdict {
            trivial: true,
            witness_index: Some(k),
            reason: format!(
                "beta_{k} = {} is finite and positive; amplification by t scales it by 1/t",
                record.betas[k]
            ),
        },
        None => TrivialityVerdict {
            trivial: false,
            witness_index: None,
            reason: "no finite positive Betti number in the record".into(),
        },
    }
}

/// True when the two records differ in some degree (shorter records are
/// padded with zeros).
pub fn distinguish(a: &BettiRecord, b: &BettiRecord) -> bool {
    let len = a.betas.len().max(b.betas.len());
    (0..len).any(|k| a.beta(k) != b.beta(k))
}
