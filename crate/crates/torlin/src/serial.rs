//! Serde adapters: big integers and rationals travel as decimal strings so
//! JSON output is lossless and byte-stable regardless of magnitude.

pub(crate) mod bigint {
    use num_bigint::BigInt;
    use serde::{de::Error as DeError, Deserialize, Deserializer, Serializer};
    use std::str::FromStr;

    pub fn serialize<S: Serializer>(x: &BigInt, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&x.to_string())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<BigInt, D::Error> {
        let raw = String::deserialize(d)?;
        BigInt::from_str(&raw).map_err(|e| D::Error::custom(format!("bad integer {raw:?}: {e}")))
    }
}

pub(crate) mod bigint_vec {
    use num_bigint::BigInt;
    use serde::{de::Error as DeError, Deserialize, Deserializer, Serializer};
    use std::str::FromStr;

    pub fn serialize<S: Serializer>(xs: &[BigInt], s: S) -> Result<S::Ok, S::Error> {
        s.collect_seq(xs.iter().map(|x| x.to_string()))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<BigInt>, D::Error> {
        let raw = Vec::<String>::deserialize(d)?;
        raw.iter()
            .map(|t| BigInt::from_str(t).map_err(|e| D::Error::custom(format!("bad integer {t:?}: {e}"))))
            .collect()
    }
}

pub(crate) mod ratio {
    use num_bigint::BigInt;
    use num_rational::Ratio;
    use serde::{de::Error as DeError, Deserialize, Deserializer, Serializer};
    use std::str::FromStr;

    pub fn serialize<S: Serializer>(x: &Ratio<BigInt>, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&x.to_string())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Ratio<BigInt>, D::Error> {
        let raw = String::deserialize(d)?;
        Ratio::from_str(&raw).map_err(|e| D::Error::custom(format!("bad rational {raw:?}: {e}")))
    }
}

pub(crate) mod ratio_vec {
    use num_bigint::BigInt;
    use num_rational::Ratio;
    use serde::{de::Error as DeError, Deserialize, Deserializer, Serializer};
    use std::str::FromStr;

    pub fn serialize<S: Serializer>(xs: &[Ratio<BigInt>], s: S) -> Result<S::Ok, S::Error> {
        s.collect_seq(xs.iter().map(|x| x.to_string()))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<Ratio<BigInt>>, D::Error> {
        let raw = Vec::<String>::deserialize(d)?;
        raw.iter()
            .map(|t| Ratio::from_str(t).map_err(|e| D::Error::custom(format!("bad rational {t:?}: {e}"))))
            .collect()
    }
}
