//! Flag-value parsers. Matrices arrive as comma-separated row-major
//! integers, vectors as comma-separated integers, rationals as "p/q",
//! complex numbers as "re,im" pairs joined by semicolons.

use std::str::FromStr;

use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::Ratio;
use torlin::symrep::{Gen, GroupWord, Mat2};

use crate::run::CliError;

pub fn bigint_list(s: &str) -> Result<Vec<BigInt>, CliError> {
    s.split(',')
        .map(|t| {
            BigInt::from_str(t.trim())
                .map_err(|_| CliError::Failed(format!("bad integer {t:?}")))
        })
        .collect()
}

pub fn mat2(s: &str) -> Result<Mat2, CliError> {
    let entries = bigint_list(s)?;
    let [a, b, c, d] = <[BigInt; 4]>::try_from(entries)
        .map_err(|_| CliError::Failed(format!("matrix needs 4 entries, got {s:?}")))?;
    Mat2::new(a, b, c, d).map_err(CliError::from)
}

pub fn mat2_list(s: &str) -> Result<Vec<Mat2>, CliError> {
    s.split(';').map(mat2).collect()
}

/// Word in the two standard generators: `s`/`t` for the generators,
/// `S`/`T` for their inverses, e.g. "stT".
pub fn group_word(s: &str) -> Result<GroupWord, CliError> {
    let mut letters = Vec::new();
    for ch in s.chars() {
        letters.push(match ch {
            's' => Gen::S,
            'S' => Gen::SInv,
            't' => Gen::T,
            'T' => Gen::TInv,
            other => {
                return Err(CliError::Failed(format!(
                    "bad word letter {other:?}: expected s, S, t or T"
                )))
            }
        });
    }
    Ok(GroupWord(letters))
}

pub fn rational(s: &str) -> Result<Ratio<BigInt>, CliError> {
    Ratio::from_str(s.trim()).map_err(|e| CliError::Failed(format!("bad rational {s:?}: {e}")))
}

pub fn rational_list(s: &str) -> Result<Vec<Ratio<BigInt>>, CliError> {
    s.split(',').map(rational).collect()
}

pub fn f64_list(s: &str) -> Result<Vec<f64>, CliError> {
    s.split(',')
        .map(|t| {
            f64::from_str(t.trim()).map_err(|_| CliError::Failed(format!("bad number {t:?}")))
        })
        .collect()
}

/// Semicolon-separated "re,im" pairs.
pub fn complex_list(s: &str) -> Result<Vec<Complex64>, CliError> {
    s.split(';')
        .map(|pair| {
            let parts = f64_list(pair)?;
            match parts[..] {
                [re] => Ok(Complex64::new(re, 0.0)),
                [re, im] => Ok(Complex64::new(re, im)),
                _ => Err(CliError::Failed(format!(
                    "bad complex number {pair:?}: expected re or re,im"
                ))),
            }
        })
        .collect()
}

/// Semicolon-separated projective points "a_re,a_im,b_re,b_im".
pub fn point_list(s: &str) -> Result<Vec<(Complex64, Complex64)>, CliError> {
    s.split(';')
        .map(|quad| {
            let parts = f64_list(quad)?;
            let [ar, ai, br, bi] = <[f64; 4]>::try_from(parts).map_err(|_| {
                CliError::Failed(format!("bad point {quad:?}: expected a_re,a_im,b_re,b_im"))
            })?;
            Ok((Complex64::new(ar, ai), Complex64::new(br, bi)))
        })
        .collect()
}

/// Box as "lo:hi" ranges joined by commas, one range per dimension.
pub fn torus_box(s: &str) -> Result<(Vec<f64>, Vec<f64>), CliError> {
    let mut lower = Vec::new();
    let mut upper = Vec::new();
    for range in s.split(',') {
        let (lo, hi) = range.split_once(':').ok_or_else(|| {
            CliError::Failed(format!("bad box range {range:?}: expected lo:hi"))
        })?;
        lower.push(
            f64::from_str(lo.trim())
                .map_err(|_| CliError::Failed(format!("bad number {lo:?}")))?,
        );
        upper.push(
            f64::from_str(hi.trim())
                .map_err(|_| CliError::Failed(format!("bad number {hi:?}")))?,
        );
    }
    Ok((lower, upper))
}
