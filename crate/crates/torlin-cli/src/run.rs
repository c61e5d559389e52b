//! Command execution. Every emitting subcommand produces a JSON document of
//! the shape {"command", "inputs", ...outputs...}; `--verify` re-runs the
//! build from the embedded inputs and demands structural equality, so any
//! edit to an artifact is detected.

use std::collections::BTreeMap;
use std::path::Path;

use num_bigint::BigInt;
use num_complex::Complex64;
use num_traits::ToPrimitive;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use torlin::amencomb::{
    defect, finite_average, geodesic_ray_field, product_extend, restrict, sym_product_field,
    DefectReport, MeasureField, Space, Word,
};
use torlin::dynlab::{
    check_measure_sequence, discrepancy, iterate, uniform_grid, weyl_average, EmpiricalMeasure,
    Observable, TorusBox, TorusMap, TorusPoint,
};
use torlin::ergocert::{
    ergodicity_certificate, orbit_closure, verify_certificate, ErgodicityCertificate,
    LatticeVector,
};
use torlin::invariants::{amplify, betti_from_chi, fundamental_group_trivial, AmalgamSpec};
use torlin::projfact::{
    forward, inverse, multiset_distance, HomPoly, PointMultiset, ProjPoint,
};
use torlin::relalg::{
    trace as relation_trace, verify_relations, FiniteRelation, FullGroupElem, RelationOperator,
    TwoCocycle, PHASE_TOLERANCE,
};
use torlin::symrep::{char_poly, eval_word, sym_power};

use crate::parse;

/// Round-trip bound for `factor`: a larger residual means the root finder
/// failed to reproduce the form and the artifact must not be trusted.
pub const FACTOR_TOLERANCE: f64 = 1e-8;

#[derive(Debug)]
pub enum CliError {
    /// Bad flags, bad config, unsatisfied preconditions: exit 2.
    Failed(String),
    /// A certificate, identity or artifact failed re-verification: exit 3.
    Verification(String),
}

impl From<torlin::Error> for CliError {
    fn from(e: torlin::Error) -> Self {
        if e.is_verification_failure() {
            CliError::Verification(e.to_string())
        } else {
            CliError::Failed(e.to_string())
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Failed(e.to_string())
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Failed(e.to_string())
    }
}

/// A rendered command result: the JSON document plus an optional CSV
/// time-series for subcommands that emit one.
pub struct Built {
    pub doc: Value,
    pub csv: Option<String>,
}

impl Built {
    fn doc_only(doc: Value) -> Built {
        Built { doc, csv: None }
    }
}

pub fn pretty(doc: &Value) -> Result<String, CliError> {
    Ok(serde_json::to_string_pretty(doc)?)
}

fn complex_pair(z: Complex64) -> Value {
    json!([z.re, z.im])
}

// ---------------------------------------------------------------- rep

#[derive(Serialize, Deserialize)]
pub struct RepInputs {
    pub matrix: Option<String>,
    pub word: Option<String>,
    pub dim: usize,
}

pub fn rep(inputs: RepInputs) -> Result<Built, CliError> {
    let g = match (&inputs.matrix, &inputs.word) {
        (Some(m), None) => parse::mat2(m)?,
        (None, Some(w)) => eval_word(&parse::group_word(w)?),
        _ => {
            return Err(CliError::Failed(
                "give exactly one of --matrix or --word".into(),
            ))
        }
    };
    let rep = sym_power(&g, inputs.dim)?;
    let entries: Vec<Vec<String>> = (0..rep.dim())
        .map(|i| (0..rep.dim()).map(|j| rep.get(i, j).to_string()).collect())
        .collect();
    let cp = char_poly(&rep);
    let doc = json!({
        "command": "rep",
        "inputs": inputs,
        "source": g.entries_row_major().iter().map(BigInt::to_string).collect::<Vec<_>>(),
        "dim": rep.dim(),
        "entries": entries,
        "det": rep.det().to_string(),
        "trace": rep.trace().to_string(),
        "char_poly": cp.coeffs.iter().map(BigInt::to_string).collect::<Vec<_>>(),
    });
    Ok(Built::doc_only(doc))
}

// ---------------------------------------------------------------- cert

#[derive(Serialize, Deserialize)]
pub struct CertInputs {
    pub matrix: String,
    pub dim: usize,
}

pub fn cert(inputs: CertInputs) -> Result<Built, CliError> {
    let g = parse::mat2(&inputs.matrix)?;
    let certificate = ergodicity_certificate(&g, inputs.dim)?;
    let doc = json!({
        "command": "cert",
        "inputs": inputs,
        "certificate": serde_json::to_value(&certificate)?,
    });
    Ok(Built::doc_only(doc))
}

// ---------------------------------------------------------------- orbit

#[derive(Serialize, Deserialize)]
pub struct OrbitInputs {
    pub vector: String,
    pub gens: String,
    pub dim: usize,
    pub cap: usize,
}

pub fn orbit(inputs: OrbitInputs) -> Result<Built, CliError> {
    let v = LatticeVector(parse::bigint_list(&inputs.vector)?);
    let reps = parse::mat2_list(&inputs.gens)?
        .iter()
        .map(|g| sym_power(g, inputs.dim))
        .collect::<Result<Vec<_>, _>>()?;
    let result = orbit_closure(&v, &reps, inputs.cap)?;
    let doc = json!({
        "command": "orbit",
        "inputs": inputs,
        "result": serde_json::to_value(&result)?,
    });
    Ok(Built::doc_only(doc))
}

// ---------------------------------------------------------------- factor

#[derive(Serialize, Deserialize)]
pub struct FactorInputs {
    pub coeffs: Option<String>,
    pub points: Option<String>,
}

pub fn factor(inputs: FactorInputs) -> Result<Built, CliError> {
    let (poly, points, distance) = match (&inputs.coeffs, &inputs.points) {
        (Some(c), None) => {
            let poly = HomPoly::new(parse::complex_list(c)?)?;
            let points = inverse(&poly)?;
            let back = forward(&points)?;
            let distance = poly.distance(&back)?;
            (poly, points, distance)
        }
        (None, Some(p)) => {
            let raw = parse::point_list(p)?;
            let points = PointMultiset::new(
                raw.into_iter()
                    .map(|(a, b)| ProjPoint::new(a, b))
                    .collect::<Result<Vec<_>, _>>()?,
            )?;
            let poly = forward(&points)?;
            let back = inverse(&poly)?;
            let distance = multiset_distance(&points, &back)?;
            (poly, points, distance)
        }
        _ => {
            return Err(CliError::Failed(
                "give exactly one of --coeffs or --points".into(),
            ))
        }
    };
    if distance > FACTOR_TOLERANCE {
        return Err(CliError::Verification(format!(
            "round-trip distance {distance:e} exceeds {FACTOR_TOLERANCE:e}"
        )));
    }
    let doc = json!({
        "command": "factor",
        "inputs": inputs,
        "poly": poly.coeffs().iter().map(|&z| complex_pair(z)).collect::<Vec<_>>(),
        "points": points
            .points()
            .iter()
            .map(|p| json!([p.a().re, p.a().im, p.b().re, p.b().im]))
            .collect::<Vec<_>>(),
        "round_trip_distance": distance,
        "tolerance": FACTOR_TOLERANCE,
    });
    Ok(Built::doc_only(doc))
}

// ---------------------------------------------------------------- amen

#[derive(Serialize, Deserialize)]
pub struct GeodesicSource {
    pub rays: Vec<String>,
    pub window: usize,
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case")]
pub enum AmenStage {
    ProductExtend { factor: Space },
    FiniteAverage { group: Vec<Vec<usize>> },
    SymProduct { arity: usize },
    Restrict { subset: Vec<usize> },
}

impl AmenStage {
    fn name(&self) -> &'static str {
        match self {
            AmenStage::ProductExtend { .. } => "product_extend",
            AmenStage::FiniteAverage { .. } => "finite_average",
            AmenStage::SymProduct { .. } => "sym_product",
            AmenStage::Restrict { .. } => "restrict",
        }
    }
}

#[derive(Serialize, Deserialize)]
pub struct AmenConfig {
    #[serde(default)]
    pub field: Option<MeasureField>,
    #[serde(default)]
    pub geodesic: Option<GeodesicSource>,
    pub elements: Vec<String>,
    #[serde(default)]
    pub pipeline: Vec<AmenStage>,
}

#[derive(Serialize, Deserialize)]
pub struct AmenInputs {
    pub config: AmenConfig,
}

pub fn amen(inputs: AmenInputs) -> Result<Built, CliError> {
    let config = &inputs.config;
    let elements = config
        .elements
        .iter()
        .map(|s| Word::parse(s))
        .collect::<Result<Vec<_>, _>>()?;
    let mut field = match (&config.field, &config.geodesic) {
        (Some(f), None) => f.clone(),
        (None, Some(g)) => {
            let rays = g
                .rays
                .iter()
                .map(|r| Word::parse(r))
                .collect::<Result<Vec<_>, _>>()?;
            geodesic_ray_field(&rays, g.window, &elements)?
        }
        _ => {
            return Err(CliError::Failed(
                "config needs exactly one of \"field\" or \"geodesic\"".into(),
            ))
        }
    };

    let mut reports: Vec<(String, DefectReport)> =
        vec![("initial".into(), defect(&field, &elements)?)];
    for stage in &config.pipeline {
        field = match stage {
            AmenStage::ProductExtend { factor } => product_extend(&field, factor)?,
            AmenStage::FiniteAverage { group } => finite_average(&field, group)?,
            AmenStage::SymProduct { arity } => sym_product_field(&field, *arity)?,
            AmenStage::Restrict { subset } => restrict(&field, subset, &elements)?,
        };
        reports.push((stage.name().into(), defect(&field, &elements)?));
    }

    let stages: Vec<Value> = reports
        .iter()
        .map(|(op, report)| json!({"op": op, "sup": report.sup.to_string()}))
        .collect();
    let mut csv = String::from("stage,op,element,point,value\n");
    for (k, (op, report)) in reports.iter().enumerate() {
        for entry in &report.entries {
            csv.push_str(&format!(
                "{k},{op},{},{},{}\n",
                entry.element, entry.point, entry.value
            ));
        }
    }
    let doc = json!({
        "command": "amen",
        "inputs": inputs,
        "stages": stages,
        "final_field": serde_json::to_value(&field)?,
    });
    Ok(Built { doc, csv: Some(csv) })
}

// ---------------------------------------------------------------- relalg

#[derive(Serialize, Deserialize)]
pub struct CocycleEntry {
    pub x: usize,
    pub y: usize,
    pub z: usize,
    pub value: [f64; 2],
}

#[derive(Serialize, Deserialize)]
pub struct RelalgConfig {
    pub points: usize,
    pub classes: Vec<Vec<usize>>,
    #[serde(default)]
    pub cocycle: Option<Vec<CocycleEntry>>,
    pub permutations: Vec<Vec<usize>>,
    #[serde(default)]
    pub multiplier: Option<Vec<[f64; 2]>>,
}

#[derive(Serialize, Deserialize)]
pub struct RelalgInputs {
    pub config: RelalgConfig,
}

pub fn relalg(inputs: RelalgInputs) -> Result<Built, CliError> {
    let config = &inputs.config;
    let relation = FiniteRelation::from_classes(config.points, &config.classes)?;
    let cocycle = match &config.cocycle {
        Some(entries) => {
            let mut values = BTreeMap::new();
            for e in entries {
                values.insert((e.x, e.y, e.z), Complex64::new(e.value[0], e.value[1]));
            }
            TwoCocycle::new(&relation, values)?
        }
        None => TwoCocycle::trivial(&relation),
    };
    let perms = config
        .permutations
        .iter()
        .map(|p| FullGroupElem::new(&relation, p.clone()))
        .collect::<Result<Vec<_>, _>>()?;
    let identity = FullGroupElem::new(&relation, (0..config.points).collect())?;
    let theta = perms.first().unwrap_or(&identity);
    let phi = perms.get(1).unwrap_or(theta);
    let a: Vec<Complex64> = match &config.multiplier {
        Some(values) => {
            values.iter().map(|&[re, im]| Complex64::new(re, im)).collect()
        }
        None => vec![Complex64::new(1.0, 0.0); config.points],
    };

    let report = verify_relations(&relation, &cocycle, theta, phi, &a)?;
    let tau_one = relation_trace(
        &relation,
        &RelationOperator::identity(relation.pair_count()),
    )?;
    let trace_deviation = (tau_one - Complex64::new(1.0, 0.0)).norm();
    let max_deviation = report.max_deviation().max(trace_deviation);
    if max_deviation > PHASE_TOLERANCE {
        return Err(CliError::Verification(format!(
            "relation identities deviate by {max_deviation:e} (tolerance {PHASE_TOLERANCE:e})"
        )));
    }
    let doc = json!({
        "command": "relalg",
        "inputs": inputs,
        "report": {
            "composition_deviation": report.composition_deviation,
            "adjoint_deviation": report.adjoint_deviation,
            "covariance_deviation": report.covariance_deviation,
        },
        "trace_of_identity": complex_pair(tau_one),
        "max_deviation": max_deviation,
        "verified": true,
    });
    Ok(Built::doc_only(doc))
}

// ---------------------------------------------------------------- betti

#[derive(Serialize, Deserialize)]
pub struct BettiInputs {
    pub group: String,
    pub amplify: Option<String>,
}

pub fn betti(inputs: BettiInputs) -> Result<Built, CliError> {
    let spec = match inputs.group.as_str() {
        "sl2z" => AmalgamSpec::sl2z(),
        "psl2z" => AmalgamSpec::psl2z(),
        other => {
            return Err(CliError::Failed(format!(
                "unknown group {other:?}: expected sl2z or psl2z"
            )))
        }
    };
    let record = betti_from_chi(&spec)?;
    let verdict = fundamental_group_trivial(&record);
    let amplified = match &inputs.amplify {
        Some(t) => {
            let t = parse::rational(t)?;
            let scaled = amplify(&record, &t)?;
            let scaled_verdict = fundamental_group_trivial(&scaled);
            json!({
                "t": t.to_string(),
                "beta": scaled.betas.iter().map(|b| b.to_string()).collect::<Vec<_>>(),
                "fundamental_group_trivial": scaled_verdict.trivial,
            })
        }
        None => Value::Null,
    };
    let doc = json!({
        "command": "betti",
        "inputs": inputs,
        "beta": record.betas.iter().map(|b| b.to_string()).collect::<Vec<_>>(),
        "fundamental_group_trivial": verdict.trivial,
        "witness_index": verdict.witness_index,
        "amplified": amplified,
    });
    Ok(Built::doc_only(doc))
}

// ---------------------------------------------------------------- simulate

#[derive(Serialize, Deserialize)]
pub struct SimulateInputs {
    pub matrix: String,
    pub dim: usize,
    pub start: Option<String>,
    pub steps: usize,
    pub freq: String,
    pub boxes: Vec<String>,
    pub stride: Option<usize>,
    pub seed: u64,
}

pub fn simulate(inputs: SimulateInputs) -> Result<Built, CliError> {
    let g = parse::mat2(&inputs.matrix)?;
    let rep = sym_power(&g, inputs.dim)?;
    let x0 = match &inputs.start {
        Some(s) if s.contains('/') => TorusPoint::rational(parse::rational_list(s)?)?,
        Some(s) => TorusPoint::float(parse::f64_list(s)?)?,
        None => {
            let mut rng = StdRng::seed_from_u64(inputs.seed);
            TorusPoint::float((0..inputs.dim).map(|_| rng.gen_range(0.0..1.0)).collect())?
        }
    };
    let trace = iterate(&rep, &x0, inputs.steps)?;
    let freq_coords = parse::bigint_list(&inputs.freq)?;
    let freq = LatticeVector(freq_coords.clone());
    let average = weyl_average(&trace, &freq)?;
    let period = trace.period();

    let boxes = inputs
        .boxes
        .iter()
        .map(|b| {
            let (lower, upper) = parse::torus_box(b)?;
            TorusBox::new(lower, upper).map_err(CliError::from)
        })
        .collect::<Result<Vec<_>, _>>()?;
    let disc = if boxes.is_empty() {
        Value::Null
    } else {
        json!(discrepancy(&trace, &boxes)?)
    };

    let start_doc = match trace.start() {
        TorusPoint::Rational(coords) => {
            json!(coords.iter().map(|c| c.to_string()).collect::<Vec<_>>())
        }
        TorusPoint::Float(coords) => json!(coords),
    };

    // Running Birkhoff averages of the frequency character, sampled every
    // stride steps (and always at the final step).
    let vf: Vec<f64> = freq_coords
        .iter()
        .map(|c| {
            c.to_f64()
                .ok_or_else(|| CliError::Failed("frequency entry exceeds f64 range".into()))
        })
        .collect::<Result<Vec<_>, _>>()?;
    let stride = inputs.stride.unwrap_or_else(|| (inputs.steps / 1000).max(1));
    let mut csv = String::from("k,re,im,abs\n");
    let mut acc = Complex64::new(0.0, 0.0);
    for (k, point) in trace.points().iter().enumerate() {
        let phase: f64 = vf
            .iter()
            .zip(point.float_coords())
            .map(|(v, x)| v * x)
            .sum();
        acc += Complex64::from_polar(1.0, std::f64::consts::TAU * phase);
        if k % stride == 0 || k == inputs.steps {
            let mean = acc / (k + 1) as f64;
            csv.push_str(&format!("{k},{},{},{}\n", mean.re, mean.im, mean.norm()));
        }
    }

    let doc = json!({
        "command": "simulate",
        "inputs": inputs,
        "start": start_doc,
        "weyl_average": {"re": average.re, "im": average.im, "abs": average.norm()},
        "period": period.map(|p| json!({"preperiod": p.preperiod, "period": p.period})),
        "discrepancy": disc,
    });
    Ok(Built { doc, csv: Some(csv) })
}

// ---------------------------------------------------------------- dicho-check

#[derive(Serialize, Deserialize)]
pub struct ObservablePair {
    pub f1: Vec<i64>,
    pub f2: Vec<i64>,
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum MapSpec {
    Identity,
    Linear { matrix: String },
    Translate { by: Vec<f64> },
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MeasureSpec {
    Product,
    Diagonal { delta: f64 },
    Atoms { atoms: Vec<AtomSpec> },
}

#[derive(Serialize, Deserialize)]
pub struct AtomSpec {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub w: f64,
}

#[derive(Serialize, Deserialize)]
pub struct DichoConfig {
    pub dim: usize,
    pub grid: usize,
    pub observables: Vec<ObservablePair>,
    #[serde(default)]
    pub maps: Vec<MapSpec>,
    pub measures: Vec<MeasureSpec>,
}

#[derive(Serialize, Deserialize)]
pub struct DichoInputs {
    pub config: DichoConfig,
}

pub fn dicho_check(inputs: DichoInputs) -> Result<Built, CliError> {
    let config = &inputs.config;
    let grid = uniform_grid(config.dim, config.grid)?;
    let observables: Vec<(Observable, Observable)> = config
        .observables
        .iter()
        .map(|p| (Observable::character(&p.f1), Observable::character(&p.f2)))
        .collect();
    let maps = config
        .maps
        .iter()
        .map(|m| {
            Ok(match m {
                MapSpec::Identity => TorusMap::Identity,
                MapSpec::Linear { matrix } => {
                    TorusMap::Linear(sym_power(&parse::mat2(matrix)?, config.dim)?)
                }
                MapSpec::Translate { by } => TorusMap::Translate(by.clone()),
            })
        })
        .collect::<Result<Vec<_>, CliError>>()?;

    let mut seq = Vec::new();
    for spec in &config.measures {
        let measure = match spec {
            MeasureSpec::Product => EmpiricalMeasure::uniform(
                grid.iter()
                    .flat_map(|x| grid.iter().map(move |y| (x.clone(), y.clone())))
                    .collect(),
            )?,
            MeasureSpec::Diagonal { delta } => EmpiricalMeasure::uniform(
                grid.iter()
                    .map(|x| {
                        let mut coords = x.float_coords();
                        coords[0] += delta;
                        Ok((x.clone(), TorusPoint::float(coords)?))
                    })
                    .collect::<Result<Vec<_>, torlin::Error>>()?,
            )?,
            MeasureSpec::Atoms { atoms } => EmpiricalMeasure::new(
                atoms
                    .iter()
                    .map(|a| {
                        Ok((
                            TorusPoint::float(a.x.clone())?,
                            TorusPoint::float(a.y.clone())?,
                            a.w,
                        ))
                    })
                    .collect::<Result<Vec<_>, torlin::Error>>()?,
            )?,
        };
        seq.push(measure);
    }

    let diagnostics = check_measure_sequence(&seq, &observables, &maps, &grid)?;
    let mut csv = String::from(
        "measure,diagonal_mass,first_marginal,second_marginal,max_correlation_defect,pushforward_defect\n",
    );
    for (k, d) in diagnostics.iter().enumerate() {
        csv.push_str(&format!(
            "{k},{},{},{},{},{}\n",
            d.diagonal_mass,
            d.first_marginal_deviation,
            d.second_marginal_deviation,
            d.max_correlation_defect,
            d.pushforward_defect
        ));
    }
    let doc = json!({
        "command": "dicho-check",
        "inputs": inputs,
        "diagnostics": serde_json::to_value(&diagnostics)?,
    });
    Ok(Built { doc, csv: Some(csv) })
}

// ---------------------------------------------------------------- verify

/// Rebuild a document from its embedded inputs.
pub fn rebuild(kind: &str, inputs: Value) -> Result<Built, CliError> {
    match kind {
        "rep" => rep(serde_json::from_value(inputs)?),
        "cert" => cert(serde_json::from_value(inputs)?),
        "orbit" => orbit(serde_json::from_value(inputs)?),
        "factor" => factor(serde_json::from_value(inputs)?),
        "amen" => amen(serde_json::from_value(inputs)?),
        "relalg" => relalg(serde_json::from_value(inputs)?),
        "betti" => betti(serde_json::from_value(inputs)?),
        "simulate" => simulate(serde_json::from_value(inputs)?),
        "dicho-check" => dicho_check(serde_json::from_value(inputs)?),
        other => Err(CliError::Failed(format!("unknown artifact command {other:?}"))),
    }
}

/// Re-check an emitted artifact: certificates get the library-level witness
/// verification, and every artifact must equal a clean re-run from its own
/// inputs byte for byte.
pub fn verify_file(path: &Path, expected_kind: &str) -> Result<String, CliError> {
    let text = std::fs::read_to_string(path)?;
    let doc: Value = serde_json::from_str(&text)?;
    let kind = doc
        .get("command")
        .and_then(Value::as_str)
        .ok_or_else(|| CliError::Failed("artifact has no \"command\" field".into()))?
        .to_string();
    if kind != expected_kind {
        return Err(CliError::Failed(format!(
            "artifact was emitted by {kind:?}, not {expected_kind:?}"
        )));
    }
    let inputs = doc
        .get("inputs")
        .cloned()
        .ok_or_else(|| CliError::Failed("artifact has no \"inputs\" field".into()))?;

    if kind == "cert" {
        let certificate: ErgodicityCertificate = serde_json::from_value(
            doc.get("certificate")
                .cloned()
                .ok_or_else(|| CliError::Failed("artifact has no \"certificate\" field".into()))?,
        )?;
        verify_certificate(&certificate)?;
    }

    let rebuilt = rebuild(&kind, inputs)?;
    if rebuilt.doc != doc {
        return Err(CliError::Verification(format!(
            "artifact does not match a clean re-run of {kind}"
        )));
    }
    pretty(&json!({"command": kind, "verified": true}))
}
