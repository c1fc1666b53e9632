//! JSON and CSV formats.
//!
//! Complex numbers are `[re, im]` pairs and matrices are lists of rows.
//!
//! ```json
//! {"dims": [2, 2], "matrix": [[[0.5, 0.0], ...], ...]}
//! {"outcomes": ["0", "1"], "kraus": {"0": [[[...]]], "1": [[[...]]]}}
//! {"probs": [0.3, 0.7]}
//! {"probs": [0.5, 0.5], "side_dim": 1, "ref_dim": 2, "vectors": [[[1, 0], [0, 0]], ...]}
//! ```
//!
//! JSON floats use the shortest representation that parses back to the same
//! bits, so a write/read round trip is exact. CSV floats use 17 significant
//! digits in scientific notation.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::linalg::{CMat, CVec, C64};
use crate::qcore::{ClassicallyCoherentState, DensityOperator, Measurement};
use crate::{Error, Result};

pub type JsonComplex = [f64; 2];
pub type JsonMatrix = Vec<Vec<JsonComplex>>;

fn format_err(e: impl std::fmt::Display) -> Error {
    Error::Format(e.to_string())
}

pub fn matrix_to_json(m: &CMat) -> JsonMatrix {
    (0..m.nrows()).map(|i| (0..m.ncols()).map(|j| [m[(i, j)].re, m[(i, j)].im]).collect()).collect()
}

pub fn matrix_from_json(rows: &JsonMatrix) -> Result<CMat> {
    let r = rows.len();
    let c = rows.first().map_or(0, Vec::len);
    if rows.iter().any(|row| row.len() != c) {
        return Err(Error::Format("matrix rows have different lengths".into()));
    }
    Ok(CMat::from_fn(r, c, |i, j| C64::new(rows[i][j][0], rows[i][j][1])))
}

pub fn vector_to_json(v: &CVec) -> Vec<JsonComplex> {
    v.iter().map(|z| [z.re, z.im]).collect()
}

pub fn vector_from_json(v: &[JsonComplex]) -> CVec {
    CVec::from_iterator(v.len(), v.iter().map(|z| C64::new(z[0], z[1])))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StateFile {
    pub dims: Vec<usize>,
    pub matrix: JsonMatrix,
}

impl StateFile {
    pub fn from_state(rho: &DensityOperator) -> Self {
        Self { dims: rho.dims().to_vec(), matrix: matrix_to_json(rho.matrix()) }
    }

    pub fn to_state(&self) -> Result<DensityOperator> {
        DensityOperator::new(matrix_from_json(&self.matrix)?, self.dims.clone())
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeasurementFile {
    pub outcomes: Vec<String>,
    pub kraus: BTreeMap<String, Vec<JsonMatrix>>,
}

impl MeasurementFile {
    pub fn from_measurement(m: &Measurement) -> Self {
        let kraus = m
            .outcomes()
            .iter()
            .zip(m.kraus())
            .map(|(x, ks)| (x.clone(), ks.iter().map(matrix_to_json).collect()))
            .collect();
        Self { outcomes: m.outcomes().to_vec(), kraus }
    }

    pub fn to_measurement(&self) -> Result<Measurement> {
        if self.kraus.len() != self.outcomes.len() {
            return Err(Error::Format(format!(
                "{} outcomes but Kraus operators for {} labels",
                self.outcomes.len(),
                self.kraus.len()
            )));
        }
        let mut kraus = Vec::with_capacity(self.outcomes.len());
        for x in &self.outcomes {
            let ks = self.kraus.get(x).ok_or_else(|| Error::Format(format!("no Kraus operators for outcome {x:?}")))?;
            kraus.push(ks.iter().map(matrix_from_json).collect::<Result<Vec<_>>>()?);
        }
        Measurement::new(self.outcomes.clone(), kraus)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
enum DistributionRepr {
    Object { probs: Vec<f64> },
    Bare(Vec<f64>),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoherentStateFile {
    pub probs: Vec<f64>,
    pub side_dim: usize,
    pub ref_dim: usize,
    pub vectors: Vec<Vec<JsonComplex>>,
}

impl CoherentStateFile {
    pub fn from_state(s: &ClassicallyCoherentState) -> Self {
        Self {
            probs: s.probs().to_vec(),
            side_dim: s.side_dim(),
            ref_dim: s.ref_dim(),
            vectors: s.vectors().iter().map(vector_to_json).collect(),
        }
    }

    pub fn to_state(&self) -> Result<ClassicallyCoherentState> {
        let vectors = self.vectors.iter().map(|v| vector_from_json(v)).collect();
        ClassicallyCoherentState::new_subnormalized(self.probs.clone(), self.side_dim, self.ref_dim, vectors)
    }
}

pub fn from_json_str<T: DeserializeOwned>(s: &str) -> Result<T> {
    serde_json::from_str(s).map_err(format_err)
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Format(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| Error::Format(format!("{}: {e}", path.display())))
}

pub fn to_json_string<T: Serialize + ?Sized>(value: &T) -> Result<String> {
    serde_json::to_string_pretty(value).map_err(format_err)
}

pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<()> {
    let mut text = to_json_string(value)?;
    text.push('\n');
    std::fs::write(path, text).map_err(|e| Error::Format(format!("{}: {e}", path.display())))
}

pub fn state_from_json(s: &str) -> Result<DensityOperator> {
    from_json_str::<StateFile>(s)?.to_state()
}

pub fn state_to_json(rho: &DensityOperator) -> Result<String> {
    to_json_string(&StateFile::from_state(rho))
}

pub fn read_state(path: &Path) -> Result<DensityOperator> {
    read_json::<StateFile>(path)?.to_state()
}

pub fn measurement_from_json(s: &str) -> Result<Measurement> {
    from_json_str::<MeasurementFile>(s)?.to_measurement()
}

pub fn measurement_to_json(m: &Measurement) -> Result<String> {
    to_json_string(&MeasurementFile::from_measurement(m))
}

pub fn read_measurement(path: &Path) -> Result<Measurement> {
    read_json::<MeasurementFile>(path)?.to_measurement()
}

pub fn distribution_from_json(s: &str) -> Result<Vec<f64>> {
    Ok(match from_json_str::<DistributionRepr>(s)? {
        DistributionRepr::Object { probs } | DistributionRepr::Bare(probs) => probs,
    })
}

pub fn distribution_to_json(probs: &[f64]) -> Result<String> {
    to_json_string(&DistributionRepr::Object { probs: probs.to_vec() })
}

pub fn read_distribution(path: &Path) -> Result<Vec<f64>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Format(format!("{}: {e}", path.display())))?;
    distribution_from_json(&text)
}

pub fn coherent_state_from_json(s: &str) -> Result<ClassicallyCoherentState> {
    from_json_str::<CoherentStateFile>(s)?.to_state()
}

pub fn coherent_state_to_json(state: &ClassicallyCoherentState) -> Result<String> {
    to_json_string(&CoherentStateFile::from_state(state))
}

pub fn read_coherent_state(path: &Path) -> Result<ClassicallyCoherentState> {
    read_json::<CoherentStateFile>(path)?.to_state()
}

/// 17 significant digits, `.` decimal separator, `inf`/`-inf`/`nan` for
/// non-finite values.
pub fn csv_float(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else if x.is_infinite() {
        if x > 0.0 { "inf" } else { "-inf" }.into()
    } else {
        format!("{x:.16e}")
    }
}

/// Comma-separated table. Fields containing commas, quotes or newlines are quoted.
#[derive(Debug, Clone, Default)]
pub struct Csv {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

fn quote(field: &str) -> String {
    if field.contains([',', '"', '\n']) {
        format!("\"{}\"", field.replace('"', "\"\""))
    } else {
        field.to_string()
    }
}

impl Csv {
    pub fn new(header: &[&str]) -> Self {
        Self { header: header.iter().map(|s| s.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        for line in std::iter::once(&self.header).chain(&self.rows) {
            let fields: Vec<String> = line.iter().map(|f| quote(f)).collect();
            let _ = writeln!(out, "{}", fields.join(","));
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg;
    use crate::rng::rng_from_seed;

    #[test]
    fn state_round_trip_is_exact() {
        let mut rng = rng_from_seed(1);
        let rho = DensityOperator::new(linalg::random_density(4, 3, &mut rng), vec![2, 2]).unwrap();
        let back = state_from_json(&state_to_json(&rho).unwrap()).unwrap();
        assert_eq!(back.dims(), rho.dims());
        assert_eq!(back.matrix(), rho.matrix());
    }

    #[test]
    fn measurement_round_trip() {
        let mut rng = rng_from_seed(2);
        let m = Measurement::random_efficient(2, 3, &mut rng);
        let back = measurement_from_json(&measurement_to_json(&m).unwrap()).unwrap();
        assert_eq!(back.outcomes(), m.outcomes());
        for (a, b) in back.kraus().iter().zip(m.kraus()) {
            assert_eq!(a, b);
        }
    }

    #[test]
    fn measurement_rejects_missing_label() {
        let text = r#"{"outcomes": ["a", "b"], "kraus": {"a": [[[[1, 0], [0, 0]], [[0, 0], [1, 0]]]]}}"#;
        assert!(matches!(measurement_from_json(text), Err(Error::Format(_))));
    }

    #[test]
    fn distributions_and_cc_states() {
        assert_eq!(distribution_from_json("[0.3, 0.7]").unwrap(), vec![0.3, 0.7]);
        assert_eq!(distribution_from_json(r#"{"probs": [1.0]}"#).unwrap(), vec![1.0]);
        let s = ClassicallyCoherentState::correlated(vec![0.25, 0.75]).unwrap();
        let back = coherent_state_from_json(&coherent_state_to_json(&s).unwrap()).unwrap();
        assert_eq!(back.probs(), s.probs());
        assert_eq!(back.vectors(), s.vectors());
    }

    #[test]
    fn csv_formatting() {
        assert_eq!(csv_float(0.1), "1.0000000000000001e-1");
        assert_eq!(csv_float(f64::INFINITY), "inf");
        let mut t = Csv::new(&["S", "C", "witness"]);
        t.push(vec![csv_float(0.0), csv_float(1.0), "a,b".into()]);
        assert_eq!(t.render(), "S,C,witness\n0.0000000000000000e0,1.0000000000000000e0,\"a,b\"\n");
    }
}
