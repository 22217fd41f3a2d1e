//! JSON run configuration.
//!
//! Matrices are row-major nested arrays. Diagonal matrices may also be
//! written as flat arrays of their diagonal.

use std::collections::BTreeMap;
use std::path::PathBuf;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::lmi::{Assignment, DecisionLayout, LmiError, ObserverProblem, SlotId};
use crate::model::{DelayBounds, GrnModel, MeasurementModel, SectorBound};
use crate::sdp::SolverConfig;
use crate::sim::SimConfig;

#[derive(Debug, thiserror::Error, Clone, PartialEq)]
pub enum ConfigError {
    #[error("parse error: {message}")]
    Parse { message: String },
    #[error("schema error at `{path}`: {message}")]
    Schema { path: String, message: String },
    #[error("dimension error at `{path}`: {message}")]
    Dimension { path: String, message: String },
}

impl ConfigError {
    pub fn path(&self) -> Option<&str> {
        match self {
            ConfigError::Parse { .. } => None,
            ConfigError::Schema { path, .. } | ConfigError::Dimension { path, .. } => Some(path),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
enum MatrixDoc {
    Nested(Vec<Vec<f64>>),
    Flat(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelDoc {
    degradation_mrna: MatrixDoc,
    translation: MatrixDoc,
    degradation_protein: MatrixDoc,
    coupling: Vec<Vec<f64>>,
    diffusion_mrna: Vec<MatrixDoc>,
    diffusion_protein: Vec<MatrixDoc>,
    half_widths: Vec<f64>,
    hill: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    basal: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct MeasurementDoc {
    mrna: Vec<Vec<f64>>,
    protein: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct DelaysDoc {
    tau_bar: f64,
    sigma_bar: f64,
    mu1: f64,
    mu2: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SectorDoc {
    slopes: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct GainsDoc {
    k1: Vec<Vec<f64>>,
    k2: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
enum AssignmentDoc {
    Named(String),
    Slots(BTreeMap<String, MatrixDoc>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RunConfigDoc {
    model: ModelDoc,
    measurement: MeasurementDoc,
    delays: DelaysDoc,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    sector: Option<SectorDoc>,
    #[serde(default)]
    solver: SolverConfig,
    #[serde(default)]
    simulation: SimConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    output_dir: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    assignment: Option<AssignmentDoc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    gains: Option<GainsDoc>,
}

/// Decision values to evaluate in a verify run.
#[derive(Debug, Clone, PartialEq)]
pub enum AssignmentSpec {
    /// Identity for square slots, zero elsewhere.
    Identity,
    /// Explicit slot values, sorted by slot name.
    Slots(Vec<(SlotId, DMatrix<f64>)>),
}

impl AssignmentSpec {
    pub fn resolve(&self, layout: &DecisionLayout) -> Result<Assignment, LmiError> {
        match self {
            AssignmentSpec::Identity => Ok(layout.identity_assignment()),
            AssignmentSpec::Slots(slots) => {
                layout.pack(|id| slots.iter().find(|(s, _)| *s == id).map(|(_, m)| m.clone()))
            }
        }
    }
}

/// A validated run configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub problem: ObserverProblem,
    pub solver: SolverConfig,
    pub simulation: SimConfig,
    pub output_dir: Option<PathBuf>,
    pub assignment: Option<AssignmentSpec>,
    /// Fixed observer gains `(K1, K2)`.
    pub gains: Option<(DMatrix<f64>, DMatrix<f64>)>,
}

fn dim_err(path: impl Into<String>, message: impl Into<String>) -> ConfigError {
    ConfigError::Dimension { path: path.into(), message: message.into() }
}

fn nested(rows: &[Vec<f64>], path: &str) -> Result<DMatrix<f64>, ConfigError> {
    let ncols = rows.first().map_or(0, Vec::len);
    if let Some(i) = rows.iter().position(|r| r.len() != ncols) {
        return Err(dim_err(
            format!("{path}[{i}]"),
            format!("ragged matrix: row has {} entries, expected {ncols}", rows[i].len()),
        ));
    }
    Ok(DMatrix::from_fn(rows.len(), ncols, |i, j| rows[i][j]))
}

fn matrix(doc: &MatrixDoc, path: &str) -> Result<DMatrix<f64>, ConfigError> {
    match doc {
        MatrixDoc::Nested(rows) => nested(rows, path),
        MatrixDoc::Flat(d) => Ok(DMatrix::from_diagonal(&DVector::from_row_slice(d))),
    }
}

fn diagonal(doc: &MatrixDoc, path: &str) -> Result<DVector<f64>, ConfigError> {
    let m = matrix(doc, path)?;
    if !m.is_square() {
        return Err(dim_err(path, format!("expected a square diagonal matrix, got {}x{}", m.nrows(), m.ncols())));
    }
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            if i != j && m[(i, j)] != 0.0 {
                return Err(dim_err(format!("{path}[{i}][{j}]"), "matrix must be diagonal"));
            }
        }
    }
    Ok(m.diagonal())
}

fn rows_of(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

fn expect_shape(m: &DMatrix<f64>, shape: (usize, usize), path: &str) -> Result<(), ConfigError> {
    if m.shape() == shape {
        Ok(())
    } else {
        Err(dim_err(
            path,
            format!("expected a {}x{} matrix, got {}x{}", shape.0, shape.1, m.nrows(), m.ncols()),
        ))
    }
}

fn schema_error(err: serde_path_to_error::Error<serde_json::Error>) -> ConfigError {
    let mut path = err.path().to_string();
    let inner = err.into_inner();
    if matches!(inner.classify(), serde_json::error::Category::Syntax | serde_json::error::Category::Eof) {
        return ConfigError::Parse { message: inner.to_string() };
    }
    let message = inner.to_string();
    if let Some(rest) = message.strip_prefix("missing field `") {
        if let Some(name) = rest.split('`').next() {
            path = if path == "." { name.to_string() } else { format!("{path}.{name}") };
        }
    }
    ConfigError::Schema { path, message }
}

impl RunConfig {
    fn from_doc(doc: RunConfigDoc) -> Result<Self, ConfigError> {
        let m = &doc.model;
        let degradation_mrna = diagonal(&m.degradation_mrna, "model.degradation_mrna")?;
        let n = degradation_mrna.len();
        let axes = |docs: &[MatrixDoc], name: &str| -> Result<Vec<DVector<f64>>, ConfigError> {
            docs.iter()
                .enumerate()
                .map(|(k, d)| diagonal(d, &format!("model.{name}[{k}]")))
                .collect()
        };
        let model = GrnModel {
            degradation_mrna,
            translation: diagonal(&m.translation, "model.translation")?,
            degradation_protein: diagonal(&m.degradation_protein, "model.degradation_protein")?,
            coupling: nested(&m.coupling, "model.coupling")?,
            diffusion_mrna: axes(&m.diffusion_mrna, "diffusion_mrna")?,
            diffusion_protein: axes(&m.diffusion_protein, "diffusion_protein")?,
            half_widths: m.half_widths.clone(),
            hill: m.hill,
            basal: m.basal.as_ref().map_or_else(|| DVector::zeros(n), |b| DVector::from_row_slice(b)),
        };
        let meas = MeasurementModel {
            mrna: nested(&doc.measurement.mrna, "measurement.mrna")?,
            protein: nested(&doc.measurement.protein, "measurement.protein")?,
        };
        let d = &doc.delays;
        let delays = DelayBounds { tau_bar: d.tau_bar, sigma_bar: d.sigma_bar, mu1: d.mu1, mu2: d.mu2 };
        let sector = match &doc.sector {
            Some(s) => SectorBound { slopes: DVector::from_row_slice(&s.slopes) },
            None => SectorBound::from_hill(n, m.hill)
                .map_err(|e| ConfigError::Schema { path: "model.hill".into(), message: e.to_string() })?,
        };
        let problem = ObserverProblem::new(model, meas, delays, sector);
        if let Err(LmiError::Validation(report)) = problem.validate() {
            let v = &report.violations[0];
            let path = if v.field.contains('.') { v.field.clone() } else { format!("model.{}", v.field) };
            return Err(dim_err(path, v.message.clone()));
        }
        doc.solver.validate().map_err(|e| ConfigError::Schema { path: "solver".into(), message: e.to_string() })?;

        let assignment = match &doc.assignment {
            None => None,
            Some(AssignmentDoc::Named(name)) if name == "identity" => Some(AssignmentSpec::Identity),
            Some(AssignmentDoc::Named(name)) => {
                return Err(ConfigError::Schema {
                    path: "assignment".into(),
                    message: format!("unknown named assignment `{name}`, expected `identity` or a slot map"),
                })
            }
            Some(AssignmentDoc::Slots(map)) => {
                let mut slots = Vec::with_capacity(map.len());
                for (name, value) in map {
                    let path = format!("assignment.{name}");
                    let id: SlotId = name
                        .parse()
                        .map_err(|e: LmiError| ConfigError::Schema { path: path.clone(), message: e.to_string() })?;
                    slots.push((id, matrix(value, &path)?));
                }
                Some(AssignmentSpec::Slots(slots))
            }
        };

        let gains = match &doc.gains {
            None => None,
            Some(g) => {
                let k1 = nested(&g.k1, "gains.k1")?;
                let k2 = nested(&g.k2, "gains.k2")?;
                expect_shape(&k1, (n, problem.meas.r_m()), "gains.k1")?;
                expect_shape(&k2, (n, problem.meas.r_p()), "gains.k2")?;
                Some((k1, k2))
            }
        };

        Ok(RunConfig {
            problem,
            solver: doc.solver,
            simulation: doc.simulation,
            output_dir: doc.output_dir,
            assignment,
            gains,
        })
    }

    fn to_doc(&self) -> RunConfigDoc {
        let p = &self.problem;
        let flat = |v: &DVector<f64>| MatrixDoc::Flat(v.iter().copied().collect());
        RunConfigDoc {
            model: ModelDoc {
                degradation_mrna: flat(&p.model.degradation_mrna),
                translation: flat(&p.model.translation),
                degradation_protein: flat(&p.model.degradation_protein),
                coupling: rows_of(&p.model.coupling),
                diffusion_mrna: p.model.diffusion_mrna.iter().map(flat).collect(),
                diffusion_protein: p.model.diffusion_protein.iter().map(flat).collect(),
                half_widths: p.model.half_widths.clone(),
                hill: p.model.hill,
                basal: Some(p.model.basal.iter().copied().collect()),
            },
            measurement: MeasurementDoc { mrna: rows_of(&p.meas.mrna), protein: rows_of(&p.meas.protein) },
            delays: DelaysDoc {
                tau_bar: p.delays.tau_bar,
                sigma_bar: p.delays.sigma_bar,
                mu1: p.delays.mu1,
                mu2: p.delays.mu2,
            },
            sector: Some(SectorDoc { slopes: p.sector.slopes.iter().copied().collect() }),
            solver: self.solver.clone(),
            simulation: self.simulation.clone(),
            output_dir: self.output_dir.clone(),
            assignment: self.assignment.as_ref().map(|a| match a {
                AssignmentSpec::Identity => AssignmentDoc::Named("identity".into()),
                AssignmentSpec::Slots(slots) => AssignmentDoc::Slots(
                    slots.iter().map(|(id, m)| (id.name().to_string(), MatrixDoc::Nested(rows_of(m)))).collect(),
                ),
            }),
            gains: self.gains.as_ref().map(|(k1, k2)| GainsDoc { k1: rows_of(k1), k2: rows_of(k2) }),
        }
    }
}

/// Parses and validates a configuration document.
pub fn parse_config(text: &str) -> Result<RunConfig, ConfigError> {
    let mut de = serde_json::Deserializer::from_str(text);
    let doc: RunConfigDoc = serde_path_to_error::deserialize(&mut de).map_err(schema_error)?;
    de.end().map_err(|e| ConfigError::Parse { message: e.to_string() })?;
    RunConfig::from_doc(doc)
}

/// Canonical JSON for a configuration. The sector is always written out.
pub fn emit_config(config: &RunConfig) -> String {
    serde_json::to_string_pretty(&config.to_doc()).expect("config documents always serialize")
}

#[cfg(test)]
mod tests {
    use super::*;

    const EXAMPLE2: &str = r#"{
        "model": {
            "degradation_mrna": [0.2],
            "translation": [1.0],
            "degradation_protein": [0.3],
            "coupling": [[-0.5]],
            "diffusion_mrna": [[0.1]],
            "diffusion_protein": [[0.2]],
            "half_widths": [1.0],
            "hill": 2
        },
        "measurement": { "mrna": [[0.0]], "protein": [[0.7]] },
        "delays": { "tau_bar": 1.0, "sigma_bar": 1.0, "mu1": 2.0, "mu2": 2.0 },
        "sector": { "slopes": [0.65] }
    }"#;

    fn edit(f: impl FnOnce(&mut serde_json::Value)) -> String {
        let mut v: serde_json::Value = serde_json::from_str(EXAMPLE2).unwrap();
        f(&mut v);
        v.to_string()
    }

    #[test]
    fn parses_example2() {
        let c = parse_config(EXAMPLE2).unwrap();
        assert_eq!(c.problem, crate::lmi::example2_problem());
        assert_eq!(c.solver, SolverConfig::default());
        assert!(c.assignment.is_none() && c.gains.is_none());
    }

    #[test]
    fn missing_field_names_the_path() {
        let text = edit(|v| {
            v["delays"].as_object_mut().unwrap().remove("tau_bar");
        });
        let err = parse_config(&text).unwrap_err();
        assert!(matches!(err, ConfigError::Schema { .. }));
        assert_eq!(err.path(), Some("delays.tau_bar"));
    }

    #[test]
    fn unknown_keys_rejected() {
        let text = edit(|v| v["delays"]["tau"] = 1.0.into());
        let err = parse_config(&text).unwrap_err();
        assert_eq!(err.path(), Some("delays.tau"));
        let text = edit(|v| v["extra"] = 1.into());
        assert!(matches!(parse_config(&text), Err(ConfigError::Schema { .. })));
    }

    #[test]
    fn syntax_errors_are_parse_errors() {
        assert!(matches!(parse_config("{ \"model\": "), Err(ConfigError::Parse { .. })));
        assert!(matches!(parse_config(&format!("{EXAMPLE2} x")), Err(ConfigError::Parse { .. })));
    }

    #[test]
    fn wrong_coupling_shape_is_a_dimension_error() {
        let text = edit(|v| v["model"]["coupling"] = serde_json::json!([[0.0, 1.0]]));
        let err = parse_config(&text).unwrap_err();
        assert!(matches!(err, ConfigError::Dimension { .. }), "{err}");
        assert_eq!(err.path(), Some("model.coupling"));
    }

    #[test]
    fn nested_diagonals_and_ragged_rows() {
        let text = edit(|v| v["model"]["translation"] = serde_json::json!([[1.0]]));
        assert!(parse_config(&text).is_ok());
        let text = edit(|v| v["model"]["diffusion_mrna"] = serde_json::json!([[[0.1, 0.2], [0.0, 0.1]]]));
        assert_eq!(parse_config(&text).unwrap_err().path(), Some("model.diffusion_mrna[0][0][1]"));
        let text = edit(|v| v["measurement"]["mrna"] = serde_json::json!([[0.0], [1.0, 2.0]]));
        assert_eq!(parse_config(&text).unwrap_err().path(), Some("measurement.mrna[1]"));
    }

    #[test]
    fn sector_defaults_from_hill() {
        let text = edit(|v| {
            v.as_object_mut().unwrap().remove("sector");
        });
        let c = parse_config(&text).unwrap();
        assert!((c.problem.sector.slopes[0] - 9.0 / (8.0 * 3f64.sqrt())).abs() < 1e-10);
    }

    #[test]
    fn gains_and_assignments() {
        let text = edit(|v| {
            v["gains"] = serde_json::json!({ "k1": [[0.0]], "k2": [[1.5]] });
            v["assignment"] = serde_json::json!({ "P1": [2.0], "Q2": [[1.0, 0.0], [0.0, 1.0]] });
        });
        let c = parse_config(&text).unwrap();
        assert_eq!(c.gains.as_ref().unwrap().1[(0, 0)], 1.5);
        match c.assignment.as_ref().unwrap() {
            AssignmentSpec::Slots(s) => {
                assert_eq!(s[0].0, SlotId::P1);
                assert_eq!(s[1].0, SlotId::Q2);
            }
            other => panic!("{other:?}"),
        }
        let text = edit(|v| v["gains"] = serde_json::json!({ "k1": [[0.0, 1.0]], "k2": [[1.5]] }));
        assert_eq!(parse_config(&text).unwrap_err().path(), Some("gains.k1"));
        let text = edit(|v| v["assignment"] = serde_json::json!({ "P9": [1.0] }));
        assert_eq!(parse_config(&text).unwrap_err().path(), Some("assignment.P9"));
        let text = edit(|v| v["assignment"] = serde_json::json!("zeros"));
        assert!(parse_config(&text).is_err());
    }

    #[test]
    fn emit_round_trips() {
        let text = edit(|v| {
            v["assignment"] = serde_json::json!("identity");
            v["gains"] = serde_json::json!({ "k1": [[0.1]], "k2": [[1.0 / 3.0]] });
            v["output_dir"] = "out".into();
        });
        let c = parse_config(&text).unwrap();
        assert_eq!(parse_config(&emit_config(&c)).unwrap(), c);
    }
}
