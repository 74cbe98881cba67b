//! JSON problem-spec format (`"spec_version": 1`).
//!
//! ```json
//! {
//!   "spec_version": 1,
//!   "dimension": 2,
//!   "objective": {
//!     "components": [{"type": "quadratic", "matrix": [[1,0],[0,1]], "vector": [1,1], "constant": 0}],
//!     "proximal": {"type": "zero"}
//!   },
//!   "constraints": [
//!     {"type": "linear", "a": [-1, 0], "b": 0},
//!     {"type": "quadratic", "Q": [[2,0],[0,2]], "b": [0,0], "c": -1}
//!   ],
//!   "metadata": {"mu": 1, "L_f": 1, "constraints": [{"L_a": 0, "C0": 1, "C1": 0}, {"L_a": 2, "C0": 4, "C1": 4}]},
//!   "slater_point": {"point": [0.5, 0], "margin": 0.5},
//!   "reference": {"x_star": [0, -1], "f_star": -0.5, "multipliers": [1, 0]}
//! }
//! ```
//!
//! Objective components are `½ xᵀ M x + vᵀ x + c` (`matrix` may be omitted
//! for a linear term). Quadratic constraints are `½ xᵀ Q x + bᵀ x + c <= 0`,
//! linear constraints `aᵀ x − b <= 0`. Matrices are taken as given; the
//! gradient assumes they are symmetric.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::functions::{Affine, ClosedForm, Quadratic, SmoothFunction};
use crate::model::{
    ConstrainedProblem, Constraint, ProximalTerm, ReferenceSolution, SlaterPoint, SmoothComponent,
};
use crate::zoo::GeneratorRecord;

pub const SPEC_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemSpec {
    pub spec_version: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub dimension: usize,
    pub objective: ObjectiveSpec,
    pub constraints: Vec<ConstraintSpec>,
    pub metadata: MetadataSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub slater_point: Option<SlaterPoint>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reference: Option<ReferenceSolution>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub generator_record: Option<GeneratorRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObjectiveSpec {
    pub components: Vec<ObjectiveComponentSpec>,
    #[serde(default = "zero_prox")]
    pub proximal: ProximalTerm,
}

fn zero_prox() -> ProximalTerm {
    ProximalTerm::Zero
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum ObjectiveComponentSpec {
    Quadratic {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        matrix: Option<Vec<Vec<f64>>>,
        vector: Vec<f64>,
        #[serde(default)]
        constant: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum ConstraintSpec {
    Quadratic {
        #[serde(rename = "Q")]
        q: Vec<Vec<f64>>,
        b: Vec<f64>,
        c: f64,
    },
    Linear {
        a: Vec<f64>,
        b: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MetadataSpec {
    pub mu: f64,
    #[serde(rename = "L_f")]
    pub l_f: f64,
    pub constraints: Vec<ConstraintMetadata>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConstraintMetadata {
    #[serde(rename = "L_a")]
    pub l_a: f64,
    #[serde(rename = "C0")]
    pub c0: f64,
    #[serde(rename = "C1")]
    pub c1: f64,
}

impl ProblemSpec {
    /// Parses JSON, reporting the path of the offending field on failure.
    pub fn from_json(text: &str) -> Result<Self> {
        let value: serde_json::Value =
            serde_json::from_str(text).map_err(|e| Error::schema("<document>", e.to_string()))?;
        let spec: ProblemSpec = serde_path_to_error::deserialize(&value).map_err(|e| {
            let path = e.path().to_string();
            refine_tagged_error(&value, &path)
                .unwrap_or_else(|| Error::schema(path, e.into_inner().to_string()))
        })?;
        if spec.spec_version != SPEC_VERSION {
            return Err(Error::schema(
                "spec_version",
                format!(
                    "unsupported version {}, expected {SPEC_VERSION}",
                    spec.spec_version
                ),
            ));
        }
        Ok(spec)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("problem spec serializes")
    }

    /// SHA-256 of the compact JSON encoding.
    pub fn content_hash(&self) -> String {
        let compact = serde_json::to_vec(self).expect("problem spec serializes");
        let digest = Sha256::digest(&compact);
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn to_problem(&self) -> Result<ConstrainedProblem> {
        let n = self.dimension;
        if n == 0 {
            return Err(Error::schema("dimension", "must be >= 1"));
        }
        if self.objective.components.is_empty() {
            return Err(Error::schema(
                "objective.components",
                "need at least one component",
            ));
        }
        if self.constraints.is_empty() {
            return Err(Error::schema("constraints", "need at least one constraint"));
        }
        if self.metadata.constraints.len() != self.constraints.len() {
            return Err(Error::schema(
                "metadata.constraints",
                format!(
                    "has {} entries but there are {} constraints",
                    self.metadata.constraints.len(),
                    self.constraints.len()
                ),
            ));
        }
        if !(self.metadata.l_f >= 0.0) {
            return Err(Error::schema("metadata.L_f", "must be >= 0"));
        }

        let mut components = Vec::with_capacity(self.objective.components.len());
        for (k, c) in self.objective.components.iter().enumerate() {
            let field = format!("objective.components[{k}]");
            let ObjectiveComponentSpec::Quadratic {
                matrix,
                vector,
                constant,
            } = c;
            let m = match matrix {
                Some(rows) => dense(&format!("{field}.matrix"), rows, n)?,
                None => DMatrix::zeros(n, n),
            };
            let v = vector_of(&format!("{field}.vector"), vector, n)?;
            let f = Quadratic::new(m, v, *constant)
                .map_err(|e| Error::schema(&field, e.to_string()))?;
            components.push(
                SmoothComponent::new(Arc::new(f), self.metadata.l_f)
                    .map_err(|e| Error::schema(&field, e.to_string()))?,
            );
        }

        let mut constraints = Vec::with_capacity(self.constraints.len());
        for (k, (c, meta)) in self
            .constraints
            .iter()
            .zip(&self.metadata.constraints)
            .enumerate()
        {
            let field = format!("constraints[{k}]");
            let function: Arc<dyn SmoothFunction> = match c {
                ConstraintSpec::Quadratic { q, b, c } => {
                    let q = dense(&format!("{field}.Q"), q, n)?;
                    let b = vector_of(&format!("{field}.b"), b, n)?;
                    Arc::new(
                        Quadratic::new(q, b, *c)
                            .map_err(|e| Error::schema(&field, e.to_string()))?,
                    )
                }
                ConstraintSpec::Linear { a, b } => {
                    vector_of(&format!("{field}.a"), a, n)?;
                    Arc::new(Affine::new(a.clone(), *b))
                }
            };
            constraints.push(
                Constraint::new(function, meta.l_a, meta.c0, meta.c1).map_err(|e| {
                    Error::schema(format!("metadata.constraints[{k}]"), e.to_string())
                })?,
            );
        }

        ConstrainedProblem::new(
            n,
            components,
            self.objective.proximal,
            constraints,
            self.metadata.mu,
            self.slater_point.clone(),
        )
        .map_err(|e| Error::schema("problem", e.to_string()))
    }

    /// Exports a problem whose oracles all have closed forms.
    pub fn from_problem(
        problem: &ConstrainedProblem,
        reference: Option<&ReferenceSolution>,
        generator_record: Option<&GeneratorRecord>,
        name: Option<&str>,
    ) -> Result<Self> {
        let components = problem
            .components()
            .iter()
            .enumerate()
            .map(|(k, c)| match c.function.closed_form() {
                Some(ClosedForm::Quadratic {
                    matrix,
                    vector,
                    constant,
                }) => Ok(ObjectiveComponentSpec::Quadratic {
                    matrix: (matrix.iter().any(|v| *v != 0.0)).then(|| rows_of(&matrix)),
                    vector: vector.as_slice().to_vec(),
                    constant,
                }),
                Some(ClosedForm::Affine { a, b }) => Ok(ObjectiveComponentSpec::Quadratic {
                    matrix: None,
                    vector: a.as_slice().to_vec(),
                    constant: -b,
                }),
                None => Err(Error::schema(
                    format!("objective.components[{k}]"),
                    "oracle has no closed form to export",
                )),
            })
            .collect::<Result<Vec<_>>>()?;
        let mut constraints = Vec::new();
        let mut meta = Vec::new();
        for (k, c) in problem.constraints().iter().enumerate() {
            constraints.push(match c.function.closed_form() {
                Some(ClosedForm::Quadratic {
                    matrix,
                    vector,
                    constant,
                }) => ConstraintSpec::Quadratic {
                    q: rows_of(&matrix),
                    b: vector.as_slice().to_vec(),
                    c: constant,
                },
                Some(ClosedForm::Affine { a, b }) => ConstraintSpec::Linear {
                    a: a.as_slice().to_vec(),
                    b,
                },
                None => {
                    return Err(Error::schema(
                        format!("constraints[{k}]"),
                        "oracle has no closed form to export",
                    ))
                }
            });
            meta.push(ConstraintMetadata {
                l_a: c.smoothness,
                c0: c.growth_c0,
                c1: c.growth_c1,
            });
        }
        Ok(ProblemSpec {
            spec_version: SPEC_VERSION,
            name: name.map(str::to_string),
            dimension: problem.dimension(),
            objective: ObjectiveSpec {
                components,
                proximal: problem.proximal(),
            },
            constraints,
            metadata: MetadataSpec {
                mu: problem.mu(),
                l_f: problem.objective_smoothness(),
                constraints: meta,
            },
            slater_point: problem.slater_point().cloned(),
            reference: reference.cloned(),
            generator_record: generator_record.cloned(),
        })
    }
}

fn dense(field: &str, rows: &[Vec<f64>], n: usize) -> Result<DMatrix<f64>> {
    if rows.len() != n {
        return Err(Error::schema(
            field,
            format!("expected {n} rows, got {}", rows.len()),
        ));
    }
    for (i, r) in rows.iter().enumerate() {
        if r.len() != n {
            return Err(Error::schema(
                format!("{field}[{i}]"),
                format!("expected {n} entries, got {}", r.len()),
            ));
        }
    }
    Ok(DMatrix::from_fn(n, n, |i, j| rows[i][j]))
}

fn vector_of(field: &str, v: &[f64], n: usize) -> Result<DVector<f64>> {
    if v.len() != n {
        return Err(Error::schema(
            field,
            format!("expected {n} entries, got {}", v.len()),
        ));
    }
    Ok(DVector::from_column_slice(v))
}

fn rows_of(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows())
        .map(|i| m.row(i).iter().cloned().collect())
        .collect()
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
#[allow(dead_code)]
struct QuadraticComponentFields {
    #[serde(rename = "type")]
    kind: String,
    matrix: Option<Vec<Vec<f64>>>,
    vector: Vec<f64>,
    #[serde(default)]
    constant: f64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
#[allow(dead_code)]
struct QuadraticConstraintFields {
    #[serde(rename = "type")]
    kind: String,
    #[serde(rename = "Q")]
    q: Vec<Vec<f64>>,
    b: Vec<f64>,
    c: f64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
#[allow(dead_code)]
struct LinearConstraintFields {
    #[serde(rename = "type")]
    kind: String,
    a: Vec<f64>,
    b: f64,
}

/// Tagged enums are buffered by serde, which hides the inner field path.
/// Re-reads the failing element as its variant's plain struct to recover it.
fn refine_tagged_error(doc: &serde_json::Value, path: &str) -> Option<Error> {
    fn inner<T: for<'de> Deserialize<'de>>(prefix: &str, v: &serde_json::Value) -> Option<Error> {
        match serde_path_to_error::deserialize::<_, T>(v) {
            Ok(_) => None,
            Err(e) => {
                let sub = e.path().to_string();
                let field = if sub == "." {
                    prefix.to_string()
                } else {
                    format!("{prefix}.{sub}")
                };
                Some(Error::schema(field, e.into_inner().to_string()))
            }
        }
    }
    let (list, rest) = if let Some(r) = path.strip_prefix("objective.components[") {
        (&doc["objective"]["components"], r)
    } else {
        let r = path.strip_prefix("constraints[")?;
        (&doc["constraints"], r)
    };
    let idx: usize = rest.split(']').next()?.parse().ok()?;
    let prefix = &path[..path.len() - rest.len() + rest.find(']')? + 1];
    let element = list.get(idx)?;
    match (
        prefix.starts_with("objective"),
        element.get("type")?.as_str()?,
    ) {
        (true, "quadratic") => inner::<QuadraticComponentFields>(prefix, element),
        (false, "quadratic") => inner::<QuadraticConstraintFields>(prefix, element),
        (false, "linear") => inner::<LinearConstraintFields>(prefix, element),
        _ => None,
    }
}
