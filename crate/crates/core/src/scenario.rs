//! JSON scenario files.
//!
//! ```json
//! {
//!   "version": "1",
//!   "n": 2,
//!   "physical": { "edges": [[0, 1, 0.4], [1, 0, 0.4]], "beta_min": 0.1 },
//!   "social": { "edges": [[0, 0, 0.5], [1, 0, 0.5], [0, 1, 0.5], [1, 1, 0.5]] },
//!   "recovery": { "delta": [0.6, 0.6], "delta_min": 0.2 },
//!   "theta": [0.2, 0.2]
//! }
//! ```
//!
//! An edge `[src, dst, w]` means `src` acts on `dst`, i.e. it sets matrix entry
//! `(dst, src)`. Physical edges take an optional fourth element overriding
//! `beta_min` on that edge. The social block may instead be
//! `{"generator": {"type": "watts-strogatz", "n", "k", "p", "seed"}}`, which
//! gives every node equal weight on itself and each neighbour.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::dynamics::CoupledState;
use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::network::{generate_watts_strogatz, EpidemicRates, ModelParams};
use crate::synthetic::{closed_neighbourhood_weights, SmallWorld};

pub const SCHEMA_VERSION: &str = "1";
/// Infection level of node 0 when a scenario has no `initial` block.
pub const DEFAULT_SEED_INFECTION: f64 = 0.01;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PhysicalEdge {
    WithMin(usize, usize, f64, f64),
    Plain(usize, usize, f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhysicalBlock {
    pub edges: Vec<PhysicalEdge>,
    pub beta_min: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum GeneratorKind {
    #[serde(rename = "watts-strogatz")]
    WattsStrogatz,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeneratorSpec {
    #[serde(rename = "type")]
    pub kind: GeneratorKind,
    pub n: usize,
    pub k: usize,
    pub p: f64,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SocialBlock {
    Edges { edges: Vec<(usize, usize, f64)> },
    Generator { generator: GeneratorSpec },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RecoveryBlock {
    pub delta: Vec<f64>,
    pub delta_min: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialBlock {
    pub x: Vec<f64>,
    pub z: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub version: String,
    pub n: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub node_labels: Option<Vec<String>>,
    pub physical: PhysicalBlock,
    pub social: SocialBlock,
    pub recovery: RecoveryBlock,
    pub theta: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial: Option<InitialBlock>,
}

fn schema(msg: impl Into<String>) -> Error {
    Error::Schema(msg.into())
}

fn check_len(field: &str, len: usize, n: usize) -> Result<()> {
    if len != n {
        return Err(schema(format!(
            "{field}: expected {n} entries, found {len}"
        )));
    }
    Ok(())
}

fn check_node(field: &str, idx: usize, n: usize) -> Result<()> {
    if idx >= n {
        return Err(schema(format!(
            "{field}: node {idx} out of range for n = {n}"
        )));
    }
    Ok(())
}

impl ScenarioFile {
    pub fn from_json(text: &str) -> Result<Self> {
        let file: Self = serde_json::from_str(text).map_err(|e| schema(e.to_string()))?;
        if file.version != SCHEMA_VERSION {
            return Err(schema(format!(
                "version: unsupported \"{}\" (supported: \"{SCHEMA_VERSION}\")",
                file.version
            )));
        }
        Ok(file)
    }

    /// Indented JSON with every array of scalars (an edge, a rate vector)
    /// kept on one line.
    pub fn to_json(&self) -> String {
        let value = serde_json::to_value(self).expect("scenario serializes");
        let mut out = String::new();
        write_value(&value, 0, &mut out);
        out.push('\n');
        out
    }

    /// Builds the validated parameters and the initial state.
    pub fn to_model(&self) -> Result<(ModelParams<f64>, CoupledState<f64>)> {
        let n = self.n;
        if n == 0 {
            return Err(schema("n: must be at least 1"));
        }
        if let Some(labels) = &self.node_labels {
            check_len("node_labels", labels.len(), n)?;
        }
        check_len("recovery.delta", self.recovery.delta.len(), n)?;
        check_len("theta", self.theta.len(), n)?;

        let mut b = Matrix::zeros(n, n);
        let mut b_min = Matrix::zeros(n, n);
        for (idx, e) in self.physical.edges.iter().enumerate() {
            let (src, dst, beta, beta_min) = match *e {
                PhysicalEdge::WithMin(s, d, b, m) => (s, d, b, m),
                PhysicalEdge::Plain(s, d, b) => (s, d, b, self.physical.beta_min),
            };
            let field = format!("physical.edges[{idx}]");
            check_node(&field, src, n)?;
            check_node(&field, dst, n)?;
            if b[(dst, src)] != 0.0 {
                return Err(schema(format!("{field}: duplicate edge {src} -> {dst}")));
            }
            b[(dst, src)] = beta;
            b_min[(dst, src)] = beta_min;
        }

        let w = match &self.social {
            SocialBlock::Edges { edges } => {
                let mut w = Matrix::zeros(n, n);
                for (idx, &(src, dst, weight)) in edges.iter().enumerate() {
                    let field = format!("social.edges[{idx}]");
                    check_node(&field, src, n)?;
                    check_node(&field, dst, n)?;
                    if w[(dst, src)] != 0.0 {
                        return Err(schema(format!("{field}: duplicate edge {src} -> {dst}")));
                    }
                    w[(dst, src)] = weight;
                }
                w
            }
            SocialBlock::Generator { generator: g } => {
                if g.n != n {
                    return Err(schema(format!(
                        "social.generator.n: {} differs from n = {n}",
                        g.n
                    )));
                }
                let net = generate_watts_strogatz::<f64>(g.n, g.k, g.p, g.seed)?;
                closed_neighbourhood_weights(&net)
            }
        };

        let rates = EpidemicRates {
            b,
            b_min,
            delta: self.recovery.delta.clone(),
            delta_min: self.recovery.delta_min,
        };
        let params = ModelParams::validated(rates, w, self.theta.clone())?;

        let state = match &self.initial {
            Some(init) => {
                check_len("initial.x", init.x.len(), n)?;
                check_len("initial.z", init.z.len(), n)?;
                CoupledState::new(init.x.clone(), init.z.clone())?
            }
            None => {
                let mut s = CoupledState::zeros(n);
                s.x[0] = DEFAULT_SEED_INFECTION;
                s
            }
        };
        Ok((params, state))
    }

    /// Scenario describing `params` with an explicit social edge list.
    pub fn from_params(params: &ModelParams<f64>, initial: Option<&CoupledState<f64>>) -> Self {
        let beta_min = physical_min(params);
        let social = SocialBlock::Edges {
            edges: edge_list(params.w()).collect(),
        };
        Self::assemble(params, beta_min, social, initial)
    }

    /// Scenario for a small-world instance whose social layer is stored as
    /// its generator block rather than as explicit edges.
    pub fn from_small_world(params: &ModelParams<f64>, layout: &SmallWorld) -> Self {
        let social = SocialBlock::Generator {
            generator: GeneratorSpec {
                kind: GeneratorKind::WattsStrogatz,
                n: layout.n,
                k: layout.k,
                p: layout.p,
                seed: layout.social_seed(),
            },
        };
        Self::assemble(params, physical_min(params), social, None)
    }

    fn assemble(
        params: &ModelParams<f64>,
        beta_min: f64,
        social: SocialBlock,
        initial: Option<&CoupledState<f64>>,
    ) -> Self {
        let bm = params.b_min();
        let edges = edge_list(params.b())
            .map(|(s, d, beta)| {
                let m = bm[(d, s)];
                if m == beta_min {
                    PhysicalEdge::Plain(s, d, beta)
                } else {
                    PhysicalEdge::WithMin(s, d, beta, m)
                }
            })
            .collect();
        Self {
            version: SCHEMA_VERSION.into(),
            n: params.n(),
            node_labels: None,
            physical: PhysicalBlock { edges, beta_min },
            social,
            recovery: RecoveryBlock {
                delta: params.delta().to_vec(),
                delta_min: params.delta_min(),
            },
            theta: params.theta().to_vec(),
            initial: initial.map(|s| InitialBlock {
                x: s.x.clone(),
                z: s.z.clone(),
            }),
        }
    }
}

fn write_value(v: &serde_json::Value, depth: usize, out: &mut String) {
    use serde_json::Value;
    let pad = |d: usize| "  ".repeat(d);
    match v {
        Value::Object(map) if !map.is_empty() => {
            out.push_str("{\n");
            for (i, (k, item)) in map.iter().enumerate() {
                out.push_str(&pad(depth + 1));
                out.push_str(&Value::String(k.clone()).to_string());
                out.push_str(": ");
                write_value(item, depth + 1, out);
                out.push_str(if i + 1 < map.len() { ",\n" } else { "\n" });
            }
            out.push_str(&pad(depth));
            out.push('}');
        }
        Value::Array(items) if items.iter().any(|x| x.is_array() || x.is_object()) => {
            out.push_str("[\n");
            for (i, item) in items.iter().enumerate() {
                out.push_str(&pad(depth + 1));
                write_value(item, depth + 1, out);
                out.push_str(if i + 1 < items.len() { ",\n" } else { "\n" });
            }
            out.push_str(&pad(depth));
            out.push(']');
        }
        Value::Array(items) => {
            let parts: Vec<String> = items.iter().map(Value::to_string).collect();
            out.push('[');
            out.push_str(&parts.join(", "));
            out.push(']');
        }
        other => out.push_str(&other.to_string()),
    }
}

/// Nonzero entries as `(src, dst, value)` edges, ordered by source then target.
fn edge_list(m: &Matrix<f64>) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
    let n = m.rows();
    (0..n).flat_map(move |s| {
        (0..n)
            .filter(move |&d| m[(d, s)] != 0.0)
            .map(move |d| (s, d, m[(d, s)]))
    })
}

/// Most common per-edge minimum rate (ties to the smallest), so that uniform
/// instances serialize without per-edge overrides.
fn physical_min(params: &ModelParams<f64>) -> f64 {
    let mut vals: Vec<f64> = edge_list(params.b_min()).map(|(_, _, v)| v).collect();
    vals.sort_by(f64::total_cmp);
    let mut best = (0usize, vals.first().copied().unwrap_or(0.0));
    let mut i = 0;
    while i < vals.len() {
        let j = vals[i..].iter().take_while(|&&v| v == vals[i]).count();
        if j > best.0 {
            best = (j, vals[i]);
        }
        i += j;
    }
    best.1
}

pub fn load_scenario(path: impl AsRef<Path>) -> Result<(ModelParams<f64>, CoupledState<f64>)> {
    read_scenario(path)?.to_model()
}

pub fn read_scenario(path: impl AsRef<Path>) -> Result<ScenarioFile> {
    ScenarioFile::from_json(&fs::read_to_string(path)?)
}

pub fn save_scenario(file: &ScenarioFile, path: impl AsRef<Path>) -> Result<()> {
    fs::write(path, file.to_json())?;
    Ok(())
}
