//! JSON network definitions and JSON/CSV result output.
//!
//! ```json
//! {
//!   "version": "1",
//!   "branches": [
//!     { "stacks": [{ "a": 47.655, "b": -1.297, "phi": 1 }], "i_lb": 2.103, "i_ub": 106.8127 },
//!     { "stacks": [{ "a": 49.25, "b": -0.25, "phi": 0.8 }], "i_lb": 0.1, "i_ub": "inf" }
//!   ]
//! }
//! ```
//!
//! Stacks may also carry their own `i_lb`/`i_ub`; series current is shared,
//! so the branch keeps the largest lower and the smallest upper bound.
//! Branch numbers in every output are 1-based.

use serde::{Deserialize, Serialize};

use crate::dispatch::{DispatchResult, DispatchTable};
use crate::error::{Error, Issue, Issues, Result, Site};
use crate::stack_model::{BranchSpec, Network, SqrtStackParams};

pub const FORMAT_VERSION: &str = "1";
const INF_TOKEN: &str = "inf";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetworkConfigDocument {
    pub version: String,
    pub branches: Vec<BranchDocument>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BranchDocument {
    pub stacks: Vec<StackDocument>,
    pub i_lb: f64,
    pub i_ub: BoundValue,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StackDocument {
    pub a: f64,
    pub b: f64,
    pub phi: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub i_lb: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub i_ub: Option<BoundValue>,
}

/// A number, or the token `"inf"` for an unbounded upper limit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum BoundValue {
    Number(f64),
    Token(String),
}

impl BoundValue {
    fn from_f64(v: f64) -> Self {
        if v == f64::INFINITY {
            BoundValue::Token(INF_TOKEN.into())
        } else {
            BoundValue::Number(v)
        }
    }

    fn to_f64(&self, site: Site, field: &'static str, issues: &mut Vec<Issue>) -> f64 {
        match self {
            BoundValue::Number(v) => *v,
            BoundValue::Token(t) if t == INF_TOKEN => f64::INFINITY,
            BoundValue::Token(t) => {
                issues.push(Issue {
                    site,
                    field,
                    message: format!("expected a number or \"{INF_TOKEN}\", got \"{t}\""),
                });
                f64::NAN
            }
        }
    }
}

impl NetworkConfigDocument {
    pub fn into_network(self) -> Result<Network> {
        if self.version != FORMAT_VERSION {
            return Err(Error::Config {
                line: 1,
                column: 1,
                message: format!(
                    "unsupported version \"{}\" (expected \"{FORMAT_VERSION}\")",
                    self.version
                ),
            });
        }
        let mut issues = Vec::new();
        let branches = self
            .branches
            .into_iter()
            .enumerate()
            .map(|(branch, doc)| {
                let site = Site::Branch(branch);
                let mut i_lb = doc.i_lb;
                let mut i_ub = doc.i_ub.to_f64(site, "i_ub", &mut issues);
                let stacks = doc
                    .stacks
                    .into_iter()
                    .enumerate()
                    .map(|(stack, s)| {
                        if let Some(lb) = s.i_lb {
                            i_lb = i_lb.max(lb);
                        }
                        if let Some(ub) = &s.i_ub {
                            i_ub = i_ub.min(ub.to_f64(Site::Stack { branch, stack }, "i_ub", &mut issues));
                        }
                        SqrtStackParams {
                            a: s.a,
                            b: s.b,
                            phi: s.phi,
                        }
                    })
                    .collect();
                BranchSpec::new(stacks, i_lb, i_ub)
            })
            .collect();
        if !issues.is_empty() {
            return Err(Error::Validation(Issues(issues)));
        }
        let network = Network::new(branches);
        network.validate()?;
        Ok(network)
    }

    pub fn from_network(network: &Network) -> Self {
        NetworkConfigDocument {
            version: FORMAT_VERSION.into(),
            branches: network
                .branches
                .iter()
                .map(|b| BranchDocument {
                    stacks: b
                        .stacks
                        .iter()
                        .map(|s| StackDocument {
                            a: s.a,
                            b: s.b,
                            phi: s.phi,
                            i_lb: None,
                            i_ub: None,
                        })
                        .collect(),
                    i_lb: b.i_lb,
                    i_ub: BoundValue::from_f64(b.i_ub),
                })
                .collect(),
        }
    }
}

/// Parses and validates a network definition.
pub fn parse_network(text: &str) -> Result<Network> {
    let doc: NetworkConfigDocument = serde_json::from_str(text).map_err(|e| Error::Config {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    doc.into_network()
}

pub fn serialize_network(network: &Network) -> String {
    let doc = NetworkConfigDocument::from_network(network);
    let mut text = serde_json::to_string_pretty(&doc).expect("config document serializes");
    text.push('\n');
    text
}

#[derive(Serialize)]
struct SetsRecord {
    at_lb: Vec<usize>,
    interior: Vec<usize>,
    at_ub: Vec<usize>,
    p_req_eff: f64,
}

#[derive(Serialize)]
struct ResultRecord<'a> {
    status: &'static str,
    p_req: f64,
    feasible_range: [f64; 2],
    #[serde(skip_serializing_if = "Option::is_none")]
    message: Option<&'static str>,
    #[serde(skip_serializing_if = "Option::is_none")]
    currents: Option<&'a [f64]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    total_current: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    total_power: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    mu: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    active_sets: Option<SetsRecord>,
}

fn one_based(indices: &[usize]) -> Vec<usize> {
    indices.iter().map(|j| j + 1).collect()
}

/// Pretty JSON for one dispatch, fields in a fixed order.
pub fn serialize_result(result: &DispatchResult) -> String {
    let optimal = result.is_optimal();
    let record = ResultRecord {
        status: result.status.as_str(),
        p_req: result.p_req,
        feasible_range: [result.feasible_range.0, result.feasible_range.1],
        message: (!optimal).then_some("Required power cannot be obtained"),
        currents: optimal.then_some(result.currents.as_slice()),
        total_current: optimal.then_some(result.total_current),
        total_power: optimal.then_some(result.total_power),
        mu: optimal.then_some(result.mu),
        active_sets: optimal.then(|| SetsRecord {
            at_lb: one_based(&result.sets.at_lb),
            interior: one_based(&result.sets.interior),
            at_ub: one_based(&result.sets.at_ub),
            p_req_eff: result.sets.p_req_eff,
        }),
    };
    let mut text = serde_json::to_string_pretty(&record).expect("result record serializes");
    text.push('\n');
    text
}

fn csv_text(write: impl FnOnce(&mut csv::Writer<Vec<u8>>) -> csv::Result<()>) -> String {
    let mut writer = csv::Writer::from_writer(Vec::new());
    write(&mut writer).expect("writing CSV to memory");
    let bytes = writer.into_inner().expect("flushing CSV to memory");
    String::from_utf8(bytes).expect("CSV is UTF-8")
}

/// CSV with header `p_req,i_1,...,i_N,i_total,mu,status`; infeasible rows
/// leave the numeric columns empty.
pub fn serialize_sweep(results: &[DispatchResult], branch_count: usize) -> String {
    csv_text(|w| {
        let mut header = vec!["p_req".to_string()];
        header.extend((1..=branch_count).map(|j| format!("i_{j}")));
        header.extend(["i_total".to_string(), "mu".to_string(), "status".to_string()]);
        w.write_record(&header)?;
        for r in results {
            let mut row = vec![r.p_req.to_string()];
            if r.is_optimal() {
                row.extend(r.currents.iter().map(f64::to_string));
                row.push(r.total_current.to_string());
                row.push(r.mu.to_string());
            } else {
                row.extend(std::iter::repeat_n(String::new(), branch_count + 2));
            }
            row.push(r.status.as_str().to_string());
            w.write_record(&row)?;
        }
        Ok(())
    })
}

/// Observable-point listing: `index,mu,branch,kind,cumulative_power,i_1,...,i_N`.
pub fn serialize_table(table: &DispatchTable) -> String {
    csv_text(|w| {
        let mut header: Vec<String> = ["index", "mu", "branch", "kind", "cumulative_power"]
            .iter()
            .map(|s| s.to_string())
            .collect();
        header.extend((1..=table.branch_count()).map(|j| format!("i_{j}")));
        w.write_record(&header)?;
        for (k, pt) in table.points().iter().enumerate() {
            let mut row = vec![
                (k + 1).to_string(),
                pt.mu.to_string(),
                (pt.branch + 1).to_string(),
                pt.kind.as_str().to_string(),
                pt.cumulative_power.to_string(),
            ];
            row.extend(pt.currents.iter().map(f64::to_string));
            w.write_record(&row)?;
        }
        Ok(())
    })
}
