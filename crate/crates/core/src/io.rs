//! JSON file formats. Matrices are row-major integer grids next to the field
//! modulus `p`; rates are `"num/den"` strings.

use num_rational::Ratio;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::blockcode::BlockPlan;
use crate::field::{FieldError, FieldSpec};
use crate::linalg::{LinalgError, Mat};
use crate::multicast::{LinearCode, LocalKernel};
use crate::netgraph::{Edge, EdgeId, NetError, Network};
use crate::subrate::SubRatePlan;

#[derive(Debug, Error)]
pub enum IoError {
    #[error("malformed JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error(transparent)]
    Net(#[from] NetError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

/// A node reference: either a string id or a bare integer.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum NodeRef {
    Name(String),
    Number(u64),
}

impl NodeRef {
    pub fn name(&self) -> String {
        match self {
            NodeRef::Name(s) => s.clone(),
            NodeRef::Number(n) => n.to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetworkFile {
    pub field: u32,
    pub rate: usize,
    pub nodes: Vec<NodeRef>,
    /// `[tail, head]` pairs; the list position is the link id.
    pub edges: Vec<[NodeRef; 2]>,
    pub source: NodeRef,
    /// Designated sinks, served by the multicast construction.
    pub sinks: Vec<NodeRef>,
    /// Consequential sub-rate sinks: ignored by the construction, decoded
    /// at whatever rank their incoming kernels reach.
    #[serde(default)]
    pub subrate_sinks: Vec<NodeRef>,
}

impl NetworkFile {
    pub fn parse(text: &str) -> Result<Self, IoError> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn to_network(&self) -> Result<Network, IoError> {
        let field = FieldSpec::new(self.field)?;
        let nodes: Vec<String> = self.nodes.iter().map(NodeRef::name).collect();
        let index = |r: &NodeRef| -> Result<usize, IoError> {
            let n = r.name();
            nodes
                .iter()
                .position(|x| *x == n)
                .ok_or(IoError::Net(NetError::UnknownNode(n)))
        };
        let edges = self
            .edges
            .iter()
            .map(|[a, b]| {
                Ok(Edge {
                    tail: index(a)?,
                    head: index(b)?,
                })
            })
            .collect::<Result<Vec<_>, IoError>>()?;
        let sinks = self
            .sinks
            .iter()
            .map(index)
            .collect::<Result<Vec<_>, _>>()?;
        let sub = self
            .subrate_sinks
            .iter()
            .map(index)
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Network::new(
            field,
            self.rate,
            nodes.clone(),
            edges,
            index(&self.source)?,
            sinks,
            sub,
        )?)
    }
}

pub fn grid(m: &Mat) -> Vec<Vec<u32>> {
    m.to_rows()
}

/// Matrix from a row-major grid; `rows` fixes the shape of column-less grids.
pub fn mat_from_grid(field: FieldSpec, grid: &[Vec<u32>], rows: usize) -> Result<Mat, IoError> {
    if grid.len() != rows {
        return Err(IoError::Invalid(format!(
            "expected {rows} rows, found {}",
            grid.len()
        )));
    }
    if grid.iter().all(Vec::is_empty) {
        return Ok(Mat::zeros(field, rows, 0));
    }
    let ints: Vec<Vec<i64>> = grid
        .iter()
        .map(|r| {
            r.iter()
                .map(|&x| {
                    if x < field.modulus() {
                        Ok(x as i64)
                    } else {
                        Err(IoError::Invalid(format!(
                            "entry {x} is not an element of {field}"
                        )))
                    }
                })
                .collect()
        })
        .collect::<Result<_, _>>()?;
    Ok(Mat::from_rows(field, &ints)?)
}

pub fn rate_string(r: Ratio<u64>) -> String {
    format!("{}/{}", r.numer(), r.denom())
}

pub fn parse_rate(s: &str) -> Result<Ratio<u64>, IoError> {
    let bad = || IoError::Invalid(format!("rate `{s}` is not of the form num/den"));
    let (n, d) = s.split_once('/').ok_or_else(bad)?;
    let n: u64 = n.trim().parse().map_err(|_| bad())?;
    let d: u64 = d.trim().parse().map_err(|_| bad())?;
    if d == 0 {
        return Err(bad());
    }
    Ok(Ratio::new(n, d))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GekEntry {
    pub edge: i64,
    pub kernel: Vec<u32>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LekEntry {
    pub node: String,
    pub inputs: Vec<i64>,
    pub outputs: Vec<i64>,
    pub k: Vec<Vec<u32>>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CodeFile {
    pub p: u32,
    pub rate: usize,
    pub gek: Vec<GekEntry>,
    pub lek: Vec<LekEntry>,
}

impl CodeFile {
    pub fn from_code(net: &Network, code: &LinearCode) -> Self {
        CodeFile {
            p: code.field().modulus(),
            rate: code.rate(),
            gek: code
                .geks()
                .iter()
                .map(|(e, k)| GekEntry {
                    edge: e.0,
                    kernel: k.clone(),
                })
                .collect(),
            lek: code
                .local_kernels()
                .iter()
                .enumerate()
                .map(|(x, l)| LekEntry {
                    node: net.name(x).to_string(),
                    inputs: l.inputs.iter().map(|e| e.0).collect(),
                    outputs: l.outputs.iter().map(|e| e.0).collect(),
                    k: grid(&l.k),
                })
                .collect(),
        }
    }

    /// Rebuilds the code from its local kernels and checks that the stored
    /// global kernels agree.
    pub fn to_code(&self, net: &Network) -> Result<LinearCode, IoError> {
        let f = net.field();
        if self.p != f.modulus() || self.rate != net.rate() {
            return Err(IoError::Invalid(
                "code field or rate differs from the network".into(),
            ));
        }
        if self.lek.len() != net.node_count() {
            return Err(IoError::Invalid(
                "one local kernel per node is required".into(),
            ));
        }
        let mut lek = Vec::with_capacity(self.lek.len());
        for (x, e) in self.lek.iter().enumerate() {
            if e.node != net.name(x) {
                return Err(IoError::Invalid(format!(
                    "local kernel {x} names `{}`",
                    e.node
                )));
            }
            lek.push(LocalKernel {
                inputs: e.inputs.iter().map(|&i| EdgeId(i)).collect(),
                outputs: e.outputs.iter().map(|&i| EdgeId(i)).collect(),
                k: if e.inputs.is_empty() {
                    Mat::zeros(f, 0, e.outputs.len())
                } else {
                    mat_from_grid(f, &e.k, e.inputs.len())?
                },
            });
        }
        let code = LinearCode::from_local_kernels(net, lek)
            .map_err(|e| IoError::Invalid(e.to_string()))?;
        let stored: Vec<(i64, &Vec<u32>)> = self.gek.iter().map(|g| (g.edge, &g.kernel)).collect();
        let derived: Vec<(i64, &Vec<u32>)> = code.geks().iter().map(|(e, k)| (e.0, k)).collect();
        if stored != derived {
            return Err(IoError::Invalid(
                "global kernels disagree with the local kernels".into(),
            ));
        }
        Ok(code)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NamedMatrix {
    pub sink: String,
    pub matrix: Vec<Vec<u32>>,
}

/// GEMs supplied directly, without a network.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GemsFile {
    pub p: u32,
    pub rate: usize,
    pub gems: Vec<NamedMatrix>,
    #[serde(default)]
    pub full_rate: Vec<NamedMatrix>,
    /// Optional spanner, used in the given order.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spanner: Option<Vec<Vec<u32>>>,
}

impl GemsFile {
    pub fn parse(text: &str) -> Result<Self, IoError> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn field(&self) -> Result<FieldSpec, IoError> {
        Ok(FieldSpec::new(self.p)?)
    }

    pub fn matrices(&self, list: &[NamedMatrix]) -> Result<Vec<Mat>, IoError> {
        let f = self.field()?;
        list.iter()
            .map(|m| mat_from_grid(f, &m.matrix, self.rate))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SinkDecoderJson {
    pub sink: String,
    pub h: usize,
    /// Links the sink reads, when the plan came from a network.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub edges: Option<Vec<i64>>,
    pub d: Vec<Vec<u32>>,
    pub r: Vec<Vec<u32>>,
    pub decoded_indices: Vec<usize>,
    pub rate: String,
}

/// Either plan kind. A single-use plan is the `l = 1` case of a block plan.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlanFile {
    pub kind: PlanKind,
    pub p: u32,
    pub rate: usize,
    pub l: usize,
    pub precoder: Vec<Vec<u32>>,
    pub spanner: Vec<Vec<u32>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub i_bar: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub blocks: Option<Vec<Vec<usize>>>,
    pub sinks: Vec<SinkDecoderJson>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PlanKind {
    Subrate,
    Block,
}

/// Per-sink naming for plan export.
pub struct SinkLabel {
    pub name: String,
    pub edges: Option<Vec<EdgeId>>,
}

impl PlanFile {
    pub fn parse(text: &str) -> Result<Self, IoError> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn from_subrate(plan: &SubRatePlan, labels: &[SinkLabel]) -> Self {
        PlanFile {
            kind: PlanKind::Subrate,
            p: plan.field.modulus(),
            rate: plan.rate,
            l: 1,
            precoder: grid(&plan.p),
            spanner: plan.spanner.clone(),
            i_bar: plan.i_bar.clone(),
            blocks: None,
            sinks: plan
                .sinks
                .iter()
                .zip(labels)
                .map(|(s, lab)| SinkDecoderJson {
                    sink: lab.name.clone(),
                    h: s.d.rows(),
                    edges: lab
                        .edges
                        .as_ref()
                        .map(|es| es.iter().map(|e| e.0).collect()),
                    d: grid(&s.d),
                    r: grid(&s.r),
                    decoded_indices: s.decoded_indices.clone(),
                    rate: rate_string(Ratio::from_integer(s.decoded_indices.len() as u64)),
                })
                .collect(),
        }
    }

    pub fn from_block(plan: &BlockPlan, labels: &[SinkLabel]) -> Self {
        PlanFile {
            kind: PlanKind::Block,
            p: plan.field.modulus(),
            rate: plan.rate,
            l: plan.l,
            precoder: grid(&plan.p_hat),
            spanner: plan.design.spanner.clone(),
            i_bar: None,
            blocks: Some(plan.design.blocks.clone()),
            sinks: plan
                .sinks
                .iter()
                .zip(labels)
                .map(|(s, lab)| SinkDecoderJson {
                    sink: lab.name.clone(),
                    h: s.d_hat.rows() / plan.l,
                    edges: lab
                        .edges
                        .as_ref()
                        .map(|es| es.iter().map(|e| e.0).collect()),
                    d: grid(&s.d_hat),
                    r: grid(&s.r_hat),
                    decoded_indices: s.decoded_indices.clone(),
                    rate: rate_string(s.rate),
                })
                .collect(),
        }
    }

    pub fn field(&self) -> Result<FieldSpec, IoError> {
        Ok(FieldSpec::new(self.p)?)
    }

    pub fn precoder(&self) -> Result<Mat, IoError> {
        mat_from_grid(self.field()?, &self.precoder, self.l * self.rate)
    }

    /// `(D, R)` of one sink entry, shape-checked.
    pub fn decoder(&self, s: &SinkDecoderJson) -> Result<(Mat, Mat), IoError> {
        let f = self.field()?;
        let n = self.l * s.h;
        let d = mat_from_grid(f, &s.d, n)?;
        let r = mat_from_grid(f, &s.r, self.l * self.rate)?;
        if d.cols() != n || r.cols() != n {
            return Err(IoError::Invalid(format!(
                "decoder of sink `{}` has the wrong shape",
                s.sink
            )));
        }
        Ok((d, r))
    }
}

/// Pretty JSON with arrays of scalars kept on one line, so matrix rows read
/// as rows. Object keys come out sorted.
pub fn to_json<T: Serialize>(value: &T) -> String {
    let v = serde_json::to_value(value).expect("plain data serializes");
    let mut out = String::new();
    write_value(&v, 0, &mut out);
    out.push('\n');
    out
}

fn write_value(v: &serde_json::Value, depth: usize, out: &mut String) {
    use serde_json::Value;
    let pad = |d: usize| "  ".repeat(d);
    match v {
        Value::Array(items) if items.iter().all(|x| !x.is_array() && !x.is_object()) => {
            out.push_str(
                &serde_json::to_string(v)
                    .expect("scalars serialize")
                    .replace(',', ", "),
            );
        }
        Value::Array(items) => {
            out.push_str("[\n");
            for (i, x) in items.iter().enumerate() {
                out.push_str(&pad(depth + 1));
                write_value(x, depth + 1, out);
                out.push_str(if i + 1 < items.len() { ",\n" } else { "\n" });
            }
            out.push_str(&pad(depth));
            out.push(']');
        }
        Value::Object(map) if map.is_empty() => out.push_str("{}"),
        Value::Object(map) => {
            out.push_str("{\n");
            for (i, (k, x)) in map.iter().enumerate() {
                out.push_str(&pad(depth + 1));
                out.push_str(&serde_json::to_string(k).expect("string"));
                out.push_str(": ");
                write_value(x, depth + 1, out);
                out.push_str(if i + 1 < map.len() { ",\n" } else { "\n" });
            }
            out.push_str(&pad(depth));
            out.push('}');
        }
        _ => out.push_str(&serde_json::to_string(v).expect("scalar serializes")),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::multicast::build_multicast;
    use crate::subrate::build_precoder;
    use crate::subrate::fixtures::three_planes;

    const BUTTERFLY: &str = r#"{
        "field": 3, "rate": 2,
        "nodes": ["1","2","3","4","5","6","7"],
        "edges": [["1","2"],["1","3"],["2","4"],["3","4"],["4","5"],["5","6"],["5","7"],["2","6"],["3","7"]],
        "source": "1", "sinks": ["6","7"]
    }"#;

    #[test]
    fn network_round_trip() {
        let nf = NetworkFile::parse(BUTTERFLY).unwrap();
        let net = nf.to_network().unwrap();
        assert_eq!(net.node_count(), 7);
        assert_eq!(net.max_flow(5).unwrap().value, 2);
        let again = NetworkFile::parse(&to_json(&nf)).unwrap();
        assert_eq!(again, nf);
    }

    #[test]
    fn numeric_node_ids() {
        let text = r#"{"field":2,"rate":1,"nodes":[1,2],"edges":[[1,2]],"source":1,"sinks":[2]}"#;
        let net = NetworkFile::parse(text).unwrap().to_network().unwrap();
        assert_eq!(net.max_flow(1).unwrap().value, 1);
    }

    #[test]
    fn rejects_unknown_keys_and_nodes() {
        let extra = BUTTERFLY.replace("\"rate\": 2", "\"rate\": 2, \"colour\": 1");
        assert!(matches!(NetworkFile::parse(&extra), Err(IoError::Json(_))));
        let bad = BUTTERFLY.replace("\"sinks\": [\"6\",\"7\"]", "\"sinks\": [\"9\"]");
        let err = NetworkFile::parse(&bad).unwrap().to_network().unwrap_err();
        assert!(matches!(err, IoError::Net(NetError::UnknownNode(ref n)) if n == "9"));
    }

    #[test]
    fn code_round_trip() {
        let net = NetworkFile::parse(BUTTERFLY).unwrap().to_network().unwrap();
        let code = build_multicast(&net, &[5, 6], 0).unwrap();
        let file = CodeFile::from_code(&net, &code);
        let back: CodeFile = serde_json::from_str(&to_json(&file)).unwrap();
        assert_eq!(back.to_code(&net).unwrap(), code);
        let mut tampered = back.clone();
        tampered.gek[3].kernel[0] = (tampered.gek[3].kernel[0] + 1) % 3;
        assert!(tampered.to_code(&net).is_err());
    }

    #[test]
    fn plan_round_trip() {
        let g = three_planes();
        let plan = build_precoder(&g, &[]).unwrap();
        let labels: Vec<SinkLabel> = (1..=3)
            .map(|i| SinkLabel {
                name: format!("t{i}"),
                edges: None,
            })
            .collect();
        let pf = PlanFile::from_subrate(&plan, &labels);
        let back = PlanFile::parse(&to_json(&pf)).unwrap();
        assert_eq!(back, pf);
        assert_eq!(back.precoder().unwrap(), plan.p);
        let (d, r) = back.decoder(&back.sinks[0]).unwrap();
        assert_eq!((d, r), (plan.sinks[0].d.clone(), plan.sinks[0].r.clone()));
        assert_eq!(back.sinks[0].rate, "2/1");
    }

    #[test]
    fn rates() {
        assert_eq!(rate_string(Ratio::new(10, 6)), "5/3");
        assert_eq!(parse_rate("6/4").unwrap(), Ratio::new(3, 2));
        assert!(parse_rate("1/0").is_err());
        assert!(parse_rate("x").is_err());
    }
}
