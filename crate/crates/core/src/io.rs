//! File formats: CSV datasets, model / DAG / CEG JSON documents and
//! Graphviz DOT export.

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;
use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::bn::Dag;
use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::model::{
    Ceg, CegEdge, CegNode, EventTree, SimplexMode, StageParameters, StagedTree, Staging,
    VariableSpec, Vertex,
};

pub const MODEL_FORMAT: &str = "stagedtree/1";
pub const DAG_FORMAT: &str = "dag/1";
pub const CEG_FORMAT: &str = "ceg/1";

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CsvOptions {
    /// Equal-frequency bins for numeric columns; `None` treats every column
    /// as categorical.
    pub bins: Option<usize>,
    /// Cell values treated as missing.
    pub missing: Vec<String>,
}

impl Default for CsvOptions {
    fn default() -> Self {
        CsvOptions {
            bins: None,
            missing: vec![String::new(), "NA".into()],
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CsvImport {
    pub data: Dataset,
    /// Rows removed for containing a missing cell.
    pub dropped_rows: usize,
}

pub fn read_csv(path: impl AsRef<Path>, opts: &CsvOptions) -> Result<CsvImport> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_csv_from(file, opts)
}

/// Reads a headed CSV. Rows with a missing cell are dropped. Categorical
/// columns take their levels in order of first appearance; numeric columns
/// are binned into levels `q1..qk` when `opts.bins` is set.
pub fn read_csv_from<R: Read>(reader: R, opts: &CsvOptions) -> Result<CsvImport> {
    if opts.bins.is_some_and(|k| k < 2) {
        return Err(Error::InvalidConfig("at least 2 bins are required".into()));
    }
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    let names: Vec<String> = rdr.headers()?.iter().map(|h| h.trim().to_string()).collect();
    if names.is_empty() || names.iter().all(|n| n.is_empty()) {
        return Err(Error::NoVariables);
    }
    let mut columns: Vec<Vec<String>> = vec![Vec::new(); names.len()];
    let mut dropped_rows = 0;
    for record in rdr.records() {
        let record = record?;
        let cells: Vec<&str> = record.iter().map(str::trim).collect();
        if cells.iter().any(|c| opts.missing.iter().any(|m| m == c)) {
            dropped_rows += 1;
            continue;
        }
        for (col, cell) in columns.iter_mut().zip(cells) {
            col.push(cell.to_string());
        }
    }

    let mut variables = Vec::with_capacity(names.len());
    let mut codes: Vec<Vec<u32>> = Vec::with_capacity(names.len());
    for (name, col) in names.iter().zip(&columns) {
        let numeric: Option<Vec<f64>> = opts
            .bins
            .and_then(|_| col.iter().map(|c| c.parse::<f64>().ok().filter(|x| x.is_finite())).collect());
        let (levels, column_codes) = match (numeric, opts.bins) {
            (Some(values), Some(k)) if !col.is_empty() => {
                if values.iter().all(|&v| v == values[0]) {
                    return Err(single_value(name));
                }
                let bins = equal_frequency_bins(&values, k);
                let levels = (1..=k).map(|i| format!("q{i}")).collect();
                (levels, bins.into_iter().map(|b| b as u32).collect())
            }
            _ => factorize(col),
        };
        if levels.len() < 2 && !col.is_empty() {
            return Err(single_value(name));
        }
        if levels.len() < 2 {
            return Err(Error::EmptyData);
        }
        variables.push(VariableSpec::new(name.clone(), levels)?);
        codes.push(column_codes);
    }
    let n = columns[0].len();
    let mut cells = Vec::with_capacity(n * names.len());
    for i in 0..n {
        cells.extend(codes.iter().map(|c| c[i]));
    }
    Ok(CsvImport {
        data: Dataset::from_cells(variables, cells)?,
        dropped_rows,
    })
}

fn single_value(name: &str) -> Error {
    Error::InvalidData(format!("column `{name}` has a single distinct value"))
}

fn factorize(col: &[String]) -> (Vec<String>, Vec<u32>) {
    let mut index: HashMap<&str, u32> = HashMap::new();
    let mut levels = Vec::new();
    let codes = col
        .iter()
        .map(|c| {
            *index.entry(c.as_str()).or_insert_with(|| {
                levels.push(c.clone());
                (levels.len() - 1) as u32
            })
        })
        .collect();
    (levels, codes)
}

/// Bin of each value under `k` equal-frequency bins. The upper boundary of
/// bin `j` is the value at sorted position `ceil(j n / k) - 1`; values equal
/// to a boundary go to the lower bin.
pub fn equal_frequency_bins(values: &[f64], k: usize) -> Vec<usize> {
    let n = values.len();
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let bounds: Vec<f64> = (1..k)
        .map(|j| sorted[((j * n).div_ceil(k)).saturating_sub(1).min(n - 1)])
        .collect();
    values
        .iter()
        .map(|&x| bounds.iter().position(|&b| x <= b).unwrap_or(k - 1))
        .collect()
}

/// Writes level labels with a header of variable names.
pub fn write_csv<W: Write>(data: &Dataset, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(data.variables().iter().map(|v| v.name.as_str()))?;
    for row in data.rows() {
        w.write_record(
            row.iter()
                .zip(data.variables())
                .map(|(&x, v)| v.levels[x as usize].as_str()),
        )?;
    }
    w.flush().map_err(|e| Error::Csv(e.into()))?;
    Ok(())
}

pub fn write_csv_path(data: &Dataset, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    write_csv(data, std::io::BufWriter::new(file))
}

/// Provenance stored alongside a model.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelMeta {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub algorithm: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bic: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub log_likelihood: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stages_per_depth: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub positions: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wall_ms: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub generator: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub q: Option<f64>,
}

impl ModelMeta {
    fn is_empty(&self) -> bool {
        *self == ModelMeta::default()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ModelDocument {
    pub model: StagedTree,
    pub meta: ModelMeta,
}

impl ModelDocument {
    pub fn new(model: StagedTree) -> Self {
        ModelDocument {
            model,
            meta: ModelMeta::default(),
        }
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelFile {
    format: String,
    variables: Vec<VariableSpec>,
    order: Vec<String>,
    staging: Vec<Vec<Vec<usize>>>,
    #[serde(default)]
    params: Option<BTreeMap<usize, Vec<f64>>>,
    #[serde(default, skip_serializing_if = "ModelMeta::is_empty")]
    meta: ModelMeta,
}

fn check_format(value: &serde_json::Value, expected: &str) -> Result<()> {
    match value.get("format").and_then(|f| f.as_str()) {
        Some(f) if f == expected => Ok(()),
        Some(f) => Err(Error::Version {
            found: f.to_string(),
            expected: expected.to_string(),
        }),
        None => Err(Error::Schema("missing `format` field".into())),
    }
}

fn schema(e: Error) -> Error {
    match e {
        Error::Schema(_) => e,
        other => Error::Schema(other.to_string()),
    }
}

/// Pretty JSON with a trailing newline.
pub fn model_to_json(doc: &ModelDocument) -> Result<String> {
    let st = &doc.model;
    let tree = st.tree();
    let params = st.params().map(|p| {
        p.vectors()
            .iter()
            .cloned()
            .enumerate()
            .collect::<BTreeMap<_, _>>()
    });
    let file = ModelFile {
        format: MODEL_FORMAT.into(),
        variables: tree.variables().to_vec(),
        order: tree.names(),
        staging: st.staging().depths().iter().map(|d| d.blocks()).collect(),
        params,
        meta: doc.meta.clone(),
    };
    Ok(serde_json::to_string_pretty(&file)? + "\n")
}

pub fn model_from_json(text: &str) -> Result<ModelDocument> {
    let value: serde_json::Value = serde_json::from_str(text)?;
    check_format(&value, MODEL_FORMAT)?;
    let file: ModelFile = serde_json::from_value(value).map_err(|e| Error::Schema(e.to_string()))?;

    if file.order.len() != file.variables.len() {
        return Err(Error::Schema(format!(
            "order lists {} variables, {} declared",
            file.order.len(),
            file.variables.len()
        )));
    }
    let mut ordered = Vec::with_capacity(file.order.len());
    for name in &file.order {
        let var = file
            .variables
            .iter()
            .find(|v| &v.name == name)
            .ok_or_else(|| Error::Schema(format!("order names unknown variable `{name}`")))?;
        ordered.push(var.clone());
    }
    let tree = EventTree::new(ordered).map_err(schema)?;
    let staging = Staging::from_blocks(&tree, &file.staging).map_err(schema)?;
    let mut model = StagedTree::new(tree, staging).map_err(schema)?;
    if let Some(map) = file.params {
        if map.keys().copied().ne(0..model.num_stages()) {
            return Err(Error::Schema(format!(
                "params must list stage ids 0..{}",
                model.num_stages()
            )));
        }
        let params = StageParameters::new(map.into_values().collect());
        model = model.with_params(params, SimplexMode::Closed).map_err(schema)?;
    }
    Ok(ModelDocument {
        model,
        meta: file.meta,
    })
}

pub fn write_model(path: impl AsRef<Path>, doc: &ModelDocument) -> Result<()> {
    write_text(path, &model_to_json(doc)?)
}

pub fn read_model(path: impl AsRef<Path>) -> Result<ModelDocument> {
    model_from_json(&read_text(path)?)
}

pub fn write_text(path: impl AsRef<Path>, text: &str) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn read_text(path: impl AsRef<Path>) -> Result<String> {
    let path = path.as_ref();
    std::fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct DagFile {
    format: String,
    vertices: Vec<String>,
    /// `[from, to]` pairs of vertex names.
    edges: Vec<(String, String)>,
}

pub fn dag_to_json(g: &Dag) -> Result<String> {
    let names = g.names();
    let file = DagFile {
        format: DAG_FORMAT.into(),
        vertices: names.to_vec(),
        edges: g
            .edges()
            .into_iter()
            .map(|(a, b)| (names[a].clone(), names[b].clone()))
            .collect(),
    };
    Ok(serde_json::to_string_pretty(&file)? + "\n")
}

pub fn dag_from_json(text: &str) -> Result<Dag> {
    let value: serde_json::Value = serde_json::from_str(text)?;
    check_format(&value, DAG_FORMAT)?;
    let file: DagFile = serde_json::from_value(value).map_err(|e| Error::Schema(e.to_string()))?;
    let index = |name: &str| {
        file.vertices
            .iter()
            .position(|v| v == name)
            .ok_or_else(|| Error::Schema(format!("edge names unknown vertex `{name}`")))
    };
    let edges = file
        .edges
        .iter()
        .map(|(a, b)| Ok((index(a)?, index(b)?)))
        .collect::<Result<Vec<_>>>()?;
    for (i, v) in file.vertices.iter().enumerate() {
        if file.vertices[..i].contains(v) {
            return Err(Error::DuplicateVariable(v.clone()));
        }
    }
    Dag::new(file.vertices, &edges)
}

#[derive(Serialize)]
struct CegFile<'a> {
    format: &'static str,
    variables: &'a [VariableSpec],
    nodes: &'a [CegNode],
    sink: usize,
    edges: &'a [CegEdge],
}

pub fn ceg_to_json(ceg: &Ceg) -> Result<String> {
    let file = CegFile {
        format: CEG_FORMAT,
        variables: ceg.variables(),
        nodes: ceg.nodes(),
        sink: ceg.sink(),
        edges: ceg.edges(),
    };
    Ok(serde_json::to_string_pretty(&file)? + "\n")
}

/// Fill colours for non-singleton stages, cycled by stage.
pub const PALETTE: [&str; 12] = [
    "#8dd3c7", "#ffffb3", "#bebada", "#fb8072", "#80b1d3", "#fdb462", "#b3de69", "#fccde5",
    "#d9d9d9", "#bc80bd", "#ccebc5", "#ffed6f",
];

/// Colour per global stage id; `None` for singleton stages.
fn stage_colours(staging: &Staging) -> Vec<Option<&'static str>> {
    let mut next = 0;
    let mut out = Vec::with_capacity(staging.num_stages());
    for d in 0..staging.num_depths() {
        for block in staging.depth(d).blocks() {
            if block.len() > 1 {
                out.push(Some(PALETTE[next % PALETTE.len()]));
                next += 1;
            } else {
                out.push(None);
            }
        }
    }
    out
}

fn quote(s: &str) -> String {
    format!("\"{}\"", s.replace('\\', "\\\\").replace('"', "\\\""))
}

fn node_line(out: &mut String, id: &str, label: &str, colour: Option<&str>) {
    let _ = match colour {
        Some(c) => writeln!(out, "  {id} [label={}, fillcolor=\"{c}\"];", quote(label)),
        None => writeln!(out, "  {id} [label={}];", quote(label)),
    };
}

fn edge_label(var: &VariableSpec, level: usize) -> String {
    quote(&format!("{}={}", var.name, var.levels[level]))
}

/// Staged tree as a DOT digraph. Internal vertices are `v<i>` in
/// breadth-first numbering, leaves are points.
pub fn staged_tree_to_dot(st: &StagedTree) -> String {
    let tree = st.tree();
    let colours = stage_colours(st.staging());
    let mut out = String::from("digraph stagedtree {\n  rankdir=LR;\n");
    out.push_str("  node [shape=circle, style=filled, fillcolor=\"#ffffff\"];\n");
    let p = tree.num_variables();
    for d in 0..p {
        for r in 0..tree.width(d) {
            let v = Vertex::new(d, r);
            let i = tree.bfs_index(v);
            node_line(&mut out, &format!("v{i}"), &format!("v{i}"), colours[st.staging().stage_of(v).0]);
        }
    }
    for r in 0..tree.width(p) {
        let _ = writeln!(out, "  l{r} [shape=point, label=\"\"];");
    }
    for d in 0..p {
        let var = tree.variable(d);
        for r in 0..tree.width(d) {
            let v = Vertex::new(d, r);
            for x in 0..tree.cardinality(d) {
                let c = tree.child(v, x);
                let to = if d + 1 == p {
                    format!("l{}", c.rank)
                } else {
                    format!("v{}", tree.bfs_index(c))
                };
                let _ = writeln!(out, "  v{} -> {to} [label={}];", tree.bfs_index(v), edge_label(var, x));
            }
        }
    }
    out.push_str("}\n");
    out
}

/// Chain event graph as a DOT digraph: positions `w<i>` and the sink `w_inf`.
pub fn ceg_to_dot(ceg: &Ceg, staging: &Staging) -> String {
    let colours = stage_colours(staging);
    let mut out = String::from("digraph ceg {\n  rankdir=LR;\n");
    out.push_str("  node [shape=circle, style=filled, fillcolor=\"#ffffff\"];\n");
    for node in ceg.nodes() {
        node_line(&mut out, &format!("w{}", node.id), &format!("w{}", node.id), colours[node.stage]);
    }
    out.push_str("  w_inf [label=\"w_inf\", shape=doublecircle];\n");
    for e in ceg.edges() {
        let var = &ceg.variables()[ceg.nodes()[e.from].depth];
        let to = if e.to == ceg.sink() {
            "w_inf".to_string()
        } else {
            format!("w{}", e.to)
        };
        let _ = writeln!(out, "  w{} -> {to} [label={}];", e.from, edge_label(var, e.level));
    }
    out.push_str("}\n");
    out
}
