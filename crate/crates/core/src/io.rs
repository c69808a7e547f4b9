//! File formats: edge lists, feature CSVs, CSV exports and JSON artifacts.

use std::collections::BTreeMap;
use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use ndarray::Array2;
use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::centrality::{CentralityKind, CentralityScores};
use crate::community::CommunityPartition;
use crate::encoding::StructuralEncoding;
use crate::error::{CelpError, Result};
use crate::eval::SweepPoint;
use crate::features::PairFeature;
use crate::graph::{build_graph, Graph, NodeId, Pair};

/// A loaded graph and the external id of every dense node id.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub graph: Graph,
    pub external_ids: Vec<u64>,
}

fn open(path: &Path) -> Result<BufReader<fs::File>> {
    Ok(BufReader::new(fs::File::open(path).map_err(|e| CelpError::io(path, e))?))
}

fn create(path: &Path) -> Result<fs::File> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| CelpError::io(dir, e))?;
    }
    fs::File::create(path).map_err(|e| CelpError::io(path, e))
}

/// Whitespace-separated integer pairs, `#` comments and blank lines ignored.
pub fn read_edge_list(path: &Path) -> Result<Vec<(u64, u64)>> {
    let mut out = Vec::new();
    for (i, line) in open(path)?.lines().enumerate() {
        let line = line.map_err(|e| CelpError::io(path, e))?;
        let t = line.trim();
        if t.is_empty() || t.starts_with('#') {
            continue;
        }
        let parse_err = |msg: String| CelpError::Parse { path: path.to_path_buf(), line: i + 1, msg };
        let mut it = t.split_whitespace();
        let (Some(a), Some(b)) = (it.next(), it.next()) else {
            return Err(parse_err(format!("expected two node ids, got `{t}`")));
        };
        if it.next().is_some() {
            return Err(parse_err(format!("expected two node ids, got `{t}`")));
        }
        let a = a.parse::<u64>().map_err(|e| parse_err(format!("bad node id `{a}`: {e}")))?;
        let b = b.parse::<u64>().map_err(|e| parse_err(format!("bad node id `{b}`: {e}")))?;
        out.push((a, b));
    }
    if out.is_empty() {
        return Err(CelpError::NoEdges(path.to_path_buf()));
    }
    Ok(out)
}

/// Header-less numeric CSV, one row per node.
pub fn read_features(path: &Path) -> Result<Array2<f64>> {
    let mut reader = csv::ReaderBuilder::new().has_headers(false).from_reader(open(path)?);
    let mut data = Vec::new();
    let mut width = None;
    let mut rows = 0;
    for (i, rec) in reader.records().enumerate() {
        let rec = rec?;
        let parse_err = |msg: String| CelpError::Parse { path: path.to_path_buf(), line: i + 1, msg };
        if *width.get_or_insert(rec.len()) != rec.len() {
            return Err(parse_err(format!("expected {} columns, got {}", width.unwrap_or(0), rec.len())));
        }
        for field in rec.iter() {
            let x = field.trim().parse::<f64>().map_err(|e| parse_err(format!("bad number `{field}`: {e}")))?;
            data.push(x);
        }
        rows += 1;
    }
    Array2::from_shape_vec((rows, width.unwrap_or(0)), data)
        .map_err(|e| CelpError::InvalidParameter(format!("{}: {e}", path.display())))
}

/// Loads an edge list (and optional features). External ids are relabeled
/// to `0..n` in ascending order; feature row `i` belongs to the `i`-th
/// smallest external id.
pub fn load_dataset(edges: &Path, features: Option<&Path>) -> Result<Dataset> {
    let raw = read_edge_list(edges)?;
    let mut external_ids: Vec<u64> = raw.iter().flat_map(|&(a, b)| [a, b]).collect();
    external_ids.sort_unstable();
    external_ids.dedup();
    let index = |x: u64| external_ids.binary_search(&x).expect("id collected above");
    let pairs: Vec<Pair> = raw.iter().map(|&(a, b)| (index(a), index(b))).collect();
    let x = features.map(read_features).transpose()?;
    let graph = build_graph(&pairs, external_ids.len(), x)?;
    Ok(Dataset { graph, external_ids })
}

pub fn write_edge_list(g: &Graph, path: &Path) -> Result<()> {
    let mut f = std::io::BufWriter::new(create(path)?);
    for (u, v) in g.edges() {
        writeln!(f, "{u} {v}").map_err(|e| CelpError::io(path, e))?;
    }
    f.flush().map_err(|e| CelpError::io(path, e))
}

fn writer(path: &Path) -> Result<csv::Writer<fs::File>> {
    Ok(csv::Writer::from_writer(create(path)?))
}

fn finish(mut w: csv::Writer<fs::File>, path: &Path) -> Result<()> {
    w.flush().map_err(|e| CelpError::io(path, e))
}

pub fn write_relabel_csv(ids: &[u64], path: &Path) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record(["node_id", "external_id"])?;
    for (v, id) in ids.iter().enumerate() {
        w.write_record([v.to_string(), id.to_string()])?;
    }
    finish(w, path)
}

pub fn write_partition_csv(p: &CommunityPartition, path: &Path) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record(["node_id", "community_id"])?;
    for (v, c) in p.assignment.iter().enumerate() {
        w.write_record([v.to_string(), c.to_string()])?;
    }
    finish(w, path)
}

/// Reads `node_id,community_id`; rows may come in any order but must cover
/// `0..n` exactly once. `k` is one more than the largest label.
pub fn read_partition_csv(path: &Path) -> Result<CommunityPartition> {
    let mut rows: BTreeMap<NodeId, usize> = BTreeMap::new();
    for (i, rec) in csv::Reader::from_reader(open(path)?).deserialize::<(NodeId, usize)>().enumerate() {
        let (v, c) = rec?;
        if rows.insert(v, c).is_some() {
            return Err(CelpError::Parse { path: path.to_path_buf(), line: i + 2, msg: format!("node {v} repeated") });
        }
    }
    if rows.keys().enumerate().any(|(i, &v)| i != v) {
        return Err(CelpError::InvalidParameter(format!("{}: node ids must cover 0..n", path.display())));
    }
    let assignment: Vec<usize> = rows.into_values().collect();
    let k = assignment.iter().max().map_or(0, |m| m + 1);
    CommunityPartition::from_assignment(k, assignment)
}

pub fn write_scores_csv(s: &CentralityScores, path: &Path) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record(["node_id", "score"])?;
    for (v, x) in s.scores.iter().enumerate() {
        w.write_record([v.to_string(), format!("{x:e}")])?;
    }
    finish(w, path)
}

pub fn read_scores_csv(path: &Path, kind: CentralityKind) -> Result<CentralityScores> {
    let mut scores = Vec::new();
    for rec in csv::Reader::from_reader(open(path)?).deserialize::<(NodeId, f64)>() {
        let (v, x) = rec?;
        if v != scores.len() {
            return Err(CelpError::InvalidParameter(format!("{}: rows must be in node order", path.display())));
        }
        scores.push(x);
    }
    Ok(CentralityScores { kind, scores })
}

/// Normalized encoding, one row per node: `node_id,d0,..,d{K-1}`.
pub fn write_encoding_csv(enc: &StructuralEncoding, path: &Path) -> Result<()> {
    let m = enc.normalized();
    let mut w = writer(path)?;
    let mut header = vec!["node_id".to_string()];
    header.extend((0..enc.k()).map(|k| format!("d{k}")));
    w.write_record(&header)?;
    for (v, row) in m.rows().into_iter().enumerate() {
        let mut rec = vec![v.to_string()];
        rec.extend(row.iter().map(|x| x.to_string()));
        w.write_record(&rec)?;
    }
    finish(w, path)
}

/// Debug dump: `u,v,emb_dot,de*,path*,s_a,s_b,spd`.
pub fn write_pair_features_csv(rows: &[(Pair, PairFeature)], path: &Path) -> Result<()> {
    let mut w = writer(path)?;
    if let Some((_, f)) = rows.first() {
        let mut header: Vec<String> = vec!["u".into(), "v".into(), "emb_dot".into()];
        header.extend((0..f.de.len()).map(|i| format!("de{i}")));
        header.extend((0..f.path.len()).map(|i| format!("path{i}")));
        header.extend(["s_a", "s_b", "spd"].map(String::from));
        w.write_record(&header)?;
    }
    for ((u, v), f) in rows {
        let mut rec = vec![u.to_string(), v.to_string()];
        rec.extend(f.to_vec().iter().map(|x| x.to_string()));
        w.write_record(&rec)?;
    }
    finish(w, path)
}

/// Sweep table with columns `value,mean,std`, one row per value.
pub fn emit_plot_data(points: &[SweepPoint], path: &Path) -> Result<()> {
    if points.is_empty() {
        return Err(CelpError::EmptyInput("no sweep points to write".into()));
    }
    let mut w = writer(path)?;
    w.write_record(["value", "mean", "std"])?;
    for p in points {
        w.write_record([p.value.to_string(), p.report.mean.to_string(), p.report.std.to_string()])?;
    }
    finish(w, path)
}

pub fn write_json<T: Serialize>(value: &T, path: &Path) -> Result<()> {
    let mut f = create(path)?;
    let s = serde_json::to_string_pretty(value)?;
    f.write_all(s.as_bytes()).and_then(|_| f.write_all(b"\n")).map_err(|e| CelpError::io(path, e))
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    Ok(serde_json::from_reader(open(path)?)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn edge_list_and_relabel() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("g.txt");
        fs::write(&p, "# header\n10 20\n\n20 30\n").unwrap();
        let d = load_dataset(&p, None).unwrap();
        assert_eq!(d.graph.n(), 3);
        assert_eq!(d.external_ids, vec![10, 20, 30]);
        assert_eq!(d.graph.edges().collect::<Vec<_>>(), vec![(0, 1), (1, 2)]);
    }

    #[test]
    fn parse_errors() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("g.txt");
        fs::write(&p, "# only\n# comments\n").unwrap();
        assert!(matches!(load_dataset(&p, None), Err(CelpError::NoEdges(_))));
        fs::write(&p, "0 1\n1 x\n").unwrap();
        assert!(matches!(load_dataset(&p, None), Err(CelpError::Parse { line: 2, .. })));
        fs::write(&p, "0 1 2\n").unwrap();
        assert!(matches!(load_dataset(&p, None), Err(CelpError::Parse { line: 1, .. })));
    }

    #[test]
    fn feature_row_mismatch_names_counts() {
        let dir = tempfile::tempdir().unwrap();
        let (g, x) = (dir.path().join("g.txt"), dir.path().join("x.csv"));
        fs::write(&g, "0 1\n1 2\n").unwrap();
        fs::write(&x, "1,2\n3,4\n").unwrap();
        let err = load_dataset(&g, Some(&x)).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains('2') && msg.contains('3'), "{msg}");
        fs::write(&x, "1,2\n3,4\n5,6\n").unwrap();
        let d = load_dataset(&g, Some(&x)).unwrap();
        assert_eq!(d.graph.features().unwrap()[[2, 1]], 6.0);
    }

    #[test]
    fn partition_and_scores_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = CommunityPartition::from_assignment(3, vec![0, 2, 1, 1, 0]).unwrap();
        let path = dir.path().join("part.csv");
        write_partition_csv(&p, &path).unwrap();
        assert_eq!(read_partition_csv(&path).unwrap(), p);
        let s = CentralityScores { kind: CentralityKind::Pagerank, scores: vec![0.1, 0.2 / 3.0, 1e-17] };
        let path = dir.path().join("s.csv");
        write_scores_csv(&s, &path).unwrap();
        assert_eq!(read_scores_csv(&path, CentralityKind::Pagerank).unwrap(), s);
    }

    #[test]
    fn plot_data_needs_points() {
        let dir = tempfile::tempdir().unwrap();
        assert!(emit_plot_data(&[], &dir.path().join("x.csv")).is_err());
    }
}
