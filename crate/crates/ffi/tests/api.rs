use std::ffi::{CStr, CString};
use std::ptr;

use celp_ffi::*;

fn square_with_tail() -> *mut CelpGraph {
    // 0-1-2-3-0 plus the tail 3-4
    let src = [0usize, 1, 2, 3, 3];
    let dst = [1usize, 2, 3, 0, 4];
    let mut g = ptr::null_mut();
    let st = unsafe { celp_graph_new(5, src.as_ptr(), dst.as_ptr(), src.len(), &mut g) };
    assert_eq!(st, CelpStatus::Ok);
    g
}

fn last_error() -> String {
    let p = celp_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

#[test]
fn graph_roundtrip_and_counts() {
    let g = square_with_tail();
    let (mut n, mut m) = (0, 0);
    assert_eq!(unsafe { celp_graph_counts(g, &mut n, &mut m) }, CelpStatus::Ok);
    assert_eq!((n, m), (5, 5));
    assert!(celp_last_error().is_null());
    unsafe { celp_graph_free(g) };
    unsafe { celp_graph_free(ptr::null_mut()) };
}

#[test]
fn bfs_and_length_checks() {
    let g = square_with_tail();
    let mut d = [0usize; 5];
    assert_eq!(unsafe { celp_bfs(g, 0, d.as_mut_ptr(), 5) }, CelpStatus::Ok);
    assert_eq!(d, [0, 1, 2, 1, 2]);
    assert_eq!(unsafe { celp_bfs(g, 0, d.as_mut_ptr(), 4) }, CelpStatus::LengthMismatch);
    assert_eq!(unsafe { celp_bfs(g, 9, d.as_mut_ptr(), 5) }, CelpStatus::OutOfRange);
    assert!(last_error().contains("out of range"));
    unsafe { celp_graph_free(g) };
}

#[test]
fn null_handles_are_rejected() {
    let mut x = 0.0;
    assert_eq!(unsafe { celp_heuristic(ptr::null(), 0, 1, CelpHeuristic::CommonNeighbors, &mut x) }, CelpStatus::NullPointer);
    assert!(last_error().contains("graph"));
    let mut g = ptr::null_mut();
    assert_eq!(unsafe { celp_graph_new(3, ptr::null(), ptr::null(), 2, &mut g) }, CelpStatus::NullPointer);
    assert!(g.is_null());
}

#[test]
fn pagerank_sums_to_one() {
    let g = square_with_tail();
    let mut pr = [0.0; 5];
    assert_eq!(unsafe { celp_pagerank(g, 0.85, 1e-10, 200, pr.as_mut_ptr(), 5) }, CelpStatus::Ok);
    assert!((pr.iter().sum::<f64>() - 1.0).abs() < 1e-9);
    assert!(pr[3] > pr[4]);
    assert_eq!(unsafe { celp_pagerank(g, 1.5, 1e-10, 200, pr.as_mut_ptr(), 5) }, CelpStatus::InvalidArgument);
    let mut bc = [0.0; 5];
    assert_eq!(unsafe { celp_centrality(g, CelpCentrality::Betweenness, bc.as_mut_ptr(), 5) }, CelpStatus::Ok);
    assert_eq!(bc[4], 0.0);
    unsafe { celp_graph_free(g) };
}

#[test]
fn communities_and_centers() {
    // two triangles joined by one edge
    let src = [0usize, 1, 0, 3, 4, 3, 2];
    let dst = [1usize, 2, 2, 4, 5, 5, 3];
    let mut g = ptr::null_mut();
    assert_eq!(unsafe { celp_graph_new(6, src.as_ptr(), dst.as_ptr(), 7, &mut g) }, CelpStatus::Ok);
    let mut p = ptr::null_mut();
    assert_eq!(unsafe { celp_fluidc(g, 2, 100, 7, &mut p) }, CelpStatus::Ok);
    let mut k = 0;
    assert_eq!(unsafe { celp_partition_k(p, &mut k) }, CelpStatus::Ok);
    assert_eq!(k, 2);
    let mut labels = [9usize; 6];
    assert_eq!(unsafe { celp_partition_assignment(p, labels.as_mut_ptr(), 6) }, CelpStatus::Ok);
    assert!(labels.iter().all(|&c| c < 2));
    let mut centers = [0usize; 2];
    assert_eq!(
        unsafe { celp_partition_centers(p, g, CelpCentrality::Pagerank, centers.as_mut_ptr(), 2) },
        CelpStatus::Ok
    );
    for (c, &v) in centers.iter().enumerate() {
        assert_eq!(labels[v], c);
    }
    let mut bad = ptr::null_mut();
    assert_eq!(unsafe { celp_fluidc(g, 7, 100, 7, &mut bad) }, CelpStatus::InvalidArgument);
    unsafe {
        celp_partition_free(p);
        celp_graph_free(g);
    }
}

#[test]
fn heuristics_and_hit_rate() {
    let g = square_with_tail();
    let mut s = 0.0;
    assert_eq!(unsafe { celp_heuristic(g, 0, 2, CelpHeuristic::CommonNeighbors, &mut s) }, CelpStatus::Ok);
    assert_eq!(s, 2.0);
    assert_eq!(unsafe { celp_heuristic(g, 0, 2, CelpHeuristic::ResourceAllocation, &mut s) }, CelpStatus::Ok);
    assert!((s - (0.5 + 1.0 / 3.0)).abs() < 1e-12);
    unsafe { celp_graph_free(g) };

    let pos = [0.9, 0.5, 0.1];
    let neg = [0.8, 0.5, 0.2, 0.0];
    let mut hr = 0.0;
    assert_eq!(unsafe { celp_hit_rate(pos.as_ptr(), 3, neg.as_ptr(), 4, 2, &mut hr) }, CelpStatus::Ok);
    assert!((hr - 1.0 / 3.0).abs() < 1e-12);
    assert_eq!(unsafe { celp_hit_rate(pos.as_ptr(), 3, neg.as_ptr(), 4, 0, &mut hr) }, CelpStatus::InvalidArgument);
}

#[test]
fn load_reports_io_and_parse_errors() {
    let dir = tempfile::tempdir().unwrap();
    let missing = CString::new(dir.path().join("nope.txt").to_str().unwrap()).unwrap();
    let mut g = ptr::null_mut();
    assert_eq!(unsafe { celp_graph_load(missing.as_ptr(), &mut g) }, CelpStatus::Io);
    let bad = dir.path().join("bad.txt");
    std::fs::write(&bad, "1 2\n3 x\n").unwrap();
    let bad = CString::new(bad.to_str().unwrap()).unwrap();
    assert_eq!(unsafe { celp_graph_load(bad.as_ptr(), &mut g) }, CelpStatus::Parse);
    assert!(last_error().contains(":2:"));
    let ok = dir.path().join("ok.txt");
    std::fs::write(&ok, "10 20\n20 30\n").unwrap();
    let ok = CString::new(ok.to_str().unwrap()).unwrap();
    assert_eq!(unsafe { celp_graph_load(ok.as_ptr(), &mut g) }, CelpStatus::Ok);
    let (mut n, mut m) = (0, 0);
    unsafe { celp_graph_counts(g, &mut n, &mut m) };
    assert_eq!((n, m), (3, 2));
    unsafe { celp_graph_free(g) };
}

#[test]
fn pipeline_returns_report_json() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.toml");
    std::fs::write(
        &cfg,
        r#"seeds = [0]
[data.sbm]
block_sizes = [30, 30]
p_in = 0.3
p_out = 0.02
[community]
k = 2
[features]
sketch_dim = 16
[scorer]
epochs = 2
hidden = 8
head_hidden = 4
"#,
    )
    .unwrap();
    let cfg = CString::new(cfg.to_str().unwrap()).unwrap();
    let mut json = ptr::null_mut();
    let st = unsafe { celp_run_pipeline(cfg.as_ptr(), ptr::null(), &mut json) };
    assert_eq!(st, CelpStatus::Ok, "{}", if st == CelpStatus::Ok { String::new() } else { last_error() });
    let text = unsafe { CStr::from_ptr(json) }.to_str().unwrap().to_owned();
    unsafe { celp_string_free(json) };
    let v: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert_eq!(v["metric"], "HR@50");
    assert_eq!(v["k"], 50);
    assert_eq!(v["runs"].as_array().unwrap().len(), 1);

    std::fs::write(dir.path().join("broken.toml"), "seeds = [0]\nbogus = 1\n").unwrap();
    let broken = CString::new(dir.path().join("broken.toml").to_str().unwrap()).unwrap();
    assert_eq!(unsafe { celp_run_pipeline(broken.as_ptr(), ptr::null(), &mut json) }, CelpStatus::Config);
}

#[test]
fn version_is_a_c_string() {
    let v = unsafe { CStr::from_ptr(celp_version()) }.to_str().unwrap();
    assert_eq!(v, env!("CARGO_PKG_VERSION"));
}
