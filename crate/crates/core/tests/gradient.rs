//! Finite-difference check of the analytic gradient of `L_CE + alpha * L_con`.

mod common;

use celp_core::scorer::{ModelParams, Objective};
use common::{instance, max_rel_error, TOL};

#[test]
fn gradients_match_finite_differences() {
    for alpha in [0.0, 0.2] {
        for tau in [0.5, 1.0] {
            let (err, at) = max_rel_error(alpha, tau);
            assert!(err <= TOL, "alpha {alpha} tau {tau}: {err:e} at {at}");
        }
    }
}

#[test]
fn alpha_zero_ignores_constraint() {
    let inst = instance();
    let zero = inst.m.zeroed();
    let params = ModelParams::init(4, 5, 2, 6, 3, 3);
    let mk = |m| Objective {
        adjacency: &inst.adj,
        inputs: &inst.x,
        pairs: &inst.pairs,
        rows: &inst.rows,
        labels: &inst.labels,
        constraint: Some(m),
        anchors: &inst.anchors,
        alpha: 0.0,
        tau: 0.5,
    };
    let (a, ga) = mk(&inst.m).loss_and_grad(&params).unwrap();
    let (b, gb) = mk(&zero).loss_and_grad(&params).unwrap();
    assert_eq!(a, b);
    assert_eq!(ga, gb);
}

#[test]
fn total_is_ce_plus_weighted_con() {
    let inst = instance();
    let params = ModelParams::init(4, 5, 2, 6, 3, 8);
    let r = Objective {
        adjacency: &inst.adj,
        inputs: &inst.x,
        pairs: &inst.pairs,
        rows: &inst.rows,
        labels: &inst.labels,
        constraint: Some(&inst.m),
        anchors: &inst.anchors,
        alpha: 0.4,
        tau: 0.5,
    }
    .loss(&params)
    .unwrap();
    assert!(r.con > 0.0);
    assert!((r.total - (r.ce + 0.4 * r.con)).abs() <= 1e-12);
}
