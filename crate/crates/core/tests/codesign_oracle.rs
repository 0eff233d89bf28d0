mod common;

use bfly_core::codesign::*;
use bfly_core::par;
use bfly_core::sim::DeviceBudget;
use common::*;
use rand::seq::SliceRandom;
use rand::Rng;

fn random_objectives(n: usize, coarse: bool, r: &mut impl Rng) -> Vec<(f64, f64)> {
    (0..n)
        .map(|_| {
            if coarse {
                // few distinct values so ties are common
                (r.gen_range(0..40) as f64, r.gen_range(0..40) as f64 / 40.0)
            } else {
                (r.gen_range(0.0..1.0), r.gen_range(0.0..1.0))
            }
        })
        .collect()
}

#[test]
fn front_matches_brute_force() {
    let mut r = rng(77);
    for (n, coarse) in [(10_000, false), (10_000, true), (1000, true), (1, false), (0, false)] {
        let objs = random_objectives(n, coarse, &mut r);
        let mut got = pareto_indices(&objs);
        got.sort();
        assert_eq!(got, brute_front(&objs), "n = {n}, coarse = {coarse}");
    }
}

#[test]
fn front_order_is_by_latency() {
    let mut r = rng(78);
    let objs = random_objectives(5000, true, &mut r);
    let f = pareto_indices(&objs);
    for w in f.windows(2) {
        assert!(objs[w[0]].0 <= objs[w[1]].0);
    }
}

fn small_space() -> SearchSpace {
    SearchSpace {
        d_hid: vec![64, 128],
        r_ffn: vec![1, 2],
        n_total: vec![1, 2],
        n_abfly: vec![0, 1],
        p_be: vec![0, 8, 64],
        p_bu: vec![4, 16],
        p_qk: vec![0, 16],
        p_sv: vec![0, 16],
        n_heads: 2,
        seq_len: 256,
        p_head: 1,
        hardware: None,
    }
}

/// Accuracy varies with the model so the front is not trivial.
fn varied_table() -> AccuracyTable {
    let json = r#"{
      "baseline": {"text": 0.637},
      "entries": [
        {"match": {"n_abfly": 1, "d_hid": 128}, "accuracy": {"text": 0.640}},
        {"match": {"n_abfly": 1}, "accuracy": {"text": 0.633}},
        {"match": {"d_hid": 128, "r_ffn": 2}, "accuracy": {"text": 0.630}},
        {"match": {}, "accuracy": {"text": 0.615}}
      ]
    }"#;
    AccuracyTable::from_json(json).unwrap()
}

fn constraints(loss: f64) -> Constraints {
    Constraints {
        dataset: "text".into(),
        max_accuracy_loss: loss,
        budget: DeviceBudget::vcu128(),
    }
}

#[test]
fn first_matching_entry_wins() {
    let t = varied_table();
    let space = small_space();
    let g = |d, r, a| GridPoint { d_hid: d, r_ffn: r, n_total: 1, n_abfly: a, p_be: 8, p_bu: 4, p_qk: 16, p_sv: 16 };
    assert_eq!(t.lookup("text", &g(128, 1, 1).model(&space)).unwrap(), 0.640);
    assert_eq!(t.lookup("text", &g(64, 1, 1).model(&space)).unwrap(), 0.633);
    assert_eq!(t.lookup("text", &g(128, 2, 0).model(&space)).unwrap(), 0.630);
    assert_eq!(t.lookup("text", &g(64, 2, 0).model(&space)).unwrap(), 0.615);
    assert!(t.lookup("image", &g(64, 2, 0).model(&space)).is_err());
}

#[test]
fn enumeration_is_lexicographic() {
    let pts = enumerate(&small_space()).unwrap();
    assert_eq!(pts.len(), small_space().size());
    for w in pts.windows(2) {
        assert!(w[0] < w[1]);
        assert!(w[0].key() < w[1].key());
    }
}

#[test]
fn tightening_never_adds_feasible_points() {
    let space = small_space();
    let t = varied_table();
    let mut last: Option<Vec<String>> = None;
    for loss in [0.05, 0.02, 0.01, 0.005, 0.0] {
        let (_, pts) = run_dse(&space, &t, &constraints(loss)).unwrap();
        let feas: Vec<String> = pts.iter().filter(|p| p.feasible).map(|p| p.key.clone()).collect();
        if let Some(prev) = &last {
            assert!(feas.iter().all(|k| prev.contains(k)));
        }
        last = Some(feas);
    }
}

#[test]
fn results_do_not_depend_on_threads_or_order() {
    let space = small_space();
    let t = varied_table();
    let c = constraints(0.01);
    let (a, pa) = run_dse(&space, &t, &c).unwrap();
    let (b, pb) = par::with_threads(Some(1), || run_dse(&space, &t, &c).unwrap());
    assert_eq!(a, b);
    assert_eq!(pa, pb);
    // evaluate in a shuffled order and rebuild the front
    let mut grid = enumerate(&space).unwrap();
    grid.shuffle(&mut rng(1));
    let mut pts: Vec<DesignPoint> = grid
        .iter()
        .map(|g| evaluate_or_reject(g, &space, &t, &c).unwrap())
        .filter(|p| p.latency_s.is_some() && p.reason != Some(Infeasible::Resources))
        .collect();
    pts.shuffle(&mut rng(2));
    assert_eq!(pareto_front(&pts), a.front);
}

#[test]
fn selection_is_lowest_latency_within_constraint() {
    let space = small_space();
    let t = varied_table();
    let c = constraints(0.01);
    let (res, pts) = run_dse(&space, &t, &c).unwrap();
    let sel = res.selected.unwrap();
    assert!(sel.feasible);
    let best = pts
        .iter()
        .filter(|p| p.feasible)
        .map(|p| p.latency_s.unwrap())
        .fold(f64::INFINITY, f64::min);
    assert_eq!(sel.latency_s.unwrap(), best);
    // front members are never dominated by any fitting point
    for f in &res.front {
        for p in pts.iter().filter(|p| p.latency_s.is_some() && p.reason != Some(Infeasible::Resources)) {
            let (lf, lp) = (f.latency_s.unwrap(), p.latency_s.unwrap());
            assert!(!(lp <= lf && p.accuracy >= f.accuracy && (lp < lf || p.accuracy > f.accuracy)));
        }
    }
}

#[test]
fn impossible_constraint_yields_no_design() {
    let mut space = small_space();
    space.n_abfly = vec![0];
    let (res, _) = run_dse(&space, &varied_table(), &constraints(0.001)).unwrap();
    assert!(res.selected.is_none());
    assert!(matches!(select(&res.front, 0.001), Err(bfly_core::Error::NoFeasibleDesign)));
}

#[test]
fn unbuildable_hardware_is_marked() {
    let (_, pts) = run_dse(&small_space(), &varied_table(), &constraints(0.05)).unwrap();
    for p in &pts {
        let attn_missing = p.grid.n_abfly > 0 && (p.grid.p_qk == 0 || p.grid.p_sv == 0);
        let bad = p.grid.p_be == 0 || attn_missing || (p.grid.p_qk == 0) != (p.grid.p_sv == 0);
        assert_eq!(p.reason == Some(Infeasible::Hardware), bad, "{}", p.key);
    }
}
