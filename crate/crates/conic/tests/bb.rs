//! Branch-and-bound tests, including a brute-force leaf-enumeration oracle
//! on random mixed-binary conic instances.

use conic::{
    push_unit_box, solve, solve_micp, BbOptions, BbStatus, Cone, ConicProgram, LinExpr,
    MixedBinaryConicProgram, ProgramBuilder, SolveStatus,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * (1.0 + a.abs().max(b.abs()))
}

fn two_item_selection() -> MixedBinaryConicProgram {
    // max 3 xi1 + 2 xi2 s.t. xi1 + xi2 <= 1, xi binary
    let mut b = ProgramBuilder::maximize();
    let x1 = b.add_var("xi1", 3.0);
    let x2 = b.add_var("xi2", 2.0);
    b.leq(LinExpr::var(x1) + LinExpr::var(x2), LinExpr::constant(1.0));
    push_unit_box(&mut b, &[x1, x2]);
    MixedBinaryConicProgram { base: b.build(), binary_indices: vec![0, 1], bilinear_links: None }
}

#[test]
fn knapsack_pair() {
    let res = solve_micp(&two_item_selection(), &BbOptions::default()).unwrap();
    assert_eq!(res.status, BbStatus::Optimal);
    assert!(rel_close(res.best_value, 3.0, 1e-6));
    assert!((res.incumbent[0] - 1.0).abs() < 1e-6);
    assert!(res.incumbent[1].abs() < 1e-6);
    assert!(res.best_value <= res.bound + 1e-8);
}

#[test]
fn cutoff_returns_early_when_incumbent_exceeds() {
    let res = solve_micp(
        &two_item_selection(),
        &BbOptions { cutoff: Some(0.5), ..Default::default() },
    )
    .unwrap();
    assert_eq!(res.status, BbStatus::CutoffReached);
    assert!(res.best_value > 0.5);
}

#[test]
fn cutoff_proves_bound_below_sigma() {
    let res = solve_micp(
        &two_item_selection(),
        &BbOptions { cutoff: Some(10.0), ..Default::default() },
    )
    .unwrap();
    // Root relaxation already proves the bound is under the cutoff.
    assert_eq!(res.status, BbStatus::CutoffReached);
    assert!(res.bound <= 10.0);
}

#[test]
fn infeasible_micp_propagates() {
    // max xi s.t. xi >= 2, xi in [0, 1]
    let mut b = ProgramBuilder::maximize();
    let x = b.add_var("xi", 1.0);
    b.geq(LinExpr::var(x), LinExpr::constant(2.0));
    push_unit_box(&mut b, &[x]);
    let p = MixedBinaryConicProgram { base: b.build(), binary_indices: vec![0], bilinear_links: None };
    assert!(solve_micp(&p, &BbOptions::default()).is_err());
}

/// Random mixed-binary conic program: maximize a linear function of
/// (xi, y) subject to coupling rows, a second-order cone on y, and unit
/// boxes on xi. Bounded by construction.
fn random_instance(rng: &mut ChaCha8Rng, m_bin: usize) -> MixedBinaryConicProgram {
    let n_cont = 3;
    let mut b = ProgramBuilder::maximize();
    let bins: Vec<_> =
        (0..m_bin).map(|i| b.add_var(format!("xi{i}"), rng.gen_range(-1.0..2.0))).collect();
    let ys: Vec<_> =
        (0..n_cont).map(|i| b.add_var(format!("y{i}"), rng.gen_range(0.0..1.0))).collect();
    // Couple: sum_j a_j xi_j + y_i <= r_i ; keeps y bounded given the SOC.
    for &y in &ys {
        let mut e = LinExpr::var(y);
        for &x in &bins {
            e.add_term(x, rng.gen_range(-1.0..1.0));
        }
        b.leq(e, LinExpr::constant(rng.gen_range(1.0..3.0)));
    }
    // ||(y1, y2)|| <= y0 and y0 <= 2.
    b.soc(vec![LinExpr::var(ys[0]), LinExpr::var(ys[1]), LinExpr::var(ys[2])]);
    b.leq(LinExpr::var(ys[0]), LinExpr::constant(2.0));
    push_unit_box(&mut b, &bins);
    MixedBinaryConicProgram {
        base: b.build(),
        binary_indices: (0..m_bin).collect(),
        bilinear_links: None,
    }
}

/// Oracle: enumerate all binary assignments and solve the continuous
/// restriction of each leaf.
fn enumerate_leaves(p: &MixedBinaryConicProgram) -> f64 {
    let m = p.binary_indices.len();
    let mut best = f64::NEG_INFINITY;
    for mask in 0u32..(1 << m) {
        let mut leaf: ConicProgram = p.base.clone();
        let row0 = leaf.matrix.nrows;
        for (i, &j) in p.binary_indices.iter().enumerate() {
            leaf.matrix.push(row0 + i, j, 1.0);
            leaf.rhs.push(if mask >> i & 1 == 1 { 1.0 } else { 0.0 });
        }
        leaf.matrix.nrows += m;
        leaf.cones.push(Cone::zero(m));
        let res = solve(&leaf).unwrap();
        if res.status == SolveStatus::Optimal {
            best = best.max(res.objective);
        }
    }
    best
}

#[test]
fn matches_leaf_enumeration_on_random_instances() {
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    for trial in 0..8 {
        let p = random_instance(&mut rng, 5);
        let oracle = enumerate_leaves(&p);
        let res = solve_micp(&p, &BbOptions::default()).unwrap();
        assert_eq!(res.status, BbStatus::Optimal, "trial {trial}");
        assert!(
            rel_close(res.best_value, oracle, 1e-5),
            "trial {trial}: bb {} vs oracle {}",
            res.best_value,
            oracle
        );
        // Relaxation dominance: the proved bound is at least the value.
        assert!(res.bound >= res.best_value - 1e-8);
    }
}

#[test]
fn determinism_identical_runs() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let p = random_instance(&mut rng, 5);
    let a = solve_micp(&p, &BbOptions::default()).unwrap();
    let b = solve_micp(&p, &BbOptions::default()).unwrap();
    assert_eq!(a.best_value, b.best_value);
    assert_eq!(a.incumbent, b.incumbent);
    assert_eq!(a.nodes, b.nodes);
}

#[test]
fn fixed_assignment_equals_restriction_solve() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let p = random_instance(&mut rng, 3);
    // Fix all binaries to the incumbent pattern and re-solve continuously.
    let res = solve_micp(&p, &BbOptions::default()).unwrap();
    let mut leaf = p.base.clone();
    let row0 = leaf.matrix.nrows;
    for (i, &j) in p.binary_indices.iter().enumerate() {
        leaf.matrix.push(row0 + i, j, 1.0);
        leaf.rhs.push(res.incumbent[j]);
    }
    leaf.matrix.nrows += p.binary_indices.len();
    leaf.cones.push(Cone::zero(p.binary_indices.len()));
    let fixed = solve(&leaf).unwrap();
    assert_eq!(fixed.status, SolveStatus::Optimal);
    assert!(rel_close(fixed.objective, res.best_value, 1e-5));
}
