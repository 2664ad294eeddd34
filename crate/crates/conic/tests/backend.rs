//! Backend contract tests: bound-tight LPs, norm cones, infeasibility
//! certificates, duality round trips, and cone membership of returned slacks.

use conic::{
    dualize, solve, Cone, ConicProgram, LinExpr, ProgramBuilder, Sense, SolveStatus,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * (1.0 + a.abs().max(b.abs()))
}

#[test]
fn bound_tight_lp() {
    // min x s.t. x >= 1
    let mut b = ProgramBuilder::minimize();
    let x = b.add_var("x", 1.0);
    b.geq(LinExpr::var(x), LinExpr::constant(1.0));
    let res = solve(&b.build()).unwrap();
    assert_eq!(res.status, SolveStatus::Optimal);
    assert!(rel_close(res.objective, 1.0, 1e-7), "{}", res.objective);
    assert!((res.primal[0] - 1.0).abs() < 1e-6);
}

#[test]
fn euclidean_norm_of_3_4() {
    // min t s.t. ||(3, 4)||_2 <= t
    let mut b = ProgramBuilder::minimize();
    let t = b.add_var("t", 1.0);
    b.soc(vec![LinExpr::var(t), LinExpr::constant(3.0), LinExpr::constant(4.0)]);
    let res = solve(&b.build()).unwrap();
    assert_eq!(res.status, SolveStatus::Optimal);
    assert!(rel_close(res.objective, 5.0, 1e-6), "{}", res.objective);
}

#[test]
fn contradictory_bounds_infeasible() {
    // min 0 s.t. x >= 1, -x >= 0
    let mut b = ProgramBuilder::minimize();
    let x = b.add_var("x", 0.0);
    b.geq(LinExpr::var(x), LinExpr::constant(1.0));
    b.geq(-LinExpr::var(x), LinExpr::constant(0.0));
    let res = solve(&b.build()).unwrap();
    assert_eq!(res.status, SolveStatus::Infeasible);
}

#[test]
fn unbounded_detected() {
    let mut b = ProgramBuilder::minimize();
    let x = b.add_var("x", -1.0);
    b.nonneg(LinExpr::var(x));
    let res = solve(&b.build()).unwrap();
    assert_eq!(res.status, SolveStatus::Unbounded);
}

#[test]
fn lp_dual_matches_primal() {
    // min x s.t. x >= 1; dual is max lambda : lambda = 1, lambda >= 0.
    let mut b = ProgramBuilder::minimize();
    let x = b.add_var("x", 1.0);
    b.geq(LinExpr::var(x), LinExpr::constant(1.0));
    let p = b.build();
    let d = dualize(&p);
    assert_eq!(d.sense, Sense::Maximize);
    let rp = solve(&p).unwrap();
    let rd = solve(&d).unwrap();
    assert!(rel_close(rp.objective, rd.objective, 1e-6), "{} vs {}", rp.objective, rd.objective);
    assert!(rel_close(rd.objective, 1.0, 1e-6));
}

#[test]
fn soc_dual_matches_primal() {
    // min t + y s.t. ||(y - 1, 2)|| <= t, y >= 0
    let mut b = ProgramBuilder::minimize();
    let t = b.add_var("t", 1.0);
    let y = b.add_var("y", 1.0);
    b.soc(vec![
        LinExpr::var(t),
        LinExpr::var(y) - 1.0,
        LinExpr::constant(2.0),
    ]);
    b.nonneg(LinExpr::var(y));
    let p = b.build();
    let rp = solve(&p).unwrap();
    let rd = solve(&dualize(&p)).unwrap();
    assert_eq!(rp.status, SolveStatus::Optimal);
    assert!(rel_close(rp.objective, rd.objective, 1e-6), "{} vs {}", rp.objective, rd.objective);
}

fn random_feasible_lp(rng: &mut ChaCha8Rng, n: usize, m: usize) -> ConicProgram {
    // min c'v s.t. A v <= A v0 + margin, 0 <= v <= 3: bounded and strictly
    // feasible at v0 by construction.
    let mut b = ProgramBuilder::minimize();
    let vars: Vec<_> = (0..n).map(|i| b.add_var(format!("v{i}"), rng.gen_range(-1.0..1.0))).collect();
    let v0: Vec<f64> = (0..n).map(|_| rng.gen_range(0.5..1.5)).collect();
    for _ in 0..m {
        let coeffs: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let lhs_at_v0: f64 = coeffs.iter().zip(&v0).map(|(c, v)| c * v).sum();
        let mut e = LinExpr::default();
        for (j, &c) in coeffs.iter().enumerate() {
            e.add_term(vars[j], c);
        }
        b.leq(e, LinExpr::constant(lhs_at_v0 + rng.gen_range(0.2..1.0)));
    }
    for &v in &vars {
        b.nonneg(LinExpr::var(v));
        b.leq(LinExpr::var(v), LinExpr::constant(3.0));
    }
    b.build()
}

#[test]
fn double_dual_preserves_value_on_random_lps() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for trial in 0..100 {
        let p = random_feasible_lp(&mut rng, 5, 5);
        let rp = solve(&p).unwrap();
        if rp.status != SolveStatus::Optimal {
            continue;
        }
        let dd = dualize(&dualize(&p));
        let rdd = solve(&dd).unwrap();
        assert_eq!(rdd.status, SolveStatus::Optimal, "trial {trial}");
        assert!(
            rel_close(rp.objective, rdd.objective, 1e-5),
            "trial {trial}: {} vs {}",
            rp.objective,
            rdd.objective
        );
    }
}

#[test]
fn weak_duality_and_slack_membership_on_random_lps() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..20 {
        let p = random_feasible_lp(&mut rng, 4, 6);
        let rp = solve(&p).unwrap();
        if rp.status != SolveStatus::Optimal {
            continue;
        }
        // Returned slack lies in the cone product.
        assert!(p.feasibility_residual(&rp.primal) <= 1e-6);
        // The dual objective at the returned multipliers never exceeds the
        // primal objective (weak duality): -b'z + c0 <= c'v + c0.
        let dual_obj: f64 =
            p.offset - p.rhs.iter().zip(&rp.dual).map(|(b, z)| b * z).sum::<f64>();
        assert!(dual_obj <= rp.objective + 1e-6 * (1.0 + rp.objective.abs()));
    }
}

#[test]
fn psd_capability_and_small_sdp() {
    use conic::{ClarabelBackend, ConicBackend, SolveOptions};
    assert!(ClarabelBackend.supports_psd());
    // min t s.t. [[t, 1], [1, t]] psd  ->  t = 1.
    let mut b = ProgramBuilder::minimize();
    let t = b.add_var("t", 1.0);
    let s2 = 2.0_f64.sqrt();
    b.psd(
        vec![LinExpr::var(t), LinExpr::constant(s2), LinExpr::var(t)],
        2,
    );
    let res = ClarabelBackend.solve(&b.build(), &SolveOptions::default()).unwrap();
    assert_eq!(res.status, SolveStatus::Optimal);
    assert!(rel_close(res.objective, 1.0, 1e-6), "{}", res.objective);
}

#[test]
fn maximize_sense_reports_max_value() {
    // max x s.t. x <= 2
    let mut b = ProgramBuilder::maximize();
    let x = b.add_var("x", 1.0);
    b.leq(LinExpr::var(x), LinExpr::constant(2.0));
    b.nonneg(LinExpr::var(x));
    let res = solve(&b.build()).unwrap();
    assert!(rel_close(res.objective, 2.0, 1e-6));
}

#[test]
fn golden_json_shape() {
    let mut b = ProgramBuilder::minimize();
    let x = b.add_var("x", 1.5);
    b.geq(LinExpr::var(x), LinExpr::constant(2.0));
    let mut p = b.build();
    p.names = None;
    let json: serde_json::Value = serde_json::from_str(&p.to_json()).unwrap();
    assert_eq!(json["objective"], serde_json::json!([1.5]));
    assert_eq!(json["rhs"], serde_json::json!([-2.0]));
    assert_eq!(json["matrix"]["vals"], serde_json::json!([-1.0]));
    assert_eq!(json["cones"][0]["kind"], "NonnegativeOrthant");
    assert_eq!(json["var_count"], 1);
}

#[test]
fn zero_cone_rows_dualize_to_free_multipliers() {
    // min x + y s.t. x + y = 2, x >= 0, y >= 0 -> value 2.
    let mut b = ProgramBuilder::minimize();
    let x = b.add_var("x", 1.0);
    let y = b.add_var("y", 1.0);
    b.eq(LinExpr::var(x) + LinExpr::var(y), LinExpr::constant(2.0));
    b.nonneg(LinExpr::var(x));
    b.nonneg(LinExpr::var(y));
    let p = b.build();
    let d = dualize(&p);
    // One free multiplier (equality row) plus two orthant ones; the free one
    // contributes no membership row, so the dual has a single 2-dim orthant
    // block after the stationarity equalities.
    assert_eq!(d.var_count, 3);
    assert_eq!(d.cones.len(), 3);
    assert_eq!(d.cones[0], Cone::zero(2));
    let rp = solve(&p).unwrap();
    let rd = solve(&d).unwrap();
    assert!(rel_close(rp.objective, rd.objective, 1e-6));
}
