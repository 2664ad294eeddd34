//! Security-constrained optimal power flow on the second-order cone
//! relaxation of the voltage products. Stage one dispatches generation in the
//! base case; stage two redispatches through droop control after line
//! outages, with failed lines carrying no flow and their flow-definition
//! rows decoupled through gated slacks. Balance violations are penalized in
//! both stages.
//!
//! Admittances are precomputed per line: instances carry `G_ij`, `B_ij`
//! (series conductance and susceptance) directly, and the self terms
//! `g_ii`, `b_ii` are the sums over incident lines; no shunts. Bus voltage
//! products use one variable per unordered line pair, with
//! `c_ij = c_ji` and `s_ji = -s_ij` substituted at build time.
//!
//! Desk-scale instances are authored for property tests, not matched to any
//! published dispatch.

use crate::error::DroError;
use crate::two_stage::{
    ConicSet, IndicatorRow, IndicatorSpec, SecondStage, Support, TwoStageProblem,
    INSTANCE_SCHEMA_VERSION,
};
use conic::{Cone, LinExpr, ProgramBuilder, SparseMatrix, VarId};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Bus {
    pub p_load: f64,
    pub q_load: f64,
    pub v_min: f64,
    pub v_max: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Generator {
    pub bus: usize,
    pub cost: f64,
    pub p_min: f64,
    pub p_max: f64,
    pub q_min: f64,
    pub q_max: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Line {
    pub from: usize,
    pub to: usize,
    /// Series conductance of the line.
    pub g: f64,
    /// Series susceptance of the line (negative for inductive lines).
    pub b: f64,
    pub rating: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OpfInstance {
    pub buses: Vec<Bus>,
    pub generators: Vec<Generator>,
    pub lines: Vec<Line>,
    /// Balance-violation penalty multiplier: g_i = phi * max generation cost.
    pub phi: f64,
}

impl OpfInstance {
    pub fn violation_penalty(&self) -> f64 {
        self.phi * self.generators.iter().map(|g| g.cost).fold(0.0, f64::max)
    }

    /// Droop participation factors, proportional to capacity and normalized
    /// to sum to one.
    pub fn participation(&self) -> Vec<f64> {
        let total: f64 = self.generators.iter().map(|g| g.p_max).sum();
        self.generators.iter().map(|g| g.p_max / total).collect()
    }

    pub fn three_bus() -> Self {
        let line = |from, to| {
            let (r, x) = (0.02, 0.08);
            let denom = r * r + x * x;
            Line { from, to, g: r / denom, b: -x / denom, rating: 2.5 }
        };
        OpfInstance {
            buses: vec![
                Bus { p_load: 0.0, q_load: 0.0, v_min: 0.95, v_max: 1.05 },
                Bus { p_load: 0.6, q_load: 0.2, v_min: 0.95, v_max: 1.05 },
                Bus { p_load: 0.9, q_load: 0.3, v_min: 0.95, v_max: 1.05 },
            ],
            generators: vec![
                Generator { bus: 0, cost: 10.0, p_min: 0.0, p_max: 2.0, q_min: -1.0, q_max: 1.0 },
                Generator { bus: 1, cost: 15.0, p_min: 0.0, p_max: 1.5, q_min: -1.0, q_max: 1.0 },
            ],
            lines: vec![line(0, 1), line(0, 2), line(1, 2)],
            phi: 100.0,
        }
    }

    pub fn five_bus() -> Self {
        let line = |from, to, x: f64| {
            let r = x / 4.0;
            let denom = r * r + x * x;
            Line { from, to, g: r / denom, b: -x / denom, rating: 3.0 }
        };
        OpfInstance {
            buses: vec![
                Bus { p_load: 0.0, q_load: 0.0, v_min: 0.95, v_max: 1.05 },
                Bus { p_load: 0.7, q_load: 0.25, v_min: 0.95, v_max: 1.05 },
                Bus { p_load: 0.0, q_load: 0.0, v_min: 0.95, v_max: 1.05 },
                Bus { p_load: 0.8, q_load: 0.3, v_min: 0.95, v_max: 1.05 },
                Bus { p_load: 0.4, q_load: 0.1, v_min: 0.95, v_max: 1.05 },
            ],
            generators: vec![
                Generator { bus: 0, cost: 8.0, p_min: 0.0, p_max: 1.5, q_min: -1.0, q_max: 1.0 },
                Generator { bus: 2, cost: 12.0, p_min: 0.0, p_max: 1.2, q_min: -1.0, q_max: 1.0 },
                Generator { bus: 4, cost: 20.0, p_min: 0.0, p_max: 1.0, q_min: -0.8, q_max: 0.8 },
            ],
            lines: vec![
                line(0, 1, 0.06),
                line(1, 2, 0.08),
                line(2, 3, 0.06),
                line(3, 4, 0.08),
                line(4, 0, 0.06),
                line(0, 2, 0.1),
            ],
            phi: 100.0,
        }
    }

    fn validate(&self) -> Result<(), DroError> {
        for (i, l) in self.lines.iter().enumerate() {
            if l.from >= self.buses.len() || l.to >= self.buses.len() || l.from == l.to {
                return Err(DroError::Invalid(format!("line {i} has bad endpoints")));
            }
        }
        for (k, g) in self.generators.iter().enumerate() {
            if g.bus >= self.buses.len() || g.p_min > g.p_max || g.q_min > g.q_max {
                return Err(DroError::Invalid(format!("generator {k} malformed")));
            }
        }
        for (i, b) in self.buses.iter().enumerate() {
            if b.v_min <= 0.0 || b.v_min > b.v_max {
                return Err(DroError::Invalid(format!("bus {i} voltage bounds inverted")));
            }
        }
        Ok(())
    }

    fn self_terms(&self) -> (Vec<f64>, Vec<f64>) {
        let n = self.buses.len();
        let mut gii = vec![0.0; n];
        let mut bii = vec![0.0; n];
        for l in &self.lines {
            gii[l.from] += l.g;
            gii[l.to] += l.g;
            bii[l.from] += l.b;
            bii[l.to] += l.b;
        }
        (gii, bii)
    }
}

/// First-stage variable layout.
struct StageOneVars {
    pg: Vec<VarId>,
    qg: Vec<VarId>,
    /// Flows per line and direction: (p_fwd, p_rev, q_fwd, q_rev).
    flows: Vec<[VarId; 4]>,
    cii: Vec<VarId>,
    cij: Vec<VarId>,
    sij: Vec<VarId>,
    sig: Vec<[VarId; 4]>,
}

fn neighbors(inst: &OpfInstance, bus: usize) -> Vec<(usize, bool)> {
    inst.lines
        .iter()
        .enumerate()
        .filter_map(|(l, line)| {
            if line.from == bus {
                Some((l, true))
            } else if line.to == bus {
                Some((l, false))
            } else {
                None
            }
        })
        .collect()
}

/// Build a first-stage feasible-set description by constructing the rows in
/// a scratch builder and stealing its matrix.
fn first_stage_set(inst: &OpfInstance) -> (ConicSet, Vec<f64>, StageOneVars) {
    let (gii, bii) = inst.self_terms();
    let nb = inst.buses.len();
    let nl = inst.lines.len();
    let mut b = ProgramBuilder::minimize();
    let pg: Vec<_> = (0..inst.generators.len()).map(|k| b.add_var(format!("pg{k}"), 0.0)).collect();
    let qg: Vec<_> = (0..inst.generators.len()).map(|k| b.add_var(format!("qg{k}"), 0.0)).collect();
    let flows: Vec<[VarId; 4]> = (0..nl)
        .map(|l| {
            [
                b.add_var(format!("pF{l}f"), 0.0),
                b.add_var(format!("pF{l}r"), 0.0),
                b.add_var(format!("qF{l}f"), 0.0),
                b.add_var(format!("qF{l}r"), 0.0),
            ]
        })
        .collect();
    let cii: Vec<_> = (0..nb).map(|i| b.add_var(format!("cii{i}"), 0.0)).collect();
    let cij: Vec<_> = (0..nl).map(|l| b.add_var(format!("cij{l}"), 0.0)).collect();
    let sij: Vec<_> = (0..nl).map(|l| b.add_var(format!("sij{l}"), 0.0)).collect();
    let sig: Vec<[VarId; 4]> = (0..nb)
        .map(|i| {
            [
                b.add_var(format!("sPp{i}"), 0.0),
                b.add_var(format!("sPm{i}"), 0.0),
                b.add_var(format!("sQp{i}"), 0.0),
                b.add_var(format!("sQm{i}"), 0.0),
            ]
        })
        .collect();

    // Bounds.
    for (k, gen) in inst.generators.iter().enumerate() {
        b.geq(LinExpr::var(pg[k]), LinExpr::constant(gen.p_min));
        b.leq(LinExpr::var(pg[k]), LinExpr::constant(gen.p_max));
        b.geq(LinExpr::var(qg[k]), LinExpr::constant(gen.q_min));
        b.leq(LinExpr::var(qg[k]), LinExpr::constant(gen.q_max));
    }
    for (i, bus) in inst.buses.iter().enumerate() {
        b.geq(LinExpr::var(cii[i]), LinExpr::constant(bus.v_min * bus.v_min));
        b.leq(LinExpr::var(cii[i]), LinExpr::constant(bus.v_max * bus.v_max));
        for s in sig[i] {
            b.nonneg(LinExpr::var(s));
        }
    }
    // Power balance at every bus, both components, as equality rows.
    for i in 0..nb {
        let mut pbal = LinExpr::constant(-inst.buses[i].p_load);
        let mut qbal = LinExpr::constant(-inst.buses[i].q_load);
        for (k, gen) in inst.generators.iter().enumerate() {
            if gen.bus == i {
                pbal.add_term(pg[k], 1.0);
                qbal.add_term(qg[k], 1.0);
            }
        }
        pbal.add_term(sig[i][0], 1.0);
        pbal.add_term(sig[i][1], -1.0);
        qbal.add_term(sig[i][2], 1.0);
        qbal.add_term(sig[i][3], -1.0);
        pbal.add_term(cii[i], -gii[i]);
        qbal.add_term(cii[i], bii[i]);
        for (l, fwd) in neighbors(inst, i) {
            pbal.add_term(flows[l][if fwd { 0 } else { 1 }], -1.0);
            qbal.add_term(flows[l][if fwd { 2 } else { 3 }], -1.0);
        }
        b.eq(pbal, LinExpr::constant(0.0));
        b.eq(qbal, LinExpr::constant(0.0));
    }
    // Flow definitions per direction:
    //   forward:  pF = -G c_ii + G c_ij + B s_ij ; qF = B c_ii - B c_ij + G s_ij
    //   reverse:  same with c_jj and s_ji = -s_ij.
    for (l, line) in inst.lines.iter().enumerate() {
        let (g, bb) = (line.g, line.b);
        let fwd_p = LinExpr::term(cii[line.from], -g)
            + LinExpr::term(cij[l], g)
            + LinExpr::term(sij[l], bb);
        b.eq(LinExpr::var(flows[l][0]), fwd_p);
        let rev_p = LinExpr::term(cii[line.to], -g)
            + LinExpr::term(cij[l], g)
            + LinExpr::term(sij[l], -bb);
        b.eq(LinExpr::var(flows[l][1]), rev_p);
        let fwd_q = LinExpr::term(cii[line.from], bb)
            + LinExpr::term(cij[l], -bb)
            + LinExpr::term(sij[l], g);
        b.eq(LinExpr::var(flows[l][2]), fwd_q);
        let rev_q = LinExpr::term(cii[line.to], bb)
            + LinExpr::term(cij[l], -bb)
            + LinExpr::term(sij[l], -g);
        b.eq(LinExpr::var(flows[l][3]), rev_q);
        // Voltage-product cone: ((cii+cjj)/2, cij, sij, (cii-cjj)/2) in SOC.
        b.soc(vec![
            LinExpr::term(cii[line.from], 0.5) + LinExpr::term(cii[line.to], 0.5),
            LinExpr::var(cij[l]),
            LinExpr::var(sij[l]),
            LinExpr::term(cii[line.from], 0.5) + LinExpr::term(cii[line.to], -0.5),
        ]);
        // Thermal ratings per direction.
        b.soc(vec![
            LinExpr::constant(line.rating),
            LinExpr::var(flows[l][0]),
            LinExpr::var(flows[l][2]),
        ]);
        b.soc(vec![
            LinExpr::constant(line.rating),
            LinExpr::var(flows[l][1]),
            LinExpr::var(flows[l][3]),
        ]);
    }

    let program = b.build();
    let n1 = program.var_count;
    let set = ConicSet {
        dim: n1,
        matrix: program.matrix.clone(),
        rhs: program.rhs.clone(),
        cones: program.cones.clone(),
    };
    let mut cost = vec![0.0; n1];
    let penalty = inst.violation_penalty();
    for (k, gen) in inst.generators.iter().enumerate() {
        cost[pg[k].0] = gen.cost;
    }
    for i in 0..nb {
        for s in sig[i] {
            cost[s.0] = penalty;
        }
    }
    (set, cost, StageOneVars { pg, qg, flows, cii, cij, sij, sig })
}

pub fn build_opf(inst: &OpfInstance) -> Result<TwoStageProblem, DroError> {
    inst.validate()?;
    let (first_stage, cost, x_vars) = first_stage_set(inst);
    let (gii, bii) = inst.self_terms();
    let nb = inst.buses.len();
    let nl = inst.lines.len();
    let ng = inst.generators.len();
    let delta_k = inst.participation();
    let penalty = inst.violation_penalty();
    let n1 = first_stage.dim;

    // Second-stage variables, all shifted or split to live in an orthant /
    // SOC product. Scratch builder trick again: y-cone blocks are emitted as
    // the row structure is built, then the pieces are converted to the
    // W0 / T0 / H data layout.
    //
    // Layout (orthant unless noted):
    //   delta+ / delta-                       2
    //   qg_u per gen (shift from q_min)       ng
    //   flow splits per line: pf+/pf-/pr+/pr-/qf+/qf-/qr+/qr-   8 nl
    //   cii_u per bus (shift from v_min^2)    nb
    //   cij_u, sij_u per line (shift from -vmax^2)  2 nl
    //   sigma p+/p-/q+/q- per bus             4 nb
    //   sigmaF pf/qf/pr/qr +/- per line       8 nl
    //   soc voltage block per line            4 nl   (SOC_4 factors)
    //   soc rating blocks per line dir        6 nl   (SOC_3 factors)
    let mut cone_y: Vec<Cone> = Vec::new();
    let mut at = 0usize;
    fn take(at: &mut usize, n: usize, cone: Cone, cone_y: &mut Vec<Cone>) -> usize {
        let r = *at;
        *at += n;
        cone_y.push(cone);
        r
    }
    let dl = take(&mut at, 2, Cone::nonneg(2), &mut cone_y);
    let qg_u = take(&mut at, ng, Cone::nonneg(ng), &mut cone_y);
    let fl = take(&mut at, 8 * nl, Cone::nonneg(8 * nl), &mut cone_y);
    let cii_u = take(&mut at, nb, Cone::nonneg(nb), &mut cone_y);
    let cs_u = take(&mut at, 2 * nl, Cone::nonneg(2 * nl), &mut cone_y);
    let sg = take(&mut at, 4 * nb, Cone::nonneg(4 * nb), &mut cone_y);
    let sf = take(&mut at, 8 * nl, Cone::nonneg(8 * nl), &mut cone_y);
    let mut socv = Vec::new();
    for _ in 0..nl {
        socv.push(take(&mut at, 4, Cone::soc(4), &mut cone_y));
    }
    let mut socr = Vec::new();
    for _ in 0..(2 * nl) {
        socr.push(take(&mut at, 3, Cone::soc(3), &mut cone_y));
    }
    let n2 = at;

    let vmax2: Vec<f64> = inst.buses.iter().map(|b| b.v_max * b.v_max).collect();
    let vmin2: Vec<f64> = inst.buses.iter().map(|b| b.v_min * b.v_min).collect();
    let cap: f64 = vmax2.iter().cloned().fold(0.0, f64::max);

    // Affine views of the shifted/split quantities as (terms over y, const,
    // terms over x).
    let delta = move |sign: f64| vec![(dl, sign), (dl + 1, -sign)];
    let flow_idx = |l: usize, which: usize| fl + 8 * l + which; // 0 pf+,1 pf-,2 pr+,3 pr-,4 qf+,5 qf-,6 qr+,7 qr-

    let mut q0 = vec![0.0; n2];
    for i in 0..nb {
        for s in 0..4 {
            q0[sg + 4 * i + s] = penalty;
        }
    }

    let mut w0 = SparseMatrix::new(0, n2);
    let t0 = SparseMatrix::new(0, nl);
    let mut h0: Vec<f64> = Vec::new();
    let mut hmat = SparseMatrix::new(0, n1);
    let mut row = 0usize;

    // Helpers to append one >= row: w-terms, x-terms, constant so that
    // w' y >= x-part + const.
    let mut push_geq =
        |w: Vec<(usize, f64)>, hx: Vec<(usize, f64)>, c: f64,
         w0: &mut SparseMatrix, hmat: &mut SparseMatrix, h0: &mut Vec<f64>| {
            for (j, v) in w {
                w0.push(row, j, v);
            }
            for (j, v) in hx {
                hmat.push(row, j, v);
            }
            h0.push(c);
            row += 1;
        };
    let push_eq = |w: Vec<(usize, f64)>,
                   hx: Vec<(usize, f64)>,
                   c: f64,
                   w0: &mut SparseMatrix,
                   hmat: &mut SparseMatrix,
                   h0: &mut Vec<f64>,
                   push: &mut dyn FnMut(
        Vec<(usize, f64)>,
        Vec<(usize, f64)>,
        f64,
        &mut SparseMatrix,
        &mut SparseMatrix,
        &mut Vec<f64>,
    )| {
        push(w.clone(), hx.clone(), c, w0, hmat, h0);
        let wn = w.into_iter().map(|(j, v)| (j, -v)).collect();
        let hn = hx.into_iter().map(|(j, v)| (j, -v)).collect();
        push(wn, hn, -c, w0, hmat, h0);
    };

    // Droop boxes: p_min <= pg_k + Delta_k delta <= p_max.
    for (k, gen) in inst.generators.iter().enumerate() {
        let mut w: Vec<(usize, f64)> = delta(delta_k[k]);
        let hx = vec![(x_vars.pg[k].0, -1.0)];
        push_geq(w.clone(), hx.clone(), gen.p_min, &mut w0, &mut hmat, &mut h0);
        w = delta(-delta_k[k]);
        let hx = vec![(x_vars.pg[k].0, 1.0)];
        push_geq(w, hx, -gen.p_max, &mut w0, &mut hmat, &mut h0);
        // qg_u <= span
        push_geq(
            vec![(qg_u + k, -1.0)],
            Vec::new(),
            -(gen.q_max - gen.q_min),
            &mut w0,
            &mut hmat,
            &mut h0,
        );
    }
    // Shift boxes for cii_u, cij_u, sij_u.
    for i in 0..nb {
        push_geq(
            vec![(cii_u + i, -1.0)],
            Vec::new(),
            -(vmax2[i] - vmin2[i]),
            &mut w0,
            &mut hmat,
            &mut h0,
        );
    }
    for l in 0..(2 * nl) {
        push_geq(vec![(cs_u + l, -1.0)], Vec::new(), -2.0 * cap, &mut w0, &mut hmat, &mut h0);
    }

    // Power balance with droop and slacks; c~ii = vmin2 + cii_u,
    // c~ij = -cap + cij_u, s~ij = -cap + sij_u.
    for i in 0..nb {
        // p: sum pg_k + Delta_k delta - load + sp+ - sp- - gii c~ii - sum pF = 0
        let mut w: Vec<(usize, f64)> = Vec::new();
        let mut hx: Vec<(usize, f64)> = Vec::new();
        let mut c = inst.buses[i].p_load; // move load to rhs constant
        for (k, gen) in inst.generators.iter().enumerate() {
            if gen.bus == i {
                w.extend(delta(delta_k[k]));
                hx.push((x_vars.pg[k].0, -1.0));
            }
        }
        w.push((sg + 4 * i, 1.0));
        w.push((sg + 4 * i + 1, -1.0));
        w.push((cii_u + i, -gii[i]));
        c += gii[i] * vmin2[i];
        for (l, fwd) in neighbors(inst, i) {
            let base = if fwd { 0 } else { 2 };
            w.push((flow_idx(l, base), -1.0));
            w.push((flow_idx(l, base + 1), 1.0));
        }
        push_eq(w, hx, c, &mut w0, &mut hmat, &mut h0, &mut push_geq);
        // q: sum qg - load + sq+ - sq- + bii c~ii - sum qF = 0
        let mut w: Vec<(usize, f64)> = Vec::new();
        let mut hx: Vec<(usize, f64)> = Vec::new();
        let mut c = inst.buses[i].q_load;
        for (k, gen) in inst.generators.iter().enumerate() {
            if gen.bus == i {
                w.push((qg_u + k, 1.0));
                c -= gen.q_min;
            }
        }
        w.push((sg + 4 * i + 2, 1.0));
        w.push((sg + 4 * i + 3, -1.0));
        w.push((cii_u + i, bii[i]));
        c -= bii[i] * vmin2[i];
        for (l, fwd) in neighbors(inst, i) {
            let base = if fwd { 4 } else { 6 };
            w.push((flow_idx(l, base), -1.0));
            w.push((flow_idx(l, base + 1), 1.0));
        }
        push_eq(w, hx, c, &mut w0, &mut hmat, &mut h0, &mut push_geq);
    }

    // Flow definitions with gated slacks, per line and direction.
    for (l, line) in inst.lines.iter().enumerate() {
        let (g, bb) = (line.g, line.b);
        let (i, j) = (line.from, line.to);
        // split view of each directed flow: (plus, minus)
        let dirs = [
            (0usize, i, 1.0, 0usize), // pf: -g cii_i + g cij + b sij + sigF0
            (2, j, -1.0, 2),          // pr: -g cii_j + g cij - b sij + sigF2
            (4, i, 1.0, 4),           // qf: b cii_i - b cij + g sij + sigF4
            (6, j, -1.0, 6),          // qr: b cii_j - b cij - g sij + sigF6
        ];
        for (which, bus, ssign, sigoff) in dirs {
            let is_p = which < 4;
            // flow (split) minus rhs terms = 0
            let mut w: Vec<(usize, f64)> = Vec::new();
            w.push((flow_idx(l, which), 1.0));
            w.push((flow_idx(l, which + 1), -1.0));
            let mut c = 0.0;
            if is_p {
                w.push((cii_u + bus, g));
                c -= g * vmin2[bus];
                w.push((cs_u + 2 * l, -g));
                c += g * (-cap);
                w.push((cs_u + 2 * l + 1, -bb * ssign));
                c += bb * ssign * (-cap);
            } else {
                w.push((cii_u + bus, -bb));
                c += bb * vmin2[bus];
                w.push((cs_u + 2 * l, bb));
                c -= bb * (-cap);
                w.push((cs_u + 2 * l + 1, -g * ssign));
                c += g * ssign * (-cap);
            }
            // gated slack
            w.push((sf + 8 * l + sigoff, -1.0));
            w.push((sf + 8 * l + sigoff + 1, 1.0));
            push_eq(w, Vec::new(), c, &mut w0, &mut hmat, &mut h0, &mut push_geq);
        }
        // Voltage SOC link rows: w0..w3 tied to the shifted variables.
        let sv = socv[l];
        let half = 0.5;
        let mut link = |wv: Vec<(usize, f64)>, c: f64,
                        w0m: &mut SparseMatrix, hm: &mut SparseMatrix, h0v: &mut Vec<f64>| {
            push_eq(wv, Vec::new(), c, w0m, hm, h0v, &mut push_geq);
        };
        // w0 = (c~ii + c~jj)/2
        link(
            vec![(sv, 1.0), (cii_u + i, -half), (cii_u + j, -half)],
            half * (vmin2[i] + vmin2[j]),
            &mut w0,
            &mut hmat,
            &mut h0,
        );
        // w1 = c~ij
        link(vec![(sv + 1, 1.0), (cs_u + 2 * l, -1.0)], -cap, &mut w0, &mut hmat, &mut h0);
        // w2 = s~ij
        link(vec![(sv + 2, 1.0), (cs_u + 2 * l + 1, -1.0)], -cap, &mut w0, &mut hmat, &mut h0);
        // w3 = (c~ii - c~jj)/2
        link(
            vec![(sv + 3, 1.0), (cii_u + i, -half), (cii_u + j, half)],
            half * (vmin2[i] - vmin2[j]),
            &mut w0,
            &mut hmat,
            &mut h0,
        );
        // Rating blocks: (rating, pF, qF) per direction.
        for dir in 0..2 {
            let sr = socr[2 * l + dir];
            link(vec![(sr, 1.0)], line.rating, &mut w0, &mut hmat, &mut h0);
            let pw = if dir == 0 { 0 } else { 2 };
            let qw = if dir == 0 { 4 } else { 6 };
            link(
                vec![(sr + 1, 1.0), (flow_idx(l, pw), -1.0), (flow_idx(l, pw + 1), 1.0)],
                0.0,
                &mut w0,
                &mut hmat,
                &mut h0,
            );
            link(
                vec![(sr + 2, 1.0), (flow_idx(l, qw), -1.0), (flow_idx(l, qw + 1), 1.0)],
                0.0,
                &mut w0,
                &mut hmat,
                &mut h0,
            );
        }
    }
    w0.nrows = row;
    hmat.nrows = row;
    let mut t0 = t0;
    t0.nrows = row;

    // Indicator families: a failed line carries no flow; an intact line
    // allows no flow-definition slack.
    let mut rows_ind = Vec::new();
    for l in 0..nl {
        let coeffs: Vec<(usize, f64)> = (0..8).map(|w| (flow_idx(l, w), 1.0)).collect();
        rows_ind.push(IndicatorRow { f0: 0.0, coeffs, gate: l, negated: false });
        let coeffs: Vec<(usize, f64)> = (0..8).map(|w| (sf + 8 * l + w, 1.0)).collect();
        rows_ind.push(IndicatorRow { f0: 0.0, coeffs, gate: l, negated: true });
    }

    Ok(TwoStageProblem {
        version: INSTANCE_SCHEMA_VERSION,
        n1,
        first_stage,
        cost,
        cost_offset: 0.0,
        m: nl,
        second_stage: SecondStage {
            n2,
            q0,
            qmat: SparseMatrix::new(n2, nl),
            w0,
            wj: Vec::new(),
            t0,
            h0,
            hmat,
            cone_y,
        },
        support: Support::full_cube(nl),
        indicator_spec: Some(IndicatorSpec { rows: rows_ind }),
    })
}
