//! Dense two-phase primal simplex for small linear programs
//!
//! ```text
//! minimize c.x  subject to  A_eq x = b_eq,  A_le x <= b_le,  x >= 0.
//! ```
//!
//! Rows and columns are equilibrated before phase 1. Entering variables use
//! Dantzig's rule until the objective stalls for `2 * (rows + cols)` pivots,
//! after which Bland's rule takes over for the rest of the solve. Ties go to
//! the lowest index. The final basis is re-solved against the unscaled data
//! to produce the reported primal point and duals.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{Error, Result};

pub const FEAS_TOL: f64 = 1e-9;
pub const OPT_TOL: f64 = 1e-9;
pub const PIVOT_TOL: f64 = 1e-11;

#[derive(Debug, Clone, Default, PartialEq)]
pub struct LinearProgram {
    pub objective: Vec<f64>,
    pub a_eq: Vec<Vec<f64>>,
    pub b_eq: Vec<f64>,
    pub a_le: Vec<Vec<f64>>,
    pub b_le: Vec<f64>,
}

impl LinearProgram {
    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }

    fn check(&self) -> Result<()> {
        let n = self.num_vars();
        let shape_ok = self.a_eq.len() == self.b_eq.len()
            && self.a_le.len() == self.b_le.len()
            && self.a_eq.iter().chain(&self.a_le).all(|r| r.len() == n);
        if !shape_ok {
            return Err(Error::DimensionMismatch("inconsistent LP dimensions".into()));
        }
        let finite = self
            .objective
            .iter()
            .chain(self.a_eq.iter().flatten())
            .chain(self.a_le.iter().flatten())
            .chain(&self.b_eq)
            .chain(&self.b_le)
            .all(|v| v.is_finite());
        if !finite {
            return Err(Error::DimensionMismatch("non-finite LP coefficient".into()));
        }
        Ok(())
    }

    /// Largest violation of `x >= 0`, the equality rows and the inequality rows.
    pub fn primal_violation(&self, x: &[f64]) -> f64 {
        let dot = |row: &Vec<f64>| row.iter().zip(x).map(|(a, b)| a * b).sum::<f64>();
        let bounds = x.iter().map(|&v| (-v).max(0.0));
        let eq = self.a_eq.iter().zip(&self.b_eq).map(|(r, b)| (dot(r) - b).abs());
        let le = self.a_le.iter().zip(&self.b_le).map(|(r, b)| (dot(r) - b).max(0.0));
        bounds.chain(eq).chain(le).fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct LpDiagnostics {
    pub iterations: usize,
    /// Phase-1 optimum (sum of artificials in scaled units); positive when infeasible.
    pub phase1_infeasibility: f64,
    pub bland_engaged: bool,
    /// Equality rows found linearly dependent and dropped after phase 1.
    pub redundant_rows: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LpOutcome {
    pub status: LpStatus,
    pub solution: Vec<f64>,
    pub value: f64,
    /// Multipliers of the equality rows.
    pub duals_eq: Vec<f64>,
    /// Multipliers of the inequality rows (non-positive at an optimum).
    pub duals_le: Vec<f64>,
    pub diagnostics: LpDiagnostics,
}

impl LpOutcome {
    fn without_solution(status: LpStatus, diagnostics: LpDiagnostics) -> Self {
        LpOutcome {
            status,
            solution: Vec::new(),
            value: f64::NAN,
            duals_eq: Vec::new(),
            duals_le: Vec::new(),
            diagnostics,
        }
    }

    pub fn is_optimal(&self) -> bool {
        self.status == LpStatus::Optimal
    }
}

/// Residuals of an optimal outcome recomputed from the raw program.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OptimalityCertificate {
    pub primal_violation: f64,
    /// Most negative reduced cost `c - A^T y` (clamped at zero).
    pub dual_violation: f64,
    /// Largest positive inequality multiplier.
    pub dual_sign_violation: f64,
    pub complementarity: f64,
    pub duality_gap: f64,
}

pub fn certify(lp: &LinearProgram, out: &LpOutcome) -> OptimalityCertificate {
    let x = &out.solution;
    let n = lp.num_vars();
    let mut reduced = lp.objective.clone();
    for (row, y) in lp.a_eq.iter().zip(&out.duals_eq).chain(lp.a_le.iter().zip(&out.duals_le)) {
        for j in 0..n {
            reduced[j] -= row[j] * y;
        }
    }
    let dual_violation = reduced.iter().map(|&r| (-r).max(0.0)).fold(0.0, f64::max);
    let dual_sign_violation = out.duals_le.iter().map(|&y| y.max(0.0)).fold(0.0, f64::max);
    let mut complementarity = x
        .iter()
        .zip(&reduced)
        .map(|(a, r)| (a * r).abs())
        .fold(0.0, f64::max);
    for (row, (b, y)) in lp.a_le.iter().zip(lp.b_le.iter().zip(&out.duals_le)) {
        let slack = b - row.iter().zip(x).map(|(a, v)| a * v).sum::<f64>();
        complementarity = complementarity.max((slack * y).abs());
    }
    let dual_value: f64 = lp.b_eq.iter().zip(&out.duals_eq).map(|(b, y)| b * y).sum::<f64>()
        + lp.b_le.iter().zip(&out.duals_le).map(|(b, y)| b * y).sum::<f64>();
    OptimalityCertificate {
        primal_violation: lp.primal_violation(x),
        dual_violation,
        dual_sign_violation,
        complementarity,
        duality_gap: (out.value - dual_value).abs(),
    }
}

struct Tableau {
    rows: Vec<Vec<f64>>,
    rhs: Vec<f64>,
    basis: Vec<usize>,
    /// Original rows still in the program; only used as a set.
    origin: Vec<usize>,
    reduced: Vec<f64>,
    value: f64,
    iterations: usize,
    bland: bool,
}

enum RunEnd {
    Optimal,
    Unbounded,
}

impl Tableau {
    fn pivot(&mut self, r: usize, e: usize) {
        let p = self.rows[r][e];
        for v in &mut self.rows[r] {
            *v /= p;
        }
        self.rhs[r] /= p;
        let pivot_row = self.rows[r].clone();
        let pivot_rhs = self.rhs[r];
        for i in 0..self.rows.len() {
            if i == r {
                continue;
            }
            let f = self.rows[i][e];
            if f != 0.0 {
                for (v, pv) in self.rows[i].iter_mut().zip(&pivot_row) {
                    *v -= f * pv;
                }
                self.rhs[i] -= f * pivot_rhs;
                if self.rhs[i] < 0.0 && self.rhs[i] > -FEAS_TOL {
                    self.rhs[i] = 0.0;
                }
            }
        }
        let f = self.reduced[e];
        if f != 0.0 {
            for (v, pv) in self.reduced.iter_mut().zip(&pivot_row) {
                *v -= f * pv;
            }
            self.value += f * pivot_rhs;
        }
        self.rows[r][e] = 1.0;
        self.reduced[e] = 0.0;
        self.basis[r] = e;
    }

    fn price(&mut self, cost: &[f64]) {
        self.reduced = cost.to_vec();
        self.value = 0.0;
        for (i, &b) in self.basis.iter().enumerate() {
            let cb = cost[b];
            if cb != 0.0 {
                for (d, t) in self.reduced.iter_mut().zip(&self.rows[i]) {
                    *d -= cb * t;
                }
                self.value += cb * self.rhs[i];
            }
        }
        for &b in &self.basis {
            self.reduced[b] = 0.0;
        }
    }

    fn run(&mut self, cost: &[f64], allowed: usize, stall_limit: usize, max_iters: usize) -> Result<RunEnd> {
        self.price(cost);
        let mut stall = 0;
        loop {
            let entering = if self.bland {
                (0..allowed).find(|&j| self.reduced[j] < -OPT_TOL)
            } else {
                let mut best: Option<usize> = None;
                for j in 0..allowed {
                    if self.reduced[j] < -OPT_TOL && best.is_none_or(|b| self.reduced[j] < self.reduced[b]) {
                        best = Some(j);
                    }
                }
                best
            };
            let Some(e) = entering else {
                return Ok(RunEnd::Optimal);
            };

            let mut leave: Option<(usize, f64)> = None;
            let mut tiny = false;
            for i in 0..self.rows.len() {
                let a = self.rows[i][e];
                if a > PIVOT_TOL {
                    let ratio = self.rhs[i] / a;
                    leave = match leave {
                        None => Some((i, ratio)),
                        Some((r, best)) => {
                            if ratio < best - 1e-12
                                || ((ratio - best).abs() <= 1e-12 && self.basis[i] < self.basis[r])
                            {
                                Some((i, ratio))
                            } else {
                                Some((r, best))
                            }
                        }
                    };
                } else if a > 0.0 {
                    tiny = true;
                }
            }
            let Some((r, _)) = leave else {
                if tiny {
                    return Err(Error::NumericalBreakdown {
                        iterations: self.iterations,
                        reason: format!("entering column {e} has only pivots below {PIVOT_TOL:e}"),
                    });
                }
                return Ok(RunEnd::Unbounded);
            };

            let before = self.value;
            self.pivot(r, e);
            self.iterations += 1;
            if self.value < before - 1e-12 {
                stall = 0;
            } else {
                stall += 1;
                if stall >= stall_limit {
                    self.bland = true;
                }
            }
            if self.iterations > max_iters {
                return Err(Error::NumericalBreakdown {
                    iterations: self.iterations,
                    reason: "iteration limit reached".into(),
                });
            }
        }
    }
}

pub fn solve_lp(lp: &LinearProgram) -> Result<LpOutcome> {
    lp.check()?;
    let n = lp.num_vars();
    let m_eq = lp.a_eq.len();
    let m_le = lp.a_le.len();
    let m = m_eq + m_le;
    let ns = n + m_le;

    // Standard form with slacks, then equilibrate.
    let mut mat = vec![vec![0.0; ns]; m];
    let mut rhs = vec![0.0; m];
    for (i, (row, b)) in lp.a_eq.iter().zip(&lp.b_eq).enumerate() {
        mat[i][..n].copy_from_slice(row);
        rhs[i] = *b;
    }
    for (k, (row, b)) in lp.a_le.iter().zip(&lp.b_le).enumerate() {
        mat[m_eq + k][..n].copy_from_slice(row);
        mat[m_eq + k][n + k] = 1.0;
        rhs[m_eq + k] = *b;
    }
    for (row, b) in mat.iter_mut().zip(rhs.iter_mut()) {
        let scale = row.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
        if scale > 0.0 {
            for v in row.iter_mut() {
                *v /= scale;
            }
            *b /= scale;
        }
    }
    let mut col_scale = vec![1.0; ns];
    for (j, s) in col_scale.iter_mut().enumerate() {
        let mx = mat.iter().fold(0.0f64, |acc, r| acc.max(r[j].abs()));
        if mx > 0.0 {
            *s = 1.0 / mx;
            for r in mat.iter_mut() {
                r[j] *= *s;
            }
        }
    }
    for (row, b) in mat.iter_mut().zip(rhs.iter_mut()) {
        if *b < 0.0 {
            for v in row.iter_mut() {
                *v = -*v;
            }
            *b = -*b;
        }
    }

    // Slack columns that are +1 unit columns start basic; other rows get an artificial.
    let mut basis = vec![usize::MAX; m];
    for k in 0..m_le {
        if mat[m_eq + k][n + k] > 0.0 {
            basis[m_eq + k] = n + k;
        }
    }
    let art_rows: Vec<usize> = (0..m).filter(|&i| basis[i] == usize::MAX).collect();
    let total = ns + art_rows.len();
    let mut rows = Vec::with_capacity(m);
    for (i, r) in mat.into_iter().enumerate() {
        let mut full = r;
        full.resize(total, 0.0);
        if let Some(pos) = art_rows.iter().position(|&a| a == i) {
            full[ns + pos] = 1.0;
            basis[i] = ns + pos;
        } else {
            // Normalize a scaled slack column to exactly one.
            let s = full[basis[i]];
            for v in full.iter_mut() {
                *v /= s;
            }
            rhs[i] /= s;
        }
        rows.push(full);
    }

    let stall_limit = 2 * (m + ns);
    let max_iters = 50 * (m + total) + 1000;
    let mut tab = Tableau {
        rows,
        rhs,
        basis,
        origin: (0..m).collect(),
        reduced: vec![0.0; total],
        value: 0.0,
        iterations: 0,
        bland: false,
    };

    let mut phase1_cost = vec![0.0; total];
    for c in phase1_cost.iter_mut().skip(ns) {
        *c = 1.0;
    }
    if !art_rows.is_empty() {
        // Phase 1 is bounded below by zero, so it cannot report Unbounded.
        tab.run(&phase1_cost, total, stall_limit, max_iters)?;
    }
    let infeasibility: f64 = tab
        .basis
        .iter()
        .zip(&tab.rhs)
        .filter(|(b, _)| **b >= ns)
        .map(|(_, v)| *v)
        .sum();
    let mut diagnostics = LpDiagnostics {
        iterations: tab.iterations,
        phase1_infeasibility: infeasibility.max(0.0),
        bland_engaged: tab.bland,
        redundant_rows: Vec::new(),
    };
    if infeasibility > FEAS_TOL {
        return Ok(LpOutcome::without_solution(LpStatus::Infeasible, diagnostics));
    }

    // Drive remaining artificials out of the basis; rows with no usable
    // column are linearly dependent and dropped.
    let mut i = 0;
    while i < tab.rows.len() {
        if tab.basis[i] < ns {
            i += 1;
            continue;
        }
        let mut best: Option<usize> = None;
        for j in 0..ns {
            let a = tab.rows[i][j].abs();
            if a > PIVOT_TOL && best.is_none_or(|b| a > tab.rows[i][b].abs()) {
                best = Some(j);
            }
        }
        match best {
            Some(j) => {
                tab.pivot(i, j);
                i += 1;
            }
            None => {
                // The row whose artificial is still basic here is the dependent one.
                let dropped = art_rows[tab.basis[i] - ns];
                diagnostics.redundant_rows.push(dropped);
                tab.rows.remove(i);
                tab.rhs.remove(i);
                tab.basis.remove(i);
                let pos = tab.origin.iter().position(|&o| o == dropped).expect("row not yet dropped");
                tab.origin.remove(pos);
            }
        }
    }
    diagnostics.redundant_rows.sort_unstable();

    let mut phase2_cost = vec![0.0; total];
    for j in 0..n {
        phase2_cost[j] = lp.objective[j] * col_scale[j];
    }
    let end = tab.run(&phase2_cost, ns, stall_limit, max_iters)?;
    diagnostics.iterations = tab.iterations;
    diagnostics.bland_engaged = tab.bland;
    if let RunEnd::Unbounded = end {
        return Ok(LpOutcome::without_solution(LpStatus::Unbounded, diagnostics));
    }

    let mut scaled_x = vec![0.0; ns];
    for (b, v) in tab.basis.iter().zip(&tab.rhs) {
        scaled_x[*b] = v * col_scale[*b];
    }
    refine(lp, &tab.basis, &tab.origin, scaled_x, diagnostics)
}

/// Re-solves the final basis against the unscaled program for the primal
/// point and the duals.
fn refine(
    lp: &LinearProgram,
    basis: &[usize],
    origin: &[usize],
    fallback_x: Vec<f64>,
    diagnostics: LpDiagnostics,
) -> Result<LpOutcome> {
    let n = lp.num_vars();
    let m_eq = lp.a_eq.len();
    let m_le = lp.a_le.len();
    let k = basis.len();
    let entry = |row: usize, col: usize| -> f64 {
        if row < m_eq {
            if col < n {
                lp.a_eq[row][col]
            } else {
                0.0
            }
        } else if col < n {
            lp.a_le[row - m_eq][col]
        } else if col - n == row - m_eq {
            1.0
        } else {
            0.0
        }
    };
    let rhs_of = |row: usize| if row < m_eq { lp.b_eq[row] } else { lp.b_le[row - m_eq] };
    let cost_of = |col: usize| if col < n { lp.objective[col] } else { 0.0 };

    let bmat = DMatrix::from_fn(k, k, |r, c| entry(origin[r], basis[c]));
    let b = DVector::from_fn(k, |r, _| rhs_of(origin[r]));
    let cb = DVector::from_fn(k, |c, _| cost_of(basis[c]));
    let lu = bmat.clone().lu();
    let xb = lu.solve(&b);
    let y = bmat.transpose().lu().solve(&cb);
    let (Some(xb), Some(y)) = (xb, y) else {
        return Err(Error::NumericalBreakdown {
            iterations: diagnostics.iterations,
            reason: "final basis is singular".into(),
        });
    };

    let mut full = vec![0.0; n + m_le];
    for (c, &col) in basis.iter().enumerate() {
        full[col] = xb[c];
    }
    if full.iter().any(|v| !v.is_finite() || *v < -FEAS_TOL) {
        full = fallback_x;
    }
    for v in &mut full {
        if *v < 0.0 {
            *v = 0.0;
        }
    }
    let solution = full[..n].to_vec();
    let mut duals_eq = vec![0.0; m_eq];
    let mut duals_le = vec![0.0; m_le];
    for (r, &row) in origin.iter().enumerate() {
        if row < m_eq {
            duals_eq[row] = y[r];
        } else {
            duals_le[row - m_eq] = y[r];
        }
    }
    let value = lp.objective.iter().zip(&solution).map(|(c, x)| c * x).sum();
    Ok(LpOutcome {
        status: LpStatus::Optimal,
        solution,
        value,
        duals_eq,
        duals_le,
        diagnostics,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn vertex_of_a_segment() {
        let lp = LinearProgram {
            objective: vec![1.0, 0.0],
            a_eq: vec![vec![1.0, 1.0]],
            b_eq: vec![1.0],
            ..Default::default()
        };
        let out = solve_lp(&lp).unwrap();
        assert_eq!(out.status, LpStatus::Optimal);
        assert_eq!(out.value, 0.0);
        assert_eq!(out.solution, vec![0.0, 1.0]);
    }

    #[test]
    fn contradictory_rows_are_infeasible() {
        let lp = LinearProgram {
            objective: vec![0.0],
            a_eq: vec![vec![1.0]],
            b_eq: vec![1.0],
            a_le: vec![vec![1.0]],
            b_le: vec![0.5],
        };
        let out = solve_lp(&lp).unwrap();
        assert_eq!(out.status, LpStatus::Infeasible);
        assert!(out.diagnostics.phase1_infeasibility > FEAS_TOL);
    }

    #[test]
    fn simplex_minimum_takes_lowest_index() {
        let lp = LinearProgram {
            objective: vec![3.0, 1.0, 2.0, 1.0],
            a_eq: vec![vec![1.0; 4]],
            b_eq: vec![1.0],
            ..Default::default()
        };
        let out = solve_lp(&lp).unwrap();
        assert_eq!(out.value, 1.0);
        assert_eq!(out.solution, vec![0.0, 1.0, 0.0, 0.0]);
    }

    #[test]
    fn unbounded_direction() {
        let lp = LinearProgram {
            objective: vec![-1.0, 0.0],
            a_le: vec![vec![-1.0, 1.0]],
            b_le: vec![1.0],
            ..Default::default()
        };
        assert_eq!(solve_lp(&lp).unwrap().status, LpStatus::Unbounded);
    }

    #[test]
    fn redundant_rows_are_dropped_and_duals_certify() {
        // Two-state balance rows (sum to zero) plus normalization.
        let lp = LinearProgram {
            objective: vec![1.0, 3.0, 2.0, 0.5],
            a_eq: vec![
                vec![0.5, 0.8, -0.4, -0.1],
                vec![-0.5, -0.8, 0.4, 0.1],
                vec![1.0, 1.0, 1.0, 1.0],
            ],
            b_eq: vec![0.0, 0.0, 1.0],
            a_le: vec![vec![0.0, 0.0, 1.0, 1.0]],
            b_le: vec![0.6],
        };
        let out = solve_lp(&lp).unwrap();
        assert!(out.is_optimal());
        assert_eq!(out.diagnostics.redundant_rows.len(), 1);
        let cert = certify(&lp, &out);
        assert!(cert.primal_violation < 1e-12, "{cert:?}");
        assert!(cert.dual_violation < 1e-12 && cert.dual_sign_violation < 1e-12, "{cert:?}");
        assert!(cert.duality_gap < 1e-12 && cert.complementarity < 1e-12, "{cert:?}");
    }

    #[test]
    fn negative_rhs_and_ge_via_le() {
        // minimize x + y subject to x + y >= 2 (as -x - y <= -2), x <= 3.
        let lp = LinearProgram {
            objective: vec![1.0, 2.0],
            a_le: vec![vec![-1.0, -1.0], vec![1.0, 0.0]],
            b_le: vec![-2.0, 3.0],
            ..Default::default()
        };
        let out = solve_lp(&lp).unwrap();
        assert!((out.value - 2.0).abs() < 1e-12);
        assert_eq!(out.solution, vec![2.0, 0.0]);
        assert!((out.duals_le[0] + 1.0).abs() < 1e-12);
    }

    #[test]
    fn deterministic_outcomes() {
        let lp = LinearProgram {
            objective: vec![0.3, -0.2, 0.1],
            a_eq: vec![vec![1.0, 1.0, 1.0]],
            b_eq: vec![1.0],
            a_le: vec![vec![0.0, 1.0, 0.0]],
            b_le: vec![0.4],
        };
        assert_eq!(solve_lp(&lp).unwrap(), solve_lp(&lp).unwrap());
    }

    #[test]
    fn overdetermined_consistent_equalities() {
        // Nine consistent equality rows in three unknowns; six must be dropped and the
        // kept rows must still form a nonsingular basis.
        let a_eq = vec![
            vec![-0.6310010000220805, -0.7201148642980253, -0.4332635512780012],
            vec![0.3076528649161645, 0.02323667344540592, -0.5765674772388532],
            vec![0.7712219147091925, -0.6388521904838944, 0.796143426075886],
            vec![0.9941092259160054, 0.7286299540174879, -0.8049841135132687],
            vec![-0.16807908744556466, 0.6372311252741785, 0.1460039192409779],
            vec![0.5877517606279619, 0.1669414621193499, -0.28950795554696684],
            vec![0.286539784386854, -0.8588248036052533, 0.8070180732925141],
            vec![0.015024855057962583, 0.5589020256094885, 0.6750283603079494],
            vec![0.7526975420056843, 0.08193102832467547, 0.5644147283267169],
        ];
        let b_eq = vec![
            -1.6494060601948544, -0.5683959762329759, 1.3718808632529518, 0.1518033078858747,
            0.5059575813503852, 0.18234310608578663, 0.8330286304199472, 1.3776997420815829,
            1.5084663920527581,
        ];
        let lp = LinearProgram {
            objective: vec![2.099106519292169, -2.0653610318556144, 0.16690866023790552],
            a_eq,
            b_eq,
            a_le: vec![
                vec![-0.5552096323741744, -0.13957262582823304, 0.8149080186756419],
                vec![-0.4730960806826756, -0.4285796242564244, -0.26457507606909747],
                vec![-0.39356658081967577, -0.1516359301193262, 0.6165006369743304],
                vec![-0.6724561929295012, -0.11286293055451102, 0.20580236879943614],
                vec![0.8111166509199137, -0.15446025476907144, 0.07641408347911449],
                vec![-0.1308052162281781, -0.04477276070936309, -0.7320305027108458],
                vec![0.10841433776819542, 0.6951531163711797, 0.39250896401491264],
                vec![0.25858750237799955, 0.7974075537527554, 0.671949424456006],
                vec![-0.9661907584894442, 0.26546789465904785, -0.1630185843967369],
            ],
            b_le: vec![
                0.6301521023679706, -0.1039319425462395, 0.4675318879570146, 0.26442154393703043,
                0.8303701210964849, -0.43187938373749135, 1.136162502948444, 2.0422489065016536,
                -0.8649097158463,
            ],
        };
        let out = solve_lp(&lp).unwrap();
        assert_eq!(out.status, LpStatus::Optimal);
        assert_eq!(out.diagnostics.redundant_rows.len(), 6);
        let cert = certify(&lp, &out);
        assert!(cert.primal_violation < 1e-9, "{cert:?}");
        assert!(cert.duality_gap < 1e-9, "{cert:?}");
    }
}
