use crate::cone::{Cone, ConeKind};
use crate::program::{ConicProgram, Sense};
use clarabel::algebra::CscMatrix;
use clarabel::solver::{
    DefaultSettingsBuilder, DefaultSolver, IPSolver, SolverStatus, SupportedConeT,
};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Termination status of a continuous conic solve.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SolveStatus {
    Optimal,
    Infeasible,
    Unbounded,
    NumericalLimit,
}

/// Outcome of a continuous conic solve. For `Optimal`, the primal satisfies
/// the feasibility residual within `feas_tol` and the primal/dual objective
/// gap is within `gap_tol * (1 + |objective|)`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SolveResult {
    pub status: SolveStatus,
    pub objective: f64,
    pub primal: Vec<f64>,
    /// One multiplier per cone row, in row order, for the minimization form.
    pub dual: Vec<f64>,
    pub solve_time: f64,
}

impl SolveResult {
    /// Optimal objective, or an error carrying the actual status.
    pub fn optimal_value(&self) -> Result<f64, BackendError> {
        match self.status {
            SolveStatus::Optimal => Ok(self.objective),
            s => Err(BackendError::NotOptimal(s)),
        }
    }
}

/// Solver tolerances. Defaults follow standard interior-point accuracy.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct SolveOptions {
    pub feas_tol: f64,
    pub gap_tol: f64,
    pub max_iter: u32,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions { feas_tol: 1e-7, gap_tol: 1e-7, max_iter: 200 }
    }
}

#[derive(Debug, Error)]
pub enum BackendError {
    #[error("program failed validation: {0:?}")]
    Invalid(Vec<crate::program::ValidationIssue>),
    #[error("backend does not support PSD cones")]
    PsdUnsupported,
    #[error("solve finished with status {0:?} where Optimal was required")]
    NotOptimal(SolveStatus),
    #[error("backend rejected program: {0}")]
    Rejected(String),
}

/// Contract for continuous conic solvers. Any interior-point solver
/// satisfying the `SolveResult` invariant can be plugged in. `solve` calls
/// are independent and may run in parallel.
pub trait ConicBackend: Sync {
    fn solve(&self, program: &ConicProgram, options: &SolveOptions)
        -> Result<SolveResult, BackendError>;

    /// Whether PSD cone blocks are accepted.
    fn supports_psd(&self) -> bool {
        false
    }
}

/// Reference backend on top of the Clarabel interior-point solver.
/// Supports Zero, NonnegativeOrthant, SecondOrder, and PositiveSemidefinite.
#[derive(Debug, Default, Clone, Copy)]
pub struct ClarabelBackend;

impl ClarabelBackend {
    fn cones_of(program: &ConicProgram) -> Vec<SupportedConeT<f64>> {
        program
            .cones
            .iter()
            .map(|c| match c.kind {
                ConeKind::Zero => SupportedConeT::ZeroConeT(c.dim),
                ConeKind::NonnegativeOrthant => SupportedConeT::NonnegativeConeT(c.dim),
                ConeKind::SecondOrder => SupportedConeT::SecondOrderConeT(c.dim),
                ConeKind::PositiveSemidefinite => SupportedConeT::PSDTriangleConeT(c.dim),
            })
            .collect()
    }
}

impl ConicBackend for ClarabelBackend {
    fn solve(
        &self,
        program: &ConicProgram,
        options: &SolveOptions,
    ) -> Result<SolveResult, BackendError> {
        let issues = program.validate();
        if !issues.is_empty() {
            return Err(BackendError::Invalid(issues));
        }
        let n = program.var_count;
        let p = CscMatrix::<f64>::zeros((n, n));
        let q: Vec<f64> = match program.sense {
            Sense::Minimize => program.objective.clone(),
            Sense::Maximize => program.objective.iter().map(|c| -c).collect(),
        };
        let a = program.matrix.to_csc();
        let cones = Self::cones_of(program);
        let settings = DefaultSettingsBuilder::default()
            .verbose(false)
            .tol_feas(options.feas_tol)
            .tol_gap_abs(options.gap_tol)
            .tol_gap_rel(options.gap_tol)
            .max_iter(options.max_iter)
            .build()
            .map_err(|e| BackendError::Rejected(format!("{e:?}")))?;
        let mut solver = DefaultSolver::new(&p, &q, &a, &program.rhs, &cones, settings)
            .map_err(|e| BackendError::Rejected(format!("{e:?}")))?;
        solver.solve();
        let sol = &solver.solution;
        let status = match sol.status {
            SolverStatus::Solved => SolveStatus::Optimal,
            SolverStatus::PrimalInfeasible | SolverStatus::AlmostPrimalInfeasible => {
                SolveStatus::Infeasible
            }
            SolverStatus::DualInfeasible | SolverStatus::AlmostDualInfeasible => {
                SolveStatus::Unbounded
            }
            _ => SolveStatus::NumericalLimit,
        };
        let sign = match program.sense {
            Sense::Minimize => 1.0,
            Sense::Maximize => -1.0,
        };
        let objective = if status == SolveStatus::Optimal {
            sign * sol.obj_val + program.offset
        } else {
            f64::NAN
        };
        Ok(SolveResult {
            status,
            objective,
            primal: sol.x.clone(),
            dual: sol.z.clone(),
            solve_time: sol.solve_time,
        })
    }

    fn supports_psd(&self) -> bool {
        true
    }
}

/// Solve with the reference backend and default tolerances.
pub fn solve(program: &ConicProgram) -> Result<SolveResult, BackendError> {
    ClarabelBackend.solve(program, &SolveOptions::default())
}

/// Solve with the reference backend and explicit tolerances.
pub fn solve_with(program: &ConicProgram, options: &SolveOptions) -> Result<SolveResult, BackendError> {
    ClarabelBackend.solve(program, options)
}

/// Slack cone-membership check of a claimed-optimal point, used by tests.
pub fn check_primal_feasibility(program: &ConicProgram, primal: &[f64], tol: f64) -> bool {
    program.feasibility_residual(primal) <= tol
}

#[allow(unused)]
fn _cone_smoke(c: Cone) -> usize {
    c.slack_dim()
}
