//! Dense primal-dual interior-point solver for small semidefinite programs.
//!
//! Standard form over Hermitian blocks `X_b ⪰ 0`:
//!
//! ```text
//! minimize   Σ_b ⟨C_b, X_b⟩
//! subject to Σ_b ⟨A_{c,b}, X_b⟩ = rhs_c      for every constraint c
//! ```
//!
//! with `⟨A, X⟩ = Re Tr[A†X]`. The dual is
//! `maximize rhsᵀy  s.t.  Z_b = C_b − Σ_c y_c A_{c,b} ⪰ 0`.
//!
//! Constraint matrices are stored sparse because the programs built by the
//! robustness module have at most four non-zeros per row and block.
//! Infeasibility is reported from dual-objective divergence beyond `1e8`.

mod solver;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{CMatrix, C64};

pub use solver::solve;

/// Largest admissible `Σ side²` over all blocks.
pub const MAX_TOTAL_DIMENSION: usize = 20_000;
/// Hermiticity tolerance for coefficient matrices.
pub const COEFF_HERMITIAN_TOL: f64 = 1e-12;

/// Sparse Hermitian matrix as a complete list of `(row, col, value)` entries.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseHerm {
    side: usize,
    entries: Vec<(usize, usize, C64)>,
}

impl SparseHerm {
    pub fn zero(side: usize) -> Self {
        Self { side, entries: Vec::new() }
    }

    /// Non-zero entries of a dense Hermitian matrix.
    pub fn from_dense(m: &CMatrix) -> Result<Self> {
        if !m.is_square() {
            return Err(Error::invalid("coefficient matrix must be square"));
        }
        if m.hermitian_deviation() > COEFF_HERMITIAN_TOL * m.max_abs().max(1.0) {
            return Err(Error::invalid("coefficient matrix is not Hermitian"));
        }
        let n = m.rows();
        let mut entries = Vec::new();
        for i in 0..n {
            for j in 0..n {
                let v = if i == j { C64::new(m[(i, j)].re, 0.0) } else { (m[(i, j)] + m[(j, i)].conj()) * 0.5 };
                if v.norm_sqr() > 0.0 {
                    entries.push((i, j, v));
                }
            }
        }
        Ok(Self { side: n, entries })
    }

    /// Adds `v|r⟩⟨s| + v̄|s⟩⟨r|` (or `Re v |r⟩⟨r|` on the diagonal).
    pub fn push_sym(&mut self, r: usize, s: usize, v: C64) {
        assert!(r < self.side && s < self.side, "index out of range");
        if r == s {
            self.entries.push((r, r, C64::new(v.re, 0.0)));
        } else {
            self.entries.push((r, s, v));
            self.entries.push((s, r, v.conj()));
        }
    }

    pub fn side(&self) -> usize {
        self.side
    }

    pub fn entries(&self) -> &[(usize, usize, C64)] {
        &self.entries
    }

    pub fn to_dense(&self) -> CMatrix {
        let mut m = CMatrix::zeros(self.side, self.side);
        for &(r, s, v) in &self.entries {
            m[(r, s)] += v;
        }
        m
    }

    /// `⟨A, V⟩ = Re Tr[A V]` for Hermitian `A`.
    pub fn inner(&self, v: &CMatrix) -> f64 {
        self.entries.iter().map(|&(r, s, a)| (a * v[(s, r)]).re).sum()
    }

    pub fn frobenius_sq(&self) -> f64 {
        self.to_dense().data().iter().map(|z| z.norm_sqr()).sum()
    }

    /// Merges duplicate positions and drops exact zeros; entries sorted by position.
    pub(crate) fn canonical(&self) -> Self {
        let mut e = self.entries.clone();
        e.sort_by_key(|&(r, s, _)| (r, s));
        let mut out: Vec<(usize, usize, C64)> = Vec::with_capacity(e.len());
        for (r, s, v) in e {
            match out.last_mut() {
                Some(last) if last.0 == r && last.1 == s => last.2 += v,
                _ => out.push((r, s, v)),
            }
        }
        out.retain(|x| x.2.norm_sqr() > 0.0);
        Self { side: self.side, entries: out }
    }

    pub fn negated(&self) -> Self {
        self.scaled(-1.0)
    }

    pub(crate) fn entries_mut(&mut self) -> &mut Vec<(usize, usize, C64)> {
        &mut self.entries
    }

    fn scaled(&self, k: f64) -> Self {
        Self { side: self.side, entries: self.entries.iter().map(|&(r, s, v)| (r, s, v * k)).collect() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BlockSpec {
    pub label: String,
    pub side: usize,
}

/// One equality `Σ_b ⟨A_b, X_b⟩ = rhs`.
#[derive(Debug, Clone, PartialEq)]
pub struct Constraint {
    pub terms: Vec<(usize, SparseHerm)>,
    pub rhs: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SdpProblem {
    blocks: Vec<BlockSpec>,
    objective: Vec<CMatrix>,
    constraints: Vec<Constraint>,
}

impl SdpProblem {
    /// Problem with the given `(label, side)` blocks, zero objective and no constraints.
    pub fn new<S: Into<String>>(blocks: impl IntoIterator<Item = (S, usize)>) -> Result<Self> {
        let blocks: Vec<BlockSpec> = blocks.into_iter().map(|(l, side)| BlockSpec { label: l.into(), side }).collect();
        if blocks.is_empty() || blocks.iter().any(|b| b.side == 0) {
            return Err(Error::invalid("an SDP needs at least one block of positive side"));
        }
        let total: usize = blocks.iter().map(|b| b.side * b.side).sum();
        if total > MAX_TOTAL_DIMENSION {
            return Err(Error::Capacity(format!("total SDP dimension {total} exceeds {MAX_TOTAL_DIMENSION}")));
        }
        let objective = blocks.iter().map(|b| CMatrix::zeros(b.side, b.side)).collect();
        Ok(Self { blocks, objective, constraints: Vec::new() })
    }

    pub fn blocks(&self) -> &[BlockSpec] {
        &self.blocks
    }

    pub fn block_index(&self, label: &str) -> Option<usize> {
        self.blocks.iter().position(|b| b.label == label)
    }

    pub fn objective(&self) -> &[CMatrix] {
        &self.objective
    }

    pub fn constraints(&self) -> &[Constraint] {
        &self.constraints
    }

    pub fn num_constraints(&self) -> usize {
        self.constraints.len()
    }

    /// `Σ side²` over blocks.
    pub fn total_dimension(&self) -> usize {
        self.blocks.iter().map(|b| b.side * b.side).sum()
    }

    pub fn set_objective(&mut self, block: usize, c: CMatrix) -> Result<()> {
        let side = self.side_of(block)?;
        if c.shape() != (side, side) {
            return Err(Error::invalid(format!("objective for block {block} must be {side}x{side}")));
        }
        if c.hermitian_deviation() > COEFF_HERMITIAN_TOL * c.max_abs().max(1.0) {
            return Err(Error::invalid("objective matrix is not Hermitian"));
        }
        self.objective[block] = c.symmetrized();
        Ok(())
    }

    pub fn add_constraint(&mut self, terms: Vec<(usize, SparseHerm)>, rhs: f64) -> Result<()> {
        if !rhs.is_finite() {
            return Err(Error::invalid("constraint right-hand side must be finite"));
        }
        let mut canon = Vec::with_capacity(terms.len());
        for (b, a) in terms {
            let side = self.side_of(b)?;
            if a.side() != side {
                return Err(Error::invalid(format!("constraint term for block {b} has side {}, expected {side}", a.side())));
            }
            let a = a.canonical();
            let dense = a.to_dense();
            if dense.hermitian_deviation() > COEFF_HERMITIAN_TOL * dense.max_abs().max(1.0) {
                return Err(Error::invalid("constraint matrix is not Hermitian"));
            }
            if !a.entries().is_empty() {
                canon.push((b, a));
            }
        }
        self.constraints.push(Constraint { terms: canon, rhs });
        Ok(())
    }

    pub fn add_dense_constraint(&mut self, terms: Vec<(usize, CMatrix)>, rhs: f64) -> Result<()> {
        let sparse = terms.into_iter().map(|(b, m)| Ok((b, SparseHerm::from_dense(&m)?))).collect::<Result<Vec<_>>>()?;
        self.add_constraint(sparse, rhs)
    }

    fn side_of(&self, block: usize) -> Result<usize> {
        self.blocks.get(block).map(|b| b.side).ok_or_else(|| Error::invalid(format!("no block {block}")))
    }

    /// `Σ_b ⟨A_{c,b}, X_b⟩` for every constraint.
    pub fn constraint_values(&self, x: &[CMatrix]) -> Vec<f64> {
        self.constraints.iter().map(|c| c.terms.iter().map(|(b, a)| a.inner(&x[*b])).sum()).collect()
    }

    pub fn objective_value(&self, x: &[CMatrix]) -> f64 {
        self.objective.iter().zip(x).map(|(c, x)| c.inner(x)).sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SdpStatus {
    Optimal,
    Infeasible,
    MaxIterations,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SdpOptions {
    /// Target for relative gap and residuals.
    pub tol: f64,
    pub max_iter: usize,
    /// Starting point `scale·I` for both `X` and `Z`; defaults to `1 + ‖C‖`.
    pub initial_scale: Option<f64>,
    /// Record one [`IterationRecord`] per iteration.
    pub record_history: bool,
}

impl Default for SdpOptions {
    fn default() -> Self {
        Self { tol: 1e-8, max_iter: 200, initial_scale: None, record_history: false }
    }
}

impl SdpOptions {
    /// Defaults, with the tolerance taken from `QMEM_SDP_TOL` when set.
    pub fn from_env() -> Result<Self> {
        let mut o = Self::default();
        if let Ok(v) = std::env::var("QMEM_SDP_TOL") {
            let tol: f64 = v.trim().parse().map_err(|_| Error::invalid(format!("QMEM_SDP_TOL='{v}' is not a number")))?;
            if !(tol > 0.0 && tol < 1.0) {
                return Err(Error::invalid(format!("QMEM_SDP_TOL={tol} must lie in (0, 1)")));
            }
            o.tol = tol;
        }
        Ok(o)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IterationRecord {
    pub iteration: usize,
    pub primal_objective: f64,
    pub dual_objective: f64,
    /// `⟨X, Z⟩`
    pub complementarity: f64,
    pub primal_residual: f64,
    pub dual_residual: f64,
    pub step_primal: f64,
    pub step_dual: f64,
}

#[derive(Debug, Clone)]
pub struct SdpSolution {
    pub status: SdpStatus,
    pub primal_value: f64,
    pub dual_value: f64,
    pub primal_blocks: Vec<CMatrix>,
    /// `Z_b = C_b − Σ y_c A_{c,b}`
    pub dual_slacks: Vec<CMatrix>,
    /// One multiplier per constraint as supplied (redundant rows get 0).
    pub dual_multipliers: Vec<f64>,
    pub iterations: usize,
    /// Largest `|Σ⟨A,X⟩ − rhs|` over the supplied constraints.
    pub primal_residual: f64,
    pub dual_residual: f64,
    pub message: String,
    pub history: Vec<IterationRecord>,
}

impl SdpSolution {
    pub fn relative_gap(&self) -> f64 {
        (self.primal_value - self.dual_value).abs() / (1.0 + self.primal_value.abs())
    }
}
