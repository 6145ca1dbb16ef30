//! Robustness of a quantum memory against classical (entanglement-breaking)
//! memories: closed-form lower bounds and PPT-relaxed semidefinite programs.
//!
//! With normalized Choi states the robustness program reads
//!
//! ```text
//! minimize Tr M  s.t.  ρ + M ⪰ 0,  M ⪰ 0,  Tr_B M = (Tr M / d_A) I_A
//!                      (ρ + M)^{T_A} ⪰ 0,  M^{T_A} ⪰ 0
//! ```
//!
//! where `ρ = Φ_N`. `M = s·Φ_M` and `ρ + M = (1+s)Φ_{M'}`. The generalized
//! variant drops `M^{T_A} ⪰ 0`; the entanglement variants drop the marginal
//! condition and so treat `Φ_N` as a bipartite state.
//!
//! The program is posed as the dual (LMI) side of [`crate::sdp`]: `M` is
//! expanded in a sparse basis of the marginal-constrained subspace and each
//! cone condition becomes one block. The primal side is then the witness
//! program, and `W = I − X_{M'} − X_{M'pt}^{T_A}` satisfies
//! `Tr[Φ_N W] = 1 + R*` and `0 ≤ Tr[σW] ≤ 1` for every PPT Choi state `σ`.

use serde::Serialize;

use crate::channels::{ChoiState, QuantumChannel};
use crate::error::{Error, Result};
use crate::linalg::{c, herm_eig_unchecked, partial_transpose, re, CMatrix, Subsystem};
use crate::sdp::{self, SdpOptions, SdpProblem, SdpSolution, SdpStatus, SparseHerm};

/// Largest Choi side accepted by the SDP routines.
pub const MAX_SDP_CHOI_SIDE: usize = 16;
/// Slack used before `ceil` so solver noise cannot inflate integer costs.
/// The interior-point residue on a zero optimum is a few 1e-9, so the
/// slack sits well above it.
pub const CEIL_NUDGE: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case", tag = "kind", content = "k")]
pub enum Method {
    Eig,
    Moment(u32),
    SdpPpt,
    SdpPptGeneralized,
    SdpEntanglement,
    SdpEntanglementGeneralized,
    Witness,
}

impl Method {
    pub fn label(&self) -> String {
        match self {
            Method::Eig => "eig".into(),
            Method::Moment(k) => format!("moment({k})"),
            Method::SdpPpt => "sdp_ppt".into(),
            Method::SdpPptGeneralized => "sdp_ppt_generalized".into(),
            Method::SdpEntanglement => "sdp_entanglement".into(),
            Method::SdpEntanglementGeneralized => "sdp_entanglement_generalized".into(),
            Method::Witness => "witness".into(),
        }
    }

    /// Parses the command-line spellings `eig`, `moment` (k = 2),
    /// `moment:K`, `sdp`, `sdp-gen`, `ent` and `ent-gen`.
    pub fn parse(s: &str) -> Result<Self> {
        let s = s.trim();
        Ok(match s {
            "eig" => Method::Eig,
            "moment" => Method::Moment(2),
            "sdp" => Method::SdpPpt,
            "sdp-gen" => Method::SdpPptGeneralized,
            "ent" => Method::SdpEntanglement,
            "ent-gen" => Method::SdpEntanglementGeneralized,
            _ => match s.strip_prefix("moment:") {
                Some(k) => Method::Moment(k.parse().map_err(|_| Error::invalid(format!("bad moment order in '{s}'")))?),
                None => return Err(Error::invalid(format!("unknown robustness method '{s}'"))),
            },
        })
    }

    /// The SDP variant behind an SDP method.
    pub fn variant(self) -> Option<Variant> {
        Some(match self {
            Method::SdpPpt => Variant::Standard,
            Method::SdpPptGeneralized => Variant::Generalized,
            Method::SdpEntanglement => Variant::Entanglement,
            Method::SdpEntanglementGeneralized => Variant::EntanglementGeneralized,
            _ => return None,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    Standard,
    Generalized,
    Entanglement,
    EntanglementGeneralized,
}

impl Variant {
    pub const ALL: [Variant; 4] = [Variant::Standard, Variant::Generalized, Variant::Entanglement, Variant::EntanglementGeneralized];

    pub fn method(self) -> Method {
        match self {
            Variant::Standard => Method::SdpPpt,
            Variant::Generalized => Method::SdpPptGeneralized,
            Variant::Entanglement => Method::SdpEntanglement,
            Variant::EntanglementGeneralized => Method::SdpEntanglementGeneralized,
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        Ok(match s {
            "standard" => Variant::Standard,
            "generalized" => Variant::Generalized,
            "entanglement" => Variant::Entanglement,
            "entanglement_generalized" | "entanglement-generalized" => Variant::EntanglementGeneralized,
            other => return Err(Error::invalid(format!("unknown robustness variant '{other}'"))),
        })
    }

    fn ppt_on_m(self) -> bool {
        matches!(self, Variant::Standard | Variant::Entanglement)
    }

    fn marginal(self) -> bool {
        matches!(self, Variant::Standard | Variant::Generalized)
    }
}

/// `Φ_N = (1+s)Φ_{M'} − sΦ_M`.
#[derive(Debug, Clone)]
pub struct Decomposition {
    pub m: ChoiState,
    pub m_prime: ChoiState,
}

#[derive(Debug, Clone, Serialize)]
pub struct SolverDiagnostics {
    pub status: SdpStatus,
    pub iterations: usize,
    pub primal_value: f64,
    pub dual_value: f64,
    pub primal_residual: f64,
    pub dual_residual: f64,
}

#[derive(Debug, Clone)]
pub struct RobustnessResult {
    pub value: f64,
    pub method: Method,
    pub is_exact: bool,
    pub decomposition: Option<Decomposition>,
    pub witness: Option<CMatrix>,
    pub diagnostics: Option<SolverDiagnostics>,
}

impl RobustnessResult {
    fn bound(value: f64, method: Method, is_exact: bool) -> Self {
        Self { value, method, is_exact, decomposition: None, witness: None, diagnostics: None }
    }
}

/// `max{0, d_A·λ_max(Φ_N) − 1}`; exact for `d_A ≤ 3`, `d_B = 2`.
pub fn eig_lower_bound(n: &QuantumChannel) -> RobustnessResult {
    let lmax = n.choi().max_eigenvalue();
    let value = (n.d_in() as f64 * lmax - 1.0).max(0.0);
    RobustnessResult::bound(value, Method::Eig, n.d_in() <= 3 && n.d_out() == 2)
}

/// `max{0, d_A^{(k−1)/k} (Tr Φ^k)^{1/k} − 1}`.
pub fn moment_lower_bound(n: &QuantumChannel, k: u32) -> Result<RobustnessResult> {
    if k == 0 {
        return Err(Error::invalid("moment order k must be at least 1"));
    }
    let ev: Vec<f64> = n.choi().eigenvalues().into_iter().map(|l| l.max(0.0)).collect();
    let lmax = ev.iter().copied().fold(0.0, f64::max);
    // (Σ λ^k)^{1/k} evaluated as λ_max (Σ (λ/λ_max)^k)^{1/k} to stay finite for large k
    let norm = if lmax > 0.0 { lmax * ev.iter().map(|l| (l / lmax).powf(k as f64)).sum::<f64>().powf(1.0 / k as f64) } else { 0.0 };
    let d = n.d_in() as f64;
    let value = (d.powf((k as f64 - 1.0) / k as f64) * norm - 1.0).max(0.0);
    Ok(RobustnessResult::bound(value, Method::Moment(k), false))
}

/// `max{0, Tr[Φ_N W] − 1}` for a witness normalized so that `Tr[σW] ≤ 1` on
/// every classical memory's Choi state.
pub fn witness_lower_bound(n: &QuantumChannel, w: &CMatrix) -> Result<RobustnessResult> {
    let side = n.d_in() * n.d_out();
    if w.shape() != (side, side) {
        return Err(Error::invalid(format!("witness must be {side}x{side}")));
    }
    let w = w.to_hermitian()?;
    let value = (n.choi().matrix().inner(&w) - 1.0).max(0.0);
    let mut r = RobustnessResult::bound(value, Method::Witness, false);
    r.witness = Some(w);
    Ok(r)
}

/// Sparse basis of `{M Hermitian : Tr_B M ∝ I_A}` (or of all Hermitian
/// matrices when `marginal` is false), flat index `a·d_B + β`.
pub(crate) fn subspace_basis(d_a: usize, d_b: usize, marginal: bool) -> Vec<SparseHerm> {
    let n = d_a * d_b;
    let idx = |a: usize, beta: usize| a * d_b + beta;
    let mut out = Vec::new();
    let one = re(1.0);
    let i = c(0.0, 1.0);
    let single = |p: usize, q: usize, v| {
        let mut s = SparseHerm::zero(n);
        s.push_sym(p, q, v);
        s
    };
    if !marginal {
        for p in 0..n {
            out.push(single(p, p, one));
            for q in p + 1..n {
                out.push(single(p, q, one));
                out.push(single(p, q, i));
            }
        }
        return out;
    }
    for p in 0..n {
        for q in p + 1..n {
            let (a, beta) = (p / d_b, p % d_b);
            let (b, gamma) = (q / d_b, q % d_b);
            if beta != gamma {
                out.push(single(p, q, one));
                out.push(single(p, q, i));
            } else if beta >= 1 {
                // a ≠ b here; pair with the β = 0 entry so the block trace stays zero
                for v in [one, i] {
                    let mut s = SparseHerm::zero(n);
                    s.push_sym(p, q, v);
                    s.push_sym(idx(a, 0), idx(b, 0), -v);
                    out.push(s);
                }
            }
        }
    }
    for a in 0..d_a {
        for beta in 1..d_b {
            let mut s = SparseHerm::zero(n);
            s.push_sym(idx(a, beta), idx(a, beta), one);
            s.push_sym(idx(a, 0), idx(a, 0), -one);
            out.push(s);
        }
    }
    let mut s = SparseHerm::zero(n);
    for a in 0..d_a {
        s.push_sym(idx(a, 0), idx(a, 0), one);
    }
    out.push(s);
    out
}

/// Partial transpose on A of a sparse matrix.
fn sparse_pt(m: &SparseHerm, d_b: usize) -> SparseHerm {
    let mut out = SparseHerm::zero(m.side());
    for &(p, q, v) in m.entries() {
        let (a, beta) = (p / d_b, p % d_b);
        let (b, gamma) = (q / d_b, q % d_b);
        out.entries_mut().push((b * d_b + beta, a * d_b + gamma, v));
    }
    out
}

const BLOCK_M: &str = "M";
const BLOCK_MP: &str = "M'";
const BLOCK_M_PT: &str = "M_pt";
const BLOCK_MP_PT: &str = "M'_pt";

/// The robustness program for `choi`; the solver's dual value is `−R*`.
pub fn robustness_program(choi: &ChoiState, variant: Variant) -> Result<(SdpProblem, Vec<SparseHerm>)> {
    let (d_a, d_b) = choi.dims();
    let n = d_a * d_b;
    if n > MAX_SDP_CHOI_SIDE {
        return Err(Error::Capacity(format!("robustness SDP supports d_A·d_B ≤ {MAX_SDP_CHOI_SIDE}, got {n}")));
    }
    let rho = choi.matrix();
    let rho_pt = partial_transpose(rho, Subsystem::A, (d_a, d_b))?;
    let mut blocks = vec![(BLOCK_M, n), (BLOCK_MP, n)];
    if variant.ppt_on_m() {
        blocks.push((BLOCK_M_PT, n));
    }
    blocks.push((BLOCK_MP_PT, n));
    let mut p = SdpProblem::new(blocks)?;
    let ix = |p: &SdpProblem, l| p.block_index(l).expect("block declared above");
    let (bm, bmp, bmpt) = (ix(&p, BLOCK_M), ix(&p, BLOCK_MP), ix(&p, BLOCK_MP_PT));
    let bmpt_m = p.block_index(BLOCK_M_PT);
    p.set_objective(bmp, rho.clone())?;
    p.set_objective(bmpt, rho_pt.symmetrized())?;
    let basis = subspace_basis(d_a, d_b, variant.marginal());
    for bk in &basis {
        let neg = bk.negated();
        let neg_pt = sparse_pt(&neg, d_b);
        let mut terms = vec![(bm, neg.clone()), (bmp, neg)];
        if let Some(b) = bmpt_m {
            terms.push((b, neg_pt.clone()));
        }
        terms.push((bmpt, neg_pt));
        let trace: f64 = bk.entries().iter().filter(|e| e.0 == e.1).map(|e| e.2.re).sum();
        p.add_constraint(terms, -trace)?;
    }
    Ok((p, basis))
}

/// PPT-relaxed robustness; see [`robustness_ppt_with`] for solver options.
pub fn robustness_ppt(n: &QuantumChannel, variant: Variant) -> Result<RobustnessResult> {
    Ok(robustness_ppt_with(n, variant, &SdpOptions::from_env()?)?.0)
}

/// Solves the robustness program and also returns the raw solver output.
pub fn robustness_ppt_with(n: &QuantumChannel, variant: Variant, options: &SdpOptions) -> Result<(RobustnessResult, SdpSolution)> {
    let choi = n.choi();
    let (d_a, d_b) = choi.dims();
    let side = d_a * d_b;
    let (problem, basis) = robustness_program(choi, variant)?;
    let sol = sdp::solve(&problem, options)?;
    if sol.status != SdpStatus::Optimal {
        return Err(Error::Solver(format!(
            "robustness SDP ({:?}) ended with status {:?} after {} iterations: {} (gap {:.3e}, residuals {:.3e}/{:.3e})",
            variant,
            sol.status,
            sol.iterations,
            sol.message,
            sol.primal_value - sol.dual_value,
            sol.primal_residual,
            sol.dual_residual
        )));
    }
    let rho = choi.matrix();
    let mut m = CMatrix::zeros(side, side);
    for (bk, y) in basis.iter().zip(&sol.dual_multipliers) {
        for &(r, s, v) in bk.entries() {
            m[(r, s)] += v * *y;
        }
    }
    let mut m = m.symmetrized();
    // lift M by a multiple of I (which keeps every linear constraint) until
    // all cone conditions hold to rounding
    let mp = rho + &m;
    let mut lows = vec![herm_eig_unchecked(&m).min(), herm_eig_unchecked(&mp).min()];
    if variant.ppt_on_m() {
        lows.push(herm_eig_unchecked(&partial_transpose(&m, Subsystem::A, (d_a, d_b))?.symmetrized()).min());
    }
    lows.push(herm_eig_unchecked(&partial_transpose(&mp, Subsystem::A, (d_a, d_b))?.symmetrized()).min());
    let low = lows.into_iter().fold(f64::INFINITY, f64::min);
    if low < 0.0 {
        m = &m + &CMatrix::identity(side).scale(-low * (1.0 + 1e-9));
    }
    let s = m.trace().re.max(0.0);

    let pick = |label: &str| problem.block_index(label).map(|i| &sol.primal_blocks[i]);
    let x_mp = pick(BLOCK_MP).expect("declared");
    let x_mpt = pick(BLOCK_MP_PT).expect("declared");
    let w = &(&CMatrix::identity(side) - x_mp) - &partial_transpose(x_mpt, Subsystem::A, (d_a, d_b))?;
    let w = w.symmetrized();

    let decomposition = if variant.marginal() {
        let phi_m = if s > 1e-14 { m.scale(1.0 / s) } else { CMatrix::identity(side).scale(1.0 / side as f64) };
        let phi_mp = (rho + &m).scale(1.0 / (1.0 + s));
        Some(Decomposition { m: ChoiState::new(d_a, d_b, phi_m)?, m_prime: ChoiState::new(d_a, d_b, phi_mp)? })
    } else {
        None
    };
    let result = RobustnessResult {
        value: s,
        method: variant.method(),
        is_exact: side <= 6,
        decomposition,
        witness: Some(w),
        diagnostics: Some(SolverDiagnostics {
            status: sol.status,
            iterations: sol.iterations,
            primal_value: sol.primal_value,
            dual_value: sol.dual_value,
            primal_residual: sol.primal_residual,
            dual_residual: sol.dual_residual,
        }),
    };
    Ok((result, sol))
}

/// Evaluates any method that needs only the channel.
pub fn robustness(n: &QuantumChannel, method: Method, options: &SdpOptions) -> Result<RobustnessResult> {
    match method {
        Method::Eig => Ok(eig_lower_bound(n)),
        Method::Moment(k) => moment_lower_bound(n, k),
        Method::Witness => Err(Error::invalid("the witness bound needs a witness operator")),
        m => Ok(robustness_ppt_with(n, m.variant().expect("sdp method"), options)?.0),
    }
}

/// `log₂(1 + R)`.
pub fn log_robustness(r: &RobustnessResult) -> f64 {
    (1.0 + r.value.max(0.0)).log2()
}

/// Qubit memories needed to synthesise the channel: `⌈log₂(⌈R⌉ + 1)⌉`.
pub fn synthesis_cost(r: &RobustnessResult) -> u32 {
    synthesis_cost_of(r.value)
}

pub fn synthesis_cost_of(value: f64) -> u32 {
    let k = (value - CEIL_NUDGE).ceil().max(0.0) as u64;
    (k + 1).next_power_of_two().trailing_zeros()
}

/// `log₂(1 + R_G)`; only defined for the generalized robustness.
pub fn dmax(r: &RobustnessResult) -> Result<f64> {
    match r.method {
        Method::SdpPptGeneralized | Method::SdpEntanglementGeneralized => Ok(log_robustness(r)),
        other => Err(Error::invalid(format!("D_max needs the generalized robustness, got method {}", other.label()))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channels::{family, random_eb_channel, Family};
    use crate::linalg::partial_trace;

    fn ch(f: Family) -> QuantumChannel {
        family(f).unwrap()
    }

    #[test]
    fn basis_dimension_and_membership() {
        for (da, db) in [(2, 2), (2, 3), (3, 2), (3, 3), (4, 4)] {
            let n = da * db;
            let basis = subspace_basis(da, db, true);
            assert_eq!(basis.len(), n * n - (da * da - 1));
            for b in &basis {
                let d = b.to_dense();
                assert!(d.hermitian_deviation() < 1e-15);
                let tb = partial_trace(&d, Subsystem::B, (da, db)).unwrap();
                let c0 = tb[(0, 0)];
                for i in 0..da {
                    for j in 0..da {
                        let want = if i == j { c0 } else { re(0.0) };
                        assert!((tb[(i, j)] - want).norm() < 1e-15);
                    }
                }
            }
            assert_eq!(subspace_basis(da, db, false).len(), n * n);
        }
    }

    #[test]
    fn sparse_partial_transpose_matches_dense() {
        let basis = subspace_basis(2, 3, true);
        for b in basis.iter().take(20) {
            let dense = partial_transpose(&b.to_dense(), Subsystem::A, (2, 3)).unwrap();
            assert!((&sparse_pt(b, 3).to_dense() - &dense).max_abs() < 1e-15);
        }
    }

    #[test]
    fn eig_examples() {
        let r = eig_lower_bound(&ch(Family::Identity { d: 2 }));
        assert!((r.value - 1.0).abs() < 1e-12 && r.is_exact);
        let r = eig_lower_bound(&ch(Family::CompletelyDepolarizing { d: 2 }));
        assert_eq!(r.value, 0.0);
        assert!(r.is_exact);
        let r = eig_lower_bound(&ch(Family::Damping { p: 0.5 }));
        assert!((r.value - (0.5 - 1.0 + 1.25f64.sqrt()) / 2.0).abs() < 1e-12);
        assert!((r.value - 0.30902).abs() < 1e-5);
        assert!(!eig_lower_bound(&ch(Family::Erasure { p: 0.5 })).is_exact);
    }

    #[test]
    fn moment_examples() {
        let id = ch(Family::Identity { d: 2 });
        assert!(moment_lower_bound(&id, 1).unwrap().value.abs() < 1e-12);
        assert!((moment_lower_bound(&id, 2).unwrap().value - (2f64.sqrt() - 1.0)).abs() < 1e-12);
        assert!((moment_lower_bound(&id, 10_000).unwrap().value - 1.0).abs() < 1e-3);
        assert!(moment_lower_bound(&id, 0).is_err());
    }

    #[test]
    fn log_and_cost_examples() {
        let r = |v| RobustnessResult::bound(v, Method::SdpPpt, true);
        assert_eq!(log_robustness(&r(1.0)), 1.0);
        assert_eq!(log_robustness(&r(0.0)), 0.0);
        assert_eq!(log_robustness(&r(3.0)), 2.0);
        assert_eq!(synthesis_cost(&r(0.0)), 0);
        assert_eq!(synthesis_cost(&r(1.0)), 1);
        assert_eq!(synthesis_cost(&r(1.0000000001)), 1);
        assert_eq!(synthesis_cost(&r(2.3)), 2);
        assert_eq!(synthesis_cost(&r(3.0)), 2);
        assert_eq!(synthesis_cost(&r(3.5)), 3);
        assert!(dmax(&r(1.0)).is_err());
    }

    #[test]
    fn identity_qubit_and_qutrit() {
        for (d, want) in [(2, 1.0), (3, 2.0)] {
            let id = ch(Family::Identity { d });
            for v in Variant::ALL {
                let r = robustness_ppt(&id, v).unwrap();
                assert!((r.value - want).abs() < 1e-6, "{v:?} d={d}: {}", r.value);
            }
        }
        let g = robustness_ppt(&ch(Family::Identity { d: 2 }), Variant::Generalized).unwrap();
        assert!((dmax(&g).unwrap() - 1.0).abs() < 1e-6);
    }

    #[test]
    fn depolarizing_values() {
        for (p, want) in [(1.0 / 3.0, 0.0), (0.5, 0.25), (2.0 / 3.0, 0.5), (1.0, 1.0), (0.2, 0.0)] {
            let r = robustness_ppt(&ch(Family::Depolarizing { p }), Variant::Standard).unwrap();
            assert!((r.value - want).abs() < 1e-6, "p={p}: {}", r.value);
        }
    }

    #[test]
    fn erasure_values() {
        for p in [0.25, 0.5, 1.0] {
            for v in Variant::ALL {
                let r = robustness_ppt(&ch(Family::Erasure { p }), v).unwrap();
                assert!((r.value - p).abs() < 1e-6, "p={p} {v:?}: {}", r.value);
            }
        }
    }

    #[test]
    fn decomposition_and_witness_consistency() {
        for f in [Family::Damping { p: 0.4 }, Family::Dephasing { p: 0.8 }, Family::Erasure { p: 0.7 }] {
            let n = ch(f);
            for v in [Variant::Standard, Variant::Generalized] {
                let r = robustness_ppt(&n, v).unwrap();
                let d = r.decomposition.as_ref().unwrap();
                let s = r.value;
                let rec = &(&d.m_prime.matrix().scale(1.0 + s) - &d.m.matrix().scale(s)) - n.choi().matrix();
                assert!(rec.frobenius_norm() <= 1e-7);
                assert!(d.m_prime.is_ppt());
                if v == Variant::Standard {
                    assert!(d.m.is_ppt());
                }
                let w = r.witness.as_ref().unwrap();
                assert!((n.choi().matrix().inner(w) - (1.0 + s)).abs() <= 1e-6);
                for seed in 0..5 {
                    let eb = random_eb_channel(n.d_in(), n.d_out(), 3, seed).unwrap();
                    let t = eb.choi().matrix().inner(w);
                    assert!((-1e-6..=1.0 + 1e-6).contains(&t), "{t}");
                }
            }
        }
    }

    #[test]
    fn entanglement_variants_have_no_decomposition() {
        let r = robustness_ppt(&ch(Family::Damping { p: 0.5 }), Variant::Entanglement).unwrap();
        assert!(r.decomposition.is_none());
        assert!(r.witness.is_some());
    }

    #[test]
    fn capacity_limit() {
        let big = ch(Family::Identity { d: 5 });
        assert!(matches!(robustness_ppt(&big, Variant::Standard), Err(Error::Capacity(_))));
    }
}
