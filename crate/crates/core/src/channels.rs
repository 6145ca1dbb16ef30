//! Quantum channels held as Kraus operators and/or normalized Choi states.
//!
//! Choi convention: `Φ_N = (1/d_A) Σ_ij |i⟩⟨j|_A ⊗ N(|i⟩⟨j|)_B`, input copy A
//! first, output B second, unit trace. Partial transposes used for the PPT
//! test act on A. For tensor products of channels the input space is
//! `A₁A₂` and the output `B₁B₂`, so the product Choi lives on `A₁A₂:B₁B₂`
//! (not the naive `A₁B₁A₂B₂` ordering of `Φ₁ ⊗ Φ₂`).

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, c, herm_eig, herm_eig_unchecked, kron, partial_trace, partial_transpose, re, CMatrix, Subsystem, C64};

pub const PSD_TOL: f64 = 1e-9;
pub const TRACE_TOL: f64 = 1e-10;
pub const MARGINAL_TOL: f64 = 1e-9;
pub const KRAUS_TOL: f64 = 1e-10;
/// Largest Choi side any channel may have.
pub const MAX_CHOI_SIDE: usize = 64;

/// Hermitian, PSD, unit-trace matrix on `d_A·d_B` with marginal `Tr_B = I/d_A`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChoiState {
    d_a: usize,
    d_b: usize,
    matrix: CMatrix,
}

impl ChoiState {
    /// Validates every Choi invariant; the matrix is symmetrized on the way in.
    pub fn new(d_a: usize, d_b: usize, matrix: CMatrix) -> Result<Self> {
        if d_a == 0 || d_b == 0 {
            return Err(Error::invalid("Choi dimensions must be positive"));
        }
        let n = d_a * d_b;
        if matrix.shape() != (n, n) {
            return Err(Error::invalid(format!(
                "Choi matrix is {}x{}, expected side {n} for d_A={d_a}, d_B={d_b}",
                matrix.rows(),
                matrix.cols()
            )));
        }
        if n > MAX_CHOI_SIDE {
            return Err(Error::Capacity(format!("Choi side {n} exceeds {MAX_CHOI_SIDE}")));
        }
        let matrix = matrix.to_hermitian()?;
        let tr = matrix.trace().re;
        if (tr - 1.0).abs() > TRACE_TOL {
            return Err(Error::invalid(format!("Choi trace is {tr}, expected 1")));
        }
        let marginal = partial_trace(&matrix, Subsystem::B, (d_a, d_b))?;
        let target = CMatrix::identity(d_a).scale(1.0 / d_a as f64);
        let dev = (&marginal - &target).max_abs();
        if dev > MARGINAL_TOL {
            return Err(Error::invalid(format!("Choi marginal deviates from I/d_A by {dev:.3e} (not trace preserving)")));
        }
        let min = herm_eig_unchecked(&matrix).min();
        if min < -PSD_TOL {
            return Err(Error::invalid(format!("Choi matrix has negative eigenvalue {min:.3e} (not completely positive)")));
        }
        Ok(Self { d_a, d_b, matrix })
    }

    pub fn d_a(&self) -> usize {
        self.d_a
    }

    pub fn d_b(&self) -> usize {
        self.d_b
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.d_a, self.d_b)
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> CMatrix {
        self.matrix
    }

    pub fn max_eigenvalue(&self) -> f64 {
        herm_eig_unchecked(&self.matrix).max()
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        herm_eig_unchecked(&self.matrix).values
    }

    pub fn partial_transpose(&self) -> CMatrix {
        partial_transpose(&self.matrix, Subsystem::A, self.dims()).expect("dimensions validated on construction")
    }

    pub fn min_pt_eigenvalue(&self) -> f64 {
        herm_eig_unchecked(&self.partial_transpose().symmetrized()).min()
    }

    pub fn is_ppt(&self) -> bool {
        self.min_pt_eigenvalue() >= -PSD_TOL
    }
}

/// True iff the partial transpose on A has no eigenvalue below `-1e-9`.
///
/// For `d_A·d_B ≤ 6` this decides membership in the entanglement-breaking set.
pub fn is_ppt_choi(choi: &ChoiState) -> bool {
    choi.is_ppt()
}

/// A CPTP map from `d_in` to `d_out` dimensions. The Choi state is always
/// populated; Kraus operators are kept when the channel was built from them.
#[derive(Debug, Clone)]
pub struct QuantumChannel {
    d_in: usize,
    d_out: usize,
    kraus: Option<Vec<CMatrix>>,
    choi: ChoiState,
}

impl PartialEq for QuantumChannel {
    fn eq(&self, other: &Self) -> bool {
        self.choi == other.choi
    }
}

/// `Φ = (1/d_A) Σ_k |v_k⟩⟨v_k|` with `v_k[(i,b)] = K_k[b,i]`.
pub fn kraus_to_choi(kraus: &[CMatrix]) -> Result<ChoiState> {
    let (d_out, d_in) = check_kraus(kraus)?;
    let n = d_in * d_out;
    if n > MAX_CHOI_SIDE {
        return Err(Error::Capacity(format!("Choi side {n} exceeds {MAX_CHOI_SIDE}")));
    }
    let m = choi_matrix_from_kraus(kraus, d_in, d_out);
    ChoiState::new(d_in, d_out, m)
}

fn choi_matrix_from_kraus(kraus: &[CMatrix], d_in: usize, d_out: usize) -> CMatrix {
    let n = d_in * d_out;
    let mut m = CMatrix::zeros(n, n);
    let w = 1.0 / d_in as f64;
    for k in kraus {
        let v: Vec<C64> = (0..n).map(|idx| k[(idx % d_out, idx / d_out)]).collect();
        for p in 0..n {
            if v[p].norm_sqr() == 0.0 {
                continue;
            }
            for q in 0..n {
                m[(p, q)] += v[p] * v[q].conj() * w;
            }
        }
    }
    m
}

fn check_kraus(kraus: &[CMatrix]) -> Result<(usize, usize)> {
    let first = kraus.first().ok_or_else(|| Error::invalid("empty Kraus set"))?;
    let (d_out, d_in) = first.shape();
    if d_in == 0 || d_out == 0 {
        return Err(Error::invalid("Kraus operators must be non-empty matrices"));
    }
    if kraus.iter().any(|k| k.shape() != (d_out, d_in)) {
        return Err(Error::invalid("Kraus operators have inconsistent shapes"));
    }
    let mut sum = CMatrix::zeros(d_in, d_in);
    for k in kraus {
        sum += &k.adjoint().matmul(k);
    }
    let dev = (&sum - &CMatrix::identity(d_in)).max_abs();
    if dev > KRAUS_TOL {
        return Err(Error::invalid(format!("Kraus set is not trace preserving: ‖Σ K†K − I‖ = {dev:.3e}")));
    }
    Ok((d_out, d_in))
}

impl QuantumChannel {
    pub fn from_kraus(kraus: Vec<CMatrix>) -> Result<Self> {
        let choi = kraus_to_choi(&kraus)?;
        Ok(Self { d_in: choi.d_a, d_out: choi.d_b, kraus: Some(kraus), choi })
    }

    pub fn from_choi(choi: ChoiState) -> Self {
        Self { d_in: choi.d_a, d_out: choi.d_b, kraus: None, choi }
    }

    pub fn from_choi_matrix(d_in: usize, d_out: usize, matrix: CMatrix) -> Result<Self> {
        Ok(Self::from_choi(ChoiState::new(d_in, d_out, matrix)?))
    }

    /// `ρ ↦ U ρ U†`.
    pub fn unitary(u: &CMatrix) -> Result<Self> {
        if !u.is_square() || linalg::unitarity_defect(u) > KRAUS_TOL {
            return Err(Error::invalid("matrix is not unitary"));
        }
        Self::from_kraus(vec![u.clone()])
    }

    /// `ρ ↦ Σ_i Tr[ρ M_i] σ_i` for a POVM `{M_i}` and states `{σ_i}`.
    pub fn measure_and_prepare(povm: &[CMatrix], states: &[CMatrix]) -> Result<Self> {
        if povm.is_empty() || povm.len() != states.len() {
            return Err(Error::invalid("POVM and state lists must be non-empty and of equal length"));
        }
        let d_in = povm[0].rows();
        let d_out = states[0].rows();
        let mut kraus = Vec::new();
        for (m, s) in povm.iter().zip(states) {
            if m.shape() != (d_in, d_in) || s.shape() != (d_out, d_out) {
                return Err(Error::invalid("inconsistent POVM/state dimensions"));
            }
            let me = herm_eig(m)?;
            let se = herm_eig(s)?;
            if me.min() < -PSD_TOL || se.min() < -PSD_TOL || (s.trace().re - 1.0).abs() > TRACE_TOL {
                return Err(Error::invalid("POVM elements must be PSD and states must be density matrices"));
            }
            for (mu, mcol) in me.values.iter().zip(0..d_in) {
                if *mu <= 0.0 {
                    continue;
                }
                let mv = me.vectors.column(mcol);
                for (lam, scol) in se.values.iter().zip(0..d_out) {
                    if *lam <= 0.0 {
                        continue;
                    }
                    let sv = se.vectors.column(scol);
                    kraus.push(CMatrix::outer(&sv, &mv).scale((mu * lam).sqrt()));
                }
            }
        }
        Self::from_kraus(kraus)
    }

    pub fn d_in(&self) -> usize {
        self.d_in
    }

    pub fn d_out(&self) -> usize {
        self.d_out
    }

    pub fn choi(&self) -> &ChoiState {
        &self.choi
    }

    pub fn kraus(&self) -> Option<&[CMatrix]> {
        self.kraus.as_deref()
    }

    /// Kraus operators, derived from the Choi spectrum when none were given.
    pub fn kraus_operators(&self) -> Vec<CMatrix> {
        if let Some(k) = &self.kraus {
            return k.clone();
        }
        let e = herm_eig_unchecked(self.choi.matrix());
        let (d_in, d_out) = (self.d_in, self.d_out);
        let cutoff = 1e-14 * e.max().abs().max(1e-300);
        let mut out = Vec::new();
        for (k, &lam) in e.values.iter().enumerate().rev() {
            if lam <= cutoff {
                continue;
            }
            let w = (d_in as f64 * lam).sqrt();
            out.push(CMatrix::from_fn(d_out, d_in, |b, i| e.vectors[(i * d_out + b, k)] * w));
        }
        out
    }

    /// Output state `N(ρ)`; uses the Kraus form when available, otherwise
    /// `N(ρ) = d·Tr_A[(ρᵀ⊗I)Φ]`.
    pub fn apply(&self, rho: &CMatrix) -> Result<CMatrix> {
        if rho.shape() != (self.d_in, self.d_in) {
            return Err(Error::invalid(format!(
                "state is {}x{}, channel input dimension is {}",
                rho.rows(),
                rho.cols(),
                self.d_in
            )));
        }
        Ok(match &self.kraus {
            Some(kraus) => {
                let mut out = CMatrix::zeros(self.d_out, self.d_out);
                for k in kraus {
                    out += &k.conjugate(rho);
                }
                out
            }
            None => self.apply_via_choi(rho),
        })
    }

    pub(crate) fn apply_via_choi(&self, rho: &CMatrix) -> CMatrix {
        let (da, db) = (self.d_in, self.d_out);
        let phi = self.choi.matrix();
        let mut out = CMatrix::zeros(db, db);
        for b in 0..db {
            for b2 in 0..db {
                let mut acc = re(0.0);
                for j in 0..da {
                    for i in 0..da {
                        acc += rho[(j, i)] * phi[(j * db + b, i * db + b2)];
                    }
                }
                out[(b, b2)] = acc * da as f64;
            }
        }
        out
    }

    /// Convex combination `Σ w_i N_i` of channels with equal dimensions.
    pub fn mixture(parts: &[(f64, &QuantumChannel)]) -> Result<Self> {
        let (_, first) = parts.first().ok_or_else(|| Error::invalid("empty mixture"))?;
        let (da, db) = first.choi.dims();
        let total: f64 = parts.iter().map(|(w, _)| w).sum();
        if parts.iter().any(|(w, ch)| *w < 0.0 || ch.choi.dims() != (da, db)) || (total - 1.0).abs() > TRACE_TOL {
            return Err(Error::invalid("mixture weights must be a probability vector over equal-dimension channels"));
        }
        let mut m = CMatrix::zeros(da * db, da * db);
        for (w, ch) in parts {
            m.axpy(*w, ch.choi.matrix());
        }
        Self::from_choi_matrix(da, db, m)
    }
}

/// `later ∘ earlier`.
pub fn compose(later: &QuantumChannel, earlier: &QuantumChannel) -> Result<QuantumChannel> {
    if earlier.d_out != later.d_in {
        return Err(Error::invalid(format!(
            "cannot compose: earlier output dimension {} differs from later input dimension {}",
            earlier.d_out, later.d_in
        )));
    }
    let ks = later.kraus_operators();
    let kr = earlier.kraus_operators();
    let mut kraus = Vec::with_capacity(ks.len() * kr.len());
    for l in &ks {
        for k in &kr {
            let p = l.matmul(k);
            if p.max_abs() > 0.0 {
                kraus.push(p);
            }
        }
    }
    let channel = QuantumChannel::from_kraus(kraus)?;
    if channel.kraus.as_ref().map_or(0, Vec::len) > channel.d_in * channel.d_out {
        // keep the Kraus list at most Choi-rank long
        let compact = channel.kraus_operators_from_choi();
        return Ok(QuantumChannel { kraus: Some(compact), ..channel });
    }
    Ok(channel)
}

impl QuantumChannel {
    fn kraus_operators_from_choi(&self) -> Vec<CMatrix> {
        QuantumChannel::from_choi(self.choi.clone()).kraus_operators()
    }
}

/// Parallel composition `a ⊗ b` on `A₁A₂ → B₁B₂`.
pub fn tensor(a: &QuantumChannel, b: &QuantumChannel) -> Result<QuantumChannel> {
    let d_in = a.d_in * b.d_in;
    let d_out = a.d_out * b.d_out;
    let n = d_in * d_out;
    if n > MAX_CHOI_SIDE {
        return Err(Error::Capacity(format!("tensor product Choi side {n} exceeds {MAX_CHOI_SIDE}")));
    }
    let pa = a.choi.matrix();
    let pb = b.choi.matrix();
    let (a1, b1) = (a.d_in, a.d_out);
    let (a2, b2) = (b.d_in, b.d_out);
    let flat = |i1: usize, i2: usize, o1: usize, o2: usize| ((i1 * a2 + i2) * d_out) + (o1 * b2 + o2);
    let mut m = CMatrix::zeros(n, n);
    for i1 in 0..a1 {
        for o1 in 0..b1 {
            for j1 in 0..a1 {
                for p1 in 0..b1 {
                    let va = pa[(i1 * b1 + o1, j1 * b1 + p1)];
                    if va.norm_sqr() == 0.0 {
                        continue;
                    }
                    for i2 in 0..a2 {
                        for o2 in 0..b2 {
                            for j2 in 0..a2 {
                                for p2 in 0..b2 {
                                    let vb = pb[(i2 * b2 + o2, j2 * b2 + p2)];
                                    m[(flat(i1, i2, o1, o2), flat(j1, j2, p1, p2))] = va * vb;
                                }
                            }
                        }
                    }
                }
            }
        }
    }
    let choi = ChoiState::new(d_in, d_out, m)?;
    let kraus = match (&a.kraus, &b.kraus) {
        (Some(ka), Some(kb)) => Some(ka.iter().flat_map(|x| kb.iter().map(move |y| kron(x, y))).collect()),
        _ => None,
    };
    Ok(QuantumChannel { d_in, d_out, kraus, choi })
}

/// Reduced channel `Tr_X N(· ⊗ I_X/d_X)` on a declared bipartition
/// `d_in = in_dims.0·in_dims.1`, `d_out = out_dims.0·out_dims.1`.
///
/// `part` names the factor that is traced out: `B` keeps `A₁ → B₁`.
pub fn channel_partial_trace(
    n: &QuantumChannel,
    in_dims: (usize, usize),
    out_dims: (usize, usize),
    part: Subsystem,
) -> Result<QuantumChannel> {
    if in_dims.0 * in_dims.1 != n.d_in || out_dims.0 * out_dims.1 != n.d_out || in_dims.0 == 0 || in_dims.1 == 0 {
        return Err(Error::invalid(format!(
            "bipartition {:?} -> {:?} does not divide channel dimensions {} -> {}",
            in_dims, out_dims, n.d_in, n.d_out
        )));
    }
    let (a1, a2) = in_dims;
    let (b1, b2) = out_dims;
    let phi = n.choi.matrix();
    let flat = |i1: usize, i2: usize, o1: usize, o2: usize| ((i1 * a2 + i2) * n.d_out) + (o1 * b2 + o2);
    let m = match part {
        Subsystem::B => CMatrix::from_fn(a1 * b1, a1 * b1, |r, s| {
            let (i1, o1) = (r / b1, r % b1);
            let (j1, p1) = (s / b1, s % b1);
            let mut acc = re(0.0);
            for k in 0..a2 {
                for l in 0..b2 {
                    acc += phi[(flat(i1, k, o1, l), flat(j1, k, p1, l))];
                }
            }
            acc
        }),
        Subsystem::A => CMatrix::from_fn(a2 * b2, a2 * b2, |r, s| {
            let (i2, o2) = (r / b2, r % b2);
            let (j2, p2) = (s / b2, s % b2);
            let mut acc = re(0.0);
            for k in 0..a1 {
                for l in 0..b1 {
                    acc += phi[(flat(k, i2, l, o2), flat(k, j2, l, p2))];
                }
            }
            acc
        }),
    };
    let (da, db) = match part {
        Subsystem::B => (a1, b1),
        Subsystem::A => (a2, b2),
    };
    QuantumChannel::from_choi_matrix(da, db, m)
}

/// The named channel families used throughout.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "name")]
pub enum Family {
    Identity { d: usize },
    /// `pρ + (1−p) ZρZ`
    Dephasing { p: f64 },
    /// `pρ + (1−p) I/2`
    Depolarizing { p: f64 },
    /// `pρ + (1−p)|0⟩⟨0|`
    Damping { p: f64 },
    /// `pρ + (1−p)|2⟩⟨2|`, qubit into qutrit
    Erasure { p: f64 },
    /// dephasing with `p = (1 + e^{−γt})/2`
    LindbladDephasing { gamma: f64, t: f64 },
    /// `ρ ↦ I/d`
    CompletelyDepolarizing { d: usize },
}

impl Family {
    /// Parses `identity`, `dephasing`, `depolarizing`, `damping`, `erasure` with
    /// a parameter (the dimension for `identity`).
    pub fn from_name(name: &str, param: f64) -> Result<Self> {
        Ok(match name {
            "identity" => Family::Identity { d: param as usize },
            "dephasing" => Family::Dephasing { p: param },
            "depolarizing" | "depolarising" => Family::Depolarizing { p: param },
            "damping" => Family::Damping { p: param },
            "erasure" => Family::Erasure { p: param },
            other => return Err(Error::invalid(format!("unknown channel family '{other}'"))),
        })
    }
}

fn check_prob(p: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&p) || !p.is_finite() {
        return Err(Error::invalid(format!("parameter p={p} outside [0, 1]")));
    }
    Ok(())
}

pub fn family(f: Family) -> Result<QuantumChannel> {
    use linalg::pauli;
    match f {
        Family::Identity { d } => {
            if d < 2 {
                return Err(Error::invalid("identity channel needs d ≥ 2"));
            }
            QuantumChannel::from_kraus(vec![CMatrix::identity(d)])
        }
        Family::Dephasing { p } => {
            check_prob(p)?;
            QuantumChannel::from_kraus(vec![pauli::i2().scale(p.sqrt()), pauli::z().scale((1.0 - p).sqrt())])
        }
        Family::Depolarizing { p } => {
            check_prob(p)?;
            let w0 = (p + (1.0 - p) / 4.0).sqrt();
            let w = ((1.0 - p) / 4.0).sqrt();
            QuantumChannel::from_kraus(vec![pauli::i2().scale(w0), pauli::x().scale(w), pauli::y().scale(w), pauli::z().scale(w)])
        }
        Family::Damping { p } => {
            check_prob(p)?;
            let w = (1.0 - p).sqrt();
            QuantumChannel::from_kraus(vec![
                pauli::i2().scale(p.sqrt()),
                CMatrix::unit(2, 2, 0, 0).scale(w),
                CMatrix::unit(2, 2, 0, 1).scale(w),
            ])
        }
        Family::Erasure { p } => {
            check_prob(p)?;
            let embed = CMatrix::from_real_rows(&[&[1.0, 0.0], &[0.0, 1.0], &[0.0, 0.0]]);
            let w = (1.0 - p).sqrt();
            QuantumChannel::from_kraus(vec![
                embed.scale(p.sqrt()),
                CMatrix::unit(3, 2, 2, 0).scale(w),
                CMatrix::unit(3, 2, 2, 1).scale(w),
            ])
        }
        Family::LindbladDephasing { gamma, t } => {
            if !(gamma >= 0.0 && t >= 0.0) || !gamma.is_finite() || !t.is_finite() {
                return Err(Error::invalid(format!("lindblad dephasing needs γ, t ≥ 0 (got γ={gamma}, t={t})")));
            }
            family(Family::Dephasing { p: (1.0 + (-gamma * t).exp()) / 2.0 })
        }
        Family::CompletelyDepolarizing { d } => {
            if d < 2 {
                return Err(Error::invalid("completely depolarizing channel needs d ≥ 2"));
            }
            let w = (1.0 / d as f64).sqrt();
            let mut kraus = Vec::with_capacity(d * d);
            for i in 0..d {
                for j in 0..d {
                    kraus.push(CMatrix::unit(d, d, i, j).scale(w));
                }
            }
            QuantumChannel::from_kraus(kraus)
        }
    }
}

fn gaussian_matrix<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> CMatrix {
    CMatrix::from_fn(rows, cols, |_, _| {
        let a: f64 = rng.sample(StandardNormal);
        let b: f64 = rng.sample(StandardNormal);
        c(a, b)
    })
}

/// Haar-random pure state vector.
pub fn random_pure_state<R: Rng + ?Sized>(d: usize, rng: &mut R) -> Vec<C64> {
    let g = gaussian_matrix(d, 1, rng);
    let norm = g.frobenius_norm();
    g.data().iter().map(|z| z / norm).collect()
}

pub fn random_density<R: Rng + ?Sized>(d: usize, rng: &mut R) -> CMatrix {
    let g = gaussian_matrix(d, d, rng);
    let m = g.matmul(&g.adjoint());
    let tr = m.trace().re;
    m.scale(1.0 / tr).symmetrized()
}

/// `A^{-1/2}` for Hermitian positive definite `A`.
fn inverse_sqrt(a: &CMatrix) -> CMatrix {
    herm_eig_unchecked(&a.symmetrized()).map_spectrum(|l| 1.0 / l.max(1e-300).sqrt())
}

/// Haar-random unitary.
pub fn random_unitary<R: Rng + ?Sized>(d: usize, rng: &mut R) -> CMatrix {
    let g = gaussian_matrix(d, d, rng);
    g.matmul(&inverse_sqrt(&g.adjoint().matmul(&g)))
}

/// Random CPTP map with `kraus_rank` Kraus operators from a Haar-random isometry.
pub fn random_channel<R: Rng + ?Sized>(d_in: usize, d_out: usize, kraus_rank: usize, rng: &mut R) -> Result<QuantumChannel> {
    if kraus_rank == 0 || d_out * kraus_rank < d_in {
        return Err(Error::invalid(format!(
            "no trace-preserving {d_in}→{d_out} channel has Kraus rank {kraus_rank}"
        )));
    }
    let g = gaussian_matrix(d_out * kraus_rank, d_in, rng);
    let v = g.matmul(&inverse_sqrt(&g.adjoint().matmul(&g)));
    let kraus = (0..kraus_rank)
        .map(|k| CMatrix::from_fn(d_out, d_in, |i, j| v[(k * d_out + i, j)]))
        .collect();
    QuantumChannel::from_kraus(kraus)
}

/// Measure-and-prepare channel with a random `n_outcomes`-element POVM and
/// Haar-random pure preparations; deterministic per seed.
pub fn random_eb_channel(d_in: usize, d_out: usize, n_outcomes: usize, seed: u64) -> Result<QuantumChannel> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    random_eb_channel_with(d_in, d_out, n_outcomes, &mut rng)
}

pub fn random_eb_channel_with<R: Rng + ?Sized>(d_in: usize, d_out: usize, n_outcomes: usize, rng: &mut R) -> Result<QuantumChannel> {
    if n_outcomes == 0 {
        return Err(Error::invalid("a POVM needs at least one outcome"));
    }
    let raw: Vec<CMatrix> = (0..n_outcomes)
        .map(|_| {
            let g = gaussian_matrix(d_in, d_in, rng);
            g.adjoint().matmul(&g)
        })
        .collect();
    let mut total = CMatrix::zeros(d_in, d_in);
    for r in &raw {
        total += r;
    }
    let s = inverse_sqrt(&total);
    let povm: Vec<CMatrix> = raw.iter().map(|r| s.matmul(r).matmul(&s).symmetrized()).collect();
    let states: Vec<Vec<C64>> = (0..n_outcomes).map(|_| random_pure_state(d_out, rng)).collect();
    let mut kraus = Vec::new();
    for (m, psi) in povm.iter().zip(&states) {
        let e = herm_eig_unchecked(m);
        for (k, &mu) in e.values.iter().enumerate() {
            if mu <= 0.0 {
                continue;
            }
            let mv = e.vectors.column(k);
            kraus.push(CMatrix::outer(psi, &mv).scale(mu.sqrt()));
        }
    }
    QuantumChannel::from_kraus(kraus)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{max_entangled, pauli};

    fn close(a: &CMatrix, b: &CMatrix, tol: f64) -> bool {
        (a - b).max_abs() <= tol
    }

    #[test]
    fn identity_choi_is_max_entangled() {
        let ch = family(Family::Identity { d: 2 }).unwrap();
        let m = ch.choi().matrix();
        for (i, j) in [(0, 0), (0, 3), (3, 0), (3, 3)] {
            assert!((m[(i, j)].re - 0.5).abs() < 1e-15);
        }
        assert!(close(m, &max_entangled(2), 1e-15));
        assert_eq!(ch.kraus().unwrap().len(), 1);
    }

    #[test]
    fn completely_depolarizing_choi() {
        let ch = family(Family::CompletelyDepolarizing { d: 2 }).unwrap();
        assert!(close(ch.choi().matrix(), &CMatrix::identity(4).scale(0.25), 1e-15));
        let dep0 = family(Family::Depolarizing { p: 0.0 }).unwrap();
        assert!(close(dep0.choi().matrix(), &CMatrix::identity(4).scale(0.25), 1e-15));
    }

    #[test]
    fn dephasing_choi_entries() {
        let m = family(Family::Dephasing { p: 0.75 }).unwrap().choi().matrix().clone();
        let diag: Vec<f64> = (0..4).map(|i| m[(i, i)].re).collect();
        assert_eq!(diag.iter().map(|x| (x * 1e12).round() / 1e12).collect::<Vec<_>>(), vec![0.5, 0.0, 0.0, 0.5]);
        assert!((m[(0, 3)].re - 0.25).abs() < 1e-15);
        assert!((m[(3, 0)].re - 0.25).abs() < 1e-15);
        let half = family(Family::Dephasing { p: 0.5 }).unwrap();
        assert!(close(half.choi().matrix(), &CMatrix::diag_real(&[0.5, 0.0, 0.0, 0.5]), 1e-15));
    }

    #[test]
    fn apply_examples() {
        let rho = pauli::bloch_state([0.2, -0.5, 0.4]);
        let id = family(Family::Identity { d: 2 }).unwrap();
        assert!(close(&id.apply(&rho).unwrap(), &rho, 1e-15));
        let e0 = family(Family::Erasure { p: 0.0 }).unwrap();
        assert!(close(&e0.apply(&rho).unwrap(), &CMatrix::basis_projector(3, 2), 1e-15));
        let d = family(Family::Damping { p: 0.5 }).unwrap();
        let out = d.apply(&CMatrix::basis_projector(2, 1)).unwrap();
        assert!(close(&out, &CMatrix::diag_real(&[0.5, 0.5]), 1e-15));
        assert!(id.apply(&CMatrix::identity(3)).is_err());
    }

    #[test]
    fn erasure_one_is_embedding() {
        let e1 = family(Family::Erasure { p: 1.0 }).unwrap();
        assert_eq!((e1.d_in(), e1.d_out()), (2, 3));
        let rho = pauli::bloch_state([0.0, 0.6, 0.8]);
        let out = e1.apply(&rho).unwrap();
        for i in 0..2 {
            for j in 0..2 {
                assert!((out[(i, j)] - rho[(i, j)]).norm() < 1e-15);
            }
        }
        assert!(out[(2, 2)].norm() < 1e-15);
    }

    #[test]
    fn parameter_range_checked() {
        assert!(family(Family::Dephasing { p: 1.2 }).is_err());
        assert!(family(Family::Damping { p: -0.1 }).is_err());
        assert!(family(Family::Identity { d: 1 }).is_err());
        assert!(family(Family::LindbladDephasing { gamma: -1.0, t: 1.0 }).is_err());
    }

    #[test]
    fn non_trace_preserving_kraus_rejected() {
        let k = vec![pauli::i2().scale(0.9)];
        assert!(matches!(kraus_to_choi(&k), Err(Error::InvalidInput(_))));
    }

    #[test]
    fn lindblad_dephasing_matches_dephasing() {
        let l = family(Family::LindbladDephasing { gamma: 1.0, t: 0.7 }).unwrap();
        let d = family(Family::Dephasing { p: (1.0 + (-0.7f64).exp()) / 2.0 }).unwrap();
        assert!(close(l.choi().matrix(), d.choi().matrix(), 1e-15));
    }

    #[test]
    fn compose_dephasing() {
        let (p, q) = (0.8, 0.35);
        let a = family(Family::Dephasing { p }).unwrap();
        let b = family(Family::Dephasing { p: q }).unwrap();
        let ab = compose(&a, &b).unwrap();
        let expect = family(Family::Dephasing { p: p * q + (1.0 - p) * (1.0 - q) }).unwrap();
        assert!(close(ab.choi().matrix(), expect.choi().matrix(), 1e-12));
    }

    #[test]
    fn compose_with_identity_and_depolarizer() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let n = random_channel(2, 2, 3, &mut rng).unwrap();
        let id = family(Family::Identity { d: 2 }).unwrap();
        assert!(close(compose(&id, &n).unwrap().choi().matrix(), n.choi().matrix(), 1e-12));
        let dep = family(Family::CompletelyDepolarizing { d: 2 }).unwrap();
        assert!(close(compose(&dep, &n).unwrap().choi().matrix(), dep.choi().matrix(), 1e-12));
        assert!(compose(&id, &family(Family::Erasure { p: 0.5 }).unwrap()).is_err());
    }

    #[test]
    fn tensor_examples() {
        let id2 = family(Family::Identity { d: 2 }).unwrap();
        let id4 = family(Family::Identity { d: 4 }).unwrap();
        let t = tensor(&id2, &id2).unwrap();
        assert!(close(t.choi().matrix(), id4.choi().matrix(), 1e-15));

        let d1 = family(Family::Dephasing { p: 1.0 }).unwrap();
        let d0 = family(Family::Dephasing { p: 0.0 }).unwrap();
        // both factors are unitary, so the product Choi is pure
        let ev = tensor(&d1, &d0).unwrap().choi().eigenvalues();
        assert!((ev[15] - 1.0).abs() < 1e-12);
        assert!(ev[..15].iter().all(|v| v.abs() < 1e-12));

        let half = family(Family::Dephasing { p: 0.5 }).unwrap();
        let ev = tensor(&d1, &half).unwrap().choi().eigenvalues();
        assert!(ev[14..].iter().all(|v| (v - 0.5).abs() < 1e-12));
        assert!(ev[..14].iter().all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn tensor_marginals_recover_factors() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let n = random_channel(2, 3, 2, &mut rng).unwrap();
        let dep = family(Family::CompletelyDepolarizing { d: 2 }).unwrap();
        let t = tensor(&n, &dep).unwrap();
        let back = channel_partial_trace(&t, (2, 2), (3, 2), Subsystem::B).unwrap();
        assert!(close(back.choi().matrix(), n.choi().matrix(), 1e-10));
        let other = channel_partial_trace(&t, (2, 2), (3, 2), Subsystem::A).unwrap();
        assert!(close(other.choi().matrix(), dep.choi().matrix(), 1e-10));
        assert!((back.choi().matrix().trace().re - 1.0).abs() < 1e-12);
        assert!(channel_partial_trace(&t, (3, 2), (3, 2), Subsystem::B).is_err());
    }

    #[test]
    fn identity_four_reduces_to_identity_two() {
        let id4 = family(Family::Identity { d: 4 }).unwrap();
        let r = channel_partial_trace(&id4, (2, 2), (2, 2), Subsystem::B).unwrap();
        let rho = pauli::bloch_state([0.3, 0.3, -0.3]);
        assert!(close(&r.apply(&rho).unwrap(), &rho, 1e-12));
    }

    #[test]
    fn constant_eb_channel() {
        let ch = random_eb_channel(2, 3, 1, 9).unwrap();
        let sigma = ch.apply(&CMatrix::identity(2).scale(0.5)).unwrap();
        let expect = kron(&CMatrix::identity(2).scale(0.5), &sigma);
        assert!(close(ch.choi().matrix(), &expect, 1e-10));
        let other = ch.apply(&CMatrix::basis_projector(2, 1)).unwrap();
        assert!(close(&other, &sigma, 1e-10));
    }

    #[test]
    fn computational_measure_prepare_is_half_dephasing() {
        let povm = [CMatrix::basis_projector(2, 0), CMatrix::basis_projector(2, 1)];
        let ch = QuantumChannel::measure_and_prepare(&povm, &povm).unwrap();
        let d = family(Family::Dephasing { p: 0.5 }).unwrap();
        assert!(close(ch.choi().matrix(), d.choi().matrix(), 1e-14));
    }

    #[test]
    fn ppt_examples() {
        assert!(!is_ppt_choi(family(Family::Identity { d: 2 }).unwrap().choi()));
        assert!(is_ppt_choi(family(Family::Depolarizing { p: 1.0 / 3.0 }).unwrap().choi()));
        assert!(!is_ppt_choi(family(Family::Depolarizing { p: 0.34 }).unwrap().choi()));
        assert!(is_ppt_choi(random_eb_channel(3, 2, 4, 1).unwrap().choi()));
    }

    #[test]
    fn kraus_from_choi_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let n = random_channel(3, 2, 2, &mut rng).unwrap();
        let bare = QuantumChannel::from_choi(n.choi().clone());
        let rebuilt = QuantumChannel::from_kraus(bare.kraus_operators()).unwrap();
        assert!(close(rebuilt.choi().matrix(), n.choi().matrix(), 1e-12));
        let rho = random_density(3, &mut rng);
        assert!(close(&bare.apply(&rho).unwrap(), &n.apply(&rho).unwrap(), 1e-12));
    }

    #[test]
    fn choi_validation_errors() {
        let bad_trace = CMatrix::identity(4).scale(0.3);
        assert!(ChoiState::new(2, 2, bad_trace).is_err());
        // unit trace, PSD, wrong marginal
        let skew = CMatrix::diag_real(&[0.5, 0.3, 0.1, 0.1]);
        assert!(ChoiState::new(2, 2, skew).is_err());
        // right marginal, not PSD
        let mut neg = CMatrix::identity(4).scale(0.25);
        neg[(0, 3)] = re(0.4);
        neg[(3, 0)] = re(0.4);
        assert!(ChoiState::new(2, 2, neg).is_err());
    }
}
