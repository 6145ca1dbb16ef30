//! Nonlocal quantum games `G = {α_ij, σ_i, O_j}` and their witnesses.
//!
//! A game's payoff on a channel is `P = Σ α_ij Tr[N(σ_i) O_j]`, which equals
//! `Tr[Φ_N W]` with `W = d_A Σ α_ij σ_iᵀ ⊗ O_j`. When the game is normalized
//! on classical memories (`P ≤ 1` for every entanglement-breaking channel),
//! `P − 1` lower-bounds the robustness.

use serde::{Deserialize, Serialize};

use crate::channels::QuantumChannel;
use crate::error::{Error, Result};
use crate::linalg::{c, herm_eig, kron, pauli, re, CMatrix, C64};
use crate::robustness::RobustnessResult;

const STATE_TOL: f64 = 1e-10;
const OBSERVABLE_TOL: f64 = 1e-9;

/// Linear read-out of a game's score from measured setting probabilities:
/// `score = offset + Σ_k coefficients[k]·p_k`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SettingCoefficients {
    pub labels: Vec<String>,
    pub coefficients: Vec<f64>,
    #[serde(default)]
    pub offset: f64,
}

impl SettingCoefficients {
    pub fn score(&self, probabilities: &[f64]) -> Result<f64> {
        if probabilities.len() != self.coefficients.len() {
            return Err(Error::invalid(format!(
                "{} probabilities supplied for {} settings",
                probabilities.len(),
                self.coefficients.len()
            )));
        }
        Ok(self.offset + self.coefficients.iter().zip(probabilities).map(|(c, p)| c * p).sum::<f64>())
    }
}

/// One prepared input and one measured effect.
#[derive(Debug, Clone)]
pub struct Setting {
    pub label: String,
    pub input: CMatrix,
    pub observable: CMatrix,
}

impl Setting {
    pub fn probability(&self, n: &QuantumChannel) -> Result<f64> {
        Ok(n.apply(&self.input)?.inner(&self.observable))
    }
}

#[derive(Debug, Clone)]
pub struct Game {
    label: String,
    inputs: Vec<CMatrix>,
    observables: Vec<CMatrix>,
    alpha: Vec<Vec<f64>>,
    eb_normalized: bool,
    setting_coefficients: Option<SettingCoefficients>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SettingTerm {
    pub i: usize,
    pub j: usize,
    pub probability: f64,
    pub weighted: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct PayoffResult {
    pub payoff: f64,
    pub per_setting: Vec<SettingTerm>,
    /// `payoff − 1`; a valid bound only when `normalized` is true.
    pub robustness_lower_bound: f64,
    pub normalized: bool,
}

impl Game {
    pub fn new(
        label: impl Into<String>,
        inputs: Vec<CMatrix>,
        observables: Vec<CMatrix>,
        alpha: Vec<Vec<f64>>,
        eb_normalized: bool,
    ) -> Result<Self> {
        if inputs.is_empty() || observables.is_empty() {
            return Err(Error::invalid("a game needs at least one input and one observable"));
        }
        let d_a = inputs[0].rows();
        let d_b = observables[0].rows();
        for (k, s) in inputs.iter().enumerate() {
            if s.shape() != (d_a, d_a) {
                return Err(Error::invalid(format!("input {k} has inconsistent dimension")));
            }
            let e = herm_eig(s).map_err(|_| Error::invalid(format!("input {k} is not Hermitian")))?;
            if e.min() < -STATE_TOL || (s.trace().re - 1.0).abs() > STATE_TOL {
                return Err(Error::invalid(format!("input {k} is not a density matrix")));
            }
        }
        for (k, o) in observables.iter().enumerate() {
            if o.shape() != (d_b, d_b) {
                return Err(Error::invalid(format!("observable {k} has inconsistent dimension")));
            }
            let e = herm_eig(o).map_err(|_| Error::invalid(format!("observable {k} is not Hermitian")))?;
            if e.min() < -OBSERVABLE_TOL || e.max() > 1.0 + OBSERVABLE_TOL {
                return Err(Error::invalid(format!("observable {k} does not satisfy 0 ⪯ O ⪯ I")));
            }
        }
        if alpha.len() != inputs.len() || alpha.iter().any(|r| r.len() != observables.len()) {
            return Err(Error::invalid(format!(
                "coefficient matrix must be {}x{}",
                inputs.len(),
                observables.len()
            )));
        }
        if alpha.iter().flatten().any(|a| !a.is_finite()) {
            return Err(Error::invalid("coefficients must be finite"));
        }
        Ok(Self { label: label.into(), inputs, observables, alpha, eb_normalized, setting_coefficients: None })
    }

    pub fn with_setting_coefficients(mut self, s: SettingCoefficients) -> Result<Self> {
        if s.labels.len() != s.coefficients.len() {
            return Err(Error::invalid("setting labels and coefficients differ in length"));
        }
        self.setting_coefficients = Some(s);
        Ok(self)
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn inputs(&self) -> &[CMatrix] {
        &self.inputs
    }

    pub fn observables(&self) -> &[CMatrix] {
        &self.observables
    }

    pub fn alpha(&self) -> &[Vec<f64>] {
        &self.alpha
    }

    pub fn eb_normalized(&self) -> bool {
        self.eb_normalized
    }

    pub fn setting_coefficients(&self) -> Option<&SettingCoefficients> {
        self.setting_coefficients.as_ref()
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.inputs[0].rows(), self.observables[0].rows())
    }
}

pub fn payoff(game: &Game, n: &QuantumChannel) -> Result<PayoffResult> {
    let (d_a, d_b) = game.dims();
    if (n.d_in(), n.d_out()) != (d_a, d_b) {
        return Err(Error::invalid(format!(
            "game acts on {d_a}→{d_b} but channel is {}→{}",
            n.d_in(),
            n.d_out()
        )));
    }
    let mut per_setting = Vec::new();
    let mut total = 0.0;
    for (i, s) in game.inputs.iter().enumerate() {
        if game.alpha[i].iter().all(|a| *a == 0.0) {
            continue;
        }
        let out = n.apply(s)?;
        for (j, o) in game.observables.iter().enumerate() {
            let a = game.alpha[i][j];
            if a == 0.0 {
                continue;
            }
            let probability = out.inner(o);
            let weighted = a * probability;
            total += weighted;
            per_setting.push(SettingTerm { i, j, probability, weighted });
        }
    }
    Ok(PayoffResult { payoff: total, per_setting, robustness_lower_bound: total - 1.0, normalized: game.eb_normalized })
}

/// `W = d_A Σ_ij α_ij σ_iᵀ ⊗ O_j`.
pub fn game_to_witness(game: &Game) -> CMatrix {
    let (d_a, d_b) = game.dims();
    let mut w = CMatrix::zeros(d_a * d_b, d_a * d_b);
    for (i, s) in game.inputs.iter().enumerate() {
        let st = s.transpose();
        for (j, o) in game.observables.iter().enumerate() {
            let a = game.alpha[i][j];
            if a != 0.0 {
                w.axpy(d_a as f64 * a, &kron(&st, o));
            }
        }
    }
    w.symmetrized()
}

/// Rank-one projectors spanning the Hermitian `d×d` matrices:
/// `|k⟩⟨k|`, `(|j⟩+|k⟩)/√2` and `(|j⟩+i|k⟩)/√2` for `j < k`.
pub fn projector_frame(d: usize) -> Vec<CMatrix> {
    let mut out: Vec<CMatrix> = (0..d).map(|k| CMatrix::basis_projector(d, k)).collect();
    let h = std::f64::consts::FRAC_1_SQRT_2;
    for j in 0..d {
        for k in j + 1..d {
            for phase in [re(1.0), c(0.0, 1.0)] {
                let mut v = vec![C64::default(); d];
                v[j] = re(h);
                v[k] = phase * h;
                out.push(CMatrix::outer(&v, &v));
            }
        }
    }
    out
}

fn frame_dual(frame: &[CMatrix]) -> Result<Vec<Vec<f64>>> {
    let k = frame.len();
    let gram = CMatrix::from_fn(k, k, |a, b| re(frame[a].inner(&frame[b])));
    let inv = crate::linalg::hpd_inverse(&gram).ok_or_else(|| Error::Solver("projector frame Gram matrix is singular".into()))?;
    Ok((0..k).map(|a| (0..k).map(|b| inv[(a, b)].re).collect()).collect())
}

/// Game whose witness is exactly `w`, built on local projector frames.
///
/// Inputs are the transposed frame projectors on A, observables the frame
/// projectors on B, and `α = c/d_A` where `W = Σ c_ab P_a ⊗ Q_b`. The result
/// is flagged as not verified to be normalized.
pub fn witness_to_game(w: &CMatrix, dims: (usize, usize)) -> Result<Game> {
    let (d_a, d_b) = dims;
    if d_a == 0 || d_b == 0 || w.shape() != (d_a * d_b, d_a * d_b) {
        return Err(Error::invalid(format!("witness shape does not match dimensions {d_a}x{d_b}")));
    }
    let w = w.to_hermitian()?;
    let fa = projector_frame(d_a);
    let fb = projector_frame(d_b);
    let ga = frame_dual(&fa)?;
    let gb = frame_dual(&fb)?;
    // t_ab = ⟨P_a ⊗ Q_b, W⟩, then c = (G_A⁻¹ ⊗ G_B⁻¹) t
    let t: Vec<Vec<f64>> = fa.iter().map(|p| fb.iter().map(|q| kron(p, q).inner(&w)).collect()).collect();
    let (na, nb) = (fa.len(), fb.len());
    let mut tmp = vec![vec![0.0; nb]; na];
    for a in 0..na {
        for b in 0..nb {
            tmp[a][b] = (0..nb).map(|b2| gb[b][b2] * t[a][b2]).sum();
        }
    }
    let mut alpha = vec![vec![0.0; nb]; na];
    for a in 0..na {
        for b in 0..nb {
            alpha[a][b] = (0..na).map(|a2| ga[a][a2] * tmp[a2][b]).sum::<f64>() / d_a as f64;
        }
    }
    let inputs = fa.iter().map(|p| p.transpose()).collect();
    Game::new("witness", inputs, fb, alpha, false)
}

/// Game from the dual witness of a robustness solve; normalized by construction.
pub fn dual_game(r: &RobustnessResult, dims: (usize, usize)) -> Result<Game> {
    let w = r.witness.as_ref().ok_or_else(|| Error::invalid("robustness result carries no witness"))?;
    let mut g = witness_to_game(w, dims)?;
    g.label = format!("dual witness ({})", r.method.label());
    g.eb_normalized = true;
    Ok(g)
}

/// The explicit games that certify the dephasing/depolarizing, erasure and
/// damping robustness values.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CannedGame {
    /// Also the dephasing game.
    Depolarizing,
    Erasure,
    Damping(f64),
}

impl CannedGame {
    pub fn from_name(name: &str, p: Option<f64>) -> Result<Self> {
        match (name, p) {
            ("depolarizing" | "dephasing", _) => Ok(CannedGame::Depolarizing),
            ("erasure", _) => Ok(CannedGame::Erasure),
            ("damping", Some(p)) => Ok(CannedGame::Damping(p)),
            ("damping", None) => Err(Error::invalid("the damping game needs its parameter p")),
            (other, _) => Err(Error::invalid(format!("unknown game '{other}'"))),
        }
    }
}

/// `(α, β)` of the leading eigenvector `α|00⟩ + β|11⟩` of the damping Choi state.
pub fn damping_amplitudes(p: f64) -> (f64, f64) {
    let r = (1.0 - 2.0 * p + 5.0 * p * p).sqrt();
    let num = 1.0 - p + r;
    let norm = (num * num + 4.0 * p * p).sqrt();
    (num / norm, 2.0 * p / norm)
}

/// Largest eigenvalue `(1 + p + √(1−2p+5p²))/4` of the damping Choi state.
pub fn damping_lambda0(p: f64) -> f64 {
    (1.0 + p + (1.0 - 2.0 * p + 5.0 * p * p).sqrt()) / 4.0
}

fn embed_qutrit(m: &CMatrix) -> CMatrix {
    let mut out = CMatrix::zeros(3, 3);
    for i in 0..2 {
        for j in 0..2 {
            out[(i, j)] = m[(i, j)];
        }
    }
    out
}

fn depolarizing_inputs() -> Vec<CMatrix> {
    let r3 = 1.0 / 3f64.sqrt();
    vec![
        pauli::bloch_state([0.0, 0.0, 0.0]),
        pauli::bloch_state([1.0, 0.0, 0.0]),
        pauli::bloch_state([0.0, -1.0, 0.0]),
        pauli::bloch_state([0.0, 0.0, 1.0]),
        pauli::bloch_state([r3, r3, r3]),
    ]
}

pub fn canned_game(which: CannedGame) -> Result<Game> {
    bare_game(which)?.with_setting_coefficients(canned_settings_coefficients(which)?)
}

fn bare_game(which: CannedGame) -> Result<Game> {
    let s3 = 3f64.sqrt();
    match which {
        CannedGame::Depolarizing => {
            let inputs = depolarizing_inputs();
            let observables = inputs.iter().map(|s| s.transpose()).collect();
            let alpha = vec![
                vec![2.0 * s3, 0.0, 0.0, 0.0, -s3],
                vec![0.0, 1.0, 0.0, 0.0, 0.0],
                vec![0.0, 0.0, -1.0, 0.0, 0.0],
                vec![0.0, 0.0, 0.0, 1.0, 0.0],
                vec![-s3, 0.0, 0.0, 0.0, 0.0],
            ];
            Game::new("depolarizing", inputs, observables, alpha, true)
        }
        CannedGame::Erasure => {
            let inputs = depolarizing_inputs();
            let mut observables: Vec<CMatrix> = inputs.iter().map(|s| embed_qutrit(&s.transpose())).collect();
            observables.push(CMatrix::basis_projector(3, 2));
            let alpha = vec![
                vec![2.0 * s3, 0.0, 0.0, 0.0, -s3, 1.0],
                vec![0.0, 1.0, 0.0, 0.0, 0.0, 0.0],
                vec![0.0, 0.0, -1.0, 0.0, 0.0, 0.0],
                vec![0.0, 0.0, 0.0, 1.0, 0.0, 0.0],
                vec![-s3, 0.0, 0.0, 0.0, 0.0, 0.0],
            ];
            Game::new("erasure", inputs, observables, alpha, true)
        }
        CannedGame::Damping(p) => {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::invalid(format!("damping parameter p={p} outside [0, 1]")));
            }
            let (a, b) = damping_amplitudes(p);
            let h = std::f64::consts::FRAC_1_SQRT_2;
            let observables = vec![
                pauli::bloch_state([0.0, 0.0, 0.0]),
                pauli::bloch_state([1.0, 0.0, 0.0]),
                pauli::bloch_state([0.0, 1.0, 0.0]),
                pauli::bloch_state([0.0, 0.0, 1.0]),
                pauli::bloch_state([0.0, 0.0, -1.0]),
                pauli::bloch_state([h, -h, 0.0]),
            ];
            let inputs = observables.iter().map(|o| o.transpose()).collect();
            let r2 = 2f64.sqrt();
            let ab = a * b;
            let mut alpha = vec![vec![0.0; 6]; 6];
            alpha[0][0] = 4.0 * r2 * ab;
            alpha[0][5] = -2.0 * r2 * ab;
            alpha[5][0] = -2.0 * r2 * ab;
            alpha[1][1] = 2.0 * ab;
            alpha[2][2] = -2.0 * ab;
            alpha[3][3] = a * a;
            alpha[4][4] = b * b;
            Game::new(format!("damping({p})"), inputs, observables, alpha, true)
        }
    }
}

/// The measured settings of the experimental runs for each canned game.
pub fn canned_settings(which: CannedGame) -> Vec<Setting> {
    let ket0 = CMatrix::basis_projector(2, 0);
    let ket1 = CMatrix::basis_projector(2, 1);
    let set = |label: &str, input: &CMatrix, observable: &CMatrix| Setting { label: label.into(), input: input.clone(), observable: observable.clone() };
    match which {
        CannedGame::Depolarizing | CannedGame::Erasure => {
            let g = canned_game_unchecked(which);
            let (s, o) = (g.inputs(), g.observables());
            let mut out = vec![
                set("sigma1/O1", &s[1], &o[1]),
                set("sigma2/O2", &s[2], &o[2]),
                set("sigma3/O3", &s[3], &o[3]),
                set("|0>/O4", &ket0, &o[4]),
                set("|1>/O4", &ket1, &o[4]),
            ];
            if which == CannedGame::Erasure {
                out.push(set("|0>/|2>", &ket0, &o[5]));
                out.push(set("|1>/|2>", &ket1, &o[5]));
            }
            out
        }
        CannedGame::Damping(_) => {
            let g = canned_game_unchecked(which);
            let (s, o) = (g.inputs(), g.observables());
            vec![
                set("sigma1/O1", &s[1], &o[1]),
                set("sigma2/O2", &s[2], &o[2]),
                set("sigma3/O3", &s[3], &o[3]),
                set("sigma4/O4", &s[4], &o[4]),
                set("|0>/O5", &ket0, &o[5]),
                set("|1>/O5", &ket1, &o[5]),
            ]
        }
    }
}

fn canned_game_unchecked(which: CannedGame) -> Game {
    bare_game(match which {
        CannedGame::Damping(p) => CannedGame::Damping(p.clamp(0.0, 1.0)),
        other => other,
    })
    .expect("canned games are valid")
}

/// Per-setting coefficients that turn the measured setting probabilities of
/// [`canned_settings`] into the game score.
///
/// Terms whose observable is `I/2` contribute the constant `offset`. The
/// erasure game's `(σ₄, |2⟩)` term is not measured; its probability is taken
/// as the mean of the two `|2⟩` settings, which is exact for erasure channels.
pub fn canned_settings_coefficients(which: CannedGame) -> Result<SettingCoefficients> {
    let s3 = 3f64.sqrt();
    let labels = canned_settings(which).into_iter().map(|s| s.label).collect();
    let (coefficients, offset) = match which {
        CannedGame::Depolarizing => (vec![1.0, -1.0, 1.0, -s3 / 2.0, -s3 / 2.0], s3 / 2.0),
        CannedGame::Erasure => {
            let e = 0.5 - s3 / 4.0;
            (vec![1.0, -1.0, 1.0, -s3 / 2.0, -s3 / 2.0, e, e], s3 / 2.0)
        }
        CannedGame::Damping(p) => {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::invalid(format!("damping parameter p={p} outside [0, 1]")));
            }
            let (a, b) = damping_amplitudes(p);
            let r2 = 2f64.sqrt();
            (vec![2.0 * a * b, -2.0 * a * b, a * a, b * b, -r2 * a * b, -r2 * a * b], r2 * a * b)
        }
    };
    Ok(SettingCoefficients { labels, coefficients, offset })
}

/// `max{0, d·F − 1}` with `d` the dimension `u` acts on and `F = Tr[Φ_U Φ_Ũ]`.
pub fn gate_witness_bound(u: &CMatrix, empirical_choi_fidelity: f64) -> Result<f64> {
    if !u.is_square() || crate::linalg::unitarity_defect(u) > 1e-9 {
        return Err(Error::invalid("gate must be a unitary matrix"));
    }
    if !(0.0..=1.0).contains(&empirical_choi_fidelity) {
        return Err(Error::invalid(format!("fidelity {empirical_choi_fidelity} outside [0, 1]")));
    }
    Ok((u.rows() as f64 * empirical_choi_fidelity - 1.0).max(0.0))
}

/// `Tr[Φ_U Φ_N]` for a target unitary and an implemented channel.
pub fn choi_fidelity(u: &CMatrix, n: &QuantumChannel) -> Result<f64> {
    let target = QuantumChannel::unitary(u)?;
    if (target.d_in(), target.d_out()) != (n.d_in(), n.d_out()) {
        return Err(Error::invalid("gate and channel dimensions differ"));
    }
    Ok(target.choi().matrix().inner(n.choi().matrix()))
}

/// Controlled-NOT with control on the first qubit.
pub fn cx() -> CMatrix {
    CMatrix::from_real_rows(&[&[1.0, 0.0, 0.0, 0.0], &[0.0, 1.0, 0.0, 0.0], &[0.0, 0.0, 0.0, 1.0], &[0.0, 0.0, 1.0, 0.0]])
}

/// `CX₁₂ · CX₀₁ · (H ⊗ I ⊗ I)`, the three-qubit GHZ preparation circuit.
pub fn ghz_circuit() -> CMatrix {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let had = CMatrix::from_real_rows(&[&[h, h], &[h, -h]]);
    let i2 = CMatrix::identity(2);
    let first = kron(&kron(&had, &i2), &i2);
    let cx01 = kron(&cx(), &i2);
    let cx12 = kron(&i2, &cx());
    cx12.matmul(&cx01).matmul(&first)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channels::{family, Family};
    use crate::linalg::max_entangled;

    #[test]
    fn depolarizing_witness_is_two_phi_plus() {
        let w = game_to_witness(&canned_game(CannedGame::Depolarizing).unwrap());
        assert!((&w - &max_entangled(2).scale(2.0)).max_abs() < 1e-12);
    }

    #[test]
    fn erasure_witness() {
        let w = game_to_witness(&canned_game(CannedGame::Erasure).unwrap());
        let mut expect = CMatrix::zeros(6, 6);
        // 2Φ⁺ on the qubit part of the 2x3 space plus I ⊗ |2⟩⟨2|
        for (i, j) in [(0, 0), (0, 4), (4, 0), (4, 4)] {
            expect[(i, j)] = re(1.0);
        }
        expect[(2, 2)] = re(1.0);
        expect[(5, 5)] = re(1.0);
        assert!((&w - &expect).max_abs() < 1e-12);
    }

    #[test]
    fn damping_witness_is_two_psi0() {
        for p in [0.0, 0.25, 0.6, 1.0] {
            let (a, b) = damping_amplitudes(p);
            let v = [re(a), re(0.0), re(0.0), re(b)];
            let expect = CMatrix::outer(&v, &v).scale(2.0);
            let w = game_to_witness(&canned_game(CannedGame::Damping(p)).unwrap());
            assert!((&w - &expect).max_abs() < 1e-12, "p={p}");
        }
    }

    #[test]
    fn theory_scores() {
        let ps = [0.25, 0.5, 0.75, 1.0];
        let deph = canned_game(CannedGame::Depolarizing).unwrap();
        let era = canned_game(CannedGame::Erasure).unwrap();
        for (k, p) in ps.iter().enumerate() {
            let v = payoff(&deph, &family(Family::Dephasing { p: *p }).unwrap()).unwrap().payoff;
            assert!((v - [0.5, 1.0, 1.5, 2.0][k]).abs() < 1e-12);
            let v = payoff(&era, &family(Family::Erasure { p: *p }).unwrap()).unwrap().payoff;
            assert!((v - [1.25, 1.5, 1.75, 2.0][k]).abs() < 1e-12);
            let g = canned_game(CannedGame::Damping(*p)).unwrap();
            let v = payoff(&g, &family(Family::Damping { p: *p }).unwrap()).unwrap().payoff;
            assert!((v - [1.0757, 1.3090, 1.6353, 2.0][k]).abs() < 1e-4, "{v}");
            assert!((v - 2.0 * damping_lambda0(*p)).abs() < 1e-12);
        }
    }

    #[test]
    fn canned_examples() {
        let g = canned_game(CannedGame::Depolarizing).unwrap();
        let r = payoff(&g, &family(Family::Identity { d: 2 }).unwrap()).unwrap();
        assert!((r.payoff - 2.0).abs() < 1e-12);
        assert!((r.robustness_lower_bound - 1.0).abs() < 1e-12);
        let sum: f64 = r.per_setting.iter().map(|t| t.weighted).sum();
        assert!((sum - r.payoff).abs() < 1e-12);
        let e = canned_game(CannedGame::Erasure).unwrap();
        let v = payoff(&e, &family(Family::Erasure { p: 0.0 }).unwrap()).unwrap().payoff;
        assert!((v - 1.0).abs() < 1e-12);
        assert!(canned_game(CannedGame::Damping(1.5)).is_err());
        assert!(CannedGame::from_name("nope", None).is_err());
        assert!(payoff(&e, &family(Family::Identity { d: 2 }).unwrap()).is_err());
    }

    #[test]
    fn setting_vectors_reproduce_payoff_for_family_channels() {
        for p in [0.0, 0.25, 0.5, 0.75, 1.0] {
            let cases = [
                (CannedGame::Depolarizing, family(Family::Dephasing { p }).unwrap()),
                (CannedGame::Depolarizing, family(Family::Depolarizing { p }).unwrap()),
                (CannedGame::Erasure, family(Family::Erasure { p }).unwrap()),
                (CannedGame::Damping(p), family(Family::Damping { p }).unwrap()),
            ];
            for (which, n) in cases {
                let g = canned_game(which).unwrap();
                let probs: Vec<f64> = canned_settings(which).iter().map(|s| s.probability(&n).unwrap()).collect();
                let score = g.setting_coefficients().unwrap().score(&probs).unwrap();
                let exact = payoff(&g, &n).unwrap().payoff;
                assert!((score - exact).abs() < 1e-12, "{which:?} p={p}: {score} vs {exact}");
            }
        }
    }

    #[test]
    fn witness_game_trivial_cases() {
        let n = family(Family::Damping { p: 0.3 }).unwrap();
        let g = witness_to_game(&CMatrix::identity(4), (2, 2)).unwrap();
        assert!((payoff(&g, &n).unwrap().payoff - 1.0).abs() < 1e-10);
        assert!(!g.eb_normalized());
        let z = witness_to_game(&CMatrix::zeros(4, 4), (2, 2)).unwrap();
        assert!(payoff(&z, &n).unwrap().payoff.abs() < 1e-12);
        let w = max_entangled(2).scale(2.0);
        let g = witness_to_game(&w, (2, 2)).unwrap();
        let canned = canned_game(CannedGame::Depolarizing).unwrap();
        for f in [Family::Dephasing { p: 0.7 }, Family::Damping { p: 0.4 }, Family::Identity { d: 2 }] {
            let ch = family(f).unwrap();
            assert!((payoff(&g, &ch).unwrap().payoff - payoff(&canned, &ch).unwrap().payoff).abs() < 1e-10);
        }
        assert!((&game_to_witness(&g) - &w).max_abs() < 1e-12);
    }

    #[test]
    fn gate_bounds() {
        assert!((gate_witness_bound(&cx(), 1.0).unwrap() - 3.0).abs() < 1e-12);
        assert!((gate_witness_bound(&cx(), 0.9168).unwrap() - 2.667).abs() < 1e-3);
        assert!((gate_witness_bound(&ghz_circuit(), 0.8546).unwrap() - 5.837).abs() < 1e-3);
        assert!(gate_witness_bound(&cx(), 1.2).is_err());
        let ideal = QuantumChannel::unitary(&ghz_circuit()).unwrap();
        assert!((choi_fidelity(&ghz_circuit(), &ideal).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn invalid_games_rejected() {
        let s = vec![CMatrix::identity(2)];
        let o = vec![CMatrix::identity(2)];
        assert!(Game::new("x", s, o.clone(), vec![vec![1.0]], false).is_err());
        let s = vec![CMatrix::identity(2).scale(0.5)];
        assert!(Game::new("x", s.clone(), vec![CMatrix::identity(2).scale(2.0)], vec![vec![1.0]], false).is_err());
        assert!(Game::new("x", s, o, vec![vec![1.0, 2.0]], false).is_err());
    }
}
