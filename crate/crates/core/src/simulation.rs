//! Operational uses of a robustness decomposition `N = (1+s)M₊ − sM₋`:
//! quasi-probability simulation of measurement statistics and the
//! super-channel that synthesises `N` from an ideal memory.

use rand::distributions::{Distribution, WeightedIndex};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::channels::{ChoiState, QuantumChannel};
use crate::error::{Error, Result};
use crate::linalg::{herm_eig, max_entangled, CMatrix};
use crate::robustness::{robustness_ppt, Variant, CEIL_NUDGE};

/// Robustness values below this are treated as exactly zero.
pub const ZERO_ROBUSTNESS: f64 = CEIL_NUDGE;
/// Shots per independently seeded batch.
pub const SHOT_BATCH: u64 = 4096;

#[derive(Debug, Clone)]
pub struct QuasiDecomposition {
    pub s: f64,
    pub m_plus: QuantumChannel,
    pub m_minus: QuantumChannel,
    pub one_norm: f64,
    pub overhead: f64,
    /// True when the components are PPT in total dimension ≤ 6, hence
    /// genuinely entanglement breaking. Otherwise they are only PPT.
    pub classical_certified: bool,
}

impl QuasiDecomposition {
    pub fn new(s: f64, m_plus: QuantumChannel, m_minus: QuantumChannel) -> Result<Self> {
        if !(s >= 0.0) || !s.is_finite() {
            return Err(Error::invalid(format!("quasi-probability weight s={s} must be finite and non-negative")));
        }
        if (m_plus.d_in(), m_plus.d_out()) != (m_minus.d_in(), m_minus.d_out()) {
            return Err(Error::invalid("decomposition components differ in dimension"));
        }
        let one_norm = 2.0 * s + 1.0;
        let classical_certified = m_plus.d_in() * m_plus.d_out() <= 6;
        Ok(Self { s, m_plus, m_minus, one_norm, overhead: one_norm * one_norm, classical_certified })
    }

    /// `(1+s)Φ₊ − sΦ₋`.
    pub fn reconstructed_choi(&self) -> CMatrix {
        &self.m_plus.choi().matrix().scale(1.0 + self.s) - &self.m_minus.choi().matrix().scale(self.s)
    }
}

/// Quasi-probability decomposition from the standard PPT robustness program.
pub fn decompose(n: &QuantumChannel) -> Result<QuasiDecomposition> {
    let r = robustness_ppt(n, Variant::Standard)?;
    let dec = r.decomposition.ok_or_else(|| Error::Solver("robustness program returned no decomposition".into()))?;
    let m_minus = QuantumChannel::from_choi(dec.m);
    if r.value <= ZERO_ROBUSTNESS {
        return QuasiDecomposition::new(0.0, n.clone(), m_minus);
    }
    QuasiDecomposition::new(r.value, QuantumChannel::from_choi(dec.m_prime), m_minus)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Estimate {
    pub estimate: f64,
    pub std_error: f64,
    pub shots: u64,
    pub overhead: f64,
}

/// Unbiased estimate of `Tr[O N(ρ)]` by sign sampling.
///
/// Each shot picks `M₊` with probability `(1+s)/(2s+1)` or `M₋` otherwise,
/// draws an eigen-outcome of `O` from the chosen component's output, and
/// records `±(2s+1)·o`. Shots run in batches of [`SHOT_BATCH`], batch `b`
/// using the ChaCha8 stream `b` of `seed`, so results are reproducible
/// regardless of thread count.
pub fn sample_estimate(dec: &QuasiDecomposition, rho: &CMatrix, observable: &CMatrix, shots: u64, seed: u64) -> Result<Estimate> {
    if shots == 0 {
        return Err(Error::invalid("shots must be at least 1"));
    }
    let d_in = dec.m_plus.d_in();
    let d_out = dec.m_plus.d_out();
    if rho.shape() != (d_in, d_in) || observable.shape() != (d_out, d_out) {
        return Err(Error::invalid(format!(
            "state must be {d_in}x{d_in} and observable {d_out}x{d_out}"
        )));
    }
    let oe = herm_eig(observable)?;
    let norm = oe.values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if norm > 1.0 + 1e-12 {
        return Err(Error::invalid(format!("observable has spectral norm {norm} > 1")));
    }
    let outcome_weights = |out: &CMatrix| -> Result<WeightedIndex<f64>> {
        let w: Vec<f64> = (0..d_out)
            .map(|k| {
                let v = oe.vectors.column(k);
                let ov = out.matvec(&v);
                v.iter().zip(&ov).map(|(a, b)| (a.conj() * b).re).sum::<f64>().max(0.0)
            })
            .collect();
        WeightedIndex::new(w).map_err(|e| Error::Solver(format!("degenerate outcome distribution: {e}")))
    };
    let plus = outcome_weights(&dec.m_plus.apply(rho)?)?;
    let minus = outcome_weights(&dec.m_minus.apply(rho)?)?;
    let p_plus = (1.0 + dec.s) / dec.one_norm;
    let c1 = dec.one_norm;
    let values = &oe.values;

    let batches = shots.div_ceil(SHOT_BATCH);
    let partial: Vec<(f64, f64)> = (0..batches)
        .into_par_iter()
        .map(|b| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(b);
            let count = SHOT_BATCH.min(shots - b * SHOT_BATCH);
            let (mut sum, mut sq) = (0.0, 0.0);
            for _ in 0..count {
                let x = if rng.gen::<f64>() < p_plus { c1 * values[plus.sample(&mut rng)] } else { -c1 * values[minus.sample(&mut rng)] };
                sum += x;
                sq += x * x;
            }
            (sum, sq)
        })
        .collect();
    let (sum, sq) = partial.iter().fold((0.0, 0.0), |a, b| (a.0 + b.0, a.1 + b.1));
    let n = shots as f64;
    let mean = sum / n;
    let var = if shots > 1 { ((sq - n * mean * mean) / (n - 1.0)).max(0.0) } else { 0.0 };
    Ok(Estimate { estimate: mean, std_error: (var / n).sqrt(), shots, overhead: dec.overhead })
}

/// `Λ(Φ_C) = Tr[φ⁺Φ_C]·Φ_target + (1 − Tr[φ⁺Φ_C])·Φ_filler` on `d_c → d_c` probes.
#[derive(Debug, Clone)]
pub struct SuperChannel {
    pub target: ChoiState,
    pub filler: ChoiState,
    pub probe_dimension: usize,
}

impl SuperChannel {
    pub fn apply(&self, probe: &ChoiState) -> Result<ChoiState> {
        let d = self.probe_dimension;
        if probe.dims() != (d, d) {
            return Err(Error::invalid(format!("probe must be a {d}→{d} channel")));
        }
        let f = max_entangled(d).inner(probe.matrix());
        let m = &self.target.matrix().scale(f) + &self.filler.matrix().scale(1.0 - f);
        let (da, db) = self.target.dims();
        ChoiState::new(da, db, m)
    }
}

/// The free super-channel that turns an ideal `d_c`-dimensional memory into
/// `n_target`, with `d_c = 1 + ⌈R*⌉`.
pub fn synthesis_superchannel(n_target: &QuantumChannel) -> Result<SuperChannel> {
    let r = robustness_ppt(n_target, Variant::Standard)?;
    let dec = r.decomposition.ok_or_else(|| Error::Solver("robustness program returned no decomposition".into()))?;
    let k = (r.value - CEIL_NUDGE).ceil().max(0.0) as usize;
    Ok(SuperChannel { target: n_target.choi().clone(), filler: dec.m, probe_dimension: 1 + k })
}
