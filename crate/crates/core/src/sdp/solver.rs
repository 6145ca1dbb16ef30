//! Infeasible primal-dual path following with the HKM direction and
//! Mehrotra predictor-corrector steps, in native complex arithmetic.

use super::{IterationRecord, SdpOptions, SdpProblem, SdpSolution, SdpStatus, SparseHerm};
use crate::error::{Error, Result};
use crate::linalg::{cholesky, herm_eig_unchecked, hpd_inverse, lower_triangular_inverse, CMatrix};

/// Squared residual below which a normalized constraint row counts as redundant.
const REDUNDANT_ROW_TOL: f64 = 1e-12;
/// Objective magnitude treated as divergence (infeasibility certificate).
const DIVERGENCE: f64 = 1e8;
const STEP_FRACTION: f64 = 0.95;
const REFINEMENT_ROUNDS: usize = 2;
const STALL_ITERATIONS: usize = 20;

struct Row {
    terms: Vec<(usize, SparseHerm)>,
    rhs: f64,
}

struct Prepared {
    rows: Vec<Row>,
    /// original index and scale of each kept row
    kept: Vec<(usize, f64)>,
    /// per block: (row, term) pairs touching it
    by_block: Vec<Vec<(usize, usize)>>,
}

enum Prep {
    Ready(Prepared),
    Inconsistent(String),
}

fn sparse_dot(a: &SparseHerm, b: &SparseHerm) -> f64 {
    // entries are canonical (sorted, unique)
    let (ea, eb) = (a.entries(), b.entries());
    let (mut i, mut j, mut acc) = (0, 0, 0.0);
    while i < ea.len() && j < eb.len() {
        let ka = (ea[i].0, ea[i].1);
        let kb = (eb[j].0, eb[j].1);
        match ka.cmp(&kb) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                acc += (ea[i].2.conj() * eb[j].2).re;
                i += 1;
                j += 1;
            }
        }
    }
    acc
}

fn merge_terms(terms: &[(usize, SparseHerm)]) -> Vec<(usize, SparseHerm)> {
    let mut out: Vec<(usize, SparseHerm)> = Vec::new();
    for (b, a) in terms {
        match out.iter_mut().find(|(ob, _)| ob == b) {
            Some((_, acc)) => {
                let mut merged = acc.clone();
                merged.entries.extend_from_slice(a.entries());
                *acc = merged.canonical();
            }
            None => out.push((*b, a.canonical())),
        }
    }
    out.retain(|(_, a)| !a.entries().is_empty());
    out
}

fn row_dot(a: &[(usize, SparseHerm)], b: &[(usize, SparseHerm)]) -> f64 {
    let mut acc = 0.0;
    for (ba, ma) in a {
        for (bb, mb) in b {
            if ba == bb {
                acc += sparse_dot(ma, mb);
            }
        }
    }
    acc
}

/// Normalizes rows and drops linearly dependent ones by pivoted Cholesky of
/// the Gram matrix. Dropped rows must have consistent right-hand sides.
fn prepare(problem: &SdpProblem) -> Prep {
    let mut rows = Vec::new();
    let mut scales = Vec::new();
    for (idx, c) in problem.constraints().iter().enumerate() {
        let terms = merge_terms(&c.terms);
        let norm = row_dot(&terms, &terms).sqrt();
        if norm == 0.0 {
            if c.rhs.abs() > 1e-12 {
                return Prep::Inconsistent(format!("constraint {idx} has zero coefficients but rhs {}", c.rhs));
            }
            continue;
        }
        let terms = terms.into_iter().map(|(b, a)| (b, a.scaled(1.0 / norm))).collect();
        rows.push((idx, Row { terms, rhs: c.rhs / norm }));
        scales.push(norm);
    }
    let m = rows.len();
    let mut gram = vec![0.0; m * m];
    for i in 0..m {
        for j in 0..=i {
            let g = row_dot(&rows[i].1.terms, &rows[j].1.terms);
            gram[i * m + j] = g;
            gram[j * m + i] = g;
        }
    }
    // pivoted Cholesky
    let mut diag: Vec<f64> = (0..m).map(|i| gram[i * m + i]).collect();
    let mut chosen: Vec<usize> = Vec::new();
    let mut lcols: Vec<Vec<f64>> = Vec::new();
    let mut remaining: Vec<usize> = (0..m).collect();
    loop {
        let Some((pos, &piv)) = remaining.iter().enumerate().max_by(|a, b| diag[*a.1].total_cmp(&diag[*b.1]).then(b.1.cmp(a.1))) else {
            break;
        };
        if diag[piv] < REDUNDANT_ROW_TOL {
            break;
        }
        remaining.swap_remove(pos);
        let d = diag[piv].sqrt();
        let mut col = vec![0.0; m];
        for &r in &remaining {
            let mut v = gram[r * m + piv];
            for prev in &lcols {
                v -= prev[r] * prev[piv];
            }
            col[r] = v / d;
            diag[r] -= col[r] * col[r];
        }
        col[piv] = d;
        chosen.push(piv);
        lcols.push(col);
    }
    chosen.sort_unstable();
    if !remaining.is_empty() {
        let k = chosen.len();
        let mut gkk = vec![0.0; k * k];
        for (a, &i) in chosen.iter().enumerate() {
            for (b, &j) in chosen.iter().enumerate() {
                gkk[a * k + b] = gram[i * m + j];
            }
        }
        let factor = RealCholesky::new(&gkk, k);
        for &r in &remaining {
            let g: Vec<f64> = chosen.iter().map(|&i| gram[i * m + r]).collect();
            let coeffs = match &factor {
                Some(f) => f.solve(&g),
                None => vec![0.0; k],
            };
            let implied: f64 = coeffs.iter().zip(&chosen).map(|(c, &i)| c * rows[i].1.rhs).sum();
            if (implied - rows[r].1.rhs).abs() > 1e-8 * (1.0 + rows[r].1.rhs.abs()) {
                return Prep::Inconsistent(format!(
                    "constraint {} is a combination of others with an inconsistent right-hand side",
                    rows[r].0
                ));
            }
        }
    }
    let mut kept = Vec::with_capacity(chosen.len());
    let mut kept_rows = Vec::with_capacity(chosen.len());
    let original: Vec<usize> = rows.iter().map(|(i, _)| *i).collect();
    let mut taken: Vec<Option<Row>> = rows.into_iter().map(|(_, r)| Some(r)).collect();
    for &i in &chosen {
        kept.push((original[i], scales[i]));
        kept_rows.push(taken[i].take().expect("row used once"));
    }
    let mut by_block = vec![Vec::new(); problem.blocks().len()];
    for (ri, row) in kept_rows.iter().enumerate() {
        for (ti, (b, _)) in row.terms.iter().enumerate() {
            by_block[*b].push((ri, ti));
        }
    }
    Prep::Ready(Prepared { rows: kept_rows, kept, by_block })
}

/// Dense real Cholesky factor, row-major lower triangle.
struct RealCholesky {
    n: usize,
    l: Vec<f64>,
}

impl RealCholesky {
    fn new(a: &[f64], n: usize) -> Option<Self> {
        let mut l = vec![0.0; n * n];
        for j in 0..n {
            let mut d = a[j * n + j];
            for k in 0..j {
                d -= l[j * n + k] * l[j * n + k];
            }
            if !(d > 0.0) || !d.is_finite() {
                return None;
            }
            let d = d.sqrt();
            l[j * n + j] = d;
            for i in j + 1..n {
                let mut v = a[i * n + j];
                for k in 0..j {
                    v -= l[i * n + k] * l[j * n + k];
                }
                l[i * n + j] = v / d;
            }
        }
        Some(Self { n, l })
    }

    /// Factorizes `a + δI`, raising δ until the factorization succeeds.
    fn regularized(a: &[f64], n: usize) -> Option<Self> {
        if let Some(f) = Self::new(a, n) {
            return Some(f);
        }
        let scale = (0..n).map(|i| a[i * n + i].abs()).fold(0.0, f64::max).max(1e-300);
        let mut delta = 1e-14 * scale;
        for _ in 0..8 {
            let mut b = a.to_vec();
            for i in 0..n {
                b[i * n + i] += delta;
            }
            if let Some(f) = Self::new(&b, n) {
                return Some(f);
            }
            delta *= 10.0;
        }
        None
    }

    fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.n;
        let mut x = b.to_vec();
        for i in 0..n {
            let mut v = x[i];
            for k in 0..i {
                v -= self.l[i * n + k] * x[k];
            }
            x[i] = v / self.l[i * n + i];
        }
        for i in (0..n).rev() {
            let mut v = x[i];
            for k in i + 1..n {
                v -= self.l[k * n + i] * x[k];
            }
            x[i] = v / self.l[i * n + i];
        }
        x
    }
}

/// Largest α with `X + αΔX ⪰ 0` (∞ when ΔX keeps X inside the cone).
fn max_step(x: &CMatrix, dx: &CMatrix) -> f64 {
    let Some(l) = cholesky(x) else { return 0.0 };
    let li = lower_triangular_inverse(&l);
    let w = li.matmul(dx).matmul(&li.adjoint()).symmetrized();
    let lmin = herm_eig_unchecked(&w).min();
    if lmin >= 0.0 {
        f64::INFINITY
    } else {
        -1.0 / lmin
    }
}

fn inner_blocks(a: &[CMatrix], b: &[CMatrix]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x.inner(y)).sum()
}

struct State {
    x: Vec<CMatrix>,
    z: Vec<CMatrix>,
    y: Vec<f64>,
}

struct Metrics {
    pobj: f64,
    dobj: f64,
    gap: f64,
    pres: f64,
    dres: f64,
    relgap: f64,
}

impl Metrics {
    fn score(&self) -> f64 {
        self.relgap.max(self.pres).max(self.dres)
    }
}

struct Engine<'a> {
    problem: &'a SdpProblem,
    prep: &'a Prepared,
    c_norm: f64,
}

impl Engine<'_> {
    fn apply_rows(&self, v: &[CMatrix]) -> Vec<f64> {
        self.prep.rows.iter().map(|r| r.terms.iter().map(|(b, a)| a.inner(&v[*b])).sum()).collect()
    }

    fn adjoint(&self, y: &[f64]) -> Vec<CMatrix> {
        let mut out: Vec<CMatrix> = self.problem.blocks().iter().map(|b| CMatrix::zeros(b.side, b.side)).collect();
        for (row, &yi) in self.prep.rows.iter().zip(y) {
            for (b, a) in &row.terms {
                for &(r, s, v) in a.entries() {
                    out[*b][(r, s)] += v * yi;
                }
            }
        }
        out
    }

    fn metrics(&self, st: &State) -> Metrics {
        let c = self.problem.objective();
        let pobj = inner_blocks(c, &st.x);
        let dobj: f64 = self.prep.rows.iter().zip(&st.y).map(|(r, y)| r.rhs * y).sum();
        let gap = inner_blocks(&st.x, &st.z);
        let values = self.problem.constraint_values(&st.x);
        let pres = self.problem.constraints().iter().zip(&values).map(|(c, v)| (v - c.rhs).abs()).fold(0.0, f64::max);
        let aty = self.adjoint(&st.y);
        let mut dres_sq = 0.0;
        for b in 0..c.len() {
            let r = &(&c[b] - &st.z[b]) - &aty[b];
            dres_sq += r.frobenius_norm().powi(2);
        }
        let dres = dres_sq.sqrt() / (1.0 + self.c_norm);
        let relgap = (pobj - dobj).abs() / (1.0 + pobj.abs() + dobj.abs());
        Metrics { pobj, dobj, gap, pres, dres, relgap }
    }

    /// Schur complement `M_ij = Re Tr[A_i X A_j Z⁻¹]`.
    fn schur(&self, x: &[CMatrix], zinv: &[CMatrix]) -> Vec<f64> {
        let m = self.prep.rows.len();
        let mut out = vec![0.0; m * m];
        for (b, touching) in self.prep.by_block.iter().enumerate() {
            let n = x[b].rows();
            let mut g = CMatrix::zeros(n, n);
            for (jpos, &(j, tj)) in touching.iter().enumerate() {
                g.data_mut().iter_mut().for_each(|v| *v = Default::default());
                for &(r, s, v) in self.prep.rows[j].terms[tj].1.entries() {
                    for p in 0..n {
                        let xr = x[b][(p, r)] * v;
                        if xr.norm_sqr() == 0.0 {
                            continue;
                        }
                        for q in 0..n {
                            g[(p, q)] += xr * zinv[b][(s, q)];
                        }
                    }
                }
                for &(i, ti) in &touching[jpos..] {
                    let val: f64 = self.prep.rows[i].terms[ti].1.entries().iter().map(|&(r, s, v)| (v * g[(s, r)]).re).sum();
                    out[i * m + j] += val;
                    if i != j {
                        out[j * m + i] += val;
                    }
                }
            }
        }
        out
    }

    /// HKM direction for target `σμ` with optional second-order correction.
    #[allow(clippy::too_many_arguments)]
    fn direction(
        &self,
        st: &State,
        zinv: &[CMatrix],
        rp: &[f64],
        rd: &[CMatrix],
        schur: &RealCholesky,
        sigma_mu: f64,
        corr: Option<&[CMatrix]>,
    ) -> (Vec<CMatrix>, Vec<f64>, Vec<CMatrix>) {
        let nb = st.x.len();
        let mut base = Vec::with_capacity(nb);
        for b in 0..nb {
            let mut t = zinv[b].scale(sigma_mu);
            t -= &st.x[b];
            let mut inner = st.x[b].matmul(&rd[b]);
            if let Some(cr) = corr {
                inner += &cr[b];
            }
            t -= &inner.matmul(&zinv[b]);
            base.push(t);
        }
        let abase = self.apply_rows(&base);
        let rhs: Vec<f64> = rp.iter().zip(&abase).map(|(r, a)| r - a).collect();
        let mut dy = schur.solve(&rhs);
        let atdy = self.adjoint(&dy);
        let mut dz = Vec::with_capacity(nb);
        let mut dx = Vec::with_capacity(nb);
        for b in 0..nb {
            let dzb = &rd[b] - &atdy[b];
            let mut t = zinv[b].scale(sigma_mu);
            t -= &st.x[b];
            let mut inner = st.x[b].matmul(&dzb);
            if let Some(cr) = corr {
                inner += &cr[b];
            }
            t -= &inner.matmul(&zinv[b]);
            dx.push(t.symmetrized());
            dz.push(dzb.symmetrized());
        }
        // Near the optimum the Schur matrix is badly conditioned and `A·ΔX`
        // drifts from `r_p`; refine against the operator itself.
        for _ in 0..REFINEMENT_ROUNDS {
            let adx = self.apply_rows(&dx);
            let r: Vec<f64> = rp.iter().zip(&adx).map(|(a, b)| a - b).collect();
            if r.iter().all(|v| v.abs() <= f64::EPSILON) {
                break;
            }
            let delta = schur.solve(&r);
            let atd = self.adjoint(&delta);
            for b in 0..nb {
                dx[b] += &st.x[b].matmul(&atd[b]).matmul(&zinv[b]).symmetrized();
                dz[b] -= &atd[b];
            }
            dy.iter_mut().zip(&delta).for_each(|(a, d)| *a += d);
        }
        (dx, dy, dz)
    }
}

fn step_length(current: &[CMatrix], delta: &[CMatrix]) -> f64 {
    current.iter().zip(delta).map(|(x, d)| max_step(x, d)).fold(f64::INFINITY, f64::min)
}

/// Solves the program; see the module docs for the standard form.
///
/// Returns `Err` only for malformed input or a numerical breakdown;
/// infeasibility and iteration exhaustion are reported through the status.
pub fn solve(problem: &SdpProblem, options: &SdpOptions) -> Result<SdpSolution> {
    if problem.total_dimension() > super::MAX_TOTAL_DIMENSION {
        return Err(Error::Capacity(format!(
            "total SDP dimension {} exceeds {}",
            problem.total_dimension(),
            super::MAX_TOTAL_DIMENSION
        )));
    }
    if !(options.tol > 0.0) || options.max_iter == 0 {
        return Err(Error::invalid("solver tolerance must be positive and max_iter at least 1"));
    }
    let blocks = problem.blocks();
    let n_total: usize = blocks.iter().map(|b| b.side).sum();
    let zero_blocks = || -> Vec<CMatrix> { blocks.iter().map(|b| CMatrix::zeros(b.side, b.side)).collect() };
    let prep = match prepare(problem) {
        Prep::Ready(p) => p,
        Prep::Inconsistent(msg) => {
            return Ok(SdpSolution {
                status: SdpStatus::Infeasible,
                primal_value: f64::NAN,
                dual_value: f64::INFINITY,
                primal_blocks: zero_blocks(),
                dual_slacks: zero_blocks(),
                dual_multipliers: vec![0.0; problem.num_constraints()],
                iterations: 0,
                primal_residual: f64::INFINITY,
                dual_residual: f64::INFINITY,
                message: msg,
                history: Vec::new(),
            })
        }
    };
    let c_norm = problem.objective().iter().map(|c| c.frobenius_norm().powi(2)).sum::<f64>().sqrt();
    let engine = Engine { problem, prep: &prep, c_norm };
    let scale = options.initial_scale.unwrap_or(1.0 + c_norm);
    if !(scale > 0.0) {
        return Err(Error::invalid("initial scale must be positive"));
    }
    let mut st = State {
        x: blocks.iter().map(|b| CMatrix::identity(b.side).scale(scale)).collect(),
        z: blocks.iter().map(|b| CMatrix::identity(b.side).scale(scale)).collect(),
        y: vec![0.0; prep.rows.len()],
    };
    let rhs: Vec<f64> = prep.rows.iter().map(|r| r.rhs).collect();
    let mut history = Vec::new();
    let mut best: Option<(f64, Vec<CMatrix>, Vec<CMatrix>, Vec<f64>)> = None;
    let mut last_steps = (0.0, 0.0);
    let mut status = SdpStatus::MaxIterations;
    let mut message = String::from("iteration limit reached");
    let mut iterations = 0;
    let mut since_best = 0;

    for iter in 0..=options.max_iter {
        let met = engine.metrics(&st);
        if options.record_history {
            history.push(IterationRecord {
                iteration: iter,
                primal_objective: met.pobj,
                dual_objective: met.dobj,
                complementarity: met.gap,
                primal_residual: met.pres,
                dual_residual: met.dres,
                step_primal: last_steps.0,
                step_dual: last_steps.1,
            });
        }
        iterations = iter;
        if best.as_ref().map_or(true, |b| met.score() <= b.0) {
            best = Some((met.score(), st.x.clone(), st.z.clone(), st.y.clone()));
            since_best = 0;
        } else {
            since_best += 1;
        }
        if met.pres <= options.tol && met.dres <= options.tol && met.relgap <= options.tol {
            status = SdpStatus::Optimal;
            message = "converged".into();
            best = None;
            break;
        }
        if met.dobj > DIVERGENCE && met.dres <= options.tol.sqrt() {
            status = SdpStatus::Infeasible;
            message = format!("dual objective diverged ({:.3e}): primal infeasible", met.dobj);
            best = None;
            break;
        }
        if met.pobj < -DIVERGENCE && met.pres <= options.tol.sqrt() {
            status = SdpStatus::Infeasible;
            message = format!("primal objective diverged ({:.3e}): dual infeasible", met.pobj);
            best = None;
            break;
        }
        if iter == options.max_iter {
            break;
        }
        if since_best > STALL_ITERATIONS {
            message = format!("stalled: no progress in {STALL_ITERATIONS} iterations");
            break;
        }

        let mut zinv = Vec::with_capacity(blocks.len());
        for z in &st.z {
            zinv.push(hpd_inverse(z).ok_or_else(|| Error::Solver(format!("dual slack lost definiteness at iteration {iter}")))?);
        }
        let ax = engine.apply_rows(&st.x);
        let rp: Vec<f64> = rhs.iter().zip(&ax).map(|(b, a)| b - a).collect();
        let aty = engine.adjoint(&st.y);
        let rd: Vec<CMatrix> = (0..blocks.len()).map(|b| &(&problem.objective()[b] - &st.z[b]) - &aty[b]).collect();
        let mu = met.gap / n_total as f64;
        let m = prep.rows.len();
        let schur = RealCholesky::regularized(&engine.schur(&st.x, &zinv), m)
            .ok_or_else(|| Error::Solver(format!("Schur complement not positive definite at iteration {iter}")))?;

        let (dxa, _, dza) = engine.direction(&st, &zinv, &rp, &rd, &schur, 0.0, None);
        let ap = step_length(&st.x, &dxa).min(1.0);
        let ad = step_length(&st.z, &dza).min(1.0);
        let mut mu_aff = 0.0;
        for b in 0..blocks.len() {
            let mut xa = st.x[b].clone();
            xa.axpy(ap, &dxa[b]);
            let mut za = st.z[b].clone();
            za.axpy(ad, &dza[b]);
            mu_aff += xa.inner(&za);
        }
        mu_aff /= n_total as f64;
        let sigma = if mu > 0.0 { (mu_aff / mu).clamp(0.0, 1.0).powi(3) } else { 0.0 };
        let corr: Vec<CMatrix> = dxa.iter().zip(&dza).map(|(a, b)| a.matmul(b)).collect();
        let (dx, dy, dz) = engine.direction(&st, &zinv, &rp, &rd, &schur, sigma * mu, Some(&corr));
        let ap = (STEP_FRACTION * step_length(&st.x, &dx)).min(1.0);
        let ad = (STEP_FRACTION * step_length(&st.z, &dz)).min(1.0);
        if ap <= 0.0 && ad <= 0.0 {
            return Err(Error::Solver(format!("zero step length at iteration {iter}")));
        }
        for b in 0..blocks.len() {
            st.x[b].axpy(ap, &dx[b]);
            st.x[b] = st.x[b].symmetrized();
            st.z[b].axpy(ad, &dz[b]);
            st.z[b] = st.z[b].symmetrized();
        }
        for (yi, d) in st.y.iter_mut().zip(&dy) {
            *yi += ad * d;
        }
        last_steps = (ap, ad);
    }

    if let Some((_, x, z, y)) = best {
        st = State { x, z, y };
    }
    let met = engine.metrics(&st);
    let mut multipliers = vec![0.0; problem.num_constraints()];
    for ((orig, scale), y) in prep.kept.iter().zip(&st.y) {
        multipliers[*orig] = y / scale;
    }
    Ok(SdpSolution {
        status,
        primal_value: met.pobj,
        dual_value: met.dobj,
        primal_blocks: st.x,
        dual_slacks: st.z,
        dual_multipliers: multipliers,
        iterations,
        primal_residual: met.pres,
        dual_residual: met.dres,
        message,
        history,
    })
}
