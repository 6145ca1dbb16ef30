//! Quasi-probability simulation and memory synthesis.

use qmem_core::channels::*;
use qmem_core::linalg::pauli;
use qmem_core::robustness::*;
use qmem_core::simulation::*;

fn family_channels() -> Vec<QuantumChannel> {
    let grid = [0.0, 0.2, 0.4, 0.5, 0.6, 0.8, 1.0];
    let mut out = vec![family(Family::Identity { d: 2 }).unwrap(), family(Family::Identity { d: 3 }).unwrap()];
    for p in grid {
        for f in [Family::Dephasing { p }, Family::Depolarizing { p }, Family::Damping { p }, Family::Erasure { p }] {
            out.push(family(f).unwrap());
        }
    }
    out
}

#[test]
fn overhead_is_the_squared_one_norm() {
    for n in family_channels() {
        let r = robustness_ppt(&n, Variant::Standard).unwrap().value;
        let d = decompose(&n).unwrap();
        let want = (1.0 + 2.0 * r) * (1.0 + 2.0 * r);
        assert!((d.overhead - want).abs() < 1e-5, "{}→{}: overhead {} vs {want}", n.d_in(), n.d_out(), d.overhead);
        assert!((&d.reconstructed_choi() - n.choi().matrix()).max_abs() < 1e-6);
        assert!(d.m_plus.choi().min_pt_eigenvalue() > -1e-7 && d.m_minus.choi().min_pt_eigenvalue() > -1e-7);
        assert!(d.m_plus.choi().eigenvalues().iter().all(|&l| l > -1e-7));
    }
}

#[test]
fn estimator_is_unbiased_across_seeds() {
    let d = decompose(&family(Family::Dephasing { p: 0.75 }).unwrap()).unwrap();
    let plus = pauli::bloch_state([1.0, 0.0, 0.0]);
    let mut within = 0;
    for seed in 0..100 {
        let e = sample_estimate(&d, &plus, &pauli::x(), 100_000, seed).unwrap();
        if (e.estimate - 0.5).abs() <= 5.0 * e.std_error {
            within += 1;
        }
    }
    assert!(within >= 95, "{within}/100 within 5σ");
}

#[test]
fn estimator_variance_respects_the_overhead() {
    let d = decompose(&family(Family::Dephasing { p: 0.75 }).unwrap()).unwrap();
    let plus = pauli::bloch_state([1.0, 0.0, 0.0]);
    let shots = 4000;
    let runs: Vec<_> = (0..200).map(|seed| sample_estimate(&d, &plus, &pauli::x(), shots, 1000 + seed).unwrap()).collect();
    let mean = runs.iter().map(|e| e.estimate).sum::<f64>() / runs.len() as f64;
    let var = runs.iter().map(|e| (e.estimate - mean).powi(2)).sum::<f64>() / (runs.len() - 1) as f64;
    let bound = d.overhead / shots as f64;
    assert!(var <= 1.1 * bound, "variance {var} > bound {bound}");
    let reported = runs.iter().map(|e| e.std_error.powi(2)).sum::<f64>() / runs.len() as f64;
    assert!((reported / var - 1.0).abs() < 0.25, "reported {reported}, empirical {var}");
}

#[test]
fn estimator_is_reproducible_and_batch_independent() {
    let d = decompose(&family(Family::Damping { p: 0.6 }).unwrap()).unwrap();
    let rho = pauli::bloch_state([0.3, -0.4, 0.5]);
    let z = pauli::z();
    let a = sample_estimate(&d, &rho, &z, 3 * SHOT_BATCH + 17, 9).unwrap();
    let b = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap().install(|| sample_estimate(&d, &rho, &z, 3 * SHOT_BATCH + 17, 9).unwrap());
    assert_eq!(a, b);
    let exact = family(Family::Damping { p: 0.6 }).unwrap().apply(&rho).unwrap().inner(&z);
    assert!((a.estimate - exact).abs() < 5.0 * a.std_error);
}

#[test]
fn synthesis_from_ideal_memories() {
    let targets = [
        family(Family::Dephasing { p: 1.0 }).unwrap(),
        family(Family::Damping { p: 0.7 }).unwrap(),
        family(Family::Erasure { p: 0.6 }).unwrap(),
        family(Family::Identity { d: 3 }).unwrap(),
    ];
    for (t, target) in targets.iter().enumerate() {
        let sc = synthesis_superchannel(target).unwrap();
        let d = sc.probe_dimension;
        let out = sc.apply(family(Family::Identity { d }).unwrap().choi()).unwrap();
        assert!((out.matrix() - target.choi().matrix()).max_abs() < 1e-6, "target {t}");
        for seed in 0..50 {
            let probe = random_eb_channel(d, d, 2 + (seed as usize % 4), seed).unwrap();
            let out = sc.apply(probe.choi()).unwrap();
            assert!(out.min_pt_eigenvalue() > -1e-7, "target {t} probe {seed}: {}", out.min_pt_eigenvalue());
        }
    }
    assert_eq!(synthesis_superchannel(&targets[0]).unwrap().probe_dimension, 2);
    assert_eq!(synthesis_superchannel(&targets[3]).unwrap().probe_dimension, 3);
}

#[test]
fn synthesis_costs() {
    let opts = qmem_core::sdp::SdpOptions::default();
    let r = robustness(&family(Family::Dephasing { p: 1.0 }).unwrap(), Method::SdpPpt, &opts).unwrap();
    assert_eq!(synthesis_cost(&r), 1);
    for seed in 0..20 {
        let eb = random_eb_channel(2, 2 + (seed as usize % 2), 3, seed).unwrap();
        let r = robustness(&eb, Method::SdpPpt, &opts).unwrap();
        assert_eq!(synthesis_cost(&r), 0, "seed {seed}: R = {}", r.value);
        let sc = synthesis_superchannel(&eb).unwrap();
        assert_eq!(sc.probe_dimension, 1);
    }
}
