use approx::assert_abs_diff_eq;
use dephasing::fock::{hermitian_eig, Operator};
use dephasing::hopfield::*;
use dephasing::{Gauge, GaugeMode};

const DETUNINGS: [f64; 3] = [-0.2, 0.0, 0.2];

fn params(delta: f64, lambda: f64) -> HopfieldParams {
    HopfieldParams::resonant_with_detuning(delta, lambda).unwrap()
}

/// Roots of `Omega^4 - (wc^2 + wx^2 + 4 lambda^2 wc wx) Omega^2 + wc^2 wx^2 = 0`.
fn closed_form_frequencies(p: &HopfieldParams) -> [f64; 2] {
    let (wc, wx, l) = (p.omega_c, p.omega_x, p.lambda);
    let sum = wc * wc + wx * wx + 4.0 * l * l * wc * wx;
    let disc = (sum * sum - 4.0 * wc * wc * wx * wx).sqrt();
    [((sum - disc) / 2.0).sqrt(), ((sum + disc) / 2.0).sqrt()]
}

fn lambdas(max: f64, n: usize) -> impl Iterator<Item = f64> {
    (0..=n).map(move |k| max * k as f64 / n as f64)
}

#[test]
fn frequencies_match_the_closed_form_in_both_gauges() {
    for delta in DETUNINGS {
        for lambda in lambdas(3.0, 30) {
            let p = params(delta, lambda);
            let expected = closed_form_frequencies(&p);
            for gauge in [Gauge::Coulomb, Gauge::Dipole] {
                let dec = symplectic_diagonalize(&p, gauge).unwrap();
                for mu in 0..2 {
                    assert_abs_diff_eq!(dec.frequencies[mu], expected[mu], epsilon = 1e-10);
                }
            }
        }
    }
}

#[test]
fn bogoliubov_normalization_holds_per_branch_and_gauge() {
    for delta in DETUNINGS {
        for lambda in lambdas(3.0, 60) {
            for gauge in [Gauge::Coulomb, Gauge::Dipole] {
                let dec = symplectic_diagonalize(&params(delta, lambda), gauge).unwrap();
                for c in &dec.coefficients {
                    assert_abs_diff_eq!(c.normalization(), 1.0, epsilon = 1e-10);
                }
            }
        }
    }
}

#[test]
fn mapped_coefficients_equal_the_direct_decomposition() {
    for delta in DETUNINGS {
        for lambda in lambdas(2.0, 40) {
            let p = params(delta, lambda);
            let coulomb = symplectic_diagonalize(&p, Gauge::Coulomb).unwrap();
            let dipole = symplectic_diagonalize(&p, Gauge::Dipole).unwrap();
            let to_dipole = gauge_map_coefficients(&coulomb);
            let to_coulomb = gauge_map_coefficients(&dipole);
            assert_eq!(to_dipole.gauge, Gauge::Dipole);
            for mu in 0..2 {
                assert!(to_dipole.coefficients[mu].max_abs_diff(&dipole.coefficients[mu]) < 1e-10);
                assert!(
                    to_coulomb.coefficients[mu].max_abs_diff(&coulomb.coefficients[mu]) < 1e-10
                );
            }
        }
    }
}

#[test]
fn correct_rates_agree_between_evaluation_gauges() {
    for delta in DETUNINGS {
        for lambda in lambdas(2.0, 40) {
            let p = params(delta, lambda);
            let c = polariton_dephasing_rates_in(&p, 0.7, 1.3, GaugeMode::Correct, Gauge::Coulomb)
                .unwrap();
            let d = polariton_dephasing_rates_in(&p, 0.7, 1.3, GaugeMode::Correct, Gauge::Dipole)
                .unwrap();
            for mu in 0..2 {
                assert_abs_diff_eq!(c.rates[mu], d.rates[mu], epsilon = 1e-9);
            }
        }
    }
}

#[test]
fn decoupled_rates_are_bare() {
    for delta in [-0.2, 0.0] {
        for mode in [
            GaugeMode::Correct,
            GaugeMode::NaiveCoulomb,
            GaugeMode::NaiveDipole,
        ] {
            let r = polariton_dephasing_rates(&params(delta, 0.0), 0.0, 1.0, mode).unwrap();
            assert_abs_diff_eq!(r.rates[0], 1.0, epsilon = 1e-12);
            assert_abs_diff_eq!(r.rates[1], 0.0, epsilon = 1e-12);
        }
    }
    let r = polariton_dephasing_rates(&params(0.2, 0.0), 1.0, 0.0, GaugeMode::Correct).unwrap();
    assert_abs_diff_eq!(r.rates[0], 1.0, epsilon = 1e-12);
    assert_abs_diff_eq!(r.rates[1], 0.0, epsilon = 1e-12);
}

#[test]
fn lower_polariton_becomes_dephasing_free() {
    for delta in DETUNINGS {
        let r =
            polariton_dephasing_rates(&params(delta, 2.0), 0.0, 1.0, GaugeMode::Correct).unwrap();
        assert!(r.rates[0] < 0.05, "delta={delta}: {}", r.rates[0]);
    }
}

#[test]
fn lower_polariton_frequency_decreases() {
    let mut previous = f64::INFINITY;
    for lambda in lambdas(3.0, 60).filter(|&l| l >= 0.5) {
        let dec = symplectic_diagonalize(&params(3e-3, lambda), Gauge::Coulomb).unwrap();
        assert!(dec.frequencies[0] < previous);
        previous = dec.frequencies[0];
    }
    // Omega_1 ~ sqrt(wc wx) / (2 lambda) for large lambda.
    let far = symplectic_diagonalize(&params(3e-3, 20.0), Gauge::Coulomb).unwrap();
    assert!((far.frequencies[0] * 40.0 / 1.003f64.sqrt() - 1.0).abs() < 1e-2);
}

#[test]
fn upper_polariton_rate_grows_with_coupling_below_resonance() {
    for delta in [-0.2, -3e-3, 0.0] {
        let mut previous = -1.0;
        for lambda in lambdas(1.0, 50) {
            let r = polariton_dephasing_rates(&params(delta, lambda), 0.0, 1.0, GaugeMode::Correct)
                .unwrap();
            assert!(
                r.rates[1] >= previous - 1e-12,
                "delta={delta} lambda={lambda}"
            );
            previous = r.rates[1];
        }
    }
}

#[test]
fn naive_mode_inverts_the_branches() {
    let p = params(0.0, 1.0);
    let correct = polariton_dephasing_rates(&p, 0.0, 1.0, GaugeMode::Correct)
        .unwrap()
        .rates;
    let naive = polariton_dephasing_rates(&p, 0.0, 1.0, GaugeMode::NaiveCoulomb)
        .unwrap()
        .rates;
    assert!(correct[0] < correct[1]);
    assert!(naive[0] > naive[1]);
}

#[test]
fn sweep_emits_frequencies_and_rates() {
    let grid: Vec<_> = [0.5, 0.0].iter().map(|&l| params(0.0, l)).collect();
    let config = RateConfig {
        gamma0_c: 0.0,
        gamma0_x: 1.0,
        modes: vec![GaugeMode::Correct, GaugeMode::NaiveCoulomb],
    };
    let result = dispersion_sweep(&grid, &config).unwrap();
    assert!(result.is_complete());
    assert_eq!(result.rows.len(), 2 * (2 + 2 * 2));
    assert_eq!(result.rows[0].coupling, 0.0);
    let omega = result.series("1", "omega_over_omegac", "invariant");
    assert_eq!(omega.len(), 2);
    assert_abs_diff_eq!(omega[0].1, 1.0, epsilon = 1e-12);
}

#[test]
fn truncated_fock_oracle_matches_the_symplectic_route() {
    let p = params(0.0, 0.1).with_cutoff(40).unwrap();
    let dec = symplectic_diagonalize(&p, Gauge::Coulomb).unwrap();
    let fock = fock_polaritons(&p, Gauge::Coulomb).unwrap();
    for mu in 0..2 {
        assert_abs_diff_eq!(fock.gaps[mu], dec.frequencies[mu], epsilon = 1e-6);
        let diff = fock.coefficients[mu].max_abs_diff(&dec.coefficients[mu]);
        assert!(diff < 1e-5, "mu={mu}: {diff:e}");
    }
}

#[test]
fn coulomb_and_dipole_fock_spectra_agree() {
    let p = params(0.0, 0.5).with_cutoff(40).unwrap();
    let c = hermitian_eig(&build_hopfield_hamiltonian(&p, Gauge::Coulomb).unwrap()).unwrap();
    let d = hermitian_eig(&build_hopfield_hamiltonian(&p, Gauge::Dipole).unwrap()).unwrap();
    let gaps = |s: &dephasing::Spectrum| -> Vec<f64> {
        (1..6).map(|k| s.values()[k] - s.values()[0]).collect()
    };
    for (a, b) in gaps(&c).iter().zip(gaps(&d)) {
        assert_abs_diff_eq!(*a, b, epsilon = 1e-7);
    }
}

#[test]
fn polariton_operators_are_related_by_the_gauge_unitary() {
    let p = params(0.0, 0.3).with_cutoff(40).unwrap();
    let residual = polariton_gauge_residual(&p, 5).unwrap();
    assert!(residual < 1e-5, "{residual:e}");
}

#[test]
fn truncated_gauge_unitary_is_unitary() {
    let p = params(0.0, 0.3).with_cutoff(12).unwrap();
    let t = hopfield_gauge_unitary(&p).unwrap();
    let product = &t * &t.adjoint();
    assert!(product.max_abs_diff(&Operator::identity(product.space())) < 1e-12);
}

#[test]
fn fock_oracle_skips_multi_polariton_levels() {
    // At lambda = 0.8, 3 Omega_1 < Omega_2, so |3_1> sits below |1_2>.
    let p = params(0.0, 0.8).with_cutoff(40).unwrap();
    let dec = symplectic_diagonalize(&p, Gauge::Dipole).unwrap();
    assert!(3.0 * dec.frequencies[0] < dec.frequencies[1]);
    let fock = fock_polaritons(&p, Gauge::Dipole).unwrap();
    for mu in 0..2 {
        assert_abs_diff_eq!(fock.gaps[mu], dec.frequencies[mu], epsilon = 1e-5);
    }
}
