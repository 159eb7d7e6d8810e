use approx::assert_abs_diff_eq;
use dephasing::fock::{self, hermitian_eig, hermitian_eig_sectored, number, tensor, Operator};
use dephasing::rabi::*;
use dephasing::{Gauge, GaugeMode};

const MINUS: Transition = (StateLabel::Minus(1), StateLabel::Ground);
const PLUS: Transition = (StateLabel::Plus(1), StateLabel::Ground);

fn params(delta: f64, eta: f64) -> RabiParams {
    RabiParams::resonant_with_detuning(delta, eta).unwrap()
}

fn qubit(mode: GaugeMode) -> DephasingChannel {
    DephasingChannel::new(Target::Qubit, 1.0, mode).unwrap()
}

fn rates(delta: f64, eta: f64, mode: GaugeMode) -> [f64; 2] {
    let ch = qubit(mode);
    let p = params(delta, eta);
    [
        transition_dephasing_rate(&p, &ch, MINUS).unwrap(),
        transition_dephasing_rate(&p, &ch, PLUS).unwrap(),
    ]
}

fn lowest(h: &Operator, n: usize) -> Vec<f64> {
    hermitian_eig(h).unwrap().values()[..n].to_vec()
}

#[test]
fn coulomb_and_dipole_spectra_agree() {
    for k in 0..=15 {
        let p = params(3e-3, 0.1 * k as f64);
        let offset = dipole_energy_offset(&p);
        let d = lowest(&build_dipole_hamiltonian(&p).unwrap(), 10);
        let c = lowest(&build_coulomb_hamiltonian(&p).unwrap(), 10);
        for (ed, ec) in d.iter().zip(&c) {
            let scale = ec.abs().max(1.0);
            assert!(
                (ed + offset - ec).abs() / scale < 1e-8,
                "eta={} E_D+offset={} E_C={}",
                p.eta,
                ed + offset,
                ec
            );
        }
    }
}

#[test]
fn dipole_hamiltonian_is_the_transformed_coulomb_one_on_low_photon_states() {
    let p = params(3e-3, 0.5).with_cutoff(60).unwrap();
    let t = gauge_unitary(&p).unwrap();
    let mapped = build_coulomb_hamiltonian(&p).unwrap().conjugated_by(&t);
    let direct = build_dipole_hamiltonian(&p).unwrap();
    let offset = dipole_energy_offset(&p);
    let n = p.cutoff();
    // Truncation only corrupts states near the cutoff; compare photon numbers < n/2.
    let low = |i: usize| i % n < n / 2;
    let mut worst = 0.0f64;
    for i in (0..2 * n).filter(|&i| low(i)) {
        for j in (0..2 * n).filter(|&j| low(j)) {
            let shift = if i == j { offset } else { 0.0 };
            worst = worst.max((mapped.get(i, j) - direct.get(i, j) - shift).norm());
        }
    }
    assert!(worst < 1e-10, "max entry difference {worst:e}");
}

#[test]
fn gauge_unitary_is_unitary() {
    let p = params(3e-3, 0.7);
    let t = gauge_unitary(&p).unwrap();
    let product = &t * &t.adjoint();
    assert!(product.max_abs_diff(&Operator::identity(product.space())) < 1e-12);
}

#[test]
fn ground_energies_agree_in_deep_strong_coupling() {
    let p = params(3e-3, 1.0);
    let ed = lowest(&build_dipole_hamiltonian(&p).unwrap(), 1)[0];
    let ec = lowest(&build_coulomb_hamiltonian(&p).unwrap(), 1)[0];
    assert_abs_diff_eq!(ed + dipole_energy_offset(&p), ec, epsilon = 1e-8);
}

#[test]
fn sectored_and_dense_diagonalization_agree() {
    let p = params(3e-3, 0.9);
    let h = build_dipole_hamiltonian(&p).unwrap();
    let dense = hermitian_eig(&h).unwrap();
    let sectored = hermitian_eig_sectored(&h, &parity_sectors(&p)).unwrap();
    for (a, b) in dense.values().iter().zip(sectored.values()) {
        assert_abs_diff_eq!(a, b, epsilon = 1e-9);
    }
}

#[test]
fn correct_cavity_operator_is_the_transformed_photon_number() {
    let p = params(3e-3, 0.3).with_cutoff(50).unwrap();
    let ch = DephasingChannel::new(Target::Cavity, 1.0, GaugeMode::Correct).unwrap();
    let op = channel_operator(&ch, &p, Gauge::Dipole).unwrap();
    let n_c = tensor(
        &Operator::identity(&dephasing::SpaceDescriptor::two_level()),
        &number(p.cutoff()).unwrap(),
    );
    let mapped = n_c.conjugated_by(&gauge_unitary(&p).unwrap());
    let cut = p.cutoff();
    let mut worst = 0.0f64;
    for i in (0..2 * cut).filter(|i| i % cut < cut / 2) {
        for j in (0..2 * cut).filter(|j| j % cut < cut / 2) {
            worst = worst.max((op.get(i, j) - mapped.get(i, j)).norm());
        }
    }
    assert!(worst < 1e-10, "{worst:e}");
    // The diagonal picks up eta^2 from the sigma_x^2 term.
    assert_abs_diff_eq!(op.get(cut, cut).re, 0.09, epsilon = 1e-12);
}

#[test]
fn decoupled_labels_follow_the_bare_states() {
    let cut = 20;
    let up = params(3e-3, 0.0).with_cutoff(cut).unwrap();
    let labeled = label_states(&up, 3, Gauge::Dipole).unwrap();
    let g1 = labeled.state(StateLabel::Minus(1)).unwrap()[cut + 1].norm();
    let e0 = labeled.state(StateLabel::Plus(1)).unwrap()[0].norm();
    assert_abs_diff_eq!(g1, 1.0, epsilon = 1e-12);
    assert_abs_diff_eq!(e0, 1.0, epsilon = 1e-12);

    let down = params(-3e-3, 0.0).with_cutoff(cut).unwrap();
    let labeled = label_states(&down, 3, Gauge::Dipole).unwrap();
    assert_abs_diff_eq!(
        labeled.state(StateLabel::Minus(1)).unwrap()[0].norm(),
        1.0,
        epsilon = 1e-12
    );
}

#[test]
fn doublet_is_equally_mixed_once_coupling_exceeds_detuning() {
    let p = params(3e-3, 0.05);
    let cut = p.cutoff();
    let labeled = label_states(&p, 3, Gauge::Dipole).unwrap();
    let state = labeled.state(StateLabel::Minus(1)).unwrap();
    let g1 = state[cut + 1].norm_sqr();
    let e0 = state[0].norm_sqr();
    // Counter-rotating terms keep the split at 0.527 / 0.473 here.
    assert!(
        (g1 - 0.5).abs() < 0.03 && (e0 - 0.5).abs() < 0.03,
        "g1={g1} e0={e0}"
    );
    assert!(g1 + e0 > 0.99);
}

#[test]
fn decoupled_rates_are_bare() {
    let [minus, plus] = rates(-3e-3, 0.0, GaugeMode::Correct);
    assert_abs_diff_eq!(minus, 2.0, epsilon = 1e-12);
    assert_abs_diff_eq!(plus, 0.0, epsilon = 1e-12);
    let [minus, plus] = rates(3e-3, 0.0, GaugeMode::Correct);
    assert_abs_diff_eq!(minus, 0.0, epsilon = 1e-12);
    assert_abs_diff_eq!(plus, 2.0, epsilon = 1e-12);
}

#[test]
fn deep_strong_coupling_suppresses_correct_rates_only() {
    let [minus, plus] = rates(3e-3, 1.5, GaugeMode::Correct);
    assert!(minus < 0.05 && plus < 0.05, "{minus} {plus}");
    let [naive, _] = rates(3e-3, 1.5, GaugeMode::NaiveCoulomb);
    assert!(naive > 0.5, "{naive}");

    let [correct, _] = rates(3e-3, 1.0, GaugeMode::Correct);
    let [naive, _] = rates(3e-3, 1.0, GaugeMode::NaiveCoulomb);
    assert!(correct < 0.05, "{correct}");
    assert!(naive > 10.0 * correct, "naive {naive} correct {correct}");
}

#[test]
fn correct_rates_do_not_depend_on_the_evaluation_gauge() {
    let ch = qubit(GaugeMode::Correct);
    let cavity = DephasingChannel::new(Target::Cavity, 1.0, GaugeMode::Correct).unwrap();
    for eta in [0.1, 0.5, 1.0] {
        let p = params(3e-3, eta);
        for c in [&ch, &cavity] {
            for t in [MINUS, PLUS] {
                let d = transition_dephasing_rate_in(&p, c, t, Gauge::Dipole).unwrap();
                let k = transition_dephasing_rate_in(&p, c, t, Gauge::Coulomb).unwrap();
                assert_abs_diff_eq!(d, k, epsilon = 1e-9);
            }
        }
    }
}

#[test]
fn naive_modes_differ_from_each_other_at_strong_coupling() {
    let p = params(3e-3, 0.5);
    let coulomb = transition_dephasing_rate(&p, &qubit(GaugeMode::NaiveCoulomb), MINUS).unwrap();
    let dipole = transition_dephasing_rate(&p, &qubit(GaugeMode::NaiveDipole), MINUS).unwrap();
    let correct = transition_dephasing_rate(&p, &qubit(GaugeMode::Correct), MINUS).unwrap();
    assert_abs_diff_eq!(dipole, correct, epsilon = 1e-12);
    assert!((coulomb - correct).abs() > 0.1);
}

#[test]
fn rates_cross_where_the_doublet_mixes() {
    // For a qubit below the cavity the qubit-like rate starts at 2 and hands
    // weight to the photon-like transition until the two meet.
    let gap = |eta: f64| {
        let [m, p] = rates(-3e-3, eta, GaugeMode::Correct);
        m - p
    };
    let (mut lo, mut hi) = (0.0, 0.1);
    assert!(gap(lo) > 0.0 && gap(hi) < 0.0);
    for _ in 0..30 {
        let mid = 0.5 * (lo + hi);
        if gap(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    assert!((0.04..0.07).contains(&lo), "crossing at eta = {lo}");
    let [m, p] = rates(-3e-3, lo, GaugeMode::Correct);
    assert!((m - p).abs() / m < 0.01);

    // With the qubit above the cavity the qubit-like transition is 1+ and the
    // two rates never meet on the swept range.
    for eta in [0.0, 0.01, 0.02, 0.05, 0.1, 0.3, 0.6, 1.0] {
        let [m, p] = rates(3e-3, eta, GaugeMode::Correct);
        assert!(p > m, "eta={eta}: {m} {p}");
    }
}

#[test]
fn rate_sweep_rows_are_sorted_and_complete() {
    let grid: Vec<_> = [0.2, 0.0, 0.1].iter().map(|&e| params(3e-3, e)).collect();
    let result = rate_sweep(&grid, &qubit(GaugeMode::Correct), &[MINUS, PLUS]).unwrap();
    assert!(result.is_complete());
    let couplings: Vec<f64> = result.rows.iter().map(|r| r.coupling).collect();
    assert_eq!(couplings, vec![0.0, 0.0, 0.1, 0.1, 0.2, 0.2]);
    assert_eq!(result.rows[0].label, "(1+,0)");
    assert_eq!(result.rows[1].label, "(1-,0)");
    assert!(result.rows.iter().all(|r| r.quantity == "rate_over_gamma0"));
}

#[test]
fn failing_points_are_reported_with_coordinates() {
    let grid = vec![params(3e-3, 0.1), params(3e-3, 2.0).with_cutoff(8).unwrap()];
    let result = rate_sweep(&grid, &qubit(GaugeMode::Correct), &[MINUS]).unwrap();
    assert_eq!(result.failures.len(), 1);
    assert_eq!(result.failures[0].index, 1);
    assert!(result.failures[0].coordinates.contains("eta=2"));
    assert!(result.clone().into_complete().unwrap_err().is_convergence());
    assert_eq!(result.rows.len(), 1);
}

#[test]
fn truncation_convergence_is_checked() {
    let p = params(3e-3, 1.0).with_cutoff(10).unwrap();
    let err = label_states(&p, 3, Gauge::Dipole).unwrap_err();
    assert!(err.is_convergence(), "{err}");
    let converged = label_states(&params(3e-3, 1.0), 3, Gauge::Dipole).unwrap();
    assert!(converged.convergence_drift < fock::CONVERGENCE_TOLERANCE);
}
