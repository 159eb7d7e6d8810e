use approx::assert_abs_diff_eq;
use dephasing::fock::*;
use dephasing::{c64, Error};

fn taylor_exp(a: &Operator, scale: f64) -> Operator {
    // exp(-i s A) by scaling and squaring a truncated series.
    let squarings = 10;
    let step = c64::new(0.0, -scale / f64::from(1 << squarings)) * a;
    let mut term = Operator::identity(a.space());
    let mut sum = term.clone();
    for k in 1..30 {
        term = (1.0 / k as f64) * &(&term * &step);
        sum = &sum + &term;
    }
    for _ in 0..squarings {
        sum = &sum * &sum;
    }
    sum
}

#[test]
fn ladder_operators_have_the_truncated_commutator() {
    let n = 9;
    let a = annihilation(n).unwrap();
    let comm = a.commutator(&a.adjoint());
    for i in 0..n {
        let expected = if i + 1 < n { 1.0 } else { -((n - 1) as f64) };
        assert_abs_diff_eq!(comm.get(i, i).re, expected, epsilon = 1e-12);
    }
    assert!(creation(n).unwrap().max_abs_diff(&a.adjoint()) == 0.0);
    let n_op = &a.adjoint() * &a;
    assert!(n_op.max_abs_diff(&number(n).unwrap()) < 1e-14);
}

#[test]
fn position_eigenvalues_are_hermite_zeros() {
    // H_3(x) = 8x^3 - 12x, zeros 0 and +-sqrt(3/2); x = a + a^dag scales them by sqrt(2).
    let spectrum = hermitian_eig(&position(3).unwrap()).unwrap();
    let expected = [-3.0f64.sqrt(), 0.0, 3.0f64.sqrt()];
    for (v, e) in spectrum.values().iter().zip(expected) {
        assert_abs_diff_eq!(*v, e, epsilon = 1e-12);
    }
}

#[test]
fn spectral_exponential_matches_the_power_series() {
    let x = position(12).unwrap();
    let spectral = expm_hermitian_generator(&x, 0.37).unwrap();
    let series = taylor_exp(&x, 0.37);
    assert!(spectral.max_abs_diff(&series) < 1e-11);
}

#[test]
fn tensor_product_matches_index_convention() {
    let sx = pauli(Axis::X);
    let a = annihilation(4).unwrap();
    let t = tensor(&sx, &a);
    let space = t.space().clone();
    assert_eq!(space.dim(), 8);
    for (q1, n1, q2, n2) in [(0, 0, 1, 1), (1, 2, 0, 3), (0, 1, 0, 2)] {
        let i = space.index_of(&[q1, n1]);
        let j = space.index_of(&[q2, n2]);
        let expected = sx.get(q1, q2) * a.get(n1, n2);
        assert_eq!(t.get(i, j), expected);
        assert_eq!(space.levels_of(i), vec![q1, n1]);
    }
}

#[test]
fn spectrum_reconstructs_the_operator() {
    let h = &(&number(10).unwrap() * &number(10).unwrap()) + &(0.3 * &position(10).unwrap());
    let spectrum = hermitian_eig(&h).unwrap();
    assert!(spectrum.reconstruct().max_abs_diff(&h) < 1e-12);
    let basis = spectrum.lowest_vectors(4).unwrap();
    let projected = h.project(basis.as_ref());
    for i in 0..4 {
        assert_abs_diff_eq!(projected[(i, i)].re, spectrum.values()[i], epsilon = 1e-12);
    }
}

#[test]
fn non_hermitian_input_is_rejected() {
    let a = annihilation(5).unwrap();
    assert!(matches!(hermitian_eig(&a), Err(Error::NotHermitian { .. })));
    assert!(matches!(
        annihilation(1),
        Err(Error::InvalidCutoff { cutoff: 1 })
    ));
}

#[test]
fn fixed_phase_makes_the_largest_component_positive() {
    let mut v = vec![c64::new(0.1, 0.2), c64::new(0.0, -0.9), c64::new(0.3, 0.0)];
    fix_phase(&mut v);
    assert!(v[1].im.abs() < 1e-15 && v[1].re > 0.0);
    assert_abs_diff_eq!(v[0].norm(), 0.05f64.sqrt(), epsilon = 1e-15);
}

#[test]
fn convergence_check_flags_drifting_spectra() {
    let lowest = |cutoff: usize| -> dephasing::Result<Vec<f64>> {
        let h = &number(cutoff).unwrap() + &(2.0 * &position(cutoff).unwrap());
        Ok(hermitian_eig(&h)?.values()[..3].to_vec())
    };
    assert!(check_convergence(60, 3, lowest).is_ok());
    assert!(matches!(
        check_convergence(6, 3, lowest),
        Err(Error::NotConverged { cutoff: 6, .. })
    ));
}

#[test]
fn conjugation_is_consistent() {
    let x = position(8).unwrap();
    let u = expm_hermitian_generator(&x, 0.4).unwrap();
    let n = number(8).unwrap();
    let there = n.conjugated_by(&u);
    let back = there.conjugated_by_adjoint(&u);
    assert!(back.max_abs_diff(&n) < 1e-12);
}
