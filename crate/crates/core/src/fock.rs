//! Truncated Fock-space operators and dense Hermitian linear algebra.
//!
//! Operators are dense complex matrices tagged with the [`SpaceDescriptor`] they act
//! on. Tensor products follow the Kronecker convention, with the first factor the
//! most significant index; model code always orders factors as matter ⊗ field.

use std::ops::{Add, Mul, Neg, Sub};

use faer::{c64, Mat, MatRef, Side};

use crate::error::{Error, Result};

/// Absolute Hermiticity tolerance for operators on unit-normalised energy scales.
pub const HERMITIAN_TOLERANCE: f64 = 1e-12;

/// Extra Fock levels used when re-running a computation to test truncation.
pub const CONVERGENCE_CUTOFF_STEP: usize = 8;

/// Maximum relative eigenvalue drift accepted between cutoff `N` and `N + 8`.
pub const CONVERGENCE_TOLERANCE: f64 = 1e-8;

/// Tolerance used to decide which eigenvector components tie for the largest
/// magnitude when fixing phases.
const PHASE_TIE_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Factor {
    TwoLevel,
    Boson { cutoff: usize },
}

impl Factor {
    pub fn dim(self) -> usize {
        match self {
            Factor::TwoLevel => 2,
            Factor::Boson { cutoff } => cutoff,
        }
    }
}

/// Ordered list of subsystems making up a tensor-product Hilbert space.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SpaceDescriptor {
    factors: Vec<Factor>,
}

impl SpaceDescriptor {
    pub fn new(factors: Vec<Factor>) -> Result<Self> {
        for factor in &factors {
            if let Factor::Boson { cutoff } = *factor {
                if cutoff < 2 {
                    return Err(Error::InvalidCutoff { cutoff });
                }
            }
        }
        let space = SpaceDescriptor { factors };
        if space.dim() < 2 {
            return Err(Error::InvalidParameter {
                name: "space",
                value: space.dim() as f64,
                reason: "total dimension must be at least 2",
            });
        }
        Ok(space)
    }

    pub fn two_level() -> Self {
        SpaceDescriptor {
            factors: vec![Factor::TwoLevel],
        }
    }

    pub fn boson(cutoff: usize) -> Result<Self> {
        SpaceDescriptor::new(vec![Factor::Boson { cutoff }])
    }

    pub fn factors(&self) -> &[Factor] {
        &self.factors
    }

    pub fn dim(&self) -> usize {
        self.factors.iter().map(|f| f.dim()).product()
    }

    /// Flattened concatenation `self ⊗ other`.
    pub fn tensor(&self, other: &SpaceDescriptor) -> SpaceDescriptor {
        let mut factors = self.factors.clone();
        factors.extend_from_slice(&other.factors);
        SpaceDescriptor { factors }
    }

    /// Flat basis index of a product state given one level per factor.
    pub fn index_of(&self, levels: &[usize]) -> usize {
        assert_eq!(levels.len(), self.factors.len(), "one level per factor");
        levels
            .iter()
            .zip(&self.factors)
            .fold(0, |acc, (&level, factor)| {
                assert!(level < factor.dim(), "level {level} out of range");
                acc * factor.dim() + level
            })
    }

    /// Inverse of [`SpaceDescriptor::index_of`].
    pub fn levels_of(&self, mut index: usize) -> Vec<usize> {
        let mut levels = vec![0; self.factors.len()];
        for (slot, factor) in levels.iter_mut().zip(&self.factors).rev() {
            *slot = index % factor.dim();
            index /= factor.dim();
        }
        levels
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    X,
    Y,
    Z,
}

/// Dense operator on a labelled tensor-product space.
#[derive(Debug, Clone)]
pub struct Operator {
    space: SpaceDescriptor,
    matrix: Mat<c64>,
}

impl Operator {
    pub fn from_matrix(space: SpaceDescriptor, matrix: Mat<c64>) -> Result<Self> {
        let dim = space.dim();
        if matrix.nrows() != dim || matrix.ncols() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: matrix.nrows().max(matrix.ncols()),
            });
        }
        Ok(Operator { space, matrix })
    }

    pub fn from_fn(space: SpaceDescriptor, f: impl FnMut(usize, usize) -> c64) -> Self {
        let dim = space.dim();
        Operator {
            matrix: Mat::from_fn(dim, dim, f),
            space,
        }
    }

    pub fn zeros(space: &SpaceDescriptor) -> Self {
        let dim = space.dim();
        Operator {
            space: space.clone(),
            matrix: Mat::zeros(dim, dim),
        }
    }

    pub fn identity(space: &SpaceDescriptor) -> Self {
        let dim = space.dim();
        Operator {
            space: space.clone(),
            matrix: Mat::identity(dim, dim),
        }
    }

    /// Diagonal operator with the given real entries.
    pub fn diagonal(space: &SpaceDescriptor, entries: &[f64]) -> Result<Self> {
        if entries.len() != space.dim() {
            return Err(Error::DimensionMismatch {
                expected: space.dim(),
                found: entries.len(),
            });
        }
        Ok(Operator::from_fn(space.clone(), |i, j| {
            if i == j {
                c64::new(entries[i], 0.0)
            } else {
                c64::new(0.0, 0.0)
            }
        }))
    }

    pub fn space(&self) -> &SpaceDescriptor {
        &self.space
    }

    pub fn matrix(&self) -> MatRef<'_, c64> {
        self.matrix.as_ref()
    }

    pub fn into_matrix(self) -> Mat<c64> {
        self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn get(&self, row: usize, col: usize) -> c64 {
        self.matrix[(row, col)]
    }

    pub fn adjoint(&self) -> Operator {
        Operator {
            space: self.space.clone(),
            matrix: self.matrix.adjoint().to_owned(),
        }
    }

    /// `max |A - A^dag|` over all entries.
    pub fn hermiticity_error(&self) -> f64 {
        let n = self.dim();
        let mut worst = 0.0f64;
        for j in 0..n {
            for i in j..n {
                let d = (self.matrix[(i, j)] - self.matrix[(j, i)].conj()).norm();
                worst = worst.max(d);
            }
        }
        worst
    }

    pub fn is_hermitian(&self) -> bool {
        self.hermiticity_error() < HERMITIAN_TOLERANCE
    }

    /// Replaces the operator by `(A + A^dag) / 2`.
    pub fn symmetrized(&self) -> Operator {
        Operator::from_fn(self.space.clone(), |i, j| {
            (self.matrix[(i, j)] + self.matrix[(j, i)].conj()) * 0.5
        })
    }

    pub fn scaled(&self, factor: c64) -> Operator {
        Operator::from_fn(self.space.clone(), |i, j| self.matrix[(i, j)] * factor)
    }

    /// Largest entrywise modulus of `self - other`.
    pub fn max_abs_diff(&self, other: &Operator) -> f64 {
        self.assert_same_space(other);
        let n = self.dim();
        let mut worst = 0.0f64;
        for j in 0..n {
            for i in 0..n {
                worst = worst.max((self.matrix[(i, j)] - other.matrix[(i, j)]).norm());
            }
        }
        worst
    }

    /// Largest entrywise modulus.
    pub fn max_abs(&self) -> f64 {
        self.matrix.norm_max()
    }

    pub fn commutator(&self, other: &Operator) -> Operator {
        &(self * other) - &(other * self)
    }

    /// `U A U^dag`.
    pub fn conjugated_by(&self, unitary: &Operator) -> Operator {
        self.assert_same_space(unitary);
        let m = &unitary.matrix * &self.matrix * unitary.matrix.adjoint();
        Operator {
            space: self.space.clone(),
            matrix: m,
        }
    }

    /// `U^dag A U`.
    pub fn conjugated_by_adjoint(&self, unitary: &Operator) -> Operator {
        self.assert_same_space(unitary);
        let m = unitary.matrix.adjoint() * &self.matrix * &unitary.matrix;
        Operator {
            space: self.space.clone(),
            matrix: m,
        }
    }

    /// `<bra| A |ket>` for column vectors in the computational basis.
    pub fn matrix_element(&self, bra: &[c64], ket: &[c64]) -> c64 {
        let n = self.dim();
        assert!(
            bra.len() == n && ket.len() == n,
            "vector length must match dimension"
        );
        let mut acc = c64::new(0.0, 0.0);
        for (j, &k) in ket.iter().enumerate() {
            if k == c64::new(0.0, 0.0) {
                continue;
            }
            let col = self.matrix.col(j);
            let mut inner = c64::new(0.0, 0.0);
            for i in 0..n {
                inner += bra[i].conj() * col[i];
            }
            acc += inner * k;
        }
        acc
    }

    pub fn expectation(&self, state: &[c64]) -> c64 {
        self.matrix_element(state, state)
    }

    /// `A |v>`.
    pub fn apply(&self, v: &[c64]) -> Vec<c64> {
        let n = self.dim();
        assert_eq!(v.len(), n, "vector length must match dimension");
        let mut out = vec![c64::new(0.0, 0.0); n];
        for (j, &vj) in v.iter().enumerate() {
            if vj == c64::new(0.0, 0.0) {
                continue;
            }
            let col = self.matrix.col(j);
            for (i, o) in out.iter_mut().enumerate() {
                *o += col[i] * vj;
            }
        }
        out
    }

    /// Matrix of `A` in the basis spanned by the given orthonormal columns,
    /// `B^dag A B`.
    pub fn project(&self, basis: MatRef<'_, c64>) -> Mat<c64> {
        assert_eq!(basis.nrows(), self.dim(), "basis rows must match dimension");
        basis.adjoint() * &self.matrix * basis
    }

    fn assert_same_space(&self, other: &Operator) {
        assert_eq!(self.space, other.space, "operators act on different spaces");
    }
}

impl Add for &Operator {
    type Output = Operator;
    fn add(self, rhs: &Operator) -> Operator {
        self.assert_same_space(rhs);
        Operator {
            space: self.space.clone(),
            matrix: &self.matrix + &rhs.matrix,
        }
    }
}

impl Sub for &Operator {
    type Output = Operator;
    fn sub(self, rhs: &Operator) -> Operator {
        self.assert_same_space(rhs);
        Operator {
            space: self.space.clone(),
            matrix: &self.matrix - &rhs.matrix,
        }
    }
}

impl Mul for &Operator {
    type Output = Operator;
    fn mul(self, rhs: &Operator) -> Operator {
        self.assert_same_space(rhs);
        Operator {
            space: self.space.clone(),
            matrix: &self.matrix * &rhs.matrix,
        }
    }
}

impl Neg for &Operator {
    type Output = Operator;
    fn neg(self) -> Operator {
        self.scaled(c64::new(-1.0, 0.0))
    }
}

impl Mul<&Operator> for f64 {
    type Output = Operator;
    fn mul(self, rhs: &Operator) -> Operator {
        rhs.scaled(c64::new(self, 0.0))
    }
}

impl Mul<&Operator> for c64 {
    type Output = Operator;
    fn mul(self, rhs: &Operator) -> Operator {
        rhs.scaled(self)
    }
}

/// Bosonic lowering operator truncated to `cutoff` levels.
pub fn annihilation(cutoff: usize) -> Result<Operator> {
    let space = SpaceDescriptor::boson(cutoff)?;
    Ok(Operator::from_fn(space, |i, j| {
        if j == i + 1 {
            c64::new((j as f64).sqrt(), 0.0)
        } else {
            c64::new(0.0, 0.0)
        }
    }))
}

pub fn creation(cutoff: usize) -> Result<Operator> {
    Ok(annihilation(cutoff)?.adjoint())
}

/// `a^dag a` truncated to `cutoff` levels.
pub fn number(cutoff: usize) -> Result<Operator> {
    let space = SpaceDescriptor::boson(cutoff)?;
    let n: Vec<f64> = (0..cutoff).map(|k| k as f64).collect();
    Operator::diagonal(&space, &n)
}

/// `a + a^dag` truncated to `cutoff` levels.
pub fn position(cutoff: usize) -> Result<Operator> {
    let a = annihilation(cutoff)?;
    Ok(&a + &a.adjoint())
}

/// Pauli matrix in the basis `(|e>, |g>)`, so that `sigma_z |e> = +|e>`.
pub fn pauli(axis: Axis) -> Operator {
    let zero = c64::new(0.0, 0.0);
    let entries = match axis {
        Axis::X => [zero, c64::new(1.0, 0.0), c64::new(1.0, 0.0), zero],
        Axis::Y => [zero, c64::new(0.0, -1.0), c64::new(0.0, 1.0), zero],
        Axis::Z => [c64::new(1.0, 0.0), zero, zero, c64::new(-1.0, 0.0)],
    };
    Operator::from_fn(SpaceDescriptor::two_level(), |i, j| entries[2 * i + j])
}

/// Kronecker product `A ⊗ B` on the concatenated space.
pub fn tensor(a: &Operator, b: &Operator) -> Operator {
    let space = a.space.tensor(&b.space);
    let matrix = a.matrix.kron(&b.matrix);
    Operator { space, matrix }
}

/// Eigenvalues in ascending order with orthonormal eigenvectors stored as columns.
///
/// Each eigenvector is phase-fixed so that its largest-magnitude component (the
/// first one, in basis order, among ties) is real and positive.
#[derive(Debug, Clone)]
pub struct Spectrum {
    space: SpaceDescriptor,
    values: Vec<f64>,
    vectors: Mat<c64>,
}

impl Spectrum {
    pub fn space(&self) -> &SpaceDescriptor {
        &self.space
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn vectors(&self) -> MatRef<'_, c64> {
        self.vectors.as_ref()
    }

    /// The `k`-th eigenvector as a contiguous slice.
    pub fn vector(&self, k: usize) -> &[c64] {
        self.vectors.col_as_slice(k)
    }

    /// `V diag(values) V^dag`.
    pub fn reconstruct(&self) -> Operator {
        let n = self.values.len();
        let scaled = Mat::from_fn(n, n, |i, j| self.vectors[(i, j)] * self.values[j]);
        Operator {
            space: self.space.clone(),
            matrix: &scaled * self.vectors.adjoint(),
        }
    }

    /// Applies `f` to the eigenvalues: `V diag(f(values)) V^dag`.
    pub fn map(&self, f: impl Fn(f64) -> c64) -> Operator {
        let n = self.values.len();
        let fv: Vec<c64> = self.values.iter().map(|&x| f(x)).collect();
        let scaled = Mat::from_fn(n, n, |i, j| self.vectors[(i, j)] * fv[j]);
        Operator {
            space: self.space.clone(),
            matrix: &scaled * self.vectors.adjoint(),
        }
    }

    /// Columns of the `n` lowest eigenvectors.
    pub fn lowest_vectors(&self, n: usize) -> Result<Mat<c64>> {
        if n > self.len() {
            return Err(Error::TooManyLevels {
                requested: n,
                available: self.len(),
            });
        }
        Ok(self.vectors.as_ref().subcols(0, n).to_owned())
    }
}

fn check_hermitian(h: &Operator) -> Result<()> {
    let deviation = h.hermiticity_error();
    if deviation.is_nan() || deviation >= HERMITIAN_TOLERANCE {
        return Err(Error::NotHermitian { deviation });
    }
    Ok(())
}

/// Rotates a vector so that its largest-magnitude component is real positive.
pub fn fix_phase(v: &mut [c64]) {
    let max = v.iter().map(|z| z.norm()).fold(0.0f64, f64::max);
    if max == 0.0 {
        return;
    }
    let pivot = v
        .iter()
        .position(|z| z.norm() >= max * (1.0 - PHASE_TIE_TOLERANCE))
        .expect("non-empty vector");
    let phase = v[pivot].conj() / v[pivot].norm();
    for z in v.iter_mut() {
        *z *= phase;
    }
    v[pivot] = c64::new(v[pivot].norm(), 0.0);
}

fn dense_eig(matrix: MatRef<'_, c64>) -> Result<(Vec<f64>, Mat<c64>)> {
    let evd = matrix
        .self_adjoint_eigen(Side::Lower)
        .map_err(|e| Error::Eigen(format!("{e:?}")))?;
    let s = evd.S().column_vector();
    let values: Vec<f64> = (0..matrix.nrows()).map(|i| s[i].re).collect();
    Ok((values, evd.U().to_owned()))
}

/// Full eigendecomposition of a Hermitian operator.
pub fn hermitian_eig(h: &Operator) -> Result<Spectrum> {
    check_hermitian(h)?;
    let (values, mut vectors) = dense_eig(h.matrix())?;
    for k in 0..values.len() {
        fix_phase(vectors.col_as_slice_mut(k));
    }
    Ok(Spectrum {
        space: h.space.clone(),
        values,
        vectors,
    })
}

/// Eigendecomposition exploiting a conserved quantity that is diagonal in the
/// computational basis. `sector[i]` labels basis state `i`; the operator must not
/// couple different sectors. The merged spectrum is identical in content to
/// [`hermitian_eig`] but eigenvectors never mix sectors, even at exact
/// degeneracies between them.
pub fn hermitian_eig_sectored(h: &Operator, sector: &[u32]) -> Result<Spectrum> {
    check_hermitian(h)?;
    let n = h.dim();
    if sector.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: sector.len(),
        });
    }
    let mut labels: Vec<u32> = sector.to_vec();
    labels.sort_unstable();
    labels.dedup();

    let scale = h.max_abs().max(1.0);
    for j in 0..n {
        for i in 0..n {
            if sector[i] != sector[j] && h.get(i, j).norm() > HERMITIAN_TOLERANCE * scale {
                return Err(Error::InvalidParameter {
                    name: "sector",
                    value: h.get(i, j).norm(),
                    reason: "operator couples different symmetry sectors",
                });
            }
        }
    }

    let mut pairs: Vec<(f64, Vec<c64>)> = Vec::with_capacity(n);
    for &label in &labels {
        let members: Vec<usize> = (0..n).filter(|&i| sector[i] == label).collect();
        let m = members.len();
        let block = Mat::from_fn(m, m, |i, j| h.get(members[i], members[j]));
        let (values, vectors) = dense_eig(block.as_ref())?;
        for (k, value) in values.into_iter().enumerate() {
            let mut full = vec![c64::new(0.0, 0.0); n];
            for (r, &row) in members.iter().enumerate() {
                full[row] = vectors[(r, k)];
            }
            fix_phase(&mut full);
            pairs.push((value, full));
        }
    }
    // Stable: equal eigenvalues keep sector order.
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));

    let values: Vec<f64> = pairs.iter().map(|p| p.0).collect();
    let vectors = Mat::from_fn(n, n, |i, j| pairs[j].1[i]);
    Ok(Spectrum {
        space: h.space.clone(),
        values,
        vectors,
    })
}

/// Applies a scalar function to a Hermitian operator by spectral calculus.
pub fn hermitian_function(a: &Operator, f: impl Fn(f64) -> c64) -> Result<Operator> {
    Ok(hermitian_eig(a)?.map(f))
}

/// `exp(-i * scale * A)` for Hermitian `A`.
pub fn expm_hermitian_generator(a: &Operator, scale: f64) -> Result<Operator> {
    hermitian_function(a, |x| c64::new(0.0, -scale * x).exp())
}

/// Default Fock cutoff for a normalised coupling `g`: `max(20, ceil(10 + 10 g + 16 g^2))`.
pub fn default_cutoff(coupling: f64) -> usize {
    let n = (10.0 + 10.0 * coupling + 16.0 * coupling * coupling).ceil();
    (n as usize).max(20)
}

/// Largest relative difference between two eigenvalue lists, using `max(1, |e|)`
/// as the scale so that eigenvalues near zero are compared absolutely.
pub fn relative_drift(reference: &[f64], refined: &[f64]) -> f64 {
    reference
        .iter()
        .zip(refined)
        .map(|(a, b)| (a - b).abs() / b.abs().max(1.0))
        .fold(0.0, f64::max)
}

/// Re-runs `lowest_eigenvalues` at `cutoff + 8` and fails if the lowest `n_levels`
/// eigenvalues moved by more than [`CONVERGENCE_TOLERANCE`]. Returns the drift.
pub fn check_convergence(
    cutoff: usize,
    n_levels: usize,
    lowest_eigenvalues: impl Fn(usize) -> Result<Vec<f64>>,
) -> Result<f64> {
    let coarse = lowest_eigenvalues(cutoff)?;
    let fine = lowest_eigenvalues(cutoff + CONVERGENCE_CUTOFF_STEP)?;
    let n = n_levels.min(coarse.len()).min(fine.len());
    converged_drift(cutoff, &coarse[..n], &fine[..n])
}

/// Drift between eigenvalues computed at `cutoff` and at `cutoff + 8`, or a
/// non-convergence error if it reaches [`CONVERGENCE_TOLERANCE`].
pub fn converged_drift(cutoff: usize, coarse: &[f64], fine: &[f64]) -> Result<f64> {
    let drift = relative_drift(coarse, fine);
    if drift.is_nan() || drift >= CONVERGENCE_TOLERANCE {
        return Err(Error::NotConverged { cutoff, drift });
    }
    Ok(drift)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn re(x: f64) -> c64 {
        c64::new(x, 0.0)
    }

    #[test]
    fn annihilation_matrix_elements() {
        let a = annihilation(2).unwrap();
        assert_eq!(a.get(0, 1), re(1.0));
        assert_eq!(a.get(1, 0), re(0.0));
        assert_eq!(a.get(0, 0), re(0.0));

        let a = annihilation(3).unwrap();
        assert_abs_diff_eq!(a.get(1, 2).re, 2f64.sqrt(), epsilon = 1e-8);
    }

    #[test]
    fn invalid_cutoff_is_rejected() {
        assert_eq!(
            annihilation(1).unwrap_err(),
            Error::InvalidCutoff { cutoff: 1 }
        );
        assert!(annihilation(0).is_err());
    }

    #[test]
    fn truncated_canonical_commutator() {
        for n in [2, 3, 7, 30] {
            let a = annihilation(n).unwrap();
            let c = a.commutator(&a.adjoint());
            for i in 0..n - 1 {
                for j in 0..n - 1 {
                    let expected = if i == j { 1.0 } else { 0.0 };
                    assert!((c.get(i, j) - re(expected)).norm() < 1e-14);
                }
            }
            // The top level carries the truncation defect.
            assert_abs_diff_eq!(c.get(n - 1, n - 1).re, -((n - 1) as f64), epsilon = 1e-12);
        }
    }

    #[test]
    fn pauli_algebra() {
        let (x, y, z) = (pauli(Axis::X), pauli(Axis::Y), pauli(Axis::Z));
        assert_eq!(z.get(0, 0), re(1.0));
        assert_eq!(z.get(1, 1), re(-1.0));
        let id = Operator::identity(&SpaceDescriptor::two_level());
        assert!((&x * &x).max_abs_diff(&id) < 1e-15);
        let comm = x.commutator(&y);
        assert!(comm.max_abs_diff(&z.scaled(c64::new(0.0, 2.0))) < 1e-15);
    }

    #[test]
    fn tensor_products() {
        let i2 = Operator::identity(&SpaceDescriptor::two_level());
        let i3 = Operator::identity(&SpaceDescriptor::boson(3).unwrap());
        let i6 = tensor(&i2, &i3);
        assert_eq!(i6.dim(), 6);
        assert!(i6.max_abs_diff(&Operator::identity(i6.space())) < 1e-15);

        let z = pauli(Axis::Z);
        let a = annihilation(4).unwrap();
        let i4 = Operator::identity(a.space());
        let lhs = &tensor(&z, &i4) * &tensor(&i2, &a);
        assert!(lhs.max_abs_diff(&tensor(&z, &a)) < 1e-15);
        assert_eq!(tensor(&z, &a).dim(), 8);
        assert_eq!(tensor(&z, &a).space().factors().len(), 2);
    }

    #[test]
    fn product_state_indexing() {
        let space =
            SpaceDescriptor::new(vec![Factor::TwoLevel, Factor::Boson { cutoff: 5 }]).unwrap();
        assert_eq!(space.index_of(&[1, 3]), 8);
        assert_eq!(space.levels_of(8), vec![1, 3]);
        for k in 0..space.dim() {
            assert_eq!(space.index_of(&space.levels_of(k)), k);
        }
    }

    #[test]
    fn eig_of_diagonal_and_sigma_x() {
        let h = Operator::diagonal(&SpaceDescriptor::boson(3).unwrap(), &[3.0, 1.0, 2.0]).unwrap();
        let s = hermitian_eig(&h).unwrap();
        assert_eq!(s.values(), &[1.0, 2.0, 3.0]);

        let s = hermitian_eig(&pauli(Axis::X)).unwrap();
        assert_abs_diff_eq!(s.values()[0], -1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(s.values()[1], 1.0, epsilon = 1e-14);
        let r = std::f64::consts::FRAC_1_SQRT_2;
        // (|e> - |g>)/sqrt2 with the first tied component made positive
        let v0 = s.vector(0);
        assert!((v0[0] - re(r)).norm() < 1e-14 && (v0[1] - re(-r)).norm() < 1e-14);
        let v1 = s.vector(1);
        assert!((v1[0] - re(r)).norm() < 1e-14 && (v1[1] - re(r)).norm() < 1e-14);
    }

    #[test]
    fn non_hermitian_input_is_rejected() {
        let a = annihilation(3).unwrap();
        assert!(matches!(hermitian_eig(&a), Err(Error::NotHermitian { .. })));
        assert!(matches!(
            expm_hermitian_generator(&a, 1.0),
            Err(Error::NotHermitian { .. })
        ));
    }

    #[test]
    fn expm_special_cases() {
        let z = pauli(Axis::Z);
        let u = expm_hermitian_generator(&z, 0.0).unwrap();
        assert!(u.max_abs_diff(&Operator::identity(z.space())) < 1e-15);

        let u = expm_hermitian_generator(&z, std::f64::consts::FRAC_PI_2).unwrap();
        assert!((u.get(0, 0) - c64::new(0.0, -1.0)).norm() < 1e-15);
        assert!((u.get(1, 1) - c64::new(0.0, 1.0)).norm() < 1e-15);
        assert!(u.get(0, 1).norm() < 1e-15);
    }

    #[test]
    fn sectored_eig_matches_dense() {
        // Two decoupled blocks on interleaved basis states.
        let space = SpaceDescriptor::boson(4).unwrap();
        let h = Operator::from_fn(space, |i, j| match (i, j) {
            (0, 0) => re(1.0),
            (2, 2) => re(-1.0),
            (0, 2) => c64::new(0.5, 0.2),
            (2, 0) => c64::new(0.5, -0.2),
            (1, 1) => re(0.3),
            (3, 3) => re(0.3),
            (1, 3) => re(0.1),
            (3, 1) => re(0.1),
            _ => re(0.0),
        });
        let dense = hermitian_eig(&h).unwrap();
        let blocked = hermitian_eig_sectored(&h, &[0, 1, 0, 1]).unwrap();
        for (a, b) in dense.values().iter().zip(blocked.values()) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-13);
        }
        assert!(blocked.reconstruct().max_abs_diff(&h) < 1e-13);
        assert!(hermitian_eig_sectored(&h, &[0, 0, 1, 1]).is_err());
    }

    #[test]
    fn default_cutoff_policy() {
        assert_eq!(default_cutoff(0.0), 20);
        assert_eq!(default_cutoff(1.0), 36);
        assert_eq!(default_cutoff(1.5), 61);
    }

    #[test]
    fn convergence_check_reports_drift() {
        let ok = check_convergence(20, 3, |n| Ok(vec![1.0, 2.0, 3.0 + 1e-12 * n as f64]));
        assert!(ok.is_ok());
        let bad = check_convergence(20, 3, |n| Ok(vec![1.0, 2.0, 3.0 + 1e-3 * n as f64]));
        assert!(matches!(bad, Err(Error::NotConverged { cutoff: 20, .. })));
    }

    fn random_hermitian(n: usize, entries: &[f64]) -> Operator {
        let space = SpaceDescriptor::boson(n).unwrap();
        let raw = Operator::from_fn(space, |i, j| {
            let k = 2 * (i * n + j);
            c64::new(entries[k % entries.len()], entries[(k + 1) % entries.len()])
        });
        (&raw + &raw.adjoint()).scaled(re(0.5)).symmetrized()
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn eig_reconstructs_and_is_orthonormal(
            n in 2usize..24,
            entries in prop::collection::vec(-2.0f64..2.0, 8..64),
        ) {
            let h = random_hermitian(n, &entries);
            let s = hermitian_eig(&h).unwrap();
            prop_assert!(s.reconstruct().max_abs_diff(&h) < 1e-10);
            let v = s.vectors();
            let gram = v.adjoint() * v;
            for i in 0..n {
                for j in 0..n {
                    let expected = if i == j { 1.0 } else { 0.0 };
                    prop_assert!((gram[(i, j)] - re(expected)).norm() < 1e-10);
                }
            }
            for w in s.values().windows(2) {
                prop_assert!(w[0] <= w[1]);
            }
        }

        #[test]
        fn expm_is_unitary(
            n in 2usize..16,
            scale in -3.0f64..3.0,
            entries in prop::collection::vec(-2.0f64..2.0, 8..64),
        ) {
            let h = random_hermitian(n, &entries);
            let u = expm_hermitian_generator(&h, scale).unwrap();
            let gram = &u.adjoint() * &u;
            prop_assert!(gram.max_abs_diff(&Operator::identity(h.space())) < 1e-10);
        }

        #[test]
        fn tensor_is_associative(
            entries in prop::collection::vec(-1.0f64..1.0, 8..32),
        ) {
            let a = random_hermitian(2, &entries);
            let b = random_hermitian(3, &entries[1..]);
            let c = random_hermitian(2, &entries[2..]);
            let left = tensor(&tensor(&a, &b), &c);
            let right = tensor(&a, &tensor(&b, &c));
            prop_assert_eq!(left.space(), right.space());
            prop_assert!(left.max_abs_diff(&right) < 1e-14);
        }
    }
}
