//! Dense complex matrices for the 2x2 and 4x4 operators used throughout the
//! crate, with a cyclic Jacobi eigensolver for Hermitian input.
//!
//! Matrices are stored row-major. Two-qubit operators use the ordering
//! `|00>, |01>, |10>, |11>` with system A as the most significant index.

use std::fmt;
use std::ops::{Add, Mul, Sub};

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::tolerance;

pub type C64 = Complex64;

const ZERO: C64 = C64::new(0.0, 0.0);
const ONE: C64 = C64::new(1.0, 0.0);

/// Row-major dense complex matrix.
#[derive(Clone, PartialEq)]
pub struct CMat {
    rows: usize,
    cols: usize,
    data: Vec<C64>,
}

impl CMat {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![ZERO; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = ONE;
        }
        m
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<C64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch {
                expected: format!("{} entries", rows * cols),
                found: format!("{} entries", data.len()),
            });
        }
        Ok(Self { rows, cols, data })
    }

    /// Builds a square matrix from real entries, row-major.
    pub fn from_real(n: usize, entries: &[f64]) -> Result<Self> {
        Self::from_vec(n, n, entries.iter().map(|&x| C64::new(x, 0.0)).collect())
    }

    pub fn from_diag(diag: &[f64]) -> Self {
        let n = diag.len();
        let mut m = Self::zeros(n, n);
        for (i, &d) in diag.iter().enumerate() {
            m.data[i * n + i] = C64::new(d, 0.0);
        }
        m
    }

    /// `|v><v|` for a column vector `v`.
    pub fn outer(v: &[C64]) -> Self {
        let n = v.len();
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                m.data[i * n + j] = v[i] * v[j].conj();
            }
        }
        m
    }

    pub fn pauli_x() -> Self {
        Self::from_real(2, &[0.0, 1.0, 1.0, 0.0]).expect("2x2")
    }

    pub fn pauli_y() -> Self {
        Self {
            rows: 2,
            cols: 2,
            data: vec![ZERO, C64::new(0.0, -1.0), C64::new(0.0, 1.0), ZERO],
        }
    }

    pub fn pauli_z() -> Self {
        Self::from_diag(&[1.0, -1.0])
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn entries(&self) -> &[C64] {
        &self.data
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> C64 {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, value: C64) {
        self.data[i * self.cols + j] = value;
    }

    pub fn adjoint(&self) -> Self {
        let mut out = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out.data[j * self.rows + i] = self.get(i, j).conj();
            }
        }
        out
    }

    pub fn transpose(&self) -> Self {
        let mut out = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out.data[j * self.rows + i] = self.get(i, j);
            }
        }
        out
    }

    pub fn conj(&self) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|z| z.conj()).collect(),
        }
    }

    pub fn scale(&self, s: C64) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&z| z * s).collect(),
        }
    }

    pub fn scale_real(&self, s: f64) -> Self {
        self.scale(C64::new(s, 0.0))
    }

    pub fn trace(&self) -> C64 {
        debug_assert!(self.is_square());
        (0..self.rows).map(|i| self.get(i, i)).sum()
    }

    /// `self * other * self†`, the conjugation used by every Kraus map here.
    pub fn sandwich(&self, other: &CMat) -> CMat {
        &(self * other) * &self.adjoint()
    }

    /// Largest entrywise modulus of `self - other`.
    pub fn max_abs_diff(&self, other: &CMat) -> f64 {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    pub fn hermitian_deviation(&self) -> f64 {
        if !self.is_square() {
            return f64::INFINITY;
        }
        let n = self.rows;
        let mut dev: f64 = 0.0;
        for i in 0..n {
            for j in i..n {
                dev = dev.max((self.get(i, j) - self.get(j, i).conj()).norm());
            }
        }
        dev
    }

    pub fn is_hermitian(&self) -> bool {
        self.hermitian_deviation() <= tolerance::HERMITIAN
    }

    /// Replaces the matrix by `(m + m†)/2`.
    pub fn hermitize(&self) -> CMat {
        (self + &self.adjoint()).scale_real(0.5)
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    fn ensure_hermitian(&self) -> Result<()> {
        let deviation = self.hermitian_deviation();
        if deviation <= tolerance::HERMITIAN {
            Ok(())
        } else {
            Err(Error::NotHermitian { deviation })
        }
    }
}

impl fmt::Debug for CMat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "CMat {}x{} [", self.rows, self.cols)?;
        for i in 0..self.rows {
            write!(f, "  ")?;
            for j in 0..self.cols {
                let z = self.get(i, j);
                write!(f, "{:+.6}{:+.6}i  ", z.re, z.im)?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

impl Mul for &CMat {
    type Output = CMat;

    fn mul(self, rhs: &CMat) -> CMat {
        assert_eq!(self.cols, rhs.rows, "matrix product dimension mismatch");
        let mut out = CMat::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(i, k);
                if a == ZERO {
                    continue;
                }
                for j in 0..rhs.cols {
                    out.data[i * rhs.cols + j] += a * rhs.get(k, j);
                }
            }
        }
        out
    }
}

impl Add for &CMat {
    type Output = CMat;

    fn add(self, rhs: &CMat) -> CMat {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        CMat {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a + b).collect(),
        }
    }
}

impl Sub for &CMat {
    type Output = CMat;

    fn sub(self, rhs: &CMat) -> CMat {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        CMat {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a - b).collect(),
        }
    }
}

/// Kronecker product `a ⊗ b`.
pub fn kron(a: &CMat, b: &CMat) -> CMat {
    let rows = a.rows * b.rows;
    let cols = a.cols * b.cols;
    let mut out = CMat::zeros(rows, cols);
    for i in 0..a.rows {
        for j in 0..a.cols {
            let aij = a.get(i, j);
            for r in 0..b.rows {
                for s in 0..b.cols {
                    out.set(i * b.rows + r, j * b.cols + s, aij * b.get(r, s));
                }
            }
        }
    }
    out
}

/// Eigenvalues (descending) with the matching orthonormal eigenvectors
/// stored as the columns of `vectors`.
#[derive(Debug, Clone)]
pub struct HermitianEigen {
    pub values: Vec<f64>,
    pub vectors: CMat,
}

impl HermitianEigen {
    /// `V Λ V†`.
    pub fn reconstruct(&self) -> CMat {
        self.map_values(|x| x)
    }

    /// `V f(Λ) V†`.
    pub fn map_values(&self, f: impl Fn(f64) -> f64) -> CMat {
        let n = self.values.len();
        let mut out = CMat::zeros(n, n);
        for (k, &lambda) in self.values.iter().enumerate() {
            let w = f(lambda);
            if w == 0.0 {
                continue;
            }
            for i in 0..n {
                let vik = self.vectors.get(i, k) * w;
                for j in 0..n {
                    out.data[i * n + j] += vik * self.vectors.get(j, k).conj();
                }
            }
        }
        out
    }
}

/// Full eigendecomposition of a Hermitian matrix by cyclic complex Jacobi
/// rotations.
pub fn hermitian_eigen(m: &CMat) -> Result<HermitianEigen> {
    if !m.is_square() {
        return Err(Error::DimensionMismatch {
            expected: "square matrix".into(),
            found: format!("{}x{}", m.rows, m.cols),
        });
    }
    m.ensure_hermitian()?;
    Ok(jacobi(m.hermitize()))
}

/// Eigenvalues of a Hermitian matrix, sorted descending.
pub fn hermitian_eigenvalues(m: &CMat) -> Result<Vec<f64>> {
    hermitian_eigen(m).map(|e| e.values)
}

fn off_diagonal_mass(a: &CMat) -> f64 {
    let n = a.rows;
    let mut sum = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                sum += a.get(i, j).norm_sqr();
            }
        }
    }
    sum.sqrt()
}

fn jacobi(mut a: CMat) -> HermitianEigen {
    let n = a.rows;
    let mut v = CMat::identity(n);
    let scale = a.frobenius_norm().max(1.0);

    for _ in 0..tolerance::JACOBI_MAX_SWEEPS {
        if off_diagonal_mass(&a) < tolerance::JACOBI_OFF_DIAGONAL * scale {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                rotate(&mut a, &mut v, p, q);
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    let diag: Vec<f64> = (0..n).map(|i| a.get(i, i).re).collect();
    order.sort_by(|&i, &j| diag[j].total_cmp(&diag[i]));

    let mut vectors = CMat::zeros(n, n);
    for (col, &k) in order.iter().enumerate() {
        for i in 0..n {
            vectors.set(i, col, v.get(i, k));
        }
    }
    HermitianEigen {
        values: order.iter().map(|&k| diag[k]).collect(),
        vectors,
    }
}

/// Zeroes `a[p][q]` with the unitary `U` acting on rows/columns `p, q`:
/// `U_pp = c, U_pq = s, U_qp = -s e^{-iφ}, U_qq = c e^{-iφ}` where
/// `a[p][q] = |a_pq| e^{iφ}`. Applies `a <- U† a U` and `v <- v U`.
fn rotate(a: &mut CMat, v: &mut CMat, p: usize, q: usize) {
    let apq = a.get(p, q);
    let mag = apq.norm();
    if mag == 0.0 {
        return;
    }
    let app = a.get(p, p).re;
    let aqq = a.get(q, q).re;
    let phase = apq / mag;
    let phase_conj = phase.conj();

    let tau = (aqq - app) / (2.0 * mag);
    let t = if tau >= 0.0 {
        1.0 / (tau + (1.0 + tau * tau).sqrt())
    } else {
        -1.0 / (-tau + (1.0 + tau * tau).sqrt())
    };
    let c = 1.0 / (1.0 + t * t).sqrt();
    let s = t * c;

    let u_pp = C64::new(c, 0.0);
    let u_pq = C64::new(s, 0.0);
    let u_qp = phase_conj * (-s);
    let u_qq = phase_conj * c;

    let n = a.rows;
    // a <- a U (columns p, q)
    for k in 0..n {
        let akp = a.get(k, p);
        let akq = a.get(k, q);
        a.set(k, p, akp * u_pp + akq * u_qp);
        a.set(k, q, akp * u_pq + akq * u_qq);
    }
    // a <- U† a (rows p, q)
    for k in 0..n {
        let apk = a.get(p, k);
        let aqk = a.get(q, k);
        a.set(p, k, u_pp.conj() * apk + u_qp.conj() * aqk);
        a.set(q, k, u_pq.conj() * apk + u_qq.conj() * aqk);
    }
    a.set(p, q, ZERO);
    a.set(q, p, ZERO);
    a.set(p, p, C64::new(a.get(p, p).re, 0.0));
    a.set(q, q, C64::new(a.get(q, q).re, 0.0));

    for k in 0..n {
        let vkp = v.get(k, p);
        let vkq = v.get(k, q);
        v.set(k, p, vkp * u_pp + vkq * u_qp);
        v.set(k, q, vkp * u_pq + vkq * u_qq);
    }
}

/// Singular values of an arbitrary square matrix, descending.
///
/// Computed as the non-negative half of the spectrum of the Hermitian
/// dilation `[[0, m], [m†, 0]]`, which avoids the square root of a squared
/// spectrum and keeps tiny singular values at rounding level.
pub fn singular_values(m: &CMat) -> Vec<f64> {
    assert!(m.is_square(), "singular_values expects a square matrix");
    let n = m.rows;
    let mut h = CMat::zeros(2 * n, 2 * n);
    for i in 0..n {
        for j in 0..n {
            let z = m.get(i, j);
            h.set(i, n + j, z);
            h.set(n + j, i, z.conj());
        }
    }
    let mut values = jacobi(h).values;
    values.truncate(n);
    values.iter_mut().for_each(|x| *x = x.max(0.0));
    values
}

/// Power sums `tr(m^k)` for `k = 1..=n`.
fn power_sums(m: &CMat) -> Vec<f64> {
    let n = m.rows;
    let mut sums = Vec::with_capacity(n);
    let mut power = m.clone();
    for k in 1..=n {
        sums.push(power.trace().re);
        if k < n {
            power = &power * m;
        }
    }
    sums
}

/// Elementary symmetric polynomials `e_1..e_n` of the eigenvalues of `m`,
/// obtained from traces of powers with Newton's identities.
pub fn elementary_symmetric(m: &CMat) -> Result<Vec<f64>> {
    if !m.is_square() {
        return Err(Error::DimensionMismatch {
            expected: "square matrix".into(),
            found: format!("{}x{}", m.rows, m.cols),
        });
    }
    m.ensure_hermitian()?;
    let p = power_sums(&m.hermitize());
    let n = p.len();
    let mut e = vec![1.0; n + 1];
    for k in 1..=n {
        let mut acc = 0.0;
        for i in 1..=k {
            let sign = if i % 2 == 1 { 1.0 } else { -1.0 };
            acc += sign * e[k - i] * p[i - 1];
        }
        e[k] = acc / k as f64;
    }
    Ok(e[1..].to_vec())
}

/// Positive-semidefiniteness of a Hermitian matrix without an eigensolve.
///
/// The characteristic polynomial of a Hermitian matrix has only real roots,
/// so all roots are non-negative exactly when every elementary symmetric
/// polynomial of the spectrum is non-negative.
pub fn positivity_check(m: &CMat) -> Result<bool> {
    Ok(elementary_symmetric(m)?
        .iter()
        .all(|&e| e >= -tolerance::POSITIVITY))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn random_hermitian(entries: &[f64]) -> CMat {
        // 16 reals -> 4x4 Hermitian
        let mut m = CMat::zeros(4, 4);
        let mut it = entries.iter();
        for i in 0..4 {
            m.set(i, i, c(*it.next().unwrap(), 0.0));
            for j in (i + 1)..4 {
                let z = c(*it.next().unwrap(), *it.next().unwrap());
                m.set(i, j, z);
                m.set(j, i, z.conj());
            }
        }
        m
    }

    fn unitary2(theta: f64, phi: f64, lambda: f64) -> CMat {
        let (s, co) = (theta / 2.0).sin_cos();
        CMat::from_vec(
            2,
            2,
            vec![
                c(co, 0.0),
                -C64::from_polar(s, lambda),
                C64::from_polar(s, phi),
                C64::from_polar(co, phi + lambda),
            ],
        )
        .unwrap()
    }

    #[test]
    fn kron_identities() {
        assert_eq!(kron(&CMat::identity(2), &CMat::identity(2)), CMat::identity(4));
        assert_eq!(
            kron(&CMat::from_diag(&[1.0, 0.0]), &CMat::identity(2)),
            CMat::from_diag(&[1.0, 1.0, 0.0, 0.0])
        );
        assert_eq!(
            kron(&CMat::pauli_z(), &CMat::pauli_z()),
            CMat::from_diag(&[1.0, -1.0, -1.0, 1.0])
        );
    }

    #[test]
    fn kron_of_rectangular_shapes() {
        let col = CMat::from_vec(2, 1, vec![c(1.0, 0.0), c(2.0, 0.0)]).unwrap();
        let row = CMat::from_vec(1, 2, vec![c(3.0, 0.0), c(0.0, 1.0)]).unwrap();
        let k = kron(&col, &row);
        assert_eq!((k.rows(), k.cols()), (2, 2));
        assert_eq!(k.get(1, 1), c(0.0, 2.0));
    }

    #[test]
    fn eigenvalues_of_simple_matrices() {
        let vals = hermitian_eigenvalues(&CMat::from_diag(&[0.25; 4])).unwrap();
        assert_eq!(vals, vec![0.25; 4]);

        let vals = hermitian_eigenvalues(&CMat::pauli_x()).unwrap();
        assert!((vals[0] - 1.0).abs() < 1e-14 && (vals[1] + 1.0).abs() < 1e-14);

        let vals = hermitian_eigenvalues(&CMat::pauli_y()).unwrap();
        assert!((vals[0] - 1.0).abs() < 1e-14 && (vals[1] + 1.0).abs() < 1e-14);

        let h = std::f64::consts::FRAC_1_SQRT_2;
        let bell = CMat::outer(&[c(h, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(h, 0.0)]);
        // rank-1 projector: P^2 = P
        assert!((&bell * &bell).max_abs_diff(&bell) < 1e-15);
        let vals = hermitian_eigenvalues(&bell).unwrap();
        for (got, want) in vals.iter().zip([1.0, 0.0, 0.0, 0.0]) {
            assert!((got - want).abs() < 1e-14, "{vals:?}");
        }
    }

    #[test]
    fn rejects_non_hermitian() {
        let m = CMat::from_real(2, &[0.0, 1.0, 0.0, 0.0]).unwrap();
        assert!(matches!(hermitian_eigenvalues(&m), Err(Error::NotHermitian { .. })));
        assert!(matches!(positivity_check(&m), Err(Error::NotHermitian { .. })));
    }

    #[test]
    fn positivity_examples() {
        assert!(positivity_check(&CMat::from_diag(&[0.25; 4])).unwrap());
        assert!(!positivity_check(&CMat::from_diag(&[0.5, 0.6, -0.1, 0.0])).unwrap());
    }

    #[test]
    fn singular_values_of_rank_one() {
        let v = [c(0.6, 0.0), c(0.0, 0.8)];
        let w = [c(0.0, 1.0), c(0.0, 0.0)];
        let mut m = CMat::zeros(2, 2);
        for i in 0..2 {
            for j in 0..2 {
                m.set(i, j, v[i] * w[j].conj() * 3.0);
            }
        }
        let s = singular_values(&m);
        assert!((s[0] - 3.0).abs() < 1e-14);
        assert!(s[1] < 1e-15);
    }

    proptest! {
        #[test]
        fn kron_trace_and_bilinearity(x in prop::collection::vec(-1.0f64..1.0, 24)) {
            let a = CMat::from_vec(2, 2, x[0..4].iter().zip(&x[4..8]).map(|(&r, &i)| c(r, i)).collect()).unwrap();
            let b = CMat::from_vec(2, 2, x[8..12].iter().zip(&x[12..16]).map(|(&r, &i)| c(r, i)).collect()).unwrap();
            let d = CMat::from_vec(2, 2, x[16..20].iter().zip(&x[20..24]).map(|(&r, &i)| c(r, i)).collect()).unwrap();
            let tr = kron(&a, &b).trace();
            prop_assert!((tr - a.trace() * b.trace()).norm() < 1e-12);
            let lhs = kron(&(&a + &d), &b);
            let rhs = &kron(&a, &b) + &kron(&d, &b);
            prop_assert!(lhs.max_abs_diff(&rhs) < 1e-12);
            let assoc_l = kron(&kron(&a, &b), &d);
            let assoc_r = kron(&a, &kron(&b, &d));
            prop_assert!(assoc_l.max_abs_diff(&assoc_r) < 1e-12);
        }

        #[test]
        fn eigen_reconstruction_and_trace(x in prop::collection::vec(-1.0f64..1.0, 16)) {
            let m = random_hermitian(&x);
            let eig = hermitian_eigen(&m).unwrap();
            prop_assert!(eig.reconstruct().max_abs_diff(&m) <= 1e-9);
            let sum: f64 = eig.values.iter().sum();
            prop_assert!((sum - m.trace().re).abs() < 1e-10);
            prop_assert!(eig.values.windows(2).all(|w| w[0] >= w[1]));
            let vtv = &eig.vectors.adjoint() * &eig.vectors;
            prop_assert!(vtv.max_abs_diff(&CMat::identity(4)) < 1e-12);
        }

        #[test]
        fn eigenvalues_invariant_under_local_unitaries(
            x in prop::collection::vec(-1.0f64..1.0, 16),
            angles in prop::collection::vec(0.0f64..std::f64::consts::TAU, 6),
        ) {
            let m = random_hermitian(&x);
            let u = kron(&unitary2(angles[0], angles[1], angles[2]), &unitary2(angles[3], angles[4], angles[5]));
            let rotated = u.sandwich(&m);
            let a = hermitian_eigenvalues(&m).unwrap();
            let b = hermitian_eigenvalues(&rotated).unwrap();
            for (x, y) in a.iter().zip(&b) {
                prop_assert!((x - y).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn newton_positivity_agrees_with_spectrum() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let mut positives = 0;
        for _ in 0..1000 {
            // Shift a random Hermitian matrix so both outcomes occur often.
            let x: Vec<f64> = (0..16).map(|_| rng.random_range(-1.0..1.0)).collect();
            let shift = rng.random_range(0.0..2.5);
            let m = &random_hermitian(&x) + &CMat::identity(4).scale_real(shift);
            let min = *hermitian_eigenvalues(&m).unwrap().last().unwrap();
            let newton = positivity_check(&m).unwrap();
            assert_eq!(newton, min >= -tolerance::EIGEN_POSITIVITY, "min eig {min}");
            positives += newton as usize;
        }
        assert!(positives > 100 && positives < 900, "{positives}");
    }
}
