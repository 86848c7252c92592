//! Collective-spin algebra in the Dicke basis `|j, m⟩`, `m = j, j-1, ..., -j`.
//!
//! Row/column index `k` of every matrix and vector corresponds to `m = j - k`.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::HalfInt;

pub type Vec3 = [f64; 3];

/// Spin-j irreducible representation (ħ = 1).
#[derive(Debug, Clone)]
pub struct SpinRep {
    pub j: HalfInt,
    pub sx: DMatrix<Complex64>,
    pub sy: DMatrix<Complex64>,
    pub sz: DMatrix<Complex64>,
}

impl SpinRep {
    pub fn dim(&self) -> usize {
        self.j.dim()
    }

    /// `S⁺ = Sx + i Sy`.
    pub fn raising(&self) -> DMatrix<Complex64> {
        &self.sx + &self.sy * Complex64::i()
    }

    pub fn casimir(&self) -> DMatrix<Complex64> {
        &self.sx * &self.sx + &self.sy * &self.sy + &self.sz * &self.sz
    }

    pub fn along(&self, n: Vec3) -> DMatrix<Complex64> {
        &self.sx * Complex64::from(n[0])
            + &self.sy * Complex64::from(n[1])
            + &self.sz * Complex64::from(n[2])
    }
}

/// `⟨m+1|S⁺|m⟩ = √(j(j+1) − m(m+1))`.
fn ladder(j: f64, m: f64) -> f64 {
    (j * (j + 1.0) - m * (m + 1.0)).max(0.0).sqrt()
}

pub fn spin_matrices(j: HalfInt) -> SpinRep {
    assert!(j.twice() >= 0, "spin must be non-negative");
    let dim = j.dim();
    let jv = j.value();
    let mut sx = DMatrix::<Complex64>::zeros(dim, dim);
    let mut sy = DMatrix::<Complex64>::zeros(dim, dim);
    let mut sz = DMatrix::<Complex64>::zeros(dim, dim);
    for k in 0..dim {
        let m = jv - k as f64;
        sz[(k, k)] = Complex64::from(m);
        if k + 1 < dim {
            // S⁺ maps column k+1 (m-1) to row k (m).
            let a = ladder(jv, m - 1.0);
            sx[(k, k + 1)] = Complex64::from(0.5 * a);
            sx[(k + 1, k)] = Complex64::from(0.5 * a);
            sy[(k, k + 1)] = Complex64::new(0.0, -0.5 * a);
            sy[(k + 1, k)] = Complex64::new(0.0, 0.5 * a);
        }
    }
    SpinRep { j, sx, sy, sz }
}

/// Natural log of `n choose k`; `-inf` outside `0 <= k <= n`.
pub fn ln_binomial(n: i64, k: i64) -> f64 {
    if k < 0 || k > n || n < 0 {
        return f64::NEG_INFINITY;
    }
    libm::lgamma(n as f64 + 1.0) - libm::lgamma(k as f64 + 1.0) - libm::lgamma((n - k) as f64 + 1.0)
}

/// `n choose k` as a float: direct product for `n <= 60`, log space above.
pub fn binomial_f64(n: i64, k: i64) -> f64 {
    if k < 0 || k > n || n < 0 {
        return 0.0;
    }
    if n <= 60 {
        let k = k.min(n - k);
        let mut acc = 1.0;
        for i in 0..k {
            acc = acc * (n - i) as f64 / (i + 1) as f64;
        }
        acc.round()
    } else {
        ln_binomial(n, k).exp()
    }
}

fn binomial_exact(n: u32, k: i64) -> u128 {
    if k < 0 || k > n as i64 {
        return 0;
    }
    let k = (k as u32).min(n - k as u32);
    let mut acc: u128 = 1;
    for i in 0..k {
        // acc * (n - i) is divisible by (i + 1) at every step.
        acc = acc * (n - i) as u128 / (i + 1) as u128;
    }
    acc
}

/// Multiplicity `A_j = C(2J, J−j) − C(2J, J−j−1)` of the spin-`j` irrep in
/// `2J` spin-1/2 particles.
///
/// Exact for `2J <= 120` (the `u128` range of the binomials).
pub fn degeneracy(total: HalfInt, j: HalfInt) -> Result<u128> {
    let diff = total - j;
    if !diff.is_integer() || diff.twice() < 0 || j.twice() < 0 {
        return Err(Error::NonIntegerSpinDifference { total, block: j });
    }
    let n = total.twice();
    if n > 120 {
        return Err(Error::InvalidParameter(format!(
            "degeneracy is exact only up to 120 particles, got {n}"
        )));
    }
    let k = diff.twice() / 2;
    Ok(binomial_exact(n as u32, k) - binomial_exact(n as u32, k - 1))
}

/// Real small-d matrix `d[(row, col)] = d^j_{m' m}(θ) = ⟨j m'| e^{−iθ S_y} |j m⟩`
/// with `m' = j − row`, `m = j − col`.
#[derive(Debug, Clone)]
pub struct WignerD {
    pub j: HalfInt,
    pub theta: f64,
    pub d: DMatrix<f64>,
}

impl WignerD {
    pub fn to_complex(&self) -> DMatrix<Complex64> {
        self.d.map(Complex64::from)
    }

    /// Squared entries `|d^j_{m' m}|²`.
    pub fn squared(&self) -> DMatrix<f64> {
        self.d.map(|x| x * x)
    }
}

/// Jacobi polynomial `P_n^{(a,b)}(x)` by the three-term recurrence.
fn jacobi(n: i64, a: f64, b: f64, x: f64) -> f64 {
    if n == 0 {
        return 1.0;
    }
    let mut p0 = 1.0;
    let mut p1 = (a + 1.0) + (a + b + 2.0) * (x - 1.0) / 2.0;
    for k in 2..=n {
        let k = k as f64;
        let c = 2.0 * k + a + b;
        let a1 = 2.0 * k * (k + a + b) * (c - 2.0);
        let a2 = (c - 1.0) * (a * a - b * b);
        let a3 = (c - 2.0) * (c - 1.0) * c;
        let a4 = 2.0 * (k + a - 1.0) * (k + b - 1.0) * c;
        let p2 = ((a2 + a3 * x) * p1 - a4 * p0) / a1;
        p0 = p1;
        p1 = p2;
    }
    p1
}

/// One element `d^j_{m' m}(θ)` from the Jacobi-polynomial representation.
/// All labels are passed doubled.
fn small_d_element(tj: i64, tmp: i64, tm: i64, theta: f64) -> f64 {
    // Work with integers: k, a, b, lambda are integers because j±m are.
    let jpm = (tj + tm) / 2;
    let jmm = (tj - tm) / 2;
    let jpmp = (tj + tmp) / 2;
    let jmmp = (tj - tmp) / 2;
    let diff = (tmp - tm) / 2; // m' − m
    let k = jpm.min(jmm).min(jpmp).min(jmmp);
    let (a, lambda) = if k == jmm || k == jpmp {
        (-diff, 0)
    } else {
        (diff, diff)
    };
    let b = tj - 2 * k - a;
    let sign = if lambda.rem_euclid(2) == 0 { 1.0 } else { -1.0 };
    let ln_pref = 0.5 * (ln_binomial(tj - k, k + a) - ln_binomial(k + b, b));
    let half = 0.5 * theta;
    let (s, c) = half.sin_cos();
    sign * ln_pref.exp()
        * s.powi(a as i32)
        * c.powi(b as i32)
        * jacobi(k, a as f64, b as f64, theta.cos())
}

pub fn wigner_small_d(j: HalfInt, theta: f64) -> WignerD {
    let tj = j.twice();
    let dim = j.dim();
    let mut d = DMatrix::<f64>::zeros(dim, dim);
    for row in 0..dim {
        let tmp = tj - 2 * row as i64;
        for col in 0..dim {
            let tm = tj - 2 * col as i64;
            d[(row, col)] = small_d_element(tj, tmp, tm, theta);
        }
    }
    WignerD { j, theta, d }
}

/// A normalized state of one spin-j block.
#[derive(Debug, Clone, PartialEq)]
pub struct PureSpinState {
    pub j: HalfInt,
    pub amplitudes: DVector<Complex64>,
}

impl PureSpinState {
    pub fn new(j: HalfInt, amplitudes: DVector<Complex64>) -> Result<Self> {
        if amplitudes.len() != j.dim() {
            return Err(Error::InvalidParameter(format!(
                "expected {} amplitudes for j = {j}, got {}",
                j.dim(),
                amplitudes.len()
            )));
        }
        let n2 = amplitudes.norm_squared();
        if (n2 - 1.0).abs() > 1e-12 {
            return Err(Error::NotNormalized(n2));
        }
        Ok(PureSpinState { j, amplitudes })
    }

    /// `|j, m⟩`.
    pub fn basis(j: HalfInt, m: HalfInt) -> Self {
        let k = ((j - m).twice() / 2) as usize;
        let mut amplitudes = DVector::zeros(j.dim());
        amplitudes[k] = Complex64::from(1.0);
        PureSpinState { j, amplitudes }
    }

    pub fn expectation(&self, op: &DMatrix<Complex64>) -> Complex64 {
        self.amplitudes.dotc(&(op * &self.amplitudes))
    }

    /// `|⟨self|other⟩|²`.
    pub fn fidelity(&self, other: &PureSpinState) -> f64 {
        self.amplitudes.dotc(&other.amplitudes).norm_sqr()
    }

    /// Unit vector along `⟨S⟩`.
    pub fn polarization(&self, rep: &SpinRep) -> Vec3 {
        [
            self.expectation(&rep.sx).re,
            self.expectation(&rep.sy).re,
            self.expectation(&rep.sz).re,
        ]
    }
}

/// Spin coherent state pointing along `(θ, φ)`:
/// amplitude at `m` is `√C(2j, j+m) cos(θ/2)^{j+m} sin(θ/2)^{j−m} e^{−imφ}`.
pub fn coherent_state(j: HalfInt, theta: f64, phi: f64) -> PureSpinState {
    let tj = j.twice();
    let (s, c) = (0.5 * theta).sin_cos();
    let amplitudes = DVector::from_iterator(
        j.dim(),
        j.m_values().map(|m| {
            let up = (tj + m.twice()) / 2;
            let down = (tj - m.twice()) / 2;
            let mag = (0.5 * ln_binomial(tj, up)).exp() * c.powi(up as i32) * s.powi(down as i32);
            Complex64::from_polar(mag, -m.value() * phi)
        }),
    );
    PureSpinState { j, amplitudes }
}

/// Coherent state along the unit vector `u`.
pub fn coherent_state_along(j: HalfInt, u: Vec3) -> PureSpinState {
    let (theta, phi) = to_spherical(u);
    coherent_state(j, theta, phi)
}

pub fn to_spherical(u: Vec3) -> (f64, f64) {
    (u[2].clamp(-1.0, 1.0).acos(), u[1].atan2(u[0]))
}

/// Uniform point on the unit sphere: `z ~ U[−1, 1]`, `φ ~ U[0, 2π)`.
pub fn sample_uniform_direction<R: Rng + ?Sized>(rng: &mut R) -> Vec3 {
    let z: f64 = rng.random_range(-1.0..=1.0);
    let phi: f64 = rng.random_range(0.0..2.0 * PI);
    let rho = (1.0 - z * z).max(0.0).sqrt();
    [rho * phi.cos(), rho * phi.sin(), z]
}

pub fn dot(a: Vec3, b: Vec3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

pub fn norm(a: Vec3) -> f64 {
    dot(a, a).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn max_abs(m: &DMatrix<Complex64>) -> f64 {
        m.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    #[test]
    fn spin_half_is_pauli_over_two() {
        let rep = spin_matrices(HalfInt::HALF);
        assert_eq!(rep.sz[(0, 0)].re, 0.5);
        assert_eq!(rep.sz[(1, 1)].re, -0.5);
        assert_eq!(rep.sx[(0, 1)].re, 0.5);
        assert_eq!(rep.sx[(1, 0)].re, 0.5);
        assert_eq!(rep.sy[(0, 1)], Complex64::new(0.0, -0.5));
    }

    #[test]
    fn spin_one_casimir() {
        let rep = spin_matrices(HalfInt::ONE);
        let c = rep.casimir() - DMatrix::<Complex64>::identity(3, 3) * Complex64::from(2.0);
        assert!(max_abs(&c) < 1e-14);
    }

    #[test]
    fn commutators_close() {
        for tj in 0..=12 {
            let rep = spin_matrices(HalfInt::from_twice(tj));
            let comm = &rep.sx * &rep.sy - &rep.sy * &rep.sx - &rep.sz * Complex64::i();
            assert!(max_abs(&comm) < 1e-12, "j = {tj}/2");
            let comm = &rep.sy * &rep.sz - &rep.sz * &rep.sy - &rep.sx * Complex64::i();
            assert!(max_abs(&comm) < 1e-12);
        }
    }

    #[test]
    fn casimir_up_to_fifty() {
        for tj in [1, 7, 40, 99, 100] {
            let j = HalfInt::from_twice(tj);
            let rep = spin_matrices(j);
            let jj = j.value() * (j.value() + 1.0);
            let d = rep.casimir()
                - DMatrix::<Complex64>::identity(j.dim(), j.dim()) * Complex64::from(jj);
            assert!(max_abs(&d) < 1e-11, "j = {j}: {}", max_abs(&d));
        }
    }

    #[test]
    fn degeneracy_small_cases() {
        assert_eq!(degeneracy(HalfInt::ONE, HalfInt::ONE).unwrap(), 1);
        assert_eq!(degeneracy(HalfInt::ONE, HalfInt::ZERO).unwrap(), 1);
        assert_eq!(
            degeneracy(HalfInt::from_twice(3), HalfInt::HALF).unwrap(),
            2
        );
        assert!(degeneracy(HalfInt::ONE, HalfInt::HALF).is_err());
        assert!(degeneracy(HalfInt::ONE, HalfInt::from_twice(4)).is_err());
    }

    #[test]
    fn degeneracy_dimension_sum_rule() {
        for tj in 0..=20 {
            let total = HalfInt::from_twice(tj);
            let sum: u128 = total
                .blocks()
                .map(|j| degeneracy(total, j).unwrap() * j.dim() as u128)
                .sum();
            assert_eq!(sum, 1u128 << tj);
        }
        let total = HalfInt::from_twice(100);
        let sum: u128 = total
            .blocks()
            .map(|j| degeneracy(total, j).unwrap() * j.dim() as u128)
            .sum();
        assert_eq!(sum, 1u128 << 100);
    }

    #[test]
    fn binomials_agree_across_regimes() {
        assert_eq!(binomial_f64(10, 3), 120.0);
        assert_eq!(binomial_f64(4, 5), 0.0);
        let direct = binomial_f64(60, 30);
        let logspace = ln_binomial(60, 30).exp();
        assert!((direct - logspace).abs() / direct < 1e-12);
    }

    #[test]
    fn small_d_spin_half() {
        let th = 0.73;
        let w = wigner_small_d(HalfInt::HALF, th);
        let (s, c) = (th / 2.0).sin_cos();
        assert!((w.d[(0, 0)] - c).abs() < 1e-15);
        assert!((w.d[(0, 1)] + s).abs() < 1e-15);
        assert!((w.d[(1, 0)] - s).abs() < 1e-15);
        assert!((w.d[(1, 1)] - c).abs() < 1e-15);
    }

    #[test]
    fn small_d_identity_at_zero() {
        for tj in [0, 1, 2, 5, 30, 100] {
            let j = HalfInt::from_twice(tj);
            let w = wigner_small_d(j, 0.0);
            let diff = &w.d - DMatrix::<f64>::identity(j.dim(), j.dim());
            assert!(diff.amax() < 1e-12, "j = {j}: {}", diff.amax());
        }
    }

    #[test]
    fn small_d_orthogonal_up_to_fifty() {
        for tj in [3, 20, 61, 100] {
            let j = HalfInt::from_twice(tj);
            for th in [0.1, 1.0, std::f64::consts::FRAC_PI_2, 2.5, 3.1, -0.7] {
                let w = wigner_small_d(j, th);
                let dd = &w.d * w.d.transpose() - DMatrix::<f64>::identity(j.dim(), j.dim());
                assert!(dd.amax() < 1e-10, "j = {j}, θ = {th}: {}", dd.amax());
            }
        }
    }

    #[test]
    fn coherent_state_special_cases() {
        let j = HalfInt::from_twice(5);
        let s = coherent_state(j, 0.0, 1.2);
        assert!((s.amplitudes[0].norm() - 1.0).abs() < 1e-15);
        assert!(s.amplitudes.iter().skip(1).all(|a| a.norm() == 0.0));

        let q = coherent_state(HalfInt::HALF, PI / 2.0, 0.0);
        let r = 0.5f64.sqrt();
        assert!((q.amplitudes[0] - Complex64::from(r)).norm() < 1e-15);
        assert!((q.amplitudes[1] - Complex64::from(r)).norm() < 1e-15);
    }

    #[test]
    fn coherent_state_expectations() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for tj in 1..=20 {
            let j = HalfInt::from_twice(tj);
            let rep = spin_matrices(j);
            let th = rng.random_range(0.0..PI);
            let ph = rng.random_range(0.0..2.0 * PI);
            let s = coherent_state(j, th, ph);
            assert!((s.amplitudes.norm_squared() - 1.0).abs() < 1e-12);
            let jv = j.value();
            assert!((s.expectation(&rep.sz).re - jv * th.cos()).abs() < 1e-11);
            assert!((s.expectation(&rep.sx).re - jv * th.sin() * ph.cos()).abs() < 1e-11);
            assert!((s.expectation(&rep.sy).re - jv * th.sin() * ph.sin()).abs() < 1e-11);
        }
    }

    #[test]
    fn small_d_rotates_top_state_to_coherent_state() {
        for tj in [1, 4, 9, 40] {
            let j = HalfInt::from_twice(tj);
            for th in [0.3, 1.9, 3.0] {
                let w = wigner_small_d(j, th).to_complex();
                let top = PureSpinState::basis(j, j);
                let rotated = PureSpinState {
                    j,
                    amplitudes: w * top.amplitudes,
                };
                let target = coherent_state(j, th, 0.0);
                assert!(rotated.fidelity(&target) > 1.0 - 1e-10);
            }
        }
    }

    #[test]
    fn coherent_overlap_law() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for tj in 1..=10 {
            let j = HalfInt::from_twice(tj);
            let u = sample_uniform_direction(&mut rng);
            let v = sample_uniform_direction(&mut rng);
            let gamma = dot(u, v).clamp(-1.0, 1.0).acos();
            let a = coherent_state_along(j, u);
            let b = coherent_state_along(j, v);
            let expected = (gamma / 2.0).cos().powf(2.0 * tj as f64);
            assert!((a.fidelity(&b) - expected).abs() < 1e-12);
        }
    }

    #[test]
    fn uniform_direction_moments() {
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        let n = 100_000;
        let mut mean = [0.0; 3];
        let mut z2 = 0.0;
        for _ in 0..n {
            let u = sample_uniform_direction(&mut rng);
            assert!((norm(u) - 1.0).abs() < 1e-12);
            for a in 0..3 {
                mean[a] += u[a] / n as f64;
            }
            z2 += u[2] * u[2] / n as f64;
        }
        assert!(mean.iter().all(|m| m.abs() < 0.02), "{mean:?}");
        assert!((z2 - 1.0 / 3.0).abs() < 0.01);
    }

    #[test]
    fn uniform_direction_is_reproducible() {
        let mut a = ChaCha8Rng::seed_from_u64(5);
        let mut b = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..10 {
            assert_eq!(
                sample_uniform_direction(&mut a),
                sample_uniform_direction(&mut b)
            );
        }
    }
}
