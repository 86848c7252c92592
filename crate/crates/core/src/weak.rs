//! Repeated weak measurements of a collective spin with 1D Gaussian pointers.
//!
//! A step along axis `w` with width `Δ` has Kraus operator
//! `K(r) = (2πΔ²)^{−1/4} exp(−(r − S_w)²/(4Δ²))`, so the outcome is drawn by
//! picking `m` with probability `|⟨m_w|ψ⟩|²` and then `r ~ N(m, Δ²)`.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::spin::{
    coherent_state_along, dot, norm, sample_uniform_direction, wigner_small_d, PureSpinState, Vec3,
};
use crate::HalfInt;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    X,
    Y,
    Z,
}

impl Axis {
    pub const ALL: [Axis; 3] = [Axis::X, Axis::Y, Axis::Z];

    fn index(self) -> usize {
        match self {
            Axis::X => 0,
            Axis::Y => 1,
            Axis::Z => 2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeakStepConfig {
    pub delta: f64,
    pub axis: Axis,
}

impl WeakStepConfig {
    pub fn new(delta: f64, axis: Axis) -> Result<Self> {
        check_delta(delta)?;
        Ok(WeakStepConfig { delta, axis })
    }
}

fn check_delta(delta: f64) -> Result<()> {
    if delta > 0.0 && delta.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!(
            "pointer width must be positive, got {delta}"
        )))
    }
}

/// Eigenbases of `S_x`, `S_y`, `S_z` in the Dicke basis. Column `k` of
/// `unitary(a)` is the eigenvector of `S_a` with eigenvalue `j − k`.
#[derive(Debug, Clone)]
pub struct AxisBases {
    j: HalfInt,
    unitaries: [DMatrix<Complex64>; 3],
    /// `transition[a] = U_{next(a)}† U_a` for the cycle x → y → z → x.
    transitions: [DMatrix<Complex64>; 3],
    m_values: Vec<f64>,
}

impl AxisBases {
    pub fn new(j: HalfInt) -> Self {
        let dim = j.dim();
        let ux = wigner_small_d(j, 0.5 * PI).to_complex();
        let phases = DVector::from_iterator(
            dim,
            j.m_values()
                .map(|m| Complex64::from_polar(1.0, -0.5 * PI * m.value())),
        );
        let uy = DMatrix::from_diagonal(&phases) * &ux;
        let uz = DMatrix::identity(dim, dim);
        let transitions = [uy.adjoint() * &ux, uz.adjoint() * &uy, ux.adjoint() * &uz];
        AxisBases {
            j,
            unitaries: [ux, uy, uz],
            transitions,
            m_values: j.m_values().map(|m| m.value()).collect(),
        }
    }

    pub fn j(&self) -> HalfInt {
        self.j
    }

    pub fn unitary(&self, axis: Axis) -> &DMatrix<Complex64> {
        &self.unitaries[axis.index()]
    }

    /// Dicke-basis amplitudes rewritten in the eigenbasis of `S_axis`.
    pub fn to_axis(&self, state: &PureSpinState, axis: Axis) -> DVector<Complex64> {
        self.unitary(axis).adjoint() * &state.amplitudes
    }

    pub fn from_axis(&self, amplitudes: &DVector<Complex64>, axis: Axis) -> DVector<Complex64> {
        self.unitary(axis) * amplitudes
    }
}

/// Samples an outcome and applies `K(r)` in place to amplitudes expressed
/// in the measured axis' eigenbasis. Returns `r`.
fn kraus_update<R: Rng + ?Sized>(
    amps: &mut DVector<Complex64>,
    m_values: &[f64],
    delta: f64,
    rng: &mut R,
) -> Result<f64> {
    let total: f64 = amps.iter().map(|a| a.norm_sqr()).sum();
    let mut pick: f64 = rng.random::<f64>() * total;
    let mut k = m_values.len() - 1;
    for (i, a) in amps.iter().enumerate() {
        pick -= a.norm_sqr();
        if pick < 0.0 {
            k = i;
            break;
        }
    }
    let noise: f64 = rng.sample(StandardNormal);
    let r = m_values[k] + delta * noise;
    apply_kraus(amps, m_values, delta, r)?;
    Ok(r)
}

fn apply_kraus(amps: &mut DVector<Complex64>, m_values: &[f64], delta: f64, r: f64) -> Result<()> {
    let scale = 1.0 / (4.0 * delta * delta);
    let exponent = |m: f64| -(r - m) * (r - m) * scale;
    let shift = m_values
        .iter()
        .zip(amps.iter())
        .filter(|(_, a)| a.norm_sqr() > 0.0)
        .map(|(&m, _)| exponent(m))
        .fold(f64::NEG_INFINITY, f64::max);
    for (a, &m) in amps.iter_mut().zip(m_values) {
        *a *= (exponent(m) - shift).exp();
    }
    let n = amps.norm();
    if !(n > 1e-300) {
        return Err(Error::InvalidParameter(
            "post-measurement state vanished".into(),
        ));
    }
    *amps /= Complex64::from(n);
    Ok(())
}

/// One weak measurement of `state` along `cfg.axis`.
pub fn weak_measure_step<R: Rng + ?Sized>(
    state: &PureSpinState,
    cfg: &WeakStepConfig,
    bases: &AxisBases,
    rng: &mut R,
) -> Result<(f64, PureSpinState)> {
    check_delta(cfg.delta)?;
    if bases.j != state.j {
        return Err(Error::InvalidParameter(format!(
            "bases for j = {} applied to j = {}",
            bases.j, state.j
        )));
    }
    let mut amps = bases.to_axis(state, cfg.axis);
    let r = kraus_update(&mut amps, &bases.m_values, cfg.delta, rng)?;
    let post = bases.from_axis(&amps, cfg.axis);
    Ok((
        r,
        PureSpinState {
            j: state.j,
            amplitudes: post,
        },
    ))
}

/// `p(r) = Σ_m |⟨m_w|ψ⟩|² N(r; m, Δ²)`.
pub fn outcome_density(
    state: &PureSpinState,
    cfg: &WeakStepConfig,
    bases: &AxisBases,
    r: f64,
) -> f64 {
    let amps = bases.to_axis(state, cfg.axis);
    let d2 = cfg.delta * cfg.delta;
    let norm = 1.0 / (2.0 * PI * d2).sqrt();
    amps.iter()
        .zip(&bases.m_values)
        .map(|(a, &m)| a.norm_sqr() * norm * (-(r - m) * (r - m) / (2.0 * d2)).exp())
        .sum()
}

/// `G = 2/((J+1)(2J+1)) Σ_{m>0} m erf(m √(t/2) / Δ)`.
pub fn weak1d_analytic_score(total: HalfInt, t: u64, delta: f64) -> f64 {
    if t == 0 {
        return 0.0;
    }
    let j = total.value();
    let k = (t as f64 / 2.0).sqrt() / delta;
    let sum: f64 = total
        .m_values()
        .filter(|m| m.twice() > 0)
        .map(|m| m.value() * libm::erf(m.value() * k))
        .sum();
    2.0 * sum / ((j + 1.0) * (2.0 * j + 1.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ScoreEstimate {
    pub mean: f64,
    pub stderr: f64,
    pub n_trajectories: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrajectoryRecord {
    pub true_direction: Vec3,
    pub outcomes: Vec<(Axis, f64)>,
    /// Zero when every coordinate sum vanishes.
    pub guess: Vec3,
    pub score: f64,
}

/// Independent generator for trajectory `index`.
pub fn trajectory_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

fn normalized_or_zero(v: Vec3) -> Vec3 {
    let n = norm(v);
    if n > 0.0 {
        [v[0] / n, v[1] / n, v[2] / n]
    } else {
        [0.0; 3]
    }
}

/// Trajectories per reduction chunk; fixed so sums do not depend on the
/// thread count.
const CHUNK: usize = 64;

struct Moments {
    sum: Vec<f64>,
    sum_sq: Vec<f64>,
}

impl Moments {
    fn new(len: usize) -> Self {
        Moments {
            sum: vec![0.0; len],
            sum_sq: vec![0.0; len],
        }
    }

    fn push(&mut self, scores: &[f64]) {
        for ((s, q), x) in self.sum.iter_mut().zip(self.sum_sq.iter_mut()).zip(scores) {
            *s += x;
            *q += x * x;
        }
    }

    fn merge(&mut self, other: &Moments) {
        for (a, b) in self.sum.iter_mut().zip(&other.sum) {
            *a += b;
        }
        for (a, b) in self.sum_sq.iter_mut().zip(&other.sum_sq) {
            *a += b;
        }
    }

    fn estimates(&self, n: usize) -> Vec<ScoreEstimate> {
        let nf = n as f64;
        self.sum
            .iter()
            .zip(&self.sum_sq)
            .map(|(&s, &q)| {
                let mean = s / nf;
                let var = if n > 1 {
                    ((q - nf * mean * mean) / (nf - 1.0)).max(0.0)
                } else {
                    0.0
                };
                ScoreEstimate {
                    mean,
                    stderr: (var / nf).sqrt(),
                    n_trajectories: n,
                }
            })
            .collect()
    }
}

/// Averages the per-round score vectors returned by `trajectory(index)`.
fn reduce_trajectories<F>(
    n_traj: usize,
    len: usize,
    exec: Execution,
    trajectory: F,
) -> Result<Vec<ScoreEstimate>>
where
    F: Fn(u64) -> Result<Vec<f64>> + Sync + Send,
{
    if n_traj == 0 {
        return Err(Error::InvalidParameter(
            "need at least one trajectory".into(),
        ));
    }
    let chunks = n_traj.div_ceil(CHUNK);
    let partial = exec.map_indexed(chunks, |c| -> Result<Moments> {
        let mut m = Moments::new(len);
        for i in c * CHUNK..((c + 1) * CHUNK).min(n_traj) {
            m.push(&trajectory(i as u64)?);
        }
        Ok(m)
    });
    let mut total = Moments::new(len);
    for p in partial {
        total.merge(&p?);
    }
    Ok(total.estimates(n_traj))
}

/// Scores `u_z · sign(Σ_{i≤t} r_i)` after each of `tau` commuting
/// measurements along `z`.
fn weak1d_trajectory(
    total: HalfInt,
    tau: u64,
    delta: f64,
    bases: &AxisBases,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<f64>> {
    let u = sample_uniform_direction(rng);
    let mut amps = bases.to_axis(&coherent_state_along(total, u), Axis::Z);
    let mut sum = 0.0;
    let mut scores = Vec::with_capacity(tau as usize);
    for _ in 0..tau {
        sum += kraus_update(&mut amps, &bases.m_values, delta, rng)?;
        let guess = if sum > 0.0 {
            1.0
        } else if sum < 0.0 {
            -1.0
        } else {
            0.0
        };
        scores.push(u[2] * guess);
    }
    Ok(scores)
}

/// `G(t)` for `t = 1..=tau` under repeated measurement along `z`.
pub fn weak1d_curve(
    total: HalfInt,
    tau: u64,
    delta: f64,
    n_traj: usize,
    seed: u64,
    exec: Execution,
) -> Result<Vec<ScoreEstimate>> {
    check_delta(delta)?;
    if tau == 0 {
        return Err(Error::InvalidParameter(
            "need at least one measurement".into(),
        ));
    }
    let bases = AxisBases::new(total);
    reduce_trajectories(n_traj, tau as usize, exec, |i| {
        weak1d_trajectory(total, tau, delta, &bases, &mut trajectory_rng(seed, i))
    })
}

pub fn weak1d_simulated_score(
    total: HalfInt,
    t: u64,
    delta: f64,
    n_traj: usize,
    seed: u64,
    exec: Execution,
) -> Result<ScoreEstimate> {
    let curve = weak1d_curve(total, t, delta, n_traj, seed, exec)?;
    Ok(curve[curve.len() - 1])
}

struct Weak3d<'a> {
    total: HalfInt,
    delta: f64,
    bases: &'a AxisBases,
}

impl Weak3d<'_> {
    /// Runs `tau` rounds x, y, z and calls `round(t, u, sums, outcomes)`.
    fn run<F>(&self, tau: u64, rng: &mut ChaCha8Rng, mut round: F) -> Result<Vec3>
    where
        F: FnMut(Vec3, Vec3, [f64; 3]),
    {
        let u = sample_uniform_direction(rng);
        let m = &self.bases.m_values;
        let mut amps = self
            .bases
            .to_axis(&coherent_state_along(self.total, u), Axis::X);
        let mut scratch = DVector::<Complex64>::zeros(amps.len());
        let mut sums = [0.0; 3];
        for _ in 0..tau {
            let mut rs = [0.0; 3];
            for (a, r) in rs.iter_mut().enumerate() {
                *r = kraus_update(&mut amps, m, self.delta, rng)?;
                scratch.gemv(
                    Complex64::from(1.0),
                    &self.bases.transitions[a],
                    &amps,
                    Complex64::from(0.0),
                );
                std::mem::swap(&mut amps, &mut scratch);
            }
            for (s, r) in sums.iter_mut().zip(rs) {
                *s += r;
            }
            round(u, sums, rs);
        }
        Ok(u)
    }
}

/// One trajectory of `tau` rounds with its full outcome record.
pub fn weak3d_trajectory(
    n_particles: usize,
    delta: f64,
    tau: u64,
    seed: u64,
    index: u64,
) -> Result<TrajectoryRecord> {
    check_delta(delta)?;
    let total = HalfInt::from_particles(n_particles);
    let bases = AxisBases::new(total);
    let sim = Weak3d {
        total,
        delta,
        bases: &bases,
    };
    let mut outcomes = Vec::with_capacity(3 * tau as usize);
    let mut last = [0.0; 3];
    let u = sim.run(tau, &mut trajectory_rng(seed, index), |_, sums, rs| {
        outcomes.extend(Axis::ALL.iter().copied().zip(rs));
        last = sums;
    })?;
    let guess = normalized_or_zero(last);
    Ok(TrajectoryRecord {
        true_direction: u,
        outcomes,
        guess,
        score: dot(u, guess),
    })
}

/// `G(t)`, `t = 1..=tau`, for `N` particles in a coherent state measured in
/// rounds x, y, z; the guess is the normalized vector of outcome sums.
pub fn weak3d_run(
    n_particles: usize,
    delta: f64,
    tau: u64,
    n_traj: usize,
    seed: u64,
    exec: Execution,
) -> Result<Vec<ScoreEstimate>> {
    check_delta(delta)?;
    if n_particles == 0 || tau == 0 {
        return Err(Error::InvalidParameter(
            "need N ≥ 1 and at least one round".into(),
        ));
    }
    let total = HalfInt::from_particles(n_particles);
    let bases = AxisBases::new(total);
    let sim = Weak3d {
        total,
        delta,
        bases: &bases,
    };
    reduce_trajectories(n_traj, tau as usize, exec, |i| {
        let mut scores = Vec::with_capacity(tau as usize);
        sim.run(tau, &mut trajectory_rng(seed, i), |u, sums, _| {
            scores.push(dot(u, normalized_or_zero(sums)));
        })?;
        Ok(scores)
    })
}

/// Centered moving average; windows are truncated at the ends.
pub fn moving_average(values: &[f64], window: usize) -> Vec<f64> {
    let half = window / 2;
    (0..values.len())
        .map(|i| {
            let lo = i.saturating_sub(half);
            let hi = (i + half + 1).min(values.len());
            values[lo..hi].iter().sum::<f64>() / (hi - lo) as f64
        })
        .collect()
}

pub const SMOOTHING_WINDOW: usize = 5;
pub const PLATEAU_FRACTION: f64 = 0.98;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CurveSummary {
    pub smoothed: Vec<f64>,
    /// 1-based round index of the smoothed maximum.
    pub t_max: u64,
    pub g_max: f64,
    /// Largest excursion tolerated as noise: three standard errors at `t_max`.
    pub tolerance: f64,
    /// The maximum is not at either end and both ends lie below it.
    pub interior: bool,
    /// Rises up to `t_max` and falls after it, up to `tolerance`.
    pub unimodal: bool,
    /// Contiguous rounds around `t_max` with smoothed `G ≥ 0.98 G^max`.
    pub plateau: (u64, u64),
}

impl CurveSummary {
    pub fn single_interior_maximum(&self) -> bool {
        self.interior && self.unimodal
    }

    pub fn plateau_len(&self) -> u64 {
        self.plateau.1 - self.plateau.0 + 1
    }

    /// Plateau spans at least `fraction · t_max` rounds.
    pub fn has_plateau(&self, fraction: f64) -> bool {
        self.plateau_len() as f64 >= fraction * self.t_max as f64
    }
}

pub fn summarize_curve(curve: &[ScoreEstimate]) -> Option<CurveSummary> {
    if curve.is_empty() {
        return None;
    }
    let means: Vec<f64> = curve.iter().map(|e| e.mean).collect();
    let smoothed = moving_average(&means, SMOOTHING_WINDOW);
    let (k, &g_max) = smoothed
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))?;
    let tolerance = 3.0 * curve[k].stderr;
    let last = smoothed.len() - 1;
    let interior = k != 0 && k != last && smoothed[0] < g_max && smoothed[last] < g_max;

    let mut running = f64::NEG_INFINITY;
    let mut unimodal = true;
    for &s in &smoothed[..=k] {
        unimodal &= s >= running - tolerance;
        running = running.max(s);
    }
    let mut running = f64::INFINITY;
    for &s in &smoothed[k..] {
        unimodal &= s <= running + tolerance;
        running = running.min(s);
    }

    let floor = PLATEAU_FRACTION * g_max;
    let mut lo = k;
    while lo > 0 && smoothed[lo - 1] >= floor {
        lo -= 1;
    }
    let mut hi = k;
    while hi < last && smoothed[hi + 1] >= floor {
        hi += 1;
    }
    Some(CurveSummary {
        t_max: k as u64 + 1,
        g_max,
        tolerance,
        interior,
        unimodal,
        plateau: (lo as u64 + 1, hi as u64 + 1),
        smoothed,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TmaxRow {
    pub delta: f64,
    pub t_max: u64,
    pub g_max: f64,
    /// `√t^max / Δ`
    pub ratio: f64,
    /// `t^max = tau`: the scan did not reach the decline.
    pub saturated: bool,
    pub summary: CurveSummary,
    pub curve: Vec<ScoreEstimate>,
}

pub fn tmax_scan(
    n_particles: usize,
    deltas: &[f64],
    tau: u64,
    n_traj: usize,
    seed: u64,
    exec: Execution,
) -> Result<Vec<TmaxRow>> {
    deltas
        .iter()
        .map(|&delta| {
            let curve = weak3d_run(n_particles, delta, tau, n_traj, seed, exec)?;
            let summary = summarize_curve(&curve).expect("curve has tau ≥ 1 points");
            Ok(TmaxRow {
                delta,
                t_max: summary.t_max,
                g_max: summary.g_max,
                ratio: (summary.t_max as f64).sqrt() / delta,
                saturated: summary.t_max == tau,
                summary,
                curve,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spin::spin_matrices;

    #[test]
    fn axis_bases_diagonalize_spin_components() {
        for tj in 1..=8 {
            let j = HalfInt::from_twice(tj);
            let rep = spin_matrices(j);
            let bases = AxisBases::new(j);
            for (axis, s) in Axis::ALL.iter().zip([&rep.sx, &rep.sy, &rep.sz]) {
                let u = bases.unitary(*axis);
                let id = u.adjoint() * u;
                assert!((id - DMatrix::<Complex64>::identity(j.dim(), j.dim())).camax() < 1e-12);
                let diag = u.adjoint() * s * u;
                for (k, m) in j.m_values().enumerate() {
                    for l in 0..j.dim() {
                        let expected = if k == l { m.value() } else { 0.0 };
                        assert!(
                            (diag[(k, l)] - Complex64::from(expected)).norm() < 1e-12,
                            "j={j} {axis:?}"
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn analytic_limits() {
        assert_eq!(weak1d_analytic_score(HalfInt::integer(2), 0, 1.0), 0.0);
        assert!((weak1d_analytic_score(HalfInt::integer(2), 1, 1e-3) - 0.4).abs() < 1e-12);
        assert!((weak1d_analytic_score(HalfInt::from_twice(3), 1, 1e-3) - 0.4).abs() < 1e-12);
        let a = weak1d_analytic_score(HalfInt::integer(3), 4, 2.0);
        let b = weak1d_analytic_score(HalfInt::integer(3), 16, 4.0);
        assert!((a - b).abs() < 1e-15);
    }

    #[test]
    fn eigenstate_is_unchanged() {
        let j = HalfInt::integer(2);
        let bases = AxisBases::new(j);
        let cfg = WeakStepConfig::new(0.7, Axis::Z).unwrap();
        let psi = PureSpinState::basis(j, HalfInt::ONE);
        let mut rng = trajectory_rng(3, 0);
        let mut rs = Vec::new();
        for _ in 0..4000 {
            let (r, post) = weak_measure_step(&psi, &cfg, &bases, &mut rng).unwrap();
            assert!((post.fidelity(&psi) - 1.0).abs() < 1e-12);
            rs.push(r);
        }
        let mean = rs.iter().sum::<f64>() / rs.len() as f64;
        let var = rs.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / (rs.len() - 1) as f64;
        assert!((mean - 1.0).abs() < 4.0 * 0.7 / (rs.len() as f64).sqrt());
        assert!((var.sqrt() - 0.7).abs() < 0.05);
    }

    #[test]
    fn projective_limit_collapses() {
        let j = HalfInt::from_twice(3);
        let bases = AxisBases::new(j);
        let mut rng = trajectory_rng(11, 0);
        for axis in Axis::ALL {
            let cfg = WeakStepConfig::new(1e-3, axis).unwrap();
            let psi = coherent_state_along(j, [0.3, -0.5, 0.81]);
            let (_, post) = weak_measure_step(&psi, &cfg, &bases, &mut rng).unwrap();
            let amps = bases.to_axis(&post, axis);
            let top = amps.iter().map(|a| a.norm_sqr()).fold(0.0, f64::max);
            assert!(top > 1.0 - 1e-6, "{axis:?}: {top}");
        }
    }

    #[test]
    fn mean_outcome_follows_polarization() {
        let j = HalfInt::integer(3);
        let bases = AxisBases::new(j);
        let u = normalized_or_zero([0.4, -0.7, 0.5]);
        let psi = coherent_state_along(j, u);
        let mut rng = trajectory_rng(5, 1);
        for (axis, uw) in Axis::ALL.iter().zip(u) {
            let cfg = WeakStepConfig::new(1.5, *axis).unwrap();
            let rs: Vec<f64> = (0..10_000)
                .map(|_| weak_measure_step(&psi, &cfg, &bases, &mut rng).unwrap().0)
                .collect();
            let n = rs.len() as f64;
            let mean = rs.iter().sum::<f64>() / n;
            let sd = (rs.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
            assert!((mean - 3.0 * uw).abs() < 3.0 * sd / n.sqrt(), "{axis:?}");
        }
    }

    #[test]
    fn outcome_density_is_normalized() {
        let j = HalfInt::integer(4);
        let bases = AxisBases::new(j);
        let psi = coherent_state_along(j, normalized_or_zero([1.0, 2.0, -0.5]));
        for axis in Axis::ALL {
            let cfg = WeakStepConfig::new(1.3, axis).unwrap();
            let w = j.value() + 8.0 * cfg.delta;
            let rule = crate::quadrature::GaussLegendre::on_interval(200, -w, w);
            let total = rule.integrate(|r| outcome_density(&psi, &cfg, &bases, r));
            assert!((total - 1.0).abs() < 1e-6);
        }
    }

    #[test]
    fn very_weak_step_barely_disturbs() {
        let j = HalfInt::integer(2);
        let bases = AxisBases::new(j);
        let psi = coherent_state_along(j, normalized_or_zero([0.2, 0.9, 0.3]));
        let mut rng = trajectory_rng(9, 0);
        let mut last = f64::INFINITY;
        for delta in [1.0, 10.0, 100.0, 1000.0] {
            let cfg = WeakStepConfig::new(delta, Axis::X).unwrap();
            let (_, post) = weak_measure_step(&psi, &cfg, &bases, &mut rng).unwrap();
            let infidelity = 1.0 - post.fidelity(&psi);
            assert!(infidelity <= last + 1e-12);
            last = infidelity;
        }
        assert!(last < 1e-4);
    }

    #[test]
    fn reduction_is_thread_independent() {
        let a = weak3d_run(4, 3.0, 12, 300, 42, Execution::Sequential).unwrap();
        let b = weak3d_run(4, 3.0, 12, 300, 42, Execution::Parallel).unwrap();
        assert_eq!(a, b);
        let c = weak3d_run(4, 3.0, 12, 300, 43, Execution::Sequential).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn trajectory_record_matches_run() {
        let rec = weak3d_trajectory(6, 2.0, 10, 8, 3).unwrap();
        assert_eq!(rec.outcomes.len(), 30);
        assert!((norm(rec.guess) - 1.0).abs() < 1e-12);
        assert!((rec.score - dot(rec.true_direction, rec.guess)).abs() < 1e-15);
        let sums = rec.outcomes.iter().fold([0.0; 3], |mut s, (a, r)| {
            s[a.index()] += r;
            s
        });
        let g = normalized_or_zero(sums);
        for (a, b) in g.iter().zip(rec.guess) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn moving_average_edges() {
        let s = moving_average(&[1.0, 2.0, 3.0, 4.0, 5.0, 6.0], 5);
        assert_eq!(s, vec![2.0, 2.5, 3.0, 4.0, 4.5, 5.0]);
    }

    #[test]
    fn summary_of_synthetic_peak() {
        let curve: Vec<ScoreEstimate> = (1..=100)
            .map(|t| {
                let x = t as f64 / 40.0;
                ScoreEstimate {
                    mean: x * (1.0 - x.ln()),
                    stderr: 1e-3,
                    n_trajectories: 1,
                }
            })
            .collect();
        let s = summarize_curve(&curve).unwrap();
        assert_eq!(s.t_max, 40);
        assert!(s.single_interior_maximum());
        assert!(s.has_plateau(0.2));
        let rising: Vec<ScoreEstimate> = (1..=50)
            .map(|t| ScoreEstimate {
                mean: t as f64,
                stderr: 0.0,
                n_trajectories: 1,
            })
            .collect();
        assert!(!summarize_curve(&rising).unwrap().interior);
    }

    #[test]
    fn invalid_inputs() {
        assert!(WeakStepConfig::new(0.0, Axis::X).is_err());
        assert!(weak3d_run(0, 1.0, 5, 10, 0, Execution::Sequential).is_err());
        assert!(weak1d_curve(HalfInt::ONE, 3, 1.0, 0, 0, Execution::Sequential).is_err());
    }
}
