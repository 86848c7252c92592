//! Three-dimensional von Neumann pointer measurement of a collective spin.
//!
//! A Gaussian pointer of width `Δ` is coupled through `H = p·S` and its
//! position `r` is read out. The Kraus operator
//!
//! ```text
//! E_r = c ∫ d³p e^{i r·p} e^{−Δ² p²} e^{−i p·S},   c = (2π)^{−3/2} (2Δ²/π)^{3/4}
//! ```
//!
//! is Hermitian and, for `r = r ẑ`, commutes with rotations about `ẑ`; it is
//! therefore diagonal in `|j, m⟩` with real entries `e_m(r)`. Writing
//! `⟨m|e^{−ip·S}|m⟩ = Σ_{m'} |d^j_{m m'}(θ_p)|² e^{−i p m'}` (the azimuthal
//! phases cancel on the diagonal) leaves
//!
//! ```text
//! e_m(r) = 2π c ∫_{−1}^{1} dx Σ_{m'} |d^j_{m m'}(acos x)|² g(r x − m'),
//! g(k)   = ∫_0^∞ p² e^{−Δ² p²} e^{i k p} dp.
//! ```
//!
//! Pairing `x → −x`, `m' → −m'` cancels the odd part of `g`, so only
//! `Re g(k) = √π/(4Δ³) (1 − k²/(2Δ²)) e^{−k²/(4Δ²)}` contributes.
//! The covariant kernel then has moments `o_m ∝ ∫ r² e_m(r)² dr`.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::quadrature::GaussLegendre;
use crate::score::{
    epsilon_factor, kernels_for, lemma1_score, KernelSet, PovmKernelDiagonal, ScoreBreakdown,
};
use crate::spin::wigner_small_d;
use crate::thermal::{mean_total_spin, thermal_state, BlockDiagonalState, ThermalSpec};
use crate::HalfInt;

/// Largest tolerated `|∫ d³r E_r†E_r − 1|`.
pub const COMPLETENESS_TOLERANCE: f64 = 1e-4;

/// How the momentum-magnitude integral is carried out.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case")]
pub enum MomentumRule {
    /// Closed-form Gaussian moment.
    Analytic,
    /// Gauss-Legendre on `[0, p_max]` with `p_max = cutoff / Δ`, keeping the
    /// full complex integrand.
    Quadrature { nodes: usize, cutoff: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PointerConfig {
    pub delta: f64,
    pub radial_nodes: usize,
    /// `r_max = j + radial_cutoff · Δ`.
    pub radial_cutoff: f64,
    /// Gauss-Legendre nodes in `cos θ_p`.
    pub angular_nodes: usize,
    pub momentum: MomentumRule,
}

impl PointerConfig {
    /// Node counts sized from the Gaussian widths `√2 Δ` (in `r`) and
    /// `√2 Δ / r_max` (in `cos θ_p`) plus the polynomial degree `2j`.
    pub fn for_block(j: HalfInt, delta: f64) -> Self {
        let radial_cutoff = 8.0;
        let r_max = j.value() + radial_cutoff * delta;
        let widths = (r_max / delta).ceil() as usize;
        PointerConfig {
            delta,
            radial_nodes: 16 + 4 * widths,
            radial_cutoff,
            angular_nodes: 2 * j.dim() + 16 + 6 * widths,
            momentum: MomentumRule::Analytic,
        }
    }

    pub fn r_max(&self, j: HalfInt) -> f64 {
        j.value() + self.radial_cutoff * self.delta
    }

    pub fn refined(&self) -> Self {
        let mut next = *self;
        next.radial_nodes *= 2;
        next.angular_nodes *= 2;
        if let MomentumRule::Quadrature { nodes, cutoff } = self.momentum {
            next.momentum = MomentumRule::Quadrature {
                nodes: nodes * 2,
                cutoff,
            };
        }
        next
    }

    fn validate(&self) -> Result<()> {
        if !(self.delta > 0.0) || !self.delta.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "pointer width must be positive, got {}",
                self.delta
            )));
        }
        if self.radial_nodes == 0 || self.angular_nodes == 0 || !(self.radial_cutoff > 0.0) {
            return Err(Error::InvalidParameter(
                "quadrature needs nodes and a positive cutoff".into(),
            ));
        }
        if let MomentumRule::Quadrature { nodes, cutoff } = self.momentum {
            if nodes == 0 || !(cutoff > 0.0) {
                return Err(Error::InvalidParameter(
                    "momentum quadrature needs nodes and a cutoff".into(),
                ));
            }
        }
        Ok(())
    }
}

/// `c = (2π)^{−3/2} (2Δ²/π)^{3/4}`, fixed by `∫ d³r E_r†E_r = 1`.
pub fn kraus_normalization(delta: f64) -> f64 {
    (2.0 * PI).powf(-1.5) * (2.0 * delta * delta / PI).powf(0.75)
}

/// `Re g(k) = ∫_0^∞ p² e^{−Δ²p²} cos(kp) dp`.
fn gaussian_cosine_moment(delta: f64, k: f64) -> f64 {
    let d2 = delta * delta;
    PI.sqrt() / (4.0 * d2 * delta) * (1.0 - k * k / (2.0 * d2)) * (-k * k / (4.0 * d2)).exp()
}

/// Squared rotation matrices `|⟨m|e^{−iθS_y}|m'⟩|²` on the angular nodes.
struct AngularTable {
    dim: usize,
    x: Vec<f64>,
    w: Vec<f64>,
    squared: Vec<DMatrix<f64>>,
}

impl AngularTable {
    fn build<F>(dim: usize, nodes: usize, table: F) -> Self
    where
        F: Fn(f64) -> DMatrix<f64>,
    {
        let rule = GaussLegendre::new(nodes);
        let squared = rule
            .nodes
            .iter()
            .map(|&x| table(x.clamp(-1.0, 1.0).acos()))
            .collect();
        AngularTable {
            dim,
            x: rule.nodes,
            w: rule.weights,
            squared,
        }
    }

    fn for_spin(j: HalfInt, nodes: usize) -> Self {
        Self::build(j.dim(), nodes, |theta| wigner_small_d(j, theta).squared())
    }
}

struct MomentumNodes {
    p: Vec<f64>,
    /// `w p² e^{−Δ²p²}`
    weight: Vec<f64>,
}

impl MomentumNodes {
    fn new(delta: f64, nodes: usize, cutoff: f64) -> Self {
        let rule = GaussLegendre::on_interval(nodes, 0.0, cutoff / delta);
        let weight = rule
            .nodes
            .iter()
            .zip(&rule.weights)
            .map(|(&p, &w)| w * p * p * (-delta * delta * p * p).exp())
            .collect();
        MomentumNodes {
            p: rule.nodes,
            weight,
        }
    }

    fn moment(&self, k: f64) -> Complex64 {
        self.p
            .iter()
            .zip(&self.weight)
            .map(|(&p, &w)| Complex64::from_polar(w, k * p))
            .sum()
    }
}

/// Complex diagonal of `E_{r ẑ}` for `m = j..−j`.
fn kraus_complex(
    j: HalfInt,
    table: &AngularTable,
    momentum: Option<&MomentumNodes>,
    delta: f64,
    r: f64,
) -> Vec<Complex64> {
    let dim = table.dim;
    let m_vals: Vec<f64> = j.m_values().map(|m| m.value()).collect();
    let mut acc = DVector::<Complex64>::zeros(dim);
    let mut g = DVector::<Complex64>::zeros(dim);
    for (i, &x) in table.x.iter().enumerate() {
        for (k, &mp) in m_vals.iter().enumerate() {
            let arg = r * x - mp;
            g[k] = match momentum {
                None => Complex64::from(gaussian_cosine_moment(delta, arg)),
                Some(nodes) => nodes.moment(arg),
            };
        }
        let sq = table.squared[i].map(Complex64::from);
        acc += (sq * &g) * Complex64::from(table.w[i]);
    }
    let pref = 2.0 * PI * kraus_normalization(delta);
    acc.iter().map(|z| z * pref).collect()
}

/// Largest imaginary part tolerated before a diagonal is declared non-real.
pub const REALNESS_TOLERANCE: f64 = 1e-8;

/// Diagonal `e_m(r)`, `m = j..−j`, of the Kraus operator `E_{r ẑ}`.
pub fn kraus_diagonal(j: HalfInt, r: f64, cfg: &PointerConfig) -> Result<Vec<f64>> {
    let (re, im) = kraus_diagonal_with_residue(j, r, cfg)?;
    if im > REALNESS_TOLERANCE {
        return Err(Error::QuadratureDefect {
            j,
            delta: cfg.delta,
            reason: format!("Kraus diagonal has imaginary part {im:e} at r = {r}"),
        });
    }
    Ok(re)
}

/// Real parts of `e_m(r)` and the largest discarded imaginary part (zero
/// for [`MomentumRule::Analytic`], where the odd part cancels exactly).
pub fn kraus_diagonal_with_residue(
    j: HalfInt,
    r: f64,
    cfg: &PointerConfig,
) -> Result<(Vec<f64>, f64)> {
    cfg.validate()?;
    if !(r >= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "radius must be non-negative, got {r}"
        )));
    }
    let table = AngularTable::for_spin(j, cfg.angular_nodes);
    let momentum = momentum_nodes(cfg);
    let e = kraus_complex(j, &table, momentum.as_ref(), cfg.delta, r);
    let im = e.iter().map(|z| z.im.abs()).fold(0.0, f64::max);
    Ok((e.iter().map(|z| z.re).collect(), im))
}

fn momentum_nodes(cfg: &PointerConfig) -> Option<MomentumNodes> {
    match cfg.momentum {
        MomentumRule::Analytic => None,
        MomentumRule::Quadrature { nodes, cutoff } => {
            Some(MomentumNodes::new(cfg.delta, nodes, cutoff))
        }
    }
}

/// `e_m(r_k)` tabulated on the radial Gauss-Legendre nodes.
#[derive(Debug, Clone)]
pub struct KrausRadialProfile {
    pub j: HalfInt,
    pub delta: f64,
    pub radii: Vec<f64>,
    pub weights: Vec<f64>,
    /// `table[k][i] = e_{m_i}(r_k)`.
    pub table: Vec<Vec<f64>>,
    /// Largest `|Im e_m(r_k)|` discarded.
    pub imaginary_residue: f64,
}

impl KrausRadialProfile {
    /// `|4π ∫ r² dr Σ_m e_m(r)²/(2j+1) − 1|`: by covariance `∫ d³r E_r†E_r`
    /// is proportional to the identity, with this scalar as its value.
    pub fn completeness_defect(&self) -> f64 {
        let dim = self.j.dim() as f64;
        let total: f64 = self
            .radii
            .iter()
            .zip(&self.weights)
            .zip(&self.table)
            .map(|((r, w), e)| w * r * r * e.iter().map(|v| v * v).sum::<f64>())
            .sum();
        (4.0 * PI * total / dim - 1.0).abs()
    }

    /// Unnormalized `∫ r² e_m(r)² dr`.
    pub fn radial_moments(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.j.dim()];
        for ((r, w), e) in self.radii.iter().zip(&self.weights).zip(&self.table) {
            for (o, v) in out.iter_mut().zip(e) {
                *o += w * r * r * v * v;
            }
        }
        out
    }

    /// Kernel moments normalized to `Σ o_m = 2j + 1`.
    pub fn kernel(&self) -> Result<PovmKernelDiagonal> {
        let raw = self.radial_moments();
        if let Some(bad) = raw.iter().find(|o| **o < -1e-10) {
            return Err(Error::QuadratureDefect {
                j: self.j,
                delta: self.delta,
                reason: format!("negative moment {bad:e}"),
            });
        }
        PovmKernelDiagonal::normalized(self.j, raw.into_iter().map(|o| o.max(0.0)).collect())
    }
}

/// Tabulates `e_m(r)` with an arbitrary rotation table
/// `θ ↦ |⟨m|e^{−iθ S_n}|m'⟩|²` for a rotation axis `n ⟂ ẑ`.
pub fn kraus_radial_profile_with<F>(
    j: HalfInt,
    cfg: &PointerConfig,
    exec: Execution,
    rotation_table: F,
) -> Result<KrausRadialProfile>
where
    F: Fn(f64) -> DMatrix<f64>,
{
    cfg.validate()?;
    let table = AngularTable::build(j.dim(), cfg.angular_nodes, rotation_table);
    if table
        .squared
        .iter()
        .any(|m| m.nrows() != j.dim() || m.ncols() != j.dim())
    {
        return Err(Error::InvalidParameter(format!(
            "rotation table must be {0}×{0}",
            j.dim()
        )));
    }
    let momentum = momentum_nodes(cfg);
    let radial = GaussLegendre::on_interval(cfg.radial_nodes, 0.0, cfg.r_max(j));
    let rows = exec.map_slice(&radial.nodes, |&r| {
        kraus_complex(j, &table, momentum.as_ref(), cfg.delta, r)
    });
    let imaginary_residue = rows
        .iter()
        .flat_map(|row| row.iter().map(|z| z.im.abs()))
        .fold(0.0, f64::max);
    Ok(KrausRadialProfile {
        j,
        delta: cfg.delta,
        radii: radial.nodes,
        weights: radial.weights,
        table: rows
            .into_iter()
            .map(|row| row.into_iter().map(|z| z.re).collect())
            .collect(),
        imaginary_residue,
    })
}

pub fn kraus_radial_profile(
    j: HalfInt,
    cfg: &PointerConfig,
    exec: Execution,
) -> Result<KrausRadialProfile> {
    kraus_radial_profile_with(j, cfg, exec, |theta| wigner_small_d(j, theta).squared())
}

fn checked_kernel(profile: &KrausRadialProfile) -> Result<PovmKernelDiagonal> {
    let defect = profile.completeness_defect();
    if !(defect < COMPLETENESS_TOLERANCE) {
        return Err(Error::QuadratureDefect {
            j: profile.j,
            delta: profile.delta,
            reason: format!("completeness defect {defect:e}"),
        });
    }
    if profile.imaginary_residue > REALNESS_TOLERANCE {
        return Err(Error::QuadratureDefect {
            j: profile.j,
            delta: profile.delta,
            reason: format!("imaginary residue {:e}", profile.imaginary_residue),
        });
    }
    profile.kernel()
}

/// Covariant kernel `O_z = ∫ r² E_{rẑ}² dr` at a fixed quadrature.
pub fn povm_kernel(j: HalfInt, cfg: &PointerConfig, exec: Execution) -> Result<PovmKernelDiagonal> {
    if j.twice() == 0 {
        return Ok(PovmKernelDiagonal::uninformative(j));
    }
    checked_kernel(&kraus_radial_profile(j, cfg, exec)?)
}

/// Stop refining once the block score changes by less than this.
pub const REFINEMENT_TOLERANCE: f64 = 1e-5;
const MAX_REFINEMENTS: usize = 4;

/// Kernel at `(j, Δ)` with node counts doubled from
/// [`PointerConfig::for_block`] until `Tr[(S_z/j) O_z/(2j+1)]` moves by less
/// than [`REFINEMENT_TOLERANCE`].
pub fn povm_kernel_converged(
    j: HalfInt,
    delta: f64,
    exec: Execution,
) -> Result<(PovmKernelDiagonal, PointerConfig)> {
    let mut cfg = PointerConfig::for_block(j, delta);
    let mut kernel = povm_kernel(j, &cfg, exec)?;
    if j.twice() == 0 {
        return Ok((kernel, cfg));
    }
    for _ in 0..MAX_REFINEMENTS {
        let next_cfg = cfg.refined();
        let next = povm_kernel(j, &next_cfg, exec)?;
        let change = (next.povm_term() - kernel.povm_term()).abs();
        cfg = next_cfg;
        kernel = next;
        if change < REFINEMENT_TOLERANCE {
            return Ok((kernel, cfg));
        }
    }
    Err(Error::QuadratureDefect {
        j,
        delta,
        reason: format!("no convergence after {MAX_REFINEMENTS} refinements"),
    })
}

/// The width `√(J/4)` at which the pointer is near-optimal for `|J, J⟩`.
pub fn reference_width(j: f64) -> f64 {
    (j / 4.0).sqrt()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DeltaPoint {
    pub delta: f64,
    pub score: f64,
    pub optimal_score: f64,
    pub epsilon: f64,
    /// `o_J`
    pub top_moment: f64,
    pub bounds: OjBounds,
}

/// Score of the pointer measurement on `|J, J⟩` for each width in `deltas`.
pub fn score_vs_delta(total: HalfInt, deltas: &[f64], exec: Execution) -> Result<Vec<DeltaPoint>> {
    let state = BlockDiagonalState::fully_polarized(total);
    let points = exec.map_slice(deltas, |&delta| -> Result<DeltaPoint> {
        let (kernel, _) = povm_kernel_converged(total, delta, Execution::Sequential)?;
        let mut ks = KernelSet::new();
        let top = kernel.top();
        ks.insert(total, kernel);
        let b = lemma1_score(&state, &ks)?;
        Ok(DeltaPoint {
            delta,
            score: b.score,
            optimal_score: b.optimal_score,
            epsilon: b.epsilon,
            top_moment: top,
            bounds: oj_bounds(total, top),
        })
    });
    points.into_iter().collect()
}

/// Index of the largest score and whether it lies strictly inside the grid
/// with both ends lower.
pub fn interior_maximum(points: &[DeltaPoint]) -> Option<usize> {
    let (best, _) = points
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.score.total_cmp(&b.1.score))?;
    let last = points.len() - 1;
    if best == 0 || best == last {
        return None;
    }
    let peak = points[best].score;
    (points[0].score < peak && points[last].score < peak).then_some(best)
}

/// Bounds on `G` for `|J, J⟩` that use only `o_J`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OjBounds {
    /// `J/(J+1) · [x − (1 − x)]`, `x = o_J/(2J+1)`: residual trace placed on
    /// `m = −J`. A lower bound on `G`.
    pub worst_case: f64,
    /// `J/(J+1) · [x + (J−1)/J · (1 − x)]`: residual trace on `m = J − 1`.
    /// This is an upper bound on `G`; it yields the lower bound on `ε_J` of
    /// [`suboptimality_epsilon_bound`].
    pub next_level: f64,
}

pub fn oj_bounds(total: HalfInt, top_moment: f64) -> OjBounds {
    let j = total.value();
    let x = top_moment / total.dim() as f64;
    let pref = j / (j + 1.0);
    OjBounds {
        worst_case: pref * (2.0 * x - 1.0),
        next_level: pref * (x + (j - 1.0) / j * (1.0 - x)),
    }
}

/// [`oj_bounds`] for the pointer kernel at width `delta`.
pub fn oj_lower_bound(total: HalfInt, delta: f64, exec: Execution) -> Result<OjBounds> {
    let (kernel, _) = povm_kernel_converged(total, delta, exec)?;
    Ok(oj_bounds(total, kernel.top()))
}

/// `J (1 − J/(J+1) · [x + (J−1)/J · (1 − x)])` with `x = o_J/(2J+1)`: no
/// kernel with this `o_J` reaches a smaller `ε_J`.
pub fn suboptimality_epsilon_bound(total: HalfInt, top_moment: f64) -> f64 {
    epsilon_factor(total, oj_bounds(total, top_moment).next_level)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ThermalMqm {
    pub spec: ThermalSpec,
    pub j_eq: f64,
    pub delta: f64,
    pub breakdown: ScoreBreakdown,
    /// `J ΔG`
    pub scaled_gap: f64,
}

/// Pointer measurement on a thermal state with `Δ = √(J_eq/4)`. Every
/// `(α, j)` block sees the kernel of a bare spin `j` at that width.
pub fn thermal_mqm_score(spec: ThermalSpec, exec: Execution) -> Result<ThermalMqm> {
    let state = thermal_state(spec)?;
    let j_eq = mean_total_spin(spec).j_eq;
    let delta = reference_width(j_eq);
    let js: Vec<HalfInt> = state
        .blocks
        .iter()
        .filter(|b| b.weight() > 0.0)
        .map(|b| b.j)
        .collect();
    let kernels = exec.map_slice(&js, |&j| {
        povm_kernel_converged(j, delta, Execution::Sequential).map(|(k, _)| k)
    });
    let mut ks = KernelSet::new();
    for (j, k) in js.iter().zip(kernels) {
        ks.insert(*j, k?);
    }
    let ks = if ks.is_empty() {
        kernels_for(&state, PovmKernelDiagonal::uninformative)
    } else {
        ks
    };
    let breakdown = lemma1_score(&state, &ks)?;
    let scaled_gap = spec.total.value() * breakdown.delta;
    Ok(ThermalMqm {
        spec,
        j_eq,
        delta,
        breakdown,
        scaled_gap,
    })
}
