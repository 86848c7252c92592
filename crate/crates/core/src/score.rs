//! Mean score of a covariant measurement on a rotation-symmetric state.
//!
//! For a state with block diagonals `c_m^j` and a kernel with diagonal
//! moments `o_m^j`, the score splits per block into three non-negative
//! factors:
//!
//! ```text
//! G = Σ_j  [j A_j Tr ρ^j / (j+1)] · [Tr(S_z ρ^j) / (j Tr ρ^j)] · [Σ_m m o_m / (j (2j+1))]
//! ```
//!
//! Only diagonals enter; coherences of the kernel between or within blocks
//! never change `G`.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::thermal::BlockDiagonalState;
use crate::HalfInt;

/// Diagonal moments `o_m = ⟨j,m|O_z|j,m⟩` of a covariant POVM kernel,
/// ordered `m = j, ..., -j`.
#[derive(Debug, Clone, PartialEq)]
pub struct PovmKernelDiagonal {
    j: HalfInt,
    o: Vec<f64>,
}

impl PovmKernelDiagonal {
    /// Validates `o_m >= 0` and `Σ o_m = 2j + 1` (within 1e-8).
    pub fn new(j: HalfInt, o: Vec<f64>) -> Result<Self> {
        let invalid = |reason: String| Error::InvalidKernel { j, reason };
        if o.len() != j.dim() {
            return Err(invalid(format!(
                "expected {} moments, got {}",
                j.dim(),
                o.len()
            )));
        }
        if let Some(bad) = o.iter().find(|x| !(**x >= 0.0)) {
            return Err(invalid(format!("negative or NaN moment {bad}")));
        }
        let trace: f64 = o.iter().sum();
        if (trace - j.dim() as f64).abs() > 1e-8 {
            return Err(invalid(format!("trace {trace} differs from {}", j.dim())));
        }
        Ok(PovmKernelDiagonal { j, o })
    }

    /// Rescales non-negative weights to trace `2j + 1`.
    pub fn normalized(j: HalfInt, weights: Vec<f64>) -> Result<Self> {
        let total: f64 = weights.iter().sum();
        if !(total > 0.0) {
            return Err(Error::InvalidKernel {
                j,
                reason: "weights sum to zero".into(),
            });
        }
        let scale = j.dim() as f64 / total;
        Self::new(j, weights.into_iter().map(|w| w * scale).collect())
    }

    /// `O_z ∝ 1`: a measurement that carries no information.
    pub fn uninformative(j: HalfInt) -> Self {
        PovmKernelDiagonal {
            j,
            o: vec![1.0; j.dim()],
        }
    }

    pub fn j(&self) -> HalfInt {
        self.j
    }

    pub fn moments(&self) -> &[f64] {
        &self.o
    }

    /// `o_j`, the weight on the top state.
    pub fn top(&self) -> f64 {
        self.o[0]
    }

    /// `Tr[(S_z/j) O_z/(2j+1)]`, in `[-1, 1]`; zero for `j = 0`.
    pub fn povm_term(&self) -> f64 {
        if self.j.twice() == 0 {
            return 0.0;
        }
        let j = self.j.value();
        let s: f64 = self
            .j
            .m_values()
            .zip(&self.o)
            .map(|(m, o)| m.value() * o)
            .sum();
        s / (j * self.j.dim() as f64)
    }
}

/// `Θ_z = (2j+1)|j,j⟩⟨j,j|`.
pub fn optimal_kernel(j: HalfInt) -> PovmKernelDiagonal {
    let mut o = vec![0.0; j.dim()];
    o[0] = j.dim() as f64;
    PovmKernelDiagonal { j, o }
}

pub type KernelSet = BTreeMap<HalfInt, PovmKernelDiagonal>;

/// Same kernel family `j ↦ f(j)` for every block of `state`.
pub fn kernels_for<F>(state: &BlockDiagonalState, mut f: F) -> KernelSet
where
    F: FnMut(HalfInt) -> PovmKernelDiagonal,
{
    state.blocks.iter().map(|b| (b.j, f(b.j))).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct BlockScore {
    pub j: HalfInt,
    /// `j A_j Tr ρ^j / (j+1)`, bounded by `j/(j+1)`.
    pub weight_term: f64,
    /// `Tr[(S_z/j) ρ̃^j]`, bounded by 1.
    pub state_term: f64,
    /// `Tr[(S_z/j) O^j/(2j+1)]`, bounded by 1.
    pub povm_term: f64,
    /// Score obtained when playing with the normalized block state alone.
    pub block_score: f64,
    /// Contribution `weight · state · povm` to `G`.
    pub contribution: f64,
    /// Contribution to `ΔG` through `Θ^j − O^j`.
    pub gap: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScoreBreakdown {
    pub total: HalfInt,
    /// Descending `j`.
    pub blocks: Vec<BlockScore>,
    pub score: f64,
    pub optimal_score: f64,
    pub delta: f64,
    /// `J (1 − G)`.
    pub epsilon: f64,
}

impl ScoreBreakdown {
    pub fn fidelity(&self) -> f64 {
        score_to_fidelity(self.score)
    }
}

/// Mean score `G` for `state` measured with the covariant POVM generated by
/// `kernels`. Blocks of zero weight (and `j = 0`) may be omitted from
/// `kernels`.
pub fn lemma1_score(state: &BlockDiagonalState, kernels: &KernelSet) -> Result<ScoreBreakdown> {
    let mut blocks = Vec::with_capacity(state.blocks.len());
    for block in &state.blocks {
        let j = block.j;
        let trace: f64 = block.coefficients.iter().sum();
        let weight = block.degeneracy * trace;
        if j.twice() == 0 || weight == 0.0 {
            continue;
        }
        let kernel = kernels.get(&j).ok_or(Error::MissingKernel(j))?;
        if kernel.j != j {
            return Err(Error::InvalidKernel {
                j,
                reason: format!("kernel stored under j = {j} is for j = {}", kernel.j),
            });
        }
        let jv = j.value();
        let weight_term = jv * weight / (jv + 1.0);
        let state_term = block.sz_trace() / (jv * trace);
        let povm_term = kernel.povm_term();
        let contribution = weight_term * state_term * povm_term;
        // Θ^j sits on m = +j or m = −j following the sign of the polarization.
        let gap = weight_term * (state_term.abs() - state_term * povm_term);
        blocks.push(BlockScore {
            j,
            weight_term,
            state_term,
            povm_term,
            block_score: jv / (jv + 1.0) * state_term * povm_term,
            contribution,
            gap,
        });
    }
    // Fixed summation order (descending j) keeps results bitwise reproducible.
    let score: f64 = blocks.iter().map(|b| b.contribution).sum();
    let optimal_score: f64 = blocks
        .iter()
        .map(|b| b.weight_term * b.state_term.abs())
        .sum();
    let delta: f64 = blocks.iter().map(|b| b.gap).sum();
    Ok(ScoreBreakdown {
        total: state.total,
        blocks,
        score,
        optimal_score,
        delta,
        epsilon: epsilon_factor(state.total, score),
    })
}

/// `ΔG = G_opt − G` assembled block by block from the `Θ^j − O^j` difference.
/// The returned breakdown is the same as [`lemma1_score`]; `delta` is the sum
/// of the per-block gaps, never the difference of the totals.
pub fn delta_g(state: &BlockDiagonalState, kernels: &KernelSet) -> Result<ScoreBreakdown> {
    lemma1_score(state, kernels)
}

/// `ε_J = J (1 − G)`.
pub fn epsilon_factor(total: HalfInt, score: f64) -> f64 {
    total.value() * (1.0 - score)
}

/// `F = (1 + G)/2`.
pub fn score_to_fidelity(score: f64) -> f64 {
    0.5 * (1.0 + score)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::thermal::{polarization_moment, thermal_state, ThermalSpec};
    use proptest::prelude::*;

    fn pure(tj: i64) -> BlockDiagonalState {
        BlockDiagonalState::fully_polarized(HalfInt::from_twice(tj))
    }

    #[test]
    fn optimal_score_on_pure_state() {
        for tj in 1..=50 {
            let state = pure(tj);
            let k = kernels_for(&state, optimal_kernel);
            let b = lemma1_score(&state, &k).unwrap();
            let jv = tj as f64 / 2.0;
            assert!((b.score - jv / (jv + 1.0)).abs() < 1e-12);
            assert!(b.delta.abs() < 1e-15);
            let n = tj as f64;
            assert!((b.fidelity() - (n + 1.0) / (n + 2.0)).abs() < 1e-12);
        }
        let b = lemma1_score(&pure(1), &kernels_for(&pure(1), optimal_kernel)).unwrap();
        assert!((b.score - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn uninformative_kernel_scores_zero() {
        let state = pure(8);
        let k = kernels_for(&state, PovmKernelDiagonal::uninformative);
        let b = lemma1_score(&state, &k).unwrap();
        assert_eq!(b.score, 0.0);
        assert!((b.delta - 4.0 / 5.0).abs() < 1e-15);
    }

    #[test]
    fn optimal_kernel_shape() {
        assert_eq!(optimal_kernel(HalfInt::ONE).moments(), &[3.0, 0.0, 0.0]);
        assert_eq!(optimal_kernel(HalfInt::ONE).povm_term(), 1.0);
    }

    #[test]
    fn thermal_optimum_matches_moment_sum() {
        for (tj, beta) in [(6, 1.0), (9, 0.4), (20, 2.5)] {
            let spec = ThermalSpec::new(HalfInt::from_twice(tj), beta).unwrap();
            let state = thermal_state(spec).unwrap();
            let b = lemma1_score(&state, &kernels_for(&state, optimal_kernel)).unwrap();
            let ln_z = tj as f64 * (2.0 * (beta / 2.0).cosh()).ln();
            let expected: f64 = state
                .blocks
                .iter()
                .map(|blk| {
                    let j = blk.j.value();
                    j * blk.degeneracy * polarization_moment(spec, blk.j) / (j + 1.0)
                })
                .sum::<f64>()
                / ln_z.exp();
            assert!((b.score - expected).abs() < 1e-12);
            assert!((b.optimal_score - b.score).abs() < 1e-15);
        }
    }

    #[test]
    fn zero_temperature_limit_of_thermal_optimum() {
        let spec = ThermalSpec::new(HalfInt::integer(7), 60.0).unwrap();
        let state = thermal_state(spec).unwrap();
        let b = lemma1_score(&state, &kernels_for(&state, optimal_kernel)).unwrap();
        assert!((b.score - 7.0 / 8.0).abs() < 1e-12);
    }

    #[test]
    fn epsilon_and_fidelity() {
        assert_eq!(epsilon_factor(HalfInt::integer(3), 1.0), 0.0);
        assert!((epsilon_factor(HalfInt::integer(9), 0.9) - 0.9).abs() < 1e-14);
        let j = 12.0;
        assert!(
            (epsilon_factor(HalfInt::integer(12), j / (j + 1.0)) - j / (j + 1.0)).abs() < 1e-13
        );
        assert!((score_to_fidelity(1.0 / 3.0) - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(score_to_fidelity(0.0), 0.5);
        assert_eq!(score_to_fidelity(1.0), 1.0);
    }

    #[test]
    fn missing_kernel_is_an_error() {
        let state = thermal_state(ThermalSpec::new(HalfInt::integer(2), 1.0).unwrap()).unwrap();
        let mut k = kernels_for(&state, optimal_kernel);
        k.remove(&HalfInt::ONE);
        assert_eq!(
            lemma1_score(&state, &k),
            Err(Error::MissingKernel(HalfInt::ONE))
        );
        // j = 0 never needs a kernel
        let mut k = kernels_for(&state, optimal_kernel);
        k.remove(&HalfInt::ZERO);
        assert!(lemma1_score(&state, &k).is_ok());
    }

    #[test]
    fn kernel_validation() {
        let j = HalfInt::ONE;
        assert!(PovmKernelDiagonal::new(j, vec![1.0, 1.0]).is_err());
        assert!(PovmKernelDiagonal::new(j, vec![2.0, 2.0, -1.0]).is_err());
        assert!(PovmKernelDiagonal::new(j, vec![1.0, 1.0, 0.5]).is_err());
        assert!(PovmKernelDiagonal::new(j, vec![1.5, 1.0, 0.5]).is_ok());
        assert!(PovmKernelDiagonal::normalized(j, vec![0.0, 0.0, 0.0]).is_err());
    }

    fn kernel_strategy(tj: i64) -> impl Strategy<Value = PovmKernelDiagonal> {
        let j = HalfInt::from_twice(tj);
        proptest::collection::vec(0.0f64..1.0, j.dim())
            .prop_filter("non-zero", |w| w.iter().sum::<f64>() > 1e-6)
            .prop_map(move |w| PovmKernelDiagonal::normalized(j, w).unwrap())
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]

        #[test]
        fn no_kernel_beats_the_optimum(kernel in (1i64..=10).prop_flat_map(kernel_strategy)) {
            let j = kernel.j();
            let state = BlockDiagonalState::fully_polarized(j);
            let mut ks = KernelSet::new();
            ks.insert(j, kernel);
            let b = lemma1_score(&state, &ks).unwrap();
            let opt = j.value() / (j.value() + 1.0);
            prop_assert!(b.score <= opt + 1e-12);
            prop_assert!(b.delta >= -1e-15);
            prop_assert!((b.delta - (opt - b.score)).abs() < 1e-12);
        }
    }

    proptest! {
        #[test]
        fn delta_matches_independent_optimum(
            k3 in kernel_strategy(6), k2 in kernel_strategy(4), k1 in kernel_strategy(2)
        ) {
            let spec = ThermalSpec::new(HalfInt::integer(3), 1.0).unwrap();
            let state = thermal_state(spec).unwrap();
            let mut ks = KernelSet::new();
            for k in [k3, k2, k1] {
                ks.insert(k.j(), k);
            }
            let b = delta_g(&state, &ks).unwrap();
            let opt = lemma1_score(&state, &kernels_for(&state, optimal_kernel)).unwrap().score;
            prop_assert!((b.delta - (opt - b.score)).abs() < 1e-12);
            prop_assert!(b.blocks.iter().all(|blk| blk.gap >= 0.0));
        }
    }

    proptest! {
        #[test]
        fn factors_are_bounded(kernel in kernel_strategy(7), beta in 0.0f64..4.0) {
            let spec = ThermalSpec::new(HalfInt::from_twice(7), beta).unwrap();
            let state = thermal_state(spec).unwrap();
            let k = kernels_for(&state, |j| if j == kernel.j() { kernel.clone() } else { optimal_kernel(j) });
            let b = lemma1_score(&state, &k).unwrap();
            for blk in &b.blocks {
                let jv = blk.j.value();
                prop_assert!(blk.weight_term >= 0.0 && blk.weight_term <= jv / (jv + 1.0) + 1e-15);
                prop_assert!(blk.state_term >= 0.0 && blk.state_term <= 1.0 + 1e-15);
                prop_assert!(blk.povm_term >= -1.0 - 1e-15 && blk.povm_term <= 1.0 + 1e-15);
                prop_assert!(blk.gap >= -1e-15);
            }
            prop_assert!(b.score <= b.optimal_score + 1e-15);
        }

        #[test]
        fn shifting_weight_up_never_lowers_the_score(kernel in kernel_strategy(6), frac in 0.0f64..1.0) {
            let j = kernel.j();
            let state = BlockDiagonalState::fully_polarized(j);
            let mut o = kernel.moments().to_vec();
            let moved = frac * o[1];
            o[1] -= moved;
            o[0] += moved;
            let shifted = PovmKernelDiagonal::new(j, o).unwrap();
            let score = |k: &PovmKernelDiagonal| {
                let mut ks = KernelSet::new();
                ks.insert(j, k.clone());
                lemma1_score(&state, &ks).unwrap().score
            };
            prop_assert!(score(&shifted) >= score(&kernel) - 1e-15);
        }
    }
}
