//! Rotation-symmetric inputs: states diagonal in `|α, j, m⟩` with
//! coefficients independent of the permutation label `α`.
//!
//! Thermal weights are `e^{+βm}/Z`, so for `β > 0` every block is polarized
//! along `+z`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spin::degeneracy;
use crate::HalfInt;

/// One spin-`j` block: multiplicity `A_j` and the per-copy diagonal `c_m^j`.
#[derive(Debug, Clone, PartialEq)]
pub struct Block {
    pub j: HalfInt,
    pub degeneracy: f64,
    /// `c_m^j` for `m = j, ..., -j`.
    pub coefficients: Vec<f64>,
}

impl Block {
    /// `A_j Tr ρ_z^j`.
    pub fn weight(&self) -> f64 {
        self.degeneracy * self.coefficients.iter().sum::<f64>()
    }

    /// `Tr(S_z ρ_z^j)` for a single copy.
    pub fn sz_trace(&self) -> f64 {
        self.j
            .m_values()
            .zip(&self.coefficients)
            .map(|(m, c)| m.value() * c)
            .sum()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BlockDiagonalState {
    pub total: HalfInt,
    /// Ordered by descending `j`.
    pub blocks: Vec<Block>,
}

impl BlockDiagonalState {
    pub fn new(total: HalfInt, blocks: Vec<Block>) -> Result<Self> {
        for b in &blocks {
            if b.coefficients.len() != b.j.dim() {
                return Err(Error::InvalidParameter(format!(
                    "block j = {} needs {} coefficients",
                    b.j,
                    b.j.dim()
                )));
            }
            if b.coefficients.iter().any(|c| !(*c >= 0.0)) {
                return Err(Error::InvalidParameter(format!(
                    "block j = {} has a negative coefficient",
                    b.j
                )));
            }
        }
        let state = BlockDiagonalState { total, blocks };
        let norm = state.normalization();
        if (norm - 1.0).abs() > 1e-12 {
            return Err(Error::NotNormalized(norm));
        }
        Ok(state)
    }

    /// `|J, J⟩`, the zero-temperature state.
    pub fn fully_polarized(total: HalfInt) -> Self {
        let mut coefficients = vec![0.0; total.dim()];
        coefficients[0] = 1.0;
        BlockDiagonalState {
            total,
            blocks: vec![Block {
                j: total,
                degeneracy: 1.0,
                coefficients,
            }],
        }
    }

    pub fn normalization(&self) -> f64 {
        self.blocks.iter().map(Block::weight).sum()
    }

    pub fn block(&self, j: HalfInt) -> Option<&Block> {
        self.blocks.iter().find(|b| b.j == j)
    }

    pub fn mean_sz(&self) -> f64 {
        self.blocks
            .iter()
            .map(|b| b.degeneracy * b.sz_trace())
            .sum()
    }

    pub fn mean_s2(&self) -> f64 {
        self.blocks
            .iter()
            .map(|b| {
                let j = b.j.value();
                j * (j + 1.0) * b.weight()
            })
            .sum()
    }
}

/// Thermal state of `2J` spin-1/2 particles at inverse temperature `beta`.
/// `beta = ±∞` is admitted as the fully polarized limit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThermalSpec {
    pub total: HalfInt,
    pub beta: f64,
}

impl ThermalSpec {
    pub fn new(total: HalfInt, beta: f64) -> Result<Self> {
        if beta.is_nan() {
            return Err(Error::InvalidParameter("beta is NaN".into()));
        }
        if total.twice() < 0 {
            return Err(Error::InvalidSpin(total.to_string()));
        }
        Ok(ThermalSpec { total, beta })
    }

    /// Inverse temperature giving `⟨S_z⟩ = c·J`, i.e. `tanh(β/2) = c`.
    pub fn with_polarization(total: HalfInt, c: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&c) {
            return Err(Error::InvalidParameter(format!(
                "polarization ratio must lie in [0, 1], got {c}"
            )));
        }
        let beta = if c == 1.0 {
            f64::INFINITY
        } else {
            2.0 * c.atanh()
        };
        Self::new(total, beta)
    }

    pub fn particles(&self) -> usize {
        self.total.twice() as usize
    }
}

/// `ln(2 cosh x)` without overflow.
fn ln_two_cosh(x: f64) -> f64 {
    let a = x.abs();
    a + (-2.0 * a).exp().ln_1p()
}

pub fn thermal_state(spec: ThermalSpec) -> Result<BlockDiagonalState> {
    let total = spec.total;
    let beta = spec.beta;
    let mut blocks = Vec::new();
    for j in total.blocks() {
        let degeneracy = degeneracy(total, j)? as f64;
        let coefficients = if beta.is_infinite() {
            let mut c = vec![0.0; j.dim()];
            if j == total {
                let idx = if beta > 0.0 { 0 } else { j.dim() - 1 };
                c[idx] = 1.0;
            }
            c
        } else {
            // log-space: β m − 2J ln(2 cosh(β/2))
            let ln_z = total.twice() as f64 * ln_two_cosh(0.5 * beta);
            j.m_values()
                .map(|m| (beta * m.value() - ln_z).exp())
                .collect()
        };
        blocks.push(Block {
            j,
            degeneracy,
            coefficients,
        });
    }
    Ok(BlockDiagonalState { total, blocks })
}

/// `f_j(β) = Z Tr((S_z/j) ρ_z^{α,j}) = (1/j) Σ_m m e^{βm}`, summed directly.
/// Zero for `j = 0` and for `β = 0`.
pub fn polarization_moment(spec: ThermalSpec, j: HalfInt) -> f64 {
    if j.twice() == 0 || spec.beta == 0.0 {
        return 0.0;
    }
    let beta = spec.beta;
    // pair ±m to keep the sum exact in sign: m (e^{βm} − e^{−βm})
    let sum: f64 = j
        .m_values()
        .filter(|m| m.twice() > 0)
        .map(|m| 2.0 * m.value() * (beta * m.value()).sinh())
        .sum();
    sum / j.value()
}

/// Closed form of [`polarization_moment`]:
/// `[j sinh((1+j)β) − (1+j) sinh(jβ)] / (2j sinh²(β/2))`.
pub fn polarization_moment_closed_form(beta: f64, j: HalfInt) -> f64 {
    if j.twice() == 0 || beta == 0.0 {
        return 0.0;
    }
    let jv = j.value();
    let s = (0.5 * beta).sinh();
    (jv * ((1.0 + jv) * beta).sinh() - (1.0 + jv) * (jv * beta).sinh()) / (2.0 * jv * s * s)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TotalSpin {
    /// `⟨S²⟩`
    pub s2: f64,
    /// Positive root of `j_eq (j_eq + 1) = ⟨S²⟩`.
    pub j_eq: f64,
}

/// `⟨S²⟩ = 3N/4 + N(N−1)/4 · tanh²(β/2)` for the thermal product state.
pub fn mean_total_spin(spec: ThermalSpec) -> TotalSpin {
    let n = spec.particles() as f64;
    let t = if spec.beta.is_infinite() {
        1.0
    } else {
        (0.5 * spec.beta).tanh()
    };
    let s2 = 0.75 * n + 0.25 * n * (n - 1.0) * t * t;
    TotalSpin {
        s2,
        j_eq: equivalent_spin(s2),
    }
}

pub fn equivalent_spin(s2: f64) -> f64 {
    0.5 * ((1.0 + 4.0 * s2).sqrt() - 1.0)
}
