//! Brute-force reference computations that avoid the reduced formulas used
//! by the library: double-sphere quadrature of the score, dense `2^N`
//! product-state operators, and explicitly embedded spin blocks.
//!
//! These are slow by design and meant for checks with small `j` and `N`.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;

use crate::quadrature::GaussLegendre;
use crate::score::KernelSet;
use crate::spin::{spin_matrices, wigner_small_d};
use crate::thermal::BlockDiagonalState;
use crate::{Error, HalfInt, Result};

/// Rotation `R(θ, φ) = e^{−iφS_z} e^{−iθS_y}`, which maps `|j,j⟩` to the
/// coherent state along `(θ, φ)`.
fn rotation(j: HalfInt, theta: f64, phi: f64) -> DMatrix<Complex64> {
    let mut r = wigner_small_d(j, theta).to_complex();
    for (row, m) in j.m_values().enumerate() {
        let phase = Complex64::from_polar(1.0, -m.value() * phi);
        for col in 0..j.dim() {
            r[(row, col)] *= phase;
        }
    }
    r
}

/// Score `G = ∫dv ∫du Tr(O_v ρ_u) u·v` on a product grid of
/// `n_polar × n_azimuth` nodes for each sphere (Gauss-Legendre in `cos θ`,
/// uniform in `φ`), with `ρ_u = R_u ρ_z R_u†` and `O_v = R_v O_z R_v†`.
///
/// The `u·v = Σ_a u_a v_a` factorization turns the double sum into
/// `Σ_a Tr(X_a Y_a)` with `X_a = Σ_v w_v v_a O_v` and `Y_a = Σ_u w_u u_a ρ_u`,
/// which is algebraically identical to summing over all node pairs.
pub fn sphere_quadrature_score(
    state: &BlockDiagonalState,
    kernels: &KernelSet,
    n_polar: usize,
    n_azimuth: usize,
) -> Result<f64> {
    let polar = GaussLegendre::new(n_polar);
    let mut total = 0.0;
    for block in &state.blocks {
        let weight = block.degeneracy * block.coefficients.iter().sum::<f64>();
        if block.j.twice() == 0 || weight == 0.0 {
            continue;
        }
        let j = block.j;
        let kernel = kernels.get(&j).ok_or(Error::MissingKernel(j))?;
        let dim = j.dim();
        let rho = DMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
            dim,
            block.coefficients.iter().map(|&c| Complex64::from(c)),
        ));
        let o = DMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
            dim,
            kernel.moments().iter().map(|&c| Complex64::from(c)),
        ));
        let mut x_acc = vec![DMatrix::<Complex64>::zeros(dim, dim); 3];
        let mut y_acc = vec![DMatrix::<Complex64>::zeros(dim, dim); 3];
        for (ci, &cos_t) in polar.nodes.iter().enumerate() {
            let theta = cos_t.clamp(-1.0, 1.0).acos();
            let sin_t = (1.0 - cos_t * cos_t).max(0.0).sqrt();
            for k in 0..n_azimuth {
                let phi = 2.0 * std::f64::consts::PI * k as f64 / n_azimuth as f64;
                // normalized measure: Σ w = 1
                let w = polar.weights[ci] / 2.0 / n_azimuth as f64;
                let dir = [sin_t * phi.cos(), sin_t * phi.sin(), cos_t];
                let r = rotation(j, theta, phi);
                let rd = r.adjoint();
                let rho_u = &r * &rho * &rd;
                let o_u = &r * &o * &rd;
                for a in 0..3 {
                    let f = Complex64::from(w * dir[a]);
                    x_acc[a] += &o_u * f;
                    y_acc[a] += &rho_u * f;
                }
            }
        }
        let g_block: f64 = (0..3).map(|a| (&x_acc[a] * &y_acc[a]).trace().re).sum();
        total += block.degeneracy * g_block;
    }
    Ok(total)
}

fn kron(a: &DMatrix<Complex64>, b: &DMatrix<Complex64>) -> DMatrix<Complex64> {
    a.kronecker(b)
}

/// Collective `(S_x, S_y, S_z)` on `n` spin-1/2 particles, dimension `2^n`.
/// Qubit basis order is `|↑⟩, |↓⟩` per site.
pub fn collective_spin(n: usize) -> [DMatrix<Complex64>; 3] {
    let half = spin_matrices(HalfInt::HALF);
    let single = [half.sx, half.sy, half.sz];
    let id2 = DMatrix::<Complex64>::identity(2, 2);
    let dim = 1usize << n;
    let mut out = [
        DMatrix::<Complex64>::zeros(dim, dim),
        DMatrix::<Complex64>::zeros(dim, dim),
        DMatrix::<Complex64>::zeros(dim, dim),
    ];
    for (a, op) in single.iter().enumerate() {
        for site in 0..n {
            let mut acc = DMatrix::<Complex64>::identity(1, 1);
            for s in 0..n {
                acc = kron(&acc, if s == site { op } else { &id2 });
            }
            out[a] += acc;
        }
    }
    out
}

/// Diagonal of `(e^{βσ_z/2})^{⊗n} / Z` in the computational basis.
pub fn thermal_product_diagonal(n: usize, beta: f64) -> Vec<f64> {
    let z = (2.0 * (0.5 * beta).cosh()).powi(n as i32);
    (0..1usize << n)
        .map(|bits| {
            // bit 0 = up (first basis vector of each qubit)
            let downs = bits.count_ones() as f64;
            let m = 0.5 * (n as f64 - 2.0 * downs);
            (beta * m).exp() / z
        })
        .collect()
}

/// `Tr(S² ρ)` from dense `2^n` operators.
pub fn dense_mean_s2(n: usize, beta: f64) -> f64 {
    let [sx, sy, sz] = collective_spin(n);
    let s2 = &sx * &sx + &sy * &sy + &sz * &sz;
    thermal_product_diagonal(n, beta)
        .iter()
        .enumerate()
        .map(|(i, p)| p * s2[(i, i)].re)
        .sum()
}

/// Real symmetric `S²` restricted to the sector with `downs` flipped spins,
/// via `S² = 3n/4 − n(n−1)/4 + Σ_{i<k} SWAP_{ik}`. Returns the sector basis
/// (as bit patterns) and the matrix.
fn s2_sector(n: usize, downs: u32) -> (Vec<usize>, DMatrix<f64>) {
    let basis: Vec<usize> = (0..1usize << n)
        .filter(|b| b.count_ones() == downs)
        .collect();
    let index: BTreeMap<usize, usize> = basis.iter().enumerate().map(|(i, &b)| (b, i)).collect();
    let nf = n as f64;
    let mut m = DMatrix::<f64>::zeros(basis.len(), basis.len());
    for (col, &b) in basis.iter().enumerate() {
        m[(col, col)] += 0.75 * nf - 0.25 * nf * (nf - 1.0);
        for i in 0..n {
            for k in (i + 1)..n {
                let bi = (b >> i) & 1;
                let bk = (b >> k) & 1;
                let swapped = if bi == bk { b } else { b ^ (1 << i) ^ (1 << k) };
                m[(index[&swapped], col)] += 1.0;
            }
        }
    }
    (basis, m)
}

fn spin_label(eigenvalue: f64) -> HalfInt {
    let j = 0.5 * ((1.0 + 4.0 * eigenvalue).sqrt() - 1.0);
    HalfInt::from_twice((2.0 * j).round() as i64)
}

/// Weight `Tr(P_j ρ)` of each total-spin sector of the thermal product
/// state, found by diagonalizing `S²` in every magnetization sector.
pub fn dense_block_weights(n: usize, beta: f64) -> BTreeMap<HalfInt, f64> {
    let diag = thermal_product_diagonal(n, beta);
    let mut out = BTreeMap::new();
    for downs in 0..=n as u32 {
        let (basis, s2) = s2_sector(n, downs);
        let p = diag[basis[0]];
        let eig = SymmetricEigen::new(s2);
        for &ev in eig.eigenvalues.iter() {
            *out.entry(spin_label(ev)).or_insert(0.0) += p;
        }
    }
    out
}

/// Multiplicity of spin `j` in `n` qubits: the number of `S²` eigenvalues
/// `j(j+1)` in the `m = j` magnetization sector.
pub fn dense_degeneracy(n: usize, j: HalfInt) -> usize {
    let count = |downs: i64| -> usize {
        if downs < 0 || downs > n as i64 {
            return 0;
        }
        let (_, s2) = s2_sector(n, downs as u32);
        SymmetricEigen::new(s2)
            .eigenvalues
            .iter()
            .filter(|&&ev| spin_label(ev) == j)
            .count()
    };
    // m = n/2 − downs
    let downs = (n as i64 - j.twice()) / 2;
    count(downs)
}

/// Orthonormal basis `|α, j, m⟩`, `m = j..−j`, of one spin-`j` copy inside
/// `n` qubits, as columns of a real `2^n × (2j+1)` matrix.
pub fn embedded_block_basis(n: usize, j: HalfInt) -> Result<DMatrix<f64>> {
    let diff = HalfInt::from_particles(n) - j;
    if !diff.is_integer() || diff.twice() < 0 {
        return Err(Error::NonIntegerSpinDifference {
            total: HalfInt::from_particles(n),
            block: j,
        });
    }
    let downs = (diff.twice() / 2) as u32;
    let (basis, s2) = s2_sector(n, downs);
    let target = j.value() * (j.value() + 1.0);
    let eig = SymmetricEigen::new(s2);
    let col = eig
        .eigenvalues
        .iter()
        .position(|ev| (ev - target).abs() < 1e-8)
        .ok_or_else(|| Error::InvalidParameter(format!("no spin-{j} vector in {n} qubits")))?;
    let dim = 1usize << n;
    let mut top = nalgebra::DVector::<f64>::zeros(dim);
    for (i, &b) in basis.iter().enumerate() {
        top[b] = eig.eigenvectors[(i, col)];
    }
    let [sx, sy, _] = collective_spin(n);
    // S⁻ = S_x − i S_y is real in this basis.
    let lower = (&sx - &sy * Complex64::i()).map(|z| z.re);
    let mut out = DMatrix::<f64>::zeros(dim, j.dim());
    let mut v = top;
    v /= v.norm();
    for k in 0..j.dim() {
        out.set_column(k, &v);
        let next = &lower * &v;
        let nn = next.norm();
        if k + 1 < j.dim() {
            v = next / nn;
        }
    }
    Ok(out)
}

/// `|⟨α,j,m| e^{−iθ S_x} |α,j,m'⟩|²` for an embedded block, computed from a
/// single eigendecomposition of the `2^n`-dimensional collective `S_x`.
pub struct EmbeddedRotationTable {
    projected: DMatrix<f64>,
    eigenvalues: Vec<f64>,
    dim: usize,
}

impl EmbeddedRotationTable {
    pub fn new(n: usize, j: HalfInt) -> Result<Self> {
        let basis = embedded_block_basis(n, j)?;
        let [sx, _, _] = collective_spin(n);
        let eig = SymmetricEigen::new(sx.map(|z| z.re));
        let projected = eig.eigenvectors.transpose() * &basis;
        Ok(EmbeddedRotationTable {
            projected,
            eigenvalues: eig.eigenvalues.iter().copied().collect(),
            dim: j.dim(),
        })
    }

    pub fn squared(&self, theta: f64) -> DMatrix<f64> {
        let mut out = DMatrix::<f64>::zeros(self.dim, self.dim);
        for a in 0..self.dim {
            for b in 0..self.dim {
                let mut acc = Complex64::new(0.0, 0.0);
                for (k, &lam) in self.eigenvalues.iter().enumerate() {
                    acc += Complex64::from_polar(
                        self.projected[(k, a)] * self.projected[(k, b)],
                        -theta * lam,
                    );
                }
                out[(a, b)] = acc.norm_sqr();
            }
        }
        out
    }
}

/// `e^{−iθ S_y}` by Hermitian eigendecomposition of `S_y`.
pub fn rotation_by_eigendecomposition(j: HalfInt, theta: f64) -> DMatrix<Complex64> {
    let sy = spin_matrices(j).sy;
    let eig = SymmetricEigen::new(sy);
    let v = &eig.eigenvectors;
    let phases = DMatrix::from_diagonal(
        &eig.eigenvalues
            .map(|l| Complex64::from_polar(1.0, -theta * l)),
    );
    v * phases * v.adjoint()
}
