use std::fmt;

use mqm_core::oracles::{dense_mean_s2, sphere_quadrature_score, EmbeddedRotationTable};
use mqm_core::pointer::{
    kraus_radial_profile, kraus_radial_profile_with, reference_width, PointerConfig,
    COMPLETENESS_TOLERANCE,
};
use mqm_core::score::{lemma1_score, KernelSet, PovmKernelDiagonal};
use mqm_core::spin::{spin_matrices, wigner_small_d};
use mqm_core::thermal::{
    mean_total_spin, polarization_moment, polarization_moment_closed_form, thermal_state,
    ThermalSpec,
};
use mqm_core::weak::{weak1d_analytic_score, weak1d_simulated_score};
use mqm_core::{Execution, HalfInt};
use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// A deliberate defect, used to confirm the suite catches it.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mutation {
    /// Negates the closed form of `f_j`.
    FlipPolarizationMoment,
}

#[derive(Debug, Clone, Copy)]
pub struct SelftestOptions {
    pub seed: u64,
    pub exec: Execution,
    pub mutation: Option<Mutation>,
}

impl Default for SelftestOptions {
    fn default() -> Self {
        SelftestOptions {
            seed: 7,
            exec: Execution::default(),
            mutation: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SelftestReport {
    pub checks: Vec<Check>,
}

impl SelftestReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failed(&self) -> Vec<&'static str> {
        self.checks
            .iter()
            .filter(|c| !c.passed)
            .map(|c| c.name)
            .collect()
    }
}

impl fmt::Display for SelftestReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.checks {
            writeln!(
                f,
                "{} {:<28} {}",
                if c.passed { "PASS" } else { "FAIL" },
                c.name,
                c.detail
            )?;
        }
        let n_pass = self.checks.iter().filter(|c| c.passed).count();
        writeln!(f, "{n_pass}/{} checks passed", self.checks.len())
    }
}

fn max_abs(m: &DMatrix<Complex64>) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

fn check(name: &'static str, err: f64, tol: f64) -> Check {
    Check {
        name,
        passed: err < tol,
        detail: format!("max error {err:.3e} (tolerance {tol:.0e})"),
    }
}

fn spin_algebra() -> Check {
    let mut err: f64 = 0.0;
    for tj in 1..=10 {
        let j = HalfInt::from_twice(tj);
        let s = spin_matrices(j);
        let comm = &s.sx * &s.sy - &s.sy * &s.sx - &s.sz * Complex64::i();
        let jj = j.value() * (j.value() + 1.0);
        let cas =
            s.casimir() - DMatrix::<Complex64>::identity(j.dim(), j.dim()) * Complex64::from(jj);
        err = err.max(max_abs(&comm)).max(max_abs(&cas));
    }
    check("spin algebra", err, 1e-12)
}

fn wigner_orthogonality() -> Check {
    let mut err: f64 = 0.0;
    for tj in 1..=20 {
        let j = HalfInt::from_twice(tj);
        for theta in [0.4, 1.1, 2.9] {
            let d = wigner_small_d(j, theta).d;
            let id = &d * d.transpose() - DMatrix::<f64>::identity(j.dim(), j.dim());
            err = err.max(id.amax());
        }
    }
    check("wigner-d orthogonality", err, 1e-10)
}

fn thermal_normalization() -> Result<Check, mqm_core::Error> {
    let mut err: f64 = 0.0;
    for n in 1..=40 {
        for beta in [0.0, 0.7, 3.0] {
            let s = thermal_state(ThermalSpec::new(HalfInt::from_particles(n), beta)?)?;
            err = err.max((s.normalization() - 1.0).abs());
        }
    }
    Ok(check("thermal normalization", err, 1e-12))
}

fn polarization_moments(mutation: Option<Mutation>) -> Result<Check, mqm_core::Error> {
    let sign = if mutation == Some(Mutation::FlipPolarizationMoment) {
        -1.0
    } else {
        1.0
    };
    let mut err: f64 = 0.0;
    for tj in 1..=20 {
        let j = HalfInt::from_twice(tj);
        for beta in [0.3, 1.0, 2.5] {
            let spec = ThermalSpec::new(HalfInt::from_twice(20), beta)?;
            let direct = polarization_moment(spec, j);
            let closed = sign * polarization_moment_closed_form(beta, j);
            err = err.max(((closed - direct) / direct).abs());
        }
    }
    Ok(check("thermal f_j closed form", err, 1e-10))
}

fn total_spin_dense() -> Result<Check, mqm_core::Error> {
    let mut err: f64 = 0.0;
    for n in 1..=4 {
        for beta in [0.0, 0.8, 2.0] {
            let spec = ThermalSpec::new(HalfInt::from_particles(n), beta)?;
            err = err.max((mean_total_spin(spec).s2 - dense_mean_s2(n, beta)).abs());
        }
    }
    Ok(check("<S^2> dense oracle", err, 1e-12))
}

fn score_oracle(seed: u64) -> Result<Check, mqm_core::Error> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut err: f64 = 0.0;
    for tj in [1, 2] {
        let total = HalfInt::from_twice(tj);
        for beta in [f64::INFINITY, 0.9] {
            let state = thermal_state(ThermalSpec::new(total, beta)?)?;
            let kernels: KernelSet = state
                .blocks
                .iter()
                .map(|b| {
                    let w: Vec<f64> = (0..b.j.dim()).map(|_| rng.random::<f64>() + 1e-3).collect();
                    PovmKernelDiagonal::normalized(b.j, w).map(|k| (b.j, k))
                })
                .collect::<Result<_, _>>()?;
            let exact = lemma1_score(&state, &kernels)?.score;
            let quad = sphere_quadrature_score(&state, &kernels, 24, 24)?;
            err = err.max((exact - quad).abs());
        }
    }
    Ok(check("score vs sphere quadrature", err, 1e-3))
}

fn weak1d(seed: u64, exec: Execution) -> Result<Check, mqm_core::Error> {
    let mut worst: f64 = 0.0;
    for (tj, t) in [(4, 1), (4, 4), (3, 9)] {
        let total = HalfInt::from_twice(tj);
        let est = weak1d_simulated_score(total, t, 2.0, 4000, seed, exec)?;
        let exact = weak1d_analytic_score(total, t, 2.0);
        worst = worst.max((est.mean - exact).abs() / est.stderr);
    }
    Ok(Check {
        name: "1d weak analytic vs sim",
        passed: worst < 3.0,
        detail: format!("largest deviation {worst:.2} standard errors (limit 3)"),
    })
}

fn completeness(exec: Execution) -> Result<Check, mqm_core::Error> {
    let mut err: f64 = 0.0;
    for tj in 1..=10 {
        let j = HalfInt::from_twice(tj);
        for delta in [
            0.5 * reference_width(j.value()),
            reference_width(j.value()),
            1.0,
        ] {
            let profile = kraus_radial_profile(j, &PointerConfig::for_block(j, delta), exec)?;
            err = err.max(profile.completeness_defect());
        }
    }
    Ok(check("pointer completeness", err, COMPLETENESS_TOLERANCE))
}

fn block_equivalence(exec: Execution) -> Result<Check, mqm_core::Error> {
    let mut err: f64 = 0.0;
    for (n, tj) in [(3, 1), (6, 2), (8, 4), (10, 10)] {
        let j = HalfInt::from_twice(tj);
        let cfg = PointerConfig::for_block(j, reference_width(j.value().max(1.0)));
        let table = EmbeddedRotationTable::new(n, j)?;
        let bare = kraus_radial_profile(j, &cfg, exec)?.kernel()?;
        let embedded =
            kraus_radial_profile_with(j, &cfg, exec, |theta| table.squared(theta))?.kernel()?;
        for (a, b) in bare.moments().iter().zip(embedded.moments()) {
            err = err.max((a - b).abs());
        }
    }
    Ok(check("block equivalence", err, 1e-8))
}

fn or_failed(name: &'static str, r: Result<Check, mqm_core::Error>) -> Check {
    r.unwrap_or_else(|e| Check {
        name,
        passed: false,
        detail: format!("error: {e}"),
    })
}

/// Fast invariant suite.
pub fn selftest(opts: SelftestOptions) -> SelftestReport {
    let checks = vec![
        spin_algebra(),
        wigner_orthogonality(),
        or_failed("thermal normalization", thermal_normalization()),
        or_failed(
            "thermal f_j closed form",
            polarization_moments(opts.mutation),
        ),
        or_failed("<S^2> dense oracle", total_spin_dense()),
        or_failed("score vs sphere quadrature", score_oracle(opts.seed)),
        or_failed("1d weak analytic vs sim", weak1d(opts.seed, opts.exec)),
        or_failed("pointer completeness", completeness(opts.exec)),
        or_failed("block equivalence", block_equivalence(opts.exec)),
    ];
    SelftestReport { checks }
}
