use mqm_core::oracles::EmbeddedRotationTable;
use mqm_core::pointer::{
    interior_maximum, kraus_diagonal, kraus_normalization, kraus_radial_profile,
    kraus_radial_profile_with, oj_bounds, reference_width, score_vs_delta, PointerConfig,
};
use mqm_core::{Execution, HalfInt};
use num_complex::Complex64;

/// `E_{rẑ}` for a single spin-1/2 on a `n³` midpoint grid in momentum,
/// using `e^{−ip·σ/2} = cos(p/2) − i sin(p/2) p̂·σ`.
fn cartesian_spin_half(delta: f64, r: f64, n: usize) -> [Complex64; 2] {
    let half_width = 8.0 / delta;
    let h = 2.0 * half_width / n as f64;
    let axis: Vec<f64> = (0..n).map(|k| -half_width + (k as f64 + 0.5) * h).collect();
    let mut up = Complex64::new(0.0, 0.0);
    let mut down = Complex64::new(0.0, 0.0);
    for &px in &axis {
        for &py in &axis {
            for &pz in &axis {
                let p2 = px * px + py * py + pz * pz;
                let p = p2.sqrt();
                let env = Complex64::from_polar((-delta * delta * p2).exp(), r * pz);
                let (c, s) = ((0.5 * p).cos(), (0.5 * p).sin() * pz / p);
                up += env * Complex64::new(c, -s);
                down += env * Complex64::new(c, s);
            }
        }
    }
    let scale = kraus_normalization(delta) * h * h * h;
    [up * scale, down * scale]
}

#[test]
fn spin_half_kraus_matches_cartesian_grid() {
    let j = HalfInt::HALF;
    let cfg = PointerConfig::for_block(j, 1.0);
    for r in [0.0, 0.4, 1.0, 2.3, 4.0] {
        let ours = kraus_diagonal(j, r, &cfg).unwrap();
        let grid = cartesian_spin_half(1.0, r, 64);
        for (a, b) in ours.iter().zip(grid) {
            assert!(b.im.abs() < 1e-10, "r={r}: {b}");
            assert!((a - b.re).abs() < 1e-4, "r={r}: {a} vs {}", b.re);
        }
    }
}

#[test]
fn embedded_blocks_give_the_bare_kernel() {
    for (n, tj) in [
        (2, 2),
        (3, 1),
        (4, 2),
        (6, 6),
        (7, 3),
        (8, 4),
        (10, 10),
        (10, 6),
        (10, 2),
    ] {
        let j = HalfInt::from_twice(tj);
        let table = EmbeddedRotationTable::new(n, j).unwrap();
        let cfg = PointerConfig::for_block(j, reference_width(j.value().max(1.0)));
        let bare = kraus_radial_profile(j, &cfg, Execution::Sequential)
            .unwrap()
            .kernel()
            .unwrap();
        let embedded =
            kraus_radial_profile_with(j, &cfg, Execution::Sequential, |theta| table.squared(theta))
                .unwrap()
                .kernel()
                .unwrap();
        for (a, b) in bare.moments().iter().zip(embedded.moments()) {
            assert!((a - b).abs() < 1e-8, "N={n} j={j}: {a} vs {b}");
        }
    }
}

#[test]
fn score_curve_peaks_near_reference_width() {
    for j in [5i64, 10, 20] {
        let total = HalfInt::integer(j);
        let w = reference_width(j as f64);
        let grid: Vec<f64> = [0.2, 0.35, 0.5, 0.7, 1.0, 1.4, 2.0, 2.8, 5.0]
            .iter()
            .map(|s| s * w)
            .collect();
        let curve = score_vs_delta(total, &grid, Execution::Sequential).unwrap();
        let best = interior_maximum(&curve).expect("interior maximum");
        let ratio = curve[best].delta / w;
        assert!((0.5..=2.0).contains(&ratio), "J={j}: Δ*/√(J/4) = {ratio}");
        for p in &curve {
            assert!(p.bounds.worst_case <= p.score + 1e-12);
            assert!(p.score <= p.bounds.next_level + 1e-12);
        }
    }
}

#[test]
fn top_moment_bounds_bracket_the_score() {
    let total = HalfInt::integer(10);
    let curve = score_vs_delta(total, &[reference_width(10.0)], Execution::Sequential).unwrap();
    let b = oj_bounds(total, curve[0].top_moment);
    assert!(b.worst_case <= curve[0].score);
    assert!(curve[0].score <= b.next_level);
}
