use std::f64::consts::PI;

use fkpp::{Field, Grid, SpectralOperator};
use proptest::prelude::*;

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

#[test]
fn plane_waves_are_eigenfunctions_1d() {
    for &alpha in &[0.3, 0.5, 1.0, 1.5, 2.0] {
        let grid = Grid::new(1, 64, 2.0 * PI).unwrap();
        let op = SpectralOperator::new(grid, alpha).unwrap();
        for m in -32i64..32 {
            let k = m as f64;
            let scale = k.abs().powf(alpha);
            for (part, wave) in [("cos", 0), ("sin", 1)] {
                let u = Field::from_fn(grid, 0.0, |x| if wave == 0 { (k * x[0]).cos() } else { (k * x[0]).sin() })
                    .unwrap();
                let lu = op.apply_frac_laplacian(&u).unwrap();
                let expected: Vec<f64> = u.values().iter().map(|v| scale * v).collect();
                let err = max_abs_diff(lu.values(), &expected);
                assert!(err <= 1e-12 * scale.max(1.0), "α = {alpha}, {part}({m}x): {err}");
            }
        }
    }
}

#[test]
fn plane_waves_are_eigenfunctions_2d() {
    let grid = Grid::new(2, 32, 2.0 * PI).unwrap();
    for &alpha in &[0.5, 1.0, 1.7] {
        let op = SpectralOperator::new(grid, alpha).unwrap();
        for &(a, b) in &[(0i64, 1i64), (1, 0), (3, -2), (-7, 5), (15, 15), (-16, 4)] {
            let (ka, kb) = (a as f64, b as f64);
            let scale = ka.hypot(kb).powf(alpha);
            let u = Field::from_fn(grid, 0.0, |x| (ka * x[0] + kb * x[1]).cos()).unwrap();
            let lu = op.apply_frac_laplacian(&u).unwrap();
            let expected: Vec<f64> = u.values().iter().map(|v| scale * v).collect();
            assert!(max_abs_diff(lu.values(), &expected) <= 1e-12 * scale.max(1.0), "({a},{b}) α = {alpha}");
        }
    }
}

fn smooth(x: f64) -> f64 {
    (x.sin()).exp() + 0.3 * (2.0 * x).cos()
}

// −u″ of `smooth`, by hand
fn minus_second(x: f64) -> f64 {
    let e = x.sin().exp();
    -(e * (x.cos().powi(2) - x.sin())) + 1.2 * (2.0 * x).cos()
}

#[test]
fn alpha_two_matches_finite_differences() {
    let grid = Grid::new(1, 128, 2.0 * PI).unwrap();
    let h = grid.spacing();
    let op = SpectralOperator::new(grid, 2.0).unwrap();
    let u = Field::from_fn(grid, 0.0, |x| smooth(x[0])).unwrap();
    let lu = op.apply_frac_laplacian(&u).unwrap();
    let v = u.values();
    let n = v.len();
    let at = |i: isize| v[i.rem_euclid(n as isize) as usize];
    let norm = v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    for i in 0..n as isize {
        let fd = -(-at(i + 2) + 16.0 * at(i + 1) - 30.0 * at(i) + 16.0 * at(i - 1) - at(i - 2)) / (12.0 * h * h);
        assert!((lu.values()[i as usize] - fd).abs() <= h * h * norm);
        let exact = minus_second(grid.coordinate(i as usize));
        assert!((lu.values()[i as usize] - exact).abs() < 1e-11);
    }
}

#[test]
fn gradient_matches_centered_differences() {
    let grid = Grid::new(2, 64, 2.0 * PI).unwrap();
    let h = grid.spacing();
    let op = SpectralOperator::new(grid, 1.0).unwrap();
    let u = Field::from_fn(grid, 0.0, |x| (x[0] + 2.0 * x[1]).sin() + (3.0 * x[0]).cos() * x[1].sin()).unwrap();
    let g = op.gradient(&u).unwrap();
    let n = grid.n();
    let v = u.values();
    let norm = v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    for i in 0..n {
        for j in 0..n {
            let ip = (i + 1) % n;
            let im = (i + n - 1) % n;
            let jp = (j + 1) % n;
            let jm = (j + n - 1) % n;
            let dx = (v[ip * n + j] - v[im * n + j]) / (2.0 * h);
            let dy = (v[i * n + jp] - v[i * n + jm]) / (2.0 * h);
            // error of the centered difference is h²/6 · u‴; u‴ ≤ 27 + 9 here
            assert!((g[0].values()[i * n + j] - dx).abs() <= 36.0 / 6.0 * h * h * norm);
            assert!((g[1].values()[i * n + j] - dy).abs() <= 36.0 / 6.0 * h * h * norm);
        }
    }
}

#[test]
fn parseval_with_unnormalized_forward_transform() {
    let grid = Grid::new(2, 16, 3.0).unwrap();
    let op = SpectralOperator::new(grid, 1.0).unwrap();
    let u = Field::from_fn(grid, 0.0, |x| (x[0] * 2.1).sin() + x[1] * x[1]).unwrap();
    let spec = op.forward(u.values());
    let lhs: f64 = spec.iter().map(|c| c.norm_sqr()).sum();
    let rhs: f64 = u.values().iter().map(|v| v * v).sum::<f64>() * grid.len() as f64;
    assert!((lhs / rhs - 1.0).abs() < 1e-13);
}

#[test]
fn multipliers_move_monotonically_toward_the_laplacian() {
    let grid = Grid::new(2, 16, 5.0).unwrap();
    let alphas = [1.0, 1.5, 1.9, 1.99, 2.0];
    let ops: Vec<SpectralOperator> = alphas.iter().map(|&a| SpectralOperator::new(grid, a).unwrap()).collect();
    for mode in 0..grid.len() {
        let gaps: Vec<f64> = ops
            .iter()
            .map(|op| (op.frac_multiplier()[mode] - ops[4].frac_multiplier()[mode]).abs())
            .collect();
        assert!(gaps.windows(2).all(|w| w[1] <= w[0] + 1e-15), "mode {mode}: {gaps:?}");
        assert_eq!(gaps[4], 0.0);
    }
}

fn gaussian_packet(grid: Grid, shift: f64, freq: f64) -> Field {
    Field::from_fn(grid, 0.0, |x| {
        let r2 = (x[0] - shift).powi(2) + x[1] * x[1];
        (freq * (x[0] - shift)).sin() * (-r2 / 4.0).exp()
    })
    .unwrap()
}

/// `Λ^α|u| ≤ sgn(u) Λ^α u` wherever `|u| > 1e-8`, up to `1e-6 ‖u‖∞`.
fn kato_violation(op: &SpectralOperator, u: &Field) -> f64 {
    let abs = Field::new(*u.grid(), u.values().iter().map(|v| v.abs()).collect(), 0.0).unwrap();
    let l_abs = op.apply_frac_laplacian(&abs).unwrap();
    let l_u = op.apply_frac_laplacian(u).unwrap();
    let norm = u.values().iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let mut worst = f64::NEG_INFINITY;
    for k in 0..u.values().len() {
        let v = u.values()[k];
        if v.abs() <= 1e-8 {
            continue;
        }
        let excess = l_abs.values()[k] - v.signum() * l_u.values()[k];
        worst = worst.max(excess / norm);
    }
    worst
}

#[test]
fn kato_inequality_on_fixed_fields() {
    let g1 = Grid::new(1, 512, 64.0).unwrap();
    let g2 = Grid::new(2, 256, 32.0).unwrap();
    let fields = vec![
        Field::from_fn(g1, 0.0, |x| x[0].sin() * (-x[0] * x[0] / 50.0).exp()).unwrap(),
        Field::from_fn(g1, 0.0, |x| (0.7 * x[0]).cos() * (-x[0] * x[0] / 20.0).exp() - 0.1).unwrap(),
        Field::from_fn(g1, 0.0, |x| x[0] * (-x[0] * x[0] / 8.0).exp()).unwrap(),
        gaussian_packet(g2, 0.0, 1.0),
        gaussian_packet(g2, 1.5, 0.5),
    ];
    for &alpha in &[0.5, 1.0, 1.5] {
        for (i, u) in fields.iter().enumerate() {
            let op = SpectralOperator::new(*u.grid(), alpha).unwrap();
            let v = kato_violation(&op, u);
            assert!(v <= 1e-6, "field {i}, α = {alpha}: excess {v:e}");
        }
    }
}

fn band_limited(grid: Grid, coeffs: &[(i64, i64, f64, f64)]) -> Field {
    let l = grid.length();
    Field::from_fn(grid, 0.0, |x| {
        coeffs
            .iter()
            .map(|&(a, b, c, s)| {
                let phase = 2.0 * PI * (a as f64 * x[0] + b as f64 * x[1]) / l;
                c * phase.cos() + s * phase.sin()
            })
            .sum()
    })
    .unwrap()
}

fn roll(grid: &Grid, values: &[f64], si: usize, sj: usize) -> Vec<f64> {
    let n = grid.n();
    let mut out = vec![0.0; values.len()];
    for i in 0..n {
        for j in 0..n {
            out[((i + si) % n) * n + (j + sj) % n] = values[i * n + j];
        }
    }
    out
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn commutes_with_whole_cell_translations(
        coeffs in prop::collection::vec((-7i64..8, -7i64..8, -1.0f64..1.0, -1.0f64..1.0), 1..6),
        si in 0usize..16,
        sj in 0usize..16,
        alpha in 0.1f64..2.0,
    ) {
        let grid = Grid::new(2, 16, 7.0).unwrap();
        let op = SpectralOperator::new(grid, alpha).unwrap();
        let u = band_limited(grid, &coeffs);
        let shifted = Field::new(grid, roll(&grid, u.values(), si, sj), 0.0).unwrap();
        let a = roll(&grid, op.apply_frac_laplacian(&u).unwrap().values(), si, sj);
        let b = op.apply_frac_laplacian(&shifted).unwrap();
        prop_assert!(max_abs_diff(&a, b.values()) < 1e-11);
    }

    #[test]
    fn even_fields_stay_even(
        amps in prop::collection::vec(-1.0f64..1.0, 1..8),
        alpha in 0.1f64..2.0,
    ) {
        let grid = Grid::new(1, 64, 10.0).unwrap();
        let op = SpectralOperator::new(grid, alpha).unwrap();
        let u = Field::from_fn(grid, 0.0, |x| {
            amps.iter().enumerate().map(|(m, a)| a * (2.0 * PI * m as f64 * x[0] / 10.0).cos()).sum()
        }).unwrap();
        let lu = op.apply_frac_laplacian(&u).unwrap();
        let v = lu.values();
        let n = v.len();
        // x_j and x_{N−j} are mirror images about the origin at index N/2
        for j in 1..n {
            prop_assert!((v[j] - v[n - j]).abs() < 1e-11);
        }
    }

    #[test]
    fn linear_and_annihilates_constants(
        a in prop::collection::vec(-1.0f64..1.0, 16),
        b in prop::collection::vec(-1.0f64..1.0, 16),
        c in -5.0f64..5.0,
        alpha in 0.1f64..2.0,
    ) {
        let grid = Grid::new(1, 16, 3.0).unwrap();
        let op = SpectralOperator::new(grid, alpha).unwrap();
        let fa = Field::new(grid, a.clone(), 0.0).unwrap();
        let fb = Field::new(grid, b.clone(), 0.0).unwrap();
        let sum = Field::new(grid, a.iter().zip(&b).map(|(x, y)| 2.0 * x - y + c).collect(), 0.0).unwrap();
        let la = op.apply_frac_laplacian(&fa).unwrap();
        let lb = op.apply_frac_laplacian(&fb).unwrap();
        let ls = op.apply_frac_laplacian(&sum).unwrap();
        let expected: Vec<f64> = la.values().iter().zip(lb.values()).map(|(x, y)| 2.0 * x - y).collect();
        prop_assert!(max_abs_diff(ls.values(), &expected) < 1e-11);
    }

    #[test]
    fn multiplier_is_nonnegative_and_even(alpha in 0.01f64..2.0, n_exp in 3u32..7, dim in 1usize..3) {
        let grid = Grid::new(dim, 1 << n_exp, 4.0).unwrap();
        let op = SpectralOperator::new(grid, alpha).unwrap();
        let m = op.frac_multiplier();
        prop_assert_eq!(m[0], 0.0);
        prop_assert!(m.iter().all(|&v| v >= 0.0));
        let n = grid.n();
        let neg = |j: usize| (n - j) % n;
        for flat in 0..grid.len() {
            let mirror = if dim == 1 {
                neg(flat)
            } else {
                let (i, j) = (flat / n, flat % n);
                neg(i) * n + neg(j)
            };
            prop_assert_eq!(m[flat], m[mirror]);
        }
    }

    #[test]
    fn parseval_holds_for_random_fields(values in prop::collection::vec(-10.0f64..10.0, 64)) {
        let grid = Grid::new(2, 8, 1.0).unwrap();
        let op = SpectralOperator::new(grid, 1.0).unwrap();
        let spec = op.forward(&values);
        let lhs: f64 = spec.iter().map(|c| c.norm_sqr()).sum();
        let rhs: f64 = values.iter().map(|v| v * v).sum::<f64>() * 64.0;
        prop_assert!((lhs - rhs).abs() <= 1e-12 * rhs.max(1.0));
    }
}
