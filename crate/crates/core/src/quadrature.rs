//! One-dimensional adaptive quadrature and midpoint rules in geodesic polar coordinates.

use crate::geometry::{ModelSpace, Point};

/// Adaptive Simpson with Richardson correction, to relative tolerance `rel_tol`.
pub fn adaptive_simpson<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, rel_tol: f64) -> f64 {
    let fa = f(a);
    let fb = f(b);
    let m = 0.5 * (a + b);
    let fm = f(m);
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    let tol = (rel_tol * whole.abs()).max(f64::MIN_POSITIVE);
    simpson_step(&f, a, b, fa, fm, fb, whole, tol, 48)
}

#[allow(clippy::too_many_arguments)]
fn simpson_step<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> f64 {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        return left + right + delta / 15.0;
    }
    simpson_step(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
        + simpson_step(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
}

fn sin_power_integral(k: usize) -> f64 {
    // ∫₀^π sin^k = (k−1)/k · ∫₀^π sin^{k−2}
    match k {
        0 => std::f64::consts::PI,
        1 => 2.0,
        _ => (k - 1) as f64 / k as f64 * sin_power_integral(k - 2),
    }
}

/// Tensor midpoint rule on the unit sphere `S^{d−1}` in hyperspherical angles.
///
/// `n_azimuth` nodes on the last angle, `max(1, n_azimuth/2)` on each polar angle.
pub fn sphere_midpoint_rule(d: usize, n_azimuth: usize) -> Vec<(Vec<f64>, f64)> {
    assert!(d >= 2 && n_azimuth > 0);
    let n_polar = (n_azimuth / 2).max(1);
    let polar_step = std::f64::consts::PI / n_polar as f64;
    let az_step = 2.0 * std::f64::consts::PI / n_azimuth as f64;
    let polar_angles: Vec<f64> = (0..n_polar).map(|i| (i as f64 + 0.5) * polar_step).collect();

    // Rescale the midpoint weights for sin^k so that each polar factor integrates
    // exactly; the plain midpoint rule is only O(h²) for odd k.
    let correction: Vec<f64> = (0..d.saturating_sub(1))
        .map(|k| {
            let midpoint: f64 = polar_angles.iter().map(|a| a.sin().powi(k as i32) * polar_step).sum();
            sin_power_integral(k) / midpoint
        })
        .collect();

    let mut nodes = Vec::new();
    let n_polar_dims = d - 2;
    let total = n_polar.pow(n_polar_dims as u32);
    for idx in 0..total {
        let mut rem = idx;
        let mut angles = Vec::with_capacity(n_polar_dims);
        for _ in 0..n_polar_dims {
            angles.push(polar_angles[rem % n_polar]);
            rem /= n_polar;
        }
        let mut weight = 1.0;
        for (i, a) in angles.iter().enumerate() {
            let k = d - 2 - i;
            weight *= a.sin().powi(k as i32) * polar_step * correction[k];
        }
        for k in 0..n_azimuth {
            let phi = (k as f64 + 0.5) * az_step;
            let mut u = Vec::with_capacity(d);
            let mut sin_prod = 1.0;
            for a in &angles {
                u.push(sin_prod * a.cos());
                sin_prod *= a.sin();
            }
            u.push(sin_prod * phi.cos());
            u.push(sin_prod * phi.sin());
            nodes.push((u, weight * az_step));
        }
    }
    nodes
}

/// Midpoint rule for `∫ f dV_ω` over the geodesic annulus `r_lo ≤ d(center, ·) ≤ r_hi`.
pub fn polar_annulus_rule(
    space: &ModelSpace,
    center: &Point,
    r_lo: f64,
    r_hi: f64,
    n_radial: usize,
    n_angular: usize,
) -> Vec<(Point, f64)> {
    let dr = (r_hi - r_lo) / n_radial as f64;
    let sphere = sphere_midpoint_rule(2 * space.n(), n_angular);
    let mut nodes = Vec::with_capacity(n_radial * sphere.len());
    for i in 0..n_radial {
        let r = r_lo + (i as f64 + 0.5) * dr;
        let jac = space.polar_jacobian(r) * dr;
        for (u, w) in &sphere {
            nodes.push((space.geodesic_point(center, r, u), jac * w));
        }
    }
    nodes
}
