//! Model Kähler spaces: flat ℂⁿ and the hyperbolic ball of radius κ.
//!
//! Conventions used throughout the crate:
//!
//! * The Kähler form of a conformal metric `g(z)|dz|²` is `ω = (i/2) g Σ dz_j∧dz̄_j`,
//!   so on flat space `i∂∂̄|z|² = 2ω`.
//! * A real (1,1)-form `i Σ H_jm dz_j∧dz̄_m` is compared against ω through the
//!   eigenvalues of `2H / g` ("relative eigenvalues").
//! * The hyperbolic ball carries `4|dz|² / (1 − |z|²/κ²)²`, of constant sectional
//!   curvature `−1/κ²`.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::hermitian_eigenvalues;
use crate::quadrature::adaptive_simpson;

/// A point of ℂⁿ given by its complex coordinates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Point(pub Vec<Complex64>);

impl Point {
    pub fn new(coords: Vec<Complex64>) -> Self {
        Point(coords)
    }

    pub fn origin(n: usize) -> Self {
        Point(vec![Complex64::new(0.0, 0.0); n])
    }

    /// One-dimensional point `re + i·im`.
    pub fn c1(re: f64, im: f64) -> Self {
        Point(vec![Complex64::new(re, im)])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn coords(&self) -> &[Complex64] {
        &self.0
    }

    pub fn norm_sqr(&self) -> f64 {
        self.0.iter().map(|c| c.norm_sqr()).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    /// Real coordinates ordered `(x₁, y₁, x₂, y₂, …)`.
    pub fn to_real(&self) -> Vec<f64> {
        self.0.iter().flat_map(|c| [c.re, c.im]).collect()
    }

    pub fn from_real(x: &[f64]) -> Self {
        assert!(x.len().is_multiple_of(2), "real coordinate vector must have even length");
        Point(x.chunks(2).map(|c| Complex64::new(c[0], c[1])).collect())
    }

    pub fn dist_sqr_eucl(&self, other: &Point) -> f64 {
        self.0.iter().zip(&other.0).map(|(a, b)| (a - b).norm_sqr()).sum()
    }

    pub fn scale(&self, t: f64) -> Point {
        Point(self.0.iter().map(|c| c * t).collect())
    }

    pub fn add(&self, other: &Point) -> Point {
        Point(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpaceKind {
    Flat,
    HyperbolicBall,
}

/// Serialized form of a [`ModelSpace`]; validated on conversion.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpaceSpec {
    pub kind: SpaceKind,
    pub n: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kappa: Option<f64>,
}

/// A simply connected model space with curvature pinched in `[−k², −1/κ²]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SpaceSpec", into = "SpaceSpec")]
pub struct ModelSpace {
    kind: SpaceKind,
    n: usize,
    k: f64,
    kappa: Option<f64>,
}

impl TryFrom<SpaceSpec> for ModelSpace {
    type Error = Error;

    fn try_from(spec: SpaceSpec) -> Result<Self> {
        match spec.kind {
            SpaceKind::Flat => {
                if spec.kappa.is_some() {
                    return Err(Error::InvalidInput("flat space takes no kappa".into()));
                }
                if let Some(k) = spec.k {
                    if k != 0.0 {
                        return Err(Error::InvalidInput(format!("flat space requires k = 0, got {k}")));
                    }
                }
                ModelSpace::flat(spec.n)
            }
            SpaceKind::HyperbolicBall => {
                let kappa = spec.kappa.ok_or_else(|| Error::InvalidInput("hyperbolic ball requires kappa".into()))?;
                ModelSpace::hyperbolic_with_k(spec.n, kappa, spec.k.unwrap_or(1.0 / kappa))
            }
        }
    }
}

impl From<ModelSpace> for SpaceSpec {
    fn from(s: ModelSpace) -> Self {
        SpaceSpec {
            kind: s.kind,
            n: s.n,
            k: match s.kind {
                SpaceKind::Flat => None,
                SpaceKind::HyperbolicBall => Some(s.k),
            },
            kappa: s.kappa,
        }
    }
}

impl ModelSpace {
    pub fn flat(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidInput("complex dimension must be positive".into()));
        }
        Ok(ModelSpace { kind: SpaceKind::Flat, n, k: 0.0, kappa: None })
    }

    /// Hyperbolic ball with the sharp lower bound `k = 1/κ`.
    pub fn hyperbolic(n: usize, kappa: f64) -> Result<Self> {
        Self::hyperbolic_with_k(n, kappa, 1.0 / kappa)
    }

    pub fn hyperbolic_with_k(n: usize, kappa: f64, k: f64) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidInput("complex dimension must be positive".into()));
        }
        if !(kappa > 0.0 && kappa.is_finite()) {
            return Err(Error::InvalidInput(format!("kappa must be positive, got {kappa}")));
        }
        // the lower bound −k² must sit below the upper bound −1/κ²
        if !(k.is_finite() && k * kappa >= 1.0 - 1e-12) {
            return Err(Error::InvalidInput(format!("need k >= 1/kappa, got k = {k}, kappa = {kappa}")));
        }
        Ok(ModelSpace { kind: SpaceKind::HyperbolicBall, n, k, kappa: Some(kappa) })
    }

    pub fn kind(&self) -> SpaceKind {
        self.kind
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> f64 {
        self.k
    }

    pub fn kappa(&self) -> Option<f64> {
        self.kappa
    }

    pub fn kind_name(&self) -> &'static str {
        match self.kind {
            SpaceKind::Flat => "flat",
            SpaceKind::HyperbolicBall => "hyperbolic_ball",
        }
    }

    pub fn check_point(&self, z: &Point) -> Result<()> {
        if z.dim() != self.n {
            return Err(Error::Domain(format!("point has {} coordinates, space has n = {}", z.dim(), self.n)));
        }
        if z.0.iter().any(|c| !c.re.is_finite() || !c.im.is_finite()) {
            return Err(Error::Domain("point has non-finite coordinates".into()));
        }
        if let Some(kappa) = self.kappa {
            if z.norm() >= kappa {
                return Err(Error::Domain(format!("|z| = {} lies outside the ball of radius {kappa}", z.norm())));
            }
        }
        Ok(())
    }

    pub fn contains(&self, z: &Point) -> bool {
        self.check_point(z).is_ok()
    }

    /// Geodesic distance.
    pub fn distance(&self, x: &Point, y: &Point) -> Result<f64> {
        self.check_point(x)?;
        self.check_point(y)?;
        Ok(self.distance_unchecked(x, y))
    }

    pub(crate) fn distance_unchecked(&self, x: &Point, y: &Point) -> f64 {
        let diff2 = x.dist_sqr_eucl(y);
        match self.kappa {
            None => diff2.sqrt(),
            Some(kappa) => {
                let k2 = kappa * kappa;
                let (rx, ry) = (x.norm(), y.norm());
                let den = (kappa - rx) * (kappa + rx) * (kappa - ry) * (kappa + ry);
                // cosh(d/κ) = 1 + δ and acosh(1 + δ) = 2 asinh(√(δ/2))
                let delta = 2.0 * diff2 * k2 / den;
                2.0 * kappa * (0.5 * delta).sqrt().asinh()
            }
        }
    }

    /// Conformal factor `g(z)` of the metric `g(z)|dz|²`.
    pub fn conformal_factor(&self, z: &Point) -> f64 {
        match self.kappa {
            None => 1.0,
            Some(kappa) => {
                let s = z.norm_sqr() / (kappa * kappa);
                4.0 / ((1.0 - s) * (1.0 - s))
            }
        }
    }

    /// Coefficient matrix `R` of `ricci(ω) = i Σ R_jm dz_j∧dz̄_m = −i∂∂̄ log det g`.
    pub fn ricci_form(&self, z: &Point) -> DMatrix<Complex64> {
        let n = self.n;
        match self.kappa {
            None => DMatrix::zeros(n, n),
            Some(kappa) => {
                let k2 = kappa * kappa;
                let s = z.norm_sqr() / k2;
                let scale = -2.0 * n as f64;
                DMatrix::from_fn(n, n, |j, m| {
                    let delta = if j == m { 1.0 / (k2 * (1.0 - s)) } else { 0.0 };
                    let outer = z.0[j].conj() * z.0[m] / (k2 * k2 * (1.0 - s) * (1.0 - s));
                    (Complex64::new(delta, 0.0) + outer) * scale
                })
            }
        }
    }

    /// Eigenvalues of a (1,1)-form `i Σ H_jm dz_j∧dz̄_m` relative to ω at `z`, ascending.
    pub fn relative_eigenvalues(&self, z: &Point, form: &DMatrix<Complex64>) -> Vec<f64> {
        let g = self.conformal_factor(z);
        let scaled = form * Complex64::new(2.0 / g, 0.0);
        hermitian_eigenvalues(&scaled)
    }

    /// Point at geodesic distance `r` from `p` in the unit direction `u`
    /// (real coordinates, Euclidean unit vector in the tangent space at `p`).
    pub fn geodesic_point(&self, p: &Point, r: f64, u: &[f64]) -> Point {
        let pr = p.to_real();
        match self.kappa {
            None => Point::from_real(&pr.iter().zip(u).map(|(a, b)| a + r * b).collect::<Vec<_>>()),
            Some(kappa) => {
                let t = (r / (2.0 * kappa)).tanh();
                let a: Vec<f64> = pr.iter().map(|x| x / kappa).collect();
                let b: Vec<f64> = u.iter().map(|x| x * t).collect();
                Point::from_real(&mobius_add(&a, &b).iter().map(|x| x * kappa).collect::<Vec<_>>())
            }
        }
    }

    /// Volume density in geodesic polar coordinates: `dV = J(r) dr dσ`.
    pub fn polar_jacobian(&self, r: f64) -> f64 {
        let d = 2 * self.n;
        let radial = match self.kappa {
            None => r,
            Some(kappa) => kappa * (r / kappa).sinh(),
        };
        radial.powi(d as i32 - 1)
    }
}

/// Möbius addition in the unit ball of ℝᵈ; `b ↦ a ⊕ b` is an isometry sending 0 to `a`.
fn mobius_add(a: &[f64], b: &[f64]) -> Vec<f64> {
    let ab: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let a2: f64 = a.iter().map(|x| x * x).sum();
    let b2: f64 = b.iter().map(|x| x * x).sum();
    let den = 1.0 + 2.0 * ab + a2 * b2;
    let ca = (1.0 + 2.0 * ab + b2) / den;
    let cb = (1.0 - a2) / den;
    a.iter().zip(b).map(|(x, y)| ca * x + cb * y).collect()
}

/// `1 + kρ coth(kρ)`, with the limit value 2 at `kρ = 0`.
pub fn hessian_comparison_factor(k: f64, rho: f64) -> Result<f64> {
    if !(rho > 0.0) || !rho.is_finite() {
        return Err(Error::Domain(format!("rho must be positive, got {rho}")));
    }
    if !(k >= 0.0) || !k.is_finite() {
        return Err(Error::Domain(format!("k must be nonnegative, got {k}")));
    }
    let x = k * rho;
    Ok(1.0 + x_coth_x(x))
}

fn x_coth_x(x: f64) -> f64 {
    if x < 1e-4 {
        let x2 = x * x;
        1.0 + x2 / 3.0 - x2 * x2 / 45.0
    } else {
        x / x.tanh()
    }
}

/// Surface area of the unit sphere `S^{d−1}` in ℝᵈ.
pub fn unit_sphere_area(d: usize) -> f64 {
    2.0 * std::f64::consts::PI.powf(d as f64 / 2.0) / gamma_half_integer(d)
}

/// `Γ(m/2)` for a positive integer `m`.
fn gamma_half_integer(m: usize) -> f64 {
    assert!(m > 0);
    let (mut acc, mut x) = if m.is_multiple_of(2) { (1.0, 1.0) } else { (std::f64::consts::PI.sqrt(), 0.5) };
    let target = m as f64 / 2.0;
    while x < target - 0.25 {
        acc *= x;
        x += 1.0;
    }
    acc
}

/// Volume of the geodesic ball of radius ρ in the real space form of
/// curvature `−k²` and real dimension `dim`.
pub fn ball_volume_bound(k: f64, rho: f64, dim: usize) -> Result<f64> {
    if !(rho > 0.0) || !rho.is_finite() {
        return Err(Error::Domain(format!("rho must be positive, got {rho}")));
    }
    if !(k >= 0.0) || !k.is_finite() {
        return Err(Error::Domain(format!("k must be nonnegative, got {k}")));
    }
    if dim == 0 {
        return Err(Error::Domain("dimension must be positive".into()));
    }
    let area = unit_sphere_area(dim);
    if k == 0.0 {
        return Ok(area * rho.powi(dim as i32) / dim as f64);
    }
    let p = dim as i32 - 1;
    let integral = adaptive_simpson(|t| ((k * t).sinh() / k).powi(p), 0.0, rho, 1e-12);
    Ok(area * integral)
}

/// Central-difference complex Hessian `[∂²f/∂z_j∂z̄_m](z)` with one level of
/// Richardson extrapolation. `step` defaults to `1e-4·max(1, |z|)`.
pub fn complex_hessian_fd<F>(f: F, z: &Point, step: Option<f64>) -> Result<DMatrix<Complex64>>
where
    F: Fn(&Point) -> Result<f64>,
{
    let h = match step {
        Some(h) if h > 0.0 && h.is_finite() => h,
        Some(h) => return Err(Error::Domain(format!("step must be positive, got {h}"))),
        None => 1e-4 * z.norm().max(1.0),
    };
    let real = real_hessian_richardson(&f, z, h)?;
    Ok(complex_hessian_from_real(&real))
}

/// Real Hessian in `(x₁, y₁, …)` ordering by central differences at steps `h` and `h/2`,
/// combined by one Richardson level.
pub fn real_hessian_richardson<F>(f: &F, z: &Point, h: f64) -> Result<DMatrix<f64>>
where
    F: Fn(&Point) -> Result<f64>,
{
    let x = z.to_real();
    let f0 = f(z)?;
    let coarse = real_hessian_fd(f, &x, f0, h)?;
    let fine = real_hessian_fd(f, &x, f0, 0.5 * h)?;
    let d = x.len();
    Ok(DMatrix::from_fn(d, d, |i, j| (4.0 * fine[(i, j)] - coarse[(i, j)]) / 3.0))
}

fn real_hessian_fd<F>(f: &F, x: &[f64], f0: f64, h: f64) -> Result<DMatrix<f64>>
where
    F: Fn(&Point) -> Result<f64>,
{
    let d = x.len();
    let eval = |shifts: &[(usize, f64)]| -> Result<f64> {
        let mut y = x.to_vec();
        for &(i, s) in shifts {
            y[i] += s;
        }
        f(&Point::from_real(&y))
    };
    let mut hess = DMatrix::zeros(d, d);
    for i in 0..d {
        let fp = eval(&[(i, h)])?;
        let fm = eval(&[(i, -h)])?;
        hess[(i, i)] = (fp - 2.0 * f0 + fm) / (h * h);
        for j in 0..i {
            let fpp = eval(&[(i, h), (j, h)])?;
            let fpm = eval(&[(i, h), (j, -h)])?;
            let fmp = eval(&[(i, -h), (j, h)])?;
            let fmm = eval(&[(i, -h), (j, -h)])?;
            let v = (fpp - fpm - fmp + fmm) / (4.0 * h * h);
            hess[(i, j)] = v;
            hess[(j, i)] = v;
        }
    }
    Ok(hess)
}

/// Complex Hessian from the real Hessian in `(x₁, y₁, …)` ordering:
/// `∂_j∂̄_m = ¼[(∂x_j∂x_m + ∂y_j∂y_m) + i(∂x_j∂y_m − ∂y_j∂x_m)]`, then Hermitian-symmetrized.
pub fn complex_hessian_from_real(real: &DMatrix<f64>) -> DMatrix<Complex64> {
    let n = real.nrows() / 2;
    let raw = DMatrix::from_fn(n, n, |j, m| {
        let (xj, yj, xm, ym) = (2 * j, 2 * j + 1, 2 * m, 2 * m + 1);
        Complex64::new(0.25 * (real[(xj, xm)] + real[(yj, ym)]), 0.25 * (real[(xj, ym)] - real[(yj, xm)]))
    });
    (&raw + raw.adjoint()) * Complex64::new(0.5, 0.0)
}

/// Central-difference `∂u/∂z̄_j` of a complex-valued function, one entry per coordinate.
pub fn dbar_fd<F>(u: F, z: &Point, step: f64) -> Result<Vec<Complex64>>
where
    F: Fn(&Point) -> Result<Complex64>,
{
    let x = z.to_real();
    let shifted = |i: usize, s: f64| -> Result<Complex64> {
        let mut y = x.clone();
        y[i] += s;
        u(&Point::from_real(&y))
    };
    (0..z.dim())
        .map(|j| {
            let dx = (shifted(2 * j, step)? - shifted(2 * j, -step)?) / (2.0 * step);
            let dy = (shifted(2 * j + 1, step)? - shifted(2 * j + 1, -step)?) / (2.0 * step);
            Ok((dx + Complex64::i() * dy) * 0.5)
        })
        .collect()
}

/// Smallest eigenvalue of `ricci(ω)` relative to ω.
pub fn ricci_eigen(space: &ModelSpace, z: &Point) -> Result<f64> {
    space.check_point(z)?;
    let eigs = space.relative_eigenvalues(z, &space.ricci_form(z));
    Ok(eigs[0])
}
