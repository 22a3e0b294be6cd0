//! Hermitian weights `Φ = Σ_α |σ_α|² + Φ_def` and their curvature.
//!
//! The holomorphic parts `σ_α` are polynomials and the deformation `Φ_def` is drawn
//! from a small closed-form family, so every derivative used downstream is exact.
//! Frames are taken in the global coordinates of the model space: `r₀` is the
//! geodesic radius of the chart ball and `μ` a lower bound for `d_ω / |·|_coord` on it.

mod polynomial;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

pub use polynomial::{Monomial, Polynomial};

use crate::error::{Error, Result};
use crate::geometry::{complex_hessian_fd, complex_hessian_from_real, real_hessian_richardson, ModelSpace, Point};
use crate::pointset::PointSet;

/// Closed-form deformation weights.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum Deformation {
    Zero,
    /// `½ xᵀ A x + bᵀ x` in real coordinates `(x₁, y₁, …)`.
    Quadratic {
        hessian: Vec<Vec<f64>>,
        gradient: Vec<f64>,
    },
    /// `amplitude · cos(w · x)`.
    Cosine {
        amplitude: f64,
        wave: Vec<f64>,
    },
    /// `−A log(1 − s) − A s` with `s = |z|²/κ²`: the Bergman weight minus its quadratic part.
    BergmanRemainder {
        #[serde(rename = "A")]
        a: f64,
        kappa: f64,
    },
}

impl Deformation {
    fn check_dims(&self, n: usize) -> Result<()> {
        let d = 2 * n;
        let ok = match self {
            Deformation::Quadratic { hessian, gradient } => {
                hessian.len() == d
                    && hessian.iter().all(|r| r.len() == d)
                    && gradient.len() == d
                    && (0..d).all(|i| (0..d).all(|j| hessian[i][j] == hessian[j][i]))
            }
            Deformation::Cosine { wave, .. } => wave.len() == d,
            Deformation::BergmanRemainder { a, kappa } => *a >= 0.0 && *kappa > 0.0,
            Deformation::Zero => true,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidInput(format!(
                "deformation weight does not fit real dimension {d} (or is not symmetric)"
            )))
        }
    }

    pub fn value(&self, z: &Point) -> Result<f64> {
        let x = z.to_real();
        Ok(match self {
            Deformation::Zero => 0.0,
            Deformation::Quadratic { hessian, gradient } => {
                let mut v = 0.0;
                for (i, row) in hessian.iter().enumerate() {
                    v += 0.5 * x[i] * row.iter().zip(&x).map(|(a, b)| a * b).sum::<f64>();
                    v += gradient[i] * x[i];
                }
                v
            }
            Deformation::Cosine { amplitude, wave } => amplitude * dot(wave, &x).cos(),
            Deformation::BergmanRemainder { a, kappa } => {
                let s = bergman_s(z, *kappa)?;
                a * (-(-s).ln_1p() - s)
            }
        })
    }

    /// Real gradient in `(x₁, y₁, …)` ordering.
    pub fn gradient(&self, z: &Point) -> Result<Vec<f64>> {
        let x = z.to_real();
        Ok(match self {
            Deformation::Zero => vec![0.0; x.len()],
            Deformation::Quadratic { hessian, gradient } => {
                hessian.iter().zip(gradient).map(|(row, b)| dot(row, &x) + b).collect()
            }
            Deformation::Cosine { amplitude, wave } => {
                let s = -amplitude * dot(wave, &x).sin();
                wave.iter().map(|w| s * w).collect()
            }
            Deformation::BergmanRemainder { a, kappa } => {
                let s = bergman_s(z, *kappa)?;
                let f1 = s / (1.0 - s);
                x.iter().map(|xi| a * f1 * 2.0 * xi / (kappa * kappa)).collect()
            }
        })
    }

    /// `∂Φ_def/∂z_k = ½(∂/∂x_k − i ∂/∂y_k) Φ_def`.
    pub fn dz(&self, z: &Point) -> Result<Vec<Complex64>> {
        let g = self.gradient(z)?;
        Ok(g.chunks(2).map(|c| Complex64::new(0.5 * c[0], -0.5 * c[1])).collect())
    }

    pub fn real_hessian(&self, z: &Point) -> Result<DMatrix<f64>> {
        let x = z.to_real();
        let d = x.len();
        Ok(match self {
            Deformation::Zero => DMatrix::zeros(d, d),
            Deformation::Quadratic { hessian, .. } => DMatrix::from_fn(d, d, |i, j| hessian[i][j]),
            Deformation::Cosine { amplitude, wave } => {
                let c = -amplitude * dot(wave, &x).cos();
                DMatrix::from_fn(d, d, |i, j| c * wave[i] * wave[j])
            }
            Deformation::BergmanRemainder { a, kappa } => {
                let s = bergman_s(z, *kappa)?;
                let (k2, f1, f2) = (kappa * kappa, s / (1.0 - s), 1.0 / ((1.0 - s) * (1.0 - s)));
                DMatrix::from_fn(d, d, |i, j| {
                    let delta = if i == j { 1.0 } else { 0.0 };
                    a * (f2 * 4.0 * x[i] * x[j] / (k2 * k2) + f1 * 2.0 * delta / k2)
                })
            }
        })
    }

    pub fn complex_hessian(&self, z: &Point) -> Result<DMatrix<Complex64>> {
        Ok(complex_hessian_from_real(&self.real_hessian(z)?))
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn bergman_s(z: &Point, kappa: f64) -> Result<f64> {
    let s = z.norm_sqr() / (kappa * kappa);
    if s >= 1.0 {
        return Err(Error::Domain(format!("|z| = {} is outside the disk of radius {kappa}", z.norm())));
    }
    Ok(s)
}

/// Euclidean radius (as a fraction of κ) up to which the default Bergman `M₂` is valid.
pub const BERGMAN_M2_RADIUS: f64 = 0.9;

/// Largest real second derivative of the Bergman remainder on `|z| ≤ t·κ`.
pub fn bergman_remainder_m2(a: f64, kappa: f64, t: f64) -> f64 {
    let s = t * t;
    2.0 * a / (kappa * kappa) * (3.0 * s / (1.0 - s) + 2.0 * s * s / ((1.0 - s) * (1.0 - s)))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "builtin", rename_all = "snake_case")]
pub enum Builtin {
    /// `Φ = α|z|²`.
    Fock { alpha: f64 },
    /// `Φ = −A log(1 − |z|²/κ²)`.
    Bergman {
        #[serde(rename = "A")]
        a: f64,
        kappa: f64,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct HermitianWeight {
    builtin: Option<Builtin>,
    n: usize,
    sigmas: Vec<Polynomial>,
    deformation: Deformation,
    m2: f64,
    frame_radius: Option<f64>,
    mu: f64,
    lambda: Option<f64>,
}

impl HermitianWeight {
    /// Fock weight `α|z|²` on ℂⁿ: `σ_j = √α z_j`, no deformation.
    pub fn fock(n: usize, alpha: f64) -> Result<Self> {
        if !(alpha > 0.0) || n == 0 {
            return Err(Error::InvalidInput(format!("Fock weight needs alpha > 0 and n > 0, got alpha = {alpha}")));
        }
        let r = alpha.sqrt();
        Ok(HermitianWeight {
            builtin: Some(Builtin::Fock { alpha }),
            n,
            sigmas: (0..n).map(|j| Polynomial::linear(n, j, Complex64::new(r, 0.0))).collect(),
            deformation: Deformation::Zero,
            m2: 0.0,
            frame_radius: None,
            mu: 1.0,
            lambda: Some(1.0),
        })
    }

    /// Bergman weight `−A log(1 − |z|²/κ²)`: `σ_j = √A z_j/κ` plus the remainder.
    ///
    /// `M₂` defaults to its value on `|z| ≤ 0.9κ`; `μ = 2` because the ball metric
    /// dominates twice the coordinate metric.
    pub fn bergman(n: usize, a: f64, kappa: f64) -> Result<Self> {
        if !(a > 0.0) || !(kappa > 0.0) || n == 0 {
            return Err(Error::InvalidInput(format!(
                "Bergman weight needs A > 0, kappa > 0, got A = {a}, kappa = {kappa}"
            )));
        }
        let r = a.sqrt() / kappa;
        Ok(HermitianWeight {
            builtin: Some(Builtin::Bergman { a, kappa }),
            n,
            sigmas: (0..n).map(|j| Polynomial::linear(n, j, Complex64::new(r, 0.0))).collect(),
            deformation: Deformation::BergmanRemainder { a, kappa },
            m2: bergman_remainder_m2(a, kappa, BERGMAN_M2_RADIUS),
            frame_radius: None,
            mu: 2.0,
            lambda: None,
        })
    }

    pub fn custom(
        n: usize,
        sigmas: Vec<Polynomial>,
        deformation: Deformation,
        m2: f64,
        frame_radius: Option<f64>,
        mu: f64,
        lambda: Option<f64>,
    ) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidInput("n must be positive".into()));
        }
        for (i, s) in sigmas.iter().enumerate() {
            if s.nvars().is_some_and(|k| k != n) || (!s.terms.is_empty() && s.nvars().is_none()) {
                return Err(Error::InvalidInput(format!("sigma {i} is not a polynomial in {n} variables")));
            }
        }
        deformation.check_dims(n)?;
        if !(m2 >= 0.0) || !m2.is_finite() {
            return Err(Error::InvalidInput(format!("M2 must be finite and nonnegative, got {m2}")));
        }
        if !(mu > 0.0) {
            return Err(Error::InvalidInput(format!("mu must be positive, got {mu}")));
        }
        if let Some(l) = lambda {
            if !(l >= mu) {
                return Err(Error::InvalidInput(format!("lambda = {l} must be at least mu = {mu}")));
            }
        }
        if let Some(r0) = frame_radius {
            if !(r0 > 0.0) {
                return Err(Error::InvalidInput(format!("r0 must be positive, got {r0}")));
            }
        }
        Ok(HermitianWeight { builtin: None, n, sigmas, deformation, m2, frame_radius, mu, lambda })
    }

    pub fn with_m2(mut self, m2: f64) -> Self {
        self.m2 = m2;
        self
    }

    pub fn with_frame_radius(mut self, r0: Option<f64>) -> Self {
        self.frame_radius = r0;
        self
    }

    pub fn with_mu(mut self, mu: f64) -> Self {
        self.mu = mu;
        self
    }

    pub fn builtin(&self) -> Option<Builtin> {
        self.builtin
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn sigmas(&self) -> &[Polynomial] {
        &self.sigmas
    }

    pub fn deformation(&self) -> &Deformation {
        &self.deformation
    }

    pub fn m2(&self) -> f64 {
        self.m2
    }

    pub fn frame_radius(&self) -> Option<f64> {
        self.frame_radius
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn lambda(&self) -> Option<f64> {
        self.lambda
    }

    fn check_dim(&self, z: &Point) -> Result<()> {
        if z.dim() != self.n {
            return Err(Error::Domain(format!("point has {} coordinates, weight has n = {}", z.dim(), self.n)));
        }
        Ok(())
    }

    /// `Φ(z)`, by closed form for builtins.
    pub fn value(&self, z: &Point) -> Result<f64> {
        self.check_dim(z)?;
        match self.builtin {
            Some(Builtin::Fock { alpha }) => Ok(alpha * z.norm_sqr()),
            Some(Builtin::Bergman { a, kappa }) => Ok(-a * (-bergman_s(z, kappa)?).ln_1p()),
            None => self.decomposed_value(z),
        }
    }

    /// `Σ|σ_α(z)|² + Φ_def(z)`.
    pub fn decomposed_value(&self, z: &Point) -> Result<f64> {
        self.check_dim(z)?;
        let holo: f64 = self.sigmas.iter().map(|s| s.eval(z).norm_sqr()).sum();
        Ok(holo + self.deformation.value(z)?)
    }

    /// Coefficients `H_jm = ∂²Φ/∂z_j∂z̄_m`.
    pub fn complex_hessian(&self, z: &Point) -> Result<DMatrix<Complex64>> {
        self.check_dim(z)?;
        let n = self.n;
        if let Some(Builtin::Fock { alpha }) = self.builtin {
            return Ok(DMatrix::identity(n, n) * Complex64::new(alpha, 0.0));
        }
        let grads: Vec<Vec<Complex64>> =
            self.sigmas.iter().map(|s| (0..n).map(|j| s.partial(j).eval(z)).collect()).collect();
        let holo = DMatrix::from_fn(n, n, |j, m| grads.iter().map(|g| g[j] * g[m].conj()).sum::<Complex64>());
        Ok(holo + self.deformation.complex_hessian(z)?)
    }

    /// `ΔΦ = 4 ∂²Φ/∂z∂z̄` in one variable.
    pub fn laplacian(&self, z: &Point) -> Result<f64> {
        if self.n != 1 {
            return Err(Error::InvalidInput(format!("the Laplacian criterion needs n = 1, weight has n = {}", self.n)));
        }
        Ok(4.0 * self.complex_hessian(z)?[(0, 0)].re)
    }

    /// `Σ_k ∂Φ_def/∂z_k(p)(z_k − p_k) + Σ_α conj(σ_α(p))(σ_α(z) − σ_α(p))`.
    pub fn normal_frame_exponent(&self, p: &Point, z: &Point) -> Result<Complex64> {
        self.check_dim(p)?;
        self.check_dim(z)?;
        let dz = self.deformation.dz(p)?;
        let linear: Complex64 = dz.iter().zip(z.0.iter().zip(&p.0)).map(|(d, (a, b))| d * (a - b)).sum();
        let holo: Complex64 = self
            .sigmas
            .iter()
            .map(|s| {
                let sp = s.eval(p);
                sp.conj() * (s.eval(z) - sp)
            })
            .sum();
        Ok(linear + holo)
    }

    /// Constant `exp(½ M₂ (2n)² δ₀² / μ²)` bounding `‖f_p‖²_h / ‖a(p)‖²_h` on `B(p, δ₀)`.
    pub fn frame_constant(&self, delta0: f64) -> f64 {
        let two_n = 2.0 * self.n as f64;
        (0.5 * self.m2 * two_n * two_n * delta0 * delta0 / (self.mu * self.mu)).exp()
    }

    /// `‖a‖²_h = |a|² e^{−Φ(p)}`.
    pub fn pointwise_norm_sqr(&self, a: Complex64, p: &Point) -> Result<f64> {
        Ok(a.norm_sqr() * (-self.value(p)?).exp())
    }
}

/// Smallest eigenvalue of `i∂∂̄Φ + ricci(ω)` relative to ω, from closed forms.
pub fn curvature_eigen_min(w: &HermitianWeight, space: &ModelSpace, z: &Point) -> Result<f64> {
    space.check_point(z)?;
    let form = w.complex_hessian(z)? + space.ricci_form(z);
    Ok(space.relative_eigenvalues(z, &form)[0])
}

/// Finite-difference counterpart of [`curvature_eigen_min`]: one complex Hessian of
/// `Φ − log det g`.
pub fn curvature_eigen_min_fd(w: &HermitianWeight, space: &ModelSpace, z: &Point, step: Option<f64>) -> Result<f64> {
    space.check_point(z)?;
    let n = space.n() as f64;
    let potential = |x: &Point| -> Result<f64> {
        space.check_point(x)?;
        Ok(w.value(x)? - n * space.conformal_factor(x).ln())
    };
    let form = complex_hessian_fd(potential, z, step)?;
    Ok(space.relative_eigenvalues(z, &form)[0])
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameCheckReport {
    pub constant: f64,
    pub worst_ratio: f64,
    pub worst_index: Option<usize>,
    pub violations: Vec<usize>,
    pub passed: bool,
}

/// Checks `‖f_p(z)‖²_h ≤ C ‖a(p)‖²_h` at samples in `B(p, δ₀)`; a failure means the
/// declared `M₂` or `μ` does not describe the weight.
pub fn frame_norm_bound_check(
    w: &HermitianWeight,
    space: &ModelSpace,
    p: &Point,
    delta0: f64,
    samples: &[Point],
) -> Result<FrameCheckReport> {
    space.check_point(p)?;
    let constant = w.frame_constant(delta0);
    let phi_p = w.value(p)?;
    let mut worst_ratio = f64::NEG_INFINITY;
    let mut worst_index = None;
    let mut violations = Vec::new();
    for (i, z) in samples.iter().enumerate() {
        let d = space.distance(p, z)?;
        if d > delta0 * (1.0 + 1e-12) {
            return Err(Error::Domain(format!("sample {i} lies at distance {d} > delta0 = {delta0}")));
        }
        let e = w.normal_frame_exponent(p, z)?;
        let ratio = (2.0 * e.re - w.value(z)? + phi_p).exp();
        if ratio > worst_ratio {
            worst_ratio = ratio;
            worst_index = Some(i);
        }
        if ratio > constant * (1.0 + 1e-12) {
            violations.push(i);
        }
    }
    Ok(FrameCheckReport { constant, worst_ratio, worst_index, passed: violations.is_empty(), violations })
}

/// Constant `C` in `‖f(x)‖²_h ≤ C ∫_{B(x,R)} ‖f‖²_h dV` for holomorphic `f` on flat space:
/// `exp(Σ_α osc(σ_α)² + ½M₂(2n)²R²/μ²) / vol(B_eucl(R))`.
pub fn mean_value_constant(w: &HermitianWeight, space: &ModelSpace, x: &Point, radius: f64) -> Result<f64> {
    if space.kappa().is_some() {
        return Err(Error::UnsupportedSpace { op: "mean_value_constant", space: "hyperbolic" });
    }
    space.check_point(x)?;
    if !(radius > 0.0) {
        return Err(Error::Domain(format!("radius must be positive, got {radius}")));
    }
    let coord_radius = radius / w.mu;
    let osc: f64 = w.sigmas.iter().map(|s| s.oscillation_bound(x, coord_radius).powi(2)).sum();
    let two_n = 2.0 * w.n as f64;
    let exponent = osc + 0.5 * w.m2 * two_n * two_n * coord_radius * coord_radius;
    let n = w.n as i32;
    let factorial: f64 = (1..=w.n).map(|k| k as f64).product();
    let vol = std::f64::consts::PI.powi(n) * radius.powi(2 * n) / factorial;
    Ok(exponent.exp() / vol)
}

/// `‖a(p)‖²_h` for every node carrying a value.
pub fn data_norms_sqr(w: &HermitianWeight, set: &PointSet) -> Result<Vec<f64>> {
    let values = set.values().ok_or_else(|| Error::InvalidInput("point set carries no values".into()))?;
    set.points().iter().zip(values).map(|(p, a)| w.pointwise_norm_sqr(*a, p)).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct M2Check {
    pub declared: f64,
    pub observed: f64,
    pub worst_point: Option<usize>,
    pub passed: bool,
}

/// Spot-checks the declared `M₂` against FD second derivatives of `Φ_def` at `samples`.
pub fn spot_check_m2(w: &HermitianWeight, samples: &[Point]) -> Result<M2Check> {
    let mut observed = 0.0f64;
    let mut worst_point = None;
    for (i, z) in samples.iter().enumerate() {
        let h = 1e-3 * z.norm().max(1.0);
        let hess = real_hessian_richardson(&|x: &Point| w.deformation.value(x), z, h)?;
        let m = hess.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
        if m > observed {
            observed = m;
            worst_point = Some(i);
        }
    }
    Ok(M2Check { declared: w.m2, observed, worst_point, passed: observed <= w.m2 * (1.0 + 1e-6) + 1e-9 })
}

/// JSON form: `{"builtin": "fock", "alpha": 1.0}`, `{"builtin": "bergman", "A": 2.0}`
/// or `{"sigmas": [...], "phi_def": {...}, "M2": ..., "r0": ..., "mu": ...}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum WeightSpec {
    Builtin(BuiltinSpec),
    Custom(CustomSpec),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "builtin", rename_all = "snake_case", deny_unknown_fields)]
pub enum BuiltinSpec {
    Fock {
        alpha: f64,
    },
    Bergman {
        #[serde(rename = "A")]
        a: f64,
        #[serde(default)]
        kappa: Option<f64>,
        #[serde(default, rename = "M2")]
        m2: Option<f64>,
        #[serde(default)]
        r0: Option<f64>,
        #[serde(default)]
        mu: Option<f64>,
    },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CustomSpec {
    #[serde(default)]
    pub sigmas: Vec<Polynomial>,
    #[serde(default = "zero_deformation")]
    pub phi_def: Deformation,
    #[serde(rename = "M2")]
    pub m2: f64,
    #[serde(default)]
    pub r0: Option<f64>,
    pub mu: f64,
    #[serde(default)]
    pub lambda: Option<f64>,
}

fn zero_deformation() -> Deformation {
    Deformation::Zero
}

impl WeightSpec {
    pub fn build(&self, space: &ModelSpace) -> Result<HermitianWeight> {
        let n = space.n();
        match self {
            WeightSpec::Builtin(BuiltinSpec::Fock { alpha }) => HermitianWeight::fock(n, *alpha),
            WeightSpec::Builtin(BuiltinSpec::Bergman { a, kappa, m2, r0, mu }) => {
                let kappa =
                    kappa.or(space.kappa()).ok_or_else(|| Error::InvalidInput("Bergman weight needs kappa".into()))?;
                let mut w = HermitianWeight::bergman(n, *a, kappa)?.with_frame_radius(*r0);
                if let Some(m2) = m2 {
                    w = w.with_m2(*m2);
                }
                if let Some(mu) = mu {
                    w = w.with_mu(*mu);
                }
                Ok(w)
            }
            WeightSpec::Custom(c) => {
                HermitianWeight::custom(n, c.sigmas.clone(), c.phi_def.clone(), c.m2, c.r0, c.mu, c.lambda)
            }
        }
    }
}
