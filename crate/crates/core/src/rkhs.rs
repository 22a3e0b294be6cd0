//! Reproducing-kernel interpolation in Fock and weighted Bergman spaces, and Riesz
//! bounds of normalized kernel families.
//!
//! All kernel products are formed in log space, so nodes far from the origin (where
//! `K(p, p)` overflows) are handled through the normalized Gram matrix only.

use std::fmt::Write as _;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::certificates::sci;
use crate::error::{Error, Result};
use crate::geometry::Point;
use crate::linalg::hermitian_eigenvalues;
use crate::pointset::PointSet;

/// Default cap on the number of nodes in a Gram matrix.
pub const GRAM_SIZE_GUARD: usize = 2000;

/// Smallest normalized Gram eigenvalue accepted by the interpolation solver.
pub const CONDITIONING_GUARD: f64 = 1e-10;

/// `Fock`: `K(z, w) = exp(α z·w̄)` for the weight `e^{−α|z|²}` on ℂⁿ.
/// `Bergman`: `K(z, w) = (1 − z w̄/κ²)^{−A}` on the κ-disk.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kernel", rename_all = "snake_case", deny_unknown_fields)]
pub enum KernelSpace {
    Fock {
        alpha: f64,
        n: usize,
    },
    Bergman {
        #[serde(rename = "A")]
        a: f64,
        kappa: f64,
    },
}

impl KernelSpace {
    pub fn fock(n: usize, alpha: f64) -> Result<Self> {
        let k = KernelSpace::Fock { alpha, n };
        k.validate()?;
        Ok(k)
    }

    pub fn bergman(a: f64, kappa: f64) -> Result<Self> {
        let k = KernelSpace::Bergman { a, kappa };
        k.validate()?;
        Ok(k)
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            KernelSpace::Fock { alpha, n } if alpha > 0.0 && alpha.is_finite() && n > 0 => Ok(()),
            KernelSpace::Bergman { a, kappa } if a > 0.0 && kappa > 0.0 && a.is_finite() && kappa.is_finite() => Ok(()),
            _ => Err(Error::InvalidInput(format!("invalid kernel space {self:?}"))),
        }
    }

    pub fn n(&self) -> usize {
        match *self {
            KernelSpace::Fock { n, .. } => n,
            KernelSpace::Bergman { .. } => 1,
        }
    }

    pub fn check_point(&self, z: &Point) -> Result<()> {
        if z.dim() != self.n() {
            return Err(Error::Domain(format!("point has {} coordinates, kernel space has n = {}", z.dim(), self.n())));
        }
        if z.0.iter().any(|c| !c.re.is_finite() || !c.im.is_finite()) {
            return Err(Error::Domain("point has non-finite coordinates".into()));
        }
        if let KernelSpace::Bergman { kappa, .. } = *self {
            if !(z.norm() < kappa) {
                return Err(Error::Domain(format!("|z| = {} is outside the disk of radius {kappa}", z.norm())));
            }
        }
        Ok(())
    }

    /// `log K(z, w)` (principal branch).
    pub fn log_kernel(&self, z: &Point, w: &Point) -> Complex64 {
        let zw: Complex64 = z.0.iter().zip(&w.0).map(|(a, b)| a * b.conj()).sum();
        match *self {
            KernelSpace::Fock { alpha, .. } => zw * alpha,
            KernelSpace::Bergman { a, kappa } => -(Complex64::new(1.0, 0.0) - zw / (kappa * kappa)).ln() * a,
        }
    }

    pub fn kernel(&self, z: &Point, w: &Point) -> Complex64 {
        self.log_kernel(z, w).exp()
    }

    /// `log K(z, z)`, real.
    pub fn log_diagonal(&self, z: &Point) -> f64 {
        self.log_kernel(z, z).re
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GramDiagnostic {
    #[serde(skip)]
    pub gram: DMatrix<Complex64>,
    pub size: usize,
    pub eig_min: f64,
    pub eig_max: f64,
    /// `eig_max / eig_min`, `+∞` when `eig_min ≤ 0`.
    pub condition: f64,
}

fn normalized_gram(space: &KernelSpace, points: &[Point]) -> DMatrix<Complex64> {
    let m = points.len();
    let diag: Vec<f64> = points.iter().map(|p| space.log_diagonal(p)).collect();
    let rows: Vec<Vec<Complex64>> = (0..m)
        .into_par_iter()
        .map(|i| {
            (0..m)
                .map(|j| {
                    if i == j {
                        Complex64::new(1.0, 0.0)
                    } else {
                        (space.log_kernel(&points[i], &points[j]) - 0.5 * (diag[i] + diag[j])).exp()
                    }
                })
                .collect()
        })
        .collect();
    DMatrix::from_fn(m, m, |i, j| rows[i][j])
}

pub fn gram_matrix(space: &KernelSpace, set: &PointSet) -> Result<GramDiagnostic> {
    gram_matrix_with_guard(space, set, GRAM_SIZE_GUARD)
}

/// Normalized Gram matrix `G_ij = K(p_i, p_j)/√(K(p_i, p_i) K(p_j, p_j))` and its extreme eigenvalues.
pub fn gram_matrix_with_guard(space: &KernelSpace, set: &PointSet, guard: usize) -> Result<GramDiagnostic> {
    space.validate()?;
    if set.len() > guard {
        return Err(Error::SizeGuard { size: set.len(), limit: guard });
    }
    if set.is_empty() {
        return Err(Error::InvalidInput("Gram matrix of an empty node set".into()));
    }
    set.points().iter().try_for_each(|p| space.check_point(p))?;
    let gram = normalized_gram(space, set.points());
    let eigs = hermitian_eigenvalues(&gram);
    let (eig_min, eig_max) = (eigs[0], eigs[eigs.len() - 1]);
    let condition = if eig_min > 0.0 { eig_max / eig_min } else { f64::INFINITY };
    Ok(GramDiagnostic { size: set.len(), gram, eig_min, eig_max, condition })
}

/// `f = Σ_j c_j K(·, p_j)` with `f(p_i) = a_i`, stored through the scaled coefficients
/// `b_j = c_j √K(p_j, p_j) e^σ`. The common factor `e^σ` keeps `b` representable when
/// every node is far out; σ is the smallest `½ log K(p, p)` over nodes with nonzero data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Interpolant {
    pub space: KernelSpace,
    pub points: Vec<Point>,
    pub scaled_coefficients: Vec<Complex64>,
    pub log_scale: f64,
    /// `‖f‖² = c* K c = e^{−2σ} b* G b`.
    pub norm_sqr: f64,
    /// `max_i |f(p_i) − a_i| / max_i |a_i|`; NaN if some `f(p_i)` is not representable.
    pub relative_residual: f64,
    /// The same ratio with every node value measured in the pointwise norm
    /// `|a| / √K(p, p)`, i.e. the residual of the normalized system `G b = e^σ D⁻¹ a`.
    /// Raw values at far nodes can hide cancellations of size `e^{Re(p·q̄)}`; this
    /// version does not.
    pub weighted_residual: f64,
    pub eig_min: f64,
}

/// `Σ_j b_j exp(log K(z, p_j) − ½ log K(p_j, p_j) − σ)`; zero coefficients are skipped
/// so that an underflowed `b_j` never meets an overflowed kernel value.
fn evaluate_scaled(space: &KernelSpace, points: &[Point], b: &[Complex64], sigma: f64, z: &Point) -> Complex64 {
    points
        .iter()
        .zip(b)
        .filter(|(_, b)| **b != Complex64::new(0.0, 0.0))
        .map(|(p, b)| b * (space.log_kernel(z, p) - 0.5 * space.log_diagonal(p) - sigma).exp())
        .sum()
}

impl Interpolant {
    pub fn evaluate(&self, z: &Point) -> Result<Complex64> {
        self.space.check_point(z)?;
        Ok(evaluate_scaled(&self.space, &self.points, &self.scaled_coefficients, self.log_scale, z))
    }

    /// `c_j = b_j e^{−σ} / √K(p_j, p_j)` (may underflow for far nodes).
    pub fn coefficients(&self) -> Vec<Complex64> {
        self.points
            .iter()
            .zip(&self.scaled_coefficients)
            .map(|(p, b)| b * (-0.5 * self.space.log_diagonal(p) - self.log_scale).exp())
            .collect()
    }

    /// `‖Σ b_j e^{−σ} k̂_j‖²` for a scaled coefficient vector `b` and normalized Gram `G`.
    pub fn norm_sqr_of(&self, gram: &DMatrix<Complex64>, b: &[Complex64]) -> f64 {
        quadratic_form(gram, b) * (-2.0 * self.log_scale).exp()
    }
}

fn quadratic_form(gram: &DMatrix<Complex64>, b: &[Complex64]) -> f64 {
    let v = DVector::from_column_slice(b);
    (v.adjoint() * gram * &v)[(0, 0)].re
}

/// Largest modulus, or NaN as soon as one entry is not finite.
fn max_norm<'a>(v: impl IntoIterator<Item = &'a Complex64>) -> f64 {
    let mut worst = 0.0f64;
    for x in v {
        let m = x.norm();
        if !m.is_finite() {
            return f64::NAN;
        }
        worst = worst.max(m);
    }
    worst
}

fn ratio(num: f64, den: f64) -> f64 {
    if den > 0.0 {
        num / den
    } else {
        num
    }
}

/// Raw-residual refinement steps after the first solve.
const RAW_REFINEMENT_STEPS: usize = 3;

/// Minimal-norm element of the kernel span taking the values attached to `set`.
///
/// The normalized system is solved by Cholesky with one step of refinement, followed
/// by a few steps that refine against the raw residual `a − f(p)`. The latter recover
/// componentwise accuracy at far nodes, where the normalized right-hand side is tiny.
pub fn min_norm_interpolant(space: &KernelSpace, set: &PointSet) -> Result<Interpolant> {
    let values = set.values().ok_or_else(|| Error::InvalidInput("interpolation needs values on the nodes".into()))?;
    let diag = gram_matrix(space, set)?;
    if !(diag.eig_min >= CONDITIONING_GUARD) {
        return Err(Error::Conditioning { eig_min: diag.eig_min, guard: CONDITIONING_GUARD });
    }
    let g = &diag.gram;
    let half_log_diag: Vec<f64> = set.points().iter().map(|p| 0.5 * space.log_diagonal(p)).collect();
    let sigma =
        half_log_diag.iter().zip(values).filter(|(_, a)| a.norm() > 0.0).map(|(s, _)| *s).fold(f64::INFINITY, f64::min);
    let sigma = if sigma.is_finite() { sigma } else { 0.0 };
    let normalize = |r: &[Complex64]| -> DVector<Complex64> {
        DVector::from_iterator(r.len(), r.iter().zip(&half_log_diag).map(|(a, s)| a * (sigma - s).exp()))
    };
    let rhs = normalize(values);
    let chol = g.clone().cholesky().ok_or(Error::Conditioning { eig_min: diag.eig_min, guard: CONDITIONING_GUARD })?;
    let mut b = chol.solve(&rhs);
    let correction = chol.solve(&(&rhs - g * &b));
    b += correction;

    let raw_residual = |b: &DVector<Complex64>| -> Vec<Complex64> {
        set.points()
            .par_iter()
            .zip(values)
            .map(|(p, a)| a - evaluate_scaled(space, set.points(), b.as_slice(), sigma, p))
            .collect()
    };
    let scale = max_norm(values);
    let mut residual = raw_residual(&b);
    let mut relative = ratio(max_norm(&residual), scale);
    for _ in 0..RAW_REFINEMENT_STEPS {
        if !(relative > 0.0) {
            break;
        }
        let candidate = &b + chol.solve(&normalize(&residual));
        let cand_residual = raw_residual(&candidate);
        let cand_relative = ratio(max_norm(&cand_residual), scale);
        if !(cand_relative < relative) {
            break;
        }
        b = candidate;
        residual = cand_residual;
        relative = cand_relative;
    }

    let weighted = ratio(max_norm(&(g * &b - &rhs)), max_norm(&rhs));
    let scaled: Vec<Complex64> = b.iter().copied().collect();
    Ok(Interpolant {
        space: *space,
        points: set.points().to_vec(),
        norm_sqr: quadratic_form(g, &scaled) * (-2.0 * sigma).exp(),
        scaled_coefficients: scaled,
        log_scale: sigma,
        relative_residual: relative,
        weighted_residual: weighted,
        eig_min: diag.eig_min,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub s: f64,
    pub eig_min: f64,
    pub eig_max: f64,
    #[serde(rename = "R")]
    pub r: f64,
    pub n_points: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepTable {
    pub rows: Vec<SweepRow>,
    /// For each truncation radius: whether `eig_min` is nonincreasing as `s` decreases.
    pub monotone: Vec<(f64, bool)>,
}

impl SweepTable {
    pub fn is_monotone(&self) -> bool {
        self.monotone.iter().all(|m| m.1)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("s,eig_min,eig_max,R,n_points\n");
        for r in &self.rows {
            let _ = writeln!(out, "{},{},{},{},{}", sci(r.s), sci(r.eig_min), sci(r.eig_max), sci(r.r), r.n_points);
        }
        out
    }
}

/// Riesz bounds of the normalized kernels on `sℤ^{2n}` truncated to `|z| ≤ R`, for every
/// pair `(s, R)`. Rows are ordered by `R` as given, then by decreasing `s`.
pub fn feasibility_sweep(space: &KernelSpace, spacings: &[f64], radii: &[f64]) -> Result<SweepTable> {
    space.validate()?;
    if spacings.iter().chain(radii).any(|x| !(*x > 0.0) || !x.is_finite()) {
        return Err(Error::InvalidInput("spacings and radii must be positive".into()));
    }
    let mut ordered = spacings.to_vec();
    ordered.sort_by(|a, b| b.total_cmp(a));
    ordered.dedup();
    let jobs: Vec<(f64, f64)> = radii.iter().flat_map(|&r| ordered.iter().map(move |&s| (s, r))).collect();
    let rows = jobs
        .par_iter()
        .map(|&(s, r)| {
            let set = PointSet::lattice_in_ball(space.n(), s, r);
            let diag = gram_matrix(space, &set)?;
            Ok(SweepRow { s, eig_min: diag.eig_min, eig_max: diag.eig_max, r, n_points: set.len() })
        })
        .collect::<Result<Vec<_>>>()?;
    let monotone = radii
        .iter()
        .map(|&r| {
            let mins: Vec<f64> = rows.iter().filter(|row| row.r == r).map(|row| row.eig_min).collect();
            (r, mins.windows(2).all(|w| w[1] <= w[0] + 1e-12))
        })
        .collect();
    Ok(SweepTable { rows, monotone })
}
