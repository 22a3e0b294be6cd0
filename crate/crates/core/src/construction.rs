//! Local sections glued by a cutoff, the auxiliary weight with poles on the nodes,
//! and the weighted `∂̄` energy of the glued section.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{ball_volume_bound, complex_hessian_fd, dbar_fd, hessian_comparison_factor, ModelSpace, Point};
use crate::pointset::{count_in_ball_unchecked, seip_term, separation, PointSet, SeparationReport};
use crate::quadrature::polar_annulus_rule;
use crate::weights::HermitianWeight;

fn bump(u: f64) -> f64 {
    if u > 0.0 {
        (-1.0 / u).exp()
    } else {
        0.0
    }
}

/// Smooth nonincreasing cutoff: `1` on `[0, 1/4]`, `0` on `[1, ∞)`.
pub fn cutoff(t: f64) -> f64 {
    if t <= 0.25 {
        return 1.0;
    }
    if t >= 1.0 {
        return 0.0;
    }
    let a = bump((1.0 - t) / 0.75);
    let b = bump((t - 0.25) / 0.75);
    a / (a + b)
}

/// `a_p · exp(E_p(z))` with `E_p` the normal-frame exponent of `w` at `p`.
pub fn local_section(
    w: &HermitianWeight,
    space: &ModelSpace,
    p: &Point,
    a_p: Complex64,
    delta0: f64,
    z: &Point,
) -> Result<Complex64> {
    let d = space.distance(p, z)?;
    if !(d < delta0) {
        return Err(Error::Domain(format!("z lies at distance {d} >= delta0 = {delta0} from the node")));
    }
    local_section_unchecked(w, p, a_p, z)
}

fn local_section_unchecked(w: &HermitianWeight, p: &Point, a_p: Complex64, z: &Point) -> Result<Complex64> {
    Ok(a_p * w.normal_frame_exponent(p, z)?.exp())
}

/// `F = Σ_p f_p · χ(d(p, ·)² / δ₀²)`.
#[derive(Debug, Clone)]
pub struct GluedExtension {
    set: PointSet,
    weight: HermitianWeight,
    space: ModelSpace,
    delta0: f64,
    separation: SeparationReport,
}

impl GluedExtension {
    /// `delta0 = None` picks `min(separation, r₀) / 2`; any explicit value must satisfy
    /// `2δ₀ ≤ min(separation, r₀)`.
    pub fn new(set: PointSet, weight: HermitianWeight, space: ModelSpace, delta0: Option<f64>) -> Result<Self> {
        if set.values().is_none() {
            return Err(Error::InvalidInput("the glued extension needs values on the nodes".into()));
        }
        if weight.n() != space.n() {
            return Err(Error::InvalidInput(format!("weight has n = {}, space has n = {}", weight.n(), space.n())));
        }
        let sep = separation(&space, &set, weight.frame_radius())?;
        let limit = 2.0 * sep.delta0;
        let delta0 = match delta0 {
            Some(d) => d,
            None if limit.is_finite() => sep.delta0,
            None => {
                return Err(Error::InvalidInput(
                    "delta0 must be given when neither the separation nor r0 bounds it".into(),
                ))
            }
        };
        if !(delta0 > 0.0) || !delta0.is_finite() {
            return Err(Error::Domain(format!("delta0 must be positive and finite, got {delta0}")));
        }
        if 2.0 * delta0 > limit * (1.0 + 1e-12) {
            return Err(Error::Separation { two_delta0: 2.0 * delta0, limit });
        }
        Ok(GluedExtension { set, weight, space, delta0, separation: sep })
    }

    pub fn delta0(&self) -> f64 {
        self.delta0
    }

    pub fn set(&self) -> &PointSet {
        &self.set
    }

    pub fn weight(&self) -> &HermitianWeight {
        &self.weight
    }

    pub fn space(&self) -> &ModelSpace {
        &self.space
    }

    pub fn separation(&self) -> &SeparationReport {
        &self.separation
    }

    fn value_at(&self, i: usize) -> Complex64 {
        self.set.values().expect("checked in new")[i]
    }

    /// The same nodes carrying different values.
    pub fn with_values(&self, values: Vec<Complex64>) -> Result<Self> {
        Ok(GluedExtension { set: self.set.set_values(values)?, ..self.clone() })
    }

    /// `f_p(z)` for node `i`; a domain error outside `B(p, δ₀)`.
    pub fn local_section(&self, i: usize, z: &Point) -> Result<Complex64> {
        local_section(&self.weight, &self.space, &self.set.points()[i], self.value_at(i), self.delta0, z)
    }

    /// `χ(d(p_i, z)² / δ₀²)`.
    pub fn cutoff_factor(&self, i: usize, z: &Point) -> Result<f64> {
        let d = self.space.distance(&self.set.points()[i], z)?;
        Ok(cutoff(d * d / (self.delta0 * self.delta0)))
    }

    pub fn evaluate(&self, z: &Point) -> Result<Complex64> {
        self.space.check_point(z)?;
        let mut total = Complex64::new(0.0, 0.0);
        for (i, p) in self.set.points().iter().enumerate() {
            let d = self.space.distance_unchecked(p, z);
            if d < self.delta0 {
                let chi = cutoff(d * d / (self.delta0 * self.delta0));
                if chi > 0.0 {
                    total += local_section_unchecked(&self.weight, p, self.value_at(i), z)? * chi;
                }
            }
        }
        Ok(total)
    }

    /// `|∂̄F(z)|²_ω ‖·‖_h` factor for node `i`: `|∂̄χ|²_ω · ‖f_p(z)‖²_h`, with `∂̄χ` by
    /// central differences and `f_p` treated as holomorphic.
    fn dbar_density(&self, i: usize, z: &Point, step: f64) -> Result<f64> {
        let dchi = dbar_fd(|x| Ok(Complex64::new(self.cutoff_factor(i, x)?, 0.0)), z, step)?;
        let g = self.space.conformal_factor(z);
        let dbar_sqr: f64 = dchi.iter().map(|c| c.norm_sqr()).sum::<f64>() * 2.0 / g;
        if dbar_sqr == 0.0 {
            return Ok(0.0);
        }
        let f = local_section_unchecked(&self.weight, &self.set.points()[i], self.value_at(i), z)?;
        Ok(dbar_sqr * self.weight.pointwise_norm_sqr(f, z)?)
    }
}

/// `F(z)` (free-function form).
pub fn evaluate_extension(g: &GluedExtension, z: &Point) -> Result<Complex64> {
    g.evaluate(z)
}

/// `v = n Σ_q (1 − d²/ρ² + log(d²/ρ²)) 1_{B(q,ρ)}`.
#[derive(Debug, Clone)]
pub struct AuxiliaryWeight {
    set: PointSet,
    space: ModelSpace,
    rho: f64,
}

impl AuxiliaryWeight {
    pub fn new(set: PointSet, space: ModelSpace, rho: f64) -> Result<Self> {
        if !(rho > 0.0) || !rho.is_finite() {
            return Err(Error::Domain(format!("rho must be positive, got {rho}")));
        }
        set.check_in(&space)?;
        Ok(AuxiliaryWeight { set, space, rho })
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    pub fn set(&self) -> &PointSet {
        &self.set
    }

    pub fn space(&self) -> &ModelSpace {
        &self.space
    }
}

/// `v(z)`; `−∞` on the nodes.
pub fn auxiliary_weight_value(v: &AuxiliaryWeight, z: &Point) -> Result<f64> {
    v.space.check_point(z)?;
    let n = v.space.n() as f64;
    let mut total = 0.0;
    for q in v.set.points() {
        let d = v.space.distance_unchecked(q, z);
        if d == 0.0 {
            return Ok(f64::NEG_INFINITY);
        }
        if d < v.rho {
            // 1 − t + log t with t − 1 = (d − ρ)(d + ρ)/ρ²
            let u = (d - v.rho) * (d + v.rho) / (v.rho * v.rho);
            total += n * (u.ln_1p() - u);
        }
    }
    Ok(total)
}

/// `Σ_p n log tanh²(d(p, z) / 2κ)`; `−∞` on the nodes.
pub fn seip_weight_value(set: &PointSet, space: &ModelSpace, z: &Point) -> Result<f64> {
    let kappa = space.kappa().ok_or(Error::UnsupportedSpace { op: "seip_weight_value", space: "flat" })?;
    space.check_point(z)?;
    set.check_in(space)?;
    let n = space.n() as f64;
    let mut total = 0.0;
    for p in set.points() {
        let d = space.distance_unchecked(p, z);
        if d == 0.0 {
            return Ok(f64::NEG_INFINITY);
        }
        total -= n * seip_term(d, kappa);
    }
    if !total.is_finite() {
        return Err(Error::Divergence(format!("weight sum over {} nodes is {total}", set.len())));
    }
    Ok(total)
}

/// Polar midpoint resolution for one annulus; the refined level doubles both counts.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadratureSpec {
    pub n_radial: usize,
    pub n_angular: usize,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        QuadratureSpec { n_radial: 24, n_angular: 32 }
    }
}

impl QuadratureSpec {
    pub fn refined(&self) -> Self {
        QuadratureSpec { n_radial: 2 * self.n_radial, n_angular: 2 * self.n_angular }
    }

    fn check(&self) -> Result<()> {
        if self.n_radial == 0 || self.n_angular < 2 {
            return Err(Error::InvalidInput(format!(
                "quadrature needs n_radial >= 1 and n_angular >= 2, got {self:?}"
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnergyReport {
    /// Energy at the refined level.
    pub energy: f64,
    pub coarse: f64,
    pub fine: f64,
    /// `|fine − coarse| / fine`, zero when both vanish.
    pub relative_drift: f64,
    /// Refined-level contribution of each node's annulus.
    pub per_node: Vec<f64>,
    pub delta0: f64,
    pub rho: f64,
    /// `log(δ₀²/4ρ²)`, the lower bound for each term of `v` on the annuli.
    pub v_term_floor: f64,
    pub coarse_spec: QuadratureSpec,
    pub fine_spec: QuadratureSpec,
}

fn annulus_energy(g: &GluedExtension, v: &AuxiliaryWeight, i: usize, spec: QuadratureSpec) -> Result<f64> {
    let p = &g.set.points()[i];
    let step = 1e-5 * g.delta0;
    let nodes = polar_annulus_rule(&g.space, p, 0.5 * g.delta0, g.delta0, spec.n_radial, spec.n_angular);
    let mut sum = 0.0;
    for (z, w) in &nodes {
        let density = g.dbar_density(i, z, step)?;
        if density == 0.0 {
            continue;
        }
        sum += w * density * (-auxiliary_weight_value(v, z)?).exp();
    }
    if !sum.is_finite() {
        return Err(Error::NonFinite { node: i, value: sum });
    }
    Ok(sum)
}

/// `∫ |∂̄F|²_ω ‖·‖²_h e^{−v} dV_ω`, integrated over the annuli `δ₀/2 ≤ d(p, ·) ≤ δ₀`
/// outside which `∂̄F` vanishes, at two quadrature levels.
pub fn dbar_energy(g: &GluedExtension, v: &AuxiliaryWeight, spec: QuadratureSpec) -> Result<EnergyReport> {
    spec.check()?;
    if v.space != g.space {
        return Err(Error::InvalidInput("auxiliary weight and extension live on different spaces".into()));
    }
    let fine_spec = spec.refined();
    let levels: Vec<(f64, f64)> = (0..g.set.len())
        .into_par_iter()
        .map(|i| Ok((annulus_energy(g, v, i, spec)?, annulus_energy(g, v, i, fine_spec)?)))
        .collect::<Result<_>>()?;
    let coarse: f64 = levels.iter().map(|l| l.0).sum();
    let fine: f64 = levels.iter().map(|l| l.1).sum();
    let relative_drift = if fine == 0.0 && coarse == 0.0 { 0.0 } else { (fine - coarse).abs() / fine.abs() };
    Ok(EnergyReport {
        energy: fine,
        coarse,
        fine,
        relative_drift,
        per_node: levels.iter().map(|l| l.1).collect(),
        delta0: g.delta0,
        rho: v.rho,
        v_term_floor: (g.delta0 * g.delta0 / (4.0 * v.rho * v.rho)).ln(),
        coarse_spec: spec,
        fine_spec,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormReport {
    /// `∫ ‖F‖²_h dV_ω`.
    pub total: f64,
    /// Integral over each node's ball divided by `‖a(p)‖²_h` (zero for zero data).
    pub per_node_ratio: Vec<f64>,
    /// `exp(½M₂(2n)²δ₀²/μ²) · vol(B(δ₀))` in the comparison model.
    pub constant: f64,
    pub data_norm_sqr: f64,
}

/// `∫ ‖F‖²_h dV_ω` over the balls `B(p, δ₀)` that carry `F`.
pub fn extension_norm_sqr(g: &GluedExtension, spec: QuadratureSpec) -> Result<NormReport> {
    spec.check()?;
    let per_node: Vec<(f64, f64)> = (0..g.set.len())
        .into_par_iter()
        .map(|i| {
            let p = &g.set.points()[i];
            let nodes = polar_annulus_rule(&g.space, p, 0.0, g.delta0, spec.n_radial, spec.n_angular);
            let mut sum = 0.0;
            for (z, w) in &nodes {
                let f = g.evaluate(z)?;
                sum += w * g.weight.pointwise_norm_sqr(f, z)?;
            }
            let data = g.weight.pointwise_norm_sqr(g.value_at(i), p)?;
            if !sum.is_finite() {
                return Err(Error::NonFinite { node: i, value: sum });
            }
            Ok((sum, data))
        })
        .collect::<Result<_>>()?;
    let volume = ball_volume_bound(g.space.k(), g.delta0, 2 * g.space.n())?;
    Ok(NormReport {
        total: per_node.iter().map(|x| x.0).sum(),
        per_node_ratio: per_node.iter().map(|&(s, d)| if d > 0.0 { s / d } else { 0.0 }).collect(),
        constant: g.weight.frame_constant(g.delta0) * volume,
        data_norm_sqr: per_node.iter().map(|x| x.1).sum(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurvatureSample {
    pub point: Point,
    pub eigen_min: f64,
    pub bound: f64,
    pub margin: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuxiliaryCurvatureReport {
    pub passed: bool,
    pub tolerance: f64,
    pub worst_margin: f64,
    pub worst_index: usize,
    pub per_sample: Vec<CurvatureSample>,
}

/// Checks by finite differences that the smallest relative eigenvalue of `i∂∂̄v` is at
/// least `−n·card(B(z,ρ) ∩ Λ)/ρ²·(1 + kρ coth kρ) − tolerance` at every grid node.
/// Grid nodes must stay `0.05ρ` away from the poles. Balls are widened by the reach of
/// the difference stencil.
pub fn auxiliary_curvature_check(
    v: &AuxiliaryWeight,
    grid: &[Point],
    tolerance: f64,
) -> Result<AuxiliaryCurvatureReport> {
    if grid.is_empty() {
        return Err(Error::InvalidInput("sample grid is empty".into()));
    }
    let space = &v.space;
    let factor = hessian_comparison_factor(space.k(), v.rho)?;
    let n = space.n() as f64;
    for (i, z) in grid.iter().enumerate() {
        space.check_point(z)?;
        if let Some(q) = v.set.points().iter().position(|q| space.distance_unchecked(q, z) < 0.05 * v.rho) {
            return Err(Error::Domain(format!("grid node {i} lies within 0.05 rho of pole {q}")));
        }
    }
    let per_sample = grid
        .par_iter()
        .map(|z| {
            let step = 1e-4 * v.rho.min(1.0) * z.norm().max(1.0);
            let hess = complex_hessian_fd(|x| auxiliary_weight_value(v, x), z, Some(step))?;
            let eigen_min = space.relative_eigenvalues(z, &hess)[0];
            // v is only C¹ across d = ρ, so a stencil touching that sphere sees part of
            // the inner curvature; count every node whose ball the stencil reaches.
            let reach = 2.0 * step * space.conformal_factor(z).sqrt();
            let count = count_in_ball_unchecked(space, &v.set, z, v.rho + reach);
            let bound = -n * count as f64 / (v.rho * v.rho) * factor;
            Ok(CurvatureSample { point: z.clone(), eigen_min, bound, margin: eigen_min - bound + tolerance })
        })
        .collect::<Result<Vec<_>>>()?;
    let mut worst_index = 0;
    for (i, s) in per_sample.iter().enumerate() {
        if !(s.margin >= per_sample[worst_index].margin) {
            worst_index = i;
        }
    }
    let worst_margin = per_sample[worst_index].margin;
    Ok(AuxiliaryCurvatureReport { passed: worst_margin >= 0.0, tolerance, worst_margin, worst_index, per_sample })
}
