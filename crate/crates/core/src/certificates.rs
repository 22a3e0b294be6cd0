//! Pointwise interpolation criteria evaluated over sample grids.
//!
//! Every report carries the per-sample margins, the worst margin and a block of
//! conventions, and `passed` holds exactly when the worst margin is nonnegative.

use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{hessian_comparison_factor, ModelSpace, Point, SpaceKind};
use crate::pointset::{count_in_ball_unchecked, seip_density_with_cutoff, separation, PointSet};
use crate::weights::{curvature_eigen_min, HermitianWeight};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Criterion {
    #[serde(rename = "BOS")]
    Bos,
    Theorem1,
    Theorem2,
}

/// Normalizations every number in a report refers to.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Conventions {
    pub kahler_form: String,
    pub curvature: String,
    pub laplacian: String,
    pub balls: String,
    pub density: String,
}

impl Default for Conventions {
    fn default() -> Self {
        Conventions {
            kahler_form:
                "omega = (i/2) g sum_j dz_j ^ dzbar_j for the metric g|dz|^2, so i ddbar |z|^2 = 2 omega on flat space"
                    .into(),
            curvature:
                "smallest eigenvalue of i ddbar Phi + ricci(omega) relative to omega, ricci(omega) = -i ddbar log det g"
                    .into(),
            laplacian: "Delta Phi = 4 d^2 Phi / dz dzbar (n = 1)".into(),
            balls: "open geodesic balls: card{p : d(z, p) < rho}".into(),
            density: "sum of -log tanh^2(d / 2 kappa) over nodes at distance >= cutoff; pass threshold is user-set"
                .into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleMargin {
    pub point: Point,
    pub required: f64,
    pub available: f64,
    pub margin: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub count: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub density: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CertificateReport {
    pub schema_version: u32,
    pub criterion: Criterion,
    pub passed: bool,
    pub epsilon: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rho: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub k: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub density_threshold: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub density_sup: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub curvature_margin: Option<f64>,
    pub worst_margin: f64,
    pub worst_index: usize,
    pub warnings: Vec<String>,
    pub conventions: Conventions,
    pub per_sample: Vec<SampleMargin>,
}

impl CertificateReport {
    fn assemble(
        criterion: Criterion,
        epsilon: f64,
        per_sample: Vec<SampleMargin>,
        warnings: Vec<String>,
    ) -> Result<Self> {
        let mut worst_index = 0;
        for (i, s) in per_sample.iter().enumerate() {
            if !s.margin.is_finite() {
                return Err(Error::Evaluation(format!("non-finite margin {} at sample {i}", s.margin)));
            }
            if s.margin < per_sample[worst_index].margin {
                worst_index = i;
            }
        }
        let worst_margin = per_sample[worst_index].margin;
        Ok(CertificateReport {
            schema_version: SCHEMA_VERSION,
            criterion,
            passed: worst_margin >= 0.0,
            epsilon,
            rho: None,
            k: None,
            density_threshold: None,
            density_sup: None,
            curvature_margin: None,
            worst_margin,
            worst_index,
            warnings,
            conventions: Conventions::default(),
            per_sample,
        })
    }

    /// One row per sample; floats in 17-significant-digit scientific notation.
    pub fn to_csv(&self) -> String {
        let n = self.per_sample.first().map_or(0, |s| s.point.dim());
        let mut out = String::from("index");
        for j in 1..=n {
            let _ = write!(out, ",re_{j},im_{j}");
        }
        out.push_str(",required,available,margin,count,density\n");
        for (i, s) in self.per_sample.iter().enumerate() {
            let _ = write!(out, "{i}");
            for c in s.point.coords() {
                let _ = write!(out, ",{},{}", sci(c.re), sci(c.im));
            }
            let _ = write!(out, ",{},{},{}", sci(s.required), sci(s.available), sci(s.margin));
            match s.count {
                Some(c) => {
                    let _ = write!(out, ",{c}");
                }
                None => out.push(','),
            }
            match s.density {
                Some(d) => {
                    let _ = write!(out, ",{}", sci(d));
                }
                None => out.push(','),
            }
            out.push('\n');
        }
        out
    }
}

/// Full-precision scientific formatting used in every CSV artifact.
pub fn sci(x: f64) -> String {
    format!("{x:.16e}")
}

fn check_params(rho: Option<f64>, eps: f64, grid: &[Point]) -> Result<()> {
    if let Some(rho) = rho {
        if !(rho > 0.0) || !rho.is_finite() {
            return Err(Error::Domain(format!("rho must be positive, got {rho}")));
        }
    }
    if !(eps > 0.0) || !eps.is_finite() {
        return Err(Error::Domain(format!("epsilon must be positive, got {eps}")));
    }
    if grid.is_empty() {
        return Err(Error::InvalidInput("sample grid is empty".into()));
    }
    Ok(())
}

fn check_inputs(w: &HermitianWeight, space: &ModelSpace, set: &PointSet, grid: &[Point]) -> Result<()> {
    if w.n() != space.n() {
        return Err(Error::InvalidInput(format!("weight has n = {}, space has n = {}", w.n(), space.n())));
    }
    set.check_in(space)?;
    grid.iter().try_for_each(|z| space.check_point(z))
}

fn separation_warnings(space: &ModelSpace, set: &PointSet) -> Vec<String> {
    match separation(space, set, None) {
        Ok(rep) if rep.is_separated() => Vec::new(),
        Ok(_) => vec!["separation of the node set is not positive".into()],
        Err(e) => vec![format!("separation of the node set not verified: {e}")],
    }
}

/// Flat ℂ¹ criterion `ΔΦ(z) ≥ card(B(z,ρ) ∩ Λ)/ρ² + ε` at every grid node.
pub fn bos_certificate(
    w: &HermitianWeight,
    space: &ModelSpace,
    set: &PointSet,
    rho: f64,
    eps: f64,
    grid: &[Point],
) -> Result<CertificateReport> {
    if space.kind() != SpaceKind::Flat || space.n() != 1 {
        return Err(Error::UnsupportedSpace {
            op: "bos_certificate",
            space: if space.n() == 1 { "hyperbolic" } else { "multi-dimensional" },
        });
    }
    check_params(Some(rho), eps, grid)?;
    check_inputs(w, space, set, grid)?;
    let per_sample = grid
        .par_iter()
        .map(|z| {
            let count = count_in_ball_unchecked(space, set, z, rho);
            let required = count as f64 / (rho * rho) + eps;
            let available = w.laplacian(z)?;
            Ok(SampleMargin {
                point: z.clone(),
                required,
                available,
                margin: available - required,
                count: Some(count),
                density: None,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let mut report = CertificateReport::assemble(Criterion::Bos, eps, per_sample, separation_warnings(space, set))?;
    report.rho = Some(rho);
    report.k = Some(0.0);
    Ok(report)
}

/// `curvature_min(z) ≥ n·card(B(z,ρ) ∩ Λ)/ρ²·(1 + kρ coth kρ) + ε`, with `k` from the space.
pub fn theorem1_certificate(
    w: &HermitianWeight,
    space: &ModelSpace,
    set: &PointSet,
    rho: f64,
    eps: f64,
    grid: &[Point],
) -> Result<CertificateReport> {
    theorem1_certificate_with_k(w, space, set, rho, eps, grid, space.k())
}

/// As [`theorem1_certificate`] with a curvature constant `k ≥ space.k()`; any such `k`
/// is still a valid lower curvature bound, at the price of a larger factor.
pub fn theorem1_certificate_with_k(
    w: &HermitianWeight,
    space: &ModelSpace,
    set: &PointSet,
    rho: f64,
    eps: f64,
    grid: &[Point],
    k: f64,
) -> Result<CertificateReport> {
    check_params(Some(rho), eps, grid)?;
    if !(k >= space.k()) {
        return Err(Error::Domain(format!("k = {k} is below the curvature constant {} of the space", space.k())));
    }
    let factor = hessian_comparison_factor(k, rho)?;
    check_inputs(w, space, set, grid)?;
    let n = space.n() as f64;
    let per_sample = grid
        .par_iter()
        .map(|z| {
            let count = count_in_ball_unchecked(space, set, z, rho);
            let required = n * count as f64 / (rho * rho) * factor + eps;
            let available = curvature_eigen_min(w, space, z)?;
            Ok(SampleMargin {
                point: z.clone(),
                required,
                available,
                margin: available - required,
                count: Some(count),
                density: None,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let mut report =
        CertificateReport::assemble(Criterion::Theorem1, eps, per_sample, separation_warnings(space, set))?;
    report.rho = Some(rho);
    report.k = Some(k);
    Ok(report)
}

/// Hyperbolic criterion: `curvature_min ≥ ε` on the grid and the grid supremum of the
/// density at most `threshold`. The per-sample margin is the smaller of the two slacks.
pub fn theorem2_certificate(
    w: &HermitianWeight,
    space: &ModelSpace,
    set: &PointSet,
    eps: f64,
    grid: &[Point],
    threshold: f64,
    cutoff: f64,
) -> Result<CertificateReport> {
    if space.kappa().is_none() {
        return Err(Error::UnsupportedSpace { op: "theorem2_certificate", space: "flat" });
    }
    check_params(None, eps, grid)?;
    if !threshold.is_finite() {
        return Err(Error::Domain(format!("density threshold must be finite, got {threshold}")));
    }
    check_inputs(w, space, set, grid)?;
    let per_sample = grid
        .par_iter()
        .map(|z| {
            let available = curvature_eigen_min(w, space, z)?;
            let density = seip_density_with_cutoff(space, set, z, cutoff)?;
            let margin = (available - eps).min(threshold - density);
            Ok(SampleMargin { point: z.clone(), required: eps, available, margin, count: None, density: Some(density) })
        })
        .collect::<Result<Vec<_>>>()?;
    let curvature_margin = per_sample.iter().map(|s| s.available - eps).fold(f64::INFINITY, f64::min);
    let density_sup = per_sample.iter().filter_map(|s| s.density).fold(f64::NEG_INFINITY, f64::max);
    let mut warnings =
        vec![format!("density threshold {threshold} is user-set; boundedness is only checked on the grid")];
    warnings.extend(separation_warnings(space, set));
    let mut report = CertificateReport::assemble(Criterion::Theorem2, eps, per_sample, warnings)?;
    report.k = Some(space.k());
    report.density_threshold = Some(threshold);
    report.density_sup = Some(density_sup);
    report.curvature_margin = Some(curvature_margin);
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::box_grid;

    fn flat() -> ModelSpace {
        ModelSpace::flat(1).unwrap()
    }

    fn fock() -> HermitianWeight {
        HermitianWeight::fock(1, 1.0).unwrap()
    }

    fn grid() -> Vec<Point> {
        let mut g = box_grid(1, 5.0, 21);
        g.extend(box_grid(1, 5.0, 3));
        g
    }

    #[test]
    fn bos_empty_set_has_unit_margin() {
        let rep = bos_certificate(&fock(), &flat(), &PointSet::empty(), 1.0, 3.0, &grid()).unwrap();
        assert!(rep.passed);
        assert!(rep.per_sample.iter().all(|s| (s.margin - 1.0).abs() < 1e-15));
    }

    #[test]
    fn bos_dense_lattice_fails() {
        let set = PointSet::square_lattice(1, 0.1, 3.0);
        let rep = bos_certificate(&fock(), &flat(), &set, 1.0, 0.1, &[Point::origin(1)]).unwrap();
        assert!(!rep.passed);
        // lattice points of 0.1ℤ² strictly inside the unit disk
        let count =
            (-10i32..=10).flat_map(|i| (-10i32..=10).map(move |j| (i, j))).filter(|(i, j)| i * i + j * j < 100).count();
        assert_eq!(rep.per_sample[0].count, Some(count));
        assert_eq!(count, 305);
    }

    #[test]
    fn bos_sparse_lattice_passes() {
        let set = PointSet::square_lattice(1, 5.0, 10.0);
        let rep = bos_certificate(&fock(), &flat(), &set, 2.0, 3.0, &grid()).unwrap();
        assert!(rep.passed);
        assert!(rep.per_sample.iter().all(|s| s.count.unwrap() <= 1));
        assert!((rep.worst_margin - 0.75).abs() < 1e-15);
    }

    #[test]
    fn bos_rejects_other_spaces() {
        let hyp = ModelSpace::hyperbolic(1, 1.0).unwrap();
        let w = HermitianWeight::bergman(1, 3.0, 1.0).unwrap();
        assert!(matches!(
            bos_certificate(&w, &hyp, &PointSet::empty(), 0.5, 0.1, &[Point::origin(1)]),
            Err(Error::UnsupportedSpace { .. })
        ));
        let flat2 = ModelSpace::flat(2).unwrap();
        let w2 = HermitianWeight::fock(2, 1.0).unwrap();
        assert!(bos_certificate(&w2, &flat2, &PointSet::empty(), 0.5, 0.1, &[Point::origin(2)]).is_err());
    }

    #[test]
    fn theorem1_flat_examples() {
        let set = PointSet::square_lattice(1, 5.0, 10.0);
        let rep = theorem1_certificate(&fock(), &flat(), &set, 2.0, 1.0, &grid()).unwrap();
        assert!(rep.passed);
        assert!((rep.worst_margin - 0.5).abs() < 1e-15);
        let rep_k = theorem1_certificate_with_k(&fock(), &flat(), &set, 2.0, 1.0, &grid(), 1.0).unwrap();
        let req = 0.25 * (1.0 + 2.0 / 2.0f64.tanh()) + 1.0;
        assert!((req - 1.768_657_1).abs() < 1e-6);
        assert!(rep_k.passed);
        assert!((rep_k.worst_margin - (2.0 - req)).abs() < 1e-14);
        assert!(rep_k.worst_margin < rep.worst_margin);
    }

    #[test]
    fn theorem1_empty_set_threshold_is_twice_alpha() {
        let g = grid();
        assert!(theorem1_certificate(&fock(), &flat(), &PointSet::empty(), 1.0, 2.0, &g).unwrap().passed);
        assert!(!theorem1_certificate(&fock(), &flat(), &PointSet::empty(), 1.0, 2.0 + 1e-12, &g).unwrap().passed);
    }

    #[test]
    fn theorem1_rejects_small_k() {
        let hyp = ModelSpace::hyperbolic(1, 1.0).unwrap();
        let w = HermitianWeight::bergman(1, 6.0, 1.0).unwrap();
        assert!(theorem1_certificate_with_k(&w, &hyp, &PointSet::empty(), 0.5, 0.1, &[Point::origin(1)], 0.5).is_err());
    }

    #[test]
    fn bos_and_theorem1_margins_relate() {
        // with ε_BOS = 2ε_T1: 2·m_T1 = m_BOS − 3·count/ρ²
        let set = PointSet::square_lattice(1, 1.3, 4.0);
        let g = box_grid(1, 3.0, 31);
        for rho in [0.7, 1.0, 1.6] {
            let t1 = theorem1_certificate(&fock(), &flat(), &set, rho, 0.05, &g).unwrap();
            let bos = bos_certificate(&fock(), &flat(), &set, rho, 0.1, &g).unwrap();
            for (a, b) in t1.per_sample.iter().zip(&bos.per_sample) {
                let c = a.count.unwrap() as f64;
                assert!((2.0 * a.margin - (b.margin - 3.0 * c / (rho * rho))).abs() < 1e-12);
                if c == 0.0 {
                    assert!((2.0 * a.margin - b.margin).abs() < 1e-12);
                }
            }
            assert!(!t1.passed || bos.passed);
        }
    }

    #[test]
    fn theorem2_examples() {
        let hyp = ModelSpace::hyperbolic(1, 1.0).unwrap();
        let g: Vec<Point> = box_grid(1, 0.8, 9).into_iter().filter(|p| p.norm() < 0.9).collect();
        let good = HermitianWeight::bergman(1, 6.0, 1.0).unwrap();
        let rep = theorem2_certificate(&good, &hyp, &PointSet::empty(), 1.0, &g, 5.0, 1.0).unwrap();
        assert!(rep.passed);
        assert_eq!(rep.density_sup, Some(0.0));
        assert!((rep.curvature_margin.unwrap() - 1.0).abs() < 1e-12);
        assert!(rep.warnings[0].contains("user-set"));

        // (A/2 − 1) = 0.5 < ε = 1
        let weak = HermitianWeight::bergman(1, 3.0, 1.0).unwrap();
        let rep = theorem2_certificate(&weak, &hyp, &PointSet::empty(), 1.0, &g, 5.0, 1.0).unwrap();
        assert!(!rep.passed);
        assert!((rep.worst_margin + 0.5).abs() < 1e-12);

        let flat_err = theorem2_certificate(&fock(), &flat(), &PointSet::empty(), 1.0, &g, 5.0, 1.0);
        assert!(matches!(flat_err, Err(Error::UnsupportedSpace { .. })));
    }

    #[test]
    fn theorem2_density_clause() {
        let hyp = ModelSpace::hyperbolic(1, 1.0).unwrap();
        let w = HermitianWeight::bergman(1, 6.0, 1.0).unwrap();
        let set = PointSet::new(vec![Point::c1(0.9, 0.0), Point::c1(-0.9, 0.0)]).unwrap();
        let g = vec![Point::origin(1), Point::c1(0.0, 0.5)];
        let loose = theorem2_certificate(&w, &hyp, &set, 0.5, &g, 10.0, 1.0).unwrap();
        assert!(loose.passed);
        let tight = theorem2_certificate(&w, &hyp, &set, 0.5, &g, loose.density_sup.unwrap() / 2.0, 1.0).unwrap();
        assert!(!tight.passed);
        assert!(tight.curvature_margin.unwrap() >= 0.0);
    }

    #[test]
    fn empty_grid_and_bad_parameters() {
        assert!(bos_certificate(&fock(), &flat(), &PointSet::empty(), 1.0, 1.0, &[]).is_err());
        assert!(theorem1_certificate(&fock(), &flat(), &PointSet::empty(), 0.0, 1.0, &grid()).is_err());
        assert!(theorem1_certificate(&fock(), &flat(), &PointSet::empty(), 1.0, -1.0, &grid()).is_err());
    }

    #[test]
    fn csv_has_one_row_per_sample() {
        let rep = theorem1_certificate(&fock(), &flat(), &PointSet::empty(), 1.0, 1.0, &grid()).unwrap();
        let csv = rep.to_csv();
        let mut lines = csv.lines();
        assert_eq!(lines.next().unwrap(), "index,re_1,im_1,required,available,margin,count,density");
        assert_eq!(csv.lines().count(), rep.per_sample.len() + 1);
        let row: Vec<&str> = lines.next().unwrap().split(',').collect();
        assert_eq!(row[4], "2.0000000000000000e0");
        assert_eq!(row[6], "0");
        assert_eq!(row[7], "");
    }

    #[test]
    fn report_json_round_trips() {
        let set = PointSet::square_lattice(1, 5.0, 10.0);
        let rep = theorem1_certificate(&fock(), &flat(), &set, 2.0, 1.0, &grid()).unwrap();
        let json = serde_json::to_string(&rep).unwrap();
        let back: CertificateReport = serde_json::from_str(&json).unwrap();
        assert_eq!(back, rep);
        assert!(json.contains("\"criterion\":\"Theorem1\""));
        assert!(json.contains("\"conventions\""));
    }
}
