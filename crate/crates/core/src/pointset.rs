//! Finite point sets: separation, ball counts and the hyperbolic far-field density.

use std::collections::HashSet;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{ModelSpace, Point};

/// Default cap on the number of pairs examined by brute-force separation.
pub const PAIR_GUARD: u128 = 10_000_000;

/// A finite set of distinct points, optionally carrying a target value per point.
#[derive(Debug, Clone, PartialEq)]
pub struct PointSet {
    points: Vec<Point>,
    values: Option<Vec<Complex64>>,
}

impl PointSet {
    pub fn new(points: Vec<Point>) -> Result<Self> {
        Self::build(points, None)
    }

    pub fn with_values(points: Vec<Point>, values: Vec<Complex64>) -> Result<Self> {
        Self::build(points, Some(values))
    }

    pub fn empty() -> Self {
        PointSet { points: Vec::new(), values: None }
    }

    fn build(points: Vec<Point>, values: Option<Vec<Complex64>>) -> Result<Self> {
        if let Some(first) = points.first() {
            let n = first.dim();
            if let Some(bad) = points.iter().position(|p| p.dim() != n) {
                return Err(Error::InvalidInput(format!(
                    "point {bad} has {} coordinates, expected {n}",
                    points[bad].dim()
                )));
            }
        }
        let mut seen = HashSet::with_capacity(points.len());
        for (i, p) in points.iter().enumerate() {
            // +0.0 and −0.0 are the same point
            let key: Vec<u64> = p.to_real().iter().map(|x| (x + 0.0).to_bits()).collect();
            if !seen.insert(key) {
                return Err(Error::InvalidInput(format!("point {i} duplicates an earlier point")));
            }
        }
        if let Some(v) = &values {
            if v.len() != points.len() {
                return Err(Error::InvalidInput(format!("{} values for {} points", v.len(), points.len())));
            }
        }
        Ok(PointSet { points, values })
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn values(&self) -> Option<&[Complex64]> {
        self.values.as_deref()
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Same points with new target values.
    pub fn set_values(&self, values: Vec<Complex64>) -> Result<Self> {
        Self::with_values(self.points.clone(), values)
    }

    /// Disjoint union; fails if the sets share a point.
    pub fn union(&self, other: &PointSet) -> Result<Self> {
        let mut pts = self.points.clone();
        pts.extend(other.points.iter().cloned());
        let values = match (&self.values, &other.values) {
            (Some(a), Some(b)) => Some(a.iter().chain(b).copied().collect()),
            _ => None,
        };
        Self::build(pts, values)
    }

    pub fn check_in(&self, space: &ModelSpace) -> Result<()> {
        for p in &self.points {
            space.check_point(p)?;
        }
        Ok(())
    }

    /// `sℤ^{2n} ∩ [−H, H]^{2n}` built from integer multiples so coordinates are exact.
    pub fn square_lattice(n: usize, spacing: f64, half_width: f64) -> Self {
        let m = (half_width / spacing + 1e-9).floor() as i64;
        let per_axis: Vec<f64> = (-m..=m).map(|i| i as f64 * spacing).collect();
        let d = 2 * n;
        let count = per_axis.len().pow(d as u32);
        let mut points = Vec::with_capacity(count);
        for idx in 0..count {
            let mut rem = idx;
            let mut x = Vec::with_capacity(d);
            for _ in 0..d {
                x.push(per_axis[rem % per_axis.len()]);
                rem /= per_axis.len();
            }
            points.push(Point::from_real(&x));
        }
        PointSet { points, values: None }
    }

    /// Lattice points with Euclidean norm at most `radius`.
    pub fn lattice_in_ball(n: usize, spacing: f64, radius: f64) -> Self {
        let full = Self::square_lattice(n, spacing, radius);
        let points = full.points.into_iter().filter(|p| p.norm() <= radius * (1.0 + 1e-12)).collect();
        PointSet { points, values: None }
    }
}

/// Serialized point set: `{"space": {...}, "points": [[re, im], ...], "values": [[re, im], ...]}`.
///
/// Points in ℂ¹ are written as a single `[re, im]` pair; in ℂⁿ as a list of pairs.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PointSetFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub space: Option<ModelSpace>,
    pub points: Vec<PointRepr>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub values: Option<Vec<[f64; 2]>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PointRepr {
    One([f64; 2]),
    Many(Vec<[f64; 2]>),
}

impl PointRepr {
    pub fn to_point(&self) -> Point {
        match self {
            PointRepr::One([re, im]) => Point::c1(*re, *im),
            PointRepr::Many(cs) => Point(cs.iter().map(|[re, im]| Complex64::new(*re, *im)).collect()),
        }
    }

    pub fn from_point(p: &Point) -> Self {
        if p.dim() == 1 {
            PointRepr::One([p.0[0].re, p.0[0].im])
        } else {
            PointRepr::Many(p.0.iter().map(|c| [c.re, c.im]).collect())
        }
    }
}

impl PointSetFile {
    pub fn into_point_set(self) -> Result<(Option<ModelSpace>, PointSet)> {
        let points = self.points.iter().map(PointRepr::to_point).collect();
        let set = match self.values {
            Some(v) => PointSet::with_values(points, v.iter().map(|[re, im]| Complex64::new(*re, *im)).collect())?,
            None => PointSet::new(points)?,
        };
        if let Some(space) = &self.space {
            set.check_in(space)?;
        }
        Ok((self.space, set))
    }

    pub fn from_point_set(space: Option<&ModelSpace>, set: &PointSet) -> Self {
        PointSetFile {
            space: space.cloned(),
            points: set.points.iter().map(PointRepr::from_point).collect(),
            values: set.values.as_ref().map(|v| v.iter().map(|c| [c.re, c.im]).collect()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeparationReport {
    /// `+∞` (serialized as `null`) when the set has fewer than two points.
    pub min_pairwise_distance: f64,
    pub arg_pair: Option<(usize, usize)>,
    /// `min(min_pairwise_distance, r₀) / 2`.
    pub delta0: f64,
}

impl SeparationReport {
    pub fn is_separated(&self) -> bool {
        self.min_pairwise_distance > 0.0
    }
}

pub fn separation(space: &ModelSpace, set: &PointSet, frame_radius: Option<f64>) -> Result<SeparationReport> {
    separation_with_guard(space, set, frame_radius, PAIR_GUARD)
}

pub fn separation_with_guard(
    space: &ModelSpace,
    set: &PointSet,
    frame_radius: Option<f64>,
    guard: u128,
) -> Result<SeparationReport> {
    let n = set.len() as u128;
    let pairs = n * n.saturating_sub(1) / 2;
    if pairs > guard {
        return Err(Error::PairGuard { pairs, limit: guard });
    }
    set.check_in(space)?;
    let pts = set.points();
    let row_minima: Vec<Option<(f64, usize, usize)>> = (0..pts.len())
        .into_par_iter()
        .map(|i| {
            let mut best: Option<(f64, usize, usize)> = None;
            for j in (i + 1)..pts.len() {
                let d = space.distance_unchecked(&pts[i], &pts[j]);
                if best.is_none_or(|(b, _, _)| d < b) {
                    best = Some((d, i, j));
                }
            }
            best
        })
        .collect();
    let best = row_minima.into_iter().flatten().fold(None, |acc: Option<(f64, usize, usize)>, cand| match acc {
        Some(a) if a.0 <= cand.0 => Some(a),
        _ => Some(cand),
    });
    let (min_d, arg_pair) = match best {
        Some((d, i, j)) => (d, Some((i, j))),
        None => (f64::INFINITY, None),
    };
    let r0 = frame_radius.unwrap_or(f64::INFINITY);
    Ok(SeparationReport { min_pairwise_distance: min_d, arg_pair, delta0: min_d.min(r0) / 2.0 })
}

/// Number of points in the open ball `B(z, ρ)`.
pub fn count_in_ball(space: &ModelSpace, set: &PointSet, z: &Point, rho: f64) -> Result<usize> {
    if !(rho > 0.0) {
        return Err(Error::Domain(format!("rho must be positive, got {rho}")));
    }
    space.check_point(z)?;
    set.check_in(space)?;
    Ok(count_in_ball_unchecked(space, set, z, rho))
}

pub(crate) fn count_in_ball_unchecked(space: &ModelSpace, set: &PointSet, z: &Point, rho: f64) -> usize {
    set.points().iter().filter(|p| space.distance_unchecked(z, p) < rho).count()
}

/// One far-field density term `−log tanh²(d / 2κ)`.
pub fn seip_term(d: f64, kappa: f64) -> f64 {
    let e = (-d / kappa).exp(); // e^{−2u} with u = d/2κ
    -2.0 * ((-e).ln_1p() - e.ln_1p())
}

/// Literal distance cutoff below which nodes are left out of the density.
pub const DENSITY_CUTOFF: f64 = 1.0;

pub fn seip_density(space: &ModelSpace, set: &PointSet, x: &Point) -> Result<f64> {
    seip_density_with_cutoff(space, set, x, DENSITY_CUTOFF)
}

/// `Σ_{d(x,p) ≥ cutoff} −log tanh²(d(x,p) / 2κ)`.
pub fn seip_density_with_cutoff(space: &ModelSpace, set: &PointSet, x: &Point, cutoff: f64) -> Result<f64> {
    let kappa = space.kappa().ok_or(Error::UnsupportedSpace { op: "seip_density", space: "flat" })?;
    space.check_point(x)?;
    set.check_in(space)?;
    Ok(set
        .points()
        .iter()
        .map(|p| space.distance_unchecked(x, p))
        .filter(|&d| d >= cutoff)
        .map(|d| seip_term(d, kappa))
        .fold(0.0, |acc, t| acc + t))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSupremum {
    pub value: f64,
    pub argmax: usize,
    pub point: Point,
    pub per_sample: Vec<f64>,
}

/// Maximum of the density over a finite sample grid (first maximizer on ties).
pub fn sup_density(space: &ModelSpace, set: &PointSet, grid: &[Point], cutoff: f64) -> Result<GridSupremum> {
    if grid.is_empty() {
        return Err(Error::InvalidInput("sample grid is empty".into()));
    }
    let per_sample: Vec<f64> =
        grid.par_iter().map(|x| seip_density_with_cutoff(space, set, x, cutoff)).collect::<Result<_>>()?;
    let mut argmax = 0;
    for (i, v) in per_sample.iter().enumerate() {
        if *v > per_sample[argmax] {
            argmax = i;
        }
    }
    Ok(GridSupremum { value: per_sample[argmax], argmax, point: grid[argmax].clone(), per_sample })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn flat() -> ModelSpace {
        ModelSpace::flat(1).unwrap()
    }

    #[test]
    fn lattice_separation() {
        for s in [0.5, 1.0, 1.5] {
            let set = PointSet::square_lattice(1, s, 3.0);
            let rep = separation(&flat(), &set, None).unwrap();
            assert!((rep.min_pairwise_distance - s).abs() < 1e-12);
            assert_eq!(rep.delta0, rep.min_pairwise_distance / 2.0);
        }
    }

    #[test]
    fn singleton_separation_is_infinite() {
        let set = PointSet::new(vec![Point::c1(1.0, 0.0)]).unwrap();
        let rep = separation(&flat(), &set, None).unwrap();
        assert!(rep.min_pairwise_distance.is_infinite());
        assert_eq!(rep.arg_pair, None);
        let rep = separation(&flat(), &set, Some(0.8)).unwrap();
        assert_eq!(rep.delta0, 0.4);
    }

    #[test]
    fn hyperbolic_pair_separation() {
        let hyp = ModelSpace::hyperbolic(1, 1.0).unwrap();
        let d = 1.3;
        let set = PointSet::new(vec![Point::origin(1), Point::c1((d / 2.0f64).tanh(), 0.0)]).unwrap();
        let rep = separation(&hyp, &set, None).unwrap();
        assert!((rep.min_pairwise_distance - d).abs() < 1e-13);
        assert_eq!(rep.arg_pair, Some((0, 1)));
    }

    #[test]
    fn pair_guard_trips() {
        let set = PointSet::square_lattice(1, 1.0, 3.0);
        let err = separation_with_guard(&flat(), &set, None, 10).unwrap_err();
        assert!(matches!(err, Error::PairGuard { .. }));
    }

    #[test]
    fn duplicates_and_value_lengths_rejected() {
        assert!(PointSet::new(vec![Point::c1(0.0, 0.0), Point::c1(-0.0, 0.0)]).is_err());
        assert!(PointSet::with_values(vec![Point::c1(0.0, 0.0)], vec![]).is_err());
    }

    #[test]
    fn counts_in_open_balls() {
        let set = PointSet::square_lattice(1, 1.0, 2.0);
        // |m|² < 2.25 for m ∈ ℤ²: (0,0), 4×(±1,0), 4×(±1,±1)
        assert_eq!(count_in_ball(&flat(), &set, &Point::origin(1), 1.5).unwrap(), 9);
        // open ball: the four neighbours at distance exactly 1 are excluded
        assert_eq!(count_in_ball(&flat(), &set, &Point::origin(1), 1.0).unwrap(), 1);
        assert_eq!(count_in_ball(&flat(), &PointSet::empty(), &Point::origin(1), 3.0).unwrap(), 0);
        assert!(count_in_ball(&flat(), &set, &Point::origin(1), 0.0).is_err());
    }

    #[test]
    fn density_examples() {
        let hyp = ModelSpace::hyperbolic(1, 1.0).unwrap();
        let x = Point::origin(1);
        assert_eq!(seip_density(&hyp, &PointSet::empty(), &x).unwrap(), 0.0);
        let near = PointSet::new(vec![Point::c1(0.25f64.tanh(), 0.0)]).unwrap();
        assert_eq!(seip_density(&hyp, &near, &x).unwrap(), 0.0);
        let far = PointSet::new(vec![Point::c1(0.5, 0.0)]).unwrap();
        let v = seip_density(&hyp, &far, &x).unwrap();
        assert!((v - 4f64.ln()).abs() < 1e-13, "{v}");
        let err = seip_density(&flat(), &far, &Point::origin(1)).unwrap_err();
        assert!(matches!(err, Error::UnsupportedSpace { .. }));
    }

    #[test]
    fn density_term_is_stable_far_away() {
        let t = seip_term(40.0, 1.0);
        // −log tanh²(20) ≈ 4e^{−40}
        assert!(((t - 4.0 * (-40f64).exp()) / t).abs() < 1e-10);
    }

    #[test]
    fn grid_supremum_rejects_empty_grid_and_picks_max() {
        let hyp = ModelSpace::hyperbolic(1, 1.0).unwrap();
        let set = PointSet::new(vec![Point::c1(0.5, 0.0)]).unwrap();
        assert!(sup_density(&hyp, &set, &[], 1.0).is_err());
        let grid = vec![Point::c1(-0.9, 0.0), Point::c1(-0.1, 0.0)];
        let sup = sup_density(&hyp, &set, &grid, 1.0).unwrap();
        assert_eq!(sup.argmax, 1);
    }

    #[test]
    fn file_schema_round_trip() {
        let json = r#"{"space":{"kind":"flat","n":1},"points":[[0.0,0.0],[1.0,2.0]],"values":[[1.0,0.0],[0.0,-1.0]]}"#;
        let file: PointSetFile = serde_json::from_str(json).unwrap();
        let (space, set) = file.into_point_set().unwrap();
        assert_eq!(space.unwrap(), flat());
        assert_eq!(set.points()[1], Point::c1(1.0, 2.0));
        assert_eq!(set.values().unwrap()[1], Complex64::new(0.0, -1.0));
        let back = serde_json::to_string(&PointSetFile::from_point_set(Some(&flat()), &set)).unwrap();
        assert_eq!(back, json);

        let json2 = r#"{"points":[[[0.0,0.0],[1.0,0.0]]]}"#;
        let (_, set2) = serde_json::from_str::<PointSetFile>(json2).unwrap().into_point_set().unwrap();
        assert_eq!(set2.points()[0].dim(), 2);
    }
}
