//! Sample grids for the pointwise criteria.

use std::str::FromStr;

use crate::error::{Error, Result};
use crate::geometry::Point;

/// `box:H:M` (tensor grid with `M` nodes per real axis on `[−H, H]`) or
/// `disk:R:M` (the same grid on `[−R, R]`, kept where `|z| < R`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GridSpec {
    Box { half_width: f64, per_axis: usize },
    Disk { radius: f64, per_axis: usize },
}

impl FromStr for GridSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split(':').collect();
        let bad = || Error::InvalidInput(format!("grid spec `{s}` is not `box:H:M` or `disk:R:M`"));
        if parts.len() != 3 {
            return Err(bad());
        }
        let size: f64 = parts[1].parse().map_err(|_| bad())?;
        let per_axis: usize = parts[2].parse().map_err(|_| bad())?;
        if !(size > 0.0) || !size.is_finite() || per_axis == 0 {
            return Err(bad());
        }
        match parts[0] {
            "box" => Ok(GridSpec::Box { half_width: size, per_axis }),
            "disk" => Ok(GridSpec::Disk { radius: size, per_axis }),
            _ => Err(bad()),
        }
    }
}

impl GridSpec {
    pub fn points(&self, n: usize) -> Vec<Point> {
        match *self {
            GridSpec::Box { half_width, per_axis } => box_grid(n, half_width, per_axis),
            GridSpec::Disk { radius, per_axis } => disk_grid(n, radius, per_axis),
        }
    }
}

/// Tensor grid on `[−H, H]^{2n}`; a single node sits at the origin.
pub fn box_grid(n: usize, half_width: f64, per_axis: usize) -> Vec<Point> {
    let axis: Vec<f64> = if per_axis == 1 {
        vec![0.0]
    } else {
        (0..per_axis).map(|i| -half_width + 2.0 * half_width * i as f64 / (per_axis - 1) as f64).collect()
    };
    let d = 2 * n;
    let total = axis.len().pow(d as u32);
    (0..total)
        .map(|idx| {
            let mut rem = idx;
            let x: Vec<f64> = (0..d)
                .map(|_| {
                    let v = axis[rem % axis.len()];
                    rem /= axis.len();
                    v
                })
                .collect();
            Point::from_real(&x)
        })
        .collect()
}

/// Nodes of `box_grid(n, R, M)` strictly inside the Euclidean ball of radius `R`.
pub fn disk_grid(n: usize, radius: f64, per_axis: usize) -> Vec<Point> {
    box_grid(n, radius, per_axis).into_iter().filter(|p| p.norm() < radius).collect()
}
