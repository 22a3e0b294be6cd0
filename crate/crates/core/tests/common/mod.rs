//! Test-only oracles written without the library's linear algebra or lattice code.
#![allow(dead_code)]

use holo_interp::certificates::theorem1_certificate;
use holo_interp::grid::box_grid;
use holo_interp::pointset::PointSet;
use holo_interp::weights::HermitianWeight;
use holo_interp::{ModelSpace, Point};

/// Eigenvalues of a real symmetric matrix by cyclic Jacobi rotations, ascending.
pub fn jacobi_eigenvalues(mut a: Vec<Vec<f64>>) -> Vec<f64> {
    let n = a.len();
    for _sweep in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[i][j] * a[i][j])
            .sum();
        let diag: f64 = (0..n).map(|i| a[i][i] * a[i][i]).sum();
        if off <= 1e-30 * diag.max(1e-300) {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                if a[p][q] == 0.0 {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for row in a.iter_mut() {
                    let (akp, akq) = (row[p], row[q]);
                    row[p] = c * akp - s * akq;
                    row[q] = s * akp + c * akq;
                }
                let (upper, lower) = a.split_at_mut(q);
                for (apk, aqk) in upper[p].iter_mut().zip(lower[0].iter_mut()) {
                    let (x, y) = (*apk, *aqk);
                    *apk = c * x - s * y;
                    *aqk = s * x + c * y;
                }
            }
        }
    }
    let mut eig: Vec<f64> = (0..n).map(|i| a[i][i]).collect();
    eig.sort_by(f64::total_cmp);
    eig
}

/// Eigenvalues of the Hermitian matrix `re + i·im` via `[[re, −im], [im, re]]`, whose
/// spectrum is that of the Hermitian matrix with every eigenvalue doubled in multiplicity.
pub fn hermitian_eigenvalues(re: &[Vec<f64>], im: &[Vec<f64>]) -> Vec<f64> {
    let n = re.len();
    let mut big = vec![vec![0.0; 2 * n]; 2 * n];
    for i in 0..n {
        for j in 0..n {
            big[i][j] = re[i][j];
            big[i + n][j + n] = re[i][j];
            big[i][j + n] = -im[i][j];
            big[i + n][j] = im[i][j];
        }
    }
    jacobi_eigenvalues(big).into_iter().step_by(2).collect()
}

/// Points of `sℤ²` with Euclidean norm at most `radius`, as `(x, y)` pairs.
pub fn lattice_disk(spacing: f64, radius: f64) -> Vec<(f64, f64)> {
    let m = (radius / spacing).ceil() as i64 + 1;
    let mut out = Vec::new();
    for i in -m..=m {
        for j in -m..=m {
            let (x, y) = (i as f64 * spacing, j as f64 * spacing);
            if (x * x + y * y).sqrt() <= radius * (1.0 + 1e-12) {
                out.push((x, y));
            }
        }
    }
    out
}

/// Normalized Fock Gram matrix `exp(α p_j p̄_k − α|p_j|²/2 − α|p_k|²/2)` as real and
/// imaginary parts: modulus `exp(−α|p_j − p_k|²/2)`, phase `α·Im(p_j p̄_k)`.
pub fn fock_gram(alpha: f64, pts: &[(f64, f64)]) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
    let n = pts.len();
    let mut re = vec![vec![0.0; n]; n];
    let mut im = vec![vec![0.0; n]; n];
    for (j, &(xj, yj)) in pts.iter().enumerate() {
        for (k, &(xk, yk)) in pts.iter().enumerate() {
            let modulus = (-0.5 * alpha * ((xj - xk).powi(2) + (yj - yk).powi(2))).exp();
            let phase = alpha * (yj * xk - xj * yk);
            re[j][k] = modulus * phase.cos();
            im[j][k] = modulus * phase.sin();
        }
    }
    (re, im)
}

pub fn fock_eig_min(alpha: f64, spacing: f64, radius: f64) -> f64 {
    let pts = lattice_disk(spacing, radius);
    let (re, im) = fock_gram(alpha, &pts);
    hermitian_eigenvalues(&re, &im)[0]
}

/// Setup of the certificate/feasibility consistency run on Fock(1).
pub const SWEEP_RADIUS: f64 = 6.0;
pub const SWEEP_EPS: f64 = 0.01;
pub const RHO_CANDIDATES: [f64; 5] = [1.0, 1.5, 2.0, 2.5, 3.0];
pub const SWEEP_SPACINGS: [f64; 15] = [4.0, 3.5, 3.0, 2.75, 2.5, 2.25, 2.0, 1.9, 1.8, 1.7, 1.6, 1.5, 1.25, 1.0, 0.75];

/// `box:2:41` plus the lattice nodes with `|p| ≤ 2`, so that node-centred balls are sampled.
pub fn certificate_grid(spacing: f64) -> Vec<Point> {
    let mut grid = box_grid(1, 2.0, 41);
    grid.extend(lattice_disk(spacing, 2.0).into_iter().map(|(x, y)| Point::c1(x, y)));
    grid
}

/// Whether the Theorem 1 certificate passes for some candidate ρ on the truncated lattice.
pub fn theorem1_passes_somewhere(spacing: f64) -> bool {
    let space = ModelSpace::flat(1).unwrap();
    let w = HermitianWeight::fock(1, 1.0).unwrap();
    let set =
        PointSet::new(lattice_disk(spacing, SWEEP_RADIUS).into_iter().map(|(x, y)| Point::c1(x, y)).collect()).unwrap();
    let grid = certificate_grid(spacing);
    RHO_CANDIDATES.iter().any(|&rho| theorem1_certificate(&w, &space, &set, rho, SWEEP_EPS, &grid).unwrap().passed)
}

#[derive(Debug, serde::Deserialize, serde::Serialize)]
pub struct DeltaStarFixture {
    pub alpha: f64,
    #[serde(rename = "R")]
    pub radius: f64,
    pub eps: f64,
    pub rho_candidates: Vec<f64>,
    pub spacings: Vec<f64>,
    pub passing_spacings: Vec<f64>,
    pub oracle_eig_min: Vec<f64>,
    pub delta_star: f64,
}

pub fn delta_star_fixture() -> DeltaStarFixture {
    serde_json::from_str(include_str!("../fixtures/delta_star.json")).expect("fixture parses")
}
