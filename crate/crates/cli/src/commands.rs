use std::fmt::Write as _;

use holo_interp::certificates::{
    bos_certificate, sci, theorem1_certificate_with_k, theorem2_certificate, CertificateReport, Conventions,
    SCHEMA_VERSION,
};
use holo_interp::construction::{dbar_energy, extension_norm_sqr, AuxiliaryWeight, GluedExtension, QuadratureSpec};
use holo_interp::geometry::{ball_volume_bound, complex_hessian_fd, hessian_comparison_factor, ModelSpace, Point};
use holo_interp::pointset::{separation, sup_density, PointSet};
use holo_interp::quadrature::polar_annulus_rule;
use holo_interp::rkhs::{feasibility_sweep, min_norm_interpolant};
use holo_interp::weights::frame_norm_bound_check;
use serde::Serialize;
use serde_json::{json, Value};

use crate::inputs::{kernel_space, load_grid, load_weight, parse_list, resolve_space};
use crate::{Args, CliError, Command};

/// Files produced by a command and the exit code it asks for.
pub struct Outcome {
    pub code: u8,
    pub artifacts: Vec<(String, String)>,
}

fn envelope(command: &str, space: &ModelSpace, body: Value) -> Value {
    let mut v = json!({
        "schema_version": SCHEMA_VERSION,
        "command": command,
        "conventions": Conventions::default(),
        "space": space,
    });
    if let (Value::Object(map), Value::Object(extra)) = (&mut v, body) {
        map.extend(extra);
    }
    v
}

fn to_json<T: Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("reports serialize");
    s.push('\n');
    s
}

fn point_columns(n: usize) -> String {
    (1..=n).map(|j| format!(",re_{j},im_{j}")).collect()
}

fn push_point(out: &mut String, p: &Point) {
    for c in p.coords() {
        let _ = write!(out, ",{},{}", sci(c.re), sci(c.im));
    }
}

fn require(name: &str, v: Option<f64>) -> Result<f64, CliError> {
    v.ok_or_else(|| CliError::Input(format!("--{name} is required for this command")))
}

fn quadrature(args: &Args) -> QuadratureSpec {
    QuadratureSpec { n_radial: args.n_radial, n_angular: args.n_angular }
}

fn certificate_outcome(report: CertificateReport) -> Outcome {
    Outcome {
        code: if report.passed { 0 } else { 1 },
        artifacts: vec![("certificate.json".into(), to_json(&report)), ("certificate.csv".into(), report.to_csv())],
    }
}

pub fn run(args: &Args) -> Result<Outcome, CliError> {
    let (space, set) = resolve_space(args.space.as_deref(), args.points.as_deref())?;
    match args.command {
        Command::Separation => {
            let r0 = match args.weight.as_deref() {
                Some(_) => load_weight(args.weight.as_deref(), &space)?.frame_radius(),
                None => None,
            };
            let rep = separation(&space, &set, r0)?;
            let body = json!({ "n_points": set.len(), "separation": rep });
            Ok(Outcome {
                code: 0,
                artifacts: vec![("separation.json".into(), to_json(&envelope("separation", &space, body)))],
            })
        }
        Command::Density => {
            let grid = load_grid(args.grid.as_deref(), &space, args.jitter, args.seed)?;
            let sup = sup_density(&space, &set, &grid, args.near_cutoff)?;
            let mut csv = format!("index{},density\n", point_columns(space.n()));
            for (i, (p, d)) in grid.iter().zip(&sup.per_sample).enumerate() {
                let _ = write!(csv, "{i}");
                push_point(&mut csv, p);
                let _ = writeln!(csv, ",{}", sci(*d));
            }
            let body = json!({
                "n_points": set.len(),
                "near_cutoff": args.near_cutoff,
                "n_samples": grid.len(),
                "density_sup": sup.value,
                "argmax": sup.argmax,
                "argmax_point": sup.point,
            });
            Ok(Outcome {
                code: 0,
                artifacts: vec![
                    ("density.json".into(), to_json(&envelope("density", &space, body))),
                    ("density.csv".into(), csv),
                ],
            })
        }
        Command::CertifyBos => {
            let w = load_weight(args.weight.as_deref(), &space)?;
            let grid = load_grid(args.grid.as_deref(), &space, args.jitter, args.seed)?;
            let rep = bos_certificate(&w, &space, &set, require("rho", args.rho)?, require("eps", args.eps)?, &grid)?;
            Ok(certificate_outcome(rep))
        }
        Command::CertifyT1 => {
            let w = load_weight(args.weight.as_deref(), &space)?;
            let grid = load_grid(args.grid.as_deref(), &space, args.jitter, args.seed)?;
            let k = args.k.unwrap_or(space.k());
            let rep = theorem1_certificate_with_k(
                &w,
                &space,
                &set,
                require("rho", args.rho)?,
                require("eps", args.eps)?,
                &grid,
                k,
            )?;
            Ok(certificate_outcome(rep))
        }
        Command::CertifyT2 => {
            let w = load_weight(args.weight.as_deref(), &space)?;
            let grid = load_grid(args.grid.as_deref(), &space, args.jitter, args.seed)?;
            let rep = theorem2_certificate(
                &w,
                &space,
                &set,
                require("eps", args.eps)?,
                &grid,
                args.cutoff,
                args.near_cutoff,
            )?;
            Ok(certificate_outcome(rep))
        }
        Command::Construct => construct(args, space, set),
        Command::Interpolate => {
            let w = load_weight(args.weight.as_deref(), &space)?;
            let kernel = kernel_space(&w, &space)?;
            let f = min_norm_interpolant(&kernel, &set)?;
            let coefficients: Vec<[f64; 2]> = f.scaled_coefficients.iter().map(|c| [c.re, c.im]).collect();
            let body = json!({
                "kernel": kernel,
                "n_points": set.len(),
                "eig_min": f.eig_min,
                "norm_sqr": f.norm_sqr,
                "relative_residual": f.relative_residual,
                "weighted_residual": f.weighted_residual,
                "coefficient_scaling": "c_j = b_j exp(-log_scale) / sqrt(K(p_j, p_j))",
                "log_scale": f.log_scale,
                "scaled_coefficients": coefficients,
            });
            let mut artifacts = vec![("interpolant.json".into(), to_json(&envelope("interpolate", &space, body)))];
            if args.grid.is_some() {
                let grid = load_grid(args.grid.as_deref(), &space, args.jitter, args.seed)?;
                let mut csv = format!("index{},re,im\n", point_columns(space.n()));
                for (i, p) in grid.iter().enumerate() {
                    let v = f.evaluate(p)?;
                    let _ = write!(csv, "{i}");
                    push_point(&mut csv, p);
                    let _ = writeln!(csv, ",{},{}", sci(v.re), sci(v.im));
                }
                artifacts.push(("interpolant.csv".into(), csv));
            }
            Ok(Outcome { code: 0, artifacts })
        }
        Command::Sweep => {
            let w = load_weight(args.weight.as_deref(), &space)?;
            let kernel = kernel_space(&w, &space)?;
            let spacings = parse_list("--spacings", &args.spacings)?;
            let radii = parse_list("--radii", &args.radii)?;
            let table = feasibility_sweep(&kernel, &spacings, &radii)?;
            let body = json!({ "kernel": kernel, "monotone": table.monotone, "rows": table.rows });
            Ok(Outcome {
                code: 0,
                artifacts: vec![
                    ("sweep.json".into(), to_json(&envelope("sweep", &space, body))),
                    ("sweep.csv".into(), table.to_csv()),
                ],
            })
        }
        Command::VerifyGeometry => verify_geometry(args, &space, &set),
    }
}

fn construct(args: &Args, space: ModelSpace, set: PointSet) -> Result<Outcome, CliError> {
    let w = load_weight(args.weight.as_deref(), &space)?;
    let g = GluedExtension::new(set, w, space.clone(), args.delta0)?;
    let rho = args.rho.unwrap_or(2.0 * g.delta0());
    let v = AuxiliaryWeight::new(PointSet::new(g.set().points().to_vec())?, space.clone(), rho)?;
    let spec = quadrature(args);
    let energy = dbar_energy(&g, &v, spec)?;
    let norm = extension_norm_sqr(&g, spec)?;
    let mut frame = Vec::with_capacity(g.set().len());
    for p in g.set().points() {
        let samples: Vec<Point> =
            polar_annulus_rule(&space, p, 0.0, g.delta0(), 8, 16).into_iter().map(|(z, _)| z).collect();
        frame.push(frame_norm_bound_check(g.weight(), &space, p, g.delta0(), &samples)?);
    }
    let grid = load_grid(args.grid.as_deref(), &space, args.jitter, args.seed)?;
    let mut csv = format!("index{},re,im\n", point_columns(space.n()));
    for (i, z) in grid.iter().enumerate() {
        let f = g.evaluate(z)?;
        let _ = write!(csv, "{i}");
        push_point(&mut csv, z);
        let _ = writeln!(csv, ",{},{}", sci(f.re), sci(f.im));
    }
    let body = json!({
        "n_points": g.set().len(),
        "delta0": g.delta0(),
        "rho": rho,
        "separation": g.separation(),
        "dbar_energy": energy,
        "extension_norm": norm,
        "frame_constant": g.weight().frame_constant(g.delta0()),
        "frame_check_passed": frame.iter().all(|f| f.passed),
        "frame_worst_ratio": frame.iter().map(|f| f.worst_ratio).fold(f64::NEG_INFINITY, f64::max),
    });
    Ok(Outcome {
        code: 0,
        artifacts: vec![
            ("energy.json".into(), to_json(&envelope("construct", &space, body))),
            ("extension.csv".into(), csv),
        ],
    })
}

#[derive(Serialize)]
struct ComparisonSample {
    distance: f64,
    eigen_max: f64,
    factor: f64,
    passed: bool,
}

/// Compares FD `i∂∂̄ d(p, ·)²` with the comparison factor along a geodesic ray, FD
/// Ricci with its closed form, and the polar quadrature volume with the model volume.
fn verify_geometry(args: &Args, space: &ModelSpace, set: &PointSet) -> Result<Outcome, CliError> {
    let p = set.points().first().cloned().unwrap_or_else(|| Point::origin(space.n()));
    let d_max = args.rho.unwrap_or(3.0);
    let samples = args.samples.max(2);
    let mut dir = vec![0.0; 2 * space.n()];
    dir[0] = 1.0;
    let mut comparison = Vec::with_capacity(samples);
    for i in 0..samples {
        let d = 0.1 + (d_max - 0.1) * i as f64 / (samples - 1) as f64;
        let z = space.geodesic_point(&p, d, &dir);
        let hess = complex_hessian_fd(|x| Ok(space.distance(&p, x)?.powi(2)), &z, None)?;
        let eigs = space.relative_eigenvalues(&z, &hess);
        let eigen_max = eigs[eigs.len() - 1];
        let factor = hessian_comparison_factor(space.k(), d)?;
        comparison.push(ComparisonSample {
            distance: d,
            eigen_max,
            factor,
            passed: eigen_max <= factor * (1.0 + 1e-4),
        });
    }
    let n = space.n() as f64;
    let z = space.geodesic_point(&p, 0.5 * d_max, &dir);
    let ricci_fd = complex_hessian_fd(|x| Ok(-n * space.conformal_factor(x).ln()), &z, None)?;
    let ricci_fd_min = space.relative_eigenvalues(&z, &ricci_fd)[0];
    let ricci_exact = space.relative_eigenvalues(&z, &space.ricci_form(&z))[0];
    let ricci_passed = (ricci_fd_min - ricci_exact).abs() <= 1e-5 * ricci_exact.abs().max(1.0);
    let radius = 1.0;
    let volume: f64 = polar_annulus_rule(space, &p, 0.0, radius, 200, 32).iter().map(|(_, w)| w).sum();
    let model = ball_volume_bound(space.k(), radius, 2 * space.n())?;
    let volume_passed = volume <= model * (1.0 + 1e-3);
    let passed = comparison.iter().all(|c| c.passed) && ricci_passed && volume_passed;
    let body = json!({
        "center": p,
        "passed": passed,
        "comparison": comparison,
        "ricci": { "point": z, "fd_min": ricci_fd_min, "closed_form_min": ricci_exact, "passed": ricci_passed },
        "volume": { "radius": radius, "quadrature": volume, "model_bound": model, "passed": volume_passed },
    });
    Ok(Outcome {
        code: if passed { 0 } else { 1 },
        artifacts: vec![("geometry.json".into(), to_json(&envelope("verify-geometry", space, body)))],
    })
}
