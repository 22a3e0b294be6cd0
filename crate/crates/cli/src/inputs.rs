use std::fs;
use std::path::Path;

use holo_interp::geometry::ModelSpace;
use holo_interp::grid::GridSpec;
use holo_interp::pointset::{PointRepr, PointSet, PointSetFile};
use holo_interp::rkhs::KernelSpace;
use holo_interp::weights::{Builtin, HermitianWeight, WeightSpec};
use holo_interp::Point;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::de::DeserializeOwned;
use serde::Deserialize;

use crate::CliError;

/// Reads `arg` as inline JSON when it starts with `{` or `[`, otherwise as a file path.
fn read_json<T: DeserializeOwned>(what: &str, arg: &str) -> Result<T, CliError> {
    let trimmed = arg.trim_start();
    let (source, text) = if trimmed.starts_with('{') || trimmed.starts_with('[') {
        ("inline argument".to_string(), arg.to_string())
    } else {
        let text = fs::read_to_string(Path::new(arg))
            .map_err(|e| CliError::Input(format!("cannot read {what} file `{arg}`: {e}")))?;
        (format!("`{arg}`"), text)
    };
    serde_json::from_str(&text).map_err(|e| {
        CliError::Input(format!("malformed {what} JSON in {source} at line {} column {}: {e}", e.line(), e.column()))
    })
}

pub fn load_space(arg: Option<&str>) -> Result<Option<ModelSpace>, CliError> {
    arg.map(|a| read_json("space", a)).transpose()
}

pub fn load_points(arg: &str) -> Result<(Option<ModelSpace>, PointSet), CliError> {
    let file: PointSetFile = read_json("point set", arg)?;
    Ok(file.into_point_set()?)
}

/// Space from `--space`, else from the point file; the two must agree when both are given.
pub fn resolve_space(space_arg: Option<&str>, points_arg: Option<&str>) -> Result<(ModelSpace, PointSet), CliError> {
    let explicit = load_space(space_arg)?;
    let (embedded, set) = match points_arg {
        Some(p) => load_points(p)?,
        None => (None, PointSet::empty()),
    };
    let space = match (explicit, embedded) {
        (Some(a), Some(b)) if a != b => {
            return Err(CliError::Input("--space disagrees with the space stored in the point file".into()))
        }
        (Some(a), _) => a,
        (None, Some(b)) => b,
        (None, None) => {
            return Err(CliError::Input("no space given: pass --space or embed it in the point file".into()))
        }
    };
    set.check_in(&space)?;
    Ok((space, set))
}

pub fn load_weight(arg: Option<&str>, space: &ModelSpace) -> Result<HermitianWeight, CliError> {
    let arg = arg.ok_or_else(|| CliError::Input("--weight is required for this command".into()))?;
    let spec: WeightSpec = read_json("weight", arg)?;
    Ok(spec.build(space)?)
}

pub fn kernel_space(w: &HermitianWeight, space: &ModelSpace) -> Result<KernelSpace, CliError> {
    match (w.builtin(), space.kappa()) {
        (Some(Builtin::Fock { alpha }), None) => Ok(KernelSpace::fock(space.n(), alpha)?),
        (Some(Builtin::Bergman { a, kappa }), Some(k)) if space.n() == 1 && kappa == k => {
            Ok(KernelSpace::bergman(a, kappa)?)
        }
        _ => Err(CliError::Input(
            "kernel computations need a builtin Fock weight on flat space or a Bergman weight on the hyperbolic disk"
                .into(),
        )),
    }
}

#[derive(Deserialize)]
#[serde(untagged)]
enum GridFile {
    Bare(Vec<PointRepr>),
    Wrapped(PointSetFile),
}

fn default_grid(space: &ModelSpace) -> GridSpec {
    match space.kappa() {
        Some(kappa) => GridSpec::Disk { radius: 0.9 * kappa, per_axis: 21 },
        None => GridSpec::Box { half_width: 2.0, per_axis: 21 },
    }
}

/// `box:H:M`, `disk:R:M` or a JSON list of points; optionally jittered with a seeded RNG.
pub fn load_grid(arg: Option<&str>, space: &ModelSpace, jitter: f64, seed: u64) -> Result<Vec<Point>, CliError> {
    let mut grid = match arg {
        None => default_grid(space).points(space.n()),
        Some(a) if a.starts_with("box:") || a.starts_with("disk:") => a.parse::<GridSpec>()?.points(space.n()),
        Some(a) => match read_json::<GridFile>("grid", a)? {
            GridFile::Bare(pts) => pts.iter().map(PointRepr::to_point).collect(),
            GridFile::Wrapped(f) => f.points.iter().map(PointRepr::to_point).collect(),
        },
    };
    if jitter < 0.0 || !jitter.is_finite() {
        return Err(CliError::Input(format!("--jitter must be a nonnegative number, got {jitter}")));
    }
    if jitter > 0.0 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        grid = grid
            .iter()
            .map(|p| {
                let x: Vec<f64> = p.to_real().iter().map(|v| v + rng.random_range(-jitter..=jitter)).collect();
                Point::from_real(&x)
            })
            .collect();
    }
    for p in &grid {
        space.check_point(p)?;
    }
    if grid.is_empty() {
        return Err(CliError::Input("sample grid is empty".into()));
    }
    Ok(grid)
}

pub fn parse_list(what: &str, arg: &str) -> Result<Vec<f64>, CliError> {
    arg.split(',')
        .map(|s| s.trim().parse::<f64>().map_err(|_| CliError::Input(format!("{what}: `{s}` is not a number"))))
        .collect()
}
