//! Named built-in curvature fields and circle maps.
//!
//! Curvature: `constant:<v>` and `radial-bump:<depth>,<width>`, the latter
//! being `k = -1 - (depth - 1) exp(-width r²/(1 - r²))` (equal to `-depth` at
//! the centre and tending to `-1` at the boundary).
//!
//! Circle maps: `identity`, `sine:<a>` (`θ + a sin θ`), `mobius:<a>,<b>,<c>,<d>`
//! (a half-plane matrix) and `piecewise:<θ>:<v>,<θ>:<v>,...` (breakpoints of a
//! piecewise-linear lift).

use std::sync::Arc;

use num_complex::Complex64;

use crate::circle::{CircleMap, MobiusTransform};
use crate::error::{Error, Result};
use crate::grid::{DiskGrid, ScalarField};

fn numbers(spec: &str, args: &str, want: usize) -> Result<Vec<f64>> {
    let v: Vec<f64> = args
        .split(',')
        .map(|s| s.trim().parse::<f64>().map_err(|e| Error::Parse(format!("{spec:?}: {e}"))))
        .collect::<Result<_>>()?;
    if v.len() != want {
        return Err(Error::Parse(format!("{spec:?}: expected {want} numbers, found {}", v.len())));
    }
    Ok(v)
}

pub fn radial_bump(depth: f64, width: f64) -> impl Fn(Complex64) -> f64 {
    move |z| {
        let r2 = z.norm_sqr();
        -1.0 - (depth - 1.0) * (-width * r2 / (1.0 - r2)).exp()
    }
}

/// Built-in curvature field on `grid`, or `None` if `spec` is not a built-in.
pub fn builtin_curvature(spec: &str, grid: &Arc<DiskGrid>) -> Result<Option<ScalarField>> {
    let Some((name, args)) = spec.split_once(':') else { return Ok(None) };
    match name {
        "constant" => {
            let v = numbers(spec, args, 1)?[0];
            if !(v < 0.0) {
                return Err(Error::Parse(format!("{spec:?}: curvature must be negative")));
            }
            Ok(Some(ScalarField::constant(grid.clone(), v)))
        }
        "radial-bump" => {
            let v = numbers(spec, args, 2)?;
            if !(v[0] >= 1.0 && v[1] > 0.0) {
                return Err(Error::Parse(format!("{spec:?}: need depth >= 1 and width > 0")));
            }
            Ok(Some(ScalarField::from_fn(grid.clone(), radial_bump(v[0], v[1]))))
        }
        _ => Ok(None),
    }
}

/// Built-in circle map with `n_s` samples, or `None` if `spec` is not a
/// built-in.
pub fn builtin_circle_map(spec: &str, n_s: usize) -> Result<Option<CircleMap>> {
    if spec == "identity" {
        return Ok(Some(CircleMap::identity(n_s)));
    }
    let Some((name, args)) = spec.split_once(':') else { return Ok(None) };
    let map = match name {
        "sine" => CircleMap::sine(numbers(spec, args, 1)?[0], n_s)?,
        "mobius" => {
            let m = numbers(spec, args, 4)?;
            CircleMap::mobius(&MobiusTransform::from_half_plane(m[0], m[1], m[2], m[3])?, n_s)?
        }
        "piecewise" => {
            let pts: Vec<(f64, f64)> = args
                .split(',')
                .map(|pair| {
                    let (a, b) = pair
                        .split_once(':')
                        .ok_or_else(|| Error::Parse(format!("{spec:?}: breakpoints are <theta>:<value>")))?;
                    let p = |s: &str| s.trim().parse::<f64>().map_err(|e| Error::Parse(format!("{spec:?}: {e}")));
                    Ok((p(a)?, p(b)?))
                })
                .collect::<Result<_>>()?;
            CircleMap::piecewise(&pts, n_s)?
        }
        _ => return Ok(None),
    };
    Ok(Some(map))
}
