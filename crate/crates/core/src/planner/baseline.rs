use super::{Viewpoint, ViewpointSource};
use crate::error::{Error, Result};
use crate::geometry::{plane_basis, CameraPose, Point3, Vector3};
use crate::map::RoiBounds;
use crate::scene::CameraModel;

/// Width and height of the view frustum cross-section at distance `d`.
pub fn footprint(camera: &CameraModel, d: f64) -> (f64, f64) {
    (
        2.0 * d * (camera.theta_h / 2.0).tan(),
        2.0 * d * (camera.theta_v / 2.0).tan(),
    )
}

/// Grid pitch for a footprint and overlap ratio `rho ∈ [0, 1)`.
pub fn grid_spacing(w: f64, h: f64, rho: f64) -> Result<(f64, f64)> {
    if !(0.0..1.0).contains(&rho) {
        return Err(Error::Config(format!("overlap {rho} must lie in [0, 1)")));
    }
    Ok((w * (1.0 - rho), h * (1.0 - rho)))
}

fn tiles(extent: f64, pitch: f64) -> usize {
    ((extent / pitch) - 1e-9).ceil().max(1.0) as usize
}

/// Midplane coverage grid in boustrophedon order.
///
/// The midplane passes through the ROI center orthogonal to
/// `view_direction`. Footprint centers are spaced by the overlap-adjusted
/// pitch and centred on the plane's extent, so the union of footprints
/// covers the whole projected ROI. Cameras sit `d` back along the view
/// direction. Rows run bottom to top and alternate direction.
pub fn baseline_grid(
    roi: &RoiBounds,
    camera: &CameraModel,
    d: f64,
    rho: f64,
    view_direction: &Vector3,
) -> Result<Vec<Viewpoint>> {
    if !(d > 0.0) {
        return Err(Error::Config("stand-off distance must be positive".into()));
    }
    if view_direction.norm() == 0.0 {
        return Err(Error::Config("view direction must be non-zero".into()));
    }
    let dir = view_direction.normalize();
    let (w, h) = footprint(camera, d);
    let (du, dv) = grid_spacing(w, h, rho)?;
    let (u, v) = plane_basis(&dir);
    let center = roi.center();

    let (mut u_lo, mut u_hi, mut v_lo, mut v_hi) = (f64::MAX, f64::MIN, f64::MAX, f64::MIN);
    let hi = roi.grid_max();
    for m in 0..8 {
        let corner = Point3::new(
            if m & 1 == 0 { roi.min_corner.x } else { hi.x },
            if m & 2 == 0 { roi.min_corner.y } else { hi.y },
            if m & 4 == 0 { roi.min_corner.z } else { hi.z },
        );
        let rel = corner - center;
        u_lo = u_lo.min(rel.dot(&u));
        u_hi = u_hi.max(rel.dot(&u));
        v_lo = v_lo.min(rel.dot(&v));
        v_hi = v_hi.max(rel.dot(&v));
    }
    let (cols, rows) = (tiles(u_hi - u_lo, du), tiles(v_hi - v_lo, dv));
    let u_mid = 0.5 * (u_lo + u_hi);
    let v_mid = 0.5 * (v_lo + v_hi);

    let mut out = Vec::with_capacity(rows * cols);
    for r in 0..rows {
        let vc = v_mid + (r as f64 - (rows - 1) as f64 / 2.0) * dv;
        for i in 0..cols {
            // plane_basis `u` points left when looking along `dir`, so
            // decreasing u runs left to right.
            let c = if r % 2 == 0 { i } else { cols - 1 - i };
            let uc = u_mid - (c as f64 - (cols - 1) as f64 / 2.0) * du;
            let on_plane = center + u * uc + v * vc;
            let pose = CameraPose::looking_along(on_plane - dir * d, &dir);
            out.push(Viewpoint::new(pose, ViewpointSource::Grid));
        }
    }
    Ok(out)
}
