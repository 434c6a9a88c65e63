use rand::Rng;

use super::{Viewpoint, ViewpointSource};
use crate::error::{Error, Result};
use crate::geometry::{CameraPose, Point3, Vector3};
use crate::rng::SimRng;

/// Unit vector uniform on the spherical cap of half-angle `cone` around `axis`.
fn sample_cap(axis: &Vector3, cone: f64, rng: &mut SimRng) -> Vector3 {
    let a = axis.normalize();
    let pose = CameraPose::looking_along(Point3::origin(), &a);
    let (l, u) = (pose.left(), pose.up());
    let cos_t = rng.random_range(cone.cos()..=1.0);
    let sin_t = (1.0 - cos_t * cos_t).max(0.0).sqrt();
    let phi = rng.random_range(0.0..std::f64::consts::TAU);
    (a * cos_t + (l * phi.cos() + u * phi.sin()) * sin_t).normalize()
}

/// Each base viewpoint followed by `per_view` copies whose optical axes are
/// drawn uniformly from a cap of half-angle `cone_half_angle` around it.
pub fn perturbed_grid(
    base: &[Viewpoint],
    cone_half_angle: f64,
    per_view: usize,
    rng: &mut SimRng,
) -> Result<Vec<Viewpoint>> {
    if !(cone_half_angle > 0.0 && cone_half_angle < std::f64::consts::FRAC_PI_2) {
        return Err(Error::Config("cone half-angle must lie in (0, pi/2)".into()));
    }
    let mut out = Vec::with_capacity(base.len() * (per_view + 1));
    for v in base {
        out.push(*v);
        for _ in 0..per_view {
            let axis = sample_cap(&v.pose.forward(), cone_half_angle, rng);
            out.push(Viewpoint::new(
                CameraPose::looking_along(v.pose.position, &axis),
                ViewpointSource::GridPerturbed,
            ));
        }
    }
    Ok(out)
}

/// `n` poses uniform in volume over the half shell
/// `{p : min <= |p - c| <= max, (p - c) · facing >= 0}`, each looking at `c`.
pub fn hemisphere_sample(
    centroid: &Point3,
    facing: &Vector3,
    radial_range: [f64; 2],
    n: usize,
    source: ViewpointSource,
    rng: &mut SimRng,
) -> Result<Vec<Viewpoint>> {
    let [lo, hi] = radial_range;
    if !(lo > 0.0 && lo <= hi) {
        return Err(Error::Config("radial range must satisfy 0 < min <= max".into()));
    }
    let f = facing.normalize();
    let (a, b) = (lo.powi(3), hi.powi(3));
    let mut out = Vec::with_capacity(n);
    for _ in 0..n {
        let z: f64 = rng.random_range(-1.0..=1.0);
        let phi = rng.random_range(0.0..std::f64::consts::TAU);
        let s = (1.0 - z * z).sqrt();
        let mut dir = Vector3::new(s * phi.cos(), s * phi.sin(), z);
        if dir.dot(&f) < 0.0 {
            dir = -dir;
        }
        let r = if b > a { rng.random_range(a..=b) } else { a }.cbrt();
        let pos = centroid + dir * r;
        out.push(Viewpoint::new(CameraPose::looking_at(pos, centroid), source));
    }
    Ok(out)
}
