//! Scattering geometry.
//!
//! The tracker approximates the EO by a circle. Toward each receiving anchor
//! the scatterers are summarized by a Gaussian "scattering ellipse" centered on
//! the circle, oriented along its tangent, with a semi-major axis fixed by the
//! opening angle and a semi-minor axis taken from the extent state.
//!
//! The data generator instead samples scatterers from an ideal model: points
//! on an elliptical EO boundary inside the sector facing the anchor, jittered
//! along the boundary normal.

use std::f64::consts::FRAC_PI_2;

use nalgebra::{Matrix2, Rotation2};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::types::{wrap_angle, ExtentGeo, ExtentIdeal, Vec2};

/// Which side of the circle the scattering ellipse sits on.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AspectSign {
    /// On the side facing the receiving anchor.
    #[default]
    TowardAnchor,
    /// On the far side, i.e. the angle of `p - anchor`.
    AwayFromAnchor,
}

/// Angle of the direction from `p` toward `anchor`.
pub fn aspect_angle(p: &Vec2, anchor: &Vec2) -> Result<f64> {
    aspect_angle_signed(p, anchor, AspectSign::TowardAnchor)
}

pub fn aspect_angle_signed(p: &Vec2, anchor: &Vec2, sign: AspectSign) -> Result<f64> {
    let d = anchor - p;
    if d.norm_squared() == 0.0 || !d.iter().all(|v| v.is_finite()) {
        return Err(Error::DegenerateGeometry("EO center coincides with an anchor"));
    }
    Ok(match sign {
        AspectSign::TowardAnchor => d.y.atan2(d.x),
        AspectSign::AwayFromAnchor => (-d.y).atan2(-d.x),
    })
}

pub fn ellipse_center(p: &Vec2, radius: f64, phi: f64) -> Vec2 {
    p + Vec2::new(phi.cos(), phi.sin()) * radius
}

/// Half-chord of the arc of radius `radius` that subtends `opening_angle`.
pub fn semi_major_axis(radius: f64, opening_angle: f64) -> f64 {
    radius * (0.5 * opening_angle).sin()
}

/// Tangent direction of the circle at aspect angle `phi`.
pub fn ellipse_orientation(phi: f64) -> f64 {
    wrap_angle(phi + FRAC_PI_2)
}

/// Gaussian scattering ellipse toward one anchor.
///
/// `covariance = A(orientation) · diag((l/2)², (w/2)²) · A(orientation)ᵀ`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ScatterEllipse {
    pub center: Vec2,
    pub orientation: f64,
    pub semi_major: f64,
    pub semi_minor: f64,
    pub covariance: Matrix2<f64>,
}

impl ScatterEllipse {
    /// Assembles the ellipse. If `semi_major < semi_minor` the axes are
    /// swapped and the orientation turned by π/2, which leaves the covariance
    /// unchanged.
    pub fn new(center: Vec2, orientation: f64, semi_major: f64, semi_minor: f64) -> Self {
        let (orientation, semi_major, semi_minor) = if semi_major < semi_minor {
            (wrap_angle(orientation + FRAC_PI_2), semi_minor, semi_major)
        } else {
            (wrap_angle(orientation), semi_major, semi_minor)
        };
        let rot = *Rotation2::new(orientation).matrix();
        let e = Matrix2::from_diagonal(&Vec2::new(
            (0.5 * semi_major).powi(2),
            (0.5 * semi_minor).powi(2),
        ));
        let mut covariance = rot * e * rot.transpose();
        // exact symmetry
        let off = 0.5 * (covariance[(0, 1)] + covariance[(1, 0)]);
        covariance[(0, 1)] = off;
        covariance[(1, 0)] = off;
        Self {
            center,
            orientation,
            semi_major,
            semi_minor,
            covariance,
        }
    }

    pub fn major_direction(&self) -> Vec2 {
        Vec2::new(self.orientation.cos(), self.orientation.sin())
    }

    pub fn minor_direction(&self) -> Vec2 {
        Vec2::new(-self.orientation.sin(), self.orientation.cos())
    }

    /// Standard deviations along the major and minor axes.
    pub fn principal_std(&self) -> (f64, f64) {
        (0.5 * self.semi_major, 0.5 * self.semi_minor)
    }
}

/// Scattering ellipse of a circular EO at `p` toward the anchor at `anchor`.
pub fn build_ellipse(
    p: &Vec2,
    extent: &ExtentGeo,
    anchor: &Vec2,
    opening_angle: f64,
    sign: AspectSign,
) -> Result<ScatterEllipse> {
    let phi = aspect_angle_signed(p, anchor, sign)?;
    Ok(ScatterEllipse::new(
        ellipse_center(p, extent.radius, phi),
        ellipse_orientation(phi),
        semi_major_axis(extent.radius, opening_angle),
        extent.width,
    ))
}

/// Draws a scatterer from `N(center, covariance)`.
pub fn sample_geo_scatterer<R: Rng + ?Sized>(ellipse: &ScatterEllipse, rng: &mut R) -> Vec2 {
    let (s1, s2) = ellipse.principal_std();
    let n1: f64 = rng.sample(StandardNormal);
    let n2: f64 = rng.sample(StandardNormal);
    ellipse.center + ellipse.major_direction() * (s1 * n1) + ellipse.minor_direction() * (s2 * n2)
}

/// A scatterer of the ideal model together with the polar angle of the
/// boundary point it was jittered from.
#[derive(Clone, Copy, Debug)]
pub(crate) struct IdealDraw {
    pub point: Vec2,
    #[allow(dead_code)]
    pub sector_angle: f64,
}

pub(crate) fn draw_ideal<R: Rng + ?Sized>(
    p: &Vec2,
    extent: &ExtentIdeal,
    phi: f64,
    opening_angle: f64,
    rng: &mut R,
) -> IdealDraw {
    let half = 0.5 * opening_angle;
    let sector_angle = phi + rng.random_range(-half..=half);
    let (s, c) = sector_angle.sin_cos();
    let (a, b) = (extent.semi_major, extent.semi_minor);
    let rho = a * b / ((b * c).powi(2) + (a * s).powi(2)).sqrt();
    let on_boundary = Vec2::new(rho * c, rho * s);
    // gradient of x²/a² + y²/b²
    let normal = Vec2::new(on_boundary.x / (a * a), on_boundary.y / (b * b)).normalize();
    let jitter: f64 = rng.sample(StandardNormal);
    IdealDraw {
        point: p + on_boundary + normal * (0.5 * extent.width * jitter),
        sector_angle,
    }
}

/// Draws a scatterer of the ideal model: a point on the boundary of the EO
/// ellipse centered at `p`, uniform in polar angle over the sector of width
/// `opening_angle` around `phi`, displaced along the boundary normal by
/// `N(0, (width/2)²)`.
pub fn sample_ideal_scatterer<R: Rng + ?Sized>(
    p: &Vec2,
    extent: &ExtentIdeal,
    phi: f64,
    opening_angle: f64,
    rng: &mut R,
) -> Vec2 {
    draw_ideal(p, extent, phi, opening_angle, rng).point
}

#[cfg(test)]
mod tests {
    use std::f64::consts::PI;

    use nalgebra::SymmetricEigen;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    use super::*;

    const OMEGA: f64 = 2.0 * PI / 3.0;

    #[test]
    fn aspect_angle_examples() {
        let o = Vec2::zeros();
        assert_eq!(aspect_angle(&o, &Vec2::new(1.0, 0.0)).unwrap(), 0.0);
        assert!((aspect_angle(&o, &Vec2::new(0.0, 5.0)).unwrap() - PI / 2.0).abs() < 1e-15);
        let phi = aspect_angle(&Vec2::new(1.0, 1.0), &Vec2::new(4.0, 4.5)).unwrap();
        assert!((phi - 0.86217).abs() < 1e-5);
    }

    #[test]
    fn aspect_sign_flips_by_pi() {
        let p = Vec2::new(1.0, 1.0);
        let a = Vec2::new(4.0, 4.5);
        let t = aspect_angle_signed(&p, &a, AspectSign::TowardAnchor).unwrap();
        let f = aspect_angle_signed(&p, &a, AspectSign::AwayFromAnchor).unwrap();
        assert!((wrap_angle(t - f).abs() - PI).abs() < 1e-12);
    }

    #[test]
    fn coincident_anchor_is_rejected() {
        let p = Vec2::new(2.0, 3.0);
        assert!(matches!(aspect_angle(&p, &p), Err(Error::DegenerateGeometry(_))));
        let x = ExtentGeo::new(0.3, 0.1);
        assert!(build_ellipse(&p, &x, &p, OMEGA, AspectSign::TowardAnchor).is_err());
    }

    #[test]
    fn ellipse_center_examples() {
        let c = ellipse_center(&Vec2::zeros(), 0.3, 0.0);
        assert!((c - Vec2::new(0.3, 0.0)).norm() < 1e-15);
        let c = ellipse_center(&Vec2::new(2.0, 2.0), 0.3, PI);
        assert!((c - Vec2::new(1.7, 2.0)).norm() < 1e-15);
    }

    #[test]
    fn semi_major_axis_examples() {
        assert!((semi_major_axis(0.3, PI) - 0.3).abs() < 1e-15);
        assert!((semi_major_axis(0.3, OMEGA) - 0.25981).abs() < 1e-5);
        let mut prev = f64::INFINITY;
        for k in (1..=50).rev() {
            let l = semi_major_axis(0.3, PI * k as f64 / 50.0);
            assert!(l < prev);
            prev = l;
        }
        assert!(semi_major_axis(0.3, 1e-9) < 1e-9);
    }

    #[test]
    fn orientation_examples() {
        assert!((ellipse_orientation(0.0) - PI / 2.0).abs() < 1e-15);
        assert!((ellipse_orientation(PI / 2.0) - PI).abs() < 1e-15);
    }

    #[test]
    fn build_ellipse_facing_anchor() {
        let x = ExtentGeo::new(0.3, 0.1);
        let e = build_ellipse(
            &Vec2::zeros(),
            &x,
            &Vec2::new(10.0, 0.0),
            OMEGA,
            AspectSign::TowardAnchor,
        )
        .unwrap();
        assert!((e.center - Vec2::new(0.3, 0.0)).norm() < 1e-12);
        assert!((e.orientation - PI / 2.0).abs() < 1e-12);
        assert!((e.semi_major - 0.25981).abs() < 1e-5);
        assert_eq!(e.semi_minor, 0.1);

        let e = build_ellipse(
            &Vec2::zeros(),
            &x,
            &Vec2::new(10.0, 0.0),
            OMEGA,
            AspectSign::AwayFromAnchor,
        )
        .unwrap();
        assert!((e.center - Vec2::new(-0.3, 0.0)).norm() < 1e-12);
        assert!((e.orientation + PI / 2.0).abs() < 1e-12);
    }

    #[test]
    fn axes_swap_when_width_dominates() {
        let e = build_ellipse(
            &Vec2::zeros(),
            &ExtentGeo::new(0.05, 0.3),
            &Vec2::new(0.0, 10.0),
            OMEGA,
            AspectSign::TowardAnchor,
        )
        .unwrap();
        assert!(e.semi_major >= e.semi_minor);
        assert_eq!(e.semi_major, 0.3);
        // the wide axis now points radially, toward the anchor
        assert!(e.major_direction().x.abs() < 1e-12);
        let eig = SymmetricEigen::new(e.covariance);
        let mut ev = [eig.eigenvalues[0], eig.eigenvalues[1]];
        ev.sort_by(f64::total_cmp);
        assert!((ev[1] - 0.15f64.powi(2)).abs() < 1e-12);
    }

    #[test]
    fn geo_sampler_matches_moments() {
        let e = ScatterEllipse::new(Vec2::new(1.0, -2.0), 0.7, 0.4, 0.1);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let n = 100_000;
        let draws: Vec<Vec2> = (0..n).map(|_| sample_geo_scatterer(&e, &mut rng)).collect();
        let mean = draws.iter().sum::<Vec2>() / n as f64;
        for k in 0..2 {
            let sigma = e.covariance[(k, k)].sqrt();
            assert!((mean[k] - e.center[k]).abs() < 3.0 * sigma / (n as f64).sqrt());
        }
        let mut cov = Matrix2::zeros();
        for d in &draws {
            let r = d - mean;
            cov += r * r.transpose();
        }
        cov /= (n - 1) as f64;
        assert!((cov - e.covariance).norm() / e.covariance.norm() < 0.05);
    }

    #[test]
    fn geo_sampler_collapses_onto_major_axis() {
        let e = ScatterEllipse::new(Vec2::new(0.5, 0.5), 0.3, 0.4, 1e-12);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..1000 {
            let q = sample_geo_scatterer(&e, &mut rng);
            assert!((q - e.center).dot(&e.minor_direction()).abs() < 1e-10);
        }
    }

    #[test]
    fn ideal_sampler_on_circle_without_width() {
        let p = Vec2::new(1.0, 2.0);
        let x = ExtentIdeal::circle(0.3, 1e-12);
        let phi = 0.4;
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..10_000 {
            let q = sample_ideal_scatterer(&p, &x, phi, OMEGA, &mut rng);
            assert!(((q - p).norm() - 0.3).abs() < 1e-10);
            let ang = (q - p).y.atan2((q - p).x);
            assert!(wrap_angle(ang - phi).abs() <= OMEGA / 2.0 + 1e-9);
        }
    }

    #[test]
    fn ideal_sampler_stays_in_sector() {
        let p = Vec2::zeros();
        let x = ExtentIdeal::new(0.3, 0.2, 0.1);
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        for phi in [-2.5, -0.3, 0.0, 1.2, 3.1] {
            for _ in 0..10_000 {
                let d = draw_ideal(&p, &x, phi, OMEGA, &mut rng);
                assert!(wrap_angle(d.sector_angle - phi).abs() <= PI / 3.0 + 1e-12);
            }
        }
    }

    #[test]
    fn ideal_sampler_spread_about_boundary() {
        // on a circle the normal offset is the radial offset
        let p = Vec2::zeros();
        let x = ExtentIdeal::circle(0.3, 0.1);
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let n = 100_000;
        let offsets: Vec<f64> = (0..n)
            .map(|_| sample_ideal_scatterer(&p, &x, 0.0, OMEGA, &mut rng).norm() - 0.3)
            .collect();
        let mean = offsets.iter().sum::<f64>() / n as f64;
        let sd = (offsets.iter().map(|o| (o - mean).powi(2)).sum::<f64>() / n as f64).sqrt();
        assert!(mean.abs() < 1e-3);
        assert!((sd - 0.05).abs() / 0.05 < 0.02, "sd = {sd}");
    }

    fn sorted_eigenvalues(m: &Matrix2<f64>) -> [f64; 2] {
        let eig = SymmetricEigen::new(*m);
        let mut ev = [eig.eigenvalues[0], eig.eigenvalues[1]];
        ev.sort_by(|a, b| b.total_cmp(a));
        ev
    }

    proptest! {
        #[test]
        fn ellipse_invariants(px in -10.0..10.0f64, py in -10.0..10.0f64,
                              ax in -10.0..10.0f64, ay in -10.0..10.0f64,
                              r in 0.01..1.0f64, w in 0.005..0.5f64, omega in 0.05..PI) {
            let p = Vec2::new(px, py);
            let a = Vec2::new(ax, ay);
            prop_assume!((a - p).norm() > 1e-3);
            let e = build_ellipse(&p, &ExtentGeo::new(r, w), &a, omega, AspectSign::TowardAnchor).unwrap();
            prop_assert!(((e.center - p).norm() - r).abs() < 1e-12);
            prop_assert!(e.semi_major >= e.semi_minor);
            prop_assert_eq!(e.covariance[(0, 1)], e.covariance[(1, 0)]);
            let ev = sorted_eigenvalues(&e.covariance);
            prop_assert!((ev[0] - (e.semi_major / 2.0).powi(2)).abs() < 1e-9);
            prop_assert!((ev[1] - (e.semi_minor / 2.0).powi(2)).abs() < 1e-9);
            if e.semi_major > e.semi_minor * (1.0 + 1e-6) {
                let v = e.covariance * e.major_direction();
                let lam = (e.semi_major / 2.0).powi(2);
                prop_assert!((v - e.major_direction() * lam).norm() < 1e-9);
            }
            // tangency when the axes were not swapped
            let l = semi_major_axis(r, omega);
            if l >= w {
                prop_assert!((e.center - p).dot(&e.major_direction()).abs() < 1e-12);
            }
        }

        #[test]
        fn semi_major_is_monotone(r in 0.01..1.0f64, dr in 1e-3..0.5f64,
                                  omega in 0.01..3.0f64, domega in 1e-3..0.1f64) {
            prop_assert!(semi_major_axis(r + dr, omega) > semi_major_axis(r, omega));
            let o2 = (omega + domega).min(PI);
            prop_assert!(semi_major_axis(r, o2) > semi_major_axis(r, omega));
        }

        #[test]
        fn ellipse_is_translation_equivariant(px in -10.0..10.0f64, py in -10.0..10.0f64,
                                              tx in -50.0..50.0f64, ty in -50.0..50.0f64,
                                              r in 0.05..1.0f64, w in 0.01..0.3f64) {
            let p = Vec2::new(px, py);
            let a = Vec2::new(4.0, 4.5);
            prop_assume!((a - p).norm() > 1e-2);
            let t = Vec2::new(tx, ty);
            let x = ExtentGeo::new(r, w);
            let e = build_ellipse(&p, &x, &a, OMEGA, AspectSign::TowardAnchor).unwrap();
            let et = build_ellipse(&(p + t), &x, &(a + t), OMEGA, AspectSign::TowardAnchor).unwrap();
            prop_assert!((et.center - e.center - t).norm() < 1e-9);
            prop_assert!((et.covariance - e.covariance).norm() < 1e-12);
        }
    }
}
