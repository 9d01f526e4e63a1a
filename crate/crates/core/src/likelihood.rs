//! Measurement likelihoods and association likelihood ratios.
//!
//! All densities are over the distance component of a measurement; the
//! amplitude only enters through the ranging variance. Object and clutter
//! hypotheses share the same amplitude marginal, so it cancels in every
//! likelihood ratio.

use std::f64::consts::PI;

use rand::Rng;

use crate::error::{Error, Result};
use crate::geometry::{self, AspectSign, ScatterEllipse};
use crate::types::{
    device_position, AugmentedState, BiasState, ExtentGeo, ExtentIdeal, KinematicState,
    Measurement, SceneConstants, Vec2,
};

const INV_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

/// Scaled unscented-transform parameters.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct UtParams {
    pub alpha: f64,
    pub beta: f64,
    pub kappa: f64,
}

impl Default for UtParams {
    fn default() -> Self {
        Self {
            alpha: 1.0,
            beta: 2.0,
            kappa: 0.0,
        }
    }
}

/// Sigma-point weights of the scaled UT for a given state dimension.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SigmaWeights {
    /// `sqrt(n + λ)`, the spread of the non-central points.
    pub spread: f64,
    pub mean_center: f64,
    pub cov_center: f64,
    /// Weight of every non-central point (mean and covariance alike).
    pub outer: f64,
}

impl UtParams {
    pub fn weights(&self, dim: usize) -> SigmaWeights {
        let n = dim as f64;
        let lambda = self.alpha * self.alpha * (n + self.kappa) - n;
        let mean_center = lambda / (n + lambda);
        SigmaWeights {
            spread: (n + lambda).sqrt(),
            mean_center,
            cov_center: mean_center + (1.0 - self.alpha * self.alpha + self.beta),
            outer: 1.0 / (2.0 * (n + lambda)),
        }
    }
}

/// Likelihood-ratio constants of the association model.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AssocConfig {
    /// Mean number of object-scatter measurements per passive link.
    pub mu_m: f64,
    /// Mean number of clutter measurements per link.
    pub mu_c: f64,
    /// Existence weight of the single LOS measurement per active link.
    pub mu_los: f64,
}

impl AssocConfig {
    pub fn new(consts: &SceneConstants, mu_los: f64) -> Self {
        Self {
            mu_m: consts.mu_m,
            mu_c: consts.mu_c,
            mu_los,
        }
    }
}

pub fn gaussian_pdf(x: f64, mean: f64, variance: f64) -> f64 {
    let z = x - mean;
    INV_SQRT_2PI / variance.sqrt() * (-0.5 * z * z / variance).exp()
}

/// Ranging variance from the Fisher information of a delay estimate at
/// amplitude (square-root SNR) `amplitude`.
pub fn ranging_variance(amplitude: f64, bandwidth: f64, speed_of_light: f64) -> f64 {
    speed_of_light * speed_of_light
        / (8.0 * PI * PI * bandwidth * bandwidth * amplitude * amplitude)
}

pub fn measurement_variance(z: &Measurement, consts: &SceneConstants) -> f64 {
    ranging_variance(z.amplitude, consts.bandwidth, consts.speed_of_light)
}

/// Transmitter → `q` → receiver path length.
pub fn bistatic_distance(q: &Vec2, tx: &Vec2, rx: &Vec2) -> f64 {
    (q - tx).norm() + (q - rx).norm()
}

/// Density of a LOS measurement given the EO kinematics and the device bias.
pub fn los_likelihood(
    z: &Measurement,
    x: &KinematicState,
    b: &BiasState,
    anchor: &Vec2,
    consts: &SceneConstants,
) -> f64 {
    let mean = (device_position(x, b) - anchor).norm();
    gaussian_pdf(z.distance, mean, measurement_variance(z, consts))
}

/// Variance of the bistatic distance induced by the scattering ellipse,
/// propagated with the unscented transform.
pub fn ut_delay_variance(
    ellipse: &ScatterEllipse,
    tx: &Vec2,
    rx: &Vec2,
    params: &UtParams,
) -> Result<f64> {
    if ellipse.center == *tx || ellipse.center == *rx {
        return Err(Error::DegenerateGeometry(
            "scattering ellipse center coincides with an anchor",
        ));
    }
    let w = params.weights(2);
    let (s1, s2) = ellipse.principal_std();
    let d1 = ellipse.major_direction() * (w.spread * s1);
    let d2 = ellipse.minor_direction() * (w.spread * s2);
    let c = ellipse.center;
    let y0 = bistatic_distance(&c, tx, rx);
    let outer = [
        bistatic_distance(&(c + d1), tx, rx),
        bistatic_distance(&(c - d1), tx, rx),
        bistatic_distance(&(c + d2), tx, rx),
        bistatic_distance(&(c - d2), tx, rx),
    ];
    let mean = w.mean_center * y0 + w.outer * outer.iter().sum::<f64>();
    let var = w.cov_center * (y0 - mean).powi(2)
        + w.outer * outer.iter().map(|y| (y - mean).powi(2)).sum::<f64>();
    Ok(var.max(0.0))
}

/// Mean and scattering variance of a passive measurement under the
/// geometry-based model, for the link `tx → EO → rx`.
pub fn geo_link_moments(
    x: &KinematicState,
    extent: &ExtentGeo,
    tx: &Vec2,
    rx: &Vec2,
    consts: &SceneConstants,
    ut: &UtParams,
    sign: AspectSign,
) -> Result<(f64, f64)> {
    let ellipse = geometry::build_ellipse(&x.position, extent, rx, consts.opening_angle, sign)?;
    Ok((
        bistatic_distance(&ellipse.center, tx, rx),
        ut_delay_variance(&ellipse, tx, rx, ut)?,
    ))
}

/// Density of a passive scatter measurement under the geometry-based model.
#[allow(clippy::too_many_arguments)]
pub fn geo_scatter_likelihood(
    z: &Measurement,
    x: &KinematicState,
    extent: &ExtentGeo,
    tx: &Vec2,
    rx: &Vec2,
    consts: &SceneConstants,
    ut: &UtParams,
    sign: AspectSign,
) -> Result<f64> {
    let (mean, scatter_var) = geo_link_moments(x, extent, tx, rx, consts, ut, sign)?;
    Ok(gaussian_pdf(
        z.distance,
        mean,
        measurement_variance(z, consts) + scatter_var,
    ))
}

/// Monte-Carlo density of a passive scatter measurement under the ideal
/// model: the noise density averaged over `samples` scatterers drawn from the
/// sector facing the receiver.
#[allow(clippy::too_many_arguments)]
pub fn ideal_scatter_likelihood<R: Rng + ?Sized>(
    z: &Measurement,
    x: &KinematicState,
    extent: &ExtentIdeal,
    tx: &Vec2,
    rx: &Vec2,
    consts: &SceneConstants,
    samples: usize,
    rng: &mut R,
) -> Result<f64> {
    let phi = geometry::aspect_angle(&x.position, rx)?;
    let var = measurement_variance(z, consts);
    let samples = samples.max(1);
    let sum: f64 = (0..samples)
        .map(|_| {
            let q = geometry::sample_ideal_scatterer(
                &x.position,
                extent,
                phi,
                consts.opening_angle,
                rng,
            );
            gaussian_pdf(z.distance, bistatic_distance(&q, tx, rx), var)
        })
        .sum();
    Ok(sum / samples as f64)
}

/// Uniform clutter density over `[0, d_max]`; zero outside the support.
pub fn clutter_density(z: &Measurement, consts: &SceneConstants) -> f64 {
    if (0.0..=consts.d_max).contains(&z.distance) {
        1.0 / consts.d_max
    } else {
        0.0
    }
}

/// `mean_count · f_object / (μ_c · f_clutter)`, the `a = 1` branch of a
/// pseudo-likelihood; the `a = 0` branch is identically one.
pub fn pseudo_lr(
    z: &Measurement,
    object_density: f64,
    mean_count: f64,
    consts: &SceneConstants,
) -> Result<f64> {
    let fc = clutter_density(z, consts);
    if fc <= 0.0 {
        return Err(Error::SupportViolation {
            distance: z.distance,
            d_max: consts.d_max,
        });
    }
    Ok(mean_count * object_density / (consts.mu_c * fc))
}

/// Passive pseudo-likelihood ratio for the ordered link `tx → EO → rx` under
/// the geometry-based model.
pub fn passive_pseudo_lr(
    z: &Measurement,
    y: &AugmentedState,
    tx: &Vec2,
    rx: &Vec2,
    consts: &SceneConstants,
    ut: &UtParams,
    sign: AspectSign,
) -> Result<f64> {
    let f = geo_scatter_likelihood(z, &y.kinematic, &y.extent, tx, rx, consts, ut, sign)?;
    pseudo_lr(z, f, consts.mu_m, consts)
}

/// Active pseudo-likelihood ratio: LOS versus clutter at one anchor.
pub fn active_pseudo_lr(
    z: &Measurement,
    y: &AugmentedState,
    anchor: &Vec2,
    consts: &SceneConstants,
    mu_los: f64,
) -> Result<f64> {
    let f = los_likelihood(z, &y.kinematic, &y.bias, anchor, consts);
    pseudo_lr(z, f, mu_los, consts)
}

/// Sum of a binary association variable's pseudo-likelihood over `{0, 1}`.
pub fn marginal_assoc_factor(ratio: f64) -> f64 {
    1.0 + ratio
}

/// `ln(marginal_assoc_factor(ratio))`, accurate for tiny ratios.
pub fn log_marginal_assoc_factor(ratio: f64) -> f64 {
    ratio.ln_1p()
}

#[cfg(test)]
mod tests {
    use std::f64::consts::PI;

    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    use super::*;
    use crate::geometry::{build_ellipse, sample_geo_scatterer};

    const C: f64 = 299_792_458.0;

    fn consts() -> SceneConstants {
        SceneConstants {
            d_max: 20.0,
            gamma: 2.0,
            bandwidth: 1e8,
            speed_of_light: C,
            opening_angle: 2.0 * PI / 3.0,
            mu_m: 5.0,
            mu_c: 5.0,
        }
    }

    fn state(p: Vec2) -> AugmentedState {
        AugmentedState {
            kinematic: KinematicState::new(p, Vec2::zeros()),
            bias: BiasState::new(0.32, -PI / 3.0),
            extent: ExtentGeo::new(0.3, 0.1),
        }
    }

    fn simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
        fn rec(f: &dyn Fn(f64) -> f64, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
            let m = 0.5 * (a + b);
            let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
            let (flm, frm) = (f(lm), f(rm));
            let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
            let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
            if depth == 0 || (left + right - whole).abs() <= 15.0 * tol {
                left + right + (left + right - whole) / 15.0
            } else {
                rec(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1)
                    + rec(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)
            }
        }
        let (fa, fb, fm) = (f(a), f(b), f(0.5 * (a + b)));
        rec(f, a, b, fa, fm, fb, (b - a) / 6.0 * (fa + 4.0 * fm + fb), tol, 50)
    }

    #[test]
    fn ranging_variance_scaling() {
        let v1 = ranging_variance(3.0, 1e8, C);
        let v2 = ranging_variance(6.0, 1e8, C);
        assert!((v1 / v2 - 4.0).abs() < 1e-12);
        for u in [0.5, 2.0, 31.0] {
            let k = ranging_variance(u, 1e8, C).sqrt() * u;
            assert!((k - ranging_variance(1.0, 1e8, C).sqrt()).abs() < 1e-15);
        }
    }

    #[test]
    fn ranging_std_at_30_db() {
        // 3e8 / (sqrt(8) π 1e8 sqrt(1000)) evaluated by hand
        let sd = ranging_variance(1000f64.sqrt(), 1e8, 3e8).sqrt();
        assert!((sd - 0.010676).abs() < 1e-6, "{sd}");
    }

    #[test]
    fn los_peak_and_symmetry() {
        let c = consts();
        let y = state(Vec2::new(1.0, -1.0));
        let a = Vec2::new(4.0, 4.5);
        let d = (y.device_position() - a).norm();
        let z = Measurement::new(d, 4.0);
        let sd = measurement_variance(&z, &c).sqrt();
        let peak = los_likelihood(&z, &y.kinematic, &y.bias, &a, &c);
        assert!((peak - 1.0 / (sd * (2.0 * PI).sqrt())).abs() < 1e-9 * peak);
        for off in [0.01, 0.05, 0.3] {
            let lo = los_likelihood(&Measurement::new(d - off, 4.0), &y.kinematic, &y.bias, &a, &c);
            let hi = los_likelihood(&Measurement::new(d + off, 4.0), &y.kinematic, &y.bias, &a, &c);
            assert!((lo - hi).abs() < 1e-12 * peak);
        }
    }

    #[test]
    fn densities_integrate_to_one() {
        let c = consts();
        let y = state(Vec2::new(0.5, 0.2));
        let a1 = Vec2::new(4.0, 4.5);
        let a2 = Vec2::new(-4.0, 4.5);
        let u = 3.0;
        let f_los = |d: f64| los_likelihood(&Measurement::new(d, u), &y.kinematic, &y.bias, &a1, &c);
        let mean = (y.device_position() - a1).norm();
        let area = simpson(&f_los, mean - 3.0, mean + 3.0, 1e-10);
        assert!((area - 1.0).abs() < 1e-6, "{area}");

        let f_geo = |d: f64| {
            geo_scatter_likelihood(&Measurement::new(d, u), &y.kinematic, &y.extent, &a2, &a1, &c,
                                   &UtParams::default(), AspectSign::TowardAnchor).unwrap()
        };
        let area: f64 = (0..200)
            .map(|k| simpson(&f_geo, 0.1 * k as f64, 0.1 * (k + 1) as f64, 1e-12))
            .sum();
        assert!((area - 1.0).abs() < 1e-6, "{area}");
    }

    #[test]
    fn ut_weights_sum_to_one() {
        for p in [UtParams::default(), UtParams { alpha: 0.5, beta: 2.0, kappa: 1.0 }] {
            let w = p.weights(2);
            assert!((w.mean_center + 4.0 * w.outer - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn ut_variance_vanishes_for_point_scatterer() {
        let e = ScatterEllipse::new(Vec2::new(0.3, 0.0), 0.5, 1e-9, 1e-9);
        let v = ut_delay_variance(&e, &Vec2::new(4.0, 4.5), &Vec2::new(0.0, -5.0), &UtParams::default()).unwrap();
        assert!(v < 1e-15);
    }

    #[test]
    fn ut_rejects_anchor_at_center() {
        let e = ScatterEllipse::new(Vec2::new(4.0, 4.5), 0.5, 0.2, 0.1);
        assert!(ut_delay_variance(&e, &Vec2::new(4.0, 4.5), &Vec2::zeros(), &UtParams::default()).is_err());
    }

    fn mc_variance(e: &ScatterEllipse, tx: &Vec2, rx: &Vec2, n: usize, seed: u64) -> f64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (mut s, mut s2) = (0.0, 0.0);
        for _ in 0..n {
            let h = bistatic_distance(&sample_geo_scatterer(e, &mut rng), tx, rx);
            s += h;
            s2 += h * h;
        }
        let m = s / n as f64;
        s2 / n as f64 - m * m
    }

    #[test]
    fn ut_matches_monte_carlo_far_field() {
        // major axis perpendicular to both bearing lines: the spread is the
        // projection of the minor axis on both bearings
        let e = ScatterEllipse::new(Vec2::zeros(), PI / 2.0, 0.26, 0.1);
        let tx = Vec2::new(60.0, 20.0);
        let rx = Vec2::new(60.0, -20.0);
        let ut = ut_delay_variance(&e, &tx, &rx, &UtParams::default()).unwrap();
        let mc = mc_variance(&e, &tx, &rx, 400_000, 1);
        assert!((ut - mc).abs() / mc < 0.05, "ut {ut} mc {mc}");
        let cos_delta = (tx.normalize()).dot(&rx.normalize());
        let linear = 2.0 * 0.05f64.powi(2) * (1.0 + cos_delta);
        assert!((ut - linear).abs() / linear < 0.05, "ut {ut} linear {linear}");
    }

    #[test]
    fn ut_is_invariant_moving_anchors_outward() {
        let e = ScatterEllipse::new(Vec2::new(0.1, 0.2), 0.3, 0.25, 0.1);
        let (dtx, drx) = (Vec2::new(1.0, 0.5).normalize(), Vec2::new(-0.2, 1.0).normalize());
        let v100 = ut_delay_variance(&e, &(dtx * 100.0), &(drx * 100.0), &UtParams::default()).unwrap();
        let v1000 = ut_delay_variance(&e, &(dtx * 1000.0), &(drx * 1000.0), &UtParams::default()).unwrap();
        let mc = mc_variance(&e, &(dtx * 1000.0), &(drx * 1000.0), 400_000, 2);
        assert!((v100 - v1000).abs() / v1000 < 0.01);
        assert!((v1000 - mc).abs() / mc < 0.05);
    }

    #[test]
    fn geo_likelihood_matches_convolution() {
        let c = consts();
        let y = state(Vec2::new(0.0, 0.0));
        let tx = Vec2::new(40.0, 30.0);
        let rx = Vec2::new(-10.0, 45.0);
        let z_u = 8.0;
        let e = build_ellipse(&y.kinematic.position, &y.extent, &rx, c.opening_angle, AspectSign::TowardAnchor).unwrap();
        let mode = bistatic_distance(&e.center, &tx, &rx);
        let z = Measurement::new(mode, z_u);
        let f = geo_scatter_likelihood(&z, &y.kinematic, &y.extent, &tx, &rx, &c, &UtParams::default(), AspectSign::TowardAnchor).unwrap();

        // 2-D midpoint quadrature of noise ⊛ scattering Gaussian
        let var_d = measurement_variance(&z, &c);
        let (s1, s2) = e.principal_std();
        let k = 400;
        let mut acc = 0.0;
        for i in 0..k {
            for j in 0..k {
                let t1 = -6.0 + 12.0 * (i as f64 + 0.5) / k as f64;
                let t2 = -6.0 + 12.0 * (j as f64 + 0.5) / k as f64;
                let q = e.center + e.major_direction() * (s1 * t1) + e.minor_direction() * (s2 * t2);
                let w = (-0.5 * (t1 * t1 + t2 * t2)).exp() / (2.0 * PI) * (12.0 / k as f64).powi(2);
                acc += w * gaussian_pdf(z.distance, bistatic_distance(&q, &tx, &rx), var_d);
            }
        }
        assert!((f - acc).abs() / acc < 0.10, "geo {f} quadrature {acc}");
    }

    #[test]
    fn geo_limit_is_point_scatterer() {
        let c = consts();
        let mut y = state(Vec2::new(1.0, 1.0));
        y.extent = ExtentGeo::new(1e-9, 1e-9);
        let a = Vec2::new(4.0, 4.5);
        let z = Measurement::new(2.0 * (y.kinematic.position - a).norm(), 3.0);
        let f = geo_scatter_likelihood(&z, &y.kinematic, &y.extent, &a, &a, &c, &UtParams::default(), AspectSign::TowardAnchor).unwrap();
        let point = gaussian_pdf(z.distance, 2.0 * (y.kinematic.position - a).norm(), measurement_variance(&z, &c));
        assert!((f - point).abs() / point < 1e-6);
    }

    #[test]
    fn ideal_likelihood_self_consistent() {
        let c = consts();
        let x = KinematicState::new(Vec2::new(0.5, 0.0), Vec2::zeros());
        let xi = ExtentIdeal::new(0.3, 0.2, 0.1);
        let tx = Vec2::new(-4.0, 4.5);
        let rx = Vec2::new(4.0, 4.5);
        let u = 2.5;
        // locate the mode on a coarse grid with a large sample count
        let reference = |d: f64| {
            let mut rng = ChaCha8Rng::seed_from_u64(99);
            ideal_scatter_likelihood(&Measurement::new(d, u), &x, &xi, &tx, &rx, &c, 100_000, &mut rng).unwrap()
        };
        let phi = geometry::aspect_angle(&x.position, &rx).unwrap();
        let center = bistatic_distance(&(x.position + Vec2::new(phi.cos(), phi.sin()) * 0.25), &tx, &rx);
        let (mode, peak) = (-20..=20)
            .map(|k| center + 0.01 * k as f64)
            .map(|d| (d, reference(d)))
            .max_by(|a, b| a.1.total_cmp(&b.1))
            .unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let small = ideal_scatter_likelihood(&Measurement::new(mode, u), &x, &xi, &tx, &rx, &c, 50, &mut rng).unwrap();
        assert!((small - peak).abs() / peak < 0.15, "I'=50 {small}, I'=1e5 {peak}");
    }

    #[test]
    fn ideal_likelihood_deterministic_and_nonnegative() {
        let c = consts();
        let x = KinematicState::new(Vec2::new(0.5, 0.0), Vec2::zeros());
        let xi = ExtentIdeal::new(0.3, 0.2, 0.1);
        let (tx, rx) = (Vec2::new(-4.0, 4.5), Vec2::new(0.0, -5.0));
        for d in [0.0, 5.0, 10.5, 19.9] {
            let z = Measurement::new(d, 3.0);
            let mut r1 = ChaCha8Rng::seed_from_u64(1);
            let mut r2 = ChaCha8Rng::seed_from_u64(1);
            let f1 = ideal_scatter_likelihood(&z, &x, &xi, &tx, &rx, &c, 50, &mut r1).unwrap();
            let f2 = ideal_scatter_likelihood(&z, &x, &xi, &tx, &rx, &c, 50, &mut r2).unwrap();
            assert_eq!(f1, f2);
            assert!(f1 >= 0.0 && f1.is_finite());
        }
    }

    #[test]
    fn ideal_likelihood_point_limit() {
        let c = consts();
        let x = KinematicState::new(Vec2::new(0.5, 0.0), Vec2::zeros());
        let xi = ExtentIdeal::circle(0.3, 1e-12);
        let (tx, rx) = (Vec2::new(-4.0, 4.5), Vec2::new(0.0, -5.0));
        let mut consts_narrow = c;
        consts_narrow.opening_angle = 1e-12;
        let phi = geometry::aspect_angle(&x.position, &rx).unwrap();
        let q = x.position + Vec2::new(phi.cos(), phi.sin()) * 0.3;
        let z = Measurement::new(bistatic_distance(&q, &tx, &rx) + 0.05, 3.0);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let f = ideal_scatter_likelihood(&z, &x, &xi, &tx, &rx, &consts_narrow, 1, &mut rng).unwrap();
        let g = gaussian_pdf(z.distance, bistatic_distance(&q, &tx, &rx), measurement_variance(&z, &c));
        assert!((f - g).abs() < 1e-9 * g);
    }

    #[test]
    fn ideal_estimator_variance_shrinks_with_samples() {
        let c = consts();
        let x = KinematicState::new(Vec2::new(0.5, 0.0), Vec2::zeros());
        let xi = ExtentIdeal::new(0.3, 0.2, 0.1);
        let (tx, rx) = (Vec2::new(-4.0, 4.5), Vec2::new(4.0, 4.5));
        let z = Measurement::new(11.4, 2.5);
        let spread = |n: usize| {
            let vals: Vec<f64> = (0..400)
                .map(|s| {
                    let mut rng = ChaCha8Rng::seed_from_u64(1000 + s);
                    ideal_scatter_likelihood(&z, &x, &xi, &tx, &rx, &c, n, &mut rng).unwrap()
                })
                .collect();
            let m = vals.iter().sum::<f64>() / vals.len() as f64;
            vals.iter().map(|v| (v - m).powi(2)).sum::<f64>() / vals.len() as f64
        };
        let ratio = spread(10) / spread(40);
        assert!(ratio > 2.8 && ratio < 5.5, "variance ratio {ratio}");
    }

    #[test]
    fn clutter_density_support() {
        let c = consts();
        for d in [0.0, 3.3, 20.0] {
            assert_eq!(clutter_density(&Measurement::new(d, 3.0), &c), 0.05);
        }
        assert_eq!(clutter_density(&Measurement::new(20.01, 3.0), &c), 0.0);
        assert_eq!(clutter_density(&Measurement::new(-0.1, 3.0), &c), 0.0);
    }

    #[test]
    fn pseudo_lr_properties() {
        let c = consts();
        let z = Measurement::new(4.0, 3.0);
        // f_P = f_c, μ_m = μ_c
        assert!((pseudo_lr(&z, 0.05, 5.0, &c).unwrap() - 1.0).abs() < 1e-15);
        let r1 = pseudo_lr(&z, 0.3, 5.0, &c).unwrap();
        let r2 = pseudo_lr(&z, 0.3, 10.0, &c).unwrap();
        assert!((r2 - 2.0 * r1).abs() < 1e-12);
        assert!((r1 - 0.3 / 0.05).abs() < 1e-12);
        assert!(matches!(
            pseudo_lr(&Measurement::new(25.0, 3.0), 0.3, 5.0, &c),
            Err(Error::SupportViolation { .. })
        ));
    }

    #[test]
    fn active_lr_peaks_at_los_distance() {
        let c = consts();
        let y = state(Vec2::new(0.0, 1.0));
        let a = Vec2::new(4.0, 4.5);
        let d = (y.device_position() - a).norm();
        let at_los = active_pseudo_lr(&Measurement::new(d, 20.0), &y, &a, &c, 1.0).unwrap();
        let sd = C / (2.0 * 2f64.sqrt() * PI * 1e8 * 20.0);
        let oracle = 1.0 / (sd * (2.0 * PI).sqrt()) / (5.0 / 20.0);
        assert!((at_los - oracle).abs() < 1e-9 * oracle, "{at_los} vs {oracle}");
        let far = active_pseudo_lr(&Measurement::new(d + 5.0, 20.0), &y, &a, &c, 1.0).unwrap();
        assert!(far < 1e-12);
        // indifference: μ_los f_LOS = μ_c f_c
        let f = los_likelihood(&Measurement::new(d, 20.0), &y.kinematic, &y.bias, &a, &c);
        let mu_los = c.mu_c * 0.05 / f;
        let r = active_pseudo_lr(&Measurement::new(d, 20.0), &y, &a, &c, mu_los).unwrap();
        assert!((r - 1.0).abs() < 1e-12);
    }

    #[test]
    fn passive_lr_matches_density_ratio() {
        let c = consts();
        let y = state(Vec2::new(0.0, 1.0));
        let (tx, rx) = (Vec2::new(-4.0, 4.5), Vec2::new(4.0, 4.5));
        let z = Measurement::new(9.0, 3.0);
        let f = geo_scatter_likelihood(&z, &y.kinematic, &y.extent, &tx, &rx, &c, &UtParams::default(), AspectSign::TowardAnchor).unwrap();
        let r = passive_pseudo_lr(&z, &y, &tx, &rx, &c, &UtParams::default(), AspectSign::TowardAnchor).unwrap();
        assert!((r - f / 0.05).abs() < 1e-12 * r.max(1.0));
    }

    #[test]
    fn marginal_factor_examples() {
        assert_eq!(marginal_assoc_factor(0.0), 1.0);
        assert_eq!(marginal_assoc_factor(1.0), 2.0);
        assert!((log_marginal_assoc_factor(1e-20) - 1e-20).abs() < 1e-30);
    }

    #[test]
    fn marginal_product_equals_association_enumeration() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for m in 0..=10usize {
            let ratios: Vec<f64> = (0..m)
                .map(|_| {
                    let e: f64 = StandardNormal.sample(&mut rng);
                    (3.0 * e).exp()
                })
                .collect();
            let product: f64 = ratios.iter().map(|&r| marginal_assoc_factor(r)).product();
            let brute: f64 = (0u32..1 << m)
                .map(|mask| {
                    (0..m)
                        .map(|l| if mask >> l & 1 == 1 { ratios[l] } else { 1.0 })
                        .product::<f64>()
                })
                .sum();
            assert!((product - brute).abs() <= 1e-12 * brute, "m={m}");
        }
    }
}
