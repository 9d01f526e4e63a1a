//! Particle-based probabilistic data association for the extended object.
//!
//! Every measurement carries a binary association variable (object/LOS versus
//! clutter) and, for a fixed state, the joint posterior factorizes over
//! measurements. Summing each variable out therefore gives the exact
//! per-particle weight `Π_l (1 + ratio_l)`, which is accumulated in the log
//! domain.
//!
//! Random numbers come from per-particle streams keyed by `(seed, step,
//! particle)`, so sequential and parallel runs produce identical results.

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use rand::Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::{self, AspectSign};
use crate::likelihood::{
    bistatic_distance, gaussian_pdf, log_marginal_assoc_factor, measurement_variance,
    ut_delay_variance, UtParams,
};
use crate::motion::{self, MotionParams, PriorConfig};
use crate::scenario::Scenario;
use crate::seed::{self, Purpose};
use crate::synthesis::Dataset;
use crate::types::{
    AugmentedState, BiasState, ExtentGeo, ExtentIdeal, KinematicState, MeasurementFrame,
    SceneConstants, Vec2,
};

/// The compared estimation methods.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Variant {
    /// Active and passive measurements, geometry-based scattering model.
    ApEopdaGeo,
    /// Active and passive measurements, Monte-Carlo ideal scattering model
    /// with `samples` scatterers per anchor.
    ApEopdaIdeal { samples: usize },
    /// Active measurements only.
    AEopda,
    /// Active and passive measurements, EO treated as a point at the device.
    ApPda,
}

impl Variant {
    pub fn all(ideal_samples: usize) -> [Variant; 4] {
        [
            Variant::ApEopdaGeo,
            Variant::ApEopdaIdeal {
                samples: ideal_samples,
            },
            Variant::AEopda,
            Variant::ApPda,
        ]
    }

    /// Short name used on the command line and in file names.
    pub fn key(&self) -> &'static str {
        match self {
            Variant::ApEopdaGeo => "geo",
            Variant::ApEopdaIdeal { .. } => "idl",
            Variant::AEopda => "a-eopda",
            Variant::ApPda => "ap-pda",
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            Variant::ApEopdaGeo => "AP-EOPDA(geo)",
            Variant::ApEopdaIdeal { .. } => "AP-EOPDA(idl)",
            Variant::AEopda => "A-EOPDA",
            Variant::ApPda => "AP-PDA",
        }
    }

    /// Parses a key or label; the ideal variant takes `ideal_samples`.
    pub fn parse(s: &str, ideal_samples: usize) -> Result<Variant> {
        let v = match s.trim().to_ascii_lowercase().as_str() {
            "geo" | "ap-eopda(geo)" => Variant::ApEopdaGeo,
            "idl" | "ideal" | "ap-eopda(idl)" => Variant::ApEopdaIdeal {
                samples: ideal_samples.max(1),
            },
            "a-eopda" | "active" => Variant::AEopda,
            "ap-pda" | "pda" | "point" => Variant::ApPda,
            _ => return Err(Error::UnknownVariant(s.to_string())),
        };
        Ok(v)
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Variant::parse(s, 50)
    }
}

/// Weighted particles.
#[derive(Clone, Debug, PartialEq)]
pub struct ParticleSet {
    pub particles: Vec<AugmentedState>,
    pub weights: Vec<f64>,
}

impl ParticleSet {
    pub fn uniform(particles: Vec<AugmentedState>) -> Self {
        let w = 1.0 / particles.len().max(1) as f64;
        let weights = vec![w; particles.len()];
        Self { particles, weights }
    }

    pub fn len(&self) -> usize {
        self.particles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.particles.is_empty()
    }

    pub fn effective_sample_size(&self) -> f64 {
        1.0 / self.weights.iter().map(|w| w * w).sum::<f64>()
    }

    pub fn reset_weights(&mut self) {
        let w = 1.0 / self.len() as f64;
        self.weights.iter_mut().for_each(|x| *x = w);
    }

    /// Draws `count` particles from the prior.
    pub fn from_prior(prior: &PriorConfig, count: usize, seed: u64) -> Self {
        let base = seed::derive_seed(seed, Purpose::Prior, 0);
        let particles = (0..count)
            .map(|i| motion::init_prior(prior, &mut seed::child_stream(base, i as u64)))
            .collect();
        Self::uniform(particles)
    }
}

/// Everything the update step needs besides the frame itself.
#[derive(Clone, Debug)]
pub struct MeasurementModel {
    pub anchors: Vec<Vec2>,
    pub consts: SceneConstants,
    pub ut: UtParams,
    pub mu_los: f64,
    pub aspect_sign: AspectSign,
}

impl MeasurementModel {
    pub fn from_scenario(scenario: &Scenario) -> Self {
        Self {
            anchors: scenario.anchor_positions(),
            consts: scenario.constants(),
            ut: scenario.ut_params(),
            mu_los: scenario.tracker.mu_los,
            aspect_sign: scenario.aspect_sign,
        }
    }
}

/// A measurement with its particle-independent terms.
#[derive(Clone, Copy, Debug)]
struct Prepared {
    distance: f64,
    noise_var: f64,
}

#[derive(Clone, Debug)]
struct PreparedLink {
    rx: usize,
    tx: usize,
    measurements: Vec<Prepared>,
}

/// Frame with noise variances precomputed and the support checked.
#[derive(Clone, Debug)]
struct PreparedFrame {
    active: Vec<(usize, Vec<Prepared>)>,
    passive: Vec<PreparedLink>,
    /// `1 / (μ_c f_c)` inside the support.
    inv_clutter: f64,
}

impl PreparedFrame {
    fn new(frame: &MeasurementFrame, model: &MeasurementModel) -> Result<Self> {
        let c = &model.consts;
        let prep = |z: &crate::types::Measurement| -> Result<Prepared> {
            if !(0.0..=c.d_max).contains(&z.distance) {
                return Err(Error::SupportViolation {
                    distance: z.distance,
                    d_max: c.d_max,
                });
            }
            Ok(Prepared {
                distance: z.distance,
                noise_var: measurement_variance(z, c),
            })
        };
        let j = model.anchors.len();
        let mut active = Vec::new();
        for (a, list) in frame.active.iter().enumerate() {
            if list.is_empty() {
                continue;
            }
            if a >= j {
                return Err(Error::DatasetMismatch(format!("active anchor index {a} out of range")));
            }
            active.push((a, list.iter().map(prep).collect::<Result<Vec<_>>>()?));
        }
        let mut passive = Vec::new();
        for link in &frame.passive {
            if link.measurements.is_empty() {
                continue;
            }
            if link.rx >= j || link.tx >= j {
                return Err(Error::DatasetMismatch(format!(
                    "passive link ({}, {}) out of range",
                    link.rx, link.tx
                )));
            }
            passive.push(PreparedLink {
                rx: link.rx,
                tx: link.tx,
                measurements: link.measurements.iter().map(prep).collect::<Result<Vec<_>>>()?,
            });
        }
        // scatter samples of the ideal model are drawn per receiver
        passive.sort_by_key(|l| (l.rx, l.tx));
        Ok(Self {
            active,
            passive,
            inv_clutter: c.d_max / c.mu_c,
        })
    }
}

/// Σ ln(1 + ratio) over all measurements of the frame for one particle.
fn particle_log_likelihood<R: Rng + ?Sized>(
    y: &AugmentedState,
    frame: &PreparedFrame,
    model: &MeasurementModel,
    variant: Variant,
    rng: &mut R,
) -> f64 {
    let m = y.device_position();
    let mut acc = 0.0;
    for (a, list) in &frame.active {
        let mean = (m - model.anchors[*a]).norm();
        let scale = model.mu_los * frame.inv_clutter;
        for z in list {
            acc += log_marginal_assoc_factor(scale * gaussian_pdf(z.distance, mean, z.noise_var));
        }
    }
    let scale = model.consts.mu_m * frame.inv_clutter;
    match variant {
        Variant::AEopda => {}
        Variant::ApPda => {
            for link in &frame.passive {
                let mean = bistatic_distance(&m, &model.anchors[link.tx], &model.anchors[link.rx]);
                for z in &link.measurements {
                    acc += log_marginal_assoc_factor(scale * gaussian_pdf(z.distance, mean, z.noise_var));
                }
            }
        }
        Variant::ApEopdaGeo => {
            let mut cached: Option<(usize, geometry::ScatterEllipse)> = None;
            for link in &frame.passive {
                let (rx, tx) = (model.anchors[link.rx], model.anchors[link.tx]);
                let ellipse = match cached {
                    Some((r, e)) if r == link.rx => e,
                    _ => match geometry::build_ellipse(
                        &y.kinematic.position,
                        &y.extent,
                        &rx,
                        model.consts.opening_angle,
                        model.aspect_sign,
                    ) {
                        Ok(e) => {
                            cached = Some((link.rx, e));
                            e
                        }
                        Err(_) => return f64::NEG_INFINITY,
                    },
                };
                let Ok(scatter_var) = ut_delay_variance(&ellipse, &tx, &rx, &model.ut) else {
                    return f64::NEG_INFINITY;
                };
                let mean = bistatic_distance(&ellipse.center, &tx, &rx);
                for z in &link.measurements {
                    acc += log_marginal_assoc_factor(
                        scale * gaussian_pdf(z.distance, mean, z.noise_var + scatter_var),
                    );
                }
            }
        }
        Variant::ApEopdaIdeal { samples } => {
            let extent = ExtentIdeal::circle(y.extent.radius, y.extent.width);
            let samples = samples.max(1);
            let mut scatterers: Vec<Vec2> = Vec::with_capacity(samples);
            let mut current_rx = usize::MAX;
            let mut paths = vec![0.0; samples];
            for link in &frame.passive {
                let (rx, tx) = (model.anchors[link.rx], model.anchors[link.tx]);
                if link.rx != current_rx {
                    let Ok(phi) = geometry::aspect_angle(&y.kinematic.position, &rx) else {
                        return f64::NEG_INFINITY;
                    };
                    scatterers.clear();
                    scatterers.extend((0..samples).map(|_| {
                        geometry::sample_ideal_scatterer(
                            &y.kinematic.position,
                            &extent,
                            phi,
                            model.consts.opening_angle,
                            rng,
                        )
                    }));
                    current_rx = link.rx;
                }
                for (h, q) in paths.iter_mut().zip(&scatterers) {
                    *h = bistatic_distance(q, &tx, &rx);
                }
                let inv = 1.0 / samples as f64;
                for z in &link.measurements {
                    let f: f64 = paths.iter().map(|&h| gaussian_pdf(z.distance, h, z.noise_var)).sum();
                    acc += log_marginal_assoc_factor(scale * f * inv);
                }
            }
        }
    }
    acc
}

fn map_particles<F>(count: usize, parallel: bool, f: F) -> Vec<f64>
where
    F: Fn(usize) -> f64 + Sync + Send,
{
    if parallel {
        (0..count).into_par_iter().map(f).collect()
    } else {
        (0..count).map(f).collect()
    }
}

/// Propagates every particle through the transition model; weights are
/// unchanged. Particle `i` draws from the stream `(seed, i)`.
pub fn predict(ps: &mut ParticleSet, params: &MotionParams, seed: u64, parallel: bool) {
    let step = |(i, y): (usize, &mut AugmentedState)| {
        let mut rng = seed::child_stream(seed, i as u64);
        *y = motion::sample_transition(y, params, &mut rng);
    };
    if parallel {
        ps.particles.par_iter_mut().enumerate().for_each(step);
    } else {
        ps.particles.iter_mut().enumerate().for_each(step);
    }
}

/// Multiplies each weight by the marginal association factors of all
/// measurements in `frame` and renormalizes.
///
/// Fails with [`Error::Degeneracy`] when every weight vanishes; the weights
/// are left untouched in that case.
pub fn update(
    ps: &mut ParticleSet,
    frame: &MeasurementFrame,
    model: &MeasurementModel,
    variant: Variant,
    seed: u64,
    parallel: bool,
) -> Result<()> {
    let prepared = PreparedFrame::new(frame, model)?;
    if prepared.active.is_empty() && prepared.passive.is_empty() {
        return Ok(());
    }
    let particles = &ps.particles;
    let loglik = map_particles(ps.len(), parallel, |i| {
        let mut rng = seed::child_stream(seed, i as u64);
        particle_log_likelihood(&particles[i], &prepared, model, variant, &mut rng)
    });
    let logw: Vec<f64> = ps
        .weights
        .iter()
        .zip(&loglik)
        .map(|(w, l)| {
            let v = w.ln() + l;
            if v.is_nan() {
                f64::NEG_INFINITY
            } else {
                v
            }
        })
        .collect();
    let max = logw.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return Err(Error::Degeneracy {
            step: frame.step,
            max_log_weight: max,
        });
    }
    let mut total = 0.0;
    for (w, lw) in ps.weights.iter_mut().zip(&logw) {
        *w = (lw - max).exp();
        total += *w;
    }
    ps.weights.iter_mut().for_each(|w| *w /= total);
    Ok(())
}

/// Indices drawn by systematic resampling.
pub fn systematic_indices<R: Rng + ?Sized>(weights: &[f64], rng: &mut R) -> Vec<usize> {
    let n = weights.len();
    let step = 1.0 / n as f64;
    let mut u = rng.random_range(0.0..step);
    let mut out = Vec::with_capacity(n);
    let mut cumulative = weights[0];
    let mut i = 0;
    for _ in 0..n {
        while u > cumulative && i + 1 < n {
            i += 1;
            cumulative += weights[i];
        }
        out.push(i);
        u += step;
    }
    out
}

/// Systematic resampling when the effective sample size drops below
/// `threshold · len`. Returns whether the set was resampled.
pub fn resample<R: Rng + ?Sized>(ps: &mut ParticleSet, threshold: f64, rng: &mut R) -> bool {
    if ps.is_empty() || ps.effective_sample_size() >= threshold * ps.len() as f64 {
        return false;
    }
    let idx = systematic_indices(&ps.weights, rng);
    ps.particles = idx.iter().map(|&i| ps.particles[i]).collect();
    ps.reset_weights();
    true
}

/// Posterior-mean estimate.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Estimate {
    pub state: AugmentedState,
    /// Posterior mean of the device position.
    pub device: Vec2,
}

/// Weighted mean of every component; the bias angle is averaged on the
/// circle.
pub fn mmse_estimate(ps: &ParticleSet) -> Estimate {
    let mut p = Vec2::zeros();
    let mut v = Vec2::zeros();
    let mut dev = Vec2::zeros();
    let (mut rho, mut s, mut c, mut r, mut w) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for (y, &wt) in ps.particles.iter().zip(&ps.weights) {
        p += y.kinematic.position * wt;
        v += y.kinematic.velocity * wt;
        dev += y.device_position() * wt;
        rho += wt * y.bias.range;
        s += wt * y.bias.angle.sin();
        c += wt * y.bias.angle.cos();
        r += wt * y.extent.radius;
        w += wt * y.extent.width;
    }
    Estimate {
        state: AugmentedState {
            kinematic: KinematicState::new(p, v),
            bias: BiasState::new(rho, s.atan2(c)),
            extent: ExtentGeo::new(r, w),
        },
        device: dev,
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FilterConfig {
    pub particles: usize,
    pub variant: Variant,
    pub ess_threshold: f64,
    pub parallel: bool,
}

impl FilterConfig {
    pub fn new(variant: Variant, particles: usize) -> Self {
        Self {
            particles,
            variant,
            ess_threshold: 0.5,
            parallel: true,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StepEstimate {
    pub step: usize,
    pub estimate: Estimate,
    /// Effective sample size after the update.
    pub ess: f64,
    /// Wall-clock time of the step (s).
    pub seconds: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrackOutput {
    pub variant: Variant,
    pub steps: Vec<StepEstimate>,
    /// Steps at which every weight vanished and the weights were reset.
    pub degeneracy_steps: Vec<usize>,
}

impl TrackOutput {
    pub fn mean_step_seconds(&self) -> f64 {
        if self.steps.is_empty() {
            return 0.0;
        }
        self.steps.iter().map(|s| s.seconds).sum::<f64>() / self.steps.len() as f64
    }
}

/// Runs the filter over every frame of `dataset`.
///
/// The first frame is processed directly on the prior; later frames are
/// preceded by a prediction. Degenerate updates reset the weights to uniform
/// and are recorded instead of aborting the run.
pub fn run_filter(
    dataset: &Dataset,
    scenario: &Scenario,
    config: &FilterConfig,
    seed: u64,
) -> Result<TrackOutput> {
    dataset.check_against(scenario)?;
    if config.particles == 0 {
        return Err(Error::InvalidScenario("particle count must be at least 1".into()));
    }
    let model = MeasurementModel::from_scenario(scenario);
    let prior = scenario.prior_config();
    let mut params = scenario.motion_params();
    let mut ps = ParticleSet::from_prior(&prior, config.particles, seed);
    if config.variant == Variant::ApPda {
        let frozen = prior.extent_mean();
        ps.particles.iter_mut().for_each(|y| y.extent = frozen);
        params.sigma_r = 0.0;
        params.sigma_w = 0.0;
    }

    let mut steps = Vec::with_capacity(dataset.frames.len());
    let mut degeneracy_steps = Vec::new();
    for (k, frame) in dataset.frames.iter().enumerate() {
        let started = Instant::now();
        let base = seed::derive_seed(seed, Purpose::Tracking, frame.step as u64);
        if k > 0 {
            predict(&mut ps, &params, seed::child_seed(base, 0), config.parallel);
        }
        match update(&mut ps, frame, &model, config.variant, seed::child_seed(base, 1), config.parallel) {
            Ok(()) => {}
            Err(Error::Degeneracy { step, max_log_weight }) => {
                log::warn!(
                    "{}: all weights vanished at step {step} (max log-weight {max_log_weight}); resetting",
                    config.variant
                );
                ps.reset_weights();
                degeneracy_steps.push(step);
            }
            Err(e) => return Err(e),
        }
        let ess = ps.effective_sample_size();
        let estimate = mmse_estimate(&ps);
        resample(
            &mut ps,
            config.ess_threshold,
            &mut seed::child_stream(base, 2),
        );
        steps.push(StepEstimate {
            step: frame.step,
            estimate,
            ess,
            seconds: started.elapsed().as_secs_f64().max(1e-9),
        });
    }
    Ok(TrackOutput {
        variant: config.variant,
        steps,
        degeneracy_steps,
    })
}
