//! State transitions and the prior.
//!
//! Kinematics follow a constant-velocity model driven by white Gaussian
//! acceleration; bias and extent components follow independent Gaussian
//! random walks. Components that must stay positive are reflected at
//! [`POSITIVE_FLOOR`].

use std::f64::consts::PI;

use rand::Rng;
use rand_distr::StandardNormal;

use crate::types::{AugmentedState, BiasState, ExtentGeo, KinematicState, Vec2};

pub const POSITIVE_FLOOR: f64 = 1e-3;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MotionParams {
    /// Step duration (s).
    pub dt: f64,
    /// Acceleration standard deviation (m/s²).
    pub sigma_a: f64,
    /// Bias range walk (m).
    pub sigma_rho: f64,
    /// Bias angle walk (rad).
    pub sigma_phi: f64,
    /// Radius walk (m).
    pub sigma_r: f64,
    /// Width walk (m).
    pub sigma_w: f64,
}

impl Default for MotionParams {
    fn default() -> Self {
        Self {
            dt: 0.1,
            sigma_a: 2.0,
            sigma_rho: 0.1,
            sigma_phi: 0.5,
            sigma_r: 0.05,
            sigma_w: 0.05,
        }
    }
}

fn normal<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    rng.sample(StandardNormal)
}

/// Reflects `value` at `floor`, clamping what a single reflection cannot fix.
pub fn reflect_at_floor(value: f64, floor: f64) -> f64 {
    if value >= floor {
        value
    } else {
        (2.0 * floor - value).max(floor)
    }
}

/// Constant-velocity step with acceleration `accel` held over the step.
pub fn propagate_kinematic(x: &KinematicState, dt: f64, accel: Vec2) -> KinematicState {
    KinematicState {
        position: x.position + x.velocity * dt + accel * (0.5 * dt * dt),
        velocity: x.velocity + accel * dt,
    }
}

pub fn sample_kinematic<R: Rng + ?Sized>(
    x: &KinematicState,
    params: &MotionParams,
    rng: &mut R,
) -> KinematicState {
    let accel = Vec2::new(normal(rng), normal(rng)) * params.sigma_a;
    propagate_kinematic(x, params.dt, accel)
}

pub fn sample_bias<R: Rng + ?Sized>(b: &BiasState, params: &MotionParams, rng: &mut R) -> BiasState {
    let range = reflect_at_floor(b.range + params.sigma_rho * normal(rng), POSITIVE_FLOOR);
    BiasState::new(range, b.angle + params.sigma_phi * normal(rng))
}

pub fn sample_extent<R: Rng + ?Sized>(x: &ExtentGeo, params: &MotionParams, rng: &mut R) -> ExtentGeo {
    ExtentGeo {
        radius: reflect_at_floor(x.radius + params.sigma_r * normal(rng), POSITIVE_FLOOR),
        width: reflect_at_floor(x.width + params.sigma_w * normal(rng), POSITIVE_FLOOR),
    }
}

/// Draws `y_n` from `f(y_n | y_{n-1})`.
pub fn sample_transition<R: Rng + ?Sized>(
    y: &AugmentedState,
    params: &MotionParams,
    rng: &mut R,
) -> AugmentedState {
    AugmentedState {
        kinematic: sample_kinematic(&y.kinematic, params, rng),
        bias: sample_bias(&y.bias, params, rng),
        extent: sample_extent(&y.extent, params, rng),
    }
}

/// Supports of the initial particle cloud.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PriorConfig {
    /// Center of the position box, usually the first true position.
    pub center: Vec2,
    /// Half-width of the position box (m).
    pub position_halfwidth: f64,
    pub velocity_std: f64,
    pub bias_range: (f64, f64),
    pub radius: (f64, f64),
    pub width: (f64, f64),
}

impl PriorConfig {
    pub fn around(center: Vec2) -> Self {
        Self {
            center,
            position_halfwidth: 1.0,
            velocity_std: 1.0,
            bias_range: (0.0, 0.5),
            radius: (0.1, 0.5),
            width: (0.02, 0.2),
        }
    }

    /// Mean of the extent prior.
    pub fn extent_mean(&self) -> ExtentGeo {
        ExtentGeo::new(
            0.5 * (self.radius.0 + self.radius.1),
            0.5 * (self.width.0 + self.width.1),
        )
    }
}

fn uniform<R: Rng + ?Sized>(rng: &mut R, (lo, hi): (f64, f64)) -> f64 {
    if hi > lo {
        rng.random_range(lo..hi)
    } else {
        lo
    }
}

pub fn init_prior<R: Rng + ?Sized>(prior: &PriorConfig, rng: &mut R) -> AugmentedState {
    let h = prior.position_halfwidth;
    let position = prior.center + Vec2::new(uniform(rng, (-h, h)), uniform(rng, (-h, h)));
    let velocity = Vec2::new(normal(rng), normal(rng)) * prior.velocity_std;
    // (-π, π]: flip the excluded endpoint
    let mut angle = rng.random_range(-PI..PI);
    if angle == -PI {
        angle = PI;
    }
    AugmentedState {
        kinematic: KinematicState::new(position, velocity),
        bias: BiasState {
            range: uniform(rng, prior.bias_range),
            angle,
        },
        extent: ExtentGeo::new(uniform(rng, prior.radius), uniform(rng, prior.width)),
    }
}
