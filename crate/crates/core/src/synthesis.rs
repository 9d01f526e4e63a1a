//! Ground truth and synthetic measurement frames.
//!
//! Measurements are synthesized directly in the distance/amplitude domain:
//! each path gets its free-space amplitude at the path length, Gaussian range
//! noise with the Fisher-information variance for that amplitude, and is
//! dropped when its amplitude falls below the detection threshold.

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Distribution, Poisson, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry;
use crate::likelihood::ranging_variance;
use crate::scenario::{BlockageMode, Scenario};
use crate::seed::{self, Purpose, StreamRng};
use crate::types::{
    device_position, ordered_pairs, BiasState, ExtentIdeal, KinematicState, Measurement,
    MeasurementFrame, PassiveLink, SceneConstants, Vec2,
};

/// A constant-turn-rate stretch of the trajectory.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Segment {
    pub steps: usize,
    /// rad/s; zero for a straight stretch.
    pub turn_rate: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrajectorySpec {
    pub start: [f64; 2],
    pub heading: f64,
    pub speed: f64,
    pub segments: Vec<Segment>,
}

impl TrajectorySpec {
    pub fn validate(&self) -> Result<()> {
        let finite = self.start.iter().all(|v| v.is_finite())
            && self.heading.is_finite()
            && self.segments.iter().all(|s| s.turn_rate.is_finite());
        if !finite {
            return Err(Error::InvalidTrajectory("non-finite value".into()));
        }
        if !(self.speed >= 0.0) {
            return Err(Error::InvalidTrajectory(format!(
                "speed must be nonnegative, got {}",
                self.speed
            )));
        }
        Ok(())
    }

    /// Turn rate applied on the transition out of zero-based step `index`.
    fn turn_rate_at(&self, index: usize) -> f64 {
        let mut end = 0;
        for s in &self.segments {
            end += s.steps;
            if index < end {
                return s.turn_rate;
            }
        }
        0.0
    }
}

/// True state at one step.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TruthStep {
    pub step: usize,
    pub kinematic: KinematicState,
    pub device: Vec2,
}

#[derive(Clone, Debug, PartialEq)]
pub struct GroundTruth {
    pub steps: Vec<TruthStep>,
    pub bias: BiasState,
    pub extent: ExtentIdeal,
}

/// Kinematic states at steps `1..=steps`, integrating each constant-turn
/// segment exactly.
pub fn generate_trajectory(spec: &TrajectorySpec, steps: usize, dt: f64) -> Result<Vec<KinematicState>> {
    spec.validate()?;
    if !(dt > 0.0) {
        return Err(Error::InvalidTrajectory("dt must be positive".into()));
    }
    let mut out = Vec::with_capacity(steps);
    let mut p = Vec2::new(spec.start[0], spec.start[1]);
    let mut heading = spec.heading;
    let v = spec.speed;
    for n in 0..steps {
        out.push(KinematicState::new(p, Vec2::new(heading.cos(), heading.sin()) * v));
        let omega = spec.turn_rate_at(n);
        if omega == 0.0 {
            p += Vec2::new(heading.cos(), heading.sin()) * (v * dt);
        } else {
            let next = heading + omega * dt;
            p += Vec2::new(next.sin() - heading.sin(), heading.cos() - next.cos()) * (v / omega);
            heading = next;
        }
    }
    Ok(out)
}

pub fn generate_ground_truth(scenario: &Scenario) -> Result<GroundTruth> {
    let bias = scenario.true_bias();
    let steps = generate_trajectory(&scenario.trajectory, scenario.steps, scenario.dt)?
        .into_iter()
        .enumerate()
        .map(|(i, k)| TruthStep {
            step: i + 1,
            kinematic: k,
            device: device_position(&k, &bias),
        })
        .collect();
    Ok(GroundTruth {
        steps,
        bias,
        extent: scenario.true_extent(),
    })
}

/// Linear amplitude after free-space pathloss over `distance`, given the SNR
/// in dB at 1 m. `amplitude²` is the SNR.
pub fn amplitude_from_path(distance: f64, ref_db: f64) -> f64 {
    10f64.powf((ref_db - 20.0 * distance.log10()) / 20.0)
}

/// Measurements of one scenario.
#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    pub anchors: usize,
    pub include_self_pairs: bool,
    pub frames: Vec<MeasurementFrame>,
}

impl Dataset {
    /// Checks that the dataset was produced for `scenario`.
    pub fn check_against(&self, scenario: &Scenario) -> Result<()> {
        let mismatch = |m: String| Err(Error::DatasetMismatch(m));
        if self.anchors != scenario.anchors.len() {
            return mismatch(format!(
                "dataset has {} anchors, scenario {}",
                self.anchors,
                scenario.anchors.len()
            ));
        }
        if self.frames.len() != scenario.steps {
            return mismatch(format!(
                "dataset has {} steps, scenario {}",
                self.frames.len(),
                scenario.steps
            ));
        }
        let d_max = scenario.measurement.d_max;
        for f in &self.frames {
            let all = f
                .active
                .iter()
                .flatten()
                .chain(f.passive.iter().flat_map(|l| l.measurements.iter()));
            for z in all {
                if !(0.0..=d_max).contains(&z.distance) || !(z.amplitude > 0.0) {
                    return mismatch(format!(
                        "step {}: measurement (d = {}, u = {}) outside the scenario support",
                        f.step, z.distance, z.amplitude
                    ));
                }
            }
        }
        Ok(())
    }
}

/// Generates frames for one scenario.
#[derive(Clone, Debug)]
pub struct Synthesizer {
    pub anchors: Vec<Vec2>,
    pub consts: SceneConstants,
    pub extent: ExtentIdeal,
    pub ref_db: f64,
    pub clutter_span_db: f64,
    pub blockage_mode: BlockageMode,
    pub include_self_pairs: bool,
    blocked: Vec<Vec<bool>>,
}

impl Synthesizer {
    pub fn new(scenario: &Scenario) -> Result<Self> {
        scenario.validate()?;
        let blocked = (1..=scenario.steps)
            .map(|n| (0..scenario.anchors.len()).map(|j| scenario.is_blocked(n, j)).collect())
            .collect();
        Ok(Self {
            anchors: scenario.anchor_positions(),
            consts: scenario.constants(),
            extent: scenario.true_extent(),
            ref_db: scenario.measurement.ref_db,
            clutter_span_db: scenario.measurement.clutter_span_db,
            blockage_mode: scenario.blockage_mode,
            include_self_pairs: scenario.include_self_pairs,
            blocked,
        })
    }

    pub fn is_blocked(&self, step: usize, anchor: usize) -> bool {
        step >= 1 && self.blocked.get(step - 1).is_some_and(|b| b[anchor])
    }

    /// Noisy measurement of a path of length `path`, or `None` when it is
    /// below the detection threshold or outside `[0, d_max]`.
    fn path_measurement<R: Rng + ?Sized>(&self, path: f64, rng: &mut R) -> Option<Measurement> {
        let u = amplitude_from_path(path, self.ref_db);
        if u < self.consts.gamma {
            return None;
        }
        let sd = ranging_variance(u, self.consts.bandwidth, self.consts.speed_of_light).sqrt();
        let noise: f64 = rng.sample(StandardNormal);
        let d = path + sd * noise;
        (0.0..=self.consts.d_max)
            .contains(&d)
            .then_some(Measurement::new(d, u))
    }

    fn clutter<R: Rng + ?Sized>(&self, rng: &mut R) -> Measurement {
        let d = rng.random_range(0.0..=self.consts.d_max);
        let db = if self.clutter_span_db > 0.0 {
            rng.random_range(0.0..self.clutter_span_db)
        } else {
            0.0
        };
        Measurement::new(d, self.consts.gamma * 10f64.powf(db / 20.0))
    }

    fn poisson<R: Rng + ?Sized>(mean: f64, rng: &mut R) -> usize {
        if mean <= 0.0 {
            return 0;
        }
        Poisson::new(mean).map(|p| p.sample(rng) as usize).unwrap_or(0)
    }

    fn scatterer<R: Rng + ?Sized>(&self, p: &Vec2, rx: &Vec2, rng: &mut R) -> Vec2 {
        // the EO center never sits on an anchor in a valid scenario; fall
        // back to the +x sector if it does
        let phi = geometry::aspect_angle(p, rx).unwrap_or(0.0);
        geometry::sample_ideal_scatterer(p, &self.extent, phi, self.consts.opening_angle, rng)
    }

    /// Active measurements per receiving anchor: the LOS path, object
    /// scatter and clutter, shuffled.
    pub fn generate_active_frame<R: Rng + ?Sized>(
        &self,
        truth: &TruthStep,
        rng: &mut R,
    ) -> Vec<Vec<Measurement>> {
        let p = truth.kinematic.position;
        let m = truth.device;
        self.anchors
            .iter()
            .enumerate()
            .map(|(j, a)| {
                let blocked = self.is_blocked(truth.step, j);
                let mut out = Vec::new();
                if blocked && self.blockage_mode == BlockageMode::Full {
                    return out;
                }
                if !blocked {
                    out.extend(self.path_measurement((m - a).norm(), rng));
                }
                for _ in 0..Self::poisson(self.consts.mu_m, rng) {
                    let q = self.scatterer(&p, a, rng);
                    out.extend(self.path_measurement((m - q).norm() + (q - a).norm(), rng));
                }
                for _ in 0..Self::poisson(self.consts.mu_c, rng) {
                    out.push(self.clutter(rng));
                }
                out.shuffle(rng);
                out
            })
            .collect()
    }

    /// Passive measurements per ordered `(rx, tx)` link. Blockage does not
    /// affect passive paths.
    pub fn generate_passive_frame<R: Rng + ?Sized>(
        &self,
        truth: &TruthStep,
        rng: &mut R,
    ) -> Vec<PassiveLink> {
        let p = truth.kinematic.position;
        ordered_pairs(self.anchors.len(), self.include_self_pairs)
            .map(|(rx, tx)| {
                let (a_rx, a_tx) = (self.anchors[rx], self.anchors[tx]);
                let mut measurements = Vec::new();
                for _ in 0..Self::poisson(self.consts.mu_m, rng) {
                    let q = self.scatterer(&p, &a_rx, rng);
                    measurements.extend(
                        self.path_measurement((a_tx - q).norm() + (q - a_rx).norm(), rng),
                    );
                }
                for _ in 0..Self::poisson(self.consts.mu_c, rng) {
                    measurements.push(self.clutter(rng));
                }
                measurements.shuffle(rng);
                PassiveLink { rx, tx, measurements }
            })
            .collect()
    }

    pub fn generate_frame<R: Rng + ?Sized>(&self, truth: &TruthStep, rng: &mut R) -> MeasurementFrame {
        MeasurementFrame {
            step: truth.step,
            active: self.generate_active_frame(truth, rng),
            passive: self.generate_passive_frame(truth, rng),
        }
    }

    /// Frames for every step; step `n` draws from its own stream so the
    /// result does not depend on the number of worker threads.
    pub fn generate(&self, truth: &GroundTruth, seed: u64) -> Dataset {
        let base = seed::derive_seed(seed, Purpose::Synthesis, 0);
        let frames = truth
            .steps
            .par_iter()
            .map(|t| {
                let mut rng: StreamRng = seed::child_stream(base, t.step as u64);
                self.generate_frame(t, &mut rng)
            })
            .collect();
        Dataset {
            anchors: self.anchors.len(),
            include_self_pairs: self.include_self_pairs,
            frames,
        }
    }
}

/// Ground truth and measurements for `scenario` under `seed`.
pub fn simulate(scenario: &Scenario, seed: u64) -> Result<(GroundTruth, Dataset)> {
    let truth = generate_ground_truth(scenario)?;
    let dataset = Synthesizer::new(scenario)?.generate(&truth, seed);
    Ok((truth, dataset))
}
