//! Scenario files.
//!
//! A scenario is a versioned JSON document holding the anchor layout, the
//! ground-truth trajectory, the blockage schedule, measurement constants, and
//! the tracker's model parameters. [`Scenario::reference`] is the committed
//! default and reproduces the reference experiment.

use std::f64::consts::PI;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::AspectSign;
use crate::likelihood::UtParams;
use crate::motion::{MotionParams, PriorConfig};
use crate::synthesis::{Segment, TrajectorySpec};
use crate::types::{Anchor, BiasState, ExtentIdeal, SceneConstants, Vec2};

pub const SCHEMA_VERSION: u32 = 1;

/// Field reference printed by the CLI help.
pub const SCHEMA_HELP: &str = "\
Scenario JSON schema (version 1); angles in radians, lengths in meters:
  schema_version            must be 1
  anchors                   [[x, y], ...] anchor positions, anchor ids are 1-based in file order
  steps                     number of time steps N
  dt                        step duration (s)
  trajectory.start          [x, y] EO center at step 1
  trajectory.heading        initial heading
  trajectory.speed          constant speed (m/s)
  trajectory.segments       [{steps, turn_rate}], turn_rate in rad/s, 0 = straight;
                            steps after the last segment continue straight
  blockage                  [{first, last, anchors: [ids]}], inclusive step ranges without LOS
  blockage_mode             \"full\" drops every active measurement of a blocked anchor,
                            \"los_only\" drops only its LOS path
  include_self_pairs        also form passive links (j, j)
  aspect_sign               \"toward_anchor\" or \"away_from_anchor\" side of the scattering ellipse
  measurement.d_max         maximum measurable distance
  measurement.threshold_db  detection threshold as SNR in dB (amplitude gamma = 10^(dB/20))
  measurement.bandwidth_hz  RMS bandwidth
  measurement.speed_of_light propagation speed (m/s)
  measurement.opening_angle scattering sector width
  measurement.mu_m          mean object-scatter measurements per link
  measurement.mu_c          mean clutter measurements per link
  measurement.ref_db        SNR at 1 m path length (dB); free-space pathloss beyond
  measurement.clutter_span_db clutter SNR drawn uniformly in [threshold_db, threshold_db + span]
  truth.bias_range          device offset from the EO center
  truth.bias_angle          device offset direction
  truth.semi_major          EO ellipse semi-axis along x
  truth.semi_minor          EO ellipse semi-axis along y
  truth.width               scattering width perpendicular to the EO boundary
  motion.sigma_a            acceleration std (m/s^2)
  motion.sigma_rho          bias range random-walk std
  motion.sigma_phi          bias angle random-walk std
  motion.sigma_r            radius random-walk std
  motion.sigma_w            width random-walk std
  prior.position_halfwidth  half-width of the initial position box around trajectory.start
  prior.velocity_std        initial velocity std (m/s)
  prior.bias_range          [lo, hi] uniform initial bias range
  prior.radius              [lo, hi] uniform initial radius
  prior.width               [lo, hi] uniform initial width
  tracker.mu_los            LOS existence weight in the active likelihood ratio
  tracker.ess_threshold     resample when ESS < threshold * particles
  tracker.ut_alpha/ut_beta/ut_kappa  scaled unscented-transform parameters
  tracker.ideal_samples     Monte-Carlo scatterers per anchor for the ideal model";

/// Inclusive range of one-based steps during which the listed one-based
/// anchors have no line of sight.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BlockageWindow {
    pub first: usize,
    pub last: usize,
    pub anchors: Vec<usize>,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BlockageMode {
    #[default]
    Full,
    LosOnly,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeasurementSettings {
    pub d_max: f64,
    pub threshold_db: f64,
    pub bandwidth_hz: f64,
    pub speed_of_light: f64,
    pub opening_angle: f64,
    pub mu_m: f64,
    pub mu_c: f64,
    pub ref_db: f64,
    pub clutter_span_db: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TruthSettings {
    pub bias_range: f64,
    pub bias_angle: f64,
    pub semi_major: f64,
    pub semi_minor: f64,
    pub width: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MotionSettings {
    pub sigma_a: f64,
    pub sigma_rho: f64,
    pub sigma_phi: f64,
    pub sigma_r: f64,
    pub sigma_w: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PriorSettings {
    pub position_halfwidth: f64,
    pub velocity_std: f64,
    pub bias_range: [f64; 2],
    pub radius: [f64; 2],
    pub width: [f64; 2],
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrackerSettings {
    pub mu_los: f64,
    pub ess_threshold: f64,
    pub ut_alpha: f64,
    pub ut_beta: f64,
    pub ut_kappa: f64,
    pub ideal_samples: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub schema_version: u32,
    pub anchors: Vec<[f64; 2]>,
    pub steps: usize,
    pub dt: f64,
    pub trajectory: TrajectorySpec,
    pub blockage: Vec<BlockageWindow>,
    #[serde(default)]
    pub blockage_mode: BlockageMode,
    #[serde(default)]
    pub include_self_pairs: bool,
    #[serde(default)]
    pub aspect_sign: AspectSign,
    pub measurement: MeasurementSettings,
    pub truth: TruthSettings,
    pub motion: MotionSettings,
    pub prior: PriorSettings,
    pub tracker: TrackerSettings,
}

impl Default for Scenario {
    fn default() -> Self {
        Self::reference()
    }
}

impl Scenario {
    /// The reference scenario: three anchors, 180 steps at 100 ms, a path with
    /// two turns, and the four-window OLOS schedule.
    pub fn reference() -> Self {
        let turn = PI / 2.0 / 3.0;
        Scenario {
            schema_version: SCHEMA_VERSION,
            anchors: vec![[4.0, 4.5], [-4.0, 4.5], [0.0, -5.0]],
            steps: 180,
            dt: 0.1,
            trajectory: TrajectorySpec {
                start: [1.5, -2.0],
                heading: PI,
                speed: 0.5,
                segments: vec![
                    Segment { steps: 40, turn_rate: 0.0 },
                    Segment { steps: 30, turn_rate: -turn },
                    Segment { steps: 40, turn_rate: 0.0 },
                    Segment { steps: 30, turn_rate: turn },
                    Segment { steps: 40, turn_rate: 0.0 },
                ],
            },
            blockage: vec![
                BlockageWindow { first: 31, last: 60, anchors: vec![1, 2, 3] },
                BlockageWindow { first: 61, last: 80, anchors: vec![1, 2] },
                BlockageWindow { first: 81, last: 110, anchors: vec![2] },
                BlockageWindow { first: 111, last: 130, anchors: vec![1, 2, 3] },
            ],
            blockage_mode: BlockageMode::Full,
            include_self_pairs: false,
            aspect_sign: AspectSign::TowardAnchor,
            measurement: MeasurementSettings {
                d_max: 20.0,
                threshold_db: 6.0,
                bandwidth_hz: 1e8,
                speed_of_light: 299_792_458.0,
                opening_angle: 2.0 * PI / 3.0,
                mu_m: 5.0,
                mu_c: 5.0,
                ref_db: 30.0,
                clutter_span_db: 10.0,
            },
            truth: TruthSettings {
                bias_range: 0.32,
                bias_angle: -PI / 3.0,
                semi_major: 0.3,
                semi_minor: 0.2,
                width: 0.1,
            },
            motion: MotionSettings {
                sigma_a: 2.0,
                sigma_rho: 0.1,
                sigma_phi: 0.5,
                sigma_r: 0.05,
                sigma_w: 0.05,
            },
            prior: PriorSettings {
                position_halfwidth: 1.0,
                velocity_std: 1.0,
                bias_range: [0.0, 0.5],
                radius: [0.1, 0.5],
                width: [0.02, 0.2],
            },
            tracker: TrackerSettings {
                mu_los: 1.0,
                ess_threshold: 0.5,
                ut_alpha: 1.0,
                ut_beta: 2.0,
                ut_kappa: 0.0,
                ideal_samples: 50,
            },
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let s: Scenario = serde_json::from_str(text)?;
        s.validate()?;
        Ok(s)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()? + "\n").map_err(|e| Error::io(path, e))
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidScenario(msg));
        if self.schema_version != SCHEMA_VERSION {
            return bad(format!(
                "unsupported schema_version {} (expected {SCHEMA_VERSION})",
                self.schema_version
            ));
        }
        if self.anchors.len() < 2 {
            return bad("at least two anchors are required for passive links".into());
        }
        for (i, a) in self.anchors.iter().enumerate() {
            if !a.iter().all(|v| v.is_finite()) {
                return bad(format!("anchor {} has a non-finite position", i + 1));
            }
            for b in &self.anchors[..i] {
                if a == b {
                    return bad(format!("anchor {} duplicates an earlier anchor", i + 1));
                }
            }
        }
        if !(self.dt > 0.0) {
            return bad("dt must be positive".into());
        }
        for w in &self.blockage {
            if w.first < 1 || w.last < w.first || w.last > self.steps {
                return bad(format!(
                    "blockage window [{}, {}] outside steps [1, {}]",
                    w.first, w.last, self.steps
                ));
            }
            if let Some(a) = w.anchors.iter().find(|&&a| a < 1 || a > self.anchors.len()) {
                return bad(format!("blockage names unknown anchor {a}"));
            }
        }
        self.constants()
            .validate()
            .map_err(Error::InvalidScenario)?;
        let m = &self.measurement;
        if !(m.ref_db.is_finite() && m.clutter_span_db >= 0.0) {
            return bad("ref_db must be finite and clutter_span_db nonnegative".into());
        }
        let t = &self.truth;
        if !(t.semi_major >= t.semi_minor && t.semi_minor > 0.0 && t.width > 0.0 && t.bias_range >= 0.0) {
            return bad("truth extent needs semi_major >= semi_minor > 0, width > 0, bias_range >= 0".into());
        }
        let mo = &self.motion;
        for (name, v) in [
            ("sigma_a", mo.sigma_a),
            ("sigma_rho", mo.sigma_rho),
            ("sigma_phi", mo.sigma_phi),
            ("sigma_r", mo.sigma_r),
            ("sigma_w", mo.sigma_w),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return bad(format!("motion.{name} must be nonnegative"));
            }
        }
        let p = &self.prior;
        if !(p.position_halfwidth >= 0.0 && p.velocity_std >= 0.0) {
            return bad("prior widths must be nonnegative".into());
        }
        for (name, [lo, hi]) in [("bias_range", p.bias_range), ("radius", p.radius), ("width", p.width)] {
            if !(lo <= hi && lo >= 0.0) {
                return bad(format!("prior.{name} must satisfy 0 <= lo <= hi"));
            }
        }
        if !(p.radius[0] > 0.0 && p.width[0] > 0.0) {
            return bad("prior radius and width must be strictly positive".into());
        }
        let tr = &self.tracker;
        if !(tr.mu_los > 0.0 && (0.0..=1.0).contains(&tr.ess_threshold) && tr.ideal_samples >= 1) {
            return bad("tracker needs mu_los > 0, ess_threshold in [0, 1], ideal_samples >= 1".into());
        }
        self.trajectory.validate()?;
        Ok(())
    }

    pub fn anchors(&self) -> Vec<Anchor> {
        self.anchors
            .iter()
            .enumerate()
            .map(|(i, a)| Anchor::new(i + 1, Vec2::new(a[0], a[1])))
            .collect()
    }

    pub fn anchor_positions(&self) -> Vec<Vec2> {
        self.anchors.iter().map(|a| Vec2::new(a[0], a[1])).collect()
    }

    pub fn gamma(&self) -> f64 {
        10f64.powf(self.measurement.threshold_db / 20.0)
    }

    pub fn constants(&self) -> SceneConstants {
        let m = &self.measurement;
        SceneConstants {
            d_max: m.d_max,
            gamma: self.gamma(),
            bandwidth: m.bandwidth_hz,
            speed_of_light: m.speed_of_light,
            opening_angle: m.opening_angle,
            mu_m: m.mu_m,
            mu_c: m.mu_c,
        }
    }

    pub fn motion_params(&self) -> MotionParams {
        let m = &self.motion;
        MotionParams {
            dt: self.dt,
            sigma_a: m.sigma_a,
            sigma_rho: m.sigma_rho,
            sigma_phi: m.sigma_phi,
            sigma_r: m.sigma_r,
            sigma_w: m.sigma_w,
        }
    }

    pub fn prior_config(&self) -> PriorConfig {
        let p = &self.prior;
        PriorConfig {
            center: Vec2::new(self.trajectory.start[0], self.trajectory.start[1]),
            position_halfwidth: p.position_halfwidth,
            velocity_std: p.velocity_std,
            bias_range: (p.bias_range[0], p.bias_range[1]),
            radius: (p.radius[0], p.radius[1]),
            width: (p.width[0], p.width[1]),
        }
    }

    pub fn ut_params(&self) -> UtParams {
        UtParams {
            alpha: self.tracker.ut_alpha,
            beta: self.tracker.ut_beta,
            kappa: self.tracker.ut_kappa,
        }
    }

    pub fn true_bias(&self) -> BiasState {
        BiasState::new(self.truth.bias_range, self.truth.bias_angle)
    }

    pub fn true_extent(&self) -> ExtentIdeal {
        ExtentIdeal::new(self.truth.semi_major, self.truth.semi_minor, self.truth.width)
    }

    /// Whether anchor index `anchor` (zero-based) lacks LOS at one-based `step`.
    pub fn is_blocked(&self, step: usize, anchor: usize) -> bool {
        self.blockage
            .iter()
            .any(|w| (w.first..=w.last).contains(&step) && w.anchors.contains(&(anchor + 1)))
    }

    pub fn blocked_count(&self, step: usize) -> usize {
        (0..self.anchors.len()).filter(|&j| self.is_blocked(step, j)).count()
    }

    pub fn pair_count(&self) -> usize {
        let j = self.anchors.len();
        if self.include_self_pairs {
            j * j
        } else {
            j * (j - 1)
        }
    }
}
