//! Domain types shared by every other module.

use std::f64::consts::{PI, TAU};

use nalgebra::Vector2;

pub type Vec2 = Vector2<f64>;

/// Wraps an angle into `(-π, π]`.
pub fn wrap_angle(angle: f64) -> f64 {
    let a = angle.rem_euclid(TAU);
    if a > PI {
        a - TAU
    } else {
        a
    }
}

/// Position of the EO center and its velocity.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KinematicState {
    pub position: Vec2,
    pub velocity: Vec2,
}

impl KinematicState {
    pub fn new(position: Vec2, velocity: Vec2) -> Self {
        Self { position, velocity }
    }

    pub fn is_finite(&self) -> bool {
        self.position.iter().chain(self.velocity.iter()).all(|v| v.is_finite())
    }
}

/// Rigid offset of the radio device from the EO center, in polar form.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BiasState {
    pub range: f64,
    pub angle: f64,
}

impl BiasState {
    /// Builds a bias; the angle is normalized to `(-π, π]`.
    pub fn new(range: f64, angle: f64) -> Self {
        Self {
            range,
            angle: wrap_angle(angle),
        }
    }

    pub fn offset(&self) -> Vec2 {
        Vec2::new(self.angle.cos(), self.angle.sin()) * self.range
    }

    pub fn is_valid(&self) -> bool {
        self.range.is_finite() && self.range >= 0.0 && self.angle > -PI && self.angle <= PI
    }
}

/// Extent of the tracker's geometry-based model: circle radius and the
/// semi-minor width shared by all scattering ellipses.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ExtentGeo {
    pub radius: f64,
    pub width: f64,
}

impl ExtentGeo {
    pub fn new(radius: f64, width: f64) -> Self {
        Self { radius, width }
    }

    pub fn is_valid(&self) -> bool {
        self.radius > 0.0 && self.width > 0.0 && self.radius.is_finite() && self.width.is_finite()
    }
}

/// Extent of the ideal scattering model: an axis-aligned EO ellipse with
/// semi-axes `semi_major` (along x) and `semi_minor` (along y), and the
/// scattering-volume width perpendicular to its boundary.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ExtentIdeal {
    pub semi_major: f64,
    pub semi_minor: f64,
    pub width: f64,
}

impl ExtentIdeal {
    pub fn new(semi_major: f64, semi_minor: f64, width: f64) -> Self {
        Self {
            semi_major,
            semi_minor,
            width,
        }
    }

    /// A circle of radius `radius`.
    pub fn circle(radius: f64, width: f64) -> Self {
        Self::new(radius, radius, width)
    }

    pub fn is_valid(&self) -> bool {
        self.semi_major >= self.semi_minor && self.semi_minor > 0.0 && self.width > 0.0
    }
}

/// Kinematic, bias and extent state of the EO: the quantity being estimated.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AugmentedState {
    pub kinematic: KinematicState,
    pub bias: BiasState,
    pub extent: ExtentGeo,
}

impl AugmentedState {
    pub fn device_position(&self) -> Vec2 {
        device_position(&self.kinematic, &self.bias)
    }

    pub fn is_valid(&self) -> bool {
        self.kinematic.is_finite() && self.bias.is_valid() && self.extent.is_valid()
    }
}

/// Position of the radio device mounted on the EO.
pub fn device_position(kinematic: &KinematicState, bias: &BiasState) -> Vec2 {
    kinematic.position + bias.offset()
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Anchor {
    /// One-based anchor number as used in files and reports.
    pub id: usize,
    pub position: Vec2,
}

impl Anchor {
    pub fn new(id: usize, position: Vec2) -> Self {
        Self { id, position }
    }
}

/// One extracted path: distance and normalized (linear) amplitude.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Measurement {
    pub distance: f64,
    pub amplitude: f64,
}

impl Measurement {
    pub fn new(distance: f64, amplitude: f64) -> Self {
        Self {
            distance,
            amplitude,
        }
    }
}

/// Passive measurements of one ordered anchor pair. `rx` and `tx` are
/// zero-based anchor indices.
#[derive(Clone, Debug, PartialEq)]
pub struct PassiveLink {
    pub rx: usize,
    pub tx: usize,
    pub measurements: Vec<Measurement>,
}

/// All measurements of one time step.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct MeasurementFrame {
    /// One-based time step.
    pub step: usize,
    /// Active measurements, indexed by zero-based receiving anchor.
    pub active: Vec<Vec<Measurement>>,
    pub passive: Vec<PassiveLink>,
}

impl MeasurementFrame {
    /// An empty frame with one active slot per anchor and one link per pair.
    pub fn empty(step: usize, anchors: usize, include_self_pairs: bool) -> Self {
        Self {
            step,
            active: vec![Vec::new(); anchors],
            passive: ordered_pairs(anchors, include_self_pairs)
                .map(|(rx, tx)| PassiveLink {
                    rx,
                    tx,
                    measurements: Vec::new(),
                })
                .collect(),
        }
    }

    pub fn measurement_count(&self) -> usize {
        self.active.iter().map(Vec::len).sum::<usize>()
            + self.passive.iter().map(|l| l.measurements.len()).sum::<usize>()
    }

    pub fn link_mut(&mut self, rx: usize, tx: usize) -> Option<&mut PassiveLink> {
        self.passive.iter_mut().find(|l| l.rx == rx && l.tx == tx)
    }
}

/// Ordered `(rx, tx)` anchor pairs in row-major order.
pub fn ordered_pairs(anchors: usize, include_self_pairs: bool) -> impl Iterator<Item = (usize, usize)> {
    (0..anchors).flat_map(move |rx| {
        (0..anchors)
            .filter(move |&tx| include_self_pairs || tx != rx)
            .map(move |tx| (rx, tx))
    })
}

/// Scene-wide measurement constants.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SceneConstants {
    /// Maximum measurable distance (m).
    pub d_max: f64,
    /// Amplitude detection threshold (linear).
    pub gamma: f64,
    /// Root-mean-square bandwidth (Hz).
    pub bandwidth: f64,
    /// Propagation speed (m/s).
    pub speed_of_light: f64,
    /// Opening angle of the scattering sector (rad).
    pub opening_angle: f64,
    /// Mean number of object-related measurements per link.
    pub mu_m: f64,
    /// Mean number of clutter measurements per link.
    pub mu_c: f64,
}

impl SceneConstants {
    pub fn validate(&self) -> Result<(), String> {
        let positive = [
            ("d_max", self.d_max),
            ("gamma", self.gamma),
            ("bandwidth", self.bandwidth),
            ("speed_of_light", self.speed_of_light),
            ("opening_angle", self.opening_angle),
            ("mu_m", self.mu_m),
            ("mu_c", self.mu_c),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(format!("{name} must be finite and positive, got {v}"));
            }
        }
        if self.opening_angle > PI {
            return Err(format!(
                "opening_angle must lie in (0, π], got {}",
                self.opening_angle
            ));
        }
        Ok(())
    }
}
