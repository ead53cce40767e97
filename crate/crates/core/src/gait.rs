//! Sinusoidal per-motor pattern generator.
//!
//! Each motor follows `offset + amplitude * sin(2 pi t + phase)` with a fixed
//! one-second period, clamped to its joint limits. Commands toward a new
//! target are rate limited per frame and split into evenly spaced sub-steps.

use std::f64::consts::{PI, TAU};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::policy::PolicyOutput;

pub const MOTORS: usize = 18;
pub const JOINTS_PER_LEG: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Joint {
    Coxa,
    Femur,
    Tibia,
}

impl Joint {
    /// Motor `i` belongs to leg `i / 3`; its joint is `i % 3`.
    pub fn of_motor(motor: usize) -> Joint {
        match motor % JOINTS_PER_LEG {
            0 => Joint::Coxa,
            1 => Joint::Femur,
            _ => Joint::Tibia,
        }
    }
}

/// Angular range `[lo, hi]` in radians.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Range {
    pub lo: f64,
    pub hi: f64,
}

impl Range {
    pub fn from_degrees(lo: f64, hi: f64) -> Self {
        Self {
            lo: lo.to_radians(),
            hi: hi.to_radians(),
        }
    }

    pub fn midpoint(&self) -> f64 {
        0.5 * (self.lo + self.hi)
    }

    pub fn half_range(&self) -> f64 {
        0.5 * (self.hi - self.lo)
    }

    #[inline]
    pub fn clamp(&self, v: f64) -> f64 {
        v.clamp(self.lo, self.hi)
    }

    pub fn contains(&self, v: f64) -> bool {
        v >= self.lo && v <= self.hi
    }
}

/// Joint limits per joint class.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JointLimits {
    pub coxa: Range,
    pub femur: Range,
    pub tibia: Range,
}

impl Default for JointLimits {
    fn default() -> Self {
        Self {
            coxa: Range::from_degrees(-15.0, 15.0),
            femur: Range::from_degrees(40.0, 80.0),
            tibia: Range::from_degrees(-150.0, -105.0),
        }
    }
}

impl JointLimits {
    pub fn new(coxa: Range, femur: Range, tibia: Range) -> Result<Self> {
        for (name, r) in [("coxa", coxa), ("femur", femur), ("tibia", tibia)] {
            if !(r.lo.is_finite() && r.hi.is_finite() && r.lo < r.hi) {
                return Err(Error::Config(format!(
                    "{name} limits need lo < hi, got [{}, {}]",
                    r.lo, r.hi
                )));
            }
        }
        Ok(Self { coxa, femur, tibia })
    }

    pub fn joint(&self, joint: Joint) -> Range {
        match joint {
            Joint::Coxa => self.coxa,
            Joint::Femur => self.femur,
            Joint::Tibia => self.tibia,
        }
    }

    #[inline]
    pub fn motor(&self, motor: usize) -> Range {
        self.joint(Joint::of_motor(motor))
    }

    /// Every joint at the middle of its range.
    pub fn neutral_pose(&self) -> [f64; MOTORS] {
        std::array::from_fn(|m| self.motor(m).midpoint())
    }
}

/// Rate limit and slicing for motor commands.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaitConfig {
    /// Largest position change per frame, radians.
    pub dtheta_max: f64,
    /// Sub-steps each frame's motion is split into.
    pub slices: usize,
}

impl Default for GaitConfig {
    fn default() -> Self {
        Self {
            dtheta_max: 0.2,
            slices: 4,
        }
    }
}

impl GaitConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.dtheta_max.is_finite() && self.dtheta_max > 0.0) {
            return Err(Error::Config(format!(
                "dtheta_max must be positive, got {}",
                self.dtheta_max
            )));
        }
        if self.slices == 0 {
            return Err(Error::InvalidParameter("slices must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct MotorGait {
    pub phase: f64,
    pub amplitude: f64,
    pub offset: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GaitParams {
    pub motors: [MotorGait; MOTORS],
}

impl GaitParams {
    /// All motors held still at `pose`.
    pub fn stationary(pose: &[f64; MOTORS]) -> Self {
        Self {
            motors: std::array::from_fn(|m| MotorGait {
                phase: 0.0,
                amplitude: 0.0,
                offset: pose[m],
            }),
        }
    }
}

/// Maps raw policy values onto legal gait parameters: phase wrapped into
/// `[0, 2pi)`, amplitude `|raw|` capped at the half range, offset clamped
/// into the joint range.
pub fn normalize_params(raw: &PolicyOutput, limits: &JointLimits) -> Result<GaitParams> {
    let v = raw.values();
    if v.iter().any(|x| !x.is_finite()) {
        return Err(Error::InvalidInput("non-finite policy output".into()));
    }
    Ok(GaitParams {
        motors: std::array::from_fn(|m| {
            let range = limits.motor(m);
            MotorGait {
                phase: wrap_phase(v[3 * m]),
                amplitude: v[3 * m + 1].abs().min(range.half_range()),
                offset: range.clamp(v[3 * m + 2]),
            }
        }),
    })
}

fn wrap_phase(x: f64) -> f64 {
    let w = x.rem_euclid(TAU);
    // rem_euclid can round up to exactly TAU for tiny negative inputs
    if w >= TAU {
        0.0
    } else {
        w
    }
}

/// Instantaneous target of `motor` at time `t` seconds, inside its limits.
#[inline]
pub fn target_angle(params: &GaitParams, limits: &JointLimits, motor: usize, t: f64) -> f64 {
    let g = &params.motors[motor];
    limits
        .motor(motor)
        .clamp(g.offset + g.amplitude * (2.0 * PI * t + g.phase).sin())
}

#[derive(Debug, Clone, PartialEq)]
pub struct MotorCommand {
    pub motor: usize,
    /// Unconstrained target for this frame.
    pub target: f64,
    /// Positions the motor passes through during the frame; the last one is
    /// where it ends up.
    pub substeps: Vec<f64>,
}

impl MotorCommand {
    pub fn final_angle(&self) -> f64 {
        *self
            .substeps
            .last()
            .expect("commands always carry a sub-step")
    }
}

/// Builds the command moving `motor` from `prev_angle` toward its target at
/// time `t`, with the change capped at `dtheta_max` and split into
/// `slices` equal steps.
pub fn step_command(
    params: &GaitParams,
    limits: &JointLimits,
    cfg: &GaitConfig,
    motor: usize,
    prev_angle: f64,
    t: f64,
) -> Result<MotorCommand> {
    if cfg.slices == 0 {
        return Err(Error::InvalidParameter("slices must be at least 1".into()));
    }
    let range = limits.motor(motor);
    let target = target_angle(params, limits, motor, t);
    let delta = (target - prev_angle).clamp(-cfg.dtheta_max, cfg.dtheta_max);
    let n = cfg.slices as f64;
    let substeps = (1..=cfg.slices)
        .map(|k| range.clamp(prev_angle + delta * (k as f64 / n)))
        .collect();
    Ok(MotorCommand {
        motor,
        target,
        substeps,
    })
}
