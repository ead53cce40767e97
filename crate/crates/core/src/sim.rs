//! Kinematic hexapod surrogate.
//!
//! Motors are position controlled and reach their commanded sub-step targets
//! exactly. Velocity and acceleration are finite differences of successive
//! frame positions. The body moves in the plane according to a stance/sweep
//! rule:
//!
//! * a leg is in stance while its femur sits in the lower `stance_fraction`
//!   of the femur range;
//! * each frame the body advances `gain * s * sum(-d coxa)` over stance legs,
//!   where `s = min(1, stance_legs / 3)` penalizes weak support;
//! * lateral motion uses the same sum with left legs counted positive and
//!   right legs negative, so mirrored gaits go straight.
//!
//! There is no contact solver and the robot cannot fall.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gait::{
    step_command, GaitConfig, GaitParams, JointLimits, MotorCommand, JOINTS_PER_LEG, MOTORS,
};
use crate::matrix::RealMatrix;

pub const LEGS: usize = 6;
/// Columns per pose frame: (position, velocity, acceleration) for 3 joints.
pub const POSE_COLS: usize = 9;
/// Frames in the state history window.
pub const HISTORY_LEN: usize = 50;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    /// Metres of body travel per radian of stance coxa sweep.
    pub gain: f64,
    /// Fraction of the femur range, from its lower limit, counted as stance.
    pub stance_fraction: f64,
    pub frames_per_subepisode: usize,
    pub subepisodes_per_episode: usize,
    /// Seconds per frame.
    pub frame_dt: f64,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            gain: 0.02,
            stance_fraction: 1.0 / 3.0,
            // 3 s / 32 ms = 93.75, rounded up
            frames_per_subepisode: 94,
            subepisodes_per_episode: 5,
            frame_dt: 0.032,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.gain.is_finite() && self.gain > 0.0) {
            return Err(Error::Config(format!(
                "gain must be positive, got {}",
                self.gain
            )));
        }
        if !(self.stance_fraction > 0.0 && self.stance_fraction <= 1.0) {
            return Err(Error::Config(format!(
                "stance_fraction must lie in (0, 1], got {}",
                self.stance_fraction
            )));
        }
        if self.frames_per_subepisode == 0 || self.subepisodes_per_episode == 0 {
            return Err(Error::Config(
                "episode frame counts must be positive".into(),
            ));
        }
        if !(self.frame_dt.is_finite() && self.frame_dt > 0.0) {
            return Err(Error::Config(format!(
                "frame_dt must be positive, got {}",
                self.frame_dt
            )));
        }
        Ok(())
    }

    pub fn frames_per_episode(&self) -> usize {
        self.frames_per_subepisode * self.subepisodes_per_episode
    }
}

/// One 6x9 snapshot: row = leg, columns = (p, v, a) of coxa, femur, tibia.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PoseFrame(pub [[f64; POSE_COLS]; LEGS]);

impl PoseFrame {
    pub fn from_motors(p: &[f64; MOTORS], v: &[f64; MOTORS], a: &[f64; MOTORS]) -> Self {
        let mut rows = [[0.0; POSE_COLS]; LEGS];
        for m in 0..MOTORS {
            let (leg, joint) = (m / JOINTS_PER_LEG, m % JOINTS_PER_LEG);
            rows[leg][3 * joint] = p[m];
            rows[leg][3 * joint + 1] = v[m];
            rows[leg][3 * joint + 2] = a[m];
        }
        Self(rows)
    }

    pub fn position(&self, motor: usize) -> f64 {
        self.0[motor / JOINTS_PER_LEG][3 * (motor % JOINTS_PER_LEG)]
    }

    pub fn velocity(&self, motor: usize) -> f64 {
        self.0[motor / JOINTS_PER_LEG][3 * (motor % JOINTS_PER_LEG) + 1]
    }

    pub fn acceleration(&self, motor: usize) -> f64 {
        self.0[motor / JOINTS_PER_LEG][3 * (motor % JOINTS_PER_LEG) + 2]
    }

    pub fn to_matrix(&self) -> RealMatrix {
        RealMatrix::from_vec(LEGS, POSE_COLS, self.0.concat()).expect("pose entries are finite")
    }
}

/// The most recent [`HISTORY_LEN`] frames, newest first.
#[derive(Debug, Clone, PartialEq)]
pub struct StateHistory {
    frames: VecDeque<PoseFrame>,
}

impl StateHistory {
    pub fn new(first: PoseFrame) -> Self {
        let mut frames = VecDeque::with_capacity(HISTORY_LEN + 1);
        frames.push_front(first);
        Self { frames }
    }

    pub fn push(&mut self, frame: PoseFrame) {
        self.frames.push_front(frame);
        self.frames.truncate(HISTORY_LEN);
    }

    pub fn latest(&self) -> &PoseFrame {
        &self.frames[0]
    }

    /// Frames actually recorded (at most [`HISTORY_LEN`]).
    pub fn recorded(&self) -> usize {
        self.frames.len()
    }

    /// Frame blocks `M(t), M(t-1), ..., M(t-49)` side by side as a 6x450
    /// matrix. Slots older than the recorded frames repeat the oldest one.
    pub fn materialize(&self) -> RealMatrix {
        let oldest = self.frames.back().expect("history is never empty");
        let width = POSE_COLS * HISTORY_LEN;
        let mut data = Vec::with_capacity(LEGS * width);
        for leg in 0..LEGS {
            for slot in 0..HISTORY_LEN {
                let frame = self.frames.get(slot).unwrap_or(oldest);
                data.extend_from_slice(&frame.0[leg]);
            }
        }
        RealMatrix::from_vec(LEGS, width, data).expect("pose entries are finite")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RobotState {
    pub angles: [f64; MOTORS],
    pub velocities: [f64; MOTORS],
    pub accelerations: [f64; MOTORS],
    /// Planar body position in metres.
    pub body: [f64; 2],
    pub elapsed_frames: u64,
}

impl RobotState {
    /// All joints at mid-range, at rest, at the origin.
    pub fn initial(limits: &JointLimits) -> Self {
        Self {
            angles: limits.neutral_pose(),
            velocities: [0.0; MOTORS],
            accelerations: [0.0; MOTORS],
            body: [0.0, 0.0],
            elapsed_frames: 0,
        }
    }

    pub fn pose(&self) -> PoseFrame {
        PoseFrame::from_motors(&self.angles, &self.velocities, &self.accelerations)
    }
}

/// Advances one frame: motors end on their last sub-step target, finite
/// differences give velocity and acceleration, and the body moves by the
/// stance/sweep rule.
pub fn step_frame(
    state: &RobotState,
    commands: &[MotorCommand],
    cfg: &SimConfig,
    limits: &JointLimits,
) -> RobotState {
    debug_assert_eq!(commands.len(), MOTORS);
    let dt = cfg.frame_dt;
    let mut next = state.clone();
    for cmd in commands {
        let m = cmd.motor;
        let p = cmd.final_angle();
        let v = (p - state.angles[m]) / dt;
        next.angles[m] = p;
        next.velocities[m] = v;
        next.accelerations[m] = (v - state.velocities[m]) / dt;
    }

    let femur = limits.femur;
    let stance_limit = femur.lo + cfg.stance_fraction * (femur.hi - femur.lo);
    let mut stance = 0usize;
    let mut forward = 0.0;
    let mut lateral = 0.0;
    for leg in 0..LEGS {
        let coxa = JOINTS_PER_LEG * leg;
        if next.angles[coxa + 1] > stance_limit {
            continue;
        }
        stance += 1;
        // -omega * dt is just the negated coxa sweep over the frame
        let push = -(next.angles[coxa] - state.angles[coxa]);
        forward += push;
        lateral += if leg < LEGS / 2 { push } else { -push };
    }
    let support = (stance as f64 / 3.0).min(1.0);
    next.body[0] += cfg.gain * support * forward;
    next.body[1] += cfg.gain * support * lateral;
    next.elapsed_frames += 1;
    next
}

/// One row of the optional per-frame trace.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceRow {
    pub frame: u64,
    pub x: f64,
    pub y: f64,
    pub angles: [f64; MOTORS],
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeResult {
    /// Straight-line distance between start and end body positions, metres.
    pub fitness: f64,
    pub frames: usize,
    pub history: StateHistory,
}

/// A robot plus its rolling history. One instance per trial; it is never
/// reset between episodes unless the caller builds a new one.
#[derive(Debug, Clone)]
pub struct Simulator {
    cfg: SimConfig,
    gait: GaitConfig,
    limits: JointLimits,
    state: RobotState,
    history: StateHistory,
    trace: Option<Vec<TraceRow>>,
}

impl Simulator {
    pub fn new(cfg: SimConfig, gait: GaitConfig, limits: JointLimits) -> Result<Self> {
        cfg.validate()?;
        gait.validate()?;
        let state = RobotState::initial(&limits);
        let history = StateHistory::new(state.pose());
        Ok(Self {
            cfg,
            gait,
            limits,
            state,
            history,
            trace: None,
        })
    }

    pub fn config(&self) -> &SimConfig {
        &self.cfg
    }

    pub fn limits(&self) -> &JointLimits {
        &self.limits
    }

    pub fn state(&self) -> &RobotState {
        &self.state
    }

    pub fn history(&self) -> &StateHistory {
        &self.history
    }

    /// Moves the body without touching the joints.
    pub fn set_body_position(&mut self, x: f64, y: f64) {
        self.state.body = [x, y];
    }

    pub fn enable_trace(&mut self) {
        self.trace.get_or_insert_with(Vec::new);
    }

    pub fn take_trace(&mut self) -> Vec<TraceRow> {
        self.trace.take().unwrap_or_default()
    }

    fn advance(&mut self, params: &GaitParams) -> Result<()> {
        let t = (self.state.elapsed_frames + 1) as f64 * self.cfg.frame_dt;
        let commands = (0..MOTORS)
            .map(|m| step_command(params, &self.limits, &self.gait, m, self.state.angles[m], t))
            .collect::<Result<Vec<_>>>()?;
        self.state = step_frame(&self.state, &commands, &self.cfg, &self.limits);
        self.history.push(self.state.pose());
        if let Some(trace) = self.trace.as_mut() {
            trace.push(TraceRow {
                frame: self.state.elapsed_frames,
                x: self.state.body[0],
                y: self.state.body[1],
                angles: self.state.angles,
            });
        }
        Ok(())
    }

    /// Runs `frames` frames under fixed gait parameters. Frame `f` tracks the
    /// pattern at the absolute simulated time of its end.
    pub fn run_frames(&mut self, params: &GaitParams, frames: usize) -> Result<()> {
        for _ in 0..frames {
            self.advance(params)?;
        }
        Ok(())
    }

    pub fn run_subepisode(&mut self, params: &GaitParams) -> Result<()> {
        self.run_frames(params, self.cfg.frames_per_subepisode)
    }

    /// One fitness episode. The controller is asked for new gait parameters
    /// from the current history at the start of every sub-episode.
    pub fn run_episode<F>(&mut self, mut controller: F) -> Result<EpisodeResult>
    where
        F: FnMut(&StateHistory) -> Result<GaitParams>,
    {
        let start = self.state.body;
        for _ in 0..self.cfg.subepisodes_per_episode {
            let params = controller(&self.history)?;
            self.run_subepisode(&params)?;
        }
        let end = self.state.body;
        Ok(EpisodeResult {
            fitness: (end[0] - start[0]).hypot(end[1] - start[1]),
            frames: self.cfg.frames_per_episode(),
            history: self.history.clone(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gait::{GaitParams, MotorGait};
    use approx::assert_abs_diff_eq;
    use std::f64::consts::{FRAC_PI_2, PI};

    fn sim() -> Simulator {
        Simulator::new(
            SimConfig::default(),
            GaitConfig::default(),
            JointLimits::default(),
        )
        .unwrap()
    }

    fn hold(angles: [f64; MOTORS]) -> Vec<MotorCommand> {
        (0..MOTORS)
            .map(|m| MotorCommand {
                motor: m,
                target: angles[m],
                substeps: vec![angles[m]],
            })
            .collect()
    }

    /// Alternating tripod: legs {0, 2, 4} and {1, 3, 5} half a cycle apart,
    /// femur a quarter cycle ahead of coxa so the foot is down during the
    /// backward coxa sweep.
    pub(crate) fn tripod(limits: &JointLimits) -> GaitParams {
        let mut motors = [MotorGait::default(); MOTORS];
        for leg in 0..LEGS {
            let base = if leg % 2 == 0 { 0.0 } else { PI };
            let coxa = 3 * leg;
            motors[coxa] = MotorGait {
                phase: base,
                amplitude: limits.coxa.half_range(),
                offset: limits.coxa.midpoint(),
            };
            motors[coxa + 1] = MotorGait {
                phase: base + FRAC_PI_2,
                amplitude: limits.femur.half_range(),
                offset: limits.femur.midpoint(),
            };
            motors[coxa + 2] = MotorGait {
                phase: 0.0,
                amplitude: 0.0,
                offset: limits.tibia.midpoint(),
            };
        }
        GaitParams { motors }
    }

    #[test]
    fn default_timing() {
        let cfg = SimConfig::default();
        assert_abs_diff_eq!(
            cfg.frames_per_subepisode as f64 * cfg.frame_dt,
            3.008,
            epsilon = 1e-12
        );
        assert_eq!(cfg.frames_per_episode(), 470);
    }

    #[test]
    fn stationary_motors_stay_put() {
        let limits = JointLimits::default();
        let cfg = SimConfig::default();
        let s0 = RobotState::initial(&limits);
        let cmds = hold(s0.angles);
        let s2 = step_frame(&step_frame(&s0, &cmds, &cfg, &limits), &cmds, &cfg, &limits);
        assert_eq!(s2.body, [0.0, 0.0]);
        assert_eq!(s2.velocities, [0.0; MOTORS]);
        assert_eq!(s2.accelerations, [0.0; MOTORS]);
        assert_eq!(s2.elapsed_frames, 2);
    }

    #[test]
    fn one_frame_closed_form() {
        let limits = JointLimits::default();
        let cfg = SimConfig::default();
        let mut s0 = RobotState::initial(&limits);
        for leg in 0..LEGS {
            s0.angles[3 * leg + 1] = limits.femur.lo; // every leg in stance
        }
        let mut target = s0.angles;
        for leg in 0..LEGS {
            target[3 * leg] = -0.1;
        }
        let s1 = step_frame(&s0, &hold(target), &cfg, &limits);
        // 6 stance legs, support 1, each sweeping 0.1 rad backward: 0.02 * 6 * 0.1
        assert_abs_diff_eq!(s1.body[0], 0.012, epsilon = 1e-15);
        assert_abs_diff_eq!(s1.body[1], 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(s1.velocities[0], -0.1 / 0.032, epsilon = 1e-12);
        assert_abs_diff_eq!(s1.accelerations[0], -0.1 / 0.032 / 0.032, epsilon = 1e-9);

        // two stance legs on the left only: support 2/3, lateral positive
        let mut s0 = RobotState::initial(&limits);
        s0.angles[1] = limits.femur.lo;
        s0.angles[4] = limits.femur.lo;
        let mut target = s0.angles;
        target[0] = -0.05;
        target[3] = -0.05;
        let s1 = step_frame(&s0, &hold(target), &cfg, &limits);
        let expected = 0.02 * (2.0 / 3.0) * 0.1;
        assert_abs_diff_eq!(s1.body[0], expected, epsilon = 1e-15);
        assert_abs_diff_eq!(s1.body[1], expected, epsilon = 1e-15);
    }

    #[test]
    fn negated_coxa_sweep_negates_displacement() {
        let limits = JointLimits::default();
        let cfg = SimConfig::default();
        let mut s0 = RobotState::initial(&limits);
        for leg in 0..4 {
            s0.angles[3 * leg + 1] = limits.femur.lo + 0.01;
        }
        let sweeps = [0.03, -0.02, 0.07, 0.01, 0.05, -0.04];
        let mut fwd = s0.angles;
        let mut back = s0.angles;
        for leg in 0..LEGS {
            fwd[3 * leg] = sweeps[leg];
            back[3 * leg] = -sweeps[leg];
        }
        let a = step_frame(&s0, &hold(fwd), &cfg, &limits);
        let b = step_frame(&s0, &hold(back), &cfg, &limits);
        assert_abs_diff_eq!(a.body[0], -b.body[0], epsilon = 1e-15);
        assert!(a.body[0] != 0.0);
    }

    #[test]
    fn history_materialization() {
        let limits = JointLimits::default();
        let s = RobotState::initial(&limits);
        let mut h = StateHistory::new(s.pose());
        let m = h.materialize();
        assert_eq!(m.shape(), (6, 450));
        for leg in 0..LEGS {
            for slot in 1..HISTORY_LEN {
                assert_eq!(&m.row(leg)[9 * slot..9 * slot + 9], &m.row(leg)[..9]);
            }
        }
        for i in 0..60 {
            let mut p = [0.0; MOTORS];
            p[0] = i as f64;
            h.push(PoseFrame::from_motors(&p, &[0.0; MOTORS], &[0.0; MOTORS]));
        }
        assert_eq!(h.recorded(), HISTORY_LEN);
        let m = h.materialize();
        assert_eq!(m.get(0, 0), 59.0);
        assert_eq!(m.get(0, 9), 58.0);
        assert_eq!(m.get(0, 9 * 49), 10.0);
        assert_eq!(h.latest().to_matrix(), m.top_left(6, 9));
    }

    #[test]
    fn pose_frame_layout() {
        let p: [f64; MOTORS] = std::array::from_fn(|i| i as f64);
        let v: [f64; MOTORS] = std::array::from_fn(|i| 100.0 + i as f64);
        let a: [f64; MOTORS] = std::array::from_fn(|i| 200.0 + i as f64);
        let f = PoseFrame::from_motors(&p, &v, &a);
        // row 1 holds motors 3, 4, 5 as p, v, a triples
        assert_eq!(
            f.0[1],
            [3.0, 103.0, 203.0, 4.0, 104.0, 204.0, 5.0, 105.0, 205.0]
        );
        assert_eq!(f.velocity(17), 117.0);
    }

    #[test]
    fn zero_amplitude_subepisode_is_stationary() {
        let mut s = sim();
        let params = GaitParams::stationary(&s.limits().neutral_pose());
        s.run_subepisode(&params).unwrap();
        assert_eq!(s.state().body, [0.0, 0.0]);
        assert_eq!(s.state().elapsed_frames, 94);
    }

    #[test]
    fn subepisodes_are_deterministic() {
        let limits = JointLimits::default();
        let mut a = sim();
        let mut b = sim();
        a.run_subepisode(&tripod(&limits)).unwrap();
        b.run_subepisode(&tripod(&limits)).unwrap();
        assert_eq!(a.state(), b.state());
        assert_eq!(a.history(), b.history());
    }

    #[test]
    fn episode_fitness_examples() {
        let limits = JointLimits::default();
        let mut s = sim();
        let still = GaitParams::stationary(&limits.neutral_pose());
        let r = s.run_episode(|_| Ok(still.clone())).unwrap();
        assert_eq!(r.fitness, 0.0);
        assert_eq!(r.frames, 470);

        let mut s = sim();
        let walk = tripod(&limits);
        let r = s.run_episode(|_| Ok(walk.clone())).unwrap();
        assert!(r.fitness > 0.0, "tripod fitness {}", r.fitness);
        // mirrored tripod should go (almost) straight
        assert!(s.state().body[0] > 0.0);
        assert!(s.state().body[1].abs() < 0.1 * s.state().body[0]);

        // the robot is not reset, a second episode starts where the first ended
        let first_end = s.state().body;
        let r2 = s.run_episode(|_| Ok(walk.clone())).unwrap();
        assert!(r2.fitness > 0.0);
        assert_ne!(s.state().body, first_end);
    }

    #[test]
    fn fitness_is_translation_invariant() {
        let limits = JointLimits::default();
        let walk = tripod(&limits);
        let mut a = sim();
        let mut b = sim();
        b.set_body_position(12.5, -3.0);
        let ra = a.run_episode(|_| Ok(walk.clone())).unwrap();
        let rb = b.run_episode(|_| Ok(walk.clone())).unwrap();
        assert_abs_diff_eq!(ra.fitness, rb.fitness, epsilon = 1e-9);
    }

    #[test]
    fn finite_difference_velocity_tracks_sine() {
        // coxa-like motor following sin(2 pi t) directly, no rate limiting
        let cfg = SimConfig::default();
        let limits = JointLimits::new(
            crate::gait::Range { lo: -2.0, hi: 2.0 },
            JointLimits::default().femur,
            JointLimits::default().tibia,
        )
        .unwrap();
        let mut s = RobotState::initial(&limits);
        s.angles[0] = 0.0;
        let dt = cfg.frame_dt;
        let mut mid_err: f64 = 0.0;
        let mut end_err: f64 = 0.0;
        let frames = (1.0 / dt).ceil() as u64 + 1;
        for f in 1..=frames {
            let t = f as f64 * dt;
            let mut target = s.angles;
            target[0] = (2.0 * PI * t).sin();
            s = step_frame(&s, &hold(target), &cfg, &limits);
            let exact = |at: f64| 2.0 * PI * (2.0 * PI * at).cos();
            // the backward difference is centred half a frame back
            mid_err = mid_err.max((s.velocities[0] - exact(t - 0.5 * dt)).abs());
            end_err = end_err.max((s.velocities[0] - exact(t)).abs());
        }
        assert!(mid_err < 0.25, "max velocity error {mid_err}");
        // first order against the frame end: |f''| dt / 2 = 4 pi^2 dt / 2
        assert!(
            end_err < 0.5 * dt * 4.0 * PI * PI * 1.05,
            "max velocity error {end_err}"
        );
    }

    #[test]
    fn trace_records_every_frame() {
        let mut s = sim();
        s.enable_trace();
        let limits = JointLimits::default();
        s.run_frames(&tripod(&limits), 10).unwrap();
        let trace = s.take_trace();
        assert_eq!(trace.len(), 10);
        assert_eq!(trace[9].frame, 10);
        assert_eq!(trace[9].x, s.state().body[0]);
    }

    #[test]
    fn config_validation() {
        let bad = SimConfig {
            frame_dt: 0.0,
            ..SimConfig::default()
        };
        assert!(bad.validate().is_err());
        let bad = SimConfig {
            stance_fraction: 1.5,
            ..SimConfig::default()
        };
        assert!(bad.validate().is_err());
    }
}
