//! Scripted per-maneuver driving controllers behind a uniform interface.
//!
//! Every behavior maps an observation to a (desired speed, steering) command.
//! Steering is pure pursuit over a centerline: the lane-following behavior
//! pursues the route centerline, turn behaviors pursue only their maneuver
//! span, and the two auxiliary behaviors (transition, stop) reuse the
//! lane-following steering with a fixed speed output.
//!
//! Each behavior has a competence envelope describing the state region it
//! was tuned for. The envelope is diagnostic only: controllers are never
//! degraded artificially, and out-of-envelope failures must emerge from the
//! vehicle dynamics.

use crate::path::{normalize_angle, Polyline};
use crate::track::LaneProjection;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum BehaviorError {
    #[error("turn behavior invoked without maneuver geometry")]
    MissingManeuverGeometry,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BehaviorKind {
    FollowLane,
    TurnLeft,
    TurnRight,
    CrossCrossing,
    Transition,
    Stop,
}

impl BehaviorKind {
    pub fn name(self) -> &'static str {
        match self {
            BehaviorKind::FollowLane => "FollowLane",
            BehaviorKind::TurnLeft => "TurnLeft",
            BehaviorKind::TurnRight => "TurnRight",
            BehaviorKind::CrossCrossing => "CrossCrossing",
            BehaviorKind::Transition => "Transition",
            BehaviorKind::Stop => "Stop",
        }
    }

    pub fn from_name(name: &str) -> Option<BehaviorKind> {
        Some(match name {
            "FollowLane" => BehaviorKind::FollowLane,
            "TurnLeft" => BehaviorKind::TurnLeft,
            "TurnRight" => BehaviorKind::TurnRight,
            "CrossCrossing" => BehaviorKind::CrossCrossing,
            "Transition" => BehaviorKind::Transition,
            "Stop" => BehaviorKind::Stop,
            _ => return None,
        })
    }

    /// Maneuver behaviors steer along their instruction's centerline span.
    pub fn is_maneuver(self) -> bool {
        matches!(
            self,
            BehaviorKind::TurnLeft | BehaviorKind::TurnRight | BehaviorKind::CrossCrossing
        )
    }
}

/// The uniform behavior output: a desired speed and a front-wheel angle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ControlCommand {
    pub desired_speed: f64,
    /// Signed front-wheel angle in radians, positive left.
    pub steering: f64,
}

/// What a behavior sees each tick.
#[derive(Debug, Clone, Copy)]
pub struct Observation<'a> {
    /// Lane-relative pose; `arc_position` is route-level.
    pub projection: LaneProjection,
    pub speed: f64,
    pub distance_to_next: f64,
    pub in_maneuver: bool,
    /// Route centerline the vehicle is following.
    pub path: &'a Polyline,
    /// Arc span (start, end) of the next instruction's centerline.
    pub maneuver: Option<(f64, f64)>,
    /// Pose heading, needed by the pursuit law.
    pub heading: f64,
    pub position: (f64, f64),
}

/// Tuning shared by the scripted controllers.
#[derive(Debug, Clone, Copy)]
pub struct BehaviorParams {
    /// Cruise speed commanded by lane following.
    pub follow_speed: f64,
    /// Speed commanded by the maneuver behaviors.
    pub turn_speed: f64,
    /// Fixed speed of the auxiliary transition behavior.
    pub transition_speed: f64,
    /// Pursuit lookahead per unit speed, seconds.
    pub lookahead_gain: f64,
    /// Pursuit lookahead floor, meters.
    pub lookahead_min: f64,
    /// Lookahead per unit speed for the maneuver behaviors. Shorter than the
    /// lane-following lookahead: the maneuver controllers are tuned around
    /// their low nominal speed.
    pub turn_lookahead_gain: f64,
    /// Lookahead floor for the maneuver behaviors, meters.
    pub turn_lookahead_min: f64,
    /// Vehicle wheelbase assumed by the steering law, meters.
    pub wheelbase: f64,
}

impl BehaviorParams {
    /// Lane following anticipates far ahead (it cruises fast); the maneuver
    /// behaviors keep the short lookahead they were tuned with at low speed.
    pub fn for_cell_size(cell_size: f64) -> BehaviorParams {
        BehaviorParams {
            follow_speed: 8.0,
            turn_speed: 1.0,
            transition_speed: 1.0,
            lookahead_gain: 1.1,
            lookahead_min: 0.15 * cell_size,
            turn_lookahead_gain: 0.5,
            turn_lookahead_min: 0.15 * cell_size,
            wheelbase: 0.06 * cell_size,
        }
    }

    fn lookahead(&self, speed: f64) -> f64 {
        (self.lookahead_gain * speed).max(self.lookahead_min)
    }

    fn turn_lookahead(&self, speed: f64) -> f64 {
        (self.turn_lookahead_gain * speed).max(self.turn_lookahead_min)
    }
}

impl Default for BehaviorParams {
    fn default() -> Self {
        BehaviorParams::for_cell_size(crate::track::DEFAULT_CELL_SIZE)
    }
}

/// State region a behavior was tuned for.
#[derive(Debug, Clone, Copy)]
pub struct CompetenceEnvelope {
    pub max_entry_speed: f64,
    pub max_heading_error: f64,
    pub max_lateral_deviation: f64,
}

impl CompetenceEnvelope {
    pub fn for_kind(kind: BehaviorKind, cell_size: f64) -> CompetenceEnvelope {
        match kind {
            BehaviorKind::TurnLeft | BehaviorKind::TurnRight | BehaviorKind::CrossCrossing => {
                CompetenceEnvelope {
                    max_entry_speed: 2.0,
                    max_heading_error: 0.3,
                    max_lateral_deviation: 0.1 * cell_size,
                }
            }
            _ => CompetenceEnvelope {
                max_entry_speed: 15.0,
                max_heading_error: 0.5,
                max_lateral_deviation: 0.25 * cell_size,
            },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EnvelopeViolation {
    EntrySpeed,
    Alignment,
    LateralOffset,
}

/// Diagnostic verdict; never fed back into control.
#[derive(Debug, Clone, Copy)]
pub struct EnvelopeCheck {
    pub within: bool,
    pub violation: Option<EnvelopeViolation>,
}

pub fn check_envelope(
    _kind: BehaviorKind,
    obs: &Observation<'_>,
    env: &CompetenceEnvelope,
) -> EnvelopeCheck {
    let violation = if obs.speed > env.max_entry_speed {
        Some(EnvelopeViolation::EntrySpeed)
    } else if obs.projection.heading_error.abs() > env.max_heading_error {
        Some(EnvelopeViolation::Alignment)
    } else if obs.projection.lateral_deviation.abs() > env.max_lateral_deviation {
        Some(EnvelopeViolation::LateralOffset)
    } else {
        None
    };
    EnvelopeCheck {
        within: violation.is_none(),
        violation,
    }
}

/// Compute one behavior's command. Pure: identical inputs give identical
/// outputs bit for bit.
pub fn behavior_control(
    kind: BehaviorKind,
    obs: &Observation<'_>,
    params: &BehaviorParams,
) -> Result<ControlCommand, BehaviorError> {
    let command = match kind {
        BehaviorKind::FollowLane => ControlCommand {
            desired_speed: params.follow_speed,
            steering: follow_steering(obs, params),
        },
        BehaviorKind::TurnLeft | BehaviorKind::TurnRight | BehaviorKind::CrossCrossing => {
            let (m_start, m_end) = obs.maneuver.ok_or(BehaviorError::MissingManeuverGeometry)?;
            let target_arc = (obs.projection.arc_position + params.turn_lookahead(obs.speed))
                .clamp(m_start, m_end);
            ControlCommand {
                desired_speed: params.turn_speed,
                steering: pursue(obs, params, target_arc),
            }
        }
        BehaviorKind::Transition => ControlCommand {
            desired_speed: params.transition_speed,
            steering: follow_steering(obs, params),
        },
        BehaviorKind::Stop => ControlCommand {
            desired_speed: 0.0,
            steering: follow_steering(obs, params),
        },
    };
    Ok(command)
}

fn follow_steering(obs: &Observation<'_>, params: &BehaviorParams) -> f64 {
    let target_arc = obs.projection.arc_position + params.lookahead(obs.speed);
    pursue(obs, params, target_arc)
}

/// Pure-pursuit steering toward the centerline point at `target_arc`.
fn pursue(obs: &Observation<'_>, params: &BehaviorParams, target_arc: f64) -> f64 {
    let target = obs.path.point_at(target_arc);
    let dx = target.x - obs.position.0;
    let dy = target.y - obs.position.1;
    let dist = dx.hypot(dy);
    if dist < 1e-9 {
        return 0.0;
    }
    let alpha = normalize_angle(dy.atan2(dx) - obs.heading);
    (2.0 * params.wheelbase * alpha.sin()).atan2(dist)
}
