//! Behavior arbitration: picks or blends behavior commands from route
//! progress and vehicle state.
//!
//! Four strategies are provided. `Basic` switches hard at the turn distance.
//! `Transition` inserts a fixed-speed deceleration behavior over an extra,
//! speed-adaptive distance before the turn distance. `Interpolation` runs the
//! current and next behaviors in parallel and blends their outputs by a
//! distance-based coefficient. `Hybrid` does both, treating the transition
//! behavior as one more blend source.

use crate::behaviors::{BehaviorError, BehaviorKind, ControlCommand};
use crate::planner::{DrivingInstruction, InstructionKind, RouteProgress};
use crate::selector::Strategy::{Basic, Hybrid, Interpolation, Transition};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum ConfigError {
    #[error("{0} must be positive")]
    NonPositive(&'static str),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Strategy {
    Basic,
    Transition,
    Interpolation,
    Hybrid,
}

impl Strategy {
    pub const ALL: [Strategy; 4] = [Basic, Transition, Interpolation, Hybrid];

    pub fn name(self) -> &'static str {
        match self {
            Basic => "basic",
            Transition => "transition",
            Interpolation => "interpolation",
            Hybrid => "hybrid",
        }
    }

    pub fn from_name(name: &str) -> Option<Strategy> {
        Some(match name {
            "basic" => Basic,
            "transition" => Transition,
            "interpolation" => Interpolation,
            "hybrid" => Hybrid,
            _ => return None,
        })
    }
}

/// Which distance scales the interpolation coefficient.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CoefficientMode {
    TurnDistanceBased,
    InterpolationDistanceBased,
}

/// Whether blending covers steering as well as speed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BlendMode {
    SpeedOnly,
    SpeedAndSteering,
}

#[derive(Debug, Clone, Copy)]
pub struct SelectorConfig {
    pub strategy: Strategy,
    /// Distance before an instruction anchor at which its behavior applies;
    /// matches the region the maneuver behaviors were tuned for.
    pub turn_distance: f64,
    /// Transition distance per unit speed.
    pub transition_factor: f64,
    /// Reach of the distance-based interpolation coefficient.
    pub interpolation_distance: f64,
    pub coefficient_mode: CoefficientMode,
    pub blend_mode: BlendMode,
}

impl Default for SelectorConfig {
    fn default() -> Self {
        SelectorConfig {
            strategy: Basic,
            turn_distance: 5.0,
            transition_factor: 3.0 / 8.0,
            interpolation_distance: 10.0,
            coefficient_mode: CoefficientMode::InterpolationDistanceBased,
            blend_mode: BlendMode::SpeedAndSteering,
        }
    }
}

impl SelectorConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.turn_distance <= 0.0 {
            return Err(ConfigError::NonPositive("turn_distance"));
        }
        if self.interpolation_distance <= 0.0 {
            return Err(ConfigError::NonPositive("interpolation_distance"));
        }
        if self.transition_factor <= 0.0 {
            return Err(ConfigError::NonPositive("transition_factor"));
        }
        Ok(())
    }
}

/// Carry-over between ticks: what was active on the previous tick.
#[derive(Debug, Clone, Copy)]
pub struct SelectorState {
    pub previous_active: BehaviorKind,
    pub previous_instruction_index: usize,
}

impl Default for SelectorState {
    fn default() -> Self {
        SelectorState::new()
    }
}

impl SelectorState {
    pub fn new() -> SelectorState {
        SelectorState {
            previous_active: BehaviorKind::FollowLane,
            previous_instruction_index: 0,
        }
    }
}

/// What the selector decided on one tick.
#[derive(Debug, Clone, Copy)]
pub struct SelectorDecision {
    pub active: BehaviorKind,
    pub blending_with: Option<BehaviorKind>,
    /// Weight of the incoming behavior in the blend, 0 when not blending.
    pub coefficient: f64,
    pub command: ControlCommand,
    pub switch_event: bool,
}

/// Lazily produces behavior commands; only invoked kinds are computed, and
/// implementations count invocations for the cost metric.
pub trait ControlSource {
    fn command(&mut self, kind: BehaviorKind) -> Result<ControlCommand, BehaviorError>;
}

impl<F> ControlSource for F
where
    F: FnMut(BehaviorKind) -> Result<ControlCommand, BehaviorError>,
{
    fn command(&mut self, kind: BehaviorKind) -> Result<ControlCommand, BehaviorError> {
        self(kind)
    }
}

/// Behavior requested by a driving instruction.
pub fn instruction_behavior(instruction: &DrivingInstruction) -> BehaviorKind {
    match instruction.kind {
        InstructionKind::TurnLeft => BehaviorKind::TurnLeft,
        InstructionKind::TurnRight => BehaviorKind::TurnRight,
        InstructionKind::CrossCrossing => BehaviorKind::CrossCrossing,
        InstructionKind::Stop => BehaviorKind::Stop,
    }
}

/// Speed-adaptive length of the deceleration region ahead of the turn
/// distance: `transition_factor * speed` (three eighths by default).
pub fn transition_distance(speed: f64, cfg: &SelectorConfig) -> f64 {
    cfg.transition_factor * speed
}

/// Blend weight of the next behavior at distance `d` from its anchor.
/// Grows linearly from 0 at the region bound to 1 at the anchor; outside the
/// region the coefficient is 0 and interpolation is not applied.
pub fn interpolation_coefficient(d: f64, cfg: &SelectorConfig) -> f64 {
    let reach = match cfg.coefficient_mode {
        CoefficientMode::TurnDistanceBased => cfg.turn_distance,
        CoefficientMode::InterpolationDistanceBased => cfg.interpolation_distance,
    };
    (1.0 - d / reach).clamp(0.0, 1.0)
}

/// Convex combination of two commands. Steering blends only in
/// `SpeedAndSteering` mode; otherwise the current steering is kept.
pub fn blend(
    current: ControlCommand,
    next: ControlCommand,
    c: f64,
    mode: BlendMode,
) -> ControlCommand {
    ControlCommand {
        desired_speed: (1.0 - c) * current.desired_speed + c * next.desired_speed,
        steering: match mode {
            BlendMode::SpeedOnly => current.steering,
            BlendMode::SpeedAndSteering => (1.0 - c) * current.steering + c * next.steering,
        },
    }
}

/// Run one arbitration tick. `speed` is the vehicle's current speed, used by
/// the adaptive transition distance.
pub fn select(
    cfg: &SelectorConfig,
    state: &mut SelectorState,
    progress: &RouteProgress,
    next_instruction: &DrivingInstruction,
    speed: f64,
    source: &mut dyn ControlSource,
) -> Result<SelectorDecision, BehaviorError> {
    let d = progress.distance_to_next;
    let next_kind = instruction_behavior(next_instruction);
    let td = cfg.turn_distance;
    let trd = transition_distance(speed, cfg);
    // the transition behavior slots in before turns and crossings only, and
    // only while the vehicle is lane following (or already transitioning);
    // after a maneuver the speed is already low
    let transition_eligible = next_kind.is_maneuver()
        && matches!(
            state.previous_active,
            BehaviorKind::FollowLane | BehaviorKind::Transition
        );

    let (active, blending_with, coefficient, command) = match cfg.strategy {
        Basic => {
            if d <= td || progress.in_maneuver {
                (next_kind, None, 0.0, source.command(next_kind)?)
            } else {
                follow(source)?
            }
        }
        Transition => {
            if d <= td || progress.in_maneuver {
                (next_kind, None, 0.0, source.command(next_kind)?)
            } else if transition_eligible && d <= td + trd {
                (
                    BehaviorKind::Transition,
                    None,
                    0.0,
                    source.command(BehaviorKind::Transition)?,
                )
            } else {
                follow(source)?
            }
        }
        Interpolation => {
            if progress.in_maneuver {
                let command = source.command(next_kind)?;
                (next_kind, Some(BehaviorKind::FollowLane), 1.0, command)
            } else {
                let c = interpolation_coefficient(d, cfg);
                blended(source, BehaviorKind::FollowLane, next_kind, c, cfg)?
            }
        }
        Hybrid => {
            // the interpolation's "current" source is the transition behavior
            // wherever the transition behavior may appear at all
            let current = if transition_eligible {
                BehaviorKind::Transition
            } else {
                BehaviorKind::FollowLane
            };
            if progress.in_maneuver {
                let command = source.command(next_kind)?;
                (next_kind, Some(current), 1.0, command)
            } else if d <= td {
                let c = interpolation_coefficient(d, cfg);
                blended(source, current, next_kind, c, cfg)?
            } else if transition_eligible && d <= td + trd {
                let c = interpolation_coefficient(d, cfg);
                blended(source, BehaviorKind::Transition, next_kind, c, cfg)?
            } else if transition_eligible {
                // approach blending toward the transition behavior, keyed by
                // the distance to where it will activate
                let c = interpolation_coefficient((d - trd).max(0.0), cfg);
                blended(
                    source,
                    BehaviorKind::FollowLane,
                    BehaviorKind::Transition,
                    c,
                    cfg,
                )?
            } else {
                follow(source)?
            }
        }
    };

    let switch_event = active != state.previous_active;
    state.previous_active = active;
    state.previous_instruction_index = progress.next_instruction_index;

    Ok(SelectorDecision {
        active,
        blending_with,
        coefficient,
        command,
        switch_event,
    })
}

fn follow(
    source: &mut dyn ControlSource,
) -> Result<(BehaviorKind, Option<BehaviorKind>, f64, ControlCommand), BehaviorError> {
    Ok((
        BehaviorKind::FollowLane,
        None,
        0.0,
        source.command(BehaviorKind::FollowLane)?,
    ))
}

/// Blend `current` toward `next` with weight `c`. The endpoints skip the
/// unused controller entirely, so the emitted command is bit-identical to the
/// single-behavior command there.
fn blended(
    source: &mut dyn ControlSource,
    current: BehaviorKind,
    next: BehaviorKind,
    c: f64,
    cfg: &SelectorConfig,
) -> Result<(BehaviorKind, Option<BehaviorKind>, f64, ControlCommand), BehaviorError> {
    if c <= 0.0 {
        let command = source.command(current)?;
        return Ok((current, None, 0.0, command));
    }
    if c >= 1.0 {
        let command = source.command(next)?;
        return Ok((next, Some(current), 1.0, command));
    }
    let cur_cmd = source.command(current)?;
    let next_cmd = source.command(next)?;
    let command = blend(cur_cmd, next_cmd, c, cfg.blend_mode);
    let (active, other) = if c >= 0.5 {
        (next, current)
    } else {
        (current, next)
    };
    Ok((active, Some(other), c, command))
}
