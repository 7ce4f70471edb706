//! Kinematic bicycle vehicle with actuation limits, driven by the selector
//! in a fixed-timestep loop.
//!
//! Driving failures are run outcomes, never errors: a vehicle that leaves
//! the drivable corridor ends its run as `OffRoute`, one that never settles
//! at the goal ends as `Timeout`.

use crate::behaviors::{
    behavior_control, BehaviorKind, BehaviorParams, ControlCommand, Observation,
};
use crate::path::normalize_angle;
use crate::planner::{update_progress, Route, RouteCursor};
use crate::selector::{select, ControlSource, SelectorConfig, SelectorDecision, SelectorState};
use crate::track::{Pose, Track};

#[derive(Debug, Clone, Copy)]
pub struct VehicleParams {
    pub wheelbase: f64,
    /// Front-wheel angle limit, radians.
    pub max_steering: f64,
    /// Steering slew limit, radians per second.
    pub max_steering_rate: f64,
    pub max_accel: f64,
    pub max_decel: f64,
    pub max_speed: f64,
}

impl VehicleParams {
    /// Defaults sized for the quarter-circle corners of a grid track. The
    /// steering envelope sits just above the angle a corner arc demands
    /// (atan(wheelbase / (cell/2)) ~= 0.12 rad at the default scale), so a
    /// vehicle that arrives at a corner misaligned or hot has almost no
    /// correction authority left. Brakes shed 8 m/s over roughly 8 m.
    pub fn for_cell_size(cell_size: f64) -> VehicleParams {
        VehicleParams {
            wheelbase: 0.06 * cell_size,
            max_steering: 0.16,
            max_steering_rate: 0.11,
            max_accel: 3.0,
            max_decel: 4.0,
            max_speed: 15.0,
        }
    }
}

impl Default for VehicleParams {
    fn default() -> Self {
        VehicleParams::for_cell_size(crate::track::DEFAULT_CELL_SIZE)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VehicleState {
    pub pose: Pose,
    pub speed: f64,
    pub steering_actual: f64,
}

impl VehicleState {
    pub fn at_rest(pose: Pose) -> VehicleState {
        VehicleState {
            pose,
            speed: 0.0,
            steering_actual: 0.0,
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct SimConfig {
    pub dt: f64,
    pub max_duration: f64,
    /// Lateral deviation beyond which the vehicle has left the corridor.
    pub off_route_threshold: f64,
    /// Speed below which the vehicle counts as stopped.
    pub stop_speed_epsilon: f64,
}

impl SimConfig {
    /// The corridor bound is half a lane width: nominal runs track the
    /// centerline several times tighter than this, while a blown maneuver
    /// drifts well past it.
    pub fn for_cell_size(cell_size: f64) -> SimConfig {
        SimConfig {
            dt: 0.05,
            max_duration: 120.0,
            off_route_threshold: 0.075 * cell_size,
            stop_speed_epsilon: 0.05,
        }
    }
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig::for_cell_size(crate::track::DEFAULT_CELL_SIZE)
    }
}

/// Everything configurable about one run.
#[derive(Debug, Clone, Copy, Default)]
pub struct RunConfig {
    pub selector: SelectorConfig,
    pub behaviors: BehaviorParams,
    pub vehicle: VehicleParams,
    pub sim: SimConfig,
}

impl RunConfig {
    pub fn for_cell_size(cell_size: f64) -> RunConfig {
        RunConfig {
            selector: SelectorConfig::default(),
            behaviors: BehaviorParams::for_cell_size(cell_size),
            vehicle: VehicleParams::for_cell_size(cell_size),
            sim: SimConfig::for_cell_size(cell_size),
        }
    }
}

/// One tick of telemetry. `vehicle` is the state the decision saw, before
/// the integration step.
#[derive(Debug, Clone)]
pub struct StepRecord {
    pub t: f64,
    pub vehicle: VehicleState,
    pub decision: SelectorDecision,
    pub distance_to_next: f64,
    /// (commanded speed - actual speed)^2 on this tick.
    pub squared_speed_error: f64,
    pub lateral_deviation: f64,
    pub controllers_invoked: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RunStatus {
    Success,
    OffRoute,
    Timeout,
}

impl RunStatus {
    pub fn name(self) -> &'static str {
        match self {
            RunStatus::Success => "Success",
            RunStatus::OffRoute => "OffRoute",
            RunStatus::Timeout => "Timeout",
        }
    }
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub strategy: crate::selector::Strategy,
    pub status: RunStatus,
    pub completion_time: f64,
    pub records: Vec<StepRecord>,
}

/// Advance the vehicle one step: slew steering toward the command, change
/// speed within the accel/decel limits, then integrate bicycle kinematics.
/// Position advances along the new heading.
pub fn vehicle_step(
    state: &VehicleState,
    cmd: &ControlCommand,
    params: &VehicleParams,
    dt: f64,
) -> VehicleState {
    let steer_target = cmd
        .steering
        .clamp(-params.max_steering, params.max_steering);
    let steer_delta = (steer_target - state.steering_actual).clamp(
        -params.max_steering_rate * dt,
        params.max_steering_rate * dt,
    );
    let steering = state.steering_actual + steer_delta;

    let speed_target = cmd.desired_speed.clamp(0.0, params.max_speed);
    let dv = (speed_target - state.speed).clamp(-params.max_decel * dt, params.max_accel * dt);
    let speed = (state.speed + dv).clamp(0.0, params.max_speed);

    let heading =
        normalize_angle(state.pose.heading + speed / params.wheelbase * steering.tan() * dt);
    VehicleState {
        pose: Pose {
            x: state.pose.x + speed * heading.cos() * dt,
            y: state.pose.y + speed * heading.sin() * dt,
            heading,
        },
        speed,
        steering_actual: steering,
    }
}

/// Counts controller invocations for the per-tick cost metric.
struct BehaviorBank<'a, 'p> {
    obs: &'a Observation<'p>,
    params: &'a BehaviorParams,
    invocations: u32,
}

impl ControlSource for BehaviorBank<'_, '_> {
    fn command(
        &mut self,
        kind: BehaviorKind,
    ) -> Result<ControlCommand, crate::behaviors::BehaviorError> {
        self.invocations += 1;
        behavior_control(kind, self.obs, self.params)
    }
}

/// Drive the route with the configured strategy until the vehicle stops at
/// the goal, leaves the corridor, or runs out of time. Deterministic: the
/// same inputs produce bit-identical records.
pub fn run_simulation(
    track: &Track,
    route: &Route,
    start: Pose,
    start_speed: f64,
    cfg: &RunConfig,
) -> RunOutcome {
    let goal_tolerance = track.cell_size() / 4.0;
    let mut vehicle = VehicleState {
        pose: start,
        speed: start_speed,
        steering_actual: 0.0,
    };
    let mut cursor = RouteCursor::new();
    let mut progress = route.initial_progress();
    let mut state = SelectorState::new();
    let mut records = Vec::new();

    let mut step = 0u64;
    loop {
        let t = step as f64 * cfg.sim.dt;
        if t > cfg.sim.max_duration {
            return finish(cfg, RunStatus::Timeout, t, records);
        }

        let position = cursor.project(track, route, &vehicle.pose);
        progress = match update_progress(route, &progress, &position) {
            Ok(p) => p,
            Err(_) => return finish(cfg, RunStatus::OffRoute, t, records),
        };
        if position.projection.lateral_deviation.abs() > cfg.sim.off_route_threshold {
            return finish(cfg, RunStatus::OffRoute, t, records);
        }
        if (route.goal_arc - progress.arc_position).abs() < goal_tolerance
            && vehicle.speed < cfg.sim.stop_speed_epsilon
        {
            return finish(cfg, RunStatus::Success, t, records);
        }

        let next_instruction = &route.instructions[progress.next_instruction_index];
        let obs = Observation {
            projection: position.projection,
            speed: vehicle.speed,
            distance_to_next: progress.distance_to_next,
            in_maneuver: progress.in_maneuver,
            path: &route.path,
            maneuver: Some((next_instruction.anchor_arc, next_instruction.exit_arc)),
            heading: vehicle.pose.heading,
            position: (vehicle.pose.x, vehicle.pose.y),
        };
        let mut bank = BehaviorBank {
            obs: &obs,
            params: &cfg.behaviors,
            invocations: 0,
        };
        let decision = select(
            &cfg.selector,
            &mut state,
            &progress,
            next_instruction,
            vehicle.speed,
            &mut bank,
        )
        .expect("simulation always supplies maneuver geometry");

        records.push(StepRecord {
            t,
            vehicle,
            decision,
            distance_to_next: progress.distance_to_next,
            squared_speed_error: {
                let e = decision.command.desired_speed - vehicle.speed;
                e * e
            },
            lateral_deviation: position.projection.lateral_deviation,
            controllers_invoked: bank.invocations,
        });

        vehicle = vehicle_step(&vehicle, &decision.command, &cfg.vehicle, cfg.sim.dt);
        step += 1;
    }
}

fn finish(cfg: &RunConfig, status: RunStatus, t: f64, records: Vec<StepRecord>) -> RunOutcome {
    RunOutcome {
        strategy: cfg.selector.strategy,
        status,
        completion_time: t,
        records,
    }
}
