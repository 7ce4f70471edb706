//! Deterministic driving simulator on grid-mat tracks, with four selectable
//! strategies for arbitrating between per-maneuver driving behaviors.
//!
//! Pipeline: [`track`] parses the road grid and answers geometry queries,
//! [`planner`] turns a start pose and goal into an instruction route,
//! [`behaviors`] provides the scripted per-maneuver controllers, [`selector`]
//! picks or blends behavior commands each tick, [`sim`] integrates the
//! vehicle, and [`metrics`] turns telemetry into summaries, CSV and charts.

pub mod behaviors;
pub mod metrics;
pub mod path;
pub mod planner;
pub mod selector;
pub mod sim;
pub mod track;

pub use behaviors::{
    behavior_control, check_envelope, BehaviorError, BehaviorKind, BehaviorParams,
    CompetenceEnvelope, ControlCommand, EnvelopeCheck, Observation,
};
pub use metrics::{emit_chart, emit_comparison, emit_csv, summarize, MetricsError, RunSummary};
pub use path::{Point, Polyline};
pub use planner::{
    plan_route, update_progress, DrivingInstruction, InstructionKind, PlanError, Route,
    RouteCursor, RoutePosition, RouteProgress,
};
pub use selector::{
    blend, instruction_behavior, interpolation_coefficient, select, transition_distance, BlendMode,
    CoefficientMode, ControlSource, SelectorConfig, SelectorDecision, SelectorState, Strategy,
};
pub use sim::{
    run_simulation, vehicle_step, RunConfig, RunOutcome, RunStatus, SimConfig, StepRecord,
    VehicleParams, VehicleState,
};
pub use track::{
    arc_distance, parse_track, parse_track_strict, project_to_lane, serialize_track, EdgeId,
    LaneEdge, LaneProjection, MatCell, NodeId, Pose, Track, TrackError,
};
