//! Flat key=value scenario files: track reference, start and goal, plus
//! dotted-key overrides for selector, vehicle, sim and behavior parameters.

use arbiter_core::selector::{BlendMode, CoefficientMode, Strategy};
use arbiter_core::sim::RunConfig;
use arbiter_core::{parse_track, Pose, Track};
use std::fmt;
use std::path::{Path, PathBuf};

#[derive(Debug)]
pub struct ScenarioError(pub String);

impl fmt::Display for ScenarioError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "scenario error: {}", self.0)
    }
}

impl std::error::Error for ScenarioError {}

fn err<T>(message: impl Into<String>) -> Result<T, ScenarioError> {
    Err(ScenarioError(message.into()))
}

/// A parsed scenario file. Parameter overrides are applied to the
/// cell-size-scaled defaults once the track is loaded.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub track_path: PathBuf,
    pub start: Pose,
    pub start_speed: f64,
    pub goal: (f64, f64),
    pub out_dir: Option<PathBuf>,
    overrides: Vec<(String, String)>,
}

impl Scenario {
    pub fn load(path: &Path) -> Result<Scenario, ScenarioError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ScenarioError(format!("cannot read {}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new("."));
        Scenario::parse(&text, base)
    }

    pub fn parse(text: &str, base: &Path) -> Result<Scenario, ScenarioError> {
        let mut track_path = None;
        let mut start = None;
        let mut start_speed = 0.0;
        let mut goal = None;
        let mut out_dir = None;
        let mut overrides = Vec::new();

        for (idx, raw) in text.lines().enumerate() {
            let line = match raw.find('#') {
                Some(i) => &raw[..i],
                None => raw,
            };
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return err(format!("line {}: expected key=value", idx + 1));
            };
            let key = key.trim();
            let value = value.trim();
            match key {
                "track" => track_path = Some(base.join(value)),
                "start" => {
                    let v = parse_floats(value, 3).ok_or_else(|| {
                        ScenarioError(format!("line {}: start needs x,y,heading", idx + 1))
                    })?;
                    start = Some(Pose::new(v[0], v[1], v[2]));
                }
                "start_speed" => {
                    start_speed = value
                        .parse()
                        .map_err(|_| ScenarioError(format!("line {}: bad start_speed", idx + 1)))?;
                }
                "goal" => {
                    let v = parse_floats(value, 2).ok_or_else(|| {
                        ScenarioError(format!("line {}: goal needs x,y", idx + 1))
                    })?;
                    goal = Some((v[0], v[1]));
                }
                "out_dir" => out_dir = Some(base.join(value)),
                k if k.contains('.') => overrides.push((k.to_string(), value.to_string())),
                other => return err(format!("line {}: unknown key {other:?}", idx + 1)),
            }
        }

        Ok(Scenario {
            track_path: track_path.ok_or_else(|| ScenarioError("missing track=".into()))?,
            start: start.ok_or_else(|| ScenarioError("missing start=".into()))?,
            start_speed,
            goal: goal.ok_or_else(|| ScenarioError("missing goal=".into()))?,
            out_dir,
            overrides,
        })
    }

    pub fn load_track(&self) -> Result<Track, ScenarioError> {
        let text = std::fs::read_to_string(&self.track_path).map_err(|e| {
            ScenarioError(format!("cannot read {}: {e}", self.track_path.display()))
        })?;
        parse_track(&text).map_err(|e| ScenarioError(e.to_string()))
    }

    /// Defaults scaled to the track's cell size, with the file's dotted-key
    /// overrides applied.
    pub fn run_config(&self, track: &Track) -> Result<RunConfig, ScenarioError> {
        let mut cfg = RunConfig::for_cell_size(track.cell_size());
        for (key, value) in &self.overrides {
            apply_override(&mut cfg, key, value)?;
        }
        cfg.selector
            .validate()
            .map_err(|e| ScenarioError(e.to_string()))?;
        Ok(cfg)
    }
}

fn parse_floats(s: &str, n: usize) -> Option<Vec<f64>> {
    let vals: Option<Vec<f64>> = s.split(',').map(|p| p.trim().parse().ok()).collect();
    vals.filter(|v| v.len() == n)
}

pub fn parse_strategy(s: &str) -> Result<Strategy, ScenarioError> {
    Strategy::from_name(s).ok_or_else(|| {
        ScenarioError(format!(
            "unknown strategy {s:?} (basic|transition|interpolation|hybrid)"
        ))
    })
}

pub fn parse_coeff(s: &str) -> Result<CoefficientMode, ScenarioError> {
    match s {
        "turn" => Ok(CoefficientMode::TurnDistanceBased),
        "distance" => Ok(CoefficientMode::InterpolationDistanceBased),
        _ => err(format!("unknown coefficient mode {s:?} (turn|distance)")),
    }
}

pub fn parse_blend(s: &str) -> Result<BlendMode, ScenarioError> {
    match s {
        "speed" => Ok(BlendMode::SpeedOnly),
        "both" => Ok(BlendMode::SpeedAndSteering),
        _ => err(format!("unknown blend mode {s:?} (speed|both)")),
    }
}

fn apply_override(cfg: &mut RunConfig, key: &str, value: &str) -> Result<(), ScenarioError> {
    let num = || -> Result<f64, ScenarioError> {
        value
            .parse()
            .map_err(|_| ScenarioError(format!("{key}: bad number {value:?}")))
    };
    match key {
        "selector.strategy" => cfg.selector.strategy = parse_strategy(value)?,
        "selector.turn_distance" => cfg.selector.turn_distance = num()?,
        "selector.transition_factor" => cfg.selector.transition_factor = num()?,
        "selector.interpolation_distance" => cfg.selector.interpolation_distance = num()?,
        "selector.coeff" => cfg.selector.coefficient_mode = parse_coeff(value)?,
        "selector.blend" => cfg.selector.blend_mode = parse_blend(value)?,
        "vehicle.wheelbase" => cfg.vehicle.wheelbase = num()?,
        "vehicle.max_steering" => cfg.vehicle.max_steering = num()?,
        "vehicle.max_steering_rate" => cfg.vehicle.max_steering_rate = num()?,
        "vehicle.max_accel" => cfg.vehicle.max_accel = num()?,
        "vehicle.max_decel" => cfg.vehicle.max_decel = num()?,
        "vehicle.max_speed" => cfg.vehicle.max_speed = num()?,
        "sim.dt" => cfg.sim.dt = num()?,
        "sim.max_duration" => cfg.sim.max_duration = num()?,
        "sim.off_route_threshold" => cfg.sim.off_route_threshold = num()?,
        "sim.stop_speed_epsilon" => cfg.sim.stop_speed_epsilon = num()?,
        "behavior.follow_lane.speed" => cfg.behaviors.follow_speed = num()?,
        "behavior.turn.speed" => cfg.behaviors.turn_speed = num()?,
        "behavior.transition.speed" => cfg.behaviors.transition_speed = num()?,
        "behavior.lookahead.gain" => cfg.behaviors.lookahead_gain = num()?,
        "behavior.lookahead.min" => cfg.behaviors.lookahead_min = num()?,
        "behavior.turn_lookahead.gain" => cfg.behaviors.turn_lookahead_gain = num()?,
        "behavior.turn_lookahead.min" => cfg.behaviors.turn_lookahead_min = num()?,
        "behavior.wheelbase" => cfg.behaviors.wheelbase = num()?,
        other => return err(format!("unknown override key {other:?}")),
    }
    Ok(())
}
