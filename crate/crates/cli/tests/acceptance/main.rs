//! Acceptance suite: one test per release criterion, each printing a
//! PASS/FAIL line (run with `--nocapture` to see them).
//!
//! Criterion 4's "no post-switch peak above 3x the run median" clause is
//! expected to fail: most ticks of a deterministic run have exactly zero
//! speed error, so the run median is 0, and the mandated lane-follow
//! resumption after the crossing commands a full-speed step whose window
//! peak is necessarily positive. The clause is asserted literally anyway;
//! the surrounding clauses (success, MSE ratio) are the meaningful gate.


use arbiter_core::behaviors::{BehaviorKind, ControlCommand};
use arbiter_core::metrics::{
    emit_csv, median_squared_error, parse_csv, summarize, RunSummary, DEFAULT_SPIKE_WINDOW,
};
use arbiter_core::selector::{
    blend, interpolation_coefficient, select, transition_distance, BlendMode, CoefficientMode,
    SelectorConfig, SelectorState, Strategy,
};
use arbiter_core::sim::{
    run_simulation, vehicle_step, RunConfig, RunOutcome, RunStatus, VehicleParams, VehicleState,
};
use arbiter_core::{parse_track, plan_route, Pose, Track};
use std::process::Command;

const SCENARIOS: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/../../scenarios");

fn benchmark_track() -> Track {
    let text = std::fs::read_to_string(format!("{SCENARIOS}/benchmark.track")).unwrap();
    parse_track(&text).unwrap()
}

fn benchmark_start() -> Pose {
    Pose::new(2.0, -5.0, 0.0)
}

const GOAL: (f64, f64) = (125.0, -33.0);
const START_SPEED: f64 = 8.0;

fn benchmark_run(strategy: Strategy, mode: CoefficientMode) -> RunOutcome {
    let track = benchmark_track();
    let route = plan_route(&track, &benchmark_start(), GOAL).unwrap();
    let mut cfg = RunConfig::for_cell_size(track.cell_size());
    cfg.selector.strategy = strategy;
    cfg.selector.coefficient_mode = mode;
    run_simulation(&track, &route, benchmark_start(), START_SPEED, &cfg)
}

fn report(criterion: &str, detail: &str, pass: bool) {
    println!(
        "acceptance {criterion}: {} ({detail})",
        if pass { "PASS" } else { "FAIL" }
    );
    assert!(pass, "{criterion} failed: {detail}");
}

/// Peak squared error in the half-second window after the first switch to
/// `kind`, along with the switch time and the error on the tick before it.
fn switch_window_peak(out: &RunOutcome, kind: BehaviorKind) -> Option<(f64, f64, f64)> {
    let idx = out
        .records
        .iter()
        .position(|r| r.decision.switch_event && r.decision.active == kind)?;
    let ts = out.records[idx].t;
    let pre = if idx > 0 {
        out.records[idx - 1].squared_speed_error
    } else {
        0.0
    };
    let peak = out
        .records
        .iter()
        .filter(|r| r.t > ts && r.t <= ts + DEFAULT_SPIKE_WINDOW)
        .map(|r| r.squared_speed_error)
        .fold(0.0, f64::max);
    Some((ts, pre, peak))
}

#[test]
fn c01_formula_fidelity() {
    let cfg = SelectorConfig::default();
    let td_exact = transition_distance(12.0, &cfg) == 4.5 && transition_distance(4.0, &cfg) == 1.5;
    let turn_cfg = SelectorConfig {
        coefficient_mode: CoefficientMode::TurnDistanceBased,
        ..cfg
    };
    let td = turn_cfg.turn_distance;
    let c_ok = (interpolation_coefficient(td, &turn_cfg) - 0.0).abs() < 1e-12
        && (interpolation_coefficient(0.0, &turn_cfg) - 1.0).abs() < 1e-12
        && (interpolation_coefficient(td / 2.0, &turn_cfg) - 0.5).abs() < 1e-12;
    report(
        "C1 formula fidelity",
        "transition_distance(12)=4.5, (4)=1.5; c(TD)=0, c(0)=1, c(TD/2)=0.5",
        td_exact && c_ok,
    );
}

#[test]
fn c02_basic_selector_failure() {
    let out = benchmark_run(Strategy::Basic, CoefficientMode::TurnDistanceBased);
    let off_route = out.status == RunStatus::OffRoute;
    let last_active = out.records.last().unwrap().decision.active;
    let at_first_turn = matches!(
        last_active,
        BehaviorKind::TurnRight | BehaviorKind::CrossCrossing
    );
    let (_, pre, peak) =
        switch_window_peak(&out, BehaviorKind::TurnRight).expect("follow-to-turn switch");
    let spike = peak > 10.0 * pre;
    report(
        "C2 basic failure",
        &format!(
            "status={:?} departed-during={last_active:?} post-switch-peak={peak:.1} pre={pre:.3}",
            out.status
        ),
        off_route && at_first_turn && spike,
    );
}

#[test]
fn c03_transition_success_with_spikes() {
    let out = benchmark_run(Strategy::Transition, CoefficientMode::TurnDistanceBased);
    let success = out.status == RunStatus::Success;
    let median = median_squared_error(&out.records);
    let (_, _, activation_peak) =
        switch_window_peak(&out, BehaviorKind::Transition).expect("transition activation");
    let activation_spikes = activation_peak > 5.0 * median && activation_peak > 0.0;
    let (_, _, turn_peak) =
        switch_window_peak(&out, BehaviorKind::TurnRight).expect("transition-to-turn switch");
    let turn_below = turn_peak < activation_peak;
    report(
        "C3 transition success with spikes",
        &format!(
            "status={:?} activation-peak={activation_peak:.1} median={median:.4} turn-peak={turn_peak:.1}",
            out.status
        ),
        success && activation_spikes && turn_below,
    );
}

#[test]
fn c04_interpolation_superiority() {
    let interp = benchmark_run(Strategy::Interpolation, CoefficientMode::TurnDistanceBased);
    let transition = benchmark_run(Strategy::Transition, CoefficientMode::TurnDistanceBased);
    let s_interp = summarize(&interp, DEFAULT_SPIKE_WINDOW).unwrap();
    let s_transition = summarize(&transition, DEFAULT_SPIKE_WINDOW).unwrap();

    let success = interp.status == RunStatus::Success;
    let mse_less = s_interp.mean_squared_speed_error < s_transition.mean_squared_speed_error;
    let ratio = s_transition.mean_squared_speed_error / s_interp.mean_squared_speed_error;
    let ratio_ok = ratio >= 1.5;
    let median = median_squared_error(&interp.records);
    let worst_peak = s_interp
        .post_switch_peak_errors
        .iter()
        .map(|(_, p)| *p)
        .fold(0.0, f64::max);
    let no_spike = worst_peak <= 3.0 * median;
    report(
        "C4 interpolation superiority",
        &format!(
            "status={:?} mse={:.3} vs transition {:.3} ratio={ratio:.2} (need >=1.5) \
             worst-post-switch-peak={worst_peak:.1} vs 3*median={:.4} -- the no-spike clause \
             cannot hold: the run median is exactly 0 and the mandated lane-follow resumption \
             commands a full-speed step",
            interp.status,
            s_interp.mean_squared_speed_error,
            s_transition.mean_squared_speed_error,
            3.0 * median
        ),
        success && mse_less && ratio_ok && no_spike,
    );
}

#[test]
fn c05_interpolation_cost() {
    let interp = benchmark_run(Strategy::Interpolation, CoefficientMode::TurnDistanceBased);
    let transition = benchmark_run(Strategy::Transition, CoefficientMode::TurnDistanceBased);
    let s_interp = summarize(&interp, DEFAULT_SPIKE_WINDOW).unwrap();
    let s_transition = summarize(&transition, DEFAULT_SPIKE_WINDOW).unwrap();
    report(
        "C5 interpolation cost",
        &format!(
            "controllers/tick interpolation={:.3} transition={:.3}",
            s_interp.mean_controllers_per_tick, s_transition.mean_controllers_per_tick
        ),
        s_interp.mean_controllers_per_tick > s_transition.mean_controllers_per_tick,
    );
}

#[test]
fn c06_hybrid_tradeoff() {
    let hybrid = benchmark_run(
        Strategy::Hybrid,
        CoefficientMode::InterpolationDistanceBased,
    );
    let transition = benchmark_run(Strategy::Transition, CoefficientMode::TurnDistanceBased);
    let interp = benchmark_run(Strategy::Interpolation, CoefficientMode::TurnDistanceBased);
    let success = hybrid.status == RunStatus::Success;
    let slowest = hybrid.completion_time > transition.completion_time
        && hybrid.completion_time > interp.completion_time;
    report(
        "C6 hybrid trade-off",
        &format!(
            "status={:?} time hybrid={:.2} transition={:.2} interpolation={:.2}",
            hybrid.status,
            hybrid.completion_time,
            transition.completion_time,
            interp.completion_time
        ),
        success && slowest,
    );
}

type OracleCase = (&'static str, (f64, f64, f64), (f64, f64));

#[test]
fn c07_planner_oracle_equivalence() {
    let grids: &[OracleCase] = &[
        ("cellsize 10\nS1 S1 S1\n", (2.0, -5.0, 0.0), (25.0, -5.0)),
        (
            "cellsize 10\nR0 R1\nR3 R2\n",
            (10.5, -4.8, 0.0),
            (14.3, -13.0),
        ),
        (
            "cellsize 10\n. . S0\nS1 S1 L1\n",
            (2.0, -15.0, 0.0),
            (25.0, -3.0),
        ),
        (
            "cellsize 10\n. S0 .\nS1 X S1\n. S0 .\n",
            (2.0, -15.0, 0.0),
            (15.0, -27.0),
        ),
        (
            "cellsize 10\nR0 S1 S1 R1\nS0 . . S0\nS0 . . S0\nR3 S1 S1 R2\n",
            (15.0, -4.0, 0.0),
            (5.0, -25.0),
        ),
        (
            "cellsize 10\nR0 S1 X S1 R1\nS0 . S0 . S0\nX S1 X S1 X\nS0 . S0 . S0\nR3 S1 X S1 R2\n",
            (2.0, -25.0, 0.0),
            (45.0, -25.0),
        ),
        (
            "cellsize 10\nR0 S1 X S1 R1\nS0 . S0 . S0\nX S1 X S1 X\nS0 . S0 . S0\nR3 S1 X S1 R2\n",
            (25.0, -42.0, std::f64::consts::FRAC_PI_2),
            (42.0, -5.0),
        ),
    ];
    let mut worst: f64 = 0.0;
    for (text, s, goal) in grids {
        let track = parse_track(text).unwrap();
        let start = Pose::new(s.0, s.1, s.2);
        let planned = plan_route(&track, &start, *goal).unwrap().total_length;
        let enumerated = oracle::brute_force_shortest(&track, &start, *goal).unwrap();
        worst = worst.max((planned - enumerated).abs());
    }
    report(
        "C7 planner oracle equivalence",
        &format!(
            "{} grids, worst |planner - enumeration| = {worst:.2e}",
            grids.len()
        ),
        worst < 1e-9,
    );
}

#[test]
fn c08_vehicle_model_analytics() {
    let params = VehicleParams {
        wheelbase: 0.6,
        max_steering: 0.6,
        max_steering_rate: 2.0,
        max_accel: 3.0,
        max_decel: 6.0,
        max_speed: 15.0,
    };
    let dt = 0.05;

    // zero steering: displacement is exactly v*dt along the heading
    // (measured from the origin so the float sum is the displacement itself)
    let state = VehicleState {
        pose: Pose::new(0.0, 0.0, 0.0),
        speed: 6.0,
        steering_actual: 0.0,
    };
    let cmd = ControlCommand {
        desired_speed: 6.0,
        steering: 0.0,
    };
    let next = vehicle_step(&state, &cmd, &params, dt);
    let exact = next.pose.x == 6.0 * dt && next.pose.y == 0.0 && next.pose.heading == 0.0;

    // constant steering: circle of radius wheelbase/tan(delta) within 1%
    let delta: f64 = 0.3;
    let speed = 2.0;
    let radius = params.wheelbase / delta.tan();
    let mut state = VehicleState {
        pose: Pose::new(0.0, 0.0, 0.0),
        speed,
        steering_actual: delta,
    };
    let cmd = ControlCommand {
        desired_speed: speed,
        steering: delta,
    };
    let omega = speed / params.wheelbase * delta.tan();
    let steps = (std::f64::consts::TAU / (omega * dt)).round() as usize;
    let mut points = Vec::with_capacity(steps);
    for _ in 0..steps {
        state = vehicle_step(&state, &cmd, &params, dt);
        points.push((state.pose.x, state.pose.y));
    }
    let n = points.len() as f64;
    let cx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let cy = points.iter().map(|p| p.1).sum::<f64>() / n;
    let mut max_r: f64 = 0.0;
    let mut min_r = f64::INFINITY;
    for (x, y) in &points {
        let r = (x - cx).hypot(y - cy);
        max_r = max_r.max(r);
        min_r = min_r.min(r);
    }
    let circle = (max_r - radius).abs() / radius < 0.01 && (min_r - radius).abs() / radius < 0.01;
    let closure =
        state.pose.x.hypot(state.pose.y) < 0.01 * std::f64::consts::TAU * radius + speed * dt;
    report(
        "C8 vehicle model analytics",
        &format!(
            "zero-steer exact={exact}; circle r in [{min_r:.4}, {max_r:.4}] vs {radius:.4}, closure ok={closure}"
        ),
        exact && circle && closure,
    );
}

#[test]
fn c09_byte_identical_csv() {
    let out_a = std::env::temp_dir().join("arbiter_accept_a");
    let out_b = std::env::temp_dir().join("arbiter_accept_b");
    for dir in [&out_a, &out_b] {
        let _ = std::fs::remove_dir_all(dir);
    }
    for dir in [&out_a, &out_b] {
        let status = Command::new(env!("CARGO_BIN_EXE_arbiter"))
            .args([
                "simulate",
                "--scenario",
                &format!("{SCENARIOS}/benchmark.scn"),
                "--strategy",
                "transition",
                "--dt",
                "0.05",
                "--seedless",
                "--out-dir",
            ])
            .arg(dir)
            .status()
            .expect("binary runs");
        assert!(status.success());
    }
    let a = std::fs::read(out_a.join("benchmark_transition.csv")).unwrap();
    let b = std::fs::read(out_b.join("benchmark_transition.csv")).unwrap();
    report(
        "C9 determinism",
        &format!("two runs, {} bytes each", a.len()),
        !a.is_empty() && a == b,
    );
}

#[test]
fn c10_invariant_sweeps() {
    // coefficient monotonicity and clamping over a distance grid
    let mut ok = true;
    for mode in [
        CoefficientMode::TurnDistanceBased,
        CoefficientMode::InterpolationDistanceBased,
    ] {
        let cfg = SelectorConfig {
            coefficient_mode: mode,
            ..SelectorConfig::default()
        };
        let mut prev = f64::INFINITY;
        for i in 0..=600 {
            let d = i as f64 * 0.1;
            let c = interpolation_coefficient(d, &cfg);
            ok &= (0.0..=1.0).contains(&c) && c <= prev + 1e-12;
            prev = c;
        }
        ok &= interpolation_coefficient(0.0, &cfg) == 1.0;
    }

    // blend convexity over a value grid
    for i in 0..=10 {
        let c = i as f64 / 10.0;
        let a = ControlCommand {
            desired_speed: 8.0,
            steering: 0.2,
        };
        let b = ControlCommand {
            desired_speed: 1.0,
            steering: -0.1,
        };
        let out = blend(a, b, c, BlendMode::SpeedAndSteering);
        ok &= out.desired_speed <= 8.0 && out.desired_speed >= 1.0;
        ok &= out.steering <= 0.2 && out.steering >= -0.1;
    }

    // transition gating: never inserted after a maneuver behavior
    for previous in [
        BehaviorKind::TurnLeft,
        BehaviorKind::TurnRight,
        BehaviorKind::CrossCrossing,
        BehaviorKind::Stop,
    ] {
        for strategy in [Strategy::Transition, Strategy::Hybrid] {
            let cfg = SelectorConfig {
                strategy,
                ..SelectorConfig::default()
            };
            let mut state = SelectorState::new();
            state.previous_active = previous;
            let progress = arbiter_core::planner::RouteProgress {
                arc_position: 0.0,
                next_instruction_index: 0,
                distance_to_next: 7.0,
                in_maneuver: false,
            };
            let instr = arbiter_core::planner::DrivingInstruction {
                kind: arbiter_core::planner::InstructionKind::TurnLeft,
                anchor_node: None,
                exit_node: None,
                anchor_arc: 7.0,
                exit_arc: 15.0,
                crossing_exit: None,
            };
            let mut source = |kind: BehaviorKind| {
                Ok(ControlCommand {
                    desired_speed: match kind {
                        BehaviorKind::FollowLane => 8.0,
                        BehaviorKind::Stop => 0.0,
                        _ => 1.0,
                    },
                    steering: 0.0,
                })
            };
            let decision = select(&cfg, &mut state, &progress, &instr, 12.0, &mut source).unwrap();
            ok &= decision.active != BehaviorKind::Transition
                && decision.blending_with != Some(BehaviorKind::Transition);
        }
    }

    // far-field equivalence over a speed grid (exact command equality)
    for speed_i in 0..=15 {
        let speed = speed_i as f64;
        for strategy in Strategy::ALL {
            let cfg = SelectorConfig {
                strategy,
                ..SelectorConfig::default()
            };
            let d = cfg.turn_distance
                + transition_distance(speed, &cfg)
                + cfg.interpolation_distance
                + 0.5;
            let mut state = SelectorState::new();
            let progress = arbiter_core::planner::RouteProgress {
                arc_position: 0.0,
                next_instruction_index: 0,
                distance_to_next: d,
                in_maneuver: false,
            };
            let instr = arbiter_core::planner::DrivingInstruction {
                kind: arbiter_core::planner::InstructionKind::TurnRight,
                anchor_node: None,
                exit_node: None,
                anchor_arc: d,
                exit_arc: d + 8.0,
                crossing_exit: None,
            };
            let mut source = |kind: BehaviorKind| {
                Ok(ControlCommand {
                    desired_speed: if kind == BehaviorKind::FollowLane {
                        8.0
                    } else {
                        1.0
                    },
                    steering: 0.017,
                })
            };
            let decision = select(&cfg, &mut state, &progress, &instr, speed, &mut source).unwrap();
            ok &= decision.command
                == ControlCommand {
                    desired_speed: 8.0,
                    steering: 0.017,
                };
        }
    }

    // CSV round-trip on a real run: parse recovers every row
    let out = benchmark_run(Strategy::Transition, CoefficientMode::TurnDistanceBased);
    let mut bytes = Vec::new();
    emit_csv(&out, &mut bytes).unwrap();
    let text = String::from_utf8(bytes).unwrap();
    let rows = parse_csv(&text).unwrap();
    ok &= rows.len() == out.records.len();
    ok &= rows.iter().zip(&out.records).all(|(row, rec)| {
        (row.sq_err - rec.squared_speed_error).abs() <= 5e-6 * rec.squared_speed_error.max(1.0)
    });

    report(
        "C10 invariant sweeps",
        "coefficient, blend, gating, far-field equivalence, csv round-trip",
        ok,
    );
}

/// Companion check used by the comparison table examples: all four strategies
/// in their reference configurations on the bundled benchmark.
#[test]
fn comparison_table_shape() {
    let runs = [
        benchmark_run(Strategy::Basic, CoefficientMode::TurnDistanceBased),
        benchmark_run(Strategy::Transition, CoefficientMode::TurnDistanceBased),
        benchmark_run(Strategy::Interpolation, CoefficientMode::TurnDistanceBased),
        benchmark_run(
            Strategy::Hybrid,
            CoefficientMode::InterpolationDistanceBased,
        ),
    ];
    let summaries: Vec<RunSummary> = runs
        .iter()
        .map(|o| summarize(o, DEFAULT_SPIKE_WINDOW).unwrap())
        .collect();
    assert_eq!(summaries[0].outcome, RunStatus::OffRoute);
    assert!(summaries[1..]
        .iter()
        .all(|s| s.outcome == RunStatus::Success));
    assert!(
        summaries[2].mean_squared_speed_error < summaries[1].mean_squared_speed_error,
        "interpolation under transition"
    );
    let table = arbiter_core::metrics::emit_comparison(&summaries);
    assert_eq!(table.lines().count(), 5);
    println!("{table}");
}
