//! Run telemetry reduction: summaries, CSV, charts, comparison tables.

use crate::behaviors::BehaviorKind;
use crate::selector::Strategy;
use crate::sim::{RunOutcome, RunStatus, StepRecord};
use std::io::{self, Write};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum MetricsError {
    #[error("run produced no records")]
    EmptyRun,
}

pub const DEFAULT_SPIKE_WINDOW: f64 = 0.5;

/// Aggregate evaluation quantities for one run.
#[derive(Debug, Clone)]
pub struct RunSummary {
    pub strategy: Strategy,
    pub outcome: RunStatus,
    pub mean_squared_speed_error: f64,
    pub peak_squared_speed_error: f64,
    pub completion_time: f64,
    pub switch_times: Vec<f64>,
    /// Per switch: (switch time, peak squared error within the following window).
    pub post_switch_peak_errors: Vec<(f64, f64)>,
    pub mean_controllers_per_tick: f64,
}

/// Reduce a run to its summary. `window` bounds the post-switch interval
/// examined for error spikes.
pub fn summarize(outcome: &RunOutcome, window: f64) -> Result<RunSummary, MetricsError> {
    if outcome.records.is_empty() {
        return Err(MetricsError::EmptyRun);
    }
    let n = outcome.records.len() as f64;
    let mean = outcome
        .records
        .iter()
        .map(|r| r.squared_speed_error)
        .sum::<f64>()
        / n;
    let peak = outcome
        .records
        .iter()
        .map(|r| r.squared_speed_error)
        .fold(0.0, f64::max);
    let switch_times: Vec<f64> = outcome
        .records
        .iter()
        .filter(|r| r.decision.switch_event)
        .map(|r| r.t)
        .collect();
    let post_switch_peak_errors = switch_times
        .iter()
        .map(|&ts| {
            let peak = outcome
                .records
                .iter()
                .filter(|r| r.t > ts && r.t <= ts + window)
                .map(|r| r.squared_speed_error)
                .fold(0.0, f64::max);
            (ts, peak)
        })
        .collect();
    let mean_controllers = outcome
        .records
        .iter()
        .map(|r| r.controllers_invoked as f64)
        .sum::<f64>()
        / n;
    Ok(RunSummary {
        strategy: outcome.strategy,
        outcome: outcome.status,
        mean_squared_speed_error: mean,
        peak_squared_speed_error: peak,
        completion_time: outcome.completion_time,
        switch_times,
        post_switch_peak_errors,
        mean_controllers_per_tick: mean_controllers,
    })
}

/// Median squared speed error over all ticks of a run.
pub fn median_squared_error(records: &[StepRecord]) -> f64 {
    if records.is_empty() {
        return 0.0;
    }
    let mut errors: Vec<f64> = records.iter().map(|r| r.squared_speed_error).collect();
    errors.sort_by(f64::total_cmp);
    let mid = errors.len() / 2;
    if errors.len() % 2 == 1 {
        errors[mid]
    } else {
        0.5 * (errors[mid - 1] + errors[mid])
    }
}

/// Render a float with six significant digits, trimming trailing zeros.
pub fn format_sig(v: f64) -> String {
    if v == 0.0 {
        return "0".to_string();
    }
    let sci = format!("{:.5e}", v);
    let (_, exp) = sci.split_once('e').expect("scientific format");
    let exp: i32 = exp.parse().expect("exponent");
    if !(-4..=5).contains(&exp) {
        let (mant, _) = sci.split_once('e').unwrap();
        let mant = mant.trim_end_matches('0').trim_end_matches('.');
        return format!("{mant}e{exp}");
    }
    let precision = (5 - exp).max(0) as usize;
    let fixed = format!("{v:.precision$}");
    if fixed.contains('.') {
        fixed
            .trim_end_matches('0')
            .trim_end_matches('.')
            .to_string()
    } else {
        fixed
    }
}

pub const CSV_HEADER: &str =
    "t,x,y,heading,speed,v_cmd,steering_cmd,steering_actual,active,coeff,d_next,sq_err,lat_dev,switch,controllers";

/// Write per-tick telemetry as CSV, one row per record.
pub fn emit_csv<W: Write>(outcome: &RunOutcome, sink: &mut W) -> io::Result<()> {
    writeln!(sink, "{CSV_HEADER}")?;
    for r in &outcome.records {
        writeln!(
            sink,
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            format_sig(r.t),
            format_sig(r.vehicle.pose.x),
            format_sig(r.vehicle.pose.y),
            format_sig(r.vehicle.pose.heading),
            format_sig(r.vehicle.speed),
            format_sig(r.decision.command.desired_speed),
            format_sig(r.decision.command.steering),
            format_sig(r.vehicle.steering_actual),
            r.decision.active.name(),
            format_sig(r.decision.coefficient),
            format_sig(r.distance_to_next),
            format_sig(r.squared_speed_error),
            format_sig(r.lateral_deviation),
            r.decision.switch_event as u8,
            r.controllers_invoked,
        )?;
    }
    Ok(())
}

/// One reparsed CSV row; columns in file order.
#[derive(Debug, Clone, PartialEq)]
pub struct CsvRow {
    pub t: f64,
    pub x: f64,
    pub y: f64,
    pub heading: f64,
    pub speed: f64,
    pub v_cmd: f64,
    pub steering_cmd: f64,
    pub steering_actual: f64,
    pub active: BehaviorKind,
    pub coeff: f64,
    pub d_next: f64,
    pub sq_err: f64,
    pub lat_dev: f64,
    pub switch: bool,
    pub controllers: u32,
}

/// Parse telemetry CSV back into rows.
pub fn parse_csv(text: &str) -> Result<Vec<CsvRow>, String> {
    let mut lines = text.lines();
    match lines.next() {
        Some(h) if h == CSV_HEADER => {}
        other => return Err(format!("bad header: {other:?}")),
    }
    let mut rows = Vec::new();
    for (idx, line) in lines.enumerate() {
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 15 {
            return Err(format!("row {} has {} fields", idx + 2, fields.len()));
        }
        let num = |i: usize| -> Result<f64, String> {
            fields[i]
                .parse()
                .map_err(|_| format!("row {}: bad number {:?}", idx + 2, fields[i]))
        };
        rows.push(CsvRow {
            t: num(0)?,
            x: num(1)?,
            y: num(2)?,
            heading: num(3)?,
            speed: num(4)?,
            v_cmd: num(5)?,
            steering_cmd: num(6)?,
            steering_actual: num(7)?,
            active: BehaviorKind::from_name(fields[8])
                .ok_or_else(|| format!("row {}: bad behavior {:?}", idx + 2, fields[8]))?,
            coeff: num(9)?,
            d_next: num(10)?,
            sq_err: num(11)?,
            lat_dev: num(12)?,
            switch: fields[13] == "1",
            controllers: fields[14]
                .parse()
                .map_err(|_| format!("row {}: bad count {:?}", idx + 2, fields[14]))?,
        });
    }
    Ok(rows)
}

/// Write a self-contained SVG chart: squared speed error over time with a
/// marker dot at every behavior switch.
pub fn emit_chart<W: Write>(outcome: &RunOutcome, sink: &mut W) -> io::Result<()> {
    const W_PX: f64 = 900.0;
    const H_PX: f64 = 320.0;
    const ML: f64 = 60.0;
    const MR: f64 = 20.0;
    const MT: f64 = 24.0;
    const MB: f64 = 40.0;

    let t_max = outcome.records.last().map_or(1.0, |r| r.t).max(1e-9);
    let e_max = outcome
        .records
        .iter()
        .map(|r| r.squared_speed_error)
        .fold(0.0, f64::max)
        .max(1e-9);
    let sx = |t: f64| ML + (W_PX - ML - MR) * t / t_max;
    let sy = |e: f64| H_PX - MB - (H_PX - MT - MB) * e / e_max;

    writeln!(
        sink,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{W_PX}\" height=\"{H_PX}\" viewBox=\"0 0 {W_PX} {H_PX}\">"
    )?;
    writeln!(
        sink,
        "  <rect width=\"{W_PX}\" height=\"{H_PX}\" fill=\"white\"/>"
    )?;
    writeln!(
        sink,
        "  <line x1=\"{ML}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"black\"/>",
        H_PX - MB,
        W_PX - MR,
        H_PX - MB
    )?;
    writeln!(
        sink,
        "  <line x1=\"{ML}\" y1=\"{MT}\" x2=\"{ML}\" y2=\"{}\" stroke=\"black\"/>",
        H_PX - MB
    )?;
    writeln!(
        sink,
        "  <text x=\"{}\" y=\"{}\" font-size=\"12\" text-anchor=\"middle\">t [s] (0..{})</text>",
        (ML + W_PX - MR) / 2.0,
        H_PX - 10.0,
        format_sig(t_max)
    )?;
    writeln!(
        sink,
        "  <text x=\"14\" y=\"{}\" font-size=\"12\" transform=\"rotate(-90 14 {})\" text-anchor=\"middle\">sq speed err (0..{})</text>",
        (MT + H_PX - MB) / 2.0,
        (MT + H_PX - MB) / 2.0,
        format_sig(e_max)
    )?;
    writeln!(
        sink,
        "  <text x=\"{ML}\" y=\"16\" font-size=\"13\">{} / {}</text>",
        outcome.strategy.name(),
        outcome.status.name()
    )?;

    let mut points = String::new();
    for r in &outcome.records {
        points.push_str(&format!("{:.2},{:.2} ", sx(r.t), sy(r.squared_speed_error)));
    }
    writeln!(
        sink,
        "  <polyline fill=\"none\" stroke=\"steelblue\" stroke-width=\"1.2\" points=\"{}\"/>",
        points.trim_end()
    )?;

    for r in outcome.records.iter().filter(|r| r.decision.switch_event) {
        writeln!(
            sink,
            "  <circle cx=\"{:.2}\" cy=\"{:.2}\" r=\"3\" fill=\"red\"><title>{} at {}s</title></circle>",
            sx(r.t),
            sy(r.squared_speed_error),
            r.decision.active.name(),
            format_sig(r.t)
        )?;
    }
    writeln!(sink, "</svg>")?;
    Ok(())
}

/// Fixed-width comparison table over several run summaries.
pub fn emit_comparison(summaries: &[RunSummary]) -> String {
    let mut out = String::new();
    out.push_str(&format!(
        "{:<14} {:<9} {:>12} {:>12} {:>9} {:>10}\n",
        "strategy", "outcome", "mse", "peak_err", "time_s", "ctrl/tick"
    ));
    for s in summaries {
        out.push_str(&format!(
            "{:<14} {:<9} {:>12} {:>12} {:>9} {:>10}\n",
            s.strategy.name(),
            s.outcome.name(),
            format_sig(s.mean_squared_speed_error),
            format_sig(s.peak_squared_speed_error),
            format!("{:.2}", s.completion_time),
            format!("{:.2}", s.mean_controllers_per_tick),
        ));
    }
    out
}
