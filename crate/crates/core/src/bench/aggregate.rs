//! Per-planner summaries of benchmark runs.

use std::fmt::Write as _;

use super::scenario::{PlannerVariant, RunMetrics};

/// Mean and population standard deviation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeanStd {
    pub mean: f64,
    pub std: f64,
}

impl MeanStd {
    pub fn of(values: &[f64]) -> Option<Self> {
        if values.is_empty() {
            return None;
        }
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
        Some(Self { mean, std: var.sqrt() })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlannerSummary {
    pub variant: PlannerVariant,
    pub runs: usize,
    pub successes: usize,
    pub success_rate: f64,
    /// Over successful runs only; `None` when nothing succeeded.
    pub time: Option<MeanStd>,
    /// Over all runs.
    pub roll: MeanStd,
    pub pitch: MeanStd,
    pub droll: MeanStd,
    pub dpitch: MeanStd,
    pub dv_cmd: MeanStd,
    pub domega_cmd: MeanStd,
    pub rollovers: usize,
    pub stuck: usize,
    pub timeouts: usize,
    pub out_of_map: usize,
}

/// One summary per planner, in order of first appearance.
pub fn aggregate(runs: &[RunMetrics]) -> Vec<PlannerSummary> {
    use super::scenario::FailureKind as F;
    let mut order: Vec<PlannerVariant> = Vec::new();
    for r in runs {
        if !order.contains(&r.variant) {
            order.push(r.variant);
        }
    }
    order
        .into_iter()
        .map(|variant| {
            let rs: Vec<&RunMetrics> = runs.iter().filter(|r| r.variant == variant).collect();
            let col = |f: fn(&RunMetrics) -> f64| MeanStd::of(&rs.iter().map(|r| f(r)).collect::<Vec<_>>()).expect("non-empty");
            let count = |k: F| rs.iter().filter(|r| r.failure == k).count();
            let times: Vec<f64> = rs.iter().filter(|r| r.success).map(|r| r.time).collect();
            let successes = times.len();
            PlannerSummary {
                variant,
                runs: rs.len(),
                successes,
                success_rate: successes as f64 / rs.len() as f64,
                time: MeanStd::of(&times),
                roll: col(|r| r.mean_abs_roll),
                pitch: col(|r| r.mean_abs_pitch),
                droll: col(|r| r.mean_abs_droll),
                dpitch: col(|r| r.mean_abs_dpitch),
                dv_cmd: col(|r| r.mean_abs_dv_cmd),
                domega_cmd: col(|r| r.mean_abs_domega_cmd),
                rollovers: count(F::Rollover),
                stuck: count(F::Stuck),
                timeouts: count(F::Timeout),
                out_of_map: count(F::OutOfMap),
            }
        })
        .collect()
}

pub const NA: &str = "NA";

fn opt(v: Option<f64>) -> String {
    v.map_or_else(|| NA.to_string(), |x| format!("{x:.6}"))
}

pub fn summary_csv(summaries: &[PlannerSummary]) -> String {
    let mut s = String::from(
        "planner,runs,successes,success_rate,time_mean,time_std,roll_mean,roll_std,pitch_mean,pitch_std,\
droll_mean,droll_std,dpitch_mean,dpitch_std,dv_mean,dv_std,domega_mean,domega_std,rollovers,stuck,timeouts,out_of_map\n",
    );
    for p in summaries {
        let _ = write!(
            s,
            "{},{},{},{:.6},{},{}",
            p.variant.name(),
            p.runs,
            p.successes,
            p.success_rate,
            opt(p.time.map(|t| t.mean)),
            opt(p.time.map(|t| t.std))
        );
        for m in [p.roll, p.pitch, p.droll, p.dpitch, p.dv_cmd, p.domega_cmd] {
            let _ = write!(s, ",{:.6},{:.6}", m.mean, m.std);
        }
        let _ = writeln!(s, ",{},{},{},{}", p.rollovers, p.stuck, p.timeouts, p.out_of_map);
    }
    s
}

pub fn summary_table(summaries: &[PlannerSummary]) -> String {
    let mut s = format!(
        "{:<11} {:>5} {:>8} {:>17} {:>15} {:>15} {:>15} {:>15}\n",
        "planner", "runs", "success", "time [s]", "|roll| [deg]", "|pitch| [deg]", "|dv| [m/s]", "|dw| [rad/s]"
    );
    let pm = |m: &crate::bench::MeanStd| format!("{:.2} ± {:.2}", m.mean, m.std);
    for p in summaries {
        let time = p.time.map_or_else(|| NA.to_string(), |t| pm(&t));
        let _ = writeln!(
            s,
            "{:<11} {:>5} {:>7.0}% {:>17} {:>15} {:>15} {:>15} {:>15}",
            p.variant.name(),
            p.runs,
            100.0 * p.success_rate,
            time,
            pm(&p.roll),
            pm(&p.pitch),
            format!("{:.3} ± {:.3}", p.dv_cmd.mean, p.dv_cmd.std),
            format!("{:.3} ± {:.3}", p.domega_cmd.mean, p.domega_cmd.std),
        );
    }
    s
}

/// Per-run metrics as CSV.
pub fn runs_csv(runs: &[RunMetrics]) -> String {
    let mut s = String::from(
        "scenario,planner,success,failure,time,steps,roll,pitch,droll,dpitch,dv,domega\n",
    );
    for r in runs {
        let _ = writeln!(
            s,
            "{},{},{},{},{:.6},{},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6}",
            r.scenario,
            r.variant.name(),
            u8::from(r.success),
            r.failure.name(),
            r.time,
            r.steps,
            r.mean_abs_roll,
            r.mean_abs_pitch,
            r.mean_abs_droll,
            r.mean_abs_dpitch,
            r.mean_abs_dv_cmd,
            r.mean_abs_domega_cmd
        );
    }
    s
}
