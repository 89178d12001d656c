use rayon::prelude::*;
use serde::Serialize;

use crate::forward::{crank_nicolson_solve, extract_observations, ObservationRegion};
use crate::geometry::{Grid3D, TwistProfile};
use crate::inverse::basis::curvature_gap_sq;
use crate::metric::assemble_metric;
use crate::operator::assemble_h;
use crate::{Error, Result, C64};

/// One member of a stability family: the unknown and the known profile plus
/// the initial gap `q₀ - q̃₀` (full grid).
#[derive(Clone, Debug)]
pub struct StabilityPair {
    pub theta: TwistProfile,
    pub theta_ref: TwistProfile,
    pub gap0: Vec<C64>,
}

/// Fixed data shared by a family.
pub struct StabilitySetup<'a> {
    pub grid: &'a Grid3D,
    pub q_ref0: &'a [C64],
    pub region: ObservationRegion,
    pub t_final: f64,
    pub dt: f64,
    pub ell: f64,
    pub big_l: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct StabilityRecord {
    pub pair_id: usize,
    /// `‖θ̈ - θ̃̈‖²` on `I_ℓ`.
    pub lhs: f64,
    /// The same on `I_L`; boundary data controls it only on `I_ℓ`.
    pub lhs_big: f64,
    pub rhs_obs: f64,
    pub rhs_init: f64,
    /// `lhs / (rhs_obs + rhs_init)`, absent when the right side vanishes.
    pub ratio: Option<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct StabilitySummary {
    pub count: usize,
    pub max: f64,
    pub median: f64,
    pub min: f64,
}

fn run_pair(setup: &StabilitySetup, id: usize, pair: &StabilityPair) -> Result<StabilityRecord> {
    let g = setup.grid;
    let q0: Vec<C64> = setup.q_ref0.iter().zip(&pair.gap0).map(|(a, b)| a + b).collect();
    let (q, q_ref) = rayon::join(
        || crank_nicolson_solve(&assemble_h(&pair.theta, g)?, g, &q0, None, setup.t_final, setup.dt),
        || crank_nicolson_solve(&assemble_h(&pair.theta_ref, g)?, g, setup.q_ref0, None, setup.t_final, setup.dt),
    );
    let metric = assemble_metric(&pair.theta_ref, g)?;
    let obs = extract_observations(&q?, &q_ref?, &setup.region, &metric, g)?;
    let lhs = curvature_gap_sq(&pair.theta, &pair.theta_ref, setup.ell);
    let lhs_big = curvature_gap_sq(&pair.theta, &pair.theta_ref, setup.big_l);
    let (rhs_obs, rhs_init) = (obs.norms.data.powi(2), obs.norms.initial_gap.powi(2));
    let rhs = rhs_obs + rhs_init;
    Ok(StabilityRecord { pair_id: id, lhs, lhs_big, rhs_obs, rhs_init, ratio: (rhs > 0.0).then(|| lhs / rhs) })
}

/// Solves both systems for every pair and records `LHS / RHS`. Pairs run
/// concurrently; records come back in family order.
pub fn stability_experiment(setup: &StabilitySetup, family: &[StabilityPair]) -> Result<Vec<StabilityRecord>> {
    if family.is_empty() {
        return Err(Error::Degenerate("empty stability family".into()));
    }
    family.par_iter().enumerate().map(|(id, p)| run_pair(setup, id, p)).collect()
}

/// Max, median and min of the recorded ratios, `None` without any ratio.
pub fn summarize(records: &[StabilityRecord]) -> Option<StabilitySummary> {
    let mut r: Vec<f64> = records.iter().filter_map(|x| x.ratio).collect();
    if r.is_empty() {
        return None;
    }
    r.sort_by(f64::total_cmp);
    let n = r.len();
    let median = if n % 2 == 1 { r[n / 2] } else { 0.5 * (r[n / 2 - 1] + r[n / 2]) };
    Some(StabilitySummary { count: n, max: r[n - 1], median, min: r[0] })
}

/// `pair_id,lhs,rhs_obs,rhs_init,ratio`; skipped ratios are left empty.
pub fn records_csv(records: &[StabilityRecord]) -> String {
    let mut s = String::from("pair_id,lhs,rhs_obs,rhs_init,ratio\n");
    for r in records {
        let ratio = r.ratio.map_or(String::new(), |v| format!("{v:.12e}"));
        s.push_str(&format!("{},{:.12e},{:.12e},{:.12e},{}\n", r.pair_id, r.lhs, r.rhs_obs, r.rhs_init, ratio));
    }
    s
}
