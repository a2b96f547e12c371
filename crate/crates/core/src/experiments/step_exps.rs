//! Step initial data: the M-th particle law and slow decorrelation.

use super::{farm, Check, Estimate, ExperimentSpec, Outcome};
use crate::error::{Error, Result};
use crate::lattice::{ArrowStream, Evolver};
use crate::numerics::tracy_widom::f_mp;
use crate::rng::replica_seed;
use crate::shock::{build_step, LabeledTracking, ShockParams};
use crate::stats::{quantile, wilson_interval};

/// Positions of particles `labels` (1 = rightmost) at each of `times`, for
/// particles initially on the sites < `edge`. Also returns the swap count.
pub fn step_positions(
    p: f64,
    seed: u64,
    edge: i64,
    times: &[f64],
    labels: &[usize],
) -> Result<(Vec<Vec<i64>>, u64)> {
    let horizon = times.iter().copied().fold(0.0, f64::max);
    let margin = (horizon + 8.0 * horizon.sqrt() + 100.0).ceil() as i64;
    let ic = build_step(edge, edge - margin, edge + margin)?;
    let tracking = LabeledTracking { particle_base: 1, hole_base: 1 };
    let mut ev = Evolver::new(vec![ic], ArrowStream::new(seed, p)?)?;
    let mut out = Vec::with_capacity(times.len());
    for &t in times {
        ev.advance_to(t)?;
        let row = labels
            .iter()
            .map(|&l| {
                tracking
                    .particle(ev.config(0), l as i64)
                    .ok_or_else(|| Error::contract(format!("particle {l} left the window")))
            })
            .collect::<Result<Vec<i64>>>()?;
        out.push(row);
    }
    Ok((out, ev.swaps()[0]))
}

pub(crate) fn twt(spec: &ExperimentSpec) -> Result<Outcome> {
    if spec.p >= 1.0 {
        return Err(Error::domain("the F_(M,p) target needs p < 1"));
    }
    let mut ladder = spec.t_ladder.clone();
    if ladder.is_empty() {
        ladder.push(spec.t);
    }
    ladder.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let labels: Vec<usize> = (1..=*spec.m_ladder.iter().max().unwrap()).collect();
    let runs = farm(spec.replicas, |r| step_positions(spec.p, replica_seed(spec.seed, r), 0, &ladder, &labels))?;
    let mut out = Outcome {
        csv_header: format!(
            "replica,t,{}",
            labels.iter().map(|l| format!("x_{l}")).collect::<Vec<_>>().join(",")
        ),
        ..Default::default()
    };
    for (r, (rows, swaps)) in runs.iter().enumerate() {
        out.events += swaps;
        for (t, row) in ladder.iter().zip(rows) {
            let xs: Vec<String> = row.iter().map(|x| x.to_string()).collect();
            out.csv_rows.push(format!("{r},{t},{}", xs.join(",")));
        }
    }
    let n = runs.len() as u64;
    let drift = 2.0 * spec.p - 1.0;
    let tol = spec.tolerance("abs", 0.03);
    let mut mean_dist = Vec::new();
    for (k, &t) in ladder.iter().enumerate() {
        let mut sum = 0.0;
        for &m in &spec.m_ladder {
            for &s in &spec.s_values {
                let thr = drift * (t - s * t.sqrt());
                let hits = runs.iter().filter(|(rows, _)| rows[k][m - 1] as f64 >= thr).count() as u64;
                let emp = hits as f64 / n as f64;
                let target = f_mp(m, spec.p, s)?;
                let e = Estimate::against(format!("t{t}.M{m}.s{s}"), emp, target).with_interval(wilson_interval(hits, n)?);
                let d = e.distance.unwrap();
                sum += d;
                if k + 1 == ladder.len() {
                    out.checks.push(Check::below(format!("t{t}.M{m}.s{s}.abs"), d, tol));
                }
                out.estimates.push(e);
            }
        }
        let avg = sum / (spec.m_ladder.len() * spec.s_values.len()).max(1) as f64;
        out.estimates.push(Estimate::value(format!("t{t}.mean_abs"), avg));
        mean_dist.push(avg);
    }
    if ladder.len() > 1 {
        out.checks.push(Check::nonincreasing(
            "mean_abs_trend_in_t",
            &mean_dist,
            spec.tolerance("trend_slack", 0.0),
        ));
    }
    Ok(out)
}

pub(crate) fn slowdec(spec: &ExperimentSpec) -> Result<Outcome> {
    if spec.t_ladder.len() < 2 {
        return Err(Error::domain("slow decorrelation needs at least two times"));
    }
    let drift = 2.0 * spec.p - 1.0;
    let mut out = Outcome {
        csv_header: "t,replica,L,x_early,x_late,scaled_gap".into(),
        ..Default::default()
    };
    let mut pct = vec![Vec::new(); spec.m_ladder.len()];
    for &t in &spec.t_ladder {
        let params = ShockParams { p: spec.p, t, m: 1, c: spec.c, ..Default::default() };
        let b = params.block()?;
        let tk = t.powf(spec.kappa);
        let late = t - t.powf(spec.chi);
        let early = late - tk;
        if early <= 0.0 {
            return Err(Error::domain(format!("t = {t} too small for t^chi + t^kappa")));
        }
        let runs = farm(spec.replicas, |r| {
            step_positions(spec.p, replica_seed(spec.seed, r), -b, &[early, late], &spec.m_ladder)
        })?;
        for (j, &l) in spec.m_ladder.iter().enumerate() {
            let gaps: Vec<f64> = runs
                .iter()
                .map(|(rows, _)| (rows[0][j] as f64 + drift * tk - rows[1][j] as f64).abs() / t.sqrt())
                .collect();
            for (r, ((rows, _), g)) in runs.iter().zip(&gaps).enumerate() {
                out.csv_rows.push(format!("{t},{r},{l},{},{},{g}", rows[0][j], rows[1][j]));
            }
            let q = quantile(&gaps, 0.95)?;
            out.estimates.push(Estimate::value(format!("t{t}.L{l}.q95"), q));
            pct[j].push(q);
        }
        out.events += runs.iter().map(|(_, s)| s).sum::<u64>();
    }
    for (j, &l) in spec.m_ladder.iter().enumerate() {
        out.checks.push(Check::decreasing(format!("L{l}.q95_decreasing_in_t"), &pct[j]));
    }
    Ok(out)
}
