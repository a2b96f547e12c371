//! Averaged density of the shock run against the characteristics solution.

use super::{farm, Check, Estimate, ExperimentSpec, Outcome};
use crate::error::Result;
use crate::lattice::{ArrowStream, Evolver};
use crate::rng::replica_seed;
use crate::shock::{build_shock_ic, ShockParams};
use crate::stats::mean_se;

/// Points ξ/(p-q) at which the profile is reported; only ±1/2 are checked.
const XI: [f64; 6] = [-1.5, -1.0, -0.5, 0.5, 1.0, 1.5];
const CHECKED: [f64; 2] = [-0.5, 0.5];

/// Occupation (first or second class) of every site at time t, per replica.
fn occupations(params: &ShockParams, replicas: usize) -> Result<(i64, Vec<(Vec<u8>, u64)>)> {
    let (ic, _) = build_shock_ic(params)?;
    let runs = farm(replicas, |r| {
        let mut ev = Evolver::new(vec![ic.clone()], ArrowStream::new(replica_seed(params.seed, r), params.p)?)?;
        ev.advance_to(params.t)?;
        let occ: Vec<u8> = ev.config(0).cells().iter().map(|s| s.is_occupied() as u8).collect();
        Ok((occ, ev.swaps()[0]))
    })?;
    Ok((ic.lo(), runs))
}

/// Per-site mean occupation at time t, starting at site `lo`, and the swap count.
pub fn mean_density(params: &ShockParams, replicas: usize) -> Result<(i64, Vec<f64>, u64)> {
    let (lo, runs) = occupations(params, replicas)?;
    let mut mean = vec![0.0; runs[0].0.len()];
    for (occ, _) in &runs {
        for (m, &o) in mean.iter_mut().zip(occ) {
            *m += o as f64;
        }
    }
    mean.iter_mut().for_each(|m| *m /= runs.len() as f64);
    Ok((lo, mean, runs.iter().map(|r| r.1).sum()))
}

/// Entropy solution at site x and time t for blocks edged at ±(B + 1/2).
///
/// Each decreasing step opens a fan u = (1 - (x - x₀)/((p-q)t))/2; the
/// increasing step at the origin stays put because the two fans are mirror
/// images under particle-hole exchange, so their densities at 0 sum to one.
pub fn density_oracle(x: f64, t: f64, p: f64, b: i64) -> f64 {
    let v = 2.0 * p - 1.0;
    let edge = b as f64 + 0.5;
    let x0 = if x < 0.0 { -edge } else { edge };
    (0.5 * (1.0 - (x - x0) / (v * t))).clamp(0.0, 1.0)
}

pub(crate) fn density(spec: &ExperimentSpec) -> Result<Outcome> {
    let params = spec.shock_params(spec.m_ladder[0]);
    params.validate()?;
    let b = params.block()?;
    let (lo, runs) = occupations(&params, spec.replicas)?;
    let events = runs.iter().map(|r| r.1).sum();
    let mut mean = vec![0.0; runs[0].0.len()];
    for (occ, _) in &runs {
        for (m, &o) in mean.iter_mut().zip(occ) {
            *m += o as f64 / runs.len() as f64;
        }
    }
    let t = spec.t;
    let v = 2.0 * spec.p - 1.0;
    let half = spec.tolerance("half_bin", 10.0) as i64;
    let tol = spec.tolerance("abs", 0.03);
    let at = |x: i64| mean[(x - lo) as usize];
    let mut out = Outcome {
        events,
        csv_header: "x,xi,density,oracle".into(),
        csv_rows: mean
            .iter()
            .enumerate()
            .map(|(k, d)| {
                let x = lo + k as i64;
                format!("{x},{},{d},{}", x as f64 / t, density_oracle(x as f64, t, spec.p, b))
            })
            .collect(),
        ..Default::default()
    };
    for r in XI {
        let c = (r * v * t).round() as i64;
        let xs = c - half..=c + half;
        let n = (2 * half + 1) as f64;
        let per_replica: Vec<f64> = runs
            .iter()
            .map(|(occ, _)| xs.clone().map(|x| occ[(x - lo) as usize] as f64).sum::<f64>() / n)
            .collect();
        let (emp, se) = mean_se(&per_replica)?;
        let target = xs.map(|x| density_oracle(x as f64, t, spec.p, b)).sum::<f64>() / n;
        let e = Estimate::against(format!("xi{r}v"), emp, target).with_se(se);
        if CHECKED.contains(&r) {
            out.checks.push(Check::below(format!("xi{r}v.abs"), e.distance.unwrap(), tol));
        }
        out.estimates.push(e);
    }
    let left = (-half - 1..=-1).map(at).sum::<f64>() / (half + 1) as f64;
    let right = (1..=half + 1).map(at).sum::<f64>() / (half + 1) as f64;
    out.estimates.push(Estimate::value("left_of_origin", left));
    out.estimates.push(Estimate::value("right_of_origin", right));
    out.checks.push(Check::below("left_of_origin", left, 0.5));
    out.checks.push(Check {
        name: "right_of_origin".into(),
        value: right,
        relation: ">".into(),
        tolerance: 0.5,
        pass: right > 0.5,
    });
    Ok(out)
}
