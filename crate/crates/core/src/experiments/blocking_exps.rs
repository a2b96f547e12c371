//! Experiments in the countable state spaces Ω_Z.

use std::collections::BTreeMap;

use super::{farm, Check, Estimate, ExperimentSpec, Outcome};
use crate::blocking::{sample_mu_z, BlockingMeasure, BlockingParams};
use crate::error::{Error, Result};
use crate::lattice::{ArrowStream, Configuration, Evolver, Species};
use crate::rng::{mix64, replica_seed};
use crate::shock::{build_finite_omega, build_reversed_step};
use crate::stats::{empirical_pmf, ls_slope, mean_se, tv_distance_keyed, wilson_interval};

/// Sites kept on each side of the region of interest in Ω-type runs.
const OMEGA_MARGIN: i64 = 150;
/// Seed tags separating the independent runs behind the occupation identity.
const TAG_WITH: u64 = 0x7357_0001;
const TAG_WITHOUT: u64 = 0x7357_0002;
const TAG_SAMPLER: u64 = 0x5a4d_0001;
const TAIL_RANGE: std::ops::RangeInclusive<i64> = 2..=12;

fn evolve(ic: Configuration, seed: u64, p: f64, t: f64) -> Result<(Configuration, u64)> {
    let mut ev = Evolver::new(vec![ic], ArrowStream::new(seed, p)?)?;
    ev.advance_to(t)?;
    let swaps = ev.swaps()[0];
    Ok((ev.into_configs().pop().unwrap(), swaps))
}

fn leftmost_particle(c: &Configuration) -> i64 {
    c.sites_of(Species::First).next().unwrap_or(c.hi() + 1)
}

fn rightmost_hole(c: &Configuration) -> i64 {
    c.sites_of(Species::Hole).last().unwrap_or(c.lo() - 1)
}

/// Reversed step at Z with a second-class particle at Z-1.
fn yours_ic(z: i64) -> Result<Configuration> {
    let mut c = build_reversed_step(z, z - OMEGA_MARGIN, z + OMEGA_MARGIN)?;
    c.set(z - 1, Species::Second)?;
    Ok(c)
}

/// X(t) of every replica started from the reversed step at Z with the
/// second-class particle at Z-1, and the total swap count.
pub fn yours_samples(p: f64, z: i64, t: f64, replicas: usize, seed: u64) -> Result<(Vec<i64>, u64)> {
    let runs = farm(replicas, |r| {
        let (c, swaps) = evolve(yours_ic(z)?, replica_seed(seed, r), p, t)?;
        let x = c
            .second_class_site()
            .ok_or_else(|| Error::contract("second-class particle lost"))?;
        Ok((x, swaps))
    })?;
    Ok((runs.iter().map(|r| r.0).collect(), runs.iter().map(|r| r.1).sum()))
}

#[derive(Debug, Clone, PartialEq)]
pub struct TswSite {
    pub site: i64,
    /// P(ζ¹_t(i) = 1), from runs independent of everything else.
    pub with_particle: f64,
    /// P(ζ_t(i) = 1), likewise independent.
    pub without: f64,
    /// P(X(t) = i).
    pub second_class: f64,
    /// Standard error of with_particle - without - second_class.
    pub std_err: f64,
}

impl TswSite {
    pub fn deviation(&self) -> f64 {
        self.with_particle - self.without - self.second_class
    }
}

/// Compares P(ζ¹_t(i)=1) - P(ζ_t(i)=1) with P(X(t)=i) at `sites`, with three
/// independent families of runs.
pub fn tsw_check(
    p: f64,
    z: i64,
    t: f64,
    replicas: usize,
    seed: u64,
    xs: &[i64],
    sites: &[i64],
) -> Result<(Vec<TswSite>, u64)> {
    let with = farm(replicas, |r| {
        evolve(build_reversed_step(z - 1, z - OMEGA_MARGIN, z + OMEGA_MARGIN)?, replica_seed(seed ^ TAG_WITH, r), p, t)
    })?;
    let without = farm(replicas, |r| {
        evolve(build_reversed_step(z, z - OMEGA_MARGIN, z + OMEGA_MARGIN)?, replica_seed(seed ^ TAG_WITHOUT, r), p, t)
    })?;
    let events = with.iter().chain(&without).map(|r| r.1).sum();
    let occ = |runs: &[(Configuration, u64)], i: i64| {
        runs.iter().filter(|(c, _)| c.get(i) == Species::First).count() as f64 / runs.len() as f64
    };
    let out = sites
        .iter()
        .map(|&i| {
            let a = occ(&with, i);
            let b = occ(&without, i);
            let x = xs.iter().filter(|&&v| v == i).count() as f64 / xs.len() as f64;
            let var = a * (1.0 - a) / with.len() as f64
                + b * (1.0 - b) / without.len() as f64
                + x * (1.0 - x) / xs.len() as f64;
            TswSite {
                site: i,
                with_particle: a,
                without: b,
                second_class: x,
                std_err: var.sqrt(),
            }
        })
        .collect();
    Ok((out, events))
}

pub(crate) fn yours(spec: &ExperimentSpec) -> Result<Outcome> {
    let bp = BlockingParams::new(spec.p)?;
    let measure = BlockingMeasure::new(bp);
    let z = spec.z;
    let (xs, events) = yours_samples(spec.p, z, spec.t, spec.replicas, spec.seed)?;
    let emp = empirical_pmf(&xs)?;
    let w = bp.window as i64;
    let target: BTreeMap<i64, f64> = (z - w - 1..=z + w).map(|i| (i, measure.v0_pmf(i - z))).collect();
    let tv = tv_distance_keyed(&emp, &target)?;
    let mut out = Outcome {
        events,
        csv_header: "replica,X_t".into(),
        csv_rows: xs.iter().enumerate().map(|(r, x)| format!("{r},{x}")).collect(),
        ..Default::default()
    };
    let n = xs.len() as u64;
    for i in z - 4..=z + 4 {
        let k = xs.iter().filter(|&&v| v == i).count() as u64;
        out.estimates.push(
            Estimate::against(format!("P(X={i})"), k as f64 / n as f64, target[&i]).with_interval(wilson_interval(k, n)?),
        );
    }
    out.estimates.push(Estimate::value("tv", tv));
    out.checks.push(Check::below("tv", tv, spec.tolerance("tv", 0.05)));
    let (sites, ev2) = tsw_check(spec.p, z, spec.t, spec.replicas, spec.seed, &xs, &[z - 1, z, z + 1])?;
    out.events += ev2;
    let mult = spec.tolerance("tsw_se", 3.0);
    for s in &sites {
        out.estimates.push(
            Estimate::against(
                format!("tsw.site{}", s.site),
                s.with_particle - s.without,
                s.second_class,
            )
            .with_se(s.std_err),
        );
        if s.site == z {
            out.checks.push(Check::below(
                format!("tsw.site{}.in_se", s.site),
                s.deviation().abs() / s.std_err,
                mult,
            ));
        }
    }
    Ok(out)
}

pub(crate) fn stationarity(spec: &ExperimentSpec) -> Result<Outcome> {
    let bp = BlockingParams::new(spec.p)?;
    let measure = BlockingMeasure::new(bp);
    let z = spec.z;
    let span = 2 * bp.window as i64 + 10 + OMEGA_MARGIN;
    let sites: Vec<i64> = (z - 5..=z + 5).collect();
    let runs = farm(spec.replicas, |r| {
        let seed = replica_seed(spec.seed, r);
        let ic = sample_mu_z(z, mix64(seed ^ TAG_SAMPLER), &bp, z - span, z + span)?;
        let before: Vec<bool> = sites.iter().map(|&i| ic.get(i) == Species::First).collect();
        let (c, swaps) = evolve(ic, seed, spec.p, spec.t)?;
        let after: Vec<bool> = sites.iter().map(|&i| c.get(i) == Species::First).collect();
        Ok((before, after, swaps))
    })?;
    let mut out = Outcome {
        events: runs.iter().map(|r| r.2).sum(),
        csv_header: format!(
            "replica,{}",
            sites.iter().map(|i| format!("occ_{i}")).collect::<Vec<_>>().join(",")
        ),
        ..Default::default()
    };
    for (r, (_, after, _)) in runs.iter().enumerate() {
        let cells: Vec<&str> = after.iter().map(|&o| if o { "1" } else { "0" }).collect();
        out.csv_rows.push(format!("{r},{}", cells.join(",")));
    }
    let slack = spec.tolerance("slack", 0.005);
    let mult = spec.tolerance("se_mult", 3.0);
    for (j, &i) in sites.iter().enumerate() {
        let target = measure.mu_z(z, i);
        let at0: Vec<f64> = runs.iter().map(|r| r.0[j] as u8 as f64).collect();
        let at_t: Vec<f64> = runs.iter().map(|r| r.1[j] as u8 as f64).collect();
        let (m0, se0) = mean_se(&at0)?;
        let (m1, se1) = mean_se(&at_t)?;
        out.estimates.push(Estimate::against(format!("site{i}.time0"), m0, target).with_se(se0));
        let e = Estimate::against(format!("site{i}.timeT"), m1, target).with_se(se1);
        out.checks.push(Check::below(format!("site{i}.timeT"), e.distance.unwrap(), mult * se1 + slack));
        out.estimates.push(e);
    }
    // exploratory only: particle-hole reflection of the marginals
    out.estimates.push(Estimate::value("reflection_defect", measure.reflection_defect()));
    Ok(out)
}

/// ln-probability slope over the R with a positive count.
fn tail_slope(name: &str, values: &[i64], exceeds: impl Fn(i64, i64) -> bool, out: &mut Outcome) -> Result<()> {
    let n = values.len() as u64;
    let (mut xs, mut ys) = (Vec::new(), Vec::new());
    for r in TAIL_RANGE {
        let k = values.iter().filter(|&&v| exceeds(v, r)).count() as u64;
        let f = k as f64 / n as f64;
        out.estimates
            .push(Estimate::value(format!("{name}.R{r}"), f).with_interval(wilson_interval(k, n)?));
        if k > 0 {
            xs.push(r as f64);
            ys.push(f.ln());
        }
    }
    out.estimates.push(Estimate::value(format!("{name}.fitted_points"), xs.len() as f64));
    let slope = if xs.len() >= 2 { ls_slope(&xs, &ys)? } else { f64::NAN };
    out.estimates.push(Estimate::value(format!("{name}.slope"), slope));
    out.checks.push(Check {
        name: format!("{name}.slope"),
        value: slope,
        relation: "<".into(),
        tolerance: 0.0,
        pass: slope < 0.0,
    });
    Ok(())
}

pub(crate) fn tails(spec: &ExperimentSpec) -> Result<Outcome> {
    let z = spec.z;
    let (a, b, n) = (z - 3, z, z + 3);
    let zf = n - b + a;
    let runs = farm(spec.replicas, |r| {
        let seed = replica_seed(spec.seed, r);
        let (c1, s1) = evolve(build_reversed_step(z, z - OMEGA_MARGIN, z + OMEGA_MARGIN)?, seed, spec.p, spec.t)?;
        let ic2 = build_finite_omega(a, b, n, zf - OMEGA_MARGIN, zf + OMEGA_MARGIN)?;
        let (c2, s2) = evolve(ic2, mix64(seed ^ TAG_WITH), spec.p, spec.t)?;
        Ok((leftmost_particle(&c1), leftmost_particle(&c2), rightmost_hole(&c2), s1 + s2))
    })?;
    let mut out = Outcome {
        events: runs.iter().map(|r| r.3).sum(),
        csv_header: "replica,step_x0,omega_x0,omega_h0".into(),
        csv_rows: runs
            .iter()
            .enumerate()
            .map(|(r, v)| format!("{r},{},{},{}", v.0, v.1, v.2))
            .collect(),
        ..Default::default()
    };
    let x0: Vec<i64> = runs.iter().map(|r| r.0).collect();
    tail_slope("reversed_step.x0", &x0, |v, r| v < z - r, &mut out)?;
    let ox: Vec<i64> = runs.iter().map(|r| r.1).collect();
    tail_slope("finite_omega.x0", &ox, |v, r| v < zf - r, &mut out)?;
    let oh: Vec<i64> = runs.iter().map(|r| r.2).collect();
    tail_slope("finite_omega.h0", &oh, |v, r| v > zf + r, &mut out)?;
    Ok(out)
}
