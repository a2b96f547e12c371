//! Airy function Ai(x) and its derivative for real |x| ≤ 40.
//!
//! Large |x| uses the Poincaré expansions (exponential for x ≥ 14,
//! oscillatory for x ≤ -9). In between, values come from Taylor steps of
//! the Airy equation y'' = x y started at anchors on the integers. The
//! positive anchors are generated downward from x = 14, the direction in
//! which Ai is dominant, so the recessive error mode decays.

use std::f64::consts::{FRAC_PI_4, PI};
use std::sync::OnceLock;

use crate::error::{Error, Result};

const AI0: f64 = 0.355_028_053_887_817_239_260_063;
const AIP0: f64 = -0.258_819_403_792_806_798_405_183;

const POS_ASYMPTOTIC: f64 = 14.0;
const NEG_ASYMPTOTIC: f64 = -9.0;
const ANCHOR_LO: i32 = -9;
const ANCHOR_HI: i32 = 14;

pub const MAX_ABS_ARG: f64 = 40.0;

/// Returns `(Ai(x), Ai'(x))`.
pub fn airy_ai(x: f64) -> Result<(f64, f64)> {
    if !x.is_finite() || x.abs() > MAX_ABS_ARG {
        return Err(Error::domain(format!("airy_ai: |x| must be <= {MAX_ABS_ARG}, got {x}")));
    }
    Ok(airy_unchecked(x))
}

pub(crate) fn airy_unchecked(x: f64) -> (f64, f64) {
    if x >= POS_ASYMPTOTIC {
        return asymptotic_positive(x);
    }
    if x <= NEG_ASYMPTOTIC {
        return asymptotic_negative(-x);
    }
    let anchors = anchors();
    // positive side: step down from the anchor above; negative side: nearest anchor
    let a = if x >= 0.0 { x.ceil() } else { x.round() };
    let idx = (a as i32 - ANCHOR_LO) as usize;
    let (y, dy) = anchors[idx];
    let dist = x - a;
    if dist == 0.0 {
        return (y, dy);
    }
    let steps = (dist.abs() / 0.25).ceil().max(1.0) as usize;
    let h = dist / steps as f64;
    let (mut y, mut dy, mut x0) = (y, dy, a);
    for _ in 0..steps {
        (y, dy) = taylor_step(x0, y, dy, h);
        x0 += h;
    }
    (y, dy)
}

fn anchors() -> &'static [(f64, f64)] {
    static ANCHORS: OnceLock<Vec<(f64, f64)>> = OnceLock::new();
    ANCHORS.get_or_init(|| {
        let n = (ANCHOR_HI - ANCHOR_LO + 1) as usize;
        let mut out = vec![(0.0, 0.0); n];
        let h = 1.0 / 16.0;
        // x >= 0: march down from the asymptotic region
        let (mut y, mut dy) = asymptotic_positive(POS_ASYMPTOTIC);
        out[(ANCHOR_HI - ANCHOR_LO) as usize] = (y, dy);
        let mut x0 = POS_ASYMPTOTIC;
        for k in (0..ANCHOR_HI).rev() {
            for _ in 0..16 {
                (y, dy) = taylor_step(x0, y, dy, -h);
                x0 -= h;
            }
            x0 = k as f64;
            out[(k - ANCHOR_LO) as usize] = (y, dy);
        }
        // exact values at the origin
        out[(-ANCHOR_LO) as usize] = (AI0, AIP0);
        let (mut y, mut dy) = (AI0, AIP0);
        let mut x0 = 0.0;
        for k in (ANCHOR_LO..0).rev() {
            for _ in 0..16 {
                (y, dy) = taylor_step(x0, y, dy, -h);
                x0 -= h;
            }
            x0 = k as f64;
            out[(k - ANCHOR_LO) as usize] = (y, dy);
        }
        out
    })
}

/// One Taylor step of y'' = x y from `x0` to `x0 + h`.
fn taylor_step(x0: f64, y: f64, dy: f64, h: f64) -> (f64, f64) {
    // a_{n+2} = (x0 a_n + a_{n-1}) / ((n+1)(n+2))
    let mut a_prev = 0.0; // a_{n-1}
    let mut a_cur = y; // a_n
    let mut a_next = dy; // a_{n+1}
    let mut hp = 1.0; // h^n
    let mut sum = 0.0;
    let mut dsum = 0.0;
    let scale = y.abs() + dy.abs() * h.abs();
    for n in 0..200 {
        let term = a_cur * hp;
        sum += term;
        if n > 0 {
            dsum += n as f64 * a_cur * hp / h;
        }
        let nf = n as f64;
        let a_nn = (x0 * a_cur + a_prev) / ((nf + 1.0) * (nf + 2.0));
        a_prev = a_cur;
        a_cur = a_next;
        a_next = a_nn;
        hp *= h;
        if n > 4 && (a_cur * hp).abs() + (a_next * hp * h).abs() < 1e-18 * scale {
            sum += a_cur * hp;
            dsum += (n + 1) as f64 * a_cur * hp / h;
            break;
        }
    }
    (sum, dsum)
}

/// Coefficients u_k of the Airy asymptotic expansions.
fn u_coeffs(count: usize) -> Vec<f64> {
    let mut u = Vec::with_capacity(count);
    u.push(1.0);
    for k in 1..count {
        let kf = k as f64;
        let next = u[k - 1] * (6.0 * kf - 5.0) * (6.0 * kf - 3.0) * (6.0 * kf - 1.0)
            / ((2.0 * kf - 1.0) * 216.0 * kf);
        u.push(next);
    }
    u
}

fn v_from_u(u: &[f64]) -> Vec<f64> {
    u.iter()
        .enumerate()
        .map(|(k, &uk)| {
            if k == 0 {
                1.0
            } else {
                let kf = k as f64;
                -(6.0 * kf + 1.0) / (6.0 * kf - 1.0) * uk
            }
        })
        .collect()
}

fn coeff_tables() -> &'static (Vec<f64>, Vec<f64>) {
    static TABLES: OnceLock<(Vec<f64>, Vec<f64>)> = OnceLock::new();
    TABLES.get_or_init(|| {
        let u = u_coeffs(120);
        let v = v_from_u(&u);
        (u, v)
    })
}

/// Sums Σ (-1)^k c_k / z^k (optionally over even or odd k only),
/// stopping at the smallest term.
fn alternating_sum(c: &[f64], z: f64, start: usize, stride: usize) -> f64 {
    let mut sum = 0.0;
    let mut last = f64::INFINITY;
    let mut sign = 1.0;
    let mut k = start;
    while k < c.len() {
        let term = c[k] / z.powi(k as i32);
        if term.abs() > last {
            break;
        }
        sum += sign * term;
        last = term.abs();
        if last < 1e-18 * sum.abs() {
            break;
        }
        sign = -sign;
        k += stride;
    }
    sum
}

fn asymptotic_positive(x: f64) -> (f64, f64) {
    let (u, v) = coeff_tables();
    let zeta = 2.0 / 3.0 * x * x.sqrt();
    let pre = (-zeta).exp() / (2.0 * PI.sqrt());
    let q = x.sqrt().sqrt();
    let ai = pre / q * alternating_sum(u, zeta, 0, 1);
    let aip = -pre * q * alternating_sum(v, zeta, 0, 1);
    (ai, aip)
}

/// Ai(-x), Ai'(-x) for large positive x.
fn asymptotic_negative(x: f64) -> (f64, f64) {
    let (u, v) = coeff_tables();
    let zeta = 2.0 / 3.0 * x * x.sqrt();
    let q = x.sqrt().sqrt();
    let phase = zeta + FRAC_PI_4;
    let (s, c) = phase.sin_cos();
    let ue = alternating_sum(u, zeta, 0, 2);
    let uo = alternating_sum(u, zeta, 1, 2);
    let ve = alternating_sum(v, zeta, 0, 2);
    let vo = alternating_sum(v, zeta, 1, 2);
    let ai = (s * ue - c * uo) / (PI.sqrt() * q);
    let aip = -q / PI.sqrt() * (c * ve + s * vo);
    (ai, aip)
}
