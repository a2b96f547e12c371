use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// C(M) = 2√(M/(p-q)).
pub fn c_of_m(m: usize, p: f64) -> Result<f64> {
    if m == 0 {
        return Err(Error::domain("M must be a positive integer"));
    }
    if !(p > 0.5 && p <= 1.0) {
        return Err(Error::domain(format!("p must lie in (1/2, 1], got {p}")));
    }
    Ok(2.0 * (m as f64 / (2.0 * p - 1.0)).sqrt())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShockParams {
    pub p: f64,
    pub t: f64,
    pub m: usize,
    /// Shift constant; `None` means C(M).
    pub c: Option<f64>,
    pub chi: f64,
    pub chi_prime: f64,
    pub delta: f64,
    pub kappa: f64,
    pub seed: u64,
    pub replicas: usize,
}

impl Default for ShockParams {
    fn default() -> Self {
        Self {
            p: 0.7,
            t: 200.0,
            m: 1,
            c: None,
            chi: 0.35,
            chi_prime: 0.45,
            delta: 0.2,
            kappa: 0.75,
            seed: 1,
            replicas: 1,
        }
    }
}

impl ShockParams {
    pub fn q(&self) -> f64 {
        1.0 - self.p
    }

    pub fn drift(&self) -> f64 {
        self.p - self.q()
    }

    pub fn c_value(&self) -> Result<f64> {
        match self.c {
            Some(c) => Ok(c),
            None => c_of_m(self.m, self.p),
        }
    }

    /// B = ⌊(p-q)(t - C√t)⌋, shared by every builder.
    pub fn block(&self) -> Result<i64> {
        let c = self.c_value()?;
        let x = self.drift() * (self.t - c * self.t.sqrt());
        // absorb rounding in p - q so exact products such as 0.4 * 90 floor correctly
        Ok((x + 1e-9 * x.abs().max(1.0)).floor() as i64)
    }

    /// Time at which 𝒫 and ℋ are read off.
    pub fn t_mid(&self) -> f64 {
        self.t - self.t.powf(self.chi)
    }

    /// Threshold t^χ' for 𝒫 and ℋ.
    pub fn threshold(&self) -> f64 {
        self.t.powf(self.chi_prime)
    }

    /// The s at which the step-law threshold of 𝒫 sits at finite t: solves
    /// (p-q)(t' - s√t') = B - t^χ' with t' = t - t^χ. Tends to C as t grows,
    /// but only like t^(χ'-1/2).
    pub fn effective_c(&self) -> Result<f64> {
        let tm = self.t_mid();
        let level = self.block()? as f64 - self.threshold();
        Ok((tm - level / self.drift()) / tm.sqrt())
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.p > 0.5 && self.p <= 1.0) {
            return Err(Error::domain(format!("p must lie in (1/2, 1], got {}", self.p)));
        }
        if self.m == 0 {
            return Err(Error::domain("M must be a positive integer"));
        }
        if !(self.t.is_finite() && self.t > 0.0) {
            return Err(Error::domain("t must be positive"));
        }
        if !(0.0 < self.chi && self.chi < self.chi_prime && self.chi_prime < 0.5) {
            return Err(Error::domain("need 0 < chi < chi' < 1/2"));
        }
        if !(0.0 < self.delta && self.delta < self.chi) {
            return Err(Error::domain("need 0 < delta < chi"));
        }
        if !(0.5 < self.kappa && self.kappa < 1.0) {
            return Err(Error::domain("need 1/2 < kappa < 1"));
        }
        if self.replicas == 0 {
            return Err(Error::domain("replicas must be at least 1"));
        }
        let c = self.c_value()?;
        if !c.is_finite() || self.t - c * self.t.sqrt() <= 0.0 {
            return Err(Error::domain(format!("t - C sqrt(t) must be positive (t = {}, C = {c})", self.t)));
        }
        if self.block()? <= 0 {
            return Err(Error::domain(format!("B = floor((p-q)(t - C sqrt t)) must be positive, t = {}", self.t)));
        }
        Ok(())
    }
}
