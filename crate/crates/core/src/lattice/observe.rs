use std::fmt::Write as _;

use super::{Boundary, Configuration, Species};
use crate::error::{Error, Result};

fn check_two_species(c: &Configuration) -> Result<()> {
    if c.cells().contains(&Species::Second) {
        return Err(Error::contract("expected a configuration without second-class particles"));
    }
    Ok(())
}

/// The unique site where `c1` holds a particle and `c2` a hole.
pub fn discrepancy_position(c1: &Configuration, c2: &Configuration) -> Result<i64> {
    if !c1.same_window(c2) {
        return Err(Error::contract("configurations live on different windows"));
    }
    check_two_species(c1)?;
    check_two_species(c2)?;
    let mut found = None;
    for (i, (a, b)) in c1.cells().iter().zip(c2.cells()).enumerate() {
        if a != b {
            if found.is_some() {
                return Err(Error::contract("more than one discrepancy"));
            }
            if !(*a == Species::First && *b == Species::Hole) {
                return Err(Error::contract("discrepancy has the wrong orientation"));
            }
            found = Some(c1.lo() + i as i64);
        }
    }
    found.ok_or_else(|| Error::contract("configurations are identical"))
}

fn check_omega(c: &Configuration) -> Result<()> {
    if c.left_boundary() != Boundary::Empty || c.right_boundary() != Boundary::Packed {
        return Err(Error::domain(
            "partial order needs finitely many particles on the left and holes on the right",
        ));
    }
    if c.cells().contains(&Species::Second) {
        return Err(Error::domain("partial order is defined for particle/hole configurations"));
    }
    Ok(())
}

/// c1 ⪯ c2: for every r, c2 has at most as many holes in [r, ∞) as c1.
pub fn partial_order_leq(c1: &Configuration, c2: &Configuration) -> Result<bool> {
    check_omega(c1)?;
    check_omega(c2)?;
    if !c1.same_window(c2) {
        return Err(Error::domain("configurations live on different windows"));
    }
    let (mut h1, mut h2) = (0i64, 0i64);
    for (a, b) in c1.cells().iter().zip(c2.cells()).rev() {
        h1 += (*a == Species::Hole) as i64;
        h2 += (*b == Species::Hole) as i64;
        if h2 > h1 {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Occupied fraction per bin of `bin_width` sites, starting at `lo`;
/// a shorter last bin is dropped.
pub fn density_profile(c: &Configuration, bin_width: usize) -> Result<Vec<(f64, f64)>> {
    if bin_width == 0 {
        return Err(Error::domain("bin width must be at least 1"));
    }
    Ok(c.cells()
        .chunks_exact(bin_width)
        .enumerate()
        .map(|(k, chunk)| {
            let start = c.lo() + (k * bin_width) as i64;
            let centre = start as f64 + (bin_width as f64 - 1.0) / 2.0;
            let occ = chunk.iter().filter(|s| s.is_occupied()).count();
            (centre, occ as f64 / bin_width as f64)
        })
        .collect())
}

/// Run-length encoding `<count><symbol>…`, e.g. `37F12H1S`.
pub fn encode_rle(c: &Configuration) -> String {
    let mut out = String::new();
    let cells = c.cells();
    let mut i = 0;
    while i < cells.len() {
        let s = cells[i];
        let mut j = i;
        while j < cells.len() && cells[j] == s {
            j += 1;
        }
        write!(out, "{}{}", j - i, s.symbol()).unwrap();
        i = j;
    }
    out
}

pub fn decode_rle(text: &str) -> Result<Vec<Species>> {
    let mut out = Vec::new();
    let mut count = String::new();
    for ch in text.chars() {
        if ch.is_ascii_digit() {
            count.push(ch);
            continue;
        }
        let s = Species::from_symbol(ch).ok_or_else(|| Error::domain(format!("bad symbol {ch:?}")))?;
        let n: usize = count.parse().map_err(|_| Error::domain("run without a count"))?;
        out.extend(std::iter::repeat(s).take(n));
        count.clear();
    }
    if !count.is_empty() {
        return Err(Error::domain("dangling count"));
    }
    Ok(out)
}

/// One dump line: `time TAB rle`.
pub fn snapshot_line(time: f64, c: &Configuration) -> String {
    format!("{time}\t{}", encode_rle(c))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn reversed_step(z: i64) -> Configuration {
        Configuration::new(-30, 30, Boundary::Empty, Boundary::Packed, 5, |x| {
            if x >= z {
                Species::First
            } else {
                Species::Hole
            }
        })
        .unwrap()
    }

    #[test]
    fn discrepancy_cases() {
        let a = reversed_step(0);
        let mut b = a.clone();
        b.set(3, Species::Hole).unwrap();
        assert_eq!(discrepancy_position(&a, &b).unwrap(), 3);
        assert!(discrepancy_position(&b, &a).is_err());
        assert!(discrepancy_position(&a, &a).is_err());
        b.set(4, Species::Hole).unwrap();
        assert!(discrepancy_position(&a, &b).is_err());
    }

    #[test]
    fn order_examples() {
        let c2 = reversed_step(0);
        let mut c1 = c2.clone();
        c1.set(0, Species::Hole).unwrap();
        c1.set(-1, Species::First).unwrap();
        assert!(partial_order_leq(&c2, &c2).unwrap());
        assert!(partial_order_leq(&c1, &c2).unwrap());
        assert!(!partial_order_leq(&c2, &c1).unwrap());
        let shock = Configuration::new(-30, 30, Boundary::Packed, Boundary::Empty, 5, |_| Species::Hole).unwrap();
        assert!(matches!(partial_order_leq(&shock, &shock), Err(Error::Domain(_))));
    }

    #[test]
    fn density_of_packed_window() {
        let c = Configuration::new(0, 99, Boundary::Packed, Boundary::Packed, 5, |_| Species::First).unwrap();
        let prof = density_profile(&c, 10).unwrap();
        assert_eq!(prof.len(), 10);
        assert!(prof.iter().all(|&(_, d)| d == 1.0));
        assert_eq!(prof[0].0, 4.5);
        assert!(density_profile(&c, 0).is_err());
    }

    #[test]
    fn rle_roundtrip() {
        let mut c = reversed_step(2);
        c.set(-3, Species::Second).unwrap();
        let text = encode_rle(&c);
        assert_eq!(decode_rle(&text).unwrap(), c.cells());
        assert!(text.starts_with("27H1S4H"));
        assert!(decode_rle("3X").is_err());
        assert!(decode_rle("12").is_err());
    }
}
