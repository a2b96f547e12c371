//! Event-driven evolution of one or several basic-coupled configurations.
//!
//! The heap holds at most one pending ring per (bond, direction), and only
//! for pairs whose ring would swap in at least one copy. A popped ring that
//! has become a no-op everywhere is dropped; rings skipped while a pair was
//! inactive were no-ops too, so the coupled law is the graphical
//! construction restricted to useful rings.

use super::clock::{ArrowStream, Direction};
use super::Configuration;
use crate::error::{Error, Result};

/// Called after every ring that swapped in at least one copy.
pub trait Observer {
    fn on_event(&mut self, event: &Event<'_>);
}

#[derive(Debug)]
pub struct Event<'a> {
    pub time: f64,
    /// Left site of the bond.
    pub site: i64,
    pub dir: Direction,
    /// Bit c is set when copy c swapped.
    pub swapped: u64,
    pub configs: &'a [Configuration],
}

pub struct NoObserver;

impl Observer for NoObserver {
    #[inline(always)]
    fn on_event(&mut self, _: &Event<'_>) {}
}

impl<F: FnMut(&Event<'_>)> Observer for F {
    fn on_event(&mut self, event: &Event<'_>) {
        self(event)
    }
}

pub struct Evolver {
    stream: ArrowStream,
    configs: Vec<Configuration>,
    bond_keys: Vec<u64>,
    next: Vec<f64>,
    heap: RingQueue,
    time: f64,
    swaps: Vec<u64>,
    rings: u64,
    violation: Option<(f64, i64)>,
}

impl Evolver {
    pub fn new(configs: Vec<Configuration>, stream: ArrowStream) -> Result<Self> {
        let Some(first) = configs.first() else {
            return Err(Error::domain("need at least one configuration"));
        };
        if configs.len() > 64 {
            return Err(Error::domain("at most 64 coupled copies"));
        }
        if configs.iter().any(|c| !c.same_window(first)) {
            return Err(Error::domain("coupled configurations must share the window"));
        }
        let n = first.len();
        if n >= (u32::MAX / 2) as usize {
            return Err(Error::domain("window too large"));
        }
        let bond_keys = (0..n - 1).map(|b| stream.bond_key(first.lo() + b as i64)).collect();
        let mut ev = Self {
            stream,
            swaps: vec![0; configs.len()],
            configs,
            bond_keys,
            next: vec![f64::INFINITY; 2 * (n - 1)],
            heap: RingQueue::default(),
            time: 0.0,
            rings: 0,
            violation: None,
        };
        for b in 0..n - 1 {
            for d in 0..2 {
                ev.activate(b, d);
            }
        }
        Ok(ev)
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn configs(&self) -> &[Configuration] {
        &self.configs
    }

    pub fn config(&self, copy: usize) -> &Configuration {
        &self.configs[copy]
    }

    /// Executed swaps per copy.
    pub fn swaps(&self) -> &[u64] {
        &self.swaps
    }

    /// Rings popped from the schedule, including those that turned out to be no-ops.
    pub fn rings(&self) -> u64 {
        self.rings
    }

    pub fn violation(&self) -> Option<(f64, i64)> {
        self.violation
    }

    #[inline(always)]
    fn applicable_any(&self, b: usize, d: usize) -> bool {
        self.configs.iter().any(|c| {
            let cells = c.cells();
            let (x, y) = (cells[b].priority(), cells[b + 1].priority());
            if d == 0 {
                x > y
            } else {
                y > x
            }
        })
    }

    #[inline(always)]
    fn activate(&mut self, b: usize, d: usize) {
        let idx = 2 * b + d;
        if self.next[idx] == f64::INFINITY && self.applicable_any(b, d) {
            let t = self
                .stream
                .next_ring_keyed(self.bond_keys[b], Direction::from_index(d), self.time);
            if t.is_finite() {
                self.next[idx] = t;
                self.heap.push(t, idx as u32);
            }
        }
    }

    pub fn advance_to(&mut self, horizon: f64) -> Result<()> {
        self.advance_to_with(horizon, &mut NoObserver)
    }

    /// Processes every ring up to `horizon`. A swap touching a guard cell
    /// stops the run with a window-violation error; the state is left as it
    /// was just before that ring.
    pub fn advance_to_with(&mut self, horizon: f64, obs: &mut impl Observer) -> Result<()> {
        if let Some((time, site)) = self.violation {
            return Err(Error::WindowViolation { time, site });
        }
        if horizon < self.time {
            return Err(Error::domain(format!(
                "cannot move back from time {} to {horizon}",
                self.time
            )));
        }
        let n = self.configs[0].len();
        let guard = self.configs[0].guard_width();
        let lo = self.configs[0].lo();
        while let Some((t, idx)) = self.heap.peek() {
            if t > horizon {
                break;
            }
            self.heap.pop();
            let idx = idx as usize;
            let (b, d) = (idx >> 1, idx & 1);
            self.rings += 1;
            self.next[idx] = f64::INFINITY;
            let mut swapped = 0u64;
            for (c, cfg) in self.configs.iter().enumerate() {
                let cells = cfg.cells();
                let (x, y) = (cells[b].priority(), cells[b + 1].priority());
                if (d == 0 && x > y) || (d == 1 && y > x) {
                    swapped |= 1 << c;
                }
            }
            if swapped == 0 {
                continue;
            }
            if b < guard || b + 1 >= n - guard {
                let site = lo + b as i64;
                self.violation = Some((t, site));
                return Err(Error::WindowViolation { time: t, site });
            }
            self.time = t;
            for (c, cfg) in self.configs.iter_mut().enumerate() {
                if swapped & (1 << c) != 0 {
                    cfg.cells_mut().swap(b, b + 1);
                    self.swaps[c] += 1;
                }
            }
            for nb in b.saturating_sub(1)..=(b + 1).min(n - 2) {
                self.activate(nb, 0);
                self.activate(nb, 1);
            }
            obs.on_event(&Event {
                time: t,
                site: lo + b as i64,
                dir: Direction::from_index(d),
                swapped,
                configs: &self.configs,
            });
        }
        self.time = horizon;
        Ok(())
    }

    pub fn into_configs(self) -> Vec<Configuration> {
        self.configs
    }
}

/// 4-ary min-heap of (time, pair index) packed as `time_bits << 32 | index`.
/// Nonnegative f64 bit patterns order like the values; ties go to the lower index.
#[derive(Default)]
struct RingQueue {
    keys: Vec<u128>,
}

impl RingQueue {
    #[inline(always)]
    fn peek(&self) -> Option<(f64, u32)> {
        self.keys.first().map(|&k| (f64::from_bits((k >> 32) as u64), k as u32))
    }

    #[inline]
    fn push(&mut self, t: f64, idx: u32) {
        let key = ((t.to_bits() as u128) << 32) | idx as u128;
        let mut i = self.keys.len();
        self.keys.push(key);
        let keys = self.keys.as_mut_slice();
        while i > 0 {
            let parent = (i - 1) / 4;
            let pk = keys[parent];
            if pk <= key {
                break;
            }
            keys[i] = pk;
            i = parent;
        }
        keys[i] = key;
    }

    #[inline]
    fn pop(&mut self) {
        let last = self.keys.pop().expect("pop on empty queue");
        let keys = self.keys.as_mut_slice();
        let n = keys.len();
        if n == 0 {
            return;
        }
        let mut i = 0;
        loop {
            let c = 4 * i + 1;
            let (m, mk) = if c + 4 <= n {
                let ch = &keys[c..c + 4];
                let (a, ka) = if ch[1] < ch[0] { (1, ch[1]) } else { (0, ch[0]) };
                let (b, kb) = if ch[3] < ch[2] { (3, ch[3]) } else { (2, ch[2]) };
                if kb < ka {
                    (c + b, kb)
                } else {
                    (c + a, ka)
                }
            } else if c < n {
                let mut m = c;
                for j in c + 1..n {
                    if keys[j] < keys[m] {
                        m = j;
                    }
                }
                (m, keys[m])
            } else {
                break;
            };
            if mk >= last {
                break;
            }
            keys[i] = mk;
            i = m;
        }
        keys[i] = last;
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub snapshots: Vec<(f64, Configuration)>,
    pub event_count: u64,
    pub violation_flag: bool,
    pub violation: Option<(f64, i64)>,
}

impl Trajectory {
    /// Error if the run hit a guard cell.
    pub fn check(&self) -> Result<()> {
        match self.violation {
            Some((time, site)) => Err(Error::WindowViolation { time, site }),
            None => Ok(()),
        }
    }
}

fn check_times(horizon: f64, observe_at: &[f64]) -> Result<Vec<f64>> {
    if !(horizon >= 0.0 && horizon.is_finite()) {
        return Err(Error::domain(format!("horizon must be finite and nonnegative, got {horizon}")));
    }
    if observe_at.iter().any(|&s| !(0.0..=horizon).contains(&s)) {
        return Err(Error::domain("observation times must lie in [0, horizon]"));
    }
    let mut times = observe_at.to_vec();
    times.sort_by(f64::total_cmp);
    Ok(times)
}

/// Evolves one configuration, taking snapshots at `observe_at`.
pub fn kmc_evolve(config: Configuration, stream: &ArrowStream, horizon: f64, observe_at: &[f64]) -> Result<Trajectory> {
    let mut out = couple_evolve(vec![config], stream, horizon, observe_at)?;
    Ok(out.pop().expect("one trajectory"))
}

/// Evolves configurations under shared rings. On a window violation every
/// trajectory is returned up to the last completed snapshot and flagged.
pub fn couple_evolve(
    configs: Vec<Configuration>,
    stream: &ArrowStream,
    horizon: f64,
    observe_at: &[f64],
) -> Result<Vec<Trajectory>> {
    let times = check_times(horizon, observe_at)?;
    let k = configs.len();
    let mut ev = Evolver::new(configs, *stream)?;
    let mut snaps: Vec<Vec<(f64, Configuration)>> = vec![Vec::new(); k];
    let mut violation = None;
    for &s in times.iter().chain(std::iter::once(&horizon)) {
        match ev.advance_to(s) {
            Ok(()) => {}
            Err(Error::WindowViolation { time, site }) => {
                violation = Some((time, site));
                break;
            }
            Err(e) => return Err(e),
        }
        if times.len() > snaps[0].len() {
            for (c, snap) in snaps.iter_mut().enumerate() {
                snap.push((s, ev.config(c).clone()));
            }
        }
    }
    Ok(snaps
        .into_iter()
        .enumerate()
        .map(|(c, snapshots)| Trajectory {
            snapshots,
            event_count: ev.swaps()[c],
            violation_flag: violation.is_some(),
            violation,
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::super::{Boundary, Species};
    use super::*;

    fn lone_particle() -> Configuration {
        Configuration::new(-200, 200, Boundary::Empty, Boundary::Empty, 10, |x| {
            if x == 0 {
                Species::First
            } else {
                Species::Hole
            }
        })
        .unwrap()
    }

    #[test]
    fn packed_window_never_moves() {
        let c = Configuration::new(0, 100, Boundary::Packed, Boundary::Packed, 10, |_| Species::First).unwrap();
        let s = ArrowStream::new(1, 0.7).unwrap();
        let tr = kmc_evolve(c.clone(), &s, 50.0, &[25.0]).unwrap();
        assert_eq!(tr.event_count, 0);
        assert_eq!(tr.snapshots[0].1, c);
    }

    #[test]
    fn lone_particle_walks_at_the_ring_rates() {
        // displacement equals rings_R - rings_L on the bonds it visits
        let p = 0.7;
        let n = 2000;
        let horizon = 10.0;
        let mut sum = 0.0;
        for seed in 0..n {
            let s = ArrowStream::new(seed, p).unwrap();
            let tr = kmc_evolve(lone_particle(), &s, horizon, &[horizon]).unwrap();
            let x = tr.snapshots[0].1.sites_of(Species::First).next().unwrap();
            sum += x as f64;
        }
        let mean = sum / n as f64;
        let sd = (horizon / n as f64).sqrt();
        assert!((mean - (2.0 * p - 1.0) * horizon).abs() < 3.0 * sd, "{mean}");
    }

    #[test]
    fn replay_is_identical() {
        let s = ArrowStream::new(99, 0.6).unwrap();
        let c = Configuration::new(-60, 60, Boundary::Packed, Boundary::Empty, 10, |x| {
            if x < 0 {
                Species::First
            } else {
                Species::Hole
            }
        })
        .unwrap();
        let a = kmc_evolve(c.clone(), &s, 20.0, &[5.0, 10.0]).unwrap();
        let b = kmc_evolve(c, &s, 20.0, &[5.0, 10.0]).unwrap();
        assert_eq!(a, b);
        assert!(a.event_count > 0);
    }

    #[test]
    fn guard_contact_is_reported() {
        let s = ArrowStream::new(3, 1.0).unwrap();
        let c = Configuration::new(0, 30, Boundary::Empty, Boundary::Empty, 5, |x| {
            if x == 20 {
                Species::First
            } else {
                Species::Hole
            }
        })
        .unwrap();
        let tr = kmc_evolve(c, &s, 100.0, &[1.0]).unwrap();
        assert!(tr.violation_flag);
        assert!(matches!(tr.check(), Err(Error::WindowViolation { .. })));
    }

    #[test]
    fn observer_sees_every_swap() {
        let s = ArrowStream::new(5, 0.7).unwrap();
        let c = Configuration::new(-40, 40, Boundary::Packed, Boundary::Empty, 10, |x| {
            if x < 0 {
                Species::First
            } else {
                Species::Hole
            }
        })
        .unwrap();
        let mut ev = Evolver::new(vec![c], s).unwrap();
        let mut seen = 0u64;
        let mut last = 0.0;
        let mut obs = |e: &Event<'_>| {
            assert!(e.time >= last);
            last = e.time;
            seen += 1;
        };
        ev.advance_to_with(10.0, &mut obs).unwrap();
        assert_eq!(seen, ev.swaps()[0]);
    }

    #[test]
    fn queue_pops_in_order() {
        let mut q = RingQueue::default();
        let mut x = 0.3f64;
        let mut expect = Vec::new();
        for i in 0..500u32 {
            x = (x * 3.7 + 0.11) % 1.0;
            q.push(x * 100.0, i);
            expect.push((x * 100.0, i));
        }
        q.push(expect[7].0, 3);
        expect.push((expect[7].0, 3));
        expect.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        for e in expect {
            assert_eq!(q.peek(), Some(e));
            q.pop();
        }
        assert!(q.peek().is_none());
    }

    #[test]
    fn rejects_bad_times() {
        let s = ArrowStream::new(1, 0.7).unwrap();
        assert!(kmc_evolve(lone_particle(), &s, -1.0, &[]).is_err());
        assert!(kmc_evolve(lone_particle(), &s, 1.0, &[2.0]).is_err());
        let mut ev = Evolver::new(vec![lone_particle()], s).unwrap();
        ev.advance_to(2.0).unwrap();
        assert!(ev.advance_to(1.0).is_err());
    }
}
