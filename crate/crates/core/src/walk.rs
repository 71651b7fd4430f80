//! Random walk `S_n = S_0 + X_1 + … + X_n` driven by a [`Kernel`], and the
//! crossing-time, mirrored and overshoot chains read off its trajectory.
//!
//! Extraction is implemented once, as the streaming [`CrossingTracker`]; the
//! path-level functions replay a stored [`WalkPath`] through it, while the
//! experiment drivers feed it directly from a [`Walker`] without storing steps.

use std::io::{self, Write};

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::kernels::Kernel;
use crate::rng::{self, SimRng};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum WalkError {
    #[error("n_steps must be at least 1")]
    NoSteps,
    #[error("invalid thresholds: {0}")]
    InvalidThresholds(String),
    #[error("mirrored crossings need increments bounded below")]
    UnsupportedKernel,
}

/// Comparison used at the thresholds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Boundary {
    /// `S_k < θ̲` and `S_k > θ̄`.
    #[default]
    Strict,
    /// `S_k ≤ θ̲` and `S_k ≥ θ̄` (for overshoots only the upper comparison is relaxed).
    Weak,
}

/// Which position the strategy takes first.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    /// Buy below `θ̲`, sell above `θ̄`.
    #[default]
    Long,
    /// Sell above `θ̄`, buy back below `θ̲`.
    Short,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Thresholds {
    lower: f64,
    upper: f64,
    boundary: Boundary,
    lower_inclusive: bool,
    upper_inclusive: bool,
}

impl Thresholds {
    /// Requires `lower < 0 < upper`.
    pub fn new(lower: f64, upper: f64, boundary: Boundary) -> Result<Self, WalkError> {
        if !(lower < 0.0 && upper > 0.0 && lower.is_finite() && upper.is_finite()) {
            return Err(WalkError::InvalidThresholds(format!(
                "need lower < 0 < upper, got lower = {lower}, upper = {upper}"
            )));
        }
        let weak = boundary == Boundary::Weak;
        Ok(Self {
            lower,
            upper,
            boundary,
            lower_inclusive: weak,
            upper_inclusive: weak,
        })
    }

    pub fn strict(lower: f64, upper: f64) -> Result<Self, WalkError> {
        Self::new(lower, upper, Boundary::Strict)
    }

    /// Degenerate `θ̲ = θ̄ = 0` configuration of the overshoot chain.
    /// `Weak` relaxes only the up-crossing to `S_k ≥ 0`.
    pub(crate) fn overshoot(boundary: Boundary) -> Self {
        Self {
            lower: 0.0,
            upper: 0.0,
            boundary,
            lower_inclusive: false,
            upper_inclusive: boundary == Boundary::Weak,
        }
    }

    pub fn lower(&self) -> f64 {
        self.lower
    }

    pub fn upper(&self) -> f64 {
        self.upper
    }

    pub fn boundary(&self) -> Boundary {
        self.boundary
    }

    #[inline]
    pub fn is_below(&self, s: f64) -> bool {
        if self.lower_inclusive {
            s <= self.lower
        } else {
            s < self.lower
        }
    }

    #[inline]
    pub fn is_above(&self, s: f64) -> bool {
        if self.upper_inclusive {
            s >= self.upper
        } else {
            s > self.upper
        }
    }

    /// Thresholds seen by the sign-flipped walk `-S`.
    pub fn negated(&self) -> Self {
        Self {
            lower: -self.upper,
            upper: -self.lower,
            boundary: self.boundary,
            lower_inclusive: self.upper_inclusive,
            upper_inclusive: self.lower_inclusive,
        }
    }
}

/// One step of the walk.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Step {
    /// Step number `k ≥ 1`.
    pub k: u64,
    pub x: f64,
    pub s: f64,
    pub regenerated: bool,
}

/// A stored trajectory.
#[derive(Debug, Clone, PartialEq)]
pub struct WalkPath {
    pub s0: f64,
    /// Increment-chain state before the first step.
    pub x0: f64,
    pub increments: Vec<f64>,
    pub partial_sums: Vec<f64>,
    pub regen_flags: Vec<bool>,
    pub seed: u64,
    /// Whether the generating kernel has increments bounded below.
    pub bounded_below: bool,
}

impl WalkPath {
    /// Path from explicit increments (no regeneration information).
    pub fn from_increments(s0: f64, increments: Vec<f64>) -> Self {
        let mut s = s0;
        let partial_sums = increments
            .iter()
            .map(|x| {
                s += x;
                s
            })
            .collect();
        let n = increments.len();
        Self {
            s0,
            x0: 0.0,
            increments,
            partial_sums,
            regen_flags: vec![false; n],
            seed: 0,
            bounded_below: true,
        }
    }

    pub fn len(&self) -> usize {
        self.increments.len()
    }

    pub fn is_empty(&self) -> bool {
        self.increments.is_empty()
    }

    pub fn steps(&self) -> impl Iterator<Item = Step> + '_ {
        self.increments
            .iter()
            .zip(&self.partial_sums)
            .zip(&self.regen_flags)
            .enumerate()
            .map(|(i, ((&x, &s), &regenerated))| Step {
                k: i as u64 + 1,
                x,
                s,
                regenerated,
            })
    }

    /// CSV dump with columns `step,x,s,regen`; row 0 carries `(x0, s0)`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "step,x,s,regen")?;
        writeln!(out, "0,{},{},0", self.x0, self.s0)?;
        for st in self.steps() {
            writeln!(out, "{},{},{},{}", st.k, st.x, st.s, st.regenerated as u8)?;
        }
        Ok(())
    }
}

/// Infinite stream of walk steps.
#[derive(Debug, Clone)]
pub struct Walker<'k, R = SimRng> {
    kernel: &'k Kernel,
    rng: R,
    x: f64,
    s: f64,
    k: u64,
}

impl<'k, R: Rng> Walker<'k, R> {
    pub fn new(kernel: &'k Kernel, s0: f64, x0: f64, rng: R) -> Self {
        Self {
            kernel,
            rng,
            x: x0,
            s: s0,
            k: 0,
        }
    }

    pub fn position(&self) -> (f64, f64) {
        (self.x, self.s)
    }

    #[inline]
    pub fn advance(&mut self) -> Step {
        let (x, regenerated) = self.kernel.step(self.x, &mut self.rng);
        self.x = x;
        self.s += x;
        self.k += 1;
        Step {
            k: self.k,
            x,
            s: self.s,
            regenerated,
        }
    }
}

impl<R: Rng> Iterator for Walker<'_, R> {
    type Item = Step;

    fn next(&mut self) -> Option<Step> {
        Some(self.advance())
    }
}

/// Simulates `n_steps` steps from `(S_0, X_0) = (s0, x0)`.
pub fn simulate_path(
    kernel: &Kernel,
    s0: f64,
    x0: f64,
    n_steps: usize,
    seed: u64,
) -> Result<WalkPath, WalkError> {
    if n_steps == 0 {
        return Err(WalkError::NoSteps);
    }
    let mut increments = Vec::with_capacity(n_steps);
    let mut partial_sums = Vec::with_capacity(n_steps);
    let mut regen_flags = Vec::with_capacity(n_steps);
    for st in Walker::new(kernel, s0, x0, rng::seeded(seed)).take(n_steps) {
        increments.push(st.x);
        partial_sums.push(st.s);
        regen_flags.push(st.regenerated);
    }
    Ok(WalkPath {
        s0,
        x0,
        increments,
        partial_sums,
        regen_flags,
        seed,
        bounded_below: kernel.is_bounded_below(),
    })
}

/// Price `A_t = μt + S_t` for `t = 1..N`, aligned with `partial_sums`.
pub fn price_path(path: &WalkPath, mu: f64) -> Vec<f64> {
    path.partial_sums
        .iter()
        .enumerate()
        .map(|(i, s)| mu * (i + 1) as f64 + s)
        .collect()
}

/// One completed cycle.
///
/// For [`Side::Long`] the cycle opens at `T_n` (down-crossing) and closes at
/// `L_n` (up-crossing); for [`Side::Short`] it opens at `L̃_n` and closes at
/// `T̃_n`. Fields keep their crossing meaning regardless of side.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CrossingRecord {
    pub index: u64,
    pub side: Side,
    /// Down-crossing time.
    pub t_idx: u64,
    /// Up-crossing time.
    pub l_idx: u64,
    pub x_at_t: f64,
    pub s_at_t: f64,
    pub x_at_l: f64,
    pub s_at_l: f64,
    /// Steps between opening and closing crossing.
    pub duration: u64,
    pub in_state_space: bool,
}

/// First violated constraint of the chain's state space.
#[derive(Debug, Clone, PartialEq, Error)]
#[error("record {index}: {constraint}")]
pub struct StateSpaceViolation {
    pub index: u64,
    pub constraint: &'static str,
}

impl CrossingRecord {
    /// `(X_{T_n}, S_{T_n}, X_{L_n}, S_{L_n}, L_n - T_n)` for long cycles and
    /// `(X_{L̃_n}, S_{L̃_n}, X_{T̃_n}, S_{T̃_n}, T̃_n - L̃_n)` for short ones.
    pub fn state_vector(&self) -> [f64; 5] {
        let d = self.duration as f64;
        match self.side {
            Side::Long => [self.x_at_t, self.s_at_t, self.x_at_l, self.s_at_l, d],
            Side::Short => [self.x_at_l, self.s_at_l, self.x_at_t, self.s_at_t, d],
        }
    }

    /// Checks membership in `𝒰` (long) or `𝒰̃` (short) for increments bounded
    /// above by `m` (and below by `-m` for the short side).
    pub fn check_state_space(&self, thr: &Thresholds, m: f64) -> Result<(), StateSpaceViolation> {
        let fail = |constraint| {
            Err(StateSpaceViolation {
                index: self.index,
                constraint,
            })
        };
        if self.duration < 1 {
            return fail("duration >= 1");
        }
        let (lo, hi) = (thr.lower(), thr.upper());
        match self.side {
            Side::Long => {
                if self.t_idx >= self.l_idx {
                    return fail("T_n < L_n");
                }
                if !(self.x_at_t < 0.0) {
                    return fail("X_T < 0");
                }
                if !thr.is_below(self.s_at_t) {
                    return fail("S_T below lower threshold");
                }
                if !(self.x_at_l > 0.0 && self.x_at_l <= m) {
                    return fail("0 < X_L <= M");
                }
                if !(thr.is_above(self.s_at_l) && self.s_at_l < hi + m) {
                    return fail("S_L in (upper, upper + M)");
                }
            }
            Side::Short => {
                if self.l_idx >= self.t_idx {
                    return fail("L~_n < T~_n");
                }
                if !(self.x_at_l > 0.0) {
                    return fail("X_L~ > 0");
                }
                if !thr.is_above(self.s_at_l) {
                    return fail("S_L~ above upper threshold");
                }
                if !(self.x_at_t >= -m && self.x_at_t < 0.0) {
                    return fail("-M <= X_T~ < 0");
                }
                if !(thr.is_below(self.s_at_t) && self.s_at_t > lo - m) {
                    return fail("S_T~ in (lower - M, lower)");
                }
            }
        }
        Ok(())
    }
}

/// Overshoot chain element `O_n = S_{L_n}` at zero thresholds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OvershootRecord {
    pub index: u64,
    pub l_idx: u64,
    pub x_at_l: f64,
    pub o: f64,
}

impl OvershootRecord {
    /// Membership in `Δ = {(x, s) ∈ (0, M]² : x ≥ s}`.
    pub fn in_delta(&self, m: f64) -> bool {
        self.o > 0.0 && self.o <= m && self.x_at_l >= self.o && self.x_at_l <= m
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Overshoots {
    /// `O_0 = max(S_0, 0)`.
    pub initial: f64,
    pub records: Vec<OvershootRecord>,
}

#[derive(Debug, Clone, Copy)]
enum Phase {
    Seeking,
    Open { k: u64, x: f64, s: f64 },
}

/// Online implementation of the crossing recursion. Feed steps in order; a
/// record is returned each time a cycle completes.
#[derive(Debug, Clone)]
pub struct CrossingTracker {
    thr: Thresholds,
    side: Side,
    phase: Phase,
    completed: u64,
}

impl CrossingTracker {
    pub fn new(thr: Thresholds, side: Side) -> Self {
        Self {
            thr,
            side,
            phase: Phase::Seeking,
            completed: 0,
        }
    }

    pub fn overshoots(boundary: Boundary) -> Self {
        Self::new(Thresholds::overshoot(boundary), Side::Long)
    }

    pub fn completed(&self) -> u64 {
        self.completed
    }

    /// True while a position is open (between entry and exit crossing).
    pub fn is_open(&self) -> bool {
        matches!(self.phase, Phase::Open { .. })
    }

    #[inline]
    pub fn push(&mut self, st: Step) -> Option<CrossingRecord> {
        let (opens, closes) = match self.side {
            Side::Long => (self.thr.is_below(st.s), self.thr.is_above(st.s)),
            Side::Short => (self.thr.is_above(st.s), self.thr.is_below(st.s)),
        };
        match self.phase {
            Phase::Seeking => {
                if opens {
                    self.phase = Phase::Open {
                        k: st.k,
                        x: st.x,
                        s: st.s,
                    };
                }
                None
            }
            Phase::Open { k, x, s } => {
                if !closes {
                    return None;
                }
                self.phase = Phase::Seeking;
                self.completed += 1;
                let index = self.completed;
                let (t, l) = match self.side {
                    Side::Long => ((k, x, s), (st.k, st.x, st.s)),
                    Side::Short => ((st.k, st.x, st.s), (k, x, s)),
                };
                Some(CrossingRecord {
                    index,
                    side: self.side,
                    t_idx: t.0,
                    l_idx: l.0,
                    x_at_t: t.1,
                    s_at_t: t.2,
                    x_at_l: l.1,
                    s_at_l: l.2,
                    duration: st.k - k,
                    in_state_space: index >= 2,
                })
            }
        }
    }
}

/// Long-side cycles `U_n` of the recursion with `L_0 = 0`. Incomplete
/// trailing cycles are dropped.
pub fn extract_crossings(path: &WalkPath, thr: &Thresholds) -> Vec<CrossingRecord> {
    let mut tracker = CrossingTracker::new(*thr, Side::Long);
    path.steps().filter_map(|st| tracker.push(st)).collect()
}

/// Short-side cycles `Ũ_n` of the recursion with `T̃_0 = 0`.
pub fn extract_crossings_mirrored(
    path: &WalkPath,
    thr: &Thresholds,
) -> Result<Vec<CrossingRecord>, WalkError> {
    if !path.bounded_below {
        return Err(WalkError::UnsupportedKernel);
    }
    let mut tracker = CrossingTracker::new(*thr, Side::Short);
    Ok(path.steps().filter_map(|st| tracker.push(st)).collect())
}

/// Overshoot chain at `θ̲ = θ̄ = 0`.
pub fn extract_overshoots(path: &WalkPath, boundary: Boundary) -> Overshoots {
    let mut tracker = CrossingTracker::overshoots(boundary);
    let records = path
        .steps()
        .filter_map(|st| tracker.push(st))
        .map(|r| OvershootRecord {
            index: r.index,
            l_idx: r.l_idx,
            x_at_l: r.x_at_l,
            o: r.s_at_l,
        })
        .collect();
    Overshoots {
        initial: path.s0.max(0.0),
        records,
    }
}

pub fn write_crossings_csv<W: Write>(records: &[CrossingRecord], mut out: W) -> io::Result<()> {
    writeln!(
        out,
        "index,side,t_idx,l_idx,x_at_t,s_at_t,x_at_l,s_at_l,duration,in_state_space"
    )?;
    for r in records {
        let side = match r.side {
            Side::Long => "long",
            Side::Short => "short",
        };
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{}",
            r.index,
            side,
            r.t_idx,
            r.l_idx,
            r.x_at_t,
            r.s_at_t,
            r.x_at_l,
            r.s_at_l,
            r.duration,
            r.in_state_space as u8
        )?;
    }
    Ok(())
}

pub fn write_overshoots_csv<W: Write>(ov: &Overshoots, mut out: W) -> io::Result<()> {
    writeln!(out, "index,l_idx,x_at_l,o")?;
    writeln!(out, "0,0,,{}", ov.initial)?;
    for r in &ov.records {
        writeln!(out, "{},{},{},{}", r.index, r.l_idx, r.x_at_l, r.o)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::KernelSpec;

    fn thr(lo: f64, hi: f64) -> Thresholds {
        Thresholds::strict(lo, hi).unwrap()
    }

    #[test]
    fn single_hand_computed_cycle() {
        let path = WalkPath::from_increments(0.0, vec![-1.5, 2.6]);
        let recs = extract_crossings(&path, &thr(-1.0, 1.0));
        assert_eq!(recs.len(), 1);
        let r = recs[0];
        assert_eq!((r.t_idx, r.l_idx, r.duration), (1, 2, 1));
        assert_eq!(r.state_vector(), [-1.5, -1.5, 2.6, -1.5 + 2.6, 1.0]);
        assert!(!r.in_state_space);
    }

    #[test]
    fn incomplete_cycle_is_dropped() {
        // S = -0.5, -1.1, -0.8, 0.7: T_1 = 2 but S never exceeds 1
        let path = WalkPath::from_increments(0.0, vec![-0.5, -0.6, 0.3, 1.5]);
        assert!(extract_crossings(&path, &thr(-1.0, 1.0)).is_empty());
    }

    #[test]
    fn first_entry_can_have_positive_increment() {
        let path = WalkPath::from_increments(-2.0, vec![0.3, 3.0, -4.0, 2.5]);
        let recs = extract_crossings(&path, &thr(-1.0, 1.0));
        assert_eq!(recs.len(), 1);
        assert_eq!(recs[0].t_idx, 1);
        assert!(recs[0].x_at_t > 0.0);
        assert!(!recs[0].in_state_space);
    }

    #[test]
    fn start_above_upper_is_not_a_crossing() {
        let path = WalkPath::from_increments(5.0, vec![0.5, -7.0, 3.0]);
        let recs = extract_crossings(&path, &thr(-1.0, 1.0));
        assert_eq!(recs.len(), 1);
        assert_eq!((recs[0].t_idx, recs[0].l_idx), (2, 3));
    }

    #[test]
    fn weak_boundary_accepts_ties() {
        let path = WalkPath::from_increments(0.0, vec![-1.0, 2.0]);
        assert!(extract_crossings(&path, &thr(-1.0, 1.0)).is_empty());
        let weak = Thresholds::new(-1.0, 1.0, Boundary::Weak).unwrap();
        assert_eq!(extract_crossings(&path, &weak).len(), 1);
    }

    #[test]
    fn mirrored_hand_computed_cycle() {
        let path = WalkPath::from_increments(0.0, vec![1.5, -2.6]);
        let recs = extract_crossings_mirrored(&path, &thr(-1.0, 1.0)).unwrap();
        assert_eq!(recs.len(), 1);
        assert_eq!((recs[0].l_idx, recs[0].t_idx, recs[0].duration), (1, 2, 1));
        assert_eq!(recs[0].state_vector()[..2], [1.5, 1.5]);
    }

    #[test]
    fn mirrored_without_up_crossing_is_empty() {
        let path = WalkPath::from_increments(0.0, vec![-0.5, 0.2, -3.0]);
        assert!(extract_crossings_mirrored(&path, &thr(-1.0, 1.0))
            .unwrap()
            .is_empty());
    }

    #[test]
    fn mirrored_rejects_unbounded_kernel() {
        let k = Kernel::new(KernelSpec::one_sided_exp(0.3, 0.7, 0.2, 0.25, 1.0)).unwrap();
        let path = simulate_path(&k, 0.0, 0.0, 10, 1).unwrap();
        assert_eq!(
            extract_crossings_mirrored(&path, &thr(-1.0, 1.0)),
            Err(WalkError::UnsupportedKernel)
        );
    }

    #[test]
    fn overshoot_hand_computed() {
        let path = WalkPath::from_increments(0.5, vec![-0.7, 0.9]);
        let ov = extract_overshoots(&path, Boundary::Strict);
        assert_eq!(ov.initial, 0.5);
        assert_eq!(ov.records.len(), 1);
        assert_eq!(ov.records[0].l_idx, 2);
        assert!((ov.records[0].o - 0.7).abs() < 1e-15);
    }

    #[test]
    fn overshoot_weak_relaxes_only_up_crossing() {
        let path = WalkPath::from_increments(0.0, vec![-0.5, 0.5, 0.2]);
        assert_eq!(extract_overshoots(&path, Boundary::Strict).records[0].l_idx, 3);
        assert_eq!(extract_overshoots(&path, Boundary::Weak).records[0].l_idx, 2);
        // S_k = 0 never opens a cycle, even with Weak
        let flat = WalkPath::from_increments(0.5, vec![-0.5, 0.5]);
        assert!(extract_overshoots(&flat, Boundary::Weak).records.is_empty());
    }

    #[test]
    fn simulate_rejects_zero_steps_and_is_deterministic() {
        let k = Kernel::new(KernelSpec::iid_uniform(1.0, 0.25, 0.5, 1.0)).unwrap();
        assert_eq!(simulate_path(&k, 0.0, 0.0, 0, 1), Err(WalkError::NoSteps));
        assert_eq!(simulate_path(&k, 0.0, 0.0, 1, 1).unwrap().len(), 1);
        let a = simulate_path(&k, 0.0, 0.0, 1000, 42).unwrap();
        let b = simulate_path(&k, 0.0, 0.0, 1000, 42).unwrap();
        assert_eq!(a, b);
        assert!(a.increments.iter().all(|x| x.abs() <= 1.0));
        let mut s = 0.0;
        for (x, ps) in a.increments.iter().zip(&a.partial_sums) {
            s += x;
            assert_eq!(s, *ps);
        }
    }

    #[test]
    fn price_path_arithmetic() {
        let path = WalkPath::from_increments(0.0, vec![1.0, 0.5, 0.5]);
        assert_eq!(price_path(&path, 0.0), path.partial_sums);
        assert_eq!(price_path(&path, -0.5)[2], 0.5);
        let flat = WalkPath::from_increments(0.0, vec![0.0; 4]);
        assert_eq!(price_path(&flat, 1.0), vec![1.0, 2.0, 3.0, 4.0]);
    }

    #[test]
    fn csv_dump_has_header_and_rows() {
        let path = WalkPath::from_increments(0.5, vec![-0.7, 0.9]);
        let mut buf = Vec::new();
        path.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<_> = text.lines().collect();
        assert_eq!(lines[0], "step,x,s,regen");
        assert_eq!(lines.len(), 4);
        assert!(lines[2].starts_with("1,-0.7,"));
    }

    #[test]
    fn negated_thresholds_swap_and_flip() {
        let t = Thresholds::new(-1.0, 2.0, Boundary::Weak).unwrap();
        let n = t.negated();
        assert_eq!((n.lower(), n.upper()), (-2.0, 1.0));
        assert!(n.is_below(-2.0) && n.is_above(1.0));
    }
}
