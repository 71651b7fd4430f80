//! Empirical-law machinery and ergodicity diagnostics.

mod bounds;
mod experiments;
mod irwin_hall;
mod lln;
pub mod quadrature;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use bounds::{beta_measure, kappa_tilde, BoundParams, DeltaBox, MinorizationBound, UBox};
pub use experiments::{
    tv_decay_experiment, verify_minorization, Chain, InitialCondition, MinorizationChain,
    MinorizationReport, Probe, ProbeBoxResult, TvOptions, TvSeries, VerifyOptions,
};
pub use irwin_hall::{irwin_hall_cdf, irwin_hall_pdf};
pub use lln::{lln_run, LlnRun, Observable};

use crate::walk::WalkPath;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ErgodicsError {
    #[error("empirical law needs at least one sample")]
    EmptyInput,
    #[error("sample has {got} coordinates, binning has {expected}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("empirical laws live on different grids")]
    GridMismatch,
    #[error("invalid binning: {0}")]
    InvalidBinning(String),
    #[error("invalid gamma = {gamma}: must lie in (0, {limit})")]
    InvalidGamma { gamma: f64, limit: f64 },
    #[error("insufficient replicates: {0}")]
    InsufficientReplicates(String),
    #[error("invalid experiment: {0}")]
    InvalidExperiment(String),
    #[error("step budget of {max_steps} exhausted after {completed} counted cycles")]
    BudgetExceeded { max_steps: u64, completed: usize },
}

/// Bin edges along one coordinate. Values outside `[edges[0], edges[last]]`
/// are clipped into the end bins and counted.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Axis {
    pub edges: Vec<f64>,
}

impl Axis {
    pub fn uniform(lo: f64, hi: f64, bins: usize) -> Self {
        assert!(bins >= 1 && hi > lo, "uniform axis needs bins >= 1 and hi > lo");
        let w = (hi - lo) / bins as f64;
        let mut edges: Vec<f64> = (0..bins).map(|i| lo + w * i as f64).collect();
        edges.push(hi);
        Self { edges }
    }

    /// Unit bins centred on `lo..=hi` plus one overflow bin for values above `hi`.
    pub fn integer_with_overflow(lo: u64, hi: u64) -> Self {
        assert!(hi >= lo);
        let mut edges: Vec<f64> = (lo..=hi + 1).map(|k| k as f64 - 0.5).collect();
        edges.push(f64::INFINITY);
        Self { edges }
    }

    pub fn bins(&self) -> usize {
        self.edges.len() - 1
    }

    fn validate(&self) -> Result<(), ErgodicsError> {
        if self.edges.len() < 2 {
            return Err(ErgodicsError::InvalidBinning("axis needs two edges".into()));
        }
        if self.edges.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(ErgodicsError::InvalidBinning(
                "edges must be strictly increasing".into(),
            ));
        }
        Ok(())
    }

    /// Bin of `v` and whether it was clipped.
    #[inline]
    fn locate(&self, v: f64) -> (usize, bool) {
        let e = &self.edges;
        let last = e.len() - 2;
        if v < e[0] {
            return (0, true);
        }
        if v > e[last + 1] || v.is_nan() {
            return (last, true);
        }
        // index of the bin [e[i], e[i+1]); the top edge closes the last bin
        let i = e.partition_point(|&edge| edge <= v);
        (i.saturating_sub(1).min(last), false)
    }
}

/// Tensor-product grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Binning {
    pub axes: Vec<Axis>,
}

impl Binning {
    pub fn new(axes: Vec<Axis>) -> Result<Self, ErgodicsError> {
        if axes.is_empty() {
            return Err(ErgodicsError::InvalidBinning("no axes".into()));
        }
        for a in &axes {
            a.validate()?;
        }
        Ok(Self { axes })
    }

    pub fn dims(&self) -> usize {
        self.axes.len()
    }

    pub fn n_bins(&self) -> usize {
        self.axes.iter().map(Axis::bins).product()
    }

    /// Row-major flat bin index.
    pub fn index(&self, sample: &[f64]) -> Result<(usize, bool), ErgodicsError> {
        if sample.len() != self.axes.len() {
            return Err(ErgodicsError::DimensionMismatch {
                expected: self.axes.len(),
                got: sample.len(),
            });
        }
        let mut flat = 0;
        let mut clipped = false;
        for (axis, &v) in self.axes.iter().zip(sample) {
            let (i, c) = axis.locate(v);
            flat = flat * axis.bins() + i;
            clipped |= c;
        }
        Ok((flat, clipped))
    }
}

/// Normalized histogram.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EmpiricalLaw {
    pub binning: Binning,
    pub masses: Vec<f64>,
    pub n_samples: usize,
    /// Samples that fell outside the grid and were clipped into an end bin.
    pub clipped: usize,
}

impl EmpiricalLaw {
    pub fn bin_edges(&self) -> Vec<&[f64]> {
        self.binning.axes.iter().map(|a| a.edges.as_slice()).collect()
    }

    /// Mean of coordinate `dim` computed from bin midpoints (finite bins only).
    pub fn marginal_mean(&self, dim: usize) -> f64 {
        let axes = &self.binning.axes;
        let stride: usize = axes[dim + 1..].iter().map(Axis::bins).product();
        let bins = axes[dim].bins();
        let mut acc = 0.0;
        for (flat, &p) in self.masses.iter().enumerate() {
            let i = (flat / stride) % bins;
            let e = &axes[dim].edges;
            acc += p * 0.5 * (e[i] + e[i + 1]);
        }
        acc
    }
}

pub fn empirical_law<I, S>(samples: I, binning: &Binning) -> Result<EmpiricalLaw, ErgodicsError>
where
    I: IntoIterator<Item = S>,
    S: AsRef<[f64]>,
{
    let mut counts = vec![0u64; binning.n_bins()];
    let mut n = 0usize;
    let mut clipped = 0usize;
    for s in samples {
        let (i, c) = binning.index(s.as_ref())?;
        counts[i] += 1;
        n += 1;
        clipped += c as usize;
    }
    if n == 0 {
        return Err(ErgodicsError::EmptyInput);
    }
    let masses = counts.iter().map(|&c| c as f64 / n as f64).collect();
    Ok(EmpiricalLaw {
        binning: binning.clone(),
        masses,
        n_samples: n,
        clipped,
    })
}

/// `½ Σ |a_i - b_i|` on a shared grid.
pub fn tv_distance(a: &EmpiricalLaw, b: &EmpiricalLaw) -> Result<f64, ErgodicsError> {
    if a.binning != b.binning {
        return Err(ErgodicsError::GridMismatch);
    }
    let l1: f64 = a
        .masses
        .iter()
        .zip(&b.masses)
        .map(|(p, q)| (p - q).abs())
        .sum();
    Ok((0.5 * l1).clamp(0.0, 1.0))
}

/// Prefix means `Σ_{j≤n} v_j / n`.
pub fn lln_average(values: &[f64]) -> Vec<f64> {
    let mut sum = 0.0;
    values
        .iter()
        .enumerate()
        .map(|(i, v)| {
            sum += v;
            sum / (i + 1) as f64
        })
        .collect()
}

/// Standard error of the mean by non-overlapping batch means.
///
/// Uses `⌊√n⌋` batches of equal size (the tail remainder is ignored), which
/// keeps each batch long compared to the chain's regeneration scale.
pub fn batch_means_stderr(values: &[f64]) -> f64 {
    let n = values.len();
    if n < 4 {
        return f64::NAN;
    }
    let n_batches = ((n as f64).sqrt().floor() as usize).max(2);
    let size = n / n_batches;
    let means: Vec<f64> = values
        .chunks_exact(size)
        .take(n_batches)
        .map(|c| c.iter().sum::<f64>() / size as f64)
        .collect();
    let grand = means.iter().sum::<f64>() / n_batches as f64;
    let var = means.iter().map(|m| (m - grand).powi(2)).sum::<f64>() / (n_batches - 1) as f64;
    (var / n_batches as f64).sqrt()
}

/// Regeneration-block summary of a path.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BlockStats {
    pub count: usize,
    pub mean_length: f64,
    pub lengths: Vec<usize>,
    /// `Σ φ(X_k)` over each block.
    pub sums: Vec<f64>,
}

impl BlockStats {
    /// Regenerative estimate of the standard error of `Σ φ(X_k) / N`.
    ///
    /// Blocks after the first are i.i.d.; the ratio-estimator variance uses
    /// `Σ (B_i - μ̂ ℓ_i)² / (N²)` with `B_i` the block sums and `ℓ_i` lengths.
    pub fn ratio_stderr(&self) -> f64 {
        let blocks = self.lengths.len();
        if blocks < 3 {
            return f64::NAN;
        }
        let tail = 1..blocks;
        let total_len: usize = self.lengths[tail.clone()].iter().sum();
        let total_sum: f64 = self.sums[tail.clone()].iter().sum();
        let mu = total_sum / total_len as f64;
        let ss: f64 = tail
            .map(|i| (self.sums[i] - mu * self.lengths[i] as f64).powi(2))
            .sum();
        ss.sqrt() / total_len as f64
    }
}

/// Splits a path at regeneration steps; each block starts at a regenerated
/// step, and steps before the first regeneration form their own block.
pub fn regeneration_blocks(path: &WalkPath, phi: impl Fn(f64) -> f64) -> BlockStats {
    let mut lengths = Vec::new();
    let mut sums = Vec::new();
    for (i, (&x, &regen)) in path.increments.iter().zip(&path.regen_flags).enumerate() {
        if regen || i == 0 {
            lengths.push(0);
            sums.push(0.0);
        }
        *lengths.last_mut().unwrap() += 1;
        *sums.last_mut().unwrap() += phi(x);
    }
    let count = lengths.len();
    let mean_length = if count == 0 {
        0.0
    } else {
        path.len() as f64 / count as f64
    };
    BlockStats {
        count,
        mean_length,
        lengths,
        sums,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::{Kernel, KernelSpec};
    use crate::walk::simulate_path;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};

    fn unit_grid(bins: usize) -> Binning {
        Binning::new(vec![Axis::uniform(0.0, 1.0, bins)]).unwrap()
    }

    #[test]
    fn single_sample_fills_one_bin() {
        let law = empirical_law([[0.33]], &unit_grid(10)).unwrap();
        assert_eq!(law.masses.iter().filter(|&&m| m == 1.0).count(), 1);
        let twice = empirical_law([[0.51], [0.52]], &unit_grid(10)).unwrap();
        assert_eq!(twice.masses[5], 1.0);
    }

    #[test]
    fn empty_input_is_an_error() {
        let none: Vec<[f64; 1]> = vec![];
        assert_eq!(empirical_law(none, &unit_grid(4)), Err(ErgodicsError::EmptyInput));
    }

    #[test]
    fn out_of_range_samples_are_clipped_and_counted() {
        let law = empirical_law([[-0.5], [1.5], [0.5], [1.0]], &unit_grid(2)).unwrap();
        assert_eq!(law.clipped, 2);
        assert_eq!(law.masses, vec![0.25, 0.75]);
    }

    #[test]
    fn uniform_draws_fill_bins_evenly() {
        // binomial sd of a 0.1 bin at n = 1e6 is 3e-4; ±0.004 is > 13 sd
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        let samples: Vec<[f64; 1]> = (0..1_000_000).map(|_| [rng.random::<f64>()]).collect();
        let law = empirical_law(&samples, &unit_grid(10)).unwrap();
        assert!((law.masses.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        for m in &law.masses {
            assert!((m - 0.1).abs() < 0.004, "{m}");
        }
    }

    #[test]
    fn integer_axis_has_overflow_bin() {
        let grid = Binning::new(vec![Axis::integer_with_overflow(1, 3)]).unwrap();
        let law = empirical_law([[1.0], [2.0], [3.0], [9.0], [40.0]], &grid).unwrap();
        assert_eq!(law.masses, vec![0.2, 0.2, 0.2, 0.4]);
        assert_eq!(law.clipped, 0);
    }

    #[test]
    fn tv_examples() {
        let g = unit_grid(2);
        let a = empirical_law([[0.2], [0.7]], &g).unwrap();
        let b = empirical_law([[0.2], [0.3]], &g).unwrap();
        let c = empirical_law([[0.8], [0.9]], &g).unwrap();
        assert_eq!(tv_distance(&a, &a).unwrap(), 0.0);
        assert_eq!(tv_distance(&a, &b).unwrap(), 0.5);
        assert_eq!(tv_distance(&b, &c).unwrap(), 1.0);
        let other = empirical_law([[0.2]], &unit_grid(3)).unwrap();
        assert_eq!(tv_distance(&a, &other), Err(ErgodicsError::GridMismatch));
    }

    fn law_from(weights: &[u32]) -> EmpiricalLaw {
        let grid = unit_grid(weights.len());
        let samples: Vec<[f64; 1]> = weights
            .iter()
            .enumerate()
            .flat_map(|(i, &w)| {
                std::iter::repeat([(i as f64 + 0.5) / weights.len() as f64]).take(w as usize)
            })
            .collect();
        empirical_law(samples, &grid).unwrap()
    }

    proptest! {
        #[test]
        fn tv_is_a_metric(a in prop::collection::vec(0u32..20, 6),
                          b in prop::collection::vec(0u32..20, 6),
                          c in prop::collection::vec(0u32..20, 6)) {
            prop_assume!(a.iter().sum::<u32>() > 0 && b.iter().sum::<u32>() > 0 && c.iter().sum::<u32>() > 0);
            let (la, lb, lc) = (law_from(&a), law_from(&b), law_from(&c));
            let ab = tv_distance(&la, &lb).unwrap();
            prop_assert_eq!(ab, tv_distance(&lb, &la).unwrap());
            prop_assert!(ab <= tv_distance(&la, &lc).unwrap() + tv_distance(&lc, &lb).unwrap() + 1e-12);
            prop_assert_eq!(ab == 0.0, la.masses == lb.masses);
            prop_assert!((0.0..=1.0).contains(&ab));
        }
    }

    #[test]
    fn running_means() {
        assert_eq!(lln_average(&[2.0; 5]), vec![2.0; 5]);
        let alt: Vec<f64> = (0..1000).map(|i| (i % 2) as f64).collect();
        assert!((lln_average(&alt)[999] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn block_edge_cases() {
        let mut path = crate::walk::WalkPath::from_increments(0.0, vec![0.1; 7]);
        assert_eq!(regeneration_blocks(&path, |x| x).count, 1);
        path.regen_flags = vec![true; 7];
        let b = regeneration_blocks(&path, |_| 1.0);
        assert_eq!(b.lengths, vec![1; 7]);
        assert_eq!(b.sums, vec![1.0; 7]);
    }

    #[test]
    fn mean_block_length_is_inverse_alpha() {
        let alpha = 0.3;
        let k = Kernel::new(KernelSpec::state_shape(alpha, 0.2, 1.0)).unwrap();
        let path = simulate_path(&k, 0.0, 0.0, 1_000_000, 3).unwrap();
        let b = regeneration_blocks(&path, |x| x);
        // blocks are Geometric(α); sd of the mean length ≈ √(1-α)/α / √count
        let count = b.count as f64;
        let sd = (1.0 - alpha).sqrt() / alpha / count.sqrt();
        assert!((b.mean_length - 1.0 / alpha).abs() < 2.576 * sd + 1.0 / count);
        assert!(b.ratio_stderr() > 0.0);
    }

    #[test]
    fn batch_means_on_iid_matches_naive_stderr() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(8);
        let v: Vec<f64> = (0..40_000).map(|_| rng.random::<f64>()).collect();
        let naive = (1.0f64 / 12.0 / 40_000.0).sqrt();
        let bm = batch_means_stderr(&v);
        assert!((bm / naive - 1.0).abs() < 0.3, "{bm} vs {naive}");
    }
}
