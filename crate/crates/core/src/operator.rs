//! The multivariate neural-network operator `F_n` on a rectangle.
//!
//! For a function `f` on `I = ∏[a_i, b_i]` the operator samples `f` on the
//! lattice nodes `k/n` with `⌈n·a_i⌉ ≤ k_i ≤ ⌊n·b_i⌋` and evaluates the
//! normalized kernel average
//!
//! ```text
//! F_n(f, x) = Σ_k f(k/n) Ψ(n·x − k) / Σ_k Ψ(n·x − k)
//! ```
//!
//! Both sums are restricted to nodes within the kernel's truncation radius
//! on every axis. Because `Ψ` is a product kernel, the numerator is
//! accumulated axis by axis in a fixed row-major order, so pointwise and
//! grid evaluation (sequential or parallel) produce identical bits.

use rayon::prelude::*;
use thiserror::Error;

use crate::kernels::SigmoidalKernel;

/// Relative slack when snapping `n·a_i` to an integer before ceil/floor.
const SNAP_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OperatorError {
    #[error("invalid domain: {0}")]
    InvalidDomain(String),
    #[error("n must be at least 1")]
    InvalidN,
    #[error("index set is empty on axis {axis}: {k_lo} > {k_hi}")]
    EmptyIndexSet { axis: usize, k_lo: i64, k_hi: i64 },
    #[error("sample at node {node:?} is not finite")]
    NonFiniteSample { node: Vec<i64> },
    #[error("expected a point of dimension {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("point {0:?} lies outside the domain")]
    PointOutsideDomain(Vec<f64>),
    #[error("kernel weights vanish at {0:?} even after widening the truncation window")]
    DegenerateDenominator(Vec<f64>),
}

/// A closed rectangle `∏[lo_i, hi_i]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Domain {
    lo: Vec<f64>,
    hi: Vec<f64>,
}

impl Domain {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>) -> Result<Self, OperatorError> {
        if lo.len() != hi.len() {
            return Err(OperatorError::InvalidDomain(format!(
                "{} lower bounds but {} upper bounds",
                lo.len(),
                hi.len()
            )));
        }
        if lo.is_empty() || lo.len() > 2 {
            return Err(OperatorError::InvalidDomain(format!(
                "dimension {} is not supported (1 or 2)",
                lo.len()
            )));
        }
        for (i, (a, b)) in lo.iter().zip(&hi).enumerate() {
            if !(a.is_finite() && b.is_finite() && a < b) {
                return Err(OperatorError::InvalidDomain(format!(
                    "axis {i}: need finite lo < hi, got [{a}, {b}]"
                )));
            }
        }
        Ok(Domain { lo, hi })
    }

    pub fn interval(a: f64, b: f64) -> Result<Self, OperatorError> {
        Self::new(vec![a], vec![b])
    }

    pub fn rectangle(a1: f64, b1: f64, a2: f64, b2: f64) -> Result<Self, OperatorError> {
        Self::new(vec![a1, a2], vec![b1, b2])
    }

    /// `[0,1]^d`.
    pub fn unit(d: usize) -> Self {
        Self::new(vec![0.0; d], vec![1.0; d]).expect("unit cube is a valid domain")
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn lo(&self) -> &[f64] {
        &self.lo
    }

    pub fn hi(&self) -> &[f64] {
        &self.hi
    }

    pub fn width(&self, axis: usize) -> f64 {
        self.hi[axis] - self.lo[axis]
    }

    /// Lebesgue measure of the rectangle.
    pub fn volume(&self) -> f64 {
        (0..self.dim()).map(|i| self.width(i)).product()
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.dim()
            && x.iter().zip(self.lo.iter().zip(&self.hi)).all(|(&xi, (&a, &b))| {
                let slack = 1e-12 * (b - a);
                xi >= a - slack && xi <= b + slack
            })
    }
}

/// A real function on a rectangle.
pub trait ScalarField: Sync {
    fn domain(&self) -> &Domain;
    fn eval(&self, x: &[f64]) -> f64;
}

impl<T: ScalarField + ?Sized> ScalarField for &T {
    fn domain(&self) -> &Domain {
        (**self).domain()
    }

    fn eval(&self, x: &[f64]) -> f64 {
        (**self).eval(x)
    }
}

/// A field backed by a closed-form evaluator.
pub struct FnField<F> {
    domain: Domain,
    f: F,
}

impl<F> FnField<F>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    pub fn new(domain: Domain, f: F) -> Self {
        FnField { domain, f }
    }
}

impl<F> ScalarField for FnField<F>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    fn domain(&self) -> &Domain {
        &self.domain
    }

    fn eval(&self, x: &[f64]) -> f64 {
        (self.f)(x)
    }
}

fn snap(t: f64) -> f64 {
    let r = t.round();
    if (t - r).abs() <= SNAP_TOLERANCE * t.abs().max(1.0) {
        r
    } else {
        t
    }
}

/// Integer bounds of the node set: `k_lo_i = ⌈n·a_i⌉`, `k_hi_i = ⌊n·b_i⌋`.
///
/// Products that land within rounding distance of an integer are snapped
/// first, so `0.3·10` yields node 3 rather than 4.
pub fn index_set(domain: &Domain, n: usize) -> Result<(Vec<i64>, Vec<i64>), OperatorError> {
    if n == 0 {
        return Err(OperatorError::InvalidN);
    }
    let nf = n as f64;
    let mut k_lo = Vec::with_capacity(domain.dim());
    let mut k_hi = Vec::with_capacity(domain.dim());
    for axis in 0..domain.dim() {
        let lo = snap(nf * domain.lo[axis]).ceil() as i64;
        let hi = snap(nf * domain.hi[axis]).floor() as i64;
        if hi < lo {
            return Err(OperatorError::EmptyIndexSet {
                axis,
                k_lo: lo,
                k_hi: hi,
            });
        }
        k_lo.push(lo);
        k_hi.push(hi);
    }
    Ok((k_lo, k_hi))
}

/// Sample values `f(k/n)` on the node set, stored row-major by `k − k_lo`.
///
/// The value type is generic so image lattices can be held as bytes.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleSet<V = f64> {
    n: usize,
    domain: Domain,
    k_lo: Vec<i64>,
    k_hi: Vec<i64>,
    values: Vec<V>,
}

impl<V: Copy + Into<f64>> SampleSet<V> {
    /// Fills the lattice with `node_value(k)` for every node `k`.
    pub fn from_nodes<F>(domain: Domain, n: usize, mut node_value: F) -> Result<Self, OperatorError>
    where
        F: FnMut(&[i64]) -> V,
    {
        let (k_lo, k_hi) = index_set(&domain, n)?;
        let extents: Vec<usize> = k_lo.iter().zip(&k_hi).map(|(a, b)| (b - a + 1) as usize).collect();
        let total: usize = extents.iter().product();
        let mut values = Vec::with_capacity(total);
        let mut k = k_lo.clone();
        for _ in 0..total {
            let v = node_value(&k);
            if !v.into().is_finite() {
                return Err(OperatorError::NonFiniteSample { node: k });
            }
            values.push(v);
            // row-major odometer: last axis fastest
            for axis in (0..k.len()).rev() {
                k[axis] += 1;
                if k[axis] <= k_hi[axis] {
                    break;
                }
                k[axis] = k_lo[axis];
            }
        }
        Ok(SampleSet {
            n,
            domain,
            k_lo,
            k_hi,
            values,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn domain(&self) -> &Domain {
        &self.domain
    }

    pub fn k_lo(&self) -> &[i64] {
        &self.k_lo
    }

    pub fn k_hi(&self) -> &[i64] {
        &self.k_hi
    }

    pub fn values(&self) -> &[V] {
        &self.values
    }

    pub fn extents(&self) -> Vec<usize> {
        self.k_lo
            .iter()
            .zip(&self.k_hi)
            .map(|(a, b)| (b - a + 1) as usize)
            .collect()
    }

    /// Value at node `k`, or `None` outside the node set.
    pub fn get(&self, k: &[i64]) -> Option<V> {
        if k.len() != self.k_lo.len() {
            return None;
        }
        let mut flat = 0usize;
        for axis in 0..k.len() {
            if k[axis] < self.k_lo[axis] || k[axis] > self.k_hi[axis] {
                return None;
            }
            let extent = (self.k_hi[axis] - self.k_lo[axis] + 1) as usize;
            flat = flat * extent + (k[axis] - self.k_lo[axis]) as usize;
        }
        Some(self.values[flat])
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|&v| v.into().abs()).fold(0.0, f64::max)
    }

    fn set(&mut self, k: &[i64], v: V) {
        let mut flat = 0usize;
        for axis in 0..k.len() {
            let extent = (self.k_hi[axis] - self.k_lo[axis] + 1) as usize;
            flat = flat * extent + (k[axis] - self.k_lo[axis]) as usize;
        }
        self.values[flat] = v;
    }
}

impl SampleSet<f64> {
    /// Replaces the value at node `k`; panics if `k` is not a node.
    pub fn with_value(mut self, k: &[i64], v: f64) -> Self {
        assert!(self.get(k).is_some(), "node {k:?} is outside the index set");
        self.set(k, v);
        self
    }
}

/// Samples `f` at every node `k/n` of its domain.
pub fn sample<F: ScalarField + ?Sized>(f: &F, n: usize) -> Result<SampleSet, OperatorError> {
    let nf = n as f64;
    let mut point = vec![0.0; f.domain().dim()];
    SampleSet::from_nodes(f.domain().clone(), n, |k| {
        for (p, &ki) in point.iter_mut().zip(k) {
            *p = ki as f64 / nf;
        }
        f.eval(&point)
    })
}

/// Kernel weights `φ(t − k)` for the contributing nodes of one axis.
#[derive(Debug, Clone)]
pub(crate) struct AxisWeights {
    /// Offset of the first contributing node from `k_lo`.
    start: usize,
    weights: Vec<f64>,
    sum: f64,
}

impl AxisWeights {
    fn new(kernel: &SigmoidalKernel, t: f64, radius: f64, k_lo: i64, k_hi: i64) -> Self {
        let first = ((t - radius).ceil() as i64).max(k_lo);
        let last = ((t + radius).floor() as i64).min(k_hi);
        let mut weights = Vec::with_capacity((last - first + 1).max(0) as usize);
        let mut sum = 0.0;
        for k in first..=last {
            let w = kernel.phi(t - k as f64);
            sum += w;
            weights.push(w);
        }
        AxisWeights {
            start: (first - k_lo).max(0) as usize,
            weights,
            sum,
        }
    }
}

impl<V: Copy + Into<f64> + Sync> SampleSet<V> {
    fn strides(&self) -> Vec<usize> {
        let extents = self.extents();
        let mut strides = vec![1usize; extents.len()];
        for axis in (0..extents.len().saturating_sub(1)).rev() {
            strides[axis] = strides[axis + 1] * extents[axis + 1];
        }
        strides
    }

    pub(crate) fn axis_weights(
        &self,
        kernel: &SigmoidalKernel,
        axis: usize,
        coordinate: f64,
        radius: f64,
    ) -> AxisWeights {
        AxisWeights::new(
            kernel,
            self.n as f64 * coordinate,
            radius,
            self.k_lo[axis],
            self.k_hi[axis],
        )
    }

    /// Nested accumulation `Σ_{k₁} w₁ (Σ_{k₂} w₂ f(k))`, last axis innermost.
    fn accumulate(&self, axes: &[&AxisWeights], strides: &[usize], axis: usize, base: usize) -> f64 {
        let aw = axes[axis];
        let stride = strides[axis];
        let mut offset = base + aw.start * stride;
        let mut acc = 0.0;
        if axis + 1 == axes.len() {
            for &w in &aw.weights {
                acc += w * self.values[offset].into();
                offset += stride;
            }
        } else {
            for &w in &aw.weights {
                acc += w * self.accumulate(axes, strides, axis + 1, offset);
                offset += stride;
            }
        }
        acc
    }

    /// Ratio of the accumulated numerator to the product of axis weight sums;
    /// `None` when the denominator vanishes.
    pub(crate) fn ratio(&self, axes: &[&AxisWeights], strides: &[usize]) -> Option<f64> {
        let den: f64 = axes.iter().map(|a| a.sum).product();
        if !(den > 0.0) {
            return None;
        }
        Some(self.accumulate(axes, strides, 0, 0) / den)
    }

    fn check_point(&self, x: &[f64]) -> Result<(), OperatorError> {
        if x.len() != self.domain.dim() {
            return Err(OperatorError::DimensionMismatch {
                expected: self.domain.dim(),
                got: x.len(),
            });
        }
        if !self.domain.contains(x) {
            return Err(OperatorError::PointOutsideDomain(x.to_vec()));
        }
        Ok(())
    }

    fn evaluate_checked(&self, kernel: &SigmoidalKernel, x: &[f64], strides: &[usize]) -> Result<f64, OperatorError> {
        let radius = kernel.truncation_radius();
        let weights: Vec<AxisWeights> = (0..x.len())
            .map(|axis| self.axis_weights(kernel, axis, x[axis], radius))
            .collect();
        let refs: Vec<&AxisWeights> = weights.iter().collect();
        if let Some(v) = self.ratio(&refs, strides) {
            return Ok(v);
        }
        self.evaluate_widened(kernel, x, strides)
    }

    /// Retry with a doubled window after a vanishing truncated denominator.
    pub(crate) fn evaluate_widened(
        &self,
        kernel: &SigmoidalKernel,
        x: &[f64],
        strides: &[usize],
    ) -> Result<f64, OperatorError> {
        let radius = 2.0 * kernel.truncation_radius() + 1.0;
        let weights: Vec<AxisWeights> = (0..x.len())
            .map(|axis| self.axis_weights(kernel, axis, x[axis], radius))
            .collect();
        let refs: Vec<&AxisWeights> = weights.iter().collect();
        self.ratio(&refs, strides)
            .ok_or_else(|| OperatorError::DegenerateDenominator(x.to_vec()))
    }

    pub(crate) fn row_major_strides(&self) -> Vec<usize> {
        self.strides()
    }
}

/// `F_n(f, x)` from precomputed samples.
pub fn evaluate<V>(samples: &SampleSet<V>, kernel: &SigmoidalKernel, x: &[f64]) -> Result<f64, OperatorError>
where
    V: Copy + Into<f64> + Sync,
{
    samples.check_point(x)?;
    samples.evaluate_checked(kernel, x, &samples.strides())
}

/// `F_n(f, ·)` at every point of `grid`, in input order.
///
/// Points are distributed over the current rayon pool; every output is
/// computed exactly as [`evaluate`] would, so the result does not depend on
/// the number of workers.
pub fn evaluate_grid<V>(
    samples: &SampleSet<V>,
    kernel: &SigmoidalKernel,
    grid: &[Vec<f64>],
) -> Result<Vec<f64>, OperatorError>
where
    V: Copy + Into<f64> + Sync + Send,
{
    for x in grid {
        samples.check_point(x)?;
    }
    let strides = samples.strides();
    grid.par_iter()
        .map(|x| samples.evaluate_checked(kernel, x, &strides))
        .collect()
}

/// `F_n` on the tensor grid `rows × cols` (2-D only), row-major output.
///
/// Axis weights are computed once per row and once per column; each output
/// is then bit-identical to [`evaluate`] at `(rows[u], cols[v])`.
pub fn evaluate_tensor_grid<V>(
    samples: &SampleSet<V>,
    kernel: &SigmoidalKernel,
    rows: &[f64],
    cols: &[f64],
) -> Result<Vec<f64>, OperatorError>
where
    V: Copy + Into<f64> + Sync + Send,
{
    if samples.domain.dim() != 2 {
        return Err(OperatorError::DimensionMismatch {
            expected: 2,
            got: samples.domain.dim(),
        });
    }
    for &r in rows {
        samples.check_point(&[r, samples.domain.lo[1]])?;
    }
    for &c in cols {
        samples.check_point(&[samples.domain.lo[0], c])?;
    }
    let radius = kernel.truncation_radius();
    let strides = samples.strides();
    let col_weights: Vec<AxisWeights> = cols
        .iter()
        .map(|&c| samples.axis_weights(kernel, 1, c, radius))
        .collect();
    let out_rows: Vec<Result<Vec<f64>, OperatorError>> = rows
        .par_iter()
        .map(|&r| {
            let row_w = samples.axis_weights(kernel, 0, r, radius);
            cols.iter()
                .zip(&col_weights)
                .map(|(&c, cw)| match samples.ratio(&[&row_w, cw], &strides) {
                    Some(v) => Ok(v),
                    None => samples.evaluate_widened(kernel, &[r, c], &strides),
                })
                .collect()
        })
        .collect();
    let mut out = Vec::with_capacity(rows.len() * cols.len());
    for row in out_rows {
        out.extend(row?);
    }
    Ok(out)
}

/// The operator output viewed as a field on the same domain.
pub struct NnApproximation<'a, V = f64> {
    samples: &'a SampleSet<V>,
    kernel: SigmoidalKernel,
    strides: Vec<usize>,
}

impl<'a, V: Copy + Into<f64> + Sync> NnApproximation<'a, V> {
    pub fn new(samples: &'a SampleSet<V>, kernel: SigmoidalKernel) -> Self {
        NnApproximation {
            strides: samples.row_major_strides(),
            samples,
            kernel,
        }
    }
}

impl<V: Copy + Into<f64> + Sync> ScalarField for NnApproximation<'_, V> {
    fn domain(&self) -> &Domain {
        self.samples.domain()
    }

    fn eval(&self, x: &[f64]) -> f64 {
        self.samples
            .evaluate_checked(&self.kernel, x, &self.strides)
            .expect("operator is defined on its whole domain")
    }
}
