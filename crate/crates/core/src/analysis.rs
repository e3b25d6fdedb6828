//! Numerical checks of the approximation theory: `L^p` norms on midpoint
//! grids, local and averaged moduli of smoothness, step-function envelopes
//! and log-log convergence-rate fits.
//!
//! Every continuous sup/inf is realized over grid samples. A grid cell is
//! treated as its closed box, so a window or envelope cell takes every grid
//! cell it touches.

use std::collections::VecDeque;
use std::fmt::Write as _;

use rayon::prelude::*;
use thiserror::Error;

use crate::imageio::ImageRaster;
use crate::kernels::SigmoidalKernel;
use crate::metrics::{cssim, midpoint_grid, MetricsError};
use crate::operator::{evaluate_tensor_grid, sample, Domain, NnApproximation, OperatorError, ScalarField};
use crate::rescale::image_model;

/// Errors at or below this count as exact reproduction in rate studies.
pub const EXACT_REPRODUCTION: f64 = 1e-12;

/// Slack for grid-window boundaries that coincide with cell edges.
const WINDOW_SLACK: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum AnalysisError {
    #[error("p = {0} is not in [1, ∞]")]
    InvalidP(f64),
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("fields must share a domain")]
    DomainMismatch,
    #[error("delta must be positive, got {0}")]
    InvalidDelta(f64),
    #[error("rate fit needs at least 3 points, got {0}")]
    TooFewPoints(usize),
    #[error("n values must be positive and strictly increasing")]
    UnorderedN,
    #[error("error {error} at n = {n} is not positive")]
    NonPositiveError { n: f64, error: f64 },
    #[error(transparent)]
    Operator(#[from] OperatorError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error(transparent)]
    Rescale(#[from] crate::rescale::RescaleError),
}

fn check_p(p: f64) -> Result<(), AnalysisError> {
    if p >= 1.0 {
        Ok(())
    } else {
        Err(AnalysisError::InvalidP(p))
    }
}

/// Samples of a function at the cell midpoints of a uniform grid.
#[derive(Debug, Clone, PartialEq)]
pub struct GridField {
    domain: Domain,
    resolution: Vec<usize>,
    values: Vec<f64>,
}

impl GridField {
    pub fn from_values(domain: Domain, resolution: Vec<usize>, values: Vec<f64>) -> Result<Self, AnalysisError> {
        if resolution.len() != domain.dim() {
            return Err(AnalysisError::InvalidGrid(format!(
                "{} resolutions for a {}-D domain",
                resolution.len(),
                domain.dim()
            )));
        }
        if resolution.iter().any(|&r| r < 2) {
            return Err(AnalysisError::InvalidGrid(
                "resolution must be at least 2 per axis".into(),
            ));
        }
        if values.len() != resolution.iter().product::<usize>() {
            return Err(AnalysisError::InvalidGrid(
                "value count does not match resolution".into(),
            ));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(AnalysisError::InvalidGrid("non-finite sample".into()));
        }
        Ok(GridField {
            domain,
            resolution,
            values,
        })
    }

    pub fn from_field<F: ScalarField + ?Sized>(f: &F, resolution: &[usize]) -> Result<Self, AnalysisError> {
        if resolution.len() != f.domain().dim() {
            return Err(AnalysisError::InvalidGrid("resolution does not match dimension".into()));
        }
        let points = midpoint_grid(f.domain().lo(), f.domain().hi(), resolution);
        let values = points.par_iter().map(|x| f.eval(x)).collect();
        Self::from_values(f.domain().clone(), resolution.to_vec(), values)
    }

    pub fn domain(&self) -> &Domain {
        &self.domain
    }

    pub fn resolution(&self) -> &[usize] {
        &self.resolution
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn spacing(&self, axis: usize) -> f64 {
        self.domain.width(axis) / self.resolution[axis] as f64
    }

    pub fn cell_volume(&self) -> f64 {
        (0..self.resolution.len()).map(|a| self.spacing(a)).product()
    }

    /// Midpoint coordinate of cell `i` on `axis`.
    pub fn midpoint(&self, axis: usize, i: usize) -> f64 {
        self.domain.lo()[axis] + (i as f64 + 0.5) * self.spacing(axis)
    }

    /// Resolution per axis padded to two axes (a 1-D grid is one row).
    fn shape2(&self) -> (usize, usize) {
        match self.resolution.as_slice() {
            [n] => (1, *n),
            [r, c] => (*r, *c),
            _ => unreachable!("domains are 1-D or 2-D"),
        }
    }

    /// Same grid, new values.
    fn with_values(&self, values: Vec<f64>) -> GridField {
        GridField {
            domain: self.domain.clone(),
            resolution: self.resolution.clone(),
            values,
        }
    }

    pub fn zip_with(&self, other: &GridField, op: impl Fn(f64, f64) -> f64) -> Result<GridField, AnalysisError> {
        if self.domain != other.domain || self.resolution != other.resolution {
            return Err(AnalysisError::DomainMismatch);
        }
        Ok(self.with_values(self.values.iter().zip(&other.values).map(|(&a, &b)| op(a, b)).collect()))
    }

    fn cell_index(&self, axis: usize, x: f64) -> usize {
        let t = (x - self.domain.lo()[axis]) / self.spacing(axis);
        if t <= 0.0 {
            0
        } else {
            (t.floor() as usize).min(self.resolution[axis] - 1)
        }
    }

    /// Range of cells on `axis` whose closed extent meets `[a, b]`.
    fn cells_meeting(&self, axis: usize, a: f64, b: f64) -> (usize, usize) {
        let h = self.spacing(axis);
        let lo = self.domain.lo()[axis];
        let last = self.resolution[axis] as isize - 1;
        let first = ((a - lo) / h - 1.0 - WINDOW_SLACK).ceil() as isize;
        let end = ((b - lo) / h + WINDOW_SLACK).floor() as isize;
        (first.clamp(0, last) as usize, end.clamp(0, last) as usize)
    }
}

impl ScalarField for GridField {
    fn domain(&self) -> &Domain {
        &self.domain
    }

    /// Nearest-cell lookup.
    fn eval(&self, x: &[f64]) -> f64 {
        let mut flat = 0;
        for axis in 0..self.resolution.len() {
            flat = flat * self.resolution[axis] + self.cell_index(axis, x[axis]);
        }
        self.values[flat]
    }
}

/// Composite midpoint rule for `‖f‖_p`; `p = f64::INFINITY` gives the max.
pub fn lp_norm(f: &GridField, p: f64) -> Result<f64, AnalysisError> {
    check_p(p)?;
    if p.is_infinite() {
        return Ok(f.values.iter().fold(0.0, |m, v| m.max(v.abs())));
    }
    let vol = f.cell_volume();
    let sum: f64 = if p == 1.0 {
        f.values.iter().map(|v| v.abs()).sum()
    } else if p == 2.0 {
        f.values.iter().map(|v| v * v).sum()
    } else {
        f.values.iter().map(|v| v.abs().powf(p)).sum()
    };
    Ok(if p == 1.0 {
        sum * vol
    } else if p == 2.0 {
        (sum * vol).sqrt()
    } else {
        (sum * vol).powf(1.0 / p)
    })
}

/// `‖f − g‖_p` sampled at the midpoints of a `resolution` grid.
pub fn lp_error<F, G>(f: &F, g: &G, p: f64, resolution: &[usize]) -> Result<f64, AnalysisError>
where
    F: ScalarField + ?Sized,
    G: ScalarField + ?Sized,
{
    check_p(p)?;
    if f.domain() != g.domain() {
        return Err(AnalysisError::DomainMismatch);
    }
    let fg = GridField::from_field(f, resolution)?;
    let gg = GridField::from_field(g, resolution)?;
    lp_norm(&fg.zip_with(&gg, |a, b| a - b)?, p)
}

fn check_delta(delta: f64) -> Result<(), AnalysisError> {
    if delta > 0.0 && delta.is_finite() {
        Ok(())
    } else {
        Err(AnalysisError::InvalidDelta(delta))
    }
}

/// Oscillation `max − min` of `f` over the grid cells meeting the closed
/// max-norm box of radius `δ/2` about `x`.
pub fn local_modulus(f: &GridField, x: &[f64], delta: f64) -> Result<f64, AnalysisError> {
    check_delta(delta)?;
    if x.len() != f.resolution.len() {
        return Err(AnalysisError::InvalidGrid("point dimension mismatch".into()));
    }
    let ranges: Vec<(usize, usize)> = (0..x.len())
        .map(|a| f.cells_meeting(a, x[a] - delta / 2.0, x[a] + delta / 2.0))
        .collect();
    let (mut hi, mut lo) = (f64::NEG_INFINITY, f64::INFINITY);
    let (rows, cols) = match ranges.as_slice() {
        [c] => ((0, 0), *c),
        [r, c] => (*r, *c),
        _ => unreachable!(),
    };
    let width = f.shape2().1;
    for i in rows.0..=rows.1 {
        for j in cols.0..=cols.1 {
            let v = f.values[i * width + j];
            hi = hi.max(v);
            lo = lo.min(v);
        }
    }
    Ok(hi - lo)
}

/// Half-width in cells of the window about a cell midpoint.
fn window_half_width(delta: f64, h: f64) -> usize {
    (delta / (2.0 * h) + 0.5 + WINDOW_SLACK).floor() as usize
}

/// Sliding max and min over `[i − w, i + w]` (clipped) with monotonic deques.
pub fn sliding_extrema(values: &[f64], w: usize) -> (Vec<f64>, Vec<f64>) {
    let n = values.len();
    let mut maxq: VecDeque<usize> = VecDeque::new();
    let mut minq: VecDeque<usize> = VecDeque::new();
    let (mut maxs, mut mins) = (Vec::with_capacity(n), Vec::with_capacity(n));
    let mut next = 0;
    for i in 0..n {
        let right = (i + w).min(n - 1);
        while next <= right {
            let v = values[next];
            while maxq.back().is_some_and(|&b| values[b] <= v) {
                maxq.pop_back();
            }
            maxq.push_back(next);
            while minq.back().is_some_and(|&b| values[b] >= v) {
                minq.pop_back();
            }
            minq.push_back(next);
            next += 1;
        }
        let left = i.saturating_sub(w);
        while maxq.front().is_some_and(|&f| f < left) {
            maxq.pop_front();
        }
        while minq.front().is_some_and(|&f| f < left) {
            minq.pop_front();
        }
        maxs.push(values[maxq[0]]);
        mins.push(values[minq[0]]);
    }
    (maxs, mins)
}

/// Local modulus `ω(f, x; δ)` at every cell midpoint, by two separable
/// sliding-window passes.
pub fn local_modulus_field(f: &GridField, delta: f64) -> Result<GridField, AnalysisError> {
    check_delta(delta)?;
    let (rows, cols) = f.shape2();
    let (w_row, w_col) = match f.resolution.len() {
        1 => (0, window_half_width(delta, f.spacing(0))),
        _ => (
            window_half_width(delta, f.spacing(0)),
            window_half_width(delta, f.spacing(1)),
        ),
    };
    // pass 1: along each row
    let mut row_max = vec![0.0; rows * cols];
    let mut row_min = vec![0.0; rows * cols];
    row_max
        .par_chunks_mut(cols)
        .zip(row_min.par_chunks_mut(cols))
        .enumerate()
        .for_each(|(i, (mx, mn))| {
            let (a, b) = sliding_extrema(&f.values[i * cols..(i + 1) * cols], w_col);
            mx.copy_from_slice(&a);
            mn.copy_from_slice(&b);
        });
    // pass 2: along each column
    let columns: Vec<(Vec<f64>, Vec<f64>)> = (0..cols)
        .into_par_iter()
        .map(|j| {
            let cmax: Vec<f64> = (0..rows).map(|i| row_max[i * cols + j]).collect();
            let cmin: Vec<f64> = (0..rows).map(|i| row_min[i * cols + j]).collect();
            let (mx, _) = sliding_extrema(&cmax, w_row);
            let (_, mn) = sliding_extrema(&cmin, w_row);
            (mx, mn)
        })
        .collect();
    let mut omega = vec![0.0; rows * cols];
    for (j, (mx, mn)) in columns.iter().enumerate() {
        for i in 0..rows {
            omega[i * cols + j] = mx[i] - mn[i];
        }
    }
    Ok(f.with_values(omega))
}

/// Averaged modulus of smoothness `τ(f, δ)_p = ‖ω(f, ·; δ)‖_p`.
pub fn tau_modulus(f: &GridField, delta: f64, p: f64) -> Result<f64, AnalysisError> {
    check_p(p)?;
    lp_norm(&local_modulus_field(f, delta)?, p)
}

/// Integral modulus `ω(f, δ)_p`: the largest `L^p` norm of `f(x+h) − f(x)`
/// over eight shift directions of length `δ` (rounded toward zero onto the
/// grid), counting only pairs with both points in the domain.
pub fn shift_modulus(f: &GridField, delta: f64, p: f64) -> Result<f64, AnalysisError> {
    check_p(p)?;
    check_delta(delta)?;
    let (rows, cols) = f.shape2();
    let two_d = f.resolution.len() == 2;
    let mut best: f64 = 0.0;
    for k in 0..8 {
        let angle = k as f64 * std::f64::consts::FRAC_PI_4;
        let (dy, dx) = if two_d {
            (
                (delta * angle.cos() / f.spacing(0) + WINDOW_SLACK).trunc() as isize,
                (delta * angle.sin() / f.spacing(1) + WINDOW_SLACK).trunc() as isize,
            )
        } else {
            (0, (delta * angle.cos() / f.spacing(0) + WINDOW_SLACK).trunc() as isize)
        };
        if dy == 0 && dx == 0 {
            continue;
        }
        let mut acc: f64 = 0.0;
        for i in 0..rows as isize {
            let ii = i + dy;
            if ii < 0 || ii >= rows as isize {
                continue;
            }
            for j in 0..cols as isize {
                let jj = j + dx;
                if jj < 0 || jj >= cols as isize {
                    continue;
                }
                let diff =
                    (f.values[ii as usize * cols + jj as usize] - f.values[i as usize * cols + j as usize]).abs();
                if p.is_infinite() {
                    acc = acc.max(diff);
                } else {
                    acc += diff.powf(p);
                }
            }
        }
        let norm = if p.is_infinite() {
            acc
        } else {
            (acc * f.cell_volume()).powf(1.0 / p)
        };
        best = best.max(norm);
    }
    Ok(best)
}

/// Piecewise-constant upper and lower envelopes of a grid field.
#[derive(Debug, Clone, PartialEq)]
pub struct Envelopes {
    pub upper: GridField,
    pub lower: GridField,
    /// Envelope cells per axis, `⌊n^{1/4} + 1⌋`.
    pub cells: usize,
}

/// Number of envelope cells per axis for operator index `n`.
pub fn envelope_cells(n: usize) -> usize {
    let root = (n as f64).sqrt().sqrt();
    let snapped = if (root - root.round()).abs() < 1e-9 {
        root.round()
    } else {
        root
    };
    (snapped + 1.0).floor() as usize
}

/// Upper/lower step envelopes `P_f`, `Q_f` on `⌊n^{1/4}+1⌋` cells per axis.
///
/// Each envelope cell takes the sup/inf over every grid cell meeting its
/// closure; each grid sample then reads the envelope cell containing its
/// midpoint, so `Q_f ≤ f ≤ P_f` holds sample by sample.
pub fn envelopes(f: &GridField, n: usize) -> Result<Envelopes, AnalysisError> {
    if n == 0 {
        return Err(AnalysisError::Operator(OperatorError::InvalidN));
    }
    let cells = envelope_cells(n);
    let d = f.resolution.len();
    // per axis: grid index range of each closed envelope cell, and the owner
    // envelope cell of each grid index
    let mut ranges: Vec<Vec<(usize, usize)>> = Vec::with_capacity(d);
    let mut owner: Vec<Vec<usize>> = Vec::with_capacity(d);
    for axis in 0..d {
        let lo = f.domain.lo()[axis];
        let step = f.domain.width(axis) / cells as f64;
        ranges.push(
            (0..cells)
                .map(|c| f.cells_meeting(axis, lo + c as f64 * step, lo + (c + 1) as f64 * step))
                .collect(),
        );
        owner.push(
            (0..f.resolution[axis])
                .map(|i| (((f.midpoint(axis, i) - lo) / step).floor() as usize).min(cells - 1))
                .collect(),
        );
    }
    let (rows, cols) = f.shape2();
    let (row_ranges, row_owner) = if d == 1 {
        (vec![(0, 0)], vec![0; 1])
    } else {
        (ranges[0].clone(), owner[0].clone())
    };
    let (col_ranges, col_owner) = (&ranges[d - 1], &owner[d - 1]);
    let mut sup = vec![f64::NEG_INFINITY; row_ranges.len() * cells];
    let mut inf = vec![f64::INFINITY; row_ranges.len() * cells];
    for (bi, &(r0, r1)) in row_ranges.iter().enumerate() {
        for (bj, &(c0, c1)) in col_ranges.iter().enumerate() {
            let slot = bi * cells + bj;
            for i in r0..=r1 {
                for &v in &f.values[i * cols + c0..=i * cols + c1] {
                    sup[slot] = sup[slot].max(v);
                    inf[slot] = inf[slot].min(v);
                }
            }
        }
    }
    let mut upper = Vec::with_capacity(rows * cols);
    let mut lower = Vec::with_capacity(rows * cols);
    for i in 0..rows {
        for j in 0..cols {
            let slot = row_owner[i] * cells + col_owner[j];
            upper.push(sup[slot]);
            lower.push(inf[slot]);
        }
    }
    Ok(Envelopes {
        upper: f.with_values(upper),
        lower: f.with_values(lower),
        cells,
    })
}

/// Least-squares line through `(ln n, ln error)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateFit {
    pub slope: f64,
    /// RMS deviation of the log errors from the fitted line.
    pub residual: f64,
}

pub fn rate_fit(n_values: &[f64], errors: &[f64]) -> Result<RateFit, AnalysisError> {
    if n_values.len() != errors.len() {
        return Err(AnalysisError::InvalidGrid(
            "n values and errors differ in length".into(),
        ));
    }
    if n_values.len() < 3 {
        return Err(AnalysisError::TooFewPoints(n_values.len()));
    }
    if n_values.iter().any(|&n| !(n > 0.0)) || n_values.windows(2).any(|w| w[1] <= w[0]) {
        return Err(AnalysisError::UnorderedN);
    }
    if let Some((&n, &error)) = n_values.iter().zip(errors).find(|(_, &e)| !(e > 0.0)) {
        return Err(AnalysisError::NonPositiveError { n, error });
    }
    let xs: Vec<f64> = n_values.iter().map(|n| n.ln()).collect();
    let ys: Vec<f64> = errors.iter().map(|e| e.ln()).collect();
    let m = xs.len() as f64;
    let (mx, my) = (xs.iter().sum::<f64>() / m, ys.iter().sum::<f64>() / m);
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let residual = (xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| (y - (intercept + slope * x)).powi(2))
        .sum::<f64>()
        / m)
        .sqrt();
    Ok(RateFit { slope, residual })
}

/// Errors (or dissimilarities) against `n`, with the fitted log-log slope.
#[derive(Debug, Clone, PartialEq)]
pub struct RateStudy {
    pub n_values: Vec<usize>,
    pub errors: Vec<f64>,
    /// `f64::NEG_INFINITY` when the errors vanish (exact reproduction).
    pub fitted_slope: f64,
    pub fit_residual: f64,
}

impl RateStudy {
    pub fn new(n_values: Vec<usize>, errors: Vec<f64>) -> Result<Self, AnalysisError> {
        let ns: Vec<f64> = n_values.iter().map(|&n| n as f64).collect();
        let (fitted_slope, fit_residual) = if errors.iter().any(|&e| e <= EXACT_REPRODUCTION) {
            check_n_values(&n_values)?;
            if n_values.len() < 3 {
                return Err(AnalysisError::TooFewPoints(n_values.len()));
            }
            (f64::NEG_INFINITY, 0.0)
        } else {
            let fit = rate_fit(&ns, &errors)?;
            (fit.slope, fit.residual)
        };
        Ok(RateStudy {
            n_values,
            errors,
            fitted_slope,
            fit_residual,
        })
    }

    /// CSV with header `n,<column>`, LF endings, 9 significant digits.
    pub fn to_csv(&self, column: &str) -> String {
        let mut out = format!("n,{column}\n");
        for (n, e) in self.n_values.iter().zip(&self.errors) {
            let _ = writeln!(out, "{n},{}", format_sig9(*e));
        }
        out
    }
}

fn check_n_values(n_values: &[usize]) -> Result<(), AnalysisError> {
    if n_values.is_empty() || n_values[0] == 0 || n_values.windows(2).any(|w| w[1] <= w[0]) {
        return Err(AnalysisError::UnorderedN);
    }
    Ok(())
}

/// `%.9g`-style formatting: 9 significant digits, `.` decimal point.
pub fn format_sig9(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return "0".into();
    }
    let sci = format!("{x:.8e}");
    let (mantissa, exp) = sci.split_once('e').expect("scientific format");
    let exp: i32 = exp.parse().expect("exponent");
    if (-5..9).contains(&exp) {
        let decimals = (8 - exp).max(0) as usize;
        let fixed = format!("{x:.decimals$}");
        if fixed.contains('.') {
            fixed.trim_end_matches('0').trim_end_matches('.').to_string()
        } else {
            fixed
        }
    } else {
        let m = if mantissa.contains('.') {
            mantissa.trim_end_matches('0').trim_end_matches('.')
        } else {
            mantissa
        };
        format!("{m}e{}{:02}", if exp < 0 { '-' } else { '+' }, exp.abs())
    }
}

/// The operator output for `f` sampled on the midpoint grid.
fn operator_on_grid<F: ScalarField + ?Sized>(
    f: &F,
    kernel: &SigmoidalKernel,
    n: usize,
    resolution: &[usize],
) -> Result<GridField, AnalysisError> {
    let samples = sample(f, n)?;
    let domain = f.domain();
    if domain.dim() == 2 {
        let axis = |a: usize| -> Vec<f64> {
            let h = domain.width(a) / resolution[a] as f64;
            (0..resolution[a])
                .map(|i| domain.lo()[a] + (i as f64 + 0.5) * h)
                .collect()
        };
        let values = evaluate_tensor_grid(&samples, kernel, &axis(0), &axis(1))?;
        GridField::from_values(domain.clone(), resolution.to_vec(), values)
    } else {
        GridField::from_field(&NnApproximation::new(&samples, *kernel), resolution)
    }
}

/// `‖F_n f − f‖_p` for each `n`, with the fitted decay rate.
pub fn convergence_study<F: ScalarField + ?Sized>(
    f: &F,
    kernel: &SigmoidalKernel,
    n_values: &[usize],
    p: f64,
    resolution: &[usize],
) -> Result<RateStudy, AnalysisError> {
    check_p(p)?;
    check_n_values(n_values)?;
    let reference = GridField::from_field(f, resolution)?;
    let mut errors = Vec::with_capacity(n_values.len());
    for &n in n_values {
        let approx = operator_on_grid(f, kernel, n, resolution)?;
        errors.push(lp_norm(&approx.zip_with(&reference, |a, b| a - b)?, p)?);
    }
    RateStudy::new(n_values.to_vec(), errors)
}

/// Continuous dissimilarity `|1 − cSSIM(f̃, F_n f̃)|` of a gray raster's
/// image model for each `n`, by midpoint quadrature with `oversample`
/// points per pixel and axis.
pub fn dissimilarity_study(
    raster: &ImageRaster,
    kernel: &SigmoidalKernel,
    n_values: &[usize],
    oversample: usize,
    c1: f64,
    c2: f64,
) -> Result<RateStudy, AnalysisError> {
    check_n_values(n_values)?;
    if oversample == 0 {
        return Err(AnalysisError::InvalidGrid("oversampling must be positive".into()));
    }
    let model = image_model(raster)?;
    let resolution = [raster.rows() * oversample, raster.cols() * oversample];
    let reference = GridField::from_field(&model, &resolution)?;
    let mut values = Vec::with_capacity(n_values.len());
    for &n in n_values {
        let approx = operator_on_grid(&model, kernel, n, &resolution)?;
        values.push(cssim(&reference, &approx, &resolution, c1, c2)?.dissimilarity);
    }
    RateStudy::new(n_values.to_vec(), values)
}
