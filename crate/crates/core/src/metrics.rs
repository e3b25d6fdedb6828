//! Image and function similarity metrics.
//!
//! Pixel metrics (MSE, PSNR, S-index) run over every sample of every
//! channel. SSIM variants are computed per channel and averaged.

use rayon::prelude::*;
use thiserror::Error;

use crate::imageio::ImageRaster;
use crate::operator::ScalarField;

/// Side of the SSIM Gaussian window.
pub const SSIM_WINDOW: usize = 11;
/// Standard deviation of the SSIM Gaussian window.
pub const SSIM_SIGMA: f64 = 1.5;
/// Dynamic range of 8-bit samples.
pub const DYNAMIC_RANGE: f64 = 255.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MetricsError {
    #[error("image shapes differ: {0:?} vs {1:?}")]
    DimMismatch((usize, usize, usize), (usize, usize, usize)),
    #[error("image {rows}x{cols} is smaller than the {window}x{window} SSIM window")]
    TooSmall { rows: usize, cols: usize, window: usize },
    #[error("fields must share a domain")]
    DomainMismatch,
    #[error("field value {value} < 0 at {point:?}")]
    NegativeFunction { point: Vec<f64>, value: f64 },
    #[error("invalid quadrature resolution")]
    InvalidResolution,
    #[error("max_i must be positive")]
    InvalidPeak,
}

/// How the SSIM stabilizers are derived from the dynamic range `L`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SsimConvention {
    /// `C1 = (0.01·L)²`, `C2 = (0.03·L)²`, as in common SSIM implementations.
    #[default]
    Squared,
    /// `C1 = 0.01·L`, `C2 = 0.03·L`.
    Unsquared,
}

impl std::str::FromStr for SsimConvention {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "squared" => Ok(SsimConvention::Squared),
            "paper" | "unsquared" => Ok(SsimConvention::Unsquared),
            other => Err(format!("unknown SSIM constants `{other}` (squared or paper)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SsimConstants {
    pub c1: f64,
    pub c2: f64,
    pub dynamic_range: f64,
}

impl SsimConstants {
    pub fn new(convention: SsimConvention, dynamic_range: f64) -> Self {
        let (k1, k2) = (0.01 * dynamic_range, 0.03 * dynamic_range);
        match convention {
            SsimConvention::Squared => SsimConstants {
                c1: k1 * k1,
                c2: k2 * k2,
                dynamic_range,
            },
            SsimConvention::Unsquared => SsimConstants {
                c1: k1,
                c2: k2,
                dynamic_range,
            },
        }
    }
}

impl Default for SsimConstants {
    fn default() -> Self {
        SsimConstants::new(SsimConvention::Squared, DYNAMIC_RANGE)
    }
}

fn shape(r: &ImageRaster) -> (usize, usize, usize) {
    (r.rows(), r.cols(), r.channels())
}

fn check_same(f: &ImageRaster, g: &ImageRaster) -> Result<(), MetricsError> {
    if f.same_shape(g) {
        Ok(())
    } else {
        Err(MetricsError::DimMismatch(shape(f), shape(g)))
    }
}

pub fn mse(f: &ImageRaster, g: &ImageRaster) -> Result<f64, MetricsError> {
    check_same(f, g)?;
    let sum: f64 = f
        .data()
        .iter()
        .zip(g.data())
        .map(|(&a, &b)| {
            let d = f64::from(a) - f64::from(b);
            d * d
        })
        .sum();
    Ok(sum / f.data().len() as f64)
}

/// `20·log₁₀(max_i / √MSE)`; `+∞` for identical images.
pub fn psnr(f: &ImageRaster, g: &ImageRaster, max_i: f64) -> Result<f64, MetricsError> {
    if !(max_i > 0.0) {
        return Err(MetricsError::InvalidPeak);
    }
    Ok(psnr_from_mse(mse(f, g)?, max_i))
}

pub fn psnr_from_mse(mse: f64, max_i: f64) -> f64 {
    if mse == 0.0 {
        f64::INFINITY
    } else {
        20.0 * (max_i / mse.sqrt()).log10()
    }
}

/// Mean of `1 − |F − G|` over luminances rescaled to `[0, 1]`.
pub fn s_index(f: &ImageRaster, g: &ImageRaster) -> Result<f64, MetricsError> {
    check_same(f, g)?;
    let sum: f64 = f
        .data()
        .iter()
        .zip(g.data())
        .map(|(&a, &b)| 1.0 - (f64::from(a) - f64::from(b)).abs() / 255.0)
        .sum();
    Ok(sum / f.data().len() as f64)
}

/// Means, variances and covariance of two equally long sample vectors under
/// the uniform (counting) probability measure.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Moments {
    pub mu_f: f64,
    pub mu_g: f64,
    pub sigma_f2: f64,
    pub sigma_g2: f64,
    pub sigma_fg: f64,
}

impl Moments {
    pub fn of(f: &[f64], g: &[f64]) -> Moments {
        debug_assert_eq!(f.len(), g.len());
        let n = f.len() as f64;
        let mu_f = f.iter().sum::<f64>() / n;
        let mu_g = g.iter().sum::<f64>() / n;
        let (mut sff, mut sgg, mut sfg) = (0.0, 0.0, 0.0);
        for (&a, &b) in f.iter().zip(g) {
            let (da, db) = (a - mu_f, b - mu_g);
            sff += da * da;
            sgg += db * db;
            sfg += da * db;
        }
        Moments {
            mu_f,
            mu_g,
            sigma_f2: sff / n,
            sigma_g2: sgg / n,
            sigma_fg: sfg / n,
        }
    }

    /// Luminance-times-structure SSIM expression.
    pub fn ssim(&self, c1: f64, c2: f64) -> f64 {
        ((2.0 * self.mu_f * self.mu_g + c1) * (2.0 * self.sigma_fg + c2))
            / ((self.mu_f * self.mu_f + self.mu_g * self.mu_g + c1) * (self.sigma_f2 + self.sigma_g2 + c2))
    }
}

fn channel_values(r: &ImageRaster, c: usize) -> Vec<f64> {
    r.data()
        .iter()
        .skip(c)
        .step_by(r.channels())
        .map(|&v| f64::from(v))
        .collect()
}

/// SSIM from whole-image statistics (no windowing).
pub fn ssim_global(f: &ImageRaster, g: &ImageRaster, constants: &SsimConstants) -> Result<f64, MetricsError> {
    check_same(f, g)?;
    let total: f64 = (0..f.channels())
        .map(|c| Moments::of(&channel_values(f, c), &channel_values(g, c)).ssim(constants.c1, constants.c2))
        .sum();
    Ok(total / f.channels() as f64)
}

fn gaussian_window() -> [f64; SSIM_WINDOW] {
    let mut w = [0.0; SSIM_WINDOW];
    let half = (SSIM_WINDOW / 2) as f64;
    for (i, wi) in w.iter_mut().enumerate() {
        let x = i as f64 - half;
        *wi = (-x * x / (2.0 * SSIM_SIGMA * SSIM_SIGMA)).exp();
    }
    let s: f64 = w.iter().sum();
    w.iter_mut().for_each(|wi| *wi /= s);
    w
}

/// Separable "valid" Gaussian filtering of a row-major plane.
fn filter_valid(plane: &[f64], rows: usize, cols: usize, w: &[f64; SSIM_WINDOW]) -> Vec<f64> {
    let (out_rows, out_cols) = (rows + 1 - SSIM_WINDOW, cols + 1 - SSIM_WINDOW);
    let mut horizontal = vec![0.0; rows * out_cols];
    horizontal.par_chunks_mut(out_cols).enumerate().for_each(|(i, out)| {
        let src = &plane[i * cols..(i + 1) * cols];
        for (j, o) in out.iter_mut().enumerate() {
            *o = w.iter().zip(&src[j..j + SSIM_WINDOW]).map(|(a, b)| a * b).sum();
        }
    });
    let mut result = vec![0.0; out_rows * out_cols];
    result.par_chunks_mut(out_cols).enumerate().for_each(|(i, out)| {
        for (j, o) in out.iter_mut().enumerate() {
            *o = (0..SSIM_WINDOW)
                .map(|k| w[k] * horizontal[(i + k) * out_cols + j])
                .sum();
        }
    });
    result
}

fn ssim_map_mean(f: &[f64], g: &[f64], rows: usize, cols: usize, constants: &SsimConstants) -> f64 {
    let w = gaussian_window();
    let ff: Vec<f64> = f.iter().map(|a| a * a).collect();
    let gg: Vec<f64> = g.iter().map(|b| b * b).collect();
    let fg: Vec<f64> = f.iter().zip(g).map(|(a, b)| a * b).collect();
    let mu_f = filter_valid(f, rows, cols, &w);
    let mu_g = filter_valid(g, rows, cols, &w);
    let e_ff = filter_valid(&ff, rows, cols, &w);
    let e_gg = filter_valid(&gg, rows, cols, &w);
    let e_fg = filter_valid(&fg, rows, cols, &w);
    let (c1, c2) = (constants.c1, constants.c2);
    let sum: f64 = (0..mu_f.len())
        .map(|i| {
            let (mf, mg) = (mu_f[i], mu_g[i]);
            let sf = e_ff[i] - mf * mf;
            let sg = e_gg[i] - mg * mg;
            let sfg = e_fg[i] - mf * mg;
            ((2.0 * mf * mg + c1) * (2.0 * sfg + c2)) / ((mf * mf + mg * mg + c1) * (sf + sg + c2))
        })
        .sum();
    sum / mu_f.len() as f64
}

/// Mean local SSIM over all 11×11 Gaussian (σ = 1.5) windows that fit inside
/// the image.
pub fn ssim_windowed(f: &ImageRaster, g: &ImageRaster, constants: &SsimConstants) -> Result<f64, MetricsError> {
    check_same(f, g)?;
    let (rows, cols) = (f.rows(), f.cols());
    if rows < SSIM_WINDOW || cols < SSIM_WINDOW {
        return Err(MetricsError::TooSmall {
            rows,
            cols,
            window: SSIM_WINDOW,
        });
    }
    let total: f64 = (0..f.channels())
        .map(|c| ssim_map_mean(&channel_values(f, c), &channel_values(g, c), rows, cols, constants))
        .sum();
    Ok(total / f.channels() as f64)
}

/// All pixel metrics for an image pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricsReport {
    pub mse: f64,
    pub psnr: f64,
    pub s_index: f64,
    pub ssim_global: f64,
    /// `None` when the image is smaller than the SSIM window.
    pub ssim_windowed: Option<f64>,
    pub constants: SsimConstants,
}

impl MetricsReport {
    pub fn compute(
        reference: &ImageRaster,
        test: &ImageRaster,
        constants: &SsimConstants,
    ) -> Result<Self, MetricsError> {
        let mse = mse(reference, test)?;
        let ssim_windowed = match ssim_windowed(reference, test, constants) {
            Ok(v) => Some(v),
            Err(MetricsError::TooSmall { .. }) => None,
            Err(e) => return Err(e),
        };
        Ok(MetricsReport {
            mse,
            psnr: psnr_from_mse(mse, constants.dynamic_range),
            s_index: s_index(reference, test)?,
            ssim_global: ssim_global(reference, test, constants)?,
            ssim_windowed,
            constants: *constants,
        })
    }
}

/// Continuous SSIM of two non-negative fields.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CssimReport {
    pub moments: Moments,
    pub cssim: f64,
    /// `|1 − cSSIM|`.
    pub dissimilarity: f64,
    pub c1: f64,
    pub c2: f64,
    /// Squared `L²` distance under the same probability measure.
    pub l2_distance_sq: f64,
    pub resolution: [usize; 2],
}

impl CssimReport {
    /// `c_f = 4/(σ_f² + c2) + 1/(μ_f² + c1)`.
    pub fn bound_constant(&self) -> f64 {
        4.0 / (self.moments.sigma_f2 + self.c2) + 1.0 / (self.moments.mu_f * self.moments.mu_f + self.c1)
    }

    /// `c_f·‖f − g‖₂²`, an upper bound for the dissimilarity.
    pub fn dissimilarity_bound(&self) -> f64 {
        self.bound_constant() * self.l2_distance_sq
    }
}

/// Midpoints of a uniform grid on every axis of the domain, row-major.
pub(crate) fn midpoint_grid(lo: &[f64], hi: &[f64], resolution: &[usize]) -> Vec<Vec<f64>> {
    let axes: Vec<Vec<f64>> = (0..lo.len())
        .map(|a| {
            let h = (hi[a] - lo[a]) / resolution[a] as f64;
            (0..resolution[a]).map(|i| lo[a] + (i as f64 + 0.5) * h).collect()
        })
        .collect();
    let mut points = vec![Vec::new()];
    for axis in &axes {
        points = points
            .into_iter()
            .flat_map(|p| {
                axis.iter().map(move |&x| {
                    let mut q = p.clone();
                    q.push(x);
                    q
                })
            })
            .collect();
    }
    points
}

/// cSSIM by the composite midpoint rule with `resolution[i]` cells on axis
/// `i`, under the uniform probability measure on the shared domain.
pub fn cssim<F, G>(f: &F, g: &G, resolution: &[usize], c1: f64, c2: f64) -> Result<CssimReport, MetricsError>
where
    F: ScalarField + ?Sized,
    G: ScalarField + ?Sized,
{
    if f.domain() != g.domain() {
        return Err(MetricsError::DomainMismatch);
    }
    let d = f.domain().dim();
    if resolution.len() != d || resolution.contains(&0) || d > 2 {
        return Err(MetricsError::InvalidResolution);
    }
    let points = midpoint_grid(f.domain().lo(), f.domain().hi(), resolution);
    let fv: Vec<f64> = points.par_iter().map(|x| f.eval(x)).collect();
    let gv: Vec<f64> = points.par_iter().map(|x| g.eval(x)).collect();
    for (i, (&a, &b)) in fv.iter().zip(&gv).enumerate() {
        if a < 0.0 || b < 0.0 {
            return Err(MetricsError::NegativeFunction {
                point: points[i].clone(),
                value: a.min(b),
            });
        }
    }
    let moments = Moments::of(&fv, &gv);
    let cssim = moments.ssim(c1, c2);
    let l2 = fv.iter().zip(&gv).map(|(a, b)| (a - b) * (a - b)).sum::<f64>() / fv.len() as f64;
    let mut res = [1usize; 2];
    res[..d].copy_from_slice(resolution);
    Ok(CssimReport {
        moments,
        cssim,
        dissimilarity: (1.0 - cssim).abs(),
        c1,
        c2,
        l2_distance_sq: l2,
        resolution: res,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operator::{Domain, FnField};

    fn gray(rows: usize, cols: usize, data: &[u8]) -> ImageRaster {
        ImageRaster::gray(rows, cols, data.to_vec()).unwrap()
    }

    #[test]
    fn mse_values() {
        let a = gray(1, 1, &[10]);
        assert_eq!(mse(&a, &a).unwrap(), 0.0);
        assert_eq!(mse(&a, &gray(1, 1, &[13])).unwrap(), 9.0);
        assert_eq!(mse(&gray(2, 1, &[0, 0]), &gray(2, 1, &[3, 4])).unwrap(), 12.5);
        assert!(matches!(
            mse(&a, &gray(1, 2, &[0, 0])),
            Err(MetricsError::DimMismatch(..))
        ));
    }

    #[test]
    fn psnr_values() {
        let a = gray(1, 1, &[0]);
        assert_eq!(psnr(&a, &a, 255.0).unwrap(), f64::INFINITY);
        assert_eq!(psnr(&a, &gray(1, 1, &[255]), 255.0).unwrap(), 0.0);
        assert!((psnr_from_mse(1.0, 255.0) - 48.130803608679106).abs() < 1e-12);
        assert!(matches!(psnr(&a, &a, 0.0), Err(MetricsError::InvalidPeak)));
    }

    #[test]
    fn s_index_values() {
        let a = gray(1, 1, &[0]);
        assert_eq!(s_index(&a, &a).unwrap(), 1.0);
        assert_eq!(s_index(&a, &gray(1, 1, &[255])).unwrap(), 0.0);
        assert!((s_index(&gray(1, 2, &[0, 0]), &gray(1, 2, &[51, 0])).unwrap() - 0.9).abs() < 1e-15);
    }

    #[test]
    fn ssim_global_constant_pair() {
        let k = SsimConstants::default();
        let f = ImageRaster::filled(4, 4, 0);
        let g = ImageRaster::filled(4, 4, 255);
        let expected = k.c1 / (255.0 * 255.0 + k.c1);
        assert!((ssim_global(&f, &g, &k).unwrap() - expected).abs() < 1e-15);
        assert_eq!(ssim_global(&f, &f, &k).unwrap(), 1.0);
    }

    #[test]
    fn ssim_global_checkerboards_against_hand_sums() {
        // F = 255·[(i+j) even], G = 255 − F; brute-force statistics below
        let f = ImageRaster::from_fn(4, 4, |i, j| if (i + j) % 2 == 0 { 255 } else { 0 });
        let g = ImageRaster::from_fn(4, 4, |i, j| if (i + j) % 2 == 0 { 0 } else { 255 });
        let k = SsimConstants::default();
        let (mu, var, cov) = (127.5, 127.5 * 127.5, -127.5 * 127.5);
        let expected = ((2.0 * mu * mu + k.c1) * (2.0 * cov + k.c2)) / ((2.0 * mu * mu + k.c1) * (2.0 * var + k.c2));
        let got = ssim_global(&f, &g, &k).unwrap();
        assert!((got - expected).abs() < 1e-12);
        assert!(got < -0.99);
    }

    #[test]
    fn constants_conventions() {
        let sq = SsimConstants::new(SsimConvention::Squared, 255.0);
        assert!((sq.c1 - 6.5025).abs() < 1e-12 && (sq.c2 - 58.5225).abs() < 1e-12);
        let p = SsimConstants::new(SsimConvention::Unsquared, 255.0);
        assert!((p.c1 - 2.55).abs() < 1e-12 && (p.c2 - 7.65).abs() < 1e-12);
        assert_eq!("paper".parse::<SsimConvention>().unwrap(), SsimConvention::Unsquared);
        assert!("x".parse::<SsimConvention>().is_err());
    }

    #[test]
    fn windowed_ssim_cases() {
        let k = SsimConstants::default();
        let f = ImageRaster::from_fn(16, 13, |i, j| ((i * 31 + j * 17) % 256) as u8);
        assert!((ssim_windowed(&f, &f, &k).unwrap() - 1.0).abs() < 1e-12);
        let small = ImageRaster::filled(10, 20, 0);
        assert!(matches!(
            ssim_windowed(&small, &small, &k),
            Err(MetricsError::TooSmall { .. })
        ));
        let w = gaussian_window();
        assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn windowed_ssim_matches_direct_window_sum() {
        let f = ImageRaster::from_fn(12, 12, |i, j| ((i * i * 7 + j * 13) % 256) as u8);
        let g = ImageRaster::from_fn(12, 12, |i, j| ((i * 5 + j * j * 3) % 256) as u8);
        let k = SsimConstants::default();
        // direct 2-D weighted sums over each of the four valid windows
        let mut total = 0.0;
        for oi in 0..2 {
            for oj in 0..2 {
                let (mut mf, mut mg, mut eff, mut egg, mut efg, mut ws) = (0.0, 0.0, 0.0, 0.0, 0.0, 0.0);
                for a in 0..11 {
                    for b in 0..11 {
                        let (x, y) = (a as f64 - 5.0, b as f64 - 5.0);
                        let w = (-(x * x + y * y) / 4.5).exp();
                        let (p, q) = (f64::from(f.at(oi + a, oj + b)), f64::from(g.at(oi + a, oj + b)));
                        ws += w;
                        mf += w * p;
                        mg += w * q;
                        eff += w * p * p;
                        egg += w * q * q;
                        efg += w * p * q;
                    }
                }
                let (mf, mg) = (mf / ws, mg / ws);
                let (sf, sg, sfg) = (eff / ws - mf * mf, egg / ws - mg * mg, efg / ws - mf * mg);
                total +=
                    ((2.0 * mf * mg + k.c1) * (2.0 * sfg + k.c2)) / ((mf * mf + mg * mg + k.c1) * (sf + sg + k.c2));
            }
        }
        let got = ssim_windowed(&f, &g, &k).unwrap();
        assert!((got - total / 4.0).abs() < 1e-9, "{got} vs {}", total / 4.0);
    }

    #[test]
    fn report_handles_small_images() {
        let a = ImageRaster::filled(3, 3, 9);
        let r = MetricsReport::compute(&a, &a, &SsimConstants::default()).unwrap();
        assert_eq!(r.psnr, f64::INFINITY);
        assert_eq!(r.s_index, 1.0);
        assert_eq!(r.ssim_windowed, None);
    }

    #[test]
    fn cssim_constant_fields() {
        let d = Domain::unit(2);
        let (a, b) = (3.0, 5.0);
        let f = FnField::new(d.clone(), move |_| a);
        let g = FnField::new(d, move |_| b);
        let (c1, c2) = (0.1, 0.2);
        let r = cssim(&f, &g, &[8, 8], c1, c2).unwrap();
        let expected = (2.0 * a * b + c1) / (a * a + b * b + c1);
        assert!((r.cssim - expected).abs() < 1e-14);
        let same = cssim(&f, &f, &[8, 8], c1, c2).unwrap();
        assert_eq!(same.cssim, 1.0);
        assert_eq!(same.dissimilarity, 0.0);
    }

    #[test]
    fn cssim_errors() {
        let f = FnField::new(Domain::unit(2), |x| x[0] - 0.5);
        let g = FnField::new(Domain::unit(2), |_| 1.0);
        assert!(matches!(
            cssim(&f, &g, &[4, 4], 1.0, 1.0),
            Err(MetricsError::NegativeFunction { .. })
        ));
        let h = FnField::new(Domain::unit(1), |_| 1.0);
        assert!(matches!(
            cssim(&g, &h, &[4, 4], 1.0, 1.0),
            Err(MetricsError::DomainMismatch)
        ));
        assert!(matches!(
            cssim(&g, &g, &[4], 1.0, 1.0),
            Err(MetricsError::InvalidResolution)
        ));
    }
}
