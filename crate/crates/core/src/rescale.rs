//! Image resizing: the piecewise-constant image model, nearest-neighbor
//! downscaling, NN-operator upscaling and the bilinear/bicubic baselines.
//!
//! A gray `N×M` raster is modelled as the step function on `[0,N]×[0,M]`
//! that equals `F[i][j]` on the unit cell `[i, i+1) × [j, j+1)` (the last
//! row and column of cells are closed). Output pixel `(u, v)` of an
//! upscaled image sits at the pixel center `((u+½)/r, (v+½)/r)` of that
//! domain.

use rayon::prelude::*;
use thiserror::Error;

use crate::imageio::{merge_channels, split_channels, ImageRaster, PnmError};
use crate::kernels::SigmoidalKernel;
use crate::operator::{evaluate_tensor_grid, Domain, OperatorError, SampleSet, ScalarField};

#[derive(Debug, Error)]
pub enum RescaleError {
    #[error("expected a gray raster, got {0} channels")]
    NotGrayscale(usize),
    #[error("{rows}x{cols} is not divisible by factor {factor}")]
    IndivisibleDims { rows: usize, cols: usize, factor: usize },
    #[error("downscale factor must be at least 1")]
    InvalidFactor,
    #[error("scale factor {0} must be finite and positive with a non-empty output")]
    InvalidScale(f64),
    #[error("operator parameter n must be at least 1")]
    InvalidN,
    #[error(transparent)]
    Operator(#[from] OperatorError),
    #[error(transparent)]
    Image(#[from] PnmError),
}

/// Continuous model `f̃` of a gray raster.
#[derive(Debug, Clone)]
pub struct PiecewiseConstantModel {
    raster: ImageRaster,
    domain: Domain,
}

impl PiecewiseConstantModel {
    pub fn raster(&self) -> &ImageRaster {
        &self.raster
    }

    #[inline]
    fn cell(coord: f64, len: usize) -> usize {
        if coord <= 0.0 {
            0
        } else {
            (coord.floor() as usize).min(len - 1)
        }
    }

    /// Value of the cell containing `x`; points past the far edges map to
    /// the last cell.
    #[inline]
    pub fn cell_value(&self, x: &[f64]) -> u8 {
        let i = Self::cell(x[0], self.raster.rows());
        let j = Self::cell(x[1], self.raster.cols());
        self.raster.at(i, j)
    }
}

impl ScalarField for PiecewiseConstantModel {
    fn domain(&self) -> &Domain {
        &self.domain
    }

    fn eval(&self, x: &[f64]) -> f64 {
        f64::from(self.cell_value(x))
    }
}

pub fn image_model(raster: &ImageRaster) -> Result<PiecewiseConstantModel, RescaleError> {
    if raster.channels() != 1 {
        return Err(RescaleError::NotGrayscale(raster.channels()));
    }
    let domain = Domain::rectangle(0.0, raster.rows() as f64, 0.0, raster.cols() as f64)?;
    Ok(PiecewiseConstantModel {
        raster: raster.clone(),
        domain,
    })
}

/// Which pixel of each `factor×factor` block survives downscaling.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum BlockRepresentative {
    #[default]
    TopLeft,
    /// Offset `factor/2` on both axes.
    Center,
}

impl std::str::FromStr for BlockRepresentative {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "top-left" => Ok(BlockRepresentative::TopLeft),
            "center" => Ok(BlockRepresentative::Center),
            other => Err(format!("unknown block representative `{other}` (top-left or center)")),
        }
    }
}

/// Nearest-neighbor downscaling by an integer factor; any channel count.
pub fn downscale_nearest(
    raster: &ImageRaster,
    factor: usize,
    representative: BlockRepresentative,
) -> Result<ImageRaster, RescaleError> {
    if factor == 0 {
        return Err(RescaleError::InvalidFactor);
    }
    let (rows, cols) = (raster.rows(), raster.cols());
    if rows % factor != 0 || cols % factor != 0 {
        return Err(RescaleError::IndivisibleDims { rows, cols, factor });
    }
    let offset = match representative {
        BlockRepresentative::TopLeft => 0,
        BlockRepresentative::Center => factor / 2,
    };
    let (out_rows, out_cols, ch) = (rows / factor, cols / factor, raster.channels());
    let mut data = Vec::with_capacity(out_rows * out_cols * ch);
    for i in 0..out_rows {
        for j in 0..out_cols {
            for c in 0..ch {
                data.push(raster.get(factor * i + offset, factor * j + offset, c));
            }
        }
    }
    Ok(ImageRaster::new(out_rows, out_cols, ch, data)?)
}

/// `round(len·r)` with validation.
pub fn scaled_len(len: usize, r: f64) -> Result<usize, RescaleError> {
    if !(r.is_finite() && r > 0.0) {
        return Err(RescaleError::InvalidScale(r));
    }
    let out = (len as f64 * r).round();
    if out < 1.0 {
        return Err(RescaleError::InvalidScale(r));
    }
    Ok(out as usize)
}

/// Round half away from zero, then clamp to the 8-bit range.
#[inline]
pub fn quantize(v: f64) -> u8 {
    v.round().clamp(0.0, 255.0) as u8
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RescaleConfig {
    pub n: usize,
    pub r: f64,
    pub kernel: SigmoidalKernel,
}

impl RescaleConfig {
    pub fn new(n: usize, r: f64, kernel: SigmoidalKernel) -> Self {
        RescaleConfig { n, r, kernel }
    }
}

/// Node lattice `f̃(k/n)` for `k ∈ {0..nN} × {0..nM}`, held as bytes.
pub fn sample_matrix(model: &PiecewiseConstantModel, n: usize) -> Result<SampleSet<u8>, RescaleError> {
    if n == 0 {
        return Err(RescaleError::InvalidN);
    }
    let nf = n as f64;
    let mut x = [0.0; 2];
    Ok(SampleSet::from_nodes(model.domain().clone(), n, |k| {
        x[0] = k[0] as f64 / nf;
        x[1] = k[1] as f64 / nf;
        model.cell_value(&x)
    })?)
}

fn pixel_centers(len: usize, r: f64) -> Result<Vec<f64>, RescaleError> {
    Ok((0..scaled_len(len, r)?).map(|u| (u as f64 + 0.5) / r).collect())
}

/// NN-operator resize of a gray raster.
pub fn upscale_nn(raster: &ImageRaster, config: &RescaleConfig) -> Result<ImageRaster, RescaleError> {
    let model = image_model(raster)?;
    let rows = pixel_centers(raster.rows(), config.r)?;
    let cols = pixel_centers(raster.cols(), config.r)?;
    let samples = sample_matrix(&model, config.n)?;
    let values = evaluate_tensor_grid(&samples, &config.kernel, &rows, &cols)?;
    let data = values.into_iter().map(quantize).collect();
    Ok(ImageRaster::gray(rows.len(), cols.len(), data)?)
}

/// Taps and weights of a 1-D resampling filter for every output index.
struct Taps {
    index: Vec<usize>,
    weight: Vec<f64>,
    width: usize,
}

fn build_taps(src_len: usize, out_len: usize, r: f64, width: usize, kernel: impl Fn(f64) -> f64) -> Taps {
    let first_offset = (width as isize - 1) / 2;
    let mut index = Vec::with_capacity(out_len * width);
    let mut weight = Vec::with_capacity(out_len * width);
    for u in 0..out_len {
        let s = (u as f64 + 0.5) / r - 0.5;
        let base = s.floor();
        let t = s - base;
        for tap in 0..width {
            let offset = tap as isize - first_offset;
            let src = (base as isize + offset).clamp(0, src_len as isize - 1) as usize;
            index.push(src);
            weight.push(kernel(t - offset as f64));
        }
    }
    Taps { index, weight, width }
}

/// Separable resampling: horizontal pass into reals, vertical pass, quantize.
fn separable_resize(
    raster: &ImageRaster,
    row_taps: &Taps,
    col_taps: &Taps,
    out_rows: usize,
    out_cols: usize,
) -> ImageRaster {
    let src_cols = raster.cols();
    let mut horizontal = vec![0.0; raster.rows() * out_cols];
    horizontal.par_chunks_mut(out_cols).enumerate().for_each(|(i, row)| {
        let src = &raster.data()[i * src_cols..(i + 1) * src_cols];
        for (v, out) in row.iter_mut().enumerate() {
            let taps = v * col_taps.width..(v + 1) * col_taps.width;
            *out = col_taps.index[taps.clone()]
                .iter()
                .zip(&col_taps.weight[taps])
                .map(|(&j, &w)| w * f64::from(src[j]))
                .sum();
        }
    });
    let mut data = vec![0u8; out_rows * out_cols];
    data.par_chunks_mut(out_cols).enumerate().for_each(|(u, row)| {
        let taps = u * row_taps.width..(u + 1) * row_taps.width;
        for (v, out) in row.iter_mut().enumerate() {
            let acc: f64 = row_taps.index[taps.clone()]
                .iter()
                .zip(&row_taps.weight[taps.clone()])
                .map(|(&i, &w)| w * horizontal[i * out_cols + v])
                .sum();
            *out = quantize(acc);
        }
    });
    ImageRaster::gray(out_rows, out_cols, data).expect("dims match")
}

fn require_gray(raster: &ImageRaster) -> Result<(), RescaleError> {
    if raster.channels() != 1 {
        return Err(RescaleError::NotGrayscale(raster.channels()));
    }
    Ok(())
}

fn triangle(x: f64) -> f64 {
    (1.0 - x.abs()).max(0.0)
}

/// Bilinear resize with pixel-center alignment and edge clamping.
pub fn upscale_bilinear(raster: &ImageRaster, r: f64) -> Result<ImageRaster, RescaleError> {
    require_gray(raster)?;
    let (out_rows, out_cols) = (scaled_len(raster.rows(), r)?, scaled_len(raster.cols(), r)?);
    let row_taps = build_taps(raster.rows(), out_rows, r, 2, triangle);
    let col_taps = build_taps(raster.cols(), out_cols, r, 2, triangle);
    Ok(separable_resize(raster, &row_taps, &col_taps, out_rows, out_cols))
}

/// Keys cubic convolution kernel with `a = −0.5`.
pub fn keys_cubic(x: f64) -> f64 {
    const A: f64 = -0.5;
    let t = x.abs();
    if t <= 1.0 {
        ((A + 2.0) * t - (A + 3.0)) * t * t + 1.0
    } else if t < 2.0 {
        ((A * t - 5.0 * A) * t + 8.0 * A) * t - 4.0 * A
    } else {
        0.0
    }
}

/// Bicubic (Keys, `a = −0.5`, 4×4 taps) resize; same alignment and edge
/// handling as [`upscale_bilinear`].
pub fn upscale_bicubic(raster: &ImageRaster, r: f64) -> Result<ImageRaster, RescaleError> {
    require_gray(raster)?;
    let (out_rows, out_cols) = (scaled_len(raster.rows(), r)?, scaled_len(raster.cols(), r)?);
    let row_taps = build_taps(raster.rows(), out_rows, r, 4, keys_cubic);
    let col_taps = build_taps(raster.cols(), out_cols, r, 4, keys_cubic);
    Ok(separable_resize(raster, &row_taps, &col_taps, out_rows, out_cols))
}

/// Applies a gray-only operation to every channel and re-interleaves.
pub fn per_channel<F>(raster: &ImageRaster, op: F) -> Result<ImageRaster, RescaleError>
where
    F: Fn(&ImageRaster) -> Result<ImageRaster, RescaleError>,
{
    if raster.channels() == 1 {
        return op(raster);
    }
    let [r, g, b] = split_channels(raster)?;
    Ok(merge_channels(&[op(&r)?, op(&g)?, op(&b)?])?)
}
