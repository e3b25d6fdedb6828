//! Downscale, upscale and score: the experiment loop behind the comparison
//! tables and the dissimilarity-decay curves.

use std::fmt::{self, Write as _};
use std::str::FromStr;
use std::time::Instant;

use thiserror::Error;

use crate::analysis::{format_sig9, AnalysisError, RateStudy};
use crate::imageio::ImageRaster;
use crate::kernels::{KernelError, SigmoidalKernel, DEFAULT_EPSILON};
use crate::metrics::{MetricsError, MetricsReport, SsimConstants};
use crate::rescale::{
    downscale_nearest, per_channel, upscale_bicubic, upscale_bilinear, upscale_nn, BlockRepresentative, RescaleConfig,
    RescaleError,
};

/// Header of the pipeline CSV.
pub const PIPELINE_HEADER: &str = "method,n,psnr,s_index,ssim_windowed,ssim_global,mse,seconds";

/// Default study n-list.
pub const DEFAULT_STUDY_N: [usize; 6] = [5, 10, 15, 20, 25, 30];

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("no methods requested")]
    EmptyMethods,
    #[error("method {0} does not upscale")]
    NotAnUpscaler(Method),
    #[error("method {0} has no operator parameter n")]
    NotNnMethod(Method),
    #[error("image is smaller than the SSIM window")]
    NoWindowedSsim,
    #[error("every method failed")]
    AllFailed,
    #[error(transparent)]
    Kernel(#[from] KernelError),
    #[error(transparent)]
    Rescale(#[from] RescaleError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error(transparent)]
    Analysis(#[from] AnalysisError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    NnRamp,
    NnLogistic,
    Bilinear,
    Bicubic,
    NearestDown,
}

impl Method {
    pub const ALL: [Method; 5] = [
        Method::NnRamp,
        Method::NnLogistic,
        Method::Bilinear,
        Method::Bicubic,
        Method::NearestDown,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Method::NnRamp => "nn-ramp",
            Method::NnLogistic => "nn-logistic",
            Method::Bilinear => "bilinear",
            Method::Bicubic => "bicubic",
            Method::NearestDown => "nearest-down",
        }
    }

    pub fn is_nn(self) -> bool {
        matches!(self, Method::NnRamp | Method::NnLogistic)
    }

    /// Kernel of an NN method; `None` for the classical ones.
    pub fn kernel(self, epsilon: f64) -> Result<Option<SigmoidalKernel>, KernelError> {
        match self {
            Method::NnRamp => Ok(Some(SigmoidalKernel::ramp())),
            Method::NnLogistic => SigmoidalKernel::logistic_with_epsilon(epsilon).map(Some),
            _ => Ok(None),
        }
    }

    /// Upscale by `r`, channel by channel.
    pub fn upscale(self, raster: &ImageRaster, r: f64, n: usize, epsilon: f64) -> Result<ImageRaster, PipelineError> {
        match self {
            Method::NnRamp | Method::NnLogistic => {
                let kernel = self.kernel(epsilon)?.expect("nn method");
                let config = RescaleConfig::new(n, r, kernel);
                Ok(per_channel(raster, |plane| upscale_nn(plane, &config))?)
            }
            Method::Bilinear => Ok(per_channel(raster, |plane| upscale_bilinear(plane, r))?),
            Method::Bicubic => Ok(per_channel(raster, |plane| upscale_bicubic(plane, r))?),
            Method::NearestDown => Err(PipelineError::NotAnUpscaler(self)),
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Method::ALL
            .into_iter()
            .find(|m| m.name() == s.trim().to_ascii_lowercase())
            .ok_or_else(|| format!("unknown method `{s}` (nn-ramp, nn-logistic, bilinear, bicubic, nearest-down)"))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub methods: Vec<Method>,
    pub n: usize,
    pub factor: usize,
    pub epsilon: f64,
    pub representative: BlockRepresentative,
    pub constants: SsimConstants,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            methods: vec![Method::NnRamp, Method::NnLogistic, Method::Bilinear, Method::Bicubic],
            n: 10,
            factor: 2,
            epsilon: DEFAULT_EPSILON,
            representative: BlockRepresentative::TopLeft,
            constants: SsimConstants::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineRow {
    pub method: Method,
    /// Operator parameter; `None` for classical methods.
    pub n: Option<usize>,
    pub report: MetricsReport,
    pub seconds: f64,
}

impl PipelineRow {
    pub fn to_csv_line(&self) -> String {
        let r = &self.report;
        format!(
            "{},{},{},{},{},{},{},{}",
            self.method,
            self.n.map(|n| n.to_string()).unwrap_or_default(),
            format_sig9(r.psnr),
            format_sig9(r.s_index),
            r.ssim_windowed.map(format_sig9).unwrap_or_else(|| "nan".into()),
            format_sig9(r.ssim_global),
            format_sig9(r.mse),
            format_sig9(self.seconds),
        )
    }
}

#[derive(Debug, Default)]
pub struct PipelineOutcome {
    pub rows: Vec<PipelineRow>,
    pub failures: Vec<(Method, PipelineError)>,
}

impl PipelineOutcome {
    pub fn row(&self, method: Method) -> Option<&PipelineRow> {
        self.rows.iter().find(|r| r.method == method)
    }

    pub fn to_csv(&self) -> String {
        let mut out = format!("{PIPELINE_HEADER}\n");
        for row in &self.rows {
            let _ = writeln!(out, "{}", row.to_csv_line());
        }
        out
    }
}

/// One method: upscale the downscaled image back and score it against the
/// original. The timing covers the upscale only.
pub fn run_method(
    original: &ImageRaster,
    small: &ImageRaster,
    method: Method,
    config: &PipelineConfig,
) -> Result<PipelineRow, PipelineError> {
    let start = Instant::now();
    let up = method.upscale(small, config.factor as f64, config.n, config.epsilon)?;
    let seconds = start.elapsed().as_secs_f64();
    let report = MetricsReport::compute(original, &up, &config.constants)?;
    Ok(PipelineRow {
        method,
        n: method.is_nn().then_some(config.n),
        report,
        seconds,
    })
}

/// Downscale without interpolation, upscale with every method, score each.
/// A failing method is recorded and the rest continue.
pub fn run_pipeline(original: &ImageRaster, config: &PipelineConfig) -> Result<PipelineOutcome, PipelineError> {
    if config.methods.is_empty() {
        return Err(PipelineError::EmptyMethods);
    }
    let small = downscale_nearest(original, config.factor, config.representative)?;
    let mut outcome = PipelineOutcome::default();
    for &method in &config.methods {
        match run_method(original, &small, method, config) {
            Ok(row) => outcome.rows.push(row),
            Err(e) => outcome.failures.push((method, e)),
        }
    }
    if outcome.rows.is_empty() {
        return Err(PipelineError::AllFailed);
    }
    Ok(outcome)
}

/// Timed pipeline legs and `1 − SSIM` (windowed) per `n` for one NN method.
#[derive(Debug, Clone, PartialEq)]
pub struct DissimilarityStudy {
    pub method: Method,
    pub study: RateStudy,
    pub seconds: Vec<f64>,
}

pub fn study_dissimilarity(
    original: &ImageRaster,
    method: Method,
    n_values: &[usize],
    config: &PipelineConfig,
) -> Result<DissimilarityStudy, PipelineError> {
    if !method.is_nn() {
        return Err(PipelineError::NotNnMethod(method));
    }
    let small = downscale_nearest(original, config.factor, config.representative)?;
    let mut values = Vec::with_capacity(n_values.len());
    let mut seconds = Vec::with_capacity(n_values.len());
    for &n in n_values {
        let leg = PipelineConfig { n, ..config.clone() };
        let row = run_method(original, &small, method, &leg)?;
        let ssim = row.report.ssim_windowed.ok_or(PipelineError::NoWindowedSsim)?;
        values.push((1.0 - ssim).max(0.0));
        seconds.push(row.seconds);
    }
    let study = RateStudy::new(n_values.to_vec(), values)?;
    Ok(DissimilarityStudy { method, study, seconds })
}
