//! Neural-network sampling operators for image reconstruction and resizing,
//! with the quality metrics and convergence checks used to evaluate them.
//!
//! ```
//! use nnscale::{upscale_nn, ImageRaster, RescaleConfig, SigmoidalKernel};
//!
//! let img = ImageRaster::gray(2, 2, vec![10, 20, 30, 40]).unwrap();
//! let out = upscale_nn(&img, &RescaleConfig::new(10, 2.0, SigmoidalKernel::ramp())).unwrap();
//! assert_eq!((out.rows(), out.cols()), (4, 4));
//! ```

pub mod analysis;
pub mod imageio;
pub mod kernels;
pub mod metrics;
pub mod operator;
pub mod pipeline;
pub mod rescale;

pub use analysis::{
    convergence_study, dissimilarity_study, envelopes, local_modulus, lp_error, lp_norm, rate_fit, shift_modulus,
    tau_modulus, AnalysisError, Envelopes, GridField, RateFit, RateStudy,
};
pub use imageio::{read_pnm, read_pnm_file, write_pnm, write_pnm_file, ImageRaster, PnmError, PnmFormat};
pub use kernels::{KernelError, KernelFamily, SigmoidalKernel};
pub use metrics::{
    cssim, mse, psnr, s_index, ssim_global, ssim_windowed, CssimReport, MetricsError, MetricsReport, SsimConstants,
    SsimConvention,
};
pub use operator::{
    evaluate, evaluate_grid, evaluate_tensor_grid, sample, Domain, FnField, NnApproximation, OperatorError, SampleSet,
    ScalarField,
};
pub use pipeline::{run_pipeline, study_dissimilarity, Method, PipelineConfig, PipelineError, PipelineRow};
pub use rescale::{
    downscale_nearest, image_model, upscale_bicubic, upscale_bilinear, upscale_nn, BlockRepresentative, RescaleConfig,
    RescaleError,
};

/// Any error raised by the library.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error(transparent)]
    Kernel(#[from] KernelError),
    #[error(transparent)]
    Operator(#[from] OperatorError),
    #[error(transparent)]
    Image(#[from] PnmError),
    #[error(transparent)]
    Rescale(#[from] RescaleError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error(transparent)]
    Analysis(#[from] AnalysisError),
    #[error(transparent)]
    Pipeline(#[from] PipelineError),
}
