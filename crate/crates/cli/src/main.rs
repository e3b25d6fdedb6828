use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use nnscale::analysis::{convergence_study, format_sig9, RateStudy};
use nnscale::kernels::{KernelFamily, SigmoidalKernel, DEFAULT_EPSILON};
use nnscale::metrics::{MetricsReport, SsimConstants, SsimConvention, DYNAMIC_RANGE};
use nnscale::pipeline::{run_method, study_dissimilarity, Method, PipelineConfig, PipelineError, PIPELINE_HEADER};
use nnscale::rescale::{downscale_nearest, image_model, BlockRepresentative};
use nnscale::{read_pnm_file, write_pnm_file, ImageRaster, PnmError};

/// Neural-network operator image rescaling, metrics and convergence studies.
#[derive(Parser, Debug)]
#[command(name = "nnscale", version)]
struct Cli {
    /// Worker threads (default: NNSCALE_THREADS, then available parallelism).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Resize one image.
    Resize(ResizeArgs),
    /// Downscale, upscale with each method, score against the original.
    Pipeline(PipelineArgs),
    /// Compare two images: mse,psnr,s_index,ssim_global,ssim_windowed.
    Metrics(MetricsArgs),
    /// Dissimilarity (1 - windowed SSIM) against n, with the fitted slope.
    Study(StudyArgs),
    /// Dump the density of a kernel family and check its basic properties.
    Kernel(KernelArgs),
}

#[derive(Args, Debug)]
struct OperatorArgs {
    /// Operator parameter n.
    #[arg(long, default_value_t = 10)]
    n: usize,
    /// Negligibility threshold for logistic kernel sums.
    #[arg(long = "kernel-epsilon", default_value_t = DEFAULT_EPSILON)]
    kernel_epsilon: f64,
}

#[derive(Args, Debug)]
struct ResizeArgs {
    /// nn-ramp, nn-logistic, bilinear, bicubic or nearest-down.
    #[arg(long, default_value = "nn-ramp")]
    method: Method,
    #[command(flatten)]
    op: OperatorArgs,
    /// Scale factor for upscaling methods.
    #[arg(long, default_value_t = 2.0)]
    r: f64,
    /// Integer factor for nearest-down.
    #[arg(long, default_value_t = 2)]
    factor: usize,
    /// Surviving pixel of each block for nearest-down: top-left or center.
    #[arg(long, default_value = "top-left")]
    representative: BlockRepresentative,
    input: PathBuf,
    output: PathBuf,
}

#[derive(Args, Debug)]
struct PipelineArgs {
    /// Comma-separated methods.
    #[arg(long, value_delimiter = ',', default_value = "nn-ramp,nn-logistic,bilinear,bicubic")]
    method: Vec<String>,
    /// Operator parameters for the NN methods, comma-separated.
    #[arg(long, value_delimiter = ',', default_value = "10")]
    n: Vec<usize>,
    #[arg(long = "kernel-epsilon", default_value_t = DEFAULT_EPSILON)]
    kernel_epsilon: f64,
    /// Downscale factor.
    #[arg(long, default_value_t = 2)]
    factor: usize,
    #[arg(long, default_value = "top-left")]
    representative: BlockRepresentative,
    /// squared: C = (kL)^2; paper (or unsquared): C = kL.
    #[arg(long = "ssim-constants", default_value = "squared")]
    ssim_constants: SsimConvention,
    /// Write the CSV here instead of standard output.
    #[arg(long)]
    csv: Option<PathBuf>,
    input: PathBuf,
}

#[derive(Args, Debug)]
struct MetricsArgs {
    #[arg(long = "ssim-constants", default_value = "squared")]
    ssim_constants: SsimConvention,
    reference: PathBuf,
    test: PathBuf,
}

#[derive(Args, Debug)]
struct StudyArgs {
    /// nn-ramp or nn-logistic.
    #[arg(long, default_value = "nn-ramp")]
    method: Method,
    /// Comma-separated, increasing, at least three values.
    #[arg(long, value_delimiter = ',', default_value = "5,10,15,20,25,30")]
    n: Vec<usize>,
    #[arg(long = "kernel-epsilon", default_value_t = DEFAULT_EPSILON)]
    kernel_epsilon: f64,
    #[arg(long, default_value_t = 2)]
    factor: usize,
    #[arg(long, default_value = "top-left")]
    representative: BlockRepresentative,
    #[arg(long = "ssim-constants", default_value = "squared")]
    ssim_constants: SsimConvention,
    /// Also emit the L^p error of F_n on the image model (p >= 1, or inf).
    #[arg(long)]
    p: Option<f64>,
    #[arg(long)]
    csv: Option<PathBuf>,
    input: PathBuf,
}

#[derive(Args, Debug)]
struct KernelArgs {
    /// logistic or ramp.
    #[arg(long, default_value = "logistic")]
    family: KernelFamily,
    #[arg(long = "kernel-epsilon", default_value_t = DEFAULT_EPSILON)]
    kernel_epsilon: f64,
    /// Sample spacing of the dump.
    #[arg(long, default_value_t = 0.05)]
    step: f64,
    #[arg(long)]
    csv: Option<PathBuf>,
}

/// Upper bound on quadrature points per axis for the L^p study.
const MAX_QUADRATURE: usize = 2048;

enum CliError {
    Usage(String),
    Io(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Io(_) => 2,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Usage(m) | CliError::Io(m) => m,
        }
    }
}

fn usage(msg: impl std::fmt::Display) -> CliError {
    CliError::Usage(msg.to_string())
}

impl From<PnmError> for CliError {
    fn from(e: PnmError) -> Self {
        match e {
            PnmError::Io(_) => CliError::Io(e.to_string()),
            other => usage(other),
        }
    }
}

impl From<PipelineError> for CliError {
    fn from(e: PipelineError) -> Self {
        match e {
            PipelineError::Rescale(nnscale::RescaleError::Image(PnmError::Io(io))) => CliError::Io(io.to_string()),
            other => usage(other),
        }
    }
}

fn read_image(path: &Path) -> Result<ImageRaster, CliError> {
    read_pnm_file(path).map_err(|e| match e {
        PnmError::Io(io) => CliError::Io(format!("{}: {io}", path.display())),
        other => usage(format!("{}: {other}", path.display())),
    })
}

fn write_text(path: Option<&Path>, text: &str) -> Result<(), CliError> {
    match path {
        Some(p) => fs::write(p, text).map_err(|e| CliError::Io(format!("{}: {e}", p.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn check_epsilon(method: Method, eps: f64) -> Result<(), CliError> {
    method.kernel(eps).map(|_| ()).map_err(usage)
}

fn cmd_resize(a: ResizeArgs) -> Result<(), CliError> {
    if a.op.n == 0 {
        return Err(usage("--n must be at least 1"));
    }
    if a.method != Method::NearestDown && !(a.r.is_finite() && a.r > 0.0) {
        return Err(usage(format!("--r must be a positive scale factor, got {}", a.r)));
    }
    check_epsilon(a.method, a.op.kernel_epsilon)?;
    let img = read_image(&a.input)?;
    let start = Instant::now();
    let out = match a.method {
        Method::NearestDown => downscale_nearest(&img, a.factor, a.representative).map_err(usage)?,
        m => m.upscale(&img, a.r, a.op.n, a.op.kernel_epsilon)?,
    };
    let secs = start.elapsed().as_secs_f64();
    write_pnm_file(&a.output, &out).map_err(|e| match e {
        PnmError::Io(io) => CliError::Io(format!("{}: {io}", a.output.display())),
        other => usage(other),
    })?;
    println!(
        "{}x{} -> {}x{} in {}s",
        img.rows(),
        img.cols(),
        out.rows(),
        out.cols(),
        format_sig9(secs)
    );
    Ok(())
}

fn parse_methods(list: &[String]) -> Result<Vec<Method>, CliError> {
    let methods: Vec<Method> = list
        .iter()
        .filter(|s| !s.trim().is_empty())
        .map(|s| s.parse::<Method>().map_err(usage))
        .collect::<Result<_, _>>()?;
    if methods.is_empty() {
        return Err(usage(PipelineError::EmptyMethods));
    }
    Ok(methods)
}

fn cmd_pipeline(a: PipelineArgs) -> Result<(), CliError> {
    let methods = parse_methods(&a.method)?;
    if a.n.is_empty() || a.n.contains(&0) {
        return Err(usage("--n values must be at least 1"));
    }
    for &m in &methods {
        check_epsilon(m, a.kernel_epsilon)?;
    }
    let img = read_image(&a.input)?;
    let base = PipelineConfig {
        methods: methods.clone(),
        n: a.n[0],
        factor: a.factor,
        epsilon: a.kernel_epsilon,
        representative: a.representative,
        constants: SsimConstants::new(a.ssim_constants, DYNAMIC_RANGE),
    };
    let small = downscale_nearest(&img, a.factor, a.representative).map_err(usage)?;
    let mut csv = format!("{PIPELINE_HEADER}\n");
    let mut succeeded = 0;
    for &m in &methods {
        let ns: &[usize] = if m.is_nn() { &a.n } else { &a.n[..1] };
        for &n in ns {
            match run_method(&img, &small, m, &PipelineConfig { n, ..base.clone() }) {
                Ok(row) => {
                    succeeded += 1;
                    let _ = writeln!(csv, "{}", row.to_csv_line());
                }
                Err(e) => eprintln!("nnscale: {m}: {e}"),
            }
        }
    }
    if succeeded == 0 {
        return Err(usage(PipelineError::AllFailed));
    }
    write_text(a.csv.as_deref(), &csv)
}

fn metrics_line(r: &MetricsReport) -> String {
    format!(
        "{},{},{},{},{}",
        format_sig9(r.mse),
        format_sig9(r.psnr),
        format_sig9(r.s_index),
        format_sig9(r.ssim_global),
        r.ssim_windowed.map(format_sig9).unwrap_or_else(|| "nan".into())
    )
}

fn cmd_metrics(a: MetricsArgs) -> Result<(), CliError> {
    let f = read_image(&a.reference)?;
    let g = read_image(&a.test)?;
    let report = MetricsReport::compute(&f, &g, &SsimConstants::new(a.ssim_constants, DYNAMIC_RANGE)).map_err(usage)?;
    println!("{}", metrics_line(&report));
    Ok(())
}

fn slope_text(s: &RateStudy) -> String {
    format!(
        "slope {} residual {}",
        format_sig9(s.fitted_slope),
        format_sig9(s.fit_residual)
    )
}

fn cmd_study(a: StudyArgs) -> Result<(), CliError> {
    if !a.method.is_nn() {
        return Err(usage(PipelineError::NotNnMethod(a.method)));
    }
    if a.n.len() < 3 {
        return Err(usage(format!(
            "the slope fit needs at least 3 values of n, got {}",
            a.n.len()
        )));
    }
    if a.n[0] == 0 || a.n.windows(2).any(|w| w[1] <= w[0]) {
        return Err(usage("--n values must be positive and strictly increasing"));
    }
    if let Some(p) = a.p {
        if !(p >= 1.0) {
            return Err(usage(format!("--p must be at least 1, got {p}")));
        }
    }
    check_epsilon(a.method, a.kernel_epsilon)?;
    let img = read_image(&a.input)?;
    let config = PipelineConfig {
        methods: vec![a.method],
        n: a.n[0],
        factor: a.factor,
        epsilon: a.kernel_epsilon,
        representative: a.representative,
        constants: SsimConstants::new(a.ssim_constants, DYNAMIC_RANGE),
    };
    let study = study_dissimilarity(&img, a.method, &a.n, &config)?;
    let mut text = study.study.to_csv("dissimilarity");
    eprintln!("nnscale: {} dissimilarity {}", a.method, slope_text(&study.study));
    if let Some(p) = a.p {
        if img.channels() != 1 {
            return Err(usage("the L^p study needs a gray image"));
        }
        let model = image_model(&img).map_err(usage)?;
        let kernel = a.method.kernel(a.kernel_epsilon).map_err(usage)?.expect("nn method");
        // the quadrature must resolve the O(1/n) transition bands at pixel edges
        let per_pixel = 2 * a.n[a.n.len() - 1];
        let axis = |len: usize| (len * per_pixel).min(MAX_QUADRATURE).max(len * 4);
        let resolution = [axis(img.rows()), axis(img.cols())];
        let errors = convergence_study(&model, &kernel, &a.n, p, &resolution).map_err(usage)?;
        eprintln!("nnscale: {} L^{p} error {}", a.method, slope_text(&errors));
        text.push('\n');
        text.push_str(&errors.to_csv("error"));
    }
    write_text(a.csv.as_deref(), &text)
}

fn cmd_kernel(a: KernelArgs) -> Result<(), CliError> {
    if !(a.step.is_finite() && a.step > 0.0) {
        return Err(usage(format!("--step must be positive, got {}", a.step)));
    }
    let kernel = SigmoidalKernel::new(a.family, a.kernel_epsilon).map_err(usage)?;
    let radius = kernel.truncation_radius();
    let reach = radius + 0.5;
    let steps = (2.0 * reach / a.step).floor() as i64;
    let mut csv = String::from("x,phi\n");
    for i in 0..=steps {
        let x = -reach + i as f64 * a.step;
        let _ = writeln!(csv, "{},{}", format_sig9(x), format_sig9(kernel.phi(x)));
    }
    let m0 = kernel.discrete_moment(0.0, 1, 64).map_err(usage)?.value;
    let m0_ok = (m0 - 1.0).abs() <= 1e-6;
    let report = format!(
        "family {}: phi(1) = {}, truncation radius = {}, M0 = {} ({})",
        a.family.name(),
        format_sig9(kernel.phi(1.0)),
        format_sig9(radius),
        format_sig9(m0),
        if m0_ok { "ok" } else { "FAILED" }
    );
    match &a.csv {
        Some(p) => {
            write_text(Some(p), &csv)?;
            println!("{report}");
        }
        None => {
            print!("{csv}");
            eprintln!("{report}");
        }
    }
    if m0_ok {
        Ok(())
    } else {
        Err(usage("M0 check failed"))
    }
}

fn thread_count(flag: Option<usize>) -> Result<Option<usize>, CliError> {
    let n = match flag {
        Some(n) => Some(n),
        None => match std::env::var("NNSCALE_THREADS") {
            Ok(v) if !v.trim().is_empty() => Some(
                v.trim()
                    .parse::<usize>()
                    .map_err(|_| usage(format!("NNSCALE_THREADS={v} is not a count")))?,
            ),
            _ => None,
        },
    };
    if n == Some(0) {
        return Err(usage("thread count must be at least 1"));
    }
    Ok(n)
}

fn run(cli: Cli) -> Result<(), CliError> {
    if let Some(n) = thread_count(cli.threads)? {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| usage(format!("thread pool: {e}")))?;
    }
    match cli.command {
        Command::Resize(a) => cmd_resize(a),
        Command::Pipeline(a) => cmd_pipeline(a),
        Command::Metrics(a) => cmd_metrics(a),
        Command::Study(a) => cmd_study(a),
        Command::Kernel(a) => cmd_kernel(a),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("nnscale: {}", e.message());
            ExitCode::from(e.code())
        }
    }
}
