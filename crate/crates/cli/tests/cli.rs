use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use nnscale::{read_pnm_file, write_pnm_file, ImageRaster};
use tempfile::TempDir;

fn nnscale(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_nnscale"))
        .args(args)
        .env_remove("NNSCALE_THREADS")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn write_image(dir: &TempDir, name: &str, img: &ImageRaster) -> PathBuf {
    let path = dir.path().join(name);
    write_pnm_file(&path, img).unwrap();
    path
}

fn gradient(rows: usize, cols: usize) -> ImageRaster {
    ImageRaster::from_fn(rows, cols, |i, j| ((i * 7 + j * 13 + (i * j) % 5) % 256) as u8)
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn resize_doubles_dimensions() {
    let dir = TempDir::new().unwrap();
    let input = write_image(&dir, "in.pgm", &gradient(64, 48));
    let out = dir.path().join("out.pgm");
    let o = nnscale(&[
        "resize",
        "--method",
        "nn-ramp",
        "--n",
        "10",
        "--r",
        "2",
        s(&input),
        s(&out),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let img = read_pnm_file(&out).unwrap();
    assert_eq!((img.rows(), img.cols(), img.channels()), (128, 96, 1));
}

#[test]
fn resize_rejects_zero_scale() {
    let dir = TempDir::new().unwrap();
    let input = write_image(&dir, "in.pgm", &gradient(8, 8));
    let out = dir.path().join("out.pgm");
    let o = nnscale(&["resize", "--r", "0", s(&input), s(&out)]);
    assert_eq!(o.status.code(), Some(1));
    assert!(!out.exists());
}

#[test]
fn bilinear_unit_scale_is_identity() {
    let dir = TempDir::new().unwrap();
    let src = gradient(20, 20);
    let input = write_image(&dir, "in.pgm", &src);
    let out = dir.path().join("out.pgm");
    let o = nnscale(&["resize", "--method", "bilinear", "--r", "1", s(&input), s(&out)]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(read_pnm_file(&out).unwrap(), src);
    let m = nnscale(&["metrics", s(&input), s(&out)]);
    assert_eq!(stdout(&m).trim(), "0,inf,1,1,1");
}

#[test]
fn nearest_down_keeps_colour() {
    let dir = TempDir::new().unwrap();
    let rgb = ImageRaster::new(6, 6, 3, (0..108).map(|v| v as u8).collect()).unwrap();
    let input = write_image(&dir, "in.ppm", &rgb);
    let out = dir.path().join("out.ppm");
    let o = nnscale(&[
        "resize",
        "--method",
        "nearest-down",
        "--factor",
        "3",
        s(&input),
        s(&out),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let img = read_pnm_file(&out).unwrap();
    assert_eq!((img.rows(), img.cols(), img.channels()), (2, 2, 3));
}

#[test]
fn pipeline_on_constant_image_is_perfect() {
    let dir = TempDir::new().unwrap();
    let input = write_image(&dir, "flat.pgm", &ImageRaster::from_fn(32, 32, |_, _| 77));
    let o = nnscale(&["pipeline", "--n", "10", s(&input)]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = stdout(&o);
    let mut lines = text.lines();
    assert_eq!(
        lines.next(),
        Some("method,n,psnr,s_index,ssim_windowed,ssim_global,mse,seconds")
    );
    let rows: Vec<Vec<&str>> = lines.map(|l| l.split(',').collect()).collect();
    assert_eq!(rows.len(), 4);
    for row in &rows {
        assert_eq!(row.len(), 8);
        assert_eq!(row[2], "inf", "{row:?}");
        assert_eq!(row[6], "0");
        assert!(row[7].parse::<f64>().unwrap() >= 0.0);
    }
    let names: Vec<&str> = rows.iter().map(|r| r[0]).collect();
    assert_eq!(names, ["nn-ramp", "nn-logistic", "bilinear", "bicubic"]);
}

#[test]
fn pipeline_reports_bad_method_and_continues() {
    let dir = TempDir::new().unwrap();
    let input = write_image(&dir, "in.pgm", &gradient(32, 32));
    let csv = dir.path().join("out.csv");
    let o = nnscale(&[
        "pipeline",
        "--method",
        "nn-ramp,nearest-down,bicubic",
        "--n",
        "5,20",
        "--csv",
        s(&csv),
        s(&input),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stderr(&o).contains("nearest-down"));
    let text = std::fs::read_to_string(&csv).unwrap();
    let methods: Vec<(&str, &str)> = text
        .lines()
        .skip(1)
        .map(|l| {
            let mut f = l.split(',');
            (f.next().unwrap(), f.next().unwrap())
        })
        .collect();
    assert_eq!(methods, [("nn-ramp", "5"), ("nn-ramp", "20"), ("bicubic", "")]);
}

#[test]
fn pipeline_rejects_empty_method_list() {
    let dir = TempDir::new().unwrap();
    let input = write_image(&dir, "in.pgm", &gradient(16, 16));
    let o = nnscale(&["pipeline", "--method", "", s(&input)]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn metrics_rejects_dimension_mismatch() {
    let dir = TempDir::new().unwrap();
    let a = write_image(&dir, "a.pgm", &gradient(16, 16));
    let b = write_image(&dir, "b.pgm", &gradient(16, 17));
    assert_eq!(nnscale(&["metrics", s(&a), s(&b)]).status.code(), Some(1));
}

#[test]
fn missing_input_is_an_io_error() {
    let dir = TempDir::new().unwrap();
    let missing = dir.path().join("nope.pgm");
    let out = dir.path().join("out.pgm");
    assert_eq!(nnscale(&["resize", s(&missing), s(&out)]).status.code(), Some(2));
    assert_eq!(nnscale(&["metrics", s(&missing), s(&missing)]).status.code(), Some(2));
}

#[test]
fn malformed_input_is_a_usage_error() {
    let dir = TempDir::new().unwrap();
    let bad = dir.path().join("bad.pgm");
    std::fs::write(&bad, b"P7\n2 2\n255\n\0\0\0\0").unwrap();
    let out = dir.path().join("out.pgm");
    assert_eq!(nnscale(&["resize", s(&bad), s(&out)]).status.code(), Some(1));
}

#[test]
fn study_prints_one_row_per_n() {
    let dir = TempDir::new().unwrap();
    let input = write_image(&dir, "in.pgm", &gradient(24, 24));
    let o = nnscale(&["study", s(&input)]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = stdout(&o);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("n,dissimilarity"));
    let ns: Vec<usize> = lines
        .map(|l| {
            let (n, d) = l.split_once(',').unwrap();
            assert!(d.parse::<f64>().unwrap().is_finite());
            n.parse().unwrap()
        })
        .collect();
    assert_eq!(ns, [5, 10, 15, 20, 25, 30]);
    assert!(stderr(&o).contains("slope"));
}

#[test]
fn study_needs_three_values_of_n() {
    let dir = TempDir::new().unwrap();
    let input = write_image(&dir, "in.pgm", &gradient(24, 24));
    assert_eq!(nnscale(&["study", "--n", "8", s(&input)]).status.code(), Some(1));
    assert_eq!(nnscale(&["study", "--n", "8,4,16", s(&input)]).status.code(), Some(1));
    assert_eq!(
        nnscale(&["study", "--method", "bilinear", s(&input)]).status.code(),
        Some(1)
    );
}

#[test]
fn study_of_constant_image_is_exact() {
    let dir = TempDir::new().unwrap();
    let input = write_image(&dir, "flat.pgm", &ImageRaster::from_fn(24, 24, |_, _| 200));
    let o = nnscale(&["study", "--n", "4,8,16", "--p", "2", s(&input)]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = stdout(&o);
    let (dis, err) = text.split_once("\n\n").unwrap();
    for block in [dis, err] {
        for line in block.lines().skip(1) {
            assert_eq!(line.split_once(',').unwrap().1, "0", "{line}");
        }
    }
    assert!(err.starts_with("n,error"));
    assert!(stderr(&o).contains("slope -inf"), "{}", stderr(&o));
}

#[test]
fn kernel_reports_basic_values() {
    let o = nnscale(&["kernel", "--family", "ramp", "--step", "0.5"]);
    assert!(o.status.success());
    let text = stdout(&o);
    assert!(text.starts_with("x,phi\n"));
    assert!(text.lines().any(|l| l == "1,0.25"));
    assert!(text.lines().any(|l| l == "2,0"));
    let report = stderr(&o);
    assert!(
        report.contains("truncation radius = 1.5") && report.contains("M0 = 1 (ok)"),
        "{report}"
    );

    let o = nnscale(&["kernel", "--family", "logistic"]);
    assert!(o.status.success());
    assert!(stderr(&o).contains("phi(1) = 0.190398539"), "{}", stderr(&o));

    assert_eq!(nnscale(&["kernel", "--family", "tanh"]).status.code(), Some(1));
    assert_eq!(nnscale(&["kernel", "--kernel-epsilon", "0.5"]).status.code(), Some(1));
}

#[test]
fn kernel_csv_goes_to_file() {
    let dir = TempDir::new().unwrap();
    let csv = dir.path().join("phi.csv");
    let o = nnscale(&["kernel", "--family", "ramp", "--csv", s(&csv)]);
    assert!(o.status.success());
    assert!(stdout(&o).starts_with("family ramp"));
    let text = std::fs::read_to_string(&csv).unwrap();
    for line in text.lines().skip(1) {
        let (x, phi) = line.split_once(',').unwrap();
        let (x, phi): (f64, f64) = (x.parse().unwrap(), phi.parse().unwrap());
        assert!((0.0..=0.5).contains(&phi) && x.abs() <= 2.0 + 1e-9);
    }
}

#[test]
fn output_does_not_depend_on_thread_count() {
    let dir = TempDir::new().unwrap();
    let input = write_image(&dir, "in.pgm", &gradient(40, 40));
    let mut outputs = Vec::new();
    for threads in ["1", "3"] {
        let out = dir.path().join(format!("out{threads}.pgm"));
        let o = nnscale(&[
            "--threads",
            threads,
            "resize",
            "--method",
            "nn-logistic",
            "--r",
            "1.5",
            s(&input),
            s(&out),
        ]);
        assert!(o.status.success(), "{}", stderr(&o));
        outputs.push(std::fs::read(&out).unwrap());
    }
    assert_eq!(outputs[0], outputs[1]);
}

#[test]
fn thread_environment_is_validated() {
    let dir = TempDir::new().unwrap();
    let input = write_image(&dir, "in.pgm", &gradient(8, 8));
    let o = Command::new(env!("CARGO_BIN_EXE_nnscale"))
        .args(["metrics", s(&input), s(&input)])
        .env("NNSCALE_THREADS", "many")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn help_exits_cleanly() {
    let o = nnscale(&["--help"]);
    assert!(o.status.success());
    assert!(stdout(&o).contains("pipeline"));
}
