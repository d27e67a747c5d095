use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use ndarray::Array2;
use pcae::data::{pixel_value, read_matrix_csv, write_matrix_csv};
use pcae::decoder::decode;
use pcae::{
    binarize, evaluate, load_dataset, load_model, save_model, Binarization, DataFormat, DecoderWeights,
    EncoderConfig, EncodingMode, Encodings, KernelId, LossKernel, ModelFile,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const V: usize = 16;
const N: usize = 40;

fn pcae(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pcae")).args(args).output().expect("binary runs")
}

fn ok(args: &[&str]) -> String {
    let out = pcae(args);
    assert!(
        out.status.success(),
        "pcae {args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn field(stdout: &str, key: &str) -> f64 {
    stdout
        .lines()
        .find_map(|l| l.strip_prefix(key).map(|rest| rest.trim().parse::<f64>().unwrap()))
        .unwrap_or_else(|| panic!("no `{key}` line in {stdout}"))
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

/// Two 4×4 stripe patterns with per-pixel jitter, values in [0,1].
fn write_dataset(dir: &Path) -> PathBuf {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let rows = Array2::from_shape_fn((N, V), |(i, v)| {
        let on = if i % 2 == 0 { v % 4 < 2 } else { v / 4 < 2 };
        let base: f64 = if on { 0.9 } else { 0.1 };
        (base + rng.random_range(-0.1..0.1)).clamp(0.0, 1.0)
    });
    let path = dir.join("data.csv");
    write_matrix_csv(&path, &rows).unwrap();
    path
}

fn trained(dir: &Path, data: &Path, extra: &[&str]) -> PathBuf {
    let model = dir.join("m.pcae");
    let mut args = vec!["train", "--data", s(data), "--out", s(&model), "--hidden", "3", "--kernel", "xent"];
    args.extend_from_slice(&["--epochs", "5", "--seed", "7", "--minibatch-size", "20"]);
    args.extend_from_slice(extra);
    ok(&args);
    model
}

fn zero_model(dir: &Path, hidden: usize) -> PathBuf {
    let path = dir.join("zero.pcae");
    let w = DecoderWeights::zeros(V, hidden, KernelId::CrossEntropy);
    save_model(&ModelFile::new(&w, EncodingMode::BinaryBox, 0, ""), &path).unwrap();
    path
}

#[test]
fn train_writes_model_and_report() {
    let dir = tempfile::tempdir().unwrap();
    let data = write_dataset(dir.path());
    let model = trained(dir.path(), &data, &[]);
    let m = load_model(&model).unwrap();
    assert_eq!((m.visible(), m.hidden()), (V, 3));
    assert_eq!(m.kernel_id, KernelId::CrossEntropy);
    assert_eq!(m.seed, 7);
    let report = std::fs::read_to_string(model.with_extension("report.csv")).unwrap();
    assert_eq!(report.lines().count(), 1 + 5);
}

#[test]
fn missing_hidden_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let data = write_dataset(dir.path());
    let out = pcae(&["train", "--data", s(&data), "--out", s(&dir.path().join("m.pcae"))]);
    assert_eq!(out.status.code(), Some(2));
    assert!(!dir.path().join("m.pcae").exists());
}

#[test]
fn unknown_subcommand_is_a_usage_error() {
    assert_eq!(pcae(&["frobnicate"]).status.code(), Some(2));
}

#[test]
fn missing_model_is_a_runtime_error() {
    let dir = tempfile::tempdir().unwrap();
    let data = write_dataset(dir.path());
    let out = pcae(&["eval", "--model", s(&dir.path().join("nope.pcae")), "--data", s(&data)]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn zero_model_scores_ln2_per_bit() {
    let dir = tempfile::tempdir().unwrap();
    let data = write_dataset(dir.path());
    let model = zero_model(dir.path(), 2);
    let out = ok(&["eval", "--model", s(&model), "--data", s(&data)]);
    let expected = V as f64 * std::f64::consts::LN_2;
    assert!((field(&out, "loss") - expected).abs() < 1e-12);
    assert_eq!(field(&out, "examples"), N as f64);
}

#[test]
fn eval_matches_library() {
    let dir = tempfile::tempdir().unwrap();
    let data = write_dataset(dir.path());
    let model = trained(dir.path(), &data, &[]);
    let per_example = dir.path().join("per.csv");
    let out = ok(&["eval", "--model", s(&model), "--data", s(&data), "--per-example", s(&per_example)]);

    let file = load_model(&model).unwrap();
    let batch = binarize(&load_dataset(&data, DataFormat::Csv).unwrap(), Binarization::Stochastic, 0).unwrap();
    let w = file.decoder_weights().unwrap();
    let cfg = EncoderConfig::default();
    let ev = evaluate(&batch, &w, &LossKernel::cross_entropy(), file.encoding_mode, &cfg).unwrap();
    assert_eq!(field(&out, "loss"), ev.loss);
    assert_eq!(field(&out, "slack_bound"), ev.slack_bound);
    assert_eq!(std::fs::read_to_string(&per_example).unwrap().lines().count(), 1 + N);

    let out = ok(&["eval", "--model", s(&model), "--data", s(&data), "--kernel", "hamming"]);
    let w = DecoderWeights::new(file.weights.clone(), KernelId::Hamming).unwrap();
    let ev = evaluate(&batch, &w, &LossKernel::hamming(), file.encoding_mode, &cfg).unwrap();
    assert_eq!(field(&out, "loss"), ev.loss);
}

#[test]
fn flags_reach_the_stored_config() {
    let dir = tempfile::tempdir().unwrap();
    let data = write_dataset(dir.path());
    let cfg = dir.path().join("c.toml");
    std::fs::write(&cfg, "hidden = 5\nl1_epsilon = 0.5\nnoise = \"masking\"\nnoise_rate = 0.1\n").unwrap();
    let model = trained(dir.path(), &data, &["--config", s(&cfg), "--l1-epsilon", "0.25"]);
    let file = load_model(&model).unwrap();
    assert_eq!(file.hidden(), 3);
    assert!(file.config.contains("l1_epsilon = 0.25"), "{}", file.config);
    assert!(file.config.contains("noise = \"masking\""), "{}", file.config);
}

#[test]
fn basis_viz_tiles_are_decoded_basis_vectors() {
    let dir = tempfile::tempdir().unwrap();
    let data = write_dataset(dir.path());
    let sheet = dir.path().join("basis.pgm");

    let zero = zero_model(dir.path(), 2);
    ok(&["basis-viz", "--model", s(&zero), "--out", s(&sheet)]);
    let bytes = std::fs::read(&sheet).unwrap();
    // Two 4×4 tiles in one row with a 1-pixel border: 11×6.
    let header = b"P5\n11 6\n255\n";
    assert!(bytes.starts_with(header));
    let pixels = &bytes[header.len()..];
    let tile = |t: usize, y: usize, x: usize| pixels[(1 + y) * 11 + 1 + t * 5 + x];
    for t in 0..2 {
        for y in 0..4 {
            for x in 0..4 {
                assert_eq!(tile(t, y, x), 128);
            }
        }
    }

    let model = trained(dir.path(), &data, &[]);
    ok(&["basis-viz", "--model", s(&model), "--out", s(&sheet)]);
    let bytes = std::fs::read(&sheet).unwrap();
    let header = b"P5\n16 6\n255\n";
    assert!(bytes.starts_with(header));
    let pixels = &bytes[header.len()..];
    let w = load_model(&model).unwrap().decoder_weights().unwrap();
    let mut basis = Array2::from_elem((3, 3), -1.0);
    basis.diag_mut().fill(1.0);
    let tiles = decode(&Encodings::new(basis, EncodingMode::BinaryBox).unwrap(), &w, &LossKernel::cross_entropy()).unwrap();
    for t in 0..3 {
        for v in 0..V {
            let (y, x) = (v / 4, v % 4);
            assert_eq!(pixels[(1 + y) * 16 + 1 + t * 5 + x], pixel_value(tiles[[v, t]]));
        }
    }
}

#[test]
fn encode_then_decode_reproduces_eval_loss() {
    let dir = tempfile::tempdir().unwrap();
    let data = write_dataset(dir.path());
    let model = trained(dir.path(), &data, &[]);
    let enc = dir.path().join("e.csv");
    let rec = dir.path().join("r.csv");
    ok(&["encode", "--model", s(&model), "--data", s(&data), "--out", s(&enc)]);
    ok(&["decode", "--model", s(&model), "--encodings", s(&enc), "--out", s(&rec)]);
    let e = read_matrix_csv(&enc).unwrap();
    assert_eq!(e.dim(), (N, 3));
    assert!(e.iter().all(|v| v.abs() <= 1.0));

    let recon = read_matrix_csv(&rec).unwrap();
    assert_eq!(recon.dim(), (N, V));
    let batch = binarize(&load_dataset(&data, DataFormat::Csv).unwrap(), Binarization::Stochastic, 0).unwrap();
    let kernel = LossKernel::cross_entropy();
    let mut total = 0.0;
    for i in 0..N {
        for v in 0..V {
            total += kernel.bit_loss(batch.x()[[v, i]], kernel.clamp_for_loss(recon[[i, v]]));
        }
    }
    let out = ok(&["eval", "--model", s(&model), "--data", s(&data)]);
    let loss = field(&out, "loss");
    assert!((total / N as f64 - loss).abs() < 1e-9, "{} vs {loss}", total / N as f64);

    let reconstructed = dir.path().join("r2.csv");
    ok(&["reconstruct", "--model", s(&model), "--data", s(&data), "--out", s(&reconstructed)]);
    assert_eq!(read_matrix_csv(&reconstructed).unwrap(), recon);
}

#[test]
fn zero_encodings_decode_to_zero() {
    let dir = tempfile::tempdir().unwrap();
    let data = write_dataset(dir.path());
    let model = trained(dir.path(), &data, &["--encoding-mode", "real"]);
    let enc = dir.path().join("zeros.csv");
    write_matrix_csv(&enc, &Array2::zeros((4, 3))).unwrap();
    let rec = dir.path().join("r.csv");
    ok(&["decode", "--model", s(&model), "--encodings", s(&enc), "--out", s(&rec)]);
    let recon = read_matrix_csv(&rec).unwrap();
    assert_eq!(recon.dim(), (4, V));
    assert!(recon.iter().all(|&v| v == 0.0));
}

#[test]
fn reconstruct_writes_image_sheet() {
    let dir = tempfile::tempdir().unwrap();
    let data = write_dataset(dir.path());
    let model = trained(dir.path(), &data, &[]);
    let sheet = dir.path().join("r.pgm");
    let csv = dir.path().join("r.csv");
    let out = pcae(&[
        "reconstruct", "--model", s(&model), "--data", s(&data), "--limit", "12", "--out", s(&csv),
        "--images", s(&sheet), "--tiles-per-row", "6",
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    // 6 columns × 2 rows of 4×4 tiles with 1-pixel borders.
    assert!(std::fs::read(&sheet).unwrap().starts_with(b"P5\n31 11\n255\n"));
    assert_eq!(read_matrix_csv(&csv).unwrap().nrows(), 12);
}

#[test]
fn repeated_training_is_identical() {
    let dir = tempfile::tempdir().unwrap();
    let data = write_dataset(dir.path());
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    std::fs::create_dir_all(&a).unwrap();
    std::fs::create_dir_all(&b).unwrap();
    let noise = ["--noise", "masking", "--noise-rate", "0.2"];
    let ma = trained(&a, &data, &noise);
    let mb = trained(&b, &data, &["--threads", "1", "--noise", "masking", "--noise-rate", "0.2"]);
    assert_eq!(std::fs::read(&ma).unwrap(), std::fs::read(&mb).unwrap());
    let untimed = |p: &Path| {
        std::fs::read_to_string(p.with_extension("report.csv"))
            .unwrap()
            .lines()
            .map(|l| l.rsplit_once(',').unwrap().0.to_string())
            .collect::<Vec<_>>()
    };
    assert_eq!(untimed(&ma), untimed(&mb));
}
