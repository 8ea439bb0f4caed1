//! Command-line entry point: train / eval / encode / kernel / svm / gradcheck.
//!
//! Exit codes: 0 success, 1 config error, 2 data/format error, 3 numeric
//! failure, 4 gradcheck failure.

use std::io::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use qccnet::checkpoint::{read_states, write_states, Checkpoint};
use qccnet::config::{Mode, RunConfig};
use qccnet::dataio::{load_dataset, load_idx_labels, Dataset};
use qccnet::error::{Error, Result};
use qccnet::qkernel::{
    cross_gram, gram, ovo_predict, ovo_train, read_gram_csv, write_gram_csv, SVM_C_DEFAULT,
    SVM_TOL_DEFAULT,
};
use qccnet::train::{
    encode_states, evaluate_classification, gradcheck_case_with_corruption, model_from_checkpoint,
    model_to_checkpoint, train_with_data, Model,
};

#[derive(Parser)]
#[command(name = "qccnet", version, about = "Block-unitary complex networks and fidelity-kernel SVMs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct ConfigArgs {
    /// Config file of `key = value` lines (`#` comments)
    #[arg(long)]
    config: Option<PathBuf>,
    /// RNG seed (overrides config file and key=value overrides)
    #[arg(long)]
    seed: Option<u64>,
    /// Per-key overrides, e.g. `m=64 interaction=true` (these win over --config)
    #[arg(value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

impl ConfigArgs {
    fn resolve(&self) -> Result<RunConfig> {
        let mut cfg = RunConfig::default();
        if let Some(path) = &self.config {
            cfg.apply_file(path)?;
        }
        for kv in &self.overrides {
            let (key, value) = kv
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("override {kv:?} is not KEY=VALUE")))?;
            cfg.set(key.trim(), value.trim())?;
        }
        if let Some(seed) = self.seed {
            cfg.seed = seed;
        }
        Ok(cfg)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Train a model and write checkpoint.qccn + metrics.jsonl to --out
    Train {
        #[command(flatten)]
        config: ConfigArgs,
        /// Output directory
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
    /// Evaluate a checkpoint on the test split named in its config
    Eval {
        /// Trained checkpoint
        #[arg(long)]
        checkpoint: PathBuf,
        /// Dataset-path overrides, e.g. `test_images=...` `test_labels=...`
        #[arg(value_name = "KEY=VALUE")]
        overrides: Vec<String>,
    },
    /// Push a dataset through an encode-mode checkpoint and write a states file
    Encode {
        #[arg(long)]
        checkpoint: PathBuf,
        /// Which config split to encode
        #[arg(long, default_value = "train", value_parser = ["train", "test"])]
        split: String,
        /// Output states file
        #[arg(long)]
        out: PathBuf,
        #[arg(value_name = "KEY=VALUE")]
        overrides: Vec<String>,
    },
    /// Fidelity Gram matrix from a states file (CSV)
    Kernel {
        /// Training states file
        #[arg(long)]
        states: PathBuf,
        /// Optional second states file; output becomes the rectangular
        /// test-vs-train kernel instead of the square training Gram
        #[arg(long)]
        cross: Option<PathBuf>,
        /// Output CSV
        #[arg(long)]
        out: PathBuf,
    },
    /// Train a one-vs-one SVM on a precomputed Gram matrix and report accuracy
    Svm {
        /// Square training Gram CSV
        #[arg(long)]
        gram_train: PathBuf,
        /// IDX label file aligned with the training Gram
        #[arg(long)]
        labels: PathBuf,
        /// Rectangular test-vs-train kernel CSV
        #[arg(long)]
        gram_test: PathBuf,
        /// IDX label file aligned with the test kernel rows
        #[arg(long)]
        test_labels: PathBuf,
        /// Soft-margin penalty
        #[arg(long, default_value_t = SVM_C_DEFAULT)]
        cost: f64,
        /// Duality-gap stopping tolerance
        #[arg(long, default_value_t = SVM_TOL_DEFAULT)]
        tol: f64,
    },
    /// Compare analytic gradients against finite differences (exit 4 on failure)
    Gradcheck {
        #[arg(long, default_value_t = 4)]
        m: usize,
        #[arg(long, default_value_t = 2)]
        d: usize,
        #[arg(long, default_value_t = 2)]
        l: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Negative-control hook: add this value to one analytic gradient
        /// entry; any nonzero value must make the check fail
        #[arg(long, default_value_t = 0.0, hide = true)]
        corrupt: f64,
    },
}

const GRADCHECK_TOL: f64 = 1e-4;

fn load_split(cfg: &RunConfig, split: &str) -> Result<Dataset> {
    let (images, labels, what) = match split {
        "train" => (&cfg.train_images, &cfg.train_labels, "train_images/train_labels"),
        _ => (&cfg.test_images, &cfg.test_labels, "test_images/test_labels"),
    };
    match (images, labels) {
        (Some(i), Some(l)) => load_dataset(i, l),
        _ => Err(Error::Config(format!("config must set {what}"))),
    }
}

fn load_model(path: &Path) -> Result<Model> {
    model_from_checkpoint(&Checkpoint::load(path)?)
}

/// Apply dataset-path overrides on top of a checkpoint's stored config. The
/// model geometry always comes from the checkpoint itself.
fn override_paths(cfg: &RunConfig, overrides: &[String]) -> Result<RunConfig> {
    let mut out = cfg.clone();
    for kv in overrides {
        let (key, value) = kv
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("override {kv:?} is not KEY=VALUE")))?;
        match key.trim() {
            k @ ("train_images" | "train_labels" | "test_images" | "test_labels") => {
                out.set(k, value.trim())?
            }
            k => {
                return Err(Error::Config(format!(
                    "{k} is fixed by the checkpoint; only dataset paths may be overridden"
                )))
            }
        }
    }
    Ok(out)
}

fn cmd_train(config: &ConfigArgs, out: &Path) -> Result<i32> {
    let cfg = config.resolve()?;
    cfg.validate()?;
    let train_data = load_split(&cfg, "train")?;
    let test_data = match (cfg.mode, &cfg.test_images, &cfg.test_labels) {
        (Mode::Classify, Some(_), Some(_)) => Some(load_split(&cfg, "test")?),
        _ => None,
    };
    std::fs::create_dir_all(out).map_err(Error::Io)?;
    let metrics_path = out.join("metrics.jsonl");
    let mut metrics_file = std::io::BufWriter::new(
        std::fs::File::create(&metrics_path).map_err(Error::Io)?,
    );
    let mut io_err: Option<std::io::Error> = None;
    let model = train_with_data(&cfg, &train_data, test_data.as_ref(), |r| {
        println!("{}", r.to_json_line(true));
        // the persisted file drops wall_seconds so reruns are byte-identical
        if let Err(e) = writeln!(metrics_file, "{}", r.to_json_line(false)) {
            io_err.get_or_insert(e);
        }
    })?;
    metrics_file.flush().map_err(Error::Io)?;
    if let Some(e) = io_err {
        return Err(Error::Io(e));
    }
    let ckpt_path = out.join("checkpoint.qccn");
    model_to_checkpoint(&model)?.save(&ckpt_path)?;
    eprintln!("wrote {} and {}", ckpt_path.display(), metrics_path.display());
    Ok(0)
}

fn cmd_eval(checkpoint: &Path, overrides: &[String]) -> Result<i32> {
    let model = load_model(checkpoint)?;
    if model.config.mode != Mode::Classify {
        return Err(Error::Config("eval requires a classify-mode checkpoint".into()));
    }
    let paths = override_paths(&model.config, overrides)?;
    let data = load_split(&paths, "test")?;
    let (per, mean) = evaluate_classification(&model, &data)?;
    println!(
        "{}",
        serde_json::json!({ "per_circuit_acc": per, "mean_acc": mean, "n_test": data.images.len() })
    );
    Ok(0)
}

fn cmd_encode(checkpoint: &Path, split: &str, out: &Path, overrides: &[String]) -> Result<i32> {
    let model = load_model(checkpoint)?;
    let paths = override_paths(&model.config, overrides)?;
    let data = load_split(&paths, split)?;
    let states = encode_states(&model, &data)?;
    write_states(out, &states)?;
    eprintln!("wrote {} states to {}", states.len(), out.display());
    Ok(0)
}

fn cmd_kernel(states: &Path, cross: Option<&Path>, out: &Path) -> Result<i32> {
    let train = read_states(states)?;
    match cross {
        None => {
            let g = gram(&train)?;
            write_gram_csv(out, &g, false)?;
            eprintln!("wrote {}x{} Gram to {}", g.n, g.n, out.display());
        }
        Some(test_path) => {
            let test = read_states(test_path)?;
            let k = cross_gram(&test, &train)?;
            write_rect_kernel_csv(out, &k, test.len(), train.len())?;
            eprintln!(
                "wrote {}x{} cross kernel to {}",
                test.len(),
                train.len(),
                out.display()
            );
        }
    }
    Ok(0)
}

/// Rectangular test-vs-train kernel in the same CSV dialect as the Gram
/// format (`n=<cols>` header, one row per line).
fn write_rect_kernel_csv(path: &Path, k: &[f64], rows: usize, cols: usize) -> Result<()> {
    let mut s = format!("n={cols}\n");
    for r in 0..rows {
        let line: Vec<String> = (0..cols).map(|c| format!("{:.16e}", k[r * cols + c])).collect();
        s.push_str(&line.join(","));
        s.push('\n');
    }
    std::fs::write(path, s).map_err(Error::Io)
}

fn read_rect_kernel_csv(path: &Path) -> Result<(Vec<f64>, usize, usize)> {
    let text = std::fs::read_to_string(path).map_err(Error::Io)?;
    let mut lines = text.lines();
    let header = lines.next().ok_or_else(|| Error::Format("empty kernel CSV".into()))?;
    let cols: usize = header
        .strip_prefix("n=")
        .and_then(|v| v.parse().ok())
        .ok_or_else(|| Error::Format(format!("bad kernel CSV header {header:?}")))?;
    let mut values = Vec::new();
    let mut rows = 0;
    for line in lines {
        if line.trim().is_empty() {
            continue;
        }
        let row: Vec<f64> = line
            .split(',')
            .map(|v| v.trim().parse().map_err(|e| Error::Format(format!("bad entry: {e}"))))
            .collect::<Result<_>>()?;
        if row.len() != cols {
            return Err(Error::Format(format!(
                "kernel CSV row {rows} has {} entries, expected {cols}",
                row.len()
            )));
        }
        values.extend(row);
        rows += 1;
    }
    Ok((values, rows, cols))
}

fn cmd_svm(
    gram_train: &Path,
    labels: &Path,
    gram_test: &Path,
    test_labels: &Path,
    cost: f64,
    tol: f64,
) -> Result<i32> {
    let mut g = read_gram_csv(gram_train)?;
    let y = load_idx_labels(labels)?;
    if y.len() != g.n {
        return Err(Error::Config(format!(
            "training Gram is {0}x{0} but label file has {1} labels",
            g.n,
            y.len()
        )));
    }
    g.labels = Some(y);
    let (k_test, n_test, cols) = read_rect_kernel_csv(gram_test)?;
    if cols != g.n {
        return Err(Error::Config(format!(
            "test kernel has {cols} columns but training Gram is {0}x{0}",
            g.n
        )));
    }
    let y_test = load_idx_labels(test_labels)?;
    if y_test.len() != n_test {
        return Err(Error::Config(format!(
            "test kernel has {n_test} rows but test label file has {} labels",
            y_test.len()
        )));
    }
    let model = ovo_train(&g, cost, tol)?;
    let preds = ovo_predict(&model, &k_test, n_test)?;
    let correct = preds.iter().zip(&y_test).filter(|(p, t)| p == t).count();
    let accuracy = correct as f64 / n_test as f64;
    println!(
        "{}",
        serde_json::json!({
            "accuracy": accuracy,
            "n_train": g.n,
            "n_test": n_test,
            "classes": model.classes,
            "cost": cost,
        })
    );
    Ok(0)
}

fn cmd_gradcheck(m: usize, d: usize, l: usize, seed: u64, corrupt: f64) -> Result<i32> {
    use qccnet::autograd::LossKind;
    use qccnet::net::Activation;
    // one configuration per (activation, loss) pairing at the requested size
    let cases = [
        (Activation::Normalize, LossKind::Classification, true, true),
        (Activation::Normalize, LossKind::Reconstruction, false, true),
        (Activation::Scale, LossKind::Classification, false, false),
        (Activation::Scale, LossKind::Reconstruction, true, false),
    ];
    let mut worst: f64 = 0.0;
    for (i, &(act, kind, with_mlp, interaction)) in cases.iter().enumerate() {
        let err = gradcheck_case_with_corruption(
            m,
            d,
            l,
            act,
            kind,
            with_mlp,
            interaction,
            seed + i as u64,
            corrupt,
        )?;
        let verdict = if err <= GRADCHECK_TOL { "pass" } else { "FAIL" };
        println!(
            "gradcheck m={m} d={d} L={l} act={act:?} loss={kind:?} mlp={with_mlp} \
             interaction={interaction}: max_rel_error={err:.3e} [{verdict}]"
        );
        worst = worst.max(err);
    }
    if worst > GRADCHECK_TOL {
        eprintln!("gradcheck FAILED: max relative error {worst:.3e} > {GRADCHECK_TOL:.0e}");
        Ok(4)
    } else {
        println!("gradcheck passed: max relative error {worst:.3e}");
        Ok(0)
    }
}

fn run() -> Result<i32> {
    let cli = Cli::parse();
    match &cli.command {
        Command::Train { config, out } => cmd_train(config, out),
        Command::Eval { checkpoint, overrides } => cmd_eval(checkpoint, overrides),
        Command::Encode { checkpoint, split, out, overrides } => {
            cmd_encode(checkpoint, split, out, overrides)
        }
        Command::Kernel { states, cross, out } => cmd_kernel(states, cross.as_deref(), out),
        Command::Svm { gram_train, labels, gram_test, test_labels, cost, tol } => {
            cmd_svm(gram_train, labels, gram_test, test_labels, *cost, *tol)
        }
        Command::Gradcheck { m, d, l, seed, corrupt } => cmd_gradcheck(*m, *d, *l, *seed, *corrupt),
    }
}

fn main() {
    let code = match run() {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    };
    std::process::exit(code);
}
