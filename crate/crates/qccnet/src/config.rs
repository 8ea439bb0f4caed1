//! Run configuration: flat `key = value` files with `#` comments, every key
//! overridable by a same-named CLI flag (CLI wins).

use crate::error::{Error, Result};
use crate::net::Activation;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Classify,
    Encode,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub train_images: Option<PathBuf>,
    pub train_labels: Option<PathBuf>,
    pub test_images: Option<PathBuf>,
    pub test_labels: Option<PathBuf>,
    pub m: usize,
    pub d: usize,
    pub depth: usize,
    pub interaction: bool,
    pub activation: Activation,
    /// `None` → 50 epochs with interaction, 100 without
    pub epochs: Option<usize>,
    pub batch: usize,
    pub lr_stiefel: f64,
    pub lr_euclid: f64,
    pub per_circuit_train: usize,
    pub c: usize,
    pub seed: u64,
    pub mlp_depth: usize,
    pub mlp_width: usize,
    pub mode: Mode,
    /// apply the activation between layers even without interaction
    pub nointeraction_activation: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            train_images: None,
            train_labels: None,
            test_images: None,
            test_labels: None,
            m: 128,
            d: 4,
            depth: 4,
            interaction: false,
            activation: Activation::Normalize,
            epochs: None,
            batch: 32,
            lr_stiefel: 1.0,
            lr_euclid: 1e-4,
            per_circuit_train: 1000,
            c: 10,
            seed: 0,
            mlp_depth: 4,
            mlp_width: 256,
            mode: Mode::Classify,
            nointeraction_activation: false,
        }
    }
}

fn parse_bool(key: &str, v: &str) -> Result<bool> {
    match v {
        "true" | "1" => Ok(true),
        "false" | "0" => Ok(false),
        _ => Err(Error::Config(format!("{key}: expected true/false, got {v:?}"))),
    }
}

fn parse_num<T: std::str::FromStr>(key: &str, v: &str) -> Result<T>
where
    T::Err: std::fmt::Display,
{
    v.parse().map_err(|e| Error::Config(format!("{key}: bad value {v:?}: {e}")))
}

impl RunConfig {
    /// Apply one `key = value` assignment.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let v = value.trim();
        match key {
            "train_images" => self.train_images = Some(PathBuf::from(v)),
            "train_labels" => self.train_labels = Some(PathBuf::from(v)),
            "test_images" => self.test_images = Some(PathBuf::from(v)),
            "test_labels" => self.test_labels = Some(PathBuf::from(v)),
            "m" => self.m = parse_num(key, v)?,
            "d" => self.d = parse_num(key, v)?,
            "L" => self.depth = parse_num(key, v)?,
            "interaction" => self.interaction = parse_bool(key, v)?,
            "activation" => {
                self.activation = match v {
                    "normalize" => Activation::Normalize,
                    "scale" => Activation::Scale,
                    _ => {
                        return Err(Error::Config(format!(
                            "activation: expected normalize|scale, got {v:?}"
                        )))
                    }
                }
            }
            "epochs" => self.epochs = Some(parse_num(key, v)?),
            "batch" => self.batch = parse_num(key, v)?,
            "lr_stiefel" => self.lr_stiefel = parse_num(key, v)?,
            "lr_euclid" => self.lr_euclid = parse_num(key, v)?,
            "per_circuit_train" => self.per_circuit_train = parse_num(key, v)?,
            "C" => self.c = parse_num(key, v)?,
            "seed" => self.seed = parse_num(key, v)?,
            "mlp_depth" => self.mlp_depth = parse_num(key, v)?,
            "mlp_width" => self.mlp_width = parse_num(key, v)?,
            "mode" => {
                self.mode = match v {
                    "classify" => Mode::Classify,
                    "encode" => Mode::Encode,
                    _ => {
                        return Err(Error::Config(format!(
                            "mode: expected classify|encode, got {v:?}"
                        )))
                    }
                }
            }
            "nointeraction_activation" => self.nointeraction_activation = parse_bool(key, v)?,
            _ => return Err(Error::Config(format!("unknown config key {key:?}"))),
        }
        Ok(())
    }

    /// Parse a flat key = value file (UTF-8, `#` comments) over `self`.
    pub fn apply_file(&mut self, path: &Path) -> Result<()> {
        let text = std::fs::read_to_string(path)?;
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::Config(format!("{}:{}: expected key = value", path.display(), lineno + 1))
            })?;
            self.set(key.trim(), value)
                .map_err(|e| Error::Config(format!("{}:{}: {e}", path.display(), lineno + 1)))?;
        }
        Ok(())
    }

    pub fn load(path: &Path) -> Result<RunConfig> {
        let mut cfg = RunConfig::default();
        cfg.apply_file(path)?;
        Ok(cfg)
    }

    pub fn effective_epochs(&self) -> usize {
        self.epochs.unwrap_or(if self.interaction { 50 } else { 100 })
    }

    /// Measurement count: the configured C when classifying; in encode mode
    /// the head is a full orthonormal basis, so C = m.
    pub fn effective_c(&self) -> usize {
        match self.mode {
            Mode::Classify => self.c,
            Mode::Encode => self.m,
        }
    }

    /// Raw input dimension: 784 pixels, zero-padded to 1024 in encode mode.
    pub fn input_dim(&self) -> usize {
        match self.mode {
            Mode::Classify => 784,
            Mode::Encode => 1024,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.m == 0 || self.d == 0 || self.depth == 0 || self.batch == 0 {
            return Err(Error::Config("m, d, L, batch must be positive".into()));
        }
        if self.c == 0 || self.per_circuit_train == 0 {
            return Err(Error::Config("C and per_circuit_train must be positive".into()));
        }
        if self.mlp_depth == 0 || self.mlp_width == 0 {
            return Err(Error::Config("mlp_depth and mlp_width must be positive".into()));
        }
        if !(self.lr_stiefel >= 0.0 && self.lr_euclid >= 0.0) {
            return Err(Error::Config("learning rates must be non-negative".into()));
        }
        if self.batch > self.per_circuit_train {
            return Err(Error::Config(format!(
                "batch {} exceeds per_circuit_train {}",
                self.batch, self.per_circuit_train
            )));
        }
        if self.effective_c() > self.m {
            return Err(Error::Config(format!(
                "C = {} measurement vectors cannot be orthonormal in dimension m = {}",
                self.effective_c(),
                self.m
            )));
        }
        if self.mode == Mode::Encode {
            if self.d != 1 {
                return Err(Error::Config("encode mode requires d = 1".into()));
            }
            if self.input_dim() % self.m != 0 {
                return Err(Error::Config(format!(
                    "encode mode needs m dividing {} (got m = {})",
                    self.input_dim(),
                    self.m
                )));
            }
        }
        Ok(())
    }

    /// Canonical serialization; `RunConfig::from_text` inverts it.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let mut kv = |k: &str, v: String| {
            let _ = writeln!(s, "{k} = {v}");
        };
        if let Some(p) = &self.train_images {
            kv("train_images", p.display().to_string());
        }
        if let Some(p) = &self.train_labels {
            kv("train_labels", p.display().to_string());
        }
        if let Some(p) = &self.test_images {
            kv("test_images", p.display().to_string());
        }
        if let Some(p) = &self.test_labels {
            kv("test_labels", p.display().to_string());
        }
        kv("m", self.m.to_string());
        kv("d", self.d.to_string());
        kv("L", self.depth.to_string());
        kv("interaction", self.interaction.to_string());
        kv(
            "activation",
            match self.activation {
                Activation::Normalize => "normalize",
                Activation::Scale => "scale",
                Activation::Identity => "normalize", // not reachable from config
            }
            .to_string(),
        );
        kv("epochs", self.effective_epochs().to_string());
        kv("batch", self.batch.to_string());
        kv("lr_stiefel", format!("{:e}", self.lr_stiefel));
        kv("lr_euclid", format!("{:e}", self.lr_euclid));
        kv("per_circuit_train", self.per_circuit_train.to_string());
        kv("C", self.c.to_string());
        kv("seed", self.seed.to_string());
        kv("mlp_depth", self.mlp_depth.to_string());
        kv("mlp_width", self.mlp_width.to_string());
        kv(
            "mode",
            match self.mode {
                Mode::Classify => "classify",
                Mode::Encode => "encode",
            }
            .to_string(),
        );
        kv("nointeraction_activation", self.nointeraction_activation.to_string());
        s
    }

    pub fn from_text(text: &str) -> Result<RunConfig> {
        let mut cfg = RunConfig::default();
        for raw in text.lines() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("expected key = value, got {line:?}")))?;
            cfg.set(key.trim(), value)?;
        }
        Ok(cfg)
    }
}
