//! Experiment configuration: a flat `key = value` text format over typed
//! keys, plus the desk- and paper-scale presets the configs override.
//!
//! The format has no nesting on purpose — any language can parse it with a
//! line splitter. `#` starts a comment, blank lines are skipped, list values
//! are comma-separated. Unknown keys are hard errors so typos cannot
//! silently fall back to defaults. [`CONFIG_SCHEMA`] documents every key and
//! is shipped verbatim as `docs/config-schema.txt`.

use std::fmt;
use std::path::PathBuf;

use crate::error::{Error, Result};

/// Classification task.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Task {
    /// Periodic cluster-type chain, 8 qubits, binary SPT/non-SPT labels.
    TaskA,
    /// Periodic chain of the second family, 8 qubits, four phases.
    TaskB,
    /// Open-boundary 9-qubit variant of the first family, used by the
    /// analytically constructed circuit classifier.
    TaskAOpen,
    /// 28×28 grayscale image classification, ten classes.
    Fashion,
}

impl Task {
    pub const ALL: [Task; 4] = [Task::TaskA, Task::TaskB, Task::TaskAOpen, Task::Fashion];

    pub fn as_str(self) -> &'static str {
        match self {
            Task::TaskA => "task_a",
            Task::TaskB => "task_b",
            Task::TaskAOpen => "task_a_open",
            Task::Fashion => "fashion",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|t| t.as_str() == s)
            .ok_or_else(|| Error::Config(format!("unknown task {s:?}")))
    }

    pub fn n_classes(self) -> usize {
        match self {
            Task::TaskA | Task::TaskAOpen => 2,
            Task::TaskB => 4,
            Task::Fashion => 10,
        }
    }

    pub fn is_quantum(self) -> bool {
        !matches!(self, Task::Fashion)
    }
}

impl fmt::Display for Task {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Classification method.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    /// Iterative feature maps, weights trained with the contrastive loss.
    IqfmContrastive,
    /// Same architecture with the inter-layer weights left at their random
    /// initialization; only the readout is trained.
    IqfmNoncontrastive,
    /// One-step variant on joint data–label registers with frozen anchors.
    IqfmOnestep,
    /// Variational quantum convolutional network trained by parameter shift.
    Qcnn,
    /// Parameter-free analytic circuit classifier (open chains only).
    ExactQcnn,
    /// Classical-shadow similarity kernel with an SMO-trained SVM.
    ShadowSvm,
    /// Width-matched classical `tanh` network (image inputs only).
    ClassicalNn,
}

impl Method {
    pub const ALL: [Method; 7] = [
        Method::IqfmContrastive,
        Method::IqfmNoncontrastive,
        Method::IqfmOnestep,
        Method::Qcnn,
        Method::ExactQcnn,
        Method::ShadowSvm,
        Method::ClassicalNn,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Method::IqfmContrastive => "iqfm_contrastive",
            Method::IqfmNoncontrastive => "iqfm_noncontrastive",
            Method::IqfmOnestep => "iqfm_onestep",
            Method::Qcnn => "qcnn",
            Method::ExactQcnn => "exact_qcnn",
            Method::ShadowSvm => "shadow_svm",
            Method::ClassicalNn => "classical_nn",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| Error::Config(format!("unknown method {s:?}")))
    }

    /// Tasks a method can run on; everything else is a config error.
    pub fn supports(self, task: Task) -> bool {
        match self {
            Method::IqfmContrastive | Method::IqfmNoncontrastive => task != Task::TaskAOpen,
            Method::IqfmOnestep | Method::Qcnn => matches!(task, Task::TaskA | Task::TaskB),
            Method::ExactQcnn => task == Task::TaskAOpen,
            Method::ShadowSvm => task == Task::TaskA,
            Method::ClassicalNn => task == Task::Fashion,
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Scale preset a config starts from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Preset {
    /// Minutes-scale sizes for CI and iteration.
    Desk,
    /// Published sizes (50 trials, full epochs and datasets); documented,
    /// not CI-gated.
    Paper,
}

impl Preset {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "desk" => Ok(Preset::Desk),
            "paper" => Ok(Preset::Paper),
            other => Err(Error::Config(format!("unknown preset {other:?}"))),
        }
    }
}

/// Complete description of one experiment family.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub task: Task,
    pub method: Method,

    /// Feature-map layer count `L`.
    pub layers: usize,
    /// Rotated measurement bases beyond the bare `Z` basis.
    pub extra_bases: usize,
    /// Modular width `M` (image tasks).
    pub width: usize,
    /// Conv-block repetitions in the variational QCNN.
    pub var_depth: usize,

    /// Feature re-collection rounds per layer.
    pub outer_epochs: usize,
    /// Classical gradient steps per outer epoch.
    pub inner_epochs: usize,
    pub readout_epochs: usize,
    /// Variational-QCNN epochs; 0 picks the per-mode shipped default.
    pub qcnn_epochs: usize,
    pub tau: f64,
    pub learning_rate: f64,
    pub weight_decay: f64,
    /// Rotate positive partners by 90° during image contrastive training.
    pub augment_positives: bool,

    /// Measurement shots per basis; `None` = exact expectations.
    pub shots: Option<u64>,
    /// Input rotation-noise strength at evaluation.
    pub noise_p: f64,

    pub n_trials: usize,
    pub master_seed: u64,

    /// Training samples: image subset size per trial, or the model-B train
    /// split size. 0 keeps the task's full shipped split.
    pub train_size: usize,
    /// Test samples; 0 keeps the task's full shipped split.
    pub test_size: usize,

    pub noise_values: Vec<f64>,
    pub shot_values: Vec<u64>,
    pub layer_values: Vec<usize>,
    pub width_values: Vec<usize>,

    /// Where datasets live (image files, generated spin sets).
    pub data_dir: PathBuf,
    /// Where reports, checkpoints, and exports are written.
    pub out_dir: PathBuf,
}

impl ExperimentConfig {
    /// Minutes-scale configuration for a task/method pair.
    pub fn desk(task: Task, method: Method) -> Self {
        let mut c = ExperimentConfig {
            task,
            method,
            layers: if task == Task::Fashion { 4 } else { 5 },
            extra_bases: 3,
            width: 16,
            var_depth: if task == Task::TaskB { 32 } else { 4 },
            outer_epochs: 30,
            inner_epochs: 40,
            readout_epochs: 500,
            qcnn_epochs: 50,
            tau: 8.0,
            learning_rate: 1e-3,
            weight_decay: 0.0,
            augment_positives: task == Task::Fashion,
            shots: None,
            noise_p: 0.0,
            n_trials: 5,
            master_seed: 0,
            train_size: 0,
            test_size: 0,
            noise_values: vec![0.0, 0.05, 0.1, 0.15, 0.2, 0.25, 0.3],
            shot_values: vec![10, 100, 1_000, 10_000],
            layer_values: vec![1, 2, 3, 4, 5],
            width_values: vec![16],
            data_dir: PathBuf::from("data"),
            out_dir: PathBuf::from("out"),
        };
        match task {
            Task::TaskA => c.n_trials = 10,
            Task::TaskB => {
                // 24 train / 80 test keeps per-trial diagonalization cheap.
                c.train_size = 24;
                c.test_size = 80;
            }
            Task::TaskAOpen => c.shots = Some(1_000),
            Task::Fashion => {
                c.train_size = 1_000;
                c.test_size = 2_000;
            }
        }
        if method == Method::ShadowSvm {
            // Kernel estimation is quadratic in both samples and snapshots;
            // 40+40 samples at 1000 snapshots stays in the minutes range.
            c.train_size = 40;
            c.test_size = 40;
            c.shots = Some(1_000);
        }
        c
    }

    /// Published sizes; slow by design and not CI-gated.
    pub fn paper(task: Task, method: Method) -> Self {
        let mut c = Self::desk(task, method);
        c.n_trials = 50;
        c.outer_epochs = if task == Task::Fashion { 200 } else { 100 };
        c.qcnn_epochs = 0; // shipped defaults: 1000/5000 exact, 300 shot
        match task {
            Task::TaskA => {}
            Task::TaskB => {
                c.train_size = 50;
                c.test_size = 1_000;
            }
            Task::TaskAOpen => c.n_trials = 10,
            Task::Fashion => {
                c.train_size = 5_000;
                c.test_size = 10_000;
                c.width = 256;
                c.width_values = vec![16, 64, 256];
            }
        }
        if method == Method::ShadowSvm {
            c.train_size = 80;
            c.test_size = 200;
            c.shots = Some(1_000);
        }
        c
    }

    pub fn preset(preset: Preset, task: Task, method: Method) -> Self {
        match preset {
            Preset::Desk => Self::desk(task, method),
            Preset::Paper => Self::paper(task, method),
        }
    }

    /// Structural checks shared by every entry point.
    pub fn validate(&self) -> Result<()> {
        if !self.method.supports(self.task) {
            return Err(Error::Config(format!(
                "method {} does not run on task {}",
                self.method, self.task
            )));
        }
        if self.n_trials == 0 {
            return Err(Error::Config("n_trials must be at least 1".into()));
        }
        if self.layers == 0 {
            return Err(Error::Config("layers must be at least 1".into()));
        }
        if self.noise_values.is_empty()
            || self.shot_values.is_empty()
            || self.layer_values.is_empty()
            || self.width_values.is_empty()
        {
            return Err(Error::Config("sweep lists must be non-empty".into()));
        }
        if !(0.0..=1.0).contains(&self.noise_p) {
            return Err(Error::NoiseStrength(self.noise_p));
        }
        if self.task == Task::Fashion && self.noise_p != 0.0 {
            return Err(Error::Config(
                "rotation noise applies to quantum input states only".into(),
            ));
        }
        if self.method == Method::ClassicalNn && self.shots.is_some() {
            return Err(Error::Config(
                "the classical network has no measurement step, so shots must be 0".into(),
            ));
        }
        Ok(())
    }

    /// Apply `key = value` lines from a config file on top of this base.
    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        for (number, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::Config(format!("config line {}: expected key = value", number + 1))
            })?;
            self.set(key.trim(), value.trim())
                .map_err(|e| Error::Config(format!("config line {}: {e}", number + 1)))?;
        }
        Ok(())
    }

    fn set(&mut self, key: &str, value: &str) -> Result<()> {
        fn num<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
            value
                .parse()
                .map_err(|_| Error::Config(format!("{key}: cannot parse {value:?}")))
        }
        fn list<T: std::str::FromStr>(key: &str, value: &str) -> Result<Vec<T>> {
            value
                .split(',')
                .map(|v| num(key, v.trim()))
                .collect::<Result<Vec<T>>>()
        }
        match key {
            "task" => self.task = Task::parse(value)?,
            "method" => self.method = Method::parse(value)?,
            "layers" => self.layers = num(key, value)?,
            "extra_bases" => self.extra_bases = num(key, value)?,
            "width" => self.width = num(key, value)?,
            "var_depth" => self.var_depth = num(key, value)?,
            "outer_epochs" => self.outer_epochs = num(key, value)?,
            "inner_epochs" => self.inner_epochs = num(key, value)?,
            "readout_epochs" => self.readout_epochs = num(key, value)?,
            "qcnn_epochs" => self.qcnn_epochs = num(key, value)?,
            "tau" => self.tau = num(key, value)?,
            "learning_rate" => self.learning_rate = num(key, value)?,
            "weight_decay" => self.weight_decay = num(key, value)?,
            "augment_positives" => {
                self.augment_positives = match value {
                    "true" => true,
                    "false" => false,
                    other => {
                        return Err(Error::Config(format!(
                            "augment_positives: expected true or false, got {other:?}"
                        )))
                    }
                }
            }
            "shots" => {
                let s: u64 = num(key, value)?;
                self.shots = (s > 0).then_some(s);
            }
            "noise_p" => self.noise_p = num(key, value)?,
            "n_trials" => self.n_trials = num(key, value)?,
            "master_seed" => self.master_seed = num(key, value)?,
            "train_size" => self.train_size = num(key, value)?,
            "test_size" => self.test_size = num(key, value)?,
            "noise_values" => self.noise_values = list(key, value)?,
            "shot_values" => self.shot_values = list(key, value)?,
            "layer_values" => self.layer_values = list(key, value)?,
            "width_values" => self.width_values = list(key, value)?,
            "data_dir" => self.data_dir = PathBuf::from(value),
            "out_dir" => self.out_dir = PathBuf::from(value),
            other => return Err(Error::Config(format!("unknown config key {other:?}"))),
        }
        Ok(())
    }

    /// Render as config-file text; `apply_text` of the output reproduces the
    /// config exactly.
    pub fn to_text(&self) -> String {
        fn join<T: fmt::Display>(values: &[T]) -> String {
            values
                .iter()
                .map(T::to_string)
                .collect::<Vec<_>>()
                .join(", ")
        }
        let mut out = String::new();
        let mut kv = |key: &str, value: String| {
            out.push_str(key);
            out.push_str(" = ");
            out.push_str(&value);
            out.push('\n');
        };
        kv("task", self.task.to_string());
        kv("method", self.method.to_string());
        kv("layers", self.layers.to_string());
        kv("extra_bases", self.extra_bases.to_string());
        kv("width", self.width.to_string());
        kv("var_depth", self.var_depth.to_string());
        kv("outer_epochs", self.outer_epochs.to_string());
        kv("inner_epochs", self.inner_epochs.to_string());
        kv("readout_epochs", self.readout_epochs.to_string());
        kv("qcnn_epochs", self.qcnn_epochs.to_string());
        kv("tau", self.tau.to_string());
        kv("learning_rate", self.learning_rate.to_string());
        kv("weight_decay", self.weight_decay.to_string());
        kv("augment_positives", self.augment_positives.to_string());
        kv("shots", self.shots.unwrap_or(0).to_string());
        kv("noise_p", self.noise_p.to_string());
        kv("n_trials", self.n_trials.to_string());
        kv("master_seed", self.master_seed.to_string());
        kv("train_size", self.train_size.to_string());
        kv("test_size", self.test_size.to_string());
        kv("noise_values", join(&self.noise_values));
        kv("shot_values", join(&self.shot_values));
        kv("layer_values", join(&self.layer_values));
        kv("width_values", join(&self.width_values));
        kv("data_dir", self.data_dir.display().to_string());
        kv("out_dir", self.out_dir.display().to_string());
        out
    }
}

/// The config-file key reference, shipped verbatim as
/// `docs/config-schema.txt` (a test keeps the two in sync).
pub const CONFIG_SCHEMA: &str = "\
# Experiment config schema — flat `key = value` lines, `#` comments,
# comma-separated lists. Keys omitted from a config file keep the values of
# the chosen preset (desk unless --preset paper). Unknown keys are errors.
#
# key                type      meaning
# task               enum      task_a | task_b | task_a_open | fashion
# method             enum      iqfm_contrastive | iqfm_noncontrastive |
#                              iqfm_onestep | qcnn | exact_qcnn |
#                              shadow_svm | classical_nn
# layers             int ≥ 1   feature-map layer count L
# extra_bases        int       rotated measurement bases beyond bare Z
# width              int       modular width M (image tasks)
# var_depth          int       conv-block repetitions of the variational QCNN
# outer_epochs       int ≥ 1   feature re-collection rounds per layer
# inner_epochs       int ≥ 1   classical gradient steps per outer round
# readout_epochs     int       readout-network training epochs
# qcnn_epochs        int       variational-QCNN epochs; 0 = shipped default
# tau                float > 0 contrastive temperature
# learning_rate      float     inter-layer weight optimizer step size
# weight_decay       float     inter-layer weight decay
# augment_positives  bool      rotate image positives by 90 degrees
# shots              int       measurement shots per basis; 0 = exact
# noise_p            float     input rotation-noise strength in [0, 1]
# n_trials           int ≥ 1   independent trials (seeds derived per trial)
# master_seed        int       root seed; trial seeds are hashed from it
# train_size         int       per-trial training samples; 0 = full split
# test_size          int       test samples; 0 = full split
# noise_values       floats    sweep grid for sweep-noise
# shot_values        ints      sweep grid for sweep-shots
# layer_values       ints      sweep grid for sweep-depth
# width_values       ints      sweep grid for run-fashion
# data_dir           path      dataset directory
# out_dir            path      output directory for reports and exports
";
