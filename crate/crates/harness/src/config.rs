//! Line-oriented `section.key = value` experiment configuration.
//!
//! ```text
//! # comments run to end of line
//! run.seed = 7
//! run.steps = 200
//! landscape.kind = quadratic
//! landscape.eigenvalues = 100*1, 0.01*99
//! optimizer.family = muon_lite
//! lite.chi = 4
//! schedule.lr = 0.01
//! ```
//!
//! Lists are comma separated; `v*n` repeats `v` n times.

use std::collections::BTreeMap;
use std::path::PathBuf;

use lite_core::landscapes::RiverValleySpec;
use lite_core::optim::{Family, LitePolicy, OptimizerConfig, ScheduleKind, ScheduleSpec};
use lite_core::polar::NsSchedule;
use lite_core::MlpSpec;

use crate::error::HarnessError;

#[derive(Debug, Clone, PartialEq)]
pub enum LandscapeConfig {
    Quadratic {
        eigenvalues: Vec<f64>,
        offsets: Vec<f64>,
        init: Option<Vec<f64>>,
    },
    RiverValley {
        spec: RiverValleySpec<f64>,
        init: Option<Vec<f64>>,
    },
    Mlp(MlpSpec),
    Kronecker {
        row_spectrum: Vec<f64>,
        col_spectrum: Vec<f64>,
        noise_std: f64,
    },
}

impl LandscapeConfig {
    pub fn kind(&self) -> &'static str {
        match self {
            Self::Quadratic { .. } => "quadratic",
            Self::RiverValley { .. } => "river_valley",
            Self::Mlp(_) => "mlp",
            Self::Kronecker { .. } => "kronecker",
        }
    }
}

/// What drives the parameters.
#[derive(Debug, Clone, PartialEq)]
pub enum OptimizerChoice {
    /// Block-routed optimizer family.
    Routed(OptimizerConfig<f64>),
    /// Plain momentum recurrence `m ← (1−α)m + ∇f`, `w ← w − η(m + β∇f)` with
    /// `η` from the schedule; quadratic landscapes only.
    Momentum { alpha: f64, beta: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct AlignSettings {
    pub d_s: usize,
    pub k_grid: Option<Vec<usize>>,
    pub gram_batches: usize,
    pub train_steps: usize,
}

impl Default for AlignSettings {
    fn default() -> Self {
        Self {
            d_s: 4,
            k_grid: None,
            gram_batches: 32,
            train_steps: 100,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub steps: usize,
    pub log_every: usize,
    pub output: Option<PathBuf>,
    pub landscape: LandscapeConfig,
    pub optimizer: OptimizerChoice,
    pub schedule: ScheduleSpec<f64>,
    pub align: AlignSettings,
}

#[derive(Debug)]
struct Entry {
    value: String,
    line: usize,
}

struct Raw {
    entries: BTreeMap<String, Entry>,
}

fn err(line: usize, msg: impl Into<String>) -> HarnessError {
    HarnessError::Config {
        line: Some(line),
        msg: msg.into(),
    }
}

fn missing(key: &str) -> HarnessError {
    HarnessError::Config {
        line: None,
        msg: format!("missing required key {key}"),
    }
}

const SECTIONS: [&str; 6] = ["run", "landscape", "optimizer", "lite", "schedule", "align"];

const KEYS: &[&str] = &[
    "run.seed",
    "run.steps",
    "run.log_every",
    "run.output",
    "landscape.kind",
    "landscape.eigenvalues",
    "landscape.offsets",
    "landscape.init",
    "landscape.sharp_dim",
    "landscape.flat_dim",
    "landscape.sharp_curvature",
    "landscape.amplitude",
    "landscape.floor_curvature",
    "landscape.widths",
    "landscape.batch_size",
    "landscape.noise_std",
    "landscape.row_spectrum",
    "landscape.col_spectrum",
    "optimizer.family",
    "optimizer.alpha",
    "optimizer.beta",
    "optimizer.chi",
    "optimizer.theta",
    "optimizer.beta_v",
    "optimizer.theta_shampoo",
    "optimizer.epsilon",
    "optimizer.weight_decay",
    "optimizer.clip_norm",
    "optimizer.nesterov_beta",
    "optimizer.mars_gamma",
    "optimizer.ademamix_kappa",
    "optimizer.alpha_fast",
    "optimizer.alpha_slow",
    "optimizer.qr_refresh_every",
    "optimizer.ns_iterations",
    "lite.chi",
    "lite.beta1",
    "lite.beta2",
    "lite.r_s",
    "lite.d_smooth_ratio",
    "lite.chi_embedding",
    "lite.chi_norm",
    "lite.adam_beta1",
    "lite.adam_beta2",
    "schedule.kind",
    "schedule.lr",
    "schedule.warmup_steps",
    "schedule.total_steps",
    "align.d_s",
    "align.k_grid",
    "align.gram_batches",
    "align.train_steps",
];

impl Raw {
    fn parse(text: &str) -> Result<Self, HarnessError> {
        let mut entries = BTreeMap::new();
        for (i, raw_line) in text.lines().enumerate() {
            let line = i + 1;
            let content = raw_line.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let (key, value) = content
                .split_once('=')
                .ok_or_else(|| err(line, format!("expected `section.key = value`, got `{content}`")))?;
            let key = key.trim();
            let value = value.trim();
            let (section, name) = key
                .split_once('.')
                .ok_or_else(|| err(line, format!("key `{key}` has no section")))?;
            if !SECTIONS.contains(&section) {
                return Err(err(line, format!("unknown section `{section}`")));
            }
            if name.is_empty() || value.is_empty() {
                return Err(err(line, format!("empty key or value in `{content}`")));
            }
            if !KEYS.contains(&key) {
                return Err(err(line, format!("unknown key {key}")));
            }
            let prev = entries.insert(
                key.to_string(),
                Entry {
                    value: value.to_string(),
                    line,
                },
            );
            if let Some(p) = prev {
                return Err(err(line, format!("duplicate key {key} (first set on line {})", p.line)));
            }
        }
        Ok(Self { entries })
    }

    fn take(&mut self, key: &str) -> Option<Entry> {
        self.entries.remove(key)
    }

    fn parsed<V>(&mut self, key: &str, kind: &str, f: impl Fn(&str) -> Option<V>) -> Result<Option<V>, HarnessError> {
        match self.take(key) {
            None => Ok(None),
            Some(e) => f(&e.value)
                .map(Some)
                .ok_or_else(|| err(e.line, format!("{key}: expected {kind}, got `{}`", e.value))),
        }
    }

    fn f64(&mut self, key: &str) -> Result<Option<f64>, HarnessError> {
        self.parsed(key, "a finite number", |s| s.parse::<f64>().ok().filter(|x| x.is_finite()))
    }

    fn usize(&mut self, key: &str) -> Result<Option<usize>, HarnessError> {
        self.parsed(key, "a non-negative integer", |s| s.parse().ok())
    }

    fn u64(&mut self, key: &str) -> Result<Option<u64>, HarnessError> {
        self.parsed(key, "an unsigned 64-bit integer", |s| s.parse().ok())
    }

    fn string(&mut self, key: &str) -> Option<Entry> {
        self.take(key)
    }

    fn f64_list(&mut self, key: &str) -> Result<Option<Vec<f64>>, HarnessError> {
        self.parsed(key, "a list of finite numbers", |s| {
            parse_list::<f64>(s).filter(|xs| xs.iter().all(|x| x.is_finite()))
        })
    }

    fn usize_list(&mut self, key: &str) -> Result<Option<Vec<usize>>, HarnessError> {
        self.parsed(key, "a list of non-negative integers", parse_list::<usize>)
    }

    fn required<V>(v: Option<V>, key: &str) -> Result<V, HarnessError> {
        v.ok_or_else(|| missing(key))
    }

    fn finish(self) -> Result<(), HarnessError> {
        match self.entries.iter().min_by_key(|(_, e)| e.line) {
            None => Ok(()),
            Some((k, e)) => Err(err(e.line, format!("key {k} does not apply to this configuration"))),
        }
    }
}

fn parse_list<V: std::str::FromStr + Clone>(s: &str) -> Option<Vec<V>> {
    let mut out = Vec::new();
    for item in s.split(',') {
        let item = item.trim();
        match item.split_once('*') {
            Some((v, n)) => {
                let v: V = v.trim().parse().ok()?;
                let n: usize = n.trim().parse().ok()?;
                out.extend(std::iter::repeat(v).take(n));
            }
            None => out.push(item.parse().ok()?),
        }
    }
    (!out.is_empty()).then_some(out)
}

fn parse_landscape(raw: &mut Raw) -> Result<LandscapeConfig, HarnessError> {
    let kind = Raw::required(raw.string("landscape.kind"), "landscape.kind")?;
    let l = match kind.value.as_str() {
        "quadratic" => {
            let eigenvalues = Raw::required(raw.f64_list("landscape.eigenvalues")?, "landscape.eigenvalues")?;
            let offsets = raw
                .f64_list("landscape.offsets")?
                .unwrap_or_else(|| vec![0.0; eigenvalues.len()]);
            let init = raw.f64_list("landscape.init")?;
            LandscapeConfig::Quadratic {
                eigenvalues,
                offsets,
                init,
            }
        }
        "river_valley" => {
            let sharp = Raw::required(raw.usize("landscape.sharp_dim")?, "landscape.sharp_dim")?;
            let flat = Raw::required(raw.usize("landscape.flat_dim")?, "landscape.flat_dim")?;
            let l = Raw::required(raw.f64("landscape.sharp_curvature")?, "landscape.sharp_curvature")?;
            let mut spec = RiverValleySpec::new(sharp, flat, l);
            if let Some(a) = raw.f64("landscape.amplitude")? {
                spec.amplitude = a;
            }
            if let Some(mu) = raw.f64("landscape.floor_curvature")? {
                spec.floor_curvature = mu;
            }
            LandscapeConfig::RiverValley {
                spec,
                init: raw.f64_list("landscape.init")?,
            }
        }
        "mlp" => {
            let mut spec = MlpSpec::default();
            if let Some(w) = raw.usize_list("landscape.widths")? {
                spec.widths = w;
            }
            if let Some(b) = raw.usize("landscape.batch_size")? {
                spec.batch_size = b;
            }
            if let Some(n) = raw.f64("landscape.noise_std")? {
                spec.noise_std = n;
            }
            LandscapeConfig::Mlp(spec)
        }
        "kronecker" => LandscapeConfig::Kronecker {
            row_spectrum: Raw::required(raw.f64_list("landscape.row_spectrum")?, "landscape.row_spectrum")?,
            col_spectrum: Raw::required(raw.f64_list("landscape.col_spectrum")?, "landscape.col_spectrum")?,
            noise_std: raw.f64("landscape.noise_std")?.unwrap_or(1.0),
        },
        other => {
            return Err(err(
                kind.line,
                format!("landscape.kind must be quadratic, river_valley, mlp or kronecker, got `{other}`"),
            ))
        }
    };
    Ok(l)
}

fn parse_lite(raw: &mut Raw, chi_from_optimizer: Option<f64>) -> Result<LitePolicy<f64>, HarnessError> {
    let mut p = LitePolicy::identity();
    let line_of = |raw: &Raw, k: &str| raw.entries.get(k).map(|e| e.line).unwrap_or(0);
    let lite_line = KEYS
        .iter()
        .filter(|k| k.starts_with("lite."))
        .map(|k| line_of(raw, k))
        .max()
        .unwrap_or(0);
    if let Some(c) = raw.f64("lite.chi")? {
        if chi_from_optimizer.is_some() {
            return Err(err(lite_line, "chi given in both optimizer and lite sections"));
        }
        p.chi = c;
    } else if let Some(c) = chi_from_optimizer {
        p.chi = c;
    }
    macro_rules! set {
        ($field:ident) => {
            if let Some(v) = raw.f64(concat!("lite.", stringify!($field)))? {
                p.$field = v;
            }
        };
    }
    set!(beta1);
    set!(beta2);
    set!(r_s);
    set!(d_smooth_ratio);
    set!(adam_beta1);
    set!(adam_beta2);
    p.chi_embedding = raw.f64("lite.chi_embedding")?;
    p.chi_norm = raw.f64("lite.chi_norm")?;
    p.validate().map_err(|e| HarnessError::Config {
        line: (lite_line > 0).then_some(lite_line),
        msg: strip_prefix(e),
    })?;
    Ok(p)
}

fn strip_prefix(e: lite_core::Error) -> String {
    match e {
        lite_core::Error::Config(m) => m,
        other => other.to_string(),
    }
}

fn parse_optimizer(raw: &mut Raw, landscape: &LandscapeConfig) -> Result<OptimizerChoice, HarnessError> {
    let fam = Raw::required(raw.string("optimizer.family"), "optimizer.family")?;
    if fam.value == "momentum" {
        if !matches!(landscape, LandscapeConfig::Quadratic { .. }) {
            return Err(err(fam.line, "family momentum requires a quadratic landscape"));
        }
        if let Some(e) = raw.entries.iter().find(|(k, _)| k.starts_with("lite.") || *k == "optimizer.chi") {
            return Err(err(e.1.line, "chi requires a lite family"));
        }
        let alpha = Raw::required(raw.f64("optimizer.alpha")?, "optimizer.alpha")?;
        let beta = raw.f64("optimizer.beta")?.unwrap_or(0.0);
        if !(alpha > 0.0 && alpha < 2.0) {
            return Err(err(fam.line, "optimizer.alpha must lie in (0, 2)"));
        }
        return Ok(OptimizerChoice::Momentum { alpha, beta });
    }
    let family = Family::parse(&fam.value).ok_or_else(|| err(fam.line, format!("unknown optimizer family `{}`", fam.value)))?;
    if !family.is_lite() {
        if let Some(e) = raw.entries.get("optimizer.chi") {
            return Err(err(e.line, "chi requires a lite family"));
        }
        if let Some((k, e)) = raw.entries.iter().find(|(k, _)| k.starts_with("lite.")) {
            let what = if k == "lite.chi" { "chi".to_string() } else { k.clone() };
            return Err(err(e.line, format!("{what} requires a lite family")));
        }
    }
    let mut cfg = OptimizerConfig::new(family);
    macro_rules! set {
        ($field:ident) => {
            if let Some(v) = raw.f64(concat!("optimizer.", stringify!($field)))? {
                cfg.$field = v;
            }
        };
    }
    set!(theta);
    set!(beta_v);
    set!(theta_shampoo);
    set!(epsilon);
    set!(weight_decay);
    set!(nesterov_beta);
    set!(mars_gamma);
    set!(ademamix_kappa);
    set!(alpha_fast);
    set!(alpha_slow);
    if let Some(e) = raw.take("optimizer.clip_norm") {
        cfg.clip_norm = match e.value.as_str() {
            "none" => None,
            s => Some(
                s.parse::<f64>()
                    .ok()
                    .filter(|x| x.is_finite())
                    .ok_or_else(|| err(e.line, format!("optimizer.clip_norm: expected a number or `none`, got `{s}`")))?,
            ),
        };
    }
    if let Some(k) = raw.usize("optimizer.qr_refresh_every")? {
        cfg.qr_refresh_every = k;
    }
    if let Some(n) = raw.usize("optimizer.ns_iterations")? {
        cfg.ns = NsSchedule::minimax(n);
    }
    let chi = raw.f64("optimizer.chi")?;
    if family.is_lite() {
        cfg.lite = Some(parse_lite(raw, chi)?);
    }
    cfg.validate().map_err(|e| HarnessError::Config {
        line: Some(fam.line),
        msg: strip_prefix(e),
    })?;
    Ok(OptimizerChoice::Routed(cfg))
}

fn parse_schedule(raw: &mut Raw, steps: usize) -> Result<ScheduleSpec<f64>, HarnessError> {
    let kind = match raw.string("schedule.kind") {
        None => ScheduleKind::Constant,
        Some(e) => ScheduleKind::parse(&e.value)
            .ok_or_else(|| err(e.line, format!("schedule.kind must be cos, wsd or constant, got `{}`", e.value)))?,
    };
    let lr_line = raw.entries.get("schedule.lr").map(|e| e.line);
    let lr_max = Raw::required(raw.f64("schedule.lr")?, "schedule.lr")?;
    if !(lr_max >= 0.0) {
        return Err(err(lr_line.unwrap_or(0), "schedule.lr must be non-negative"));
    }
    let warmup_steps = raw.usize("schedule.warmup_steps")?.unwrap_or(0);
    let total_steps = raw.usize("schedule.total_steps")?.unwrap_or(steps);
    if total_steps < steps {
        return Err(HarnessError::Config {
            line: None,
            msg: format!("schedule.total_steps ({total_steps}) is shorter than run.steps ({steps})"),
        });
    }
    if warmup_steps > total_steps {
        return Err(HarnessError::Config {
            line: None,
            msg: "schedule.warmup_steps exceeds schedule.total_steps".into(),
        });
    }
    Ok(ScheduleSpec {
        kind,
        lr_max,
        warmup_steps,
        total_steps,
    })
}

fn parse_align(raw: &mut Raw) -> Result<AlignSettings, HarnessError> {
    let mut a = AlignSettings::default();
    if let Some(d) = raw.usize("align.d_s")? {
        a.d_s = d;
    }
    a.k_grid = raw.usize_list("align.k_grid")?;
    if let Some(b) = raw.usize("align.gram_batches")? {
        a.gram_batches = b;
    }
    if let Some(t) = raw.usize("align.train_steps")? {
        a.train_steps = t;
    }
    if a.d_s == 0 || a.gram_batches == 0 {
        return Err(HarnessError::Config {
            line: None,
            msg: "align.d_s and align.gram_batches must be positive".into(),
        });
    }
    Ok(a)
}

pub fn parse_config(text: &str) -> Result<ExperimentConfig, HarnessError> {
    let mut raw = Raw::parse(text)?;
    let seed = Raw::required(raw.u64("run.seed")?, "run.seed")?;
    let steps = Raw::required(raw.usize("run.steps")?, "run.steps")?;
    let log_every = raw.usize("run.log_every")?.unwrap_or(1);
    if log_every == 0 {
        return Err(HarnessError::Config {
            line: None,
            msg: "run.log_every must be positive".into(),
        });
    }
    let output = raw.string("run.output").map(|e| PathBuf::from(e.value));
    let landscape = parse_landscape(&mut raw)?;
    let optimizer = parse_optimizer(&mut raw, &landscape)?;
    let schedule = parse_schedule(&mut raw, steps)?;
    let align = parse_align(&mut raw)?;
    raw.finish()?;
    Ok(ExperimentConfig {
        seed,
        steps,
        log_every,
        output,
        landscape,
        optimizer,
        schedule,
        align,
    })
}

pub fn load_config(path: &std::path::Path) -> Result<ExperimentConfig, HarnessError> {
    let text = std::fs::read_to_string(path).map_err(|e| HarnessError::Io {
        path: path.display().to_string(),
        msg: e.to_string(),
    })?;
    parse_config(&text)
}
