//! Sectioned key-value configuration: file parsing, strict per-model key
//! validation, and merging with command-line flags (flags win over file
//! values, which win over defaults).

use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;

use pdeobs::models::burgers::{self, BurgersConfig};
use pdeobs::models::heat::{self, HeatConfig};
use pdeobs::models::linpair::{linear_pair_estimation_space, linear_pair_model, LinearPairConfig};
use pdeobs::models::swe::{self, SweConfig};
use pdeobs::models::wave::WaveConfig;
use pdeobs::{EstimationSpace, ModelSpec, Weighting};

/// Failures carry the exit-code split: configuration problems exit 2,
/// anything downstream of a valid configuration (numerics, I/O) exits 3
/// with the failing stage named.
#[derive(Debug)]
pub enum CliError {
    Config(String),
    Failure { stage: String, message: String },
}

pub type CliResult<T> = Result<T, CliError>;

impl CliError {
    pub fn config(message: impl Into<String>) -> Self {
        CliError::Config(message.into())
    }

    pub fn failure(stage: &str, message: impl ToString) -> Self {
        CliError::Failure {
            stage: stage.to_string(),
            message: message.to_string(),
        }
    }

    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Failure { .. } => 3,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "configuration error: {}", m),
            CliError::Failure { stage, message } => {
                write!(f, "failure during {}: {}", stage, message)
            }
        }
    }
}

/// Map a library error raised while BUILDING a model (bad parameters) to a
/// configuration error, and anything raised while RUNNING to a failure.
fn build_err(e: pdeobs::Error) -> CliError {
    match e {
        pdeobs::Error::Config(m) => CliError::Config(m),
        other => CliError::failure("building the model", other),
    }
}

/// Command-line flags shared by every subcommand; `None` means "not given".
#[derive(Debug, Default, Clone)]
pub struct Flags {
    pub config: Option<PathBuf>,
    pub model: Option<String>,
    pub rho: Option<String>,
    pub jobs: Option<usize>,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub flat_source: Option<String>,
    pub literal_h0: Option<String>,
    pub weighting: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RhoChoice {
    Auto,
    Fixed(f64),
}

/// Fully merged, validated run settings.
#[derive(Debug)]
pub struct Settings {
    pub model_id: String,
    /// Raw `[model]` keys (minus `id`); validated against the per-model key
    /// set when the model is built.
    pub model_keys: BTreeMap<String, String>,
    /// Raw `[estimation]` keys; validated per model.
    pub estimation_keys: BTreeMap<String, String>,
    pub rho: RhoChoice,
    pub weighting: Option<Weighting>,
    pub sweep: Option<Vec<usize>>,
    pub sensors: Option<Vec<Vec<f64>>>,
    pub seed: u64,
    pub out_dir: PathBuf,
    pub jobs: Option<usize>,
    pub direct: bool,
    pub flat_source: Option<bool>,
    pub literal_h0: Option<bool>,
}

/// A parsed configuration file: section name -> ordered key/value map.
#[derive(Debug, Default)]
pub struct FileConfig {
    pub sections: BTreeMap<String, BTreeMap<String, String>>,
}

pub fn parse_file(text: &str) -> CliResult<FileConfig> {
    let mut cfg = FileConfig::default();
    let mut current: Option<String> = None;
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        if let Some(name) = line.strip_prefix('[') {
            let name = name
                .strip_suffix(']')
                .ok_or_else(|| {
                    CliError::config(format!("line {}: unterminated section header", lineno + 1))
                })?
                .trim()
                .to_string();
            if !matches!(name.as_str(), "model" | "estimation" | "run") {
                return Err(CliError::config(format!(
                    "line {}: unknown section [{}] (expected [model], [estimation] or [run])",
                    lineno + 1,
                    name
                )));
            }
            if cfg.sections.contains_key(&name) {
                return Err(CliError::config(format!(
                    "line {}: section [{}] given twice",
                    lineno + 1,
                    name
                )));
            }
            cfg.sections.insert(name.clone(), BTreeMap::new());
            current = Some(name);
            continue;
        }
        let section = current.as_ref().ok_or_else(|| {
            CliError::config(format!("line {}: key outside of any section", lineno + 1))
        })?;
        let (key, value) = line.split_once('=').ok_or_else(|| {
            CliError::config(format!("line {}: expected `key = value`", lineno + 1))
        })?;
        let key = key.trim().to_string();
        let value = value.trim().to_string();
        if key.is_empty() {
            return Err(CliError::config(format!("line {}: empty key", lineno + 1)));
        }
        let slot = cfg.sections.get_mut(section).expect("section exists");
        if slot.insert(key.clone(), value).is_some() {
            return Err(CliError::config(format!(
                "line {}: key `{}` given twice in [{}]",
                lineno + 1,
                key,
                section
            )));
        }
    }
    Ok(cfg)
}

fn parse_f64(key: &str, v: &str) -> CliResult<f64> {
    let x: f64 = v
        .parse()
        .map_err(|_| CliError::config(format!("`{}` must be a number, got `{}`", key, v)))?;
    if !x.is_finite() {
        return Err(CliError::config(format!("`{}` must be finite", key)));
    }
    Ok(x)
}

fn parse_usize(key: &str, v: &str) -> CliResult<usize> {
    v.parse().map_err(|_| {
        CliError::config(format!(
            "`{}` must be a non-negative integer, got `{}`",
            key, v
        ))
    })
}

fn parse_switch(key: &str, v: &str) -> CliResult<bool> {
    match v {
        "on" => Ok(true),
        "off" => Ok(false),
        other => Err(CliError::config(format!(
            "`{}` must be `on` or `off`, got `{}`",
            key, other
        ))),
    }
}

fn parse_weighting(v: &str) -> CliResult<Weighting> {
    match v {
        "unweighted" => Ok(Weighting::UnweightedL2),
        "dt" => Ok(Weighting::DtWeightedL2),
        other => Err(CliError::config(format!(
            "`weighting` must be `unweighted` or `dt`, got `{}`",
            other
        ))),
    }
}

fn parse_rho(v: &str) -> CliResult<RhoChoice> {
    if v == "auto" {
        return Ok(RhoChoice::Auto);
    }
    let x = parse_f64("rho", v)?;
    if x <= 0.0 {
        return Err(CliError::config("`rho` must be positive"));
    }
    Ok(RhoChoice::Fixed(x))
}

fn parse_resolution_list(v: &str) -> CliResult<Vec<usize>> {
    let list: Vec<usize> = v
        .split(',')
        .map(|piece| parse_usize("sweep", piece.trim()))
        .collect::<CliResult<_>>()?;
    if list.is_empty() {
        return Err(CliError::config(
            "`sweep` must list at least one resolution",
        ));
    }
    Ok(list)
}

fn parse_sensor_groups(v: &str) -> CliResult<Vec<Vec<f64>>> {
    let mut groups = Vec::new();
    for group in v.split(';') {
        let coords: Vec<f64> = group
            .split(',')
            .map(|piece| parse_f64("sensors", piece.trim()))
            .collect::<CliResult<_>>()?;
        if coords.is_empty() {
            return Err(CliError::config("`sensors` has an empty candidate group"));
        }
        groups.push(coords);
    }
    if groups.is_empty() {
        return Err(CliError::config(
            "`sensors` must list at least one candidate",
        ));
    }
    Ok(groups)
}

fn parse_f64_list(key: &str, v: &str) -> CliResult<Vec<f64>> {
    v.split(',')
        .map(|piece| parse_f64(key, piece.trim()))
        .collect()
}

const RUN_KEYS: &[&str] = &[
    "rho",
    "seed",
    "weighting",
    "out",
    "sweep",
    "sensors",
    "jobs",
    "direct",
];

/// Merge flags over the (optional) file over the defaults into `Settings`.
/// `default_model` lets `wave-demo` run without an explicit model id.
pub fn merge(flags: &Flags, default_model: Option<&str>) -> CliResult<Settings> {
    let file = match &flags.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| {
                CliError::config(format!("cannot read config file {}: {}", path.display(), e))
            })?;
            parse_file(&text)?
        }
        None => FileConfig::default(),
    };

    let empty = BTreeMap::new();
    let run = file.sections.get("run").unwrap_or(&empty);
    for key in run.keys() {
        if !RUN_KEYS.contains(&key.as_str()) {
            return Err(CliError::config(format!(
                "unknown key `{}` in [run] (expected one of: {})",
                key,
                RUN_KEYS.join(", ")
            )));
        }
    }

    let mut model_keys = file.sections.get("model").cloned().unwrap_or_default();
    let file_model_id = model_keys.remove("id");
    let model_id = flags
        .model
        .clone()
        .or(file_model_id)
        .or_else(|| default_model.map(str::to_string))
        .ok_or_else(|| {
            CliError::config("no model selected: pass --model or set `id` in [model]")
        })?;

    // The shallow-water toggles may come from the [model] section; the
    // dedicated flags override them. For any other model both the keys and
    // the flags are rejected (by the per-model key sets / below).
    let mut flat_source = match model_keys.get("flat_source") {
        Some(v) if model_id == "swe" => {
            let b = parse_switch("flat_source", v)?;
            model_keys.remove("flat_source");
            Some(b)
        }
        _ => None,
    };
    let mut literal_h0 = match model_keys.get("literal_h0") {
        Some(v) if model_id == "swe" => {
            let b = parse_switch("literal_h0", v)?;
            model_keys.remove("literal_h0");
            Some(b)
        }
        _ => None,
    };
    if let Some(v) = &flags.flat_source {
        flat_source = Some(parse_switch("--flat-source", v)?);
    }
    if let Some(v) = &flags.literal_h0 {
        literal_h0 = Some(parse_switch("--literal-h0", v)?);
    }
    if model_id != "swe" && (flat_source.is_some() || literal_h0.is_some()) {
        return Err(CliError::config(
            "--flat-source / --literal-h0 only apply to the swe model",
        ));
    }

    let rho = match flags.rho.as_deref().or(run.get("rho").map(String::as_str)) {
        Some(v) => parse_rho(v)?,
        None => RhoChoice::Auto,
    };
    let weighting = match flags
        .weighting
        .as_deref()
        .or(run.get("weighting").map(String::as_str))
    {
        Some(v) => Some(parse_weighting(v)?),
        None => None,
    };
    let seed = match flags.seed {
        Some(s) => s,
        None => match run.get("seed") {
            Some(v) => v
                .parse()
                .map_err(|_| CliError::config(format!("`seed` must be an integer, got `{}`", v)))?,
            None => 0,
        },
    };
    let out_dir = flags
        .out
        .clone()
        .or_else(|| run.get("out").map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("out"));
    let jobs = match flags.jobs {
        Some(j) => Some(j),
        None => match run.get("jobs") {
            Some(v) => Some(parse_usize("jobs", v)?),
            None => None,
        },
    };
    if jobs == Some(0) {
        return Err(CliError::config("`jobs` must be at least 1"));
    }
    let sweep = match run.get("sweep") {
        Some(v) => Some(parse_resolution_list(v)?),
        None => None,
    };
    let sensors = match run.get("sensors") {
        Some(v) => Some(parse_sensor_groups(v)?),
        None => None,
    };
    let direct = match run.get("direct") {
        Some(v) => parse_switch("direct", v)?,
        None => false,
    };

    Ok(Settings {
        model_id,
        model_keys,
        estimation_keys: file.sections.get("estimation").cloned().unwrap_or_default(),
        rho,
        weighting,
        sweep,
        sensors,
        seed,
        out_dir,
        jobs,
        direct,
        flat_source,
        literal_h0,
    })
}

/// A ready-to-run model with its uncertainty space and reporting labels.
pub struct Bundle {
    pub model: ModelSpec,
    pub u0: Vec<f64>,
    pub space: EstimationSpace,
    /// Resolution label for the `N` report column.
    pub resolution: usize,
    /// Estimation-space dimension for the `s` report column.
    pub subspace: usize,
}

fn unknown_key(section: &str, key: &str, model: &str, allowed: &[&str]) -> CliError {
    CliError::config(format!(
        "unknown key `{}` in [{}] for model `{}` (expected one of: {})",
        key,
        section,
        model,
        allowed.join(", ")
    ))
}

fn estimation_dim(settings: &Settings, key: &str, default: usize) -> CliResult<usize> {
    let mut dim = default;
    for (k, v) in &settings.estimation_keys {
        if k == key {
            dim = parse_usize(k, v)?;
        } else {
            return Err(unknown_key("estimation", k, &settings.model_id, &[key]));
        }
    }
    if dim == 0 {
        return Err(CliError::config(format!("`{}` must be at least 1", key)));
    }
    Ok(dim)
}

fn reject_estimation_keys(settings: &Settings) -> CliResult<()> {
    if let Some((k, _)) = settings.estimation_keys.iter().next() {
        return Err(CliError::config(format!(
            "model `{}` takes no [estimation] keys, got `{}`",
            settings.model_id, k
        )));
    }
    Ok(())
}

pub fn build_heat_config(settings: &Settings) -> CliResult<HeatConfig> {
    const ALLOWED: &[&str] = &["length", "final_time", "sensor_x", "modes", "samples"];
    let mut cfg = HeatConfig::default();
    for (k, v) in &settings.model_keys {
        match k.as_str() {
            "length" => cfg.length = parse_f64(k, v)?,
            "final_time" => cfg.final_time = parse_f64(k, v)?,
            "sensor_x" => cfg.sensor_x = parse_f64(k, v)?,
            "modes" => cfg.modes = parse_usize(k, v)?,
            "samples" => cfg.samples = parse_usize(k, v)?,
            other => return Err(unknown_key("model", other, "heat", ALLOWED)),
        }
    }
    Ok(cfg)
}

pub fn build_wave_config(settings: &Settings) -> CliResult<WaveConfig> {
    const ALLOWED: &[&str] = &["length", "final_time", "interior_points", "cfl"];
    let mut cfg = WaveConfig::default();
    for (k, v) in &settings.model_keys {
        match k.as_str() {
            "length" => cfg.length = parse_f64(k, v)?,
            "final_time" => cfg.final_time = parse_f64(k, v)?,
            "interior_points" => cfg.interior_points = parse_usize(k, v)?,
            "cfl" => cfg.cfl = parse_f64(k, v)?,
            other => return Err(unknown_key("model", other, "wave", ALLOWED)),
        }
    }
    reject_estimation_keys(settings)?;
    Ok(cfg)
}

fn build_burgers_config(settings: &Settings) -> CliResult<BurgersConfig> {
    const ALLOWED: &[&str] = &[
        "length",
        "final_time",
        "viscosity",
        "grid",
        "samples",
        "substeps",
        "sensors",
        "advection",
    ];
    let mut cfg = BurgersConfig::default();
    for (k, v) in &settings.model_keys {
        match k.as_str() {
            "length" => cfg.length = parse_f64(k, v)?,
            "final_time" => cfg.final_time = parse_f64(k, v)?,
            "viscosity" => cfg.viscosity = parse_f64(k, v)?,
            "grid" => cfg.grid = parse_usize(k, v)?,
            "samples" => cfg.samples = parse_usize(k, v)?,
            "substeps" => cfg.substeps = parse_usize(k, v)?,
            "sensors" => cfg.sensors = parse_f64_list(k, v)?,
            "advection" => cfg.advection = parse_switch(k, v)?,
            other => return Err(unknown_key("model", other, "burgers", ALLOWED)),
        }
    }
    cfg.forcing_modes = estimation_dim(settings, "pairs", cfg.forcing_modes)?;
    Ok(cfg)
}

fn build_swe_config(settings: &Settings) -> CliResult<SweConfig> {
    const ALLOWED: &[&str] = &[
        "final_time",
        "elements",
        "poly_order",
        "gravity",
        "dt",
        "samples",
        "sensors",
        "filter",
    ];
    let mut cfg = SweConfig::default();
    for (k, v) in &settings.model_keys {
        match k.as_str() {
            "final_time" => cfg.final_time = parse_f64(k, v)?,
            "elements" => cfg.elements = parse_usize(k, v)?,
            "poly_order" => cfg.poly_order = parse_usize(k, v)?,
            "gravity" => cfg.gravity = parse_f64(k, v)?,
            "dt" => cfg.dt = parse_f64(k, v)?,
            "samples" => cfg.samples = parse_usize(k, v)?,
            "sensors" => cfg.sensors = parse_f64_list(k, v)?,
            "filter" => cfg.filter = parse_switch(k, v)?,
            other => return Err(unknown_key("model", other, "swe", ALLOWED)),
        }
    }
    if let Some(on) = settings.flat_source {
        cfg.topography_source = on;
    }
    if let Some(on) = settings.literal_h0 {
        cfg.surface_initial_data = on;
    }
    cfg.basis_pairs = estimation_dim(settings, "pairs", cfg.basis_pairs)?;
    Ok(cfg)
}

fn build_linpair_config(settings: &Settings) -> CliResult<LinearPairConfig> {
    const ALLOWED: &[&str] = &["coupling", "final_time", "samples"];
    let mut cfg = LinearPairConfig::default();
    for (k, v) in &settings.model_keys {
        match k.as_str() {
            "coupling" => cfg.coupling = parse_f64(k, v)?,
            "final_time" => cfg.final_time = parse_f64(k, v)?,
            "samples" => cfg.samples = parse_usize(k, v)?,
            other => return Err(unknown_key("model", other, "linpair", ALLOWED)),
        }
    }
    reject_estimation_keys(settings)?;
    Ok(cfg)
}

/// Build the model, initial state and estimation space for the settings,
/// optionally overriding the model's resolution (for sweeps).
pub fn build_bundle_at(settings: &Settings, resolution: Option<usize>) -> CliResult<Bundle> {
    let mut bundle = match settings.model_id.as_str() {
        "heat" => {
            let mut cfg = build_heat_config(settings)?;
            if let Some(n) = resolution {
                cfg.modes = n;
            }
            let s = estimation_dim(settings, "modes", 1)?;
            if s > cfg.modes {
                return Err(CliError::config(format!(
                    "estimation space uses {} modes but the model only carries {}",
                    s, cfg.modes
                )));
            }
            let model = heat::heat_model(&cfg).map_err(build_err)?;
            let space = heat::heat_estimation_space(&cfg, s).map_err(build_err)?;
            Bundle {
                model,
                u0: vec![0.0; cfg.modes],
                space,
                resolution: cfg.modes,
                subspace: s,
            }
        }
        "burgers" => {
            let mut cfg = build_burgers_config(settings)?;
            if let Some(n) = resolution {
                cfg.grid = n;
            }
            let model = burgers::burgers_model(&cfg).map_err(build_err)?;
            let space = burgers::burgers_estimation_space(&cfg).map_err(build_err)?;
            let u0 = burgers::default_initial_state(&cfg);
            Bundle {
                model,
                u0,
                space,
                resolution: cfg.grid,
                subspace: 2 * cfg.forcing_modes,
            }
        }
        "swe" => {
            let mut cfg = build_swe_config(settings)?;
            if let Some(n) = resolution {
                cfg.elements = n;
            }
            let mesh = swe::build_mesh(&cfg).map_err(build_err)?;
            let model = swe::swe_model(&cfg).map_err(build_err)?;
            let space = swe::swe_estimation_space(&cfg, &mesh).map_err(build_err)?;
            let u0 = swe::default_initial_state(&cfg, &mesh);
            Bundle {
                model,
                u0,
                space,
                resolution: cfg.elements,
                subspace: 2 * cfg.basis_pairs + 1,
            }
        }
        "linpair" => {
            if resolution.is_some() {
                return Err(CliError::config(
                    "the linpair model has no discretization resolution to sweep",
                ));
            }
            let cfg = build_linpair_config(settings)?;
            let model = linear_pair_model(&cfg).map_err(build_err)?;
            Bundle {
                model,
                u0: vec![1.0, 1.0],
                space: linear_pair_estimation_space(),
                resolution: 2,
                subspace: 2,
            }
        }
        "wave" => {
            return Err(CliError::config(
                "the wave model is driven by the wave-demo command",
            ));
        }
        other => {
            return Err(CliError::config(format!(
                "unknown model `{}` (run `pdeobs models` for the list)",
                other
            )));
        }
    };
    if let Some(w) = settings.weighting {
        bundle.model.weighting = w;
    }
    Ok(bundle)
}

pub fn build_bundle(settings: &Settings) -> CliResult<Bundle> {
    build_bundle_at(settings, None)
}

/// Default resolution ladder for `sweep`.
pub fn default_sweep(model_id: &str) -> CliResult<Vec<usize>> {
    match model_id {
        "heat" => Ok((3..=8).collect()),
        "burgers" => Ok((5..=21).map(|k| 4 * k).collect()),
        "swe" => Ok(vec![6, 9, 14, 18, 22, 34, 42, 46, 49, 54]),
        "wave" => Ok(vec![20, 40, 80]),
        other => Err(CliError::config(format!(
            "model `{}` has no resolution ladder to sweep",
            other
        ))),
    }
}

/// Default sensor-placement candidates for `sensors`.
pub fn default_sensor_groups(settings: &Settings) -> CliResult<Vec<Vec<f64>>> {
    match settings.model_id.as_str() {
        "heat" => {
            let cfg = build_heat_config(settings)?;
            let l = cfg.length;
            Ok(vec![vec![cfg.sensor_x], vec![l / 4.0], vec![l / 2.0]])
        }
        "burgers" => {
            let cfg = build_burgers_config(settings)?;
            let l = cfg.length;
            Ok(vec![
                vec![l / 4.0, l / 2.0, 3.0 * l / 4.0],
                vec![l / 2.0, l / 2.0, l / 2.0],
            ])
        }
        "swe" => Ok(vec![vec![0.2, 0.5, 0.8], vec![-0.5, 0.0, 0.5]]),
        other => Err(CliError::config(format!(
            "model `{}` has no sensor-placement candidates",
            other
        ))),
    }
}

/// Build the per-candidate observation map for `sensors`.
pub fn make_candidate_observe(
    settings: &Settings,
    positions: &[f64],
) -> CliResult<(pdeobs::model::ObserveFn, usize)> {
    match settings.model_id.as_str() {
        "heat" => {
            if positions.len() != 1 {
                return Err(CliError::config(
                    "heat sensor candidates are single locations",
                ));
            }
            let cfg = build_heat_config(settings)?;
            let f = heat::make_observe(&cfg, positions[0]).map_err(build_err)?;
            Ok((f, 1))
        }
        "burgers" => {
            let cfg = build_burgers_config(settings)?;
            let f = burgers::make_observe(&cfg, positions.to_vec()).map_err(build_err)?;
            Ok((f, positions.len()))
        }
        "swe" => {
            let cfg = build_swe_config(settings)?;
            let f = swe::make_observe(&cfg, positions.to_vec()).map_err(build_err)?;
            Ok((f, positions.len()))
        }
        other => Err(CliError::config(format!(
            "model `{}` has no sensor-placement candidates",
            other
        ))),
    }
}

/// Canonical text snapshot of the effective settings, written into the run
/// record so a run can be reproduced from its outputs alone.
pub fn snapshot(settings: &Settings, resolved_rho: Option<f64>) -> String {
    let mut s = String::new();
    s.push_str("[model]\n");
    s.push_str(&format!("id = {}\n", settings.model_id));
    for (k, v) in &settings.model_keys {
        s.push_str(&format!("{} = {}\n", k, v));
    }
    if let Some(on) = settings.flat_source {
        s.push_str(&format!(
            "flat_source = {}\n",
            if on { "on" } else { "off" }
        ));
    }
    if let Some(on) = settings.literal_h0 {
        s.push_str(&format!("literal_h0 = {}\n", if on { "on" } else { "off" }));
    }
    if !settings.estimation_keys.is_empty() {
        s.push_str("[estimation]\n");
        for (k, v) in &settings.estimation_keys {
            s.push_str(&format!("{} = {}\n", k, v));
        }
    }
    s.push_str("[run]\n");
    match settings.rho {
        RhoChoice::Auto => s.push_str("rho = auto\n"),
        RhoChoice::Fixed(x) => s.push_str(&format!("rho = {:.16e}\n", x)),
    }
    if let Some(x) = resolved_rho {
        s.push_str(&format!("resolved_rho = {:.16e}\n", x));
    }
    s.push_str(&format!("seed = {}\n", settings.seed));
    if let Some(w) = settings.weighting {
        s.push_str(&format!(
            "weighting = {}\n",
            match w {
                Weighting::UnweightedL2 => "unweighted",
                Weighting::DtWeightedL2 => "dt",
            }
        ));
    }
    if let Some(sweep) = &settings.sweep {
        let list: Vec<String> = sweep.iter().map(|n| n.to_string()).collect();
        s.push_str(&format!("sweep = {}\n", list.join(",")));
    }
    if let Some(groups) = &settings.sensors {
        let list: Vec<String> = groups
            .iter()
            .map(|g| {
                g.iter()
                    .map(|x| format!("{:.16e}", x))
                    .collect::<Vec<_>>()
                    .join(",")
            })
            .collect();
        s.push_str(&format!("sensors = {}\n", list.join(";")));
    }
    if let Some(j) = settings.jobs {
        s.push_str(&format!("jobs = {}\n", j));
    }
    s.push_str(&format!(
        "direct = {}\n",
        if settings.direct { "on" } else { "off" }
    ));
    s.push_str(&format!("out = {}\n", settings.out_dir.display()));
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    fn flags(model: &str) -> Flags {
        Flags {
            model: Some(model.to_string()),
            ..Flags::default()
        }
    }

    #[test]
    fn files_parse_sections_keys_and_comments() {
        let cfg = parse_file(
            "# heading comment\n\
             [model]\n\
             id = heat   \n\
             \n\
             [run]\n\
             rho = 1e-3\n",
        )
        .unwrap();
        assert_eq!(cfg.sections["model"]["id"], "heat");
        assert_eq!(cfg.sections["run"]["rho"], "1e-3");
        assert!(!cfg.sections.contains_key("estimation"));
    }

    #[test]
    fn malformed_files_are_rejected_with_line_numbers() {
        for (text, needle) in [
            ("[weird]\n", "unknown section"),
            ("[model]\n[model]\n", "given twice"),
            ("[model]\nx = 1\nx = 2\n", "given twice"),
            ("x = 1\n", "outside of any section"),
            ("[model]\njust words\n", "expected `key = value`"),
            ("[model\n", "unterminated"),
            ("[model]\n = 3\n", "empty key"),
        ] {
            let err = parse_file(text).unwrap_err();
            let msg = err.to_string();
            assert!(
                msg.contains(needle) && msg.contains("line "),
                "for {:?} expected `{}` with a line number, got: {}",
                text,
                needle,
                msg
            );
        }
    }

    #[test]
    fn scalar_parsers_accept_and_reject() {
        assert_eq!(parse_rho("auto").unwrap(), RhoChoice::Auto);
        assert_eq!(parse_rho("0.5").unwrap(), RhoChoice::Fixed(0.5));
        assert!(parse_rho("0").is_err());
        assert!(parse_rho("-1e-3").is_err());
        assert!(parse_rho("lots").is_err());

        assert!(parse_switch("k", "on").unwrap());
        assert!(!parse_switch("k", "off").unwrap());
        assert!(parse_switch("k", "true").is_err());

        assert!(matches!(
            parse_weighting("dt").unwrap(),
            Weighting::DtWeightedL2
        ));
        assert!(matches!(
            parse_weighting("unweighted").unwrap(),
            Weighting::UnweightedL2
        ));
        assert!(parse_weighting("l2").is_err());

        assert!(parse_f64("k", "inf").is_err());
        assert!(parse_f64("k", "nan").is_err());
    }

    #[test]
    fn list_parsers_split_and_trim() {
        assert_eq!(parse_resolution_list("3, 4,5").unwrap(), vec![3, 4, 5]);
        assert!(parse_resolution_list("3, x").is_err());
        assert_eq!(
            parse_sensor_groups("0.1, 0.2; 0.3").unwrap(),
            vec![vec![0.1, 0.2], vec![0.3]]
        );
        assert!(parse_sensor_groups("0.1; oops").is_err());
    }

    #[test]
    fn merge_applies_defaults_without_a_file() {
        let s = merge(&flags("heat"), None).unwrap();
        assert_eq!(s.model_id, "heat");
        assert_eq!(s.rho, RhoChoice::Auto);
        assert_eq!(s.seed, 0);
        assert_eq!(s.out_dir, PathBuf::from("out"));
        assert!(s.weighting.is_none());
        assert!(s.sweep.is_none());
        assert!(!s.direct);
    }

    #[test]
    fn merge_requires_a_model_from_somewhere() {
        let err = merge(&Flags::default(), None).unwrap_err();
        assert!(err.to_string().contains("no model selected"));
        let s = merge(&Flags::default(), Some("wave")).unwrap();
        assert_eq!(s.model_id, "wave");
    }

    #[test]
    fn flags_take_precedence_over_the_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.cfg");
        std::fs::write(
            &path,
            "[model]\nid = burgers\n\n[run]\nrho = 0.5\nseed = 9\nout = from_file\n",
        )
        .unwrap();
        let f = Flags {
            config: Some(path),
            model: Some("heat".to_string()),
            rho: Some("1e-3".to_string()),
            ..Flags::default()
        };
        let s = merge(&f, None).unwrap();
        assert_eq!(s.model_id, "heat", "--model must override [model] id");
        assert_eq!(
            s.rho,
            RhoChoice::Fixed(1e-3),
            "--rho must override the file"
        );
        assert_eq!(s.seed, 9, "file seed applies when no flag is given");
        assert_eq!(s.out_dir, PathBuf::from("from_file"));
    }

    #[test]
    fn unknown_run_keys_and_zero_jobs_are_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let bogus = dir.path().join("a.cfg");
        std::fs::write(&bogus, "[run]\nfrobnicate = 1\n").unwrap();
        let err = merge(
            &Flags {
                config: Some(bogus),
                model: Some("heat".to_string()),
                ..Flags::default()
            },
            None,
        )
        .unwrap_err();
        assert!(err.to_string().contains("frobnicate"), "got: {}", err);

        let zero = dir.path().join("b.cfg");
        std::fs::write(&zero, "[run]\njobs = 0\n").unwrap();
        let err = merge(
            &Flags {
                config: Some(zero),
                model: Some("heat".to_string()),
                ..Flags::default()
            },
            None,
        )
        .unwrap_err();
        assert!(err.to_string().contains("jobs"), "got: {}", err);
    }

    #[test]
    fn swe_toggles_are_fenced_to_swe() {
        let f = Flags {
            model: Some("heat".to_string()),
            flat_source: Some("off".to_string()),
            ..Flags::default()
        };
        let err = merge(&f, None).unwrap_err();
        assert!(err.to_string().contains("only apply to the swe model"));

        let f = Flags {
            model: Some("swe".to_string()),
            flat_source: Some("off".to_string()),
            literal_h0: Some("on".to_string()),
            ..Flags::default()
        };
        let s = merge(&f, None).unwrap();
        assert_eq!(s.flat_source, Some(false));
        assert_eq!(s.literal_h0, Some(true));
    }

    #[test]
    fn config_snapshots_round_trip_the_resolved_settings() {
        let s = merge(&flags("heat"), None).unwrap();
        let snap = snapshot(&s, Some(1e-3));
        assert!(snap.contains("id = heat"), "snapshot:\n{}", snap);
        assert!(snap.contains("rho = auto"), "snapshot:\n{}", snap);
        assert!(
            snap.contains("resolved_rho = 1.0000000000000000e-3"),
            "snapshot must record the resolved rho:\n{}",
            snap
        );
        assert!(snap.contains("seed = 0"));
        assert!(snap.contains("direct = off"));
    }
}
