//! Batch front-end for replicator-core: resolves a JSON experiment config
//! (optionally overridden by flags), validates it, dispatches to the
//! library and writes `<kind>_<hash>.{json,csv}` artifacts.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::{json, Map, Value};

use replicator_core::dynamics::DynamicsSpec;
use replicator_core::engine::{short_hash, SimConfig, SimulationJob};
use replicator_core::experiment::{run_experiment, Experiment, KINDS};
use replicator_core::game::{GameDef, GameSpec};

/// Exit status for configuration problems.
pub const EXIT_CONFIG: u8 = 2;
/// Exit status for failures while running a valid config.
pub const EXIT_RUNTIME: u8 = 3;

/// One problem with a config, tied to the offending field.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Diagnostic {
    pub field: String,
    pub message: String,
}

impl Diagnostic {
    fn new(field: impl Into<String>, message: impl Into<String>) -> Self {
        Self { field: field.into(), message: message.into() }
    }

    /// Splits a library message of the form `path: text` into field and text.
    fn from_library(default_field: &str, err: &replicator_core::Error) -> Self {
        let text = match err {
            replicator_core::Error::InvalidArgument(m) => m.clone(),
            other => other.to_string(),
        };
        match text.split_once(": ") {
            Some((head, rest)) if is_path(head) => {
                let root = head.split(['.', '[']).next().unwrap_or(head);
                let field = match root {
                    "game" | "sim" | "dynamics" | "params" | "config" => head.to_string(),
                    "noise" | "variant" | "rates" => format!("dynamics.{head}"),
                    _ => format!("{default_field}.{head}"),
                };
                Self::new(field, rest)
            }
            _ => Self::new(default_field, text),
        }
    }
}

fn is_path(s: &str) -> bool {
    !s.is_empty() && s.chars().all(|c| c.is_ascii_alphanumeric() || "._[]".contains(c))
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.field, self.message)
    }
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("invalid config: {}", .0.iter().map(ToString::to_string).collect::<Vec<_>>().join("; "))]
    Config(Vec<Diagnostic>),
    #[error("{0}")]
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => EXIT_CONFIG,
            CliError::Runtime(_) => EXIT_RUNTIME,
        }
    }

    fn config(field: &str, message: impl Into<String>) -> Self {
        CliError::Config(vec![Diagnostic::new(field, message)])
    }
}

/// Command-line overrides; each one replaces the matching config field.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub kind: Option<String>,
    /// A path or an inline JSON object.
    pub game: Option<String>,
    pub variant: Option<String>,
    /// Constant noise coefficient for every strategy.
    pub eta: Option<f64>,
    pub rate: Option<f64>,
    pub seed: Option<u64>,
    pub horizon: Option<f64>,
    pub dt: Option<f64>,
    pub integrator: Option<String>,
    pub record_stride: Option<usize>,
    pub runs: Option<usize>,
    pub output_dir: Option<PathBuf>,
    /// `dotted.path=json` assignments, applied last.
    pub set: Vec<String>,
}

fn object_at<'a>(root: &'a mut Map<String, Value>, key: &str) -> &'a mut Map<String, Value> {
    let entry = root.entry(key.to_string()).or_insert_with(|| json!({}));
    if !entry.is_object() {
        *entry = json!({});
    }
    entry.as_object_mut().unwrap()
}

/// Reads a config file (or starts from `{}`) and applies the overrides.
/// Relative game paths in the file are resolved against the file's
/// directory; those given as flags against the working directory.
pub fn load_config(path: Option<&Path>, overrides: &Overrides) -> Result<Value, CliError> {
    let mut root = match path {
        Some(p) => {
            let text = fs::read_to_string(p)
                .map_err(|e| CliError::config("config", format!("cannot read {}: {e}", p.display())))?;
            let value: Value = serde_json::from_str(&text)
                .map_err(|e| CliError::config("config", format!("malformed JSON in {}: {e}", p.display())))?;
            let Value::Object(mut obj) = value else {
                return Err(CliError::config("config", "expected a JSON object"));
            };
            if let Some(Value::String(g)) = obj.get("game") {
                let base = p.parent().unwrap_or(Path::new("."));
                let resolved = base.join(g);
                obj.insert("game".into(), Value::String(resolved.to_string_lossy().into_owned()));
            }
            obj
        }
        None => Map::new(),
    };
    if let Some(kind) = &overrides.kind {
        root.insert("kind".into(), json!(kind));
    }
    if let Some(game) = &overrides.game {
        let value = if game.trim_start().starts_with('{') {
            serde_json::from_str(game).map_err(|e| CliError::config("game", format!("malformed inline JSON: {e}")))?
        } else {
            Value::String(game.clone())
        };
        root.insert("game".into(), value);
    }
    if overrides.variant.is_some() || overrides.eta.is_some() || overrides.rate.is_some() {
        let dynamics = object_at(&mut root, "dynamics");
        if let Some(v) = &overrides.variant {
            dynamics.insert("variant".into(), json!(v));
        }
        if let Some(eta) = overrides.eta {
            dynamics.insert("noise".into(), json!({"kind": "constant", "coefficients": eta}));
        }
        if let Some(rate) = overrides.rate {
            dynamics.insert("rates".into(), json!(rate));
        }
    }
    let sim_fields = [
        ("seed", overrides.seed.map(|v| json!(v))),
        ("horizon", overrides.horizon.map(|v| json!(v))),
        ("dt", overrides.dt.map(|v| json!(v))),
        ("integrator", overrides.integrator.as_ref().map(|v| json!(v))),
        ("record_stride", overrides.record_stride.map(|v| json!(v))),
    ];
    for (key, value) in sim_fields {
        if let Some(v) = value {
            object_at(&mut root, "sim").insert(key.into(), v);
        }
    }
    if let Some(runs) = overrides.runs {
        object_at(&mut root, "params").insert("runs".into(), json!(runs));
    }
    if let Some(dir) = &overrides.output_dir {
        root.insert("output_dir".into(), json!(dir));
    }
    for assignment in &overrides.set {
        let (path, raw) = assignment
            .split_once('=')
            .ok_or_else(|| CliError::config("set", format!("expected path=value, got {assignment:?}")))?;
        let value = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
        let mut keys: Vec<&str> = path.split('.').collect();
        let last = keys.pop().filter(|k| !k.is_empty()).ok_or_else(|| CliError::config("set", "empty path"))?;
        let mut target = &mut root;
        for key in keys {
            target = object_at(target, key);
        }
        target.insert(last.to_string(), value);
    }
    Ok(Value::Object(root))
}

/// A config after parsing and checking.
#[derive(Debug, Clone)]
pub struct Resolved {
    pub experiment: Experiment,
    pub game: Option<GameDef>,
    pub game_spec: Option<GameSpec>,
    pub dynamics: Option<DynamicsSpec>,
    pub sim: SimConfig,
    pub output_dir: PathBuf,
}

impl Resolved {
    /// The fully resolved config; its hash names the output files.
    pub fn canonical(&self) -> Value {
        json!({
            "experiment": self.experiment,
            "game": self.game_spec.as_ref().map(GameSpec::to_value),
            "dynamics": self.dynamics,
            "sim": self.sim,
        })
    }

    pub fn hash(&self) -> String {
        short_hash(self.canonical().to_string().as_bytes())
    }
}

const TOP_LEVEL: [&str; 6] = ["kind", "game", "dynamics", "sim", "params", "output_dir"];

fn load_game(value: &Value) -> Result<GameSpec, Diagnostic> {
    let inline;
    let value = match value {
        Value::String(path) => {
            let text = fs::read_to_string(path)
                .map_err(|e| Diagnostic::new("game", format!("cannot read game file {path}: {e}")))?;
            inline = serde_json::from_str::<Value>(&text)
                .map_err(|e| Diagnostic::new("game", format!("malformed JSON in {path}: {e}")))?;
            &inline
        }
        other => other,
    };
    let spec = GameSpec::from_value(value).map_err(|e| Diagnostic::from_library("game", &e))?;
    spec.build().map_err(|e| Diagnostic::from_library("game", &e))?;
    Ok(spec)
}

/// Parses and checks a config without running anything.
pub fn resolve(config: &Value) -> Result<Resolved, Vec<Diagnostic>> {
    let mut diags = Vec::new();
    let Some(obj) = config.as_object() else {
        return Err(vec![Diagnostic::new("config", "expected a JSON object")]);
    };
    for key in obj.keys() {
        if !TOP_LEVEL.contains(&key.as_str()) {
            diags.push(Diagnostic::new(key.clone(), format!("unknown field (expected one of {})", TOP_LEVEL.join(", "))));
        }
    }

    let experiment = match obj.get("kind") {
        None => {
            diags.push(Diagnostic::new("kind", "missing"));
            None
        }
        Some(Value::String(k)) if KINDS.contains(&k.as_str()) => {
            let mut tagged = match obj.get("params") {
                None => Map::new(),
                Some(Value::Object(p)) => p.clone(),
                Some(_) => {
                    diags.push(Diagnostic::new("params", "expected an object"));
                    Map::new()
                }
            };
            tagged.insert("kind".into(), json!(k));
            match serde_json::from_value::<Experiment>(Value::Object(tagged)) {
                Ok(e) => Some(e),
                Err(e) => {
                    diags.push(Diagnostic::new("params", e.to_string()));
                    None
                }
            }
        }
        Some(other) => {
            diags.push(Diagnostic::new(
                "kind",
                format!("unknown experiment kind {other} (expected one of {})", KINDS.join(", ")),
            ));
            None
        }
    };

    let game_spec = match obj.get("game") {
        Some(v) => match load_game(v) {
            Ok(spec) => Some(spec),
            Err(d) => {
                diags.push(d);
                None
            }
        },
        None => None,
    };
    let game = game_spec.as_ref().and_then(|s| s.build().ok());

    let dynamics = match obj.get("dynamics") {
        Some(v) => match serde_json::from_value::<DynamicsSpec>(v.clone()) {
            Ok(d) => Some(d),
            Err(e) => {
                diags.push(Diagnostic::new("dynamics", e.to_string()));
                None
            }
        },
        None => None,
    };
    if let (Some(d), Some(g)) = (&dynamics, &game) {
        if let Err(e) = d.validate(g) {
            diags.push(Diagnostic::from_library("dynamics", &e));
        }
    }

    let sim = match obj.get("sim") {
        Some(v) => match serde_json::from_value::<SimConfig>(v.clone()) {
            Ok(s) => Some(s),
            Err(e) => {
                diags.push(Diagnostic::new("sim", e.to_string()));
                None
            }
        },
        None => Some(SimConfig::default()),
    };
    if let Some(s) = &sim {
        if let Err(e) = s.validate() {
            diags.push(Diagnostic::from_library("sim", &e));
        }
    }

    let output_dir = match obj.get("output_dir") {
        None => PathBuf::from("results"),
        Some(Value::String(p)) => PathBuf::from(p),
        Some(_) => {
            diags.push(Diagnostic::new("output_dir", "expected a path string"));
            PathBuf::from("results")
        }
    };

    if let Some(exp) = &experiment {
        if exp.needs_game() && obj.get("game").is_none() {
            diags.push(Diagnostic::new("game", format!("required for kind {}", exp.kind())));
        }
        if exp.needs_dynamics() && obj.get("dynamics").is_none() {
            diags.push(Diagnostic::new("dynamics", format!("required for kind {}", exp.kind())));
        }
        let seeded = obj.get("sim").and_then(|s| s.get("seed")).is_some();
        if exp.is_stochastic() && !seeded {
            diags.push(Diagnostic::new("sim.seed", format!("a master seed is required for kind {}", exp.kind())));
        }
        let simulates = matches!(exp, Experiment::Simulate | Experiment::Ensemble { .. } | Experiment::Extinction { .. });
        if let (true, Some(g), Some(d), Some(s)) = (simulates, &game, &dynamics, &sim) {
            if d.validate(g).is_ok() && s.validate().is_ok() {
                if let Err(e) = SimulationJob::new(g, d, s.clone()).validate() {
                    diags.push(Diagnostic::from_library("sim", &e));
                }
            }
        }
    }

    if !diags.is_empty() {
        return Err(diags);
    }
    Ok(Resolved {
        experiment: experiment.unwrap(),
        game,
        game_spec,
        dynamics,
        sim: sim.unwrap(),
        output_dir,
    })
}

/// Schema and invariant diagnostics; empty when the config is runnable.
pub fn validate(config: &Value) -> Vec<Diagnostic> {
    resolve(config).err().unwrap_or_default()
}

/// What a run wrote.
#[derive(Debug, Clone, Serialize)]
pub struct RunSummary {
    pub kind: &'static str,
    pub config_hash: String,
    pub outputs: Vec<PathBuf>,
    pub summary: Value,
}

/// Runs a resolved config and writes its artifacts.
pub fn execute(resolved: &Resolved) -> Result<RunSummary, CliError> {
    let output = run_experiment(
        &resolved.experiment,
        resolved.game.as_ref(),
        resolved.dynamics.as_ref(),
        &resolved.sim,
    )
    .map_err(|e| match e {
        replicator_core::Error::InvalidArgument(_) => CliError::Config(vec![Diagnostic::from_library("params", &e)]),
        other => CliError::Runtime(other.to_string()),
    })?;
    let hash = resolved.hash();
    let stem = format!("{}_{hash}", output.kind);
    fs::create_dir_all(&resolved.output_dir)
        .map_err(|e| CliError::Runtime(format!("cannot create {}: {e}", resolved.output_dir.display())))?;
    let document = json!({
        "kind": output.kind,
        "config_hash": hash,
        "config": resolved.canonical(),
        "summary": output.summary,
        "report": output.report,
    });
    let mut outputs = Vec::new();
    let json_path = resolved.output_dir.join(format!("{stem}.json"));
    let text = serde_json::to_string_pretty(&document).map_err(|e| CliError::Runtime(e.to_string()))?;
    write(&json_path, format!("{text}\n").as_bytes())?;
    outputs.push(json_path);
    if let Some(csv) = &output.csv {
        let csv_path = resolved.output_dir.join(format!("{stem}.csv"));
        write(&csv_path, csv.as_bytes())?;
        outputs.push(csv_path);
    }
    Ok(RunSummary { kind: output.kind, config_hash: hash, outputs, summary: output.summary })
}

fn write(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    fs::write(path, bytes).map_err(|e| CliError::Runtime(format!("cannot write {}: {e}", path.display())))
}

/// Loads, validates and runs; returns the one-line JSON summary.
pub fn run(config_path: Option<&Path>, overrides: &Overrides) -> Result<String, CliError> {
    let config = load_config(config_path, overrides)?;
    let resolved = resolve(&config).map_err(CliError::Config)?;
    let summary = execute(&resolved)?;
    serde_json::to_string(&summary).map_err(|e| CliError::Runtime(e.to_string()))
}

/// Worker cap from `REPLICATOR_LAB_THREADS`, if set to a positive integer.
pub fn thread_cap(var: Option<&str>) -> Result<Option<usize>, CliError> {
    match var {
        None => Ok(None),
        Some(v) => match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(Some(n)),
            _ => Err(CliError::config("REPLICATOR_LAB_THREADS", format!("expected a positive integer, got {v:?}"))),
        },
    }
}
