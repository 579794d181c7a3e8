//! Batch commands behind the `roomsynth` binary. Every command is a plain
//! function of its options so the binary and library calls give identical
//! bytes. Output directories get a `manifest.json` listing input hashes,
//! parameters and the sha256 of every file written.

use std::collections::BTreeMap;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::cdf::{cdf_hash, merge_scene_descriptions, parse_cdf, serialize_cdf, validate_cdf, CdfDocument, CdfError, TaskType};
use crate::config::ConfigError;
use crate::cssg::{generate, GenerationError, Scene};
use crate::eval::{evaluate, render_table, MetricsReport, TaskRun};
use crate::instruct::{annotate_trajectory, InstructError, NameContext};
use crate::render::{render_topview, RenderOptions};
use crate::tasking::replay_log;
use crate::util::{sha256_hex, to_json_pretty};
use crate::{par, Config, Exec, GENERATOR_VERSION};

pub const MANIFEST_FORMAT: &str = "roomsynth.manifest/1";
pub const MANIFEST_NAME: &str = "manifest.json";

#[derive(Debug, thiserror::Error)]
pub enum PipelineError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {message}")]
    Input { path: String, message: String },
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("{} of {count} seeds failed:\n{}", .failures.len(), format_failures(.failures))]
    Generation { count: usize, failures: Vec<(u64, String)> },
    #[error("{0}: no scene files")]
    NoScenes(String),
    #[error(transparent)]
    Instruct(#[from] InstructError),
}

fn format_failures(f: &[(u64, String)]) -> String {
    f.iter().map(|(s, m)| format!("  seed {s}: {m}")).collect::<Vec<_>>().join("\n")
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> PipelineError + '_ {
    move |source| PipelineError::Io {
        path: path.display().to_string(),
        source,
    }
}

fn read_text(path: &Path) -> Result<String, PipelineError> {
    std::fs::read_to_string(path).map_err(io_err(path))
}

/// Write through a temporary file in the same directory, then rename.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), PipelineError> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    std::fs::create_dir_all(dir).map_err(io_err(dir))?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(io_err(dir))?;
    tmp.write_all(bytes).map_err(io_err(path))?;
    tmp.persist(path).map_err(|e| PipelineError::Io {
        path: path.display().to_string(),
        source: e.error,
    })?;
    Ok(())
}

/// Parse and validate a document, with the file name in every message.
pub fn load_cdf(cfg: &Config, path: &Path) -> Result<CdfDocument, PipelineError> {
    let text = read_text(path)?;
    let input = |message: String| PipelineError::Input {
        path: path.display().to_string(),
        message,
    };
    let doc = parse_cdf(cfg, &text).map_err(|e| match e {
        CdfError::Syntax { line, column, message } => PipelineError::Input {
            path: format!("{}:{line}:{column}", path.display()),
            message,
        },
        other => input(other.to_string()),
    })?;
    let findings = validate_cdf(cfg, &doc);
    if !findings.is_empty() {
        let msgs: Vec<String> = findings.iter().map(|f| format!("{:?}: {}", f.code, f.message)).collect();
        return Err(input(msgs.join("; ")));
    }
    Ok(doc)
}

/// Builtin configuration, with the relation rules optionally replaced.
/// Returns the rules hash recorded in manifests.
pub fn load_config(rules: Option<&Path>) -> Result<(Config, String), PipelineError> {
    match rules {
        None => Ok((Config::builtin().clone(), sha256_hex(crate::config::RULES_TOML.as_bytes()))),
        Some(p) => {
            let text = read_text(p)?;
            let cfg = Config::builtin().clone().with_rules_file(p)?;
            Ok((cfg, sha256_hex(text.as_bytes())))
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileEntry {
    pub name: String,
    pub sha256: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Manifest {
    pub format: String,
    pub generator_version: String,
    pub command: String,
    pub inputs: BTreeMap<String, String>,
    pub params: BTreeMap<String, serde_json::Value>,
    pub files: Vec<FileEntry>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub failures: Vec<String>,
}

impl Manifest {
    fn new(command: &str) -> Self {
        Manifest {
            format: MANIFEST_FORMAT.into(),
            generator_version: GENERATOR_VERSION.into(),
            command: command.into(),
            inputs: BTreeMap::new(),
            params: BTreeMap::new(),
            files: Vec::new(),
            failures: Vec::new(),
        }
    }

    fn param(&mut self, key: &str, value: impl Serialize) {
        self.params.insert(key.into(), serde_json::to_value(value).expect("plain value"));
    }

    pub fn read(dir: &Path) -> Result<Manifest, PipelineError> {
        let path = dir.join(MANIFEST_NAME);
        serde_json::from_str(&read_text(&path)?).map_err(|e| PipelineError::Input {
            path: path.display().to_string(),
            message: e.to_string(),
        })
    }
}

/// Files written so far, staged for the manifest.
struct Output {
    dir: PathBuf,
    manifest: Manifest,
}

impl Output {
    fn new(dir: &Path, command: &str) -> Result<Self, PipelineError> {
        std::fs::create_dir_all(dir).map_err(io_err(dir))?;
        Ok(Output {
            dir: dir.to_path_buf(),
            manifest: Manifest::new(command),
        })
    }

    fn write(&mut self, name: &str, text: &str) -> Result<(), PipelineError> {
        write_atomic(&self.dir.join(name), text.as_bytes())?;
        self.manifest.files.push(FileEntry {
            name: name.into(),
            sha256: sha256_hex(text.as_bytes()),
        });
        Ok(())
    }

    fn finish(mut self) -> Result<Manifest, PipelineError> {
        self.manifest.files.sort_by(|a, b| a.name.cmp(&b.name));
        write_atomic(&self.dir.join(MANIFEST_NAME), to_json_pretty(&self.manifest).as_bytes())?;
        Ok(self.manifest)
    }
}

#[derive(Clone, Debug)]
pub struct GenerateOptions {
    pub cdf: PathBuf,
    pub count: usize,
    pub seed: u64,
    pub rules: Option<PathBuf>,
    pub out: PathBuf,
    pub render: bool,
    pub jobs: Option<usize>,
}

pub fn scene_file_name(seed: u64) -> String {
    format!("scene_{seed:06}.json")
}

/// Generate `count` scenes with seeds `seed..seed + count`. Scenes that
/// succeed are written even when others fail; failures are listed in the
/// manifest and returned as an error.
pub fn cmd_generate(opts: &GenerateOptions) -> Result<Manifest, PipelineError> {
    let (cfg, rules_hash) = load_config(opts.rules.as_deref())?;
    let doc = load_cdf(&cfg, &opts.cdf)?;
    let seeds: Vec<u64> = (0..opts.count as u64).map(|i| opts.seed + i).collect();
    let results: Vec<Result<Scene, GenerationError>> =
        par::install(opts.jobs, || Exec::Parallel.map(&seeds, |&s| generate(&cfg, &doc, s)));

    let mut out = Output::new(&opts.out, "generate")?;
    out.manifest.inputs.insert("cdf".into(), cdf_hash(&doc));
    out.manifest.inputs.insert("rules".into(), rules_hash);
    out.manifest.param("count", opts.count);
    out.manifest.param("seed", opts.seed);
    out.manifest.param("render", opts.render);
    let mut failures = Vec::new();
    for (seed, r) in seeds.iter().zip(results) {
        match r {
            Ok(scene) => {
                let name = scene_file_name(*seed);
                out.write(&name, &scene.to_json())?;
                if opts.render {
                    let svg = render_topview(&cfg, &scene, &RenderOptions::default());
                    out.write(&name.replace(".json", ".svg"), &svg)?;
                }
            }
            Err(e) => failures.push((*seed, e.to_string())),
        }
    }
    out.manifest.failures = failures.iter().map(|(s, m)| format!("seed {s}: {m}")).collect();
    let manifest = out.finish()?;
    if failures.is_empty() {
        Ok(manifest)
    } else {
        Err(PipelineError::Generation {
            count: opts.count,
            failures,
        })
    }
}

/// Scene files directly inside `dir`, sorted by file name.
pub fn load_scenes(dir: &Path) -> Result<Vec<(String, Scene)>, PipelineError> {
    let mut names: Vec<String> = std::fs::read_dir(dir)
        .map_err(io_err(dir))?
        .filter_map(|e| e.ok())
        .filter(|e| e.file_type().is_ok_and(|t| t.is_file()))
        .filter_map(|e| e.file_name().into_string().ok())
        .filter(|n| n.ends_with(".json") && n != MANIFEST_NAME)
        .collect();
    names.sort();
    if names.is_empty() {
        return Err(PipelineError::NoScenes(dir.display().to_string()));
    }
    names
        .into_iter()
        .map(|n| {
            let path = dir.join(&n);
            let scene = Scene::from_json(&read_text(&path)?).map_err(|e| PipelineError::Input {
                path: path.display().to_string(),
                message: e.to_string(),
            })?;
            Ok((n, scene))
        })
        .collect()
}

#[derive(Clone, Debug)]
pub struct TasksOptions {
    pub scenes: PathBuf,
    /// Defaults to `<scenes>/tasks`.
    pub out: Option<PathBuf>,
    pub types: Vec<TaskType>,
    pub per_type: usize,
    pub seed: u64,
    pub jobs: Option<usize>,
}

#[derive(Clone, Debug)]
pub struct TasksSummary {
    pub manifest: Manifest,
    pub report: MetricsReport,
    pub runs: Vec<TaskRun>,
}

fn stem(name: &str) -> &str {
    name.strip_suffix(".json").unwrap_or(name)
}

/// Sample, execute and annotate tasks in every scene of a directory. Each
/// trajectory is written as JSON plus a JSONL action log.
pub fn cmd_tasks(opts: &TasksOptions) -> Result<TasksSummary, PipelineError> {
    let cfg = Config::builtin();
    let named = load_scenes(&opts.scenes)?;
    let (names, scenes): (Vec<String>, Vec<Scene>) = named.into_iter().unzip();
    let (report, mut runs) = par::install(opts.jobs, || {
        evaluate(cfg, &scenes, &opts.types, opts.per_type, opts.seed, Exec::Parallel)
    });
    let contexts: Vec<NameContext> = scenes.iter().map(|s| NameContext::from_scene(&cfg.catalog, s)).collect();
    for run in &mut runs {
        if let Ok(traj) = &mut run.outcome {
            let a = annotate_trajectory(&cfg.templates, traj, &contexts[run.scene], run.seed)?;
            traj.summary = a.summary;
            traj.instructions = a.steps;
        }
    }

    let dir = opts.out.clone().unwrap_or_else(|| opts.scenes.join("tasks"));
    let mut out = Output::new(&dir, "tasks")?;
    for (n, s) in names.iter().zip(&scenes) {
        out.manifest.inputs.insert(n.clone(), s.hash());
    }
    out.manifest.param("types", opts.types.iter().map(|t| t.as_str()).collect::<Vec<_>>());
    out.manifest.param("per_type", opts.per_type);
    out.manifest.param("seed", opts.seed);
    for run in &runs {
        let base = format!("{}_{}_{:03}", stem(&names[run.scene]), run.task_type.as_str(), run.index);
        match &run.outcome {
            Ok(traj) => {
                out.write(&format!("{base}.json"), &traj.to_json())?;
                out.write(&format!("{base}.jsonl"), &replay_log(traj))?;
            }
            Err(e) => out.manifest.failures.push(format!("{base}: {e}")),
        }
    }
    out.write("metrics.json", &report.to_json())?;
    let manifest = out.finish()?;
    Ok(TasksSummary { manifest, report, runs })
}

#[derive(Clone, Debug)]
pub struct EvalOptions {
    pub scenes: PathBuf,
    /// Defaults to `<scenes>/eval`.
    pub out: Option<PathBuf>,
    pub per_type: usize,
    pub seed: u64,
    pub baseline: Option<PathBuf>,
    pub jobs: Option<usize>,
}

/// Score a scene directory. Writes `metrics.json` and `metrics.txt` and
/// returns the report with its text table.
pub fn cmd_eval(opts: &EvalOptions) -> Result<(MetricsReport, String), PipelineError> {
    let cfg = Config::builtin();
    let named = load_scenes(&opts.scenes)?;
    let scenes: Vec<Scene> = named.iter().map(|(_, s)| s.clone()).collect();
    let baseline = match &opts.baseline {
        Some(p) => Some(MetricsReport::from_json(&read_text(p)?).map_err(|e| PipelineError::Input {
            path: p.display().to_string(),
            message: e.to_string(),
        })?),
        None => None,
    };
    let (report, _) = par::install(opts.jobs, || {
        evaluate(cfg, &scenes, &TaskType::ALL, opts.per_type, opts.seed, Exec::Parallel)
    });
    let table = render_table(&report, baseline.as_ref());
    let dir = opts.out.clone().unwrap_or_else(|| opts.scenes.join("eval"));
    let mut out = Output::new(&dir, "eval")?;
    for (n, s) in &named {
        out.manifest.inputs.insert(n.clone(), s.hash());
    }
    out.manifest.param("per_type", opts.per_type);
    out.manifest.param("seed", opts.seed);
    out.write("metrics.json", &report.to_json())?;
    out.write("metrics.txt", &table)?;
    out.finish()?;
    Ok((report, table))
}

/// Merge scene descriptions. Tasks and scripts are dropped. The canonical
/// text is written to `out` when given and always returned.
pub fn cmd_merge(inputs: &[PathBuf], out: Option<&Path>) -> Result<String, PipelineError> {
    let cfg = Config::builtin();
    let docs = inputs.iter().map(|p| load_cdf(cfg, p)).collect::<Result<Vec<_>, _>>()?;
    let scenes: Vec<_> = docs.into_iter().map(|d| d.scene).collect();
    let merged = merge_scene_descriptions(&scenes).map_err(|e| PipelineError::Input {
        path: inputs.iter().map(|p| p.display().to_string()).collect::<Vec<_>>().join(", "),
        message: e.to_string(),
    })?;
    let text = serialize_cdf(&CdfDocument::new(merged));
    if let Some(p) = out {
        write_atomic(p, text.as_bytes())?;
    }
    Ok(text)
}
