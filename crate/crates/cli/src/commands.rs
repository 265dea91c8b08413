use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::{json, Value};
use taskdiff::corpus::{load_corpus, Corpus, CorpusFormat};
use taskdiff::distributions::{build_profile_partial, required_keys, ProfileOptions};
use taskdiff::embedding::{hash_embed, EmbeddingKey, EmbeddingSet};
use taskdiff::eval::{
    ablation_preset, ablation_run, cluster, knn_classify, reorder_perturb, EvalReport,
};
use taskdiff::metric::{
    pairwise_matrix, taskdiff_distance, BaselineConfig, BaselineKind, DistanceMatrix,
    EmptyComponentPolicy, Metric, MetricConfig, Solver,
};
use taskdiff::ot::SinkhornParams;

use crate::error::{CliError, Kind};
use crate::{Cli, Command, FormatArg, Global, MetricArg, SolverArg};

pub const MATRIX_FILE: &str = "matrix.dmat";
pub const REPORT_TXT: &str = "report.txt";
pub const REPORT_JSONL: &str = "report.jsonl";
pub const COORDS_FILE: &str = "coords.csv";
pub const MANIFEST_FILE: &str = "manifest.json";

/// Everything that determines a run's outputs.
#[derive(Debug, Serialize)]
struct RunManifest {
    command: &'static str,
    version: &'static str,
    seed: u64,
    inputs: BTreeMap<&'static str, String>,
    metrics: Vec<(String, Metric)>,
    parameters: BTreeMap<&'static str, Value>,
}

impl RunManifest {
    fn new(command: &'static str, global: &Global) -> Self {
        let mut inputs = BTreeMap::new();
        if let Some(e) = &global.embeddings {
            inputs.insert("embeddings", e.display().to_string());
        }
        inputs.insert("format", format!("{:?}", global.format).to_lowercase());
        RunManifest {
            command,
            version: env!("CARGO_PKG_VERSION"),
            seed: global.seed,
            inputs,
            metrics: Vec::new(),
            parameters: BTreeMap::new(),
        }
    }

    fn corpus(mut self, path: &Path) -> Self {
        self.inputs.insert("corpus", path.display().to_string());
        self
    }
}

fn corpus_format(global: &Global) -> CorpusFormat {
    match global.format {
        FormatArg::Canonical => CorpusFormat::Canonical,
        FormatArg::Sgd => CorpusFormat::Sgd,
    }
}

fn load(global: &Global, path: &Path) -> Result<Corpus, CliError> {
    Ok(load_corpus(path, corpus_format(global))?)
}

fn embeddings(global: &Global) -> Result<EmbeddingSet, CliError> {
    let path = global
        .embeddings
        .as_ref()
        .ok_or_else(|| CliError::usage("--embeddings is required for this command"))?;
    Ok(EmbeddingSet::load(path)?)
}

fn taskdiff_config(global: &Global) -> MetricConfig {
    MetricConfig {
        gamma_intents: global.gamma_intents,
        gamma_utterances: global.gamma_utterances,
        gamma_slots: global.gamma_slots,
        masking_enabled: !global.no_mask,
        include_system: global.include_system,
        solver: match global.solver {
            SolverArg::Exact => Solver::Exact,
            SolverArg::Sinkhorn => Solver::Sinkhorn(SinkhornParams {
                epsilon: global.epsilon,
                max_iters: global.max_iters,
                tol: global.tol,
            }),
        },
        empty_component_policy: match global.max_penalty {
            Some(v) => EmptyComponentPolicy::MaxPenalty(v),
            None => EmptyComponentPolicy::Skip,
        },
    }
}

/// Baselines mask only when `--mask` is given.
fn metric_for(arg: MetricArg, global: &Global) -> Metric {
    let baseline = |kind| BaselineConfig {
        kind,
        masking: global.mask,
        include_system: global.include_system,
    };
    match arg {
        MetricArg::Taskdiff => Metric::TaskDiff(taskdiff_config(global)),
        MetricArg::SbertCosine => Metric::Baseline(baseline(BaselineKind::SbertCosine)),
        MetricArg::Conved => Metric::Baseline(baseline(BaselineKind::ConvEd)),
    }
}

fn metric_name(arg: MetricArg) -> &'static str {
    match arg {
        MetricArg::Taskdiff => "taskdiff",
        MetricArg::SbertCosine => "sbert-cosine",
        MetricArg::Conved => "conved",
    }
}

fn checked(metric: Metric) -> Result<Metric, CliError> {
    metric.validate()?;
    Ok(metric)
}

fn out_dir(dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(|e| CliError::io(dir.display(), e))
}

fn write(path: PathBuf, contents: &str) -> Result<(), CliError> {
    fs::write(&path, contents).map_err(|e| CliError::io(path.display(), e))
}

fn write_manifest(dir: &Path, manifest: &RunManifest) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(manifest).expect("manifest serializes");
    text.push('\n');
    write(dir.join(MANIFEST_FILE), &text)
}

fn write_reports(dir: &Path, reports: &[EvalReport]) -> Result<(), CliError> {
    let table: String = reports
        .iter()
        .map(EvalReport::to_table)
        .collect::<Vec<_>>()
        .join("\n");
    let jsonl: String = reports.iter().map(EvalReport::to_jsonl).collect();
    write(dir.join(REPORT_TXT), &table)?;
    write(dir.join(REPORT_JSONL), &jsonl)?;
    print!("{table}");
    Ok(())
}

fn matrix_or_compute(
    global: &Global,
    corpus: &Corpus,
    precomputed: Option<&PathBuf>,
    metric: &Metric,
) -> Result<DistanceMatrix, CliError> {
    match precomputed {
        Some(path) => {
            let m = DistanceMatrix::load(path)?;
            if m.ids()
                != corpus
                    .conversations()
                    .iter()
                    .map(|c| c.id.clone())
                    .collect::<Vec<_>>()
            {
                return Err(CliError::data(format!(
                    "matrix {} does not list the corpus conversations in order",
                    path.display()
                )));
            }
            Ok(m)
        }
        None => Ok(pairwise_matrix(corpus, &embeddings(global)?, metric)?),
    }
}

pub fn run(cli: &Cli) -> Result<(), CliError> {
    let global = &cli.global;
    if let Some(jobs) = global.jobs {
        if jobs == 0 {
            return Err(CliError::usage("--jobs must be at least 1"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global()
            .map_err(|e| CliError::new(Kind::Usage, e))?;
    }
    match &cli.command {
        Command::Keys {
            corpus,
            out,
            all_variants,
        } => keys(global, &corpus.corpus, out.as_deref(), *all_variants),
        Command::Profile { corpus, id } => profile(global, &corpus.corpus, id),
        Command::Dist {
            corpus,
            id1,
            id2,
            metric,
        } => dist(global, &corpus.corpus, id1, id2, *metric),
        Command::Matrix {
            corpus,
            out,
            metric,
        } => {
            let data = load(global, &corpus.corpus)?;
            let m = checked(metric_for(*metric, global))?;
            let matrix = pairwise_matrix(&data, &embeddings(global)?, &m)?;
            out_dir(&out.out)?;
            write(out.out.join(MATRIX_FILE), &matrix.to_dmat())?;
            let mut manifest = RunManifest::new("matrix", global).corpus(&corpus.corpus);
            manifest.metrics.push((metric_name(*metric).into(), m));
            write_manifest(&out.out, &manifest)
        }
        Command::Knn {
            corpus,
            out,
            metric,
            matrix,
            k,
            folds,
        } => {
            let data = load(global, &corpus.corpus)?;
            let m = checked(metric_for(*metric, global))?;
            let dm = matrix_or_compute(global, &data, matrix.as_ref(), &m)?;
            let mut report = knn_classify(&dm, &data.labels(), *k, *folds, global.seed)?;
            report.metric_name = metric_name(*metric).into();
            out_dir(&out.out)?;
            write_reports(&out.out, &[report])?;
            let mut manifest = RunManifest::new("knn", global).corpus(&corpus.corpus);
            if let Some(p) = matrix {
                manifest.inputs.insert("matrix", p.display().to_string());
            }
            manifest.metrics.push((metric_name(*metric).into(), m));
            manifest.parameters.insert("k", json!(k));
            manifest.parameters.insert("folds", json!(folds));
            write_manifest(&out.out, &manifest)
        }
        Command::Cluster {
            corpus,
            out,
            metric,
            matrix,
            k,
            iterations,
        } => {
            let data = load(global, &corpus.corpus)?;
            let m = checked(metric_for(*metric, global))?;
            let dm = matrix_or_compute(global, &data, matrix.as_ref(), &m)?;
            let labels = data.labels();
            let k = k.unwrap_or_else(|| labels.values().collect::<BTreeSet<_>>().len());
            let mut result = cluster(&dm, &labels, k, *iterations, global.seed)?;
            result.report.metric_name = metric_name(*metric).into();
            out_dir(&out.out)?;
            write_reports(&out.out, std::slice::from_ref(&result.report))?;
            write(out.out.join(COORDS_FILE), &result.coordinates_csv())?;
            let mut manifest = RunManifest::new("cluster", global).corpus(&corpus.corpus);
            if let Some(p) = matrix {
                manifest.inputs.insert("matrix", p.display().to_string());
            }
            manifest.metrics.push((metric_name(*metric).into(), m));
            manifest.parameters.insert("k", json!(k));
            manifest.parameters.insert("iterations", json!(iterations));
            write_manifest(&out.out, &manifest)
        }
        Command::Ablate {
            corpus,
            out,
            sample,
            k,
            folds,
        } => {
            let data = load(global, &corpus.corpus)?;
            let full = taskdiff_config(global);
            full.validate()?;
            let rows = ablation_preset(full);
            let report = ablation_run(
                &data,
                &embeddings(global)?,
                &rows,
                *sample,
                *k,
                *folds,
                global.seed,
            )?;
            out_dir(&out.out)?;
            write_reports(&out.out, &[report])?;
            let mut manifest = RunManifest::new("ablate", global).corpus(&corpus.corpus);
            manifest.metrics = rows.into_iter().map(|r| (r.name, r.metric)).collect();
            manifest.parameters.insert("sample", json!(sample));
            manifest.parameters.insert("k", json!(k));
            manifest.parameters.insert("folds", json!(folds));
            write_manifest(&out.out, &manifest)
        }
        Command::Perturb {
            corpus,
            out,
            fraction,
            metric,
        } => {
            let data = load(global, &corpus.corpus)?;
            let chosen = if metric.is_empty() {
                vec![MetricArg::Taskdiff, MetricArg::Conved]
            } else {
                metric.clone()
            };
            let metrics: Vec<(String, Metric)> = chosen
                .iter()
                .map(|&a| Ok((metric_name(a).to_string(), checked(metric_for(a, global))?)))
                .collect::<Result<_, CliError>>()?;
            let reports = reorder_perturb(
                &data,
                &embeddings(global)?,
                *fraction,
                global.seed,
                &metrics,
            )?;
            out_dir(&out.out)?;
            write_reports(&out.out, &reports)?;
            let mut manifest = RunManifest::new("perturb", global).corpus(&corpus.corpus);
            manifest.metrics = metrics;
            manifest.parameters.insert("fraction", json!(fraction));
            write_manifest(&out.out, &manifest)
        }
        Command::HashEmbed { keys, out, dim } => hash_embed_cmd(keys, out, *dim, global.seed),
    }
}

fn keys(
    global: &Global,
    path: &Path,
    out: Option<&Path>,
    all_variants: bool,
) -> Result<(), CliError> {
    let corpus = load(global, path)?;
    let masking: &[bool] = if all_variants {
        &[true, false]
    } else {
        &[!global.no_mask]
    };
    let mut keys = BTreeSet::new();
    for conv in corpus.conversations() {
        for &m in masking {
            let options = ProfileOptions {
                masking: m,
                include_system: global.include_system,
            };
            keys.extend(required_keys(conv, options).into_iter().map(|k| k.encode()));
        }
    }
    let mut text = String::new();
    for key in &keys {
        if key.contains(['\n', '\r']) {
            return Err(CliError::data(format!("key {key:?} contains a line break")));
        }
        text.push_str(key);
        text.push('\n');
    }
    match out {
        Some(p) => write(p.to_path_buf(), &text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn find<'a>(corpus: &'a Corpus, id: &str) -> Result<&'a taskdiff::corpus::Conversation, CliError> {
    corpus
        .get(id)
        .ok_or_else(|| CliError::data(format!("no conversation with id {id:?}")))
}

fn profile(global: &Global, path: &Path, id: &str) -> Result<(), CliError> {
    let corpus = load(global, path)?;
    let conv = find(&corpus, id)?;
    let config = taskdiff_config(global);
    let profile = build_profile_partial(conv, &embeddings(global)?, config.profile_options())
        .map_err(|e| {
            let key = e.missing_key().map(str::to_string);
            CliError {
                key,
                ..CliError::data(&e)
            }
        })?;
    println!(
        "{}",
        serde_json::to_string_pretty(&profile).expect("profile serializes")
    );
    Ok(())
}

fn dist(
    global: &Global,
    path: &Path,
    id1: &str,
    id2: &str,
    metric: MetricArg,
) -> Result<(), CliError> {
    let corpus = load(global, path)?;
    let (c1, c2) = (find(&corpus, id1)?, find(&corpus, id2)?);
    let emb = embeddings(global)?;
    let m = checked(metric_for(metric, global))?;
    match &m {
        Metric::TaskDiff(config) => {
            let (a, b) = (m.prepare(c1, &emb)?, m.prepare(c2, &emb)?);
            let (taskdiff::metric::Prepared::Profile(pa), taskdiff::metric::Prepared::Profile(pb)) =
                (&a, &b)
            else {
                unreachable!("taskdiff prepares profiles")
            };
            let breakdown = taskdiff_distance(pa, pb, config)?;
            println!("distance {}", breakdown.total);
            println!(
                "{:<11} {:>22} {:>6} {:>22}  status",
                "component", "w1", "gamma", "contribution"
            );
            for term in &breakdown.terms {
                let w1 = term.w1.map_or("-".to_string(), |w| w.to_string());
                println!(
                    "{:<11} {:>22} {:>6} {:>22}  {:?}",
                    term.component.name(),
                    w1,
                    config.gamma(term.component),
                    term.contribution,
                    term.status
                );
            }
        }
        Metric::Baseline(_) => println!("distance {}", m.distance(c1, c2, &emb)?),
    }
    Ok(())
}

fn hash_embed_cmd(keys: &Path, out: &Path, dim: usize, seed: u64) -> Result<(), CliError> {
    if dim < 8 {
        return Err(CliError::usage("--dim must be at least 8"));
    }
    let text = fs::read_to_string(keys).map_err(|e| CliError::io(keys.display(), e))?;
    let mut set = EmbeddingSet::new(dim);
    for (n, line) in text.lines().enumerate() {
        let key = EmbeddingKey::decode(line).ok_or_else(|| {
            CliError::data(format!(
                "{} line {}: bad key {line:?}",
                keys.display(),
                n + 1
            ))
        })?;
        set.insert(line, hash_embed(&key.text, dim, seed))?;
    }
    set.write(out)?;
    Ok(())
}
