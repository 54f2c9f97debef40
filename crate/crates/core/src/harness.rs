//! Config-driven pipeline stages behind the `gawm` command line.
//!
//! Layout under `output_dir`:
//! `data/{train,eval}/`, `train/<label>/`, `probe/<model>/`, `gar/<model>/`,
//! `ablate/<axis>/`, `report.md`.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::ExperimentConfig;
use crate::data::{generate_split, load_split, write_atomic, write_split, Dataset, Split};
use crate::latent::{hex_digest, Checkpoint, DynamicsNet, FeatureEncoder};
use crate::metrics::{run_gac, run_gar, GacReport, GarSuite};
use crate::models::{parse_violation_spec, ExactModel, PerturbedModel, WorldModel};
use crate::training::{
    dataset_prediction_loss, initial_net, loss_curve_csv, train, train_from, GALossConfig,
    RolloutMode, TrainOutput,
};
use crate::{Error, Result};

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageRecord {
    pub name: String,
    pub outputs: Vec<PathBuf>,
    pub wall_clock_s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub config_hash: String,
    pub tool_version: String,
    pub label: String,
    pub stages: Vec<StageRecord>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub checkpoint_hash: Option<String>,
}

impl RunManifest {
    pub fn new(cfg: &ExperimentConfig, label: impl Into<String>) -> Self {
        RunManifest {
            config_hash: config_hash(cfg),
            tool_version: TOOL_VERSION.into(),
            label: label.into(),
            stages: Vec::new(),
            checkpoint_hash: None,
        }
    }

    /// Written once, after every stage finished.
    pub fn write(&self, path: &Path) -> Result<()> {
        let mut bytes = serde_json::to_vec_pretty(self).expect("manifest serializes");
        bytes.push(b'\n');
        write_atomic(path, &bytes)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::parse(path.display().to_string(), e))
    }
}

pub fn config_hash(cfg: &ExperimentConfig) -> String {
    hex_digest(&cfg.canonical_bytes())
}

fn timed<T>(name: &str, f: impl FnOnce() -> Result<(T, Vec<PathBuf>)>) -> Result<(T, StageRecord)> {
    let t0 = Instant::now();
    let (value, outputs) = f()?;
    Ok((
        value,
        StageRecord {
            name: name.into(),
            outputs,
            wall_clock_s: t0.elapsed().as_secs_f64(),
        },
    ))
}

fn write_text(path: &Path, text: &str) -> Result<PathBuf> {
    write_atomic(path, text.as_bytes())?;
    Ok(path.to_path_buf())
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<PathBuf> {
    let mut bytes = serde_json::to_vec_pretty(value).expect("report serializes");
    bytes.push(b'\n');
    write_atomic(path, &bytes)?;
    Ok(path.to_path_buf())
}

/// File-name-safe form of a model reference.
pub fn slug(name: &str) -> String {
    name.chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || c == '-' || c == '.' || c == '_' {
                c
            } else {
                '_'
            }
        })
        .collect()
}

/// Resolves `exact`, a violation spec (`drift:…+noise:…`),
/// `checkpoint:<path>`, or a path to a `.json` checkpoint.
pub fn resolve_model(reference: &str) -> Result<Box<dyn WorldModel>> {
    let path = reference
        .strip_prefix("checkpoint:")
        .map(PathBuf::from)
        .or_else(|| {
            let p = Path::new(reference);
            (p.extension().and_then(|e| e.to_str()) == Some("json")).then(|| p.to_path_buf())
        });
    if let Some(path) = path {
        let ckpt = Checkpoint::load(&path)?;
        let name = path
            .parent()
            .and_then(|p| p.file_name())
            .and_then(|n| n.to_str())
            .unwrap_or("checkpoint")
            .to_string();
        return Ok(Box::new(ckpt.world_model(name)?));
    }
    if reference == "exact" {
        return Ok(Box::new(ExactModel));
    }
    Ok(Box::new(PerturbedModel::new(parse_violation_spec(
        reference,
    )?)?))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenSummary {
    pub model: String,
    pub seed: u64,
    pub train_sequences: usize,
    pub eval_sequences: usize,
    pub poses_per_sequence: usize,
    pub train_seeds: Vec<u64>,
    pub eval_seeds: Vec<u64>,
}

pub fn cmd_gen_data(cfg: &ExperimentConfig) -> Result<GenSummary> {
    let spec = &cfg.dataset;
    let dir = cfg.data_dir();
    let train_set = generate_split(spec, Split::Train)?;
    let eval_set = generate_split(spec, Split::Eval)?;
    write_split(&dir, Split::Train, spec, &train_set)?;
    write_split(&dir, Split::Eval, spec, &eval_set)?;
    let summary = GenSummary {
        model: spec.model.clone(),
        seed: spec.seed,
        train_sequences: train_set.len(),
        eval_sequences: eval_set.len(),
        poses_per_sequence: spec.length + 1,
        train_seeds: train_set.sequences.iter().map(|s| s.seed).collect(),
        eval_seeds: eval_set.sequences.iter().map(|s| s.seed).collect(),
    };
    write_json(&dir.join("summary.json"), &summary)?;
    Ok(summary)
}

fn load_or_generate(cfg: &ExperimentConfig, split: Split) -> Result<Dataset> {
    match load_split(&cfg.data_dir(), split) {
        Err(Error::MissingDataset(_)) => {
            cmd_gen_data(cfg)?;
            load_split(&cfg.data_dir(), split)
        }
        other => other,
    }
}

/// Shared starting point of every run: the prediction-only pretrained
/// network and the number of updates it has taken.
#[derive(Debug, Clone)]
pub struct Pretrained {
    pub net: DynamicsNet,
    pub steps: usize,
}

pub fn pretrain(
    cfg: &ExperimentConfig,
    train_set: &Dataset,
    encoder: &FeatureEncoder,
) -> Result<Pretrained> {
    if cfg.pretrain.steps == 0 {
        return Ok(Pretrained {
            net: initial_net(&cfg.train, encoder.latent_dim()),
            steps: 0,
        });
    }
    let run = cfg.pretrain.run_config(&cfg.train);
    let ga = GALossConfig {
        lambda_ga: 0.0,
        ..cfg.ga.clone()
    };
    let out = train(&run, &ga, train_set, encoder, cfg.encoder.gen_noise_sigma)?;
    Ok(Pretrained {
        net: out.net,
        steps: run.steps,
    })
}

/// Fine-tunes the pretrained network under `ga`.
pub fn fine_tune(
    cfg: &ExperimentConfig,
    start: &Pretrained,
    ga: &GALossConfig,
    train_set: &Dataset,
    encoder: &FeatureEncoder,
) -> Result<TrainOutput> {
    train_from(
        start.net.clone(),
        start.steps,
        &cfg.train,
        ga,
        train_set,
        encoder,
        cfg.encoder.gen_noise_sigma,
        |_, _| {},
    )
}

/// `baseline` for `λ_ga = 0`, otherwise `ga`.
pub fn default_label(ga: &GALossConfig) -> &'static str {
    if ga.lambda_ga == 0.0 {
        "baseline"
    } else {
        "ga"
    }
}

#[derive(Debug, Clone)]
pub struct TrainSummary {
    pub label: String,
    pub checkpoint_path: PathBuf,
    pub checkpoint: Checkpoint,
    pub manifest: RunManifest,
    pub eval_prediction_loss: f64,
}

/// Trains one model; outputs land in `train/<label>/`.
pub fn cmd_train(cfg: &ExperimentConfig, label: Option<&str>) -> Result<TrainSummary> {
    cfg.validate()?;
    let label = label.unwrap_or_else(|| default_label(&cfg.ga)).to_string();
    let dir = cfg.output_dir.join("train").join(slug(&label));
    let mut manifest = RunManifest::new(cfg, &label);

    let (data, rec) = timed("load-data", || {
        let d = load_or_generate(cfg, Split::Train)?;
        Ok((d, vec![cfg.data_dir()]))
    })?;
    manifest.stages.push(rec);

    let encoder = cfg.encoder.build()?;
    let (start, rec) = timed("pretrain", || {
        Ok((pretrain(cfg, &data, &encoder)?, Vec::new()))
    })?;
    manifest.stages.push(rec);
    let (out, rec) = timed("train", || {
        let out = fine_tune(cfg, &start, &cfg.ga, &data, &encoder)?;
        let ckpt = dir.join("checkpoint.json");
        out.checkpoint.save(&ckpt)?;
        let curve = write_text(&dir.join("loss.csv"), &loss_curve_csv(&out.curve))?;
        Ok((out, vec![ckpt, curve]))
    })?;
    manifest.stages.push(rec);

    let eval_set = load_or_generate(cfg, Split::Eval)?;
    let eval_prediction_loss = dataset_prediction_loss(&out.net, &encoder, &eval_set);
    manifest.checkpoint_hash = Some(out.checkpoint.hash());
    manifest.write(&dir.join("manifest.json"))?;
    Ok(TrainSummary {
        label,
        checkpoint_path: dir.join("checkpoint.json"),
        checkpoint: out.checkpoint,
        manifest,
        eval_prediction_loss,
    })
}

fn report_name(model: &dyn WorldModel, reference: &str) -> String {
    if reference.ends_with(".json") || reference.starts_with("checkpoint:") {
        model.label()
    } else {
        reference.to_string()
    }
}

pub fn cmd_probe(cfg: &ExperimentConfig, model_ref: &str) -> Result<GacReport> {
    let model = resolve_model(model_ref)?;
    let eval_set = load_or_generate(cfg, Split::Eval)?;
    let mut report = run_gac(model.as_ref(), &eval_set.sequences, &cfg.probes)?;
    report.model = report_name(model.as_ref(), model_ref);
    let dir = cfg.output_dir.join("probe").join(slug(&report.model));
    write_json(&dir.join("gac.json"), &report)?;
    write_text(&dir.join("gac.csv"), &report.to_csv())?;
    write_text(&dir.join("gac_summary.csv"), &report.summary_csv())?;
    write_text(&dir.join("gac.dat"), &report.gnuplot_data())?;
    Ok(report)
}

pub fn cmd_gar(cfg: &ExperimentConfig, model_ref: &str) -> Result<GarSuite> {
    let model = resolve_model(model_ref)?;
    let eval_set = load_or_generate(cfg, Split::Eval)?;
    let mut suite = run_gar(model.as_ref(), &eval_set.sequences, &cfg.gar)?;
    suite.model = report_name(model.as_ref(), model_ref);
    let dir = cfg.output_dir.join("gar").join(slug(&suite.model));
    write_json(&dir.join("gar.json"), &suite)?;
    write_text(&dir.join("gar.csv"), &suite.to_csv())?;
    Ok(suite)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AblationAxis {
    /// `λ_ga` sweep, including the `λ = 0` control.
    Lambda,
    /// Maximum constraint span `L`.
    Span,
    /// Baseline vs teacher-forced vs free-running.
    Mode,
    /// Baseline, each single constraint, full objective.
    Constraints,
}

impl AblationAxis {
    pub fn as_str(self) -> &'static str {
        match self {
            AblationAxis::Lambda => "lambda",
            AblationAxis::Span => "span",
            AblationAxis::Mode => "mode",
            AblationAxis::Constraints => "constraints",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "lambda" => Ok(AblationAxis::Lambda),
            "span" => Ok(AblationAxis::Span),
            "mode" => Ok(AblationAxis::Mode),
            "constraints" => Ok(AblationAxis::Constraints),
            _ => Err(Error::InvalidArgument(format!(
                "unknown ablation axis `{s}`"
            ))),
        }
    }
}

/// The labelled loss configurations of one sweep axis.
pub fn ablation_grid(cfg: &ExperimentConfig, axis: AblationAxis) -> Vec<(String, GALossConfig)> {
    let base = cfg.ga.clone();
    let baseline = GALossConfig {
        lambda_ga: 0.0,
        ..base.clone()
    };
    match axis {
        AblationAxis::Lambda => cfg
            .ablation
            .lambdas
            .iter()
            .map(|&l| {
                (
                    format!("lambda-{l}"),
                    GALossConfig {
                        lambda_ga: l,
                        ..base.clone()
                    },
                )
            })
            .collect(),
        AblationAxis::Span => {
            let mut rows = vec![("baseline".to_string(), baseline)];
            rows.extend(cfg.ablation.spans.iter().map(|&s| {
                (
                    format!("span-{s}"),
                    GALossConfig {
                        max_span: s,
                        ..base.clone()
                    },
                )
            }));
            rows
        }
        AblationAxis::Mode => vec![
            ("baseline".into(), baseline),
            (
                "teacher-forced".into(),
                GALossConfig {
                    mode: RolloutMode::TeacherForced,
                    ..base.clone()
                },
            ),
            (
                "free-running".into(),
                GALossConfig {
                    mode: RolloutMode::FreeRunning,
                    ..base.clone()
                },
            ),
        ],
        AblationAxis::Constraints => {
            let w = |id, inv, comp| GALossConfig {
                lambda_id: id,
                lambda_inv: inv,
                lambda_comp: comp,
                ..base.clone()
            };
            vec![
                ("baseline".into(), baseline),
                ("id-only".into(), w(1.0, 0.0, 0.0)),
                ("inv-only".into(), w(0.0, 1.0, 0.0)),
                ("comp-only".into(), w(0.0, 0.0, 1.0)),
                ("full".into(), w(1.0, 1.0, 1.0)),
            ]
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationRow {
    pub label: String,
    pub lambda_ga: f64,
    pub max_span: usize,
    pub mode: RolloutMode,
    pub lambda_id: f64,
    pub lambda_inv: f64,
    pub lambda_comp: f64,
    pub checkpoint_hash: String,
    pub eval_prediction_loss: f64,
    pub delta_id: f64,
    pub delta_inv: f64,
    pub delta_comp: f64,
    pub e_gac: f64,
    /// `(horizon, aligned, non-aligned)` means.
    pub gar: Vec<(usize, f64, f64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationTable {
    pub axis: AblationAxis,
    pub rows: Vec<AblationRow>,
}

impl AblationTable {
    pub fn row(&self, label: &str) -> Option<&AblationRow> {
        self.rows.iter().find(|r| r.label == label)
    }

    pub fn to_csv(&self) -> String {
        let horizons: Vec<usize> = self
            .rows
            .first()
            .map(|r| r.gar.iter().map(|g| g.0).collect())
            .unwrap_or_default();
        let mut out = String::from(
            "label,lambda_ga,max_span,mode,lambda_id,lambda_inv,lambda_comp,delta_id,delta_inv,delta_comp,e_gac",
        );
        for h in &horizons {
            out.push_str(&format!(",gar{h}_aligned,gar{h}_nonaligned"));
        }
        out.push_str(",eval_prediction_loss,checkpoint_hash\n");
        for r in &self.rows {
            let mode = match r.mode {
                RolloutMode::FreeRunning => "free-running",
                RolloutMode::TeacherForced => "teacher-forced",
            };
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{},{},{},{}",
                crate::metrics::csv_field(&r.label),
                r.lambda_ga,
                r.max_span,
                mode,
                r.lambda_id,
                r.lambda_inv,
                r.lambda_comp,
                r.delta_id,
                r.delta_inv,
                r.delta_comp,
                r.e_gac
            ));
            for g in &r.gar {
                out.push_str(&format!(",{},{}", g.1, g.2));
            }
            out.push_str(&format!(
                ",{},{}\n",
                r.eval_prediction_loss, r.checkpoint_hash
            ));
        }
        out
    }
}

/// Fine-tunes and evaluates one configuration without touching disk.
pub fn evaluate_config(
    cfg: &ExperimentConfig,
    start: &Pretrained,
    label: &str,
    ga: &GALossConfig,
    train_set: &Dataset,
    eval_set: &Dataset,
) -> Result<(AblationRow, Checkpoint)> {
    let encoder = cfg.encoder.build()?;
    let out = fine_tune(cfg, start, ga, train_set, &encoder)?;
    let model = out.checkpoint.world_model(label)?;
    let gac = run_gac(&model, &eval_set.sequences, &cfg.probes)?;
    let gar = run_gar(&model, &eval_set.sequences, &cfg.gar)?;
    let row = AblationRow {
        label: label.to_string(),
        lambda_ga: ga.lambda_ga,
        max_span: ga.max_span,
        mode: ga.mode,
        lambda_id: ga.lambda_id,
        lambda_inv: ga.lambda_inv,
        lambda_comp: ga.lambda_comp,
        checkpoint_hash: out.checkpoint.hash(),
        eval_prediction_loss: dataset_prediction_loss(&out.net, &encoder, eval_set),
        delta_id: gac.delta_id.mean,
        delta_inv: gac.delta_inv.mean,
        delta_comp: gac.delta_comp.mean,
        e_gac: gac.e_gac,
        gar: gar
            .reports
            .iter()
            .map(|r| (r.horizon, r.aligned_error.mean, r.nonaligned_error.mean))
            .collect(),
    };
    Ok((row, out.checkpoint))
}

/// Runs one sweep axis; grid points train in parallel.
pub fn cmd_ablate(cfg: &ExperimentConfig, axis: AblationAxis) -> Result<AblationTable> {
    cfg.validate()?;
    let t0 = Instant::now();
    let train_set = load_or_generate(cfg, Split::Train)?;
    let eval_set = load_or_generate(cfg, Split::Eval)?;
    let start = pretrain(cfg, &train_set, &cfg.encoder.build()?)?;
    let grid = ablation_grid(cfg, axis);
    let results = grid
        .par_iter()
        .map(|(label, ga)| evaluate_config(cfg, &start, label, ga, &train_set, &eval_set))
        .collect::<Result<Vec<_>>>()?;
    let dir = cfg.output_dir.join("ablate").join(axis.as_str());
    let mut outputs = Vec::new();
    for (row, ckpt) in &results {
        let path = dir
            .join("checkpoints")
            .join(format!("{}.json", slug(&row.label)));
        ckpt.save(&path)?;
        outputs.push(path);
    }
    let table = AblationTable {
        axis,
        rows: results.into_iter().map(|(r, _)| r).collect(),
    };
    outputs.push(write_text(&dir.join("ablation.csv"), &table.to_csv())?);
    outputs.push(write_json(&dir.join("ablation.json"), &table)?);
    let mut manifest = RunManifest::new(cfg, format!("ablate-{}", axis.as_str()));
    manifest.stages.push(StageRecord {
        name: "ablate".into(),
        outputs,
        wall_clock_s: t0.elapsed().as_secs_f64(),
    });
    manifest.write(&dir.join("manifest.json"))?;
    Ok(table)
}

/// Collects every report under `output_dir` into `report.md`.
pub fn cmd_report(cfg: &ExperimentConfig) -> Result<PathBuf> {
    let root = &cfg.output_dir;
    let mut md = format!(
        "# Results\n\nconfig hash `{}`, tool version {}\n",
        config_hash(cfg),
        TOOL_VERSION
    );

    let mut gac_rows = Vec::new();
    for path in sorted_files(&root.join("probe"), "gac.json")? {
        let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
        let r: GacReport =
            serde_json::from_str(&text).map_err(|e| Error::parse(path.display().to_string(), e))?;
        gac_rows.push(format!(
            "| {} | {:.4} ± {:.4} | {:.4} ± {:.4} | {:.4} ± {:.4} | {:.4} |\n",
            r.model,
            r.delta_id.mean,
            r.delta_id.std,
            r.delta_inv.mean,
            r.delta_inv.std,
            r.delta_comp.mean,
            r.delta_comp.std,
            r.e_gac
        ));
    }
    if !gac_rows.is_empty() {
        md.push_str(
            "\n## GAC\n\n| model | Δ_id | Δ_inv | Δ_comp | E_GAC |\n|---|---|---|---|---|\n",
        );
        gac_rows.iter().for_each(|r| md.push_str(r));
    }

    let mut gar_rows = Vec::new();
    for path in sorted_files(&root.join("gar"), "gar.json")? {
        let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
        let s: GarSuite =
            serde_json::from_str(&text).map_err(|e| Error::parse(path.display().to_string(), e))?;
        for r in &s.reports {
            gar_rows.push(format!(
                "| {} | {} | {:.4} ± {:.4} | {:.4} ± {:.4} |\n",
                s.model,
                r.horizon,
                r.aligned_error.mean,
                r.aligned_error.std,
                r.nonaligned_error.mean,
                r.nonaligned_error.std
            ));
        }
    }
    if !gar_rows.is_empty() {
        md.push_str("\n## GAR\n\n| model | T | aligned | non-aligned |\n|---|---|---|---|\n");
        gar_rows.iter().for_each(|r| md.push_str(r));
    }

    for path in sorted_files(&root.join("ablate"), "ablation.json")? {
        let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
        let t: AblationTable =
            serde_json::from_str(&text).map_err(|e| Error::parse(path.display().to_string(), e))?;
        md.push_str(&format!(
            "\n## Ablation: {}\n\n| row | Δ_id | Δ_inv | Δ_comp | E_GAC | GAR (aligned / non-aligned) | eval l_pred |\n|---|---|---|---|---|---|---|\n",
            t.axis.as_str()
        ));
        for r in &t.rows {
            let gar: Vec<String> = r
                .gar
                .iter()
                .map(|g| format!("T={}: {:.4} / {:.4}", g.0, g.1, g.2))
                .collect();
            md.push_str(&format!(
                "| {} | {:.4} | {:.4} | {:.4} | {:.4} | {} | {:.3e} |\n",
                r.label,
                r.delta_id,
                r.delta_inv,
                r.delta_comp,
                r.e_gac,
                gar.join("; "),
                r.eval_prediction_loss
            ));
        }
    }
    let path = root.join("report.md");
    write_text(&path, &md)
}

/// `dir/*/name` in lexical order; a missing `dir` yields nothing.
fn sorted_files(dir: &Path, name: &str) -> Result<Vec<PathBuf>> {
    if !dir.is_dir() {
        return Ok(Vec::new());
    }
    let mut out: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(|e| Error::io(dir, e))?
        .filter_map(|e| e.ok().map(|e| e.path().join(name)))
        .filter(|p| p.is_file())
        .collect();
    out.sort();
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn model_references() {
        assert_eq!(resolve_model("exact").unwrap().label(), "exact");
        assert!(resolve_model("drift:0.1,0,0").is_ok());
        assert!(resolve_model("drift:0.1,0,0+noise:0.1").is_ok());
        assert!(matches!(
            resolve_model("warp:9"),
            Err(Error::UnknownModel(_))
        ));
        assert!(resolve_model("checkpoint:/nonexistent/x.json").is_err());
    }

    #[test]
    fn grids() {
        let cfg = ExperimentConfig::default();
        let lambdas: Vec<f64> = ablation_grid(&cfg, AblationAxis::Lambda)
            .iter()
            .map(|g| g.1.lambda_ga)
            .collect();
        assert_eq!(lambdas, vec![0.0, 0.1, 0.5, 1.0]);
        let labels: Vec<String> = ablation_grid(&cfg, AblationAxis::Constraints)
            .into_iter()
            .map(|g| g.0)
            .collect();
        assert_eq!(
            labels,
            ["baseline", "id-only", "inv-only", "comp-only", "full"]
        );
        assert_eq!(ablation_grid(&cfg, AblationAxis::Span).len(), 4);
        assert_eq!(ablation_grid(&cfg, AblationAxis::Mode).len(), 3);
        assert!(AblationAxis::parse("bogus").is_err());
    }

    #[test]
    fn labels() {
        assert_eq!(
            default_label(&GALossConfig {
                lambda_ga: 0.0,
                ..Default::default()
            }),
            "baseline"
        );
        assert_eq!(default_label(&GALossConfig::default()), "ga");
        assert_eq!(slug("drift:0.1,0,0"), "drift_0.1_0_0");
    }
}
