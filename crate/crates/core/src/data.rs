//! Synthetic trajectory datasets and their on-disk format.
//!
//! Each sequence is stored as two files in a split directory:
//! `traj_NNNN.jsonl` (a header line followed by one pose object per line)
//! and `actions_NNNN.json` (a JSON array of `[dx, dy, dtheta]` triples).

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::models::{parse_violation_spec, rollout, PerturbedModel, Trajectory};
use crate::rng::{derive_seed, noise_source};
use crate::se2::Pose2;
use crate::segments::{ActionIncrement, ActionSegment};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ActionDistributionKind {
    /// Independent Gaussians per component around a forward-moving mean.
    ForwardBiased,
    /// Uniform in `mean ± std·√3` per component.
    Uniform,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ActionDistribution {
    pub kind: ActionDistributionKind,
    pub mean: [f64; 3],
    pub std: [f64; 3],
}

impl Default for ActionDistribution {
    fn default() -> Self {
        ActionDistribution {
            kind: ActionDistributionKind::ForwardBiased,
            mean: [0.2, 0.0, 0.0],
            std: [0.05, 0.02, 0.05],
        }
    }
}

impl ActionDistribution {
    pub fn validate(&self) -> Result<()> {
        if self.std.iter().any(|s| !(*s >= 0.0) || !s.is_finite())
            || self.mean.iter().any(|m| !m.is_finite())
        {
            return Err(Error::InvalidArgument(
                "action distribution needs finite mean and std >= 0".into(),
            ));
        }
        Ok(())
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> ActionIncrement {
        let v: [f64; 3] = std::array::from_fn(|i| match self.kind {
            ActionDistributionKind::ForwardBiased => Normal::new(self.mean[i], self.std[i])
                .expect("validated std")
                .sample(rng),
            ActionDistributionKind::Uniform => {
                let half = self.std[i] * 3f64.sqrt();
                if half == 0.0 {
                    self.mean[i]
                } else {
                    rng.random_range(self.mean[i] - half..=self.mean[i] + half)
                }
            }
        });
        let pi = std::f64::consts::PI;
        ActionIncrement::new(v[0], v[1], v[2].clamp(-pi, pi))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DatasetSpec {
    pub n_train: usize,
    pub n_eval: usize,
    /// Actions per sequence; trajectories hold `length + 1` poses.
    pub length: usize,
    pub actions: ActionDistribution,
    /// Reference model that generates the poses (`exact`, `drift:…`, …).
    pub model: String,
    /// Start positions are uniform in `±start_spread` meters, headings uniform.
    pub start_spread: f64,
    pub seed: u64,
}

impl Default for DatasetSpec {
    fn default() -> Self {
        DatasetSpec {
            n_train: 200,
            n_eval: 20,
            length: 64,
            actions: ActionDistribution::default(),
            model: "exact".into(),
            start_spread: 2.0,
            seed: 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Eval,
}

impl Split {
    pub fn dir_name(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Eval => "eval",
        }
    }

    fn stream(self) -> u64 {
        match self {
            Split::Train => 0,
            Split::Eval => 1,
        }
    }
}

/// One recorded sequence: poses `s_0 … s_T` and the actions between them.
#[derive(Debug, Clone, PartialEq)]
pub struct Sequence {
    pub trajectory: Trajectory,
    pub actions: ActionSegment,
    pub seed: u64,
}

impl Sequence {
    pub fn new(trajectory: Trajectory, actions: ActionSegment, seed: u64) -> Result<Self> {
        if trajectory.len() != actions.len() + 1 {
            return Err(Error::LengthMismatch {
                left: trajectory.len(),
                right: actions.len() + 1,
            });
        }
        Ok(Sequence {
            trajectory,
            actions,
            seed,
        })
    }

    pub fn start(&self) -> &Pose2 {
        self.trajectory.start()
    }

    pub fn pose(&self, t: usize) -> &Pose2 {
        &self.trajectory.poses[t]
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Dataset {
    pub sequences: Vec<Sequence>,
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.sequences.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sequences.is_empty()
    }
}

pub fn generate_split(spec: &DatasetSpec, split: Split) -> Result<Dataset> {
    spec.actions.validate()?;
    let model = PerturbedModel::new(parse_violation_spec(&spec.model)?)?;
    let count = match split {
        Split::Train => spec.n_train,
        Split::Eval => spec.n_eval,
    };
    let pi = std::f64::consts::PI;
    let sequences = (0..count)
        .map(|i| {
            let seed = derive_seed(spec.seed, &[split.stream(), i as u64]);
            let mut rng = noise_source(seed);
            let spread = spec.start_spread;
            let start = Pose2::new(
                rng.random_range(-pi..pi),
                if spread > 0.0 {
                    rng.random_range(-spread..spread)
                } else {
                    0.0
                },
                if spread > 0.0 {
                    rng.random_range(-spread..spread)
                } else {
                    0.0
                },
            );
            let actions: ActionSegment = (0..spec.length)
                .map(|_| spec.actions.sample(&mut rng))
                .collect();
            let trajectory = rollout(&model, &start, &actions, derive_seed(seed, &[1]));
            Sequence {
                trajectory,
                actions,
                seed,
            }
        })
        .collect();
    Ok(Dataset { sequences })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryHeader {
    pub seed: u64,
    pub model: String,
    pub actions_file: String,
}

/// Writes `bytes` to `path` via a temporary sibling and a rename, creating
/// parent directories as needed.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = PathBuf::from(tmp);
    {
        let mut f = fs::File::create(&tmp).map_err(|e| Error::io(&tmp, e))?;
        f.write_all(bytes).map_err(|e| Error::io(&tmp, e))?;
    }
    fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}

pub fn trajectory_jsonl(traj: &Trajectory, header: &TrajectoryHeader) -> Vec<u8> {
    let mut out = serde_json::to_vec(header).expect("header serializes");
    out.push(b'\n');
    for p in &traj.poses {
        serde_json::to_writer(&mut out, p).expect("pose serializes");
        out.push(b'\n');
    }
    out
}

pub fn parse_trajectory_jsonl(text: &str, context: &str) -> Result<(TrajectoryHeader, Trajectory)> {
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let header: TrajectoryHeader = serde_json::from_str(
        lines
            .next()
            .ok_or_else(|| Error::parse(context, "empty file"))?,
    )
    .map_err(|e| Error::parse(context, e))?;
    let poses = lines
        .map(|l| serde_json::from_str::<Pose2>(l).map_err(|e| Error::parse(context, e)))
        .collect::<Result<Vec<_>>>()?;
    if poses.iter().any(|p| !p.is_valid()) {
        return Err(Error::parse(context, "invalid pose"));
    }
    Ok((header, Trajectory::new(poses)?))
}

/// Writes a split under `dir/<split>/`; returns the written trajectory files.
pub fn write_split(
    dir: &Path,
    split: Split,
    spec: &DatasetSpec,
    data: &Dataset,
) -> Result<Vec<PathBuf>> {
    let split_dir = dir.join(split.dir_name());
    let mut written = Vec::new();
    for (i, seq) in data.sequences.iter().enumerate() {
        let actions_file = format!("actions_{i:04}.json");
        let mut actions = serde_json::to_vec(&seq.actions).expect("actions serialize");
        actions.push(b'\n');
        write_atomic(&split_dir.join(&actions_file), &actions)?;
        let header = TrajectoryHeader {
            seed: seq.seed,
            model: spec.model.clone(),
            actions_file,
        };
        let path = split_dir.join(format!("traj_{i:04}.jsonl"));
        write_atomic(&path, &trajectory_jsonl(&seq.trajectory, &header))?;
        written.push(path);
    }
    Ok(written)
}

pub fn load_split(dir: &Path, split: Split) -> Result<Dataset> {
    let split_dir = dir.join(split.dir_name());
    if !split_dir.is_dir() {
        return Err(Error::MissingDataset(split_dir));
    }
    let mut files: Vec<PathBuf> = fs::read_dir(&split_dir)
        .map_err(|e| Error::io(&split_dir, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| {
            p.file_name()
                .and_then(|n| n.to_str())
                .is_some_and(|n| n.starts_with("traj_") && n.ends_with(".jsonl"))
        })
        .collect();
    files.sort();
    if files.is_empty() {
        return Err(Error::MissingDataset(split_dir));
    }
    let sequences = files
        .iter()
        .map(|path| {
            let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
            let (header, trajectory) = parse_trajectory_jsonl(&text, &path.display().to_string())?;
            let apath = split_dir.join(&header.actions_file);
            let atext = fs::read_to_string(&apath).map_err(|e| Error::io(&apath, e))?;
            let actions: ActionSegment = serde_json::from_str(&atext)
                .map_err(|e| Error::parse(apath.display().to_string(), e))?;
            Sequence::new(trajectory, actions, header.seed)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Dataset { sequences })
}
