//! Seeded train/test datasets and their on-disk layout.
//!
//! A dataset directory holds `manifest.txt` (flat `key=value` lines),
//! `train/NNN.in` with one `train/NNN.sol.K` per gold output, and
//! `test/NNN.in`.

use std::fs;
use std::path::{Path, PathBuf};

use rand::SeedableRng;
use rayon::prelude::*;
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::problem::{
    GoldSolutionSet, Instance, ProblemAdapter, ProblemError, ProblemRng, Registry, SizeDescriptor, Solution,
};
use crate::problems::GENERATION_ATTEMPTS;

/// Enumeration cap for training gold sets.
pub const GOLD_CAP: usize = 64;

const MANIFEST: &str = "manifest.txt";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TrainExample {
    pub instance: Instance,
    pub gold: GoldSolutionSet,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Dataset {
    pub problem_id: String,
    pub seed: u64,
    pub train_size: SizeDescriptor,
    pub test_size: SizeDescriptor,
    pub train: Vec<TrainExample>,
    pub test: Vec<Instance>,
}

/// Arguments of [`build_dataset`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DatasetRequest {
    pub problem_id: String,
    pub train_count: usize,
    pub test_count: usize,
    pub train_size: SizeDescriptor,
    pub test_size: SizeDescriptor,
    pub seed: u64,
}

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error(transparent)]
    Problem(#[from] ProblemError),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}: {message}")]
    Parse { path: PathBuf, line: usize, message: String },
    #[error("{path}: integrity check failed: {message}")]
    Integrity { path: PathBuf, message: String },
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> DatasetError + '_ {
    move |source| DatasetError::Io { path: path.to_path_buf(), source }
}

/// Seed of one instance, derived from the dataset seed and its position.
pub fn instance_seed(seed: u64, split: &str, index: usize, attempt: usize) -> u64 {
    let digest = Sha256::digest(format!("{seed}/{split}/{index}/{attempt}").as_bytes());
    u64::from_le_bytes(digest[..8].try_into().expect("digest has 32 bytes"))
}

fn generate_at(adapter: &dyn ProblemAdapter, size: &SizeDescriptor, seed: u64) -> Result<Instance, ProblemError> {
    let mut rng = ProblemRng::seed_from_u64(seed);
    let mut instance = adapter.generate(size, &mut rng)?;
    instance.seed = Some(seed);
    Ok(instance)
}

/// Generate a dataset. Deterministic in the request, seed included.
pub fn build_dataset(registry: &Registry, req: &DatasetRequest) -> Result<Dataset, DatasetError> {
    let handle = registry.get(&req.problem_id)?;
    let adapter = handle.adapter.as_ref();

    let mut train_instances = Vec::with_capacity(req.train_count);
    for index in 0..req.train_count {
        let mut picked = None;
        for attempt in 0..GENERATION_ATTEMPTS {
            let inst = generate_at(adapter, &req.train_size, instance_seed(req.seed, "train", index, attempt))?;
            if adapter.solve(&inst)? != Solution::Infeasible {
                picked = Some(inst);
                break;
            }
        }
        train_instances.push(picked.ok_or_else(|| ProblemError::Generation {
            problem: req.problem_id.clone(),
            size: req.train_size.clone(),
            attempts: GENERATION_ATTEMPTS,
        })?);
    }

    let train = train_instances
        .into_par_iter()
        .map(|instance| {
            let en = adapter.enumerate(&instance, GOLD_CAP)?;
            Ok(TrainExample { gold: GoldSolutionSet { outputs: en.solutions, complete: !en.truncated }, instance })
        })
        .collect::<Result<Vec<_>, ProblemError>>()?;

    let mut test = Vec::with_capacity(req.test_count);
    for index in 0..req.test_count {
        let mut picked = None;
        for attempt in 0..GENERATION_ATTEMPTS {
            let inst = generate_at(adapter, &req.test_size, instance_seed(req.seed, "test", index, attempt))?;
            if !train.iter().any(|t| t.instance.text == inst.text) {
                picked = Some(inst);
                break;
            }
        }
        test.push(picked.ok_or_else(|| ProblemError::Generation {
            problem: req.problem_id.clone(),
            size: req.test_size.clone(),
            attempts: GENERATION_ATTEMPTS,
        })?);
    }

    Ok(Dataset {
        problem_id: req.problem_id.clone(),
        seed: req.seed,
        train_size: req.train_size.clone(),
        test_size: req.test_size.clone(),
        train,
        test,
    })
}

/// Append `count` test instances of another size. Instances repeating a
/// train or test text are redrawn.
pub fn add_test_instances(
    registry: &Registry,
    dataset: &mut Dataset,
    size: &SizeDescriptor,
    count: usize,
) -> Result<(), DatasetError> {
    let adapter = registry.get(&dataset.problem_id)?.adapter.as_ref();
    let split = format!("test:{size}");
    for index in 0..count {
        let mut picked = None;
        for attempt in 0..GENERATION_ATTEMPTS {
            let inst = generate_at(adapter, size, instance_seed(dataset.seed, &split, index, attempt))?;
            let seen = dataset.train.iter().any(|t| t.instance.text == inst.text)
                || dataset.test.iter().any(|t| t.text == inst.text);
            if !seen {
                picked = Some(inst);
                break;
            }
        }
        dataset.test.push(picked.ok_or_else(|| ProblemError::Generation {
            problem: dataset.problem_id.clone(),
            size: size.clone(),
            attempts: GENERATION_ATTEMPTS,
        })?);
    }
    Ok(())
}

fn write(path: &Path, contents: &str) -> Result<(), DatasetError> {
    fs::write(path, contents).map_err(io_err(path))
}

/// Write `dataset` under `dir`, creating it if needed.
pub fn save_dataset(dataset: &Dataset, dir: &Path) -> Result<(), DatasetError> {
    for sub in ["train", "test"] {
        let p = dir.join(sub);
        fs::create_dir_all(&p).map_err(io_err(&p))?;
    }
    let mut manifest = vec![
        format!("problem={}", dataset.problem_id),
        format!("seed={}", dataset.seed),
        format!("train_size={}", dataset.train_size),
        format!("test_size={}", dataset.test_size),
        format!("train_count={}", dataset.train.len()),
        format!("test_count={}", dataset.test.len()),
    ];
    let seed_text = |s: Option<u64>| s.map_or_else(|| "none".to_string(), |s| s.to_string());
    for (i, ex) in dataset.train.iter().enumerate() {
        write(&dir.join(format!("train/{i:03}.in")), &ex.instance.text)?;
        for (k, out) in ex.gold.outputs.iter().enumerate() {
            write(&dir.join(format!("train/{i:03}.sol.{k}")), out)?;
        }
        manifest.push(format!("train.{i:03}.seed={}", seed_text(ex.instance.seed)));
        manifest.push(format!("train.{i:03}.size={}", ex.instance.size));
        manifest.push(format!("train.{i:03}.gold={}", ex.gold.outputs.len()));
        manifest.push(format!("train.{i:03}.complete={}", ex.gold.complete));
    }
    for (i, inst) in dataset.test.iter().enumerate() {
        write(&dir.join(format!("test/{i:03}.in")), &inst.text)?;
        manifest.push(format!("test.{i:03}.seed={}", seed_text(inst.seed)));
        manifest.push(format!("test.{i:03}.size={}", inst.size));
    }
    write(&dir.join(MANIFEST), &(manifest.join("\n") + "\n"))
}

struct Manifest {
    path: PathBuf,
    entries: Vec<(usize, String, String)>,
}

impl Manifest {
    fn read(path: PathBuf) -> Result<Self, DatasetError> {
        let text = fs::read_to_string(&path).map_err(io_err(&path))?;
        let mut entries = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let Some((k, v)) = line.split_once('=') else {
                return Err(DatasetError::Parse { path, line: i + 1, message: format!("`{line}` is not key=value") });
            };
            entries.push((i + 1, k.trim().to_string(), v.trim().to_string()));
        }
        Ok(Self { path, entries })
    }

    fn raw(&self, key: &str) -> Result<(usize, &str), DatasetError> {
        self.entries.iter().find(|(_, k, _)| k == key).map(|(n, _, v)| (*n, v.as_str())).ok_or_else(|| {
            DatasetError::Parse {
                path: self.path.clone(),
                line: self.entries.last().map_or(1, |e| e.0),
                message: format!("missing key `{key}`"),
            }
        })
    }

    fn get<T: std::str::FromStr>(&self, key: &str) -> Result<T, DatasetError>
    where
        T::Err: std::fmt::Display,
    {
        let (line, v) = self.raw(key)?;
        v.parse().map_err(|e: T::Err| DatasetError::Parse {
            path: self.path.clone(),
            line,
            message: format!("bad value for `{key}`: {e}"),
        })
    }

    fn seed(&self, key: &str) -> Result<Option<u64>, DatasetError> {
        if self.raw(key)?.1 == "none" {
            Ok(None)
        } else {
            self.get(key).map(Some)
        }
    }
}

fn read_instance(
    adapter: &dyn ProblemAdapter,
    problem_id: &str,
    path: &Path,
    seed: Option<u64>,
    size: &SizeDescriptor,
) -> Result<Instance, DatasetError> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    let instance = adapter.instance_from_text(&text).map_err(|e| DatasetError::Parse {
        path: path.to_path_buf(),
        line: e.line.unwrap_or(1),
        message: e.message,
    })?;
    if instance.text != text {
        return Err(DatasetError::Integrity {
            path: path.to_path_buf(),
            message: "instance text is not canonical".into(),
        });
    }
    if &instance.size != size {
        return Err(DatasetError::Integrity {
            path: path.to_path_buf(),
            message: format!("manifest size {size} disagrees with instance size {}", instance.size),
        });
    }
    Ok(Instance { problem_id: problem_id.to_string(), seed, ..instance })
}

/// Read and validate a dataset written by [`save_dataset`]. Every gold
/// output is re-verified.
pub fn load_dataset(registry: &Registry, dir: &Path) -> Result<Dataset, DatasetError> {
    let manifest = Manifest::read(dir.join(MANIFEST))?;
    let problem_id: String = manifest.get("problem")?;
    let adapter = registry.get(&problem_id)?.adapter.clone();
    let train_count: usize = manifest.get("train_count")?;
    let test_count: usize = manifest.get("test_count")?;

    let mut train = Vec::with_capacity(train_count);
    for i in 0..train_count {
        let size: SizeDescriptor = manifest.get(&format!("train.{i:03}.size"))?;
        let seed = manifest.seed(&format!("train.{i:03}.seed"))?;
        let path = dir.join(format!("train/{i:03}.in"));
        let instance = read_instance(adapter.as_ref(), &problem_id, &path, seed, &size)?;
        let gold_count: usize = manifest.get(&format!("train.{i:03}.gold"))?;
        let mut outputs = std::collections::BTreeSet::new();
        for k in 0..gold_count {
            let sol = dir.join(format!("train/{i:03}.sol.{k}"));
            let text = fs::read_to_string(&sol).map_err(io_err(&sol))?;
            let verdict = adapter.verify(&instance, &text);
            if !verdict.is_correct() {
                return Err(DatasetError::Integrity {
                    path: sol,
                    message: format!("gold output fails verification: {}", verdict.reason),
                });
            }
            outputs.insert(text);
        }
        if outputs.is_empty() {
            return Err(DatasetError::Integrity { path, message: "training instance has no gold output".into() });
        }
        let complete = manifest.get(&format!("train.{i:03}.complete"))?;
        train.push(TrainExample { instance, gold: GoldSolutionSet { outputs, complete } });
    }

    let mut test = Vec::with_capacity(test_count);
    for i in 0..test_count {
        let size: SizeDescriptor = manifest.get(&format!("test.{i:03}.size"))?;
        let seed = manifest.seed(&format!("test.{i:03}.seed"))?;
        let path = dir.join(format!("test/{i:03}.in"));
        let instance = read_instance(adapter.as_ref(), &problem_id, &path, seed, &size)?;
        if train.iter().any(|t| t.instance.text == instance.text) {
            return Err(DatasetError::Integrity {
                path,
                message: "test instance duplicates a training instance".into(),
            });
        }
        test.push(instance);
    }

    Ok(Dataset {
        problem_id,
        seed: manifest.get("seed")?,
        train_size: manifest.get("train_size")?,
        test_size: manifest.get("test_size")?,
        train,
        test,
    })
}
