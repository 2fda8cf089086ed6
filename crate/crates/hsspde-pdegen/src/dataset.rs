//! Dataset containers and the on-disk format: one JSON manifest plus raw
//! little-endian `f64` tensor files. Save followed by load is bitwise exact.

use crate::error::{PdegenError, Result};
use hsspde_neural::Tensor;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

pub const DATASET_MANIFEST_FILE: &str = "dataset.json";
pub const DATASET_SCHEMA_VERSION: u32 = 1;
pub const GENERATOR_VERSION: &str = "1";

/// Grid description: the resolution data was generated at, the stored
/// (downsampled) resolution, domain bounds and spacing per mode.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridMeta {
    pub gen_extent: Vec<usize>,
    pub out_extent: Vec<usize>,
    pub domain: Vec<(f64, f64)>,
    pub spacing: Vec<f64>,
}

/// Everything needed to regenerate the dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetMeta {
    pub equation: String,
    pub n_train: usize,
    pub n_test: usize,
    pub seed: u64,
    pub generator_version: String,
    pub grid: GridMeta,
    pub constants: BTreeMap<String, f64>,
    pub notes: BTreeMap<String, String>,
}

/// Paired samples: `inputs[b] -> targets[b]`, train split first.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub inputs: Tensor,
    pub targets: Tensor,
    pub meta: DatasetMeta,
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.inputs.shape()[0]
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// (train, test) views materialized as copies.
    pub fn split(&self) -> (Dataset, Dataset) {
        let n = self.len();
        let take = |lo: usize, hi: usize| -> Dataset {
            let sub = |t: &Tensor| {
                let mut shape = t.shape().to_vec();
                shape[0] = hi - lo;
                let per = t.len() / n;
                Tensor::from_vec(&shape, t.data()[lo * per..hi * per].to_vec()).unwrap()
            };
            Dataset {
                inputs: sub(&self.inputs),
                targets: sub(&self.targets),
                meta: self.meta.clone(),
            }
        };
        (
            take(0, self.meta.n_train),
            take(self.meta.n_train, n),
        )
    }
}

/// Time series per trajectory: `states[b][t]` with step `dt`.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryDataset {
    pub states: Tensor,
    pub dt: f64,
    pub meta: DatasetMeta,
}

impl TrajectoryDataset {
    pub fn n_trajectories(&self) -> usize {
        self.states.shape()[0]
    }

    pub fn n_steps(&self) -> usize {
        self.states.shape()[1]
    }
}

#[derive(Debug, Clone)]
pub enum LoadedDataset {
    Steady(Dataset),
    Trajectory(TrajectoryDataset),
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TensorEntry {
    file: String,
    shape: Vec<usize>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct DiskManifest {
    schema_version: u32,
    kind: String,
    meta: DatasetMeta,
    #[serde(skip_serializing_if = "Option::is_none")]
    dt: Option<f64>,
    tensors: BTreeMap<String, TensorEntry>,
}

fn write_tensor(dir: &Path, name: &str, t: &Tensor) -> Result<TensorEntry> {
    let file = format!("{name}.bin");
    let mut bytes = Vec::with_capacity(t.len() * 8);
    for v in t.data() {
        bytes.extend_from_slice(&v.to_le_bytes());
    }
    fs::write(dir.join(&file), bytes)?;
    Ok(TensorEntry {
        file,
        shape: t.shape().to_vec(),
    })
}

fn read_tensor(dir: &Path, name: &str, entry: &TensorEntry) -> Result<Tensor> {
    let path = dir.join(&entry.file);
    if !path.exists() {
        return Err(PdegenError::MissingFile(path.display().to_string()));
    }
    let bytes = fs::read(&path)?;
    let expected: usize = entry.shape.iter().product::<usize>() * 8;
    if bytes.len() != expected {
        return Err(PdegenError::TensorSizeMismatch {
            name: name.to_string(),
            shape: entry.shape.clone(),
            expected,
            actual: bytes.len(),
        });
    }
    let data: Vec<f64> = bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    Ok(Tensor::from_vec(&entry.shape, data)?)
}

fn write_manifest(dir: &Path, manifest: &DiskManifest) -> Result<()> {
    let json = serde_json::to_string_pretty(manifest)
        .map_err(|e| PdegenError::Manifest(e.to_string()))?;
    fs::write(dir.join(DATASET_MANIFEST_FILE), json + "\n")?;
    Ok(())
}

pub fn save_steady(ds: &Dataset, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;
    let mut tensors = BTreeMap::new();
    tensors.insert("inputs".to_string(), write_tensor(dir, "inputs", &ds.inputs)?);
    tensors.insert(
        "targets".to_string(),
        write_tensor(dir, "targets", &ds.targets)?,
    );
    write_manifest(
        dir,
        &DiskManifest {
            schema_version: DATASET_SCHEMA_VERSION,
            kind: "steady".to_string(),
            meta: ds.meta.clone(),
            dt: None,
            tensors,
        },
    )
}

pub fn save_trajectory(ds: &TrajectoryDataset, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;
    let mut tensors = BTreeMap::new();
    tensors.insert("states".to_string(), write_tensor(dir, "states", &ds.states)?);
    write_manifest(
        dir,
        &DiskManifest {
            schema_version: DATASET_SCHEMA_VERSION,
            kind: "trajectory".to_string(),
            meta: ds.meta.clone(),
            dt: Some(ds.dt),
            tensors,
        },
    )
}

pub fn load(dir: &Path) -> Result<LoadedDataset> {
    let path = dir.join(DATASET_MANIFEST_FILE);
    if !path.exists() {
        return Err(PdegenError::MissingFile(path.display().to_string()));
    }
    let json = fs::read_to_string(&path)?;
    let manifest: DiskManifest =
        serde_json::from_str(&json).map_err(|e| PdegenError::Manifest(e.to_string()))?;
    if manifest.schema_version != DATASET_SCHEMA_VERSION {
        return Err(PdegenError::Manifest(format!(
            "schema version {} unsupported (expected {})",
            manifest.schema_version, DATASET_SCHEMA_VERSION
        )));
    }
    let need = |name: &str| -> Result<&TensorEntry> {
        manifest
            .tensors
            .get(name)
            .ok_or_else(|| PdegenError::Manifest(format!("manifest lacks tensor '{name}'")))
    };
    match manifest.kind.as_str() {
        "steady" => {
            let inputs = read_tensor(dir, "inputs", need("inputs")?)?;
            let targets = read_tensor(dir, "targets", need("targets")?)?;
            if inputs.shape()[0] != targets.shape()[0] {
                return Err(PdegenError::Manifest(format!(
                    "inputs hold {} samples but targets {}",
                    inputs.shape()[0],
                    targets.shape()[0]
                )));
            }
            Ok(LoadedDataset::Steady(Dataset {
                inputs,
                targets,
                meta: manifest.meta,
            }))
        }
        "trajectory" => {
            let states = read_tensor(dir, "states", need("states")?)?;
            let dt = manifest
                .dt
                .ok_or_else(|| PdegenError::Manifest("trajectory manifest lacks dt".into()))?;
            Ok(LoadedDataset::Trajectory(TrajectoryDataset {
                states,
                dt,
                meta: manifest.meta,
            }))
        }
        other => Err(PdegenError::Manifest(format!("unknown dataset kind '{other}'"))),
    }
}

/// Strided subsampling keeping index 0 of each stride block; `factors` gives
/// one stride per tensor axis and must divide the extent.
pub fn downsample(t: &Tensor, factors: &[usize]) -> Result<Tensor> {
    if factors.len() != t.ndim() || factors.iter().any(|f| *f == 0) {
        return Err(PdegenError::Shape {
            context: format!(
                "downsample factors {:?} do not match tensor rank {}",
                factors,
                t.ndim()
            ),
        });
    }
    for (axis, (&e, &f)) in t.shape().iter().zip(factors).enumerate() {
        if e % f != 0 {
            return Err(PdegenError::Shape {
                context: format!("axis {axis}: stride {f} does not divide extent {e}"),
            });
        }
    }
    let out_shape: Vec<usize> = t.shape().iter().zip(factors).map(|(e, f)| e / f).collect();
    let mut out = Tensor::zeros(&out_shape);
    let in_shape = t.shape().to_vec();
    let mut in_strides = vec![1usize; in_shape.len()];
    for i in (0..in_shape.len().saturating_sub(1)).rev() {
        in_strides[i] = in_strides[i + 1] * in_shape[i + 1];
    }
    let total: usize = out_shape.iter().product();
    let od = out.data_mut();
    for flat in 0..total {
        let mut rem = flat;
        let mut src = 0usize;
        for axis in (0..out_shape.len()).rev() {
            let idx = rem % out_shape[axis];
            rem /= out_shape[axis];
            src += idx * factors[axis] * in_strides[axis];
        }
        od[flat] = t.data()[src];
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn meta() -> DatasetMeta {
        DatasetMeta {
            equation: "test".into(),
            n_train: 2,
            n_test: 1,
            seed: 7,
            generator_version: GENERATOR_VERSION.into(),
            grid: GridMeta {
                gen_extent: vec![4],
                out_extent: vec![4],
                domain: vec![(0.0, 1.0)],
                spacing: vec![0.25],
            },
            constants: BTreeMap::new(),
            notes: BTreeMap::new(),
        }
    }

    #[test]
    fn steady_round_trip_is_bitwise() {
        let ds = Dataset {
            inputs: Tensor::from_vec(&[3, 4], (0..12).map(|i| (i as f64).sin()).collect()).unwrap(),
            targets: Tensor::from_vec(&[3, 4], (0..12).map(|i| (i as f64).cos()).collect()).unwrap(),
            meta: meta(),
        };
        let dir = tempfile::tempdir().unwrap();
        save_steady(&ds, dir.path()).unwrap();
        match load(dir.path()).unwrap() {
            LoadedDataset::Steady(back) => {
                assert_eq!(back.inputs, ds.inputs);
                assert_eq!(back.targets, ds.targets);
                assert_eq!(back.meta, ds.meta);
            }
            _ => panic!("expected steady dataset"),
        }
    }

    #[test]
    fn trajectory_round_trip_is_bitwise() {
        let ds = TrajectoryDataset {
            states: Tensor::from_vec(&[2, 3, 4], (0..24).map(|i| i as f64 * 0.5).collect())
                .unwrap(),
            dt: 0.2,
            meta: meta(),
        };
        let dir = tempfile::tempdir().unwrap();
        save_trajectory(&ds, dir.path()).unwrap();
        match load(dir.path()).unwrap() {
            LoadedDataset::Trajectory(back) => {
                assert_eq!(back.states, ds.states);
                assert_eq!(back.dt, ds.dt);
            }
            _ => panic!("expected trajectory dataset"),
        }
    }

    #[test]
    fn truncated_tensor_file_is_a_size_mismatch() {
        let ds = Dataset {
            inputs: Tensor::zeros(&[2, 4]),
            targets: Tensor::zeros(&[2, 4]),
            meta: meta(),
        };
        let dir = tempfile::tempdir().unwrap();
        save_steady(&ds, dir.path()).unwrap();
        let path = dir.path().join("inputs.bin");
        let bytes = fs::read(&path).unwrap();
        fs::write(&path, &bytes[..bytes.len() - 1]).unwrap();
        let err = load(dir.path()).unwrap_err();
        assert!(err.to_string().contains("inputs"));
        assert!(err.to_string().contains("bytes"));
    }

    #[test]
    fn corrupted_manifest_shape_names_the_tensor() {
        let ds = Dataset {
            inputs: Tensor::zeros(&[2, 4]),
            targets: Tensor::zeros(&[2, 4]),
            meta: meta(),
        };
        let dir = tempfile::tempdir().unwrap();
        save_steady(&ds, dir.path()).unwrap();
        let path = dir.path().join(DATASET_MANIFEST_FILE);
        let mut value: serde_json::Value =
            serde_json::from_str(&fs::read_to_string(&path).unwrap()).unwrap();
        value["tensors"]["inputs"]["shape"][1] = serde_json::json!(5);
        fs::write(&path, serde_json::to_string_pretty(&value).unwrap()).unwrap();
        let err = load(dir.path()).unwrap_err();
        assert!(err.to_string().contains("inputs"), "got: {err}");
    }

    #[test]
    fn missing_tensor_file_is_reported() {
        let ds = Dataset {
            inputs: Tensor::zeros(&[1, 2]),
            targets: Tensor::zeros(&[1, 2]),
            meta: meta(),
        };
        let dir = tempfile::tempdir().unwrap();
        save_steady(&ds, dir.path()).unwrap();
        fs::remove_file(dir.path().join("targets.bin")).unwrap();
        assert!(matches!(
            load(dir.path()),
            Err(PdegenError::MissingFile(_))
        ));
    }

    #[test]
    fn downsample_identity_and_stride() {
        let t = Tensor::from_vec(&[8], (0..8).map(|i| i as f64).collect()).unwrap();
        assert_eq!(downsample(&t, &[1]).unwrap(), t);
        let d = downsample(&t, &[4]).unwrap();
        assert_eq!(d.data(), &[0.0, 4.0]);
        assert!(downsample(&t, &[3]).is_err());
    }

    #[test]
    fn downsample_keeps_first_index_of_each_block_in_2d() {
        let t = Tensor::from_vec(&[4, 4], (0..16).map(|i| i as f64).collect()).unwrap();
        let d = downsample(&t, &[2, 2]).unwrap();
        assert_eq!(d.shape(), &[2, 2]);
        assert_eq!(d.data(), &[0.0, 2.0, 8.0, 10.0]);
    }

    #[test]
    fn downsampled_sine_matches_reevaluated_analytic_function() {
        // 1024 -> 256 keeps indices 0, 4, 8, ...
        let n = 1024usize;
        let f = |x: f64| (2.0 * std::f64::consts::PI * x).sin();
        let fine =
            Tensor::from_vec(&[n], (0..n).map(|i| f(i as f64 / n as f64)).collect()).unwrap();
        let coarse = downsample(&fine, &[4]).unwrap();
        for (j, v) in coarse.data().iter().enumerate() {
            let x = (4 * j) as f64 / n as f64;
            assert!((v - f(x)).abs() <= 1e-14);
        }
    }
}
