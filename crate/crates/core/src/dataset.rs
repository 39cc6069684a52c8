//! Training-set generation: maps, start/goal pairs and dilated A* label
//! masks, indexed by a JSON manifest.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{self, Density};
use crate::prior;
use crate::search;
use crate::seed;

pub const MANIFEST_FORMAT: &str = "dataset/1";
pub const MANIFEST_FILE: &str = "manifest.json";
pub const DEFAULT_COUNT: usize = 2000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetSample {
    /// Map JSON, relative to the manifest.
    pub map: PathBuf,
    /// Label mask NPRI, relative to the manifest.
    pub label: PathBuf,
    /// `[col, row]`.
    pub start: [usize; 2],
    pub goal: [usize; 2],
    pub density: Density,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub format: String,
    pub samples: Vec<DatasetSample>,
}

impl Manifest {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let m: Manifest = serde_json::from_str(&std::fs::read_to_string(path)?).map_err(Error::from_json)?;
        if m.format != MANIFEST_FORMAT {
            return Err(Error::format(
                format!("expected format `{MANIFEST_FORMAT}`, got `{}`", m.format),
                crate::Location::Unknown,
            ));
        }
        Ok(m)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DatasetOptions {
    pub size: usize,
    pub min_separation: f64,
    pub dilation: f64,
}

impl Default for DatasetOptions {
    fn default() -> Self {
        Self::sized(grid::DEFAULT_SIZE)
    }
}

impl DatasetOptions {
    /// Options for `size x size` maps, with the start/goal separation scaled
    /// from 100 cells at the default size.
    pub fn sized(size: usize) -> Self {
        DatasetOptions {
            size,
            min_separation: 100.0 * size as f64 / grid::DEFAULT_SIZE as f64,
            dilation: search::DEFAULT_DILATION,
        }
    }
}

pub fn generate_dataset(seed: u64, count: usize, densities: &[Density], out_dir: impl AsRef<Path>) -> Result<Manifest> {
    generate_dataset_with(seed, count, densities, out_dir, &DatasetOptions::default())
}

/// Writes `count` samples, cycling through `densities` so each gets an equal
/// share (the first `count % len` densities get one extra).
pub fn generate_dataset_with(
    seed: u64,
    count: usize,
    densities: &[Density],
    out_dir: impl AsRef<Path>,
    opts: &DatasetOptions,
) -> Result<Manifest> {
    if densities.is_empty() {
        return Err(Error::invalid("no densities given"));
    }
    let out = out_dir.as_ref();
    std::fs::create_dir_all(out.join("maps"))?;
    std::fs::create_dir_all(out.join("labels"))?;
    let mut samples = Vec::with_capacity(count);
    for i in 0..count {
        let density = densities[i % densities.len()];
        let base = seed::derive(seed, &[seed::label_hash("dataset"), i as u64]);
        let mut made = None;
        for attempt in 0..16u64 {
            let s = seed::derive(base, &[attempt]);
            let g = grid::generate_map(s, density, opts.size, opts.size)?;
            match grid::sample_problem(&g, s, opts.min_separation) {
                Ok(p) => {
                    made = Some(p);
                    break;
                }
                Err(Error::InfeasibleProblem(_)) => continue,
                Err(e) => return Err(e),
            }
        }
        let problem = made.ok_or_else(|| Error::InfeasibleProblem(format!("sample {i}: no feasible problem")))?;
        let (s, g) = (problem.start_cell(), problem.goal_cell());
        let path = search::astar(&problem.grid, s, g)?.expect("sampled problems are connected");
        let mask = search::dilate_mask(&path, &problem.grid, opts.dilation)?;

        let map = PathBuf::from("maps").join(format!("{i:05}.json"));
        let label = PathBuf::from("labels").join(format!("{i:05}.npri"));
        grid::save_map(&problem.grid, out.join(&map))?;
        prior::save_mask(&mask, out.join(&label))?;
        samples.push(DatasetSample { map, label, start: [s.col, s.row], goal: [g.col, g.row], density });
    }
    let manifest = Manifest { format: MANIFEST_FORMAT.into(), samples };
    let text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    std::fs::write(out.join(MANIFEST_FILE), text)?;
    Ok(manifest)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::CellIdx;

    fn small() -> DatasetOptions {
        DatasetOptions { size: 48, min_separation: 20.0, ..Default::default() }
    }

    #[test]
    fn six_samples_split_evenly_and_labels_are_free() {
        let dir = tempfile::tempdir().unwrap();
        let m = generate_dataset_with(9, 6, &Density::ALL, dir.path(), &small()).unwrap();
        assert_eq!(m.samples.len(), 6);
        for d in Density::ALL {
            assert_eq!(m.samples.iter().filter(|s| s.density == d).count(), 2);
        }
        assert_eq!(Manifest::load(dir.path().join(MANIFEST_FILE)).unwrap(), m);
        for s in &m.samples {
            let g = grid::load_map(dir.path().join(&s.map)).unwrap();
            let mask = prior::load_mask(dir.path().join(&s.label)).unwrap();
            assert!(mask.count() > 0);
            assert!(mask.on_cells().all(|c| g.is_free_cell(c)));
            assert!(mask.is_on(CellIdx::new(s.start[0], s.start[1])));
            assert!(mask.is_on(CellIdx::new(s.goal[0], s.goal[1])));
        }
    }

    #[test]
    fn generation_is_deterministic() {
        let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
        let ma = generate_dataset_with(3, 3, &[Density::Dense], a.path(), &small()).unwrap();
        let mb = generate_dataset_with(3, 3, &[Density::Dense], b.path(), &small()).unwrap();
        assert_eq!(ma, mb);
        for s in &ma.samples {
            assert_eq!(
                std::fs::read(a.path().join(&s.label)).unwrap(),
                std::fs::read(b.path().join(&s.label)).unwrap()
            );
            assert_eq!(std::fs::read(a.path().join(&s.map)).unwrap(), std::fs::read(b.path().join(&s.map)).unwrap());
        }
    }

    #[test]
    fn manifest_format_is_checked() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("m.json");
        std::fs::write(&p, r#"{"format":"dataset/9","samples":[]}"#).unwrap();
        assert!(Manifest::load(&p).is_err());
        assert!(generate_dataset(1, 1, &[], dir.path()).is_err());
    }
}
