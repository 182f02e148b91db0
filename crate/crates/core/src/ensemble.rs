//! Reproducible path ensembles.
//!
//! Path `i` of an ensemble is always generated from `SeedTag(master_seed, i)`,
//! and results are collected in index order, so the ensemble does not
//! depend on the number of worker threads.

use std::io::{self, Write};
use std::sync::Arc;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::paths::{SamplePath, TimeGrid};
use crate::rng::SeedTag;
use crate::stats::McReport;

#[derive(Debug, Clone, PartialEq)]
pub struct Ensemble {
    pub master_seed: u64,
    pub paths: Vec<SamplePath>,
}

impl Ensemble {
    pub fn generate<F>(master_seed: u64, n_paths: usize, generate: F) -> Result<Self>
    where
        F: Fn(SeedTag) -> Result<SamplePath> + Sync,
    {
        let paths = (0..n_paths as u64)
            .into_par_iter()
            .map(|i| generate(SeedTag::new(master_seed, i)))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { master_seed, paths })
    }

    pub fn from_paths(master_seed: u64, paths: Vec<SamplePath>) -> Self {
        Self { master_seed, paths }
    }

    pub fn len(&self) -> usize {
        self.paths.len()
    }

    pub fn is_empty(&self) -> bool {
        self.paths.is_empty()
    }

    pub fn grid(&self) -> Option<&Arc<TimeGrid>> {
        self.paths.first().map(|p| &p.grid)
    }

    /// Values of every path at node `k` (node 0 is the origin).
    pub fn node_values(&self, k: usize) -> Vec<f64> {
        self.paths.iter().map(|p| p.at_node(k)).collect()
    }

    pub fn mean_at(&self, k: usize) -> Result<McReport> {
        McReport::from_samples(&self.node_values(k), Some(self.master_seed))
    }

    /// `E[X_{t_i} X_{t_j}]` for nodes `i`, `j` of a centered process.
    pub fn second_moment(&self, i: usize, j: usize) -> Result<McReport> {
        let products: Vec<f64> = self.paths.iter().map(|p| p.at_node(i) * p.at_node(j)).collect();
        McReport::from_samples(&products, Some(self.master_seed))
    }

    pub fn map<F>(&self, f: F) -> Ensemble
    where
        F: Fn(&SamplePath) -> SamplePath + Sync + Send,
    {
        Ensemble { master_seed: self.master_seed, paths: self.paths.par_iter().map(f).collect() }
    }

    /// Checks that both ensembles have the same seeds, in order, on the same grid.
    pub fn check_paired(&self, other: &Ensemble) -> Result<()> {
        if self.len() != other.len() {
            return Err(Error::MismatchedEnsembles(format!("{} vs {} paths", self.len(), other.len())));
        }
        for (i, (a, b)) in self.paths.iter().zip(&other.paths).enumerate() {
            if a.seed != b.seed {
                return Err(Error::MismatchedEnsembles(format!("seed tags differ at path {i}")));
            }
            if a.grid != b.grid {
                return Err(Error::MismatchedEnsembles(format!("grids differ at path {i}")));
            }
        }
        Ok(())
    }

    /// Writes `path_index,t,value` rows for every grid point; returns the row count.
    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<usize> {
        writeln!(out, "path_index,t,value")?;
        let mut rows = 0;
        for (i, path) in self.paths.iter().enumerate() {
            let index = path.seed.map_or(i as u64, |s| s.path_index);
            for (t, v) in path.grid.points().iter().zip(&path.values) {
                writeln!(out, "{index},{t},{v}")?;
                rows += 1;
            }
        }
        Ok(rows)
    }
}
