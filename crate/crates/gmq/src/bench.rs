//! Parameterization benchmark: single-mode fits of every mask with each
//! covariance construction, averaged per iteration.

use std::fmt::Write as _;

use gmq_core::fit::{fit, Dataset, FitConfig, FitMode, Parameterization};
use rayon::prelude::*;

pub const CSV_HEADER: &str = "iter,loss_eig,loss_chol,loss_condcorr";

#[derive(Clone, Debug)]
pub struct BenchConfig {
    pub k: usize,
    pub iters: usize,
    pub seeds: Vec<u64>,
    pub lr: f64,
}

/// One (parameterization, seed, mask) fit; `None` if it failed.
#[derive(Clone, Debug, PartialEq)]
pub struct BenchCell {
    pub parameterization: Parameterization,
    pub seed: u64,
    pub mask: usize,
    pub curve: Option<Vec<f64>>,
}

#[derive(Clone, Debug)]
pub struct BenchReport {
    pub iters: usize,
    pub cells: Vec<BenchCell>,
    /// Mean curve per parameterization in [`Parameterization::ALL`] order,
    /// over the cells that succeeded (NaN where none did).
    pub curves: [Vec<f64>; 3],
}

impl BenchReport {
    pub fn finals(&self) -> [f64; 3] {
        self.curves.each_ref().map(|c| *c.last().unwrap_or(&f64::NAN))
    }

    pub fn failures(&self, p: Parameterization) -> usize {
        self.cells.iter().filter(|c| c.parameterization == p && c.curve.is_none()).count()
    }

    pub fn csv(&self) -> String {
        let mut out = String::from(CSV_HEADER);
        out.push('\n');
        for i in 0..=self.iters {
            let _ = writeln!(out, "{i},{},{},{}", self.curves[0][i], self.curves[1][i], self.curves[2][i]);
        }
        out
    }

    pub fn summary(&self) -> String {
        let f = self.finals();
        format!(
            "final loss after {} iters: eig {:.6} chol {:.6} condcorr {:.6} ({} failed cells)",
            self.iters,
            f[0],
            f[1],
            f[2],
            self.cells.iter().filter(|c| c.curve.is_none()).count()
        )
    }
}

pub fn run_bench(data: &Dataset, cfg: &BenchConfig) -> BenchReport {
    let mut jobs = Vec::new();
    for p in Parameterization::ALL {
        for &seed in &cfg.seeds {
            for mask in 0..data.len() {
                jobs.push((p, seed, mask));
            }
        }
    }
    let cells: Vec<BenchCell> = jobs
        .par_iter()
        .map(|&(p, seed, mask)| {
            let one = Dataset::new(vec![data.observations[mask].clone()]);
            let fc = FitConfig {
                k: cfg.k,
                parameterization: p,
                mode: FitMode::Single,
                lr: cfg.lr,
                iters: cfg.iters,
                seed,
                ..FitConfig::default()
            };
            let curve = fit(&one, &fc).ok().map(|r| r.loss_curve);
            BenchCell { parameterization: p, seed, mask, curve }
        })
        .collect();
    let curves = Parameterization::ALL.map(|p| {
        let ok: Vec<&Vec<f64>> =
            cells.iter().filter(|c| c.parameterization == p).filter_map(|c| c.curve.as_ref()).collect();
        (0..=cfg.iters)
            .map(|i| {
                if ok.is_empty() {
                    f64::NAN
                } else {
                    ok.iter().map(|c| c[i]).sum::<f64>() / ok.len() as f64
                }
            })
            .collect()
    });
    BenchReport { iters: cfg.iters, cells, curves }
}
