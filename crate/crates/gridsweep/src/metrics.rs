//! Error metrics, PSNR, mask voting, and the sign test used by the ablation
//! summary.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::SampleGrid;

pub fn mse(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::Shape(format!("length mismatch: {} vs {}", a.len(), b.len())));
    }
    if a.is_empty() {
        return Err(Error::Shape("empty inputs".into()));
    }
    Ok(a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>() / a.len() as f64)
}

/// PSNR in dB, or the infinity sentinel when the inputs are identical.
/// Serializes as `null` plus an `infinite` flag.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Psnr {
    pub db: Option<f64>,
    pub infinite: bool,
}

pub fn psnr(a: &[f64], b: &[f64], peak: f64) -> Result<Psnr> {
    if peak <= 0.0 {
        return Err(Error::Config(format!("peak must be positive, got {peak}")));
    }
    let err = mse(a, b)?;
    if err == 0.0 {
        return Ok(Psnr { db: None, infinite: true });
    }
    Ok(Psnr { db: Some(10.0 * (peak * peak / err).log10()), infinite: false })
}

/// Mean squared adjacent-frame latent difference, averaged over target rows.
/// Zero for single-frame grids.
pub fn temporal_jitter(grid: &SampleGrid) -> f64 {
    if grid.frames < 2 {
        return 0.0;
    }
    let mut acc = 0.0;
    let mut count = 0usize;
    for v in grid.target_views() {
        for t in 0..grid.frames - 1 {
            let a = &grid.state(crate::grid::SampleId::new(v, t)).latent;
            let b = &grid.state(crate::grid::SampleId::new(v, t + 1)).latent;
            acc += a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>() / a.len() as f64;
            count += 1;
        }
    }
    if count == 0 { 0.0 } else { acc / count as f64 }
}

/// Pixel-wise majority vote over three binary masks (values 0/1).
pub fn vote_masks(m1: &[u8], m2: &[u8], m3: &[u8]) -> Result<Vec<u8>> {
    if m1.len() != m2.len() || m1.len() != m3.len() {
        return Err(Error::Shape("mask sizes differ".into()));
    }
    for m in [m1, m2, m3] {
        if m.iter().any(|&v| v > 1) {
            return Err(Error::Config("masks must be binary (0/1)".into()));
        }
    }
    Ok(m1
        .iter()
        .zip(m2)
        .zip(m3)
        .map(|((&a, &b), &c)| u8::from(a + b + c >= 2))
        .collect())
}

/// Two-sided exact sign test p-value for `wins` out of `wins + losses`
/// Bernoulli(1/2) trials (ties excluded by the caller).
pub fn sign_test_p(wins: usize, losses: usize) -> f64 {
    let n = wins + losses;
    if n == 0 {
        return 1.0;
    }
    // tail probabilities via log binomial coefficients
    let ln_choose = |n: usize, k: usize| -> f64 {
        let ln_fact = |m: usize| (1..=m).map(|i| (i as f64).ln()).sum::<f64>();
        ln_fact(n) - ln_fact(k) - ln_fact(n - k)
    };
    let pmf = |k: usize| (ln_choose(n, k) - (n as f64) * 2.0_f64.ln()).exp();
    let k = wins.min(losses);
    let lower: f64 = (0..=k).map(pmf).sum();
    (2.0 * lower).min(1.0)
}

/// One row of the ablation table.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MetricsRecord {
    pub strategy: String,
    pub seed: u64,
    pub mse_to_gold: f64,
    pub mse_to_ground_truth: f64,
    pub psnr: Psnr,
    pub temporal_jitter: f64,
    /// Median-filter strategy only.
    pub overlap_variance: Option<f64>,
}

pub const METRICS_CSV_HEADER: &str =
    "strategy,seed,mse_to_gold,mse_to_ground_truth,psnr_db,psnr_infinite,temporal_jitter,overlap_variance";

impl MetricsRecord {
    pub fn to_csv_row(&self) -> String {
        format!(
            "{},{},{:e},{:e},{},{},{:e},{}",
            self.strategy,
            self.seed,
            self.mse_to_gold,
            self.mse_to_ground_truth,
            self.psnr.db.map(|v| format!("{v:e}")).unwrap_or_default(),
            self.psnr.infinite,
            self.temporal_jitter,
            self.overlap_variance.map(|v| format!("{v:e}")).unwrap_or_default(),
        )
    }

    pub fn from_csv_row(row: &str) -> Result<Self> {
        let fields: Vec<&str> = row.split(',').collect();
        if fields.len() != 8 {
            return Err(Error::Config(format!("expected 8 CSV fields, got {}", fields.len())));
        }
        let parse = |s: &str| -> Result<f64> {
            s.parse::<f64>().map_err(|e| Error::Config(format!("bad float {s:?}: {e}")))
        };
        Ok(Self {
            strategy: fields[0].to_string(),
            seed: fields[1]
                .parse()
                .map_err(|e| Error::Config(format!("bad seed {:?}: {e}", fields[1])))?,
            mse_to_gold: parse(fields[2])?,
            mse_to_ground_truth: parse(fields[3])?,
            psnr: Psnr {
                db: if fields[4].is_empty() { None } else { Some(parse(fields[4])?) },
                infinite: fields[5] == "true",
            },
            temporal_jitter: parse(fields[6])?,
            overlap_variance: if fields[7].is_empty() { None } else { Some(parse(fields[7])?) },
        })
    }
}
