//! Synthetic shift-equivariant data: images of random bars whose rows are
//! cyclically shifted, and the equivariant-vs-dense comparison on it.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::equivariant::{frequency_order, parameter_count, RankVector};
use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::optimize::{fit_rank_bounded, EquivariantProblem, FitOptions};
use crate::perm::Permutation;
use crate::spectral::{BlockSpectrum, Field};

/// Rotation by 90° of a `p×p` image stored row-major.
pub fn rotation(p: usize) -> Permutation {
    let mut image = vec![0; p * p];
    for i in 0..p {
        for j in 0..p {
            image[i * p + j] = j * p + (p - 1 - i);
        }
    }
    Permutation::from_image(image).expect("rotation is a bijection")
}

/// Cyclic shift of every row of an `h×w` image by one pixel.
pub fn row_shift(h: usize, w: usize) -> Permutation {
    Permutation::cycle_type(h, w)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShiftBarsConfig {
    pub height: usize,
    pub width: usize,
    pub samples: usize,
    pub seed: u64,
    /// Standard deviation of additive pixel noise.
    pub noise: f64,
}

impl Default for ShiftBarsConfig {
    fn default() -> Self {
        ShiftBarsConfig {
            height: 32,
            width: 32,
            samples: 2000,
            seed: 0,
            noise: 0.05,
        }
    }
}

/// `n × samples` data matrix, one flattened image per column. Each image holds
/// one to three horizontal bars and one or two soft vertical bars, and is then
/// shifted cyclically along its rows by a random offset.
pub fn shift_bars(cfg: &ShiftBarsConfig) -> Result<Matrix> {
    let (h, w) = (cfg.height, cfg.width);
    if h == 0 || w == 0 || cfg.samples == 0 {
        return Err(Error::Dimension("shift-bars needs positive height, width and samples".into()));
    }
    let noise = Normal::new(0.0, cfg.noise.max(0.0)).map_err(|e| Error::Numerical(e.to_string()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let n = h * w;
    let mut x = Matrix::zeros(n, cfg.samples);
    let mut img = vec![0.0; n];
    for s in 0..cfg.samples {
        img.iter_mut().for_each(|v| *v = 0.0);
        for _ in 0..rng.random_range(1..=3) {
            let row = rng.random_range(0..h);
            let a: f64 = rng.random_range(0.5..1.0);
            for c in 0..w {
                img[row * w + c] += a;
            }
        }
        for _ in 0..rng.random_range(1..=2) {
            let col = rng.random_range(0..w) as f64;
            let top = rng.random_range(0..h);
            let len = rng.random_range(1..=h);
            let a: f64 = rng.random_range(0.5..1.0);
            for rr in top..(top + len).min(h) {
                for c in 0..w {
                    let d = (c as f64 - col).abs();
                    let d = d.min(w as f64 - d);
                    img[rr * w + c] += a * (-d * d / 2.0).exp();
                }
            }
        }
        let shift = rng.random_range(0..w);
        for rr in 0..h {
            for c in 0..w {
                x[(rr * w + (c + shift) % w, s)] = img[rr * w + c] + noise.sample(&mut rng);
            }
        }
    }
    Ok(x)
}

/// Every block at rank `per_block` (capped by its multiplicity).
pub fn equal_split(spec: &BlockSpectrum, per_block: usize) -> Result<RankVector> {
    let ranks: Vec<usize> = spec.real_blocks.iter().map(|b| per_block.min(b.size)).collect();
    RankVector::new(spec, Field::Real, &ranks)
}

/// The `skip` lowest-frequency blocks at rank 0, every other block at full rank.
pub fn high_pass(spec: &BlockSpectrum, skip: usize) -> Result<RankVector> {
    let mut ranks: Vec<usize> = spec.real_blocks.iter().map(|b| b.size).collect();
    for &i in frequency_order(spec).iter().take(skip) {
        ranks[i] = 0;
    }
    RankVector::new(spec, Field::Real, &ranks)
}

#[derive(Debug, Clone, Serialize)]
pub struct ArchitectureLoss {
    pub name: String,
    pub rank_vector: Option<RankVector>,
    pub total_rank: usize,
    pub parameters: usize,
    /// `‖MX − X‖²_F / (n · samples)`.
    pub loss_per_pixel: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ShiftDemoReport {
    pub config: ShiftBarsConfig,
    pub rank: usize,
    pub architectures: Vec<ArchitectureLoss>,
    /// Per-block energy `Σσ²` in frequency order.
    pub block_energy: Vec<(String, f64)>,
}

/// Fits the autoencoder `Y = X` on shift-bars data with four architectures:
/// the energy heuristic at budget `rank`, an equal split, a high-pass split,
/// and the dense rank-`rank` map.
pub fn run_shift_demo(cfg: &ShiftBarsConfig, rank: usize, equal_per_block: usize, high_pass_skip: usize) -> Result<ShiftDemoReport> {
    let x = shift_bars(cfg)?;
    let p = row_shift(cfg.height, cfg.width);
    let n = p.n();
    let opts = FitOptions::default();
    let problem = EquivariantProblem::new(&x, &x, &p, &opts)?;
    let spec = problem.spectrum().clone();
    let scale = (n * cfg.samples) as f64;
    let mut architectures = Vec::new();
    let named = [
        ("equivariant", problem.energy_heuristic(rank)),
        ("equal_rank", equal_split(&spec, equal_per_block)?),
        ("high_pass", high_pass(&spec, high_pass_skip)?),
    ];
    for (name, rv) in named {
        let fit = problem.solve(&x, &x, &rv, opts.tie_tol);
        architectures.push(ArchitectureLoss {
            name: name.into(),
            total_rank: rv.total_rank,
            parameters: parameter_count(&rv, &spec),
            rank_vector: Some(rv),
            loss_per_pixel: fit.loss / scale,
        });
    }
    let dense = fit_rank_bounded(&x, &x, rank, &opts)?;
    architectures.push(ArchitectureLoss {
        name: "dense".into(),
        rank_vector: None,
        total_rank: rank,
        parameters: 2 * rank * n,
        loss_per_pixel: dense.loss / scale,
    });
    let energies = problem.block_energies();
    let block_energy = frequency_order(&spec)
        .into_iter()
        .map(|i| {
            let b = &spec.real_blocks[i];
            (format!("({},{})", b.l, b.m), energies[i].iter().sum())
        })
        .collect();
    Ok(ShiftDemoReport {
        config: *cfg,
        rank,
        architectures,
        block_energy,
    })
}
