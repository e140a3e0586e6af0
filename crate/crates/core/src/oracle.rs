//! Slow, independent verifiers: dense nullspaces, plain recursion and
//! alternating least squares. Size caps keep them from running away.

use num_bigint::BigUint;
use num_traits::{One, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::equivariant::{factors_from_flat, parameter_count, parameterize_with, RankVector};
use crate::error::{Error, Result};
use crate::linalg::{lstsq, numeric_rank, pinv, Matrix};
use crate::perm::Permutation;
use crate::spectral::{eigen_multiplicities, BlockSpectrum, Field, RealKind};

pub const NULLSPACE_MAX_N: usize = 16;
pub const RECURSION_MAX_BLOCKS: usize = 8;
pub const RECURSION_MAX_BOUND: usize = 30;
pub const ALS_MAX_DIM: usize = 12;

/// Dimension of `{M : M·P_g = P_g·M for every g}` from the dense `n²`-unknown system.
pub fn nullspace_commutant_dim(gens: &[Permutation]) -> Result<usize> {
    let n = gens.first().map_or(0, Permutation::n);
    if n > NULLSPACE_MAX_N {
        return Err(Error::SizeCap(format!(
            "nullspace oracle is capped at n = {NULLSPACE_MAX_N}, got {n}"
        )));
    }
    if gens.iter().any(|g| g.n() != n) {
        return Err(Error::Dimension("generators act on different sets".into()));
    }
    if gens.is_empty() || n == 0 {
        return Ok(n * n);
    }
    let nn = n * n;
    let mut a = Matrix::zeros(nn * gens.len(), nn);
    for (gi, g) in gens.iter().enumerate() {
        let p = g.matrix();
        // Row (i,j) of MP − PM: Σ_t M[i,t]P[t,j] − Σ_t P[i,t]M[t,j].
        for i in 0..n {
            for j in 0..n {
                let row = gi * nn + i * n + j;
                for t in 0..n {
                    a[(row, i * n + t)] += p[(t, j)];
                    a[(row, t * n + j)] -= p[(i, t)];
                }
            }
        }
    }
    Ok(nn - numeric_rank(&a, 1e-9)?)
}

/// Admissible rank vectors counted by direct recursion over blocks.
pub fn recursive_component_count(spec: &BlockSpectrum, r: usize, field: Field) -> Result<BigUint> {
    let items: Vec<(usize, usize)> = match field {
        Field::Complex => spec.complex_blocks.iter().map(|b| (b.size, 1)).collect(),
        Field::Real => spec
            .real_blocks
            .iter()
            .map(|b| (b.size, if b.kind == RealKind::ComplexPair { 2 } else { 1 }))
            .collect(),
    };
    if items.len() > RECURSION_MAX_BLOCKS || items.iter().any(|&(d, _)| d > RECURSION_MAX_BOUND) {
        return Err(Error::SizeCap(format!(
            "recursive count is capped at {RECURSION_MAX_BLOCKS} blocks of size ≤ {RECURSION_MAX_BOUND}"
        )));
    }
    fn rec(items: &[(usize, usize)], left: usize) -> BigUint {
        match items.split_first() {
            None => {
                if left == 0 {
                    BigUint::one()
                } else {
                    BigUint::zero()
                }
            }
            Some((&(bound, w), rest)) => {
                let mut total = BigUint::zero();
                for x in 0..=bound {
                    if x * w > left {
                        break;
                    }
                    total += rec(rest, left - x * w);
                }
                total
            }
        }
    }
    Ok(rec(&items, r))
}

fn gauss(rng: &mut ChaCha8Rng, r: usize, c: usize) -> Matrix {
    Matrix::from_fn(r, c, |_, _| rng.sample(StandardNormal))
}

/// Best loss `‖A·B·X − Y‖²_F` over `restarts` alternating-least-squares runs,
/// `A` of size `m×r`, `B` of size `r×n`.
pub fn als_low_rank(x: &Matrix, y: &Matrix, r: usize, restarts: usize, seed: u64) -> Result<f64> {
    let (n, m) = (x.rows(), y.rows());
    if n.max(m) > ALS_MAX_DIM {
        return Err(Error::SizeCap(format!("ALS oracle is capped at dimension {ALS_MAX_DIM}")));
    }
    if x.cols() != y.cols() {
        return Err(Error::Dimension("X and Y sample counts differ".into()));
    }
    if r == 0 {
        return Ok(y.frobenius_sq());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let xxt_pinv = pinv(&x.matmul_t(x), 1e-12)?;
    let yxt = y.matmul_t(x);
    let mut best = f64::INFINITY;
    for _ in 0..restarts.max(1) {
        let mut b = gauss(&mut rng, r, n);
        let mut prev = f64::INFINITY;
        for _ in 0..2000 {
            // A-step: A = Y·(BX)ᵀ·(BX(BX)ᵀ)⁺.
            let bx = b.matmul(x);
            let a = y.matmul_t(&bx).matmul(&pinv(&bx.matmul_t(&bx), 1e-12)?);
            // B-step: B = (AᵀA)⁺·Aᵀ·Y·Xᵀ·(XXᵀ)⁺.
            b = pinv(&a.t_matmul(&a), 1e-12)?.matmul(&a.t_matmul(&yxt)).matmul(&xxt_pinv);
            let loss = a.matmul(&b).matmul(x).sub(y).frobenius_sq();
            if prev.is_finite() && prev - loss <= 1e-15 * (1.0 + prev) {
                prev = loss;
                break;
            }
            prev = loss;
        }
        best = best.min(prev);
    }
    Ok(best)
}

/// Rank-≤r approximation of `u` itself (`X = Id`).
pub fn als_nearest_low_rank(u: &Matrix, r: usize, restarts: usize, seed: u64) -> Result<f64> {
    als_low_rank(&Matrix::identity(u.cols()), u, r, restarts, seed)
}

/// Product `M(θ)` of the component parameterization at flat parameters `θ`.
fn product_at(rv: &RankVector, p: &Permutation, spec: &BlockSpectrum, theta: &[f64]) -> Result<Matrix> {
    let factors = factors_from_flat(rv, spec, theta)?;
    Ok(parameterize_with(rv, p, &factors)?.product())
}

/// Flat-parameter indices of decoder entries (the rest are encoder entries).
fn decoder_mask(rv: &RankVector, spec: &BlockSpectrum) -> Vec<bool> {
    let mut mask = Vec::new();
    for (b, e) in spec.real_blocks.iter().zip(&rv.entries) {
        let scale = if b.kind == RealKind::ComplexPair { 2 } else { 1 };
        let half = scale * b.size * e.rank;
        mask.extend(std::iter::repeat_n(true, half));
        mask.extend(std::iter::repeat_n(false, half));
    }
    mask
}

fn flatten(m: &Matrix) -> Vec<f64> {
    m.data().to_vec()
}

/// Best loss over one real component: random sampling, then alternating
/// least squares on the decoder and encoder halves of the bilinear
/// parameterization.
pub fn equivariant_component_oracle(
    x: &Matrix,
    y: &Matrix,
    p: &Permutation,
    rv: &RankVector,
    samples: usize,
    polish: usize,
    seed: u64,
) -> Result<f64> {
    let n = p.n();
    if n > ALS_MAX_DIM {
        return Err(Error::SizeCap(format!("equivariant oracle is capped at n = {ALS_MAX_DIM}")));
    }
    let spec = eigen_multiplicities(&p.cycles());
    let count = parameter_count(rv, &spec);
    if count == 0 {
        return Ok(y.frobenius_sq());
    }
    let mask = decoder_mask(rv, &spec);
    let loss = |theta: &[f64]| -> Result<f64> {
        Ok(product_at(rv, p, &spec, theta)?.matmul(x).sub(y).frobenius_sq())
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut pool: Vec<(f64, Vec<f64>)> = Vec::with_capacity(samples.max(1));
    for _ in 0..samples.max(1) {
        let scale: f64 = rng.random_range(0.1..2.0);
        let theta: Vec<f64> = (0..count).map(|_| scale * rng.sample::<f64, _>(StandardNormal)).collect();
        pool.push((loss(&theta)?, theta));
    }
    pool.sort_by(|a, b| a.0.total_cmp(&b.0));
    pool.truncate(polish.max(1));
    let target = flatten(y);
    let mut best = f64::INFINITY;
    for (_, mut theta) in pool {
        let mut prev = f64::INFINITY;
        for iter in 0..500 {
            let half = iter % 2 == 0;
            let free: Vec<usize> = (0..count).filter(|&i| mask[i] == half).collect();
            // With the other half fixed, M(θ)·X is linear in the free half.
            let mut base_theta = theta.clone();
            for &i in &free {
                base_theta[i] = 0.0;
            }
            let base = product_at(rv, p, &spec, &base_theta)?.matmul(x);
            let mut a = Matrix::zeros(target.len(), free.len());
            for (c, &i) in free.iter().enumerate() {
                let mut t = base_theta.clone();
                t[i] = 1.0;
                let col = product_at(rv, p, &spec, &t)?.matmul(x).sub(&base);
                for (rr, v) in col.data().iter().enumerate() {
                    a[(rr, c)] = *v;
                }
            }
            let rhs = Matrix::from_vec(target.len(), 1, target.iter().zip(base.data()).map(|(t, b)| t - b).collect())?;
            let sol = lstsq(&a, &rhs)?;
            for (c, &i) in free.iter().enumerate() {
                theta[i] = sol[(c, 0)];
            }
            let cur = loss(&theta)?;
            if !half && prev.is_finite() && prev - cur <= 1e-14 * (1.0 + prev) {
                prev = cur;
                break;
            }
            if !half {
                prev = cur;
            }
        }
        best = best.min(prev.min(loss(&theta)?));
    }
    Ok(best)
}

/// Best oracle loss over every real component of total rank `r`.
pub fn equivariant_oracle(
    x: &Matrix,
    y: &Matrix,
    p: &Permutation,
    r: usize,
    samples: usize,
    polish: usize,
    seed: u64,
) -> Result<(RankVector, f64)> {
    let spec = eigen_multiplicities(&p.cycles());
    let results = crate::par_map(&all_rank_vectors(&spec, r), |ranks| -> Result<(RankVector, f64)> {
        let rv = RankVector::new(&spec, Field::Real, ranks)?;
        let loss = equivariant_component_oracle(x, y, p, &rv, samples, polish, seed)?;
        Ok((rv, loss))
    });
    let mut best: Option<(RankVector, f64)> = None;
    for res in results {
        let (rv, loss) = res?;
        if best.as_ref().is_none_or(|(_, b)| loss < *b) {
            best = Some((rv, loss));
        }
    }
    best.ok_or_else(|| Error::Inadmissible(format!("no real component of total rank {r}")))
}

fn all_rank_vectors(spec: &BlockSpectrum, r: usize) -> Vec<Vec<usize>> {
    let items: Vec<(usize, usize)> = spec
        .real_blocks
        .iter()
        .map(|b| (b.size, if b.kind == RealKind::ComplexPair { 2 } else { 1 }))
        .collect();
    let mut out = Vec::new();
    let mut cur = Vec::new();
    fn rec(items: &[(usize, usize)], left: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        match items.split_first() {
            None => {
                if left == 0 {
                    out.push(cur.clone());
                }
            }
            Some((&(bound, w), rest)) => {
                for x in 0..=bound {
                    if x * w > left {
                        break;
                    }
                    cur.push(x);
                    rec(rest, left - x * w, cur, out);
                    cur.pop();
                }
            }
        }
    }
    rec(&items, r, &mut cur, &mut out);
    out
}

/// Rank of the Jacobian of `θ ↦ M(θ)` at `θ`. The map is bilinear, so
/// `M(θ + e_i) − M(θ)` is the exact partial derivative.
pub fn jacobian_rank(rv: &RankVector, p: &Permutation, theta: &[f64]) -> Result<usize> {
    let spec = eigen_multiplicities(&p.cycles());
    let count = parameter_count(rv, &spec);
    if theta.len() != count {
        return Err(Error::Dimension(format!("expected {count} parameters, got {}", theta.len())));
    }
    let n = p.n();
    let m0 = product_at(rv, p, &spec, theta)?;
    let mut jac = Matrix::zeros(n * n, count);
    for i in 0..count {
        let mut t = theta.to_vec();
        t[i] += 1.0;
        let d = product_at(rv, p, &spec, &t)?.sub(&m0);
        for (rr, v) in d.data().iter().enumerate() {
            jac[(rr, i)] = *v;
        }
    }
    numeric_rank(&jac, 1e-9)
}
