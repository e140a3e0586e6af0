//! Invariant maps: `M·P_g = M` for every generator, i.e. equal columns on
//! each block of the generators' finest common coarsening.

use num_bigint::BigUint;
use serde::Serialize;

use crate::combinatorics::determinantal_degree;
use crate::error::{Error, Result};
use crate::linalg::{numeric_rank, svd_thin, Matrix};
use crate::optimize::{check_data_rank, fit_rank_bounded, squared_error, ComponentLabel, FitOptions, FitResult};
use crate::perm::{finest_common_coarsening, Partition, Permutation};

/// Default membership tolerance, relative to `1 + ‖M‖_F`.
pub const INVARIANCE_TOL: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct InvariantSpace {
    pub m: usize,
    pub n: usize,
    pub r: usize,
    pub partition: Partition,
    pub effective_rank: usize,
}

impl InvariantSpace {
    pub fn new(partition: Partition, m: usize, r: usize) -> Result<Self> {
        let n = partition.n();
        if r > m.min(n) {
            return Err(Error::Dimension(format!(
                "rank bound {r} exceeds min({m}, {n})"
            )));
        }
        let effective_rank = r.min(partition.k());
        Ok(InvariantSpace {
            m,
            n,
            r,
            partition,
            effective_rank,
        })
    }

    pub fn k(&self) -> usize {
        self.partition.k()
    }

    pub fn replication_matrix(&self) -> Matrix {
        self.partition.replication_matrix()
    }
}

/// Invariant space of a generator set; no generators means the identity.
pub fn invariant_space(gens: &[Permutation], m: usize, n: usize, r: usize) -> Result<InvariantSpace> {
    for g in gens {
        if g.n() != n {
            return Err(Error::Dimension(format!(
                "generator {g} acts on [{}], expected [{n}]",
                g.n()
            )));
        }
    }
    let partition = if gens.is_empty() {
        Partition::singletons(n)
    } else {
        let parts: Vec<Partition> = gens.iter().map(|g| g.cycles().induced_partition()).collect();
        finest_common_coarsening(&parts)?
    };
    InvariantSpace::new(partition, m, r)
}

/// `ψ`: keeps the first column of every block.
pub fn psi_compress(m: &Matrix, part: &Partition, tol: f64) -> Result<Matrix> {
    if m.cols() != part.n() {
        return Err(Error::Dimension(format!(
            "matrix has {} columns, partition covers {}",
            m.cols(),
            part.n()
        )));
    }
    let gate = tol * (1.0 + m.frobenius_norm());
    let mut out = Matrix::zeros(m.rows(), part.k());
    for (b, block) in part.blocks().iter().enumerate() {
        let lead = block[0];
        let mut deviation: f64 = 0.0;
        for &j in &block[1..] {
            for i in 0..m.rows() {
                deviation = deviation.max((m[(i, j)] - m[(i, lead)]).abs());
            }
        }
        if deviation > gate {
            return Err(Error::NotInvariant { block: b, deviation });
        }
        for i in 0..m.rows() {
            out[(i, b)] = m[(i, lead)];
        }
    }
    Ok(out)
}

/// `ψ⁻¹`: `compact · E`.
pub fn psi_expand(compact: &Matrix, part: &Partition) -> Result<Matrix> {
    if compact.cols() != part.k() {
        return Err(Error::Dimension(format!(
            "compact factor has {} columns, partition has {} blocks",
            compact.cols(),
            part.k()
        )));
    }
    let mut out = Matrix::zeros(compact.rows(), part.n());
    for (b, block) in part.blocks().iter().enumerate() {
        for &j in block {
            for i in 0..compact.rows() {
                out[(i, j)] = compact[(i, b)];
            }
        }
    }
    Ok(out)
}

/// Frobenius-nearest invariant matrix: each block's columns replaced by their mean.
pub fn project_invariant(m: &Matrix, part: &Partition) -> Result<Matrix> {
    if m.cols() != part.n() {
        return Err(Error::Dimension(format!(
            "matrix has {} columns, partition covers {}",
            m.cols(),
            part.n()
        )));
    }
    let mut compact = Matrix::zeros(m.rows(), part.k());
    for (b, block) in part.blocks().iter().enumerate() {
        for i in 0..m.rows() {
            compact[(i, b)] = block.iter().map(|&j| m[(i, j)]).sum::<f64>() / block.len() as f64;
        }
    }
    psi_expand(&compact, part)
}

/// `min(r,k)·(m + k − min(r,k))`.
pub fn invariant_dimension(space: &InvariantSpace) -> usize {
    let r = space.effective_rank;
    r * (space.m + space.k() - r)
}

pub fn invariant_degree(space: &InvariantSpace) -> BigUint {
    determinantal_degree(space.m, space.k(), space.effective_rank)
}

pub fn is_singular_point(space: &InvariantSpace, m: &Matrix, tol: f64) -> Result<bool> {
    let compact = psi_compress(m, &space.partition, INVARIANCE_TOL)?;
    if space.r >= space.m.min(space.k()) {
        return Ok(false);
    }
    Ok(numeric_rank(&compact, tol)? < space.effective_rank)
}

/// Global minimizer of `‖MX − Y‖²_F` over the invariant space. A ridge, if
/// given, regularizes the compact factor (`X̃X̃ᵀ + λ·Id`).
pub fn fit_invariant(x: &Matrix, y: &Matrix, space: &InvariantSpace, opts: &FitOptions) -> Result<FitResult> {
    if x.rows() != space.n || y.rows() != space.m {
        return Err(Error::Dimension(format!(
            "X is {}x{}, Y is {}x{}, space is {}x{}",
            x.rows(),
            x.cols(),
            y.rows(),
            y.cols(),
            space.m,
            space.n
        )));
    }
    if opts.ridge.is_none() {
        check_data_rank(x, opts)?;
    }
    // M·X = ψ(M)·(E·X) exactly.
    let e = space.replication_matrix();
    let xt = e.matmul(x);
    let compact_fit = fit_rank_bounded(&xt, y, space.effective_rank, opts)?;
    let compact = compact_fit.minimizer;
    let minimizer = psi_expand(&compact, &space.partition)?;
    Ok(FitResult {
        loss: squared_error(&minimizer, x, y),
        minimizer,
        component: ComponentLabel::Invariant {
            effective_rank: space.effective_rank,
            blocks: space.k(),
        },
        per_block: compact_fit.per_block,
        regularization: opts.ridge,
        non_unique: compact_fit.non_unique,
        compact: Some(compact),
        selection: None,
        candidates: Vec::new(),
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct InvariantFactors {
    pub decoder: Matrix,
    pub encoder: Matrix,
}

/// Two-layer factorization `decoder · encoder` with `encoder = B′·E`, so the
/// first layer shares weights across every block.
pub fn invariant_autoencoder(space: &InvariantSpace, m: &Matrix, tol: f64) -> Result<InvariantFactors> {
    if m.shape() != (space.m, space.n) {
        return Err(Error::Dimension(format!(
            "expected {}x{}, got {}x{}",
            space.m,
            space.n,
            m.rows(),
            m.cols()
        )));
    }
    let compact = psi_compress(m, &space.partition, INVARIANCE_TOL)?;
    let rp = space.effective_rank;
    let k = space.k();
    let rank = numeric_rank(&compact, tol)?;
    if rank > rp {
        return Err(Error::Inadmissible(format!(
            "matrix has rank {rank}, the space allows {rp}"
        )));
    }
    let e = space.replication_matrix();
    if rank == 0 {
        let rows: Vec<usize> = (0..rp).collect();
        return Ok(InvariantFactors {
            decoder: Matrix::zeros(space.m, rp),
            encoder: e.select_rows(&rows),
        });
    }
    if rp == k {
        return Ok(InvariantFactors {
            decoder: compact,
            encoder: e,
        });
    }
    let t = svd_thin(&compact)?;
    let decoder = Matrix::from_fn(space.m, rp, |i, j| {
        if j < t.s.len() {
            t.u[(i, j)] * t.s[j]
        } else {
            0.0
        }
    });
    let b = Matrix::from_fn(rp, k, |i, j| if i < t.vt.rows() { t.vt[(i, j)] } else { 0.0 });
    Ok(InvariantFactors {
        decoder,
        encoder: b.matmul(&e),
    })
}

/// Largest column deviation within blocks for every generator: `max ‖M·P_g − M‖`.
pub fn invariance_residual(m: &Matrix, gens: &[Permutation]) -> f64 {
    gens.iter()
        .map(|g| m.matmul(&g.matrix()).max_abs_diff(m))
        .fold(0.0, f64::max)
}

/// Membership test with the default gate.
pub fn is_invariant(m: &Matrix, part: &Partition) -> bool {
    psi_compress(m, part, INVARIANCE_TOL).is_ok()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::DEFAULT_TOL;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;

    fn gauss(rng: &mut ChaCha8Rng, r: usize, c: usize) -> Matrix {
        Matrix::from_fn(r, c, |_, _| rng.sample(StandardNormal))
    }

    #[test]
    fn coarsening_examples() {
        let s = Permutation::parse("(1 3 4)(2 5)", 5).unwrap();
        assert_eq!(invariant_space(&[s], 2, 5, 1).unwrap().k(), 2);
        for p in 2..7usize {
            let rot = crate::demo::rotation(p);
            let sp = invariant_space(&[rot], 1, p * p, 1).unwrap();
            assert_eq!(sp.k(), (p * p).div_ceil(4));
        }
        let sp = invariant_space(&[Permutation::identity(4)], 4, 4, 2).unwrap();
        assert_eq!(sp.k(), 4);
        assert!(invariant_space(&[Permutation::identity(3)], 2, 4, 1).is_err());
    }

    #[test]
    fn psi_round_trip() {
        let part = Partition::from_one_based(5, &[vec![1, 3, 4], vec![2, 5]]).unwrap();
        let (a, b, c, d) = (1.5, -2.0, 0.25, 7.0);
        let m = Matrix::from_rows(&[vec![a, c, a, a, c], vec![b, d, b, b, d]]);
        let compact = psi_compress(&m, &part, INVARIANCE_TOL).unwrap();
        assert_eq!(compact, Matrix::from_rows(&[vec![a, c], vec![b, d]]));
        assert_eq!(psi_expand(&compact, &part).unwrap(), m);
        let mut bad = m.clone();
        bad[(1, 3)] += 0.1;
        assert!(matches!(
            psi_compress(&bad, &part, INVARIANCE_TOL),
            Err(Error::NotInvariant { block: 0, .. })
        ));
        let any = Matrix::from_rows(&[vec![1., 2.], vec![3., 4.]]);
        assert_eq!(psi_compress(&any, &Partition::singletons(2), INVARIANCE_TOL).unwrap(), any);
    }

    fn example_33() -> (Matrix, Matrix, Partition) {
        let compact = Matrix::from_rows(&[
            vec![1., 0., 1.],
            vec![2., 4., 1.],
            vec![3., 4., 1.],
            vec![0., 2., 1.],
        ]);
        let m = Matrix::from_rows(&[
            vec![1., 0., 1., 1.],
            vec![2., 4., 2., 1.],
            vec![3., 4., 3., 1.],
            vec![0., 2., 0., 1.],
        ]);
        let part = Partition::from_one_based(4, &[vec![1, 3], vec![2], vec![4]]).unwrap();
        (compact, m, part)
    }

    #[test]
    fn expand_example() {
        let (compact, m, part) = example_33();
        assert_eq!(psi_expand(&compact, &part).unwrap(), m);
        assert_eq!(psi_expand(&Matrix::zeros(4, 3), &part).unwrap(), Matrix::zeros(4, 4));
        assert!(psi_expand(&Matrix::zeros(4, 2), &part).is_err());
    }

    #[test]
    fn dimensions_and_degrees() {
        let part = Partition::from_one_based(3, &[vec![1, 3], vec![2]]).unwrap();
        let sp = InvariantSpace::new(part, 2, 1).unwrap();
        assert_eq!(invariant_dimension(&sp), 3);
        assert_eq!(invariant_degree(&sp), BigUint::from(2u32));
        let full = InvariantSpace::new(Partition::singletons(3), 3, 3).unwrap();
        assert_eq!(invariant_degree(&full), BigUint::from(1u32));
    }

    #[test]
    fn singular_points() {
        let part = Partition::from_one_based(4, &[vec![1, 3], vec![2], vec![4]]).unwrap();
        let sp = InvariantSpace::new(part.clone(), 4, 2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let c = gauss(&mut rng, 4, 2).matmul(&gauss(&mut rng, 2, 3));
        let m = psi_expand(&c, &part).unwrap();
        assert!(!is_singular_point(&sp, &m, DEFAULT_TOL).unwrap());
        assert!(is_singular_point(&sp, &Matrix::zeros(4, 4), DEFAULT_TOL).unwrap());
        let capped = InvariantSpace::new(part, 4, 3).unwrap();
        assert!(!is_singular_point(&capped, &Matrix::zeros(4, 4), DEFAULT_TOL).unwrap());
    }

    #[test]
    fn fit_recovers_invariant_map() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let part = Partition::from_one_based(6, &[vec![1, 4], vec![2, 5, 6], vec![3]]).unwrap();
        let sp = InvariantSpace::new(part.clone(), 4, 2).unwrap();
        let m0 = psi_expand(&gauss(&mut rng, 4, 2).matmul(&gauss(&mut rng, 2, 3)), &part).unwrap();
        let x = gauss(&mut rng, 6, 20);
        let y = m0.matmul(&x);
        let f = fit_invariant(&x, &y, &sp, &FitOptions::default()).unwrap();
        assert!(f.loss < 1e-16 * (1.0 + y.frobenius_sq()));
        assert!(f.minimizer.max_abs_diff(&m0) < 1e-8);
        assert_eq!(f.compact.unwrap().cols(), 3);
    }

    #[test]
    fn singleton_identity_fit_is_truncation() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let y = gauss(&mut rng, 3, 4);
        let sp = InvariantSpace::new(Partition::singletons(4), 3, 2).unwrap();
        let f = fit_invariant(&Matrix::identity(4), &y, &sp, &FitOptions::default()).unwrap();
        let ey = crate::optimize::eckart_young(&y, 2, false).unwrap();
        assert!(f.minimizer.max_abs_diff(&ey.truncated) < 1e-12);
    }

    #[test]
    fn autoencoder_examples() {
        let (compact, m, part) = example_33();
        let sp = InvariantSpace::new(part.clone(), 4, 3).unwrap();
        let f = invariant_autoencoder(&sp, &m, DEFAULT_TOL).unwrap();
        assert_eq!(f.decoder, compact);
        assert_eq!(f.encoder, part.replication_matrix());

        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let sp2 = InvariantSpace::new(part.clone(), 4, 2).unwrap();
        let m2 = psi_expand(&gauss(&mut rng, 4, 2).matmul(&gauss(&mut rng, 2, 3)), &part).unwrap();
        let f2 = invariant_autoencoder(&sp2, &m2, DEFAULT_TOL).unwrap();
        assert!(f2.decoder.matmul(&f2.encoder).max_abs_diff(&m2) < 1e-9);
        assert!(psi_compress(&f2.encoder, &part, 1e-12).is_ok());
        assert!(invariant_autoencoder(&sp2, &m, DEFAULT_TOL).is_err());

        let z = invariant_autoencoder(&sp, &Matrix::zeros(4, 4), DEFAULT_TOL).unwrap();
        assert_eq!(z.decoder, Matrix::zeros(4, 3));
        assert_eq!(z.encoder, part.replication_matrix());
    }
}
