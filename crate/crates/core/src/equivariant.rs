//! Equivariant linear maps of bounded rank: commutant bases, component
//! census, classification and weight-shared parameterization.

use num_bigint::BigUint;
use num_complex::Complex64;
use num_traits::{One, Zero};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::combinatorics::determinantal_degree;
use crate::error::{Error, Result};
use crate::linalg::{realize, svd_thin, ComplexMatrix, Matrix};
use crate::perm::{Permutation, UnionFind};
use crate::spectral::{eigen_multiplicities, real_base_change, BlockSpectrum, Field, RealKind};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RankEntry {
    pub l: usize,
    pub m: usize,
    pub rank: usize,
}

/// One admissible rank allocation `r = (r_{l,m})`, in canonical block order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RankVector {
    pub field: Field,
    pub entries: Vec<RankEntry>,
    pub total_rank: usize,
}

/// `(l, m, bound, weight)` for every block of the given field.
fn block_items(spec: &BlockSpectrum, field: Field) -> Vec<(usize, usize, usize, usize)> {
    match field {
        Field::Complex => spec
            .complex_blocks
            .iter()
            .map(|b| (b.l, b.m, b.size, 1))
            .collect(),
        Field::Real => spec
            .real_blocks
            .iter()
            .map(|b| (b.l, b.m, b.size, b.rank_weight()))
            .collect(),
    }
}

impl RankVector {
    /// Builds from per-block ranks in canonical order, checking bounds.
    pub fn new(spec: &BlockSpectrum, field: Field, ranks: &[usize]) -> Result<Self> {
        let items = block_items(spec, field);
        if ranks.len() != items.len() {
            return Err(Error::Inadmissible(format!(
                "{} ranks given for {} blocks",
                ranks.len(),
                items.len()
            )));
        }
        let mut entries = Vec::with_capacity(items.len());
        let mut total = 0;
        for (&(l, m, bound, w), &rank) in items.iter().zip(ranks) {
            if rank > bound {
                return Err(Error::Inadmissible(format!(
                    "r_({l},{m}) = {rank} exceeds d_{l} = {bound}"
                )));
            }
            total += w * rank;
            entries.push(RankEntry { l, m, rank });
        }
        Ok(RankVector {
            field,
            entries,
            total_rank: total,
        })
    }

    /// Parses `"1,0,1"` (whitespace also accepted) against a spectrum.
    pub fn parse(text: &str, spec: &BlockSpectrum, field: Field) -> Result<Self> {
        let mut ranks = Vec::new();
        for tok in text
            .trim()
            .trim_start_matches('(')
            .trim_end_matches(')')
            .split(|c: char| c == ',' || c.is_whitespace())
        {
            if tok.is_empty() {
                continue;
            }
            ranks.push(
                tok.parse()
                    .map_err(|_| Error::parse(tok, "expected a non-negative integer rank"))?,
            );
        }
        Self::new(spec, field, &ranks)
    }

    /// Builds from ranks listed in frequency order (see [`frequency_order`]).
    pub fn from_frequency_order(spec: &BlockSpectrum, ranks: &[usize]) -> Result<Self> {
        let order = frequency_order(spec);
        if ranks.len() != order.len() {
            return Err(Error::Inadmissible(format!(
                "{} ranks given for {} blocks",
                ranks.len(),
                order.len()
            )));
        }
        let mut canonical = vec![0; order.len()];
        for (&block, &r) in order.iter().zip(ranks) {
            canonical[block] = r;
        }
        Self::new(spec, Field::Real, &canonical)
    }

    pub fn ranks(&self) -> Vec<usize> {
        self.entries.iter().map(|e| e.rank).collect()
    }

    pub fn is_zero(&self) -> bool {
        self.entries.iter().all(|e| e.rank == 0)
    }
}

impl std::fmt::Display for RankVector {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let r: Vec<String> = self.entries.iter().map(|e| e.rank.to_string()).collect();
        write!(f, "({})", r.join(","))
    }
}

/// Real block indices sorted by rotation angle `min(θ, 1−θ)` in turns, ties
/// by canonical position: the order used when listing ranks from low to
/// high frequency.
pub fn frequency_order(spec: &BlockSpectrum) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..spec.real_blocks.len()).collect();
    idx.sort_by(|&a, &b| {
        let fa = spec.real_blocks[a].turns();
        let fb = spec.real_blocks[b].turns();
        fa.total_cmp(&fb).then(a.cmp(&b))
    });
    idx
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BlockShape {
    /// `real`, `realization`, or `complex`.
    pub variety: String,
    pub l: usize,
    pub m: usize,
    pub size: usize,
    pub rank: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComponentDescriptor {
    pub rank_vector: RankVector,
    pub dimension: u64,
    /// Exact degree for complex components, decimal string.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub degree: Option<String>,
    /// For real components: the conjectured degree, annotation only.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub degree_annotation: Option<String>,
    pub block_shapes: Vec<BlockShape>,
}

/// Basis of `{M : M·P_g = P_g·M ∀ g}` as 0/1 indicators of the orbits of the
/// generated group on index pairs, ordered by smallest `(row, col)`.
pub fn commutant_basis(gens: &[Permutation]) -> Result<Vec<Matrix>> {
    let n = check_gens(gens)?;
    Ok(pair_orbits(gens, n)
        .into_iter()
        .map(|orbit| {
            let mut m = Matrix::zeros(n, n);
            for idx in orbit {
                m[(idx / n, idx % n)] = 1.0;
            }
            m
        })
        .collect())
}

/// Dimension of the commutant without materializing the basis.
pub fn commutant_space_dimension(gens: &[Permutation]) -> Result<usize> {
    let n = check_gens(gens)?;
    Ok(pair_orbits(gens, n).len())
}

/// Frobenius-nearest point of the commutant: the average over every pair orbit.
pub fn project_commutant(m: &Matrix, gens: &[Permutation]) -> Result<Matrix> {
    let n = check_gens(gens)?;
    if m.shape() != (n, n) {
        return Err(Error::Dimension(format!(
            "expected {n}x{n}, got {}x{}",
            m.rows(),
            m.cols()
        )));
    }
    let mut out = Matrix::zeros(n, n);
    for orbit in pair_orbits(gens, n) {
        let mean = orbit.iter().map(|&k| m[(k / n, k % n)]).sum::<f64>() / orbit.len() as f64;
        for k in orbit {
            out[(k / n, k % n)] = mean;
        }
    }
    Ok(out)
}

fn check_gens(gens: &[Permutation]) -> Result<usize> {
    let n = gens
        .first()
        .ok_or_else(|| Error::Dimension("empty generator list".into()))?
        .n();
    if let Some(g) = gens.iter().find(|g| g.n() != n) {
        return Err(Error::Dimension(format!(
            "generators act on [{}] and [{}]",
            n,
            g.n()
        )));
    }
    Ok(n)
}

fn pair_orbits(gens: &[Permutation], n: usize) -> Vec<Vec<usize>> {
    let mut uf = UnionFind::new(n * n);
    for g in gens {
        for i in 0..n {
            for j in 0..n {
                uf.union(i * n + j, g.apply(i) * n + g.apply(j));
            }
        }
    }
    uf.groups()
}

/// `‖M·P_σ − P_σ·M‖_F`, using the index view of `P_σ`.
pub fn commutator_norm(m: &Matrix, p: &Permutation) -> f64 {
    p.apply_cols(m).sub(&p.apply_rows(m)).frobenius_norm()
}

pub fn is_equivariant(m: &Matrix, p: &Permutation, tol: f64) -> bool {
    commutator_norm(m, p) <= tol * (1.0 + m.frobenius_norm())
}

/// After sorting coordinates by cycles, checks every `ℓ_i × ℓ_j` block is
/// (rectangular) circulant: entry `(s, t)` equals entry `(s+1, t+1)` cyclically.
pub fn check_circulant_blocks(m: &Matrix, p: &Permutation, tol: f64) -> bool {
    if m.rows() != p.n() || m.cols() != p.n() {
        return false;
    }
    let gate = tol * (1.0 + m.frobenius_norm());
    let cycles = p.cycles();
    for ci in cycles.cycles() {
        for cj in cycles.cycles() {
            let (li, lj) = (ci.len(), cj.len());
            for s in 0..li {
                for t in 0..lj {
                    let a = m[(ci[s], cj[t])];
                    let b = m[(ci[(s + 1) % li], cj[(t + 1) % lj])];
                    if (a - b).abs() > gate {
                        return false;
                    }
                }
            }
        }
    }
    true
}

/// Number of admissible rank vectors, by bounded-composition dynamic programming.
pub fn count_components(spec: &BlockSpectrum, r: usize, field: Field) -> BigUint {
    let mut ways = vec![BigUint::zero(); r + 1];
    ways[0] = BigUint::one();
    for (_, _, bound, weight) in block_items(spec, field) {
        let mut next = vec![BigUint::zero(); r + 1];
        for (total, slot) in next.iter_mut().enumerate() {
            for x in 0..=bound {
                let used = x * weight;
                if used > total {
                    break;
                }
                *slot += &ways[total - used];
            }
        }
        ways = next;
    }
    ways.swap_remove(r)
}

/// Lazily yields admissible rank vectors in descending lexicographic order.
pub struct ComponentIter {
    spec: BlockSpectrum,
    field: Field,
    items: Vec<(usize, usize, usize, usize)>,
    /// `reach[i][t]`: blocks `i..` can realize total `t` exactly.
    reach: Vec<Vec<bool>>,
    target: usize,
    current: Option<Vec<usize>>,
    started: bool,
}

impl ComponentIter {
    fn new(spec: &BlockSpectrum, r: usize, field: Field) -> Self {
        let items = block_items(spec, field);
        let k = items.len();
        let mut reach = vec![vec![false; r + 1]; k + 1];
        reach[k][0] = true;
        for i in (0..k).rev() {
            let (_, _, bound, w) = items[i];
            for t in 0..=r {
                reach[i][t] = (0..=bound)
                    .take_while(|x| x * w <= t)
                    .any(|x| reach[i + 1][t - x * w]);
            }
        }
        ComponentIter {
            spec: spec.clone(),
            field,
            items,
            reach,
            target: r,
            current: None,
            started: false,
        }
    }

    /// Greedy largest-first completion of positions `from..` to total `rem`.
    fn fill(&self, x: &mut [usize], from: usize, mut rem: usize) {
        for i in from..self.items.len() {
            let (_, _, bound, w) = self.items[i];
            let mut v = bound.min(rem / w);
            while !self.reach[i + 1][rem - v * w] {
                v -= 1;
            }
            x[i] = v;
            rem -= v * w;
        }
    }

    fn advance(&self, x: &[usize]) -> Option<Vec<usize>> {
        let k = self.items.len();
        let mut prefix: Vec<usize> = Vec::with_capacity(k + 1);
        prefix.push(0);
        for i in 0..k {
            prefix.push(prefix[i] + x[i] * self.items[i].3);
        }
        for i in (0..k).rev() {
            if x[i] == 0 {
                continue;
            }
            let w = self.items[i].3;
            for v in (0..x[i]).rev() {
                let used = prefix[i] + v * w;
                if used > self.target {
                    continue;
                }
                let rem = self.target - used;
                if self.reach[i + 1][rem] {
                    let mut y = x.to_vec();
                    y[i] = v;
                    self.fill(&mut y, i + 1, rem);
                    return Some(y);
                }
            }
        }
        None
    }
}

impl ComponentIter {
    /// Next rank vector as plain per-block ranks, skipping descriptor work.
    pub fn next_ranks(&mut self) -> Option<Vec<usize>> {
        let next = if !self.started {
            self.started = true;
            if !self.reach[0][self.target] {
                None
            } else {
                let mut x = vec![0; self.items.len()];
                self.fill(&mut x, 0, self.target);
                Some(x)
            }
        } else {
            self.current.as_ref().and_then(|x| self.advance(x))
        };
        self.current = next.clone();
        next
    }
}

impl Iterator for ComponentIter {
    type Item = ComponentDescriptor;

    fn next(&mut self) -> Option<ComponentDescriptor> {
        self.next_ranks().map(|x| {
            let rv = RankVector::new(&self.spec, self.field, &x).expect("admissible by construction");
            describe_component(&self.spec, &rv)
        })
    }
}

/// Streams all components, refusing when the exact count exceeds `limit`.
pub fn enumerate_components(
    spec: &BlockSpectrum,
    r: usize,
    field: Field,
    limit: u64,
) -> Result<ComponentIter> {
    let count = count_components(spec, r, field);
    if count > BigUint::from(limit) {
        return Err(Error::LimitExceeded {
            count: count.to_string(),
            limit,
        });
    }
    Ok(ComponentIter::new(spec, r, field))
}

/// Closed-form dimension: `Σ (2d−r)·r`, pair blocks doubled over ℝ.
pub fn component_dimension(spec: &BlockSpectrum, rv: &RankVector) -> u64 {
    let items = block_items(spec, rv.field);
    rv.entries
        .iter()
        .zip(items)
        .map(|(e, (_, _, d, w))| (w as u64) * ((2 * d - e.rank) * e.rank) as u64)
        .sum()
}

/// Degree of a complex component, `∏ deg M_{r_{l,m}, d_l×d_l}`.
pub fn component_degree_complex(spec: &BlockSpectrum, rv: &RankVector) -> Result<BigUint> {
    if rv.field != Field::Complex {
        return Err(Error::Unsupported(
            "degrees of real components are not known in closed form".into(),
        ));
    }
    let items = block_items(spec, Field::Complex);
    Ok(rv
        .entries
        .iter()
        .zip(items)
        .map(|(e, (_, _, d, _))| determinantal_degree(d, d, e.rank))
        .product())
}

pub fn describe_component(spec: &BlockSpectrum, rv: &RankVector) -> ComponentDescriptor {
    let dimension = component_dimension(spec, rv);
    let block_shapes = match rv.field {
        Field::Complex => spec
            .complex_blocks
            .iter()
            .zip(&rv.entries)
            .map(|(b, e)| BlockShape {
                variety: "complex".into(),
                l: b.l,
                m: b.m,
                size: b.size,
                rank: e.rank,
            })
            .collect(),
        Field::Real => spec
            .real_blocks
            .iter()
            .zip(&rv.entries)
            .map(|(b, e)| BlockShape {
                variety: if b.kind == RealKind::ComplexPair {
                    "realization".into()
                } else {
                    "real".into()
                },
                l: b.l,
                m: b.m,
                size: b.size,
                rank: e.rank,
            })
            .collect(),
    };
    let (degree, degree_annotation) = match rv.field {
        Field::Complex => (
            Some(component_degree_complex(spec, rv).expect("complex field").to_string()),
            None,
        ),
        Field::Real => {
            let conj: BigUint = spec
                .real_blocks
                .iter()
                .zip(&rv.entries)
                .map(|(b, e)| {
                    let g = determinantal_degree(b.size, b.size, e.rank);
                    if b.kind == RealKind::ComplexPair {
                        &g * &g
                    } else {
                        g
                    }
                })
                .product();
            (None, Some(format!("conjectured (deg)^2 on realization blocks: {conj}")))
        }
    };
    ComponentDescriptor {
        rank_vector: rv.clone(),
        dimension,
        degree,
        degree_annotation,
        block_shapes,
    }
}

/// Reads the real rank vector of an equivariant matrix from the block ranks
/// of `Q_σᵀ·M·Q_σ`. Pair blocks must have even real rank.
pub fn classify_component(m: &Matrix, p: &Permutation, tol: f64) -> Result<RankVector> {
    if m.rows() != p.n() || m.cols() != p.n() {
        return Err(Error::Dimension(format!(
            "{}x{} matrix for a permutation of [{}]",
            m.rows(),
            m.cols(),
            p.n()
        )));
    }
    let residual = commutator_norm(m, p);
    if residual > tol * (1.0 + m.frobenius_norm()) {
        return Err(Error::NotEquivariant { residual });
    }
    let q = real_base_change(p);
    let conj = q.conjugate(m);
    let smax = crate::linalg::singular_values(m)?.first().copied().unwrap_or(0.0);
    let threshold = tol * smax * p.n() as f64;
    let mut ranks = Vec::with_capacity(q.layout.real_blocks.len());
    for b in &q.layout.real_blocks {
        let block = conj.block(b.offset, b.offset, b.width, b.width);
        let rank = if smax == 0.0 {
            0
        } else {
            crate::linalg::rank_above(&block, threshold)?
        };
        if b.kind == RealKind::ComplexPair {
            if rank % 2 != 0 {
                return Err(Error::OddPairRank { l: b.l, m: b.m, rank });
            }
            ranks.push(rank / 2);
        } else {
            ranks.push(rank);
        }
    }
    RankVector::new(&q.layout, Field::Real, &ranks)
}

/// Factors of one block in the `Q_σ` basis.
#[derive(Debug, Clone, PartialEq)]
pub enum BlockFactor {
    Real { decoder: Matrix, encoder: Matrix },
    Complex { decoder: ComplexMatrix, encoder: ComplexMatrix },
}

impl BlockFactor {
    fn parameter_count(&self) -> usize {
        match self {
            BlockFactor::Real { decoder, encoder } => {
                decoder.rows() * decoder.cols() + encoder.rows() * encoder.cols()
            }
            BlockFactor::Complex { decoder, encoder } => {
                2 * (decoder.rows() * decoder.cols() + encoder.rows() * encoder.cols())
            }
        }
    }
}

fn check_real_admissible(rv: &RankVector, spec: &BlockSpectrum) -> Result<()> {
    if rv.field != Field::Real {
        return Err(Error::Inadmissible(
            "a complex rank vector does not name a real component".into(),
        ));
    }
    RankVector::new(spec, Field::Real, &rv.ranks()).map(|_| ())
}

/// Unit-normal per-block factors; complex blocks sampled in ℂ.
pub fn sample_block_factors<R: Rng + ?Sized>(
    rv: &RankVector,
    spec: &BlockSpectrum,
    rng: &mut R,
) -> Result<Vec<BlockFactor>> {
    check_real_admissible(rv, spec)?;
    let mut normal = || -> f64 { rng.sample(StandardNormal) };
    Ok(spec
        .real_blocks
        .iter()
        .zip(&rv.entries)
        .map(|(b, e)| {
            let (d, r) = (b.size, e.rank);
            if b.kind == RealKind::ComplexPair {
                let mut cz = |rows, cols| {
                    ComplexMatrix::from_fn(rows, cols, |_, _| Complex64::new(normal(), normal()))
                };
                let decoder = cz(d, r);
                let encoder = cz(r, d);
                BlockFactor::Complex { decoder, encoder }
            } else {
                let decoder = Matrix::from_fn(d, r, |_, _| normal());
                let encoder = Matrix::from_fn(r, d, |_, _| normal());
                BlockFactor::Real { decoder, encoder }
            }
        })
        .collect())
}

/// Flat parameter vector ↔ block factors, for Jacobian checks.
pub fn factors_from_flat(rv: &RankVector, spec: &BlockSpectrum, params: &[f64]) -> Result<Vec<BlockFactor>> {
    check_real_admissible(rv, spec)?;
    let mut it = params.iter().copied();
    let mut take = || it.next().ok_or_else(|| Error::Dimension("too few parameters".into()));
    let mut out = Vec::new();
    for (b, e) in spec.real_blocks.iter().zip(&rv.entries) {
        let (d, r) = (b.size, e.rank);
        if b.kind == RealKind::ComplexPair {
            let mut data = |n: usize| -> Result<Vec<Complex64>> {
                (0..n).map(|_| Ok(Complex64::new(take()?, take()?))).collect()
            };
            let decoder = ComplexMatrix::from_vec(d, r, data(d * r)?)?;
            let encoder = ComplexMatrix::from_vec(r, d, data(r * d)?)?;
            out.push(BlockFactor::Complex { decoder, encoder });
        } else {
            let mut data = |n: usize| -> Result<Vec<f64>> { (0..n).map(|_| take()).collect() };
            let decoder = Matrix::from_vec(d, r, data(d * r)?)?;
            let encoder = Matrix::from_vec(r, d, data(r * d)?)?;
            out.push(BlockFactor::Real { decoder, encoder });
        }
    }
    if it.next().is_some() {
        return Err(Error::Dimension("too many parameters".into()));
    }
    Ok(out)
}

/// Number of free real parameters of the component's factorization.
pub fn parameter_count(rv: &RankVector, spec: &BlockSpectrum) -> usize {
    spec.real_blocks
        .iter()
        .zip(&rv.entries)
        .map(|(b, e)| b.rank_weight() * 2 * b.size * e.rank)
        .sum()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TiedWeight {
    pub row: usize,
    pub col: usize,
    pub sign: i8,
}

/// Weight sharing of the factors in the `Q_σ` basis. Indices are 0-based.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WeightSharingReport {
    pub bottleneck: usize,
    pub encoder_groups: Vec<Vec<TiedWeight>>,
    pub decoder_groups: Vec<Vec<TiedWeight>>,
    /// Input coordinates of the `Q_σ` basis the encoder never reads.
    pub inactive_inputs: Vec<usize>,
    /// Output coordinates of the `Q_σ` basis the decoder never writes.
    pub inactive_outputs: Vec<usize>,
}

#[derive(Debug, Clone)]
pub struct Parameterization {
    pub rank_vector: RankVector,
    /// `n × r`, original coordinates.
    pub decoder: Matrix,
    /// `r × n`, original coordinates.
    pub encoder: Matrix,
    pub decoder_q: Matrix,
    pub encoder_q: Matrix,
    pub pattern: WeightSharingReport,
    pub parameter_count: usize,
}

impl Parameterization {
    pub fn product(&self) -> Matrix {
        self.decoder.matmul(&self.encoder)
    }
}

fn pattern_groups(rows: usize, cols: usize, r0: usize, c0: usize, realization: bool) -> Vec<Vec<TiedWeight>> {
    let w = |row, col, sign| TiedWeight { row, col, sign };
    let mut groups = Vec::new();
    if realization {
        for i in 0..rows / 2 {
            for j in 0..cols / 2 {
                let (a, b) = (r0 + 2 * i, c0 + 2 * j);
                groups.push(vec![w(a, b, 1), w(a + 1, b + 1, 1)]);
                groups.push(vec![w(a + 1, b, 1), w(a, b + 1, -1)]);
            }
        }
    } else {
        for i in 0..rows {
            for j in 0..cols {
                groups.push(vec![w(r0 + i, c0 + j, 1)]);
            }
        }
    }
    groups
}

/// Assembles decoder/encoder with the block sparsity of the component, from
/// given per-block factors.
pub fn parameterize_with(
    rv: &RankVector,
    p: &Permutation,
    factors: &[BlockFactor],
) -> Result<Parameterization> {
    let q = real_base_change(p);
    let spec = &q.layout;
    check_real_admissible(rv, spec)?;
    if factors.len() != spec.real_blocks.len() {
        return Err(Error::Dimension(format!(
            "{} block factors for {} blocks",
            factors.len(),
            spec.real_blocks.len()
        )));
    }
    let n = p.n();
    let bottleneck = rv.total_rank;
    let mut dq = Matrix::zeros(n, bottleneck);
    let mut eq = Matrix::zeros(bottleneck, n);
    let mut pattern = WeightSharingReport {
        bottleneck,
        encoder_groups: Vec::new(),
        decoder_groups: Vec::new(),
        inactive_inputs: Vec::new(),
        inactive_outputs: Vec::new(),
    };
    let mut col = 0;
    for ((b, e), f) in spec.real_blocks.iter().zip(&rv.entries).zip(factors) {
        let width = e.rank * b.rank_weight();
        let (dec, enc, realization) = match f {
            BlockFactor::Real { decoder, encoder } => (decoder.clone(), encoder.clone(), false),
            BlockFactor::Complex { decoder, encoder } => (realize(decoder), realize(encoder), true),
        };
        if realization != (b.kind == RealKind::ComplexPair)
            || dec.shape() != (b.width, width)
            || enc.shape() != (width, b.width)
        {
            return Err(Error::Dimension(format!(
                "factor shapes do not match block ({}, {}) of size {} and rank {}",
                b.l, b.m, b.size, e.rank
            )));
        }
        dq.set_block(b.offset, col, &dec);
        eq.set_block(col, b.offset, &enc);
        if width == 0 {
            pattern.inactive_inputs.extend(b.offset..b.offset + b.width);
            pattern.inactive_outputs.extend(b.offset..b.offset + b.width);
        } else {
            pattern
                .decoder_groups
                .extend(pattern_groups(b.width, width, b.offset, col, realization));
            pattern
                .encoder_groups
                .extend(pattern_groups(width, b.width, col, b.offset, realization));
        }
        col += width;
    }
    let parameter_count = factors.iter().map(BlockFactor::parameter_count).sum();
    Ok(Parameterization {
        rank_vector: rv.clone(),
        decoder: q.apply_q(&dq),
        encoder: q.apply_q(&eq.transpose()).transpose(),
        decoder_q: dq,
        encoder_q: eq,
        pattern,
        parameter_count,
    })
}

/// Random point of the component `rv`, with its factorization.
pub fn parameterize_component<R: Rng + ?Sized>(
    rv: &RankVector,
    p: &Permutation,
    rng: &mut R,
) -> Result<Parameterization> {
    let spec = eigen_multiplicities(&p.cycles());
    let factors = sample_block_factors(rv, &spec, rng)?;
    parameterize_with(rv, p, &factors)
}

/// Rank-`r` factorization `M = D·E` of a matrix in a real component, with
/// `D`, `E` carrying the component's block and weight-sharing pattern.
pub fn factorize_equivariant(m: &Matrix, p: &Permutation, tol: f64) -> Result<Parameterization> {
    let rv = classify_component(m, p, tol)?;
    let q = real_base_change(p);
    let conj = q.conjugate(m);
    let mut factors = Vec::with_capacity(q.layout.real_blocks.len());
    for (b, e) in q.layout.real_blocks.iter().zip(&rv.entries) {
        let block = conj.block(b.offset, b.offset, b.width, b.width);
        if b.kind == RealKind::ComplexPair {
            let z = crate::linalg::unrealize(&crate::linalg::project_realization(&block), 1e-6)?;
            let (u, s, vh) = crate::linalg::complex_svd(&z)?;
            let r = e.rank;
            let decoder = ComplexMatrix::from_fn(b.size, r, |i, j| u[(i, j)] * s[j]);
            let encoder = ComplexMatrix::from_fn(r, b.size, |i, j| vh[(i, j)]);
            factors.push(BlockFactor::Complex { decoder, encoder });
        } else {
            let t = svd_thin(&block)?;
            let r = e.rank;
            let decoder = Matrix::from_fn(b.size, r, |i, j| t.u[(i, j)] * t.s[j]);
            let encoder = Matrix::from_fn(r, b.size, |i, j| t.vt[(i, j)]);
            factors.push(BlockFactor::Real { decoder, encoder });
        }
    }
    parameterize_with(&rv, p, &factors)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::spectrum_from_lengths;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn rotation() -> Permutation {
        Permutation::parse("(1 4 3 2)(5 8 7 6)", 9).unwrap()
    }

    #[test]
    fn commutant_bases_of_image_symmetries() {
        let rot = rotation();
        let basis = commutant_basis(std::slice::from_ref(&rot)).unwrap();
        assert_eq!(basis.len(), 21);
        let pm = rot.matrix();
        for b in &basis {
            assert_eq!(b.matmul(&pm), pm.matmul(b));
        }
        let refl = Permutation::parse("(1 2)(3 4)(6 8)", 9).unwrap();
        assert_eq!(commutant_space_dimension(&[rot.clone(), refl.clone()]).unwrap(), 15);
        let shift = Permutation::parse("(1 5 2)(3 4 7)(6 8 9)", 9).unwrap();
        assert_eq!(commutant_space_dimension(&[rot, refl, shift]).unwrap(), 3);
    }

    #[test]
    fn rotation_census() {
        let spec = eigen_multiplicities(&rotation().cycles());
        assert_eq!(count_components(&spec, 3, Field::Complex), BigUint::from(17u32));
        assert_eq!(count_components(&spec, 3, Field::Real), BigUint::from(5u32));
        let real: Vec<_> = enumerate_components(&spec, 3, Field::Real, 100)
            .unwrap()
            .map(|c| (c.rank_vector.ranks(), c.dimension))
            .collect();
        assert_eq!(
            real,
            vec![
                (vec![3, 0, 0], 9),
                (vec![2, 1, 0], 11),
                (vec![1, 2, 0], 9),
                (vec![1, 0, 1], 11),
                (vec![0, 1, 1], 9)
            ]
        );
        let mut dims: Vec<u64> = enumerate_components(&spec, 3, Field::Complex, 100)
            .unwrap()
            .map(|c| c.dimension)
            .collect();
        dims.sort();
        assert_eq!(dims, [vec![7; 6], vec![9; 5], vec![11; 6]].concat());
    }

    #[test]
    fn zero_rank_census() {
        let spec = eigen_multiplicities(&rotation().cycles());
        let all: Vec<_> = enumerate_components(&spec, 0, Field::Real, 10).unwrap().collect();
        assert_eq!(all.len(), 1);
        assert!(all[0].rank_vector.is_zero());
        assert_eq!(all[0].dimension, 0);
    }

    #[test]
    fn limit_is_enforced() {
        let spec = spectrum_from_lengths(&[28; 28]);
        match enumerate_components(&spec, 99, Field::Real, 1000) {
            Err(Error::LimitExceeded { count, .. }) => assert_eq!(count, "72425986088826"),
            Err(e) => panic!("unexpected error {e}"),
            Ok(_) => panic!("limit not enforced"),
        }
    }

    #[test]
    fn frequency_order_matches_listing() {
        let spec = spectrum_from_lengths(&[28; 28]);
        let labels: Vec<(usize, usize)> = frequency_order(&spec)
            .into_iter()
            .map(|i| (spec.real_blocks[i].l, spec.real_blocks[i].m))
            .collect();
        assert_eq!(
            labels,
            vec![
                (1, 1),
                (28, 27),
                (14, 13),
                (28, 25),
                (7, 6),
                (28, 23),
                (14, 11),
                (4, 3),
                (7, 5),
                (28, 19),
                (14, 9),
                (28, 17),
                (7, 4),
                (28, 15),
                (2, 1)
            ]
        );
    }

    #[test]
    fn classify_constructed_components() {
        let p = rotation();
        let q = real_base_change(&p);
        let m = q.unconjugate(&Matrix::direct_sum(&[Matrix::identity(3), Matrix::zeros(6, 6)]));
        assert_eq!(classify_component(&m, &p, 1e-8).unwrap().ranks(), vec![3, 0, 0]);
        assert!(matches!(
            classify_component(&Matrix::identity(9).add(&Matrix::from_fn(9, 9, |i, j| (i * j) as f64)), &p, 1e-8),
            Err(Error::NotEquivariant { .. })
        ));
    }

    #[test]
    fn parameterization_round_trips() {
        let p = rotation();
        let spec = eigen_multiplicities(&p.cycles());
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for c in enumerate_components(&spec, 3, Field::Real, 100).unwrap() {
            let par = parameterize_component(&c.rank_vector, &p, &mut rng).unwrap();
            let m = par.product();
            assert!(is_equivariant(&m, &p, 1e-10));
            assert!(check_circulant_blocks(&m, &p, 1e-10));
            assert_eq!(classify_component(&m, &p, 1e-8).unwrap(), c.rank_vector);
        }
    }

    #[test]
    fn weight_sharing_of_example_component() {
        let p = rotation();
        let spec = eigen_multiplicities(&p.cycles());
        let rv = RankVector::new(&spec, Field::Real, &[1, 0, 1]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let par = parameterize_component(&rv, &p, &mut rng).unwrap();
        assert_eq!(par.decoder.shape(), (9, 3));
        assert_eq!(par.encoder.shape(), (3, 9));
        assert_eq!(par.pattern.inactive_inputs, vec![3, 4]);
        assert_eq!(par.pattern.inactive_outputs, vec![3, 4]);
        // 3 real encoder weights + 2·2 realization pairs
        assert_eq!(par.pattern.encoder_groups.len(), 3 + 4);
        for g in &par.pattern.encoder_groups {
            let v: Vec<f64> = g.iter().map(|w| w.sign as f64 * par.encoder_q[(w.row, w.col)]).collect();
            assert!(v.iter().all(|x| (x - v[0]).abs() < 1e-14));
        }
        assert_eq!(par.parameter_count, 2 * 3 + 4 * 2);
    }

    #[test]
    fn rank_one_invariant_type_component_is_cycle_constant() {
        let p = rotation();
        let spec = eigen_multiplicities(&p.cycles());
        let rv = RankVector::new(&spec, Field::Real, &[1, 0, 0]).unwrap();
        let par = parameterize_component(&rv, &p, &mut ChaCha8Rng::seed_from_u64(11)).unwrap();
        for c in p.cycles().cycles() {
            for &j in c {
                assert!((par.decoder[(j, 0)] - par.decoder[(c[0], 0)]).abs() < 1e-12);
                assert!((par.encoder[(0, j)] - par.encoder[(0, c[0])]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn odd_pair_rank_is_rejected() {
        let p = Permutation::parse("(1 2 3 4)", 4).unwrap();
        let q = real_base_change(&p);
        // a real rank-one matrix inside the pair block is not a realization
        let mut b = Matrix::zeros(4, 4);
        b[(2, 2)] = 1.0;
        b[(3, 3)] = 0.0;
        let m = q.unconjugate(&b);
        // not even equivariant, since the pair block is not a realization
        assert!(classify_component(&m, &p, 1e-8).is_err());
    }

    #[test]
    fn factorization_recovers_matrix() {
        let p = rotation();
        let spec = eigen_multiplicities(&p.cycles());
        let rv = RankVector::new(&spec, Field::Real, &[1, 1, 1]).unwrap();
        let par = parameterize_component(&rv, &p, &mut ChaCha8Rng::seed_from_u64(12)).unwrap();
        let m = par.product();
        let f = factorize_equivariant(&m, &p, 1e-8).unwrap();
        assert_eq!(f.rank_vector, rv);
        assert!(f.product().max_abs_diff(&m) < 1e-10);
    }
}
