//! Eigenvalue bookkeeping for permutation matrices and the complex and real
//! base changes that block-diagonalize them.
//!
//! Within each cycle the working order starts at the smallest label and
//! follows σ⁻¹, so every cycle block of `P_σ` becomes the subdiagonal shift
//! `circulant(0, …, 0, 1)`.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use num_complex::Complex64;
use num_integer::Integer;
use serde::{Deserialize, Serialize};

use crate::linalg::{realize, ComplexMatrix, Matrix};
use crate::perm::{CycleDecomposition, Permutation};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Field {
    Real,
    Complex,
}

impl std::str::FromStr for Field {
    type Err = crate::Error;
    fn from_str(s: &str) -> crate::Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "real" | "r" => Ok(Field::Real),
            "complex" | "c" => Ok(Field::Complex),
            other => Err(crate::Error::parse(other, "field must be `real` or `complex`")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RealKind {
    /// Eigenvalue 1.
    RealPlus,
    /// Eigenvalue −1.
    RealMinus,
    /// A conjugate pair `e^{±2πi m/l}`, l ≥ 3.
    ComplexPair,
}

/// One eigenvalue `e^{2πi m/l}` with multiplicity `size = d_l`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ComplexBlock {
    pub l: usize,
    pub m: usize,
    pub size: usize,
    pub offset: usize,
}

impl ComplexBlock {
    pub fn eigenvalue(&self) -> Complex64 {
        Complex64::from_polar(1.0, 2.0 * PI * self.m as f64 / self.l as f64)
    }
}

/// One diagonal block of the real base change. `width` is the number of
/// real coordinates it occupies: `size` for real kinds, `2·size` for pairs.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RealBlock {
    pub kind: RealKind,
    pub l: usize,
    pub m: usize,
    pub size: usize,
    pub offset: usize,
    pub width: usize,
}

impl RealBlock {
    /// Rotation angle of the block's 2×2 unit, in turns: `(l−m)/l` for
    /// pairs, 0 for `RealPlus`, ½ for `RealMinus`.
    pub fn turns(&self) -> f64 {
        match self.kind {
            RealKind::RealPlus => 0.0,
            RealKind::RealMinus => 0.5,
            RealKind::ComplexPair => (self.l - self.m) as f64 / self.l as f64,
        }
    }

    /// Rank units per unit of `r_{l,m}`: 2 for pairs, 1 otherwise.
    pub fn rank_weight(&self) -> usize {
        match self.kind {
            RealKind::ComplexPair => 2,
            _ => 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BlockSpectrum {
    pub n: usize,
    pub k: usize,
    pub cycle_lengths: Vec<usize>,
    /// `l → d_l`, the number of cycles whose length `l` divides.
    pub multiplicities: BTreeMap<usize, usize>,
    pub complex_blocks: Vec<ComplexBlock>,
    pub real_blocks: Vec<RealBlock>,
}

pub fn euler_phi(l: usize) -> usize {
    (1..=l).filter(|&m| m.gcd(&l) == 1).count()
}

fn divisors(x: usize) -> impl Iterator<Item = usize> {
    (1..=x).filter(move |d| x.is_multiple_of(*d))
}

/// Eigenvalue multiplicities and canonical block layouts for a cycle type.
pub fn eigen_multiplicities(c: &CycleDecomposition) -> BlockSpectrum {
    spectrum_from_lengths(&c.lengths())
}

pub fn spectrum_from_lengths(lengths: &[usize]) -> BlockSpectrum {
    let mut multiplicities = BTreeMap::new();
    for &len in lengths {
        for d in divisors(len) {
            *multiplicities.entry(d).or_insert(0) += 1;
        }
    }
    let mut complex_blocks = Vec::new();
    let mut offset = 0;
    for (&l, &d) in &multiplicities {
        for m in 1..=l {
            if m.gcd(&l) == 1 {
                complex_blocks.push(ComplexBlock { l, m, size: d, offset });
                offset += d;
            }
        }
    }
    let mut real_blocks = Vec::new();
    let mut offset = 0;
    let mut push = |kind, l, m, size: usize| {
        let width = if kind == RealKind::ComplexPair { 2 * size } else { size };
        real_blocks.push(RealBlock {
            kind,
            l,
            m,
            size,
            offset,
            width,
        });
        offset += width;
    };
    if let Some(&d1) = multiplicities.get(&1) {
        push(RealKind::RealPlus, 1, 1, d1);
    }
    if let Some(&d2) = multiplicities.get(&2) {
        push(RealKind::RealMinus, 2, 1, d2);
    }
    for (&l, &d) in multiplicities.range(3..) {
        for m in (l / 2 + 1)..l {
            if m.gcd(&l) == 1 {
                push(RealKind::ComplexPair, l, m, d);
            }
        }
    }
    BlockSpectrum {
        n: lengths.iter().sum(),
        k: lengths.len(),
        cycle_lengths: lengths.to_vec(),
        multiplicities,
        complex_blocks,
        real_blocks,
    }
}

impl BlockSpectrum {
    pub fn d(&self, l: usize) -> usize {
        self.multiplicities.get(&l).copied().unwrap_or(0)
    }

    /// `Σ_l φ(l)·d_l²`.
    pub fn commutant_dimension(&self) -> u64 {
        self.multiplicities
            .iter()
            .map(|(&l, &d)| euler_phi(l) as u64 * (d as u64) * (d as u64))
            .sum()
    }
}

/// Dimension of the commutant of `P_σ`, over ℝ or ℂ alike.
pub fn commutant_dimension(c: &CycleDecomposition) -> u64 {
    eigen_multiplicities(c).commutant_dimension()
}

/// Labels of one cycle in working order: smallest label first, then σ⁻¹.
fn working_order(cycle: &[usize]) -> Vec<usize> {
    // `cycle` follows σ from its smallest label; σ⁻¹ reverses it.
    let mut out = Vec::with_capacity(cycle.len());
    out.push(cycle[0]);
    out.extend(cycle[1..].iter().rev());
    out
}

/// The cycle-sorting permutation `T₁` as a list: position `p` holds label `t1[p]`.
pub fn cycle_sort_order(p: &Permutation) -> Vec<usize> {
    p.cycles().cycles().iter().flat_map(|c| working_order(c)).collect()
}

/// One real basis vector supported on a single cycle.
#[derive(Debug, Clone, PartialEq)]
pub struct SupportedColumn {
    /// Labels of the cycle in working order.
    pub cycle: usize,
    pub values: Vec<f64>,
}

/// Orthogonal `Q_σ` with `Q_σᵀ·P_σ·Q_σ` block diagonal in canonical real order.
#[derive(Debug, Clone)]
pub struct RealBaseChange {
    pub layout: BlockSpectrum,
    /// Labels of each cycle in working order.
    pub cycles: Vec<Vec<usize>>,
    /// Column `c` of `Q_σ` is supported on `cycles[columns[c].cycle]`.
    pub columns: Vec<SupportedColumn>,
    /// Column grouping: block-ordered column `c` is per-cycle column `grouping[c]`
    /// of `T₁·Q⁽¹⁾`.
    pub grouping: Vec<usize>,
}

/// Real basis of one cycle of length `len`: pairs `(j, values)` where `j ≥ 0`
/// is a cosine (or constant / alternating) vector and `j < 0` a sine vector.
fn cycle_real_basis(len: usize) -> Vec<(i64, Vec<f64>)> {
    let lf = len as f64;
    let mut out = vec![(0, vec![1.0 / lf.sqrt(); len])];
    for j in 1..len.div_ceil(2) {
        let theta = 2.0 * PI * j as f64 / lf;
        let s = (2.0 / lf).sqrt();
        out.push((j as i64, (0..len).map(|t| s * (theta * t as f64).cos()).collect()));
        out.push((-(j as i64), (0..len).map(|t| s * (theta * t as f64).sin()).collect()));
    }
    if len.is_multiple_of(2) {
        out.push((
            (len / 2) as i64,
            (0..len)
                .map(|t| if t % 2 == 0 { 1.0 } else { -1.0 } / lf.sqrt())
                .collect(),
        ));
    }
    out
}

pub fn real_base_change(p: &Permutation) -> RealBaseChange {
    let cd = p.cycles();
    let layout = eigen_multiplicities(&cd);
    let cycles: Vec<Vec<usize>> = cd.cycles().iter().map(|c| working_order(c)).collect();

    // Per-cycle columns in T₁·Q⁽¹⁾ order, keyed for grouping.
    let mut per_cycle: Vec<(usize, i64, Vec<f64>)> = Vec::with_capacity(p.n());
    let mut cycle_start = Vec::with_capacity(cycles.len());
    for (ci, c) in cycles.iter().enumerate() {
        cycle_start.push(per_cycle.len());
        for (j, v) in cycle_real_basis(c.len()) {
            per_cycle.push((ci, j, v));
        }
    }
    let find = |ci: usize, j: i64| -> usize {
        let start = cycle_start[ci];
        let len = cycles[ci].len();
        start
            + per_cycle[start..start + len]
                .iter()
                .position(|(_, jj, _)| *jj == j)
                .expect("basis index present")
    };

    let mut grouping = Vec::with_capacity(p.n());
    for b in &layout.real_blocks {
        for (ci, c) in cycles.iter().enumerate() {
            let len = c.len();
            if len % b.l != 0 {
                continue;
            }
            match b.kind {
                RealKind::RealPlus => grouping.push(find(ci, 0)),
                RealKind::RealMinus => grouping.push(find(ci, (len / 2) as i64)),
                RealKind::ComplexPair => {
                    let j = (len / b.l * (b.l - b.m)) as i64;
                    grouping.push(find(ci, j));
                    grouping.push(find(ci, -j));
                }
            }
        }
    }
    debug_assert_eq!(grouping.len(), p.n());
    let columns = grouping
        .iter()
        .map(|&g| SupportedColumn {
            cycle: per_cycle[g].0,
            values: per_cycle[g].2.clone(),
        })
        .collect();
    RealBaseChange {
        layout,
        cycles,
        columns,
        grouping,
    }
}

impl RealBaseChange {
    pub fn n(&self) -> usize {
        self.columns.len()
    }

    /// Dense `Q_σ`; columns expressed in original coordinates.
    pub fn matrix(&self) -> Matrix {
        let mut q = Matrix::zeros(self.n(), self.n());
        for (c, col) in self.columns.iter().enumerate() {
            for (t, &label) in self.cycles[col.cycle].iter().enumerate() {
                q[(label, c)] = col.values[t];
            }
        }
        q
    }

    pub fn inverse(&self) -> Matrix {
        self.matrix().transpose()
    }

    /// `Q_σᵀ · x` using the per-column cycle support.
    pub fn apply_qt(&self, x: &Matrix) -> Matrix {
        assert_eq!(x.rows(), self.n());
        let mut out = Matrix::zeros(self.n(), x.cols());
        for (c, col) in self.columns.iter().enumerate() {
            let dst = out.row_mut(c);
            for (t, &label) in self.cycles[col.cycle].iter().enumerate() {
                let w = col.values[t];
                for (d, &s) in dst.iter_mut().zip(x.row(label)) {
                    *d += w * s;
                }
            }
        }
        out
    }

    /// `Q_σ · y`.
    pub fn apply_q(&self, y: &Matrix) -> Matrix {
        assert_eq!(y.rows(), self.n());
        let mut out = Matrix::zeros(self.n(), y.cols());
        for (c, col) in self.columns.iter().enumerate() {
            for (t, &label) in self.cycles[col.cycle].iter().enumerate() {
                let w = col.values[t];
                let src: Vec<f64> = y.row(c).to_vec();
                for (d, s) in out.row_mut(label).iter_mut().zip(src) {
                    *d += w * s;
                }
            }
        }
        out
    }

    /// `Q_σᵀ · m · Q_σ`.
    pub fn conjugate(&self, m: &Matrix) -> Matrix {
        self.apply_qt(&self.apply_qt(&m.transpose()).transpose())
    }

    /// `Q_σ · m · Q_σᵀ`.
    pub fn unconjugate(&self, m: &Matrix) -> Matrix {
        self.apply_q(&self.apply_q(m).transpose()).transpose()
    }

    /// The documented form `Id ⊕ (−Id) ⊕ ⨁ ℛ(e^{2πi(l−m)/l}) ⊗ Id`.
    pub fn block_form(&self) -> Matrix {
        let blocks: Vec<Matrix> = self
            .layout
            .real_blocks
            .iter()
            .map(|b| match b.kind {
                RealKind::RealPlus => Matrix::identity(b.size),
                RealKind::RealMinus => Matrix::identity(b.size).scale(-1.0),
                RealKind::ComplexPair => {
                    let lam = Complex64::from_polar(1.0, 2.0 * PI * b.turns());
                    let unit = realize(&ComplexMatrix::from_fn(1, 1, |_, _| lam));
                    Matrix::direct_sum(&vec![unit; b.size])
                }
            })
            .collect();
        Matrix::direct_sum(&blocks)
    }
}

/// `T = T₁·T₂·T₃` diagonalizing `P_σ` over ℂ, with `T₂` the unnormalized
/// per-cycle Vandermonde matrices.
#[derive(Debug, Clone)]
pub struct ComplexBaseChange {
    pub layout: BlockSpectrum,
    /// `T₁` as a position → label list.
    pub t1: Vec<usize>,
    /// Per-cycle `(start, length, j)` of every column of `T₁·T₂`.
    step2: Vec<(usize, usize, usize)>,
    /// Block-ordered column `c` is column `grouping[c]` of `T₁·T₂`.
    pub grouping: Vec<usize>,
}

fn root_of_unity(len: usize, e: usize) -> Complex64 {
    Complex64::from_polar(1.0, 2.0 * PI * (e % len) as f64 / len as f64)
}

/// Eigenvalue label `(l, m)` of `v_j` on a cycle of length `len`: `ζ_len^{−j}`.
fn eigen_label(len: usize, j: usize) -> (usize, usize) {
    let e = (len - j % len) % len;
    if e == 0 {
        return (1, 1);
    }
    let g = e.gcd(&len);
    (len / g, e / g)
}

pub fn complex_base_change(p: &Permutation) -> ComplexBaseChange {
    let cd = p.cycles();
    let layout = eigen_multiplicities(&cd);
    let t1 = cycle_sort_order(p);
    let mut step2 = Vec::with_capacity(p.n());
    let mut start = 0;
    for c in cd.cycles() {
        for j in 0..c.len() {
            step2.push((start, c.len(), j));
        }
        start += c.len();
    }
    let mut grouping = Vec::with_capacity(p.n());
    for b in &layout.complex_blocks {
        for (idx, &(_, len, j)) in step2.iter().enumerate() {
            if eigen_label(len, j) == (b.l, b.m) {
                grouping.push(idx);
            }
        }
    }
    debug_assert_eq!(grouping.len(), p.n());
    ComplexBaseChange {
        layout,
        t1,
        step2,
        grouping,
    }
}

impl ComplexBaseChange {
    pub fn n(&self) -> usize {
        self.t1.len()
    }

    /// Permutation matrix `T₁`: column `p` is `e_{t1[p]}`.
    pub fn t1_matrix(&self) -> Matrix {
        let n = self.n();
        let mut m = Matrix::zeros(n, n);
        for (pos, &label) in self.t1.iter().enumerate() {
            m[(label, pos)] = 1.0;
        }
        m
    }

    /// Block-diagonal Vandermonde `T₂`; column `j` of a cycle block is `(ζ^{jt})_t`.
    pub fn t2_matrix(&self) -> ComplexMatrix {
        let n = self.n();
        let mut m = ComplexMatrix::zeros(n, n);
        for (col, &(start, len, j)) in self.step2.iter().enumerate() {
            for t in 0..len {
                m[(start + t, col)] = root_of_unity(len, j * t);
            }
        }
        m
    }

    fn t2_inverse(&self) -> ComplexMatrix {
        let n = self.n();
        let mut m = ComplexMatrix::zeros(n, n);
        for (row, &(start, len, j)) in self.step2.iter().enumerate() {
            for t in 0..len {
                m[(row, start + t)] = root_of_unity(len, j * t).conj() / len as f64;
            }
        }
        m
    }

    /// Grouping permutation `T₃`: column `c` is `e_{grouping[c]}`.
    pub fn t3_matrix(&self) -> Matrix {
        let n = self.n();
        let mut m = Matrix::zeros(n, n);
        for (c, &g) in self.grouping.iter().enumerate() {
            m[(g, c)] = 1.0;
        }
        m
    }

    pub fn matrix(&self) -> ComplexMatrix {
        ComplexMatrix::from_real(&self.t1_matrix())
            .matmul(&self.t2_matrix())
            .matmul(&ComplexMatrix::from_real(&self.t3_matrix()))
    }

    pub fn inverse(&self) -> ComplexMatrix {
        ComplexMatrix::from_real(&self.t3_matrix().transpose())
            .matmul(&self.t2_inverse())
            .matmul(&ComplexMatrix::from_real(&self.t1_matrix().transpose()))
    }

    /// Diagonal of `(T₁T₂)⁻¹·P_σ·T₁T₂`, before grouping.
    pub fn step2_diagonal(&self) -> Vec<Complex64> {
        self.step2
            .iter()
            .map(|&(_, len, j)| root_of_unity(len, len - j % len))
            .collect()
    }

    /// Diagonal of `T⁻¹·P_σ·T`: each block's eigenvalue repeated `d_l` times.
    pub fn diagonal(&self) -> Vec<Complex64> {
        self.layout
            .complex_blocks
            .iter()
            .flat_map(|b| std::iter::repeat_n(b.eigenvalue(), b.size))
            .collect()
    }
}
