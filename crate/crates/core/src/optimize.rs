//! Squared-error loss `‖MX − Y‖²_F` over bounded-rank, invariant and
//! equivariant matrices, via weighted Eckart–Young.

use num_bigint::BigUint;
use num_complex::Complex64;
use serde::Serialize;

use crate::equivariant::{ComponentIter, RankVector};
use crate::error::{Error, Result};
use crate::linalg::{complex_svd, realize, svd_thin, ComplexMatrix, Matrix, PsdEigen};
use crate::perm::Permutation;
use crate::spectral::{real_base_change, BlockSpectrum, Field, RealBaseChange, RealKind};

pub use crate::combinatorics::{ed_degree, EdKind};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitOptions {
    /// Ridge term `λ`: fits against `XXᵀ + λ·Id`. Never applied implicitly.
    pub ridge: Option<f64>,
    /// Relative tolerance for the `rank(XXᵀ) = n` check.
    pub rank_tol: f64,
    /// Relative gap below which `σ_r = σ_{r+1}` counts as a tie.
    pub tie_tol: f64,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions {
            ridge: None,
            rank_tol: 1e-10,
            tie_tol: 1e-10,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BlockDiagnostics {
    pub block: String,
    pub kept: Vec<f64>,
    pub dropped: Vec<f64>,
    pub boundary_tie: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ComponentLabel {
    Unconstrained { rank: usize },
    Invariant { effective_rank: usize, blocks: usize },
    Equivariant { rank_vector: RankVector },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CandidateLoss {
    pub ranks: Vec<usize>,
    pub objective: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct FitResult {
    pub minimizer: Matrix,
    /// `‖MX − Y‖²_F` recomputed from the minimizer.
    pub loss: f64,
    pub component: ComponentLabel,
    pub per_block: Vec<BlockDiagnostics>,
    pub regularization: Option<f64>,
    /// True if some truncation boundary had tied singular values.
    pub non_unique: bool,
    /// Compressed factor for invariant fits.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub compact: Option<Matrix>,
    /// How the component was chosen: `given`, `exhaustive` or `heuristic_energy`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub selection: Option<String>,
    /// Objective of every component examined (exhaustive search, up to 1000 entries).
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub candidates: Vec<CandidateLoss>,
}

pub fn squared_error(m: &Matrix, x: &Matrix, y: &Matrix) -> f64 {
    m.matmul(x).sub(y).frobenius_sq()
}

#[derive(Debug, Clone)]
pub struct CriticalPoint {
    /// Indices (into descending singular values) kept by this truncation.
    pub indices: Vec<usize>,
    pub matrix: Matrix,
    pub distance_sq: f64,
}

#[derive(Debug, Clone)]
pub struct EckartYoung {
    pub truncated: Matrix,
    pub kept: Vec<f64>,
    pub dropped: Vec<f64>,
    pub boundary_tie: bool,
    pub critical: Option<Vec<CriticalPoint>>,
}

/// Largest number of critical points `eckart_young` will enumerate.
pub const CRITICAL_ENUMERATION_CAP: usize = 100_000;

fn is_tie(s: &[f64], r: usize, tie_tol: f64) -> bool {
    if r == 0 || r >= s.len() {
        return false;
    }
    let smax = s[0];
    s[r - 1] > tie_tol * smax && s[r - 1] - s[r] <= tie_tol * smax
}

fn subsets(q: usize, r: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur = Vec::with_capacity(r);
    fn rec(start: usize, q: usize, r: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == r {
            out.push(cur.clone());
            return;
        }
        for i in start..q {
            if q - i < r - cur.len() {
                break;
            }
            cur.push(i);
            rec(i + 1, q, r, cur, out);
            cur.pop();
        }
    }
    rec(0, q, r, &mut cur, &mut out);
    out
}

/// Closest matrix of rank ≤ `r` in Frobenius norm, optionally with every
/// subset truncation (the full critical set for generic input).
pub fn eckart_young(u: &Matrix, r: usize, enumerate_critical: bool) -> Result<EckartYoung> {
    eckart_young_with(u, r, enumerate_critical, FitOptions::default().tie_tol)
}

fn eckart_young_with(u: &Matrix, r: usize, enumerate_critical: bool, tie_tol: f64) -> Result<EckartYoung> {
    let q = u.rows().min(u.cols());
    if r > q {
        return Err(Error::Dimension(format!(
            "rank bound {r} exceeds min dimension {q}"
        )));
    }
    let t = svd_thin(u)?;
    let build = |idx: &[usize]| -> Matrix {
        let mut us = Matrix::zeros(u.rows(), idx.len());
        for (c, &k) in idx.iter().enumerate() {
            for i in 0..u.rows() {
                us[(i, c)] = t.u[(i, k)] * t.s[k];
            }
        }
        us.matmul(&t.vt.select_rows(idx))
    };
    let keep: Vec<usize> = (0..r).collect();
    let critical = if enumerate_critical {
        let count = crate::combinatorics::binomial(q, r);
        if count > BigUint::from(CRITICAL_ENUMERATION_CAP) {
            return Err(Error::SizeCap(format!(
                "{count} critical points exceed the enumeration cap {CRITICAL_ENUMERATION_CAP}"
            )));
        }
        Some(
            subsets(q, r)
                .into_iter()
                .map(|idx| {
                    let distance_sq = (0..q)
                        .filter(|i| !idx.contains(i))
                        .map(|i| t.s[i] * t.s[i])
                        .sum();
                    CriticalPoint {
                        matrix: build(&idx),
                        indices: idx,
                        distance_sq,
                    }
                })
                .collect(),
        )
    } else {
        None
    };
    Ok(EckartYoung {
        truncated: build(&keep),
        kept: t.s[..r].to_vec(),
        dropped: t.s[r..].to_vec(),
        boundary_tie: is_tie(&t.s, r, tie_tol),
        critical,
    })
}

/// `U = Y·Xᵀ·(XXᵀ)⁻¹` and `W = XXᵀ` (plus ridge), sharing one eigendecomposition.
#[derive(Debug, Clone)]
pub struct SelTarget {
    pub u: Matrix,
    pub weight: Matrix,
    pub eigen: PsdEigen,
}

fn weight_eigen(x: &Matrix, opts: &FitOptions) -> Result<(Matrix, PsdEigen)> {
    let n = x.rows();
    let mut w = x.matmul_t(x);
    if let Some(l) = opts.ridge {
        if !(l > 0.0) {
            return Err(Error::Numerical(format!("ridge must be positive, got {l}")));
        }
        for i in 0..n {
            w[(i, i)] += l;
        }
    }
    let eigen = PsdEigen::new(&w, 1e-9)?;
    let rank = eigen.rank(opts.rank_tol);
    if rank < n {
        return Err(Error::RankDeficient { rank, expected: n });
    }
    Ok((w, eigen))
}

/// Fails with `RankDeficient` unless `XXᵀ` (plus ridge) has full rank.
pub fn check_data_rank(x: &Matrix, opts: &FitOptions) -> Result<()> {
    weight_eigen(x, opts).map(|_| ())
}

fn inverse_from(e: &PsdEigen) -> Matrix {
    let v = &e.vectors;
    let mut scaled = v.clone();
    for i in 0..v.rows() {
        for j in 0..v.cols() {
            scaled[(i, j)] /= e.values[j];
        }
    }
    scaled.matmul_t(v)
}

pub fn sel_to_target(x: &Matrix, y: &Matrix, opts: &FitOptions) -> Result<SelTarget> {
    if x.cols() != y.cols() {
        return Err(Error::Dimension(format!(
            "X has {} samples, Y has {}",
            x.cols(),
            y.cols()
        )));
    }
    let (weight, eigen) = weight_eigen(x, opts)?;
    let u = y.matmul_t(x).matmul(&inverse_from(&eigen));
    Ok(SelTarget { u, weight, eigen })
}

/// Minimizes `‖M − U‖²_W` over rank ≤ r: Eckart–Young on `U·W^{1/2}`, then
/// multiply back by `W^{−1/2}` from the same eigendecomposition.
fn weighted_truncation(u: &Matrix, eigen: &PsdEigen, r: usize, tie_tol: f64) -> Result<(Matrix, EckartYoung)> {
    let ey = eckart_young_with(&u.matmul(&eigen.sqrt()), r, false, tie_tol)?;
    Ok((ey.truncated.matmul(&eigen.inv_sqrt(0.0)), ey))
}

/// Global minimizer of `‖MX − Y‖²_F` over matrices of rank ≤ `r`.
pub fn fit_rank_bounded(x: &Matrix, y: &Matrix, r: usize, opts: &FitOptions) -> Result<FitResult> {
    let target = sel_to_target(x, y, opts)?;
    let r_eff = r.min(y.rows()).min(x.rows());
    let (m, ey) = weighted_truncation(&target.u, &target.eigen, r_eff, opts.tie_tol)?;
    Ok(FitResult {
        loss: squared_error(&m, x, y),
        minimizer: m,
        component: ComponentLabel::Unconstrained { rank: r },
        per_block: vec![BlockDiagnostics {
            block: "dense".into(),
            kept: ey.kept,
            dropped: ey.dropped,
            boundary_tie: ey.boundary_tie,
        }],
        regularization: opts.ridge,
        non_unique: ey.boundary_tie,
        compact: None,
        selection: None,
        candidates: Vec::new(),
    })
}

/// `⊕ [[0,1],[−1,0]]` applied on the right: `(a, b) ↦ (−b, a)` per pair.
fn times_p(m: &Matrix) -> Matrix {
    let mut out = Matrix::zeros(m.rows(), m.cols());
    for i in 0..m.rows() {
        for j in 0..m.cols() / 2 {
            let (a, b) = (m[(i, 2 * j)], m[(i, 2 * j + 1)]);
            out[(i, 2 * j)] = -b;
            out[(i, 2 * j + 1)] = a;
        }
    }
    out
}

/// `· Pᵀ` on the right: `(a, b) ↦ (b, −a)` per pair.
fn times_pt(m: &Matrix) -> Matrix {
    let mut out = Matrix::zeros(m.rows(), m.cols());
    for i in 0..m.rows() {
        for j in 0..m.cols() / 2 {
            let (a, b) = (m[(i, 2 * j)], m[(i, 2 * j + 1)]);
            out[(i, 2 * j)] = b;
            out[(i, 2 * j + 1)] = -a;
        }
    }
    out
}

fn odd_rows(m: &Matrix) -> Matrix {
    m.select_rows(&(0..m.rows() / 2).map(|i| 2 * i).collect::<Vec<_>>())
}

fn even_rows(m: &Matrix) -> Matrix {
    m.select_rows(&(0..m.rows() / 2).map(|i| 2 * i + 1).collect::<Vec<_>>())
}

/// Interleaves odd rows `a` with even rows `a·P` into a realization matrix.
fn from_odd_rows(a: &Matrix) -> Matrix {
    let even = times_p(a);
    let mut out = Matrix::zeros(2 * a.rows(), a.cols());
    for i in 0..a.rows() {
        out.row_mut(2 * i).copy_from_slice(a.row(i));
        out.row_mut(2 * i + 1).copy_from_slice(even.row(i));
    }
    out
}

/// Row `(Re z, −Im z)` pairs → complex row.
fn odd_to_complex(a: &Matrix) -> ComplexMatrix {
    ComplexMatrix::from_fn(a.rows(), a.cols() / 2, |i, j| {
        Complex64::new(a[(i, 2 * j)], -a[(i, 2 * j + 1)])
    })
}

fn complex_to_odd(z: &ComplexMatrix) -> Matrix {
    let mut out = Matrix::zeros(z.rows(), 2 * z.cols());
    for i in 0..z.rows() {
        for j in 0..z.cols() {
            out[(i, 2 * j)] = z[(i, j)].re;
            out[(i, 2 * j + 1)] = -z[(i, j)].im;
        }
    }
    out
}

/// Prepared realization-block subproblem: everything needed to produce the
/// minimizer at any complex rank.
struct RealizationProblem {
    /// `ι⁻¹(Ũ_odd · S^{1/2})`.
    c_u: ComplexMatrix,
    c_s: Vec<f64>,
    c_vh: ComplexMatrix,
    s_inv_sqrt: Matrix,
    /// Structured unconstrained optimum `ℛ(Ũ_odd)` in realization form.
    projected: Matrix,
}

impl RealizationProblem {
    fn new(u_block: &Matrix, w: &Matrix) -> Result<Self> {
        let dim = u_block.rows();
        if !dim.is_multiple_of(2) || u_block.cols() != dim || w.shape() != (dim, dim) {
            return Err(Error::Dimension(format!(
                "realization block needs a 2d×2d target and weight, got {}x{} and {}x{}",
                u_block.rows(),
                u_block.cols(),
                w.rows(),
                w.cols()
            )));
        }
        // S = W + P·W·Pᵀ; Ũ_odd = (U_odd·W + U_even·W·Pᵀ)·S⁻¹.
        let pwpt = times_p(&times_p(w).transpose()).transpose();
        let s = w.add(&pwpt).symmetrize();
        let s_eig = PsdEigen::new(&s, 1e-9)?;
        let rhs = odd_rows(u_block)
            .matmul(w)
            .add(&times_pt(&even_rows(u_block).matmul(w)));
        let u_odd = rhs.matmul(&inverse_from(&s_eig));
        let c = odd_to_complex(&u_odd.matmul(&s_eig.sqrt()));
        let (c_u, c_s, c_vh) = complex_svd(&c)?;
        Ok(RealizationProblem {
            c_u,
            c_s,
            c_vh,
            s_inv_sqrt: s_eig.inv_sqrt(0.0),
            projected: from_odd_rows(&u_odd),
        })
    }

    fn solve(&self, r: usize) -> Matrix {
        let d = self.c_s.len();
        let r = r.min(d);
        let t = ComplexMatrix::from_fn(self.c_u.rows(), r, |i, j| self.c_u[(i, j)] * self.c_s[j])
            .matmul(&ComplexMatrix::from_fn(r, self.c_vh.cols(), |i, j| self.c_vh[(i, j)]));
        from_odd_rows(&complex_to_odd(&t).matmul(&self.s_inv_sqrt))
    }
}

/// Closest realization matrix `ℛ(Z)` with `rank_ℂ Z ≤ r` to `u_block` in the
/// `X̃X̃ᵀ`-weighted norm, where `x_block` holds the matching rows of `X̃`.
pub fn fit_realization_block(u_block: &Matrix, x_block: &Matrix, r: usize) -> Result<Matrix> {
    if x_block.rows() != u_block.cols() {
        return Err(Error::Dimension("x_block rows must match u_block columns".into()));
    }
    let w = x_block.matmul_t(x_block);
    fit_realization_block_weighted(u_block, &w, r)
}

/// As [`fit_realization_block`], with the weight `W = X̃X̃ᵀ` given directly.
pub fn fit_realization_block_weighted(u_block: &Matrix, w: &Matrix, r: usize) -> Result<Matrix> {
    if r > u_block.rows() / 2 {
        return Err(Error::Dimension(format!(
            "complex rank {r} exceeds block size {}",
            u_block.rows() / 2
        )));
    }
    Ok(RealizationProblem::new(u_block, w)?.solve(r))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Heuristic {
    /// Greedy allocation by next squared singular value per rank unit.
    Energy,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EquivariantOptions {
    pub fit: FitOptions,
    pub search_limit: u64,
    pub heuristic: Option<Heuristic>,
}

impl Default for EquivariantOptions {
    fn default() -> Self {
        EquivariantOptions {
            fit: FitOptions::default(),
            search_limit: 1_000_000,
            heuristic: None,
        }
    }
}

enum BlockSolver {
    Plain {
        a_u: Matrix,
        a_s: Vec<f64>,
        a_vt: Matrix,
        w_inv_sqrt: Matrix,
    },
    Realization(RealizationProblem),
}

/// One diagonal block of the equivariant problem in the `Q_σ` basis.
struct BlockProblem {
    label: String,
    offset: usize,
    /// Objective of the unconstrained structured optimum on this block.
    base: f64,
    /// Singular values whose squares are the cost of dropping each rank unit.
    sigma: Vec<f64>,
    solver: BlockSolver,
}

impl BlockProblem {
    fn objective(&self, r: usize) -> f64 {
        self.base + self.sigma[r.min(self.sigma.len())..].iter().map(|s| s * s).sum::<f64>()
    }

    fn solve(&self, r: usize) -> Matrix {
        match &self.solver {
            BlockSolver::Plain {
                a_u,
                a_s,
                a_vt,
                w_inv_sqrt,
            } => {
                let r = r.min(a_s.len());
                let us = Matrix::from_fn(a_u.rows(), r, |i, j| a_u[(i, j)] * a_s[j]);
                let idx: Vec<usize> = (0..r).collect();
                us.matmul(&a_vt.select_rows(&idx)).matmul(w_inv_sqrt)
            }
            BlockSolver::Realization(p) => p.solve(r),
        }
    }

    fn diagnostics(&self, r: usize, tie_tol: f64) -> BlockDiagnostics {
        let r = r.min(self.sigma.len());
        BlockDiagnostics {
            block: self.label.clone(),
            kept: self.sigma[..r].to_vec(),
            dropped: self.sigma[r..].to_vec(),
            boundary_tie: is_tie(&self.sigma, r, tie_tol),
        }
    }
}

/// Per-block subproblems of the equivariant fit after the `Q_σ` base change.
pub struct EquivariantProblem {
    q: RealBaseChange,
    blocks: Vec<BlockProblem>,
    ridge: Option<f64>,
}

impl EquivariantProblem {
    pub fn new(x: &Matrix, y: &Matrix, p: &Permutation, opts: &FitOptions) -> Result<Self> {
        let n = p.n();
        if x.rows() != n || y.rows() != n || x.cols() != y.cols() {
            return Err(Error::Dimension(format!(
                "X is {}x{}, Y is {}x{}, permutation acts on [{n}]",
                x.rows(),
                x.cols(),
                y.rows(),
                y.cols()
            )));
        }
        // rank(XXᵀ) = n, checked once on the full weight.
        weight_eigen(x, opts)?;
        let q = real_base_change(p);
        let xt = q.apply_qt(x);
        let yt = q.apply_qt(y);
        let build = |b: &crate::spectral::RealBlock| -> Result<BlockProblem> {
            let rows: Vec<usize> = (b.offset..b.offset + b.width).collect();
            let xb = xt.select_rows(&rows);
            let yb = yt.select_rows(&rows);
            let mut w = xb.matmul_t(&xb);
            if let Some(l) = opts.ridge {
                for i in 0..b.width {
                    w[(i, i)] += l;
                }
            }
            let eig = PsdEigen::new(&w, 1e-9)?;
            let u = yb.matmul_t(&xb).matmul(&inverse_from(&eig));
            let penalty = |m: &Matrix| opts.ridge.map_or(0.0, |l| l * m.frobenius_sq());
            let label = format!("({},{})", b.l, b.m);
            let problem = if b.kind == RealKind::ComplexPair {
                let rp = RealizationProblem::new(&u, &w)?;
                let base = squared_error(&rp.projected, &xb, &yb) + penalty(&rp.projected);
                BlockProblem {
                    label,
                    offset: b.offset,
                    base,
                    sigma: rp.c_s.clone(),
                    solver: BlockSolver::Realization(rp),
                }
            } else {
                let t = svd_thin(&u.matmul(&eig.sqrt()))?;
                let base = squared_error(&u, &xb, &yb) + penalty(&u);
                BlockProblem {
                    label,
                    offset: b.offset,
                    base,
                    sigma: t.s.clone(),
                    solver: BlockSolver::Plain {
                        a_u: t.u,
                        a_s: t.s,
                        a_vt: t.vt,
                        w_inv_sqrt: eig.inv_sqrt(0.0),
                    },
                }
            };
            Ok(problem)
        };
        let blocks = crate::par_map(&q.layout.real_blocks, build)
            .into_iter()
            .collect::<Result<Vec<_>>>()?;
        Ok(EquivariantProblem {
            q,
            blocks,
            ridge: opts.ridge,
        })
    }

    pub fn spectrum(&self) -> &BlockSpectrum {
        &self.q.layout
    }

    /// Objective (loss, plus ridge penalty if any) of the best point of a component.
    pub fn component_objective(&self, ranks: &[usize]) -> f64 {
        self.blocks.iter().zip(ranks).map(|(b, &r)| b.objective(r)).sum()
    }

    /// Per-block objective for each rank `0..=d`.
    pub fn loss_table(&self) -> Vec<Vec<f64>> {
        self.blocks
            .iter()
            .map(|b| (0..=b.sigma.len()).map(|r| b.objective(r)).collect())
            .collect()
    }

    /// Squared singular values per block: the energy each rank unit captures.
    pub fn block_energies(&self) -> Vec<Vec<f64>> {
        self.blocks
            .iter()
            .map(|b| b.sigma.iter().map(|s| s * s).collect())
            .collect()
    }

    /// Greedy allocation: repeatedly give a rank unit to the block whose next
    /// squared singular value per unit of total rank is largest.
    pub fn energy_heuristic(&self, r: usize) -> RankVector {
        let spec = self.spectrum();
        let mut ranks = vec![0usize; self.blocks.len()];
        let mut budget = r;
        loop {
            let mut best: Option<(usize, f64)> = None;
            for (i, (b, rb)) in self.blocks.iter().zip(&spec.real_blocks).enumerate() {
                let w = rb.rank_weight();
                if ranks[i] >= b.sigma.len() || w > budget {
                    continue;
                }
                let gain = b.sigma[ranks[i]].powi(2) / w as f64;
                if best.is_none_or(|(_, g)| gain > g) {
                    best = Some((i, gain));
                }
            }
            match best {
                Some((i, _)) => {
                    ranks[i] += 1;
                    budget -= spec.real_blocks[i].rank_weight();
                }
                None => break,
            }
        }
        RankVector::new(spec, Field::Real, &ranks).expect("bounded by construction")
    }

    /// Assembles the minimizer of one component in original coordinates.
    pub fn solve(&self, x: &Matrix, y: &Matrix, rv: &RankVector, tie_tol: f64) -> FitResult {
        let n = self.q.n();
        let mut mt = Matrix::zeros(n, n);
        let mut per_block = Vec::with_capacity(self.blocks.len());
        for (b, e) in self.blocks.iter().zip(&rv.entries) {
            mt.set_block(b.offset, b.offset, &b.solve(e.rank));
            per_block.push(b.diagnostics(e.rank, tie_tol));
        }
        let m = self.q.unconjugate(&mt);
        let non_unique = per_block.iter().any(|d| d.boundary_tie);
        FitResult {
            loss: squared_error(&m, x, y),
            minimizer: m,
            component: ComponentLabel::Equivariant {
                rank_vector: rv.clone(),
            },
            per_block,
            regularization: self.ridge,
            non_unique,
            compact: None,
            selection: None,
            candidates: Vec::new(),
        }
    }
}

const CANDIDATE_REPORT_CAP: usize = 1000;

/// Minimizes `‖MX − Y‖²_F` over σ-equivariant `M` of rank ≤ `r`: on the
/// named component, on the heuristic's component, or on the best of all
/// components (ties to the lexicographically smallest rank vector).
pub fn fit_equivariant(
    x: &Matrix,
    y: &Matrix,
    p: &Permutation,
    r: usize,
    component: Option<&RankVector>,
    opts: &EquivariantOptions,
) -> Result<FitResult> {
    let problem = EquivariantProblem::new(x, y, p, &opts.fit)?;
    let spec = problem.spectrum().clone();
    if r > p.n() {
        return Err(Error::Dimension(format!("rank {r} exceeds n = {}", p.n())));
    }
    let (rv, selection, candidates) = if let Some(rv) = component {
        let rv = RankVector::new(&spec, rv.field, &rv.ranks())?;
        if rv.field != Field::Real {
            return Err(Error::Inadmissible("component must be a real rank vector".into()));
        }
        if rv.total_rank > r {
            return Err(Error::Inadmissible(format!(
                "component {} has total rank {} > {r}",
                rv, rv.total_rank
            )));
        }
        (rv, "given", Vec::new())
    } else if let Some(Heuristic::Energy) = opts.heuristic {
        (problem.energy_heuristic(r), "heuristic_energy", Vec::new())
    } else {
        let mut it = crate::equivariant::enumerate_components(&spec, r, Field::Real, opts.search_limit)?;
        let mut best: Option<(Vec<usize>, f64)> = None;
        let mut candidates = Vec::new();
        while let Some(ranks) = ComponentIter::next_ranks(&mut it) {
            let obj = problem.component_objective(&ranks);
            if candidates.len() < CANDIDATE_REPORT_CAP {
                candidates.push(CandidateLoss {
                    ranks: ranks.clone(),
                    objective: obj,
                });
            }
            let better = match &best {
                None => true,
                Some((br, bo)) => obj < *bo || (obj == *bo && ranks < *br),
            };
            if better {
                best = Some((ranks, obj));
            }
        }
        let (ranks, _) = best.ok_or_else(|| {
            Error::Inadmissible(format!("no real component of total rank {r}"))
        })?;
        (RankVector::new(&spec, Field::Real, &ranks)?, "exhaustive", candidates)
    };
    let mut fit = problem.solve(x, y, &rv, opts.fit.tie_tol);
    fit.selection = Some(selection.into());
    fit.candidates = candidates;
    Ok(fit)
}

/// Realization of a complex matrix, re-exported for callers building targets.
pub fn realization(z: &ComplexMatrix) -> Matrix {
    realize(z)
}
