//! Permutations of `[n]`, their cycle structure, and the partitions they induce.
//!
//! Labels are 1-based at every I/O boundary (parsing, display, serialized
//! output) and 0-based in storage.

use std::fmt;

use serde::ser::{Serialize, SerializeStruct, Serializer};

use crate::error::{Error, Result};
use crate::linalg::Matrix;

/// A bijection of `{0, …, n-1}`; `image[j]` is σ(j).
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Permutation {
    image: Vec<usize>,
}

impl Permutation {
    pub fn identity(n: usize) -> Self {
        Permutation {
            image: (0..n).collect(),
        }
    }

    /// Builds from a 0-based image, checking bijectivity.
    pub fn from_image(image: Vec<usize>) -> Result<Self> {
        let n = image.len();
        let mut seen = vec![false; n];
        for &v in &image {
            if v >= n {
                return Err(Error::parse((v + 1).to_string(), format!("label out of range 1..={n}")));
            }
            if seen[v] {
                return Err(Error::parse((v + 1).to_string(), "duplicate label"));
            }
            seen[v] = true;
        }
        Ok(Permutation { image })
    }

    /// Builds from a 1-based image such as `[3, 5, 4, 1, 2]`.
    pub fn from_one_based(image: &[usize]) -> Result<Self> {
        let n = image.len();
        let mut zero = Vec::with_capacity(n);
        for &v in image {
            if v == 0 || v > n {
                return Err(Error::parse(v.to_string(), format!("label out of range 1..={n}")));
            }
            zero.push(v - 1);
        }
        Self::from_image(zero)
    }

    /// Builds from 1-based disjoint cycles; omitted labels are fixed points.
    pub fn from_cycles(n: usize, cycles: &[Vec<usize>]) -> Result<Self> {
        let mut image: Vec<usize> = (0..n).collect();
        let mut seen = vec![false; n];
        for cycle in cycles {
            for &label in cycle {
                if label == 0 || label > n {
                    return Err(Error::parse(label.to_string(), format!("label out of range 1..={n}")));
                }
                if seen[label - 1] {
                    return Err(Error::parse(label.to_string(), "duplicate label"));
                }
                seen[label - 1] = true;
            }
            for (i, &label) in cycle.iter().enumerate() {
                image[label - 1] = cycle[(i + 1) % cycle.len()] - 1;
            }
        }
        Ok(Permutation { image })
    }

    /// `count` disjoint cycles of length `length` on consecutive labels,
    /// each mapping `j -> j+1` cyclically. For an image stored row-major this
    /// is the cyclic horizontal shift by one pixel.
    pub fn cycle_type(count: usize, length: usize) -> Self {
        let n = count * length;
        let image = (0..n)
            .map(|j| {
                let row = j / length;
                row * length + (j % length + 1) % length
            })
            .collect();
        Permutation { image }
    }

    /// Parses cycle notation `"(1 4 3 2)(5 8 7 6)"` or a one-line image
    /// `"3,5,4,1,2"`. Empty text is the identity on `[n]`.
    pub fn parse(text: &str, n: usize) -> Result<Self> {
        let trimmed = text.trim();
        if trimmed.is_empty() {
            return Ok(Self::identity(n));
        }
        if trimmed.contains('(') || trimmed.contains(')') {
            let cycles = parse_cycles(trimmed)?;
            Self::from_cycles(n, &cycles)
        } else {
            let mut labels = Vec::new();
            for tok in trimmed.split(|c: char| c == ',' || c.is_whitespace()) {
                if tok.is_empty() {
                    continue;
                }
                let v: usize = tok
                    .parse()
                    .map_err(|_| Error::parse(tok, "expected a positive integer label"))?;
                labels.push(v);
            }
            if labels.len() != n {
                return Err(Error::parse(
                    trimmed,
                    format!("one-line image has {} labels, expected {n}", labels.len()),
                ));
            }
            Self::from_one_based(&labels)
        }
    }

    pub fn n(&self) -> usize {
        self.image.len()
    }

    /// σ(j), 0-based.
    #[inline]
    pub fn apply(&self, j: usize) -> usize {
        self.image[j]
    }

    pub fn image(&self) -> &[usize] {
        &self.image
    }

    pub fn one_based(&self) -> Vec<usize> {
        self.image.iter().map(|v| v + 1).collect()
    }

    pub fn is_identity(&self) -> bool {
        self.image.iter().enumerate().all(|(i, &v)| i == v)
    }

    pub fn inverse(&self) -> Self {
        let mut inv = vec![0; self.n()];
        for (i, &v) in self.image.iter().enumerate() {
            inv[v] = i;
        }
        Permutation { image: inv }
    }

    /// `self ∘ other`: apply `other` first.
    pub fn compose(&self, other: &Permutation) -> Self {
        assert_eq!(self.n(), other.n());
        Permutation {
            image: other.image.iter().map(|&j| self.image[j]).collect(),
        }
    }

    pub fn pow(&self, t: usize) -> Self {
        let mut out = Self::identity(self.n());
        for _ in 0..t {
            out = self.compose(&out);
        }
        out
    }

    /// Order of σ, the lcm of its cycle lengths.
    pub fn order(&self) -> usize {
        self.cycles()
            .lengths()
            .into_iter()
            .fold(1, num_integer::lcm)
    }

    /// Cycles ordered by smallest label; each starts at its smallest label
    /// and follows σ. Fixed points are included.
    pub fn cycles(&self) -> CycleDecomposition {
        let n = self.n();
        let mut visited = vec![false; n];
        let mut cycles = Vec::new();
        for start in 0..n {
            if visited[start] {
                continue;
            }
            let mut cycle = vec![start];
            visited[start] = true;
            let mut j = self.image[start];
            while j != start {
                visited[j] = true;
                cycle.push(j);
                j = self.image[j];
            }
            cycles.push(cycle);
        }
        CycleDecomposition { n, cycles }
    }

    /// The 0/1 matrix whose j-th row is the transpose of `e_{σ(j)}`.
    pub fn matrix(&self) -> Matrix {
        let n = self.n();
        let mut m = Matrix::zeros(n, n);
        for (j, &v) in self.image.iter().enumerate() {
            m[(j, v)] = 1.0;
        }
        m
    }

    /// `P_σ · x` without forming the matrix: `(P x)_j = x_{σ(j)}`.
    pub fn apply_rows(&self, x: &Matrix) -> Matrix {
        assert_eq!(x.rows(), self.n());
        let mut out = Matrix::zeros(x.rows(), x.cols());
        for j in 0..self.n() {
            out.row_mut(j).copy_from_slice(x.row(self.image[j]));
        }
        out
    }

    /// `x · P_σ`: column `σ(j)` of the result is column `j` of `x`.
    pub fn apply_cols(&self, x: &Matrix) -> Matrix {
        assert_eq!(x.cols(), self.n());
        let mut out = Matrix::zeros(x.rows(), x.cols());
        for i in 0..x.rows() {
            for j in 0..self.n() {
                out[(i, self.image[j])] = x[(i, j)];
            }
        }
        out
    }
}

impl fmt::Display for Permutation {
    /// Cycle notation with fixed points omitted; the identity prints as `()`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let cd = self.cycles();
        let mut any = false;
        for c in cd.cycles.iter().filter(|c| c.len() > 1) {
            any = true;
            let labels: Vec<String> = c.iter().map(|v| (v + 1).to_string()).collect();
            write!(f, "({})", labels.join(" "))?;
        }
        if !any {
            write!(f, "()")?;
        }
        Ok(())
    }
}

fn parse_cycles(text: &str) -> Result<Vec<Vec<usize>>> {
    let mut cycles = Vec::new();
    let mut rest = text;
    loop {
        rest = rest.trim_start();
        if rest.is_empty() {
            break;
        }
        if !rest.starts_with('(') {
            let tok: String = rest.chars().take_while(|c| *c != '(').collect();
            return Err(Error::parse(tok.trim(), "expected `(`"));
        }
        let close = match rest.find(')') {
            Some(i) => i,
            None => return Err(Error::parse(rest, "unclosed `(`")),
        };
        let body = &rest[1..close];
        if body.contains('(') {
            return Err(Error::parse(&rest[..close + 1], "nested `(`"));
        }
        let mut cycle = Vec::new();
        for tok in body.split(|c: char| c == ',' || c.is_whitespace()) {
            if tok.is_empty() {
                continue;
            }
            let v: usize = tok
                .parse()
                .map_err(|_| Error::parse(tok, "expected a positive integer label"))?;
            cycle.push(v);
        }
        if !cycle.is_empty() {
            cycles.push(cycle);
        }
        rest = &rest[close + 1..];
        if rest.trim_start().starts_with(')') {
            return Err(Error::parse(")", "unbalanced `)`"));
        }
    }
    Ok(cycles)
}

/// Disjoint cycles of a permutation, stored 0-based.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CycleDecomposition {
    n: usize,
    cycles: Vec<Vec<usize>>,
}

impl CycleDecomposition {
    /// Builds directly from cycle lengths, with cycles on consecutive labels.
    pub fn from_lengths(lengths: &[usize]) -> Self {
        let mut start = 0;
        let mut cycles = Vec::with_capacity(lengths.len());
        for &l in lengths {
            cycles.push((start..start + l).collect());
            start += l;
        }
        CycleDecomposition { n: start, cycles }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Number of cycles, `k`.
    pub fn k(&self) -> usize {
        self.cycles.len()
    }

    pub fn cycles(&self) -> &[Vec<usize>] {
        &self.cycles
    }

    pub fn lengths(&self) -> Vec<usize> {
        self.cycles.iter().map(Vec::len).collect()
    }

    pub fn one_based(&self) -> Vec<Vec<usize>> {
        self.cycles
            .iter()
            .map(|c| c.iter().map(|v| v + 1).collect())
            .collect()
    }

    /// The partition of `[n]` into cycle supports.
    pub fn induced_partition(&self) -> Partition {
        Partition::from_blocks_unchecked(self.n, self.cycles.clone())
    }
}

/// A set partition of `{0, …, n-1}` in canonical order: blocks sorted by
/// smallest element, elements ascending within each block.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Partition {
    n: usize,
    blocks: Vec<Vec<usize>>,
}

impl Partition {
    pub fn singletons(n: usize) -> Self {
        Partition {
            n,
            blocks: (0..n).map(|i| vec![i]).collect(),
        }
    }

    /// Builds from 1-based blocks, validating coverage and disjointness.
    pub fn from_one_based(n: usize, blocks: &[Vec<usize>]) -> Result<Self> {
        let mut seen = vec![false; n];
        let mut zero = Vec::with_capacity(blocks.len());
        for b in blocks {
            if b.is_empty() {
                return Err(Error::parse("{}", "empty block"));
            }
            let mut blk = Vec::with_capacity(b.len());
            for &v in b {
                if v == 0 || v > n {
                    return Err(Error::parse(v.to_string(), format!("label out of range 1..={n}")));
                }
                if seen[v - 1] {
                    return Err(Error::parse(v.to_string(), "label in two blocks"));
                }
                seen[v - 1] = true;
                blk.push(v - 1);
            }
            zero.push(blk);
        }
        if let Some(missing) = seen.iter().position(|s| !s) {
            return Err(Error::parse((missing + 1).to_string(), "label not covered"));
        }
        Ok(Self::from_blocks_unchecked(n, zero))
    }

    fn from_blocks_unchecked(n: usize, mut blocks: Vec<Vec<usize>>) -> Self {
        for b in blocks.iter_mut() {
            b.sort_unstable();
        }
        blocks.sort_by_key(|b| b[0]);
        Partition { n, blocks }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Number of blocks, `k`.
    pub fn k(&self) -> usize {
        self.blocks.len()
    }

    pub fn blocks(&self) -> &[Vec<usize>] {
        &self.blocks
    }

    pub fn one_based(&self) -> Vec<Vec<usize>> {
        self.blocks
            .iter()
            .map(|b| b.iter().map(|v| v + 1).collect())
            .collect()
    }

    /// Block index of every element.
    pub fn block_of(&self) -> Vec<usize> {
        let mut out = vec![0; self.n];
        for (i, b) in self.blocks.iter().enumerate() {
            for &j in b {
                out[j] = i;
            }
        }
        out
    }

    /// True when every block of `self` lies inside a block of `coarser`.
    pub fn refines(&self, coarser: &Partition) -> bool {
        if self.n != coarser.n {
            return false;
        }
        let owner = coarser.block_of();
        self.blocks
            .iter()
            .all(|b| b.iter().all(|&j| owner[j] == owner[b[0]]))
    }

    /// The `k × n` 0/1 matrix with `e_i` in column `j` whenever `j ∈ A_i`.
    pub fn replication_matrix(&self) -> Matrix {
        let mut e = Matrix::zeros(self.k(), self.n);
        for (i, b) in self.blocks.iter().enumerate() {
            for &j in b {
                e[(i, j)] = 1.0;
            }
        }
        e
    }
}

impl Serialize for Partition {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let mut st = s.serialize_struct("Partition", 2)?;
        st.serialize_field("n", &self.n)?;
        st.serialize_field("blocks", &self.one_based())?;
        st.end()
    }
}

impl fmt::Display for Partition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self
            .blocks
            .iter()
            .map(|b| {
                let labels: Vec<String> = b.iter().map(|v| (v + 1).to_string()).collect();
                format!("{{{}}}", labels.join(","))
            })
            .collect();
        write!(f, "{{{}}}", parts.join(","))
    }
}

/// Disjoint-set forest with path halving and union by size.
#[derive(Debug, Clone)]
pub(crate) struct UnionFind {
    parent: Vec<usize>,
    size: Vec<usize>,
}

impl UnionFind {
    pub(crate) fn new(n: usize) -> Self {
        UnionFind {
            parent: (0..n).collect(),
            size: vec![1; n],
        }
    }

    pub(crate) fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    pub(crate) fn union(&mut self, a: usize, b: usize) {
        let (mut ra, mut rb) = (self.find(a), self.find(b));
        if ra == rb {
            return;
        }
        if self.size[ra] < self.size[rb] {
            std::mem::swap(&mut ra, &mut rb);
        }
        self.parent[rb] = ra;
        self.size[ra] += self.size[rb];
    }

    /// Groups elements by root, ordered by smallest member.
    pub(crate) fn groups(&mut self) -> Vec<Vec<usize>> {
        let n = self.parent.len();
        let mut index_of_root = vec![usize::MAX; n];
        let mut groups: Vec<Vec<usize>> = Vec::new();
        for x in 0..n {
            let r = self.find(x);
            if index_of_root[r] == usize::MAX {
                index_of_root[r] = groups.len();
                groups.push(Vec::new());
            }
            groups[index_of_root[r]].push(x);
        }
        groups
    }
}

/// The finest partition coarsening every input.
pub fn finest_common_coarsening(parts: &[Partition]) -> Result<Partition> {
    let first = parts
        .first()
        .ok_or_else(|| Error::Dimension("empty partition list".into()))?;
    let n = first.n;
    let mut uf = UnionFind::new(n);
    for p in parts {
        if p.n != n {
            return Err(Error::Dimension(format!(
                "partitions over [{}] and [{}]",
                n, p.n
            )));
        }
        for b in &p.blocks {
            for &j in &b[1..] {
                uf.union(b[0], j);
            }
        }
    }
    Ok(Partition::from_blocks_unchecked(n, uf.groups()))
}
