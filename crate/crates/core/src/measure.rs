//! Finite dyadic measure spaces, measurable sets and partitions.
//!
//! A `DyadicSpace` of resolution `K` has `2^K` cells, cell `i` standing for
//! `[i·2^-K, (i+1)·2^-K)`. Every σ-subalgebra of the cell algebra is generated
//! by a partition into blocks, so sub-σ-algebras are represented as
//! [`Partition`]s. Join is the common refinement and meet the finest common
//! coarsening.

use std::collections::HashMap;
use std::fmt;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{domain, Error, Result};

/// Largest supported grid resolution.
pub const MAX_K: u32 = 24;

#[derive(Debug, PartialEq)]
struct SpaceData {
    k: u32,
    weights: Vec<f64>,
    total: f64,
}

/// Shared handle to a finite measure space on the dyadic grid of `[0, 1)`.
///
/// Cloning is cheap. Two handles compare equal when they share storage or
/// carry identical resolution and weights.
#[derive(Clone)]
pub struct DyadicSpace(Arc<SpaceData>);

impl fmt::Debug for DyadicSpace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("DyadicSpace")
            .field("k", &self.0.k)
            .field("total", &self.0.total)
            .finish()
    }
}

impl PartialEq for DyadicSpace {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.0, &other.0) || self.0 == other.0
    }
}

impl DyadicSpace {
    /// Lebesgue measure on `2^k` cells: every weight is `2^-k`.
    pub fn uniform(k: u32) -> Result<Self> {
        check_k(k)?;
        let n = 1usize << k;
        Self::from_weights(k, vec![1.0 / n as f64; n])
    }

    /// Cell weights drawn uniformly from `[0.5, 1.5]·2^-k` with a seeded RNG.
    pub fn random(k: u32, seed: u64) -> Result<Self> {
        check_k(k)?;
        let n = 1usize << k;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let weights = (0..n).map(|_| rng.gen_range(0.5..1.5) / n as f64).collect();
        Self::from_weights(k, weights)
    }

    pub fn from_weights(k: u32, weights: Vec<f64>) -> Result<Self> {
        check_k(k)?;
        if weights.len() != 1usize << k {
            return domain(format!("expected {} weights, got {}", 1usize << k, weights.len()));
        }
        if weights.iter().any(|w| !(*w >= 0.0) || !w.is_finite()) {
            return domain("weights must be finite and nonnegative");
        }
        let total: f64 = weights.iter().sum();
        if !(total > 0.0) || !total.is_finite() {
            return domain("total mass must be positive and finite");
        }
        Ok(DyadicSpace(Arc::new(SpaceData { k, weights, total })))
    }

    pub fn k(&self) -> u32 {
        self.0.k
    }

    pub fn n_cells(&self) -> usize {
        self.0.weights.len()
    }

    pub fn weights(&self) -> &[f64] {
        &self.0.weights
    }

    /// `μ(Ω)`.
    pub fn total(&self) -> f64 {
        self.0.total
    }

    pub fn cell_width(&self) -> f64 {
        1.0 / self.n_cells() as f64
    }

    pub fn midpoint(&self, cell: usize) -> f64 {
        (cell as f64 + 0.5) * self.cell_width()
    }

    pub(crate) fn ensure_same(&self, other: &DyadicSpace) -> Result<()> {
        if self == other {
            Ok(())
        } else {
            Err(Error::SpaceMismatch)
        }
    }

    /// `μ(set)`; fails when the set lives on another space.
    pub fn mu(&self, set: &MeasurableSet) -> Result<f64> {
        self.ensure_same(&set.space)?;
        Ok(set.measure())
    }

    pub fn empty_set(&self) -> MeasurableSet {
        MeasurableSet {
            space: self.clone(),
            mask: vec![false; self.n_cells()],
        }
    }

    pub fn full_set(&self) -> MeasurableSet {
        MeasurableSet {
            space: self.clone(),
            mask: vec![true; self.n_cells()],
        }
    }

    pub fn set_from_mask(&self, mask: Vec<bool>) -> Result<MeasurableSet> {
        if mask.len() != self.n_cells() {
            return domain(format!("mask has {} cells, space has {}", mask.len(), self.n_cells()));
        }
        Ok(MeasurableSet {
            space: self.clone(),
            mask,
        })
    }

    pub fn set_from_cells(&self, cells: impl IntoIterator<Item = usize>) -> Result<MeasurableSet> {
        let mut mask = vec![false; self.n_cells()];
        for c in cells {
            match mask.get_mut(c) {
                Some(slot) => *slot = true,
                None => return domain(format!("cell {c} out of range")),
            }
        }
        Ok(MeasurableSet {
            space: self.clone(),
            mask,
        })
    }

    /// Grid snapping of `[a, b)`: the cells whose midpoint lies in the interval.
    pub fn interval(&self, a: f64, b: f64) -> Result<MeasurableSet> {
        if !(a.is_finite() && b.is_finite()) || a > b {
            return domain(format!("bad interval [{a}, {b})"));
        }
        let mask = (0..self.n_cells())
            .map(|i| {
                let m = self.midpoint(i);
                a <= m && m < b
            })
            .collect();
        Ok(MeasurableSet {
            space: self.clone(),
            mask,
        })
    }
}

fn check_k(k: u32) -> Result<()> {
    if k > MAX_K {
        return domain(format!("resolution {k} exceeds the maximum {MAX_K}"));
    }
    Ok(())
}

/// A union of grid cells.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasurableSet {
    space: DyadicSpace,
    mask: Vec<bool>,
}

impl MeasurableSet {
    pub fn space(&self) -> &DyadicSpace {
        &self.space
    }

    pub fn mask(&self) -> &[bool] {
        &self.mask
    }

    pub fn contains(&self, cell: usize) -> bool {
        self.mask[cell]
    }

    pub fn cells(&self) -> impl Iterator<Item = usize> + '_ {
        self.mask.iter().enumerate().filter(|(_, m)| **m).map(|(i, _)| i)
    }

    pub fn measure(&self) -> f64 {
        self.space
            .weights()
            .iter()
            .zip(&self.mask)
            .filter(|(_, m)| **m)
            .map(|(w, _)| w)
            .sum()
    }

    fn zip_with(&self, other: &MeasurableSet, op: impl Fn(bool, bool) -> bool) -> Result<MeasurableSet> {
        self.space.ensure_same(&other.space)?;
        let mask = self.mask.iter().zip(&other.mask).map(|(a, b)| op(*a, *b)).collect();
        Ok(MeasurableSet {
            space: self.space.clone(),
            mask,
        })
    }

    pub fn union(&self, other: &MeasurableSet) -> Result<MeasurableSet> {
        self.zip_with(other, |a, b| a || b)
    }

    pub fn intersection(&self, other: &MeasurableSet) -> Result<MeasurableSet> {
        self.zip_with(other, |a, b| a && b)
    }

    pub fn difference(&self, other: &MeasurableSet) -> Result<MeasurableSet> {
        self.zip_with(other, |a, b| a && !b)
    }

    pub fn symmetric_difference(&self, other: &MeasurableSet) -> Result<MeasurableSet> {
        self.zip_with(other, |a, b| a != b)
    }

    pub fn complement(&self) -> MeasurableSet {
        MeasurableSet {
            space: self.space.clone(),
            mask: self.mask.iter().map(|m| !m).collect(),
        }
    }

    /// `μ(A Δ B)`.
    pub fn symm_diff_measure(&self, other: &MeasurableSet) -> Result<f64> {
        self.space.ensure_same(&other.space)?;
        Ok(self
            .space
            .weights()
            .iter()
            .zip(self.mask.iter().zip(&other.mask))
            .filter(|(_, (a, b))| a != b)
            .map(|(w, _)| w)
            .sum())
    }
}

/// A partition of the grid into blocks; stands for the σ-subalgebra it generates.
///
/// Labels are kept canonical: blocks are numbered `0, 1, …` in order of their
/// first cell, so equality of partitions is equality of label vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct Partition {
    space: DyadicSpace,
    labels: Vec<u32>,
    n_blocks: usize,
}

impl Partition {
    /// Builds a partition from arbitrary per-cell block identifiers.
    pub fn from_labels(space: &DyadicSpace, labels: &[usize]) -> Result<Self> {
        if labels.len() != space.n_cells() {
            return domain(format!("{} labels for {} cells", labels.len(), space.n_cells()));
        }
        let mut seen: HashMap<usize, u32> = HashMap::new();
        let canonical = labels
            .iter()
            .map(|l| {
                let next = seen.len() as u32;
                *seen.entry(*l).or_insert(next)
            })
            .collect();
        Ok(Partition {
            space: space.clone(),
            labels: canonical,
            n_blocks: seen.len(),
        })
    }

    fn from_keys(space: &DyadicSpace, labels: impl Iterator<Item = u64>) -> Self {
        let mut seen: HashMap<u64, u32> = HashMap::new();
        let canonical = labels
            .map(|l| {
                let next = seen.len() as u32;
                *seen.entry(l).or_insert(next)
            })
            .collect();
        Partition {
            space: space.clone(),
            labels: canonical,
            n_blocks: seen.len(),
        }
    }

    /// The partition `{Ω}`.
    pub fn trivial(space: &DyadicSpace) -> Self {
        Partition {
            space: space.clone(),
            labels: vec![0; space.n_cells()],
            n_blocks: 1,
        }
    }

    /// One block per cell.
    pub fn finest(space: &DyadicSpace) -> Self {
        let n = space.n_cells();
        Partition {
            space: space.clone(),
            labels: (0..n as u32).collect(),
            n_blocks: n,
        }
    }

    /// `2^j` equal intervals `[(k−1)/2^j, k/2^j)`.
    pub fn dyadic(space: &DyadicSpace, j: u32) -> Result<Self> {
        if j > space.k() {
            return domain(format!("dyadic level {j} is finer than the grid (K = {})", space.k()));
        }
        let width = 1usize << (space.k() - j);
        let labels = (0..space.n_cells()).map(|i| (i / width) as u32).collect();
        Ok(Partition {
            space: space.clone(),
            labels,
            n_blocks: 1usize << j,
        })
    }

    /// The `2^j`-block dyadic partition rotated by half a block, so the first
    /// block is `[0, w/2) ∪ [1 − w/2, 1)` with `w = 2^-j`.
    pub fn shifted_dyadic(space: &DyadicSpace, j: u32) -> Result<Self> {
        if j + 1 > space.k() {
            return domain(format!("shifted dyadic level {j} needs K > {j}"));
        }
        let width = 1usize << (space.k() - j);
        let n = space.n_cells();
        let labels: Vec<usize> = (0..n).map(|i| ((i + width / 2) % n) / width).collect();
        Partition::from_labels(space, &labels)
    }

    /// The two-block partition `{A, Aᶜ}` (or `{Ω}` when `A` is trivial).
    pub fn from_set(set: &MeasurableSet) -> Self {
        Partition::from_keys(&set.space, set.mask.iter().map(|m| *m as u64))
    }

    /// The partition generated by a family of sets: cells are grouped by their
    /// membership signature across the family.
    pub fn generated_by<'a>(space: &DyadicSpace, sets: impl IntoIterator<Item = &'a MeasurableSet>) -> Result<Self> {
        let mut p = Partition::trivial(space);
        for s in sets {
            p = p.join(&Partition::from_set(s))?;
        }
        Ok(p)
    }

    pub fn space(&self) -> &DyadicSpace {
        &self.space
    }

    pub fn labels(&self) -> &[u32] {
        &self.labels
    }

    pub fn n_blocks(&self) -> usize {
        self.n_blocks
    }

    pub fn block_of(&self, cell: usize) -> usize {
        self.labels[cell] as usize
    }

    /// Cells of each block, blocks in canonical order.
    pub fn blocks(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.n_blocks];
        for (i, l) in self.labels.iter().enumerate() {
            out[*l as usize].push(i);
        }
        out
    }

    pub fn block_set(&self, block: usize) -> MeasurableSet {
        let mask = self.labels.iter().map(|l| *l as usize == block).collect();
        MeasurableSet {
            space: self.space.clone(),
            mask,
        }
    }

    pub fn block_sets(&self) -> Vec<MeasurableSet> {
        (0..self.n_blocks).map(|b| self.block_set(b)).collect()
    }

    /// `μ(B)` for every block.
    pub fn block_masses(&self) -> Vec<f64> {
        let mut m = vec![0.0; self.n_blocks];
        for (l, w) in self.labels.iter().zip(self.space.weights()) {
            m[*l as usize] += w;
        }
        m
    }

    /// Common refinement: blocks are the nonempty intersections `P_i ∩ Q_j`.
    pub fn join(&self, other: &Partition) -> Result<Partition> {
        self.space.ensure_same(&other.space)?;
        let q = other.n_blocks as u64;
        Ok(Partition::from_keys(
            &self.space,
            self.labels
                .iter()
                .zip(&other.labels)
                .map(|(a, b)| *a as u64 * q + *b as u64),
        ))
    }

    /// Finest common coarsening: connected components of the overlap graph
    /// between the blocks of the two partitions.
    pub fn meet(&self, other: &Partition) -> Result<Partition> {
        self.space.ensure_same(&other.space)?;
        let offset = self.n_blocks;
        let mut uf = UnionFind::new(offset + other.n_blocks);
        for (a, b) in self.labels.iter().zip(&other.labels) {
            uf.union(*a as usize, offset + *b as usize);
        }
        Ok(Partition::from_keys(
            &self.space,
            self.labels.iter().map(|a| uf.find(*a as usize) as u64),
        ))
    }

    /// True when every block of `self` lies inside a block of `coarser`,
    /// i.e. the algebra of `coarser` is contained in the algebra of `self`.
    pub fn refines(&self, coarser: &Partition) -> Result<bool> {
        self.space.ensure_same(&coarser.space)?;
        let mut image: Vec<Option<u32>> = vec![None; self.n_blocks];
        for (a, b) in self.labels.iter().zip(&coarser.labels) {
            match image[*a as usize] {
                None => image[*a as usize] = Some(*b),
                Some(prev) if prev != *b => return Ok(false),
                Some(_) => {}
            }
        }
        Ok(true)
    }

    /// True when `set` is a union of blocks.
    pub fn is_measurable(&self, set: &MeasurableSet) -> Result<bool> {
        self.space.ensure_same(&set.space)?;
        let mut seen: Vec<Option<bool>> = vec![None; self.n_blocks];
        for (l, m) in self.labels.iter().zip(&set.mask) {
            match seen[*l as usize] {
                None => seen[*l as usize] = Some(*m),
                Some(prev) if prev != *m => return Ok(false),
                Some(_) => {}
            }
        }
        Ok(true)
    }

    /// The union of blocks closest to `target` in symmetric-difference measure.
    ///
    /// A block is taken when more of its mass lies inside `target` than
    /// outside; ties leave it out.
    pub fn best_approx(&self, target: &MeasurableSet) -> Result<MeasurableSet> {
        self.space.ensure_same(&target.space)?;
        let mut inside = vec![0.0; self.n_blocks];
        let mut outside = vec![0.0; self.n_blocks];
        for ((l, w), m) in self.labels.iter().zip(self.space.weights()).zip(&target.mask) {
            if *m {
                inside[*l as usize] += w;
            } else {
                outside[*l as usize] += w;
            }
        }
        let take: Vec<bool> = inside.iter().zip(&outside).map(|(i, o)| i > o).collect();
        let mask = self.labels.iter().map(|l| take[*l as usize]).collect();
        Ok(MeasurableSet {
            space: self.space.clone(),
            mask,
        })
    }
}

struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        UnionFind {
            parent: (0..n).collect(),
        }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            self.parent[ra.max(rb)] = ra.min(rb);
        }
    }
}

/// First index of the verdict tail: the last quarter of a window of `len` terms.
pub fn tail_start(len: usize) -> usize {
    len - len.div_ceil(4).max(1).min(len)
}

/// Default outer index bound for the lattice limits of a window.
pub fn default_m_max(len: usize) -> usize {
    len / 2
}

fn check_window(seq: &[Partition], m_max: usize) -> Result<()> {
    if seq.is_empty() {
        return domain("empty partition sequence");
    }
    if m_max == 0 || m_max >= seq.len() {
        return domain(format!("m_max must lie in 1..{}, got {m_max}", seq.len()));
    }
    for p in &seq[1..] {
        seq[0].space.ensure_same(&p.space)?;
    }
    Ok(())
}

/// `⋂_m ⋁_{n≥m} 𝒜ₙ` over a finite window, outer meet taken for `m ≤ m_max`.
pub fn upper_limit(seq: &[Partition], m_max: usize) -> Result<Partition> {
    check_window(seq, m_max)?;
    let tails = suffix_fold(seq, |a, b| a.join(b))?;
    outer_fold(&tails, m_max, |a, b| a.meet(b), "upper")
}

/// `⋁_m ⋂_{n≥m} 𝒜ₙ` over a finite window, outer join taken for `m ≤ m_max`.
pub fn lower_limit(seq: &[Partition], m_max: usize) -> Result<Partition> {
    check_window(seq, m_max)?;
    let tails = suffix_fold(seq, |a, b| a.meet(b))?;
    outer_fold(&tails, m_max, |a, b| a.join(b), "lower")
}

fn suffix_fold(seq: &[Partition], op: impl Fn(&Partition, &Partition) -> Result<Partition>) -> Result<Vec<Partition>> {
    let mut tails = seq.to_vec();
    for m in (0..seq.len() - 1).rev() {
        tails[m] = op(&seq[m], &tails[m + 1])?;
    }
    Ok(tails)
}

fn outer_fold(
    tails: &[Partition],
    m_max: usize,
    op: impl Fn(&Partition, &Partition) -> Result<Partition>,
    which: &str,
) -> Result<Partition> {
    let mut prev = tails[0].clone();
    let mut cur = prev.clone();
    for tail in &tails[1..=m_max] {
        prev = cur;
        cur = op(&prev, tail)?;
    }
    if cur != prev {
        return Err(Error::WindowTooShort(format!(
            "{which} limit still moving at m = {m_max} (window {})",
            tails.len()
        )));
    }
    Ok(cur)
}

/// Outcome of [`amu_member`].
#[derive(Debug, Clone, PartialEq)]
pub struct AmuMembership {
    /// Tail maximum of the distance trace is below the tolerance.
    pub member: bool,
    /// Some tail distance is below the tolerance: the set is approximable
    /// along a subsequence.
    pub subsequence_member: bool,
    /// `μ(Aₙ* Δ D)` with `Aₙ*` the best approximation from `𝒜ₙ`.
    pub distances: Vec<f64>,
}

/// Numerical membership test for `A_μ`.
pub fn amu_member(seq: &[Partition], target: &MeasurableSet, tol: f64) -> Result<AmuMembership> {
    if seq.is_empty() {
        return domain("empty partition sequence");
    }
    let distances = seq
        .iter()
        .map(|p| p.best_approx(target)?.symm_diff_measure(target))
        .collect::<Result<Vec<_>>>()?;
    let tail = &distances[tail_start(distances.len())..];
    let max = tail.iter().copied().fold(0.0, f64::max);
    let min = tail.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(AmuMembership {
        member: max < tol,
        subsequence_member: min < tol,
        distances,
    })
}
