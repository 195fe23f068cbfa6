//! Random-walk approximation of a d′-dimensional Brownian motion.
//!
//! Each step moves every coordinate by `±√h` with probability ½ each. In the
//! recombining mode a node is identified by its integer offset vector; in tree
//! mode every path is kept apart so path-dependent data can be attached.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::frechet::DiscreteMeasure;
use crate::math;
use crate::vec2::{Point, Vec2};

/// Default bound on the total number of nodes.
pub const DEFAULT_NODE_LIMIT: usize = 1 << 24;
/// Largest dyadic exponent accepted in tree mode.
pub const MAX_TREE_EXPONENT: u32 = 12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NodeId {
    pub slice: usize,
    pub index: usize,
}

impl NodeId {
    pub const ROOT: NodeId = NodeId { slice: 0, index: 0 };

    pub fn new(slice: usize, index: usize) -> Self {
        NodeId { slice, index }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum LatticeMode {
    Recombining,
    Tree,
}

/// One outgoing edge of a node.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Branch {
    pub target: NodeId,
    pub prob: f64,
    /// Noise increment; only the first `d_prime` entries are used.
    pub dw: [f64; 2],
}

#[derive(Debug, Clone)]
pub struct Lattice {
    d_prime: usize,
    k: u32,
    n: usize,
    horizon: f64,
    h: f64,
    sqrt_h: f64,
    mode: LatticeMode,
    /// Binomial weights of the one-dimensional walk, per slice.
    marginals: Vec<Vec<f64>>,
}

/// Recombining lattice with `2^k` steps over `[0, horizon]`.
pub fn build_lattice(d_prime: usize, k: u32, horizon: f64) -> Result<Lattice> {
    Lattice::new(d_prime, k, horizon, LatticeMode::Recombining, DEFAULT_NODE_LIMIT)
}

impl Lattice {
    pub fn new(d_prime: usize, k: u32, horizon: f64, mode: LatticeMode, node_limit: usize) -> Result<Self> {
        if !(1..=2).contains(&d_prime) {
            return Err(Error::InvalidArgument(alloc::format!("noise dimension must be 1 or 2, got {d_prime}")));
        }
        if k == 0 || k > 30 {
            return Err(Error::InvalidArgument(alloc::format!("dyadic exponent must be in 1..=30, got {k}")));
        }
        if !(horizon > 0.0) || !horizon.is_finite() {
            return Err(Error::InvalidArgument(alloc::format!("horizon must be positive, got {horizon}")));
        }
        if mode == LatticeMode::Tree && k > MAX_TREE_EXPONENT {
            return Err(Error::Capacity { required: usize::MAX, limit: node_limit });
        }
        let n = 1usize << k;
        let required = Self::count_nodes(d_prime, n, mode);
        if required > node_limit {
            return Err(Error::Capacity { required, limit: node_limit });
        }
        let marginals = match mode {
            LatticeMode::Recombining => {
                let mut m = Vec::with_capacity(n + 1);
                m.push(vec![1.0]);
                for i in 0..n {
                    let prev: &Vec<f64> = &m[i];
                    let mut next = vec![0.0; i + 2];
                    for (j, w) in prev.iter().enumerate() {
                        next[j] += 0.5 * w;
                        next[j + 1] += 0.5 * w;
                    }
                    m.push(next);
                }
                m
            }
            LatticeMode::Tree => Vec::new(),
        };
        let h = horizon / n as f64;
        Ok(Lattice { d_prime, k, n, horizon, h, sqrt_h: math::sqrt(h), mode, marginals })
    }

    fn count_nodes(d_prime: usize, n: usize, mode: LatticeMode) -> usize {
        let mut total: usize = 0;
        for i in 0..=n {
            let s = match mode {
                LatticeMode::Recombining => (i + 1).saturating_pow(d_prime as u32),
                LatticeMode::Tree => 1usize.checked_shl((d_prime * i) as u32).unwrap_or(usize::MAX),
            };
            total = total.saturating_add(s);
        }
        total
    }

    pub fn d_prime(&self) -> usize {
        self.d_prime
    }

    pub fn exponent(&self) -> u32 {
        self.k
    }

    pub fn n_steps(&self) -> usize {
        self.n
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn sqrt_h(&self) -> f64 {
        self.sqrt_h
    }

    pub fn mode(&self) -> LatticeMode {
        self.mode
    }

    pub fn time(&self, slice: usize) -> f64 {
        if slice == self.n {
            self.horizon
        } else {
            self.h * slice as f64
        }
    }

    pub fn branch_count(&self) -> usize {
        1 << self.d_prime
    }

    pub fn slice_len(&self, slice: usize) -> usize {
        match self.mode {
            LatticeMode::Recombining => (slice + 1).pow(self.d_prime as u32),
            LatticeMode::Tree => 1 << (self.d_prime * slice),
        }
    }

    pub fn node_count(&self) -> usize {
        Self::count_nodes(self.d_prime, self.n, self.mode)
    }

    pub fn nodes(&self, slice: usize) -> impl Iterator<Item = NodeId> {
        (0..self.slice_len(slice)).map(move |index| NodeId { slice, index })
    }

    fn check(&self, node: NodeId) -> Result<()> {
        if node.slice > self.n || node.index >= self.slice_len(node.slice) {
            return Err(Error::LatticeMismatch(alloc::format!("no node {node:?}")));
        }
        Ok(())
    }

    /// Integer offset of the walk; unused coordinates are zero.
    pub fn offset(&self, node: NodeId) -> [i64; 2] {
        let i = node.slice as i64;
        let mut o = [0i64; 2];
        match self.mode {
            LatticeMode::Recombining => {
                if self.d_prime == 1 {
                    o[0] = 2 * node.index as i64 - i;
                } else {
                    let w = node.slice + 1;
                    o[0] = 2 * (node.index / w) as i64 - i;
                    o[1] = 2 * (node.index % w) as i64 - i;
                }
            }
            LatticeMode::Tree => {
                let mut ups = [0i64; 2];
                let mut rest = node.index;
                for _ in 0..node.slice {
                    let digit = rest & ((1 << self.d_prime) - 1);
                    for (c, u) in ups.iter_mut().enumerate().take(self.d_prime) {
                        *u += ((digit >> c) & 1) as i64;
                    }
                    rest >>= self.d_prime;
                }
                for c in 0..self.d_prime {
                    o[c] = 2 * ups[c] - i;
                }
            }
        }
        o
    }

    /// Value of the walk at the node, `offset × √h`.
    pub fn state(&self, node: NodeId) -> [f64; 2] {
        let o = self.offset(node);
        [o[0] as f64 * self.sqrt_h, o[1] as f64 * self.sqrt_h]
    }

    /// Probability of reaching the node from the root.
    pub fn weight(&self, node: NodeId) -> f64 {
        match self.mode {
            LatticeMode::Recombining => {
                let m = &self.marginals[node.slice];
                if self.d_prime == 1 {
                    m[node.index]
                } else {
                    let w = node.slice + 1;
                    m[node.index / w] * m[node.index % w]
                }
            }
            LatticeMode::Tree => {
                let mut p = 1.0;
                for _ in 0..node.slice * self.d_prime {
                    p *= 0.5;
                }
                p
            }
        }
    }

    /// Outgoing branches in a fixed order: branch `b` moves coordinate `c` up
    /// when bit `c` of `b` is set.
    pub fn branches(&self, node: NodeId) -> Result<Vec<Branch>> {
        self.check(node)?;
        if node.slice >= self.n {
            return Err(Error::SliceOrder { slice: node.slice, target: node.slice + 1 });
        }
        let nb = self.branch_count();
        let prob = 1.0 / nb as f64;
        let mut out = Vec::with_capacity(nb);
        for b in 0..nb {
            let mut dw = [0.0; 2];
            for (c, slot) in dw.iter_mut().enumerate().take(self.d_prime) {
                *slot = if (b >> c) & 1 == 1 { self.sqrt_h } else { -self.sqrt_h };
            }
            let index = match self.mode {
                LatticeMode::Recombining => {
                    if self.d_prime == 1 {
                        node.index + (b & 1)
                    } else {
                        let w = node.slice + 1;
                        let (ix, iy) = (node.index / w + (b & 1), node.index % w + ((b >> 1) & 1));
                        ix * (w + 1) + iy
                    }
                }
                LatticeMode::Tree => node.index | (b << (self.d_prime * node.slice)),
            };
            out.push(Branch { target: NodeId { slice: node.slice + 1, index }, prob, dw });
        }
        Ok(out)
    }

    /// Law of the nodes at `target` seen from `node`, accumulated slice by slice
    /// in branch order.
    pub fn multi_step_law(&self, node: NodeId, target: usize) -> Result<Vec<(NodeId, f64)>> {
        self.check(node)?;
        if target < node.slice || target > self.n {
            return Err(Error::SliceOrder { slice: node.slice, target });
        }
        let mut law = vec![(node, 1.0)];
        for _ in node.slice..target {
            let mut next: Vec<(NodeId, f64)> = Vec::new();
            for (id, p) in &law {
                for br in self.branches(*id)? {
                    match next.iter_mut().find(|(q, _)| *q == br.target) {
                        Some(slot) => slot.1 += p * br.prob,
                        None => next.push((br.target, p * br.prob)),
                    }
                }
            }
            law = next;
        }
        Ok(law)
    }
}

/// One value per lattice node.
#[derive(Debug, Clone, PartialEq)]
pub struct NodeField<V> {
    slices: Vec<Vec<V>>,
}

impl<V> NodeField<V> {
    pub fn from_fn<F: FnMut(NodeId) -> V>(l: &Lattice, mut f: F) -> Self {
        let slices = (0..=l.n_steps()).map(|i| l.nodes(i).map(&mut f).collect()).collect();
        NodeField { slices }
    }

    pub fn filled(l: &Lattice, v: V) -> Self
    where
        V: Clone,
    {
        NodeField { slices: (0..=l.n_steps()).map(|i| vec![v.clone(); l.slice_len(i)]).collect() }
    }

    pub fn get(&self, node: NodeId) -> &V {
        &self.slices[node.slice][node.index]
    }

    pub fn try_get(&self, node: NodeId) -> Option<&V> {
        self.slices.get(node.slice).and_then(|s| s.get(node.index))
    }

    pub fn set(&mut self, node: NodeId, v: V) {
        self.slices[node.slice][node.index] = v;
    }

    pub fn slice(&self, i: usize) -> &[V] {
        &self.slices[i]
    }

    pub fn slice_mut(&mut self, i: usize) -> &mut Vec<V> {
        &mut self.slices[i]
    }

    pub fn slice_count(&self) -> usize {
        self.slices.len()
    }

    pub fn iter(&self) -> impl Iterator<Item = (NodeId, &V)> {
        self.slices
            .iter()
            .enumerate()
            .flat_map(|(slice, vs)| vs.iter().enumerate().map(move |(index, v)| (NodeId { slice, index }, v)))
    }

    pub fn map<U, F: FnMut(NodeId, &V) -> U>(&self, mut f: F) -> NodeField<U> {
        let slices = self
            .slices
            .iter()
            .enumerate()
            .map(|(slice, vs)| vs.iter().enumerate().map(|(index, v)| f(NodeId { slice, index }, v)).collect())
            .collect();
        NodeField { slices }
    }

    /// Checks that the field has one value per node of `l`.
    pub fn matches(&self, l: &Lattice) -> bool {
        self.slices.len() == l.n_steps() + 1 && self.slices.iter().enumerate().all(|(i, s)| s.len() == l.slice_len(i))
    }
}

impl<V> core::ops::Index<NodeId> for NodeField<V> {
    type Output = V;
    fn index(&self, node: NodeId) -> &V {
        self.get(node)
    }
}

fn one_step(l: &Lattice, node: NodeId, target: usize) -> Result<Vec<Branch>> {
    if target != node.slice + 1 {
        return Err(Error::SliceOrder { slice: node.slice, target });
    }
    l.branches(node)
}

/// One-step conditional law of `field` from `node`, equal values merged.
pub fn conditional_measure(l: &Lattice, node: NodeId, field: &NodeField<Point>, target_slice: usize) -> Result<DiscreteMeasure> {
    let brs = one_step(l, node, target_slice)?;
    Ok(DiscreteMeasure::from_merged(brs.iter().map(|b| (field[b.target], b.prob)).collect()))
}

/// Branch-weighted average of `field` over the successors of `node`.
pub fn node_expectation(l: &Lattice, node: NodeId, field: &NodeField<Vec2>) -> Result<Vec2> {
    let brs = one_step(l, node, node.slice + 1)?;
    let mut acc = Vec2::ZERO;
    for b in &brs {
        acc += field[b.target] * b.prob;
    }
    Ok(acc)
}

/// Largest deviations of the per-node first and second noise moments from
/// `0` and `h·I`.
pub fn moment_defects(l: &Lattice, node: NodeId) -> Result<(f64, f64)> {
    let brs = l.branches(node)?;
    let d = l.d_prime();
    let mut m1 = [0.0f64; 2];
    let mut m2 = [[0.0f64; 2]; 2];
    for b in &brs {
        for i in 0..d {
            m1[i] += b.prob * b.dw[i];
            for j in 0..d {
                m2[i][j] += b.prob * b.dw[i] * b.dw[j];
            }
        }
    }
    let mut e1: f64 = 0.0;
    let mut e2: f64 = 0.0;
    for i in 0..d {
        e1 = e1.max(m1[i].abs());
        for j in 0..d {
            let target = if i == j { l.h() } else { 0.0 };
            e2 = e2.max((m2[i][j] - target).abs());
        }
    }
    Ok((e1, e2))
}
