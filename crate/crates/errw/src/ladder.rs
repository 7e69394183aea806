//! The finite ladder G⁽ⁿ⁾, its edge weights, the cycle matrix and the
//! spanning-tree codes.
//!
//! Vertex `(i, level)` has index `2i + level - 1`, level 1 lower, level 2 upper.
//! Edge layout: `z₀` is 0, then for each level i ≥ 1 the lower horizontal
//! `x̲ᵢ = 3i-2`, the upper horizontal `x̄ᵢ = 3i-1` and the rung `zᵢ = 3i`.

use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Vertex {
    pub i: usize,
    pub level: u8,
}

impl Vertex {
    pub fn lower(i: usize) -> Self {
        Vertex { i, level: 1 }
    }
    pub fn upper(i: usize) -> Self {
        Vertex { i, level: 2 }
    }
    pub fn index(&self) -> usize {
        2 * self.i + self.level as usize - 1
    }
    pub fn from_index(v: usize) -> Self {
        Vertex { i: v / 2, level: (v % 2 + 1) as u8 }
    }
}

impl fmt::Display for Vertex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let bar = if self.level == 1 { "lo" } else { "hi" };
        write!(f, "{}{}", self.i, bar)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", content = "level", rename_all = "lowercase")]
pub enum EdgeKind {
    Lower(usize),
    Upper(usize),
    Rung(usize),
}

impl EdgeKind {
    pub fn index(&self) -> usize {
        match *self {
            EdgeKind::Rung(i) => 3 * i,
            EdgeKind::Lower(i) => 3 * i - 2,
            EdgeKind::Upper(i) => 3 * i - 1,
        }
    }

    pub fn from_index(e: usize) -> Self {
        match e % 3 {
            0 => EdgeKind::Rung(e / 3),
            1 => EdgeKind::Lower(e / 3 + 1),
            _ => EdgeKind::Upper(e / 3 + 1),
        }
    }

    pub fn endpoints(&self) -> (Vertex, Vertex) {
        match *self {
            EdgeKind::Lower(i) => (Vertex::lower(i - 1), Vertex::lower(i)),
            EdgeKind::Upper(i) => (Vertex::upper(i - 1), Vertex::upper(i)),
            EdgeKind::Rung(i) => (Vertex::lower(i), Vertex::upper(i)),
        }
    }

    pub fn level(&self) -> usize {
        match *self {
            EdgeKind::Lower(i) | EdgeKind::Upper(i) | EdgeKind::Rung(i) => i,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct EdgeRecord {
    pub index: usize,
    #[serde(flatten)]
    pub kind: EdgeKind,
    pub endpoints: (usize, usize),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LadderGraph {
    n: usize,
    adj: Vec<Vec<(usize, usize)>>,
}

pub fn build(n: usize) -> Result<LadderGraph> {
    if n == 0 {
        return Err(Error::Domain("ladder needs n >= 1".into()));
    }
    let mut adj = vec![Vec::new(); 2 * (n + 1)];
    for e in 0..3 * n + 1 {
        let (u, v) = EdgeKind::from_index(e).endpoints();
        adj[u.index()].push((v.index(), e));
        adj[v.index()].push((u.index(), e));
    }
    Ok(LadderGraph { n, adj })
}

impl LadderGraph {
    pub fn n(&self) -> usize {
        self.n
    }
    pub fn vertex_count(&self) -> usize {
        2 * (self.n + 1)
    }
    pub fn edge_count(&self) -> usize {
        3 * self.n + 1
    }
    pub fn degree(&self, v: usize) -> usize {
        self.adj[v].len()
    }
    /// Neighbours of `v` as `(vertex, edge)` pairs, in edge order.
    pub fn neighbors(&self, v: usize) -> &[(usize, usize)] {
        &self.adj[v]
    }
    pub fn edges(&self) -> impl Iterator<Item = EdgeKind> {
        (0..self.edge_count()).map(EdgeKind::from_index)
    }
    pub fn edge_between(&self, u: usize, v: usize) -> Option<usize> {
        self.adj[u].iter().find(|&&(w, _)| w == v).map(|&(_, e)| e)
    }
    pub fn edge_records(&self) -> Vec<EdgeRecord> {
        self.edges()
            .map(|k| {
                let (u, v) = k.endpoints();
                EdgeRecord { index: k.index(), kind: k, endpoints: (u.index(), v.index()) }
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Normalization {
    Simplex,
    RungZeroUnit,
    None,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EdgeWeights<F> {
    values: Vec<F>,
    normalization: Normalization,
}

impl<F: Scalar> EdgeWeights<F> {
    pub fn new(values: Vec<F>, normalization: Normalization) -> Result<Self> {
        if values.len() < 4 || (values.len() - 1) % 3 != 0 {
            return Err(Error::Domain(format!("{} weights is not 3n+1", values.len())));
        }
        for (edge, &v) in values.iter().enumerate() {
            if !(v > F::zero()) || !v.is_finite() {
                return Err(Error::NonPositiveWeight { edge, value: v.f64() });
            }
        }
        match normalization {
            Normalization::Simplex => {
                let s: F = values.iter().fold(F::zero(), |a, &b| a + b);
                if (s.f64() - 1.0).abs() > 1e-12_f64.max(F::epsilon().f64() * 8.0 * values.len() as f64) {
                    return Err(Error::Domain(format!("simplex weights sum to {}", s.f64())));
                }
            }
            Normalization::RungZeroUnit => {
                if values[0] != F::one() {
                    return Err(Error::Domain("z0 must equal 1".into()));
                }
            }
            Normalization::None => {}
        }
        Ok(EdgeWeights { values, normalization })
    }

    pub fn uniform(n: usize, v: F) -> Result<Self> {
        let tag = if v == F::one() { Normalization::RungZeroUnit } else { Normalization::None };
        Self::new(vec![v; 3 * n + 1], tag)
    }

    pub fn n(&self) -> usize {
        (self.values.len() - 1) / 3
    }
    pub fn values(&self) -> &[F] {
        &self.values
    }
    pub fn normalization(&self) -> Normalization {
        self.normalization
    }
    pub fn get(&self, e: EdgeKind) -> F {
        self.values[e.index()]
    }
    pub fn lower(&self, i: usize) -> F {
        self.values[3 * i - 2]
    }
    pub fn upper(&self, i: usize) -> F {
        self.values[3 * i - 1]
    }
    pub fn rung(&self, i: usize) -> F {
        self.values[3 * i]
    }
    pub fn sum(&self) -> F {
        self.values.iter().fold(F::zero(), |a, &b| a + b)
    }

    /// x_v: sum of the weights of the edges at `v`.
    pub fn vertex_weight(&self, v: Vertex) -> F {
        let n = self.n();
        let mut s = self.rung(v.i);
        let horiz = |j: usize| if v.level == 1 { self.lower(j) } else { self.upper(j) };
        if v.i >= 1 {
            s = s + horiz(v.i);
        }
        if v.i < n {
            s = s + horiz(v.i + 1);
        }
        s
    }

    pub fn scaled(&self, c: F) -> Result<Self> {
        Self::new(self.values.iter().map(|&v| v * c).collect(), Normalization::None)
    }

    pub fn retag(self, normalization: Normalization) -> Result<Self> {
        Self::new(self.values, normalization)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum TreeState {
    A,
    B,
    C,
    D,
}

impl TreeState {
    pub const ALL: [TreeState; 4] = [TreeState::A, TreeState::B, TreeState::C, TreeState::D];

    pub fn index(self) -> usize {
        self as usize
    }
    pub fn from_index(k: usize) -> Self {
        Self::ALL[k]
    }
    /// A ↔ B, C and D fixed.
    pub fn reflect(self) -> Self {
        match self {
            TreeState::A => TreeState::B,
            TreeState::B => TreeState::A,
            s => s,
        }
    }
    pub fn letter(self) -> char {
        ['A', 'B', 'C', 'D'][self as usize]
    }
}

/// The only forbidden neighbouring pair.
pub fn forbidden(t: TreeState, t_next: TreeState) -> bool {
    t == TreeState::A && t_next == TreeState::B
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct SpanningTreeCode {
    states: Vec<TreeState>,
}

impl SpanningTreeCode {
    pub fn new(states: Vec<TreeState>) -> Result<Self> {
        if states.is_empty() {
            return Err(Error::InvalidCode("empty code".into()));
        }
        if let Some(i) = states.windows(2).position(|w| forbidden(w[0], w[1])) {
            return Err(Error::InvalidCode(format!("(A,B) at positions {} and {}", i + 1, i + 2)));
        }
        Ok(SpanningTreeCode { states })
    }
    pub fn states(&self) -> &[TreeState] {
        &self.states
    }
    pub fn len(&self) -> usize {
        self.states.len()
    }
    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }
    /// State of cycle i, 1-based.
    pub fn get(&self, i: usize) -> TreeState {
        self.states[i - 1]
    }
}

impl fmt::Display for SpanningTreeCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.states.iter().try_for_each(|s| write!(f, "{}", s.letter()))
    }
}

impl FromStr for SpanningTreeCode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let states = s
            .chars()
            .map(|c| match c {
                'A' => Ok(TreeState::A),
                'B' => Ok(TreeState::B),
                'C' => Ok(TreeState::C),
                'D' => Ok(TreeState::D),
                _ => Err(Error::InvalidCode(format!("bad letter {c:?}"))),
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(states)
    }
}

impl TryFrom<String> for SpanningTreeCode {
    type Error = Error;
    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<SpanningTreeCode> for String {
    fn from(c: SpanningTreeCode) -> String {
        c.to_string()
    }
}

/// Edge subset as a bit set over edge indices.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct EdgeSet {
    bits: Vec<u64>,
    len: usize,
}

impl EdgeSet {
    pub fn empty(edge_count: usize) -> Self {
        EdgeSet { bits: vec![0; edge_count.div_ceil(64)], len: edge_count }
    }
    pub fn from_edges(edge_count: usize, edges: impl IntoIterator<Item = usize>) -> Self {
        let mut s = Self::empty(edge_count);
        for e in edges {
            s.insert(e);
        }
        s
    }
    pub fn insert(&mut self, e: usize) {
        assert!(e < self.len);
        self.bits[e / 64] |= 1 << (e % 64);
    }
    pub fn contains(&self, e: usize) -> bool {
        e < self.len && self.bits[e / 64] >> (e % 64) & 1 == 1
    }
    pub fn count(&self) -> usize {
        self.bits.iter().map(|b| b.count_ones() as usize).sum()
    }
    pub fn capacity(&self) -> usize {
        self.len
    }
    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.len).filter(|&e| self.contains(e))
    }
}

fn rung_in_tree(code: &SpanningTreeCode, i: usize) -> bool {
    let n = code.len();
    use TreeState::*;
    if i == 0 {
        code.get(1) != B
    } else if i == n {
        code.get(n) != A
    } else {
        code.get(i) != A && code.get(i + 1) != B
    }
}

pub fn tree_decode(code: &SpanningTreeCode, n: usize) -> Result<EdgeSet> {
    if code.len() != n {
        return Err(Error::InvalidCode(format!("code has length {}, ladder has {n} cycles", code.len())));
    }
    let mut t = EdgeSet::empty(3 * n + 1);
    for i in 0..=n {
        if rung_in_tree(code, i) {
            t.insert(EdgeKind::Rung(i).index());
        }
    }
    for i in 1..=n {
        match code.get(i) {
            TreeState::C => t.insert(EdgeKind::Upper(i).index()),
            TreeState::D => t.insert(EdgeKind::Lower(i).index()),
            _ => {
                t.insert(EdgeKind::Lower(i).index());
                t.insert(EdgeKind::Upper(i).index());
            }
        }
    }
    Ok(t)
}

struct Dsu(Vec<usize>);

impl Dsu {
    fn new(k: usize) -> Self {
        Dsu((0..k).collect())
    }
    fn find(&mut self, x: usize) -> usize {
        let mut r = x;
        while self.0[r] != r {
            r = self.0[r];
        }
        let mut y = x;
        while self.0[y] != r {
            let next = self.0[y];
            self.0[y] = r;
            y = next;
        }
        r
    }
    fn union(&mut self, a: usize, b: usize) -> bool {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        self.0[ra] = rb;
        true
    }
}

pub fn is_spanning_tree(tree: &EdgeSet, n: usize) -> bool {
    check_tree(tree, n).is_ok()
}

fn check_tree(tree: &EdgeSet, n: usize) -> Result<()> {
    if tree.capacity() != 3 * n + 1 {
        return Err(Error::NotATree("edge set sized for another ladder".into()));
    }
    if tree.count() != 2 * n + 1 {
        return Err(Error::NotATree(format!("{} edges, need {}", tree.count(), 2 * n + 1)));
    }
    let mut d = Dsu::new(2 * (n + 1));
    for e in tree.iter() {
        let (u, v) = EdgeKind::from_index(e).endpoints();
        if !d.union(u.index(), v.index()) {
            return Err(Error::NotATree(format!("edge {e} closes a cycle")));
        }
    }
    Ok(())
}

pub fn tree_encode(tree: &EdgeSet, n: usize) -> Result<SpanningTreeCode> {
    check_tree(tree, n)?;
    let mut states = Vec::with_capacity(n);
    // components of the tree restricted to columns 0..i-1
    let mut d = Dsu::new(2 * (n + 1));
    if tree.contains(0) {
        d.union(Vertex::lower(0).index(), Vertex::upper(0).index());
    }
    for i in 1..=n {
        let lo = tree.contains(EdgeKind::Lower(i).index());
        let hi = tree.contains(EdgeKind::Upper(i).index());
        let s = if !lo {
            TreeState::C
        } else if !hi {
            TreeState::D
        } else if d.find(Vertex::lower(i - 1).index()) == d.find(Vertex::upper(i - 1).index()) {
            TreeState::A
        } else {
            TreeState::B
        };
        states.push(s);
        for e in [EdgeKind::Lower(i), EdgeKind::Upper(i), EdgeKind::Rung(i)] {
            if tree.contains(e.index()) {
                let (u, v) = e.endpoints();
                d.union(u.index(), v.index());
            }
        }
    }
    SpanningTreeCode::new(states)
}

/// Number of valid codes of length n, by transfer over the last state.
pub fn count_codes(n: usize) -> u128 {
    if n == 0 {
        return 1;
    }
    let mut c = [1u128; 4];
    for _ in 1..n {
        let total: u128 = c.iter().sum();
        // B cannot follow A
        c = [total, total - c[0], total, total];
    }
    c.iter().sum()
}

pub fn all_codes(n: usize) -> Vec<SpanningTreeCode> {
    let mut out: Vec<Vec<TreeState>> = vec![vec![]];
    for _ in 0..n {
        let mut next = Vec::with_capacity(out.len() * 4);
        for p in &out {
            for s in TreeState::ALL {
                if p.last().is_some_and(|&l| forbidden(l, s)) {
                    continue;
                }
                let mut q = p.clone();
                q.push(s);
                next.push(q);
            }
        }
        out = next;
    }
    out.into_iter().map(|s| SpanningTreeCode { states: s }).collect()
}

/// All spanning trees of build(n), by brute force over (2n+1)-subsets.
pub fn all_spanning_trees(n: usize) -> Vec<EdgeSet> {
    let m = 3 * n + 1;
    let k = 2 * n + 1;
    let mut out = Vec::new();
    let mut idx: Vec<usize> = (0..k).collect();
    loop {
        let s = EdgeSet::from_edges(m, idx.iter().copied());
        if is_spanning_tree(&s, n) {
            out.push(s);
        }
        let mut p = k;
        while p > 0 && idx[p - 1] == m - k + p - 1 {
            p -= 1;
        }
        if p == 0 {
            break;
        }
        idx[p - 1] += 1;
        for q in p..k {
            idx[q] = idx[q - 1] + 1;
        }
    }
    out
}

/// Spanning-tree count of build(n) by an exact integer determinant of a
/// reduced Laplacian (fraction-free Bareiss elimination).
pub fn matrix_tree_count(n: usize) -> Result<i128> {
    let g = build(n)?;
    let v = g.vertex_count();
    let mut lap = vec![vec![0i128; v]; v];
    for e in g.edges() {
        let (a, b) = e.endpoints();
        let (a, b) = (a.index(), b.index());
        lap[a][a] += 1;
        lap[b][b] += 1;
        lap[a][b] -= 1;
        lap[b][a] -= 1;
    }
    let mut m: Vec<Vec<i128>> = lap[1..].iter().map(|r| r[1..].to_vec()).collect();
    Ok(bareiss_det(&mut m))
}

pub fn bareiss_det(m: &mut [Vec<i128>]) -> i128 {
    let k = m.len();
    let mut sign = 1i128;
    let mut prev = 1i128;
    for p in 0..k {
        if m[p][p] == 0 {
            match (p + 1..k).find(|&r| m[r][p] != 0) {
                Some(r) => {
                    m.swap(p, r);
                    sign = -sign;
                }
                None => return 0,
            }
        }
        for i in p + 1..k {
            for j in p + 1..k {
                m[i][j] = (m[i][j] * m[p][p] - m[i][p] * m[p][j]) / prev;
            }
        }
        prev = m[p][p];
    }
    sign * m[k - 1][k - 1]
}

/// The cycle matrix A⁽ⁿ⁾(x) as a dense array.
pub fn cycle_matrix<F: Scalar>(x: &EdgeWeights<F>) -> Vec<Vec<F>> {
    let n = x.n();
    let mut a = vec![vec![F::zero(); n]; n];
    for i in 1..=n {
        a[i - 1][i - 1] = x.rung(i - 1).recip() + x.lower(i).recip() + x.upper(i).recip() + x.rung(i).recip();
        if i < n {
            a[i - 1][i] = -x.rung(i).recip();
            a[i][i - 1] = -x.rung(i).recip();
        }
    }
    a
}

/// y A⁽ⁿ⁾(x) yᵗ from the matrix.
pub fn cycle_form<F: Scalar>(x: &EdgeWeights<F>, y: &[F]) -> Result<F> {
    let n = x.n();
    if y.len() != n {
        return Err(Error::Domain(format!("y has length {}, expected {n}", y.len())));
    }
    let a = cycle_matrix(x);
    let mut s = F::zero();
    for i in 0..n {
        for j in i.saturating_sub(1)..(i + 2).min(n) {
            s = s + y[i] * a[i][j] * y[j];
        }
    }
    Ok(s)
}

/// y A⁽ⁿ⁾(x) yᵗ as a sum of squares: y₁²/z₀ + yₙ²/zₙ + Σ yᵢ²(1/x̲ᵢ + 1/x̄ᵢ) + Σ (yᵢ−yᵢ₊₁)²/zᵢ.
pub fn cycle_form_sum<F: Scalar>(x: &EdgeWeights<F>, y: &[F]) -> F {
    let n = x.n();
    let mut s = y[0] * y[0] / x.rung(0) + y[n - 1] * y[n - 1] / x.rung(n);
    for i in 1..=n {
        s = s + y[i - 1] * y[i - 1] * (x.lower(i).recip() + x.upper(i).recip());
    }
    for i in 1..n {
        let d = y[i - 1] - y[i];
        s = s + d * d / x.rung(i);
    }
    s
}

/// Pivots of the LDLᵀ factorization of a symmetric tridiagonal matrix.
pub fn tridiagonal_pivots<F: Scalar>(a: &[Vec<F>]) -> Vec<F> {
    let n = a.len();
    let mut d = Vec::with_capacity(n);
    for i in 0..n {
        let p = if i == 0 { a[0][0] } else { a[i][i] - a[i][i - 1] * a[i][i - 1] / d[i - 1] };
        d.push(p);
    }
    d
}

/// Codes as a set of strings, handy for equality checks in tests.
pub fn code_strings(codes: &[SpanningTreeCode]) -> HashSet<String> {
    codes.iter().map(|c| c.to_string()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn code(s: &str) -> SpanningTreeCode {
        s.parse().unwrap()
    }

    fn edges(n: usize, kinds: &[EdgeKind]) -> EdgeSet {
        EdgeSet::from_edges(3 * n + 1, kinds.iter().map(|k| k.index()))
    }

    #[test]
    fn build_counts() {
        let g = build(1).unwrap();
        assert_eq!((g.vertex_count(), g.edge_count()), (4, 4));
        let order: Vec<_> = g.edges().collect();
        assert_eq!(order, vec![EdgeKind::Rung(0), EdgeKind::Lower(1), EdgeKind::Upper(1), EdgeKind::Rung(1)]);
        let g = build(2).unwrap();
        assert_eq!((g.vertex_count(), g.edge_count()), (6, 7));
        assert!(build(0).is_err());
        let g = build(5).unwrap();
        for v in 0..g.vertex_count() {
            let corner = matches!(Vertex::from_index(v).i, 0 | 5);
            assert_eq!(g.degree(v), if corner { 2 } else { 3 });
        }
    }

    #[test]
    fn decode_examples() {
        use EdgeKind::*;
        assert_eq!(tree_decode(&code("A"), 1).unwrap(), edges(1, &[Rung(0), Lower(1), Upper(1)]));
        assert_eq!(tree_decode(&code("C"), 1).unwrap(), edges(1, &[Rung(0), Upper(1), Rung(1)]));
        assert_eq!(tree_decode(&code("B"), 1).unwrap(), edges(1, &[Lower(1), Upper(1), Rung(1)]));
        assert!("AB".parse::<SpanningTreeCode>().is_err());
    }

    #[test]
    fn encode_examples() {
        use EdgeKind::*;
        assert_eq!(tree_encode(&edges(1, &[Rung(0), Upper(1), Rung(1)]), 1).unwrap(), code("C"));
        assert_eq!(tree_encode(&edges(1, &[Rung(0), Lower(1), Rung(1)]), 1).unwrap(), code("D"));
        assert!(tree_encode(&edges(1, &[Rung(0), Lower(1)]), 1).is_err());
        assert!(tree_encode(&edges(1, &[Rung(0), Lower(1), Upper(1), Rung(1)]), 1).is_err());
        // right cardinality, but with a cycle and an isolated vertex
        assert!(tree_encode(&edges(2, &[Rung(0), Lower(1), Upper(1), Rung(1), Rung(2)]), 2).is_err());
    }

    #[test]
    fn all_trees_of_two_cycles() {
        let trees = all_spanning_trees(2);
        assert_eq!(trees.len(), 15);
        let codes: HashSet<String> = trees.iter().map(|t| tree_encode(t, 2).unwrap().to_string()).collect();
        assert_eq!(codes.len(), 15);
        for t in &trees {
            assert_eq!(&tree_decode(&tree_encode(t, 2).unwrap(), 2).unwrap(), t);
        }
    }

    #[test]
    fn counts() {
        let want = [1u128, 4, 15, 56, 209, 780, 2911, 10864, 40545];
        for (n, &w) in want.iter().enumerate() {
            assert_eq!(count_codes(n), w);
            if n >= 2 {
                assert_eq!(count_codes(n), 4 * count_codes(n - 1) - count_codes(n - 2));
            }
            if n >= 1 {
                assert_eq!(matrix_tree_count(n).unwrap(), w as i128);
                assert_eq!(all_codes(n).len() as u128, w);
            }
        }
    }

    #[test]
    fn cycle_form_examples() {
        let x = EdgeWeights::uniform(1, 1.0).unwrap();
        assert_eq!(cycle_form(&x, &[1.0]).unwrap(), 4.0);
        let x = EdgeWeights::uniform(2, 1.0).unwrap();
        assert_eq!(cycle_form(&x, &[1.0, 1.0]).unwrap(), 6.0);
        assert_eq!(cycle_form(&x, &[0.0, 0.0]).unwrap(), 0.0);
        assert!(cycle_form(&x, &[1.0]).is_err());
        assert!(EdgeWeights::new(vec![1.0, 0.0, 1.0, 1.0], Normalization::None).is_err());
    }

    #[test]
    fn weights_tags_and_vertex_weights() {
        let x = EdgeWeights::new(vec![0.25f64; 4], Normalization::Simplex).unwrap();
        assert_eq!(x.vertex_weight(Vertex::upper(0)), 0.5);
        assert!(EdgeWeights::new(vec![0.3f64; 4], Normalization::Simplex).is_err());
        assert!(EdgeWeights::new(vec![2.0f64; 4], Normalization::RungZeroUnit).is_err());
        let y = EdgeWeights::<f32>::uniform(3, 1.0).unwrap();
        assert_eq!(y.vertex_weight(Vertex::lower(1)), 3.0);
    }

    #[test]
    fn json_shapes() {
        let g = build(1).unwrap();
        let s = serde_json::to_string(&g.edge_records()).unwrap();
        assert!(s.contains("\"kind\":\"rung\""));
        let c: SpanningTreeCode = serde_json::from_str("\"ACD\"").unwrap();
        assert_eq!(serde_json::to_string(&c).unwrap(), "\"ACD\"");
        assert!(serde_json::from_str::<SpanningTreeCode>("\"AB\"").is_err());
    }
}
