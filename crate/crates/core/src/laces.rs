//! Graphs on `{1..N}`: breakpoints, irreducibility, the canonical lace of
//! an irreducible graph, compatible edges and lace types.
//!
//! Graphs are edge bitmasks. Edge `(i, j)` (1-based, `i < j`) has bit index
//! given by [`edge_index`], lexicographic in `(i, j)`. Cut `k` (between
//! vertices `k` and `k+1`, `1 <= k <= N-1`) is bit `k-1` of a cut mask;
//! edge `(i, j)` crosses cuts `i..j-1`.

use std::collections::HashMap;
use std::fmt;

use crate::error::{invalid, Error, Result};

/// Largest `N` whose edge set fits the 64-bit mask.
pub const MAX_VERTICES: usize = 11;
/// Default cap for exhaustive enumeration.
pub const DEFAULT_CAP: usize = 8;
/// Largest `N` for which the full list of irreducible graphs is
/// materialized; beyond this use [`for_each_irreducible`].
pub const MATERIALIZE_CAP: usize = 7;

pub fn n_edge_slots(n: usize) -> usize {
    n * n.saturating_sub(1) / 2
}

/// Bit index of edge `(i, j)` in a graph on `n` vertices.
#[inline]
pub fn edge_index(n: usize, i: usize, j: usize) -> usize {
    (i - 1) * (2 * n - i) / 2 + (j - i - 1)
}

/// All edge slots of `K_n` in bit order.
pub fn edge_list(n: usize) -> Vec<(usize, usize)> {
    let mut out = Vec::with_capacity(n_edge_slots(n));
    for i in 1..=n {
        for j in i + 1..=n {
            out.push((i, j));
        }
    }
    out
}

fn cut_span(i: usize, j: usize) -> u32 {
    // cuts i..j-1 -> bits i-1..j-2
    ((1u32 << (j - i)) - 1) << (i - 1)
}

/// Per-edge cut spans for `K_n`, in bit order.
fn cut_spans(n: usize) -> Vec<u32> {
    edge_list(n).into_iter().map(|(i, j)| cut_span(i, j)).collect()
}

fn full_cuts(n: usize) -> u32 {
    (1u32 << (n - 1)) - 1
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Graph {
    pub n: usize,
    pub mask: u64,
}

impl Graph {
    pub fn empty(n: usize) -> Result<Self> {
        if n == 0 || n > MAX_VERTICES {
            return Err(invalid(format!("vertex count must be in 1..={MAX_VERTICES}, got {n}")));
        }
        Ok(Graph { n, mask: 0 })
    }

    pub fn complete(n: usize) -> Result<Self> {
        let g = Graph::empty(n)?;
        let slots = n_edge_slots(n);
        let mask = if slots == 64 { u64::MAX } else { (1u64 << slots) - 1 };
        Ok(Graph { mask, ..g })
    }

    pub fn new(n: usize, edges: &[(usize, usize)]) -> Result<Self> {
        let mut g = Graph::empty(n)?;
        for &(i, j) in edges {
            if !(1 <= i && i < j && j <= n) {
                return Err(invalid(format!("edge ({i},{j}) is not a pair 1 <= i < j <= {n}")));
            }
            let bit = 1u64 << edge_index(n, i, j);
            if g.mask & bit != 0 {
                return Err(invalid(format!("duplicate edge ({i},{j})")));
            }
            g.mask |= bit;
        }
        Ok(g)
    }

    pub fn contains(&self, i: usize, j: usize) -> bool {
        self.mask >> edge_index(self.n, i, j) & 1 == 1
    }

    pub fn n_edges(&self) -> usize {
        self.mask.count_ones() as usize
    }

    pub fn edges(&self) -> Vec<(usize, usize)> {
        edge_list(self.n)
            .into_iter()
            .enumerate()
            .filter(|(b, _)| self.mask >> b & 1 == 1)
            .map(|(_, e)| e)
            .collect()
    }

    fn cut_cover(&self) -> u32 {
        let mut cover = 0;
        let mut m = self.mask;
        let spans = cut_spans(self.n);
        while m != 0 {
            let b = m.trailing_zeros() as usize;
            cover |= spans[b];
            m &= m - 1;
        }
        cover
    }
}

impl fmt::Display for Graph {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_edges(f, &self.edges())
    }
}

fn write_edges(f: &mut fmt::Formatter<'_>, edges: &[(usize, usize)]) -> fmt::Result {
    write!(f, "{{")?;
    for (k, (i, j)) in edges.iter().enumerate() {
        if k > 0 {
            write!(f, ",")?;
        }
        write!(f, "({i},{j})")?;
    }
    write!(f, "}}")
}

/// Cuts `k in 1..N-1` not crossed by any edge.
pub fn breakpoints(g: &Graph) -> Vec<usize> {
    if g.n < 2 {
        return Vec::new();
    }
    let cover = g.cut_cover();
    (1..g.n).filter(|k| cover >> (k - 1) & 1 == 0).collect()
}

pub fn is_irreducible(g: &Graph) -> Result<bool> {
    if g.n < 2 {
        return Err(invalid("irreducibility needs N >= 2; there are no irreducible graphs on one vertex"));
    }
    Ok(g.cut_cover() == full_cuts(g.n))
}

/// Irreducible, and dropping any single edge leaves a breakpoint.
pub fn is_lace(g: &Graph) -> bool {
    if g.n < 2 || g.cut_cover() != full_cuts(g.n) {
        return false;
    }
    irredundant(g.mask, &cut_spans(g.n), g.n)
}

/// Every edge crosses some cut that no other edge crosses.
fn irredundant(mask: u64, spans: &[u32], n: usize) -> bool {
    let mut counts = [0u8; MAX_VERTICES];
    let mut m = mask;
    while m != 0 {
        let b = m.trailing_zeros() as usize;
        for c in 0..n - 1 {
            if spans[b] >> c & 1 == 1 {
                counts[c] += 1;
            }
        }
        m &= m - 1;
    }
    let mut m = mask;
    while m != 0 {
        let b = m.trailing_zeros() as usize;
        if !(0..n - 1).any(|c| spans[b] >> c & 1 == 1 && counts[c] == 1) {
            return false;
        }
        m &= m - 1;
    }
    true
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Lace {
    pub n: usize,
    /// Sorted by left endpoint.
    pub edges: Vec<(usize, usize)>,
}

impl Lace {
    /// Validate an edge list as a lace.
    pub fn new(n: usize, edges: &[(usize, usize)]) -> Result<Self> {
        let g = Graph::new(n, edges)?;
        if !is_lace(&g) {
            return Err(invalid(format!("{g} is not a lace on {n} vertices")));
        }
        let mut edges = edges.to_vec();
        edges.sort();
        Ok(Lace { n, edges })
    }

    pub fn graph(&self) -> Graph {
        let mut mask = 0;
        for &(i, j) in &self.edges {
            mask |= 1u64 << edge_index(self.n, i, j);
        }
        Graph { n: self.n, mask }
    }

    pub fn len(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }

    /// Endpoint sequence `i_1, j_1, i_2, j_2, ...`.
    pub fn endpoints(&self) -> Vec<usize> {
        self.edges.iter().flat_map(|&(i, j)| [i, j]).collect()
    }
}

impl fmt::Display for Lace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_edges(f, &self.edges)
    }
}

/// Greedy extraction on a raw mask; the caller guarantees irreducibility.
fn greedy_lace_mask(n: usize, mask: u64) -> u64 {
    let edges = edge_list(n);
    let mut out = 0u64;
    let mut cur = 1;
    while cur < n {
        // Largest right end among edges straddling `cur`, then smallest left end.
        let mut best: Option<(usize, usize, usize)> = None;
        let mut m = mask;
        while m != 0 {
            let b = m.trailing_zeros() as usize;
            let (i, j) = edges[b];
            if i <= cur && cur < j {
                let better = match best {
                    None => true,
                    Some((bi, bj, _)) => j > bj || (j == bj && i < bi),
                };
                if better {
                    best = Some((i, j, b));
                }
            }
            m &= m - 1;
        }
        let (_, j, b) = best.expect("irreducible graph has an edge over every cut");
        out |= 1u64 << b;
        cur = j;
    }
    out
}

/// The canonical lace of an irreducible graph.
pub fn lace_of(g: &Graph) -> Result<Lace> {
    if !is_irreducible(g)? {
        return Err(invalid(format!("{g} has breakpoints {:?}", breakpoints(g))));
    }
    let mask = greedy_lace_mask(g.n, g.mask);
    let mut edges = Graph { n: g.n, mask }.edges();
    edges.sort();
    Ok(Lace { n: g.n, edges })
}

/// Which edges count as compatible. `Flipped` negates the membership test
/// and exists only to check that the verification suites catch the fault.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Compatibility {
    #[default]
    Correct,
    Flipped,
}

fn compatible_mask_raw(n: usize, lace_mask: u64, mode: Compatibility) -> u64 {
    let mut out = 0;
    for b in 0..n_edge_slots(n) {
        let bit = 1u64 << b;
        if lace_mask & bit != 0 {
            continue;
        }
        let keeps = greedy_lace_mask(n, lace_mask | bit) == lace_mask;
        if keeps == (mode == Compatibility::Correct) {
            out |= bit;
        }
    }
    out
}

pub fn compatible_mask(lace: &Lace, mode: Compatibility) -> u64 {
    compatible_mask_raw(lace.n, lace.graph().mask, mode)
}

/// Edges `e ∉ ℓ` with `lace_of(ℓ ∪ {e}) = ℓ`.
pub fn compatible_set(lace: &Lace) -> Result<Vec<(usize, usize)>> {
    if !is_lace(&lace.graph()) {
        return Err(invalid(format!("{lace} is not a lace")));
    }
    let mask = compatible_mask(lace, Compatibility::Correct);
    Ok(Graph { n: lace.n, mask }.edges())
}

/// Chain lengths of a lace: maximal runs of consecutive edges that touch
/// (`j_k = i_{k+1}`); consecutive edges that strictly overlap start a new
/// chain.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct LaceType(pub Vec<usize>);

impl fmt::Display for LaceType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|x| x.to_string()).collect();
        write!(f, "({})", parts.join(","))
    }
}

pub fn classify_type(lace: &Lace) -> LaceType {
    let mut chains = Vec::new();
    let mut run = 0;
    for (k, &(_, j)) in lace.edges.iter().enumerate() {
        run += 1;
        let touches_next = lace.edges.get(k + 1).is_some_and(|&(i2, _)| i2 == j);
        if !touches_next {
            chains.push(run);
            run = 0;
        }
    }
    LaceType(chains)
}

/// `1 = i_1 < i_2 <= j_1 < i_3 <= j_2 < ... < i_n <= j_{n-1} < j_n = N`.
pub fn satisfies_interlacing(lace: &Lace) -> bool {
    let e = &lace.edges;
    let n = e.len();
    if n == 0 || e[0].0 != 1 || e[n - 1].1 != lace.n {
        return false;
    }
    for k in 0..n.saturating_sub(1) {
        let (i, j) = e[k];
        let (i2, j2) = e[k + 1];
        if !(i < i2 && i2 <= j && j < j2) {
            return false;
        }
        if let Some(&(i3, _)) = e.get(k + 2) {
            if !(j < i3) {
                return false;
            }
        }
    }
    true
}

fn check_cap(n: usize, cap: usize) -> Result<()> {
    let cap = cap.min(MAX_VERTICES);
    if n > cap {
        return Err(Error::ResourceLimit(format!(
            "N = {n} exceeds the enumeration cap {cap}"
        )));
    }
    Ok(())
}

/// Visit every irreducible graph on `n` vertices in increasing mask order.
pub fn for_each_irreducible<F: FnMut(u64)>(n: usize, cap: usize, mut f: F) -> Result<()> {
    check_cap(n, cap)?;
    if n < 2 {
        return Ok(());
    }
    let spans = cut_spans(n);
    let full = full_cuts(n);
    let slots = n_edge_slots(n);
    // Split the mask into two halves with precomputed cut covers so the
    // inner loop is one OR and one compare.
    let lo_bits = slots / 2;
    let hi_bits = slots - lo_bits;
    let cover_table = |offset: usize, bits: usize| -> Vec<u32> {
        let mut t = vec![0u32; 1 << bits];
        for m in 1..(1usize << bits) {
            let b = m.trailing_zeros() as usize;
            t[m] = t[m & (m - 1)] | spans[offset + b];
        }
        t
    };
    let lo = cover_table(0, lo_bits);
    let hi = cover_table(lo_bits, hi_bits);
    for (h, &ch) in hi.iter().enumerate() {
        for (l, &cl) in lo.iter().enumerate() {
            if ch | cl == full {
                f(((h as u64) << lo_bits) | l as u64);
            }
        }
    }
    Ok(())
}

pub fn enumerate_irreducible(n: usize, cap: usize) -> Result<Vec<Graph>> {
    if n > MATERIALIZE_CAP && n <= cap {
        return Err(Error::ResourceLimit(format!(
            "listing all irreducible graphs on {n} vertices needs too much memory; \
             stream them with for_each_irreducible"
        )));
    }
    let mut out = Vec::new();
    for_each_irreducible(n, cap, |mask| out.push(Graph { n, mask }))?;
    Ok(out)
}

/// All laces on `n` vertices, sorted.
///
/// Built bottom-up from edge sets in which every edge crosses a cut no
/// other edge crosses (a property inherited by subsets, so the search can
/// prune), keeping those that cross every cut. This does not use the
/// greedy construction at all.
pub fn enumerate_laces(n: usize, cap: usize) -> Result<Vec<Lace>> {
    check_cap(n, cap)?;
    if n < 2 {
        return Ok(Vec::new());
    }
    let spans = cut_spans(n);
    let full = full_cuts(n);
    let mut found = Vec::new();
    fn dfs(
        next: usize,
        mask: u64,
        cover: u32,
        n: usize,
        spans: &[u32],
        full: u32,
        found: &mut Vec<u64>,
    ) {
        if cover == full {
            found.push(mask);
        }
        for b in next..spans.len() {
            let m2 = mask | 1u64 << b;
            if irredundant(m2, spans, n) {
                dfs(b + 1, m2, cover | spans[b], n, spans, full, found);
            }
        }
    }
    dfs(0, 0, 0, n, &spans, full, &mut found);
    let mut laces: Vec<Lace> = found
        .into_iter()
        .map(|mask| {
            let mut edges = Graph { n, mask }.edges();
            edges.sort();
            Lace { n, edges }
        })
        .collect();
    laces.sort();
    Ok(laces)
}

/// Text row `N;edges;type` for golden files.
pub fn lace_row(lace: &Lace) -> String {
    format!("{};{};{}", lace.n, lace, classify_type(lace))
}

/// Weight `Π_{e∈mask} w_e`.
#[inline]
fn mask_product(mut mask: u64, w: &[f64]) -> f64 {
    let mut p = 1.0;
    while mask != 0 {
        p *= w[mask.trailing_zeros() as usize];
        mask &= mask - 1;
    }
    p
}

/// Precomputed laces and their compatible sets for repeated resummation.
#[derive(Debug, Clone)]
pub struct LaceTable {
    pub n: usize,
    pub laces: Vec<Lace>,
    lace_masks: Vec<u64>,
    compatible: Vec<u64>,
}

impl LaceTable {
    pub fn new(n: usize, cap: usize) -> Result<Self> {
        Self::with_mode(n, cap, Compatibility::Correct)
    }

    pub fn with_mode(n: usize, cap: usize, mode: Compatibility) -> Result<Self> {
        let laces = enumerate_laces(n, cap)?;
        let lace_masks: Vec<u64> = laces.iter().map(|l| l.graph().mask).collect();
        let compatible = lace_masks
            .iter()
            .map(|&m| compatible_mask_raw(n, m, mode))
            .collect();
        Ok(LaceTable {
            n,
            laces,
            lace_masks,
            compatible,
        })
    }

    pub fn compatible_of(&self, idx: usize) -> u64 {
        self.compatible[idx]
    }

    /// `Π_ℓ(-U) Π_{C(ℓ)}(1-U)` for each lace; `u` is indexed by edge bit.
    pub fn lace_terms(&self, u: &[f64]) -> Vec<f64> {
        let neg: Vec<f64> = u.iter().map(|x| -x).collect();
        let keep: Vec<f64> = u.iter().map(|x| 1.0 - x).collect();
        self.lace_masks
            .iter()
            .zip(&self.compatible)
            .map(|(&l, &c)| mask_product(l, &neg) * mask_product(c, &keep))
            .collect()
    }

    /// Resummed irreducible-graph sum.
    pub fn resummed(&self, u: &[f64]) -> f64 {
        self.lace_terms(u).iter().sum()
    }
}

/// `Σ_{g irreducible} Π_{e∈g}(-U_e)` by direct enumeration, with each
/// graph's product built from its mask with the lowest edge removed.
pub fn irreducible_sum_direct(n: usize, u: &[f64], irreducible: &[u64]) -> f64 {
    let slots = n_edge_slots(n);
    let mut prod = vec![1.0; 1usize << slots];
    for m in 1..prod.len() {
        let b = m.trailing_zeros() as usize;
        prod[m] = prod[m & (m - 1)] * -u[b];
    }
    irreducible.iter().map(|&m| prod[m as usize]).sum()
}

/// Masks of all irreducible graphs, for use with [`irreducible_sum_direct`].
pub fn irreducible_masks(n: usize) -> Result<Vec<u64>> {
    let mut out = Vec::new();
    for_each_irreducible(n, MATERIALIZE_CAP, |m| out.push(m))?;
    Ok(out)
}

/// Flatten a symmetric `n x n` matrix (row-major, 0-based) to edge-bit
/// order.
pub fn matrix_to_edge_weights(n: usize, u: &[f64]) -> Vec<f64> {
    edge_list(n)
        .into_iter()
        .map(|(i, j)| u[(i - 1) * n + (j - 1)])
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IdentityCheck {
    pub lhs: f64,
    pub rhs: f64,
    pub discrepancy: f64,
}

/// Compare the direct irreducible-graph sum with its lace resummation for a
/// symmetric `n x n` matrix `u` (row-major) with entries in `[0, 1]`.
pub fn lace_identity_check(n: usize, u: &[f64], cap: usize) -> Result<IdentityCheck> {
    check_cap(n, cap.min(MATERIALIZE_CAP))?;
    if u.len() != n * n {
        return Err(invalid("U must be an n x n matrix"));
    }
    for i in 0..n {
        for j in 0..n {
            let x = u[i * n + j];
            if !(0.0..=1.0).contains(&x) || x != u[j * n + i] {
                return Err(invalid("U must be symmetric with entries in [0, 1]"));
            }
        }
    }
    if n < 2 {
        return Ok(IdentityCheck {
            lhs: 0.0,
            rhs: 0.0,
            discrepancy: 0.0,
        });
    }
    let w = matrix_to_edge_weights(n, u);
    let lhs = irreducible_sum_direct(n, &w, &irreducible_masks(n)?);
    let rhs = LaceTable::new(n, cap)?.resummed(&w);
    Ok(IdentityCheck {
        lhs,
        rhs,
        discrepancy: (lhs - rhs).abs(),
    })
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct CharacterizationReport {
    pub n: usize,
    pub graphs_checked: u64,
    pub counterexamples: u64,
    /// Irreducible graphs whose canonical lace is missing from the
    /// independently enumerated list.
    pub unknown_laces: u64,
    /// Fiber sizes per lace, in `LaceTable` order.
    pub fiber_sizes: Vec<u64>,
}

/// Exhaustively test `lace_of(g) = ℓ  <=>  g \ ℓ ⊆ C(ℓ)` for every
/// irreducible `g` and every lace `ℓ` on `n` vertices.
pub fn characterization_check(n: usize, cap: usize, mode: Compatibility) -> Result<CharacterizationReport> {
    let table = LaceTable::with_mode(n, cap, mode)?;
    let index: HashMap<u64, usize> = table
        .lace_masks
        .iter()
        .enumerate()
        .map(|(k, &m)| (m, k))
        .collect();
    let mut report = CharacterizationReport {
        n,
        fiber_sizes: vec![0; table.laces.len()],
        ..Default::default()
    };
    for_each_irreducible(n, cap, |g| {
        report.graphs_checked += 1;
        let canonical = greedy_lace_mask(n, g);
        match index.get(&canonical) {
            Some(&k) => report.fiber_sizes[k] += 1,
            None => report.unknown_laces += 1,
        }
        for (&l, &c) in table.lace_masks.iter().zip(&table.compatible) {
            let predicted = g & l == l && (g & !l) & !c == 0;
            if predicted != (canonical == l) {
                report.counterexamples += 1;
            }
        }
    })?;
    Ok(report)
}
