//! Subshifts of finite type presented by finite directed graphs.
//!
//! An [`Sft`] is an essential directed graph over a fixed, totally ordered
//! alphabet: every symbol has at least one outgoing and one incoming edge, so
//! every symbol sits on a bi-infinite admissible sequence. Construction prunes
//! non-essential symbols iteratively and records what was removed.
//!
//! Spectral data ([`PerronData`]) gives the topological entropy `log λ` of an
//! irreducible graph; [`BlockPresentation`] re-presents a shift on its
//! admissible `m`-words, a topological conjugacy used for higher-order Markov
//! lifts.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use thiserror::Error;

/// Default ceiling on the number of admissible words a block presentation may
/// enumerate before giving up.
pub const DEFAULT_BLOCK_CAP: usize = 1_000_000;

const POWER_ITER_MAX: usize = 100_000;
const POWER_ITER_TOL: f64 = 1e-13;

#[derive(Debug, Error)]
pub enum ShiftError {
    #[error("symbol `{0}` declared more than once")]
    DuplicateSymbol(String),
    #[error("edge references undeclared symbol `{0}`")]
    UnknownSymbol(String),
    #[error("duplicate edge ({0} -> {1})")]
    DuplicateEdge(String, String),
    #[error("no symbol survives essential pruning")]
    EmptyAfterPruning,
    #[error("graph is not irreducible ({components} strongly connected components)")]
    NotIrreducible { components: usize },
    #[error("power iteration stalled at residual {residual:.3e} after {iterations} iterations")]
    NoConvergence { residual: f64, iterations: usize },
    #[error("order-{order} presentation needs {words} words, above the cap {cap}")]
    BlockExplosion { order: usize, words: usize, cap: usize },
    #[error("component {0} is trivial (a single symbol without a self-loop)")]
    TrivialComponent(usize),
    #[error("block order must be at least 1")]
    ZeroBlockOrder,
    #[error("no such component: {0}")]
    NoSuchComponent(usize),
}

/// A subshift of finite type: essential directed graph on an ordered alphabet.
///
/// Symbol order is fixed at construction and drives every tie-break in the
/// crate (component indexing, witness searches, branch selection), so all
/// outputs are deterministic functions of the input.
#[derive(Debug, Clone)]
pub struct Sft {
    symbols: Vec<String>,
    edges: Vec<(usize, usize)>,
    out: Vec<Vec<usize>>,
    inn: Vec<Vec<usize>>,
    edge_index: BTreeMap<(usize, usize), usize>,
    /// Set once pruning has run; always true for a constructed value.
    pub essential: bool,
    removed: Vec<String>,
}

impl PartialEq for Sft {
    fn eq(&self, other: &Self) -> bool {
        self.symbols == other.symbols && self.edges == other.edges
    }
}

impl Sft {
    /// Build the essential subgraph of `(symbols, edges)`.
    ///
    /// Symbols with zero in- or out-degree are deleted iteratively; the
    /// surviving alphabet keeps its declared order. Removed symbols are
    /// reported via [`Sft::removed_symbols`].
    pub fn build(symbols: Vec<String>, edges: Vec<(String, String)>) -> Result<Sft, ShiftError> {
        if symbols.is_empty() {
            return Err(ShiftError::EmptyAfterPruning);
        }
        let mut index = BTreeMap::new();
        for (i, s) in symbols.iter().enumerate() {
            if index.insert(s.clone(), i).is_some() {
                return Err(ShiftError::DuplicateSymbol(s.clone()));
            }
        }
        let mut pairs = Vec::with_capacity(edges.len());
        let mut seen = BTreeSet::new();
        for (a, b) in &edges {
            let ia = *index
                .get(a)
                .ok_or_else(|| ShiftError::UnknownSymbol(a.clone()))?;
            let ib = *index
                .get(b)
                .ok_or_else(|| ShiftError::UnknownSymbol(b.clone()))?;
            if !seen.insert((ia, ib)) {
                return Err(ShiftError::DuplicateEdge(a.clone(), b.clone()));
            }
            pairs.push((ia, ib));
        }
        Self::from_indexed(symbols, pairs)
    }

    /// Internal constructor over already-indexed edges; prunes to the
    /// essential subgraph.
    pub(crate) fn from_indexed(
        symbols: Vec<String>,
        pairs: Vec<(usize, usize)>,
    ) -> Result<Sft, ShiftError> {
        let n = symbols.len();
        let mut alive = vec![true; n];
        let mut outdeg = vec![0usize; n];
        let mut indeg = vec![0usize; n];
        for &(a, b) in &pairs {
            outdeg[a] += 1;
            indeg[b] += 1;
        }
        // Iterative pruning: delete symbols with a dead side until stable.
        loop {
            let mut changed = false;
            for v in 0..n {
                if alive[v] && (outdeg[v] == 0 || indeg[v] == 0) {
                    alive[v] = false;
                    changed = true;
                    for &(a, b) in &pairs {
                        if a == v && alive[b] {
                            indeg[b] -= 1;
                        }
                        if b == v && alive[a] {
                            outdeg[a] -= 1;
                        }
                    }
                }
            }
            if !changed {
                break;
            }
        }
        if !alive.iter().any(|&a| a) {
            return Err(ShiftError::EmptyAfterPruning);
        }

        let mut remap = vec![usize::MAX; n];
        let mut kept = Vec::new();
        let mut removed = Vec::new();
        for (v, sym) in symbols.into_iter().enumerate() {
            if alive[v] {
                remap[v] = kept.len();
                kept.push(sym);
            } else {
                removed.push(sym);
            }
        }
        let mut edges: Vec<(usize, usize)> = pairs
            .into_iter()
            .filter(|&(a, b)| alive[a] && alive[b])
            .map(|(a, b)| (remap[a], remap[b]))
            .collect();
        edges.sort_unstable();

        let m = kept.len();
        let mut out = vec![Vec::new(); m];
        let mut inn = vec![Vec::new(); m];
        let mut edge_index = BTreeMap::new();
        for (k, &(a, b)) in edges.iter().enumerate() {
            out[a].push(b);
            inn[b].push(a);
            edge_index.insert((a, b), k);
        }
        Ok(Sft {
            symbols: kept,
            edges,
            out,
            inn,
            edge_index,
            essential: true,
            removed,
        })
    }

    /// Convenience constructor from string slices.
    pub fn from_strs(symbols: &[&str], edges: &[(&str, &str)]) -> Result<Sft, ShiftError> {
        Self::build(
            symbols.iter().map(|s| s.to_string()).collect(),
            edges
                .iter()
                .map(|(a, b)| (a.to_string(), b.to_string()))
                .collect(),
        )
    }

    /// The full shift on `n` symbols `0..n`.
    pub fn full_shift(n: usize) -> Sft {
        let symbols: Vec<String> = (0..n).map(|i| i.to_string()).collect();
        let pairs = (0..n)
            .flat_map(|a| (0..n).map(move |b| (a, b)))
            .collect();
        Self::from_indexed(symbols, pairs).expect("full shift is essential")
    }

    /// The golden-mean shift: `0 -> {0,1}`, `1 -> 0`.
    pub fn golden_mean() -> Sft {
        Self::from_strs(&["0", "1"], &[("0", "0"), ("0", "1"), ("1", "0")]).unwrap()
    }

    /// A single directed `n`-cycle.
    pub fn cycle(n: usize) -> Sft {
        let symbols: Vec<String> = (0..n).map(|i| i.to_string()).collect();
        let pairs = (0..n).map(|a| (a, (a + 1) % n)).collect();
        Self::from_indexed(symbols, pairs).expect("cycle is essential")
    }

    pub fn symbol_count(&self) -> usize {
        self.symbols.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn symbols(&self) -> &[String] {
        &self.symbols
    }

    pub fn symbol(&self, idx: usize) -> &str {
        &self.symbols[idx]
    }

    pub fn index_of(&self, symbol: &str) -> Option<usize> {
        self.symbols.iter().position(|s| s == symbol)
    }

    /// Edges in sorted `(source, destination)` index order. Edge-aligned
    /// vectors throughout the crate follow this order.
    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn edge_id(&self, a: usize, b: usize) -> Option<usize> {
        self.edge_index.get(&(a, b)).copied()
    }

    pub fn has_edge(&self, a: usize, b: usize) -> bool {
        self.edge_index.contains_key(&(a, b))
    }

    pub fn successors(&self, v: usize) -> &[usize] {
        &self.out[v]
    }

    pub fn predecessors(&self, v: usize) -> &[usize] {
        &self.inn[v]
    }

    /// Symbols deleted by essential pruning, in declaration order.
    pub fn removed_symbols(&self) -> &[String] {
        &self.removed
    }

    pub fn edge_label(&self, e: usize) -> (String, String) {
        let (a, b) = self.edges[e];
        (self.symbols[a].clone(), self.symbols[b].clone())
    }

    /// Is `word` a path in the graph?
    pub fn is_admissible(&self, word: &[usize]) -> bool {
        word.windows(2).all(|w| self.has_edge(w[0], w[1]))
    }

    /// Strongly connected components with deterministic numbering:
    /// components are sorted by their least contained symbol.
    pub fn strongly_connected_components(&self) -> SccDecomposition {
        let n = self.symbols.len();
        // Iterative Tarjan.
        let mut index = vec![usize::MAX; n];
        let mut low = vec![0usize; n];
        let mut on_stack = vec![false; n];
        let mut stack: Vec<usize> = Vec::new();
        let mut comps: Vec<Vec<usize>> = Vec::new();
        let mut next = 0usize;
        let mut call: Vec<(usize, usize)> = Vec::new();
        for root in 0..n {
            if index[root] != usize::MAX {
                continue;
            }
            call.push((root, 0));
            while let Some(&mut (v, ref mut ei)) = call.last_mut() {
                if *ei == 0 {
                    index[v] = next;
                    low[v] = next;
                    next += 1;
                    stack.push(v);
                    on_stack[v] = true;
                }
                if *ei < self.out[v].len() {
                    let w = self.out[v][*ei];
                    *ei += 1;
                    if index[w] == usize::MAX {
                        call.push((w, 0));
                    } else if on_stack[w] {
                        low[v] = low[v].min(index[w]);
                    }
                } else {
                    if low[v] == index[v] {
                        let mut comp = Vec::new();
                        loop {
                            let w = stack.pop().unwrap();
                            on_stack[w] = false;
                            comp.push(w);
                            if w == v {
                                break;
                            }
                        }
                        comp.sort_unstable();
                        comps.push(comp);
                    }
                    call.pop();
                    if let Some(&mut (u, _)) = call.last_mut() {
                        low[u] = low[u].min(low[v]);
                    }
                }
            }
        }
        comps.sort_by_key(|c| c[0]);
        let mut component_of = vec![0usize; n];
        for (ci, comp) in comps.iter().enumerate() {
            for &v in comp {
                component_of[v] = ci;
            }
        }
        let trivial: Vec<bool> = comps
            .iter()
            .map(|c| c.len() == 1 && !self.has_edge(c[0], c[0]))
            .collect();
        let mut dag = BTreeSet::new();
        for &(a, b) in &self.edges {
            let (ca, cb) = (component_of[a], component_of[b]);
            if ca != cb {
                dag.insert((ca, cb));
            }
        }
        SccDecomposition {
            components: comps,
            component_of,
            trivial,
            dag,
        }
    }

    pub fn is_irreducible(&self) -> bool {
        let scc = self.strongly_connected_components();
        scc.components.len() == 1 && !scc.trivial[0]
    }

    /// Induced subgraph on a nontrivial strongly connected component. The
    /// result is irreducible and keeps the inherited symbol order.
    pub fn restrict_to_component(
        &self,
        scc: &SccDecomposition,
        id: usize,
    ) -> Result<Sft, ShiftError> {
        let comp = scc
            .components
            .get(id)
            .ok_or(ShiftError::NoSuchComponent(id))?;
        if scc.trivial[id] {
            return Err(ShiftError::TrivialComponent(id));
        }
        let keep: BTreeSet<usize> = comp.iter().copied().collect();
        let mut remap = BTreeMap::new();
        let mut symbols = Vec::new();
        for &v in comp {
            remap.insert(v, symbols.len());
            symbols.push(self.symbols[v].clone());
        }
        let pairs = self
            .edges
            .iter()
            .filter(|(a, b)| keep.contains(a) && keep.contains(b))
            .map(|&(a, b)| (remap[&a], remap[&b]))
            .collect();
        Sft::from_indexed(symbols, pairs)
    }

    /// Perron eigendata of an irreducible graph.
    ///
    /// Power iteration runs on `(A + I)/2`, which has the same Perron vectors
    /// while shifting the spectrum to `(λ+1)/2`; this makes convergence
    /// unconditional on periodic graphs. The returned `value` is λ of `A`
    /// itself, polished with one Rayleigh quotient.
    pub fn perron(&self) -> Result<PerronData, ShiftError> {
        if !self.is_irreducible() {
            let c = self.strongly_connected_components().components.len();
            return Err(ShiftError::NotIrreducible { components: c });
        }
        let n = self.symbols.len();
        let apply = |v: &[f64], transpose: bool| -> Vec<f64> {
            let mut w = vec![0.0; n];
            for &(a, b) in &self.edges {
                if transpose {
                    w[b] += v[a];
                } else {
                    w[a] += v[b];
                }
            }
            // (A v + v) / 2
            for i in 0..n {
                w[i] = 0.5 * (w[i] + v[i]);
            }
            w
        };
        let iterate = |transpose: bool| -> Result<(Vec<f64>, f64, usize), ShiftError> {
            let mut v = vec![1.0 / n as f64; n];
            for it in 0..POWER_ITER_MAX {
                let w = apply(&v, transpose);
                let lambda: f64 = w.iter().sum();
                let residual = w
                    .iter()
                    .zip(&v)
                    .map(|(wi, vi)| (wi - lambda * vi).abs())
                    .fold(0.0f64, f64::max);
                let w: Vec<f64> = w.iter().map(|x| x / lambda).collect();
                if residual <= POWER_ITER_TOL * lambda.max(1.0) {
                    return Ok((w, lambda, it + 1));
                }
                v = w;
            }
            Err(ShiftError::NoConvergence {
                residual: f64::NAN,
                iterations: POWER_ITER_MAX,
            })
        };
        let (right, _, it_r) = iterate(false)?;
        let (left, _, it_l) = iterate(true)?;

        // Rayleigh polish on the original matrix: λ = l·A·r / l·r.
        let mut ar = vec![0.0; n];
        for &(a, b) in &self.edges {
            ar[a] += right[b];
        }
        let lar: f64 = left.iter().zip(&ar).map(|(l, x)| l * x).sum();
        let lr: f64 = left.iter().zip(&right).map(|(l, r)| l * r).sum();
        let value = lar / lr;

        // Normalise: Σ right = 1, ⟨left, right⟩ = 1.
        let rsum: f64 = right.iter().sum();
        let right: Vec<f64> = right.iter().map(|x| x / rsum).collect();
        let lr: f64 = left.iter().zip(&right).map(|(l, r)| l * r).sum();
        let left: Vec<f64> = left.iter().map(|x| x / lr).collect();

        let mut res = 0.0f64;
        let mut ar = vec![0.0; n];
        let mut la = vec![0.0; n];
        for &(a, b) in &self.edges {
            ar[a] += right[b];
            la[b] += left[a];
        }
        for i in 0..n {
            res = res.max((ar[i] - value * right[i]).abs());
            res = res.max((la[i] - value * left[i]).abs());
        }
        if !(res <= 1e-9 * value.max(1.0)) {
            return Err(ShiftError::NoConvergence {
                residual: res,
                iterations: it_r + it_l,
            });
        }
        Ok(PerronData {
            value,
            left,
            right,
            entropy: value.ln(),
            residual: res,
            iterations: it_r + it_l,
        })
    }

    /// Order-`m` block presentation: symbols are admissible `m`-words, with an
    /// edge exactly when two words overlap on `m-1` symbols and the combined
    /// `(m+1)`-word is admissible.
    pub fn higher_block(self: &Arc<Sft>, m: usize) -> Result<BlockPresentation, ShiftError> {
        self.higher_block_capped(m, DEFAULT_BLOCK_CAP)
    }

    pub fn higher_block_capped(
        self: &Arc<Sft>,
        m: usize,
        cap: usize,
    ) -> Result<BlockPresentation, ShiftError> {
        if m == 0 {
            return Err(ShiftError::ZeroBlockOrder);
        }
        let mut words: Vec<Vec<usize>> = (0..self.symbols.len()).map(|v| vec![v]).collect();
        for order in 2..=m {
            let mut next = Vec::new();
            for w in &words {
                let last = *w.last().unwrap();
                for &b in &self.out[last] {
                    let mut ext = w.clone();
                    ext.push(b);
                    next.push(ext);
                    if next.len() > cap {
                        return Err(ShiftError::BlockExplosion {
                            order,
                            words: next.len(),
                            cap,
                        });
                    }
                }
            }
            words = next;
        }
        let single_char = self.symbols.iter().all(|s| s.chars().count() == 1);
        let label = |w: &[usize]| -> String {
            let parts: Vec<&str> = w.iter().map(|&v| self.symbols[v].as_str()).collect();
            if single_char {
                parts.concat()
            } else {
                parts.join("|")
            }
        };
        let mut word_id: BTreeMap<&[usize], usize> = BTreeMap::new();
        for (i, w) in words.iter().enumerate() {
            word_id.insert(w.as_slice(), i);
        }
        let mut pairs = Vec::new();
        for (i, w) in words.iter().enumerate() {
            let last = *w.last().unwrap();
            for &b in &self.out[last] {
                let mut succ: Vec<usize> = w[1..].to_vec();
                succ.push(b);
                if let Some(&j) = word_id.get(succ.as_slice()) {
                    pairs.push((i, j));
                }
            }
        }
        let block = Sft::from_indexed(words.iter().map(|w| label(w)).collect(), pairs)?;
        // No pruning can occur: every admissible word extends both ways.
        debug_assert_eq!(block.symbol_count(), words.len());
        let symbol_map = words.iter().map(|w| w[0]).collect();
        Ok(BlockPresentation {
            order: m,
            original: Arc::clone(self),
            block: Arc::new(block),
            symbol_map,
            words,
        })
    }
}

/// Strongly connected structure of an [`Sft`].
#[derive(Debug, Clone)]
pub struct SccDecomposition {
    /// Components sorted by least contained symbol; each sorted internally.
    pub components: Vec<Vec<usize>>,
    pub component_of: Vec<usize>,
    /// A component is trivial when it is a single symbol without a self-loop.
    pub trivial: Vec<bool>,
    /// Edges of the condensation, as `(component, component)` pairs.
    pub dag: BTreeSet<(usize, usize)>,
}

/// Perron root and eigendata of an irreducible graph.
///
/// `right` sums to one and `⟨left, right⟩ = 1`; `entropy` is `ln value` in
/// nats.
#[derive(Debug, Clone)]
pub struct PerronData {
    pub value: f64,
    pub left: Vec<f64>,
    pub right: Vec<f64>,
    pub entropy: f64,
    pub residual: f64,
    pub iterations: usize,
}

/// A shift re-presented on its admissible `m`-words.
#[derive(Debug, Clone)]
pub struct BlockPresentation {
    pub order: usize,
    pub original: Arc<Sft>,
    pub block: Arc<Sft>,
    /// Block symbol -> initial symbol of its word in the original alphabet.
    pub symbol_map: Vec<usize>,
    pub words: Vec<Vec<usize>>,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{CounterRng, RngStream};
    use approx::assert_relative_eq;

    #[test]
    fn golden_mean_needs_no_pruning() {
        let x = Sft::golden_mean();
        assert_eq!(x.symbol_count(), 2);
        assert_eq!(x.edge_count(), 3);
        assert!(x.removed_symbols().is_empty());
    }

    #[test]
    fn acyclic_graph_prunes_to_nothing() {
        let err = Sft::from_strs(&["0", "1"], &[("0", "1")]).unwrap_err();
        assert!(matches!(err, ShiftError::EmptyAfterPruning));
    }

    #[test]
    fn full_two_shift_counts() {
        let x = Sft::full_shift(2);
        assert_eq!(x.symbol_count(), 2);
        assert_eq!(x.edge_count(), 4);
    }

    #[test]
    fn duplicate_edge_rejected() {
        let err = Sft::from_strs(&["a"], &[("a", "a"), ("a", "a")]).unwrap_err();
        assert!(matches!(err, ShiftError::DuplicateEdge(_, _)));
    }

    #[test]
    fn pruning_reports_removed_symbols() {
        let x = Sft::from_strs(
            &["a", "w", "b"],
            &[("a", "a"), ("a", "w"), ("w", "b"), ("b", "b"), ("b", "a")],
        )
        .unwrap();
        // "w" has no return path but in/out degree >= 1, so it stays; add a
        // genuinely dangling symbol instead.
        assert!(x.removed_symbols().is_empty());
        let y = Sft::from_strs(&["a", "d"], &[("a", "a"), ("a", "d")]).unwrap();
        assert_eq!(y.removed_symbols(), &["d".to_string()]);
        assert_eq!(y.symbol_count(), 1);
    }

    #[test]
    fn scc_on_small_graphs() {
        let scc = Sft::golden_mean().strongly_connected_components();
        assert_eq!(scc.components.len(), 1);
        assert!(!scc.trivial[0]);

        let two_cycles = Sft::from_strs(
            &["a", "b", "c", "d"],
            &[("a", "b"), ("b", "a"), ("c", "d"), ("d", "c")],
        )
        .unwrap();
        let scc = two_cycles.strongly_connected_components();
        assert_eq!(scc.components.len(), 2);
        assert_eq!(scc.components[0], vec![0, 1]);
        assert_eq!(scc.components[1], vec![2, 3]);
        assert!(scc.dag.is_empty());
    }

    /// Brute-force reachability oracle: u,v share a component iff u reaches v
    /// and v reaches u with paths of length <= |V|.
    fn reachability_partition(x: &Sft) -> Vec<Vec<bool>> {
        let n = x.symbol_count();
        let mut reach = vec![vec![false; n]; n];
        for v in 0..n {
            reach[v][v] = true;
        }
        for _ in 0..n {
            let prev = reach.clone();
            for &(a, b) in x.edges() {
                for t in 0..n {
                    if prev[b][t] {
                        reach[a][t] = true;
                    }
                }
            }
        }
        reach
    }

    #[test]
    fn scc_matches_bruteforce_on_random_graphs() {
        let rng = CounterRng::new(2024, 0);
        let mut tested = 0;
        for trial in 0..200u64 {
            let mut s = RngStream::new(rng.substream(trial));
            let n = 2 + (s.next_f64() * 7.0) as usize; // up to 8 symbols
            let symbols: Vec<String> = (0..n).map(|i| i.to_string()).collect();
            let mut pairs = Vec::new();
            for a in 0..n {
                for b in 0..n {
                    if s.next_f64() < 0.3 {
                        pairs.push((a, b));
                    }
                }
            }
            let Ok(x) = Sft::from_indexed(symbols, pairs) else {
                continue;
            };
            tested += 1;
            let scc = x.strongly_connected_components();
            let reach = reachability_partition(&x);
            for u in 0..x.symbol_count() {
                for v in 0..x.symbol_count() {
                    let same = reach[u][v] && reach[v][u];
                    assert_eq!(
                        same,
                        scc.component_of[u] == scc.component_of[v],
                        "trial {trial}: symbols {u},{v}"
                    );
                }
            }
        }
        assert!(tested > 50, "only {tested} essential graphs generated");
    }

    #[test]
    fn restrict_to_component_cases() {
        let g = Sft::golden_mean();
        let scc = g.strongly_connected_components();
        let r = g.restrict_to_component(&scc, 0).unwrap();
        assert_eq!(r, g);

        let two_cycles = Sft::from_strs(
            &["a", "b", "c", "d"],
            &[("a", "b"), ("b", "a"), ("c", "d"), ("d", "c")],
        )
        .unwrap();
        let scc = two_cycles.strongly_connected_components();
        let r = two_cycles.restrict_to_component(&scc, 1).unwrap();
        assert_eq!(r.symbols(), &["c".to_string(), "d".to_string()]);
        assert!(r.is_irreducible());

        // Wandering symbol: {b} forms a trivial component.
        let w = Sft::from_strs(
            &["a", "b", "c"],
            &[("a", "a"), ("a", "b"), ("b", "c"), ("c", "c")],
        )
        .unwrap();
        let scc = w.strongly_connected_components();
        assert_eq!(scc.components.len(), 3);
        let comp_b = scc.component_of[w.index_of("b").unwrap()];
        assert!(matches!(
            w.restrict_to_component(&scc, comp_b),
            Err(ShiftError::TrivialComponent(_))
        ));
        let comp_a = scc.component_of[0];
        let ra = w.restrict_to_component(&scc, comp_a).unwrap();
        assert_eq!(ra.symbols(), &["a".to_string()]);
    }

    #[test]
    fn perron_full_shift_exact() {
        let p = Sft::full_shift(2).perron().unwrap();
        assert!((p.value - 2.0).abs() <= 1e-12);
        assert!((p.entropy - std::f64::consts::LN_2).abs() <= 1e-12);
    }

    #[test]
    fn perron_golden_mean_root() {
        let p = Sft::golden_mean().perron().unwrap();
        let phi = (1.0 + 5f64.sqrt()) / 2.0;
        assert_relative_eq!(p.value, phi, max_relative = 1e-11);
        // λ is a root of λ² = λ + 1.
        assert!((p.value * p.value - p.value - 1.0).abs() <= 1e-10);
        assert_relative_eq!(p.entropy, phi.ln(), epsilon = 1e-11);
    }

    #[test]
    fn perron_periodic_cycle() {
        let p = Sft::cycle(3).perron().unwrap();
        assert!((p.value - 1.0).abs() <= 1e-12);
        assert!(p.entropy.abs() <= 1e-12);
    }

    #[test]
    fn perron_rejects_reducible() {
        let two = Sft::from_strs(&["a", "b"], &[("a", "a"), ("b", "b")]).unwrap();
        assert!(matches!(
            two.perron(),
            Err(ShiftError::NotIrreducible { components: 2 })
        ));
    }

    #[test]
    fn higher_block_identity_at_order_one() {
        let x = Arc::new(Sft::golden_mean());
        let b = x.higher_block(1).unwrap();
        assert_eq!(*b.block, *x);
        assert_eq!(b.symbol_map, vec![0, 1]);
    }

    #[test]
    fn higher_block_golden_mean_order_two() {
        let x = Arc::new(Sft::golden_mean());
        let b = x.higher_block(2).unwrap();
        let names: Vec<&str> = b.block.symbols().iter().map(|s| s.as_str()).collect();
        assert_eq!(names, vec!["00", "01", "10"]);
    }

    #[test]
    fn higher_block_full_shift_order_three() {
        let x = Arc::new(Sft::full_shift(2));
        let b = x.higher_block(3).unwrap();
        assert_eq!(b.block.symbol_count(), 8);
        assert_eq!(b.block.edge_count(), 16);
    }

    #[test]
    fn higher_block_preserves_entropy() {
        for x in [Sft::golden_mean(), Sft::full_shift(3), Sft::cycle(4)] {
            let x = Arc::new(x);
            let h = x.perron().unwrap().entropy;
            for m in 1..=4 {
                let b = x.higher_block(m).unwrap();
                let hb = b.block.perron().unwrap().entropy;
                assert!(
                    (h - hb).abs() <= 1e-9,
                    "entropy drift {h} vs {hb} at order {m}"
                );
            }
        }
    }

    #[test]
    fn higher_block_cap_fires() {
        let x = Arc::new(Sft::full_shift(4));
        assert!(matches!(
            x.higher_block_capped(12, 1_000_000),
            Err(ShiftError::BlockExplosion { .. })
        ));
    }
}
