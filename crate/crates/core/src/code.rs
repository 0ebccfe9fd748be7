//! 1-block factor codes between subshifts of finite type.
//!
//! A [`OneBlockCode`] recodes symbol-by-symbol and commutes with the shift.
//! The module also carries the graph machinery built on top of codes: the
//! pair graph and diamond search behind the finite-to-one test, the stabilised
//! path-count degree, fiber products, the base×fiber product coding graph with
//! its two projection codes, and the level-`n` alphabet truncation that
//! separates the first `n` symbols and merges the rest inside each label
//! class.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::sync::Arc;

use thiserror::Error;

use crate::shift::{SccDecomposition, Sft, ShiftError};

#[derive(Debug, Error)]
pub enum CodeError {
    #[error("symbol map is missing source symbol `{0}`")]
    IncompleteMap(String),
    #[error("symbol map target `{0}` is not a target symbol")]
    UnknownTarget(String),
    #[error("edge ({0} -> {1}) maps to ({2} -> {3}), which is not a target edge")]
    EdgeNotPreserved(String, String, String, String),
    #[error("source shift is not irreducible")]
    NotIrreducible,
    #[error("code is not finite-to-one (a diamond exists)")]
    NotFiniteToOne,
    #[error("degree search did not stabilise within word length {word_cap}")]
    DegreeInconclusive { word_cap: usize },
    #[error("no overlapping (base, fiber) pair survives pruning")]
    EmptyProduct,
    #[error("seed symbol `{0}` is not a product symbol")]
    UnknownSeed(String),
    #[error("truncation level {level} exceeds the alphabet size {alphabet}")]
    BadLevel { level: usize, alphabet: usize },
    #[error(transparent)]
    Shift(#[from] ShiftError),
}

/// A symbol map `source -> target` inducing a shift-commuting sequence map.
///
/// Validity (every source edge maps to a target edge) is checked at
/// construction, so a value of this type is always a genuine 1-block code.
#[derive(Debug, Clone)]
pub struct OneBlockCode {
    source: Arc<Sft>,
    target: Arc<Sft>,
    map: Vec<usize>,
}

/// Coverage report for a code: which target symbols and edges are images.
#[derive(Debug, Clone)]
pub struct CodeReport {
    pub symbols_covered: bool,
    pub edges_covered: bool,
    pub uncovered_symbols: Vec<String>,
    pub uncovered_edges: Vec<(String, String)>,
}

impl CodeReport {
    pub fn surjective(&self) -> bool {
        self.symbols_covered && self.edges_covered
    }
}

/// Two distinct equal-image paths sharing both endpoints.
#[derive(Debug, Clone)]
pub struct Diamond {
    pub upper: Vec<usize>,
    pub lower: Vec<usize>,
    pub image: Vec<usize>,
}

#[derive(Debug, Clone)]
pub struct FiniteToOneReport {
    pub finite_to_one: bool,
    pub witness: Option<Diamond>,
}

impl OneBlockCode {
    /// Validate a symbol map given by index: `map[source symbol] = target
    /// symbol`.
    pub fn new(source: Arc<Sft>, target: Arc<Sft>, map: Vec<usize>) -> Result<Self, CodeError> {
        if map.len() != source.symbol_count() {
            let missing = source.symbol(map.len().min(source.symbol_count() - 1));
            return Err(CodeError::IncompleteMap(missing.to_string()));
        }
        for (s, &t) in map.iter().enumerate() {
            if t >= target.symbol_count() {
                return Err(CodeError::UnknownTarget(format!(
                    "#{t} (image of `{}`)",
                    source.symbol(s)
                )));
            }
        }
        for &(a, b) in source.edges() {
            if !target.has_edge(map[a], map[b]) {
                return Err(CodeError::EdgeNotPreserved(
                    source.symbol(a).to_string(),
                    source.symbol(b).to_string(),
                    target.symbol(map[a]).to_string(),
                    target.symbol(map[b]).to_string(),
                ));
            }
        }
        Ok(OneBlockCode {
            source,
            target,
            map,
        })
    }

    /// Validate a symbol map given by name pairs.
    pub fn from_pairs(
        source: Arc<Sft>,
        target: Arc<Sft>,
        pairs: &[(&str, &str)],
    ) -> Result<Self, CodeError> {
        let by_name: BTreeMap<&str, &str> = pairs.iter().copied().collect();
        let mut map = Vec::with_capacity(source.symbol_count());
        for s in source.symbols() {
            let t = by_name
                .get(s.as_str())
                .ok_or_else(|| CodeError::IncompleteMap(s.clone()))?;
            let ti = target
                .index_of(t)
                .ok_or_else(|| CodeError::UnknownTarget((*t).to_string()))?;
            map.push(ti);
        }
        OneBlockCode::new(source, target, map)
    }

    pub fn identity(x: &Arc<Sft>) -> Self {
        OneBlockCode {
            source: Arc::clone(x),
            target: Arc::clone(x),
            map: (0..x.symbol_count()).collect(),
        }
    }

    /// `other ∘ self` (apply `self` first). Requires matching middle shift.
    pub fn compose(&self, other: &OneBlockCode) -> Result<OneBlockCode, CodeError> {
        assert_eq!(
            *self.target, *other.source,
            "compose: middle shifts differ"
        );
        let map = self.map.iter().map(|&t| other.map[t]).collect();
        OneBlockCode::new(
            Arc::clone(&self.source),
            Arc::clone(&other.target),
            map,
        )
    }

    pub fn source(&self) -> &Arc<Sft> {
        &self.source
    }

    pub fn target(&self) -> &Arc<Sft> {
        &self.target
    }

    pub fn symbol_map(&self) -> &[usize] {
        &self.map
    }

    #[inline]
    pub fn image(&self, symbol: usize) -> usize {
        self.map[symbol]
    }

    pub fn apply(&self, word: &[usize]) -> Vec<usize> {
        word.iter().map(|&s| self.map[s]).collect()
    }

    /// Preimage symbols of each target symbol, in source order.
    pub fn preimages(&self) -> Vec<Vec<usize>> {
        let mut pre = vec![Vec::new(); self.target.symbol_count()];
        for (s, &t) in self.map.iter().enumerate() {
            pre[t].push(s);
        }
        pre
    }

    /// Image coverage of target symbols and edges.
    pub fn report(&self) -> CodeReport {
        let mut sym = vec![false; self.target.symbol_count()];
        for &t in &self.map {
            sym[t] = true;
        }
        let mut edge = vec![false; self.target.edge_count()];
        for &(a, b) in self.source.edges() {
            if let Some(e) = self.target.edge_id(self.map[a], self.map[b]) {
                edge[e] = true;
            }
        }
        let uncovered_symbols: Vec<String> = sym
            .iter()
            .enumerate()
            .filter(|(_, &c)| !c)
            .map(|(t, _)| self.target.symbol(t).to_string())
            .collect();
        let uncovered_edges: Vec<(String, String)> = edge
            .iter()
            .enumerate()
            .filter(|(_, &c)| !c)
            .map(|(e, _)| self.target.edge_label(e))
            .collect();
        CodeReport {
            symbols_covered: uncovered_symbols.is_empty(),
            edges_covered: uncovered_edges.is_empty(),
            uncovered_symbols,
            uncovered_edges,
        }
    }

    /// Pair graph on `{(u, v) : code(u) = code(v)}` with componentwise edges,
    /// pruned to its essential part. The diagonal always survives.
    pub fn fiber_product(&self) -> FiberProduct {
        let n = self.source.symbol_count();
        let mut pairs = Vec::new();
        let mut pair_id = BTreeMap::new();
        for u in 0..n {
            for v in 0..n {
                if self.map[u] == self.map[v] {
                    pair_id.insert((u, v), pairs.len());
                    pairs.push((u, v));
                }
            }
        }
        let mut edges = Vec::new();
        for (i, &(u, v)) in pairs.iter().enumerate() {
            for &u2 in self.source.successors(u) {
                for &v2 in self.source.successors(v) {
                    if let Some(&j) = pair_id.get(&(u2, v2)) {
                        edges.push((i, j));
                    }
                }
            }
        }
        let symbols: Vec<String> = pairs
            .iter()
            .map(|&(u, v)| format!("({},{})", self.source.symbol(u), self.source.symbol(v)))
            .collect();
        let sft = Arc::new(
            Sft::from_indexed(symbols, edges).expect("diagonal keeps the pair graph essential"),
        );
        // Recover the coordinate maps for the surviving pairs.
        let mut left = Vec::with_capacity(sft.symbol_count());
        let mut right = Vec::with_capacity(sft.symbol_count());
        let mut diagonal = Vec::with_capacity(sft.symbol_count());
        for name in sft.symbols() {
            let inner = &name[1..name.len() - 1];
            let (u, v) = inner.split_once(',').expect("pair label");
            let ui = self.source.index_of(u).unwrap();
            let vi = self.source.index_of(v).unwrap();
            left.push(ui);
            right.push(vi);
            diagonal.push(ui == vi);
        }
        let left = OneBlockCode::new(Arc::clone(&sft), Arc::clone(&self.source), left)
            .expect("pair edges project to source edges");
        let right = OneBlockCode::new(Arc::clone(&sft), Arc::clone(&self.source), right)
            .expect("pair edges project to source edges");
        FiberProduct {
            pair: sft,
            left,
            right,
            diagonal,
        }
    }

    /// Diamond search on the pair graph. Returns a witness (two distinct
    /// equal-image paths sharing endpoints) when the code is not
    /// finite-to-one.
    pub fn is_finite_to_one(&self) -> Result<FiniteToOneReport, CodeError> {
        if !self.source.is_irreducible() {
            return Err(CodeError::NotIrreducible);
        }
        let fp = self.fiber_product();
        let pair = &fp.pair;
        let m = pair.symbol_count();
        // Forward BFS from all diagonal vertices, backward BFS to them.
        let bfs = |backward: bool| -> (Vec<bool>, Vec<usize>) {
            let mut seen = vec![false; m];
            let mut parent = vec![usize::MAX; m];
            let mut queue = VecDeque::new();
            for s in 0..m {
                if fp.diagonal[s] {
                    seen[s] = true;
                    queue.push_back(s);
                }
            }
            while let Some(v) = queue.pop_front() {
                let next = if backward {
                    pair.predecessors(v)
                } else {
                    pair.successors(v)
                };
                for &w in next {
                    if !seen[w] {
                        seen[w] = true;
                        parent[w] = v;
                        queue.push_back(w);
                    }
                }
            }
            (seen, parent)
        };
        let (fwd_seen, fwd_parent) = bfs(false);
        let (bwd_seen, bwd_parent) = bfs(true);
        let hit = (0..m).find(|&p| !fp.diagonal[p] && fwd_seen[p] && bwd_seen[p]);
        let Some(p) = hit else {
            return Ok(FiniteToOneReport {
                finite_to_one: true,
                witness: None,
            });
        };
        // Reconstruct diagonal -> p -> diagonal through the parent chains.
        let mut head = vec![p];
        let mut v = p;
        while fwd_parent[v] != usize::MAX {
            v = fwd_parent[v];
            head.push(v);
        }
        head.reverse();
        let mut v = p;
        while bwd_parent[v] != usize::MAX {
            v = bwd_parent[v];
            head.push(v);
        }
        let upper: Vec<usize> = head.iter().map(|&q| fp.left.image(q)).collect();
        let lower: Vec<usize> = head.iter().map(|&q| fp.right.image(q)).collect();
        let image = self.apply(&upper);
        debug_assert_eq!(image, self.apply(&lower));
        Ok(FiniteToOneReport {
            finite_to_one: false,
            witness: Some(Diamond {
                upper,
                lower,
                image,
            }),
        })
    }

    /// Stabilised minimal path count over target words; for a finite-to-one
    /// code between irreducible shifts this is the almost-everywhere preimage
    /// count of fully supported ergodic measures.
    ///
    /// The search runs breadth-first over path-count profiles (counts of
    /// source paths per terminal symbol, saturating), so it closes after
    /// finitely many states. If the state space has not closed by word length
    /// `2·|source symbols|²` the search refuses to guess.
    pub fn degree(&self) -> Result<usize, CodeError> {
        if !self.source.is_irreducible() || !self.target.is_irreducible() {
            return Err(CodeError::NotIrreducible);
        }
        let report = self.is_finite_to_one()?;
        if !report.finite_to_one {
            return Err(CodeError::NotFiniteToOne);
        }
        let n = self.source.symbol_count();
        let word_cap = 2 * n * n;
        const SAT: u32 = 1 << 16;
        let mut frontier: BTreeSet<Vec<u32>> = BTreeSet::new();
        for t in 0..self.target.symbol_count() {
            let mut state = vec![0u32; n];
            let mut any = false;
            for (s, &img) in self.map.iter().enumerate() {
                if img == t {
                    state[s] = 1;
                    any = true;
                }
            }
            if any {
                frontier.insert(state);
            }
        }
        let total = |state: &[u32]| -> u32 { state.iter().fold(0u32, |a, &c| a.saturating_add(c)) };
        let mut best = frontier.iter().map(|s| total(s)).min().unwrap_or(0);
        let mut visited = frontier.clone();
        for _len in 1..=word_cap {
            let mut next: BTreeSet<Vec<u32>> = BTreeSet::new();
            for state in &frontier {
                for t in 0..self.target.symbol_count() {
                    let mut succ = vec![0u32; n];
                    let mut any = false;
                    for (s, &c) in state.iter().enumerate() {
                        if c == 0 {
                            continue;
                        }
                        for &s2 in self.source.successors(s) {
                            if self.map[s2] == t {
                                succ[s2] = succ[s2].saturating_add(c).min(SAT);
                                any = true;
                            }
                        }
                    }
                    if any && !visited.contains(&succ) {
                        best = best.min(total(&succ));
                        visited.insert(succ.clone());
                        next.insert(succ);
                    }
                }
            }
            if next.is_empty() {
                return Ok(best as usize);
            }
            frontier = next;
        }
        Err(CodeError::DegreeInconclusive { word_cap })
    }
}

/// Pair graph of a code with its coordinate projections.
#[derive(Debug, Clone)]
pub struct FiberProduct {
    pub pair: Arc<Sft>,
    pub left: OneBlockCode,
    pub right: OneBlockCode,
    /// Flag per pair symbol: is it on the diagonal?
    pub diagonal: Vec<bool>,
}

/// Overlap data for the product coding graph: an explicit pair list or a
/// predicate. Predicates are evaluated once per (base, fiber) pair and the
/// results are kept, so callbacks run exactly once per key.
pub enum Overlap<'a> {
    All,
    Pairs(&'a [(&'a str, &'a str)]),
    Predicate(&'a dyn Fn(&str, &str) -> bool),
}

/// The coding graph of a base×fiber skew pairing: vertices are overlapping
/// `(base, fiber)` symbol pairs, edges require a base edge and a fiber edge,
/// and the two coordinate projections are 1-block codes.
#[derive(Debug, Clone)]
pub struct ProductCodingGraph {
    pub base: Arc<Sft>,
    pub fiber: Arc<Sft>,
    pub product: Arc<Sft>,
    pub proj_base: OneBlockCode,
    pub proj_fiber: OneBlockCode,
    /// Product symbol -> (base index, fiber index).
    pub pairs: Vec<(usize, usize)>,
}

/// Surjectivity findings after restricting to an irreducible component.
#[derive(Debug, Clone)]
pub struct CoreReport {
    pub fiber_symbols_covered: bool,
    pub fiber_edges_covered: bool,
    pub base_symbols_covered: bool,
    pub base_edges_covered: bool,
}

/// Build the product coding graph of `base` and `fiber` from an overlap
/// relation, pruned to its essential part.
///
/// `fiber_edge_ok` optionally filters fiber edges (pass `None` to accept the
/// fiber graph's own edge relation unchanged).
pub fn build_product_coding_graph(
    base: &Arc<Sft>,
    fiber: &Arc<Sft>,
    overlap: Overlap<'_>,
    fiber_edge_ok: Option<&dyn Fn(&str, &str) -> bool>,
) -> Result<ProductCodingGraph, CodeError> {
    let nb = base.symbol_count();
    let nf = fiber.symbol_count();
    // Memoised overlap table, evaluated once per key.
    let mut table = vec![false; nb * nf];
    match overlap {
        Overlap::All => table.iter_mut().for_each(|x| *x = true),
        Overlap::Pairs(list) => {
            for (p, r) in list {
                let bi = base
                    .index_of(p)
                    .ok_or_else(|| ShiftError::UnknownSymbol((*p).to_string()))?;
                let fi = fiber
                    .index_of(r)
                    .ok_or_else(|| ShiftError::UnknownSymbol((*r).to_string()))?;
                table[bi * nf + fi] = true;
            }
        }
        Overlap::Predicate(f) => {
            for bi in 0..nb {
                for fi in 0..nf {
                    table[bi * nf + fi] = f(base.symbol(bi), fiber.symbol(fi));
                }
            }
        }
    }
    let mut pairs = Vec::new();
    let mut pair_id = BTreeMap::new();
    for bi in 0..nb {
        for fi in 0..nf {
            if table[bi * nf + fi] {
                pair_id.insert((bi, fi), pairs.len());
                pairs.push((bi, fi));
            }
        }
    }
    if pairs.is_empty() {
        return Err(CodeError::EmptyProduct);
    }
    let mut edges = Vec::new();
    for (i, &(bi, fi)) in pairs.iter().enumerate() {
        for &b2 in base.successors(bi) {
            for &f2 in fiber.successors(fi) {
                if let Some(ok) = fiber_edge_ok {
                    if !ok(fiber.symbol(fi), fiber.symbol(f2)) {
                        continue;
                    }
                }
                if let Some(&j) = pair_id.get(&(b2, f2)) {
                    edges.push((i, j));
                }
            }
        }
    }
    let symbols: Vec<String> = pairs
        .iter()
        .map(|&(bi, fi)| format!("({},{})", base.symbol(bi), fiber.symbol(fi)))
        .collect();
    let product = match Sft::from_indexed(symbols, edges) {
        Ok(s) => Arc::new(s),
        Err(ShiftError::EmptyAfterPruning) => return Err(CodeError::EmptyProduct),
        Err(e) => return Err(e.into()),
    };
    // Pruning may have dropped pairs; recover the survivors in order.
    let survivors: Vec<(usize, usize)> = pairs
        .iter()
        .copied()
        .filter(|&(bi, fi)| {
            product
                .index_of(&format!("({},{})", base.symbol(bi), fiber.symbol(fi)))
                .is_some()
        })
        .collect();
    let proj_base = OneBlockCode::new(
        Arc::clone(&product),
        Arc::clone(base),
        survivors.iter().map(|&(bi, _)| bi).collect(),
    )
    .expect("product edges project to base edges");
    let proj_fiber = OneBlockCode::new(
        Arc::clone(&product),
        Arc::clone(fiber),
        survivors.iter().map(|&(_, fi)| fi).collect(),
    )
    .expect("product edges project to fiber edges");
    Ok(ProductCodingGraph {
        base: Arc::clone(base),
        fiber: Arc::clone(fiber),
        product,
        proj_base,
        proj_fiber,
        pairs: survivors,
    })
}

/// Restrict a product coding graph to the maximal irreducible component
/// containing `seed_symbol`, re-derive the projections, and report whether
/// they stay surjective onto the factors.
pub fn irreducible_core(
    pcg: &ProductCodingGraph,
    seed_symbol: &str,
) -> Result<(ProductCodingGraph, CoreReport), CodeError> {
    let seed = pcg
        .product
        .index_of(seed_symbol)
        .ok_or_else(|| CodeError::UnknownSeed(seed_symbol.to_string()))?;
    let scc: SccDecomposition = pcg.product.strongly_connected_components();
    let id = scc.component_of[seed];
    let core = Arc::new(pcg.product.restrict_to_component(&scc, id)?);
    let keep: Vec<usize> = scc.components[id].clone();
    let pairs: Vec<(usize, usize)> = keep.iter().map(|&v| pcg.pairs[v]).collect();
    let proj_base = OneBlockCode::new(
        Arc::clone(&core),
        Arc::clone(&pcg.base),
        pairs.iter().map(|&(bi, _)| bi).collect(),
    )?;
    let proj_fiber = OneBlockCode::new(
        Arc::clone(&core),
        Arc::clone(&pcg.fiber),
        pairs.iter().map(|&(_, fi)| fi).collect(),
    )?;
    let rb = proj_base.report();
    let rf = proj_fiber.report();
    let restricted = ProductCodingGraph {
        base: Arc::clone(&pcg.base),
        fiber: Arc::clone(&pcg.fiber),
        product: core,
        proj_base,
        proj_fiber,
        pairs,
    };
    Ok((
        restricted,
        CoreReport {
            fiber_symbols_covered: rf.symbols_covered,
            fiber_edges_covered: rf.edges_covered,
            base_symbols_covered: rb.symbols_covered,
            base_edges_covered: rb.edges_covered,
        },
    ))
}

/// The level-`n` truncation of a code `π : X -> Y`.
///
/// Atoms of the level-`n` partition: the first `n` source symbols as
/// singletons (in alphabet order), then one merged atom per label class of
/// the remaining symbols. The factor `π` splits through the truncation:
/// `π = π_n ∘ proj` holds symbol-exactly.
#[derive(Debug, Clone)]
pub struct Truncation {
    pub level: usize,
    /// Source symbol -> label (target symbol) under the original code.
    pub gamma: Vec<usize>,
    /// Source symbol -> atom index.
    pub atom_of: Vec<usize>,
    pub x_n: Arc<Sft>,
    /// `X -> X_n`.
    pub proj: OneBlockCode,
    /// `X_n -> Y` labelling each atom.
    pub pi_n: OneBlockCode,
}

/// Build the level-`n` truncation of `code` (see [`Truncation`]). Level `0`
/// keeps only the label distinctions; level `|alphabet|` reproduces the
/// source shift.
pub fn truncate_alphabet(code: &OneBlockCode, n: usize) -> Result<Truncation, CodeError> {
    let x = code.source();
    let y = code.target();
    let alphabet = x.symbol_count();
    if n > alphabet {
        return Err(CodeError::BadLevel { level: n, alphabet });
    }
    let gamma: Vec<usize> = code.symbol_map().to_vec();
    // Singleton atoms first, then merged atoms ordered by label.
    let mut atom_of = vec![usize::MAX; alphabet];
    let mut atom_labels: Vec<String> = Vec::new();
    let mut atom_gamma: Vec<usize> = Vec::new();
    for s in 0..n {
        atom_of[s] = atom_labels.len();
        atom_labels.push(x.symbol(s).to_string());
        atom_gamma.push(gamma[s]);
    }
    for t in 0..y.symbol_count() {
        let members: Vec<usize> = (n..alphabet).filter(|&s| gamma[s] == t).collect();
        if members.is_empty() {
            continue;
        }
        let id = atom_labels.len();
        for &s in &members {
            atom_of[s] = id;
        }
        atom_labels.push(format!("rest:{}", y.symbol(t)));
        atom_gamma.push(t);
    }
    let mut edges = BTreeSet::new();
    for &(a, b) in x.edges() {
        edges.insert((atom_of[a], atom_of[b]));
    }
    let x_n = Arc::new(Sft::from_indexed(
        atom_labels.clone(),
        edges.into_iter().collect(),
    )?);
    debug_assert_eq!(x_n.symbol_count(), atom_labels.len());
    let proj = OneBlockCode::new(Arc::clone(x), Arc::clone(&x_n), atom_of.clone())?;
    let pi_n = OneBlockCode::new(Arc::clone(&x_n), Arc::clone(y), atom_gamma)?;
    Ok(Truncation {
        level: n,
        gamma,
        atom_of,
        x_n,
        proj,
        pi_n,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn four_to_two() -> OneBlockCode {
        let x = Arc::new(Sft::full_shift(4));
        let y = Arc::new(Sft::from_strs(
            &["a", "b"],
            &[("a", "a"), ("a", "b"), ("b", "a"), ("b", "b")],
        )
        .unwrap());
        OneBlockCode::from_pairs(x, y, &[("0", "a"), ("1", "a"), ("2", "b"), ("3", "b")]).unwrap()
    }

    #[test]
    fn identity_code_is_onto() {
        let x = Arc::new(Sft::golden_mean());
        let c = OneBlockCode::identity(&x);
        let r = c.report();
        assert!(r.surjective());
    }

    #[test]
    fn four_to_two_is_valid() {
        let c = four_to_two();
        assert!(c.report().surjective());
        assert_eq!(c.apply(&[0, 1, 2, 3]), vec![0, 0, 1, 1]);
    }

    #[test]
    fn golden_mean_into_full_shift_misses_an_edge() {
        let x = Arc::new(Sft::golden_mean());
        let y = Arc::new(Sft::full_shift(2));
        let c = OneBlockCode::from_pairs(x, y, &[("0", "0"), ("1", "1")]).unwrap();
        let r = c.report();
        assert!(r.symbols_covered);
        assert!(!r.edges_covered);
        assert_eq!(r.uncovered_edges, vec![("1".to_string(), "1".to_string())]);
    }

    #[test]
    fn invalid_edge_image_is_reported() {
        // Map golden mean onto a graph lacking the image of (0,0).
        let x = Arc::new(Sft::golden_mean());
        let y = Arc::new(Sft::from_strs(&["a", "b"], &[("a", "b"), ("b", "a"), ("b", "b")]).unwrap());
        let err =
            OneBlockCode::from_pairs(x, y, &[("0", "a"), ("1", "b")]).unwrap_err();
        assert!(matches!(err, CodeError::EdgeNotPreserved(..)));
    }

    #[test]
    fn identity_is_finite_to_one_with_degree_one() {
        let x = Arc::new(Sft::golden_mean());
        let c = OneBlockCode::identity(&x);
        assert!(c.is_finite_to_one().unwrap().finite_to_one);
        assert_eq!(c.degree().unwrap(), 1);
    }

    #[test]
    fn full_fiber_collapse_has_a_diamond() {
        let c = four_to_two();
        let r = c.is_finite_to_one().unwrap();
        assert!(!r.finite_to_one);
        let d = r.witness.unwrap();
        assert_eq!(c.apply(&d.upper), c.apply(&d.lower));
        assert_eq!(d.upper.first(), d.lower.first());
        assert_eq!(d.upper.last(), d.lower.last());
        assert_ne!(d.upper, d.lower);
        assert!(c.source().is_admissible(&d.upper));
        assert!(c.source().is_admissible(&d.lower));
        // The canonical least witness: 0,0,0 vs 0,1,0 over image a,a,a.
        assert_eq!(d.upper, vec![0, 0, 0]);
        assert_eq!(d.lower, vec![0, 1, 0]);
        assert_eq!(d.image, vec![0, 0, 0]);
        assert!(matches!(c.degree(), Err(CodeError::NotFiniteToOne)));
    }

    /// Brute-force oracle: minimum number of source paths over target words of
    /// length `<= max_len` (admissible words with at least one path).
    fn min_path_count(code: &OneBlockCode, max_len: usize) -> usize {
        let y = code.target();
        let x = code.source();
        let mut words: Vec<Vec<usize>> = (0..y.symbol_count()).map(|t| vec![t]).collect();
        let mut best = usize::MAX;
        for _ in 0..max_len {
            for w in &words {
                let mut paths: Vec<Vec<usize>> = (0..x.symbol_count())
                    .filter(|&s| code.image(s) == w[0])
                    .map(|s| vec![s])
                    .collect();
                for &t in &w[1..] {
                    let mut next = Vec::new();
                    for p in &paths {
                        let last = *p.last().unwrap();
                        for &s2 in x.successors(last) {
                            if code.image(s2) == t {
                                let mut q = p.clone();
                                q.push(s2);
                                next.push(q);
                            }
                        }
                    }
                    paths = next;
                }
                if !paths.is_empty() {
                    best = best.min(paths.len());
                }
            }
            let mut next_words = Vec::new();
            for w in &words {
                let last = *w.last().unwrap();
                for &t in y.successors(last) {
                    let mut v = w.clone();
                    v.push(t);
                    next_words.push(v);
                }
            }
            words = next_words;
        }
        best
    }

    #[test]
    fn block_conjugacy_has_degree_one() {
        let x = Arc::new(Sft::golden_mean());
        let b = x.higher_block(2).unwrap();
        let c = OneBlockCode::new(
            Arc::clone(&b.block),
            Arc::clone(&x),
            b.symbol_map.clone(),
        )
        .unwrap();
        assert!(c.is_finite_to_one().unwrap().finite_to_one);
        assert_eq!(c.degree().unwrap(), 1);
        assert_eq!(min_path_count(&c, 8), 1);
    }

    #[test]
    fn two_disjoint_copies_have_degree_two() {
        // Two copies of the golden mean mapped down by forgetting the copy.
        let x = Arc::new(
            Sft::from_strs(
                &["0a", "1a", "0b", "1b"],
                &[
                    ("0a", "0a"),
                    ("0a", "1a"),
                    ("1a", "0a"),
                    ("0b", "0b"),
                    ("0b", "1b"),
                    ("1b", "0b"),
                ],
            )
            .unwrap(),
        );
        // Note: X is reducible (two components), so pass each component
        // through the irreducibility precondition via a connected variant:
        // instead check the path-count oracle agrees on the full graph and
        // the degree API on one where the copies are glued through Y itself.
        let y = Arc::new(Sft::golden_mean());
        let c = OneBlockCode::from_pairs(
            Arc::clone(&x),
            Arc::clone(&y),
            &[("0a", "0"), ("1a", "1"), ("0b", "0"), ("1b", "1")],
        )
        .unwrap();
        assert_eq!(min_path_count(&c, 6), 2);
        assert!(matches!(c.degree(), Err(CodeError::NotIrreducible)));
    }

    #[test]
    fn degree_matches_bruteforce_on_conjugacies() {
        for base in [Sft::golden_mean(), Sft::full_shift(2)] {
            let x = Arc::new(base);
            for m in 2..=3 {
                let b = x.higher_block(m).unwrap();
                let c = OneBlockCode::new(
                    Arc::clone(&b.block),
                    Arc::clone(&x),
                    b.symbol_map.clone(),
                )
                .unwrap();
                assert_eq!(c.degree().unwrap(), min_path_count(&c, 8));
            }
        }
    }

    #[test]
    fn fiber_product_of_identity_is_diagonal() {
        let x = Arc::new(Sft::golden_mean());
        let fp = OneBlockCode::identity(&x).fiber_product();
        assert_eq!(fp.pair.symbol_count(), x.symbol_count());
        assert_eq!(fp.pair.edge_count(), x.edge_count());
        assert!(fp.diagonal.iter().all(|&d| d));
    }

    #[test]
    fn fiber_product_of_full_collapse() {
        let fp = four_to_two().fiber_product();
        assert_eq!(fp.pair.symbol_count(), 8);
        assert_eq!(fp.diagonal.iter().filter(|&&d| d).count(), 4);
    }

    #[test]
    fn product_coding_graph_full_overlap() {
        let base = Arc::new(Sft::golden_mean());
        let fiber = Arc::new(Sft::full_shift(2));
        let pcg = build_product_coding_graph(&base, &fiber, Overlap::All, None).unwrap();
        assert_eq!(pcg.product.symbol_count(), 4);
        assert_eq!(pcg.product.edge_count(), base.edge_count() * fiber.edge_count());
        assert!(pcg.proj_base.report().surjective());
        assert!(pcg.proj_fiber.report().surjective());
    }

    #[test]
    fn product_coding_graph_empty_overlap() {
        let base = Arc::new(Sft::golden_mean());
        let fiber = Arc::new(Sft::full_shift(2));
        let none = |_: &str, _: &str| false;
        assert!(matches!(
            build_product_coding_graph(&base, &fiber, Overlap::Predicate(&none), None),
            Err(CodeError::EmptyProduct)
        ));
    }

    #[test]
    fn product_coding_graph_matches_enumeration() {
        let base = Arc::new(Sft::full_shift(2));
        let fiber = Arc::new(Sft::from_strs(
            &["p", "q", "r"],
            &[("p", "q"), ("q", "r"), ("r", "p"), ("r", "q")],
        )
        .unwrap());
        let olap = [("0", "p"), ("0", "q"), ("1", "q"), ("1", "r")];
        let pcg =
            build_product_coding_graph(&base, &fiber, Overlap::Pairs(&olap), None).unwrap();
        // Brute-force enumeration over all pairs and pair edges.
        let mut want_syms = Vec::new();
        for (b, f) in &olap {
            want_syms.push(format!("({b},{f})"));
        }
        want_syms.sort();
        let mut got_syms: Vec<String> = pcg.product.symbols().to_vec();
        got_syms.sort();
        assert_eq!(got_syms, want_syms);
        let mut want_edges = 0;
        for &(b1, f1) in &olap {
            for &(b2, f2) in &olap {
                let bi1 = base.index_of(b1).unwrap();
                let bi2 = base.index_of(b2).unwrap();
                let fi1 = fiber.index_of(f1).unwrap();
                let fi2 = fiber.index_of(f2).unwrap();
                if base.has_edge(bi1, bi2) && fiber.has_edge(fi1, fi2) {
                    want_edges += 1;
                }
            }
        }
        assert_eq!(pcg.product.edge_count(), want_edges);
    }

    #[test]
    fn proj_images_of_product_paths_are_admissible() {
        let base = Arc::new(Sft::golden_mean());
        let fiber = Arc::new(Sft::from_strs(
            &["p", "q"],
            &[("p", "q"), ("q", "p"), ("q", "q")],
        )
        .unwrap());
        let pcg = build_product_coding_graph(&base, &fiber, Overlap::All, None).unwrap();
        // Exhaustive product paths of length <= 6.
        let mut paths: Vec<Vec<usize>> =
            (0..pcg.product.symbol_count()).map(|s| vec![s]).collect();
        for _ in 0..5 {
            let mut next = Vec::new();
            for p in &paths {
                let last = *p.last().unwrap();
                for &s in pcg.product.successors(last) {
                    let mut q = p.clone();
                    q.push(s);
                    next.push(q);
                }
            }
            for p in &next {
                assert!(pcg.base.is_admissible(&pcg.proj_base.apply(p)));
                assert!(pcg.fiber.is_admissible(&pcg.proj_fiber.apply(p)));
            }
            paths = next;
        }
    }

    #[test]
    fn irreducible_core_cases() {
        let base = Arc::new(Sft::golden_mean());
        let fiber = Arc::new(Sft::full_shift(2));
        let pcg = build_product_coding_graph(&base, &fiber, Overlap::All, None).unwrap();
        let (core, report) = irreducible_core(&pcg, "(0,0)").unwrap();
        assert_eq!(core.product.symbol_count(), pcg.product.symbol_count());
        assert!(report.fiber_symbols_covered && report.fiber_edges_covered);

        // A disconnected overlap: {0}x{0} and {1}x{1} give two isolated
        // self-loop-free pairs except where the graphs allow loops.
        let b2 = Arc::new(Sft::from_strs(&["u", "v"], &[("u", "u"), ("v", "v")]).unwrap());
        let f2 = Arc::new(Sft::from_strs(&["p", "q"], &[("p", "p"), ("q", "q")]).unwrap());
        let pcg2 = build_product_coding_graph(&b2, &f2, Overlap::All, None).unwrap();
        let (core2, rep2) = irreducible_core(&pcg2, "(v,q)").unwrap();
        assert_eq!(core2.product.symbol_count(), 1);
        assert_eq!(core2.product.symbol(0), "(v,q)");
        assert!(!rep2.fiber_symbols_covered);
    }

    fn six_over_two() -> OneBlockCode {
        let x = Arc::new(Sft::full_shift(6));
        let y = Arc::new(Sft::full_shift(2));
        let map = vec![0, 0, 0, 1, 1, 1];
        OneBlockCode::new(x, y, map).unwrap()
    }

    #[test]
    fn truncation_levels() {
        let code = six_over_two();
        let full = truncate_alphabet(&code, 6).unwrap();
        assert_eq!(full.x_n.symbol_count(), 6);
        assert_eq!(full.x_n.edge_count(), 36);

        let zero = truncate_alphabet(&code, 0).unwrap();
        assert_eq!(zero.x_n.symbol_count(), 2);

        let two = truncate_alphabet(&code, 2).unwrap();
        assert_eq!(two.x_n.symbol_count(), 4);
        // Edges by brute-force atom transition check.
        let mut want = BTreeSet::new();
        for &(a, b) in code.source().edges() {
            want.insert((two.atom_of[a], two.atom_of[b]));
        }
        assert_eq!(two.x_n.edge_count(), want.len());

        assert!(matches!(
            truncate_alphabet(&code, 7),
            Err(CodeError::BadLevel { .. })
        ));
    }

    #[test]
    fn truncation_commutes_symbolwise() {
        let code = six_over_two();
        for n in 0..=6 {
            let t = truncate_alphabet(&code, n).unwrap();
            let composed = t.proj.compose(&t.pi_n).unwrap();
            assert_eq!(composed.symbol_map(), code.symbol_map());
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        /// 1-block codes commute with the shift on sampled admissible words.
        #[test]
        fn code_commutes_with_shift(seed in 0u64..1000) {
            let c = four_to_two();
            let rng = crate::rng::CounterRng::new(seed, 77);
            let mut s = crate::rng::RngStream::new(rng);
            let x = c.source();
            let mut word = vec![(s.next_f64() * x.symbol_count() as f64) as usize];
            for _ in 0..20 {
                let last = *word.last().unwrap();
                let succ = x.successors(last);
                word.push(succ[(s.next_f64() * succ.len() as f64) as usize]);
            }
            let image = c.apply(&word);
            let shifted = c.apply(&word[1..]);
            prop_assert_eq!(&image[1..], shifted.as_slice());
            prop_assert!(c.target().is_admissible(&image));
        }
    }
}
