//! Stationary Markov measures on subshifts of finite type.
//!
//! A [`MarkovMeasure`] is an edge-frequency vector `q` on its host graph:
//! nonnegative, summing to one, with balanced flow at every symbol (inbound
//! mass equals outbound mass within `1e-12`). Its entropy rate is
//!
//! ```text
//! h(q) = Σ_e ψ(q(e)) − Σ_v ψ(m(v)),     ψ(t) = −t·log t,  ψ(0) = 0,
//! ```
//!
//! with `m(v)` the outbound symbol mass — the conditional entropy of the next
//! symbol given the current one, in nats.
//!
//! Pushforwards under 1-block codes produce [`HiddenMarkovMeasure`]s whose
//! target edge marginal is again stationary; the Abramov–Rokhlin difference
//! `h(μ) − h(ν)` is exposed as [`relative_entropy`] for measures that are
//! genuine lifts.

use std::sync::Arc;

use thiserror::Error;

use crate::code::OneBlockCode;
use crate::rng::{CounterRng, RngStream};
use crate::shift::{Sft, ShiftError};

pub const STATIONARITY_TOL: f64 = 1e-12;
pub const LIFT_TOL: f64 = 1e-9;

/// ψ(t) = −t log t with ψ(0) = 0 by continuity.
#[inline]
pub fn psi(t: f64) -> f64 {
    if t <= 0.0 {
        0.0
    } else {
        -t * t.ln()
    }
}

/// Binary entropy H(β) in nats.
pub fn binary_entropy(beta: f64) -> f64 {
    psi(beta) + psi(1.0 - beta)
}

#[derive(Debug, Error)]
pub enum MeasureError {
    #[error("edge frequencies have length {got}, host has {want} edges")]
    LengthMismatch { got: usize, want: usize },
    #[error("negative frequency {value:.3e} on edge ({0}, {1})", .edge.0, .edge.1)]
    NegativeFrequency { edge: (String, String), value: f64 },
    #[error("frequencies sum to {sum}, not 1")]
    NotNormalized { sum: f64 },
    #[error("flow imbalance {residual:.3e} at symbol `{symbol}`")]
    NotStationary { symbol: String, residual: f64 },
    #[error("unsupported edge weight {value:.3e} on ({0}, {1})", .edge.0, .edge.1)]
    UnsupportedEdgeWeight { edge: (String, String), value: f64 },
    #[error("transition row at `{symbol}` sums to {sum}, not 1")]
    RowNotStochastic { symbol: String, sum: f64 },
    #[error("support has {recurrent} recurrent components; pass an explicit component choice")]
    ReducibleAmbiguity { recurrent: usize },
    #[error("no such recurrent component: {0}")]
    NoSuchComponent(usize),
    #[error("measure is not ergodic (support spans more than one component)")]
    NotErgodic,
    #[error("measure host does not match the code's source shift")]
    CodeMismatch,
    #[error("not a lift: worst edge ({0}, {1}) has marginal residual {residual:.3e}", .edge.0, .edge.1)]
    NotALift { edge: (String, String), residual: f64 },
    #[error("bernoulli weights must cover every host symbol")]
    BadBernoulli,
    #[error(transparent)]
    Shift(#[from] ShiftError),
}

/// A stationary edge-frequency measure on an [`Sft`].
#[derive(Debug, Clone)]
pub struct MarkovMeasure {
    host: Arc<Sft>,
    edge_freq: Vec<f64>,
}

impl MarkovMeasure {
    /// Validate and wrap an edge-frequency vector (aligned to `host.edges()`).
    pub fn from_edge_frequencies(
        host: Arc<Sft>,
        edge_freq: Vec<f64>,
    ) -> Result<Self, MeasureError> {
        if edge_freq.len() != host.edge_count() {
            return Err(MeasureError::LengthMismatch {
                got: edge_freq.len(),
                want: host.edge_count(),
            });
        }
        for (e, &q) in edge_freq.iter().enumerate() {
            if !(q >= 0.0) {
                return Err(MeasureError::NegativeFrequency {
                    edge: host.edge_label(e),
                    value: q,
                });
            }
        }
        let sum: f64 = edge_freq.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(MeasureError::NotNormalized { sum });
        }
        let m = MarkovMeasure { host, edge_freq };
        let (sym, res) = m.worst_flow_imbalance();
        if res > STATIONARITY_TOL {
            return Err(MeasureError::NotStationary {
                symbol: m.host.symbol(sym).to_string(),
                residual: res,
            });
        }
        Ok(m)
    }

    /// The Parry measure (measure of maximal entropy) of an irreducible host:
    /// `q(a -> b) = l(a)·r(b)/λ` from the Perron data, so the transition
    /// matrix is `p(a -> b) = r(b)/(λ·r(a))`.
    pub fn parry(host: &Arc<Sft>) -> Result<Self, MeasureError> {
        let p = host.perron()?;
        let mut q: Vec<f64> = host
            .edges()
            .iter()
            .map(|&(a, b)| p.left[a] * p.right[b] / p.value)
            .collect();
        let s: f64 = q.iter().sum();
        q.iter_mut().for_each(|x| *x /= s);
        Self::from_edge_frequencies(Arc::clone(host), q)
    }

    /// The i.i.d. measure with symbol law `probs`; requires every edge the
    /// product law charges to exist in the host.
    pub fn bernoulli(host: &Arc<Sft>, probs: &[f64]) -> Result<Self, MeasureError> {
        if probs.len() != host.symbol_count() {
            return Err(MeasureError::BadBernoulli);
        }
        for a in 0..probs.len() {
            for b in 0..probs.len() {
                if probs[a] > 0.0 && probs[b] > 0.0 && !host.has_edge(a, b) {
                    return Err(MeasureError::BadBernoulli);
                }
            }
        }
        let q = host
            .edges()
            .iter()
            .map(|&(a, b)| probs[a] * probs[b])
            .collect();
        Self::from_edge_frequencies(Arc::clone(host), q)
    }

    /// Stationary measure of row-stochastic transition weights (edge-aligned).
    ///
    /// The support of the weights may have several recurrent classes; the
    /// stationary law is unique only per class, so `component` selects one
    /// (indices follow the deterministic component order of the support
    /// subgraph restricted to its recurrent classes).
    pub fn stationary_from_transition(
        host: &Arc<Sft>,
        edge_weights: &[f64],
        component: Option<usize>,
    ) -> Result<Self, MeasureError> {
        if edge_weights.len() != host.edge_count() {
            return Err(MeasureError::LengthMismatch {
                got: edge_weights.len(),
                want: host.edge_count(),
            });
        }
        for (e, &w) in edge_weights.iter().enumerate() {
            if !(w >= 0.0) || !w.is_finite() {
                return Err(MeasureError::UnsupportedEdgeWeight {
                    edge: host.edge_label(e),
                    value: w,
                });
            }
        }
        let n = host.symbol_count();
        let mut row_sum = vec![0.0; n];
        for (e, &(a, _)) in host.edges().iter().enumerate() {
            row_sum[a] += edge_weights[e];
        }
        for v in 0..n {
            if (row_sum[v] - 1.0).abs() > 1e-12 {
                return Err(MeasureError::RowNotStochastic {
                    symbol: host.symbol(v).to_string(),
                    sum: row_sum[v],
                });
            }
        }
        // Recurrent classes of the support subgraph: strongly connected
        // components with no positive-weight edge leaving them.
        let support: Vec<(usize, usize)> = host
            .edges()
            .iter()
            .zip(edge_weights)
            .filter(|(_, &w)| w > 0.0)
            .map(|(&e, _)| e)
            .collect();
        let classes = recurrent_classes(n, &support);
        let chosen = match (component, classes.len()) {
            (_, 0) => return Err(MeasureError::ReducibleAmbiguity { recurrent: 0 }),
            (None, 1) => 0,
            (None, k) => return Err(MeasureError::ReducibleAmbiguity { recurrent: k }),
            (Some(c), k) => {
                if c >= k {
                    return Err(MeasureError::NoSuchComponent(c));
                }
                c
            }
        };
        let class = &classes[chosen];
        let pi = stationary_on_class(host, edge_weights, class);
        let mut q = vec![0.0; host.edge_count()];
        for (e, &(a, _)) in host.edges().iter().enumerate() {
            if class.contains(&a) {
                q[e] = pi[a] * edge_weights[e];
            }
        }
        let s: f64 = q.iter().sum();
        q.iter_mut().for_each(|x| *x /= s);
        Self::from_edge_frequencies(Arc::clone(host), q)
    }

    pub fn host(&self) -> &Arc<Sft> {
        &self.host
    }

    pub fn edge_freq(&self) -> &[f64] {
        &self.edge_freq
    }

    pub fn edge_frequency(&self, a: usize, b: usize) -> f64 {
        self.host.edge_id(a, b).map_or(0.0, |e| self.edge_freq[e])
    }

    /// Outbound mass per symbol.
    pub fn symbol_mass(&self) -> Vec<f64> {
        let mut m = vec![0.0; self.host.symbol_count()];
        for (e, &(a, _)) in self.host.edges().iter().enumerate() {
            m[a] += self.edge_freq[e];
        }
        m
    }

    /// Conditional transition probabilities, edge-aligned: `q(e)/m(src(e))`
    /// (zero where the source symbol carries no mass).
    pub fn transition_weights(&self) -> Vec<f64> {
        let m = self.symbol_mass();
        self.host
            .edges()
            .iter()
            .zip(&self.edge_freq)
            .map(|(&(a, _), &q)| if m[a] > 0.0 { q / m[a] } else { 0.0 })
            .collect()
    }

    fn worst_flow_imbalance(&self) -> (usize, f64) {
        let n = self.host.symbol_count();
        let mut inflow = vec![0.0; n];
        let mut outflow = vec![0.0; n];
        for (e, &(a, b)) in self.host.edges().iter().enumerate() {
            outflow[a] += self.edge_freq[e];
            inflow[b] += self.edge_freq[e];
        }
        let mut worst = (0, 0.0);
        for v in 0..n {
            let r = (inflow[v] - outflow[v]).abs();
            if r > worst.1 {
                worst = (v, r);
            }
        }
        worst
    }

    /// Symbols of the support subgraph, grouped into components. The support
    /// of a stationary measure always splits into strongly connected pieces.
    pub fn support_components(&self) -> Vec<Vec<usize>> {
        let support: Vec<(usize, usize)> = self
            .host
            .edges()
            .iter()
            .zip(&self.edge_freq)
            .filter(|(_, &q)| q > 0.0)
            .map(|(&e, _)| e)
            .collect();
        recurrent_classes(self.host.symbol_count(), &support)
    }

    /// Ergodic iff the support is a single irreducible component.
    pub fn is_ergodic(&self) -> bool {
        self.support_components().len() == 1
    }

    /// Entropy rate in nats: `Σ_e ψ(q) − Σ_v ψ(m)`.
    pub fn entropy_rate(&self) -> f64 {
        let edge_term: f64 = self.edge_freq.iter().map(|&q| psi(q)).sum();
        let mass_term: f64 = self.symbol_mass().iter().map(|&m| psi(m)).sum();
        edge_term - mass_term
    }

    /// Largest per-edge difference against another measure on the same host.
    pub fn max_edge_residual(&self, other: &MarkovMeasure) -> f64 {
        self.edge_freq
            .iter()
            .zip(&other.edge_freq)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    /// Push the measure through a 1-block code, exposing the target edge
    /// marginal. The marginal is exact as a 2-block law; the image process is
    /// itself Markov only in special cases.
    pub fn pushforward(&self, code: &OneBlockCode) -> Result<HiddenMarkovMeasure, MeasureError> {
        if **code.source() != *self.host {
            return Err(MeasureError::CodeMismatch);
        }
        let target = code.target();
        let mut q = vec![0.0; target.edge_count()];
        for (e, &(a, b)) in self.host.edges().iter().enumerate() {
            let te = target
                .edge_id(code.image(a), code.image(b))
                .expect("code validity guarantees image edges");
            q[te] += self.edge_freq[e];
        }
        let marginal = MarkovMeasure::from_edge_frequencies(Arc::clone(target), q)?;
        Ok(HiddenMarkovMeasure {
            upstream: self.clone(),
            code: code.clone(),
            marginal,
        })
    }

    /// Sample a path of `length` symbols. The initial symbol follows the
    /// stationary law; transitions follow the conditional edge weights. All
    /// randomness is counter-based on `(seed, position)`.
    pub fn sample_path(&self, length: usize, seed: u64) -> Result<Vec<usize>, MeasureError> {
        if !self.is_ergodic() {
            return Err(MeasureError::NotErgodic);
        }
        let rng = CounterRng::new(seed, 0x70617468);
        let m = self.symbol_mass();
        let n = self.host.symbol_count();
        // Conditional rows laid out densely for the walk.
        let mut rows = vec![vec![]; n];
        for v in 0..n {
            let succ = self.host.successors(v);
            let mut weights = Vec::with_capacity(succ.len());
            for &b in succ {
                weights.push(self.edge_frequency(v, b));
            }
            rows[v] = weights;
        }
        let mut path = Vec::with_capacity(length);
        if length == 0 {
            return Ok(path);
        }
        let mut s = RngStream::new(rng.substream(0));
        let mut cur = s.next_weighted(&m);
        path.push(cur);
        for i in 1..length {
            let mut s = RngStream::new(rng.substream(i as u64));
            let pick = s.next_weighted(&rows[cur]);
            cur = self.host.successors(cur)[pick];
            path.push(cur);
        }
        Ok(path)
    }
}

/// Recurrent classes (closed strongly connected components) of a support
/// subgraph, ordered by least contained symbol.
fn recurrent_classes(n: usize, support: &[(usize, usize)]) -> Vec<Vec<usize>> {
    if support.is_empty() {
        return Vec::new();
    }
    let symbols: Vec<String> = (0..n).map(|i| i.to_string()).collect();
    let Ok(g) = Sft::from_indexed(symbols, support.to_vec()) else {
        return Vec::new();
    };
    // Map pruned indices back to the original numbering.
    let back: Vec<usize> = g
        .symbols()
        .iter()
        .map(|s| s.parse::<usize>().unwrap())
        .collect();
    let scc = g.strongly_connected_components();
    let mut classes = Vec::new();
    for (ci, comp) in scc.components.iter().enumerate() {
        if scc.trivial[ci] {
            continue;
        }
        let closed = !scc.dag.iter().any(|&(from, _)| from == ci);
        if closed {
            classes.push(comp.iter().map(|&v| back[v]).collect());
        }
    }
    classes
}

/// Solve `π P = π`, `Σπ = 1` restricted to one recurrent class.
fn stationary_on_class(host: &Arc<Sft>, edge_weights: &[f64], class: &[usize]) -> Vec<f64> {
    let k = class.len();
    let pos: std::collections::BTreeMap<usize, usize> =
        class.iter().enumerate().map(|(i, &v)| (v, i)).collect();
    let mut m = nalgebra::DMatrix::<f64>::zeros(k, k);
    for (e, &(a, b)) in host.edges().iter().enumerate() {
        if let (Some(&ia), Some(&ib)) = (pos.get(&a), pos.get(&b)) {
            // (P^T - I) π = 0
            m[(ib, ia)] += edge_weights[e];
        }
    }
    for i in 0..k {
        m[(i, i)] -= 1.0;
    }
    // Replace the last equation with the normalisation Σπ = 1.
    for j in 0..k {
        m[(k - 1, j)] = 1.0;
    }
    let mut rhs = nalgebra::DVector::<f64>::zeros(k);
    rhs[k - 1] = 1.0;
    let sol = m
        .lu()
        .solve(&rhs)
        .expect("stationary system is nonsingular on a recurrent class");
    let mut pi = vec![0.0; host.symbol_count()];
    for (i, &v) in class.iter().enumerate() {
        pi[v] = sol[i].max(0.0);
    }
    pi
}

/// A measure pushed through a 1-block code, with its stationary target edge
/// marginal.
#[derive(Debug, Clone)]
pub struct HiddenMarkovMeasure {
    pub upstream: MarkovMeasure,
    pub code: OneBlockCode,
    marginal: MarkovMeasure,
}

impl HiddenMarkovMeasure {
    pub fn marginal(&self) -> &MarkovMeasure {
        &self.marginal
    }
}

/// Abramov–Rokhlin relative entropy `h(μ) − h(ν)` of a lift `μ` over `ν`.
///
/// The lift property is checked on the edge marginal: each target edge
/// frequency of `pushforward(μ)` must match `ν` within `tol`.
pub fn relative_entropy_with_tol(
    mu: &MarkovMeasure,
    nu: &MarkovMeasure,
    code: &OneBlockCode,
    tol: f64,
) -> Result<f64, MeasureError> {
    let push = mu.pushforward(code)?;
    if **code.target() != **nu.host() {
        return Err(MeasureError::CodeMismatch);
    }
    let mut worst = (0usize, 0.0f64);
    for (e, (a, b)) in push
        .marginal()
        .edge_freq()
        .iter()
        .zip(nu.edge_freq())
        .enumerate()
    {
        let r = (a - b).abs();
        if r > worst.1 {
            worst = (e, r);
        }
    }
    if worst.1 > tol {
        return Err(MeasureError::NotALift {
            edge: nu.host().edge_label(worst.0),
            residual: worst.1,
        });
    }
    Ok(mu.entropy_rate() - nu.entropy_rate())
}

pub fn relative_entropy(
    mu: &MarkovMeasure,
    nu: &MarkovMeasure,
    code: &OneBlockCode,
) -> Result<f64, MeasureError> {
    relative_entropy_with_tol(mu, nu, code, LIFT_TOL)
}

/// A base measure extended by an independent i.i.d. fiber: the product lift.
#[derive(Debug, Clone)]
pub struct ProductLift {
    pub x: Arc<Sft>,
    /// Base projection `X -> Y`.
    pub code: OneBlockCode,
    pub lift: MarkovMeasure,
    /// Fiber alphabet size.
    pub fiber: usize,
}

/// Build `X = Y × {0..F}` with full fiber transitions, the base projection
/// code, and the lift `ν ⊗ Bernoulli(fiber_probs)`.
///
/// Product symbols are named `"y.f"`; the fiber marginal of the lift at every
/// position is exactly `fiber_probs`.
pub fn product_lift(nu: &MarkovMeasure, fiber_probs: &[f64]) -> Result<ProductLift, MeasureError> {
    let y = nu.host();
    let f = fiber_probs.len();
    let sum: f64 = fiber_probs.iter().sum();
    if f == 0 || (sum - 1.0).abs() > 1e-12 || fiber_probs.iter().any(|&p| p < 0.0) {
        return Err(MeasureError::BadBernoulli);
    }
    let symbols: Vec<String> = (0..y.symbol_count())
        .flat_map(|yi| (0..f).map(move |fi| (yi, fi)))
        .map(|(yi, fi)| format!("{}.{}", y.symbol(yi), fi))
        .collect();
    let mut pairs = Vec::new();
    for &(a, b) in y.edges() {
        for fa in 0..f {
            for fb in 0..f {
                pairs.push((a * f + fa, b * f + fb));
            }
        }
    }
    let x = Arc::new(Sft::from_indexed(symbols, pairs)?);
    let map: Vec<usize> = (0..x.symbol_count())
        .map(|s| {
            // Symbols are "(y).(f)"; index arithmetic is stable because no
            // pruning occurs on the product of essential graphs.
            s / f
        })
        .collect();
    let code = OneBlockCode::new(Arc::clone(&x), Arc::clone(y), map)
        .expect("product edges project to base edges");
    let q: Vec<f64> = x
        .edges()
        .iter()
        .map(|&(sa, sb)| {
            let (ya, fa) = (sa / f, sa % f);
            let (yb, fb) = (sb / f, sb % f);
            nu.edge_frequency(ya, yb) * fiber_probs[fa] * fiber_probs[fb]
        })
        .collect();
    let lift = MarkovMeasure::from_edge_frequencies(Arc::clone(&x), q)?;
    Ok(ProductLift {
        x,
        code,
        lift,
        fiber: f,
    })
}

/// Options for the empirical entropy estimator.
#[derive(Debug, Clone, Copy)]
pub struct EntropyOptions {
    /// Apply the Miller–Madow bias correction (default true).
    pub miller_madow: bool,
    pub bootstrap_resamples: usize,
    pub bootstrap_block: usize,
    pub bootstrap_seed: u64,
}

impl Default for EntropyOptions {
    fn default() -> Self {
        EntropyOptions {
            miller_madow: true,
            bootstrap_resamples: 32,
            bootstrap_block: 1000,
            bootstrap_seed: 0x626f_6f74,
        }
    }
}

/// Conditional block-entropy estimate with bootstrap error bars.
#[derive(Debug, Clone, Copy)]
pub struct EntropyEstimate {
    /// `Ĥ(ℓ) − Ĥ(ℓ−1)` in nats (Miller–Madow corrected by default).
    pub value: f64,
    /// Block-bootstrap standard error.
    pub std_error: f64,
    pub block_length: usize,
    pub path_length: usize,
    /// Set when the path is shorter than `100·|alphabet|^ℓ`; the standard
    /// error then includes the residual-bias allowance.
    pub short_path: bool,
}

fn block_entropy(path: &[usize], alphabet: usize, ell: usize, miller_madow: bool) -> f64 {
    if ell == 0 || path.len() < ell {
        return 0.0;
    }
    let cells = (alphabet as u128).pow(ell as u32);
    let n_blocks = path.len() - ell + 1;
    let mut plugin = 0.0;
    let mut observed = 0usize;
    if cells <= 1 << 24 {
        let mut counts = vec![0u32; cells as usize];
        let mut codeword = 0usize;
        for (i, &s) in path.iter().enumerate() {
            codeword = codeword * alphabet + s;
            if i + 1 >= ell {
                counts[codeword] += 1;
                codeword %= (alphabet as usize).pow((ell - 1) as u32);
            }
        }
        for &c in &counts {
            if c > 0 {
                observed += 1;
                plugin += psi(c as f64 / n_blocks as f64);
            }
        }
    } else {
        use std::collections::HashMap;
        let mut counts: HashMap<&[usize], u32> = HashMap::new();
        for w in path.windows(ell) {
            *counts.entry(w).or_insert(0) += 1;
        }
        for &c in counts.values() {
            observed += 1;
            plugin += psi(c as f64 / n_blocks as f64);
        }
    }
    if miller_madow {
        plugin + (observed.saturating_sub(1)) as f64 / (2.0 * n_blocks as f64)
    } else {
        plugin
    }
}

fn conditional_block_entropy(path: &[usize], alphabet: usize, ell: usize, mm: bool) -> f64 {
    block_entropy(path, alphabet, ell, mm) - block_entropy(path, alphabet, ell - 1, mm)
}

/// Estimate the entropy rate of the process behind `path` as the conditional
/// block entropy `Ĥ(ℓ) − Ĥ(ℓ−1)`, with a moving-block bootstrap standard
/// error. Works on any symbol path; no model is assumed.
pub fn empirical_entropy(path: &[usize], alphabet: usize, ell: usize) -> EntropyEstimate {
    empirical_entropy_opts(path, alphabet, ell, EntropyOptions::default())
}

pub fn empirical_entropy_opts(
    path: &[usize],
    alphabet: usize,
    ell: usize,
    opts: EntropyOptions,
) -> EntropyEstimate {
    assert!(ell >= 1, "block length must be at least 1");
    assert!(alphabet >= 1);
    let value = conditional_block_entropy(path, alphabet, ell, opts.miller_madow);
    let recommended = 100usize.saturating_mul((alphabet).saturating_pow(ell as u32));
    let short_path = path.len() < recommended;

    // Moving-block bootstrap: concatenate random blocks to the original
    // length and recompute the estimator.
    let block = opts.bootstrap_block.min(path.len().max(1));
    let n_blocks = path.len().div_ceil(block).max(1);
    let rng = CounterRng::new(opts.bootstrap_seed, 0x6273);
    let mut resamples = Vec::with_capacity(opts.bootstrap_resamples);
    for r in 0..opts.bootstrap_resamples {
        let mut s = RngStream::new(rng.substream(r as u64));
        let mut sample = Vec::with_capacity(n_blocks * block);
        for _ in 0..n_blocks {
            let start = if path.len() > block {
                (s.next_f64() * (path.len() - block) as f64) as usize
            } else {
                0
            };
            sample.extend_from_slice(&path[start..(start + block).min(path.len())]);
        }
        resamples.push(conditional_block_entropy(
            &sample,
            alphabet,
            ell,
            opts.miller_madow,
        ));
    }
    let mean = resamples.iter().sum::<f64>() / resamples.len().max(1) as f64;
    let var = resamples
        .iter()
        .map(|v| (v - mean) * (v - mean))
        .sum::<f64>()
        / (resamples.len().saturating_sub(1)).max(1) as f64;
    let mut std_error = var.sqrt();
    if short_path && !path.is_empty() {
        // Residual-bias allowance when counts are sparse.
        let n_ell = path.len().saturating_sub(ell) + 1;
        std_error += (alphabet as f64).powi(ell as i32) / (2.0 * n_ell as f64);
    }
    EntropyEstimate {
        value,
        std_error,
        block_length: ell,
        path_length: path.len(),
        short_path,
    }
}
