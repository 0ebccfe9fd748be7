//! Relatively independent joinings and the entropy-gain switching
//! construction.
//!
//! Two lifts `μ₁, μ₂` of the same base measure `ν` through a 1-block code
//! `π : X -> Y` are coupled by drawing a `y`-window from `ν` once and then the
//! two `x`-windows independently from their exact conditional laws given the
//! window (forward filtering, backward sampling). Coincidence statistics of
//! the coupled pair estimate the mass of `{u₀ = v₀}` — zero exactly when the
//! lifts are relatively orthogonal.
//!
//! The switching construction splices the coupled paths at their coincidence
//! times with fair coin bits: writing `N_k(u,v) = sup{m < k : u_m = v_m}`
//! (`sup ∅ = −∞`, with a dedicated bit for `−∞`), position `k` copies `u_k`
//! when the bit at `N_k` is 0 and `v_k` when it is 1. Switching only at
//! coincidence times keeps every output admissible. The resulting process
//! gains entropy over the average of `h(μ₁), h(μ₂)` by at least the integral
//! over `S = {u_{−1} = v_{−1}}` of
//!
//! ```text
//! Ξ = Σ_j ψ((A_j+B_j)/2) − ½·Σ_j ψ(A_j) − ½·Σ_j ψ(B_j),   ψ(t) = −t·log t,
//! ```
//!
//! where `A_j, B_j` are the conditional laws of the symbol at the origin given
//! the own past and the observed `y`-window. Equality of the conditionals on
//! `S` for every symbol forces `μ₁ = μ₂`, so the reported conditional gap is a
//! contrapositive detector for distinct lifts.

use thiserror::Error;

use crate::code::OneBlockCode;
use crate::measure::{psi, MarkovMeasure, MeasureError, LIFT_TOL};
use crate::rng::{CounterRng, RngStream};

#[derive(Debug, Error)]
pub enum JoiningError {
    #[error("window length {got} does not match 2w+1 = {want}")]
    WindowLength { got: usize, want: usize },
    #[error("window half-width must be at least {min} (got {got})")]
    WindowTooSmall { got: usize, min: usize },
    #[error("y-window is inadmissible or has no positive-probability preimage path")]
    InadmissibleWindow,
    #[error("target symbol `{0}` has no preimage under the code")]
    NoPreimage(String),
    #[error("switch inputs disagree: {0}")]
    WindowMismatch(String),
    #[error("switched output left the shift space (internal admissibility failure)")]
    SwitchInadmissible,
    #[error("no sample hit the coincidence set S (coincidence estimate 0 of {samples} samples)")]
    EmptyS { samples: usize },
    #[error(transparent)]
    Measure(#[from] MeasureError),
}

/// A Monte-Carlo estimate: value, standard error, and sample count.
#[derive(Debug, Clone, Copy)]
pub struct McEstimate {
    pub estimate: f64,
    pub std_error: f64,
    pub n: usize,
}

impl McEstimate {
    fn from_samples(values: &[f64]) -> McEstimate {
        let n = values.len();
        let mean = values.iter().sum::<f64>() / n.max(1) as f64;
        let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>()
            / n.saturating_sub(1).max(1) as f64;
        McEstimate {
            estimate: mean,
            std_error: (var / n.max(1) as f64).sqrt(),
            n,
        }
    }

    fn binomial(hits: usize, n: usize) -> McEstimate {
        let p = hits as f64 / n.max(1) as f64;
        McEstimate {
            estimate: p,
            std_error: (p * (1.0 - p) / n.max(1) as f64).sqrt(),
            n,
        }
    }
}

/// Exact conditional sampling of a Markov measure given an observed
/// `y`-window under a 1-block code (an HMM with deterministic emission).
#[derive(Debug, Clone)]
pub struct ConditionalFilter {
    measure: MarkovMeasure,
    code: OneBlockCode,
    w: usize,
    /// Transition probabilities aligned to source edges.
    trans: Vec<f64>,
    mass: Vec<f64>,
}

impl ConditionalFilter {
    pub fn new(measure: MarkovMeasure, code: OneBlockCode, w: usize) -> Result<Self, JoiningError> {
        if **code.source() != **measure.host() {
            return Err(MeasureError::CodeMismatch.into());
        }
        for (t, pre) in code.preimages().iter().enumerate() {
            if pre.is_empty() {
                return Err(JoiningError::NoPreimage(
                    code.target().symbol(t).to_string(),
                ));
            }
        }
        let trans = measure.transition_weights();
        let mass = measure.symbol_mass();
        Ok(ConditionalFilter {
            measure,
            code,
            w,
            trans,
            mass,
        })
    }

    pub fn half_width(&self) -> usize {
        self.w
    }

    pub fn measure(&self) -> &MarkovMeasure {
        &self.measure
    }

    fn p(&self, a: usize, b: usize) -> f64 {
        self.measure
            .host()
            .edge_id(a, b)
            .map_or(0.0, |e| self.trans[e])
    }

    /// Forward pass: filtered weights `alpha[i][a] ∝ P(x_i = a | y_0..i)`,
    /// each level normalised. `pin` fixes `x_{-1}` (used when chaining
    /// blocks).
    fn forward(&self, y: &[usize], pin: Option<usize>) -> Result<Vec<Vec<f64>>, JoiningError> {
        let n = self.measure.host().symbol_count();
        let mut alpha = Vec::with_capacity(y.len());
        let mut level = vec![0.0; n];
        for (a, slot) in level.iter_mut().enumerate() {
            let init = match pin {
                Some(prev) => self.p(prev, a),
                None => self.mass[a],
            };
            if self.code.image(a) == y[0] {
                *slot = init;
            }
        }
        normalise(&mut level).ok_or(JoiningError::InadmissibleWindow)?;
        alpha.push(level.clone());
        for &yi in &y[1..] {
            let prev = alpha.last().unwrap().clone();
            level.iter_mut().for_each(|x| *x = 0.0);
            for (e, &(a, b)) in self.measure.host().edges().iter().enumerate() {
                if self.code.image(b) == yi {
                    level[b] += prev[a] * self.trans[e];
                }
            }
            normalise(&mut level).ok_or(JoiningError::InadmissibleWindow)?;
            alpha.push(level.clone());
        }
        Ok(alpha)
    }

    fn backward_sample(&self, alpha: &[Vec<f64>], s: &mut RngStream) -> Vec<usize> {
        let len = alpha.len();
        let mut x = vec![0usize; len];
        x[len - 1] = s.next_weighted(&alpha[len - 1]);
        for i in (0..len - 1).rev() {
            let nxt = x[i + 1];
            let weights: Vec<f64> = alpha[i]
                .iter()
                .enumerate()
                .map(|(a, &al)| al * self.p(a, nxt))
                .collect();
            x[i] = s.next_weighted(&weights);
        }
        x
    }

    /// Draw an `x`-window from the exact conditional law given `y_window`
    /// (length `2w+1`). Randomness is counter-based on `(seed, sample index)`.
    pub fn conditional_sample(
        &self,
        y_window: &[usize],
        seed: u64,
        index: u64,
    ) -> Result<Vec<usize>, JoiningError> {
        let want = 2 * self.w + 1;
        if y_window.len() != want {
            return Err(JoiningError::WindowLength {
                got: y_window.len(),
                want,
            });
        }
        if !self.code.target().is_admissible(y_window) {
            return Err(JoiningError::InadmissibleWindow);
        }
        let alpha = self.forward(y_window, None)?;
        let mut s = RngStream::new(CounterRng::new(seed, 0x66696c74).substream(index));
        Ok(self.backward_sample(&alpha, &mut s))
    }

    /// Backward message `beta[a] ∝ P(y_future | x_0 = a)` over a future
    /// `y`-suffix.
    fn backward_message(&self, y_future: &[usize]) -> Vec<f64> {
        let n = self.measure.host().symbol_count();
        let mut beta = vec![1.0; n];
        for &yi in y_future.iter().rev() {
            let mut prev = vec![0.0; n];
            for (e, &(a, b)) in self.measure.host().edges().iter().enumerate() {
                if self.code.image(b) == yi {
                    prev[a] += self.trans[e] * beta[b];
                }
            }
            let m = prev.iter().fold(0.0f64, |acc, &x| acc.max(x));
            if m > 0.0 {
                prev.iter_mut().for_each(|x| *x /= m);
            }
            beta = prev;
        }
        beta
    }

    /// Conditional law of the symbol at the origin given `x_{-1} = prev` and
    /// the observed `y` at the origin plus a future suffix. Exact for a
    /// Markov measure: the own past beyond `x_{-1}` is redundant.
    fn origin_conditional(&self, prev: usize, y0: usize, y_future: &[usize]) -> Vec<f64> {
        let n = self.measure.host().symbol_count();
        let beta = self.backward_message(y_future);
        let mut law = vec![0.0; n];
        for (j, slot) in law.iter_mut().enumerate() {
            if self.code.image(j) == y0 {
                *slot = self.p(prev, j) * beta[j];
            }
        }
        let s: f64 = law.iter().sum();
        if s > 0.0 {
            law.iter_mut().for_each(|x| *x /= s);
        }
        law
    }
}

fn normalise(v: &mut [f64]) -> Option<f64> {
    let s: f64 = v.iter().sum();
    if s <= 0.0 || !s.is_finite() {
        return None;
    }
    v.iter_mut().for_each(|x| *x /= s);
    Some(s)
}

/// One coupled draw from the relatively independent joining.
#[derive(Debug, Clone)]
pub struct JoiningSample {
    pub y: Vec<usize>,
    pub u: Vec<usize>,
    pub v: Vec<usize>,
}

/// Sampler for the relatively independent joining `μ₁ ⊗_ν μ₂` on finite
/// windows: one `y`-window from `ν`, then `u` and `v` independently from the
/// conditional laws of `μ₁` and `μ₂`.
#[derive(Debug, Clone)]
pub struct JoiningSampler {
    pub nu: MarkovMeasure,
    pub code: OneBlockCode,
    pub w: usize,
    pub seed: u64,
    f1: ConditionalFilter,
    f2: ConditionalFilter,
}

impl JoiningSampler {
    /// Both measures must push to the same marginal within the lift tolerance.
    pub fn new(
        mu1: MarkovMeasure,
        mu2: MarkovMeasure,
        code: &OneBlockCode,
        w: usize,
        seed: u64,
    ) -> Result<Self, JoiningError> {
        let nu = mu1.pushforward(code)?.marginal().clone();
        // Rejects non-lifts with the worst-edge residual.
        crate::measure::relative_entropy_with_tol(&mu2, &nu, code, LIFT_TOL)?;
        if !nu.is_ergodic() {
            return Err(MeasureError::NotErgodic.into());
        }
        let f1 = ConditionalFilter::new(mu1, code.clone(), w)?;
        let f2 = ConditionalFilter::new(mu2, code.clone(), w)?;
        Ok(JoiningSampler {
            nu,
            code: code.clone(),
            w,
            seed,
            f1,
            f2,
        })
    }

    pub fn mu1(&self) -> &MarkovMeasure {
        self.f1.measure()
    }

    pub fn mu2(&self) -> &MarkovMeasure {
        self.f2.measure()
    }

    fn y_window(&self, index: u64) -> Vec<usize> {
        let len = 2 * self.w + 1;
        let rng = CounterRng::new(self.seed, 0x7977696e).substream(index);
        let mut s = RngStream::new(rng);
        sample_markov_window(&self.nu, len, &mut s)
    }

    /// Draw the `index`-th coupled sample. Pure in `(seed, index)`.
    pub fn sample(&self, index: u64) -> Result<JoiningSample, JoiningError> {
        let y = self.y_window(index);
        let alpha1 = self.f1.forward(&y, None)?;
        let alpha2 = self.f2.forward(&y, None)?;
        let rng = CounterRng::new(self.seed, 0x6a6f696e).substream(index);
        let mut s1 = RngStream::new(rng.substream(1));
        let mut s2 = RngStream::new(rng.substream(2));
        let u = self.f1.backward_sample(&alpha1, &mut s1);
        let v = self.f2.backward_sample(&alpha2, &mut s2);
        debug_assert_eq!(self.code.apply(&u), y);
        debug_assert_eq!(self.code.apply(&v), y);
        Ok(JoiningSample { y, u, v })
    }

    /// Monte-Carlo frequency of the coincidence `u₀ = v₀` with binomial
    /// standard error. A value within noise of zero is the measurable
    /// surrogate for relative orthogonality.
    pub fn coincidence_probability(&self, n_samples: usize) -> Result<McEstimate, JoiningError> {
        let c = self.w;
        let mut hits = 0usize;
        for i in 0..n_samples {
            let s = self.sample(i as u64)?;
            if s.u[c] == s.v[c] {
                hits += 1;
            }
        }
        Ok(McEstimate::binomial(hits, n_samples))
    }

    /// Per-sample origin conditionals `(A_j, B_j)` given the own `x_{-1}` and
    /// the observed `y` from the origin to the window end.
    fn origin_conditionals(&self, s: &JoiningSample) -> (Vec<f64>, Vec<f64>) {
        let c = self.w;
        let a = self.f1.origin_conditional(s.u[c - 1], s.y[c], &s.y[c + 1..]);
        let b = self.f2.origin_conditional(s.v[c - 1], s.y[c], &s.y[c + 1..]);
        (a, b)
    }

    /// Estimate `∫_S Ξ` over the coincidence set `S = {u_{-1} = v_{-1}}`.
    /// Samples outside `S` contribute zero, so the mean is the integral.
    pub fn xi_estimate(&self, n_samples: usize) -> Result<XiEstimate, JoiningError> {
        if self.w < 8 {
            return Err(JoiningError::WindowTooSmall {
                got: self.w,
                min: 8,
            });
        }
        let c = self.w;
        let mut contributions = Vec::with_capacity(n_samples);
        let mut in_s = 0usize;
        for i in 0..n_samples {
            let s = self.sample(i as u64)?;
            if s.u[c - 1] != s.v[c - 1] {
                contributions.push(0.0);
                continue;
            }
            in_s += 1;
            let (a, b) = self.origin_conditionals(&s);
            let xi = xi_integrand(&a, &b);
            debug_assert!(xi >= -1e-12, "concavity violated: {xi}");
            contributions.push(xi);
        }
        if in_s == 0 {
            return Err(JoiningError::EmptyS { samples: n_samples });
        }
        Ok(XiEstimate {
            integral: McEstimate::from_samples(&contributions),
            coincidence: McEstimate::binomial(in_s, n_samples),
            n_in_s: in_s,
        })
    }

    /// Statistics of `sup_j |A_j − B_j|` over the coincidence set
    /// `S̃ = {u_{-1} = v_{-1}}`: a contrapositive detector for `μ₁ ≠ μ₂`.
    pub fn conditional_equality_gap(&self, n_samples: usize) -> Result<GapStats, JoiningError> {
        let c = self.w;
        let n_sym = self.code.source().symbol_count();
        let mut gaps = Vec::new();
        let mut per_symbol_max = vec![0.0f64; n_sym];
        for i in 0..n_samples {
            let s = self.sample(i as u64)?;
            if s.u[c - 1] != s.v[c - 1] {
                continue;
            }
            let (a, b) = self.origin_conditionals(&s);
            let mut sup = 0.0f64;
            for j in 0..n_sym {
                let g = (a[j] - b[j]).abs();
                per_symbol_max[j] = per_symbol_max[j].max(g);
                sup = sup.max(g);
            }
            gaps.push(sup);
        }
        if gaps.is_empty() {
            return Ok(GapStats {
                mean_gap: McEstimate::from_samples(&[]),
                max_gap: 0.0,
                per_symbol_max,
                n_in_s: 0,
                s_is_empty: true,
            });
        }
        Ok(GapStats {
            max_gap: gaps.iter().fold(0.0f64, |a, &g| a.max(g)),
            mean_gap: McEstimate::from_samples(&gaps),
            per_symbol_max,
            n_in_s: gaps.len(),
            s_is_empty: false,
        })
    }
}

/// Stationary Markov window of a given length.
fn sample_markov_window(nu: &MarkovMeasure, len: usize, s: &mut RngStream) -> Vec<usize> {
    let host = nu.host();
    let mass = nu.symbol_mass();
    let mut y = Vec::with_capacity(len);
    let mut cur = s.next_weighted(&mass);
    y.push(cur);
    for _ in 1..len {
        let succ = host.successors(cur);
        let weights: Vec<f64> = succ.iter().map(|&b| nu.edge_frequency(cur, b)).collect();
        cur = succ[s.next_weighted(&weights)];
        y.push(cur);
    }
    y
}

/// `Ξ = Σ ψ((a+b)/2) − ½Σψ(a) − ½Σψ(b)` (nonnegative by concavity of ψ).
pub fn xi_integrand(a: &[f64], b: &[f64]) -> f64 {
    let mut xi = 0.0;
    for (&x, &y) in a.iter().zip(b) {
        xi += psi(0.5 * (x + y)) - 0.5 * psi(x) - 0.5 * psi(y);
    }
    xi
}

#[derive(Debug, Clone)]
pub struct XiEstimate {
    /// Estimate of `∫_S Ξ` (contributions of samples outside `S` are zero).
    pub integral: McEstimate,
    /// Frequency of `S` itself.
    pub coincidence: McEstimate,
    pub n_in_s: usize,
}

#[derive(Debug, Clone)]
pub struct GapStats {
    pub max_gap: f64,
    pub mean_gap: McEstimate,
    /// Max over samples in `S̃` of `|A_j − B_j|`, per source symbol.
    pub per_symbol_max: Vec<f64>,
    pub n_in_s: usize,
    pub s_is_empty: bool,
}

/// Splice two equal-image windows at their coincidence times.
///
/// `w_k = u_k` when the bit at `N_k(u,v)` is 0, `v_k` when it is 1;
/// `N_k = sup{m < k : u_m = v_m}` within the window, and positions before the
/// first coincidence use `r_neg_inf`. The output is checked edge-by-edge.
pub fn pqs_switch(
    code: &OneBlockCode,
    u: &[usize],
    v: &[usize],
    r_bits: &[bool],
    r_neg_inf: bool,
) -> Result<Vec<usize>, JoiningError> {
    if u.len() != v.len() {
        return Err(JoiningError::WindowMismatch(format!(
            "|u| = {}, |v| = {}",
            u.len(),
            v.len()
        )));
    }
    if r_bits.len() != u.len() {
        return Err(JoiningError::WindowMismatch(format!(
            "|r| = {}, |u| = {}",
            r_bits.len(),
            u.len()
        )));
    }
    for k in 0..u.len() {
        if code.image(u[k]) != code.image(v[k]) {
            return Err(JoiningError::WindowMismatch(format!(
                "code images differ at position {k}"
            )));
        }
    }
    let mut out = Vec::with_capacity(u.len());
    let mut last_coincidence: Option<usize> = None;
    for k in 0..u.len() {
        let bit = match last_coincidence {
            Some(m) => r_bits[m],
            None => r_neg_inf,
        };
        out.push(if bit { v[k] } else { u[k] });
        if u[k] == v[k] {
            last_coincidence = Some(k);
        }
    }
    if !code.source().is_admissible(&out) {
        return Err(JoiningError::SwitchInadmissible);
    }
    Ok(out)
}

/// One switched draw, with the raw coupled windows and bits.
#[derive(Debug, Clone)]
pub struct SwitchedSample {
    pub y: Vec<usize>,
    pub u: Vec<usize>,
    pub v: Vec<usize>,
    pub r_bits: Vec<bool>,
    pub r_neg_inf: bool,
    pub switched: Vec<usize>,
}

/// Long-path output of the switching construction.
#[derive(Debug, Clone)]
pub struct PqsPath {
    pub path: Vec<usize>,
    pub y: Vec<usize>,
    /// Adjacent pairs checked for admissibility.
    pub checked: usize,
    /// Must be zero; kept as a field so reports can assert it.
    pub violations: usize,
}

/// Sampler for the switched process: the joining plus fair coin bits.
#[derive(Debug, Clone)]
pub struct SwitchSampler {
    pub joining: JoiningSampler,
}

impl SwitchSampler {
    pub fn new(joining: JoiningSampler) -> Self {
        SwitchSampler { joining }
    }

    /// Window draw: joining sample, one bit per position, and a single
    /// `r_neg_inf` bit for the whole window.
    pub fn sample(&self, index: u64) -> Result<SwitchedSample, JoiningError> {
        let js = self.joining.sample(index)?;
        let rng = CounterRng::new(self.joining.seed, 0x62697473).substream(index);
        let mut s = RngStream::new(rng);
        let r_neg_inf = s.next_bool();
        let r_bits: Vec<bool> = (0..js.u.len()).map(|_| s.next_bool()).collect();
        let switched = pqs_switch(&self.joining.code, &js.u, &js.v, &r_bits, r_neg_inf)?;
        Ok(SwitchedSample {
            y: js.y,
            u: js.u,
            v: js.v,
            r_bits,
            r_neg_inf,
            switched,
        })
    }

    /// Emit a long path approximately distributed as the switched measure.
    ///
    /// One `y`-path is drawn; `u` and `v` are sampled along it in overlapping
    /// blocks chained through their boundary symbols (so each is a single
    /// admissible path), with `w` symbols of look-ahead kept as filter context
    /// and `w` symbols discarded at both ends of the output.
    pub fn measure_path(&self, length: usize, seed: u64) -> Result<PqsPath, JoiningError> {
        let w = self.joining.w;
        let block = (4 * w).max(64);
        let total = length + 2 * w;
        let rng = CounterRng::new(seed, 0x70717370);
        let mut ys = RngStream::new(rng.substream(0));
        let y = sample_markov_window(&self.joining.nu, total + w, &mut ys);

        let sample_chain =
            |filter: &ConditionalFilter, stream_tag: u64| -> Result<Vec<usize>, JoiningError> {
                let mut x: Vec<usize> = Vec::with_capacity(total);
                let mut pin: Option<usize> = None;
                let mut start = 0usize;
                let mut block_idx = 0u64;
                while start < total {
                    let keep = block.min(total - start);
                    let end = (start + keep + w).min(y.len());
                    let alpha = filter.forward(&y[start..end], pin)?;
                    let mut s = RngStream::new(rng.substream(stream_tag).substream(block_idx));
                    let xs = filter.backward_sample(&alpha, &mut s);
                    x.extend_from_slice(&xs[..keep]);
                    pin = Some(*x.last().unwrap());
                    start += keep;
                    block_idx += 1;
                }
                Ok(x)
            };
        let u = sample_chain(&self.joining.f1, 1)?;
        let v = sample_chain(&self.joining.f2, 2)?;

        let mut bits = RngStream::new(rng.substream(3));
        let r_neg_inf = bits.next_bool();
        let r_bits: Vec<bool> = (0..total).map(|_| bits.next_bool()).collect();
        let switched = pqs_switch(&self.joining.code, &u, &v, &r_bits, r_neg_inf)?;
        let path: Vec<usize> = switched[w..w + length].to_vec();
        let mut violations = 0usize;
        for pair in path.windows(2) {
            if !self.joining.code.source().has_edge(pair[0], pair[1]) {
                violations += 1;
            }
        }
        Ok(PqsPath {
            path,
            y: y[w..w + length].to_vec(),
            checked: length.saturating_sub(1),
            violations,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measure::{binary_entropy, product_lift, MarkovMeasure};
    use crate::shift::Sft;
    use std::sync::Arc;

    fn bernoulli_half() -> MarkovMeasure {
        let y = Arc::new(Sft::full_shift(2));
        MarkovMeasure::bernoulli(&y, &[0.5, 0.5]).unwrap()
    }

    /// The two-lift fixture used across the estimators: ν⊗Ber(β₁), ν⊗Ber(β₂).
    fn product_pair(b1: f64, b2: f64, w: usize, seed: u64) -> JoiningSampler {
        let nu = bernoulli_half();
        let l1 = product_lift(&nu, &[b1, 1.0 - b1]).unwrap();
        let l2 = product_lift(&nu, &[b2, 1.0 - b2]).unwrap();
        JoiningSampler::new(l1.lift, l2.lift, &l1.code, w, seed).unwrap()
    }

    #[test]
    fn conditional_sample_identity_code() {
        let nu = bernoulli_half();
        let code = OneBlockCode::identity(nu.host());
        let f = ConditionalFilter::new(nu.clone(), code, 4).unwrap();
        let y = nu.sample_path(9, 3).unwrap();
        let x = f.conditional_sample(&y, 1, 0).unwrap();
        assert_eq!(x, y);
    }

    #[test]
    fn conditional_sample_product_fiber_is_iid() {
        let nu = bernoulli_half();
        let pl = product_lift(&nu, &[0.8, 0.2]).unwrap();
        let f = ConditionalFilter::new(pl.lift.clone(), pl.code.clone(), 3).unwrap();
        let y = nu.sample_path(7, 5).unwrap();
        let n = 40_000;
        let mut zeros = 0usize;
        for i in 0..n {
            let x = f.conditional_sample(&y, 9, i as u64).unwrap();
            // Fiber coordinate of the centre symbol.
            if x[3] % pl.fiber == 0 {
                zeros += 1;
            }
            assert_eq!(pl.code.apply(&x), y);
        }
        let freq = zeros as f64 / n as f64;
        let sigma = (0.8f64 * 0.2 / n as f64).sqrt();
        assert!((freq - 0.8).abs() <= 3.0 * sigma + 1e-3, "freq {freq}");
    }

    #[test]
    fn conditional_sample_matches_bayes_enumeration() {
        // 3-symbol chain over a 2-symbol base, w = 2.
        let x = Arc::new(Sft::full_shift(3));
        let y = Arc::new(Sft::full_shift(2));
        let code = OneBlockCode::new(Arc::clone(&x), Arc::clone(&y), vec![0, 0, 1]).unwrap();
        let rows = [[0.5, 0.3, 0.2], [0.1, 0.6, 0.3], [0.4, 0.2, 0.4]];
        let mut weights = vec![0.0; x.edge_count()];
        for a in 0..3 {
            for b in 0..3 {
                weights[x.edge_id(a, b).unwrap()] = rows[a][b];
            }
        }
        let mu = MarkovMeasure::stationary_from_transition(&x, &weights, None).unwrap();
        let f = ConditionalFilter::new(mu.clone(), code.clone(), 2).unwrap();
        let y_window = vec![0, 1, 0, 0, 1];

        // Brute-force conditional law: weight every admissible x-window over
        // the preimage alphabet and normalise.
        let mass = mu.symbol_mass();
        let mut law: std::collections::BTreeMap<Vec<usize>, f64> = Default::default();
        let mut total = 0.0;
        let mut stack: Vec<(Vec<usize>, f64)> = (0..3)
            .filter(|&s| code.image(s) == y_window[0])
            .map(|s| (vec![s], mass[s]))
            .collect();
        while let Some((word, wgt)) = stack.pop() {
            if word.len() == y_window.len() {
                total += wgt;
                law.insert(word, wgt);
                continue;
            }
            let last = *word.last().unwrap();
            for b in 0..3 {
                if code.image(b) == y_window[word.len()] {
                    let p = rows[last][b];
                    if p > 0.0 {
                        let mut next = word.clone();
                        next.push(b);
                        stack.push((next, wgt * p));
                    }
                }
            }
        }

        let n = 100_000;
        let mut counts: std::collections::BTreeMap<Vec<usize>, usize> = Default::default();
        for i in 0..n {
            let xw = f.conditional_sample(&y_window, 21, i as u64).unwrap();
            *counts.entry(xw).or_insert(0) += 1;
        }
        for (word, wgt) in &law {
            let p = wgt / total;
            let freq = *counts.get(word).unwrap_or(&0) as f64 / n as f64;
            let sigma = (p * (1.0 - p) / n as f64).sqrt();
            assert!(
                (freq - p).abs() <= 3.0 * sigma + 2e-3,
                "window {word:?}: freq {freq} vs {p}"
            );
        }
    }

    #[test]
    fn joining_identity_code_collapses() {
        let nu = bernoulli_half();
        let code = OneBlockCode::identity(nu.host());
        let j = JoiningSampler::new(nu.clone(), nu.clone(), &code, 4, 7).unwrap();
        for i in 0..50 {
            let s = j.sample(i).unwrap();
            assert_eq!(s.u, s.y);
            assert_eq!(s.v, s.y);
        }
        let c = j.coincidence_probability(200).unwrap();
        assert_eq!(c.estimate, 1.0);
    }

    #[test]
    fn joining_rejects_non_lifts() {
        let nu = bernoulli_half();
        let l1 = product_lift(&nu, &[0.9, 0.1]).unwrap();
        let skew = MarkovMeasure::bernoulli(&nu.host().clone(), &[0.4, 0.6]).unwrap();
        let l2 = product_lift(&skew, &[0.2, 0.8]).unwrap();
        assert!(matches!(
            JoiningSampler::new(l1.lift, l2.lift, &l1.code, 4, 0),
            Err(JoiningError::Measure(MeasureError::NotALift { .. }))
        ));
    }

    #[test]
    fn joining_marginals_pass_chi_square() {
        let j = product_pair(0.9, 0.2, 8, 11);
        let n = 50_000usize;
        let x = j.code.source();
        let mut counts1 = vec![0usize; x.edge_count()];
        let mut counts2 = vec![0usize; x.edge_count()];
        let c = j.w;
        for i in 0..n {
            let s = j.sample(i as u64).unwrap();
            counts1[x.edge_id(s.u[c - 1], s.u[c]).unwrap()] += 1;
            counts2[x.edge_id(s.v[c - 1], s.v[c]).unwrap()] += 1;
        }
        for (counts, mu) in [(counts1, j.mu1()), (counts2, j.mu2())] {
            let mut chi2 = 0.0;
            let mut df = 0usize;
            for (e, &cnt) in counts.iter().enumerate() {
                let expect = mu.edge_freq()[e] * n as f64;
                if expect > 5.0 {
                    chi2 += (cnt as f64 - expect).powi(2) / expect;
                    df += 1;
                }
            }
            let df = (df - 1) as f64;
            assert!(
                (chi2 - df).abs() <= 3.0 * (2.0 * df).sqrt() + 1.0,
                "chi2 {chi2} vs df {df}"
            );
        }
    }

    #[test]
    fn coincidence_closed_form_product_lifts() {
        let j = product_pair(0.9, 0.2, 8, 23);
        let c = j.coincidence_probability(20_000).unwrap();
        let want = 0.9 * 0.2 + 0.1 * 0.8;
        assert!(
            (c.estimate - want).abs() <= 4.0 * c.std_error + 1e-3,
            "estimate {} vs {want}",
            c.estimate
        );
    }

    /// Lifts on disjoint fiber alphabets never coincide.
    fn disjoint_pair(w: usize, seed: u64) -> JoiningSampler {
        let nu = bernoulli_half();
        let l1 = product_lift(&nu, &[0.7, 0.3, 0.0, 0.0]).unwrap();
        let l2 = product_lift(&nu, &[0.0, 0.0, 0.4, 0.6]).unwrap();
        JoiningSampler::new(l1.lift, l2.lift, &l1.code, w, seed).unwrap()
    }

    #[test]
    fn coincidence_zero_on_disjoint_fibers() {
        let j = disjoint_pair(8, 3);
        let c = j.coincidence_probability(2000).unwrap();
        assert_eq!(c.estimate, 0.0);
        assert!(matches!(
            j.xi_estimate(2000),
            Err(JoiningError::EmptyS { .. })
        ));
        let g = j.conditional_equality_gap(2000).unwrap();
        assert!(g.s_is_empty);
    }

    #[test]
    fn coincidence_is_symmetric() {
        let a = product_pair(0.9, 0.2, 8, 5)
            .coincidence_probability(20_000)
            .unwrap();
        let b = product_pair(0.2, 0.9, 8, 6)
            .coincidence_probability(20_000)
            .unwrap();
        let sigma = (a.std_error.powi(2) + b.std_error.powi(2)).sqrt();
        assert!((a.estimate - b.estimate).abs() <= 3.0 * sigma + 1e-3);
    }

    #[test]
    fn switch_rule_cases() {
        let j = product_pair(0.9, 0.2, 4, 2);
        // u = v: output is u regardless of bits.
        let s = j.sample(0).unwrap();
        let out = pqs_switch(&j.code, &s.u, &s.u, &vec![true; s.u.len()], false).unwrap();
        assert_eq!(out, s.u);

        // Single coincidence at k = 3 with bit 1: u up to 3, v afterwards.
        // Hand-built windows on the 4-symbol product shift (full shift, so
        // everything is admissible); fibers differ except at position 3.
        let u = vec![0, 2, 0, 1, 0, 2];
        let v = vec![1, 3, 1, 1, 1, 3];
        assert_eq!(u[3], v[3]);
        let mut bits = vec![false; 6];
        bits[3] = true;
        let out = pqs_switch(&j.code, &u, &v, &bits, false).unwrap();
        assert_eq!(&out[..4], &u[..4]);
        assert_eq!(&out[4..], &v[4..]);
    }

    #[test]
    fn switch_without_coincidence_uses_r_neg_inf() {
        let j = disjoint_pair(4, 4);
        for i in 0..20 {
            let s = j.sample(i).unwrap();
            let out_u =
                pqs_switch(&j.code, &s.u, &s.v, &vec![true; s.u.len()], false).unwrap();
            assert_eq!(out_u, s.u);
            let out_v = pqs_switch(&j.code, &s.u, &s.v, &vec![false; s.u.len()], true).unwrap();
            assert_eq!(out_v, s.v);
        }
    }

    /// Independent re-implementation of the switch rule for cross-checking.
    fn switch_oracle(u: &[usize], v: &[usize], bits: &[bool], rinf: bool) -> Vec<usize> {
        (0..u.len())
            .map(|k| {
                let mut n_k: Option<usize> = None;
                for m in (0..k).rev() {
                    if u[m] == v[m] {
                        n_k = Some(m);
                        break;
                    }
                }
                let bit = n_k.map_or(rinf, |m| bits[m]);
                if bit {
                    v[k]
                } else {
                    u[k]
                }
            })
            .collect()
    }

    #[test]
    fn switch_matches_oracle_and_stays_admissible() {
        let sw = SwitchSampler::new(product_pair(0.9, 0.2, 8, 31));
        for i in 0..300 {
            let s = sw.sample(i).unwrap();
            let want = switch_oracle(&s.u, &s.v, &s.r_bits, s.r_neg_inf);
            assert_eq!(s.switched, want);
            assert!(sw.joining.code.source().is_admissible(&s.switched));
        }
    }

    #[test]
    fn measure_path_identity_code_returns_y() {
        let nu = bernoulli_half();
        let code = OneBlockCode::identity(nu.host());
        let j = JoiningSampler::new(nu.clone(), nu.clone(), &code, 8, 9).unwrap();
        let p = SwitchSampler::new(j).measure_path(500, 1).unwrap();
        assert_eq!(p.path, p.y);
        assert_eq!(p.violations, 0);
    }

    #[test]
    fn measure_path_equal_lifts_keeps_two_block_law() {
        let j = product_pair(0.7, 0.7, 8, 13);
        let mu = j.mu1().clone();
        let p = SwitchSampler::new(j).measure_path(200_000, 3).unwrap();
        assert_eq!(p.violations, 0);
        let x = mu.host();
        let mut counts = vec![0usize; x.edge_count()];
        for w in p.path.windows(2) {
            counts[x.edge_id(w[0], w[1]).unwrap()] += 1;
        }
        let n = (p.path.len() - 1) as f64;
        let mut chi2 = 0.0;
        let mut df = 0usize;
        for (e, &cnt) in counts.iter().enumerate() {
            let expect = mu.edge_freq()[e] * n;
            if expect > 5.0 {
                chi2 += (cnt as f64 - expect).powi(2) / expect;
                df += 1;
            }
        }
        let df = (df - 1) as f64;
        // Path autocorrelation inflates the statistic a little; 5σ keeps the
        // check meaningful without flakiness.
        assert!(
            (chi2 - df) <= 5.0 * (2.0 * df).sqrt() + 2.0,
            "chi2 {chi2} vs df {df}"
        );
    }

    #[test]
    fn measure_path_fiber_marginal_is_average() {
        let sw = SwitchSampler::new(product_pair(0.9, 0.2, 8, 17));
        let p = sw.measure_path(100_000, 5).unwrap();
        assert_eq!(p.violations, 0);
        let fiber =
            sw.joining.mu1().host().symbol_count() / sw.joining.nu.host().symbol_count();
        let zeros = p.path.iter().filter(|&&s| s % fiber == 0).count();
        let freq = zeros as f64 / p.path.len() as f64;
        assert!((freq - 0.55).abs() <= 0.01, "freq {freq}");
    }

    #[test]
    fn xi_zero_for_equal_lifts() {
        let j = product_pair(0.6, 0.6, 8, 19);
        let xi = j.xi_estimate(5000).unwrap();
        assert!(
            xi.integral.estimate.abs() <= 3.0 * xi.integral.std_error + 1e-9,
            "xi {}",
            xi.integral.estimate
        );
    }

    #[test]
    fn xi_closed_form_product_lifts() {
        let j = product_pair(0.9, 0.2, 8, 29);
        let xi = j.xi_estimate(20_000).unwrap();
        let xi_on_s =
            binary_entropy(0.55) - 0.5 * binary_entropy(0.9) - 0.5 * binary_entropy(0.2);
        let want = 0.26 * xi_on_s;
        assert!(
            (xi.integral.estimate - want).abs() <= 4.0 * xi.integral.std_error + 1e-3,
            "xi {} vs {want}",
            xi.integral.estimate
        );
    }

    #[test]
    fn xi_requires_window_at_least_eight() {
        let j = product_pair(0.9, 0.2, 4, 1);
        assert!(matches!(
            j.xi_estimate(10),
            Err(JoiningError::WindowTooSmall { .. })
        ));
    }

    #[test]
    fn gap_detects_distinct_lifts() {
        let j = product_pair(0.9, 0.2, 8, 37);
        let g = j.conditional_equality_gap(5000).unwrap();
        assert!((g.mean_gap.estimate - 0.7).abs() <= 0.02);
        assert!((g.max_gap - 0.7).abs() <= 0.02);
    }

    #[test]
    fn gap_zero_for_equal_lifts() {
        let j = product_pair(0.4, 0.4, 8, 41);
        let g = j.conditional_equality_gap(2000).unwrap();
        assert!(g.max_gap <= 1e-12);
    }
}
