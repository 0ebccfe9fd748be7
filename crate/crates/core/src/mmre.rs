//! Maximal relative entropy over order-`m` Markov lifts.
//!
//! Given a 1-block code `π : X -> Y` and a stationary Markov measure `ν` on
//! `Y`, the solver maximises the entropy rate `h(q) = Σψ(q) − Σψ(m)` over
//! edge-frequency vectors `q` on the order-`m` presentation of `X`, subject to
//! nonnegativity, unit mass, flow balance, and the pushforward rows
//! `Σ_{image(e) = f} q(e) = ν(f)` per `Y`-edge. `h` is concave on this
//! polytope (each term `−q·log(q/m)` is a perspective of `t log t`), and the
//! reported `h_rel = h(q*) − h(ν)` is a certified value for the constrained
//! problem; `h_top(X) − h(ν)` is the matching upper bound.
//!
//! The optimiser works in the dual: for potentials `β` on the charged
//! `Y`-edges, `max_q [h(q) + β·(push(q) − ν)] = log λ(W(β)) − β·ν`, where
//! `W(β)` weights each block edge by `exp(β)` of its image (a finite-shift
//! pressure). The dual is smooth and convex in `β`; a damped Newton iteration
//! with a finite-difference Hessian drives the gradient — which is exactly the
//! pushforward residual of the weighted Parry measure — to zero. The primal
//! optimum is that Parry measure, so flow balance and unit mass hold by
//! construction and the feasibility residual is the gradient norm itself.

use std::sync::Arc;

use thiserror::Error;

use crate::code::{CodeError, OneBlockCode};
use crate::measure::{MarkovMeasure, MeasureError};
use crate::shift::{BlockPresentation, Sft, ShiftError};

const GRAD_TOL: f64 = 1e-11;
const MAX_NEWTON_ITER: usize = 400;
const FD_STEP: f64 = 1e-5;

#[derive(Debug, Error)]
pub enum MmreError {
    #[error("base measure charges edge ({0}, {1}) with no preimage", .edge.0, .edge.1)]
    InfeasibleSupport { edge: (String, String) },
    #[error("no irreducible component supports a lift of the base measure")]
    Infeasible,
    #[error("order sweep not monotone: h_rel({m_prev}) = {prev:.12} > h_rel({m}) = {cur:.12} + 2·tol")]
    MonotonicityViolated {
        m_prev: usize,
        m: usize,
        prev: f64,
        cur: f64,
    },
    #[error("order must be at least 1")]
    BadOrder,
    #[error(transparent)]
    Shift(#[from] ShiftError),
    #[error(transparent)]
    Code(#[from] CodeError),
    #[error(transparent)]
    Measure(#[from] MeasureError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RowKind {
    /// Flow balance at a block symbol.
    FlowBalance(usize),
    /// Pushforward mass of a `Y`-edge.
    Pushforward(usize),
    TotalMass,
}

/// One equality row `Σ coeffs·q = rhs` over block-edge frequencies.
#[derive(Debug, Clone)]
pub struct ConstraintRow {
    pub kind: RowKind,
    pub coeffs: Vec<(usize, f64)>,
    pub rhs: f64,
}

/// The feasible set of order-`m` Markov lifts of `ν`, with its explicit
/// equality rows (flow balance per symbol, pushforward per `Y`-edge, total
/// mass).
pub struct LiftPolytope {
    pub block: BlockPresentation,
    /// Composite 1-block code `block presentation -> Y`.
    pub block_code: OneBlockCode,
    /// Conjugacy code `block presentation -> X` (initial symbol of each word).
    pub to_x: OneBlockCode,
    pub nu: MarkovMeasure,
    pub rows: Vec<ConstraintRow>,
    /// Block edge -> `Y`-edge id.
    pub edge_image: Vec<usize>,
    pub order: usize,
}

impl LiftPolytope {
    /// Max-norm violation of the equality rows at `q` (nonnegativity aside).
    pub fn residual(&self, q: &[f64]) -> f64 {
        self.rows
            .iter()
            .map(|row| {
                let s: f64 = row.coeffs.iter().map(|&(i, c)| c * q[i]).sum();
                (s - row.rhs).abs()
            })
            .fold(0.0, f64::max)
    }
}

/// Solver output. `converged` is false when the iteration cap was reached;
/// the best iterate is still returned.
#[derive(Debug, Clone)]
pub struct MmreSolution {
    /// Optimal measure on the block presentation.
    pub block_measure: MarkovMeasure,
    /// Its edge marginal pulled back to `X` through the presentation code.
    pub x_marginal: MarkovMeasure,
    /// Entropy rate of the optimal lift, in nats.
    pub objective: f64,
    /// `objective − h(ν)`.
    pub h_rel: f64,
    /// Max pushforward mismatch of the returned measure.
    pub feasibility_residual: f64,
    pub iterations: usize,
    pub converged: bool,
    pub order: usize,
}

/// Assemble the lift polytope at order `m`.
pub fn build_lift_constraints(
    x: &Arc<Sft>,
    y: &Arc<Sft>,
    code: &OneBlockCode,
    nu: &MarkovMeasure,
    m: usize,
) -> Result<LiftPolytope, MmreError> {
    if m == 0 {
        return Err(MmreError::BadOrder);
    }
    assert_eq!(**code.source(), **x, "code source must be X");
    assert_eq!(**code.target(), **y, "code target must be Y");
    assert_eq!(**nu.host(), **y, "base measure must live on Y");
    let block = x.higher_block(m)?;
    let to_x = OneBlockCode::new(
        Arc::clone(&block.block),
        Arc::clone(x),
        block.symbol_map.clone(),
    )?;
    let block_code = to_x.compose(code)?;
    let b = &block.block;

    let mut edge_image = Vec::with_capacity(b.edge_count());
    let mut covered = vec![false; y.edge_count()];
    for &(a, c) in b.edges() {
        let f = y
            .edge_id(block_code.image(a), block_code.image(c))
            .expect("block code validity");
        covered[f] = true;
        edge_image.push(f);
    }
    for (f, &q) in nu.edge_freq().iter().enumerate() {
        if q > 0.0 && !covered[f] {
            return Err(MmreError::InfeasibleSupport {
                edge: y.edge_label(f),
            });
        }
    }

    let mut rows = Vec::new();
    for v in 0..b.symbol_count() {
        let mut coeffs = Vec::new();
        for (e, &(a, c)) in b.edges().iter().enumerate() {
            let mut coef = 0.0;
            if a == v {
                coef += 1.0;
            }
            if c == v {
                coef -= 1.0;
            }
            if coef != 0.0 {
                coeffs.push((e, coef));
            }
        }
        rows.push(ConstraintRow {
            kind: RowKind::FlowBalance(v),
            coeffs,
            rhs: 0.0,
        });
    }
    for f in 0..y.edge_count() {
        let coeffs: Vec<(usize, f64)> = edge_image
            .iter()
            .enumerate()
            .filter(|&(_, &img)| img == f)
            .map(|(e, _)| (e, 1.0))
            .collect();
        rows.push(ConstraintRow {
            kind: RowKind::Pushforward(f),
            coeffs,
            rhs: nu.edge_freq()[f],
        });
    }
    rows.push(ConstraintRow {
        kind: RowKind::TotalMass,
        coeffs: (0..b.edge_count()).map(|e| (e, 1.0)).collect(),
        rhs: 1.0,
    });

    Ok(LiftPolytope {
        block,
        block_code,
        to_x,
        nu: nu.clone(),
        rows,
        edge_image,
        order: m,
    })
}

/// Weighted Perron data by power iteration on `W + cI` (shift keeps the
/// vectors and makes periodic supports converge), Rayleigh-polished.
fn weighted_perron(
    n: usize,
    edges: &[(usize, usize)],
    weights: &[f64],
) -> Result<(f64, Vec<f64>, Vec<f64>), MmreError> {
    let mean_w = weights.iter().sum::<f64>() / weights.len().max(1) as f64;
    let shift = mean_w.max(1e-12);
    let apply = |v: &[f64], transpose: bool| -> Vec<f64> {
        let mut out = vec![0.0; n];
        for (e, &(a, b)) in edges.iter().enumerate() {
            if transpose {
                out[b] += weights[e] * v[a];
            } else {
                out[a] += weights[e] * v[b];
            }
        }
        for i in 0..n {
            out[i] += shift * v[i];
        }
        out
    };
    let iterate = |transpose: bool| -> Result<Vec<f64>, MmreError> {
        let mut v = vec![1.0 / n as f64; n];
        for _ in 0..100_000 {
            let w = apply(&v, transpose);
            let s: f64 = w.iter().sum();
            let res = w
                .iter()
                .zip(&v)
                .map(|(wi, vi)| (wi - s * vi).abs())
                .fold(0.0f64, f64::max);
            let w: Vec<f64> = w.iter().map(|x| x / s).collect();
            if res <= 1e-14 * s.max(1.0) {
                return Ok(w);
            }
            v = w;
        }
        Err(MmreError::Shift(ShiftError::NoConvergence {
            residual: f64::NAN,
            iterations: 100_000,
        }))
    };
    let right = iterate(false)?;
    let left = iterate(true)?;
    // λ of W itself via Rayleigh quotient.
    let mut wr = vec![0.0; n];
    for (e, &(a, b)) in edges.iter().enumerate() {
        wr[a] += weights[e] * right[b];
    }
    let lr: f64 = left.iter().zip(&right).map(|(l, r)| l * r).sum();
    let lambda: f64 = left.iter().zip(&wr).map(|(l, x)| l * x).sum::<f64>() / lr;
    Ok((lambda, left, right))
}

/// Gibbs edge measure of the weighted graph: `q(e) = l(a)·W(e)·r(b)/λ`,
/// normalised to unit mass. Stationary by the eigenvector equations.
fn gibbs_measure(
    n: usize,
    edges: &[(usize, usize)],
    weights: &[f64],
) -> Result<(f64, Vec<f64>), MmreError> {
    let (lambda, left, right) = weighted_perron(n, edges, weights)?;
    let lr: f64 = left.iter().zip(&right).map(|(l, r)| l * r).sum();
    let mut q: Vec<f64> = edges
        .iter()
        .zip(weights)
        .map(|(&(a, b), &w)| left[a] * w * right[b] / (lambda * lr))
        .collect();
    let s: f64 = q.iter().sum();
    q.iter_mut().for_each(|x| *x /= s);
    Ok((lambda, q))
}

struct ComponentProblem {
    /// Indices into the block edge list.
    edges: Vec<usize>,
    endpoints: Vec<(usize, usize)>,
    n: usize,
    /// Per component edge: index into the charged-`Y`-edge list.
    images: Vec<usize>,
}

/// Maximise the entropy rate over the polytope.
///
/// Deterministic: the dual starts at zero potentials and the step schedule is
/// fixed. Stops when the dual improvement falls below `tol` and the
/// pushforward residual is within `1e-8`; hitting the iteration cap returns
/// the best iterate flagged `converged = false`.
pub fn solve_mmre(polytope: &LiftPolytope, tol: f64) -> Result<MmreSolution, MmreError> {
    let b = &polytope.block.block;
    let y = polytope.nu.host();
    let charged: Vec<usize> = (0..y.edge_count())
        .filter(|&f| polytope.nu.edge_freq()[f] > 0.0)
        .collect();
    let charged_pos: Vec<Option<usize>> = {
        let mut v = vec![None; y.edge_count()];
        for (i, &f) in charged.iter().enumerate() {
            v[f] = Some(i);
        }
        v
    };
    let nu_charged: Vec<f64> = charged.iter().map(|&f| polytope.nu.edge_freq()[f]).collect();

    // Keep only block edges whose image is charged, then split into
    // irreducible components of the reduced graph.
    let kept: Vec<usize> = (0..b.edge_count())
        .filter(|&e| charged_pos[polytope.edge_image[e]].is_some())
        .collect();
    if kept.is_empty() {
        return Err(MmreError::Infeasible);
    }
    let reduced_pairs: Vec<(usize, usize)> = kept.iter().map(|&e| b.edges()[e]).collect();
    let reduced = match Sft::from_indexed(
        (0..b.symbol_count()).map(|v| v.to_string()).collect(),
        reduced_pairs,
    ) {
        Ok(g) => g,
        Err(ShiftError::EmptyAfterPruning) => return Err(MmreError::Infeasible),
        Err(e) => return Err(e.into()),
    };
    let back: Vec<usize> = reduced
        .symbols()
        .iter()
        .map(|s| s.parse::<usize>().unwrap())
        .collect();
    let scc = reduced.strongly_connected_components();

    let mut problems = Vec::new();
    for (ci, comp) in scc.components.iter().enumerate() {
        if scc.trivial[ci] {
            continue;
        }
        let members: std::collections::BTreeSet<usize> =
            comp.iter().map(|&v| back[v]).collect();
        let mut remap = std::collections::BTreeMap::new();
        for (i, &v) in members.iter().enumerate() {
            remap.insert(v, i);
        }
        let mut edges = Vec::new();
        let mut endpoints = Vec::new();
        let mut images = Vec::new();
        let mut covered = vec![false; charged.len()];
        for &e in &kept {
            let (a, c) = b.edges()[e];
            if members.contains(&a) && members.contains(&c) {
                edges.push(e);
                endpoints.push((remap[&a], remap[&c]));
                let img = charged_pos[polytope.edge_image[e]].unwrap();
                covered[img] = true;
                images.push(img);
            }
        }
        if covered.iter().all(|&c| c) {
            problems.push(ComponentProblem {
                edges,
                endpoints,
                n: members.len(),
                images,
            });
        }
    }
    if problems.is_empty() {
        return Err(MmreError::Infeasible);
    }

    let mut best: Option<MmreSolution> = None;
    for prob in &problems {
        let sol = solve_component(polytope, prob, &nu_charged, tol)?;
        let better = match &best {
            None => true,
            Some(b) => sol.objective > b.objective,
        };
        if better {
            best = Some(sol);
        }
    }
    Ok(best.unwrap())
}

fn solve_component(
    polytope: &LiftPolytope,
    prob: &ComponentProblem,
    nu_charged: &[f64],
    tol: f64,
) -> Result<MmreSolution, MmreError> {
    let k = nu_charged.len();

    // Pinned case: a bijection between component edges and charged Y-edges
    // forces q outright (the identity-code situation).
    if prob.edges.len() == k {
        let mut q_full = vec![0.0; polytope.block.block.edge_count()];
        for (i, &e) in prob.edges.iter().enumerate() {
            q_full[e] = nu_charged[prob.images[i]];
        }
        let block_measure =
            MarkovMeasure::from_edge_frequencies(Arc::clone(&polytope.block.block), q_full)?;
        return finish(polytope, block_measure, 0, true);
    }

    // Dual objective and gradient at β (gauge-fixed to mean zero).
    let eval = |beta: &[f64]| -> Result<(f64, Vec<f64>, Vec<f64>), MmreError> {
        let weights: Vec<f64> = prob.images.iter().map(|&i| beta[i].exp()).collect();
        let (lambda, q) = gibbs_measure(prob.n, &prob.endpoints, &weights)?;
        let mut push = vec![0.0; k];
        for (i, &img) in prob.images.iter().enumerate() {
            push[img] += q[i];
        }
        let dual = lambda.ln()
            - beta
                .iter()
                .zip(nu_charged)
                .map(|(b, n)| b * n)
                .sum::<f64>();
        let grad: Vec<f64> = push
            .iter()
            .zip(nu_charged)
            .map(|(p, n)| p - n)
            .collect();
        Ok((dual, grad, q))
    };

    let degauge = |beta: &mut [f64]| {
        let mean = beta.iter().sum::<f64>() / beta.len() as f64;
        beta.iter_mut().for_each(|b| *b -= mean);
    };

    let mut beta = vec![0.0; k];
    let (mut dual, mut grad, mut q) = eval(&beta)?;
    let mut iterations = 0;
    let mut converged = false;
    while iterations < MAX_NEWTON_ITER {
        iterations += 1;
        let gnorm = grad.iter().fold(0.0f64, |a, &g| a.max(g.abs()));
        if gnorm <= GRAD_TOL {
            converged = true;
            break;
        }
        // Central-difference Hessian of the dual (columns are gradient
        // sensitivities in β).
        let mut h = nalgebra::DMatrix::<f64>::zeros(k, k);
        for j in 0..k {
            let mut bp = beta.clone();
            bp[j] += FD_STEP;
            let mut bm = beta.clone();
            bm[j] -= FD_STEP;
            let (_, gp, _) = eval(&bp)?;
            let (_, gm, _) = eval(&bm)?;
            for i in 0..k {
                h[(i, j)] = (gp[i] - gm[i]) / (2.0 * FD_STEP);
            }
        }
        let g = nalgebra::DVector::from_column_slice(&grad);
        // The dual is gauge-invariant along the all-ones direction (and any
        // vertex-potential direction), so the Hessian is singular; the
        // pseudo-inverse picks the least-norm Newton step.
        let svd = nalgebra::SVD::new(h, true, true);
        let step = svd
            .solve(&g, 1e-10)
            .unwrap_or_else(|_| nalgebra::DVector::zeros(k));
        let mut step: Vec<f64> = (-step).iter().copied().collect();
        let norm = step.iter().fold(0.0f64, |a, &s| a.max(s.abs()));
        if norm > 10.0 {
            step.iter_mut().for_each(|s| *s *= 10.0 / norm);
        }
        // Backtracking on the dual value; fall back to a gradient step if the
        // Newton direction fails to descend.
        let mut t = 1.0;
        let mut accepted = false;
        for _ in 0..40 {
            let mut cand: Vec<f64> = beta
                .iter()
                .zip(&step)
                .map(|(b, s)| b + t * s)
                .collect();
            degauge(&mut cand);
            let (d2, g2, q2) = eval(&cand)?;
            if d2 < dual - 1e-16 || (d2 <= dual && t == 1.0) {
                let improvement = dual - d2;
                beta = cand;
                dual = d2;
                grad = g2;
                q = q2;
                accepted = true;
                if improvement < tol
                    && grad.iter().fold(0.0f64, |a, &g| a.max(g.abs())) <= 1e-8
                {
                    converged = true;
                }
                break;
            }
            t *= 0.5;
        }
        if converged {
            break;
        }
        if !accepted {
            // Gradient fallback with a small fixed step.
            let mut cand: Vec<f64> = beta
                .iter()
                .zip(&grad)
                .map(|(b, g)| b - 0.1 * g)
                .collect();
            degauge(&mut cand);
            let (d2, g2, q2) = eval(&cand)?;
            if d2 >= dual {
                // No further progress possible at floating-point resolution.
                converged = grad.iter().fold(0.0f64, |a, &g| a.max(g.abs())) <= 1e-8;
                break;
            }
            beta = cand;
            dual = d2;
            grad = g2;
            q = q2;
        }
    }

    let mut q_full = vec![0.0; polytope.block.block.edge_count()];
    for (i, &e) in prob.edges.iter().enumerate() {
        q_full[e] = q[i];
    }
    let block_measure =
        MarkovMeasure::from_edge_frequencies(Arc::clone(&polytope.block.block), q_full)?;
    finish(polytope, block_measure, iterations, converged)
}

fn finish(
    polytope: &LiftPolytope,
    block_measure: MarkovMeasure,
    iterations: usize,
    converged: bool,
) -> Result<MmreSolution, MmreError> {
    let push = block_measure.pushforward(&polytope.block_code)?;
    let feasibility_residual = push.marginal().max_edge_residual(&polytope.nu);
    let x_marginal = block_measure.pushforward(&polytope.to_x)?.marginal().clone();
    let objective = block_measure.entropy_rate();
    let h_rel = objective - polytope.nu.entropy_rate();
    Ok(MmreSolution {
        block_measure,
        x_marginal,
        objective,
        h_rel,
        feasibility_residual,
        iterations,
        converged: converged && feasibility_residual <= 1e-8,
        order: polytope.order,
    })
}

/// Solve at every order `1..=m_max` and check the ladder is nondecreasing
/// within `2·tol` (feasible sets are nested across orders).
pub fn order_sweep(
    x: &Arc<Sft>,
    y: &Arc<Sft>,
    code: &OneBlockCode,
    nu: &MarkovMeasure,
    m_max: usize,
    tol: f64,
) -> Result<Vec<(usize, f64)>, MmreError> {
    let mut out = Vec::with_capacity(m_max);
    for m in 1..=m_max {
        let polytope = build_lift_constraints(x, y, code, nu, m)?;
        let sol = solve_mmre(&polytope, tol)?;
        if let Some(&(mp, prev)) = out.last() {
            if sol.h_rel < prev - 2.0 * tol {
                return Err(MmreError::MonotonicityViolated {
                    m_prev: mp,
                    m,
                    prev,
                    cur: sol.h_rel,
                });
            }
        }
        out.push((m, sol.h_rel));
    }
    Ok(out)
}
