//! relent-core: symbolic dynamics for relative entropy over factor maps.
//!
//! The crate builds shift spaces from finite graphs and studies measures
//! through 1-block factor codes:
//!
//! - [`shift`] — subshifts of finite type, irreducible structure, Perron data,
//!   higher-block presentations;
//! - [`code`] — 1-block codes, finite-to-one/diamond analysis, degree, fiber
//!   products, product coding graphs, alphabet truncation;
//! - [`measure`] — stationary Markov measures, entropy rates, pushforwards,
//!   path sampling, empirical entropy, relative entropy;
//! - [`joining`] — relatively independent joinings, coincidence statistics,
//!   the switching construction and its entropy-gain integrand;
//! - [`mmre`] — maximal relative entropy over order-`m` Markov lifts;
//! - [`skew`] — the randomly kicked standard map over the cat map: strips,
//!   graph transform, shadowing, the `log 2` relative-entropy certificate, and
//!   Lyapunov exponents;
//! - [`io`] — file formats for graphs, measures, codes and problems;
//! - [`rng`] — counter-based random streams (scheduling-independent sampling).

pub mod code;
pub mod io;
pub mod joining;
pub mod measure;
pub mod mmre;
pub mod rng;
pub mod shift;
pub mod skew;

pub use code::{
    build_product_coding_graph, irreducible_core, truncate_alphabet, CodeError, CodeReport,
    CoreReport, Diamond, FiberProduct, FiniteToOneReport, OneBlockCode, Overlap,
    ProductCodingGraph, Truncation,
};
pub use measure::{
    binary_entropy, empirical_entropy, empirical_entropy_opts, product_lift, psi,
    relative_entropy, relative_entropy_with_tol, EntropyEstimate, EntropyOptions,
    HiddenMarkovMeasure, MarkovMeasure, MeasureError, ProductLift,
};
pub use rng::{CounterRng, RngStream};
pub use shift::{BlockPresentation, PerronData, SccDecomposition, Sft, ShiftError};
