//! Counting labeled graphs with a prescribed degree sequence and 0-1
//! matrices with prescribed margins.
//!
//! The asymptotic estimate combines the maximum entropy matrix of the
//! degree polytope, a Gaussian local-limit term and an Edgeworth
//! correction whose moments are computed exactly by Wick's formula.
//! Exact oracles (memoized enumeration and Fourier quadrature) and an
//! exact rejection sampler are provided for validation.

pub mod bipartite;
pub mod degrees;
pub mod edgeworth;
pub mod error;
pub mod linalg;
pub mod maxent;
pub mod oracle;
pub mod rng;
pub mod sampler;
pub mod summation;

pub use bipartite::{
    build_bipartite_gaussian, count_bipartite, BipartiteCountReport, BipartiteGaussianModel,
};
pub use degrees::{
    check_parity, erdos_gallai, erdos_gallai_raw, gale_ryser, BipartiteMargins, DegreeSequence,
    FeasibilityReport,
};
pub use edgeworth::{
    build_gaussian, compute_mu, compute_nu, count_graphs, edge_covariance, CountReport,
    GaussianModel,
};
pub use error::{Error, Result};
pub use maxent::{
    solve_maxent, solve_maxent_bipartite, tameness_observed, tameness_sufficient,
    BipartiteMaxEntSolution, MaxEntSolution, TamenessCertificate,
};
pub use oracle::{
    exact_count_bipartite, exact_count_graphs, fourier_count_graphs, mc_moments,
    mc_moments_bipartite, CountMethod, ExactCount, MomentEstimate,
};
pub use sampler::{
    count_accepted, edge_statistic, sample_uniform, sample_uniform_counting, sample_uniform_many,
    zero_tilt, CountingSampler, EdgeStatistic, GraphSample,
};
