//! Semidefinite relaxations for clustering from a similarity matrix.

mod certificate;
mod ideal;
mod eigen;
pub mod linalg;
mod solver;

pub use certificate::{certificate, kkt_residuals, support_partition, CertificateReport, KktReport, BOUNDARY_TOLERANCE};
pub use ideal::{adds3_ideal_sigma, adds4_ideal_sigma, block_mean_sigma, ideal_clustering_matrix, ideal_similarity, IdealModel};
pub(crate) use solver::{solve_sdp_k_from, AdmmState};
pub use solver::{
    solve_sdp_k, solve_sdp_lambda, write_iterate_log, ClusteringMatrix, FeasibilityReport, IterateLog,
    SolverOptions, Splitting,
};
