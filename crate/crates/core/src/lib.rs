//! Rank-share distribution toolkit.
//!
//! When a fixed volume is split at random between `N` participants and the
//! pieces are ranked by size, the share of each rank follows a universal
//! piecewise-polynomial law whose expected values decay harmonically with
//! rank — Zipf's law. This crate covers that pipeline end to end:
//!
//! * [`combinatorics`] — exact counting of discrete splits and the discrete
//!   rank-share PMF;
//! * [`model`] — the continuous density, CDF, coefficient tables, and
//!   expected-share profiles;
//! * [`montecarlo`] — a deterministic, chunk-parallel spacing simulator with
//!   Kolmogorov-Smirnov distances against the model;
//! * [`analysis`] — dataset ingestion, ranking, and correlation of observed
//!   rank means against the model profile.

pub mod analysis;
pub mod combinatorics;
pub mod kahan;
pub mod model;
pub mod montecarlo;
pub mod numfmt;

pub use analysis::{
    fit_report, mean_by_rank, parse_table, pearson, rank_rows, to_shares, AnalysisError, Dataset,
    FitOptions, FitReport, MissingPolicy, ParseOptions, ShareMatrix,
};
pub use combinatorics::{
    count_compositions, count_rank_shares, enumerate_rank_shares, CombinatoricsError,
    RankShareHistogram, SplitParams, NAIVE_GUARD,
};
pub use model::{
    cdf, density_mean, expected_share, pdf, pdf_last_rank, polynomial_table, range_index,
    rank_polynomials, rank_profile, second_last_polynomials, support_bounds, zipf_series,
    PdfSegment, PiecewisePdf, RankProfile, SecondLastForms,
};
pub use montecarlo::{
    ks_distance, sample_shares, sample_shares_discrete, simulate, EmpiricalRankDistribution,
    SimConfig, SimError, SimMode, DEFAULT_DISCRETE_GRID,
};
