//! Dyadic block coupling of a martingale with a Gaussian random walk.
//!
//! Level `L` covers steps `(2^L, 2^{L+1}]`, cut into blocks of `2^{m(L)}`
//! steps. Each block sum `U` is mapped through its exact conditional
//! distribution function given the past (randomized at atoms) and the
//! Gaussian quantile to a partner `V ~ N(0, 2^{m(L)} σ²)`, and `V` is split
//! into per-step Gaussian increments.

mod coupling;
mod driven;
mod scheme;

pub use coupling::{
    asip_deviation, block_sum_laws, couple_blocks, skorohod_fill, skorohod_split, AsipSummary, BlockPair,
    BlockPmf, CoupledPath, CouplingLaw, LevelDeviation, MAX_EXACT_ATOMS,
};
pub use driven::{simulate_driven, simulate_gaussian, DrivenMartingale, Innovation, MartPath, CHAIN_TOL};
pub use scheme::{block_exponent, block_scheme, log_exponent, normalization, BlockScheme, Level, Mode};
