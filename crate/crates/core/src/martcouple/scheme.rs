use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Which rate the block lengths are tuned for.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Mode {
    /// Almost sure rate, `m(L) = ⌊2L/p + b_p log₂ L⌋`, `b_p = 1/p`, `b₃ = 1`.
    #[serde(rename = "as")]
    As,
    /// `L¹` rate, `m(L) = ⌊2L/p − b_p log₂ L⌋`, `b_p = 1/p`, `b₃ = −1/3`.
    #[serde(rename = "l1")]
    L1,
}

impl Mode {
    pub fn as_str(self) -> &'static str {
        match self {
            Mode::As => "as",
            Mode::L1 => "l1",
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Mode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "as" => Ok(Mode::As),
            "l1" => Ok(Mode::L1),
            other => Err(Error::Parse(format!("unknown mode '{other}' (as|l1)"))),
        }
    }
}

fn check_p(p: f64) -> Result<()> {
    if p > 2.0 && p <= 3.0 {
        Ok(())
    } else {
        Err(Error::BadExponent(p))
    }
}

fn is_three(p: f64) -> bool {
    p == 3.0
}

/// Signed coefficient of `log₂ L` in `m(L)`.
fn log_coefficient(p: f64, mode: Mode) -> f64 {
    match (mode, is_three(p)) {
        (Mode::As, false) => 1.0 / p,
        (Mode::As, true) => 1.0,
        (Mode::L1, false) => -1.0 / p,
        (Mode::L1, true) => 1.0 / 3.0,
    }
}

/// `m(L)` clamped into `[0, L]`; the flag reports whether clamping engaged.
pub fn block_exponent(level: u32, p: f64, mode: Mode) -> Result<(u32, bool)> {
    check_p(p)?;
    let log_l = if level == 0 { 0.0 } else { (level as f64).log2() };
    let raw = (2.0 * level as f64 / p + log_coefficient(p, mode) * log_l + 1e-12).floor();
    let clamped = raw.clamp(0.0, level as f64);
    Ok((clamped as u32, clamped != raw))
}

/// The exponent `a_p` of `(log n)` in the deviation normalization:
/// `(p+1)/(2p) + ε` (`1 + ε` at `p = 3`) for the almost sure mode and
/// `(p−1)/(2p)` (`2/3` at `p = 3`) for the `L¹` mode.
pub fn log_exponent(p: f64, mode: Mode, eps: f64) -> Result<f64> {
    check_p(p)?;
    Ok(match (mode, is_three(p)) {
        (Mode::As, false) => 0.5 + 0.5 / p + eps,
        (Mode::As, true) => 1.0 + eps,
        (Mode::L1, false) => 0.5 - 0.5 / p,
        (Mode::L1, true) => 2.0 / 3.0,
    })
}

/// `n^{1/p} (log n)^{a_p}`.
pub fn normalization(n: usize, p: f64, mode: Mode, eps: f64) -> Result<f64> {
    let a = log_exponent(p, mode, eps)?;
    let nf = n as f64;
    Ok(nf.powf(1.0 / p) * nf.ln().powf(a))
}

/// One dyadic level `(2^L, 2^{L+1}]` cut into blocks of `2^m` steps.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct Level {
    pub level: u32,
    pub m: u32,
    pub clamped: bool,
}

impl Level {
    #[inline]
    pub fn block_len(&self) -> usize {
        1 << self.m
    }

    #[inline]
    pub fn block_count(&self) -> usize {
        1 << (self.level - self.m)
    }

    /// Interval `I_{k,L}` as `(start, end]`, `k = 1..=block_count`.
    pub fn interval(&self, k: usize) -> (usize, usize) {
        let base = 1usize << self.level;
        (base + (k - 1) * self.block_len(), base + k * self.block_len())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BlockScheme {
    pub p: f64,
    pub mode: Mode,
    pub levels: Vec<Level>,
}

impl BlockScheme {
    /// Last step covered by the levels, `2^{L_max + 1}`.
    pub fn horizon(&self) -> usize {
        self.levels.last().map_or(1, |l| 2usize << l.level)
    }
}

/// Levels `L` with `2^{L+1} ≤ n`.
pub fn block_scheme(n: usize, p: f64, mode: Mode) -> Result<BlockScheme> {
    check_p(p)?;
    if n < 2 {
        return Err(Error::Validation("block scheme needs n >= 2".into()));
    }
    let mut levels = Vec::new();
    let mut level = 0u32;
    while (2usize << level) <= n {
        let (m, clamped) = block_exponent(level, p, mode)?;
        levels.push(Level { level, m, clamped });
        level += 1;
    }
    Ok(BlockScheme { p, mode, levels })
}
