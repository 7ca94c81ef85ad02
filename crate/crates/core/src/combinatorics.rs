//! Exact discrete engine for rank-share counting.
//!
//! A volume of `T` indivisible units is split between `N` participants; every
//! weak composition of `T` into `N` nonnegative parts is one outcome. Sorting
//! an outcome descending assigns ranks, and counting how often rank `k` holds
//! share `s` over all outcomes yields the discrete rank-share distribution.
//!
//! Two routes produce the same histogram:
//!
//! * [`enumerate_rank_shares`] walks every composition (the reference oracle,
//!   guarded by [`NAIVE_GUARD`]);
//! * [`count_rank_shares`] walks only nonincreasing part sequences (integer
//!   partitions into exactly `N` parts, zeros allowed) and adds each
//!   partition's ordering multiplicity `N!/∏ mult_j!` in one step.
//!
//! All counts are exact; probabilities are exact rationals.

use std::io::{self, Write};

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use rayon::prelude::*;
use serde_json::json;

use crate::numfmt;

/// Cap on the composition count accepted by the naive enumerator.
pub const NAIVE_GUARD: u64 = 10_000_000;

/// Largest participant count for which `N!` fits in `u128`.
const FACT_TABLE_LEN: usize = 35;

#[derive(Debug, thiserror::Error)]
pub enum CombinatoricsError {
    #[error("at least one participant is required")]
    NoParticipants,
    #[error("{count} compositions exceed the enumeration guard of {cap}")]
    GuardExceeded { count: BigUint, cap: u64 },
    #[error("expected share is undefined for a zero total volume")]
    ZeroTotal,
}

/// A volume of `total` units shared between `participants` players.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SplitParams {
    total: u64,
    participants: u32,
}

impl SplitParams {
    pub fn new(total: u64, participants: u32) -> Result<Self, CombinatoricsError> {
        if participants == 0 {
            return Err(CombinatoricsError::NoParticipants);
        }
        Ok(Self {
            total,
            participants,
        })
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn participants(&self) -> u32 {
        self.participants
    }
}

/// Exact binomial coefficient `C(n, k)`.
///
/// Multiplicative evaluation; every intermediate value is itself a binomial
/// coefficient times an integer below `n`, so nothing overflows.
pub fn binomial(n: u64, k: u64) -> BigUint {
    if k > n {
        return BigUint::zero();
    }
    let k = k.min(n - k);
    let mut result = BigUint::one();
    for i in 0..k {
        result = result * BigUint::from(n - i) / BigUint::from(i + 1);
    }
    result
}

/// Number of weak compositions of `T` into `N` parts: `C(T + N - 1, N - 1)`.
pub fn count_compositions(params: SplitParams) -> BigUint {
    let n = u64::from(params.participants);
    binomial(params.total + n - 1, n - 1)
}

/// Exact occurrence counts of every (rank, share) pair over all splits.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RankShareHistogram {
    params: SplitParams,
    /// `counts[k - 1][s]` occurrences of rank `k` holding share `s`.
    counts: Vec<Vec<BigUint>>,
    total: BigUint,
}

impl RankShareHistogram {
    pub fn params(&self) -> SplitParams {
        self.params
    }

    /// Composition count `C(T + N - 1, N - 1)`; the per-rank column sum.
    pub fn total(&self) -> &BigUint {
        &self.total
    }

    /// Occurrences of rank `k` (1-based) holding integer share `s`.
    ///
    /// Panics if `k` or `s` is out of range.
    pub fn count(&self, k: u32, s: u64) -> &BigUint {
        assert!(k >= 1 && k <= self.params.participants, "rank out of range");
        assert!(s <= self.params.total, "share out of range");
        &self.counts[(k - 1) as usize][s as usize]
    }

    /// All counts for rank `k`, indexed by share.
    pub fn rank_counts(&self, k: u32) -> &[BigUint] {
        assert!(k >= 1 && k <= self.params.participants, "rank out of range");
        &self.counts[(k - 1) as usize]
    }

    /// Exact probability that rank `k` holds share `s`: `count / total`.
    pub fn pmf(&self, k: u32, s: u64) -> BigRational {
        BigRational::new(
            BigInt::from(self.count(k, s).clone()),
            BigInt::from(self.total.clone()),
        )
    }

    /// `pmf` collapsed to double precision.
    pub fn pmf_f64(&self, k: u32, s: u64) -> f64 {
        ratio_to_f64(self.count(k, s), &self.total)
    }

    /// Mean share fraction of rank `k`: `Σ_s (s / T) · pmf(k, s)`.
    ///
    /// Computed exactly as `Σ_s s·count[k][s] / (T · total)` before the final
    /// conversion to double.
    pub fn expected_share(&self, k: u32) -> Result<f64, CombinatoricsError> {
        if self.params.total == 0 {
            return Err(CombinatoricsError::ZeroTotal);
        }
        let weighted: BigUint = self
            .rank_counts(k)
            .iter()
            .enumerate()
            .map(|(s, c)| c * BigUint::from(s as u64))
            .sum();
        let denom = &self.total * BigUint::from(self.params.total);
        Ok(ratio_to_f64(&weighted, &denom))
    }

    /// CSV rows `rank,share,count,probability` for every (rank, share) pair.
    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "rank,share,count,probability")?;
        for k in 1..=self.params.participants {
            for s in 0..=self.params.total {
                writeln!(
                    out,
                    "{},{},{},{}",
                    k,
                    s,
                    self.count(k, s),
                    numfmt::fmt12(self.pmf_f64(k, s))
                )?;
            }
        }
        Ok(())
    }

    /// JSON mirror of the CSV export; counts are decimal strings to stay exact.
    pub fn to_json(&self) -> serde_json::Value {
        let entries: Vec<_> = (1..=self.params.participants)
            .flat_map(|k| {
                (0..=self.params.total).map(move |s| {
                    json!({
                        "rank": k,
                        "share": s,
                        "count": self.count(k, s).to_string(),
                        "probability": numfmt::round12(self.pmf_f64(k, s)),
                    })
                })
            })
            .collect();
        json!({
            "t": self.params.total,
            "n": self.params.participants,
            "total": self.total.to_string(),
            "entries": entries,
        })
    }
}

fn ratio_to_f64(num: &BigUint, denom: &BigUint) -> f64 {
    BigRational::new(BigInt::from(num.clone()), BigInt::from(denom.clone()))
        .to_f64()
        .expect("finite ratio")
}

/// Reference oracle: visit every weak composition, sort it descending, and
/// tally one occurrence per rank.
///
/// Refuses inputs with more than [`NAIVE_GUARD`] compositions.
pub fn enumerate_rank_shares(
    params: SplitParams,
) -> Result<RankShareHistogram, CombinatoricsError> {
    let total = count_compositions(params);
    if total > BigUint::from(NAIVE_GUARD) {
        return Err(CombinatoricsError::GuardExceeded {
            count: total,
            cap: NAIVE_GUARD,
        });
    }
    let n = params.participants as usize;
    let t = params.total as usize;
    // The guard keeps every cell below 1e7, so u64 cells suffice here.
    let mut grid = vec![vec![0u64; t + 1]; n];
    let mut parts = vec![0u64; n];
    let mut sorted = vec![0u64; n];
    visit_compositions(&mut grid, &mut parts, &mut sorted, params.total, 0);
    Ok(RankShareHistogram {
        params,
        counts: grid
            .into_iter()
            .map(|row| row.into_iter().map(BigUint::from).collect())
            .collect(),
        total,
    })
}

fn visit_compositions(
    grid: &mut [Vec<u64>],
    parts: &mut [u64],
    sorted: &mut [u64],
    rem: u64,
    pos: usize,
) {
    let n = parts.len();
    if pos == n - 1 {
        parts[pos] = rem;
        sorted.copy_from_slice(parts);
        sorted.sort_unstable_by(|a, b| b.cmp(a));
        for (k, &share) in sorted.iter().enumerate() {
            grid[k][share as usize] += 1;
        }
        return;
    }
    for value in 0..=rem {
        parts[pos] = value;
        visit_compositions(grid, parts, sorted, rem - value, pos + 1);
    }
}

/// Orderings of a nonincreasing part sequence: `N! / ∏_j mult_j!` where the
/// `mult_j` are the run lengths of equal parts (zeros included).
pub fn partition_multiplicity(parts: &[u64]) -> BigUint {
    debug_assert!(parts.windows(2).all(|w| w[0] >= w[1]));
    let mut denom = BigUint::one();
    let mut run = 0u64;
    let mut prev = None;
    for &p in parts {
        if Some(p) == prev {
            run += 1;
        } else {
            run = 1;
            prev = Some(p);
        }
        denom *= BigUint::from(run);
    }
    let numer: BigUint = (1..=parts.len() as u64).map(BigUint::from).product();
    numer / denom
}

/// Fast counter: enumerate partitions of `T` into exactly `N` nonnegative
/// parts in descending-part order and add each partition's multiplicity to
/// every (rank, part) cell it represents.
///
/// Produces a histogram identical to [`enumerate_rank_shares`] wherever both
/// run, with no composition-count guard. Subtrees below distinct first parts
/// are counted in parallel; integer merges make the result independent of the
/// degree of parallelism.
pub fn count_rank_shares(params: SplitParams) -> RankShareHistogram {
    let total = count_compositions(params);
    let n = params.participants as usize;
    // Every cell is bounded by the composition count, so u128 cells are exact
    // whenever the count itself fits; the arbitrary-precision fallback covers
    // the (far beyond desk scale) remainder.
    let counts = if n < FACT_TABLE_LEN && total.to_u128().is_some() {
        count_partitions_u128(params)
    } else {
        count_partitions_bignum(params)
    };
    RankShareHistogram {
        params,
        counts,
        total,
    }
}

fn factorial_table() -> [u128; FACT_TABLE_LEN] {
    let mut fact = [1u128; FACT_TABLE_LEN];
    for i in 1..FACT_TABLE_LEN {
        fact[i] = fact[i - 1] * i as u128;
    }
    fact
}

fn count_partitions_u128(params: SplitParams) -> Vec<Vec<BigUint>> {
    let n = params.participants as usize;
    let t = params.total;
    let fact = factorial_table();
    let n_fact = fact[n];

    let first_lo = t.div_ceil(u64::from(params.participants));
    let grid = (first_lo..=t)
        .into_par_iter()
        .map(|first| {
            let mut grid = vec![vec![0u128; t as usize + 1]; n];
            let mut parts = Vec::with_capacity(n);
            parts.push(first);
            descend_u128(&mut grid, &mut parts, t - first, n - 1, 1, 1, n_fact);
            grid
        })
        .reduce(
            || vec![vec![0u128; t as usize + 1]; n],
            |mut acc, grid| {
                for (arow, grow) in acc.iter_mut().zip(grid) {
                    for (a, g) in arow.iter_mut().zip(grow) {
                        *a += g;
                    }
                }
                acc
            },
        );
    grid.into_iter()
        .map(|row| row.into_iter().map(BigUint::from).collect())
        .collect()
}

fn descend_u128(
    grid: &mut [Vec<u128>],
    parts: &mut Vec<u64>,
    rem: u64,
    slots: usize,
    run: u64,
    denom: u128,
    n_fact: u128,
) {
    if slots == 0 {
        if rem == 0 {
            let mult = n_fact / denom;
            for (k, &part) in parts.iter().enumerate() {
                grid[k][part as usize] += mult;
            }
        }
        return;
    }
    let prev = *parts.last().expect("first part fixed");
    let lo = rem.div_ceil(slots as u64);
    let hi = prev.min(rem);
    for value in (lo..=hi).rev() {
        let (next_run, next_denom) = if value == prev {
            (run + 1, denom * (run as u128 + 1))
        } else {
            (1, denom)
        };
        parts.push(value);
        descend_u128(grid, parts, rem - value, slots - 1, next_run, next_denom, n_fact);
        parts.pop();
    }
}

/// Arbitrary-precision twin of the u128 counter; sequential, since inputs
/// that overflow u128 cells are not enumerable in practice anyway.
fn count_partitions_bignum(params: SplitParams) -> Vec<Vec<BigUint>> {
    let n = params.participants as usize;
    let t = params.total;
    let mut grid = vec![vec![BigUint::zero(); t as usize + 1]; n];
    let mut parts = Vec::with_capacity(n);
    let first_lo = t.div_ceil(u64::from(params.participants));
    for first in (first_lo..=t).rev() {
        parts.push(first);
        descend_bignum(&mut grid, &mut parts, t - first, n - 1);
        parts.pop();
    }
    grid
}

fn descend_bignum(grid: &mut [Vec<BigUint>], parts: &mut Vec<u64>, rem: u64, slots: usize) {
    if slots == 0 {
        if rem == 0 {
            let mult = partition_multiplicity(parts);
            for (k, &part) in parts.iter().enumerate() {
                grid[k][part as usize] += &mult;
            }
        }
        return;
    }
    let prev = *parts.last().expect("first part fixed");
    let lo = rem.div_ceil(slots as u64);
    let hi = prev.min(rem);
    for value in (lo..=hi).rev() {
        parts.push(value);
        descend_bignum(grid, parts, rem - value, slots - 1);
        parts.pop();
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(t: u64, n: u32) -> SplitParams {
        SplitParams::new(t, n).unwrap()
    }

    /// Independent Pascal-recurrence oracle for binomial coefficients.
    fn pascal(n: usize, k: usize) -> u64 {
        let mut row = vec![0u64; k + 1];
        row[0] = 1;
        for _ in 1..=n {
            for j in (1..=k).rev() {
                row[j] += row[j - 1];
            }
        }
        row[k]
    }

    #[test]
    fn composition_counts_match_worked_examples() {
        assert_eq!(count_compositions(params(10, 3)), BigUint::from(66u32));
        assert_eq!(count_compositions(params(0, 5)), BigUint::from(1u32));
        assert_eq!(count_compositions(params(7, 1)), BigUint::from(1u32));
    }

    #[test]
    fn composition_count_matches_pascal_recurrence() {
        assert_eq!(pascal(23, 3), 1771);
        assert_eq!(count_compositions(params(20, 4)), BigUint::from(pascal(23, 3)));
        for t in 0..=12u64 {
            for n in 1..=5u32 {
                assert_eq!(
                    count_compositions(params(t, n)),
                    BigUint::from(pascal((t + u64::from(n) - 1) as usize, (n - 1) as usize)),
                    "T={t} N={n}"
                );
            }
        }
    }

    #[test]
    fn zero_participants_rejected() {
        assert!(matches!(
            SplitParams::new(3, 0),
            Err(CombinatoricsError::NoParticipants)
        ));
    }

    #[test]
    fn naive_histogram_matches_worked_example() {
        let hist = enumerate_rank_shares(params(10, 3)).unwrap();
        assert_eq!(hist.total(), &BigUint::from(66u32));
        assert_eq!(hist.count(1, 7), &BigUint::from(12u32));
        let rank2_mass: BigUint = hist.rank_counts(2).iter().sum();
        assert_eq!(rank2_mass, BigUint::from(66u32));
        // Rank 1 cannot fall below ceil(T/N), rank k cannot exceed floor(T/k).
        assert_eq!(hist.count(1, 3), &BigUint::zero());
        assert_eq!(hist.count(3, 4), &BigUint::zero());
    }

    #[test]
    fn naive_guard_rejects_large_inputs() {
        // C(219, 19) is astronomically past the guard.
        let err = enumerate_rank_shares(params(200, 20)).unwrap_err();
        assert!(matches!(err, CombinatoricsError::GuardExceeded { .. }));
    }

    #[test]
    fn partition_multiplicities() {
        assert_eq!(partition_multiplicity(&[7, 2, 1]), BigUint::from(6u32));
        assert_eq!(partition_multiplicity(&[4, 3, 3]), BigUint::from(3u32));
        assert_eq!(partition_multiplicity(&[10, 0, 0]), BigUint::from(3u32));
        assert_eq!(partition_multiplicity(&[2, 2, 2]), BigUint::from(1u32));
    }

    #[test]
    fn fast_counter_matches_naive_on_worked_example() {
        let p = params(10, 3);
        assert_eq!(count_rank_shares(p), enumerate_rank_shares(p).unwrap());
    }

    #[test]
    fn bignum_fallback_matches_fast_path() {
        for (t, n) in [(0, 1), (5, 1), (9, 4), (12, 5), (7, 7)] {
            let p = params(t, n);
            assert_eq!(
                count_partitions_bignum(p),
                count_rank_shares(p).counts,
                "T={t} N={n}"
            );
        }
    }

    #[test]
    fn pmf_is_exact() {
        let hist = count_rank_shares(params(10, 3));
        assert_eq!(
            hist.pmf(1, 7),
            BigRational::new(BigInt::from(12), BigInt::from(66))
        );
        assert!((hist.pmf_f64(1, 7) - 12.0 / 66.0).abs() < 1e-15);

        let two = count_rank_shares(params(2, 2));
        assert_eq!(
            two.pmf(1, 2),
            BigRational::new(BigInt::from(2), BigInt::from(3))
        );
    }

    #[test]
    fn pmf_normalizes_per_rank() {
        let hist = count_rank_shares(params(9, 4));
        for k in 1..=4 {
            let mass: BigRational = (0..=9).map(|s| hist.pmf(k, s)).sum();
            assert_eq!(mass, BigRational::one(), "rank {k}");
        }
    }

    #[test]
    fn expected_share_examples() {
        let single = count_rank_shares(params(10, 1));
        assert_eq!(single.expected_share(1).unwrap(), 1.0);

        let hist = count_rank_shares(params(1000, 3));
        let top = hist.expected_share(1).unwrap();
        assert!((top - 11.0 / 18.0).abs() < 0.01, "got {top}");

        let zero = count_rank_shares(params(0, 3));
        assert!(matches!(
            zero.expected_share(1),
            Err(CombinatoricsError::ZeroTotal)
        ));
    }

    #[test]
    fn csv_export_shape() {
        let hist = count_rank_shares(params(10, 3));
        let mut buf = Vec::new();
        hist.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "rank,share,count,probability");
        assert_eq!(lines.len(), 1 + 3 * 11);
        assert!(lines.contains(&"1,7,12,0.181818181818"));
    }

    #[test]
    fn json_export_uses_decimal_strings() {
        let hist = count_rank_shares(params(2, 2));
        let value = hist.to_json();
        assert_eq!(value["total"], "3");
        assert_eq!(value["entries"][2]["count"], "2");
    }
}
