//! Continuous rank-share distribution.
//!
//! With the total volume normalized to 1, the share of rank `k` among `N`
//! participants follows a piecewise-polynomial law: a signed sum of basis
//! terms `(1 - iS)^(N-2)` whose active range is controlled by the range index
//! `d = min(N, floor(1/S))`:
//!
//! ```text
//! pdf(N, k, S) = N(N-1) · C(N-1, k-1) · Σ_{i=k}^{d} (-1)^(i-k) C(N-k, i-k) (1 - iS)^(N-2)
//! ```
//!
//! The expected share of rank `k` is the harmonic tail `(1/N) Σ_{i=k}^{N} 1/i`,
//! which decays like `1/k` over the leading ranks — Zipf's law.
//!
//! CDFs and means are evaluated term-wise from the closed-form antiderivative
//! of each basis term, accumulated segment by segment; no quadrature anywhere.

use serde::Serialize;

use crate::kahan::KahanSum;

/// Support of rank `k` of `N`: `(1/N, 1)` for rank 1, `(0, 1/k)` otherwise.
pub fn support_bounds(n: u32, k: u32) -> (f64, f64) {
    assert!(n >= 1 && (1..=n).contains(&k), "rank out of range");
    if k == 1 {
        (1.0 / f64::from(n), 1.0)
    } else {
        (0.0, 1.0 / f64::from(k))
    }
}

/// Range index `d = min(N, floor(1/S))`; shares live in `(1/(d+1), 1/d]`,
/// and `S = 0` maps to `d = N`.
pub fn range_index(n: u32, s: f64) -> u32 {
    assert!(n >= 1, "participant count must be positive");
    assert!((0.0..=1.0).contains(&s), "share must lie in [0, 1]");
    if s == 0.0 {
        return n;
    }
    let d = (1.0 / s).floor();
    if d >= f64::from(n) {
        n
    } else {
        d as u32
    }
}

fn binom_u128(n: u32, k: u32) -> u128 {
    debug_assert!(k <= n);
    let k = k.min(n - k);
    let mut result: u128 = 1;
    for i in 0..u128::from(k) {
        result = result * (u128::from(n) - i) / (i + 1);
    }
    result
}

/// Share intervals of rank `k`, ascending, each tagged with its range index.
///
/// Rank 1 spans `(1/N, 1]` over `d = N-1 .. 1`; ranks `k >= 2` span
/// `(0, 1/k]` over `d = N .. k`, the lowest interval absorbing everything
/// below `1/N`.
fn segment_spans(n: u32, k: u32) -> Vec<(u32, f64, f64)> {
    if k == 1 {
        (1..n)
            .rev()
            .map(|d| (d, 1.0 / f64::from(d + 1), 1.0 / f64::from(d)))
            .collect()
    } else {
        (k..=n)
            .rev()
            .map(|d| {
                let lower = if d == n { 0.0 } else { 1.0 / f64::from(d + 1) };
                (d, lower, 1.0 / f64::from(d))
            })
            .collect()
    }
}

/// Density of the share of rank `k` among `n` participants.
///
/// Zero outside the support; requires `n >= 2` (a single participant is a
/// point mass at 1).
pub fn pdf(n: u32, k: u32, s: f64) -> f64 {
    assert!(n >= 2, "density requires at least 2 participants");
    assert!((1..=n).contains(&k), "rank out of range");
    let (lo, hi) = support_bounds(n, k);
    if !(lo..=hi).contains(&s) {
        return 0.0;
    }
    if n == 2 && s == 0.5 {
        // The single interior breakpoint; it belongs to rank 1's segment.
        return if k == 1 { 2.0 } else { 0.0 };
    }
    let d = range_index(n, s).max(k);
    let exponent = n as i32 - 2;
    let mut sum = 0.0;
    let mut sign = 1.0;
    for i in k..=d {
        sum += sign * binom_u128(n - k, i - k) as f64 * (1.0 - f64::from(i) * s).powi(exponent);
        sign = -sign;
    }
    // The alternating sum cancels to ~S^(N-k) near the lower support edge;
    // clamp the round-off residue of that cancellation.
    (f64::from(n) * f64::from(n - 1) * binom_u128(n - 1, k - 1) as f64 * sum).max(0.0)
}

/// Antiderivative of `(1 - ix)^(n-2)` evaluated at `x`.
fn basis_integral(i: u32, x: f64, n: u32) -> f64 {
    let u = 1.0 - f64::from(i) * x;
    -u.powi(n as i32 - 1) / (f64::from(i) * f64::from(n - 1))
}

/// Antiderivative of `x (1 - ix)^(n-2)` evaluated at `x`.
fn basis_moment(i: u32, x: f64, n: u32) -> f64 {
    let u = 1.0 - f64::from(i) * x;
    let i2 = f64::from(i) * f64::from(i);
    -(u.powi(n as i32 - 1) / f64::from(n - 1) - u.powi(n as i32) / f64::from(n)) / i2
}

fn accumulate_segments(n: u32, k: u32, s: f64, primitive: impl Fn(u32, f64) -> f64) -> f64 {
    let mut acc = KahanSum::new();
    for (d, seg_lo, seg_hi) in segment_spans(n, k) {
        if s <= seg_lo {
            break;
        }
        let up = s.min(seg_hi);
        let mut sign = 1.0;
        for i in k..=d {
            let coeff = sign * binom_u128(n - k, i - k) as f64;
            acc.add(coeff * (primitive(i, up) - primitive(i, seg_lo)));
            sign = -sign;
        }
    }
    f64::from(n) * f64::from(n - 1) * binom_u128(n - 1, k - 1) as f64 * acc.value()
}

/// Probability that the share of rank `k` is at most `s`; term-wise
/// closed-form integral of [`pdf`], accumulated across segments.
pub fn cdf(n: u32, k: u32, s: f64) -> f64 {
    assert!(n >= 2, "cdf requires at least 2 participants");
    assert!((1..=n).contains(&k), "rank out of range");
    let (lo, _) = support_bounds(n, k);
    if s <= lo {
        return 0.0;
    }
    accumulate_segments(n, k, s, |i, x| basis_integral(i, x, n)).max(0.0)
}

/// Mean share of rank `k` computed from the density (`∫ s · pdf ds`,
/// term-wise closed form). Must agree with [`expected_share`].
pub fn density_mean(n: u32, k: u32) -> f64 {
    assert!(n >= 2, "density mean requires at least 2 participants");
    assert!((1..=n).contains(&k), "rank out of range");
    let (_, hi) = support_bounds(n, k);
    accumulate_segments(n, k, hi, |i, x| basis_moment(i, x, n))
}

/// Harmonic-tail expected share: `(1/N) Σ_{i=k}^{N} 1/i`.
pub fn expected_share(n: u32, k: u32) -> f64 {
    assert!(n >= 1 && (1..=n).contains(&k), "rank out of range");
    let mut acc = KahanSum::new();
    for i in (k..=n).rev() {
        acc.add(1.0 / f64::from(i));
    }
    acc.value() / f64::from(n)
}

/// Expected share per rank for a fixed participant count; the Zipf curve.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RankProfile {
    pub n: u32,
    /// `expected[k - 1]` is the mean share of rank `k`.
    pub expected: Vec<f64>,
}

pub fn rank_profile(n: u32) -> RankProfile {
    assert!(n >= 1, "participant count must be positive");
    RankProfile {
        n,
        expected: (1..=n).map(|k| expected_share(n, k)).collect(),
    }
}

/// `(log10 k, log10 expected_share(n, k))` for every rank; a straight-ish
/// line of slope about -1 on the leading ranks.
pub fn zipf_series(n: u32) -> Vec<(f64, f64)> {
    (1..=n)
        .map(|k| (f64::from(k).log10(), expected_share(n, k).log10()))
        .collect()
}

/// One share interval of a rank's piecewise density: on `(lower, upper]` the
/// unnormalized density is `Σ_i coeffs[i-1] · (1 - iS)^(N-2)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PdfSegment {
    pub d: u32,
    pub lower: f64,
    pub upper: f64,
    pub coeffs: Vec<i64>,
}

/// Piecewise polynomial form of one rank's density; multiplying the segment
/// polynomials by `norm = N(N-1)` reproduces [`pdf`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PiecewisePdf {
    #[serde(rename = "N")]
    pub n: u32,
    pub k: u32,
    #[serde(skip)]
    pub norm: f64,
    pub segments: Vec<PdfSegment>,
}

impl PiecewisePdf {
    /// Density evaluated from the stored coefficient rows.
    pub fn eval(&self, s: f64) -> f64 {
        let (lo, hi) = support_bounds(self.n, self.k);
        if !(lo..=hi).contains(&s) {
            return 0.0;
        }
        let d = range_index(self.n, s).max(self.k);
        let Some(segment) = self.segments.iter().find(|seg| seg.d == d) else {
            return 0.0;
        };
        let exponent = self.n as i32 - 2;
        let mut sum = 0.0;
        for (idx, &a) in segment.coeffs.iter().enumerate() {
            if a != 0 {
                sum += a as f64 * (1.0 - (idx as f64 + 1.0) * s).powi(exponent);
            }
        }
        (self.norm * sum).max(0.0)
    }
}

/// Coefficient rows for rank `k` of `n`: on the segment with range index `d`,
/// `a_i = (-1)^(i-k) C(N-1, k-1) C(N-k, i-k)` for `k <= i <= d`, else 0.
pub fn rank_polynomials(n: u32, k: u32) -> PiecewisePdf {
    assert!(n >= 2, "polynomials require at least 2 participants");
    assert!((1..=n).contains(&k), "rank out of range");
    let base = binom_u128(n - 1, k - 1);
    let segments = segment_spans(n, k)
        .into_iter()
        .map(|(d, lower, upper)| {
            let coeffs = (1..=n)
                .map(|i| {
                    if i < k || i > d {
                        return 0;
                    }
                    let magnitude = i64::try_from(base * binom_u128(n - k, i - k))
                        .expect("coefficient fits i64");
                    if (i - k).is_multiple_of(2) {
                        magnitude
                    } else {
                        -magnitude
                    }
                })
                .collect();
            PdfSegment {
                d,
                lower,
                upper,
                coeffs,
            }
        })
        .collect();
    PiecewisePdf {
        n,
        k,
        norm: f64::from(n) * f64::from(n - 1),
        segments,
    }
}

/// Coefficient rows for every rank of `n` (meaningful from `n = 3` up;
/// below that the densities are piecewise constant).
pub fn polynomial_table(n: u32) -> Vec<PiecewisePdf> {
    assert!(n >= 3, "table requires at least 3 participants");
    (1..=n).map(|k| rank_polynomials(n, k)).collect()
}

/// Last-rank density in closed form: `N(N-1)(1 - NS)^(N-2)` on `[0, 1/N]`.
///
/// Consistency contract: equals `pdf(n, n, s)` everywhere.
pub fn pdf_last_rank(n: u32, s: f64) -> f64 {
    assert!(n >= 2, "density requires at least 2 participants");
    if !(0.0..=1.0 / f64::from(n)).contains(&s) {
        return 0.0;
    }
    if n == 2 && s == 0.5 {
        // Same boundary convention as `pdf`: 1/2 belongs to rank 1.
        return 0.0;
    }
    f64::from(n) * f64::from(n - 1) * (1.0 - f64::from(n) * s).powi(n as i32 - 2)
}

/// The two unnormalized closed forms of the rank `N-1` density, split at the
/// breakpoint `1/N`. Each is proportional to `pdf(n, n-1, ·)` on its interval
/// with one shared constant.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SecondLastForms {
    n: u32,
}

pub fn second_last_polynomials(n: u32) -> SecondLastForms {
    assert!(n >= 3, "second-last forms require at least 3 participants");
    SecondLastForms { n }
}

impl SecondLastForms {
    pub fn breakpoint(&self) -> f64 {
        1.0 / f64::from(self.n)
    }

    /// `[(1 - (N-1)S)^(N-2) - (1 - NS)^(N-2)] / (N-2)` on `(0, 1/N)`.
    pub fn below_breakpoint(&self, s: f64) -> f64 {
        let n = f64::from(self.n);
        let e = self.n as i32 - 2;
        ((1.0 - (n - 1.0) * s).powi(e) - (1.0 - n * s).powi(e)) / (n - 2.0)
    }

    /// `(1 - (N-1)S)^(N-2) / (N-2)` on `(1/N, 1/(N-1))`.
    pub fn above_breakpoint(&self, s: f64) -> f64 {
        let n = f64::from(self.n);
        let e = self.n as i32 - 2;
        (1.0 - (n - 1.0) * s).powi(e) / (n - 2.0)
    }
}
