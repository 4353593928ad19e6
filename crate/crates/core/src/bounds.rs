//! Closed-form width/error bounds, evaluated exactly.

use std::fmt;
use std::fmt::Write as _;

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use serde_json::json;

use crate::constructions::{tribes_delta, RoundingPlan};
use crate::error::{Error, Result};
use crate::exact::{binomial, ceil_nth_root, factorial, format_rational, int, rational, Surd};

/// `x (x-1) ... (x-k+1) / k!` for real `x`; `1` when `k = 0`.
pub fn gen_binom(x: impl Into<Surd>, k: usize) -> Surd {
    let x = x.into();
    let mut acc = Surd::from(1);
    for i in 0..k {
        acc = &acc * &(&x - &Surd::from(i as i64));
    }
    acc.scale(&BigRational::new(BigInt::one(), BigInt::from(factorial(k as u64))))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Verdict {
    Consistent,
    RuledOut,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Consistent => "consistent",
            Verdict::RuledOut => "ruled_out",
        })
    }
}

/// Outcome of the width/error feasibility inequality
/// `C(m+k, k) + (n-m-1) w >= C(n - 2(k-1)delta + k - 1, k)`, where `m` is
/// the largest `m <= n-1` with `C(m+k-1, k-1) <= w`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BoundReport {
    pub n: usize,
    pub k: usize,
    pub w: u64,
    pub delta: Surd,
    pub m: usize,
    pub lhs: BigInt,
    pub rhs: Surd,
    pub verdict: Verdict,
    pub formula_id: &'static str,
}

impl BoundReport {
    pub const CSV_HEADER: &'static str = "n,k,w,delta,m,lhs,rhs,verdict";

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{}",
            self.n, self.k, self.w, self.delta, self.m, self.lhs, self.rhs, self.verdict
        )
    }

    pub fn to_json(&self) -> serde_json::Value {
        json!({
            "formula_id": self.formula_id,
            "n": self.n,
            "k": self.k,
            "w": self.w,
            "delta": self.delta.to_string(),
            "m": self.m,
            "lhs": self.lhs.to_string(),
            "rhs": self.rhs.to_string(),
            "verdict": self.verdict.to_string(),
        })
    }
}

/// Largest `m <= n-1` with `C(m+k-1, k-1) <= w`.
fn threshold_m(n: usize, k: usize, w: u64) -> usize {
    let fits = |m: usize| binomial((m + k - 1) as u64, (k - 1) as u64) <= BigUint::from(w);
    let (mut lo, mut hi) = (0, n - 1);
    while lo < hi {
        let mid = lo + (hi - lo).div_ceil(2);
        if fits(mid) {
            lo = mid;
        } else {
            hi = mid - 1;
        }
    }
    lo
}

/// Decides whether width `w` and error `delta` are compatible with
/// approximate `k`-letter counting on `n` symbols.
pub fn thm_main_feasible(n: usize, k: usize, w: u64, delta: impl Into<Surd>) -> Result<BoundReport> {
    let delta = delta.into();
    if k < 2 || n < 1 || w < 1 {
        return Err(Error::precondition(format!(
            "feasibility check needs k >= 2, n >= 1, w >= 1; got n = {n}, k = {k}, w = {w}"
        )));
    }
    let spread = delta.scale(&int(2 * (k as i64 - 1)));
    if delta.is_negative() || spread > Surd::from(n as i64) {
        return Err(Error::precondition(format!(
            "feasibility check needs 0 <= delta <= n/(2(k-1)); got delta = {delta}"
        )));
    }
    let m = threshold_m(n, k, w);
    let lhs = BigInt::from(binomial((m + k) as u64, k as u64))
        + BigInt::from(n - m - 1) * BigInt::from(w);
    let rhs = gen_binom(&Surd::from((n + k - 1) as i64) - &spread, k);
    let verdict = if Surd::from(int(lhs.clone())) < rhs {
        Verdict::RuledOut
    } else {
        Verdict::Consistent
    };
    Ok(BoundReport {
        n,
        k,
        w,
        delta,
        m,
        lhs,
        rhs,
        verdict,
        formula_id: "width_error_tradeoff",
    })
}

/// Reports for every `w` in `widths`, in order.
pub fn sweep(n: usize, k: usize, widths: impl IntoIterator<Item = u64>, delta: &Surd) -> Result<Vec<BoundReport>> {
    widths
        .into_iter()
        .map(|w| thm_main_feasible(n, k, w, delta))
        .collect()
}

/// Smallest width the feasibility check does not rule out.
pub fn min_consistent_width(n: usize, k: usize, delta: &Surd) -> Result<u64> {
    let full = binomial((n + k - 1) as u64, (k - 1) as u64)
        .to_u64()
        .unwrap_or(u64::MAX);
    let (mut lo, mut hi) = (1u64, full.max(1));
    if thm_main_feasible(n, k, hi, delta)?.verdict == Verdict::RuledOut {
        return Err(Error::precondition("no width up to the exact counter's is consistent"));
    }
    while lo < hi {
        let mid = lo + (hi - lo) / 2;
        if thm_main_feasible(n, k, mid, delta)?.verdict == Verdict::Consistent {
            hi = mid;
        } else {
            lo = mid + 1;
        }
    }
    Ok(lo)
}

/// Bits of precision kept when rounding the root below.
const ROOT_BITS: u32 = 64;

/// `(n - (k! n w)^(1/k)) / (2(k-1))`, rounded down to within `2^-64` and
/// clamped at `0`.
pub fn lb_small_w(n: usize, k: usize, w: u64) -> Result<BigRational> {
    if k < 2 || n < 1 || w < 1 {
        return Err(Error::precondition(format!(
            "small-width bound needs k >= 2, n >= 1, w >= 1; got n = {n}, k = {k}, w = {w}"
        )));
    }
    let radicand = factorial(k as u64) * BigUint::from(n) * BigUint::from(w);
    let scaled = radicand << (ROOT_BITS as usize * k);
    let root_up = BigRational::new(
        BigInt::from(ceil_nth_root(&scaled, k as u32)),
        BigInt::one() << ROOT_BITS,
    );
    let value = (int(n as u64) - root_up) / int(2 * (k as u64 - 1));
    Ok(value.max(BigRational::zero()))
}

/// `n^(k-1) / (k! 3^k)`: least width for error `n/(3(k-1))`.
pub fn lb_standard(n: usize, k: usize) -> Result<BigRational> {
    if k < 2 || n < 3 * k {
        return Err(Error::precondition(format!(
            "standard bound needs k >= 2 and n >= 3k; got n = {n}, k = {k}"
        )));
    }
    let num = BigInt::from(n).pow((k - 1) as u32);
    let den = BigInt::from(factorial(k as u64)) * BigInt::from(3u32).pow(k as u32);
    Ok(BigRational::new(num, den))
}

/// `max{(43/243) (floor(n/10)+1)^(floor(k/10)+1) / 2^k, 2^k}`: least width
/// for `k` parallel counters with error `n/3`.
pub fn kpar_lower_bound(n: usize, k: usize) -> Result<BigRational> {
    if k < 1 || n < 3 * k {
        return Err(Error::precondition(format!(
            "parallel bound needs k >= 1 and n >= 3k; got n = {n}, k = {k}"
        )));
    }
    let side = BigInt::from(n / 10 + 1);
    let two_k = BigInt::one() << k;
    let explicit = rational(43, 243) * int(side.pow((k / 10 + 1) as u32)) / int(two_k.clone());
    Ok(explicit.max(int(two_k)))
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Tightness {
    /// Error envelope for binary counting at a fixed width.
    SmallWidth {
        n: usize,
        w: usize,
        lower: BigRational,
        upper: Surd,
    },
    /// Width envelope for `k`-letter counting at a fixed error.
    SmallError {
        n: usize,
        k: usize,
        delta: BigRational,
        lower: u64,
        upper: BigUint,
    },
}

/// Binary counting with width `w`: error lies in `[lower, upper]`.
pub fn tightness_small_width(n: usize, w: usize) -> Result<Tightness> {
    if n >= 1 && w > n {
        return Ok(Tightness::SmallWidth {
            n,
            w,
            lower: BigRational::zero(),
            upper: Surd::from(0),
        });
    }
    if w < 3 || 10 * w > n {
        return Err(Error::precondition(format!(
            "small-width regime needs 3 <= w <= n/10 (or w > n); got n = {n}, w = {w}"
        )));
    }
    Ok(Tightness::SmallWidth {
        n,
        w,
        lower: lb_small_w(n, 2, w as u64)?,
        upper: tribes_delta(n, w),
    })
}

/// `k`-letter counting with error `delta`: width lies in `[lower, upper]`.
pub fn tightness_small_error(n: usize, k: usize, delta: &BigRational) -> Result<Tightness> {
    if k < 2 || *delta < int(10) || *delta > rational(n as i64, 10 * (k * k) as i64) {
        return Err(Error::precondition(format!(
            "small-error regime needs k >= 2 and 10 <= delta <= n/(10k^2); got n = {n}, k = {k}, delta = {}",
            format_rational(delta)
        )));
    }
    let plan = RoundingPlan::new(n, k, delta)?;
    Ok(Tightness::SmallError {
        n,
        k,
        delta: delta.clone(),
        lower: min_consistent_width(n, k, &Surd::from(delta))?,
        upper: plan.width_bound(),
    })
}

impl Tightness {
    /// Whether the lower end does not exceed the upper end.
    pub fn is_ordered(&self) -> bool {
        match self {
            Tightness::SmallWidth { lower, upper, .. } => Surd::from(lower) <= *upper,
            Tightness::SmallError { lower, upper, .. } => BigUint::from(*lower) <= *upper,
        }
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        match self {
            Tightness::SmallWidth { n, w, lower, upper } => {
                let gap = upper - &Surd::from(lower);
                writeln!(out, "binary counting, n = {n}, width {w}").unwrap();
                writeln!(
                    out,
                    "  error lower bound: {} (~{:.4})",
                    format_rational(lower),
                    crate::exact::rational_to_f64(lower)
                )
                .unwrap();
                writeln!(out, "  error upper bound: {upper} (~{:.4})", upper.to_f64()).unwrap();
                writeln!(out, "  gap: {gap} (~{:.4})", gap.to_f64()).unwrap();
            }
            Tightness::SmallError {
                n,
                k,
                delta,
                lower,
                upper,
            } => {
                writeln!(
                    out,
                    "{k}-letter counting, n = {n}, error {}",
                    format_rational(delta)
                )
                .unwrap();
                writeln!(out, "  width lower bound: {lower}").unwrap();
                writeln!(out, "  width upper bound: {upper}").unwrap();
                writeln!(out, "  ratio: ~{:.4}", upper.to_f64().unwrap_or(f64::INFINITY) / *lower as f64)
                    .unwrap();
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn generalized_binomials() {
        assert_eq!(gen_binom(5, 2), Surd::from(10));
        assert_eq!(gen_binom(1, 2), Surd::from(0));
        assert_eq!(gen_binom(rational(7, 2), 2), Surd::from(rational(35, 8)));
        assert_eq!(gen_binom(rational(-3, 1), 0), Surd::from(1));
    }

    #[test]
    fn feasibility_examples() {
        let r = thm_main_feasible(90, 2, 4, 30).unwrap();
        assert_eq!((r.m, r.lhs.clone()), (3, BigInt::from(354)));
        assert_eq!(r.rhs, Surd::from(465));
        assert_eq!(r.verdict, Verdict::RuledOut);
        let r = thm_main_feasible(90, 2, 6, 30).unwrap();
        assert_eq!((r.m, r.lhs.clone()), (5, BigInt::from(525)));
        assert_eq!(r.verdict, Verdict::Consistent);
        let r = thm_main_feasible(10, 3, 66, 0).unwrap();
        assert_eq!(r.verdict, Verdict::Consistent);
        assert!(thm_main_feasible(10, 2, 3, 6).is_err());
        assert!(thm_main_feasible(10, 1, 3, 1).is_err());
    }

    #[test]
    fn small_width_bound() {
        let b = lb_small_w(100, 2, 4).unwrap();
        let exact = 50.0 - 10.0 * 2f64.sqrt();
        assert!((crate::exact::rational_to_f64(&b) - exact).abs() < 1e-12);
        let true_value = &Surd::from(50) - &Surd::sqrt_of(200u32);
        assert!(Surd::from(&b) <= true_value);
        assert!(true_value - Surd::from(&b) < Surd::from(BigRational::new(1.into(), BigInt::one() << 64)));
        assert!(lb_small_w(90, 2, 4).unwrap() > int(30));
        assert!(lb_small_w(90, 2, 5).unwrap() <= int(30));
        assert_eq!(lb_small_w(10, 2, 11).unwrap(), int(0));
    }

    #[test]
    fn closed_forms() {
        assert_eq!(lb_standard(90, 2).unwrap(), int(5));
        assert_eq!(lb_standard(27, 2).unwrap(), rational(3, 2));
        for k in 2..=6usize {
            let b = lb_standard(3 * k, k).unwrap();
            assert!(b <= int(BigInt::from(binomial(4 * k as u64 - 1, k as u64 - 1))));
        }
        assert_eq!(kpar_lower_bound(100, 10).unwrap(), int(1024));
        let big_n = kpar_lower_bound(1_000_000, 10).unwrap();
        assert_eq!(big_n, rational(43, 243) * int(100_001u64 * 100_001) / int(1024));
        assert_eq!(kpar_lower_bound(100, 1).unwrap(), rational(43 * 11, 243).max(int(2)));
    }

    #[test]
    fn sweeps_are_monotone() {
        let d = Surd::from(30);
        let reports = sweep(90, 2, 1..=20, &d).unwrap();
        assert!(reports.windows(2).all(|p| p[0].lhs <= p[1].lhs));
        assert_eq!(min_consistent_width(90, 2, &d).unwrap(), 6);
    }

    #[test]
    fn tightness_envelopes() {
        let t = tightness_small_width(1000, 10).unwrap();
        let Tightness::SmallWidth { upper, .. } = &t else { unreachable!() };
        assert_eq!(*upper, Surd::from(495));
        assert!(t.is_ordered());
        let deg = tightness_small_width(20, 21).unwrap();
        assert_eq!(deg, Tightness::SmallWidth { n: 20, w: 21, lower: int(0), upper: Surd::from(0) });
        let e = tightness_small_error(1000, 2, &int(10)).unwrap();
        assert!(e.is_ordered());
        assert!(tightness_small_width(1000, 2).is_err());
        assert!(tightness_small_error(1000, 3, &int(20)).is_err());
    }
}
