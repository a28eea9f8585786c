//! Young functions, their inverses, complementary functions and the Δ₂ check.
//!
//! Three families are available:
//!
//! * `power:p`: `|x|^p` with `p > 1`
//! * `powerlog:p`: `|x|^p · ln(e + |x|)` with `p ≥ 1`
//! * `expminus`: `e^|x| − 1 − |x|`
//!
//! Everything here is a pure function of immutable values.

use std::fmt;
use std::str::FromStr;

use crate::error::{domain, Error, Result};
use crate::numeric::{bracket_crossing, maximize_concave};

/// Relative tolerance of [`Young::inverse`].
pub const INVERSE_TOL: f64 = 1e-12;
/// Relative tolerance of the golden-section search behind [`Complementary`].
pub const CONJUGATE_TOL: f64 = 1e-10;

/// An even convex gauge `φ` with `φ(0) = 0` that is strictly increasing on
/// `[0, ∞)`.
///
/// Implemented by [`YoungFunction`] and by its conjugate [`Complementary`],
/// so that norms can be taken with respect to either member of the pair.
pub trait Young {
    /// `φ(|x|)`. Callers guarantee `x` is finite.
    fn value(&self, x: f64) -> f64;

    /// The unique `x ≥ 0` with `φ(x) = y`.
    fn inverse(&self, y: f64) -> Result<f64> {
        if !(y >= 0.0) || !y.is_finite() {
            return domain(format!("inverse needs a finite y >= 0, got {y}"));
        }
        if y == 0.0 {
            return Ok(0.0);
        }
        let (lo, hi) = bracket_crossing(|x| self.value(x), y, INVERSE_TOL * 0.01);
        if !hi.is_finite() {
            return domain(format!("no preimage for {y}: function saturates"));
        }
        Ok(0.5 * (lo + hi))
    }
}

/// A member of one of the supported Young-function families.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum YoungFunction {
    Power { p: f64 },
    PowerLog { p: f64 },
    ExpMinus,
}

impl YoungFunction {
    pub fn power(p: f64) -> Result<Self> {
        if !(p > 1.0) || !p.is_finite() {
            return domain(format!("power family needs p > 1, got {p}"));
        }
        Ok(YoungFunction::Power { p })
    }

    pub fn power_log(p: f64) -> Result<Self> {
        if !(p >= 1.0) || !p.is_finite() {
            return domain(format!("powerlog family needs p >= 1, got {p}"));
        }
        Ok(YoungFunction::PowerLog { p })
    }

    /// Checked evaluation of `φ(x)`.
    pub fn eval(&self, x: f64) -> Result<f64> {
        if !x.is_finite() {
            return domain(format!("cannot evaluate a Young function at {x}"));
        }
        Ok(self.value(x))
    }

    /// The complementary function `ψ(y) = sup{x|y| − φ(x) : x ≥ 0}`.
    pub fn complementary(&self) -> Complementary {
        Complementary { base: *self }
    }

    /// Numerical Δ₂ certificate: the largest `φ(2x)/φ(x)` over a geometric
    /// grid of `n_samples` points in `[x0, xmax]`, plus a stability verdict.
    ///
    /// The verdict requires the ratio maximum over the top decade of the grid
    /// to be finite and within 5% of the maximum over the decade below it.
    /// When the grid spans less than two decades the two windows shrink to
    /// halves of its log-range.
    pub fn check_delta2(&self, x0: f64, xmax: f64, n_samples: usize) -> Result<Delta2Certificate> {
        if !(x0 > 0.0) || !(xmax > x0) || !xmax.is_finite() {
            return domain(format!("delta-2 grid needs 0 < x0 < xmax, got [{x0}, {xmax}]"));
        }
        if n_samples < 2 {
            return domain("delta-2 grid needs at least two samples");
        }
        let log_span = (xmax / x0).log10();
        let width = log_span.min(2.0) / 2.0;
        let top_cut = xmax / 10f64.powf(width);
        let mid_cut = xmax / 10f64.powf(2.0 * width);

        let step = (xmax / x0).ln() / (n_samples - 1) as f64;
        let mut witness = 0.0_f64;
        let mut top = f64::NEG_INFINITY;
        let mut mid = f64::NEG_INFINITY;
        let mut below_top = f64::NEG_INFINITY;
        for i in 0..n_samples {
            let x = if i + 1 == n_samples {
                xmax
            } else {
                x0 * (step * i as f64).exp()
            };
            let ratio = self.value(2.0 * x) / self.value(x);
            let ratio = if ratio.is_nan() { f64::INFINITY } else { ratio };
            witness = witness.max(ratio);
            if x > top_cut {
                top = top.max(ratio);
            } else {
                below_top = ratio;
                if x > mid_cut {
                    mid = mid.max(ratio);
                }
            }
        }
        if mid == f64::NEG_INFINITY {
            mid = below_top;
        }
        let holds = witness.is_finite() && mid.is_finite() && mid > 0.0 && top / mid <= 1.05;
        Ok(Delta2Certificate {
            holds,
            witness_k: witness,
        })
    }

    /// Δ₂ certificate on the default grid `[1, 1e6]` with 241 samples.
    pub fn delta2_default(&self) -> Delta2Certificate {
        self.check_delta2(1.0, 1e6, 241).expect("default delta-2 grid is valid")
    }

    /// Fails with [`Error::Delta2Failed`] unless the default certificate holds.
    pub fn require_delta2(&self) -> Result<()> {
        let cert = self.delta2_default();
        if cert.holds {
            Ok(())
        } else {
            Err(Error::Delta2Failed {
                phi: self.to_string(),
                witness: cert.witness_k,
            })
        }
    }
}

fn exp_minus(x: f64) -> f64 {
    if x < 0.1 {
        // e^x - 1 - x cancels badly near zero; sum the series from x^2/2
        let mut term = x * x / 2.0;
        let mut sum = term;
        let mut n = 2.0;
        while term > sum * 1e-17 {
            n += 1.0;
            term *= x / n;
            sum += term;
        }
        sum
    } else {
        x.exp_m1() - x
    }
}

impl Young for YoungFunction {
    fn value(&self, x: f64) -> f64 {
        let a = x.abs();
        if a == 0.0 {
            return 0.0;
        }
        match *self {
            YoungFunction::Power { p } => a.powf(p),
            YoungFunction::PowerLog { p } => a.powf(p) * (std::f64::consts::E + a).ln(),
            YoungFunction::ExpMinus => exp_minus(a),
        }
    }
}

impl fmt::Display for YoungFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            YoungFunction::Power { p } => write!(f, "power:{p}"),
            YoungFunction::PowerLog { p } => write!(f, "powerlog:{p}"),
            YoungFunction::ExpMinus => write!(f, "expminus"),
        }
    }
}

impl FromStr for YoungFunction {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let (family, arg) = match s.split_once(':') {
            Some((fam, arg)) => (fam, Some(arg)),
            None => (s, None),
        };
        let param = |arg: Option<&str>| -> Result<f64> {
            let arg = arg.ok_or_else(|| Error::Domain(format!("`{s}` is missing its exponent")))?;
            arg.trim()
                .parse::<f64>()
                .map_err(|_| Error::Domain(format!("bad exponent in `{s}`")))
        };
        match family {
            "power" => YoungFunction::power(param(arg)?),
            "powerlog" => YoungFunction::power_log(param(arg)?),
            "expminus" if arg.is_none() => Ok(YoungFunction::ExpMinus),
            _ => domain(format!("unknown Young function `{s}`")),
        }
    }
}

/// Result of [`YoungFunction::check_delta2`]. A numerical certificate, not a proof.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Delta2Certificate {
    pub holds: bool,
    pub witness_k: f64,
}

/// Lazy evaluator of the complementary function `ψ` of a [`YoungFunction`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Complementary {
    base: YoungFunction,
}

impl Complementary {
    pub fn base(&self) -> YoungFunction {
        self.base
    }

    /// Checked evaluation of `ψ(y)`.
    pub fn eval(&self, y: f64) -> Result<f64> {
        if !y.is_finite() {
            return domain(format!("cannot evaluate a conjugate at {y}"));
        }
        Ok(self.value(y))
    }
}

impl Young for Complementary {
    fn value(&self, y: f64) -> f64 {
        let y = y.abs();
        if y == 0.0 {
            return 0.0;
        }
        match self.base {
            YoungFunction::Power { p } => {
                // maximizer of xy - x^p is (y/p)^(1/(p-1))
                let x = (y / p).powf(1.0 / (p - 1.0));
                x * y * (p - 1.0) / p
            }
            base => maximize_concave(|x| x * y - base.value(x), CONJUGATE_TOL * 0.1),
        }
    }
}

impl fmt::Display for Complementary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "conj({})", self.base)
    }
}
