//! q-Pochhammer symbols, the Heine distribution and the discrete normal
//! distribution on the integers.
//!
//! All probabilities are evaluated in log space. For `theta > 0` and
//! `0 < q < 1` the Heine law is
//!
//! ```text
//! P(X = j) = q^{j(j-1)/2} theta^j / ((q;q)_j (-theta;q)_inf),   j >= 0,
//! ```
//!
//! the law of a sum of independent Bernoulli variables with odds
//! `theta q^i`. The discrete normal law has weights `theta^k q^{k(k-1)/2}` on
//! all of ℤ.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{log_sum_exp, Real};

/// Truncation control for infinite products and bilateral sums.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeriesTolerance<T> {
    pub eps: T,
    pub max_terms: usize,
}

impl<T: Real> Default for SeriesTolerance<T> {
    fn default() -> Self {
        Self {
            eps: T::lit(1e-14),
            max_terms: 10_000,
        }
    }
}

/// Parameters of a Heine distribution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HeineParams<T> {
    pub theta: T,
    pub q: T,
}

/// Parameters of a discrete normal distribution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DNormParams<T> {
    pub theta: T,
    pub q: T,
}

fn check_params<T: Real>(theta: T, q: T) -> Result<()> {
    if !(theta > T::zero()) || !theta.is_finite() {
        return Err(Error::InvalidParameter(format!("theta must be positive, got {theta}")));
    }
    if !(q > T::zero() && q < T::one()) {
        return Err(Error::InvalidParameter(format!("q must lie in (0, 1), got {q}")));
    }
    Ok(())
}

impl<T: Real> HeineParams<T> {
    pub fn new(theta: T, q: T) -> Result<Self> {
        check_params(theta, q)?;
        Ok(Self { theta, q })
    }
}

impl<T: Real> DNormParams<T> {
    pub fn new(theta: T, q: T) -> Result<Self> {
        check_params(theta, q)?;
        Ok(Self { theta, q })
    }
}

/// Finite q-Pochhammer symbol `(z;q)_j`.
pub fn qpoch_finite<T: Real>(z: T, q: T, j: usize) -> T {
    let mut p = T::one();
    let mut zq = z;
    for _ in 0..j {
        p *= T::one() - zq;
        zq *= q;
    }
    p
}

fn check_q<T: Real>(q: T) -> Result<()> {
    if !(q.abs() < T::one()) {
        return Err(Error::InvalidParameter(format!("|q| must be below 1, got {q}")));
    }
    Ok(())
}

/// Infinite q-Pochhammer symbol `(z;q)_inf`.
pub fn qpoch_inf<T: Real>(z: T, q: T, tol: &SeriesTolerance<T>) -> Result<T> {
    check_q(q)?;
    let tail = T::one() / (T::one() - q.abs());
    let mut p = T::one();
    let mut zq = z;
    for i in 0..tol.max_terms {
        p *= T::one() - zq;
        if zq.abs() * tail < tol.eps * T::lit(0.1) || p == T::zero() {
            return Ok(p);
        }
        zq *= q;
        if i + 1 == tol.max_terms {
            break;
        }
    }
    Err(Error::NonConvergence { terms: tol.max_terms })
}

/// `log (z;q)_inf` for `z < 1` and `0 <= q < 1`, where every factor is positive.
pub fn log_qpoch_inf<T: Real>(z: T, q: T, tol: &SeriesTolerance<T>) -> Result<T> {
    check_q(q)?;
    if !(z < T::one()) || q < T::zero() {
        return Err(Error::DomainError(format!("log (z;q)_inf needs z < 1 and q >= 0, got z = {z}, q = {q}")));
    }
    let tail = T::one() / (T::one() - q);
    let mut s = T::zero();
    let mut zq = z;
    for _ in 0..tol.max_terms {
        let term = (-zq).ln_1p();
        s += term;
        if term.abs() * tail < tol.eps * T::lit(0.1) {
            return Ok(s);
        }
        zq *= q;
    }
    Err(Error::NonConvergence { terms: tol.max_terms })
}

/// `log (q;q)_j`.
pub fn log_qfactorial<T: Real>(q: T, j: usize) -> T {
    let mut s = T::zero();
    let mut qk = q;
    for _ in 0..j {
        s += (-qk).ln_1p();
        qk *= q;
    }
    s
}

/// Log of the Heine probability mass at `j`.
pub fn heine_log_pmf<T: Real>(j: usize, p: &HeineParams<T>, tol: &SeriesTolerance<T>) -> Result<T> {
    check_params(p.theta, p.q)?;
    let jt = T::of(j);
    let z = log_qpoch_inf(-p.theta, p.q, tol)?;
    Ok(jt * (jt - T::one()) * T::lit(0.5) * p.q.ln() + jt * p.theta.ln() - log_qfactorial(p.q, j) - z)
}

/// Heine probability mass at `j`.
pub fn heine_pmf<T: Real>(j: usize, p: &HeineParams<T>, tol: &SeriesTolerance<T>) -> Result<T> {
    heine_log_pmf(j, p, tol).map(T::exp)
}

/// Cumulant generating function `log E[e^{sX}] = log(-theta e^s;q)_inf - log(-theta;q)_inf`.
pub fn heine_cgf<T: Real>(s: T, p: &HeineParams<T>, tol: &SeriesTolerance<T>) -> Result<T> {
    check_params(p.theta, p.q)?;
    Ok(log_qpoch_inf(-p.theta * s.exp(), p.q, tol)? - log_qpoch_inf(-p.theta, p.q, tol)?)
}

fn bernoulli_series<T: Real>(p: &HeineParams<T>, tol: &SeriesTolerance<T>, f: impl Fn(T) -> T) -> Result<T> {
    check_params(p.theta, p.q)?;
    let tail = T::one() / (T::one() - p.q);
    let mut s = T::zero();
    let mut odds = p.theta;
    for _ in 0..tol.max_terms {
        let term = f(odds / (T::one() + odds));
        s += term;
        if odds * tail < tol.eps * T::lit(0.1) {
            return Ok(s);
        }
        odds *= p.q;
    }
    Err(Error::NonConvergence { terms: tol.max_terms })
}

/// Mean `Σ theta q^j / (1 + theta q^j)`.
pub fn heine_mean<T: Real>(p: &HeineParams<T>, tol: &SeriesTolerance<T>) -> Result<T> {
    bernoulli_series(p, tol, |pi| pi)
}

/// Variance `Σ p_j (1 - p_j)` with `p_j = theta q^j / (1 + theta q^j)`.
pub fn heine_variance<T: Real>(p: &HeineParams<T>, tol: &SeriesTolerance<T>) -> Result<T> {
    bernoulli_series(p, tol, |pi| pi * (T::one() - pi))
}

fn dnorm_log_weight<T: Real>(k: i64, p: &DNormParams<T>) -> T {
    let kt = T::from_i64(k).expect("index representable");
    kt * p.theta.ln() + kt * (kt - T::one()) * T::lit(0.5) * p.q.ln()
}

/// Log of the discrete normal normaliser `Σ_k theta^k q^{k(k-1)/2}`, summed
/// outward from the mode.
pub fn dnorm_log_normalizer<T: Real>(p: &DNormParams<T>, tol: &SeriesTolerance<T>) -> Result<T> {
    check_params(p.theta, p.q)?;
    let mode = dnorm_mode(p);
    let top = dnorm_log_weight(mode, p);
    let cut = tol.eps.ln() - T::lit(2.0);
    let mut terms = vec![T::zero()];
    for dir in [1i64, -1] {
        let mut k = mode + dir;
        loop {
            let w = dnorm_log_weight(k, p) - top;
            terms.push(w);
            if w < cut {
                break;
            }
            if terms.len() > tol.max_terms {
                return Err(Error::NonConvergence { terms: tol.max_terms });
            }
            k += dir;
        }
    }
    Ok(top + log_sum_exp(&terms))
}

/// Most probable integer of the discrete normal law.
pub fn dnorm_mode<T: Real>(p: &DNormParams<T>) -> i64 {
    let m = T::lit(0.5) - p.theta.ln() / p.q.ln();
    m.round().to_i64().unwrap_or(0)
}

/// Discrete normal probability mass at `k`.
pub fn dnorm_pmf<T: Real>(k: i64, p: &DNormParams<T>, tol: &SeriesTolerance<T>) -> Result<T> {
    Ok((dnorm_log_weight(k, p) - dnorm_log_normalizer(p, tol)?).exp())
}

/// Parameters of the two Heine laws and the discrete normal law attached to
/// a spectral gap with radius ratio `ratio = r1/r2`, Laplacian jump constant
/// `c` and fractional part `x`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GapLaws<T> {
    pub plus: HeineParams<T>,
    pub minus: HeineParams<T>,
    pub dnorm: DNormParams<T>,
}

impl<T: Real> GapLaws<T> {
    pub fn new(ratio: T, c: T, x: T) -> Result<Self> {
        if !(ratio > T::zero() && ratio < T::one()) {
            return Err(Error::InvalidParameter(format!("radius ratio must lie in (0, 1), got {ratio}")));
        }
        let q = ratio * ratio;
        let two_x = x + x;
        let plus = HeineParams::new((-c).exp() * ratio.powf(T::one() + two_x), q)?;
        let minus = HeineParams::new(c.exp() * ratio.powf(T::one() - two_x), q)?;
        Ok(Self {
            plus,
            minus,
            dnorm: DNormParams::new(plus.theta, q)?,
        })
    }

    /// CGF of `X⁺ − X⁻` at `s`.
    pub fn difference_cgf(&self, s: T, tol: &SeriesTolerance<T>) -> Result<T> {
        Ok(heine_cgf(s, &self.plus, tol)? + heine_cgf(-s, &self.minus, tol)?)
    }
}
