//! Exact one-step distribution oracle.
//!
//! For a small graph the next growth step has `2^(t+1)` possible neighbor
//! subsets; each subset's probability is a product of exact rationals
//! `lambda * d_u / t` and their complements. Enumerating them gives an
//! independent route to every one-step expectation, against which the
//! martingale identities and second-moment bounds are checked as exact
//! rational (in)equalities. Float round-off never enters this path.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use thiserror::Error;

use crate::graph::GrowingGraph;

/// Default cap on `t` for subset enumeration (2^13 outcomes).
pub const DEFAULT_ENUMERATION_GUARD: usize = 12;

#[derive(Debug, Error, PartialEq)]
pub enum OracleError {
    #[error("t = {t} exceeds the enumeration guard {guard}")]
    AboveGuard { t: usize, guard: usize },
    #[error("lambda must be a rational in (0, 1]")]
    LambdaOutOfRange,
}

fn ratio(n: u64, d: u64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

fn int(n: u64) -> BigRational {
    BigRational::from_integer(BigInt::from(n))
}

/// All neighbor subsets of positive probability for one growth step,
/// with their exact probabilities. Bit `u` of an outcome mask means the new
/// vertex connects to `u`.
#[derive(Debug, Clone)]
pub struct ExactStepDistribution {
    t: usize,
    degrees: Vec<u32>,
    edge_count: u64,
    lambda: BigRational,
    outcomes: Vec<(u32, BigRational)>,
}

/// Enumerates the one-step distribution of `g` under attachment rate
/// `lambda` (an exact rational in `(0, 1]`).
pub fn exact_step_distribution(
    g: &GrowingGraph,
    lambda: &BigRational,
    guard: usize,
) -> Result<ExactStepDistribution, OracleError> {
    if lambda <= &BigRational::zero() || lambda > &BigRational::one() {
        return Err(OracleError::LambdaOutOfRange);
    }
    let t = g.t();
    if t > guard {
        return Err(OracleError::AboveGuard { t, guard });
    }
    let n = t + 1;
    let probs: Vec<BigRational> = (0..n)
        .map(|u| lambda * ratio(g.degree(u) as u64, t as u64))
        .collect();
    let complements: Vec<BigRational> = probs.iter().map(|p| BigRational::one() - p).collect();
    let mut outcomes = Vec::new();
    'mask: for mask in 0u32..(1 << n) {
        let mut prob = BigRational::one();
        for u in 0..n {
            let factor = if mask >> u & 1 == 1 {
                &probs[u]
            } else {
                &complements[u]
            };
            if factor.is_zero() {
                continue 'mask;
            }
            prob *= factor;
        }
        outcomes.push((mask, prob));
    }
    Ok(ExactStepDistribution {
        t,
        degrees: g.degrees().to_vec(),
        edge_count: g.edge_count(),
        lambda: lambda.clone(),
        outcomes,
    })
}

impl ExactStepDistribution {
    pub fn t(&self) -> usize {
        self.t
    }

    pub fn lambda(&self) -> &BigRational {
        &self.lambda
    }

    pub fn outcomes(&self) -> &[(u32, BigRational)] {
        &self.outcomes
    }

    /// Sum of all outcome probabilities; must be exactly 1.
    pub fn total_probability(&self) -> BigRational {
        self.outcomes.iter().map(|(_, p)| p.clone()).sum()
    }

    /// Expectation of `f(outcome)` over the enumerated distribution.
    pub fn expect<F: Fn(u32) -> BigRational>(&self, f: F) -> BigRational {
        self.outcomes.iter().map(|(mask, p)| p * f(*mask)).sum()
    }

    /// Probability that the new vertex connects to `u`.
    pub fn marginal(&self, u: usize) -> BigRational {
        self.expect(|mask| int((mask >> u & 1) as u64))
    }

    /// `E[d_new]`, summed over the enumeration.
    pub fn expected_new_degree(&self) -> BigRational {
        self.expect(|mask| int(mask.count_ones() as u64))
    }

    /// Exact variance of the new vertex's degree.
    pub fn new_degree_variance(&self) -> BigRational {
        let mean = self.expected_new_degree();
        let second = self.expect(|mask| {
            let k = mask.count_ones() as u64;
            int(k * k)
        });
        second - mean.clone() * mean
    }

    /// Degree fraction `X_u(t) = d_u / t` before the step.
    pub fn x_current(&self, u: usize) -> BigRational {
        ratio(self.degrees[u] as u64, self.t as u64)
    }

    /// `E[X_u(t+1)]` over the enumeration.
    pub fn x_next_expectation(&self, u: usize) -> BigRational {
        let d = self.degrees[u] as u64;
        self.expect(|mask| int(d + (mask >> u & 1) as u64)) / int(self.t as u64 + 1)
    }

    /// `E[X_u(t+1)^2]` over the enumeration.
    pub fn x_next_second_moment(&self, u: usize) -> BigRational {
        let d = self.degrees[u] as u64;
        let t1 = int(self.t as u64 + 1);
        self.expect(|mask| {
            let v = d + (mask >> u & 1) as u64;
            int(v * v)
        }) / (t1.clone() * t1)
    }

    /// Edge density `Y(t) = E(t) / (t (t+1))` before the step.
    pub fn y_current(&self) -> BigRational {
        ratio(self.edge_count, (self.t * (self.t + 1)) as u64)
    }

    /// `E[Y(t+1)]` over the enumeration.
    pub fn y_next_expectation(&self) -> BigRational {
        let e = self.edge_count;
        let denom = int(((self.t + 1) * (self.t + 2)) as u64);
        self.expect(|mask| int(e + mask.count_ones() as u64)) / denom
    }

    /// `E[Y(t+1)^2]` over the enumeration.
    pub fn y_next_second_moment(&self) -> BigRational {
        let e = self.edge_count;
        let denom = int(((self.t + 1) * (self.t + 2)) as u64);
        self.expect(|mask| {
            let v = e + mask.count_ones() as u64;
            int(v * v)
        }) / (denom.clone() * denom)
    }

    /// Exact martingale identity for the degree fraction of `u` at
    /// `lambda = 1`: `E[X_u(t+1)] = X_u(t)`.
    pub fn x_martingale_holds(&self, u: usize) -> bool {
        self.x_next_expectation(u) == self.x_current(u)
    }

    /// Exact martingale identity for the normalized degree of `u` at any
    /// rational `lambda`: `sum prob * d_u(t+1) = d_u(t) * (1 + lambda / t)`.
    ///
    /// The running normalizer multiplies by `(1 + lambda/t)` each step, so
    /// this is the normalized series' one-step identity with the common
    /// factor cleared.
    pub fn normalized_x_martingale_holds(&self, u: usize) -> bool {
        let d = self.degrees[u] as u64;
        let lhs = self.expect(|mask| int(d + (mask >> u & 1) as u64));
        let rhs = int(d) * (BigRational::one() + &self.lambda / int(self.t as u64));
        lhs == rhs
    }

    /// Exact martingale identity for the edge density at `lambda = 1`:
    /// `E[Y(t+1)] = Y(t)`.
    pub fn y_martingale_holds(&self) -> bool {
        self.y_next_expectation() == self.y_current()
    }

    /// Exact second-moment bound for the degree fraction:
    /// `E[X_u(t+1)^2] - X_u(t)^2 < X_u(t) / t^2`.
    pub fn x_second_moment_bound_holds(&self, u: usize) -> bool {
        let x = self.x_current(u);
        let gap = self.x_next_second_moment(u) - x.clone() * x.clone();
        gap < x / int((self.t * self.t) as u64)
    }

    /// Exact second-moment bound for the edge density:
    /// `E[Y(t+1)^2] - Y(t)^2 < (2 / t^3) Y(t)`.
    pub fn y_second_moment_bound_holds(&self) -> bool {
        let y = self.y_current();
        let gap = self.y_next_second_moment() - y.clone() * y.clone();
        gap < ratio(2, (self.t * self.t * self.t) as u64) * y
    }

    /// Exact Poisson-Binomial variance bound:
    /// `Var(d_new) < lambda * 2 E(t) / t`.
    pub fn variance_bound_holds(&self) -> bool {
        let bound = &self.lambda * ratio(2 * self.edge_count, self.t as u64);
        self.new_degree_variance() < bound
    }

    /// Largest absolute probability error of an empirical outcome histogram,
    /// as a diagnostic for sampler agreement.
    pub fn max_abs_error(&self, counts: &[(u32, u64)], n: u64) -> f64 {
        let mut worst: f64 = 0.0;
        for (mask, p) in &self.outcomes {
            let observed = counts
                .iter()
                .find(|(m, _)| m == mask)
                .map(|(_, c)| *c)
                .unwrap_or(0);
            let diff = observed as f64 / n as f64 - rational_to_f64(p);
            worst = worst.max(diff.abs());
        }
        worst
    }
}

/// Lossy conversion for reporting; exact checks never use this.
pub fn rational_to_f64(r: &BigRational) -> f64 {
    let numer = r.numer();
    let denom = r.denom();
    // exact for the small rationals this library produces
    let to_f64 = |x: &BigInt| -> f64 {
        let (sign, digits) = x.to_u64_digits();
        let mut v = 0.0;
        for d in digits.iter().rev() {
            v = v * 1.8446744073709552e19 + *d as f64;
        }
        if sign == num_bigint::Sign::Minus {
            -v
        } else {
            v
        }
    };
    to_f64(numer) / to_f64(denom)
}

/// Exact rational `lambda` from its f64 representation. Every finite f64 is
/// a dyadic rational, so this is lossless.
pub fn lambda_as_rational(lambda: f64) -> Result<BigRational, OracleError> {
    let r = BigRational::from_float(lambda).ok_or(OracleError::LambdaOutOfRange)?;
    if r <= BigRational::zero() || r > BigRational::one() {
        return Err(OracleError::LambdaOutOfRange);
    }
    Ok(r)
}

/// Exact absolute difference helper for tests and reports.
pub fn abs_diff(a: &BigRational, b: &BigRational) -> BigRational {
    (a - b).abs()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::seeds;
    use num_traits::One;

    fn one() -> BigRational {
        BigRational::one()
    }

    #[test]
    fn p3_step_distribution_is_the_frozen_table() {
        let g = seeds::p3(false);
        let dist = exact_step_distribution(&g, &one(), DEFAULT_ENUMERATION_GUARD).unwrap();
        // p = (1/2, 1, 1/2): four outcomes, each with probability 1/4.
        let expected = [
            (0b010u32, ratio(1, 4)),
            (0b011, ratio(1, 4)),
            (0b110, ratio(1, 4)),
            (0b111, ratio(1, 4)),
        ];
        assert_eq!(dist.outcomes().len(), 4);
        for (mask, p) in expected {
            let found = dist
                .outcomes()
                .iter()
                .find(|(m, _)| *m == mask)
                .unwrap_or_else(|| panic!("missing outcome {:#05b}", mask));
            assert_eq!(found.1, p);
        }
        assert!(dist.total_probability().is_one());
    }

    #[test]
    fn complete_seed_forces_everything() {
        let g = seeds::k3(false);
        let dist = exact_step_distribution(&g, &one(), 12).unwrap();
        assert_eq!(dist.outcomes().len(), 1);
        assert_eq!(dist.outcomes()[0], (0b111, one()));
        assert_eq!(dist.expected_new_degree(), int(3));
    }

    #[test]
    fn p3_expected_new_degree_is_two() {
        let g = seeds::p3(false);
        let dist = exact_step_distribution(&g, &one(), 12).unwrap();
        assert_eq!(dist.expected_new_degree(), int(2));
        // equals 2 E(t) / t
        assert_eq!(dist.expected_new_degree(), ratio(2 * 2, 2));
    }

    #[test]
    fn p3_x_martingale_is_exact() {
        let g = seeds::p3(false);
        let dist = exact_step_distribution(&g, &one(), 12).unwrap();
        assert_eq!(dist.x_next_expectation(0), ratio(1, 2));
        for u in 0..=2 {
            assert!(dist.x_martingale_holds(u));
        }
    }

    #[test]
    fn p3_y_martingale_is_exact() {
        let g = seeds::p3(false);
        let dist = exact_step_distribution(&g, &one(), 12).unwrap();
        assert_eq!(dist.y_current(), ratio(1, 3));
        assert_eq!(dist.y_next_expectation(), ratio(1, 3));
        assert!(dist.y_martingale_holds());
    }

    #[test]
    fn p3_second_moment_bounds_hold_exactly() {
        let g = seeds::p3(false);
        let dist = exact_step_distribution(&g, &one(), 12).unwrap();
        // gap for vertex 0 is p(1-p)/(t+1)^2 = (1/4)/9 = 1/36 < (1/2)/4
        let x = dist.x_current(0);
        let gap = dist.x_next_second_moment(0) - x.clone() * x;
        assert_eq!(gap, ratio(1, 36));
        assert!(dist.x_second_moment_bound_holds(0));
        assert!(dist.y_second_moment_bound_holds());
    }

    #[test]
    fn p3_variance_is_exact() {
        let g = seeds::p3(false);
        let dist = exact_step_distribution(&g, &one(), 12).unwrap();
        // Var = sum p(1-p) = 1/4 + 0 + 1/4
        assert_eq!(dist.new_degree_variance(), ratio(1, 2));
        assert!(dist.variance_bound_holds());
    }

    #[test]
    fn normalized_identity_holds_for_fractional_lambda() {
        let g = seeds::p3(false);
        let lambda = ratio(1, 2);
        let dist = exact_step_distribution(&g, &lambda, 12).unwrap();
        for u in 0..=2 {
            assert!(dist.normalized_x_martingale_holds(u));
            assert_eq!(dist.marginal(u), &lambda * ratio(g.degree(u) as u64, 2));
        }
        assert!(dist.total_probability().is_one());
    }

    #[test]
    fn guard_and_lambda_domain() {
        let g = seeds::edgeless(15, false);
        assert_eq!(
            exact_step_distribution(&g, &one(), 12).unwrap_err(),
            OracleError::AboveGuard { t: 14, guard: 12 }
        );
        let g = seeds::p3(false);
        assert!(exact_step_distribution(&g, &int(2), 12).is_err());
        assert!(exact_step_distribution(&g, &BigRational::zero(), 12).is_err());
    }

    #[test]
    fn lambda_from_float_is_exact_for_dyadics() {
        assert_eq!(lambda_as_rational(0.5).unwrap(), ratio(1, 2));
        assert_eq!(lambda_as_rational(1.0).unwrap(), one());
        assert!(lambda_as_rational(0.0).is_err());
        assert!(lambda_as_rational(1.5).is_err());
    }

    #[test]
    fn rational_to_f64_small_values() {
        assert_eq!(rational_to_f64(&ratio(1, 4)), 0.25);
        assert_eq!(rational_to_f64(&ratio(1, 3)), 1.0 / 3.0);
    }
}
