//! Single-vertex urn reduction.
//!
//! Fixing one vertex, its black and white degrees evolve exactly like a
//! two-colour urn: draw a ball uniformly, return it with one more of the
//! same colour. This gives an O(1)-per-step path for single-vertex degree
//! laws at horizons where a full graph run would be quadratic. The colour
//! fraction converges to a Beta(black, white) limit with parameters read at
//! the extraction time.

use rand_xoshiro::rand_core::RngCore;
use thiserror::Error;

use crate::graph::{GraphError, GrowingGraph};
pub use crate::special::regularized_incomplete_beta;

#[derive(Debug, Error, PartialEq)]
pub enum UrnError {
    #[error("horizon {horizon} precedes current urn time {t}")]
    HorizonBeforeCurrent { horizon: u64, t: u64 },
    #[error("urn must hold at least one ball")]
    Empty,
}

/// Ball counts of one vertex's urn; `t = black + white`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct UrnState {
    black: u64,
    white: u64,
}

impl UrnState {
    pub fn new(black: u64, white: u64) -> Result<Self, UrnError> {
        if black + white == 0 {
            return Err(UrnError::Empty);
        }
        Ok(UrnState { black, white })
    }

    pub fn black(&self) -> u64 {
        self.black
    }

    pub fn white(&self) -> u64 {
        self.white
    }

    pub fn total(&self) -> u64 {
        self.black + self.white
    }

    /// Current black fraction `black / t`.
    pub fn fraction(&self) -> f64 {
        self.black as f64 / self.total() as f64
    }
}

/// Reads vertex `u` of `g` as an urn: black = degree, white = `t - degree`.
pub fn urn_from_vertex(g: &GrowingGraph, u: usize) -> Result<UrnState, GraphError> {
    let black = g.degree(u);
    let white = g.white_degree(u)?;
    Ok(UrnState {
        black: black as u64,
        white: white as u64,
    })
}

/// Runs the urn forward until `horizon` balls are present.
///
/// Each step adds a black ball with probability `black / t`, else a white
/// one. The comparison is exact at the endpoints, so degenerate urns absorb:
/// an all-black urn stays all-black forever, likewise all-white.
pub fn urn_run(
    mut urn: UrnState,
    horizon: u64,
    rng: &mut impl RngCore,
) -> Result<UrnState, UrnError> {
    if horizon < urn.total() {
        return Err(UrnError::HorizonBeforeCurrent {
            horizon,
            t: urn.total(),
        });
    }
    for t in urn.total()..horizon {
        // hit iff r/2^64 < black/t, i.e. floor(r*t / 2^64) < black
        let r = rng.next_u64();
        let hi = ((r as u128 * t as u128) >> 64) as u64;
        if hi < urn.black {
            urn.black += 1;
        } else {
            urn.white += 1;
        }
    }
    Ok(urn)
}

/// Parameters of the Beta limit law, read off an urn at its extraction time.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BetaParams {
    pub a: u64,
    pub b: u64,
}

impl BetaParams {
    pub fn from_urn(urn: &UrnState) -> Self {
        BetaParams {
            a: urn.black(),
            b: urn.white(),
        }
    }

    /// CDF of the limit law at `x`.
    pub fn cdf(&self, x: f64) -> f64 {
        regularized_incomplete_beta(self.a as f64, self.b as f64, x.clamp(0.0, 1.0))
            .expect("positive integer parameters")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::seeds;
    use crate::rng::replicate_rng;
    use num_rational::Ratio;

    #[test]
    fn urn_from_vertex_examples() {
        let p3 = seeds::p3(false);
        assert_eq!(urn_from_vertex(&p3, 0).unwrap(), UrnState::new(1, 1).unwrap());
        assert_eq!(urn_from_vertex(&p3, 1).unwrap(), UrnState::new(2, 0).unwrap());
        let k3 = seeds::k3(false);
        assert_eq!(urn_from_vertex(&k3, 0).unwrap(), UrnState::new(2, 0).unwrap());
        assert!(urn_from_vertex(&p3, 9).is_err());
    }

    #[test]
    fn degenerate_urns_absorb() {
        let mut rng = replicate_rng(7, 0, 0);
        let all_black = urn_run(UrnState::new(2, 0).unwrap(), 500, &mut rng).unwrap();
        assert_eq!(all_black, UrnState::new(500, 0).unwrap());
        let all_white = urn_run(UrnState::new(0, 3).unwrap(), 100, &mut rng).unwrap();
        assert_eq!(all_white, UrnState::new(0, 100).unwrap());
    }

    #[test]
    fn horizon_must_not_precede_current_time() {
        let urn = UrnState::new(3, 3).unwrap();
        assert_eq!(
            urn_run(urn, 2, &mut replicate_rng(0, 0, 0)).unwrap_err(),
            UrnError::HorizonBeforeCurrent { horizon: 2, t: 6 }
        );
    }

    #[test]
    fn single_step_from_balanced_urn_is_a_fair_coin() {
        let mut black_hits = 0u64;
        let n = 4000u64;
        for i in 0..n {
            let mut rng = replicate_rng(11, 0, i);
            let out = urn_run(UrnState::new(1, 1).unwrap(), 3, &mut rng).unwrap();
            assert!(out == UrnState::new(2, 1).unwrap() || out == UrnState::new(1, 2).unwrap());
            if out.black() == 2 {
                black_hits += 1;
            }
        }
        // 3 sigma around n/2
        let sigma = (n as f64 * 0.25).sqrt();
        assert!((black_hits as f64 - n as f64 / 2.0).abs() < 3.0 * sigma);
    }

    #[test]
    fn fraction_martingale_is_exact_over_one_step() {
        // E[black(t+1)/(t+1)] = black/t, checked as rationals over both outcomes.
        for (black, white) in [(1u64, 1u64), (3, 5), (16, 16), (1, 9)] {
            let t = black + white;
            let p = Ratio::new(black, t);
            let q = Ratio::new(white, t);
            let lhs = p * Ratio::new(black + 1, t + 1) + q * Ratio::new(black, t + 1);
            assert_eq!(lhs, Ratio::new(black, t));
        }
    }

    #[test]
    fn beta_params_cdf_endpoints() {
        let params = BetaParams::from_urn(&UrnState::new(2, 1).unwrap());
        assert_eq!(params, BetaParams { a: 2, b: 1 });
        assert!((params.cdf(0.25) - 0.0625).abs() < 1e-12);
        assert_eq!(params.cdf(0.0), 0.0);
        assert_eq!(params.cdf(1.0), 1.0);
    }
}
