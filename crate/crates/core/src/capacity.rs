//! Exact rate and capacity expressions.
//!
//! Everything here is closed-form arithmetic on `(K, D, M)` evaluated over
//! exact rationals: the converse bound on the download rate of any linear
//! scheme, the matching achievable rate under the divisibility condition,
//! the rate of the earlier partition-based scheme, the conjectured general
//! formula, and the two settled non-linear capacities.

use num_integer::Integer;

use crate::error::{Error, Result};
use crate::rational::Rational;

fn validate(k: usize, d: usize, m: usize) -> Result<()> {
    if d < 2 || m < 1 || k < d + m {
        return Err(Error::InvalidParams(format!(
            "need D >= 2, M >= 1, K >= D + M; got K={k} D={d} M={m}"
        )));
    }
    Ok(())
}

/// Upper bound `(D + M) / K` on the rate of every linear scheme.
pub fn linear_capacity_bound(k: usize, d: usize, m: usize) -> Result<Rational> {
    validate(k, d, m)?;
    Ok(Rational::new((d + m) as i64, k as i64))
}

/// Rate achieved by the grouping protocol: `(D + M) / K`, available exactly
/// when the group size `(D + M) / gcd(D, M)` divides `K`.
pub fn achievable_rate(k: usize, d: usize, m: usize) -> Result<Option<Rational>> {
    validate(k, d, m)?;
    let r = d.gcd(&m);
    let group_size = d / r + m / r;
    if !k.is_multiple_of(group_size) {
        return Ok(None);
    }
    Ok(Some(Rational::new((d + m) as i64, k as i64)))
}

/// Rate of the earlier partition-and-code scheme:
/// `D / (K - M * floor(K / (D + M)))` while `(K - D) / (D + M)` does not
/// exceed `floor(K / (D + M))`, and `1 / ceil(K / (D + M))` otherwise.
pub fn prior_scheme_rate(k: usize, d: usize, m: usize) -> Result<Rational> {
    validate(k, d, m)?;
    let block = d + m;
    let floor = k / block;
    // exact comparison (K - D) / (D + M) <= floor
    if k - d <= block * floor {
        Ok(Rational::new(d as i64, (k - m * floor) as i64))
    } else {
        Ok(Rational::new(1, k.div_ceil(block) as i64))
    }
}

/// Conjectured linear capacity `D / ceil(D * K / (D + M))` for all
/// parameters. Callers should label this value a conjecture when displaying
/// it; it coincides with [`linear_capacity_bound`] under the divisibility
/// condition but is unproven elsewhere.
pub fn conjectured_capacity(k: usize, d: usize, m: usize) -> Result<Rational> {
    validate(k, d, m)?;
    Ok(Rational::new(d as i64, (d * k).div_ceil(d + m) as i64))
}

/// The two settled (not-necessarily-linear) capacities: `2 / ceil(2K/3)`
/// for `D = 2, M = 1` and `2 / ceil(K/2)` for `D = 2, M = 2`. `None`
/// elsewhere.
pub fn known_capacity(k: usize, d: usize, m: usize) -> Result<Option<Rational>> {
    validate(k, d, m)?;
    let value = match (d, m) {
        (2, 1) => Some(Rational::new(2, (2 * k).div_ceil(3) as i64)),
        (2, 2) => Some(Rational::new(2, k.div_ceil(2) as i64)),
        _ => None,
    };
    Ok(value)
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_integer::Integer;

    #[test]
    fn bound_examples() {
        assert_eq!(linear_capacity_bound(6, 2, 1).unwrap(), Rational::new(1, 2));
        assert_eq!(linear_capacity_bound(3, 2, 1).unwrap(), Rational::one());
        assert_eq!(
            linear_capacity_bound(12, 2, 4).unwrap(),
            Rational::new(1, 2)
        );
        assert!(linear_capacity_bound(2, 2, 1).is_err());
    }

    #[test]
    fn achievable_examples() {
        assert_eq!(achievable_rate(9, 2, 4).unwrap(), Some(Rational::new(2, 3)));
        assert_eq!(achievable_rate(10, 2, 4).unwrap(), None);
        assert_eq!(achievable_rate(8, 2, 2).unwrap(), Some(Rational::new(1, 2)));
    }

    #[test]
    fn prior_scheme_examples() {
        assert_eq!(prior_scheme_rate(12, 2, 4).unwrap(), Rational::new(1, 2));
        assert_eq!(prior_scheme_rate(9, 2, 4).unwrap(), Rational::new(1, 2));
        assert_eq!(prior_scheme_rate(6, 2, 4).unwrap(), Rational::one());
    }

    #[test]
    fn conjecture_examples() {
        assert_eq!(conjectured_capacity(9, 2, 4).unwrap(), Rational::new(2, 3));
        assert_eq!(conjectured_capacity(10, 2, 4).unwrap(), Rational::new(1, 2));
        assert_eq!(conjectured_capacity(5, 2, 3).unwrap(), Rational::one());
    }

    #[test]
    fn known_capacity_examples() {
        assert_eq!(known_capacity(6, 2, 1).unwrap(), Some(Rational::new(1, 2)));
        assert_eq!(known_capacity(8, 2, 2).unwrap(), Some(Rational::new(1, 2)));
        assert_eq!(known_capacity(8, 3, 2).unwrap(), None);
    }

    #[test]
    fn formulas_agree_under_divisibility() {
        for k in 3..=60usize {
            for d in 2..=6usize {
                for m in 1..=6usize {
                    if k < d + m {
                        continue;
                    }
                    let r = d.gcd(&m);
                    let group = d / r + m / r;
                    let bound = linear_capacity_bound(k, d, m).unwrap();
                    let prior = prior_scheme_rate(k, d, m).unwrap();
                    assert!(prior <= bound, "prior above bound at K={k} D={d} M={m}");
                    if k % group == 0 {
                        let ach = achievable_rate(k, d, m).unwrap().unwrap();
                        let conj = conjectured_capacity(k, d, m).unwrap();
                        assert_eq!(ach, bound);
                        assert_eq!(conj, bound);
                        if let Some(known) = known_capacity(k, d, m).unwrap() {
                            assert_eq!(known, bound);
                        }
                        // the protocol's own accounting matches
                        let q = if d / r == 1 {
                            2
                        } else {
                            (group as u64..)
                                .find(|&x| crate::field::is_prime(x))
                                .unwrap()
                        };
                        let params = crate::params::ProtocolParams::derive(k, d, m, q, 1).unwrap();
                        assert_eq!(params.rate(), ach);
                        if k % (d + m) != 0 {
                            assert!(
                                prior < bound,
                                "prior not strictly below bound at K={k} D={d} M={m}"
                            );
                        }
                    } else {
                        assert_eq!(achievable_rate(k, d, m).unwrap(), None);
                    }
                }
            }
        }
    }

    #[test]
    fn bound_approaches_density_sum_for_linear_scaling() {
        // D = K/4 and M = K/4: the bound equals 1/2 at every feasible K.
        for k in [8usize, 16, 32, 64] {
            let d = k / 4;
            let m = k / 4;
            let bound = linear_capacity_bound(k, d, m).unwrap();
            assert_eq!(bound, Rational::new(1, 2));
        }
    }
}
