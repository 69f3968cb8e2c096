//! Protocol parameter derivation and download accounting.

use num_integer::Integer;

use crate::error::{Error, Result};
use crate::field::is_prime;
use crate::rational::Rational;

/// Validated protocol parameters.
///
/// `K` messages of `n` symbols over F_q; the user demands `D` messages and
/// holds `M` others as side information. Groups have size
/// `T = D/R + M/R` with `R = gcd(D, M)`; there are `P = K/T` groups, of
/// which `R` carry demand indices.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProtocolParams {
    message_count: usize,
    demand_size: usize,
    side_size: usize,
    field_order: u64,
    message_len: usize,
    demand_groups: usize,
    demand_per_group: usize,
    side_per_group: usize,
    group_size: usize,
    group_count: usize,
}

impl ProtocolParams {
    /// Validates `(K, D, M, q, n)` and derives the grouping parameters.
    pub fn derive(
        message_count: usize,
        demand_size: usize,
        side_size: usize,
        field_order: u64,
        message_len: usize,
    ) -> Result<Self> {
        if demand_size < 2 {
            return Err(Error::InvalidParams(format!(
                "demand size must be at least 2, got {demand_size}"
            )));
        }
        if side_size < 1 {
            return Err(Error::InvalidParams(
                "side information must be nonempty".into(),
            ));
        }
        if message_count < demand_size + side_size {
            return Err(Error::InvalidParams(format!(
                "need at least {} messages, got {message_count}",
                demand_size + side_size
            )));
        }
        if message_len < 1 {
            return Err(Error::InvalidParams(
                "messages must have at least one symbol".into(),
            ));
        }
        if !is_prime(field_order) {
            return Err(Error::NotPrime(field_order));
        }
        let demand_groups = demand_size.gcd(&side_size);
        let demand_per_group = demand_size / demand_groups;
        let side_per_group = side_size / demand_groups;
        let group_size = demand_per_group + side_per_group;
        if !message_count.is_multiple_of(group_size) {
            return Err(Error::InvalidParams(format!(
                "group size {group_size} does not divide message count {message_count}"
            )));
        }
        let min_q = if demand_per_group == 1 {
            2
        } else {
            group_size as u64
        };
        if field_order < min_q {
            return Err(Error::FieldTooSmall {
                q: field_order,
                t: group_size,
                d: demand_per_group,
                min: min_q,
            });
        }
        Ok(ProtocolParams {
            message_count,
            demand_size,
            side_size,
            field_order,
            message_len,
            demand_groups,
            demand_per_group,
            side_per_group,
            group_size,
            group_count: message_count / group_size,
        })
    }

    pub fn message_count(&self) -> usize {
        self.message_count
    }

    pub fn demand_size(&self) -> usize {
        self.demand_size
    }

    pub fn side_size(&self) -> usize {
        self.side_size
    }

    pub fn field_order(&self) -> u64 {
        self.field_order
    }

    pub fn message_len(&self) -> usize {
        self.message_len
    }

    /// Number of groups that carry demand indices.
    pub fn demand_groups(&self) -> usize {
        self.demand_groups
    }

    /// Demand indices per demand-bearing group.
    pub fn demand_per_group(&self) -> usize {
        self.demand_per_group
    }

    /// Side-information indices per demand-bearing group.
    pub fn side_per_group(&self) -> usize {
        self.side_per_group
    }

    pub fn group_size(&self) -> usize {
        self.group_size
    }

    pub fn group_count(&self) -> usize {
        self.group_count
    }

    /// Total linear combinations downloaded per retrieval.
    pub fn download_cost(&self) -> usize {
        self.group_count * self.demand_per_group
    }

    /// Demanded messages over downloaded combinations, in lowest terms.
    pub fn rate(&self) -> Rational {
        Rational::new(self.demand_size as i64, self.download_cost() as i64)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn derivation_examples() {
        let p = ProtocolParams::derive(6, 2, 1, 3, 1).unwrap();
        assert_eq!(
            (p.demand_groups(), p.demand_per_group(), p.side_per_group()),
            (1, 2, 1)
        );
        assert_eq!((p.group_size(), p.group_count()), (3, 2));
        assert_eq!(p.download_cost(), 4);
        assert_eq!(p.rate(), Rational::new(1, 2));

        let p = ProtocolParams::derive(9, 2, 4, 3, 2).unwrap();
        assert_eq!(
            (p.demand_groups(), p.demand_per_group(), p.side_per_group()),
            (2, 1, 2)
        );
        assert_eq!((p.group_size(), p.group_count()), (3, 3));
        assert_eq!(p.download_cost(), 3);
        assert_eq!(p.rate(), Rational::new(2, 3));
    }

    #[test]
    fn divisibility_violation_rejected() {
        assert!(matches!(
            ProtocolParams::derive(7, 2, 1, 3, 1),
            Err(Error::InvalidParams(_))
        ));
    }

    #[test]
    fn range_and_field_violations_rejected() {
        assert!(ProtocolParams::derive(6, 1, 1, 3, 1).is_err());
        assert!(ProtocolParams::derive(6, 2, 0, 3, 1).is_err());
        assert!(ProtocolParams::derive(2, 2, 1, 3, 1).is_err());
        assert!(ProtocolParams::derive(6, 2, 1, 4, 1).is_err()); // q composite
        assert!(ProtocolParams::derive(6, 2, 1, 2, 1).is_err()); // q < group size
        assert!(ProtocolParams::derive(6, 2, 1, 3, 0).is_err()); // empty messages
                                                                 // single combination per group works over F_2
        assert!(ProtocolParams::derive(9, 2, 4, 2, 1).is_ok());
    }

    #[test]
    fn minimal_message_count_gives_rate_one() {
        let p = ProtocolParams::derive(5, 3, 2, 7, 1).unwrap();
        assert_eq!(p.download_cost(), p.demand_size());
        assert_eq!(p.rate(), Rational::one());
    }
}
