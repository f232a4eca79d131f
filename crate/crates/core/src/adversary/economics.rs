use num_traits::Num;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Market value and attack cost inputs. Costs are user-supplied constants.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EconomicParams<T = f64> {
    pub market_cap: T,
    pub node_count: usize,
    pub hijack_cost_per_as: T,
    pub temporal_cost: T,
    pub logical_cost: T,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ValueAtRisk<T = f64> {
    pub per_node_value: T,
    pub value_at_risk: T,
    pub cost: T,
    /// `None` when the attack cost is zero.
    pub benefit_ratio: Option<T>,
}

/// Builds `n` from its binary digits using only `one` and addition, so the
/// conversion is exact in any `Num` type that can represent `n`.
fn count<T: Num + Copy>(mut n: usize) -> T {
    let mut acc = T::zero();
    let mut bit = T::one();
    while n > 0 {
        if n & 1 == 1 {
            acc = acc + bit;
        }
        bit = bit + bit;
        n >>= 1;
    }
    acc
}

/// Per-node value, value at risk and benefit ratio.
///
/// Evaluation order is fixed: `per_node = market_cap / node_count`,
/// `value_at_risk = per_node * affected`, `benefit = value_at_risk / cost`.
pub fn value_at_risk<T>(econ: &EconomicParams<T>, affected: usize, cost: T) -> Result<ValueAtRisk<T>>
where
    T: Num + Copy + PartialOrd,
{
    if econ.node_count == 0 {
        return Err(Error::Domain("node_count is zero".into()));
    }
    if econ.market_cap < T::zero() {
        return Err(Error::param("market_cap", "must be non-negative"));
    }
    let per_node_value = econ.market_cap / count(econ.node_count);
    let value_at_risk = per_node_value * count(affected);
    let benefit_ratio = (cost != T::zero()).then(|| value_at_risk / cost);
    Ok(ValueAtRisk {
        per_node_value,
        value_at_risk,
        cost,
        benefit_ratio,
    })
}

impl<T: Num + Copy> EconomicParams<T> {
    pub fn new(market_cap: T, node_count: usize) -> Self {
        EconomicParams {
            market_cap,
            node_count,
            hijack_cost_per_as: T::zero(),
            temporal_cost: T::zero(),
            logical_cost: T::zero(),
        }
    }

    pub fn spatial_cost(&self, as_count: usize) -> T {
        self.hijack_cost_per_as * count(as_count)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_rational::Ratio;

    #[test]
    fn per_node_value_examples() {
        let v = value_at_risk(&EconomicParams::new(1e11, 10_000), 0, 0.0).unwrap();
        assert_eq!(v.per_node_value, 1e7);
        assert_eq!(v.value_at_risk, 0.0);
        assert_eq!(v.benefit_ratio, None);
        let v = value_at_risk(&EconomicParams::new(2e10, 5_000), 10, 1e6).unwrap();
        assert_eq!(v.per_node_value, 4e6);
        assert_eq!(v.value_at_risk, 4e7);
        assert_eq!(v.benefit_ratio, Some(40.0));
    }

    #[test]
    fn zero_nodes_is_a_domain_error() {
        assert!(matches!(
            value_at_risk(&EconomicParams::new(1.0, 0), 0, 1.0),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn exact_in_rationals() {
        let econ = EconomicParams::new(Ratio::<i128>::from_integer(100_000_000_000), 3);
        let v = value_at_risk(&econ, 2, Ratio::from_integer(7)).unwrap();
        assert_eq!(v.per_node_value, Ratio::new(100_000_000_000, 3));
        assert_eq!(v.value_at_risk, Ratio::new(200_000_000_000, 3));
        assert_eq!(v.benefit_ratio, Some(Ratio::new(200_000_000_000, 21)));
        assert_eq!(econ.spatial_cost(3), Ratio::from_integer(0));
    }
}
