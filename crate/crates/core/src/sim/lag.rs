use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Blocks-behind classification: 0, 1, 2–4, 5–10, 11 and more.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LagBucket {
    B0,
    B1,
    B2,
    B3,
    B4,
}

impl LagBucket {
    pub const ALL: [LagBucket; 5] = [LagBucket::B0, LagBucket::B1, LagBucket::B2, LagBucket::B3, LagBucket::B4];

    pub fn of(lag: u64) -> Self {
        match lag {
            0 => LagBucket::B0,
            1 => LagBucket::B1,
            2..=4 => LagBucket::B2,
            // 10 sits in B3: the ranges "5-10" and ">=10" overlap at 10
            5..=10 => LagBucket::B3,
            _ => LagBucket::B4,
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }

    /// Smallest lag that falls in this bucket.
    pub fn min_lag(self) -> u64 {
        [0, 1, 2, 5, 11][self.index()]
    }

    pub fn label(self) -> &'static str {
        ["b0", "b1", "b2", "b3", "b4"][self.index()]
    }
}

impl fmt::Display for LagBucket {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// Bucket for a node at `height` when the network tip is `tip`. Heights above
/// the tip (possible only transiently on a counterfeit fork) count as lag 0.
pub fn lag_of(height: u64, tip: u64) -> LagBucket {
    LagBucket::of(tip.saturating_sub(height))
}

/// Share of online nodes per lag bucket, plus the share sitting on a counterfeit fork.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct LagHistogram<T = f64> {
    pub fractions: [T; 5],
    pub counterfeit: T,
    pub online: usize,
}

impl<T: Scalar> LagHistogram<T> {
    pub fn from_counts(counts: [usize; 5], counterfeit: usize) -> Result<Self> {
        let online: usize = counts.iter().sum();
        if online == 0 {
            return Err(Error::Domain("no online nodes to classify".into()));
        }
        Ok(LagHistogram {
            fractions: counts.map(|c| T::ratio(c, online)),
            counterfeit: T::ratio(counterfeit, online),
            online,
        })
    }

    pub fn get(&self, b: LagBucket) -> T {
        self.fractions[b.index()]
    }

    /// Share of nodes one to four blocks behind.
    pub fn one_to_four(&self) -> T {
        self.fractions[1] + self.fractions[2]
    }

    pub fn total(&self) -> T {
        self.fractions.iter().copied().sum()
    }
}

/// Histogram over `(height, on_counterfeit)` pairs of online nodes.
pub fn lag_distribution<T: Scalar>(
    online: impl IntoIterator<Item = (u64, bool)>,
    tip: u64,
) -> Result<LagHistogram<T>> {
    let mut counts = [0usize; 5];
    let mut counterfeit = 0;
    for (h, fake) in online {
        counts[lag_of(h, tip).index()] += 1;
        counterfeit += fake as usize;
    }
    LagHistogram::from_counts(counts, counterfeit)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bucket_boundaries() {
        let got: Vec<LagBucket> = [0, 1, 2, 3, 4, 5, 7, 10, 11, 12].iter().map(|l| LagBucket::of(*l)).collect();
        use LagBucket::*;
        assert_eq!(got, vec![B0, B1, B2, B2, B2, B3, B3, B3, B4, B4]);
        for b in LagBucket::ALL {
            assert_eq!(LagBucket::of(b.min_lag()), b);
        }
    }

    #[test]
    fn histogram_examples() {
        let all = lag_distribution::<f64>([(5, false), (5, false)], 5).unwrap();
        assert_eq!(all.fractions, [1.0, 0.0, 0.0, 0.0, 0.0]);
        let half = lag_distribution::<f64>([(5, false), (4, false)], 5).unwrap();
        assert_eq!(half.fractions, [0.5, 0.5, 0.0, 0.0, 0.0]);
        assert!(matches!(lag_distribution::<f64>([], 5), Err(Error::Domain(_))));
    }

    #[test]
    fn counterfeit_share_is_separate() {
        let h = lag_distribution::<f32>([(9, true), (10, false), (10, false), (7, false)], 10).unwrap();
        assert_eq!(h.counterfeit, 0.25);
        assert_eq!(h.total(), 1.0);
    }
}
