use std::fmt;

use serde::{Deserialize, Serialize};
use smallvec::SmallVec;
use thiserror::Error;

/// Points of the hypergraph are labelled `1..=n`.
pub type Point = u32;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum HyperedgeError {
    #[error("expected {expected} points, got {got}")]
    WrongSize { expected: usize, got: usize },
    #[error("point {0} repeated")]
    Repeated(Point),
    #[error("point {point} outside 1..={n}")]
    OutOfRange { point: Point, n: u32 },
}

/// An `s`-set of points, stored sorted.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Hyperedge(SmallVec<[Point; 4]>);

impl Hyperedge {
    /// Validates size, distinctness and range.
    pub fn new(points: &[Point], n: u32, s: usize) -> Result<Self, HyperedgeError> {
        if points.len() != s {
            return Err(HyperedgeError::WrongSize { expected: s, got: points.len() });
        }
        let e = Self::from_points(points);
        for w in e.0.windows(2) {
            if w[0] == w[1] {
                return Err(HyperedgeError::Repeated(w[0]));
            }
        }
        if let Some(&p) = e.0.iter().find(|&&p| p == 0 || p > n) {
            return Err(HyperedgeError::OutOfRange { point: p, n });
        }
        Ok(e)
    }

    /// Sorts without validating.
    pub fn from_points(points: &[Point]) -> Self {
        let mut v: SmallVec<[Point; 4]> = SmallVec::from_slice(points);
        v.sort_unstable();
        Hyperedge(v)
    }

    pub fn points(&self) -> &[Point] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, p: Point) -> bool {
        self.0.binary_search(&p).is_ok()
    }
}

impl fmt::Debug for Hyperedge {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.0.iter()).finish()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn validation() {
        assert_eq!(Hyperedge::new(&[3, 1, 2], 3, 3).unwrap().points(), &[1, 2, 3]);
        assert_eq!(Hyperedge::new(&[1, 1, 2], 3, 3), Err(HyperedgeError::Repeated(1)));
        assert_eq!(
            Hyperedge::new(&[1, 2], 3, 3),
            Err(HyperedgeError::WrongSize { expected: 3, got: 2 })
        );
        assert_eq!(
            Hyperedge::new(&[0, 1, 2], 3, 3),
            Err(HyperedgeError::OutOfRange { point: 0, n: 3 })
        );
    }

    #[test]
    fn serializes_as_plain_array() {
        let e = Hyperedge::from_points(&[4, 1, 3]);
        assert_eq!(serde_json::to_string(&e).unwrap(), "[1,3,4]");
    }
}
