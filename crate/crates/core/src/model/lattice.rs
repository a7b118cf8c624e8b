use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Geometry {
    /// Periodic: site indices wrap modulo the length.
    Ring,
    /// Finite segment: moves that leave `0..len` are suppressed.
    Segment,
}

/// A finite one-dimensional lattice `0..len`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Lattice {
    pub len: usize,
    pub geometry: Geometry,
}

impl Lattice {
    pub fn ring(len: usize) -> Self {
        Self { len, geometry: Geometry::Ring }
    }

    pub fn segment(len: usize) -> Self {
        Self { len, geometry: Geometry::Segment }
    }

    /// Site reached from `x` by displacement `z`, or `None` when it falls off a
    /// segment.
    #[inline]
    pub fn offset(&self, x: usize, z: i64) -> Option<usize> {
        let n = self.len as i64;
        let y = x as i64 + z;
        match self.geometry {
            Geometry::Ring => Some(y.rem_euclid(n) as usize),
            Geometry::Segment => (0..n).contains(&y).then_some(y as usize),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ring_wraps_and_segment_blocks() {
        let r = Lattice::ring(5);
        assert_eq!(r.offset(4, 1), Some(0));
        assert_eq!(r.offset(0, -1), Some(4));
        assert_eq!(r.offset(1, 12), Some(3));
        let s = Lattice::segment(5);
        assert_eq!(s.offset(4, 1), None);
        assert_eq!(s.offset(0, -1), None);
        assert_eq!(s.offset(2, 2), Some(4));
    }
}
