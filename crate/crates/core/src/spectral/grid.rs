use crate::error::{Error, Result};

/// Uniform dyadic grid `x_j = j h`, `h = 2^-k`, `j = 0..=2^k` on `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct DyadicGrid {
    level: u32,
}

impl DyadicGrid {
    pub const MAX_LEVEL: u32 = 30;

    pub fn new(level: u32) -> Result<Self> {
        if level == 0 || level > Self::MAX_LEVEL {
            return Err(Error::Config(format!(
                "grid level must lie in 1..={}, got {level}",
                Self::MAX_LEVEL
            )));
        }
        Ok(Self { level })
    }

    pub fn level(&self) -> u32 {
        self.level
    }

    pub fn step(&self) -> f64 {
        (-(self.level as f64)).exp2()
    }

    /// Number of nodes, `2^k + 1`.
    pub fn len(&self) -> usize {
        (1usize << self.level) + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Node `j` (0-based).
    pub fn node(&self, j: usize) -> f64 {
        j as f64 * self.step()
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.len()).map(|j| self.node(j)).collect()
    }

    /// The grid with half the step size.
    pub fn refined(&self) -> Result<Self> {
        Self::new(self.level + 1)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn endpoints_and_spacing() {
        for k in 1..=10 {
            let g = DyadicGrid::new(k).unwrap();
            let x = g.nodes();
            assert_eq!(x.len(), (1 << k) + 1);
            assert_eq!(x[0], 0.0);
            assert_eq!(*x.last().unwrap(), 1.0);
            assert!(x.windows(2).all(|w| w[1] - w[0] == g.step()));
        }
        assert!(DyadicGrid::new(0).is_err());
    }
}
