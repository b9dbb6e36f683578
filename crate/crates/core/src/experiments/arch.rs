use crate::error::{Error, Result};

/// Hyperparameters of one model `Psi o phi`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ArchSpec {
    /// Mode bound of the decoder.
    pub m: usize,
    /// Dense width.
    pub w: usize,
    /// Dense hidden layers.
    pub depth: usize,
    /// Parameter dimension.
    pub p: usize,
    /// Grid level.
    pub k: u32,
    pub slope: f64,
    pub seed: u64,
}

impl ArchSpec {
    pub fn validate(&self) -> Result<()> {
        if self.m == 0 || self.w == 0 || self.depth == 0 || self.p == 0 || self.k == 0 {
            return Err(Error::Config(format!("architecture entries must be positive: {self:?}")));
        }
        Ok(())
    }
}

/// `(2^{2/(2s-1)}, 2^{p/(r+1) + 2/(2s-1)})`; `r = None` stands for `r = infinity`.
pub fn scaling_factors(s: usize, r: Option<usize>, p: usize) -> Result<(f64, f64)> {
    if s == 0 {
        return Err(Error::Config("smoothness index s must be >= 1".into()));
    }
    let channel = 2.0 / (2 * s - 1) as f64;
    let param = r.map_or(0.0, |r| p as f64 / (r + 1) as f64);
    Ok((channel.exp2(), (param + channel).exp2()))
}

/// Next architecture: `m` and `w` scaled and rounded up, `l` more hidden layers.
pub fn scale_architecture(a: &ArchSpec, s: usize, r: Option<usize>, l: usize) -> Result<ArchSpec> {
    a.validate()?;
    let (fm, fw) = scaling_factors(s, r, a.p)?;
    Ok(ArchSpec { m: scale_up(a.m, fm), w: scale_up(a.w, fw), depth: a.depth + l, ..*a })
}

/// `ceil(n f)`, tolerant to the rounding noise of `2^x`.
fn scale_up(n: usize, f: f64) -> usize {
    let v = n as f64 * f;
    let nearest = v.round();
    if (v - nearest).abs() <= 1e-9 * v {
        nearest as usize
    } else {
        v.ceil() as usize
    }
}

/// The sequence `a, scale(a), scale(scale(a)), ..` of length `levels`.
pub fn architecture_ladder(a: &ArchSpec, s: usize, r: Option<usize>, l: usize, levels: usize) -> Result<Vec<ArchSpec>> {
    let mut ladder = vec![*a];
    while ladder.len() < levels {
        let next = scale_architecture(ladder.last().expect("non-empty"), s, r, l)?;
        ladder.push(next);
    }
    Ok(ladder)
}

/// Mode bound `ceil((eps / 2)^{-2/(2s-1)} M c)` reaching accuracy `eps`.
pub fn choose_m(epsilon: f64, s: usize, mc: f64) -> Result<usize> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::Config(format!("accuracy must lie in (0, 1), got {epsilon}")));
    }
    if s == 0 || !(mc > 0.0) {
        return Err(Error::Config(format!("need s >= 1 and M c > 0, got {s} and {mc}")));
    }
    Ok(((epsilon / 2.0).powf(-2.0 / (2 * s - 1) as f64) * mc).ceil() as usize)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(m: usize, w: usize, depth: usize, p: usize) -> ArchSpec {
        ArchSpec { m, w, depth, p, k: 6, slope: 0.01, seed: 0 }
    }

    #[test]
    fn benchmark_factors() {
        let (fm, fw) = scaling_factors(3, Some(2), 3).unwrap();
        assert!((fm - 1.3195).abs() < 1e-4 && (fm * 100.0).round() == 132.0);
        assert!((fw - 2.639).abs() < 1e-3 && (fw * 100.0).round() == 264.0);
    }

    #[test]
    fn infinite_r_quadruples() {
        assert_eq!(scaling_factors(1, None, 2).unwrap(), (4.0, 4.0));
        let next = scale_architecture(&spec(1, 1, 1, 2), 1, None, 1).unwrap();
        assert_eq!((next.m, next.w, next.depth), (4, 4, 2));
    }

    #[test]
    fn ladder_rounds_up() {
        let ladder = architecture_ladder(&spec(5, 3, 4, 3), 3, Some(2), 2, 3).unwrap();
        let triples: Vec<_> = ladder.iter().map(|a| (a.m, a.w, a.depth)).collect();
        assert_eq!(triples, vec![(5, 3, 4), (7, 8, 6), (10, 22, 8)]);
    }

    #[test]
    fn twice_equals_squared_factors() {
        let a = spec(3, 5, 2, 2);
        let twice = scale_architecture(&scale_architecture(&a, 1, None, 1).unwrap(), 1, None, 1).unwrap();
        assert_eq!((twice.m, twice.w, twice.depth), (48, 80, 4));
    }

    #[test]
    fn choose_m_examples() {
        assert_eq!(choose_m(0.5, 1, 1.0).unwrap(), 16);
        assert_eq!(choose_m(0.5, 3, 1.0).unwrap(), 2);
        let mut prev = 0;
        for i in 1..100 {
            let m = choose_m(1.0 - i as f64 / 100.0, 2, 3.0).unwrap();
            assert!(m >= prev);
            prev = m;
        }
        assert!(choose_m(1.5, 1, 1.0).is_err());
    }
}
