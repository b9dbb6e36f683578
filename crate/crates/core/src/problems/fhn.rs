//! Monodomain equation with FitzHugh–Nagumo kinetics on `(0, 1)`:
//!
//! ```text
//! mu u_t - mu^2 u_xx + R(u) + w = 0,    R(u) = u (u - 0.1) (u - 1)
//! w_t + 2 w - 0.5 u = 0
//! u_x(0, t) = g(t) = 50000 t^3 e^{-15 t},  u_x(1, t) = 0,  u = w = 0 at t = 0
//! ```
//!
//! Linear finite elements in space, semi-implicit Euler in time: diffusion
//! implicit, reaction and recovery explicit, then the recovery ODE implicit in
//! `w` with the new potential.

use std::io::Write;
use std::path::Path;

use rayon::prelude::*;

use super::benchmark::{sample_parameters, ParamBox, SamplingScheme};
use super::dataset::{Dataset, Split};
use crate::error::{Error, Result};
use crate::spectral::DyadicGrid;

/// Admissible diffusion parameters `5 [1e-3, 1e-2]`.
pub const MU_RANGE: (f64, f64) = (0.005, 0.05);
/// `||u||_inf` beyond which a run is declared unstable.
pub const BLOWUP_LIMIT: f64 = 1e3;

#[derive(Debug, Clone, PartialEq)]
pub struct FHNConfig {
    pub t_final: f64,
    pub dt: f64,
    pub level: u32,
    /// `(a, b)` in `w_t + a w - b u = 0`.
    pub coupling: (f64, f64),
    /// Multiplies the boundary stimulus; `0` gives the zero-data problem.
    pub forcing_scale: f64,
    /// Row-summed mass matrix instead of the consistent one.
    pub lumped_mass: bool,
    /// Accept `mu` outside [`MU_RANGE`].
    pub allow_outside: bool,
}

impl Default for FHNConfig {
    fn default() -> Self {
        Self {
            t_final: 2.0,
            dt: 5e-3,
            level: 7,
            coupling: (2.0, 0.5),
            forcing_scale: 1.0,
            lumped_mass: false,
            allow_outside: false,
        }
    }
}

impl FHNConfig {
    pub fn steps(&self) -> Result<usize> {
        if !(self.dt > 0.0 && self.t_final > 0.0) {
            return Err(Error::Config(format!("need dt > 0 and T > 0, got {} and {}", self.dt, self.t_final)));
        }
        let n = (self.t_final / self.dt).round();
        if (n * self.dt - self.t_final).abs() > 1e-9 * self.t_final {
            return Err(Error::Config(format!("T = {} is not a multiple of dt = {}", self.t_final, self.dt)));
        }
        Ok(n as usize)
    }

    pub fn grid(&self) -> Result<DyadicGrid> {
        DyadicGrid::new(self.level)
    }
}

/// Boundary stimulus `50000 t^3 e^{-15 t}`.
pub fn forcing(t: f64) -> f64 {
    50000.0 * t.powi(3) * (-15.0 * t).exp()
}

pub fn reaction(u: f64) -> f64 {
    u * (u - 0.1) * (u - 1.0)
}

/// Nodal fields at every time step.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub mu: f64,
    pub grid: DyadicGrid,
    pub times: Vec<f64>,
    pub u: Vec<Vec<f64>>,
    pub w: Vec<Vec<f64>>,
}

impl Trajectory {
    pub fn final_u(&self) -> &[f64] {
        self.u.last().expect("initial state always stored")
    }

    /// Write `t,x_1..x_N` rows for `u` and `w` to two files.
    pub fn dump_csv(&self, u_path: &Path, w_path: &Path) -> Result<()> {
        for (path, field) in [(u_path, &self.u), (w_path, &self.w)] {
            let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
            let header: Vec<String> =
                std::iter::once("t".to_string()).chain((1..=self.grid.len()).map(|j| format!("x_{j}"))).collect();
            writeln!(out, "{}", header.join(","))?;
            for (t, row) in self.times.iter().zip(field.iter()) {
                write!(out, "{t:.16e}")?;
                for v in row {
                    write!(out, ",{v:.16e}")?;
                }
                writeln!(out)?;
            }
            out.flush()?;
        }
        Ok(())
    }
}

/// Symmetric tridiagonal matrix stored by diagonals.
#[derive(Debug, Clone)]
struct Tridiagonal {
    diag: Vec<f64>,
    off: Vec<f64>,
}

impl Tridiagonal {
    fn mass(n: usize, h: f64, lumped: bool) -> Self {
        let mut diag = vec![if lumped { h } else { 2.0 * h / 3.0 }; n];
        diag[0] /= 2.0;
        diag[n - 1] /= 2.0;
        let off = vec![if lumped { 0.0 } else { h / 6.0 }; n - 1];
        Self { diag, off }
    }

    fn stiffness(n: usize, h: f64) -> Self {
        let mut diag = vec![2.0 / h; n];
        diag[0] = 1.0 / h;
        diag[n - 1] = 1.0 / h;
        Self { diag, off: vec![-1.0 / h; n - 1] }
    }

    fn combine(a: f64, x: &Self, b: f64, y: &Self) -> Self {
        Self {
            diag: x.diag.iter().zip(&y.diag).map(|(p, q)| a * p + b * q).collect(),
            off: x.off.iter().zip(&y.off).map(|(p, q)| a * p + b * q).collect(),
        }
    }

    fn apply(&self, x: &[f64]) -> Vec<f64> {
        let n = x.len();
        (0..n)
            .map(|i| {
                let mut v = self.diag[i] * x[i];
                if i > 0 {
                    v += self.off[i - 1] * x[i - 1];
                }
                if i + 1 < n {
                    v += self.off[i] * x[i + 1];
                }
                v
            })
            .collect()
    }
}

/// Thomas elimination, factored once and reused for every right-hand side.
#[derive(Debug, Clone)]
struct ThomasSolver {
    /// Modified super-diagonal `c'`.
    upper: Vec<f64>,
    /// Pivots.
    pivot: Vec<f64>,
    lower: Vec<f64>,
}

impl ThomasSolver {
    fn new(a: &Tridiagonal) -> Result<Self> {
        let n = a.diag.len();
        let mut upper = vec![0.0; n.saturating_sub(1)];
        let mut pivot = vec![0.0; n];
        let scale = a.diag.iter().fold(0.0f64, |m, d| m.max(d.abs()));
        for i in 0..n {
            let mut p = a.diag[i];
            if i > 0 {
                p -= a.off[i - 1] * upper[i - 1];
            }
            if !(p.abs() > 1e-14 * scale) {
                return Err(Error::Solver(format!("zero pivot {p:e} in row {i} of the tridiagonal system")));
            }
            pivot[i] = p;
            if i + 1 < n {
                upper[i] = a.off[i] / p;
            }
        }
        Ok(Self { upper, pivot, lower: a.off.clone() })
    }

    fn solve(&self, rhs: &mut [f64]) {
        let n = rhs.len();
        rhs[0] /= self.pivot[0];
        for i in 1..n {
            rhs[i] = (rhs[i] - self.lower[i - 1] * rhs[i - 1]) / self.pivot[i];
        }
        for i in (0..n - 1).rev() {
            rhs[i] -= self.upper[i] * rhs[i + 1];
        }
    }
}

/// Integrate the system for one `mu`, storing every time level.
pub fn fhn_solve(mu: f64, config: &FHNConfig) -> Result<Trajectory> {
    if !config.allow_outside && !(MU_RANGE.0..=MU_RANGE.1).contains(&mu) {
        return Err(Error::OutOfDomain { value: vec![mu] });
    }
    let steps = config.steps()?;
    let grid = config.grid()?;
    let (n, h, dt) = (grid.len(), grid.step(), config.dt);
    let mass = Tridiagonal::mass(n, h, config.lumped_mass);
    let system = Tridiagonal::combine(mu / dt, &mass, mu * mu, &Tridiagonal::stiffness(n, h));
    let solver = ThomasSolver::new(&system)?;
    let (a, b) = config.coupling;

    let mut u = vec![0.0; n];
    let mut w = vec![0.0; n];
    let mut traj = Trajectory {
        mu,
        grid,
        times: Vec::with_capacity(steps + 1),
        u: Vec::with_capacity(steps + 1),
        w: Vec::with_capacity(steps + 1),
    };
    traj.times.push(0.0);
    traj.u.push(u.clone());
    traj.w.push(w.clone());

    for step in 1..=steps {
        let t = step as f64 * dt;
        let source: Vec<f64> = u.iter().zip(&w).map(|(ui, wi)| mu / dt * ui - reaction(*ui) - wi).collect();
        let mut rhs = mass.apply(&source);
        rhs[0] += mu * mu * config.forcing_scale * forcing(t);
        solver.solve(&mut rhs);
        u = rhs;
        for (wi, ui) in w.iter_mut().zip(&u) {
            *wi = (*wi + b * dt * ui) / (1.0 + a * dt);
        }
        let peak = u.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if !(peak <= BLOWUP_LIMIT) {
            return Err(Error::Solver(format!("mu = {mu}: |u| reached {peak:e} at t = {t} (step {step})")));
        }
        traj.times.push(t);
        traj.u.push(u.clone());
        traj.w.push(w.clone());
    }
    Ok(traj)
}

/// Step indices `round(linspace(0, steps, count))`.
pub fn snapshot_indices(steps: usize, count: usize) -> Vec<usize> {
    if count == 1 {
        return vec![0];
    }
    (0..count).map(|i| (i as f64 * steps as f64 / (count - 1) as f64).round() as usize).collect()
}

/// `max_j |u_{j+1} - u_j| / h` at the final time.
pub fn front_steepness(traj: &Trajectory) -> f64 {
    let h = traj.grid.step();
    traj.final_u().windows(2).map(|p| (p[1] - p[0]).abs() / h).fold(0.0, f64::max)
}

/// Training (equispaced `mu`) and test (midpoint `mu`) sets of `(mu, t) -> u(., t)`.
pub fn fhn_dataset(config: &FHNConfig, n_mu_train: usize, n_t: usize) -> Result<(Dataset, Dataset)> {
    let range = ParamBox::new(&[MU_RANGE])?;
    let steps = config.steps()?;
    let grid = config.grid()?;
    let indices = snapshot_indices(steps, n_t);
    let build = |scheme, split| -> Result<Dataset> {
        let mus = sample_parameters(&range, n_mu_train, scheme, 0)?;
        let trajectories = mus.par_iter().map(|mu| fhn_solve(mu[0], config)).collect::<Result<Vec<_>>>()?;
        let pairs: Vec<(Vec<f64>, Vec<f64>)> = trajectories
            .iter()
            .flat_map(|traj| indices.iter().map(move |&i| (vec![traj.mu, traj.times[i]], traj.u[i].clone())))
            .collect();
        Dataset::from_pairs(&pairs, 2, grid, split)
    };
    Ok((build(SamplingScheme::Equispaced, Split::Train)?, build(SamplingScheme::Midpoints, Split::Test)?))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn forcing_peak() {
        assert!((forcing(0.2) - 400.0 * (-3.0f64).exp()).abs() < 1e-12);
        assert!((forcing(0.2) - 19.915).abs() < 1e-3);
        assert!(forcing(0.19) < forcing(0.2) && forcing(0.21) < forcing(0.2));
    }

    #[test]
    fn zero_data_is_fixed_point() {
        let config = FHNConfig { forcing_scale: 0.0, level: 5, ..FHNConfig::default() };
        let traj = fhn_solve(0.02, &config).unwrap();
        assert_eq!(traj.u.len(), 401);
        assert!(traj.u.iter().chain(&traj.w).all(|row| row.iter().all(|v| *v == 0.0)));
    }

    #[test]
    fn thomas_matches_dense_solve() {
        let a = Tridiagonal::combine(2.0, &Tridiagonal::mass(9, 0.125, false), 0.3, &Tridiagonal::stiffness(9, 0.125));
        let x: Vec<f64> = (0..9).map(|i| (i as f64 * 0.9).sin()).collect();
        let mut b = a.apply(&x);
        ThomasSolver::new(&a).unwrap().solve(&mut b);
        for (p, q) in b.iter().zip(&x) {
            assert!((p - q).abs() < 1e-13);
        }
        // a singular system is reported
        let k = Tridiagonal::stiffness(2, 1.0);
        let singular = Tridiagonal { diag: k.diag, off: k.off };
        assert!(matches!(ThomasSolver::new(&singular), Err(Error::Solver(_))));
    }

    #[test]
    fn mass_matrix_integrates_constants() {
        for lumped in [false, true] {
            let m = Tridiagonal::mass(17, 1.0 / 16.0, lumped);
            let total: f64 = m.apply(&[1.0; 17]).iter().sum();
            assert!((total - 1.0).abs() < 1e-14);
        }
        let k = Tridiagonal::stiffness(17, 1.0 / 16.0);
        assert!(k.apply(&[2.5; 17]).iter().all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn snapshots() {
        let idx = snapshot_indices(400, 25);
        assert_eq!(idx.len(), 25);
        assert_eq!((idx[0], idx[1], idx[24]), (0, 17, 400));
    }

    #[test]
    fn rejects_bad_config() {
        let config = FHNConfig { dt: 0.3, ..FHNConfig::default() };
        assert!(config.steps().is_err());
        assert!(matches!(fhn_solve(0.5, &FHNConfig::default()), Err(Error::OutOfDomain { .. })));
    }

    #[test]
    fn deterministic() {
        let config = FHNConfig { level: 5, ..FHNConfig::default() };
        assert_eq!(fhn_solve(0.01, &config).unwrap(), fhn_solve(0.01, &config).unwrap());
    }
}
