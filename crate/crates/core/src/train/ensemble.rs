use std::io::Write;
use std::path::Path;

use rayon::prelude::*;

use super::mlp::{init_he, MLPParams, MLPShape, Objective};
use super::{optimize, OptimResult, TrainConfig};
use crate::error::{Error, Result};
use crate::problems::Dataset;
use crate::train::FrozenDecoder;

/// One restart of an ensemble.
#[derive(Debug, Clone)]
pub struct Member {
    pub seed: u64,
    pub params: MLPParams,
    pub result: OptimResult,
    /// Non-finite loss at any point of the run.
    pub diverged: bool,
}

impl Member {
    pub fn final_loss(&self) -> f64 {
        self.result.value
    }
}

#[derive(Debug, Clone)]
pub struct Ensemble {
    pub members: Vec<Member>,
    /// Index of the member with the lowest final training loss.
    pub best: usize,
}

impl Ensemble {
    pub fn best_member(&self) -> &Member {
        &self.members[self.best]
    }

    pub fn best_params(&self) -> &MLPParams {
        &self.best_member().params
    }
}

/// Train `config.restarts` independently initialised dense blocks (seeds
/// `config.seed + r`) and keep the one with the lowest final training loss.
///
/// Diverged restarts are flagged and skipped; it is an error only if all diverge.
pub fn train_ensemble(shape: MLPShape, decoder: &FrozenDecoder, data: &Dataset, config: &TrainConfig) -> Result<Ensemble> {
    config.validate()?;
    let objective = Objective::new(shape, decoder, data)?;
    let members = (0..config.restarts as u64)
        .into_par_iter()
        .map(|r| train_single(&objective, config.seed + r, config))
        .collect::<Result<Vec<_>>>()?;
    let best = members
        .iter()
        .enumerate()
        .filter(|(_, m)| !m.diverged)
        .min_by(|a, b| a.1.final_loss().total_cmp(&b.1.final_loss()))
        .map(|(i, _)| i)
        .ok_or_else(|| Error::Solver(format!("all {} restarts diverged", members.len())))?;
    Ok(Ensemble { members, best })
}

/// A single training run from He initialisation with `seed`.
pub fn train_single(objective: &Objective<'_>, seed: u64, config: &TrainConfig) -> Result<Member> {
    let shape = objective.shape();
    let x0 = init_he(shape, seed)?.flatten();
    let result = optimize(x0, |x| objective.value_grad(x), config);
    let diverged = !result.value.is_finite() || result.trace.iter().any(|t| !t.loss.is_finite());
    let params = MLPParams::from_flat(shape, &result.x)?;
    Ok(Member { seed, params, result, diverged })
}

/// `seed,iteration,loss,grad_norm` for every member.
pub fn write_traces(ensemble: &Ensemble, path: &Path) -> Result<()> {
    let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(out, "seed,iteration,loss,grad_norm")?;
    for m in &ensemble.members {
        for t in &m.result.trace {
            writeln!(out, "{},{},{:e},{:e}", m.seed, t.iter, t.loss, t.grad_norm)?;
        }
    }
    out.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::Split;
    use crate::spectral::DyadicGrid;
    use nalgebra::DMatrix;

    fn setup() -> (FrozenDecoder, Dataset) {
        let decoder = FrozenDecoder::new(3, 2).unwrap();
        let grid = DyadicGrid::new(3).unwrap();
        let inputs = DMatrix::from_fn(1, 8, |_, i| i as f64 / 7.0);
        let targets = DMatrix::from_fn(grid.len(), 8, |j, i| (grid.node(j) - inputs[(0, i)]).abs());
        (decoder, Dataset::new(inputs, targets, grid, Split::Train).unwrap())
    }

    fn config(restarts: usize) -> TrainConfig {
        TrainConfig { restarts, max_iter: 60, seed: 3, ..TrainConfig::default() }
    }

    #[test]
    fn single_restart_equals_single_training() {
        let (decoder, data) = setup();
        let shape = MLPShape::for_modes(1, 4, 2, 2);
        let e = train_ensemble(shape, &decoder, &data, &config(1)).unwrap();
        let objective = Objective::new(shape, &decoder, &data).unwrap();
        let single = train_single(&objective, 3, &config(1)).unwrap();
        assert_eq!(e.best_params(), &single.params);
    }

    #[test]
    fn winner_is_minimum_and_reproducible() {
        let (decoder, data) = setup();
        let shape = MLPShape::for_modes(1, 4, 2, 2);
        let e = train_ensemble(shape, &decoder, &data, &config(4)).unwrap();
        let best = e.best_member().final_loss();
        assert!(e.members.iter().all(|m| best <= m.final_loss()));
        let min = e.members.iter().map(Member::final_loss).fold(f64::INFINITY, f64::min);
        assert_eq!(best, min);
        let again = train_ensemble(shape, &decoder, &data, &config(4)).unwrap();
        assert_eq!(again.best, e.best);
        assert_eq!(again.best_params(), e.best_params());
        let seeds: Vec<u64> = e.members.iter().map(|m| m.seed).collect();
        assert_eq!(seeds, vec![3, 4, 5, 6]);
    }

    #[test]
    fn traces_are_written() {
        let (decoder, data) = setup();
        let e = train_ensemble(MLPShape::for_modes(1, 3, 1, 2), &decoder, &data, &config(2)).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("trace.csv");
        write_traces(&e, &path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        let rows = e.members.iter().map(|m| m.result.trace.len()).sum::<usize>();
        assert_eq!(text.lines().count(), rows + 1);
    }
}
