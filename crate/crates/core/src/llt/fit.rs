use crate::config::ReconConfig;
use crate::error::{Error, Result};
use crate::image::Image;
use crate::maps::LltMaps;

use super::objective::LltProblem;

/// Sufficient-decrease constant of the Armijo test.
pub const ARMIJO_C: f64 = 1e-4;

/// Outcome of one [`fit_llt`] run.
#[derive(Debug, Clone, PartialEq)]
pub struct FitReport {
    pub initial_objective: f64,
    pub final_objective: f64,
    /// Number of accepted descent steps.
    pub iterations: usize,
    /// True when the relative-decrease test fired or a stationary point was
    /// reached; false on hitting `max_iters` or a failed line search.
    pub converged: bool,
    /// Accepted step sizes, one per iteration.
    pub step_history: Vec<f64>,
    /// Objective at the start and after every accepted step.
    pub objective_history: Vec<f64>,
}

/// Fits LLT maps carrying `source` onto `target` by gradient descent.
///
/// Both inputs are expected to be pre-blurred. Descent starts from the
/// identity maps (`A = 1`, `B = 0`); each iteration tries `cfg.init_step`
/// and halves it until the Armijo condition holds.
pub fn fit_llt(source: &Image, target: &Image, cfg: &ReconConfig) -> Result<(LltMaps, FitReport)> {
    cfg.validate()?;
    let mut problem = LltProblem::new(source, target, cfg.alpha, cfg.beta)?;
    let (w, h) = (problem.width, problem.height);
    let n = w * h;

    let mut a = vec![1.0; n];
    let mut b = vec![0.0; n];
    let mut ga = vec![0.0; n];
    let mut gb = vec![0.0; n];
    let mut trial_a = vec![0.0; n];
    let mut trial_b = vec![0.0; n];

    let mut energy = problem.objective(&a, &b);
    if !energy.is_finite() {
        return Err(Error::NonFiniteObjective { iterations: 0 });
    }
    let mut report = FitReport {
        initial_objective: energy,
        final_objective: energy,
        iterations: 0,
        converged: false,
        step_history: Vec::new(),
        objective_history: vec![energy],
    };

    while report.iterations < cfg.max_iters {
        if energy == 0.0 {
            report.converged = true;
            break;
        }
        problem.gradient(&a, &b, &mut ga, &mut gb);
        let grad_sq: f64 = ga.iter().chain(&gb).map(|g| g * g).sum();
        if !grad_sq.is_finite() {
            return Err(Error::NonFiniteObjective {
                iterations: report.iterations,
            });
        }
        if grad_sq == 0.0 {
            report.converged = true;
            break;
        }
        let grad_max = ga.iter().chain(&gb).fold(0.0_f64, |m, g| m.max(g.abs()));
        let x_max = a.iter().chain(&b).fold(1.0_f64, |m, v| m.max(v.abs()));

        let mut step = cfg.init_step;
        let accepted = loop {
            for p in 0..n {
                trial_a[p] = a[p] - step * ga[p];
                trial_b[p] = b[p] - step * gb[p];
            }
            let e = problem.objective(&trial_a, &trial_b);
            if e.is_finite() && e <= energy - ARMIJO_C * step * grad_sq {
                break Some(e);
            }
            step *= 0.5;
            if step * grad_max <= f64::EPSILON * x_max {
                break None;
            }
        };
        let Some(new_energy) = accepted else {
            // no representable step decreases E
            break;
        };

        std::mem::swap(&mut a, &mut trial_a);
        std::mem::swap(&mut b, &mut trial_b);
        let rel_decrease = (energy - new_energy) / energy;
        energy = new_energy;
        report.iterations += 1;
        report.step_history.push(step);
        report.objective_history.push(energy);
        if energy == 0.0 || rel_decrease < cfg.rel_tol {
            report.converged = true;
            break;
        }
    }

    report.final_objective = energy;
    let maps = LltMaps::new(Image::new(w, h, a)?, Image::new(w, h, b)?)?;
    Ok((maps, report))
}
