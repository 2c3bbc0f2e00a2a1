//! Projected gradient descent on a row-capped factorization, the max-norm
//! family's workhorse.
//!
//! The constraint `‖X‖_max ≤ A` is enforced through its definition: the
//! iterate is kept as `X = U Vᵀ` with every row of `U` and `V` projected
//! onto the ball of radius `√A` after each gradient step, so feasibility is
//! exact at all times. The energy landscape is nonconvex in `(U, V)`, which
//! seeded restarts mitigate; the step starts at `1/L̂` with a crude
//! curvature estimate and is halved whenever the objective fails to
//! decrease. An optional entrywise box joins through the same ramping
//! quadratic hinge penalty the trace family uses, with `b = ∞` as the
//! exact "no box" sentinel.

use super::{
    box_lambda, clip_matrix, data_scale, full_box_violation, hinge_sq_deriv, penalized_score,
    require_nonempty, Constraint, FactoredMatrix, FitResult, Loss, ObsVecs, SolverConfig,
};
use crate::error::{Error, Result};
use crate::rng::{child_seed, rng_from};
use crate::sampling::ObservationSet;
use crate::Mat;
use rand_distr::{Distribution, StandardNormal};
use std::time::Instant;

/// Empirical-risk minimization over `{‖X‖_max ≤ a}`.
pub fn erm_max(obs: &ObservationSet, a: f64, loss: Loss, cfg: &SolverConfig) -> Result<FitResult> {
    pgd_solve(obs, Constraint::Max { a }, loss, cfg)
}

/// Empirical-risk minimization over `{‖X‖_max ≤ a, |X|_∞ ≤ b}`; pass
/// `b = f64::INFINITY` to disable the box (identical trajectory to
/// [`erm_max`]).
pub fn erm_max_box(
    obs: &ObservationSet,
    a: f64,
    b: f64,
    loss: Loss,
    cfg: &SolverConfig,
) -> Result<FitResult> {
    pgd_solve(obs, Constraint::MaxBox { a, b }, loss, cfg)
}

struct Factors {
    u: Vec<Vec<f64>>,
    v: Vec<Vec<f64>>,
}

impl Factors {
    fn entry(&self, i: usize, j: usize) -> f64 {
        self.u[i].iter().zip(&self.v[j]).map(|(p, q)| p * q).sum()
    }
}

pub(crate) fn pgd_solve(
    obs: &ObservationSet,
    constraint: Constraint,
    loss: Loss,
    cfg: &SolverConfig,
) -> Result<FitResult> {
    let start = Instant::now();
    constraint.validate()?;
    if constraint.is_trace_family() {
        return Err(Error::Parameter(
            "the factored solver handles the max-norm family only".into(),
        ));
    }
    cfg.validate()?;
    require_nonempty(obs)?;
    if let Loss::Huber { delta0 } = loss {
        if !(delta0 > 0.0) || !delta0.is_finite() {
            return Err(Error::Parameter(format!(
                "Huber smoothing width must be finite and positive, got {delta0}"
            )));
        }
    }

    let a = constraint.a();
    let b = constraint.b();
    let boxed = b.is_finite();
    let row_cap = a.sqrt();
    let k = cfg.rank_budget;
    let ov = ObsVecs::flatten(obs);
    let s = ov.len();
    let inv_s = 1.0 / s as f64;
    let scale = data_scale(obs);
    let sigma0 = 0.3 * row_cap / (k as f64).sqrt();
    let lambda_final = if boxed { box_lambda(cfg, cfg.iterations.saturating_sub(1)) } else { 0.0 };
    let window = (cfg.iterations / 5).max(200);

    let mut traj: Vec<f64> = Vec::new();
    let mut global_best: Option<(f64, f64, Factors, bool)> = None;
    let mut iterations_run = 0;

    for restart in 0..cfg.restarts {
        let mut rng = rng_from(child_seed(cfg.seed, "max-restart", restart as u64));
        let mut gauss = || -> f64 { StandardNormal.sample(&mut rng) };
        let mut f = Factors {
            u: (0..ov.n)
                .map(|_| (0..k).map(|_| sigma0 * gauss()).collect())
                .collect(),
            v: (0..ov.m)
                .map(|_| (0..k).map(|_| sigma0 * gauss()).collect())
                .collect(),
        };
        project_rows(&mut f.u, row_cap);
        project_rows(&mut f.v, row_cap);

        let step0 = 1.0 / (2.0 * a.max(1.0));
        let mut step = step0;
        let mut restart_best: Option<(f64, f64, Factors)> = None;
        let mut restart_traj: Vec<f64> = Vec::new();
        let mut restart_converged = false;

        let mut x_obs = vec![0.0f64; s];
        let mut gu = vec![vec![0.0f64; k]; ov.n];
        let mut gv = vec![vec![0.0f64; k]; ov.m];

        for t in 0..cfg.iterations {
            iterations_run += 1;
            let delta = loss.delta_at(scale, t);
            let lambda = if boxed { box_lambda(cfg, t) } else { 0.0 };

            for t0 in 0..s {
                x_obs[t0] = f.entry(ov.i[t0], ov.j[t0]);
            }
            let obj = smooth_objective(&ov, &x_obs, loss, delta, lambda, b);

            for row in gu.iter_mut() {
                row.iter_mut().for_each(|g| *g = 0.0);
            }
            for row in gv.iter_mut() {
                row.iter_mut().for_each(|g| *g = 0.0);
            }
            for t0 in 0..s {
                let g = inv_s
                    * (loss.smooth_deriv(x_obs[t0], ov.y[t0], delta)
                        + lambda * hinge_sq_deriv(x_obs[t0], b));
                if g != 0.0 {
                    let (i, j) = (ov.i[t0], ov.j[t0]);
                    for l in 0..k {
                        gu[i][l] += g * f.v[j][l];
                        gv[j][l] += g * f.u[i][l];
                    }
                }
            }

            let mut cand = Factors {
                u: f.u
                    .iter()
                    .zip(&gu)
                    .map(|(row, g)| row.iter().zip(g).map(|(p, q)| p - step * q).collect())
                    .collect(),
                v: f.v
                    .iter()
                    .zip(&gv)
                    .map(|(row, g)| row.iter().zip(g).map(|(p, q)| p - step * q).collect())
                    .collect(),
            };
            project_rows(&mut cand.u, row_cap);
            project_rows(&mut cand.v, row_cap);

            let mut cand_obs = vec![0.0f64; s];
            for t0 in 0..s {
                cand_obs[t0] = cand.entry(ov.i[t0], ov.j[t0]);
            }
            let cand_obj = smooth_objective(&ov, &cand_obs, loss, delta, lambda, b);

            if cand_obj.is_finite() && cand_obj <= obj + 1e-15 * obj.abs().max(1.0) {
                f = cand;
                x_obs.copy_from_slice(&cand_obs);
            } else {
                step *= 0.5;
                if step < 1e-18 * step0 {
                    restart_converged = true;
                    record_point(
                        &ov, &x_obs, loss, b, lambda, &f, &mut restart_best, &mut restart_traj,
                        &mut traj,
                    );
                    break;
                }
            }

            record_point(
                &ov, &x_obs, loss, b, lambda, &f, &mut restart_best, &mut restart_traj, &mut traj,
            );

            let now = *restart_traj.last().expect("just pushed");
            if now <= 1e-18 * scale.max(1.0).powi(2) {
                restart_converged = true;
                break;
            }
            if t + 1 >= window {
                let then = restart_traj[t + 1 - window];
                if then - now <= cfg.tolerance * now.max(1.0) {
                    restart_converged = true;
                    break;
                }
            }
        }

        if let Some((bl, bp, bf)) = restart_best {
            let replace = match &global_best {
                None => true,
                Some((gl, gp, _, _)) => {
                    penalized_score(bl, bp, lambda_final) < penalized_score(*gl, *gp, lambda_final)
                }
            };
            if replace {
                global_best = Some((bl, bp, bf, restart_converged));
            }
        }
    }

    let (best_loss, _, best_f, converged) = global_best.expect("at least one restart ran");
    let u = Mat::from_rows(&best_f.u)?;
    let v = Mat::from_rows(&best_f.v)?;
    let factored = FactoredMatrix { u, v, row_cap };
    let full = factored.to_matrix()?;
    let constraint_residual = factored.row_cap_violation();
    let box_violation = full_box_violation(&full, b);
    let clip = cfg.clip_to_box && boxed && box_violation > 0.0;
    let estimate = if clip { clip_matrix(&full, b) } else { full };
    let empirical_loss = if clip {
        super::empirical_loss(obs, &estimate, loss)?
    } else {
        best_loss
    };

    Ok(FitResult {
        estimate,
        factored: Some(factored),
        trajectory: traj,
        empirical_loss,
        constraint_residual,
        box_violation,
        clipped: clip,
        converged,
        iterations_run,
        wall_time: start.elapsed(),
    })
}

/// Smoothed-plus-penalty objective on cached observed-entry values.
fn smooth_objective(ov: &ObsVecs, x_obs: &[f64], loss: Loss, delta: f64, lambda: f64, b: f64) -> f64 {
    let mut acc = 0.0;
    for (x, y) in x_obs.iter().zip(&ov.y) {
        acc += loss.smooth_loss(*x, *y, delta) + lambda * super::hinge_sq(*x, b);
    }
    acc / ov.len() as f64
}

/// Tracks best-so-far state and appends the global running-minimum loss.
#[allow(clippy::too_many_arguments)]
fn record_point(
    ov: &ObsVecs,
    x_obs: &[f64],
    loss: Loss,
    b: f64,
    lambda: f64,
    f: &Factors,
    restart_best: &mut Option<(f64, f64, Factors)>,
    restart_traj: &mut Vec<f64>,
    traj: &mut Vec<f64>,
) {
    let true_loss = ov.true_loss(x_obs, loss);
    let penalty = ov.box_penalty(x_obs, b);
    let replace = match restart_best {
        None => true,
        Some((bl, bp, _)) => {
            penalized_score(true_loss, penalty, lambda) < penalized_score(*bl, *bp, lambda)
        }
    };
    if replace {
        let snapshot = Factors { u: f.u.clone(), v: f.v.clone() };
        *restart_best = Some((true_loss, penalty, snapshot));
    }
    let restart_floor = restart_traj.last().copied().unwrap_or(f64::INFINITY);
    restart_traj.push(true_loss.min(restart_floor));
    let global_floor = traj.last().copied().unwrap_or(f64::INFINITY);
    traj.push(true_loss.min(global_floor));
}

/// Projects every row onto the Euclidean ball of radius `cap`.
fn project_rows(rows: &mut [Vec<f64>], cap: f64) {
    for row in rows {
        let norm = row.iter().map(|e| e * e).sum::<f64>().sqrt();
        if norm > cap {
            let shrink = cap / norm;
            row.iter_mut().for_each(|e| *e *= shrink);
        }
    }
}
