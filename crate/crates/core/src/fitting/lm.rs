// SPDX-License-Identifier: Apache-2.0

//! Bounded Levenberg-Marquardt.
//!
//! Each free parameter `x` in `(lo, hi)` is optimized through the logistic
//! map `x = lo + (hi - lo) / (1 + e^-u)`, so every trial point is feasible.
//! Standard errors are reported in natural units from `s^2 (J^T J)^-1` with
//! `s^2 = rss / (m - n)`.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use super::problem::{build_residuals, FitProblem, ParamName, ResidualFunction, Scope};
use crate::error::Result;
use crate::par;

pub const MAX_ITERATIONS: usize = 500;
const RELATIVE_DECREASE: f64 = 1e-10;
const STALL_COUNT: usize = 3;
const GRADIENT_NORM: f64 = 1e-12;
const LAMBDA_INITIAL: f64 = 1e-3;
const LAMBDA_MAX: f64 = 1e16;
/// Reciprocal condition number of the correlation-scaled normal matrix below
/// which the parameter set is declared non-identifiable.
const SINGULAR_RCOND: f64 = 1e-12;
/// Correlations above this magnitude are flagged.
pub const CORRELATION_WARNING: f64 = 0.99;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FitStatus {
    /// Relative residual decrease stayed below threshold for 3 iterations.
    RelativeDecrease,
    SmallGradient,
    /// Residual vanished to rounding.
    ExactFit,
    /// No further downhill step exists at machine precision.
    Stalled,
    /// Iteration limit reached; values are the best point found.
    MaxIterations,
}

impl FitStatus {
    pub fn converged(self) -> bool {
        !matches!(self, Self::MaxIterations)
    }
}

/// Serializes non-finite floats as strings so reports survive JSON.
mod lossless_f64 {
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    #[derive(Serialize, Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Number(f64),
        Text(String),
    }

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_finite() {
            Repr::Number(*v)
        } else {
            Repr::Text(v.to_string())
        }
        .serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        match Repr::deserialize(d)? {
            Repr::Number(v) => Ok(v),
            Repr::Text(t) => t.parse().map_err(serde::de::Error::custom),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FittedParameter {
    pub name: ParamName,
    pub scope: Scope,
    pub value: f64,
    /// Standard error; `None` for fixed parameters, infinite when the free
    /// set is not identifiable.
    #[serde(default, with = "option_lossless")]
    pub error: Option<f64>,
    pub fixed: bool,
}

mod option_lossless {
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    #[derive(Serialize, Deserialize)]
    struct Wrap(#[serde(with = "super::lossless_f64")] f64);

    pub fn serialize<S: Serializer>(v: &Option<f64>, s: S) -> Result<S::Ok, S::Error> {
        v.map(Wrap).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<f64>, D::Error> {
        Ok(Option::<Wrap>::deserialize(d)?.map(|w| w.0))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub parameters: Vec<FittedParameter>,
    pub rss: f64,
    pub initial_rss: f64,
    /// Points with positive weight.
    pub points: usize,
    pub dof: usize,
    pub iterations: usize,
    pub status: FitStatus,
    /// Normal matrix of the free parameters is numerically singular.
    pub singular: bool,
    /// Correlation matrix of the free parameters (row order as in
    /// `parameters` with fixed entries skipped); `None` when singular.
    pub correlation: Option<Vec<Vec<f64>>>,
    pub warnings: Vec<String>,
}

impl FitResult {
    pub fn value(&self, name: ParamName) -> Option<f64> {
        self.parameters.iter().find(|p| p.name == name).map(|p| p.value)
    }

    pub fn error(&self, name: ParamName) -> Option<f64> {
        self.parameters.iter().find(|p| p.name == name).and_then(|p| p.error)
    }

    pub fn free(&self) -> impl Iterator<Item = &FittedParameter> {
        self.parameters.iter().filter(|p| !p.fixed)
    }

    /// Singular, or some pair of free parameters is almost fully correlated.
    pub fn degenerate(&self) -> bool {
        self.singular
            || self.correlation.as_ref().is_some_and(|c| {
                c.iter()
                    .enumerate()
                    .any(|(i, row)| row.iter().enumerate().any(|(j, r)| i != j && r.abs() > CORRELATION_WARNING))
            })
    }
}

struct Logistic {
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl Logistic {
    fn to_natural(&self, u: &[f64]) -> Vec<f64> {
        u.iter()
            .zip(self.lower.iter().zip(&self.upper))
            .map(|(&u, (&lo, &hi))| lo + (hi - lo) / (1.0 + (-u).exp()))
            .collect()
    }

    fn to_internal(&self, x: &[f64]) -> Vec<f64> {
        x.iter()
            .zip(self.lower.iter().zip(&self.upper))
            .map(|(&x, (&lo, &hi))| ((x - lo) / (hi - x)).ln())
            .collect()
    }

    /// dx/du at each coordinate.
    fn slope(&self, u: &[f64]) -> Vec<f64> {
        self.to_natural(u)
            .iter()
            .zip(self.lower.iter().zip(&self.upper))
            .map(|(&x, (&lo, &hi))| (x - lo) * (hi - x) / (hi - lo))
            .collect()
    }
}

fn sum_sq(r: &[f64]) -> f64 {
    r.iter().map(|v| v * v).sum()
}

/// Forward-difference Jacobian in internal coordinates, columns in parallel.
fn jacobian(f: &ResidualFunction<'_>, map: &Logistic, u: &[f64], r0: &[f64]) -> Result<DMatrix<f64>> {
    let columns = par::try_map_range(u.len(), |k| {
        let h = f64::EPSILON.sqrt() * u[k].abs().max(1.0);
        let mut shifted = u.to_vec();
        shifted[k] += h;
        let step = shifted[k] - u[k];
        let r = f.eval(&map.to_natural(&shifted))?;
        Ok(r.iter().zip(r0).map(|(a, b)| (a - b) / step).collect::<Vec<f64>>())
    })?;
    Ok(DMatrix::from_fn(r0.len(), u.len(), |i, k| columns[k][i]))
}

fn exact_fit_threshold(m: usize) -> f64 {
    // Residuals at the level of double rounding of transmissions near 1.
    (m as f64) * 1e-30
}

pub fn fit(problem: &FitProblem) -> Result<FitResult> {
    let f = build_residuals(problem)?;
    let free = problem.free_indices();
    let map = Logistic {
        lower: free.iter().map(|&i| problem.parameters[i].lower).collect(),
        upper: free.iter().map(|&i| problem.parameters[i].upper).collect(),
    };
    let x0: Vec<f64> = free.iter().map(|&i| problem.parameters[i].initial).collect();
    let mut u = map.to_internal(&x0);
    let mut r = f.eval(&map.to_natural(&u))?;
    let mut rss = sum_sq(&r);
    let initial_rss = rss;
    let m = f.len();
    let n = free.len();

    let mut lambda = LAMBDA_INITIAL;
    let mut small_decreases = 0;
    let mut iterations = 0;
    let mut status = FitStatus::MaxIterations;

    if n == 0 {
        status = FitStatus::SmallGradient;
    } else if rss <= exact_fit_threshold(m) {
        status = FitStatus::ExactFit;
    }

    while status == FitStatus::MaxIterations && iterations < MAX_ITERATIONS {
        iterations += 1;
        let j = jacobian(&f, &map, &u, &r)?;
        let rv = DVector::from_column_slice(&r);
        let gradient = j.tr_mul(&rv);
        if gradient.norm() < GRADIENT_NORM {
            status = FitStatus::SmallGradient;
            break;
        }
        let normal = j.tr_mul(&j);
        let diag_floor = normal.diagonal().max() * 1e-15;

        let accepted = loop {
            let mut damped = normal.clone();
            for k in 0..n {
                damped[(k, k)] += lambda * normal[(k, k)].max(diag_floor);
            }
            let candidate = damped.cholesky().and_then(|c| {
                let step = c.solve(&(-&gradient));
                let trial: Vec<f64> = u.iter().zip(step.iter()).map(|(a, b)| a + b).collect();
                f.eval(&map.to_natural(&trial)).ok().map(|rt| (trial, rt))
            });
            if let Some((trial, rt)) = candidate {
                let trial_rss = sum_sq(&rt);
                if trial_rss.is_finite() && trial_rss < rss {
                    lambda = (lambda / 10.0).max(1e-15);
                    break Some((trial, rt, trial_rss));
                }
            }
            lambda *= 10.0;
            if lambda > LAMBDA_MAX {
                break None;
            }
        };

        let Some((trial, rt, trial_rss)) = accepted else {
            status = FitStatus::Stalled;
            break;
        };
        let decrease = (rss - trial_rss) / rss;
        u = trial;
        r = rt;
        rss = trial_rss;
        if rss <= exact_fit_threshold(m) {
            status = FitStatus::ExactFit;
            break;
        }
        small_decreases = if decrease < RELATIVE_DECREASE { small_decreases + 1 } else { 0 };
        if small_decreases >= STALL_COUNT {
            status = FitStatus::RelativeDecrease;
        }
    }

    let x = map.to_natural(&u);
    let points: usize = problem.datasets.iter().map(|d| d.effective_len()).sum();
    let dof = points.saturating_sub(n);
    let mut warnings = Vec::new();
    if status == FitStatus::MaxIterations {
        warnings.push(format!("no convergence after {MAX_ITERATIONS} iterations; best point reported"));
    }

    let (errors, correlation, singular) = if n == 0 {
        (vec![], None, false)
    } else {
        uncertainties(&f, &map, &u, &r, rss, dof, &mut warnings)?
    };

    let values = problem.full_values(&x);
    let mut next_free = 0;
    let parameters = problem
        .parameters
        .iter()
        .zip(values)
        .map(|(p, value)| {
            let error = if p.fixed {
                None
            } else {
                next_free += 1;
                Some(errors[next_free - 1])
            };
            FittedParameter {
                name: p.name,
                scope: p.scope,
                value,
                error,
                fixed: p.fixed,
            }
        })
        .collect();

    Ok(FitResult {
        parameters,
        rss,
        initial_rss,
        points,
        dof,
        iterations,
        status,
        singular,
        correlation,
        warnings,
    })
}

type Uncertainties = (Vec<f64>, Option<Vec<Vec<f64>>>, bool);

fn uncertainties(
    f: &ResidualFunction<'_>,
    map: &Logistic,
    u: &[f64],
    r: &[f64],
    rss: f64,
    dof: usize,
    warnings: &mut Vec<String>,
) -> Result<Uncertainties> {
    let n = u.len();
    let names: Vec<String> = f
        .problem()
        .free_indices()
        .iter()
        .map(|&i| f.problem().parameters[i].name.to_string())
        .collect();
    let mut j = jacobian(f, map, u, r)?;
    for (k, slope) in map.slope(u).into_iter().enumerate() {
        j.column_mut(k).unscale_mut(slope);
    }
    let normal = j.tr_mul(&j);
    let scale: Vec<f64> = normal.diagonal().iter().map(|d| d.sqrt()).collect();

    let singular_result = |warnings: &mut Vec<String>, why: String| -> Uncertainties {
        warnings.push(format!("normal matrix is singular ({why}); free parameters are not identifiable"));
        (vec![f64::INFINITY; n], None, true)
    };
    if let Some(k) = scale.iter().position(|s| !(*s > 0.0) || !s.is_finite()) {
        return Ok(singular_result(warnings, format!("{} has no effect on the residuals", names[k])));
    }
    let scaled = DMatrix::from_fn(n, n, |a, b| normal[(a, b)] / (scale[a] * scale[b]));
    let eigen = SymmetricEigen::new(scaled.clone()).eigenvalues;
    let (min, max) = eigen.iter().fold((f64::INFINITY, 0.0_f64), |(lo, hi), &e| (lo.min(e), hi.max(e.abs())));
    if !(min > SINGULAR_RCOND * max) {
        return Ok(singular_result(warnings, format!("reciprocal condition {:.1e}", min / max)));
    }
    let Some(inverse) = scaled.cholesky().map(|c| c.inverse()) else {
        return Ok(singular_result(warnings, "Cholesky failed".into()));
    };

    let s2 = if dof > 0 { rss / dof as f64 } else { f64::INFINITY };
    if dof == 0 {
        warnings.push("no residual degrees of freedom; errors are unbounded".into());
    }
    let errors: Vec<f64> = (0..n).map(|k| (s2 * inverse[(k, k)]).sqrt() / scale[k]).collect();
    let correlation: Vec<Vec<f64>> = (0..n)
        .map(|a| (0..n).map(|b| inverse[(a, b)] / (inverse[(a, a)] * inverse[(b, b)]).sqrt()).collect())
        .collect();
    for a in 0..n {
        for b in a + 1..n {
            if correlation[a][b].abs() > CORRELATION_WARNING {
                warnings.push(format!(
                    "{} and {} are strongly correlated (rho = {:.4})",
                    names[a], names[b], correlation[a][b]
                ));
            }
        }
    }
    Ok((errors, Some(correlation), false))
}
