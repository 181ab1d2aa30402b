//! Least-squares fits of dressed-state line models to measured resonance
//! frequencies, with the RF wire amplitudes as free parameters.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::dressing_solver::{DressingSetup, Label, LineGrid};
use crate::error::{Error, Result};
use crate::spectroscopy::{lines_at_minimum, Branch, LineModel, ModelLines, TransitionLine};

/// One measured resonance.
#[derive(Clone, Debug, PartialEq)]
pub struct ResonanceDatum {
    /// RF current of both dressing wires (A).
    pub current: f64,
    /// Observed frequency (Hz).
    pub frequency: f64,
    /// One-sigma uncertainty (Hz).
    pub sigma: f64,
    pub branch: Option<(u32, Branch)>,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct ResonanceDataset {
    pub rows: Vec<ResonanceDatum>,
}

impl ResonanceDataset {
    pub fn new(rows: Vec<ResonanceDatum>) -> Result<Self> {
        for (i, r) in rows.iter().enumerate() {
            if !(r.sigma > 0.0 && r.sigma.is_finite()) {
                return Err(Error::InvalidArgument(format!("row {i}: sigma must be positive")));
            }
            if !(r.frequency >= 0.0 && r.frequency.is_finite()) {
                return Err(Error::InvalidArgument(format!("row {i}: frequency must be non-negative")));
            }
            if !r.current.is_finite() {
                return Err(Error::InvalidArgument(format!("row {i}: current must be finite")));
            }
        }
        Ok(ResonanceDataset { rows })
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Same data with every σ multiplied by `factor`.
    pub fn with_sigma_scaled(&self, factor: f64) -> Self {
        let rows = self.rows.iter().map(|r| ResonanceDatum { sigma: r.sigma * factor, ..r.clone() }).collect();
        ResonanceDataset { rows }
    }
}

/// Parses a loss-line tag such as `2+` or `1-`; empty means untagged.
pub fn parse_branch_tag(s: &str) -> Option<Option<(u32, Branch)>> {
    let s = s.trim();
    if s.is_empty() {
        return Some(None);
    }
    let branch = match s.chars().last()? {
        '+' => Branch::Plus,
        '-' => Branch::Minus,
        _ => return None,
    };
    Some(Some((s[..s.len() - 1].trim().parse().ok()?, branch)))
}

pub fn format_branch_tag(tag: Option<(u32, Branch)>) -> String {
    tag.map(|(n, b)| format!("{n}{}", b.symbol())).unwrap_or_default()
}

/// How the amplitude multipliers enter.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FreeScales {
    /// One multiplier shared by both wires.
    Common,
    /// Separate multipliers for wires A and B.
    PerWire,
}

impl FreeScales {
    pub fn count(self) -> usize {
        match self {
            FreeScales::Common => 1,
            FreeScales::PerWire => 2,
        }
    }
}

#[derive(Clone, Debug)]
pub struct FitOptions {
    pub max_iterations: usize,
    pub rss_tolerance: f64,
    pub gradient_tolerance: f64,
    /// Relative central-difference step.
    pub step: f64,
    pub weight_floor: f64,
    pub window: (f64, f64),
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions {
            max_iterations: 200,
            rss_tolerance: 1e-10,
            gradient_tolerance: 1e-8,
            step: 1e-4,
            weight_floor: 1e-4,
            window: (0.0, f64::INFINITY),
        }
    }
}

/// Everything the model needs besides the multipliers.
#[derive(Clone, Debug)]
pub struct FitProblem {
    pub setup: DressingSetup,
    pub search: LineGrid,
    pub from: Label,
    pub model: LineModel,
    pub scales: FreeScales,
}

#[derive(Clone, Debug)]
pub struct FitResult {
    /// Multipliers on the configured wire amplitudes.
    pub params: Vec<f64>,
    /// Σ((ν_model − ν_obs)/σ)².
    pub rss: f64,
    /// ν_model − ν_obs per datum (Hz).
    pub residuals: Vec<f64>,
    /// Model line each datum was assigned to.
    pub assigned: Vec<(u32, Branch)>,
    /// Data whose assignment misses by more than 3σ.
    pub flagged: Vec<usize>,
    pub converged: bool,
    pub iterations: usize,
    /// rss after each accepted step, starting with the initial point.
    pub history: Vec<f64>,
}

impl FitProblem {
    fn configured(&self, params: &[f64], current: f64) -> DressingSetup {
        let rf = &self.setup.model.rf;
        let (pa, pb) = match self.scales {
            FreeScales::Common => (params[0], params[0]),
            FreeScales::PerWire => (params[0], params[1]),
        };
        let mut s = self.setup.clone();
        s.model = s
            .model
            .with_rf_currents(current, current)
            .with_rf_scales(rf.scale_a * pa, rf.scale_b * pb);
        s
    }

    /// Loss lines at each distinct current, evaluated concurrently.
    pub fn lines(&self, params: &[f64], currents: &[f64], options: &FitOptions) -> Result<Vec<ModelLines>> {
        currents
            .par_iter()
            .map(|&i| {
                let s = self.configured(params, i);
                let mut m = lines_at_minimum(&s, &self.search, self.from, options.weight_floor, options.window, self.model)?;
                m.lines.retain(|l| l.is_loss());
                Ok(m)
            })
            .collect()
    }

    /// Model frequency and assignment for every datum.
    pub fn predict(
        &self,
        params: &[f64],
        data: &ResonanceDataset,
        options: &FitOptions,
    ) -> Result<Vec<(f64, (u32, Branch))>> {
        let mut currents: Vec<f64> = data.rows.iter().map(|r| r.current).collect();
        currents.sort_by(|a, b| a.total_cmp(b));
        currents.dedup();
        let per_current = self.lines(params, &currents, options)?;
        let nu = self.setup.nu_rf();
        data.rows
            .iter()
            .map(|r| {
                let k = currents.partition_point(|&c| c < r.current);
                assign(&per_current[k], nu, r).ok_or_else(|| Error::NumericFailure {
                    message: format!("no model line at {} A", r.current),
                    residual: f64::NAN,
                })
            })
            .collect()
    }
}

/// Nearest line of the datum's branch tag, or nearest overall when the tag
/// is absent. A tagged order the model does not emit (RWA lines stop at
/// n = 1, weak lines fall below the floor) is placed on the chain n·ν ± W.
fn assign(m: &ModelLines, nu: f64, datum: &ResonanceDatum) -> Option<(f64, (u32, Branch))> {
    let lines = &m.lines;
    let nearest = |it: &mut dyn Iterator<Item = &TransitionLine>| {
        it.min_by(|a, b| {
            (a.frequency - datum.frequency).abs().total_cmp(&(b.frequency - datum.frequency).abs())
        })
        .map(|l| (l.frequency, (l.order, l.branch)))
    };
    match datum.branch {
        Some(tag) => nearest(&mut lines.iter().filter(|l| (l.order, l.branch) == tag)).or_else(|| {
            let (n, b) = tag;
            let f = match b {
                Branch::Plus => n as f64 * nu + m.spacing,
                Branch::Minus => n as f64 * nu - m.spacing,
                Branch::Intra => n as f64 * nu,
            };
            m.spacing.is_finite().then_some((f.abs(), tag))
        }),
        None => nearest(&mut lines.iter()),
    }
}

fn weighted_residuals(pred: &[(f64, (u32, Branch))], data: &ResonanceDataset) -> DVector<f64> {
    DVector::from_iterator(data.len(), pred.iter().zip(&data.rows).map(|(p, r)| (p.0 - r.frequency) / r.sigma))
}

/// Damped least squares (Levenberg-Marquardt with Marquardt scaling) on the
/// amplitude multipliers, starting from `initial`.
pub fn fit_model(problem: &FitProblem, data: &ResonanceDataset, initial: &[f64], options: &FitOptions) -> Result<FitResult> {
    let np = problem.scales.count();
    if initial.len() != np {
        return Err(Error::InvalidArgument(format!("expected {np} initial parameter(s), got {}", initial.len())));
    }
    if data.len() < np {
        return Err(Error::InvalidArgument(format!("need at least {np} data point(s), got {}", data.len())));
    }
    if initial.iter().any(|p| !(p.is_finite() && *p > 0.0)) {
        return Err(Error::InvalidArgument("initial multipliers must be positive".into()));
    }
    let eval = |p: &[f64]| -> Result<DVector<f64>> { Ok(weighted_residuals(&problem.predict(p, data, options)?, data)) };
    let mut p = initial.to_vec();
    let mut r = eval(&p)?;
    let mut rss = r.norm_squared();
    let mut history = vec![rss];
    let mut lambda = 1e-3;
    let mut converged = false;
    let mut iterations = 0;
    while iterations < options.max_iterations {
        iterations += 1;
        if rss == 0.0 {
            converged = true;
            break;
        }
        let mut jac = DMatrix::zeros(data.len(), np);
        for k in 0..np {
            let h = options.step * p[k].abs().max(1e-3);
            let (mut up, mut dn) = (p.clone(), p.clone());
            up[k] += h;
            dn[k] -= h;
            let col = (eval(&up)? - eval(&dn)?) / (2.0 * h);
            jac.set_column(k, &col);
        }
        let jtj = jac.transpose() * &jac;
        let grad = jac.transpose() * &r;
        if grad.norm() < options.gradient_tolerance {
            converged = true;
            break;
        }
        let diag_max = (0..np).map(|k| jtj[(k, k)]).fold(0.0, f64::max);
        if (0..np).any(|k| !(jtj[(k, k)] > 1e-14 * diag_max)) || diag_max == 0.0 {
            return Err(Error::DegenerateFit("Jacobian has a vanishing column".into()));
        }
        if np > 1 {
            let eig = jtj.clone().symmetric_eigen().eigenvalues;
            let (lo, hi) = (eig.min(), eig.max());
            if !(lo > 1e-13 * hi) {
                return Err(Error::DegenerateFit(format!("JᵀJ condition {:.1e}", hi / lo.max(f64::MIN_POSITIVE))));
            }
        }
        let mut accepted = false;
        while lambda < 1e16 {
            let mut a = jtj.clone();
            for k in 0..np {
                a[(k, k)] *= 1.0 + lambda;
            }
            let delta = a
                .cholesky()
                .ok_or_else(|| Error::DegenerateFit("damped normal matrix not positive definite".into()))?
                .solve(&(-&grad));
            let trial: Vec<f64> = p.iter().zip(delta.iter()).map(|(x, d)| x + d).collect();
            let trial_r = if trial.iter().all(|x| *x > 0.0) { eval(&trial).ok() } else { None };
            match trial_r {
                Some(tr) if tr.norm_squared() < rss => {
                    let new_rss = tr.norm_squared();
                    let change = (rss - new_rss) / rss;
                    p = trial;
                    r = tr;
                    rss = new_rss;
                    history.push(rss);
                    lambda = (lambda / 10.0).max(1e-12);
                    accepted = true;
                    if change < options.rss_tolerance {
                        converged = true;
                    }
                    break;
                }
                _ => lambda *= 10.0,
            }
        }
        if converged {
            break;
        }
        if !accepted {
            // No step lowers rss at any damping: the relative change is zero.
            converged = true;
            break;
        }
    }
    let pred = problem.predict(&p, data, options)?;
    let residuals: Vec<f64> = pred.iter().zip(&data.rows).map(|(m, d)| m.0 - d.frequency).collect();
    let flagged = residuals
        .iter()
        .zip(&data.rows)
        .enumerate()
        .filter(|(_, (res, d))| res.abs() > 3.0 * d.sigma)
        .map(|(i, _)| i)
        .collect();
    Ok(FitResult {
        params: p,
        rss,
        residuals,
        assigned: pred.into_iter().map(|x| x.1).collect(),
        flagged,
        converged,
        iterations,
        history,
    })
}

/// Noise-free data from the model itself, one row per requested branch and
/// current.
pub fn synthetic_dataset(
    problem: &FitProblem,
    params: &[f64],
    currents: &[f64],
    branches: &[(u32, Branch)],
    sigma: f64,
    options: &FitOptions,
) -> Result<ResonanceDataset> {
    let per_current = problem.lines(params, currents, options)?;
    let mut rows = Vec::new();
    for (&current, m) in currents.iter().zip(&per_current) {
        for &tag in branches {
            if let Some(l) = m.lines.iter().find(|l| (l.order, l.branch) == tag) {
                rows.push(ResonanceDatum { current, frequency: l.frequency, sigma, branch: Some(tag) });
            }
        }
    }
    ResonanceDataset::new(rows)
}

#[cfg(test)]
mod tests;
