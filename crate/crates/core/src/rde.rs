//! Rough differential equations `dY = f(Y) d𝐗`, `Y_0 = y`.
//!
//! [`solve_picard`] iterates `𝒵(Y, Y′) = (y + ∫ f(Y) d𝐗, f(Y))` on dyadic windows of the
//! driver grid, halving a window whenever the iteration fails to settle.
//! [`solve_onestep`] marches the explicit second-order scheme as a reference.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::besov::{seminorm_dyadic, NormReport, RegularityParams};
use crate::controlled::{compose_values, make_controlled, ControlledPath};
use crate::error::{Error, Result};
use crate::field::VectorField;
use crate::grid::{Level2Field, SampledPath};
use crate::lift::RoughPath;
use crate::sewing::{germ, rough_integral, SEWING_TOL};

/// Magnitude above which a solution is treated as blown up.
pub const BLOW_UP_LIMIT: f64 = 1e8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WindowPolicy {
    /// First window length as a fraction of the horizon, rounded down to a dyadic cell.
    pub initial_fraction: f64,
    /// How many times a window may be halved before giving up.
    pub max_halvings: u32,
}

impl Default for WindowPolicy {
    fn default() -> Self {
        WindowPolicy { initial_fraction: 1.0, max_halvings: 10 }
    }
}

#[derive(Clone)]
pub struct RdeProblem {
    pub driver: RoughPath,
    pub field: Arc<dyn VectorField>,
    pub y0: Vec<f64>,
    pub params: RegularityParams,
    pub window_policy: WindowPolicy,
}

impl std::fmt::Debug for RdeProblem {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("RdeProblem")
            .field("field", &self.field.name())
            .field("y0", &self.y0)
            .field("n_steps", &self.driver.n_steps())
            .field("params", &self.params)
            .field("window_policy", &self.window_policy)
            .finish()
    }
}

impl RdeProblem {
    pub fn new(driver: RoughPath, field: Arc<dyn VectorField>, y0: Vec<f64>, params: RegularityParams) -> Result<Self> {
        let p = RdeProblem { driver, field, y0, params, window_policy: WindowPolicy::default() };
        p.validate()?;
        Ok(p)
    }

    pub fn with_window_policy(mut self, policy: WindowPolicy) -> Result<Self> {
        self.window_policy = policy;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        let m = self.y0.len();
        let n = self.driver.dim();
        if m == 0 {
            return Err(Error::dimension("initial value must be nonempty"));
        }
        if self.field.input_dim() != m || self.field.output_shape() != (m, n) {
            let (r, c) = self.field.output_shape();
            return Err(Error::dimension(format!(
                "field maps R^{} to {r}×{c} matrices; the problem needs R^{m} to {m}×{n}",
                self.field.input_dim()
            )));
        }
        if self.y0.iter().any(|v| !v.is_finite()) {
            return Err(Error::domain("initial value must be finite"));
        }
        self.driver.path().dyadic_depth()?;
        let w = self.window_policy;
        if !(w.initial_fraction > 0.0 && w.initial_fraction <= 1.0) {
            return Err(Error::domain(format!("initial window fraction must lie in (0, 1], got {}", w.initial_fraction)));
        }
        Ok(())
    }

    pub fn state_dim(&self) -> usize {
        self.y0.len()
    }

    /// Notes about hypotheses the field does not certify.
    pub fn warnings(&self) -> Vec<String> {
        let mut w = Vec::new();
        if self.field.bounds().is_none() {
            w.push(format!("field `{}` is not globally bounded; solution magnitude is monitored", self.field.name()));
        }
        if self.field.smoothness() < 3 {
            w.push(format!(
                "field `{}` is only C^{}; composition is defined but stability is not covered",
                self.field.name(),
                self.field.smoothness()
            ));
        }
        w
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindowRecord {
    pub start: usize,
    pub end: usize,
    pub t_start: f64,
    pub t_end: f64,
    pub iterations: usize,
    pub residual: f64,
    pub converged: bool,
}

/// `[Y]` at `(α, β, q)` and `‖R^Y‖` at `(2α, β/2, q/2)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegularityPair {
    pub path: NormReport,
    pub remainder: NormReport,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RdeSolution {
    pub y: SampledPath,
    /// `f(Y)`.
    pub y_prime: SampledPath,
    pub picard_iters_per_window: Vec<usize>,
    pub windows: Vec<WindowRecord>,
    /// `sup|ΔY| + sup|ΔY′|` after one more application of the Picard map on `[0, T]`.
    pub residual: f64,
    /// Controlled-path distance between the solution and its image under the Picard map.
    pub metric_residual: f64,
    pub converged: bool,
    pub warnings: Vec<String>,
    pub regularity: Option<RegularityPair>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Initialization {
    /// `Ȳ_t = y_a + f(y_a) δX_{a,t}`, `Ȳ′ = f(y_a)` on each window.
    Anchor,
    /// A full-grid initial guess `Y`, with `Y′ = f(Y)`.
    Path(SampledPath),
}

#[derive(Debug, Clone, PartialEq)]
pub struct PicardOptions {
    pub tol: f64,
    pub max_iter: usize,
    pub sewing_tol: f64,
    pub init: Initialization,
}

impl PicardOptions {
    pub fn new(tol: f64, max_iter: usize) -> Self {
        PicardOptions { tol, max_iter, sewing_tol: SEWING_TOL, init: Initialization::Anchor }
    }
}

fn eval_field(f: &dyn VectorField, y: &SampledPath) -> Result<SampledPath> {
    let p = f.output_dim();
    let mut out = vec![0.0; y.n_points() * p];
    for (i, yi) in y.points().enumerate() {
        f.eval(yi, &mut out[i * p..(i + 1) * p]);
    }
    SampledPath::new(y.horizon(), p, out)
}

fn sup_diff(a: &SampledPath, b: &SampledPath) -> f64 {
    a.values().iter().zip(b.values()).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

fn magnitude(y: &SampledPath) -> f64 {
    y.values().iter().fold(0.0f64, |m, v| if v.is_finite() { m.max(v.abs()) } else { f64::INFINITY })
}

/// One application of the Picard map on the driver's full grid, starting from `y0`.
pub fn picard_map(
    field: &dyn VectorField,
    driver: &RoughPath,
    y0: &[f64],
    z: &ControlledPath,
    sewing_tol: f64,
) -> Result<(SampledPath, SampledPath)> {
    let n = driver.dim();
    let (fy, dfy) = compose_values(field, z.y(), z.y_prime(), n);
    let horizon = driver.horizon();
    let p = field.output_dim();
    let fz = make_controlled(SampledPath::new(horizon, p, fy)?, SampledPath::new(horizon, p * n, dfy)?, driver)?;
    let integral = rough_integral(driver, &fz, sewing_tol)?;
    let mut y = integral.sewing.integral_path.into_values();
    let m = y0.len();
    for chunk in y.chunks_exact_mut(m) {
        for (v, a) in chunk.iter_mut().zip(y0) {
            *v += a;
        }
    }
    Ok((SampledPath::new(horizon, m, y)?, fz.y().clone()))
}

struct WindowOutcome {
    y: SampledPath,
    iterations: usize,
    residual: f64,
    converged: bool,
}

fn picard_window(
    problem: &RdeProblem,
    xw: &RoughPath,
    ya: &[f64],
    guess: Option<SampledPath>,
    opts: &PicardOptions,
) -> Result<WindowOutcome> {
    let f = problem.field.as_ref();
    let m = ya.len();
    let n = xw.dim();
    let horizon = xw.horizon();
    let (mut y, mut yp) = match guess {
        Some(g) => {
            let yp = eval_field(f, &g)?;
            (g, yp)
        }
        None => {
            let mut fa = vec![0.0; m * n];
            f.eval(ya, &mut fa);
            let x = xw.path();
            let y = SampledPath::from_fn(horizon, xw.n_steps(), m, |_, _| {})?;
            let mut vals = y.into_values();
            for i in 0..=xw.n_steps() {
                let dx = x.increment(0, i);
                for r in 0..m {
                    vals[i * m + r] = ya[r] + (0..n).map(|c| fa[r * n + c] * dx[c]).sum::<f64>();
                }
            }
            (SampledPath::new(horizon, m, vals)?, SampledPath::constant(horizon, xw.n_steps(), &fa)?)
        }
    };
    let mut residual = f64::INFINITY;
    for k in 1..=opts.max_iter {
        let z = make_controlled(y.clone(), yp.clone(), xw)?;
        let (y_next, yp_next) = picard_map(f, xw, ya, &z, opts.sewing_tol)?;
        if magnitude(&y_next) > BLOW_UP_LIMIT {
            return Ok(WindowOutcome { y, iterations: k, residual: f64::INFINITY, converged: false });
        }
        residual = sup_diff(&y_next, &y) + sup_diff(&yp_next, &yp);
        y = y_next;
        yp = yp_next;
        if residual < opts.tol {
            return Ok(WindowOutcome { y, iterations: k, residual, converged: true });
        }
    }
    Ok(WindowOutcome { y, iterations: opts.max_iter, residual, converged: false })
}

pub fn solve_picard(problem: &RdeProblem, tol: f64, max_iter: usize) -> Result<RdeSolution> {
    solve_picard_with(problem, &PicardOptions::new(tol, max_iter))
}

pub fn solve_picard_with(problem: &RdeProblem, opts: &PicardOptions) -> Result<RdeSolution> {
    problem.validate()?;
    if !(opts.tol > 0.0) || opts.max_iter == 0 {
        return Err(Error::domain("Picard tolerance must be positive and max_iter at least 1"));
    }
    let m = problem.state_dim();
    let driver = &problem.driver;
    let n_steps = driver.n_steps();
    let dt = driver.path().dt();
    if let Initialization::Path(g) = &opts.init {
        if !g.same_grid(driver.path()) || g.dim() != m {
            return Err(Error::GridMismatch("initial guess must live on the driver grid in R^m".into()));
        }
    }
    let policy = problem.window_policy;
    let mut width = (((n_steps as f64) * policy.initial_fraction).floor() as usize).max(1);
    width = 1 << width.ilog2();
    let mut halvings = 0;
    let mut values = problem.y0.clone();
    let mut windows = Vec::new();
    let mut converged = true;
    let mut start = 0;
    while start < n_steps {
        let end = start + width;
        let xw = driver.window(start, end)?;
        let ya = values[start * m..(start + 1) * m].to_vec();
        let guess = match &opts.init {
            Initialization::Anchor => None,
            Initialization::Path(g) => {
                let w = g.window(start, end)?;
                let shift: Vec<f64> = ya.iter().zip(w.point(0)).map(|(a, b)| a - b).collect();
                Some(w.shifted(&shift)?)
            }
        };
        let out = picard_window(problem, &xw, &ya, guess, opts)?;
        if !out.converged && halvings < policy.max_halvings && width > 1 {
            width /= 2;
            halvings += 1;
            continue;
        }
        if !out.converged {
            converged = false;
            if !out.residual.is_finite() {
                return Err(Error::BlowUp { step: start, magnitude: magnitude(&out.y), limit: BLOW_UP_LIMIT });
            }
        }
        values.extend_from_slice(&out.y.values()[m..]);
        windows.push(WindowRecord {
            start,
            end,
            t_start: start as f64 * dt,
            t_end: end as f64 * dt,
            iterations: out.iterations,
            residual: out.residual,
            converged: out.converged,
        });
        start = end;
    }
    let y = SampledPath::new(driver.horizon(), m, values)?;
    finish(problem, y, windows, converged, opts.sewing_tol)
}

fn finish(
    problem: &RdeProblem,
    y: SampledPath,
    windows: Vec<WindowRecord>,
    converged: bool,
    sewing_tol: f64,
) -> Result<RdeSolution> {
    let f = problem.field.as_ref();
    let driver = &problem.driver;
    let y_prime = eval_field(f, &y)?;
    let z = make_controlled(y.clone(), y_prime.clone(), driver)?;
    let (y_next, yp_next) = picard_map(f, driver, &problem.y0, &z, sewing_tol)?;
    let residual = sup_diff(&y_next, &y) + sup_diff(&yp_next, &y_prime);
    let z_next = make_controlled(y_next, yp_next, driver)?;
    let metric_residual = controlled_distance(&z, &z_next, problem.params)?;
    Ok(RdeSolution {
        picard_iters_per_window: windows.iter().map(|w| w.iterations).collect(),
        y,
        y_prime,
        windows,
        residual,
        metric_residual,
        converged,
        warnings: problem.warnings(),
        regularity: None,
    })
}

/// `[Y′ − Ỹ′]_{α,β,q} + ‖R^Y − R^Ỹ‖_{2α,β/2,q/2}`.
pub fn controlled_distance(a: &ControlledPath, b: &ControlledPath, params: RegularityParams) -> Result<f64> {
    let dp = SampledPath::new(
        a.y_prime().horizon(),
        a.y_prime().dim(),
        a.y_prime().values().iter().zip(b.y_prime().values()).map(|(x, y)| x - y).collect(),
    )?;
    let dr = Level2Field::linear_combination(1.0, a.remainder(), -1.0, b.remainder())?;
    Ok(seminorm_dyadic(&dp, params)?.seminorm_dyadic + seminorm_dyadic(&dr, params.second_level())?.seminorm_dyadic)
}

/// `Y_{i+1} = Y_i + f(Y_i) δX + Df(Y_i)[f(Y_i)] 𝕏` on every grid cell.
pub fn solve_onestep(problem: &RdeProblem) -> Result<RdeSolution> {
    problem.validate()?;
    let f = problem.field.as_ref();
    let driver = &problem.driver;
    let (m, n) = (problem.state_dim(), driver.dim());
    let n_steps = driver.n_steps();
    let mut values = Vec::with_capacity((n_steps + 1) * m);
    values.extend_from_slice(&problem.y0);
    let (mut fy, mut jac, mut dfy) = (vec![0.0; m * n], vec![0.0; m * n * m], vec![0.0; m * n * n]);
    let (mut dx, mut xx, mut step) = (vec![0.0; n], vec![0.0; n * n], vec![0.0; m]);
    for i in 0..n_steps {
        let yi = values[i * m..(i + 1) * m].to_vec();
        f.eval(&yi, &mut fy);
        f.d1(&yi, &mut jac);
        dfy.fill(0.0);
        for o in 0..m * n {
            for l in 0..m {
                let a = jac[o * m + l];
                if a == 0.0 {
                    continue;
                }
                for c in 0..n {
                    dfy[o * n + c] += a * fy[l * n + c];
                }
            }
        }
        driver.path().increment_into(i, i + 1, &mut dx);
        driver.second_level().eval_into(i, i + 1, &mut xx);
        germ(&fy, &dfy, &dx, &xx, &mut step);
        let next: Vec<f64> = yi.iter().zip(&step).map(|(a, b)| a + b).collect();
        let mag = next.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        if !(mag <= BLOW_UP_LIMIT) {
            return Err(Error::BlowUp { step: i + 1, magnitude: mag, limit: BLOW_UP_LIMIT });
        }
        values.extend_from_slice(&next);
    }
    let y = SampledPath::new(driver.horizon(), m, values)?;
    let record = WindowRecord {
        start: 0,
        end: n_steps,
        t_start: 0.0,
        t_end: driver.horizon(),
        iterations: 1,
        residual: 0.0,
        converged: true,
    };
    finish(problem, y, vec![record], true, SEWING_TOL)
}

/// Regularity of a solution and its remainder against the driver.
pub fn regularity_report(sol: &RdeSolution, x: &RoughPath, params: RegularityParams) -> Result<RegularityPair> {
    let z = make_controlled(sol.y.clone(), sol.y_prime.clone(), x)?;
    Ok(RegularityPair {
        path: seminorm_dyadic(z.y(), params)?,
        remainder: seminorm_dyadic(z.remainder(), params.second_level())?,
    })
}

/// Attaches [`regularity_report`] to the solution.
pub fn with_regularity(mut sol: RdeSolution, problem: &RdeProblem) -> Result<RdeSolution> {
    sol.regularity = Some(regularity_report(&sol, &problem.driver, problem.params)?);
    Ok(sol)
}
