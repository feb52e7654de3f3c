//! Exponential Young functions and Luxemburg norms of sampled functions.
//!
//! The Young function `Φ_β` is `exp(x^β) - 1` for `β >= 1`. For `β < 1` the
//! map `exp(x^β) - 1` is not convex near the origin, so it is replaced by its
//! tangent line below the inflection point `x_β = ((1 - β)/β)^{1/β}` and then
//! shifted so that `Φ_β(0) = 0`.
//!
//! Integrals are left-endpoint Riemann sums on the sample grid.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sum::CompensatedSum;

/// Default relative tolerance of the Luxemburg bisection.
pub const LUXEMBURG_TOL: f64 = 1e-10;

/// Exponent above which `exp(x^β)` is treated as overflowing.
const EXP_ARG_LIMIT: f64 = 700.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct YoungFunction {
    beta: f64,
    x_crossover: f64,
    e_at_zero: f64,
    slope: f64,
}

impl YoungFunction {
    pub fn new(beta: f64) -> Result<Self> {
        if !(beta.is_finite() && beta > 0.0) {
            return Err(Error::domain(format!("growth exponent must be positive, got {beta}")));
        }
        if beta >= 1.0 {
            return Ok(Self { beta, x_crossover: 0.0, e_at_zero: 0.0, slope: 0.0 });
        }
        // a = x_β^β; Ψ'(x_β) = β x_β^{β-1} e^a and E(0) = Ψ(x_β) - Ψ'(x_β) x_β = β e^a - 1.
        let a = (1.0 - beta) / beta;
        let x_crossover = a.powf(1.0 / beta);
        let slope = beta * x_crossover.powf(beta - 1.0) * a.exp();
        let e_at_zero = beta * a.exp() - 1.0;
        Ok(Self { beta, x_crossover, e_at_zero, slope })
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn x_crossover(&self) -> f64 {
        self.x_crossover
    }

    /// `E_β(0)`; zero for `β >= 1`.
    pub fn e_at_zero(&self) -> f64 {
        self.e_at_zero
    }

    #[inline]
    fn power(&self, x: f64) -> f64 {
        if self.beta == 2.0 {
            x * x
        } else if self.beta == 1.0 {
            x
        } else {
            x.powf(self.beta)
        }
    }

    /// `Φ_β(x)` without argument checks.
    #[inline]
    pub fn value(&self, x: f64) -> f64 {
        if x < self.x_crossover {
            self.slope * x
        } else {
            self.power(x).exp_m1() - self.e_at_zero
        }
    }

    /// `Φ_β(x)` for `x >= 0`.
    pub fn eval(&self, x: f64) -> Result<f64> {
        if !(x.is_finite() && x >= 0.0) {
            return Err(Error::domain(format!("Young function argument must be finite and nonnegative, got {x}")));
        }
        Ok(self.value(x))
    }

    /// Inverse of `Φ_β` on `[0, ∞)`, in closed form on both branches.
    pub fn inverse(&self, y: f64) -> f64 {
        if y <= 0.0 {
            return 0.0;
        }
        let knee = self.slope * self.x_crossover;
        if y <= knee {
            return y / self.slope;
        }
        let log_arg = if self.e_at_zero == 0.0 {
            y.ln_1p()
        } else {
            (1.0 + y + self.e_at_zero).ln()
        };
        log_arg.powf(1.0 / self.beta)
    }
}

/// `Φ_β(x)`.
pub fn eval_young(phi: &YoungFunction, x: f64) -> Result<f64> {
    phi.eval(x)
}

/// Nonnegative samples `|f|` at the left endpoints of a uniform grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampledFunction {
    grid_step: f64,
    domain_length: f64,
    values: Vec<f64>,
}

impl SampledFunction {
    pub fn new(grid_step: f64, domain_length: f64, values: Vec<f64>) -> Result<Self> {
        if !(grid_step.is_finite() && grid_step > 0.0 && domain_length.is_finite() && domain_length > 0.0) {
            return Err(Error::domain("grid step and domain length must be positive"));
        }
        if values.is_empty() {
            return Err(Error::domain("sampled function needs at least one sample"));
        }
        let implied = values.len() as f64 * grid_step;
        if ((implied - domain_length) / domain_length).abs() > 1e-9 {
            return Err(Error::domain(format!(
                "{} samples of step {grid_step} do not cover a domain of length {domain_length}",
                values.len()
            )));
        }
        if let Some(bad) = values.iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
            return Err(Error::domain(format!("samples must be finite and nonnegative, found {bad}")));
        }
        Ok(Self { grid_step, domain_length, values })
    }

    /// Samples of `|g|` for `g` evaluated at the left endpoints `k·T/n`.
    pub fn from_fn(domain_length: f64, n: usize, g: impl Fn(f64) -> f64) -> Result<Self> {
        let dt = domain_length / n as f64;
        Self::new(dt, domain_length, (0..n).map(|k| g(k as f64 * dt).abs()).collect())
    }

    pub fn grid_step(&self) -> f64 {
        self.grid_step
    }

    pub fn domain_length(&self) -> f64 {
        self.domain_length
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Pointwise map, keeping the grid.
    pub fn map(&self, g: impl Fn(f64) -> f64) -> Result<Self> {
        Self::new(self.grid_step, self.domain_length, self.values.iter().map(|&v| g(v)).collect())
    }
}

/// Whether `Σ Φ(v/λ)·dt > 1`; stops at the first partial sum above one.
fn modular_exceeds_one(values: &[f64], dt: f64, phi: &YoungFunction, lambda: f64) -> bool {
    let mut acc = CompensatedSum::new();
    let inv = 1.0 / lambda;
    for &v in values {
        let x = v * inv;
        if x >= phi.x_crossover && phi.power(x) > EXP_ARG_LIMIT {
            return true;
        }
        acc.add(phi.value(x) * dt);
        if acc.value() > 1.0 {
            return true;
        }
    }
    false
}

/// Luxemburg norm of nonnegative samples on a grid of step `dt`.
pub fn luxemburg_slice(values: &[f64], dt: f64, phi: &YoungFunction, tol: f64) -> f64 {
    let vmax = values.iter().copied().fold(0.0_f64, f64::max);
    if values.is_empty() || vmax == 0.0 {
        return 0.0;
    }
    let length = dt * values.len() as f64;
    // dt·Φ(vmax/λ) <= Σ Φ(v/λ)dt <= L·Φ(vmax/λ) brackets the root.
    let mut lo = vmax / phi.inverse(1.0 / dt);
    let mut hi = vmax / phi.inverse(1.0 / length);
    if values.len() == 1 {
        return hi;
    }
    while modular_exceeds_one(values, dt, phi, hi) {
        hi *= 2.0;
    }
    while lo > 0.0 && !modular_exceeds_one(values, dt, phi, lo) {
        hi = hi.min(lo);
        lo *= 0.5;
    }
    while hi - lo > tol * hi {
        let mid = 0.5 * (lo + hi);
        if modular_exceeds_one(values, dt, phi, mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    hi
}

/// `inf{λ > 0 : ∫ Φ_β(|f|/λ) <= 1}` with the integral as a left Riemann sum.
pub fn luxemburg_norm(f: &SampledFunction, phi: &YoungFunction) -> f64 {
    luxemburg_norm_with_tol(f, phi, LUXEMBURG_TOL)
}

pub fn luxemburg_norm_with_tol(f: &SampledFunction, phi: &YoungFunction, tol: f64) -> f64 {
    luxemburg_slice(&f.values, f.grid_step, phi, tol)
}

/// Left-endpoint Riemann `L^p` norm; `p = f64::INFINITY` gives the sup norm.
pub fn lp_norm(f: &SampledFunction, p: f64) -> Result<f64> {
    if p.is_nan() || p < 1.0 {
        return Err(Error::domain(format!("L^p exponent must be at least 1, got {p}")));
    }
    let vmax = f.values.iter().copied().fold(0.0_f64, f64::max);
    if p.is_infinite() || vmax == 0.0 {
        return Ok(vmax);
    }
    // Normalising by the maximum keeps large p from overflowing.
    let s: CompensatedSum = f.values.iter().map(|&v| (v / vmax).powf(p) * f.grid_step).collect();
    Ok(vmax * s.value().powf(1.0 / p))
}

/// `(max_{1<=p<=p_max} p^{-1/β}‖f‖_{L^p}, ‖f‖_{Φ_β})` over integer `p`.
pub fn orlicz_lp_equivalence_ratio(f: &SampledFunction, phi: &YoungFunction, p_max: u32) -> Result<(f64, f64)> {
    if p_max < 1 {
        return Err(Error::domain("p_max must be at least 1"));
    }
    let mut sup = 0.0_f64;
    for p in 1..=p_max {
        let p = f64::from(p);
        sup = sup.max(p.powf(-1.0 / phi.beta()) * lp_norm(f, p)?);
    }
    Ok((sup, luxemburg_norm(f, phi)))
}
