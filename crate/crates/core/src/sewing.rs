//! Partial sums of two-parameter germs, dyadic sewing and the rough integral.

use serde::{Deserialize, Serialize};

use crate::controlled::{make_controlled, ControlledPath};
use crate::error::{Error, Result};
use crate::grid::{dyadic_depth, Level2Field, SampledPath};
use crate::lift::RoughPath;
use crate::sum::CompensatedSum;

/// Default sewing tolerance, relative to `1 + sup|I|`.
pub const SEWING_TOL: f64 = 1e-12;

const KNOT_TOL: f64 = 1e-9;

/// Knots `0 = t_0 < ... < t_k = 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Partition {
    knots: Vec<f64>,
}

impl Partition {
    pub fn new(knots: Vec<f64>) -> Result<Self> {
        if knots.len() < 2 || knots[0] != 0.0 || *knots.last().unwrap() != 1.0 {
            return Err(Error::domain("partition knots must run from 0 to 1"));
        }
        if knots.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::domain("partition knots must be strictly increasing"));
        }
        Ok(Partition { knots })
    }

    /// `{k 2^{-level}}`.
    pub fn dyadic(level: u32) -> Self {
        let n = 1usize << level;
        Partition { knots: (0..=n).map(|k| k as f64 / n as f64).collect() }
    }

    pub fn knots(&self) -> &[f64] {
        &self.knots
    }

    /// Largest gap.
    pub fn norm(&self) -> f64 {
        self.knots.windows(2).map(|w| w[1] - w[0]).fold(0.0, f64::max)
    }
}

/// `Σ_k Ξ_{s + t_k(t−s), s + t_{k+1}(t−s)}` for grid indices `s <= t`.
pub fn partial_sum(xi: &Level2Field, pi: &Partition, s: usize, t: usize) -> Result<Vec<f64>> {
    if s > t || t > xi.n_steps() {
        return Err(Error::domain(format!("invalid grid interval {s}..{t}")));
    }
    let span = (t - s) as f64;
    let mut idx = Vec::with_capacity(pi.knots.len());
    for &k in &pi.knots {
        let pos = s as f64 + k * span;
        let r = pos.round();
        if (pos - r).abs() > KNOT_TOL * span.max(1.0) {
            return Err(Error::OffGrid { knot: k, start: s, end: t });
        }
        idx.push(r as usize);
    }
    let dim = xi.dim();
    let mut sums = vec![CompensatedSum::new(); dim];
    let mut buf = vec![0.0; dim];
    for w in idx.windows(2) {
        xi.eval_into(w[0], w[1], &mut buf);
        for (acc, v) in sums.iter_mut().zip(&buf) {
            acc.add(*v);
        }
    }
    Ok(sums.iter().map(CompensatedSum::value).collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SewingStatus {
    /// Consecutive levels agreed to the requested tolerance.
    Converged,
    /// The grid ran out of levels while the level differences were still shrinking.
    GridResolution,
    /// The grid ran out of levels without the level differences shrinking.
    NotCauchy,
}

#[derive(Debug, Clone)]
pub struct SewingResult {
    /// `𝓘_{t_j}`, starting at 0.
    pub integral_path: SampledPath,
    /// `(δ𝓘 − Ξ)_{i,j}`.
    pub defect_field: Level2Field,
    /// Finest dyadic level summed.
    pub levels_used: u32,
    /// `sup_j |I^{ℓ}_j − I^{ℓ−1}_j|` for `ℓ = 1..=levels_used`.
    pub cauchy_history: Vec<f64>,
    /// Levels at which the history increased.
    pub monotonicity_violations: Vec<u32>,
    pub status: SewingStatus,
}

impl SewingResult {
    pub fn converged(&self) -> bool {
        self.status != SewingStatus::NotCauchy
    }

    pub fn final_value(&self) -> &[f64] {
        self.integral_path.point(self.integral_path.n_steps())
    }

    pub fn summary(&self) -> SewingSummary {
        SewingSummary {
            final_value: self.final_value().to_vec(),
            levels_used: self.levels_used,
            cauchy_history: self.cauchy_history.clone(),
            monotonicity_violations: self.monotonicity_violations.clone(),
            status: self.status,
            converged: self.converged(),
        }
    }
}

/// Serializable part of a [`SewingResult`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SewingSummary {
    pub final_value: Vec<f64>,
    pub levels_used: u32,
    pub cauchy_history: Vec<f64>,
    pub monotonicity_violations: Vec<u32>,
    pub status: SewingStatus,
    pub converged: bool,
}

/// Level-`ℓ` sums over `[0, t_j]` for every `j`: full cells of width `N 2^{-ℓ}`
/// followed by the partial cell ending at `j`.
fn level_sums(xi: &Level2Field, level: u32) -> Vec<f64> {
    let n_steps = xi.n_steps();
    let dim = xi.dim();
    let cell = n_steps >> level;
    let mut out = vec![0.0; (n_steps + 1) * dim];
    let mut acc = vec![CompensatedSum::new(); dim];
    let mut base = vec![0.0; dim];
    let mut buf = vec![0.0; dim];
    for j in 1..=n_steps {
        let start = (j - 1) / cell * cell;
        if j - 1 == start && start > 0 {
            // a full cell just closed at `start`
            xi.eval_into(start - cell, start, &mut buf);
            for ((a, b), v) in acc.iter_mut().zip(base.iter_mut()).zip(&buf) {
                a.add(*v);
                *b = a.value();
            }
        }
        xi.eval_into(start, j, &mut buf);
        for c in 0..dim {
            out[j * dim + c] = base[c] + buf[c];
        }
    }
    out
}

/// Sews `Ξ` over dyadic refinements of `[0, t]`, stopping once consecutive levels
/// differ by less than `tol·(1 + sup|I|)` or the grid is exhausted.
pub fn sew(xi: &Level2Field, tol: f64) -> Result<SewingResult> {
    let depth = dyadic_depth(xi.n_steps())?;
    if !(tol >= 0.0) {
        return Err(Error::domain(format!("sewing tolerance must be nonnegative, got {tol}")));
    }
    let mut current = level_sums(xi, 0);
    let mut history = Vec::new();
    let mut violations = Vec::new();
    let mut status = None;
    let mut level = 0;
    while level < depth {
        level += 1;
        let next = level_sums(xi, level);
        let change = next.iter().zip(&current).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        let scale = next.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if history.last().is_some_and(|&h| change > h) {
            violations.push(level);
        }
        history.push(change);
        current = next;
        if change <= tol * (1.0 + scale) {
            status = Some(SewingStatus::Converged);
            break;
        }
    }
    let status = status.unwrap_or_else(|| match (history.first(), history.last()) {
        (Some(first), Some(last)) if last >= first && *last > 0.0 => SewingStatus::NotCauchy,
        _ => SewingStatus::GridResolution,
    });
    let integral_path = SampledPath::new(xi.horizon(), xi.dim(), current)?;
    let defect_field = defect(&integral_path, xi);
    Ok(SewingResult { integral_path, defect_field, levels_used: level, cauchy_history: history, monotonicity_violations: violations, status })
}

fn defect(integral: &SampledPath, xi: &Level2Field) -> Level2Field {
    let (path, field) = (integral.clone(), xi.clone());
    let dim = xi.dim();
    Level2Field::implicit(xi.horizon(), xi.n_steps(), dim, move |i, j, out| {
        field.eval_into(i, j, out);
        let (a, b) = (path.point(i), path.point(j));
        for c in 0..dim {
            out[c] = (b[c] - a[c]) - out[c];
        }
    })
}

/// Writes the germ `Ξ_{s,t} = Y_s δX_{s,t} + Y′_s 𝕏_{s,t}` into `out` (dimension `m`),
/// where `Y_s` is `m×n`, `Y′_s` is `(m·n)×n` and `𝕏` is `n×n`, all row-major.
#[inline]
pub(crate) fn germ(y: &[f64], y_prime: &[f64], dx: &[f64], xx: &[f64], out: &mut [f64]) {
    let n = dx.len();
    for (i, o) in out.iter_mut().enumerate() {
        let mut v = 0.0;
        for j in 0..n {
            v += y[i * n + j] * dx[j];
            let d = &y_prime[(i * n + j) * n..(i * n + j + 1) * n];
            for (k, dk) in d.iter().enumerate() {
                v += dk * xx[k * n + j];
            }
        }
        *o = v;
    }
}

/// `Ξ_{s,t} = Y_s δX_{s,t} + Y′_s 𝕏_{s,t}` for a controlled integrand in `R^{m×n}`.
pub fn integrand_germ(x: &RoughPath, z: &ControlledPath) -> Result<Level2Field> {
    let n = x.dim();
    if z.driver_dim() != n || x.path().fingerprint() != z.reference() {
        return Err(Error::GridMismatch("integrand is controlled by a different driver".into()));
    }
    if z.y().dim() % n != 0 {
        return Err(Error::dimension(format!(
            "integrand dimension {} is not a multiple of the driver dimension {n}",
            z.y().dim()
        )));
    }
    let m = z.y().dim() / n;
    let (xp, xx) = (x.path().clone(), x.second_level().clone());
    let (y, yp) = (z.y().clone(), z.y_prime().clone());
    Ok(Level2Field::implicit(x.horizon(), x.n_steps(), m, move |i, j, out| {
        let mut dx = [0.0; 8];
        let mut xxb = [0.0; 64];
        if n <= 8 {
            xp.increment_into(i, j, &mut dx[..n]);
            xx.eval_into(i, j, &mut xxb[..n * n]);
            germ(y.point(i), yp.point(i), &dx[..n], &xxb[..n * n], out);
        } else {
            let dx = xp.increment(i, j);
            let xxv = xx.get(i, j);
            germ(y.point(i), yp.point(i), &dx, &xxv, out);
        }
    }))
}

/// Rough integral `∫ Y d𝐗` together with its controlled structure `(𝓘, Y)`.
#[derive(Debug, Clone)]
pub struct RoughIntegral {
    pub sewing: SewingResult,
    pub controlled: ControlledPath,
}

pub fn rough_integral(x: &RoughPath, z: &ControlledPath, tol: f64) -> Result<RoughIntegral> {
    let xi = integrand_germ(x, z)?;
    let sewing = sew(&xi, tol)?;
    let controlled = make_controlled(sewing.integral_path.clone(), z.y().clone(), x)?;
    Ok(RoughIntegral { sewing, controlled })
}
