//! Controlled rough paths `(Y, Y′)` and their composition with smooth fields.
//!
//! For a driver in `Rⁿ` and `Y` in `R^p`, the Gubinelli derivative `Y′` is stored
//! as a path in `R^{p·n}` with `Y′[o·n + c] = ∂Y_o/∂X_c`.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::besov::{seminorm_dyadic, NormReport, RegularityParams};
use crate::error::{Error, Result};
use crate::field::VectorField;
use crate::grid::{Level2Field, SampledPath};
use crate::lift::RoughPath;

#[derive(Debug, Clone)]
pub struct ControlledPath {
    y: SampledPath,
    y_prime: SampledPath,
    driver_dim: usize,
    reference: u64,
    remainder: Level2Field,
}

impl ControlledPath {
    pub fn y(&self) -> &SampledPath {
        &self.y
    }

    pub fn y_prime(&self) -> &SampledPath {
        &self.y_prime
    }

    /// `R^Y_{i,j} = δY_{i,j} − Y′_i δX_{i,j}`, evaluated on demand.
    pub fn remainder(&self) -> &Level2Field {
        &self.remainder
    }

    pub fn driver_dim(&self) -> usize {
        self.driver_dim
    }

    /// Fingerprint of the controlling path.
    pub fn reference(&self) -> u64 {
        self.reference
    }

    pub fn into_parts(self) -> (SampledPath, SampledPath) {
        (self.y, self.y_prime)
    }

    fn check_driver(&self, x: &RoughPath) -> Result<()> {
        if x.path().fingerprint() != self.reference {
            return Err(Error::GridMismatch("controlled path refers to a different driver".into()));
        }
        Ok(())
    }
}

/// Pairs `(Y, Y′)` with the driver `X` and derives the remainder.
pub fn make_controlled(y: SampledPath, y_prime: SampledPath, x: &RoughPath) -> Result<ControlledPath> {
    let xp = x.path();
    if !y.same_grid(xp) || !y_prime.same_grid(xp) {
        return Err(Error::GridMismatch(format!(
            "controlled path grids ({} and {} steps) differ from the driver grid ({} steps, T = {})",
            y.n_steps(),
            y_prime.n_steps(),
            xp.n_steps(),
            xp.horizon()
        )));
    }
    let n = xp.dim();
    let p = y.dim();
    if y_prime.dim() != p * n {
        return Err(Error::dimension(format!(
            "Gubinelli derivative has dimension {}, expected {p}·{n}",
            y_prime.dim()
        )));
    }
    let (yv, ypv, xv) = (y.clone(), y_prime.clone(), xp.clone());
    let remainder = Level2Field::implicit(y.horizon(), y.n_steps(), p, move |i, j, out| {
        let (yi, yj) = (yv.point(i), yv.point(j));
        let (xi, xj) = (xv.point(i), xv.point(j));
        let d = ypv.point(i);
        for o in 0..p {
            let mut r = yj[o] - yi[o];
            for c in 0..n {
                r -= d[o * n + c] * (xj[c] - xi[c]);
            }
            out[o] = r;
        }
    });
    Ok(ControlledPath { y, y_prime, driver_dim: n, reference: xp.fingerprint(), remainder })
}

/// `(f(Y), Df(Y) Y′)` over the same driver.
pub fn compose(f: &dyn VectorField, z: &ControlledPath, x: &RoughPath) -> Result<ControlledPath> {
    z.check_driver(x)?;
    let m = z.y.dim();
    if f.input_dim() != m {
        return Err(Error::dimension(format!("field consumes R^{}, path lives in R^{m}", f.input_dim())));
    }
    let (fy, dfy) = compose_values(f, &z.y, &z.y_prime, z.driver_dim);
    let horizon = z.y.horizon();
    make_controlled(SampledPath::new(horizon, f.output_dim(), fy)?, SampledPath::new(horizon, f.output_dim() * z.driver_dim, dfy)?, x)
}

/// Raw buffers of `f(Y)` and `Df(Y)Y′` along the grid.
pub(crate) fn compose_values(
    f: &dyn VectorField,
    y: &SampledPath,
    y_prime: &SampledPath,
    n: usize,
) -> (Vec<f64>, Vec<f64>) {
    let m = y.dim();
    let p = f.output_dim();
    let mut fy = vec![0.0; y.n_points() * p];
    let mut dfy = vec![0.0; y.n_points() * p * n];
    let mut jac = vec![0.0; p * m];
    for (i, yi) in y.points().enumerate() {
        f.eval(yi, &mut fy[i * p..(i + 1) * p]);
        f.d1(yi, &mut jac);
        let d = y_prime.point(i);
        let out = &mut dfy[i * p * n..(i + 1) * p * n];
        for o in 0..p {
            for l in 0..m {
                let a = jac[o * m + l];
                if a == 0.0 {
                    continue;
                }
                for c in 0..n {
                    out[o * n + c] += a * d[l * n + c];
                }
            }
        }
    }
    (fy, dfy)
}

/// `[Y′]` at `(α, β, q)` and `‖R^Y‖` at `(2α, β/2, q/2)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GubinelliReport {
    pub derivative: NormReport,
    pub remainder: NormReport,
    pub value: f64,
}

pub fn gubinelli_seminorm(z: &ControlledPath, x: &RoughPath, params: RegularityParams) -> Result<GubinelliReport> {
    z.check_driver(x)?;
    let derivative = seminorm_dyadic(&z.y_prime, params)?;
    let remainder = seminorm_dyadic(&z.remainder, params.second_level())?;
    let value = derivative.seminorm_dyadic + remainder.seminorm_dyadic;
    Ok(GubinelliReport { derivative, remainder, value })
}

/// The controlled path `(X, I)` of a driver with identity derivative.
pub fn driver_as_controlled(x: &RoughPath) -> Result<ControlledPath> {
    let n = x.dim();
    let id: Arc<[f64]> = (0..n * n).map(|k| if k / n == k % n { 1.0 } else { 0.0 }).collect();
    let y_prime = SampledPath::constant(x.horizon(), x.n_steps(), &id)?;
    make_controlled(x.path().clone(), y_prime, x)
}
