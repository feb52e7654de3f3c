//! Closed-form flows of scalar-driven equations `dY = f(Y) ∘ dX`.

use std::f64::consts::{PI, TAU};

use borp_core::field::{FieldSpec, Profile};
use borp_core::grid::SampledPath;

/// `dy = a sin(y) dx` ⇒ `tan(y/2) = tan(y₀/2) e^{a x}`, on the branch through `y₀`.
fn sine_flow(y0: f64, ax: f64) -> f64 {
    let k = (y0 / TAU).round();
    let z0 = y0 - k * TAU;
    if z0.abs() == PI {
        return y0;
    }
    2.0 * ((0.5 * z0).tan() * ax.exp()).atan() + k * TAU
}

fn component_flow(profile: Profile, y0: f64, ax: f64) -> Option<f64> {
    match profile {
        Profile::Sin => Some(sine_flow(y0, ax)),
        // cos y = sin(y + π/2)
        Profile::Cos => Some(sine_flow(y0 + 0.5 * PI, ax) - 0.5 * PI),
        Profile::Tanh => Some((y0.sinh() * ax.exp()).asinh()),
        Profile::Saturation => None,
    }
}

/// Exact solution on the grid of a scalar driver `x` for the Stratonovich lift,
/// when the field has a known flow.
pub fn flow(field: &FieldSpec, y0: &[f64], x: &SampledPath) -> Option<SampledPath> {
    if x.dim() != 1 {
        return None;
    }
    let m = y0.len();
    let x0 = x.point(0)[0];
    let mut values = Vec::with_capacity(x.n_points() * m);
    for p in x.points() {
        let dx = p[0] - x0;
        for (i, &y) in y0.iter().enumerate() {
            let v = match field {
                FieldSpec::Zero => y,
                FieldSpec::Constant { value } => y + value.get(i)? * dx,
                FieldSpec::Componentwise { profile, matrix } => {
                    let a = matrix.as_ref().map_or(Some(1.0), |a| a.get(i).copied())?;
                    component_flow(*profile, y, a * dx)?
                }
                FieldSpec::Linear { matrix } if m == 1 => y * (matrix.first()? * dx).exp(),
                _ => return None,
            };
            values.push(v);
        }
    }
    SampledPath::new(x.horizon(), m, values).ok()
}
