//! Exponential Besov-Orlicz seminorms of sampled paths and two/three-parameter fields.
//!
//! The canonical estimator is the dyadic sum
//! `‖ (T2^{-n})^{-α} ‖Ξ_{·,·+T2^{-n}}‖_{Φ_β([0,T-T2^{-n}])} ‖_{ℓ^q(n)}`
//! over the levels `n = 1..log2 N` that the grid resolves. The `dτ/τ`
//! quadrature of the modulus of continuity is kept as a cross-check.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{dyadic_depth, euclid, Level2Field, SampledPath, ThreeParameter, TwoParameter};
use crate::orlicz::{luxemburg_slice, YoungFunction, LUXEMBURG_TOL};

/// `(α, β, q)`; `q = f64::INFINITY` selects the sup aggregation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegularityParams {
    pub alpha: f64,
    pub beta: f64,
    #[serde(with = "exponent_serde")]
    pub q: f64,
}

impl RegularityParams {
    pub fn new(alpha: f64, beta: f64, q: f64) -> Result<Self> {
        if !(alpha.is_finite() && alpha > 0.0) {
            return Err(Error::domain(format!("alpha must be positive, got {alpha}")));
        }
        if !(beta.is_finite() && beta > 0.0) {
            return Err(Error::domain(format!("beta must be positive, got {beta}")));
        }
        if q.is_nan() || q <= 0.0 {
            return Err(Error::domain(format!("q must be positive or infinite, got {q}")));
        }
        Ok(Self { alpha, beta, q })
    }

    /// `(2α, β/2, q/2)`, the parameters of the second level of a rough path.
    pub fn second_level(&self) -> Self {
        Self { alpha: 2.0 * self.alpha, beta: self.beta / 2.0, q: self.q / 2.0 }
    }

    pub fn young(&self) -> Result<YoungFunction> {
        YoungFunction::new(self.beta)
    }
}

/// Serialises infinite exponents as the string `"inf"`.
pub mod exponent_serde {
    use serde::{de, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(q: &f64, s: S) -> Result<S::Ok, S::Error> {
        if q.is_infinite() {
            s.serialize_str("inf")
        } else {
            s.serialize_f64(*q)
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            Num(f64),
            Text(String),
        }
        match Repr::deserialize(d)? {
            Repr::Num(q) => Ok(q),
            Repr::Text(t) => parse_exponent(&t).map_err(de::Error::custom),
        }
    }

    pub fn parse_exponent(text: &str) -> Result<f64, String> {
        match text.trim().to_ascii_lowercase().as_str() {
            "inf" | "infinity" | "∞" => Ok(f64::INFINITY),
            other => other.parse().map_err(|_| format!("invalid exponent {text:?}")),
        }
    }
}

/// Dyadic estimate with its per-level breakdown.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormReport {
    pub params: RegularityParams,
    /// Levels `n = 1..=log2 N`.
    pub levels: Vec<u32>,
    /// Shifts `h_n = T2^{-n}`.
    pub shifts: Vec<f64>,
    /// `‖Ξ_{·,·+h_n}‖_{Φ_β([0,T-h_n])}`.
    pub raw_terms: Vec<f64>,
    /// `a_n = h_n^{-α}·raw_n`.
    pub dyadic_terms: Vec<f64>,
    /// `ℓ^q` norm of `dyadic_terms`.
    pub seminorm_dyadic: f64,
    pub seminorm_quadrature: Option<f64>,
    pub sup_norm: f64,
}

impl NormReport {
    /// Least-squares slope of `log raw_n` against `log h_n`, skipping zero terms.
    pub fn raw_decay_slope(&self) -> Option<f64> {
        let pts: Vec<(f64, f64)> = self
            .shifts
            .iter()
            .zip(&self.raw_terms)
            .filter(|(_, r)| **r > 0.0)
            .map(|(h, r)| (h.ln(), r.ln()))
            .collect();
        fit_slope(&pts)
    }

    /// The same terms aggregated with a different `q`.
    pub fn reaggregate(&self, q: f64) -> f64 {
        lq_norm(&self.dyadic_terms, q)
    }
}

pub(crate) fn fit_slope(pts: &[(f64, f64)]) -> Option<f64> {
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

/// `ℓ^q` norm; `q = ∞` is the maximum.
pub fn lq_norm(terms: &[f64], q: f64) -> f64 {
    if q.is_infinite() {
        terms.iter().copied().fold(0.0, f64::max)
    } else {
        let m = terms.iter().copied().fold(0.0, f64::max);
        if m == 0.0 {
            return 0.0;
        }
        m * terms.iter().map(|t| (t / m).powf(q)).sum::<f64>().powf(1.0 / q)
    }
}

/// Objects whose sup norm is reported alongside their seminorm.
pub trait SupNorm {
    fn sup_norm(&self) -> f64;
}

impl SupNorm for SampledPath {
    fn sup_norm(&self) -> f64 {
        SampledPath::sup_norm(self)
    }
}

impl SupNorm for Level2Field {
    fn sup_norm(&self) -> f64 {
        let n = self.n_steps();
        (0..=n)
            .into_par_iter()
            .map(|i| (i..=n).map(|j| self.magnitude(i, j)).fold(0.0, f64::max))
            .reduce(|| 0.0, f64::max)
    }
}

/// `‖ |Ξ_{·,·+kΔt}| ‖_{Φ_β([0, T-kΔt])}`.
pub fn shift_norm<O: TwoParameter + ?Sized>(obj: &O, k: usize, phi: &YoungFunction) -> f64 {
    let n = obj.n_steps();
    if k == 0 || k >= n {
        return 0.0;
    }
    let values: Vec<f64> = (0..n - k).map(|i| obj.magnitude(i, i + k)).collect();
    luxemburg_slice(&values, obj.dt(), phi, LUXEMBURG_TOL)
}

/// `sup_θ ‖ |Ξ_{·,·+θkΔt,·+kΔt}| ‖_{Φ_β([0, T-kΔt])}` over grid-representable `θ`.
pub fn shift_norm_d3<O: ThreeParameter + ?Sized>(obj: &O, k: usize, phi: &YoungFunction) -> f64 {
    let n = obj.n_steps();
    if k == 0 || k >= n {
        return 0.0;
    }
    (0..=k)
        .into_par_iter()
        .map(|m| {
            let values: Vec<f64> = (0..n - k).map(|i| obj.magnitude(i, i + m, i + k)).collect();
            luxemburg_slice(&values, obj.dt(), phi, LUXEMBURG_TOL)
        })
        .reduce(|| 0.0, f64::max)
}

fn grid_shift_limit(n_steps: usize, horizon: f64, tau: f64) -> Result<usize> {
    if !(tau.is_finite() && tau >= 0.0 && tau <= horizon * (1.0 + 1e-12)) {
        return Err(Error::domain(format!("tau must lie in [0, {horizon}], got {tau}")));
    }
    let k = (tau / horizon * n_steps as f64 * (1.0 + 1e-12)).floor() as usize;
    Ok(k.min(n_steps))
}

/// `ω_{Φ_β}(Ξ, τ)`: sup of the shift norms over grid shifts `h <= τ`.
pub fn modulus_d2<O: TwoParameter + ?Sized>(obj: &O, tau: f64, beta: f64) -> Result<f64> {
    let phi = YoungFunction::new(beta)?;
    let kmax = grid_shift_limit(obj.n_steps(), obj.horizon(), tau)?;
    Ok((1..=kmax).into_par_iter().map(|k| shift_norm(obj, k, &phi)).reduce(|| 0.0, f64::max))
}

/// Three-parameter modulus over grid shifts `h <= τ` and grid-representable `θ`.
pub fn modulus_d3<O: ThreeParameter + ?Sized>(obj: &O, tau: f64, beta: f64) -> Result<f64> {
    let phi = YoungFunction::new(beta)?;
    let kmax = grid_shift_limit(obj.n_steps(), obj.horizon(), tau)?;
    Ok((1..=kmax).map(|k| shift_norm_d3(obj, k, &phi)).fold(0.0, f64::max))
}

fn assemble(
    params: RegularityParams,
    horizon: f64,
    depth: u32,
    raw_terms: Vec<f64>,
    sup_norm: f64,
) -> NormReport {
    let levels: Vec<u32> = (1..=depth).collect();
    let shifts: Vec<f64> = levels.iter().map(|&n| horizon * 0.5f64.powi(n as i32)).collect();
    let dyadic_terms: Vec<f64> = shifts.iter().zip(&raw_terms).map(|(h, r)| h.powf(-params.alpha) * r).collect();
    let seminorm_dyadic = lq_norm(&dyadic_terms, params.q);
    NormReport { params, levels, shifts, raw_terms, dyadic_terms, seminorm_dyadic, seminorm_quadrature: None, sup_norm }
}

/// Dyadic seminorm of a path (`[f]`) or two-parameter field (`‖Ξ‖`). Needs `N = 2^L`.
pub fn seminorm_dyadic<O: TwoParameter + SupNorm + ?Sized>(obj: &O, params: RegularityParams) -> Result<NormReport> {
    let depth = dyadic_depth(obj.n_steps())?;
    let phi = params.young()?;
    let n = obj.n_steps();
    let raw: Vec<f64> = (1..=depth).into_par_iter().map(|lvl| shift_norm(obj, n >> lvl, &phi)).collect();
    Ok(assemble(params, obj.horizon(), depth, raw, obj.sup_norm()))
}

/// Dyadic norm of a three-parameter field such as `δΞ`. Needs `N = 2^L`.
pub fn seminorm_dyadic_d3<O: ThreeParameter + ?Sized>(obj: &O, params: RegularityParams) -> Result<NormReport> {
    let depth = dyadic_depth(obj.n_steps())?;
    let phi = params.young()?;
    let n = obj.n_steps();
    let raw: Vec<f64> = (1..=depth).map(|lvl| shift_norm_d3(obj, n >> lvl, &phi)).collect();
    let sup = (0..=n)
        .into_par_iter()
        .map(|i| {
            let mut m = 0.0_f64;
            for j in i..=n {
                for u in i..=j {
                    m = m.max(obj.magnitude(i, u, j));
                }
            }
            m
        })
        .reduce(|| 0.0, f64::max);
    Ok(assemble(params, obj.horizon(), depth, raw, sup))
}

/// `‖ω(τ)/τ^α‖_{L^q(dτ/τ)}` by log-midpoint quadrature, two nodes per dyadic band
/// `[T2^{-n-1}, T2^{-n}]`; for `q = ∞`, the sup over band edges and nodes.
pub fn seminorm_quadrature<O: TwoParameter + ?Sized>(obj: &O, params: RegularityParams) -> Result<f64> {
    let depth = dyadic_depth(obj.n_steps())?;
    let phi = params.young()?;
    let n = obj.n_steps();
    let horizon = obj.horizon();
    let shift: Vec<f64> = (0..=n).into_par_iter().map(|k| shift_norm(obj, k, &phi)).collect();
    let mut omega = shift;
    for k in 1..=n {
        omega[k] = omega[k].max(omega[k - 1]);
    }
    let modulus = |tau: f64| -> f64 {
        let k = ((tau / horizon) * n as f64 * (1.0 + 1e-12)).floor() as usize;
        omega[k.min(n)]
    };
    let ratio = |tau: f64| modulus(tau) / tau.powf(params.alpha);

    let mut nodes = Vec::new();
    for band in 0..depth {
        for frac in [0.25, 0.75] {
            nodes.push(horizon * 2f64.powf(-(band as f64) - frac));
        }
    }
    if params.q.is_infinite() {
        let edges = (0..=depth).map(|b| horizon * 0.5f64.powi(b as i32));
        return Ok(nodes.iter().copied().chain(edges).map(ratio).fold(0.0, f64::max));
    }
    let weight = std::f64::consts::LN_2 / 2.0;
    let s: f64 = nodes.iter().map(|&tau| weight * ratio(tau).powf(params.q)).sum();
    Ok(s.powf(1.0 / params.q))
}

/// Dyadic report, optionally with the quadrature cross-check filled in.
pub fn estimate<O: TwoParameter + SupNorm + ?Sized>(obj: &O, params: RegularityParams, quadrature: bool) -> Result<NormReport> {
    let mut report = seminorm_dyadic(obj, params)?;
    if quadrature {
        report.seminorm_quadrature = Some(seminorm_quadrature(obj, params)?);
    }
    Ok(report)
}

/// The three equivalent (quasi)norms `‖f‖_Φ + [f]`, `|f_0| + [f]`, `‖f‖_∞ + [f]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EquivalentNorms {
    pub n_phi: f64,
    pub n_0: f64,
    pub n_inf: f64,
}

pub fn equivalent_norms(f: &SampledPath, params: RegularityParams) -> Result<EquivalentNorms> {
    let seminorm = seminorm_dyadic(f, params)?.seminorm_dyadic;
    let phi = params.young()?;
    let n = f.n_steps();
    let magnitudes: Vec<f64> = (0..n).map(|i| euclid(f.point(i))).collect();
    let orlicz = luxemburg_slice(&magnitudes, f.dt(), &phi, LUXEMBURG_TOL);
    Ok(EquivalentNorms {
        n_phi: orlicz + seminorm,
        n_0: euclid(f.point(0)) + seminorm,
        n_inf: f.sup_norm() + seminorm,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn linear(n: usize) -> SampledPath {
        SampledPath::from_fn(1.0, n, 1, |t, o| o[0] = t).unwrap()
    }

    fn linear_level_term(h: f64) -> f64 {
        h.sqrt() / (1.0 + 1.0 / (1.0 - h)).ln().sqrt()
    }

    #[test]
    fn params_validation_and_serde() {
        assert!(RegularityParams::new(0.0, 2.0, 1.0).is_err());
        assert!(RegularityParams::new(0.5, -1.0, 1.0).is_err());
        assert!(RegularityParams::new(0.5, 2.0, 0.0).is_err());
        let p = RegularityParams::new(0.5, 2.0, f64::INFINITY).unwrap();
        let json = serde_json::to_string(&p).unwrap();
        assert!(json.contains("\"inf\""));
        let back: RegularityParams = serde_json::from_str(&json).unwrap();
        assert_eq!(back, p);
        let s = p.second_level();
        assert_eq!((s.alpha, s.beta), (1.0, 1.0));
        assert!(s.q.is_infinite());
    }

    #[test]
    fn constant_path_has_zero_modulus_and_seminorm() {
        let c = SampledPath::constant(1.0, 64, &[3.0, -1.0]).unwrap();
        assert_eq!(modulus_d2(&c, 0.7, 2.0).unwrap(), 0.0);
        let r = seminorm_dyadic(&c, RegularityParams::new(0.5, 2.0, 1.0).unwrap()).unwrap();
        assert!(r.dyadic_terms.iter().all(|&t| t == 0.0));
        assert_eq!(r.seminorm_dyadic, 0.0);
        assert_eq!(seminorm_quadrature(&c, RegularityParams::new(0.5, 2.0, 2.0).unwrap()).unwrap(), 0.0);
    }

    #[test]
    fn linear_path_modulus() {
        let f = linear(1024);
        let got = modulus_d2(&f, 0.5, 2.0).unwrap();
        // |δf| = h on [0, 1 - h]; the scan over grid shifts peaks at h = 0.5.
        let expected = 0.5 / 3f64.ln().sqrt();
        assert_relative_eq!(got, expected, max_relative = 1e-9);
        assert!((got - 0.4771).abs() < 1e-4);
        assert!(modulus_d2(&f, 1.5, 2.0).is_err());
        assert!(modulus_d2(&f, -0.1, 2.0).is_err());
    }

    #[test]
    fn linear_path_dyadic_closed_form() {
        let f = linear(1024);
        let r = seminorm_dyadic(&f, RegularityParams::new(0.5, 2.0, f64::INFINITY).unwrap()).unwrap();
        for (h, a) in r.shifts.iter().zip(&r.dyadic_terms) {
            assert_relative_eq!(*a, linear_level_term(*h), max_relative = 1e-9);
        }
        assert_relative_eq!(r.seminorm_dyadic, linear_level_term(0.5), max_relative = 1e-9);
        assert!((r.seminorm_dyadic - 0.6747).abs() < 1e-4);
        assert_eq!(r.levels.len(), 10);
    }

    #[test]
    fn lq_monotone_in_q() {
        let f = linear(256);
        let s = |q| seminorm_dyadic(&f, RegularityParams::new(0.5, 2.0, q).unwrap()).unwrap().seminorm_dyadic;
        let (s1, s2, sinf) = (s(1.0), s(2.0), s(f64::INFINITY));
        assert!(s1 >= s2 && s2 >= sinf);
    }

    #[test]
    fn non_dyadic_grid_is_rejected() {
        let f = linear(100);
        let err = seminorm_dyadic(&f, RegularityParams::new(0.5, 2.0, 1.0).unwrap()).unwrap_err();
        assert!(matches!(err, Error::NotDyadic { n_steps: 100 }));
    }

    #[test]
    fn equivalent_norm_examples() {
        let p = RegularityParams::new(0.5, 2.0, f64::INFINITY).unwrap();
        let zero = SampledPath::constant(1.0, 32, &[0.0]).unwrap();
        let z = equivalent_norms(&zero, p).unwrap();
        assert_eq!((z.n_phi, z.n_0, z.n_inf), (0.0, 0.0, 0.0));
        let one = SampledPath::constant(1.0, 32, &[1.0]).unwrap();
        let e = equivalent_norms(&one, p).unwrap();
        assert_relative_eq!(e.n_phi, 1.0 / 2f64.ln().sqrt(), max_relative = 1e-9);
        assert_eq!((e.n_0, e.n_inf), (1.0, 1.0));
    }

    #[test]
    fn d3_modulus_of_additive_fields_vanishes() {
        let f = SampledPath::from_fn(1.0, 32, 1, |t, o| o[0] = (7.0 * t).cos()).unwrap();
        let d = crate::grid::delta3(&Level2Field::increments_of(&f));
        assert!(modulus_d3(&d, 1.0, 2.0).unwrap() < 1e-14);
    }

    #[test]
    fn raw_slope_of_linear_path_is_one() {
        let f = linear(1024);
        let r = seminorm_dyadic(&f, RegularityParams::new(0.5, 2.0, 1.0).unwrap()).unwrap();
        // raw_n = h/sqrt(ln(1 + 1/(1-h))) is close to linear in h at small scales.
        let slope = r.raw_decay_slope().unwrap();
        assert!((slope - 1.0).abs() < 0.1, "slope {slope}");
    }
}
