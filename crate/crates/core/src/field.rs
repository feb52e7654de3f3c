//! Smooth vector fields `f: R^m → R^{r×c}` with analytic first to third derivatives.
//!
//! Outputs are flattened row-major to length `p = r·c`. Derivative buffers are laid
//! out as `d1[o·m + l] = ∂_l f_o`, `d2[(o·m + l)·m + k]` and so on.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Upper bounds on `sup|f|, sup|Df|, sup|D²f|, sup|D³f|` (Hilbert-Schmidt).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FieldBounds(pub [f64; 4]);

pub trait VectorField: Send + Sync {
    fn input_dim(&self) -> usize;
    /// `(rows, cols)` of the matrix-valued output.
    fn output_shape(&self) -> (usize, usize);

    fn eval(&self, y: &[f64], out: &mut [f64]);
    fn d1(&self, y: &[f64], out: &mut [f64]);
    fn d2(&self, y: &[f64], out: &mut [f64]);
    fn d3(&self, y: &[f64], out: &mut [f64]);

    /// `None` for fields that are not globally bounded.
    fn bounds(&self) -> Option<FieldBounds>;

    /// Number of bounded continuous derivatives the field certifies.
    fn smoothness(&self) -> u8 {
        3
    }

    fn name(&self) -> String;

    fn output_dim(&self) -> usize {
        let (r, c) = self.output_shape();
        r * c
    }
}

/// Scalar profiles `g` for componentwise fields.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Profile {
    Sin,
    Cos,
    Tanh,
    /// `x / √(1 + x²)`
    Saturation,
}

impl Profile {
    /// `[g, g', g'', g''']` at `x`.
    pub fn jet(self, x: f64) -> [f64; 4] {
        match self {
            Profile::Sin => {
                let (s, c) = x.sin_cos();
                [s, c, -s, -c]
            }
            Profile::Cos => {
                let (s, c) = x.sin_cos();
                [c, -s, -c, s]
            }
            Profile::Tanh => {
                let t = x.tanh();
                let s = 1.0 - t * t;
                [t, s, -2.0 * t * s, s * (6.0 * t * t - 2.0)]
            }
            Profile::Saturation => {
                let w = 1.0 + x * x;
                let r = w.sqrt();
                [x / r, 1.0 / (w * r), -3.0 * x / (w * w * r), (12.0 * x * x - 3.0) / (w * w * w * r)]
            }
        }
    }

    fn sup_jet(self) -> [f64; 4] {
        match self {
            Profile::Sin | Profile::Cos => [1.0; 4],
            Profile::Tanh => [1.0, 1.0, 4.0 / (3.0 * 3f64.sqrt()), 2.0],
            // |g''| peaks at x = 1/2
            Profile::Saturation => [1.0, 1.0, 1.5 * 1.25f64.powf(-2.5), 3.0],
        }
    }
}

fn frobenius(a: &[f64]) -> f64 {
    a.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// `f_{ij}(y) = A_{ij} g(y_i)` for an `m×n` matrix `A`.
#[derive(Debug, Clone, PartialEq)]
pub struct Componentwise {
    profile: Profile,
    a: Vec<f64>,
    m: usize,
    n: usize,
}

impl Componentwise {
    pub fn new(profile: Profile, m: usize, n: usize, a: Vec<f64>) -> Result<Self> {
        if m == 0 || n == 0 || a.len() != m * n {
            return Err(Error::dimension(format!("coefficient matrix needs {m}×{n} entries, got {}", a.len())));
        }
        Ok(Componentwise { profile, a, m, n })
    }

    /// The scalar field `y ↦ g(y)`.
    pub fn scalar(profile: Profile) -> Self {
        Componentwise { profile, a: vec![1.0], m: 1, n: 1 }
    }

    /// Writes `A_{ij} g^{(k)}(y_i)` for every output `o = i·n + j` through `put(o, i, value)`.
    fn each(&self, y: &[f64], k: usize, mut put: impl FnMut(usize, usize, f64)) {
        for i in 0..self.m {
            let g = self.profile.jet(y[i])[k];
            for j in 0..self.n {
                let o = i * self.n + j;
                put(o, i, self.a[o] * g);
            }
        }
    }
}

impl VectorField for Componentwise {
    fn input_dim(&self) -> usize {
        self.m
    }

    fn output_shape(&self) -> (usize, usize) {
        (self.m, self.n)
    }

    fn eval(&self, y: &[f64], out: &mut [f64]) {
        self.each(y, 0, |o, _, v| out[o] = v);
    }

    fn d1(&self, y: &[f64], out: &mut [f64]) {
        let m = self.m;
        out.fill(0.0);
        self.each(y, 1, |o, i, v| out[o * m + i] = v);
    }

    fn d2(&self, y: &[f64], out: &mut [f64]) {
        let m = self.m;
        out.fill(0.0);
        self.each(y, 2, |o, i, v| out[(o * m + i) * m + i] = v);
    }

    fn d3(&self, y: &[f64], out: &mut [f64]) {
        let m = self.m;
        out.fill(0.0);
        self.each(y, 3, |o, i, v| out[((o * m + i) * m + i) * m + i] = v);
    }

    fn bounds(&self) -> Option<FieldBounds> {
        let a = frobenius(&self.a);
        Some(FieldBounds(self.profile.sup_jet().map(|s| a * s)))
    }

    fn name(&self) -> String {
        format!("{:?}", self.profile).to_lowercase()
    }
}

/// `f(y) = A y` with `A` of shape `(r·c)×m`. Unbounded.
#[derive(Debug, Clone, PartialEq)]
pub struct Linear {
    a: Vec<f64>,
    m: usize,
    shape: (usize, usize),
}

impl Linear {
    pub fn new(m: usize, shape: (usize, usize), a: Vec<f64>) -> Result<Self> {
        let p = shape.0 * shape.1;
        if m == 0 || p == 0 || a.len() != p * m {
            return Err(Error::dimension(format!("linear map needs {p}×{m} entries, got {}", a.len())));
        }
        Ok(Linear { a, m, shape })
    }
}

impl VectorField for Linear {
    fn input_dim(&self) -> usize {
        self.m
    }

    fn output_shape(&self) -> (usize, usize) {
        self.shape
    }

    fn eval(&self, y: &[f64], out: &mut [f64]) {
        for (o, row) in out.iter_mut().zip(self.a.chunks_exact(self.m)) {
            *o = row.iter().zip(y).map(|(a, y)| a * y).sum();
        }
    }

    fn d1(&self, _y: &[f64], out: &mut [f64]) {
        out.copy_from_slice(&self.a);
    }

    fn d2(&self, _y: &[f64], out: &mut [f64]) {
        out.fill(0.0);
    }

    fn d3(&self, _y: &[f64], out: &mut [f64]) {
        out.fill(0.0);
    }

    fn bounds(&self) -> Option<FieldBounds> {
        None
    }

    fn name(&self) -> String {
        "linear".into()
    }
}

/// `f(y) = y`, as an `m×1` matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Identity {
    m: usize,
}

impl Identity {
    pub fn new(m: usize) -> Self {
        Identity { m }
    }
}

impl VectorField for Identity {
    fn input_dim(&self) -> usize {
        self.m
    }

    fn output_shape(&self) -> (usize, usize) {
        (self.m, 1)
    }

    fn eval(&self, y: &[f64], out: &mut [f64]) {
        out.copy_from_slice(y);
    }

    fn d1(&self, _y: &[f64], out: &mut [f64]) {
        out.fill(0.0);
        for l in 0..self.m {
            out[l * self.m + l] = 1.0;
        }
    }

    fn d2(&self, _y: &[f64], out: &mut [f64]) {
        out.fill(0.0);
    }

    fn d3(&self, _y: &[f64], out: &mut [f64]) {
        out.fill(0.0);
    }

    fn bounds(&self) -> Option<FieldBounds> {
        None
    }

    fn name(&self) -> String {
        "identity".into()
    }
}

/// A constant matrix field; all derivatives vanish.
#[derive(Debug, Clone, PartialEq)]
pub struct Constant {
    m: usize,
    shape: (usize, usize),
    value: Vec<f64>,
}

impl Constant {
    pub fn new(m: usize, shape: (usize, usize), value: Vec<f64>) -> Result<Self> {
        if m == 0 || value.len() != shape.0 * shape.1 || value.is_empty() {
            return Err(Error::dimension(format!(
                "constant field of shape {}×{} got {} entries",
                shape.0,
                shape.1,
                value.len()
            )));
        }
        Ok(Constant { m, shape, value })
    }

    pub fn zero(m: usize, n: usize) -> Self {
        Constant { m, shape: (m, n), value: vec![0.0; m * n] }
    }
}

impl VectorField for Constant {
    fn input_dim(&self) -> usize {
        self.m
    }

    fn output_shape(&self) -> (usize, usize) {
        self.shape
    }

    fn eval(&self, _y: &[f64], out: &mut [f64]) {
        out.copy_from_slice(&self.value);
    }

    fn d1(&self, _y: &[f64], out: &mut [f64]) {
        out.fill(0.0);
    }

    fn d2(&self, _y: &[f64], out: &mut [f64]) {
        out.fill(0.0);
    }

    fn d3(&self, _y: &[f64], out: &mut [f64]) {
        out.fill(0.0);
    }

    fn bounds(&self) -> Option<FieldBounds> {
        Some(FieldBounds([frobenius(&self.value), 0.0, 0.0, 0.0]))
    }

    fn name(&self) -> String {
        if self.value.iter().all(|v| *v == 0.0) { "zero".into() } else { "constant".into() }
    }
}

/// `f(y) = A exp(−|y − c|²/(2s²))` for a fixed `(r·c)` coefficient matrix `A`.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianBump {
    a: Vec<f64>,
    center: Vec<f64>,
    width: f64,
    shape: (usize, usize),
}

impl GaussianBump {
    pub fn new(shape: (usize, usize), a: Vec<f64>, center: Vec<f64>, width: f64) -> Result<Self> {
        if center.is_empty() || a.len() != shape.0 * shape.1 || a.is_empty() {
            return Err(Error::dimension("bump coefficients do not match the output shape"));
        }
        if !(width.is_finite() && width > 0.0) {
            return Err(Error::domain(format!("bump width must be positive, got {width}")));
        }
        Ok(GaussianBump { a, center, width, shape })
    }

    /// `(φ, u)` with `φ = exp(−|y−c|²/2s²)` and `u = (y−c)/s²`.
    fn core(&self, y: &[f64]) -> (f64, Vec<f64>) {
        let s2 = self.width * self.width;
        let u: Vec<f64> = y.iter().zip(&self.center).map(|(y, c)| (y - c) / s2).collect();
        let r2: f64 = y.iter().zip(&self.center).map(|(y, c)| (y - c) * (y - c)).sum();
        ((-0.5 * r2 / s2).exp(), u)
    }
}

impl VectorField for GaussianBump {
    fn input_dim(&self) -> usize {
        self.center.len()
    }

    fn output_shape(&self) -> (usize, usize) {
        self.shape
    }

    fn eval(&self, y: &[f64], out: &mut [f64]) {
        let (phi, _) = self.core(y);
        for (o, a) in out.iter_mut().zip(&self.a) {
            *o = a * phi;
        }
    }

    fn d1(&self, y: &[f64], out: &mut [f64]) {
        let m = self.input_dim();
        let (phi, u) = self.core(y);
        for (o, a) in self.a.iter().enumerate() {
            for l in 0..m {
                out[o * m + l] = -a * u[l] * phi;
            }
        }
    }

    fn d2(&self, y: &[f64], out: &mut [f64]) {
        let m = self.input_dim();
        let inv_s2 = 1.0 / (self.width * self.width);
        let (phi, u) = self.core(y);
        for (o, a) in self.a.iter().enumerate() {
            for l in 0..m {
                for k in 0..m {
                    let delta = if l == k { inv_s2 } else { 0.0 };
                    out[(o * m + l) * m + k] = a * (u[l] * u[k] - delta) * phi;
                }
            }
        }
    }

    fn d3(&self, y: &[f64], out: &mut [f64]) {
        let m = self.input_dim();
        let inv_s2 = 1.0 / (self.width * self.width);
        let (phi, u) = self.core(y);
        let d = |a: usize, b: usize| if a == b { inv_s2 } else { 0.0 };
        for (o, a) in self.a.iter().enumerate() {
            for l in 0..m {
                for k in 0..m {
                    for p in 0..m {
                        let v = d(l, k) * u[p] + d(l, p) * u[k] + d(k, p) * u[l] - u[l] * u[k] * u[p];
                        out[((o * m + l) * m + k) * m + p] = a * v * phi;
                    }
                }
            }
        }
    }

    fn bounds(&self) -> Option<FieldBounds> {
        // crude but valid: |u|^k φ ≤ (k/e)^{k/2} s^{-k}, summed over the expanded terms
        let a = frobenius(&self.a);
        let s = self.width;
        let m = self.input_dim() as f64;
        Some(FieldBounds([a, a / s, a * (1.0 + m.sqrt()) / (s * s), a * (2.0 + 3.0 * m.sqrt()) / (s * s * s)]))
    }

    fn name(&self) -> String {
        "gaussian_bump".into()
    }
}

/// Serializable description of a built-in field for an RDE with state `R^m`
/// driven by `Rⁿ` (output shape `m×n`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum FieldSpec {
    Zero,
    /// Constant `m×n` matrix, row-major.
    Constant { value: Vec<f64> },
    /// `f_{ij}(y) = A_{ij} g(y_i)`; `matrix` defaults to all ones.
    Componentwise {
        profile: Profile,
        #[serde(default)]
        matrix: Option<Vec<f64>>,
    },
    /// `f(y) = A y` with `A` of shape `(m·n)×m`.
    Linear { matrix: Vec<f64> },
    GaussianBump { matrix: Vec<f64>, center: Vec<f64>, width: f64 },
}

impl FieldSpec {
    pub fn build(&self, m: usize, n: usize) -> Result<Box<dyn VectorField>> {
        Ok(match self {
            FieldSpec::Zero => Box::new(Constant::zero(m, n)),
            FieldSpec::Constant { value } => Box::new(Constant::new(m, (m, n), value.clone())?),
            FieldSpec::Componentwise { profile, matrix } => {
                let a = matrix.clone().unwrap_or_else(|| vec![1.0; m * n]);
                Box::new(Componentwise::new(*profile, m, n, a)?)
            }
            FieldSpec::Linear { matrix } => Box::new(Linear::new(m, (m, n), matrix.clone())?),
            FieldSpec::GaussianBump { matrix, center, width } => {
                if center.len() != m {
                    return Err(Error::dimension(format!("bump center has {} entries, expected {m}", center.len())));
                }
                Box::new(GaussianBump::new((m, n), matrix.clone(), center.clone(), *width)?)
            }
        })
    }
}

/// Maximum relative discrepancy between central differences and the analytic
/// derivatives, for the three levels `f→Df`, `Df→D²f`, `D²f→D³f`.
pub fn derivative_check(f: &dyn VectorField, points: &[Vec<f64>], h: f64) -> [f64; 3] {
    let m = f.input_dim();
    let p = f.output_dim();
    let mut worst = [0.0f64; 3];
    type Eval<'a> = Box<dyn Fn(&[f64], &mut [f64]) + 'a>;
    let levels: [(Eval, Eval, usize); 3] = [
        (Box::new(|y, o| f.eval(y, o)), Box::new(|y, o| f.d1(y, o)), p),
        (Box::new(|y, o| f.d1(y, o)), Box::new(|y, o| f.d2(y, o)), p * m),
        (Box::new(|y, o| f.d2(y, o)), Box::new(|y, o| f.d3(y, o)), p * m * m),
    ];
    for y in points {
        for (level, (lower, upper, len)) in levels.iter().enumerate() {
            let mut exact = vec![0.0; len * m];
            upper(y, &mut exact);
            let (mut plus, mut minus) = (vec![0.0; *len], vec![0.0; *len]);
            for l in 0..m {
                let mut yp = y.clone();
                let mut ym = y.clone();
                yp[l] += h;
                ym[l] -= h;
                lower(&yp, &mut plus);
                lower(&ym, &mut minus);
                for q in 0..*len {
                    let fd = (plus[q] - minus[q]) / (2.0 * h);
                    let an = exact[q * m + l];
                    worst[level] = worst[level].max((fd - an).abs() / an.abs().max(1.0));
                }
            }
        }
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn points(m: usize, count: usize, seed: u64) -> Vec<Vec<f64>> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..count).map(|_| (0..m).map(|_| rng.gen_range(-3.0..3.0)).collect()).collect()
    }

    fn assert_consistent(f: &dyn VectorField) {
        let worst = derivative_check(f, &points(f.input_dim(), 100, 17), 1e-5);
        for (level, w) in worst.iter().enumerate() {
            assert!(*w < 1e-6, "{} level {level}: {w:e}", f.name());
        }
    }

    #[test]
    fn builtins_pass_finite_difference_checks() {
        for profile in [Profile::Sin, Profile::Cos, Profile::Tanh, Profile::Saturation] {
            assert_consistent(&Componentwise::new(profile, 2, 3, vec![1.0, -0.5, 2.0, 0.3, 1.5, -1.0]).unwrap());
        }
        assert_consistent(&GaussianBump::new((2, 2), vec![1.0, 0.5, -0.2, 2.0], vec![0.3, -0.1], 1.3).unwrap());
        assert_consistent(&Linear::new(2, (2, 1), vec![1.0, 2.0, -3.0, 0.5]).unwrap());
        assert_consistent(&Identity::new(3));
        assert_consistent(&Constant::new(1, (1, 2), vec![1.0, 2.0]).unwrap());
    }

    #[test]
    fn profile_bounds_hold_on_a_scan() {
        for profile in [Profile::Sin, Profile::Cos, Profile::Tanh, Profile::Saturation] {
            let sup = profile.sup_jet();
            for k in -4000..=4000 {
                let jet = profile.jet(k as f64 * 1e-3);
                for (v, s) in jet.iter().zip(&sup) {
                    assert!(v.abs() <= s + 1e-12, "{profile:?}");
                }
            }
        }
    }

    #[test]
    fn spec_builds_with_dimension_checks() {
        let f = FieldSpec::Componentwise { profile: Profile::Sin, matrix: None }.build(1, 1).unwrap();
        let mut out = [0.0];
        f.eval(&[std::f64::consts::FRAC_PI_2], &mut out);
        assert_eq!(out[0], 1.0);
        assert!(FieldSpec::Constant { value: vec![1.0] }.build(2, 1).is_err());
        assert!(FieldSpec::Linear { matrix: vec![1.0; 3] }.build(2, 1).is_err());
        let zero = FieldSpec::Zero.build(2, 3).unwrap();
        assert_eq!(zero.output_shape(), (2, 3));
        assert_eq!(zero.name(), "zero");
        assert!(Linear::new(1, (1, 1), vec![2.0]).unwrap().bounds().is_none());
    }
}
