//! Seeded Brownian and fractional Brownian drivers, and the path CSV format.
//!
//! Every coordinate draws from its own ChaCha8 stream keyed by `(seed, coordinate)`,
//! so a path is a pure function of its [`DriverSpec`].

use std::io::{Read, Write};
use std::sync::Arc;

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::SampledPath;

/// Hurst parameters are restricted to `(1/3, 1/2]`.
pub const HURST_MIN: f64 = 1.0 / 3.0;
pub const HURST_MAX: f64 = 0.5;

/// Offset separating the Cholesky cross-check streams from the circulant ones.
const CHOLESKY_STREAM_OFFSET: u64 = 1 << 32;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Expression {
    /// `x(t) = t`
    Linear,
    /// `x(t) = t^2`
    Quadratic,
    /// `x(t) = sin(2πt)`
    Sine,
}

impl Expression {
    pub fn eval(self, t: f64) -> f64 {
        match self {
            Expression::Linear => t,
            Expression::Quadratic => t * t,
            Expression::Sine => (2.0 * std::f64::consts::PI * t).sin(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DriverKind {
    Brownian,
    Fbm { hurst: f64 },
    Deterministic { expression: Expression },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DriverSpec {
    #[serde(flatten)]
    pub kind: DriverKind,
    pub dimension: usize,
    pub horizon: f64,
    pub n_steps: usize,
    pub seed: u64,
}

impl DriverSpec {
    pub fn brownian(dimension: usize, horizon: f64, n_steps: usize, seed: u64) -> Self {
        DriverSpec { kind: DriverKind::Brownian, dimension, horizon, n_steps, seed }
    }

    pub fn fbm(hurst: f64, dimension: usize, horizon: f64, n_steps: usize, seed: u64) -> Self {
        DriverSpec { kind: DriverKind::Fbm { hurst }, dimension, horizon, n_steps, seed }
    }

    pub fn validate(&self) -> Result<()> {
        if self.dimension == 0 {
            return Err(Error::dimension("driver dimension must be at least 1"));
        }
        if !(self.horizon.is_finite() && self.horizon > 0.0) {
            return Err(Error::domain(format!("horizon must be positive, got {}", self.horizon)));
        }
        if !self.n_steps.is_power_of_two() {
            return Err(Error::NotDyadic { n_steps: self.n_steps });
        }
        if let DriverKind::Fbm { hurst } = self.kind {
            check_hurst(hurst)?;
        }
        Ok(())
    }
}

fn check_hurst(hurst: f64) -> Result<()> {
    if hurst > HURST_MIN && hurst <= HURST_MAX {
        Ok(())
    } else {
        Err(Error::domain(format!("Hurst parameter must lie in (1/3, 1/2], got {hurst}")))
    }
}

fn coordinate_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Simulates the driver described by `spec`.
pub fn simulate(spec: &DriverSpec) -> Result<SampledPath> {
    spec.validate()?;
    match spec.kind {
        DriverKind::Brownian => simulate_bm(spec),
        DriverKind::Fbm { .. } => simulate_fbm(spec),
        DriverKind::Deterministic { expression } => {
            SampledPath::from_fn(spec.horizon, spec.n_steps, spec.dimension, |t, out| out.fill(expression.eval(t)))
        }
    }
}

/// Brownian motion started at 0 with independent coordinates.
pub fn simulate_bm(spec: &DriverSpec) -> Result<SampledPath> {
    spec.validate()?;
    if spec.kind != DriverKind::Brownian {
        return Err(Error::domain("simulate_bm needs a brownian driver spec"));
    }
    let (n, d) = (spec.n_steps, spec.dimension);
    let sd = (spec.horizon / n as f64).sqrt();
    let mut values = vec![0.0; (n + 1) * d];
    for c in 0..d {
        let mut rng = coordinate_rng(spec.seed, c as u64);
        let mut x = 0.0;
        for i in 1..=n {
            let z: f64 = StandardNormal.sample(&mut rng);
            x += sd * z;
            values[i * d + c] = x;
        }
    }
    SampledPath::new(spec.horizon, d, values)
}

/// Autocovariance of unit-step fractional Gaussian noise at lag `k`.
pub fn fgn_autocovariance(hurst: f64, k: usize) -> f64 {
    let h2 = 2.0 * hurst;
    let k = k as f64;
    0.5 * ((k + 1.0).powf(h2) - 2.0 * k.powf(h2) + (k - 1.0).abs().powf(h2))
}

/// `Cov(W^H_s, W^H_t) = (s^{2H} + t^{2H} - |t-s|^{2H})/2`.
pub fn fbm_covariance(hurst: f64, s: f64, t: f64) -> f64 {
    let h2 = 2.0 * hurst;
    0.5 * (s.powf(h2) + t.powf(h2) - (t - s).abs().powf(h2))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FbmMethod {
    Circulant,
    Cholesky,
}

enum Factor {
    Circulant { sqrt_eigs: Vec<f64>, fft: Arc<dyn Fft<f64>> },
    Cholesky(DMatrix<f64>),
}

/// Precomputed factorisation of the fractional Gaussian noise covariance,
/// reusable across seeds.
pub struct FbmSampler {
    hurst: f64,
    horizon: f64,
    n_steps: usize,
    factor: Factor,
}

impl FbmSampler {
    pub fn new(hurst: f64, horizon: f64, n_steps: usize, method: FbmMethod) -> Result<Self> {
        check_hurst(hurst)?;
        if n_steps == 0 {
            return Err(Error::domain("fBm needs at least one step"));
        }
        let factor = match method {
            FbmMethod::Circulant => {
                let m = 2 * n_steps;
                let mut row: Vec<Complex<f64>> = (0..m)
                    .map(|k| Complex::new(fgn_autocovariance(hurst, k.min(m - k)), 0.0))
                    .collect();
                let fft = FftPlanner::new().plan_fft_forward(m);
                fft.process(&mut row);
                let max = row.iter().map(|z| z.re).fold(0.0, f64::max);
                let min = row.iter().map(|z| z.re).fold(f64::INFINITY, f64::min);
                if min < -1e-10 * max {
                    return Err(Error::domain(format!(
                        "circulant embedding has a negative eigenvalue {min:e} for H = {hurst}"
                    )));
                }
                let sqrt_eigs = row.iter().map(|z| (z.re.max(0.0) / m as f64).sqrt()).collect();
                Factor::Circulant { sqrt_eigs, fft }
            }
            FbmMethod::Cholesky => {
                if n_steps > 1 << 10 {
                    return Err(Error::domain("Cholesky fBm mode is limited to 1024 steps"));
                }
                let cov = DMatrix::from_fn(n_steps, n_steps, |i, j| fgn_autocovariance(hurst, i.abs_diff(j)));
                let chol = cov
                    .cholesky()
                    .ok_or_else(|| Error::domain("fGn covariance is not positive definite"))?;
                Factor::Cholesky(chol.l())
            }
        };
        Ok(FbmSampler { hurst, horizon, n_steps, factor })
    }

    pub fn hurst(&self) -> f64 {
        self.hurst
    }

    /// Unit-step fractional Gaussian noise for one coordinate.
    fn noise(&self, seed: u64, coordinate: u64) -> Vec<f64> {
        let n = self.n_steps;
        match &self.factor {
            Factor::Circulant { sqrt_eigs, fft } => {
                let m = 2 * n;
                let mut rng = coordinate_rng(seed, coordinate);
                let mut gauss = || -> f64 { StandardNormal.sample(&mut rng) };
                let mut a = vec![Complex::new(0.0, 0.0); m];
                a[0] = Complex::new(sqrt_eigs[0] * gauss(), 0.0);
                a[n] = Complex::new(sqrt_eigs[n] * gauss(), 0.0);
                let half = std::f64::consts::FRAC_1_SQRT_2;
                for k in 1..n {
                    let (u, v) = (gauss(), gauss());
                    let z = Complex::new(u, v) * (sqrt_eigs[k] * half);
                    a[k] = z;
                    a[m - k] = z.conj();
                }
                fft.process(&mut a);
                a[..n].iter().map(|z| z.re).collect()
            }
            Factor::Cholesky(l) => {
                let mut rng = coordinate_rng(seed, coordinate + CHOLESKY_STREAM_OFFSET);
                let z = nalgebra::DVector::from_fn(n, |_, _| StandardNormal.sample(&mut rng));
                (l * z).iter().copied().collect()
            }
        }
    }

    /// A `dimension`-valued fBm path with independent coordinates, started at 0.
    pub fn sample(&self, seed: u64, dimension: usize) -> Result<SampledPath> {
        if dimension == 0 {
            return Err(Error::dimension("driver dimension must be at least 1"));
        }
        let n = self.n_steps;
        let scale = (self.horizon / n as f64).powf(self.hurst);
        let mut values = vec![0.0; (n + 1) * dimension];
        for c in 0..dimension {
            let noise = self.noise(seed, c as u64);
            let mut x = 0.0;
            for (i, g) in noise.iter().enumerate() {
                x += scale * g;
                values[(i + 1) * dimension + c] = x;
            }
        }
        SampledPath::new(self.horizon, dimension, values)
    }
}

/// Fractional Brownian motion by circulant embedding.
pub fn simulate_fbm(spec: &DriverSpec) -> Result<SampledPath> {
    simulate_fbm_with(spec, FbmMethod::Circulant)
}

pub fn simulate_fbm_with(spec: &DriverSpec, method: FbmMethod) -> Result<SampledPath> {
    spec.validate()?;
    let DriverKind::Fbm { hurst } = spec.kind else {
        return Err(Error::domain("simulate_fbm needs an fbm driver spec"));
    };
    FbmSampler::new(hurst, spec.horizon, spec.n_steps, method)?.sample(spec.seed, spec.dimension)
}

/// Writes `t,x1,...,xn` rows with 17 significant digits.
pub fn save_path<W: Write>(path: &SampledPath, mut w: W) -> Result<()> {
    write!(w, "t")?;
    for c in 1..=path.dim() {
        write!(w, ",x{c}")?;
    }
    writeln!(w)?;
    for (i, p) in path.points().enumerate() {
        write!(w, "{:.16e}", path.time(i))?;
        for v in p {
            write!(w, ",{v:.16e}")?;
        }
        writeln!(w)?;
    }
    w.flush()?;
    Ok(())
}

/// Reads the path CSV format. The time column must start at 0 and be uniform.
pub fn load_path<R: Read>(r: R) -> Result<SampledPath> {
    let mut reader = csv::ReaderBuilder::new().has_headers(true).trim(csv::Trim::All).from_reader(r);
    let headers = reader.headers().map_err(|e| Error::Format(e.to_string()))?.clone();
    if headers.len() < 2 || &headers[0] != "t" {
        return Err(Error::Format("header must be `t,x1,...,xn`".into()));
    }
    let dim = headers.len() - 1;
    let mut times = Vec::new();
    let mut values = Vec::new();
    for (row, record) in reader.records().enumerate() {
        let record = record.map_err(|e| Error::Format(format!("row {}: {e}", row + 1)))?;
        if record.len() != dim + 1 {
            return Err(Error::Format(format!("row {} has {} fields, expected {}", row + 1, record.len(), dim + 1)));
        }
        let parse = |s: &str| -> Result<f64> {
            s.parse::<f64>().map_err(|_| Error::Format(format!("row {}: cannot parse {s:?}", row + 1)))
        };
        times.push(parse(&record[0])?);
        for field in record.iter().skip(1) {
            values.push(parse(field)?);
        }
    }
    if times.len() < 2 {
        return Err(Error::Format("a path needs at least two rows".into()));
    }
    if times[0] != 0.0 {
        return Err(Error::Format(format!("time column must start at 0, found {}", times[0])));
    }
    if times.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Format("time column must be strictly increasing".into()));
    }
    let n = times.len() - 1;
    let horizon = times[n];
    let dt = horizon / n as f64;
    for (i, t) in times.iter().enumerate() {
        let deviation = (t - i as f64 * dt).abs() / horizon;
        if deviation > 1e-9 {
            return Err(Error::Format(format!(
                "non-uniform grid: t[{i}] = {t} deviates from {} by {deviation:.3e} (relative)",
                i as f64 * dt
            )));
        }
    }
    SampledPath::new(horizon, dim, values)
}
