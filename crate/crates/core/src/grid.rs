//! Sampled paths on uniform grids and two-parameter fields on the grid simplex.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest grid for which a [`Level2Field`] may be stored densely.
pub const DENSE_LIMIT: usize = 4096;

/// Euclidean (Frobenius for matrices) norm of a flattened vector.
#[inline]
pub fn euclid(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Values of an `R^d`-valued path at `t_i = i·T/N`, `i = 0..=N`, row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampledPath {
    horizon: f64,
    dim: usize,
    values: Vec<f64>,
}

impl SampledPath {
    pub fn new(horizon: f64, dim: usize, values: Vec<f64>) -> Result<Self> {
        if !(horizon.is_finite() && horizon > 0.0) {
            return Err(Error::domain(format!("horizon must be positive, got {horizon}")));
        }
        if dim == 0 {
            return Err(Error::dimension("path dimension must be at least 1"));
        }
        if values.len() % dim != 0 || values.len() / dim < 2 {
            return Err(Error::dimension(format!(
                "{} values do not form at least two points of dimension {dim}",
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::domain("path values must be finite"));
        }
        Ok(Self { horizon, dim, values })
    }

    /// Scalar path from its values.
    pub fn scalar(horizon: f64, values: Vec<f64>) -> Result<Self> {
        Self::new(horizon, 1, values)
    }

    /// Samples `g(t_i)` of a function `R -> R^dim` on `n_steps` intervals.
    pub fn from_fn(horizon: f64, n_steps: usize, dim: usize, g: impl Fn(f64, &mut [f64])) -> Result<Self> {
        let mut values = vec![0.0; (n_steps + 1) * dim];
        let dt = horizon / n_steps as f64;
        for (i, chunk) in values.chunks_exact_mut(dim).enumerate() {
            g(i as f64 * dt, chunk);
        }
        Self::new(horizon, dim, values)
    }

    /// The constant path equal to `point`.
    pub fn constant(horizon: f64, n_steps: usize, point: &[f64]) -> Result<Self> {
        Self::from_fn(horizon, n_steps, point.len(), |_, out| out.copy_from_slice(point))
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Number of grid intervals `N`.
    pub fn n_steps(&self) -> usize {
        self.values.len() / self.dim - 1
    }

    pub fn n_points(&self) -> usize {
        self.values.len() / self.dim
    }

    pub fn dt(&self) -> f64 {
        self.horizon / self.n_steps() as f64
    }

    pub fn time(&self, i: usize) -> f64 {
        i as f64 * self.dt()
    }

    #[inline]
    pub fn point(&self, i: usize) -> &[f64] {
        &self.values[i * self.dim..(i + 1) * self.dim]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn points(&self) -> impl Iterator<Item = &[f64]> {
        self.values.chunks_exact(self.dim)
    }

    /// `X_j - X_i` written into `out`.
    #[inline]
    pub fn increment_into(&self, i: usize, j: usize, out: &mut [f64]) {
        let (a, b) = (self.point(i), self.point(j));
        for ((o, x), y) in out.iter_mut().zip(a).zip(b) {
            *o = y - x;
        }
    }

    pub fn increment(&self, i: usize, j: usize) -> Vec<f64> {
        let mut out = vec![0.0; self.dim];
        self.increment_into(i, j, &mut out);
        out
    }

    /// `|X_j - X_i|`.
    #[inline]
    pub fn increment_norm(&self, i: usize, j: usize) -> f64 {
        self.point(i)
            .iter()
            .zip(self.point(j))
            .map(|(x, y)| (y - x) * (y - x))
            .sum::<f64>()
            .sqrt()
    }

    /// `max_i |X_i|`.
    pub fn sup_norm(&self) -> f64 {
        self.points().map(euclid).fold(0.0, f64::max)
    }

    pub fn is_dyadic(&self) -> bool {
        self.n_steps().is_power_of_two()
    }

    /// `log2 N`, or an error when `N` is not a power of two.
    pub fn dyadic_depth(&self) -> Result<u32> {
        dyadic_depth(self.n_steps())
    }

    pub fn same_grid(&self, other: &SampledPath) -> bool {
        self.n_steps() == other.n_steps() && (self.horizon - other.horizon).abs() <= 1e-12 * self.horizon
    }

    pub fn map_values(&self, mut g: impl FnMut(f64) -> f64) -> SampledPath {
        SampledPath { horizon: self.horizon, dim: self.dim, values: self.values.iter().map(|&v| g(v)).collect() }
    }

    /// `c·X`.
    pub fn scaled(&self, c: f64) -> SampledPath {
        self.map_values(|v| c * v)
    }

    /// `X + v` for a constant vector `v`.
    pub fn shifted(&self, v: &[f64]) -> Result<SampledPath> {
        if v.len() != self.dim {
            return Err(Error::dimension(format!("shift has dimension {}, path has {}", v.len(), self.dim)));
        }
        let mut out = self.clone();
        for chunk in out.values.chunks_exact_mut(self.dim) {
            for (x, s) in chunk.iter_mut().zip(v) {
                *x += s;
            }
        }
        Ok(out)
    }

    /// Sub-path on the grid indices `start..=end`, re-based to start at time 0.
    pub fn window(&self, start: usize, end: usize) -> Result<SampledPath> {
        if start >= end || end > self.n_steps() {
            return Err(Error::domain(format!("invalid window {start}..={end} of {} steps", self.n_steps())));
        }
        Ok(SampledPath {
            horizon: self.dt() * (end - start) as f64,
            dim: self.dim,
            values: self.values[start * self.dim..(end + 1) * self.dim].to_vec(),
        })
    }

    /// Every `factor`-th point; `factor` must divide `N`.
    pub fn decimate(&self, factor: usize) -> Result<SampledPath> {
        if factor == 0 || self.n_steps() % factor != 0 {
            return Err(Error::domain(format!("cannot decimate {} steps by {factor}", self.n_steps())));
        }
        let values = self.points().step_by(factor).flatten().copied().collect();
        SampledPath::new(self.horizon, self.dim, values)
    }

    pub fn sup_distance(&self, other: &SampledPath) -> Result<f64> {
        if !self.same_grid(other) || self.dim != other.dim {
            return Err(Error::GridMismatch("paths live on different grids".into()));
        }
        Ok(self
            .points()
            .zip(other.points())
            .map(|(a, b)| a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt())
            .fold(0.0, f64::max))
    }

    /// Content hash of the grid and values, used to tie controlled paths to their driver.
    pub fn fingerprint(&self) -> u64 {
        use std::hash::{Hash, Hasher};
        let mut h = std::collections::hash_map::DefaultHasher::new();
        self.horizon.to_bits().hash(&mut h);
        self.dim.hash(&mut h);
        for v in &self.values {
            v.to_bits().hash(&mut h);
        }
        h.finish()
    }
}

pub(crate) fn dyadic_depth(n_steps: usize) -> Result<u32> {
    if n_steps.is_power_of_two() {
        Ok(n_steps.trailing_zeros())
    } else {
        Err(Error::NotDyadic { n_steps })
    }
}

/// Generator evaluating `Ξ_{i,j}` into the output slice.
pub type FieldFn = dyn Fn(usize, usize, &mut [f64]) + Send + Sync;

#[derive(Clone)]
enum Storage {
    /// Packed upper triangle, row `i` holds `j = i..=N`.
    Dense(Arc<[f64]>),
    Implicit(Arc<FieldFn>),
}

/// A field `Ξ_{i,j} ∈ R^m` on grid pairs `0 <= i <= j <= N`.
#[derive(Clone)]
pub struct Level2Field {
    horizon: f64,
    n_steps: usize,
    dim: usize,
    storage: Storage,
}

impl fmt::Debug for Level2Field {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Level2Field")
            .field("horizon", &self.horizon)
            .field("n_steps", &self.n_steps)
            .field("dim", &self.dim)
            .field("dense", &self.is_dense())
            .finish()
    }
}

#[inline]
fn packed_index(n_steps: usize, i: usize, j: usize) -> usize {
    // rows r < i contribute N + 1 - r entries each
    i * (2 * n_steps + 3 - i) / 2 + (j - i)
}

impl Level2Field {
    /// Field evaluated on demand by `generator`.
    pub fn implicit(
        horizon: f64,
        n_steps: usize,
        dim: usize,
        generator: impl Fn(usize, usize, &mut [f64]) + Send + Sync + 'static,
    ) -> Self {
        Level2Field { horizon, n_steps, dim, storage: Storage::Implicit(Arc::new(generator)) }
    }

    /// Dense table filled row by row; `fill_row(i, row)` writes `Ξ_{i,j}` for `j = i..=N`
    /// into consecutive chunks of `row`.
    pub fn dense_from_rows(
        horizon: f64,
        n_steps: usize,
        dim: usize,
        fill_row: impl Fn(usize, &mut [f64]) + Sync,
    ) -> Result<Self> {
        if n_steps > DENSE_LIMIT {
            return Err(Error::DenseLimit { n_steps, limit: DENSE_LIMIT });
        }
        let total = packed_index(n_steps, n_steps, n_steps) + 1;
        let mut data = vec![0.0; total * dim];
        let mut rest = data.as_mut_slice();
        let mut rows = Vec::with_capacity(n_steps + 1);
        for i in 0..=n_steps {
            let (row, tail) = rest.split_at_mut((n_steps + 1 - i) * dim);
            rows.push((i, row));
            rest = tail;
        }
        use rayon::prelude::*;
        rows.into_par_iter().for_each(|(i, row)| fill_row(i, row));
        Ok(Level2Field { horizon, n_steps, dim, storage: Storage::Dense(data.into()) })
    }

    /// Dense copy of `generator` on every grid pair.
    pub fn dense_from_fn(
        horizon: f64,
        n_steps: usize,
        dim: usize,
        generator: impl Fn(usize, usize, &mut [f64]) + Sync,
    ) -> Result<Self> {
        Self::dense_from_rows(horizon, n_steps, dim, |i, row| {
            for (k, chunk) in row.chunks_exact_mut(dim).enumerate() {
                generator(i, i + k, chunk);
            }
        })
    }

    /// `δf_{i,j} = f_j - f_i`.
    pub fn increments_of(path: &SampledPath) -> Self {
        let p = path.clone();
        Self::implicit(path.horizon(), path.n_steps(), path.dim(), move |i, j, out| p.increment_into(i, j, out))
    }

    /// The zero field.
    pub fn zeros(horizon: f64, n_steps: usize, dim: usize) -> Self {
        Self::implicit(horizon, n_steps, dim, |_, _, out| out.fill(0.0))
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn n_steps(&self) -> usize {
        self.n_steps
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn dt(&self) -> f64 {
        self.horizon / self.n_steps as f64
    }

    pub fn is_dense(&self) -> bool {
        matches!(self.storage, Storage::Dense(_))
    }

    /// Writes `Ξ_{i,j}` into `out` (`i <= j <= N`).
    #[inline]
    pub fn eval_into(&self, i: usize, j: usize, out: &mut [f64]) {
        debug_assert!(i <= j && j <= self.n_steps);
        match &self.storage {
            Storage::Dense(data) => {
                let at = packed_index(self.n_steps, i, j) * self.dim;
                out.copy_from_slice(&data[at..at + self.dim]);
            }
            Storage::Implicit(g) => g(i, j, out),
        }
    }

    pub fn get(&self, i: usize, j: usize) -> Vec<f64> {
        let mut out = vec![0.0; self.dim];
        self.eval_into(i, j, &mut out);
        out
    }

    /// `|Ξ_{i,j}|`.
    #[inline]
    pub fn magnitude(&self, i: usize, j: usize) -> f64 {
        if self.dim <= 16 {
            let mut buf = [0.0; 16];
            self.eval_into(i, j, &mut buf[..self.dim]);
            euclid(&buf[..self.dim])
        } else {
            euclid(&self.get(i, j))
        }
    }

    /// Dense copy of an implicit field (no-op clone for dense ones).
    pub fn densify(&self) -> Result<Self> {
        if self.is_dense() {
            return Ok(self.clone());
        }
        Self::dense_from_fn(self.horizon, self.n_steps, self.dim, |i, j, out| self.eval_into(i, j, out))
    }

    /// Restriction to the grid indices `start..=end`, re-indexed from 0.
    pub fn window(&self, start: usize, end: usize) -> Result<Self> {
        if start >= end || end > self.n_steps {
            return Err(Error::domain(format!("invalid window {start}..={end} of {} steps", self.n_steps)));
        }
        let inner = self.clone();
        Ok(Self::implicit(self.dt() * (end - start) as f64, end - start, self.dim, move |i, j, out| {
            inner.eval_into(i + start, j + start, out)
        }))
    }

    /// `a·Ξ + b·Ξ'` evaluated on demand.
    pub fn linear_combination(a: f64, xi: &Level2Field, b: f64, other: &Level2Field) -> Result<Self> {
        if xi.n_steps != other.n_steps || xi.dim != other.dim {
            return Err(Error::GridMismatch("fields live on different grids".into()));
        }
        let (x, y) = (xi.clone(), other.clone());
        let dim = xi.dim;
        Ok(Self::implicit(xi.horizon, xi.n_steps, dim, move |i, j, out| {
            let mut stack = [0.0; 16];
            let mut heap = Vec::new();
            let tmp = if dim <= 16 {
                &mut stack[..dim]
            } else {
                heap.resize(dim, 0.0);
                heap.as_mut_slice()
            };
            x.eval_into(i, j, out);
            y.eval_into(i, j, tmp);
            for (o, t) in out.iter_mut().zip(tmp.iter()) {
                *o = a * *o + b * t;
            }
        }))
    }

    /// Writes the field as `i,j,e1,...,em` rows (debug format, small grids only).
    pub fn write_csv<W: std::io::Write>(&self, mut w: W) -> Result<()> {
        write!(w, "i,j")?;
        for k in 1..=self.dim {
            write!(w, ",e{k}")?;
        }
        writeln!(w)?;
        let mut buf = vec![0.0; self.dim];
        for i in 0..=self.n_steps {
            for j in i..=self.n_steps {
                self.eval_into(i, j, &mut buf);
                write!(w, "{i},{j}")?;
                for v in &buf {
                    write!(w, ",{v:.16e}")?;
                }
                writeln!(w)?;
            }
        }
        Ok(())
    }
}

/// Something with a two-parameter magnitude `|Ξ_{i,j}|` on a uniform grid.
pub trait TwoParameter: Sync {
    fn horizon(&self) -> f64;
    fn n_steps(&self) -> usize;
    fn magnitude(&self, i: usize, j: usize) -> f64;

    fn dt(&self) -> f64 {
        self.horizon() / self.n_steps() as f64
    }
}

/// Something with a three-parameter magnitude `|Ξ_{i,u,j}|`, `i <= u <= j`.
pub trait ThreeParameter: Sync {
    fn horizon(&self) -> f64;
    fn n_steps(&self) -> usize;
    fn magnitude(&self, i: usize, u: usize, j: usize) -> f64;

    fn dt(&self) -> f64 {
        self.horizon() / self.n_steps() as f64
    }
}

impl TwoParameter for SampledPath {
    fn horizon(&self) -> f64 {
        self.horizon
    }

    fn n_steps(&self) -> usize {
        SampledPath::n_steps(self)
    }

    #[inline]
    fn magnitude(&self, i: usize, j: usize) -> f64 {
        self.increment_norm(i, j)
    }
}

impl TwoParameter for Level2Field {
    fn horizon(&self) -> f64 {
        self.horizon
    }

    fn n_steps(&self) -> usize {
        self.n_steps
    }

    #[inline]
    fn magnitude(&self, i: usize, j: usize) -> f64 {
        Level2Field::magnitude(self, i, j)
    }
}

/// `δΞ_{s,u,t} = Ξ_{s,t} - Ξ_{s,u} - Ξ_{u,t}` evaluated on demand.
#[derive(Debug, Clone)]
pub struct Delta3 {
    field: Level2Field,
}

impl Delta3 {
    pub fn new(field: &Level2Field) -> Self {
        Delta3 { field: field.clone() }
    }

    pub fn dim(&self) -> usize {
        self.field.dim
    }

    pub fn eval_into(&self, i: usize, u: usize, j: usize, out: &mut [f64]) {
        let mut a = vec![0.0; self.field.dim];
        let mut b = vec![0.0; self.field.dim];
        self.field.eval_into(i, j, out);
        self.field.eval_into(i, u, &mut a);
        self.field.eval_into(u, j, &mut b);
        for ((o, x), y) in out.iter_mut().zip(&a).zip(&b) {
            *o -= x + y;
        }
    }

    pub fn get(&self, i: usize, u: usize, j: usize) -> Vec<f64> {
        let mut out = vec![0.0; self.field.dim];
        self.eval_into(i, u, j, &mut out);
        out
    }
}

impl ThreeParameter for Delta3 {
    fn horizon(&self) -> f64 {
        self.field.horizon
    }

    fn n_steps(&self) -> usize {
        self.field.n_steps
    }

    fn magnitude(&self, i: usize, u: usize, j: usize) -> f64 {
        euclid(&self.get(i, u, j))
    }
}

/// `δΞ` as an on-demand generator over grid triples.
pub fn delta3(xi: &Level2Field) -> Delta3 {
    Delta3::new(xi)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn packed_index_is_contiguous() {
        let n = 7;
        let mut expected = 0;
        for i in 0..=n {
            for j in i..=n {
                assert_eq!(packed_index(n, i, j), expected);
                expected += 1;
            }
        }
    }

    #[test]
    fn dense_matches_generator() {
        let g = |i: usize, j: usize, out: &mut [f64]| {
            out[0] = i as f64;
            out[1] = (j * j) as f64;
        };
        let dense = Level2Field::dense_from_fn(1.0, 9, 2, g).unwrap();
        let implicit = Level2Field::implicit(1.0, 9, 2, g);
        for i in 0..=9 {
            for j in i..=9 {
                assert_eq!(dense.get(i, j), implicit.get(i, j));
            }
        }
        assert!(Level2Field::dense_from_fn(1.0, DENSE_LIMIT + 1, 1, g).is_err());
    }

    #[test]
    fn path_validation_and_windows() {
        assert!(SampledPath::scalar(1.0, vec![0.0]).is_err());
        assert!(SampledPath::scalar(0.0, vec![0.0, 1.0]).is_err());
        assert!(SampledPath::new(1.0, 2, vec![0.0, 1.0, 2.0]).is_err());
        assert!(SampledPath::scalar(1.0, vec![0.0, f64::NAN]).is_err());

        let p = SampledPath::from_fn(1.0, 8, 1, |t, o| o[0] = t).unwrap();
        let w = p.window(2, 6).unwrap();
        assert_eq!(w.n_steps(), 4);
        assert!((w.horizon() - 0.5).abs() < 1e-15);
        assert_eq!(w.point(0), &[0.25]);
        let d = p.decimate(4).unwrap();
        assert_eq!(d.values(), &[0.0, 0.5, 1.0]);
        assert!(p.decimate(3).is_err());
        assert!(matches!(SampledPath::scalar(1.0, vec![0.0; 4]).unwrap().dyadic_depth(), Err(Error::NotDyadic { n_steps: 3 })));
    }

    #[test]
    fn delta_of_increments_vanishes() {
        let p = SampledPath::from_fn(1.0, 16, 2, |t, o| {
            o[0] = (5.0 * t).sin();
            o[1] = t * t;
        })
        .unwrap();
        let d = delta3(&Level2Field::increments_of(&p));
        for i in 0..=16 {
            for u in i..=16 {
                for j in u..=16 {
                    assert!(d.magnitude(i, u, j) < 1e-15);
                }
            }
        }
    }
}
