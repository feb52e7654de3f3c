//! Level-2 rough path lifts of sampled paths and Chen's relations.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::besov::{seminorm_dyadic, RegularityParams};
use crate::error::{Error, Result};
use crate::grid::{Level2Field, SampledPath, DENSE_LIMIT};
use crate::tensor::TensorLevel2;

/// Grids up to this size get an exhaustive Chen check.
pub const CHEN_EXHAUSTIVE_LIMIT: usize = 1 << 8;
/// Number of random triples checked on larger grids.
pub const CHEN_RANDOM_TRIPLES: usize = 100_000;
const CHEN_REL_TOL: f64 = 1e-12;
const CHEN_SEED: u64 = 0x5eed_c4e2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LiftKind {
    StratonovichScalar,
    ItoScalar,
    LeftpointMd,
    Custom,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScalarLift {
    Stratonovich,
    Ito,
}

/// Outcome of a Chen relation check.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChenReport {
    pub max_defect: f64,
    pub bound: f64,
    pub triples_checked: usize,
    pub exhaustive: bool,
}

impl ChenReport {
    pub fn passed(&self) -> bool {
        self.max_defect <= self.bound
    }
}

/// A path `X` in `Rⁿ` with its second level `𝕏` (values in `R^{n×n}`, row-major).
#[derive(Debug, Clone)]
pub struct RoughPath {
    x: SampledPath,
    xx: Level2Field,
    kind: LiftKind,
    chen: ChenReport,
}

impl RoughPath {
    /// Pairs a path with a user-supplied second level; Chen's relations are checked.
    pub fn new(x: SampledPath, xx: Level2Field) -> Result<Self> {
        Self::checked(x, xx, LiftKind::Custom)
    }

    fn checked(x: SampledPath, xx: Level2Field, kind: LiftKind) -> Result<Self> {
        let n = x.dim();
        if xx.dim() != n * n {
            return Err(Error::dimension(format!("second level has dimension {}, expected {}", xx.dim(), n * n)));
        }
        if xx.n_steps() != x.n_steps() || xx.horizon() != x.horizon() {
            return Err(Error::GridMismatch("path and second level live on different grids".into()));
        }
        let chen = chen_check(&x, &xx);
        if !chen.passed() {
            return Err(Error::ChenDefect { defect: chen.max_defect, bound: chen.bound });
        }
        Ok(RoughPath { x, xx, kind, chen })
    }

    pub fn path(&self) -> &SampledPath {
        &self.x
    }

    pub fn second_level(&self) -> &Level2Field {
        &self.xx
    }

    pub fn kind(&self) -> LiftKind {
        self.kind
    }

    pub fn chen_report(&self) -> ChenReport {
        self.chen
    }

    pub fn dim(&self) -> usize {
        self.x.dim()
    }

    pub fn n_steps(&self) -> usize {
        self.x.n_steps()
    }

    pub fn horizon(&self) -> f64 {
        self.x.horizon()
    }

    /// The group element `𝐗_{s,t} = (1, δX_{s,t}, 𝕏_{s,t})`.
    pub fn increment(&self, i: usize, j: usize) -> TensorLevel2 {
        TensorLevel2::new(self.x.increment(i, j), self.xx.get(i, j)).expect("dimensions fixed at construction")
    }

    /// `δ_λ𝐗 = (λX, λ²𝕏)`.
    pub fn dilate(&self, lambda: f64) -> RoughPath {
        let xx = self.xx.clone();
        let l2 = lambda * lambda;
        let scaled = Level2Field::implicit(self.horizon(), self.n_steps(), self.xx.dim(), move |i, j, out| {
            xx.eval_into(i, j, out);
            out.iter_mut().for_each(|v| *v *= l2);
        });
        RoughPath { x: self.x.scaled(lambda), xx: scaled, kind: self.kind, chen: self.chen }
    }

    /// Restriction to grid indices `start..=end`, re-indexed from 0.
    pub fn window(&self, start: usize, end: usize) -> Result<RoughPath> {
        Ok(RoughPath {
            x: self.x.window(start, end)?,
            xx: self.xx.window(start, end)?,
            kind: self.kind,
            chen: self.chen,
        })
    }
}

/// Max Chen defect `|δ𝕏_{s,u,t} − δX_{s,u} δX_{u,t}ᵀ|` over all grid triples for
/// small grids, otherwise over a fixed pseudo-random sample of triples.
pub fn chen_check(x: &SampledPath, xx: &Level2Field) -> ChenReport {
    let n_steps = x.n_steps();
    let sup = x.sup_norm();
    let bound = CHEN_REL_TOL * (1.0 + sup * sup);
    let defect = |i: usize, u: usize, j: usize, buf: &mut Buf| -> f64 {
        let n = x.dim();
        xx.eval_into(i, j, &mut buf.st);
        xx.eval_into(i, u, &mut buf.su);
        xx.eval_into(u, j, &mut buf.ut);
        x.increment_into(i, u, &mut buf.a);
        x.increment_into(u, j, &mut buf.b);
        let mut sq = 0.0;
        for r in 0..n {
            for c in 0..n {
                let k = r * n + c;
                let d = buf.st[k] - buf.su[k] - buf.ut[k] - buf.a[r] * buf.b[c];
                sq += d * d;
            }
        }
        sq.sqrt()
    };
    let new_buf = || Buf::new(x.dim());
    if n_steps <= CHEN_EXHAUSTIVE_LIMIT {
        let max_defect = (0..=n_steps)
            .into_par_iter()
            .map_init(new_buf, |buf, i| {
                let mut m: f64 = 0.0;
                for u in i..=n_steps {
                    for j in u..=n_steps {
                        m = m.max(defect(i, u, j, buf));
                    }
                }
                m
            })
            .reduce(|| 0.0, f64::max);
        let count = (n_steps + 1) * (n_steps + 2) * (n_steps + 3) / 6;
        ChenReport { max_defect, bound, triples_checked: count, exhaustive: true }
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(CHEN_SEED);
        let triples: Vec<[usize; 3]> = (0..CHEN_RANDOM_TRIPLES)
            .map(|_| {
                let mut t = [rng.gen_range(0..=n_steps), rng.gen_range(0..=n_steps), rng.gen_range(0..=n_steps)];
                t.sort_unstable();
                t
            })
            .collect();
        let max_defect = triples
            .par_iter()
            .map_init(new_buf, |buf, &[i, u, j]| defect(i, u, j, buf))
            .reduce(|| 0.0, f64::max);
        ChenReport { max_defect, bound, triples_checked: CHEN_RANDOM_TRIPLES, exhaustive: false }
    }
}

struct Buf {
    st: Vec<f64>,
    su: Vec<f64>,
    ut: Vec<f64>,
    a: Vec<f64>,
    b: Vec<f64>,
}

impl Buf {
    fn new(n: usize) -> Self {
        Buf { st: vec![0.0; n * n], su: vec![0.0; n * n], ut: vec![0.0; n * n], a: vec![0.0; n], b: vec![0.0; n] }
    }
}

/// Running grid quadratic variation `⟨X⟩_{t_j} = Σ_{k<j} (δX_{k,k+1})²` of a scalar path.
pub fn quadratic_variation(x: &SampledPath) -> Vec<f64> {
    let v = x.values();
    let mut q = Vec::with_capacity(v.len());
    let mut acc = 0.0;
    q.push(0.0);
    for w in v.windows(2) {
        let d = w[1] - w[0];
        acc += d * d;
        q.push(acc);
    }
    q
}

/// Scalar lift `𝕏_{s,t} = (δX_{s,t})²/2`, minus `δ⟨X⟩_{s,t}/2` in the Itô case.
pub fn lift_scalar(x: &SampledPath, mode: ScalarLift) -> Result<RoughPath> {
    if x.dim() != 1 {
        return Err(Error::dimension(format!(
            "scalar lift needs a one-dimensional path, got dimension {}; use lift_md_leftpoint",
            x.dim()
        )));
    }
    let values: Arc<[f64]> = x.values().into();
    let (field, kind) = match mode {
        ScalarLift::Stratonovich => {
            let v = values.clone();
            let f = Level2Field::implicit(x.horizon(), x.n_steps(), 1, move |i, j, out| {
                let d = v[j] - v[i];
                out[0] = 0.5 * d * d;
            });
            (f, LiftKind::StratonovichScalar)
        }
        ScalarLift::Ito => {
            let qv: Arc<[f64]> = quadratic_variation(x).into();
            let v = values.clone();
            let f = Level2Field::implicit(x.horizon(), x.n_steps(), 1, move |i, j, out| {
                let d = v[j] - v[i];
                out[0] = 0.5 * d * d - 0.5 * (qv[j] - qv[i]);
            });
            (f, LiftKind::ItoScalar)
        }
    };
    RoughPath::checked(x.clone(), field, kind)
}

/// Left-point iterated sums `𝕏_{i,j} = Σ_{k=i}^{j-1} δX_{i,k} δX_{k,k+1}ᵀ`.
///
/// Stored densely up to [`DENSE_LIMIT`] steps. Larger grids use the prefix sums
/// `P_j = Σ_{k<j} X_k δX_{k,k+1}ᵀ`, with `𝕏_{i,j} = P_j − P_i − X_i δX_{i,j}ᵀ`.
pub fn lift_md_leftpoint(x: &SampledPath) -> Result<RoughPath> {
    let field = if x.n_steps() <= DENSE_LIMIT { leftpoint_dense(x)? } else { leftpoint_implicit(x) };
    RoughPath::checked(x.clone(), field, LiftKind::LeftpointMd)
}

fn leftpoint_dense(x: &SampledPath) -> Result<Level2Field> {
    let n = x.dim();
    let n_steps = x.n_steps();
    Level2Field::dense_from_rows(x.horizon(), n_steps, n * n, |i, row| {
        let xi = x.point(i);
        // row chunk 0 is 𝕏_{i,i} = 0; chunk k+1 adds δX_{i,i+k} δX_{i+k,i+k+1}ᵀ
        for k in 0..n_steps - i {
            let j = i + k;
            let (head, tail) = row.split_at_mut((k + 1) * n * n);
            let prev = &head[k * n * n..];
            let next = &mut tail[..n * n];
            let (xj, xj1) = (x.point(j), x.point(j + 1));
            for r in 0..n {
                let a = xj[r] - xi[r];
                for c in 0..n {
                    next[r * n + c] = prev[r * n + c] + a * (xj1[c] - xj[c]);
                }
            }
        }
    })
}

fn leftpoint_implicit(x: &SampledPath) -> Level2Field {
    let n = x.dim();
    let n_steps = x.n_steps();
    let mut prefix = vec![0.0; (n_steps + 1) * n * n];
    for k in 0..n_steps {
        let (xk, xk1) = (x.point(k), x.point(k + 1));
        for r in 0..n {
            for c in 0..n {
                let at = k * n * n + r * n + c;
                prefix[at + n * n] = prefix[at] + xk[r] * (xk1[c] - xk[c]);
            }
        }
    }
    let prefix: Arc<[f64]> = prefix.into();
    let path = x.clone();
    Level2Field::implicit(x.horizon(), n_steps, n * n, move |i, j, out| {
        let (xi, xj) = (path.point(i), path.point(j));
        for r in 0..n {
            for c in 0..n {
                let k = r * n + c;
                out[k] = prefix[j * n * n + k] - prefix[i * n * n + k] - xi[r] * (xj[c] - xi[c]);
            }
        }
    })
}

/// `|||𝐗||| = [X]_{α,β,q} + ‖𝕏‖^{1/2}_{2α,β/2,q/2}` from dyadic seminorms.
pub fn rough_path_norm(x: &RoughPath, params: RegularityParams) -> Result<f64> {
    let first = seminorm_dyadic(x.path(), params)?.seminorm_dyadic;
    let second = seminorm_dyadic(x.second_level(), params.second_level())?.seminorm_dyadic;
    Ok(first + second.sqrt())
}
