//! The step-2 truncated tensor group `T₁⁽²⁾(Rⁿ)` of elements `(1, b, c)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::euclid;

/// An element `(1, b, c)` with `c` stored row-major as an `n×n` matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TensorLevel2 {
    b: Vec<f64>,
    c: Vec<f64>,
}

impl TensorLevel2 {
    pub fn new(b: Vec<f64>, c: Vec<f64>) -> Result<Self> {
        if c.len() != b.len() * b.len() {
            return Err(Error::dimension(format!(
                "level-2 part has {} entries, expected {}",
                c.len(),
                b.len() * b.len()
            )));
        }
        Ok(TensorLevel2 { b, c })
    }

    pub fn identity(n: usize) -> Self {
        TensorLevel2 { b: vec![0.0; n], c: vec![0.0; n * n] }
    }

    pub fn dim(&self) -> usize {
        self.b.len()
    }

    pub fn scalar_part(&self) -> f64 {
        1.0
    }

    pub fn b(&self) -> &[f64] {
        &self.b
    }

    pub fn c(&self) -> &[f64] {
        &self.c
    }

    fn check(&self, other: &Self) -> Result<()> {
        if self.dim() != other.dim() {
            return Err(Error::dimension(format!("tensor dimensions {} and {} differ", self.dim(), other.dim())));
        }
        Ok(())
    }

    /// `(1,b,c)⊗(1,b̃,c̃) = (1, b+b̃, c+c̃+b b̃ᵀ)`.
    pub fn mul(&self, other: &Self) -> Result<Self> {
        self.check(other)?;
        let n = self.dim();
        let b = self.b.iter().zip(&other.b).map(|(x, y)| x + y).collect();
        let mut c = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                c[i * n + j] = self.c[i * n + j] + other.c[i * n + j] + self.b[i] * other.b[j];
            }
        }
        Ok(TensorLevel2 { b, c })
    }

    /// `(1,b,c)⁻¹ = (1, −b, −c + b bᵀ)`.
    pub fn inv(&self) -> Self {
        let n = self.dim();
        let b: Vec<f64> = self.b.iter().map(|x| -x).collect();
        let mut c = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                c[i * n + j] = -self.c[i * n + j] + self.b[i] * self.b[j];
            }
        }
        TensorLevel2 { b, c }
    }

    /// `δ_λ(1,b,c) = (1, λb, λ²c)`.
    pub fn dilate(&self, lambda: f64) -> Self {
        TensorLevel2 {
            b: self.b.iter().map(|x| lambda * x).collect(),
            c: self.c.iter().map(|x| lambda * lambda * x).collect(),
        }
    }

    /// `N(1,b,c) = max{|b|, √(2|c|)}` with Hilbert-Schmidt `|c|`.
    pub fn homogeneous_norm(&self) -> f64 {
        euclid(&self.b).max((2.0 * euclid(&self.c)).sqrt())
    }

    /// `|||a||| = (N(a) + N(a⁻¹))/2`.
    pub fn symmetric_norm(&self) -> f64 {
        0.5 * (self.homogeneous_norm() + self.inv().homogeneous_norm())
    }
}

pub fn tensor_mul(a: &TensorLevel2, b: &TensorLevel2) -> Result<TensorLevel2> {
    a.mul(b)
}

pub fn tensor_inv(a: &TensorLevel2) -> TensorLevel2 {
    a.inv()
}

pub fn homogeneous_norm(a: &TensorLevel2) -> f64 {
    a.homogeneous_norm()
}

/// `a⁻¹ ⊗ b = (1, b̃ − b, c̃ − c − b(b̃ − b)ᵀ)`, expanded so that `a⁻¹ ⊗ a` is exactly the identity.
pub fn relative_increment(a: &TensorLevel2, b: &TensorLevel2) -> Result<TensorLevel2> {
    a.check(b)?;
    let n = a.dim();
    let db: Vec<f64> = b.b.iter().zip(&a.b).map(|(x, y)| x - y).collect();
    let mut c = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            c[i * n + j] = (b.c[i * n + j] - a.c[i * n + j]) - a.b[i] * db[j];
        }
    }
    Ok(TensorLevel2 { b: db, c })
}

/// `d(a, b) = |||a⁻¹ ⊗ b|||`.
pub fn rp_distance(a: &TensorLevel2, b: &TensorLevel2) -> Result<f64> {
    Ok(relative_increment(a, b)?.symmetric_norm())
}
