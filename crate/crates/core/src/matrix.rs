//! Dense symmetric matrices, a cyclic Jacobi eigensolver, and the spectral
//! function calculus (exp/log) the matrix-valued learners need. Dimensions
//! here are small (experts, not features), so O(K^3) throughout is fine and
//! determinism beats cleverness.

use crate::error::{Error, Result};

/// Symmetric matrix stored dense row-major. Constructors symmetrize the
/// rounding dust away after checking |a_ij - a_ji| <= 1e-12.
#[derive(Debug, Clone, PartialEq)]
pub struct SymmetricMatrix {
    dim: usize,
    data: Vec<f64>,
}

impl SymmetricMatrix {
    pub fn new(dim: usize, data: Vec<f64>) -> Result<Self> {
        if dim == 0 || data.len() != dim * dim {
            return Err(Error::DimensionMismatch(format!(
                "symmetric matrix: dim {dim} with {} entries",
                data.len()
            )));
        }
        for (idx, &x) in data.iter().enumerate() {
            if !x.is_finite() {
                return Err(Error::Domain(format!("entry {idx} is {x}")));
            }
        }
        for i in 0..dim {
            for j in (i + 1)..dim {
                if (data[i * dim + j] - data[j * dim + i]).abs() > 1e-12 {
                    return Err(Error::Domain(format!(
                        "asymmetry at ({i},{j}): {} vs {}",
                        data[i * dim + j],
                        data[j * dim + i]
                    )));
                }
            }
        }
        let mut m = SymmetricMatrix { dim, data };
        for i in 0..dim {
            for j in (i + 1)..dim {
                let avg = 0.5 * (m.get(i, j) + m.get(j, i));
                m.set(i, j, avg);
                m.set(j, i, avg);
            }
        }
        Ok(m)
    }

    pub fn zeros(dim: usize) -> Self {
        SymmetricMatrix {
            dim,
            data: vec![0.0; dim * dim],
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m.set(i, i, 1.0);
        }
        m
    }

    /// Identity scaled by `c` (handy for the floor term floor * I).
    pub fn scaled_identity(dim: usize, c: f64) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m.set(i, i, c);
        }
        m
    }

    pub fn from_diagonal(d: &[f64]) -> Self {
        let mut m = Self::zeros(d.len());
        for (i, &x) in d.iter().enumerate() {
            m.set(i, i, x);
        }
        m
    }

    /// Rank-one projector v v^T of a unit vector.
    pub fn outer(v: &[f64]) -> Self {
        let dim = v.len();
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            for j in 0..dim {
                m.set(i, j, v[i] * v[j]);
            }
        }
        m
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.dim + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, x: f64) {
        self.data[i * self.dim + j] = x;
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn add(&self, other: &SymmetricMatrix) -> SymmetricMatrix {
        assert_eq!(self.dim, other.dim);
        SymmetricMatrix {
            dim: self.dim,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| a + b)
                .collect(),
        }
    }

    pub fn sub(&self, other: &SymmetricMatrix) -> SymmetricMatrix {
        assert_eq!(self.dim, other.dim);
        SymmetricMatrix {
            dim: self.dim,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| a - b)
                .collect(),
        }
    }

    pub fn scale(&self, c: f64) -> SymmetricMatrix {
        SymmetricMatrix {
            dim: self.dim,
            data: self.data.iter().map(|a| a * c).collect(),
        }
    }

    pub fn trace(&self) -> f64 {
        (0..self.dim).map(|i| self.get(i, i)).sum()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    /// A v.
    pub fn matvec(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(v.len(), self.dim);
        (0..self.dim)
            .map(|i| (0..self.dim).map(|j| self.get(i, j) * v[j]).sum())
            .collect()
    }

    /// v^T A v for a plain vector.
    pub fn quadratic_form(&self, v: &[f64]) -> f64 {
        assert_eq!(v.len(), self.dim);
        let mut acc = 0.0;
        for i in 0..self.dim {
            let mut row = 0.0;
            for j in 0..self.dim {
                row += self.get(i, j) * v[j];
            }
            acc += v[i] * row;
        }
        acc
    }

    /// Plain matrix product; the result is generally not symmetric, so it is
    /// only used inside tests and squared-loss accounting where we re-wrap.
    pub fn matmul(&self, other: &SymmetricMatrix) -> Vec<f64> {
        assert_eq!(self.dim, other.dim);
        let n = self.dim;
        let mut out = vec![0.0; n * n];
        for i in 0..n {
            for k in 0..n {
                let a = self.get(i, k);
                if a == 0.0 {
                    continue;
                }
                for j in 0..n {
                    out[i * n + j] += a * other.get(k, j);
                }
            }
        }
        out
    }

    /// A^2, symmetric again.
    pub fn square(&self) -> SymmetricMatrix {
        let raw = self.matmul(self);
        let n = self.dim;
        let mut m = SymmetricMatrix { dim: n, data: raw };
        for i in 0..n {
            for j in (i + 1)..n {
                let avg = 0.5 * (m.get(i, j) + m.get(j, i));
                m.set(i, j, avg);
                m.set(j, i, avg);
            }
        }
        m
    }
}

/// tr(A B) for symmetric A, B: the Frobenius inner product sum_ij a_ij b_ij.
pub fn trace_product(a: &SymmetricMatrix, b: &SymmetricMatrix) -> f64 {
    assert_eq!(a.dim(), b.dim());
    a.data().iter().zip(b.data()).map(|(x, y)| x * y).sum()
}

/// Eigendecomposition A = V diag(values) V^T with eigenvalues sorted
/// descending and each eigenvector's first non-negligible component made
/// positive, so equal inputs give bit-equal outputs.
#[derive(Debug, Clone)]
pub struct EigenDecomposition {
    dim: usize,
    /// Descending.
    pub values: Vec<f64>,
    /// Column-major: vectors[j*dim + i] is component i of eigenvector j.
    vectors: Vec<f64>,
}

impl EigenDecomposition {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn vector(&self, j: usize) -> &[f64] {
        &self.vectors[j * self.dim..(j + 1) * self.dim]
    }

    /// V diag(f(values)) V^T.
    pub fn reconstruct_with(&self, f: impl Fn(f64) -> f64) -> SymmetricMatrix {
        let n = self.dim;
        let fv: Vec<f64> = self.values.iter().map(|&x| f(x)).collect();
        let mut m = SymmetricMatrix::zeros(n);
        for i in 0..n {
            for j in i..n {
                let mut acc = 0.0;
                for k in 0..n {
                    acc += fv[k] * self.vectors[k * n + i] * self.vectors[k * n + j];
                }
                m.set(i, j, acc);
                m.set(j, i, acc);
            }
        }
        m
    }

    pub fn reconstruct(&self) -> SymmetricMatrix {
        self.reconstruct_with(|x| x)
    }
}

/// Cyclic Jacobi eigensolver. Sweeps rotate away every off-diagonal entry in
/// row order until the off-diagonal Frobenius mass falls below
/// `tol * max(1, ||A||_F)`; the sweep cap of 100 is far beyond what the
/// quadratic convergence of Jacobi ever needs at these dimensions.
pub fn sym_eig(a: &SymmetricMatrix, tol: f64) -> Result<EigenDecomposition> {
    let n = a.dim();
    let mut m = a.clone();
    let mut v = vec![0.0; n * n]; // column-major accumulated rotations
    for j in 0..n {
        v[j * n + j] = 1.0;
    }
    let scale = a.frobenius_norm().max(1.0);
    let stop = tol.max(f64::EPSILON) * scale;

    let off = |m: &SymmetricMatrix| -> f64 {
        let mut acc = 0.0;
        for i in 0..n {
            for j in (i + 1)..n {
                acc += 2.0 * m.get(i, j) * m.get(i, j);
            }
        }
        acc.sqrt()
    };

    let mut converged = off(&m) <= stop;
    for _sweep in 0..100 {
        if converged {
            break;
        }
        for p in 0..n.saturating_sub(1) {
            for q in (p + 1)..n {
                let apq = m.get(p, q);
                if apq.abs() <= stop * 1e-4 / (n * n) as f64 {
                    continue;
                }
                let app = m.get(p, p);
                let aqq = m.get(q, q);
                let theta = 0.5 * (aqq - app) / apq;
                // tan of the rotation angle, the root of smaller magnitude
                let t = if theta.abs() > 1e12 {
                    0.5 / theta
                } else {
                    theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt())
                };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                let tau = s / (1.0 + c);

                m.set(p, p, app - t * apq);
                m.set(q, q, aqq + t * apq);
                m.set(p, q, 0.0);
                m.set(q, p, 0.0);
                for i in 0..n {
                    if i != p && i != q {
                        let aip = m.get(i, p);
                        let aiq = m.get(i, q);
                        let nip = aip - s * (aiq + tau * aip);
                        let niq = aiq + s * (aip - tau * aiq);
                        m.set(i, p, nip);
                        m.set(p, i, nip);
                        m.set(i, q, niq);
                        m.set(q, i, niq);
                    }
                }
                for i in 0..n {
                    let vip = v[p * n + i];
                    let viq = v[q * n + i];
                    v[p * n + i] = vip - s * (viq + tau * vip);
                    v[q * n + i] = viq + s * (vip - tau * viq);
                }
            }
        }
        converged = off(&m) <= stop;
    }
    if !converged {
        return Err(Error::NoConvergence(
            "jacobi eigensolver exceeded 100 sweeps".into(),
        ));
    }

    let mut order: Vec<usize> = (0..n).collect();
    // Descending by eigenvalue; stable on ties.
    order.sort_by(|&i, &j| m.get(j, j).partial_cmp(&m.get(i, i)).unwrap().then(i.cmp(&j)));
    let values: Vec<f64> = order.iter().map(|&i| m.get(i, i)).collect();
    let mut vectors = vec![0.0; n * n];
    for (dst, &src) in order.iter().enumerate() {
        let col = &v[src * n..(src + 1) * n];
        // Sign convention: first component of visible magnitude is positive.
        let flip = col
            .iter()
            .find(|x| x.abs() > 1e-12)
            .map(|&x| x < 0.0)
            .unwrap_or(false);
        for i in 0..n {
            vectors[dst * n + i] = if flip { -col[i] } else { col[i] };
        }
    }
    Ok(EigenDecomposition {
        dim: n,
        values,
        vectors,
    })
}

const EIG_TOL: f64 = 1e-13;

/// Spectral exponential V exp(diag) V^T.
pub fn matrix_exp(a: &SymmetricMatrix) -> Result<SymmetricMatrix> {
    Ok(sym_eig(a, EIG_TOL)?.reconstruct_with(f64::exp))
}

/// Spectral logarithm; requires every eigenvalue strictly positive.
pub fn matrix_log(a: &SymmetricMatrix) -> Result<SymmetricMatrix> {
    let eig = sym_eig(a, EIG_TOL)?;
    if let Some(&bad) = eig.values.iter().find(|&&x| x <= 0.0) {
        return Err(Error::Domain(format!(
            "matrix_log: eigenvalue {bad} is not positive"
        )));
    }
    Ok(eig.reconstruct_with(f64::ln))
}

/// log(I - eta * Z) computed from Z's own eigendecomposition, so commuting
/// inputs stay exactly commuting. Requires 1 - eta*lambda > 0 for every
/// eigenvalue lambda of Z.
pub fn log_identity_minus(z: &SymmetricMatrix, eta: f64) -> Result<SymmetricMatrix> {
    let eig = sym_eig(z, EIG_TOL)?;
    for &lam in &eig.values {
        if 1.0 - eta * lam <= 0.0 {
            return Err(Error::Domain(format!(
                "log(I - eta Z): 1 - {eta}*{lam} is not positive"
            )));
        }
    }
    Ok(eig.reconstruct_with(|lam| (1.0 - eta * lam).ln()))
}

/// Largest absolute eigenvalue.
pub fn spectral_norm(a: &SymmetricMatrix) -> Result<f64> {
    let eig = sym_eig(a, EIG_TOL)?;
    Ok(eig
        .values
        .iter()
        .map(|x| x.abs())
        .fold(0.0, f64::max))
}

/// Smallest eigenvalue and its (sign-fixed) eigenvector.
pub fn min_eigen(a: &SymmetricMatrix) -> Result<(f64, Vec<f64>)> {
    let eig = sym_eig(a, EIG_TOL)?;
    let last = eig.dim() - 1;
    Ok((eig.values[last], eig.vector(last).to_vec()))
}

/// One round of matrix losses: symmetric with spectral norm at most 1.
#[derive(Debug, Clone)]
pub struct LossMatrix(SymmetricMatrix);

impl LossMatrix {
    pub fn new(m: SymmetricMatrix) -> Result<Self> {
        let norm = spectral_norm(&m)?;
        if norm > 1.0 + 1e-10 {
            return Err(Error::Domain(format!(
                "loss matrix spectral norm {norm} exceeds 1"
            )));
        }
        Ok(LossMatrix(m))
    }

    pub fn matrix(&self) -> &SymmetricMatrix {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.dim()
    }
}
