//! The model Hermitian vector space `V = R^{2n}` with complex structure `J`.
//!
//! Basis convention (0-based storage): `J e_{2a} = e_{2a+1}` and
//! `J e_{2a+1} = -e_{2a}`. With `omega(u, v) = <u, J v>` this forces
//! `omega(e_{2a}, e_{2a+1}) = -1`, so `omega = -sum_a e^{2a} ^ e^{2a+1}`.

use crate::error::{Error, Result};
use crate::exterior::AlternatingForm;
use crate::rng;

/// `(R^{2n}, J, <,>)` in the standard basis. The metric is the identity.
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianSpace {
    n: usize,
    dim: usize,
    /// Row-major `dim x dim` matrix of `J` acting on column vectors.
    j_matrix: Vec<f64>,
    /// `J e_i = j_sign[i] * e_{j_image[i]}`.
    j_image: Vec<usize>,
    j_sign: Vec<f64>,
}

/// Extra constraint for [`HermitianSpace::random_orthonormal_pair`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PairConstraint {
    None,
    /// `v` orthogonal to both `u` and `J u`, so `{u, Ju, v, Jv}` is orthonormal.
    VPerpJu,
}

impl HermitianSpace {
    pub fn new(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidDimension(0));
        }
        let dim = 2 * n;
        let mut j_matrix = vec![0.0; dim * dim];
        let mut j_image = vec![0; dim];
        let mut j_sign = vec![0.0; dim];
        for a in 0..n {
            let (p, q) = (2 * a, 2 * a + 1);
            // column p maps to +e_q, column q maps to -e_p
            j_matrix[q * dim + p] = 1.0;
            j_matrix[p * dim + q] = -1.0;
            j_image[p] = q;
            j_sign[p] = 1.0;
            j_image[q] = p;
            j_sign[q] = -1.0;
        }
        Ok(Self {
            n,
            dim,
            j_matrix,
            j_image,
            j_sign,
        })
    }

    /// Complex dimension.
    pub fn n(&self) -> usize {
        self.n
    }

    /// Real dimension `2n`.
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn j_matrix(&self) -> &[f64] {
        &self.j_matrix
    }

    /// Metric coefficients; always the identity in the standard basis.
    pub fn metric(&self) -> Vec<f64> {
        let mut g = vec![0.0; self.dim * self.dim];
        for i in 0..self.dim {
            g[i * self.dim + i] = 1.0;
        }
        g
    }

    /// Index and sign with `J e_i = sign * e_index`.
    pub fn j_basis(&self, i: usize) -> (usize, f64) {
        (self.j_image[i], self.j_sign[i])
    }

    pub fn apply_j(&self, v: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.dim];
        for (i, &x) in v.iter().enumerate() {
            out[self.j_image[i]] += self.j_sign[i] * x;
        }
        out
    }

    pub fn basis_vector(&self, i: usize) -> Vec<f64> {
        let mut e = vec![0.0; self.dim];
        e[i] = 1.0;
        e
    }

    /// `omega(u, v) = <u, J v>`.
    pub fn omega(&self, u: &[f64], v: &[f64]) -> f64 {
        dot(u, &self.apply_j(v))
    }

    /// The Kähler form as a degree-2 alternating form.
    pub fn kahler_form(&self) -> AlternatingForm {
        let mut w = AlternatingForm::zero(self.dim, 2);
        for i in 0..self.dim {
            for j in (i + 1)..self.dim {
                let val = self.omega(&self.basis_vector(i), &self.basis_vector(j));
                if val != 0.0 {
                    w.set(&[i, j], val);
                }
            }
        }
        w
    }

    pub fn random_unit_vector(&self, rng: &mut rng::Rng) -> Vec<f64> {
        loop {
            let v = rng::gaussian_vec(rng, self.dim);
            if let Some(u) = normalized(&v) {
                return u;
            }
        }
    }

    /// The frame `f_a = e_{2a}`, whose completion `{f_a, J f_a}` is the standard basis.
    pub fn standard_frame(&self) -> Vec<Vec<f64>> {
        (0..self.n).map(|a| self.basis_vector(2 * a)).collect()
    }

    /// Random `f_1..f_n` with `{f_1, J f_1, ..., f_n, J f_n}` orthonormal.
    pub fn random_unitary_frame(&self, seed: u64) -> Vec<Vec<f64>> {
        let mut rng = rng::rng(seed);
        let mut span: Vec<Vec<f64>> = Vec::with_capacity(self.dim);
        let mut frame = Vec::with_capacity(self.n);
        while frame.len() < self.n {
            let mut f = rng::gaussian_vec(&mut rng, self.dim);
            orthogonalize(&mut f, &span);
            orthogonalize(&mut f, &span);
            let Some(f) = normalized(&f) else { continue };
            if norm(&f) < 0.5 {
                continue;
            }
            let jf = self.apply_j(&f);
            span.push(f.clone());
            span.push(jf);
            frame.push(f);
        }
        frame
    }

    /// Random orthonormal pair `(u, v)`, optionally with `v` orthogonal to `J u`.
    pub fn random_orthonormal_pair(
        &self,
        seed: u64,
        constraint: PairConstraint,
    ) -> Result<(Vec<f64>, Vec<f64>)> {
        if constraint == PairConstraint::VPerpJu && self.n < 2 {
            return Err(Error::DimensionTooSmall(
                "v orthogonal to {u, Ju} needs n >= 2".into(),
            ));
        }
        let mut rng = rng::rng(seed);
        let u = self.random_unit_vector(&mut rng);
        let mut span = vec![u.clone()];
        if constraint == PairConstraint::VPerpJu {
            span.push(self.apply_j(&u));
        }
        loop {
            let mut v = rng::gaussian_vec(&mut rng, self.dim);
            orthogonalize(&mut v, &span);
            orthogonalize(&mut v, &span);
            if norm(&v) > 1e-3 {
                return Ok((u, normalized(&v).expect("nonzero")));
            }
        }
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub fn normalized(a: &[f64]) -> Option<Vec<f64>> {
    let len = norm(a);
    if len > 1e-300 && len.is_finite() {
        Some(a.iter().map(|x| x / len).collect())
    } else {
        None
    }
}

/// Linear combination `alpha * a + beta * b`.
pub fn lincomb(alpha: f64, a: &[f64], beta: f64, b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| alpha * x + beta * y).collect()
}

/// Removes the components of `v` along each vector of the orthonormal list `basis`.
pub fn orthogonalize(v: &mut [f64], basis: &[Vec<f64>]) {
    for b in basis {
        let c = dot(v, b);
        for (x, y) in v.iter_mut().zip(b) {
            *x -= c * y;
        }
    }
}

/// Gram-Schmidt on a list of vectors; returns `None` if they are dependent.
pub fn gram_schmidt(vectors: &[Vec<f64>]) -> Option<Vec<Vec<f64>>> {
    let mut out: Vec<Vec<f64>> = Vec::with_capacity(vectors.len());
    for v in vectors {
        let mut w = v.clone();
        orthogonalize(&mut w, &out);
        orthogonalize(&mut w, &out);
        if norm(&w) < 1e-12 * norm(v).max(1e-300) {
            return None;
        }
        out.push(normalized(&w)?);
    }
    Some(out)
}

/// Largest deviation of the Gram matrix of `vectors` from the identity.
pub fn orthonormality_defect(vectors: &[&[f64]]) -> f64 {
    let mut worst: f64 = 0.0;
    for (i, a) in vectors.iter().enumerate() {
        for (j, b) in vectors.iter().enumerate() {
            let target = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((dot(a, b) - target).abs());
        }
    }
    worst
}
