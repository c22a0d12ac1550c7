//! Orthogonal projection of `(2n)^4` tables onto the Kähler curvature tensors.
//!
//! The subspace is the null space of the antisymmetry, pair-symmetry,
//! `J`-invariance and Bianchi constraints. Every constraint except Bianchi
//! identifies two entries up to sign (`J` permutes the standard basis up to
//! sign), so those are solved exactly by grouping entries into signed orbits;
//! an orbit whose signs conflict is forced to zero. The orbit vectors are an orthonormal basis `Q` of the
//! solution space of the signed equalities, and the Bianchi rows are then
//! solved in orbit coordinates: the null space is `Q N` with `N` an
//! orthonormal null basis of `B Q`. The projector is `(Q N)(Q N)^T`.

use super::{CurvatureTensor, DEFAULT_SYMMETRY_TOL};
use crate::error::{Error, Result};
use crate::space::HermitianSpace;
use crate::MAX_N;
use nalgebra::{DMatrix, DVector, SymmetricEigen};
use std::sync::{Arc, OnceLock};

/// Dimension of the Kähler curvature tensors for complex dimension `n`.
pub fn kahler_dimension(n: usize) -> usize {
    let m = n * (n + 1) / 2;
    m * m
}

#[derive(Debug)]
pub struct KahlerProjector {
    n: usize,
    /// `(2n)^4 x r` matrix with orthonormal columns spanning the subspace.
    basis: DMatrix<f64>,
}

/// Union-find over entries carrying the sign relating each entry to its root.
struct SignedUnionFind {
    parent: Vec<usize>,
    sign: Vec<f64>,
    zero: Vec<bool>,
}

impl SignedUnionFind {
    fn new(size: usize) -> Self {
        Self {
            parent: (0..size).collect(),
            sign: vec![1.0; size],
            zero: vec![false; size],
        }
    }

    /// Returns `(root, s)` with `x = s * x_root`.
    fn find(&mut self, x: usize) -> (usize, f64) {
        let p = self.parent[x];
        if p == x {
            return (x, 1.0);
        }
        let (root, ps) = self.find(p);
        self.parent[x] = root;
        self.sign[x] *= ps;
        (root, self.sign[x])
    }

    /// Records `x_a = sigma * x_b`.
    fn union(&mut self, a: usize, b: usize, sigma: f64) {
        let (ra, sa) = self.find(a);
        let (rb, sb) = self.find(b);
        let rel = sa * sigma * sb;
        if ra == rb {
            if rel < 0.0 {
                self.zero[ra] = true;
            }
            return;
        }
        self.parent[ra] = rb;
        self.sign[ra] = rel;
        self.zero[rb] = self.zero[rb] || self.zero[ra];
    }
}

impl KahlerProjector {
    fn build(n: usize) -> Result<Self> {
        let space = HermitianSpace::new(n)?;
        let d = space.dim();
        let size = d.pow(4);
        let idx = |i: usize, j: usize, k: usize, l: usize| ((i * d + j) * d + k) * d + l;

        let mut uf = SignedUnionFind::new(size);
        for i in 0..d {
            let (ji, si) = space.j_basis(i);
            for j in 0..d {
                let (jj, sj) = space.j_basis(j);
                for k in 0..d {
                    let (jk, sk) = space.j_basis(k);
                    for l in 0..d {
                        let (jl, sl) = space.j_basis(l);
                        let e = idx(i, j, k, l);
                        uf.union(e, idx(j, i, k, l), -1.0);
                        uf.union(e, idx(i, j, l, k), -1.0);
                        uf.union(e, idx(k, l, i, j), 1.0);
                        uf.union(e, idx(ji, jj, k, l), si * sj);
                        uf.union(e, idx(i, j, jk, jl), sk * sl);
                    }
                }
            }
        }

        // orbit columns of Q, stored sparsely as (entry, coefficient)
        let mut column_of_root = vec![usize::MAX; size];
        let mut members: Vec<Vec<(usize, f64)>> = Vec::new();
        for e in 0..size {
            let (root, s) = uf.find(e);
            if uf.zero[root] {
                continue;
            }
            if column_of_root[root] == usize::MAX {
                column_of_root[root] = members.len();
                members.push(Vec::new());
            }
            members[column_of_root[root]].push((e, s));
        }
        let orbit_count = members.len();
        let mut coord = vec![(usize::MAX, 0.0); size];
        for (c, orbit) in members.iter().enumerate() {
            let w = 1.0 / (orbit.len() as f64).sqrt();
            for &(e, s) in orbit {
                coord[e] = (c, s * w);
            }
        }

        // Gram matrix of the Bianchi rows in orbit coordinates
        let mut gram = DMatrix::<f64>::zeros(orbit_count, orbit_count);
        let mut row = vec![0.0; orbit_count];
        let mut touched = Vec::with_capacity(3);
        for i in 0..d {
            for j in 0..d {
                for k in 0..d {
                    for l in 0..d {
                        touched.clear();
                        for e in [idx(i, j, k, l), idx(i, l, j, k), idx(i, k, l, j)] {
                            let (c, w) = coord[e];
                            if c != usize::MAX {
                                row[c] += w;
                                touched.push(c);
                            }
                        }
                        touched.sort_unstable();
                        touched.dedup();
                        for &a in &touched {
                            for &b in &touched {
                                gram[(a, b)] += row[a] * row[b];
                            }
                        }
                        for &a in &touched {
                            row[a] = 0.0;
                        }
                    }
                }
            }
        }

        let eig = SymmetricEigen::new(gram);
        let scale = eig.eigenvalues.iter().fold(1.0f64, |m, x| m.max(x.abs()));
        let null: Vec<usize> = (0..orbit_count)
            .filter(|&c| eig.eigenvalues[c].abs() < 1e-9 * scale)
            .collect();

        let mut basis = DMatrix::<f64>::zeros(size, null.len());
        for (col, &c) in null.iter().enumerate() {
            let v = eig.eigenvectors.column(c);
            for e in 0..size {
                let (orbit, w) = coord[e];
                if orbit != usize::MAX {
                    basis[(e, col)] = w * v[orbit];
                }
            }
        }
        Ok(Self { n, basis })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Dimension of the Kähler curvature subspace.
    pub fn rank(&self) -> usize {
        self.basis.ncols()
    }

    /// Orthonormal basis of the subspace, one `(2n)^4` column per basis tensor.
    pub fn basis(&self) -> &DMatrix<f64> {
        &self.basis
    }

    pub fn apply(&self, entries: &[f64]) -> Vec<f64> {
        let t = DVector::from_column_slice(entries);
        let coeffs = self.basis.tr_mul(&t);
        (&self.basis * coeffs).iter().copied().collect()
    }

    /// Cached projector for complex dimension `n <= cap`.
    pub fn get(n: usize, cap: usize) -> Result<Arc<Self>> {
        static CACHE: [OnceLock<Arc<KahlerProjector>>; MAX_N + 1] =
            [const { OnceLock::new() }; MAX_N + 1];
        if n == 0 {
            return Err(Error::InvalidDimension(0));
        }
        if n > cap.min(MAX_N) {
            return Err(Error::ResourceLimit(format!(
                "Kähler projector for n = {n} exceeds the cap n <= {}",
                cap.min(MAX_N)
            )));
        }
        if let Some(p) = CACHE[n].get() {
            return Ok(p.clone());
        }
        let built = Arc::new(Self::build(n)?);
        Ok(CACHE[n].get_or_init(|| built).clone())
    }
}

/// Orthogonal projection onto the Kähler curvature tensors (cap `n <= 4`).
pub fn project_kahler(t: &CurvatureTensor) -> Result<CurvatureTensor> {
    project_kahler_with_cap(t, MAX_N)
}

pub fn project_kahler_with_cap(t: &CurvatureTensor, cap: usize) -> Result<CurvatureTensor> {
    let projector = KahlerProjector::get(t.n(), cap)?;
    let mut out = CurvatureTensor::from_entries(t.space(), projector.apply(t.entries()))?;
    out.certify(DEFAULT_SYMMETRY_TOL);
    Ok(out)
}
