//! Algebraic curvature tensors on `(R^{2n}, J, <,>)`.
//!
//! A tensor is a dense `(2n)^4` table `R[i][j][k][l]` in the standard basis,
//! evaluated multilinearly. Sign convention: `K(u, v) = R(u, v, u, v)` is the
//! (unnormalized) sectional curvature, so the complex hyperbolic model has
//! `K < 0`.

mod identities;
mod projector;

pub use identities::{
    fit_complex_polarization_coefficient, identity_one_residual, polarization_complex_residual,
    polarization_real_residual, polarization_system, reconstruct_from_sectional,
    solve_sectional_from_h, SectionalTriple, COMPLEX_POLARIZATION_COEFF,
    PRINTED_COMPLEX_POLARIZATION_COEFF,
};
pub use projector::{kahler_dimension, project_kahler, project_kahler_with_cap, KahlerProjector};

use crate::error::{Error, Result};
use crate::rng;
use crate::space::{dot, HermitianSpace};
use serde::Serialize;

/// Default absolute tolerance for symmetry residuals of unit-norm tensors.
pub const DEFAULT_SYMMETRY_TOL: f64 = 1e-9;

/// Maximum symmetry residuals, measured on `R / |R|_F`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SymmetryCertificate {
    /// `R(X,Y,Z,W) = -R(Y,X,Z,W) = -R(X,Y,W,Z)`
    pub antisymmetry: f64,
    /// `R(Z,W,X,Y) = R(X,Y,Z,W)`
    pub pair_symmetry: f64,
    /// First Bianchi identity
    pub bianchi: f64,
    /// `R(JX,JY,Z,W) = R(X,Y,JZ,JW) = R(X,Y,Z,W)`
    pub j_invariance: f64,
    pub tolerance: f64,
    pub passed: bool,
}

impl SymmetryCertificate {
    pub fn max_residual(&self) -> f64 {
        self.antisymmetry
            .max(self.pair_symmetry)
            .max(self.bianchi)
            .max(self.j_invariance)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CurvatureTensor {
    space: HermitianSpace,
    entries: Vec<f64>,
    certificate: Option<SymmetryCertificate>,
}

/// A 2-plane given by a (not necessarily orthonormal) spanning pair.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TwoPlane {
    pub u: Vec<f64>,
    pub v: Vec<f64>,
    pub gram_determinant: f64,
}

impl TwoPlane {
    pub fn new(u: Vec<f64>, v: Vec<f64>) -> Result<Self> {
        let (uu, vv, uv) = (dot(&u, &u), dot(&v, &v), dot(&u, &v));
        let gram = uu * vv - uv * uv;
        if !(gram > 1e-14 * uu * vv) || !gram.is_finite() {
            return Err(Error::DegeneratePlane(gram));
        }
        Ok(Self {
            u,
            v,
            gram_determinant: gram,
        })
    }
}

impl CurvatureTensor {
    /// Wraps a raw `(2n)^4` table. No symmetry is assumed.
    pub fn from_entries(space: &HermitianSpace, entries: Vec<f64>) -> Result<Self> {
        let d = space.dim();
        if entries.len() != d.pow(4) {
            return Err(Error::Format(format!(
                "expected {} entries for n = {}, got {}",
                d.pow(4),
                space.n(),
                entries.len()
            )));
        }
        if entries.iter().any(|x| !x.is_finite()) {
            return Err(Error::Format("non-finite tensor entry".into()));
        }
        Ok(Self {
            space: space.clone(),
            entries,
            certificate: None,
        })
    }

    pub fn zero(space: &HermitianSpace) -> Self {
        Self {
            space: space.clone(),
            entries: vec![0.0; space.dim().pow(4)],
            certificate: None,
        }
    }

    /// The complex hyperbolic model tensor:
    ///
    /// `-4 R0(u,v,z,w) = <u,z><v,w> - <u,w><v,z> + <u,Jz><v,Jw>
    ///                   - <u,Jw><v,Jz> + 2 <u,Jv><z,Jw>`.
    pub fn r0(space: &HermitianSpace) -> Self {
        let d = space.dim();
        let g = |a: usize, b: usize| if a == b { 1.0 } else { 0.0 };
        // <e_a, J e_b>
        let gj = |a: usize, b: usize| {
            let (img, sign) = space.j_basis(b);
            if img == a {
                sign
            } else {
                0.0
            }
        };
        let mut entries = vec![0.0; d.pow(4)];
        for i in 0..d {
            for j in 0..d {
                for k in 0..d {
                    for l in 0..d {
                        let s = g(i, k) * g(j, l) - g(i, l) * g(j, k) + gj(i, k) * gj(j, l)
                            - gj(i, l) * gj(j, k)
                            + 2.0 * gj(i, j) * gj(k, l);
                        entries[((i * d + j) * d + k) * d + l] = -0.25 * s;
                    }
                }
            }
        }
        let mut r = Self {
            space: space.clone(),
            entries,
            certificate: None,
        };
        r.certify(DEFAULT_SYMMETRY_TOL);
        r
    }

    /// Standard-normal entries projected onto the Kähler subspace and scaled to
    /// Frobenius norm `frobenius_norm`.
    pub fn random_kahler(space: &HermitianSpace, seed: u64, frobenius_norm: f64) -> Result<Self> {
        if !(frobenius_norm > 0.0) {
            return Err(Error::Precondition("frobenius_norm must be positive".into()));
        }
        let mut r = rng::rng(seed);
        let raw = Self::from_entries(space, rng::gaussian_vec(&mut r, space.dim().pow(4)))?;
        let projected = project_kahler(&raw)?;
        let norm = projected.frobenius_norm();
        if norm < 1e-12 {
            return Err(Error::DegenerateSample(format!(
                "projection of seed {seed} vanished"
            )));
        }
        let mut out = projected.scale(frobenius_norm / norm);
        out.certify(DEFAULT_SYMMETRY_TOL);
        Ok(out)
    }

    pub fn space(&self) -> &HermitianSpace {
        &self.space
    }

    pub fn n(&self) -> usize {
        self.space.n()
    }

    pub fn dim(&self) -> usize {
        self.space.dim()
    }

    pub fn entries(&self) -> &[f64] {
        &self.entries
    }

    pub fn certificate(&self) -> Option<&SymmetryCertificate> {
        self.certificate.as_ref()
    }

    pub fn is_certified(&self) -> bool {
        self.certificate.is_some_and(|c| c.passed)
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize, k: usize, l: usize) -> usize {
        let d = self.dim();
        ((i * d + j) * d + k) * d + l
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize, k: usize, l: usize) -> f64 {
        self.entries[self.index(i, j, k, l)]
    }

    /// `R(x, y, z, w)` by full contraction.
    pub fn eval(&self, x: &[f64], y: &[f64], z: &[f64], w: &[f64]) -> f64 {
        let d = self.dim();
        let mut total = 0.0;
        for i in 0..d {
            if x[i] == 0.0 {
                continue;
            }
            for j in 0..d {
                let xy = x[i] * y[j];
                if xy == 0.0 {
                    continue;
                }
                let base = (i * d + j) * d * d;
                let mut inner = 0.0;
                for k in 0..d {
                    let row = &self.entries[base + k * d..base + (k + 1) * d];
                    inner += z[k] * dot(row, w);
                }
                total += xy * inner;
            }
        }
        total
    }

    /// Unnormalized biquadratic `K(u, v) = R(u, v, u, v)`.
    pub fn biquadratic(&self, u: &[f64], v: &[f64]) -> f64 {
        self.eval(u, v, u, v)
    }

    /// Sectional curvature of a plane: `R(u,v,u,v) / (|u|^2 |v|^2 - <u,v>^2)`.
    pub fn sectional(&self, plane: &TwoPlane) -> f64 {
        self.biquadratic(&plane.u, &plane.v) / plane.gram_determinant
    }

    /// Holomorphic sectional curvature `R(u,Ju,u,Ju) / |u|^4`.
    pub fn holomorphic_sectional(&self, u: &[f64]) -> Result<f64> {
        let uu = dot(u, u);
        if !(uu > 0.0) {
            return Err(Error::ZeroVector);
        }
        Ok(self.holomorphic_quartic(u) / (uu * uu))
    }

    /// Unnormalized `H(u) = R(u, Ju, u, Ju)`.
    pub fn holomorphic_quartic(&self, u: &[f64]) -> f64 {
        let ju = self.space.apply_j(u);
        self.eval(u, &ju, u, &ju)
    }

    pub fn scale(&self, s: f64) -> Self {
        Self {
            space: self.space.clone(),
            entries: self.entries.iter().map(|x| x * s).collect(),
            // residuals are measured on the normalized tensor
            certificate: if s != 0.0 { self.certificate } else { None },
        }
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_space(other)?;
        Ok(Self {
            space: self.space.clone(),
            entries: self
                .entries
                .iter()
                .zip(&other.entries)
                .map(|(a, b)| a + b)
                .collect(),
            certificate: None,
        })
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.add(&other.scale(-1.0))
    }

    fn check_space(&self, other: &Self) -> Result<()> {
        if self.n() != other.n() {
            return Err(Error::SpaceMismatch(self.n(), other.n()));
        }
        Ok(())
    }

    pub fn frobenius_norm(&self) -> f64 {
        dot(&self.entries, &self.entries).sqrt()
    }

    /// Inner product induced on the fourth tensor power by the orthonormal basis.
    pub fn inner(&self, other: &Self) -> Result<f64> {
        self.check_space(other)?;
        Ok(dot(&self.entries, &other.entries))
    }

    /// Frobenius distance `|R - S|`.
    pub fn distance(&self, other: &Self) -> Result<f64> {
        self.check_space(other)?;
        Ok(self
            .entries
            .iter()
            .zip(&other.entries)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt())
    }

    /// Exhaustive residuals of the four symmetry conditions, measured on `R / |R|_F`.
    pub fn check_kahler(&self, tol: f64) -> SymmetryCertificate {
        let d = self.dim();
        let norm = self.frobenius_norm();
        let scale = if norm > 0.0 { 1.0 / norm } else { 1.0 };
        let (mut anti, mut pair, mut bianchi, mut jinv) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
        for i in 0..d {
            let (ji, si) = self.space.j_basis(i);
            for j in 0..d {
                let (jj, sj) = self.space.j_basis(j);
                for k in 0..d {
                    for l in 0..d {
                        let r = self.get(i, j, k, l);
                        anti = anti
                            .max((r + self.get(j, i, k, l)).abs())
                            .max((r + self.get(i, j, l, k)).abs());
                        pair = pair.max((self.get(k, l, i, j) - r).abs());
                        bianchi = bianchi
                            .max((r + self.get(i, l, j, k) + self.get(i, k, l, j)).abs());
                        // R(J e_i, J e_j, e_k, e_l) and R(e_k, e_l, J e_i, J e_j)
                        let jfirst = si * sj * self.get(ji, jj, k, l);
                        let jsecond = si * sj * self.get(k, l, ji, jj);
                        jinv = jinv
                            .max((jfirst - r).abs())
                            .max((jsecond - self.get(k, l, i, j)).abs());
                    }
                }
            }
        }
        let cert = SymmetryCertificate {
            antisymmetry: anti * scale,
            pair_symmetry: pair * scale,
            bianchi: bianchi * scale,
            j_invariance: jinv * scale,
            tolerance: tol,
            passed: false,
        };
        SymmetryCertificate {
            passed: cert.max_residual() <= tol,
            ..cert
        }
    }

    /// Runs [`check_kahler`](Self::check_kahler) and stores the certificate.
    pub fn certify(&mut self, tol: f64) -> SymmetryCertificate {
        let cert = self.check_kahler(tol);
        self.certificate = Some(cert);
        cert
    }

    pub(crate) fn require_certified(&self) -> Result<()> {
        if self.is_certified() {
            return Ok(());
        }
        let cert = self.check_kahler(DEFAULT_SYMMETRY_TOL);
        if cert.passed {
            Ok(())
        } else {
            Err(Error::Precondition(format!(
                "tensor is not a Kähler curvature tensor (max residual {:e})",
                cert.max_residual()
            )))
        }
    }
}
