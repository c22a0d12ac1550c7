//! Polarization identities relating the full tensor to sectional and
//! holomorphic sectional curvatures.
//!
//! All `H` values here are the unnormalized quartic `H(w) = R(w, Jw, w, Jw)`
//! and `K(a, b) = R(a, b, a, b)`; for unit (orthonormal) arguments they agree
//! with the normalized curvatures.

use super::CurvatureTensor;
use crate::error::{Error, Result};
use crate::rng;
use crate::space::{lincomb, orthonormality_defect, HermitianSpace, PairConstraint};
use nalgebra::{Matrix3, SMatrix, Vector3};
use serde::Serialize;

/// Coefficient of `a^2 b^2 R(u, Jv, u, Jv)` in the `u +- b Jv` identity as
/// it is usually printed (`- a^2 b^2 R(u,Jv,u,Jv)`).
pub const PRINTED_COMPLEX_POLARIZATION_COEFF: f64 = 1.0;

/// The coefficient that makes the `u +- b Jv` identity hold. It is the real
/// identity with `v` replaced by `Jv`, hence the same `8` as there.
pub const COMPLEX_POLARIZATION_COEFF: f64 = 8.0;

const ORTHONORMAL_TOL: f64 = 1e-8;

fn check_unitary_quadruple(space: &HermitianSpace, u: &[f64], v: &[f64]) -> Result<()> {
    let (ju, jv) = (space.apply_j(u), space.apply_j(v));
    let defect = orthonormality_defect(&[u, &ju, v, &jv]);
    if defect > ORTHONORMAL_TOL {
        return Err(Error::Precondition(format!(
            "{{u, Ju, v, Jv}} is not orthonormal (defect {defect:e})"
        )));
    }
    Ok(())
}

/// `K(u,v) + K(u,Jv) - R(u,Ju,v,Jv)` for `{u, Ju, v, Jv}` orthonormal.
pub fn identity_one_residual(r: &CurvatureTensor, u: &[f64], v: &[f64]) -> Result<f64> {
    check_unitary_quadruple(r.space(), u, v)?;
    let (ju, jv) = (r.space().apply_j(u), r.space().apply_j(v));
    Ok(r.biquadratic(u, v) + r.biquadratic(u, &jv) - r.eval(u, &ju, v, &jv))
}

/// Residual of
/// `H(au+bv) + H(au-bv) = 2a^4 H(u) + 2b^4 H(v) + 12a^2b^2 R(u,Ju,v,Jv) - 8a^2b^2 R(u,v,u,v)`.
pub fn polarization_real_residual(r: &CurvatureTensor, u: &[f64], v: &[f64], a: f64, b: f64) -> f64 {
    let s = r.space();
    let (ju, jv) = (s.apply_j(u), s.apply_j(v));
    let lhs = r.holomorphic_quartic(&lincomb(a, u, b, v)) + r.holomorphic_quartic(&lincomb(a, u, -b, v));
    let (a2, b2) = (a * a, b * b);
    let rhs = 2.0 * a2 * a2 * r.holomorphic_quartic(u) + 2.0 * b2 * b2 * r.holomorphic_quartic(v)
        + 12.0 * a2 * b2 * r.eval(u, &ju, v, &jv)
        - 8.0 * a2 * b2 * r.biquadratic(u, v);
    lhs - rhs
}

/// Residual of
/// `H(au+bJv) + H(au-bJv) = 2a^4 H(u) + 2b^4 H(v) + 12a^2b^2 R(u,Ju,v,Jv) - c a^2b^2 R(u,Jv,u,Jv)`.
pub fn polarization_complex_residual(
    r: &CurvatureTensor,
    u: &[f64],
    v: &[f64],
    a: f64,
    b: f64,
    coefficient: f64,
) -> f64 {
    let (lhs, rhs_without, feature) = complex_parts(r, u, v, a, b);
    lhs - (rhs_without + coefficient * feature)
}

/// `(lhs, rhs without the R(u,Jv,u,Jv) term, -a^2 b^2 R(u,Jv,u,Jv))`.
fn complex_parts(r: &CurvatureTensor, u: &[f64], v: &[f64], a: f64, b: f64) -> (f64, f64, f64) {
    let s = r.space();
    let (ju, jv) = (s.apply_j(u), s.apply_j(v));
    let lhs = r.holomorphic_quartic(&lincomb(a, u, b, &jv)) + r.holomorphic_quartic(&lincomb(a, u, -b, &jv));
    let (a2, b2) = (a * a, b * b);
    let rest = 2.0 * a2 * a2 * r.holomorphic_quartic(u) + 2.0 * b2 * b2 * r.holomorphic_quartic(v)
        + 12.0 * a2 * b2 * r.eval(u, &ju, v, &jv);
    (lhs, rest, -a2 * b2 * r.biquadratic(u, &jv))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CoefficientFit {
    pub coefficient: f64,
    /// Root-mean-square residual of the identity with the fitted coefficient.
    pub rms_residual: f64,
    pub samples: usize,
}

/// Least-squares fit of the coefficient `c` in the `u +- b Jv` identity over
/// random Kähler tensors, orthonormal `(u, v)` with `v` orthogonal to `Ju`,
/// and `a = b = 1/sqrt(2)`.
pub fn fit_complex_polarization_coefficient(
    space: &HermitianSpace,
    samples: usize,
    seed: u64,
) -> Result<CoefficientFit> {
    if samples == 0 {
        return Err(Error::EmptyInput("no samples for the coefficient fit".into()));
    }
    let a = std::f64::consts::FRAC_1_SQRT_2;
    let constraint = if space.n() >= 2 {
        PairConstraint::VPerpJu
    } else {
        PairConstraint::None
    };
    let mut rows = Vec::with_capacity(samples);
    for i in 0..samples {
        let r = CurvatureTensor::random_kahler(space, rng::derive_seed(seed, 2 * i as u64), 1.0)?;
        let (u, v) = space.random_orthonormal_pair(rng::derive_seed(seed, 2 * i as u64 + 1), constraint)?;
        let (lhs, rest, feature) = complex_parts(&r, &u, &v, a, a);
        rows.push((lhs - rest, feature));
    }
    let num: f64 = rows.iter().map(|(y, f)| y * f).sum();
    let den: f64 = rows.iter().map(|(_, f)| f * f).sum();
    if den == 0.0 {
        return Err(Error::DegenerateSample("coefficient fit has no signal".into()));
    }
    let coefficient = num / den;
    let rms = (rows.iter().map(|(y, f)| (y - coefficient * f).powi(2)).sum::<f64>() / samples as f64).sqrt();
    Ok(CoefficientFit {
        coefficient,
        rms_residual: rms,
        samples,
    })
}

/// The linear system `A x = L h` at `a = b = 1/sqrt(2)` whose solution is
/// `x = (K(u,v), K(u,Jv), R(u,Ju,v,Jv))`, with
/// `h = (H(u), H(v), H((u+v)/r2), H((u-v)/r2), H((u+Jv)/r2), H((u-Jv)/r2))`.
/// Rows: the real polarization identity, the complex one with coefficient
/// `complex_coeff`, and identity (one).
pub fn polarization_system(complex_coeff: f64) -> (Matrix3<f64>, SMatrix<f64, 3, 6>) {
    let a2b2 = 0.25;
    let two_a4 = 0.5;
    #[rustfmt::skip]
    let system = Matrix3::new(
        -8.0 * a2b2, 0.0, 12.0 * a2b2,
        0.0, -complex_coeff * a2b2, 12.0 * a2b2,
        1.0, 1.0, -1.0,
    );
    #[rustfmt::skip]
    let rhs = SMatrix::<f64, 3, 6>::from_row_slice(&[
        -two_a4, -two_a4, 1.0, 1.0, 0.0, 0.0,
        -two_a4, -two_a4, 0.0, 0.0, 1.0, 1.0,
        0.0, 0.0, 0.0, 0.0, 0.0, 0.0,
    ]);
    (system, rhs)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SectionalTriple {
    pub k_uv: f64,
    pub k_u_jv: f64,
    pub r_uju_vjv: f64,
}

/// Recovers `(K(u,v), K(u,Jv), R(u,Ju,v,Jv))` from six holomorphic sectional
/// curvatures by solving [`polarization_system`].
pub fn solve_sectional_from_h(r: &CurvatureTensor, u: &[f64], v: &[f64]) -> Result<SectionalTriple> {
    let s = r.space();
    check_unitary_quadruple(s, u, v)?;
    let c = std::f64::consts::FRAC_1_SQRT_2;
    let jv = s.apply_j(v);
    let points = [
        u.to_vec(),
        v.to_vec(),
        lincomb(c, u, c, v),
        lincomb(c, u, -c, v),
        lincomb(c, u, c, &jv),
        lincomb(c, u, -c, &jv),
    ];
    let mut h = [0.0; 6];
    for (slot, w) in h.iter_mut().zip(&points) {
        *slot = r.holomorphic_sectional(w)?;
    }
    let (system, rhs) = polarization_system(COMPLEX_POLARIZATION_COEFF);
    if system.determinant().abs() < 1e-12 {
        return Err(Error::IdentityInconsistency(
            "polarization system is singular".into(),
        ));
    }
    let b: Vector3<f64> = rhs * SMatrix::<f64, 6, 1>::from_row_slice(&h);
    let x = system
        .lu()
        .solve(&b)
        .ok_or_else(|| Error::IdentityInconsistency("LU solve failed".into()))?;
    Ok(SectionalTriple {
        k_uv: x[0],
        k_u_jv: x[1],
        r_uju_vjv: x[2],
    })
}

/// Rebuilds a tensor from its biquadratic `k(a, b) = R(a, b, a, b)`:
///
/// `24 R(x,y,z,t) = K(x+z,y+t) + K(x-z,y-t) - K(x+z,y-t) - K(x-z,y+t)
///                - K(x+t,y+z) - K(x-t,y-z) + K(x+t,y-z) + K(x-t,y+z)`.
pub fn reconstruct_from_sectional<F>(k: F, space: &HermitianSpace) -> CurvatureTensor
where
    F: Fn(&[f64], &[f64]) -> f64,
{
    let d = space.dim();
    let mut entries = vec![0.0; d.pow(4)];
    let e: Vec<Vec<f64>> = (0..d).map(|i| space.basis_vector(i)).collect();
    for i in 0..d {
        for j in 0..d {
            for kk in 0..d {
                for l in 0..d {
                    let (x, y, z, t) = (&e[i], &e[j], &e[kk], &e[l]);
                    let p = |a: &[f64], sa: f64, b: &[f64]| lincomb(1.0, a, sa, b);
                    let total = k(&p(x, 1.0, z), &p(y, 1.0, t)) + k(&p(x, -1.0, z), &p(y, -1.0, t))
                        - k(&p(x, 1.0, z), &p(y, -1.0, t))
                        - k(&p(x, -1.0, z), &p(y, 1.0, t))
                        - k(&p(x, 1.0, t), &p(y, 1.0, z))
                        - k(&p(x, -1.0, t), &p(y, -1.0, z))
                        + k(&p(x, 1.0, t), &p(y, -1.0, z))
                        + k(&p(x, -1.0, t), &p(y, 1.0, z));
                    entries[((i * d + j) * d + kk) * d + l] = total / 24.0;
                }
            }
        }
    }
    CurvatureTensor::from_entries(space, entries).expect("shape fixed by construction")
}
