//! Sectional-curvature extremes over 2-planes and holomorphic-sectional
//! extremes over the unit sphere.
//!
//! Both searches are multistart projected-gradient descents. Planes are kept
//! as orthonormal pairs `(u, v)`; after each step the pair is
//! re-orthonormalized, so no chart on the Grassmannian is needed. Every
//! report carries the extreme eigenvalues of the curvature operator on
//! bivectors, which bound all sectional curvatures from outside.

use crate::curvature::{CurvatureTensor, TwoPlane};
use crate::error::{Error, Result};
use crate::rng;
use crate::space::{dot, gram_schmidt, lincomb, normalized, HermitianSpace, PairConstraint};
use nalgebra::{DMatrix, SymmetricEigen};
use rayon::prelude::*;
use serde::Serialize;

pub const GRADIENT_TOL: f64 = 1e-10;
pub const MAX_ITERATIONS: usize = 10_000;
/// Agreement required among the best tenth of restarts.
pub const STABILITY_TOL: f64 = 1e-8;
pub const ENVELOPE_SLACK: f64 = 1e-9;

/// Default number of restarts: 64 for `n <= 3`, 256 beyond.
pub fn default_restarts(n: usize) -> usize {
    if n <= 3 {
        64
    } else {
        256
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PinchReport {
    pub k_min: f64,
    pub k_max: f64,
    pub argmin_plane: TwoPlane,
    pub argmax_plane: TwoPlane,
    pub envelope_lo: f64,
    pub envelope_hi: f64,
    pub restarts: usize,
    pub converged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HolReport {
    pub h_min: f64,
    pub h_max: f64,
    pub argmin_u: Vec<f64>,
    pub argmax_u: Vec<f64>,
    pub restarts: usize,
    pub converged: bool,
}

/// The symmetric matrix `R[(i,j),(k,l)]` over index pairs `i < j`, `k < l`.
///
/// With bivector coordinates `b_ij = u_i v_j - u_j v_i`, an orthonormal pair
/// has `|b| = 1` and `b^T M b = R(u, v, u, v)`.
pub fn curvature_operator(r: &CurvatureTensor) -> DMatrix<f64> {
    let d = r.dim();
    let pairs: Vec<(usize, usize)> = (0..d)
        .flat_map(|i| ((i + 1)..d).map(move |j| (i, j)))
        .collect();
    let m = pairs.len();
    DMatrix::from_fn(m, m, |a, b| {
        let (i, j) = pairs[a];
        let (k, l) = pairs[b];
        0.5 * (r.get(i, j, k, l) + r.get(k, l, i, j))
    })
}

/// Extreme eigenvalues of the curvature operator.
pub fn curvature_operator_envelope(r: &CurvatureTensor) -> (f64, f64) {
    let eig = SymmetricEigen::new(curvature_operator(r));
    let lo = eig.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = eig.eigenvalues.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    (lo, hi)
}

/// `A[i][k] = sum_{j,l} R_ijkl v_j v_l`, so that `R(u,v,u,v) = u^T A u`.
fn contract_outer_slots(r: &CurvatureTensor, v: &[f64]) -> Vec<f64> {
    let d = r.dim();
    let mut a = vec![0.0; d * d];
    for i in 0..d {
        for j in 0..d {
            if v[j] == 0.0 {
                continue;
            }
            for k in 0..d {
                let start = r.index(i, j, k, 0);
                let row = &r.entries()[start..start + d];
                a[i * d + k] += v[j] * dot(row, v);
            }
        }
    }
    a
}

/// `B[j][l] = sum_{i,k} R_ijkl u_i u_k`, so that `R(u,v,u,v) = v^T B v`.
fn contract_inner_slots(r: &CurvatureTensor, u: &[f64]) -> Vec<f64> {
    let d = r.dim();
    let mut b = vec![0.0; d * d];
    for i in 0..d {
        if u[i] == 0.0 {
            continue;
        }
        for j in 0..d {
            for k in 0..d {
                let w = u[i] * u[k];
                if w == 0.0 {
                    continue;
                }
                let start = r.index(i, j, k, 0);
                for l in 0..d {
                    b[j * d + l] += w * r.entries()[start + l];
                }
            }
        }
    }
    b
}

/// `(M + M^T) x` for a row-major square `M`.
fn symmetric_apply(m: &[f64], x: &[f64]) -> Vec<f64> {
    let d = x.len();
    (0..d)
        .map(|i| (0..d).map(|k| (m[i * d + k] + m[k * d + i]) * x[k]).sum())
        .collect()
}

/// Euclidean gradient of the Gram-normalized sectional curvature
/// `f(u, v) = R(u,v,u,v) / (|u|^2 |v|^2 - <u,v>^2)`.
pub fn plane_gradient(r: &CurvatureTensor, u: &[f64], v: &[f64]) -> (f64, Vec<f64>, Vec<f64>) {
    let a = contract_outer_slots(r, v);
    let b = contract_inner_slots(r, u);
    let d = u.len();
    let num: f64 = (0..d).map(|i| u[i] * (0..d).map(|k| a[i * d + k] * u[k]).sum::<f64>()).sum();
    let (uu, vv, uv) = (dot(u, u), dot(v, v), dot(u, v));
    let gram = uu * vv - uv * uv;
    let dnum_u = symmetric_apply(&a, u);
    let dnum_v = symmetric_apply(&b, v);
    let dgram_u = lincomb(2.0 * vv, u, -2.0 * uv, v);
    let dgram_v = lincomb(2.0 * uu, v, -2.0 * uv, u);
    let f = num / gram;
    let gu = lincomb(1.0 / gram, &dnum_u, -f / gram, &dgram_u);
    let gv = lincomb(1.0 / gram, &dnum_v, -f / gram, &dgram_v);
    (f, gu, gv)
}

/// Euclidean gradient of `H(u) = R(u,Ju,u,Ju) / |u|^4`.
pub fn holomorphic_gradient(r: &CurvatureTensor, u: &[f64]) -> (f64, Vec<f64>) {
    let space = r.space();
    let d = r.dim();
    let w = space.apply_j(u);
    // partial derivatives of R(x1, x2, x3, x4) in each slot at (u, w, u, w)
    let mut slot = [vec![0.0; d], vec![0.0; d], vec![0.0; d], vec![0.0; d]];
    let args = [u, &w[..], u, &w[..]];
    let mut quartic = 0.0;
    for i in 0..d {
        for j in 0..d {
            for k in 0..d {
                for l in 0..d {
                    let c = r.get(i, j, k, l);
                    if c == 0.0 {
                        continue;
                    }
                    slot[0][i] += c * args[1][j] * args[2][k] * args[3][l];
                    slot[1][j] += c * args[0][i] * args[2][k] * args[3][l];
                    slot[2][k] += c * args[0][i] * args[1][j] * args[3][l];
                    slot[3][l] += c * args[0][i] * args[1][j] * args[2][k];
                    quartic += c * args[0][i] * args[1][j] * args[2][k] * args[3][l];
                }
            }
        }
    }
    // slots 2 and 4 depend on u through J; J^T = -J
    let pull = |g: &[f64]| -> Vec<f64> { space.apply_j(g).iter().map(|x| -x).collect() };
    let (p1, p3) = (pull(&slot[1]), pull(&slot[3]));
    let grad_q: Vec<f64> = (0..d).map(|i| slot[0][i] + slot[2][i] + p1[i] + p3[i]).collect();
    let uu = dot(u, u);
    let h = quartic / (uu * uu);
    let grad = lincomb(1.0 / (uu * uu), &grad_q, -4.0 * h / uu, u);
    (h, grad)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Goal {
    Minimize,
    Maximize,
}

impl Goal {
    fn sign(self) -> f64 {
        match self {
            Goal::Minimize => 1.0,
            Goal::Maximize => -1.0,
        }
    }
}

#[derive(Debug, Clone)]
struct Descent {
    value: f64,
    point: Vec<Vec<f64>>,
}

/// Generic Riemannian descent on orthonormal frames of `k` vectors.
///
/// `eval` returns the objective and Euclidean gradients. Gradients are
/// projected onto the orthogonal complement of the current span and every
/// step is re-orthonormalized by Gram-Schmidt. Trial steps are
/// Barzilai-Borwein steps, safeguarded by a nonmonotone Armijo test against
/// the worst of the last few values.
fn descend<E>(start: Vec<Vec<f64>>, goal: Goal, scale: f64, eval: E) -> Descent
where
    E: Fn(&[Vec<f64>]) -> (f64, Vec<Vec<f64>>),
{
    const MEMORY: usize = 8;
    let sigma = goal.sign();
    let project = |point: &[Vec<f64>], grads: Vec<Vec<f64>>| -> Vec<Vec<f64>> {
        grads
            .into_iter()
            .map(|mut g| {
                crate::space::orthogonalize(&mut g, point);
                crate::space::orthogonalize(&mut g, point);
                g
            })
            .collect()
    };
    let pair_dot = |a: &[Vec<f64>], b: &[Vec<f64>]| -> f64 { a.iter().zip(b).map(|(x, y)| dot(x, y)).sum() };
    let base_step = 1.0 / scale.max(1e-300);
    let mut point = start;
    let (mut value, grads) = eval(&point);
    let mut grads = project(&point, grads);
    let mut best = Descent {
        value,
        point: point.clone(),
    };
    let mut recent = std::collections::VecDeque::from([sigma * value]);
    let mut step = base_step;
    for _ in 0..MAX_ITERATIONS {
        let gnorm2 = pair_dot(&grads, &grads);
        if gnorm2.sqrt() < GRADIENT_TOL {
            break;
        }
        let reference = recent.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut accepted = None;
        for _ in 0..80 {
            let trial: Vec<Vec<f64>> = point
                .iter()
                .zip(&grads)
                .map(|(x, g)| lincomb(1.0, x, -sigma * step, g))
                .collect();
            let Some(trial) = gram_schmidt(&trial) else {
                step *= 0.5;
                continue;
            };
            let (tv, tg) = eval(&trial);
            let tg = project(&trial, tg);
            let decrease = reference - sigma * tv;
            let predicted = 1e-4 * step * gnorm2;
            // Once the predicted decrease is below the rounding of f, the
            // Armijo test is noise; a shrinking gradient is accepted instead.
            let rounding = 16.0 * f64::EPSILON * value.abs().max(scale);
            let shrinks = || pair_dot(&tg, &tg) < gnorm2;
            if decrease >= predicted
                || (step * gnorm2 < rounding && sigma * (value - tv) >= -rounding && shrinks())
            {
                accepted = Some((trial, tv, tg));
                break;
            }
            step *= 0.5;
        }
        let Some((trial, tv, tg)) = accepted else {
            break;
        };
        let s: Vec<Vec<f64>> = trial.iter().zip(&point).map(|(a, b)| lincomb(1.0, a, -1.0, b)).collect();
        let y: Vec<Vec<f64>> = tg.iter().zip(&grads).map(|(a, b)| lincomb(sigma, a, -sigma, b)).collect();
        let (ss, sy) = (pair_dot(&s, &s), pair_dot(&s, &y));
        step = if sy > 0.0 {
            (ss / sy).clamp(1e-6 * base_step, 1e6 * base_step)
        } else {
            2.0 * step
        };
        point = trial;
        value = tv;
        grads = tg;
        if sigma * value < sigma * best.value {
            best = Descent {
                value,
                point: point.clone(),
            };
        }
        recent.push_back(sigma * value);
        if recent.len() > MEMORY {
            recent.pop_front();
        }
    }
    best
}

fn random_plane(space: &HermitianSpace, seed: u64) -> Vec<Vec<f64>> {
    let (u, v) = space
        .random_orthonormal_pair(seed, PairConstraint::None)
        .expect("unconstrained pairs always exist");
    vec![u, v]
}

/// Best restart (lowest index wins ties) and whether the best tenth agree.
fn reduce(results: &[Descent], goal: Goal, tol: f64) -> (usize, bool) {
    let sigma = goal.sign();
    let mut best = 0;
    for (i, r) in results.iter().enumerate() {
        if sigma * r.value < sigma * results[best].value {
            best = i;
        }
    }
    let mut values: Vec<f64> = results.iter().map(|r| sigma * r.value).collect();
    values.sort_by(|a, b| a.partial_cmp(b).expect("finite objective"));
    let top = results.len().div_ceil(10);
    let stable = values[..top.max(1)]
        .iter()
        .all(|v| (v - values[0]).abs() <= tol);
    (best, stable)
}

fn tensor_scale(r: &CurvatureTensor) -> f64 {
    r.frobenius_norm()
}

/// Multistart search for the extreme sectional curvatures.
pub fn pinch(r: &CurvatureTensor, restarts: usize, seed: u64) -> Result<PinchReport> {
    if restarts == 0 {
        return Err(Error::Precondition("restarts must be at least 1".into()));
    }
    r.require_certified()?;
    let space = r.space();
    let scale = tensor_scale(r);
    let eval = |p: &[Vec<f64>]| {
        let (f, gu, gv) = plane_gradient(r, &p[0], &p[1]);
        (f, vec![gu, gv])
    };
    let runs: Vec<(Descent, Descent)> = (0..restarts)
        .into_par_iter()
        .map(|i| {
            let start = random_plane(space, rng::derive_seed(seed, i as u64));
            (
                descend(start.clone(), Goal::Minimize, scale, eval),
                descend(start, Goal::Maximize, scale, eval),
            )
        })
        .collect();
    let (mins, maxs): (Vec<Descent>, Vec<Descent>) = runs.into_iter().unzip();
    let tol = STABILITY_TOL * scale.max(1.0);
    let (imin, stable_min) = reduce(&mins, Goal::Minimize, tol);
    let (imax, stable_max) = reduce(&maxs, Goal::Maximize, tol);
    let (envelope_lo, envelope_hi) = curvature_operator_envelope(r);
    let witness = |d: &Descent| TwoPlane::new(d.point[0].clone(), d.point[1].clone());
    let argmin_plane = witness(&mins[imin])?;
    let argmax_plane = witness(&maxs[imax])?;
    let k_min = r.sectional(&argmin_plane);
    let k_max = r.sectional(&argmax_plane);
    let slack = ENVELOPE_SLACK * scale.max(1.0);
    let inside = envelope_lo - slack <= k_min && k_max <= envelope_hi + slack;
    Ok(PinchReport {
        k_min,
        k_max,
        argmin_plane,
        argmax_plane,
        envelope_lo,
        envelope_hi,
        restarts,
        converged: stable_min && stable_max && inside,
    })
}

/// Multistart search for the extreme holomorphic sectional curvatures.
pub fn hol_extremes(r: &CurvatureTensor, restarts: usize, seed: u64) -> Result<HolReport> {
    if restarts == 0 {
        return Err(Error::Precondition("restarts must be at least 1".into()));
    }
    r.require_certified()?;
    let space = r.space();
    let scale = tensor_scale(r);
    let eval = |p: &[Vec<f64>]| {
        let (h, g) = holomorphic_gradient(r, &p[0]);
        (h, vec![g])
    };
    let runs: Vec<(Descent, Descent)> = (0..restarts)
        .into_par_iter()
        .map(|i| {
            let mut g = rng::rng(rng::derive_seed(seed, i as u64));
            let start = vec![space.random_unit_vector(&mut g)];
            (
                descend(start.clone(), Goal::Minimize, scale, eval),
                descend(start, Goal::Maximize, scale, eval),
            )
        })
        .collect();
    let (mins, maxs): (Vec<Descent>, Vec<Descent>) = runs.into_iter().unzip();
    let tol = STABILITY_TOL * scale.max(1.0);
    let (imin, stable_min) = reduce(&mins, Goal::Minimize, tol);
    let (imax, stable_max) = reduce(&maxs, Goal::Maximize, tol);
    let argmin_u = normalized(&mins[imin].point[0]).ok_or(Error::ZeroVector)?;
    let argmax_u = normalized(&maxs[imax].point[0]).ok_or(Error::ZeroVector)?;
    Ok(HolReport {
        h_min: r.holomorphic_sectional(&argmin_u)?,
        h_max: r.holomorphic_sectional(&argmax_u)?,
        argmin_u,
        argmax_u,
        restarts,
        converged: stable_min && stable_max,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BergerCheck {
    /// `alpha = -k_min` of the supplied report.
    pub alpha: f64,
    /// `(2/3)(alpha - 1/4)`.
    pub bound: f64,
    pub max_abs_component: f64,
    /// `max |R(X,Y,Z,W)| - bound` over the sampled orthonormal quadruples.
    pub max_violation: f64,
    /// Whether the report satisfies `k_max <= -1/4` (the estimate's hypothesis).
    pub pinched: bool,
    pub samples: usize,
}

/// Samples orthonormal quadruples and compares `|R(X,Y,Z,W)|` against
/// Berger's bound `(2/3)(alpha - 1/4)` for a tensor pinched in `[-alpha, -1/4]`.
///
/// Half of the samples are generic orthonormal quadruples (evaluated in the
/// three distinct slot pairings), the other half are unitary quadruples
/// `{u, Ju, v, Jv}`, where `R0` attains the bound.
pub fn berger_bound_check(
    r: &CurvatureTensor,
    report: &PinchReport,
    samples: usize,
    seed: u64,
) -> Result<BergerCheck> {
    let space = r.space();
    if space.n() < 2 {
        return Err(Error::DimensionTooSmall(
            "orthonormal quadruples need n >= 2".into(),
        ));
    }
    if samples == 0 {
        return Err(Error::EmptyInput("no samples".into()));
    }
    let alpha = -report.k_min;
    let bound = 2.0 / 3.0 * (alpha - 0.25);
    let worst = (0..samples)
        .into_par_iter()
        .map(|i| {
            let s = rng::derive_seed(seed, i as u64);
            if i % 2 == 0 {
                let mut g = rng::rng(s);
                let raw: Vec<Vec<f64>> = (0..4).map(|_| rng::gaussian_vec(&mut g, space.dim())).collect();
                match gram_schmidt(&raw) {
                    Some(q) => [
                        r.eval(&q[0], &q[1], &q[2], &q[3]),
                        r.eval(&q[0], &q[2], &q[1], &q[3]),
                        r.eval(&q[0], &q[3], &q[1], &q[2]),
                    ]
                    .iter()
                    .fold(0.0f64, |m, x| m.max(x.abs())),
                    None => 0.0,
                }
            } else {
                let (u, v) = space
                    .random_orthonormal_pair(s, PairConstraint::VPerpJu)
                    .expect("n >= 2 checked");
                let (ju, jv) = (space.apply_j(&u), space.apply_j(&v));
                r.eval(&u, &ju, &v, &jv).abs()
            }
        })
        .reduce(|| 0.0, f64::max);
    Ok(BergerCheck {
        alpha,
        bound,
        max_abs_component: worst,
        max_violation: worst - bound,
        pinched: report.k_max <= -0.25 + 1e-9,
        samples,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct Normalized {
    pub tensor: CurvatureTensor,
    /// `lambda = -1 / (4 k_max)`.
    pub scale: f64,
    /// Pinching defect `-lambda k_min - 1`.
    pub delta: f64,
    pub k_min: f64,
    pub k_max: f64,
    /// Set when `delta < 0`, i.e. better than quarter pinching.
    pub anomaly: bool,
}

/// Rescales so that `k_max = -1/4` and reports the defect `delta` with `k_min = -1 - delta`.
pub fn normalize_quarter(r: &CurvatureTensor, report: &PinchReport) -> Result<Normalized> {
    if !(report.k_max < 0.0) {
        return Err(Error::NotNegativelyCurved(report.k_max));
    }
    let scale = -1.0 / (4.0 * report.k_max);
    let k_min = scale * report.k_min;
    let delta = -k_min - 1.0;
    Ok(Normalized {
        tensor: r.scale(scale),
        scale,
        delta,
        k_min,
        k_max: -0.25,
        anomaly: delta < -1e-9,
    })
}

/// Rescales a report by `lambda > 0`; witnesses are unchanged.
pub fn scale_report(report: &PinchReport, lambda: f64) -> PinchReport {
    PinchReport {
        k_min: lambda * report.k_min,
        k_max: lambda * report.k_max,
        envelope_lo: lambda * report.envelope_lo,
        envelope_hi: lambda * report.envelope_hi,
        ..report.clone()
    }
}
