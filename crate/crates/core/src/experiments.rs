//! Perturbation sweeps around `R0` and the explicit constant chain
//! `epsilon -> eta -> delta_1 -> delta`.

use crate::chern::{self, index_pairs, reference_constants, ChernIndex};
use crate::curvature::{
    polarization_system, project_kahler, CurvatureTensor, COMPLEX_POLARIZATION_COEFF,
};
use crate::error::{Error, Result};
use crate::pinching::{self, default_restarts, hol_extremes, normalize_quarter};
use crate::rng;
use crate::space::{dot, lincomb, HermitianSpace};
use crate::tensor_file::format_f64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Sweep quantities below this magnitude are reported as exactly zero.
pub const ZERO_FLUSH: f64 = 1e-12;
/// Largest tolerated fraction of non-converged samples in a sweep.
pub const MAX_EXCLUDED_FRACTION: f64 = 0.05;

fn flush(x: f64) -> f64 {
    if x.abs() < ZERO_FLUSH {
        0.0
    } else {
        x
    }
}

/// `project_kahler(R0 + t S)` with `S` a unit-norm random Kähler tensor.
pub fn perturb(space: &HermitianSpace, t: f64, seed: u64) -> Result<CurvatureTensor> {
    if !(t >= 0.0) || !t.is_finite() {
        return Err(Error::Precondition(format!("perturbation size {t} must be >= 0")));
    }
    let r0 = CurvatureTensor::r0(space);
    if t == 0.0 {
        return Ok(r0);
    }
    let direction = CurvatureTensor::random_kahler(space, seed, 1.0)?;
    project_kahler(&r0.add(&direction.scale(t))?)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub n: usize,
    pub t_values: Vec<f64>,
    pub samples_per_t: usize,
    pub seed: u64,
    #[serde(default)]
    pub restarts: Option<usize>,
}

impl SweepConfig {
    /// The reference sweep: `n = 2`, five perturbation sizes, 200 samples each.
    pub fn default_sweep(seed: u64) -> Self {
        Self {
            n: 2,
            t_values: vec![0.0, 0.0125, 0.025, 0.05, 0.1],
            samples_per_t: 200,
            seed,
            restarts: None,
        }
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Format(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::InvalidDimension(0));
        }
        if self.t_values.is_empty() || self.t_values.iter().any(|t| !(*t >= 0.0) || !t.is_finite()) {
            return Err(Error::Precondition("t_values must be a nonempty list of t >= 0".into()));
        }
        if self.samples_per_t == 0 {
            return Err(Error::Precondition("samples_per_t must be at least 1".into()));
        }
        if self.restarts == Some(0) {
            return Err(Error::Precondition("restarts must be at least 1".into()));
        }
        Ok(())
    }

    pub fn restarts(&self) -> usize {
        self.restarts.unwrap_or_else(|| default_restarts(self.n))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRecord {
    pub t: f64,
    pub seed: u64,
    pub delta: f64,
    pub frobenius_dist: f64,
    pub h_dev: f64,
    /// `|ratio(R) - ratio(R0)|` for each pair of [`index_pairs`], in order.
    pub ratio_devs: Vec<f64>,
    pub ratio_dev_max: f64,
    pub converged: bool,
    pub anomaly: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepAggregate {
    pub t: f64,
    pub samples: usize,
    pub excluded: usize,
    pub max_delta: f64,
    pub max_frobenius_dist: f64,
    pub max_h_dev: f64,
    pub max_ratio_dev: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepResult {
    pub n: usize,
    pub index_pairs: Vec<(ChernIndex, ChernIndex)>,
    pub records: Vec<SweepRecord>,
    pub aggregates: Vec<SweepAggregate>,
    pub excluded: usize,
}

/// Pinching, normalization and Chern-ratio deviations for one tensor.
fn measure(
    r: &CurvatureTensor,
    t: f64,
    seed: u64,
    restarts: usize,
    pairs: &[(ChernIndex, ChernIndex)],
) -> Result<SweepRecord> {
    let space = r.space();
    let report = pinching::pinch(r, restarts, rng::derive_seed(seed, 1))?;
    let normalized = normalize_quarter(r, &report)?;
    let hol = hol_extremes(&normalized.tensor, restarts, rng::derive_seed(seed, 2))?;
    let reference = reference_constants(space.n())?;
    let forms = chern::chern_forms(&normalized.tensor, &space.standard_frame())?;
    let ratio_devs = pairs
        .iter()
        .map(|(i, j)| {
            let ratio = chern::ratio_from_forms(space, &forms, i, j)?;
            let target = reference.ratio(i, j).expect("indices come from enumerate_indices");
            Ok(flush((ratio - target).abs()))
        })
        .collect::<Result<Vec<f64>>>()?;
    let r0 = CurvatureTensor::r0(space);
    Ok(SweepRecord {
        t,
        seed,
        delta: flush(normalized.delta),
        frobenius_dist: flush(normalized.tensor.distance(&r0)?),
        h_dev: flush((hol.h_min + 1.0).abs().max((hol.h_max + 1.0).abs())),
        ratio_dev_max: ratio_devs.iter().copied().fold(0.0, f64::max),
        ratio_devs,
        converged: report.converged && hol.converged,
        anomaly: normalized.anomaly,
    })
}

/// Runs every `(t, sample)` of the configuration. Sample `i` uses the same
/// perturbation direction for every `t`, so each sample traces a ray from `R0`.
pub fn sweep(config: &SweepConfig) -> Result<SweepResult> {
    config.validate()?;
    let space = HermitianSpace::new(config.n)?;
    let pairs = index_pairs(config.n);
    let restarts = config.restarts();
    let mut t_values = config.t_values.clone();
    t_values.sort_by(|a, b| a.partial_cmp(b).expect("validated finite"));
    let jobs: Vec<(f64, u64)> = t_values
        .iter()
        .flat_map(|&t| (0..config.samples_per_t).map(move |i| (t, rng::derive_seed(config.seed, i as u64))))
        .collect();
    let records = jobs
        .par_iter()
        .map(|&(t, seed)| {
            let r = perturb(&space, t, seed)?;
            measure(&r, t, seed, restarts, &pairs)
        })
        .collect::<Result<Vec<SweepRecord>>>()?;
    let mut records = records;
    records.sort_by(|a, b| {
        a.t.partial_cmp(&b.t)
            .expect("finite")
            .then(a.seed.cmp(&b.seed))
    });
    let excluded = records.iter().filter(|r| !r.converged).count();
    if excluded as f64 > MAX_EXCLUDED_FRACTION * records.len() as f64 {
        return Err(Error::ExcessiveNonConvergence {
            excluded,
            total: records.len(),
        });
    }
    let mut aggregates = Vec::new();
    for &t in t_values.iter() {
        if aggregates.last().is_some_and(|a: &SweepAggregate| a.t == t) {
            continue;
        }
        let rows: Vec<&SweepRecord> = records.iter().filter(|r| r.t == t).collect();
        let kept: Vec<&&SweepRecord> = rows.iter().filter(|r| r.converged).collect();
        let max = |f: fn(&SweepRecord) -> f64| kept.iter().map(|r| f(r)).fold(0.0, f64::max);
        aggregates.push(SweepAggregate {
            t,
            samples: rows.len(),
            excluded: rows.len() - kept.len(),
            max_delta: max(|r| r.delta),
            max_frobenius_dist: max(|r| r.frobenius_dist),
            max_h_dev: max(|r| r.h_dev),
            max_ratio_dev: max(|r| r.ratio_dev_max),
        });
    }
    Ok(SweepResult {
        n: config.n,
        index_pairs: pairs,
        records,
        aggregates,
        excluded,
    })
}

/// CSV with header `t,seed,delta,frobenius_dist,h_dev,ratio_dev_max,converged`,
/// rows sorted by `t` then `seed`.
pub fn emit_csv(records: &[SweepRecord]) -> Result<String> {
    if records.is_empty() {
        return Err(Error::EmptyInput("no sweep records".into()));
    }
    let mut sorted: Vec<&SweepRecord> = records.iter().collect();
    sorted.sort_by(|a, b| a.t.partial_cmp(&b.t).expect("finite").then(a.seed.cmp(&b.seed)));
    let mut out = String::from("t,seed,delta,frobenius_dist,h_dev,ratio_dev_max,converged\n");
    for r in sorted {
        out.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            format_f64(r.t),
            r.seed,
            format_f64(r.delta),
            format_f64(r.frobenius_dist),
            format_f64(r.h_dev),
            format_f64(r.ratio_dev_max),
            r.converged
        ));
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConstantChain {
    pub epsilon: f64,
    pub n: usize,
    /// Bound `C` with `max_{ijkl} |D_ijkl| <= C sup_{|u|=1} |H_D(u)|` for Kähler `D`.
    pub lemma_bound: f64,
    pub eta: f64,
    pub delta_1: f64,
    pub delta: f64,
    pub epsilon_1: f64,
}

/// Coefficients expressing `K(u, v)` through the six quartics
/// `H(u), H(v), H((u+v)/r2), H((u-v)/r2), H((u+Jv)/r2), H((u-Jv)/r2)`.
pub fn sectional_from_h_coefficients() -> [f64; 6] {
    let (system, rhs) = polarization_system(COMPLEX_POLARIZATION_COEFF);
    let inverse = system.try_inverse().expect("polarization system is regular");
    let row = (inverse * rhs).row(0).into_owned();
    std::array::from_fn(|i| row[i])
}

/// Accumulates absolute coefficients through the 24-term formula and the
/// six-point expression for `K`. Every `H` is taken at its actual argument,
/// whose length enters as `|w|^4`.
pub fn lemma_coefficient_bound(space: &HermitianSpace) -> f64 {
    let coeffs = sectional_from_h_coefficients();
    let c = std::f64::consts::FRAC_1_SQRT_2;
    let d = space.dim();
    let e: Vec<Vec<f64>> = (0..d).map(|i| space.basis_vector(i)).collect();
    let k_bound = |a: &[f64], b: &[f64]| -> f64 {
        let (aa, bb) = (dot(a, a), dot(b, b));
        if aa == 0.0 || bb == 0.0 {
            return 0.0;
        }
        let ua: Vec<f64> = a.iter().map(|x| x / aa.sqrt()).collect();
        let ub: Vec<f64> = b.iter().map(|x| x / bb.sqrt()).collect();
        let jb = space.apply_j(&ub);
        let points = [
            ua.clone(),
            ub.clone(),
            lincomb(c, &ua, c, &ub),
            lincomb(c, &ua, -c, &ub),
            lincomb(c, &ua, c, &jb),
            lincomb(c, &ua, -c, &jb),
        ];
        let per_unit: f64 = coeffs
            .iter()
            .zip(&points)
            .map(|(k, w)| k.abs() * dot(w, w).powi(2))
            .sum();
        aa * bb * per_unit
    };
    let mut worst: f64 = 0.0;
    for i in 0..d {
        for j in 0..d {
            for k in 0..d {
                for l in 0..d {
                    let (x, y, z, t) = (&e[i], &e[j], &e[k], &e[l]);
                    let terms = [
                        (lincomb(1.0, x, 1.0, z), lincomb(1.0, y, 1.0, t)),
                        (lincomb(1.0, x, -1.0, z), lincomb(1.0, y, -1.0, t)),
                        (lincomb(1.0, x, 1.0, z), lincomb(1.0, y, -1.0, t)),
                        (lincomb(1.0, x, -1.0, z), lincomb(1.0, y, 1.0, t)),
                        (lincomb(1.0, x, 1.0, t), lincomb(1.0, y, 1.0, z)),
                        (lincomb(1.0, x, -1.0, t), lincomb(1.0, y, -1.0, z)),
                        (lincomb(1.0, x, 1.0, t), lincomb(1.0, y, -1.0, z)),
                        (lincomb(1.0, x, -1.0, t), lincomb(1.0, y, 1.0, z)),
                    ];
                    let total: f64 = terms.iter().map(|(a, b)| k_bound(a, b)).sum::<f64>() / 24.0;
                    worst = worst.max(total);
                }
            }
        }
    }
    worst
}

/// Supremum of `epsilon_1` with `(a - e1)/(b + e1) > a/b - eps` and
/// `(a + e1)/(b - e1) < a/b + eps` for `a, b > 0`.
pub fn epsilon_1_for(a: f64, b: f64, eps: f64) -> f64 {
    let r = a / b;
    let upper = eps * b / (1.0 + r + eps);
    let lower_den = 1.0 + r - eps;
    if lower_den > 0.0 {
        upper.min(eps * b / lower_den)
    } else {
        upper
    }
}

/// The explicit chain: `eta = eps / ((2n)^4 C)`, `delta_1 = eta / 4`,
/// `delta = min(eta / 3, delta_1)`, and `epsilon_1` minimized over all index pairs.
pub fn proof_constants(epsilon: f64, n: usize) -> Result<ConstantChain> {
    if !(epsilon > 0.0) || !epsilon.is_finite() {
        return Err(Error::Precondition(format!("epsilon = {epsilon} must be positive")));
    }
    if n < 2 {
        return Err(Error::DimensionTooSmall("the constant chain needs n >= 2".into()));
    }
    let space = HermitianSpace::new(n)?;
    let lemma_bound = lemma_coefficient_bound(&space);
    let eta = epsilon / ((2 * n).pow(4) as f64 * lemma_bound);
    // (2/3)(3/4 + delta_1) <= 1/2 + eta/6
    let delta_1 = eta / 4.0;
    let delta = (eta / 3.0).min(delta_1);
    let reference = reference_constants(n)?;
    let epsilon_1 = index_pairs(n)
        .iter()
        .map(|(i, j)| {
            let a = reference.gamma(i).expect("enumerated").abs();
            let b = reference.gamma(j).expect("enumerated").abs();
            epsilon_1_for(a, b, epsilon)
        })
        .fold(f64::INFINITY, f64::min);
    Ok(ConstantChain {
        epsilon,
        n,
        lemma_bound,
        eta,
        delta_1,
        delta,
        epsilon_1,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CertificationReport {
    pub epsilon: f64,
    pub delta: f64,
    pub samples: usize,
    pub counterexamples: usize,
    pub max_defect: f64,
    pub max_ratio_dev: f64,
    pub non_converged: usize,
}

/// Samples tensors whose certified pinching defect is below `chain.delta`
/// and counts Chern-ratio deviations of at least `chain.epsilon`.
///
/// For each sample the perturbation size starts at `delta` and is halved
/// until the measured defect drops below `delta`.
pub fn certify_constants(
    chain: &ConstantChain,
    samples: usize,
    seed: u64,
    restarts: usize,
) -> Result<CertificationReport> {
    if samples == 0 {
        return Err(Error::EmptyInput("no certification samples".into()));
    }
    let space = HermitianSpace::new(chain.n)?;
    let pairs = index_pairs(chain.n);
    let records = (0..samples)
        .into_par_iter()
        .map(|i| {
            let s = rng::derive_seed(seed, i as u64);
            let mut t = chain.delta;
            for _ in 0..60 {
                let r = perturb(&space, t, s)?;
                let rec = measure(&r, t, s, restarts, &pairs)?;
                if rec.delta < chain.delta {
                    return Ok(Some(rec));
                }
                t *= 0.5;
            }
            Ok(None)
        })
        .collect::<Result<Vec<Option<SweepRecord>>>>()?;
    let accepted: Vec<SweepRecord> = records.into_iter().flatten().collect();
    if accepted.len() < samples {
        return Err(Error::DegenerateSample(format!(
            "only {} of {samples} samples reached the target defect",
            accepted.len()
        )));
    }
    Ok(CertificationReport {
        epsilon: chain.epsilon,
        delta: chain.delta,
        samples,
        counterexamples: accepted
            .iter()
            .filter(|r| r.ratio_devs.iter().any(|d| *d >= chain.epsilon))
            .count(),
        max_defect: accepted.iter().map(|r| r.delta).fold(0.0, f64::max),
        max_ratio_dev: accepted.iter().map(|r| r.ratio_dev_max).fold(0.0, f64::max),
        non_converged: accepted.iter().filter(|r| !r.converged).count(),
    })
}
