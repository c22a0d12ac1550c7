//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any fails.

use kahler::chern::{self, chern_product, chern_ratio, enumerate_indices, space_form_ratio};
use kahler::curvature::{
    identity_one_residual, project_kahler, reconstruct_from_sectional, solve_sectional_from_h,
};
use kahler::experiments::{certify_constants, perturb, proof_constants, sweep, SweepConfig};
use kahler::pinching::{berger_bound_check, normalize_quarter, pinch, scale_report, ENVELOPE_SLACK};
use kahler::space::PairConstraint;
use kahler::{rng, ChernIndex, CurvatureTensor, HermitianSpace};
use std::process::Command;
use std::time::{Duration, Instant};

const RATIO_TOL: f64 = 1e-8;
const PINCH_TOL: f64 = 1e-6;
const IDENTITY_TOL: f64 = 1e-10;
const SOLVE_TOL: f64 = 1e-9;
const R0_FIXED_TOL: f64 = 1e-12;
const BERGER_TOL: f64 = 1e-8;
const BERGER_R0_TOL: f64 = 1e-10;
const INVARIANCE_TOL: f64 = 1e-10;
const IDENTITY_SAMPLES: u64 = 100;
const BERGER_TENSORS: u64 = 50;
const BERGER_SAMPLES: usize = 400;
const CERTIFY_SAMPLES: usize = 200;
const SEED: u64 = 20240601;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn idx(e: &[u32]) -> ChernIndex {
    ChernIndex::new(e.to_vec()).unwrap()
}

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn within(elapsed: Duration, limit: Duration, outcome: Outcome) -> Outcome {
    let timing = format!("{:.2}s / limit {}s", elapsed.as_secs_f64(), limit.as_secs());
    match outcome {
        Ok(d) if elapsed < limit => Ok(format!("{d}; {timing}")),
        Ok(d) => Err(format!("{d}; too slow: {timing}")),
        Err(d) => Err(format!("{d}; {timing}")),
    }
}

fn max_entry_diff(a: &CurvatureTensor, b: &CurvatureTensor) -> f64 {
    a.entries()
        .iter()
        .zip(b.entries())
        .fold(0.0, |m, (x, y)| m.max((x - y).abs()))
}

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let r0 = CurvatureTensor::r0(&HermitianSpace::new(2).unwrap());
    let ratio = chern_ratio(&r0, &idx(&[2, 0]), &idx(&[0, 1])).map_err(|e| e.to_string())?;
    let dev = (ratio - 3.0).abs();
    within(
        start.elapsed(),
        Duration::from_secs(1),
        check(dev < RATIO_TOL, format!("c1^2/c2 = {ratio:.15} (|dev| {dev:.1e})")),
    )
}

fn criterion_2() -> Outcome {
    let start = Instant::now();
    let r0 = CurvatureTensor::r0(&HermitianSpace::new(3).unwrap());
    let c3 = idx(&[0, 0, 1]);
    let cubic = chern_ratio(&r0, &idx(&[3, 0, 0]), &c3).map_err(|e| e.to_string())?;
    let mixed = chern_ratio(&r0, &idx(&[1, 1, 0]), &c3).map_err(|e| e.to_string())?;
    let formula = space_form_ratio(&idx(&[1, 1, 0]), &c3);
    let ok = (cubic - 16.0).abs() < RATIO_TOL
        && (mixed - 6.0).abs() < RATIO_TOL
        && (mixed - formula).abs() < RATIO_TOL;
    within(
        start.elapsed(),
        Duration::from_secs(10),
        check(ok, format!("c1^3/c3 = {cubic:.12}, c1c2/c3 = {mixed:.12} (space form {formula})")),
    )
}

fn criterion_3() -> Outcome {
    let start = Instant::now();
    let mut details = Vec::new();
    let mut ok = true;
    for n in [2, 3] {
        let space = HermitianSpace::new(n).unwrap();
        let r0 = CurvatureTensor::r0(&space);
        let report = pinch(&r0, 64, SEED).map_err(|e| e.to_string())?;
        let slack = ENVELOPE_SLACK * r0.frobenius_norm();
        let witnesses_agree = r0.sectional(&report.argmin_plane) == report.k_min
            && r0.sectional(&report.argmax_plane) == report.k_max;
        ok &= (report.k_min + 1.0).abs() < PINCH_TOL
            && (report.k_max + 0.25).abs() < PINCH_TOL
            && report.envelope_lo - slack <= report.k_min
            && report.k_max <= report.envelope_hi + slack
            && witnesses_agree
            && report.converged;
        details.push(format!(
            "n={n}: [{:.10}, {:.10}] in envelope [{:.6}, {:.6}]",
            report.k_min, report.k_max, report.envelope_lo, report.envelope_hi
        ));
    }
    within(start.elapsed(), Duration::from_secs(30), check(ok, details.join("; ")))
}

fn criterion_4() -> Outcome {
    let mut worst = [0.0f64; 5];
    for n in [2, 3] {
        let space = HermitianSpace::new(n).unwrap();
        for i in 0..IDENTITY_SAMPLES {
            let seed = rng::derive_seed(SEED, 1000 * n as u64 + i);
            let r = CurvatureTensor::random_kahler(&space, seed, 1.0).map_err(|e| e.to_string())?;
            let (u, v) = space
                .random_orthonormal_pair(seed ^ 1, PairConstraint::VPerpJu)
                .map_err(|e| e.to_string())?;
            worst[0] = worst[0].max(identity_one_residual(&r, &u, &v).unwrap().abs());

            let rebuilt = reconstruct_from_sectional(|a, b| r.biquadratic(a, b), &space);
            worst[1] = worst[1].max(max_entry_diff(&rebuilt, &r));

            let jv = space.apply_j(&v);
            let ju = space.apply_j(&u);
            let x = solve_sectional_from_h(&r, &u, &v).unwrap();
            worst[2] = worst[2]
                .max((x.k_uv - r.biquadratic(&u, &v)).abs())
                .max((x.k_u_jv - r.biquadratic(&u, &jv)).abs())
                .max((x.r_uju_vjv - r.eval(&u, &ju, &v, &jv)).abs());

            // projector on raw tables
            let mut g = rng::rng(seed ^ 2);
            let dim4 = space.dim().pow(4);
            let t = CurvatureTensor::from_entries(&space, rng::gaussian_vec(&mut g, dim4)).unwrap();
            let s = CurvatureTensor::from_entries(&space, rng::gaussian_vec(&mut g, dim4)).unwrap();
            let pt = project_kahler(&t).unwrap();
            let ps = project_kahler(&s).unwrap();
            worst[3] = worst[3].max(max_entry_diff(&project_kahler(&pt).unwrap(), &pt));
            let adjoint = (pt.inner(&s).unwrap() - t.inner(&ps).unwrap()).abs();
            worst[3] = worst[3].max(adjoint);
        }
        let r0 = CurvatureTensor::r0(&space);
        worst[4] = worst[4].max(max_entry_diff(&project_kahler(&r0).unwrap(), &r0));
    }
    let ok = worst[0] < IDENTITY_TOL
        && worst[1] < IDENTITY_TOL
        && worst[2] < SOLVE_TOL
        && worst[3] < IDENTITY_TOL
        && worst[4] < R0_FIXED_TOL;
    check(
        ok,
        format!(
            "identity one {:.1e}, 24-term {:.1e}, solve {:.1e}, projector {:.1e}, fixes R0 {:.1e}",
            worst[0], worst[1], worst[2], worst[3], worst[4]
        ),
    )
}

fn criterion_5() -> Outcome {
    let mut worst_violation = f64::NEG_INFINITY;
    for i in 0..BERGER_TENSORS {
        let n = 2 + (i % 2) as usize;
        let space = HermitianSpace::new(n).unwrap();
        let t = 0.02 + 0.3 * (i as f64) / BERGER_TENSORS as f64;
        let seed = rng::derive_seed(SEED, 500 + i);
        let r = perturb(&space, t, seed).map_err(|e| e.to_string())?;
        let report = pinch(&r, 64, seed).map_err(|e| e.to_string())?;
        if !report.converged {
            return Err(format!("pinching did not converge for tensor {i}"));
        }
        let normalized = normalize_quarter(&r, &report).map_err(|e| e.to_string())?;
        let scaled = scale_report(&report, normalized.scale);
        let berger = berger_bound_check(&normalized.tensor, &scaled, BERGER_SAMPLES, seed)
            .map_err(|e| e.to_string())?;
        worst_violation = worst_violation.max(berger.max_violation);
    }
    let space = HermitianSpace::new(2).unwrap();
    let r0 = CurvatureTensor::r0(&space);
    let (u, v) = space.random_orthonormal_pair(SEED, PairConstraint::VPerpJu).unwrap();
    let attained = r0.eval(&u, &space.apply_j(&u), &v, &space.apply_j(&v)).abs();
    let report = pinch(&r0, 64, SEED).map_err(|e| e.to_string())?;
    let bound = 2.0 / 3.0 * (-report.k_min - 0.25);
    let ok = worst_violation <= BERGER_TOL
        && (attained - 0.5).abs() < BERGER_R0_TOL
        && (bound - 0.5).abs() < BERGER_R0_TOL;
    check(
        ok,
        format!(
            "max violation {worst_violation:.2e} over {BERGER_TENSORS} tensors; R0 attains |R(u,Ju,v,Jv)| = {attained:.12}"
        ),
    )
}

fn criterion_6() -> Outcome {
    let start = Instant::now();
    let result = sweep(&SweepConfig::default_sweep(SEED)).map_err(|e| e.to_string())?;
    let agg = &result.aggregates;
    let zero_at_0 = agg[0].t == 0.0 && agg[0].max_ratio_dev == 0.0 && agg[0].max_frobenius_dist == 0.0;
    let nondecreasing = agg.windows(2).all(|w| {
        w[1].max_ratio_dev >= w[0].max_ratio_dev && w[1].max_frobenius_dist >= w[0].max_frobenius_dist
    });
    let summary: Vec<String> = agg
        .iter()
        .map(|a| format!("t={}: {:.2e}/{:.2e}", a.t, a.max_ratio_dev, a.max_frobenius_dist))
        .collect();
    within(
        start.elapsed(),
        Duration::from_secs(600),
        check(
            zero_at_0 && nondecreasing,
            format!(
                "max ratio dev / max |R-R0|: {}; excluded {}",
                summary.join(", "),
                result.excluded
            ),
        ),
    )
}

fn criterion_7() -> Outcome {
    let chain = proof_constants(0.1, 2).map_err(|e| e.to_string())?;
    let relations = chain.delta > 0.0
        && chain.delta_1 == chain.eta / 4.0
        && chain.delta == (chain.eta / 3.0).min(chain.delta_1);
    let report = certify_constants(&chain, CERTIFY_SAMPLES, SEED, 64).map_err(|e| e.to_string())?;
    check(
        relations && report.counterexamples == 0,
        format!(
            "delta = {:.6e}, eta = {:.6e}; {} samples with defect <= {:.3e}, {} counterexamples (max |ratio-3| {:.2e})",
            chain.delta, chain.eta, report.samples, report.max_defect, report.counterexamples, report.max_ratio_dev
        ),
    )
}

fn criterion_8() -> Outcome {
    let mut worst = 0.0f64;
    for n in [2, 3] {
        let space = HermitianSpace::new(n).unwrap();
        let pairs = chern::index_pairs(n);
        let indices = enumerate_indices(n);
        for k in 0..3u64 {
            let r = perturb(&space, 0.1 * k as f64, rng::derive_seed(SEED, 900 + k)).unwrap();
            let base: Vec<f64> = pairs
                .iter()
                .map(|(i, j)| chern_ratio(&r, i, j).unwrap())
                .collect();
            let gammas = |t: &CurvatureTensor, frame: &[Vec<f64>]| -> Vec<f64> {
                indices
                    .iter()
                    .map(|i| chern_product(t, i, frame).unwrap().gamma)
                    .collect()
            };
            let ratios_of = |g: &[f64]| -> Vec<f64> {
                pairs
                    .iter()
                    .map(|(i, j)| {
                        let a = indices.iter().position(|x| x == i).unwrap();
                        let b = indices.iter().position(|x| x == j).unwrap();
                        g[a] / g[b]
                    })
                    .collect()
            };
            for lambda in [0.5, 2.0, 10.0] {
                let scaled = ratios_of(&gammas(&r.scale(lambda), &space.standard_frame()));
                worst = base.iter().zip(&scaled).fold(worst, |m, (a, b)| m.max((a - b).abs()));
            }
            for f in 0..5u64 {
                let frame = space.random_unitary_frame(rng::derive_seed(SEED, 950 + f));
                let resampled = ratios_of(&gammas(&r, &frame));
                worst = base.iter().zip(&resampled).fold(worst, |m, (a, b)| m.max((a - b).abs()));
            }
        }
    }
    check(worst < INVARIANCE_TOL, format!("max ratio change {worst:.2e}"))
}

fn criterion_9() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let r0 = dir.path().join("r0.json");
    let config = dir.path().join("sweep.toml");
    std::fs::write(
        &config,
        "n = 2\nt_values = [0.0, 0.05]\nsamples_per_t = 6\nseed = 17\nrestarts = 16\n",
    )
    .map_err(|e| e.to_string())?;
    let (r0s, cfg) = (r0.to_str().unwrap(), config.to_str().unwrap());
    let commands: Vec<Vec<&str>> = vec![
        vec!["r0", "--n", "2"],
        vec!["r0", "--n", "2", "--out", r0s],
        vec!["validate", r0s],
        vec!["pinch", r0s, "--seed", "5"],
        vec!["chern", r0s, "--all"],
        vec!["identities", "--n", "2", "--samples", "10", "--seed", "5"],
        vec!["sweep", "--config", cfg],
        vec!["constants", "--epsilon", "0.1", "--n", "2"],
        vec!["constants", "--epsilon", "0.1", "--n", "2", "--certify", "5", "--seed", "5"],
    ];
    for args in &commands {
        let run = || {
            Command::new(env!("CARGO_BIN_EXE_kahler"))
                .args(args)
                .output()
                .map_err(|e| e.to_string())
        };
        let (a, b) = (run()?, run()?);
        if a.status.code() != Some(0) || a.stdout != b.stdout || a.stdout.is_empty() {
            return Err(format!("`kahler {}` differs between runs", args.join(" ")));
        }
    }
    Ok(format!("{} commands byte-identical across reruns", commands.len()))
}

fn main() {
    let criteria: [Criterion; 9] = [
        ("Chern ratio c1^2/c2 of R0 (n=2)", criterion_1),
        ("Chern ratios c1^3/c3, c1c2/c3 of R0 (n=3)", criterion_2),
        ("pinching of R0 (n=2,3)", criterion_3),
        ("identity suite", criterion_4),
        ("Berger bound", criterion_5),
        ("perturbation sweep trend", criterion_6),
        ("proof-constant certification", criterion_7),
        ("scale and frame invariance", criterion_8),
        ("CLI reproducibility", criterion_9),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        match run() {
            Ok(detail) => println!("criterion {}: PASS  {name}: {detail}", i + 1),
            Err(detail) => {
                failed += 1;
                println!("criterion {}: FAIL  {name}: {detail}", i + 1);
            }
        }
    }
    println!("acceptance: {} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
