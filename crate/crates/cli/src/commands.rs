use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::Path;

use anyhow::{bail, Context, Result};
use edm_coherence::completion::{observe, recovery_error, MaskMode};
use edm_coherence::experiments::{Claim, McReport, SweepReport, SUCCESS_REL_ERROR};
use edm_coherence::io::{self, fmt_sig12};
use edm_coherence::rng::ALGORITHM_ID;
use edm_coherence::theory::{self, TheoryParams};
use edm_coherence::{
    build_edm, coherence_qr_path, coherence_svd_path, make_distribution, run_chernoff_mc,
    run_coherence_mc, run_completion_sweep, sample_coordinates, sample_mask, section4_checks,
    svt_complete, CompletionResult, DistributionSpec, EdmMatrix, McConfig, MomentSet, NodeCloud,
    SvtParams, SweepConfig,
};
use serde_json::{json, Value};

use crate::args::*;
use crate::output::{print_json, to_json};

/// What the process should exit with after printing its report.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Ok,
    ClaimFailed,
}

fn dist_spec(args: &DistArgs) -> DistributionSpec {
    match args.dist.unwrap_or(DistKind::Uniform) {
        DistKind::Uniform => DistributionSpec::uniform(args.a, args.b),
        DistKind::TruncatedNormal => {
            DistributionSpec::truncated_normal(args.tn_mean, args.tn_std, args.a, args.b)
        }
        DistKind::BetaScaled => {
            DistributionSpec::beta_scaled(args.beta_alpha, args.beta_beta, args.a, args.b)
        }
    }
}

fn mask_mode(m: ModeArg) -> MaskMode {
    match m {
        ModeArg::AllEntries => MaskMode::AllEntries,
        ModeArg::SymmetricOffdiag => MaskMode::SymmetricOffdiag,
    }
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).with_context(|| format!("creating {}", parent.display()))?;
    }
    Ok(BufWriter::new(
        File::create(path).with_context(|| format!("creating {}", path.display()))?,
    ))
}

fn open(path: &Path) -> Result<File> {
    File::open(path).with_context(|| format!("opening {}", path.display()))
}

fn check_n(n: usize) -> Result<()> {
    if n < 2 {
        bail!("N must be ≥ 2");
    }
    Ok(())
}

fn check_d(d: usize) -> Result<()> {
    if d == 0 {
        bail!("d must be ≥ 1");
    }
    Ok(())
}

pub fn gen(a: &GenArgs) -> Result<Status> {
    check_n(a.n)?;
    check_d(a.d)?;
    let dist = make_distribution(dist_spec(&a.dist))?;
    let cloud = sample_coordinates(&dist, a.n, a.d, a.seed)?;
    let edm = build_edm(&cloud)?;
    fs::create_dir_all(&a.out).with_context(|| format!("creating {}", a.out.display()))?;
    let cloud_path = a.out.join("cloud.csv");
    let edm_path = a.out.join("edm.csv");
    let mut w = create(&cloud_path)?;
    io::write_cloud_csv(&mut w, &cloud)?;
    w.flush()?;
    let mut w = create(&edm_path)?;
    io::write_matrix_csv(&mut w, &edm.entries, None)?;
    w.flush()?;
    print_json(&to_json(&json!({
        "cloud_csv": cloud_path.display().to_string(),
        "edm_csv": edm_path.display().to_string(),
        "N": a.n,
        "d": a.d,
        "seed": a.seed,
        "dist": cloud.dist_id,
        "rng": ALGORITHM_ID,
        "moments": dist.moments,
    }))?)?;
    Ok(Status::Ok)
}

pub fn bounds(a: &BoundsArgs) -> Result<Status> {
    check_d(a.d)?;
    let (moments, source) = match (a.m2, a.m3, a.m4, a.c) {
        (Some(m2), Some(m3), Some(m4), Some(c)) => {
            (MomentSet::new(m2, m3, m4, c)?, "explicit".to_string())
        }
        (None, None, None, None) => {
            let dist = make_distribution(dist_spec(&a.dist))?;
            (dist.moments, dist.id())
        }
        _ => bail!("give either --dist or all of --m2 --m3 --m4 --c"),
    };
    let params = TheoryParams {
        moments,
        d: a.d,
        t: a.t,
        gamma: a.gamma,
        beta: a.beta,
        big_c: a.big_c,
    };
    let b = theory::evaluate(&params, a.n)?;
    let mut v = to_json(&b)?;
    v["input"] = to_json(&json!({
        "source": source,
        "moments": moments,
        "d": a.d,
        "t": a.t,
        "gamma": a.gamma,
        "beta": a.beta,
        "C": a.big_c,
        "log": "natural",
    }))?;
    print_json(&v)?;
    Ok(Status::Ok)
}

pub fn coherence(a: &CoherenceArgs) -> Result<Status> {
    let cloud: NodeCloud = match &a.cloud {
        Some(path) => io::read_cloud_csv(open(path)?)
            .with_context(|| format!("reading {}", path.display()))?,
        None => {
            let (Some(n), Some(d)) = (a.n, a.d) else {
                bail!("give --cloud or both --n and --d");
            };
            check_n(n)?;
            check_d(d)?;
            sample_coordinates(&make_distribution(dist_spec(&a.dist))?, n, d, a.seed)?
        }
    };
    check_n(cloud.n())?;
    let edm: EdmMatrix = build_edm(&cloud)?;
    let mut out = json!({
        "N": cloud.n(),
        "d": cloud.d(),
        "seed": cloud.seed,
        "dist": cloud.dist_id,
    });
    let mut mus = Vec::new();
    if matches!(a.path, PathChoice::Qr | PathChoice::Both) {
        match coherence_qr_path(&cloud) {
            Ok(rep) => {
                mus.push(rep.mu_u);
                out["qr"] = to_json(&rep)?;
            }
            Err(e) => out["qr_error"] = Value::from(e.to_string()),
        }
    }
    if matches!(a.path, PathChoice::Svd | PathChoice::Both) {
        let rep = coherence_svd_path(&edm, cloud.d())?;
        mus.push(rep.mu_u);
        out["svd"] = to_json(&rep)?;
    }
    if let [q, s] = mus[..] {
        out["abs_diff"] = to_json(&(q - s).abs())?;
    }
    print_json(&out)?;
    Ok(Status::Ok)
}

fn write_trials_csv(path: &Path, rep: &McReport) -> Result<()> {
    let mut w = create(path)?;
    writeln!(w, "trial,seed,mu_U,mu1_emp,sigma_min_sq_A,rank,failure")?;
    let opt = |v: Option<f64>| v.map(fmt_sig12).unwrap_or_default();
    for r in &rep.rows {
        writeln!(
            w,
            "{},{},{},{},{},{},{}",
            r.trial,
            r.seed,
            opt(r.mu_u),
            opt(r.mu1_emp),
            opt(r.sigma_min_sq_a),
            r.rank.map(|k| k.to_string()).unwrap_or_default(),
            u8::from(r.failure)
        )?;
    }
    w.flush()?;
    Ok(())
}

pub fn verify(a: &VerifyArgs) -> Result<Status> {
    check_d(a.d)?;
    let spec = dist_spec(&a.dist);
    let n = match a.n {
        Some(n) => n,
        None => {
            let dist = make_distribution(spec)?;
            let theta = theory::theta(&dist.moments, a.d)?;
            theory::min_nodes(theta, a.d, a.t, a.gamma)? as usize
        }
    };
    check_n(n)?;
    let cfg = McConfig {
        dist: spec,
        d: a.d,
        n,
        trials: a.trials,
        t: a.t,
        gamma: a.gamma,
        master_seed: a.seed,
    };
    let rep = match a.claim {
        ClaimArg::Chernoff => run_chernoff_mc(&cfg)?,
        ClaimArg::Coherence => run_coherence_mc(&cfg)?,
    };
    if let Some(path) = &a.csv {
        write_trials_csv(path, &rep)?;
    }
    let mut v = to_json(&rep)?;
    if let Value::Object(map) = &mut v {
        map.remove("rows");
        map.insert("rng".into(), Value::from(ALGORITHM_ID));
        if let Some(path) = &a.csv {
            map.insert("csv".into(), Value::from(path.display().to_string()));
        }
    }
    print_json(&v)?;
    debug_assert!(matches!(rep.claim, Claim::Chernoff | Claim::Coherence));
    Ok(if rep.claim_holds {
        Status::Ok
    } else {
        Status::ClaimFailed
    })
}

fn svt_params(a: &SvtArgs, n: usize, m: usize) -> SvtParams {
    let mut p = SvtParams::standard(n, m, a.d);
    if let Some(tau) = a.tau {
        p.tau = tau;
    }
    if let Some(step) = a.step {
        p.step = step;
    }
    p.max_iter = a.max_iter;
    p.tol = a.tol;
    p
}

pub fn complete(a: &CompleteArgs) -> Result<Status> {
    let mode = mask_mode(a.mode);
    let (mask, values, truth) = match (&a.input, &a.observations) {
        (Some(path), None) => {
            let truth = io::read_matrix_csv(open(path)?)
                .with_context(|| format!("reading {}", path.display()))?;
            if truth.nrows() != truth.ncols() {
                bail!(
                    "{} is {}x{}, not square",
                    path.display(),
                    truth.nrows(),
                    truth.ncols()
                );
            }
            let m = a.m.context("--m is required with --in")?;
            let mask = sample_mask(truth.nrows(), m, mode, a.seed)?;
            let values = observe(&truth, &mask);
            (mask, values, Some(truth))
        }
        (None, Some(path)) => {
            let n = a.n.context("--n is required with --observations")?;
            let (mask, values) = io::read_observations_csv(open(path)?, n, mode)
                .with_context(|| format!("reading {}", path.display()))?;
            (mask, values, None)
        }
        _ => bail!("give exactly one of --in and --observations"),
    };
    if let Some(path) = &a.mask_out {
        let mut w = create(path)?;
        io::write_observations_csv(&mut w, &mask, &values)?;
        w.flush()?;
    }
    let n = mask.n;
    let params = svt_params(&a.svt, n, mask.m);
    let mut res: CompletionResult = match svt_complete(&values, &mask, &params) {
        Ok(r) => r,
        Err(e @ edm_coherence::Error::Divergence { .. }) => {
            print_json(&to_json(
                &json!({ "error": e.to_string(), "diverged": true }),
            )?)?;
            return Ok(Status::ClaimFailed);
        }
        Err(e) => return Err(e.into()),
    };
    if let Some(t) = &truth {
        res.rel_error = Some(recovery_error(t, &res.estimate)?);
    }
    if let Some(path) = &a.out {
        let mut w = create(path)?;
        io::write_matrix_csv(&mut w, &res.estimate, None)?;
        w.flush()?;
    }
    print_json(&to_json(&json!({
        "N": n,
        "m": mask.m,
        "mode": mask.mode,
        "seed": a.seed,
        "params": params,
        "iterations": res.iterations,
        "converged": res.converged,
        "final_residual": res.final_residual(),
        "rel_error": res.rel_error,
        "success": res.rel_error.map(|e| e <= SUCCESS_REL_ERROR),
        "rank": res.rank,
        "residual_history": res.residual_history,
    }))?)?;
    Ok(Status::Ok)
}

fn write_sweep_csv(path: &Path, rep: &SweepReport) -> Result<()> {
    let mut w = create(path)?;
    writeln!(
        w,
        "m,seed_index,instance_seed,mask_seed,rel_error,iterations,converged,success"
    )?;
    for r in &rep.rows {
        writeln!(
            w,
            "{},{},{},{},{},{},{},{}",
            r.m,
            r.seed_index,
            r.instance_seed,
            r.mask_seed,
            r.rel_error.map(fmt_sig12).unwrap_or_default(),
            r.iterations,
            u8::from(r.converged),
            u8::from(r.success)
        )?;
    }
    w.flush()?;
    Ok(())
}

pub fn sweep(a: &SweepArgs) -> Result<Status> {
    check_n(a.n)?;
    check_d(a.d)?;
    let cfg = SweepConfig {
        dist: dist_spec(&a.dist),
        d: a.d,
        n: a.n,
        m_grid: a.m_grid.clone(),
        seeds: a.seeds,
        mode: mask_mode(a.mode),
        master_seed: a.seed,
        max_iter: a.max_iter,
        tau: a.tau,
    };
    let rep = run_completion_sweep(&cfg)?;
    if let Some(path) = &a.csv {
        write_sweep_csv(path, &rep)?;
    }
    print_json(&to_json(&json!({
        "config": rep.config,
        "points": rep.points,
        "inversions": rep.inversions(),
        "success_threshold": SUCCESS_REL_ERROR,
    }))?)?;
    Ok(Status::Ok)
}

pub fn section4(_: &Section4Args) -> Result<Status> {
    let rep = section4_checks()?;
    let holds = rep.gap_d2 > 0.2 && rep.not_psd && rep.sign_flip.difference <= 1e-12;
    let mut v = to_json(&rep)?;
    v["checks_pass"] = Value::from(holds);
    print_json(&v)?;
    Ok(if holds {
        Status::Ok
    } else {
        Status::ClaimFailed
    })
}
