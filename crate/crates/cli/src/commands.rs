use std::path::Path;

use conic_condition::cones::Cone;
use conic_condition::error::Error;
use conic_condition::measures::{
    dist_with, nu_bar_with, nu_with, odist_with, sigma_with, sym_with, theta_with, Budget,
    MeasureCertificate,
};
use conic_condition::oracle::{
    dist_to_illposed_estimate, rdist_estimate, verify_suite_with, Instance as SuiteInstance,
    OracleBudget, RdistEstimate,
};
use conic_condition::partition::{
    block_decompose_with, goldman_tucker, partition_measures_with, partition_precondition_with,
};
use conic_condition::renegar::{precondition_with, renegar_sandwich_with, LinearMap};
use serde_json::json;

use crate::instance::{generate, Instance, InstanceFile, NormsSpec};
use crate::report::{digest, matrix, vector, Entry, Report};
use crate::{CliError, Flags, GenArgs};

struct Loaded {
    bytes: Vec<u8>,
    inst: Instance,
}

fn load(path: &Path) -> Result<Loaded, CliError> {
    let bytes = std::fs::read(path)
        .map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))?;
    let text = std::str::from_utf8(&bytes)
        .map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))?;
    let inst = InstanceFile::parse(text)?.build()?;
    Ok(Loaded { bytes, inst })
}

fn budget(f: &Flags) -> Budget {
    let mut b = Budget::with_seed(f.seed);
    if let Some(s) = f.budget {
        b.samples = s;
    }
    b
}

fn oracle_budget(f: &Flags) -> OracleBudget {
    let mut b = OracleBudget::default();
    if let Some(s) = f.budget {
        b.subspace_samples = s;
    }
    b
}

fn start(command: &str, files: &[&Loaded], f: &Flags) -> Report {
    Report::new(
        command,
        digest(files.iter().map(|l| l.bytes.as_slice())),
        f.seed,
    )
}

fn finish(mut r: Report, f: &Flags) -> Report {
    r.flag_residuals(f.tol);
    r
}

/// Errors that mean "no method for this configuration" rather than a failure.
fn skippable(e: &Error) -> bool {
    matches!(
        e,
        Error::Unsupported(_)
            | Error::ApproximateOnly(_)
            | Error::NotSymmetric(_)
            | Error::UnsupportedNorm(_)
            | Error::NonPolyhedralNorm(_)
            | Error::DimensionTooLarge { .. }
    )
}

fn optional(
    r: &mut Report,
    name: &str,
    res: conic_condition::error::Result<MeasureCertificate>,
) -> Result<(), CliError> {
    match res {
        Ok(c) => r.add(name, Entry::measure(&c)),
        Err(e) if skippable(&e) => r.note(format!("{name} skipped: {e}")),
        Err(e) => return Err(CliError::from_core(e).context(name)),
    }
    Ok(())
}

fn need_map<'a>(inst: &'a Instance, command: &str) -> Result<&'a LinearMap, CliError> {
    inst.map
        .as_ref()
        .ok_or_else(|| CliError::Validation(format!("map: required by {command}")))
}

fn rdist_entry(e: &RdistEstimate, lower: f64, upper: f64) -> Entry {
    Entry::exact(json!(e.value), "Sampled", 0.0).with_certificate(json!({
        "side": e.side,
        "constructed": e.constructed,
        "flipped": e.flipped,
        "tried": e.tried,
        "bracket": [lower, upper],
    }))
}

pub fn measure(path: &Path, f: &Flags) -> Result<Report, CliError> {
    let ld = load(path)?;
    let Instance {
        cone: k,
        subspace: l,
        norms: np,
        ..
    } = &ld.inst;
    let b = budget(f);
    let mut r = start("measure", &[&ld], f);
    let nu = nu_with(l, k, np, &b).map_err(|e| CliError::from_core(e).context("nu"))?;
    r.add("nu", Entry::measure(&nu));
    let nb = nu_bar_with(l, k, np, &b).map_err(|e| CliError::from_core(e).context("nu_bar"))?;
    r.add("nu_bar", Entry::measure(&nb));
    optional(&mut r, "sigma", sigma_with(l, k, np, &b))?;
    optional(&mut r, "sym", sym_with(l, k, &np.primal, &b))?;
    optional(&mut r, "theta", theta_with(k, &b))?;
    Ok(finish(r, f))
}

pub fn dist(first: &Path, second: &Path, f: &Flags) -> Result<Report, CliError> {
    let a = load(first)?;
    let c = load(second)?;
    if a.inst.subspace.ambient_dim() != c.inst.subspace.ambient_dim() {
        return Err(CliError::Validation(format!(
            "n: {} has n = {}, {} has n = {}",
            first.display(),
            a.inst.subspace.ambient_dim(),
            second.display(),
            c.inst.subspace.ambient_dim()
        )));
    }
    let (l1, l2, np) = (&a.inst.subspace, &c.inst.subspace, &a.inst.norms);
    let b = budget(f);
    let mut r = start("dist", &[&a, &c], f);
    r.add("dist_12", Entry::measure(&dist_with(l1, l2, np, &b)?));
    r.add("dist_21", Entry::measure(&dist_with(l2, l1, np, &b)?));
    r.add("odist_12", Entry::measure(&odist_with(l1, l2, np, &b)?));
    r.add("odist_21", Entry::measure(&odist_with(l2, l1, np, &b)?));
    if a.inst.norms != c.inst.norms {
        r.note("norms taken from the first instance");
    }
    Ok(finish(r, f))
}

pub fn partition(path: &Path, f: &Flags) -> Result<Report, CliError> {
    let ld = load(path)?;
    let inst = &ld.inst;
    if !matches!(inst.cone, Cone::Orthant(_)) {
        return Err(CliError::Validation(
            "cone: partition requires an orthant".into(),
        ));
    }
    let b = budget(f);
    let l = &inst.subspace;
    let gt = goldman_tucker(l)?;
    let mut r = start("partition", &[&ld], f);
    let off_support =
        gt.n.iter()
            .map(|&i| gt.x_cert[i].abs())
            .chain(gt.b.iter().map(|&i| gt.y_cert[i].abs()))
            .fold(0.0f64, f64::max);
    let membership = l
        .complement()
        .project(&gt.x_cert)
        .norm()
        .max(l.project(&gt.y_cert).norm());
    r.add(
        "partition",
        Entry::exact(
            json!({"b": gt.b, "n": gt.n}),
            "LpExact",
            off_support.max(membership),
        )
        .with_certificate(json!({
            "x_cert": vector(&gt.x_cert),
            "y_cert": vector(&gt.y_cert),
        })),
    );
    match partition_measures_with(l, &inst.norms, &b) {
        Ok(pm) => {
            for (tag, blk) in [("b", &pm.b), ("n", &pm.n)] {
                if let Some(blk) = blk {
                    r.add(&format!("nu_{tag}"), Entry::measure(&blk.nu));
                    r.add(&format!("sigma_{tag}"), Entry::measure(&blk.sigma));
                }
            }
        }
        Err(e) if skippable(&e) => r.note(format!("block measures skipped: {e}")),
        Err(e) => return Err(CliError::from_core(e).context("block measures")),
    }
    if let Some(a) = &inst.map {
        let bd = block_decompose_with(a, &gt, &b)?;
        let shape = |m: &Option<nalgebra::DMatrix<f64>>| m.as_ref().map(|m| [m.nrows(), m.ncols()]);
        r.add(
            "block_decomposition",
            Entry::exact(
                json!({
                    "a_bb": shape(&bd.a_bb),
                    "a_nb": shape(&bd.a_nb),
                    "a_nn": shape(&bd.a_nn),
                }),
                "ClosedForm",
                bd.reconstruction_residual,
            )
            .with_certificate(json!({
                "domain_b": matrix(&bd.domain_b),
                "domain_n": matrix(&bd.domain_n),
            })),
        );
        for (tag, s) in [("b", &bd.sandwich_b), ("n", &bd.sandwich_n)] {
            if let Some(s) = s {
                r.add(
                    &format!("sandwich_{tag}"),
                    Entry::exact(json!([s.lower, s.upper]), "ClosedForm", 0.0)
                        .with_certificate(json!({"side": s.side, "op": s.op})),
                );
            }
        }
    }
    Ok(finish(r, f))
}

pub fn renegar(path: &Path, f: &Flags) -> Result<Report, CliError> {
    let ld = load(path)?;
    let a = need_map(&ld.inst, "renegar")?;
    let k = &ld.inst.cone;
    let s = renegar_sandwich_with(a, k, &budget(f))?;
    let mut r = start("renegar", &[&ld], f);
    let op_path =
        if a.norms.is_euclidean() && a.domain_norm == conic_condition::norms::NormSpec::l2() {
            "ClosedForm"
        } else {
            "Enumeration"
        };
    r.add("op_norm", Entry::exact(json!(s.op.norm), op_path, 0.0));
    if let Some(t) = s.op.tri_norm {
        r.add("tri_op_norm", Entry::exact(json!(t), op_path, 0.0));
    }
    r.add(
        "inverse_norm",
        Entry::exact(json!(s.op.inverse_norm), op_path, 0.0),
    );
    r.add("kappa", Entry::exact(json!(s.op.kappa), op_path, 0.0));
    let mut g = Entry::measure(&s.grassmann);
    g.certificate
        .get_or_insert_with(|| json!({}))
        .as_object_mut()
        .expect("object")
        .insert("side".into(), json!(s.side));
    r.add("grassmann", g);
    r.add(
        "rdist_bracket",
        Entry::exact(
            json!([s.lower, s.upper]),
            &format!("{:?}", s.grassmann.path),
            0.0,
        ),
    );
    let est = rdist_estimate(a, k, &oracle_budget(f), f.seed)?;
    if !s.contains(est.value, 1e-6) {
        r.note(format!(
            "rdist estimate {} lies outside [{}, {}]",
            est.value, s.lower, s.upper
        ));
    }
    r.add("rdist_estimate", rdist_entry(&est, s.lower, s.upper));
    Ok(finish(r, f))
}

pub fn precondition(path: &Path, f: &Flags) -> Result<Report, CliError> {
    let ld = load(path)?;
    let inst = &ld.inst;
    let a = match &inst.map {
        Some(a) => a.clone(),
        None => LinearMap::euclidean(inst.subspace.basis().clone())?,
    };
    let b = budget(f);
    let mut r = start("precondition", &[&ld], f);
    match precondition_with(&a, &inst.cone, &b) {
        Ok(p) => {
            r.add(
                "preconditioner",
                Entry::exact(vector(&p.x0), "ClosedForm", p.balance_residual).with_certificate(
                    json!({
                        "p": matrix(&p.p),
                        "r": matrix(&p.r),
                        "balanced": matrix(&p.balanced),
                    }),
                ),
            );
            let mut e = Entry::measure(&p.nu);
            e.certificate
                .get_or_insert_with(|| json!({}))
                .as_object_mut()
                .expect("object")
                .extend([
                    ("bound".into(), json!(p.bound)),
                    ("holds".into(), json!(p.holds)),
                ]);
            r.add("nu_preconditioned", e);
            if !p.holds {
                r.note("nu of the preconditioned subspace is below 1/sqrt(r)");
            }
        }
        Err(Error::InfeasibleSide) if matches!(inst.cone, Cone::Orthant(_)) => {
            r.note("image misses the open orthant: using the partition preconditioner");
            let p = partition_precondition_with(&a, &b)?;
            r.add(
                "partition_preconditioner",
                Entry::exact(vector(&p.d), "ClosedForm", 0.0).with_certificate(json!({
                    "r": matrix(&p.r),
                    "mapped": matrix(&p.mapped),
                    "same_partition": p.same_partition,
                    "holds": p.holds,
                })),
            );
            for (tag, blk) in [("b", &p.nu_b), ("n", &p.nu_n)] {
                if let Some((c, bound)) = blk {
                    let mut e = Entry::measure(c);
                    e.certificate
                        .get_or_insert_with(|| json!({}))
                        .as_object_mut()
                        .expect("object")
                        .insert("bound".into(), json!(bound));
                    r.add(&format!("nu_{tag}_preconditioned"), e);
                }
            }
        }
        Err(e) => return Err(e.into()),
    }
    Ok(finish(r, f))
}

pub fn certify(path: &Path, f: &Flags) -> Result<Report, CliError> {
    let ld = load(path)?;
    let inst = &ld.inst;
    let suite = SuiteInstance {
        cone: inst.cone.clone(),
        subspace: inst.subspace.clone(),
        norms: inst.norms.clone(),
        map: inst.map.clone(),
    };
    let mut ob = oracle_budget(f);
    if f.budget.is_none() {
        ob.subspace_samples = 200;
        ob.directions = 50;
    }
    let rep = verify_suite_with(&suite, f.seed, &ob);
    let mut r = start("certify", &[&ld], f);
    for c in &rep.checks {
        r.add(
            &c.name,
            Entry::exact(json!(c.pass), "Check", c.residual)
                .with_certificate(json!({"detail": c.detail})),
        );
        if !c.pass {
            r.note(format!("{} failed: {}", c.name, c.detail));
        }
    }
    r.add(
        "all_pass",
        Entry::exact(json!(rep.all_pass()), "Check", 0.0),
    );
    Ok(r)
}

pub fn oracle(path: &Path, f: &Flags) -> Result<Report, CliError> {
    let ld = load(path)?;
    let inst = &ld.inst;
    let ob = oracle_budget(f);
    let br = dist_to_illposed_estimate(&inst.subspace, &inst.cone, &inst.norms, &ob, f.seed)?;
    let mut r = start("oracle", &[&ld], f);
    r.add(
        "dist_to_illposed",
        Entry::exact(json!([br.lo, br.hi]), "Sampled", (br.lo - br.hi).max(0.0)).with_certificate(
            json!({
                "side": br.side,
                "measure": br.measure,
                "constructed": br.constructed,
                "sampled_min": br.sampled_min,
                "consistent": br.consistent,
            }),
        ),
    );
    if !br.consistent {
        r.note("dist bracket is inconsistent: lo exceeds hi by more than 1e-6");
    }
    if let Some(a) = &inst.map {
        let s = renegar_sandwich_with(a, &inst.cone, &budget(f))?;
        let est = rdist_estimate(a, &inst.cone, &ob, f.seed)?;
        r.add("rdist_estimate", rdist_entry(&est, s.lower, s.upper));
    }
    Ok(finish(r, f))
}

pub fn gen(args: &GenArgs, f: &Flags) -> Result<Option<String>, CliError> {
    let norms = NormsSpec {
        primal: args.primal.into(),
        tri: args.tri.into(),
    };
    let file = generate(f.seed, args.n, args.m, args.cone, norms, args.map)?;
    file.build()?;
    let text = file.to_json();
    match &args.out {
        None => Ok(Some(text)),
        Some(p) => {
            std::fs::write(p, &text)
                .map_err(|e| CliError::Validation(format!("{}: {e}", p.display())))?;
            Ok(None)
        }
    }
}
