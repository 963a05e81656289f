//! One function per command. Each returns the summary, the violated invariants and extra files.

use crate::input::{
    decorate, parse_domain, parse_epsilon_values, parse_field, parse_field_document, read_file,
};
use crate::{canonical_json, Common, JobError, Outcome};
use hessfield::domain::{Domain, FieldDoc, FieldDocument, MatrixField, ToleranceField};
use hessfield::linalg::{classify_bh, vec_norm, Matrix, C64};
use hessfield::operators::{operator_reduce as run_operator_reduce, OperatorField};
use hessfield::projections::{projection_reduce, trivial_summand, ProjectionField};
use hessfield::reduction::{
    check_triple, hessenberg_reduce_default, hessenberg_reduce_dim1, hessenberg_reduce_dim3,
    hessenberg_summary, struc_decompose, QMode, ReductionResult,
};
use hessfield::spectra::{separate_dim2, separate_dim4};
use hessfield::Error;
use serde_json::{json, Value};
use std::fmt::Write as _;
use std::path::Path;

type JobResult = Result<Outcome, JobError>;

const DEFAULT_EPS: f64 = 0.1;

fn load(c: &Common) -> Result<(Domain, MatrixField), JobError> {
    let (domain, field) = match &c.input {
        Some(path) => {
            let text =
                read_file(path).map_err(|e| JobError::Io(format!("{}: {e}", path.display())))?;
            parse_field_document(&text)?
        }
        None => {
            let d = c
                .domain
                .as_deref()
                .ok_or_else(|| Error::Malformed("--domain or --input is required".into()))?;
            let f = c
                .field
                .as_deref()
                .ok_or_else(|| Error::Malformed("--field or --input is required".into()))?;
            let domain = parse_domain(d)?;
            let field = parse_field(f, &domain, c.n, c.seed)?;
            (domain, field)
        }
    };
    if c.copies == 0 {
        return Err(Error::Malformed("--copies must be at least 1".into()).into());
    }
    if !(c.tolerance_scale > 0.0) {
        return Err(Error::Malformed("--tolerance-scale must be positive".into()).into());
    }
    let field = decorate(field, c.copies, c.pad);
    Ok((domain, field))
}

fn tolerance(c: &Common, domain: &Domain, default: f64) -> Result<ToleranceField, JobError> {
    match &c.epsilon_file {
        Some(path) => {
            let text =
                read_file(path).map_err(|e| JobError::Io(format!("{}: {e}", path.display())))?;
            Ok(parse_epsilon_values(&text, domain)?)
        }
        None => Ok(ToleranceField::constant(
            domain,
            c.epsilon.unwrap_or(default),
        )?),
    }
}

fn to_value<T: serde::Serialize>(x: &T) -> Value {
    serde_json::to_value(x).expect("report types always serialize")
}

fn field_doc(domain: &Domain, field: &MatrixField) -> Value {
    to_value(&FieldDocument::from_parts(domain, field).field)
}

fn document(domain: &Domain, field: &MatrixField) -> String {
    canonical_json(&to_value(&FieldDocument::from_parts(domain, field)))
}

fn field_from_doc(v: &Value, domain: &Domain, what: &str) -> Result<MatrixField, JobError> {
    let doc: FieldDoc = serde_json::from_value(v.clone())
        .map_err(|e| Error::Malformed(format!("claims field {what:?}: {e}")))?;
    let n = doc.n;
    let mut values = Vec::with_capacity(doc.values.len());
    for (v, row) in doc.values.into_iter().enumerate() {
        if row.len() != n * n {
            return Err(Error::Malformed(format!(
                "claims field {what:?}, vertex {v}: expected {} entries",
                n * n
            ))
            .into());
        }
        values.push(Matrix::from_row_major(
            n,
            n,
            row.into_iter().map(|[re, im]| C64::new(re, im)).collect(),
        ));
    }
    let f = MatrixField::new(n, values)?;
    f.check_domain(domain)?;
    Ok(f)
}

/// Drops bulky per-simplex arrays from certificates.
fn certificates_summary(certs: &[hessfield::avoidance::AvoidanceCertificate]) -> Value {
    Value::Array(
        certs
            .iter()
            .map(|c| json!({ "global_margin": c.global_margin, "seed": c.seed, "retries": c.retries }))
            .collect(),
    )
}

fn per_vertex_budget(
    f: &MatrixField,
    g: &MatrixField,
    eps: &ToleranceField,
    out: &mut Vec<String>,
) -> f64 {
    let mut max: f64 = 0.0;
    for (v, (a, b)) in f.values.iter().zip(&g.values).enumerate() {
        let d = (b - a).spectral_norm();
        max = max.max(d);
        if !(d < eps.values[v]) {
            out.push(format!(
                "vertex {v}: perturbation {d:e} not below eps {:e}",
                eps.values[v]
            ));
        }
    }
    max
}

fn mesh_summary(domain: &Domain, n: usize) -> Value {
    json!({ "dim": domain.dim, "vertices": domain.vertex_count(), "simplices": domain.simplices.len(), "n": n })
}

// ---------------------------------------------------------------------------

pub fn reduce(c: &Common, mode: &str) -> JobResult {
    let (domain, f) = load(c)?;
    let eps = tolerance(c, &domain, DEFAULT_EPS)?;
    let res: ReductionResult = match mode {
        "summary" => hessenberg_summary(&domain, &f, &eps, c.seed)?,
        "default" => hessenberg_reduce_default(&domain, &f, &eps, c.seed)?,
        "dim3" => hessenberg_reduce_dim3(&domain, &f, &eps, c.seed)?,
        "dim1" => hessenberg_reduce_dim1(&domain, &f, &eps, c.seed)?,
        _ => return Err(Error::Malformed(format!("unknown reduction mode {mode:?}")).into()),
    };
    let n = f.n;
    let k = res.k_achieved;
    let checks = check_triple(&f, &res.g, &res.u, &res.h, k, &eps, c.tolerance_scale);
    let subdiag_min = res
        .descriptors
        .iter()
        .filter_map(|d| d.subdiag_min)
        .fold(f64::INFINITY, f64::min);
    let zero_max = res
        .descriptors
        .iter()
        .map(|d| d.zero_max)
        .fold(0.0, f64::max);
    let summary = json!({
        "mesh": mesh_summary(&domain, n),
        "descriptor": format!("H_{n}^{k}"),
        "k": k,
        "c": res.c,
        "epsilon_min": eps.min(),
        "perturbation_max": res.perturbation_max,
        "subdiag_min": subdiag_min,
        "zero_max": zero_max,
        "householder_residual": res.householder_residual,
        "u_continuity": to_value(&res.u_audit),
        "h_continuity": to_value(&res.h_audit),
        "certificates": certificates_summary(&res.certificates),
        "checks": {
            "unitarity_max": checks.unitarity_max,
            "hermitian_perturbation_max": checks.hermitian_perturbation_max,
            "consistency_max": checks.consistency_max,
            "budget_ok": checks.budget_ok,
            "h_member": checks.h_member,
        },
    });
    let claims = json!({
        "kind": "reduce",
        "k": k,
        "epsilon": eps.values,
        "g": field_doc(&domain, &res.g),
        "u": field_doc(&domain, &res.u),
        "h": field_doc(&domain, &res.h),
    });
    Ok(Outcome {
        summary,
        violations: checks.violations,
        files: vec![
            ("field.json".into(), document(&domain, &f)),
            ("claims.json".into(), canonical_json(&claims)),
        ],
    })
}

pub fn separate(c: &Common) -> JobResult {
    let (domain, f) = load(c)?;
    let eps = tolerance(c, &domain, DEFAULT_EPS)?;
    let n = f.n;
    let (g, rep) = if domain.dim <= 2 {
        separate_dim2(&domain, &f, &eps, c.seed)?
    } else {
        separate_dim4(&domain, &f, &eps, c.seed)?
    };
    let mut violations = Vec::new();
    per_vertex_budget(&f, &g, &eps, &mut violations);
    let required = if domain.dim <= 2 {
        n
    } else {
        n.saturating_sub(1)
    };
    if rep.distinct_count_min < required {
        violations.push(format!(
            "only {} distinct eigenvalues at some vertex, need {required}",
            rep.distinct_count_min
        ));
    }
    if domain.dim <= 2 && n > 1 && !(rep.min_gap > 0.0) {
        violations.push(format!(
            "minimum eigenvalue gap {:e} is not positive",
            rep.min_gap
        ));
    }
    if domain.dim > 2 && rep.clusters_gt1_max > 1 {
        violations.push(format!(
            "{} multiple clusters at some vertex, at most 1 allowed",
            rep.clusters_gt1_max
        ));
    }
    let summary = json!({
        "mesh": mesh_summary(&domain, n),
        "separation_regime": if domain.dim <= 2 { "total" } else { "one-collision" },
        "distinct_count_min": rep.distinct_count_min,
        "max_multiplicity": rep.max_multiplicity,
        "clusters_gt1_max": rep.clusters_gt1_max,
        "min_gap": rep.min_gap,
        "perturbation_max": rep.perturbation_max,
        "hermitian_residual_max": rep.hermitian_residual_max,
        "epsilon_min": eps.min(),
        "certificates": certificates_summary(&rep.certificates),
    });
    Ok(Outcome {
        summary,
        violations,
        files: vec![
            ("eigenvalues.csv".into(), rep.to_csv()),
            ("separated.json".into(), document(&domain, &g)),
        ],
    })
}

pub fn struc(c: &Common, q_mode: &str) -> JobResult {
    let (domain, f) = load(c)?;
    let eps = tolerance(c, &domain, DEFAULT_EPS)?;
    let mode: QMode = q_mode.parse()?;
    let s = struc_decompose(&domain, &f, &eps, mode, c.seed)?;
    let mu_max = s.mu.iter().map(|m| m.abs()).fold(0.0, f64::max);
    let summary = json!({
        "mesh": mesh_summary(&domain, f.n),
        "k": s.k,
        "c": s.c,
        "q_mode": to_value(&s.q_mode),
        "mu_abs_max": mu_max,
        "report": to_value(&s.report),
    });
    let mut csv = String::from("vertex,mu");
    let k = s.lambda.first().map_or(0, |l| l.len());
    for i in 0..k {
        let _ = write!(csv, ",lambda_{i}");
    }
    csv.push('\n');
    for (v, (mu, l)) in s.mu.iter().zip(&s.lambda).enumerate() {
        let _ = write!(csv, "{v},{mu}");
        for x in l {
            let _ = write!(csv, ",{x}");
        }
        csv.push('\n');
    }
    Ok(Outcome {
        summary,
        violations: s.report.violations.clone(),
        files: vec![("struc.csv".into(), csv)],
    })
}

fn projection_violations(
    rep: &hessfield::projections::ProjectionReport,
    ts: f64,
    out: &mut Vec<String>,
) {
    let n = rep.n as f64;
    if !rep.bh_member {
        out.push(format!("q is not in BH_{}^{} at some vertex", rep.n, rep.k));
    }
    if rep.conjugacy_residual_max > 1e-8 * ts {
        out.push(format!(
            "‖u p u* − q‖ = {:e} exceeds 1e-8",
            rep.conjugacy_residual_max
        ));
    }
    if rep.unitarity_max > 1e-9 * ts {
        out.push(format!("u not unitary (residual {:e})", rep.unitarity_max));
    }
    if rep.projection_residual_max > 1e-9 * ts {
        out.push(format!(
            "q not a projection (residual {:e})",
            rep.projection_residual_max
        ));
    }
    if rep.rank_defect_max > 1e-6 * ts {
        out.push(format!(
            "rank not preserved (trace defect {:e})",
            rep.rank_defect_max
        ));
    }
    if rep.spectral_gap_min < 0.1 {
        out.push(format!("spectral gap {:e} below 0.1", rep.spectral_gap_min));
    }
    if rep.truncation_max > n * rep.eps {
        out.push(format!(
            "truncation {:e} exceeds n ε = {:e}",
            rep.truncation_max,
            n * rep.eps
        ));
    }
}

pub fn project_reduce(c: &Common) -> JobResult {
    let (domain, f) = load(c)?;
    let p = ProjectionField::new(f)?;
    let r = projection_reduce(&domain, &p, c.epsilon, c.seed)?;
    let mut violations = Vec::new();
    projection_violations(&r.report, c.tolerance_scale, &mut violations);
    let partitions: Vec<Value> = r
        .descriptors
        .iter()
        .map(|d| json!({ "alpha": d.alpha, "beta": d.beta }))
        .collect();
    let summary = json!({
        "mesh": mesh_summary(&domain, p.field.n),
        "ranks_min": p.min_rank(),
        "ranks_max": p.ranks.iter().copied().max().unwrap_or(0),
        "report": to_value(&r.report),
        "partitions": partitions,
    });
    let claims = json!({
        "kind": "project-reduce",
        "k": r.report.k,
        "q": field_doc(&domain, &r.q.field),
        "u": field_doc(&domain, &r.u),
    });
    Ok(Outcome {
        summary,
        violations,
        files: vec![
            ("field.json".into(), document(&domain, &p.field)),
            ("q.json".into(), document(&domain, &r.q.field)),
            ("claims.json".into(), canonical_json(&claims)),
        ],
    })
}

pub fn sections(c: &Common) -> JobResult {
    let (domain, f) = load(c)?;
    let p = ProjectionField::new(f)?;
    let bundle = trivial_summand(&domain, &p, c.epsilon, c.seed)?;
    let ts = c.tolerance_scale;
    let mut violations = Vec::new();
    let expected = bundle.b - bundle.gamma;
    if bundle.sections.len() != expected {
        violations.push(format!(
            "{} sections, expected b − γ = {expected}",
            bundle.sections.len()
        ));
    }
    if !(bundle.independence_margin > 0.0) {
        violations.push(format!(
            "independence margin {:e} is not positive",
            bundle.independence_margin
        ));
    }
    if bundle.range_residual_max > 1e-9 * ts {
        violations.push(format!(
            "sections leave the column space (residual {:e})",
            bundle.range_residual_max
        ));
    }
    let floor = std::f64::consts::FRAC_1_SQRT_2 - 1e-9 * ts;
    if bundle.norm_min < floor {
        violations.push(format!("section norm {:e} below 1/√2", bundle.norm_min));
    }
    for r in &bundle.reports {
        projection_violations(r, ts, &mut violations);
    }
    let mut csv = String::from("vertex");
    for i in 0..bundle.sections.len() {
        let _ = write!(csv, ",norm_{i}");
    }
    csv.push_str(",sigma_min\n");
    let m = bundle.sections.len();
    for v in 0..domain.vertex_count() {
        let _ = write!(csv, "{v}");
        for s in &bundle.sections {
            let _ = write!(csv, ",{}", vec_norm(&s[v]));
        }
        let gram = Matrix::from_fn(m, m, |i, j| {
            bundle.sections[i][v]
                .iter()
                .zip(&bundle.sections[j][v])
                .map(|(a, b)| a.conj() * b)
                .sum()
        });
        let lmin = hessfield::linalg::hermitian_eig(&gram.hermitian_part())?
            .values
            .last()
            .copied()
            .unwrap_or(0.0);
        let _ = writeln!(csv, ",{}", lmin.max(0.0).sqrt());
    }
    let sections: Vec<Value> = bundle
        .sections
        .iter()
        .map(|s| {
            to_value(
                &s.iter()
                    .map(|v| v.iter().map(|z| [z.re, z.im]).collect::<Vec<_>>())
                    .collect::<Vec<_>>(),
            )
        })
        .collect();
    let summary = json!({
        "mesh": mesh_summary(&domain, p.field.n),
        "b": bundle.b,
        "gamma": bundle.gamma,
        "section_count": bundle.sections.len(),
        "independence_margin": bundle.independence_margin,
        "range_residual_max": bundle.range_residual_max,
        "norm_min": bundle.norm_min,
        "warnings": bundle.warnings,
        "projection_reports": to_value(&bundle.reports),
    });
    Ok(Outcome {
        summary,
        violations,
        files: vec![
            (
                "sections.json".into(),
                canonical_json(&json!({ "sections": sections })),
            ),
            ("margins.csv".into(), csv),
        ],
    })
}

pub fn operator_reduce(c: &Common, truncation: usize, steps: usize) -> JobResult {
    let (domain, f) = load(c)?;
    let support = f.n;
    if truncation < support {
        return Err(Error::Precondition(format!(
            "truncation {truncation} below field size {support}"
        ))
        .into());
    }
    let padded = decorate(f, 1, truncation - support);
    let of = OperatorField::new(padded, support)?;
    let eps = tolerance(c, &domain, DEFAULT_EPS)?;
    let r = run_operator_reduce(&domain, &of, &eps, steps)?;
    let rep = &r.report;
    let ts = c.tolerance_scale;
    let mut violations = Vec::new();
    for s in &rep.step_records {
        if !(s.perturbation_ratio_max < 1.0) {
            violations.push(format!(
                "step {}: perturbation ratio {} not below 1",
                s.k, s.perturbation_ratio_max
            ));
        }
        if s.hermitian_residual_max > 1e-12 * ts {
            violations.push(format!(
                "step {}: perturbation not Hermitian ({:e})",
                s.k, s.hermitian_residual_max
            ));
        }
        if s.rank_max > 2 {
            violations.push(format!("step {}: perturbation rank {}", s.k, s.rank_max));
        }
        if s.unitarity_max > 1e-10 * ts {
            violations.push(format!(
                "step {}: unitarity residual {:e}",
                s.k, s.unitarity_max
            ));
        }
    }
    if rep.freeze_max > 1e-10 * ts {
        violations.push(format!("column freeze deviation {:e}", rep.freeze_max));
    }
    if rep.hessenberg_columns + 1 < steps {
        violations.push(format!(
            "only {} Hessenberg columns, need {}",
            rep.hessenberg_columns,
            steps.saturating_sub(1)
        ));
    }
    if !(rep.total_ratio_max < 1.0) {
        violations.push(format!(
            "total perturbation ratio {} not below 1",
            rep.total_ratio_max
        ));
    }
    if rep.total_hermitian_residual_max > 1e-12 * ts {
        violations.push(format!(
            "f − g not Hermitian ({:e})",
            rep.total_hermitian_residual_max
        ));
    }
    if rep.norm_excess_max > 0.0 {
        violations.push(format!(
            "‖g^k‖ exceeds ‖f‖ + ε by {:e}",
            rep.norm_excess_max
        ));
    }
    if rep.consistency_max > 1e-10 * ts {
        violations.push(format!("‖h − u g u*‖ = {:e}", rep.consistency_max));
    }
    if rep.isometry_max > 1e-9 * ts {
        violations.push(format!("v not an isometry ({:e})", rep.isometry_max));
    }
    let mut summary = to_value(rep);
    if let Value::Object(m) = &mut summary {
        m.remove("freeze_matrix");
        m.insert("mesh".into(), mesh_summary(&domain, truncation));
    }
    let trace = json!({ "steps": to_value(&rep.step_records), "freeze_matrix": rep.freeze_matrix });
    let fin = json!({
        "N": truncation,
        "support": support,
        "domain": to_value(&FieldDocument::from_parts(&domain, &r.g).domain),
        "v": field_doc(&domain, &r.v),
        "g": field_doc(&domain, &r.g),
        "h": field_doc(&domain, &r.h),
    });
    Ok(Outcome {
        summary,
        violations,
        files: vec![
            ("trace.json".into(), canonical_json(&trace)),
            ("final.json".into(), canonical_json(&fin)),
        ],
    })
}

pub fn verify(c: &Common, claims_path: &Path) -> JobResult {
    let (domain, f) = load(c)?;
    let text = read_file(claims_path)
        .map_err(|e| JobError::Io(format!("{}: {e}", claims_path.display())))?;
    let claims: Value =
        serde_json::from_str(&text).map_err(|e| Error::Malformed(format!("claims: {e}")))?;
    let kind = claims["kind"]
        .as_str()
        .ok_or_else(|| Error::Malformed("claims lack \"kind\"".into()))?;
    let k = claims["k"]
        .as_u64()
        .ok_or_else(|| Error::Malformed("claims lack \"k\"".into()))? as usize;
    let ts = c.tolerance_scale;
    match kind {
        "reduce" => {
            let eps_values: Vec<f64> = serde_json::from_value(claims["epsilon"].clone())
                .map_err(|e| Error::Malformed(format!("claims epsilon: {e}")))?;
            let eps = ToleranceField::new(eps_values)?;
            if eps.values.len() != domain.vertex_count() {
                return Err(Error::Malformed(
                    "claims epsilon length differs from vertex count".into(),
                )
                .into());
            }
            let g = field_from_doc(&claims["g"], &domain, "g")?;
            let u = field_from_doc(&claims["u"], &domain, "u")?;
            let h = field_from_doc(&claims["h"], &domain, "h")?;
            if g.n != f.n || u.n != f.n || h.n != f.n {
                return Err(
                    Error::Malformed("claims fields differ in size from the input".into()).into(),
                );
            }
            let checks = check_triple(&f, &g, &u, &h, k, &eps, ts);
            let summary = json!({
                "kind": kind,
                "k": k,
                "unitarity_max": checks.unitarity_max,
                "hermitian_perturbation_max": checks.hermitian_perturbation_max,
                "consistency_max": checks.consistency_max,
                "budget_ok": checks.budget_ok,
                "h_member": checks.h_member,
            });
            Ok(Outcome {
                summary,
                violations: checks.violations,
                files: Vec::new(),
            })
        }
        "project-reduce" => {
            let p = ProjectionField::new(f)?;
            let q = field_from_doc(&claims["q"], &domain, "q")?;
            let u = field_from_doc(&claims["u"], &domain, "u")?;
            if q.n != p.field.n || u.n != p.field.n {
                return Err(
                    Error::Malformed("claims fields differ in size from the input".into()).into(),
                );
            }
            let mut violations = Vec::new();
            let (mut conj, mut unit, mut rank): (f64, f64, f64) = (0.0, 0.0, 0.0);
            for v in 0..domain.vertex_count() {
                let (pv, qv, uv) = (&p.field.values[v], &q.values[v], &u.values[v]);
                let cr = (&pv.conjugate_by(uv) - qv).norm_fro();
                let ur = uv.unitarity_residual();
                let rr = (qv.trace() - pv.trace()).norm();
                conj = conj.max(cr);
                unit = unit.max(ur);
                rank = rank.max(rr);
                if cr > 1e-8 * ts {
                    violations.push(format!("vertex {v}: ‖u p u* − q‖ = {cr:e}"));
                }
                if ur > 1e-9 * ts {
                    violations.push(format!("vertex {v}: u not unitary ({ur:e})"));
                }
                if rr > 1e-6 * ts {
                    violations.push(format!("vertex {v}: trace defect {rr:e}"));
                }
                let d = classify_bh(qv, k, 1e-9 * ts);
                if !d.is_member() {
                    violations.push(format!(
                        "vertex {v}: q not in BH_{}^{k} (offblock {:e}, imag {:e}, residual {:e})",
                        q.n, d.offblock_max, d.imag_max, d.projection_residual
                    ));
                }
            }
            let summary = json!({
                "kind": kind,
                "k": k,
                "conjugacy_residual_max": conj,
                "unitarity_max": unit,
                "rank_defect_max": rank,
            });
            Ok(Outcome {
                summary,
                violations,
                files: Vec::new(),
            })
        }
        other => Err(Error::Malformed(format!("cannot verify claims of kind {other:?}")).into()),
    }
}
