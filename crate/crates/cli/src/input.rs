//! Domain and field specifications: builtin generators or a JSON field document.

use hessfield::domain::{
    build_grid, build_sphere, Domain, FieldDocument, MatrixField, ToleranceField,
};
use hessfield::fixtures::{
    affine_hermitian_field, pad_field, random_hermitian_field, repeat_field, shift_field,
    zero_field,
};
use hessfield::spectra::bott_field;
use hessfield::{Error, Result};
use std::path::Path;

pub fn parse_domain(spec: &str) -> Result<Domain> {
    let parts: Vec<&str> = spec.split(':').collect();
    let num = |s: &str| -> Result<usize> {
        s.parse()
            .map_err(|_| Error::Malformed(format!("bad integer {s:?} in domain spec {spec:?}")))
    };
    match parts.as_slice() {
        ["grid", d, r] => build_grid(num(d)?, num(r)?),
        ["sphere", k, r] => build_sphere(num(k)?, num(r)?),
        _ => Err(Error::Malformed(format!(
            "domain spec {spec:?} is not grid:D:R or sphere:K:R"
        ))),
    }
}

/// Builtin field by name, optionally `name:SEED` for the random generators.
pub fn parse_field(
    spec: &str,
    domain: &Domain,
    n: usize,
    default_seed: u64,
) -> Result<MatrixField> {
    let (name, seed) = match spec.split_once(':') {
        Some((a, b)) => {
            let s = b
                .parse()
                .map_err(|_| Error::Malformed(format!("bad seed in field spec {spec:?}")))?;
            (a, s)
        }
        None => (spec, default_seed),
    };
    match name {
        "bott" => bott_field(domain),
        "zero" => Ok(zero_field(domain, n)),
        "random-hermitian" => Ok(random_hermitian_field(domain, n, seed)),
        "affine-hermitian" => Ok(affine_hermitian_field(domain, n, seed)),
        "shift" => Ok(shift_field(domain, n)),
        _ => Err(Error::Malformed(format!("unknown field {name:?}"))),
    }
}

pub fn read_file(path: &Path) -> std::io::Result<String> {
    std::fs::read_to_string(path)
}

pub fn parse_field_document(text: &str) -> Result<(Domain, MatrixField)> {
    FieldDocument::from_json(text)?.into_parts()
}

/// Applies `--copies` then `--pad`.
pub fn decorate(field: MatrixField, copies: usize, pad: usize) -> MatrixField {
    let f = if copies > 1 {
        repeat_field(&field, copies)
    } else {
        field
    };
    if pad > 0 {
        pad_field(&f, pad)
    } else {
        f
    }
}

/// Per-vertex tolerances from a JSON array of floats.
pub fn parse_epsilon_values(text: &str, domain: &Domain) -> Result<ToleranceField> {
    let values: Vec<f64> =
        serde_json::from_str(text).map_err(|e| Error::Malformed(format!("epsilon file: {e}")))?;
    if values.len() != domain.vertex_count() {
        return Err(Error::Malformed(format!(
            "epsilon file has {} values for {} vertices",
            values.len(),
            domain.vertex_count()
        )));
    }
    ToleranceField::new(values)
}
