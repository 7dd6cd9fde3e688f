//! JSON conventions: complex scalars are `[re, im]` pairs, matrices are
//! arrays of rows. Non-finite floats are rejected on input and written as
//! `null` on output.

use num_complex::Complex64;
use serde_json::{json, Map, Value};

use crate::error::{Error, Result};
use crate::linalg::{CMat, CVec, RMat};
use crate::minimality::{DefectReport, MinimalityCertificate, OrbitBasis};
use crate::pencil::PencilFactorization;
use crate::quadric::Quadric;
use crate::report::JacobianReport;

fn input(msg: impl Into<String>) -> Error {
    Error::Input(msg.into())
}

pub fn real(x: f64) -> Value {
    if x.is_finite() {
        json!(x)
    } else {
        Value::Null
    }
}

pub fn complex(z: Complex64) -> Value {
    json!([real(z.re), real(z.im)])
}

pub fn complex_list<'a>(zs: impl IntoIterator<Item = &'a Complex64>) -> Value {
    Value::Array(zs.into_iter().map(|z| complex(*z)).collect())
}

pub fn real_list<'a>(xs: impl IntoIterator<Item = &'a f64>) -> Value {
    Value::Array(xs.into_iter().map(|x| real(*x)).collect())
}

pub fn cvec(v: &CVec) -> Value {
    complex_list(v.iter())
}

pub fn cmat(m: &CMat) -> Value {
    Value::Array((0..m.nrows()).map(|i| complex_list(m.row(i).iter())).collect())
}

pub fn rmat(m: &RMat) -> Value {
    Value::Array((0..m.nrows()).map(|i| real_list(m.row(i).iter())).collect())
}

pub fn parse_real(v: &Value, what: &str) -> Result<f64> {
    let x = v.as_f64().ok_or_else(|| input(format!("{what}: expected a number, got {v}")))?;
    if !x.is_finite() {
        return Err(input(format!("{what}: non-finite value")));
    }
    Ok(x)
}

/// Accepts `[re, im]` or a bare real number.
pub fn parse_complex(v: &Value, what: &str) -> Result<Complex64> {
    match v {
        Value::Array(pair) if pair.len() == 2 => Ok(Complex64::new(
            parse_real(&pair[0], what)?,
            parse_real(&pair[1], what)?,
        )),
        Value::Number(_) => Ok(Complex64::new(parse_real(v, what)?, 0.0)),
        _ => Err(input(format!("{what}: expected [re, im] or a number, got {v}"))),
    }
}

fn array<'a>(v: &'a Value, what: &str) -> Result<&'a Vec<Value>> {
    v.as_array().ok_or_else(|| input(format!("{what}: expected an array")))
}

pub fn parse_complex_list(v: &Value, what: &str) -> Result<Vec<Complex64>> {
    array(v, what)?
        .iter()
        .enumerate()
        .map(|(i, z)| parse_complex(z, &format!("{what}[{i}]")))
        .collect()
}

pub fn parse_real_list(v: &Value, what: &str) -> Result<Vec<f64>> {
    array(v, what)?
        .iter()
        .enumerate()
        .map(|(i, x)| parse_real(x, &format!("{what}[{i}]")))
        .collect()
}

pub fn parse_cmat(v: &Value, n: usize, what: &str) -> Result<CMat> {
    let rows = array(v, what)?;
    if rows.len() != n {
        return Err(input(format!("{what}: expected {n} rows, got {}", rows.len())));
    }
    let mut m = CMat::zeros(n, n);
    for (i, row) in rows.iter().enumerate() {
        let entries = parse_complex_list(row, &format!("{what}[{i}]"))?;
        if entries.len() != n {
            return Err(input(format!("{what}[{i}]: expected {n} entries, got {}", entries.len())));
        }
        for (k, z) in entries.into_iter().enumerate() {
            m[(i, k)] = z;
        }
    }
    Ok(m)
}

/// Parse `{"n", "d", "matrices"}`. Hermitian validation happens in
/// [`Quadric::new`].
pub fn quadric_from_value(v: &Value) -> Result<Quadric> {
    let obj = v.as_object().ok_or_else(|| input("quadric: expected an object"))?;
    let count = |key: &str| -> Result<usize> {
        obj.get(key)
            .and_then(Value::as_u64)
            .map(|x| x as usize)
            .ok_or_else(|| input(format!("quadric: missing or invalid \"{key}\"")))
    };
    let n = count("n")?;
    let d = count("d")?;
    let mats = array(obj.get("matrices").unwrap_or(&Value::Null), "quadric.matrices")?;
    if mats.len() != d {
        return Err(input(format!("quadric: d = {d} but {} matrices given", mats.len())));
    }
    let matrices = mats
        .iter()
        .enumerate()
        .map(|(j, m)| parse_cmat(m, n, &format!("matrices[{j}]")))
        .collect::<Result<Vec<_>>>()?;
    Quadric::new(matrices)
}

pub fn parse_quadric(text: &str) -> Result<Quadric> {
    let v: Value = serde_json::from_str(text).map_err(|e| input(format!("quadric JSON: {e}")))?;
    quadric_from_value(&v)
}

pub fn quadric(q: &Quadric) -> Value {
    json!({
        "n": q.n(),
        "d": q.d(),
        "matrices": q.matrices().iter().map(cmat).collect::<Vec<_>>(),
    })
}

pub fn factorization(f: &PencilFactorization) -> Value {
    json!({
        "a": complex_list(&f.a),
        "b0": real_list(&f.b0),
        "b": real_list(&f.b),
        "X": cmat(&f.x),
        "B": cmat(&f.factor),
        "K": f.k.iter().map(cmat).collect::<Vec<_>>(),
        "P": cmat(&f.p),
        "A": cmat(&f.levi),
        "iterations": f.solution.iterations,
        "newton_steps": f.solution.newton_steps,
        "residual": real(f.solution.residual),
        "spectral_norm": real(f.solution.spectral_norm),
    })
}

pub fn jacobian(r: &JacobianReport) -> Value {
    let mut m = Map::new();
    m.insert("matrix".into(), rmat(&r.matrix));
    if let Some(c) = &r.complex_matrix {
        m.insert("complex_matrix".into(), cmat(c));
    }
    m.insert("singular_values".into(), real_list(&r.singular_values));
    m.insert("sigma_min".into(), real(r.sigma_min()));
    m.insert("condition_number".into(), real(r.condition_number));
    m.insert("threshold".into(), real(r.threshold));
    m.insert("relative_tolerance".into(), real(r.relative_tolerance));
    m.insert(
        "verdict".into(),
        json!(if r.invertible { "invertible" } else { "singular" }),
    );
    m.insert("layout".into(), json!(r.layout));
    m.insert("from_differences".into(), json!(r.from_differences));
    Value::Object(m)
}

pub fn orbit(o: &OrbitBasis) -> Value {
    json!({
        "real_dimension": o.real_dimension,
        "vectors": o.vectors.iter().map(cvec).collect::<Vec<_>>(),
    })
}

pub fn certificate(c: &MinimalityCertificate) -> Value {
    json!({
        "minimal": c.minimal,
        "gram": rmat(&c.gram),
        "gram_min_eigenvalue": real(c.gram_min_eigenvalue),
        "gram_threshold": real(c.gram_threshold),
        "rank_sigma_min": real(c.rank_sigma_min),
        "rank_threshold": real(c.rank_threshold),
        "rank_minimal": c.rank_minimal,
        "borderline": c.borderline,
        "kernel_witness": c.kernel_witness.as_ref().map(real_list),
        "witness_residual": c.witness_residual.map(real),
    })
}

pub fn defect(r: &DefectReport) -> Value {
    json!({
        "defective": r.defective,
        "certificate": certificate(&r.certificate),
        "witness": r.witness.as_ref().map(|w| json!({
            "lambda": real_list(&w.lambda),
            "lift": "(h, g, 0, z * lambda / 2)",
            "boundary_residual": real(w.boundary_residual),
            "max_fourier_coefficient": real(w.max_fourier_coefficient),
            "tolerance": real(w.tolerance),
            "verified": w.verified,
        })),
    })
}
