//! The instance file format: line-delimited structured records with a
//! canonical 17-significant-digit float encoding, so that fixtures diff
//! cleanly and write → read → write is byte-identical.
//!
//! ```text
//! version 1
//! dim 6
//! f 1 2 3 1.0000000000000000e0     # f^k_{ij} entries, 1-based, i < j
//! J <2n floats>                    # row-major, one line per row
//! G <2n floats>
//! a <2n floats>                    # one line per ideal basis vector
//! provenance {...}                 # optional, single JSON line
//! ```
//!
//! Strict mode (the default) rejects unknown fields and enforces the
//! writer's field order; `--lenient` skips unrecognized lines.

use anyhow::{anyhow, bail, Context, Result};
use serde::{Deserialize, Serialize};

use hermlie_core::liealg::Subspace;
use hermlie_core::linalg::{RMatrix, RVector, Tolerance};
use hermlie_core::{ComplexStructure, HermitianMetric, Instance, RealLieAlgebra};

pub const FORMAT_VERSION: u32 = 1;

/// Free-form provenance echoed through the file.
#[derive(Debug, Clone, Serialize, Deserialize, Default)]
pub struct FileProvenance {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub case: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub jtype: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub target: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

/// Canonical float encoding: 17 significant digits, lowercase scientific,
/// zeros collapsed to `0`.
pub fn format_float(x: f64) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    format!("{x:.16e}")
}

fn parse_float(s: &str) -> Result<f64> {
    s.parse::<f64>().with_context(|| format!("bad float literal {s:?}"))
}

pub fn write_instance(inst: &Instance, provenance: Option<&FileProvenance>) -> String {
    let dim = inst.algebra.dim();
    let mut out = String::new();
    out.push_str(&format!("version {FORMAT_VERSION}\n"));
    out.push_str(&format!("dim {dim}\n"));
    for (i, j, k, v) in inst.algebra.entries_upper() {
        out.push_str(&format!("f {} {} {} {}\n", i + 1, j + 1, k + 1, format_float(v)));
    }
    let jm = inst.j.matrix();
    for r in 0..dim {
        out.push('J');
        for c in 0..dim {
            out.push(' ');
            out.push_str(&format_float(jm[(r, c)]));
        }
        out.push('\n');
    }
    let gm = inst.metric.matrix();
    for r in 0..dim {
        out.push('G');
        for c in 0..dim {
            out.push(' ');
            out.push_str(&format_float(gm[(r, c)]));
        }
        out.push('\n');
    }
    for b in inst.a.basis() {
        out.push('a');
        for c in 0..dim {
            out.push(' ');
            out.push_str(&format_float(b[c]));
        }
        out.push('\n');
    }
    if let Some(p) = provenance {
        out.push_str(&format!(
            "provenance {}\n",
            serde_json::to_string(p).expect("provenance serializes")
        ));
    }
    out
}

pub fn read_instance(text: &str, strict: bool) -> Result<(Instance, Option<FileProvenance>)> {
    let mut version: Option<u32> = None;
    let mut dim: Option<usize> = None;
    let mut f_entries: Vec<(usize, usize, usize, f64)> = Vec::new();
    let mut j_rows: Vec<Vec<f64>> = Vec::new();
    let mut g_rows: Vec<Vec<f64>> = Vec::new();
    let mut a_rows: Vec<Vec<f64>> = Vec::new();
    let mut provenance: Option<FileProvenance> = None;
    // writer order: version, dim, f*, J*, G*, a*, provenance?
    let order = ["version", "dim", "f", "J", "G", "a", "provenance"];
    let mut stage = 0usize;

    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim_end();
        if line.is_empty() {
            continue;
        }
        let mut parts = line.split_whitespace();
        let field = parts.next().unwrap();
        let rest: Vec<&str> = parts.collect();
        let known = order.contains(&field);
        if !known {
            if strict {
                bail!("line {}: unknown field {:?} (strict mode)", lineno + 1, field);
            }
            continue;
        }
        if strict {
            let pos = order.iter().position(|f| *f == field).unwrap();
            if pos < stage {
                bail!("line {}: field {:?} out of order (strict mode)", lineno + 1, field);
            }
            stage = pos;
        }
        match field {
            "version" => {
                let v: u32 = rest
                    .first()
                    .ok_or_else(|| anyhow!("line {}: version needs a value", lineno + 1))?
                    .parse()?;
                if v != FORMAT_VERSION {
                    bail!("unsupported format version {v}");
                }
                version = Some(v);
            }
            "dim" => {
                let d: usize = rest
                    .first()
                    .ok_or_else(|| anyhow!("line {}: dim needs a value", lineno + 1))?
                    .parse()?;
                if d < 4 || d % 2 != 0 || d > 30 {
                    bail!("line {}: dim must be an even number in 4..=30, got {d}", lineno + 1);
                }
                dim = Some(d);
            }
            "f" => {
                if rest.len() != 4 {
                    bail!("line {}: f entries need i j k value", lineno + 1);
                }
                let i: usize = rest[0].parse()?;
                let j: usize = rest[1].parse()?;
                let k: usize = rest[2].parse()?;
                let v = parse_float(rest[3])?;
                if i == 0 || j == 0 || k == 0 {
                    bail!("line {}: f indices are 1-based", lineno + 1);
                }
                if i >= j {
                    bail!("line {}: f entries must have i < j", lineno + 1);
                }
                f_entries.push((i - 1, j - 1, k - 1, v));
            }
            "J" | "G" | "a" => {
                let vals: Vec<f64> =
                    rest.iter().map(|s| parse_float(s)).collect::<Result<_>>()?;
                match field {
                    "J" => j_rows.push(vals),
                    "G" => g_rows.push(vals),
                    _ => a_rows.push(vals),
                }
            }
            "provenance" => {
                let payload = line["provenance".len()..].trim_start();
                provenance = Some(
                    serde_json::from_str(payload)
                        .with_context(|| format!("line {}: bad provenance JSON", lineno + 1))?,
                );
            }
            _ => unreachable!(),
        }
    }

    if version.is_none() {
        bail!("missing version line");
    }
    let dim = dim.ok_or_else(|| anyhow!("missing dim line"))?;
    let check_rows = |name: &str, rows: &[Vec<f64>], want: usize| -> Result<()> {
        if rows.len() != want {
            bail!("{name}: expected {want} rows, found {}", rows.len());
        }
        for (i, r) in rows.iter().enumerate() {
            if r.len() != dim {
                bail!("{name} row {}: expected {dim} values, found {}", i + 1, r.len());
            }
        }
        Ok(())
    };
    check_rows("J", &j_rows, dim)?;
    check_rows("G", &g_rows, dim)?;
    check_rows("a", &a_rows, dim - 2)?;

    let mut algebra = RealLieAlgebra::abelian(dim);
    for (i, j, k, v) in f_entries {
        if i >= dim || j >= dim || k >= dim {
            bail!("f entry index out of range for dim {dim}");
        }
        algebra.set_f(k, i, j, v).map_err(|e| anyhow!("{e}"))?;
    }
    let jm = RMatrix::from_fn(dim, dim, |r, c| j_rows[r][c]);
    let gm = RMatrix::from_fn(dim, dim, |r, c| g_rows[r][c]);
    let j = ComplexStructure::new(jm).map_err(|e| anyhow!("J validation: {e}"))?;
    let metric = HermitianMetric::new(gm).map_err(|e| anyhow!("G validation: {e}"))?;
    let basis: Vec<RVector> =
        a_rows.iter().map(|r| RVector::from_fn(dim, |t, _| r[t])).collect();
    let a = Subspace::from_spanning(dim, &basis);
    if a.dim() != dim - 2 {
        bail!("ideal basis is rank-deficient: spans {} of {} directions", a.dim(), dim - 2);
    }
    let inst = Instance { algebra, j, metric, a, provenance: None };
    inst.validate(Tolerance::default()).map_err(|e| anyhow!("instance validation: {e}"))?;
    Ok((inst, provenance))
}

#[cfg(test)]
mod tests {
    use super::*;
    use hermlie_core::frames::CaseTag;
    use hermlie_core::generator::{gen, GenParams};

    #[test]
    fn write_read_write_is_byte_identical() {
        let inst = gen(&GenParams::new(3, CaseTag::MainNonabelian, 77)).unwrap();
        let prov = FileProvenance { case: Some("main".into()), seed: Some(77), ..Default::default() };
        let once = write_instance(&inst, Some(&prov));
        let (back, p2) = read_instance(&once, true).unwrap();
        let twice = write_instance(&back, p2.as_ref());
        assert_eq!(once, twice);
    }

    #[test]
    fn strict_mode_rejects_unknown_fields() {
        let inst = gen(&GenParams::new(2, CaseTag::JaEqualsA, 78)).unwrap();
        let mut text = write_instance(&inst, None);
        text.push_str("mystery 42\n");
        assert!(read_instance(&text, true).is_err());
        assert!(read_instance(&text, false).is_ok());
    }

    #[test]
    fn malformed_file_is_rejected() {
        assert!(read_instance("version 1\ndim 5\n", true).is_err());
        assert!(read_instance("dim 6\n", true).is_err());
        let garbage = "version 1\ndim 6\nf 1 1 1 nope\n";
        assert!(read_instance(garbage, true).is_err());
    }
}
