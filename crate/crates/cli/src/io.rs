//! Line-oriented text formats.
//!
//! A q-series file is a header `p=<int> M=<int> Q=<int> [weight=<int>]`
//! followed by exactly Q+1 decimal residues in [0, p^M), one per line,
//! index order 0..Q. Eigen data is one `key=value` per line in the fixed
//! order p, M, N, k, a_p, chi_p, alpha, beta, then an optional
//! `coeffs=<path>` resolved relative to the file.
//!
//! Both readers reject anything but the canonical spelling (exact key
//! order, no padding, trailing newline), so serialize ∘ parse is the
//! identity on every accepted file. Coefficients that lost precision
//! upstream are written through the canonical lift into [0, p^M).

use std::fs;
use std::path::{Path, PathBuf};

use nocq_core::error::{invalid, Error, Result};
use nocq_core::padic::{Context, PadicNum};
use nocq_core::qseries::{EigenData, QSeries};

pub struct SeriesFile {
    pub ctx: Context,
    pub series: QSeries,
    pub weight: Option<i64>,
}

pub struct EigenFile {
    pub ctx: Context,
    pub data: EigenData,
    pub coeffs_path: Option<String>,
}

fn at(path: &Path, line: usize, msg: impl std::fmt::Display) -> Error {
    invalid(format!("{}:{}: {}", path.display(), line, msg))
}

/// Reject a parseable but non-canonical spelling, naming the first line
/// that differs from the canonical form.
fn canonical_check(path: &Path, text: &str, canonical: &str) -> Result<()> {
    if canonical == text {
        return Ok(());
    }
    let lineno = text
        .lines()
        .zip(canonical.lines())
        .position(|(a, b)| a != b)
        .map(|i| i + 1)
        .unwrap_or_else(|| text.lines().count().min(canonical.lines().count()) + 1);
    Err(at(path, lineno, "file is not in canonical form"))
}

fn parse_int<T: std::str::FromStr>(path: &Path, line: usize, key: &str, s: &str) -> Result<T> {
    s.parse::<T>()
        .map_err(|_| at(path, line, format!("invalid integer for {key}: {s:?}")))
}

/// Decimal residue in [0, p^M) at full precision.
pub fn parse_residue(ctx: &Context, s: &str) -> std::result::Result<PadicNum, String> {
    let v: u128 = s
        .parse()
        .map_err(|_| format!("invalid residue: {s:?}"))?;
    if v >= ctx.modulus() {
        return Err(format!(
            "residue {v} out of range [0, p^M = {})",
            ctx.modulus()
        ));
    }
    Ok(ctx.from_i128(v as i128))
}

pub fn read_series(path: &Path) -> Result<SeriesFile> {
    let text = fs::read_to_string(path)
        .map_err(|e| invalid(format!("{}: {}", path.display(), e)))?;
    let mut lines = text.lines().enumerate();
    let (_, header) = lines
        .next()
        .ok_or_else(|| at(path, 1, "empty file"))?;
    let mut p = None;
    let mut m = None;
    let mut q = None;
    let mut weight = None;
    for tok in header.split_whitespace() {
        let (key, value) = tok
            .split_once('=')
            .ok_or_else(|| at(path, 1, format!("malformed header token {tok:?}")))?;
        match key {
            "p" => p = Some(parse_int::<u64>(path, 1, "p", value)?),
            "M" => m = Some(parse_int::<u32>(path, 1, "M", value)?),
            "Q" => q = Some(parse_int::<usize>(path, 1, "Q", value)?),
            "weight" => weight = Some(parse_int::<i64>(path, 1, "weight", value)?),
            _ => return Err(at(path, 1, format!("unknown header key {key:?}"))),
        }
    }
    let p = p.ok_or_else(|| at(path, 1, "header is missing p="))?;
    let m = m.ok_or_else(|| at(path, 1, "header is missing M="))?;
    let q = q.ok_or_else(|| at(path, 1, "header is missing Q="))?;
    let ctx = Context::new(p, m, q).map_err(|e| at(path, 1, e))?;
    let mut coeffs = Vec::with_capacity(q + 1);
    for n in 0..=q {
        let (idx, line) = lines
            .next()
            .ok_or_else(|| at(path, n + 2, format!("expected {} coefficients, found {n}", q + 1)))?;
        let v = parse_residue(&ctx, line).map_err(|e| at(path, idx + 1, e))?;
        coeffs.push(v);
    }
    if let Some((idx, extra)) = lines.next() {
        return Err(at(
            path,
            idx + 1,
            format!("expected end of file after {} coefficients, found {extra:?}", q + 1),
        ));
    }
    let series = QSeries::new(&ctx, coeffs)?;
    canonical_check(path, &text, &serialize_series(&ctx, &series, weight))?;
    Ok(SeriesFile { ctx, series, weight })
}

pub fn serialize_series(ctx: &Context, f: &QSeries, weight: Option<i64>) -> String {
    let mut out = format!("p={} M={} Q={}", ctx.p(), ctx.prec(), ctx.qprec());
    if let Some(w) = weight {
        out.push_str(&format!(" weight={w}"));
    }
    out.push('\n');
    for n in 0..=ctx.qprec() {
        out.push_str(&ctx.lift(f.coeff(n)).to_string());
        out.push('\n');
    }
    out
}

pub fn write_series(path: &Path, ctx: &Context, f: &QSeries, weight: Option<i64>) -> Result<()> {
    fs::write(path, serialize_series(ctx, f, weight))
        .map_err(|e| invalid(format!("{}: {}", path.display(), e)))
}

pub fn read_eigendata(path: &Path) -> Result<EigenFile> {
    let text = fs::read_to_string(path)
        .map_err(|e| invalid(format!("{}: {}", path.display(), e)))?;
    let mut p = None;
    let mut m = None;
    let mut level = None;
    let mut k = None;
    let mut raw: Vec<(usize, &'static str, String)> = Vec::new();
    let mut coeffs_path = None;
    for (idx, line) in text.lines().enumerate() {
        let lineno = idx + 1;
        if line.trim().is_empty() {
            return Err(at(path, lineno, "blank line"));
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| at(path, lineno, format!("malformed line {line:?}")))?;
        match key {
            "p" => p = Some(parse_int::<u64>(path, lineno, "p", value)?),
            "M" => m = Some(parse_int::<u32>(path, lineno, "M", value)?),
            "N" => level = Some(parse_int::<u64>(path, lineno, "N", value)?),
            "k" => k = Some(parse_int::<i64>(path, lineno, "k", value)?),
            "a_p" => raw.push((lineno, "a_p", value.to_string())),
            "chi_p" => raw.push((lineno, "chi_p", value.to_string())),
            "alpha" => raw.push((lineno, "alpha", value.to_string())),
            "beta" => raw.push((lineno, "beta", value.to_string())),
            "coeffs" => coeffs_path = Some(value.to_string()),
            _ => return Err(at(path, lineno, format!("unknown key {key:?}"))),
        }
    }
    let p = p.ok_or_else(|| at(path, 1, "missing p="))?;
    let m = m.ok_or_else(|| at(path, 1, "missing M="))?;
    let level = level.ok_or_else(|| at(path, 1, "missing N="))?;
    let k = k.ok_or_else(|| at(path, 1, "missing k="))?;
    let coeffs = match &coeffs_path {
        None => None,
        Some(rel) => {
            let target = path
                .parent()
                .map(|d| d.join(rel))
                .unwrap_or_else(|| PathBuf::from(rel));
            let sf = read_series(&target)?;
            if sf.ctx.p() != p || sf.ctx.prec() != m {
                return Err(invalid(format!(
                    "{}: coefficient file {} disagrees on p or M",
                    path.display(),
                    target.display()
                )));
            }
            Some(sf)
        }
    };
    // Q is carried by the coefficient file when present; bare eigen data
    // gets a minimal window.
    let ctx = match &coeffs {
        Some(sf) => sf.ctx.clone(),
        None => Context::new(p, m, 1)?,
    };
    let field = |name: &str| -> Result<PadicNum> {
        let (lineno, _, value) = raw
            .iter()
            .find(|(_, key, _)| *key == name)
            .ok_or_else(|| at(path, 1, format!("missing {name}=")))?;
        parse_residue(&ctx, value).map_err(|e| at(path, *lineno, e))
    };
    let a_p = field("a_p")?;
    let chi_p = field("chi_p")?;
    let alpha = field("alpha")?;
    let beta = field("beta")?;
    let label = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "form".to_string());
    let data = EigenData::new(
        &ctx,
        label,
        level,
        k,
        a_p,
        chi_p,
        alpha,
        beta,
        coeffs.map(|sf| sf.series),
    )
    .map_err(|e| invalid(format!("{}: {}", path.display(), e)))?;
    canonical_check(path, &text, &serialize_eigendata(&ctx, &data, coeffs_path.as_deref()))?;
    Ok(EigenFile {
        ctx,
        data,
        coeffs_path,
    })
}

pub fn serialize_eigendata(ctx: &Context, d: &EigenData, coeffs_path: Option<&str>) -> String {
    let mut out = String::new();
    out.push_str(&format!("p={}\n", ctx.p()));
    out.push_str(&format!("M={}\n", ctx.prec()));
    out.push_str(&format!("N={}\n", d.level));
    out.push_str(&format!("k={}\n", d.weight));
    out.push_str(&format!("a_p={}\n", ctx.lift(&d.a_p)));
    out.push_str(&format!("chi_p={}\n", ctx.lift(&d.chi_p)));
    out.push_str(&format!("alpha={}\n", ctx.lift(&d.alpha)));
    out.push_str(&format!("beta={}\n", ctx.lift(&d.beta)));
    if let Some(p) = coeffs_path {
        out.push_str(&format!("coeffs={p}\n"));
    }
    out
}

/// Shared-context check for multi-file commands.
pub fn same_context(a: &Context, b: &Context) -> Result<()> {
    if a.p() != b.p() || a.prec() != b.prec() || a.qprec() != b.qprec() {
        return Err(invalid(format!(
            "input files disagree on context: p={} M={} Q={} vs p={} M={} Q={}",
            a.p(),
            a.prec(),
            a.qprec(),
            b.p(),
            b.prec(),
            b.qprec()
        )));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::sync::atomic::{AtomicU64, Ordering};

    static STAMP: AtomicU64 = AtomicU64::new(0);

    fn scratch(name: &str) -> PathBuf {
        let n = STAMP.fetch_add(1, Ordering::Relaxed);
        std::env::temp_dir().join(format!("nocq-io-{}-{n}-{name}", std::process::id()))
    }

    fn put(name: &str, text: &str) -> PathBuf {
        let path = scratch(name);
        fs::write(&path, text).unwrap();
        path
    }

    #[test]
    fn series_round_trip_is_byte_identical() {
        let text = "p=5 M=2 Q=3 weight=4\n0\n1\n0\n2\n";
        let path = put("rt.qx", text);
        let sf = read_series(&path).unwrap();
        assert_eq!(sf.ctx.p(), 5);
        assert_eq!(sf.ctx.qprec(), 3);
        assert_eq!(sf.weight, Some(4));
        assert_eq!(sf.ctx.lift(sf.series.coeff(3)).to_string(), "2");
        assert_eq!(serialize_series(&sf.ctx, &sf.series, sf.weight), text);
    }

    #[test]
    fn series_errors_name_the_line() {
        let msg = |text: &str| {
            let path = put("bad.qx", text);
            read_series(&path).err().unwrap().to_string()
        };
        assert!(msg("p=5 M=2 Q=3\n0\n1\n0\n").contains(":5: expected 4 coefficients"));
        assert!(msg("p=5 M=2 Q=3\n0\n1\n0\n2\n7\n").contains(":6: expected end of file"));
        assert!(msg("p=5 M=2 Q=3\n0\n25\n0\n2\n").contains(":3: residue 25 out of range"));
        assert!(msg("p=5 M=2 Q=3\n0\n01\n0\n2\n").contains(":3: file is not in canonical form"));
        assert!(msg("p=5 M=2\n0\n").contains(":1: header is missing Q="));
    }

    #[test]
    fn eigendata_round_trip_and_validation() {
        let dir = scratch("eig-dir");
        fs::create_dir_all(&dir).unwrap();
        let coeffs = "p=5 M=4 Q=6\n0\n1\n0\n0\n0\n0\n0\n";
        fs::write(dir.join("gq.qx"), coeffs).unwrap();
        // alpha=3, beta=5: a_p=8, chi(p)p = 15 means chi=3 at weight 2.
        let text = "p=5\nM=4\nN=3\nk=2\na_p=8\nchi_p=3\nalpha=3\nbeta=5\ncoeffs=gq.qx\n";
        let path = dir.join("g.eig");
        fs::write(&path, text).unwrap();
        let ef = read_eigendata(&path).unwrap();
        assert_eq!(ef.data.label, "g");
        assert_eq!(ef.data.weight, 2);
        assert!(ef.data.coeffs.is_some());
        assert_eq!(
            serialize_eigendata(&ef.ctx, &ef.data, ef.coeffs_path.as_deref()),
            text
        );

        // Roots that fail alpha*beta = chi(p)p^{k-1} are rejected.
        let bad = put("bad.eig", "p=5\nM=4\nN=3\nk=2\na_p=9\nchi_p=3\nalpha=4\nbeta=5\n");
        assert!(read_eigendata(&bad)
            .err()
            .unwrap()
            .to_string()
            .contains("multiply"));
        // Key order is part of the canonical form.
        let swapped = put("swap.eig", "M=4\np=5\nN=3\nk=2\na_p=8\nchi_p=3\nalpha=3\nbeta=5\n");
        assert!(read_eigendata(&swapped)
            .err()
            .unwrap()
            .to_string()
            .contains("canonical"));
    }
}
