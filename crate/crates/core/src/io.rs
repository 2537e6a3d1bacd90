//! CSV and JSON emitters.
//!
//! CSV files open with `# key=value` metadata lines followed by a header row.
//! Floats are written as the shortest decimal that parses back to the same
//! value, so identical inputs give byte-identical files on every platform.

use std::fmt::Write as _;
use std::io::{self, Write};

use serde::Serialize;

use crate::evolve::FidelitySeries;
use crate::protocols::ProtocolComparison;
use crate::reduced::AsymptoticMaximum;

/// Ordered `key=value` metadata pairs.
pub type Metadata = Vec<(String, String)>;

pub fn fmt_f64(x: f64) -> String {
    format!("{x:?}")
}

fn write_metadata<W: Write>(w: &mut W, meta: &Metadata) -> io::Result<()> {
    for (k, v) in meta {
        let v = v.replace('\n', " ");
        writeln!(w, "# {k}={v}")?;
    }
    Ok(())
}

/// Metadata block, header row and one line per row of pre-formatted cells.
pub fn write_csv<W: Write>(
    mut w: W,
    meta: &Metadata,
    header: &[&str],
    rows: impl IntoIterator<Item = Vec<String>>,
) -> io::Result<()> {
    write_metadata(&mut w, meta)?;
    writeln!(w, "{}", header.join(","))?;
    for row in rows {
        writeln!(w, "{}", row.join(","))?;
    }
    Ok(())
}

/// Splits a CSV produced by [`write_csv`] into its metadata and the
/// remaining text (header and body).
pub fn split_metadata(text: &str) -> (Metadata, &str) {
    let mut meta = Vec::new();
    let mut rest = text;
    while let Some(line) = rest.strip_prefix("# ") {
        let (line, tail) = line.split_once('\n').unwrap_or((line, ""));
        if let Some((k, v)) = line.split_once('=') {
            meta.push((k.to_string(), v.to_string()));
        }
        rest = tail;
    }
    (meta, rest)
}

pub fn series_metadata(s: &FidelitySeries) -> Metadata {
    let marked = s
        .meta
        .marked
        .iter()
        .map(|m| m.to_string())
        .collect::<Vec<_>>()
        .join(" ");
    let coupling = match s.meta.coupling {
        crate::evolve::Coupling::AllToAll => "all-to-all".to_string(),
        crate::evolve::Coupling::LongRange { alpha } => format!("alpha {}", fmt_f64(alpha)),
    };
    vec![
        ("n".into(), s.meta.n.to_string()),
        ("k".into(), s.meta.k.to_string()),
        ("marked".into(), marked),
        ("coupling".into(), coupling),
        ("gamma".into(), fmt_f64(s.meta.gamma)),
        ("engine".into(), s.meta.engine.tag().into()),
        ("max_fidelity".into(), fmt_f64(s.peak_value)),
        ("t_max_fidelity".into(), fmt_f64(s.peak_time)),
        ("boundary".into(), s.boundary.to_string()),
    ]
}

/// `t,fidelity` rows; `extra` metadata is appended after the series fields.
pub fn write_series_csv<W: Write>(w: W, s: &FidelitySeries, extra: &Metadata) -> io::Result<()> {
    let mut meta = series_metadata(s);
    meta.extend(extra.iter().cloned());
    write_csv(
        w,
        &meta,
        &["t", "fidelity"],
        s.times
            .iter()
            .zip(&s.values)
            .map(|(t, f)| vec![fmt_f64(*t), fmt_f64(*f)]),
    )
}

/// Several series on a shared time grid, one fidelity column per series.
pub fn write_overlay_csv<W: Write>(
    w: W,
    series: &[&FidelitySeries],
    extra: &Metadata,
) -> io::Result<()> {
    let Some(first) = series.first() else {
        return write_csv(w, extra, &["t"], std::iter::empty());
    };
    let mut meta = Metadata::new();
    for s in series {
        let tag = s.meta.engine.tag();
        for (k, v) in series_metadata(s) {
            meta.push((format!("{tag}.{k}"), v));
        }
    }
    meta.extend(extra.iter().cloned());
    let names: Vec<String> = series
        .iter()
        .map(|s| format!("fidelity_{}", s.meta.engine.tag().replace('-', "_")))
        .collect();
    let mut header = vec!["t"];
    header.extend(names.iter().map(|s| s.as_str()));
    let rows = (0..first.times.len()).map(|i| {
        let mut row = vec![fmt_f64(first.times[i])];
        row.extend(series.iter().map(|s| fmt_f64(s.values[i])));
        row
    });
    write_csv(w, &meta, &header, rows)
}

/// `k,max_fidelity,tau_star` summary.
pub fn write_asymptotic_table_csv<W: Write>(
    w: W,
    rows: &[AsymptoticMaximum],
    meta: &Metadata,
) -> io::Result<()> {
    write_csv(
        w,
        meta,
        &["k", "max_fidelity", "tau_star"],
        rows.iter()
            .map(|r| vec![r.k.to_string(), fmt_f64(r.fidelity), fmt_f64(r.tau)]),
    )
}

/// `tau,F_1,F_2,...` with one column per curve.
pub fn write_curves_csv<W: Write>(
    w: W,
    taus: &[f64],
    ks: &[usize],
    curves: &[Vec<f64>],
    meta: &Metadata,
) -> io::Result<()> {
    let names: Vec<String> = ks.iter().map(|k| format!("F_{k}")).collect();
    let mut header = vec!["tau"];
    header.extend(names.iter().map(|s| s.as_str()));
    let rows = taus.iter().enumerate().map(|(i, t)| {
        let mut row = vec![fmt_f64(*t)];
        row.extend(curves.iter().map(|c| fmt_f64(c[i])));
        row
    });
    write_csv(w, meta, &header, rows)
}

/// `k,n,N_k,s_k,r_k,t_1subspace,t_ksubspace,ratio`; `n` and `N_k` are
/// empty for large-n rows.
pub fn write_protocol_csv<W: Write>(
    w: W,
    rows: &[ProtocolComparison],
    meta: &Metadata,
) -> io::Result<()> {
    let opt = |x: Option<String>| x.unwrap_or_default();
    write_csv(
        w,
        meta,
        &[
            "k",
            "n",
            "N_k",
            "s_k",
            "r_k",
            "t_1subspace",
            "t_ksubspace",
            "ratio",
        ],
        rows.iter().map(|r| {
            vec![
                r.k.to_string(),
                opt(r.n.map(|n| n.to_string())),
                opt(r.states().map(|s| s.to_string())),
                r.s_k.to_string(),
                r.r_k.to_string(),
                fmt_f64(r.t_1subspace),
                fmt_f64(r.t_ksubspace),
                fmt_f64(r.ratio),
            ]
        }),
    )
}

/// Pretty JSON object `{"manifest": ..., "<key>": ...}`.
pub fn write_json<W: Write, M: Serialize, T: Serialize>(
    mut w: W,
    manifest: &M,
    key: &str,
    value: &T,
) -> io::Result<()> {
    let mut map = serde_json::Map::new();
    map.insert("manifest".into(), serde_json::to_value(manifest)?);
    map.insert(key.into(), serde_json::to_value(value)?);
    serde_json::to_writer_pretty(&mut w, &serde_json::Value::Object(map))?;
    writeln!(w)
}

/// Body of a CSV with the metadata lines removed.
pub fn csv_body(text: &str) -> String {
    let (_, rest) = split_metadata(text);
    let mut out = String::with_capacity(rest.len());
    for line in rest.lines() {
        let _ = writeln!(out, "{line}");
    }
    out
}
