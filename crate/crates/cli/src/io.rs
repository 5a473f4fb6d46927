//! The predictions CSV format.
//!
//! Header row, then one row per sample: `logit_0..logit_{K-1}` and/or
//! `prob_0..prob_{K-1}` columns followed by a 1-based integer `label`
//! column. Decimal floats with a `.` separator. Floats are written in
//! shortest round-trip form, so write -> read is value-exact.

use std::fs;
use std::path::Path;

use anyhow::{bail, Context, Result};
use calim_core::PredictionSet;

struct Header {
    logits: bool,
    probs: bool,
    k: usize,
}

fn parse_header(line: &str) -> Result<Header> {
    let cols: Vec<&str> = line.split(',').map(str::trim).collect();
    let mut logit_next = 0usize;
    let mut prob_next = 0usize;
    let mut label_seen = false;
    for (pos, col) in cols.iter().enumerate() {
        if label_seen {
            bail!("header column {} ('{col}') appears after 'label'", pos + 1);
        }
        if *col == "label" {
            label_seen = true;
        } else if let Some(idx) = col.strip_prefix("logit_") {
            let idx: usize = idx
                .parse()
                .with_context(|| format!("header column {} ('{col}') has a bad index", pos + 1))?;
            if idx != logit_next {
                bail!("header column {} is '{col}', expected 'logit_{logit_next}'", pos + 1);
            }
            logit_next += 1;
        } else if let Some(idx) = col.strip_prefix("prob_") {
            let idx: usize = idx
                .parse()
                .with_context(|| format!("header column {} ('{col}') has a bad index", pos + 1))?;
            if idx != prob_next {
                bail!("header column {} is '{col}', expected 'prob_{prob_next}'", pos + 1);
            }
            prob_next += 1;
        } else {
            bail!("unrecognized header column {} ('{col}')", pos + 1);
        }
    }
    if !label_seen {
        bail!("header has no 'label' column");
    }
    if logit_next == 0 && prob_next == 0 {
        bail!("header has neither logit_* nor prob_* columns");
    }
    if logit_next > 0 && prob_next > 0 && logit_next != prob_next {
        bail!("header has {logit_next} logit_* columns but {prob_next} prob_* columns");
    }
    Ok(Header {
        logits: logit_next > 0,
        probs: prob_next > 0,
        k: logit_next.max(prob_next),
    })
}

/// Parses a predictions CSV into a validated [`PredictionSet`].
/// Labels are converted from the file's 1-based convention.
pub fn read_predictions(path: &Path) -> Result<PredictionSet> {
    let text = fs::read_to_string(path)
        .with_context(|| format!("cannot read {}", path.display()))?;
    let mut lines = text.lines();
    let header = parse_header(lines.next().context("file is empty, expected a header row")?)?;
    let k = header.k;
    let ncols = k * (header.logits as usize + header.probs as usize) + 1;

    let mut logits: Vec<Vec<f64>> = Vec::new();
    let mut probs: Vec<Vec<f64>> = Vec::new();
    let mut labels: Vec<usize> = Vec::new();
    for (row, line) in lines.enumerate() {
        let row = row + 1;
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != ncols {
            bail!("row {row}: expected {ncols} columns, found {}", fields.len());
        }
        let mut pos = 0;
        if header.logits {
            let mut z = Vec::with_capacity(k);
            for j in 0..k {
                let v: f64 = fields[pos].parse().with_context(|| {
                    format!("row {row}, column logit_{j}: invalid float '{}'", fields[pos])
                })?;
                z.push(v);
                pos += 1;
            }
            logits.push(z);
        }
        if header.probs {
            let mut p = Vec::with_capacity(k);
            for j in 0..k {
                let v: f64 = fields[pos].parse().with_context(|| {
                    format!("row {row}, column prob_{j}: invalid float '{}'", fields[pos])
                })?;
                p.push(v);
                pos += 1;
            }
            probs.push(p);
        }
        let label: i64 = fields[pos].parse().with_context(|| {
            format!("row {row}, column label: invalid integer '{}'", fields[pos])
        })?;
        if label < 1 || label as usize > k {
            bail!("row {row}, column label: {label} outside 1..={k}");
        }
        labels.push(label as usize - 1);
    }

    PredictionSet::from_parts(
        header.logits.then_some(logits),
        header.probs.then_some(probs),
        labels,
    )
    .with_context(|| format!("{} failed validation", path.display()))
}

/// Which column families to emit.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WriteColumns {
    Logits,
    Probs,
    /// Logits followed by probabilities; used when a calibration map
    /// preserves logits.
    Both,
}

/// Writes a predictions CSV. Labels are written 1-based.
pub fn write_predictions(path: &Path, ps: &PredictionSet, columns: WriteColumns) -> Result<()> {
    let with_logits = matches!(columns, WriteColumns::Logits | WriteColumns::Both);
    let with_probs = matches!(columns, WriteColumns::Probs | WriteColumns::Both);
    if with_logits && !ps.has_logits() {
        bail!("prediction set has no logits to write");
    }

    let k = ps.k();
    let mut out = String::new();
    let mut header: Vec<String> = Vec::new();
    if with_logits {
        header.extend((0..k).map(|j| format!("logit_{j}")));
    }
    if with_probs {
        header.extend((0..k).map(|j| format!("prob_{j}")));
    }
    header.push("label".into());
    out.push_str(&header.join(","));
    out.push('\n');

    for i in 0..ps.n() {
        let mut fields: Vec<String> = Vec::with_capacity(header.len());
        if with_logits {
            fields.extend(ps.logits_row(i).unwrap().iter().map(f64::to_string));
        }
        if with_probs {
            fields.extend(ps.probs_row(i).iter().map(f64::to_string));
        }
        fields.push((ps.labels()[i] + 1).to_string());
        out.push_str(&fields.join(","));
        out.push('\n');
    }

    fs::write(path, out).with_context(|| format!("cannot write {}", path.display()))
}
