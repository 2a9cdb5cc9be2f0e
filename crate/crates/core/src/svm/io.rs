//! Plain-text model format.
//!
//! ```text
//! svm-model v1
//! kernel rbf <gamma> | kernel poly <degree> <gamma> <coef0> | kernel linear
//! bias <b>
//! dim <d>
//! support_vectors <n>
//! sv <alpha> <+1|-1> <original index> <x_1> ... <x_d>
//! ```
//!
//! Reals are written with 17 significant digits so a read-back is bit-exact.

use std::io::{BufRead, Write};

use super::{KernelSpec, SvmError, SvmModel};
use crate::dataset::Label;

const MAGIC: &str = "svm-model v1";

fn real(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn write_model<W: Write>(model: &SvmModel, mut w: W) -> Result<(), SvmError> {
    writeln!(w, "{MAGIC}")?;
    match model.kernel {
        KernelSpec::Linear => writeln!(w, "kernel linear")?,
        KernelSpec::Polynomial {
            degree,
            gamma,
            coef0,
        } => writeln!(w, "kernel poly {degree} {} {}", real(gamma), real(coef0))?,
        KernelSpec::Rbf { gamma } => writeln!(w, "kernel rbf {}", real(gamma))?,
    }
    writeln!(w, "bias {}", real(model.bias))?;
    writeln!(w, "dim {}", model.dim())?;
    writeln!(w, "support_vectors {}", model.n_support())?;
    for k in 0..model.n_support() {
        write!(
            w,
            "sv {} {:+} {}",
            real(model.alphas[k]),
            model.sv_labels[k].value(),
            model.sv_original_indices[k]
        )?;
        for v in &model.support_vectors[k] {
            write!(w, " {}", real(*v))?;
        }
        writeln!(w)?;
    }
    Ok(())
}

fn parse_err(line: usize, message: impl Into<String>) -> SvmError {
    SvmError::Parse {
        line,
        message: message.into(),
    }
}

fn field<T: std::str::FromStr>(tok: Option<&str>, line: usize, what: &str) -> Result<T, SvmError> {
    tok.ok_or_else(|| parse_err(line, format!("missing {what}")))?
        .parse()
        .map_err(|_| parse_err(line, format!("invalid {what}")))
}

pub fn read_model<R: BufRead>(r: R) -> Result<SvmModel, SvmError> {
    let lines: Vec<String> = r.lines().collect::<Result<_, _>>()?;
    let mut it = lines.iter().enumerate().map(|(i, l)| (i + 1, l.trim()));
    let mut next = |what: &str| {
        it.next().ok_or_else(|| {
            parse_err(
                lines.len() + 1,
                format!("unexpected end of file, expected {what}"),
            )
        })
    };

    let (n, l) = next("header")?;
    if l != MAGIC {
        return Err(parse_err(n, format!("expected `{MAGIC}`")));
    }

    let (n, l) = next("kernel")?;
    let mut toks = l.split_whitespace();
    if toks.next() != Some("kernel") {
        return Err(parse_err(n, "expected `kernel`"));
    }
    let kernel = match toks.next() {
        Some("linear") => KernelSpec::Linear,
        Some("rbf") => KernelSpec::Rbf {
            gamma: field(toks.next(), n, "gamma")?,
        },
        Some("poly") => KernelSpec::Polynomial {
            degree: field(toks.next(), n, "degree")?,
            gamma: field(toks.next(), n, "gamma")?,
            coef0: field(toks.next(), n, "coef0")?,
        },
        _ => return Err(parse_err(n, "unknown kernel")),
    };
    kernel.validate().map_err(|e| parse_err(n, e.to_string()))?;

    let mut keyed = |key: &str| -> Result<(usize, String), SvmError> {
        let (n, l) = next(key)?;
        let mut toks = l.split_whitespace();
        if toks.next() != Some(key) {
            return Err(parse_err(n, format!("expected `{key}`")));
        }
        Ok((n, toks.next().unwrap_or("").to_string()))
    };
    let (n, b) = keyed("bias")?;
    let bias: f64 = field(Some(&b), n, "bias")?;
    let (n, d) = keyed("dim")?;
    let dim: usize = field(Some(&d), n, "dim")?;
    let (n, c) = keyed("support_vectors")?;
    let count: usize = field(Some(&c), n, "support vector count")?;

    let mut model = SvmModel {
        support_vectors: Vec::with_capacity(count),
        sv_labels: Vec::with_capacity(count),
        alphas: Vec::with_capacity(count),
        bias,
        kernel,
        sv_original_indices: Vec::with_capacity(count),
    };
    for _ in 0..count {
        let (n, l) = next("sv")?;
        let mut toks = l.split_whitespace();
        if toks.next() != Some("sv") {
            return Err(parse_err(n, "expected `sv`"));
        }
        let alpha: f64 = field(toks.next(), n, "alpha")?;
        let label = match toks.next() {
            Some("+1") | Some("1") => Label::Positive,
            Some("-1") => Label::Negative,
            _ => return Err(parse_err(n, "label must be +1 or -1")),
        };
        let index: usize = field(toks.next(), n, "original index")?;
        let coords: Vec<f64> = toks
            .map(|t| t.parse().map_err(|_| parse_err(n, "invalid coordinate")))
            .collect::<Result<_, _>>()?;
        if coords.len() != dim {
            return Err(parse_err(
                n,
                format!("expected {dim} coordinates, found {}", coords.len()),
            ));
        }
        model.alphas.push(alpha);
        model.sv_labels.push(label);
        model.sv_original_indices.push(index);
        model.support_vectors.push(coords);
    }
    if let Some((n, l)) = it.find(|(_, l)| !l.is_empty()) {
        return Err(parse_err(n, format!("trailing content `{l}`")));
    }
    Ok(model)
}
