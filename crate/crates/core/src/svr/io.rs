//! Line-oriented text format for trained SVR models.
//!
//! ```text
//! svr-model v1
//! variant = 4 all_months A 10 8 orig14
//! c = 10
//! gamma = 8
//! epsilon = 0.01
//! tol = 0.001
//! max_passes = default
//! scaler = A
//! scale,var1,<min|mean>,<max|std>
//! ...
//! bias = 0.1234
//! sv_rows = 3 17 42
//! <coef>,<sv_1>,...,<sv_d>
//! ```

use std::io::{BufRead, Write};

use super::{DatasetSpan, ParamSet, SvrHyperParams, SvrModel, VariantSpec};
use crate::dataset::{ColumnStats, NormScheme, ScalerParams};
use crate::error::{Error, Result};

const MAGIC: &str = "svr-model v1";

pub fn write_model(model: &SvrModel, mut out: impl Write) -> std::io::Result<()> {
    writeln!(out, "{MAGIC}")?;
    match &model.variant {
        Some(v) => writeln!(
            out,
            "variant = {} {} {} {} {} {}",
            v.id, v.span, v.norm, v.params.c, v.params.gamma, v.input_set
        )?,
        None => writeln!(out, "variant = none")?,
    }
    let h = &model.hyper;
    writeln!(out, "c = {}", h.c)?;
    writeln!(out, "gamma = {}", h.gamma)?;
    writeln!(out, "epsilon = {}", h.epsilon)?;
    writeln!(out, "tol = {}", h.tol)?;
    match h.max_passes {
        Some(n) => writeln!(out, "max_passes = {n}")?,
        None => writeln!(out, "max_passes = default")?,
    }
    match &model.scaler {
        Some(s) => {
            writeln!(out, "scaler = {}", s.scheme)?;
            for (name, st) in s.columns.iter().zip(&s.stats) {
                let (a, b) = match *st {
                    ColumnStats::MinMax { min, max } => (min, max),
                    ColumnStats::ZScore { mean, std } => (mean, std),
                };
                writeln!(out, "scale,{name},{a},{b}")?;
            }
        }
        None => writeln!(out, "scaler = none")?,
    }
    writeln!(out, "bias = {}", model.bias)?;
    let rows: Vec<String> = model.sv_rows.iter().map(|r| r.to_string()).collect();
    writeln!(out, "sv_rows = {}", rows.join(" "))?;
    for (coef, sv) in model.dual_coefs.iter().zip(&model.support_vectors) {
        write!(out, "{coef}")?;
        for v in sv {
            write!(out, ",{v}")?;
        }
        writeln!(out)?;
    }
    out.flush()
}

struct Lines<R> {
    inner: std::io::Lines<R>,
    line: usize,
}

impl<R: BufRead> Lines<R> {
    fn err(&self, message: impl Into<String>) -> Error {
        Error::Format {
            kind: "svr model",
            line: self.line,
            message: message.into(),
        }
    }

    fn next_line(&mut self) -> Result<Option<String>> {
        match self.inner.next() {
            None => Ok(None),
            Some(Ok(l)) => {
                self.line += 1;
                Ok(Some(l))
            }
            Some(Err(e)) => Err(self.err(e.to_string())),
        }
    }

    fn expect_line(&mut self) -> Result<String> {
        self.next_line()?.ok_or_else(|| self.err("unexpected end of file"))
    }

    fn keyed(&mut self, key: &str) -> Result<String> {
        let l = self.expect_line()?;
        match l.split_once('=') {
            Some((k, v)) if k.trim() == key => Ok(v.trim().to_string()),
            _ => Err(self.err(format!("expected `{key} = ...`, got {l:?}"))),
        }
    }

    fn num<T: std::str::FromStr>(&self, s: &str) -> Result<T> {
        s.trim()
            .parse()
            .map_err(|_| self.err(format!("bad number {s:?}")))
    }
}

pub fn read_model(input: impl BufRead) -> Result<SvrModel> {
    let mut lines = Lines {
        inner: input.lines(),
        line: 0,
    };
    if lines.expect_line()?.trim() != MAGIC {
        return Err(lines.err("missing svr-model header"));
    }

    let v = lines.keyed("variant")?;
    let variant = if v == "none" {
        None
    } else {
        let f: Vec<&str> = v.split_whitespace().collect();
        if f.len() != 6 {
            return Err(lines.err("variant needs 6 fields"));
        }
        Some(VariantSpec {
            id: lines.num(f[0])?,
            span: f[1].parse::<DatasetSpan>()?,
            norm: f[2].parse()?,
            params: ParamSet {
                c: lines.num(f[3])?,
                gamma: lines.num(f[4])?,
            },
            input_set: f[5].parse()?,
        })
    };

    let c = lines.keyed("c")?;
    let gamma = lines.keyed("gamma")?;
    let epsilon = lines.keyed("epsilon")?;
    let tol = lines.keyed("tol")?;
    let mp = lines.keyed("max_passes")?;
    let hyper = SvrHyperParams {
        c: lines.num(&c)?,
        gamma: lines.num(&gamma)?,
        epsilon: lines.num(&epsilon)?,
        tol: lines.num(&tol)?,
        max_passes: if mp == "default" { None } else { Some(lines.num(&mp)?) },
    };

    let sc = lines.keyed("scaler")?;
    let mut pending = lines.expect_line()?;
    let scaler = if sc == "none" {
        None
    } else {
        let scheme: NormScheme = sc.parse()?;
        let mut columns = Vec::new();
        let mut stats = Vec::new();
        while let Some(rest) = pending.strip_prefix("scale,") {
            let f: Vec<&str> = rest.split(',').collect();
            if f.len() != 3 {
                return Err(lines.err("scale line needs name and two values"));
            }
            let (a, b): (f64, f64) = (lines.num(f[1])?, lines.num(f[2])?);
            columns.push(f[0].to_string());
            stats.push(match scheme {
                NormScheme::A => ColumnStats::MinMax { min: a, max: b },
                NormScheme::B => ColumnStats::ZScore { mean: a, std: b },
            });
            pending = lines.expect_line()?;
        }
        Some(ScalerParams {
            scheme,
            columns,
            stats,
        })
    };

    let bias = match pending.split_once('=') {
        Some((k, v)) if k.trim() == "bias" => lines.num(v)?,
        _ => return Err(lines.err("expected bias line")),
    };
    let rows = lines.keyed("sv_rows")?;
    let sv_rows: Vec<usize> = rows
        .split_whitespace()
        .map(|r| lines.num(r))
        .collect::<Result<_>>()?;

    let mut dual_coefs = Vec::new();
    let mut support_vectors = Vec::new();
    while let Some(l) = lines.next_line()? {
        if l.trim().is_empty() {
            continue;
        }
        let mut fields = l.split(',');
        let coef: f64 = lines.num(fields.next().unwrap_or(""))?;
        let sv: Vec<f64> = fields.map(|f| lines.num(f)).collect::<Result<_>>()?;
        dual_coefs.push(coef);
        support_vectors.push(sv);
    }
    if dual_coefs.len() != sv_rows.len() {
        return Err(lines.err(format!(
            "{} support vectors but {} row indices",
            dual_coefs.len(),
            sv_rows.len()
        )));
    }
    Ok(SvrModel {
        support_vectors,
        dual_coefs,
        sv_rows,
        bias,
        hyper,
        scaler,
        variant,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{synth_generate, SiteConfig};
    use crate::svr::{make_variant_specs, train_variants, TrainOptions};

    #[test]
    fn round_trip_is_lossless() {
        let ds = synth_generate(20, 1, &SiteConfig::reference_site()).unwrap();
        let specs = make_variant_specs();
        let opts = TrainOptions {
            max_train_rows: Some(120),
            ..TrainOptions::default()
        };
        let models = train_variants(&ds, &[specs[3], specs[20]], 1, &opts).unwrap();
        for m in models {
            let mut buf = Vec::new();
            write_model(&m, &mut buf).unwrap();
            let back = read_model(&buf[..]).unwrap();
            assert_eq!(back, m);
        }
    }

    #[test]
    fn truncated_file_is_format_error() {
        let text = "svr-model v1\nvariant = none\nc = 1\n";
        assert!(matches!(read_model(text.as_bytes()), Err(Error::Format { .. })));
    }
}
