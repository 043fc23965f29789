//! Text format:
//!
//! ```text
//! forest v1
//! params b=300 m=21 n_min=5 seed=7
//! oob_rmse = 0.051 | none
//! features = var1,var2,...
//! tree 12
//! S <feature> <threshold> <decrease> <n>
//! L <value> <n>
//! ```
//!
//! Each tree lists its nodes in pre-order.

use std::io::{BufRead, Write};

use super::{Forest, Node, RegressionTree, RfParams};
use crate::error::{Error, Result};

const MAGIC: &str = "forest v1";

pub fn write_forest(forest: &Forest, mut out: impl Write) -> std::io::Result<()> {
    let p = &forest.params;
    writeln!(out, "{MAGIC}")?;
    writeln!(
        out,
        "params b={} m={} n_min={} seed={}",
        p.b,
        p.resolved_m(forest.n_features()),
        p.n_min,
        p.seed
    )?;
    match forest.oob_rmse {
        Some(v) => writeln!(out, "oob_rmse = {v}")?,
        None => writeln!(out, "oob_rmse = none")?,
    }
    writeln!(out, "features = {}", forest.feature_names.join(","))?;
    for tree in &forest.trees {
        writeln!(out, "tree {}", tree.nodes().len())?;
        for node in tree.nodes() {
            match *node {
                Node::Split {
                    feature,
                    threshold,
                    decrease,
                    n,
                    ..
                } => writeln!(out, "S {feature} {threshold} {decrease} {n}")?,
                Node::Leaf { value, n } => writeln!(out, "L {value} {n}")?,
            }
        }
    }
    out.flush()
}

fn ferr(line: usize, message: impl Into<String>) -> Error {
    Error::Format {
        kind: "forest",
        line,
        message: message.into(),
    }
}

fn parse<T: std::str::FromStr>(s: &str, line: usize) -> Result<T> {
    s.parse().map_err(|_| ferr(line, format!("bad number {s:?}")))
}

/// Rebuilds right-child links from the pre-order list; returns the index after the subtree.
fn link(nodes: &mut [Node], at: usize, line: usize) -> Result<usize> {
    match nodes.get(at) {
        None => Err(ferr(line, "tree node list ends inside a subtree")),
        Some(Node::Leaf { .. }) => Ok(at + 1),
        Some(Node::Split { .. }) => {
            let right = link(nodes, at + 1, line)?;
            if let Node::Split { right: r, .. } = &mut nodes[at] {
                *r = right;
            }
            link(nodes, right, line)
        }
    }
}

pub fn read_forest(input: impl BufRead) -> Result<Forest> {
    let mut lines = input.lines().enumerate().map(|(i, l)| (i + 1, l));
    let mut next = || -> Result<(usize, String)> {
        match lines.next() {
            Some((i, Ok(l))) => Ok((i, l)),
            Some((i, Err(e))) => Err(ferr(i, e.to_string())),
            None => Err(ferr(0, "unexpected end of file")),
        }
    };

    let (i, magic) = next()?;
    if magic.trim() != MAGIC {
        return Err(ferr(i, "missing forest header"));
    }

    let (i, params_line) = next()?;
    let mut fields = params_line
        .strip_prefix("params ")
        .ok_or_else(|| ferr(i, "expected params line"))?
        .split_whitespace();
    let mut kv = |key: &str| -> Result<String> {
        let f = fields.next().ok_or_else(|| ferr(i, format!("missing {key}")))?;
        f.strip_prefix(key)
            .and_then(|s| s.strip_prefix('='))
            .map(str::to_string)
            .ok_or_else(|| ferr(i, format!("expected {key}=..., got {f:?}")))
    };
    let b: usize = parse(&kv("b")?, i)?;
    let m: usize = parse(&kv("m")?, i)?;
    let n_min: usize = parse(&kv("n_min")?, i)?;
    let seed: u64 = parse(&kv("seed")?, i)?;

    let (i, oob_line) = next()?;
    let oob = oob_line
        .strip_prefix("oob_rmse = ")
        .ok_or_else(|| ferr(i, "expected oob_rmse line"))?;
    let oob_rmse = if oob == "none" { None } else { Some(parse(oob, i)?) };

    let (i, feat_line) = next()?;
    let names = feat_line
        .strip_prefix("features = ")
        .ok_or_else(|| ferr(i, "expected features line"))?;
    let feature_names: Vec<String> = names.split(',').map(str::to_string).collect();
    let p = feature_names.len();

    let mut trees = Vec::with_capacity(b);
    for _ in 0..b {
        let (i, head) = next()?;
        let count: usize = parse(
            head.strip_prefix("tree ")
                .ok_or_else(|| ferr(i, "expected tree header"))?,
            i,
        )?;
        let mut nodes = Vec::with_capacity(count);
        for _ in 0..count {
            let (i, l) = next()?;
            let f: Vec<&str> = l.split_whitespace().collect();
            let node = match f.as_slice() {
                ["S", feat, thr, dec, n] => {
                    let feature: usize = parse(feat, i)?;
                    if feature >= p {
                        return Err(ferr(i, format!("feature index {feature} out of range")));
                    }
                    Node::Split {
                        feature,
                        threshold: parse(thr, i)?,
                        decrease: parse(dec, i)?,
                        n: parse(n, i)?,
                        right: 0,
                    }
                }
                ["L", v, n] => Node::Leaf {
                    value: parse(v, i)?,
                    n: parse(n, i)?,
                },
                _ => return Err(ferr(i, format!("bad node line {l:?}"))),
            };
            nodes.push(node);
        }
        if link(&mut nodes, 0, i)? != nodes.len() {
            return Err(ferr(i, "tree has trailing nodes"));
        }
        trees.push(RegressionTree::from_preorder(nodes));
    }

    Ok(Forest {
        trees,
        params: RfParams {
            b,
            m: Some(m),
            n_min,
            seed,
        },
        feature_names,
        oob_rmse,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::FeatureMatrix;
    use crate::forest::train_forest;

    #[test]
    fn round_trip_is_lossless() {
        let x: Vec<f64> = (0..50).map(|i| ((i * 37) % 50) as f64 / 7.0).collect();
        let z: Vec<f64> = (0..50).map(|i| ((i * 11) % 13) as f64).collect();
        let y: Vec<f64> = x.iter().zip(&z).map(|(a, b)| a.sin() + 0.1 * b).collect();
        let m = FeatureMatrix::from_columns(vec!["x".into(), "z".into()], &[x, z], Some(y)).unwrap();
        let f = train_forest(&m, &RfParams { b: 4, ..RfParams::new(8) }).unwrap();
        let mut buf = Vec::new();
        write_forest(&f, &mut buf).unwrap();
        assert_eq!(read_forest(&buf[..]).unwrap(), f);
    }

    #[test]
    fn garbage_is_rejected() {
        assert!(read_forest("forest v1\nparams b=1\n".as_bytes()).is_err());
        let text = "forest v1\nparams b=1 m=1 n_min=1 seed=0\noob_rmse = none\nfeatures = a\ntree 1\nS 0 0.5 1 4\n";
        assert!(read_forest(text.as_bytes()).is_err());
    }
}
