//! Plain-text code specification files.
//!
//! ```text
//! # code 2
//! vn 1 0.560
//! vn 2 0.371
//! cn 5 0.582
//! n 50000
//! ```
//!
//! Fractions are node-perspective and are ingested leniently.

use std::fmt::Write as _;
use std::path::Path;

use crate::degree::{DegreeDistribution, EnsembleSpec, Perspective, Side, Validation};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct CodeSpec {
    pub ensemble: EnsembleSpec,
    pub n: Option<usize>,
}

impl CodeSpec {
    pub fn parse(text: &str) -> Result<Self> {
        let mut vn = Vec::new();
        let mut cn = Vec::new();
        let mut n = None;
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let err = |msg: &str| Error::Parse {
                line: line_no,
                msg: msg.to_string(),
            };
            let tokens: Vec<&str> = line.split_whitespace().collect();
            match tokens.as_slice() {
                ["vn" | "cn", deg, frac] => {
                    let deg: u32 = deg.parse().map_err(|_| err("bad degree"))?;
                    let frac: f64 = frac.parse().map_err(|_| err("bad fraction"))?;
                    if tokens[0] == "vn" {
                        vn.push((deg, frac));
                    } else {
                        cn.push((deg, frac));
                    }
                }
                ["n", value] => {
                    n = Some(value.parse().map_err(|_| err("bad blocklength"))?);
                }
                _ => return Err(err("expected `vn <d> <f>`, `cn <d> <f>` or `n <int>`")),
            }
        }
        let vn = DegreeDistribution::validate_with(vn, Perspective::Node, Side::Variable, Validation::LENIENT)?;
        let cn = DegreeDistribution::validate_with(cn, Perspective::Node, Side::Check, Validation::LENIENT)?;
        Ok(CodeSpec {
            ensemble: EnsembleSpec::new(vn, cn)?,
            n,
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "# design rate {:.6}", self.ensemble.design_rate);
        for (d, f) in self.ensemble.vn.iter() {
            let _ = writeln!(out, "vn {d} {f:.12}");
        }
        for (d, f) in self.ensemble.cn.iter() {
            let _ = writeln!(out, "cn {d} {f:.12}");
        }
        if let Some(n) = self.n {
            let _ = writeln!(out, "n {n}");
        }
        out
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_text())?;
        Ok(())
    }
}
