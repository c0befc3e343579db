//! Line-oriented text format for solvability certificates.
//!
//! Tokens on a line are separated by any whitespace and blank lines are
//! ignored, but the order of lines is fixed. Forms are written as
//! `a b c` with `b` half the middle coefficient.

use std::fmt::Write as _;

use num_bigint::BigInt;

use crate::compose::{BiMat, ChainStep};
use crate::error::{Error, Result};
use crate::forms::QForm;
use crate::frontend::{DioSystem, SignCase};
use crate::matrix::{Mat2, UniMat};

use super::{InfraCert, SolvCert, SolvProof};

/// First line of a solvability certificate.
pub const SOLV_HEADER: &str = "BQD-CERT 1";

/// Reads non-blank lines as token lists, tracking one-based line numbers.
pub(crate) struct Lines<'a> {
    inner: std::iter::Enumerate<std::str::Lines<'a>>,
    last: usize,
}

impl<'a> Lines<'a> {
    pub(crate) fn new(text: &'a str) -> Self {
        Lines { inner: text.lines().enumerate(), last: 0 }
    }

    pub(crate) fn error(&self, line: usize, message: impl Into<String>) -> Error {
        Error::Parse { line, message: message.into() }
    }

    /// The next non-blank line as `(line number, tokens)`.
    pub(crate) fn next(&mut self) -> Result<(usize, Vec<&'a str>)> {
        for (i, line) in self.inner.by_ref() {
            let tokens: Vec<&str> = line.split_whitespace().collect();
            if !tokens.is_empty() {
                self.last = i + 1;
                return Ok((i + 1, tokens));
            }
        }
        Err(self.error(self.last + 1, "unexpected end of certificate"))
    }

    /// The next line, which must start with `keyword` and carry exactly
    /// `count` further tokens.
    pub(crate) fn keyword(&mut self, keyword: &str, count: usize) -> Result<(usize, Vec<&'a str>)> {
        let (line, tokens) = self.next()?;
        if tokens[0] != keyword {
            return Err(self.error(line, format!("expected {keyword}, found {}", tokens[0])));
        }
        if tokens.len() != count + 1 {
            return Err(self.error(line, format!("{keyword} takes {count} values, found {}", tokens.len() - 1)));
        }
        Ok((line, tokens[1..].to_vec()))
    }

    /// Integers following `keyword`.
    pub(crate) fn ints(&mut self, keyword: &str, count: usize) -> Result<(usize, Vec<BigInt>)> {
        let (line, tokens) = self.keyword(keyword, count)?;
        let values = tokens.iter().map(|t| self.int(line, t)).collect::<Result<Vec<_>>>()?;
        Ok((line, values))
    }

    pub(crate) fn int(&self, line: usize, token: &str) -> Result<BigInt> {
        token.parse().map_err(|_| self.error(line, format!("not an integer: {token}")))
    }

    pub(crate) fn count(&self, line: usize, token: &str) -> Result<usize> {
        token.parse().map_err(|_| self.error(line, format!("not a count: {token}")))
    }

    /// A header line that must match exactly.
    pub(crate) fn header(&mut self, header: &str) -> Result<()> {
        let (line, tokens) = self.next()?;
        if tokens.join(" ") != header {
            return Err(self.error(line, format!("expected header {header}")));
        }
        Ok(())
    }

    /// The closing `END`, with nothing after it.
    pub(crate) fn end(&mut self) -> Result<()> {
        self.keyword("END", 0)?;
        if let Ok((line, _)) = self.next() {
            return Err(self.error(line, "text after END"));
        }
        Ok(())
    }

    pub(crate) fn form(&mut self, keyword: &str) -> Result<QForm> {
        let (_, v) = self.ints(keyword, 3)?;
        Ok(QForm { a: v[0].clone(), b: v[1].clone(), c: v[2].clone() })
    }

    pub(crate) fn unimodular(&self, line: usize, v: &[BigInt]) -> Result<UniMat> {
        UniMat::new(Mat2::new(v[0].clone(), v[1].clone(), v[2].clone(), v[3].clone()))
            .map_err(|_| self.error(line, "matrix does not have determinant 1"))
    }

    pub(crate) fn unimodular_line(&mut self, keyword: &str) -> Result<UniMat> {
        let (line, v) = self.ints(keyword, 4)?;
        self.unimodular(line, &v)
    }

    /// `CHAIN <label> n` followed by `n` step lines.
    pub(crate) fn chain(&mut self, label: Option<&str>) -> Result<Vec<ChainStep>> {
        let (line, tokens) = self.next()?;
        let expected = if label.is_some() { 3 } else { 2 };
        if tokens[0] != "CHAIN" || tokens.len() != expected || label.is_some_and(|l| tokens[1] != l) {
            let want = label.map_or("CHAIN n".to_string(), |l| format!("CHAIN {l} n"));
            return Err(self.error(line, format!("expected {want}")));
        }
        let n = self.count(line, tokens[expected - 1])?;
        let mut steps = Vec::with_capacity(n.min(1 << 16));
        for _ in 0..n {
            let (line, tokens) = self.next()?;
            let values = tokens[1..].iter().map(|t| self.int(line, t)).collect::<Result<Vec<_>>>();
            match (tokens[0], tokens.len()) {
                ("T1", 5) => steps.push(ChainStep::Transform(self.unimodular(line, &values?)?)),
                ("T2", 11) => {
                    let left = self.count(line, tokens[1])?;
                    let right = self.count(line, tokens[2])?;
                    let v = values?;
                    let row = |r: usize| [v[2 + 4 * r].clone(), v[3 + 4 * r].clone(), v[4 + 4 * r].clone(), v[5 + 4 * r].clone()];
                    steps.push(ChainStep::Compose { left, right, bilinear: BiMat::new([row(0), row(1)]) });
                }
                _ => return Err(self.error(line, "expected a step `T1 s11 s12 s21 s22` or `T2 k1 k2 b11 … b24`")),
            }
        }
        Ok(steps)
    }
}

pub(crate) fn write_matrix(out: &mut String, m: &Mat2) {
    for x in m.entries() {
        let _ = write!(out, " {x}");
    }
}

pub(crate) fn write_form(out: &mut String, keyword: &str, q: &QForm) {
    let _ = writeln!(out, "{keyword} {} {} {}", q.a, q.b, q.c);
}

pub(crate) fn write_chain(out: &mut String, label: Option<&str>, steps: &[ChainStep]) {
    match label {
        Some(l) => {
            let _ = writeln!(out, "CHAIN {l} {}", steps.len());
        }
        None => {
            let _ = writeln!(out, "CHAIN {}", steps.len());
        }
    }
    for step in steps {
        match step {
            ChainStep::Transform(s) => {
                out.push_str("  T1");
                write_matrix(out, s.mat());
            }
            ChainStep::Compose { left, right, bilinear } => {
                let _ = write!(out, "  T2 {left} {right}");
                for x in bilinear.entries() {
                    let _ = write!(out, " {x}");
                }
            }
        }
        out.push('\n');
    }
}

impl SolvCert {
    /// Serializes the certificate.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{SOLV_HEADER}");
        let kind = if self.is_infra() { "infra" } else { "direct" };
        let _ = writeln!(out, "KIND {kind}");
        let _ = writeln!(out, "SYSTEM {}", self.system);
        match &self.proof {
            SolvProof::Direct { x1, x2 } => {
                let _ = writeln!(out, "X {x1} {x2}");
            }
            SolvProof::Infra(c) => {
                let _ = writeln!(out, "H {}", c.h);
                write_form(&mut out, "Q0", &c.q0);
                out.push('S');
                write_matrix(&mut out, c.s.mat());
                out.push('\n');
                write_form(&mut out, "QRED", &c.q_red);
                let _ = writeln!(out, "SIGNCASE {}", c.sign_case.tag());
                let _ = writeln!(out, "K {}", c.k);
                let _ = writeln!(out, "M {}", u8::from(c.negate));
                let _ = writeln!(out, "FPPREC {}", c.fp_precision);
                write_chain(&mut out, Some("J"), &c.chain_j);
                write_chain(&mut out, Some("2P"), &c.chain_2p);
            }
        }
        out.push_str("END\n");
        out
    }

    /// Parses a certificate; errors carry the offending line number.
    pub fn from_text(text: &str) -> Result<SolvCert> {
        let mut lines = Lines::new(text);
        lines.header(SOLV_HEADER)?;
        let (kind_line, kind) = lines.keyword("KIND", 1)?;
        let kind = kind[0];
        let (sys_line, v) = lines.ints("SYSTEM", 9)?;
        let coeffs = [v[0].clone(), v[1].clone(), v[2].clone(), v[3].clone(), v[4].clone(), v[5].clone()];
        let system = DioSystem::from_normalized(coeffs, v[6].clone(), [v[7].clone(), v[8].clone()])
            .map_err(|e| lines.error(sys_line, e.to_string()))?;
        let proof = match kind {
            "direct" => {
                let (_, x) = lines.ints("X", 2)?;
                SolvProof::Direct { x1: x[0].clone(), x2: x[1].clone() }
            }
            "infra" => SolvProof::Infra(parse_infra(&mut lines)?),
            other => return Err(lines.error(kind_line, format!("unknown kind {other}"))),
        };
        lines.end()?;
        Ok(SolvCert { system, proof })
    }
}

fn parse_infra(lines: &mut Lines<'_>) -> Result<InfraCert> {
    let (_, h) = lines.ints("H", 1)?;
    let q0 = lines.form("Q0")?;
    let s = lines.unimodular_line("S")?;
    let q_red = lines.form("QRED")?;
    let (case_line, tag) = lines.keyword("SIGNCASE", 1)?;
    let sign_case =
        SignCase::from_tag(tag[0]).ok_or_else(|| lines.error(case_line, format!("unknown sign case {}", tag[0])))?;
    let (k_line, k) = lines.ints("K", 1)?;
    let k = k[0].clone();
    if k < BigInt::from(0) {
        return Err(lines.error(k_line, "K must be nonnegative"));
    }
    let (m_line, m) = lines.keyword("M", 1)?;
    let negate = match m[0] {
        "0" => false,
        "1" => true,
        other => return Err(lines.error(m_line, format!("M must be 0 or 1, found {other}"))),
    };
    let (p_line, p) = lines.keyword("FPPREC", 1)?;
    let fp_precision = p[0].parse().map_err(|_| lines.error(p_line, format!("bad precision {}", p[0])))?;
    let chain_j = lines.chain(Some("J"))?;
    let chain_2p = lines.chain(Some("2P"))?;
    Ok(InfraCert { h: h[0].clone(), q0, s, q_red, sign_case, k, negate, fp_precision, chain_j, chain_2p })
}
