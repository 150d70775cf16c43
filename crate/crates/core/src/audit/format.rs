//! Plain-text interchange for kernels and priors.
//!
//! Both files are whitespace-separated (tabs or spaces). Blank lines and
//! anything after `#` are ignored.
//!
//! ```text
//! kernel
//! domain 2 2        # sizes |X_1| .. |X_d|
//! outputs 2         # |Y|
//! 0.5 0.5           # one row per input point, |Y| entries each
//! 1   0
//! 0.5 0.5
//! 0.5 0.5
//! ```
//!
//! ```text
//! prior
//! domain 2 2
//! 0.25              # |X| masses, any number per line
//! 0.25
//! 0.25 0.25
//! ```
//!
//! Input points are listed in mixed-radix order with the last coordinate
//! varying fastest: `(0,0), (0,1), (1,0), (1,1)` above.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::audit::finite::{DiscretePrior, FiniteMechanism, ProductDomain};
use crate::error::{Error, Result};

struct Lines<'a> {
    path: PathBuf,
    inner: std::iter::Peekable<Box<dyn Iterator<Item = (usize, Vec<&'a str>)> + 'a>>,
}

impl<'a> Lines<'a> {
    fn new(text: &'a str, path: &Path) -> Self {
        let iter: Box<dyn Iterator<Item = (usize, Vec<&'a str>)> + 'a> =
            Box::new(text.lines().enumerate().filter_map(|(n, line)| {
                let body = line.split('#').next().unwrap_or("");
                let tokens: Vec<&str> = body.split_whitespace().collect();
                (!tokens.is_empty()).then_some((n + 1, tokens))
            }));
        Lines {
            path: path.to_path_buf(),
            inner: iter.peekable(),
        }
    }

    fn error(&self, line: usize, message: impl Into<String>) -> Error {
        Error::Parse {
            path: self.path.clone(),
            line,
            message: message.into(),
        }
    }

    fn next_line(&mut self, what: &str) -> Result<(usize, Vec<&'a str>)> {
        self.inner
            .next()
            .ok_or_else(|| self.error(0, format!("unexpected end of file, expected {what}")))
    }

    fn keyword(&mut self, word: &str) -> Result<Vec<&'a str>> {
        let (n, tokens) = self.next_line(word)?;
        if tokens[0] != word {
            return Err(self.error(n, format!("expected `{word}`, found `{}`", tokens[0])));
        }
        Ok(tokens[1..].to_vec())
    }

    fn numbers<T: std::str::FromStr>(&self, line: usize, tokens: &[&str]) -> Result<Vec<T>> {
        tokens
            .iter()
            .map(|t| {
                t.parse::<T>()
                    .map_err(|_| self.error(line, format!("cannot parse `{t}`")))
            })
            .collect()
    }

    fn domain(&mut self) -> Result<ProductDomain> {
        let n = self.inner.peek().map_or(0, |(n, _)| *n);
        let sizes = self.keyword("domain")?;
        let sizes = self.numbers::<usize>(n, &sizes)?;
        ProductDomain::new(sizes).map_err(|e| self.error(n, e.to_string()))
    }
}

pub fn parse_kernel(text: &str, path: &Path) -> Result<FiniteMechanism> {
    let mut lines = Lines::new(text, path);
    lines.keyword("kernel")?;
    let domain = lines.domain()?;
    let n = lines.inner.peek().map_or(0, |(n, _)| *n);
    let outputs = lines.keyword("outputs")?;
    let outputs = match lines.numbers::<usize>(n, &outputs)?.as_slice() {
        [m] => *m,
        _ => return Err(lines.error(n, "`outputs` takes one size")),
    };
    let mut kernel = Vec::with_capacity(domain.len() * outputs);
    let mut last = n;
    for x in 0..domain.len() {
        let (n, tokens) = lines.next_line(&format!("kernel row {x}"))?;
        if tokens.len() != outputs {
            return Err(lines.error(n, format!("row has {} entries, expected {outputs}", tokens.len())));
        }
        kernel.extend(lines.numbers::<f64>(n, &tokens)?);
        last = n;
    }
    if let Some((n, _)) = lines.inner.next() {
        return Err(lines.error(n, "trailing data after the last kernel row"));
    }
    FiniteMechanism::new(domain, outputs, kernel).map_err(|e| lines.error(last, e.to_string()))
}

pub fn parse_prior(text: &str, path: &Path) -> Result<DiscretePrior> {
    let mut lines = Lines::new(text, path);
    lines.keyword("prior")?;
    let domain = lines.domain()?;
    let mut pmf = Vec::with_capacity(domain.len());
    let mut last = 0;
    while let Some((n, tokens)) = lines.inner.next() {
        pmf.extend(lines.numbers::<f64>(n, &tokens)?);
        last = n;
    }
    if pmf.len() != domain.len() {
        return Err(lines.error(
            last,
            format!("found {} masses, expected {}", pmf.len(), domain.len()),
        ));
    }
    DiscretePrior::new(domain, pmf).map_err(|e| lines.error(last, e.to_string()))
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

pub fn read_kernel(path: impl AsRef<Path>) -> Result<FiniteMechanism> {
    let path = path.as_ref();
    parse_kernel(&read(path)?, path)
}

pub fn read_prior(path: impl AsRef<Path>) -> Result<DiscretePrior> {
    let path = path.as_ref();
    parse_prior(&read(path)?, path)
}

fn sizes_line(domain: &ProductDomain) -> String {
    let sizes: Vec<String> = domain.sizes().iter().map(usize::to_string).collect();
    format!("domain\t{}\n", sizes.join("\t"))
}

pub fn format_kernel(mechanism: &FiniteMechanism) -> String {
    let mut out = String::from("kernel\n");
    out.push_str(&sizes_line(mechanism.domain()));
    let _ = writeln!(out, "outputs\t{}", mechanism.outputs());
    for x in 0..mechanism.domain().len() {
        let row: Vec<String> = mechanism.row(x).iter().map(f64::to_string).collect();
        let _ = writeln!(out, "{}", row.join("\t"));
    }
    out
}

pub fn format_prior(prior: &DiscretePrior) -> String {
    let mut out = String::from("prior\n");
    out.push_str(&sizes_line(prior.domain()));
    for p in prior.pmf() {
        let _ = writeln!(out, "{p}");
    }
    out
}
