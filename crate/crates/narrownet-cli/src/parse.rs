//! Text parsers for domains and polynomial targets.

use anyhow::{bail, Context, Result};
use narrownet::poly::{Polynomial, Term};
use narrownet::DomainBox;

/// Parses `"l1,u1;l2,u2;..."` into a box, one `lo,hi` pair per dimension.
pub fn parse_domain(text: &str) -> Result<DomainBox> {
    let mut lower = Vec::new();
    let mut upper = Vec::new();
    for (i, part) in text.split(';').enumerate() {
        let (lo, hi) = part
            .split_once(',')
            .with_context(|| format!("domain part {i} is not 'lo,hi': '{part}'"))?;
        lower.push(
            lo.trim()
                .parse::<f64>()
                .with_context(|| format!("bad lower bound '{lo}'"))?,
        );
        upper.push(
            hi.trim()
                .parse::<f64>()
                .with_context(|| format!("bad upper bound '{hi}'"))?,
        );
    }
    DomainBox::new(lower, upper).context("bad domain")
}

/// Parses `;`-separated polynomials, each a `+`/`-` separated list of terms
/// like `2 * x1^2 * x2`, `x1^3`, or `0.5`. Factors may be joined by `*` or
/// whitespace; variables are `x1..xn`.
pub fn parse_polynomials(text: &str, n_vars: usize) -> Result<Vec<Polynomial>> {
    text.split(';')
        .map(|part| parse_polynomial(part, n_vars))
        .collect()
}

fn parse_polynomial(text: &str, n_vars: usize) -> Result<Polynomial> {
    let mut terms = Vec::new();
    for (sign, body) in split_signed_terms(text)? {
        if body.trim().is_empty() {
            bail!("empty term in '{text}'");
        }
        terms.push(parse_term(sign, body.trim(), n_vars)?);
    }
    Polynomial::new(n_vars, terms).context("bad polynomial")
}

/// Splits on top-level `+`/`-` while keeping each term's sign. A sign right
/// after `e`/`E` sits inside a float exponent and does not split.
fn split_signed_terms(text: &str) -> Result<Vec<(f64, String)>> {
    let mut out: Vec<(f64, String)> = Vec::new();
    let mut current = String::new();
    let mut sign = 1.0;
    let mut prev_non_space = '\0';
    for c in text.chars() {
        let splits = (c == '+' || c == '-')
            && !matches!(prev_non_space, 'e' | 'E')
            && !(current.trim().is_empty() && out.is_empty() && prev_non_space == '\0');
        if splits {
            if !current.trim().is_empty() {
                out.push((sign, core::mem::take(&mut current)));
                sign = 1.0;
            }
            if c == '-' {
                sign = -sign;
            }
        } else if (c == '+' || c == '-') && current.trim().is_empty() && prev_non_space == '\0' {
            // Leading sign of the very first term.
            if c == '-' {
                sign = -sign;
            }
        } else {
            current.push(c);
        }
        if !c.is_whitespace() {
            prev_non_space = c;
        }
    }
    if !current.trim().is_empty() {
        out.push((sign, current));
    }
    if out.is_empty() {
        bail!("no terms in '{text}'");
    }
    Ok(out)
}

fn parse_term(sign: f64, body: &str, n_vars: usize) -> Result<Term> {
    let mut coeff = sign;
    let mut exps = vec![0u32; n_vars];
    for token in body.split(|c: char| c == '*' || c.is_whitespace()) {
        let token = token.trim();
        if token.is_empty() {
            continue;
        }
        if let Some(rest) = token.strip_prefix('x') {
            let (idx_text, exp_text) = match rest.split_once('^') {
                Some((i, e)) => (i, Some(e)),
                None => (rest, None),
            };
            let idx: usize = idx_text
                .parse()
                .with_context(|| format!("bad variable '{token}'"))?;
            if idx == 0 || idx > n_vars {
                bail!("variable '{token}' is outside x1..x{n_vars}");
            }
            let exp: u32 = match exp_text {
                Some(e) => e
                    .parse()
                    .with_context(|| format!("bad exponent in '{token}'"))?,
                None => 1,
            };
            exps[idx - 1] += exp;
        } else {
            let value: f64 = token
                .parse()
                .with_context(|| format!("bad factor '{token}'"))?;
            coeff *= value;
        }
    }
    Ok(Term { coeff, exps })
}

/// Parses `--sweep` values: `name=v1,v2,...` with at least one value.
pub fn parse_sweep(text: &str) -> Result<(String, Vec<f64>)> {
    let (name, rest) = text
        .split_once('=')
        .context("sweep must look like name=v1,v2,...")?;
    let values: Vec<f64> = rest
        .split(',')
        .map(|v| {
            v.trim()
                .parse::<f64>()
                .with_context(|| format!("bad sweep value '{v}'"))
        })
        .collect::<Result<_>>()?;
    if values.is_empty() {
        bail!("sweep needs at least one value");
    }
    Ok((name.trim().to_string(), values))
}
