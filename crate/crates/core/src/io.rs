//! Plain-text coefficient files.
//!
//! ```text
//! # order=N domain=real|complex
//! re            (real domain, one coefficient per line)
//! re,im         (complex domain)
//! ```
//!
//! Values are written with 17 significant digits so they parse back
//! exactly. Blank lines and further `#` lines are ignored on input.

use std::fmt::Write as _;

use num_complex::Complex64;

use crate::autocorr::AutocorrSequence;
use crate::error::{invalid, Result};
use crate::spectrum::{CoeffDomain, FirFilter};

/// Formats `coeffs` under a header declaring `order = len - 1`.
pub fn format_coeffs(coeffs: &[Complex64], domain: CoeffDomain) -> String {
    let mut out = format!("# order={} domain={}\n", coeffs.len().saturating_sub(1), domain.as_str());
    for c in coeffs {
        match domain {
            CoeffDomain::Real => writeln!(out, "{:.16e}", c.re),
            CoeffDomain::Complex => writeln!(out, "{:.16e},{:.16e}", c.re, c.im),
        }
        .expect("writing to a String cannot fail");
    }
    out
}

pub fn format_filter(h: &FirFilter) -> String {
    format_coeffs(h.coeffs(), h.domain())
}

/// One-sided lags `p[0..=N]` in the coefficient format.
pub fn format_autocorr(p: &AutocorrSequence) -> String {
    format_coeffs(p.one_sided(), p.domain())
}

/// Parses a coefficient file. The header is required and the number of
/// values must equal the declared order plus one.
pub fn parse_coeffs(text: &str) -> Result<(Vec<Complex64>, CoeffDomain)> {
    let mut header: Option<(usize, CoeffDomain)> = None;
    let mut values = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        let lineno = i + 1;
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix('#') {
            if header.is_none() {
                header = Some(parse_header(rest, lineno)?);
            }
            continue;
        }
        let Some((_, domain)) = header else {
            return invalid(format!("line {lineno}: data before the '# order=N domain=...' header"));
        };
        values.push(parse_value(line, domain, lineno)?);
    }
    let Some((order, domain)) = header else {
        return invalid("missing '# order=N domain=...' header");
    };
    if values.len() != order + 1 {
        return invalid(format!(
            "header declares order {order} ({} coefficients) but {} were found",
            order + 1,
            values.len()
        ));
    }
    Ok((values, domain))
}

pub fn parse_filter(text: &str) -> Result<FirFilter> {
    let (coeffs, domain) = parse_coeffs(text)?;
    FirFilter::new(coeffs, domain)
}

fn parse_header(rest: &str, lineno: usize) -> Result<(usize, CoeffDomain)> {
    let mut order = None;
    let mut domain = None;
    for field in rest.split_whitespace() {
        match field.split_once('=') {
            Some(("order", v)) => {
                order = Some(v.parse::<usize>().map_err(|_| {
                    crate::Error::InvalidInput(format!("line {lineno}: bad order '{v}'"))
                })?);
            }
            Some(("domain", v)) => {
                domain = Some(v.parse::<CoeffDomain>().map_err(|e| {
                    crate::Error::InvalidInput(format!("line {lineno}: {e}"))
                })?);
            }
            _ => return invalid(format!("line {lineno}: unexpected header field '{field}'")),
        }
    }
    match (order, domain) {
        (Some(o), Some(d)) => Ok((o, d)),
        _ => invalid(format!("line {lineno}: header needs both order= and domain=")),
    }
}

fn parse_value(line: &str, domain: CoeffDomain, lineno: usize) -> Result<Complex64> {
    let num = |s: &str| {
        s.trim()
            .parse::<f64>()
            .map_err(|_| crate::Error::InvalidInput(format!("line {lineno}: bad number '{}'", s.trim())))
    };
    match (domain, line.split_once(',')) {
        (CoeffDomain::Real, None) => Ok(Complex64::new(num(line)?, 0.0)),
        (CoeffDomain::Real, Some(_)) => invalid(format!("line {lineno}: complex value in a real-domain file")),
        (CoeffDomain::Complex, Some((re, im))) => Ok(Complex64::new(num(re)?, num(im)?)),
        (CoeffDomain::Complex, None) => Ok(Complex64::new(num(line)?, 0.0)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_is_exact() {
        let h = FirFilter::new(
            vec![Complex64::new(0.1, -1.0 / 3.0), Complex64::new(std::f64::consts::PI, 1e-300)],
            CoeffDomain::Complex,
        )
        .unwrap();
        let text = format_filter(&h);
        assert!(text.starts_with("# order=1 domain=complex\n"));
        assert_eq!(parse_filter(&text).unwrap(), h);

        let r = FirFilter::from_real(&[1.0 / 7.0, -2.5e-17, 0.0]).unwrap();
        assert_eq!(parse_filter(&format_filter(&r)).unwrap(), r);
    }

    #[test]
    fn count_must_match_header() {
        assert!(parse_filter("# order=2 domain=real\n1\n2\n").is_err());
        assert!(parse_filter("# order=0 domain=real\n1\n2\n").is_err());
        assert!(parse_filter("1\n").is_err());
        assert!(parse_filter("# order=0 domain=real\n1,2\n").is_err());
        assert!(parse_filter("# order=0 domain=real\nabc\n").is_err());
        assert!(parse_filter("# order=1 domain=real\n\n1\n# note\n2\n").is_ok());
    }
}
