//! Compact text grammar for space descriptors.
//!
//! ```text
//! spec      := euclidean | normed | snowflake | mixed | shift
//! euclidean := "euclidean" (":" uint | "(" uint ")")
//! normed    := "normed" "(" uint "," (real | "sup" | "inf") ")"
//! snowflake := "snowflake" "(" spec "," real ")"
//! mixed     := "mixed" "(" real ("," real)* ")"
//! shift     := "shift" (":" uint | "(" uint ")")
//! ```
//!
//! Whitespace between tokens is ignored. Errors carry the byte offset of
//! the offending token.

use super::{Norm, SpaceDescriptor};
use crate::error::{Error, Result};

pub fn parse_space_spec(text: &str) -> Result<SpaceDescriptor> {
    let mut p = Parser { src: text, pos: 0 };
    let desc = p.spec()?;
    p.skip_ws();
    if p.pos != text.len() {
        return Err(p.error("unexpected trailing input"));
    }
    Ok(desc)
}

struct Parser<'a> {
    src: &'a str,
    pos: usize,
}

impl Parser<'_> {
    fn error(&self, message: impl Into<String>) -> Error {
        Error::Parse {
            offset: self.pos,
            message: message.into(),
        }
    }

    fn rest(&self) -> &str {
        &self.src[self.pos..]
    }

    fn skip_ws(&mut self) {
        let trimmed = self.rest().trim_start();
        self.pos = self.src.len() - trimmed.len();
    }

    fn eat(&mut self, c: char) -> bool {
        self.skip_ws();
        if self.rest().starts_with(c) {
            self.pos += c.len_utf8();
            true
        } else {
            false
        }
    }

    fn expect(&mut self, c: char) -> Result<()> {
        if self.eat(c) {
            Ok(())
        } else {
            Err(self.error(format!("expected '{c}'")))
        }
    }

    fn ident(&mut self) -> Result<(usize, &str)> {
        self.skip_ws();
        let start = self.pos;
        let len = self
            .rest()
            .find(|c: char| !c.is_ascii_alphabetic())
            .unwrap_or(self.rest().len());
        if len == 0 {
            return Err(self.error("expected a space kind"));
        }
        self.pos += len;
        Ok((start, &self.src[start..start + len]))
    }

    fn number_token(&mut self) -> Result<(usize, &str)> {
        self.skip_ws();
        let start = self.pos;
        let len = self
            .rest()
            .find(|c: char| !(c.is_ascii_alphanumeric() || matches!(c, '.' | '-' | '+' | '/')))
            .unwrap_or(self.rest().len());
        if len == 0 {
            return Err(self.error("expected a number"));
        }
        self.pos += len;
        Ok((start, &self.src[start..start + len]))
    }

    fn real(&mut self) -> Result<f64> {
        let (start, tok) = self.number_token()?;
        parse_real(tok).ok_or_else(|| Error::Parse {
            offset: start,
            message: format!("invalid number {tok:?}"),
        })
    }

    fn uint(&mut self) -> Result<usize> {
        let (start, tok) = self.number_token()?;
        tok.parse().map_err(|_| Error::Parse {
            offset: start,
            message: format!("expected a non-negative integer, got {tok:?}"),
        })
    }

    /// `":" uint` or `"(" uint ")"`.
    fn size_arg(&mut self) -> Result<usize> {
        if self.eat(':') {
            self.uint()
        } else if self.eat('(') {
            let n = self.uint()?;
            self.expect(')')?;
            Ok(n)
        } else {
            Err(self.error("expected ':' or '('"))
        }
    }

    fn spec(&mut self) -> Result<SpaceDescriptor> {
        let (start, kind) = self.ident()?;
        let at = |e: Error| match e {
            Error::Domain(message) => Error::Parse {
                offset: start,
                message,
            },
            other => other,
        };
        match kind.to_ascii_lowercase().as_str() {
            "euclidean" => {
                let dim = self.size_arg()?;
                SpaceDescriptor::euclidean(dim).map_err(at)
            }
            "shift" => {
                let window = self.size_arg()?;
                SpaceDescriptor::shift(window).map_err(at)
            }
            "normed" => {
                self.expect('(')?;
                let dim = self.uint()?;
                self.expect(',')?;
                let (tok_start, tok) = self.number_token()?;
                let norm = match tok.to_ascii_lowercase().as_str() {
                    "sup" | "inf" | "max" => Norm::Sup,
                    _ => Norm::P(parse_real(tok).ok_or_else(|| Error::Parse {
                        offset: tok_start,
                        message: format!("invalid norm exponent {tok:?}"),
                    })?),
                };
                self.expect(')')?;
                SpaceDescriptor::normed(dim, norm).map_err(at)
            }
            "snowflake" => {
                self.expect('(')?;
                let base = self.spec()?;
                self.expect(',')?;
                let eps = self.real()?;
                self.expect(')')?;
                SpaceDescriptor::snowflaked(base, eps).map_err(at)
            }
            "mixed" => {
                self.expect('(')?;
                let mut exps = vec![self.real()?];
                while self.eat(',') {
                    exps.push(self.real()?);
                }
                self.expect(')')?;
                SpaceDescriptor::mixed(exps).map_err(at)
            }
            _ => Err(Error::Parse {
                offset: start,
                message: format!("unknown space kind {kind:?}"),
            }),
        }
    }
}

/// Decimal or `a/b` rational.
fn parse_real(tok: &str) -> Option<f64> {
    let v = match tok.split_once('/') {
        Some((a, b)) => a.parse::<f64>().ok()? / b.parse::<f64>().ok()?,
        None => tok.parse::<f64>().ok()?,
    };
    v.is_finite().then_some(v)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn simple_kinds() {
        assert_eq!(parse_space_spec("euclidean:3").unwrap(), SpaceDescriptor::Euclidean { dim: 3 });
        assert_eq!(parse_space_spec(" shift( 4 ) ").unwrap(), SpaceDescriptor::Shift { window: 4 });
        assert_eq!(
            parse_space_spec("normed(2, sup)").unwrap(),
            SpaceDescriptor::Normed { dim: 2, norm: Norm::Sup }
        );
        assert_eq!(
            parse_space_spec("mixed(1,1/2)").unwrap(),
            SpaceDescriptor::Mixed { exponents: vec![1.0, 0.5] }
        );
    }

    #[test]
    fn nested_snowflake_normalizes() {
        let d = parse_space_spec("snowflake(mixed(1,0.5),0.5)").unwrap();
        assert_eq!(
            d,
            SpaceDescriptor::Snowflaked {
                base: Box::new(SpaceDescriptor::Mixed { exponents: vec![1.0, 0.5] }),
                eps: 0.5
            }
        );
        let d = parse_space_spec("snowflake(snowflake(euclidean:1,0.5),0.5)").unwrap();
        assert_eq!(
            d,
            SpaceDescriptor::Snowflaked {
                base: Box::new(SpaceDescriptor::Euclidean { dim: 1 }),
                eps: 0.25
            }
        );
    }

    #[test]
    fn range_and_syntax_errors_carry_offsets() {
        match parse_space_spec("snowflake(euclidean:1,1.5)") {
            Err(Error::Parse { offset, message }) => {
                assert_eq!(offset, 0);
                assert!(message.contains("(0, 1]"), "{message}");
            }
            other => panic!("expected range error, got {other:?}"),
        }
        match parse_space_spec("euclidean:2 junk") {
            Err(Error::Parse { offset, .. }) => assert_eq!(offset, 12),
            other => panic!("{other:?}"),
        }
        match parse_space_spec("torus:2") {
            Err(Error::Parse { offset, message }) => {
                assert_eq!(offset, 0);
                assert!(message.contains("torus"));
            }
            other => panic!("{other:?}"),
        }
        match parse_space_spec("mixed(1,x)") {
            Err(Error::Parse { offset, .. }) => assert_eq!(offset, 8),
            other => panic!("{other:?}"),
        }
        assert!(parse_space_spec("euclidean:0").is_err());
        assert!(parse_space_spec("").is_err());
    }
}
