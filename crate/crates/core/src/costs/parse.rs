//! Parser for the θ-spec grammar:
//!
//! ```text
//! spec := "power:p=" F
//!       | "quadlin:t0=" F
//!       | "quadexcess:t0=" F ",p=" F
//!       | "alpha:D=" F ",l0=" F
//!       | "scale:a=" F "(" spec ")"
//!       | "sum(" spec (";" spec)+ ")"
//! ```

use super::CostFunction;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Parses a θ-spec string into a validated [`CostFunction`].
pub fn parse_theta<T: Scalar>(spec: &str) -> Result<CostFunction<T>> {
    let mut p = Parser { src: spec.as_bytes(), pos: 0 };
    p.skip_ws();
    let cost = p.spec()?;
    p.skip_ws();
    if p.pos != p.src.len() {
        return Err(p.error("trailing input"));
    }
    Ok(cost)
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
}

impl Parser<'_> {
    fn error(&self, msg: &str) -> Error {
        Error::Parse { pos: self.pos, msg: msg.to_string() }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn eat(&mut self, token: &str) -> bool {
        self.skip_ws();
        if self.src[self.pos..].starts_with(token.as_bytes()) {
            self.pos += token.len();
            true
        } else {
            false
        }
    }

    fn expect(&mut self, token: &str) -> Result<()> {
        if self.eat(token) {
            Ok(())
        } else {
            Err(self.error(&format!("expected `{token}`")))
        }
    }

    fn number<T: Scalar>(&mut self) -> Result<T> {
        self.skip_ws();
        let start = self.pos;
        while self.pos < self.src.len() && !b",;()".contains(&self.src[self.pos]) {
            self.pos += 1;
        }
        let text = std::str::from_utf8(&self.src[start..self.pos]).unwrap_or("").trim();
        match text.parse::<f64>() {
            Ok(v) if v.is_finite() => Ok(T::lit(v)),
            _ => Err(Error::Parse { pos: start, msg: format!("invalid number `{text}`") }),
        }
    }

    fn param<T: Scalar>(&mut self, key: &str) -> Result<T> {
        self.expect(key)?;
        self.expect("=")?;
        self.number()
    }

    fn spec<T: Scalar>(&mut self) -> Result<CostFunction<T>> {
        let at = self.pos;
        let located = |e: Error| match e {
            Error::NonConvex(msg) => Error::NonConvex(format!("{msg} (at position {at})")),
            other => other,
        };
        if self.eat("power:") {
            let p = self.param("p")?;
            CostFunction::power(p).map_err(located)
        } else if self.eat("quadlin:") {
            let t0 = self.param("t0")?;
            CostFunction::quad_lin(t0).map_err(located)
        } else if self.eat("quadexcess:") {
            let t0 = self.param("t0")?;
            self.expect(",")?;
            let p = self.param("p")?;
            CostFunction::quad_excess(t0, p).map_err(located)
        } else if self.eat("alpha:") {
            let d = self.param("D")?;
            self.expect(",")?;
            let l0 = self.param("l0")?;
            CostFunction::capped_quad(d, l0).map_err(located)
        } else if self.eat("scale:") {
            let a = self.param("a")?;
            self.expect("(")?;
            let inner = self.spec()?;
            self.expect(")")?;
            CostFunction::scaled(inner, a).map_err(located)
        } else if self.eat("sum(") {
            let mut terms = vec![self.spec()?];
            while self.eat(";") {
                terms.push(self.spec()?);
            }
            self.expect(")")?;
            if terms.len() < 2 {
                return Err(Error::Parse { pos: at, msg: "sum needs at least two terms".into() });
            }
            CostFunction::sum(terms)
        } else {
            Err(self.error("expected one of power, quadlin, quadexcess, alpha, scale, sum"))
        }
    }
}
