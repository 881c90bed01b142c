//! Bra-ket expression parser and printer.
//!
//! Grammar (whitespace insensitive):
//!
//! ```text
//! expr   := sign? term (('+' | '-') sign? term)*
//! term   := coeff? factor (coeff? factor)*        juxtaposition is the tensor product
//! factor := '|' digit+ '>' | '(' expr ')'
//! coeff  := real 'i'? | 'i' | '(' real ('+'|'-') real 'i' ')'
//! real   := decimal | integer '/' integer | integer '/sqrt(' integer ')'
//! ```

use crate::error::{Error, Result};
use crate::linalg::{C64, ZERO};
use crate::tensor::{make_tensor, Kind, SystemSpec, Tensor};

/// A parsed expression before it is checked against a spec.
#[derive(Debug, Clone, PartialEq)]
pub struct KetExpr {
    pub terms: Vec<(C64, Vec<usize>)>,
}

pub fn parse_expr(text: &str) -> Result<KetExpr> {
    let mut p = Parser { s: text.as_bytes(), pos: 0 };
    let terms = p.expr()?;
    p.skip_ws();
    if p.pos < p.s.len() {
        return Err(p.error("unexpected trailing input"));
    }
    Ok(KetExpr { terms })
}

/// Parse `text` into a tensor of the given spec.
pub fn parse_ket(text: &str, spec: &SystemSpec) -> Result<Tensor> {
    let expr = parse_expr(text)?;
    let l = spec.particles();
    let mut entries = Vec::with_capacity(expr.terms.len());
    for (c, label) in expr.terms {
        let shown: String = label.iter().map(|d| d.to_string()).collect();
        if label.len() != l {
            return Err(Error::LabelLengthMismatch { label: shown, got: label.len(), expected: l });
        }
        for (j, &d) in label.iter().enumerate() {
            if d >= spec.local_dim(j) {
                return Err(Error::DigitOutOfRange { label: shown, digit: d, dim: spec.local_dim(j) });
            }
        }
        if spec.kind() == Kind::Fermionic {
            let mut s = label.clone();
            s.sort_unstable();
            if s.windows(2).any(|w| w[0] == w[1]) {
                return Err(Error::FermionRepeatedDigit(shown));
            }
        }
        entries.push((label, c));
    }
    make_tensor(spec, &entries)
}

/// Print a tensor in canonical term order. Labels use one digit per factor,
/// so local dimensions must not exceed 10.
pub fn format_ket(t: &Tensor) -> String {
    let mut out = String::new();
    for (idx, v) in t.spec().basis().iter().zip(t.entries()) {
        if *v == ZERO {
            continue;
        }
        let label: String = idx.iter().map(|&d| char::from_digit(d as u32, 36).unwrap_or('?')).collect();
        let (negative, body) = coefficient_text(*v);
        if out.is_empty() {
            if negative {
                out.push('-');
            }
        } else {
            out.push_str(if negative { " - " } else { " + " });
        }
        out.push_str(&body);
        out.push('|');
        out.push_str(&label);
        out.push('>');
    }
    if out.is_empty() {
        out.push('0');
    }
    out
}

fn real_text(x: f64) -> String {
    let a = x.abs();
    if a != 0.0 && !(1e-4..1e15).contains(&a) {
        format!("{x:e}")
    } else {
        format!("{x}")
    }
}

/// Returns (leading minus sign, coefficient text without it).
fn coefficient_text(v: C64) -> (bool, String) {
    if v.im == 0.0 {
        let neg = v.re < 0.0;
        let a = v.re.abs();
        return (neg, if a == 1.0 { String::new() } else { real_text(a) });
    }
    if v.re == 0.0 {
        let neg = v.im < 0.0;
        return (neg, format!("{}i", real_text(v.im.abs())));
    }
    let sign = if v.im < 0.0 { '-' } else { '+' };
    (false, format!("({}{}{}i)", real_text(v.re), sign, real_text(v.im.abs())))
}

type Terms = Vec<(C64, Vec<usize>)>;

struct Parser<'a> {
    s: &'a [u8],
    pos: usize,
}

impl Parser<'_> {
    fn error(&self, msg: &str) -> Error {
        Error::Syntax { position: self.pos, message: msg.to_string() }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.s.len() && self.s[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.s.get(self.pos).copied()
    }

    fn eat(&mut self, c: u8) -> bool {
        if self.peek() == Some(c) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expr(&mut self) -> Result<Terms> {
        let mut out = Terms::new();
        let mut sign = self.signs(1.0);
        loop {
            let t = self.term()?;
            out.extend(t.into_iter().map(|(c, l)| (c * sign, l)));
            match self.peek() {
                Some(b'+') | Some(b'-') => sign = self.signs(1.0),
                _ => return Ok(out),
            }
        }
    }

    /// Consume a run of '+'/'-' and return the accumulated sign.
    fn signs(&mut self, mut sign: f64) -> f64 {
        loop {
            if self.eat(b'+') {
                continue;
            }
            if self.eat(b'-') {
                sign = -sign;
                continue;
            }
            return sign;
        }
    }

    fn term(&mut self) -> Result<Terms> {
        let mut acc: Terms = vec![(C64::new(1.0, 0.0), Vec::new())];
        let mut factors = 0;
        loop {
            let coeff = self.coefficient()?;
            let factor = match self.peek() {
                Some(b'|') => Some(self.ket()?),
                Some(b'(') => {
                    self.pos += 1;
                    let inner = self.expr()?;
                    if !self.eat(b')') {
                        return Err(self.error("expected ')'"));
                    }
                    Some(inner)
                }
                _ => None,
            };
            match (coeff, factor) {
                (c, Some(f)) => {
                    let c = c.unwrap_or(C64::new(1.0, 0.0));
                    let mut next = Terms::with_capacity(acc.len() * f.len());
                    for (a, la) in &acc {
                        for (b, lb) in &f {
                            let mut label = la.clone();
                            label.extend_from_slice(lb);
                            next.push((a * b * c, label));
                        }
                    }
                    acc = next;
                    factors += 1;
                }
                (Some(_), None) => return Err(self.error("coefficient must be followed by a ket or '('")),
                (None, None) if factors == 0 => return Err(self.error("expected a ket or '('")),
                (None, None) => return Ok(acc),
            }
        }
    }

    fn ket(&mut self) -> Result<Terms> {
        self.skip_ws();
        self.pos += 1; // '|'
        let start = self.pos;
        let mut label = Vec::new();
        while let Some(&c) = self.s.get(self.pos) {
            if c.is_ascii_digit() {
                label.push((c - b'0') as usize);
                self.pos += 1;
            } else {
                break;
            }
        }
        if label.is_empty() {
            self.pos = start;
            return Err(self.error("expected digits after '|'"));
        }
        if self.s.get(self.pos) != Some(&b'>') {
            return Err(self.error("expected '>' to close ket"));
        }
        self.pos += 1;
        Ok(vec![(C64::new(1.0, 0.0), label)])
    }

    /// Optional coefficient. A '(' is only taken as a coefficient when it
    /// encloses a complex literal; otherwise it starts a group.
    fn coefficient(&mut self) -> Result<Option<C64>> {
        match self.peek() {
            Some(b'(') => {
                let save = self.pos;
                match self.complex_literal() {
                    Some(c) => Ok(Some(c)),
                    None => {
                        self.pos = save;
                        Ok(None)
                    }
                }
            }
            Some(b'i') => {
                self.pos += 1;
                Ok(Some(C64::new(0.0, 1.0)))
            }
            Some(c) if c.is_ascii_digit() || c == b'.' => {
                let x = self.real()?;
                if self.peek() == Some(b'i') {
                    self.pos += 1;
                    Ok(Some(C64::new(0.0, x)))
                } else {
                    Ok(Some(C64::new(x, 0.0)))
                }
            }
            _ => Ok(None),
        }
    }

    fn complex_literal(&mut self) -> Option<C64> {
        self.pos += 1; // '('
        let neg_re = self.signs(1.0);
        if !matches!(self.peek(), Some(c) if c.is_ascii_digit() || c == b'.') {
            return None;
        }
        let re = self.real().ok()? * neg_re;
        let sign = match self.peek() {
            Some(b'+') | Some(b'-') => self.signs(1.0),
            _ => return None,
        };
        let im = if self.peek() == Some(b'i') {
            1.0
        } else {
            if !matches!(self.peek(), Some(c) if c.is_ascii_digit() || c == b'.') {
                return None;
            }
            self.real().ok()?
        };
        if !self.eat(b'i') || !self.eat(b')') {
            return None;
        }
        Some(C64::new(re, sign * im))
    }

    fn real(&mut self) -> Result<f64> {
        let x = self.decimal()?;
        let save = self.pos;
        if self.eat(b'/') {
            self.skip_ws();
            if self.s[self.pos..].starts_with(b"sqrt") {
                self.pos += 4;
                if !self.eat(b'(') {
                    return Err(self.error("expected '(' after sqrt"));
                }
                let k = self.decimal()?;
                if !self.eat(b')') {
                    return Err(self.error("expected ')'"));
                }
                if k <= 0.0 {
                    return Err(self.error("sqrt argument must be positive"));
                }
                return Ok(x / k.sqrt());
            }
            if matches!(self.peek(), Some(c) if c.is_ascii_digit()) {
                let q = self.decimal()?;
                if q == 0.0 {
                    return Err(self.error("division by zero"));
                }
                return Ok(x / q);
            }
            self.pos = save;
            return Err(self.error("expected a denominator"));
        }
        Ok(x)
    }

    fn decimal(&mut self) -> Result<f64> {
        self.skip_ws();
        let start = self.pos;
        let s = self.s;
        let mut i = self.pos;
        while i < s.len() && (s[i].is_ascii_digit() || s[i] == b'.') {
            i += 1;
        }
        if i < s.len() && (s[i] == b'e' || s[i] == b'E') {
            let mut j = i + 1;
            if j < s.len() && (s[j] == b'+' || s[j] == b'-') {
                j += 1;
            }
            if j < s.len() && s[j].is_ascii_digit() {
                while j < s.len() && s[j].is_ascii_digit() {
                    j += 1;
                }
                i = j;
            }
        }
        let text = std::str::from_utf8(&s[start..i]).expect("ascii");
        match text.parse::<f64>() {
            Ok(x) => {
                self.pos = i;
                Ok(x)
            }
            Err(_) => Err(self.error("malformed number")),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn parses_w_and_psi2() {
        let s = SystemSpec::qubits(3);
        let w = parse_ket("|100>+|010>+|001>", &s).unwrap();
        assert_eq!(format_ket(&w), "|001> + |010> + |100>");

        let s = SystemSpec::distinguishable(&[2, 3, 3]).unwrap();
        let t = parse_ket("|0>(|00>+|11>)+|1>(|01>+|22>)", &s).unwrap();
        assert_eq!(t.entries().iter().filter(|x| **x != ZERO).count(), 4);
        assert_eq!(t.get(&[1, 2, 2]), c(1.0, 0.0));
    }

    #[test]
    fn fermionic_signs() {
        let s = SystemSpec::fermionic(6, 3).unwrap();
        let t = parse_ket("|012>-|013>", &s).unwrap();
        assert_eq!(t.get(&[0, 1, 2]), c(1.0, 0.0));
        assert_eq!(t.get(&[0, 1, 3]), c(-1.0, 0.0));
        assert!(matches!(parse_ket("|011>", &s), Err(Error::FermionRepeatedDigit(_))));
    }

    #[test]
    fn coefficients() {
        let e = parse_expr("0.5|0> + 2i|1> - (1-2i)|2> + 1/sqrt(2)|3> + 3/4|4> + i|5>").unwrap();
        let cs: Vec<C64> = e.terms.iter().map(|t| t.0).collect();
        assert_eq!(cs[0], c(0.5, 0.0));
        assert_eq!(cs[1], c(0.0, 2.0));
        assert_eq!(cs[2], c(-1.0, 2.0));
        assert!((cs[3].re - 0.5f64.sqrt()).abs() < 1e-15);
        assert_eq!(cs[4], c(0.75, 0.0));
        assert_eq!(cs[5], c(0.0, 1.0));
    }

    #[test]
    fn minus_is_plus_negative_one() {
        let s = SystemSpec::qubits(2);
        let a = parse_ket("|00> - |11>", &s).unwrap();
        let b = parse_ket("|00> + -1|11>", &s).unwrap();
        assert_eq!(a, b);
        let spaced = parse_ket("  | 0 0 > ", &s);
        assert!(spaced.is_err(), "labels are contiguous digits");
        assert_eq!(parse_ket(" |00>\t-\n|11> ", &s).unwrap(), a);
    }

    #[test]
    fn errors_report_positions_and_labels() {
        let s = SystemSpec::qubits(2);
        assert!(matches!(parse_ket("|00> + ", &s), Err(Error::Syntax { position: 7, .. })));
        assert!(matches!(parse_ket("|000>", &s), Err(Error::LabelLengthMismatch { .. })));
        assert!(matches!(parse_ket("|02>", &s), Err(Error::DigitOutOfRange { digit: 2, .. })));
        assert!(matches!(parse_ket("|00", &s), Err(Error::Syntax { .. })));
    }

    #[test]
    fn formatting() {
        let s = SystemSpec::qubits(3);
        let ghz = parse_ket("|000>+|111>", &s).unwrap();
        assert_eq!(format_ket(&ghz), "|000> + |111>");
        let s2 = SystemSpec::qubits(2);
        let h = parse_ket("0.5|00>", &s2).unwrap();
        assert_eq!(format_ket(&h), "0.5|00>");
        let z = parse_ket("-|00> + (0.25-3i)|01> - 2i|10>", &s2).unwrap();
        assert_eq!(format_ket(&z), "-|00> + (0.25-3i)|01> - 2i|10>");
        assert_eq!(parse_ket(&format_ket(&z), &s2).unwrap(), z);
    }

    #[test]
    fn grouped_coefficients_and_nesting() {
        let s = SystemSpec::qubits(3);
        let a = parse_ket("2(|0>(|00>+|11>))", &s).unwrap();
        let b = parse_ket("2|000> + 2|011>", &s).unwrap();
        assert_eq!(a, b);
        let c2 = parse_ket("|0>(1/sqrt(2))(|00>+|11>)", &s);
        assert!(c2.is_err(), "a real in parentheses is not a complex literal");
    }
}
