use std::fmt;

use super::ast::{Atom, Comparator, Dimension, Metric, PredicateAst, Trigger, Unit};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("at position {position}: expected {expected}, found {found}")]
pub struct ParseError {
    /// Character offset into the input.
    pub position: usize,
    pub expected: String,
    pub found: String,
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Ident(String),
    Number(f64),
    LParen,
    RParen,
    LBracket,
    RBracket,
    Cmp(Comparator),
    Arrow,
    End,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Ident(s) => write!(f, "`{s}`"),
            Tok::Number(n) => write!(f, "`{n}`"),
            Tok::LParen => f.write_str("`(`"),
            Tok::RParen => f.write_str("`)`"),
            Tok::LBracket => f.write_str("`[`"),
            Tok::RBracket => f.write_str("`]`"),
            Tok::Cmp(c) => write!(f, "`{}`", c.symbol()),
            Tok::Arrow => f.write_str("`->`"),
            Tok::End => f.write_str("end of input"),
        }
    }
}

const KEYWORDS: [&str; 6] = ["and", "or", "not", "within", "always", "eventually"];

fn lex(text: &str) -> Result<Vec<(usize, Tok)>, ParseError> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        let start = i;
        if c.is_whitespace() {
            i += 1;
            continue;
        }
        let tok = match c {
            '(' => Tok::LParen,
            ')' => Tok::RParen,
            '[' => Tok::LBracket,
            ']' => Tok::RBracket,
            '<' | '>' => {
                let eq = chars.get(i + 1) == Some(&'=');
                if eq {
                    i += 1;
                }
                Tok::Cmp(match (c, eq) {
                    ('<', true) => Comparator::Le,
                    ('<', false) => Comparator::Lt,
                    (_, true) => Comparator::Ge,
                    _ => Comparator::Gt,
                })
            }
            '-' if chars.get(i + 1) == Some(&'>') => {
                i += 1;
                Tok::Arrow
            }
            c if c.is_ascii_digit() => {
                let mut j = i;
                while j < chars.len() && chars[j].is_ascii_digit() {
                    j += 1;
                }
                if j + 1 < chars.len() && chars[j] == '.' && chars[j + 1].is_ascii_digit() {
                    j += 1;
                    while j < chars.len() && chars[j].is_ascii_digit() {
                        j += 1;
                    }
                }
                if j < chars.len() && matches!(chars[j], 'e' | 'E') {
                    let mut k = j + 1;
                    if k < chars.len() && matches!(chars[k], '+' | '-') {
                        k += 1;
                    }
                    if k < chars.len() && chars[k].is_ascii_digit() {
                        while k < chars.len() && chars[k].is_ascii_digit() {
                            k += 1;
                        }
                        j = k;
                    }
                }
                let literal: String = chars[i..j].iter().collect();
                let value: f64 = literal.parse().map_err(|_| ParseError {
                    position: start,
                    expected: "number".into(),
                    found: format!("`{literal}`"),
                })?;
                if !value.is_finite() {
                    return Err(ParseError {
                        position: start,
                        expected: "finite number".into(),
                        found: format!("`{literal}`"),
                    });
                }
                i = j - 1;
                Tok::Number(value)
            }
            c if c.is_ascii_alphabetic() || c == '_' => {
                let mut j = i;
                while j < chars.len() && (chars[j].is_ascii_alphanumeric() || chars[j] == '_') {
                    j += 1;
                }
                let word: String = chars[i..j].iter().collect();
                i = j - 1;
                Tok::Ident(word)
            }
            other => {
                return Err(ParseError {
                    position: start,
                    expected: "token".into(),
                    found: format!("`{other}`"),
                })
            }
        };
        out.push((start, tok));
        i += 1;
    }
    out.push((chars.len(), Tok::End));
    Ok(out)
}

struct Parser {
    toks: Vec<(usize, Tok)>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].1
    }

    fn offset(&self) -> usize {
        self.toks[self.pos].0
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.pos].1.clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn error(&self, expected: impl Into<String>) -> ParseError {
        ParseError {
            position: self.offset(),
            expected: expected.into(),
            found: self.peek().to_string(),
        }
    }

    fn at_keyword(&self, kw: &str) -> bool {
        matches!(self.peek(), Tok::Ident(w) if w == kw)
    }

    fn expect_keyword(&mut self, kw: &str) -> Result<(), ParseError> {
        if self.at_keyword(kw) {
            self.bump();
            Ok(())
        } else {
            Err(self.error(format!("`{kw}`")))
        }
    }

    fn expect(&mut self, tok: Tok) -> Result<(), ParseError> {
        if *self.peek() == tok {
            self.bump();
            Ok(())
        } else {
            Err(self.error(tok.to_string()))
        }
    }

    fn formula(&mut self) -> Result<PredicateAst, ParseError> {
        let first = self.conjunction()?;
        let mut items = vec![first];
        while self.at_keyword("or") {
            self.bump();
            items.push(self.conjunction()?);
        }
        Ok(if items.len() == 1 {
            items.pop().unwrap()
        } else {
            PredicateAst::Or(items)
        })
    }

    fn conjunction(&mut self) -> Result<PredicateAst, ParseError> {
        let first = self.unary()?;
        let mut items = vec![first];
        while self.at_keyword("and") {
            self.bump();
            items.push(self.unary()?);
        }
        Ok(if items.len() == 1 {
            items.pop().unwrap()
        } else {
            PredicateAst::And(items)
        })
    }

    fn unary(&mut self) -> Result<PredicateAst, ParseError> {
        match self.peek() {
            Tok::LParen => {
                self.bump();
                let inner = self.formula()?;
                self.expect(Tok::RParen)?;
                Ok(inner)
            }
            Tok::Ident(w) if w == "not" => {
                self.bump();
                Ok(PredicateAst::negation(self.unary()?))
            }
            Tok::Ident(w) if w == "within" => self.within(),
            Tok::Ident(w) if w == "always" => self.always(),
            Tok::Ident(_) => self.atom().map(PredicateAst::Atom),
            _ => Err(self.error("formula")),
        }
    }

    fn metric(&mut self) -> Result<Metric, ParseError> {
        let expected = || format!("metric (one of {})", Metric::vocabulary());
        match self.peek() {
            Tok::Ident(w) if !KEYWORDS.contains(&w.as_str()) => match Metric::from_name(w) {
                Some(m) => {
                    self.bump();
                    Ok(m)
                }
                None => Err(self.error(expected())),
            },
            _ => Err(self.error(expected())),
        }
    }

    fn number(&mut self) -> Result<f64, ParseError> {
        match self.peek() {
            Tok::Number(v) => {
                let v = *v;
                self.bump();
                Ok(v)
            }
            _ => Err(self.error("number")),
        }
    }

    fn unit(&mut self, unit: Unit) -> Result<(), ParseError> {
        match self.peek() {
            Tok::Ident(w) if w == unit.symbol() => {
                self.bump();
                Ok(())
            }
            _ => Err(self.error(format!("unit `{}`", unit.symbol()))),
        }
    }

    fn atom(&mut self) -> Result<Atom, ParseError> {
        let metric = self.metric()?;
        let comparator = match self.peek() {
            Tok::Cmp(c) => {
                let c = *c;
                self.bump();
                c
            }
            _ => return Err(self.error("comparator (`<=`, `<`, `>=`, `>`)")),
        };
        let threshold = self.number()?;
        match metric.dimension().unit() {
            Some(unit) => self.unit(unit)?,
            None => {
                if matches!(self.peek(), Tok::Ident(w) if w == "s" || w == "mJ") {
                    let what = match metric.dimension() {
                        Dimension::Fraction => "fraction",
                        _ => "count",
                    };
                    return Err(self.error(format!("no unit on {what} metric `{}`", metric.name())));
                }
            }
        }
        Ok(Atom {
            metric,
            comparator,
            threshold,
        })
    }

    fn within(&mut self) -> Result<PredicateAst, ParseError> {
        self.expect_keyword("within")?;
        self.expect(Tok::LBracket)?;
        if !self.at_keyword(Metric::Energy.name()) {
            return Err(self.error("cost metric `energy`"));
        }
        let cost_metric = self.metric()?;
        self.expect(Tok::Cmp(Comparator::Le))?;
        let bound = self.number()?;
        self.unit(Unit::MilliJoules)?;
        self.expect(Tok::RBracket)?;
        let body = self.formula()?;
        Ok(PredicateAst::within(cost_metric, bound, body))
    }

    fn always(&mut self) -> Result<PredicateAst, ParseError> {
        self.expect_keyword("always")?;
        self.expect(Tok::LParen)?;
        if !self.at_keyword(Trigger::GridEvent.name()) {
            return Err(self.error("trigger `grid_event`"));
        }
        self.bump();
        self.expect(Tok::Arrow)?;
        self.expect_keyword("eventually")?;
        self.expect(Tok::Cmp(Comparator::Le))?;
        let deadline = self.number()?;
        self.unit(Unit::Seconds)?;
        let body = self.formula()?;
        self.expect(Tok::RParen)?;
        Ok(PredicateAst::always(deadline, body))
    }
}

/// Parses the concrete syntax into an AST.
pub fn parse(text: &str) -> Result<PredicateAst, ParseError> {
    let mut p = Parser {
        toks: lex(text)?,
        pos: 0,
    };
    let ast = p.formula()?;
    if *p.peek() != Tok::End {
        return Err(p.error("`and`, `or` or end of input"));
    }
    Ok(ast)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_input_fails_at_zero() {
        let e = parse("").unwrap_err();
        assert_eq!(e.position, 0);
        assert_eq!(e.found, "end of input");
    }

    #[test]
    fn cost_bounded_example() {
        let ast = parse("within [energy <= 150 mJ] (alarm_latency <= 3 s and success_count >= 1)")
            .unwrap();
        let body = PredicateAst::And(vec![
            PredicateAst::atom(Metric::AlarmLatency, Comparator::Le, 3.0),
            PredicateAst::atom(Metric::SuccessCount, Comparator::Ge, 1.0),
        ]);
        assert_eq!(ast, PredicateAst::within(Metric::Energy, 150.0, body));
    }

    #[test]
    fn network_example() {
        let ast = parse("always (grid_event -> eventually <= 3 s responders_count >= 18)").unwrap();
        assert_eq!(
            ast,
            PredicateAst::always(
                3.0,
                PredicateAst::atom(Metric::RespondersCount, Comparator::Ge, 18.0)
            )
        );
    }

    #[test]
    fn unknown_metric_lists_vocabulary() {
        let e = parse("alarm_latncy <= 3 s").unwrap_err();
        assert_eq!(e.position, 0);
        assert!(e.expected.contains("alarm_latency"));
        assert!(e.expected.contains("responders_count"));
        assert_eq!(e.found, "`alarm_latncy`");
    }

    #[test]
    fn unit_rules() {
        assert!(parse("alarm_latency <= 3").is_err());
        assert!(parse("alarm_latency <= 3 mJ").is_err());
        let e = parse("success_count >= 1 s").unwrap_err();
        assert_eq!(e.position, 19);
        assert!(parse("awake_fraction >= 0.9").is_ok());
    }

    #[test]
    fn precedence_and_binds_tighter() {
        let ast =
            parse("success_count >= 1 or success_count >= 2 and awake_fraction > 0.5").unwrap();
        match ast {
            PredicateAst::Or(items) => {
                assert_eq!(items.len(), 2);
                assert!(matches!(items[1], PredicateAst::And(_)));
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn trailing_garbage_reports_position() {
        let e = parse("success_count >= 1 )").unwrap_err();
        assert_eq!(e.position, 19);
        let e = parse("success_count >= 1 $").unwrap_err();
        assert_eq!(e.position, 19);
    }

    #[test]
    fn keywords_are_lowercase() {
        assert!(parse("success_count >= 1 AND success_count >= 2").is_err());
    }
}
