//! `AG φ` / `GF φ` properties over visible variables.
//!
//! Formulas use atoms `var=val`, negation `!` (or `not`), conjunction `&`
//! (or `and`), disjunction `|` (or `or`), `true`, `false` and parentheses.

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::abstraction::{AbstractModel, ClassIdx};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PropertyError {
    #[error("expected `AG <formula>` or `GF <formula>`")]
    MissingOperator,
    #[error("syntax error at `{0}`")]
    Syntax(String),
    #[error("unexpected end of formula")]
    UnexpectedEnd,
    #[error("unknown variable `{0}`")]
    UnknownVariable(String),
    #[error("variable `{0}` is invisible under the current abstraction")]
    InvisibleVariable(String),
    #[error("value `{value}` is not in the domain of `{var}`")]
    UnknownValue { var: String, value: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PropertyKind {
    /// `AG φ`: φ holds in every reachable state.
    Invariant,
    /// `GF φ`: φ holds infinitely often on every path.
    Recurrence,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Formula {
    Const(bool),
    Atom { var: String, value: String },
    Not(Box<Formula>),
    And(Box<Formula>, Box<Formula>),
    Or(Box<Formula>, Box<Formula>),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Property {
    pub kind: PropertyKind,
    pub formula: Formula,
}

/// A formula with its atoms resolved to (visible position, value index).
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum BoundFormula {
    Const(bool),
    Atom { slot: usize, value: usize },
    Not(Box<BoundFormula>),
    And(Box<BoundFormula>, Box<BoundFormula>),
    Or(Box<BoundFormula>, Box<BoundFormula>),
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Token {
    Ident(String),
    Eq,
    Not,
    And,
    Or,
    LParen,
    RParen,
}

fn lex(text: &str) -> Result<Vec<Token>, PropertyError> {
    let mut out = Vec::new();
    let mut chars = text.char_indices().peekable();
    while let Some(&(pos, ch)) = chars.peek() {
        match ch {
            c if c.is_whitespace() => {
                chars.next();
            }
            '=' => {
                chars.next();
                out.push(Token::Eq);
            }
            '!' | '~' => {
                chars.next();
                out.push(Token::Not);
            }
            '&' => {
                chars.next();
                if matches!(chars.peek(), Some((_, '&'))) {
                    chars.next();
                }
                out.push(Token::And);
            }
            '|' => {
                chars.next();
                if matches!(chars.peek(), Some((_, '|'))) {
                    chars.next();
                }
                out.push(Token::Or);
            }
            '(' => {
                chars.next();
                out.push(Token::LParen);
            }
            ')' => {
                chars.next();
                out.push(Token::RParen);
            }
            c if c.is_alphanumeric() || c == '_' || c == '-' || c == '.' => {
                let mut end = pos;
                while let Some(&(p, c)) = chars.peek() {
                    if c.is_alphanumeric() || c == '_' || c == '-' || c == '.' {
                        end = p + c.len_utf8();
                        chars.next();
                    } else {
                        break;
                    }
                }
                let word = &text[pos..end];
                out.push(match word {
                    "not" => Token::Not,
                    "and" => Token::And,
                    "or" => Token::Or,
                    _ => Token::Ident(word.to_string()),
                });
            }
            _ => return Err(PropertyError::Syntax(text[pos..].to_string())),
        }
    }
    Ok(out)
}

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.pos)
    }

    fn bump(&mut self) -> Option<Token> {
        let t = self.tokens.get(self.pos).cloned();
        self.pos += 1;
        t
    }

    fn error_here(&self) -> PropertyError {
        match self.peek() {
            Some(t) => PropertyError::Syntax(format!("{t:?}")),
            None => PropertyError::UnexpectedEnd,
        }
    }

    fn or(&mut self) -> Result<Formula, PropertyError> {
        let mut lhs = self.and()?;
        while self.peek() == Some(&Token::Or) {
            self.bump();
            lhs = Formula::Or(Box::new(lhs), Box::new(self.and()?));
        }
        Ok(lhs)
    }

    fn and(&mut self) -> Result<Formula, PropertyError> {
        let mut lhs = self.unary()?;
        while self.peek() == Some(&Token::And) {
            self.bump();
            lhs = Formula::And(Box::new(lhs), Box::new(self.unary()?));
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Formula, PropertyError> {
        match self.bump() {
            Some(Token::Not) => Ok(Formula::Not(Box::new(self.unary()?))),
            Some(Token::LParen) => {
                let inner = self.or()?;
                match self.bump() {
                    Some(Token::RParen) => Ok(inner),
                    _ => {
                        self.pos -= 1;
                        Err(self.error_here())
                    }
                }
            }
            Some(Token::Ident(word)) => match self.peek() {
                Some(Token::Eq) => {
                    self.bump();
                    match self.bump() {
                        Some(Token::Ident(value)) => Ok(Formula::Atom { var: word, value }),
                        _ => {
                            self.pos -= 1;
                            Err(self.error_here())
                        }
                    }
                }
                _ if word == "true" => Ok(Formula::Const(true)),
                _ if word == "false" => Ok(Formula::Const(false)),
                _ => Err(PropertyError::Syntax(word)),
            },
            _ => {
                self.pos -= 1;
                Err(self.error_here())
            }
        }
    }
}

impl FromStr for Formula {
    type Err = PropertyError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut parser = Parser {
            tokens: lex(s)?,
            pos: 0,
        };
        let f = parser.or()?;
        if parser.pos != parser.tokens.len() {
            return Err(parser.error_here());
        }
        Ok(f)
    }
}

impl FromStr for Property {
    type Err = PropertyError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        let (kind, rest) = if let Some(rest) = s.strip_prefix("AG") {
            (PropertyKind::Invariant, rest)
        } else if let Some(rest) = s.strip_prefix("GF") {
            (PropertyKind::Recurrence, rest)
        } else {
            return Err(PropertyError::MissingOperator);
        };
        if !rest.starts_with(|c: char| c.is_whitespace() || c == '(' || c == '!') {
            return Err(PropertyError::MissingOperator);
        }
        Ok(Property {
            kind,
            formula: rest.parse()?,
        })
    }
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Formula::Const(b) => write!(f, "{b}"),
            Formula::Atom { var, value } => write!(f, "{var}={value}"),
            Formula::Not(inner) => write!(f, "!({inner})"),
            Formula::And(a, b) => write!(f, "({a} & {b})"),
            Formula::Or(a, b) => write!(f, "({a} | {b})"),
        }
    }
}

impl fmt::Display for Property {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let op = match self.kind {
            PropertyKind::Invariant => "AG",
            PropertyKind::Recurrence => "GF",
        };
        write!(f, "{op} {}", self.formula)
    }
}

impl Formula {
    /// Resolves atoms against the visible variables of `model`.
    pub fn bind(&self, model: &AbstractModel) -> Result<BoundFormula, PropertyError> {
        Ok(match self {
            Formula::Const(b) => BoundFormula::Const(*b),
            Formula::Atom { var, value } => {
                let Some(slot) = model.visible_vars().iter().position(|v| &v.name == var) else {
                    return Err(if model.hidden_vars().contains(var) {
                        PropertyError::InvisibleVariable(var.clone())
                    } else {
                        PropertyError::UnknownVariable(var.clone())
                    });
                };
                let value_index =
                    model.visible_vars()[slot]
                        .value_index(value)
                        .ok_or_else(|| PropertyError::UnknownValue {
                            var: var.clone(),
                            value: value.clone(),
                        })?;
                BoundFormula::Atom {
                    slot,
                    value: value_index,
                }
            }
            Formula::Not(inner) => BoundFormula::Not(Box::new(inner.bind(model)?)),
            Formula::And(a, b) => {
                BoundFormula::And(Box::new(a.bind(model)?), Box::new(b.bind(model)?))
            }
            Formula::Or(a, b) => {
                BoundFormula::Or(Box::new(a.bind(model)?), Box::new(b.bind(model)?))
            }
        })
    }
}

impl BoundFormula {
    pub fn eval(&self, model: &AbstractModel, state: ClassIdx) -> bool {
        match self {
            BoundFormula::Const(b) => *b,
            BoundFormula::Atom { slot, value } => model.label(state)[*slot] == *value,
            BoundFormula::Not(inner) => !inner.eval(model, state),
            BoundFormula::And(a, b) => a.eval(model, state) && b.eval(model, state),
            BoundFormula::Or(a, b) => a.eval(model, state) || b.eval(model, state),
        }
    }
}

/// Evaluates `formula` on the label of an abstract state.
pub fn eval_prop(
    model: &AbstractModel,
    state: ClassIdx,
    formula: &Formula,
) -> Result<bool, PropertyError> {
    Ok(formula.bind(model)?.eval(model, state))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::abstraction::{build_abstract_model, make_abstraction};
    use crate::fixtures;

    fn tl_model() -> (AbstractModel, ClassIdx, ClassIdx) {
        let k = fixtures::traffic_light();
        let map = make_abstraction(&k, &["color"]).unwrap();
        let m = build_abstract_model(&k, &map);
        (
            m,
            map.resolve("state=stop").unwrap(),
            map.resolve("state=go").unwrap(),
        )
    }

    #[test]
    fn traffic_light_labels() {
        let (m, stop, go) = tl_model();
        let f: Formula = "state=stop".parse().unwrap();
        assert!(eval_prop(&m, stop, &f).unwrap());
        assert!(!eval_prop(&m, go, &f).unwrap());
    }

    #[test]
    fn tautology_holds_everywhere() {
        let (m, stop, go) = tl_model();
        let f: Formula = "state=go | !(state=go)".parse().unwrap();
        assert!(eval_prop(&m, stop, &f).unwrap());
        assert!(eval_prop(&m, go, &f).unwrap());
        let g: Formula = "not state=go and true".parse().unwrap();
        assert!(eval_prop(&m, stop, &g).unwrap());
    }

    #[test]
    fn invisible_and_unknown_variables() {
        let (m, stop, _) = tl_model();
        let f: Formula = "color=red".parse().unwrap();
        assert_eq!(
            eval_prop(&m, stop, &f),
            Err(PropertyError::InvisibleVariable("color".into()))
        );
        let g: Formula = "speed=fast".parse().unwrap();
        assert_eq!(
            eval_prop(&m, stop, &g),
            Err(PropertyError::UnknownVariable("speed".into()))
        );
        let h: Formula = "state=maybe".parse().unwrap();
        assert!(matches!(
            eval_prop(&m, stop, &h),
            Err(PropertyError::UnknownValue { .. })
        ));
    }

    #[test]
    fn property_parsing() {
        let p: Property = "AG !(state=go)".parse().unwrap();
        assert_eq!(p.kind, PropertyKind::Invariant);
        assert_eq!(p.to_string(), "AG !(state=go)");
        let q: Property = "GF state=stop".parse().unwrap();
        assert_eq!(q.kind, PropertyKind::Recurrence);
        assert_eq!(
            "GF a=1 | b=2 & c=3"
                .parse::<Property>()
                .unwrap()
                .formula
                .to_string(),
            "(a=1 | (b=2 & c=3))"
        );
        assert_eq!(
            "F x=1".parse::<Property>(),
            Err(PropertyError::MissingOperator)
        );
        assert_eq!(
            "AGx=1".parse::<Property>(),
            Err(PropertyError::MissingOperator)
        );
        assert!("AG (x=1".parse::<Property>().is_err());
        assert!("AG x=".parse::<Property>().is_err());
        assert!("AG x=1 y=2".parse::<Property>().is_err());
        assert!("AG x=1 $".parse::<Property>().is_err());
    }
}
