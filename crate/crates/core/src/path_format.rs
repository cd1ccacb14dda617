//! Textual paths: `finite: a b c` or `lasso: a b ( c d )`, one per line.
//!
//! The same format carries abstract counterexamples (over class ids) and
//! concrete witnesses (over state ids).

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PathParseError {
    #[error("expected `finite:` or `lasso:` prefix")]
    MissingPrefix,
    #[error("path has no states")]
    Empty,
    #[error("lasso needs exactly one parenthesized loop at the end")]
    BadLoop,
    #[error("finite path must not contain parentheses")]
    UnexpectedParen,
    #[error("line {line}: {source}")]
    AtLine {
        line: usize,
        #[source]
        source: Box<PathParseError>,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PathText {
    pub items: Vec<String>,
    /// Start of the loop suffix; `None` for finite paths.
    pub loop_start: Option<usize>,
}

impl PathText {
    pub fn finite(items: Vec<String>) -> Self {
        Self {
            items,
            loop_start: None,
        }
    }

    pub fn lasso(items: Vec<String>, loop_start: usize) -> Self {
        Self {
            items,
            loop_start: Some(loop_start),
        }
    }

    pub fn is_lasso(&self) -> bool {
        self.loop_start.is_some()
    }
}

fn tokens(body: &str) -> Vec<&str> {
    let mut out = Vec::new();
    for word in body.split_whitespace() {
        let mut rest = word;
        while !rest.is_empty() {
            match rest.find(['(', ')']) {
                Some(0) => {
                    out.push(&rest[..1]);
                    rest = &rest[1..];
                }
                Some(pos) => {
                    out.push(&rest[..pos]);
                    rest = &rest[pos..];
                }
                None => {
                    out.push(rest);
                    rest = "";
                }
            }
        }
    }
    out
}

impl FromStr for PathText {
    type Err = PathParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        if let Some(body) = s.strip_prefix("finite:") {
            let items: Vec<String> = tokens(body).into_iter().map(str::to_string).collect();
            if items.iter().any(|t| t == "(" || t == ")") {
                return Err(PathParseError::UnexpectedParen);
            }
            if items.is_empty() {
                return Err(PathParseError::Empty);
            }
            Ok(PathText::finite(items))
        } else if let Some(body) = s.strip_prefix("lasso:") {
            let toks = tokens(body);
            let open = toks
                .iter()
                .position(|&t| t == "(")
                .ok_or(PathParseError::BadLoop)?;
            if toks.last() != Some(&")") {
                return Err(PathParseError::BadLoop);
            }
            let stem = &toks[..open];
            let cycle = &toks[open + 1..toks.len() - 1];
            if cycle.is_empty() || stem.iter().chain(cycle).any(|&t| t == "(" || t == ")") {
                return Err(PathParseError::BadLoop);
            }
            let items = stem.iter().chain(cycle).map(|t| t.to_string()).collect();
            Ok(PathText::lasso(items, stem.len()))
        } else {
            Err(PathParseError::MissingPrefix)
        }
    }
}

impl fmt::Display for PathText {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.loop_start {
            None => write!(f, "finite: {}", self.items.join(" ")),
            Some(i) => {
                f.write_str("lasso:")?;
                for item in &self.items[..i] {
                    write!(f, " {item}")?;
                }
                write!(f, " ( {} )", self.items[i..].join(" "))
            }
        }
    }
}

/// Parses every non-blank, non-comment line of a path file.
pub fn parse_path_file(text: &str) -> Result<Vec<PathText>, PathParseError> {
    let mut paths = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let body = line.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        let path = body.parse().map_err(|e| PathParseError::AtLine {
            line: i + 1,
            source: Box::new(e),
        })?;
        paths.push(path);
    }
    Ok(paths)
}
