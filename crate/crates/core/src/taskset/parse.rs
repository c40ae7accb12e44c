//! Recursive-descent parser for the bracket notation.
//!
//! ```text
//! # comment
//! J1: [R2: 3 [R1: 1]]
//! J2: [R1: 3] [R1: 4]
//! ```
//!
//! One line per job, highest priority first, labels `J1..Jn` in order.

use std::fmt::Write as _;

use super::{Bracket, ResourceId, TaskSet};
use crate::error::{Error, Result};
use crate::time::Time;

pub fn parse_taskset(text: &str) -> Result<TaskSet> {
    let mut jobs = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = match raw.find('#') {
            Some(at) => &raw[..at],
            None => raw,
        };
        if line.trim().is_empty() {
            continue;
        }
        let mut cur = Cursor::new(line, lineno + 1);
        let label = cur.job_label()?;
        if label != jobs.len() + 1 {
            return Err(cur.error(format!(
                "expected job J{} but found J{label}; jobs must be listed J1..Jn by descending priority",
                jobs.len() + 1
            )));
        }
        let mut groups = Vec::new();
        loop {
            cur.skip_ws();
            match cur.peek() {
                None => break,
                Some('[') => groups.push(cur.bracket()?),
                Some(c) => return Err(cur.error(format!("unexpected `{c}`, expected `[`"))),
            }
        }
        jobs.push(groups);
    }
    if jobs.is_empty() {
        return Err(Error::EmptyTaskSet);
    }
    TaskSet::from_brackets(jobs)
}

/// Canonical text form; parses back to an identical task set.
pub fn serialize_taskset(ts: &TaskSet) -> String {
    let mut out = String::new();
    for job in ts.jobs() {
        let _ = write!(out, "J{}:", job.index);
        for b in ts.brackets(job.index) {
            out.push(' ');
            write_bracket(&mut out, &b);
        }
        out.push('\n');
    }
    out
}

fn write_bracket(out: &mut String, b: &Bracket) {
    let _ = write!(out, "[{}: {}", b.resource, b.duration);
    for inner in &b.nested {
        out.push(' ');
        write_bracket(out, inner);
    }
    out.push(']');
}

struct Cursor<'a> {
    line: &'a str,
    pos: usize,
    lineno: usize,
}

impl<'a> Cursor<'a> {
    fn new(line: &'a str, lineno: usize) -> Self {
        Cursor { line, pos: 0, lineno }
    }

    fn error(&self, message: impl Into<String>) -> Error {
        Error::Syntax {
            line: self.lineno,
            column: self.line[..self.pos].chars().count() + 1,
            message: message.into(),
        }
    }

    fn peek(&self) -> Option<char> {
        self.line[self.pos..].chars().next()
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.peek()?;
        self.pos += c.len_utf8();
        Some(c)
    }

    fn skip_ws(&mut self) {
        while self.peek().is_some_and(char::is_whitespace) {
            self.bump();
        }
    }

    fn expect(&mut self, want: char) -> Result<()> {
        self.skip_ws();
        match self.peek() {
            Some(c) if c == want => {
                self.bump();
                Ok(())
            }
            Some(c) => Err(self.error(format!("expected `{want}`, found `{c}`"))),
            None => Err(self.error(format!("expected `{want}`, found end of line"))),
        }
    }

    fn number(&mut self, what: &str) -> Result<u32> {
        let start = self.pos;
        while self.peek().is_some_and(|c| c.is_ascii_digit()) {
            self.bump();
        }
        let digits = &self.line[start..self.pos];
        if digits.is_empty() {
            return Err(self.error(format!("expected {what} index")));
        }
        match digits.parse::<u32>() {
            Ok(0) => Err(self.error(format!("{what} indices start at 1"))),
            Ok(n) => Ok(n),
            Err(_) => Err(self.error(format!("{what} index `{digits}` is too large"))),
        }
    }

    fn job_label(&mut self) -> Result<usize> {
        self.expect('J')?;
        let j = self.number("job")?;
        self.expect(':')?;
        Ok(j as usize)
    }

    fn duration(&mut self) -> Result<Time> {
        self.skip_ws();
        let start = self.pos;
        while self
            .peek()
            .is_some_and(|c| !c.is_whitespace() && c != '[' && c != ']')
        {
            self.bump();
        }
        let lit = &self.line[start..self.pos];
        if lit.is_empty() {
            return Err(self.error("expected a duration"));
        }
        lit.parse().map_err(|source| Error::Duration {
            line: self.lineno,
            source,
        })
    }

    fn bracket(&mut self) -> Result<Bracket> {
        self.expect('[')?;
        self.expect('R')?;
        let resource = ResourceId(self.number("resource")?);
        self.expect(':')?;
        let duration = self.duration()?;
        let mut nested = Vec::new();
        loop {
            self.skip_ws();
            match self.peek() {
                Some('[') => nested.push(self.bracket()?),
                Some(']') => {
                    self.bump();
                    break;
                }
                Some(c) => return Err(self.error(format!("unexpected `{c}` inside a section"))),
                None => return Err(self.error("unbalanced `[`: section is never closed")),
            }
        }
        Ok(Bracket {
            resource,
            duration,
            nested,
        })
    }
}
