// SPDX-License-Identifier: Apache-2.0

//! ISCAS `.bench` reader and writer.
//!
//! Dialect: `INPUT(x)`, `OUTPUT(x)`, `y = KIND(a, b, ...)`, `y = CONST0()`,
//! `y = CONST1()`, `#` comments. A gate line whose trailing comment is
//! exactly `keep` carries the keep mark used for padding cells.

use std::fmt::Write as _;

use super::{decompose_wide, FreshNames, Gate, GateKind, Netlist, NetlistError};

struct Cursor<'a> {
    line: usize,
    text: &'a str,
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn err(&self, message: impl Into<String>) -> NetlistError {
        NetlistError::Syntax {
            line: self.line,
            column: self.text[..self.pos].chars().count() + 1,
            message: message.into(),
        }
    }

    fn skip_ws(&mut self) {
        while let Some(c) = self.text[self.pos..].chars().next() {
            if !c.is_whitespace() {
                break;
            }
            self.pos += c.len_utf8();
        }
    }

    fn eat(&mut self, ch: char) -> bool {
        self.skip_ws();
        if self.text[self.pos..].starts_with(ch) {
            self.pos += ch.len_utf8();
            true
        } else {
            false
        }
    }

    fn expect(&mut self, ch: char) -> Result<(), NetlistError> {
        if self.eat(ch) {
            Ok(())
        } else {
            Err(self.err(format!("expected `{ch}`")))
        }
    }

    fn ident(&mut self) -> Result<&'a str, NetlistError> {
        self.skip_ws();
        let start = self.pos;
        while let Some(c) = self.text[self.pos..].chars().next() {
            if c.is_whitespace() || matches!(c, '(' | ')' | ',' | '=') {
                break;
            }
            self.pos += c.len_utf8();
        }
        if start == self.pos {
            return Err(self.err("expected identifier"));
        }
        Ok(&self.text[start..self.pos])
    }

    fn end(&mut self) -> Result<(), NetlistError> {
        self.skip_ws();
        if self.pos < self.text.len() {
            return Err(self.err("unexpected trailing text"));
        }
        Ok(())
    }
}

/// Parses `.bench` text into a validated netlist named `netlist`.
pub fn parse_bench(text: &str) -> Result<Netlist, NetlistError> {
    let mut inputs = Vec::new();
    let mut outputs = Vec::new();
    let mut raw = Vec::new();

    for (idx, full) in text.lines().enumerate() {
        let (body, comment) = match full.find('#') {
            Some(p) => (&full[..p], Some(full[p + 1..].trim())),
            None => (full, None),
        };
        if body.trim().is_empty() {
            continue;
        }
        let mut cur = Cursor {
            line: idx + 1,
            text: body,
            pos: 0,
        };
        let head = cur.ident()?;
        if cur.eat('(') {
            let port = head.to_ascii_uppercase();
            let net = cur.ident()?;
            cur.expect(')')?;
            cur.end()?;
            match port.as_str() {
                "INPUT" => inputs.push(net.to_string()),
                "OUTPUT" => outputs.push(net.to_string()),
                _ => return Err(cur.err(format!("unknown declaration `{head}`"))),
            }
            continue;
        }
        cur.expect('=')?;
        let kind_name = cur.ident()?;
        cur.expect('(')?;
        let mut args = Vec::new();
        if !cur.eat(')') {
            loop {
                args.push(cur.ident()?.to_string());
                if cur.eat(')') {
                    break;
                }
                cur.expect(',')?;
            }
        }
        cur.end()?;
        let kind: GateKind = kind_name.parse().map_err(|_| NetlistError::UnsupportedGate {
            line: idx + 1,
            kind: kind_name.to_string(),
        })?;
        let min = *kind.arity().start();
        let widenable = kind.tree_kind().is_some();
        if args.len() < min || (!widenable && args.len() > *kind.arity().end()) {
            return Err(NetlistError::Arity {
                net: head.to_string(),
                kind,
                got: args.len(),
            });
        }
        raw.push(Gate {
            output: head.to_string(),
            kind,
            inputs: args,
            keep: comment == Some("keep"),
        });
    }

    let mut fresh = FreshNames::avoiding(
        inputs
            .iter()
            .map(String::as_str)
            .chain(raw.iter().map(|g| g.output.as_str())),
    );
    let mut gates = Vec::with_capacity(raw.len());
    for g in raw {
        decompose_wide(g, &mut fresh, &mut gates);
    }
    Netlist::new("netlist", inputs, outputs, gates)
}

/// Canonical `.bench` text: inputs, outputs, then gates in topological order.
pub fn write_bench(n: &Netlist) -> String {
    let mut out = String::new();
    for i in n.inputs() {
        let _ = writeln!(out, "INPUT({i})");
    }
    for o in n.outputs() {
        let _ = writeln!(out, "OUTPUT({o})");
    }
    for g in n.gates() {
        let _ = write!(out, "{} = {}({})", g.output, g.kind, g.inputs.join(", "));
        if g.keep {
            out.push_str("  # keep");
        }
        out.push('\n');
    }
    out
}
