//! Line-oriented N-Triples subset.
//!
//! Terms map to labels as follows: an IRI `<x>` becomes `x`; a blank node
//! `_:b` is kept as written; a literal keeps its full lexical form, quotes
//! and `@lang` / `^^<datatype>` suffix included (`"5"^^<int>` stays
//! `"5"^^<int>`). Multi-line literals and Turtle syntax are not supported.

use std::path::Path;

use crate::error::{Error, Result};
use crate::kg::Triple;

struct Cursor<'a> {
    s: &'a str,
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn peek(&self) -> Option<char> {
        self.s[self.pos..].chars().next()
    }

    fn skip_ws(&mut self) {
        while let Some(c) = self.peek() {
            if c == ' ' || c == '\t' || c == '\r' {
                self.pos += c.len_utf8();
            } else {
                break;
            }
        }
    }

    fn at_end_or_comment(&self) -> bool {
        matches!(self.peek(), None | Some('#'))
    }

    fn iri(&mut self) -> Result<&'a str, String> {
        debug_assert_eq!(self.peek(), Some('<'));
        let start = self.pos + 1;
        match self.s[start..].find('>') {
            Some(len) => {
                let iri = &self.s[start..start + len];
                if iri.chars().any(char::is_whitespace) {
                    return Err("whitespace inside IRI".into());
                }
                self.pos = start + len + 1;
                Ok(iri)
            }
            None => Err("unterminated IRI (missing '>')".into()),
        }
    }

    fn blank_node(&mut self) -> Result<&'a str, String> {
        let start = self.pos;
        if !self.s[start..].starts_with("_:") {
            return Err("invalid blank node".into());
        }
        let rest = &self.s[start + 2..];
        let mut len = 0;
        let chars: Vec<(usize, char)> = rest.char_indices().collect();
        for (i, &(off, c)) in chars.iter().enumerate() {
            if c.is_whitespace() {
                break;
            }
            // a '.' directly followed by whitespace or end is the terminator
            if c == '.' && chars.get(i + 1).is_none_or(|&(_, n)| n.is_whitespace()) {
                break;
            }
            len = off + c.len_utf8();
        }
        if len == 0 {
            return Err("empty blank node label".into());
        }
        self.pos = start + 2 + len;
        Ok(&self.s[start..self.pos])
    }

    fn literal(&mut self) -> Result<&'a str, String> {
        let start = self.pos;
        let mut escaped = false;
        let mut close = None;
        for (off, c) in self.s[start + 1..].char_indices() {
            if escaped {
                escaped = false;
            } else if c == '\\' {
                escaped = true;
            } else if c == '"' {
                close = Some(start + 1 + off);
                break;
            }
        }
        let close = close.ok_or("unterminated literal (missing closing '\"')")?;
        self.pos = close + 1;
        match self.peek() {
            Some('@') => {
                self.pos += 1;
                let tag_len = self.s[self.pos..]
                    .find(|c: char| !(c.is_ascii_alphanumeric() || c == '-'))
                    .unwrap_or(self.s.len() - self.pos);
                if tag_len == 0 {
                    return Err("empty language tag".into());
                }
                self.pos += tag_len;
            }
            Some('^') => {
                if !self.s[self.pos..].starts_with("^^<") {
                    return Err("expected '^^<datatype>' after literal".into());
                }
                self.pos += 2;
                self.iri()?;
            }
            _ => {}
        }
        Ok(&self.s[start..self.pos])
    }

    fn term(&mut self, what: &str) -> Result<&'a str, String> {
        self.skip_ws();
        match self.peek() {
            Some('<') => self.iri(),
            Some('_') if what != "predicate" => self.blank_node(),
            Some('"') if what == "object" => self.literal(),
            None => Err(format!("missing {what}")),
            Some(c) => Err(format!("invalid {what} starting with {c:?}")),
        }
    }
}

fn parse_line(line: &str) -> Result<Option<Triple>, String> {
    let mut c = Cursor { s: line, pos: 0 };
    c.skip_ws();
    if c.at_end_or_comment() {
        return Ok(None);
    }
    let s = c.term("subject")?;
    let p = c.term("predicate")?;
    let o = c.term("object")?;
    c.skip_ws();
    match c.peek() {
        Some('.') => c.pos += 1,
        None | Some('#') => return Err("missing statement terminator".into()),
        Some(ch) => return Err(format!("unexpected {ch:?} after object")),
    }
    c.skip_ws();
    if !c.at_end_or_comment() {
        return Err("unexpected content after statement terminator".into());
    }
    Triple::new(s, p, o).map(Some).map_err(|e| e.to_string())
}

pub fn parse_ntriples(text: &str) -> Result<Vec<Triple>> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        match parse_line(line) {
            Ok(Some(t)) => out.push(t),
            Ok(None) => {}
            Err(message) => return Err(Error::Parse { line: i + 1, message }),
        }
    }
    Ok(out)
}

pub fn read_ntriples(path: &Path) -> Result<Vec<Triple>> {
    parse_ntriples(&super::read_text(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn one(s: &str) -> Triple {
        let v = parse_ntriples(s).unwrap();
        assert_eq!(v.len(), 1);
        v.into_iter().next().unwrap()
    }

    #[test]
    fn iri_statement() {
        assert_eq!(one("<a> <r> <b> ."), Triple::new("a", "r", "b").unwrap());
    }

    #[test]
    fn typed_literal_preserved() {
        assert_eq!(
            one("<a> <r> \"5\"^^<int> ."),
            Triple::new("a", "r", "\"5\"^^<int>").unwrap()
        );
    }

    #[test]
    fn lang_literal_and_escapes() {
        assert_eq!(one("<a> <r> \"hi\"@en-GB ."), Triple::new("a", "r", "\"hi\"@en-GB").unwrap());
        assert_eq!(
            one(r#"<a> <r> "say \"x\" ok" ."#),
            Triple::new("a", "r", r#""say \"x\" ok""#).unwrap()
        );
    }

    #[test]
    fn blank_nodes_as_written() {
        assert_eq!(one("_:b1 <r> _:b2 ."), Triple::new("_:b1", "r", "_:b2").unwrap());
        assert_eq!(one("_:b1 <r> _:b2."), Triple::new("_:b1", "r", "_:b2").unwrap());
    }

    #[test]
    fn comments_and_blank_lines() {
        let v = parse_ntriples("# header\n\n<http://x/a> <http://x/r> <http://x/b> . # trailing\n").unwrap();
        assert_eq!(v, vec![Triple::new("http://x/a", "http://x/r", "http://x/b").unwrap()]);
    }

    #[test]
    fn missing_terminator() {
        let err = parse_ntriples("<a> <r> <b>").unwrap_err();
        assert_eq!(err.to_string(), "line 1: missing statement terminator");
    }

    #[test]
    fn unbalanced_delimiters() {
        let e = parse_ntriples("<a> <r> <b .").unwrap_err().to_string();
        assert!(e.starts_with("line 1: unterminated IRI"), "{e}");
        let e = parse_ntriples("<a> <r> <b> .\n<a> <r> \"open .").unwrap_err().to_string();
        assert!(e.starts_with("line 2: unterminated literal"), "{e}");
    }

    #[test]
    fn invalid_positions() {
        assert!(parse_ntriples("\"lit\" <r> <b> .").is_err());
        assert!(parse_ntriples("<a> _:p <b> .").is_err());
        assert!(parse_ntriples("<a> <r> <b> . extra").is_err());
        assert!(parse_ntriples("<a> <r> \"x\"^^int .").is_err());
        assert!(parse_ntriples("<> <r> <b> .").is_err());
    }
}
