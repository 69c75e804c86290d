//! Text notation for pulse programs.
//!
//! Grammar (whitespace-insensitive, one program per line):
//!
//! ```text
//! program := block+
//! block   := "[" segment+ "]" "^"? "{"? ("x" | "X" | U+00D7) INT "}"?
//! segment := "(" SIGNED_DECIMAL ")" "_" ( "{" SIGNED_DECIMAL "}" | SIGNED_DECIMAL )
//! ```
//!
//! Flip angles and phases are in degrees; the Unicode minus U+2212 is accepted
//! as a sign. Serialization rounds to 0.1 degree and writes integer phases
//! unbraced (`_0`, `_90`) and fractional phases braced (`_{175.6}`), matching
//! the conventional listing style.

use crate::pulse::{Block, Event, PulseProgram, RfSegment};
use thiserror::Error;

#[derive(Debug, Error)]
#[error("parse error at byte {pos}: {message}")]
pub struct ParseError {
    pub pos: usize,
    pub message: String,
}

#[derive(Debug, Error)]
pub enum SerializeError {
    #[error("program contains a z-shift event; the text notation covers RF segments only")]
    UnsupportedEvent,
}

struct Cursor<'a> {
    text: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn new(text: &'a str) -> Self {
        Cursor {
            text: text.as_bytes(),
            pos: 0,
        }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.text.len() && self.text[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.text.get(self.pos).copied()
    }

    fn eat(&mut self, byte: u8) -> Result<(), ParseError> {
        self.skip_ws();
        if self.text.get(self.pos) == Some(&byte) {
            self.pos += 1;
            Ok(())
        } else {
            Err(self.error(format!("expected '{}'", byte as char)))
        }
    }

    fn eat_optional(&mut self, byte: u8) -> bool {
        self.skip_ws();
        if self.text.get(self.pos) == Some(&byte) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    /// Consumes "x", "X" or the Unicode multiplication sign.
    fn eat_times(&mut self) -> Result<(), ParseError> {
        self.skip_ws();
        match self.text.get(self.pos) {
            Some(b'x') | Some(b'X') => {
                self.pos += 1;
                Ok(())
            }
            // U+00D7 MULTIPLICATION SIGN in UTF-8: 0xC3 0x97.
            Some(0xC3) if self.text.get(self.pos + 1) == Some(&0x97) => {
                self.pos += 2;
                Ok(())
            }
            _ => Err(self.error("expected repetition marker 'x'".into())),
        }
    }

    fn number(&mut self) -> Result<f64, ParseError> {
        self.skip_ws();
        let start = self.pos;
        let mut s = String::new();
        // ASCII sign or U+2212 MINUS SIGN (0xE2 0x88 0x92).
        match self.text.get(self.pos) {
            Some(b'-') | Some(b'+') => {
                s.push(self.text[self.pos] as char);
                self.pos += 1;
            }
            Some(0xE2)
                if self.text.get(self.pos + 1) == Some(&0x88)
                    && self.text.get(self.pos + 2) == Some(&0x92) =>
            {
                s.push('-');
                self.pos += 3;
            }
            _ => {}
        }
        while let Some(&c) = self.text.get(self.pos) {
            if c.is_ascii_digit() || c == b'.' {
                s.push(c as char);
                self.pos += 1;
            } else {
                break;
            }
        }
        s.parse::<f64>().map_err(|_| ParseError {
            pos: start,
            message: "expected a decimal number".into(),
        })
    }

    fn integer(&mut self) -> Result<u32, ParseError> {
        self.skip_ws();
        let start = self.pos;
        let mut s = String::new();
        while let Some(&c) = self.text.get(self.pos) {
            if c.is_ascii_digit() {
                s.push(c as char);
                self.pos += 1;
            } else {
                break;
            }
        }
        s.parse::<u32>().map_err(|_| ParseError {
            pos: start,
            message: "expected a repetition count".into(),
        })
    }

    fn error(&self, message: String) -> ParseError {
        ParseError {
            pos: self.pos,
            message,
        }
    }
}

/// Parses program text into a [`PulseProgram`] (no metadata attached).
pub fn parse_program(text: &str) -> Result<PulseProgram, ParseError> {
    let mut cur = Cursor::new(text);
    let mut blocks = Vec::new();
    loop {
        match cur.peek() {
            Some(b'[') => blocks.push(parse_block(&mut cur)?),
            None => break,
            Some(c) => {
                return Err(cur.error(format!("unexpected character '{}'", c as char)));
            }
        }
    }
    if blocks.is_empty() {
        return Err(ParseError {
            pos: 0,
            message: "empty program".into(),
        });
    }
    Ok(PulseProgram { blocks, meta: None })
}

fn parse_block(cur: &mut Cursor) -> Result<Block, ParseError> {
    cur.eat(b'[')?;
    let mut events = Vec::new();
    loop {
        match cur.peek() {
            Some(b'(') => events.push(parse_segment(cur)?),
            Some(b']') => {
                cur.pos += 1;
                break;
            }
            _ => return Err(cur.error("expected '(' or ']'".into())),
        }
    }
    if events.is_empty() {
        return Err(cur.error("block has no segments".into()));
    }
    cur.eat_optional(b'^');
    let braced = cur.eat_optional(b'{');
    cur.eat_times()?;
    let reps = cur.integer()?;
    if braced {
        cur.eat(b'}')?;
    }
    if reps == 0 {
        return Err(cur.error("repetition count must be at least 1".into()));
    }
    Ok(Block { events, reps })
}

fn parse_segment(cur: &mut Cursor) -> Result<Event, ParseError> {
    cur.eat(b'(')?;
    let flip = cur.number()?;
    cur.eat(b')')?;
    cur.eat(b'_')?;
    let phase = if cur.eat_optional(b'{') {
        let p = cur.number()?;
        cur.eat(b'}')?;
        p
    } else {
        cur.number()?
    };
    Ok(Event::Rf(RfSegment::new(flip, phase)))
}

/// Serializes a program to canonical text, rounding angles to 0.1 degree.
pub fn serialize_program(program: &PulseProgram) -> Result<String, SerializeError> {
    let mut out = String::new();
    for block in &program.blocks {
        out.push('[');
        for event in &block.events {
            match event {
                Event::Rf(seg) => {
                    out.push('(');
                    out.push_str(&format_angle(seg.flip_deg));
                    out.push_str(")_");
                    // Rounding can carry a phase just below 360 up to the
                    // wrap point; keep the canonical range [0, 360).
                    let wrapped = ((seg.phase_deg * 10.0).round() / 10.0).rem_euclid(360.0);
                    let phase = format_angle(wrapped);
                    if phase.ends_with(".0") {
                        out.push_str(phase.trim_end_matches(".0"));
                    } else {
                        out.push('{');
                        out.push_str(&phase);
                        out.push('}');
                    }
                }
                Event::Z(_) => return Err(SerializeError::UnsupportedEvent),
            }
        }
        out.push_str(&format!("]^x{}", block.reps));
    }
    Ok(out)
}

fn format_angle(deg: f64) -> String {
    // Round half away from zero at the 0.1-degree display precision.
    let rounded = (deg * 10.0).round() / 10.0;
    let rounded = if rounded == 0.0 { 0.0 } else { rounded };
    format!("{rounded:.1}")
}
