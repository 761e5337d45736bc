//! Line-oriented circuit text format.
//!
//! ```text
//! # comments and blank lines are ignored
//! width 18
//! ordering Upper-Lower-Ancilla      # optional, with the three register lines
//! upper 0 1 2 3 4 5 6 7
//! lower 8 9 10 11
//! ancilla 12 13 14 15 16 17
//! measure 0 1 2 3 4 5 6 7
//! mark state_prep                   # marker at the current gate count
//! h 0
//! x 8
//! p 3 0.7853981633974483           # qubit, angle in radians
//! cp 0 12 -1.5707963267948966      # control, target, angle
//! cx 0 1
//! swap 2 5
//! cswap 0 8 12                     # control, swapped pair
//! u1 q  re im re im re im re im     # 2x2 entries, row-major
//! u2 a b  re im ... (16 pairs)      # 4x4 entries, row-major
//! ```
//!
//! Angles and matrix entries are written in shortest round-trip form, so
//! `from_text(to_text(c)) == c` exactly.

use std::fmt::Write as _;

use nalgebra::{Matrix2, Matrix4};

use super::{Circuit, Gate, Marker, RegisterLayout, RegisterOrdering};
use crate::error::{Error, Result};
use crate::C64;

fn join(xs: &[usize]) -> String {
    xs.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(" ")
}

fn write_entries<'a>(out: &mut String, rows: usize, at: impl Fn(usize, usize) -> &'a C64) {
    for r in 0..rows {
        for c in 0..rows {
            let z = at(r, c);
            let _ = write!(out, " {:?} {:?}", z.re, z.im);
        }
    }
}

impl Circuit {
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "width {}", self.width);
        if let Some(l) = &self.layout {
            let _ = writeln!(out, "ordering {}", l.ordering);
            let _ = writeln!(out, "upper {}", join(&l.upper));
            let _ = writeln!(out, "lower {}", join(&l.lower));
            let _ = writeln!(out, "ancilla {}", join(&l.ancilla));
        }
        if !self.measured.is_empty() {
            let _ = writeln!(out, "measure {}", join(&self.measured));
        }
        let mut markers = self.markers.iter().peekable();
        for (i, g) in self.gates.iter().enumerate() {
            while let Some(m) = markers.next_if(|m| m.position == i) {
                let _ = writeln!(out, "mark {}", m.label);
            }
            let line = match g {
                Gate::H(q) => format!("h {q}"),
                Gate::X(q) => format!("x {q}"),
                Gate::Phase(q, t) => format!("p {q} {t:?}"),
                Gate::CPhase(a, b, t) => format!("cp {a} {b} {t:?}"),
                Gate::CX(a, b) => format!("cx {a} {b}"),
                Gate::Swap(a, b) => format!("swap {a} {b}"),
                Gate::CSwap(a, b, c) => format!("cswap {a} {b} {c}"),
                Gate::Unitary1(q, m) => {
                    let mut s = format!("u1 {q}");
                    write_entries(&mut s, 2, |r, c| &m[(r, c)]);
                    s
                }
                Gate::Unitary2(a, b, m) => {
                    let mut s = format!("u2 {a} {b}");
                    write_entries(&mut s, 4, |r, c| &m[(r, c)]);
                    s
                }
            };
            out.push_str(&line);
            out.push('\n');
        }
        for m in markers {
            let _ = writeln!(out, "mark {}", m.label);
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Circuit> {
        let mut width = None;
        let mut ordering = None;
        let (mut upper, mut lower, mut ancilla) = (None, None, None);
        let mut measured = Vec::new();
        let mut gates = Vec::new();
        let mut markers = Vec::new();

        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let err = |msg: String| Error::Parse { line: line_no, msg };
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let mut words = line.split_whitespace();
            let head = words.next().unwrap_or_default();
            let rest: Vec<&str> = words.collect();
            let ints = || -> Result<Vec<usize>> {
                rest.iter().map(|w| w.parse::<usize>().map_err(|e| err(format!("{w:?}: {e}")))).collect()
            };
            let int_at = |i: usize| -> Result<usize> {
                let w = rest.get(i).ok_or_else(|| err(format!("{head}: missing operand {i}")))?;
                w.parse().map_err(|e| err(format!("{w:?}: {e}")))
            };
            let float_at = |i: usize| -> Result<f64> {
                let w = rest.get(i).ok_or_else(|| err(format!("{head}: missing operand {i}")))?;
                w.parse().map_err(|e| err(format!("{w:?}: {e}")))
            };
            let arity = |n: usize| -> Result<()> {
                if rest.len() == n {
                    Ok(())
                } else {
                    Err(err(format!("{head} expects {n} operands, got {}", rest.len())))
                }
            };
            let entries = |start: usize, count: usize| -> Result<Vec<C64>> {
                (0..count).map(|k| Ok(C64::new(float_at(start + 2 * k)?, float_at(start + 2 * k + 1)?))).collect()
            };

            let gate = match head {
                "width" => {
                    arity(1)?;
                    width = Some(int_at(0)?);
                    continue;
                }
                "ordering" => {
                    arity(1)?;
                    ordering = Some(rest[0].parse::<RegisterOrdering>().map_err(|e| err(e.to_string()))?);
                    continue;
                }
                "upper" => {
                    upper = Some(ints()?);
                    continue;
                }
                "lower" => {
                    lower = Some(ints()?);
                    continue;
                }
                "ancilla" => {
                    ancilla = Some(ints()?);
                    continue;
                }
                "measure" => {
                    measured = ints()?;
                    continue;
                }
                "mark" => {
                    arity(1)?;
                    markers.push(Marker { label: rest[0].to_string(), position: gates.len() });
                    continue;
                }
                "h" => {
                    arity(1)?;
                    Gate::H(int_at(0)?)
                }
                "x" => {
                    arity(1)?;
                    Gate::X(int_at(0)?)
                }
                "p" => {
                    arity(2)?;
                    Gate::Phase(int_at(0)?, float_at(1)?)
                }
                "cp" => {
                    arity(3)?;
                    Gate::CPhase(int_at(0)?, int_at(1)?, float_at(2)?)
                }
                "cx" => {
                    arity(2)?;
                    Gate::CX(int_at(0)?, int_at(1)?)
                }
                "swap" => {
                    arity(2)?;
                    Gate::Swap(int_at(0)?, int_at(1)?)
                }
                "cswap" => {
                    arity(3)?;
                    Gate::CSwap(int_at(0)?, int_at(1)?, int_at(2)?)
                }
                "u1" => {
                    arity(1 + 8)?;
                    let e = entries(1, 4)?;
                    Gate::Unitary1(int_at(0)?, Box::new(Matrix2::from_row_slice(&e)))
                }
                "u2" => {
                    arity(2 + 32)?;
                    let e = entries(2, 16)?;
                    Gate::Unitary2(int_at(0)?, int_at(1)?, Box::new(Matrix4::from_row_slice(&e)))
                }
                other => return Err(err(format!("unknown directive {other:?}"))),
            };
            gates.push((line_no, gate));
        }

        let width = width.ok_or(Error::Parse { line: 0, msg: "missing width line".into() })?;
        let layout = match (ordering, upper, lower, ancilla) {
            (Some(ordering), Some(upper), Some(lower), Some(ancilla)) => {
                Some(RegisterLayout { upper, lower, ancilla, ordering })
            }
            (None, None, None, None) => None,
            _ => return Err(Error::Parse { line: 0, msg: "incomplete register layout".into() }),
        };
        let mut c = Circuit::new(width);
        for (line, g) in gates {
            c.push(g).map_err(|e| Error::Parse { line, msg: e.to_string() })?;
        }
        c.layout = layout;
        c.measured = measured;
        c.markers = markers;
        c.validate()?;
        Ok(c)
    }
}
