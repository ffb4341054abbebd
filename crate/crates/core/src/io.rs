//! Text formats: graph files, operator files, colouring exports.
//!
//! Graph file:
//!
//! ```text
//! space <name>
//! edge <u> <v> [weight]
//! point <u>
//! ```
//!
//! Several `space` blocks form a disjoint union. Blank lines and lines
//! starting with `#` are ignored. Weights are positive rationals (`3`,
//! `3/2`, `0.5`) and default to 1.
//!
//! Operator file:
//!
//! ```text
//! space <name>
//! mode rational|float
//! propagation <rational>
//! dim <N>
//! entry <x> <y> <value>
//! ```

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::Path;
use std::sync::Arc;

use thiserror::Error;

use crate::colouring::EdgeColouring;
use crate::scalar::{format_rational, parse_rational, Rational, Scalar, ScalarMode};
use crate::space::{FiniteSpace, GraphBlock, SpaceError};
use crate::transalg::{FinitePropOp, OpError};

#[derive(Debug, Error)]
pub enum IoError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("no spaces defined")]
    NoSpaces,
    #[error("operator file is for space `{found}`, expected `{expected}`")]
    WrongSpace { expected: String, found: String },
    #[error(transparent)]
    Space(#[from] SpaceError),
    #[error(transparent)]
    Op(#[from] OpError),
    #[error("{path}: {source}")]
    File { path: String, source: std::io::Error },
}

fn parse_err(line: usize, message: impl Into<String>) -> IoError {
    IoError::Parse { line, message: message.into() }
}

fn content_lines(text: &str) -> impl Iterator<Item = (usize, Vec<&str>)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
        .map(|(i, l)| (i, l.split_whitespace().collect()))
}

struct BlockBuilder {
    block: GraphBlock,
    index: HashMap<String, usize>,
}

impl BlockBuilder {
    fn point(&mut self, name: &str) -> usize {
        if let Some(&i) = self.index.get(name) {
            return i;
        }
        let i = self.block.points.len();
        self.block.points.push(name.to_string());
        self.index.insert(name.to_string(), i);
        i
    }
}

/// Parses a graph file. A file with one block takes that block's name;
/// otherwise the space is called `name`.
pub fn parse_space(text: &str, name: &str) -> Result<FiniteSpace, IoError> {
    let mut blocks: Vec<BlockBuilder> = Vec::new();
    for (line, tokens) in content_lines(text) {
        match tokens[0] {
            "space" => {
                if tokens.len() != 2 {
                    return Err(parse_err(line, "expected `space <name>`"));
                }
                blocks.push(BlockBuilder { block: GraphBlock::new(tokens[1]), index: HashMap::new() });
            }
            "edge" => {
                if !(3..=4).contains(&tokens.len()) {
                    return Err(parse_err(line, "expected `edge <u> <v> [weight]`"));
                }
                let b = blocks.last_mut().ok_or_else(|| parse_err(line, "edge before any `space` line"))?;
                let w = match tokens.get(3) {
                    Some(t) => parse_rational(t).ok_or_else(|| parse_err(line, format!("bad weight `{t}`")))?,
                    None => Rational::from_integer(1.into()),
                };
                if w <= Rational::from_integer(0.into()) {
                    return Err(parse_err(line, "edge weight must be positive"));
                }
                if tokens[1] == tokens[2] {
                    return Err(parse_err(line, format!("self-loop at `{}`", tokens[1])));
                }
                let u = b.point(tokens[1]);
                let v = b.point(tokens[2]);
                b.block.edges.push((u, v, w));
            }
            "point" => {
                if tokens.len() != 2 {
                    return Err(parse_err(line, "expected `point <u>`"));
                }
                let b = blocks.last_mut().ok_or_else(|| parse_err(line, "point before any `space` line"))?;
                b.point(tokens[1]);
            }
            other => return Err(parse_err(line, format!("unknown directive `{other}`"))),
        }
    }
    if blocks.is_empty() {
        return Err(IoError::NoSpaces);
    }
    let space_name = if blocks.len() == 1 { blocks[0].block.name.clone() } else { name.to_string() };
    let blocks: Vec<GraphBlock> = blocks.into_iter().map(|b| b.block).collect();
    Ok(FiniteSpace::from_blocks(space_name, blocks)?)
}

pub fn read_to_string(path: &Path) -> Result<String, IoError> {
    std::fs::read_to_string(path).map_err(|source| IoError::File { path: path.display().to_string(), source })
}

/// Reads a graph file; a multi-block file is named after the file stem.
pub fn read_space_file(path: &Path) -> Result<FiniteSpace, IoError> {
    let text = read_to_string(path)?;
    let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("space");
    parse_space(&text, stem)
}

pub fn write_operator<S: Scalar>(op: &FinitePropOp<S>) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "space {}", op.space().name());
    let _ = writeln!(out, "mode {}", op.mode());
    let _ = writeln!(out, "propagation {}", format_rational(op.propagation()));
    let _ = writeln!(out, "dim {}", op.dim());
    for (x, y, v) in op.entries() {
        let _ = writeln!(out, "entry {x} {y} {}", v.to_text());
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub enum ParsedOperator {
    Rational(FinitePropOp<Rational>),
    Float(FinitePropOp<f64>),
}

/// Reads an operator file against `space`. The header must name the space
/// and match its size; the recorded propagation is rechecked.
pub fn parse_operator(text: &str, space: &Arc<FiniteSpace>) -> Result<ParsedOperator, IoError> {
    let mut mode = None;
    let mut propagation = None;
    let mut dim = None;
    let mut rational_entries = Vec::new();
    let mut float_entries = Vec::new();
    for (line, tokens) in content_lines(text) {
        let arg = |i: usize| tokens.get(i).copied().ok_or_else(|| parse_err(line, "missing field"));
        match tokens[0] {
            "space" => {
                let found = arg(1)?;
                if found != space.name() {
                    return Err(IoError::WrongSpace { expected: space.name().to_string(), found: found.to_string() });
                }
            }
            "mode" => {
                mode = Some(match arg(1)? {
                    "rational" => ScalarMode::Rational,
                    "float" => ScalarMode::Float,
                    m => return Err(parse_err(line, format!("unknown mode `{m}`"))),
                })
            }
            "propagation" => {
                propagation = Some(parse_rational(arg(1)?).ok_or_else(|| parse_err(line, "bad propagation"))?)
            }
            "dim" => {
                let d: usize = arg(1)?.parse().map_err(|_| parse_err(line, "bad dimension"))?;
                if d != space.len() {
                    return Err(parse_err(line, format!("dimension {d} but space has {} points", space.len())));
                }
                dim = Some(d);
            }
            "entry" => {
                if tokens.len() != 4 {
                    return Err(parse_err(line, "expected `entry <x> <y> <value>`"));
                }
                let x: usize = tokens[1].parse().map_err(|_| parse_err(line, "bad row index"))?;
                let y: usize = tokens[2].parse().map_err(|_| parse_err(line, "bad column index"))?;
                match mode {
                    Some(ScalarMode::Rational) => {
                        let v = parse_rational(tokens[3]).ok_or_else(|| parse_err(line, "bad rational value"))?;
                        rational_entries.push((x, y, v));
                    }
                    Some(ScalarMode::Float) => {
                        let v: f64 = tokens[3].parse().map_err(|_| parse_err(line, "bad float value"))?;
                        float_entries.push((x, y, v));
                    }
                    None => return Err(parse_err(line, "entry before `mode` line")),
                }
            }
            other => return Err(parse_err(line, format!("unknown directive `{other}`"))),
        }
    }
    if dim.is_none() {
        return Err(parse_err(0, "missing `dim` line"));
    }
    let parsed = match mode.ok_or_else(|| parse_err(0, "missing `mode` line"))? {
        ScalarMode::Rational => ParsedOperator::Rational(FinitePropOp::from_entries(space, rational_entries)?),
        ScalarMode::Float => ParsedOperator::Float(FinitePropOp::from_entries(space, float_entries)?),
    };
    let actual = match &parsed {
        ParsedOperator::Rational(op) => op.propagation().clone(),
        ParsedOperator::Float(op) => op.propagation().clone(),
    };
    if let Some(p) = propagation {
        if p != actual {
            return Err(parse_err(0, format!("recorded propagation {} but entries give {}", format_rational(&p), format_rational(&actual))));
        }
    }
    Ok(parsed)
}

/// `colour u v k` per edge, with point names.
pub fn write_colouring(colouring: &EdgeColouring) -> String {
    let space = colouring.space();
    let mut out = String::new();
    for (&(x, y), k) in colouring.edges().iter().zip(colouring.colours()) {
        let _ = writeln!(out, "colour {} {} {k}", space.point_name(x), space.point_name(y));
    }
    out
}
