//! Line-oriented netlist text format.
//!
//! ```text
//! * comment
//! .NAME inv
//! .DEFAULT R=10k
//! .NODE vdd ROLE=VDD
//! .NODE gnd ROLE=GND
//! .NODE in ROLE=IN
//! .NODE out C=20f ROLE=OUT
//! MP out in vdd vdd P
//! MN out in gnd gnd N R=5k
//! .INPUTS in
//! .OUTPUTS out
//! ```
//!
//! Device lines are `M<name> <drain> <gate> <source> [<bulk>] <N|P> [R=<val>]`;
//! the bulk terminal is accepted and discarded. Keywords are case-insensitive.

use std::fmt::Write as _;

use thiserror::Error;

use super::{
    DeviceKind, Netlist, NetlistBuilder, NetlistError, NodeRole, DEFAULT_ON_RESISTANCE,
};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ParseErrorKind {
    Syntax(String),
    DuplicateName(String),
    UnknownNode(String),
    MissingRail(String),
    InvalidValue(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{line}:{column}: {}", describe(.kind))]
pub struct ParseError {
    /// 1-based line number.
    pub line: usize,
    /// 1-based column (in characters) of the offending token.
    pub column: usize,
    pub kind: ParseErrorKind,
}

fn describe(kind: &ParseErrorKind) -> String {
    match kind {
        ParseErrorKind::Syntax(m) => format!("syntax error: {m}"),
        ParseErrorKind::DuplicateName(n) => format!("duplicate name `{n}`"),
        ParseErrorKind::UnknownNode(n) => format!("unknown node `{n}`"),
        ParseErrorKind::MissingRail(m) => format!("missing rail: {m}"),
        ParseErrorKind::InvalidValue(m) => format!("invalid value: {m}"),
    }
}

#[derive(Debug, Clone, Copy)]
struct Token<'a> {
    text: &'a str,
    column: usize,
}

struct Statement<'a> {
    line: usize,
    tokens: Vec<Token<'a>>,
}

impl<'a> Statement<'a> {
    fn err(&self, token: usize, kind: ParseErrorKind) -> ParseError {
        let column = self.tokens.get(token).map_or(1, |t| t.column);
        ParseError {
            line: self.line,
            column,
            kind,
        }
    }
}

fn tokenize(line: &str) -> Vec<Token<'_>> {
    let mut tokens = Vec::new();
    let mut start: Option<(usize, usize)> = None;
    for (col, (byte, ch)) in line.char_indices().enumerate() {
        if ch.is_whitespace() {
            if let Some((b, c)) = start.take() {
                tokens.push(Token {
                    text: &line[b..byte],
                    column: c + 1,
                });
            }
        } else if start.is_none() {
            if ch == '*' {
                return tokens;
            }
            start = Some((byte, col));
        }
    }
    if let Some((b, c)) = start {
        tokens.push(Token {
            text: &line[b..],
            column: c + 1,
        });
    }
    tokens
}

/// Parses a number with an optional engineering suffix
/// (`f p n u m k meg g t`, case-insensitive). Trailing unit letters after the
/// suffix are ignored, so `20fF` and `10kohm` are accepted.
pub fn parse_value(text: &str) -> Result<f64, String> {
    let bytes = text.as_bytes();
    let mut end = 0;
    while end < bytes.len() {
        let c = bytes[end];
        let is_exp = (c == b'e' || c == b'E')
            && end > 0
            && match bytes.get(end + 1) {
                Some(d) if d.is_ascii_digit() => true,
                Some(b'+') | Some(b'-') => bytes.get(end + 2).is_some_and(|d| d.is_ascii_digit()),
                _ => false,
            };
        if c.is_ascii_digit() || c == b'.' || is_exp {
            end += if is_exp && !bytes[end + 1].is_ascii_digit() { 2 } else { 1 };
        } else if (c == b'+' || c == b'-') && end == 0 {
            end += 1;
        } else {
            break;
        }
    }
    let mantissa: f64 = text[..end]
        .parse()
        .map_err(|_| format!("`{text}` is not a number"))?;
    let rest = text[end..].to_ascii_lowercase();
    let (scale, tail) = if let Some(t) = rest.strip_prefix("meg") {
        (1e6, t)
    } else {
        match rest.chars().next() {
            None => (1.0, ""),
            Some(c) => {
                // Negative powers are applied by division so that `20f`
                // is bit-identical to `20e-15`.
                let scale = match c {
                    'f' => -1e15,
                    'p' => -1e12,
                    'n' => -1e9,
                    'u' => -1e6,
                    'm' => -1e3,
                    'k' => 1e3,
                    'g' => 1e9,
                    't' => 1e12,
                    _ => return Err(format!("unknown suffix in `{text}`")),
                };
                (scale, &rest[1..])
            }
        }
    };
    if !tail.chars().all(|c| c.is_ascii_alphabetic()) {
        return Err(format!("trailing characters in `{text}`"));
    }
    let value = if scale < 0.0 { mantissa / -scale } else { mantissa * scale };
    if !value.is_finite() {
        return Err(format!("`{text}` is not finite"));
    }
    Ok(value)
}

fn is_identifier(s: &str) -> bool {
    !s.is_empty() && !s.starts_with('.') && !s.contains(['=', '*'])
}

fn key_value<'a>(tok: &Token<'a>) -> Option<(String, &'a str)> {
    tok.text
        .split_once('=')
        .map(|(k, v)| (k.to_ascii_uppercase(), v))
}

fn role_from_keyword(s: &str) -> Option<NodeRole> {
    Some(match s.to_ascii_uppercase().as_str() {
        "IN" => NodeRole::Input,
        "OUT" => NodeRole::Output,
        "VDD" => NodeRole::SupplyRail,
        "GND" => NodeRole::GroundRail,
        "PCLK" => NodeRole::PowerClock,
        "INT" => NodeRole::Internal,
        _ => return None,
    })
}

fn role_keyword(role: NodeRole) -> Option<&'static str> {
    match role {
        NodeRole::Internal => None,
        NodeRole::Input => Some("IN"),
        NodeRole::Output => Some("OUT"),
        NodeRole::SupplyRail => Some("VDD"),
        NodeRole::GroundRail => Some("GND"),
        NodeRole::PowerClock => Some("PCLK"),
    }
}

fn from_builder(err: NetlistError) -> ParseErrorKind {
    match err {
        NetlistError::DuplicateName(n) => ParseErrorKind::DuplicateName(n),
        NetlistError::UnknownNode(n) => ParseErrorKind::UnknownNode(n),
        NetlistError::MissingRail(m) => ParseErrorKind::MissingRail(m),
        NetlistError::InvalidValue(m) => ParseErrorKind::InvalidValue(m),
    }
}

struct PendingDevice<'s, 'a> {
    stmt: &'s Statement<'a>,
    kind: DeviceKind,
    terminals: [usize; 3],
    resistance: Option<f64>,
}

/// Parses the netlist text format. Statements may appear in any order; nodes
/// must be declared with `.NODE` before they are usable, but the declaration
/// may follow the device line that references it.
pub fn parse_netlist(text: &str) -> Result<Netlist, ParseError> {
    let mut statements = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let tokens = tokenize(line);
        if tokens.is_empty() {
            continue;
        }
        if tokens[0].text.eq_ignore_ascii_case(".END") {
            break;
        }
        statements.push(Statement {
            line: i + 1,
            tokens,
        });
    }
    let end_line = text.lines().count() + 1;

    let mut builder = NetlistBuilder::new("unnamed");
    let mut default_r = DEFAULT_ON_RESISTANCE;
    let mut devices: Vec<PendingDevice> = Vec::new();
    let mut pins: Vec<(&Statement, NodeRole)> = Vec::new();

    for stmt in &statements {
        let head = stmt.tokens[0].text;
        let keyword = head.to_ascii_uppercase();
        match keyword.as_str() {
            ".NAME" => {
                if stmt.tokens.len() != 2 || !is_identifier(stmt.tokens[1].text) {
                    return Err(stmt.err(1, ParseErrorKind::Syntax(".NAME takes one identifier".into())));
                }
                builder.set_name(stmt.tokens[1].text);
            }
            ".DEFAULT" => {
                if stmt.tokens.len() != 2 {
                    return Err(stmt.err(1, ParseErrorKind::Syntax(".DEFAULT takes R=<value>".into())));
                }
                match key_value(&stmt.tokens[1]) {
                    Some((k, v)) if k == "R" => {
                        let r = parse_value(v)
                            .map_err(|m| stmt.err(1, ParseErrorKind::InvalidValue(m)))?;
                        if r <= 0.0 {
                            return Err(stmt.err(
                                1,
                                ParseErrorKind::InvalidValue(format!("default resistance must be positive, got {r}")),
                            ));
                        }
                        default_r = r;
                    }
                    _ => {
                        return Err(stmt.err(1, ParseErrorKind::Syntax(".DEFAULT takes R=<value>".into())))
                    }
                }
            }
            ".NODE" => parse_node(stmt, &mut builder)?,
            ".INPUTS" => pins.push((stmt, NodeRole::Input)),
            ".OUTPUTS" => pins.push((stmt, NodeRole::Output)),
            _ if keyword.starts_with('M') => devices.push(parse_device(stmt)?),
            _ if keyword.starts_with('.') => {
                return Err(stmt.err(0, ParseErrorKind::Syntax(format!("unknown directive `{head}`"))))
            }
            _ => {
                return Err(stmt.err(0, ParseErrorKind::Syntax(format!("unrecognised statement `{head}`"))))
            }
        }
    }

    let mut seen_devices = std::collections::HashSet::new();
    for dev in &devices {
        let name = dev.stmt.tokens[0].text;
        if !seen_devices.insert(name.to_ascii_lowercase()) {
            return Err(dev.stmt.err(0, ParseErrorKind::DuplicateName(name.into())));
        }
        for &t in &dev.terminals {
            let node = dev.stmt.tokens[t].text;
            if !builder.has_node(node) {
                return Err(dev.stmt.err(t, ParseErrorKind::UnknownNode(node.into())));
            }
        }
        let [d, g, s] = dev.terminals.map(|t| dev.stmt.tokens[t].text);
        if d.eq_ignore_ascii_case(s) {
            return Err(dev.stmt.err(
                dev.terminals[2],
                ParseErrorKind::InvalidValue(format!("device `{name}` has source and drain on the same node")),
            ));
        }
        builder.device(name, dev.kind, d, g, s, dev.resistance.unwrap_or(default_r));
    }

    for (stmt, role) in &pins {
        let names: Vec<&str> = stmt.tokens[1..].iter().map(|t| t.text).collect();
        for (i, name) in names.iter().enumerate() {
            if !builder.has_node(name) {
                return Err(stmt.err(i + 1, ParseErrorKind::UnknownNode((*name).into())));
            }
        }
        match role {
            NodeRole::Input => builder.inputs(&names),
            _ => builder.outputs(&names),
        };
    }

    builder.build().map_err(|e| {
        // Remaining failures are whole-file properties (rails, pin roles).
        ParseError {
            line: end_line,
            column: 1,
            kind: from_builder(e),
        }
    })
}

fn parse_node(stmt: &Statement, builder: &mut NetlistBuilder) -> Result<(), ParseError> {
    let Some(name_tok) = stmt.tokens.get(1) else {
        return Err(stmt.err(0, ParseErrorKind::Syntax(".NODE requires a name".into())));
    };
    if !is_identifier(name_tok.text) {
        return Err(stmt.err(1, ParseErrorKind::Syntax(format!("invalid node name `{}`", name_tok.text))));
    }
    let mut capacitance = 0.0;
    let mut role = NodeRole::Internal;
    for (i, tok) in stmt.tokens.iter().enumerate().skip(2) {
        match key_value(tok) {
            Some((k, v)) if k == "C" => {
                capacitance =
                    parse_value(v).map_err(|m| stmt.err(i, ParseErrorKind::InvalidValue(m)))?;
                if capacitance < 0.0 {
                    return Err(stmt.err(
                        i,
                        ParseErrorKind::InvalidValue(format!("negative capacitance {capacitance}")),
                    ));
                }
            }
            Some((k, v)) if k == "ROLE" => {
                role = role_from_keyword(v)
                    .ok_or_else(|| stmt.err(i, ParseErrorKind::Syntax(format!("unknown role `{v}`"))))?;
            }
            _ => {
                return Err(stmt.err(i, ParseErrorKind::Syntax(format!("unexpected `{}`", tok.text))))
            }
        }
    }
    builder
        .node(name_tok.text, capacitance, role)
        .map(|_| ())
        .map_err(|e| stmt.err(1, from_builder(e)))
}

fn parse_device<'s, 'a>(stmt: &'s Statement<'a>) -> Result<PendingDevice<'s, 'a>, ParseError> {
    let mut resistance = None;
    let mut positional = Vec::new();
    for (i, tok) in stmt.tokens.iter().enumerate().skip(1) {
        match key_value(tok) {
            Some((k, v)) if k == "R" => {
                let r = parse_value(v).map_err(|m| stmt.err(i, ParseErrorKind::InvalidValue(m)))?;
                if r <= 0.0 {
                    return Err(stmt.err(
                        i,
                        ParseErrorKind::InvalidValue(format!("on-resistance must be positive, got {r}")),
                    ));
                }
                resistance = Some(r);
            }
            Some(_) => {
                return Err(stmt.err(i, ParseErrorKind::Syntax(format!("unknown parameter `{}`", tok.text))))
            }
            None if resistance.is_some() => {
                return Err(stmt.err(i, ParseErrorKind::Syntax("parameters must follow the device type".into())))
            }
            None => positional.push(i),
        }
    }
    if !(positional.len() == 4 || positional.len() == 5) {
        return Err(stmt.err(
            positional.last().copied().unwrap_or(0),
            ParseErrorKind::Syntax("expected `M<name> <drain> <gate> <source> [<bulk>] <N|P>`".into()),
        ));
    }
    let type_idx = *positional.last().unwrap();
    let kind = match stmt.tokens[type_idx].text.to_ascii_uppercase().as_str() {
        "N" | "NMOS" => DeviceKind::NMos,
        "P" | "PMOS" => DeviceKind::PMos,
        other => {
            return Err(stmt.err(type_idx, ParseErrorKind::Syntax(format!("device type must be N or P, got `{other}`"))))
        }
    };
    Ok(PendingDevice {
        stmt,
        kind,
        terminals: [positional[0], positional[1], positional[2]],
        resistance,
    })
}

/// Writes `n` in the text format. Every device carries an explicit `R=` so
/// the output does not depend on a file default.
pub fn serialize_netlist(n: &Netlist) -> String {
    let mut out = String::new();
    let _ = writeln!(out, ".NAME {}", n.name());
    for node in n.nodes() {
        let _ = write!(out, ".NODE {}", node.name);
        if node.capacitance != 0.0 {
            let _ = write!(out, " C={:e}", node.capacitance);
        }
        if let Some(role) = role_keyword(node.role) {
            let _ = write!(out, " ROLE={role}");
        }
        out.push('\n');
    }
    for d in n.devices() {
        let kind = match d.kind {
            DeviceKind::NMos => 'N',
            DeviceKind::PMos => 'P',
        };
        let _ = writeln!(
            out,
            "{} {} {} {} {} R={:e}",
            d.name,
            n.node(d.drain).name,
            n.node(d.gate).name,
            n.node(d.source).name,
            kind,
            d.on_resistance
        );
    }
    for (keyword, pins) in [(".INPUTS", n.inputs()), (".OUTPUTS", n.outputs())] {
        if pins.is_empty() {
            continue;
        }
        out.push_str(keyword);
        for &p in pins {
            out.push(' ');
            out.push_str(&n.node(p).name);
        }
        out.push('\n');
    }
    out
}
