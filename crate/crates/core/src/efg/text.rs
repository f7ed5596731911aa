//! Line-oriented text format.
//!
//! ```text
//! game <name>
//! root <id>
//! node <id> chance {<child>:<prob> ...}
//! node <id> player <1|2> infoset <label> public <label> [view <label>] {<action>:<child> ...}
//! node <id> terminal <u1>
//! ```
//!
//! `#` starts a comment. Gadget games add `gadget <kind> resolver <1|2>` and
//! `auxinfoset <label>` lines, which [`parse_game`] skips.

use std::fmt::Write as _;

use super::{Game, GameError, NodeId, NodeKind, NodeTable, Player};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("line {line}: {message}")]
pub struct ParseError {
    pub line: usize,
    pub message: String,
}

/// Gadget metadata carried by a gadget game file.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct GadgetHeader {
    pub kind: String,
    pub resolver: u8,
    pub aux_infosets: Vec<String>,
}

fn err(line: usize, message: impl Into<String>) -> ParseError {
    ParseError {
        line,
        message: message.into(),
    }
}

fn parse_num<T: std::str::FromStr>(tok: &str, line: usize, what: &str) -> Result<T, ParseError> {
    tok.parse::<T>()
        .map_err(|_| err(line, format!("malformed {what} `{tok}`")))
}

/// Splits `{a:1 b:2}` (possibly spread over several whitespace tokens) into pairs.
fn parse_braces(rest: &str, line: usize) -> Result<Vec<(String, String)>, ParseError> {
    let rest = rest.trim();
    let inner = rest
        .strip_prefix('{')
        .and_then(|r| r.strip_suffix('}'))
        .ok_or_else(|| err(line, "expected `{...}`"))?;
    inner
        .split_whitespace()
        .map(|tok| {
            let (k, v) = tok
                .rsplit_once(':')
                .ok_or_else(|| err(line, format!("expected `key:value`, got `{tok}`")))?;
            if k.is_empty() {
                return Err(err(line, format!("empty key in `{tok}`")));
            }
            Ok((k.to_string(), v.to_string()))
        })
        .collect()
}

pub(crate) fn parse_table(text: &str) -> Result<(NodeTable, Option<GadgetHeader>), ParseError> {
    let mut table = NodeTable::default();
    let mut header: Option<GadgetHeader> = None;
    let mut aux = Vec::new();
    let mut seen_ids = std::collections::HashMap::new();
    let mut refs: Vec<(usize, NodeId)> = Vec::new();
    let mut root_line = 0;
    for (i, raw) in text.lines().enumerate() {
        let ln = i + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let (head, rest) = content
            .split_once(char::is_whitespace)
            .unwrap_or((content, ""));
        let rest = rest.trim();
        match head {
            "game" => {
                if rest.is_empty() || rest.contains(char::is_whitespace) {
                    return Err(err(ln, "expected `game <name>`"));
                }
                table.name = rest.to_string();
            }
            "root" => {
                table.root = Some(parse_num(rest, ln, "node id")?);
                root_line = ln;
            }
            "gadget" => {
                let toks: Vec<&str> = rest.split_whitespace().collect();
                match toks.as_slice() {
                    [kind @ ("resolving" | "maxmargin" | "unsafe"), "resolver", r @ ("1" | "2")] => {
                        header = Some(GadgetHeader {
                            kind: kind.to_string(),
                            resolver: r.parse().expect("matched digit"),
                            aux_infosets: Vec::new(),
                        })
                    }
                    _ => {
                        return Err(err(
                            ln,
                            "expected `gadget <resolving|maxmargin|unsafe> resolver <1|2>`",
                        ))
                    }
                }
            }
            "auxinfoset" => {
                if rest.is_empty() || rest.contains(char::is_whitespace) {
                    return Err(err(ln, "expected `auxinfoset <label>`"));
                }
                aux.push(rest.to_string());
            }
            "node" => {
                let (id_tok, rest) = rest
                    .split_once(char::is_whitespace)
                    .ok_or_else(|| err(ln, "truncated node line"))?;
                let id: NodeId = parse_num(id_tok, ln, "node id")?;
                let rest = rest.trim();
                let (kind_tok, rest) = rest.split_once(char::is_whitespace).unwrap_or((rest, ""));
                let kind = match kind_tok {
                    "terminal" => NodeKind::Terminal {
                        utility: parse_num(rest.trim(), ln, "utility")?,
                    },
                    "chance" => {
                        let mut outcomes = Vec::new();
                        for (c, p) in parse_braces(rest, ln)? {
                            let c: NodeId = parse_num(&c, ln, "node id")?;
                            let p: f64 = parse_num(&p, ln, "probability")?;
                            refs.push((ln, c));
                            outcomes.push((c, p));
                        }
                        NodeKind::Chance { outcomes }
                    }
                    "player" => {
                        let brace = rest
                            .find('{')
                            .ok_or_else(|| err(ln, "missing action list"))?;
                        let toks: Vec<&str> = rest[..brace].split_whitespace().collect();
                        let (player, infoset, public, view) = match toks.as_slice() {
                            [p, "infoset", s, "public", q] => (*p, *s, *q, None),
                            [p, "infoset", s, "public", q, "view", v] => (*p, *s, *q, Some(v.to_string())),
                            _ => {
                                return Err(err(
                                    ln,
                                    "expected `player <1|2> infoset <label> public <label> [view <label>] {...}`",
                                ))
                            }
                        };
                        let player = match player {
                            "1" => Player::P1,
                            "2" => Player::P2,
                            other => return Err(err(ln, format!("unknown player `{other}`"))),
                        };
                        let mut actions = Vec::new();
                        for (a, c) in parse_braces(&rest[brace..], ln)? {
                            let c: NodeId = parse_num(&c, ln, "node id")?;
                            refs.push((ln, c));
                            actions.push((a, c));
                        }
                        NodeKind::Decision {
                            player,
                            infoset: infoset.to_string(),
                            public: public.to_string(),
                            view,
                            actions,
                        }
                    }
                    other => return Err(err(ln, format!("unknown node kind `{other}`"))),
                };
                if let Some(prev) = seen_ids.insert(id, ln) {
                    return Err(err(
                        ln,
                        format!("duplicate node id {id} (first on line {prev})"),
                    ));
                }
                table.nodes.push((id, kind));
            }
            other => return Err(err(ln, format!("unknown directive `{other}`"))),
        }
    }
    for (ln, c) in refs {
        if !seen_ids.contains_key(&c) {
            return Err(err(ln, format!("unknown node reference {c}")));
        }
    }
    match table.root {
        None => return Err(err(text.lines().count().max(1), "missing root")),
        Some(r) if !seen_ids.contains_key(&r) => {
            return Err(err(root_line, format!("unknown root node {r}")))
        }
        _ => {}
    }
    if let Some(h) = header.as_mut() {
        h.aux_infosets = aux;
    } else if !aux.is_empty() {
        return Err(err(1, "auxinfoset lines require a gadget header"));
    }
    Ok((table, header))
}

/// Parses and validates a game.
pub fn parse_game(text: &str) -> Result<Game, GameError> {
    let (table, _) = parse_table(text)?;
    Game::from_table(table)
}

/// Parses the gadget header of a gadget game file, if any.
pub fn parse_gadget_header(text: &str) -> Result<Option<GadgetHeader>, ParseError> {
    parse_table(text).map(|(_, h)| h)
}

/// Canonical text form: root first, then nodes in id order.
pub fn serialize_game(game: &Game) -> String {
    serialize_with_header(game, None)
}

pub(crate) fn serialize_with_header(game: &Game, header: Option<&GadgetHeader>) -> String {
    let mut out = String::new();
    writeln!(out, "game {}", game.name()).unwrap();
    if let Some(h) = header {
        writeln!(out, "gadget {} resolver {}", h.kind, h.resolver).unwrap();
        for a in &h.aux_infosets {
            writeln!(out, "auxinfoset {a}").unwrap();
        }
    }
    writeln!(out, "root {}", game.root()).unwrap();
    for (id, kind) in game.nodes().iter().enumerate() {
        match kind {
            NodeKind::Terminal { utility } => {
                writeln!(out, "node {id} terminal {utility}").unwrap()
            }
            NodeKind::Chance { outcomes } => {
                let body: Vec<String> = outcomes.iter().map(|(c, p)| format!("{c}:{p}")).collect();
                writeln!(out, "node {id} chance {{{}}}", body.join(" ")).unwrap();
            }
            NodeKind::Decision {
                player,
                infoset,
                public,
                view,
                actions,
            } => {
                let body: Vec<String> = actions.iter().map(|(a, c)| format!("{a}:{c}")).collect();
                let view = view
                    .as_ref()
                    .map(|v| format!(" view {v}"))
                    .unwrap_or_default();
                writeln!(
                    out,
                    "node {id} player {} infoset {infoset} public {public}{view} {{{}}}",
                    player.number(),
                    body.join(" ")
                )
                .unwrap();
            }
        }
    }
    out
}
