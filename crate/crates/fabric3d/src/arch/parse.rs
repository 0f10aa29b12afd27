//! Parser for the architecture document format.
//!
//! The format is a line-oriented UTF-8 key-value tree. Each statement sits
//! on its own line: `key value...` for leaves, `key {` to open a block, `}`
//! alone to close it. `#` starts a comment. Repeated keys form lists
//! (`segment` blocks, per-layer `columns` lines).

use super::*;
use crate::error::{Error, Result};

/// One parsed statement tree node.
#[derive(Debug)]
struct Node {
    key: String,
    values: Vec<String>,
    children: Vec<Node>,
    line: usize,
}

impl Node {
    fn child(&self, key: &str) -> Option<&Node> {
        self.children.iter().find(|c| c.key == key)
    }

    fn children_named<'a>(&'a self, key: &'a str) -> impl Iterator<Item = &'a Node> {
        self.children.iter().filter(move |c| c.key == key)
    }
}

fn parse_tree(text: &str) -> Result<Node> {
    let mut root = Node { key: String::new(), values: Vec::new(), children: Vec::new(), line: 0 };
    let mut stack: Vec<Node> = Vec::new();

    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = match raw.find('#') {
            Some(pos) => &raw[..pos],
            None => raw,
        };
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        if trimmed == "}" {
            let done = stack.pop().ok_or_else(|| Error::ArchSyntax {
                line: line_no,
                col: raw.find('}').unwrap_or(0) + 1,
                msg: "unmatched `}`".into(),
            })?;
            match stack.last_mut() {
                Some(parent) => parent.children.push(done),
                None => root.children.push(done),
            }
            continue;
        }
        let mut tokens: Vec<&str> = trimmed.split_whitespace().collect();
        let opens_block = tokens.last() == Some(&"{");
        if opens_block {
            tokens.pop();
        }
        let key = match tokens.first() {
            Some(k) if k.chars().all(|c| c.is_ascii_alphanumeric() || c == '_') => k.to_string(),
            _ => {
                let col = raw.len() - raw.trim_start().len() + 1;
                return Err(Error::ArchSyntax {
                    line: line_no,
                    col,
                    msg: format!("expected a key, got {trimmed:?}"),
                });
            }
        };
        let values: Vec<String> = tokens[1..].iter().map(|t| t.to_string()).collect();
        if opens_block {
            if !values.is_empty() {
                return Err(Error::ArchSyntax {
                    line: line_no,
                    col: 1,
                    msg: format!("block key `{key}` cannot also carry values"),
                });
            }
            stack.push(Node { key, values, children: Vec::new(), line: line_no });
        } else {
            if values.is_empty() {
                return Err(Error::ArchSyntax {
                    line: line_no,
                    col: 1,
                    msg: format!("key `{key}` has no value"),
                });
            }
            let node = Node { key, values, children: Vec::new(), line: line_no };
            match stack.last_mut() {
                Some(parent) => parent.children.push(node),
                None => root.children.push(node),
            }
        }
    }
    if let Some(open) = stack.last() {
        return Err(Error::ArchSyntax {
            line: open.line,
            col: 1,
            msg: format!("block `{}` is never closed", open.key),
        });
    }
    Ok(root)
}

fn single_u32(node: &Node) -> Result<u32> {
    single_value(node)?.parse().map_err(|_| Error::ArchValue {
        line: node.line,
        msg: format!("`{}` expects a non-negative integer, got {:?}", node.key, node.values[0]),
    })
}

fn single_f64(node: &Node) -> Result<f64> {
    single_value(node)?.parse().map_err(|_| Error::ArchValue {
        line: node.line,
        msg: format!("`{}` expects a number, got {:?}", node.key, node.values[0]),
    })
}

fn single_value(node: &Node) -> Result<&str> {
    if node.values.len() != 1 {
        return Err(Error::ArchValue {
            line: node.line,
            msg: format!("`{}` expects exactly one value", node.key),
        });
    }
    Ok(&node.values[0])
}

fn reject_unknown(node: &Node, allowed: &[&str]) -> Result<()> {
    for child in &node.children {
        if !allowed.contains(&child.key.as_str()) {
            return Err(Error::ArchUnknownKey { key: child.key.clone(), line: child.line });
        }
    }
    Ok(())
}

fn four_ints(node: &Node) -> Result<[i32; 4]> {
    if node.values.len() != 4 {
        return Err(Error::ArchValue {
            line: node.line,
            msg: format!("`{}` expects 4 integers", node.key),
        });
    }
    let mut out = [0i32; 4];
    for (i, v) in node.values.iter().enumerate() {
        out[i] = v.parse().map_err(|_| Error::ArchValue {
            line: node.line,
            msg: format!("`{}` entry {:?} is not an integer", node.key, v),
        })?;
    }
    Ok(out)
}

/// Parses an architecture document into a fully populated [`ArchSpec`],
/// filling documented defaults for omitted keys. Parsing is total and
/// deterministic over valid documents; it does not run [`validate`].
pub fn parse_arch(text: &str) -> Result<ArchSpec> {
    let root = parse_tree(text)?;
    reject_unknown(&root, &["grid", "layers", "routing", "logic", "vertical", "timing"])?;

    let mut spec = ArchSpec::default();

    if let Some(grid) = root.child("grid") {
        reject_unknown(grid, &["width", "height"])?;
        if let Some(n) = grid.child("width") {
            spec.grid_width = single_u32(n)?;
        }
        if let Some(n) = grid.child("height") {
            spec.grid_height = single_u32(n)?;
        }
    }

    let mut layer_class = HeteroClass::Homogeneous;
    let mut column_lines: Vec<(usize, Vec<BlockKind>)> = Vec::new();
    if let Some(layers) = root.child("layers") {
        reject_unknown(layers, &["count", "class", "columns"])?;
        if let Some(n) = layers.child("count") {
            spec.layer_count = single_u32(n)?;
        }
        if let Some(n) = layers.child("class") {
            let tok = single_value(n)?;
            layer_class = HeteroClass::from_token(tok).ok_or_else(|| Error::ArchValue {
                line: n.line,
                msg: format!("unknown layer class {tok:?}"),
            })?;
        }
        for n in layers.children_named("columns") {
            let mut cols = Vec::new();
            for v in &n.values {
                cols.push(BlockKind::from_token(v).ok_or_else(|| Error::ArchValue {
                    line: n.line,
                    msg: format!("unknown block kind {v:?}"),
                })?);
            }
            column_lines.push((n.line, cols));
        }
    }
    let lc = spec.layer_count as usize;
    spec.layers = match column_lines.len() {
        0 => vec![LayerSpec { class: layer_class, columns: Vec::new() }; lc],
        1 => vec![LayerSpec { class: layer_class, columns: column_lines[0].1.clone() }; lc],
        n if n == lc => column_lines
            .into_iter()
            .map(|(_, columns)| LayerSpec { class: layer_class, columns })
            .collect(),
        n => {
            return Err(Error::ArchValue {
                line: column_lines[0].0,
                msg: format!("{n} `columns` lines for {lc} layers (want 0, 1, or {lc})"),
            })
        }
    };

    if let Some(routing) = root.child("routing") {
        reject_unknown(routing, &["channel_width", "segment", "planar_sb", "fc_in", "fc_out"])?;
        if let Some(n) = routing.child("channel_width") {
            spec.channel_width = single_u32(n)?;
        }
        let mut segments = Vec::new();
        for seg in routing.children_named("segment") {
            reject_unknown(seg, &["length", "tracks"])?;
            let length = seg.child("length").map(single_u32).transpose()?.unwrap_or(1);
            let tracks = match seg.child("tracks") {
                Some(n) => single_u32(n)?,
                None => {
                    return Err(Error::ArchValue {
                        line: seg.line,
                        msg: "segment block needs a `tracks` line".into(),
                    })
                }
            };
            segments.push(Segment { length, tracks });
        }
        if !segments.is_empty() {
            spec.segments = segments;
        } else {
            spec.segments = vec![Segment { length: 1, tracks: spec.channel_width }];
        }
        if let Some(n) = routing.child("planar_sb") {
            let tok = single_value(n)?;
            spec.planar_sb = PlanarSb::from_token(tok).ok_or_else(|| Error::ArchValue {
                line: n.line,
                msg: format!("unknown planar SB pattern {tok:?}"),
            })?;
        }
        if let Some(n) = routing.child("fc_in") {
            spec.fc_in = single_f64(n)?;
        }
        if let Some(n) = routing.child("fc_out") {
            spec.fc_out = single_f64(n)?;
        }
    } else {
        spec.segments = vec![Segment { length: 1, tracks: spec.channel_width }];
    }

    if let Some(logic) = root.child("logic") {
        reject_unknown(logic, &["lut_size", "cluster_size", "io_capacity"])?;
        if let Some(n) = logic.child("lut_size") {
            spec.lut_size = single_u32(n)?;
        }
        if let Some(n) = logic.child("cluster_size") {
            spec.cluster_size = single_u32(n)?;
        }
        if let Some(n) = logic.child("io_capacity") {
            spec.io_capacity = single_u32(n)?;
        }
    }

    if let Some(vertical) = root.child("vertical") {
        reject_unknown(
            vertical,
            &["type", "sb_percentage", "sb_placement", "custom_sites_file", "pattern", "custom_pins", "custom_tracks"],
        )?;
        if let Some(n) = vertical.child("type") {
            let tok = single_value(n)?;
            spec.vertical.connection_type =
                ConnectionType::from_token(tok).ok_or_else(|| Error::ArchValue {
                    line: n.line,
                    msg: format!("unknown vertical connection type {tok:?}"),
                })?;
        }
        if let Some(n) = vertical.child("sb_percentage") {
            let pct = single_u32(n)?;
            if pct > 100 {
                return Err(Error::ArchValue {
                    line: n.line,
                    msg: format!("sb_percentage {pct} not in 0..=100"),
                });
            }
            spec.vertical.sb_percentage = pct;
        }
        if let Some(n) = vertical.child("sb_placement") {
            let tok = single_value(n)?;
            spec.vertical.sb_placement =
                SbPlacement::from_token(tok).ok_or_else(|| Error::ArchValue {
                    line: n.line,
                    msg: format!("unknown sb placement {tok:?}"),
                })?;
        }
        if let Some(n) = vertical.child("custom_sites_file") {
            spec.vertical.custom_sites_file = Some(single_value(n)?.to_string());
        }
        if let Some(pat) = vertical.child("pattern") {
            reject_unknown(pat, &["input", "output"])?;
            if let Some(n) = pat.child("input") {
                spec.vertical.sb_pattern.input = four_ints(n)?;
            }
            if let Some(n) = pat.child("output") {
                spec.vertical.sb_pattern.output = four_ints(n)?;
            }
        }
        if let Some(n) = vertical.child("custom_pins") {
            let tok = single_value(n)?;
            spec.vertical.custom_pins = CustomPins::from_token(tok).ok_or_else(|| Error::ArchValue {
                line: n.line,
                msg: format!("unknown custom pin class {tok:?}"),
            })?;
        }
        if let Some(n) = vertical.child("custom_tracks") {
            let mut tracks = Vec::new();
            for v in &n.values {
                tracks.push(v.parse().map_err(|_| Error::ArchValue {
                    line: n.line,
                    msg: format!("bad track index {v:?}"),
                })?);
            }
            spec.vertical.custom_tracks = Some(tracks);
        }
    }

    if let Some(timing) = root.child("timing") {
        reject_unknown(
            timing,
            &["vertical_delay_ratio", "vertical_delay_seconds", "base_switch_delay", "wire_delay_per_tile", "lut_delay"],
        )?;
        if let Some(n) = timing.child("base_switch_delay") {
            let v = single_f64(n)?;
            if !(v > 0.0) {
                return Err(Error::ArchValue { line: n.line, msg: "base_switch_delay must be > 0".into() });
            }
            spec.base_switch_delay = v;
        }
        match (timing.child("vertical_delay_ratio"), timing.child("vertical_delay_seconds")) {
            (Some(n), None) => spec.vertical_delay_ratio = single_f64(n)?,
            (None, Some(n)) => {
                // Absolute delay alternative: ratio derived against the base switch.
                spec.vertical_delay_ratio = single_f64(n)? / spec.base_switch_delay;
            }
            (Some(n), Some(_)) => {
                return Err(Error::ArchValue {
                    line: n.line,
                    msg: "give either vertical_delay_ratio or vertical_delay_seconds, not both".into(),
                })
            }
            (None, None) => {}
        }
        if let Some(n) = timing.child("wire_delay_per_tile") {
            spec.wire_delay_per_tile = single_f64(n)?;
        }
        if let Some(n) = timing.child("lut_delay") {
            spec.lut_delay = single_f64(n)?;
        }
    }

    Ok(spec)
}
