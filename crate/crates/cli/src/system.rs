//! System files: a differential field, unknowns and linear equations.
//! The grammar is described in docs/FORMAT.md.

use std::sync::Arc;

use delos_core::expr::Pos;
use delos_core::field::{DiffField, FieldElement};
use delos_core::involution::LinearSystem;
use delos_core::ore::{parse_row_at, render_row, OperatorMatrix};
use delos_core::{Error, Result};

#[derive(Clone, Debug)]
pub struct SystemFile {
    pub name: Option<String>,
    pub system: LinearSystem,
    /// `expect:` metadata in file order, read by `selftest`.
    pub expect: Vec<(String, String)>,
}

fn syntax(line: usize, col: usize, msg: impl Into<String>) -> Error {
    Error::Syntax { line, col, msg: msg.into() }
}

fn is_ident(s: &str) -> bool {
    let mut c = s.chars();
    matches!(c.next(), Some(ch) if ch.is_ascii_alphabetic() || ch == '_') && c.all(|ch| ch.is_ascii_alphanumeric() || ch == '_')
}

/// Whitespace-separated identifiers, with 1-based columns.
fn idents(text: &str, line: usize, col0: usize) -> Result<Vec<String>> {
    let mut out = Vec::new();
    let mut off = 0;
    for w in text.split_whitespace() {
        let at = text[off..].find(w).unwrap() + off;
        off = at + w.len();
        if !is_ident(w) {
            return Err(syntax(line, col0 + at, format!("`{w}` is not an identifier")));
        }
        out.push(w.to_string());
    }
    Ok(out)
}

/// Strip a trailing `#` comment.
fn strip(line: &str) -> &str {
    match line.find('#') {
        Some(k) => &line[..k],
        None => line,
    }
}

/// `key: rest` where `key` is an identifier; returns the column of `rest`.
fn split_key(line: &str) -> Option<(&str, &str, usize)> {
    let k = line.find(':')?;
    let key = line[..k].trim();
    if !is_ident(key) {
        return None;
    }
    Some((key, &line[k + 1..], k + 2))
}

struct TableEntry {
    gen: String,
    dir: usize,
    text: String,
    pos: Pos,
}

/// `d<i>(<gen>) = <expr>` items separated by `;`.
fn parse_dtable(rest: &str, line: usize, col0: usize, out: &mut Vec<TableEntry>) -> Result<()> {
    let mut off = 0;
    for item in rest.split(';') {
        let col = col0 + off + (item.len() - item.trim_start().len());
        off += item.len() + 1;
        let item = item.trim();
        if item.is_empty() {
            continue;
        }
        let bad = || syntax(line, col, format!("expected `d<i>(<generator>) = <expression>`, found `{item}`"));
        let (lhs, rhs) = item.split_once('=').ok_or_else(bad)?;
        let lhs = lhs.trim();
        let open = lhs.find('(').ok_or_else(bad)?;
        if !lhs.starts_with('d') || !lhs.ends_with(')') {
            return Err(bad());
        }
        let dir: usize = lhs[1..open].trim().parse().map_err(|_| bad())?;
        let gen = lhs[open + 1..lhs.len() - 1].trim().to_string();
        if dir == 0 || !is_ident(&gen) {
            return Err(bad());
        }
        let eq = item.find('=').unwrap();
        out.push(TableEntry { gen, dir: dir - 1, text: rhs.to_string(), pos: Pos { line, col: col + eq + 1 } });
    }
    Ok(())
}

pub fn parse_system(text: &str) -> Result<SystemFile> {
    let mut name = None;
    let mut coords: Option<Vec<String>> = None;
    let mut gens: Vec<String> = Vec::new();
    let mut constants: Vec<String> = Vec::new();
    let mut table: Vec<TableEntry> = Vec::new();
    let mut unknowns: Option<(Vec<String>, usize)> = None;
    let mut order: Option<(usize, usize)> = None;
    let mut jets: Vec<(String, usize, usize)> = Vec::new();
    let mut expect = Vec::new();
    let mut equations: Option<Vec<(Option<String>, String, Pos)>> = None;

    for (k, raw) in text.lines().enumerate() {
        let line = k + 1;
        let body = strip(raw);
        if body.trim().is_empty() {
            continue;
        }
        if let Some(eqs) = equations.as_mut() {
            let (label, expr, col) = match split_key(body) {
                Some((key, rest, c)) => (Some(key.to_string()), rest, c),
                None => (None, body, 1),
            };
            eqs.push((label, expr.to_string(), Pos { line, col }));
            continue;
        }
        let (key, rest, col) = split_key(body).ok_or_else(|| syntax(line, 1, "expected `key: value`"))?;
        match key {
            "name" => name = Some(rest.trim().to_string()),
            "coords" => coords = Some(idents(rest, line, col)?),
            "gens" => gens.extend(idents(rest, line, col)?),
            "constants" => constants.extend(idents(rest, line, col)?),
            "dtable" => parse_dtable(rest, line, col, &mut table)?,
            "unknowns" => unknowns = Some((idents(rest, line, col)?, line)),
            "order" => {
                let q = rest.trim().parse().map_err(|_| syntax(line, col, "order must be a nonnegative integer"))?;
                order = Some((q, line));
            }
            "jets" => {
                let off = col;
                jets.extend(idents(rest, line, off)?.into_iter().map(|g| (g, line, off)));
            }
            "expect" => {
                let (k, v) = rest.split_once('=').ok_or_else(|| syntax(line, col, "expected `expect: key = value`"))?;
                expect.push((k.trim().to_string(), v.trim().to_string()));
            }
            "equations" => {
                if !rest.trim().is_empty() {
                    return Err(syntax(line, col, "equations start on the next line"));
                }
                equations = Some(Vec::new());
            }
            other => return Err(syntax(line, 1, format!("unknown key `{other}`"))),
        }
    }

    let coords = coords.ok_or_else(|| syntax(1, 1, "missing `coords:`"))?;
    let (unknowns, _) = unknowns.ok_or_else(|| syntax(1, 1, "missing `unknowns:`"))?;
    let equations = equations.ok_or_else(|| syntax(1, 1, "missing `equations:` block"))?;
    if equations.is_empty() {
        return Err(syntax(text.lines().count().max(1), 1, "at least one equation is required"));
    }

    let n = coords.len();
    let all_gens: Vec<String> = gens.iter().chain(constants.iter()).cloned().collect();
    let bare = DiffField::new_unchecked(coords.clone(), all_gens.clone(), Vec::new())?;
    let mut entries: Vec<(String, usize, FieldElement)> = Vec::new();
    for c in &constants {
        entries.extend((0..n).map(|i| (c.clone(), i, FieldElement::zero())));
    }
    for (k, e) in table.iter().enumerate() {
        if table[..k].iter().any(|o| o.gen == e.gen && o.dir == e.dir) {
            return Err(syntax(e.pos.line, e.pos.col, format!("d{}({}) is defined twice", e.dir + 1, e.gen)));
        }
        if !gens.contains(&e.gen) {
            return Err(Error::UnknownIdentifier { name: e.gen.clone(), line: e.pos.line, col: e.pos.col });
        }
        if e.dir >= n {
            return Err(syntax(e.pos.line, e.pos.col, format!("direction {} out of range", e.dir + 1)));
        }
        entries.push((e.gen.clone(), e.dir, bare.parse_at(&e.text, e.pos)?));
    }
    let field = Arc::new(DiffField::new(coords, all_gens, entries)?);

    let mut rows = Vec::new();
    let mut labels = Vec::new();
    for (k, (label, expr, pos)) in equations.iter().enumerate() {
        rows.push(parse_row_at(&field, &unknowns, expr, *pos)?);
        labels.push(label.clone().unwrap_or_else(|| format!("r{}", k + 1)));
    }
    let m = OperatorMatrix::from_rows(field.clone(), unknowns.len(), rows).with_labels(labels, unknowns);
    let mut system = LinearSystem::new(m);
    if let Some((q, line)) = order {
        system = system.with_order(q).map_err(|e| syntax(line, 1, e.to_string()))?;
    }
    let mut jet_ids = Vec::new();
    for (g, line, col) in jets {
        match field.var_index(&g) {
            Some(k) if k >= n => jet_ids.push(k),
            _ => return Err(Error::UnknownIdentifier { name: g, line, col }),
        }
    }
    system = system.with_jet_generators(jet_ids);
    Ok(SystemFile { name, system, expect })
}

/// Print in the system-file grammar; `parse_system` reads it back to an
/// equal system.
pub fn print_system(sf: &SystemFile) -> String {
    let sys = &sf.system;
    let f = &sys.field;
    let n = f.n();
    let mut out = String::new();
    if let Some(name) = &sf.name {
        out.push_str(&format!("name: {name}\n"));
    }
    out.push_str(&format!("coords: {}\n", f.coord_names().join(" ")));
    let gens = f.gen_names();
    let is_const = |g: usize| (0..n).all(|i| f.table_entry(g, i).is_some_and(|v| v.is_zero()));
    // Only a trailing run of constants moves to `constants:`, which keeps
    // generator order stable across a round trip.
    let split = (0..gens.len()).rev().take_while(|&g| is_const(g)).last().unwrap_or(gens.len());
    let (others, consts): (Vec<usize>, Vec<usize>) = ((0..split).collect(), (split..gens.len()).collect());
    if !others.is_empty() {
        out.push_str(&format!("gens: {}\n", others.iter().map(|&g| gens[g].as_str()).collect::<Vec<_>>().join(" ")));
    }
    if !consts.is_empty() {
        out.push_str(&format!("constants: {}\n", consts.iter().map(|&g| gens[g].as_str()).collect::<Vec<_>>().join(" ")));
    }
    for &g in &others {
        let items: Vec<String> = (0..n)
            .filter_map(|i| f.table_entry(g, i).map(|v| format!("d{}({}) = {}", i + 1, gens[g], f.render(v))))
            .collect();
        if !items.is_empty() {
            out.push_str(&format!("dtable: {}\n", items.join("; ")));
        }
    }
    out.push_str(&format!("unknowns: {}\n", sys.unknowns.join(" ")));
    if sys.q as i32 > sys.equations.order() {
        out.push_str(&format!("order: {}\n", sys.q));
    }
    if !sys.jet_generators.is_empty() {
        let names: Vec<&str> = sys.jet_generators.iter().map(|&k| f.var_names()[k].as_str()).collect();
        out.push_str(&format!("jets: {}\n", names.join(" ")));
    }
    for (k, v) in &sf.expect {
        out.push_str(&format!("expect: {k} = {v}\n"));
    }
    out.push_str("equations:\n");
    for i in 0..sys.equations.rows() {
        let row = render_row(f, sys.equations.row(i), &sys.unknowns);
        out.push_str(&format!("  {}: {row}\n", sys.equations.row_labels[i]));
    }
    out
}

/// A system file for a generated system.
pub fn from_system(name: &str, system: LinearSystem) -> SystemFile {
    SystemFile { name: Some(name.to_string()), system, expect: Vec::new() }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn positions_are_reported() {
        let e = parse_system("coords: x1 x2\nunknowns: u\nequations:\n  u[1] + v[2]\n").unwrap_err();
        assert!(matches!(e, Error::UnknownIdentifier { ref name, line: 4, .. } if name == "v"), "{e:?}");
        let e = parse_system("coords: x1\nunknowns: u\nequations:\n").unwrap_err();
        assert!(matches!(e, Error::Syntax { .. }));
    }

    #[test]
    fn labels_and_right_hand_sides() {
        let sf = parse_system("coords: x1 x2 x3\nunknowns: xi1 xi2\nequations:\n  A: xi1[3] - x3*xi2[3] = 0\n  xi1 = xi2[1]\n").unwrap();
        let m = &sf.system.equations;
        assert_eq!(m.row_labels, vec!["A", "r2"]);
        assert_eq!(m.render_row(0), "xi1[3] - x3*xi2[3]");
        assert_eq!(m.render_row(1), "xi1 - xi2[1]");
    }
}
