//! Bundled data registry: levels with their genus and Hauptmodul data,
//! weight-2 forms, subtraction schemes, modular-curve relations, verified
//! identities, and tally generating functions. The default fixture is
//! compiled in; an alternative file can be loaded for auditing.
//!
//! Fixture format: line-oriented sections `[LEVELS]`, `[FORMS]`, `[SCHEMES]`,
//! `[CURVES]`, `[IDENTITIES]`, `[TALLIES]`. Each entry is one logical line
//! (backslash continuations allowed) of `key value` pairs, with quoted
//! strings for expressions and notes. `#` starts a comment.

use crate::curve::EllipticCurve;
use crate::error::{Error, Result};
use crate::expr::Expr;
use rug::Integer;
use std::collections::BTreeMap;

const DEFAULT_FIXTURE: &str = include_str!("../fixtures/registry.txt");

#[derive(Clone, Debug)]
pub struct LevelEntry {
    pub level: u64,
    pub genus: u32,
    /// R_{N,1}(1) for the genus-0 rows (the Hauptmodul normalization).
    pub hauptmodul_scale: Option<u64>,
    /// Hauptmodul eta quotient for the genus-0 rows.
    pub hauptmodul: Option<Expr>,
    pub note: String,
}

#[derive(Clone, Debug)]
pub struct FormEntry {
    pub name: String,
    pub level: u64,
    /// Symbolic q-expansion (eta/psi/phi/theta expression), when printed.
    pub expr: Option<Expr>,
    /// Elliptic curve whose L-series gives the coefficients, when known.
    pub curve: Option<EllipticCurve>,
    pub note: String,
}

#[derive(Clone, Debug)]
pub enum SchemeKind {
    /// Genus 1: subtract C_{N,M} R_{N,1} with C from the named form.
    Genus1 { form: String },
    /// Level 50 three-case rule driven by d(M) from the named form.
    Fifty { form: String },
    /// Level 64 c_{k,r} rule driven by C_{32,.} from the named form.
    SixtyFour { form: String },
    /// Echelonized basis of named forms with the given pivot indices.
    Echelon {
        indices: Vec<u64>,
        sources: Vec<String>,
    },
    /// Integer subtraction vector found by bounded search and validated on
    /// extra rows; used where no coefficient table is printed.
    Calibrated { indices: Vec<u64> },
}

#[derive(Clone, Debug)]
pub struct SchemeEntry {
    pub level: u64,
    pub kind: SchemeKind,
    pub note: String,
}

impl SchemeEntry {
    /// Subtraction pivot indices r with G_{N,r} = 0 by construction.
    pub fn indices(&self) -> Vec<u64> {
        match &self.kind {
            SchemeKind::Genus1 { .. } => vec![1],
            SchemeKind::Fifty { .. } => vec![1, 2],
            SchemeKind::SixtyFour { .. } => vec![1, 2, 5],
            SchemeKind::Echelon { indices, .. } => indices.clone(),
            SchemeKind::Calibrated { indices } => indices.clone(),
        }
    }
}

#[derive(Clone, Debug)]
pub struct CurveEntry {
    pub level: u64,
    pub genus: u32,
    pub x: Expr,
    pub y: Expr,
    /// P(X, Y) that must vanish identically on the recipe series.
    pub poly: Expr,
    /// Verification order from the acceptance contract.
    pub order: usize,
    pub note: String,
}

#[derive(Clone, Debug)]
pub struct IdentityEntry {
    pub name: String,
    pub lhs: Expr,
    pub rhs: Expr,
    pub order: usize,
    pub note: String,
}

#[derive(Clone, Debug)]
pub struct TallyEntry {
    pub level: u64,
    /// Numerator polynomial coefficients, constant term first.
    pub numerator: Vec<Integer>,
    /// Denominator as a product of (1 - x^k) factors.
    pub den_factors: Vec<u64>,
    pub note: String,
}

#[derive(Clone, Debug, Default)]
pub struct Registry {
    pub levels: BTreeMap<u64, LevelEntry>,
    pub forms: BTreeMap<String, FormEntry>,
    pub schemes: BTreeMap<u64, SchemeEntry>,
    pub curves: BTreeMap<u64, CurveEntry>,
    pub identities: Vec<IdentityEntry>,
    pub tallies: BTreeMap<u64, TallyEntry>,
}

impl Registry {
    /// The compiled-in fixture.
    pub fn bundled() -> Result<Registry> {
        Self::parse(DEFAULT_FIXTURE)
    }

    pub fn load(path: &std::path::Path) -> Result<Registry> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Registry(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn identity(&self, name: &str) -> Result<&IdentityEntry> {
        self.identities
            .iter()
            .find(|i| i.name == name)
            .ok_or_else(|| Error::Registry(format!("unknown identity {name}")))
    }

    pub fn form(&self, name: &str) -> Result<&FormEntry> {
        self.forms
            .get(name)
            .ok_or_else(|| Error::Registry(format!("unknown form {name}")))
    }

    pub fn scheme(&self, level: u64) -> Result<&SchemeEntry> {
        self.schemes
            .get(&level)
            .ok_or_else(|| Error::Registry(format!("no subtraction scheme for level {level}")))
    }

    pub fn parse(text: &str) -> Result<Registry> {
        let mut reg = Registry::default();
        let mut section = String::new();
        let mut pending = String::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            if let Some(stripped) = line.strip_suffix('\\') {
                pending.push_str(stripped);
                pending.push(' ');
                continue;
            }
            let logical = if pending.is_empty() {
                line.to_string()
            } else {
                let mut s = std::mem::take(&mut pending);
                s.push_str(line);
                s
            };
            if logical.starts_with('[') && logical.ends_with(']') {
                section = logical[1..logical.len() - 1].to_string();
                continue;
            }
            if logical.starts_with("version") {
                continue;
            }
            let fields = split_fields(&logical)
                .map_err(|e| Error::Registry(format!("line {}: {e}", lineno + 1)))?;
            parse_entry(&mut reg, &section, &fields)
                .map_err(|e| Error::Registry(format!("line {}: {e}", lineno + 1)))?;
        }
        if !pending.is_empty() {
            return Err(Error::Registry("dangling line continuation".into()));
        }
        reg.validate()?;
        Ok(reg)
    }

    fn validate(&self) -> Result<()> {
        for c in self.curves.values() {
            for e in [&c.x, &c.y] {
                if e.uses_rademacher() && c.order > 200 {
                    return Err(Error::Registry(format!(
                        "curve {}: Rademacher recipes are capped at order 200",
                        c.level
                    )));
                }
            }
        }
        for s in self.schemes.values() {
            let named: Vec<&String> = match &s.kind {
                SchemeKind::Genus1 { form }
                | SchemeKind::Fifty { form }
                | SchemeKind::SixtyFour { form } => vec![form],
                SchemeKind::Echelon { sources, .. } => sources.iter().collect(),
                SchemeKind::Calibrated { .. } => vec![],
            };
            for f in named {
                if !self.forms.contains_key(f) {
                    return Err(Error::Registry(format!(
                        "scheme {} references unknown form {f}",
                        s.level
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Split a line into whitespace-separated fields, keeping quoted strings
/// (double quotes) as single fields without the quotes.
fn split_fields(line: &str) -> std::result::Result<Vec<String>, String> {
    let mut out = Vec::new();
    let mut cur = String::new();
    let mut in_quotes = false;
    for ch in line.chars() {
        match (ch, in_quotes) {
            ('"', false) => {
                if !cur.is_empty() {
                    return Err("quote inside bare field".into());
                }
                in_quotes = true;
            }
            ('"', true) => {
                out.push(std::mem::take(&mut cur));
                in_quotes = false;
            }
            (c, false) if c.is_whitespace() => {
                if !cur.is_empty() {
                    out.push(std::mem::take(&mut cur));
                }
            }
            (c, _) => cur.push(c),
        }
    }
    if in_quotes {
        return Err("unterminated quote".into());
    }
    if !cur.is_empty() {
        out.push(cur);
    }
    Ok(out)
}

/// Key-value view over a field list after the leading keyword and name.
struct Fields<'a> {
    map: BTreeMap<&'a str, &'a str>,
}

impl<'a> Fields<'a> {
    fn new(fields: &'a [String]) -> std::result::Result<Fields<'a>, String> {
        if fields.len() % 2 != 0 {
            return Err(format!(
                "expected key value pairs, got {} fields",
                fields.len()
            ));
        }
        let mut map = BTreeMap::new();
        for pair in fields.chunks(2) {
            if map.insert(pair[0].as_str(), pair[1].as_str()).is_some() {
                return Err(format!("duplicate key {}", pair[0]));
            }
        }
        Ok(Fields { map })
    }

    fn get(&self, key: &str) -> Option<&str> {
        self.map.get(key).copied()
    }

    fn require(&self, key: &str) -> std::result::Result<&str, String> {
        self.get(key).ok_or_else(|| format!("missing key {key}"))
    }

    fn u64(&self, key: &str) -> std::result::Result<u64, String> {
        self.require(key)?
            .parse()
            .map_err(|_| format!("{key} is not an integer"))
    }

    fn usize(&self, key: &str) -> std::result::Result<usize, String> {
        self.require(key)?
            .parse()
            .map_err(|_| format!("{key} is not an integer"))
    }

    fn expr(&self, key: &str) -> std::result::Result<Expr, String> {
        Expr::parse(self.require(key)?).map_err(|e| format!("{key}: {e}"))
    }

    fn opt_expr(&self, key: &str) -> std::result::Result<Option<Expr>, String> {
        match self.get(key) {
            None => Ok(None),
            Some(s) => Expr::parse(s).map(Some).map_err(|e| format!("{key}: {e}")),
        }
    }

    fn note(&self) -> String {
        self.get("note").unwrap_or("").to_string()
    }

    fn int_list(&self, key: &str) -> std::result::Result<Vec<i64>, String> {
        self.require(key)?
            .split_whitespace()
            .map(|t| t.parse().map_err(|_| format!("{key}: bad integer {t}")))
            .collect()
    }
}

fn parse_entry(
    reg: &mut Registry,
    section: &str,
    fields: &[String],
) -> std::result::Result<(), String> {
    if fields.is_empty() {
        return Ok(());
    }
    let keyword = fields[0].as_str();
    match (section, keyword) {
        ("LEVELS", "level") => {
            let f = Fields::new(fields)?;
            let level = f.u64("level")?;
            let genus = f.u64("genus")? as u32;
            let hauptmodul_scale = match f.get("scale") {
                None => None,
                Some(s) => Some(s.parse().map_err(|_| "bad scale".to_string())?),
            };
            let hauptmodul = f.opt_expr("hauptmodul")?;
            if reg
                .levels
                .insert(
                    level,
                    LevelEntry {
                        level,
                        genus,
                        hauptmodul_scale,
                        hauptmodul,
                        note: f.note(),
                    },
                )
                .is_some()
            {
                return Err(format!("duplicate level {level}"));
            }
            Ok(())
        }
        ("FORMS", "form") => {
            if fields.len() < 2 {
                return Err("form needs a name".into());
            }
            let name = fields[1].clone();
            let f = Fields::new(&fields[2..])?;
            let level = f.u64("level")?;
            let expr = f.opt_expr("expr")?;
            let curve = match f.get("curve") {
                None => None,
                Some(s) => {
                    let a: Vec<i64> = s
                        .split_whitespace()
                        .map(|t| t.parse().map_err(|_| format!("bad curve integer {t}")))
                        .collect::<std::result::Result<_, String>>()?;
                    if a.len() != 5 {
                        return Err("curve needs 5 integers a1 a2 a3 a4 a6".into());
                    }
                    Some(EllipticCurve::new([a[0], a[1], a[2], a[3], a[4]]))
                }
            };
            if expr.is_none() && curve.is_none() {
                return Err(format!("form {name} has neither expr nor curve"));
            }
            if reg
                .forms
                .insert(
                    name.clone(),
                    FormEntry {
                        name: name.clone(),
                        level,
                        expr,
                        curve,
                        note: f.note(),
                    },
                )
                .is_some()
            {
                return Err(format!("duplicate form {name}"));
            }
            Ok(())
        }
        ("SCHEMES", "scheme") => {
            let f = Fields::new(fields)?;
            let level = f.u64("scheme")?;
            let kind = match f.require("kind")? {
                "genus1" => SchemeKind::Genus1 {
                    form: f.require("form")?.to_string(),
                },
                "fifty" => SchemeKind::Fifty {
                    form: f.require("form")?.to_string(),
                },
                "sixtyfour" => SchemeKind::SixtyFour {
                    form: f.require("form")?.to_string(),
                },
                "echelon" => SchemeKind::Echelon {
                    indices: f
                        .int_list("indices")?
                        .into_iter()
                        .map(|v| v as u64)
                        .collect(),
                    sources: f
                        .require("sources")?
                        .split_whitespace()
                        .map(|s| s.to_string())
                        .collect(),
                },
                "calibrated" => SchemeKind::Calibrated {
                    indices: f
                        .int_list("indices")?
                        .into_iter()
                        .map(|v| v as u64)
                        .collect(),
                },
                other => return Err(format!("unknown scheme kind {other}")),
            };
            if let SchemeKind::Echelon { indices, sources } = &kind {
                if indices.len() != sources.len() {
                    return Err("echelon indices and sources differ in length".into());
                }
            }
            if reg
                .schemes
                .insert(
                    level,
                    SchemeEntry {
                        level,
                        kind,
                        note: f.note(),
                    },
                )
                .is_some()
            {
                return Err(format!("duplicate scheme {level}"));
            }
            Ok(())
        }
        ("CURVES", "curve") => {
            let f = Fields::new(fields)?;
            let level = f.u64("curve")?;
            let entry = CurveEntry {
                level,
                genus: f.u64("genus")? as u32,
                x: f.expr("x")?,
                y: f.expr("y")?,
                poly: f.expr("poly")?,
                order: f.usize("order")?,
                note: f.note(),
            };
            if reg.curves.insert(level, entry).is_some() {
                return Err(format!("duplicate curve {level}"));
            }
            Ok(())
        }
        ("IDENTITIES", "identity") => {
            if fields.len() < 2 {
                return Err("identity needs a name".into());
            }
            let name = fields[1].clone();
            let f = Fields::new(&fields[2..])?;
            let entry = IdentityEntry {
                name: name.clone(),
                lhs: f.expr("lhs")?,
                rhs: f.expr("rhs")?,
                order: f.usize("order")?,
                note: f.note(),
            };
            if reg.identities.iter().any(|i| i.name == name) {
                return Err(format!("duplicate identity {name}"));
            }
            reg.identities.push(entry);
            Ok(())
        }
        ("TALLIES", "tally") => {
            let f = Fields::new(fields)?;
            let level = f.u64("tally")?;
            let numerator = f
                .int_list("num")?
                .into_iter()
                .map(Integer::from)
                .collect();
            let den_factors = f
                .int_list("den")?
                .into_iter()
                .map(|v| v as u64)
                .collect();
            let entry = TallyEntry {
                level,
                numerator,
                den_factors,
                note: f.note(),
            };
            if reg.tallies.insert(level, entry).is_some() {
                return Err(format!("duplicate tally {level}"));
            }
            Ok(())
        }
        _ => Err(format!("unexpected entry {keyword} in section [{section}]")),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bundled_fixture_parses() {
        let reg = Registry::bundled().unwrap();
        assert!(reg.levels.len() >= 40);
        assert!(reg.forms.contains_key("f11"));
        assert!(reg.schemes.contains_key(&21));
        assert!(reg.curves.contains_key(&64));
        assert!(reg.tallies.contains_key(&36));
        assert!(reg.identity("e21a").is_ok());
    }

    #[test]
    fn bundled_genus_values_match_assertions() {
        let reg = Registry::bundled().unwrap();
        for (n, g) in [
            (6u64, 0u32),
            (11, 1),
            (50, 2),
            (64, 3),
            (81, 4),
            (72, 5),
            (121, 6),
            (100, 7),
            (169, 8),
            (144, 13),
        ] {
            assert_eq!(reg.levels[&n].genus, g, "level {n}");
        }
    }

    #[test]
    fn quoting_and_continuations() {
        let text = "[LEVELS]\nlevel 6 genus 0 scale 72 \\\n  hauptmodul \"eta(2)*eta(6)^5/(eta(1)^5*eta(3))\" note \"with spaces\"\n";
        let reg = Registry::parse(text).unwrap();
        assert_eq!(reg.levels[&6].hauptmodul_scale, Some(72));
        assert_eq!(reg.levels[&6].note, "with spaces");
    }

    #[test]
    fn errors_carry_line_numbers() {
        let err = Registry::parse("[LEVELS]\nlevel six genus 0\n").unwrap_err();
        let msg = format!("{err}");
        assert!(msg.contains("line 2"), "{msg}");
    }

    #[test]
    fn unknown_sections_are_rejected() {
        assert!(Registry::parse("[NOPE]\nfoo bar\n").is_err());
    }
}
