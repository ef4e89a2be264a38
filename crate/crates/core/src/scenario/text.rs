//! Plain-text scenario files.
//!
//! A file is read line by line. Everything from `#` to the end of a line is
//! a comment; surrounding whitespace is ignored and blank lines are skipped.
//! The remaining lines are either a block header `[override]` or a
//! `key = value` pair, split at the first `=`. Keys before the first header
//! describe the scenario; each header opens a new tariff override.
//!
//! Scenario keys:
//!
//! | key | required | value |
//! |---|---|---|
//! | `name` | yes | free text |
//! | `surprise_year` | yes | integer year |
//! | `families` | no | comma list of `nh-ces`, `h-ces`, `cd` |
//! | `recalibrate` | no | `true` or `false` (default `true`) |
//! | `report_years` | no | positive integer (default 50) |
//!
//! Override keys, all required:
//!
//! | key | value |
//! |---|---|
//! | `importers` | `*` or comma list of country names |
//! | `exporters` | `*` or comma list of country names |
//! | `sectors` | `*` or comma list of sector names |
//! | `years` | `Y`, `Y..Z` (inclusive) or `Y..` (open ended) |
//! | `change_pp` | additive tariff change in percentage points |
//!
//! Unknown keys, repeated keys within a block and malformed values are
//! errors that carry the line number.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use crate::config::PreferenceFamily;
use crate::error::{Error, Result};

use super::{Scenario, Selection, TariffOverride, YearRange};

const SCENARIO_KEYS: [&str; 5] = ["name", "surprise_year", "families", "recalibrate", "report_years"];
const OVERRIDE_KEYS: [&str; 5] = ["importers", "exporters", "sectors", "years", "change_pp"];

struct Block {
    header_line: usize,
    entries: BTreeMap<String, (usize, String)>,
}

impl Block {
    fn new(header_line: usize) -> Self {
        Self { header_line, entries: BTreeMap::new() }
    }

    fn take(&mut self, key: &str) -> Option<(usize, String)> {
        self.entries.remove(key)
    }

    fn require(&mut self, key: &str, what: &str) -> Result<(usize, String)> {
        self.take(key).ok_or_else(|| {
            Error::validation(format!("line {}: {what} is missing required key '{key}'", self.header_line))
        })
    }
}

fn at(line: usize, msg: impl std::fmt::Display) -> Error {
    Error::validation(format!("line {line}: {msg}"))
}

fn parse_selection(line: usize, v: &str) -> Result<Selection> {
    if v == "*" {
        return Ok(Selection::All);
    }
    let names: Vec<String> = v.split(',').map(|s| s.trim().to_string()).collect();
    if names.iter().any(|s| s.is_empty() || s == "*") {
        return Err(at(line, format!("malformed name list '{v}'")));
    }
    Ok(Selection::Names(names))
}

fn parse_year(line: usize, v: &str) -> Result<i32> {
    v.trim().parse().map_err(|_| at(line, format!("'{v}' is not an integer year")))
}

fn parse_years(line: usize, v: &str) -> Result<YearRange> {
    match v.split_once("..") {
        None => {
            let y = parse_year(line, v)?;
            Ok(YearRange { from: y, to: Some(y) })
        }
        Some((a, b)) => {
            let from = parse_year(line, a)?;
            let to = if b.trim().is_empty() { None } else { Some(parse_year(line, b)?) };
            if to.is_some_and(|t| t < from) {
                return Err(at(line, format!("year range '{v}' ends before it starts")));
            }
            Ok(YearRange { from, to })
        }
    }
}

/// Parse scenario text.
pub fn parse(text: &str) -> Result<Scenario> {
    let mut head = Block::new(1);
    let mut blocks: Vec<Block> = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        if content.starts_with('[') {
            if content != "[override]" {
                return Err(at(line, format!("unknown block header '{content}'")));
            }
            blocks.push(Block::new(line));
            continue;
        }
        let (key, value) = content.split_once('=').ok_or_else(|| at(line, format!("expected 'key = value', got '{content}'")))?;
        let (key, value) = (key.trim(), value.trim());
        if value.is_empty() {
            return Err(at(line, format!("key '{key}' has an empty value")));
        }
        let (block, allowed) = match blocks.last_mut() {
            Some(b) => (b, &OVERRIDE_KEYS),
            None => (&mut head, &SCENARIO_KEYS),
        };
        if !allowed.contains(&key) {
            return Err(at(line, format!("unknown key '{key}' (allowed here: {})", allowed.join(", "))));
        }
        if let Some((first, _)) = block.entries.get(key) {
            return Err(at(line, format!("key '{key}' repeats line {first}")));
        }
        block.entries.insert(key.to_string(), (line, value.to_string()));
    }

    let (_, name) = head.require("name", "the scenario")?;
    let (ly, y) = head.require("surprise_year", "the scenario")?;
    let surprise_year = parse_year(ly, &y)?;
    let families = match head.take("families") {
        None => Vec::new(),
        Some((l, v)) => {
            let mut out = Vec::new();
            for part in v.split(',') {
                let f = PreferenceFamily::from_short(part.trim()).map_err(|e| at(l, e))?;
                if out.contains(&f) {
                    return Err(at(l, format!("family '{}' is listed twice", part.trim())));
                }
                out.push(f);
            }
            out
        }
    };
    let recalibrate = match head.take("recalibrate") {
        None => true,
        Some((_, v)) if v == "true" => true,
        Some((_, v)) if v == "false" => false,
        Some((l, v)) => return Err(at(l, format!("recalibrate must be true or false, got '{v}'"))),
    };
    let report_years = match head.take("report_years") {
        None => super::DEFAULT_REPORT_YEARS,
        Some((l, v)) => match v.parse::<usize>() {
            Ok(k) if k > 0 => k,
            _ => return Err(at(l, format!("report_years must be a positive integer, got '{v}'"))),
        },
    };

    let mut overrides = Vec::with_capacity(blocks.len());
    for mut b in blocks {
        let what = format!("the override opened on line {}", b.header_line);
        let (l, v) = b.require("importers", &what)?;
        let importers = parse_selection(l, &v)?;
        let (l, v) = b.require("exporters", &what)?;
        let exporters = parse_selection(l, &v)?;
        let (l, v) = b.require("sectors", &what)?;
        let sectors = parse_selection(l, &v)?;
        let (l, v) = b.require("years", &what)?;
        let years = parse_years(l, &v)?;
        let (l, v) = b.require("change_pp", &what)?;
        let change_pp: f64 = v.parse().map_err(|_| at(l, format!("change_pp must be a number, got '{v}'")))?;
        if !change_pp.is_finite() {
            return Err(at(l, "change_pp must be finite"));
        }
        overrides.push(TariffOverride { importers, exporters, sectors, years, change_pp });
    }
    Ok(Scenario { name, surprise_year, families, recalibrate, report_years, overrides })
}

fn selection_text(s: &Selection) -> String {
    match s {
        Selection::All => "*".into(),
        Selection::Names(v) => v.join(", "),
    }
}

/// Render a scenario in the file format; `parse(&render(s)) == s`.
pub fn render(s: &Scenario) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "name = {}", s.name);
    let _ = writeln!(out, "surprise_year = {}", s.surprise_year);
    if !s.families.is_empty() {
        let f: Vec<&str> = s.families.iter().map(|f| f.short_name()).collect();
        let _ = writeln!(out, "families = {}", f.join(", "));
    }
    let _ = writeln!(out, "recalibrate = {}", s.recalibrate);
    let _ = writeln!(out, "report_years = {}", s.report_years);
    for o in &s.overrides {
        let _ = writeln!(out, "\n[override]");
        let _ = writeln!(out, "importers = {}", selection_text(&o.importers));
        let _ = writeln!(out, "exporters = {}", selection_text(&o.exporters));
        let _ = writeln!(out, "sectors = {}", selection_text(&o.sectors));
        let years = match o.years.to {
            Some(t) if t == o.years.from => format!("{}", o.years.from),
            Some(t) => format!("{}..{t}", o.years.from),
            None => format!("{}..", o.years.from),
        };
        let _ = writeln!(out, "years = {years}");
        let _ = writeln!(out, "change_pp = {}", o.change_pp);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    const TRADE_WAR: &str = "\
# Home raises manufacturing tariffs, everyone answers.
name = trade war
surprise_year = 2001
families = nh-ces, h-ces   # compare

[override]
importers = home
exporters = *
sectors = manufacturing
years = 2001..
change_pp = 20

[override]
importers = *
exporters = home
sectors = manufacturing
years = 2001..2003
change_pp = 20
";

    #[test]
    fn parses_full_example() {
        let s = parse(TRADE_WAR).unwrap();
        assert_eq!(s.name, "trade war");
        assert_eq!(s.surprise_year, 2001);
        assert_eq!(s.families, vec![PreferenceFamily::NonhomotheticCes, PreferenceFamily::HomotheticCes]);
        assert!(s.recalibrate);
        assert_eq!(s.report_years, 50);
        assert_eq!(s.overrides.len(), 2);
        assert_eq!(s.overrides[0].importers, Selection::Names(vec!["home".into()]));
        assert_eq!(s.overrides[0].exporters, Selection::All);
        assert_eq!(s.overrides[0].years, YearRange { from: 2001, to: None });
        assert_eq!(s.overrides[1].years, YearRange { from: 2001, to: Some(2003) });
        assert_eq!(s.overrides[1].change_pp, 20.0);
    }

    #[test]
    fn render_round_trips() {
        let s = parse(TRADE_WAR).unwrap();
        assert_eq!(parse(&render(&s)).unwrap(), s);
    }

    #[test]
    fn errors_carry_line_numbers() {
        let cases = [
            ("name = a\nsurprise_year = 2001\ncolour = red\n", "line 3"),
            ("name = a\nname = b\nsurprise_year = 1\n", "line 2"),
            ("name = a\nsurprise_year = x\n", "line 2"),
            ("name = a\nsurprise_year = 1\n[overide]\n", "line 3"),
            ("name = a\nsurprise_year = 1\n[override]\nimporters = *\n", "line 3"),
            ("name = a\nsurprise_year = 1\n[override]\nimporters = *\nexporters = *\nsectors = *\nyears = 2005..2001\nchange_pp = 1\n", "line 7"),
            ("name = a\nsurprise_year = 1\nfamilies = cd, cd\n", "line 3"),
            ("name = a\nsurprise_year = 1\nreport_years = 0\n", "line 3"),
            ("name = a\nsurprise_year\n", "line 2"),
        ];
        for (text, want) in cases {
            let err = parse(text).unwrap_err().to_string();
            assert!(err.contains(want), "{err:?} should mention {want}");
            assert_eq!(parse(text).unwrap_err().exit_code(), 2);
        }
    }

    #[test]
    fn missing_scenario_keys() {
        assert!(parse("surprise_year = 2001\n").unwrap_err().to_string().contains("'name'"));
        assert!(parse("name = x\n").unwrap_err().to_string().contains("'surprise_year'"));
    }
}
