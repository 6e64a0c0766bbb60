use std::fmt;
use std::fs;
use std::path::Path;

use super::TimeScope;
use crate::error::{Error, Result};

/// How dataset lines are read.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParseOptions {
    /// Token marking an unknown endpoint.
    pub missing: String,
    /// Accept `YYYY-MM-DD` style dates (with `#` placeholders) and keep only
    /// the year; an all-placeholder date counts as missing.
    pub lenient_dates: bool,
}

impl Default for ParseOptions {
    fn default() -> Self {
        ParseOptions {
            missing: "-".to_string(),
            lenient_dates: false,
        }
    }
}

/// A statement as written in a dataset file: labels and calendar years.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct RawStatement {
    pub subject: String,
    pub relation: String,
    pub object: String,
    pub scope: TimeScope<i32>,
}

impl RawStatement {
    pub fn new(subject: &str, relation: &str, object: &str, scope: TimeScope<i32>) -> Self {
        RawStatement {
            subject: subject.to_string(),
            relation: relation.to_string(),
            object: object.to_string(),
            scope,
        }
    }

    /// Canonical five-column form using `missing` for unknown endpoints.
    pub fn to_line(&self, missing: &str) -> String {
        let (start, end) = match self.scope {
            TimeScope::NoTime => (None, None),
            TimeScope::Instant(t) => (Some(t), Some(t)),
            TimeScope::RightOpen(t) => (Some(t), None),
            TimeScope::LeftOpen(t) => (None, Some(t)),
            TimeScope::Closed(a, b) => (Some(a), Some(b)),
        };
        let fmt_year = |y: Option<i32>| y.map_or_else(|| missing.to_string(), |y| y.to_string());
        format!(
            "{}\t{}\t{}\t{}\t{}",
            self.subject,
            self.relation,
            self.object,
            fmt_year(start),
            fmt_year(end)
        )
    }
}

impl fmt::Display for RawStatement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_line("-"))
    }
}

fn parse_year(token: &str, opts: &ParseOptions) -> std::result::Result<Option<i32>, String> {
    if token == opts.missing {
        return Ok(None);
    }
    if let Ok(year) = token.parse::<i32>() {
        return Ok(Some(year));
    }
    if opts.lenient_dates {
        let (sign, body) = match token.strip_prefix('-') {
            Some(rest) => (-1, rest),
            None => (1, token),
        };
        let year_part = body.split('-').next().unwrap_or("");
        if !year_part.is_empty() && year_part.chars().all(|c| c == '#') {
            return Ok(None);
        }
        if let Ok(year) = year_part.parse::<i32>() {
            return Ok(Some(sign * year));
        }
    }
    Err(format!("`{token}` is not a year"))
}

/// Parses one dataset line. `line_no` is 1-based and only used in errors.
pub fn parse_line(line: &str, line_no: usize, opts: &ParseOptions) -> Result<RawStatement> {
    parse_inner(line, opts).map_err(|reason| Error::Parse {
        source_name: "<input>".to_string(),
        line: line_no,
        reason,
    })
}

fn parse_inner(line: &str, opts: &ParseOptions) -> std::result::Result<RawStatement, String> {
    let line = line.trim_end_matches(['\n', '\r']);
    let cols: Vec<&str> = line.split('\t').collect();
    if cols.len() != 5 {
        return Err(format!("expected 5 tab-separated columns, found {}", cols.len()));
    }
    if cols[..3].iter().any(|c| c.is_empty()) {
        return Err("empty subject, relation or object".to_string());
    }
    let start = parse_year(cols[3], opts)?;
    let end = parse_year(cols[4], opts)?;
    let scope = match (start, end) {
        (None, None) => TimeScope::NoTime,
        (Some(a), None) => TimeScope::RightOpen(a),
        (None, Some(b)) => TimeScope::LeftOpen(b),
        (Some(a), Some(b)) if a == b => TimeScope::Instant(a),
        (Some(a), Some(b)) if a < b => TimeScope::Closed(a, b),
        (Some(a), Some(b)) => return Err(format!("interval start {a} is after end {b}")),
    };
    Ok(RawStatement::new(cols[0], cols[1], cols[2], scope))
}

/// Reads every statement of a file, skipping blank lines.
pub fn read_statements(path: &Path, opts: &ParseOptions) -> Result<Vec<RawStatement>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let source_name = path.display().to_string();
    text.lines()
        .enumerate()
        .filter(|(_, line)| !line.trim().is_empty())
        .map(|(i, line)| {
            parse_inner(line, opts).map_err(|reason| Error::Parse {
                source_name: source_name.clone(),
                line: i + 1,
                reason,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn parse(line: &str) -> Result<RawStatement> {
        parse_line(line, 1, &ParseOptions::default())
    }

    #[test]
    fn classifies_scopes() {
        let s = parse("Einstein\temployer\tPrinceton\t1933\t1955").unwrap();
        assert_eq!(s.scope, TimeScope::Closed(1933, 1955));
        let s = parse("Einstein\tacademicDegree\tPhD\t1906\t1906").unwrap();
        assert_eq!(s.scope, TimeScope::Instant(1906));
        let s = parse("A\tinstanceOf\tHuman\t-\t-").unwrap();
        assert_eq!(s.scope, TimeScope::NoTime);
        assert_eq!(parse("a\tb\tc\t1905\t-").unwrap().scope, TimeScope::RightOpen(1905));
        assert_eq!(parse("a\tb\tc\t-\t1905").unwrap().scope, TimeScope::LeftOpen(1905));
    }

    #[test]
    fn rejects_bad_lines_with_line_number() {
        let err = parse_line("a\tb\tc\t1900", 7, &ParseOptions::default()).unwrap_err();
        assert!(err.to_string().contains(":7:"), "{err}");
        assert!(parse("a\tb\tc\tnineteen\t-").is_err());
        let err = parse("a\tb\tc\t1960\t1950").unwrap_err();
        assert!(err.to_string().contains("after end"));
    }

    #[test]
    fn alternate_sentinel_and_lenient_dates() {
        let opts = ParseOptions {
            missing: "####-##-##".into(),
            lenient_dates: true,
        };
        let s = parse_line("a\tb\tc\t1933-##-##\t####-##-##", 1, &opts).unwrap();
        assert_eq!(s.scope, TimeScope::RightOpen(1933));
        let s = parse_line("a\tb\tc\t0019-##-##\t2020-05-01", 1, &opts).unwrap();
        assert_eq!(s.scope, TimeScope::Closed(19, 2020));
        assert!(parse("a\tb\tc\t1933-##-##\t-").is_err());
    }

    #[test]
    fn read_reports_file_and_line() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("train.txt");
        fs::write(&path, "a\tr\tb\t2000\t2001\n\nbad line\n").unwrap();
        let err = read_statements(&path, &ParseOptions::default()).unwrap_err();
        assert!(err.to_string().contains("train.txt:3:"), "{err}");
    }

    fn scope_strategy() -> impl Strategy<Value = TimeScope<i32>> {
        prop_oneof![
            Just(TimeScope::NoTime),
            (-500i32..3000).prop_map(TimeScope::Instant),
            (-500i32..3000).prop_map(TimeScope::RightOpen),
            (-500i32..3000).prop_map(TimeScope::LeftOpen),
            (-500i32..3000, 1i32..200).prop_map(|(a, len)| TimeScope::Closed(a, a + len)),
        ]
    }

    proptest! {
        #[test]
        fn canonical_line_round_trips(
            s in "[A-Za-z0-9_]{1,8}",
            r in "[A-Za-z0-9_]{1,8}",
            o in "[A-Za-z0-9_]{1,8}",
            scope in scope_strategy(),
        ) {
            let stmt = RawStatement::new(&s, &r, &o, scope);
            let line = stmt.to_line("-");
            let parsed = parse(&line).unwrap();
            prop_assert_eq!(&parsed, &stmt);
            prop_assert_eq!(parsed.to_line("-"), line);
        }
    }
}
