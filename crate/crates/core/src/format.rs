//! Plain-text formats.
//!
//! `.sts`: a header line `n=<n>`, then one triple per line as three
//! ascending 1-indexed vertices separated by single spaces. Lines starting
//! with `#` are comments.
//!
//! `.res`: the same header, then one block per class. Blocks are separated
//! by blank lines.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::hypergraph::{Matching, Triple, TripleSystem};

fn parse_err<T>(line: usize, msg: impl Into<String>) -> Result<T> {
    Err(Error::Parse { line, msg: msg.into() })
}

fn parse_header(line_no: usize, line: &str) -> Result<usize> {
    let Some(rest) = line.trim().strip_prefix("n=") else {
        return parse_err(line_no, format!("expected header `n=<n>`, got `{line}`"));
    };
    rest.trim()
        .parse()
        .or_else(|_| parse_err(line_no, format!("bad vertex count `{rest}`")))
}

fn parse_triple(line_no: usize, line: &str, n: usize) -> Result<Triple> {
    let nums: Vec<usize> = line
        .split_whitespace()
        .map(|tok| tok.parse::<usize>())
        .collect::<std::result::Result<_, _>>()
        .or_else(|_| parse_err(line_no, format!("bad triple `{line}`")))?;
    if nums.len() != 3 {
        return parse_err(line_no, format!("expected 3 vertices, got {}", nums.len()));
    }
    if nums.iter().any(|&v| v == 0 || v > n) {
        return parse_err(line_no, format!("vertex outside [1, {n}] in `{line}`"));
    }
    if !(nums[0] < nums[1] && nums[1] < nums[2]) {
        return parse_err(line_no, format!("triple `{line}` is not strictly ascending"));
    }
    Ok(Triple::sorted_unchecked(nums[0] - 1, nums[1] - 1, nums[2] - 1))
}

fn is_comment(line: &str) -> bool {
    line.trim_start().starts_with('#')
}

/// Parses the `.sts` text; the kind is inferred from the edges.
pub fn parse_sts(text: &str) -> Result<TripleSystem> {
    let mut n = None;
    let mut edges = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line_no = i + 1;
        if is_comment(line) || line.trim().is_empty() {
            continue;
        }
        match n {
            None => n = Some(parse_header(line_no, line)?),
            Some(n) => edges.push(parse_triple(line_no, line, n)?),
        }
    }
    let Some(n) = n else {
        return parse_err(1, "missing header `n=<n>`");
    };
    TripleSystem::classify(n, edges)
}

pub fn write_sts(s: &TripleSystem) -> String {
    let mut out = format!("n={}\n", s.n());
    for e in s.edges() {
        let _ = writeln!(out, "{e}");
    }
    out
}

/// Like [`write_sts`] but with `#` comment lines interleaved: each entry of
/// `sections` is a tag followed by the triples it labels.
pub fn write_annotated_sts(n: usize, sections: &[(String, Vec<Triple>)]) -> String {
    let mut out = format!("n={n}\n");
    for (tag, triples) in sections {
        for line in tag.lines() {
            let _ = writeln!(out, "# {line}");
        }
        for t in triples {
            let _ = writeln!(out, "{t}");
        }
    }
    out
}

pub fn write_res(n: usize, classes: &[Matching]) -> String {
    let mut out = format!("n={n}\n");
    for class in classes {
        out.push('\n');
        for e in class.edges() {
            let _ = writeln!(out, "{e}");
        }
    }
    out
}

pub fn parse_res(text: &str) -> Result<(usize, Vec<Matching>)> {
    let mut n = None;
    let mut classes = Vec::new();
    let mut current: Vec<Triple> = Vec::new();
    let mut block_start = 0;
    let flush = |current: &mut Vec<Triple>, classes: &mut Vec<Matching>, at: usize| -> Result<()> {
        if !current.is_empty() {
            let m = Matching::new(std::mem::take(current))
                .or_else(|e| parse_err(at, format!("class is not a matching: {e}")))?;
            classes.push(m);
        }
        Ok(())
    };
    for (i, line) in text.lines().enumerate() {
        let line_no = i + 1;
        if is_comment(line) {
            continue;
        }
        if line.trim().is_empty() {
            flush(&mut current, &mut classes, block_start)?;
            block_start = line_no + 1;
            continue;
        }
        match n {
            None => n = Some(parse_header(line_no, line)?),
            Some(n) => current.push(parse_triple(line_no, line, n)?),
        }
    }
    flush(&mut current, &mut classes, block_start)?;
    let Some(n) = n else {
        return parse_err(1, "missing header `n=<n>`");
    };
    Ok((n, classes))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fano_round_trip_is_bit_exact() {
        let text = write_sts(&TripleSystem::fano());
        assert_eq!(text, "n=7\n1 2 3\n1 4 5\n1 6 7\n2 4 6\n2 5 7\n3 4 7\n3 5 6\n");
        let parsed = parse_sts(&text).unwrap();
        assert_eq!(parsed, TripleSystem::fano());
        assert_eq!(write_sts(&parsed), text);
    }

    #[test]
    fn comments_are_skipped() {
        let s = parse_sts("# header comment\nn=7\n# body\n1 2 3\n").unwrap();
        assert_eq!(s.edge_count(), 1);
    }

    #[test]
    fn malformed_inputs() {
        assert!(matches!(parse_sts("1 2 3\n"), Err(Error::Parse { line: 1, .. })));
        assert!(matches!(parse_sts("n=7\n1 2\n"), Err(Error::Parse { line: 2, .. })));
        assert!(matches!(parse_sts("n=7\n3 2 1\n"), Err(Error::Parse { line: 2, .. })));
        assert!(matches!(parse_sts("n=7\n1 2 8\n"), Err(Error::Parse { line: 2, .. })));
        assert!(parse_sts("n=7\n1 2 3\n1 2 3\n").is_err());
        assert!(parse_sts("").is_err());
    }

    #[test]
    fn res_round_trip() {
        let m1 = Matching::new(vec![Triple::new(0, 1, 2).unwrap()]).unwrap();
        let m2 = Matching::new(vec![Triple::new(0, 3, 4).unwrap(), Triple::new(1, 5, 6).unwrap()])
            .unwrap();
        let text = write_res(7, &[m1.clone(), m2.clone()]);
        assert_eq!(text, "n=7\n\n1 2 3\n\n1 4 5\n2 6 7\n");
        let (n, classes) = parse_res(&text).unwrap();
        assert_eq!(n, 7);
        assert_eq!(classes, vec![m1, m2]);
    }
}
