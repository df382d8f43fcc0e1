//! Deterministic line-level diff engine.
//!
//! Generates unified diffs in git's format, parses unified diffs into
//! line-addressed change sets, and re-applies parsed diffs. The edit script
//! is minimal (longest-common-subsequence based): small regions run an exact
//! dynamic program, larger ones the linear-space bidirectional "middle
//! snake" search, after common prefix/suffix stripping. The same inputs
//! always produce the same diff.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Line-addressed view of a unified diff: added lines numbered in the
/// post-image, deleted lines in the pre-image, both 1-based, in hunk order.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DiffParsed {
    pub added: Vec<(u32, String)>,
    pub deleted: Vec<(u32, String)>,
}

impl DiffParsed {
    pub fn is_empty(&self) -> bool {
        self.added.is_empty() && self.deleted.is_empty()
    }

    /// Canonical JSON serialization stored in the database.
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("DiffParsed serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum DiffParseError {
    #[error("malformed hunk header: {header:?}")]
    MalformedHeader { header: String },
    #[error("unexpected line {line_no} inside hunk: {line:?}")]
    UnexpectedLine { line_no: usize, line: String },
    #[error("diff truncated inside a hunk ({old_remaining} pre-image / {new_remaining} post-image lines missing)")]
    Truncated {
        old_remaining: u32,
        new_remaining: u32,
    },
    #[error(
        "diff does not apply: pre-image line {line_no} differs from the content being patched"
    )]
    ApplyMismatch { line_no: u32 },
}

/// One line of content plus whether it is newline-terminated. Only the final
/// line of a file may have `eol == false`; two lines with equal text but
/// different termination are distinct for diff purposes, exactly as in git.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
struct Line<'a> {
    text: &'a str,
    eol: bool,
}

fn split_lines(content: &str) -> Vec<Line<'_>> {
    if content.is_empty() {
        return Vec::new();
    }
    let mut lines: Vec<Line<'_>> = content
        .split('\n')
        .map(|text| Line { text, eol: true })
        .collect();
    if content.ends_with('\n') {
        lines.pop();
    } else if let Some(last) = lines.last_mut() {
        last.eol = false;
    }
    lines
}

/// Intern both line sequences into numeric ids for cheap comparisons.
fn intern<'a>(a: &[Line<'a>], b: &[Line<'a>]) -> (Vec<u32>, Vec<u32>) {
    let mut table: HashMap<Line<'a>, u32> = HashMap::new();
    let mut id_of = |line: &Line<'a>| -> u32 {
        let next = table.len() as u32;
        *table.entry(*line).or_insert(next)
    };
    let ids_a = a.iter().map(&mut id_of).collect();
    let ids_b = b.iter().map(&mut id_of).collect();
    (ids_a, ids_b)
}

/// Regions at most this many DP cells run the exact quadratic LCS.
const DP_CELL_LIMIT: u64 = 10_000;

/// Compute the minimal edit script between `a` and `b` as deletion/addition
/// masks over the two sequences.
fn diff_masks(a: &[u32], b: &[u32]) -> (Vec<bool>, Vec<bool>) {
    let mut del = vec![false; a.len()];
    let mut add = vec![false; b.len()];
    diff_region(a, b, 0, 0, &mut del, &mut add);
    (del, add)
}

fn diff_region(
    a: &[u32],
    b: &[u32],
    a_off: usize,
    b_off: usize,
    del: &mut [bool],
    add: &mut [bool],
) {
    // Strip common prefix and suffix.
    let mut start = 0;
    while start < a.len() && start < b.len() && a[start] == b[start] {
        start += 1;
    }
    let mut a_end = a.len();
    let mut b_end = b.len();
    while a_end > start && b_end > start && a[a_end - 1] == b[b_end - 1] {
        a_end -= 1;
        b_end -= 1;
    }
    let a_mid = &a[start..a_end];
    let b_mid = &b[start..b_end];
    if a_mid.is_empty() {
        for j in start..b_end {
            add[b_off + j] = true;
        }
        return;
    }
    if b_mid.is_empty() {
        for i in start..a_end {
            del[a_off + i] = true;
        }
        return;
    }
    if (a_mid.len() as u64) * (b_mid.len() as u64) <= DP_CELL_LIMIT {
        dp_region(a_mid, b_mid, a_off + start, b_off + start, del, add);
        return;
    }
    let (u, v) = middle_split(a_mid, b_mid);
    diff_region(
        &a_mid[..u],
        &b_mid[..v],
        a_off + start,
        b_off + start,
        del,
        add,
    );
    diff_region(
        &a_mid[u..],
        &b_mid[v..],
        a_off + start + u,
        b_off + start + v,
        del,
        add,
    );
}

/// Exact LCS dynamic program with deterministic (deletion-first) backtrack.
fn dp_region(a: &[u32], b: &[u32], a_off: usize, b_off: usize, del: &mut [bool], add: &mut [bool]) {
    let n = a.len();
    let m = b.len();
    // dp[i][j] = LCS length of a[i..] vs b[j..]
    let mut dp = vec![0u32; (n + 1) * (m + 1)];
    let idx = |i: usize, j: usize| i * (m + 1) + j;
    for i in (0..n).rev() {
        for j in (0..m).rev() {
            dp[idx(i, j)] = if a[i] == b[j] {
                dp[idx(i + 1, j + 1)] + 1
            } else {
                dp[idx(i + 1, j)].max(dp[idx(i, j + 1)])
            };
        }
    }
    let (mut i, mut j) = (0, 0);
    while i < n && j < m {
        if a[i] == b[j] {
            i += 1;
            j += 1;
        } else if dp[idx(i + 1, j)] >= dp[idx(i, j + 1)] {
            del[a_off + i] = true;
            i += 1;
        } else {
            add[b_off + j] = true;
            j += 1;
        }
    }
    while i < n {
        del[a_off + i] = true;
        i += 1;
    }
    while j < m {
        add[b_off + j] = true;
        j += 1;
    }
}

/// Find a point on a minimal edit path using the bidirectional greedy search
/// (linear space). Callers guarantee `a`/`b` are non-empty and share no
/// common prefix or suffix, so the minimal script has length ≥ 2 and the
/// returned split strictly separates the problem.
fn middle_split(a: &[u32], b: &[u32]) -> (usize, usize) {
    let n = a.len() as isize;
    let m = b.len() as isize;
    let delta = n - m;
    let odd = delta % 2 != 0;
    let max_d = (n + m + 1) / 2 + 1;
    let off = max_d;
    let size = (2 * max_d + 2) as usize;
    let mut vf = vec![0isize; size];
    let mut vr = vec![0isize; size];

    for d in 0..=max_d {
        // Forward paths from (0,0).
        let mut k = -d;
        while k <= d {
            let i = (off + k) as usize;
            let mut x = if k == -d || (k != d && vf[i - 1] < vf[i + 1]) {
                vf[i + 1]
            } else {
                vf[i - 1] + 1
            };
            let mut y = x - k;
            while x < n && y < m && a[x as usize] == b[y as usize] {
                x += 1;
                y += 1;
            }
            vf[i] = x;
            if odd {
                let kr = delta - k;
                if kr >= -(d - 1) && kr < d && x >= n - vr[(off + kr) as usize] {
                    return (x as usize, y as usize);
                }
            }
            k += 2;
        }
        // Backward paths from (n,m), run as forward paths over the reversed
        // sequences; a reversed point (x,y) maps to (n-x, m-y).
        let mut k = -d;
        while k <= d {
            let i = (off + k) as usize;
            let mut x = if k == -d || (k != d && vr[i - 1] < vr[i + 1]) {
                vr[i + 1]
            } else {
                vr[i - 1] + 1
            };
            let mut y = x - k;
            while x < n && y < m && a[(n - 1 - x) as usize] == b[(m - 1 - y) as usize] {
                x += 1;
                y += 1;
            }
            vr[i] = x;
            if !odd {
                let kf = delta - k;
                if kf >= -d && kf <= d && x >= n - vf[(off + kf) as usize] {
                    return ((n - x) as usize, (m - y) as usize);
                }
            }
            k += 2;
        }
    }
    unreachable!("bidirectional search always finds a middle point");
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum OpKind {
    Ctx,
    Del,
    Add,
}

/// One aligned step of the edit script, with the cursors (lines consumed on
/// each side before this op) needed for hunk headers.
#[derive(Debug, Clone, Copy)]
struct Op<'a> {
    kind: OpKind,
    old_cursor: usize,
    new_cursor: usize,
    unit: Line<'a>,
}

fn edit_ops<'a>(before: &[Line<'a>], after: &[Line<'a>]) -> Vec<Op<'a>> {
    let (ids_a, ids_b) = intern(before, after);
    let (del, add) = diff_masks(&ids_a, &ids_b);
    let mut ops = Vec::with_capacity(before.len().max(after.len()));
    let (mut i, mut j) = (0usize, 0usize);
    while i < before.len() || j < after.len() {
        if i < before.len() && del[i] {
            ops.push(Op {
                kind: OpKind::Del,
                old_cursor: i,
                new_cursor: j,
                unit: before[i],
            });
            i += 1;
        } else if j < after.len() && add[j] {
            ops.push(Op {
                kind: OpKind::Add,
                old_cursor: i,
                new_cursor: j,
                unit: after[j],
            });
            j += 1;
        } else {
            ops.push(Op {
                kind: OpKind::Ctx,
                old_cursor: i,
                new_cursor: j,
                unit: before[i],
            });
            i += 1;
            j += 1;
        }
    }
    ops
}

const CONTEXT: usize = 3;
const NO_NEWLINE: &str = "\\ No newline at end of file";

/// Render a git-style unified diff for one file.
///
/// `before == None` marks an added file, `after == None` a deleted one;
/// differing paths emit rename headers. Identical content with identical
/// paths yields an empty string.
pub fn unified_file_diff(
    old_path: Option<&str>,
    new_path: Option<&str>,
    before: Option<&str>,
    after: Option<&str>,
) -> String {
    let before_text = before.unwrap_or("");
    let after_text = after.unwrap_or("");
    let before_lines = split_lines(before_text);
    let after_lines = split_lines(after_text);
    let ops = edit_ops(&before_lines, &after_lines);
    let has_changes = ops.iter().any(|op| op.kind != OpKind::Ctx);

    let a_name = old_path.or(new_path).unwrap_or("file");
    let b_name = new_path.or(old_path).unwrap_or("file");
    if !has_changes && a_name == b_name {
        return String::new();
    }

    let mut out = String::new();
    out.push_str(&format!("diff --git a/{a_name} b/{b_name}\n"));
    match (old_path, new_path) {
        (None, Some(_)) => out.push_str("new file mode 100644\n"),
        (Some(_), None) => out.push_str("deleted file mode 100644\n"),
        (Some(o), Some(n)) if o != n => {
            out.push_str(&format!("rename from {o}\nrename to {n}\n"));
        }
        _ => {}
    }
    if !has_changes {
        return out;
    }
    let old_label = if old_path.is_some() {
        format!("a/{a_name}")
    } else {
        "/dev/null".to_string()
    };
    let new_label = if new_path.is_some() {
        format!("b/{b_name}")
    } else {
        "/dev/null".to_string()
    };
    out.push_str(&format!("--- {old_label}\n+++ {new_label}\n"));
    render_hunks(&ops, &mut out);
    out
}

fn render_hunks(ops: &[Op<'_>], out: &mut String) {
    let change_positions: Vec<usize> = ops
        .iter()
        .enumerate()
        .filter(|(_, op)| op.kind != OpKind::Ctx)
        .map(|(idx, _)| idx)
        .collect();
    let mut groups: Vec<(usize, usize)> = Vec::new();
    for &pos in &change_positions {
        match groups.last_mut() {
            Some((_, last)) if pos - *last - 1 <= 2 * CONTEXT => *last = pos,
            _ => groups.push((pos, pos)),
        }
    }
    for (first, last) in groups {
        let lo = first.saturating_sub(CONTEXT);
        let hi = (last + CONTEXT).min(ops.len() - 1);
        let hunk = &ops[lo..=hi];
        let old_count = hunk
            .iter()
            .filter(|op| matches!(op.kind, OpKind::Del | OpKind::Ctx))
            .count();
        let new_count = hunk
            .iter()
            .filter(|op| matches!(op.kind, OpKind::Add | OpKind::Ctx))
            .count();
        let old_start = if old_count > 0 {
            hunk[0].old_cursor + 1
        } else {
            hunk[0].old_cursor
        };
        let new_start = if new_count > 0 {
            hunk[0].new_cursor + 1
        } else {
            hunk[0].new_cursor
        };
        out.push_str("@@ -");
        push_range(out, old_start, old_count);
        out.push_str(" +");
        push_range(out, new_start, new_count);
        out.push_str(" @@\n");
        for op in hunk {
            let marker = match op.kind {
                OpKind::Ctx => ' ',
                OpKind::Del => '-',
                OpKind::Add => '+',
            };
            out.push(marker);
            out.push_str(op.unit.text);
            out.push('\n');
            if !op.unit.eol {
                out.push_str(NO_NEWLINE);
                out.push('\n');
            }
        }
    }
}

fn push_range(out: &mut String, start: usize, count: usize) {
    out.push_str(&start.to_string());
    if count != 1 {
        out.push_str(&format!(",{count}"));
    }
}

/// Notice emitted in place of content hunks for binary files.
pub fn binary_notice(old_path: Option<&str>, new_path: Option<&str>) -> String {
    let a = old_path.or(new_path).unwrap_or("file");
    let b = new_path.or(old_path).unwrap_or("file");
    format!("diff --git a/{a} b/{b}\nBinary files a/{a} and b/{b} differ\n")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum HunkLineKind {
    Ctx,
    Del,
    Add,
}

#[derive(Debug, Clone)]
struct HunkLine {
    kind: HunkLineKind,
    text: String,
    /// True when a "\ No newline at end of file" marker followed this line.
    no_eol: bool,
}

#[derive(Debug, Clone)]
struct Hunk {
    old_start: u32,
    old_count: u32,
    new_start: u32,
    new_count: u32,
    lines: Vec<HunkLine>,
}

fn parse_hunk_header(line: &str) -> Option<(u32, u32, u32, u32)> {
    let rest = line.strip_prefix("@@ -")?;
    let (old_part, rest) = rest.split_once(" +")?;
    let (new_part, _) = rest.split_once(" @@")?;
    let parse_side = |side: &str| -> Option<(u32, u32)> {
        match side.split_once(',') {
            Some((start, count)) => Some((start.parse().ok()?, count.parse().ok()?)),
            None => Some((side.parse().ok()?, 1)),
        }
    };
    let (old_start, old_count) = parse_side(old_part)?;
    let (new_start, new_count) = parse_side(new_part)?;
    // 1-based starts; a start of 0 is only meaningful for an empty range.
    if (old_count > 0 && old_start == 0) || (new_count > 0 && new_start == 0) {
        return None;
    }
    Some((old_start, old_count, new_start, new_count))
}

fn parse_hunks(diff: &str) -> Result<Vec<Hunk>, DiffParseError> {
    let mut hunks: Vec<Hunk> = Vec::new();
    let mut old_left = 0u32;
    let mut new_left = 0u32;
    for (idx, raw) in diff.lines().enumerate() {
        let line_no = idx + 1;
        if old_left == 0 && new_left == 0 {
            // Between hunks: only hunk headers are meaningful; anything else
            // (git headers, rename/mode lines, binary notices) is preamble.
            if raw.starts_with("@@") {
                let (old_start, old_count, new_start, new_count) = parse_hunk_header(raw)
                    .ok_or_else(|| DiffParseError::MalformedHeader {
                        header: raw.to_string(),
                    })?;
                old_left = old_count;
                new_left = new_count;
                hunks.push(Hunk {
                    old_start,
                    old_count,
                    new_start,
                    new_count,
                    lines: Vec::new(),
                });
            } else if raw == NO_NEWLINE {
                // Marker for the final line of the previous hunk.
                if let Some(line) = hunks.last_mut().and_then(|h| h.lines.last_mut()) {
                    line.no_eol = true;
                }
            }
            continue;
        }
        let hunk = hunks.last_mut().expect("inside a hunk");
        let (kind, text) = match raw.as_bytes().first() {
            Some(b' ') => (HunkLineKind::Ctx, &raw[1..]),
            Some(b'-') => (HunkLineKind::Del, &raw[1..]),
            Some(b'+') => (HunkLineKind::Add, &raw[1..]),
            Some(b'\\') => {
                if let Some(line) = hunk.lines.last_mut() {
                    line.no_eol = true;
                }
                continue;
            }
            // Some tools strip a context line's leading space entirely.
            None => (HunkLineKind::Ctx, ""),
            Some(_) => {
                return Err(DiffParseError::UnexpectedLine {
                    line_no,
                    line: raw.to_string(),
                })
            }
        };
        match kind {
            HunkLineKind::Ctx => {
                if old_left == 0 || new_left == 0 {
                    return Err(DiffParseError::UnexpectedLine {
                        line_no,
                        line: raw.to_string(),
                    });
                }
                old_left -= 1;
                new_left -= 1;
            }
            HunkLineKind::Del => {
                if old_left == 0 {
                    return Err(DiffParseError::UnexpectedLine {
                        line_no,
                        line: raw.to_string(),
                    });
                }
                old_left -= 1;
            }
            HunkLineKind::Add => {
                if new_left == 0 {
                    return Err(DiffParseError::UnexpectedLine {
                        line_no,
                        line: raw.to_string(),
                    });
                }
                new_left -= 1;
            }
        }
        hunk.lines.push(HunkLine {
            kind,
            text: text.to_string(),
            no_eol: false,
        });
    }
    if old_left > 0 || new_left > 0 {
        return Err(DiffParseError::Truncated {
            old_remaining: old_left,
            new_remaining: new_left,
        });
    }
    Ok(hunks)
}

/// Parse a unified diff for one file into its added/deleted line sets.
///
/// Context lines and no-newline markers are excluded; lines before the first
/// hunk header (git headers, binary notices) are ignored.
pub fn parse_diff(diff: &str) -> Result<DiffParsed, DiffParseError> {
    let hunks = parse_hunks(diff)?;
    let mut parsed = DiffParsed::default();
    for hunk in hunks {
        let mut old_no = if hunk.old_count == 0 {
            hunk.old_start + 1
        } else {
            hunk.old_start
        };
        let mut new_no = if hunk.new_count == 0 {
            hunk.new_start + 1
        } else {
            hunk.new_start
        };
        for line in hunk.lines {
            match line.kind {
                HunkLineKind::Ctx => {
                    old_no += 1;
                    new_no += 1;
                }
                HunkLineKind::Del => {
                    parsed.deleted.push((old_no, line.text));
                    old_no += 1;
                }
                HunkLineKind::Add => {
                    parsed.added.push((new_no, line.text));
                    new_no += 1;
                }
            }
        }
    }
    Ok(parsed)
}

/// Re-apply a unified diff to the pre-image, reproducing the post-image
/// byte-for-byte (including trailing-newline state). Context and deletion
/// lines are verified against the content being patched.
pub fn apply_unified(diff: &str, before: &str) -> Result<String, DiffParseError> {
    let hunks = parse_hunks(diff)?;
    let before_lines = split_lines(before);
    let mut out: Vec<(String, bool)> = Vec::new();
    let mut cursor = 0usize; // lines of `before` consumed
    for hunk in &hunks {
        let hunk_begin = if hunk.old_count == 0 {
            hunk.old_start as usize
        } else {
            (hunk.old_start - 1) as usize
        };
        while cursor < hunk_begin {
            let unit = before_lines
                .get(cursor)
                .ok_or(DiffParseError::ApplyMismatch {
                    line_no: cursor as u32 + 1,
                })?;
            out.push((unit.text.to_string(), unit.eol));
            cursor += 1;
        }
        for line in &hunk.lines {
            match line.kind {
                HunkLineKind::Ctx | HunkLineKind::Del => {
                    let unit = before_lines
                        .get(cursor)
                        .ok_or(DiffParseError::ApplyMismatch {
                            line_no: cursor as u32 + 1,
                        })?;
                    if unit.text != line.text {
                        return Err(DiffParseError::ApplyMismatch {
                            line_no: cursor as u32 + 1,
                        });
                    }
                    cursor += 1;
                    if line.kind == HunkLineKind::Ctx {
                        out.push((line.text.clone(), !line.no_eol && unit.eol));
                    }
                }
                HunkLineKind::Add => {
                    out.push((line.text.clone(), !line.no_eol));
                }
            }
        }
    }
    while cursor < before_lines.len() {
        let unit = before_lines[cursor];
        out.push((unit.text.to_string(), unit.eol));
        cursor += 1;
    }
    let mut result = String::new();
    for (text, eol) in out {
        result.push_str(&text);
        if eol {
            result.push('\n');
        }
    }
    Ok(result)
}

/// Apply a parsed (line-addressed) diff to newline-terminated pre-image
/// content. This is the lossy counterpart of [`apply_unified`]: the parsed
/// structure does not record trailing-newline state, so the result is
/// newline-terminated whenever it is non-empty.
pub fn apply_parsed(parsed: &DiffParsed, before: &str) -> String {
    let before_lines = split_lines(before);
    let deleted: std::collections::HashSet<u32> =
        parsed.deleted.iter().map(|(no, _)| *no).collect();
    let mut kept = before_lines
        .iter()
        .enumerate()
        .filter(|(idx, _)| !deleted.contains(&(*idx as u32 + 1)))
        .map(|(_, line)| line.text);
    let mut added = parsed.added.iter().peekable();
    let mut out: Vec<&str> = Vec::new();
    loop {
        let target = out.len() as u32 + 1;
        if let Some((no, text)) = added.peek() {
            if *no == target {
                out.push(text);
                added.next();
                continue;
            }
        }
        match kept.next() {
            Some(text) => out.push(text),
            None => break,
        }
    }
    // Any additions past the kept lines attach at the end in order.
    for (_, text) in added {
        out.push(text);
    }
    if out.is_empty() {
        String::new()
    } else {
        let mut s = out.join("\n");
        s.push('\n');
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn lines_of(parts: &[&str]) -> String {
        let mut s = parts.join("\n");
        if !parts.is_empty() {
            s.push('\n');
        }
        s
    }

    #[test]
    fn split_lines_handles_termination() {
        assert!(split_lines("").is_empty());
        let l = split_lines("a\nb\n");
        assert_eq!(l.len(), 2);
        assert!(l.iter().all(|x| x.eol));
        let l = split_lines("a\nb");
        assert_eq!(
            l[1],
            Line {
                text: "b",
                eol: false
            }
        );
        let l = split_lines("\n");
        assert_eq!(
            l,
            vec![Line {
                text: "",
                eol: true
            }]
        );
    }

    #[test]
    fn parse_empty_diff() {
        assert_eq!(parse_diff("").unwrap(), DiffParsed::default());
    }

    #[test]
    fn parse_minimal_hunk() {
        let parsed = parse_diff("@@ -1 +1 @@\n-old\n+new").unwrap();
        assert_eq!(parsed.added, vec![(1, "new".to_string())]);
        assert_eq!(parsed.deleted, vec![(1, "old".to_string())]);
    }

    #[test]
    fn parse_skips_headers_and_markers() {
        let diff = "diff --git a/f b/f\n--- a/f\n+++ b/f\n@@ -1,2 +1,2 @@\n ctx\n-old\n+new\n\\ No newline at end of file\n";
        let parsed = parse_diff(diff).unwrap();
        assert_eq!(parsed.added, vec![(2, "new".to_string())]);
        assert_eq!(parsed.deleted, vec![(2, "old".to_string())]);
    }

    #[test]
    fn parse_zero_count_ranges() {
        // Pure insertion after pre-image line 2.
        let parsed = parse_diff("@@ -2,0 +3,2 @@\n+x\n+y").unwrap();
        assert_eq!(parsed.added, vec![(3, "x".into()), (4, "y".into())]);
        assert!(parsed.deleted.is_empty());
        // Pure deletion.
        let parsed = parse_diff("@@ -3,2 +2,0 @@\n-x\n-y").unwrap();
        assert_eq!(parsed.deleted, vec![(3, "x".into()), (4, "y".into())]);
    }

    #[test]
    fn parse_rejects_malformed_headers() {
        for bad in [
            "@@ -x +1 @@\n-a\n+b",
            "@@ 1 +1 @@\n",
            "@@ -1 1 @@\n",
            "@@ -0,1 +1 @@\n-a\n+b",
            "@@-1 +1 @@\n",
        ] {
            match parse_diff(bad) {
                Err(DiffParseError::MalformedHeader { .. }) => {}
                other => panic!("expected MalformedHeader for {bad:?}, got {other:?}"),
            }
        }
    }

    #[test]
    fn parse_rejects_overrun_and_truncation() {
        assert!(matches!(
            parse_diff("@@ -1 +1 @@\n-a\n-b\n+c"),
            Err(DiffParseError::UnexpectedLine { .. })
        ));
        assert!(matches!(
            parse_diff("@@ -2,2 +2,2 @@\n ctx"),
            Err(DiffParseError::Truncated { .. })
        ));
        assert!(matches!(
            parse_diff("@@ -1 +1 @@\n*junk\n"),
            Err(DiffParseError::UnexpectedLine { .. })
        ));
    }

    #[test]
    fn renders_git_style_modification() {
        let before = lines_of(&[
            "one", "two", "three", "four", "five", "six", "seven", "eight",
        ]);
        let after = lines_of(&[
            "one", "two", "three", "FOUR", "five", "six", "seven", "eight",
        ]);
        let diff = unified_file_diff(Some("f.txt"), Some("f.txt"), Some(&before), Some(&after));
        let expected = "diff --git a/f.txt b/f.txt\n\
             --- a/f.txt\n\
             +++ b/f.txt\n\
             @@ -1,7 +1,7 @@\n one\n two\n three\n-four\n+FOUR\n five\n six\n seven\n";
        assert_eq!(diff, expected);
    }

    #[test]
    fn renders_added_and_deleted_files() {
        let content = lines_of(&["a", "b"]);
        let added = unified_file_diff(None, Some("new.txt"), None, Some(&content));
        assert_eq!(
            added,
            "diff --git a/new.txt b/new.txt\nnew file mode 100644\n--- /dev/null\n+++ b/new.txt\n@@ -0,0 +1,2 @@\n+a\n+b\n"
        );
        let deleted = unified_file_diff(Some("gone.txt"), None, Some(&content), None);
        assert_eq!(
            deleted,
            "diff --git a/gone.txt b/gone.txt\ndeleted file mode 100644\n--- a/gone.txt\n+++ /dev/null\n@@ -1,2 +0,0 @@\n-a\n-b\n"
        );
    }

    #[test]
    fn renders_pure_rename_without_hunks() {
        let content = lines_of(&["same"]);
        let diff = unified_file_diff(
            Some("old.rs"),
            Some("new.rs"),
            Some(&content),
            Some(&content),
        );
        assert_eq!(
            diff,
            "diff --git a/old.rs b/new.rs\nrename from old.rs\nrename to new.rs\n"
        );
        assert!(parse_diff(&diff).unwrap().is_empty());
    }

    #[test]
    fn identical_content_same_path_renders_nothing() {
        let content = lines_of(&["same"]);
        assert_eq!(
            unified_file_diff(Some("f"), Some("f"), Some(&content), Some(&content)),
            ""
        );
    }

    #[test]
    fn distant_changes_split_into_hunks() {
        let mut before_parts: Vec<String> = (1..=20).map(|i| format!("line{i}")).collect();
        let mut after_parts = before_parts.clone();
        after_parts[0] = "LINE1".into();
        after_parts[19] = "LINE20".into();
        let before = lines_of(&before_parts.iter().map(String::as_str).collect::<Vec<_>>());
        let after = lines_of(&after_parts.iter().map(String::as_str).collect::<Vec<_>>());
        let diff = unified_file_diff(Some("f"), Some("f"), Some(&before), Some(&after));
        assert_eq!(diff.matches("@@").count(), 4); // two hunks, two @@ each
        let parsed = parse_diff(&diff).unwrap();
        assert_eq!(
            parsed.added,
            vec![(1, "LINE1".into()), (20, "LINE20".into())]
        );
        assert_eq!(
            parsed.deleted,
            vec![(1, "line1".into()), (20, "line20".into())]
        );
        // Nearby changes coalesce into one hunk.
        before_parts[4] = "x".into();
        let before2 = lines_of(&before_parts.iter().map(String::as_str).collect::<Vec<_>>());
        let diff2 = unified_file_diff(Some("f"), Some("f"), Some(&before), Some(&before2));
        assert_eq!(diff2.matches("@@").count(), 2);
    }

    #[test]
    fn no_newline_markers_match_git() {
        // Final line loses its newline: same text, different termination.
        let diff = unified_file_diff(Some("f"), Some("f"), Some("a\n"), Some("a"));
        assert_eq!(
            diff,
            "diff --git a/f b/f\n--- a/f\n+++ b/f\n@@ -1 +1 @@\n-a\n+a\n\\ No newline at end of file\n"
        );
        // Both sides unterminated.
        let diff = unified_file_diff(Some("f"), Some("f"), Some("a"), Some("b"));
        assert_eq!(
            diff,
            "diff --git a/f b/f\n--- a/f\n+++ b/f\n@@ -1 +1 @@\n-a\n\\ No newline at end of file\n+b\n\\ No newline at end of file\n"
        );
        // Markers never reach the parsed line sets.
        let parsed = parse_diff(&diff).unwrap();
        assert_eq!(parsed.added, vec![(1, "b".into())]);
        assert_eq!(parsed.deleted, vec![(1, "a".into())]);
    }

    #[test]
    fn binary_notice_parses_to_empty() {
        let notice = binary_notice(Some("img.png"), Some("img.png"));
        assert!(notice.contains("Binary files"));
        assert!(parse_diff(&notice).unwrap().is_empty());
    }

    #[test]
    fn apply_unified_round_trips_no_newline_cases() {
        let cases = [
            ("a\n", "a"),
            ("a", "a\n"),
            ("a", "b"),
            ("a\nb", "a\nc"),
            ("", "x"),
            ("x", ""),
            ("a\nb\n", "b\na\n"),
        ];
        for (before, after) in cases {
            let diff = unified_file_diff(Some("f"), Some("f"), Some(before), Some(after));
            let rebuilt = apply_unified(&diff, before).unwrap();
            assert_eq!(rebuilt, after, "before={before:?} after={after:?}");
        }
    }

    #[test]
    fn apply_unified_rejects_mismatched_preimage() {
        let diff = unified_file_diff(Some("f"), Some("f"), Some("a\nb\n"), Some("a\nc\n"));
        assert!(matches!(
            apply_unified(&diff, "a\nX\n"),
            Err(DiffParseError::ApplyMismatch { .. })
        ));
    }

    #[test]
    fn diff_parsed_json_round_trip() {
        let parsed = DiffParsed {
            added: vec![(1, "new".into())],
            deleted: vec![(1, "old".into())],
        };
        let json = parsed.to_json();
        assert_eq!(json, r#"{"added":[[1,"new"]],"deleted":[[1,"old"]]}"#);
        assert_eq!(DiffParsed::from_json(&json).unwrap(), parsed);
    }

    /// Independent quadratic LCS-length computation used as the minimality
    /// oracle for the production edit script.
    fn lcs_len(a: &[u32], b: &[u32]) -> usize {
        let m = b.len();
        let mut prev = vec![0usize; m + 1];
        let mut cur = vec![0usize; m + 1];
        for i in (0..a.len()).rev() {
            for j in (0..m).rev() {
                cur[j] = if a[i] == b[j] {
                    prev[j + 1] + 1
                } else {
                    prev[j].max(cur[j + 1])
                };
            }
            std::mem::swap(&mut prev, &mut cur);
        }
        prev[0]
    }

    fn check_script(a_ids: &[u32], b_ids: &[u32]) {
        let (del, add) = diff_masks(a_ids, b_ids);
        // Valid: kept lines on both sides form the same sequence.
        let kept_a: Vec<u32> = a_ids
            .iter()
            .zip(&del)
            .filter(|(_, d)| !**d)
            .map(|(v, _)| *v)
            .collect();
        let kept_b: Vec<u32> = b_ids
            .iter()
            .zip(&add)
            .filter(|(_, a)| !**a)
            .map(|(v, _)| *v)
            .collect();
        assert_eq!(
            kept_a, kept_b,
            "edit script must preserve a common subsequence"
        );
        // Minimal: edit count matches the LCS bound.
        let edits = del.iter().filter(|d| **d).count() + add.iter().filter(|a| **a).count();
        let expected = a_ids.len() + b_ids.len() - 2 * lcs_len(a_ids, b_ids);
        assert_eq!(edits, expected, "edit script must be minimal");
        // Deterministic.
        assert_eq!(diff_masks(a_ids, b_ids), (del, add));
    }

    proptest! {
        /// Small sequences over a tiny alphabet: heavy repetition, exercises
        /// the exact-DP path.
        #[test]
        fn script_minimal_small(a in prop::collection::vec(0u32..4, 0..40),
                                b in prop::collection::vec(0u32..4, 0..40)) {
            check_script(&a, &b);
        }

        /// Larger sequences that exceed the DP cell limit, exercising the
        /// bidirectional middle-snake path (including its recursion).
        #[test]
        fn script_minimal_large(a in prop::collection::vec(0u32..6, 90..160),
                                b in prop::collection::vec(0u32..6, 90..160)) {
            check_script(&a, &b);
        }

        /// Full text-level round trip: parse numbering is consistent with the
        /// rendered diff and application reproduces the post-image exactly.
        #[test]
        fn text_round_trip(a in prop::collection::vec("[ab]{0,3}", 0..30),
                           b in prop::collection::vec("[ab]{0,3}", 0..30),
                           a_eol in any::<bool>(), b_eol in any::<bool>()) {
            let mut before = a.join("\n");
            if !a.is_empty() && a_eol { before.push('\n'); }
            let mut after = b.join("\n");
            if !b.is_empty() && b_eol { after.push('\n'); }
            let diff = unified_file_diff(Some("f"), Some("f"), Some(&before), Some(&after));
            let rebuilt = apply_unified(&diff, &before).unwrap();
            prop_assert_eq!(&rebuilt, &after);
            // Added/deleted numbering refers to real lines of the images.
            let parsed = parse_diff(&diff).unwrap();
            let before_lines = split_lines(&before);
            let after_lines = split_lines(&after);
            for (no, text) in &parsed.deleted {
                prop_assert_eq!(before_lines[(*no - 1) as usize].text, text.as_str());
            }
            for (no, text) in &parsed.added {
                prop_assert_eq!(after_lines[(*no - 1) as usize].text, text.as_str());
            }
        }

        /// The lossy parsed-structure application is exact for
        /// newline-terminated content.
        #[test]
        fn parsed_apply_round_trip(a in prop::collection::vec("[abc]{0,2}", 0..25),
                                   b in prop::collection::vec("[abc]{0,2}", 0..25)) {
            let before = lines_of(&a.iter().map(String::as_str).collect::<Vec<_>>());
            let after = lines_of(&b.iter().map(String::as_str).collect::<Vec<_>>());
            let diff = unified_file_diff(Some("f"), Some("f"), Some(&before), Some(&after));
            let parsed = parse_diff(&diff).unwrap();
            prop_assert_eq!(apply_parsed(&parsed, &before), after);
        }
    }
}
