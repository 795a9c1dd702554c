//! Static renderings of an analysis: HTML with `<mark>` highlights and
//! hover titles, or ANSI-colored terminal text with numbered notes.

use std::fmt::Write as _;

use propscan_core::ingest::escape_html;
use propscan_core::pipeline::Verdict;
use propscan_core::text::char_slice;

use crate::api::AnalyzeResponse;
use crate::config::ServerConfig;

/// Non-overlapping highlight ranges `(start, end, annotation index)`. Later
/// annotations that overlap an earlier one are clipped to start after it.
pub fn highlight_segments(resp: &AnalyzeResponse) -> Vec<(usize, usize, usize)> {
    let mut spans: Vec<(usize, usize, usize)> = resp
        .annotations
        .iter()
        .enumerate()
        .filter_map(|(i, a)| Some((a.start?, a.end?, i)))
        .collect();
    spans.sort();
    let mut out = Vec::new();
    let mut cursor = 0;
    for (start, end, i) in spans {
        let s = start.max(cursor);
        if s < end {
            out.push((s, end, i));
            cursor = end;
        }
    }
    out
}

/// Paragraph ranges with trailing separators removed.
fn paragraphs(resp: &AnalyzeResponse) -> Vec<(usize, usize)> {
    resp.paragraph_map
        .iter()
        .map(|p| {
            let body = char_slice(&resp.text, p.start, p.end);
            (p.start, p.start + body.trim_end().chars().count())
        })
        .filter(|(s, e)| s < e)
        .collect()
}

/// Calls `emit(text, Some(annotation))` for highlighted pieces and
/// `emit(text, None)` for the rest of paragraph `[ps, pe)`.
fn walk_paragraph(
    resp: &AnalyzeResponse,
    segments: &[(usize, usize, usize)],
    (ps, pe): (usize, usize),
    mut emit: impl FnMut(&str, Option<usize>),
) {
    let mut pos = ps;
    for &(s, e, i) in segments.iter().filter(|(s, e, _)| *e > ps && *s < pe) {
        let (s, e) = (s.max(ps), e.min(pe));
        if pos < s {
            emit(char_slice(&resp.text, pos, s), None);
        }
        emit(char_slice(&resp.text, s, e), Some(i));
        pos = e;
    }
    if pos < pe {
        emit(char_slice(&resp.text, pos, pe), None);
    }
}

pub fn to_html(resp: &AnalyzeResponse, title: Option<&str>, config: &ServerConfig) -> String {
    let segments = highlight_segments(resp);
    let mut out = String::from("<!DOCTYPE html>\n<html lang=\"en\">\n<head>\n<meta charset=\"utf-8\">\n");
    let _ = writeln!(out, "<title>{}</title>", escape_html(title.unwrap_or("Analysis")));
    out.push_str("<style>\nbody { font-family: Georgia, serif; max-width: 42em; margin: 2em auto; line-height: 1.5; }\nmark.propscan { border-bottom: 2px dotted #555; padding: 0 1px; cursor: help; }\n.propscan-notes { border-top: 1px solid #ccc; margin-top: 2em; font-size: 0.9em; }\n</style>\n</head>\n<body>\n<article>\n");
    for para in paragraphs(resp) {
        out.push_str("<p>");
        walk_paragraph(resp, &segments, para, |text, ann| match ann {
            None => out.push_str(&escape_html(text)),
            Some(i) => {
                let a = &resp.annotations[i];
                let _ = write!(
                    out,
                    "<mark class=\"propscan\" data-technique=\"{}\" style=\"background-color: {}\" title=\"{}: {}\">{}</mark>",
                    escape_html(&a.technique),
                    escape_html(config.color_for(&a.technique.as_str().into())),
                    escape_html(&a.display_name),
                    escape_html(&a.explanation),
                    escape_html(text)
                );
            }
        });
        out.push_str("</p>\n");
    }
    out.push_str("</article>\n");

    let unplaced: Vec<_> = resp.annotations.iter().filter(|a| a.start.is_none()).collect();
    if !unplaced.is_empty() {
        out.push_str("<section class=\"propscan-notes\">\n<h2>Findings without a located passage</h2>\n<ul>\n");
        for a in unplaced {
            let _ = writeln!(out, "<li><strong>{}</strong>: {}</li>", escape_html(&a.display_name), escape_html(&a.explanation));
        }
        out.push_str("</ul>\n</section>\n");
    }
    let verdict = match resp.verdict {
        Verdict::PropagandaFound => format!("{} technique(s) flagged", resp.annotations.len()),
        Verdict::NoneFound => "no propaganda detected".to_string(),
    };
    let _ = writeln!(
        out,
        "<footer class=\"propscan-notes\"><p>{verdict}. Estimated cost {}. Templates {}.</p></footer>",
        resp.cost.total_cost,
        escape_html(&resp.template_version)
    );
    out.push_str("</body>\n</html>\n");
    out
}

const ANSI_COLORS: [&str; 6] = ["\x1b[43;30m", "\x1b[46;30m", "\x1b[45;30m", "\x1b[42;30m", "\x1b[44;37m", "\x1b[41;37m"];
const ANSI_RESET: &str = "\x1b[0m";

pub fn to_ansi(resp: &AnalyzeResponse) -> String {
    let segments = highlight_segments(resp);
    let mut out = String::new();
    for (n, para) in paragraphs(resp).into_iter().enumerate() {
        if n > 0 {
            out.push_str("\n\n");
        }
        walk_paragraph(resp, &segments, para, |text, ann| match ann {
            None => out.push_str(text),
            Some(i) => {
                let _ = write!(out, "{}{}{}[{}]", ANSI_COLORS[i % ANSI_COLORS.len()], text, ANSI_RESET, i + 1);
            }
        });
    }
    out.push_str("\n\n");
    if resp.annotations.is_empty() {
        out.push_str("No propaganda detected.\n");
    }
    for (i, a) in resp.annotations.iter().enumerate() {
        let place = if a.start.is_some() { "" } else { " (passage not located)" };
        let _ = writeln!(out, "[{}] {}{}: {}", i + 1, a.display_name, place, a.explanation);
    }
    for w in &resp.warnings {
        let _ = writeln!(out, "warning: {w}");
    }
    let _ = writeln!(out, "cost {}", resp.cost.total_cost);
    out
}
