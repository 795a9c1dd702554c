use scraper::{ElementRef, Html, Node, Selector};

use super::{Article, IngestError};

/// Pages yielding fewer words than this are rejected.
pub const MIN_ARTICLE_WORDS: usize = 30;

const SKIP: &[&str] = &[
    "script", "style", "noscript", "template", "nav", "aside", "footer", "form", "svg", "iframe", "button",
    "select", "textarea",
];
const BLOCKS: &[&str] = &[
    "p", "h1", "h2", "h3", "h4", "h5", "h6", "li", "blockquote", "pre", "dd", "dt", "figcaption",
];

/// Extracts the readable article body from an HTML page.
///
/// The content region is the first `<article>`, else `<main>` (or
/// `[role=main]`), else the container with the most paragraph text, else
/// `<body>`. Inside it, the text of each content block (paragraphs, headings,
/// list items, quotes) becomes one paragraph; scripts, styles, navigation and
/// asides are dropped.
pub fn extract_article(html: &str, url: Option<&str>) -> Result<Article, IngestError> {
    let doc = Html::parse_document(html);
    let region = content_region(&doc);

    let mut paragraphs = Vec::new();
    collect_blocks(region, &mut paragraphs);
    if paragraphs.is_empty() {
        let text = collapse(&element_text(region));
        if !text.is_empty() {
            paragraphs.push((text, css_path(region)));
        }
    }

    let words: usize = paragraphs.iter().map(|(p, _)| p.split_whitespace().count()).sum();
    if words < MIN_ARTICLE_WORDS {
        return Err(IngestError::NoReadableContent);
    }

    let title = select_first(&doc, "title")
        .or_else(|| select_first(&doc, "h1"))
        .map(|e| collapse(&element_text(e)))
        .filter(|t| !t.is_empty());

    Ok(Article::from_paragraphs(paragraphs, url.map(str::to_string), title))
}

fn select_first<'a>(doc: &'a Html, css: &str) -> Option<ElementRef<'a>> {
    let sel = Selector::parse(css).expect("static selector");
    doc.select(&sel).next()
}

fn content_region(doc: &Html) -> ElementRef<'_> {
    for css in ["article", "main", "[role=main]"] {
        if let Some(e) = select_first(doc, css) {
            if !is_skipped(e) && !collapse(&element_text(e)).is_empty() {
                return e;
            }
        }
    }
    let containers = Selector::parse("div, section, td").expect("static selector");
    let best = doc
        .select(&containers)
        .filter(|e| !is_skipped(*e))
        .map(|e| (paragraph_density(e), e))
        .filter(|(score, _)| *score > 0)
        // first maximum in document order wins
        .fold(None::<(usize, ElementRef)>, |acc, (s, e)| match acc {
            Some((bs, _)) if bs >= s => acc,
            _ => Some((s, e)),
        });
    if let Some((_, e)) = best {
        return e;
    }
    select_first(doc, "body").unwrap_or_else(|| doc.root_element())
}

/// Words in direct `<p>` children.
fn paragraph_density(e: ElementRef) -> usize {
    e.children()
        .filter_map(ElementRef::wrap)
        .filter(|c| c.value().name() == "p")
        .map(|c| element_text(c).split_whitespace().count())
        .sum()
}

fn is_skipped(e: ElementRef) -> bool {
    std::iter::successors(Some(e), |x| x.parent().and_then(ElementRef::wrap))
        .any(|x| SKIP.contains(&x.value().name()))
}

fn collect_blocks(e: ElementRef, out: &mut Vec<(String, String)>) {
    for child in e.children().filter_map(ElementRef::wrap) {
        let name = child.value().name();
        if SKIP.contains(&name) {
            continue;
        }
        if BLOCKS.contains(&name) {
            let text = collapse(&element_text(child));
            if !text.is_empty() {
                out.push((text, css_path(child)));
            }
        } else {
            collect_blocks(child, out);
        }
    }
}

/// Concatenated text below `e`, skipping non-content subtrees. Block-level
/// children are separated by a space so adjacent words do not fuse.
fn element_text(e: ElementRef) -> String {
    let mut out = String::new();
    push_text(e, &mut out);
    out
}

fn push_text(e: ElementRef, out: &mut String) {
    for child in e.children() {
        match child.value() {
            Node::Text(t) => out.push_str(t),
            Node::Element(el) => {
                if SKIP.contains(&el.name()) {
                    continue;
                }
                if el.name() == "br" {
                    out.push(' ');
                }
                if let Some(ce) = ElementRef::wrap(child) {
                    let block = !matches!(
                        el.name(),
                        "a" | "b" | "i" | "em" | "strong" | "span" | "mark" | "small" | "sub" | "sup" | "u" | "q"
                            | "abbr" | "cite" | "code" | "time"
                    );
                    if block {
                        out.push(' ');
                    }
                    push_text(ce, out);
                    if block {
                        out.push(' ');
                    }
                }
            }
            _ => {}
        }
    }
}

fn collapse(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}

/// Selector path such as `html > body > article > p:nth-of-type(2)`.
fn css_path(e: ElementRef) -> String {
    let mut parts: Vec<String> = std::iter::successors(Some(e), |x| x.parent().and_then(ElementRef::wrap))
        .map(|x| {
            let name = x.value().name();
            if matches!(name, "html" | "body") {
                return name.to_string();
            }
            let nth = 1 + x
                .prev_siblings()
                .filter_map(ElementRef::wrap)
                .filter(|s| s.value().name() == name)
                .count();
            format!("{name}:nth-of-type({nth})")
        })
        .collect();
    parts.reverse();
    parts.join(" > ")
}
