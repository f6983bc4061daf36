use super::emoji::{detect_emoji, is_emoji_modifier};

/// One piece of a post, as seen by the normalization pipelines.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Segment<'a> {
    Text(&'a str),
    Url,
    Mention,
    /// Hashtag body without the leading `#`.
    Hashtag(&'a str),
    /// A run of consecutive emoji scalars (with their modifiers).
    Emoji,
}

const URL_PREFIXES: &[&str] = &["https://", "http://", "www.", "t.co/"];

fn is_word_char(c: char) -> bool {
    c.is_alphanumeric() || c == '_'
}

fn starts_with_ignore_case(rest: &str, prefix: &str) -> bool {
    rest.get(..prefix.len())
        .is_some_and(|head| head.eq_ignore_ascii_case(prefix))
}

/// Splits `text` into URL, mention, hashtag, emoji and plain-text segments.
///
/// URLs, mentions and hashtags are only recognized at the start of a word,
/// so `a@b.com` and `x#y` stay plain text. URLs run to the next whitespace
/// or emoji.
pub(crate) fn segments(text: &str) -> Vec<Segment<'_>> {
    let mut out = Vec::new();
    let mut text_start = 0;
    let mut prev: Option<char> = None;
    let mut i = 0;

    while i < text.len() {
        let rest = &text[i..];
        let c = rest.chars().next().expect("non-empty rest");
        let at_word_start = prev.is_none_or(|p| !is_word_char(p));

        let special: Option<(Segment<'_>, usize)> = if detect_emoji(c) {
            let len = rest
                .char_indices()
                .find(|&(_, ch)| !(detect_emoji(ch) || is_emoji_modifier(ch)))
                .map_or(rest.len(), |(j, _)| j);
            Some((Segment::Emoji, len))
        } else if at_word_start && URL_PREFIXES.iter().any(|p| starts_with_ignore_case(rest, p)) {
            let len = rest
                .char_indices()
                .find(|&(_, ch)| ch.is_whitespace() || detect_emoji(ch))
                .map_or(rest.len(), |(j, _)| j);
            Some((Segment::Url, len))
        } else if at_word_start && (c == '@' || c == '#') {
            let body = &rest[1..];
            let body_len = body
                .char_indices()
                .find(|&(_, ch)| {
                    if c == '@' {
                        !(ch.is_ascii_alphanumeric() || ch == '_')
                    } else {
                        !is_word_char(ch)
                    }
                })
                .map_or(body.len(), |(j, _)| j);
            if body_len == 0 {
                None
            } else if c == '@' {
                Some((Segment::Mention, 1 + body_len))
            } else {
                Some((Segment::Hashtag(&body[..body_len]), 1 + body_len))
            }
        } else {
            None
        };

        match special {
            Some((seg, len)) => {
                if text_start < i {
                    out.push(Segment::Text(&text[text_start..i]));
                }
                out.push(seg);
                i += len;
                text_start = i;
                prev = text[..i].chars().next_back();
            }
            None => {
                i += c.len_utf8();
                prev = Some(c);
            }
        }
    }
    if text_start < text.len() {
        out.push(Segment::Text(&text[text_start..]));
    }
    out
}

fn is_apostrophe(c: char) -> bool {
    c == '\'' || c == '\u{2019}'
}

/// Maximal runs of alphanumeric characters; an apostrophe is kept when it
/// sits between two alphanumerics (`don't`, `women's`).
pub(crate) fn words(text: &str) -> impl Iterator<Item = &str> {
    let chars: Vec<(usize, char)> = text.char_indices().collect();
    let mut spans = Vec::new();
    let mut start: Option<usize> = None;
    for (k, &(idx, c)) in chars.iter().enumerate() {
        let inside = c.is_alphanumeric()
            || (is_apostrophe(c) && start.is_some() && chars.get(k + 1).is_some_and(|&(_, n)| n.is_alphanumeric()));
        match (inside, start) {
            (true, None) => start = Some(idx),
            (false, Some(s)) => {
                spans.push((s, idx));
                start = None;
            }
            _ => {}
        }
    }
    if let Some(s) = start {
        spans.push((s, text.len()));
    }
    spans.into_iter().map(move |(a, b)| &text[a..b])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn recognizes_each_segment_kind() {
        let segs = segments("Check http://t.co/xQgeMny5 @Channel9 #breastcancer 😀");
        assert_eq!(
            segs,
            vec![
                Segment::Text("Check "),
                Segment::Url,
                Segment::Text(" "),
                Segment::Mention,
                Segment::Text(" "),
                Segment::Hashtag("breastcancer"),
                Segment::Text(" "),
                Segment::Emoji,
            ]
        );
    }

    #[test]
    fn email_and_inner_hash_are_text() {
        assert_eq!(segments("a@b.com x#y"), vec![Segment::Text("a@b.com x#y")]);
    }

    #[test]
    fn bare_symbols_are_text() {
        assert_eq!(segments("# @ #"), vec![Segment::Text("# @ #")]);
    }

    #[test]
    fn emoji_run_with_joiners_is_one_segment() {
        let segs = segments("a\u{2764}\u{FE0F}\u{1F600}b");
        assert_eq!(segs, vec![Segment::Text("a"), Segment::Emoji, Segment::Text("b")]);
    }

    #[test]
    fn url_stops_at_emoji() {
        assert_eq!(segments("https://x.org/a😀"), vec![Segment::Url, Segment::Emoji]);
    }

    #[test]
    fn words_keep_inner_apostrophes_only() {
        let w: Vec<_> = words("don't 'quoted' women’s, a-b").collect();
        assert_eq!(w, vec!["don't", "quoted", "women’s", "a", "b"]);
    }
}
