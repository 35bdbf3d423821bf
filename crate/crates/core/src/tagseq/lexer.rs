use std::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Tag {
    Think,
    Evidence,
    Answer,
    DefectCate,
    Timestamp,
    Explanation,
    LocatedFrame,
    Point2d,
}

impl Tag {
    pub(crate) const BLOCK_SLOTS: [Tag; 5] =
        [Tag::DefectCate, Tag::Timestamp, Tag::Explanation, Tag::LocatedFrame, Tag::Point2d];

    pub(crate) fn name(self) -> &'static str {
        match self {
            Tag::Think => "think",
            Tag::Evidence => "evidence",
            Tag::Answer => "answer",
            Tag::DefectCate => "defect_cate",
            Tag::Timestamp => "timestamp",
            Tag::Explanation => "explanation",
            Tag::LocatedFrame => "located_frame",
            Tag::Point2d => "point_2d",
        }
    }

    /// Position inside an evidence block, for the five per-defect tags.
    pub(crate) fn slot(self) -> Option<usize> {
        Self::BLOCK_SLOTS.iter().position(|t| *t == self)
    }

    fn from_loose(name: &str) -> Option<Tag> {
        let key: String = name
            .chars()
            .map(|c| if c == ' ' || c == '-' { '_' } else { c.to_ascii_lowercase() })
            .collect();
        let tag = match key.as_str() {
            "think" => Tag::Think,
            "evidence" => Tag::Evidence,
            "answer" => Tag::Answer,
            "defect_cate" => Tag::DefectCate,
            "timestamp" => Tag::Timestamp,
            "explanation" => Tag::Explanation,
            "located_frame" => Tag::LocatedFrame,
            "point_2d" => Tag::Point2d,
            _ => return None,
        };
        Some(tag)
    }
}

impl fmt::Display for Tag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Token<'a> {
    Open { tag: Tag, exact: bool, offset: usize },
    Close { tag: Tag, exact: bool, offset: usize },
    Text { text: &'a str, offset: usize },
}

impl Token<'_> {
    pub(crate) fn offset(&self) -> usize {
        match self {
            Token::Open { offset, .. } | Token::Close { offset, .. } | Token::Text { offset, .. } => *offset,
        }
    }
}

const MAX_TAG_NAME: usize = 16;

// Recognizes `<name>` / `</name>` at `at` (which must index a '<').
fn tag_at(src: &str, at: usize) -> Option<(Token<'static>, usize)> {
    let bytes = src.as_bytes();
    let mut i = at + 1;
    let closing = bytes.get(i) == Some(&b'/');
    if closing {
        i += 1;
    }
    let name_start = i;
    while i < bytes.len() && i - name_start <= MAX_TAG_NAME {
        let b = bytes[i];
        if b == b'>' {
            break;
        }
        if !(b.is_ascii_alphanumeric() || b == b'_' || b == b' ' || b == b'-') {
            return None;
        }
        i += 1;
    }
    if bytes.get(i) != Some(&b'>') {
        return None;
    }
    let name = &src[name_start..i];
    let tag = Tag::from_loose(name)?;
    let exact = name == tag.name();
    let token = if closing {
        Token::Close { tag, exact, offset: at }
    } else {
        Token::Open { tag, exact, offset: at }
    };
    Some((token, i + 1))
}

/// Splits input into known tags and the text between them. Anything that is
/// not one of the eight known tags stays text.
pub(crate) fn tokenize(src: &str) -> Vec<Token<'_>> {
    let mut out = Vec::new();
    let mut text_start = 0;
    let mut search = 0;
    while let Some(rel) = src[search..].find('<') {
        let at = search + rel;
        match tag_at(src, at) {
            Some((token, next)) => {
                if at > text_start {
                    out.push(Token::Text { text: &src[text_start..at], offset: text_start });
                }
                out.push(token);
                text_start = next;
                search = next;
            }
            None => search = at + 1,
        }
    }
    if text_start < src.len() {
        out.push(Token::Text { text: &src[text_start..], offset: text_start });
    }
    out
}

/// True when `text` contains something the lexer would read as a tag.
pub(crate) fn contains_tag(text: &str) -> bool {
    tokenize(text).iter().any(|t| !matches!(t, Token::Text { .. }))
}
