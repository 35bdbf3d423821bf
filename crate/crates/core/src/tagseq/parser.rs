use std::collections::BTreeSet;

use super::lexer::{tokenize, Tag, Token};
use super::{Diagnostic, EvidenceBlock, ParseMode, ParseOutcome, ReasoningTrace, Severity, TraceTimestamp};
use crate::evidence::{DefectCategory, Verdict};

const NONE: &str = "None";

/// Parses a reasoning trace.
///
/// Strict mode stops at the first deviation from the canonical grammar.
/// Lenient mode repairs what it can and records a warning for each repair;
/// it only fails when no verdict can be recovered at all.
pub fn parse_trace(text: &str, mode: ParseMode) -> ParseOutcome {
    let mut parser = Parser { tokens: tokenize(text), pos: 0, end: text.len(), mode, diags: Vec::new() };
    let trace = parser.parse().ok();
    ParseOutcome { trace, diagnostics: parser.diags }
}

/// Byte-level entry point. Invalid UTF-8 is an error in strict mode and is
/// replaced (with a warning) in lenient mode.
pub fn parse_trace_bytes(bytes: &[u8], mode: ParseMode) -> ParseOutcome {
    match std::str::from_utf8(bytes) {
        Ok(text) => parse_trace(text, mode),
        Err(err) => {
            let diag = |severity| Diagnostic {
                offset: err.valid_up_to(),
                severity,
                code: "invalid-utf8",
                message: "input is not valid UTF-8".into(),
            };
            match mode {
                ParseMode::Strict => ParseOutcome { trace: None, diagnostics: vec![diag(Severity::Error)] },
                ParseMode::Lenient => {
                    let text = String::from_utf8_lossy(bytes);
                    let mut outcome = parse_trace(&text, mode);
                    outcome.diagnostics.insert(0, diag(Severity::Warning));
                    outcome
                }
            }
        }
    }
}

/// Maps a free-form verdict string to a verdict by substring match.
pub fn coerce_verdict(text: &str) -> Option<Verdict> {
    let norm: String = text
        .chars()
        .map(|c| if c == '-' || c == '_' { ' ' } else { c.to_ascii_lowercase() })
        .collect();
    let norm = norm.split_whitespace().collect::<Vec<_>>().join(" ");
    const AI: [&str; 5] = ["ai generated", "generated", "synthetic", "fake", "aigc"];
    const REAL: [&str; 3] = ["real", "authentic", "genuine"];
    if AI.iter().any(|k| norm.contains(k)) {
        Some(Verdict::AiGenerated)
    } else if REAL.iter().any(|k| norm.contains(k)) {
        Some(Verdict::Real)
    } else {
        None
    }
}

/// Parses a plain decimal (`12`, `3.5`, `0.125`) into centiseconds, rounding
/// half-up past the second decimal.
pub(crate) fn decimal_to_centis(text: &str) -> Option<u64> {
    let (int_part, frac_part) = match text.split_once('.') {
        Some((i, f)) => (i, f),
        None => (text, ""),
    };
    if int_part.is_empty() || int_part.len() > 12 || !int_part.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    if !frac_part.bytes().all(|b| b.is_ascii_digit()) || (text.contains('.') && frac_part.is_empty()) {
        return None;
    }
    let whole: u64 = int_part.parse().ok()?;
    let digit = |i: usize| frac_part.as_bytes().get(i).map_or(0, |b| u64::from(b - b'0'));
    let mut cs = whole * 100 + digit(0) * 10 + digit(1);
    if digit(2) >= 5 {
        cs += 1;
    }
    Some(cs)
}

struct Fatal;

type PResult<T> = Result<T, Fatal>;

struct Parser<'a> {
    tokens: Vec<Token<'a>>,
    pos: usize,
    end: usize,
    mode: ParseMode,
    diags: Vec<Diagnostic>,
}

#[derive(Default)]
struct RawBlock {
    slots: [Option<(String, usize)>; 5],
    offset: usize,
}

impl RawBlock {
    fn filled(&self) -> usize {
        self.slots.iter().filter(|s| s.is_some()).count()
    }
}

impl<'a> Parser<'a> {
    fn repair(&mut self, offset: usize, code: &'static str, message: impl Into<String>) -> PResult<()> {
        let severity = match self.mode {
            ParseMode::Strict => Severity::Error,
            ParseMode::Lenient => Severity::Warning,
        };
        self.diags.push(Diagnostic { offset, severity, code, message: message.into() });
        match self.mode {
            ParseMode::Strict => Err(Fatal),
            ParseMode::Lenient => Ok(()),
        }
    }

    fn fatal(&mut self, offset: usize, code: &'static str, message: impl Into<String>) -> Fatal {
        self.diags.push(Diagnostic { offset, severity: Severity::Error, code, message: message.into() });
        Fatal
    }

    fn peek(&self) -> Option<Token<'a>> {
        self.tokens.get(self.pos).copied()
    }

    fn offset(&self) -> usize {
        self.peek().map_or(self.end, |t| t.offset())
    }

    fn at_open(&self, tag: Tag) -> bool {
        matches!(self.peek(), Some(Token::Open { tag: t, .. }) if t == tag)
    }

    // Consumes the current tag token, flagging non-canonical spellings.
    fn bump_tag(&mut self) -> PResult<()> {
        if let Some(tok) = self.peek() {
            self.pos += 1;
            match tok {
                Token::Open { tag, exact: false, offset } => {
                    self.repair(offset, "noncanonical-tag", format!("tag should be spelled <{tag}>"))?
                }
                Token::Close { tag, exact: false, offset } => {
                    self.repair(offset, "noncanonical-tag", format!("tag should be spelled </{tag}>"))?
                }
                _ => {}
            }
        }
        Ok(())
    }

    fn skip_blank(&mut self, context: &str) -> PResult<()> {
        while let Some(Token::Text { text, offset }) = self.peek() {
            self.pos += 1;
            if !text.trim().is_empty() {
                self.repair(offset, "stray-text", format!("unexpected text {context}"))?;
            }
        }
        Ok(())
    }

    fn parse(&mut self) -> PResult<ReasoningTrace> {
        self.skip_blank("before <think>")?;

        let think = if self.at_open(Tag::Think) {
            let (content, offset) = self.parse_element(Tag::Think)?;
            if content.is_empty() {
                self.repair(offset, "empty-think", "think section is empty")?;
            }
            content
        } else {
            self.repair(self.offset(), "missing-think", "missing <think> section")?;
            String::new()
        };
        self.skip_blank("between </think> and <evidence>")?;

        let evidence = if self.at_open(Tag::Evidence) {
            self.bump_tag()?;
            self.parse_blocks(true)?
        } else if matches!(self.peek(), Some(Token::Open { tag, .. }) if tag.slot().is_some()) {
            self.repair(self.offset(), "missing-evidence-tag", "evidence blocks without an <evidence> wrapper")?;
            self.parse_blocks(false)?
        } else {
            self.repair(self.offset(), "missing-evidence", "missing <evidence> section")?;
            Vec::new()
        };
        let answer_ahead = self.tokens[self.pos..].iter().any(|t| matches!(t, Token::Open { tag: Tag::Answer, .. }));
        let answer = if answer_ahead {
            while let Some(tok) = self.peek().filter(|_| !self.at_open(Tag::Answer)) {
                self.pos += 1;
                match tok {
                    Token::Text { text, .. } if text.trim().is_empty() => {}
                    other => self.repair(other.offset(), "stray-text", "unexpected content before <answer>")?,
                }
            }
            self.parse_answer()?
        } else {
            self.recover_answer()?
        };

        while let Some(tok) = self.peek() {
            self.pos += 1;
            match tok {
                Token::Text { text, .. } if text.trim().is_empty() => {}
                Token::Text { offset, .. } => self.repair(offset, "trailing-text", "text after </answer>")?,
                other => self.repair(other.offset(), "trailing-tag", "tag after </answer>")?,
            }
        }

        Ok(ReasoningTrace { think, evidence, answer })
    }

    // `<tag>` text `</tag>`; returns trimmed content and the content offset.
    fn parse_element(&mut self, tag: Tag) -> PResult<(String, usize)> {
        let open_offset = self.offset();
        self.bump_tag()?;
        let mut content = String::new();
        let mut content_offset = None;
        loop {
            match self.peek() {
                Some(Token::Text { text, offset }) => {
                    content_offset.get_or_insert(offset);
                    content.push_str(text);
                    self.pos += 1;
                }
                Some(Token::Close { tag: t, .. }) if t == tag => {
                    self.bump_tag()?;
                    break;
                }
                Some(other) => {
                    self.repair(other.offset(), "unclosed-tag", format!("unclosed {tag} tag"))?;
                    break;
                }
                None => {
                    self.repair(self.end, "unclosed-tag", format!("unclosed {tag} tag"))?;
                    break;
                }
            }
        }
        let offset = content_offset.unwrap_or(open_offset);
        Ok((content.trim().to_string(), offset))
    }

    fn parse_blocks(&mut self, wrapped: bool) -> PResult<Vec<EvidenceBlock>> {
        let mut blocks = Vec::new();
        let mut cur = RawBlock::default();
        loop {
            let Some(tok) = self.peek() else {
                if wrapped {
                    self.repair(self.end, "unclosed-tag", "unclosed evidence tag")?;
                }
                break;
            };
            match tok {
                Token::Text { text, offset } => {
                    self.pos += 1;
                    if !text.trim().is_empty() {
                        self.repair(offset, "stray-text", "unexpected text inside <evidence>")?;
                    }
                }
                Token::Close { tag: Tag::Evidence, offset, .. } => {
                    if !wrapped {
                        self.repair(offset, "stray-close-tag", "</evidence> without <evidence>")?;
                    }
                    self.bump_tag()?;
                    break;
                }
                Token::Open { tag: Tag::Answer, offset, .. } => {
                    if wrapped {
                        self.repair(offset, "unclosed-tag", "unclosed evidence tag")?;
                    }
                    break;
                }
                Token::Open { tag, offset, .. } => match tag.slot() {
                    Some(slot) => {
                        if cur.slots[slot].is_some() {
                            let done = std::mem::take(&mut cur);
                            blocks.push(self.finish_block(done)?);
                        }
                        if cur.filled() == 0 {
                            cur.offset = offset;
                        }
                        if slot != cur.filled() {
                            let expected = Tag::BLOCK_SLOTS[cur.filled()];
                            self.repair(offset, "out-of-order-tag", format!("<{tag}> where <{expected}> was expected"))?;
                        }
                        let content = self.parse_element(tag)?;
                        cur.slots[slot] = Some(content);
                    }
                    None => {
                        self.pos += 1;
                        self.repair(offset, "unexpected-tag", format!("<{tag}> inside <evidence>"))?;
                    }
                },
                Token::Close { tag, offset, .. } => {
                    self.pos += 1;
                    self.repair(offset, "stray-close-tag", format!("</{tag}> without matching open tag"))?;
                }
            }
        }
        if cur.filled() > 0 {
            blocks.push(self.finish_block(cur)?);
        }
        Ok(blocks)
    }

    fn finish_block(&mut self, raw: RawBlock) -> PResult<EvidenceBlock> {
        let mut slots: Vec<Option<(String, usize)>> = raw.slots.into_iter().collect();
        for (i, slot) in slots.iter().enumerate() {
            if slot.is_none() {
                self.repair(raw.offset, "incomplete-block", format!("evidence block missing <{}>", Tag::BLOCK_SLOTS[i]))?;
            }
        }
        let mut take = |i: usize| slots[i].take();

        let categories = match take(0) {
            Some((text, off)) => self.parse_categories(&text, off)?,
            None => None,
        };
        let timestamp = match take(1) {
            Some((text, off)) => self.parse_timestamp(&text, off)?,
            None => None,
        };
        let explanation = match take(2) {
            Some((text, off)) => {
                if text.is_empty() {
                    self.repair(off, "empty-explanation", "explanation is empty")?;
                }
                text
            }
            None => String::new(),
        };
        let located_frame = match take(3) {
            Some((text, off)) => self.parse_frame(&text, off)?,
            None => None,
        };
        let points = match take(4) {
            Some((text, off)) => self.parse_points(&text, off)?,
            None => None,
        };

        let block = EvidenceBlock { categories, timestamp, explanation, located_frame, points };
        if !block.is_placeholder() && !block.is_substantive() {
            self.repair(raw.offset, "partial-placeholder", "block mixes None placeholders with values")?;
        }
        Ok(block)
    }

    // Returns Some(is_exact) when the text is a None placeholder.
    fn none_placeholder(&mut self, text: &str, offset: usize) -> PResult<bool> {
        if text == NONE {
            return Ok(true);
        }
        let lower = text.to_ascii_lowercase();
        if text.is_empty() || matches!(lower.as_str(), "none" | "n/a" | "null" | "na") {
            self.repair(offset, "noncanonical-none", format!("placeholder should be '{NONE}'"))?;
            return Ok(true);
        }
        Ok(false)
    }

    fn parse_categories(&mut self, text: &str, offset: usize) -> PResult<Option<BTreeSet<DefectCategory>>> {
        if self.none_placeholder(text, offset)? {
            return Ok(None);
        }
        let mut set = BTreeSet::new();
        for part in text.split(',').map(str::trim) {
            let found: Vec<DefectCategory> = match DefectCategory::from_loose(part) {
                Some(c) => vec![c],
                None => {
                    let pieces: Vec<&str> = part.split([';', '/', '|']).map(str::trim).filter(|p| !p.is_empty()).collect();
                    let parsed: Option<Vec<DefectCategory>> = pieces.iter().map(|p| DefectCategory::from_loose(p)).collect();
                    match parsed {
                        Some(cats) if pieces.len() > 1 => {
                            self.repair(offset, "noncanonical-separator", "categories should be separated by ','")?;
                            cats
                        }
                        _ => {
                            self.repair(offset, "unknown-category", format!("unknown defect category '{part}'"))?;
                            Vec::new()
                        }
                    }
                }
            };
            for c in found {
                if !set.insert(c) {
                    self.repair(offset, "duplicate-category", format!("category '{c}' listed twice"))?;
                }
            }
        }
        Ok(if set.is_empty() { None } else { Some(set) })
    }

    fn parse_timestamp(&mut self, text: &str, offset: usize) -> PResult<Option<TraceTimestamp>> {
        if self.none_placeholder(text, offset)? {
            return Ok(None);
        }
        if let Some(ts) = canonical_timestamp(text) {
            return Ok(Some(ts));
        }
        match loose_timestamp(text) {
            Some(ts) => {
                self.repair(offset, "noncanonical-timestamp", format!("timestamp should read like {}", ts.canonical()))?;
                Ok(Some(ts))
            }
            None => {
                self.repair(offset, "bad-timestamp", format!("unreadable timestamp '{text}'"))?;
                Ok(None)
            }
        }
    }

    fn parse_frame(&mut self, text: &str, offset: usize) -> PResult<Option<u32>> {
        if self.none_placeholder(text, offset)? {
            return Ok(None);
        }
        if !text.is_empty() && text.bytes().all(|b| b.is_ascii_digit()) {
            if let Ok(v) = text.parse::<u32>() {
                return Ok(Some(v));
            }
        }
        let digits: String = text
            .chars()
            .skip_while(|c| !c.is_ascii_digit())
            .take_while(|c| c.is_ascii_digit())
            .collect();
        match digits.parse::<u32>() {
            Ok(v) => {
                self.repair(offset, "noncanonical-frame", "located_frame should be a bare integer")?;
                Ok(Some(v))
            }
            Err(_) => {
                self.repair(offset, "bad-frame", format!("unreadable frame index '{text}'"))?;
                Ok(None)
            }
        }
    }

    fn parse_points(&mut self, text: &str, offset: usize) -> PResult<Option<Vec<(u32, u32)>>> {
        if self.none_placeholder(text, offset)? {
            return Ok(None);
        }
        if let Some(points) = pair_syntax(text) {
            return Ok(Some(points));
        }
        let numbers = loose_numbers(text);
        if numbers.len() >= 2 && numbers.len() % 2 == 0 {
            self.repair(offset, "noncanonical-points", "points should be written as (x, y) pairs")?;
            Ok(Some(numbers.chunks(2).map(|c| (c[0], c[1])).collect()))
        } else {
            self.repair(offset, "bad-points", format!("unreadable point list '{text}'"))?;
            Ok(None)
        }
    }

    fn parse_answer(&mut self) -> PResult<Verdict> {
        let (content, offset) = self.parse_element(Tag::Answer)?;
        for v in [Verdict::AiGenerated, Verdict::Real] {
            if content == v.answer_text() {
                return Ok(v);
            }
        }
        match coerce_verdict(&content) {
            Some(v) => {
                self.repair(offset, "coerced-answer", format!("answer '{content}' read as '{}'", v.answer_text()))?;
                Ok(v)
            }
            None => Err(self.fatal(offset, "unrecognized-answer", format!("answer '{content}' is not a verdict"))),
        }
    }

    fn recover_answer(&mut self) -> PResult<Verdict> {
        let offset = self.offset();
        self.repair(offset, "missing-answer", "missing answer tag")?;
        let mut rest = String::new();
        while let Some(tok) = self.peek() {
            if let Token::Text { text, .. } = tok {
                rest.push_str(text);
                rest.push(' ');
            }
            self.pos += 1;
        }
        coerce_verdict(&rest).ok_or_else(|| self.fatal(offset, "unrecoverable", "no answer tag and no recognizable verdict"))
    }
}

fn canonical_timestamp(text: &str) -> Option<TraceTimestamp> {
    let (a, b) = text.split_once("s-")?;
    let b = b.strip_suffix('s')?;
    let two_decimals = |s: &str| s.split_once('.').is_some_and(|(_, f)| f.len() == 2);
    if !two_decimals(a) || !two_decimals(b) {
        return None;
    }
    Some(TraceTimestamp::new(decimal_to_centis(a)?, decimal_to_centis(b)?))
}

fn loose_timestamp(text: &str) -> Option<TraceTimestamp> {
    let compact: String = text.chars().filter(|c| !c.is_whitespace()).collect::<String>().to_lowercase();
    let compact = compact.replace(['\u{2013}', '\u{2014}', '~'], "-").replace("to", "-");
    let (a, b) = compact.split_once('-')?;
    let seconds = |s: &str| -> Option<u64> {
        let s = s.trim_end_matches("sec").trim_end_matches('s');
        match s.split_once(':') {
            Some((m, sec)) => {
                let minutes: u64 = m.parse().ok()?;
                Some(minutes * 6000 + decimal_to_centis(sec)?)
            }
            None => decimal_to_centis(s),
        }
    };
    Some(TraceTimestamp::new(seconds(a)?, seconds(b)?))
}

// `(x, y), (x, y)` with flexible whitespace.
fn pair_syntax(text: &str) -> Option<Vec<(u32, u32)>> {
    let mut points = Vec::new();
    let mut rest = text.trim();
    loop {
        rest = rest.strip_prefix('(')?;
        let (inner, after) = rest.split_once(')')?;
        let (x, y) = inner.split_once(',')?;
        let num = |s: &str| {
            let s = s.trim();
            if s.is_empty() || !s.bytes().all(|b| b.is_ascii_digit()) {
                None
            } else {
                s.parse::<u32>().ok()
            }
        };
        points.push((num(x)?, num(y)?));
        rest = after.trim_start();
        if rest.is_empty() {
            return Some(points);
        }
        rest = rest.strip_prefix(',')?.trim_start();
    }
}

fn loose_numbers(text: &str) -> Vec<u32> {
    let mut out = Vec::new();
    let bytes = text.as_bytes();
    let mut i = 0;
    while i < bytes.len() {
        if bytes[i].is_ascii_digit() {
            let start = i;
            while i < bytes.len() && (bytes[i].is_ascii_digit() || bytes[i] == b'.') {
                i += 1;
            }
            let token = text[start..i].trim_end_matches('.');
            if let Ok(v) = token.parse::<f64>() {
                if v <= f64::from(u32::MAX) {
                    out.push(v.round() as u32);
                }
            }
        } else {
            i += 1;
        }
    }
    out
}
