//! WordPiece tokenizer compatible with the uncased multilingual BERT
//! vocabulary format (plain text, one token per line, line index = id).
//!
//! The pipeline is: clean text, isolate CJK ideographs, whitespace split,
//! lowercase + strip combining accents, split punctuation, then greedy
//! longest-match-first subword lookup with `##` marking word-internal
//! pieces. Encoded sequences are framed as `[CLS] ... [SEP]`.

use std::collections::HashMap;
use std::path::Path;

use thiserror::Error;
use unicode_general_category::{get_general_category, GeneralCategory};
use unicode_normalization::UnicodeNormalization;

pub const PAD_TOKEN: &str = "[PAD]";
pub const UNK_TOKEN: &str = "[UNK]";
pub const CLS_TOKEN: &str = "[CLS]";
pub const SEP_TOKEN: &str = "[SEP]";

/// Words longer than this many characters are mapped to `[UNK]` outright.
pub const MAX_WORD_CHARS: usize = 100;

#[derive(Debug, Error)]
pub enum VocabError {
    #[error("failed to read vocabulary {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("vocabulary file is empty")]
    Empty,
    #[error("duplicate token {token:?} at line {line}")]
    Duplicate { token: String, line: usize },
    #[error("vocabulary is missing special token {0}")]
    MissingSpecial(&'static str),
}

/// Immutable token table with dense ids 0..V-1.
#[derive(Debug, Clone)]
pub struct Vocab {
    tokens: Vec<String>,
    index: HashMap<String, u32>,
    pad: u32,
    unk: u32,
    cls: u32,
    sep: u32,
}

impl Vocab {
    /// Build from an ordered token list; the id of `tokens[i]` is `i`.
    pub fn from_tokens(tokens: Vec<String>) -> Result<Self, VocabError> {
        if tokens.is_empty() {
            return Err(VocabError::Empty);
        }
        let mut index = HashMap::with_capacity(tokens.len());
        for (i, token) in tokens.iter().enumerate() {
            if index.insert(token.clone(), i as u32).is_some() {
                return Err(VocabError::Duplicate {
                    token: token.clone(),
                    line: i + 1,
                });
            }
        }
        let special = |name: &'static str| {
            index
                .get(name)
                .copied()
                .ok_or(VocabError::MissingSpecial(name))
        };
        Ok(Self {
            pad: special(PAD_TOKEN)?,
            unk: special(UNK_TOKEN)?,
            cls: special(CLS_TOKEN)?,
            sep: special(SEP_TOKEN)?,
            tokens,
            index,
        })
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn id(&self, token: &str) -> Option<u32> {
        self.index.get(token).copied()
    }

    pub fn contains(&self, token: &str) -> bool {
        self.index.contains_key(token)
    }

    pub fn token(&self, id: u32) -> Option<&str> {
        self.tokens.get(id as usize).map(String::as_str)
    }

    pub fn pad_id(&self) -> u32 {
        self.pad
    }

    pub fn unk_id(&self) -> u32 {
        self.unk
    }

    pub fn cls_id(&self) -> u32 {
        self.cls
    }

    pub fn sep_id(&self) -> u32 {
        self.sep
    }
}

/// Load a vocabulary file: UTF-8, one token per line, line index = id.
pub fn load_vocab(path: &Path) -> Result<Vocab, VocabError> {
    let body = std::fs::read_to_string(path).map_err(|source| VocabError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let tokens: Vec<String> = body
        .lines()
        .map(|line| line.trim_end_matches('\r').to_string())
        .collect();
    Vocab::from_tokens(tokens)
}

/// Token ids plus attention mask for one encoded text.
///
/// Position 0 is always `[CLS]`; the last unmasked position is `[SEP]`.
/// The mask is 1 for real tokens and 0 for padding, and is non-increasing.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct TokenSequence {
    pub ids: Vec<u32>,
    pub attention_mask: Vec<u8>,
}

impl TokenSequence {
    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    /// Number of unmasked (real) tokens.
    pub fn real_len(&self) -> usize {
        self.attention_mask.iter().filter(|&&m| m == 1).count()
    }

    /// Extend with padding up to `len`; no-op if already that long.
    pub fn pad_to(&mut self, len: usize, pad_id: u32) {
        while self.ids.len() < len {
            self.ids.push(pad_id);
            self.attention_mask.push(0);
        }
    }
}

fn is_whitespace_char(c: char) -> bool {
    matches!(c, ' ' | '\t' | '\n' | '\r')
        || get_general_category(c) == GeneralCategory::SpaceSeparator
}

fn is_control_char(c: char) -> bool {
    if matches!(c, '\t' | '\n' | '\r') {
        return false;
    }
    matches!(
        get_general_category(c),
        GeneralCategory::Control
            | GeneralCategory::Format
            | GeneralCategory::PrivateUse
            | GeneralCategory::Surrogate
    )
}

fn is_punctuation_char(c: char) -> bool {
    let u = c as u32;
    // ASCII symbol ranges count as punctuation in addition to Unicode P*.
    if (33..=47).contains(&u) || (58..=64).contains(&u) || (91..=96).contains(&u) || (123..=126).contains(&u)
    {
        return true;
    }
    matches!(
        get_general_category(c),
        GeneralCategory::ConnectorPunctuation
            | GeneralCategory::DashPunctuation
            | GeneralCategory::OpenPunctuation
            | GeneralCategory::ClosePunctuation
            | GeneralCategory::InitialPunctuation
            | GeneralCategory::FinalPunctuation
            | GeneralCategory::OtherPunctuation
    )
}

fn is_cjk_char(c: char) -> bool {
    let u = c as u32;
    (0x4E00..=0x9FFF).contains(&u)
        || (0x3400..=0x4DBF).contains(&u)
        || (0x20000..=0x2A6DF).contains(&u)
        || (0x2A700..=0x2B73F).contains(&u)
        || (0x2B740..=0x2B81F).contains(&u)
        || (0x2B820..=0x2CEAF).contains(&u)
        || (0xF900..=0xFAFF).contains(&u)
        || (0x2F800..=0x2FA1F).contains(&u)
}

fn strip_accents(word: &str) -> String {
    word.nfd()
        .filter(|&c| get_general_category(c) != GeneralCategory::NonspacingMark)
        .collect()
}

/// Whitespace-and-punctuation tokenization with optional uncased
/// normalization (lowercasing plus combining-accent stripping). Control
/// characters are dropped and every CJK ideograph becomes its own token.
pub fn basic_tokenize(text: &str, lowercase: bool) -> Vec<String> {
    let mut cleaned = String::with_capacity(text.len());
    for c in text.chars() {
        if c == '\u{0}' || c == '\u{FFFD}' || is_control_char(c) {
            continue;
        }
        if is_cjk_char(c) {
            cleaned.push(' ');
            cleaned.push(c);
            cleaned.push(' ');
        } else if is_whitespace_char(c) {
            cleaned.push(' ');
        } else {
            cleaned.push(c);
        }
    }

    let mut out = Vec::new();
    for word in cleaned.split(' ').filter(|w| !w.is_empty()) {
        let normalized = if lowercase {
            strip_accents(&word.chars().flat_map(char::to_lowercase).collect::<String>())
        } else {
            word.to_string()
        };
        let mut current = String::new();
        for c in normalized.chars() {
            if is_punctuation_char(c) {
                if !current.is_empty() {
                    out.push(std::mem::take(&mut current));
                }
                out.push(c.to_string());
            } else {
                current.push(c);
            }
        }
        if !current.is_empty() {
            out.push(current);
        }
    }
    out
}

/// Greedy longest-match-first subword split of a single word.
///
/// Non-initial pieces carry the `##` prefix. A word with any unmatchable
/// position, or longer than `max_word_chars`, becomes `[UNK]` as a whole.
pub fn wordpiece(word: &str, vocab: &Vocab, max_word_chars: usize) -> Vec<String> {
    let chars: Vec<char> = word.chars().collect();
    if chars.is_empty() {
        return Vec::new();
    }
    if chars.len() > max_word_chars {
        return vec![UNK_TOKEN.to_string()];
    }
    let mut pieces = Vec::new();
    let mut start = 0;
    while start < chars.len() {
        let mut matched = None;
        for end in (start + 1..=chars.len()).rev() {
            let sub: String = chars[start..end].iter().collect();
            let candidate = if start == 0 { sub } else { format!("##{sub}") };
            if vocab.contains(&candidate) {
                matched = Some((end, candidate));
                break;
            }
        }
        match matched {
            Some((end, piece)) => {
                pieces.push(piece);
                start = end;
            }
            None => return vec![UNK_TOKEN.to_string()],
        }
    }
    pieces
}

/// Encode one text as `[CLS] pieces... [SEP]`, truncated to `max_len`
/// with `[SEP]` always last. No padding is added here; use
/// [`TokenSequence::pad_to`] when a fixed-length batch is required.
pub fn encode(text: &str, vocab: &Vocab, max_len: usize) -> TokenSequence {
    assert!(max_len >= 2, "max_len must fit [CLS] and [SEP]");
    let mut ids = Vec::with_capacity(max_len.min(64));
    ids.push(vocab.cls_id());
    'words: for word in basic_tokenize(text, true) {
        for piece in wordpiece(&word, vocab, MAX_WORD_CHARS) {
            if ids.len() == max_len - 1 {
                break 'words;
            }
            ids.push(vocab.id(&piece).unwrap_or_else(|| vocab.unk_id()));
        }
    }
    ids.push(vocab.sep_id());
    TokenSequence {
        attention_mask: vec![1; ids.len()],
        ids,
    }
}
