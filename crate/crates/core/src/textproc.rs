//! Tweet text cleaning, word-level tokenization and the vocabulary.

use std::collections::HashMap;
use std::path::Path;
use std::sync::OnceLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const PAD_ID: usize = 0;
pub const UNK_ID: usize = 1;
pub const PAD_TOKEN: &str = "<pad>";
pub const UNK_TOKEN: &str = "<unk>";

pub const DEFAULT_MAX_LEN: usize = 64;

/// Minimum length, in characters, of a cleaned text admitted to any corpus.
pub const MIN_CLEAN_CHARS: usize = 20;

/// URL pattern removed by [`clean`].
pub const URL_PATTERN: &str = r"https?://\S+";
/// Mention pattern removed by [`clean`].
pub const MENTION_PATTERN: &str = r"@\w+";

fn url_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(URL_PATTERN).unwrap())
}

fn mention_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(MENTION_PATTERN).unwrap())
}

/// Lowercases, strips URLs and @mentions, collapses whitespace runs
/// (any Unicode whitespace) into one space and trims.
///
/// Characters whose lowercase form expands to several characters (e.g.
/// `İ`) are left unchanged so the output is never longer than the input.
/// Removal runs to a fixpoint: deleting a mention can splice the pieces of
/// a URL together, and the result must be stable under a second pass.
pub fn clean(text: &str) -> String {
    let mut s: String = text
        .chars()
        .map(|c| {
            let mut lower = c.to_lowercase();
            match (lower.next(), lower.next()) {
                (Some(l), None) => l,
                _ => c,
            }
        })
        .collect();
    loop {
        let before = s.len();
        s = url_re().replace_all(&s, "").into_owned();
        s = mention_re().replace_all(&s, "").into_owned();
        if s.len() == before {
            break;
        }
    }
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}

/// `clean(text)` has at least [`MIN_CLEAN_CHARS`] characters.
pub fn long_enough(cleaned: &str) -> bool {
    cleaned.chars().count() >= MIN_CLEAN_CHARS
}

/// Splits cleaned text on spaces; every ASCII punctuation character becomes its own token.
pub fn tokenize(text: &str) -> Vec<String> {
    let mut out = Vec::new();
    for word in text.split(' ') {
        let mut cur = String::new();
        for c in word.chars() {
            if c.is_ascii_punctuation() {
                if !cur.is_empty() {
                    out.push(std::mem::take(&mut cur));
                }
                out.push(c.to_string());
            } else {
                cur.push(c);
            }
        }
        if !cur.is_empty() {
            out.push(cur);
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocabulary {
    tokens: Vec<String>,
    index: HashMap<String, usize>,
    max_size: usize,
}

#[derive(Serialize, Deserialize)]
struct VocabFile {
    tokens: Vec<String>,
    max_size: usize,
}

impl Vocabulary {
    pub fn from_tokens(tokens: Vec<String>, max_size: usize) -> Result<Self> {
        if tokens.len() < 2 || tokens[PAD_ID] != PAD_TOKEN || tokens[UNK_ID] != UNK_TOKEN {
            return Err(Error::Data(format!(
                "vocabulary must start with {PAD_TOKEN} and {UNK_TOKEN}"
            )));
        }
        if tokens.len() > max_size {
            return Err(Error::Data(format!(
                "vocabulary has {} tokens, max_size is {max_size}",
                tokens.len()
            )));
        }
        let mut index = HashMap::with_capacity(tokens.len());
        for (i, t) in tokens.iter().enumerate() {
            if index.insert(t.clone(), i).is_some() {
                return Err(Error::Data(format!("duplicate vocabulary token {t:?}")));
            }
        }
        Ok(Self {
            tokens,
            index,
            max_size,
        })
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn max_size(&self) -> usize {
        self.max_size
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn id(&self, token: &str) -> Option<usize> {
        self.index.get(token).copied()
    }

    pub fn token(&self, id: usize) -> Option<&str> {
        self.tokens.get(id).map(String::as_str)
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({ "tokens": self.tokens, "max_size": self.max_size })
    }

    pub fn from_json(value: serde_json::Value) -> Result<Self> {
        let f: VocabFile = serde_json::from_value(value)?;
        Self::from_tokens(f.tokens, f.max_size)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let s = serde_json::to_string(&self.to_json())?;
        std::fs::write(path, s).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let s = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(serde_json::from_str(&s)?)
    }
}

/// Builds a vocabulary from cleaned training texts: PAD, UNK, then the
/// `max_size - 2` most frequent tokens, ties broken lexicographically.
pub fn build_vocab<S: AsRef<str>>(corpus: &[S], max_size: usize) -> Result<Vocabulary> {
    if max_size < 2 {
        return Err(Error::Usage(format!(
            "vocabulary max_size must be at least 2, got {max_size}"
        )));
    }
    let mut counts: HashMap<String, u64> = HashMap::new();
    for text in corpus {
        for tok in tokenize(text.as_ref()) {
            *counts.entry(tok).or_default() += 1;
        }
    }
    let mut ranked: Vec<(String, u64)> = counts
        .into_iter()
        .filter(|(t, _)| t != PAD_TOKEN && t != UNK_TOKEN)
        .collect();
    ranked.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    let mut tokens = vec![PAD_TOKEN.to_string(), UNK_TOKEN.to_string()];
    tokens.extend(ranked.into_iter().take(max_size - 2).map(|(t, _)| t));
    Vocabulary::from_tokens(tokens, max_size)
}

/// Maps tokens to ids (UNK for unknown), truncated to `max_len`. Empty
/// input yields a single UNK so every sentence has at least one token.
pub fn encode_ids(vocab: &Vocabulary, text: &str, max_len: usize) -> Vec<usize> {
    assert!(max_len >= 1, "max_len must be at least 1");
    let mut ids: Vec<usize> = tokenize(text)
        .iter()
        .take(max_len)
        .map(|t| vocab.id(t).unwrap_or(UNK_ID))
        .collect();
    if ids.is_empty() {
        ids.push(UNK_ID);
    }
    ids
}
