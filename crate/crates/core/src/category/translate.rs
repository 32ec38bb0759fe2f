//! Translation of non-English and transliterated keywords.

use crate::error::{Error, Result};
use crate::ease::cache::{CallRecorder, LiveKind};
use std::collections::HashMap;
use std::sync::Arc;
use unicode_normalization::UnicodeNormalization;

pub trait TranslationProvider: Send + Sync {
    /// English rendering of `text`, `Ok(None)` when the provider has none.
    fn translate(&self, text: &str) -> std::result::Result<Option<String>, String>;
}

/// Lower-case with diacritics removed (`Xìngbié` → `xingbie`).
pub fn fold(s: &str) -> String {
    s.nfd().filter(|c| !unicode_normalization::char::is_combining_mark(*c)).collect::<String>().to_lowercase()
}

/// Bundled word list, `SOURCE | ENGLISH` per line.
#[derive(Debug, Clone, Default)]
pub struct Lexicon {
    entries: HashMap<String, String>,
}

impl Lexicon {
    pub fn parse(text: &str) -> Result<Self> {
        let mut entries = HashMap::new();
        for (n, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (src, en) = line.split_once('|').ok_or_else(|| Error::Data(format!("translations line {}: expected `SOURCE | ENGLISH`", n + 1)))?;
            entries.insert(fold(src.trim()), en.trim().to_uppercase());
        }
        Ok(Self { entries })
    }

    pub fn bundled() -> Self {
        Self::parse(include_str!("../../data/translations.txt")).expect("bundled translations parse")
    }

    pub fn lookup(&self, word: &str) -> Option<&str> {
        self.entries.get(&fold(word)).map(String::as_str)
    }
}

fn needs_translation(keyword: &str) -> bool {
    keyword.chars().any(|c| c.is_alphabetic() && !c.is_ascii())
}

/// English form of `keyword`, or `None` when it needs no translation.
///
/// The lexicon is tried on the whole keyword, then token by token; the
/// provider is consulted only for non-ASCII keywords the lexicon misses.
pub fn translate_keyword(keyword: &str, lexicon: &Lexicon, provider: Option<&dyn TranslationProvider>) -> std::result::Result<Option<String>, String> {
    if let Some(en) = lexicon.lookup(keyword.trim()) {
        return Ok(Some(en.to_string()));
    }
    let parts: Vec<&str> = keyword.split(|c: char| !c.is_alphanumeric()).filter(|p| !p.is_empty()).collect();
    let mut hit = false;
    let translated: Vec<String> = parts
        .iter()
        .map(|p| match lexicon.lookup(p) {
            Some(en) => {
                hit = true;
                en.to_string()
            }
            None => p.to_uppercase(),
        })
        .collect();
    if hit {
        return Ok(Some(translated.join("_")));
    }
    if !needs_translation(keyword) {
        return Ok(None);
    }
    match provider {
        Some(p) => Ok(p.translate(keyword)?.map(|s| s.split_whitespace().collect::<Vec<_>>().join("_").to_uppercase()).filter(|s| !s.is_empty())),
        None => Ok(None),
    }
}

/// Cloud Translation v2 with an API key.
pub struct GoogleTranslate {
    key: String,
    agent: ureq::Agent,
    recorder: Arc<CallRecorder>,
}

impl GoogleTranslate {
    pub const ENDPOINT: &'static str = "https://translation.googleapis.com/language/translate/v2";

    pub fn new(key: impl Into<String>, timeout: std::time::Duration, recorder: Arc<CallRecorder>) -> Self {
        Self { key: key.into(), agent: crate::http::agent(timeout), recorder }
    }

    /// Built from `TRANSLATE_API_KEY` when set.
    pub fn from_env(timeout: std::time::Duration, recorder: Arc<CallRecorder>) -> Option<Self> {
        std::env::var("TRANSLATE_API_KEY").ok().filter(|k| !k.is_empty()).map(|k| Self::new(k, timeout, recorder))
    }
}

impl TranslationProvider for GoogleTranslate {
    fn translate(&self, text: &str) -> std::result::Result<Option<String>, String> {
        self.recorder.record(LiveKind::Translate);
        let body = serde_json::json!({ "q": text, "target": "en", "format": "text" });
        let v: serde_json::Value = self
            .agent
            .post(Self::ENDPOINT)
            .query("key", &self.key)
            .send_json(body)
            .map_err(|e| e.to_string())?
            .body_mut()
            .read_json()
            .map_err(|e| e.to_string())?;
        Ok(v["data"]["translations"][0]["translatedText"].as_str().map(str::to_string))
    }
}
