//! Sensitive-data categories for database keywords and the value of the
//! asset behind each pair.

pub mod embedding;
pub mod normalize;
pub mod similarity;
pub mod translate;

use crate::error::{Error, Result};
use crate::keywords::DatabaseKeywordSet;
use crate::model::Diagnostic;
use embedding::{cosine, phrase_vector, EmbeddingProvider};
use serde::{Deserialize, Serialize};
use std::cmp::Ordering;
use std::collections::HashMap;
use std::sync::Mutex;
use translate::{translate_keyword, Lexicon, TranslationProvider};

pub use normalize::normalize_keyword;
pub use similarity::{jaro_winkler, ratcliff_obershelp};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Sensitivity {
    #[default]
    Unspecified,
    Low,
    Moderate,
    High,
}

impl Sensitivity {
    pub fn parse(s: &str) -> Option<Self> {
        Some(match s.trim().to_ascii_uppercase().as_str() {
            "HIGH" => Self::High,
            "MODERATE" => Self::Moderate,
            "LOW" => Self::Low,
            "UNSPECIFIED" => Self::Unspecified,
            _ => return None,
        })
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Self::High => "HIGH",
            Self::Moderate => "MODERATE",
            Self::Low => "LOW",
            Self::Unspecified => "UNSPECIFIED",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Domain {
    Pii,
    Spii,
    Demographic,
    Credential,
    GovernmentId,
    Document,
    ContextualInformation,
}

impl Domain {
    fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "PII" => Self::Pii,
            "SPII" => Self::Spii,
            "DEMOGRAPHIC" => Self::Demographic,
            "CREDENTIAL" => Self::Credential,
            "GOVERNMENT_ID" => Self::GovernmentId,
            "DOCUMENT" => Self::Document,
            "CONTEXTUAL_INFORMATION" => Self::ContextualInformation,
            _ => return None,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DataCategory {
    pub name: String,
    pub domain: Domain,
    pub sensitivity: Sensitivity,
}

#[derive(Debug, Clone)]
pub struct Taxonomy {
    pub categories: Vec<DataCategory>,
}

impl Taxonomy {
    /// `NAME | DOMAIN | SENSITIVITY` per line.
    pub fn parse(text: &str) -> Result<Self> {
        let mut categories: Vec<DataCategory> = Vec::new();
        for (n, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let f: Vec<&str> = line.split('|').map(str::trim).collect();
            let bad = || Error::Data(format!("taxonomy line {}: `{line}`", n + 1));
            if f.len() != 3 {
                return Err(bad());
            }
            let domain = Domain::parse(f[1]).ok_or_else(bad)?;
            let sensitivity = Sensitivity::parse(f[2]).filter(|s| *s != Sensitivity::Unspecified).ok_or_else(bad)?;
            if categories.iter().any(|c| c.name == f[0]) {
                return Err(Error::Data(format!("taxonomy line {}: duplicate category {}", n + 1, f[0])));
            }
            categories.push(DataCategory { name: f[0].to_string(), domain, sensitivity });
        }
        Ok(Self { categories })
    }

    pub fn bundled() -> Self {
        Self::parse(include_str!("../../data/taxonomy.txt")).expect("bundled taxonomy parses")
    }

    pub fn get(&self, name: &str) -> Option<&DataCategory> {
        self.categories.iter().find(|c| c.name == name)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum MatcherKind {
    Prefix,
    Substring,
    Semantic,
    None,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Cutoffs {
    pub prefix: f64,
    pub substring: f64,
    pub semantic: f64,
}

impl Default for Cutoffs {
    fn default() -> Self {
        Self { prefix: 0.7, substring: 0.7, semantic: 0.65 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CategoryMapping {
    pub keyword: String,
    /// Form that matched, or the first candidate form.
    pub normalized: String,
    pub category: Option<DataCategory>,
    pub matcher: MatcherKind,
    pub score: f64,
    /// Original text when the keyword was translated first.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub translated_from: Option<String>,
}

impl CategoryMapping {
    pub fn sensitivity(&self) -> Sensitivity {
        self.category.as_ref().map(|c| c.sensitivity).unwrap_or_default()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValueCategory {
    pub level: Sensitivity,
    pub evidence: Vec<CategoryMapping>,
}

/// Highest-scoring category; equal scores prefer higher sensitivity, then
/// the smaller name.
fn best(tax: &Taxonomy, mut score: impl FnMut(&DataCategory) -> f64) -> Option<(&DataCategory, f64)> {
    let mut out: Option<(&DataCategory, f64)> = None;
    for c in &tax.categories {
        let s = score(c);
        let better = match &out {
            None => true,
            Some((b, bs)) => match s.partial_cmp(bs).unwrap_or(Ordering::Equal) {
                Ordering::Greater => true,
                Ordering::Less => false,
                Ordering::Equal => (c.sensitivity, std::cmp::Reverse(&c.name)) > (b.sensitivity, std::cmp::Reverse(&b.name)),
            },
        };
        if better {
            out = Some((c, s));
        }
    }
    out
}

pub fn prefix_match<'t>(keyword: &str, tax: &'t Taxonomy, cutoff: f64) -> Option<(&'t DataCategory, f64)> {
    best(tax, |c| jaro_winkler(keyword, &c.name)).filter(|(_, s)| *s >= cutoff)
}

pub fn substring_match<'t>(keyword: &str, tax: &'t Taxonomy, cutoff: f64) -> Option<(&'t DataCategory, f64)> {
    best(tax, |c| ratcliff_obershelp(keyword, &c.name)).filter(|(_, s)| *s >= cutoff)
}

/// Cosine of mean token vectors against every category name.
pub fn semantic_match<'t>(keyword: &str, tax: &'t Taxonomy, embedder: &dyn EmbeddingProvider, cutoff: f64) -> Option<(&'t DataCategory, f64)> {
    let kv = phrase_vector(embedder, keyword)?;
    best(tax, |c| phrase_vector(embedder, &c.name).map(|cv| cosine(&kv, &cv)).unwrap_or(0.0)).filter(|(_, s)| *s >= cutoff)
}

/// Keyword → category mapper with memoisation; safe to share across threads.
pub struct CategoryMapper {
    pub taxonomy: Taxonomy,
    pub cutoffs: Cutoffs,
    embedder: Option<Box<dyn EmbeddingProvider>>,
    lexicon: Lexicon,
    translator: Option<Box<dyn TranslationProvider>>,
    category_vectors: Vec<Option<Vec<f32>>>,
    cache: Mutex<HashMap<String, (CategoryMapping, Vec<Diagnostic>)>>,
}

impl CategoryMapper {
    pub fn new(
        taxonomy: Taxonomy,
        cutoffs: Cutoffs,
        embedder: Option<Box<dyn EmbeddingProvider>>,
        lexicon: Lexicon,
        translator: Option<Box<dyn TranslationProvider>>,
    ) -> Self {
        let category_vectors = taxonomy.categories.iter().map(|c| embedder.as_deref().and_then(|e| phrase_vector(e, &c.name))).collect();
        Self { taxonomy, cutoffs, embedder, lexicon, translator, category_vectors, cache: Mutex::new(HashMap::new()) }
    }

    /// Bundled taxonomy, vectors and lexicon; no live translation.
    pub fn bundled() -> Self {
        Self::new(Taxonomy::bundled(), Cutoffs::default(), Some(Box::new(embedding::WordVectors::bundled())), Lexicon::bundled(), None)
    }

    fn semantic(&self, form: &str) -> Option<(&DataCategory, f64)> {
        let e = self.embedder.as_deref()?;
        let kv = phrase_vector(e, form)?;
        let mut i = 0;
        let scores: Vec<f64> = self.category_vectors.iter().map(|cv| cv.as_ref().map(|cv| cosine(&kv, cv)).unwrap_or(0.0)).collect();
        best(&self.taxonomy, |_| {
            let s = scores[i];
            i += 1;
            s
        })
        .filter(|(_, s)| *s >= self.cutoffs.semantic)
    }

    /// Translation, then Prefix, Substring and Semantic over each
    /// normalized form; the first accepted match wins.
    pub fn map_keyword(&self, keyword: &str, diags: &mut Vec<Diagnostic>) -> CategoryMapping {
        if let Some((m, d)) = self.cache.lock().unwrap().get(keyword) {
            diags.extend(d.iter().cloned());
            return m.clone();
        }
        let mut local = Vec::new();
        let m = self.map_uncached(keyword, &mut local);
        diags.extend(local.iter().cloned());
        self.cache.lock().unwrap().insert(keyword.to_string(), (m.clone(), local));
        m
    }

    fn map_uncached(&self, keyword: &str, diags: &mut Vec<Diagnostic>) -> CategoryMapping {
        let (text, translated_from) = match translate_keyword(keyword, &self.lexicon, self.translator.as_deref()) {
            Ok(Some(en)) => (en, Some(keyword.to_string())),
            Ok(None) => (keyword.to_string(), None),
            Err(e) => {
                diags.push(Diagnostic::new("category", format!("translation of `{keyword}` failed: {e}")));
                (keyword.to_string(), None)
            }
        };
        let forms = normalize_keyword(&text);
        let unmatched = CategoryMapping {
            keyword: keyword.to_string(),
            normalized: forms.first().cloned().unwrap_or_default(),
            category: None,
            matcher: MatcherKind::None,
            score: 0.0,
            translated_from: translated_from.clone(),
        };
        let accept = |form: &str, kind: MatcherKind, hit: Option<(&DataCategory, f64)>| {
            hit.map(|(c, s)| CategoryMapping {
                keyword: keyword.to_string(),
                normalized: form.to_string(),
                category: Some(c.clone()),
                matcher: kind,
                score: s,
                translated_from: translated_from.clone(),
            })
        };
        for f in &forms {
            if let Some(m) = accept(f, MatcherKind::Prefix, prefix_match(f, &self.taxonomy, self.cutoffs.prefix)) {
                return m;
            }
        }
        for f in &forms {
            if let Some(m) = accept(f, MatcherKind::Substring, substring_match(f, &self.taxonomy, self.cutoffs.substring)) {
                return m;
            }
        }
        if self.embedder.is_none() {
            if !forms.is_empty() {
                diags.push(Diagnostic::new("category", format!("no embedding provider; semantic matching skipped for `{keyword}`")));
            }
            return unmatched;
        }
        for f in &forms {
            if let Some(m) = accept(f, MatcherKind::Semantic, self.semantic(f)) {
                return m;
            }
        }
        unmatched
    }

    /// Map every keyword of the set and take the highest sensitivity.
    pub fn value_of(&self, keywords: &DatabaseKeywordSet, diags: &mut Vec<Diagnostic>) -> ValueCategory {
        let mappings = keywords.iter().map(|(_, k)| self.map_keyword(&k.name, diags)).collect();
        aggregate_value(mappings)
    }
}

/// Level is the maximum sensitivity of the evidence; empty → UNSPECIFIED.
pub fn aggregate_value(mappings: Vec<CategoryMapping>) -> ValueCategory {
    let level = mappings.iter().map(CategoryMapping::sensitivity).max().unwrap_or_default();
    ValueCategory { level, evidence: mappings }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mapper() -> CategoryMapper {
        CategoryMapper::bundled()
    }

    fn map(k: &str) -> CategoryMapping {
        mapper().map_keyword(k, &mut Vec::new())
    }

    #[test]
    fn taxonomy_shape() {
        let t = Taxonomy::bundled();
        assert_eq!(t.categories.len(), 113);
        assert!(Taxonomy::parse("A | PII | HIGH\nA | PII | LOW\n").is_err());
        assert!(Taxonomy::parse("A | NOPE | HIGH\n").is_err());
    }

    #[test]
    fn identity_is_prefix_one() {
        let m = map("PASSPORT");
        assert_eq!(m.matcher, MatcherKind::Prefix);
        assert_eq!(m.score, 1.0);
        assert_eq!(m.category.unwrap().name, "PASSPORT");
    }

    #[test]
    fn documented_mappings() {
        for (k, cat) in [
            ("FINANCIAL_ACC", "FINANCIAL_ACCOUNT_NUMBER"),
            ("NID_NUMBER", "NATIONAL_ID_NUMBER"),
            ("CELL_NO", "PHONE_NO"),
            ("DATE_OF_BIRTH", "BIRTH_DATE"),
            ("性别", "GENDER"),
            ("Xìngbié", "GENDER"),
        ] {
            let m = map(k);
            assert_eq!(m.category.as_ref().map(|c| c.name.as_str()), Some(cat), "{k}: {m:?}");
        }
        let t = map("test");
        assert_eq!(t.matcher, MatcherKind::None);
        assert_eq!(t.sensitivity(), Sensitivity::Unspecified);
    }

    #[test]
    fn semantic_examples_use_semantic() {
        assert_eq!(map("CELL_NO").matcher, MatcherKind::Semantic);
        assert_eq!(map("DATE_OF_BIRTH").matcher, MatcherKind::Semantic);
        assert_eq!(map("性别").translated_from.as_deref(), Some("性别"));
    }

    #[test]
    fn tie_break_prefers_sensitivity_then_name() {
        let t = Taxonomy::parse("B_X | PII | LOW\nA_X | PII | LOW\nC_X | SPII | HIGH\n").unwrap();
        let (c, _) = best(&t, |_| 0.5).unwrap();
        assert_eq!(c.name, "C_X");
        let t = Taxonomy::parse("B_X | PII | LOW\nA_X | PII | LOW\n").unwrap();
        assert_eq!(best(&t, |_| 0.5).unwrap().0.name, "A_X");
    }

    #[test]
    fn without_embedder_semantic_is_skipped() {
        let m = CategoryMapper::new(Taxonomy::bundled(), Cutoffs::default(), None, Lexicon::bundled(), None);
        let mut d = Vec::new();
        let r = m.map_keyword("CELL_NO", &mut d);
        assert_eq!(r.matcher, MatcherKind::None);
        assert_eq!(d.len(), 1);
    }

    #[test]
    fn aggregation_is_max() {
        let mk = |s: Option<&str>| {
            let t = Taxonomy::bundled();
            CategoryMapping {
                keyword: "k".into(),
                normalized: "K".into(),
                category: s.map(|n| t.get(n).unwrap().clone()),
                matcher: if s.is_some() { MatcherKind::Prefix } else { MatcherKind::None },
                score: 1.0,
                translated_from: None,
            }
        };
        assert_eq!(aggregate_value(vec![mk(Some("PHONE_NO")), mk(Some("PASSPORT")), mk(None)]).level, Sensitivity::High);
        assert_eq!(aggregate_value(vec![mk(None)]).level, Sensitivity::Unspecified);
        assert_eq!(aggregate_value(vec![]).level, Sensitivity::Unspecified);
        assert_eq!(aggregate_value(vec![mk(Some("PHONE_NO")), mk(Some("EMAIL_ADDRESS"))]).level, Sensitivity::Moderate);
    }
}
