//! Protection Poker scales, risk products and ranking.

use crate::category::{Sensitivity, ValueCategory};
use crate::detector::SecretAssetPair;
use crate::ease::{EaseCategory, EaseLevel};
use crate::error::{Error, Result};
use crate::keywords::DatabaseKeywordSet;
use serde::{Deserialize, Serialize};
use std::cmp::Ordering;

pub fn scale_value(level: Sensitivity) -> u32 {
    match level {
        Sensitivity::High => 100,
        Sensitivity::Moderate => 40,
        Sensitivity::Low => 5,
        Sensitivity::Unspecified => 1,
    }
}

pub fn scale_ease(level: EaseLevel) -> u32 {
    match level {
        EaseLevel::VeryDifficult => 1,
        EaseLevel::Difficult => 8,
        EaseLevel::Moderate => 40,
        EaseLevel::Easy => 100,
    }
}

pub fn compute_risk(value_points: u32, ease_points: u32) -> u32 {
    value_points * ease_points
}

const SENSITIVITIES: [Sensitivity; 4] = [Sensitivity::Unspecified, Sensitivity::Low, Sensitivity::Moderate, Sensitivity::High];

/// Point tables; start from the standard values and accept overrides.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Scales {
    /// Indexed UNSPECIFIED, LOW, MODERATE, HIGH.
    pub value: [u32; 4],
    /// Indexed VERY_DIFFICULT, DIFFICULT, MODERATE, EASY.
    pub ease: [u32; 4],
}

impl Default for Scales {
    fn default() -> Self {
        Self { value: SENSITIVITIES.map(scale_value), ease: EaseLevel::ALL.map(scale_ease) }
    }
}

fn value_index(level: Sensitivity) -> usize {
    SENSITIVITIES.iter().position(|s| *s == level).unwrap()
}

fn ease_index(level: EaseLevel) -> usize {
    EaseLevel::ALL.iter().position(|s| *s == level).unwrap()
}

impl Scales {
    pub fn value_points(&self, level: Sensitivity) -> u32 {
        self.value[value_index(level)]
    }

    pub fn ease_points(&self, level: EaseLevel) -> u32 {
        self.ease[ease_index(level)]
    }

    /// `value.HIGH`, `ease.EASY` and so on; points must be 1..=10000.
    pub fn set(&mut self, key: &str, points: u32) -> Result<()> {
        if !(1..=10_000).contains(&points) {
            return Err(Error::Config(format!("scale {key}: {points} outside 1..=10000")));
        }
        let bad = || Error::Config(format!("unknown scale key `{key}`"));
        match key.split_once('.') {
            Some(("value", l)) => self.value[value_index(Sensitivity::parse(l).ok_or_else(bad)?)] = points,
            Some(("ease", l)) => self.ease[ease_index(EaseLevel::parse(&l.to_ascii_uppercase()).ok_or_else(bad)?)] = points,
            _ => return Err(bad()),
        }
        Ok(())
    }

    /// `key=points (default d)` for every entry that differs.
    pub fn overrides(&self) -> Vec<String> {
        let d = Scales::default();
        let mut out = Vec::new();
        for (i, s) in SENSITIVITIES.iter().enumerate() {
            if self.value[i] != d.value[i] {
                out.push(format!("value.{}={} (default {})", s.as_str(), self.value[i], d.value[i]));
            }
        }
        for (i, l) in EaseLevel::ALL.iter().enumerate() {
            if self.ease[i] != d.ease[i] {
                out.push(format!("ease.{}={} (default {})", l.as_str(), self.ease[i], d.ease[i]));
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RiskFinding {
    pub rank: usize,
    pub risk_score: u32,
    pub value_points: u32,
    pub ease_points: u32,
    pub pair: SecretAssetPair,
    pub keywords: DatabaseKeywordSet,
    pub value: ValueCategory,
    pub ease: EaseCategory,
}

impl RiskFinding {
    /// Unranked finding scored with `scales`.
    pub fn new(pair: SecretAssetPair, keywords: DatabaseKeywordSet, value: ValueCategory, ease: EaseCategory, scales: &Scales) -> Self {
        let value_points = scales.value_points(value.level);
        let ease_points = scales.ease_points(ease.level);
        Self { rank: 0, risk_score: compute_risk(value_points, ease_points), value_points, ease_points, pair, keywords, value, ease }
    }
}

/// Sort key: score, then value points, both descending; then path and
/// line ascending.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RankKey<'a> {
    pub risk_score: u32,
    pub value_points: u32,
    pub path: &'a str,
    pub line: u32,
}

pub fn compare_rank(a: &RankKey, b: &RankKey) -> Ordering {
    b.risk_score.cmp(&a.risk_score).then(b.value_points.cmp(&a.value_points)).then(a.path.cmp(b.path)).then(a.line.cmp(&b.line))
}

fn key(f: &RiskFinding) -> RankKey<'_> {
    RankKey { risk_score: f.risk_score, value_points: f.value_points, path: &f.pair.secret_location.path, line: f.pair.secret_location.line }
}

/// Stable sort by [`compare_rank`], then ranks 1..=n.
pub fn rank_findings(mut findings: Vec<RiskFinding>) -> Vec<RiskFinding> {
    findings.sort_by(|a, b| compare_rank(&key(a), &key(b)));
    for (i, f) in findings.iter_mut().enumerate() {
        f.rank = i + 1;
    }
    findings
}
