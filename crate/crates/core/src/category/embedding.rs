//! Word vectors with subword composition for unknown tokens.

use crate::error::{Error, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use std::collections::HashMap;

/// Dimension of the bundled vectors.
pub const DIM: usize = 100;
const SEED: u64 = 0x5ec0_11a7;
/// Share of a word's vector contributed by its concept.
const CONCEPT_WEIGHT: f64 = 0.9;
/// Shortest known word recognised inside an unknown token.
const MIN_PIECE: usize = 4;

pub trait EmbeddingProvider: Send + Sync {
    /// Unit vector for one lower-case token; `None` when unavailable.
    fn vector(&self, token: &str) -> Option<Vec<f32>>;
}

fn fnv1a(s: &str) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in s.bytes() {
        h ^= b as u64;
        h = h.wrapping_mul(0x0100_0000_01b3);
    }
    h
}

fn gaussian(label: &str, dim: usize) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(fnv1a(label) ^ SEED);
    (0..dim).map(|_| rng.sample::<f64, _>(StandardNormal)).collect()
}

fn unit(v: Vec<f64>) -> Vec<f64> {
    let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if n == 0.0 {
        return v;
    }
    v.into_iter().map(|x| x / n).collect()
}

pub fn cosine(a: &[f32], b: &[f32]) -> f64 {
    let (mut dot, mut na, mut nb) = (0.0f64, 0.0f64, 0.0f64);
    for (x, y) in a.iter().zip(b) {
        dot += *x as f64 * *y as f64;
        na += *x as f64 * *x as f64;
        nb += *y as f64 * *y as f64;
    }
    if na == 0.0 || nb == 0.0 {
        return 0.0;
    }
    dot / (na.sqrt() * nb.sqrt())
}

/// Build the vector file text from a concept list.
pub fn generate_vectors(concepts: &str, dim: usize) -> Result<String> {
    let mut words: Vec<(String, Vec<f64>)> = Vec::new();
    let mut aliases = Vec::new();
    for line in concepts.lines().map(str::trim).filter(|l| !l.is_empty() && !l.starts_with('#')) {
        if let Some((name, parts)) = line.split_once('=') {
            aliases.push((name.trim().to_string(), parts.split_whitespace().map(str::to_string).collect::<Vec<_>>()));
            continue;
        }
        let toks: Vec<&str> = line.split_whitespace().collect();
        let concept = unit(gaussian(&format!("concept:{}", toks[0]), dim));
        for t in toks {
            if words.iter().any(|(w, _)| w == t) {
                return Err(Error::Data(format!("concepts: `{t}` listed twice")));
            }
            let own = unit(gaussian(&format!("word:{t}"), dim));
            let rest = (1.0 - CONCEPT_WEIGHT * CONCEPT_WEIGHT).sqrt();
            let v = unit(concept.iter().zip(&own).map(|(c, o)| CONCEPT_WEIGHT * c + rest * o).collect());
            words.push((t.to_string(), v));
        }
    }
    for (name, parts) in aliases {
        let mut acc = vec![0.0; dim];
        for p in &parts {
            let v = &words.iter().find(|(w, _)| w == p).ok_or_else(|| Error::Data(format!("concepts: alias part `{p}` undefined")))?.1;
            for (a, x) in acc.iter_mut().zip(v) {
                *a += x;
            }
        }
        words.push((name, unit(acc)));
    }
    let mut out = format!("{dim}\n");
    for (w, v) in words {
        out.push_str(&w);
        for x in v {
            out.push_str(&format!(" {x:.5}"));
        }
        out.push('\n');
    }
    Ok(out)
}

/// Vector table plus fastText-style composition for unknown tokens:
/// known words found inside the token contribute their vectors, leftover
/// characters contribute hashed 3- to 5-gram vectors.
/// Known words shorter than four characters are not looked for, so
/// `message` does not pick up `age`.
#[derive(Debug, Clone)]
pub struct WordVectors {
    dim: usize,
    words: HashMap<String, Vec<f32>>,
}

impl WordVectors {
    /// Text header holds the dimension, then `token v1 .. vd` per line.
    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let dim: usize = lines
            .next()
            .and_then(|h| h.split_whitespace().last())
            .and_then(|d| d.parse().ok())
            .ok_or_else(|| Error::Data("vectors: missing dimension header".into()))?;
        let mut words = HashMap::new();
        for (n, line) in lines.enumerate() {
            let mut it = line.split_whitespace();
            let w = it.next().unwrap().to_lowercase();
            let v: Vec<f32> = it.map(|x| x.parse::<f32>()).collect::<std::result::Result<_, _>>().map_err(|e| Error::Data(format!("vectors line {}: {e}", n + 2)))?;
            if v.len() != dim {
                return Err(Error::Data(format!("vectors line {}: {} values, expected {dim}", n + 2, v.len())));
            }
            words.insert(w, v);
        }
        Ok(Self { dim, words })
    }

    pub fn bundled() -> Self {
        Self::parse(include_str!("../../data/vectors.txt")).expect("bundled vectors parse")
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn contains(&self, token: &str) -> bool {
        self.words.contains_key(token)
    }

    fn ngrams(&self, chunk: &str) -> Vec<f64> {
        let padded: Vec<char> = format!("<{chunk}>").chars().collect();
        let mut acc = vec![0.0; self.dim];
        let mut count = 0;
        for n in 3..=5 {
            for w in padded.windows(n) {
                let g: String = w.iter().collect();
                for (a, x) in acc.iter_mut().zip(gaussian(&format!("ngram:{g}"), self.dim)) {
                    *a += x;
                }
                count += 1;
            }
        }
        if count == 0 {
            return gaussian(&format!("ngram:{chunk}"), self.dim);
        }
        acc
    }

    fn compose(&self, token: &str) -> Vec<f32> {
        let chars: Vec<char> = token.chars().collect();
        let mut acc = vec![0.0f64; self.dim];
        let mut leftover = String::new();
        let flush = |left: &mut String, acc: &mut Vec<f64>| {
            if !left.is_empty() {
                for (a, x) in acc.iter_mut().zip(unit(self.ngrams(left))) {
                    *a += x;
                }
                left.clear();
            }
        };
        let mut i = 0;
        while i < chars.len() {
            let hit = (MIN_PIECE..=chars.len() - i).rev().find_map(|len| {
                let w: String = chars[i..i + len].iter().collect();
                self.words.get(&w).map(|v| (len, v))
            });
            match hit {
                Some((len, v)) => {
                    flush(&mut leftover, &mut acc);
                    for (a, x) in acc.iter_mut().zip(v) {
                        *a += *x as f64;
                    }
                    i += len;
                }
                None => {
                    leftover.push(chars[i]);
                    i += 1;
                }
            }
        }
        flush(&mut leftover, &mut acc);
        unit(acc).into_iter().map(|x| x as f32).collect()
    }
}

impl EmbeddingProvider for WordVectors {
    fn vector(&self, token: &str) -> Option<Vec<f32>> {
        if token.is_empty() {
            return None;
        }
        Some(self.words.get(token).cloned().unwrap_or_else(|| self.compose(token)))
    }
}

/// Mean of token vectors; tokens come from splitting on `_`.
pub fn phrase_vector(e: &dyn EmbeddingProvider, phrase: &str) -> Option<Vec<f32>> {
    let toks: Vec<String> = phrase.split('_').filter(|t| !t.is_empty()).map(|t| t.to_lowercase()).collect();
    let mut acc: Option<Vec<f32>> = None;
    for t in &toks {
        let v = e.vector(t)?;
        match &mut acc {
            None => acc = Some(v),
            Some(a) => a.iter_mut().zip(&v).for_each(|(a, x)| *a += x),
        }
    }
    let n = toks.len() as f32;
    acc.map(|a| a.into_iter().map(|x| x / n).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bundled_file_matches_generator() {
        let regenerated = generate_vectors(include_str!("../../data/concepts.txt"), DIM).unwrap();
        assert_eq!(regenerated, include_str!("../../data/vectors.txt"));
    }

    #[test]
    fn synonyms_close_strangers_far() {
        let v = WordVectors::bundled();
        let c = |a: &str, b: &str| cosine(&v.vector(a).unwrap(), &v.vector(b).unwrap());
        assert!(c("cell", "phone") > 0.75);
        assert!(c("phone", "passport") < 0.5);
    }

    #[test]
    fn unknown_tokens_compose() {
        let v = WordVectors::bundled();
        let dob = v.vector("dateofbirth").unwrap();
        let birth_date = phrase_vector(&v, "birth_date").unwrap();
        let c = cosine(&dob, &birth_date);
        assert!(c > 0.65, "{c}");
        assert_eq!(v.vector("zzqx"), v.vector("zzqx"));
        assert!(v.vector("").is_none());
    }

    #[test]
    fn token_order_does_not_matter() {
        let v = WordVectors::bundled();
        let a = phrase_vector(&v, "date_of_birth").unwrap();
        let b = phrase_vector(&v, "birth_of_date").unwrap();
        assert!((cosine(&a, &b) - 1.0).abs() < 1e-6);
    }
}
