//! Jaro-Winkler and Ratcliff-Obershelp similarity over Unicode scalars.

use std::collections::HashMap;

/// Jaro similarity with a search window of `max(len)/2 - 1`.
pub fn jaro(a: &str, b: &str) -> f64 {
    let s1: Vec<char> = a.chars().collect();
    let s2: Vec<char> = b.chars().collect();
    jaro_chars(&s1, &s2)
}

fn jaro_chars(s1: &[char], s2: &[char]) -> f64 {
    if s1.is_empty() || s2.is_empty() {
        return 0.0;
    }
    let range = (s1.len().max(s2.len()) / 2).saturating_sub(1);
    let mut f1 = vec![false; s1.len()];
    let mut f2 = vec![false; s2.len()];
    let mut common = 0usize;
    for (i, c) in s1.iter().enumerate() {
        let lo = i.saturating_sub(range);
        let hi = (i + range).min(s2.len() - 1);
        for j in lo..=hi {
            if !f2[j] && s2[j] == *c {
                f1[i] = true;
                f2[j] = true;
                common += 1;
                break;
            }
        }
    }
    if common == 0 {
        return 0.0;
    }
    let mut k = 0;
    let mut trans = 0usize;
    for (i, _) in s1.iter().enumerate().filter(|(i, _)| f1[*i]) {
        let mut j = k;
        while j < s2.len() {
            if f2[j] {
                k = j + 1;
                break;
            }
            j += 1;
        }
        if s1[i] != s2[j] {
            trans += 1;
        }
    }
    let m = common as f64;
    let t = (trans / 2) as f64;
    (m / s1.len() as f64 + m / s2.len() as f64 + (m - t) / m) / 3.0
}

/// Jaro-Winkler: prefix bonus of 0.1 per shared leading char (up to 4),
/// applied only when the Jaro score exceeds 0.7.
pub fn jaro_winkler(a: &str, b: &str) -> f64 {
    let s1: Vec<char> = a.chars().collect();
    let s2: Vec<char> = b.chars().collect();
    let mut w = jaro_chars(&s1, &s2);
    if w > 0.7 {
        let l = s1.iter().zip(&s2).take(4).take_while(|(x, y)| x == y).count();
        w += l as f64 * 0.1 * (1.0 - w);
    }
    w
}

struct Matcher<'a> {
    a: &'a [char],
    b: &'a [char],
    b2j: HashMap<char, Vec<usize>>,
}

impl<'a> Matcher<'a> {
    fn new(a: &'a [char], b: &'a [char]) -> Self {
        let mut b2j: HashMap<char, Vec<usize>> = HashMap::new();
        for (j, c) in b.iter().enumerate() {
            b2j.entry(*c).or_default().push(j);
        }
        // automatic junk heuristic for long sequences
        if b.len() >= 200 {
            let ntest = b.len() / 100 + 1;
            b2j.retain(|_, v| v.len() <= ntest);
        }
        Self { a, b, b2j }
    }

    /// Longest common block in a[alo..ahi] × b[blo..bhi]; earliest in `a`,
    /// then earliest in `b`, on ties.
    fn longest(&self, alo: usize, ahi: usize, blo: usize, bhi: usize) -> (usize, usize, usize) {
        let (mut bi, mut bj, mut bk) = (alo, blo, 0usize);
        let mut j2len: HashMap<usize, usize> = HashMap::new();
        for i in alo..ahi {
            let mut next: HashMap<usize, usize> = HashMap::new();
            if let Some(js) = self.b2j.get(&self.a[i]) {
                for &j in js {
                    if j < blo {
                        continue;
                    }
                    if j >= bhi {
                        break;
                    }
                    let k = if j > 0 { j2len.get(&(j - 1)).copied().unwrap_or(0) } else { 0 } + 1;
                    next.insert(j, k);
                    if k > bk {
                        bi = i + 1 - k;
                        bj = j + 1 - k;
                        bk = k;
                    }
                }
            }
            j2len = next;
        }
        // popular elements were left out of b2j; extend over equal neighbours
        while bi > alo && bj > blo && self.a[bi - 1] == self.b[bj - 1] {
            bi -= 1;
            bj -= 1;
            bk += 1;
        }
        while bi + bk < ahi && bj + bk < bhi && self.a[bi + bk] == self.b[bj + bk] {
            bk += 1;
        }
        (bi, bj, bk)
    }

    fn matched(&self) -> usize {
        let mut queue = vec![(0, self.a.len(), 0, self.b.len())];
        let mut total = 0;
        while let Some((alo, ahi, blo, bhi)) = queue.pop() {
            let (i, j, k) = self.longest(alo, ahi, blo, bhi);
            if k > 0 {
                total += k;
                if alo < i && blo < j {
                    queue.push((alo, i, blo, j));
                }
                if i + k < ahi && j + k < bhi {
                    queue.push((i + k, ahi, j + k, bhi));
                }
            }
        }
        total
    }
}

/// Ratcliff-Obershelp (gestalt) ratio `2M / (|a| + |b|)`; 1.0 for two
/// empty strings.
pub fn ratcliff_obershelp(a: &str, b: &str) -> f64 {
    let s1: Vec<char> = a.chars().collect();
    let s2: Vec<char> = b.chars().collect();
    let total = s1.len() + s2.len();
    if total == 0 {
        return 1.0;
    }
    2.0 * Matcher::new(&s1, &s2).matched() as f64 / total as f64
}
