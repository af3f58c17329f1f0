//! Bitstring helpers.
//!
//! A bitstring is a `[bool]` with `s[0]` printed first. Its *code* is
//! `Σ s[i] 2^i`, so `s[0]` is the least significant bit. Ties between states
//! are broken by ascending code, i.e. lexicographically on the reversed
//! string.

/// `"1010"`-style rendering.
pub fn to_string(s: &[bool]) -> String {
    s.iter().map(|&b| if b { '1' } else { '0' }).collect()
}

/// Parses a string of `0`/`1` characters.
pub fn parse(text: &str) -> Option<Vec<bool>> {
    text.chars()
        .map(|c| match c {
            '0' => Some(false),
            '1' => Some(true),
            _ => None,
        })
        .collect()
}

pub fn code(s: &[bool]) -> u64 {
    s.iter().rev().fold(0u64, |acc, &b| (acc << 1) | b as u64)
}

pub fn from_code(code: u64, p: usize) -> Vec<bool> {
    (0..p).map(|i| (code >> i) & 1 == 1).collect()
}

pub fn hamming(a: &[bool], b: &[bool]) -> usize {
    a.iter().zip(b).filter(|(x, y)| x != y).count()
}
