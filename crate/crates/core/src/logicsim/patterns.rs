// SPDX-License-Identifier: Apache-2.0

use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::SimError;

/// Input patterns packed 64 per machine word, one lane per primary input.
///
/// Bits past `count` are always zero.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PatternBlock {
    width: usize,
    count: usize,
    lanes: Vec<Vec<u64>>,
}

pub(crate) fn words_for(count: usize) -> usize {
    count.div_ceil(64)
}

/// Mask of the valid bits of word `w` for `count` patterns.
pub(crate) fn tail_mask(count: usize, w: usize) -> u64 {
    let rem = count.saturating_sub(w * 64);
    if rem >= 64 {
        !0
    } else {
        (1u64 << rem) - 1
    }
}

impl PatternBlock {
    pub fn zeros(width: usize, count: usize) -> Self {
        PatternBlock {
            width,
            count,
            lanes: vec![vec![0; words_for(count)]; width],
        }
    }

    pub fn empty(width: usize) -> Self {
        Self::zeros(width, 0)
    }

    pub fn from_lanes(width: usize, count: usize, mut lanes: Vec<Vec<u64>>) -> Self {
        assert_eq!(lanes.len(), width, "one lane per input");
        for lane in lanes.iter_mut() {
            lane.resize(words_for(count), 0);
            for (w, word) in lane.iter_mut().enumerate() {
                *word &= tail_mask(count, w);
            }
        }
        PatternBlock { width, count, lanes }
    }

    pub fn from_rows(width: usize, rows: &[Vec<bool>]) -> Result<Self, SimError> {
        let mut block = Self::zeros(width, rows.len());
        for (t, row) in rows.iter().enumerate() {
            if row.len() != width {
                return Err(SimError::WidthMismatch {
                    expected: width,
                    got: row.len(),
                });
            }
            for (i, &b) in row.iter().enumerate() {
                if b {
                    block.lanes[i][t / 64] |= 1 << (t % 64);
                }
            }
        }
        Ok(block)
    }

    /// Patterns written as `0`/`1` strings in input order.
    pub fn from_strings<S: AsRef<str>>(width: usize, rows: &[S]) -> Result<Self, SimError> {
        let mut parsed = Vec::with_capacity(rows.len());
        for (line, row) in rows.iter().enumerate() {
            let mut bits = Vec::with_capacity(width);
            for ch in row.as_ref().chars() {
                match ch {
                    '0' => bits.push(false),
                    '1' => bits.push(true),
                    _ => {
                        return Err(SimError::BadPattern {
                            line: line + 1,
                            message: format!("unexpected character `{ch}`"),
                        })
                    }
                }
            }
            parsed.push(bits);
        }
        Self::from_rows(width, &parsed)
    }

    /// Uniform random patterns from a caller-supplied generator.
    pub fn random<R: Rng>(width: usize, count: usize, rng: &mut R) -> Self {
        let words = words_for(count);
        let lanes = (0..width)
            .map(|_| (0..words).map(|w| rng.random::<u64>() & tail_mask(count, w)).collect())
            .collect();
        PatternBlock { width, count, lanes }
    }

    /// Uniform random patterns, reproducible from `seed`.
    pub fn seeded(width: usize, count: usize, seed: u64) -> Self {
        Self::random(width, count, &mut ChaCha8Rng::seed_from_u64(seed))
    }

    /// All `2^width` patterns; pattern `j` assigns bit `i` of `j` to input `i`.
    pub fn exhaustive(width: usize) -> Result<Self, SimError> {
        if width > super::MAX_EXHAUSTIVE_INPUTS {
            return Err(SimError::TooManyInputs {
                inputs: width,
                max: super::MAX_EXHAUSTIVE_INPUTS,
            });
        }
        let count = 1usize << width;
        let words = words_for(count);
        let lanes = (0..width)
            .map(|i| {
                (0..words)
                    .map(|w| exhaustive_word(i, w) & tail_mask(count, w))
                    .collect()
            })
            .collect();
        Ok(PatternBlock { width, count, lanes })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn count(&self) -> usize {
        self.count
    }

    pub fn is_empty(&self) -> bool {
        self.count == 0
    }

    pub fn words(&self) -> usize {
        words_for(self.count)
    }

    pub fn lane(&self, input: usize) -> &[u64] {
        &self.lanes[input]
    }

    pub fn word(&self, input: usize, w: usize) -> u64 {
        self.lanes[input][w]
    }

    pub fn get(&self, pattern: usize, input: usize) -> bool {
        assert!(pattern < self.count);
        self.lanes[input][pattern / 64] >> (pattern % 64) & 1 == 1
    }

    pub fn row(&self, pattern: usize) -> Vec<bool> {
        (0..self.width).map(|i| self.get(pattern, i)).collect()
    }

    pub fn rows(&self) -> impl Iterator<Item = Vec<bool>> + '_ {
        (0..self.count).map(|t| self.row(t))
    }

    pub fn push(&mut self, row: &[bool]) {
        assert_eq!(row.len(), self.width);
        let t = self.count;
        self.count += 1;
        for (i, &b) in row.iter().enumerate() {
            let lane = &mut self.lanes[i];
            if lane.len() < words_for(self.count) {
                lane.push(0);
            }
            if b {
                lane[t / 64] |= 1 << (t % 64);
            }
        }
    }

    /// Patterns of `self` followed by those of `other`.
    pub fn concat(&self, other: &PatternBlock) -> PatternBlock {
        assert_eq!(self.width, other.width);
        let mut out = self.clone();
        for t in 0..other.count {
            out.push(&other.row(t));
        }
        out
    }

    /// Sub-block of the given pattern indices, in the given order.
    pub fn select(&self, indices: &[usize]) -> PatternBlock {
        let mut out = PatternBlock::zeros(self.width, indices.len());
        for (k, &t) in indices.iter().enumerate() {
            for i in 0..self.width {
                if self.get(t, i) {
                    out.lanes[i][k / 64] |= 1 << (k % 64);
                }
            }
        }
        out
    }

    /// Pattern-file text: one `0`/`1` string per line in input order.
    pub fn to_text(&self) -> String {
        let mut out = String::with_capacity(self.count * (self.width + 1));
        for t in 0..self.count {
            for i in 0..self.width {
                out.push(if self.get(t, i) { '1' } else { '0' });
            }
            out.push('\n');
        }
        out
    }

    /// Parses pattern-file text (`#` comments and blank lines ignored).
    pub fn parse(width: usize, text: &str) -> Result<Self, SimError> {
        let mut rows = Vec::new();
        for (idx, line) in text.lines().enumerate() {
            let body = line.split('#').next().unwrap_or("").trim();
            if body.is_empty() {
                continue;
            }
            if body.len() != width {
                return Err(SimError::BadPattern {
                    line: idx + 1,
                    message: format!("expected {width} bits, found {}", body.len()),
                });
            }
            let mut bits = Vec::with_capacity(width);
            for ch in body.chars() {
                match ch {
                    '0' => bits.push(false),
                    '1' => bits.push(true),
                    _ => {
                        return Err(SimError::BadPattern {
                            line: idx + 1,
                            message: format!("unexpected character `{ch}`"),
                        })
                    }
                }
            }
            rows.push(bits);
        }
        Self::from_rows(width, &rows)
    }

    /// Debug listing with a header comment.
    pub fn to_text_with_header(&self, header: &str) -> String {
        let mut out = String::new();
        for line in header.lines() {
            let _ = writeln!(out, "# {line}");
        }
        out.push_str(&self.to_text());
        out
    }
}

/// Word `w` of input lane `i` in exhaustive enumeration order.
pub(crate) fn exhaustive_word(i: usize, w: usize) -> u64 {
    const LOW: [u64; 6] = [
        0xAAAA_AAAA_AAAA_AAAA,
        0xCCCC_CCCC_CCCC_CCCC,
        0xF0F0_F0F0_F0F0_F0F0,
        0xFF00_FF00_FF00_FF00,
        0xFFFF_0000_FFFF_0000,
        0xFFFF_FFFF_0000_0000,
    ];
    if i < 6 {
        LOW[i]
    } else if w >> (i - 6) & 1 == 1 {
        !0
    } else {
        0
    }
}
