//! Points of the supported phase spaces: the circle ℝ/ℤ and truncated
//! binary sequence space {0,1}^N.

use std::fmt;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A point on the circle ℝ/ℤ, stored as its representative in `[0, 1)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CirclePoint(f64);

impl CirclePoint {
    /// Wrap an arbitrary real onto `[0, 1)`.
    pub fn new(value: f64) -> Self {
        let mut v = value.rem_euclid(1.0);
        // rem_euclid can return 1.0 for tiny negative inputs.
        if v >= 1.0 {
            v = 0.0;
        }
        CirclePoint(v)
    }

    pub fn value(self) -> f64 {
        self.0
    }

    /// Geodesic (shorter-arc) distance on the circle.
    pub fn arc_distance(self, other: CirclePoint) -> f64 {
        let d = (self.0 - other.0).abs();
        d.min(1.0 - d)
    }

    /// Bit pattern of the representative; used for exact merging of atoms.
    pub fn key(self) -> u64 {
        self.0.to_bits()
    }
}

impl fmt::Display for CirclePoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// A finite binary word, bit-packed.
///
/// Bit `i` (0-based) is the `(i+1)`-th symbol of the sequence. Packing is
/// little-endian within each limb so that `trailing_zeros` on an XOR of
/// limbs locates the first differing symbol. Unused high bits of the last
/// limb are kept at zero.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct BitWord {
    limbs: Vec<u64>,
    len: usize,
}

impl BitWord {
    pub fn zeros(len: usize) -> Self {
        BitWord {
            limbs: vec![0; len.div_ceil(64)],
            len,
        }
    }

    /// Build from boolean symbols.
    pub fn from_bits(bits: &[bool]) -> Self {
        let mut w = BitWord::zeros(bits.len());
        for (i, &b) in bits.iter().enumerate() {
            w.set(i, b);
        }
        w
    }

    /// Parse a `"0110"`-style string; anything but '0'/'1' is rejected.
    pub fn parse(s: &str) -> Result<Self> {
        let mut bits = Vec::with_capacity(s.len());
        for c in s.chars() {
            match c {
                '0' => bits.push(false),
                '1' => bits.push(true),
                other => {
                    return Err(Error::InvalidArgument(format!(
                        "invalid symbol {other:?} in bit word"
                    )))
                }
            }
        }
        Ok(BitWord::from_bits(&bits))
    }

    /// i.i.d. Bernoulli(p) word of the given length.
    pub fn sample<R: Rng + ?Sized>(len: usize, p: f64, rng: &mut R) -> Self {
        let mut w = BitWord::zeros(len);
        for i in 0..len {
            if rng.random::<f64>() < p {
                w.set(i, true);
            }
        }
        w
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    #[inline]
    pub fn get(&self, i: usize) -> bool {
        debug_assert!(i < self.len);
        (self.limbs[i / 64] >> (i % 64)) & 1 == 1
    }

    #[inline]
    pub fn set(&mut self, i: usize, v: bool) {
        debug_assert!(i < self.len);
        let mask = 1u64 << (i % 64);
        if v {
            self.limbs[i / 64] |= mask;
        } else {
            self.limbs[i / 64] &= !mask;
        }
    }

    pub fn limbs(&self) -> &[u64] {
        &self.limbs
    }

    /// 0-based index of the first symbol where the words differ, or `None`
    /// if they agree on their whole (common) length.
    pub fn first_diff(&self, other: &BitWord) -> Result<Option<usize>> {
        if self.len != other.len {
            return Err(Error::LengthMismatch {
                left: self.len,
                right: other.len,
            });
        }
        for (w, (a, b)) in self.limbs.iter().zip(other.limbs.iter()).enumerate() {
            let x = a ^ b;
            if x != 0 {
                let idx = w * 64 + x.trailing_zeros() as usize;
                return Ok(if idx < self.len { Some(idx) } else { None });
            }
        }
        Ok(None)
    }

    /// Number of mismatching symbols among the first `k`.
    pub fn mismatches_within(&self, other: &BitWord, k: usize) -> Result<usize> {
        if self.len != other.len {
            return Err(Error::LengthMismatch {
                left: self.len,
                right: other.len,
            });
        }
        if k > self.len {
            return Err(Error::InvalidArgument(format!(
                "window {k} exceeds word length {}",
                self.len
            )));
        }
        let mut count = 0usize;
        let full = k / 64;
        for w in 0..full {
            count += (self.limbs[w] ^ other.limbs[w]).count_ones() as usize;
        }
        let rem = k % 64;
        if rem > 0 {
            let mask = (1u64 << rem) - 1;
            count += ((self.limbs[full] ^ other.limbs[full]) & mask).count_ones() as usize;
        }
        Ok(count)
    }

    /// Length of the maximal run of ones starting at position 0.
    pub fn leading_ones(&self) -> usize {
        for (w, &limb) in self.limbs.iter().enumerate() {
            if limb != u64::MAX {
                let run = w * 64 + (!limb).trailing_zeros() as usize;
                return run.min(self.len);
            }
        }
        self.len
    }

    /// Position of the first one at or after `from`, if any.
    pub fn first_one_from(&self, from: usize) -> Option<usize> {
        if from >= self.len {
            return None;
        }
        let mut w = from / 64;
        let mut limb = self.limbs[w] & !((1u64 << (from % 64)) - 1);
        loop {
            if limb != 0 {
                let idx = w * 64 + limb.trailing_zeros() as usize;
                return if idx < self.len { Some(idx) } else { None };
            }
            w += 1;
            if w >= self.limbs.len() {
                return None;
            }
            limb = self.limbs[w];
        }
    }

    /// The word with its first symbol removed (length shrinks by one).
    pub fn drop_first(&self) -> BitWord {
        debug_assert!(self.len >= 1);
        let mut out = BitWord::zeros(self.len - 1);
        let n = out.limbs.len();
        for w in 0..n {
            let lo = self.limbs[w] >> 1;
            let hi = if w + 1 < self.limbs.len() {
                self.limbs[w + 1] << 63
            } else {
                0
            };
            out.limbs[w] = lo | hi;
        }
        out.clear_tail();
        out
    }

    /// First `k` symbols as a fresh word.
    pub fn prefix(&self, k: usize) -> BitWord {
        debug_assert!(k <= self.len);
        let mut out = BitWord {
            limbs: self.limbs[..k.div_ceil(64)].to_vec(),
            len: k,
        };
        out.clear_tail();
        out
    }

    /// Overwrite positions `[start, start+count)` with the given symbol.
    pub fn fill_range(&mut self, start: usize, count: usize, v: bool) {
        for i in start..start + count {
            self.set(i, v);
        }
    }

    fn clear_tail(&mut self) {
        let rem = self.len % 64;
        if rem > 0 {
            if let Some(last) = self.limbs.last_mut() {
                *last &= (1u64 << rem) - 1;
            }
        }
    }
}

impl fmt::Display for BitWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in 0..self.len {
            write!(f, "{}", if self.get(i) { '1' } else { '0' })?;
        }
        Ok(())
    }
}

/// A point of whichever phase space the current system lives on.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Point {
    Circle(CirclePoint),
    Word(BitWord),
}

impl Point {
    pub fn kind_name(&self) -> &'static str {
        match self {
            Point::Circle(_) => "circle",
            Point::Word(_) => "word",
        }
    }

    pub fn as_circle(&self) -> Option<CirclePoint> {
        match self {
            Point::Circle(c) => Some(*c),
            Point::Word(_) => None,
        }
    }

    pub fn as_word(&self) -> Option<&BitWord> {
        match self {
            Point::Word(w) => Some(w),
            Point::Circle(_) => None,
        }
    }

    /// Exact identity key used when merging duplicate atoms.
    pub fn merge_key(&self) -> (u8, u64, Vec<u64>) {
        match self {
            Point::Circle(c) => (0, c.key(), Vec::new()),
            Point::Word(w) => (1, w.len() as u64, w.limbs().to_vec()),
        }
    }
}

impl From<CirclePoint> for Point {
    fn from(c: CirclePoint) -> Self {
        Point::Circle(c)
    }
}

impl From<BitWord> for Point {
    fn from(w: BitWord) -> Self {
        Point::Word(w)
    }
}

impl fmt::Display for Point {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Point::Circle(c) => write!(f, "{c}"),
            Point::Word(w) => write!(f, "{w}"),
        }
    }
}
