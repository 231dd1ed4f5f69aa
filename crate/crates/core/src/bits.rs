use std::fmt;

use rand::Rng;

/// A fixed-width bit vector holding one rank-wide DRAM row.
///
/// Bits past `len` in the last word are always zero.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct BitRow {
    len: usize,
    words: Vec<u64>,
}

impl BitRow {
    pub fn zeros(len: usize) -> Self {
        BitRow {
            len,
            words: vec![0; len.div_ceil(64)],
        }
    }

    pub fn ones(len: usize) -> Self {
        let mut r = BitRow {
            len,
            words: vec![u64::MAX; len.div_ceil(64)],
        };
        r.mask_tail();
        r
    }

    pub fn from_words(len: usize, words: Vec<u64>) -> Self {
        assert_eq!(words.len(), len.div_ceil(64), "word count does not match length");
        let mut r = BitRow { len, words };
        r.mask_tail();
        r
    }

    pub fn random<R: Rng + ?Sized>(len: usize, rng: &mut R) -> Self {
        let words = (0..len.div_ceil(64)).map(|_| rng.random()).collect();
        Self::from_words(len, words)
    }

    fn mask_tail(&mut self) {
        let rem = self.len % 64;
        if rem != 0 {
            if let Some(last) = self.words.last_mut() {
                *last &= (1u64 << rem) - 1;
            }
        }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn words(&self) -> &[u64] {
        &self.words
    }

    pub fn get(&self, i: usize) -> bool {
        assert!(i < self.len);
        self.words[i / 64] >> (i % 64) & 1 == 1
    }

    pub fn set(&mut self, i: usize, v: bool) {
        assert!(i < self.len);
        let m = 1u64 << (i % 64);
        if v {
            self.words[i / 64] |= m;
        } else {
            self.words[i / 64] &= !m;
        }
    }

    pub fn count_ones(&self) -> u64 {
        self.words.iter().map(|w| w.count_ones() as u64).sum()
    }

    pub fn is_all_zeros(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    pub fn is_all_ones(&self) -> bool {
        *self == BitRow::ones(self.len)
    }

    /// Bitwise complement.
    pub fn not(&self) -> BitRow {
        let mut r = BitRow {
            len: self.len,
            words: self.words.iter().map(|w| !w).collect(),
        };
        r.mask_tail();
        r
    }

    /// Bitwise majority of three rows, `ab + bc + ca`.
    pub fn majority(a: &BitRow, b: &BitRow, c: &BitRow) -> BitRow {
        assert!(a.len == b.len && b.len == c.len);
        let words = a
            .words
            .iter()
            .zip(&b.words)
            .zip(&c.words)
            .map(|((x, y), z)| (x & y) | (y & z) | (z & x))
            .collect();
        BitRow { len: a.len, words }
    }

    /// Reads `width` bits (at most 64) starting at `offset`.
    ///
    /// `width` must divide 64 and `offset` must be a multiple of `width`.
    pub fn field(&self, offset: usize, width: u32) -> u64 {
        debug_assert!(64 % width == 0 && offset.is_multiple_of(width as usize));
        assert!(offset + width as usize <= self.len);
        let w = self.words[offset / 64] >> (offset % 64);
        if width == 64 {
            w
        } else {
            w & ((1u64 << width) - 1)
        }
    }

    pub fn set_field(&mut self, offset: usize, width: u32, value: u64) {
        debug_assert!(64 % width == 0 && offset.is_multiple_of(width as usize));
        assert!(offset + width as usize <= self.len);
        let shift = offset % 64;
        let mask = if width == 64 {
            u64::MAX
        } else {
            ((1u64 << width) - 1) << shift
        };
        let word = &mut self.words[offset / 64];
        *word = (*word & !mask) | ((value << shift) & mask);
    }

    /// Copies `width` bits at `offset` from `src`.
    pub fn copy_field_from(&mut self, src: &BitRow, offset: usize, width: u32) {
        self.set_field(offset, width, src.field(offset, width));
    }
}

impl fmt::Debug for BitRow {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "BitRow[{}](", self.len)?;
        for w in self.words.iter().take(2) {
            write!(f, "{w:016x} ")?;
        }
        if self.words.len() > 2 {
            write!(f, "...")?;
        }
        write!(f, ")")
    }
}
