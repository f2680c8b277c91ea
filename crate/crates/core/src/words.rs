//! Word-level helpers over `u64` bitsets of a fixed logical length.

#[inline]
pub(crate) fn word_count(len: usize) -> usize {
    len.div_ceil(64)
}

#[inline]
pub(crate) fn get(words: &[u64], i: usize) -> bool {
    words[i >> 6] >> (i & 63) & 1 == 1
}

#[inline]
pub(crate) fn set(words: &mut [u64], i: usize) {
    words[i >> 6] |= 1 << (i & 63);
}

#[inline]
pub(crate) fn clear(words: &mut [u64], i: usize) {
    words[i >> 6] &= !(1 << (i & 63));
}

#[inline]
pub(crate) fn count(words: &[u64]) -> usize {
    words.iter().map(|w| w.count_ones() as usize).sum()
}

/// Mask for the last word of a bitset of `len` bits.
#[inline]
pub(crate) fn tail_mask(len: usize) -> u64 {
    match len & 63 {
        0 => u64::MAX,
        r => (1u64 << r) - 1,
    }
}

pub(crate) fn fill(words: &mut [u64], len: usize) {
    for w in words.iter_mut() {
        *w = u64::MAX;
    }
    if let Some(last) = words.last_mut() {
        *last &= tail_mask(len);
    }
}

pub(crate) fn is_full(words: &[u64], len: usize) -> bool {
    let n = words.len();
    words[..n - 1].iter().all(|&w| w == u64::MAX) && words[n - 1] == tail_mask(len)
}

/// `dst |= src << shift`, dropping bits at positions `>= len`.
pub(crate) fn shl_or(src: &[u64], shift: usize, len: usize, dst: &mut [u64]) {
    let n = dst.len();
    let (ws, bs) = (shift >> 6, shift & 63);
    if ws >= n {
        return;
    }
    if bs == 0 {
        for i in ws..n {
            dst[i] |= src[i - ws];
        }
    } else {
        dst[ws] |= src[0] << bs;
        for i in ws + 1..n {
            dst[i] |= (src[i - ws] << bs) | (src[i - ws - 1] >> (64 - bs));
        }
    }
    dst[n - 1] &= tail_mask(len);
}

/// `dst |= src >> shift`. Bits of `src` beyond the logical length must be zero.
pub(crate) fn shr_or(src: &[u64], shift: usize, dst: &mut [u64]) {
    let n = dst.len();
    let (ws, bs) = (shift >> 6, shift & 63);
    if ws >= n {
        return;
    }
    if bs == 0 {
        for i in 0..n - ws {
            dst[i] |= src[i + ws];
        }
    } else {
        for i in 0..n - ws {
            let hi = if i + ws + 1 < n { src[i + ws + 1] << (64 - bs) } else { 0 };
            dst[i] |= (src[i + ws] >> bs) | hi;
        }
    }
}

/// `dst |= rotate(src, by)` on the cyclic index space `[0, len)`.
#[inline]
pub(crate) fn rotate_or(src: &[u64], by: usize, len: usize, dst: &mut [u64]) {
    if src.len() == 1 {
        let w = src[0];
        let rotated = if by == 0 { w } else { (w << by) | (w >> (len - by)) };
        dst[0] |= rotated & tail_mask(len);
        return;
    }
    if by == 0 {
        for (d, s) in dst.iter_mut().zip(src) {
            *d |= s;
        }
        return;
    }
    shl_or(src, by, len, dst);
    shr_or(src, len - by, dst);
}

/// Ascending iterator over the set bits.
pub(crate) struct Ones<'a> {
    words: &'a [u64],
    idx: usize,
    cur: u64,
}

impl<'a> Ones<'a> {
    pub(crate) fn new(words: &'a [u64]) -> Self {
        Ones { words, idx: 0, cur: words.first().copied().unwrap_or(0) }
    }
}

impl Iterator for Ones<'_> {
    type Item = usize;

    fn next(&mut self) -> Option<usize> {
        while self.cur == 0 {
            self.idx += 1;
            if self.idx >= self.words.len() {
                return None;
            }
            self.cur = self.words[self.idx];
        }
        let bit = self.cur.trailing_zeros() as usize;
        self.cur &= self.cur - 1;
        Some(self.idx * 64 + bit)
    }
}
