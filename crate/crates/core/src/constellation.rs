//! Unit-energy M-PSK alphabets with binary-reflected Gray labelling.
//!
//! Symbol `m` (1-based) sits at phase `(2(m-1) + 1)·π/M` and carries the Gray
//! code of `m - 1`, most significant bit first. All public indices are 1-based.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;

use crate::error::{Error, Result};

/// A fixed-length word of bits, most significant bit first.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct BitWord {
    value: u32,
    len: u8,
}

impl BitWord {
    /// Builds a word from the low `len` bits of `value`.
    pub fn new(value: u32, len: usize) -> Self {
        assert!(len <= 32, "bit-word longer than 32 bits");
        let mask = if len == 32 {
            u32::MAX
        } else {
            (1u32 << len) - 1
        };
        Self {
            value: value & mask,
            len: len as u8,
        }
    }

    pub fn from_bits(bits: &[bool]) -> Self {
        let value = bits.iter().fold(0u32, |acc, &b| (acc << 1) | b as u32);
        Self::new(value, bits.len())
    }

    pub fn value(self) -> u32 {
        self.value
    }

    pub fn len(self) -> usize {
        self.len as usize
    }

    pub fn is_empty(self) -> bool {
        self.len == 0
    }

    /// Bit at position `i`, counting from the most significant bit.
    pub fn bit(self, i: usize) -> bool {
        assert!(i < self.len(), "bit position out of range");
        (self.value >> (self.len() - 1 - i)) & 1 == 1
    }

    pub fn bits(self) -> Vec<bool> {
        (0..self.len()).map(|i| self.bit(i)).collect()
    }

    pub fn hamming(self, other: BitWord) -> u32 {
        (self.value ^ other.value).count_ones()
    }
}

impl fmt::Display for BitWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in 0..self.len() {
            f.write_str(if self.bit(i) { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl FromStr for BitWord {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s.len() > 32 {
            return Err(crate::error::invalid("bits", "more than 32 bits"));
        }
        let bits = s
            .chars()
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                other => Err(crate::error::invalid(
                    "bits",
                    format!("unexpected character {other:?}"),
                )),
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self::from_bits(&bits))
    }
}

/// Binary-reflected Gray code.
pub fn gray_code(n: u32) -> u32 {
    n ^ (n >> 1)
}

fn gray_decode(mut g: u32) -> u32 {
    let mut n = g;
    while g > 1 {
        g >>= 1;
        n ^= g;
    }
    n
}

#[derive(Debug, Clone, PartialEq)]
pub struct Constellation {
    order: usize,
    bits_per_symbol: usize,
    symbols: Vec<Complex64>,
    re: Vec<f64>,
    im: Vec<f64>,
    // word of symbol at 0-based index
    words: Vec<u32>,
    // 0-based symbol index carrying a word
    index_of_word: Vec<usize>,
}

impl Constellation {
    /// Builds the M-PSK alphabet of the given order (a power of two, at least 4).
    pub fn new(order: usize) -> Result<Self> {
        if order < 4 || !order.is_power_of_two() || order > 1 << 30 {
            return Err(Error::InvalidOrder(order));
        }
        let bits_per_symbol = order.trailing_zeros() as usize;
        let symbols: Vec<Complex64> = (0..order)
            .map(|i| Complex64::from_polar(1.0, (2 * i + 1) as f64 * PI / order as f64))
            .collect();
        let re = symbols.iter().map(|s| s.re).collect();
        let im = symbols.iter().map(|s| s.im).collect();
        let words: Vec<u32> = (0..order as u32).map(gray_code).collect();
        let mut index_of_word = vec![0; order];
        for (i, &w) in words.iter().enumerate() {
            index_of_word[w as usize] = i;
        }
        debug_assert!(words
            .iter()
            .all(|&w| gray_decode(w) as usize == index_of_word[w as usize]));
        Ok(Self {
            order,
            bits_per_symbol,
            symbols,
            re,
            im,
            words,
            index_of_word,
        })
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn bits_per_symbol(&self) -> usize {
        self.bits_per_symbol
    }

    /// The alphabet in index order (position 0 holds symbol index 1).
    pub fn symbols(&self) -> &[Complex64] {
        &self.symbols
    }

    pub fn symbol(&self, index: usize) -> Result<Complex64> {
        self.check_index(index)?;
        Ok(self.symbols[index - 1])
    }

    /// 1-based index of the symbol carrying `bits`.
    pub fn index_of_bits(&self, bits: BitWord) -> Result<usize> {
        if bits.len() != self.bits_per_symbol {
            return Err(Error::BitLength {
                expected: self.bits_per_symbol,
                got: bits.len(),
            });
        }
        Ok(self.index_of_word[bits.value() as usize] + 1)
    }

    pub fn bits_to_symbol(&self, bits: BitWord) -> Result<Complex64> {
        let index = self.index_of_bits(bits)?;
        Ok(self.symbols[index - 1])
    }

    pub fn symbol_to_bits(&self, index: usize) -> Result<BitWord> {
        self.check_index(index)?;
        Ok(BitWord::new(self.words[index - 1], self.bits_per_symbol))
    }

    /// `|s_m - s_m'|`, evaluated as `2|sin((m - m')·π/M)|`.
    pub fn chord_distance(&self, m: usize, m_prime: usize) -> Result<f64> {
        self.check_index(m)?;
        self.check_index(m_prime)?;
        Ok(chord(m as f64 - m_prime as f64, self.order))
    }

    pub(crate) fn real_parts(&self) -> &[f64] {
        &self.re
    }

    pub(crate) fn imag_parts(&self) -> &[f64] {
        &self.im
    }

    // Unchecked 0-based accessors for the simulation hot path.
    pub(crate) fn word_at(&self, i: usize) -> u32 {
        self.words[i]
    }

    pub(crate) fn index_of_word(&self, word: u32) -> usize {
        self.index_of_word[word as usize]
    }

    fn check_index(&self, index: usize) -> Result<()> {
        if index == 0 || index > self.order {
            return Err(Error::IndexOutOfRange {
                index,
                order: self.order,
            });
        }
        Ok(())
    }
}

/// Chord length between two unit-circle points `steps` positions apart on an `order`-gon.
pub(crate) fn chord(steps: f64, order: usize) -> f64 {
    2.0 * (steps * PI / order as f64).sin().abs()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::FRAC_1_SQRT_2;

    const ORDERS: [usize; 5] = [4, 8, 16, 32, 64];

    fn close(a: Complex64, b: Complex64, tol: f64) -> bool {
        (a - b).norm() < tol
    }

    #[test]
    fn rejects_bad_orders() {
        for bad in [0, 1, 2, 3, 6, 12, 24, 100] {
            assert_eq!(Constellation::new(bad), Err(Error::InvalidOrder(bad)));
        }
    }

    #[test]
    fn qpsk_first_symbol() {
        let c = Constellation::new(4).unwrap();
        let s = c.symbol(1).unwrap();
        assert!((s.re - FRAC_1_SQRT_2).abs() < 1e-12 && (s.im - FRAC_1_SQRT_2).abs() < 1e-12);
    }

    #[test]
    fn qpsk_gray_words_around_circle() {
        let c = Constellation::new(4).unwrap();
        let words: Vec<String> = (1..=4)
            .map(|m| c.symbol_to_bits(m).unwrap().to_string())
            .collect();
        assert_eq!(words, ["00", "01", "11", "10"]);
    }

    #[test]
    fn eight_psk_fifth_symbol() {
        let c = Constellation::new(8).unwrap();
        let expected = Complex64::from_polar(1.0, 9.0 * PI / 8.0);
        assert!(close(c.symbol(5).unwrap(), expected, 1e-15));
        assert_eq!(c.symbol_to_bits(5).unwrap().to_string(), "110");
    }

    #[test]
    fn bits_to_symbol_examples() {
        let c4 = Constellation::new(4).unwrap();
        let c8 = Constellation::new(8).unwrap();
        let s = c4.bits_to_symbol("00".parse().unwrap()).unwrap();
        assert!(close(s, Complex64::from_polar(1.0, PI / 4.0), 1e-15));
        let s = c4.bits_to_symbol("11".parse().unwrap()).unwrap();
        assert!(close(s, Complex64::from_polar(1.0, 5.0 * PI / 4.0), 1e-15));
        let s = c8.bits_to_symbol("000".parse().unwrap()).unwrap();
        assert!(close(s, Complex64::from_polar(1.0, PI / 8.0), 1e-15));
    }

    #[test]
    fn symbol_to_bits_examples() {
        let c4 = Constellation::new(4).unwrap();
        assert_eq!(c4.symbol_to_bits(1).unwrap().to_string(), "00");
        assert_eq!(c4.symbol_to_bits(3).unwrap().to_string(), "11");
    }

    #[test]
    fn wrong_inputs_are_rejected() {
        let c = Constellation::new(8).unwrap();
        assert_eq!(
            c.bits_to_symbol("01".parse().unwrap()),
            Err(Error::BitLength {
                expected: 3,
                got: 2
            })
        );
        assert!(matches!(
            c.symbol_to_bits(0),
            Err(Error::IndexOutOfRange { .. })
        ));
        assert!(matches!(
            c.symbol_to_bits(9),
            Err(Error::IndexOutOfRange { .. })
        ));
        assert!(c.chord_distance(1, 9).is_err());
    }

    #[test]
    fn chord_distance_examples() {
        let c8 = Constellation::new(8).unwrap();
        let c4 = Constellation::new(4).unwrap();
        assert!((c8.chord_distance(1, 5).unwrap() - 2.0).abs() < 1e-15);
        assert!((c4.chord_distance(1, 2).unwrap() - 2f64.sqrt()).abs() < 1e-12);
        let direct = (c8.symbol(1).unwrap() - c8.symbol(2).unwrap()).norm();
        assert!((c8.chord_distance(1, 2).unwrap() - direct).abs() < 1e-12);
        assert!((direct - 0.76537).abs() < 1e-5);
    }

    #[test]
    fn chord_matches_subtraction_everywhere() {
        for &order in &ORDERS {
            let c = Constellation::new(order).unwrap();
            for m in 1..=order {
                for mp in 1..=order {
                    let direct = (c.symbol(m).unwrap() - c.symbol(mp).unwrap()).norm();
                    assert!((c.chord_distance(m, mp).unwrap() - direct).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn unit_energy_exact_phase_and_zero_sum() {
        for &order in &ORDERS {
            let c = Constellation::new(order).unwrap();
            let mut sum = Complex64::new(0.0, 0.0);
            for m in 1..=order {
                let s = c.symbol(m).unwrap();
                assert!((s.norm() - 1.0).abs() < 1e-15);
                let phase = (m as f64 - 1.0) * 2.0 * PI / order as f64 + PI / order as f64;
                assert!(close(s, Complex64::new(phase.cos(), phase.sin()), 1e-15));
                sum += s;
            }
            assert!(sum.norm() < 1e-12);
        }
    }

    #[test]
    fn gray_adjacency_and_bijection() {
        for &order in &ORDERS {
            let c = Constellation::new(order).unwrap();
            let mut seen = vec![false; order];
            for m in 1..=order {
                let w = c.symbol_to_bits(m).unwrap();
                let next = c.symbol_to_bits(m % order + 1).unwrap();
                assert_eq!(w.hamming(next), 1, "order {order}, m {m}");
                assert!(!seen[w.value() as usize]);
                seen[w.value() as usize] = true;
            }
        }
    }

    proptest! {
        #[test]
        fn bits_round_trip(log2m in 2usize..=6, raw in any::<u32>()) {
            let c = Constellation::new(1 << log2m).unwrap();
            let word = BitWord::new(raw, log2m);
            let index = c.index_of_bits(word).unwrap();
            prop_assert_eq!(c.symbol_to_bits(index).unwrap(), word);
            prop_assert_eq!(c.bits_to_symbol(word).unwrap(), c.symbol(index).unwrap());
        }

        #[test]
        fn bitword_display_parse(raw in any::<u32>(), len in 1usize..=32) {
            let w = BitWord::new(raw, len);
            prop_assert_eq!(w.to_string().parse::<BitWord>().unwrap(), w);
        }
    }
}
