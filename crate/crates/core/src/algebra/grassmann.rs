//! Basis bookkeeping for the Grassmann algebra on `N` generators.
//!
//! Basis monomials `e_S` are indexed by subsets `S ⊆ {1..N}`, stored as
//! bitmasks (bit `i-1` set for generator `i`) and ordered graded-
//! lexicographically: first by `|S|`, then lexicographically on the sorted
//! generator lists. Index 0 is the unit `e_∅`.

use std::sync::OnceLock;

pub const MAX_GENERATORS: usize = 12;

#[derive(Debug)]
pub struct GrassmannBasis {
    generators: usize,
    masks: Vec<u32>,
    index_of: Vec<usize>,
}

impl GrassmannBasis {
    fn build(generators: usize) -> Self {
        let dim = 1usize << generators;
        let mut masks: Vec<u32> = (0..dim as u32).collect();
        masks.sort_by_key(|&m| (m.count_ones(), bit_positions(m)));
        let mut index_of = vec![0; dim];
        for (i, &m) in masks.iter().enumerate() {
            index_of[m as usize] = i;
        }
        Self {
            generators,
            masks,
            index_of,
        }
    }

    /// Shared table for `generators ≤ MAX_GENERATORS`.
    pub fn get(generators: usize) -> &'static GrassmannBasis {
        static TABLES: [OnceLock<GrassmannBasis>; MAX_GENERATORS + 1] = [const { OnceLock::new() }; MAX_GENERATORS + 1];
        assert!(generators <= MAX_GENERATORS, "too many Grassmann generators");
        TABLES[generators].get_or_init(|| GrassmannBasis::build(generators))
    }

    pub fn generators(&self) -> usize {
        self.generators
    }

    pub fn dim(&self) -> usize {
        self.masks.len()
    }

    pub fn mask(&self, index: usize) -> u32 {
        self.masks[index]
    }

    pub fn index(&self, mask: u32) -> usize {
        self.index_of[mask as usize]
    }

    pub fn degree(&self, index: usize) -> u32 {
        self.masks[index].count_ones()
    }
}

fn bit_positions(mask: u32) -> Vec<u32> {
    (0..32).filter(|b| mask & (1 << b) != 0).collect()
}

/// Sign of `e_S · e_T = ±e_{S∪T}` for disjoint `S`, `T`: one factor of −1
/// per pair `(i ∈ S, j ∈ T)` with `i > j`.
pub fn wedge_sign(s: u32, t: u32) -> f64 {
    debug_assert_eq!(s & t, 0);
    let mut swaps = 0u32;
    let mut rest = t;
    while rest != 0 {
        let j = rest.trailing_zeros();
        swaps += (s >> (j + 1)).count_ones();
        rest &= rest - 1;
    }
    if swaps.is_multiple_of(2) {
        1.0
    } else {
        -1.0
    }
}

/// Reversal sign (−1)^{k(k−1)/2} on a degree-k monomial.
pub fn reversal_sign(degree: u32) -> f64 {
    match degree % 4 {
        0 | 1 => 1.0,
        _ => -1.0,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn graded_lex_order_for_three_generators() {
        let b = GrassmannBasis::get(3);
        let got: Vec<u32> = (0..b.dim()).map(|i| b.mask(i)).collect();
        // {}, {1}, {2}, {3}, {1,2}, {1,3}, {2,3}, {1,2,3}
        assert_eq!(got, vec![0, 1, 2, 4, 3, 5, 6, 7]);
    }

    #[test]
    fn anticommuting_generators() {
        assert_eq!(wedge_sign(0b01, 0b10), 1.0);
        assert_eq!(wedge_sign(0b10, 0b01), -1.0);
        // e2 e3 · e1 = e1 e2 e3 after two swaps
        assert_eq!(wedge_sign(0b110, 0b001), 1.0);
        assert_eq!(wedge_sign(0b100, 0b011), 1.0);
        assert_eq!(wedge_sign(0b010, 0b101), -1.0);
    }

    #[test]
    fn reversal_signs() {
        let signs: Vec<f64> = (0..6).map(reversal_sign).collect();
        assert_eq!(signs, vec![1.0, 1.0, -1.0, -1.0, 1.0, 1.0]);
    }
}
