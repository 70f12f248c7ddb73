//! The cyclic or dihedral group of an `m`-gon face.
//!
//! Elements are `rot^s * mir^r` with `s in 0..m`, `r in {0, 1}`, stored at index
//! `r * m + s`. `rot` turns the face one step counter-clockwise (seen from
//! outside the solid) and `mir` is the reflection fixing the face's anchor corner.

use serde::{Deserialize, Serialize};

use crate::permgroup::Permutation;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PointGroup {
    m: usize,
    reflections: bool,
}

impl PointGroup {
    pub fn new(m: usize, reflections: bool) -> Self {
        assert!(m >= 1);
        PointGroup { m, reflections }
    }

    pub fn sides(&self) -> usize {
        self.m
    }

    pub fn has_reflections(&self) -> bool {
        self.reflections
    }

    pub fn order(&self) -> usize {
        if self.reflections {
            2 * self.m
        } else {
            self.m
        }
    }

    pub fn identity(&self) -> usize {
        0
    }

    pub fn element(&self, idx: usize) -> (usize, usize) {
        (idx % self.m, idx / self.m)
    }

    pub fn index(&self, rot: usize, mirror: usize) -> usize {
        debug_assert!(mirror == 0 || self.reflections);
        mirror * self.m + rot % self.m
    }

    /// `a * b` (b acts first).
    pub fn mul(&self, a: usize, b: usize) -> usize {
        let (s1, r1) = self.element(a);
        let (s2, r2) = self.element(b);
        let s = if r1 == 0 {
            s1 + s2
        } else {
            s1 + self.m - s2
        };
        self.index(s % self.m, (r1 + r2) % 2)
    }

    pub fn inv(&self, a: usize) -> usize {
        let (s, r) = self.element(a);
        if r == 0 {
            self.index((self.m - s) % self.m, 0)
        } else {
            a
        }
    }

    /// Generator indices: the one-step rotation, then the mirror when present.
    pub fn generators(&self) -> Vec<usize> {
        let mut g = vec![self.index(1 % self.m, 0)];
        if self.reflections {
            g.push(self.index(0, 1));
        }
        g
    }

    /// Left-multiplication by `g` as a permutation of the group's own elements.
    pub fn regular_perm(&self, g: usize) -> Permutation {
        Permutation::from_images_unchecked((0..self.order()).map(|x| self.mul(g, x)).collect())
    }

    /// Where `g` sends corner `k` of the face.
    pub fn act_on_corner(&self, g: usize, k: usize) -> usize {
        let (s, r) = self.element(g);
        if r == 0 {
            (s + k) % self.m
        } else {
            (s + self.m - k % self.m) % self.m
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn group_axioms() {
        for &(m, refl) in &[(3, false), (3, true), (4, false), (4, true), (5, true)] {
            let k = PointGroup::new(m, refl);
            let n = k.order();
            for a in 0..n {
                assert_eq!(k.mul(a, k.inv(a)), 0);
                assert_eq!(k.mul(0, a), a);
                for b in 0..n {
                    for c in 0..n {
                        assert_eq!(k.mul(k.mul(a, b), c), k.mul(a, k.mul(b, c)));
                    }
                    // corner action is a homomorphism
                    for corner in 0..m {
                        assert_eq!(
                            k.act_on_corner(k.mul(a, b), corner),
                            k.act_on_corner(a, k.act_on_corner(b, corner))
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn regular_perm_has_no_fixed_points() {
        let k = PointGroup::new(4, true);
        for g in 1..k.order() {
            assert_eq!(k.regular_perm(g).fixed_points(), 0);
        }
        assert!(k.regular_perm(0).is_identity());
    }
}
