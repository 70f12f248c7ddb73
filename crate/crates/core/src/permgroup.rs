//! Permutation arithmetic and permutation group actions given by generators.
//!
//! Conventions used across the crate:
//!
//! * indices are 0-based and a [`Permutation`] stores the image of every index;
//! * `p.compose(&q)` applies `q` first and then `p`;
//! * product sets are flattened row-major, so the pair `(i, j)` of an
//!   `m x n` product lives at `i * n + j`.
//!
//! A permutation acts on a vector by moving entries: `(p . x)[p(i)] = x[i]`.
//! Its permutation matrix `P` therefore has `P[p(i), i] = 1`, and a square
//! matrix `M` commutes with `P` exactly when `M[p(i), p(j)] = M[i, j]`.

use std::collections::{HashSet, VecDeque};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default bound on the number of elements [`GeneratedAction::enumerate_group`] will produce.
pub const DEFAULT_GROUP_CAP: usize = 10_000;

/// A bijection on `0..degree`.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "Vec<usize>", into = "Vec<usize>")]
pub struct Permutation {
    images: Vec<usize>,
}

impl fmt::Debug for Permutation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Permutation{:?}", self.images)
    }
}

impl TryFrom<Vec<usize>> for Permutation {
    type Error = Error;

    fn try_from(images: Vec<usize>) -> Result<Self> {
        Permutation::from_images(images)
    }
}

impl From<Permutation> for Vec<usize> {
    fn from(p: Permutation) -> Self {
        p.images
    }
}

impl Permutation {
    pub fn identity(degree: usize) -> Self {
        Permutation {
            images: (0..degree).collect(),
        }
    }

    /// Builds a permutation from its image list, checking bijectivity.
    pub fn from_images(images: Vec<usize>) -> Result<Self> {
        let n = images.len();
        let mut seen = vec![false; n];
        for &img in &images {
            if img >= n {
                return Err(Error::NotAPermutation(format!(
                    "image {img} out of range for degree {n}"
                )));
            }
            if seen[img] {
                return Err(Error::NotAPermutation(format!("image {img} repeated")));
            }
            seen[img] = true;
        }
        Ok(Permutation { images })
    }

    /// Builds a permutation from disjoint cycles, e.g. `&[&[0, 1, 2, 3]]`.
    pub fn from_cycles(degree: usize, cycles: &[&[usize]]) -> Result<Self> {
        let mut images: Vec<usize> = (0..degree).collect();
        let mut touched = vec![false; degree];
        for cycle in cycles {
            for (pos, &a) in cycle.iter().enumerate() {
                if a >= degree {
                    return Err(Error::IndexOutOfRange { index: a, degree });
                }
                if touched[a] {
                    return Err(Error::NotAPermutation(format!(
                        "index {a} appears in more than one cycle position"
                    )));
                }
                touched[a] = true;
                images[a] = cycle[(pos + 1) % cycle.len()];
            }
        }
        Permutation::from_images(images)
    }

    pub(crate) fn from_images_unchecked(images: Vec<usize>) -> Self {
        debug_assert!(Permutation::from_images(images.clone()).is_ok());
        Permutation { images }
    }

    #[inline]
    pub fn degree(&self) -> usize {
        self.images.len()
    }

    #[inline]
    pub fn images(&self) -> &[usize] {
        &self.images
    }

    #[inline]
    pub fn apply(&self, i: usize) -> usize {
        self.images[i]
    }

    /// `self ∘ q`: `q` acts first.
    pub fn compose(&self, q: &Permutation) -> Result<Permutation> {
        if self.degree() != q.degree() {
            return Err(Error::DegreeMismatch {
                left: self.degree(),
                right: q.degree(),
            });
        }
        Ok(Permutation {
            images: q.images.iter().map(|&i| self.images[i]).collect(),
        })
    }

    pub fn inverse(&self) -> Permutation {
        let mut inv = vec![0; self.degree()];
        for (i, &img) in self.images.iter().enumerate() {
            inv[img] = i;
        }
        Permutation { images: inv }
    }

    pub fn pow(&self, k: i64) -> Permutation {
        let base = if k < 0 { self.inverse() } else { self.clone() };
        let mut out = Permutation::identity(self.degree());
        for _ in 0..k.unsigned_abs() {
            out = base.compose(&out).expect("same degree");
        }
        out
    }

    pub fn is_identity(&self) -> bool {
        self.images.iter().enumerate().all(|(i, &img)| i == img)
    }

    pub fn fixed_points(&self) -> usize {
        self.images
            .iter()
            .enumerate()
            .filter(|(i, &img)| *i == img)
            .count()
    }

    /// Smallest `k >= 1` with `self^k = id`.
    pub fn order(&self) -> usize {
        self.cycles()
            .iter()
            .map(Vec::len)
            .fold(1, lcm)
    }

    /// Disjoint cycles (including fixed points), each starting at its minimal element.
    pub fn cycles(&self) -> Vec<Vec<usize>> {
        let mut seen = vec![false; self.degree()];
        let mut out = Vec::new();
        for start in 0..self.degree() {
            if seen[start] {
                continue;
            }
            let mut cycle = vec![start];
            seen[start] = true;
            let mut cur = self.images[start];
            while cur != start {
                seen[cur] = true;
                cycle.push(cur);
                cur = self.images[cur];
            }
            out.push(cycle);
        }
        out
    }

    /// Moves entries of `data`: `out[p(i)] = data[i]`.
    pub fn permute_slice<T: Clone>(&self, data: &[T]) -> Vec<T> {
        assert_eq!(data.len(), self.degree(), "slice length must equal degree");
        let mut out = data.to_vec();
        for (i, v) in data.iter().enumerate() {
            out[self.images[i]] = v.clone();
        }
        out
    }

    /// Block-diagonal permutation: the i-th part acts on the i-th consecutive block.
    pub fn direct_sum(parts: &[Permutation]) -> Permutation {
        let mut images = Vec::with_capacity(parts.iter().map(Permutation::degree).sum());
        let mut offset = 0;
        for p in parts {
            images.extend(p.images.iter().map(|&i| i + offset));
            offset += p.degree();
        }
        Permutation { images }
    }

    /// Kronecker product: the pair `(i, j)` at `i * q.degree() + j` goes to `(p(i), q(j))`.
    pub fn tensor_product(p: &Permutation, q: &Permutation) -> Permutation {
        let n = q.degree();
        let mut images = Vec::with_capacity(p.degree() * n);
        for i in 0..p.degree() {
            for j in 0..n {
                images.push(p.images[i] * n + q.images[j]);
            }
        }
        Permutation { images }
    }
}

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

fn lcm(a: usize, b: usize) -> usize {
    a / gcd(a, b) * b
}

/// `p ∘ q` with `q` acting first.
pub fn compose(p: &Permutation, q: &Permutation) -> Result<Permutation> {
    p.compose(q)
}

#[derive(Deserialize)]
struct RawAction {
    degree: usize,
    gens: Vec<Vec<usize>>,
}

/// A group action given by the images of an ordered list of abstract generators.
///
/// Two actions are *aligned* when their i-th generators are images of the same
/// abstract generator; several constructions in this crate rely on that.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RawAction")]
pub struct GeneratedAction {
    degree: usize,
    gens: Vec<Permutation>,
}

impl TryFrom<RawAction> for GeneratedAction {
    type Error = Error;

    fn try_from(raw: RawAction) -> Result<Self> {
        let gens = raw
            .gens
            .into_iter()
            .map(Permutation::from_images)
            .collect::<Result<Vec<_>>>()?;
        GeneratedAction::new(raw.degree, gens)
    }
}

impl GeneratedAction {
    pub fn new(degree: usize, gens: Vec<Permutation>) -> Result<Self> {
        if let Some(g) = gens.iter().find(|g| g.degree() != degree) {
            return Err(Error::DegreeMismatch {
                left: degree,
                right: g.degree(),
            });
        }
        Ok(GeneratedAction { degree, gens })
    }

    /// The action of the trivial group (no generators).
    pub fn trivial(degree: usize) -> Self {
        GeneratedAction {
            degree,
            gens: Vec::new(),
        }
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn gens(&self) -> &[Permutation] {
        &self.gens
    }

    pub fn num_gens(&self) -> usize {
        self.gens.len()
    }

    pub fn into_gens(self) -> Vec<Permutation> {
        self.gens
    }

    /// The orbit of `seed`, computed with an explicit stack; returned sorted.
    pub fn orbit(&self, seed: usize) -> Result<Vec<usize>> {
        if seed >= self.degree {
            return Err(Error::IndexOutOfRange {
                index: seed,
                degree: self.degree,
            });
        }
        let mut in_orbit = vec![false; self.degree];
        let mut stack = vec![seed];
        in_orbit[seed] = true;
        let mut members = vec![seed];
        while let Some(b) = stack.pop() {
            for g in &self.gens {
                let gb = g.apply(b);
                if !in_orbit[gb] {
                    in_orbit[gb] = true;
                    members.push(gb);
                    stack.push(gb);
                }
            }
        }
        members.sort_unstable();
        Ok(members)
    }

    /// Partition of `0..degree` into orbits, labelled by increasing minimal element.
    pub fn all_orbits(&self) -> OrbitPartition {
        const UNSET: usize = usize::MAX;
        let mut orbit_id = vec![UNSET; self.degree];
        let mut next = 0;
        let mut stack = Vec::new();
        for seed in 0..self.degree {
            if orbit_id[seed] != UNSET {
                continue;
            }
            orbit_id[seed] = next;
            stack.push(seed);
            while let Some(b) = stack.pop() {
                for g in &self.gens {
                    let gb = g.apply(b);
                    if orbit_id[gb] == UNSET {
                        orbit_id[gb] = next;
                        stack.push(gb);
                    }
                }
            }
            next += 1;
        }
        OrbitPartition {
            degree: self.degree,
            orbit_id,
            num_orbits: next,
        }
    }

    /// Diagonal action on ordered pairs, cell `(r, c)` flattened as `r * degree + c`.
    pub fn tensor_square(&self) -> GeneratedAction {
        GeneratedAction {
            degree: self.degree * self.degree,
            gens: self
                .gens
                .iter()
                .map(|g| Permutation::tensor_product(g, g))
                .collect(),
        }
    }

    /// Every group element exactly once, in breadth-first order from the identity.
    pub fn enumerate_group(&self, cap: usize) -> Result<Vec<Permutation>> {
        let id = Permutation::identity(self.degree);
        let mut seen: HashSet<Permutation> = HashSet::new();
        let mut order = Vec::new();
        let mut queue = VecDeque::new();
        seen.insert(id.clone());
        queue.push_back(id);
        while let Some(x) = queue.pop_front() {
            if order.len() >= cap {
                return Err(Error::CapExceeded { cap });
            }
            for g in &self.gens {
                let y = g.compose(&x)?;
                if !seen.contains(&y) {
                    seen.insert(y.clone());
                    queue.push_back(y);
                }
            }
            order.push(x);
        }
        Ok(order)
    }

    pub fn group_order(&self, cap: usize) -> Result<usize> {
        Ok(self.enumerate_group(cap)?.len())
    }

    /// Whether `p` belongs to the generated group (by enumeration).
    pub fn contains(&self, p: &Permutation, cap: usize) -> Result<bool> {
        if p.degree() != self.degree {
            return Ok(false);
        }
        Ok(self.enumerate_group(cap)?.iter().any(|g| g == p))
    }

    /// Orbit count by Burnside's lemma: mean number of fixed points over the group.
    pub fn burnside_orbit_count(&self, cap: usize) -> Result<usize> {
        let elements = self.enumerate_group(cap)?;
        let fixed: usize = elements.iter().map(Permutation::fixed_points).sum();
        debug_assert_eq!(fixed % elements.len(), 0);
        Ok(fixed / elements.len())
    }

    /// True iff every generator maps each block either onto a block or disjointly.
    ///
    /// `labels[i]` is the block of point `i`. Checking generators suffices: a
    /// partition preserved by the generators is preserved by the group.
    pub fn is_block_system(&self, labels: &[usize]) -> bool {
        if labels.len() != self.degree {
            return false;
        }
        for g in &self.gens {
            // Each block must land entirely inside one block of the same size.
            let mut image_block: std::collections::HashMap<usize, usize> = Default::default();
            for (i, &b) in labels.iter().enumerate() {
                let target = labels[g.apply(i)];
                match image_block.get(&b) {
                    Some(&t) if t != target => return false,
                    Some(_) => {}
                    None => {
                        image_block.insert(b, target);
                    }
                }
            }
            let mut sizes: std::collections::HashMap<usize, usize> = Default::default();
            for &b in labels {
                *sizes.entry(b).or_default() += 1;
            }
            for (b, t) in &image_block {
                if sizes[b] != sizes[t] {
                    return false;
                }
            }
        }
        true
    }

    /// Applies an arbitrary map to every generator.
    pub fn map_gens(&self, degree: usize, f: impl Fn(&Permutation) -> Permutation) -> Result<Self> {
        GeneratedAction::new(degree, self.gens.iter().map(f).collect())
    }
}

#[derive(Serialize, Deserialize)]
struct RawPartition {
    degree: usize,
    orbit_id: Vec<usize>,
}

/// A partition of `0..degree` with canonical labels (ordered by minimal element).
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RawPartition", into = "RawPartition")]
pub struct OrbitPartition {
    degree: usize,
    orbit_id: Vec<usize>,
    num_orbits: usize,
}

impl TryFrom<RawPartition> for OrbitPartition {
    type Error = Error;

    fn try_from(raw: RawPartition) -> Result<Self> {
        if raw.orbit_id.len() != raw.degree {
            return Err(Error::Shape(format!(
                "orbit_id has length {} for degree {}",
                raw.orbit_id.len(),
                raw.degree
            )));
        }
        let canon = OrbitPartition::from_labels(&raw.orbit_id);
        if canon.orbit_id != raw.orbit_id {
            return Err(Error::InvalidArgument(
                "orbit ids are not canonically labelled".into(),
            ));
        }
        Ok(canon)
    }
}

impl From<OrbitPartition> for RawPartition {
    fn from(p: OrbitPartition) -> Self {
        RawPartition {
            degree: p.degree,
            orbit_id: p.orbit_id,
        }
    }
}

impl OrbitPartition {
    /// Relabels an arbitrary labelling canonically.
    pub fn from_labels(labels: &[usize]) -> Self {
        let mut map = std::collections::HashMap::new();
        let orbit_id: Vec<usize> = labels
            .iter()
            .map(|l| {
                let next = map.len();
                *map.entry(*l).or_insert(next)
            })
            .collect();
        OrbitPartition {
            degree: labels.len(),
            num_orbits: map.len(),
            orbit_id,
        }
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn num_orbits(&self) -> usize {
        self.num_orbits
    }

    pub fn orbit_id(&self) -> &[usize] {
        &self.orbit_id
    }

    pub fn orbits(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.num_orbits];
        for (i, &o) in self.orbit_id.iter().enumerate() {
            out[o].push(i);
        }
        out
    }

    /// True iff every class of `self` lies inside a single class of `coarser`.
    pub fn refines(&self, coarser: &OrbitPartition) -> bool {
        if self.degree != coarser.degree {
            return false;
        }
        let mut target = vec![usize::MAX; self.num_orbits];
        for (i, &o) in self.orbit_id.iter().enumerate() {
            let c = coarser.orbit_id[i];
            if target[o] == usize::MAX {
                target[o] = c;
            } else if target[o] != c {
                return false;
            }
        }
        true
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cyc4() -> Permutation {
        Permutation::from_cycles(4, &[&[0, 1, 2, 3]]).unwrap()
    }

    #[test]
    fn compose_conventions() {
        let p = cyc4();
        let id = Permutation::identity(4);
        assert_eq!(id.compose(&p).unwrap(), p);
        assert!(p.compose(&p.inverse()).unwrap().is_identity());
        let sq = p.compose(&p).unwrap();
        assert_eq!(sq, Permutation::from_cycles(4, &[&[0, 2], &[1, 3]]).unwrap());

        // q first, then p
        let p = Permutation::from_images(vec![1, 0, 2]).unwrap();
        let q = Permutation::from_images(vec![0, 2, 1]).unwrap();
        let pq = p.compose(&q).unwrap();
        assert_eq!(pq.images(), &[1, 2, 0]);
    }

    #[test]
    fn compose_rejects_degree_mismatch() {
        let e = Permutation::identity(3).compose(&Permutation::identity(4));
        assert!(matches!(e, Err(Error::DegreeMismatch { left: 3, right: 4 })));
    }

    #[test]
    fn rejects_non_bijections() {
        assert!(Permutation::from_images(vec![0, 0, 1]).is_err());
        assert!(Permutation::from_images(vec![0, 3, 1]).is_err());
    }

    #[test]
    fn orbit_examples() {
        let trivial = GeneratedAction::trivial(5);
        assert_eq!(trivial.orbit(3).unwrap(), vec![3]);
        let a = GeneratedAction::new(4, vec![cyc4()]).unwrap();
        assert_eq!(a.orbit(0).unwrap(), vec![0, 1, 2, 3]);
        assert!(matches!(a.orbit(4), Err(Error::IndexOutOfRange { .. })));
    }

    #[test]
    fn all_orbits_trivial_is_singletons() {
        let a = GeneratedAction::new(5, vec![Permutation::identity(5)]).unwrap();
        let part = a.all_orbits();
        assert_eq!(part.num_orbits(), 5);
        assert_eq!(part.orbit_id(), &[0, 1, 2, 3, 4]);
    }

    #[test]
    fn canonical_labels_follow_minimal_elements() {
        let p = Permutation::from_cycles(6, &[&[1, 4], &[2, 5, 3]]).unwrap();
        let part = GeneratedAction::new(6, vec![p]).unwrap().all_orbits();
        assert_eq!(part.orbit_id(), &[0, 1, 2, 2, 1, 2]);
    }

    #[test]
    fn tensor_square_of_swap() {
        let swap = Permutation::from_images(vec![1, 0]).unwrap();
        let sq = GeneratedAction::new(2, vec![swap]).unwrap().tensor_square();
        // (0,0)->(1,1), (0,1)->(1,0)
        assert_eq!(sq.gens()[0].images(), &[3, 2, 1, 0]);
        let id_sq = GeneratedAction::new(3, vec![Permutation::identity(3)])
            .unwrap()
            .tensor_square();
        assert!(id_sq.gens()[0].is_identity());
    }

    #[test]
    fn direct_sum_and_tensor_product() {
        let id3 = Permutation::identity(3);
        assert!(Permutation::direct_sum(&[id3.clone(), id3.clone()]).is_identity());
        let q = Permutation::from_cycles(3, &[&[0, 1, 2]]).unwrap();
        let copies = Permutation::tensor_product(&Permutation::identity(2), &q);
        assert_eq!(copies.images(), &[1, 2, 0, 4, 5, 3]);

        // (01) x (012): pair (i, j) at 3i + j goes to (1 - i, j + 1 mod 3)
        let swap = Permutation::from_images(vec![1, 0]).unwrap();
        let t = Permutation::tensor_product(&swap, &q);
        let expected: Vec<usize> = (0..6)
            .map(|idx| {
                let (i, j) = (idx / 3, idx % 3);
                (1 - i) * 3 + (j + 1) % 3
            })
            .collect();
        assert_eq!(t.images(), expected.as_slice());
        assert_eq!(t.images(), &[4, 5, 3, 1, 2, 0]);
        // a single 6-cycle
        assert_eq!(t.cycles().len(), 1);
        assert_eq!(t.order(), 6);
    }

    #[test]
    fn enumerate_and_cap() {
        let a = GeneratedAction::new(4, vec![Permutation::identity(4)]).unwrap();
        assert_eq!(a.enumerate_group(10).unwrap(), vec![Permutation::identity(4)]);
        let s4 = GeneratedAction::new(
            4,
            vec![cyc4(), Permutation::from_cycles(4, &[&[0, 1]]).unwrap()],
        )
        .unwrap();
        assert_eq!(s4.group_order(100).unwrap(), 24);
        assert!(matches!(
            s4.enumerate_group(10),
            Err(Error::CapExceeded { cap: 10 })
        ));
        assert_eq!(s4.burnside_orbit_count(100).unwrap(), 1);
        assert_eq!(s4.tensor_square().burnside_orbit_count(100).unwrap(), 2);
    }

    #[test]
    fn block_systems() {
        let a = GeneratedAction::new(4, vec![cyc4()]).unwrap();
        assert!(a.is_block_system(&[0, 1, 2, 3]));
        assert!(a.is_block_system(&[0, 1, 0, 1]));
        assert!(!a.is_block_system(&[0, 0, 1, 1, 1][..4]));
        assert!(!a.is_block_system(&[0, 0, 0, 1]));
    }

    #[test]
    fn partition_json_roundtrip_and_validation() {
        let part = GeneratedAction::new(4, vec![Permutation::from_cycles(4, &[&[1, 3]]).unwrap()])
            .unwrap()
            .all_orbits();
        let json = serde_json::to_string(&part).unwrap();
        assert_eq!(json, r#"{"degree":4,"orbit_id":[0,1,2,1]}"#);
        let back: OrbitPartition = serde_json::from_str(&json).unwrap();
        assert_eq!(back, part);
        assert!(serde_json::from_str::<OrbitPartition>(r#"{"degree":2,"orbit_id":[1,0]}"#).is_err());
    }

    #[test]
    fn action_json_form() {
        let a = GeneratedAction::new(3, vec![Permutation::from_images(vec![1, 2, 0]).unwrap()])
            .unwrap();
        let json = serde_json::to_string(&a).unwrap();
        assert_eq!(json, r#"{"degree":3,"gens":[[1,2,0]]}"#);
        let back: GeneratedAction = serde_json::from_str(&json).unwrap();
        assert_eq!(back, a);
        assert!(serde_json::from_str::<GeneratedAction>(r#"{"degree":3,"gens":[[0,1]]}"#).is_err());
    }
}
