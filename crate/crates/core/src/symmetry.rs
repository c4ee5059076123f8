//! Permutations of ports, their unitary representation on qudits, symmetric
//! projectors and the combinatorics that goes with them.
//!
//! Ports and permutation points are 1-based throughout, matching the
//! `A1..AN` labels used by the state builders.

use std::collections::BTreeSet;
use std::fmt;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Serialize, Serializer};

use crate::error::{Error, Result};
use crate::tensor::{LabeledOperator, SubsystemLayout, ZERO};

/// Tolerance for the operator identity asserted by [`conjugate_projector`].
pub const CONJUGATION_TOL: f64 = 1e-12;

/// Subsystem label of port `i`.
pub fn port_label(i: usize) -> String {
    format!("A{i}")
}

fn check_ports(elements: &[usize], n: usize) -> Result<()> {
    if elements.is_empty() || elements.len() > n {
        return Err(Error::InvalidArgument(format!(
            "{} ports requested out of N = {n}",
            elements.len()
        )));
    }
    if let Some(&bad) = elements.iter().find(|&&e| e == 0 || e > n) {
        return Err(Error::InvalidArgument(format!("port {bad} outside 1..={n}")));
    }
    Ok(())
}

/// An unordered M-subset of the ports `1..=N`, stored sorted.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PortSet {
    elements: Vec<usize>,
    n: usize,
}

impl PortSet {
    /// Accepts the elements in any order; duplicates are rejected.
    pub fn new(elements: impl IntoIterator<Item = usize>, n: usize) -> Result<Self> {
        let mut elements: Vec<usize> = elements.into_iter().collect();
        check_ports(&elements, n)?;
        elements.sort_unstable();
        if elements.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::InvalidArgument(format!("repeated port in {elements:?}")));
        }
        Ok(PortSet { elements, n })
    }

    pub fn elements(&self) -> &[usize] {
        &self.elements
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.elements.len()
    }

    /// Smallest port, the representative used for `eta^I`.
    pub fn first(&self) -> usize {
        self.elements[0]
    }

    /// The `k`-th smallest port, `k` 1-based.
    pub fn kth(&self, k: usize) -> Option<usize> {
        k.checked_sub(1).and_then(|i| self.elements.get(i).copied())
    }

    pub fn contains(&self, port: usize) -> bool {
        self.elements.binary_search(&port).is_ok()
    }

    pub fn intersection_size(&self, other: &PortSet) -> usize {
        self.elements.iter().filter(|e| other.contains(**e)).count()
    }

    pub fn is_disjoint(&self, other: &PortSet) -> bool {
        self.intersection_size(other) == 0
    }

    pub fn labels(&self) -> Vec<String> {
        self.elements.iter().map(|&i| port_label(i)).collect()
    }
}

impl fmt::Display for PortSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.elements.iter().map(ToString::to_string).collect();
        write!(f, "{{{}}}", parts.join(","))
    }
}

impl Serialize for PortSet {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.elements.serialize(s)
    }
}

/// An ordered tuple of M distinct ports.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct OrderedPorts {
    elements: Vec<usize>,
    n: usize,
}

impl OrderedPorts {
    pub fn new(elements: impl IntoIterator<Item = usize>, n: usize) -> Result<Self> {
        let elements: Vec<usize> = elements.into_iter().collect();
        check_ports(&elements, n)?;
        let distinct: BTreeSet<usize> = elements.iter().copied().collect();
        if distinct.len() != elements.len() {
            return Err(Error::InvalidArgument(format!("repeated port in {elements:?}")));
        }
        Ok(OrderedPorts { elements, n })
    }

    pub fn elements(&self) -> &[usize] {
        &self.elements
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.elements.len()
    }

    pub fn to_set(&self) -> PortSet {
        let mut elements = self.elements.clone();
        elements.sort_unstable();
        PortSet { elements, n: self.n }
    }
}

impl fmt::Display for OrderedPorts {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.elements.iter().map(ToString::to_string).collect();
        write!(f, "({})", parts.join(","))
    }
}

impl Serialize for OrderedPorts {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.elements.serialize(s)
    }
}

fn check_nm(n: usize, m: usize) -> Result<()> {
    if m == 0 || m > n {
        return Err(Error::InvalidArgument(format!(
            "need 1 <= M <= N, got N = {n}, M = {m}"
        )));
    }
    Ok(())
}

/// All M-subsets of `1..=N`, lexicographic.
pub fn enumerate_unordered(n: usize, m: usize) -> Result<Vec<PortSet>> {
    check_nm(n, m)?;
    let mut out = Vec::new();
    let mut cur: Vec<usize> = (1..=m).collect();
    loop {
        out.push(PortSet {
            elements: cur.clone(),
            n,
        });
        // advance the rightmost position that still has room
        let Some(i) = (0..m).rev().find(|&i| cur[i] < n - (m - 1 - i)) else {
            break;
        };
        cur[i] += 1;
        for j in i + 1..m {
            cur[j] = cur[j - 1] + 1;
        }
    }
    Ok(out)
}

/// All ordered M-tuples of distinct ports, lexicographic.
pub fn enumerate_ordered(n: usize, m: usize) -> Result<Vec<OrderedPorts>> {
    check_nm(n, m)?;
    fn rec(n: usize, m: usize, cur: &mut Vec<usize>, used: &mut [bool], out: &mut Vec<OrderedPorts>) {
        if cur.len() == m {
            out.push(OrderedPorts {
                elements: cur.clone(),
                n,
            });
            return;
        }
        for p in 1..=n {
            if !used[p] {
                used[p] = true;
                cur.push(p);
                rec(n, m, cur, used, out);
                cur.pop();
                used[p] = false;
            }
        }
    }
    let mut out = Vec::new();
    rec(n, m, &mut Vec::with_capacity(m), &mut vec![false; n + 1], &mut out);
    Ok(out)
}

/// A bijection of `1..=N` with its cycle decomposition cached.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Permutation {
    /// `images[p - 1] = sigma(p)`
    images: Vec<usize>,
    cycles: Vec<Vec<usize>>,
}

impl Permutation {
    pub fn from_images(images: Vec<usize>) -> Result<Self> {
        let n = images.len();
        let mut seen = vec![false; n + 1];
        for &x in &images {
            if x == 0 || x > n || seen[x] {
                return Err(Error::InvalidArgument(format!(
                    "{images:?} is not a permutation of 1..={n}"
                )));
            }
            seen[x] = true;
        }
        let cycles = cycles_of(&images);
        Ok(Permutation { images, cycles })
    }

    pub fn identity(n: usize) -> Self {
        Self::from_images((1..=n).collect()).expect("identity is a bijection")
    }

    pub fn transposition(n: usize, a: usize, b: usize) -> Result<Self> {
        Self::cycle(n, &[a, b])
    }

    /// The cycle `(c1 c2 ... ck)`: `c1 -> c2 -> ... -> ck -> c1`.
    pub fn cycle(n: usize, points: &[usize]) -> Result<Self> {
        let mut images: Vec<usize> = (1..=n).collect();
        for (i, &p) in points.iter().enumerate() {
            if p == 0 || p > n {
                return Err(Error::InvalidArgument(format!("point {p} outside 1..={n}")));
            }
            images[p - 1] = points[(i + 1) % points.len()];
        }
        Self::from_images(images)
    }

    /// Every permutation of `1..=n`, lexicographic in the image list.
    pub fn all(n: usize) -> Vec<Self> {
        Self::of_subset(&(1..=n).collect::<Vec<_>>(), n)
    }

    /// The subgroup `S_I`: permutations of `1..=n` that move only points of
    /// `subset`.
    pub fn of_subset(subset: &[usize], n: usize) -> Vec<Self> {
        let mut out = Vec::new();
        let mut arrangement = subset.to_vec();
        arrangement.sort_unstable();
        loop {
            let mut images: Vec<usize> = (1..=n).collect();
            let mut sorted = subset.to_vec();
            sorted.sort_unstable();
            for (src, &dst) in sorted.iter().zip(&arrangement) {
                images[src - 1] = dst;
            }
            out.push(Self::from_images(images).expect("rearranging a subset is a bijection"));
            if !next_permutation(&mut arrangement) {
                break;
            }
        }
        out
    }

    pub fn random<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Self {
        let mut images: Vec<usize> = (1..=n).collect();
        images.shuffle(rng);
        Self::from_images(images).expect("shuffle is a bijection")
    }

    pub fn n(&self) -> usize {
        self.images.len()
    }

    pub fn images(&self) -> &[usize] {
        &self.images
    }

    pub fn apply(&self, p: usize) -> usize {
        self.images[p - 1]
    }

    /// `(self ∘ other)(p) = self(other(p))`.
    pub fn compose(&self, other: &Permutation) -> Result<Self> {
        if self.n() != other.n() {
            return Err(Error::InvalidArgument(format!(
                "composing permutations of {} and {} points",
                self.n(),
                other.n()
            )));
        }
        Self::from_images(other.images.iter().map(|&p| self.apply(p)).collect())
    }

    pub fn inverse(&self) -> Self {
        let mut images = vec![0; self.n()];
        for (i, &x) in self.images.iter().enumerate() {
            images[x - 1] = i + 1;
        }
        Self::from_images(images).expect("inverse of a bijection")
    }

    /// Cycles including fixed points, each starting at its smallest point.
    pub fn cycles(&self) -> &[Vec<usize>] {
        &self.cycles
    }

    pub fn cycle_count(&self) -> usize {
        self.cycles.len()
    }

    pub fn image_of_set(&self, set: &PortSet) -> Result<PortSet> {
        if set.n() != self.n() {
            return Err(Error::InvalidArgument(format!(
                "port set over {} ports, permutation over {}",
                set.n(),
                self.n()
            )));
        }
        PortSet::new(set.elements().iter().map(|&p| self.apply(p)), set.n())
    }
}

impl fmt::Display for Permutation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let moving: Vec<&Vec<usize>> = self.cycles.iter().filter(|c| c.len() > 1).collect();
        if moving.is_empty() {
            return write!(f, "()");
        }
        for c in moving {
            let parts: Vec<String> = c.iter().map(ToString::to_string).collect();
            write!(f, "({})", parts.join(" "))?;
        }
        Ok(())
    }
}

fn cycles_of(images: &[usize]) -> Vec<Vec<usize>> {
    let n = images.len();
    let mut seen = vec![false; n + 1];
    let mut out = Vec::new();
    for start in 1..=n {
        if seen[start] {
            continue;
        }
        let mut c = Vec::new();
        let mut p = start;
        while !seen[p] {
            seen[p] = true;
            c.push(p);
            p = images[p - 1];
        }
        out.push(c);
    }
    out
}

fn next_permutation(v: &mut [usize]) -> bool {
    let Some(i) = (1..v.len()).rev().find(|&i| v[i - 1] < v[i]) else {
        return false;
    };
    let j = (i..v.len()).rev().find(|&j| v[j] > v[i - 1]).expect("pivot exists");
    v.swap(i - 1, j);
    v[i..].reverse();
    true
}

/// Flat-index map of `V_sigma` on `layout`: `V|j> = |map[j]>`.
///
/// `slots[k]` names the subsystem carrying point `k + 1`; all slots must
/// share one local dimension. Other subsystems are left alone.
fn index_map(p: &Permutation, slots: &[&str], layout: &SubsystemLayout) -> Result<Vec<usize>> {
    if slots.len() != p.n() {
        return Err(Error::InvalidArgument(format!(
            "permutation on {} points given {} slots",
            p.n(),
            slots.len()
        )));
    }
    let pos = layout.positions(slots)?;
    if let Some(&d0) = pos.first().map(|&q| &layout.dims()[q]) {
        if pos.iter().any(|&q| layout.dims()[q] != d0) {
            return Err(Error::LayoutMismatch(
                "permuted slots must share a local dimension".into(),
            ));
        }
    }
    let n = layout.dim();
    let mut map = Vec::with_capacity(n);
    let mut out_digits = vec![0; layout.len()];
    for j in 0..n {
        let digits = layout.digits(j);
        out_digits.copy_from_slice(&digits);
        // the value at point q moves to point sigma(q)
        for (k, &q) in pos.iter().enumerate() {
            out_digits[pos[p.apply(k + 1) - 1]] = digits[q];
        }
        map.push(layout.flat_index(&out_digits));
    }
    Ok(map)
}

/// `V_sigma` on a fresh layout of `slots`, each of dimension `d`.
pub fn permutation_unitary(p: &Permutation, d: usize, slots: &[&str]) -> Result<LabeledOperator> {
    let layout = SubsystemLayout::uniform(slots.iter().copied(), d)?;
    permutation_unitary_on(p, slots, &layout)
}

/// `V_sigma` permuting `slots` inside a larger layout.
pub fn permutation_unitary_on(p: &Permutation, slots: &[&str], layout: &SubsystemLayout) -> Result<LabeledOperator> {
    let map = index_map(p, slots, layout)?;
    let n = layout.dim();
    let mut entries = vec![ZERO; n * n];
    for (j, &i) in map.iter().enumerate() {
        entries[i * n + j] = crate::tensor::ONE;
    }
    LabeledOperator::new(layout.clone(), entries)
}

/// `V_sigma op V_sigma^dagger`, computed by relabeling indices rather than
/// by matrix products.
pub fn conjugate_by(p: &Permutation, slots: &[&str], op: &LabeledOperator) -> Result<LabeledOperator> {
    let map = index_map(p, slots, op.layout())?;
    let n = op.dim();
    let mut entries = vec![ZERO; n * n];
    for (j, &mj) in map.iter().enumerate() {
        for (k, &mk) in map.iter().enumerate() {
            entries[mj * n + mk] = op.get(j, k);
        }
    }
    LabeledOperator::new(op.layout().clone(), entries)
}

/// `(1/M!) sum_{sigma in S_M} V_sigma` on the listed slots of `layout`.
pub fn symmetrizer_on(slots: &[&str], layout: &SubsystemLayout) -> Result<LabeledOperator> {
    let m = slots.len();
    let n = layout.dim();
    let group = Permutation::all(m);
    let w = 1.0 / group.len() as f64;
    let mut entries = vec![ZERO; n * n];
    for sigma in &group {
        let map = index_map(sigma, slots, layout)?;
        for (j, &i) in map.iter().enumerate() {
            entries[i * n + j].re += w;
        }
    }
    LabeledOperator::new(layout.clone(), entries)
}

/// Projector onto the symmetric subspace of the ports in `set`, acting as
/// the identity on every other subsystem of `layout`.
pub fn symmetric_projector(set: &PortSet, layout: &SubsystemLayout) -> Result<LabeledOperator> {
    let labels = set.labels();
    let slots: Vec<&str> = labels.iter().map(String::as_str).collect();
    symmetrizer_on(&slots, layout)
}

fn port_slots(n: usize) -> Vec<String> {
    (1..=n).map(port_label).collect()
}

/// Deviation `max |V_sigma Pi_I V_sigma^dagger - Pi_{sigma(I)}|`, with the
/// conjugation done by explicit dense products.
pub fn projector_conjugation_deviation(
    p: &Permutation,
    set: &PortSet,
    layout: &SubsystemLayout,
) -> Result<(PortSet, f64)> {
    let image = p.image_of_set(set)?;
    let labels = port_slots(p.n());
    let slots: Vec<&str> = labels.iter().map(String::as_str).collect();
    let v = permutation_unitary_on(p, &slots, layout)?;
    let lhs = LabeledOperator::sandwich(&v, &symmetric_projector(set, layout)?, &v.adjoint())?;
    let rhs = symmetric_projector(&image, layout)?;
    Ok((image, lhs.max_abs_diff(&rhs)?))
}

/// Returns `sigma(I)` after confirming `V_sigma Pi_I V_sigma^dagger =
/// Pi_{sigma(I)}` on `layout` to [`CONJUGATION_TOL`].
pub fn conjugate_projector(p: &Permutation, set: &PortSet, layout: &SubsystemLayout) -> Result<PortSet> {
    let (image, deviation) = projector_conjugation_deviation(p, set, layout)?;
    if deviation > CONJUGATION_TOL {
        return Err(Error::IdentityViolated {
            name: "projector conjugation",
            deviation,
            threshold: CONJUGATION_TOL,
        });
    }
    Ok(image)
}

/// Group-level check that `sigma S_I sigma^-1 = S_{sigma(I)}`.
pub fn subgroup_conjugation_holds(p: &Permutation, set: &PortSet) -> Result<bool> {
    let inv = p.inverse();
    let lhs: BTreeSet<Vec<usize>> = Permutation::of_subset(set.elements(), set.n())
        .iter()
        .map(|tau| Ok(p.compose(tau)?.compose(&inv)?.images))
        .collect::<Result<_>>()?;
    let image = p.image_of_set(set)?;
    let rhs: BTreeSet<Vec<usize>> = Permutation::of_subset(image.elements(), set.n())
        .into_iter()
        .map(|tau| tau.images)
        .collect();
    Ok(lhs == rhs)
}

/// Unsigned Stirling number of the first kind; `0` when `k > n`.
pub fn stirling_first(n: usize, k: usize) -> Result<u64> {
    if k > n {
        return Ok(0);
    }
    // row[j] = s(i, j)
    let mut row = vec![0u64; n + 1];
    row[0] = 1;
    for i in 0..n {
        let mut next = vec![0u64; n + 1];
        for j in 1..=i + 1 {
            let carried = (i as u64)
                .checked_mul(row[j])
                .and_then(|x| x.checked_add(row[j - 1]))
                .ok_or_else(|| Error::Overflow(format!("s({}, {j})", i + 1)))?;
            next[j] = carried;
        }
        row = next;
    }
    Ok(row[k])
}

pub fn factorial(n: usize) -> Result<u64> {
    (1..=n as u64).try_fold(1u64, |acc, x| {
        acc.checked_mul(x).ok_or_else(|| Error::Overflow(format!("{n}!")))
    })
}

pub fn binomial(n: usize, k: usize) -> u64 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
    }
    u64::try_from(acc).expect("binomial fits in 64 bits for supported sizes")
}

/// Dimension of the symmetric subspace of M qudits of dimension d.
pub fn sym_dim(d: usize, m: usize) -> u64 {
    binomial(d + m - 1, m)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::{hermitian_eig, PINV_REL_TOL};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn sets(n: usize, m: usize) -> Vec<Vec<usize>> {
        enumerate_unordered(n, m)
            .unwrap()
            .iter()
            .map(|s| s.elements().to_vec())
            .collect()
    }

    #[test]
    fn unordered_enumeration() {
        assert_eq!(sets(3, 2), vec![vec![1, 2], vec![1, 3], vec![2, 3]]);
        assert_eq!(sets(6, 2).len(), 15);
        assert_eq!(sets(5, 5), vec![vec![1, 2, 3, 4, 5]]);
        assert!(enumerate_unordered(3, 4).is_err());
        assert!(enumerate_unordered(3, 0).is_err());
    }

    #[test]
    fn ordered_enumeration() {
        let two: Vec<Vec<usize>> = enumerate_ordered(2, 2)
            .unwrap()
            .iter()
            .map(|o| o.elements().to_vec())
            .collect();
        assert_eq!(two, vec![vec![1, 2], vec![2, 1]]);
        assert_eq!(enumerate_ordered(3, 2).unwrap().len(), 6);
        assert_eq!(enumerate_ordered(4, 1).unwrap().len(), 4);
        assert!(enumerate_ordered(2, 3).is_err());
    }

    #[test]
    fn ordered_groups_by_set() {
        let ordered = enumerate_ordered(5, 3).unwrap();
        let mut counts = std::collections::BTreeMap::new();
        for o in &ordered {
            *counts.entry(o.to_set()).or_insert(0) += 1;
        }
        assert_eq!(counts.len(), 10);
        assert!(counts.values().all(|&c| c == 6));
    }

    #[test]
    fn port_set_validation() {
        assert!(PortSet::new([1, 1], 3).is_err());
        assert!(PortSet::new([0, 1], 3).is_err());
        assert!(PortSet::new([4], 3).is_err());
        assert_eq!(PortSet::new([3, 1], 3).unwrap().elements(), [1, 3]);
        assert!(OrderedPorts::new([2, 2], 3).is_err());
    }

    #[test]
    fn cycles_are_cached() {
        let p = Permutation::from_images(vec![2, 3, 1, 4]).unwrap();
        assert_eq!(p.cycles(), [vec![1, 2, 3], vec![4]]);
        assert_eq!(p.cycle_count(), 2);
        assert_eq!(p.to_string(), "(1 2 3)");
        assert!(Permutation::from_images(vec![1, 1]).is_err());
    }

    #[test]
    fn compose_and_inverse() {
        let s = Permutation::cycle(3, &[1, 2, 3]).unwrap();
        let t = Permutation::transposition(3, 1, 2).unwrap();
        // (s∘t)(1) = s(2) = 3
        assert_eq!(s.compose(&t).unwrap().apply(1), 3);
        assert_eq!(s.compose(&s.inverse()).unwrap(), Permutation::identity(3));
    }

    #[test]
    fn subset_group_fixes_complement() {
        let g = Permutation::of_subset(&[2, 4], 4);
        assert_eq!(g.len(), 2);
        assert!(g.iter().all(|p| p.apply(1) == 1 && p.apply(3) == 3));
        assert_eq!(Permutation::all(4).len(), 24);
    }

    #[test]
    fn transposition_swaps_basis_state() {
        let t = Permutation::transposition(2, 1, 2).unwrap();
        let v = permutation_unitary(&t, 2, &["A1", "A2"]).unwrap();
        // |01> has flat index 1, |10> has flat index 2
        assert_eq!(v.get(2, 1), crate::tensor::ONE);
        assert_eq!(v.get(1, 1), ZERO);
    }

    #[test]
    fn value_moves_to_image_position() {
        // sigma = (1 2 3): V|k1 k2 k3> = |k3 k1 k2>
        let s = Permutation::cycle(3, &[1, 2, 3]).unwrap();
        let layout = SubsystemLayout::new(["A1", "A2", "A3"], [3, 3, 3]).unwrap();
        let v = permutation_unitary_on(&s, &["A1", "A2", "A3"], &layout).unwrap();
        let from = layout.flat_index(&[0, 1, 2]);
        let to = layout.flat_index(&[2, 0, 1]);
        assert_eq!(v.get(to, from), crate::tensor::ONE);
    }

    #[test]
    fn cycle_cubed_is_identity() {
        let s = Permutation::cycle(3, &[1, 2, 3]).unwrap();
        let slots = ["A1", "A2", "A3"];
        let v = permutation_unitary(&s, 2, &slots).unwrap();
        let v3 = v.matmul(&v).unwrap().matmul(&v).unwrap();
        let id = LabeledOperator::identity(v.layout().clone());
        assert!(v3.max_abs_diff(&id).unwrap() < 1e-15);
    }

    #[test]
    fn slot_count_mismatch_rejected() {
        let s = Permutation::identity(3);
        assert!(permutation_unitary(&s, 2, &["A1", "A2"]).is_err());
    }

    #[test]
    fn unitary_is_homomorphism() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let slots = ["A1", "A2", "A3", "A4"];
        for _ in 0..50 {
            let s = Permutation::random(4, &mut rng);
            let t = Permutation::random(4, &mut rng);
            let vs = permutation_unitary(&s, 2, &slots).unwrap();
            let vt = permutation_unitary(&t, 2, &slots).unwrap();
            let vst = permutation_unitary(&s.compose(&t).unwrap(), 2, &slots).unwrap();
            assert!(vs.matmul(&vt).unwrap().max_abs_diff(&vst).unwrap() <= 1e-12);
        }
    }

    #[test]
    fn conjugate_by_matches_dense_product() {
        let layout = SubsystemLayout::uniform(["X", "A1", "A2", "A3"], 2).unwrap();
        let op = LabeledOperator::from_fn(layout.clone(), |i, j| {
            crate::tensor::C64::new((i * 16 + j) as f64, (i as f64) * 0.5)
        });
        let s = Permutation::cycle(3, &[1, 3, 2]).unwrap();
        let slots = ["A1", "A2", "A3"];
        let v = permutation_unitary_on(&s, &slots, &layout).unwrap();
        let dense = LabeledOperator::sandwich(&v, &op, &v.adjoint()).unwrap();
        assert!(conjugate_by(&s, &slots, &op).unwrap().max_abs_diff(&dense).unwrap() < 1e-12);
    }

    #[test]
    fn symmetric_projector_qubit_pair() {
        let layout = SubsystemLayout::uniform(["A1", "A2"], 2).unwrap();
        let set = PortSet::new([1, 2], 2).unwrap();
        let pi = symmetric_projector(&set, &layout).unwrap();
        // (1 + SWAP)/2
        let swap =
            permutation_unitary_on(&Permutation::transposition(2, 1, 2).unwrap(), &["A1", "A2"], &layout).unwrap();
        let want = LabeledOperator::identity(layout.clone()).add(&swap).unwrap().scale(0.5);
        assert!(pi.max_abs_diff(&want).unwrap() < 1e-15);
        let ev = hermitian_eig(&pi).unwrap();
        assert_eq!(ev.rank(PINV_REL_TOL), 3);
        for (x, y) in ev.eigenvalues().iter().zip([1.0, 1.0, 1.0, 0.0]) {
            assert!((x - y).abs() < 1e-12);
        }
        // Pi|01> = (|01> + |10>)/2
        assert_eq!(pi.get(1, 1).re, 0.5);
        assert_eq!(pi.get(2, 1).re, 0.5);
    }

    #[test]
    fn singleton_projector_is_identity() {
        let layout = SubsystemLayout::uniform(["X", "A1", "A2"], 2).unwrap();
        let pi = symmetric_projector(&PortSet::new([2], 2).unwrap(), &layout).unwrap();
        assert_eq!(pi, LabeledOperator::identity(layout));
    }

    #[test]
    fn projectors_idempotent_and_rank() {
        for n in 2..=4 {
            let labels: Vec<String> = std::iter::once("X".to_string())
                .chain((1..=n).map(port_label))
                .collect();
            let layout = SubsystemLayout::uniform(labels, 2).unwrap();
            for m in 1..=n {
                for set in enumerate_unordered(n, m).unwrap() {
                    let pi = symmetric_projector(&set, &layout).unwrap();
                    assert!(pi.matmul(&pi).unwrap().max_abs_diff(&pi).unwrap() <= 1e-12);
                    assert!(pi.hermiticity_deviation() <= 1e-12);
                    let rank = (pi.trace().re).round() as u64;
                    assert_eq!(rank, sym_dim(2, m) * 2u64.pow((n + 1 - m) as u32));
                }
            }
        }
    }

    #[test]
    fn conjugate_projector_examples() {
        let layout = SubsystemLayout::uniform(["X", "A1", "A2", "A3"], 2).unwrap();
        let set = PortSet::new([1, 2], 3).unwrap();
        let id = Permutation::identity(3);
        assert_eq!(conjugate_projector(&id, &set, &layout).unwrap(), set);
        let t = Permutation::transposition(3, 1, 3).unwrap();
        assert_eq!(conjugate_projector(&t, &set, &layout).unwrap().elements(), [2, 3]);

        let layout4 = SubsystemLayout::uniform(["A1", "A2", "A3", "A4"], 2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let all = enumerate_unordered(4, 2).unwrap();
        for i in 0..20 {
            let s = Permutation::random(4, &mut rng);
            let (_, dev) = projector_conjugation_deviation(&s, &all[i % all.len()], &layout4).unwrap();
            assert!(dev <= 1e-12);
        }
    }

    #[test]
    fn subgroup_conjugation_all_of_s4() {
        for s in Permutation::all(4) {
            for set in enumerate_unordered(4, 2).unwrap() {
                assert!(subgroup_conjugation_holds(&s, &set).unwrap());
            }
        }
    }

    #[test]
    fn stirling_values() {
        assert_eq!(stirling_first(3, 1).unwrap(), 2);
        assert_eq!(stirling_first(3, 2).unwrap(), 3);
        assert_eq!(stirling_first(3, 3).unwrap(), 1);
        assert_eq!(stirling_first(0, 0).unwrap(), 1);
        assert_eq!(stirling_first(4, 0).unwrap(), 0);
        assert_eq!(stirling_first(2, 5).unwrap(), 0);
        let row: u64 = (0..=3)
            .map(|k| stirling_first(3, k).unwrap() * 2u64.pow(k as u32))
            .sum();
        assert_eq!(row, 24);
    }

    #[test]
    fn stirling_counts_cycles() {
        for n in 1..=6 {
            let mut by_cycles = vec![0u64; n + 1];
            for p in Permutation::all(n) {
                by_cycles[p.cycle_count()] += 1;
            }
            for (k, &c) in by_cycles.iter().enumerate() {
                assert_eq!(stirling_first(n, k).unwrap(), c);
            }
        }
    }

    #[test]
    fn stirling_row_identity() {
        for m in 0..=6usize {
            for d in 1..=4u64 {
                let lhs: u64 = (0..=m).map(|k| stirling_first(m, k).unwrap() * d.pow(k as u32)).sum();
                let rhs = factorial(m + d as usize - 1).unwrap() / factorial(d as usize - 1).unwrap();
                assert_eq!(lhs, rhs, "M={m} d={d}");
            }
        }
    }

    #[test]
    fn stirling_overflow_is_reported() {
        assert!(matches!(stirling_first(30, 1), Err(Error::Overflow(_))));
    }

    #[test]
    fn sym_dim_values() {
        assert_eq!(sym_dim(2, 2), 3);
        assert_eq!(sym_dim(2, 3), 4);
        assert_eq!(sym_dim(5, 0), 1);
        assert_eq!(sym_dim(3, 2), 6);
    }
}
