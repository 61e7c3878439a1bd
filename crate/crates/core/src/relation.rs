//! Finite binary relations over dense event ids, stored as adjacency bitsets.
//!
//! Every relation carries its universe size `n`; ids are `0..n`. Binary
//! operators panic when the universes differ, the `try_*` variants report it
//! instead.

use std::fmt;

use crate::error::RelError;

/// Dense event identifier, unique within one elaborated test.
pub type EventId = usize;

const BITS: usize = 64;

/// A relation over `0..n`, one bit row per source event.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Relation {
    n: usize,
    stride: usize,
    bits: Vec<u64>,
}

impl Relation {
    pub fn empty(n: usize) -> Self {
        let stride = n.div_ceil(BITS).max(1);
        Relation { n, stride, bits: vec![0; stride * n] }
    }

    pub fn identity(n: usize) -> Self {
        let mut r = Self::empty(n);
        for i in 0..n {
            r.insert(i, i);
        }
        r
    }

    /// Every pair `(x, y)` with `x != y`.
    pub fn full(n: usize) -> Self {
        let mut r = Self::empty(n);
        for x in 0..n {
            for y in 0..n {
                if x != y {
                    r.insert(x, y);
                }
            }
        }
        r
    }

    pub fn from_pairs<I: IntoIterator<Item = (EventId, EventId)>>(n: usize, pairs: I) -> Self {
        let mut r = Self::empty(n);
        for (x, y) in pairs {
            r.insert(x, y);
        }
        r
    }

    /// Pairs `(x, y)` of `0..n` for which `f(x, y)` holds.
    pub fn from_fn(n: usize, mut f: impl FnMut(EventId, EventId) -> bool) -> Self {
        let mut r = Self::empty(n);
        for x in 0..n {
            for y in 0..n {
                if f(x, y) {
                    r.insert(x, y);
                }
            }
        }
        r
    }

    pub fn universe(&self) -> usize {
        self.n
    }

    #[inline]
    fn row(&self, x: EventId) -> &[u64] {
        &self.bits[x * self.stride..(x + 1) * self.stride]
    }

    #[inline]
    fn row_mut(&mut self, x: EventId) -> &mut [u64] {
        &mut self.bits[x * self.stride..(x + 1) * self.stride]
    }

    pub fn insert(&mut self, x: EventId, y: EventId) {
        assert!(x < self.n && y < self.n, "pair ({x},{y}) outside universe {}", self.n);
        self.bits[x * self.stride + y / BITS] |= 1 << (y % BITS);
    }

    pub fn remove(&mut self, x: EventId, y: EventId) {
        if x < self.n && y < self.n {
            self.bits[x * self.stride + y / BITS] &= !(1 << (y % BITS));
        }
    }

    #[inline]
    pub fn contains(&self, x: EventId, y: EventId) -> bool {
        x < self.n && y < self.n && self.bits[x * self.stride + y / BITS] & (1 << (y % BITS)) != 0
    }

    pub fn is_empty(&self) -> bool {
        self.bits.iter().all(|w| *w == 0)
    }

    pub fn len(&self) -> usize {
        self.bits.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn pairs(&self) -> impl Iterator<Item = (EventId, EventId)> + '_ {
        (0..self.n).flat_map(move |x| self.successors(x).map(move |y| (x, y)))
    }

    pub fn successors(&self, x: EventId) -> impl Iterator<Item = EventId> + '_ {
        let row = self.row(x);
        row.iter().enumerate().flat_map(|(wi, &w)| {
            let mut w = w;
            std::iter::from_fn(move || {
                if w == 0 {
                    None
                } else {
                    let b = w.trailing_zeros() as usize;
                    w &= w - 1;
                    Some(wi * BITS + b)
                }
            })
        })
    }

    pub fn predecessors(&self, y: EventId) -> impl Iterator<Item = EventId> + '_ {
        (0..self.n).filter(move |&x| self.contains(x, y))
    }

    pub fn has_successor(&self, x: EventId) -> bool {
        self.row(x).iter().any(|w| *w != 0)
    }

    fn same_universe(&self, other: &Relation) -> Result<(), RelError> {
        if self.n == other.n {
            Ok(())
        } else {
            Err(RelError::UniverseMismatch { left: self.n, right: other.n })
        }
    }

    pub fn try_union(&self, other: &Relation) -> Result<Relation, RelError> {
        self.same_universe(other)?;
        let mut r = self.clone();
        r.bits.iter_mut().zip(&other.bits).for_each(|(a, b)| *a |= *b);
        Ok(r)
    }

    pub fn try_inter(&self, other: &Relation) -> Result<Relation, RelError> {
        self.same_universe(other)?;
        let mut r = self.clone();
        r.bits.iter_mut().zip(&other.bits).for_each(|(a, b)| *a &= *b);
        Ok(r)
    }

    pub fn try_diff(&self, other: &Relation) -> Result<Relation, RelError> {
        self.same_universe(other)?;
        let mut r = self.clone();
        r.bits.iter_mut().zip(&other.bits).for_each(|(a, b)| *a &= !*b);
        Ok(r)
    }

    /// Sequential composition `self ; other`.
    pub fn try_seq(&self, other: &Relation) -> Result<Relation, RelError> {
        self.same_universe(other)?;
        let mut r = Relation::empty(self.n);
        for x in 0..self.n {
            for z in self.successors(x) {
                let src = other.row(z).to_vec();
                r.row_mut(x).iter_mut().zip(src).for_each(|(a, b)| *a |= b);
            }
        }
        Ok(r)
    }

    pub fn union(&self, other: &Relation) -> Relation {
        self.try_union(other).expect("union")
    }

    pub fn inter(&self, other: &Relation) -> Relation {
        self.try_inter(other).expect("intersection")
    }

    pub fn diff(&self, other: &Relation) -> Relation {
        self.try_diff(other).expect("difference")
    }

    pub fn seq(&self, other: &Relation) -> Relation {
        self.try_seq(other).expect("composition")
    }

    pub fn union_in_place(&mut self, other: &Relation) {
        assert_eq!(self.n, other.n, "universe mismatch");
        self.bits.iter_mut().zip(&other.bits).for_each(|(a, b)| *a |= *b);
    }

    pub fn inverse(&self) -> Relation {
        let mut r = Relation::empty(self.n);
        for (x, y) in self.pairs() {
            r.insert(y, x);
        }
        r
    }

    /// Transitive closure (Warshall over bit rows).
    pub fn plus(&self) -> Relation {
        let mut r = self.clone();
        for k in 0..self.n {
            let rk = r.row(k).to_vec();
            for i in 0..self.n {
                if r.contains(i, k) {
                    r.row_mut(i).iter_mut().zip(&rk).for_each(|(a, b)| *a |= *b);
                }
            }
        }
        r
    }

    /// Reflexive-transitive closure over the whole universe.
    pub fn star(&self) -> Relation {
        self.plus().union(&Relation::identity(self.n))
    }

    pub fn closure(&self, reflexive: bool) -> Relation {
        if reflexive {
            self.star()
        } else {
            self.plus()
        }
    }

    /// Keep the pairs whose source satisfies `src` and target satisfies `tgt`.
    pub fn filter(&self, src: impl Fn(EventId) -> bool, tgt: impl Fn(EventId) -> bool) -> Relation {
        let mut r = Relation::empty(self.n);
        for (x, y) in self.pairs() {
            if src(x) && tgt(y) {
                r.insert(x, y);
            }
        }
        r
    }

    pub fn filter_pairs(&self, f: impl Fn(EventId, EventId) -> bool) -> Relation {
        let mut r = Relation::empty(self.n);
        for (x, y) in self.pairs() {
            if f(x, y) {
                r.insert(x, y);
            }
        }
        r
    }

    /// `Ok(())` when acyclic, otherwise one cycle `[x0, x1, .., xk]` with
    /// `(xi, xi+1)` and `(xk, x0)` all in the relation.
    pub fn check_acyclic(&self) -> Result<(), Vec<EventId>> {
        #[derive(Clone, Copy, PartialEq)]
        enum Mark {
            White,
            Grey,
            Black,
        }
        let mut mark = vec![Mark::White; self.n];
        let mut stack: Vec<EventId> = Vec::new();
        for root in 0..self.n {
            if mark[root] != Mark::White {
                continue;
            }
            // iterative DFS: (node, successor list, next index)
            let mut frames: Vec<(EventId, Vec<EventId>, usize)> = Vec::new();
            mark[root] = Mark::Grey;
            stack.push(root);
            frames.push((root, self.successors(root).collect(), 0));
            while let Some(frame) = frames.last_mut() {
                if frame.2 < frame.1.len() {
                    let y = frame.1[frame.2];
                    frame.2 += 1;
                    match mark[y] {
                        Mark::White => {
                            mark[y] = Mark::Grey;
                            stack.push(y);
                            frames.push((y, self.successors(y).collect(), 0));
                        }
                        Mark::Grey => {
                            let pos = stack.iter().position(|&e| e == y).expect("grey on stack");
                            return Err(stack[pos..].to_vec());
                        }
                        Mark::Black => {}
                    }
                } else {
                    mark[frame.0] = Mark::Black;
                    stack.pop();
                    frames.pop();
                }
            }
        }
        Ok(())
    }

    pub fn is_acyclic(&self) -> bool {
        self.check_acyclic().is_ok()
    }

    /// `Ok(())` when no `(x, x)` is present, otherwise the smallest such `x`.
    pub fn check_irreflexive(&self) -> Result<(), EventId> {
        match (0..self.n).find(|&x| self.contains(x, x)) {
            Some(x) => Err(x),
            None => Ok(()),
        }
    }

    pub fn is_irreflexive(&self) -> bool {
        self.check_irreflexive().is_ok()
    }

    pub fn is_subset(&self, other: &Relation) -> bool {
        self.n == other.n && self.bits.iter().zip(&other.bits).all(|(a, b)| a & !b == 0)
    }

    /// Events in the domain or range.
    pub fn field(&self) -> Vec<EventId> {
        (0..self.n)
            .filter(|&x| self.has_successor(x) || self.predecessors(x).next().is_some())
            .collect()
    }
}

impl fmt::Debug for Relation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Relation[{}]{{", self.n)?;
        for (i, (x, y)) in self.pairs().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "({x},{y})")?;
        }
        write!(f, "}}")
    }
}

/// Sequence of relations, left to right.
pub fn seq_all(rs: &[&Relation]) -> Relation {
    let mut it = rs.iter();
    let first = (*it.next().expect("seq_all needs a relation")).clone();
    it.fold(first, |acc, r| acc.seq(r))
}

/// `{(r, w1) | (w0, r) in rf and (w0, w1) in co}`.
pub fn derive_fr(rf: &Relation, co: &Relation) -> Relation {
    rf.inverse().seq(co)
}

/// Split into (internal, external) parts by the thread of each endpoint.
pub fn split_scope(r: &Relation, thread_of: impl Fn(EventId) -> usize) -> (Relation, Relation) {
    let internal = r.filter_pairs(|x, y| thread_of(x) == thread_of(y));
    let external = r.diff(&internal);
    (internal, external)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn compose_instance() {
        let a = Relation::from_pairs(3, [(0, 1)]);
        let b = Relation::from_pairs(3, [(1, 2)]);
        assert_eq!(a.seq(&b), Relation::from_pairs(3, [(0, 2)]));
        assert!(a.seq(&Relation::empty(3)).is_empty());
    }

    #[test]
    fn mismatched_universes() {
        let a = Relation::empty(3);
        let b = Relation::empty(4);
        assert!(matches!(a.try_seq(&b), Err(RelError::UniverseMismatch { left: 3, right: 4 })));
    }

    #[test]
    fn closures() {
        let r = Relation::from_pairs(3, [(0, 1), (1, 2)]);
        assert_eq!(r.plus(), Relation::from_pairs(3, [(0, 1), (1, 2), (0, 2)]));
        assert_eq!(Relation::empty(4).star(), Relation::identity(4));
    }

    #[test]
    fn cycles() {
        assert!(Relation::from_pairs(2, [(0, 1)]).check_acyclic().is_ok());
        let c = Relation::from_pairs(2, [(0, 1), (1, 0)]).check_acyclic().unwrap_err();
        assert_eq!(c.len(), 2);
        let big = Relation::from_pairs(130, [(3, 100), (100, 129), (129, 3), (5, 6)]);
        let c = big.check_acyclic().unwrap_err();
        for i in 0..c.len() {
            assert!(big.contains(c[i], c[(i + 1) % c.len()]));
        }
    }

    #[test]
    fn irreflexive() {
        assert!(Relation::identity(3).check_irreflexive().is_err());
        assert!(Relation::empty(3).check_irreflexive().is_ok());
    }

    #[test]
    fn fr_from_init() {
        // 0 = init, 1 = w, 2 = r reading init
        let rf = Relation::from_pairs(3, [(0, 2)]);
        let co = Relation::from_pairs(3, [(0, 1)]);
        assert_eq!(derive_fr(&rf, &co), Relation::from_pairs(3, [(2, 1)]));
        let rf = Relation::from_pairs(3, [(1, 2)]);
        assert!(derive_fr(&rf, &co).is_empty());
    }

    #[test]
    fn split() {
        let r = Relation::from_pairs(4, [(0, 1), (1, 2), (2, 3)]);
        let th = [0, 0, 1, 1];
        let (i, e) = split_scope(&r, |x| th[x]);
        assert_eq!(i, Relation::from_pairs(4, [(0, 1), (2, 3)]));
        assert_eq!(e, Relation::from_pairs(4, [(1, 2)]));
    }
}
