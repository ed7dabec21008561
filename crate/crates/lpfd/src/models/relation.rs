use fixedbitset::FixedBitSet;

/// A binary relation on `0..n`, stored as one bit row per element.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Relation {
    rows: Vec<FixedBitSet>,
}

impl Relation {
    pub fn empty(n: usize) -> Self {
        Relation {
            rows: vec![FixedBitSet::with_capacity(n); n],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut r = Relation::empty(n);
        for a in 0..n {
            r.insert(a, a);
        }
        r
    }

    pub fn total(n: usize) -> Self {
        let mut row = FixedBitSet::with_capacity(n);
        row.insert_range(..);
        Relation { rows: vec![row; n] }
    }

    pub fn from_pairs<I: IntoIterator<Item = (usize, usize)>>(n: usize, pairs: I) -> Self {
        let mut r = Relation::empty(n);
        for (a, b) in pairs {
            r.insert(a, b);
        }
        r
    }

    /// The kernel of a labelling: `a ~ b` iff `label[a] == label[b]`.
    pub fn from_labels<T: PartialEq>(labels: &[T]) -> Self {
        let n = labels.len();
        let mut r = Relation::empty(n);
        for a in 0..n {
            for b in 0..n {
                if labels[a] == labels[b] {
                    r.insert(a, b);
                }
            }
        }
        r
    }

    pub fn size(&self) -> usize {
        self.rows.len()
    }

    pub fn contains(&self, a: usize, b: usize) -> bool {
        self.rows[a].contains(b)
    }

    pub fn insert(&mut self, a: usize, b: usize) {
        self.rows[a].insert(b);
    }

    pub fn row(&self, a: usize) -> &FixedBitSet {
        &self.rows[a]
    }

    pub fn pairs(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for (a, row) in self.rows.iter().enumerate() {
            out.extend(row.ones().map(|b| (a, b)));
        }
        out
    }

    pub fn count(&self) -> usize {
        self.rows.iter().map(|r| r.count_ones(..)).sum()
    }

    pub fn non_reflexive_witness(&self) -> Option<usize> {
        (0..self.size()).find(|&a| !self.contains(a, a))
    }

    pub fn non_symmetric_witness(&self) -> Option<(usize, usize)> {
        self.pairs()
            .into_iter()
            .find(|&(a, b)| !self.contains(b, a))
    }

    /// A triple `(a, b, c)` with `a R b`, `b R c` and not `a R c`.
    pub fn non_transitive_witness(&self) -> Option<(usize, usize, usize)> {
        for (a, row) in self.rows.iter().enumerate() {
            for b in row.ones() {
                if let Some(c) = self.rows[b].difference(row).next() {
                    return Some((a, b, c));
                }
            }
        }
        None
    }

    pub fn is_preorder(&self) -> bool {
        self.non_reflexive_witness().is_none() && self.non_transitive_witness().is_none()
    }

    pub fn is_equivalence(&self) -> bool {
        self.is_preorder() && self.non_symmetric_witness().is_none()
    }

    pub fn is_total(&self) -> bool {
        (0..self.size())
            .all(|a| (0..self.size()).all(|b| self.contains(a, b) || self.contains(b, a)))
    }

    pub fn reflexive_closure(&self) -> Relation {
        let mut r = self.clone();
        for a in 0..r.size() {
            r.insert(a, a);
        }
        r
    }

    pub fn transitive_closure(&self) -> Relation {
        let mut r = self.clone();
        let n = r.size();
        for k in 0..n {
            for a in 0..n {
                if r.rows[a].contains(k) {
                    let rk = r.rows[k].clone();
                    r.rows[a].union_with(&rk);
                }
            }
        }
        r
    }

    pub fn inverse(&self) -> Relation {
        Relation::from_pairs(self.size(), self.pairs().into_iter().map(|(a, b)| (b, a)))
    }

    /// Smallest equivalence relation containing `self`.
    pub fn equivalence_closure(&self) -> Relation {
        let mut r = self.reflexive_closure();
        for (a, b) in self.pairs() {
            r.insert(b, a);
        }
        r.transitive_closure()
    }

    /// `{(a, b) : a R b and not b R a}`.
    pub fn strict_part(&self) -> Relation {
        let n = self.size();
        let mut r = Relation::empty(n);
        for a in 0..n {
            for b in self.rows[a].ones() {
                if !self.contains(b, a) {
                    r.insert(a, b);
                }
            }
        }
        r
    }

    /// `{(a, b) : a R b and b R a}`.
    pub fn symmetric_part(&self) -> Relation {
        let n = self.size();
        let mut r = Relation::empty(n);
        for a in 0..n {
            for b in self.rows[a].ones() {
                if self.contains(b, a) {
                    r.insert(a, b);
                }
            }
        }
        r
    }

    pub fn intersect(&self, other: &Relation) -> Relation {
        let rows = self
            .rows
            .iter()
            .zip(&other.rows)
            .map(|(a, b)| {
                let mut r = a.clone();
                r.intersect_with(b);
                r
            })
            .collect();
        Relation { rows }
    }

    pub fn is_subset(&self, other: &Relation) -> bool {
        self.rows
            .iter()
            .zip(&other.rows)
            .all(|(a, b)| a.is_subset(b))
    }

    /// Equivalence classes, each listed in increasing order, ordered by
    /// their least element.
    pub fn classes(&self) -> Vec<Vec<usize>> {
        let n = self.size();
        let mut seen = FixedBitSet::with_capacity(n);
        let mut out = Vec::new();
        for a in 0..n {
            if seen.contains(a) {
                continue;
            }
            let cls: Vec<usize> = self.rows[a].ones().collect();
            for &b in &cls {
                seen.insert(b);
            }
            out.push(cls);
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn closures() {
        let r = Relation::from_pairs(3, [(0, 1), (1, 2)]);
        let t = r.transitive_closure();
        assert!(t.contains(0, 2));
        assert_eq!(r.non_transitive_witness(), Some((0, 1, 2)));
        assert!(t.reflexive_closure().is_preorder());
        let e = r.equivalence_closure();
        assert!(e.is_equivalence());
        assert_eq!(e.count(), 9);
    }

    #[test]
    fn strict_part_of_identity_is_empty() {
        assert_eq!(Relation::identity(4).strict_part().count(), 0);
    }

    #[test]
    fn strict_part_of_chain() {
        let r = Relation::from_pairs(3, [(0, 1), (1, 2)])
            .transitive_closure()
            .reflexive_closure();
        assert_eq!(r.strict_part().count(), 3);
        assert!(r.is_total());
    }

    #[test]
    fn classes_of_labels() {
        let r = Relation::from_labels(&[1, 2, 1, 3]);
        assert_eq!(r.classes(), vec![vec![0, 2], vec![1], vec![3]]);
    }
}
