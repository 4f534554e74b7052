use std::collections::BTreeMap;

/// Disjoint sets over ordered keys, with path compression and union by rank.
#[derive(Debug, Clone)]
pub struct UnionFind<K: Ord + Clone> {
    parent: BTreeMap<K, K>,
    rank: BTreeMap<K, u8>,
}

impl<K: Ord + Clone> Default for UnionFind<K> {
    fn default() -> Self {
        UnionFind {
            parent: BTreeMap::new(),
            rank: BTreeMap::new(),
        }
    }
}

impl<K: Ord + Clone> UnionFind<K> {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds `k` as a singleton unless already present.
    pub fn make_set(&mut self, k: K) {
        if !self.parent.contains_key(&k) {
            self.parent.insert(k.clone(), k.clone());
            self.rank.insert(k, 0);
        }
    }

    pub fn contains(&self, k: &K) -> bool {
        self.parent.contains_key(k)
    }

    /// Representative of `k`'s set, inserting `k` if it is new.
    pub fn find(&mut self, k: &K) -> K {
        self.make_set(k.clone());
        let mut root = k.clone();
        loop {
            let p = &self.parent[&root];
            if *p == root {
                break;
            }
            root = p.clone();
        }
        // second pass: point everything on the path at the root
        let mut cur = k.clone();
        while cur != root {
            let next = self.parent.insert(cur, root.clone()).expect("key on path");
            cur = next;
        }
        root
    }

    /// Merges the sets of `a` and `b`; returns the new representative.
    pub fn union(&mut self, a: &K, b: &K) -> K {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return ra;
        }
        let (ka, kb) = (self.rank[&ra], self.rank[&rb]);
        let (hi, lo) = if ka >= kb { (ra, rb) } else { (rb, ra) };
        self.parent.insert(lo, hi.clone());
        if ka == kb {
            *self.rank.get_mut(&hi).expect("root has rank") += 1;
        }
        hi
    }

    pub fn same(&mut self, a: &K, b: &K) -> bool {
        self.find(a) == self.find(b)
    }

    pub fn keys(&self) -> impl Iterator<Item = &K> {
        self.parent.keys()
    }

    /// Largest rank of any root; bounds tree height.
    pub fn max_rank(&self) -> u8 {
        self.rank.values().copied().max().unwrap_or(0)
    }
}
