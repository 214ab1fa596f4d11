//! Binary decision trees shared by the forest and the booster.
//!
//! Growing works on *slots*: positions in the tree's training multiset (a
//! bootstrap sample may hold one row several times). For every active
//! feature we keep the node's slots sorted by that feature's value and
//! partition those lists stably at each split, so split scans never re-sort.

use serde::{Deserialize, Serialize};

/// A fitted tree. Rows with `row[feature] <= threshold` go left.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Node<V> {
    Split {
        feature: usize,
        threshold: f64,
        cover: usize,
        left: Box<Node<V>>,
        right: Box<Node<V>>,
    },
    Leaf {
        value: V,
        cover: usize,
    },
}

impl<V> Node<V> {
    pub fn cover(&self) -> usize {
        match self {
            Node::Split { cover, .. } | Node::Leaf { cover, .. } => *cover,
        }
    }

    pub fn leaf<'a>(&'a self, row: &[f64]) -> &'a V {
        let mut node = self;
        loop {
            match node {
                Node::Leaf { value, .. } => return value,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                    ..
                } => {
                    node = if row[*feature] <= *threshold {
                        left
                    } else {
                        right
                    }
                }
            }
        }
    }

    pub fn depth(&self) -> usize {
        match self {
            Node::Leaf { .. } => 0,
            Node::Split { left, right, .. } => 1 + left.depth().max(right.depth()),
        }
    }

    pub fn n_leaves(&self) -> usize {
        match self {
            Node::Leaf { .. } => 1,
            Node::Split { left, right, .. } => left.n_leaves() + right.n_leaves(),
        }
    }

    /// Whether every split's cover equals the sum of its children's covers.
    pub fn covers_consistent(&self) -> bool {
        match self {
            Node::Leaf { cover, .. } => *cover >= 1,
            Node::Split {
                cover, left, right, ..
            } => {
                *cover == left.cover() + right.cover()
                    && left.covers_consistent()
                    && right.covers_consistent()
            }
        }
    }

    pub fn max_feature(&self) -> Option<usize> {
        match self {
            Node::Leaf { .. } => None,
            Node::Split {
                feature,
                left,
                right,
                ..
            } => [Some(*feature), left.max_feature(), right.max_feature()]
                .into_iter()
                .flatten()
                .max(),
        }
    }

    pub fn for_each_leaf(&self, f: &mut impl FnMut(&V)) {
        match self {
            Node::Leaf { value, .. } => f(value),
            Node::Split { left, right, .. } => {
                left.for_each_leaf(f);
                right.for_each_leaf(f);
            }
        }
    }
}

/// Feature indices of `cols` sorted by value, ties by row index.
pub(crate) fn presort(cols: &[Vec<f64>]) -> Vec<Vec<u32>> {
    cols.iter()
        .map(|col| {
            let mut idx: Vec<u32> = (0..col.len() as u32).collect();
            idx.sort_by(|&a, &b| col[a as usize].total_cmp(&col[b as usize]).then(a.cmp(&b)));
            idx
        })
        .collect()
}

/// Midpoint threshold between two consecutive distinct sorted values.
pub(crate) fn midpoint(lo: f64, hi: f64) -> f64 {
    let mid = lo + (hi - lo) / 2.0;
    // Adjacent floats can round the midpoint up onto `hi`.
    if mid >= hi {
        lo
    } else {
        mid
    }
}

/// Best split found along one feature.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Candidate {
    pub feature: usize,
    pub threshold: f64,
    pub n_left: usize,
    pub score: f64,
}

impl Candidate {
    /// Higher score wins; ties go to the lower feature, then lower threshold.
    fn beats(&self, other: &Candidate) -> bool {
        self.score > other.score
            || (self.score == other.score
                && (self.feature < other.feature
                    || (self.feature == other.feature && self.threshold < other.threshold)))
    }
}

/// Split scoring policy plugged into [`Grower`].
pub(crate) trait Criterion {
    type Leaf;

    /// Whether a node holding `slots` at `depth` may be split at all.
    fn splittable(&self, slots: &[u32], depth: usize) -> bool;

    /// Scans the node's slots sorted by `feature` and returns the best
    /// admissible split, if any.
    fn scan(&self, feature: usize, sorted: &[u32], values: &[f64]) -> Option<Candidate>;

    /// Whether the winning candidate should actually be applied.
    fn accept(&self, candidate: &Candidate) -> bool;

    fn leaf(&self, slots: &[u32]) -> Self::Leaf;

    fn on_split(&mut self, _slots: &[u32], _candidate: &Candidate) {}

    /// Features to try at the next node, and how many of them to evaluate
    /// before falling back to the rest when none yields a split.
    fn node_features(&mut self) -> (Vec<usize>, usize);
}

pub(crate) struct Grower<'a, C> {
    cols: &'a [Vec<f64>],
    slot_row: &'a [usize],
    /// Active feature -> position in `order`.
    active_pos: Vec<Option<usize>>,
    /// Per active feature, all slots sorted by that feature.
    order: Vec<Vec<u32>>,
    goes_left: Vec<bool>,
    buffer: Vec<u32>,
    max_depth: Option<usize>,
    pub criterion: C,
}

impl<'a, C: Criterion> Grower<'a, C> {
    /// `presorted` must come from [`presort`] over `cols`; `slot_row` maps
    /// each slot to its dataset row.
    pub fn new(
        cols: &'a [Vec<f64>],
        presorted: &[Vec<u32>],
        slot_row: &'a [usize],
        active: &[usize],
        max_depth: Option<usize>,
        criterion: C,
    ) -> Self {
        let n_rows = cols.first().map_or(0, Vec::len);
        // CSR layout of slots grouped by row.
        let mut start = vec![0usize; n_rows + 1];
        for &r in slot_row {
            start[r + 1] += 1;
        }
        for i in 0..n_rows {
            start[i + 1] += start[i];
        }
        let mut fill = start.clone();
        let mut by_row = vec![0u32; slot_row.len()];
        for (s, &r) in slot_row.iter().enumerate() {
            by_row[fill[r]] = s as u32;
            fill[r] += 1;
        }
        let mut active_pos = vec![None; cols.len()];
        let order = active
            .iter()
            .enumerate()
            .map(|(pos, &f)| {
                active_pos[f] = Some(pos);
                let mut list = Vec::with_capacity(slot_row.len());
                for &r in &presorted[f] {
                    let r = r as usize;
                    list.extend_from_slice(&by_row[start[r]..start[r + 1]]);
                }
                list
            })
            .collect();
        Self {
            cols,
            slot_row,
            active_pos,
            order,
            goes_left: vec![false; slot_row.len()],
            buffer: Vec::with_capacity(slot_row.len()),
            max_depth,
            criterion,
        }
    }

    pub fn grow(mut self) -> (Node<C::Leaf>, C) {
        let n = self.slot_row.len();
        let root = self.grow_node(0, n, 0);
        (root, self.criterion)
    }

    fn values_of(&self, feature: usize, sorted: &[u32], out: &mut Vec<f64>) {
        out.clear();
        let col = &self.cols[feature];
        out.extend(sorted.iter().map(|&s| col[self.slot_row[s as usize]]));
    }

    fn grow_node(&mut self, lo: usize, hi: usize, depth: usize) -> Node<C::Leaf> {
        let cover = hi - lo;
        let at_limit = self.max_depth.is_some_and(|d| depth >= d);
        if at_limit || self.order.is_empty() || !self.criterion.splittable(&self.order[0][lo..hi], depth) {
            return self.make_leaf(lo, hi);
        }

        let (features, n_try) = self.criterion.node_features();
        let mut values = Vec::with_capacity(cover);
        let mut best: Option<Candidate> = None;
        for (i, &f) in features.iter().enumerate() {
            if i >= n_try && best.is_some() {
                break;
            }
            let Some(pos) = self.active_pos[f] else { continue };
            let sorted = &self.order[pos][lo..hi];
            self.values_of(f, sorted, &mut values);
            if let Some(c) = self.criterion.scan(f, &self.order[pos][lo..hi], &values) {
                if best.is_none_or(|b| c.beats(&b)) {
                    best = Some(c);
                }
            }
        }
        let Some(best) = best.filter(|c| self.criterion.accept(c)) else {
            return self.make_leaf(lo, hi);
        };

        let pos = self.active_pos[best.feature].expect("split feature is active");
        self.criterion.on_split(&self.order[pos][lo..hi], &best);
        let mid = lo + best.n_left;
        for &s in &self.order[pos][lo..mid] {
            self.goes_left[s as usize] = true;
        }
        for list in &mut self.order {
            partition_stable(&mut list[lo..hi], &self.goes_left, &mut self.buffer);
        }
        for &s in &self.order[pos][lo..mid] {
            self.goes_left[s as usize] = false;
        }

        let left = Box::new(self.grow_node(lo, mid, depth + 1));
        let right = Box::new(self.grow_node(mid, hi, depth + 1));
        Node::Split {
            feature: best.feature,
            threshold: best.threshold,
            cover,
            left,
            right,
        }
    }

    fn make_leaf(&self, lo: usize, hi: usize) -> Node<C::Leaf> {
        let slots: &[u32] = match self.order.first() {
            Some(list) => &list[lo..hi],
            None => &[],
        };
        let value = if self.order.is_empty() {
            // No active features: every slot lands in the root leaf.
            let all: Vec<u32> = (0..self.slot_row.len() as u32).collect();
            self.criterion.leaf(&all)
        } else {
            self.criterion.leaf(slots)
        };
        Node::Leaf {
            value,
            cover: hi - lo,
        }
    }
}

fn partition_stable(list: &mut [u32], goes_left: &[bool], buffer: &mut Vec<u32>) {
    buffer.clear();
    let mut w = 0;
    for i in 0..list.len() {
        let s = list[i];
        if goes_left[s as usize] {
            list[w] = s;
            w += 1;
        } else {
            buffer.push(s);
        }
    }
    list[w..].copy_from_slice(buffer);
}
