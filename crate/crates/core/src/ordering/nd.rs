//! Nested dissection by recursive vertex-separator bisection.
//!
//! Each bisection grows a breadth-first level structure from a
//! pseudo-peripheral vertex, takes the smallest admissible level as the
//! separator, then improves it with one Fiduccia-Mattheyses style pass over
//! the separator vertices. Disconnected pieces are split by component
//! without a separator whenever that is balanced enough.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sparse::{CscMatrix, Graph, Permutation};

/// Allowed side imbalance: `max(|A|, |B|) <= BALANCE * (|A| + |B|) + 1`.
pub const BALANCE: f64 = 0.55;

const SIDE_A: u8 = 0;
const SIDE_B: u8 = 1;
const SEP: u8 = 2;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NdNode {
    /// First column of the node in the permuted numbering.
    pub start: usize,
    pub end: usize,
    pub parent: Option<usize>,
    pub children: Option<(usize, usize)>,
    /// Lowest post-order id inside this node's subtree.
    pub first: usize,
    /// 0 for leaves.
    pub height: usize,
    /// 0 for the root.
    pub depth: usize,
}

impl NdNode {
    pub fn len(&self) -> usize {
        self.end - self.start
    }

    pub fn is_empty(&self) -> bool {
        self.end == self.start
    }

    pub fn is_leaf(&self) -> bool {
        self.children.is_none()
    }
}

/// Binary separator tree, nodes stored in post-order (root last).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NdTree {
    nleaves: usize,
    nodes: Vec<NdNode>,
}

impl NdTree {
    pub fn single(n: usize) -> Self {
        Self {
            nleaves: 1,
            nodes: vec![NdNode {
                start: 0,
                end: n,
                parent: None,
                children: None,
                first: 0,
                height: 0,
                depth: 0,
            }],
        }
    }

    pub fn nleaves(&self) -> usize {
        self.nleaves
    }

    pub fn levels(&self) -> usize {
        self.nleaves.trailing_zeros() as usize
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[NdNode] {
        &self.nodes
    }

    pub fn node(&self, id: usize) -> &NdNode {
        &self.nodes[id]
    }

    pub fn root(&self) -> usize {
        self.nodes.len() - 1
    }

    pub fn ncols(&self) -> usize {
        self.nodes[self.root()].end
    }

    /// Leaf node ids, left to right. Leaf `k` of this list is owned by
    /// worker `k`.
    pub fn leaves(&self) -> Vec<usize> {
        (0..self.nodes.len()).filter(|&i| self.nodes[i].is_leaf()).collect()
    }

    /// True when `a` is `b` or one of its ancestors.
    #[inline]
    pub fn contains(&self, a: usize, b: usize) -> bool {
        self.nodes[a].first <= b && b <= a
    }

    /// Strict descendants of `j` in post-order.
    pub fn descendants(&self, j: usize) -> std::ops::Range<usize> {
        self.nodes[j].first..j
    }

    /// Strict ancestors of `j`, nearest first.
    pub fn ancestors(&self, j: usize) -> impl Iterator<Item = usize> + '_ {
        std::iter::successors(self.nodes[j].parent, move |&p| self.nodes[p].parent)
    }

    pub fn nodes_at_height(&self, h: usize) -> Vec<usize> {
        (0..self.nodes.len()).filter(|&i| self.nodes[i].height == h).collect()
    }

    /// Column offsets of the nodes in post-order, suitable for
    /// [`crate::sparse::extract_blocks`].
    pub fn offsets(&self) -> Vec<usize> {
        let mut off: Vec<usize> = self.nodes.iter().map(|n| n.start).collect();
        off.push(self.ncols());
        off
    }

    /// Index of the leaf (0-based, left to right) for a leaf node id.
    pub fn leaf_rank(&self, node: usize) -> Option<usize> {
        if !self.nodes[node].is_leaf() {
            return None;
        }
        Some(self.nodes[..node].iter().filter(|n| n.is_leaf()).count())
    }

    /// Leaf ranks covered by the subtree of `j`.
    pub fn leaf_span(&self, j: usize) -> std::ops::Range<usize> {
        let first_leaf = self.leaf_rank(self.nodes[j].first).expect("subtree starts at a leaf");
        let count = 1usize << self.nodes[j].height;
        first_leaf..first_leaf + count
    }
}

/// Nested dissection of the graph of `A + Aᵀ` into `nleaves` leaves.
pub fn nd_order(a: &CscMatrix, nleaves: usize) -> Result<(Permutation, NdTree)> {
    if !a.is_square() {
        return Err(Error::NotSquare {
            nrows: a.nrows(),
            ncols: a.ncols(),
        });
    }
    let n = a.ncols();
    if nleaves == 0 || !nleaves.is_power_of_two() || nleaves > n.max(1) {
        return Err(Error::InvalidLeafCount { nleaves, ncols: n });
    }
    let g = Graph::from_symmetrized(a);
    let mut b = Builder {
        g: &g,
        order: Vec::with_capacity(n),
        nodes: Vec::with_capacity(2 * nleaves - 1),
        local: vec![usize::MAX; n],
    };
    let levels = nleaves.trailing_zeros() as usize;
    b.build((0..n).collect(), levels, 0);
    let perm = Permutation::from_order(b.order)?;
    Ok((
        perm,
        NdTree {
            nleaves,
            nodes: b.nodes,
        },
    ))
}

struct Builder<'g> {
    g: &'g Graph,
    order: Vec<usize>,
    nodes: Vec<NdNode>,
    local: Vec<usize>,
}

impl Builder<'_> {
    fn build(&mut self, verts: Vec<usize>, levels_left: usize, depth: usize) -> usize {
        let first = self.nodes.len();
        if levels_left == 0 {
            let start = self.order.len();
            self.order.extend_from_slice(&verts);
            self.nodes.push(NdNode {
                start,
                end: self.order.len(),
                parent: None,
                children: None,
                first,
                height: 0,
                depth,
            });
            return self.nodes.len() - 1;
        }
        let sub = self.g.induced(&verts, &mut self.local);
        let labels = bisect(&sub);
        let pick = |side: u8| -> Vec<usize> {
            verts
                .iter()
                .zip(&labels)
                .filter(|(_, &l)| l == side)
                .map(|(&v, _)| v)
                .collect()
        };
        let (va, vb, vs) = (pick(SIDE_A), pick(SIDE_B), pick(SEP));
        drop(sub);
        let l = self.build(va, levels_left - 1, depth + 1);
        let r = self.build(vb, levels_left - 1, depth + 1);
        let start = self.order.len();
        self.order.extend_from_slice(&vs);
        let id = self.nodes.len();
        self.nodes.push(NdNode {
            start,
            end: self.order.len(),
            parent: None,
            children: Some((l, r)),
            first,
            height: levels_left,
            depth,
        });
        self.nodes[l].parent = Some(id);
        self.nodes[r].parent = Some(id);
        id
    }
}

/// Labels every vertex `SIDE_A`, `SIDE_B` or `SEP` so that no edge joins the
/// two sides.
pub(crate) fn bisect(g: &Graph) -> Vec<u8> {
    let n = g.nvertices();
    let mut labels = vec![SIDE_A; n];
    if n == 0 {
        return labels;
    }
    let mut comps = components(g);
    if comps.len() == 1 {
        return bisect_connected(g);
    }
    // Largest first; ties keep the lowest-vertex order from `components`.
    comps.sort_by_key(|c| std::cmp::Reverse(c.len()));
    let (mut na, mut nb) = (0usize, 0usize);
    let mut rest = &comps[..];
    if comps[0].len() * 3 > n * 2 {
        let big = &comps[0];
        let mut local = vec![usize::MAX; n];
        let sub = g.induced(big, &mut local);
        let sub_labels = bisect_connected(&sub);
        for (&v, &l) in big.iter().zip(&sub_labels) {
            labels[v] = l;
            match l {
                SIDE_A => na += 1,
                SIDE_B => nb += 1,
                _ => {}
            }
        }
        rest = &comps[1..];
    }
    for c in rest {
        let side = if nb < na { SIDE_B } else { SIDE_A };
        for &v in c {
            labels[v] = side;
        }
        if side == SIDE_A {
            na += c.len();
        } else {
            nb += c.len();
        }
    }
    labels
}

fn components(g: &Graph) -> Vec<Vec<usize>> {
    let n = g.nvertices();
    let mut seen = vec![false; n];
    let mut out = Vec::new();
    let mut queue = Vec::new();
    for s in 0..n {
        if seen[s] {
            continue;
        }
        seen[s] = true;
        queue.clear();
        queue.push(s);
        let mut head = 0;
        while head < queue.len() {
            let v = queue[head];
            head += 1;
            for &u in g.neighbors(v) {
                if !seen[u] {
                    seen[u] = true;
                    queue.push(u);
                }
            }
        }
        let mut c = queue.clone();
        c.sort_unstable();
        out.push(c);
    }
    out
}

fn bfs_levels(g: &Graph, start: usize, dist: &mut [usize]) -> Vec<Vec<usize>> {
    dist.fill(usize::MAX);
    dist[start] = 0;
    let mut levels = vec![vec![start]];
    loop {
        let mut next = Vec::new();
        for &v in levels.last().unwrap() {
            for &u in g.neighbors(v) {
                if dist[u] == usize::MAX {
                    dist[u] = levels.len();
                    next.push(u);
                }
            }
        }
        if next.is_empty() {
            break;
        }
        next.sort_unstable();
        levels.push(next);
    }
    levels
}

fn pseudo_peripheral(g: &Graph, dist: &mut [usize]) -> (usize, Vec<Vec<usize>>) {
    let n = g.nvertices();
    let mut start = (0..n).min_by_key(|&v| (g.degree(v), v)).unwrap();
    let mut levels = bfs_levels(g, start, dist);
    for _ in 0..16 {
        let last = levels.last().unwrap();
        let cand = *last.iter().min_by_key(|&&v| (g.degree(v), v)).unwrap();
        let cl = bfs_levels(g, cand, dist);
        if cl.len() <= levels.len() {
            break;
        }
        start = cand;
        levels = cl;
    }
    (start, levels)
}

fn balanced(a: usize, b: usize) -> bool {
    (a.max(b) as f64) <= BALANCE * (a + b) as f64 + 1.0
}

fn bisect_connected(g: &Graph) -> Vec<u8> {
    let n = g.nvertices();
    let mut labels = vec![SIDE_A; n];
    if n <= 1 {
        return labels;
    }
    let mut dist = vec![0usize; n];
    let (_, levels) = pseudo_peripheral(g, &mut dist);
    let e = levels.len() - 1;
    let sizes: Vec<usize> = levels.iter().map(Vec::len).collect();

    let k = if e < 2 {
        1
    } else {
        let mut before = 0usize;
        let mut best: Option<(bool, usize, usize, usize)> = None; // (infeasible, |S|, imbalance, k)
        let mut best_k = 1;
        for k in 1..e {
            before += sizes[k - 1];
            let after = n - before - sizes[k];
            let key = (
                !balanced(before, after),
                sizes[k],
                before.abs_diff(after),
                k,
            );
            let key = if key.0 {
                // Infeasible levels compete on balance alone.
                (true, before.abs_diff(after), 0, k)
            } else {
                key
            };
            if best.is_none_or(|b| key < b) {
                best = Some(key);
                best_k = k;
            }
        }
        best_k
    };
    for (lvl, vs) in levels.iter().enumerate() {
        let l = match lvl.cmp(&k) {
            std::cmp::Ordering::Less => SIDE_A,
            std::cmp::Ordering::Equal => SEP,
            std::cmp::Ordering::Greater => SIDE_B,
        };
        for &v in vs {
            labels[v] = l;
        }
    }
    rebalance_components(g, &mut labels);
    refine(g, &mut labels);
    labels
}

/// Once the separator is removed, whole components can move between sides
/// freely. When the level split is unbalanced (a star, say), deal them out
/// largest first to the lighter side.
fn rebalance_components(g: &Graph, labels: &mut [u8]) {
    let na = labels.iter().filter(|&&l| l == SIDE_A).count();
    let nb = labels.iter().filter(|&&l| l == SIDE_B).count();
    if balanced(na, nb) {
        return;
    }
    let n = g.nvertices();
    let mut seen: Vec<bool> = labels.iter().map(|&l| l == SEP).collect();
    let mut comps = Vec::new();
    for s in 0..n {
        if seen[s] {
            continue;
        }
        seen[s] = true;
        let mut c = vec![s];
        let mut head = 0;
        while head < c.len() {
            let v = c[head];
            head += 1;
            for &u in g.neighbors(v) {
                if !seen[u] {
                    seen[u] = true;
                    c.push(u);
                }
            }
        }
        comps.push(c);
    }
    comps.sort_by_key(|c| std::cmp::Reverse(c.len()));
    let (mut na, mut nb) = (0usize, 0usize);
    for c in comps {
        let side = if nb < na { SIDE_B } else { SIDE_A };
        for &v in &c {
            labels[v] = side;
        }
        if side == SIDE_A {
            na += c.len();
        } else {
            nb += c.len();
        }
    }
}

/// One pass of separator refinement: repeatedly move the separator vertex
/// with the best gain to a side (pulling its neighbours on the opposite side
/// into the separator), then roll back to the best state seen.
fn refine(g: &Graph, labels: &mut [u8]) {
    let n = g.nvertices();
    let mut count = [0usize; 3];
    for &l in labels.iter() {
        count[l as usize] += 1;
    }
    let mut locked = vec![false; n];
    let mut log: Vec<(usize, u8, Vec<usize>)> = Vec::new();
    let score = |c: &[usize; 3]| (!balanced(c[0], c[1]), c[2], c[0].abs_diff(c[1]));
    let mut best = score(&count);
    let mut best_len = 0usize;
    let mut stall = 0usize;
    let max_moves = n;
    let mut sep: Vec<usize> = (0..n).filter(|&v| labels[v] == SEP).collect();

    while log.len() < max_moves && stall < 64 {
        sep.retain(|&v| labels[v] == SEP);
        // (gain, prefers smaller side, vertex, target)
        let mut pick: Option<(isize, bool, std::cmp::Reverse<usize>, u8)> = None;
        for &v in &sep {
            if locked[v] {
                continue;
            }
            for to in [SIDE_A, SIDE_B] {
                let other = 1 - to;
                let pulled = g.neighbors(v).iter().filter(|&&u| labels[u] == other).count();
                let mut c = count;
                c[to as usize] += 1;
                c[other as usize] -= pulled;
                c[SEP as usize] = c[SEP as usize] + pulled - 1;
                if !balanced(c[0], c[1]) && c[0].abs_diff(c[1]) >= count[0].abs_diff(count[1]) {
                    continue;
                }
                let gain = 1 - pulled as isize;
                let smaller = count[to as usize] <= count[other as usize];
                let key = (gain, smaller, std::cmp::Reverse(v), to);
                if pick.is_none_or(|p| key > p) {
                    pick = Some(key);
                }
            }
        }
        let Some((_, _, std::cmp::Reverse(v), to)) = pick else {
            break;
        };
        let other = 1 - to;
        let mut pulled = Vec::new();
        for &u in g.neighbors(v) {
            if labels[u] == other {
                labels[u] = SEP;
                pulled.push(u);
                sep.push(u);
            }
        }
        labels[v] = to;
        locked[v] = true;
        count[to as usize] += 1;
        count[other as usize] -= pulled.len();
        count[SEP as usize] = count[SEP as usize] + pulled.len() - 1;
        log.push((v, other, pulled));
        let s = score(&count);
        if s < best {
            best = s;
            best_len = log.len();
            stall = 0;
        } else {
            stall += 1;
        }
    }
    while log.len() > best_len {
        let (v, other, pulled) = log.pop().unwrap();
        labels[v] = SEP;
        for u in pulled {
            labels[u] = other;
        }
    }
}
