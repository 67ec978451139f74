//! Static work assignment for the 2D factorization of an ND block.
//!
//! The dependency tree mirrors the ND tree: leaf `i` is owned by worker `i`,
//! an internal node by the union of its children's workers. Separator
//! columns are processed in windows; every (block, window) step is a task
//! with one owner, and tasks publish progress through per-block counters.
//! The same task list drives the threaded executor and the simulator.

use std::collections::HashMap;
use std::ops::Range;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ordering::NdTree;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DepNode {
    pub parent: Option<usize>,
    /// -1 for leaves, then 0, 1, ... towards the root.
    pub treelevel: isize,
    /// Contiguous range of worker ids.
    pub workers: Range<usize>,
    /// `(block_row, block_col)` pairs whose factor this node produces.
    pub owned: Vec<(usize, usize)>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DependencyTree {
    pub nodes: Vec<DepNode>,
    /// For every separator level, the nodes factored at that level with
    /// their column ranges, bottom-up.
    pub levels: Vec<Vec<(usize, Range<usize>)>>,
}

impl DependencyTree {
    pub fn nworkers(&self) -> usize {
        self.nodes.last().map_or(0, |n| n.workers.end)
    }
}

pub fn build_dependency_tree(tree: &NdTree, p: usize) -> Result<DependencyTree> {
    if p != tree.nleaves() {
        return Err(Error::ThreadMismatch {
            threads: p,
            nleaves: tree.nleaves(),
        });
    }
    let mut nodes = Vec::with_capacity(tree.len());
    for (id, nd) in tree.nodes().iter().enumerate() {
        let workers = tree.leaf_span(id);
        let mut owned = Vec::new();
        if nd.is_leaf() {
            owned.push((id, id));
            owned.extend(tree.ancestors(id).map(|a| (a, id)));
        } else {
            owned.extend(tree.descendants(id).map(|k| (k, id)));
            owned.push((id, id));
            owned.extend(tree.ancestors(id).map(|a| (a, id)));
        }
        nodes.push(DepNode {
            parent: nd.parent,
            treelevel: nd.height as isize - 1,
            workers,
            owned,
        });
    }
    let max_h = tree.nodes().iter().map(|n| n.height).max().unwrap_or(0);
    let levels = (1..=max_h)
        .map(|h| {
            tree.nodes_at_height(h)
                .into_iter()
                .map(|j| (j, tree.node(j).start..tree.node(j).end))
                .collect()
        })
        .collect();
    Ok(DependencyTree { nodes, levels })
}

/// Progress counter identities.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CellKey {
    /// Diagonal factor of a node (leaf: whole panel including `L_ai`).
    Factor(usize),
    /// `U_kj` windows done.
    Upper(usize, usize),
    /// `L_aj` windows done, `j` a separator.
    Lower(usize, usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TaskKind {
    /// Factor the stacked panel of a leaf.
    Leaf { node: usize },
    /// `U_kj` for the columns of window `w` of separator `j`, plus the
    /// products `L_ak · U_kj` for every ancestor `a` of `k`.
    Upper { k: usize, j: usize, w: usize },
    /// Diagonal factor columns of window `w` of separator `j`.
    Diag { j: usize, w: usize },
    /// `L_aj` for window `w`.
    Lower { a: usize, j: usize, w: usize },
}

impl TaskKind {
    /// The tree node whose columns the task works on.
    pub fn column_node(&self) -> usize {
        match *self {
            TaskKind::Leaf { node } => node,
            TaskKind::Upper { j, .. } | TaskKind::Diag { j, .. } | TaskKind::Lower { j, .. } => j,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Task {
    pub kind: TaskKind,
    pub owner: usize,
    /// `(cell, value)` pairs that must be reached before starting.
    pub deps: Vec<(usize, u64)>,
    /// Cell set to `value` when the task finishes.
    pub publishes: (usize, u64),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Schedule {
    pub window: usize,
    pub nworkers: usize,
    pub cells: Vec<CellKey>,
    /// Globally topological order.
    pub tasks: Vec<Task>,
    /// Per worker, indices into `tasks` in execution order.
    pub per_worker: Vec<Vec<usize>>,
    /// Owner of the producer of each cell.
    pub cell_owner: Vec<Vec<usize>>,
}

pub fn nwindows(len: usize, window: usize) -> usize {
    len.div_ceil(window)
}

struct CellTable {
    keys: Vec<CellKey>,
    index: HashMap<CellKey, usize>,
}

impl CellTable {
    fn id(&mut self, k: CellKey) -> usize {
        if let Some(&i) = self.index.get(&k) {
            return i;
        }
        self.keys.push(k);
        self.index.insert(k, self.keys.len() - 1);
        self.keys.len() - 1
    }
}

pub fn build_schedule(tree: &NdTree, deps: &DependencyTree, window: usize) -> Schedule {
    assert!(window > 0);
    let nw = |j: usize| nwindows(tree.node(j).len(), window);
    let mut cells = CellTable {
        keys: Vec::new(),
        index: HashMap::new(),
    };
    let mut tasks = Vec::new();
    let workers = |j: usize| deps.nodes[j].workers.clone();

    // Cells proving that node `k` is completely factored, `L_ak` included.
    let done = |k: usize, cells: &mut CellTable, out: &mut Vec<(usize, u64)>| {
        if tree.node(k).is_leaf() {
            out.push((cells.id(CellKey::Factor(k)), 1));
        } else if nw(k) > 0 {
            out.push((cells.id(CellKey::Factor(k)), nw(k) as u64));
            for a in tree.ancestors(k) {
                out.push((cells.id(CellKey::Lower(a, k)), nw(k) as u64));
            }
        }
    };

    for leaf in tree.leaves() {
        tasks.push(Task {
            kind: TaskKind::Leaf { node: leaf },
            owner: tree.leaf_rank(leaf).unwrap(),
            deps: Vec::new(),
            publishes: (cells.id(CellKey::Factor(leaf)), 1),
        });
    }
    for level in &deps.levels {
        for (j, _) in level {
            let j = *j;
            let wj = workers(j);
            let anc: Vec<usize> = tree.ancestors(j).collect();
            for w in 0..nw(j) {
                let wv = w as u64 + 1;
                for k in tree.descendants(j) {
                    let mut d = Vec::new();
                    done(k, &mut cells, &mut d);
                    for e in tree.descendants(k) {
                        d.push((cells.id(CellKey::Upper(e, j)), wv));
                    }
                    let wk = workers(k);
                    let owner = if tree.node(k).is_leaf() {
                        wk.start
                    } else {
                        wk.start + w % wk.len()
                    };
                    tasks.push(Task {
                        kind: TaskKind::Upper { k, j, w },
                        owner,
                        deps: d,
                        publishes: (cells.id(CellKey::Upper(k, j)), wv),
                    });
                }
                let mut d: Vec<(usize, u64)> =
                    tree.descendants(j).map(|k| (cells.id(CellKey::Upper(k, j)), wv)).collect();
                if w > 0 {
                    d.push((cells.id(CellKey::Factor(j)), w as u64));
                }
                tasks.push(Task {
                    kind: TaskKind::Diag { j, w },
                    owner: wj.start,
                    deps: d,
                    publishes: (cells.id(CellKey::Factor(j)), wv),
                });
                for (idx, &a) in anc.iter().enumerate() {
                    let mut d: Vec<(usize, u64)> =
                        tree.descendants(j).map(|k| (cells.id(CellKey::Upper(k, j)), wv)).collect();
                    d.push((cells.id(CellKey::Factor(j)), wv));
                    if w > 0 {
                        d.push((cells.id(CellKey::Lower(a, j)), w as u64));
                    }
                    let owner = if wj.len() > 1 {
                        wj.start + 1 + idx % (wj.len() - 1)
                    } else {
                        wj.start
                    };
                    tasks.push(Task {
                        kind: TaskKind::Lower { a, j, w },
                        owner,
                        deps: d,
                        publishes: (cells.id(CellKey::Lower(a, j)), wv),
                    });
                }
            }
        }
    }

    let nworkers = deps.nworkers();
    let mut per_worker = vec![Vec::new(); nworkers];
    let mut cell_owner = vec![Vec::new(); cells.keys.len()];
    for (t, task) in tasks.iter().enumerate() {
        per_worker[task.owner].push(t);
        let owners = &mut cell_owner[task.publishes.0];
        if !owners.contains(&task.owner) {
            owners.push(task.owner);
        }
    }
    Schedule {
        window,
        nworkers,
        cells: cells.keys,
        tasks,
        per_worker,
        cell_owner,
    }
}

/// Outcome of [`simulate`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SimReport {
    /// Rounds of the lock-step simulation.
    pub rounds: usize,
    pub tasks: usize,
    /// Largest number of tasks that ran in one round.
    pub max_parallel: usize,
}

/// Runs the schedule in lock-step rounds: in each round every worker whose
/// next task has all dependencies satisfied runs it. Fails on a round with
/// no progress (deadlock), on a dependency that was never produced, or on a
/// wait for a worker outside the task's column node worker set.
pub fn simulate(s: &Schedule, deps: &DependencyTree) -> std::result::Result<SimReport, String> {
    for task in &s.tasks {
        let allowed = &deps.nodes[task.kind.column_node()].workers;
        if !allowed.contains(&task.owner) {
            return Err(format!("{:?} owned by worker {} outside {:?}", task.kind, task.owner, allowed));
        }
        for &(cell, _) in &task.deps {
            if s.cell_owner[cell].is_empty() {
                return Err(format!("{:?} waits on {:?}, which nobody produces", task.kind, s.cells[cell]));
            }
            if let Some(w) = s.cell_owner[cell].iter().find(|w| !allowed.contains(w)) {
                return Err(format!(
                    "{:?} waits on {:?} from worker {w}, outside {:?}",
                    task.kind, s.cells[cell], allowed
                ));
            }
        }
    }
    let mut value = vec![0u64; s.cells.len()];
    let mut next = vec![0usize; s.nworkers];
    let mut remaining = s.tasks.len();
    let mut rounds = 0;
    let mut max_parallel = 0;
    while remaining > 0 {
        let mut ready = Vec::new();
        for w in 0..s.nworkers {
            if let Some(&t) = s.per_worker[w].get(next[w]) {
                if s.tasks[t].deps.iter().all(|&(c, v)| value[c] >= v) {
                    ready.push((w, t));
                }
            }
        }
        if ready.is_empty() {
            let stuck: Vec<String> = (0..s.nworkers)
                .filter_map(|w| s.per_worker[w].get(next[w]).map(|&t| format!("worker {w}: {:?}", s.tasks[t].kind)))
                .collect();
            return Err(format!("deadlock after {rounds} rounds: {}", stuck.join("; ")));
        }
        max_parallel = max_parallel.max(ready.len());
        for (w, t) in ready {
            let (c, v) = s.tasks[t].publishes;
            debug_assert!(value[c] < v, "counters only grow");
            value[c] = v;
            next[w] += 1;
            remaining -= 1;
        }
        rounds += 1;
    }
    Ok(SimReport {
        rounds,
        tasks: s.tasks.len(),
        max_parallel,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ordering::nd_order;
    use crate::sparse::CscMatrix;

    fn grid(k: usize) -> CscMatrix {
        let n = k * k;
        let mut t = crate::sparse::Triplets::new(n, n);
        for i in 0..k {
            for j in 0..k {
                let v = i * k + j;
                t.push(v, v, 4.0);
                if i + 1 < k {
                    t.push(v, v + k, -1.0);
                    t.push(v + k, v, -1.0);
                }
                if j + 1 < k {
                    t.push(v, v + 1, -1.0);
                    t.push(v + 1, v, -1.0);
                }
            }
        }
        CscMatrix::from_triplets(&t).unwrap()
    }

    #[test]
    fn single_leaf_owns_everything() {
        let tree = NdTree::single(5);
        let d = build_dependency_tree(&tree, 1).unwrap();
        assert_eq!(d.nodes.len(), 1);
        assert_eq!(d.nodes[0].workers, 0..1);
        assert!(d.levels.is_empty());
    }

    #[test]
    fn two_leaves() {
        let (_, tree) = nd_order(&grid(6), 2).unwrap();
        let d = build_dependency_tree(&tree, 2).unwrap();
        assert_eq!(d.nodes.len(), 3);
        assert_eq!(d.nodes[2].workers, 0..2);
        assert_eq!(d.nodes[0].treelevel, -1);
        assert_eq!(d.nodes[2].treelevel, 0);
    }

    #[test]
    fn four_leaves_match_tree_shape() {
        let (_, tree) = nd_order(&grid(8), 4).unwrap();
        let d = build_dependency_tree(&tree, 4).unwrap();
        assert_eq!(d.nodes.len(), 7);
        assert_eq!(d.nodes.iter().filter(|n| n.treelevel == -1).count(), 4);
        assert_eq!(d.nodes.iter().filter(|n| n.treelevel == 0).count(), 2);
        assert_eq!(d.nodes[6].workers.len(), 4);
        for (i, n) in d.nodes.iter().enumerate() {
            if let Some(p) = n.parent {
                let pw = &d.nodes[p].workers;
                assert!(pw.start <= n.workers.start && n.workers.end <= pw.end, "node {i}");
            }
        }
    }

    #[test]
    fn mismatch_is_rejected() {
        let (_, tree) = nd_order(&grid(6), 2).unwrap();
        assert!(matches!(build_dependency_tree(&tree, 4), Err(Error::ThreadMismatch { .. })));
    }

    #[test]
    fn schedules_simulate_cleanly() {
        for p in [1, 2, 4, 8] {
            let (_, tree) = nd_order(&grid(16), p).unwrap();
            let d = build_dependency_tree(&tree, p).unwrap();
            let s = build_schedule(&tree, &d, 4);
            let r = simulate(&s, &d).unwrap();
            assert_eq!(r.tasks, s.tasks.len());
        }
    }

    #[test]
    fn simulator_detects_deadlock() {
        let (_, tree) = nd_order(&grid(8), 2).unwrap();
        let d = build_dependency_tree(&tree, 2).unwrap();
        let mut s = build_schedule(&tree, &d, 64);
        // Make the first leaf wait on the root's diagonal factor.
        let root_cell = s.tasks.iter().find(|t| matches!(t.kind, TaskKind::Diag { .. })).unwrap().publishes;
        s.tasks[0].deps.push(root_cell);
        assert!(simulate(&s, &d).unwrap_err().contains("deadlock"));
    }
}
