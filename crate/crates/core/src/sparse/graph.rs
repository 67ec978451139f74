use super::csc::CscMatrix;

/// Undirected adjacency structure with sorted neighbour lists and no
/// self-loops.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    xadj: Vec<usize>,
    adj: Vec<usize>,
}

impl Graph {
    /// The graph of `A + Aᵀ` for a square matrix.
    pub fn from_symmetrized(a: &CscMatrix) -> Self {
        assert!(a.is_square());
        let n = a.ncols();
        let mut deg = vec![0usize; n];
        for (i, j, _) in a.iter() {
            if i != j {
                deg[i] += 1;
                deg[j] += 1;
            }
        }
        let mut xadj = vec![0usize; n + 1];
        for v in 0..n {
            xadj[v + 1] = xadj[v] + deg[v];
        }
        let mut next = xadj.clone();
        let mut adj = vec![0usize; xadj[n]];
        for (i, j, _) in a.iter() {
            if i != j {
                adj[next[i]] = j;
                next[i] += 1;
                adj[next[j]] = i;
                next[j] += 1;
            }
        }
        Self::compact(n, xadj, adj)
    }

    pub fn from_edges(n: usize, edges: &[(usize, usize)]) -> Self {
        let mut lists = vec![Vec::new(); n];
        for &(u, v) in edges {
            if u != v {
                lists[u].push(v);
                lists[v].push(u);
            }
        }
        let mut xadj = vec![0];
        let mut adj = Vec::new();
        for l in lists {
            adj.extend(l);
            xadj.push(adj.len());
        }
        Self::compact(n, xadj, adj)
    }

    fn compact(n: usize, xadj: Vec<usize>, mut adj: Vec<usize>) -> Self {
        let mut out_x = Vec::with_capacity(n + 1);
        out_x.push(0);
        let mut w = 0;
        for v in 0..n {
            let seg = &mut adj[xadj[v]..xadj[v + 1]];
            seg.sort_unstable();
            let mut last = usize::MAX;
            for k in xadj[v]..xadj[v + 1] {
                let u = adj[k];
                if u != last {
                    adj[w] = u;
                    w += 1;
                    last = u;
                }
            }
            out_x.push(w);
        }
        adj.truncate(w);
        Self { xadj: out_x, adj }
    }

    pub fn nvertices(&self) -> usize {
        self.xadj.len() - 1
    }

    pub fn nedges(&self) -> usize {
        self.adj.len() / 2
    }

    #[inline]
    pub fn neighbors(&self, v: usize) -> &[usize] {
        &self.adj[self.xadj[v]..self.xadj[v + 1]]
    }

    pub fn degree(&self, v: usize) -> usize {
        self.xadj[v + 1] - self.xadj[v]
    }

    /// Induced subgraph on `vertices` (local numbering follows slice order).
    pub fn induced(&self, vertices: &[usize], local: &mut [usize]) -> Graph {
        for (k, &v) in vertices.iter().enumerate() {
            local[v] = k;
        }
        let mut xadj = Vec::with_capacity(vertices.len() + 1);
        let mut adj = Vec::new();
        xadj.push(0);
        for &v in vertices {
            for &u in self.neighbors(v) {
                let lu = local[u];
                if lu != usize::MAX && vertices.get(lu) == Some(&u) {
                    adj.push(lu);
                }
            }
            adj[xadj.last().copied().unwrap()..].sort_unstable();
            xadj.push(adj.len());
        }
        for &v in vertices {
            local[v] = usize::MAX;
        }
        Graph { xadj, adj }
    }
}
