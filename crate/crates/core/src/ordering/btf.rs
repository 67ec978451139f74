//! Block triangular form from the strongly connected components of the
//! directed graph of a matrix with a zero-free diagonal.

use crate::sparse::{CscMatrix, Permutation};

const NONE: usize = usize::MAX;

/// Symmetric permutation to block upper triangular form plus the offsets of
/// the diagonal blocks. Vertices keep their natural order inside a block.
pub fn btf_scc(a: &CscMatrix) -> (Permutation, Vec<usize>) {
    assert!(a.is_square(), "btf_scc needs a square matrix");
    let n = a.ncols();
    // Edge j -> i for every a_ij != 0. Tarjan emits components sink-first;
    // a sink has no entries outside its own rows, so it goes first.
    let mut index = vec![NONE; n];
    let mut low = vec![0usize; n];
    let mut on_stack = vec![false; n];
    let mut comp_stack: Vec<usize> = Vec::new();
    let mut call: Vec<(usize, usize)> = Vec::new();
    let mut counter = 0usize;
    let mut order: Vec<usize> = Vec::with_capacity(n);
    let mut offsets = vec![0usize];

    for root in 0..n {
        if index[root] != NONE {
            continue;
        }
        call.push((root, 0));
        index[root] = counter;
        low[root] = counter;
        counter += 1;
        comp_stack.push(root);
        on_stack[root] = true;
        while let Some(&(v, k)) = call.last() {
            let rows = a.col_rows(v);
            if k < rows.len() {
                call.last_mut().unwrap().1 += 1;
                let w = rows[k];
                if index[w] == NONE {
                    index[w] = counter;
                    low[w] = counter;
                    counter += 1;
                    comp_stack.push(w);
                    on_stack[w] = true;
                    call.push((w, 0));
                } else if on_stack[w] {
                    low[v] = low[v].min(index[w]);
                }
                continue;
            }
            call.pop();
            if let Some(&(parent, _)) = call.last() {
                low[parent] = low[parent].min(low[v]);
            }
            if low[v] == index[v] {
                let start = order.len();
                loop {
                    let w = comp_stack.pop().unwrap();
                    on_stack[w] = false;
                    order.push(w);
                    if w == v {
                        break;
                    }
                }
                order[start..].sort_unstable();
                offsets.push(order.len());
            }
        }
    }
    let perm = Permutation::from_order(order).expect("tarjan visits every vertex once");
    (perm, offsets)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sparse::permute;

    fn is_block_upper(a: &CscMatrix, p: &Permutation, off: &[usize]) -> bool {
        let b = permute(a, p, p).unwrap();
        let mut blk = vec![0; a.nrows()];
        for k in 0..off.len() - 1 {
            for i in off[k]..off[k + 1] {
                blk[i] = k;
            }
        }
        let ok = b.iter().all(|(i, j, _)| blk[i] <= blk[j]);
        ok
    }

    #[test]
    fn upper_triangular_gives_singletons() {
        let mut d = vec![0.0; 25];
        for i in 0..5 {
            for j in i..5 {
                d[i * 5 + j] = 1.0;
            }
        }
        let a = CscMatrix::from_dense(5, 5, &d);
        let (p, off) = btf_scc(&a);
        assert_eq!(off, vec![0, 1, 2, 3, 4, 5]);
        assert!(p.is_identity());
    }

    #[test]
    fn cycle_is_one_block() {
        let mut d = vec![0.0; 36];
        for i in 0..6 {
            d[i * 6 + i] = 1.0;
            d[i * 6 + (i + 1) % 6] = 1.0;
        }
        let a = CscMatrix::from_dense(6, 6, &d);
        let (_, off) = btf_scc(&a);
        assert_eq!(off, vec![0, 6]);
    }

    #[test]
    fn lower_triangular_reversed_to_upper() {
        let a = CscMatrix::from_dense(3, 3, &[1., 0., 0., 1., 1., 0., 0., 1., 1.]);
        let (p, off) = btf_scc(&a);
        assert_eq!(off.len(), 4);
        assert!(is_block_upper(&a, &p, &off));
    }
}
