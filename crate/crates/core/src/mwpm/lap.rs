//! Rectangular linear assignment by shortest augmenting paths.
//!
//! This is the Jonker-Volgenant style scheme in the form popularised by
//! Crouse: one Dijkstra search per unassigned row over reduced costs, with
//! dual potentials kept feasible throughout. Costs are produced on demand so
//! dense matrices never have to be stored.

/// Assigns every row to a distinct column at minimum total cost.
///
/// Requires `rows <= cols`. Rows given in `seed` (as `(row, col)` pairs of
/// zero cost) are fixed up front; this is exact because zero-cost pairs are
/// tight for the all-zero dual when every cost is non-negative. Returns the
/// column of each row.
pub fn solve_lap(rows: usize, cols: usize, cost: impl Fn(usize, usize) -> i64, seed: &[(usize, usize)]) -> Vec<usize> {
    assert!(rows <= cols, "assignment needs at least as many columns as rows");
    const NONE: usize = usize::MAX;
    let mut u = vec![0i64; rows];
    let mut v = vec![0i64; cols];
    let mut col4row = vec![NONE; rows];
    let mut row4col = vec![NONE; cols];
    for &(r, c) in seed {
        debug_assert_eq!(cost(r, c), 0);
        if col4row[r] == NONE && row4col[c] == NONE {
            col4row[r] = c;
            row4col[c] = r;
        }
    }

    let mut shortest = vec![i64::MAX; cols];
    let mut path = vec![NONE; cols];
    let mut remaining = vec![0usize; cols];
    let mut sr = vec![false; rows];
    let mut sc = vec![false; cols];

    for cur in 0..rows {
        if col4row[cur] != NONE {
            continue;
        }
        shortest.fill(i64::MAX);
        sr.fill(false);
        sc.fill(false);
        for (it, slot) in remaining.iter_mut().enumerate() {
            *slot = cols - it - 1;
        }
        let mut num_remaining = cols;
        let mut min_val = 0i64;
        let mut i = cur;
        let sink = loop {
            sr[i] = true;
            let mut index = NONE;
            let mut lowest = i64::MAX;
            for (it, &j) in remaining[..num_remaining].iter().enumerate() {
                let r = min_val + cost(i, j) - u[i] - v[j];
                if r < shortest[j] {
                    path[j] = i;
                    shortest[j] = r;
                }
                if shortest[j] < lowest || (shortest[j] == lowest && row4col[j] == NONE) {
                    lowest = shortest[j];
                    index = it;
                }
            }
            min_val = lowest;
            let j = remaining[index];
            sc[j] = true;
            num_remaining -= 1;
            remaining[index] = remaining[num_remaining];
            if row4col[j] == NONE {
                break j;
            }
            i = row4col[j];
        };

        u[cur] += min_val;
        for r in 0..rows {
            if sr[r] && r != cur {
                u[r] += min_val - shortest[col4row[r]];
            }
        }
        for c in 0..cols {
            if sc[c] {
                v[c] -= min_val - shortest[c];
            }
        }
        let mut j = sink;
        loop {
            let r = path[j];
            row4col[j] = r;
            std::mem::swap(&mut col4row[r], &mut j);
            if r == cur {
                break;
            }
        }
    }
    col4row
}
