//! Dense minimum-cost assignment (Hungarian method with potentials).

/// Square cost matrix stored row-major.
#[derive(Clone, Debug)]
pub struct CostMatrix {
    n: usize,
    data: Vec<f64>,
}

impl CostMatrix {
    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                data.push(f(i, j));
            }
        }
        CostMatrix { n, data }
    }

    pub fn size(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.n..(i + 1) * self.n]
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Assignment {
    /// `columns[i]` is the column matched to row `i`.
    pub columns: Vec<usize>,
    pub cost: f64,
}

/// Minimum total cost perfect matching, `O(n^3)`.
///
/// Shortest augmenting paths with row/column potentials: one row is
/// inserted per phase, a phase scans only columns not yet reached, and the
/// potentials are updated once per phase. The total is re-summed from the
/// original costs so the result carries no potential round-off.
pub fn solve(cost: &CostMatrix) -> Assignment {
    let n = cost.size();
    const FREE: usize = usize::MAX;
    let mut u = vec![0.0; n];
    let mut v = vec![0.0; n];
    let mut col_of_row = vec![FREE; n];
    let mut row_of_col = vec![FREE; n];
    let mut path = vec![FREE; n];
    let mut dist = vec![f64::INFINITY; n];
    let mut remaining: Vec<usize> = Vec::with_capacity(n);
    let mut rows_seen: Vec<usize> = Vec::with_capacity(n);
    let mut cols_seen: Vec<usize> = Vec::with_capacity(n);

    for start in 0..n {
        dist.fill(f64::INFINITY);
        remaining.clear();
        remaining.extend((0..n).rev());
        rows_seen.clear();
        cols_seen.clear();
        let mut min_val = 0.0;
        let mut i = start;
        let sink = loop {
            rows_seen.push(i);
            let row = cost.row(i);
            let ui = u[i];
            let mut lowest = f64::INFINITY;
            let mut pick = 0;
            for (k, &j) in remaining.iter().enumerate() {
                let r = min_val + row[j] - ui - v[j];
                if r < dist[j] {
                    path[j] = i;
                    dist[j] = r;
                }
                // Ties go to free columns so the phase ends early.
                if dist[j] < lowest || (dist[j] == lowest && row_of_col[j] == FREE) {
                    lowest = dist[j];
                    pick = k;
                }
            }
            min_val = lowest;
            let j = remaining.swap_remove(pick);
            cols_seen.push(j);
            if row_of_col[j] == FREE {
                break j;
            }
            i = row_of_col[j];
        };
        u[start] += min_val;
        for &r in &rows_seen[1..] {
            u[r] += min_val - dist[col_of_row[r]];
        }
        for &c in &cols_seen {
            v[c] -= min_val - dist[c];
        }
        let mut j = sink;
        loop {
            let r = path[j];
            row_of_col[j] = r;
            std::mem::swap(&mut col_of_row[r], &mut j);
            if r == start {
                break;
            }
        }
    }

    let total = crate::path::NeumaierSum::sum(col_of_row.iter().enumerate().map(|(i, &j)| cost.get(i, j)));
    Assignment {
        columns: col_of_row,
        cost: total,
    }
}
