//! Basis factorisation for the bounded primal simplex.
//!
//! Basis columns are either logicals (`-e_r`) or structural columns. Rows whose
//! logical is basic are eliminated directly; the remaining structural kernel is
//! factorised with a sparse Markowitz LU and threshold pivoting. Pivots between refactorisations are
//! kept as product-form etas.

use super::problem::LpProblem;

const PIVOT_ABS_MIN: f64 = 1e-11;

struct Eta {
    pos: usize,
    pivot: f64,
    /// Off-pivot entries of the entering column in position space.
    entries: Vec<(usize, f64)>,
}

pub(crate) struct Factor {
    m: usize,
    /// For every basis position: `Some(row)` when the basic variable is that row's logical.
    logical_row: Vec<Option<usize>>,
    /// Position of the basic logical of each row, if any.
    covering_pos: Vec<usize>,
    kernel_rows: Vec<usize>,
    /// Basis positions of the kernel columns, in kernel column order.
    kernel_pos: Vec<usize>,
    kernel_var: Vec<usize>,
    row_in_kernel: Vec<usize>,
    lu: SparseLu,
    etas: Vec<Eta>,
    eta_nnz: usize,
}

/// Kernel columns that could not be pivoted, returned so the caller can swap
/// them for logicals of the `free_rows`.
pub(crate) struct Singular {
    pub bad_positions: Vec<usize>,
    pub free_rows: Vec<usize>,
}

impl Factor {
    pub fn new(p: &LpProblem, head: &[usize]) -> Result<Factor, Singular> {
        let m = p.m;
        let n = p.n;
        let mut logical_row = vec![None; m];
        let mut covering_pos = vec![usize::MAX; m];
        let mut kernel_pos = Vec::new();
        let mut kernel_var = Vec::new();
        for (pos, &var) in head.iter().enumerate() {
            if var >= n {
                let r = var - n;
                logical_row[pos] = Some(r);
                covering_pos[r] = pos;
            } else {
                kernel_pos.push(pos);
                kernel_var.push(var);
            }
        }
        let kernel_rows: Vec<usize> = (0..m).filter(|&r| covering_pos[r] == usize::MAX).collect();
        let k = kernel_rows.len();
        debug_assert_eq!(k, kernel_pos.len());
        let mut row_in_kernel = vec![usize::MAX; m];
        for (i, &r) in kernel_rows.iter().enumerate() {
            row_in_kernel[r] = i;
        }
        let mut cols: Vec<Vec<(usize, f64)>> = Vec::with_capacity(k);
        for &var in &kernel_var {
            cols.push(
                p.column(var)
                    .filter_map(|(r, a)| {
                        let i = row_in_kernel[r];
                        (i != usize::MAX && a != 0.0).then_some((i, a))
                    })
                    .collect(),
            );
        }
        let lu = SparseLu::new(k, &cols).map_err(|(bad_cols, free)| Singular {
            bad_positions: bad_cols.iter().map(|&c| kernel_pos[c]).collect(),
            free_rows: free.iter().map(|&i| kernel_rows[i]).collect(),
        })?;
        Ok(Factor {
            m,
            logical_row,
            covering_pos,
            kernel_rows,
            kernel_pos,
            kernel_var,
            row_in_kernel,
            lu,
            etas: Vec::new(),
            eta_nnz: 0,
        })
    }

    pub fn num_etas(&self) -> usize {
        self.etas.len()
    }

    pub fn eta_nnz(&self) -> usize {
        self.eta_nnz
    }

    /// Solves `B alpha = a` for a row-space vector `a`; result is in position space.
    pub fn ftran(&self, p: &LpProblem, a: &[f64]) -> Vec<f64> {
        let m = self.m;
        let k = self.kernel_rows.len();
        let mut alpha = vec![0.0; m];
        if k > 0 {
            let mut z: Vec<f64> = self.kernel_rows.iter().map(|&r| a[r]).collect();
            self.lu.solve(&mut z);
            for (c, &pos) in self.kernel_pos.iter().enumerate() {
                alpha[pos] = z[c];
            }
        }
        // Covered rows: -alpha_p + sum_j A[r,j] alpha_j = a_r.
        let mut acc = vec![0.0; m];
        for (c, &var) in self.kernel_var.iter().enumerate() {
            let v = alpha[self.kernel_pos[c]];
            if v == 0.0 {
                continue;
            }
            for (r, coef) in p.column(var) {
                if self.covering_pos[r] != usize::MAX {
                    acc[r] += coef * v;
                }
            }
        }
        for (pos, lr) in self.logical_row.iter().enumerate() {
            if let Some(r) = *lr {
                alpha[pos] = acc[r] - a[r];
            }
        }
        for eta in &self.etas {
            let vp = alpha[eta.pos];
            if vp == 0.0 {
                continue;
            }
            let np = vp / eta.pivot;
            for &(i, e) in &eta.entries {
                alpha[i] -= e * np;
            }
            alpha[eta.pos] = np;
        }
        alpha
    }

    /// Solves `y' B = c'` for a position-space cost vector; result is in row space.
    pub fn btran(&self, p: &LpProblem, c: &[f64]) -> Vec<f64> {
        let m = self.m;
        let mut c = c.to_vec();
        for eta in self.etas.iter().rev() {
            let mut s = c[eta.pos];
            for &(i, e) in &eta.entries {
                s -= e * c[i];
            }
            c[eta.pos] = s / eta.pivot;
        }
        let mut y = vec![0.0; m];
        for (pos, lr) in self.logical_row.iter().enumerate() {
            if let Some(r) = *lr {
                y[r] = -c[pos];
            }
        }
        let k = self.kernel_rows.len();
        if k > 0 {
            let mut rhs = vec![0.0; k];
            for (col, &var) in self.kernel_var.iter().enumerate() {
                let mut s = c[self.kernel_pos[col]];
                for (r, coef) in p.column(var) {
                    if self.row_in_kernel[r] == usize::MAX {
                        s -= coef * y[r];
                    }
                }
                rhs[col] = s;
            }
            self.lu.solve_transpose(&mut rhs);
            for i in 0..k {
                y[self.kernel_rows[i]] = rhs[i];
            }
        }
        y
    }

    /// Records a basis change at `pos` with entering column `alpha` (position space).
    pub fn update(&mut self, pos: usize, alpha: &[f64]) {
        let entries: Vec<(usize, f64)> = alpha
            .iter()
            .enumerate()
            .filter(|&(i, &v)| i != pos && v.abs() > 1e-14)
            .map(|(i, &v)| (i, v))
            .collect();
        self.eta_nnz += entries.len() + 1;
        self.etas.push(Eta {
            pos,
            pivot: alpha[pos],
            entries,
        });
    }
}

/// One elimination step: pivot position, the row multipliers it applied and
/// the pivot row of `U`.
#[derive(Debug)]
struct Step {
    row: usize,
    col: usize,
    pivot: f64,
    lower: Vec<(usize, f64)>,
    /// Off-pivot entries of the pivot row, all in later-pivoted columns.
    upper: Vec<(usize, f64)>,
}

/// Sparse LU of a square matrix, `M K = U` with `M` the product of the row
/// eliminations. Pivots are picked by smallest column count, then smallest
/// row count among entries passing a relative threshold.
#[derive(Debug)]
struct SparseLu {
    k: usize,
    steps: Vec<Step>,
}

const THRESHOLD: f64 = 0.1;

impl SparseLu {
    /// `cols[c]` lists `(row, value)`. On failure returns the columns that
    /// could not be pivoted and the rows left without a pivot.
    fn new(k: usize, cols: &[Vec<(usize, f64)>]) -> Result<SparseLu, (Vec<usize>, Vec<usize>)> {
        let mut rows: Vec<Vec<(usize, f64)>> = vec![Vec::new(); k];
        let mut col_rows: Vec<Vec<usize>> = vec![Vec::new(); k];
        let mut col_scale = vec![0.0f64; k];
        for (c, col) in cols.iter().enumerate() {
            for &(r, a) in col {
                rows[r].push((c, a));
                col_rows[c].push(r);
                col_scale[c] = col_scale[c].max(a.abs());
            }
        }
        let mut row_done = vec![false; k];
        let mut col_done = vec![false; k];
        let mut bad_cols = Vec::new();
        let mut steps = Vec::with_capacity(k);
        let mut work = vec![0.0f64; k];
        let mut mark = vec![false; k];
        // Bucket columns by their (possibly stale) count.
        let mut remaining: Vec<usize> = (0..k).collect();
        while !remaining.is_empty() {
            let (ix, &c) = remaining
                .iter()
                .enumerate()
                .min_by_key(|(_, &c)| col_rows[c].len())
                .unwrap();
            remaining.swap_remove(ix);
            col_done[c] = true;
            // Clean the column pattern and read its live values.
            let mut live: Vec<(usize, f64)> = Vec::new();
            for &r in &col_rows[c] {
                if row_done[r] {
                    continue;
                }
                if let Some(&(_, v)) = rows[r].iter().find(|e| e.0 == c) {
                    if v != 0.0 {
                        live.push((r, v));
                    }
                }
            }
            live.sort_unstable_by_key(|e| e.0);
            live.dedup_by_key(|e| e.0);
            let cmax = live.iter().map(|e| e.1.abs()).fold(0.0, f64::max);
            if cmax <= PIVOT_ABS_MIN.max(1e-13 * col_scale[c]) {
                bad_cols.push(c);
                for &(r, _) in &live {
                    rows[r].retain(|e| e.0 != c);
                }
                continue;
            }
            let &(prow, piv) = live
                .iter()
                .filter(|e| e.1.abs() >= THRESHOLD * cmax)
                .min_by_key(|e| rows[e.0].len())
                .unwrap();
            row_done[prow] = true;
            let upper: Vec<(usize, f64)> = rows[prow].iter().copied().filter(|e| e.0 != c).collect();
            let mut lower = Vec::new();
            for &(r, v) in &live {
                if r == prow {
                    continue;
                }
                let l = v / piv;
                lower.push((r, l));
                let row = &mut rows[r];
                for &(j, a) in row.iter() {
                    work[j] = a;
                    mark[j] = true;
                }
                row.retain(|e| e.0 != c);
                mark[c] = false;
                for &(j, u) in &upper {
                    if mark[j] {
                        work[j] -= l * u;
                    } else {
                        row.push((j, -l * u));
                        col_rows[j].push(r);
                    }
                }
                for e in row.iter_mut() {
                    if mark[e.0] {
                        e.1 = work[e.0];
                        mark[e.0] = false;
                    }
                }
                row.retain(|e| e.1 != 0.0);
            }
            rows[prow].clear();
            steps.push(Step {
                row: prow,
                col: c,
                pivot: piv,
                lower,
                upper,
            });
        }
        if bad_cols.is_empty() {
            Ok(SparseLu { k, steps })
        } else {
            let free_rows = (0..k).filter(|&r| !row_done[r]).collect();
            Err((bad_cols, free_rows))
        }
    }

    /// Solves `K z = b`; `b` is indexed by row, the result by column.
    fn solve(&self, b: &mut [f64]) {
        for s in &self.steps {
            let v = b[s.row];
            if v != 0.0 {
                for &(i, l) in &s.lower {
                    b[i] -= l * v;
                }
            }
        }
        let mut z = vec![0.0; self.k];
        for s in self.steps.iter().rev() {
            let mut acc = b[s.row];
            for &(j, u) in &s.upper {
                acc -= u * z[j];
            }
            z[s.col] = acc / s.pivot;
        }
        b.copy_from_slice(&z);
    }

    /// Solves `K' y = c`; `c` is indexed by column, the result by row.
    fn solve_transpose(&self, c: &mut [f64]) {
        let mut w = vec![0.0; self.k];
        for s in &self.steps {
            let v = c[s.col] / s.pivot;
            w[s.row] = v;
            if v != 0.0 {
                for &(j, u) in &s.upper {
                    c[j] -= u * v;
                }
            }
        }
        for s in self.steps.iter().rev() {
            let mut acc = w[s.row];
            for &(i, l) in &s.lower {
                acc -= l * w[i];
            }
            w[s.row] = acc;
        }
        c.copy_from_slice(&w);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn matvec(a: &[f64], k: usize, x: &[f64]) -> Vec<f64> {
        (0..k).map(|i| (0..k).map(|j| a[i * k + j] * x[j]).sum()).collect()
    }

    fn columns(a: &[f64], k: usize) -> Vec<Vec<(usize, f64)>> {
        (0..k)
            .map(|c| (0..k).filter(|&r| a[r * k + c] != 0.0).map(|r| (r, a[r * k + c])).collect())
            .collect()
    }

    #[test]
    fn sparse_lu_solves_both_ways() {
        let k = 4;
        let a = vec![
            0.0, 2.0, 1.0, 0.0, //
            3.0, 0.0, 0.0, 1.0, //
            1.0, 1.0, 4.0, 0.0, //
            0.0, 0.0, 2.0, 5.0,
        ];
        let lu = SparseLu::new(k, &columns(&a, k)).unwrap();
        let b = vec![1.0, -2.0, 3.0, 0.5];
        let mut z = b.clone();
        lu.solve(&mut z);
        let back = matvec(&a, k, &z);
        for i in 0..k {
            assert!((back[i] - b[i]).abs() < 1e-12);
        }
        let mut x = b.clone();
        lu.solve_transpose(&mut x);
        let at: Vec<f64> = (0..k * k).map(|idx| a[(idx % k) * k + idx / k]).collect();
        let back = matvec(&at, k, &x);
        for i in 0..k {
            assert!((back[i] - b[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn random_sparse_systems_round_trip() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for _ in 0..50 {
            let k = rng.gen_range(1..30);
            let mut a = vec![0.0; k * k];
            for i in 0..k {
                a[i * k + i] = rng.gen_range(1.0..3.0);
                for _ in 0..2 {
                    let j = rng.gen_range(0..k);
                    a[i * k + j] += rng.gen_range(-2.0..2.0);
                }
            }
            let Ok(lu) = SparseLu::new(k, &columns(&a, k)) else { continue };
            let b: Vec<f64> = (0..k).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let mut z = b.clone();
            lu.solve(&mut z);
            let back = matvec(&a, k, &z);
            for i in 0..k {
                assert!((back[i] - b[i]).abs() < 1e-8, "{back:?} {b:?}");
            }
        }
    }

    #[test]
    fn singular_kernel_reports_columns() {
        let k = 3;
        let a = vec![1.0, 2.0, 3.0, 2.0, 4.0, 6.0, 0.0, 0.0, 1.0];
        let (bad, free) = SparseLu::new(k, &columns(&a, k)).unwrap_err();
        assert_eq!(bad.len(), 1);
        assert_eq!(free.len(), 1);
    }
}
