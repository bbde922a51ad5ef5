//! Column-major copy of a [`LinearModel`] in the form the simplex works on:
//! `A x - r = 0` with bounds on both structurals `x` and row logicals `r`.

use crate::algebra::{LinearModel, Sense};

pub(crate) struct LpProblem {
    pub n: usize,
    pub m: usize,
    col_start: Vec<usize>,
    col_row: Vec<usize>,
    col_val: Vec<f64>,
    /// Structural costs, length `n`.
    pub cost: Vec<f64>,
    /// Bounds for structurals then logicals, length `n + m`.
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl LpProblem {
    pub fn from_model(model: &LinearModel) -> LpProblem {
        let n = model.num_vars();
        let m = model.num_constraints();
        let mut counts = vec![0usize; n + 1];
        for c in model.constraints() {
            for &(v, _) in &c.coeffs {
                counts[v.0 + 1] += 1;
            }
        }
        for j in 0..n {
            counts[j + 1] += counts[j];
        }
        let col_start = counts.clone();
        let nnz = col_start[n];
        let mut fill = counts;
        let mut col_row = vec![0; nnz];
        let mut col_val = vec![0.0; nnz];
        for (r, c) in model.constraints().iter().enumerate() {
            for &(v, a) in &c.coeffs {
                let k = fill[v.0];
                col_row[k] = r;
                col_val[k] = a;
                fill[v.0] += 1;
            }
        }
        let mut lower = Vec::with_capacity(n + m);
        let mut upper = Vec::with_capacity(n + m);
        for v in model.variables() {
            lower.push(v.lower);
            upper.push(v.upper);
        }
        for c in model.constraints() {
            let (l, u) = match c.sense {
                Sense::Ge => (c.rhs, f64::INFINITY),
                Sense::Le => (f64::NEG_INFINITY, c.rhs),
                Sense::Eq => (c.rhs, c.rhs),
            };
            lower.push(l);
            upper.push(u);
        }
        LpProblem {
            n,
            m,
            col_start,
            col_row,
            col_val,
            cost: model.objective_dense().to_vec(),
            lower,
            upper,
        }
    }

    /// Nonzeros of structural column `j` as `(row, value)`.
    pub fn column(&self, j: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let s = self.col_start[j];
        let e = self.col_start[j + 1];
        self.col_row[s..e].iter().copied().zip(self.col_val[s..e].iter().copied())
    }

    /// Dense row-space image of any column, logicals included.
    pub fn scatter_column(&self, j: usize, out: &mut [f64]) {
        out.iter_mut().for_each(|v| *v = 0.0);
        if j < self.n {
            for (r, a) in self.column(j) {
                out[r] = a;
            }
        } else {
            out[j - self.n] = -1.0;
        }
    }

    /// `y' A_j` for any column, logicals included.
    pub fn dot_column(&self, j: usize, y: &[f64]) -> f64 {
        if j < self.n {
            self.column(j).map(|(r, a)| a * y[r]).sum()
        } else {
            -y[j - self.n]
        }
    }
}
