//! Linear algebra over expressions: elimination with zero-test pivoting.

use nalgebra::DMatrix;
use serde::Serialize;

use super::expr::Expr;
use super::zero::{is_zero, ProbePoint, ZeroTest};

/// Three-valued truth.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Tristate {
    True,
    False,
    Unknown,
}

/// Dense matrix of expressions, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct SymMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Expr>,
}

/// Reduced row echelon form together with its bookkeeping.
#[derive(Clone, Debug)]
pub struct Echelon {
    pub matrix: SymMatrix,
    /// Pivot column of each nonzero row.
    pub pivots: Vec<usize>,
    /// Set when some candidate pivot could not be decided by the zero test.
    pub indeterminate: bool,
}

impl Echelon {
    pub fn rank(&self) -> usize {
        self.pivots.len()
    }

    pub fn free_columns(&self, cols: usize) -> Vec<usize> {
        (0..cols).filter(|c| !self.pivots.contains(c)).collect()
    }

    /// Basis of the kernel, one vector per free column.
    pub fn nullspace(&self, cols: usize) -> Vec<Vec<Expr>> {
        self.free_columns(cols)
            .into_iter()
            .map(|f| {
                let mut v = vec![Expr::zero(); cols];
                v[f] = Expr::one();
                for (r, &p) in self.pivots.iter().enumerate() {
                    v[p] = -self.matrix.get(r, f);
                }
                v
            })
            .collect()
    }
}

/// Solution set `particular + span(homogeneous)` of a linear system.
#[derive(Clone, Debug)]
pub struct LinearSolution {
    pub particular: Vec<Expr>,
    pub free: Vec<usize>,
    pub homogeneous: Vec<Vec<Expr>>,
    pub indeterminate: bool,
}

fn pivot_cost(e: &Expr) -> usize {
    if e.is_constant() {
        0
    } else if e.is_monomial() {
        1
    } else {
        1 + e.num_terms()
    }
}

impl SymMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        SymMatrix { rows, cols, data: vec![Expr::zero(); rows * cols] }
    }

    pub fn from_rows(rows: Vec<Vec<Expr>>) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, |x| x.len());
        assert!(rows.iter().all(|x| x.len() == c), "ragged rows");
        SymMatrix { rows: r, cols: c, data: rows.into_iter().flatten().collect() }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, r: usize, c: usize) -> &Expr {
        &self.data[r * self.cols + c]
    }

    pub fn set(&mut self, r: usize, c: usize, v: Expr) {
        self.data[r * self.cols + c] = v;
    }

    pub fn row(&self, r: usize) -> &[Expr] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn transpose(&self) -> SymMatrix {
        let mut t = SymMatrix::zeros(self.cols, self.rows);
        for r in 0..self.rows {
            for c in 0..self.cols {
                t.set(c, r, self.get(r, c).clone());
            }
        }
        t
    }

    fn swap_rows(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for c in 0..self.cols {
            self.data.swap(a * self.cols + c, b * self.cols + c);
        }
    }

    /// Reduced row echelon form over the columns `0..limit`.
    pub fn echelon_limited(&self, limit: usize) -> Echelon {
        let mut m = self.clone();
        let mut pivots = Vec::new();
        let mut indeterminate = false;
        let mut row = 0;
        for col in 0..limit.min(self.cols) {
            if row == m.rows {
                break;
            }
            let mut best: Option<(usize, usize)> = None;
            for r in row..m.rows {
                let e = m.get(r, col);
                if e.is_zero_canonical() {
                    continue;
                }
                match is_zero(e) {
                    ZeroTest::Zero => m.set(r, col, Expr::zero()),
                    ZeroTest::Unknown => indeterminate = true,
                    ZeroTest::NonZero => {
                        let cost = pivot_cost(e);
                        if best.map_or(true, |(_, c)| cost < c) {
                            best = Some((r, cost));
                        }
                    }
                }
            }
            let Some((p, _)) = best else { continue };
            m.swap_rows(row, p);
            let inv = m.get(row, col).recip().expect("pivot is nonzero");
            for c in 0..m.cols {
                let v = m.get(row, c) * &inv;
                m.set(row, c, v);
            }
            m.set(row, col, Expr::one());
            for r in 0..m.rows {
                if r == row {
                    continue;
                }
                let factor = m.get(r, col).clone();
                if factor.is_zero_canonical() {
                    continue;
                }
                for c in 0..m.cols {
                    let pv = m.get(row, c);
                    if pv.is_zero_canonical() {
                        continue;
                    }
                    let v = m.get(r, c) - &(&factor * pv);
                    m.set(r, c, v);
                }
                m.set(r, col, Expr::zero());
            }
            pivots.push(col);
            row += 1;
        }
        Echelon { matrix: m, pivots, indeterminate }
    }

    pub fn echelon(&self) -> Echelon {
        self.echelon_limited(self.cols)
    }

    pub fn rank(&self) -> usize {
        self.echelon().rank()
    }

    pub fn nullspace(&self) -> Vec<Vec<Expr>> {
        self.echelon().nullspace(self.cols)
    }

    /// Solves `self * x = rhs`; `None` if the system is inconsistent.
    pub fn solve(&self, rhs: &[Expr]) -> Option<LinearSolution> {
        assert_eq!(rhs.len(), self.rows, "right-hand side length");
        let mut aug = SymMatrix::zeros(self.rows, self.cols + 1);
        for r in 0..self.rows {
            for c in 0..self.cols {
                aug.set(r, c, self.get(r, c).clone());
            }
            aug.set(r, self.cols, rhs[r].clone());
        }
        let ech = aug.echelon_limited(self.cols);
        for r in ech.rank()..self.rows {
            let e = ech.matrix.get(r, self.cols);
            if is_zero(e) == ZeroTest::NonZero {
                return None;
            }
        }
        let mut particular = vec![Expr::zero(); self.cols];
        for (r, &p) in ech.pivots.iter().enumerate() {
            particular[p] = ech.matrix.get(r, self.cols).clone();
        }
        let free = ech.free_columns(self.cols);
        let homogeneous = free
            .iter()
            .map(|&f| {
                let mut v = vec![Expr::zero(); self.cols];
                v[f] = Expr::one();
                for (r, &p) in ech.pivots.iter().enumerate() {
                    v[p] = -ech.matrix.get(r, f);
                }
                v
            })
            .collect();
        Some(LinearSolution { particular, free, homogeneous, indeterminate: ech.indeterminate })
    }

    /// Product of the pivots of an elimination; zero when singular.
    pub fn determinant(&self) -> Expr {
        assert_eq!(self.rows, self.cols, "determinant of a non-square matrix");
        let mut m = self.clone();
        let mut det = Expr::one();
        for col in 0..m.cols {
            let mut best: Option<(usize, usize)> = None;
            for r in col..m.rows {
                let e = m.get(r, col);
                if !e.is_zero_canonical() && is_zero(e) == ZeroTest::NonZero {
                    let cost = pivot_cost(e);
                    if best.map_or(true, |(_, c)| cost < c) {
                        best = Some((r, cost));
                    }
                }
            }
            let Some((p, _)) = best else { return Expr::zero() };
            if p != col {
                m.swap_rows(col, p);
                det = -det;
            }
            let pivot = m.get(col, col).clone();
            det = &det * &pivot;
            let inv = pivot.recip().expect("pivot is nonzero");
            for r in col + 1..m.rows {
                let factor = m.get(r, col) * &inv;
                if factor.is_zero_canonical() {
                    continue;
                }
                for c in col..m.cols {
                    let v = m.get(r, c) - &(&factor * m.get(col, c));
                    m.set(r, c, v);
                }
            }
        }
        det
    }

    /// Numeric matrix at a probe point; `None` on a domain error.
    pub fn evaluate(&self, point: &ProbePoint) -> Option<DMatrix<f64>> {
        let mut vals = Vec::with_capacity(self.data.len());
        for e in &self.data {
            vals.push(point.eval(e).ok()?);
        }
        Some(DMatrix::from_row_slice(self.rows, self.cols, &vals))
    }

    /// Numeric rank at a probe point by singular values.
    pub fn numeric_rank(&self, point: &ProbePoint) -> Option<usize> {
        if self.rows == 0 || self.cols == 0 {
            return Some(0);
        }
        let m = self.evaluate(point)?;
        Some(numeric_rank(&m))
    }
}

/// Rank with relative tolerance `1e-9` on the singular values.
pub fn numeric_rank(m: &DMatrix<f64>) -> usize {
    if m.nrows() == 0 || m.ncols() == 0 {
        return 0;
    }
    let sv = m.clone().svd(false, false).singular_values;
    let max = sv.iter().cloned().fold(0.0, f64::max);
    if max == 0.0 {
        return 0;
    }
    sv.iter().filter(|s| **s > 1e-9 * max).count()
}
