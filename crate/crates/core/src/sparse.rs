//! Compressed-row sparse matrices and the trace-system solver.
//!
//! The direct path factorizes with faer's sparse LU (COLAMD column ordering,
//! partial row pivoting). Systems above [`SolverOptions::direct_limit`]
//! unknowns go through restarted GMRES preconditioned by ILU(0).

use std::fmt::Write as _;

use faer::dyn_stack::{MemBuffer, MemStack};
use faer::sparse::linalg::lu::{factorize_symbolic_lu, LuRef, NumericLu};
use faer::sparse::{SparseColMatRef, SymbolicSparseColMatRef};
use faer::{Conj, MatMut, Par};

use crate::error::{HdgError, Result};

/// Coordinate-format accumulator. Duplicate entries are summed in insertion
/// order when finalized.
#[derive(Debug, Clone, Default)]
pub struct CooBuilder {
    n: usize,
    entries: Vec<(usize, usize, f64)>,
}

impl CooBuilder {
    pub fn new(n: usize) -> Self {
        Self {
            n,
            entries: Vec::new(),
        }
    }

    pub fn with_capacity(n: usize, cap: usize) -> Self {
        Self {
            n,
            entries: Vec::with_capacity(cap),
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn push(&mut self, row: usize, col: usize, value: f64) {
        debug_assert!(row < self.n && col < self.n);
        self.entries.push((row, col, value));
    }

    pub fn finalize(mut self) -> SparseMatrix {
        // Stable sort keeps duplicate summation order deterministic.
        self.entries.sort_by_key(|&(r, c, _)| (r, c));
        let mut row_ptr = vec![0usize; self.n + 1];
        let mut col_idx = Vec::with_capacity(self.entries.len());
        let mut values: Vec<f64> = Vec::with_capacity(self.entries.len());
        let mut last: Option<(usize, usize)> = None;
        for (r, c, v) in self.entries {
            if last == Some((r, c)) {
                *values.last_mut().expect("entry exists") += v;
            } else {
                col_idx.push(c);
                values.push(v);
                row_ptr[r + 1] += 1;
                last = Some((r, c));
            }
        }
        for i in 0..self.n {
            row_ptr[i + 1] += row_ptr[i];
        }
        SparseMatrix {
            n: self.n,
            row_ptr,
            col_idx,
            values,
        }
    }
}

/// Square matrix in compressed sparse row form with sorted, unique columns.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseMatrix {
    n: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    /// Relative residual target `||Ax - b|| <= tol ||b||`.
    pub tol: f64,
    /// Largest dimension factorized directly.
    pub direct_limit: usize,
    pub gmres_restart: usize,
    pub max_iterations: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            tol: 1e-12,
            direct_limit: 4_000_000,
            gmres_restart: 60,
            max_iterations: 20_000,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveMethod {
    DirectLu,
    Gmres { iterations: usize },
}

#[derive(Debug, Clone)]
pub struct SolveOutcome {
    pub x: Vec<f64>,
    pub relative_residual: f64,
    pub method: SolveMethod,
}

impl SparseMatrix {
    pub fn identity(n: usize) -> Self {
        let mut b = CooBuilder::new(n);
        for i in 0..n {
            b.push(i, i, 1.0);
        }
        b.finalize()
    }

    pub fn from_dense(rows: &[Vec<f64>]) -> Self {
        let n = rows.len();
        let mut b = CooBuilder::new(n);
        for (i, row) in rows.iter().enumerate() {
            for (j, &v) in row.iter().enumerate() {
                if v != 0.0 {
                    b.push(i, j, v);
                }
            }
        }
        b.finalize()
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row_ptr(&self) -> &[usize] {
        &self.row_ptr
    }

    pub fn col_idx(&self) -> &[usize] {
        &self.col_idx
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let (a, b) = (self.row_ptr[i], self.row_ptr[i + 1]);
        self.col_idx[a..b].iter().copied().zip(self.values[a..b].iter().copied())
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (a, b) = (self.row_ptr[i], self.row_ptr[i + 1]);
        match self.col_idx[a..b].binary_search(&j) {
            Ok(p) => self.values[a + p],
            Err(_) => 0.0,
        }
    }

    pub fn max_row_nnz(&self) -> usize {
        self.row_ptr.windows(2).map(|w| w[1] - w[0]).max().unwrap_or(0)
    }

    /// `max |i - j|` over stored entries.
    pub fn bandwidth(&self) -> usize {
        (0..self.n)
            .flat_map(|i| self.row(i).map(move |(j, _)| i.abs_diff(j)))
            .max()
            .unwrap_or(0)
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let mut d = vec![vec![0.0; self.n]; self.n];
        for (i, row) in d.iter_mut().enumerate() {
            for (j, v) in self.row(i) {
                row[j] = v;
            }
        }
        d
    }

    pub fn scaled(&self, alpha: f64) -> Self {
        let mut m = self.clone();
        m.values.iter_mut().for_each(|v| *v *= alpha);
        m
    }

    pub fn matvec(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.n {
            return Err(HdgError::Dimension(format!(
                "matvec with {}x{} matrix and vector of length {}",
                self.n,
                self.n,
                x.len()
            )));
        }
        Ok((0..self.n).map(|i| self.row(i).map(|(j, v)| v * x[j]).sum()).collect())
    }

    /// `||Ax - b||_2`.
    pub fn residual_norm(&self, x: &[f64], b: &[f64]) -> Result<f64> {
        if b.len() != self.n {
            return Err(HdgError::Dimension(format!(
                "rhs length {} for dimension {}",
                b.len(),
                self.n
            )));
        }
        let ax = self.matvec(x)?;
        Ok(ax.iter().zip(b).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt())
    }

    pub fn solve(&self, b: &[f64], tol: f64) -> Result<Vec<f64>> {
        let opts = SolverOptions {
            tol,
            ..Default::default()
        };
        Ok(self.solve_with(b, &opts)?.x)
    }

    pub fn solve_with(&self, b: &[f64], opts: &SolverOptions) -> Result<SolveOutcome> {
        if b.len() != self.n {
            return Err(HdgError::Dimension(format!(
                "rhs length {} for dimension {}",
                b.len(),
                self.n
            )));
        }
        let b_norm = norm2(b);
        if self.n == 0 || b_norm == 0.0 {
            return Ok(SolveOutcome {
                x: vec![0.0; self.n],
                relative_residual: 0.0,
                method: SolveMethod::DirectLu,
            });
        }
        self.check_structure()?;
        let (x, method) = if self.n <= opts.direct_limit {
            (self.solve_direct(b)?, SolveMethod::DirectLu)
        } else {
            let (x, iterations) = self.solve_gmres(b, opts)?;
            (x, SolveMethod::Gmres { iterations })
        };
        let rel = self.residual_norm(&x, b)? / b_norm;
        if !rel.is_finite() || rel > opts.tol {
            return Err(HdgError::Solver(format!(
                "{method:?} reached relative residual {rel:.3e} > tolerance {:.1e}",
                opts.tol
            )));
        }
        Ok(SolveOutcome {
            x,
            relative_residual: rel,
            method,
        })
    }

    fn check_structure(&self) -> Result<()> {
        let mut col_seen = vec![false; self.n];
        for i in 0..self.n {
            if self.row_ptr[i] == self.row_ptr[i + 1] {
                return Err(HdgError::Solver(format!("structurally singular: row {i} is empty")));
            }
            for (j, _) in self.row(i) {
                col_seen[j] = true;
            }
        }
        if let Some(j) = col_seen.iter().position(|s| !s) {
            return Err(HdgError::Solver(format!("structurally singular: column {j} is empty")));
        }
        Ok(())
    }

    /// Column-compressed copy (pointers, row indices, values).
    fn to_csc(&self) -> (Vec<usize>, Vec<usize>, Vec<f64>) {
        let mut col_ptr = vec![0usize; self.n + 1];
        for &j in &self.col_idx {
            col_ptr[j + 1] += 1;
        }
        for j in 0..self.n {
            col_ptr[j + 1] += col_ptr[j];
        }
        let mut next = col_ptr.clone();
        let mut row_idx = vec![0usize; self.nnz()];
        let mut vals = vec![0.0; self.nnz()];
        for i in 0..self.n {
            for (j, v) in self.row(i) {
                let p = next[j];
                row_idx[p] = i;
                vals[p] = v;
                next[j] += 1;
            }
        }
        (col_ptr, row_idx, vals)
    }

    fn solve_direct(&self, b: &[f64]) -> Result<Vec<f64>> {
        let n = self.n;
        let (col_ptr, row_idx, vals) = self.to_csc();
        let symbolic = SymbolicSparseColMatRef::new_checked(n, n, &col_ptr, None, &row_idx);
        let mat = SparseColMatRef::new(symbolic, &vals);
        let sym = factorize_symbolic_lu(symbolic, Default::default())
            .map_err(|e| HdgError::Solver(format!("symbolic LU: {e:?}")))?;
        let mut numeric = NumericLu::<usize, f64>::new();
        let par = Par::Seq;
        let mut buf = MemBuffer::try_new(sym.factorize_numeric_lu_scratch::<f64>(par, Default::default()))
            .map_err(|e| HdgError::Solver(format!("LU workspace: {e:?}")))?;
        let lu: LuRef<'_, usize, f64> = sym
            .factorize_numeric_lu(&mut numeric, mat, par, MemStack::new(&mut buf), Default::default())
            .map_err(|e| HdgError::Solver(format!("numeric LU: {e:?}")))?;

        let mut x = b.to_vec();
        let mut solve_buf = MemBuffer::new(sym.solve_in_place_scratch::<f64>(1, par));
        lu.solve_in_place_with_conj(
            Conj::No,
            MatMut::from_column_major_slice_mut(&mut x, n, 1),
            par,
            MemStack::new(&mut solve_buf),
        );
        // Two rounds of iterative refinement against the stored matrix.
        for _ in 0..2 {
            let ax = self.matvec(&x)?;
            let mut r: Vec<f64> = b.iter().zip(&ax).map(|(b, a)| b - a).collect();
            if norm2(&r) <= 1e-15 * norm2(b) {
                break;
            }
            lu.solve_in_place_with_conj(
                Conj::No,
                MatMut::from_column_major_slice_mut(&mut r, n, 1),
                par,
                MemStack::new(&mut solve_buf),
            );
            x.iter_mut().zip(&r).for_each(|(x, d)| *x += d);
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(HdgError::Solver("LU produced non-finite values (singular pivot)".into()));
        }
        Ok(x)
    }

    fn solve_gmres(&self, b: &[f64], opts: &SolverOptions) -> Result<(Vec<f64>, usize)> {
        let ilu = Ilu0::new(self)?;
        let n = self.n;
        let m = opts.gmres_restart.max(1);
        let b_norm = norm2(b);
        let mut x = vec![0.0; n];
        let mut iterations = 0;
        while iterations < opts.max_iterations {
            let ax = self.matvec(&x)?;
            let r: Vec<f64> = b.iter().zip(&ax).map(|(b, a)| b - a).collect();
            let beta = norm2(&r);
            if beta <= opts.tol * b_norm {
                return Ok((x, iterations));
            }
            // Right-preconditioned Arnoldi with Givens rotations.
            let mut v: Vec<Vec<f64>> = vec![r.iter().map(|ri| ri / beta).collect()];
            let mut z: Vec<Vec<f64>> = Vec::with_capacity(m);
            let mut h = vec![vec![0.0; m]; m + 1];
            let (mut cs, mut sn) = (vec![0.0; m], vec![0.0; m]);
            let mut g = vec![0.0; m + 1];
            g[0] = beta;
            let mut steps = 0;
            for j in 0..m {
                let zj = ilu.apply(&v[j]);
                let mut w = self.matvec(&zj)?;
                z.push(zj);
                for i in 0..=j {
                    h[i][j] = dot(&w, &v[i]);
                    w.iter_mut().zip(&v[i]).for_each(|(w, vi)| *w -= h[i][j] * vi);
                }
                h[j + 1][j] = norm2(&w);
                for i in 0..j {
                    let t = cs[i] * h[i][j] + sn[i] * h[i + 1][j];
                    h[i + 1][j] = -sn[i] * h[i][j] + cs[i] * h[i + 1][j];
                    h[i][j] = t;
                }
                let denom = h[j][j].hypot(h[j + 1][j]);
                if denom == 0.0 {
                    return Err(HdgError::Solver(format!("GMRES breakdown at iteration {iterations}")));
                }
                cs[j] = h[j][j] / denom;
                sn[j] = h[j + 1][j] / denom;
                h[j][j] = denom;
                h[j + 1][j] = 0.0;
                g[j + 1] = -sn[j] * g[j];
                g[j] *= cs[j];
                steps = j + 1;
                iterations += 1;
                let happy = h_next_is_zero(&w);
                if g[j + 1].abs() <= opts.tol * b_norm * 0.5 || happy || iterations >= opts.max_iterations {
                    break;
                }
                let inv = 1.0 / norm2(&w);
                v.push(w.iter().map(|wi| wi * inv).collect());
            }
            let mut y = vec![0.0; steps];
            for i in (0..steps).rev() {
                let s: f64 = (i + 1..steps).map(|k| h[i][k] * y[k]).sum();
                y[i] = (g[i] - s) / h[i][i];
            }
            for (k, yk) in y.iter().enumerate() {
                x.iter_mut().zip(&z[k]).for_each(|(x, zk)| *x += yk * zk);
            }
        }
        let rel = self.residual_norm(&x, b)? / b_norm;
        if rel <= opts.tol {
            Ok((x, iterations))
        } else {
            Err(HdgError::Solver(format!(
                "GMRES did not converge in {iterations} iterations (relative residual {rel:.3e})"
            )))
        }
    }

    /// Coordinate text: a `# dim <n>` header, then one `row col value` line
    /// per stored entry (zero-based indices, 17 significant digits).
    pub fn write_coordinate(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "# dim {}", self.n);
        for i in 0..self.n {
            for (j, v) in self.row(i) {
                let _ = writeln!(out, "{i} {j} {v:.16e}");
            }
        }
        out
    }

    /// Parses the format written by [`SparseMatrix::write_coordinate`].
    /// Without a header the dimension is one past the largest index.
    pub fn read_coordinate(text: &str) -> Result<Self> {
        const MAX_DIM: usize = 1 << 26;
        let mut dim: Option<usize> = None;
        let mut entries = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            let lineno = lineno + 1;
            if line.is_empty() {
                continue;
            }
            if let Some(rest) = line.strip_prefix('#') {
                let mut it = rest.split_whitespace();
                if it.next() == Some("dim") {
                    let v = it.next().ok_or_else(|| HdgError::Parse {
                        line: lineno,
                        msg: "missing dimension".into(),
                    })?;
                    dim = Some(v.parse().map_err(|_| HdgError::Parse {
                        line: lineno,
                        msg: format!("bad dimension '{v}'"),
                    })?);
                }
                continue;
            }
            let fields: Vec<&str> = line.split_whitespace().collect();
            if fields.len() != 3 {
                return Err(HdgError::Parse {
                    line: lineno,
                    msg: format!("expected 'row col value', got {} fields", fields.len()),
                });
            }
            let parse_idx = |s: &str| {
                s.parse::<usize>().map_err(|_| HdgError::Parse {
                    line: lineno,
                    msg: format!("bad index '{s}'"),
                })
            };
            let r = parse_idx(fields[0])?;
            let c = parse_idx(fields[1])?;
            let v: f64 = fields[2].parse().map_err(|_| HdgError::Parse {
                line: lineno,
                msg: format!("bad value '{}'", fields[2]),
            })?;
            entries.push((r, c, v));
        }
        let needed = entries.iter().map(|&(r, c, _)| r.max(c) + 1).max().unwrap_or(0);
        let n = dim.unwrap_or(needed);
        if needed > n {
            return Err(HdgError::Parse {
                line: 0,
                msg: format!("index {} exceeds declared dimension {n}", needed - 1),
            });
        }
        if n > MAX_DIM {
            return Err(HdgError::Parse {
                line: 0,
                msg: format!("dimension {n} exceeds limit {MAX_DIM}"),
            });
        }
        let mut b = CooBuilder::with_capacity(n, entries.len());
        for (r, c, v) in entries {
            b.push(r, c, v);
        }
        Ok(b.finalize())
    }
}

fn h_next_is_zero(w: &[f64]) -> bool {
    norm2(w) == 0.0
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(a, b)| a * b).sum()
}

fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Zero-fill incomplete LU on the matrix pattern.
struct Ilu0 {
    n: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
    diag: Vec<usize>,
}

impl Ilu0 {
    fn new(a: &SparseMatrix) -> Result<Self> {
        let n = a.n;
        let row_ptr = a.row_ptr.clone();
        let col_idx = a.col_idx.clone();
        let mut values = a.values.clone();
        let mut diag = vec![usize::MAX; n];
        for i in 0..n {
            for p in row_ptr[i]..row_ptr[i + 1] {
                if col_idx[p] == i {
                    diag[i] = p;
                }
            }
            if diag[i] == usize::MAX {
                return Err(HdgError::Solver(format!("ILU(0): missing diagonal in row {i}")));
            }
        }
        let mut pos = vec![usize::MAX; n];
        for i in 0..n {
            for p in row_ptr[i]..row_ptr[i + 1] {
                pos[col_idx[p]] = p;
            }
            for p in row_ptr[i]..diag[i] {
                let k = col_idx[p];
                let pivot = values[diag[k]];
                if pivot == 0.0 {
                    return Err(HdgError::Solver(format!("ILU(0): zero pivot in row {k}")));
                }
                let lik = values[p] / pivot;
                values[p] = lik;
                for q in diag[k] + 1..row_ptr[k + 1] {
                    let t = pos[col_idx[q]];
                    if t != usize::MAX {
                        values[t] -= lik * values[q];
                    }
                }
            }
            for p in row_ptr[i]..row_ptr[i + 1] {
                pos[col_idx[p]] = usize::MAX;
            }
        }
        Ok(Self {
            n,
            row_ptr,
            col_idx,
            values,
            diag,
        })
    }

    fn apply(&self, r: &[f64]) -> Vec<f64> {
        let mut y = r.to_vec();
        for i in 0..self.n {
            let mut s = y[i];
            for p in self.row_ptr[i]..self.diag[i] {
                s -= self.values[p] * y[self.col_idx[p]];
            }
            y[i] = s;
        }
        for i in (0..self.n).rev() {
            let mut s = y[i];
            for p in self.diag[i] + 1..self.row_ptr[i + 1] {
                s -= self.values[p] * y[self.col_idx[p]];
            }
            y[i] = s / self.values[self.diag[i]];
        }
        y
    }
}
