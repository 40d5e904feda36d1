//! Conic programs of the form
//!
//! ```text
//! minimize   ½ xᵀ P x + qᵀ x
//! subject to A x ∈ C = C_1 × C_2 × ...
//! ```
//!
//! where each `C_i` is the positive semidefinite cone over a scaled
//! half-vectorization or a box `[lower, upper]` (equal bounds give equality
//! rows). Problems are handed to the Clarabel interior-point solver in
//! double precision.

use clarabel::algebra::CscMatrix;
use clarabel::solver::{
    DefaultSettingsBuilder, DefaultSolver, IPSolver, NonnegativeConeT, PSDTriangleConeT, SolverStatus, SupportedConeT,
    ZeroConeT,
};

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::scalar::Real;

/// Length of the half-vectorization of a `dim x dim` symmetric matrix.
pub fn svec_len(dim: usize) -> usize {
    dim * (dim + 1) / 2
}

/// Upper triangle, column by column, off-diagonals scaled by `√2` so that
/// `⟨svec A, svec B⟩ = tr(A B)`.
pub fn svec<T: Real>(a: &Matrix<T>) -> Vec<T> {
    let n = a.rows();
    let s2 = T::SQRT_2();
    let mut out = Vec::with_capacity(svec_len(n));
    for j in 0..n {
        for i in 0..j {
            out.push(a[(i, j)] * s2);
        }
        out.push(a[(j, j)]);
    }
    out
}

/// Inverse of [`svec`].
pub fn smat<T: Real>(v: &[T], dim: usize) -> Matrix<T> {
    let s2 = T::SQRT_2();
    let mut a = Matrix::zeros(dim, dim);
    for j in 0..dim {
        for i in 0..j {
            let x = v[svec_index(i, j, dim)] / s2;
            a[(i, j)] = x;
            a[(j, i)] = x;
        }
        a[(j, j)] = v[svec_index(j, j, dim)];
    }
    a
}

/// Index of `(i, j)` inside [`svec`].
pub fn svec_index(i: usize, j: usize, _dim: usize) -> usize {
    let (i, j) = if i <= j { (i, j) } else { (j, i) };
    j * (j + 1) / 2 + i
}

#[derive(Clone, Debug, PartialEq)]
pub enum ConeBlock<T> {
    /// `svec_len(dim)` rows constrained to the PSD cone.
    Psd { dim: usize },
    /// One row per bound pair; infinite bounds are dropped.
    Box { lower: Vec<T>, upper: Vec<T> },
}

impl<T: Real> ConeBlock<T> {
    fn rows(&self) -> usize {
        match self {
            ConeBlock::Psd { dim } => svec_len(*dim),
            ConeBlock::Box { lower, .. } => lower.len(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConicProblem<T> {
    pub p: Matrix<T>,
    pub q: Vec<T>,
    pub a: Matrix<T>,
    pub cones: Vec<ConeBlock<T>>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SolverSettings<T> {
    /// Duality gap and feasibility tolerance.
    pub tolerance: T,
    pub max_iterations: usize,
}

impl<T: Real> SolverSettings<T> {
    pub fn with_tolerance(tol: T) -> Self {
        Self {
            tolerance: tol,
            max_iterations: 200,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SolveStatus {
    Solved,
    /// Stopped early or at reduced accuracy; the iterate is still returned.
    Inaccurate,
    Infeasible,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConicSolution<T> {
    pub x: Vec<T>,
    /// `A x` per row; on PSD rows this is the solver's slack, which lies in
    /// the cone.
    pub z: Vec<T>,
    pub status: SolveStatus,
    pub iterations: usize,
    pub objective: T,
}

/// Dense to compressed-column, optionally keeping only the upper triangle.
fn to_csc(rows: usize, cols: usize, get: impl Fn(usize, usize) -> f64, upper_only: bool) -> CscMatrix<f64> {
    let mut colptr = Vec::with_capacity(cols + 1);
    let mut rowval = Vec::new();
    let mut nzval = Vec::new();
    colptr.push(0);
    for j in 0..cols {
        let end = if upper_only { (j + 1).min(rows) } else { rows };
        for i in 0..end {
            let v = get(i, j);
            if v != 0.0 {
                rowval.push(i);
                nzval.push(v);
            }
        }
        colptr.push(rowval.len());
    }
    CscMatrix::new(rows, cols, colptr, rowval, nzval)
}

enum RowKind {
    Zero,
    Nonneg,
}

pub fn solve_conic<T: Real>(problem: &ConicProblem<T>, settings: &SolverSettings<T>) -> Result<ConicSolution<T>> {
    let n = problem.q.len();
    let m = problem.a.rows();
    if problem.p.shape() != (n, n) || problem.a.cols() != n {
        return Err(Error::invalid("conic problem dimensions disagree"));
    }
    if problem.cones.iter().map(ConeBlock::rows).sum::<usize>() != m {
        return Err(Error::invalid("cone rows do not cover the constraint matrix"));
    }
    if !(settings.tolerance > T::zero()) || settings.max_iterations == 0 {
        return Err(Error::invalid("solver tolerance and iteration cap must be positive"));
    }

    // Clarabel form: A' x + s = b', s ∈ K. Rows are regrouped as
    // [zero | nonnegative | psd blocks]; `sign` flips lower-bound rows.
    let mut scalar_rows: Vec<(RowKind, usize, f64, f64)> = Vec::new();
    let mut psd_blocks: Vec<(usize, usize)> = Vec::new();
    let mut off = 0;
    for cone in &problem.cones {
        match cone {
            ConeBlock::Psd { dim } => psd_blocks.push((off, *dim)),
            ConeBlock::Box { lower, upper } => {
                for (k, (lo, hi)) in lower.iter().zip(upper).enumerate() {
                    let (lo, hi) = (lo.as_f64(), hi.as_f64());
                    if lo > hi {
                        return Err(Error::invalid(format!("row {} has lower bound above upper", off + k)));
                    }
                    if lo == hi {
                        scalar_rows.push((RowKind::Zero, off + k, 1.0, hi));
                        continue;
                    }
                    if hi.is_finite() {
                        scalar_rows.push((RowKind::Nonneg, off + k, 1.0, hi));
                    }
                    if lo.is_finite() {
                        scalar_rows.push((RowKind::Nonneg, off + k, -1.0, -lo));
                    }
                }
            }
        }
        off += cone.rows();
    }
    scalar_rows.sort_by_key(|r| matches!(r.0, RowKind::Nonneg));
    let n_zero = scalar_rows.iter().filter(|r| matches!(r.0, RowKind::Zero)).count();
    let n_nonneg = scalar_rows.len() - n_zero;

    // (source row, sign) for every Clarabel row.
    let mut map: Vec<(usize, f64)> = scalar_rows.iter().map(|r| (r.1, r.2)).collect();
    let mut b: Vec<f64> = scalar_rows.iter().map(|r| r.3).collect();
    let mut cones: Vec<SupportedConeT<f64>> = Vec::new();
    if n_zero > 0 {
        cones.push(ZeroConeT(n_zero));
    }
    if n_nonneg > 0 {
        cones.push(NonnegativeConeT(n_nonneg));
    }
    let psd_start = map.len();
    for &(start, dim) in &psd_blocks {
        for r in start..start + svec_len(dim) {
            map.push((r, -1.0));
            b.push(0.0);
        }
        cones.push(PSDTriangleConeT(dim));
    }

    let a = to_csc(map.len(), n, |i, j| map[i].1 * problem.a[(map[i].0, j)].as_f64(), false);
    let p = to_csc(n, n, |i, j| problem.p[(i, j)].as_f64(), true);
    let q: Vec<f64> = problem.q.iter().map(|v| v.as_f64()).collect();
    let tol = settings.tolerance.as_f64().min(1e-8);
    let clarabel_settings = DefaultSettingsBuilder::default()
        .verbose(false)
        .max_iter(settings.max_iterations as u32)
        .tol_gap_abs(tol)
        .tol_gap_rel(tol)
        .tol_feas(tol)
        .build()
        .map_err(|e| Error::invalid(format!("solver settings: {e:?}")))?;
    let mut solver = DefaultSolver::new(&p, &q, &a, &b, &cones, clarabel_settings)
        .map_err(|e| Error::invalid(format!("conic problem rejected: {e:?}")))?;
    solver.solve();
    let sol = &solver.solution;
    let status = match sol.status {
        SolverStatus::Solved => SolveStatus::Solved,
        SolverStatus::PrimalInfeasible | SolverStatus::DualInfeasible => SolveStatus::Infeasible,
        _ => SolveStatus::Inaccurate,
    };
    let x: Vec<T> = sol.x.iter().map(|v| T::lit(*v)).collect();
    let mut z = problem.a.matvec(&x);
    for (k, &(row, _)) in map.iter().enumerate().skip(psd_start) {
        z[row] = T::lit(sol.s[k]);
    }
    Ok(ConicSolution {
        x,
        z,
        status,
        iterations: sol.iterations as usize,
        objective: T::lit(sol.obj_val),
    })
}
