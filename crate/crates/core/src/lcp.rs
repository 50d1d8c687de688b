//! Linear complementarity problems and Lemke's algorithm.
//!
//! Find `z >= 0` with `w = M z + b >= 0` and `zᵀ w = 0`.
//!
//! The tableau stores `I w - M z - d z0 = b` densely, row-major, with the
//! covering vector `d = 1`. Ties in the ratio test are broken by the
//! lexicographic rule on `[rhs | B⁻¹]`, which is available for free as the
//! `w` block of the tableau. After termination the basic solution is
//! recomputed from the original columns with an LU factorisation.

use std::fmt;
use std::io::Write;

use nalgebra::{DMatrix, DVector};

use crate::error::{ModelError, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct LcpProblem {
    pub m: DMatrix<f64>,
    pub b: DVector<f64>,
}

impl LcpProblem {
    pub fn new(m: DMatrix<f64>, b: DVector<f64>) -> Result<Self> {
        if m.nrows() != m.ncols() || m.nrows() != b.len() {
            return Err(ModelError::Dimension(format!(
                "M is {}x{}, b has {} entries",
                m.nrows(),
                m.ncols(),
                b.len()
            )));
        }
        if m.iter().chain(b.iter()).any(|v| !v.is_finite()) {
            return Err(ModelError::Domain("LCP data must be finite".into()));
        }
        Ok(Self { m, b })
    }

    pub fn dim(&self) -> usize {
        self.b.len()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LemkeOptions {
    /// Absolute tolerance on feasibility and complementarity residuals.
    pub tolerance: f64,
    pub max_pivots: usize,
    /// Entries of the entering column at or below this are not pivot candidates.
    pub pivot_tolerance: f64,
}

impl Default for LemkeOptions {
    fn default() -> Self {
        Self {
            tolerance: 1e-9,
            max_pivots: 100_000,
            pivot_tolerance: 1e-11,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LcpStatus {
    Solved,
    /// The entering column had no positive entry: no complementary solution
    /// was reached along this path.
    RayTermination,
    IterationLimit,
    /// Lemke terminated but the recovered point misses the tolerance.
    Inaccurate,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LcpResidual {
    /// `max(0, max_i -z_i)`
    pub z_violation: f64,
    pub z_worst: Option<usize>,
    /// `max(0, max_i -(Mz+b)_i)`
    pub w_violation: f64,
    pub w_worst: Option<usize>,
    /// `max_i |z_i (Mz+b)_i|`
    pub complementarity: f64,
}

impl LcpResidual {
    pub fn max(&self) -> f64 {
        self.z_violation.max(self.w_violation).max(self.complementarity)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LcpSolution {
    pub z: DVector<f64>,
    pub w: DVector<f64>,
    pub complementarity_residual: f64,
    pub residual: LcpResidual,
    pub pivot_count: usize,
    pub status: LcpStatus,
}

/// Feasibility and complementarity report for a candidate `z`.
pub fn verify_lcp(problem: &LcpProblem, z: &DVector<f64>) -> LcpResidual {
    let w = &problem.m * z + &problem.b;
    let worst_negative = |v: &DVector<f64>| {
        v.iter()
            .enumerate()
            .filter(|(_, x)| **x < 0.0)
            .fold((0.0, None), |(best, idx), (i, x)| if -x > best { (-x, Some(i)) } else { (best, idx) })
    };
    let (z_violation, z_worst) = worst_negative(z);
    let (w_violation, w_worst) = worst_negative(&w);
    let complementarity = z.iter().zip(w.iter()).map(|(a, b)| (a * b).abs()).fold(0.0, f64::max);
    LcpResidual {
        z_violation,
        z_worst,
        w_violation,
        w_worst,
        complementarity,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
enum Var {
    W(usize),
    Z(usize),
    Aux,
}

impl Var {
    fn complement(self) -> Self {
        match self {
            Var::W(i) => Var::Z(i),
            Var::Z(i) => Var::W(i),
            Var::Aux => Var::Aux,
        }
    }
}

impl fmt::Display for Var {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Var::W(i) => write!(f, "w{}", i + 1),
            Var::Z(i) => write!(f, "z{}", i + 1),
            Var::Aux => write!(f, "z0"),
        }
    }
}

struct Tableau {
    n: usize,
    width: usize,
    data: Vec<f64>,
    basis: Vec<Var>,
}

impl Tableau {
    fn new(problem: &LcpProblem) -> Self {
        let n = problem.dim();
        let width = 2 * n + 2;
        let mut data = vec![0.0; n * width];
        for r in 0..n {
            let row = &mut data[r * width..(r + 1) * width];
            row[r] = 1.0;
            for c in 0..n {
                row[n + c] = -problem.m[(r, c)];
            }
            row[2 * n] = -1.0;
            row[2 * n + 1] = problem.b[r];
        }
        Self {
            n,
            width,
            data,
            basis: (0..n).map(Var::W).collect(),
        }
    }

    fn col(&self, v: Var) -> usize {
        match v {
            Var::W(i) => i,
            Var::Z(i) => self.n + i,
            Var::Aux => 2 * self.n,
        }
    }

    fn rhs_col(&self) -> usize {
        2 * self.n + 1
    }

    #[inline]
    fn at(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.width + c]
    }

    /// Lexicographic ratio test on `[rhs | B⁻¹] / column` over `rows`.
    /// Picks the minimum, or the maximum when `maximize` is set.
    fn lex_select(&self, col: usize, rows: Vec<usize>, maximize: bool, tie: f64) -> usize {
        let mut cands = rows;
        let rhs = self.rhs_col();
        for k in 0..=self.n {
            if cands.len() == 1 {
                break;
            }
            let key_col = if k == 0 { rhs } else { k - 1 };
            let ratio = |r: usize| self.at(r, key_col) / self.at(r, col);
            let best = cands
                .iter()
                .map(|&r| ratio(r))
                .fold(if maximize { f64::NEG_INFINITY } else { f64::INFINITY }, |a, b| {
                    if maximize {
                        a.max(b)
                    } else {
                        a.min(b)
                    }
                });
            let scale = 1.0 + best.abs();
            cands.retain(|&r| (ratio(r) - best).abs() <= tie * scale);
        }
        cands[0]
    }

    fn pivot(&mut self, row: usize, col: usize) {
        let w = self.width;
        let piv = self.at(row, col);
        let (before, rest) = self.data.split_at_mut(row * w);
        let (prow, after) = rest.split_at_mut(w);
        for v in prow.iter_mut() {
            *v /= piv;
        }
        prow[col] = 1.0;
        let update = |chunk: &mut [f64]| {
            let f = chunk[col];
            if f != 0.0 {
                for (a, p) in chunk.iter_mut().zip(prow.iter()) {
                    *a -= f * p;
                }
                chunk[col] = 0.0;
            }
        };
        before.chunks_mut(w).for_each(update);
        after.chunks_mut(w).for_each(update);
    }
}

/// Runs Lemke's algorithm with covering vector `1`.
pub fn lemke_solve(problem: &LcpProblem, options: &LemkeOptions) -> LcpSolution {
    run_lemke(problem, options, None)
}

/// As [`lemke_solve`], writing one line per pivot (`entering leaving ratio`).
pub fn lemke_solve_traced(problem: &LcpProblem, options: &LemkeOptions, trace: &mut dyn Write) -> LcpSolution {
    run_lemke(problem, options, Some(trace))
}

fn run_lemke(problem: &LcpProblem, options: &LemkeOptions, mut trace: Option<&mut dyn Write>) -> LcpSolution {
    let n = problem.dim();
    if problem.b.iter().all(|&v| v >= 0.0) {
        return finish(problem, DVector::zeros(n), 0, LcpStatus::Solved, options);
    }

    let mut tab = Tableau::new(problem);
    let tie = 1e-11;
    #[cfg(debug_assertions)]
    let mut seen = std::collections::HashSet::new();

    // z0 enters; its column is -1 everywhere, so the leaving row is the
    // lexicographic maximum of rhs / (-1).
    let mut entering = Var::Aux;
    let mut col = tab.col(entering);
    let mut row = tab.lex_select(col, (0..n).collect(), true, tie);
    let mut pivots = 0usize;

    loop {
        let leaving = tab.basis[row];
        if let Some(out) = trace.as_deref_mut() {
            let ratio = tab.at(row, tab.rhs_col()) / tab.at(row, col);
            let _ = writeln!(out, "{} {} {} {:.12e}", pivots + 1, entering, leaving, ratio);
        }
        tab.pivot(row, col);
        tab.basis[row] = entering;
        pivots += 1;

        #[cfg(debug_assertions)]
        {
            let mut key: Vec<usize> = tab.basis.iter().map(|&v| tab.col(v)).collect();
            key.sort_unstable();
            assert!(seen.insert(key), "Lemke revisited a basis");
        }

        if leaving == Var::Aux {
            break;
        }
        if pivots >= options.max_pivots {
            let z = basic_z(&tab);
            return finish(problem, z, pivots, LcpStatus::IterationLimit, options);
        }

        entering = leaving.complement();
        col = tab.col(entering);
        let rows: Vec<usize> = (0..n).filter(|&r| tab.at(r, col) > options.pivot_tolerance).collect();
        if rows.is_empty() {
            let z = basic_z(&tab);
            return finish(problem, z, pivots, LcpStatus::RayTermination, options);
        }

        // Prefer letting z0 leave whenever it ties for the minimum ratio.
        let rhs = tab.rhs_col();
        let min_ratio = rows
            .iter()
            .map(|&r| tab.at(r, rhs) / tab.at(r, col))
            .fold(f64::INFINITY, f64::min);
        let aux_row = rows.iter().copied().find(|&r| {
            tab.basis[r] == Var::Aux && (tab.at(r, rhs) / tab.at(r, col) - min_ratio).abs() <= tie * (1.0 + min_ratio.abs())
        });
        row = match aux_row {
            Some(r) => r,
            None => tab.lex_select(col, rows, false, tie),
        };
    }

    let z = polish(problem, &tab).unwrap_or_else(|| basic_z(&tab));
    finish(problem, z, pivots, LcpStatus::Solved, options)
}

fn basic_z(tab: &Tableau) -> DVector<f64> {
    let mut z = DVector::zeros(tab.n);
    for (r, v) in tab.basis.iter().enumerate() {
        if let Var::Z(i) = v {
            z[*i] = tab.at(r, tab.rhs_col());
        }
    }
    z
}

/// Re-solves `B x_B = b` from the original columns of the final basis.
fn polish(problem: &LcpProblem, tab: &Tableau) -> Option<DVector<f64>> {
    let n = tab.n;
    let mut basis = DMatrix::zeros(n, n);
    for (k, v) in tab.basis.iter().enumerate() {
        match v {
            Var::W(i) => basis[(*i, k)] = 1.0,
            Var::Z(i) => {
                for r in 0..n {
                    basis[(r, k)] = -problem.m[(r, *i)];
                }
            }
            Var::Aux => return None,
        }
    }
    let xb = basis.lu().solve(&problem.b)?;
    let mut z = DVector::zeros(n);
    for (k, v) in tab.basis.iter().enumerate() {
        if let Var::Z(i) = v {
            z[*i] = xb[k];
        }
    }
    let tableau_z = basic_z(tab);
    // Keep the tableau values if the refactorisation disagrees materially.
    let drift = (&z - &tableau_z).amax();
    if !drift.is_finite() || drift > 1e-6 * (1.0 + tableau_z.amax()) {
        return None;
    }
    Some(z)
}

fn finish(problem: &LcpProblem, mut z: DVector<f64>, pivots: usize, status: LcpStatus, options: &LemkeOptions) -> LcpSolution {
    if status == LcpStatus::Solved {
        // Round off sub-tolerance negatives left by floating point.
        for v in z.iter_mut() {
            if *v < 0.0 && *v > -options.tolerance {
                *v = 0.0;
            }
        }
    }
    let residual = verify_lcp(problem, &z);
    let w = &problem.m * &z + &problem.b;
    let status = if status == LcpStatus::Solved && residual.max() > options.tolerance {
        LcpStatus::Inaccurate
    } else {
        status
    };
    LcpSolution {
        z,
        w,
        complementarity_residual: residual.complementarity,
        residual,
        pivot_count: pivots,
        status,
    }
}
