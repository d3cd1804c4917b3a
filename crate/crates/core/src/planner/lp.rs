//! A small dense linear-programming solver.
//!
//! Two-phase primal simplex with Bland's pivot rule, which is
//! deterministic and cannot cycle. Problems are stated in a general form
//! (free or boxed variables, ≥/≤/= rows) and converted to standard
//! equality form internally. Instances here are desk-scale (at most a few
//! hundred variables), so a dense tableau is the simplest thing that is
//! obviously correct.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

/// Comparison operator of a constraint row.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Cmp {
    Ge,
    Le,
    Eq,
}

/// One constraint: `Σ coeffs · x  (cmp)  rhs`.
#[derive(Debug, Clone)]
pub struct Row {
    pub coeffs: Vec<(usize, f64)>,
    pub cmp: Cmp,
    pub rhs: f64,
}

/// A minimization problem over `num_vars` variables with per-variable
/// bounds; use `f64::NEG_INFINITY` / `f64::INFINITY` for unbounded sides.
#[derive(Debug, Clone)]
pub struct LinearProgram {
    pub num_vars: usize,
    pub objective: Vec<f64>,
    pub rows: Vec<Row>,
    pub bounds: Vec<(f64, f64)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution {
    pub x: Vec<f64>,
    pub objective: f64,
}

/// Solver verdict; infeasible and unbounded are ordinary outcomes, not
/// errors.
#[derive(Debug, Clone, PartialEq)]
pub enum LpOutcome {
    Optimal(LpSolution),
    Infeasible,
    Unbounded,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LpError {
    /// Objective/bounds lengths disagree with `num_vars`, or a coefficient
    /// index is out of range.
    Malformed(&'static str),
    /// The pivot loop exceeded its cap; with Bland's rule this indicates a
    /// solver bug rather than a hard instance.
    IterationLimit,
}

impl fmt::Display for LpError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LpError::Malformed(what) => write!(f, "malformed linear program: {what}"),
            LpError::IterationLimit => write!(f, "simplex iteration limit exceeded"),
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for LpError {}

const EPS: f64 = 1e-9;
/// Accepted residual on the phase-1 optimum before declaring feasibility.
const FEAS_TOL: f64 = 1e-9;

/// How an original variable maps onto standard-form columns.
#[derive(Debug, Clone, Copy)]
enum VarMap {
    /// x = col  (lower bound zero)
    Direct(usize),
    /// x = lo + col
    Shifted(usize, f64),
    /// x = hi − col
    Mirrored(usize, f64),
    /// x = col_pos − col_neg  (free variable)
    Split(usize, usize),
}

struct Standard {
    ncols: usize,
    objective: Vec<f64>,
    rows: Vec<Vec<f64>>, // dense, equality form
    rhs: Vec<f64>,
    var_map: Vec<VarMap>,
}

fn to_standard(lp: &LinearProgram) -> Result<Standard, LpError> {
    if lp.objective.len() != lp.num_vars || lp.bounds.len() != lp.num_vars {
        return Err(LpError::Malformed("objective/bounds length mismatch"));
    }
    for row in &lp.rows {
        if row.coeffs.iter().any(|&(j, _)| j >= lp.num_vars) {
            return Err(LpError::Malformed("coefficient index out of range"));
        }
    }
    let mut ncols = 0usize;
    let mut var_map = Vec::with_capacity(lp.num_vars);
    let mut extra_rows: Vec<Row> = Vec::new();
    for (j, &(lo, hi)) in lp.bounds.iter().enumerate() {
        let mapping = match (lo.is_finite(), hi.is_finite()) {
            (false, false) => {
                let m = VarMap::Split(ncols, ncols + 1);
                ncols += 2;
                m
            }
            (true, _) => {
                let m = if lo == 0.0 { VarMap::Direct(ncols) } else { VarMap::Shifted(ncols, lo) };
                ncols += 1;
                if hi.is_finite() {
                    // upper bound becomes an ordinary row on the original var
                    extra_rows.push(Row { coeffs: vec![(j, 1.0)], cmp: Cmp::Le, rhs: hi });
                }
                m
            }
            (false, true) => {
                let m = VarMap::Mirrored(ncols, hi);
                ncols += 1;
                m
            }
        };
        var_map.push(mapping);
    }

    let all_rows: Vec<&Row> = lp.rows.iter().chain(extra_rows.iter()).collect();
    let nrows = all_rows.len();
    // slack/surplus columns, one per inequality row
    let slack_cols = all_rows.iter().filter(|r| r.cmp != Cmp::Eq).count();
    let total = ncols + slack_cols;

    let mut rows = vec![vec![0.0; total]; nrows];
    let mut rhs = vec![0.0; nrows];
    let mut next_slack = ncols;
    for (i, row) in all_rows.iter().enumerate() {
        let mut b = row.rhs;
        for &(j, a) in &row.coeffs {
            match var_map[j] {
                VarMap::Direct(c) => rows[i][c] += a,
                VarMap::Shifted(c, lo) => {
                    rows[i][c] += a;
                    b -= a * lo;
                }
                VarMap::Mirrored(c, hi) => {
                    rows[i][c] -= a;
                    b -= a * hi;
                }
                VarMap::Split(cp, cn) => {
                    rows[i][cp] += a;
                    rows[i][cn] -= a;
                }
            }
        }
        match row.cmp {
            Cmp::Ge => {
                rows[i][next_slack] = -1.0;
                next_slack += 1;
            }
            Cmp::Le => {
                rows[i][next_slack] = 1.0;
                next_slack += 1;
            }
            Cmp::Eq => {}
        }
        rhs[i] = b;
    }
    // normalize to nonnegative right-hand sides for phase 1
    for i in 0..nrows {
        if rhs[i] < 0.0 {
            rhs[i] = -rhs[i];
            for v in rows[i].iter_mut() {
                *v = -*v;
            }
        }
    }

    let mut objective = vec![0.0; total];
    for (j, &c) in lp.objective.iter().enumerate() {
        match var_map[j] {
            VarMap::Direct(col) => objective[col] += c,
            VarMap::Shifted(col, _) => objective[col] += c,
            VarMap::Mirrored(col, _) => objective[col] -= c,
            VarMap::Split(cp, cn) => {
                objective[cp] += c;
                objective[cn] -= c;
            }
        }
    }
    Ok(Standard { ncols: total, objective, rows, rhs, var_map })
}

struct Tableau {
    ncols: usize,        // structural + slack columns (artificials excluded)
    nart: usize,
    rows: Vec<Vec<f64>>, // m × (ncols + nart)
    rhs: Vec<f64>,
    basis: Vec<usize>,
    cost: Vec<f64>,      // phase-2 reduced costs (length ncols + nart)
    cost_val: f64,
    art_cost: Vec<f64>,  // phase-1 reduced costs
    art_val: f64,
}

impl Tableau {
    fn pivot(&mut self, row: usize, col: usize) {
        let piv = self.rows[row][col];
        let inv = 1.0 / piv;
        for v in self.rows[row].iter_mut() {
            *v *= inv;
        }
        self.rhs[row] *= inv;
        for i in 0..self.rows.len() {
            if i == row {
                continue;
            }
            let factor = self.rows[i][col];
            if factor == 0.0 {
                continue;
            }
            for j in 0..self.rows[i].len() {
                self.rows[i][j] -= factor * self.rows[row][j];
            }
            self.rhs[i] -= factor * self.rhs[row];
            self.rows[i][col] = 0.0;
        }
        let f = self.cost[col];
        if f != 0.0 {
            for j in 0..self.cost.len() {
                self.cost[j] -= f * self.rows[row][j];
            }
            self.cost_val -= f * self.rhs[row];
            self.cost[col] = 0.0;
        }
        let f = self.art_cost[col];
        if f != 0.0 {
            for j in 0..self.art_cost.len() {
                self.art_cost[j] -= f * self.rows[row][j];
            }
            self.art_val -= f * self.rhs[row];
            self.art_cost[col] = 0.0;
        }
        self.basis[row] = col;
    }

    /// One simplex phase under Bland's rule: entering = lowest-index column
    /// with negative reduced cost, leaving = lowest-basis-index among the
    /// minimum ratios. Returns false on unboundedness.
    fn run(&mut self, reduced: Phase, allow: &dyn Fn(usize) -> bool) -> Result<bool, LpError> {
        for _ in 0..2_000_000u64 {
            let costs: &Vec<f64> = match reduced {
                Phase::One => &self.art_cost,
                Phase::Two => &self.cost,
            };
            let entering = (0..self.ncols + self.nart)
                .find(|&j| allow(j) && costs[j] < -EPS);
            let Some(col) = entering else {
                return Ok(true);
            };
            let mut leave: Option<(usize, f64)> = None;
            for i in 0..self.rows.len() {
                let a = self.rows[i][col];
                if a > EPS {
                    let ratio = self.rhs[i] / a;
                    let replace = match leave {
                        None => true,
                        Some((bi, br)) => {
                            ratio < br - 1e-12
                                || (ratio < br + 1e-12 && self.basis[i] < self.basis[bi])
                        }
                    };
                    if replace {
                        leave = Some((i, ratio));
                    }
                }
            }
            let Some((row, _)) = leave else {
                return Ok(false);
            };
            self.pivot(row, col);
        }
        Err(LpError::IterationLimit)
    }
}

#[derive(Clone, Copy, PartialEq)]
enum Phase {
    One,
    Two,
}

/// Solves the program to a basic optimal solution.
pub fn solve(lp: &LinearProgram) -> Result<LpOutcome, LpError> {
    let std_form = to_standard(lp)?;
    let m = std_form.rows.len();
    let ncols = std_form.ncols;
    let nart = m;

    let mut rows = vec![vec![0.0; ncols + nart]; m];
    for i in 0..m {
        rows[i][..ncols].copy_from_slice(&std_form.rows[i]);
        rows[i][ncols + i] = 1.0;
    }
    let mut cost = vec![0.0; ncols + nart];
    cost[..ncols].copy_from_slice(&std_form.objective);
    // phase-1 reduced costs: minimize the artificial sum
    let mut art_cost = vec![0.0; ncols + nart];
    let mut art_val = 0.0;
    for j in 0..ncols {
        let col_sum: f64 = (0..m).map(|i| rows[i][j]).sum();
        art_cost[j] = -col_sum;
    }
    for i in 0..m {
        art_val -= std_form.rhs[i];
    }

    let mut tab = Tableau {
        ncols,
        nart,
        rows,
        rhs: std_form.rhs.clone(),
        basis: (0..m).map(|i| ncols + i).collect(),
        cost,
        cost_val: 0.0,
        art_cost,
        art_val,
    };

    // phase 1
    if !tab.run(Phase::One, &|_| true)? {
        // the artificial sum is bounded below by zero, so this cannot happen
        return Err(LpError::Malformed("phase-1 unbounded"));
    }
    if -tab.art_val > FEAS_TOL {
        return Ok(LpOutcome::Infeasible);
    }
    // drive any leftover artificial out of the basis
    for i in 0..m {
        if tab.basis[i] >= ncols {
            let col = (0..ncols).find(|&j| crate::math::abs(tab.rows[i][j]) > EPS);
            if let Some(col) = col {
                tab.pivot(i, col);
            }
            // an all-zero row is redundant; its artificial stays basic at 0
        }
    }

    // phase 2, artificials barred from entering
    let bounded = tab.run(Phase::Two, &|j| j < ncols)?;
    if !bounded {
        return Ok(LpOutcome::Unbounded);
    }

    let mut x_std = vec![0.0; ncols];
    for (i, &b) in tab.basis.iter().enumerate() {
        if b < ncols {
            x_std[b] = tab.rhs[i];
        }
    }
    let mut x = vec![0.0; lp.num_vars];
    for (j, &mapping) in std_form.var_map.iter().enumerate() {
        x[j] = match mapping {
            VarMap::Direct(c) => x_std[c],
            VarMap::Shifted(c, lo) => lo + x_std[c],
            VarMap::Mirrored(c, hi) => hi - x_std[c],
            VarMap::Split(cp, cn) => x_std[cp] - x_std[cn],
        };
    }
    let objective = lp.objective.iter().zip(&x).map(|(c, v)| c * v).sum::<f64>();
    Ok(LpOutcome::Optimal(LpSolution { x, objective }))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ge(coeffs: &[(usize, f64)], rhs: f64) -> Row {
        Row { coeffs: coeffs.to_vec(), cmp: Cmp::Ge, rhs }
    }

    fn le(coeffs: &[(usize, f64)], rhs: f64) -> Row {
        Row { coeffs: coeffs.to_vec(), cmp: Cmp::Le, rhs }
    }

    fn eq(coeffs: &[(usize, f64)], rhs: f64) -> Row {
        Row { coeffs: coeffs.to_vec(), cmp: Cmp::Eq, rhs }
    }

    fn opt(outcome: LpOutcome) -> LpSolution {
        match outcome {
            LpOutcome::Optimal(s) => s,
            other => panic!("expected optimal, got {other:?}"),
        }
    }

    #[test]
    fn min_x_subject_to_lower_bound() {
        let lp = LinearProgram {
            num_vars: 1,
            objective: vec![1.0],
            rows: vec![ge(&[(0, 1.0)], 3.0)],
            bounds: vec![(f64::NEG_INFINITY, f64::INFINITY)],
        };
        let s = opt(solve(&lp).unwrap());
        assert!((s.x[0] - 3.0).abs() < 1e-9);
        assert!((s.objective - 3.0).abs() < 1e-9);
    }

    #[test]
    fn boxed_variable_and_free_variable() {
        // min 2a - b  with a in [1, 4], b <= 5, a + b >= 3
        let lp = LinearProgram {
            num_vars: 2,
            objective: vec![2.0, -1.0],
            rows: vec![ge(&[(0, 1.0), (1, 1.0)], 3.0)],
            bounds: vec![(1.0, 4.0), (f64::NEG_INFINITY, 5.0)],
        };
        let s = opt(solve(&lp).unwrap());
        assert!((s.x[0] - 1.0).abs() < 1e-9);
        assert!((s.x[1] - 5.0).abs() < 1e-9);
        assert!((s.objective + 3.0).abs() < 1e-9);
    }

    #[test]
    fn detects_infeasible() {
        let lp = LinearProgram {
            num_vars: 1,
            objective: vec![1.0],
            rows: vec![ge(&[(0, 1.0)], 3.0), le(&[(0, 1.0)], 2.0)],
            bounds: vec![(0.0, f64::INFINITY)],
        };
        assert_eq!(solve(&lp).unwrap(), LpOutcome::Infeasible);
    }

    #[test]
    fn detects_unbounded() {
        // min -x1 with x2 = 1 and x1 free upward
        let lp = LinearProgram {
            num_vars: 2,
            objective: vec![-1.0, 0.0],
            rows: vec![eq(&[(1, 1.0)], 1.0)],
            bounds: vec![(0.0, f64::INFINITY), (0.0, f64::INFINITY)],
        };
        assert_eq!(solve(&lp).unwrap(), LpOutcome::Unbounded);
    }

    #[test]
    fn beale_degenerate_instance_terminates_at_the_optimum() {
        // The classic cycling example for the most-negative-cost rule;
        // Bland's rule must terminate.
        let lp = LinearProgram {
            num_vars: 4,
            objective: vec![-0.75, 150.0, -0.02, 6.0],
            rows: vec![
                le(&[(0, 0.25), (1, -60.0), (2, -1.0 / 25.0), (3, 9.0)], 0.0),
                le(&[(0, 0.5), (1, -90.0), (2, -1.0 / 50.0), (3, 3.0)], 0.0),
                le(&[(2, 1.0)], 1.0),
            ],
            bounds: vec![(0.0, f64::INFINITY); 4],
        };
        let s = opt(solve(&lp).unwrap());
        assert!((s.objective - (-0.05)).abs() < 1e-9, "objective {}", s.objective);
    }

    /// Enumerates every basic solution of the standard-form program and
    /// returns the best feasible objective.
    fn vertex_oracle(lp: &LinearProgram) -> Option<f64> {
        let std_form = to_standard(lp).unwrap();
        let m = std_form.rows.len();
        let n = std_form.ncols;
        let mut best: Option<f64> = None;
        let mut combo: Vec<usize> = (0..m).collect();
        if m > n {
            return None;
        }
        loop {
            if let Some(xb) = solve_square(&std_form, &combo) {
                if xb.iter().all(|&v| v >= -1e-9) {
                    let mut obj = 0.0;
                    for (k, &j) in combo.iter().enumerate() {
                        obj += std_form.objective[j] * xb[k];
                    }
                    best = Some(best.map_or(obj, |b: f64| b.min(obj)));
                }
            }
            // next combination of m columns out of n
            let mut i = m;
            loop {
                if i == 0 {
                    return best;
                }
                i -= 1;
                if combo[i] != i + n - m {
                    combo[i] += 1;
                    for k in i + 1..m {
                        combo[k] = combo[k - 1] + 1;
                    }
                    break;
                }
            }
        }
    }

    /// Gaussian elimination for the m×m basis system; None when singular.
    fn solve_square(std_form: &Standard, cols: &[usize]) -> Option<Vec<f64>> {
        let m = cols.len();
        let mut a = vec![vec![0.0; m + 1]; m];
        for i in 0..m {
            for (k, &j) in cols.iter().enumerate() {
                a[i][k] = std_form.rows[i][j];
            }
            a[i][m] = std_form.rhs[i];
        }
        for col in 0..m {
            let piv = (col..m).max_by(|&p, &q| {
                crate::math::abs(a[p][col]).partial_cmp(&crate::math::abs(a[q][col])).unwrap()
            })?;
            if crate::math::abs(a[piv][col]) < 1e-10 {
                return None;
            }
            a.swap(col, piv);
            for r in 0..m {
                if r != col {
                    let f = a[r][col] / a[col][col];
                    for c in col..=m {
                        a[r][c] -= f * a[col][c];
                    }
                }
            }
        }
        Some((0..m).map(|i| a[i][m] / a[i][i]).collect())
    }

    #[test]
    fn random_small_lps_match_vertex_enumeration() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(2024);
        let mut checked = 0;
        while checked < 60 {
            let n = rng.gen_range(2..=6usize);
            let m = rng.gen_range(1..=3usize.min(n));
            // feasible by construction: b = A x0 with x0 >= 0
            let a: Vec<Vec<f64>> =
                (0..m).map(|_| (0..n).map(|_| rng.gen_range(-3.0..3.0)).collect()).collect();
            let x0: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..2.0)).collect();
            let rows: Vec<Row> = (0..m)
                .map(|i| {
                    let rhs = (0..n).map(|j| a[i][j] * x0[j]).sum();
                    eq(&(0..n).map(|j| (j, a[i][j])).collect::<Vec<_>>(), rhs)
                })
                .collect();
            // nonnegative costs keep the minimum bounded
            let lp = LinearProgram {
                num_vars: n,
                objective: (0..n).map(|_| rng.gen_range(0.0..4.0)).collect(),
                rows,
                bounds: vec![(0.0, f64::INFINITY); n],
            };
            let Some(oracle) = vertex_oracle(&lp) else { continue };
            let s = opt(solve(&lp).unwrap());
            assert!(
                (s.objective - oracle).abs() <= 1e-7 * (1.0 + oracle.abs()),
                "simplex {} vs oracle {}",
                s.objective,
                oracle
            );
            checked += 1;
        }
    }
}
