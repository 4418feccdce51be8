//! Dense tableau simplex with dual extraction and warm-started row addition.
//!
//! Minimizes c·x subject to sparse rows `a_i·x {≤,≥,=} b_i` and x ≥ 0.
//! Pivot choices are deterministic (Dantzig entering with lowest-index ties,
//! exact minimal-ratio leaving with Bland's basic-order tie-break), and the
//! right-hand side is deterministically perturbed to break the massive
//! degeneracy of combinatorially symmetric instances; the final basis is
//! re-evaluated against the true right-hand side, so reported values and
//! duals are exact for the unperturbed problem.
//!
//! Constraint generation keeps one [`IncrementalLp`] alive and appends rows:
//! a new row is expressed in the current basis with its surplus basic —
//! satisfied rows arrive feasible, violated rows arrive at a negative basic
//! value and are pulled back by dual-simplex steps (with an artificial
//! phase-1 repair as the fallback when the reduced costs are not yet
//! dual-feasible, e.g. under general-sign objectives).

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Rel {
    Le,
    Ge,
    Eq,
}

#[derive(Clone, Debug)]
pub struct RowSpec {
    pub coeffs: Vec<(usize, f64)>,
    pub rel: Rel,
    pub rhs: f64,
}

#[derive(Clone, Debug)]
pub struct Lp {
    pub num_vars: usize,
    /// Objective (minimized).
    pub objective: Vec<f64>,
    pub rows: Vec<RowSpec>,
}

#[derive(Clone, Debug)]
pub struct LpSolution {
    pub value: f64,
    pub x: Vec<f64>,
    /// One multiplier per input row, in input order. Sign convention:
    /// y_i ≥ 0 for ≥ rows, y_i ≤ 0 for ≤ rows, free for = rows, and
    /// value = Σ y_i·b_i at the optimum.
    pub dual: Vec<f64>,
    pub iterations: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LpError {
    Infeasible,
    Unbounded,
    IterationLimit,
}

impl std::fmt::Display for LpError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            LpError::Infeasible => write!(f, "infeasible"),
            LpError::Unbounded => write!(f, "unbounded"),
            LpError::IterationLimit => write!(f, "iteration limit reached"),
        }
    }
}

const EPS_PIVOT: f64 = 1e-9;
const EPS_RC: f64 = 1e-9;
const EPS_PHASE1: f64 = 1e-7;
const PERTURB: f64 = 1e-9;

/// Growable standard-form LP with a live basis.
pub struct IncrementalLp {
    /// Structural variable costs (by variable index).
    costs: Vec<f64>,
    /// Tableau column of each structural variable.
    var_col: Vec<usize>,
    /// Structural variable of each column (usize::MAX on logical columns).
    var_of_col: Vec<usize>,
    /// Base cost per tableau column (zero on logical columns).
    col_cost: Vec<f64>,
    /// Column count in use.
    ncols: usize,
    /// Allocated row width; columns append without shifting.
    stride: usize,
    /// Row-major tableau body, m rows of `stride` entries (zero padded).
    t: Vec<f64>,
    /// Perturbed rhs in the current basis.
    b: Vec<f64>,
    /// Unperturbed original rhs per row (post sign-normalization).
    b_orig: Vec<f64>,
    rc: Vec<f64>,
    cost_row: Vec<f64>,
    basis: Vec<usize>,
    enterable: Vec<bool>,
    /// Column holding ±e_row in the original data (the row's surplus).
    id_col: Vec<usize>,
    /// Sign of that identity column (rows flip during artificial repair).
    id_sign: Vec<f64>,
    /// The column whose reduced cost yields the row's dual, with its sign.
    dual_col: Vec<(usize, f64)>,
    /// Columns that are artificial (barred from entering).
    artificial: Vec<bool>,
    /// Primal passes clamp negative rhs dust; the dual pass must keep
    /// genuine negatives alive.
    dual_pass: bool,
    rows_added: usize,
    pub iterations: usize,
}

impl IncrementalLp {
    pub fn new() -> Self {
        IncrementalLp {
            costs: Vec::new(),
            var_col: Vec::new(),
            var_of_col: Vec::new(),
            col_cost: Vec::new(),
            ncols: 0,
            stride: 0,
            t: Vec::new(),
            b: Vec::new(),
            b_orig: Vec::new(),
            rc: Vec::new(),
            cost_row: Vec::new(),
            basis: Vec::new(),
            enterable: Vec::new(),
            id_col: Vec::new(),
            id_sign: Vec::new(),
            dual_col: Vec::new(),
            artificial: Vec::new(),
            dual_pass: false,
            rows_added: 0,
            iterations: 0,
        }
    }

    pub fn num_structural(&self) -> usize {
        self.costs.len()
    }

    pub fn num_rows(&self) -> usize {
        self.basis.len()
    }

    fn m(&self) -> usize {
        self.basis.len()
    }

    /// Append a structural variable (zero column so far).
    pub fn add_variable(&mut self, cost: f64) -> usize {
        let col = self.push_column();
        let j = self.costs.len();
        self.costs.push(cost);
        self.var_col.push(col);
        self.var_of_col[col] = j;
        self.col_cost[col] = cost;
        self.enterable[col] = true;
        j
    }

    /// Appends a zeroed column, growing the stride geometrically so repeated
    /// additions stay amortized linear. Returns the column index.
    fn push_column(&mut self) -> usize {
        if self.ncols == self.stride {
            let new_stride = (self.stride * 2).max(16);
            let m = self.m();
            let mut t = vec![0.0; m * new_stride];
            for i in 0..m {
                t[i * new_stride..i * new_stride + self.ncols]
                    .copy_from_slice(&self.t[i * self.stride..i * self.stride + self.ncols]);
            }
            self.t = t;
            self.stride = new_stride;
        }
        let col = self.ncols;
        self.ncols += 1;
        self.rc.push(0.0);
        self.cost_row.push(0.0);
        self.col_cost.push(0.0);
        self.var_of_col.push(usize::MAX);
        self.enterable.push(false);
        self.artificial.push(false);
        col
    }

    /// Append a `coeffs·x ≥ rhs` row (any rhs sign). Returns the row index.
    pub fn add_ge_row(&mut self, coeffs: &[(usize, f64)], rhs: f64) -> usize {
        self.add_ge_row_shifted(coeffs, rhs, 0.0)
    }

    /// Like [`IncrementalLp::add_ge_row`] with an extra rhs shift applied to
    /// the *solved* (perturbed) system but not to the reported one; equality
    /// pairs use it to keep their perturbed interval nonempty.
    ///
    /// The row is stored in negated form with its surplus basic, possibly at
    /// a negative value: re-optimization restores feasibility by dual
    /// simplex steps (or, when the reduced costs are not yet dual-feasible,
    /// by an artificial repair inside [`IncrementalLp::solve`]).
    pub fn add_ge_row_shifted(&mut self, coeffs: &[(usize, f64)], rhs: f64, shift: f64) -> usize {
        let row_idx = self.m();
        self.rows_added += 1;
        let surplus = self.push_column();
        // build the new row in original coordinates (padded to the stride)
        let mut row = vec![0.0; self.stride];
        for &(j, a) in coeffs {
            debug_assert!(j < self.costs.len());
            row[self.var_col[j]] += a;
        }
        row[surplus] = -1.0;
        let pert = PERTURB * (self.rows_added as f64 % 97.0 + 1.0) / 98.0 * (1.0 + rhs.abs());
        let mut b = rhs + shift + pert;
        // eliminate current basic variables
        for i in 0..row_idx {
            let f = row[self.basis[i]];
            if f != 0.0 {
                let prow = &self.t[i * self.stride..i * self.stride + self.ncols];
                for (x, &p) in row[..self.ncols].iter_mut().zip(prow.iter()) {
                    *x -= f * p;
                }
                row[self.basis[i]] = 0.0;
                b -= f * self.b[i];
            }
        }
        // store negated so the surplus column carries +1 and can sit in the
        // basis; a violated row simply starts at a negative basic value
        for x in row.iter_mut() {
            *x = -*x;
        }
        self.t.extend_from_slice(&row);
        self.b.push(-b);
        self.b_orig.push(-rhs);
        self.basis.push(surplus);
        self.enterable[surplus] = true;
        self.id_col.push(surplus);
        self.id_sign.push(1.0);
        self.dual_col.push((surplus, 1.0));
        row_idx
    }

    /// Dual-simplex loop: removes negative basic values while preserving
    /// dual feasibility. Returns Ok(true) when feasibility was restored,
    /// Ok(false) when the reduced costs were not dual-feasible to begin
    /// with (caller falls back to the artificial repair).
    fn dual_simplex(&mut self, limit: usize) -> Result<bool, LpError> {
        let feas_tol = -1e-11 * (1.0 + self.b.iter().fold(0.0f64, |a, &x| a.max(x.abs())));
        if !self.b.iter().any(|&x| x < feas_tol) {
            return Ok(true);
        }
        self.refresh_rc();
        if self
            .rc
            .iter()
            .enumerate()
            .any(|(c, &r)| self.enterable[c] && r < -1e-7)
        {
            return Ok(false);
        }
        self.dual_pass = true;
        let mut dual_pivots = 0usize;
        let bland_after = 1_000 + 10 * self.m();
        let give_up = 20_000 + 50 * self.m();
        let outcome = loop {
            if self.iterations > limit {
                break Err(LpError::IterationLimit);
            }
            if dual_pivots > give_up {
                // hand the stragglers to the artificial repair
                break Ok(false);
            }
            let bland = dual_pivots > bland_after;
            // leaving: most negative basic value (lowest index under Bland)
            let mut r = None;
            let mut worst = feas_tol;
            for i in 0..self.m() {
                if self.b[i] < worst {
                    worst = self.b[i];
                    r = Some(i);
                    if bland {
                        break;
                    }
                }
            }
            let Some(r) = r else {
                // snap residual dust before returning to primal mode
                for x in self.b.iter_mut() {
                    if *x < 0.0 {
                        *x = 0.0;
                    }
                }
                break Ok(true);
            };
            // entering: dual ratio test over negative row entries
            let row = &self.t[r * self.stride..r * self.stride + self.ncols];
            let mut enter = None;
            let mut best = f64::INFINITY;
            for c in 0..self.ncols {
                if !self.enterable[c] || self.artificial[c] {
                    continue;
                }
                let a = row[c];
                if a < -EPS_PIVOT {
                    let ratio = self.rc[c].max(0.0) / -a;
                    if ratio < best {
                        best = ratio;
                        enter = Some(c);
                    }
                }
            }
            let Some(c) = enter else {
                break Err(LpError::Infeasible);
            };
            self.pivot(r, c);
            dual_pivots += 1;
        };
        self.dual_pass = false;
        outcome
    }

    /// Artificial repair for rows stuck at negative values when the reduced
    /// costs are not dual-feasible: flip the row and hand it an artificial.
    fn artificial_repair(&mut self) {
        let m = self.m();
        for i in 0..m {
            if self.b[i] >= 0.0 {
                continue;
            }
            // negate the row in place: its original data flips sign with it
            let start = i * self.stride;
            for x in &mut self.t[start..start + self.ncols] {
                *x = -*x;
            }
            self.b[i] = -self.b[i];
            self.b_orig[i] = -self.b_orig[i];
            self.id_sign[i] = -self.id_sign[i];
            let (_, sign) = self.dual_col[i];
            self.dual_col[i].1 = -sign;
            // fresh artificial with tableau column e_i
            let art = self.push_column();
            self.t[i * self.stride + art] = 1.0;
            self.artificial[art] = true;
            self.basis[i] = art;
        }
    }

    fn refresh_rc(&mut self) {
        self.rc.copy_from_slice(&self.cost_row);
        for i in 0..self.m() {
            let cb = self.cost_row[self.basis[i]];
            if cb != 0.0 {
                let prow = self.t[i * self.stride..i * self.stride + self.ncols].to_vec();
                for (x, &p) in self.rc[..self.ncols].iter_mut().zip(prow.iter()) {
                    *x -= cb * p;
                }
            }
        }
        for i in 0..self.m() {
            self.rc[self.basis[i]] = 0.0;
        }
    }

    fn set_phase_costs(&mut self, phase1: bool) {
        for j in 0..self.ncols {
            self.cost_row[j] = if phase1 {
                if self.artificial[j] {
                    1.0
                } else {
                    0.0
                }
            } else {
                self.col_cost[j]
            };
        }
        self.refresh_rc();
    }

    fn pivot(&mut self, r: usize, c: usize) {
        let stride = self.stride;
        let piv = self.t[r * stride + c];
        let inv = 1.0 / piv;
        for x in &mut self.t[r * stride..(r + 1) * stride] {
            *x *= inv;
        }
        self.b[r] *= inv;
        self.t[r * stride + c] = 1.0;
        let (head, tail) = self.t.split_at_mut(r * stride);
        let (prow, rest) = tail.split_at_mut(stride);
        for (i, chunk) in head
            .chunks_mut(stride)
            .chain(rest.chunks_mut(stride))
            .enumerate()
        {
            let ri = if i < r { i } else { i + 1 };
            let factor = chunk[c];
            if factor != 0.0 {
                for (x, &p) in chunk.iter_mut().zip(prow.iter()) {
                    *x -= factor * p;
                }
                chunk[c] = 0.0;
                self.b[ri] -= factor * self.b[r];
            }
        }
        let factor = self.rc[c];
        if factor != 0.0 {
            for (x, &p) in self.rc[..self.ncols].iter_mut().zip(prow[..self.ncols].iter()) {
                *x -= factor * p;
            }
            self.rc[c] = 0.0;
        }
        // snap rounding dust in the rhs; outside the dual pass any negative
        // entry is numerical residue (the primal basis stays feasible),
        // while the dual pass works on genuine negatives
        let scale = 1.0 + self.b.iter().fold(0.0f64, |a, &x| a.max(x.abs()));
        for x in self.b.iter_mut() {
            if x.abs() <= 1e-12 * scale || (!self.dual_pass && *x < 0.0) {
                *x = 0.0;
            }
        }
        self.basis[r] = c;
        self.iterations += 1;
    }

    fn run(&mut self, limit: usize) -> Result<(), LpError> {
        let mut degenerate_streak = 0usize;
        let bland_after = 64 + 8 * self.m();
        let hard_bland = self.iterations + 2_000 + 50 * self.m();
        let mut refreshed_for: Option<usize> = None;
        loop {
            if self.iterations > limit {
                return Err(LpError::IterationLimit);
            }
            if self.iterations % 1024 == 1023 {
                self.refresh_rc();
            }
            let bland = degenerate_streak > bland_after || self.iterations > hard_bland;
            let mut enter = None;
            if bland {
                for c in 0..self.ncols {
                    if self.enterable[c] && !self.artificial[c] && self.rc[c] < -EPS_RC {
                        enter = Some(c);
                        break;
                    }
                }
            } else {
                let mut best = -EPS_RC;
                for c in 0..self.ncols {
                    if self.enterable[c] && !self.artificial[c] && self.rc[c] < best {
                        best = self.rc[c];
                        enter = Some(c);
                    }
                }
            }
            let Some(c) = enter else {
                return Ok(());
            };
            let mut ratio = f64::INFINITY;
            for i in 0..self.m() {
                let a = self.t[i * self.stride + c];
                if a > EPS_PIVOT {
                    ratio = ratio.min(self.b[i].max(0.0) / a);
                }
            }
            if !ratio.is_finite() {
                // distinguish a genuinely unbounded direction from reduced
                // cost drift on a numerically null column
                if refreshed_for != Some(self.iterations) {
                    self.refresh_rc();
                    refreshed_for = Some(self.iterations);
                    continue;
                }
                if self.rc[c] < -1e-6 {
                    return Err(LpError::Unbounded);
                }
                self.enterable[c] = false;
                continue;
            }
            let mut leave = None;
            for i in 0..self.m() {
                let a = self.t[i * self.stride + c];
                if a > EPS_PIVOT && self.b[i].max(0.0) / a == ratio {
                    let better = match leave {
                        None => true,
                        Some(li) => self.basis[i] < self.basis[li],
                    };
                    if better {
                        leave = Some(i);
                    }
                }
            }
            let r = leave.expect("finite ratio has a row");
            if ratio <= 1e-10 {
                degenerate_streak += 1;
            } else {
                degenerate_streak = 0;
            }
            self.pivot(r, c);
        }
    }

    fn phase1_objective_value(&self) -> f64 {
        (0..self.m())
            .filter(|&i| self.artificial[self.basis[i]])
            .map(|i| self.b[i])
            .sum()
    }

    /// Re-optimize after row/column additions and return the solution,
    /// re-evaluated against the unperturbed right-hand side.
    pub fn solve(&mut self) -> Result<LpSolution, LpError> {
        let limit = self.iterations + 400_000 + 200 * (self.m() + self.ncols);
        // columns sidelined as numerically null in an earlier pass get a
        // fresh chance: row additions change the tableau under them
        for c in 0..self.ncols {
            self.enterable[c] = !self.artificial[c];
        }
        // preferred path: dual simplex pulls freshly violated rows back to
        // feasibility without disturbing optimality elsewhere
        self.set_phase_costs(false);
        if !self.dual_simplex(limit)? {
            // dual-infeasible start (general objective): artificial repair
            self.artificial_repair();
            self.set_phase_costs(true);
            self.run(limit)?;
            let scale = 1.0 + self.b.iter().fold(0.0f64, |a, &x| a.max(x.abs()));
            if self.phase1_objective_value() > EPS_PHASE1 * scale {
                return Err(LpError::Infeasible);
            }
            // drive leftover artificials out where possible
            for i in 0..self.m() {
                if self.artificial[self.basis[i]] {
                    let row_start = i * self.stride;
                    let col = (0..self.ncols)
                        .find(|&c| !self.artificial[c] && self.t[row_start + c].abs() > EPS_PIVOT);
                    if let Some(c) = col {
                        self.pivot(i, c);
                    }
                }
            }
            self.set_phase_costs(false);
        }
        // optimize, then re-verify against freshly recomputed reduced costs:
        // incremental drift must not end a solve early, or constraint
        // generation sees slightly suboptimal densities and never settles
        for _ in 0..8 {
            self.run(limit)?;
            self.refresh_rc();
            let improving = (0..self.ncols)
                .any(|c| self.enterable[c] && !self.artificial[c] && self.rc[c] < -EPS_RC);
            if !improving {
                break;
            }
        }

        // exact re-evaluation of the final basis against b_orig
        let m = self.m();
        let mut x = vec![0.0; self.costs.len()];
        let mut value = 0.0;
        for i in 0..m {
            let var = self.var_of_col[self.basis[i]];
            if var != usize::MAX {
                let row = &self.t[i * self.stride..i * self.stride + self.ncols];
                let mut v = 0.0;
                for k in 0..m {
                    v += self.id_sign[k] * row[self.id_col[k]] * self.b_orig[k];
                }
                let v = v.max(0.0);
                x[var] = v;
                value += self.costs[var] * v;
            }
        }
        let dual = (0..m)
            .map(|i| {
                let (c, sign) = self.dual_col[i];
                sign * self.rc[c]
            })
            .collect();
        Ok(LpSolution {
            value,
            x,
            dual,
            iterations: self.iterations,
        })
    }
}

impl Default for IncrementalLp {
    fn default() -> Self {
        Self::new()
    }
}

/// One-shot solve for a general min-LP with ≤ / ≥ / = rows.
///
/// ≥ and = rows with negative rhs are sign-normalized first. Internally this
/// reduces everything to the ≥ form of [`IncrementalLp`]: a ≤ row becomes a
/// negated ≥ row, an = row becomes a ≥ pair.
pub fn solve(lp: &Lp) -> Result<LpSolution, LpError> {
    let mut inc = IncrementalLp::new();
    for (j, &c) in lp.objective.iter().enumerate() {
        let jj = inc.add_variable(c);
        debug_assert_eq!(j, jj);
    }
    // map each input row to its ≥-form children
    let mut children: Vec<Vec<(usize, f64)>> = Vec::with_capacity(lp.rows.len());
    for row in &lp.rows {
        let mut kids = Vec::new();
        match row.rel {
            Rel::Ge => {
                kids.push((inc.add_ge_row(&row.coeffs, row.rhs), 1.0));
            }
            Rel::Le => {
                let neg: Vec<(usize, f64)> = row.coeffs.iter().map(|&(j, a)| (j, -a)).collect();
                kids.push((inc.add_ge_row(&neg, -row.rhs), -1.0));
            }
            Rel::Eq => {
                kids.push((inc.add_ge_row(&row.coeffs, row.rhs), 1.0));
                let neg: Vec<(usize, f64)> = row.coeffs.iter().map(|&(j, a)| (j, -a)).collect();
                // widen the reverse side so the two perturbations leave a
                // nonempty sliver; reporting still uses the true rhs
                let widen = -4.0 * PERTURB * (1.0 + row.rhs.abs());
                kids.push((inc.add_ge_row_shifted(&neg, -row.rhs, widen), -1.0));
            }
        }
        children.push(kids);
    }
    let sol = inc.solve()?;
    // fold child duals back to the input rows
    let mut dual = vec![0.0; lp.rows.len()];
    for (i, kids) in children.iter().enumerate() {
        for &(r, sign) in kids {
            dual[i] += sign * sol.dual[r];
        }
    }
    Ok(LpSolution {
        value: sol.value,
        x: sol.x,
        dual,
        iterations: sol.iterations,
    })
}
