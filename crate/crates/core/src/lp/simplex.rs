//! Dense bounded-variable primal simplex (two phases, Bland's entering rule).
//!
//! Column layout: structural variables, then one slack per inequality row, then one
//! artificial per row. Nonbasic columns rest at a finite bound, or at zero when free.
//! The tableau and basic values are periodically rebuilt from the original rows, so rounding
//! does not accumulate.

use super::{LinearProgram, LpError, LpSolution, LpStatus, Relation};

const PIVOT_TOL: f64 = 1e-9;
const COST_TOL: f64 = 1e-9;
/// Bound slack allowed by the first pass of the ratio test.
const FEAS_TOL: f64 = 1e-9;
const REINVERT_EVERY: usize = 64;

struct Tableau {
    m: usize,
    ncols: usize,
    /// Original rows, artificial columns included, `m × ncols`.
    a: Vec<f64>,
    b: Vec<f64>,
    /// `B⁻¹A`, row-major `m × ncols`.
    t: Vec<f64>,
    lower: Vec<f64>,
    upper: Vec<f64>,
    x: Vec<f64>,
    basis: Vec<usize>,
    is_basic: Vec<bool>,
    cost: Vec<f64>,
    /// Reduced costs for the active phase.
    d: Vec<f64>,
    iterations: usize,
    max_iterations: usize,
    since_reinvert: usize,
}

enum Outcome {
    Optimal,
    Unbounded,
}

impl Tableau {
    fn at(&self, i: usize, j: usize) -> f64 {
        self.t[i * self.ncols + j]
    }

    fn set_cost(&mut self, cost: Vec<f64>) {
        self.cost = cost;
        self.price();
    }

    fn price(&mut self) {
        let n = self.ncols;
        self.d.copy_from_slice(&self.cost);
        for r in 0..self.m {
            let cb = self.cost[self.basis[r]];
            if cb != 0.0 {
                for (dj, tj) in self.d.iter_mut().zip(&self.t[r * n..(r + 1) * n]) {
                    *dj -= cb * tj;
                }
            }
        }
        for &k in &self.basis {
            self.d[k] = 0.0;
        }
    }

    /// Pick the entering column by Bland's rule; returns column and direction (+1 / −1).
    fn entering(&self) -> Option<(usize, f64)> {
        for j in 0..self.ncols {
            if self.is_basic[j] || self.lower[j] == self.upper[j] {
                continue;
            }
            let dj = self.d[j];
            let at_lower = self.lower[j].is_finite() && self.x[j] <= self.lower[j];
            let at_upper = self.upper[j].is_finite() && self.x[j] >= self.upper[j];
            if dj < -COST_TOL && !at_upper {
                return Some((j, 1.0));
            }
            if dj > COST_TOL && !at_lower {
                return Some((j, -1.0));
            }
        }
        None
    }

    fn pivot(&mut self, r: usize, j: usize) {
        let n = self.ncols;
        let p = self.at(r, j);
        for k in 0..n {
            self.t[r * n + k] /= p;
        }
        for i in 0..self.m {
            if i == r {
                continue;
            }
            let f = self.t[i * n + j];
            if f != 0.0 {
                for k in 0..n {
                    self.t[i * n + k] -= f * self.t[r * n + k];
                }
                self.t[i * n + j] = 0.0;
            }
        }
        let f = self.d[j];
        if f != 0.0 {
            for k in 0..n {
                self.d[k] -= f * self.t[r * n + k];
            }
            self.d[j] = 0.0;
        }
        let leaving = self.basis[r];
        self.is_basic[leaving] = false;
        self.is_basic[j] = true;
        self.basis[r] = j;
    }

    /// Rebuild `B⁻¹A` from the original rows by Gauss–Jordan elimination on the basis.
    fn reinvert(&mut self) {
        let (m, n) = (self.m, self.ncols);
        let mut bm = vec![0.0; m * m];
        for (r, &k) in self.basis.iter().enumerate() {
            for i in 0..m {
                bm[i * m + r] = self.a[i * n + k];
            }
        }
        let mut t = self.a.clone();
        for col in 0..m {
            let piv = (col..m)
                .max_by(|&p, &q| bm[p * m + col].abs().total_cmp(&bm[q * m + col].abs()))
                .expect("non-empty range");
            let p = bm[piv * m + col];
            if p.abs() < 1e-13 {
                // Numerically singular basis; keep the updated tableau.
                return;
            }
            if piv != col {
                for k in 0..m {
                    bm.swap(piv * m + k, col * m + k);
                }
                for k in 0..n {
                    t.swap(piv * n + k, col * n + k);
                }
            }
            for k in 0..m {
                bm[col * m + k] /= p;
            }
            for k in 0..n {
                t[col * n + k] /= p;
            }
            for i in 0..m {
                let f = bm[i * m + col];
                if i == col || f == 0.0 {
                    continue;
                }
                for k in 0..m {
                    bm[i * m + k] -= f * bm[col * m + k];
                }
                for k in 0..n {
                    t[i * n + k] -= f * t[col * n + k];
                }
            }
        }
        // Row `col` now corresponds to basis position `col`.
        for r in 0..m {
            t[r * n + self.basis[r]] = 1.0;
        }
        self.t = t;
        self.since_reinvert = 0;
        self.price();
        self.recompute_basics();
    }

    /// `x_B = B⁻¹(b − N x_N)`, with `B⁻¹ = T·diag(sign)` read from the artificial columns.
    fn recompute_basics(&mut self) {
        let (m, n) = (self.m, self.ncols);
        let art0 = n - m;
        let mut rhs = self.b.clone();
        for (i, r) in rhs.iter_mut().enumerate() {
            for j in 0..n {
                if !self.is_basic[j] && self.x[j] != 0.0 {
                    *r -= self.a[i * n + j] * self.x[j];
                }
            }
        }
        for r in 0..m {
            let mut v = 0.0;
            for (i, rhs_i) in rhs.iter().enumerate() {
                v += self.at(r, art0 + i) * self.a[i * n + art0 + i] * rhs_i;
            }
            let k = self.basis[r];
            // Artificials locked at zero after phase one stay exactly there.
            self.x[k] = if k >= art0 && self.upper[k] == 0.0 { 0.0 } else { v };
        }
    }

    fn run(&mut self) -> Result<Outcome, LpError> {
        loop {
            let Some((j, dir)) = self.entering() else {
                return Ok(Outcome::Optimal);
            };
            self.iterations += 1;
            if self.iterations > self.max_iterations {
                return Err(LpError::IterationLimit(self.max_iterations));
            }

            // Harris two-pass ratio test: bound the step with a small slack first, then take
            // the largest pivot among the rows that block within that bound.
            let mut theta_max = f64::INFINITY;
            for i in 0..self.m {
                let alpha = self.at(i, j) * dir;
                if alpha.abs() <= PIVOT_TOL {
                    continue;
                }
                let k = self.basis[i];
                let slack = if alpha > 0.0 {
                    self.x[k] - self.lower[k]
                } else {
                    self.upper[k] - self.x[k]
                };
                if slack.is_finite() {
                    let tol = FEAS_TOL * (1.0 + self.x[k].abs());
                    theta_max = theta_max.min((slack.max(0.0) + tol) / alpha.abs());
                }
            }
            let flip = self.upper[j] - self.lower[j];
            let mut step = flip;
            let mut leave: Option<(usize, f64)> = None;
            if flip > theta_max {
                let mut best_alpha = 0.0;
                for i in 0..self.m {
                    let alpha = self.at(i, j) * dir;
                    if alpha.abs() <= PIVOT_TOL {
                        continue;
                    }
                    let k = self.basis[i];
                    let (slack, target) = if alpha > 0.0 {
                        (self.x[k] - self.lower[k], self.lower[k])
                    } else {
                        (self.upper[k] - self.x[k], self.upper[k])
                    };
                    if !slack.is_finite() {
                        continue;
                    }
                    let ratio = slack.max(0.0) / alpha.abs();
                    if ratio <= theta_max && alpha.abs() > best_alpha {
                        best_alpha = alpha.abs();
                        step = ratio;
                        leave = Some((i, target));
                    }
                }
            }
            if !step.is_finite() {
                return Ok(Outcome::Unbounded);
            }

            self.x[j] += dir * step;
            for i in 0..self.m {
                let a = self.at(i, j);
                if a != 0.0 {
                    let k = self.basis[i];
                    self.x[k] -= a * dir * step;
                }
            }
            match leave {
                None => {
                    self.x[j] = if dir > 0.0 { self.upper[j] } else { self.lower[j] };
                }
                Some((r, target)) => {
                    let k = self.basis[r];
                    self.x[k] = target;
                    self.pivot(r, j);
                    self.since_reinvert += 1;
                }
            }
            if self.since_reinvert >= REINVERT_EVERY {
                self.reinvert();
            }
        }
    }
}

pub(super) fn solve(lp: &LinearProgram, tol: f64) -> Result<LpSolution, LpError> {
    let n = lp.num_vars();
    let m = lp.num_constraints();
    let slack_rows: Vec<usize> = (0..m)
        .filter(|&i| lp.constraints()[i].relation != Relation::Eq)
        .collect();
    let n_slack = slack_rows.len();
    let art0 = n + n_slack;
    let ncols = art0 + m;

    let mut lower = Vec::with_capacity(ncols);
    let mut upper = Vec::with_capacity(ncols);
    for v in lp.variables() {
        lower.push(v.lower);
        upper.push(v.upper);
    }
    lower.extend(std::iter::repeat_n(0.0, n_slack + m));
    upper.extend(std::iter::repeat_n(f64::INFINITY, n_slack + m));

    let mut a = vec![0.0; m * ncols];
    for (i, c) in lp.constraints().iter().enumerate() {
        for &(v, coef) in &c.terms {
            a[i * ncols + v.index()] += coef;
        }
    }
    for (s, &i) in slack_rows.iter().enumerate() {
        a[i * ncols + n + s] = match lp.constraints()[i].relation {
            Relation::Le => 1.0,
            _ => -1.0,
        };
    }

    let mut x = vec![0.0; ncols];
    for j in 0..art0 {
        x[j] = if lower[j].is_finite() {
            lower[j]
        } else if upper[j].is_finite() {
            upper[j]
        } else {
            0.0
        };
    }

    let b: Vec<f64> = lp.constraints().iter().map(|c| c.rhs).collect();
    let mut signs = vec![1.0; m];
    for i in 0..m {
        let row = &a[i * ncols..i * ncols + art0];
        let r = b[i] - row.iter().zip(&x).map(|(p, q)| p * q).sum::<f64>();
        signs[i] = if r >= 0.0 { 1.0 } else { -1.0 };
        a[i * ncols + art0 + i] = signs[i];
        x[art0 + i] = r.abs();
    }

    // The initial basis is diag(sign), its own inverse.
    let mut t = a.clone();
    for i in 0..m {
        if signs[i] < 0.0 {
            for k in 0..ncols {
                t[i * ncols + k] = -t[i * ncols + k];
            }
        }
    }

    let basis: Vec<usize> = (art0..ncols).collect();
    let mut is_basic = vec![false; ncols];
    for &k in &basis {
        is_basic[k] = true;
    }

    let mut tab = Tableau {
        m,
        ncols,
        a,
        b,
        t,
        lower,
        upper,
        x,
        basis,
        is_basic,
        cost: Vec::new(),
        d: vec![0.0; ncols],
        iterations: 0,
        max_iterations: 200 * (m + ncols) + 1000,
        since_reinvert: 0,
    };

    // Phase one: minimise the sum of artificials.
    let mut phase1 = vec![0.0; ncols];
    for c in phase1.iter_mut().skip(art0) {
        *c = 1.0;
    }
    tab.set_cost(phase1);
    tab.run()?;
    tab.reinvert();
    let infeasibility: f64 = tab.x[art0..].iter().sum();
    let scale = 1.0 + tab.b.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
    if infeasibility > tol.max(1e-9 * scale) {
        return Ok(LpSolution::without_solution(LpStatus::Infeasible, n, m, tab.iterations));
    }

    // Lock artificials at zero and push basic ones out where possible.
    for j in art0..ncols {
        tab.upper[j] = 0.0;
        tab.x[j] = 0.0;
    }
    for r in 0..m {
        if tab.basis[r] < art0 {
            continue;
        }
        let candidate = (0..art0)
            .filter(|&j| !tab.is_basic[j])
            .max_by(|&p, &q| tab.at(r, p).abs().total_cmp(&tab.at(r, q).abs()));
        if let Some(j) = candidate {
            if tab.at(r, j).abs() > PIVOT_TOL {
                tab.pivot(r, j);
            }
        }
    }
    tab.reinvert();

    let mut cost = vec![0.0; ncols];
    cost[..n].copy_from_slice(&lp.objective_coefficients());
    tab.set_cost(cost);
    if let Outcome::Unbounded = tab.run()? {
        return Ok(LpSolution::without_solution(LpStatus::Unbounded, n, m, tab.iterations));
    }
    tab.reinvert();

    // y = c_Bᵀ B⁻¹; column i of B⁻¹ is T[:, art_i]·sign_i.
    let mut dual = vec![0.0; m];
    for (i, yi) in dual.iter_mut().enumerate() {
        let mut s = 0.0;
        for r in 0..m {
            s += tab.cost[tab.basis[r]] * tab.at(r, art0 + i);
        }
        *yi = s * signs[i];
    }

    let c = lp.objective_coefficients();
    let mut reduced = c.clone();
    for (i, con) in lp.constraints().iter().enumerate() {
        for &(v, coef) in &con.terms {
            reduced[v.index()] -= dual[i] * coef;
        }
    }

    let primal: Vec<f64> = tab.x[..n].to_vec();
    let objective = lp.objective_value(&primal);
    let mut dual_objective = lp.objective_offset();
    for (i, con) in lp.constraints().iter().enumerate() {
        dual_objective += dual[i] * con.rhs;
    }
    for (j, v) in lp.variables().iter().enumerate() {
        let dj = reduced[j];
        let bound = if dj > 0.0 { v.lower } else { v.upper };
        // A zero reduced cost contributes nothing; guard the 0·∞ product.
        if dj != 0.0 {
            dual_objective += dj * if bound.is_finite() { bound } else { primal[j] };
        }
    }

    Ok(LpSolution {
        status: LpStatus::Optimal,
        objective,
        dual_objective,
        primal,
        dual,
        reduced_costs: reduced,
        iterations: tab.iterations,
    })
}
