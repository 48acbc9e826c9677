//! Dense two-phase tableau simplex for the small linear programs used by the
//! channel classifier (a few hundred cells at most).
//!
//! Solves `min c·x  s.t.  A_eq x = b_eq,  A_ub x <= b_ub,  x >= 0` using
//! Bland's rule, so it terminates on degenerate problems.

const EPS: f64 = 1e-11;

#[derive(Debug, Clone, Default)]
pub(crate) struct LinearProgram {
    pub c: Vec<f64>,
    pub a_eq: Vec<Vec<f64>>,
    pub b_eq: Vec<f64>,
    pub a_ub: Vec<Vec<f64>>,
    pub b_ub: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub(crate) enum LpOutcome {
    Optimal { x: Vec<f64>, objective: f64 },
    Infeasible,
    Unbounded,
}

struct Tableau {
    rows: Vec<Vec<f64>>, // each row: coefficients ++ [rhs]
    cost: Vec<f64>,      // reduced costs ++ [-objective]
    basis: Vec<usize>,
}

impl Tableau {
    fn width(&self) -> usize {
        self.cost.len() - 1
    }

    fn pivot(&mut self, r: usize, col: usize) {
        let p = self.rows[r][col];
        self.rows[r].iter_mut().for_each(|v| *v /= p);
        let pivot_row = self.rows[r].clone();
        for (i, row) in self.rows.iter_mut().enumerate() {
            if i != r {
                let f = row[col];
                if f != 0.0 {
                    row.iter_mut().zip(&pivot_row).for_each(|(v, pv)| *v -= f * pv);
                }
            }
        }
        let f = self.cost[col];
        if f != 0.0 {
            self.cost.iter_mut().zip(&pivot_row).for_each(|(v, pv)| *v -= f * pv);
        }
        self.basis[r] = col;
    }

    /// Runs simplex iterations with columns `>= allowed` barred from entering.
    /// Returns false if unbounded.
    fn optimize(&mut self, allowed: usize) -> bool {
        let w = self.width();
        loop {
            let Some(col) = (0..allowed.min(w)).find(|&j| self.cost[j] < -EPS) else {
                return true;
            };
            let mut best: Option<(usize, f64)> = None;
            for (i, row) in self.rows.iter().enumerate() {
                let a = row[col];
                if a > EPS {
                    let ratio = row[w] / a;
                    match best {
                        None => best = Some((i, ratio)),
                        Some((bi, br)) => {
                            if ratio < br - EPS
                                || (ratio <= br + EPS && self.basis[i] < self.basis[bi])
                            {
                                best = Some((i, ratio));
                            }
                        }
                    }
                }
            }
            match best {
                Some((r, _)) => self.pivot(r, col),
                None => return false,
            }
        }
    }
}

impl LinearProgram {
    pub fn solve(&self) -> LpOutcome {
        let n = self.c.len();
        let m_eq = self.a_eq.len();
        let m_ub = self.a_ub.len();
        let m = m_eq + m_ub;
        // columns: originals, one slack per inequality, one artificial per row
        let art0 = n + m_ub;
        let width = art0 + m;
        let mut rows = Vec::with_capacity(m);
        for (i, (a, &b)) in self
            .a_eq
            .iter()
            .zip(&self.b_eq)
            .chain(self.a_ub.iter().zip(&self.b_ub))
            .enumerate()
        {
            let mut row = vec![0.0; width + 1];
            row[..n].copy_from_slice(a);
            if i >= m_eq {
                row[n + i - m_eq] = 1.0;
            }
            row[width] = b;
            if b < 0.0 {
                row.iter_mut().for_each(|v| *v = -*v);
            }
            row[art0 + i] = 1.0;
            rows.push(row);
        }
        let mut cost = vec![0.0; width + 1];
        for row in &rows {
            for j in 0..art0 {
                cost[j] -= row[j];
            }
            cost[width] -= row[width];
        }
        let mut t = Tableau {
            rows,
            cost,
            basis: (art0..art0 + m).collect(),
        };
        t.optimize(art0);
        if -t.cost[width] > 1e-9 {
            return LpOutcome::Infeasible;
        }
        // drive remaining artificials out of the basis where possible
        for r in 0..m {
            if t.basis[r] >= art0 {
                if let Some(col) = (0..art0).find(|&j| t.rows[r][j].abs() > EPS) {
                    t.pivot(r, col);
                }
            }
        }
        // phase two
        let mut cost = vec![0.0; width + 1];
        cost[..n].copy_from_slice(&self.c);
        for (r, &b) in t.basis.iter().enumerate() {
            let cb = if b < n { self.c[b] } else { 0.0 };
            if cb != 0.0 {
                for (v, rv) in cost.iter_mut().zip(&t.rows[r]) {
                    *v -= cb * rv;
                }
            }
        }
        t.cost = cost;
        if !t.optimize(art0) {
            return LpOutcome::Unbounded;
        }
        let mut x = vec![0.0; n];
        for (r, &b) in t.basis.iter().enumerate() {
            if b < n {
                x[b] = t.rows[r][width];
            }
        }
        let objective = self.c.iter().zip(&x).map(|(c, v)| c * v).sum();
        LpOutcome::Optimal { x, objective }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_textbook_problem() {
        // max 3x + 5y  s.t. x <= 4, 2y <= 12, 3x + 2y <= 18  -> (2, 6), value 36
        let lp = LinearProgram {
            c: vec![-3.0, -5.0],
            a_ub: vec![vec![1.0, 0.0], vec![0.0, 2.0], vec![3.0, 2.0]],
            b_ub: vec![4.0, 12.0, 18.0],
            ..Default::default()
        };
        match lp.solve() {
            LpOutcome::Optimal { x, objective } => {
                assert!((x[0] - 2.0).abs() < 1e-9 && (x[1] - 6.0).abs() < 1e-9);
                assert!((objective + 36.0).abs() < 1e-9);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn detects_infeasible_and_unbounded() {
        let infeasible = LinearProgram {
            c: vec![1.0],
            a_eq: vec![vec![1.0]],
            b_eq: vec![-1.0],
            ..Default::default()
        };
        assert_eq!(infeasible.solve(), LpOutcome::Infeasible);
        let unbounded = LinearProgram {
            c: vec![-1.0, 0.0],
            a_eq: vec![vec![1.0, -1.0]],
            b_eq: vec![0.0],
            ..Default::default()
        };
        assert_eq!(unbounded.solve(), LpOutcome::Unbounded);
    }

    #[test]
    fn negative_rhs_inequality() {
        // min x s.t. -x <= -2  -> x = 2
        let lp = LinearProgram {
            c: vec![1.0],
            a_ub: vec![vec![-1.0]],
            b_ub: vec![-2.0],
            ..Default::default()
        };
        match lp.solve() {
            LpOutcome::Optimal { x, .. } => assert!((x[0] - 2.0).abs() < 1e-12),
            other => panic!("{other:?}"),
        }
    }
}
