//! Two-receiver broadcast channels `P(y,z|x)` and the structural classes the
//! capacity results need: deterministic outputs, degradedness (an LP), and the
//! more-capable property (a multistart search over input laws).

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::lp::{LinearProgram, LpOutcome};
use crate::prob_core::{entropy_of, Alphabet, ConditionalPmf, JointPmf, ProbError, Result, TOL_ZERO};
use crate::search::{restart_rng, SearchBudget};
use crate::simplex;

/// A more-capable violation must be below `-TOL_CLASS` to count.
pub const TOL_CLASS: f64 = 1e-7;
/// Largest equality residual accepted as a degradedness witness.
pub const TOL_DEGRADED: f64 = 1e-8;
pub const DEFAULT_CLASS_BUDGET: SearchBudget = SearchBudget::new(200, 500);

/// Row-major channel matrix: `rows[x][out]`.
pub type Matrix = Vec<Vec<f64>>;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChannelSpec {
    x_alpha: Alphabet,
    y_alpha: Alphabet,
    z_alpha: Alphabet,
    pyz_x: ConditionalPmf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Receiver {
    Y,
    Z,
}

impl ChannelSpec {
    /// Wraps a table indexed `[x][y][z]`.
    pub fn from_table(x_size: usize, y_size: usize, z_size: usize, table: Vec<f64>) -> Result<Self> {
        let x_alpha = Alphabet::new("X", x_size)?;
        let y_alpha = Alphabet::new("Y", y_size)?;
        let z_alpha = Alphabet::new("Z", z_size)?;
        let pyz_x = ConditionalPmf::new(
            vec![x_alpha.clone()],
            vec![y_alpha.clone(), z_alpha.clone()],
            table,
        )?;
        Ok(Self {
            x_alpha,
            y_alpha,
            z_alpha,
            pyz_x,
        })
    }

    /// Channel whose outputs are conditionally independent given `X`:
    /// `P(y,z|x) = P(y|x) P(z|x)`.
    pub fn from_marginals(py_x: &Matrix, pz_x: &Matrix) -> Result<Self> {
        if py_x.len() != pz_x.len() || py_x.is_empty() {
            return Err(ProbError::InvalidArgument(
                "marginal channels must share the input alphabet".into(),
            ));
        }
        let ny = py_x[0].len();
        let nz = pz_x[0].len();
        let mut table = Vec::with_capacity(py_x.len() * ny * nz);
        for (ry, rz) in py_x.iter().zip(pz_x) {
            if ry.len() != ny || rz.len() != nz {
                return Err(ProbError::InvalidArgument("ragged channel matrix".into()));
            }
            for &a in ry {
                for &b in rz {
                    table.push(a * b);
                }
            }
        }
        Self::from_table(py_x.len(), ny, nz, table)
    }

    pub fn x_alpha(&self) -> &Alphabet {
        &self.x_alpha
    }

    pub fn y_alpha(&self) -> &Alphabet {
        &self.y_alpha
    }

    pub fn z_alpha(&self) -> &Alphabet {
        &self.z_alpha
    }

    pub fn pyz_x(&self) -> &ConditionalPmf {
        &self.pyz_x
    }

    /// Raw `[x][y][z]` table.
    pub fn table(&self) -> &[f64] {
        self.pyz_x.table()
    }

    /// Marginal channel `P(y|x)` (or `P(z|x)`) as a matrix.
    pub fn marginal(&self, which: Receiver) -> Matrix {
        let (ny, nz) = (self.y_alpha.size(), self.z_alpha.size());
        (0..self.x_alpha.size())
            .map(|x| {
                let row = self.pyz_x.row(x);
                match which {
                    Receiver::Y => (0..ny).map(|y| row[y * nz..(y + 1) * nz].iter().sum()).collect(),
                    Receiver::Z => (0..nz).map(|z| (0..ny).map(|y| row[y * nz + z]).sum()).collect(),
                }
            })
            .collect()
    }

    /// The same channel with the receivers exchanged.
    pub fn swapped(&self) -> Self {
        let (nx, ny, nz) = (self.x_alpha.size(), self.y_alpha.size(), self.z_alpha.size());
        let mut table = vec![0.0; nx * ny * nz];
        for x in 0..nx {
            let row = self.pyz_x.row(x);
            for y in 0..ny {
                for z in 0..nz {
                    table[x * nz * ny + z * ny + y] = row[y * nz + z];
                }
            }
        }
        Self::from_table(nx, nz, ny, table).expect("permutation of a valid channel")
    }

    /// Joint `P(x) P(y,z|x)` over `(X, Y, Z)`.
    pub fn joint_with_input(&self, px: &[f64]) -> Result<JointPmf> {
        JointPmf::new(vec![self.x_alpha.clone()], px.to_vec())?.chain_compose(&self.pyz_x)
    }
}

/// Ready-made channel matrices.
pub mod channels {
    use super::Matrix;

    pub fn bsc(p: f64) -> Matrix {
        vec![vec![1.0 - p, p], vec![p, 1.0 - p]]
    }

    /// Binary erasure channel with outputs `{0, 1, erased}`.
    pub fn bec(e: f64) -> Matrix {
        vec![vec![1.0 - e, 0.0, e], vec![0.0, 1.0 - e, e]]
    }

    pub fn identity(n: usize) -> Matrix {
        deterministic(n, n, |x| x)
    }

    /// Output is always symbol 0 of a size-`n_out` alphabet.
    pub fn constant(n_in: usize, n_out: usize) -> Matrix {
        deterministic(n_in, n_out, |_| 0)
    }

    pub fn deterministic(n_in: usize, n_out: usize, f: impl Fn(usize) -> usize) -> Matrix {
        (0..n_in)
            .map(|x| {
                let mut r = vec![0.0; n_out];
                r[f(x)] = 1.0;
                r
            })
            .collect()
    }

    /// Channel `a` followed by channel `b`.
    pub fn cascade(a: &Matrix, b: &Matrix) -> Matrix {
        a.iter()
            .map(|row| {
                (0..b[0].len())
                    .map(|z| row.iter().zip(b).map(|(p, brow)| p * brow[z]).sum())
                    .collect()
            })
            .collect()
    }
}

/// `I(X;Out)` for input law `px` through `w`, in bits.
pub fn io_mutual_information(px: &[f64], w: &Matrix) -> f64 {
    let n_out = w[0].len();
    let mut out = vec![0.0; n_out];
    let mut cond = 0.0;
    for (&p, row) in px.iter().zip(w) {
        if p <= TOL_ZERO {
            continue;
        }
        for (o, &q) in out.iter_mut().zip(row) {
            *o += p * q;
        }
        cond += p * entropy_of(row);
    }
    (entropy_of(&out) - cond).max(0.0)
}

pub fn is_deterministic_output(ch: &ChannelSpec, which: Receiver) -> bool {
    ch.marginal(which)
        .iter()
        .all(|row| row.iter().any(|&p| p >= 1.0 - TOL_ZERO))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DegradedReport {
    pub feasible: bool,
    /// `Q(z|y)` rows when feasible.
    pub witness: Option<Matrix>,
    /// Largest `|sum_y Q(z|y) P(y|x) - P(z|x)|` at the LP optimum.
    pub residual: f64,
}

/// Is `Z` a (stochastically) degraded version of `Y`? Minimizes the largest
/// equality residual of `Q P_{Y|X} = P_{Z|X}` over row-stochastic `Q`.
pub fn degradedness_test(ch: &ChannelSpec) -> DegradedReport {
    let py = ch.marginal(Receiver::Y);
    let pz = ch.marginal(Receiver::Z);
    let (nx, ny, nz) = (py.len(), py[0].len(), pz[0].len());
    // variables: q[y*nz + z], then t
    let nv = ny * nz + 1;
    let t = ny * nz;
    let mut lp = LinearProgram {
        c: {
            let mut c = vec![0.0; nv];
            c[t] = 1.0;
            c
        },
        ..Default::default()
    };
    for y in 0..ny {
        let mut row = vec![0.0; nv];
        row[y * nz..(y + 1) * nz].iter_mut().for_each(|v| *v = 1.0);
        lp.a_eq.push(row);
        lp.b_eq.push(1.0);
    }
    for x in 0..nx {
        for z in 0..nz {
            let mut up = vec![0.0; nv];
            for y in 0..ny {
                up[y * nz + z] = py[x][y];
            }
            let mut down: Vec<f64> = up.iter().map(|v| -v).collect();
            up[t] = -1.0;
            down[t] = -1.0;
            lp.a_ub.push(up);
            lp.b_ub.push(pz[x][z]);
            lp.a_ub.push(down);
            lp.b_ub.push(-pz[x][z]);
        }
    }
    let x = match lp.solve() {
        LpOutcome::Optimal { x, .. } => x,
        // cannot happen: uniform Q with large t is feasible and t >= 0
        _ => unreachable!("degradedness LP is always feasible and bounded"),
    };
    let q: Matrix = (0..ny)
        .map(|y| {
            let mut r: Vec<f64> = x[y * nz..(y + 1) * nz].iter().map(|v| v.max(0.0)).collect();
            let s: f64 = r.iter().sum();
            r.iter_mut().for_each(|v| *v /= s);
            r
        })
        .collect();
    let residual = degradation_residual(&py, &pz, &q);
    let feasible = residual <= TOL_DEGRADED;
    DegradedReport {
        feasible,
        witness: feasible.then_some(q),
        residual,
    }
}

/// `max_{x,z} |sum_y q[y][z] py[x][y] - pz[x][z]|`.
pub fn degradation_residual(py: &Matrix, pz: &Matrix, q: &Matrix) -> f64 {
    let composed = channels::cascade(py, q);
    composed
        .iter()
        .zip(pz)
        .flat_map(|(a, b)| a.iter().zip(b).map(|(u, v)| (u - v).abs()))
        .fold(0.0, f64::max)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum MoreCapableVerdict {
    /// No input law with `I(X;Y) < I(X;Z)` was found. Heuristic.
    HoldsUpToSearch,
    /// A certificate input law was found.
    Violated,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MoreCapableReport {
    pub verdict: MoreCapableVerdict,
    /// Input law achieving the violation, when violated.
    pub witness: Option<Vec<f64>>,
    /// Smallest `I(X;Y) - I(X;Z)` found.
    pub min_gap: f64,
    /// Input law achieving `min_gap`.
    pub argmin: Vec<f64>,
    pub budget: SearchBudget,
    pub evaluations: usize,
}

/// Searches the input simplex for `min I(X;Y) - I(X;Z)`.
///
/// Restart 0 starts from the uniform law, the others from Dirichlet(1)
/// draws; each is refined by a pairwise mass-transfer pattern search.
pub fn more_capable_test(ch: &ChannelSpec, budget: SearchBudget, seed: u64, tol: f64) -> MoreCapableReport {
    let py = ch.marginal(Receiver::Y);
    let pz = ch.marginal(Receiver::Z);
    let nx = py.len();
    let gap = |p: &[f64]| io_mutual_information(p, &py) - io_mutual_information(p, &pz);
    let restarts = budget.restarts.max(1);
    let runs: Vec<(Vec<f64>, f64, usize)> = (0..restarts)
        .into_par_iter()
        .map(|r| {
            let mut rng = restart_rng(seed, r);
            let start = if r == 0 {
                vec![1.0 / nx as f64; nx]
            } else {
                simplex::sample_uniform(nx, &mut rng)
            };
            refine_input(start, budget.steps, &gap, &mut rng)
        })
        .collect();
    let evaluations = runs.iter().map(|r| r.2).sum();
    // first minimum wins so the result does not depend on scheduling
    let (argmin, min_gap, _) = runs
        .into_iter()
        .reduce(|a, b| if b.1 < a.1 { b } else { a })
        .expect("at least one restart");
    let violated = min_gap < -tol;
    MoreCapableReport {
        verdict: if violated {
            MoreCapableVerdict::Violated
        } else {
            MoreCapableVerdict::HoldsUpToSearch
        },
        witness: violated.then(|| argmin.clone()),
        min_gap,
        argmin,
        budget,
        evaluations,
    }
}

/// Pattern search moving mass between pairs of coordinates; minimizes `f`.
fn refine_input<R: Rng>(
    mut p: Vec<f64>,
    steps: usize,
    f: &impl Fn(&[f64]) -> f64,
    rng: &mut R,
) -> (Vec<f64>, f64, usize) {
    let n = p.len();
    let mut best = f(&p);
    let mut evals = 1;
    if n < 2 {
        return (p, best, evals);
    }
    let mut h: f64 = 0.25;
    let mut fails = 0;
    for _ in 0..steps {
        let i = rng.random_range(0..n);
        let mut j = rng.random_range(0..n - 1);
        if j >= i {
            j += 1;
        }
        let mut improved = false;
        for (from, to) in [(i, j), (j, i)] {
            let d = h.min(p[from]);
            if d <= 0.0 {
                continue;
            }
            let mut q = p.clone();
            q[from] -= d;
            q[to] += d;
            let v = f(&q);
            evals += 1;
            if v < best {
                best = v;
                p = q;
                improved = true;
                break;
            }
        }
        if improved {
            fails = 0;
        } else {
            fails += 1;
            if fails >= n * (n - 1) {
                h *= 0.5;
                fails = 0;
            }
        }
    }
    (p, best, evals)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClassReport {
    pub y_deterministic: bool,
    pub z_deterministic: bool,
    pub degraded: DegradedReport,
    pub more_capable: MoreCapableReport,
}

pub fn classify(ch: &ChannelSpec, budget: SearchBudget, seed: u64, tol: f64) -> ClassReport {
    ClassReport {
        y_deterministic: is_deterministic_output(ch, Receiver::Y),
        z_deterministic: is_deterministic_output(ch, Receiver::Z),
        degraded: degradedness_test(ch),
        more_capable: more_capable_test(ch, budget, seed, tol),
    }
}

#[cfg(test)]
mod tests {
    use super::channels::*;
    use super::*;
    use crate::prob_core::binary_entropy;
    use approx::assert_abs_diff_eq;

    fn ch(py: Matrix, pz: Matrix) -> ChannelSpec {
        ChannelSpec::from_marginals(&py, &pz).unwrap()
    }

    const SMALL: SearchBudget = SearchBudget::new(20, 200);

    #[test]
    fn deterministic_outputs() {
        assert!(is_deterministic_output(&ch(identity(2), bsc(0.1)), Receiver::Y));
        assert!(!is_deterministic_output(&ch(bsc(0.1), identity(2)), Receiver::Y));
        let c = ch(deterministic(4, 2, |x| x % 2), identity(4));
        assert!(is_deterministic_output(&c, Receiver::Y));
        assert!(is_deterministic_output(&c, Receiver::Z));
    }

    #[test]
    fn marginals_and_swap() {
        let c = ch(bsc(0.1), bec(0.3));
        assert_eq!(c.marginal(Receiver::Y).len(), 2);
        let s = c.swapped();
        for (a, b) in s.marginal(Receiver::Y).iter().flatten().zip(bec(0.3).iter().flatten()) {
            assert_abs_diff_eq!(*a, *b, epsilon = 1e-15);
        }
    }

    #[test]
    fn identical_marginals_are_degraded_with_identity() {
        let c = ch(bsc(0.1), bsc(0.1));
        let d = degradedness_test(&c);
        assert!(d.feasible);
        assert!(d.residual < 1e-12);
        for (a, b) in d.witness.unwrap().iter().flatten().zip(identity(2).iter().flatten()) {
            assert_abs_diff_eq!(*a, *b, epsilon = 1e-9);
        }
    }

    #[test]
    fn bsc_pair_is_degraded_with_cascade_crossover() {
        let c = ch(bsc(0.1), bsc(0.2));
        let d = degradedness_test(&c);
        assert!(d.feasible);
        let q = d.witness.unwrap();
        let expected = (0.2 - 0.1) / (1.0 - 2.0 * 0.1);
        assert_abs_diff_eq!(expected, 0.125, epsilon = 1e-15);
        assert_abs_diff_eq!(q[0][1], expected, epsilon = 1e-9);
        assert_abs_diff_eq!(q[1][0], expected, epsilon = 1e-9);
    }

    #[test]
    fn bec_versus_bsc_is_not_degraded() {
        let c = ch(bec(0.5), bsc(0.1));
        let d = degradedness_test(&c);
        assert!(!d.feasible);
        assert!(d.witness.is_none());
        // Q must send the erasure symbol to a mix of 0/1; the 3x2 system forces
        // a residual of at least 0.1 on one coordinate (see the integration
        // test for an independent brute-force check).
        assert!(d.residual > 0.05, "residual {}", d.residual);
    }

    #[test]
    fn more_capable_examples() {
        let useless_z = ch(bsc(0.1), constant(2, 1));
        let r = more_capable_test(&useless_z, SMALL, 0, TOL_CLASS);
        assert_eq!(r.verdict, MoreCapableVerdict::HoldsUpToSearch);
        assert!(r.min_gap >= -1e-12, "{}", r.min_gap);

        let r = more_capable_test(&ch(identity(2), bsc(0.1)), SMALL, 0, TOL_CLASS);
        assert_eq!(r.verdict, MoreCapableVerdict::HoldsUpToSearch);

        let c = ch(bsc(0.2), identity(2));
        let uniform_gap = io_mutual_information(&[0.5, 0.5], &bsc(0.2)) - 1.0;
        assert_abs_diff_eq!(uniform_gap, (1.0 - binary_entropy(0.2)) - 1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(uniform_gap, -0.7219, epsilon = 1e-4);
        let r = more_capable_test(&c, SMALL, 0, TOL_CLASS);
        assert_eq!(r.verdict, MoreCapableVerdict::Violated);
        assert!(r.min_gap <= uniform_gap + 1e-12);
        assert!(r.witness.is_some());
    }

    #[test]
    fn io_mi_matches_joint_measure() {
        let c = ch(bec(0.3), bsc(0.2));
        let px = [0.3, 0.7];
        let j = c.joint_with_input(&px).unwrap();
        assert_abs_diff_eq!(
            io_mutual_information(&px, &c.marginal(Receiver::Y)),
            j.info_measure(&["X"], &["Y"], &[]).unwrap(),
            epsilon = 1e-14
        );
        assert_abs_diff_eq!(
            io_mutual_information(&px, &c.marginal(Receiver::Z)),
            j.info_measure(&["X"], &["Z"], &[]).unwrap(),
            epsilon = 1e-14
        );
    }
}
