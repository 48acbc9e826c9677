//! Dense probability tables over finite alphabets and the information
//! measures built on top of them.
//!
//! A [`JointPmf`] is a row-major table over an ordered list of named axes
//! (the last axis varies fastest). Axes are referenced by name everywhere,
//! and groups of axes are plain slices of names, so `I(KUV;Y|T)` is written
//! `info_measure(&["K", "U", "V"], &["Y"], &["T"])`.
//!
//! All measures are in bits. Cells with mass at or below [`TOL_ZERO`] are
//! treated as zero (`0 log 0 = 0`).

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Normalization tolerance for PMFs and conditional slices.
pub const TOL_NORM: f64 = 1e-9;
/// Entries at or below this mass are treated as exact zeros.
pub const TOL_ZERO: f64 = 1e-12;
/// Information values in `[-TOL_NEGATIVE, 0)` are rounding noise and clamp to 0.
pub const TOL_NEGATIVE: f64 = 1e-12;
/// Upper bound on the number of cells of any dense table.
pub const MAX_CELLS: usize = 10_000_000;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ProbError {
    #[error("negative probability {value} at cell {index}")]
    NegativeEntry { index: usize, value: f64 },
    #[error("table sums to {sum}, expected 1")]
    NotNormalized { sum: f64 },
    #[error("shape mismatch: expected {expected} cells, got {got}")]
    ShapeMismatch { expected: usize, got: usize },
    #[error("alphabet `{0}` must have at least one symbol")]
    EmptyAlphabet(String),
    #[error("unknown axis `{0}`")]
    UnknownAxis(String),
    #[error("axis `{0}` already present")]
    AxisCollision(String),
    #[error("axis `{name}` has size {expected} in the base but {got} in the factor")]
    AxisSizeMismatch {
        name: String,
        expected: usize,
        got: usize,
    },
    #[error("axis groups overlap")]
    OverlappingGroups,
    #[error("table of {0} cells exceeds the dense limit")]
    TooLarge(usize),
    #[error("information measure evaluated to {0}, below the rounding tolerance")]
    NegativeInformation(f64),
    #[error("{0}")]
    InvalidArgument(String),
}

pub type Result<T> = std::result::Result<T, ProbError>;

/// A named finite alphabet `{0, .., size-1}`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Alphabet {
    name: String,
    size: usize,
}

impl Alphabet {
    pub fn new(name: impl Into<String>, size: usize) -> Result<Self> {
        let name = name.into();
        if size == 0 {
            return Err(ProbError::EmptyAlphabet(name));
        }
        Ok(Self { name, size })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn size(&self) -> usize {
        self.size
    }
}

fn cell_count(axes: &[Alphabet]) -> Result<usize> {
    let mut n: usize = 1;
    for a in axes {
        n = n.checked_mul(a.size).ok_or(ProbError::TooLarge(usize::MAX))?;
        if n > MAX_CELLS {
            return Err(ProbError::TooLarge(n));
        }
    }
    Ok(n)
}

fn check_unique(axes: &[Alphabet]) -> Result<()> {
    for (i, a) in axes.iter().enumerate() {
        if axes[..i].iter().any(|b| b.name == a.name) {
            return Err(ProbError::AxisCollision(a.name.clone()));
        }
    }
    Ok(())
}

fn check_entries(table: &[f64]) -> Result<f64> {
    let mut sum = 0.0;
    for (index, &value) in table.iter().enumerate() {
        if !value.is_finite() || value < 0.0 {
            return Err(ProbError::NegativeEntry { index, value });
        }
        sum += value;
    }
    Ok(sum)
}

/// Row-major strides for the given sizes.
fn strides(sizes: &[usize]) -> Vec<usize> {
    let mut s = vec![1; sizes.len()];
    for i in (0..sizes.len().saturating_sub(1)).rev() {
        s[i] = s[i + 1] * sizes[i + 1];
    }
    s
}

/// Walks every cell of a row-major table of shape `sizes` and, for each,
/// reports the cell index together with a secondary linear index formed with
/// `weights` (one weight per axis).
fn for_each_mapped(sizes: &[usize], weights: &[usize], mut visit: impl FnMut(usize, usize)) {
    let total: usize = sizes.iter().product();
    let mut counters = vec![0usize; sizes.len()];
    let mut mapped = 0usize;
    for cell in 0..total {
        visit(cell, mapped);
        let mut k = sizes.len();
        while k > 0 {
            k -= 1;
            counters[k] += 1;
            mapped += weights[k];
            if counters[k] < sizes[k] {
                break;
            }
            mapped -= weights[k] * sizes[k];
            counters[k] = 0;
        }
    }
}

/// Checks a raw table against its axes and wraps it. The table is never
/// renormalized.
pub fn validate_pmf(table: Vec<f64>, axes: Vec<Alphabet>) -> Result<JointPmf> {
    check_unique(&axes)?;
    let expected = cell_count(&axes)?;
    if table.len() != expected {
        return Err(ProbError::ShapeMismatch {
            expected,
            got: table.len(),
        });
    }
    let sum = check_entries(&table)?;
    if (sum - 1.0).abs() > TOL_NORM {
        return Err(ProbError::NotNormalized { sum });
    }
    Ok(JointPmf { axes, table })
}

/// A joint probability mass function over an ordered tuple of alphabets.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct JointPmf {
    axes: Vec<Alphabet>,
    table: Vec<f64>,
}

impl JointPmf {
    pub fn new(axes: Vec<Alphabet>, table: Vec<f64>) -> Result<Self> {
        validate_pmf(table, axes)
    }

    /// Uniform distribution over the given axes.
    pub fn uniform(axes: Vec<Alphabet>) -> Result<Self> {
        check_unique(&axes)?;
        let n = cell_count(&axes)?;
        Ok(Self {
            axes,
            table: vec![1.0 / n as f64; n],
        })
    }

    /// Point mass on the cell with the given multi-index.
    pub fn point_mass(axes: Vec<Alphabet>, at: &[usize]) -> Result<Self> {
        check_unique(&axes)?;
        let n = cell_count(&axes)?;
        if at.len() != axes.len() || at.iter().zip(&axes).any(|(&i, a)| i >= a.size) {
            return Err(ProbError::InvalidArgument(format!(
                "index {at:?} out of range"
            )));
        }
        let sizes: Vec<usize> = axes.iter().map(|a| a.size).collect();
        let s = strides(&sizes);
        let mut table = vec![0.0; n];
        table[at.iter().zip(&s).map(|(i, st)| i * st).sum::<usize>()] = 1.0;
        Ok(Self { axes, table })
    }

    pub fn axes(&self) -> &[Alphabet] {
        &self.axes
    }

    pub fn table(&self) -> &[f64] {
        &self.table
    }

    pub fn sizes(&self) -> Vec<usize> {
        self.axes.iter().map(|a| a.size).collect()
    }

    pub fn axis_names(&self) -> Vec<&str> {
        self.axes.iter().map(|a| a.name.as_str()).collect()
    }

    pub fn axis_position(&self, name: &str) -> Result<usize> {
        self.axes
            .iter()
            .position(|a| a.name == name)
            .ok_or_else(|| ProbError::UnknownAxis(name.to_string()))
    }

    pub fn has_axis(&self, name: &str) -> bool {
        self.axes.iter().any(|a| a.name == name)
    }

    /// Probability of the cell with the given multi-index.
    pub fn get(&self, index: &[usize]) -> f64 {
        let s = strides(&self.sizes());
        self.table[index.iter().zip(&s).map(|(i, st)| i * st).sum::<usize>()]
    }

    fn positions(&self, names: &[&str]) -> Result<Vec<usize>> {
        names.iter().map(|n| self.axis_position(n)).collect()
    }

    /// Marginal table over the axes at `keep` (in that order), as a flat
    /// row-major vector.
    fn project(&self, keep: &[usize]) -> Vec<f64> {
        let sizes = self.sizes();
        let kept: Vec<usize> = keep.iter().map(|&k| sizes[k]).collect();
        let kept_strides = strides(&kept);
        let mut weights = vec![0usize; sizes.len()];
        for (slot, &k) in keep.iter().enumerate() {
            weights[k] = kept_strides[slot];
        }
        let mut out = vec![0.0; kept.iter().product()];
        let table = &self.table;
        for_each_mapped(&sizes, &weights, |cell, t| out[t] += table[cell]);
        out
    }

    /// Sums out every axis not named in `keep`; the result follows the order
    /// of `keep`.
    pub fn marginalize(&self, keep: &[&str]) -> Result<JointPmf> {
        let pos = self.positions(keep)?;
        let axes: Vec<Alphabet> = pos.iter().map(|&p| self.axes[p].clone()).collect();
        check_unique(&axes)?;
        Ok(JointPmf {
            table: self.project(&pos),
            axes,
        })
    }

    /// Glues a conditional factor onto this joint: the result is
    /// `base(x) * factor(out | x[given])` over `base.axes ++ factor.output`.
    pub fn chain_compose(&self, factor: &ConditionalPmf) -> Result<JointPmf> {
        let sizes = self.sizes();
        let mut given_pos = Vec::with_capacity(factor.given.len());
        for g in &factor.given {
            let p = self.axis_position(&g.name)?;
            if sizes[p] != g.size {
                return Err(ProbError::AxisSizeMismatch {
                    name: g.name.clone(),
                    expected: sizes[p],
                    got: g.size,
                });
            }
            given_pos.push(p);
        }
        for o in &factor.output {
            if self.has_axis(&o.name) {
                return Err(ProbError::AxisCollision(o.name.clone()));
            }
        }
        let mut axes = self.axes.clone();
        axes.extend(factor.output.iter().cloned());
        check_unique(&axes)?;
        let n = cell_count(&axes)?;

        let gs = strides(&factor.given.iter().map(|a| a.size).collect::<Vec<_>>());
        let mut weights = vec![0usize; sizes.len()];
        for (slot, &p) in given_pos.iter().enumerate() {
            weights[p] = gs[slot];
        }
        let cols = factor.cols();
        let mut table = vec![0.0; n];
        for_each_mapped(&sizes, &weights, |cell, row| {
            let mass = self.table[cell];
            if mass == 0.0 {
                return;
            }
            let src = factor.row(row);
            let dst = &mut table[cell * cols..(cell + 1) * cols];
            for (d, &q) in dst.iter_mut().zip(src) {
                *d = mass * q;
            }
        });
        Ok(JointPmf { axes, table })
    }

    /// Reorders axes; `order` must be a permutation of the axis names.
    pub fn permute(&self, order: &[&str]) -> Result<JointPmf> {
        if order.len() != self.axes.len() {
            return Err(ProbError::InvalidArgument(
                "permutation must name every axis".into(),
            ));
        }
        self.marginalize(order)
    }

    /// Mutual information `I(A;B|C)` in bits.
    ///
    /// `A`, `B`, `C` must be pairwise disjoint, except that `A == B` (as sets)
    /// is allowed and yields the conditional entropy `H(A|C)`. An empty `A` or
    /// `B` gives 0.
    pub fn info_measure(&self, a: &[&str], b: &[&str], c: &[&str]) -> Result<f64> {
        let a = self.positions(a)?;
        let b = self.positions(b)?;
        let c = self.positions(c)?;
        check_groups(&a, &b, &c)?;
        clamp(self.mi_positions(&a, &b, &c))
    }

    /// Conditional entropy `H(A|C)` in bits.
    pub fn entropy(&self, a: &[&str], c: &[&str]) -> Result<f64> {
        self.info_measure(a, a, c)
    }

    fn mi_positions(&self, a: &[usize], b: &[usize], c: &[usize]) -> f64 {
        if a.is_empty() || b.is_empty() {
            return 0.0;
        }
        let sizes = self.sizes();
        let nc: usize = c.iter().map(|&k| sizes[k]).product();
        let na: usize = a.iter().map(|&k| sizes[k]).product();
        if same_set(a, b) {
            let keep: Vec<usize> = c.iter().chain(a).copied().collect();
            let p = self.project(&keep);
            let mut h = 0.0;
            for ci in 0..nc {
                let row = &p[ci * na..(ci + 1) * na];
                let pc: f64 = row.iter().sum();
                if pc <= TOL_ZERO {
                    continue;
                }
                for &pac in row {
                    if pac > TOL_ZERO {
                        h += pac * (pc / pac).log2();
                    }
                }
            }
            return h;
        }
        let nb: usize = b.iter().map(|&k| sizes[k]).product();
        let keep: Vec<usize> = c.iter().chain(a).chain(b).copied().collect();
        let p = self.project(&keep);
        let mut total = 0.0;
        let mut pa = vec![0.0; na];
        let mut pb = vec![0.0; nb];
        for ci in 0..nc {
            let block = &p[ci * na * nb..(ci + 1) * na * nb];
            pa.iter_mut().for_each(|v| *v = 0.0);
            pb.iter_mut().for_each(|v| *v = 0.0);
            let mut pc = 0.0;
            for ai in 0..na {
                for bi in 0..nb {
                    let v = block[ai * nb + bi];
                    pa[ai] += v;
                    pb[bi] += v;
                    pc += v;
                }
            }
            if pc <= TOL_ZERO {
                continue;
            }
            for ai in 0..na {
                if pa[ai] <= TOL_ZERO {
                    continue;
                }
                for bi in 0..nb {
                    let v = block[ai * nb + bi];
                    if v > TOL_ZERO {
                        total += v * ((v * pc) / (pa[ai] * pb[bi])).log2();
                    }
                }
            }
        }
        total
    }
}

fn same_set(a: &[usize], b: &[usize]) -> bool {
    a.len() == b.len() && a.iter().all(|x| b.contains(x))
}

fn has_dupes(g: &[usize]) -> bool {
    g.iter().enumerate().any(|(i, x)| g[..i].contains(x))
}

fn check_groups(a: &[usize], b: &[usize], c: &[usize]) -> Result<()> {
    if has_dupes(a) || has_dupes(b) || has_dupes(c) {
        return Err(ProbError::OverlappingGroups);
    }
    let touches = |x: &[usize], y: &[usize]| x.iter().any(|v| y.contains(v));
    if touches(a, c) || touches(b, c) {
        return Err(ProbError::OverlappingGroups);
    }
    if touches(a, b) && !same_set(a, b) {
        return Err(ProbError::OverlappingGroups);
    }
    Ok(())
}

fn clamp(v: f64) -> Result<f64> {
    if v >= 0.0 {
        Ok(v)
    } else if v >= -TOL_NEGATIVE {
        Ok(0.0)
    } else {
        Err(ProbError::NegativeInformation(v))
    }
}

/// A conditional PMF `P(output | given)`: one normalized row per given-tuple.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConditionalPmf {
    given: Vec<Alphabet>,
    output: Vec<Alphabet>,
    table: Vec<f64>,
}

impl ConditionalPmf {
    pub fn new(given: Vec<Alphabet>, output: Vec<Alphabet>, table: Vec<f64>) -> Result<Self> {
        let mut all = given.clone();
        all.extend(output.iter().cloned());
        check_unique(&all)?;
        let rows = cell_count(&given)?;
        let cols = cell_count(&output)?;
        let expected = cell_count(&all)?;
        if table.len() != expected {
            return Err(ProbError::ShapeMismatch {
                expected,
                got: table.len(),
            });
        }
        for r in 0..rows {
            let sum = check_entries(&table[r * cols..(r + 1) * cols]).map_err(|e| match e {
                ProbError::NegativeEntry { index, value } => ProbError::NegativeEntry {
                    index: r * cols + index,
                    value,
                },
                other => other,
            })?;
            if (sum - 1.0).abs() > TOL_NORM {
                return Err(ProbError::NotNormalized { sum });
            }
        }
        Ok(Self {
            given,
            output,
            table,
        })
    }

    /// Every row uniform.
    pub fn uniform(given: Vec<Alphabet>, output: Vec<Alphabet>) -> Result<Self> {
        let rows = cell_count(&given)?;
        let cols = cell_count(&output)?;
        Self::new(given, output, vec![1.0 / cols as f64; rows * cols])
    }

    /// Row `r` puts all its mass on column `map(r)`.
    pub fn deterministic(
        given: Vec<Alphabet>,
        output: Vec<Alphabet>,
        map: impl Fn(usize) -> usize,
    ) -> Result<Self> {
        let rows = cell_count(&given)?;
        let cols = cell_count(&output)?;
        let mut table = vec![0.0; rows * cols];
        for r in 0..rows {
            let c = map(r);
            if c >= cols {
                return Err(ProbError::InvalidArgument(format!(
                    "deterministic map sends row {r} to column {c} of {cols}"
                )));
            }
            table[r * cols + c] = 1.0;
        }
        Self::new(given, output, table)
    }

    /// The same row for every given-tuple.
    pub fn constant_rows(given: Vec<Alphabet>, output: Vec<Alphabet>, row: &[f64]) -> Result<Self> {
        let rows = cell_count(&given)?;
        let table = row
            .iter()
            .copied()
            .cycle()
            .take(rows * row.len())
            .collect();
        Self::new(given, output, table)
    }

    /// Conditional of `output` given `given` computed from a joint. Rows whose
    /// conditioning mass is zero default to uniform.
    pub fn of_joint(joint: &JointPmf, given: &[&str], output: &[&str]) -> Result<Self> {
        let gp = joint.positions(given)?;
        let op = joint.positions(output)?;
        if gp.iter().any(|p| op.contains(p)) {
            return Err(ProbError::OverlappingGroups);
        }
        let keep: Vec<usize> = gp.iter().chain(&op).copied().collect();
        let mut table = joint.project(&keep);
        let g_axes: Vec<Alphabet> = gp.iter().map(|&p| joint.axes[p].clone()).collect();
        let o_axes: Vec<Alphabet> = op.iter().map(|&p| joint.axes[p].clone()).collect();
        let cols = cell_count(&o_axes)?;
        for row in table.chunks_mut(cols) {
            let s: f64 = row.iter().sum();
            if s <= TOL_ZERO {
                row.iter_mut().for_each(|v| *v = 1.0 / cols as f64);
            } else {
                row.iter_mut().for_each(|v| *v /= s);
            }
        }
        Self::new(g_axes, o_axes, table)
    }

    pub fn given(&self) -> &[Alphabet] {
        &self.given
    }

    pub fn output(&self) -> &[Alphabet] {
        &self.output
    }

    pub fn table(&self) -> &[f64] {
        &self.table
    }

    pub fn rows(&self) -> usize {
        self.table.len() / self.cols()
    }

    pub fn cols(&self) -> usize {
        self.output.iter().map(|a| a.size).product()
    }

    pub fn row(&self, r: usize) -> &[f64] {
        let c = self.cols();
        &self.table[r * c..(r + 1) * c]
    }

    /// Mutable row access for in-place search moves; callers keep rows on the
    /// simplex.
    pub(crate) fn row_mut(&mut self, r: usize) -> &mut [f64] {
        let c = self.cols();
        &mut self.table[r * c..(r + 1) * c]
    }

    /// Renames the axes without touching the table.
    pub fn renamed(&self, given: &[&str], output: &[&str]) -> Result<Self> {
        if given.len() != self.given.len() || output.len() != self.output.len() {
            return Err(ProbError::InvalidArgument("rename arity mismatch".into()));
        }
        let g = self
            .given
            .iter()
            .zip(given)
            .map(|(a, n)| Alphabet::new(*n, a.size))
            .collect::<Result<Vec<_>>>()?;
        let o = self
            .output
            .iter()
            .zip(output)
            .map(|(a, n)| Alphabet::new(*n, a.size))
            .collect::<Result<Vec<_>>>()?;
        Self::new(g, o, self.table.clone())
    }
}

/// Residuals of the two telescoping identities relating `W`, `Y^n`, `Z^n`:
///
/// * `I(W;Z^n) = sum_i [ I(W Y^{i-1}; Z_i^n) - I(W Y^i; Z_{i+1}^n) ]`
/// * `sum_i I(Z_i; Y^{i-1} | W Z_{i+1}^n) = sum_i I(Y_i; Z_{i+1}^n | W Y^{i-1})`
///
/// with `Y^0` and `Z_{n+1}^n` empty. Returns the absolute differences.
pub fn csiszar_identity_residuals(
    joint: &JointPmf,
    w: &[&str],
    ys: &[&str],
    zs: &[&str],
) -> Result<(f64, f64)> {
    let n = ys.len();
    if n == 0 || zs.len() != n {
        return Err(ProbError::InvalidArgument(
            "need n >= 1 outputs on each side".into(),
        ));
    }

    let lhs1 = joint.info_measure(w, zs, &[])?;
    let mut rhs1 = 0.0;
    for i in 0..n {
        // Y^{i-1} = ys[..i], Y^i = ys[..=i], Z_i^n = zs[i..], Z_{i+1}^n = zs[i+1..]
        rhs1 += joint.info_measure(&[w, &ys[..i]].concat(), &zs[i..], &[])?;
        rhs1 -= joint.info_measure(&[w, &ys[..=i]].concat(), &zs[i + 1..], &[])?;
    }

    let mut lhs2 = 0.0;
    let mut rhs2 = 0.0;
    for i in 0..n {
        lhs2 += joint.info_measure(&[zs[i]], &ys[..i], &[w, &zs[i + 1..]].concat())?;
        rhs2 += joint.info_measure(&[ys[i]], &zs[i + 1..], &[w, &ys[..i]].concat())?;
    }
    Ok(((lhs1 - rhs1).abs(), (lhs2 - rhs2).abs()))
}

/// Binary entropy function in bits.
pub fn binary_entropy(p: f64) -> f64 {
    entropy_of(&[p, 1.0 - p])
}

/// Entropy in bits of a probability vector.
pub fn entropy_of(p: &[f64]) -> f64 {
    p.iter()
        .filter(|&&v| v > TOL_ZERO)
        .map(|&v| -v * v.log2())
        .sum()
}
