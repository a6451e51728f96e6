//! Reverse-mode automatic differentiation over dense f64 matrices.
//!
//! A `Graph` is a define-by-run tape: builder methods append nodes and return
//! `Var` handles, `backward` walks the tape in reverse creation order (which
//! is a reverse topological order, since parents always precede children) and
//! accumulates gradients. Graphs are rebuilt every training iteration; no
//! caching.
//!
//! Everything is 2-dimensional; scalars are 1x1 matrices. Shape mismatches
//! panic with a message naming the primitive and both shapes. Data-dependent
//! failures (singular solves, non-finite probes) return `Err`.
//!
//! Full `sum`/`mean` reductions add values in ascending order, so permuting
//! sample rows upstream leaves reduction results bit-identical.

use std::rc::Rc;

use ndarray::{Array2, Axis};

use crate::error::{Error, Result};
use crate::linalg::{ordered_sum, LuFactors, Mat};

/// Handle to a node in a [`Graph`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Var(usize);

#[derive(Debug, Clone)]
enum Op {
    Leaf,
    MatMul(Var, Var),
    Add(Var, Var),
    Sub(Var, Var),
    Mul(Var, Var),
    Div(Var, Var),
    /// (n x m) + (1 x m), row vector broadcast down the rows.
    AddRow(Var, Var),
    /// (n x m) + (n x 1), column vector broadcast across the columns.
    AddCol(Var, Var),
    Exp(Var),
    Neg(Var),
    Relu(Var),
    Tanh(Var),
    Sigmoid(Var),
    Softplus(Var),
    PairwiseSqDist(Var, Var),
    Sum(Var),
    Mean(Var),
    SumAxis(Var, usize),
    MeanAxis(Var, usize),
    /// scale * x + shift, elementwise with scalar constants. The shift is
    /// kept in the op record even though its derivative is zero.
    Affine(Var, f64, #[allow(dead_code)] f64),
    /// X = A^-1 B; the LU factors of A are kept for the adjoint solve.
    Solve(Var, Var, Rc<LuFactors>),
    ConcatRows(Vec<Var>),
    Transpose(Var),
}

struct Node {
    value: Mat,
    grad: Option<Mat>,
    op: Op,
}

/// Define-by-run differentiation graph.
#[derive(Default)]
pub struct Graph {
    nodes: Vec<Node>,
}

impl Graph {
    pub fn new() -> Self {
        Graph { nodes: Vec::new() }
    }

    fn push(&mut self, value: Mat, op: Op) -> Var {
        self.nodes.push(Node {
            value,
            grad: None,
            op,
        });
        Var(self.nodes.len() - 1)
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Insert an input node (parameter or data batch).
    pub fn leaf(&mut self, value: Mat) -> Var {
        self.push(value, Op::Leaf)
    }

    pub fn scalar(&mut self, value: f64) -> Var {
        self.leaf(Array2::from_elem((1, 1), value))
    }

    pub fn value(&self, v: Var) -> &Mat {
        &self.nodes[v.0].value
    }

    pub fn scalar_value(&self, v: Var) -> f64 {
        let m = self.value(v);
        assert_eq!(
            m.dim(),
            (1, 1),
            "scalar_value: node is {}x{}",
            m.nrows(),
            m.ncols()
        );
        m[[0, 0]]
    }

    /// Gradient accumulated by the latest `backward`; zeros if unreached.
    pub fn grad(&self, v: Var) -> Mat {
        match &self.nodes[v.0].grad {
            Some(g) => g.clone(),
            None => Array2::zeros(self.nodes[v.0].value.dim()),
        }
    }

    // ── forward primitives ──────────────────────────────────────────────

    pub fn matmul(&mut self, a: Var, b: Var) -> Var {
        let (ar, ac) = self.value(a).dim();
        let (br, bc) = self.value(b).dim();
        assert_eq!(
            ac, br,
            "matmul: inner dimensions differ ({ar}x{ac} vs {br}x{bc})"
        );
        let value = self.value(a).dot(self.value(b));
        self.push(value, Op::MatMul(a, b))
    }

    fn binary_same_shape(&self, name: &str, a: Var, b: Var) {
        let da = self.value(a).dim();
        let db = self.value(b).dim();
        assert_eq!(
            da, db,
            "{name}: shapes differ ({}x{} vs {}x{})",
            da.0, da.1, db.0, db.1
        );
    }

    pub fn add(&mut self, a: Var, b: Var) -> Var {
        self.binary_same_shape("add", a, b);
        let value = self.value(a) + self.value(b);
        self.push(value, Op::Add(a, b))
    }

    pub fn sub(&mut self, a: Var, b: Var) -> Var {
        self.binary_same_shape("sub", a, b);
        let value = self.value(a) - self.value(b);
        self.push(value, Op::Sub(a, b))
    }

    pub fn mul(&mut self, a: Var, b: Var) -> Var {
        self.binary_same_shape("mul", a, b);
        let value = self.value(a) * self.value(b);
        self.push(value, Op::Mul(a, b))
    }

    pub fn div(&mut self, a: Var, b: Var) -> Var {
        self.binary_same_shape("div", a, b);
        let value = self.value(a) / self.value(b);
        self.push(value, Op::Div(a, b))
    }

    pub fn add_row(&mut self, a: Var, row: Var) -> Var {
        let (n, m) = self.value(a).dim();
        let (rr, rc) = self.value(row).dim();
        assert!(
            rr == 1 && rc == m,
            "add_row: expected 1x{m} row for {n}x{m} matrix, got {rr}x{rc}"
        );
        let value = self.value(a) + self.value(row);
        self.push(value, Op::AddRow(a, row))
    }

    pub fn add_col(&mut self, a: Var, col: Var) -> Var {
        let (n, m) = self.value(a).dim();
        let (cr, cc) = self.value(col).dim();
        assert!(
            cr == n && cc == 1,
            "add_col: expected {n}x1 column for {n}x{m} matrix, got {cr}x{cc}"
        );
        let value = self.value(a) + self.value(col);
        self.push(value, Op::AddCol(a, col))
    }

    pub fn exp(&mut self, a: Var) -> Var {
        let value = self.value(a).mapv(f64::exp);
        self.push(value, Op::Exp(a))
    }

    pub fn neg(&mut self, a: Var) -> Var {
        let value = self.value(a).mapv(|x| -x);
        self.push(value, Op::Neg(a))
    }

    pub fn relu(&mut self, a: Var) -> Var {
        let value = self.value(a).mapv(|x| x.max(0.0));
        self.push(value, Op::Relu(a))
    }

    pub fn tanh(&mut self, a: Var) -> Var {
        let value = self.value(a).mapv(f64::tanh);
        self.push(value, Op::Tanh(a))
    }

    pub fn sigmoid(&mut self, a: Var) -> Var {
        let value = self.value(a).mapv(sigmoid);
        self.push(value, Op::Sigmoid(a))
    }

    pub fn softplus(&mut self, a: Var) -> Var {
        let value = self.value(a).mapv(softplus);
        self.push(value, Op::Softplus(a))
    }

    /// Entry (i, j) = squared Euclidean distance between row i of `x` and
    /// row j of `y`. Computed as a direct sum of squared coordinate
    /// differences and floored at zero.
    pub fn pairwise_sq_dist(&mut self, x: Var, y: Var) -> Var {
        let (n, dx) = self.value(x).dim();
        let (m, dy) = self.value(y).dim();
        assert_eq!(
            dx, dy,
            "pairwise_sq_dist: row dimensions differ ({n}x{dx} vs {m}x{dy})"
        );
        let xv = self.value(x);
        let yv = self.value(y);
        let mut d = Array2::zeros((n, m));
        for i in 0..n {
            for j in 0..m {
                let mut s = 0.0;
                for k in 0..dx {
                    let diff = xv[[i, k]] - yv[[j, k]];
                    s += diff * diff;
                }
                d[[i, j]] = s.max(0.0);
            }
        }
        self.push(d, Op::PairwiseSqDist(x, y))
    }

    /// Full reduction to 1x1; addends are summed in ascending value order.
    pub fn sum(&mut self, a: Var) -> Var {
        let vals: Vec<f64> = self.value(a).iter().copied().collect();
        let s = ordered_sum(&vals);
        self.push(Array2::from_elem((1, 1), s), Op::Sum(a))
    }

    /// Full mean to 1x1; same ordering convention as `sum`.
    pub fn mean(&mut self, a: Var) -> Var {
        let vals: Vec<f64> = self.value(a).iter().copied().collect();
        let s = ordered_sum(&vals);
        self.push(
            Array2::from_elem((1, 1), s / vals.len() as f64),
            Op::Mean(a),
        )
    }

    /// Sum along `axis` (0: down rows to 1 x m, 1: across columns to n x 1).
    pub fn sum_axis(&mut self, a: Var, axis: usize) -> Var {
        assert!(axis < 2, "sum_axis: axis must be 0 or 1, got {axis}");
        let v = self.value(a);
        let value = if axis == 0 {
            v.sum_axis(Axis(0)).insert_axis(Axis(0))
        } else {
            v.sum_axis(Axis(1)).insert_axis(Axis(1))
        };
        self.push(value, Op::SumAxis(a, axis))
    }

    pub fn mean_axis(&mut self, a: Var, axis: usize) -> Var {
        assert!(axis < 2, "mean_axis: axis must be 0 or 1, got {axis}");
        let v = self.value(a);
        let len = if axis == 0 { v.nrows() } else { v.ncols() } as f64;
        let value = if axis == 0 {
            v.sum_axis(Axis(0)).insert_axis(Axis(0)) / len
        } else {
            v.sum_axis(Axis(1)).insert_axis(Axis(1)) / len
        };
        self.push(value, Op::MeanAxis(a, axis))
    }

    /// Elementwise `scale * x + shift` with scalar constants.
    pub fn affine(&mut self, a: Var, scale: f64, shift: f64) -> Var {
        let value = self.value(a).mapv(|x| scale * x + shift);
        self.push(value, Op::Affine(a, scale, shift))
    }

    pub fn scale(&mut self, a: Var, scale: f64) -> Var {
        self.affine(a, scale, 0.0)
    }

    pub fn add_scalar(&mut self, a: Var, shift: f64) -> Var {
        self.affine(a, 1.0, shift)
    }

    /// X solving A X = B for square A. Gradients use the adjoint system:
    /// grad_B = A^-T grad_X and grad_A = -grad_B X^T.
    pub fn solve(&mut self, a: Var, b: Var) -> Result<Var> {
        let (ar, ac) = self.value(a).dim();
        let (br, bc) = self.value(b).dim();
        assert_eq!(ar, ac, "solve: matrix must be square, got {ar}x{ac}");
        assert_eq!(
            ac, br,
            "solve: rhs rows must match matrix ({ar}x{ac} vs {br}x{bc})"
        );
        let factors = LuFactors::factor(self.value(a))?;
        let x = factors.solve(self.value(b));
        Ok(self.push(x, Op::Solve(a, b, Rc::new(factors))))
    }

    /// Stack matrices with equal column counts on top of each other.
    pub fn concat_rows(&mut self, parts: &[Var]) -> Var {
        assert!(!parts.is_empty(), "concat_rows: no inputs");
        let cols = self.value(parts[0]).ncols();
        let mut total = 0;
        for &p in parts {
            let (r, c) = self.value(p).dim();
            assert_eq!(
                c,
                cols,
                "concat_rows: column counts differ ({r}x{c} vs first {cols})"
            );
            total += r;
        }
        let mut value = Array2::zeros((total, cols));
        let mut at = 0;
        for &p in parts {
            let v = self.value(p);
            value.slice_mut(ndarray::s![at..at + v.nrows(), ..]).assign(v);
            at += v.nrows();
        }
        self.push(value, Op::ConcatRows(parts.to_vec()))
    }

    pub fn transpose(&mut self, a: Var) -> Var {
        let value = self.value(a).t().to_owned();
        self.push(value, Op::Transpose(a))
    }

    // ── backward ────────────────────────────────────────────────────────

    /// Accumulate d(root)/d(node) into every node reachable from `root`.
    /// Clears previous gradients first; unreachable nodes keep zero.
    pub fn backward(&mut self, root: Var) -> Result<()> {
        let dim = self.value(root).dim();
        if dim != (1, 1) {
            return Err(Error::NonScalarRoot {
                rows: dim.0,
                cols: dim.1,
            });
        }
        for node in &mut self.nodes {
            node.grad = None;
        }
        self.nodes[root.0].grad = Some(Array2::from_elem((1, 1), 1.0));
        for i in (0..=root.0).rev() {
            let Some(g) = self.nodes[i].grad.take() else {
                continue;
            };
            let op = self.nodes[i].op.clone();
            match op {
                Op::Leaf => {}
                Op::MatMul(a, b) => {
                    let da = g.dot(&self.nodes[b.0].value.t());
                    let db = self.nodes[a.0].value.t().dot(&g);
                    self.accumulate(a, da);
                    self.accumulate(b, db);
                }
                Op::Add(a, b) => {
                    self.accumulate(a, g.clone());
                    self.accumulate(b, g.clone());
                }
                Op::Sub(a, b) => {
                    self.accumulate(a, g.clone());
                    self.accumulate(b, g.mapv(|x| -x));
                }
                Op::Mul(a, b) => {
                    let da = &g * &self.nodes[b.0].value;
                    let db = &g * &self.nodes[a.0].value;
                    self.accumulate(a, da);
                    self.accumulate(b, db);
                }
                Op::Div(a, b) => {
                    let bv = &self.nodes[b.0].value;
                    let da = &g / bv;
                    let db = -(&g * &self.nodes[a.0].value) / (bv * bv);
                    self.accumulate(a, da);
                    self.accumulate(b, db);
                }
                Op::AddRow(a, row) => {
                    let drow = g.sum_axis(Axis(0)).insert_axis(Axis(0));
                    self.accumulate(a, g.clone());
                    self.accumulate(row, drow);
                }
                Op::AddCol(a, col) => {
                    let dcol = g.sum_axis(Axis(1)).insert_axis(Axis(1));
                    self.accumulate(a, g.clone());
                    self.accumulate(col, dcol);
                }
                Op::Exp(a) => {
                    let da = &g * &self.nodes[i].value;
                    self.accumulate(a, da);
                }
                Op::Neg(a) => self.accumulate(a, g.mapv(|x| -x)),
                Op::Relu(a) => {
                    let mask = self.nodes[a.0].value.mapv(|x| if x > 0.0 { 1.0 } else { 0.0 });
                    self.accumulate(a, &g * &mask);
                }
                Op::Tanh(a) => {
                    let y = &self.nodes[i].value;
                    let da = &g * &y.mapv(|t| 1.0 - t * t);
                    self.accumulate(a, da);
                }
                Op::Sigmoid(a) => {
                    let y = &self.nodes[i].value;
                    let da = &g * &y.mapv(|s| s * (1.0 - s));
                    self.accumulate(a, da);
                }
                Op::Softplus(a) => {
                    let da = &g * &self.nodes[a.0].value.mapv(sigmoid);
                    self.accumulate(a, da);
                }
                Op::PairwiseSqDist(x, y) => {
                    let xv = self.nodes[x.0].value.clone();
                    let yv = self.nodes[y.0].value.clone();
                    let row_sums = g.sum_axis(Axis(1));
                    let col_sums = g.sum_axis(Axis(0));
                    let mut dx = g.dot(&yv);
                    for (i_row, mut r) in dx.rows_mut().into_iter().enumerate() {
                        let rs = row_sums[i_row];
                        r.zip_mut_with(&xv.row(i_row), |d, &xval| {
                            *d = 2.0 * (rs * xval - *d);
                        });
                    }
                    let mut dy = g.t().dot(&xv);
                    for (j_row, mut r) in dy.rows_mut().into_iter().enumerate() {
                        let cs = col_sums[j_row];
                        r.zip_mut_with(&yv.row(j_row), |d, &yval| {
                            *d = 2.0 * (cs * yval - *d);
                        });
                    }
                    self.accumulate(x, dx);
                    self.accumulate(y, dy);
                }
                Op::Sum(a) => {
                    let s = g[[0, 0]];
                    let da = Array2::from_elem(self.nodes[a.0].value.dim(), s);
                    self.accumulate(a, da);
                }
                Op::Mean(a) => {
                    let dim = self.nodes[a.0].value.dim();
                    let s = g[[0, 0]] / (dim.0 * dim.1) as f64;
                    self.accumulate(a, Array2::from_elem(dim, s));
                }
                Op::SumAxis(a, axis) => {
                    let dim = self.nodes[a.0].value.dim();
                    let da = broadcast_axis(&g, dim, axis, 1.0);
                    self.accumulate(a, da);
                }
                Op::MeanAxis(a, axis) => {
                    let dim = self.nodes[a.0].value.dim();
                    let len = if axis == 0 { dim.0 } else { dim.1 } as f64;
                    let da = broadcast_axis(&g, dim, axis, 1.0 / len);
                    self.accumulate(a, da);
                }
                Op::Affine(a, scale, _) => self.accumulate(a, g.mapv(|x| scale * x)),
                Op::Solve(a, b, ref factors) => {
                    let db = factors.solve_transpose(&g);
                    let da = -db.dot(&self.nodes[i].value.t());
                    self.accumulate(a, da);
                    self.accumulate(b, db);
                }
                Op::ConcatRows(ref parts) => {
                    let mut at = 0;
                    for &p in parts {
                        let rows = self.nodes[p.0].value.nrows();
                        let dp = g.slice(ndarray::s![at..at + rows, ..]).to_owned();
                        self.accumulate(p, dp);
                        at += rows;
                    }
                }
                Op::Transpose(a) => self.accumulate(a, g.t().to_owned()),
            }
            self.nodes[i].grad = Some(g);
        }
        Ok(())
    }

    fn accumulate(&mut self, target: Var, delta: Mat) {
        match &mut self.nodes[target.0].grad {
            Some(g) => *g += &delta,
            slot @ None => *slot = Some(delta),
        }
    }
}

fn broadcast_axis(g: &Mat, dim: (usize, usize), axis: usize, factor: f64) -> Mat {
    let mut out = Array2::zeros(dim);
    if axis == 0 {
        for mut row in out.rows_mut() {
            row.assign(&g.row(0));
        }
    } else {
        for mut col in out.columns_mut() {
            col.assign(&g.column(0));
        }
    }
    out.mapv(|x| x * factor)
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

fn softplus(x: f64) -> f64 {
    x.max(0.0) + (-x.abs()).exp().ln_1p()
}

// ── named parameters ───────────────────────────────────────────────────

/// A named trainable tensor; the graph node for it is created per iteration
/// by [`ModelParams::bind`] since graphs do not outlive an iteration.
#[derive(Debug, Clone)]
pub struct ParamTensor {
    pub name: String,
    pub value: Mat,
    pub trainable: bool,
}

/// Ordered collection of uniquely named parameters.
#[derive(Debug, Clone, Default)]
pub struct ModelParams {
    tensors: Vec<ParamTensor>,
}

impl ModelParams {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, name: impl Into<String>, value: Mat) -> Result<()> {
        let name = name.into();
        if self.tensors.iter().any(|t| t.name == name) {
            return Err(Error::DuplicateParamName(name));
        }
        self.tensors.push(ParamTensor {
            name,
            value,
            trainable: true,
        });
        Ok(())
    }

    pub fn tensors(&self) -> &[ParamTensor] {
        &self.tensors
    }

    pub fn tensors_mut(&mut self) -> &mut [ParamTensor] {
        &mut self.tensors
    }

    pub fn get(&self, name: &str) -> Option<&ParamTensor> {
        self.tensors.iter().find(|t| t.name == name)
    }

    pub fn len(&self) -> usize {
        self.tensors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tensors.is_empty()
    }

    /// Total number of scalar entries across all tensors.
    pub fn param_count(&self) -> usize {
        self.tensors.iter().map(|t| t.value.len()).sum()
    }

    /// Insert one leaf per tensor into `g`, in declaration order.
    pub fn bind(&self, g: &mut Graph) -> BoundParams {
        let vars = self
            .tensors
            .iter()
            .map(|t| g.leaf(t.value.clone()))
            .collect();
        BoundParams { vars }
    }
}

/// Graph handles for a bound [`ModelParams`], index-aligned with it.
#[derive(Debug, Clone)]
pub struct BoundParams {
    vars: Vec<Var>,
}

impl BoundParams {
    /// Assemble from explicit vars, e.g. to split one bound collection that
    /// holds several networks' parameters.
    pub fn from_vars(vars: Vec<Var>) -> Self {
        BoundParams { vars }
    }

    pub fn var(&self, i: usize) -> Var {
        self.vars[i]
    }

    pub fn vars(&self) -> &[Var] {
        &self.vars
    }

    /// Gradients for every bound tensor, in declaration order.
    pub fn grads(&self, g: &Graph) -> Vec<Mat> {
        self.vars.iter().map(|&v| g.grad(v)).collect()
    }
}

/// Compare reverse-mode gradients of a loss against central finite
/// differences with the given step, perturbing every entry of every
/// trainable tensor. Returns the maximum relative error
/// `|ad - fd| / (|fd| + guard)`.
///
/// The guard is `1e-4 * max(1, |loss|)`, an absolute tolerance at the
/// check's own relative precision (the usual atol = rtol * scale pairing).
/// Central differences carry roundoff noise of roughly
/// `eps * kappa * scale / step`, so parameters the loss is exactly
/// invariant to (for instance a projection's output bias, which shifts all
/// pairwise distances equally) report fd values at that noise floor rather
/// than zero; a guard below the floor turns pure noise into spurious
/// relative error. Entries whose gradients are smaller than the guard are
/// still compared, just against the absolute scale.
///
/// The builder must construct the same loss for the same parameter values.
pub fn check_gradients<F>(params: &mut ModelParams, step: f64, build: F) -> Result<f64>
where
    F: Fn(&mut Graph, &BoundParams) -> Result<Var>,
{
    let mut g = Graph::new();
    let bound = params.bind(&mut g);
    let loss = build(&mut g, &bound)?;
    let loss_value = g.scalar_value(loss);
    if !loss_value.is_finite() {
        return Err(Error::NonFinite {
            context: "check_gradients loss".into(),
            iteration: 0,
        });
    }
    g.backward(loss)?;
    let analytic = bound.grads(&g);
    let guard = 1e-4 * loss_value.abs().max(1.0);

    let eval = |params: &mut ModelParams| -> Result<f64> {
        let mut g = Graph::new();
        let bound = params.bind(&mut g);
        let loss = build(&mut g, &bound)?;
        let v = g.scalar_value(loss);
        if !v.is_finite() {
            return Err(Error::NonFinite {
                context: "check_gradients probe".into(),
                iteration: 0,
            });
        }
        Ok(v)
    };

    let mut max_rel = 0.0f64;
    for t in 0..params.len() {
        if !params.tensors()[t].trainable {
            continue;
        }
        let (rows, cols) = params.tensors()[t].value.dim();
        for r in 0..rows {
            for c in 0..cols {
                let original = params.tensors()[t].value[[r, c]];
                params.tensors_mut()[t].value[[r, c]] = original + step;
                let plus = eval(params)?;
                params.tensors_mut()[t].value[[r, c]] = original - step;
                let minus = eval(params)?;
                params.tensors_mut()[t].value[[r, c]] = original;
                let central = (plus - minus) / (2.0 * step);
                let ad = analytic[t][[r, c]];
                let rel = (ad - central).abs() / (central.abs() + guard);
                max_rel = max_rel.max(rel);
            }
        }
    }
    Ok(max_rel)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;
    use rand_chacha::ChaCha8Rng;
    use rand_core::{RngCore, SeedableRng};

    fn uniform(rng: &mut ChaCha8Rng) -> f64 {
        (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    fn rand_mat(rng: &mut ChaCha8Rng, n: usize, m: usize, lo: f64, hi: f64) -> Mat {
        Array2::from_shape_fn((n, m), |_| lo + (hi - lo) * uniform(rng))
    }

    #[test]
    fn relu_negative_is_flat() {
        let mut g = Graph::new();
        let x = g.scalar(-1.0);
        let y = g.relu(x);
        assert_eq!(g.scalar_value(y), 0.0);
        g.backward(y).unwrap();
        assert_eq!(g.grad(x)[[0, 0]], 0.0);
    }

    #[test]
    fn square_gradient() {
        let mut g = Graph::new();
        let x = g.scalar(3.0);
        let y = g.mul(x, x);
        assert_eq!(g.scalar_value(y), 9.0);
        g.backward(y).unwrap();
        assert_eq!(g.grad(x)[[0, 0]], 6.0);
    }

    #[test]
    fn constant_root_leaves_grads_zero() {
        let mut g = Graph::new();
        let w = g.leaf(array![[1.0, 2.0], [3.0, 4.0]]);
        let c = g.scalar(5.0);
        g.backward(c).unwrap();
        assert!(g.grad(w).iter().all(|&v| v == 0.0));
    }

    #[test]
    fn mean_of_linear_map_gradient() {
        // y = mean(W x): dy/dW_ij = x_j / rows(Wx).
        let mut g = Graph::new();
        let w = g.leaf(array![[1.0, -1.0], [0.5, 2.0], [3.0, 0.0]]);
        let x = g.leaf(array![[2.0], [7.0]]);
        let y0 = g.matmul(w, x);
        let y = g.mean(y0);
        g.backward(y).unwrap();
        let gw = g.grad(w);
        for i in 0..3 {
            assert!((gw[[i, 0]] - 2.0 / 3.0).abs() < 1e-15);
            assert!((gw[[i, 1]] - 7.0 / 3.0).abs() < 1e-15);
        }
    }

    #[test]
    fn non_scalar_root_is_an_error() {
        let mut g = Graph::new();
        let x = g.leaf(array![[1.0, 2.0]]);
        assert!(matches!(
            g.backward(x),
            Err(Error::NonScalarRoot { rows: 1, cols: 2 })
        ));
    }

    #[test]
    #[should_panic(expected = "matmul")]
    fn matmul_shape_mismatch_panics() {
        let mut g = Graph::new();
        let a = g.leaf(array![[1.0, 2.0]]);
        let b = g.leaf(array![[1.0, 2.0]]);
        g.matmul(a, b);
    }

    #[test]
    fn quadratic_check_gradients_is_exact() {
        let mut params = ModelParams::new();
        params.push("w", array![[0.3, -1.2], [2.0, 0.7]]).unwrap();
        let err = check_gradients(&mut params, 1e-5, |g, bound| {
            let w = bound.var(0);
            let sq = g.mul(w, w);
            Ok(g.sum(sq))
        })
        .unwrap();
        assert!(err < 1e-9, "relative error {err}");
    }

    #[test]
    fn solve_gradient_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        // Diagonally dominant, hence well conditioned.
        let mut a = rand_mat(&mut rng, 3, 3, -1.0, 1.0);
        for i in 0..3 {
            a[[i, i]] += 4.0;
        }
        let b = rand_mat(&mut rng, 3, 1, -1.0, 1.0);
        let mut params = ModelParams::new();
        params.push("a", a).unwrap();
        params.push("b", b).unwrap();
        let err = check_gradients(&mut params, 1e-5, |g, bound| {
            let x = g.solve(bound.var(0), bound.var(1))?;
            Ok(g.sum(x))
        })
        .unwrap();
        assert!(err < 1e-6, "relative error {err}");
    }

    #[test]
    fn solve_adjoint_directional_derivative() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut a = rand_mat(&mut rng, 4, 4, -1.0, 1.0);
        for i in 0..4 {
            a[[i, i]] += 5.0;
        }
        let b = rand_mat(&mut rng, 4, 2, -1.0, 1.0);
        let da = rand_mat(&mut rng, 4, 4, -1.0, 1.0);
        let db = rand_mat(&mut rng, 4, 2, -1.0, 1.0);

        let loss = |a: &Mat, b: &Mat| -> f64 {
            let mut g = Graph::new();
            let av = g.leaf(a.clone());
            let bv = g.leaf(b.clone());
            let x = g.solve(av, bv).unwrap();
            let s = g.sum(x);
            g.scalar_value(s)
        };

        let mut g = Graph::new();
        let av = g.leaf(a.clone());
        let bv = g.leaf(b.clone());
        let x = g.solve(av, bv).unwrap();
        let s = g.sum(x);
        g.backward(s).unwrap();
        let ga = g.grad(av);
        let gb = g.grad(bv);
        let directional: f64 =
            (&ga * &da).iter().sum::<f64>() + (&gb * &db).iter().sum::<f64>();

        let h = 1e-6;
        let fd = (loss(&(&a + &(h * &da)), &(&b + &(h * &db)))
            - loss(&(&a - &(h * &da)), &(&b - &(h * &db))))
            / (2.0 * h);
        assert!(
            (directional - fd).abs() < 1e-6 * (1.0 + fd.abs()),
            "directional {directional} vs fd {fd}"
        );
    }

    #[test]
    fn singular_solve_reports_condition_diagnostic() {
        let mut g = Graph::new();
        let a = g.leaf(array![[1.0, 1.0], [1.0, 1.0]]);
        let b = g.leaf(array![[1.0], [1.0]]);
        let err = g.solve(a, b).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("singular"), "message: {msg}");
        assert!(msg.contains("ratio"), "message: {msg}");
    }

    #[test]
    fn elementwise_and_reduction_gradients() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let a = rand_mat(&mut rng, 3, 4, 0.5, 2.0);
        let b = rand_mat(&mut rng, 3, 4, 0.5, 2.0);
        let row = rand_mat(&mut rng, 1, 4, -1.0, 1.0);
        let col = rand_mat(&mut rng, 3, 1, -1.0, 1.0);
        let mut params = ModelParams::new();
        params.push("a", a).unwrap();
        params.push("b", b).unwrap();
        params.push("row", row).unwrap();
        params.push("col", col).unwrap();
        let err = check_gradients(&mut params, 1e-6, |g, bound| {
            let (a, b, row, col) = (bound.var(0), bound.var(1), bound.var(2), bound.var(3));
            let q = g.div(a, b);
            let q = g.add_row(q, row);
            let q = g.add_col(q, col);
            let e = g.exp(q);
            let t = g.tanh(b);
            let s = g.sigmoid(a);
            let sp = g.softplus(b);
            let m = g.mul(e, t);
            let m = g.add(m, s);
            let m = g.sub(m, sp);
            let n = g.neg(m);
            let c = g.concat_rows(&[n, m]);
            let ct = g.transpose(c);
            let r0 = g.sum_axis(ct, 0);
            let r1 = g.mean_axis(r0, 1);
            let part = g.sum(r1);
            let m2 = g.mean(m);
            Ok(g.add(part, m2))
        })
        .unwrap();
        assert!(err < 1e-7, "relative error {err}");
    }

    #[test]
    fn pairwise_sq_dist_gradient() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let x = rand_mat(&mut rng, 4, 3, -1.0, 1.0);
        let y = rand_mat(&mut rng, 5, 3, -1.0, 1.0);
        let mut params = ModelParams::new();
        params.push("x", x).unwrap();
        params.push("y", y).unwrap();
        let err = check_gradients(&mut params, 1e-6, |g, bound| {
            let d = g.pairwise_sq_dist(bound.var(0), bound.var(1));
            let h = g.affine(d, -0.5, 0.0);
            let w = g.exp(h);
            Ok(g.sum(w))
        })
        .unwrap();
        assert!(err < 1e-7, "relative error {err}");

        // Self-distance case: both arguments alias one var.
        let mut params = ModelParams::new();
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        params.push("x", rand_mat(&mut rng, 4, 2, -1.0, 1.0)).unwrap();
        let err = check_gradients(&mut params, 1e-6, |g, bound| {
            let d = g.pairwise_sq_dist(bound.var(0), bound.var(0));
            Ok(g.sum(d))
        })
        .unwrap();
        assert!(err < 1e-7, "relative error {err}");
    }

    #[test]
    fn backward_is_bit_deterministic() {
        let run = || {
            let mut rng = ChaCha8Rng::seed_from_u64(42);
            let mut g = Graph::new();
            let a = g.leaf(rand_mat(&mut rng, 6, 5, -2.0, 2.0));
            let b = g.leaf(rand_mat(&mut rng, 5, 4, -2.0, 2.0));
            let c = g.matmul(a, b);
            let e = g.exp(c);
            let s = g.mean(e);
            g.backward(s).unwrap();
            (g.grad(a), g.grad(b))
        };
        let (ga1, gb1) = run();
        let (ga2, gb2) = run();
        assert!(ga1
            .iter()
            .zip(ga2.iter())
            .all(|(x, y)| x.to_bits() == y.to_bits()));
        assert!(gb1
            .iter()
            .zip(gb2.iter())
            .all(|(x, y)| x.to_bits() == y.to_bits()));
    }

    #[test]
    fn duplicate_param_names_rejected() {
        let mut params = ModelParams::new();
        params.push("w", array![[1.0]]).unwrap();
        assert!(matches!(
            params.push("w", array![[2.0]]),
            Err(Error::DuplicateParamName(_))
        ));
    }
}
