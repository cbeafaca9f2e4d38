//! Define-by-run reverse-mode automatic differentiation over [`Tensor`]s.
//!
//! A [`Tape`] records every operation of one forward pass. Leaves are either
//! parameters (gradients wanted) or constants. [`Tape::backward`] sweeps the
//! recorded nodes in reverse order and accumulates gradients into every
//! parameter. A fresh tape is built for every forward pass, so sequences of
//! different length need no special handling.
//!
//! All operations work on matrices. `add` and `mul` broadcast any dimension
//! of size one, which covers bias rows, scalar gates and outer sums.

use crate::error::{Error, Result};
use crate::tensor::{matmul_nt, matmul_raw, matmul_tn, Tensor};

/// Handle to a node recorded on a [`Tape`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Var(usize);

impl Var {
    pub fn index(self) -> usize {
        self.0
    }
}

#[derive(Clone, Debug)]
enum Op {
    Leaf,
    MatMul(Var, Var),
    Add(Var, Var),
    Sub(Var, Var),
    Mul(Var, Var),
    Scale(Var, f64),
    Concat { parts: Vec<Var>, axis: usize },
    SumAxis(Var),
    Transpose(Var),
    Clamp(Var, f64, f64),
    SumAll(Var),
    Sigmoid(Var),
    Tanh(Var),
    Ln(Var),
    LeakyRelu(Var, f64),
    Softmax(Var, usize),
    MaskedSoftmaxRows(Var),
}

#[derive(Clone, Debug)]
struct Node {
    value: Tensor,
    op: Op,
    needs_grad: bool,
}

/// Recorded computation graph for one forward pass.
#[derive(Clone, Debug, Default)]
pub struct Tape {
    nodes: Vec<Node>,
}

/// Gradients produced by [`Tape::backward`], indexed by node.
#[derive(Clone, Debug)]
pub struct Gradients {
    grads: Vec<Option<Tensor>>,
    shapes: Vec<[usize; 2]>,
}

impl Gradients {
    pub fn get(&self, var: Var) -> Option<&Tensor> {
        self.grads.get(var.0).and_then(Option::as_ref)
    }

    /// Gradient of `var`, or zeros when the loss does not depend on it.
    pub fn wrt(&self, var: Var) -> Tensor {
        match self.get(var) {
            Some(g) => g.clone(),
            None => {
                let [r, c] = self.shapes[var.0];
                Tensor::zeros(r, c)
            }
        }
    }
}

fn broadcast_shape(op: &'static str, a: [usize; 2], b: [usize; 2]) -> Result<[usize; 2]> {
    let mut out = [0; 2];
    for d in 0..2 {
        out[d] = match (a[d], b[d]) {
            (x, y) if x == y => x,
            (1, y) => y,
            (x, 1) => x,
            _ => {
                return Err(Error::shape(
                    op,
                    format!("cannot broadcast {}x{} with {}x{}", a[0], a[1], b[0], b[1]),
                ))
            }
        };
    }
    Ok(out)
}

fn broadcast_zip(a: &Tensor, b: &Tensor, out: [usize; 2], f: impl Fn(f64, f64) -> f64) -> Tensor {
    let [ar, ac] = a.shape();
    let [br, bc] = b.shape();
    let (ad, bd) = (a.data(), b.data());
    let mut data = Vec::with_capacity(out[0] * out[1]);
    for r in 0..out[0] {
        let (ra, rb) = (if ar == 1 { 0 } else { r }, if br == 1 { 0 } else { r });
        for c in 0..out[1] {
            let (ca, cb) = (if ac == 1 { 0 } else { c }, if bc == 1 { 0 } else { c });
            data.push(f(ad[ra * ac + ca], bd[rb * bc + cb]));
        }
    }
    Tensor::from_parts(out[0], out[1], data)
}

/// Sums `grad` down to `shape`, undoing a broadcast.
fn reduce_to(grad: Tensor, shape: [usize; 2]) -> Tensor {
    if grad.shape() == shape {
        return grad;
    }
    let [gr, gc] = grad.shape();
    let mut out = vec![0.0; shape[0] * shape[1]];
    for r in 0..gr {
        let tr = if shape[0] == 1 { 0 } else { r };
        for c in 0..gc {
            let tc = if shape[1] == 1 { 0 } else { c };
            out[tr * shape[1] + tc] += grad.get(r, c);
        }
    }
    Tensor::from_parts(shape[0], shape[1], out)
}

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

impl Tape {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// A leaf whose gradient is tracked.
    pub fn param(&mut self, value: Tensor) -> Var {
        self.push_leaf(value, true)
    }

    /// A leaf treated as data; no gradient flows into it.
    pub fn constant(&mut self, value: Tensor) -> Var {
        self.push_leaf(value, false)
    }

    fn push_leaf(&mut self, value: Tensor, needs_grad: bool) -> Var {
        self.nodes.push(Node { value, op: Op::Leaf, needs_grad });
        Var(self.nodes.len() - 1)
    }

    pub fn value(&self, var: Var) -> &Tensor {
        &self.nodes[var.0].value
    }

    pub fn shape(&self, var: Var) -> [usize; 2] {
        self.nodes[var.0].value.shape()
    }

    fn record(&mut self, name: &'static str, value: Tensor, op: Op, inputs: &[Var]) -> Result<Var> {
        if !value.is_finite() {
            return Err(Error::NonFinite { op: name });
        }
        let needs_grad = inputs.iter().any(|v| self.nodes[v.0].needs_grad);
        self.nodes.push(Node { value, op, needs_grad });
        Ok(Var(self.nodes.len() - 1))
    }

    pub fn matmul(&mut self, a: Var, b: Var) -> Result<Var> {
        let (av, bv) = (self.value(a), self.value(b));
        if av.cols() != bv.rows() {
            return Err(Error::shape(
                "matmul",
                format!("{}x{} * {}x{}", av.rows(), av.cols(), bv.rows(), bv.cols()),
            ));
        }
        let out = matmul_raw(av, bv);
        self.record("matmul", out, Op::MatMul(a, b), &[a, b])
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var> {
        let shape = broadcast_shape("add", self.shape(a), self.shape(b))?;
        let out = broadcast_zip(self.value(a), self.value(b), shape, |x, y| x + y);
        self.record("add", out, Op::Add(a, b), &[a, b])
    }

    pub fn sub(&mut self, a: Var, b: Var) -> Result<Var> {
        let shape = broadcast_shape("sub", self.shape(a), self.shape(b))?;
        let out = broadcast_zip(self.value(a), self.value(b), shape, |x, y| x - y);
        self.record("sub", out, Op::Sub(a, b), &[a, b])
    }

    /// Elementwise product with broadcasting.
    pub fn mul(&mut self, a: Var, b: Var) -> Result<Var> {
        let shape = broadcast_shape("mul", self.shape(a), self.shape(b))?;
        let out = broadcast_zip(self.value(a), self.value(b), shape, |x, y| x * y);
        self.record("mul", out, Op::Mul(a, b), &[a, b])
    }

    pub fn scale(&mut self, a: Var, factor: f64) -> Result<Var> {
        let out = self.value(a).map(|v| v * factor);
        self.record("scale", out, Op::Scale(a, factor), &[a])
    }

    /// Concatenates along `axis` (0 stacks rows, 1 joins columns).
    pub fn concat(&mut self, parts: &[Var], axis: usize) -> Result<Var> {
        if parts.is_empty() || axis > 1 {
            return Err(Error::shape("concat", "need at least one part and axis 0 or 1"));
        }
        let shapes: Vec<[usize; 2]> = parts.iter().map(|&p| self.shape(p)).collect();
        let keep = 1 - axis;
        if shapes.iter().any(|s| s[keep] != shapes[0][keep]) {
            return Err(Error::shape("concat", format!("axis {axis} with shapes {shapes:?}")));
        }
        let out = if axis == 0 {
            let rows = shapes.iter().map(|s| s[0]).sum();
            let mut data = Vec::with_capacity(rows * shapes[0][1]);
            for &p in parts {
                data.extend_from_slice(self.value(p).data());
            }
            Tensor::from_parts(rows, shapes[0][1], data)
        } else {
            let rows = shapes[0][0];
            let cols = shapes.iter().map(|s| s[1]).sum();
            let mut data = Vec::with_capacity(rows * cols);
            for r in 0..rows {
                for &p in parts {
                    data.extend_from_slice(self.value(p).row_slice(r));
                }
            }
            Tensor::from_parts(rows, cols, data)
        };
        self.record("concat", out, Op::Concat { parts: parts.to_vec(), axis }, parts)
    }

    /// Sums over `axis`, keeping it with size one.
    pub fn sum_axis(&mut self, a: Var, axis: usize) -> Result<Var> {
        let v = self.value(a);
        let [r, c] = v.shape();
        let out = match axis {
            0 => {
                let mut data = vec![0.0; c];
                for i in 0..r {
                    for (o, x) in data.iter_mut().zip(v.row_slice(i)) {
                        *o += x;
                    }
                }
                Tensor::from_parts(1, c, data)
            }
            1 => Tensor::from_parts(r, 1, (0..r).map(|i| v.row_slice(i).iter().sum()).collect()),
            _ => return Err(Error::shape("sum_axis", format!("axis {axis} out of range"))),
        };
        self.record("sum_axis", out, Op::SumAxis(a), &[a])
    }

    pub fn sum_all(&mut self, a: Var) -> Result<Var> {
        let out = Tensor::from_parts(1, 1, vec![self.value(a).sum()]);
        self.record("sum_all", out, Op::SumAll(a), &[a])
    }

    pub fn transpose(&mut self, a: Var) -> Result<Var> {
        let out = self.value(a).transpose();
        self.record("transpose", out, Op::Transpose(a), &[a])
    }

    /// Clips into `[lo, hi]`; the gradient is zero where clipping applied.
    pub fn clamp(&mut self, a: Var, lo: f64, hi: f64) -> Result<Var> {
        if lo.partial_cmp(&hi).is_none_or(|o| o == std::cmp::Ordering::Greater) {
            return Err(Error::invalid(format!("clamp bounds {lo} > {hi}")));
        }
        let out = self.value(a).map(|v| v.clamp(lo, hi));
        self.record("clamp", out, Op::Clamp(a, lo, hi), &[a])
    }

    pub fn sigmoid(&mut self, a: Var) -> Result<Var> {
        let out = self.value(a).map(sigmoid);
        self.record("sigmoid", out, Op::Sigmoid(a), &[a])
    }

    pub fn tanh(&mut self, a: Var) -> Result<Var> {
        let out = self.value(a).map(f64::tanh);
        self.record("tanh", out, Op::Tanh(a), &[a])
    }

    /// Natural logarithm; non-positive inputs produce a non-finite error.
    pub fn ln(&mut self, a: Var) -> Result<Var> {
        let out = self.value(a).map(f64::ln);
        self.record("ln", out, Op::Ln(a), &[a])
    }

    pub fn leaky_relu(&mut self, a: Var, slope: f64) -> Result<Var> {
        let out = self.value(a).map(|v| if v > 0.0 { v } else { slope * v });
        self.record("leaky_relu", out, Op::LeakyRelu(a, slope), &[a])
    }

    /// Softmax normalising along `axis`.
    pub fn softmax(&mut self, a: Var, axis: usize) -> Result<Var> {
        if axis > 1 {
            return Err(Error::shape("softmax", format!("axis {axis} out of range")));
        }
        let v = self.value(a);
        let out = if axis == 1 {
            softmax_rows(v, None)
        } else {
            softmax_rows(&v.transpose(), None).transpose()
        };
        self.record("softmax", out, Op::Softmax(a, axis), &[a])
    }

    /// Row-wise softmax restricted to entries where `mask` is true. Masked
    /// entries are zero; a row with no unmasked entry is all zeros.
    pub fn masked_softmax_rows(&mut self, a: Var, mask: Vec<bool>) -> Result<Var> {
        if mask.len() != self.value(a).len() {
            return Err(Error::shape(
                "masked_softmax_rows",
                format!("mask of {} for {} values", mask.len(), self.value(a).len()),
            ));
        }
        let out = softmax_rows(self.value(a), Some(&mask));
        self.record("masked_softmax_rows", out, Op::MaskedSoftmaxRows(a), &[a])
    }

    /// Reverse sweep from a scalar `loss`.
    pub fn backward(&self, loss: Var) -> Result<Gradients> {
        let loss_shape = self.shape(loss);
        if loss_shape != [1, 1] {
            return Err(Error::shape(
                "backward",
                format!("loss must be scalar, got {}x{}", loss_shape[0], loss_shape[1]),
            ));
        }
        let mut grads: Vec<Option<Tensor>> = vec![None; self.nodes.len()];
        grads[loss.0] = Some(Tensor::ones(1, 1));

        for idx in (0..=loss.0).rev() {
            let Some(grad) = grads[idx].take() else { continue };
            let node = &self.nodes[idx];
            if !node.needs_grad {
                continue;
            }
            if !grad.is_finite() {
                return Err(Error::NonFinite { op: "backward" });
            }
            self.propagate(node, &grad, &mut grads);
            grads[idx] = Some(grad);
        }

        let shapes = self.nodes.iter().map(|n| n.value.shape()).collect();
        for (g, n) in grads.iter_mut().zip(&self.nodes) {
            if !n.needs_grad {
                *g = None;
            }
        }
        Ok(Gradients { grads, shapes })
    }

    fn accumulate(&self, grads: &mut [Option<Tensor>], var: Var, g: Tensor) {
        if !self.nodes[var.0].needs_grad {
            return;
        }
        match &mut grads[var.0] {
            Some(existing) => existing.add_assign(&g),
            slot => *slot = Some(g),
        }
    }

    fn propagate(&self, node: &Node, grad: &Tensor, grads: &mut [Option<Tensor>]) {
        let out = &node.value;
        match &node.op {
            Op::Leaf => {}
            Op::MatMul(a, b) => {
                if self.nodes[a.0].needs_grad {
                    self.accumulate(grads, *a, matmul_nt(grad, self.value(*b)));
                }
                if self.nodes[b.0].needs_grad {
                    self.accumulate(grads, *b, matmul_tn(self.value(*a), grad));
                }
            }
            Op::Add(a, b) => {
                self.accumulate(grads, *a, reduce_to(grad.clone(), self.shape(*a)));
                self.accumulate(grads, *b, reduce_to(grad.clone(), self.shape(*b)));
            }
            Op::Sub(a, b) => {
                self.accumulate(grads, *a, reduce_to(grad.clone(), self.shape(*a)));
                self.accumulate(grads, *b, reduce_to(grad.map(|v| -v), self.shape(*b)));
            }
            Op::Mul(a, b) => {
                let shape = grad.shape();
                if self.nodes[a.0].needs_grad {
                    let g = broadcast_zip(grad, self.value(*b), shape, |g, y| g * y);
                    self.accumulate(grads, *a, reduce_to(g, self.shape(*a)));
                }
                if self.nodes[b.0].needs_grad {
                    let g = broadcast_zip(grad, self.value(*a), shape, |g, x| g * x);
                    self.accumulate(grads, *b, reduce_to(g, self.shape(*b)));
                }
            }
            Op::Scale(a, f) => self.accumulate(grads, *a, grad.map(|g| g * f)),
            Op::Concat { parts, axis } => {
                let mut offset = 0;
                for &p in parts {
                    let [pr, pc] = self.shape(p);
                    let g = if *axis == 0 {
                        let start = offset * pc;
                        offset += pr;
                        Tensor::from_parts(pr, pc, grad.data()[start..start + pr * pc].to_vec())
                    } else {
                        let mut data = Vec::with_capacity(pr * pc);
                        for r in 0..pr {
                            data.extend_from_slice(&grad.row_slice(r)[offset..offset + pc]);
                        }
                        offset += pc;
                        Tensor::from_parts(pr, pc, data)
                    };
                    self.accumulate(grads, p, g);
                }
            }
            Op::SumAxis(a) | Op::SumAll(a) => {
                let [r, c] = self.shape(*a);
                let g = broadcast_zip(&Tensor::zeros(r, c), grad, [r, c], |_, g| g);
                self.accumulate(grads, *a, g);
            }
            Op::Transpose(a) => self.accumulate(grads, *a, grad.transpose()),
            Op::Clamp(a, lo, hi) => {
                let g = zip_same(grad, self.value(*a), |g, x| if x < *lo || x > *hi { 0.0 } else { g });
                self.accumulate(grads, *a, g);
            }
            Op::Sigmoid(a) => {
                let g = zip_same(grad, out, |g, s| g * s * (1.0 - s));
                self.accumulate(grads, *a, g);
            }
            Op::Tanh(a) => {
                let g = zip_same(grad, out, |g, t| g * (1.0 - t * t));
                self.accumulate(grads, *a, g);
            }
            Op::Ln(a) => {
                let g = zip_same(grad, self.value(*a), |g, x| g / x);
                self.accumulate(grads, *a, g);
            }
            Op::LeakyRelu(a, slope) => {
                let g = zip_same(grad, self.value(*a), |g, x| if x > 0.0 { g } else { g * slope });
                self.accumulate(grads, *a, g);
            }
            Op::Softmax(a, axis) => {
                let g = if *axis == 1 {
                    softmax_rows_backward(grad, out)
                } else {
                    softmax_rows_backward(&grad.transpose(), &out.transpose()).transpose()
                };
                self.accumulate(grads, *a, g);
            }
            Op::MaskedSoftmaxRows(a) => {
                // Masked entries have zero output, so they drop out of the
                // softmax Jacobian automatically.
                self.accumulate(grads, *a, softmax_rows_backward(grad, out));
            }
        }
    }
}

fn zip_same(a: &Tensor, b: &Tensor, f: impl Fn(f64, f64) -> f64) -> Tensor {
    let data = a.data().iter().zip(b.data()).map(|(&x, &y)| f(x, y)).collect();
    Tensor::from_parts(a.rows(), a.cols(), data)
}

fn softmax_rows(v: &Tensor, mask: Option<&[bool]>) -> Tensor {
    let [r, c] = v.shape();
    let mut data = vec![0.0; r * c];
    for i in 0..r {
        let row = v.row_slice(i);
        let keep = |j: usize| mask.is_none_or(|m| m[i * c + j]);
        let max = (0..c).filter(|&j| keep(j)).map(|j| row[j]).fold(f64::NEG_INFINITY, f64::max);
        if max == f64::NEG_INFINITY {
            continue;
        }
        let mut total = 0.0;
        for j in (0..c).filter(|&j| keep(j)) {
            let e = (row[j] - max).exp();
            data[i * c + j] = e;
            total += e;
        }
        for x in &mut data[i * c..(i + 1) * c] {
            *x /= total;
        }
    }
    Tensor::from_parts(r, c, data)
}

fn softmax_rows_backward(grad: &Tensor, out: &Tensor) -> Tensor {
    let [r, c] = out.shape();
    let mut data = vec![0.0; r * c];
    for i in 0..r {
        let (g, s) = (grad.row_slice(i), out.row_slice(i));
        let dot: f64 = g.iter().zip(s).map(|(a, b)| a * b).sum();
        for j in 0..c {
            data[i * c + j] = s[j] * (g[j] - dot);
        }
    }
    Tensor::from_parts(r, c, data)
}

/// Outcome of comparing tape gradients with central finite differences.
#[derive(Clone, Debug, PartialEq)]
pub struct GradCheckReport {
    /// Worst relative error per named parameter, in input order.
    pub groups: Vec<(String, f64)>,
    pub max_relative_error: f64,
    pub entries_checked: usize,
    pub tolerance: f64,
}

impl GradCheckReport {
    pub fn passed(&self) -> bool {
        self.max_relative_error < self.tolerance
    }
}

/// Denominator floor for relative errors; below it the comparison is absolute.
pub const GRAD_CHECK_FLOOR: f64 = 1e-6;

pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    let scale = analytic.abs().max(numeric.abs()).max(GRAD_CHECK_FLOOR);
    (analytic - numeric).abs() / scale
}

/// Checks every entry of every parameter against `(f(p+h) - f(p-h)) / 2h`.
///
/// `f` receives a fresh tape plus one leaf per parameter (same order as
/// `params`) and returns the scalar loss node.
pub fn grad_check<F>(f: F, params: &[(String, Tensor)], step: f64, tol: f64) -> Result<GradCheckReport>
where
    F: Fn(&mut Tape, &[Var]) -> Result<Var>,
{
    if step.partial_cmp(&0.0) != Some(std::cmp::Ordering::Greater) {
        return Err(Error::invalid("grad_check step must be positive"));
    }
    let eval = |values: &[Tensor]| -> Result<f64> {
        let mut tape = Tape::new();
        let vars: Vec<Var> = values.iter().map(|t| tape.param(t.clone())).collect();
        let loss = f(&mut tape, &vars)?;
        tape.value(loss).item().ok_or_else(|| Error::shape("grad_check", "loss is not scalar"))
    };

    let mut tape = Tape::new();
    let vars: Vec<Var> = params.iter().map(|(_, t)| tape.param(t.clone())).collect();
    let loss = f(&mut tape, &vars)?;
    let grads = tape.backward(loss)?;

    let mut values: Vec<Tensor> = params.iter().map(|(_, t)| t.clone()).collect();
    let mut groups = Vec::with_capacity(params.len());
    let mut worst = 0.0_f64;
    let mut checked = 0;
    for (pi, (name, _)) in params.iter().enumerate() {
        let analytic = grads.wrt(vars[pi]);
        let mut group_worst = 0.0_f64;
        for k in 0..values[pi].len() {
            let original = values[pi].data()[k];
            values[pi].data_mut()[k] = original + step;
            let plus = eval(&values)?;
            values[pi].data_mut()[k] = original - step;
            let minus = eval(&values)?;
            values[pi].data_mut()[k] = original;
            let numeric = (plus - minus) / (2.0 * step);
            group_worst = group_worst.max(relative_error(analytic.data()[k], numeric));
            checked += 1;
        }
        worst = worst.max(group_worst);
        groups.push((name.clone(), group_worst));
    }
    Ok(GradCheckReport { groups, max_relative_error: worst, entries_checked: checked, tolerance: tol })
}
