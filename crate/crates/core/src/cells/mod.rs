//! Recurrent cells and the per-node classification head.
//!
//! All three variants share one gate computation:
//!
//! ```text
//! i = σ(W_xi ∗ x + W_hi ∗ h + b_i)      f = σ(W_xf ∗ x + W_hf ∗ h + b_f)
//! c' = f ⊙ c + i ⊙ tanh(W_xc ∗ x + W_hc ∗ h + b_c)
//! o = σ(W_xo ∗ x + W_ho ∗ h + b_o)      h' = o ⊙ tanh(c')
//! ```
//!
//! and differ only in what `W ∗ z` means: a shared per-node matrix product
//! (`lstm`), a Chebyshev graph convolution `Σ_k T_k(L̃) z W_k` (`step`), or
//! a same-padded 2-D convolution over hosts laid out on a square grid
//! (`convlstm`). There is no peephole path from `c` into the gates.

mod checkpoint;

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use rand::distributions::{Distribution, Uniform};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub use checkpoint::{load_checkpoint, save_checkpoint, Checkpoint, CheckpointMeta};

use crate::error::{Error, Result};
use crate::graph::HostGraph;
use crate::numerics::{Gradients, Matrix, OperatorStack, Tape, Var};

/// Default ConvLSTM kernel side.
pub const DEFAULT_CONV_KERNEL: usize = 3;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Variant {
    #[serde(rename = "convlstm")]
    ConvLstm,
    #[serde(rename = "lstm")]
    Lstm,
    #[serde(rename = "step")]
    Step,
}

impl Variant {
    pub const ALL: [Variant; 3] = [Variant::ConvLstm, Variant::Lstm, Variant::Step];

    pub fn as_str(self) -> &'static str {
        match self {
            Variant::Step => "step",
            Variant::Lstm => "lstm",
            Variant::ConvLstm => "convlstm",
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "step" => Ok(Variant::Step),
            "lstm" => Ok(Variant::Lstm),
            "convlstm" => Ok(Variant::ConvLstm),
            other => Err(Error::invalid(format!(
                "unknown model `{other}` (expected step, lstm or convlstm)"
            ))),
        }
    }
}

/// Sizes that fix every tensor shape of a model.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelShape {
    pub variant: Variant,
    pub d_x: usize,
    pub d_h: usize,
    /// Number of output classes.
    pub d: usize,
    /// Chebyshev order `K`; only used by `step`.
    pub order: usize,
    /// Kernel side; only used by `convlstm`.
    pub kernel: usize,
}

impl ModelShape {
    pub fn new(variant: Variant, d_x: usize, d_h: usize, d: usize, order: usize) -> Self {
        ModelShape {
            variant,
            d_x,
            d_h,
            d,
            order,
            kernel: DEFAULT_CONV_KERNEL,
        }
    }

    pub fn with_kernel(mut self, kernel: usize) -> Self {
        self.kernel = kernel;
        self
    }

    /// How many stacked weight blocks each gate transform carries.
    pub fn taps(&self) -> usize {
        match self.variant {
            Variant::Step => self.order,
            Variant::Lstm => 1,
            Variant::ConvLstm => self.kernel * self.kernel,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.d_x == 0 || self.d_h == 0 || self.d == 0 {
            return Err(Error::invalid("d_x, d_h and d must all be at least 1"));
        }
        match self.variant {
            Variant::Step if self.order == 0 => {
                Err(Error::invalid("step needs Chebyshev order K >= 1"))
            }
            Variant::ConvLstm if self.kernel == 0 || self.kernel.is_multiple_of(2) => Err(Error::invalid(
                format!("convlstm kernel must be odd, got {}", self.kernel),
            )),
            _ => Ok(()),
        }
    }
}

/// Tensor names in storage order.
pub const TENSOR_NAMES: [&str; 14] = [
    "w_xi", "w_hi", "w_xf", "w_hf", "w_xc", "w_hc", "w_xo", "w_ho", "b_i", "b_f", "b_c", "b_o",
    "w_out", "b_out",
];

const GATE_COUNT: usize = 4;
const FORGET: usize = 1;
const W_OUT: usize = 12;
const B_OUT: usize = 13;

/// Learnable parameters of one model.
///
/// Gate weights are stored as `(taps · d_in) × d_h` matrices whose `k`-th
/// row block is the weight applied to the `k`-th propagated copy of the
/// input (the Chebyshev term `T_k` for `step`, the `k`-th kernel offset for
/// `convlstm`).
#[derive(Clone, Debug, PartialEq)]
pub struct ModelParams {
    shape: ModelShape,
    seed: u64,
    tensors: Vec<Matrix>,
}

impl ModelParams {
    pub fn shape(&self) -> &ModelShape {
        &self.shape
    }

    pub fn variant(&self) -> Variant {
        self.shape.variant
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn tensors(&self) -> impl Iterator<Item = (&'static str, &Matrix)> {
        TENSOR_NAMES.iter().copied().zip(self.tensors.iter())
    }

    pub fn tensor(&self, name: &str) -> Option<&Matrix> {
        TENSOR_NAMES
            .iter()
            .position(|n| *n == name)
            .map(|i| &self.tensors[i])
    }

    pub fn tensor_mut(&mut self, name: &str) -> Option<&mut Matrix> {
        TENSOR_NAMES
            .iter()
            .position(|n| *n == name)
            .map(move |i| &mut self.tensors[i])
    }

    pub(crate) fn tensors_mut(&mut self) -> &mut [Matrix] {
        &mut self.tensors
    }

    pub fn is_finite(&self) -> bool {
        self.tensors.iter().all(Matrix::is_finite)
    }

    pub fn parameter_count(&self) -> usize {
        self.tensors.iter().map(Matrix::len).sum()
    }

    /// Expected `(rows, cols)` of every tensor, in storage order.
    pub fn expected_shapes(shape: &ModelShape) -> Vec<(usize, usize)> {
        let taps = shape.taps();
        let mut out = Vec::with_capacity(TENSOR_NAMES.len());
        for _ in 0..GATE_COUNT {
            out.push((taps * shape.d_x, shape.d_h));
            out.push((taps * shape.d_h, shape.d_h));
        }
        out.extend(std::iter::repeat_n((1, shape.d_h), GATE_COUNT));
        out.push((shape.d_h, shape.d));
        out.push((1, shape.d));
        out
    }

    /// Assembles parameters from tensors in [`TENSOR_NAMES`] order.
    pub fn from_tensors(shape: ModelShape, seed: u64, tensors: Vec<Matrix>) -> Result<Self> {
        shape.validate()?;
        let expected = Self::expected_shapes(&shape);
        if tensors.len() != expected.len() {
            return Err(Error::invalid(format!(
                "expected {} tensors, got {}",
                expected.len(),
                tensors.len()
            )));
        }
        for ((name, t), want) in TENSOR_NAMES.iter().zip(&tensors).zip(&expected) {
            if t.shape() != *want {
                return Err(Error::invalid(format!(
                    "tensor {name} has shape {:?}, expected {want:?}",
                    t.shape()
                )));
            }
        }
        Ok(ModelParams {
            shape,
            seed,
            tensors,
        })
    }
}

/// Glorot-uniform weights, zero biases except a forget-gate bias of 1.
pub fn init_params(shape: ModelShape, seed: u64) -> Result<ModelParams> {
    shape.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let taps = shape.taps();
    let mut glorot = |rows: usize, cols: usize, fan_in: usize, fan_out: usize| {
        let bound = (6.0 / (fan_in + fan_out) as f64).sqrt();
        let dist = Uniform::new_inclusive(-bound, bound);
        Matrix::from_fn(rows, cols, |_, _| dist.sample(&mut rng))
    };
    let mut tensors = Vec::with_capacity(TENSOR_NAMES.len());
    for _ in 0..GATE_COUNT {
        tensors.push(glorot(taps * shape.d_x, shape.d_h, taps * shape.d_x, shape.d_h));
        tensors.push(glorot(taps * shape.d_h, shape.d_h, taps * shape.d_h, shape.d_h));
    }
    for gate in 0..GATE_COUNT {
        let fill = if gate == FORGET { 1.0 } else { 0.0 };
        tensors.push(Matrix::filled(1, shape.d_h, fill));
    }
    tensors.push(glorot(shape.d_h, shape.d, shape.d_h, shape.d));
    tensors.push(Matrix::zeros(1, shape.d));
    ModelParams::from_tensors(shape, seed, tensors)
}

/// Hidden and cell state, one row per node (or grid cell for `convlstm`).
#[derive(Clone, Debug, PartialEq)]
pub struct CellState {
    pub h: Matrix,
    pub c: Matrix,
}

impl CellState {
    pub fn zeros(rows: usize, d_h: usize) -> Self {
        CellState {
            h: Matrix::zeros(rows, d_h),
            c: Matrix::zeros(rows, d_h),
        }
    }
}

/// Side of the smallest square grid holding `n` hosts.
pub fn grid_side(n: usize) -> usize {
    let mut side = (n as f64).sqrt() as usize;
    while side * side < n {
        side += 1;
    }
    while side > 0 && (side - 1) * (side - 1) >= n {
        side -= 1;
    }
    side
}

/// Shift operators of a same-padded `kernel × kernel` convolution on a
/// `side × side` row-major grid, one per kernel offset in row-major order.
pub fn conv_stencils(side: usize, kernel: usize) -> Vec<Matrix> {
    let cells = side * side;
    let r = (kernel / 2) as isize;
    let mut ops = Vec::with_capacity(kernel * kernel);
    for dy in -r..=r {
        for dx in -r..=r {
            let mut s = Matrix::zeros(cells, cells);
            for y in 0..side as isize {
                for x in 0..side as isize {
                    let (sy, sx) = (y + dy, x + dx);
                    if (0..side as isize).contains(&sy) && (0..side as isize).contains(&sx) {
                        let p = (y * side as isize + x) as usize;
                        let q = (sy * side as isize + sx) as usize;
                        s.set(p, q, 1.0);
                    }
                }
            }
            ops.push(s);
        }
    }
    ops
}

/// Places `n` host rows into the first `n` cells of a `side²`-row grid.
pub fn hosts_to_grid(x: &Matrix, side: usize) -> Result<Matrix> {
    if x.rows() > side * side {
        return Err(Error::Shape {
            op: "hosts_to_grid",
            left: x.shape(),
            right: (side * side, x.cols()),
        });
    }
    let mut out = Matrix::zeros(side * side, x.cols());
    out.data_mut()[..x.len()].copy_from_slice(x.data());
    Ok(out)
}

/// Model structure bound to a node set: the operator stack each gate
/// transform applies and how host rows map onto state rows.
#[derive(Clone, Debug)]
pub struct Network {
    shape: ModelShape,
    hosts: usize,
    block: usize,
    stack: Option<Arc<OperatorStack>>,
}

/// Tape handles for one model's parameters.
#[derive(Clone, Debug)]
pub struct BoundParams {
    leaves: Vec<Var>,
    w_x: Var,
    w_h: Var,
    bias: Var,
}

impl BoundParams {
    /// Leaf handle of each tensor, in [`TENSOR_NAMES`] order.
    pub fn leaves(&self) -> &[Var] {
        &self.leaves
    }
}

/// Sequence inputs for several windows at once: `steps[t]` stacks frame
/// `t` of every window as consecutive `n`-row blocks.
#[derive(Clone, Debug)]
pub struct SequenceBatch {
    pub steps: Vec<Matrix>,
    pub windows: usize,
}

impl SequenceBatch {
    /// Stacks windows of dense per-host frames (each `n × d_x`).
    pub fn from_frames(windows: &[&[Matrix]]) -> Result<Self> {
        let len = windows.first().map_or(0, |w| w.len());
        if len == 0 {
            return Err(Error::invalid("empty window"));
        }
        let shape = windows[0][0].shape();
        let mut steps = Vec::with_capacity(len);
        for t in 0..len {
            let mut data = Vec::with_capacity(windows.len() * shape.0 * shape.1);
            for w in windows {
                if w.len() != len {
                    return Err(Error::invalid("windows in one batch differ in length"));
                }
                if w[t].shape() != shape {
                    return Err(Error::Shape {
                        op: "sequence batch",
                        left: shape,
                        right: w[t].shape(),
                    });
                }
                data.extend_from_slice(w[t].data());
            }
            steps.push(Matrix::new(windows.len() * shape.0, shape.1, data)?);
        }
        Ok(SequenceBatch {
            steps,
            windows: windows.len(),
        })
    }

    /// Stacks windows of class-index frames as one-hot rows over `d` classes.
    pub fn one_hot<F: AsRef<[usize]>>(windows: &[&[F]], d: usize) -> Result<Self> {
        let len = windows.first().map_or(0, |w| w.len());
        if len == 0 {
            return Err(Error::invalid("empty window"));
        }
        let n = windows[0][0].as_ref().len();
        let mut steps = Vec::with_capacity(len);
        for t in 0..len {
            let mut m = Matrix::zeros(windows.len() * n, d);
            for (b, w) in windows.iter().enumerate() {
                let frame = w[t].as_ref();
                if w.len() != len || frame.len() != n {
                    return Err(Error::invalid("windows in one batch differ in shape"));
                }
                for (host, &class) in frame.iter().enumerate() {
                    if class >= d {
                        return Err(Error::invalid(format!(
                            "class {class} out of range for {d} classes"
                        )));
                    }
                    m.set(b * n + host, class, 1.0);
                }
            }
            steps.push(m);
        }
        Ok(SequenceBatch {
            steps,
            windows: windows.len(),
        })
    }
}

impl Network {
    /// Prepares the operators for `shape` over the nodes of `graph`.
    /// For `step` the graph's basis is rebuilt if its order differs.
    pub fn new(shape: ModelShape, graph: &HostGraph) -> Result<Self> {
        shape.validate()?;
        let hosts = graph.n();
        let (block, stack) = match shape.variant {
            Variant::Lstm => (hosts, None),
            Variant::Step => {
                let stack = if graph.order() == shape.order {
                    graph.operator_stack()
                } else {
                    graph.with_order(shape.order)?.operator_stack()
                };
                (hosts, Some(stack))
            }
            Variant::ConvLstm => {
                let side = grid_side(hosts);
                let stack = OperatorStack::new(conv_stencils(side, shape.kernel))?;
                (side * side, Some(Arc::new(stack)))
            }
        };
        Ok(Network {
            shape,
            hosts,
            block,
            stack,
        })
    }

    pub fn shape(&self) -> &ModelShape {
        &self.shape
    }

    /// Hosts per window.
    pub fn hosts(&self) -> usize {
        self.hosts
    }

    /// State rows per window (`side²` for `convlstm`).
    pub fn block(&self) -> usize {
        self.block
    }

    fn check_params(&self, params: &ModelParams) -> Result<()> {
        if params.shape != self.shape {
            return Err(Error::invalid(format!(
                "parameters are for {:?}, network expects {:?}",
                params.shape, self.shape
            )));
        }
        Ok(())
    }

    /// Registers `params` on `tape` and fuses the per-gate tensors.
    pub fn bind(&self, tape: &mut Tape, params: &ModelParams) -> Result<BoundParams> {
        self.check_params(params)?;
        let leaves: Vec<Var> = params.tensors.iter().map(|t| tape.param(t.clone())).collect();
        let w_x = tape.concat_cols(&[leaves[0], leaves[2], leaves[4], leaves[6]])?;
        let w_h = tape.concat_cols(&[leaves[1], leaves[3], leaves[5], leaves[7]])?;
        let bias = tape.concat_cols(&leaves[8..12])?;
        Ok(BoundParams {
            leaves,
            w_x,
            w_h,
            bias,
        })
    }

    fn transform(&self, tape: &mut Tape, z: Var, w: Var) -> Result<Var> {
        let input = match &self.stack {
            Some(stack) => tape.propagate(z, stack.clone())?,
            None => z,
        };
        tape.matmul(input, w)
    }

    /// One recurrent step on state-layout rows. `state = None` is the zero
    /// state and skips the hidden transform.
    pub fn cell(
        &self,
        tape: &mut Tape,
        bound: &BoundParams,
        x: Var,
        state: Option<(Var, Var)>,
    ) -> Result<(Var, Var)> {
        let d_h = self.shape.d_h;
        let mut pre = self.transform(tape, x, bound.w_x)?;
        if let Some((h, _)) = state {
            let hidden = self.transform(tape, h, bound.w_h)?;
            pre = tape.add(pre, hidden)?;
        }
        let pre = tape.add_row(pre, bound.bias)?;
        debug_assert_eq!(tape.value(pre).cols(), 4 * d_h);
        let gates = tape.gate_activations(pre)?;
        let c = tape.cell_update(gates, state.map(|(_, c)| c))?;
        let h = tape.cell_output(gates, c)?;
        Ok((h, c))
    }

    /// Class probabilities from state-layout hidden rows.
    pub fn head(&self, tape: &mut Tape, bound: &BoundParams, h: Var) -> Result<Var> {
        let logits = tape.matmul(h, bound.leaves[W_OUT])?;
        let logits = tape.add_row(logits, bound.leaves[B_OUT])?;
        Ok(tape.softmax_rows(logits))
    }

    fn to_state_layout(&self, x: &Matrix, windows: usize) -> Result<Matrix> {
        if x.rows() != windows * self.hosts || x.cols() != self.shape.d_x {
            return Err(Error::Shape {
                op: "sequence input",
                left: (windows * self.hosts, self.shape.d_x),
                right: x.shape(),
            });
        }
        if self.block == self.hosts {
            return Ok(x.clone());
        }
        let cols = x.cols();
        let mut out = Matrix::zeros(windows * self.block, cols);
        for b in 0..windows {
            let src = &x.data()[b * self.hosts * cols..(b + 1) * self.hosts * cols];
            let dst = b * self.block * cols;
            out.data_mut()[dst..dst + src.len()].copy_from_slice(src);
        }
        Ok(out)
    }

    fn host_rows(&self, windows: usize) -> Arc<[usize]> {
        (0..windows)
            .flat_map(|b| (0..self.hosts).map(move |j| b * self.block + j))
            .collect()
    }

    /// Runs every window from the zero state and returns the host-row
    /// class probabilities (`windows · n × d`).
    pub fn forward(&self, tape: &mut Tape, bound: &BoundParams, batch: &SequenceBatch) -> Result<Var> {
        if batch.steps.is_empty() {
            return Err(Error::invalid("empty window"));
        }
        let mut state = None;
        for x in &batch.steps {
            let x = tape.constant(self.to_state_layout(x, batch.windows)?);
            state = Some(self.cell(tape, bound, x, state)?);
        }
        let (mut h, _) = state.expect("at least one step");
        if self.block != self.hosts {
            h = tape.select_rows(h, self.host_rows(batch.windows))?;
        }
        self.head(tape, bound, h)
    }

    /// Class probabilities without gradient bookkeeping beyond one tape.
    pub fn predict(&self, params: &ModelParams, batch: &SequenceBatch) -> Result<Matrix> {
        let mut tape = Tape::new();
        let bound = self.bind(&mut tape, params)?;
        let probs = self.forward(&mut tape, &bound, batch)?;
        Ok(tape.value(probs).clone())
    }

    /// Mean cross-entropy of the batch against host-row targets, with the
    /// gradient of every tensor in [`TENSOR_NAMES`] order.
    pub fn loss_and_gradients(
        &self,
        params: &ModelParams,
        batch: &SequenceBatch,
        targets: &[usize],
    ) -> Result<LossAndGradients> {
        let mut tape = Tape::new();
        let bound = self.bind(&mut tape, params)?;
        let probs = self.forward(&mut tape, &bound, batch)?;
        let loss = tape.cross_entropy(probs, Arc::from(targets))?;
        let loss_value = tape.value(loss).get(0, 0);
        let probabilities = tape.value(probs).clone();
        let mut grads: Gradients = tape.backward(loss)?;
        let gradients = bound
            .leaves
            .iter()
            .map(|v| grads.take(*v).expect("parameter leaves always receive a gradient"))
            .collect();
        Ok(LossAndGradients {
            loss: loss_value,
            gradients,
            probabilities,
        })
    }

    /// Mean cross-entropy only.
    pub fn loss(&self, params: &ModelParams, batch: &SequenceBatch, targets: &[usize]) -> Result<f64> {
        let probs = self.predict(params, batch)?;
        if targets.len() != probs.rows() {
            return Err(Error::Shape {
                op: "loss",
                left: probs.shape(),
                right: (targets.len(), 1),
            });
        }
        Ok(crate::numerics::cross_entropy_value(&probs, targets))
    }
}

#[derive(Clone, Debug)]
pub struct LossAndGradients {
    pub loss: f64,
    pub gradients: Vec<Matrix>,
    pub probabilities: Matrix,
}

fn single_step(
    network: &Network,
    params: &ModelParams,
    x_t: &Matrix,
    state: &CellState,
) -> Result<CellState> {
    let rows = network.block;
    let d_h = network.shape.d_h;
    for (what, m) in [("x_t", x_t), ("h", &state.h), ("c", &state.c)] {
        let cols = if what == "x_t" { network.shape.d_x } else { d_h };
        if m.shape() != (rows, cols) {
            return Err(Error::Shape {
                op: "cell step",
                left: (rows, cols),
                right: m.shape(),
            });
        }
    }
    let mut tape = Tape::new();
    let bound = network.bind(&mut tape, params)?;
    let x = tape.constant(x_t.clone());
    let h = tape.constant(state.h.clone());
    let c = tape.constant(state.c.clone());
    let (h, c) = network.cell(&mut tape, &bound, x, Some((h, c)))?;
    Ok(CellState {
        h: tape.value(h).clone(),
        c: tape.value(c).clone(),
    })
}

fn require_variant(params: &ModelParams, want: Variant) -> Result<()> {
    if params.variant() != want {
        return Err(Error::invalid(format!(
            "expected {want} parameters, got {}",
            params.variant()
        )));
    }
    Ok(())
}

/// Plain LSTM step with weights shared across nodes: `x_t` is `n × d_x`.
pub fn lstm_step(params: &ModelParams, x_t: &Matrix, state: &CellState) -> Result<CellState> {
    require_variant(params, Variant::Lstm)?;
    let network = Network {
        shape: params.shape,
        hosts: x_t.rows(),
        block: x_t.rows(),
        stack: None,
    };
    single_step(&network, params, x_t, state)
}

/// Graph-convolutional LSTM step over `graph`.
pub fn step_cell_step(
    params: &ModelParams,
    graph: &HostGraph,
    x_t: &Matrix,
    state: &CellState,
) -> Result<CellState> {
    require_variant(params, Variant::Step)?;
    if graph.order() != params.shape.order {
        return Err(Error::invalid(format!(
            "graph basis has order {} but parameters expect K = {}",
            graph.order(),
            params.shape.order
        )));
    }
    let network = Network::new(params.shape, graph)?;
    single_step(&network, params, x_t, state)
}

/// ConvLSTM step on a grid already laid out as `side² × d_x` rows.
pub fn convlstm_step(params: &ModelParams, x_grid: &Matrix, state: &CellState) -> Result<CellState> {
    require_variant(params, Variant::ConvLstm)?;
    let side = grid_side(x_grid.rows());
    if side * side != x_grid.rows() {
        return Err(Error::invalid(format!(
            "grid input must have a square number of rows, got {}",
            x_grid.rows()
        )));
    }
    let stack = OperatorStack::new(conv_stencils(side, params.shape.kernel))?;
    let network = Network {
        shape: params.shape,
        hosts: x_grid.rows(),
        block: x_grid.rows(),
        stack: Some(Arc::new(stack)),
    };
    single_step(&network, params, x_grid, state)
}

/// `softmax_rows(h · W_out + b_out)`.
pub fn readout(params: &ModelParams, h: &Matrix) -> Result<Matrix> {
    let logits = h.matmul(&params.tensors[W_OUT])?;
    let bias = &params.tensors[B_OUT];
    let logits = Matrix::from_fn(logits.rows(), logits.cols(), |r, c| {
        logits.get(r, c) + bias.get(0, c)
    });
    Ok(logits.softmax_rows())
}

/// Runs one window of `n × d_x` frames from the zero state and returns the
/// `n × d` class probabilities for the next frame.
pub fn forward_sequence(params: &ModelParams, graph: &HostGraph, window: &[Matrix]) -> Result<Matrix> {
    if window.is_empty() {
        return Err(Error::invalid("empty window"));
    }
    let network = Network::new(params.shape, graph)?;
    let batch = SequenceBatch::from_frames(&[window])?;
    network.predict(params, &batch)
}
