//! Dense networks over a flat parameter vector with hand-written backprop.
//!
//! Every network only describes its layout (sizes and offsets into a
//! `&[f64]`); parameters live in one contiguous buffer so that optimizers,
//! checkpoints and finite-difference checks can treat them uniformly.

use std::collections::BTreeMap;

use armsuite_core::observations::{OBS_LEN, STATE_LEN};
use armsuite_core::task_space::{decode_multihot, TaskDescriptor};
use ndarray::{concatenate, s, Array1, Array2, ArrayView1, ArrayView2, ArrayViewMut1, ArrayViewMut2, Axis};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{AgentError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    Tanh,
    Linear,
}

impl Activation {
    fn apply(self, z: &mut Array2<f64>) {
        if self == Activation::Tanh {
            z.mapv_inplace(f64::tanh);
        }
    }

    /// Turns `dy` into the gradient w.r.t. the pre-activation, given the output `y`.
    fn backprop(self, y: &Array2<f64>, dy: &mut Array2<f64>) {
        if self == Activation::Tanh {
            ndarray::Zip::from(dy).and(y).for_each(|d, &y| *d *= 1.0 - y * y);
        }
    }
}

/// Affine layer `y = act(x W + b)` with `W` stored row-major as `input x output`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dense {
    pub input: usize,
    pub output: usize,
    pub offset: usize,
    pub activation: Activation,
}

impl Dense {
    pub fn num_params(&self) -> usize {
        self.input * self.output + self.output
    }

    fn weights<'a>(&self, p: &'a [f64]) -> ArrayView2<'a, f64> {
        let n = self.input * self.output;
        ArrayView2::from_shape((self.input, self.output), &p[self.offset..self.offset + n]).unwrap()
    }

    fn bias<'a>(&self, p: &'a [f64]) -> ArrayView1<'a, f64> {
        let start = self.offset + self.input * self.output;
        ArrayView1::from(&p[start..start + self.output])
    }

    pub fn forward(&self, p: &[f64], x: ArrayView2<f64>) -> Array2<f64> {
        let mut z = x.dot(&self.weights(p));
        z += &self.bias(p);
        self.activation.apply(&mut z);
        z
    }

    /// Accumulates parameter gradients into `grad` and, if asked, returns the input gradient.
    fn backward(
        &self,
        p: &[f64],
        x: ArrayView2<f64>,
        y: &Array2<f64>,
        mut dy: Array2<f64>,
        grad: &mut [f64],
        want_dx: bool,
    ) -> Option<Array2<f64>> {
        self.activation.backprop(y, &mut dy);
        let n = self.input * self.output;
        let (gw, rest) = grad[self.offset..self.offset + n + self.output].split_at_mut(n);
        let mut gw = ArrayViewMut2::from_shape((self.input, self.output), gw).unwrap();
        ndarray::linalg::general_mat_mul(1.0, &x.t(), &dy, 1.0, &mut gw);
        let mut gb = ArrayViewMut1::from(rest);
        gb += &dy.sum_axis(Axis(0));
        want_dx.then(|| dy.dot(&self.weights(p).t()))
    }

    fn init(&self, p: &mut [f64], rng: &mut impl Rng) {
        let bound = 1.0 / (self.input as f64).sqrt();
        for v in &mut p[self.offset..self.offset + self.num_params()] {
            *v = rng.random_range(-bound..bound);
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpSpec {
    pub layer_sizes: Vec<usize>,
    pub output_activation: Activation,
}

impl MlpSpec {
    /// `input`, `hidden` repeated `depth` times, `output`.
    pub fn new(input: usize, hidden: usize, depth: usize, output: usize, output_activation: Activation) -> Self {
        let mut layer_sizes = vec![input];
        layer_sizes.extend(std::iter::repeat_n(hidden, depth));
        layer_sizes.push(output);
        Self { layer_sizes, output_activation }
    }

    pub fn validate(&self) -> Result<()> {
        if self.layer_sizes.len() < 3 {
            return Err(AgentError::InvalidConfig("an MLP needs at least one hidden layer".into()));
        }
        if self.layer_sizes.contains(&0) {
            return Err(AgentError::InvalidConfig("layer sizes must be positive".into()));
        }
        Ok(())
    }
}

fn stack(layers: &mut Vec<Dense>, offset: &mut usize, sizes: &[usize], last: Activation) {
    for (i, w) in sizes.windows(2).enumerate() {
        let activation = if i + 2 == sizes.len() { last } else { Activation::Tanh };
        layers.push(Dense { input: w[0], output: w[1], offset: *offset, activation });
        *offset += layers.last().unwrap().num_params();
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mlp {
    pub layers: Vec<Dense>,
}

impl Mlp {
    pub fn new(spec: &MlpSpec) -> Result<Self> {
        spec.validate()?;
        let mut layers = Vec::new();
        let mut offset = 0;
        stack(&mut layers, &mut offset, &spec.layer_sizes, spec.output_activation);
        Ok(Self { layers })
    }

    fn forward_cached(&self, p: &[f64], x: ArrayView2<f64>) -> Vec<Array2<f64>> {
        let mut acts = vec![x.to_owned()];
        for l in &self.layers {
            let y = l.forward(p, acts.last().unwrap().view());
            acts.push(y);
        }
        acts
    }

    fn backward(&self, p: &[f64], acts: &[Array2<f64>], dout: Array2<f64>, grad: &mut [f64]) {
        let mut d = dout;
        for (i, l) in self.layers.iter().enumerate().rev() {
            match l.backward(p, acts[i].view(), &acts[i + 1], d, grad, i > 0) {
                Some(dx) => d = dx,
                None => break,
            }
        }
    }
}

/// One element-specific module: tanh hidden layers on its own observation
/// segment, then a head whose input is the last hidden output concatenated
/// with the previous module's output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Module {
    pub hidden: Vec<Dense>,
    pub head: Dense,
}

struct ModuleCache {
    acts: Vec<Array2<f64>>,
    head_in: Array2<f64>,
    out: Array2<f64>,
}

impl Module {
    fn build(offset: &mut usize, sizes: &[usize], prev: usize, output: usize, act: Activation) -> Self {
        let mut hidden = Vec::new();
        stack(&mut hidden, offset, sizes, Activation::Tanh);
        let last = *sizes.last().unwrap();
        let head = Dense { input: last + prev, output, offset: *offset, activation: act };
        *offset += head.num_params();
        Self { hidden, head }
    }

    fn layers(&self) -> impl Iterator<Item = &Dense> {
        self.hidden.iter().chain(std::iter::once(&self.head))
    }

    fn forward(&self, p: &[f64], x: ArrayView2<f64>, prev: Option<&Array2<f64>>) -> ModuleCache {
        let mut acts = vec![x.to_owned()];
        for l in &self.hidden {
            let y = l.forward(p, acts.last().unwrap().view());
            acts.push(y);
        }
        let last = acts.last().unwrap();
        let head_in = match prev {
            Some(prev) => concatenate(Axis(1), &[last.view(), prev.view()]).unwrap(),
            None => last.clone(),
        };
        let out = self.head.forward(p, head_in.view());
        ModuleCache { acts, head_in, out }
    }

    /// Returns the gradient w.r.t. the previous module's output, if any.
    fn backward(&self, p: &[f64], c: &ModuleCache, dout: Array2<f64>, grad: &mut [f64], has_prev: bool) -> Option<Array2<f64>> {
        let d_in = self.head.backward(p, c.head_in.view(), &c.out, dout, grad, true).unwrap();
        let own = c.acts.last().unwrap().ncols();
        let mut d = d_in.slice(s![.., ..own]).to_owned();
        let d_prev = has_prev.then(|| d_in.slice(s![.., own..]).to_owned());
        for (i, l) in self.hidden.iter().enumerate().rev() {
            match l.backward(p, c.acts[i].view(), &c.acts[i + 1], d, grad, i > 0) {
                Some(dx) => d = dx,
                None => break,
            }
        }
        d_prev
    }
}

/// Column ranges of the per-axis inputs in a full observation, in routing
/// order: obstacle, object, objective (goal), robot.
const SEGMENTS: [(usize, usize); 4] = [(46, 60), (32, 46), (60, 78), (0, 32)];
/// Task-axis position for each routing level.
const AXIS_OF_LEVEL: [usize; 4] = [2, 1, 3, 0];

/// Sixteen modules, four per axis, chained obstacle -> object -> objective -> robot.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompositionalNet {
    /// `levels[l][e]` is the module for element `e` of the axis at routing level `l`.
    pub levels: Vec<Vec<Module>>,
    pub output: usize,
}

impl CompositionalNet {
    pub fn new(output: usize, output_activation: Activation) -> Self {
        let mut offset = 0;
        let mut levels = Vec::new();
        // (hidden sizes including input, previous output width, module output width)
        let plan: [(&[usize], usize, usize); 4] = [
            (&[14], 0, 32),
            (&[14, 32], 32, 32),
            (&[18, 64, 64], 32, 64),
            (&[32, 64, 64, 64], 64, output),
        ];
        for (level, (sizes, prev, out)) in plan.iter().enumerate() {
            let act = if level == 3 { output_activation } else { Activation::Tanh };
            levels.push((0..4).map(|_| Module::build(&mut offset, sizes, *prev, *out, act)).collect());
        }
        Self { levels, output }
    }

    /// Modules on the forward path of `task`, in routing order.
    pub fn route(&self, task: &TaskDescriptor) -> [&Module; 4] {
        let idx = task.indices();
        std::array::from_fn(|l| &self.levels[l][idx[AXIS_OF_LEVEL[l]]])
    }

    /// Parameter ranges `(start, end)` of a module.
    pub fn module_range(&self, level: usize, element: usize) -> (usize, usize) {
        let m = &self.levels[level][element];
        let start = m.layers().map(|l| l.offset).min().unwrap();
        let end = m.layers().map(|l| l.offset + l.num_params()).max().unwrap();
        (start, end)
    }

    fn forward_group(&self, p: &[f64], x: ArrayView2<f64>, task: &TaskDescriptor) -> Vec<ModuleCache> {
        let mut caches: Vec<ModuleCache> = Vec::with_capacity(4);
        for (l, m) in self.route(task).into_iter().enumerate() {
            let (a, b) = SEGMENTS[l];
            let prev = caches.last().map(|c| &c.out);
            caches.push(m.forward(p, x.slice(s![.., a..b]), prev));
        }
        caches
    }

    fn backward_group(&self, p: &[f64], task: &TaskDescriptor, caches: &[ModuleCache], dout: Array2<f64>, grad: &mut [f64]) {
        let mut d = dout;
        for (l, m) in self.route(task).into_iter().enumerate().rev() {
            match m.backward(p, &caches[l], d, grad, l > 0) {
                Some(dp) => d = dp,
                None => break,
            }
        }
    }
}

/// Rows of a batch grouped by the task encoded in their descriptor.
fn group_rows(x: ArrayView2<f64>) -> Result<BTreeMap<TaskDescriptor, Vec<usize>>> {
    let mut groups: BTreeMap<TaskDescriptor, Vec<usize>> = BTreeMap::new();
    for (i, row) in x.rows().into_iter().enumerate() {
        let mh: Vec<f64> = row.slice(s![STATE_LEN..]).to_vec();
        groups.entry(decode_multihot(&mh)?).or_default().push(i);
    }
    Ok(groups)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Net {
    Mlp(Mlp),
    Compositional(CompositionalNet),
}

/// Intermediate values kept from a forward pass for the backward pass.
pub struct Cache {
    inner: CacheInner,
    out: Array2<f64>,
}

enum CacheInner {
    Mlp(Vec<Array2<f64>>),
    Compositional(Vec<(TaskDescriptor, Vec<usize>, Vec<ModuleCache>)>),
}

impl Cache {
    pub fn output(&self) -> &Array2<f64> {
        &self.out
    }
}

impl Net {
    pub fn num_params(&self) -> usize {
        let layers: Vec<&Dense> = match self {
            Net::Mlp(m) => m.layers.iter().collect(),
            Net::Compositional(c) => c.levels.iter().flatten().flat_map(|m| m.layers()).collect(),
        };
        layers.iter().map(|l| l.offset + l.num_params()).max().unwrap_or(0)
    }

    pub fn input_dim(&self) -> usize {
        match self {
            Net::Mlp(m) => m.layers[0].input,
            Net::Compositional(_) => OBS_LEN,
        }
    }

    pub fn output_dim(&self) -> usize {
        match self {
            Net::Mlp(m) => m.layers.last().unwrap().output,
            Net::Compositional(c) => c.output,
        }
    }

    pub fn init_params(&self, rng: &mut impl Rng) -> Vec<f64> {
        let mut p = vec![0.0; self.num_params()];
        match self {
            Net::Mlp(m) => m.layers.iter().for_each(|l| l.init(&mut p, rng)),
            Net::Compositional(c) => c.levels.iter().flatten().flat_map(|m| m.layers()).for_each(|l| l.init(&mut p, rng)),
        }
        p
    }

    fn check(&self, p: &[f64], x: &ArrayView2<f64>) -> Result<()> {
        if p.len() != self.num_params() {
            return Err(AgentError::Shape(format!("expected {} parameters, got {}", self.num_params(), p.len())));
        }
        if x.ncols() != self.input_dim() {
            return Err(AgentError::Shape(format!("expected input width {}, got {}", self.input_dim(), x.ncols())));
        }
        Ok(())
    }

    pub fn forward(&self, p: &[f64], x: ArrayView2<f64>) -> Result<Array2<f64>> {
        Ok(self.forward_cached(p, x)?.out)
    }

    pub fn forward_cached(&self, p: &[f64], x: ArrayView2<f64>) -> Result<Cache> {
        self.check(p, &x)?;
        match self {
            Net::Mlp(m) => {
                let acts = m.forward_cached(p, x);
                let out = acts.last().unwrap().clone();
                Ok(Cache { inner: CacheInner::Mlp(acts), out })
            }
            Net::Compositional(c) => {
                let mut out = Array2::zeros((x.nrows(), c.output));
                let mut groups = Vec::new();
                for (task, rows) in group_rows(x)? {
                    let sub = x.select(Axis(0), &rows);
                    let caches = c.forward_group(p, sub.view(), &task);
                    let y = &caches.last().unwrap().out;
                    for (k, &r) in rows.iter().enumerate() {
                        out.row_mut(r).assign(&y.row(k));
                    }
                    groups.push((task, rows, caches));
                }
                Ok(Cache { inner: CacheInner::Compositional(groups), out })
            }
        }
    }

    /// Adds `d(loss)/d(params)` to `grad` given `dout = d(loss)/d(output)`.
    pub fn backward(&self, p: &[f64], cache: &Cache, dout: &Array2<f64>, grad: &mut [f64]) {
        match (self, &cache.inner) {
            (Net::Mlp(m), CacheInner::Mlp(acts)) => m.backward(p, acts, dout.clone(), grad),
            (Net::Compositional(c), CacheInner::Compositional(groups)) => {
                for (task, rows, caches) in groups {
                    let d = dout.select(Axis(0), rows);
                    c.backward_group(p, task, caches, d, grad);
                }
            }
            _ => unreachable!("cache produced by a different network"),
        }
    }

    /// Forward pass for a single observation.
    pub fn forward_one(&self, p: &[f64], x: &[f64]) -> Result<Array1<f64>> {
        let v = ArrayView2::from_shape((1, x.len()), x).map_err(|e| AgentError::Shape(e.to_string()))?;
        Ok(self.forward(p, v)?.row(0).to_owned())
    }
}
