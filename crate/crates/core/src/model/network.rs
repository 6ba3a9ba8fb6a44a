use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::config::{ModelConfig, TaskMode};
use crate::domain::{Label, Role};
use crate::error::{Error, Result};
use crate::nn::{focal_row, softmax, Activation, Conv1DLayer, DenseLayer, Differentiable, LayerCache, Tensor2D};
use crate::util::sub_seed;

/// Rows of features with the role of each row and its five targets: raw
/// 0-100 scores for regression, class indices for classification.
#[derive(Debug, Clone, PartialEq)]
pub struct Batch {
    pub x: Tensor2D,
    pub roles: Vec<Role>,
    pub targets: Vec<[f64; Label::COUNT]>,
}

impl Batch {
    pub fn new(x: Tensor2D, roles: Vec<Role>, targets: Vec<[f64; Label::COUNT]>) -> Result<Self> {
        if roles.len() != x.rows() || targets.len() != x.rows() {
            return Err(Error::ShapeMismatch(format!(
                "batch has {} rows, {} roles, {} targets",
                x.rows(),
                roles.len(),
                targets.len()
            )));
        }
        Ok(Self { x, roles, targets })
    }

    pub fn len(&self) -> usize {
        self.roles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.roles.is_empty()
    }

    pub fn select(&self, idx: &[usize]) -> Self {
        Self {
            x: self.x.select_rows(idx),
            roles: idx.iter().map(|&i| self.roles[i]).collect(),
            targets: idx.iter().map(|&i| self.targets[i]).collect(),
        }
    }

    pub fn rows_with_role(&self, role: Role) -> Vec<usize> {
        (0..self.len()).filter(|&i| self.roles[i] == role).collect()
    }
}

/// Branch-specific tower layer and per-label output heads.
#[derive(Debug, Clone, PartialEq)]
pub struct Branch {
    pub tower: DenseLayer,
    pub heads: Vec<DenseLayer>,
}

/// Conv feature extractor, shared dense layers, and one branch per role
/// (or a single common branch for the unbranched variants).
#[derive(Debug, Clone, PartialEq)]
pub struct MTMLNetwork {
    pub config: ModelConfig,
    pub conv: Conv1DLayer,
    pub shared: Vec<DenseLayer>,
    pub branches: Vec<Branch>,
    pub trained: bool,
}

struct BranchPass {
    rows: Vec<usize>,
    tower: LayerCache,
    heads: Vec<(Tensor2D, LayerCache)>,
}

struct ForwardPass {
    conv: LayerCache,
    shared: Vec<LayerCache>,
    branches: Vec<Option<BranchPass>>,
    n_rows: usize,
}

/// Gradient blocks in [`MTMLNetwork::block_names`] order.
pub type Gradients = Vec<Vec<f64>>;

/// Head weights start at this fraction of their Xavier draw so initial
/// outputs sit near the bias instead of spraying across the label range.
pub const HEAD_INIT_SCALE: f64 = 0.1;

pub fn make_variant(config: &ModelConfig) -> Result<MTMLNetwork> {
    MTMLNetwork::new(config.clone())
}

impl MTMLNetwork {
    pub fn new(config: ModelConfig) -> Result<Self> {
        config.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(sub_seed(config.train.seed, "init"));
        let conv = Conv1DLayer::init(config.n_features, config.conv_channels, &mut rng);
        let mut shared = Vec::new();
        let mut width = config.conv_channels;
        for &w in &config.shared_widths {
            shared.push(DenseLayer::init(width, w, Activation::Relu, &mut rng));
            width = w;
        }
        let n_branches = if config.variant.branched() { Role::ALL.len() } else { 1 };
        let branches = (0..n_branches)
            .map(|_| {
                let tower = DenseLayer::init(width, config.branch_width, Activation::Relu, &mut rng);
                let heads = config
                    .labels
                    .iter()
                    .map(|_| {
                        let mut head =
                            DenseLayer::init(config.branch_width, config.task.outputs(), Activation::Identity, &mut rng);
                        head.weights.data_mut().iter_mut().for_each(|w| *w *= HEAD_INIT_SCALE);
                        head
                    })
                    .collect();
                Branch { tower, heads }
            })
            .collect();
        Ok(Self {
            config,
            conv,
            shared,
            branches,
            trained: false,
        })
    }

    /// Sets each head's bias to its branch's training target level: the mean
    /// scaled target for regression, smoothed log class frequencies for
    /// classification. Branches without rows use the whole batch.
    pub fn init_output_bias(&mut self, data: &Batch) {
        if data.is_empty() {
            return;
        }
        let task = self.config.task;
        let labels = self.config.labels.clone();
        for b in 0..self.branches.len() {
            let mut rows: Vec<usize> = (0..data.len())
                .filter(|&i| self.branch_index(data.roles[i]) == b)
                .collect();
            if rows.is_empty() {
                rows = (0..data.len()).collect();
            }
            let n = rows.len() as f64;
            for (h, label) in labels.iter().enumerate() {
                let bias = &mut self.branches[b].heads[h].bias;
                match task.n_classes() {
                    None => {
                        bias[0] = rows.iter().map(|&i| data.targets[i][label.index()] / 100.0).sum::<f64>() / n;
                    }
                    Some(k) => {
                        let mut counts = vec![0.0; k];
                        for &i in &rows {
                            let c = data.targets[i][label.index()] as usize;
                            if c < k {
                                counts[c] += 1.0;
                            }
                        }
                        for c in 0..k {
                            bias[c] = ((counts[c] + 1.0) / (n + k as f64)).ln();
                        }
                    }
                }
            }
        }
    }

    pub fn labels(&self) -> &[Label] {
        &self.config.labels
    }

    pub fn task(&self) -> TaskMode {
        self.config.task
    }

    pub fn branch_index(&self, role: Role) -> usize {
        if self.branches.len() > 1 {
            role.index()
        } else {
            0
        }
    }

    /// Branch-name part of parameter block names.
    pub fn branch_name(&self, b: usize) -> &'static str {
        if self.branches.len() > 1 {
            Role::ALL[b].as_str()
        } else {
            "all"
        }
    }

    pub fn block_names(&self) -> Vec<String> {
        let mut names = vec!["conv.kernels".to_string(), "conv.bias".to_string()];
        for i in 0..self.shared.len() {
            names.push(format!("shared{i}.weights"));
            names.push(format!("shared{i}.bias"));
        }
        for b in 0..self.branches.len() {
            let bn = self.branch_name(b);
            names.push(format!("branch.{bn}.tower.weights"));
            names.push(format!("branch.{bn}.tower.bias"));
            for l in &self.config.labels {
                names.push(format!("branch.{bn}.head.{}.weights", l.as_str()));
                names.push(format!("branch.{bn}.head.{}.bias", l.as_str()));
            }
        }
        names
    }

    pub fn blocks(&self) -> Vec<&[f64]> {
        let mut out: Vec<&[f64]> = vec![self.conv.kernels.data(), &self.conv.bias];
        for l in &self.shared {
            out.push(l.weights.data());
            out.push(&l.bias);
        }
        for b in &self.branches {
            out.push(b.tower.weights.data());
            out.push(&b.tower.bias);
            for h in &b.heads {
                out.push(h.weights.data());
                out.push(&h.bias);
            }
        }
        out
    }

    pub fn blocks_mut(&mut self) -> Vec<&mut [f64]> {
        let mut out: Vec<&mut [f64]> = vec![self.conv.kernels.data_mut(), &mut self.conv.bias];
        for l in &mut self.shared {
            out.push(l.weights.data_mut());
            out.push(&mut l.bias);
        }
        for b in &mut self.branches {
            out.push(b.tower.weights.data_mut());
            out.push(&mut b.tower.bias);
            for h in &mut b.heads {
                out.push(h.weights.data_mut());
                out.push(&mut h.bias);
            }
        }
        out
    }

    /// Block shapes as (rows, cols); biases are `1 x n`.
    pub fn block_shapes(&self) -> Vec<(usize, usize)> {
        let mut out = vec![self.conv.kernels.shape(), (1, self.conv.bias.len())];
        let dense = |l: &DenseLayer, out: &mut Vec<(usize, usize)>| {
            out.push(l.weights.shape());
            out.push((1, l.bias.len()));
        };
        for l in &self.shared {
            dense(l, &mut out);
        }
        for b in &self.branches {
            dense(&b.tower, &mut out);
            for h in &b.heads {
                dense(h, &mut out);
            }
        }
        out
    }

    pub fn param_count(&self) -> usize {
        self.blocks().iter().map(|b| b.len()).sum()
    }

    /// Index range of the blocks belonging to branch `b`.
    pub fn branch_block_range(&self, b: usize) -> std::ops::Range<usize> {
        let per_branch = 2 + 2 * self.config.labels.len();
        let start = 2 + 2 * self.shared.len() + b * per_branch;
        start..start + per_branch
    }

    fn forward_pass(&self, x: &Tensor2D, roles: &[Role]) -> Result<ForwardPass> {
        if x.cols() != self.config.n_features {
            return Err(Error::ShapeMismatch(format!(
                "model expects {} features, got {}",
                self.config.n_features,
                x.cols()
            )));
        }
        if roles.len() != x.rows() {
            return Err(Error::ShapeMismatch("one role per row is required".into()));
        }
        let (mut h, conv) = self.conv.forward_cached(x)?;
        let mut shared = Vec::with_capacity(self.shared.len());
        for l in &self.shared {
            let (y, c) = l.forward_cached(&h)?;
            shared.push(c);
            h = y;
        }
        let mut branches = Vec::with_capacity(self.branches.len());
        for (b, br) in self.branches.iter().enumerate() {
            let rows: Vec<usize> = (0..roles.len()).filter(|&i| self.branch_index(roles[i]) == b).collect();
            if rows.is_empty() {
                branches.push(None);
                continue;
            }
            let sub = h.select_rows(&rows);
            let (t, tower) = br.tower.forward_cached(&sub)?;
            let heads = br
                .heads
                .iter()
                .map(|hd| hd.forward_cached(&t))
                .collect::<Result<Vec<_>>>()?;
            branches.push(Some(BranchPass { rows, tower, heads }));
        }
        Ok(ForwardPass {
            conv,
            shared,
            branches,
            n_rows: x.rows(),
        })
    }

    /// Raw head outputs (values or logits), one `rows x outputs` tensor per
    /// head, rows in input order. Each row only passes through its own
    /// role's branch.
    pub fn forward(&self, x: &Tensor2D, roles: &[Role]) -> Result<Vec<Tensor2D>> {
        let pass = self.forward_pass(x, roles)?;
        let k = self.config.task.outputs();
        let mut out = vec![Tensor2D::zeros(pass.n_rows, k); self.config.labels.len()];
        for bp in pass.branches.iter().flatten() {
            for (h, (y, _)) in bp.heads.iter().enumerate() {
                for (local, &row) in bp.rows.iter().enumerate() {
                    out[h].row_mut(row).copy_from_slice(y.row(local));
                }
            }
        }
        Ok(out)
    }

    /// Per-head loss of one row and its gradient on that head's outputs.
    fn head_loss(&self, head: usize, out: &[f64], targets: &[f64; Label::COUNT]) -> Result<(f64, Vec<f64>)> {
        let label = self.config.labels[head];
        let y = targets[label.index()];
        match self.config.task {
            TaskMode::Regression => {
                let d = out[0] - y / 100.0;
                Ok((d * d, vec![2.0 * d]))
            }
            task => {
                let k = task.outputs();
                if !(y >= 0.0 && y.fract() == 0.0 && (y as usize) < k) {
                    return Err(Error::InvalidClass {
                        class: y.max(0.0) as usize,
                        n_classes: k,
                    });
                }
                let class = y as usize;
                let alpha = self
                    .config
                    .focal_alpha
                    .get(head)
                    .map_or(1.0, |a| a[class]);
                Ok(focal_row(out, class, self.config.focal_gamma, alpha))
            }
        }
    }

    /// Role-masked batch loss: the sum over rows of the per-label losses,
    /// each row contributing only through its own branch. The other
    /// branch's gradient blocks stay exactly zero.
    pub fn masked_batch_loss(&self, batch: &Batch) -> Result<(f64, Gradients)> {
        self.loss_impl(batch, true).map(|(l, g)| (l, g.unwrap()))
    }

    /// Loss of every (row, head) pair, rows in batch order.
    pub fn loss_terms(&self, batch: &Batch) -> Result<Vec<f64>> {
        let outs = self.forward(&batch.x, &batch.roles)?;
        let mut terms = Vec::with_capacity(batch.len() * outs.len());
        for r in 0..batch.len() {
            for (h, o) in outs.iter().enumerate() {
                terms.push(self.head_loss(h, o.row(r), &batch.targets[r])?.0);
            }
        }
        Ok(terms)
    }

    /// Sign of every ReLU pre-activation in the forward pass of `batch`.
    pub fn activation_pattern(&self, batch: &Batch) -> Result<Vec<bool>> {
        let pass = self.forward_pass(&batch.x, &batch.roles)?;
        let mut caches = vec![&pass.conv];
        caches.extend(&pass.shared);
        caches.extend(pass.branches.iter().flatten().map(|b| &b.tower));
        Ok(caches
            .into_iter()
            .flat_map(|c| c.pre.data().iter().map(|&v| v > 0.0))
            .collect())
    }

    pub fn batch_loss(&self, batch: &Batch) -> Result<f64> {
        self.loss_impl(batch, false).map(|(l, _)| l)
    }

    fn loss_impl(&self, batch: &Batch, with_grad: bool) -> Result<(f64, Option<Gradients>)> {
        if batch.is_empty() {
            return Err(Error::EmptyBatch);
        }
        let pass = self.forward_pass(&batch.x, &batch.roles)?;
        let mut loss = 0.0;
        let shared_width = *self.config.shared_widths.last().unwrap();
        let mut grad_shared_out = Tensor2D::zeros(pass.n_rows, shared_width);
        let mut grads: Gradients = self.blocks().iter().map(|b| vec![0.0; b.len()]).collect();

        for (b, bp) in pass.branches.iter().enumerate() {
            let Some(bp) = bp else { continue };
            let branch = &self.branches[b];
            let n_local = bp.rows.len();
            let mut grad_tower_out = Tensor2D::zeros(n_local, self.config.branch_width);
            let range = self.branch_block_range(b);
            for (h, (y, cache)) in bp.heads.iter().enumerate() {
                let mut g_out = Tensor2D::zeros(n_local, y.cols());
                for (local, &row) in bp.rows.iter().enumerate() {
                    let (l, g) = self.head_loss(h, y.row(local), &batch.targets[row])?;
                    loss += l;
                    g_out.row_mut(local).copy_from_slice(&g);
                }
                if with_grad {
                    let lg = branch.heads[h].backward(cache, &g_out);
                    grads[range.start + 2 + 2 * h] = lg.weights;
                    grads[range.start + 3 + 2 * h] = lg.bias;
                    for (d, s) in grad_tower_out.data_mut().iter_mut().zip(lg.input.data()) {
                        *d += s;
                    }
                }
            }
            if with_grad {
                let tg = branch.tower.backward(&bp.tower, &grad_tower_out);
                grads[range.start] = tg.weights;
                grads[range.start + 1] = tg.bias;
                for (local, &row) in bp.rows.iter().enumerate() {
                    for (d, s) in grad_shared_out.row_mut(row).iter_mut().zip(tg.input.row(local)) {
                        *d += s;
                    }
                }
            }
        }
        if !loss.is_finite() {
            return Err(Error::NonFinite("batch loss".into()));
        }
        if !with_grad {
            return Ok((loss, None));
        }
        let mut g = grad_shared_out;
        for (i, l) in self.shared.iter().enumerate().rev() {
            let lg = l.backward(&pass.shared[i], &g);
            grads[2 + 2 * i] = lg.weights;
            grads[3 + 2 * i] = lg.bias;
            g = lg.input;
        }
        let (gk, gb) = self.conv.backward(&pass.conv, &g);
        grads[0] = gk;
        grads[1] = gb;
        Ok((loss, Some(grads)))
    }

    /// Copies every parameter of branch `from` into branch `to`.
    pub fn clone_branch(&mut self, from: usize, to: usize) {
        self.branches[to] = self.branches[from].clone();
    }

    fn locate(&self, mut i: usize) -> (usize, usize) {
        for (b, len) in self.blocks().iter().map(|b| b.len()).enumerate() {
            if i < len {
                return (b, i);
            }
            i -= len;
        }
        panic!("parameter index out of range");
    }
}

impl Differentiable for MTMLNetwork {
    type Batch = Batch;

    fn param_count(&self) -> usize {
        MTMLNetwork::param_count(self)
    }

    fn param(&self, i: usize) -> f64 {
        let (b, k) = self.locate(i);
        self.blocks()[b][k]
    }

    fn set_param(&mut self, i: usize, v: f64) {
        let (b, k) = self.locate(i);
        self.blocks_mut()[b][k] = v;
    }

    fn loss(&self, batch: &Batch) -> f64 {
        self.batch_loss(batch).expect("valid batch")
    }

    fn loss_terms(&self, batch: &Batch) -> Vec<f64> {
        MTMLNetwork::loss_terms(self, batch).expect("valid batch")
    }

    fn activation_pattern(&self, batch: &Batch) -> Vec<bool> {
        MTMLNetwork::activation_pattern(self, batch).expect("valid batch")
    }

    fn loss_and_grad(&self, batch: &Batch) -> (f64, Vec<f64>) {
        let (l, g) = self.masked_batch_loss(batch).expect("valid batch");
        (l, g.concat())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum LabelPrediction {
    /// Regression output on the 0-100 scale.
    Value(f64),
    Class { class: usize, probabilities: Vec<f64> },
}

impl LabelPrediction {
    /// Regression value or predicted class index.
    pub fn point(&self) -> f64 {
        match self {
            LabelPrediction::Value(v) => *v,
            LabelPrediction::Class { class, .. } => *class as f64,
        }
    }
}

/// Predictions for each row: one entry per head, in `net.labels()` order.
pub fn predict(net: &MTMLNetwork, x: &Tensor2D, roles: &[Role]) -> Result<Vec<Vec<LabelPrediction>>> {
    if !net.trained {
        return Err(Error::UntrainedModel);
    }
    let outs = net.forward(x, roles)?;
    Ok((0..x.rows())
        .map(|r| {
            outs.iter()
                .map(|o| match net.task() {
                    TaskMode::Regression => LabelPrediction::Value(100.0 * o.get(r, 0)),
                    _ => {
                        let p = softmax(o.row(r));
                        let class = argmax(&p);
                        LabelPrediction::Class { class, probabilities: p }
                    }
                })
                .collect()
        })
        .collect())
}

pub(crate) fn argmax(p: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in p.iter().enumerate() {
        if v > p[best] {
            best = i;
        }
    }
    best
}
