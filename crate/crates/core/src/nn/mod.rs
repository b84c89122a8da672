//! Dueling Q-network with hand-written backpropagation.
//!
//! A shared ReLU encoder feeds two heads: a value head ending in one linear
//! unit and an advantage head ending in one linear unit per action. The heads
//! are combined as `Q = V + A - mean(A)` by default, or `Q = V + A`.

mod adam;
mod checkpoint;
mod layer;

pub use adam::{Adam, AdamConfig};
pub use checkpoint::{Checkpoint, CHECKPOINT_FORMAT, CHECKPOINT_VERSION};
pub use layer::{Activation, DenseLayer, LayerGrad};

use layer::LayerCache;
use ndarray::{Array2, ArrayView2, Axis};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::env::Observation;
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Aggregation {
    /// `Q = V + A - mean_a A`
    #[default]
    MeanSubtracted,
    /// `Q = V + A`
    RawSum,
}

/// Layer widths of a [`DuelingNet`]. Head lists give hidden layers only; each
/// head adds its own linear output layer.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Architecture {
    pub input: usize,
    pub actions: usize,
    pub encoder: Vec<usize>,
    pub value_head: Vec<usize>,
    pub advantage_head: Vec<usize>,
    #[serde(default)]
    pub aggregation: Aggregation,
}

impl Architecture {
    /// Encoder of 3 x 600 and two heads of 4 x 600 hidden units.
    pub fn reference(input: usize, actions: usize) -> Self {
        Self::uniform(input, actions, 3, 4, 600)
    }

    pub fn uniform(input: usize, actions: usize, encoder_layers: usize, head_layers: usize, width: usize) -> Self {
        Self {
            input,
            actions,
            encoder: vec![width; encoder_layers],
            value_head: vec![width; head_layers],
            advantage_head: vec![width; head_layers],
            aggregation: Aggregation::default(),
        }
    }

    pub fn with_aggregation(mut self, aggregation: Aggregation) -> Self {
        self.aggregation = aggregation;
        self
    }

    /// `{encoder+head, n=width}` for uniform widths, explicit lists otherwise.
    pub fn label(&self) -> String {
        let widths: Vec<usize> = self
            .encoder
            .iter()
            .chain(&self.value_head)
            .chain(&self.advantage_head)
            .copied()
            .collect();
        let uniform = self.value_head.len() == self.advantage_head.len()
            && widths.windows(2).all(|w| w[0] == w[1]);
        match (uniform, widths.first()) {
            (true, Some(n)) => format!("{{{}+{}, n={}}}", self.encoder.len(), self.value_head.len(), n),
            _ => format!(
                "{{encoder={:?}, value={:?}, advantage={:?}}}",
                self.encoder, self.value_head, self.advantage_head
            ),
        }
    }

    fn validate(&self) -> Result<()> {
        let all = [&self.encoder, &self.value_head, &self.advantage_head];
        if self.input == 0 || self.actions == 0 || all.iter().any(|l| l.contains(&0)) {
            return Err(Error::InvalidConfig(format!(
                "layer widths must be positive: {self:?}"
            )));
        }
        Ok(())
    }
}

/// Gradient of the loss for every layer, in [`DuelingNet::layers`] order.
#[derive(Clone, Debug)]
pub struct Gradients(pub Vec<LayerGrad>);

impl Gradients {
    pub fn flatten(&self) -> Vec<f64> {
        self.0
            .iter()
            .flat_map(|g| g.weights.iter().chain(g.biases.iter()).copied())
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrainOutcome {
    pub loss: f64,
    /// `|y_i - Q(s_i, a_i)|` before the update.
    pub td_errors: Vec<f64>,
}

struct ForwardCache {
    encoder: Vec<LayerCache>,
    value: Vec<LayerCache>,
    advantage: Vec<LayerCache>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DuelingNet {
    arch: Architecture,
    encoder: Vec<DenseLayer>,
    value: Vec<DenseLayer>,
    advantage: Vec<DenseLayer>,
    seed: u64,
    updates: u64,
}

fn stack_layers(input: usize, hidden: &[usize], output: Option<usize>) -> Vec<DenseLayer> {
    let mut layers = Vec::new();
    let mut width = input;
    for &h in hidden {
        layers.push(DenseLayer::zeros(width, h, Activation::Relu));
        width = h;
    }
    if let Some(out) = output {
        layers.push(DenseLayer::zeros(width, out, Activation::Linear));
    }
    layers
}

impl DuelingNet {
    /// Network with all parameters zero.
    pub fn zeros(arch: Architecture) -> Result<Self> {
        arch.validate()?;
        let trunk = arch.encoder.last().copied().unwrap_or(arch.input);
        Ok(Self {
            encoder: stack_layers(arch.input, &arch.encoder, None),
            value: stack_layers(trunk, &arch.value_head, Some(1)),
            advantage: stack_layers(trunk, &arch.advantage_head, Some(arch.actions)),
            arch,
            seed: 0,
            updates: 0,
        })
    }

    pub fn new(arch: Architecture, seed: u64) -> Result<Self> {
        let mut net = Self::zeros(arch)?;
        net.init_params(seed);
        Ok(net)
    }

    /// Deterministic re-initialization from `seed`.
    pub fn init_params(&mut self, seed: u64) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for layer in self.layers_mut() {
            layer.init(&mut rng);
        }
        self.seed = seed;
        self.updates = 0;
    }

    pub fn architecture(&self) -> &Architecture {
        &self.arch
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Number of optimizer updates applied since initialization.
    pub fn updates(&self) -> u64 {
        self.updates
    }

    pub fn encoder(&self) -> &[DenseLayer] {
        &self.encoder
    }

    pub fn value_head(&self) -> &[DenseLayer] {
        &self.value
    }

    pub fn advantage_head(&self) -> &[DenseLayer] {
        &self.advantage
    }

    pub fn encoder_mut(&mut self) -> &mut [DenseLayer] {
        &mut self.encoder
    }

    pub fn value_head_mut(&mut self) -> &mut [DenseLayer] {
        &mut self.value
    }

    pub fn advantage_head_mut(&mut self) -> &mut [DenseLayer] {
        &mut self.advantage
    }

    /// Encoder, then value head, then advantage head.
    pub fn layers(&self) -> impl Iterator<Item = &DenseLayer> {
        self.encoder.iter().chain(&self.value).chain(&self.advantage)
    }

    pub fn layers_mut(&mut self) -> impl Iterator<Item = &mut DenseLayer> {
        self.encoder
            .iter_mut()
            .chain(self.value.iter_mut())
            .chain(self.advantage.iter_mut())
    }

    pub fn num_params(&self) -> usize {
        self.layers().map(DenseLayer::num_params).sum()
    }

    /// All parameters, layer by layer: weights row-major then biases.
    pub fn flat_params(&self) -> Vec<f64> {
        self.layers()
            .flat_map(|l| l.weights.iter().chain(l.biases.iter()).copied())
            .collect()
    }

    pub fn set_flat_params(&mut self, params: &[f64]) -> Result<()> {
        if params.len() != self.num_params() {
            return Err(Error::ArchitectureMismatch(format!(
                "{} parameters supplied, network has {}",
                params.len(),
                self.num_params()
            )));
        }
        let mut it = params.iter();
        for layer in self.layers_mut() {
            for w in layer.weights.iter_mut().chain(layer.biases.iter_mut()) {
                *w = *it.next().expect("length checked");
            }
        }
        Ok(())
    }

    /// Makes `self` a bit-identical copy of `source`'s parameters.
    pub fn copy_params_from(&mut self, source: &DuelingNet) -> Result<()> {
        if self.arch != source.arch {
            return Err(Error::ArchitectureMismatch(format!(
                "{} vs {}",
                self.arch.label(),
                source.arch.label()
            )));
        }
        self.encoder.clone_from(&source.encoder);
        self.value.clone_from(&source.value);
        self.advantage.clone_from(&source.advantage);
        self.seed = source.seed;
        self.updates = source.updates;
        Ok(())
    }

    fn check_width(&self, width: usize) -> Result<()> {
        if width == self.arch.input {
            Ok(())
        } else {
            Err(Error::DimensionMismatch {
                expected: self.arch.input,
                actual: width,
            })
        }
    }

    fn aggregate(&self, value: &Array2<f64>, advantage: Array2<f64>) -> Array2<f64> {
        let mut q = advantage;
        if self.arch.aggregation == Aggregation::MeanSubtracted {
            let mean = q.mean_axis(Axis(1)).expect("at least one action");
            q -= &mean.insert_axis(Axis(1));
        }
        q + value
    }

    pub fn forward(&self, obs: &Observation) -> Result<Vec<f64>> {
        let x = ArrayView2::from_shape((1, obs.len()), obs.as_slice())
            .expect("row view of a slice");
        Ok(self.forward_batch(x)?.into_raw_vec_and_offset().0)
    }

    /// Q-values for a batch, one observation per row.
    pub fn forward_batch(&self, batch: ArrayView2<f64>) -> Result<Array2<f64>> {
        self.check_width(batch.ncols())?;
        let run = |layers: &[DenseLayer], x: Array2<f64>| {
            layers.iter().fold(x, |h, l| l.forward_only(h.view()))
        };
        let trunk = run(&self.encoder, batch.to_owned());
        let v = run(&self.value, trunk.clone());
        let a = run(&self.advantage, trunk);
        Ok(self.aggregate(&v, a))
    }

    fn forward_cached(&self, batch: ArrayView2<f64>) -> (Array2<f64>, ForwardCache) {
        let run = |layers: &[DenseLayer], x: Array2<f64>| {
            let mut caches = Vec::with_capacity(layers.len());
            let out = layers.iter().fold(x, |h, l| {
                let (o, c) = l.forward(h.view());
                caches.push(c);
                o
            });
            (out, caches)
        };
        let (trunk, encoder) = run(&self.encoder, batch.to_owned());
        let (v, value) = run(&self.value, trunk.clone());
        let (a, advantage) = run(&self.advantage, trunk);
        (
            self.aggregate(&v, a),
            ForwardCache {
                encoder,
                value,
                advantage,
            },
        )
    }

    fn backward(&self, cache: &ForwardCache, grad_q: Array2<f64>) -> Gradients {
        let grad_v = grad_q.sum_axis(Axis(1)).insert_axis(Axis(1));
        let mut grad_a = grad_q;
        if self.arch.aggregation == Aggregation::MeanSubtracted {
            let mean = grad_a.mean_axis(Axis(1)).expect("at least one action");
            grad_a -= &mean.insert_axis(Axis(1));
        }
        let back = |layers: &[DenseLayer], caches: &[LayerCache], g: Array2<f64>| {
            let mut grads = Vec::with_capacity(layers.len());
            let mut g = g;
            for (l, c) in layers.iter().zip(caches).rev() {
                let (lg, gin) = l.backward(c, g);
                grads.push(lg);
                g = gin;
            }
            grads.reverse();
            (grads, g)
        };
        let (value, gv) = back(&self.value, &cache.value, grad_v);
        let (advantage, ga) = back(&self.advantage, &cache.advantage, grad_a);
        let (encoder, _) = back(&self.encoder, &cache.encoder, gv + ga);
        Gradients(encoder.into_iter().chain(value).chain(advantage).collect())
    }

    /// Loss `mean(w_i (y_i - Q(s_i, a_i))^2)`, its gradient, and the absolute TD errors.
    pub fn loss_and_gradients(
        &self,
        observations: ArrayView2<f64>,
        actions: &[usize],
        targets: &[f64],
        is_weights: &[f64],
    ) -> Result<(TrainOutcome, Gradients)> {
        let n = observations.nrows();
        self.check_width(observations.ncols())?;
        if n == 0 || actions.len() != n || targets.len() != n || is_weights.len() != n {
            return Err(Error::InvalidConfig(format!(
                "inconsistent batch: {n} observations, {} actions, {} targets, {} weights",
                actions.len(),
                targets.len(),
                is_weights.len()
            )));
        }
        if let Some(i) = targets.iter().position(|y| !y.is_finite()) {
            return Err(Error::NonFinite(format!("target {i} = {}", targets[i])));
        }
        if let Some(i) = is_weights.iter().position(|w| !(w.is_finite() && *w > 0.0)) {
            return Err(Error::InvalidConfig(format!(
                "importance weight {i} = {} is not positive",
                is_weights[i]
            )));
        }
        if let Some(&a) = actions.iter().find(|&&a| a >= self.arch.actions) {
            return Err(Error::ActionOutOfRange {
                index: a,
                size: self.arch.actions,
            });
        }

        let (q, cache) = self.forward_cached(observations);
        if q.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("Q-value activations".into()));
        }
        let mut grad_q = Array2::zeros(q.raw_dim());
        let mut loss = 0.0;
        let mut td_errors = Vec::with_capacity(n);
        for i in 0..n {
            let delta = targets[i] - q[[i, actions[i]]];
            loss += is_weights[i] * delta * delta;
            grad_q[[i, actions[i]]] = -2.0 * is_weights[i] * delta / n as f64;
            td_errors.push(delta.abs());
        }
        loss /= n as f64;
        let grads = self.backward(&cache, grad_q);
        Ok((TrainOutcome { loss, td_errors }, grads))
    }

    /// One Adam step on the weighted squared TD error of the taken actions.
    pub fn train_step(
        &mut self,
        observations: ArrayView2<f64>,
        actions: &[usize],
        targets: &[f64],
        is_weights: &[f64],
        adam: &mut Adam,
    ) -> Result<TrainOutcome> {
        let (outcome, grads) = self.loss_and_gradients(observations, actions, targets, is_weights)?;
        if !outcome.loss.is_finite() {
            return Err(Error::NonFinite(format!("loss = {}", outcome.loss)));
        }
        adam.apply(self, &grads)?;
        self.updates += 1;
        Ok(outcome)
    }
}

/// Stacks observations into a `batch x width` matrix.
pub fn stack_observations<'a, I>(observations: I, width: usize) -> Array2<f64>
where
    I: IntoIterator<Item = &'a Observation>,
{
    let mut data = Vec::new();
    let mut rows = 0;
    for obs in observations {
        assert_eq!(obs.len(), width, "observation width");
        data.extend_from_slice(obs.as_slice());
        rows += 1;
    }
    Array2::from_shape_vec((rows, width), data).expect("shape matches data")
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::{array, Array1};
    use rand::Rng;

    fn tiny_arch() -> Architecture {
        Architecture {
            input: 8,
            actions: 2,
            encoder: vec![5, 4],
            value_head: vec![3],
            advantage_head: vec![6],
            aggregation: Aggregation::MeanSubtracted,
        }
    }

    /// Value head = 1 and advantage head = [0.5, -0.5] through bias-only output layers.
    fn hand_set(aggregation: Aggregation) -> DuelingNet {
        let arch = Architecture {
            input: 2,
            actions: 2,
            encoder: vec![],
            value_head: vec![],
            advantage_head: vec![],
            aggregation,
        };
        let mut net = DuelingNet::zeros(arch).unwrap();
        net.value_head_mut()[0].biases = array![1.0];
        net.advantage_head_mut()[0].biases = array![0.5, -0.5];
        net
    }

    #[test]
    fn dueling_aggregation_arithmetic() {
        let net = hand_set(Aggregation::MeanSubtracted);
        let q = net.forward(&Observation(vec![0.3, -0.2])).unwrap();
        assert_eq!(q, vec![1.5, 0.5]);
    }

    #[test]
    fn zero_network_is_constant() {
        let mut net = DuelingNet::zeros(tiny_arch()).unwrap();
        net.value_head_mut().last_mut().unwrap().biases = array![0.25];
        let q = net.forward(&Observation(vec![0.7; 8])).unwrap();
        assert_eq!(q, vec![0.25, 0.25]);
    }

    #[test]
    fn advantage_shift_leaves_q_invariant() {
        let mut net = DuelingNet::new(tiny_arch(), 3).unwrap();
        let obs = Observation((0..8).map(|i| (i as f64 * 0.37).sin()).collect());
        let before = net.forward(&obs).unwrap();
        net.advantage_head_mut().last_mut().unwrap().biases += 7.5;
        let after = net.forward(&obs).unwrap();
        for (a, b) in before.iter().zip(&after) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn raw_sum_adds_heads() {
        let net = hand_set(Aggregation::RawSum);
        assert_eq!(net.forward(&Observation(vec![0.0, 0.0])).unwrap(), vec![1.5, 0.5]);
        let mut net = net;
        net.advantage_head_mut()[0].biases = array![1.0, 2.0];
        assert_eq!(net.forward(&Observation(vec![0.0, 0.0])).unwrap(), vec![2.0, 3.0]);
    }

    #[test]
    fn relu_two_layer_by_hand() {
        let arch = Architecture {
            input: 2,
            actions: 2,
            encoder: vec![2],
            value_head: vec![],
            advantage_head: vec![],
            aggregation: Aggregation::RawSum,
        };
        let mut net = DuelingNet::zeros(arch).unwrap();
        net.encoder_mut()[0].weights = array![[1.0, -1.0], [2.0, 1.0]];
        net.encoder_mut()[0].biases = array![0.5, -1.0];
        net.value_head_mut()[0].weights = array![[1.0, 1.0]];
        net.advantage_head_mut()[0].weights = array![[1.0, 0.0], [0.0, -2.0]];
        // x = (1, 2): pre = (1 - 2 + 0.5, 2 + 2 - 1) = (-0.5, 3) -> relu (0, 3)
        // V = 3, A = (0, -6), Q = (3, -3)
        let q = net.forward(&Observation(vec![1.0, 2.0])).unwrap();
        assert_eq!(q, vec![3.0, -3.0]);
    }

    #[test]
    fn batch_forward_equals_single_forwards() {
        let net = DuelingNet::new(tiny_arch(), 11).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let obs: Vec<Observation> = (0..8)
            .map(|_| Observation((0..8).map(|_| rng.gen_range(-1.0..1.0)).collect()))
            .collect();
        let batch = net.forward_batch(stack_observations(&obs, 8).view()).unwrap();
        for (i, o) in obs.iter().enumerate() {
            let single = net.forward(o).unwrap();
            for a in 0..2 {
                assert!((batch[[i, a]] - single[a]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn width_mismatch_rejected() {
        let net = DuelingNet::new(tiny_arch(), 1).unwrap();
        assert!(matches!(
            net.forward(&Observation(vec![0.0; 7])),
            Err(Error::DimensionMismatch { expected: 8, actual: 7 })
        ));
    }

    #[test]
    fn seeding_is_deterministic() {
        let a = DuelingNet::new(tiny_arch(), 42).unwrap();
        let b = DuelingNet::new(tiny_arch(), 42).unwrap();
        let c = DuelingNet::new(tiny_arch(), 43).unwrap();
        assert_eq!(a.flat_params(), b.flat_params());
        assert_ne!(a.flat_params(), c.flat_params());
    }

    #[test]
    fn he_init_preserves_second_moment() {
        let mut layer = DenseLayer::zeros(600, 600, Activation::Relu);
        layer.init(&mut ChaCha8Rng::seed_from_u64(9));
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let normal = rand_distr_free_normal(&mut rng, 400 * 600);
        let x = Array2::from_shape_vec((400, 600), normal).unwrap();
        let y = layer.forward_only(x.view());
        let second_moment = y.mapv(|v| v * v).mean().unwrap();
        assert!((second_moment - 1.0).abs() < 0.1, "E[y^2] = {second_moment}");
    }

    // Box-Muller so the test needs no distribution crate.
    fn rand_distr_free_normal(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
        (0..n)
            .map(|_| {
                let u1: f64 = rng.gen_range(f64::EPSILON..1.0);
                let u2: f64 = rng.gen();
                (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
            })
            .collect()
    }

    #[test]
    fn fixed_point_leaves_parameters_unchanged() {
        let mut net = DuelingNet::new(tiny_arch(), 2).unwrap();
        let obs = Array2::from_shape_fn((3, 8), |(i, j)| ((i * 8 + j) as f64 * 0.1).cos());
        let q = net.forward_batch(obs.view()).unwrap();
        let actions = [0, 1, 1];
        let targets: Vec<f64> = actions.iter().enumerate().map(|(i, &a)| q[[i, a]]).collect();
        let before = net.flat_params();
        let mut adam = Adam::new(AdamConfig::default(), &net);
        let out = net
            .train_step(obs.view(), &actions, &targets, &[1.0; 3], &mut adam)
            .unwrap();
        assert_eq!(out.loss, 0.0);
        assert_eq!(out.td_errors, vec![0.0; 3]);
        assert_eq!(net.flat_params(), before);
    }

    #[test]
    fn linear_single_layer_gradient_by_hand() {
        // No hidden layers and raw-sum heads: Q_a = v.x + b_v + A_a.x + b_a.
        let arch = Architecture {
            input: 3,
            actions: 2,
            encoder: vec![],
            value_head: vec![],
            advantage_head: vec![],
            aggregation: Aggregation::RawSum,
        };
        let net = DuelingNet::new(arch, 4).unwrap();
        let x = array![[0.2, -0.4, 0.9]];
        let q = net.forward_batch(x.view()).unwrap();
        let (y, w) = (1.7, 0.6);
        let delta = y - q[[0, 1]];
        let (out, grads) = net.loss_and_gradients(x.view(), &[1], &[y], &[w]).unwrap();
        assert!((out.loss - w * delta * delta).abs() < 1e-14);
        // dL/dW_adv[1, :] = -2 w delta x; row 0 untouched
        let g_adv = &grads.0[1];
        let expected: Array1<f64> = x.row(0).mapv(|xi| -2.0 * w * delta * xi);
        for j in 0..3 {
            assert!((g_adv.weights[[1, j]] - expected[j]).abs() < 1e-14);
            assert_eq!(g_adv.weights[[0, j]], 0.0);
        }
        assert!((g_adv.biases[1] + 2.0 * w * delta).abs() < 1e-14);
        let g_val = &grads.0[0];
        for j in 0..3 {
            assert!((g_val.weights[[0, j]] - expected[j]).abs() < 1e-14);
        }
    }

    #[test]
    fn non_finite_target_rejected() {
        let mut net = DuelingNet::new(tiny_arch(), 2).unwrap();
        let mut adam = Adam::new(AdamConfig::default(), &net);
        let obs = Array2::zeros((1, 8));
        let err = net
            .train_step(obs.view(), &[0], &[f64::NAN], &[1.0], &mut adam)
            .unwrap_err();
        assert!(matches!(err, Error::NonFinite(_)));
        let err = net
            .train_step(obs.view(), &[0], &[1.0], &[0.0], &mut adam)
            .unwrap_err();
        assert!(matches!(err, Error::InvalidConfig(_)));
    }

    #[test]
    fn copy_is_deep_and_checked() {
        let mut source = DuelingNet::new(tiny_arch(), 1).unwrap();
        let mut dest = DuelingNet::new(tiny_arch(), 2).unwrap();
        dest.copy_params_from(&source).unwrap();
        let obs = Observation(vec![0.1; 8]);
        assert_eq!(source.forward(&obs).unwrap(), dest.forward(&obs).unwrap());
        source.encoder_mut()[0].weights[[0, 0]] += 1.0;
        assert_ne!(source.flat_params(), dest.flat_params());

        let mut other = DuelingNet::new(Architecture::uniform(8, 2, 1, 1, 3), 0).unwrap();
        assert!(matches!(
            other.copy_params_from(&source),
            Err(Error::ArchitectureMismatch(_))
        ));
    }

    #[test]
    fn labels() {
        assert_eq!(Architecture::reference(8, 2).label(), "{3+4, n=600}");
        assert_eq!(Architecture::uniform(8, 2, 2, 1, 64).label(), "{2+1, n=64}");
        assert!(tiny_arch().label().starts_with("{encoder=[5, 4]"));
    }
}
