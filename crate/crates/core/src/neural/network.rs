use ndarray::{Array1, Array2, ArrayView2, Axis, Zip};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::Activation;
use crate::error::{Error, Result};

/// Glorot/Xavier uniform initialisation: entries drawn from `[-b, b]` with
/// `b = sqrt(6 / (fan_in + fan_out))`. The matrix has shape `fan_out x fan_in`.
pub fn glorot_init(fan_in: usize, fan_out: usize, seed: u64) -> Result<Array2<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    glorot_uniform(fan_in, fan_out, &mut rng)
}

pub(crate) fn glorot_uniform<R: Rng + ?Sized>(
    fan_in: usize,
    fan_out: usize,
    rng: &mut R,
) -> Result<Array2<f64>> {
    if fan_in == 0 || fan_out == 0 {
        return Err(Error::dim(format!(
            "glorot init needs positive fan-in/fan-out, got {fan_in}x{fan_out}"
        )));
    }
    let bound = (6.0 / (fan_in + fan_out) as f64).sqrt();
    Ok(Array2::from_shape_simple_fn((fan_out, fan_in), || {
        rng.random_range(-bound..=bound)
    }))
}

/// Dense affine map followed by an element-wise activation: `y = act(W x + b)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "LayerRecord", into = "LayerRecord")]
pub struct DenseLayer {
    weights: Array2<f64>,
    bias: Array1<f64>,
    activation: Activation,
}

impl DenseLayer {
    pub fn new(weights: Array2<f64>, bias: Array1<f64>, activation: Activation) -> Result<Self> {
        let (out_dim, in_dim) = weights.dim();
        if out_dim == 0 || in_dim == 0 {
            return Err(Error::dim("layer dimensions must be positive"));
        }
        if bias.len() != out_dim {
            return Err(Error::dim(format!(
                "bias length {} does not match {out_dim} output units",
                bias.len()
            )));
        }
        if let Activation::LeakyRelu { alpha } = activation {
            if !(alpha > 0.0 && alpha.is_finite()) {
                return Err(Error::config(format!("LReLU alpha must be positive, got {alpha}")));
            }
        }
        // Standard layout keeps `as_slice_mut` available for the optimiser.
        Ok(Self {
            weights: weights.as_standard_layout().into_owned(),
            bias,
            activation,
        })
    }

    pub fn glorot<R: Rng + ?Sized>(
        in_dim: usize,
        out_dim: usize,
        activation: Activation,
        rng: &mut R,
    ) -> Result<Self> {
        let weights = glorot_uniform(in_dim, out_dim, rng)?;
        Self::new(weights, Array1::zeros(out_dim), activation)
    }

    pub fn in_dim(&self) -> usize {
        self.weights.ncols()
    }

    pub fn out_dim(&self) -> usize {
        self.weights.nrows()
    }

    pub fn activation(&self) -> Activation {
        self.activation
    }

    pub fn weights(&self) -> &Array2<f64> {
        &self.weights
    }

    pub fn bias(&self) -> &Array1<f64> {
        &self.bias
    }

    pub fn weights_mut(&mut self) -> &mut Array2<f64> {
        &mut self.weights
    }

    pub fn bias_mut(&mut self) -> &mut Array1<f64> {
        &mut self.bias
    }

    fn pre_activation(&self, input: &ArrayView2<f64>) -> Array2<f64> {
        let mut pre = input.dot(&self.weights.t());
        pre += &self.bias;
        pre
    }
}

#[derive(Serialize, Deserialize)]
struct LayerRecord {
    in_dim: usize,
    out_dim: usize,
    activation: Activation,
    weights: Vec<f64>,
    bias: Vec<f64>,
}

impl From<DenseLayer> for LayerRecord {
    fn from(layer: DenseLayer) -> Self {
        LayerRecord {
            in_dim: layer.in_dim(),
            out_dim: layer.out_dim(),
            activation: layer.activation,
            weights: layer.weights.iter().copied().collect(),
            bias: layer.bias.to_vec(),
        }
    }
}

impl TryFrom<LayerRecord> for DenseLayer {
    type Error = Error;

    fn try_from(rec: LayerRecord) -> Result<Self> {
        let weights = Array2::from_shape_vec((rec.out_dim, rec.in_dim), rec.weights)
            .map_err(|e| Error::dim(format!("layer weights: {e}")))?;
        DenseLayer::new(weights, Array1::from(rec.bias), rec.activation)
    }
}

/// Feed-forward stack of dense layers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "NetworkRecord", into = "NetworkRecord")]
pub struct Network {
    layers: Vec<DenseLayer>,
}

#[derive(Serialize, Deserialize)]
struct NetworkRecord {
    layers: Vec<DenseLayer>,
}

impl From<Network> for NetworkRecord {
    fn from(net: Network) -> Self {
        NetworkRecord { layers: net.layers }
    }
}

impl TryFrom<NetworkRecord> for Network {
    type Error = Error;

    fn try_from(rec: NetworkRecord) -> Result<Self> {
        Network::from_layers(rec.layers)
    }
}

/// Everything `backward` needs from a forward pass over a batch.
///
/// `activations[0]` is the input; `activations[i + 1]` is the output of layer
/// `i`, whose pre-activation is `pre_activations[i]`. Rows are samples.
#[derive(Debug, Clone)]
pub struct ForwardTrace {
    activations: Vec<Array2<f64>>,
    pre_activations: Vec<Array2<f64>>,
}

impl ForwardTrace {
    pub fn output(&self) -> &Array2<f64> {
        self.activations.last().expect("trace holds at least the input")
    }

    pub fn input(&self) -> &Array2<f64> {
        &self.activations[0]
    }

    pub fn activations(&self) -> &[Array2<f64>] {
        &self.activations
    }

    pub fn pre_activations(&self) -> &[Array2<f64>] {
        &self.pre_activations
    }

    pub fn batch_size(&self) -> usize {
        self.activations[0].nrows()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LayerGradient {
    pub weights: Array2<f64>,
    pub bias: Array1<f64>,
}

/// Parameter gradients (summed over the batch rows) plus the gradient with
/// respect to the network input.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub layers: Vec<LayerGradient>,
    pub input: Option<Array2<f64>>,
}

impl Gradients {
    /// Flat views in the same order as [`Network::parameters_mut`].
    pub fn as_slices(&self) -> Vec<&[f64]> {
        let mut out = Vec::with_capacity(self.layers.len() * 2);
        for g in &self.layers {
            out.push(g.weights.as_slice().expect("standard layout"));
            out.push(g.bias.as_slice().expect("standard layout"));
        }
        out
    }

    pub fn is_finite(&self) -> bool {
        self.layers
            .iter()
            .all(|g| g.weights.iter().chain(g.bias.iter()).all(|v| v.is_finite()))
    }
}

impl Network {
    pub fn from_layers(layers: Vec<DenseLayer>) -> Result<Self> {
        if layers.is_empty() {
            return Err(Error::dim("network needs at least one layer"));
        }
        for (i, pair) in layers.windows(2).enumerate() {
            if pair[0].out_dim() != pair[1].in_dim() {
                return Err(Error::dim(format!(
                    "layer {i} outputs {} units but layer {} expects {}",
                    pair[0].out_dim(),
                    i + 1,
                    pair[1].in_dim()
                )));
            }
        }
        Ok(Self { layers })
    }

    /// Multi-layer perceptron with `hidden_activation` on every hidden layer
    /// and `output_activation` on the last one. Weights are Glorot-uniform,
    /// biases zero.
    pub fn mlp<R: Rng + ?Sized>(
        input_dim: usize,
        hidden: &[usize],
        output_dim: usize,
        hidden_activation: Activation,
        output_activation: Activation,
        rng: &mut R,
    ) -> Result<Self> {
        let mut dims = Vec::with_capacity(hidden.len() + 2);
        dims.push(input_dim);
        dims.extend_from_slice(hidden);
        dims.push(output_dim);
        let mut layers = Vec::with_capacity(dims.len() - 1);
        for (i, pair) in dims.windows(2).enumerate() {
            let act = if i + 2 == dims.len() {
                output_activation
            } else {
                hidden_activation
            };
            layers.push(DenseLayer::glorot(pair[0], pair[1], act, rng)?);
        }
        Self::from_layers(layers)
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].in_dim()
    }

    pub fn output_dim(&self) -> usize {
        self.layers[self.layers.len() - 1].out_dim()
    }

    pub fn layers(&self) -> &[DenseLayer] {
        &self.layers
    }

    pub fn layers_mut(&mut self) -> &mut [DenseLayer] {
        &mut self.layers
    }

    pub fn parameter_count(&self) -> usize {
        self.layers
            .iter()
            .map(|l| l.weights.len() + l.bias.len())
            .sum()
    }

    /// Sizes of each parameter tensor, in [`Network::parameters_mut`] order.
    pub fn parameter_shapes(&self) -> Vec<usize> {
        self.layers
            .iter()
            .flat_map(|l| [l.weights.len(), l.bias.len()])
            .collect()
    }

    /// Mutable flat views of all weights and biases (weights then bias, per layer).
    pub fn parameters_mut(&mut self) -> Vec<&mut [f64]> {
        let mut out = Vec::with_capacity(self.layers.len() * 2);
        for l in &mut self.layers {
            out.push(l.weights.as_slice_mut().expect("standard layout"));
            out.push(l.bias.as_slice_mut().expect("standard layout"));
        }
        out
    }

    fn check_input(&self, input: &ArrayView2<f64>) -> Result<()> {
        if input.ncols() != self.input_dim() {
            return Err(Error::dim(format!(
                "network expects {} inputs, got {}",
                self.input_dim(),
                input.ncols()
            )));
        }
        if input.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numeric("network input contains NaN or infinity".into()));
        }
        Ok(())
    }

    /// Forward pass on a single input vector, keeping the trace for `backward`.
    pub fn forward(&self, input: &[f64]) -> Result<ForwardTrace> {
        let view = ArrayView2::from_shape((1, input.len()), input)
            .map_err(|e| Error::dim(e.to_string()))?;
        self.forward_batch(view)
    }

    /// Forward pass on a batch (rows are samples), keeping the trace.
    pub fn forward_batch(&self, input: ArrayView2<f64>) -> Result<ForwardTrace> {
        self.check_input(&input)?;
        let mut activations = Vec::with_capacity(self.layers.len() + 1);
        let mut pre_activations = Vec::with_capacity(self.layers.len());
        activations.push(input.to_owned());
        for layer in &self.layers {
            let pre = layer.pre_activation(&activations.last().unwrap().view());
            let act = layer.activation;
            let post = pre.mapv(|v| act.apply(v));
            debug_assert!(codomain_holds(act, &post));
            pre_activations.push(pre);
            activations.push(post);
        }
        Ok(ForwardTrace {
            activations,
            pre_activations,
        })
    }

    /// Forward pass without keeping intermediate values.
    pub fn predict_batch(&self, input: ArrayView2<f64>) -> Result<Array2<f64>> {
        self.check_input(&input)?;
        let mut current = input.to_owned();
        for layer in &self.layers {
            let act = layer.activation;
            let mut pre = layer.pre_activation(&current.view());
            pre.mapv_inplace(|v| act.apply(v));
            debug_assert!(codomain_holds(act, &pre));
            current = pre;
        }
        Ok(current)
    }

    pub fn predict(&self, input: &[f64]) -> Result<Vec<f64>> {
        let view = ArrayView2::from_shape((1, input.len()), input)
            .map_err(|e| Error::dim(e.to_string()))?;
        Ok(self.predict_batch(view)?.into_raw_vec_and_offset().0)
    }

    /// Reverse-mode pass. `output_gradient` is dL/d(output) with one row per
    /// traced sample; parameter gradients are summed over rows.
    pub fn backward(
        &self,
        trace: &ForwardTrace,
        output_gradient: ArrayView2<f64>,
        with_input_gradient: bool,
    ) -> Result<Gradients> {
        if trace.pre_activations.len() != self.layers.len()
            || trace.activations.len() != self.layers.len() + 1
        {
            return Err(Error::State(format!(
                "trace holds {} cached layers but the network has {}",
                trace.pre_activations.len(),
                self.layers.len()
            )));
        }
        for (i, (layer, pre)) in self.layers.iter().zip(&trace.pre_activations).enumerate() {
            if pre.ncols() != layer.out_dim() || trace.activations[i].ncols() != layer.in_dim() {
                return Err(Error::State(format!(
                    "cached activations of layer {i} do not belong to this network"
                )));
            }
        }
        if output_gradient.dim() != trace.output().dim() {
            return Err(Error::dim(format!(
                "output gradient has shape {:?}, expected {:?}",
                output_gradient.dim(),
                trace.output().dim()
            )));
        }

        let mut grad = output_gradient.to_owned();
        let mut layer_grads = Vec::with_capacity(self.layers.len());
        let mut input_grad = None;
        for (i, layer) in self.layers.iter().enumerate().rev() {
            let act = layer.activation;
            Zip::from(&mut grad)
                .and(&trace.pre_activations[i])
                .and(&trace.activations[i + 1])
                .for_each(|g, &pre, &post| *g *= act.derivative(pre, post));
            let weights = grad.t().dot(&trace.activations[i]);
            let bias = grad.sum_axis(Axis(0));
            layer_grads.push(LayerGradient { weights, bias });
            if i > 0 {
                grad = grad.dot(&layer.weights);
            } else if with_input_gradient {
                input_grad = Some(grad.dot(&layer.weights));
            }
        }
        layer_grads.reverse();
        Ok(Gradients {
            layers: layer_grads,
            input: input_grad,
        })
    }
}

fn codomain_holds(act: Activation, values: &Array2<f64>) -> bool {
    match act {
        Activation::Sigmoid => values.iter().all(|&v| v > 0.0 && v < 1.0),
        Activation::Tanh => values.iter().all(|&v| v > -1.0 && v < 1.0),
        _ => true,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn glorot_bounds_and_determinism() {
        let w = glorot_init(3, 2, 7).unwrap();
        assert_eq!(w.dim(), (2, 3));
        let b = (6.0f64 / 5.0).sqrt();
        assert!(w.iter().all(|v| v.abs() <= b));
        assert_eq!(w, glorot_init(3, 2, 7).unwrap());

        let w1 = glorot_init(1, 1, 99).unwrap();
        assert!(w1[[0, 0]].abs() <= 3f64.sqrt());
    }

    #[test]
    fn glorot_rejects_zero_dims() {
        assert!(matches!(glorot_init(0, 2, 1), Err(Error::Dimension(_))));
        assert!(matches!(glorot_init(2, 0, 1), Err(Error::Dimension(_))));
    }

    #[test]
    fn identity_layer_passes_input_through() {
        let layer = DenseLayer::new(
            Array2::eye(3),
            Array1::zeros(3),
            Activation::Identity,
        )
        .unwrap();
        let net = Network::from_layers(vec![layer]).unwrap();
        let out = net.predict(&[1.5, -2.0, 0.25]).unwrap();
        assert_eq!(out, vec![1.5, -2.0, 0.25]);
    }

    #[test]
    fn forward_rejects_bad_input() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let net = Network::mlp(
            3,
            &[4],
            2,
            Activation::LeakyRelu { alpha: 0.4 },
            Activation::Tanh,
            &mut rng,
        )
        .unwrap();
        assert!(matches!(net.forward(&[1.0, 2.0]), Err(Error::Dimension(_))));
        assert!(matches!(
            net.forward(&[1.0, f64::NAN, 0.0]),
            Err(Error::Numeric(_))
        ));
    }

    #[test]
    fn linear_neuron_gradient() {
        let layer = DenseLayer::new(array![[2.0]], array![0.0], Activation::Identity).unwrap();
        let net = Network::from_layers(vec![layer]).unwrap();
        let trace = net.forward(&[3.0]).unwrap();
        let g = net.backward(&trace, array![[1.0]].view(), true).unwrap();
        assert_eq!(g.layers[0].weights[[0, 0]], 3.0);
        assert_eq!(g.layers[0].bias[0], 1.0);
        assert_eq!(g.input.unwrap()[[0, 0]], 2.0);
    }

    #[test]
    fn zero_output_gradient_gives_zero_parameter_gradients() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let net = Network::mlp(
            4,
            &[5, 3],
            2,
            Activation::LeakyRelu { alpha: 0.4 },
            Activation::Sigmoid,
            &mut rng,
        )
        .unwrap();
        let trace = net.forward(&[0.3, -0.1, 0.9, 2.0]).unwrap();
        let g = net
            .backward(&trace, Array2::zeros((1, 2)).view(), false)
            .unwrap();
        assert!(g
            .layers
            .iter()
            .all(|l| l.weights.iter().chain(l.bias.iter()).all(|&v| v == 0.0)));
    }

    #[test]
    fn backward_rejects_foreign_trace() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let a = Network::mlp(3, &[4], 2, Activation::Tanh, Activation::Identity, &mut rng).unwrap();
        let b = Network::mlp(3, &[4, 4], 2, Activation::Tanh, Activation::Identity, &mut rng)
            .unwrap();
        let trace = a.forward(&[0.0, 1.0, 2.0]).unwrap();
        let err = b
            .backward(&trace, Array2::ones((1, 2)).view(), false)
            .unwrap_err();
        assert!(matches!(err, Error::State(_)));
    }

    #[test]
    fn chained_dims_are_enforced() {
        let l1 = DenseLayer::new(Array2::zeros((4, 3)), Array1::zeros(4), Activation::Tanh).unwrap();
        let l2 = DenseLayer::new(Array2::zeros((2, 5)), Array1::zeros(2), Activation::Tanh).unwrap();
        assert!(Network::from_layers(vec![l1, l2]).is_err());
    }

    #[test]
    fn serde_round_trip_is_bit_exact() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let net = Network::mlp(
            5,
            &[7, 3],
            2,
            Activation::LeakyRelu { alpha: 0.4 },
            Activation::Tanh,
            &mut rng,
        )
        .unwrap();
        let text = serde_json::to_string(&net).unwrap();
        let back: Network = serde_json::from_str(&text).unwrap();
        for (a, b) in net.layers().iter().zip(back.layers()) {
            for (x, y) in a.weights().iter().zip(b.weights()) {
                assert_eq!(x.to_bits(), y.to_bits());
            }
        }
        assert_eq!(net, back);
    }
}
