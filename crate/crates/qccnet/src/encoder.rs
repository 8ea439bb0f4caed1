//! Classical-to-quantum encoding: a real-valued MLP produces 2m reals per
//! circuit, interpreted as an m-dimensional complex state, which then flows
//! through the block network. Includes the recurrent variant for sequences.

use crate::error::{Error, Result};
use crate::net::{measure_bundle, NetworkParams, StateBundle};
use crate::linalg::{C64, CVector};
use rand::Rng;
use rand_distr::StandardNormal;

pub const LEAKY_RELU_SLOPE: f64 = 0.01;

/// One affine layer: out = W·x + b, with W stored row-major (out × in).
#[derive(Debug, Clone, PartialEq)]
pub struct DenseLayer {
    pub w: Vec<f64>,
    pub b: Vec<f64>,
    pub rows: usize,
    pub cols: usize,
}

impl DenseLayer {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        DenseLayer { w: vec![0.0; rows * cols], b: vec![0.0; rows], rows, cols }
    }

    /// He-style init scaled for leaky-ReLU.
    pub fn random<R: Rng>(rows: usize, cols: usize, rng: &mut R) -> Self {
        let std = (2.0 / cols as f64).sqrt();
        let w = (0..rows * cols)
            .map(|_| {
                let z: f64 = rng.sample(StandardNormal);
                z * std
            })
            .collect();
        DenseLayer { w, b: vec![0.0; rows], rows, cols }
    }

    pub fn affine(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.cols);
        let mut out = self.b.clone();
        for i in 0..self.rows {
            let row = &self.w[i * self.cols..(i + 1) * self.cols];
            let mut acc = 0.0;
            for (wij, xj) in row.iter().zip(x) {
                acc += wij * xj;
            }
            out[i] += acc;
        }
        out
    }
}

/// Real MLP with leaky-ReLU hidden activations and an affine output layer of
/// width 2m.
#[derive(Debug, Clone, PartialEq)]
pub struct MlpParams {
    pub layers: Vec<DenseLayer>,
}

impl MlpParams {
    pub fn new(layers: Vec<DenseLayer>) -> Result<Self> {
        if layers.is_empty() {
            return Err(Error::Config("MLP needs at least one layer".into()));
        }
        for w in layers.windows(2) {
            if w[1].cols != w[0].rows {
                return Err(Error::Shape(format!(
                    "layer widths do not chain: {} then {}",
                    w[0].rows, w[1].cols
                )));
            }
        }
        if layers.last().unwrap().rows % 2 != 0 {
            return Err(Error::Shape("final MLP width must be even (2m reals)".into()));
        }
        Ok(MlpParams { layers })
    }

    /// `depth` affine layers: input → width → ... → 2m.
    pub fn random<R: Rng>(input: usize, width: usize, depth: usize, m: usize, rng: &mut R) -> Result<Self> {
        assert!(depth >= 1);
        let mut layers = Vec::with_capacity(depth);
        let mut prev = input;
        for _ in 0..depth - 1 {
            layers.push(DenseLayer::random(width, prev, rng));
            prev = width;
        }
        layers.push(DenseLayer::random(2 * m, prev, rng));
        MlpParams::new(layers)
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].cols
    }

    /// Complex output dimension m (final width is 2m).
    pub fn state_dim(&self) -> usize {
        self.layers.last().unwrap().rows / 2
    }
}

pub fn leaky_relu(x: f64) -> f64 {
    if x >= 0.0 {
        x
    } else {
        LEAKY_RELU_SLOPE * x
    }
}

/// Affine + leaky-ReLU per hidden layer; the final layer is affine only.
pub fn mlp_forward(mlp: &MlpParams, x: &[f64]) -> Result<Vec<f64>> {
    if x.len() != mlp.input_dim() {
        return Err(Error::Shape(format!(
            "MLP input dim {} vs expected {}",
            x.len(),
            mlp.input_dim()
        )));
    }
    let last = mlp.layers.len() - 1;
    let mut a = x.to_vec();
    for (l, layer) in mlp.layers.iter().enumerate() {
        let mut z = layer.affine(&a);
        if l != last {
            for v in z.iter_mut() {
                *v = leaky_relu(*v);
            }
        }
        a = z;
    }
    Ok(a)
}

/// First half real parts, second half imaginary parts, then normalized to a
/// unit state. The all-zero input falls back to e₁.
pub fn reals_to_state(v: &[f64]) -> Result<CVector> {
    if v.len() % 2 != 0 || v.is_empty() {
        return Err(Error::Shape(format!("reals_to_state needs even length, got {}", v.len())));
    }
    let m = v.len() / 2;
    let z = CVector::from_fn(m, |k| C64::new(v[k], v[m + k]));
    let n = crate::linalg::norm2(&z);
    if n == 0.0 {
        return Ok(CVector::basis(m, 0));
    }
    Ok(z.scale(C64::new(1.0 / n, 0.0)))
}

/// The shared MLP composed with the block network.
#[derive(Debug, Clone, PartialEq)]
pub struct EncoderPipeline {
    pub mlp: MlpParams,
    pub net: NetworkParams,
}

impl EncoderPipeline {
    pub fn new(mlp: MlpParams, net: NetworkParams) -> Result<Self> {
        if mlp.state_dim() != net.m {
            return Err(Error::Shape(format!(
                "MLP encodes into dim {} but network has m = {}",
                mlp.state_dim(),
                net.m
            )));
        }
        Ok(EncoderPipeline { mlp, net })
    }
}

/// Per-circuit MLP encoding, then the pre-measurement network forward.
pub fn encoder_forward(pipe: &EncoderPipeline, xs: &[Vec<f64>]) -> Result<StateBundle> {
    if xs.len() != pipe.net.d_in() {
        return Err(Error::Shape(format!(
            "{} inputs for {} circuits",
            xs.len(),
            pipe.net.d_in()
        )));
    }
    let states = xs
        .iter()
        .map(|x| reals_to_state(&mlp_forward(&pipe.mlp, x)?))
        .collect::<Result<Vec<_>>>()?;
    let bundle = StateBundle::new(pipe.net.m, states)?.flag_normalized()?;
    pipe.net.forward_states(&bundle)
}

/// Encode states per circuit without running the network (the q̂ of the RNN).
pub fn encode_bundle(mlp: &MlpParams, xs: &[Vec<f64>]) -> Result<StateBundle> {
    let states = xs
        .iter()
        .map(|x| reals_to_state(&mlp_forward(mlp, x)?))
        .collect::<Result<Vec<_>>>()?;
    StateBundle::new(mlp.state_dim(), states)?.flag_normalized()
}

/// Recurrent encoder: f1 reads out, f2 transitions the state.
#[derive(Debug, Clone, PartialEq)]
pub struct RnnParams {
    pub mlp: MlpParams,
    /// Readout network with a measurement head.
    pub f1: NetworkParams,
    /// State-transition network; its head, if any, is never used.
    pub f2: NetworkParams,
}

impl RnnParams {
    pub fn new(mlp: MlpParams, f1: NetworkParams, f2: NetworkParams) -> Result<Self> {
        let m = mlp.state_dim();
        if f1.m != m || f2.m != m {
            return Err(Error::Shape(format!(
                "state dims disagree: mlp {}, f1 {}, f2 {}",
                m, f1.m, f2.m
            )));
        }
        if f2.d_in() != f2.d_out() {
            return Err(Error::Shape("f2 must preserve the circuit count".into()));
        }
        if f1.head.is_none() {
            return Err(Error::Config("f1 needs a measurement head".into()));
        }
        Ok(RnnParams { mlp, f1, f2 })
    }

    /// Deterministic unit-norm initial state: e₁ per circuit.
    pub fn initial_state(&self) -> StateBundle {
        let m = self.mlp.state_dim();
        let d = self.f2.d_in();
        StateBundle::new(m, (0..d).map(|_| CVector::basis(m, 0)).collect())
            .expect("positive dims")
            .flag_normalized()
            .expect("basis states are unit")
    }
}

/// One recurrence step: q_t = (q̃_t + q̂_t)/√2, y_t = f1(q_t).
pub fn rnn_step(
    params: &RnnParams,
    prev: &StateBundle,
    x_t: &[Vec<f64>],
) -> Result<(StateBundle, Vec<Vec<f64>>)> {
    let q_hat = encode_bundle(&params.mlp, x_t)?;
    let q_tilde = params.f2.forward_states(prev)?;
    if q_hat.d() != q_tilde.d() {
        return Err(Error::Shape(format!(
            "{} encoded circuits vs {} transitioned",
            q_hat.d(),
            q_tilde.d()
        )));
    }
    let scale = C64::new(1.0 / 2.0f64.sqrt(), 0.0);
    let states = (0..q_hat.d())
        .map(|k| Ok(q_tilde.state(k).add(q_hat.state(k))?.scale(scale)))
        .collect::<Result<Vec<_>>>()?;
    let q_t = StateBundle::new(q_hat.m(), states)?;
    let readout = params.f1.forward_states(&q_t)?;
    let y_t = measure_bundle(params.f1.head.as_ref().unwrap(), &readout)?;
    Ok((q_t, y_t))
}

/// Sequential unroll from the e₁ initial state.
pub fn rnn_unroll(
    params: &RnnParams,
    x_seq: &[Vec<Vec<f64>>],
) -> Result<(Vec<Vec<Vec<f64>>>, StateBundle)> {
    if x_seq.is_empty() {
        return Err(Error::Shape("rnn_unroll needs at least one timestep".into()));
    }
    let mut state = params.initial_state();
    let mut outputs = Vec::with_capacity(x_seq.len());
    for x_t in x_seq {
        let (next, y_t) = rnn_step(params, &state, x_t)?;
        state = next;
        outputs.push(y_t);
    }
    Ok((outputs, state))
}
