//! Manual reverse-mode differentiation of the full pipeline
//! (MLP → block layers → activations → measurement → loss).
//!
//! Complex parameter gradients follow the conjugate-Wirtinger convention:
//! for a real loss ℓ and parameter U, the returned G satisfies
//! dℓ = 2·Re⟨G, dU⟩_F for arbitrary complex perturbations dU. Real
//! parameters carry ordinary gradients. Complex state cotangents use the
//! same convention throughout the backward sweep.

use crate::encoder::{leaky_relu, MlpParams, LEAKY_RELU_SLOPE};
use crate::error::{Error, Result};
use crate::linalg::{
    accumulate_outer, inner, mat_vec, norm2, C64, CMatrix, CVector,
};
use crate::net::{
    Activation, BlockKind, Head, NetworkParams, StateBundle, NORMALIZE_EPS,
};
use rayon::prelude::*;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LossKind {
    Classification,
    Reconstruction,
}

/// Aligned per-circuit sample arrays: inputs index the d_0 input circuits,
/// targets the d_L output circuits; every circuit contributes exactly B
/// samples.
#[derive(Debug, Clone)]
pub struct TrainingBatch {
    pub inputs: Vec<Vec<Vec<f64>>>,
    pub targets: Vec<Vec<Vec<f64>>>,
}

impl TrainingBatch {
    pub fn batch_size(&self) -> usize {
        self.inputs.first().map_or(0, |c| c.len())
    }

    fn validate(&self, params: &NetworkParams) -> Result<usize> {
        if self.inputs.len() != params.d_in() {
            return Err(Error::Shape(format!(
                "{} input circuits vs network d_0 = {}",
                self.inputs.len(),
                params.d_in()
            )));
        }
        if self.targets.len() != params.d_out() {
            return Err(Error::Shape(format!(
                "{} target circuits vs network d_L = {}",
                self.targets.len(),
                params.d_out()
            )));
        }
        let b = self.batch_size();
        if b == 0 {
            return Err(Error::Shape("empty batch".into()));
        }
        if self.inputs.iter().any(|c| c.len() != b) || self.targets.iter().any(|c| c.len() != b) {
            return Err(Error::Shape("circuits contribute unequal sample counts".into()));
        }
        Ok(b)
    }
}

/// Gradients mirroring the parameter shapes; `None` for structural zeros.
#[derive(Debug, Clone)]
pub struct GradientBundle {
    pub layers: Vec<Vec<Option<CMatrix>>>,
    pub head: CMatrix,
    pub mlp: Option<Vec<(Vec<f64>, Vec<f64>)>>,
    pub loss: f64,
}

impl GradientBundle {
    fn zeros(params: &NetworkParams, encoder: Option<&MlpParams>) -> Self {
        let layers = params
            .layers
            .iter()
            .map(|layer| {
                (0..layer.d_out() * layer.d_in())
                    .map(|idx| {
                        let (i, k) = (idx / layer.d_in(), idx % layer.d_in());
                        if layer.kind(i, k) == BlockKind::Zero {
                            None
                        } else {
                            Some(CMatrix::zeros(params.m, params.m))
                        }
                    })
                    .collect()
            })
            .collect();
        let c = params.head.as_ref().map_or(1, |h| h.outputs());
        GradientBundle {
            layers,
            head: CMatrix::zeros(params.m, c),
            mlp: encoder.map(|mlp| {
                mlp.layers
                    .iter()
                    .map(|l| (vec![0.0; l.w.len()], vec![0.0; l.b.len()]))
                    .collect()
            }),
            loss: 0.0,
        }
    }

    pub fn layer_grad(&self, j: usize, i: usize, k: usize, d_in: usize) -> Option<&CMatrix> {
        self.layers[j][i * d_in + k].as_ref()
    }

    pub fn assert_finite(&self) -> Result<()> {
        for (j, layer) in self.layers.iter().enumerate() {
            for g in layer.iter().flatten() {
                if g.data().iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
                    return Err(Error::Numeric(format!("non-finite gradient in layer {}", j + 1)));
                }
            }
        }
        if self.head.data().iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::Numeric("non-finite gradient in measurement head".into()));
        }
        if let Some(mlp) = &self.mlp {
            for (l, (w, b)) in mlp.iter().enumerate() {
                if w.iter().chain(b).any(|x| !x.is_finite()) {
                    return Err(Error::Numeric(format!("non-finite gradient in MLP layer {l}")));
                }
            }
        }
        Ok(())
    }
}

/// Mean over circuits (rows) of Σ_i (output_{k,i} − z_{k,i})².
pub fn loss_classification(outputs: &[Vec<f64>], targets: &[Vec<f64>]) -> Result<f64> {
    if outputs.len() != targets.len() {
        return Err(Error::Shape(format!(
            "{} output rows vs {} target rows",
            outputs.len(),
            targets.len()
        )));
    }
    let mut total = 0.0;
    for (o, z) in outputs.iter().zip(targets) {
        total += loss_reconstruction(o, z)?;
    }
    Ok(total / outputs.len() as f64)
}

/// Σ_i (output_i − x_i)².
pub fn loss_reconstruction(outputs: &[f64], pixels: &[f64]) -> Result<f64> {
    if outputs.len() != pixels.len() {
        return Err(Error::Shape(format!(
            "{} outputs vs {} targets",
            outputs.len(),
            pixels.len()
        )));
    }
    Ok(outputs.iter().zip(pixels).map(|(o, x)| (o - x) * (o - x)).sum())
}

// ---------------------------------------------------------------------------
// forward with tape
// ---------------------------------------------------------------------------

struct MlpTape {
    /// input to each affine layer
    acts: Vec<Vec<f64>>,
    /// pre-activation of each hidden layer
    pre: Vec<Vec<f64>>,
    out: Vec<f64>,
}

fn mlp_forward_tape(mlp: &MlpParams, x: &[f64]) -> Result<MlpTape> {
    if x.len() != mlp.input_dim() {
        return Err(Error::Shape(format!(
            "MLP input dim {} vs expected {}",
            x.len(),
            mlp.input_dim()
        )));
    }
    let last = mlp.layers.len() - 1;
    let mut acts = Vec::with_capacity(mlp.layers.len());
    let mut pre = Vec::with_capacity(last);
    let mut a = x.to_vec();
    for (l, layer) in mlp.layers.iter().enumerate() {
        acts.push(a.clone());
        let z = layer.affine(&a);
        if l != last {
            pre.push(z.clone());
            a = z.into_iter().map(leaky_relu).collect();
        } else {
            a = z;
        }
    }
    Ok(MlpTape { acts, pre, out: a })
}

struct StateEncodingTape {
    /// unnormalized complex vector assembled from the 2m reals
    raw: CVector,
    norm: f64,
    state: CVector,
}

fn reals_to_state_tape(v: &[f64]) -> Result<StateEncodingTape> {
    let m = v.len() / 2;
    if v.len() % 2 != 0 || m == 0 {
        return Err(Error::Shape(format!("state encoding needs even length, got {}", v.len())));
    }
    let raw = CVector::from_fn(m, |k| C64::new(v[k], v[m + k]));
    let norm = norm2(&raw);
    let state = if norm == 0.0 {
        CVector::basis(m, 0)
    } else {
        raw.scale(C64::new(1.0 / norm, 0.0))
    };
    Ok(StateEncodingTape { raw, norm, state })
}

struct SampleTape {
    mlp: Option<Vec<MlpTape>>,
    encodings: Vec<StateEncodingTape>,
    /// layer inputs q^0 .. q^{L-1}
    layer_inputs: Vec<Vec<CVector>>,
    /// linear layer outputs y^1 .. y^L (pre-activation)
    layer_linear: Vec<Vec<CVector>>,
    /// final (post-activation) states
    final_states: Vec<CVector>,
    /// per output circuit: the inner products c_i = ⟨p_i|q⟩
    head_coeffs: Vec<Vec<C64>>,
    outputs: Vec<Vec<f64>>,
    loss: f64,
}

fn head_matrix(params: &NetworkParams) -> Result<&CMatrix> {
    match params.head.as_ref() {
        Some(Head::Measurement(h)) => Ok(h.p()),
        Some(Head::Observable(_)) => Err(Error::Config(
            "observable heads are excluded from training".into(),
        )),
        None => Err(Error::Config("network has no measurement head".into())),
    }
}

fn sample_forward(
    params: &NetworkParams,
    encoder: Option<&MlpParams>,
    xs: &[&Vec<f64>],
    targets: &[&Vec<f64>],
) -> Result<SampleTape> {
    let p = head_matrix(params)?;
    let c_out = p.cols();
    let use_sigma = params.uses_sigma();

    // encode inputs to states
    let mut mlp_tapes = Vec::new();
    let mut encodings = Vec::with_capacity(xs.len());
    for x in xs {
        let reals: Vec<f64> = match encoder {
            Some(mlp) => {
                let tape = mlp_forward_tape(mlp, x)?;
                let out = tape.out.clone();
                mlp_tapes.push(tape);
                out
            }
            None => (*x).clone(),
        };
        encodings.push(reals_to_state_tape(&reals)?);
    }

    let mut states: Vec<CVector> = encodings.iter().map(|e| e.state.clone()).collect();
    let mut layer_inputs = Vec::with_capacity(params.depth());
    let mut layer_linear = Vec::with_capacity(params.depth());
    for layer in &params.layers {
        layer_inputs.push(states.clone());
        let bundle = StateBundle::new(params.m, states)?;
        let linear = crate::net::apply_block_operator(layer, &bundle)?;
        let linear_states: Vec<CVector> = linear.states().to_vec();
        layer_linear.push(linear_states.clone());
        states = if use_sigma {
            crate::net::activation(params.activation, &linear).states().to_vec()
        } else {
            linear_states
        };
    }

    // measurement
    let mut head_coeffs = Vec::with_capacity(states.len());
    let mut outputs = Vec::with_capacity(states.len());
    for q in &states {
        let mut coeffs = Vec::with_capacity(c_out);
        let mut row = Vec::with_capacity(c_out);
        for i in 0..c_out {
            let c = inner(&p.column(i), q)?;
            row.push(c.norm_sqr());
            coeffs.push(c);
        }
        head_coeffs.push(coeffs);
        outputs.push(row);
    }

    // per-sample loss contribution: Σ_k Σ_i (out − z)²
    let mut loss = 0.0;
    for (row, z) in outputs.iter().zip(targets) {
        loss += loss_reconstruction(row, z)?;
    }

    Ok(SampleTape {
        mlp: encoder.map(|_| mlp_tapes),
        encodings,
        layer_inputs,
        layer_linear,
        final_states: states,
        head_coeffs,
        outputs,
        loss,
    })
}

/// Forward loss only, bit-identical to the loss reported by `backward`.
pub fn evaluate_loss(
    params: &NetworkParams,
    encoder: Option<&MlpParams>,
    batch: &TrainingBatch,
    _loss_kind: LossKind,
) -> Result<f64> {
    let b = batch.validate(params)?;
    let mut total = 0.0;
    for s in 0..b {
        let xs: Vec<&Vec<f64>> = batch.inputs.iter().map(|c| &c[s]).collect();
        let zs: Vec<&Vec<f64>> = batch.targets.iter().map(|c| &c[s]).collect();
        total += sample_forward(params, encoder, &xs, &zs)?.loss;
    }
    Ok(total / (params.d_out() * b) as f64)
}

// ---------------------------------------------------------------------------
// backward
// ---------------------------------------------------------------------------

/// Cotangent pull-back through σ: input is the linear layer output y, `w` the
/// cotangent of σ(y).
fn activation_backward(kind: Activation, apply: bool, y: &CVector, w: &CVector) -> CVector {
    if !apply {
        return w.clone();
    }
    match kind {
        Activation::Identity => w.clone(),
        Activation::Scale => w.scale(C64::new(1.0 / (y.dim() as f64).sqrt(), 0.0)),
        Activation::Normalize => {
            let n = norm2(y);
            if n < NORMALIZE_EPS {
                return w.clone();
            }
            // d(y/‖y‖) couples re/im: W/n − (Re⟨W,y⟩/n³)·y
            let coupling = inner(w, y).expect("dims match").re / (n * n * n);
            let mut out = w.scale(C64::new(1.0 / n, 0.0));
            for k in 0..out.dim() {
                out[k] -= C64::new(coupling, 0.0) * y[k];
            }
            out
        }
    }
}

/// Pull a state cotangent back through the unit-normalization of
/// `reals_to_state` and convert to gradients of the 2m input reals.
fn encoding_backward(tape: &StateEncodingTape, w: &CVector) -> Vec<f64> {
    let m = w.dim();
    let mut dv = vec![0.0; 2 * m];
    if tape.norm == 0.0 {
        return dv; // constant e₁ fallback
    }
    let n = tape.norm;
    let coupling = inner(w, &tape.raw).expect("dims").re / (n * n * n);
    for k in 0..m {
        let wz = w[k] / n - C64::new(coupling, 0.0) * tape.raw[k];
        dv[k] = 2.0 * wz.re;
        dv[m + k] = 2.0 * wz.im;
    }
    dv
}

fn mlp_backward(
    mlp: &MlpParams,
    tape: &MlpTape,
    dout: &[f64],
    grads: &mut [(Vec<f64>, Vec<f64>)],
) {
    let mut delta = dout.to_vec();
    for l in (0..mlp.layers.len()).rev() {
        let layer = &mlp.layers[l];
        let (dw, db) = &mut grads[l];
        let a = &tape.acts[l];
        for i in 0..layer.rows {
            let di = delta[i];
            db[i] += di;
            let row = &mut dw[i * layer.cols..(i + 1) * layer.cols];
            for (g, aj) in row.iter_mut().zip(a) {
                *g += di * aj;
            }
        }
        if l > 0 {
            let mut prev = vec![0.0; layer.cols];
            for i in 0..layer.rows {
                let di = delta[i];
                let row = &layer.w[i * layer.cols..(i + 1) * layer.cols];
                for (p, wij) in prev.iter_mut().zip(row) {
                    *p += wij * di;
                }
            }
            for (p, z) in prev.iter_mut().zip(&tape.pre[l - 1]) {
                if *z < 0.0 {
                    *p *= LEAKY_RELU_SLOPE;
                }
            }
            delta = prev;
        }
    }
}

/// Reverse-mode gradients for the whole pipeline. The reported loss equals
/// `evaluate_loss` bit for bit (same evaluation order).
pub fn backward(
    params: &NetworkParams,
    encoder: Option<&MlpParams>,
    batch: &TrainingBatch,
    loss_kind: LossKind,
) -> Result<GradientBundle> {
    let b = batch.validate(params)?;
    let p = head_matrix(params)?.clone();
    let use_sigma = params.uses_sigma();
    let inv = 1.0 / (params.d_out() * b) as f64;
    let _ = loss_kind; // classification and reconstruction share the squared-error form

    // adjoints of every block, shared across samples
    let layer_adjoints: Vec<Vec<Option<CMatrix>>> = params
        .layers
        .iter()
        .map(|layer| {
            (0..layer.d_out() * layer.d_in())
                .map(|idx| {
                    layer
                        .block(idx / layer.d_in(), idx % layer.d_in())
                        .map(|blk| blk.adjoint())
                })
                .collect()
        })
        .collect();

    // per-sample tapes (pure, order-preserving parallel map)
    let tapes: Vec<SampleTape> = (0..b)
        .into_par_iter()
        .map(|s| {
            let xs: Vec<&Vec<f64>> = batch.inputs.iter().map(|c| &c[s]).collect();
            let zs: Vec<&Vec<f64>> = batch.targets.iter().map(|c| &c[s]).collect();
            sample_forward(params, encoder, &xs, &zs)
        })
        .collect::<Result<Vec<_>>>()?;

    let mut grads = GradientBundle::zeros(params, encoder);
    let mut total_loss = 0.0;

    for (s, tape) in tapes.iter().enumerate() {
        total_loss += tape.loss;

        // loss and measurement backward
        let d_out = params.d_out();
        let mut cotangents: Vec<CVector> = Vec::with_capacity(d_out);
        for k in 0..d_out {
            let z = &batch.targets[k][s];
            let q = &tape.final_states[k];
            let mut w_q = CVector::zeros(params.m);
            for i in 0..p.cols() {
                let g_i = 2.0 * (tape.outputs[k][i] - z[i]) * inv;
                let c_i = tape.head_coeffs[k][i];
                // state cotangent: Σ_i g_i c_i p_i
                let coef = C64::new(g_i, 0.0) * c_i;
                for r in 0..params.m {
                    w_q[r] += coef * p.at(r, i);
                }
                // head gradient column i: g_i · conj(c_i) · q
                let hcoef = C64::new(g_i, 0.0) * c_i.conj();
                for r in 0..params.m {
                    let cur = grads.head.at(r, i);
                    grads.head.set(r, i, cur + hcoef * q[r]);
                }
            }
            cotangents.push(w_q);
        }

        // layer backward, top to bottom
        for j in (0..params.depth()).rev() {
            let layer = &params.layers[j];
            let d_in = layer.d_in();
            // through σ
            let w_linear: Vec<CVector> = cotangents
                .iter()
                .enumerate()
                .map(|(i, w)| {
                    activation_backward(params.activation, use_sigma, &tape.layer_linear[j][i], w)
                })
                .collect();
            // parameter gradients and input cotangents
            let mut w_prev: Vec<CVector> = (0..d_in).map(|_| CVector::zeros(params.m)).collect();
            for i in 0..layer.d_out() {
                for k in 0..d_in {
                    if layer.kind(i, k) == BlockKind::Zero {
                        continue;
                    }
                    let g = grads.layers[j][i * d_in + k].as_mut().expect("non-zero block");
                    accumulate_outer(g, &w_linear[i], &tape.layer_inputs[j][k]);
                    let adj = layer_adjoints[j][i * d_in + k].as_ref().expect("block");
                    w_prev[k].add_assign(&mat_vec(adj, &w_linear[i])?);
                }
            }
            cotangents = w_prev;
        }

        // into the encoder
        if let Some(mlp) = encoder {
            let mlp_tapes = tape.mlp.as_ref().expect("mlp tapes recorded");
            let mlp_grads = grads.mlp.as_mut().expect("mlp grads allocated");
            for k in 0..params.d_in() {
                let dv = encoding_backward(&tape.encodings[k], &cotangents[k]);
                mlp_backward(mlp, &mlp_tapes[k], &dv, mlp_grads);
            }
        }
    }

    grads.loss = total_loss * inv;
    grads.assert_finite()?;
    Ok(grads)
}

// ---------------------------------------------------------------------------
// finite differences
// ---------------------------------------------------------------------------

/// Central-difference conjugate-Wirtinger gradient of an arbitrary scalar
/// function of a complex matrix: perturbing re(U_ab) by ±h estimates
/// 2·re(G_ab), perturbing im(U_ab) estimates 2·im(G_ab).
pub fn fd_complex_gradient(
    mut f: impl FnMut(&CMatrix) -> Result<f64>,
    u: &CMatrix,
    h: f64,
) -> Result<CMatrix> {
    let mut g = CMatrix::zeros(u.rows(), u.cols());
    let mut work = u.clone();
    for i in 0..u.rows() {
        for j in 0..u.cols() {
            let base = u.at(i, j);
            work.set(i, j, base + C64::new(h, 0.0));
            let fp = f(&work)?;
            work.set(i, j, base - C64::new(h, 0.0));
            let fm = f(&work)?;
            let dre = (fp - fm) / (2.0 * h);
            work.set(i, j, base + C64::new(0.0, h));
            let fp = f(&work)?;
            work.set(i, j, base - C64::new(0.0, h));
            let fm = f(&work)?;
            let dim = (fp - fm) / (2.0 * h);
            work.set(i, j, base);
            g.set(i, j, C64::new(dre / 2.0, dim / 2.0));
        }
    }
    Ok(g)
}

/// Central differences over every parameter component; unitary constraints
/// are NOT enforced during perturbation (ambient-space derivative).
pub fn finite_difference_oracle(
    params: &NetworkParams,
    encoder: Option<&MlpParams>,
    batch: &TrainingBatch,
    loss_kind: LossKind,
    h: f64,
) -> Result<GradientBundle> {
    assert!(h > 0.0, "step must be positive");
    let mut grads = GradientBundle::zeros(params, encoder);
    grads.loss = evaluate_loss(params, encoder, batch, loss_kind)?;

    // block parameters
    for j in 0..params.depth() {
        let d_in = params.layers[j].d_in();
        for i in 0..params.layers[j].d_out() {
            for k in 0..d_in {
                if params.layers[j].kind(i, k) == BlockKind::Zero {
                    continue;
                }
                let base = params.layers[j].block(i, k).unwrap().clone();
                let mut work = params.clone();
                let g = fd_complex_gradient(
                    |blk| {
                        work.layers[j].set_block(i, k, blk.clone());
                        evaluate_loss(&work, encoder, batch, loss_kind)
                    },
                    &base,
                    h,
                )?;
                grads.layers[j][i * d_in + k] = Some(g);
            }
        }
    }

    // measurement head
    {
        let base = head_matrix(params)?.clone();
        let mut work = params.clone();
        grads.head = fd_complex_gradient(
            |pm| {
                if let Some(Head::Measurement(head)) = work.head.as_mut() {
                    *head.p_mut() = pm.clone();
                }
                evaluate_loss(&work, encoder, batch, loss_kind)
            },
            &base,
            h,
        )?;
    }

    // MLP parameters
    if let Some(mlp) = encoder {
        let mlp_grads = grads.mlp.as_mut().unwrap();
        let mut work = mlp.clone();
        for l in 0..mlp.layers.len() {
            for idx in 0..mlp.layers[l].w.len() {
                let base = mlp.layers[l].w[idx];
                work.layers[l].w[idx] = base + h;
                let fp = evaluate_loss(params, Some(&work), batch, loss_kind)?;
                work.layers[l].w[idx] = base - h;
                let fm = evaluate_loss(params, Some(&work), batch, loss_kind)?;
                work.layers[l].w[idx] = base;
                mlp_grads[l].0[idx] = (fp - fm) / (2.0 * h);
            }
            for idx in 0..mlp.layers[l].b.len() {
                let base = mlp.layers[l].b[idx];
                work.layers[l].b[idx] = base + h;
                let fp = evaluate_loss(params, Some(&work), batch, loss_kind)?;
                work.layers[l].b[idx] = base - h;
                let fm = evaluate_loss(params, Some(&work), batch, loss_kind)?;
                work.layers[l].b[idx] = base;
                mlp_grads[l].1[idx] = (fp - fm) / (2.0 * h);
            }
        }
    }

    Ok(grads)
}

/// Max relative entrywise deviation between two gradient bundles; entries
/// with magnitude below `abs_floor` are compared absolutely.
pub fn max_relative_error(a: &GradientBundle, b: &GradientBundle, abs_floor: f64) -> f64 {
    fn cmp(x: f64, y: f64, floor: f64) -> f64 {
        let diff = (x - y).abs();
        let scale = x.abs().max(y.abs());
        if scale < floor {
            diff / floor.max(f64::MIN_POSITIVE)
        } else {
            diff / scale
        }
    }
    let mut worst = 0.0f64;
    for (la, lb) in a.layers.iter().zip(&b.layers) {
        for (ga, gb) in la.iter().zip(lb) {
            if let (Some(ga), Some(gb)) = (ga, gb) {
                for (za, zb) in ga.data().iter().zip(gb.data()) {
                    worst = worst.max(cmp(za.re, zb.re, abs_floor));
                    worst = worst.max(cmp(za.im, zb.im, abs_floor));
                }
            }
        }
    }
    for (za, zb) in a.head.data().iter().zip(b.head.data()) {
        worst = worst.max(cmp(za.re, zb.re, abs_floor));
        worst = worst.max(cmp(za.im, zb.im, abs_floor));
    }
    if let (Some(ma), Some(mb)) = (&a.mlp, &b.mlp) {
        for ((wa, ba), (wb, bb)) in ma.iter().zip(mb) {
            for (x, y) in wa.iter().zip(wb).chain(ba.iter().zip(bb)) {
                worst = worst.max(cmp(*x, *y, abs_floor));
            }
        }
    }
    worst
}
