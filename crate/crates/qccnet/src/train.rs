//! Training orchestration: parameter initialization, optimizer routing
//! (Cayley-Adam for Stiefel parameters, Euclidean Adam for the rest), the
//! epoch loop, evaluation, encoding, and checkpoint mapping.

use crate::autograd::{backward, GradientBundle, LossKind, TrainingBatch};
use crate::checkpoint::{Checkpoint, TensorData};
use crate::config::{Mode, RunConfig};
use crate::dataio::{make_batches, partition_per_circuit, zero_pad, Dataset};
use crate::encoder::{mlp_forward, reals_to_state, MlpParams};
use crate::error::{Error, Result};
use crate::linalg::{C64, CMatrix, CVector};
use crate::net::{
    Activation, BlockKind, BlockOperator, Head, MeasurementHead, NetworkParams, StateBundle,
};
use crate::optim::{
    cayley_adam_step, complex_to_reals, euclidean_adam_step, reals_to_complex,
    wirtinger_to_real_pairs, AdamState, CayleyAdamState,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

#[derive(Debug, Clone)]
pub struct Model {
    pub config: RunConfig,
    pub mlp: MlpParams,
    pub net: NetworkParams,
    pub step: u64,
}

/// One line of the metrics stream. `wall_seconds` is omitted from persisted
/// files so identical (config, seed) runs stay byte-identical.
#[derive(Debug, Clone, Serialize)]
pub struct MetricsRecord {
    pub epoch: usize,
    pub train_loss: f64,
    pub per_circuit_acc: Vec<f64>,
    pub mean_acc: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub wall_seconds: Option<f64>,
}

impl MetricsRecord {
    pub fn to_json_line(&self, with_wall: bool) -> String {
        let mut r = self.clone();
        if !with_wall {
            r.wall_seconds = None;
        }
        serde_json::to_string(&r).expect("metrics serialize")
    }
}

fn init_params(config: &RunConfig, rng: &mut ChaCha8Rng) -> Result<(MlpParams, NetworkParams)> {
    config.validate()?;
    let mlp = MlpParams::random(
        config.input_dim(),
        config.mlp_width,
        config.mlp_depth,
        config.m,
        rng,
    )?;
    let mut net = NetworkParams::random(
        config.m,
        config.d,
        config.depth,
        config.effective_c(),
        config.activation,
        config.interaction,
        rng,
    )?;
    // the encoder map of §4.1 includes σ after every layer even for a single
    // circuit, so encode mode always trains with activations on
    net.activation_without_interaction =
        config.nointeraction_activation || config.mode == Mode::Encode;
    Ok((mlp, net))
}

/// Seeded initialization only (the epochs=0 checkpoint).
pub fn init_model(config: &RunConfig) -> Result<Model> {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let (mlp, net) = init_params(config, &mut rng)?;
    Ok(Model { config: config.clone(), mlp, net, step: 0 })
}

fn loss_kind(config: &RunConfig) -> LossKind {
    match config.mode {
        Mode::Classify => LossKind::Classification,
        Mode::Encode => LossKind::Reconstruction,
    }
}

/// Average-pool a padded input down to `c` reconstruction targets. At the
/// full scale (c == input length) this is the identity, i.e. raw pixels.
pub fn pool_target(padded: &[f64], c: usize) -> Result<Vec<f64>> {
    if c == 0 || padded.len() % c != 0 {
        return Err(Error::Shape(format!(
            "cannot pool {} values into {c} targets",
            padded.len()
        )));
    }
    let w = padded.len() / c;
    Ok(padded
        .chunks_exact(w)
        .map(|g| g.iter().sum::<f64>() / w as f64)
        .collect())
}

/// Per-epoch batches: classification uses one-hot targets on raw pixels;
/// encode mode zero-pads inputs and pools them into reconstruction targets.
fn build_epoch_batches(
    config: &RunConfig,
    partition: &crate::dataio::CircuitPartition,
    data: &Dataset,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<TrainingBatch>> {
    let mut batches = make_batches(partition, data, config.batch, rng)?;
    if config.mode == Mode::Encode {
        for b in batches.iter_mut() {
            for (inputs, targets) in b.inputs.iter_mut().zip(b.targets.iter_mut()) {
                for (x, t) in inputs.iter_mut().zip(targets.iter_mut()) {
                    let padded = zero_pad(x)?;
                    *t = pool_target(&padded, config.effective_c())?;
                    *x = padded;
                }
            }
        }
    }
    Ok(batches)
}

struct Optimizers {
    /// per layer, per diagonal circuit index
    diag: Vec<Vec<CayleyAdamState>>,
    head: CayleyAdamState,
    /// per layer, per (i,k) grid slot; populated only for off-diagonal blocks
    offdiag: Vec<Vec<Option<AdamState>>>,
    /// per MLP layer: (weights, biases)
    mlp: Vec<(AdamState, AdamState)>,
}

impl Optimizers {
    fn new(model: &Model) -> Self {
        let m = model.net.m;
        let diag = model
            .net
            .layers
            .iter()
            .map(|l| (0..l.d_out().min(l.d_in())).map(|_| CayleyAdamState::new(m)).collect())
            .collect();
        let offdiag = model
            .net
            .layers
            .iter()
            .map(|l| {
                (0..l.d_out() * l.d_in())
                    .map(|idx| {
                        let (i, k) = (idx / l.d_in(), idx % l.d_in());
                        if l.kind(i, k) == BlockKind::GeneralOffDiagonal {
                            Some(AdamState::new(2 * m * m))
                        } else {
                            None
                        }
                    })
                    .collect()
            })
            .collect();
        let mlp = model
            .mlp
            .layers
            .iter()
            .map(|l| (AdamState::new(l.w.len()), AdamState::new(l.b.len())))
            .collect();
        Optimizers { diag, head: CayleyAdamState::new(m), offdiag, mlp }
    }
}

fn apply_gradients(model: &mut Model, opt: &mut Optimizers, grads: &GradientBundle) -> Result<()> {
    let lr_stiefel = model.config.lr_stiefel;
    let lr_euclid = model.config.lr_euclid;
    for (j, layer) in model.net.layers.iter_mut().enumerate() {
        let d_in = layer.d_in();
        for i in 0..layer.d_out() {
            for k in 0..d_in {
                let Some(g) = grads.layers[j][i * d_in + k].as_ref() else { continue };
                match layer.kind(i, k) {
                    BlockKind::UnitaryDiagonal => {
                        let u = layer.block(i, k).expect("diagonal block present");
                        let next = cayley_adam_step(&mut opt.diag[j][i], u, g, lr_stiefel)?;
                        layer.set_block(i, k, next);
                    }
                    BlockKind::GeneralOffDiagonal => {
                        let blk = layer.block(i, k).expect("off-diagonal block present");
                        let mut theta = complex_to_reals(blk);
                        let grad = wirtinger_to_real_pairs(g);
                        let st = opt.offdiag[j][i * d_in + k].as_mut().expect("adam state");
                        euclidean_adam_step(st, &mut theta, &grad, lr_euclid)?;
                        let next = reals_to_complex(&theta, blk)?;
                        layer.set_block(i, k, next);
                    }
                    BlockKind::Zero => {}
                }
            }
        }
    }
    // measurement head lives on the Stiefel manifold too
    if let Some(Head::Measurement(h)) = model.net.head.as_mut() {
        let next = cayley_adam_step(&mut opt.head, h.p(), &grads.head, lr_stiefel)?;
        *h.p_mut() = next;
    }
    if let Some(mlp_grads) = &grads.mlp {
        for (l, (gw, gb)) in mlp_grads.iter().enumerate() {
            let layer = &mut model.mlp.layers[l];
            let (sw, sb) = &mut opt.mlp[l];
            euclidean_adam_step(sw, &mut layer.w, gw, lr_euclid)?;
            euclidean_adam_step(sb, &mut layer.b, gb, lr_euclid)?;
        }
    }
    model.step += 1;
    Ok(())
}

/// Full training loop over in-memory datasets. Emits one metrics record per
/// epoch through `sink` (stdout streaming, file persistence, or tests).
pub fn train_with_data(
    config: &RunConfig,
    train_data: &Dataset,
    test_data: Option<&Dataset>,
    mut sink: impl FnMut(&MetricsRecord),
) -> Result<Model> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let (mlp, net) = init_params(config, &mut rng)?;
    let mut model = Model { config: config.clone(), mlp, net, step: 0 };
    let mut opt = Optimizers::new(&model);
    let partition = partition_per_circuit(
        train_data.images.len(),
        config.d,
        config.per_circuit_train,
        &mut rng,
    )?;
    let kind = loss_kind(config);
    let t0 = std::time::Instant::now();
    for epoch in 1..=config.effective_epochs() {
        let batches = build_epoch_batches(config, &partition, train_data, &mut rng)?;
        let mut loss_sum = 0.0;
        for batch in &batches {
            let grads = backward(&model.net, Some(&model.mlp), batch, kind)?;
            loss_sum += grads.loss;
            apply_gradients(&mut model, &mut opt, &grads)?;
        }
        let train_loss = loss_sum / batches.len().max(1) as f64;
        let (per_circuit_acc, mean_acc) = match (config.mode, test_data) {
            (Mode::Classify, Some(test)) => {
                let (per, mean) = evaluate_classification(&model, test)?;
                (per, Some(mean))
            }
            _ => (Vec::new(), None),
        };
        sink(&MetricsRecord {
            epoch,
            train_loss,
            per_circuit_acc,
            mean_acc,
            wall_seconds: Some(t0.elapsed().as_secs_f64()),
        });
    }
    Ok(model)
}

/// Encode one classifier input into a d-circuit bundle (the MLP is shared, so
/// every circuit receives the same state) and the network's per-circuit
/// class scores.
fn classify_sample(model: &Model, image: &[f64]) -> Result<Vec<Vec<f64>>> {
    let reals = mlp_forward(&model.mlp, image)?;
    let state = reals_to_state(&reals)?;
    let states = vec![state; model.net.d_in()];
    let bundle = StateBundle::new(model.net.m, states)?.flag_normalized()?;
    model.net.forward(&bundle)
}

fn argmax(row: &[f64]) -> usize {
    let mut best = 0;
    for i in 1..row.len() {
        if row[i] > row[best] {
            best = i;
        }
    }
    best
}

/// Per-circuit test accuracy (argmax of the C outputs vs label) and the mean.
pub fn evaluate_classification(model: &Model, data: &Dataset) -> Result<(Vec<f64>, f64)> {
    if data.images.is_empty() {
        return Err(Error::Shape("empty evaluation set".into()));
    }
    let d_out = model.net.d_out();
    let preds: Vec<Vec<usize>> = data
        .images
        .par_iter()
        .map(|img| classify_sample(model, img).map(|rows| rows.iter().map(|r| argmax(r)).collect()))
        .collect::<Result<Vec<_>>>()?;
    let mut correct = vec![0usize; d_out];
    for (p, &label) in preds.iter().zip(&data.labels) {
        for k in 0..d_out {
            if p[k] == label as usize {
                correct[k] += 1;
            }
        }
    }
    let n = data.images.len() as f64;
    let per: Vec<f64> = correct.iter().map(|&c| c as f64 / n).collect();
    let mean = per.iter().sum::<f64>() / d_out as f64;
    Ok((per, mean))
}

/// Encoded state |q'⟩ per sample (encode mode: d = 1).
pub fn encode_states(model: &Model, data: &Dataset) -> Result<Vec<CVector>> {
    if model.config.mode != Mode::Encode {
        return Err(Error::Config("checkpoint was not trained in encode mode".into()));
    }
    data.images
        .par_iter()
        .map(|img| {
            let padded = zero_pad(img)?;
            let reals = mlp_forward(&model.mlp, &padded)?;
            let state = reals_to_state(&reals)?;
            let bundle = StateBundle::new(model.net.m, vec![state])?.flag_normalized()?;
            Ok(model.net.forward_states(&bundle)?.state(0).clone())
        })
        .collect()
}

// ---------------------------------------------------------------------------
// checkpoint mapping
// ---------------------------------------------------------------------------

pub fn model_to_checkpoint(model: &Model) -> Result<Checkpoint> {
    let mut ck = Checkpoint::default();
    ck.insert(
        "config",
        vec![model.config.to_text().len() as u64],
        TensorData::Bytes(model.config.to_text().into_bytes()),
    )?;
    ck.insert("step", vec![1], TensorData::F64(vec![model.step as f64]))?;
    for (l, layer) in model.mlp.layers.iter().enumerate() {
        ck.insert(
            &format!("mlp.{l}.w"),
            vec![layer.rows as u64, layer.cols as u64],
            TensorData::F64(layer.w.clone()),
        )?;
        ck.insert(&format!("mlp.{l}.b"), vec![layer.rows as u64], TensorData::F64(layer.b.clone()))?;
    }
    let m = model.net.m as u64;
    for (j, layer) in model.net.layers.iter().enumerate() {
        for i in 0..layer.d_out() {
            for k in 0..layer.d_in() {
                if let Some(blk) = layer.block(i, k) {
                    ck.insert(
                        &format!("layer{j}.block.{i}.{k}"),
                        vec![m, m],
                        TensorData::C64(blk.data().to_vec()),
                    )?;
                }
            }
        }
    }
    match model.net.head.as_ref() {
        Some(Head::Measurement(h)) => {
            ck.insert(
                "head.p",
                vec![m, h.outputs() as u64],
                TensorData::C64(h.p().data().to_vec()),
            )?;
        }
        _ => return Err(Error::Config("only measurement heads are checkpointed".into())),
    }
    Ok(ck)
}

pub fn model_from_checkpoint(ck: &Checkpoint) -> Result<Model> {
    let config_text = String::from_utf8(ck.get_bytes("config")?.to_vec())
        .map_err(|e| Error::Format(format!("config tensor not UTF-8: {e}")))?;
    let config = RunConfig::from_text(&config_text)?;
    config.validate()?;
    let step = ck.get_f64("step")?[0] as u64;

    let mut mlp_layers = Vec::with_capacity(config.mlp_depth);
    for l in 0..config.mlp_depth {
        let wt = ck.get(&format!("mlp.{l}.w"))?;
        let (rows, cols) = (wt.dims[0] as usize, wt.dims[1] as usize);
        let w = ck.get_f64(&format!("mlp.{l}.w"))?.to_vec();
        let b = ck.get_f64(&format!("mlp.{l}.b"))?.to_vec();
        mlp_layers.push(crate::encoder::DenseLayer { w, b, rows, cols });
    }
    let mlp = MlpParams::new(mlp_layers)?;

    let m = config.m;
    let d = config.d;
    let mut layers = Vec::with_capacity(config.depth);
    for j in 0..config.depth {
        let mut grid: Vec<Option<(BlockKind, CMatrix)>> = Vec::with_capacity(d * d);
        for i in 0..d {
            for k in 0..d {
                let name = format!("layer{j}.block.{i}.{k}");
                if i == k {
                    let data = ck.get_c64(&name)?.to_vec();
                    grid.push(Some((BlockKind::UnitaryDiagonal, CMatrix::from_vec(m, m, data)?)));
                } else if config.interaction {
                    let data = ck.get_c64(&name)?.to_vec();
                    grid.push(Some((
                        BlockKind::GeneralOffDiagonal,
                        CMatrix::from_vec(m, m, data)?,
                    )));
                } else {
                    grid.push(None);
                }
            }
        }
        layers.push(BlockOperator::new(d, d, m, grid)?);
    }
    let pt = ck.get("head.p")?;
    let p = CMatrix::from_vec(pt.dims[0] as usize, pt.dims[1] as usize, ck.get_c64("head.p")?.to_vec())?;
    let head = Head::Measurement(MeasurementHead::new(p)?);
    let mut net = NetworkParams::new(
        m,
        vec![d; config.depth + 1],
        layers,
        config.activation,
        Some(head),
        config.interaction,
    )?;
    net.activation_without_interaction =
        config.nointeraction_activation || config.mode == Mode::Encode;
    Ok(Model { config, mlp, net, step })
}

/// Stiefel-constraint sweep over every constrained parameter.
pub fn check_stiefel_invariants(model: &Model) -> Result<()> {
    for (j, layer) in model.net.layers.iter().enumerate() {
        layer
            .validate(1e-8)
            .map_err(|e| Error::Invariant(format!("layer {}: {e}", j + 1)))?;
    }
    if let Some(Head::Measurement(h)) = model.net.head.as_ref() {
        if !h.p().is_orthonormal_cols(1e-8) {
            return Err(Error::Invariant("head P drifted off the Stiefel manifold".into()));
        }
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// gradcheck
// ---------------------------------------------------------------------------

/// One backward-vs-finite-differences comparison on a random small
/// configuration; returns the max relative entrywise error (entries below
/// 1e-8 compared absolutely).
pub fn gradcheck_case(
    m: usize,
    d: usize,
    depth: usize,
    activation: Activation,
    kind: LossKind,
    with_mlp: bool,
    interaction: bool,
    seed: u64,
) -> Result<f64> {
    gradcheck_case_with_corruption(m, d, depth, activation, kind, with_mlp, interaction, seed, 0.0)
}

/// Negative-control variant: `corruption` is added to one analytic gradient
/// entry before the comparison, so a nonzero value must fail the check.
#[allow(clippy::too_many_arguments)]
pub fn gradcheck_case_with_corruption(
    m: usize,
    d: usize,
    depth: usize,
    activation: Activation,
    kind: LossKind,
    with_mlp: bool,
    interaction: bool,
    seed: u64,
    corruption: f64,
) -> Result<f64> {
    use rand::Rng;
    if m > 8 {
        return Err(Error::Config("gradcheck is limited to m ≤ 8 (FD cost)".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let c = 2.min(m);
    let mut params = NetworkParams::random(m, d, depth, c, activation, interaction, &mut rng)?;
    params.activation_without_interaction = !interaction; // exercise σ in both modes
    let mlp = if with_mlp {
        Some(MlpParams::random(3, 4, 2, m, &mut rng)?)
    } else {
        None
    };
    let input_dim = if with_mlp { 3 } else { 2 * m };
    let b = 2;
    let inputs: Vec<Vec<Vec<f64>>> = (0..d)
        .map(|_| {
            (0..b)
                .map(|_| (0..input_dim).map(|_| rng.random_range(-1.0..1.0)).collect())
                .collect()
        })
        .collect();
    let targets: Vec<Vec<Vec<f64>>> = (0..d)
        .map(|_| {
            (0..b)
                .map(|_| (0..c).map(|_| rng.random_range(0.0..1.0)).collect())
                .collect()
        })
        .collect();
    let batch = TrainingBatch { inputs, targets };
    let mut analytic = backward(&params, mlp.as_ref(), &batch, kind)?;
    if corruption != 0.0 {
        let e = analytic.head.at(0, 0) + C64::new(corruption, 0.0);
        analytic.head.set(0, 0, e);
    }
    let fd = crate::autograd::finite_difference_oracle(&params, mlp.as_ref(), &batch, kind, 1e-5)?;
    Ok(crate::autograd::max_relative_error(&analytic, &fd, 1e-8))
}

/// The 20-configuration sweep behind the gradient-correctness gate.
pub fn gradcheck_sweep(seed: u64) -> Result<Vec<(String, f64)>> {
    let acts = [Activation::Normalize, Activation::Scale];
    let kinds = [LossKind::Classification, LossKind::Reconstruction];
    let mut results = Vec::new();
    let mut case = 0u64;
    'outer: for &(m, d, depth) in
        &[(2, 1, 1), (2, 2, 2), (4, 2, 1), (4, 3, 2), (2, 3, 3), (4, 1, 2), (4, 2, 3)]
    {
        for &act in &acts {
            for &kind in &kinds {
                let with_mlp = case % 2 == 0;
                let interaction = case % 3 != 0;
                let err = gradcheck_case(m, d, depth, act, kind, with_mlp, interaction, seed + case)?;
                results.push((
                    format!(
                        "m={m} d={d} L={depth} act={act:?} loss={kind:?} mlp={with_mlp} interaction={interaction}"
                    ),
                    err,
                ));
                case += 1;
                if results.len() == 20 {
                    break 'outer;
                }
            }
        }
    }
    Ok(results)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataio::NUM_CLASSES;
    use rand::Rng;

    fn toy_dataset(n: usize, seed: u64) -> Dataset {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Dataset {
            images: (0..n)
                .map(|_| (0..784).map(|_| rng.random_range(0.0..1.0)).collect())
                .collect(),
            labels: (0..n).map(|i| (i % NUM_CLASSES) as u8).collect(),
        }
    }

    fn tiny_config() -> RunConfig {
        let mut cfg = RunConfig::default();
        cfg.m = 16;
        cfg.d = 2;
        cfg.depth = 2;
        cfg.c = 10;
        cfg.batch = 4;
        cfg.per_circuit_train = 8;
        cfg.mlp_depth = 2;
        cfg.mlp_width = 6;
        cfg.epochs = Some(1);
        cfg.interaction = true;
        cfg
    }

    #[test]
    fn one_epoch_trains_and_keeps_invariants() {
        let cfg = tiny_config();
        let data = toy_dataset(64, 1);
        let mut records = Vec::new();
        let model = train_with_data(&cfg, &data, Some(&data), |r| records.push(r.clone())).unwrap();
        assert_eq!(records.len(), 1);
        assert!(records[0].train_loss.is_finite());
        assert_eq!(records[0].per_circuit_acc.len(), 2);
        assert!(model.step > 0);
        check_stiefel_invariants(&model).unwrap();
    }

    #[test]
    fn zero_epochs_equals_initialization() {
        let mut cfg = tiny_config();
        cfg.epochs = Some(0);
        let data = toy_dataset(32, 2);
        let mut records = Vec::new();
        let trained = train_with_data(&cfg, &data, None, |r| records.push(r.clone())).unwrap();
        assert!(records.is_empty());
        let init = init_model(&cfg).unwrap();
        assert_eq!(
            model_to_checkpoint(&trained).unwrap().to_bytes(),
            model_to_checkpoint(&init).unwrap().to_bytes()
        );
    }

    #[test]
    fn training_is_deterministic() {
        let cfg = tiny_config();
        let data = toy_dataset(64, 3);
        let mut m1 = Vec::new();
        let a = train_with_data(&cfg, &data, None, |r| m1.push(r.to_json_line(false))).unwrap();
        let mut m2 = Vec::new();
        let b = train_with_data(&cfg, &data, None, |r| m2.push(r.to_json_line(false))).unwrap();
        assert_eq!(m1, m2);
        assert_eq!(
            model_to_checkpoint(&a).unwrap().to_bytes(),
            model_to_checkpoint(&b).unwrap().to_bytes()
        );
    }

    #[test]
    fn checkpoint_round_trip_preserves_forward_outputs() {
        let cfg = tiny_config();
        let data = toy_dataset(64, 4);
        let model = train_with_data(&cfg, &data, None, |_| {}).unwrap();
        let ck = model_to_checkpoint(&model).unwrap();
        let back = model_from_checkpoint(&Checkpoint::from_bytes(&ck.to_bytes()).unwrap()).unwrap();
        assert_eq!(back.step, model.step);
        let img = &data.images[0];
        let out1 = classify_sample(&model, img).unwrap();
        let out2 = classify_sample(&back, img).unwrap();
        assert_eq!(out1, out2); // bit-identical forward after reload
    }

    #[test]
    fn untrained_accuracy_is_near_chance() {
        let cfg = tiny_config();
        let data = toy_dataset(200, 5);
        let model = init_model(&cfg).unwrap();
        let (_, mean) = evaluate_classification(&model, &data).unwrap();
        assert!((0.05..0.8).contains(&mean), "chance-level accuracy was {mean}");
    }

    #[test]
    fn self_consistent_dataset_reaches_accuracy_one() {
        // label each sample by the model's own argmax → accuracy 1
        let cfg = tiny_config();
        let data = toy_dataset(30, 6);
        let model = init_model(&cfg).unwrap();
        let labels: Vec<u8> = data
            .images
            .iter()
            .map(|img| argmax(&classify_sample(&model, img).unwrap()[0]) as u8)
            .collect();
        let data = Dataset { images: data.images, labels };
        let (per, _) = evaluate_classification(&model, &data).unwrap();
        assert_eq!(per[0], 1.0);
    }

    #[test]
    fn encode_mode_trains_and_emits_unit_states() {
        let mut cfg = RunConfig::default();
        cfg.mode = Mode::Encode;
        cfg.d = 1;
        cfg.m = 4; // 1024 % 4 == 0
        cfg.depth = 1;
        cfg.batch = 4;
        cfg.per_circuit_train = 8;
        cfg.mlp_depth = 2;
        cfg.mlp_width = 6;
        cfg.epochs = Some(1);
        cfg.activation = Activation::Normalize;
        let data = toy_dataset(16, 7);
        let model = train_with_data(&cfg, &data, None, |_| {}).unwrap();
        let states = encode_states(&model, &data).unwrap();
        assert_eq!(states.len(), 16);
        for s in &states {
            assert!((crate::linalg::norm2(s) - 1.0).abs() < 1e-10);
        }
        check_stiefel_invariants(&model).unwrap();
    }

    #[test]
    fn pool_target_examples() {
        assert_eq!(pool_target(&[1.0, 3.0, 2.0, 4.0], 2).unwrap(), vec![2.0, 3.0]);
        let x = vec![0.5; 8];
        assert_eq!(pool_target(&x, 8).unwrap(), x); // identity at full scale
        assert!(pool_target(&x, 3).is_err());
    }

    #[test]
    fn gradcheck_single_case_passes_and_is_reproducible() {
        let e1 = gradcheck_case(
            4,
            2,
            2,
            Activation::Normalize,
            LossKind::Classification,
            true,
            true,
            0,
        )
        .unwrap();
        assert!(e1 <= 1e-4, "max rel error {e1}");
        let e2 = gradcheck_case(
            4,
            2,
            2,
            Activation::Normalize,
            LossKind::Classification,
            true,
            true,
            0,
        )
        .unwrap();
        assert_eq!(e1, e2);
        assert!(matches!(
            gradcheck_case(16, 1, 1, Activation::Scale, LossKind::Classification, false, false, 0),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn metrics_json_shape() {
        let r = MetricsRecord {
            epoch: 3,
            train_loss: 0.25,
            per_circuit_acc: vec![0.5, 0.75],
            mean_acc: Some(0.625),
            wall_seconds: Some(1.5),
        };
        let with = r.to_json_line(true);
        assert!(with.contains("\"wall_seconds\""));
        let without = r.to_json_line(false);
        assert!(!without.contains("wall_seconds"));
        assert!(without.contains("\"epoch\":3"));
        assert!(without.contains("\"mean_acc\":0.625"));
    }
}
