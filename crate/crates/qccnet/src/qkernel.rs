//! Fidelity kernel, Gram matrices, and a one-vs-one soft-margin SVM trained
//! by sequential minimal optimization on precomputed kernels.

use crate::error::{Error, Result};
use crate::linalg::{inner, CVector};
use rayon::prelude::*;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

pub const SVM_C_DEFAULT: f64 = 1.0;
pub const SVM_TOL_DEFAULT: f64 = 1e-3;
/// Hard cap on SMO pair updates.
pub const SMO_MAX_ITER: u64 = 10_000_000;

/// k(p, q) = |⟨p|q⟩|².
pub fn fidelity(p: &CVector, q: &CVector) -> Result<f64> {
    Ok(inner(p, q)?.norm_sqr())
}

/// Symmetric fidelity Gram matrix with optional labels for downstream SVM
/// training and CSV export.
#[derive(Debug, Clone, PartialEq)]
pub struct GramMatrix {
    pub n: usize,
    /// row-major n×n
    pub entries: Vec<f64>,
    pub labels: Option<Vec<u8>>,
}

impl GramMatrix {
    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.n + j]
    }
}

/// Each unordered pair is computed once and mirrored, so symmetry is exact.
pub fn gram(states: &[CVector]) -> Result<GramMatrix> {
    let n = states.len();
    if n == 0 {
        return Err(Error::Shape("gram of zero states".into()));
    }
    let m = states[0].dim();
    if states.iter().any(|s| s.dim() != m) {
        return Err(Error::Shape("gram: states of mixed dimension".into()));
    }
    // upper triangle rows in parallel, then mirror
    let rows: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|i| {
            (i..n)
                .map(|j| fidelity(&states[i], &states[j]).expect("dims checked"))
                .collect()
        })
        .collect();
    let mut entries = vec![0.0; n * n];
    for (i, row) in rows.iter().enumerate() {
        for (off, &v) in row.iter().enumerate() {
            let j = i + off;
            entries[i * n + j] = v;
            entries[j * n + i] = v;
        }
    }
    Ok(GramMatrix { n, entries, labels: None })
}

/// n_test × n_train kernel block, row-major.
pub fn cross_gram(test: &[CVector], train: &[CVector]) -> Result<Vec<f64>> {
    if test.is_empty() || train.is_empty() {
        return Err(Error::Shape("cross_gram with empty state set".into()));
    }
    let m = train[0].dim();
    if test.iter().chain(train).any(|s| s.dim() != m) {
        return Err(Error::Shape("cross_gram: states of mixed dimension".into()));
    }
    let rows: Vec<Vec<f64>> = test
        .par_iter()
        .map(|t| train.iter().map(|s| fidelity(t, s).expect("dims checked")).collect())
        .collect();
    Ok(rows.concat())
}

// ---------------------------------------------------------------------------
// SMO
// ---------------------------------------------------------------------------

/// One trained binary classifier; indices refer to the training order of the
/// kernel it was trained on.
#[derive(Debug, Clone)]
pub struct BinarySvm {
    pub support_idx: Vec<usize>,
    /// α_i·y_i per support index
    pub coef: Vec<f64>,
    pub bias: f64,
    /// dual objective Σα − ½·ΣΣ α_i α_j y_i y_j K_ij at the solution
    pub objective: f64,
    pub iterations: u64,
}

impl BinarySvm {
    /// Decision value Σ_s coef_s·k(x, x_s) + b for a kernel row over the
    /// training set.
    pub fn decision(&self, k_row: &[f64]) -> f64 {
        let mut v = self.bias;
        for (&idx, &c) in self.support_idx.iter().zip(&self.coef) {
            v += c * k_row[idx];
        }
        v
    }
}

/// Max-violating-pair SMO for the C-SVM dual
///   min ½·αᵀQα − Σα  s.t. 0 ≤ α ≤ C, Σ α_i y_i = 0,  Q_ij = y_i y_j K_ij.
///
/// `k` is the n×n kernel row-major; `y` entries must be ±1. Stops when the
/// maximal KKT violation falls to `tol`. A kernel that is indefinite beyond
/// 1e-6 triggers a one-time warning and the pair curvature is clamped.
pub fn smo_train_binary(k: &[f64], y: &[f64], c_reg: f64, tol: f64) -> Result<BinarySvm> {
    let n = y.len();
    if k.len() != n * n {
        return Err(Error::Shape(format!("kernel has {} entries for n = {}", k.len(), n)));
    }
    if y.iter().any(|&v| v != 1.0 && v != -1.0) {
        return Err(Error::Config("labels must be ±1".into()));
    }
    if !y.contains(&1.0) || !y.contains(&-1.0) {
        return Err(Error::Config("need at least one sample per class".into()));
    }
    if c_reg <= 0.0 || tol <= 0.0 {
        return Err(Error::Config("C and tol must be positive".into()));
    }

    let mut alpha = vec![0.0f64; n];
    // gradient of the dual objective: G_i = Σ_j Q_ij α_j − 1
    let mut grad = vec![-1.0f64; n];
    let mut warned = false;
    let mut iters = 0u64;

    loop {
        // working pair: i = argmax −y·G over I_up, j = argmin over I_low
        let mut i_sel = usize::MAX;
        let mut g_max = f64::NEG_INFINITY;
        let mut j_sel = usize::MAX;
        let mut g_min = f64::INFINITY;
        for t in 0..n {
            let v = -y[t] * grad[t];
            let in_up = (y[t] > 0.0 && alpha[t] < c_reg) || (y[t] < 0.0 && alpha[t] > 0.0);
            let in_low = (y[t] < 0.0 && alpha[t] < c_reg) || (y[t] > 0.0 && alpha[t] > 0.0);
            if in_up && v > g_max {
                g_max = v;
                i_sel = t;
            }
            if in_low && v < g_min {
                g_min = v;
                j_sel = t;
            }
        }
        if i_sel == usize::MAX || j_sel == usize::MAX || g_max - g_min <= tol {
            break;
        }
        if iters >= SMO_MAX_ITER {
            eprintln!("warning: SMO hit the {SMO_MAX_ITER} pair-update cap (gap {:.3e})", g_max - g_min);
            break;
        }
        iters += 1;

        let (i, j) = (i_sel, j_sel);
        let kii = k[i * n + i];
        let kjj = k[j * n + j];
        let kij = k[i * n + j];
        let mut quad = kii + kjj - 2.0 * kij;
        if quad < -1e-6 && !warned {
            eprintln!("warning: kernel indefinite beyond 1e-6 (pair curvature {quad:.3e}); proceeding");
            warned = true;
        }
        if quad <= 0.0 {
            quad = 1e-12;
        }

        let old_i = alpha[i];
        let old_j = alpha[j];
        if y[i] != y[j] {
            let delta = (-grad[i] - grad[j]) / quad;
            let diff = alpha[i] - alpha[j];
            alpha[i] += delta;
            alpha[j] += delta;
            if diff > 0.0 {
                if alpha[j] < 0.0 {
                    alpha[j] = 0.0;
                    alpha[i] = diff;
                }
                if alpha[i] > c_reg {
                    alpha[i] = c_reg;
                    alpha[j] = c_reg - diff;
                }
            } else {
                if alpha[i] < 0.0 {
                    alpha[i] = 0.0;
                    alpha[j] = -diff;
                }
                if alpha[j] > c_reg {
                    alpha[j] = c_reg;
                    alpha[i] = c_reg + diff;
                }
            }
        } else {
            let delta = (grad[i] - grad[j]) / quad;
            let sum = alpha[i] + alpha[j];
            alpha[i] -= delta;
            alpha[j] += delta;
            if sum > c_reg {
                if alpha[i] > c_reg {
                    alpha[i] = c_reg;
                    alpha[j] = sum - c_reg;
                }
                if alpha[j] > c_reg {
                    alpha[j] = c_reg;
                    alpha[i] = sum - c_reg;
                }
            } else {
                if alpha[j] < 0.0 {
                    alpha[j] = 0.0;
                    alpha[i] = sum;
                }
                if alpha[i] < 0.0 {
                    alpha[i] = 0.0;
                    alpha[j] = sum;
                }
            }
        }

        let di = alpha[i] - old_i;
        let dj = alpha[j] - old_j;
        if di == 0.0 && dj == 0.0 {
            // numerically stuck pair; treat as converged at this violation level
            break;
        }
        for t in 0..n {
            grad[t] += y[t] * y[i] * k[t * n + i] * di + y[t] * y[j] * k[t * n + j] * dj;
        }
    }

    // bias from free support vectors (KKT: b = −y_i G_i there), else midpoint
    let mut b_sum = 0.0;
    let mut b_cnt = 0usize;
    for t in 0..n {
        if alpha[t] > 0.0 && alpha[t] < c_reg {
            b_sum += -y[t] * grad[t];
            b_cnt += 1;
        }
    }
    let bias = if b_cnt > 0 {
        b_sum / b_cnt as f64
    } else {
        let mut up = f64::NEG_INFINITY;
        let mut low = f64::INFINITY;
        for t in 0..n {
            let v = -y[t] * grad[t];
            let in_up = (y[t] > 0.0 && alpha[t] < c_reg) || (y[t] < 0.0 && alpha[t] > 0.0);
            let in_low = (y[t] < 0.0 && alpha[t] < c_reg) || (y[t] > 0.0 && alpha[t] > 0.0);
            if in_up {
                up = up.max(v);
            }
            if in_low {
                low = low.min(v);
            }
        }
        (up + low) / 2.0
    };

    // dual objective: Σα − ½αᵀQα = Σα − ½Σα_i(G_i + 1) = ½Σα_i(1 − G_i)
    let objective: f64 = (0..n).map(|t| 0.5 * alpha[t] * (1.0 - grad[t])).sum();

    let mut support_idx = Vec::new();
    let mut coef = Vec::new();
    for t in 0..n {
        if alpha[t] > 0.0 {
            support_idx.push(t);
            coef.push(alpha[t] * y[t]);
        }
    }
    Ok(BinarySvm { support_idx, coef, bias, objective, iterations: iters })
}

// ---------------------------------------------------------------------------
// one-vs-one multiclass
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
pub struct SvmModel {
    pub classes: Vec<u8>,
    /// unordered class pairs, aligned with `models`; the first class of a
    /// pair is the positive one
    pub pairs: Vec<(u8, u8)>,
    pub models: Vec<BinarySvm>,
    /// per pair: global training indices of the sub-problem samples
    pub pair_indices: Vec<Vec<usize>>,
    pub n_train: usize,
    pub c_reg: f64,
}

/// One binary SVM per unordered class pair on the restricted sub-Gram.
pub fn ovo_train(gram: &GramMatrix, c_reg: f64, tol: f64) -> Result<SvmModel> {
    let labels = gram
        .labels
        .as_ref()
        .ok_or_else(|| Error::Config("ovo_train needs a labeled Gram matrix".into()))?;
    if labels.len() != gram.n {
        return Err(Error::Shape(format!("{} labels for n = {}", labels.len(), gram.n)));
    }
    let mut classes: Vec<u8> = labels.to_vec();
    classes.sort_unstable();
    classes.dedup();
    if classes.len() < 2 {
        return Err(Error::Config("one-vs-one needs at least two classes".into()));
    }

    let mut pairs = Vec::new();
    let mut jobs = Vec::new();
    for a in 0..classes.len() {
        for b in a + 1..classes.len() {
            let (ca, cb) = (classes[a], classes[b]);
            let idx: Vec<usize> =
                (0..gram.n).filter(|&t| labels[t] == ca || labels[t] == cb).collect();
            let y: Vec<f64> =
                idx.iter().map(|&t| if labels[t] == ca { 1.0 } else { -1.0 }).collect();
            let ns = idx.len();
            let mut sub = vec![0.0; ns * ns];
            for (r, &ti) in idx.iter().enumerate() {
                for (c, &tj) in idx.iter().enumerate() {
                    sub[r * ns + c] = gram.at(ti, tj);
                }
            }
            pairs.push((ca, cb));
            jobs.push((sub, y, idx));
        }
    }
    let models: Vec<BinarySvm> = jobs
        .par_iter()
        .map(|(sub, y, _)| smo_train_binary(sub, y, c_reg, tol))
        .collect::<Result<Vec<_>>>()?;
    let pair_indices = jobs.into_iter().map(|(_, _, idx)| idx).collect();
    Ok(SvmModel { classes, pairs, models, pair_indices, n_train: gram.n, c_reg })
}

/// Majority vote over pairwise decisions; ties go to the smallest class
/// label. `k_test` is n_test × n_train row-major, columns in training order.
pub fn ovo_predict(model: &SvmModel, k_test: &[f64], n_test: usize) -> Result<Vec<u8>> {
    if k_test.len() != n_test * model.n_train {
        return Err(Error::Shape(format!(
            "kernel block has {} entries for {} × {}",
            k_test.len(),
            n_test,
            model.n_train
        )));
    }
    let mut out = Vec::with_capacity(n_test);
    for t in 0..n_test {
        let row = &k_test[t * model.n_train..(t + 1) * model.n_train];
        let mut votes = vec![0usize; model.classes.len()];
        for (p, ((ca, cb), svm)) in model.pairs.iter().zip(&model.models).enumerate() {
            let idx = &model.pair_indices[p];
            let mut v = svm.bias;
            for (&s, &c) in svm.support_idx.iter().zip(&svm.coef) {
                v += c * row[idx[s]];
            }
            let winner = if v >= 0.0 { ca } else { cb };
            let slot = model.classes.iter().position(|c| c == winner).expect("class known");
            votes[slot] += 1;
        }
        let mut best = 0usize;
        for c in 1..votes.len() {
            if votes[c] > votes[best] {
                best = c;
            }
        }
        out.push(model.classes[best]);
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Gram CSV
// ---------------------------------------------------------------------------

/// Header `n=<n>`, then n comma-separated rows at 17 significant digits;
/// labels, when requested, form a trailing integer column.
pub fn write_gram_csv(path: &Path, gram: &GramMatrix, include_labels: bool) -> Result<()> {
    if include_labels && gram.labels.is_none() {
        return Err(Error::Config("gram matrix has no labels to write".into()));
    }
    let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(w, "n={}", gram.n)?;
    let mut line = String::new();
    for i in 0..gram.n {
        line.clear();
        for j in 0..gram.n {
            if j > 0 {
                line.push(',');
            }
            line.push_str(&format!("{:.16e}", gram.at(i, j)));
        }
        if include_labels {
            line.push(',');
            line.push_str(&gram.labels.as_ref().unwrap()[i].to_string());
        }
        writeln!(w, "{line}")?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_gram_csv(path: &Path) -> Result<GramMatrix> {
    let mut lines = BufReader::new(std::fs::File::open(path)?).lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::Format("empty Gram CSV".into()))??;
    let n: usize = header
        .strip_prefix("n=")
        .ok_or_else(|| Error::Format(format!("bad Gram CSV header: {header:?}")))?
        .trim()
        .parse()
        .map_err(|e| Error::Format(format!("bad Gram CSV header: {e}")))?;
    let mut entries = Vec::with_capacity(n * n);
    let mut labels: Vec<u8> = Vec::new();
    for (i, line) in lines.enumerate() {
        let line = line?;
        if i >= n {
            if line.trim().is_empty() {
                continue;
            }
            return Err(Error::Format(format!("more than {n} data rows")));
        }
        let fields: Vec<&str> = line.split(',').collect();
        let has_label = match fields.len() {
            l if l == n => false,
            l if l == n + 1 => true,
            l => {
                return Err(Error::Format(format!("row {i} has {l} fields, expected {n} or {}", n + 1)))
            }
        };
        for f in &fields[..n] {
            entries.push(
                f.trim()
                    .parse::<f64>()
                    .map_err(|e| Error::Format(format!("row {i}: bad value {f:?}: {e}")))?,
            );
        }
        if has_label {
            labels.push(
                fields[n]
                    .trim()
                    .parse::<u8>()
                    .map_err(|e| Error::Format(format!("row {i}: bad label: {e}")))?,
            );
        } else if !labels.is_empty() {
            return Err(Error::Format(format!("row {i} missing the label column")));
        }
    }
    if entries.len() != n * n {
        return Err(Error::Format(format!("{} values for n = {n}", entries.len())));
    }
    if !labels.is_empty() && labels.len() != n {
        return Err(Error::Format("label column present on only some rows".into()));
    }
    Ok(GramMatrix { n, entries, labels: if labels.is_empty() { None } else { Some(labels) } })
}
