//! Block-operator networks: d parallel m-dimensional complex states flowing
//! through layers of m×m blocks, with unitary diagonal blocks and optional
//! off-diagonal interaction blocks.

use crate::error::{Error, Result};
use crate::linalg::{
    inner, is_unitary, mat_vec, norm2, qr_orthonormalize, random_gaussian_matrix, C64,
    CMatrix, CVector, ZERO,
};
use rand::Rng;

/// Threshold below which the normalizing activation passes a state through
/// unchanged instead of dividing by a vanishing norm.
pub const NORMALIZE_EPS: f64 = 1e-12;

/// d complex state vectors of dimension m, one per circuit.
#[derive(Debug, Clone, PartialEq)]
pub struct StateBundle {
    m: usize,
    states: Vec<CVector>,
    normalized: bool,
}

impl StateBundle {
    pub fn new(m: usize, states: Vec<CVector>) -> Result<Self> {
        if states.is_empty() {
            return Err(Error::Shape("state bundle needs at least one circuit".into()));
        }
        for (k, s) in states.iter().enumerate() {
            if s.dim() != m {
                return Err(Error::Shape(format!(
                    "circuit {} has dim {}, expected {}",
                    k,
                    s.dim(),
                    m
                )));
            }
        }
        Ok(StateBundle { m, states, normalized: false })
    }

    /// Marks the bundle normalized after checking each ‖state_k‖ ∈ [1−1e-8, 1+1e-8].
    pub fn flag_normalized(mut self) -> Result<Self> {
        for (k, s) in self.states.iter().enumerate() {
            let n = norm2(s);
            if (n - 1.0).abs() > 1e-8 {
                return Err(Error::Invariant(format!(
                    "circuit {} norm {} not within 1e-8 of 1",
                    k, n
                )));
            }
        }
        self.normalized = true;
        Ok(self)
    }

    pub fn d(&self) -> usize {
        self.states.len()
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn is_normalized(&self) -> bool {
        self.normalized
    }

    pub fn state(&self, k: usize) -> &CVector {
        &self.states[k]
    }

    pub fn states(&self) -> &[CVector] {
        &self.states
    }
}

/// Tag for each block in the grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BlockKind {
    /// On-diagonal unitary block (a quantum gate).
    UnitaryDiagonal,
    /// Off-diagonal unconstrained block (interaction).
    GeneralOffDiagonal,
    /// Structurally zero block; stores no matrix.
    Zero,
}

/// A d_out×d_in grid of m×m complex blocks.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockOperator {
    d_out: usize,
    d_in: usize,
    m: usize,
    blocks: Vec<Option<CMatrix>>,
    kinds: Vec<BlockKind>,
}

impl BlockOperator {
    /// Build from an explicit grid. `None` entries are structural zeros.
    pub fn new(d_out: usize, d_in: usize, m: usize, grid: Vec<Option<(BlockKind, CMatrix)>>) -> Result<Self> {
        if grid.len() != d_out * d_in {
            return Err(Error::Shape(format!(
                "grid has {} entries, expected {}",
                grid.len(),
                d_out * d_in
            )));
        }
        let mut blocks = Vec::with_capacity(grid.len());
        let mut kinds = Vec::with_capacity(grid.len());
        for (idx, cell) in grid.into_iter().enumerate() {
            let (i, k) = (idx / d_in, idx % d_in);
            match cell {
                None => {
                    blocks.push(None);
                    kinds.push(BlockKind::Zero);
                }
                Some((kind, b)) => {
                    if b.rows() != m || b.cols() != m {
                        return Err(Error::Shape(format!(
                            "block ({i},{k}) is {}x{}, expected {m}x{m}",
                            b.rows(),
                            b.cols()
                        )));
                    }
                    match kind {
                        BlockKind::UnitaryDiagonal => {
                            if i != k {
                                return Err(Error::Invariant(format!(
                                    "unitary block at off-diagonal position ({i},{k})"
                                )));
                            }
                            if !is_unitary(&b, 1e-8) {
                                return Err(Error::Invariant(format!(
                                    "diagonal block ({i},{i}) is not unitary within 1e-8"
                                )));
                            }
                        }
                        BlockKind::GeneralOffDiagonal => {
                            if i == k {
                                return Err(Error::Invariant(format!(
                                    "general block at diagonal position ({i},{i})"
                                )));
                            }
                        }
                        BlockKind::Zero => {
                            return Err(Error::Invariant(
                                "Zero-tagged blocks must not carry a matrix".into(),
                            ));
                        }
                    }
                    blocks.push(Some(b));
                    kinds.push(kind);
                }
            }
        }
        Ok(BlockOperator { d_out, d_in, m, blocks, kinds })
    }

    /// Block-diagonal operator from d unitary blocks; all off-diagonals are
    /// structural zeros (the no-interaction form).
    pub fn block_diagonal(m: usize, diag: Vec<CMatrix>) -> Result<Self> {
        let d = diag.len();
        let mut grid: Vec<Option<(BlockKind, CMatrix)>> = (0..d * d).map(|_| None).collect();
        for (k, u) in diag.into_iter().enumerate() {
            grid[k * d + k] = Some((BlockKind::UnitaryDiagonal, u));
        }
        BlockOperator::new(d, d, m, grid)
    }

    /// Random initialization: Haar-like unitary diagonal blocks (QR of a
    /// Gaussian) and, when `interaction`, Gaussian off-diagonal blocks with
    /// std 1/(d_in·√m) to keep pre-activation norms O(1).
    pub fn random<R: Rng>(
        d_out: usize,
        d_in: usize,
        m: usize,
        interaction: bool,
        rng: &mut R,
    ) -> Result<Self> {
        let off_std = 1.0 / (d_in as f64 * (m as f64).sqrt());
        let mut grid: Vec<Option<(BlockKind, CMatrix)>> = Vec::with_capacity(d_out * d_in);
        for i in 0..d_out {
            for k in 0..d_in {
                if i == k {
                    let u = qr_orthonormalize(&random_gaussian_matrix(m, m, 1.0, rng))?;
                    grid.push(Some((BlockKind::UnitaryDiagonal, u)));
                } else if interaction {
                    let b = random_gaussian_matrix(m, m, off_std, rng);
                    grid.push(Some((BlockKind::GeneralOffDiagonal, b)));
                } else {
                    grid.push(None);
                }
            }
        }
        BlockOperator::new(d_out, d_in, m, grid)
    }

    pub fn d_out(&self) -> usize {
        self.d_out
    }

    pub fn d_in(&self) -> usize {
        self.d_in
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn kind(&self, i: usize, k: usize) -> BlockKind {
        self.kinds[i * self.d_in + k]
    }

    pub fn block(&self, i: usize, k: usize) -> Option<&CMatrix> {
        self.blocks[i * self.d_in + k].as_ref()
    }

    pub fn block_mut(&mut self, i: usize, k: usize) -> Option<&mut CMatrix> {
        self.blocks[i * self.d_in + k].as_mut()
    }

    pub fn set_block(&mut self, i: usize, k: usize, b: CMatrix) {
        assert!(self.kinds[i * self.d_in + k] != BlockKind::Zero);
        self.blocks[i * self.d_in + k] = Some(b);
    }

    pub fn is_block_diagonal(&self) -> bool {
        self.kinds
            .iter()
            .enumerate()
            .all(|(idx, k)| idx / self.d_in == idx % self.d_in || *k == BlockKind::Zero)
    }

    /// Checks the structural invariants (diagonal unitarity at `tol`).
    pub fn validate(&self, tol: f64) -> Result<()> {
        for i in 0..self.d_out {
            for k in 0..self.d_in {
                if self.kind(i, k) == BlockKind::UnitaryDiagonal {
                    let b = self.block(i, k).expect("unitary block present");
                    if !is_unitary(b, tol) {
                        return Err(Error::Invariant(format!(
                            "block ({i},{i}) drifted off the unitary constraint"
                        )));
                    }
                }
            }
        }
        Ok(())
    }

    /// Materialize the (m·d_out)×(m·d_in) flat matrix.
    pub fn to_flat_matrix(&self) -> CMatrix {
        let mut flat = CMatrix::zeros(self.m * self.d_out, self.m * self.d_in);
        for i in 0..self.d_out {
            for k in 0..self.d_in {
                if let Some(b) = self.block(i, k) {
                    for r in 0..self.m {
                        for c in 0..self.m {
                            flat.set(i * self.m + r, k * self.m + c, b.at(r, c));
                        }
                    }
                }
            }
        }
        flat
    }
}

/// output state i = Σ_k blocks[i][k] · q_k. Zero blocks are skipped, so a
/// block-diagonal operator reproduces the independent per-circuit product
/// bit for bit.
pub fn apply_block_operator(u: &BlockOperator, q: &StateBundle) -> Result<StateBundle> {
    if u.d_in != q.d() || u.m != q.m() {
        return Err(Error::Shape(format!(
            "operator ({}x{} blocks of {}) applied to bundle (d={}, m={})",
            u.d_out,
            u.d_in,
            u.m,
            q.d(),
            q.m()
        )));
    }
    let mut out = Vec::with_capacity(u.d_out);
    for i in 0..u.d_out {
        let mut acc: Option<CVector> = None;
        for k in 0..u.d_in {
            if let Some(b) = u.block(i, k) {
                let term = mat_vec(b, q.state(k))?;
                match acc.as_mut() {
                    None => acc = Some(term),
                    Some(a) => a.add_assign(&term),
                }
            }
        }
        out.push(acc.unwrap_or_else(|| CVector::zeros(u.m)));
    }
    StateBundle::new(u.m, out)
}

/// Per-circuit nonlinearity applied between layers.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Activation {
    /// q_k ↦ q_k/‖q_k‖ (pass-through below NORMALIZE_EPS).
    Normalize,
    /// q ↦ q/√m.
    Scale,
    Identity,
}

pub fn activation(kind: Activation, q: &StateBundle) -> StateBundle {
    match kind {
        Activation::Identity => q.clone(),
        Activation::Scale => {
            let s = C64::new(1.0 / (q.m() as f64).sqrt(), 0.0);
            let states = q.states.iter().map(|v| v.scale(s)).collect();
            StateBundle { m: q.m, states, normalized: false }
        }
        Activation::Normalize => {
            if q.normalized {
                return q.clone();
            }
            let states = q
                .states
                .iter()
                .map(|v| {
                    let n = norm2(v);
                    if n < NORMALIZE_EPS {
                        v.clone()
                    } else {
                        v.scale(C64::new(1.0 / n, 0.0))
                    }
                })
                .collect();
            StateBundle { m: q.m, states, normalized: true }
        }
    }
}

/// Projection measurement head: C orthonormal columns |p_i⟩ of an m×C matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementHead {
    p: CMatrix,
}

impl MeasurementHead {
    pub fn new(p: CMatrix) -> Result<Self> {
        if !p.is_orthonormal_cols(1e-8) {
            return Err(Error::Invariant(
                "measurement head columns are not orthonormal within 1e-8".into(),
            ));
        }
        Ok(MeasurementHead { p })
    }

    pub fn random<R: Rng>(m: usize, c: usize, rng: &mut R) -> Result<Self> {
        MeasurementHead::new(qr_orthonormalize(&random_gaussian_matrix(m, c, 1.0, rng))?)
    }

    pub fn m(&self) -> usize {
        self.p.rows()
    }

    pub fn outputs(&self) -> usize {
        self.p.cols()
    }

    pub fn p(&self) -> &CMatrix {
        &self.p
    }

    pub fn p_mut(&mut self) -> &mut CMatrix {
        &mut self.p
    }
}

/// Observable head: C Hermitian m×m matrices.
#[derive(Debug, Clone, PartialEq)]
pub struct ObservableHead {
    observables: Vec<CMatrix>,
    m: usize,
}

impl ObservableHead {
    pub fn new(m: usize, observables: Vec<CMatrix>) -> Result<Self> {
        for (i, a) in observables.iter().enumerate() {
            if a.rows() != m || a.cols() != m {
                return Err(Error::Shape(format!("observable {i} is not {m}x{m}")));
            }
            let dev = a.sub(&a.adjoint())?.frobenius_norm();
            if dev > 1e-10 * a.frobenius_norm().max(1.0) {
                return Err(Error::Invariant(format!(
                    "observable {i} deviates from Hermitian by {dev:.3e}"
                )));
            }
        }
        Ok(ObservableHead { observables, m })
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn outputs(&self) -> usize {
        self.observables.len()
    }

    pub fn observables(&self) -> &[CMatrix] {
        &self.observables
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Head {
    Measurement(MeasurementHead),
    Observable(ObservableHead),
}

impl Head {
    pub fn outputs(&self) -> usize {
        match self {
            Head::Measurement(h) => h.outputs(),
            Head::Observable(h) => h.outputs(),
        }
    }

    pub fn measure(&self, q: &CVector) -> Result<Vec<f64>> {
        match self {
            Head::Measurement(h) => measure_projection(h, q),
            Head::Observable(h) => measure_observable(h, q),
        }
    }
}

/// output_i = |⟨p_i|q⟩|².
pub fn measure_projection(head: &MeasurementHead, q: &CVector) -> Result<Vec<f64>> {
    if q.dim() != head.m() {
        return Err(Error::Shape(format!(
            "state dim {} vs head m {}",
            q.dim(),
            head.m()
        )));
    }
    (0..head.outputs())
        .map(|i| {
            let c = inner(&head.p.column(i), q)?;
            Ok(c.norm_sqr())
        })
        .collect()
}

/// output_i = Re⟨q|a_i|q⟩; Hermiticity is re-checked and the imaginary part
/// must vanish.
pub fn measure_observable(head: &ObservableHead, q: &CVector) -> Result<Vec<f64>> {
    if q.dim() != head.m() {
        return Err(Error::Shape(format!(
            "state dim {} vs head m {}",
            q.dim(),
            head.m()
        )));
    }
    head.observables
        .iter()
        .enumerate()
        .map(|(i, a)| {
            let dev = a.sub(&a.adjoint())?.frobenius_norm();
            if dev > 1e-8 {
                return Err(Error::Invariant(format!(
                    "observable {i} deviates from Hermitian by {dev:.3e}"
                )));
            }
            let v = inner(q, &mat_vec(a, q)?)?;
            if v.im.abs() > 1e-10 * v.re.abs().max(1.0) {
                return Err(Error::Numeric(format!(
                    "observable {i} expectation has imaginary part {:.3e}",
                    v.im
                )));
            }
            Ok(v.re)
        })
        .collect()
}

/// Full parameter set of one network.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkParams {
    pub m: usize,
    /// d_0..d_L
    pub widths: Vec<usize>,
    pub layers: Vec<BlockOperator>,
    pub activation: Activation,
    pub head: Option<Head>,
    pub interaction: bool,
    /// Off-spec reproduction knob: apply σ between layers even without
    /// interaction.
    pub activation_without_interaction: bool,
}

impl NetworkParams {
    pub fn new(
        m: usize,
        widths: Vec<usize>,
        layers: Vec<BlockOperator>,
        activation: Activation,
        head: Option<Head>,
        interaction: bool,
    ) -> Result<Self> {
        if widths.len() != layers.len() + 1 {
            return Err(Error::Shape(format!(
                "{} widths for {} layers",
                widths.len(),
                layers.len()
            )));
        }
        for (j, layer) in layers.iter().enumerate() {
            if layer.d_in() != widths[j] || layer.d_out() != widths[j + 1] || layer.m() != m {
                return Err(Error::Shape(format!(
                    "layer {} is {}x{} blocks of {}, expected {}x{} of {}",
                    j + 1,
                    layer.d_out(),
                    layer.d_in(),
                    layer.m(),
                    widths[j + 1],
                    widths[j],
                    m
                )));
            }
            if !interaction && !layer.is_block_diagonal() {
                return Err(Error::Invariant(format!(
                    "layer {} carries off-diagonal blocks in no-interaction mode",
                    j + 1
                )));
            }
        }
        if let Some(h) = &head {
            let hm = match h {
                Head::Measurement(h) => h.m(),
                Head::Observable(h) => h.m(),
            };
            if hm != m {
                return Err(Error::Shape(format!("head m {} vs network m {}", hm, m)));
            }
        }
        Ok(NetworkParams {
            m,
            widths,
            layers,
            activation,
            head,
            interaction,
            activation_without_interaction: false,
        })
    }

    /// Constant-width random network with a projection head.
    pub fn random<R: Rng>(
        m: usize,
        d: usize,
        depth: usize,
        c: usize,
        activation: Activation,
        interaction: bool,
        rng: &mut R,
    ) -> Result<Self> {
        let layers = (0..depth)
            .map(|_| BlockOperator::random(d, d, m, interaction, rng))
            .collect::<Result<Vec<_>>>()?;
        let head = Head::Measurement(MeasurementHead::random(m, c, rng)?);
        NetworkParams::new(m, vec![d; depth + 1], layers, activation, Some(head), interaction)
    }

    pub fn depth(&self) -> usize {
        self.layers.len()
    }

    pub fn d_in(&self) -> usize {
        self.widths[0]
    }

    pub fn d_out(&self) -> usize {
        *self.widths.last().unwrap()
    }

    fn head_ref(&self) -> Result<&Head> {
        self.head
            .as_ref()
            .ok_or_else(|| Error::Config("network has no measurement head".into()))
    }

    /// Whether the training/eval forward applies σ between layers.
    pub fn uses_sigma(&self) -> bool {
        self.interaction || self.activation_without_interaction
    }

    /// η(U^L ··· U^1 |q⟩): each circuit evaluated independently with its
    /// diagonal blocks, no activation between layers.
    pub fn forward_no_interaction(&self, q: &StateBundle) -> Result<Vec<Vec<f64>>> {
        if self.interaction {
            return Err(Error::Config(
                "forward_no_interaction called on an interaction network".into(),
            ));
        }
        if self.widths.iter().any(|w| *w != q.d()) {
            return Err(Error::Shape(format!(
                "widths {:?} incompatible with bundle d={}",
                self.widths,
                q.d()
            )));
        }
        let head = self.head_ref()?;
        let mut rows = Vec::with_capacity(q.d());
        for k in 0..q.d() {
            let mut state = q.state(k).clone();
            for layer in &self.layers {
                let u = layer
                    .block(k, k)
                    .ok_or_else(|| Error::Invariant(format!("missing diagonal block ({k},{k})")))?;
                state = mat_vec(u, &state)?;
            }
            rows.push(head.measure(&state)?);
        }
        Ok(rows)
    }

    /// η(σ_L(U^L ··· σ_1(U^1 |q⟩) ··· )): σ after every layer including the
    /// last, then per-circuit measurement.
    pub fn forward_interaction(&self, q: &StateBundle) -> Result<Vec<Vec<f64>>> {
        let head = self.head_ref()?;
        let states = self.forward_states(q)?;
        (0..states.d()).map(|k| head.measure(states.state(k))).collect()
    }

    /// The pre-measurement bundle |q'⟩ = σ_L(U^L ··· σ_1(U^1|q⟩) ··· ).
    pub fn forward_states(&self, q: &StateBundle) -> Result<StateBundle> {
        if q.d() != self.widths[0] || q.m() != self.m {
            return Err(Error::Shape(format!(
                "bundle (d={}, m={}) vs network (d_0={}, m={})",
                q.d(),
                q.m(),
                self.widths[0],
                self.m
            )));
        }
        let mut bundle = q.clone();
        for layer in &self.layers {
            bundle = apply_block_operator(layer, &bundle)?;
            bundle = activation(self.activation, &bundle);
        }
        Ok(bundle)
    }

    /// The forward used for training and evaluation: interaction semantics
    /// when σ is in play, the strict per-circuit form otherwise.
    pub fn forward(&self, q: &StateBundle) -> Result<Vec<Vec<f64>>> {
        if self.uses_sigma() {
            self.forward_interaction(q)
        } else {
            self.forward_no_interaction(q)
        }
    }
}

/// The md-dimensional basis permutation i·m+j ↦ j·d+i (zero-based).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PermutationOperator {
    m: usize,
    d: usize,
    mapping: Vec<usize>,
}

pub fn permutation_matrix(m: usize, d: usize) -> PermutationOperator {
    assert!(m >= 1 && d >= 1);
    let mut mapping = vec![0usize; m * d];
    for i in 0..d {
        for j in 0..m {
            mapping[i * m + j] = j * d + i;
        }
    }
    PermutationOperator { m, d, mapping }
}

impl PermutationOperator {
    pub fn mapping(&self) -> &[usize] {
        &self.mapping
    }

    pub fn apply(&self, v: &CVector) -> Result<CVector> {
        if v.dim() != self.mapping.len() {
            return Err(Error::Shape(format!(
                "permutation on {} vs vector dim {}",
                self.mapping.len(),
                v.dim()
            )));
        }
        let mut out = CVector::zeros(v.dim());
        for (src, &dst) in self.mapping.iter().enumerate() {
            out[dst] = v[src];
        }
        Ok(out)
    }

    pub fn apply_inverse(&self, v: &CVector) -> Result<CVector> {
        if v.dim() != self.mapping.len() {
            return Err(Error::Shape(format!(
                "permutation on {} vs vector dim {}",
                self.mapping.len(),
                v.dim()
            )));
        }
        let mut out = CVector::zeros(v.dim());
        for (src, &dst) in self.mapping.iter().enumerate() {
            out[src] = v[dst];
        }
        Ok(out)
    }

    /// P F P* for a flat (md)×(md) matrix F: entry (r,c) moves to (p(r), p(c)).
    pub fn conjugate(&self, f: &CMatrix) -> Result<CMatrix> {
        let n = self.mapping.len();
        if f.rows() != n || f.cols() != n {
            return Err(Error::Shape(format!(
                "conjugation on {}x{} vs permutation size {}",
                f.rows(),
                f.cols(),
                n
            )));
        }
        let mut out = CMatrix::zeros(n, n);
        for r in 0..n {
            for c in 0..n {
                out.set(self.mapping[r], self.mapping[c], f.at(r, c));
            }
        }
        Ok(out)
    }
}

/// True iff P U P* decomposes into m×m grid of d×d diagonal blocks, i.e. the
/// operator belongs to the commutative (separated-circuit) class.
pub fn interleave_check(u: &BlockOperator) -> Result<bool> {
    if u.d_out() != u.d_in() {
        return Err(Error::Shape(format!(
            "interleave_check needs square circuit index, got {}x{}",
            u.d_out(),
            u.d_in()
        )));
    }
    let d = u.d_in();
    let m = u.m();
    let perm = permutation_matrix(m, d);
    let conj = perm.conjugate(&u.to_flat_matrix())?;
    for bj in 0..m {
        for bk in 0..m {
            for i in 0..d {
                for i2 in 0..d {
                    if i != i2 && conj.at(bj * d + i, bk * d + i2) != ZERO {
                        return Ok(false);
                    }
                }
            }
        }
    }
    Ok(true)
}

/// Measure every circuit of a bundle: rows are circuits, columns outputs.
pub fn measure_bundle(head: &Head, q: &StateBundle) -> Result<Vec<Vec<f64>>> {
    (0..q.d()).map(|k| head.measure(q.state(k))).collect()
}
