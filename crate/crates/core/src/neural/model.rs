//! Parameters, scores and the negative-sampling gradient shared by all five
//! learned models.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{ModelKind, NeuralError, Space};
use crate::corpus::TokenId;
use crate::embedding::EmbeddingSet;
use crate::Offset;

/// One training event.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Event {
    /// SKIP/SSKIP: the input vector of `center` predicts the word found at
    /// `offset` from it.
    Pair {
        center: TokenId,
        context: TokenId,
        offset: Offset,
    },
    /// CBOW/CWIN/LBL: the neighbours predict `center`. At least one side is
    /// present.
    Window {
        left: Option<TokenId>,
        right: Option<TokenId>,
        center: TokenId,
    },
}

impl Event {
    /// The word scored as the positive target.
    pub fn target(&self) -> TokenId {
        match *self {
            Event::Pair { context, .. } => context,
            Event::Window { center, .. } => center,
        }
    }

    fn fits(&self, kind: ModelKind) -> bool {
        match self {
            Event::Pair { .. } => matches!(kind, ModelKind::Skip | ModelKind::Sskip),
            Event::Window { left, right, .. } => {
                matches!(kind, ModelKind::Cbow | ModelKind::Cwin | ModelKind::Lbl)
                    && (left.is_some() || right.is_some())
            }
        }
    }
}

/// Input and target spaces of a learned model.
///
/// Target storage is indexed by word for SKIP, CBOW and LBL, by
/// `(word, relative position)` for SSKIP and holds `2d`-wide rows for CWIN.
/// LBL additionally owns the position weights `c_-1`, `c_+1` and a per-word
/// bias.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingPair {
    pub(crate) kind: ModelKind,
    pub(crate) dim: usize,
    pub(crate) tokens: Vec<String>,
    pub(crate) cbow_mean: bool,
    pub(crate) input: Vec<f64>,
    pub(crate) output: Vec<f64>,
    pub(crate) position: Vec<f64>,
    pub(crate) bias: Vec<f64>,
}

impl EmbeddingPair {
    /// Inputs uniform in `[-0.5/d, 0.5/d]`, targets and biases zero, position
    /// weights one.
    pub fn initialize<R: Rng + ?Sized>(
        kind: ModelKind,
        dim: usize,
        tokens: Vec<String>,
        cbow_mean: bool,
        rng: &mut R,
    ) -> Self {
        let v = tokens.len();
        let half = 0.5 / dim as f64;
        let input = (0..v * dim).map(|_| rng.gen_range(-half..half)).collect();
        let mut p = Self::zeros(kind, dim, tokens, cbow_mean);
        p.input = input;
        p
    }

    pub fn zeros(kind: ModelKind, dim: usize, tokens: Vec<String>, cbow_mean: bool) -> Self {
        let v = tokens.len();
        let (rows, width) = Self::output_shape(kind, v, dim);
        let lbl = kind == ModelKind::Lbl;
        Self {
            kind,
            dim,
            tokens,
            cbow_mean,
            input: vec![0.0; v * dim],
            output: vec![0.0; rows * width],
            position: if lbl { vec![1.0; 2 * dim] } else { Vec::new() },
            bias: if lbl { vec![0.0; v] } else { Vec::new() },
        }
    }

    fn output_shape(kind: ModelKind, v: usize, dim: usize) -> (usize, usize) {
        match kind {
            ModelKind::Sskip => (2 * v, dim),
            ModelKind::Cwin => (v, 2 * dim),
            _ => (v, dim),
        }
    }

    pub fn kind(&self) -> ModelKind {
        self.kind
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn vocab_size(&self) -> usize {
        self.tokens.len()
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn cbow_mean(&self) -> bool {
        self.cbow_mean
    }

    /// Width of the hidden layer and of each target row.
    pub fn hidden_width(&self) -> usize {
        if self.kind == ModelKind::Cwin {
            2 * self.dim
        } else {
            self.dim
        }
    }

    pub fn input_vector(&self, w: TokenId) -> &[f64] {
        let d = self.dim;
        &self.input[w as usize * d..(w as usize + 1) * d]
    }

    pub fn input_vector_mut(&mut self, w: TokenId) -> &mut [f64] {
        let d = self.dim;
        &mut self.input[w as usize * d..(w as usize + 1) * d]
    }

    /// Target row index of `t`; `offset` selects the position block for SSKIP.
    pub fn target_row(&self, t: TokenId, offset: Option<Offset>) -> usize {
        match (self.kind, offset) {
            (ModelKind::Sskip, Some(r)) => 2 * t as usize + r.index(),
            (ModelKind::Sskip, None) => panic!("SSKIP targets need a relative position"),
            _ => t as usize,
        }
    }

    pub fn target_vector(&self, row: usize) -> &[f64] {
        let w = self.hidden_width();
        &self.output[row * w..(row + 1) * w]
    }

    pub fn target_vector_mut(&mut self, row: usize) -> &mut [f64] {
        let w = self.hidden_width();
        &mut self.output[row * w..(row + 1) * w]
    }

    /// LBL position weight vector for the given side.
    pub fn position_weights(&self, r: Offset) -> Option<&[f64]> {
        let d = self.dim;
        (!self.position.is_empty()).then(|| &self.position[r.index() * d..(r.index() + 1) * d])
    }

    pub fn position_weights_mut(&mut self, r: Offset) -> Option<&mut [f64]> {
        let d = self.dim;
        (!self.position.is_empty()).then(|| &mut self.position[r.index() * d..(r.index() + 1) * d])
    }

    pub fn bias(&self, t: TokenId) -> f64 {
        self.bias.get(t as usize).copied().unwrap_or(0.0)
    }

    pub fn bias_mut(&mut self, t: TokenId) -> Option<&mut f64> {
        self.bias.get_mut(t as usize)
    }

    pub fn all_finite(&self) -> bool {
        self.input
            .iter()
            .chain(&self.output)
            .chain(&self.position)
            .chain(&self.bias)
            .all(|x| x.is_finite())
    }

    fn check_event(&self, e: &Event) -> Result<(), NeuralError> {
        if !e.fits(self.kind) {
            return Err(NeuralError::Shape(format!(
                "{e:?} is not a {} event",
                self.kind
            )));
        }
        let v = self.vocab_size() as TokenId;
        let ids: [Option<TokenId>; 3] = match *e {
            Event::Pair {
                center, context, ..
            } => [Some(center), Some(context), None],
            Event::Window {
                left,
                right,
                center,
            } => [left, right, Some(center)],
        };
        if ids.iter().flatten().any(|&i| i >= v) {
            return Err(NeuralError::Shape(format!(
                "{e:?} refers to a word outside the vocabulary"
            )));
        }
        Ok(())
    }

    /// Score of the event's own target.
    pub fn score(&self, e: &Event) -> Result<f64, NeuralError> {
        self.score_target(e, e.target())
    }

    /// Score of `target` in the event's context, written out directly from
    /// the model definitions.
    pub fn score_target(&self, e: &Event, target: TokenId) -> Result<f64, NeuralError> {
        self.check_event(e)?;
        if target as usize >= self.vocab_size() {
            return Err(NeuralError::Shape(format!(
                "target {target} outside the vocabulary"
            )));
        }
        let d = self.dim;
        let s = match (*e, self.kind) {
            (Event::Pair { center, .. }, ModelKind::Skip) => dot(
                self.input_vector(center),
                self.target_vector(target as usize),
            ),
            (Event::Pair { center, offset, .. }, ModelKind::Sskip) => dot(
                self.input_vector(center),
                self.target_vector(2 * target as usize + offset.index()),
            ),
            (Event::Window { left, right, .. }, ModelKind::Cbow) => {
                let out = self.target_vector(target as usize);
                let n = left.is_some() as usize + right.is_some() as usize;
                let scale = if self.cbow_mean { 1.0 / n as f64 } else { 1.0 };
                let sum: f64 = [left, right]
                    .into_iter()
                    .flatten()
                    .map(|w| dot(self.input_vector(w), out))
                    .sum();
                scale * sum
            }
            (Event::Window { left, right, .. }, ModelKind::Cwin) => {
                let out = self.target_vector(target as usize);
                left.map_or(0.0, |w| dot(self.input_vector(w), &out[..d]))
                    + right.map_or(0.0, |w| dot(self.input_vector(w), &out[d..]))
            }
            (Event::Window { left, right, .. }, ModelKind::Lbl) => {
                let out = self.target_vector(target as usize);
                let mut s = self.bias(target);
                for (side, w) in [(Offset::Left, left), (Offset::Right, right)] {
                    if let Some(w) = w {
                        let c = self.position_weights(side).unwrap();
                        s += self
                            .input_vector(w)
                            .iter()
                            .zip(c)
                            .zip(out)
                            .map(|((x, c), o)| x * c * o)
                            .sum::<f64>();
                    }
                }
                s
            }
            _ => unreachable!("checked by check_event"),
        };
        Ok(s)
    }

    /// Negative-sampling loss `-ln s(x+) - sum ln s(-x-)` for the event and
    /// the given noise words.
    pub fn event_loss(&self, e: &Event, negatives: &[TokenId]) -> Result<f64, NeuralError> {
        let mut loss = -log_sigmoid(self.score(e)?);
        for &n in negatives {
            loss -= log_sigmoid(-self.score_target(e, n)?);
        }
        Ok(loss)
    }

    /// Copies one space out as plain vectors. SSKIP target rows concatenate
    /// the left and right position blocks; CWIN target rows are already `2d`.
    pub fn export_vectors(&self, space: Space) -> EmbeddingSet {
        let v = self.vocab_size();
        let (width, data) = match space {
            Space::Input => (self.dim, self.input.clone()),
            Space::Target => {
                let w = if self.kind == ModelKind::Sskip {
                    2 * self.dim
                } else {
                    self.hidden_width()
                };
                // SSKIP stores (word, left), (word, right) adjacently
                (w, self.output.clone())
            }
        };
        debug_assert_eq!(data.len(), v * width);
        EmbeddingSet::from_rows(self.tokens.clone(), width, data).expect("unique tokens")
    }
}

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    // four accumulators so the loop vectorizes
    let mut acc = [0.0f64; 4];
    let mut ca = a.chunks_exact(4);
    let mut cb = b.chunks_exact(4);
    for (x, y) in (&mut ca).zip(&mut cb) {
        acc[0] += x[0] * y[0];
        acc[1] += x[1] * y[1];
        acc[2] += x[2] * y[2];
        acc[3] += x[3] * y[3];
    }
    let tail: f64 = ca
        .remainder()
        .iter()
        .zip(cb.remainder())
        .map(|(x, y)| x * y)
        .sum();
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

#[inline]
pub(crate) fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (y, x) in y.iter_mut().zip(x) {
        *y += alpha * x;
    }
}

#[inline]
pub fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// `ln(sigmoid(x))` without overflow.
#[inline]
pub fn log_sigmoid(x: f64) -> f64 {
    x.min(0.0) - (-x.abs()).exp().ln_1p()
}

/// Sparse gradient of one event's loss. Rows may repeat; contributions add.
#[derive(Debug, Clone, Default)]
pub struct EventGradient {
    width: usize,
    dim: usize,
    pub(crate) input_rows: Vec<TokenId>,
    pub(crate) input_grads: Vec<f64>,
    pub(crate) output_rows: Vec<usize>,
    pub(crate) output_grads: Vec<f64>,
    pub(crate) bias: Vec<(TokenId, f64)>,
    pub(crate) position: Vec<f64>,
    hidden: Vec<f64>,
    dhidden: Vec<f64>,
}

impl EventGradient {
    pub fn for_params(p: &EmbeddingPair) -> Self {
        let mut g = Self::default();
        g.reset(p);
        g
    }

    fn reset(&mut self, p: &EmbeddingPair) {
        self.width = p.hidden_width();
        self.dim = p.dim;
        self.input_rows.clear();
        self.input_grads.clear();
        self.output_rows.clear();
        self.output_grads.clear();
        self.bias.clear();
        self.position.clear();
        if p.kind == ModelKind::Lbl {
            self.position.resize(2 * p.dim, 0.0);
        }
        self.hidden.clear();
        self.hidden.resize(self.width, 0.0);
        self.dhidden.clear();
        self.dhidden.resize(self.width, 0.0);
    }

    pub fn input(&self) -> impl Iterator<Item = (TokenId, &[f64])> {
        self.input_rows
            .iter()
            .copied()
            .zip(self.input_grads.chunks_exact(self.dim.max(1)))
    }

    pub fn output(&self) -> impl Iterator<Item = (usize, &[f64])> {
        self.output_rows
            .iter()
            .copied()
            .zip(self.output_grads.chunks_exact(self.width.max(1)))
    }

    pub fn bias(&self) -> &[(TokenId, f64)] {
        &self.bias
    }

    /// LBL position-weight gradient, left block then right block.
    pub fn position(&self) -> &[f64] {
        &self.position
    }

    fn push_input(&mut self, w: TokenId, scale: f64, g: &[f64]) {
        self.input_rows.push(w);
        self.input_grads.extend(g.iter().map(|x| scale * x));
    }
}

impl EmbeddingPair {
    /// Loss of one event and its gradient with respect to every parameter the
    /// event touches. Events are assumed well-formed (see [`Self::score`]).
    pub fn backprop(&self, e: &Event, negatives: &[TokenId], grad: &mut EventGradient) -> f64 {
        grad.reset(self);
        let d = self.dim;
        let width = grad.width;
        let mut hidden = std::mem::take(&mut grad.hidden);
        let mut dh = std::mem::take(&mut grad.dhidden);

        // hidden layer
        let mut n_ctx = 0usize;
        let offset = match *e {
            Event::Pair { center, offset, .. } => {
                hidden.copy_from_slice(self.input_vector(center));
                Some(offset)
            }
            Event::Window { left, right, .. } => {
                match self.kind {
                    ModelKind::Cbow => {
                        for w in [left, right].into_iter().flatten() {
                            axpy(1.0, self.input_vector(w), &mut hidden);
                            n_ctx += 1;
                        }
                        if self.cbow_mean && n_ctx > 0 {
                            let s = 1.0 / n_ctx as f64;
                            hidden.iter_mut().for_each(|x| *x *= s);
                        }
                    }
                    ModelKind::Cwin => {
                        if let Some(w) = left {
                            hidden[..d].copy_from_slice(self.input_vector(w));
                        }
                        if let Some(w) = right {
                            hidden[d..].copy_from_slice(self.input_vector(w));
                        }
                    }
                    ModelKind::Lbl => {
                        for (side, w) in [(Offset::Left, left), (Offset::Right, right)] {
                            if let Some(w) = w {
                                let c = self.position_weights(side).unwrap();
                                for ((h, x), c) in
                                    hidden.iter_mut().zip(self.input_vector(w)).zip(c)
                                {
                                    *h += x * c;
                                }
                            }
                        }
                    }
                    _ => unreachable!(),
                }
                None
            }
        };

        // output layer
        let mut loss = 0.0;
        let lbl = self.kind == ModelKind::Lbl;
        let targets =
            std::iter::once((e.target(), true)).chain(negatives.iter().map(|&n| (n, false)));
        for (t, positive) in targets {
            let row = self.target_row(t, offset);
            let out = self.target_vector(row);
            let s = dot(&hidden, out) + if lbl { self.bias(t) } else { 0.0 };
            // d loss / d s
            let coeff = if positive {
                loss -= log_sigmoid(s);
                sigmoid(s) - 1.0
            } else {
                loss -= log_sigmoid(-s);
                sigmoid(s)
            };
            axpy(coeff, out, &mut dh);
            grad.output_rows.push(row);
            grad.output_grads.extend(hidden.iter().map(|h| coeff * h));
            if lbl {
                grad.bias.push((t, coeff));
            }
        }

        // context
        match *e {
            Event::Pair { center, .. } => grad.push_input(center, 1.0, &dh),
            Event::Window { left, right, .. } => match self.kind {
                ModelKind::Cbow => {
                    let s = if self.cbow_mean {
                        1.0 / n_ctx as f64
                    } else {
                        1.0
                    };
                    for w in [left, right].into_iter().flatten() {
                        grad.push_input(w, s, &dh);
                    }
                }
                ModelKind::Cwin => {
                    if let Some(w) = left {
                        grad.push_input(w, 1.0, &dh[..d]);
                    }
                    if let Some(w) = right {
                        grad.push_input(w, 1.0, &dh[d..]);
                    }
                }
                ModelKind::Lbl => {
                    for (side, w) in [(Offset::Left, left), (Offset::Right, right)] {
                        if let Some(w) = w {
                            let c = self.position_weights(side).unwrap();
                            let x = self.input_vector(w);
                            grad.input_rows.push(w);
                            grad.input_grads
                                .extend(c.iter().zip(&dh).map(|(c, g)| c * g));
                            let pg = &mut grad.position[side.index() * d..(side.index() + 1) * d];
                            for ((p, x), g) in pg.iter_mut().zip(x).zip(&dh) {
                                *p += x * g;
                            }
                        }
                    }
                }
                _ => unreachable!(),
            },
        }
        debug_assert_eq!(grad.output_grads.len(), grad.output_rows.len() * width);
        grad.hidden = hidden;
        grad.dhidden = dh;
        loss
    }

    /// Gradient step: every touched parameter moves by `-lr * gradient`.
    pub fn apply(&mut self, grad: &EventGradient, lr: f64) {
        let d = self.dim;
        let width = self.hidden_width();
        for (k, &row) in grad.output_rows.iter().enumerate() {
            let g = &grad.output_grads[k * width..(k + 1) * width];
            axpy(-lr, g, self.target_vector_mut(row));
        }
        for (k, &w) in grad.input_rows.iter().enumerate() {
            let g = &grad.input_grads[k * d..(k + 1) * d];
            axpy(-lr, g, self.input_vector_mut(w));
        }
        for &(t, g) in &grad.bias {
            self.bias[t as usize] -= lr * g;
        }
        if !grad.position.is_empty() {
            axpy(-lr, &grad.position, &mut self.position);
        }
    }
}
