use std::collections::BTreeMap;

use super::model::{EmbeddingPair, Event, EventGradient};
use super::NeuralError;
use crate::corpus::TokenId;
use crate::Offset;

/// A single scalar parameter of an [`EmbeddingPair`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum ParamRef {
    Input { word: TokenId, component: usize },
    Target { row: usize, component: usize },
    Position { side: usize, component: usize },
    Bias { word: TokenId },
}

/// Both magnitudes below this count as an exact zero gradient.
const ZERO_GRADIENT: f64 = 1e-10;
/// Denominator floor for the relative deviation.
const RELATIVE_FLOOR: f64 = 1e-6;

#[derive(Debug, Clone)]
pub struct GradientCheck {
    pub max_relative_deviation: f64,
    pub worst: Option<ParamRef>,
    pub checked: usize,
    /// Per-parameter `(analytic, numeric)` values.
    pub values: BTreeMap<ParamRef, (f64, f64)>,
}

fn param_mut(p: &mut EmbeddingPair, r: ParamRef) -> &mut f64 {
    match r {
        ParamRef::Input { word, component } => &mut p.input_vector_mut(word)[component],
        ParamRef::Target { row, component } => &mut p.target_vector_mut(row)[component],
        ParamRef::Position { side, component } => {
            let side = if side == 0 {
                Offset::Left
            } else {
                Offset::Right
            };
            &mut p.position_weights_mut(side).expect("LBL only")[component]
        }
        ParamRef::Bias { word } => p.bias_mut(word).expect("LBL only"),
    }
}

/// Analytic gradient of the event loss, merged over repeated rows.
pub fn analytic_gradient(
    params: &EmbeddingPair,
    event: &Event,
    negatives: &[TokenId],
) -> Result<BTreeMap<ParamRef, f64>, NeuralError> {
    params.event_loss(event, negatives)?;
    let mut g = EventGradient::for_params(params);
    params.backprop(event, negatives, &mut g);
    let mut out = BTreeMap::new();
    for (word, v) in g.input() {
        for (component, x) in v.iter().enumerate() {
            *out.entry(ParamRef::Input { word, component })
                .or_insert(0.0) += x;
        }
    }
    for (row, v) in g.output() {
        for (component, x) in v.iter().enumerate() {
            *out.entry(ParamRef::Target { row, component })
                .or_insert(0.0) += x;
        }
    }
    for &(word, x) in g.bias() {
        *out.entry(ParamRef::Bias { word }).or_insert(0.0) += x;
    }
    let d = params.dim();
    for (i, &x) in g.position().iter().enumerate() {
        *out.entry(ParamRef::Position {
            side: i / d,
            component: i % d,
        })
        .or_insert(0.0) += x;
    }
    Ok(out)
}

/// Compares the analytic gradient of the negative-sampling loss with
/// central finite differences of [`EmbeddingPair::event_loss`] for every
/// parameter the event touches.
pub fn gradient_check(
    params: &EmbeddingPair,
    event: &Event,
    negatives: &[TokenId],
    epsilon: f64,
) -> Result<GradientCheck, NeuralError> {
    let analytic = analytic_gradient(params, event, negatives)?;
    let mut p = params.clone();
    let mut values = BTreeMap::new();
    let mut max = 0.0f64;
    let mut worst = None;
    for (&r, &a) in &analytic {
        let orig = *param_mut(&mut p, r);
        *param_mut(&mut p, r) = orig + epsilon;
        let up = p.event_loss(event, negatives)?;
        *param_mut(&mut p, r) = orig - epsilon;
        let down = p.event_loss(event, negatives)?;
        *param_mut(&mut p, r) = orig;
        let n = (up - down) / (2.0 * epsilon);
        let scale = a.abs().max(n.abs());
        let dev = if scale < ZERO_GRADIENT {
            0.0
        } else {
            (a - n).abs() / scale.max(RELATIVE_FLOOR)
        };
        if dev > max || worst.is_none() {
            max = max.max(dev);
            worst = Some(r);
        }
        values.insert(r, (a, n));
    }
    Ok(GradientCheck {
        max_relative_deviation: max,
        worst,
        checked: values.len(),
        values,
    })
}
