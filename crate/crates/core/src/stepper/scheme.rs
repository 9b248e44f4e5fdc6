use crate::spectral::Linear;

use super::StepError;

/// IMEX BDF-k coefficients: `alpha` multiplies the new level, `a_weights`
/// form `A_k` over levels `n, n-1, ...` and `b_weights` the extrapolation
/// `B_k` over the same levels.
#[derive(Debug, Clone, PartialEq)]
pub struct BdfScheme {
    order: usize,
    alpha: f64,
    a_weights: Vec<f64>,
    b_weights: Vec<f64>,
}

impl BdfScheme {
    pub fn new(order: usize) -> Result<Self, StepError> {
        let (alpha, a, b): (f64, &[f64], &[f64]) = match order {
            1 => (1.0, &[1.0], &[1.0]),
            2 => (3.0 / 2.0, &[2.0, -1.0 / 2.0], &[2.0, -1.0]),
            3 => (11.0 / 6.0, &[3.0, -3.0 / 2.0, 1.0 / 3.0], &[3.0, -3.0, 1.0]),
            4 => (25.0 / 12.0, &[4.0, -3.0, 4.0 / 3.0, -1.0 / 4.0], &[4.0, -6.0, 4.0, -1.0]),
            5 => (
                137.0 / 60.0,
                &[5.0, -5.0, 10.0 / 3.0, -5.0 / 4.0, 1.0 / 5.0],
                &[5.0, -10.0, 10.0, -5.0, 1.0],
            ),
            _ => return Err(StepError::Order(order)),
        };
        Ok(BdfScheme { order, alpha, a_weights: a.to_vec(), b_weights: b.to_vec() })
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn a_weights(&self) -> &[f64] {
        &self.a_weights
    }

    pub fn b_weights(&self) -> &[f64] {
        &self.b_weights
    }

    /// `A_k` applied to a history, newest first.
    pub fn apply_a<'a, T: Linear + 'a>(&self, history: impl IntoIterator<Item = &'a T>) -> T {
        weighted_sum(&self.a_weights, history)
    }

    /// `B_k` applied to a history, newest first.
    pub fn apply_b<'a, T: Linear + 'a>(&self, history: impl IntoIterator<Item = &'a T>) -> T {
        weighted_sum(&self.b_weights, history)
    }
}

pub fn bdf_scheme(order: usize) -> Result<BdfScheme, StepError> {
    BdfScheme::new(order)
}

fn weighted_sum<'a, T: Linear + 'a>(weights: &[f64], history: impl IntoIterator<Item = &'a T>) -> T {
    let mut it = history.into_iter();
    let first = it.next().expect("history must hold at least one level");
    let mut acc = first.zero_like();
    acc.add_scaled(weights[0], first);
    let mut used = 1;
    for (w, level) in weights[1..].iter().zip(it) {
        acc.add_scaled(*w, level);
        used += 1;
    }
    assert_eq!(used, weights.len(), "history shallower than the scheme order");
    acc
}
