//! Dense probability tables over ordered variable scopes.
//!
//! Every table in the crate is laid out in mixed-radix order: the flat index of the
//! assignment `(x_0, .., x_{k-1})` over cardinalities `(c_0, .., c_{k-1})` is
//! `((x_0 * c_1 + x_1) * c_2 + ..) * c_{k-1} + x_{k-1}`, so the last scope variable varies
//! fastest. CPTs reuse the same layout with scope `parents ++ [child]`.

use crate::error::ModelError;
use crate::network::VarId;
use crate::TAU_NORM;

/// Row-major strides for an array of shape `cards`.
pub(crate) fn strides(cards: &[usize]) -> Vec<usize> {
    let mut out = vec![0; cards.len()];
    let mut acc = 1;
    for (axis, &card) in cards.iter().enumerate().rev() {
        out[axis] = acc;
        acc *= card;
    }
    out
}

/// For each axis of `src`, the stride that axis has in the `dst` layout (0 if absent).
pub(crate) fn strides_into(src: &[VarId], dst: &[VarId], dst_cards: &[usize]) -> Vec<usize> {
    let dst_strides = strides(dst_cards);
    src.iter()
        .map(|v| {
            dst.iter()
                .position(|d| d == v)
                .map_or(0, |axis| dst_strides[axis])
        })
        .collect()
}

/// Visits every cell of an array with shape `cards` in flat order, passing the flat index and,
/// for each stride map in `maps`, the corresponding flat index in the mapped layout.
pub(crate) fn walk<const K: usize>(
    cards: &[usize],
    maps: [&[usize]; K],
    mut f: impl FnMut(usize, [usize; K]),
) {
    let total: usize = cards.iter().product();
    let n = cards.len();
    let mut digits = vec![0usize; n];
    let mut mapped = [0usize; K];
    for flat in 0..total {
        f(flat, mapped);
        let mut axis = n;
        while axis > 0 {
            axis -= 1;
            digits[axis] += 1;
            for k in 0..K {
                mapped[k] += maps[k][axis];
            }
            if digits[axis] < cards[axis] {
                break;
            }
            for k in 0..K {
                mapped[k] -= maps[k][axis] * cards[axis];
            }
            digits[axis] = 0;
        }
    }
}

/// Same as [`walk`] with a runtime number of stride maps.
pub(crate) fn walk_many(cards: &[usize], maps: &[Vec<usize>], mut f: impl FnMut(usize, &[usize])) {
    let total: usize = cards.iter().product();
    let n = cards.len();
    let mut digits = vec![0usize; n];
    let mut mapped = vec![0usize; maps.len()];
    for flat in 0..total {
        f(flat, &mapped);
        let mut axis = n;
        while axis > 0 {
            axis -= 1;
            digits[axis] += 1;
            for (m, map) in mapped.iter_mut().zip(maps) {
                *m += map[axis];
            }
            if digits[axis] < cards[axis] {
                break;
            }
            for (m, map) in mapped.iter_mut().zip(maps) {
                *m -= map[axis] * cards[axis];
            }
            digits[axis] = 0;
        }
    }
}

/// Decodes a flat index into per-axis states.
pub(crate) fn unflatten(mut flat: usize, cards: &[usize]) -> Vec<usize> {
    let mut out = vec![0; cards.len()];
    for (axis, &card) in cards.iter().enumerate().rev() {
        out[axis] = flat % card;
        flat /= card;
    }
    out
}

/// A dense nonnegative table over an ordered scope.
///
/// Tables built through [`JointTable::new`] are probability distributions (entries sum to one
/// within [`TAU_NORM`]). The crate also uses the type internally for unnormalized factors.
#[derive(Debug, Clone, PartialEq)]
pub struct JointTable {
    scope: Vec<VarId>,
    cards: Vec<usize>,
    probs: Vec<f64>,
}

impl JointTable {
    pub fn new(scope: Vec<VarId>, cards: Vec<usize>, probs: Vec<f64>) -> Result<Self, ModelError> {
        check_scope(&scope)?;
        if cards.len() != scope.len() {
            return Err(ModelError::ScopeMismatch(format!(
                "{} variables but {} cardinalities",
                scope.len(),
                cards.len()
            )));
        }
        let expected: usize = cards.iter().product();
        if probs.len() != expected {
            return Err(ModelError::TableLength {
                expected,
                found: probs.len(),
            });
        }
        if let Some((index, &value)) = probs
            .iter()
            .enumerate()
            .find(|(_, p)| !p.is_finite() || **p < 0.0)
        {
            return Err(ModelError::TableEntry { index, value });
        }
        let sum: f64 = probs.iter().sum();
        if (sum - 1.0).abs() > TAU_NORM {
            return Err(ModelError::TableNotNormalized(sum));
        }
        Ok(JointTable {
            scope,
            cards,
            probs,
        })
    }

    /// Builds a table without validation; used for factors and intermediate results.
    pub(crate) fn from_raw(scope: Vec<VarId>, cards: Vec<usize>, probs: Vec<f64>) -> Self {
        debug_assert_eq!(scope.len(), cards.len());
        debug_assert_eq!(probs.len(), cards.iter().product::<usize>());
        JointTable {
            scope,
            cards,
            probs,
        }
    }

    pub fn uniform(scope: Vec<VarId>, cards: Vec<usize>) -> Result<Self, ModelError> {
        let len: usize = cards.iter().product();
        Self::new(scope, cards, vec![1.0 / len as f64; len])
    }

    pub(crate) fn ones(scope: Vec<VarId>, cards: Vec<usize>) -> Self {
        let len = cards.iter().product();
        JointTable::from_raw(scope, cards, vec![1.0; len])
    }

    pub fn scope(&self) -> &[VarId] {
        &self.scope
    }

    pub fn cards(&self) -> &[usize] {
        &self.cards
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub(crate) fn probs_mut(&mut self) -> &mut [f64] {
        &mut self.probs
    }

    pub fn into_probs(self) -> Vec<f64> {
        self.probs
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn total(&self) -> f64 {
        self.probs.iter().sum()
    }

    pub fn axis_of(&self, var: VarId) -> Option<usize> {
        self.scope.iter().position(|&v| v == var)
    }

    /// Flat index of a full assignment to the scope.
    pub fn index_of(&self, states: &[usize]) -> usize {
        debug_assert_eq!(states.len(), self.cards.len());
        states
            .iter()
            .zip(&self.cards)
            .fold(0, |acc, (&s, &c)| acc * c + s)
    }

    pub fn get(&self, states: &[usize]) -> f64 {
        self.probs[self.index_of(states)]
    }

    /// Sums out every variable not in `target`; the result is laid out in `target` order.
    pub fn marginalize(&self, target: &[VarId]) -> Result<JointTable, ModelError> {
        check_scope(target)?;
        if let Some(&missing) = target.iter().find(|v| !self.scope.contains(v)) {
            return Err(ModelError::NotInScope(missing));
        }
        Ok(self.sum_onto(target))
    }

    /// [`JointTable::marginalize`] for callers that already know `target` is a sub-scope.
    pub(crate) fn sum_onto(&self, target: &[VarId]) -> JointTable {
        let target_cards: Vec<usize> = target
            .iter()
            .map(|v| self.cards[self.axis_of(*v).expect("target variable in scope")])
            .collect();
        let map = strides_into(&self.scope, target, &target_cards);
        let mut out = vec![0.0; target_cards.iter().product()];
        walk(&self.cards, [&map], |flat, [t]| out[t] += self.probs[flat]);
        JointTable::from_raw(target.to_vec(), target_cards, out)
    }

    /// Pointwise product; the result scope is `self.scope` followed by the new variables of
    /// `other`.
    pub(crate) fn product(&self, other: &JointTable) -> JointTable {
        let mut scope = self.scope.clone();
        let mut cards = self.cards.clone();
        for (v, c) in other.scope.iter().zip(&other.cards) {
            if !scope.contains(v) {
                scope.push(*v);
                cards.push(*c);
            }
        }
        let left = strides_into(&scope, &self.scope, &self.cards);
        let right = strides_into(&scope, &other.scope, &other.cards);
        let mut out = vec![0.0; cards.iter().product()];
        walk(&cards, [&left, &right], |flat, [a, b]| {
            out[flat] = self.probs[a] * other.probs[b];
        });
        JointTable::from_raw(scope, cards, out)
    }

    /// Largest entrywise absolute difference; both tables must share scope order and shape.
    pub fn max_abs_diff(&self, other: &JointTable) -> Result<f64, ModelError> {
        if self.scope != other.scope || self.cards != other.cards {
            return Err(ModelError::ScopeMismatch(
                "tables have different scopes".into(),
            ));
        }
        Ok(max_abs_diff(&self.probs, &other.probs))
    }

    /// Rescales entries to sum to one and returns the applied adjustment `|1 - total|`.
    pub(crate) fn renormalize(&mut self) -> f64 {
        let total = self.total();
        if total > 0.0 {
            for p in &mut self.probs {
                *p /= total;
            }
        }
        (1.0 - total).abs()
    }
}

pub(crate) fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

fn check_scope(scope: &[VarId]) -> Result<(), ModelError> {
    for (i, v) in scope.iter().enumerate() {
        if scope[..i].contains(v) {
            return Err(ModelError::DuplicateScope(*v));
        }
    }
    Ok(())
}
