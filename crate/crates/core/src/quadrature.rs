//! Tensor-product midpoint quadrature over rectangular parameter boxes with
//! a Richardson error estimate.

use serde::{Deserialize, Serialize};

use crate::error::{GeometryError, Result};

/// Convergence order of the midpoint rule on smooth integrands.
pub const MIDPOINT_ORDER: i32 = 2;

/// Closed rectangular box `[a_0,b_0] × … × [a_{k−1},b_{k−1}]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamBox {
    intervals: Vec<[f64; 2]>,
}

impl ParamBox {
    pub fn new(intervals: Vec<[f64; 2]>) -> Result<Self> {
        if intervals.is_empty() {
            return Err(GeometryError::InvalidInput("parameter box has no axes".into()));
        }
        for (axis, [lo, hi]) in intervals.iter().enumerate() {
            if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                return Err(GeometryError::InvalidInput(format!(
                    "axis {axis} interval [{lo}, {hi}] is empty or non-finite"
                )));
            }
        }
        Ok(ParamBox { intervals })
    }

    pub fn intervals(&self) -> &[[f64; 2]] {
        &self.intervals
    }

    pub fn dim(&self) -> usize {
        self.intervals.len()
    }

    pub fn measure(&self) -> f64 {
        self.intervals.iter().map(|[lo, hi]| hi - lo).product()
    }

    pub fn center(&self) -> Vec<f64> {
        self.intervals.iter().map(|[lo, hi]| 0.5 * (lo + hi)).collect()
    }

    pub fn contains_point(&self, u: &[f64]) -> bool {
        u.len() == self.dim()
            && self
                .intervals
                .iter()
                .zip(u)
                .all(|([lo, hi], x)| *lo <= *x && *x <= *hi)
    }

    /// Whether `other` lies inside `self`, up to a relative slack of 1e-12.
    pub fn contains(&self, other: &ParamBox) -> bool {
        other.dim() == self.dim()
            && self
                .intervals
                .iter()
                .zip(&other.intervals)
                .all(|([lo, hi], [a, b])| {
                    let slack = 1e-12 * (hi - lo);
                    *a >= lo - slack && *b <= hi + slack
                })
    }

    /// Whether the interiors of the two boxes intersect.
    pub fn overlaps(&self, other: &ParamBox) -> bool {
        self.intervals
            .iter()
            .zip(&other.intervals)
            .all(|([lo, hi], [a, b])| a < hi && lo < b)
    }

    /// Midpoint-rule nodes and weights on a tensor grid with `shape[i]`
    /// cells along axis `i`. Nodes are ordered with axis 0 varying slowest.
    pub fn midpoint_nodes(&self, shape: &[usize]) -> Vec<(Vec<f64>, f64)> {
        assert_eq!(shape.len(), self.dim(), "grid shape does not match box");
        let spacing: Vec<f64> = self
            .intervals
            .iter()
            .zip(shape)
            .map(|([lo, hi], &n)| (hi - lo) / n as f64)
            .collect();
        let weight: f64 = spacing.iter().product();
        let total: usize = shape.iter().product();
        let mut nodes = Vec::with_capacity(total);
        let mut index = vec![0usize; shape.len()];
        for _ in 0..total {
            let u = index
                .iter()
                .zip(&self.intervals)
                .zip(&spacing)
                .map(|((&i, [lo, _]), h)| lo + (i as f64 + 0.5) * h)
                .collect();
            nodes.push((u, weight));
            for axis in (0..shape.len()).rev() {
                index[axis] += 1;
                if index[axis] < shape[axis] {
                    break;
                }
                index[axis] = 0;
            }
        }
        nodes
    }

    /// Midpoint nodes on the face `u_axis = lo` or `u_axis = hi`, using the
    /// cell layout of `shape` on the remaining axes. Weights are the face
    /// cell measures.
    pub fn face_nodes(&self, shape: &[usize], axis: usize, side: Side) -> Vec<(Vec<f64>, f64)> {
        let fixed = match side {
            Side::Lower => self.intervals[axis][0],
            Side::Upper => self.intervals[axis][1],
        };
        if self.dim() == 1 {
            return vec![(vec![fixed], 1.0)];
        }
        let mut reduced = self.intervals.clone();
        reduced.remove(axis);
        let mut reduced_shape = shape.to_vec();
        reduced_shape.remove(axis);
        let face = ParamBox { intervals: reduced };
        face.midpoint_nodes(&reduced_shape)
            .into_iter()
            .map(|(mut u, w)| {
                u.insert(axis, fixed);
                (u, w)
            })
            .collect()
    }

    /// Whether a face of `self` lies on the matching face of `outer`.
    pub fn shares_face(&self, outer: &ParamBox, axis: usize, side: Side) -> bool {
        let (mine, theirs) = match side {
            Side::Lower => (self.intervals[axis][0], outer.intervals[axis][0]),
            Side::Upper => (self.intervals[axis][1], outer.intervals[axis][1]),
        };
        let scale = outer.intervals[axis][1] - outer.intervals[axis][0];
        (mine - theirs).abs() <= 1e-12 * scale
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Side {
    Lower,
    Upper,
}

/// Value of a quadrature with its error budget.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct IntegralResult {
    /// Fine-grid value.
    pub value: f64,
    /// Richardson estimate `|fine − coarse| / (2^p − 1)`.
    pub error_estimate: f64,
    /// Estimated mass outside a truncated parameter box (0 for compact surfaces).
    pub truncation_estimate: f64,
    /// Number of fine-grid nodes.
    pub nodes: usize,
}

impl IntegralResult {
    pub fn from_levels(coarse: f64, fine: f64, nodes: usize) -> Self {
        IntegralResult {
            value: fine,
            error_estimate: richardson_error(coarse, fine, MIDPOINT_ORDER),
            truncation_estimate: 0.0,
            nodes,
        }
    }

    /// Total error budget (quadrature plus truncation).
    pub fn error_budget(&self) -> f64 {
        self.error_estimate + self.truncation_estimate
    }

    /// Sum of two results over disjoint domains.
    pub fn combine(self, other: IntegralResult) -> IntegralResult {
        IntegralResult {
            value: self.value + other.value,
            error_estimate: self.error_estimate + other.error_estimate,
            truncation_estimate: self.truncation_estimate + other.truncation_estimate,
            nodes: self.nodes + other.nodes,
        }
    }
}

/// Error estimate of the finer of two rules whose spacings differ by 2.
pub fn richardson_error(coarse: f64, fine: f64, order: i32) -> f64 {
    (fine - coarse).abs() / (2f64.powi(order) - 1.0)
}

/// Pairwise summation: deterministic, with O(log n) error growth.
pub fn pairwise_sum(values: &[f64]) -> f64 {
    const BLOCK: usize = 32;
    if values.len() <= BLOCK {
        values.iter().sum()
    } else {
        let mid = values.len() / 2;
        pairwise_sum(&values[..mid]) + pairwise_sum(&values[mid..])
    }
}
