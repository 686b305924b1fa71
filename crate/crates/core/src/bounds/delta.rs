use serde::{Deserialize, Serialize};

use super::BoundError;
use crate::sum;

/// Positive parameters `δ_1, …, δ_k` of the δ-quantified inequalities.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct DeltaSequence(Vec<f64>);

impl DeltaSequence {
    pub fn new(values: Vec<f64>) -> Result<Self, BoundError> {
        if let Some(index) = values.iter().position(|&d| !(d > 0.0) || !d.is_finite()) {
            return Err(BoundError::NonPositiveDelta { index });
        }
        Ok(Self(values))
    }

    /// `k` copies of one constant.
    pub fn constant(delta: f64, k: usize) -> Result<Self, BoundError> {
        Self::new(vec![delta; k])
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn is_non_increasing(&self) -> bool {
        self.0.windows(2).all(|w| w[0] >= w[1])
    }
}

/// `Σ a_i δ_i + b_i / δ_i`.
pub fn monotone_objective(a: &[f64], b: &[f64], delta: &[f64]) -> f64 {
    sum::sum(a.iter().zip(b).zip(delta).map(|((&ai, &bi), &d)| ai * d + bi / d))
}

/// Exact minimiser of `Σ a_i δ_i + b_i / δ_i` over non-increasing positive
/// sequences, by pool-adjacent-violators.
///
/// Each term alone is minimised at `√(b_i/a_i)`; a block of pooled terms
/// shares the value `√(Σ b / Σ a)`. Blocks are merged while a later block
/// would sit above an earlier one.
pub fn optimize_delta_monotone(a: &[f64], b: &[f64]) -> Result<DeltaSequence, BoundError> {
    assert_eq!(a.len(), b.len(), "coefficient lengths differ");
    if let Some(index) = a.iter().position(|&x| !(x > 0.0)) {
        return Err(BoundError::NonPositiveCoefficient { index });
    }
    if let Some(index) = b.iter().position(|&x| !(x >= 0.0)) {
        return Err(BoundError::NonPositiveCoefficient { index });
    }
    struct Block {
        a: f64,
        b: f64,
        len: usize,
    }
    impl Block {
        fn value(&self) -> f64 {
            (self.b / self.a).sqrt()
        }
    }
    let mut blocks: Vec<Block> = Vec::with_capacity(a.len());
    for (&ai, &bi) in a.iter().zip(b) {
        let mut cur = Block { a: ai, b: bi, len: 1 };
        while let Some(prev) = blocks.last() {
            if prev.value() >= cur.value() {
                break;
            }
            let prev = blocks.pop().unwrap();
            cur = Block {
                a: prev.a + cur.a,
                b: prev.b + cur.b,
                len: prev.len + cur.len,
            };
        }
        blocks.push(cur);
    }
    let mut out = Vec::with_capacity(a.len());
    for block in &blocks {
        // a block with Σb = 0 has its infimum at δ → 0
        let v = block.value().max(f64::MIN_POSITIVE);
        out.extend(std::iter::repeat_n(v, block.len));
    }
    DeltaSequence::new(out)
}

/// Golden-section minimisation of a unimodal function of `δ > 0`.
///
/// The bracket is found by doubling (or halving) from `δ = 1` until the
/// function stops decreasing, never going below `1e-12`.
pub(crate) fn golden_section<F: Fn(f64) -> f64>(f: F, rtol: f64) -> Result<(f64, f64), BoundError> {
    const FLOOR: f64 = 1e-12;
    let mut x = 1.0;
    let mut fx = f(x);
    let (mut lo, mut hi);
    if f(2.0) < fx {
        let mut steps = 0;
        loop {
            let next = 2.0 * x;
            let fnext = f(next);
            if fnext >= fx {
                lo = x / 2.0;
                hi = next;
                break;
            }
            x = next;
            fx = fnext;
            steps += 1;
            if steps > 2000 || !x.is_finite() {
                return Err(BoundError::BracketingFailure("δ grows without bound".into()));
            }
        }
    } else {
        loop {
            let next = (x / 2.0).max(FLOOR);
            let fnext = f(next);
            if fnext >= fx || next == FLOOR {
                lo = next;
                hi = 2.0 * x;
                if next == FLOOR && fnext < fx {
                    lo = FLOOR;
                    hi = x;
                }
                break;
            }
            x = next;
            fx = fnext;
        }
    }
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = hi - inv_phi * (hi - lo);
    let mut d = lo + inv_phi * (hi - lo);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..500 {
        if (hi - lo) <= rtol * 0.5 * (hi + lo) {
            break;
        }
        if fc <= fd {
            hi = d;
            d = c;
            fd = fc;
            c = hi - inv_phi * (hi - lo);
            fc = f(c);
        } else {
            lo = c;
            c = d;
            fc = fd;
            d = lo + inv_phi * (hi - lo);
            fd = f(d);
        }
    }
    let (x, fx) = if fc <= fd { (c, fc) } else { (d, fd) };
    Ok((x, fx))
}
