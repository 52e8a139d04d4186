//! Coordinate-component tensors whose entries are jets.

use nalgebra::{DMatrix, DVector};

use super::field::FieldKind;
use super::jet::Jet;
use crate::error::{GeometryError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Slot {
    Up,
    Down,
}

/// Tensor components in the coordinate frame, row-major over the slots.
#[derive(Debug, Clone)]
pub struct Tensor {
    dim: usize,
    slots: Vec<Slot>,
    comps: Vec<Jet>,
}

/// Iterates over all multi-indices of the given rank, last index fastest.
pub fn multi_indices(dim: usize, rank: usize) -> impl Iterator<Item = Vec<usize>> {
    let total = dim.pow(rank as u32);
    (0..total).map(move |mut flat| {
        let mut idx = vec![0; rank];
        for slot in (0..rank).rev() {
            idx[slot] = flat % dim;
            flat /= dim;
        }
        idx
    })
}

impl Tensor {
    pub fn new(dim: usize, slots: Vec<Slot>, comps: Vec<Jet>) -> Result<Self> {
        if comps.len() != dim.pow(slots.len() as u32) {
            return Err(GeometryError::DimensionMismatch(format!(
                "{} components for a rank-{} tensor in dimension {dim}",
                comps.len(),
                slots.len()
            )));
        }
        Ok(Tensor { dim, slots, comps })
    }

    pub fn from_fn(dim: usize, slots: Vec<Slot>, mut f: impl FnMut(&[usize]) -> Jet) -> Self {
        let comps = multi_indices(dim, slots.len()).map(|i| f(&i)).collect();
        Tensor { dim, slots, comps }
    }

    /// Wraps field components according to the field kind.
    pub fn from_field(kind: FieldKind, dim: usize, comps: Vec<Jet>) -> Result<Self> {
        let slots = match kind {
            FieldKind::Scalar => vec![],
            FieldKind::Vector => vec![Slot::Up],
            FieldKind::OneForm => vec![Slot::Down],
            FieldKind::Endomorphism => vec![Slot::Up, Slot::Down],
            FieldKind::Metric => vec![Slot::Down, Slot::Down],
        };
        Tensor::new(dim, slots, comps)
    }

    pub fn scalar(value: Jet, dim: usize) -> Self {
        Tensor {
            dim,
            slots: vec![],
            comps: vec![value],
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn slots(&self) -> &[Slot] {
        &self.slots
    }

    pub fn rank(&self) -> usize {
        self.slots.len()
    }

    pub fn comps(&self) -> &[Jet] {
        &self.comps
    }

    pub fn into_comps(self) -> Vec<Jet> {
        self.comps
    }

    pub fn order(&self) -> usize {
        self.comps.iter().map(Jet::order).min().unwrap_or(0)
    }

    fn offset(&self, idx: &[usize]) -> usize {
        debug_assert_eq!(idx.len(), self.rank());
        idx.iter().fold(0, |acc, &i| acc * self.dim + i)
    }

    pub fn at(&self, idx: &[usize]) -> &Jet {
        &self.comps[self.offset(idx)]
    }

    pub fn value_at(&self, idx: &[usize]) -> f64 {
        self.at(idx).value()
    }

    pub fn values(&self) -> Vec<f64> {
        self.comps.iter().map(Jet::value).collect()
    }

    /// Rank-2 values as a matrix (first slot = row).
    pub fn matrix(&self) -> DMatrix<f64> {
        assert_eq!(
            self.rank(),
            2,
            "matrix view of a rank-{} tensor",
            self.rank()
        );
        DMatrix::from_row_slice(self.dim, self.dim, &self.values())
    }

    pub fn vector(&self) -> DVector<f64> {
        assert_eq!(
            self.rank(),
            1,
            "vector view of a rank-{} tensor",
            self.rank()
        );
        DVector::from_vec(self.values())
    }

    pub fn map(&self, f: impl Fn(&Jet) -> Jet) -> Tensor {
        Tensor {
            dim: self.dim,
            slots: self.slots.clone(),
            comps: self.comps.iter().map(f).collect(),
        }
    }

    pub fn scale(&self, c: f64) -> Tensor {
        self.map(|j| j * c)
    }

    pub fn mul_scalar(&self, s: &Jet) -> Tensor {
        self.map(|j| j * s)
    }

    fn check_same(&self, other: &Tensor) {
        assert_eq!(self.slots, other.slots, "slot mismatch in tensor sum");
        assert_eq!(self.dim, other.dim, "dimension mismatch in tensor sum");
    }

    pub fn add(&self, other: &Tensor) -> Tensor {
        self.check_same(other);
        Tensor {
            dim: self.dim,
            slots: self.slots.clone(),
            comps: self
                .comps
                .iter()
                .zip(&other.comps)
                .map(|(a, b)| a + b)
                .collect(),
        }
    }

    pub fn sub(&self, other: &Tensor) -> Tensor {
        self.check_same(other);
        Tensor {
            dim: self.dim,
            slots: self.slots.clone(),
            comps: self
                .comps
                .iter()
                .zip(&other.comps)
                .map(|(a, b)| a - b)
                .collect(),
        }
    }

    /// Coordinate partial derivatives; prepends a `Down` slot.
    pub fn partial(&self) -> Tensor {
        let mut slots = vec![Slot::Down];
        slots.extend_from_slice(&self.slots);
        let n = self.comps.len();
        let comps = (0..self.dim)
            .flat_map(|a| (0..n).map(move |c| (a, c)))
            .map(|(a, c)| self.comps[c].partial(a))
            .collect();
        Tensor {
            dim: self.dim,
            slots,
            comps,
        }
    }

    /// Largest absolute component value.
    pub fn max_abs(&self) -> f64 {
        self.comps
            .iter()
            .map(|j| j.value().abs())
            .fold(0.0, f64::max)
    }

    pub fn truncate(&self, order: usize) -> Tensor {
        self.map(|j| j.truncate(order))
    }
}

/// Composition `A ∘ B` of two `(1,1)` tensors.
pub fn compose(a: &Tensor, b: &Tensor) -> Tensor {
    assert_eq!(a.slots(), [Slot::Up, Slot::Down]);
    assert_eq!(b.slots(), [Slot::Up, Slot::Down]);
    let m = a.dim();
    Tensor::from_fn(m, vec![Slot::Up, Slot::Down], |ix| {
        (0..m)
            .map(|k| a.at(&[ix[0], k]) * b.at(&[k, ix[1]]))
            .reduce(|x, y| x + y)
            .expect("dim > 0")
    })
}

/// `T(V)` for a `(1,1)` tensor and a vector.
pub fn apply(t: &Tensor, v: &Tensor) -> Tensor {
    assert_eq!(t.slots(), [Slot::Up, Slot::Down]);
    assert_eq!(v.slots(), [Slot::Up]);
    let m = t.dim();
    Tensor::from_fn(m, vec![Slot::Up], |ix| {
        (0..m)
            .map(|k| t.at(&[ix[0], k]) * v.at(&[k]))
            .reduce(|x, y| x + y)
            .expect("dim > 0")
    })
}

/// `ω(V)` for a one-form and a vector.
pub fn pair(omega: &Tensor, v: &Tensor) -> Jet {
    assert_eq!(omega.slots(), [Slot::Down]);
    assert_eq!(v.slots(), [Slot::Up]);
    (0..v.dim())
        .map(|k| omega.at(&[k]) * v.at(&[k]))
        .reduce(|x, y| x + y)
        .expect("dim > 0")
}

/// Contracts the first `Down` slot of `t` with the constant vector `x`.
pub fn contract_first(t: &Tensor, x: &DVector<f64>) -> Tensor {
    assert!(matches!(t.slots().first(), Some(Slot::Down)));
    let rest = t.slots()[1..].to_vec();
    let m = t.dim();
    Tensor::from_fn(m, rest, |ix| {
        let mut full = Vec::with_capacity(ix.len() + 1);
        full.push(0);
        full.extend_from_slice(ix);
        let mut acc = t.at(&full) * x[0];
        for a in 1..m {
            full[0] = a;
            acc += &(t.at(&full) * x[a]);
        }
        acc
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn multi_index_order_is_row_major() {
        let all: Vec<_> = multi_indices(2, 2).collect();
        assert_eq!(all, vec![vec![0, 0], vec![0, 1], vec![1, 0], vec![1, 1]]);
        assert_eq!(multi_indices(3, 0).count(), 1);
    }

    #[test]
    fn partial_prepends_derivative_slot() {
        let x = Jet::seed(&[1.0, 2.0], 2);
        let t = Tensor::new(2, vec![Slot::Up], vec![&x[0] * &x[1], x[1].square()]).unwrap();
        let d = t.partial();
        assert_eq!(d.slots(), [Slot::Down, Slot::Up]);
        // ∂_0 (x y) = y, ∂_1 (y²) = 2y
        assert_eq!(d.value_at(&[0, 0]), 2.0);
        assert_eq!(d.value_at(&[1, 1]), 4.0);
        assert_eq!(d.value_at(&[0, 1]), 0.0);
    }
}
