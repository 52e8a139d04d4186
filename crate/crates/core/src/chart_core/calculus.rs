//! Coordinate formulas for Lie brackets, Lie derivatives and exterior
//! derivatives, acting on jet tensors.

use super::geometry::sum;
use super::tensor::{Slot, Tensor};

/// Global factor in front of the invariant formula for `d` on one-forms:
/// `dω(X,Y) = c·(X ω(Y) − Y ω(X) − ω([X,Y]))`. On two-forms the matching
/// factor is `1/3`.
pub const EXTERIOR_DERIVATIVE_FACTOR: f64 = 0.5;
const EXTERIOR_DERIVATIVE_FACTOR_2: f64 = 1.0 / 3.0;

/// `[X, Y]^i = X^k ∂_k Y^i − Y^k ∂_k X^i`.
pub fn lie_bracket(x: &Tensor, y: &Tensor) -> Tensor {
    assert_eq!(x.slots(), [Slot::Up]);
    assert_eq!(y.slots(), [Slot::Up]);
    let m = x.dim();
    let dx = x.partial();
    let dy = y.partial();
    Tensor::from_fn(m, vec![Slot::Up], |ix| {
        let i = ix[0];
        sum((0..m).map(|k| x.at(&[k]) * dy.at(&[k, i]) - y.at(&[k]) * dx.at(&[k, i])))
    })
}

/// `(L_X g)_{ij} = X^k ∂_k g_{ij} + g_{kj} ∂_i X^k + g_{ik} ∂_j X^k`.
pub fn lie_derivative_bilinear(x: &Tensor, g: &Tensor) -> Tensor {
    assert_eq!(x.slots(), [Slot::Up]);
    assert_eq!(g.slots(), [Slot::Down, Slot::Down]);
    let m = x.dim();
    let dx = x.partial();
    let dg = g.partial();
    Tensor::from_fn(m, vec![Slot::Down, Slot::Down], |ix| {
        let (i, j) = (ix[0], ix[1]);
        sum((0..m).map(|k| {
            x.at(&[k]) * dg.at(&[k, i, j])
                + g.at(&[k, j]) * dx.at(&[i, k])
                + g.at(&[i, k]) * dx.at(&[j, k])
        }))
    })
}

/// `(L_X T)^i_j = X^k ∂_k T^i_j − T^k_j ∂_k X^i + T^i_k ∂_j X^k`,
/// i.e. `(L_X T)Y = [X, TY] − T[X, Y]`.
pub fn lie_derivative_endomorphism(x: &Tensor, t: &Tensor) -> Tensor {
    assert_eq!(x.slots(), [Slot::Up]);
    assert_eq!(t.slots(), [Slot::Up, Slot::Down]);
    let m = x.dim();
    let dx = x.partial();
    let dt = t.partial();
    Tensor::from_fn(m, vec![Slot::Up, Slot::Down], |ix| {
        let (i, j) = (ix[0], ix[1]);
        sum((0..m).map(|k| {
            x.at(&[k]) * dt.at(&[k, i, j]) - t.at(&[k, j]) * dx.at(&[k, i])
                + t.at(&[i, k]) * dx.at(&[j, k])
        }))
    })
}

/// `(dω)_{ij} = c (∂_i ω_j − ∂_j ω_i)`.
pub fn exterior_derivative_one_form(omega: &Tensor) -> Tensor {
    assert_eq!(omega.slots(), [Slot::Down]);
    let d = omega.partial();
    Tensor::from_fn(omega.dim(), vec![Slot::Down, Slot::Down], |ix| {
        (d.at(&[ix[0], ix[1]]) - d.at(&[ix[1], ix[0]])) * EXTERIOR_DERIVATIVE_FACTOR
    })
}

/// `(dF)_{ijk} = ⅓ (∂_i F_{jk} + ∂_j F_{ki} + ∂_k F_{ij})` for antisymmetric `F`.
pub fn exterior_derivative_two_form(f: &Tensor) -> Tensor {
    assert_eq!(f.slots(), [Slot::Down, Slot::Down]);
    let d = f.partial();
    Tensor::from_fn(f.dim(), vec![Slot::Down; 3], |ix| {
        let (i, j, k) = (ix[0], ix[1], ix[2]);
        (d.at(&[i, j, k]) + d.at(&[j, k, i]) + d.at(&[k, i, j])) * EXTERIOR_DERIVATIVE_FACTOR_2
    })
}

/// Gradient one-form of a scalar tensor.
pub fn differential(f: &Tensor) -> Tensor {
    assert!(f.slots().is_empty());
    let d = f.partial();
    Tensor::from_fn(f.dim(), vec![Slot::Down], |ix| d.at(ix).clone())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chart_core::jet::Jet;

    #[test]
    fn bracket_of_coordinate_and_rotation() {
        let x = Jet::seed(&[0.7, -0.2], 2);
        let zero = x[0].zero_like();
        let dx = Tensor::new(2, vec![Slot::Up], vec![zero.lift(1.0), zero.clone()]).unwrap();
        let rot = Tensor::new(2, vec![Slot::Up], vec![-&x[1], x[0].clone()]).unwrap();
        // [∂_x, −y∂_x + x∂_y] = ∂_y
        let b = lie_bracket(&dx, &rot);
        assert_eq!(b.values(), vec![0.0, 1.0]);
    }

    #[test]
    fn d_squared_vanishes_on_exact_forms() {
        let x = Jet::seed(&[0.7, -0.2, 1.1], 3);
        let f = x[0].sin() * &x[1] * x[2].exp() + x[1].powi(3);
        let df = differential(&Tensor::scalar(f, 3));
        assert!(exterior_derivative_one_form(&df).max_abs() < 1e-14);
    }
}
