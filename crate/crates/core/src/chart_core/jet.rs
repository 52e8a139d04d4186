//! Truncated multivariate Taylor polynomials ("jets").
//!
//! A [`Jet`] carries every partial derivative of a quantity up to a fixed
//! total order (at most [`MAX_ORDER`]) with respect to the chart coordinates
//! at one base point. Arithmetic and the elementary functions propagate the
//! expansion exactly, so derivatives read back from a jet carry no
//! discretisation error.
//!
//! Coefficients are plain Taylor coefficients indexed by monomial; the
//! partial derivative `∂^α` is the coefficient times `α!`.

use std::collections::HashMap;
use std::fmt;
use std::ops::{Add, AddAssign, Div, Mul, MulAssign, Neg, Sub, SubAssign};
use std::sync::{Arc, Mutex, OnceLock};

/// Highest derivative order a jet can carry.
pub const MAX_ORDER: usize = 3;

/// Monomial bookkeeping shared by all jets over the same number of variables.
#[derive(Debug)]
pub struct JetLayout {
    nvars: usize,
    index: HashMap<Vec<u8>, usize>,
    /// `len_upto[d]` = number of monomials of total degree `<= d`.
    len_upto: [usize; MAX_ORDER + 1],
    /// `(i, j, k)` with `x^i * x^j = x^k`, sorted by `deg k`.
    products: Vec<(u32, u32, u32)>,
    products_upto: [usize; MAX_ORDER + 1],
    /// Per variable, per target monomial of degree `< MAX_ORDER`: source index
    /// of `α + e_v` and the factor `α_v + 1`.
    shifts: Vec<Vec<(u32, f64)>>,
    factorials: Vec<f64>,
}

impl JetLayout {
    fn build(nvars: usize) -> Self {
        let mut exponents: Vec<Vec<u8>> = Vec::new();
        let mut len_upto = [0usize; MAX_ORDER + 1];
        for degree in 0..=MAX_ORDER {
            let mut current = vec![0u8; nvars];
            push_degree(&mut exponents, &mut current, 0, degree);
            len_upto[degree] = exponents.len();
        }
        let index: HashMap<Vec<u8>, usize> = exponents
            .iter()
            .enumerate()
            .map(|(i, e)| (e.clone(), i))
            .collect();
        let degree = |e: &[u8]| e.iter().map(|&x| x as usize).sum::<usize>();

        let mut products = Vec::new();
        for (i, ei) in exponents.iter().enumerate() {
            for (j, ej) in exponents.iter().enumerate() {
                if degree(ei) + degree(ej) > MAX_ORDER {
                    continue;
                }
                let sum: Vec<u8> = ei.iter().zip(ej).map(|(a, b)| a + b).collect();
                products.push((i as u32, j as u32, index[&sum] as u32));
            }
        }
        products.sort_by_key(|&(_, _, k)| degree(&exponents[k as usize]));
        let mut products_upto = [0usize; MAX_ORDER + 1];
        for d in 0..=MAX_ORDER {
            products_upto[d] = products
                .iter()
                .filter(|&&(_, _, k)| degree(&exponents[k as usize]) <= d)
                .count();
        }

        let shifts = (0..nvars)
            .map(|v| {
                exponents[..len_upto[MAX_ORDER - 1]]
                    .iter()
                    .map(|e| {
                        let mut up = e.clone();
                        up[v] += 1;
                        (index[&up] as u32, f64::from(up[v]))
                    })
                    .collect()
            })
            .collect();

        let factorials = exponents
            .iter()
            .map(|e| {
                e.iter()
                    .map(|&k| (1..=k as u32).map(f64::from).product::<f64>())
                    .product()
            })
            .collect();

        JetLayout {
            nvars,
            index,
            len_upto,
            products,
            products_upto,
            shifts,
            factorials,
        }
    }

    /// Shared layout for `nvars` variables.
    pub fn get(nvars: usize) -> Arc<JetLayout> {
        static CACHE: OnceLock<Mutex<HashMap<usize, Arc<JetLayout>>>> = OnceLock::new();
        let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
        let mut guard = cache.lock().expect("jet layout cache poisoned");
        guard
            .entry(nvars)
            .or_insert_with(|| Arc::new(JetLayout::build(nvars)))
            .clone()
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    /// Number of coefficients of a jet of the given order.
    pub fn len(&self, order: usize) -> usize {
        self.len_upto[order]
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    fn monomial_index(&self, vars: &[usize]) -> Option<usize> {
        let mut e = vec![0u8; self.nvars];
        for &v in vars {
            e[v] += 1;
        }
        self.index.get(&e).copied()
    }
}

fn push_degree(out: &mut Vec<Vec<u8>>, current: &mut [u8], var: usize, remaining: usize) {
    if current.is_empty() {
        if remaining == 0 {
            out.push(Vec::new());
        }
        return;
    }
    if var + 1 == current.len() {
        current[var] = remaining as u8;
        out.push(current.to_vec());
        current[var] = 0;
        return;
    }
    for k in (0..=remaining).rev() {
        current[var] = k as u8;
        push_degree(out, current, var + 1, remaining - k);
    }
    current[var] = 0;
}

/// Truncated Taylor expansion of a scalar at a base point.
#[derive(Clone)]
pub struct Jet {
    layout: Arc<JetLayout>,
    order: usize,
    coeffs: Vec<f64>,
}

impl fmt::Debug for Jet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Jet")
            .field("order", &self.order)
            .field("coeffs", &self.coeffs)
            .finish()
    }
}

impl Jet {
    pub fn constant(layout: &Arc<JetLayout>, order: usize, value: f64) -> Jet {
        assert!(order <= MAX_ORDER, "jet order {order} exceeds {MAX_ORDER}");
        let mut coeffs = vec![0.0; layout.len(order)];
        coeffs[0] = value;
        Jet {
            layout: layout.clone(),
            order,
            coeffs,
        }
    }

    /// The coordinate function `x_var` expanded around `value`.
    pub fn variable(layout: &Arc<JetLayout>, order: usize, value: f64, var: usize) -> Jet {
        let mut jet = Jet::constant(layout, order, value);
        if order >= 1 {
            jet.coeffs[1 + var] = 1.0;
        }
        jet
    }

    /// Seeds one variable jet per coordinate of `coords`.
    pub fn seed(coords: &[f64], order: usize) -> Vec<Jet> {
        let layout = JetLayout::get(coords.len());
        coords
            .iter()
            .enumerate()
            .map(|(i, &x)| Jet::variable(&layout, order, x, i))
            .collect()
    }

    /// A constant sharing this jet's layout and order.
    pub fn lift(&self, value: f64) -> Jet {
        Jet::constant(&self.layout, self.order, value)
    }

    pub fn zero_like(&self) -> Jet {
        self.lift(0.0)
    }

    pub fn layout(&self) -> &Arc<JetLayout> {
        &self.layout
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn nvars(&self) -> usize {
        self.layout.nvars
    }

    pub fn value(&self) -> f64 {
        self.coeffs[0]
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    /// Partial derivative `∂_{vars[0]} ∂_{vars[1]} …` at the base point.
    ///
    /// Panics if more derivatives are requested than the jet carries.
    pub fn derivative(&self, vars: &[usize]) -> f64 {
        assert!(
            vars.len() <= self.order,
            "derivative of order {} requested from a jet of order {}",
            vars.len(),
            self.order
        );
        let k = self
            .layout
            .monomial_index(vars)
            .expect("monomial within layout");
        self.coeffs[k] * self.layout.factorials[k]
    }

    /// Gradient at the base point.
    pub fn gradient(&self) -> Vec<f64> {
        (0..self.nvars()).map(|v| self.derivative(&[v])).collect()
    }

    /// Drops every term above `order`.
    pub fn truncate(&self, order: usize) -> Jet {
        let order = order.min(self.order);
        Jet {
            layout: self.layout.clone(),
            order,
            coeffs: self.coeffs[..self.layout.len(order)].to_vec(),
        }
    }

    /// The jet of `∂_var self`; one order lower.
    pub fn partial(&self, var: usize) -> Jet {
        assert!(self.order >= 1, "cannot differentiate an order-0 jet");
        let order = self.order - 1;
        let n = self.layout.len(order);
        let coeffs = self.layout.shifts[var][..n]
            .iter()
            .map(|&(src, factor)| factor * self.coeffs[src as usize])
            .collect();
        Jet {
            layout: self.layout.clone(),
            order,
            coeffs,
        }
    }

    fn binary_order(&self, other: &Jet) -> usize {
        debug_assert!(
            Arc::ptr_eq(&self.layout, &other.layout),
            "jets over different variable sets"
        );
        self.order.min(other.order)
    }

    fn mul_jet(&self, other: &Jet) -> Jet {
        let order = self.binary_order(other);
        let mut coeffs = vec![0.0; self.layout.len(order)];
        let (a, b) = (&self.coeffs, &other.coeffs);
        for &(i, j, k) in &self.layout.products[..self.layout.products_upto[order]] {
            coeffs[k as usize] += a[i as usize] * b[j as usize];
        }
        Jet {
            layout: self.layout.clone(),
            order,
            coeffs,
        }
    }

    fn zip_with(&self, other: &Jet, f: impl Fn(f64, f64) -> f64) -> Jet {
        let order = self.binary_order(other);
        let n = self.layout.len(order);
        let coeffs = self.coeffs[..n]
            .iter()
            .zip(&other.coeffs[..n])
            .map(|(&a, &b)| f(a, b))
            .collect();
        Jet {
            layout: self.layout.clone(),
            order,
            coeffs,
        }
    }

    fn map(&self, f: impl Fn(f64) -> f64) -> Jet {
        Jet {
            layout: self.layout.clone(),
            order: self.order,
            coeffs: self.coeffs.iter().map(|&c| f(c)).collect(),
        }
    }

    /// Composes with a univariate function given its normalised Taylor
    /// coefficients `f^{(k)}(a)/k!` at the constant term `a`.
    fn compose(&self, taylor: [f64; MAX_ORDER + 1]) -> Jet {
        let mut delta = self.clone();
        delta.coeffs[0] = 0.0;
        let mut out = self.lift(taylor[0]);
        let mut power = self.lift(1.0);
        for coeff in taylor.iter().skip(1).take(self.order) {
            power = power.mul_jet(&delta);
            for (o, p) in out.coeffs.iter_mut().zip(&power.coeffs) {
                *o += coeff * p;
            }
        }
        out
    }

    pub fn recip(&self) -> Jet {
        let a = self.value();
        let r = 1.0 / a;
        self.compose([r, -r * r, r * r * r, -r * r * r * r])
    }

    pub fn sin(&self) -> Jet {
        let (s, c) = self.value().sin_cos();
        self.compose([s, c, -s / 2.0, -c / 6.0])
    }

    pub fn cos(&self) -> Jet {
        let (s, c) = self.value().sin_cos();
        self.compose([c, -s, -c / 2.0, s / 6.0])
    }

    pub fn exp(&self) -> Jet {
        let e = self.value().exp();
        self.compose([e, e, e / 2.0, e / 6.0])
    }

    /// Natural logarithm; the caller guarantees a positive constant term.
    pub fn ln(&self) -> Jet {
        let a = self.value();
        self.compose([
            a.ln(),
            1.0 / a,
            -1.0 / (2.0 * a * a),
            1.0 / (3.0 * a * a * a),
        ])
    }

    /// Square root; the caller guarantees a positive constant term.
    pub fn sqrt(&self) -> Jet {
        let s = self.value().sqrt();
        let s3 = s * s * s;
        self.compose([s, 0.5 / s, -1.0 / (8.0 * s3), 1.0 / (16.0 * s3 * s * s)])
    }

    /// Integer power by repeated multiplication.
    pub fn powi(&self, exponent: i32) -> Jet {
        let base = if exponent < 0 {
            self.recip()
        } else {
            self.clone()
        };
        let mut result = self.lift(1.0);
        let mut square = base;
        let mut e = exponent.unsigned_abs();
        while e > 0 {
            if e & 1 == 1 {
                result = result.mul_jet(&square);
            }
            e >>= 1;
            if e > 0 {
                square = square.mul_jet(&square);
            }
        }
        result
    }

    pub fn square(&self) -> Jet {
        self.mul_jet(self)
    }

    /// Largest absolute coefficient difference; used by tests.
    pub fn max_abs_diff(&self, other: &Jet) -> f64 {
        let n = self.layout.len(self.binary_order(other));
        self.coeffs[..n]
            .iter()
            .zip(&other.coeffs[..n])
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

macro_rules! jet_binop {
    ($trait:ident, $method:ident, $body:expr) => {
        impl $trait<&Jet> for &Jet {
            type Output = Jet;
            fn $method(self, rhs: &Jet) -> Jet {
                let f: fn(&Jet, &Jet) -> Jet = $body;
                f(self, rhs)
            }
        }
        impl $trait<Jet> for Jet {
            type Output = Jet;
            fn $method(self, rhs: Jet) -> Jet {
                (&self).$method(&rhs)
            }
        }
        impl $trait<&Jet> for Jet {
            type Output = Jet;
            fn $method(self, rhs: &Jet) -> Jet {
                (&self).$method(rhs)
            }
        }
        impl $trait<Jet> for &Jet {
            type Output = Jet;
            fn $method(self, rhs: Jet) -> Jet {
                self.$method(&rhs)
            }
        }
        impl $trait<f64> for &Jet {
            type Output = Jet;
            fn $method(self, rhs: f64) -> Jet {
                self.$method(&self.lift(rhs))
            }
        }
        impl $trait<f64> for Jet {
            type Output = Jet;
            fn $method(self, rhs: f64) -> Jet {
                (&self).$method(rhs)
            }
        }
        impl $trait<&Jet> for f64 {
            type Output = Jet;
            fn $method(self, rhs: &Jet) -> Jet {
                rhs.lift(self).$method(rhs)
            }
        }
        impl $trait<Jet> for f64 {
            type Output = Jet;
            fn $method(self, rhs: Jet) -> Jet {
                self.$method(&rhs)
            }
        }
    };
}

jet_binop!(Add, add, |a, b| a.zip_with(b, |x, y| x + y));
jet_binop!(Sub, sub, |a, b| a.zip_with(b, |x, y| x - y));
jet_binop!(Mul, mul, |a, b| a.mul_jet(b));
jet_binop!(Div, div, |a, b| a.mul_jet(&b.recip()));

impl Neg for &Jet {
    type Output = Jet;
    fn neg(self) -> Jet {
        self.map(|c| -c)
    }
}

impl Neg for Jet {
    type Output = Jet;
    fn neg(self) -> Jet {
        -&self
    }
}

impl AddAssign<&Jet> for Jet {
    fn add_assign(&mut self, rhs: &Jet) {
        if rhs.order < self.order {
            *self = &*self + rhs;
        } else {
            for (a, b) in self.coeffs.iter_mut().zip(&rhs.coeffs) {
                *a += b;
            }
        }
    }
}

impl AddAssign<Jet> for Jet {
    fn add_assign(&mut self, rhs: Jet) {
        *self += &rhs;
    }
}

impl SubAssign<&Jet> for Jet {
    fn sub_assign(&mut self, rhs: &Jet) {
        if rhs.order < self.order {
            *self = &*self - rhs;
        } else {
            for (a, b) in self.coeffs.iter_mut().zip(&rhs.coeffs) {
                *a -= b;
            }
        }
    }
}

impl MulAssign<f64> for Jet {
    fn mul_assign(&mut self, rhs: f64) {
        for c in &mut self.coeffs {
            *c *= rhs;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn x(order: usize) -> Vec<Jet> {
        Jet::seed(&[0.3, -0.7], order)
    }

    #[test]
    fn layout_sizes_match_binomials() {
        let layout = JetLayout::get(6);
        assert_eq!(layout.len(0), 1);
        assert_eq!(layout.len(1), 7);
        assert_eq!(layout.len(2), 28);
        assert_eq!(layout.len(3), 84);
    }

    #[test]
    fn polynomial_derivatives_exact() {
        let v = x(3);
        // f = x^2 y + 3 y^3
        let f = &v[0] * &v[0] * &v[1] + 3.0 * v[1].powi(3);
        let (a, b) = (0.3, -0.7);
        assert!((f.value() - (a * a * b + 3.0 * b * b * b)).abs() < 1e-15);
        assert!((f.derivative(&[0]) - 2.0 * a * b).abs() < 1e-15);
        assert!((f.derivative(&[1]) - (a * a + 9.0 * b * b)).abs() < 1e-15);
        assert!((f.derivative(&[0, 0]) - 2.0 * b).abs() < 1e-15);
        assert!((f.derivative(&[0, 1]) - 2.0 * a).abs() < 1e-15);
        assert!((f.derivative(&[1, 1]) - 18.0 * b).abs() < 1e-14);
        assert!((f.derivative(&[0, 0, 1]) - 2.0).abs() < 1e-15);
        assert!((f.derivative(&[1, 1, 1]) - 18.0).abs() < 1e-14);
        assert!(f.derivative(&[0, 0, 0]).abs() < 1e-15);
    }

    #[test]
    fn elementary_functions_match_closed_forms() {
        let v = x(3);
        let a = 0.3f64;
        let s = v[0].sin();
        assert!((s.derivative(&[0, 0, 0]) + a.cos()).abs() < 1e-15);
        let e = (2.0 * &v[0]).exp();
        assert!((e.derivative(&[0, 0]) - 4.0 * (2.0 * a).exp()).abs() < 1e-14);
        let l = v[0].ln();
        assert!((l.derivative(&[0, 0, 0]) - 2.0 / (a * a * a)).abs() < 1e-12);
        let r = v[0].sqrt();
        assert!((r.derivative(&[0, 0]) + 0.25 * a.powf(-1.5)).abs() < 1e-13);
        let q = (1.0 / &v[0]) * &v[0];
        assert!((q.value() - 1.0).abs() < 1e-15);
        assert!(q.derivative(&[0, 0, 0]).abs() < 1e-11);
    }

    #[test]
    fn partial_lowers_order() {
        let v = x(3);
        let f = &v[0] * &v[1] * &v[1];
        let fy = f.partial(1);
        assert_eq!(fy.order(), 2);
        assert!((fy.value() - 2.0 * 0.3 * -0.7).abs() < 1e-15);
        assert!((fy.derivative(&[0, 1]) - 2.0).abs() < 1e-15);
    }

    #[test]
    fn mixed_order_arithmetic_truncates() {
        let v3 = x(3);
        let v1 = x(1);
        let s = &v3[0] + &v1[0].truncate(1);
        assert_eq!(s.order(), 1);
    }

    #[test]
    fn negative_powers() {
        let v = x(2);
        let p = v[0].powi(-2);
        assert!((p.value() - 0.3f64.powi(-2)).abs() < 1e-12);
        assert!((p.derivative(&[0]) + 2.0 * 0.3f64.powi(-3)).abs() < 1e-10);
    }
}
