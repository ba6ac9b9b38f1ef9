//! Truncated multivariate Taylor series ("jets").
//!
//! A jet of order `k` in `n` variables stores the scaled Taylor
//! coefficients `∂^α f / α!` for every multi-index `|α| ≤ k`, so one
//! evaluation of an expression over jets yields all partial derivatives up
//! to order `k` at the base point.

use std::collections::HashMap;
use std::sync::Arc;

use super::scalar::Scalar;

/// Monomial layout shared by all jets of one `(n, k)`.
#[derive(Debug)]
pub struct JetSpace {
    n: usize,
    order: usize,
    monomials: Vec<Vec<u32>>,
    index: HashMap<Vec<u32>, usize>,
    /// `(a, b, c)`: monomial a times monomial b is monomial c.
    products: Vec<(usize, usize, usize)>,
}

impl JetSpace {
    pub fn new(n: usize, order: usize) -> Arc<Self> {
        let mut monomials = Vec::new();
        for degree in 0..=order {
            let mut current = vec![0u32; n];
            enumerate_degree(n, degree as u32, 0, &mut current, &mut monomials);
        }
        let index: HashMap<Vec<u32>, usize> =
            monomials.iter().cloned().enumerate().map(|(i, m)| (m, i)).collect();
        let mut products = Vec::new();
        for (a, ma) in monomials.iter().enumerate() {
            for (b, mb) in monomials.iter().enumerate() {
                let sum: Vec<u32> = ma.iter().zip(mb).map(|(x, y)| x + y).collect();
                if let Some(&c) = index.get(&sum) {
                    products.push((a, b, c));
                }
            }
        }
        Arc::new(Self {
            n,
            order,
            monomials,
            index,
            products,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn monomials(&self) -> &[Vec<u32>] {
        &self.monomials
    }

    pub fn index_of(&self, multi: &[u32]) -> Option<usize> {
        self.index.get(multi).copied()
    }

    pub fn len(&self) -> usize {
        self.monomials.len()
    }

    pub fn is_empty(&self) -> bool {
        self.monomials.is_empty()
    }
}

fn enumerate_degree(n: usize, remaining: u32, pos: usize, cur: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
    if pos + 1 == n {
        cur[pos] = remaining;
        out.push(cur.clone());
        return;
    }
    for k in (0..=remaining).rev() {
        cur[pos] = k;
        enumerate_degree(n, remaining - k, pos + 1, cur, out);
    }
    cur[pos] = 0;
}

#[derive(Debug, Clone)]
pub struct Jet {
    space: Arc<JetSpace>,
    coeffs: Vec<f64>,
}

impl Jet {
    pub fn constant(space: &Arc<JetSpace>, c: f64) -> Self {
        let mut coeffs = vec![0.0; space.len()];
        coeffs[0] = c;
        Self {
            space: Arc::clone(space),
            coeffs,
        }
    }

    /// The coordinate function `x_i` expanded at `value`.
    pub fn variable(space: &Arc<JetSpace>, i: usize, value: f64) -> Self {
        let mut jet = Self::constant(space, value);
        if space.order >= 1 {
            let mut unit = vec![0u32; space.n];
            unit[i] = 1;
            let idx = space.index_of(&unit).expect("unit monomial present");
            jet.coeffs[idx] = 1.0;
        }
        jet
    }

    /// Coordinate jets for every variable at `point`.
    pub fn seed(space: &Arc<JetSpace>, point: &[f64]) -> Vec<Jet> {
        point
            .iter()
            .enumerate()
            .map(|(i, &v)| Jet::variable(space, i, v))
            .collect()
    }

    pub fn space(&self) -> &Arc<JetSpace> {
        &self.space
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    /// `∂^α f` at the base point.
    pub fn derivative(&self, multi: &[u32]) -> Option<f64> {
        let idx = self.space.index_of(multi)?;
        let factorial: f64 = multi
            .iter()
            .map(|&a| (1..=a).map(f64::from).product::<f64>())
            .product();
        Some(self.coeffs[idx] * factorial)
    }

    fn zip(&self, other: &Self, f: impl Fn(f64, f64) -> f64) -> Self {
        Self {
            space: Arc::clone(&self.space),
            coeffs: self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| f(*a, *b)).collect(),
        }
    }
}

impl Scalar for Jet {
    fn value(&self) -> f64 {
        self.coeffs[0]
    }

    fn constant_like(&self, c: f64) -> Self {
        Jet::constant(&self.space, c)
    }

    fn add(&self, other: &Self) -> Self {
        self.zip(other, |a, b| a + b)
    }

    fn sub(&self, other: &Self) -> Self {
        self.zip(other, |a, b| a - b)
    }

    fn mul(&self, other: &Self) -> Self {
        let mut coeffs = vec![0.0; self.coeffs.len()];
        for &(a, b, c) in &self.space.products {
            coeffs[c] += self.coeffs[a] * other.coeffs[b];
        }
        Self {
            space: Arc::clone(&self.space),
            coeffs,
        }
    }

    fn scale(&self, c: f64) -> Self {
        Self {
            space: Arc::clone(&self.space),
            coeffs: self.coeffs.iter().map(|a| a * c).collect(),
        }
    }

    fn compose(&self, taylor: &[f64]) -> Self {
        let k = self.space.order;
        let mut delta = self.clone();
        delta.coeffs[0] = 0.0;
        let mut acc = self.constant_like(taylor[k]);
        for l in (0..k).rev() {
            acc = acc.mul(&delta);
            acc.coeffs[0] += taylor[l];
        }
        acc
    }

    fn order(&self) -> usize {
        self.space.order
    }

    fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|&c| c == 0.0)
    }
}
