use super::ast::{Node, SmoothExpr};

impl SmoothExpr {
    /// Symbolic `∂/∂x_i` (zero-based `i`); `∂ flatd(j,u) = flatd(j+1,u)·∂u`.
    ///
    /// Only constant folding and `0`/`1` identities are applied, so the
    /// result can be much larger than the input.
    pub fn differentiate(&self, i: usize) -> SmoothExpr {
        use SmoothExpr as E;
        match self.node() {
            Node::Const(_) => E::zero(),
            Node::Var(j) => {
                if *j == i {
                    E::one()
                } else {
                    E::zero()
                }
            }
            Node::Add(a, b) => E::add(a.differentiate(i), b.differentiate(i)),
            Node::Sub(a, b) => E::sub(a.differentiate(i), b.differentiate(i)),
            Node::Mul(a, b) => E::add(
                E::mul(a.differentiate(i), b.clone()),
                E::mul(a.clone(), b.differentiate(i)),
            ),
            Node::Div(a, b) => {
                let db = b.differentiate(i);
                let first = E::div(a.differentiate(i), b.clone());
                if db.is_zero() {
                    first
                } else {
                    E::sub(first, E::div(E::mul(a.clone(), db), E::powi(b.clone(), 2)))
                }
            }
            Node::Pow(a, k) => E::mul(
                E::mul(E::constant(f64::from(*k)), E::powi(a.clone(), k - 1)),
                a.differentiate(i),
            ),
            Node::Exp(a) => E::mul(self.clone(), a.differentiate(i)),
            Node::Sin(a) => E::mul(E::cos(a.clone()), a.differentiate(i)),
            Node::Cos(a) => E::neg(E::mul(E::sin(a.clone()), a.differentiate(i))),
            Node::Flat { order, arg } => E::mul(
                E::flat_derivative(order + 1, arg.clone()),
                arg.differentiate(i),
            ),
            Node::Proj(entry) => {
                let n = entry.support.dim().max(i + 1);
                let mut counts = vec![0u32; n];
                counts[i] = 1;
                E::partial(counts, self.clone())
            }
            Node::Partial { counts, inner } => {
                let mut counts = counts.clone();
                if counts.len() <= i {
                    counts.resize(i + 1, 0);
                }
                counts[i] += 1;
                E::partial(counts, inner.clone())
            }
        }
    }
}
