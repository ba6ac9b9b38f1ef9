use crate::ball::{rational_to_f64, Ball};
use crate::expr::SmoothExpr;

/// Smooth cutoff equal to 1 on a ball and vanishing outside its double.
#[derive(Debug, Clone, PartialEq)]
pub struct BumpSpec {
    pub ball: Ball,
    pub expr: SmoothExpr,
}

/// `w(t) = ψ(4−t) / (ψ(4−t) + ψ(t−1))` with `t = ‖q−c‖²/r²`.
pub fn bump(ball: &Ball) -> BumpSpec {
    let inv_r = rational_to_f64(&ball.radius().recip());
    let squares = ball.center().iter().enumerate().map(|(j, c)| {
        let shifted = SmoothExpr::sub(SmoothExpr::var(j), SmoothExpr::constant(rational_to_f64(c)));
        SmoothExpr::powi(shifted, 2)
    });
    let t = SmoothExpr::mul(SmoothExpr::constant(inv_r * inv_r), SmoothExpr::sum(squares));
    let inner = SmoothExpr::flat(SmoothExpr::sub(SmoothExpr::constant(4.0), t.clone()));
    let outer = SmoothExpr::flat(SmoothExpr::sub(t, SmoothExpr::one()));
    BumpSpec {
        ball: ball.clone(),
        expr: SmoothExpr::div(inner.clone(), SmoothExpr::add(inner, outer)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ball::Rational;

    fn unit() -> BumpSpec {
        bump(&Ball::new(vec![Rational::from_integer(0)], Rational::from_integer(1)).unwrap())
    }

    #[test]
    fn reference_values() {
        let b = unit();
        assert_eq!(b.expr.eval_at(&[0.0]).unwrap(), 1.0);
        assert_eq!(b.expr.eval_at(&[0.999]).unwrap(), 1.0);
        assert_eq!(b.expr.eval_at(&[2.0]).unwrap(), 0.0);
        assert_eq!(b.expr.eval_at(&[-7.0]).unwrap(), 0.0);
        let inner = (-1.0f64 / 1.75).exp();
        let oracle = inner / (inner + (-1.0f64 / 1.25).exp());
        let v = b.expr.eval_at(&[1.5]).unwrap();
        assert!((v - oracle).abs() < 1e-15);
        assert!((v - 0.556_895_4).abs() < 1e-6);
    }

    #[test]
    fn off_center_ball() {
        let ball = Ball::new(vec![Rational::new(1, 2), Rational::new(-1, 4)], Rational::new(1, 8)).unwrap();
        let b = bump(&ball);
        assert_eq!(b.expr.eval_at(&[0.5, -0.25]).unwrap(), 1.0);
        assert_eq!(b.expr.eval_at(&[0.75, -0.25]).unwrap(), 0.0);
        let v = b.expr.eval_at(&[0.65, -0.25]).unwrap();
        assert!(v > 0.0 && v < 1.0);
    }
}
