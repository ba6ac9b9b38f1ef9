use proptest::prelude::*;

use subgen::counterexample::{blowup_certificate, flat_limit_check, IdealElement};
use subgen::expr::{flat_eval, parse, SmoothExpr};
use subgen::{DualFamily, Point, Subbundle};

fn expr_strategy(n: usize) -> impl Strategy<Value = SmoothExpr> {
    let leaf = prop_oneof![
        (-200i32..200).prop_map(|c| SmoothExpr::constant(f64::from(c) / 100.0)),
        (0..n).prop_map(SmoothExpr::var),
    ];
    leaf.prop_recursive(3, 24, 2, |inner| {
        prop_oneof![
            (inner.clone(), inner.clone()).prop_map(|(a, b)| SmoothExpr::add(a, b)),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| SmoothExpr::sub(a, b)),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| SmoothExpr::mul(a, b)),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| SmoothExpr::div(a, SmoothExpr::exp(b))),
            (inner.clone(), 0u32..4).prop_map(|(a, k)| SmoothExpr::powi(a, k)),
            inner.clone().prop_map(SmoothExpr::sin),
            inner.clone().prop_map(SmoothExpr::cos),
            inner.clone().prop_map(SmoothExpr::flat),
            (inner.clone(), 0u32..3).prop_map(|(a, j)| SmoothExpr::flat_derivative(j, a)),
        ]
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn print_parse_is_identity(e in expr_strategy(3)) {
        let once = parse(&e.to_string(), 3).unwrap();
        let twice = parse(&once.to_string(), 3).unwrap();
        prop_assert_eq!(&once, &twice);
        prop_assert_eq!(&once, &e);
    }

    #[test]
    fn derivatives_match_central_differences(
        e in expr_strategy(2),
        points in prop::collection::vec(prop::collection::vec(-1.0f64..1.0, 2), 100),
    ) {
        let h = 1e-5;
        for i in 0..2 {
            let d = e.differentiate(i);
            for p in &points {
                let exact = d.eval_at(p).unwrap();
                let mut up = p.clone();
                up[i] += h;
                let mut down = p.clone();
                down[i] -= h;
                let fd = (e.eval_at(&up).unwrap() - e.eval_at(&down).unwrap()) / (2.0 * h);
                // skip points where the third derivative makes the step too coarse
                let d3 = d.differentiate(i).differentiate(i).eval_at(p).unwrap();
                prop_assume!(d3.abs() * h * h < 1e-7 * exact.abs().max(1.0));
                prop_assert!((fd - exact).abs() <= 1e-5 * exact.abs().max(1.0),
                    "{} at {:?}: fd {} exact {}", e, p, fd, exact);
            }
        }
    }

    #[test]
    fn oracle_projections_are_orthogonal(
        x in prop::collection::vec(-1.0f64..1.0, 2),
    ) {
        let g = Subbundle::from_json(
            r#"{"n":2,"m":3,"sections":[{"domain":"whole","components":["1","x1","0"]},
               {"domain":"whole","components":["0","flat(x1)","x2"]},
               {"domain":{"center":["0","0"],"radius":"1/2"},"components":["x2","0","1"]}]}"#,
        ).unwrap();
        let q = g.oracle_projection(&Point::new(x).unwrap(), 1e-8).unwrap();
        prop_assert!((&q * &q - &q).norm() <= 1e-10);
        prop_assert!((q.transpose() - &q).norm() <= 1e-12);
    }

    #[test]
    fn sections_through_reproduce_their_targets(x in -1.0f64..1.0, v in prop::collection::vec(-3.0f64..3.0, 2)) {
        let g = Subbundle::from_json(
            r#"{"n":1,"m":2,"sections":[{"domain":"whole","components":["1","x1"]},
               {"domain":"whole","components":["2","2*x1"]},{"domain":"whole","components":["0","flat(x1)"]}]}"#,
        ).unwrap();
        let p = Point::new(vec![x]).unwrap();
        if let Ok(w) = g.section_through(&p, &v, 1e-8) {
            let mut back = [0.0; 2];
            for (&i, c) in w.members.iter().zip(&w.coefficients) {
                for (r, val) in g.family()[i].eval(&[x]).unwrap().iter().enumerate() {
                    back[r] += c * val;
                }
            }
            for r in 0..2 {
                prop_assert!((back[r] - v[r]).abs() <= 1e-8 * 3f64.max(v[r].abs()));
            }
        } else {
            prop_assert!(x <= 0.0);
        }
    }

    #[test]
    fn duality_holds_for_mixed_covectors(x in prop::collection::vec(-1.0f64..1.0, 2)) {
        let f = DualFamily::from_json(
            r#"{"n":2,"m":3,"sections":[{"domain":"whole","components":["1","0-1","0"]},
               {"domain":"whole","components":["flat(x1)","0","x2"]}]}"#,
        ).unwrap();
        let r = f.duality_check(&Point::new(x).unwrap(), 1e-8).unwrap();
        prop_assert!(r.pass, "{:?}", r);
    }
}

#[test]
fn flat_derivatives_match_finite_differences_of_lower_orders() {
    let mut xs = Vec::new();
    for k in 0..=3 {
        let x = 10f64.powi(-k);
        xs.push(x);
        xs.push(-x);
    }
    for j in 1..=4 {
        for &x in &xs {
            let h = 1e-6 * x.abs();
            let fd = (flat_eval(x + h, j - 1).unwrap() - flat_eval(x - h, j - 1).unwrap()) / (2.0 * h);
            let exact = flat_eval(x, j).unwrap();
            assert!((fd - exact).abs() <= 1e-5 * exact.abs().max(1.0), "j={j} x={x}: {fd} vs {exact}");
        }
    }
}

#[test]
fn flat_beats_every_power() {
    let xs: Vec<f64> = (4..=20).map(|k| 2f64.powi(-k)).collect();
    let table = flat_limit_check(8, &xs);
    for (n, row) in table.ratios.iter().enumerate() {
        assert!(row.windows(2).all(|w| w[1] <= w[0]), "n={n}");
        assert!(row.last().unwrap() < &1e-6);
    }
}

#[test]
fn appending_squares_never_raises_the_bound() {
    let xs: Vec<f64> = vec![0.1, 0.05, 0.025, 0.0125];
    let base = ["flat(x1)", "flat(x1)*(2+x1)"];
    let elems: Vec<IdealElement> = base
        .iter()
        .map(|t| IdealElement::new(parse(t, 1).unwrap(), 1.0).unwrap())
        .collect();
    let before = blowup_certificate(&elems, 1.0, &xs, 1000).unwrap();
    let mut more = elems.clone();
    more.push(IdealElement::new(SmoothExpr::powi(elems[1].expr().clone(), 2), 1.0).unwrap());
    let after = blowup_certificate(&more, 1.0, &xs, 1000).unwrap();
    for (a, b) in after.log_bounds.iter().zip(&before.log_bounds) {
        assert!(a <= b);
    }
}

#[test]
fn single_flat_bound_is_increasing_and_exact() {
    let xs: Vec<f64> = (0..=20).map(|k| 0.1 * 10f64.powf(-f64::from(k) / 10.0)).collect();
    let elems = vec![IdealElement::new(parse("flat(x1)", 1).unwrap(), 1.0).unwrap()];
    let cert = blowup_certificate(&elems, 1.0, &xs, 1000).unwrap();
    assert!(cert.log_bounds.windows(2).all(|w| w[1] > w[0]));
    for (x, l) in xs.iter().zip(&cert.log_bounds) {
        let closed = 1.0 / (2.0 * x);
        assert!((l - closed).abs() <= 1e-10 * closed);
        if let Some(b) = cert.bound_values[xs.iter().position(|v| v == x).unwrap()] {
            assert!((b - closed.exp()).abs() <= 1e-10 * closed.exp() * closed.max(1.0));
        }
    }
}
