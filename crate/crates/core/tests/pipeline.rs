use subgen::synthesis::{synthesize, SynthesisConfig};
use subgen::verify::spanning_check;
use subgen::{Exec, GridSpec, Subbundle};

fn planar() -> Subbundle {
    Subbundle::from_json(
        r#"{"n":2,"m":2,"sections":[{"domain":"whole","components":["1","0"]},
           {"domain":"whole","components":["0","flat(x1)"]}]}"#,
    )
    .unwrap()
}

#[test]
fn planar_pipeline_spans() {
    let g = planar();
    let gen = synthesize(&g, &SynthesisConfig::new(vec![[-1.0, 1.0], [-1.0, 1.0]], 101)).unwrap();
    assert!(gen.count() <= 4);
    let grid = GridSpec::new(&[[-1.0, 1.0], [-1.0, 1.0]], 101).unwrap();
    let rep = spanning_check(&gen.sections(), &g, &grid, 1e-8, 1e-8, Exec::default()).unwrap();
    assert!(rep.pass, "{:?}", &rep.failures[..rep.failures.len().min(5)]);
}

fn flat_line() -> Subbundle {
    Subbundle::from_json(r#"{"n":1,"m":1,"sections":[{"domain":"whole","components":["flat(x1)"]}]}"#).unwrap()
}

#[test]
fn countable_weights_meet_the_tail_bounds() {
    use subgen::synthesis::Mode;
    use subgen::verify::tail_bound_check;
    let mut config = SynthesisConfig::new(vec![[-1.0, 1.0]], 201);
    config.mode = Mode::Countable;
    let gen = synthesize(&flat_line(), &config).unwrap();
    let rep = tail_bound_check(&gen, 4001, 3, Exec::default()).unwrap();
    assert!(rep.weight_bounds_hold);
    assert!(rep.tails_hold);
    let grid = GridSpec::new(&[[-1.0, 1.0]], 201).unwrap();
    assert!(spanning_check(&gen.sections(), &flat_line(), &grid, 1e-8, 1e-8, Exec::default()).unwrap().pass);
}

#[test]
fn projection_fields_are_orthogonal_projectors() {
    use subgen::synthesis::ProjectionField;
    use subgen::verify::projection_check;
    for (g, window) in [(flat_line(), vec![[-1.0, 1.0]]), (planar(), vec![[-1.0, 1.0], [-1.0, 1.0]])] {
        let gen = synthesize(&g, &SynthesisConfig::new(window.clone(), if window.len() == 1 { 201 } else { 101 })).unwrap();
        for (i, frame) in gen.frames().enumerate() {
            let field = ProjectionField::new(frame, 1e-3);
            let r = projection_check(&field, &g, 500, 0, i as u64, 1e-8).unwrap();
            assert!(r.idempotency <= 1e-10 && r.symmetry <= 1e-12, "{r:?}");
            assert_eq!(r.rank_mismatches, 0);
            assert!(r.image_residual <= 1e-8 && r.oracle_distance <= 1e-8, "{r:?}");
        }
    }
}

#[test]
fn execution_policy_does_not_change_output() {
    let mut config = SynthesisConfig::new(vec![[-1.0, 1.0]], 201);
    config.exec = Exec::Sequential;
    let seq = synthesize(&flat_line(), &config).unwrap().to_json();
    config.exec = Exec::Parallel;
    assert_eq!(seq, synthesize(&flat_line(), &config).unwrap().to_json());
}

#[test]
fn planar_singular_band_sits_on_the_axis() {
    use subgen::synthesis::stratify;
    use subgen::verify::regular_points;
    let grid = GridSpec::new(&[[-1.0, 1.0], [-1.0, 1.0]], 41).unwrap();
    let strat = stratify(&planar(), &grid, 1e-8, Exec::default()).unwrap();
    let reg = regular_points(&strat);
    assert!(!reg.singular.is_empty());
    for &i in &reg.singular {
        assert!(grid.point(i)[0].abs() <= grid.step(0) + 1e-12);
    }
    assert!(reg.singular.len() <= 2 * 41);
}

#[test]
fn cosmooth_generators_cut_out_the_annihilator() {
    use subgen::synthesis::cut_out_cosmooth;
    use subgen::verify::kernel_check;
    use subgen::DualFamily;
    let f = DualFamily::from_json(
        r#"{"n":1,"m":2,"sections":[{"domain":"whole","components":["1","1"]},
           {"domain":"whole","components":["0","flat(x1)"]}]}"#,
    )
    .unwrap();
    let config = SynthesisConfig::new(vec![[-1.0, 1.0]], 101);
    let covectors = cut_out_cosmooth(&f, &config).unwrap();
    let grid = GridSpec::new(&[[-1.0, 1.0]], 101).unwrap();
    let rep = kernel_check(&covectors.sections(), &f, &grid, 1e-8, Exec::default()).unwrap();
    assert!(rep.pass && rep.worst_residual <= 1e-8, "{rep:?}");
}
