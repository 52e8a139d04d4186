//! Parsed expressions against finite differences and the grammar contract.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sfoliate::chart_core::{Chart, Point};
use sfoliate::expr::{parse, parse_field, ParseError, MAX_DEPTH};
use sfoliate::GeometryError;

fn chart() -> Chart {
    Chart::new(
        vec![(-2.0, 2.0); 3],
        vec![false; 3],
        vec!["x1".into(), "y1".into(), "z1".into()],
    )
    .unwrap()
}

/// Nested fourth-order central differences for the partial along `vars`.
fn fd(f: &dyn Fn(&[f64]) -> f64, x: &[f64], vars: &[usize], h: f64) -> f64 {
    match vars.split_first() {
        None => f(x),
        Some((&a, rest)) => {
            let at = |k: f64| {
                let mut y = x.to_vec();
                y[a] += k * h;
                fd(f, &y, rest, h)
            };
            (at(-2.0) - 8.0 * at(-1.0) + 8.0 * at(1.0) - at(2.0)) / (12.0 * h)
        }
    }
}

#[test]
fn jets_match_finite_differences() {
    let c = chart();
    let field = parse_field("sin(x1)*y1", &c).unwrap();
    let value = |x: &[f64]| field.eval(&Point::new(x.to_vec())).unwrap()[0];
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut multi = Vec::new();
    for a in 0..3 {
        multi.push(vec![a]);
        for b in a..3 {
            multi.push(vec![a, b]);
            for d in b..3 {
                multi.push(vec![a, b, d]);
            }
        }
    }
    for _ in 0..50 {
        let x: Vec<f64> = (0..3).map(|_| rng.gen_range(-1.5..1.5)).collect();
        let jet = field.jet(&Point::new(x.clone()), 3).unwrap().remove(0);
        assert_eq!(jet.value(), value(&x));
        for vars in &multi {
            let err = (jet.derivative(vars) - fd(&value, &x, vars, 1e-2)).abs();
            assert!(err < 1e-7, "∂{vars:?} at {x:?}: error {err:e}");
        }
    }
}

#[test]
fn grammar_examples() {
    let names: Vec<String> = chart().names().to_vec();
    assert!(parse("0.1*sin(x1)", &names).is_ok());
    assert_eq!(
        parse("sin(q)", &names),
        Err(ParseError::UnknownIdentifier {
            name: "q".into(),
            offset: 4
        })
    );
    let err = parse("1+*2", &names).unwrap_err();
    assert!(
        matches!(err, ParseError::Syntax { offset: 2, .. }),
        "{err:?}"
    );
    let deep = format!(
        "{}x1{}",
        "(".repeat(MAX_DEPTH + 1),
        ")".repeat(MAX_DEPTH + 1)
    );
    assert!(matches!(
        parse(&deep, &names),
        Err(ParseError::DepthOverflow { .. })
    ));
}

#[test]
fn integer_power_jets_are_exact() {
    let c = chart();
    let f = parse_field("x1^2", &c).unwrap();
    let jet = f
        .jet(&Point::new(vec![3.0, 0.0, 0.0]), 3)
        .unwrap()
        .remove(0);
    assert_eq!(jet.value(), 9.0);
    assert_eq!(jet.derivative(&[0]), 6.0);
    assert_eq!(jet.derivative(&[0, 0]), 2.0);
    assert_eq!(jet.derivative(&[0, 0, 0]), 0.0);
}

#[test]
fn domain_violation_echoes_point() {
    let c = chart();
    let f = parse_field("log(x1)", &c).unwrap();
    match f.eval(&Point::new(vec![-1.0, 0.5, 0.0])) {
        Err(GeometryError::Domain { point, .. }) => assert_eq!(point[0], -1.0),
        other => panic!("expected domain error, got {other:?}"),
    }
}
