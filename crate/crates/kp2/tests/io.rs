use kp2::io::{format_tau_spec, parse_meta, parse_tau_spec, read_field, write_field};
use kp2_core::grid::make_grid;
use kp2_core::tau::TauSpec;
use kp2_core::{Field2D, Meta};
use proptest::prelude::*;

#[test]
fn field_roundtrip_keeps_meta() {
    let dir = tempfile::tempdir().unwrap();
    let g = make_grid(16, 16, 4.0, 2.0, -2.0, -1.0).unwrap();
    let shift: Vec<f64> = (0..16).map(|i| 0.1 * i as f64).collect();
    let f = Field2D::from_fn(g, |x, y| (x - y).tanh()).with_meta(Meta::Kink { lambda: 1.0, shift: Some(shift) });
    let p = dir.path().join("k.kpf");
    write_field(&p, &f, &[("note".into(), "x".into())]).unwrap();
    let back = read_field(&p).unwrap();
    assert_eq!(back, f);
    for m in [Meta::None, Meta::Constant(0.7), Meta::Kink { lambda: 1.0, shift: None }, Meta::Multikink] {
        let f = Field2D::zeros(g).with_meta(m.clone());
        write_field(&p, &f, &[]).unwrap();
        assert_eq!(read_field(&p).unwrap().meta, m);
    }
}

#[test]
fn truncated_field_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let g = make_grid(16, 16, 4.0, 2.0, -2.0, -1.0).unwrap();
    let p = dir.path().join("t.kpf");
    write_field(&p, &Field2D::zeros(g), &[]).unwrap();
    std::fs::write(&p, [0u8; 24]).unwrap();
    assert!(read_field(&p).is_err());
    assert!(parse_meta("kink(1, curve)", None).is_err());
    assert!(parse_meta("spiral", None).is_err());
}

#[test]
fn tau_spec_text() {
    let s = parse_tau_spec("# three lines\nM=3\nN=1\nlambdas=-1, 0, 1\nA=\n1 1 1\n").unwrap();
    assert_eq!(s.theta0, vec![0.0; 3]);
    assert!(parse_tau_spec("M=3\nN=1\nlambdas=-1 0 1\nA=\n1 1\n").is_err());
    assert!(parse_tau_spec("M=2\nN=1\nA=\n1 1\n").is_err());
    assert!(parse_tau_spec("M=2\nN=1\nlambdas=-1 1\nphase=3\nA=\n1 1\n").is_err());
}

proptest! {
    #[test]
    fn tau_spec_roundtrip(
        steps in proptest::collection::vec(0.05f64..2.0, 2..5),
        seed in proptest::collection::vec(0.0f64..2.0, 10),
    ) {
        let m = steps.len();
        let lams: Vec<f64> = steps.iter().scan(-3.0, |acc, d| { *acc += d; Some(*acc) }).collect();
        let spec = TauSpec {
            m,
            n: 1,
            a: vec![seed[..m].to_vec()],
            lambdas: lams.clone(),
            theta0: seed[5..5 + m].to_vec(),
        };
        let back = parse_tau_spec(&format_tau_spec(&spec)).unwrap();
        prop_assert_eq!(back, spec);
    }

    #[test]
    fn field_values_roundtrip(vals in proptest::collection::vec(-1e3f64..1e3, 256)) {
        let dir = tempfile::tempdir().unwrap();
        let g = make_grid(16, 16, 1.0, 1.0, 0.0, 0.0).unwrap();
        let f = Field2D::new(g, vals, Meta::None).unwrap();
        let p = dir.path().join("v.kpf");
        write_field(&p, &f, &[]).unwrap();
        prop_assert_eq!(read_field(&p).unwrap().values, f.values);
    }
}
