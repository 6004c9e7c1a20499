use proptest::prelude::*;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use vofrac::{
    gfd_left, gfd_right, gfd_symmetric, rl_left, rl_right, DimensionField, FunctionSpec, OperatorSpec,
    QuadratureConfig, Trust,
};

/// Expression source and its closed form.
type Case = (&'static str, fn(f64) -> f64);

fn cfg(n: usize) -> QuadratureConfig<f64> {
    QuadratureConfig::with_points(n)
}

/// Grunwald-Letnikov sum with `m` steps over `[a, t]`.
fn grunwald_letnikov(f: impl Fn(f64) -> f64, d: f64, a: f64, t: f64, m: usize) -> f64 {
    let h = (t - a) / m as f64;
    let mut w = 1.0;
    let mut acc = f(t);
    for k in 1..=m {
        w *= 1.0 - (d + 1.0) / k as f64;
        acc += w * f(t - k as f64 * h);
    }
    acc / h.powf(d)
}

#[test]
fn grunwald_letnikov_cross_validation() {
    let funcs: [Case; 2] = [("t", |t| t), ("t^2", |t| t * t)];
    for d in [0.3, 0.5, 0.7] {
        for (src, f) in funcs {
            let spec = FunctionSpec::parse(src).unwrap();
            for t in [0.5, 1.0, 2.0] {
                let ours = rl_left(&spec, d, 0.0, t, &cfg(8193)).unwrap().value;
                let gl = grunwald_letnikov(f, d, 0.0, t, 8192);
                assert!(((ours - gl) / gl).abs() <= 5e-3, "d={d} f={src} t={t}: {ours} vs {gl}");
            }
        }
    }
}

#[test]
fn grunwald_letnikov_oracle_sanity() {
    // the oracle itself against the power rule: D^0.5 t = 2 sqrt(t / pi)
    let gl = grunwald_letnikov(|t| t, 0.5, 0.0, 1.0, 8192);
    assert!((gl - 2.0 / std::f64::consts::PI.sqrt()).abs() < 1e-3);
}

fn band_order(rng: &mut StdRng, band: usize) -> f64 {
    match band {
        0 => rng.gen_range(-1.8..-0.05),
        1 => rng.gen_range(0.02..0.95),
        _ => rng.gen_range(1.02..1.95),
    }
}

#[test]
fn constant_order_reduction() {
    let f = FunctionSpec::parse("exp(0.3*t) + t^2").unwrap();
    let mut rng = StdRng::seed_from_u64(0x5eed);
    let (a, b) = (0.0, 2.0);
    for band in 0..3 {
        for _ in 0..50 {
            let d = band_order(&mut rng, band);
            // `+ 0*t` keeps the field on the variable-order path
            let field = DimensionField::parse(&format!("{d} + 0*t"), (a, b), 1025).unwrap();
            let t = rng.gen_range(0.3..1.7);
            let left = OperatorSpec::left(a, b, field.clone(), cfg(1025)).unwrap();
            let g = gfd_left(&f, &left, t).unwrap().value;
            let r = rl_left(&f, d, a, t, &cfg(1025)).unwrap().value;
            assert!((g - r).abs() <= 1e-8 * r.abs(), "left d={d} t={t}: {g} vs {r}");

            let right = OperatorSpec::right(a, b, field, cfg(1025)).unwrap();
            let g = gfd_right(&f, &right, t).unwrap().value;
            let r = rl_right(&f, d, b, t, &cfg(1025)).unwrap().value;
            assert!((g - r).abs() <= 1e-8 * r.abs(), "right d={d} t={t}: {g} vs {r}");
        }
    }
}

#[test]
fn integer_reduction() {
    let cases: [Case; 3] = [("t^2", |t| 2.0 * t), ("sin(t)", f64::cos), ("exp(t)", f64::exp)];
    let spec = OperatorSpec::left(0.0, 3.0, DimensionField::constant(1.0).unwrap(), cfg(4097)).unwrap();
    for (src, df) in cases {
        let f = FunctionSpec::parse(src).unwrap();
        for t in [0.5, 1.0, 1.7, 2.5] {
            let r = gfd_left(&f, &spec, t).unwrap();
            assert_eq!(r.trust, Trust::Interior);
            assert!(((r.value - df(t)) / df(t)).abs() <= 1e-3, "{src} at {t}");
        }
    }
}

#[test]
fn mirror_identity() {
    let f = FunctionSpec::parse("cos(t - 1) + (t - 1)^2").unwrap();
    for src in ["0.5 + 0.2*cos(t - 1)", "1.5 + 0.2*(t - 1)^2", "-0.5 + 0.1*(t - 1)^2"] {
        let field = DimensionField::parse(src, (0.0, 2.0), 2049).unwrap();
        let left = OperatorSpec::left(0.0, 2.0, field.clone(), cfg(2049)).unwrap();
        let right = OperatorSpec::right(0.0, 2.0, field, cfg(2049)).unwrap();
        for t in [0.4, 0.9, 1.3] {
            let r = gfd_right(&f, &right, t).unwrap().value;
            let l = gfd_left(&f, &left, 2.0 - t).unwrap().value;
            assert!((r - l).abs() <= 1e-8 * l.abs().max(1e-300), "{src} at {t}: {r} vs {l}");
        }
    }
}

#[test]
fn symmetric_is_mean_bit_for_bit() {
    let f = FunctionSpec::parse("exp(-t) + t^3").unwrap();
    let field = DimensionField::parse("0.4 + 0.3*t", (0.0, 1.5), 1025).unwrap();
    let sym = OperatorSpec::symmetric(0.0, 1.5, field.clone(), cfg(1025)).unwrap();
    let left = OperatorSpec::left(0.0, 1.5, field.clone(), cfg(1025)).unwrap();
    let right = OperatorSpec::right(0.0, 1.5, field, cfg(1025)).unwrap();
    for t in [0.2, 0.75, 1.3] {
        let l = gfd_left(&f, &left, t).unwrap().value;
        let r = gfd_right(&f, &right, t).unwrap().value;
        assert_eq!(gfd_symmetric(&f, &sym, t).unwrap().value, 0.5 * (l + r));
    }
}

type Op = fn(&FunctionSpec<f64>, f64) -> f64;

fn operators() -> Vec<(&'static str, Op)> {
    fn field() -> DimensionField<f64> {
        DimensionField::parse("0.6 + 0.2*sin(t)", (0.0, 2.0), 513).unwrap()
    }
    vec![
        ("rl_left", |f, t| rl_left(f, 0.35, 0.0, t, &cfg(513)).unwrap().value),
        ("rl_right", |f, t| rl_right(f, 1.4, 2.0, t, &cfg(513)).unwrap().value),
        ("gfd_left", |f, t| gfd_left(f, &OperatorSpec::left(0.0, 2.0, field(), cfg(513)).unwrap(), t).unwrap().value),
        ("gfd_right", |f, t| gfd_right(f, &OperatorSpec::right(0.0, 2.0, field(), cfg(513)).unwrap(), t).unwrap().value),
        ("gfd_symmetric", |f, t| {
            gfd_symmetric(f, &OperatorSpec::symmetric(0.0, 2.0, field(), cfg(513)).unwrap(), t).unwrap().value
        }),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn operators_are_linear(
        alpha in -3.0f64..3.0, beta in -3.0f64..3.0, w in 0.2f64..3.0, t in 0.4f64..1.6,
    ) {
        let f_src = format!("sin({w}*t) + 1");
        let g_src = "t^2*exp(-t)";
        let f = FunctionSpec::parse(&f_src).unwrap();
        let g = FunctionSpec::parse(g_src).unwrap();
        let combo = FunctionSpec::parse(&format!("{alpha}*({f_src}) + {beta}*({g_src})")).unwrap();
        for (name, op) in operators() {
            let (of, og, oc) = (op(&f, t), op(&g, t), op(&combo, t));
            let scale = (alpha * of).abs() + (beta * og).abs();
            prop_assert!(
                (oc - (alpha * of + beta * og)).abs() <= 1e-9 * scale.max(1e-12),
                "{}: {} vs {}", name, oc, alpha * of + beta * og
            );
        }
    }
}
