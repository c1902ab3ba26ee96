use hcp_core::losses::{LossKind, RegularityClass};
use hcp_core::ExtendedReal;
use proptest::prelude::*;

fn kinds() -> impl Strategy<Value = LossKind> {
    prop_oneof![
        Just(LossKind::Quadratic),
        (1.05f64..2.0).prop_map(|q| LossKind::power(q).unwrap()),
        (0.2f64..3.0).prop_map(|g| LossKind::logcosh(g).unwrap()),
        prop_oneof![-2.0f64..-0.2, 0.2f64..2.0].prop_map(|g| LossKind::linex(g).unwrap()),
    ]
}

fn symmetric_kinds() -> impl Strategy<Value = LossKind> {
    prop_oneof![
        Just(LossKind::Quadratic),
        (1.05f64..2.0).prop_map(|q| LossKind::power(q).unwrap()),
        (0.2f64..3.0).prop_map(|g| LossKind::logcosh(g).unwrap()),
    ]
}

/// Brute-force `sup_u (uv − ℓ(y, u))`: a coarse grid followed by golden
/// section refinement of the concave objective.
fn numeric_conjugate(loss: LossKind, y: f64, v: f64) -> f64 {
    let f = |u: f64| u * v - loss.value(y, u);
    let (mut best_u, mut best) = (y, f(y));
    let mut u = y - 60.0;
    while u <= y + 60.0 {
        let val = f(u);
        if val > best {
            best = val;
            best_u = u;
        }
        u += 1e-3;
    }
    let (mut a, mut b) = (best_u - 2e-3, best_u + 2e-3);
    let g = (5f64.sqrt() - 1.0) / 2.0;
    for _ in 0..80 {
        let c = b - g * (b - a);
        let d = a + g * (b - a);
        if f(c) > f(d) {
            b = d;
        } else {
            a = c;
        }
    }
    best.max(f(0.5 * (a + b)))
}

/// Dual variables inside the domain of the conjugate, kept where the
/// maximizer is within the brute-force grid.
fn in_domain(loss: LossKind, raw: f64) -> f64 {
    match loss {
        LossKind::Quadratic => 4.0 * raw,
        LossKind::Power { q } => q * raw.signum() * (5.0 * raw.abs()).powf(q - 1.0),
        LossKind::LogCosh { .. } => 0.98 * raw,
        LossKind::Linex { gamma } => {
            // r = 1 − v/γ ∈ (0.1, 2]
            let r = 0.1 + 0.95 * (raw + 1.0);
            gamma * (1.0 - r)
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn symmetric_nonnegative_and_zero_on_diagonal(loss in symmetric_kinds(), a in -20.0f64..20.0, b in -20.0f64..20.0) {
        prop_assert_eq!(loss.value(a, b), loss.value(b, a));
        prop_assert!(loss.value(a, b) >= 0.0);
        prop_assert_eq!(loss.value(a, a), 0.0);
    }

    #[test]
    fn fenchel_young(loss in kinds(), y in -5.0f64..5.0, u in -5.0f64..5.0, raw in -1.0f64..1.0) {
        let v = in_domain(loss, raw);
        let c = loss.conjugate(y, v).finite().unwrap();
        prop_assert!(u * v <= loss.value(y, u) + c + 1e-9);
    }

    #[test]
    fn conjugate_matches_brute_force(loss in kinds(), y in -3.0f64..3.0, raw in -1.0f64..1.0) {
        let v = in_domain(loss, raw);
        let closed = loss.conjugate(y, v).finite().unwrap();
        let numeric = numeric_conjugate(loss, y, v);
        prop_assert!((closed - numeric).abs() <= 1e-4 * (1.0 + closed.abs()), "{loss:?} y={y} v={v}: {closed} vs {numeric}");
    }

    #[test]
    fn smooth_upper_bound(loss in kinds(), y in -4.0f64..4.0, u in -4.0f64..4.0, t in -3.0f64..3.0) {
        let base = loss.value(y, u) + loss.grad(y, u) * t;
        let bound = match loss.regularity().class {
            RegularityClass::Smooth { nu } => base + 0.5 * nu * t * t,
            RegularityClass::UniformlySmooth(m) => base + m.value(t),
            RegularityClass::LocallySmooth { gamma } => {
                let delta = (y - u).abs() + t.abs();
                base + 0.5 * hcp_core::losses::linex_curvature(gamma, delta) * t * t
            }
            _ => unreachable!(),
        };
        let lhs = loss.value(y, u + t);
        prop_assert!(lhs <= bound + 1e-9 * (1.0 + lhs.abs()), "{loss:?}: {lhs} > {bound}");
    }

    #[test]
    fn quadratic_strong_convexity(y in -10.0f64..10.0, u in -10.0f64..10.0, t in -5.0f64..5.0) {
        let loss = LossKind::Quadratic;
        let mu = loss.regularity().strong_convexity.unwrap();
        prop_assert!(loss.value(y, u + t) >= loss.value(y, u) + loss.grad(y, u) * t + 0.5 * mu * t * t - 1e-9);
    }

    #[test]
    fn gradient_matches_central_differences(loss in kinds(), y in -3.0f64..3.0, u in -3.0f64..3.0) {
        prop_assume!((u - y).abs() > 1e-3);
        let h = 1e-6;
        let fd = (loss.value(y, u + h) - loss.value(y, u - h)) / (2.0 * h);
        let g = loss.grad(y, u);
        prop_assert!((fd - g).abs() <= 1e-5 * (1.0 + g.abs()), "{loss:?}: {fd} vs {g}");
    }

    #[test]
    fn conjugate_vanishes_at_zero(loss in kinds(), y in -100.0f64..100.0) {
        prop_assert_eq!(loss.conjugate(y, 0.0), ExtendedReal::ZERO);
    }
}

#[test]
fn conjugate_domain_boundaries() {
    let lc = LossKind::logcosh(1.0).unwrap();
    let at_edge = lc.conjugate(0.0, 1.0).finite().unwrap();
    assert!((at_edge - 2f64.ln()).abs() < 1e-12);
    assert!((numeric_conjugate(lc, 0.0, 1.0) - at_edge).abs() < 1e-4);
    assert_eq!(lc.conjugate(0.0, 1.0 + 1e-12), ExtendedReal::PosInfinity);
    assert_eq!(lc.conjugate(0.0, -1.5), ExtendedReal::PosInfinity);

    let lx = LossKind::linex(1.0).unwrap();
    // r = 1 − v/γ = 0 is the boundary; the conjugate there equals 1 + yv.
    let edge = lx.conjugate(0.5, 1.0).finite().unwrap();
    assert!((edge - 1.5).abs() < 1e-12);
    assert!((numeric_conjugate(lx, 0.5, 1.0) - edge).abs() < 1e-4);
    assert_eq!(lx.conjugate(0.5, 1.0 + 1e-9), ExtendedReal::PosInfinity);
}
