use finsler_core::curvature::{cartan_tensor, fundamental_tensor};
use finsler_core::functionals::{legendre, legendre_inverse};
use finsler_core::metric::ChartDomain;
use finsler_core::weighted::{ric_inf_lower_with, ric_search_default, ric_search_sweep};
use finsler_core::{MeasureSpec, MetricSpec};
use proptest::prelude::*;

fn metric(n: usize, family: usize) -> MetricSpec {
    match family {
        0 => MetricSpec::euclidean(n),
        1 => MetricSpec::poincare_ball(n, -1.0),
        2 => MetricSpec::stereographic_sphere(n, 1.0),
        3 => MetricSpec::minkowski_quartic(n, 0.2),
        4 => {
            let mut b = vec![0.0; n];
            b[0] = 0.3;
            b[n - 1] += 0.1;
            MetricSpec::randers(n, b)
        }
        _ => MetricSpec::funk(n),
    }
    .unwrap()
}

/// A metric with a point inside 0.7 of its chart and a vector of norm at least 0.2.
fn sample() -> impl Strategy<Value = (MetricSpec, Vec<f64>, Vec<f64>)> {
    (2usize..=3, 0usize..6)
        .prop_flat_map(|(n, fam)| {
            (
                Just(n),
                Just(fam),
                prop::collection::vec(-1.0f64..1.0, n),
                prop::collection::vec(-1.0f64..1.0, n),
            )
        })
        .prop_filter_map("x inside the unit ball, y not small", |(n, fam, x, y)| {
            let nx = x.iter().map(|v| v * v).sum::<f64>().sqrt();
            let ny = y.iter().map(|v| v * v).sum::<f64>().sqrt();
            if nx >= 1.0 || ny < 0.2 {
                return None;
            }
            let m = metric(n, fam);
            let rho = match m.chart {
                ChartDomain::Whole => 1.0,
                ChartDomain::Ball { radius } => 0.7 * radius,
            };
            let x = x.iter().map(|v| v * rho).collect();
            Some((m, x, y))
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn positive_homogeneity((m, x, y) in sample(), lambda in 0.01f64..50.0) {
        let f = m.f(&x, &y).unwrap();
        let ly: Vec<f64> = y.iter().map(|v| lambda * v).collect();
        prop_assert!((m.f(&x, &ly).unwrap() - lambda * f).abs() <= 1e-12 * lambda * f);
    }

    #[test]
    fn euler_relation((m, x, y) in sample()) {
        let f = m.f(&x, &y).unwrap();
        let g = fundamental_tensor(&m, &x, &y).unwrap().g;
        let v = nalgebra::DVector::from_vec(y.clone());
        let gyy = (v.transpose() * &g * &v)[(0, 0)];
        prop_assert!((gyy - f * f).abs() <= 1e-10 * f * f);
    }

    #[test]
    fn fundamental_tensor_is_positive_definite((m, x, y) in sample()) {
        let g = fundamental_tensor(&m, &x, &y).unwrap().g;
        prop_assert!(g.clone().cholesky().is_some());
        prop_assert!((g.clone() - g.transpose()).amax() <= 1e-12 * g.amax());
    }

    #[test]
    fn cartan_tensor_annihilates_y((m, x, y) in sample()) {
        let c = cartan_tensor(&m, &x, &y).unwrap();
        let n = c.n;
        let ny = y.iter().map(|v| v * v).sum::<f64>().sqrt();
        let scale = m.f(&x, &y).unwrap().powi(2) / ny.powi(3);
        for i in 0..n {
            for j in 0..n {
                let s: f64 = (0..n).map(|k| c.data[(i * n + j) * n + k] * y[k]).sum();
                prop_assert!(s.abs() <= 1e-10 * scale * ny, "C_{i}{j}k y^k = {s}");
            }
        }
    }

    #[test]
    fn legendre_round_trip((m, x, y) in sample()) {
        let xi = legendre(&m, &x, &y).unwrap();
        let back = legendre_inverse(&m, &x, &xi).unwrap();
        let ny = y.iter().map(|v| v * v).sum::<f64>().sqrt();
        let err = y.iter().zip(&back).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        prop_assert!(err <= 1e-8 * ny, "round trip error {err}");
        let pairing: f64 = xi.iter().zip(&y).map(|(a, b)| a * b).sum();
        let f = m.f(&x, &y).unwrap();
        prop_assert!((pairing - f * f).abs() <= 1e-10 * f * f);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn sweep_search_matches_default((m, x, _y) in sample()) {
        let measure = MeasureSpec::BusemannHausdorff;
        let fine = ric_inf_lower_with(&m, &measure, &x, &ric_search_default(m.n).unwrap()).unwrap();
        let sweep = ric_inf_lower_with(&m, &measure, &x, &ric_search_sweep(m.n).unwrap()).unwrap();
        prop_assert!((fine - sweep).abs() <= 1e-6 * fine.abs().max(1.0), "{fine} vs {sweep}");
    }
}
