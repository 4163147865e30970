use edgemetric::eval::{evaluate_binary, match_boundaries, BinaryMap};
use edgemetric::metric::{chi_square, kernel_distance, logistic_transform, DistanceKernel};
use edgemetric::postproc::{postprocess, thinning_violations, OrientedResponses};
use proptest::prelude::*;

fn histogram(len: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.0f64..1.0, len).prop_filter_map("empty", |v| {
        let s: f64 = v.iter().sum();
        (s > 1e-9).then(|| v.iter().map(|x| x / s).collect())
    })
}

fn sparse_map(w: usize, h: usize) -> impl Strategy<Value = BinaryMap> {
    prop::collection::vec(prop::bool::weighted(0.2), w * h).prop_map(move |data| BinaryMap { width: w, height: h, data })
}

proptest! {
    #[test]
    fn chi_square_symmetric_and_bounded((u, v) in (histogram(12), histogram(12))) {
        let a = chi_square(&u, &v).unwrap();
        prop_assert_eq!(a, chi_square(&v, &u).unwrap());
        prop_assert!((0.0..=1.0).contains(&a));
        prop_assert!(chi_square(&u, &u).unwrap().abs() < 1e-12);
    }

    #[test]
    fn kernel_distances_bounded(
        (u, v) in (prop::collection::vec(0.0f64..1.0, 8), prop::collection::vec(0.0f64..1.0, 8)),
        sigma in 0.05f64..2.0,
    ) {
        let rbf = kernel_distance(&u, &v, DistanceKernel::Rbf, sigma).unwrap();
        prop_assert!((0.0..=1.0).contains(&rbf));
        let q: f64 = u.iter().zip(&v).map(|(a, b)| (a - b) * (a - b)).sum();
        // below 1 wherever exp(-q / 2σ²) is representable
        if q / (2.0 * sigma * sigma) < 30.0 {
            prop_assert!(rbf < 1.0);
        }
        let lin = kernel_distance(&u, &v, DistanceKernel::Linear, sigma).unwrap();
        prop_assert!(lin >= 0.0 && lin.is_finite());
        prop_assert_eq!(lin, kernel_distance(&v, &u, DistanceKernel::Linear, sigma).unwrap());
    }

    #[test]
    fn logistic_outputs_in_unit_interval(
        u in histogram(6),
        params in prop::collection::vec(-5.0f64..5.0, 3 + 18),
    ) {
        let (alpha, beta) = params.split_at(3);
        let t = logistic_transform(&u, alpha, beta).unwrap();
        prop_assert_eq!(t.len(), 3);
        prop_assert!(t.iter().all(|v| *v > 0.0 && *v < 1.0));
    }

    #[test]
    fn matching_is_bounded_and_self_complete((c, g) in (sparse_map(10, 7), sparse_map(10, 7)), tol in 0.0f64..3.0) {
        let n = |m: &BinaryMap| m.data.iter().filter(|&&b| b).count();
        let r = match_boundaries(&c, &g, tol).unwrap();
        prop_assert!(r.count <= n(&c).min(n(&g)));
        prop_assert_eq!(match_boundaries(&c, &c, tol).unwrap().count, n(&c));
        let pr = evaluate_binary(&c, std::slice::from_ref(&c), tol).unwrap();
        prop_assert_eq!((pr.matched_det, pr.matched_gt), (n(&c), n(&c)));
    }

    #[test]
    fn postprocessing_output_is_thin(values in prop::collection::vec(0.0f64..1.0, 20 * 16 * 8), radius in 0.0f64..2.0) {
        let r = OrientedResponses::new(20, 16, 8, values).unwrap();
        let (_, thin) = postprocess(&r, radius);
        prop_assert_eq!(thinning_violations(&thin), 0);
        prop_assert!(thin.strength.iter().all(|v| (0.0..=1.0).contains(v)));
    }
}
