use approx::assert_abs_diff_eq;
use proptest::prelude::*;
use slitlab::mollify::{
    barrier_check, dyadic_scale, h_profile, kernel_derivatives, kernel_nodes, mollified_distance, MollifiedField,
    MollifyError, KERNEL_RADIUS,
};
use slitlab::slitgeom::{signed_distance, BoundaryGraph};

#[test]
fn kernel_rules_have_unit_mass_and_no_first_moment() {
    for n in [1, 2] {
        let nodes = kernel_nodes(n, 8, 2);
        let mass: f64 = nodes.iter().map(|k| k.rho).sum();
        assert_abs_diff_eq!(mass, 1.0, epsilon = 1e-13);
        for i in 0..n {
            let moment: f64 = nodes.iter().map(|k| k.rho * k.y[i]).sum();
            assert_abs_diff_eq!(moment, 0.0, epsilon = 1e-16);
        }
        assert!(nodes.iter().all(|k| k.y.iter().map(|v| v * v).sum::<f64>() <= KERNEL_RADIUS * KERNEL_RADIUS));
    }
}

proptest! {
    #[test]
    fn kernel_gradient_matches_differences(y0 in -0.07f64..0.07, y1 in -0.07f64..0.07) {
        let s = 1e-7;
        let (_, grad, hess) = kernel_derivatives(2, &[y0, y1]);
        let scale = kernel_derivatives(2, &[0.0, 0.0]).0 / KERNEL_RADIUS;
        for i in 0..2 {
            let mut p = [y0, y1];
            let mut m = p;
            p[i] += s;
            m[i] -= s;
            let (vp, gp, _) = kernel_derivatives(2, &p);
            let (vm, gm, _) = kernel_derivatives(2, &m);
            prop_assert!(((vp - vm) / (2.0 * s) - grad[i]).abs() <= 1e-6 * scale);
            for j in 0..2 {
                let fd = (gp[j] - gm[j]) / (2.0 * s);
                prop_assert!((fd - hess[i * 2 + j]).abs() <= 1e-5 * scale / KERNEL_RADIUS);
            }
        }
    }

    #[test]
    fn transition_profile_is_monotone_with_consistent_derivatives(t in 2.0f64..3.0) {
        let s = 1e-6;
        let (h, h1, h2) = h_profile(t);
        prop_assert!((0.0..=1.0).contains(&h));
        prop_assert!(h1 <= 0.0);
        prop_assert!(((h_profile(t + s).0 - h_profile(t - s).0) / (2.0 * s) - h1).abs() <= 1e-6);
        prop_assert!(((h_profile(t + s).1 - h_profile(t - s).1) / (2.0 * s) - h2).abs() <= 1e-4);
    }

    #[test]
    fn affine_graphs_are_reproduced_exactly(c in -0.5f64..0.5, x0 in -0.3f64..0.3, x1 in -0.3f64..0.3, k in 1u32..5) {
        let graph = BoundaryGraph::tilted(c).unwrap();
        let field = MollifiedField::new(graph.clone(), 0, 6).unwrap();
        let md = mollified_distance(&field, dyadic_scale(k), &[x0, x1]).unwrap();
        let sd = signed_distance(&graph, &[x0, x1]).unwrap();
        prop_assert!((md.value - sd.d).abs() <= 1e-15);
        prop_assert!(md.grad.iter().zip(&sd.nu).all(|(a, b)| (a - b).abs() <= 1e-15));
        prop_assert!(md.hess.iter().all(|v| v.abs() <= 1e-13));
    }

    #[test]
    fn mollification_commutes_with_rescaling(eps in 0.01f64..0.12, x0 in -0.1f64..0.1, x1 in -0.1f64..0.1) {
        let lambda = dyadic_scale(1);
        let fine = MollifiedField::new(BoundaryGraph::paraboloid(2, eps).unwrap(), 0, 6).unwrap();
        let coarse = MollifiedField::new(BoundaryGraph::paraboloid(2, eps * 4.0).unwrap(), 0, 6).unwrap();
        let a = mollified_distance(&fine, lambda, &[4.0 * x0, 4.0 * x1]).unwrap();
        let b = mollified_distance(&coarse, lambda / 4.0, &[x0, x1]).unwrap();
        prop_assert!((a.value / 4.0 - b.value).abs() <= 1e-12);
        prop_assert!((4.0 * a.laplacian() - b.laplacian()).abs() <= 1e-8 * (1.0 + b.laplacian().abs()));
    }
}

#[test]
fn invalid_scale_windows_are_rejected() {
    let err = MollifiedField::new(BoundaryGraph::flat(2), 3, 3).unwrap_err();
    assert_eq!(err, MollifyError::InvalidScales { k_min: 3, k_max: 3 });
    let err = MollifiedField::new(BoundaryGraph::flat(3), 0, 3).unwrap_err();
    assert_eq!(err, MollifyError::UnsupportedDimension(3));
}

#[test]
fn barrier_rejects_exponents_outside_the_admissible_range() {
    let field = MollifiedField::new(BoundaryGraph::flat(2), 1, 5).unwrap();
    assert!(matches!(barrier_check(&field, 0.5, 16, 0, 0.1), Err(MollifyError::InvalidExponent(_))));
}
