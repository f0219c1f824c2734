use std::sync::Arc;

use proptest::prelude::*;
use slitlab::expand::{fit_expansion, loglog_fit, Denominator, ExpandError, FitOptions, TangentFrame};
use slitlab::pdesolve::{DiscreteField, Grid, GridMode};
use slitlab::slitgeom::{model_u0, BoundaryGraph};
use slitlab::xrpoly::XRPolynomial;

proptest! {
    #[test]
    fn loglog_fit_recovers_power_laws(exponent in 0.5f64..4.0, c in 0.01f64..100.0, rho in 0.3f64..0.7) {
        let scales: Vec<f64> = (0..6).map(|i| rho.powi(i)).collect();
        let residuals: Vec<f64> = scales.iter().map(|s| c * s.powf(exponent)).collect();
        let reg = loglog_fit(&scales, &residuals, None).unwrap();
        prop_assert!((reg.slope - exponent).abs() <= 1e-10);
        prop_assert!((reg.intercept - c.ln()).abs() <= 1e-9);
        prop_assert!(reg.r_squared > 1.0 - 1e-12);
        prop_assert_eq!(reg.used, 6);
    }

    #[test]
    fn tangent_frames_are_orthonormal(z0 in -0.5f64..0.5, z1 in -0.5f64..0.5, slope in -2.0f64..2.0, y0 in -1.0f64..1.0, y1 in -1.0f64..1.0) {
        let tf = TangentFrame::new(&[z0, z1], Some(slope));
        let back = tf.local(&tf.global(&[y0, y1]));
        prop_assert!((back[0] - y0).abs() <= 1e-14 && (back[1] - y1).abs() <= 1e-14);
        let dot: f64 = tf.axes[0].iter().zip(&tf.axes[1]).map(|(a, b)| a * b).sum();
        prop_assert!(dot.abs() <= 1e-15);
        prop_assert!((tf.axes[0][1] / tf.axes[0][0] - slope).abs() <= 1e-12 * (1.0 + slope.abs()));
    }
}

#[test]
fn loglog_fit_needs_four_positive_residuals() {
    assert!(loglog_fit(&[1.0, 0.5, 0.25, 0.125], &[1.0, 0.0, 0.1, 0.01], None).is_none());
    let reg = loglog_fit(&[1.0, 0.5, 0.25, 0.125, 0.0625], &[1.0, 0.25, 0.0625, 0.015625, 1e-9], Some(1e-9)).unwrap();
    assert!(reg.dropped_innermost);
    assert!((reg.slope - 2.0).abs() < 1e-12);
}

#[test]
fn planted_quotient_is_recovered() {
    let mut p = XRPolynomial::constant(1, 1.0);
    p.add_term(&[1], 0, 0.4);
    p.add_term(&[0], 1, -0.3);
    p.add_term(&[2], 0, 0.2);
    p.add_term(&[1], 1, 0.1);
    let grid = Arc::new(Grid::new(&BoundaryGraph::flat(1), 257, GridMode::Laplace).unwrap());
    let u = DiscreteField::from_fn(grid, "planted", |x| model_u0(x[0], x[1]) * p.eval(&x[..1], x[0].hypot(x[1]))).unwrap();
    let tf = TangentFrame::new(&[0.0], None);
    let opts = FitOptions { scales: 4, samples_per_scale: 64, ..FitOptions::default() };
    let fit = fit_expansion(&u, Denominator::ModelU0, &tf, 2, &opts).unwrap();
    let err = &fit.coefficients - &p;
    assert!(err.truncate(1).norm() < 5e-3, "{:?}", fit.coefficients);
    assert!(err.norm() < 0.05, "{:?}", fit.coefficients);
    assert!(fit.residuals.iter().all(|r| *r < 1e-3), "{:?}", fit.residuals);
    assert_eq!(fit.scales.len(), 4);
}

#[test]
fn scale_windows_below_the_grid_are_rejected() {
    let grid = Arc::new(Grid::new(&BoundaryGraph::flat(1), 17, GridMode::Laplace).unwrap());
    let u = DiscreteField::from_fn(grid, "u0", |x| model_u0(x[0], x[1])).unwrap();
    let err = fit_expansion(&u, Denominator::ModelU0, &TangentFrame::new(&[0.0], None), 1, &FitOptions::default())
        .unwrap_err();
    assert!(matches!(err, ExpandError::WindowTooSmall(_)));
}
