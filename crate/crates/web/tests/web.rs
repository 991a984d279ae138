use delaystab_web::*;

#[test]
fn explorer_orders_the_bounds() {
    let values = [
        0.642, 0.742, -0.631, 0.017, -0.014, -0.313, 0.464, 0.053, -0.652, -0.501, 0.01, -0.268,
    ];
    let r = inequality_report(&values, 2, &[1.0, 0.0, 0.0, 1.0]).unwrap();
    assert_eq!(r.length, 6);
    // frozen numpy values for this sequence
    assert!((r.jensen_single_gap - 2.4078668333333337).abs() < 1e-12);
    assert!((r.refined_single - 0.8474269634245183).abs() < 1e-12);
    assert!(r.single_energy >= r.corollary_single && r.corollary_single >= r.jensen_single_rhs);
    assert!(r.double_energy >= r.corollary_double && r.corollary_double >= r.jensen_double_rhs);
    assert!(r.jensen_double_gap >= r.refined_double && r.refined_double >= 0.0);
}

#[test]
fn explorer_rejects_bad_shapes() {
    assert!(inequality_report(&[1.0, 2.0, 3.0], 2, &[1.0, 0.0, 0.0, 1.0]).is_err());
    assert!(inequality_report(&[1.0, 2.0], 2, &[1.0]).is_err());
    assert!(inequality_report(&[1.0, 2.0], 2, &[1.0, 0.0, 0.0, -1.0]).is_err());
}

#[test]
fn satellite_run_from_the_page_preset() {
    let a = [
        1.0, 0.0, 0.01, 0.0, 0.0, 1.0, 0.0, 0.01, -0.009, 0.009, 0.9996, 0.0004, 0.009, -0.009, 0.0004, 0.9996,
    ];
    let mut ad = [0.0; 16];
    ad[8..12].copy_from_slice(&[0.001284, -0.00138, -0.003049, 0.000522]);
    let r = trajectory(&a, &ad, 4, 1, 170, "sine", 400, &[2.0, -1.0, 0.2, -0.5]).unwrap();
    assert_eq!(r.states.len(), 401);
    assert_eq!(r.sup_norms[0], 2.0);
    assert_eq!(&r.delays[..4], &[1, 170, 1, 170]);
    assert!(trajectory(&a, &ad, 4, 1, 170, "sine", 10, &[1.0]).is_err());
    assert!(trajectory(&a, &ad[..4], 4, 1, 170, "sine", 10, &[1.0; 4]).is_err());
}

#[test]
fn bundled_certificate_drives_v_down() {
    let r = lyapunov_run(3, 150).unwrap();
    assert!(r.verified);
    assert_eq!((r.h1, r.h2), (2, 20));
    assert!(r.pi_h1_max_eig < 0.0 && r.pi_h2_max_eig < 0.0);
    assert_eq!(r.violations, 0);
    assert_eq!(r.v.len(), 151);
    assert!(r.v.windows(2).all(|w| w[1] < w[0]));
    assert!(r
        .dv_exact
        .iter()
        .zip(&r.quad_bound)
        .all(|(d, q)| *q < 0.0 && d <= &(q + 1e-8 * d.abs().max(1.0))));
    // same seed, same run
    assert_eq!(lyapunov_run(3, 150).unwrap(), r);
}
