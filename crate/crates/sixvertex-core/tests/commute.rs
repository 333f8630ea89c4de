use sixvertex_core::commute::{identity_residuals, HessianSource};
use sixvertex_core::thermo::ThermoOptions;
use sixvertex_core::Error;

// w = 0.5 puts a ψ₊ singularity about 0.02 from the contour; 256 nodes resolve it.
fn run(u: f64, w: f64, q: f64, h: f64, src: HessianSource) -> sixvertex_core::commute::IdentityReport {
    let opts = ThermoOptions { m_nodes: 256, ..ThermoOptions::default() };
    identity_residuals(u, w, q, h, 1.0, src, &opts).unwrap()
}

#[test]
fn closed_form_identities_hold() {
    let r = run(0.3, 0.5, 0.4, 0.05, HessianSource::ClosedForm);
    assert!(r.max_residual() < 1e-6);
}

#[test]
fn finite_difference_identities_hold() {
    let r = run(0.3, 0.5, 0.4, 0.05, HessianSource::FiniteDifference);
    assert!(r.max_residual() < 1e-3);
}

#[test]
fn equal_parameters_are_exact() {
    let r = run(0.35, 0.35, 0.33, -0.04, HessianSource::ClosedForm);
    assert_eq!(r.residuals(), [0.0, 0.0, 0.0]);
}

#[test]
fn swap_flips_first_identity() {
    let a = run(0.25, 0.45, 0.42, 0.07, HessianSource::ClosedForm);
    let b = run(0.45, 0.25, 0.42, 0.07, HessianSource::ClosedForm);
    assert_eq!(a.residual1, b.residual1);
}

#[test]
fn sources_agree() {
    let a = run(0.3, 0.4, 0.35, -0.05, HessianSource::ClosedForm);
    let b = run(0.3, 0.4, 0.35, -0.05, HessianSource::FiniteDifference);
    for (x, y) in a.residuals().iter().zip(b.residuals()) {
        assert!((x - y).abs() < 1e-3);
    }
}

#[test]
fn out_of_domain_parameter() {
    let r = identity_residuals(0.3, 1.3, 0.4, 0.0, 1.0, HessianSource::ClosedForm, &ThermoOptions::default());
    assert!(matches!(r, Err(Error::Domain(_))));
}

#[test]
fn near_singular_parameter_needs_more_nodes() {
    use sixvertex_core::kernels::Sign;
    use sixvertex_core::thermo::ThermoPoint;
    let tp = ThermoPoint::new(0.4, 0.05, 1.0, &ThermoOptions::default()).unwrap();
    let d = tp.singularity_distance(0.5, Sign::Plus);
    assert!(d > 0.01 && d < 0.03);
    assert!(tp.singularity_distance(0.3, Sign::Plus) > 0.2);
}
