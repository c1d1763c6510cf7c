//! Exact families against closed forms computed independently.

use std::f64::consts::PI;
use std::sync::Arc;

use infheat_core::exact::{Barenblatt, Giant, GiantProfile, DEFAULT_GIANT_NODES};
use infheat_core::operator::Homogeneity;
use statrs::function::gamma::gamma;

/// Half-period from the Beta integral: kappa * sqrt(pi) Γ((a+1)/2) / Γ(a/2 + 1).
fn rbar_closed_form(h: f64) -> f64 {
    let alpha = (h - 1.0) / (h + 1.0);
    let kappa = (2.0 * alpha).powf(1.0 / (h + 1.0));
    kappa * PI.sqrt() * gamma((alpha + 1.0) / 2.0) / gamma(alpha / 2.0 + 1.0)
}

#[test]
fn half_period_matches_beta_integral() {
    for h in [1.25, 1.5, 2.0, 3.0, 4.0, 6.0] {
        let p = GiantProfile::build(Homogeneity::new(h).unwrap(), DEFAULT_GIANT_NODES).unwrap();
        let want = rbar_closed_form(h);
        assert!((p.rbar() - want).abs() <= 1e-10 * want, "h={h}: {} vs {want}", p.rbar());
    }
    assert!((rbar_closed_form(3.0) - 2.396280).abs() < 5e-7);
}

#[test]
fn profile_is_symmetric_about_the_quarter_period() {
    for h in [1.5, 2.0, 3.0] {
        let p = GiantProfile::build(Homogeneity::new(h).unwrap(), DEFAULT_GIANT_NODES).unwrap();
        let rb = p.rbar();
        assert!(p.x_eval(rb / 2.0).abs() < 1e-9);
        assert!((p.x_eval(rb) + 1.0).abs() < 1e-12);
        assert!((p.x_eval(2.0 * rb) - 1.0).abs() < 1e-12);
        for k in 1..20 {
            let r = rb * k as f64 / 40.0;
            assert!((p.x_eval(r) + p.x_eval(rb - r)).abs() < 1e-9, "h={h} r={r}");
        }
    }
}

#[test]
fn giant_scaling_examples() {
    let p = Arc::new(GiantProfile::build(Homogeneity::new(3.0).unwrap(), DEFAULT_GIANT_NODES).unwrap());
    let r0 = p.rbar() / 2.0;
    let g = Giant::new(p, r0, 0.0).unwrap();
    assert!((g.eval(&[0.0, 0.0], 1.0).unwrap() - 1.0).abs() < 1e-12);
    assert!((g.eval(&[0.0, 0.0], 2.0).unwrap() - 0.5f64.sqrt()).abs() < 1e-12);
}

#[test]
fn barenblatt_center_values() {
    let b3 = Barenblatt::new(1.0, Homogeneity::new(3.0).unwrap()).unwrap();
    assert!((b3.eval(&[0.0], 1.0).unwrap() - 0.25).abs() < 1e-14);
    let b2 = Barenblatt::new(1.0, Homogeneity::new(2.0).unwrap()).unwrap();
    assert!((b2.eval(&[0.0], 1.0).unwrap() - 1.0 / 18.0).abs() < 1e-15);
    // t^(-1/(2h)) decay of the center at fixed R
    let ratio = b3.eval(&[0.0], 64.0).unwrap() / b3.eval(&[0.0], 1.0).unwrap();
    assert!((ratio - 64f64.powf(-1.0 / 6.0)).abs() < 1e-14);
}

#[test]
fn barenblatt_support_rate() {
    let b = Barenblatt::new(1.5, Homogeneity::new(2.0).unwrap()).unwrap();
    for t in [0.5, 1.0, 10.0, 1000.0] {
        let r = b.support_radius(t).unwrap();
        assert!((r - 1.5 * t.powf(0.25)).abs() < 1e-12 * r);
        assert!(b.eval_radial(r * (1.0 + 1e-9), t).unwrap() == 0.0);
        assert!(b.eval_radial(r * (1.0 - 1e-3), t).unwrap() > 0.0);
    }
}
