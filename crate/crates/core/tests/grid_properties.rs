//! Structural properties of the explicit grid scheme.

use std::sync::Arc;

use infheat_core::exact::Barenblatt;
use infheat_core::grid::{BoundaryData, Field, Grid, GridSolver, MaskSpec, SchemeParams, StencilMode};
use infheat_core::operator::Homogeneity;
use proptest::prelude::*;

fn square(n: usize, half: f64) -> Arc<Grid> {
    Arc::new(Grid::new(&[-half, -half], &[half, half], &[n, n], &MaskSpec::Box).unwrap())
}

fn field_from(grid: &Arc<Grid>, t: f64, f: impl Fn(f64, f64) -> f64) -> Field {
    let values = (0..grid.len())
        .map(|i| {
            let c = grid.coords(i);
            if grid.boundary().contains(&i) {
                0.0
            } else {
                f(c[0], c[1])
            }
        })
        .collect();
    Field::new(grid.clone(), values, t).unwrap()
}

fn bump(cx: f64, cy: f64, r: f64, a: f64) -> impl Fn(f64, f64) -> f64 {
    move |x, y| {
        let d2 = ((x - cx).powi(2) + (y - cy).powi(2)) / (r * r);
        a * (1.0 - d2).max(0.0).powi(2)
    }
}

fn solver(h: f64, delta: f64, stencil: StencilMode) -> GridSolver {
    let params = SchemeParams::new(Homogeneity::new(h).unwrap(), 0.0, delta).unwrap().with_stencil(stencil);
    GridSolver::new(params, BoundaryData::zero())
}

fn run_to(s: &GridSolver, f: &mut Field, t_end: f64) {
    s.evolve(f, t_end, &[], |_| {}).unwrap();
}

#[test]
fn quarter_turn_commutes_with_the_scheme() {
    let n = 33;
    let g = square(n, 1.0);
    for stencil in [StencilMode::GradientAligned, StencilMode::Central] {
        let s = solver(2.0, 1e-3, stencil);
        let f0 = field_from(&g, 0.0, bump(0.3, -0.1, 0.5, 1.0));
        let rot = |idx: &[usize]| vec![n - 1 - idx[1], idx[0]];
        let mut a = f0.clone();
        let mut b = f0.remap(rot);
        // shared steps so both runs see identical dt sequences
        for _ in 0..50 {
            let dt = s.cfl_dt(&a);
            s.step(&mut a, dt).unwrap();
            s.step(&mut b, dt).unwrap();
        }
        let a_rot = a.remap(rot);
        let worst = a_rot.values().iter().zip(b.values()).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
        assert!(worst <= 1e-13, "{stencil:?}: {worst}");
    }
}

#[test]
fn axis_cycles_commute_with_the_scheme_in_3d() {
    let n = 13;
    let g = Arc::new(Grid::new(&[-1.0; 3], &[1.0; 3], &[n; 3], &MaskSpec::Box).unwrap());
    let values = (0..g.len())
        .map(|i| {
            let c = g.coords(i);
            let d2 = (c[0] - 0.2).powi(2) + (c[1] + 0.1).powi(2) + 2.0 * c[2].powi(2);
            if g.boundary().contains(&i) { 0.0 } else { (1.0 - d2 / 0.5).max(0.0).powi(2) }
        })
        .collect();
    let f0 = Field::new(g, values, 0.0).unwrap();
    let cycle = |idx: &[usize]| vec![idx[1], idx[2], idx[0]];
    let s = solver(3.0, 1e-3, StencilMode::GradientAligned);
    let mut a = f0.clone();
    let mut b = f0.remap(cycle);
    for _ in 0..30 {
        let dt = s.cfl_dt(&a);
        s.step(&mut a, dt).unwrap();
        s.step(&mut b, dt).unwrap();
    }
    let worst = a.remap(cycle).values().iter().zip(b.values()).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
    assert!(worst <= 1e-13, "{worst}");
}

#[test]
fn truncation_radius_does_not_matter_inside_the_support() {
    let hom = Homogeneity::new(3.0).unwrap();
    let b = Barenblatt::new(0.5, hom).unwrap();
    let data = move |x: f64, y: f64| b.eval(&[x, y], 1.0).unwrap();
    let small = square(33, 1.0);
    let large = square(65, 2.0);
    let s = solver(3.0, 1e-3, StencilMode::GradientAligned);
    let mut u = field_from(&small, 1.0, data);
    let mut w = field_from(&large, 1.0, data);
    run_to(&s, &mut u, 1.5);
    run_to(&s, &mut w, 1.5);
    let mut worst: f64 = 0.0;
    for i in 0..small.len() {
        let c = small.coords(i);
        if c[0].hypot(c[1]) <= 0.5 {
            let v = w.interpolate(&c[..2]).unwrap();
            worst = worst.max((u.values()[i] - v).abs());
        }
    }
    assert!(worst <= 1e-12, "{worst}");
}

#[test]
fn smaller_regularization_is_closer_to_barenblatt() {
    let hom = Homogeneity::new(2.0).unwrap();
    let b = Barenblatt::new(1.0, hom).unwrap();
    let g = square(65, 2.0);
    let error = |delta: f64| {
        let mut f = field_from(&g, 1.0, move |x, y| b.eval(&[x, y], 1.0).unwrap());
        run_to(&solver(2.0, delta, StencilMode::GradientAligned), &mut f, 2.0);
        f.active().map(|(i, v)| (v - b.eval(&g.coords(i)[..2], 2.0).unwrap()).abs()).fold(0.0, f64::max)
    };
    let coarse = error(0.3);
    let fine = error(1e-3);
    assert!(fine < coarse, "delta 1e-3: {fine}, delta 0.3: {coarse}");
}

#[test]
fn masked_exterior_stays_zero() {
    let mask = MaskSpec::Ball {
        center: vec![0.0, 0.0],
        radius: 0.9,
    };
    let g = Arc::new(Grid::new(&[-1.0, -1.0], &[1.0, 1.0], &[33, 33], &mask).unwrap());
    let inside = |x: f64, y: f64| if x.hypot(y) < 0.85 { 1.0 - x.hypot(y) } else { 0.0 };
    let mut f = field_from(&g, 0.0, inside);
    run_to(&solver(2.0, 1e-3, StencilMode::GradientAligned), &mut f, 0.2);
    for (i, k) in g.kinds().iter().enumerate() {
        if *k != infheat_core::grid::NodeKind::Interior {
            assert_eq!(f.values()[i], 0.0);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn ordered_data_stay_ordered(
        cx in -0.3f64..0.3, cy in -0.3f64..0.3, r in 0.3f64..0.6, a in 0.1f64..2.0,
        extra in 0.0f64..1.0, h in prop::sample::select(vec![1.5, 2.0, 3.0, 4.0]),
    ) {
        let g = square(21, 1.0);
        let s = solver(h, 1e-3, StencilMode::GradientAligned);
        let lo = bump(cx, cy, r, a);
        let mut u = field_from(&g, 0.0, &lo);
        let mut w = field_from(&g, 0.0, |x, y| lo(x, y) + extra * bump(0.0, 0.0, 0.7, 1.0)(x, y));
        for _ in 0..40 {
            let dt = s.cfl_dt(&u).min(s.cfl_dt(&w));
            s.step(&mut u, dt).unwrap();
            s.step(&mut w, dt).unwrap();
            let worst = u.values().iter().zip(w.values()).map(|(p, q)| p - q).fold(f64::NEG_INFINITY, f64::max);
            prop_assert!(worst <= 1e-12, "violation {worst}");
        }
    }

    #[test]
    fn max_and_min_are_bounded_by_the_data(
        cx in -0.3f64..0.3, cy in -0.3f64..0.3, a in -2.0f64..2.0,
        h in prop::sample::select(vec![1.5, 2.0, 3.0]),
    ) {
        let g = square(21, 1.0);
        let s = solver(h, 1e-3, StencilMode::GradientAligned);
        let mut u = field_from(&g, 0.0, bump(cx, cy, 0.6, a));
        let (hi, lo) = (u.values().iter().cloned().fold(0.0, f64::max), u.min_value().min(0.0));
        for _ in 0..40 {
            let dt = s.cfl_dt(&u);
            s.step(&mut u, dt).unwrap();
            prop_assert!(u.values().iter().all(|v| *v <= hi + 1e-12 && *v >= lo - 1e-12));
        }
    }
}
