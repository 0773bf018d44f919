use proptest::prelude::*;
use zernike_turbulence::coupling::{gamma_coeff, CouplingKey};
use zernike_turbulence::modes::ModeIndex;
use zernike_turbulence::turbulence::{
    joint_probability, probability_grid, AoConfig, DetectionSpec, Normalization, ProbabilityGrid,
    TurbulenceParams, Truncation,
};
use zernike_turbulence::Error;

fn mode(n: i64, m: i64) -> ModeIndex {
    ModeIndex::new(n, m).unwrap()
}

fn grid(sigma: f64, ao: AoConfig, trunc: Truncation) -> ProbabilityGrid {
    probability_grid(mode(2, 0), 1, -1, 9, &TurbulenceParams::reference(sigma), &ao, &trunc).unwrap()
}

fn off_peak(g: &ProbabilityGrid) -> f64 {
    g.cells.iter().filter(|c| (c.n1, c.n2) != (1, 1)).map(|c| c.norm).sum()
}

#[test]
fn grids_are_symmetric_under_detector_exchange() {
    for sigma in [0.01, 0.1, 0.5] {
        for ao in [AoConfig::none(), AoConfig::truncate(6), AoConfig::hybrid(6)] {
            let g = grid(sigma, ao, Truncation::default());
            if sigma >= 0.1 {
                assert!(g.all_converged(), "sigma {sigma} {ao:?}");
            }
            assert!(g.hermitian_residue < 1e-12);
            for c in &g.cells {
                assert_eq!(c.raw, g.cell(c.n2, c.n1).unwrap().raw);
            }
        }
    }
}

#[test]
fn weak_turbulence_flags_slow_cells() {
    // At sigma_R = 0.01 the weights stay near vacuum past n5 = 2 * order_max,
    // so the far cells keep wandering. They are flagged, and their tails sit
    // below the display floor.
    let g = grid(0.01, AoConfig::none(), Truncation::default());
    assert!(!g.all_converged());
    assert!(g.cell(1, 1).unwrap().converged);
    for c in g.cells.iter().filter(|c| !c.converged) {
        assert!(c.tail / g.total < 1e-4, "({}, {})", c.n1, c.n2);
    }
}

#[test]
fn grid_lists_only_valid_cells() {
    let g = grid(0.1, AoConfig::none(), Truncation::default());
    assert_eq!(g.cells.len(), 25);
    assert!(g.cells.iter().all(|c| c.n1 % 2 == 1 && c.n2 % 2 == 1));
    let sum: f64 = g.cells.iter().map(|c| c.norm).sum();
    assert!((sum - 1.0).abs() < 1e-14);
    assert_eq!(g.normalization, Normalization::UnitSum);
}

#[test]
fn vacuum_grid_only_lights_the_selection_rule_cell() {
    let g = grid(0.0, AoConfig::none(), Truncation::default());
    for c in &g.cells {
        let allowed = c.n1 + c.n2 <= 2;
        assert_eq!(c.raw != 0.0, allowed, "({}, {})", c.n1, c.n2);
    }
}

#[test]
fn all_zero_grid_is_flagged() {
    // pump (0,0) cannot reach any pair with N1 + N2 >= 2 in vacuum
    let g = probability_grid(
        mode(0, 0),
        1,
        -1,
        5,
        &TurbulenceParams::reference(0.0),
        &AoConfig::none(),
        &Truncation::default(),
    )
    .unwrap();
    assert_eq!(g.normalization, Normalization::AllZero);
    assert_eq!(g.total, 0.0);
    assert!(g.cells.iter().all(|c| c.norm == 0.0));
}

#[test]
fn grid_rejects_small_n_max() {
    let r = probability_grid(
        mode(2, 0),
        3,
        -3,
        2,
        &TurbulenceParams::reference(0.1),
        &AoConfig::none(),
        &Truncation::default(),
    );
    assert!(matches!(r, Err(Error::Domain(_))));
}

#[test]
fn truncation_order_is_converged() {
    // The nested estimate at three quarters of order_max drives the tails;
    // check it against an independent, larger truncation.
    let base = grid(0.1, AoConfig::none(), Truncation::default());
    let wide = grid(0.1, AoConfig::none(), Truncation::with_order(200));
    for (a, b) in base.cells.iter().zip(&wide.cells) {
        assert!((a.norm - b.norm).abs() < 1e-6, "({}, {}): {} vs {}", a.n1, a.n2, a.norm, b.norm);
        let diff = (a.raw - b.raw).abs();
        assert!(diff <= a.tail, "({}, {}): change {diff:e}, tail {:e}", a.n1, a.n2, a.tail);
    }
}

#[test]
fn short_n5_sum_is_reported_as_non_convergent() {
    let spec = DetectionSpec::new(mode(2, 0), mode(1, 1), mode(3, -1));
    let trunc = Truncation { n5_max: 30, ..Truncation::default() };
    let r = joint_probability(&spec, &TurbulenceParams::reference(0.1), &AoConfig::none(), &trunc);
    match r {
        Err(Error::NonConvergent { partial, tail }) => assert!(tail > 0.0 && partial.is_finite()),
        other => panic!("expected a non-convergence report, got {other:?}"),
    }
}

#[test]
fn clamped_ao_weight_never_exceeds_uncorrected() {
    for sigma in [0.1, 0.5] {
        let none = off_peak(&grid(sigma, AoConfig::none(), Truncation::default()));
        let cut = off_peak(&grid(sigma, AoConfig::truncate(6), Truncation::default()));
        assert!(cut <= none, "sigma {sigma}: {cut} > {none}");
    }
}

#[test]
fn truncate_model_goes_negative_off_peak() {
    // Dropping the low-order weights leaves an indefinite kernel; the raw
    // values say so and the grid counts them.
    let g = grid(0.1, AoConfig::truncate(6), Truncation::default());
    assert_eq!(g.negative_cells, 24);
    assert!(g.cell(1, 1).unwrap().raw > 0.0);
}

#[test]
fn crosstalk_grows_with_turbulence() {
    let weights: Vec<f64> = [0.01, 0.1, 0.5, 1.0]
        .iter()
        .map(|&s| off_peak(&grid(s, AoConfig::none(), Truncation::default())))
        .collect();
    assert!(weights.windows(2).all(|w| w[1] > w[0]), "{weights:?}");
}

#[test]
fn vacuum_probability_tracks_gamma_squared() {
    let p = TurbulenceParams::reference(0.0);
    for (n1, n2) in [(1, 1), (0, 0), (1, 3)] {
        let (m1, m2) = if n1 == 0 { (0, 0) } else { (1, -1) };
        let pump = mode(4, 0);
        let spec = DetectionSpec::new(pump, mode(n1, m1), mode(n2, m2));
        let v = joint_probability(&spec, &p, &AoConfig::none(), &Truncation::default()).unwrap();
        let g = gamma_coeff(&CouplingKey::new(spec.det1, spec.det2, pump));
        let expected = p.vacuum_scale() * std::f64::consts::PI.powi(2) * g * g;
        assert!((v.value - expected).abs() <= 1e-15 * expected.abs(), "({n1}, {n2})");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn joint_probability_is_exchange_symmetric(
        n1 in 0u32..4, n2 in 0u32..4, sigma in 0.05f64..1.0,
    ) {
        let (a, b) = (mode(2 * n1 as i64 + 1, 1), mode(2 * n2 as i64 + 1, -1));
        let p = TurbulenceParams::reference(sigma);
        let t = Truncation::with_order(80);
        let fwd = joint_probability(&DetectionSpec::new(mode(2, 0), a, b), &p, &AoConfig::none(), &t);
        let rev = joint_probability(&DetectionSpec::new(mode(2, 0), b, a), &p, &AoConfig::none(), &t);
        match (fwd, rev) {
            (Ok(x), Ok(y)) => prop_assert_eq!(x.value, y.value),
            (Err(_), Err(_)) => {}
            (x, y) => prop_assert!(false, "{:?} vs {:?}", x, y),
        }
    }

    #[test]
    fn uncorrected_probabilities_are_nonnegative(
        n1 in 0u32..4, n2 in 0u32..4, sigma in 0.05f64..1.0,
    ) {
        let spec = DetectionSpec::new(mode(2, 0), mode(2 * n1 as i64 + 1, 1), mode(2 * n2 as i64 + 1, -1));
        let t = Truncation::default();
        let v = joint_probability(&spec, &TurbulenceParams::reference(sigma), &AoConfig::none(), &t).unwrap();
        prop_assert!(v.value >= -1e-12 * TurbulenceParams::reference(sigma).vacuum_scale());
    }
}
