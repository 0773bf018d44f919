use proptest::prelude::*;
use zernike_turbulence::coupling::{a_coeff, gamma_coeff, CouplingKey};
use zernike_turbulence::modes::{enumerate_modes, ModeIndex};
use zernike_turbulence::oracle::{
    a_coeff_numeric, fixture_table, gamma_convolution, QuadratureSpec, Tensor,
};

#[test]
fn fixture_table_round_trips() {
    let keys: Vec<CouplingKey> = [[0, 0, 0, 0, 0, 0], [1, 1, 1, -1, 2, 0], [1, 1, 1, 1, 2, 2]]
        .iter()
        .map(|v| CouplingKey::from_ints(*v).unwrap())
        .collect();
    let text = fixture_table(Tensor::Gamma, &keys, &QuadratureSpec::default()).unwrap();
    let rows: Vec<&str> = text.lines().filter(|l| !l.starts_with('#')).collect();
    assert_eq!(rows.len(), keys.len());
    for (row, key) in rows.iter().zip(&keys) {
        let f: Vec<f64> = row.split_whitespace().map(|t| t.parse().unwrap()).collect();
        assert_eq!(f[6], gamma_coeff(key));
        assert!((f[6] - f[7]).abs() <= f[8].max(1e-12));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn gamma_matches_convolution_route(i in 0usize..28, j in 0usize..28, t in 0i64..7) {
        let modes = enumerate_modes(6);
        let (a, b) = (modes[i], modes[j]);
        let m = (a.m + b.m) as i64;
        let c = ModeIndex::new(m.abs() + 2 * t, m).unwrap();
        let key = CouplingKey::new(a, b, c);
        let o = gamma_convolution(&key);
        prop_assert!((gamma_coeff(&key) - o.value).abs() < 1e-11, "{}", key);
        prop_assert!(o.imag.abs() < 1e-11);
    }

    #[test]
    fn a_matches_disk_quadrature(i in 0usize..28, j in 0usize..28, k in 0usize..28) {
        let modes = enumerate_modes(6);
        let key = CouplingKey::new(modes[i], modes[j], modes[k]);
        let o = a_coeff_numeric(&key, &QuadratureSpec::default());
        prop_assert!((a_coeff(&key) - o.value).abs() < 1e-12, "{}", key);
    }
}
