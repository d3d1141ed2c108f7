use nalgebra::DMatrix;
use num_complex::Complex64;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};

use risfeed::farfield::{array_factor_db, taper_db};
use risfeed::optimizer::{evaluate_row, find_optimal_distance, sweep_sizes, ScanOptions};
use risfeed::power::{
    compare_architectures, dbm_to_w, per_pa_power, technology, Architecture, LinkBudget,
};
use risfeed::*;

fn element() -> impl Strategy<Value = ElementPattern> {
    prop_oneof![
        Just(ElementPattern::PATCH_6DBI),
        Just(ElementPattern::PATCH_8DBI),
        Just(ElementPattern::ISOTROPIC),
    ]
}

fn scene() -> impl Strategy<Value = Scene> {
    (
        2usize..40,
        1usize..5,
        0.5f64..200.0,
        element(),
        -3.0f64..3.0,
    )
        .prop_map(|(n_p, n_a, d, el, offset)| {
            Scene::new(
                LinearArray::standard(n_p.max(n_a), el).unwrap(),
                LinearArray::standard(n_a, el).unwrap(),
                d,
            )
            .unwrap()
            .with_offset(offset)
            .unwrap()
        })
}

// facing patch arrays with the feeder between a quarter and one RIS
// aperture away, the regime the designs are meant for
fn centered_scene() -> impl Strategy<Value = Scene> {
    (
        4usize..48,
        2usize..5,
        0.25f64..1.0,
        prop_oneof![
            Just(ElementPattern::PATCH_6DBI),
            Just(ElementPattern::PATCH_8DBI)
        ],
    )
        .prop_map(|(n_p, n_a, ratio, el)| {
            Scene::new(
                LinearArray::standard(n_p, el).unwrap(),
                LinearArray::standard(n_a, el).unwrap(),
                (ratio * n_p as f64).max(1.0),
            )
            .unwrap()
        })
}

fn gram_error(vs: &[Vec<Complex64>]) -> f64 {
    let mut worst: f64 = 0.0;
    for (i, a) in vs.iter().enumerate() {
        for (j, b) in vs.iter().enumerate() {
            let dot: Complex64 = a.iter().zip(b).map(|(x, y)| x.conj() * y).sum();
            let target = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((dot - target).norm());
        }
    }
    worst
}

fn lin(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn decomposition_is_unitary_and_exact(s in scene()) {
        let t = build_channel(&s).unwrap();
        for conv in [PhaseConvention::AmafCenter, PhaseConvention::RisPeak] {
            let dec = decompose_with(&t, conv).unwrap();
            prop_assert!(gram_error(&dec.u) <= 1e-10);
            prop_assert!(gram_error(&dec.v) <= 1e-10);
            let mut rebuilt = DMatrix::<Complex64>::zeros(t.num_ris(), t.num_amaf());
            for i in 0..dec.num_modes() {
                for n in 0..t.num_ris() {
                    for m in 0..t.num_amaf() {
                        rebuilt[(n, m)] += dec.u[i][n] * dec.v[i][m].conj() * dec.sigmas[i];
                    }
                }
            }
            let err = (t.entries() - &rebuilt).norm() / t.entries().norm();
            prop_assert!(err <= 1e-10, "reconstruction {err}");
            let coupling = free_space_coupling(&s).unwrap();
            prop_assert!((dec.energy() - coupling).abs() <= 1e-10 * coupling);
            prop_assert!(dec.sigmas.windows(2).all(|w| w[0] >= w[1]));
        }
    }

    #[test]
    fn decomposition_is_deterministic(s in scene()) {
        let t = build_channel(&s).unwrap();
        prop_assert_eq!(decompose(&t).unwrap(), decompose(&t).unwrap());
    }

    #[test]
    fn centered_modes_are_symmetric(s in centered_scene()) {
        let t = build_channel(&s).unwrap();
        let dec = decompose(&t).unwrap();
        let n = dec.num_ris();
        for k in 0..n {
            let (a, b) = (dec.u[0][k].norm(), dec.u[0][n - 1 - k].norm());
            prop_assert!((a - b).abs() <= 1e-9 * a.max(b).max(1e-300));
        }
        let broadside: Complex64 = dec.u[1].iter().sum();
        prop_assert!(broadside.norm() <= 1e-8, "a*(0) u2 = {}", broadside.norm());
        for k in 0..n {
            let (a, b) = (dec.u[1][k].norm(), dec.u[1][n - 1 - k].norm());
            prop_assert!((a - b).abs() <= 1e-8);
        }
    }

    #[test]
    fn pencil_pattern_symmetric_and_finite(s in centered_scene()) {
        let t = build_channel(&s).unwrap();
        let dec = decompose(&t).unwrap();
        let p = evaluate_pattern(&design1_pencil(&dec).unwrap(), &t, 0.5).unwrap();
        prop_assert!(p.power_dbi.iter().all(|v| v.is_finite()));
        let peak = lin(p.power_dbi[p.peak_index()]);
        let n = p.len();
        for i in 0..n / 2 {
            let (a, b) = (lin(p.power_dbi[i]), lin(p.power_dbi[n - 1 - i]));
            prop_assert!((a - b).abs() <= 1e-9 * peak);
        }
        let gamma = ris_gain(&dec, s.ris.element.peak_gain);
        prop_assert!((p.dbi_at(0.0) - gamma).abs() <= 1e-9);
        let m = pattern_metrics(&p);
        prop_assert!((m.broadside_dbi - gamma).abs() <= 1e-9);
    }

    #[test]
    fn steering_round_trip(s in scene(), theta in -60.0f64..60.0) {
        let t = build_channel(&s).unwrap();
        let dec = decompose(&t).unwrap();
        let d1 = design1_pencil(&dec).unwrap();
        let back = steer(&steer(&d1, theta), -theta);
        let a = evaluate_pattern(&d1, &t, 0.5).unwrap();
        let b = evaluate_pattern(&back, &t, 0.5).unwrap();
        let peak = lin(a.power_dbi[a.peak_index()]);
        for (x, y) in a.power_dbi.iter().zip(&b.power_dbi) {
            prop_assert!((lin(*x) - lin(*y)).abs() <= 1e-9 * peak);
        }
    }

    #[test]
    fn pencil_is_broadside_optimal(s in centered_scene(), seed in any::<u64>()) {
        let t = build_channel(&s).unwrap();
        let dec = decompose(&t).unwrap();
        let best = evaluate_pattern(&design1_pencil(&dec).unwrap(), &t, 1.0).unwrap().dbi_at(0.0);
        let mut rng = rand::rngs::StdRng::seed_from_u64(seed);
        for _ in 0..100 {
            let phases: Vec<f64> = (0..dec.num_ris()).map(|_| rng.gen_range(-180.0..180.0)).collect();
            let mut betas = vec![0.0; dec.num_modes()];
            betas[0] = 1.0;
            let trial = custom_design(&dec, &betas, &risfeed::eigenmodes::phases_from_deg(&phases)).unwrap();
            let g = evaluate_pattern(&trial, &t, 1.0).unwrap().dbi_at(0.0);
            prop_assert!(g <= best + 1e-9);
        }
    }

    #[test]
    fn gain_is_array_factor_plus_feed_loss(s in scene()) {
        let t = build_channel(&s).unwrap();
        let dec = decompose(&t).unwrap();
        let e = s.ris.element.peak_gain;
        let sum = array_factor_db(&dec, e) + dec.sigma1_sq_db();
        prop_assert!((ris_gain(&dec, e) - sum).abs() <= 1e-9);
    }

    #[test]
    fn per_pa_identity(s in scene(), p_t in -10.0f64..60.0) {
        let dec = decompose(&build_channel(&s).unwrap()).unwrap();
        let e = s.ris.element.peak_gain;
        let gap = per_pa_power(Architecture::FedRis, p_t, &dec, e)
            - per_pa_power(Architecture::PhasedArray, p_t, &dec, e);
        prop_assert!((gap + dec.sigma1_sq_db()).abs() <= 1e-9);
    }

    #[test]
    fn dc_totals_scale_with_pa_count(n_a in 1usize..6, extra in 0usize..40) {
        let el = ElementPattern::PATCH_6DBI;
        let s = Scene::new(
            LinearArray::standard(n_a + extra, el).unwrap(),
            LinearArray::standard(n_a, el).unwrap(),
            10.0,
        ).unwrap();
        let dec = decompose(&build_channel(&s).unwrap()).unwrap();
        let gan = technology("GaN").unwrap();
        let cmp = compare_architectures(&LinkBudget::EXAMPLE, &dec, 4.0, &gan, 0.0).unwrap();
        let per = cmp.fed_ris.dc_per_pa_w;
        prop_assert!((cmp.fed_ris.total_dc_w - n_a as f64 * per).abs() <= 1e-12 * cmp.fed_ris.total_dc_w);
        let ratio = cmp.phased_array.total_dc_w / cmp.fed_ris.total_dc_w;
        prop_assert!((ratio - (n_a + extra) as f64 / n_a as f64).abs() <= 1e-12 * ratio);
        prop_assert!(cmp.fed_ris.pa_count <= cmp.phased_array.pa_count);
        prop_assert!((dbm_to_w(gan.psat_dbm) - cmp.fed_ris.dc_per_pa_w * gan.pae_fraction) > 0.0);
    }
}

#[test]
fn uniform_array_first_sidelobe() {
    let w = vec![Complex64::new(1.0, 0.0); 32];
    let p = evaluate_excitation(w, ElementPattern::ISOTROPIC, 0.01).unwrap();
    let sll = pattern_metrics(&p).sll_db.unwrap();
    assert!((sll + 13.3).abs() <= 0.2, "{sll}");
}

#[test]
fn optimizer_scan_invariants() {
    let el = ElementPattern::PATCH_6DBI;
    let opts = ScanOptions::default();
    for n_p in [32, 64, 128] {
        let (d, scan) = find_optimal_distance(n_p, 4, el, el, &opts).unwrap();
        let tail: Vec<_> = scan.records.iter().filter(|r| r.d >= d).collect();
        assert!(tail[0].unimodal);
        assert!(tail
            .windows(2)
            .all(|w| w[1].sigma1_sq_db <= w[0].sigma1_sq_db));
        assert!(d < rayleigh_distance(n_p, 1.0));
    }
}

#[test]
fn sweep_rows_are_consistent() {
    let el = ElementPattern::PATCH_6DBI;
    let rows = sweep_sizes(&[64, 32], 4, el, el, &ScanOptions::default(), 0.05).unwrap();
    assert_eq!(rows.iter().map(|r| r.n_p).collect::<Vec<_>>(), vec![32, 64]);
    for r in &rows {
        assert!((r.gamma_dbi - r.array_factor_db - r.sigma1_sq_db).abs() <= 0.05);
        assert!((r.f_over_d - r.d_opt / r.n_p as f64).abs() < 1e-12);
    }
    let spread = rows.iter().map(|r| r.v1_taper_db).fold(f64::MIN, f64::max)
        - rows.iter().map(|r| r.v1_taper_db).fold(f64::MAX, f64::min);
    assert!(spread <= 0.5);
}

#[test]
fn evaluate_row_matches_direct_computation() {
    let el = ElementPattern::PATCH_6DBI;
    let s = Scene::new(
        LinearArray::standard(64, el).unwrap(),
        LinearArray::standard(4, el).unwrap(),
        30.0,
    )
    .unwrap();
    let row = evaluate_row(&s, PhaseConvention::default(), 0.01).unwrap();
    let dec = decompose(&build_channel(&s).unwrap()).unwrap();
    let profile: Vec<_> = dec.u[0].iter().map(|z| z * dec.sigmas[0]).collect();
    assert!((row.taper_db - taper_db(&profile)).abs() < 1e-12);
    assert!((row.gamma_dbi - ris_gain(&dec, 4.0)).abs() < 1e-12);
}
