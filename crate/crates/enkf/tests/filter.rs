use chrono::NaiveDate;
use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use snowcast_core::{
    clamp_state, daily_step, validate_parameters, Basin, DailyForcing, HruGeometry, HruState, ModelConfig, Param,
    ParameterSet, Registry, StateBounds,
};
use snowcast_enkf::noise::{member_rng, sample_sd};
use snowcast_enkf::{
    enkf_update, observe, param_init_sd, perturb_forcing, EnkfError, Ensemble, Layout, NoLocalization, NoiseConfig,
    ObservationBatch, Slot,
};

fn basin(n: usize) -> Basin {
    let hrus = (0..n)
        .map(|i| HruGeometry {
            id: i as u32 + 1,
            area: 500.0 + 100.0 * i as f64,
            elevation: 5000.0 + 500.0 * i as f64,
            slope: 0.1,
            latitude: 40.0,
            summer_cover: 0.4,
            winter_cover: 0.3,
            impervious_fraction: 0.02,
        })
        .collect();
    Basin::new(hrus, 0, &ModelConfig::default()).unwrap()
}

fn snowy_states(n: usize) -> Vec<HruState> {
    (0..n)
        .map(|i| HruState {
            swe: 5.0 + i as f64,
            sice: 5.0 + i as f64,
            depth: (5.0 + i as f64) / 0.3,
            density: 0.3,
            heat_deficit: 10.0,
            pack_temp: 28.0,
            fsca: 1.0,
            swe_max_track: 5.0 + i as f64,
            ssz: 3.0,
            ssre: 1.5,
            sss: 0.5,
            sgw: 2.0,
            ..HruState::default()
        })
        .collect()
}

fn day(d: u32, precip: f64, n: usize) -> DailyForcing {
    DailyForcing {
        date: NaiveDate::from_ymd_opt(2021, 2, 1).unwrap() + chrono::Days::new(d as u64),
        tmax: 38.0 + (d % 5) as f64,
        tmin: 22.0,
        precip: vec![precip; n],
    }
}

#[test]
fn zero_noise_members_equal_the_mean() {
    let n_hru = 3;
    let params = ParameterSet::nominal(n_hru, Registry::default());
    let states = snowy_states(n_hru);
    let e = Ensemble::init(
        Layout::joint(n_hru, false),
        &states,
        &params,
        NoiseConfig::zero(1),
        5,
        &ModelConfig::default(),
    )
    .unwrap();
    for m in &e.members {
        assert_eq!(m.states, states);
        assert_eq!(m.params, params);
    }
}

#[test]
fn too_few_members_rejected() {
    let params = ParameterSet::nominal(1, Registry::default());
    let r = Ensemble::init(
        Layout::state_only(1, false),
        &snowy_states(1),
        &params,
        NoiseConfig::default(),
        1,
        &ModelConfig::default(),
    );
    assert!(matches!(r, Err(EnkfError::TooFewMembers(1))));
}

#[test]
fn missing_layout_parameter_rejected() {
    let mut params = ParameterSet::new(1, Registry::default());
    params.fill(Param::SoilmoistMax, 5.0);
    params.fill(Param::ImpervStorMax, 0.05);
    let r = Ensemble::init(
        Layout::joint(1, false),
        &snowy_states(1),
        &params,
        NoiseConfig::default(),
        4,
        &ModelConfig::default(),
    );
    assert!(matches!(r, Err(EnkfError::MissingParameter(_))));
}

#[test]
fn unit_range_parameter_starts_with_quarter_sd() {
    let spec = Registry::default().spec(Param::CareaMax);
    assert_eq!(spec.range(), 1.0);
    assert_eq!(param_init_sd(&spec, &NoiseConfig::default()), 0.25);

    // far from the bounds the drawn spread matches the rule
    let n_hru = 1;
    let mut params = ParameterSet::nominal(n_hru, Registry::default());
    params.fill(Param::TmaxAllrain, 26.0);
    let e = Ensemble::init(
        Layout::joint(n_hru, false),
        &snowy_states(1),
        &params,
        NoiseConfig::default(),
        2000,
        &ModelConfig::default(),
    )
    .unwrap();
    let sd = e.slot_sd(
        &Slot::GlobalParam {
            param: Param::TmaxAllrain,
        },
        1,
    );
    let expected = 0.25 * 68.0;
    assert!((sd - expected).abs() < 0.08 * expected, "sd {sd}");
    for m in &e.members {
        assert!(validate_parameters(&m.params).is_empty());
    }
}

#[test]
fn identical_members_stay_identical() {
    let n_hru = 2;
    let b = basin(n_hru);
    let cfg = ModelConfig::default();
    let params = ParameterSet::nominal(n_hru, Registry::default());
    let mut e = Ensemble::init(
        Layout::joint(n_hru, false),
        &snowy_states(n_hru),
        &params,
        NoiseConfig::zero(3),
        4,
        &cfg,
    )
    .unwrap();
    for d in 0..20 {
        e.forecast(&b, &day(d, 0.3 * (d % 2) as f64, n_hru), &cfg).unwrap();
        let obs = observe(&e.layout, &[Some(4.0), Some(7.0)], Some(10.0), &e.noise).unwrap();
        e.analysis(&obs, 2, &NoLocalization).unwrap();
    }
    for m in &e.members[1..] {
        assert_eq!(m, &e.members[0]);
    }
}

#[test]
fn forecast_matches_independent_model_runs() {
    let n_hru = 1;
    let b = basin(n_hru);
    let cfg = ModelConfig::default();
    let params = ParameterSet::nominal(n_hru, Registry::default());
    let noise = NoiseConfig {
        process_fraction: 0.0,
        seed: 9,
        ..NoiseConfig::default()
    };
    let states = snowy_states(n_hru);
    let mut e = Ensemble::init(Layout::state_only(n_hru, false), &states, &params, noise, 2, &cfg).unwrap();
    let forcing = day(0, 0.5, n_hru);
    e.forecast(&b, &forcing, &cfg).unwrap();
    for i in 0..2 {
        let mut rng = member_rng(9, i);
        // initialization consumed one draw per layout slot
        for _ in 0..e.layout.dim() {
            snowcast_enkf::noise::normal(&mut rng);
        }
        let f = perturb_forcing(&forcing, &noise, &mut rng);
        let mut s = states.clone();
        let out = daily_step(&b, &mut s, &f, &params, &cfg).unwrap();
        assert_eq!(e.members[i].states, s);
        assert_eq!(e.members[i].current_runoff, out.basin.flow_cfs);
    }
    assert_ne!(e.members[0].states, e.members[1].states);
}

#[test]
fn runoff_slots_shift_daily() {
    let n_hru = 1;
    let b = basin(n_hru);
    let cfg = ModelConfig::default();
    let params = ParameterSet::nominal(n_hru, Registry::default());
    let mut e = Ensemble::init(
        Layout::joint(n_hru, false),
        &snowy_states(1),
        &params,
        NoiseConfig::zero(1),
        2,
        &cfg,
    )
    .unwrap();
    e.forecast(&b, &day(0, 0.0, 1), &cfg).unwrap();
    let first = e.members[0].current_runoff;
    assert!(first > 0.0);
    e.forecast(&b, &day(1, 0.0, 1), &cfg).unwrap();
    assert_eq!(e.members[0].prev_runoff, first);
}

#[test]
fn non_finite_member_reports_its_id() {
    let n_hru = 1;
    let b = basin(n_hru);
    let cfg = ModelConfig::default();
    let params = ParameterSet::nominal(n_hru, Registry::default());
    let mut e = Ensemble::init(
        Layout::state_only(n_hru, false),
        &snowy_states(1),
        &params,
        NoiseConfig::zero(1),
        3,
        &cfg,
    )
    .unwrap();
    e.members[2].states[0].sss = f64::NAN;
    match e.forecast(&b, &day(0, 0.0, 1), &cfg) {
        Err(EnkfError::Member { member, .. }) => assert_eq!(member, 2),
        other => panic!("unexpected {other:?}"),
    }
}

#[test]
fn process_noise_skips_zero_mean_slots() {
    let n_hru = 1;
    let b = basin(n_hru);
    let cfg = ModelConfig::default();
    let params = ParameterSet::nominal(n_hru, Registry::default());
    let noise = NoiseConfig {
        precip_fraction: 0.0,
        temperature_sd_c: 0.0,
        process_fraction: 0.05,
        ..NoiseConfig::default()
    };
    let bare = vec![HruState {
        ssz: 2.0,
        ..HruState::default()
    }];
    let mut e = Ensemble::init(Layout::state_only(n_hru, false), &bare, &params, noise, 10, &cfg).unwrap();
    let mut warm = day(0, 0.0, 1);
    warm.tmax = 70.0;
    warm.tmin = 45.0;
    e.forecast(&b, &warm, &cfg).unwrap();
    for m in &e.members {
        assert_eq!(m.states[0].swe, 0.0);
        assert_eq!(m.states[0].sint, 0.0);
    }
    assert!(
        e.slot_sd(
            &Slot::State {
                hru: 0,
                field: snowcast_core::StateField::Ssz
            },
            2
        ) > 0.0
    );
}

#[test]
fn analysis_respects_bounds() {
    let n_hru = 2;
    let b = basin(n_hru);
    let cfg = ModelConfig::default();
    let params = ParameterSet::nominal(n_hru, Registry::default());
    let mut e = Ensemble::init(
        Layout::joint(n_hru, false),
        &snowy_states(n_hru),
        &params,
        NoiseConfig::default(),
        30,
        &cfg,
    )
    .unwrap();
    for d in 0..10 {
        e.forecast(&b, &day(d, 0.4, n_hru), &cfg).unwrap();
        // far outside the ensemble, pushes members across bounds
        let obs = observe(&e.layout, &[Some(0.0), Some(80.0)], Some(0.0), &e.noise).unwrap();
        e.analysis(&obs, 2, &NoLocalization).unwrap();
        for m in &e.members {
            assert!(validate_parameters(&m.params).is_empty());
            assert!(m.prev_runoff >= 0.0 && m.current_runoff >= 0.0);
            let bounds = StateBounds::from_parameters(&m.params, cfg.recharge_fraction, cfg.storage_cap);
            for (s, bd) in m.states.iter().zip(&bounds) {
                assert_eq!(&clamp_state(s, bd), s);
            }
        }
    }
}

#[test]
fn analysis_reports_both_spreads() {
    let n_hru = 2;
    let b = basin(n_hru);
    let cfg = ModelConfig::default();
    let params = ParameterSet::nominal(n_hru, Registry::default());
    let mut e = Ensemble::init(
        Layout::state_only(n_hru, false),
        &snowy_states(n_hru),
        &params,
        NoiseConfig::default(),
        40,
        &cfg,
    )
    .unwrap();
    e.forecast(&b, &day(0, 0.8, n_hru), &cfg).unwrap();
    let obs = observe(&e.layout, &[Some(5.5), Some(6.5)], None, &e.noise).unwrap();
    let r = e.analysis(&obs, 2, &NoLocalization).unwrap();
    let swe = e.layout.swe_slot(0).unwrap();
    assert!(r.pre_inflation_sd[swe] > 0.0);
    assert!(r.post_inflation_sd[swe] > r.pre_inflation_sd[swe]);
    assert!(e.analysis(&ObservationBatch::new(), 2, &NoLocalization).is_err());
}

fn collapsed_joint(value: f64) -> Ensemble {
    let params = ParameterSet::nominal(1, Registry::default());
    let mut e = Ensemble::init(
        Layout::joint(1, false),
        &snowy_states(1),
        &params,
        NoiseConfig::default(),
        50,
        &ModelConfig::default(),
    )
    .unwrap();
    for m in &mut e.members {
        m.params.set(Param::GwflowCoef, vec![value]);
    }
    e
}

#[test]
fn collapsed_parameter_is_redrawn_to_target() {
    let mut e = collapsed_joint(0.2);
    let slot = Slot::HruParam {
        hru: 0,
        param: Param::GwflowCoef,
    };
    let spec = Registry::default().spec(Param::GwflowCoef);
    let target = 0.25 * 0.25 * spec.range();
    let rows = e.reinflate_parameters(1);
    assert!(rows.contains(&e.layout.position(slot).unwrap()));
    let sd = e.slot_sd(&slot, 1);
    assert!((sd - target).abs() < 1e-9 * target.max(1.0), "sd {sd} target {target}");
    assert!((e.slot_mean(&slot, 1) - 0.2).abs() < 1e-12);
}

#[test]
fn spread_at_or_above_target_is_untouched() {
    let spec = Registry::default().spec(Param::GwflowCoef);
    let target = 0.25 * 0.25 * spec.range();
    for factor in [1.0, 2.0] {
        let mut e = collapsed_joint(0.2);
        let slot = Slot::HruParam {
            hru: 0,
            param: Param::GwflowCoef,
        };
        // an exact +-a pattern has sample sd a * sqrt(n / (n - 1))
        let n = e.len() as f64;
        let a = factor * target * ((n - 1.0) / n).sqrt();
        for (i, m) in e.members.iter_mut().enumerate() {
            let sign = if i % 2 == 0 { 1.0 } else { -1.0 };
            m.params.set(Param::GwflowCoef, vec![0.2 + sign * a]);
        }
        let before: Vec<f64> = e.slot_values(&slot, 1);
        let sd = sample_sd(&before);
        if sd >= target {
            let rows = e.reinflate_parameters(1);
            assert!(!rows.contains(&e.layout.position(slot).unwrap()));
            assert_eq!(e.slot_values(&slot, 1), before);
        }
    }
}

#[test]
fn same_seed_same_experiment() {
    let run = || {
        let n_hru = 2;
        let b = basin(n_hru);
        let cfg = ModelConfig::default();
        let params = ParameterSet::nominal(n_hru, Registry::default());
        let mut e = Ensemble::init(
            Layout::joint(n_hru, false),
            &snowy_states(n_hru),
            &params,
            NoiseConfig::default(),
            20,
            &cfg,
        )
        .unwrap();
        for d in 0..15 {
            e.forecast(&b, &day(d, 0.2, n_hru), &cfg).unwrap();
            let obs = observe(&e.layout, &[Some(5.0), Some(6.0)], Some(20.0), &e.noise).unwrap();
            e.analysis(&obs, 2, &NoLocalization).unwrap();
            e.reinflate_parameters(2);
        }
        e.members
    };
    assert_eq!(run(), run());
}

/// Identity model, one scalar slot, Gaussian prior and observation error:
/// the stochastic EnKF posterior must match the closed-form Kalman filter.
#[test]
fn scalar_posterior_matches_kalman_filter() {
    let n = 10_000;
    let (mu0, p0, y, r): (f64, f64, f64, f64) = (2.0, 4.0, 5.0, 1.0);
    let k = p0 / (p0 + r);
    let mu_a = mu0 + k * (y - mu0);
    let p_a = (1.0 - k) * p0;

    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let prior = Normal::new(mu0, p0.sqrt()).unwrap();
    let obs_noise = Normal::new(0.0, r.sqrt()).unwrap();
    let x = DMatrix::from_fn(1, n, |_, _| prior.sample(&mut rng));
    let chi = DMatrix::from_fn(1, n, |_, _| obs_noise.sample(&mut rng));
    let layout = Layout::state_only(1, false);
    let mut obs = ObservationBatch::new();
    obs.push_slot(&layout, 0, y, r.sqrt()).unwrap();
    let (xa, _) = enkf_update(&x, &layout, &obs, &chi, &NoLocalization);

    let values: Vec<f64> = xa.iter().copied().collect();
    let mean = values.iter().sum::<f64>() / n as f64;
    let var = sample_sd(&values).powi(2);
    let se_mean = (p_a / n as f64).sqrt();
    let se_var = p_a * (2.0 / (n as f64 - 1.0)).sqrt();
    assert!((mean - mu_a).abs() < 3.0 * se_mean, "mean {mean} vs {mu_a}");
    assert!((var - p_a).abs() < 3.0 * se_var, "var {var} vs {p_a}");
}

#[test]
fn analysis_moves_mean_toward_observation() {
    let layout = Layout::state_only(1, false);
    let mut closer = 0;
    for seed in 0..50u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let prior = Normal::new(0.0, 1.0).unwrap();
        let x = DMatrix::from_fn(1, 40, |_, _| prior.sample(&mut rng));
        let chi = DMatrix::from_fn(1, 40, |_, _| prior.sample(&mut rng) * 0.5);
        let mut obs = ObservationBatch::new();
        obs.push_slot(&layout, 0, 1.5, 0.5).unwrap();
        let (xa, _) = enkf_update(&x, &layout, &obs, &chi, &NoLocalization);
        let mf = x.mean();
        let ma = xa.mean();
        if (ma - 1.5).abs() <= (mf - 1.5).abs() {
            closer += 1;
        }
    }
    assert!(closer >= 48, "{closer} of 50");
}

#[test]
fn observation_error_basis() {
    let n_hru = 2;
    let params = ParameterSet::nominal(n_hru, Registry::default());
    let states = snowy_states(n_hru);
    let cfg = ModelConfig::default();
    let mut noise = NoiseConfig::zero(3);
    let e = Ensemble::init(Layout::joint(n_hru, false), &states, &params, noise, 4, &cfg).unwrap();
    // members all hold SWE 5 and 6; observe 8 and 0
    let b = e.observe(&[Some(8.0), Some(0.0)], Some(100.0), 2).unwrap();
    assert!((b.obs[0].sd - 0.5).abs() < 1e-12);
    assert!((b.obs[1].sd - 0.6).abs() < 1e-12);
    // runoff slots start at zero, so the floor applies
    assert_eq!(b.obs[2].sd, 0.01);

    noise.obs_error_basis = snowcast_enkf::ErrorBasis::Observed;
    let e = Ensemble::init(Layout::joint(n_hru, false), &states, &params, noise, 4, &cfg).unwrap();
    let b = e.observe(&[Some(8.0), Some(0.0)], Some(100.0), 2).unwrap();
    assert_eq!(
        b,
        observe(&e.layout, &[Some(8.0), Some(0.0)], Some(100.0), &noise).unwrap()
    );
    assert!((b.obs[0].sd - 0.8).abs() < 1e-12);
    assert_eq!(b.obs[1].sd, 0.01);
    assert!((b.obs[2].sd - 0.5).abs() < 1e-12);
}

#[test]
fn rounding_level_spread_is_treated_as_collapsed() {
    let mut e = collapsed_joint(0.2);
    let slot = Slot::HruParam {
        hru: 0,
        param: Param::GwflowCoef,
    };
    for (i, m) in e.members.iter_mut().enumerate() {
        let ulp = 0.2f64.next_up() - 0.2;
        m.params.set(Param::GwflowCoef, vec![0.2 + (i % 3) as f64 * ulp]);
    }
    let target = 0.25 * 0.25 * Registry::default().spec(Param::GwflowCoef).range();
    e.reinflate_parameters(1);
    let values = e.slot_values(&slot, 1);
    let sd = sample_sd(&values);
    assert!((sd - target).abs() < 1e-9 * target, "sd {sd} target {target}");
    let mut distinct = values.clone();
    distinct.sort_by(f64::total_cmp);
    distinct.dedup();
    assert!(distinct.len() > 10);
}
