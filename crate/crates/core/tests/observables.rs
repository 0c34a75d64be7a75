use dephasim::numerics::QuadratureSpec;
use dephasim::observables::{
    damped_pattern, erf_integral_identity, fringe_envelope, linear_entropy_closed_form,
    linear_entropy_closed_form_at, linear_entropy_oracle, mc_gaussian_entropy,
    purity_gaussian_oracle_at, GaussianPacket, MomentumGrid, PlaneWavePair,
};
use dephasim::profiles::{builtin_profiles, BuiltinParams};
use dephasim::{DecoherenceProfile, McConfig, Regime, SeedSpec};
use proptest::prelude::*;

proptest! {
    #[test]
    fn envelope_bounds_the_fringes(
        k1 in -3.0..3.0f64, k2 in -3.0..3.0f64, m in 0.2..4.0f64,
        x in -20.0..20.0f64, t in 0.0..10.0f64, kind in 0usize..4,
    ) {
        let pair = PlaneWavePair::new(k1, k2, m).unwrap();
        let profile = builtin_profiles(BuiltinParams::default()).unwrap()[kind].clone();
        let env = fringe_envelope(t, &pair, &profile).unwrap();
        let v = damped_pattern(x, t, &pair, &profile).unwrap();
        prop_assert!((v - 1.0).abs() <= env * (1.0 + 1e-15));
        prop_assert!((0.0..=1.0).contains(&env));
    }

    #[test]
    fn closed_form_is_an_entropy(lambda in 0.0..1e6f64, s0 in 0.1..3.0f64, m in 0.1..3.0f64) {
        let packet = GaussianPacket::new(s0, m).unwrap();
        let s = linear_entropy_closed_form_at(lambda, &packet).unwrap();
        prop_assert!((0.0..=1.0).contains(&s));
    }
}

#[test]
fn entropy_starts_at_zero_and_never_decreases() {
    let packet = GaussianPacket::new(1.0, 1.0).unwrap();
    for profile in builtin_profiles(BuiltinParams::default()).unwrap() {
        assert_eq!(linear_entropy_oracle(0.0, &packet, &profile).unwrap(), 0.0);
        let mut last = 0.0;
        for k in 1..=60 {
            let t = 0.25 * k as f64;
            let s = linear_entropy_oracle(t, &packet, &profile).unwrap();
            assert!((0.0..=1.0).contains(&s));
            assert!(s >= last, "{} at t = {t}: {s} < {last}", profile.label());
            last = s;
        }
    }
}

#[test]
fn sub_markovian_entropy_saturates_below_one() {
    let packet = GaussianPacket::new(1.0, 1.0).unwrap();
    let profile = DecoherenceProfile::sub_markovian(1.0, 0.5).unwrap();
    let limit = profile.lambda_limit().unwrap();
    assert_eq!(limit, 1.0);
    let s_inf = linear_entropy_closed_form_at(limit, &packet).unwrap();
    assert!(s_inf < 1.0);
    let mut last_gap = f64::INFINITY;
    for t in [1.0, 2.0, 4.0, 8.0, 16.0, 32.0] {
        let gap = (linear_entropy_closed_form(t, &packet, &profile).unwrap() - s_inf).abs();
        assert!(gap < last_gap);
        last_gap = gap;
    }
    assert!(last_gap < 1e-9);
}

#[test]
fn calibrated_regimes_order_the_entropy() {
    let packet = GaussianPacket::new(1.0, 1.0).unwrap();
    let s = |r| linear_entropy_oracle(10.0, &packet, &DecoherenceProfile::calibrated(r)).unwrap();
    let (two, markov, one, sub) = (
        s(Regime::SuperMarkovianII),
        s(Regime::Markovian),
        s(Regime::SuperMarkovianI),
        s(Regime::SubMarkovian),
    );
    assert!(two >= markov && markov >= one && one >= sub, "{two} {markov} {one} {sub}");
}

#[test]
fn closed_form_matches_double_integral_on_random_triples() {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
    let spec = QuadratureSpec::two_dimensional();
    for _ in 0..10 {
        let s0 = rng.random_range(0.2..2.0);
        let m = rng.random_range(0.2..2.0);
        let lambda = 10f64.powf(rng.random_range(-3.0..3.0));
        let packet = GaussianPacket::new(s0, m).unwrap();
        let exact = 1.0 - purity_gaussian_oracle_at(lambda, &packet, &spec).unwrap();
        let closed = linear_entropy_closed_form_at(lambda, &packet).unwrap();
        assert!((exact - closed).abs() < 1e-5, "({s0}, {m}, {lambda})");
    }
}

#[test]
fn double_integral_resolves_a_narrow_dephasing_peak() {
    // κ ≈ 0.0198; reference from 30-digit quadrature of the reduced integral
    let packet = GaussianPacket::new(0.3918786528491691, 0.5615156315082303).unwrap();
    let lambda = 608.5577670702737;
    let reference = 0.957_655_714_101_278;
    let oracle = 1.0 - purity_gaussian_oracle_at(lambda, &packet, &QuadratureSpec::two_dimensional()).unwrap();
    assert!((oracle - reference).abs() < 1e-9, "{oracle}");
    assert!((linear_entropy_closed_form_at(lambda, &packet).unwrap() - reference).abs() < 1e-12);
}

#[test]
fn erf_identity_holds_on_the_reference_set() {
    for z in [0.1, 1.0, 4.0, 25.0] {
        let id = erf_integral_identity(z).unwrap();
        assert!(id.discrepancy() < 1e-8, "z = {z}: {id:?}");
    }
}

#[test]
fn monte_carlo_entropy_on_a_non_markovian_profile() {
    let packet = GaussianPacket::new(0.8, 1.5).unwrap();
    let profile = DecoherenceProfile::super_markovian_ii(0.7).unwrap();
    let grid = MomentumGrid::for_packet(&packet);
    let cfg = McConfig::new(3000, SeedSpec::new(91));
    let t = 1.5;
    let est = mc_gaussian_entropy(t, &packet, &profile, &grid, &cfg).unwrap();
    let oracle = linear_entropy_oracle(t, &packet, &profile).unwrap();
    assert!((est.mean - oracle).abs() <= 3.0 * est.std_err + 1e-4, "{est:?} vs {oracle}");
}
