use asianrec::domain::{discounted_forward_average, sure_exercise_value, CurveTolerances};
use asianrec::european::{bs_call, bs_greeks, norm_pdf};
use asianrec::quad::simpson;
use asianrec::recursion::{
    base_curve, expect_via_options, seasoned_price, second_derivative, AsianEngine,
    RecursionConfig, Stencil,
};
use asianrec::{
    BlackScholesPricer, FftConfig, GridSpec, Market, ModelParams, NormalizedCurve, PricingError,
    Schedule, UniformGrid,
};

const R: f64 = 0.05;
const DAY: f64 = 1.0 / 365.0;

fn bs() -> ModelParams {
    ModelParams::BlackScholes { sigma: 0.2 }
}

fn bs_engine(tau: f64) -> AsianEngine {
    AsianEngine::for_model(
        &bs(),
        R,
        tau,
        RecursionConfig::for_model(&bs()),
        &FftConfig::default(),
    )
    .unwrap()
}

fn sampled(grid: UniformGrid, f: impl Fn(f64) -> f64) -> NormalizedCurve {
    NormalizedCurve {
        ell: 1,
        w_grid: grid,
        values: grid.points().map(f).collect(),
        second_derivs: Vec::new(),
        truncation_estimate: 0.0,
    }
}

/// Two-fixing Asian call for unit spot, by conditioning on the first log
/// return and integrating the Gaussian density with Simpson.
fn two_fixing_oracle(w: f64, sigma: f64, tau: f64) -> f64 {
    let vol = sigma * tau.sqrt();
    let mu = (R - 0.5 * sigma * sigma) * tau;
    let df = (-R * tau).exp();
    let inner = |s1: f64| {
        let k = 2.0 * w / s1 - 1.0;
        let c = if k <= 0.0 {
            1.0 - df * k
        } else {
            bs_call(1.0, k, R, sigma, tau).unwrap()
        };
        0.5 * s1 * c
    };
    let grid = UniformGrid::new(-10.0, 20.0 / 20_000.0, 20_000);
    df * simpson(&grid, |z| inner((mu + vol * z).exp()) * norm_pdf(z)).unwrap()
}

#[test]
fn base_curve_limits() {
    let pricer = BlackScholesPricer::new(R, 0.2, DAY);
    let grid = UniformGrid::new(0.0, 0.0025, 800);
    let c = base_curve(&pricer, grid).unwrap();
    assert!((c.values[0] - 1.0).abs() < 1e-15);
    assert!(*c.values.last().unwrap() < 1e-12);
}

#[test]
fn second_derivative_of_polynomials() {
    let grid = UniformGrid::new(0.1, 0.01, 100);
    for stencil in [Stencil::ThreePoint, Stencil::FivePoint] {
        let lin = second_derivative(sampled(grid, |w| 3.0 - 2.0 * w), stencil, false).unwrap();
        assert!(lin.second_derivs.iter().all(|d| d.abs() < 1e-9));
        let quad = second_derivative(sampled(grid, |w| w * w), stencil, false).unwrap();
        assert!(quad.second_derivs.iter().all(|d| (d - 2.0).abs() < 1e-8));
    }
    let short = sampled(UniformGrid::new(0.1, 0.1, 3), |w| w);
    assert!(matches!(
        second_derivative(short, Stencil::FivePoint, true),
        Err(PricingError::GridTooCoarse(4))
    ));
}

#[test]
fn second_derivative_matches_closed_form_density() {
    let tau = 90.0 / 365.0;
    let pricer = BlackScholesPricer::new(R, 0.2, tau);
    let grid = UniformGrid::new(0.0025, 0.0025, 800);
    let c =
        second_derivative(base_curve(&pricer, grid).unwrap(), Stencil::FivePoint, true).unwrap();
    for (i, w) in grid.points().enumerate() {
        if !(0.5..=1.5).contains(&w) {
            continue;
        }
        let exact = bs_greeks(1.0, w, R, 0.2, tau).unwrap().dstrike2;
        let err = (c.second_derivs[i] - exact).abs();
        assert!(
            err <= 1e-4 * exact.abs() + 1e-6,
            "w={w}: {} vs {exact}",
            c.second_derivs[i]
        );
    }
}

#[test]
fn five_point_beats_three_point_on_one_day_curve() {
    let pricer = BlackScholesPricer::new(R, 0.2, DAY);
    let grid = UniformGrid::new(0.0025, 0.0025, 800);
    let worst = |stencil| {
        let c = second_derivative(base_curve(&pricer, grid).unwrap(), stencil, true).unwrap();
        grid.points()
            .enumerate()
            .filter(|(_, w)| (0.95..=1.05).contains(w))
            .map(|(i, w)| {
                (c.second_derivs[i] - bs_greeks(1.0, w, R, 0.2, DAY).unwrap().dstrike2).abs()
            })
            .fold(0.0, f64::max)
    };
    let (three, five) = (worst(Stencil::ThreePoint), worst(Stencil::FivePoint));
    assert!(five < 0.1 * three, "three {three}, five {five}");
}

#[test]
fn single_fixing_is_the_european_call() {
    let mut e = bs_engine(DAY);
    for i in 0..20 {
        let k = 80.0 + 2.0 * i as f64;
        let exact = bs_call(100.0, k, R, 0.2, DAY).unwrap();
        assert!((e.price(100.0, 1, k).unwrap() - exact).abs() < 1e-8);
    }
}

#[test]
fn two_fixings_match_conditional_oracle() {
    for tau in [DAY, 30.0 / 365.0] {
        let mut e = bs_engine(tau);
        for w in [0.8, 0.9, 0.97, 1.0, 1.03, 1.1, 1.2] {
            let got = e.normalized_value(2, w).unwrap();
            let want = two_fixing_oracle(w, 0.2, tau);
            assert!(
                (got - want).abs() < 2e-6,
                "tau={tau} w={w}: {got} vs {want}"
            );
        }
    }
}

#[test]
fn curves_satisfy_invariants_up_to_ninety_fixings() {
    let mut e = bs_engine(DAY);
    for ell in 1..=90 {
        let c = e.curve(ell).unwrap().clone();
        let bad = c.check_invariants(R, DAY, CurveTolerances::default());
        assert!(bad.is_empty(), "ell={ell}: {:?}", &bad[..bad.len().min(3)]);
    }
}

#[test]
fn zero_volatility_limit_is_sure_exercise() {
    let model = ModelParams::BlackScholes { sigma: 1e-4 };
    let mut e = AsianEngine::for_model(
        &model,
        R,
        DAY,
        RecursionConfig::for_model(&model),
        &FftConfig::default(),
    )
    .unwrap();
    for w in [0.9, 0.95] {
        let want = sure_exercise_value(10, R, DAY, w);
        assert!((e.normalized_value(10, w).unwrap() - want).abs() < 1e-9);
    }
    assert!(e.normalized_value(10, 1.05).unwrap() < 1e-12);
}

#[test]
fn strike_at_or_below_zero_is_analytic() {
    let mut e = bs_engine(DAY);
    let v = e.normalized_value(30, -0.5).unwrap();
    assert!((v - sure_exercise_value(30, R, DAY, -0.5)).abs() < 1e-15);
}

#[test]
fn strike_outside_grid_is_rejected() {
    let mut e = bs_engine(DAY);
    assert!(matches!(
        e.price(100.0, 5, 300.0),
        Err(PricingError::StrikeOutOfGrid { .. })
    ));
    assert!(e.price(100.0, 5, 0.0).is_err());
}

#[test]
fn prices_fall_and_bend_upward_in_strike() {
    let mut e = bs_engine(DAY);
    let prices: Vec<f64> = (0..41)
        .map(|i| e.price(100.0, 30, 80.0 + i as f64).unwrap())
        .collect();
    for w in prices.windows(3) {
        assert!(w[1] <= w[0] + 1e-12);
        assert!(w[0] - 2.0 * w[1] + w[2] >= -1e-6);
    }
}

#[test]
fn seasoned_with_no_fixings_is_the_fresh_price() {
    let mut e = bs_engine(DAY);
    let fresh = e.price(100.0, 20, 100.0).unwrap();
    assert_eq!(e.seasoned_price(100.0, 20, 100.0, &[]).unwrap(), fresh);
}

#[test]
fn seasoned_sure_exercise_cases() {
    let mut e = bs_engine(DAY);
    let n = 10;
    // Observed sum equal to N E leaves a zero effective strike.
    let fixings = vec![100.0; n - 1];
    let v = e.seasoned_price(104.0, n, 90.0, &fixings).unwrap();
    assert!((v - 104.0 / n as f64).abs() < 1e-12, "{v}");
    // A negative effective strike is priced in closed form.
    let fixings = vec![150.0; 4];
    let v = e.seasoned_price(100.0, n, 50.0, &fixings).unwrap();
    let w = (n as f64 * 50.0 - 600.0) / 6.0 / 100.0;
    let want = 0.6 * 100.0 * sure_exercise_value(6, R, DAY, w);
    assert!((v - want).abs() < 1e-12);
}

#[test]
fn seasoned_uses_the_reduced_strike() {
    let mut e = bs_engine(DAY);
    let fixings = [98.0, 101.0, 103.0];
    let reduced = (10.0 * 100.0 - 302.0) / 7.0;
    let want = 0.7 * e.price(100.0, 7, reduced).unwrap();
    let got = e.seasoned_price(100.0, 10, 100.0, &fixings).unwrap();
    assert!((got - want).abs() < 1e-12);
}

#[test]
fn seasoned_rejects_bad_fixings() {
    let mut e = bs_engine(DAY);
    assert!(matches!(
        e.seasoned_price(100.0, 3, 100.0, &[1.0, 2.0, 3.0]),
        Err(PricingError::BadFixings(_))
    ));
    assert!(matches!(
        e.seasoned_price(100.0, 3, 100.0, &[-1.0]),
        Err(PricingError::BadFixings(_))
    ));
}

#[test]
fn free_functions_validate_inputs() {
    let bad = ModelParams::BlackScholes { sigma: -0.2 };
    let err = seasoned_price(
        &bad,
        &Market::new(100.0, R),
        &Schedule::new(5, DAY),
        100.0,
        &[],
        &RecursionConfig::new(GridSpec::black_scholes_default()),
        &FftConfig::default(),
    )
    .unwrap_err();
    assert_eq!(err.name(), "NonPositiveSigma");
}

#[test]
fn delta_matches_bump_and_reprice() {
    let mut e = bs_engine(DAY);
    let n = 20;
    for k in [90.0, 100.0, 110.0] {
        let h = 1e-2;
        let bump =
            (e.price(100.0 + h, n, k).unwrap() - e.price(100.0 - h, n, k).unwrap()) / (2.0 * h);
        let d = e.delta(100.0, n, k).unwrap();
        assert!((d - bump).abs() < 1e-3, "K={k}: {d} vs {bump}");
    }
}

#[test]
fn delta_limits() {
    let mut e = bs_engine(DAY);
    let deep = e.delta(100.0, 10, 50.0).unwrap();
    assert!(
        (deep - discounted_forward_average(10, R, DAY)).abs() < 1e-9,
        "{deep}"
    );
    assert!(e.delta(100.0, 10, 150.0).unwrap().abs() < 1e-9);
}

#[test]
fn options_representation_of_smooth_payoffs() {
    let (sigma, tau, s) = (0.2, 0.25, 100.0);
    let pricer = BlackScholesPricer::new(R, sigma, tau);
    let fwd = s * (R * tau).exp();
    let k_grid = UniformGrid::new(1.0, 299.0 / 29_900.0, 29_900);

    let lin = expect_via_options(|_| 0.0, fwd, &pricer, s, &k_grid).unwrap();
    assert!((lin - fwd).abs() < 1e-10 * fwd);

    let sq = expect_via_options(|_| 2.0, fwd * fwd, &pricer, s, &k_grid).unwrap();
    let want = s * s * ((2.0 * R + sigma * sigma) * tau).exp();
    assert!((sq / want - 1.0).abs() < 1e-6, "{sq} vs {want}");

    // softplus call: g(x) = b ln(1 + e^{(x - 100)/b})
    let b = 2.0;
    let g = |x: f64| b * ((x - 100.0) / b).exp().ln_1p();
    let g2 = |x: f64| {
        let e = ((x - 100.0) / b).exp();
        e / (b * (1.0 + e) * (1.0 + e))
    };
    let got = expect_via_options(g2, g(fwd), &pricer, s, &k_grid).unwrap();
    let vol = sigma * tau.sqrt();
    let mu = (R - 0.5 * sigma * sigma) * tau;
    let z = UniformGrid::new(-10.0, 0.001, 20_000);
    let want = simpson(&z, |z| g(s * (mu + vol * z).exp()) * norm_pdf(z)).unwrap();
    assert!((got / want - 1.0).abs() < 1e-6, "{got} vs {want}");
}

#[test]
fn pricer_put_call_parity_through_engine() {
    let e = bs_engine(DAY);
    let p = e.pricer();
    let c = p.call(1.0, 1.01).unwrap();
    let put = p.put(1.0, 1.01).unwrap();
    assert!((c - put - 1.0 + 1.01 * (-R * DAY).exp()).abs() < 1e-14);
}
