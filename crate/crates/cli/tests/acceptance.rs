//! Acceptance criteria. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any criterion fails. Tolerances are fixed here.

use std::f64::consts::PI;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use bridgetail::{run, Command, RunConfig};
use bridgetail_core::asymptotics::{analyze, analyze_with, AnalyzeOptions, TailLaw};
use bridgetail_core::kernel::{
    h_transform_bridge, phase_stationary_measure, transience_sum, FreeKernel, HomogeneousChain,
};
use bridgetail_core::laurent::LaurentPoly;
use bridgetail_core::models::{
    bathroom_cubic_root, bathroom_kernel, jackson_kernel, traffic_solve, BathroomSpec, JacksonSpec,
};
use bridgetail_core::spectral::{
    classify, psi_cross_check, solve_bridge_point, Regime, DEFAULT_TOL,
};
use bridgetail_core::verify::{
    back_solve_f, convexity_check, estimate_f, fit_tail, greens_dp, harmonic_for,
    harmonic_residual, ratio_limit_check, richardson, truncated_stationary, GreensOptions,
    McOptions, RatioQuery, Stationary,
};

struct Outcome {
    pass: bool,
    detail: String,
}

fn lp(t: &[(i32, f64)]) -> LaurentPoly {
    LaurentPoly::new(t.iter().copied()).unwrap()
}

fn synthetic(p0: f64) -> FreeKernel {
    FreeKernel::new(
        lp(&[(0, 0.25)]),
        lp(&[(0, 0.25)]),
        lp(&[(1, 0.5)]),
        lp(&[(0, p0)]),
        lp(&[(1, 0.5)]),
        0.5 - p0,
    )
    .unwrap()
}

fn rel(a: f64, b: f64) -> f64 {
    (a / b - 1.0).abs()
}

fn bathroom(nu: f64, alpha: f64, beta: f64) -> FreeKernel {
    bathroom_kernel(&BathroomSpec { nu, alpha, beta })
        .unwrap()
        .kernel
}

fn jackson(mu: f64, mu1_star: f64) -> JacksonSpec {
    JacksonSpec {
        lam1: 0.2,
        lam2: 0.1,
        mu1: mu,
        mu2: mu,
        mu1_star,
        r12: 0.1,
        r21: 0.1,
    }
}

fn criterion_1() -> Outcome {
    let (nu, alpha, beta) = (0.2, 0.5, 0.3);
    let k = bathroom(nu, alpha, beta);
    let z = bathroom_cubic_root(&BathroomSpec { nu, alpha, beta }).unwrap();
    let tp = solve_bridge_point(&k).unwrap();
    let law = analyze(&k).unwrap();
    let root_err = (z - tp.theta1.exp()).abs();
    let kappa_err = (law.twisted.kappa - (beta * (-law.theta2).exp() - beta)).abs();
    let slope = 1.0 - (beta / nu).sqrt() * z.powf(-0.5);
    let mut printed_err: f64 = 0.0;
    let mut derived_err: f64 = 0.0;
    for y in 0..=20 {
        let yf = y as f64;
        let printed = z.powf(yf / 2.0) * (1.0 + slope * yf);
        let derived = (nu * z / beta).powf(yf / 2.0) * (1.0 + slope * yf);
        printed_err = printed_err.max(rel(law.profile.eval(y), printed));
        derived_err = derived_err.max(rel(law.profile.eval(y), derived));
    }
    Outcome {
        pass: law.regime == Regime::Bridge && root_err < 1e-10 && kappa_err < 1e-12 && printed_err < 1e-10,
        detail: format!(
            "root diff {root_err:.2e} (<1e-10), kappa diff {kappa_err:.2e} (<1e-12), \
             profile vs (a3')^(y/2)(1+(1-sqrt(b/n)a3'^(-1/2))y) max rel {printed_err:.3e} (<1e-10); \
             with the (nu/beta)^(y/2) factor restored: {derived_err:.2e}"
        ),
    }
}

fn criterion_2() -> Outcome {
    let law = analyze(&bathroom(0.2, 0.3, 0.5)).unwrap();
    let t1 = (law.theta1 - 1.5f64.ln()).abs();
    let t2 = law.theta2.abs();
    let d = (law.dtilde.unwrap_or(f64::NAN) - 0.1).abs();
    let ratio_err = (0..20)
        .map(|y| (law.profile.eval(y + 1) / law.profile.eval(y) - 0.6).abs())
        .fold(0.0, f64::max);
    Outcome {
        pass: law.regime == Regime::Jitter
            && t1 < 1e-10
            && t2 < 1e-10
            && d < 1e-10
            && ratio_err < 1e-12,
        detail: format!(
            "theta1 err {t1:.2e}, theta2 err {t2:.2e}, dtilde err {d:.2e} (all <1e-10), \
             profile ratio err {ratio_err:.2e} (<1e-12)"
        ),
    }
}

fn criterion_3() -> Outcome {
    let spec = jackson(0.35, 0.35);
    let d = traffic_solve(&spec).unwrap();
    let k = jackson_kernel(&spec).unwrap().kernel;
    let law = analyze_with(
        &k,
        &AnalyzeOptions {
            cascade_ratio: Some(d.rho2),
            ..Default::default()
        },
    )
    .unwrap();
    let rate_err = (law.theta1 - (33.0f64 / 20.0).ln()).abs();
    let tc = law.twisted;
    let rho2_err = ((-law.theta2).exp() * tc.p / tc.q - 80.0 / 231.0).abs();
    let st = truncated_stationary(&k, 80, 80).unwrap();
    let (r1, r2) = (20.0f64 / 33.0, 80.0f64 / 231.0);
    let mut pf_err: f64 = 0.0;
    for x in 0..=40 {
        for y in 0..=40 {
            let pf = (1.0 - r1) * r1.powi(x as i32) * (1.0 - r2) * r2.powi(y as i32);
            pf_err = pf_err.max(rel(st.at(x, y), pf));
        }
    }
    Outcome {
        pass: rate_err < 1e-9 && rho2_err < 1e-9 && pf_err <= 1e-6,
        detail: format!(
            "rate err {rate_err:.2e} (<1e-9), e^-theta2 p/q - 80/231 = {rho2_err:.2e} (<1e-9), \
             80x80 product-form max rel {pf_err:.2e} (<=1e-6)"
        ),
    }
}

fn criterion_4() -> Outcome {
    let g = greens_dp(&synthetic(0.25), &GreensOptions::new(800)).unwrap();
    let ratio = g.values[800] / g.values[400];
    let ratio_err = rel(ratio, 2f64.powf(-1.5));
    let fit = fit_tail(&g.values, (100, 400)).unwrap();
    let scaled = |l: usize| g.values[l] * (l as f64).powf(1.5);
    let r = richardson(scaled(200), scaled(400), scaled(800));
    let c_plus = 4.0 / (2.0 * PI).sqrt();
    let level_err = rel(r, c_plus);
    let resid_ok = g.residual_mass < 1e-6 * g.total_visits();
    Outcome {
        pass: ratio_err <= 0.02
            && (-1.65..=-1.35).contains(&fit.exponent)
            && level_err <= 0.05
            && resid_ok,
        detail: format!(
            "G(800)/G(400) = {ratio:.6} (2^-1.5 within {ratio_err:.2e}, <=2%), fit exponent {:.4} \
             in [-1.65,-1.35], Richardson G l^1.5 = {r:.5} vs C+ {c_plus:.5} ({level_err:.2e}, <=5%), \
             residual {:.1e}",
            fit.exponent, g.residual_mass
        ),
    }
}

fn criterion_5() -> Outcome {
    let text = r#"{"model":"generic","generic":{"P":{"0":0.25},"Q":{"0":0.25},"S":{"1":0.5},
        "P0":{"0":0.5},"S0":{"1":0.5},"twisted":true},"options":{"lmax":800}}"#;
    let cfg = RunConfig::from_text(text).unwrap();
    let report = run(Command::Greens, &cfg).unwrap();
    let g = report.verification.greens.as_ref().unwrap();
    let winner = g.winner;
    let loser = g.candidates.iter().find(|c| Some(c.name) != winner);
    let won = g.candidates.iter().find(|c| Some(c.name) == winner);
    let per_level_ok = won
        .map(|w| g.levels.iter().all(|l| rel(l.scaled, w.value) <= 0.05))
        .unwrap_or(false);
    let loser_dev = loser.map(|c| c.deviation).unwrap_or(f64::NAN);
    Outcome {
        pass: winner.is_some() && per_level_ok && loser_dev > 0.4,
        detail: format!(
            "levels {:?}, winner {:?} (value {:.5}), losing constant {} off by {:.1}% (>40%)",
            g.levels
                .iter()
                .map(|l| (l.level, (l.scaled * 1e5).round() / 1e5))
                .collect::<Vec<_>>(),
            winner,
            won.map(|w| w.value).unwrap_or(f64::NAN),
            loser.map(|c| c.name).unwrap_or("-"),
            100.0 * loser_dev
        ),
    }
}

/// The modified Jackson instance: the first `μ₁*` on a 0.05 grid from 0.4
/// that classifies as bridge, and the regime boundary found by bisection.
struct Modified {
    spec: JacksonSpec,
    kernel: FreeKernel,
    boundary: f64,
    law: TailLaw,
    st: Stationary,
}

fn modified_instance() -> Modified {
    let regime = |m: f64| {
        let k = jackson_kernel(&jackson(0.3, m)).unwrap().kernel;
        classify(&k, DEFAULT_TOL).unwrap().regime
    };
    let mut m = 0.4;
    let mut prev = m;
    while regime(m) != Regime::Bridge {
        prev = m;
        m = ((m + 0.05) * 100.0f64).round() / 100.0;
        assert!(m < 2.0, "no bridge regime on the scan");
    }
    let (mut lo, mut hi) = (prev, m);
    for _ in 0..50 {
        let mid = 0.5 * (lo + hi);
        if regime(mid) == Regime::Bridge {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let spec = jackson(0.3, m);
    let d = traffic_solve(&spec).unwrap();
    let kernel = jackson_kernel(&spec).unwrap().kernel;
    let law = analyze_with(
        &kernel,
        &AnalyzeOptions {
            cascade_ratio: Some(d.rho2),
            ..Default::default()
        },
    )
    .unwrap();
    let st = truncated_stationary(&kernel, 320, 60).unwrap();
    Modified {
        spec,
        kernel,
        boundary: 0.5 * (lo + hi),
        law,
        st,
    }
}

fn criterion_6(m: &Modified) -> Outcome {
    let law = &m.law;
    let row0 = m.st.row(0);
    let fit = fit_tail(&row0, (80, 240)).unwrap();
    let rate_err = rel(fit.rate, law.theta1);
    let expo_err = (fit.exponent + 1.5).abs();
    let base = m.st.at(200, 0);
    let mut lin: f64 = 0.0;
    let mut sq: f64 = 0.0;
    let tc = law.twisted;
    for y in 0..=10 {
        let obs = m.st.at(200, y) / base;
        lin = lin.max(rel(obs, law.profile.eval(y) / law.profile.eval(0)));
        let squared = if y == 0 {
            1.0
        } else {
            let a = 1.0 + tc.kappa * y as f64 / tc.p0;
            (-law.theta2 * y as f64).exp() * tc.p0 / tc.u * a * a
        };
        sq = sq.max(rel(obs, squared));
    }
    Outcome {
        pass: law.regime == Regime::Bridge && rate_err <= 0.01 && expo_err <= 0.15 && lin <= 0.10,
        detail: format!(
            "mu1*={} (bridge boundary {:.6}), kappa {:.4e}, fit rate {:.6} vs theta1 {:.6} ({:.2e}, <=1%), \
             exponent {:.4} (|+1.5| = {expo_err:.3}, <=0.15), profile at l=200 y<=10 max rel {lin:.3} (<=0.10; \
             squared variant {sq:.3})",
            m.spec.mu1_star, m.boundary, tc.kappa, fit.rate, law.theta1, rate_err, fit.exponent
        ),
    }
}

fn criterion_7(m: &Modified) -> Outcome {
    let (i, _) = m.kernel.twist(m.law.theta1, m.law.theta2).unwrap();
    let est = estimate_f(&m.law, &m.st.column(0), &i, &McOptions::default()).unwrap();
    let (median, vals) = back_solve_f(&m.law, &m.st.row(0), (80, 240)).unwrap();
    let n = vals.len() as f64;
    let mean = vals.iter().sum::<f64>() / n;
    let sd = (vals.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0)).sqrt();
    let combined = (est.estimate.se.powi(2) + sd * sd / n).sqrt();
    let diff = (est.estimate.value - median).abs();
    let tol = (3.0 * combined).max(0.1 * median);
    Outcome {
        pass: diff <= tol,
        detail: format!(
            "Monte Carlo f = {:.5} +- {:.5} ({} paths), back-solved f = {median:.5} \
             (range {:.5}..{:.5} over l in [80,240]); |diff| {diff:.5} vs allowed {tol:.5}",
            est.estimate.value,
            est.estimate.se,
            est.paths,
            vals.iter().cloned().fold(f64::INFINITY, f64::min),
            vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
        ),
    }
}

fn criterion_8() -> Outcome {
    let mut fails = Vec::new();
    let mut check = |name: &str, ok: bool| {
        if !ok {
            fails.push(name.to_string());
        }
    };

    let bridge = bathroom(0.2, 0.5, 0.3);
    let jitter = bathroom(0.2, 0.3, 0.5);
    let pure = jackson_kernel(&jackson(0.35, 0.35)).unwrap().kernel;
    let modified = jackson_kernel(&jackson(0.3, 0.6)).unwrap().kernel;
    let mut worst_harmonic: f64 = 0.0;
    for (name, k) in [
        ("bathroom bridge", &bridge),
        ("bathroom jitter", &jitter),
        ("pure jackson", &pure),
        ("modified jackson", &modified),
    ] {
        let law = analyze(k).unwrap();
        let grid: Vec<f64> = (0..21)
            .map(|j| -1.0 + (law.theta1 + 1.5) * j as f64 / 20.0)
            .collect();
        check(
            &format!("convexity {name}"),
            convexity_check(k, &grid).unwrap(),
        );
        let r = harmonic_residual(k, &harmonic_for(&law), 200);
        worst_harmonic = worst_harmonic.max(r);
        check(&format!("harmonic {name}"), r < 1e-12);
    }

    let bl = analyze(&bridge).unwrap();
    let (bi, _) = bridge.twist(bl.theta1, bl.theta2).unwrap();
    let mut worst_phi: f64 = 0.0;
    for tc in [synthetic(0.25).constants(), bl.twisted] {
        let phi = phase_stationary_measure(Regime::Bridge, &tc).unwrap();
        let r = phi.stationarity_residual(&h_transform_bridge(&tc).unwrap(), 100);
        worst_phi = worst_phi.max(r);
    }
    let jl = analyze(&jitter).unwrap();
    let phi = phase_stationary_measure(Regime::Jitter, &jl.twisted).unwrap();
    worst_phi = worst_phi.max(phi.stationarity_residual(&HomogeneousChain::from(&jl.twisted), 100));
    check("phi stationarity", worst_phi < 1e-12);

    let mut worst_psi: f64 = 0.0;
    for i in [&synthetic(0.25), &bi] {
        for u in [0.5, 0.9] {
            let (series, closed) = psi_cross_check(i, u, 4000).unwrap();
            worst_psi = worst_psi.max((series - closed).abs());
        }
    }
    check("psi series", worst_psi < 1e-8);

    let (p0, kappa) = (0.25, 0.25);
    let n = 1_000_000u64;
    let partial: f64 = (1..=n)
        .rev()
        .map(|m| {
            let m = m as f64;
            p0 * (p0 + kappa) / ((p0 + kappa * m) * (p0 + kappa * (m + 1.0)))
        })
        .sum();
    let tail = p0 * (p0 + kappa) / (kappa * (p0 + kappa * (n as f64 + 1.0)));
    let trans_err = (partial + tail - transience_sum(p0, kappa)).abs();
    check(
        "transience sum",
        trans_err < 1e-9 && (transience_sum(p0, kappa) - p0 / kappa).abs() < 1e-9,
    );

    let i = synthetic(0.25);
    let tc = i.constants();
    let phi = phase_stationary_measure(Regime::Bridge, &tc).unwrap();
    let q = [RatioQuery {
        start_a: (0, 0),
        target_a: 1,
        start_b: (0, 0),
        target_b: 0,
    }];
    let row = ratio_limit_check(&i, &phi, tc.kappa / tc.p0, &q, 400).unwrap()[0];
    check(
        "ratio limit",
        row.rel_err() <= 0.10 && (row.expected - 4.0).abs() < 1e-12,
    );

    Outcome {
        pass: fails.is_empty(),
        detail: format!(
            "harmonic max {worst_harmonic:.1e}, phi stationarity max {worst_phi:.1e}, psi max {worst_psi:.1e}, \
             transience {trans_err:.1e}, ratio phi(1)/phi(0): dp {:.4} vs {:.1}{}",
            row.dp,
            row.expected,
            if fails.is_empty() { String::new() } else { format!("; failing: {}", fails.join(", ")) }
        ),
    }
}

fn timed(f: impl FnOnce() -> Outcome) -> (Outcome, Duration) {
    let t = Instant::now();
    let o = f();
    (o, t.elapsed())
}

fn main() -> ExitCode {
    let mut all = true;
    let mut report = |n: u32, limit: Duration, (o, dt): (Outcome, Duration)| {
        let pass = o.pass && dt < limit;
        all &= pass;
        println!(
            "criterion {n}: {} [{:.2}s, limit {}s] {}",
            if pass { "PASS" } else { "FAIL" },
            dt.as_secs_f64(),
            limit.as_secs(),
            o.detail
        );
    };
    report(1, Duration::from_secs(1), timed(criterion_1));
    report(2, Duration::from_secs(1), timed(criterion_2));
    report(3, Duration::from_secs(60), timed(criterion_3));
    report(4, Duration::from_secs(120), timed(criterion_4));
    report(5, Duration::from_secs(120), timed(criterion_5));
    let t = Instant::now();
    let m = modified_instance();
    let setup = t.elapsed();
    let (o6, dt6) = timed(|| criterion_6(&m));
    report(6, Duration::from_secs(600), (o6, dt6 + setup));
    report(7, Duration::from_secs(300), timed(|| criterion_7(&m)));
    report(8, Duration::from_secs(300), timed(criterion_8));
    if all {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
