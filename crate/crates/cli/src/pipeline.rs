//! build → classify → analyze → verify.

use bridgetail_core::asymptotics::{
    analyze_with, validity_checks, AnalyzeOptions, Profile, TailLaw,
};
use bridgetail_core::greens::{d_plus, tail_constants, ConstantKind};
use bridgetail_core::kernel::{
    h_transform_bridge, phase_stationary_measure, transience_sum, FreeKernel, HarmonicFunction,
    HomogeneousChain, PhaseMeasure,
};
use bridgetail_core::models::{
    bathroom_cubic_root, bathroom_kernel, boundary_ratio, jackson_kernel, jackson_printed_s0,
    traffic_solve, BathroomSpec, JacksonSpec,
};
use bridgetail_core::spectral::{classify, psi_cross_check, Regime};
use bridgetail_core::verify::{
    back_solve_f, convexity_check, estimate_f, fit_tail, greens_dp, harmonic_for,
    harmonic_residual, ratio_limit_check, richardson, truncated_stationary, GreensOptions,
    McOptions, RatioQuery, SolveMethod, Stationary, COARSE_CUTOFF,
};
use bridgetail_core::Error;

use crate::config::{Model, Options, RunConfig};
use crate::error::CliError;
use crate::report::{
    BackSolve, ConstantCheck, Constants, FReport, Fit, GreensReport, LevelRow, ModelExtras,
    ProfileCheck, ProfileRow, Report, SteadyReport, Suite, Twist, Twisted, Verification,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Analyze,
    Classify,
    Greens,
    Steady,
    EstimateF,
    VerifyAll,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Analyze => "analyze",
            Command::Classify => "classify",
            Command::Greens => "greens",
            Command::Steady => "steady",
            Command::EstimateF => "estimate-f",
            Command::VerifyAll => "verify-all",
        }
    }
}

/// Largest Green's residual, relative to accumulated visits, for an
/// accepted run.
pub const GREENS_RESIDUAL_CAP: f64 = 1e-6;
/// Rows of the profile table.
pub const PROFILE_ROWS: usize = 20;
/// Phases compared in the stationary profile check.
pub const PROFILE_CHECK_Y: usize = 10;

struct Built {
    kernel: FreeKernel,
    normalization: f64,
    cascade_ratio: Option<f64>,
    /// The input is already the twisted kernel.
    twisted: bool,
    jackson: Option<JacksonSpec>,
    extras: ModelExtras,
}

fn build(model: &Model) -> Result<Built, CliError> {
    match model {
        Model::Jackson(b) => {
            let spec: JacksonSpec = (*b).into();
            let d = traffic_solve(&spec)?;
            if !d.stable {
                return Err(Error::Infeasible(format!(
                    "unstable network: rho2 = {}, mu1_star = {} must exceed {}",
                    d.rho2, spec.mu1_star, d.threshold
                ))
                .into());
            }
            let mk = jackson_kernel(&spec)?;
            Ok(Built {
                kernel: mk.kernel,
                normalization: mk.normalization,
                cascade_ratio: Some(d.rho2),
                twisted: false,
                jackson: Some(spec),
                extras: ModelExtras {
                    rho1: Some(d.rho1),
                    rho2: Some(d.rho2),
                    mu1_star_threshold: Some(d.threshold),
                    cascade_ratio: Some(d.rho2),
                    ..Default::default()
                },
            })
        }
        Model::Bathroom(b) => {
            let spec: BathroomSpec = (*b).into();
            let mk = bathroom_kernel(&spec)?;
            let ratio = spec.nu / spec.beta;
            Ok(Built {
                kernel: mk.kernel,
                normalization: mk.normalization,
                cascade_ratio: Some(ratio),
                twisted: false,
                jackson: None,
                extras: ModelExtras {
                    cascade_ratio: Some(ratio),
                    cubic_root: (spec.alpha >= spec.beta)
                        .then(|| bathroom_cubic_root(&spec).ok())
                        .flatten(),
                    ..Default::default()
                },
            })
        }
        Model::Generic(g) => {
            let raw = g.raw()?;
            let kernel = FreeKernel::from_raw(&raw)?;
            if !g.twisted && kernel.kappa != 0.0 {
                return Err(CliError::Config(
                    "generic.kappa > 0 requires \"twisted\": true (free kernels are stochastic)"
                        .into(),
                ));
            }
            Ok(Built {
                kernel,
                normalization: 1.0,
                cascade_ratio: None,
                twisted: g.twisted,
                jackson: None,
                extras: ModelExtras::default(),
            })
        }
    }
}

/// The law and the twisted kernel it was computed on.
struct Analysis {
    law: TailLaw,
    twisted: FreeKernel,
}

/// For an input that is already twisted the law is taken at `θ = (0, 0)`.
fn law_of_twisted(i: &FreeKernel, tol: f64) -> Result<TailLaw, CliError> {
    let mut tc = i.constants();
    let regime = if tc.kappa > tol {
        Regime::Bridge
    } else {
        tc.kappa = 0.0;
        Regime::NullRecurrent
    };
    let c = tail_constants(i, &tc)?;
    let mut law = TailLaw {
        regime,
        theta1: 0.0,
        theta2: 0.0,
        poly_exponent: if regime == Regime::Bridge { -1.5 } else { -0.5 },
        constant: c.value,
        profile: Profile::Bridge {
            theta2: 0.0,
            p0: tc.p0,
            u: tc.u,
            kappa: tc.kappa,
        },
        twisted: tc,
        constants: Some(c),
        dtilde: None,
        dtilde_printed: None,
        f: None,
        warnings: Vec::new(),
    };
    law.warnings = validity_checks(i, &law, None);
    Ok(law)
}

fn analysis(b: &Built, o: &Options) -> Result<Analysis, CliError> {
    if b.twisted {
        return Ok(Analysis {
            law: law_of_twisted(&b.kernel, o.tol)?,
            twisted: b.kernel.clone(),
        });
    }
    let law = analyze_with(
        &b.kernel,
        &AnalyzeOptions {
            tol: o.tol,
            cascade_ratio: b.cascade_ratio,
        },
    )?;
    let (mut i, _) = b.kernel.twist(law.theta1, law.theta2)?;
    if law.regime == Regime::NullRecurrent {
        i.kappa = 0.0;
    }
    Ok(Analysis { law, twisted: i })
}

fn profile_table(law: &TailLaw) -> Vec<ProfileRow> {
    (0..=PROFILE_ROWS)
        .map(|y| ProfileRow {
            y,
            value: law.profile.eval(y),
            squared_variant: squared_profile(law, y),
        })
        .collect()
}

/// The bridge profile with `a₀(y)²` in place of `a₀(y)`.
fn squared_profile(law: &TailLaw, y: usize) -> Option<f64> {
    match law.profile {
        Profile::Bridge {
            theta2,
            p0,
            u,
            kappa,
        } if law.regime == Regime::Bridge => Some(if y == 0 {
            1.0
        } else {
            let a = 1.0 + kappa * y as f64 / p0;
            (-theta2 * y as f64).exp() * p0 / u * a * a
        }),
        _ => None,
    }
}

fn constants_of(b: &Built, a: &Analysis) -> Constants {
    let law = &a.law;
    let c = law.constants;
    let kind = match (law.regime, c.map(|c| c.kind)) {
        (Regime::Jitter, _) => "1/dtilde",
        (_, Some(ConstantKind::Czero)) => "C0",
        _ => "C+",
    };
    let mut extras = b.extras.clone();
    if let Some(spec) = &b.jackson {
        extras.s0_printed = Some(jackson_printed_s0(spec, law.theta1, law.theta2));
        extras.s0_computed = Some(law.twisted.s0);
        extras.boundary_ratio = Some(boundary_ratio(&law.twisted));
    }
    Constants {
        kind,
        value: law.constant,
        poly_exponent: law.poly_exponent,
        c0_rederived: c.and_then(|c| (c.kind == ConstantKind::Czero).then_some(c.value)),
        c0_printed: c.and_then(|c| c.printed_c0),
        c_intermediate: c.and_then(|c| c.intermediate_c),
        dtilde: law.dtilde,
        dtilde_printed: law.dtilde_printed,
        twisted: Twisted::from(&law.twisted),
        model: extras,
    }
}

fn greens_report(a: &Analysis, o: &Options) -> Result<GreensReport, CliError> {
    let law = &a.law;
    if law.regime == Regime::Jitter {
        return Err(CliError::Unsupported(
            "the Green's series oracle applies to the bridge and null-recurrent regimes".into(),
        ));
    }
    let opts = GreensOptions {
        ymax: o.ymax,
        horizon_factor: o.horizon_factor,
        visit_phases: 1,
        ..GreensOptions::new(o.lmax)
    };
    let g = greens_dp(&a.twisted, &opts)?;
    let total = g.total_visits();
    #[allow(clippy::neg_cmp_op_on_partial_ord)]
    if !(g.residual_mass < GREENS_RESIDUAL_CAP * total) {
        return Err(Error::Oracle(format!(
            "Green's series residual {} exceeds {} of accumulated visits {}",
            g.residual_mass, GREENS_RESIDUAL_CAP, total
        ))
        .into());
    }
    let fit = fit_tail(&g.values, o.greens_window())?;
    let e = law.poly_exponent;
    let l = o.lmax;
    let levels: Vec<LevelRow> = [l / 4, l / 2, l]
        .into_iter()
        .map(|level| LevelRow {
            level,
            value: g.values[level],
            scaled: g.values[level] * (level as f64).powf(-e),
        })
        .collect();
    let rich = richardson(levels[0].scaled, levels[1].scaled, levels[2].scaled);
    let mut candidates = Vec::new();
    let dev = |v: f64| (rich / v - 1.0).abs();
    let c = law.constants.expect("bridge-type laws carry constants");
    match c.kind {
        ConstantKind::Cplus => candidates.push(ConstantCheck {
            name: "C+",
            value: c.value,
            deviation: dev(c.value),
        }),
        ConstantKind::Czero => {
            candidates.push(ConstantCheck {
                name: "C0 re-derived",
                value: c.value,
                deviation: dev(c.value),
            });
            if let Some(p) = c.printed_c0 {
                candidates.push(ConstantCheck {
                    name: "C0 printed",
                    value: p,
                    deviation: dev(p),
                });
            }
        }
    }
    let winners: Vec<&ConstantCheck> = candidates.iter().filter(|c| c.deviation <= 0.05).collect();
    let winner = (winners.len() == 1).then(|| winners[0].name);
    Ok(GreensReport {
        lmax: l,
        ymax: o.ymax,
        steps: g.steps,
        residual_mass: g.residual_mass,
        escaped_mass: g.escaped_mass,
        total_visits: total,
        fit: Fit::from(&fit),
        doubling_ratio: g.values[l] / g.values[l / 2],
        doubling_expected: 2f64.powf(e),
        levels,
        richardson: rich,
        candidates,
        winner,
    })
}

fn require_free(b: &Built, what: &str) -> Result<(), CliError> {
    if b.twisted {
        return Err(CliError::Unsupported(format!(
            "{what} needs the free kernel of a quadrant chain, not a twisted kernel"
        )));
    }
    Ok(())
}

fn steady_solve(b: &Built, o: &Options) -> Result<Stationary, CliError> {
    require_free(b, "the truncated stationary solve")?;
    Ok(truncated_stationary(&b.kernel, o.trunc_x, o.trunc_y)?)
}

fn steady_report(a: &Analysis, st: &Stationary, o: &Options) -> Result<SteadyReport, CliError> {
    let law = &a.law;
    let row0 = st.row(0);
    let fit = fit_tail(&row0, o.steady_window())?;
    let level = o.profile_level().min(st.x_max);
    let ymax = PROFILE_CHECK_Y.min(st.y_max);
    let base = st.at(level, 0);
    let mut lin: f64 = 0.0;
    let mut sq: Option<f64> = squared_profile(law, 0).map(|_| 0.0);
    for y in 0..=ymax {
        let obs = st.at(level, y) / base;
        lin = lin.max((obs / (law.profile.eval(y) / law.profile.eval(0)) - 1.0).abs());
        if let (Some(m), Some(v)) = (sq.as_mut(), squared_profile(law, y)) {
            *m = m.max((obs / v - 1.0).abs());
        }
    }
    Ok(SteadyReport {
        trunc_x: st.x_max,
        trunc_y: st.y_max,
        method: match st.method {
            SolveMethod::Gth => "gth",
            SolveMethod::Power => "power",
        },
        residual: st.residual,
        fit: Fit::from(&fit),
        rate_rel_err: (fit.rate / law.theta1 - 1.0).abs(),
        exponent_err: (fit.exponent - law.poly_exponent).abs(),
        profile: ProfileCheck {
            level,
            ymax,
            max_rel_err: lin,
            squared_max_rel_err: sq,
        },
    })
}

/// Back-solved `f` over the fit window: median and standard error of the
/// per-level values.
fn back_solved(
    law: &TailLaw,
    st: &Stationary,
    window: (usize, usize),
) -> Result<(f64, f64), CliError> {
    let (median, vals) = back_solve_f(law, &st.row(0), window)?;
    let n = vals.len() as f64;
    let mean = vals.iter().sum::<f64>() / n;
    let var = vals.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    Ok((median, (var / n).sqrt()))
}

fn f_report(a: &Analysis, st: &Stationary, o: &Options) -> Result<FReport, CliError> {
    let mc = McOptions {
        seed: o.seed,
        replications: o.replications,
        escape_level: o.escape_level,
        horizon: o.mc_horizon,
        ..Default::default()
    };
    let est = estimate_f(&a.law, &st.column(0), &a.twisted, &mc)?;
    let window = o.steady_window();
    let back = back_solved(&a.law, st, window).ok().map(|(value, se)| {
        let difference = (est.estimate.value - value).abs();
        let combined = (est.estimate.se * est.estimate.se + se * se).sqrt();
        let tolerance = (3.0 * combined).max(0.1 * value.abs());
        BackSolve {
            value,
            se,
            window,
            difference,
            tolerance,
            agree: difference <= tolerance,
        }
    });
    Ok(FReport {
        value: est.estimate.value,
        se: est.estimate.se,
        coarse_value: est.coarse_value,
        cutoff: mc.cutoff,
        coarse_cutoff: COARSE_CUTOFF,
        paths: est.paths,
        censored: est.censored,
        strata: est.strata.len(),
        seed: mc.seed,
        replications: mc.replications,
        back_solved: back,
    })
}

fn suite(name: &str, value: f64, limit: f64, note: Option<String>) -> Suite {
    Suite {
        name: name.into(),
        pass: value <= limit,
        value,
        limit,
        note,
    }
}

fn skipped(name: &str, why: impl ToString) -> Suite {
    Suite {
        name: name.into(),
        pass: true,
        value: 0.0,
        limit: 0.0,
        note: Some(format!("skipped: {}", why.to_string())),
    }
}

fn failed(name: &str, why: impl ToString) -> Suite {
    Suite {
        name: name.into(),
        pass: false,
        value: f64::NAN,
        limit: 0.0,
        note: Some(why.to_string()),
    }
}

fn invariant_suites(b: &Built, a: &Analysis, o: &Options) -> Vec<Suite> {
    let law = &a.law;
    let tc = law.twisted;
    let mut out = Vec::new();

    // harmonic function on the input kernel at the twist point
    let h = if b.twisted {
        HarmonicFunction {
            alpha: 0.0,
            beta: 0.0,
            a0_slope: if law.regime == Regime::Bridge {
                tc.kappa / tc.p0
            } else {
                0.0
            },
        }
    } else {
        harmonic_for(law)
    };
    let base = if b.twisted {
        let mut k = b.kernel.clone();
        k.kappa = 0.0;
        k
    } else {
        b.kernel.clone()
    };
    if b.twisted {
        // killing on the boundary row is part of a twisted kernel
        out.push(skipped(
            "harmonic residual",
            "input kernel is already twisted",
        ));
    } else {
        out.push(suite(
            "harmonic residual",
            harmonic_residual(&base, &h, 200),
            1e-12,
            None,
        ));
    }

    // convexity of Λ on 21 points
    let hi = if b.twisted { 1.0 } else { law.theta1 + 0.5 };
    let grid: Vec<f64> = (0..21)
        .map(|j| -1.0 + (hi + 1.0) * j as f64 / 20.0)
        .collect();
    match convexity_check(&base, &grid) {
        Ok(pass) => out.push(Suite {
            name: "convexity of log spectral radius".into(),
            pass,
            value: if pass { 0.0 } else { 1.0 },
            limit: 0.0,
            note: Some(format!("21 points on [-1, {hi}]")),
        }),
        Err(e) => out.push(failed("convexity of log spectral radius", e)),
    }

    // stationarity of φ for the phase chain
    match phase_stationary_measure(law.regime, &tc) {
        Ok(phi) => {
            let r = match (&phi, law.regime) {
                (PhaseMeasure::Jitter { .. }, _) => {
                    Ok(phi.stationarity_residual(&HomogeneousChain::from(&tc), 100))
                }
                _ => h_transform_bridge(&tc).map(|c| phi.stationarity_residual(&c, 100)),
            };
            match r {
                Ok(v) => out.push(suite("phase measure stationarity", v, 1e-12, None)),
                Err(e) => out.push(failed("phase measure stationarity", e)),
            }
        }
        Err(e) => out.push(failed("phase measure stationarity", e)),
    }

    if law.regime != Regime::Jitter {
        for u in [0.5, 0.9] {
            let name = format!("first-return series at u = {u}");
            match psi_cross_check(&a.twisted, u, 4000) {
                Ok((series, closed)) => out.push(suite(&name, (series - closed).abs(), 1e-8, None)),
                Err(e) => out.push(failed(&name, e)),
            }
        }
    }

    if law.regime == Regime::Bridge {
        let (p0, kappa) = (tc.p0, tc.kappa);
        let n = 1_000_000u64;
        let mut partial = 0.0;
        for m in (1..=n).rev() {
            let m = m as f64;
            partial += p0 * (p0 + kappa) / ((p0 + kappa * m) * (p0 + kappa * (m + 1.0)));
        }
        let tail = p0 * (p0 + kappa) / (kappa * (p0 + kappa * (n as f64 + 1.0)));
        let closed = transience_sum(p0, kappa);
        out.push(suite(
            "transience sum p0/kappa",
            ((partial + tail) / closed - 1.0).abs(),
            1e-9,
            None,
        ));

        let phi = phase_stationary_measure(Regime::Bridge, &tc);
        let queries = [
            RatioQuery {
                start_a: (0, 0),
                target_a: 0,
                start_b: (0, 0),
                target_b: 0,
            },
            RatioQuery {
                start_a: (0, 0),
                target_a: 1,
                start_b: (0, 0),
                target_b: 0,
            },
            RatioQuery {
                start_a: (5, 1),
                target_a: 1,
                start_b: (0, 1),
                target_b: 1,
            },
        ];
        let limits = [0.0, 0.10, 0.05];
        let names = [
            "ratio limit identical",
            "ratio limit phi(1)/phi(0)",
            "ratio limit shifted start",
        ];
        match phi.and_then(|phi| ratio_limit_check(&a.twisted, &phi, kappa / p0, &queries, o.lmax))
        {
            Ok(rows) => {
                for ((row, lim), name) in rows.iter().zip(limits).zip(names) {
                    out.push(suite(
                        name,
                        row.rel_err(),
                        lim,
                        Some(format!("dp {} expected {}", row.dp, row.expected)),
                    ));
                }
            }
            Err(e) => out.push(failed("ratio limit", e)),
        }
    }
    out
}

fn twist_of(b: &Built, a: &Analysis) -> Twist {
    let law = &a.law;
    Twist {
        theta1: law.theta1,
        theta2: law.theta2,
        kappa: law.twisted.kappa,
        z: law.theta1.exp(),
        d_plus: Some(d_plus(&a.twisted)),
        input_twisted: b.twisted,
    }
}

/// Runs one command. Verification suites that fail are recorded in the
/// report, not returned as errors.
pub fn run(command: Command, config: &RunConfig) -> Result<Report, CliError> {
    let o = &config.options;
    let b = build(&config.model)?;

    if command == Command::Classify {
        let (regime, twist) = if b.twisted {
            let law = law_of_twisted(&b.kernel, o.tol)?;
            let t = Twist {
                theta1: 0.0,
                theta2: 0.0,
                kappa: law.twisted.kappa,
                z: 1.0,
                d_plus: Some(d_plus(&b.kernel)),
                input_twisted: true,
            };
            (law.regime, t)
        } else {
            let tp = classify(&b.kernel, o.tol)?;
            let t = Twist {
                theta1: tp.theta1,
                theta2: tp.theta2,
                kappa: tp.kappa,
                z: tp.theta1.exp(),
                d_plus: None,
                input_twisted: false,
            };
            (tp.regime, t)
        };
        return Ok(Report {
            command: command.name(),
            regime: regime.name(),
            twist,
            constants: None,
            profile: Vec::new(),
            f: None,
            warnings: Vec::new(),
            verification: Verification::default(),
            config: config.clone(),
            normalization: b.normalization,
        });
    }

    let a = analysis(&b, o)?;
    let mut verification = Verification::default();
    let mut f = None;
    match command {
        Command::Analyze | Command::Classify => {}
        Command::Greens => verification.greens = Some(greens_report(&a, o)?),
        Command::Steady => {
            let st = steady_solve(&b, o)?;
            verification.steady = Some(steady_report(&a, &st, o)?);
        }
        Command::EstimateF => {
            let st = steady_solve(&b, o)?;
            verification.steady = Some(steady_report(&a, &st, o)?);
            f = Some(f_report(&a, &st, o)?);
        }
        Command::VerifyAll => {
            if a.law.regime != Regime::Jitter {
                match greens_report(&a, o) {
                    Ok(g) => verification.greens = Some(g),
                    Err(e) => verification.suites.push(failed("greens series", e)),
                }
            }
            if !b.twisted {
                let st = steady_solve(&b, o)?;
                let sr = steady_report(&a, &st, o)?;
                verification.suites.push(suite(
                    "steady rate vs theta1",
                    sr.rate_rel_err,
                    0.01,
                    None,
                ));
                if a.law.regime == Regime::Bridge {
                    verification.suites.push(suite(
                        "steady exponent vs -3/2",
                        sr.exponent_err,
                        0.15,
                        None,
                    ));
                }
                verification.suites.push(suite(
                    "steady phase profile",
                    sr.profile.max_rel_err,
                    0.10,
                    None,
                ));
                verification.steady = Some(sr);
                if a.law.regime != Regime::Jitter {
                    match f_report(&a, &st, o) {
                        Ok(fr) => {
                            if let Some(bs) = &fr.back_solved {
                                verification.suites.push(suite(
                                    "f Monte Carlo vs back-solve",
                                    bs.difference,
                                    bs.tolerance,
                                    None,
                                ));
                            }
                            f = Some(fr);
                        }
                        Err(e) => verification.suites.push(failed("f estimate", e)),
                    }
                }
            }
            if let Some(g) = &verification.greens {
                // the raw doubling ratio carries O(1/ℓ) bias; the
                // extrapolated level is the sharper test
                let best = g
                    .candidates
                    .iter()
                    .map(|c| c.deviation)
                    .fold(f64::INFINITY, f64::min);
                verification
                    .suites
                    .push(suite("greens level vs constant", best, 0.05, None));
            }
            verification.suites.extend(invariant_suites(&b, &a, o));
        }
    }

    let mut law = a.law.clone();
    if let Some(fr) = &f {
        law.f = Some(bridgetail_core::asymptotics::Estimate {
            value: fr.value,
            se: fr.se,
        });
    }
    Ok(Report {
        command: command.name(),
        regime: law.regime.name(),
        twist: twist_of(&b, &a),
        constants: Some(constants_of(&b, &a)),
        profile: profile_table(&law),
        f,
        warnings: law.warnings.iter().map(|w| w.to_string()).collect(),
        verification,
        config: config.clone(),
        normalization: b.normalization,
    })
}
