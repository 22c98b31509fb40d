//! Acceptance gate. Runs every criterion at its pinned tolerance and prints
//! one PASS/FAIL line each; exits non-zero if any criterion fails.

use std::process::{Command, ExitCode};
use std::time::Instant;

use binid::exact_arith::{binomial, Rational};
use binid::identities::{
    binomial_invert, default_s_grid, eval_basic_lhs, eval_basic_rhs, eval_derivative_identity, eval_f_jet, eval_g_jet,
    eval_general_m, eval_inversion_first, eval_inversion_second, eval_squared_identity, tail_prob_exact,
};
use binid::laplace_numeric::{laplace_via_cdf_quadrature, laplace_via_density_quadrature};
use binid::montecarlo::{
    draw_samples, estimate_tail_prob, exp_sample, ks_two_sample, sample_max_exp, sample_sum_exp, RngConfig,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn err<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

/// Route B written out independently of the library's own summation code.
fn direct_tail_sum(s: &Rational, n: u64, m: u32) -> Rational {
    (0..=n)
        .map(|k| {
            let c = Rational::from(binomial(n, k));
            let term = c * (s / &(s + &Rational::from(k))).pow(m);
            if k % 2 == 0 {
                term
            } else {
                -term
            }
        })
        .fold(Rational::zero(), |acc, t| acc + t)
}

fn c1_basic() -> Outcome {
    let mut count = 0;
    for s in default_s_grid() {
        for n in 0..=100 {
            let (lhs, rhs) = (eval_basic_lhs(&s, n).map_err(err)?, eval_basic_rhs(&s, n).map_err(err)?);
            ensure(lhs == rhs, || format!("s={s} n={n}: {lhs} != {rhs}"))?;
            count += 1;
        }
    }
    Ok(format!("{count} points, exact equality"))
}

fn c2_squared_and_jet() -> Outcome {
    let mut count = 0;
    for s in default_s_grid() {
        for n in 0..=100 {
            let (lhs, rhs) = eval_squared_identity(&s, n).map_err(err)?;
            ensure(lhs == rhs, || format!("squared s={s} n={n}"))?;
            let f = eval_f_jet(&s, n, 1).map_err(err)?;
            let g = eval_g_jet(&s, n, 1).map_err(err)?;
            let from_f = f.value() - &s * f.derivative(1).map_err(err)?;
            let from_g = g.value() - &s * g.derivative(1).map_err(err)?;
            ensure(from_f == lhs && from_g == lhs, || {
                format!("f - s f' reconstruction s={s} n={n}")
            })?;
            count += 1;
        }
    }
    Ok(format!("{count} points, identity and f - s f' = g - s g' exact"))
}

fn c3_general_m() -> Outcome {
    let mut count = 0;
    for s in default_s_grid() {
        for n in 1..=50 {
            for m in 1..=8 {
                let (lhs, rhs) = eval_general_m(&s, n, m).map_err(err)?;
                ensure(lhs == rhs, || format!("s={s} n={n} m={m}"))?;
                count += 1;
            }
        }
    }
    Ok(format!("{count} points, exact equality"))
}

fn c4_inversions() -> Outcome {
    let mut count = 0;
    for s in default_s_grid() {
        for n in 0..=100 {
            let (a, b) = eval_inversion_first(&s, n).map_err(err)?;
            ensure(a == b, || format!("first s={s} n={n}"))?;
            let (a, b) = eval_inversion_second(&s, n).map_err(err)?;
            ensure(a == b, || format!("second s={s} n={n}"))?;
            count += 2;
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut sequences = 0;
    for len in 1..=24usize {
        for _ in 0..10 {
            let a: Vec<Rational> = (0..len)
                .map(|_| Rational::new(rng.random_range(-10_000i64..10_000), rng.random_range(1i64..10_000)).unwrap())
                .collect();
            let twice = binomial_invert(&binomial_invert(&a).map_err(err)?).map_err(err)?;
            ensure(twice == a, || format!("involution failed at length {len}"))?;
            sequences += 1;
        }
    }
    Ok(format!(
        "{count} identity points, {sequences} random sequences inverted twice"
    ))
}

fn c5_derivative() -> Outcome {
    let mut count = 0;
    for s in default_s_grid() {
        for n in 0..=50 {
            let (lhs, rhs) = eval_derivative_identity(&s, n).map_err(err)?;
            let oracle = -eval_g_jet(&s, n, 1).map_err(err)?.derivative(1).map_err(err)?;
            ensure(lhs == oracle && rhs == oracle, || format!("s={s} n={n}"))?;
            count += 1;
        }
    }
    Ok(format!("{count} points equal to -g'(s) from jets"))
}

fn c6_tail_routes() -> Outcome {
    let mut count = 0;
    for s in default_s_grid() {
        for n in 1..=50 {
            for m in 1..=8u64 {
                // tail_prob_exact itself fails if its two routes disagree
                let p = tail_prob_exact(m, &s, n).map_err(err)?;
                let direct = direct_tail_sum(&s, n, m as u32);
                ensure(p == direct, || format!("route mismatch s={s} n={n} m={m}"))?;
                count += 1;
            }
            ensure(
                tail_prob_exact(1, &s, n).map_err(err)? == eval_basic_rhs(&s, n).map_err(err)?,
                || format!("m=1 vs product form s={s} n={n}"),
            )?;
        }
    }
    Ok(format!("{count} points, route A = route B exactly"))
}

fn c7_quadrature() -> Outcome {
    const TOL: f64 = 1e-10;
    const MAX_ABS_ERROR: f64 = 1e-9;
    let mut worst = 0.0f64;
    for s in [0.5, 1.0, 2.0, 10.0] {
        let exact_s = Rational::from_f64(s).unwrap();
        for n in 1..=30 {
            let exact = eval_basic_rhs(&exact_s, n).map_err(err)?.to_f64();
            let cdf = laplace_via_cdf_quadrature(s, n, TOL).map_err(err)?;
            let density = laplace_via_density_quadrature(s, n, TOL).map_err(err)?;
            for (route, value) in [("cdf", cdf.value), ("density", density.value)] {
                let e = (value - exact).abs();
                worst = worst.max(e);
                ensure(e <= MAX_ABS_ERROR, || format!("{route} s={s} n={n}: error {e:e}"))?;
            }
        }
    }
    Ok(format!("120 points x 2 routes, worst abs error {worst:.3e} <= 1e-9"))
}

fn c8_lemma1_ks() -> Outcome {
    const SAMPLES: usize = 100_000;
    const SEED: u64 = 8_001;
    let mut summary = Vec::new();
    for (i, n) in [1u64, 2, 5, 10].into_iter().enumerate() {
        let xs = draw_samples(SAMPLES, RngConfig::new(SEED, 2 * i as u64), |r| sample_max_exp(n, r)).map_err(err)?;
        let ys = draw_samples(SAMPLES, RngConfig::new(SEED, 2 * i as u64 + 1), |r| {
            sample_sum_exp(n, r)
        })
        .map_err(err)?;
        let ks = ks_two_sample(&xs, &ys).map_err(err)?;
        ensure(ks.p_value > 0.01, || format!("n={n}: p={}", ks.p_value))?;
        summary.push(format!("n={n} p={:.3}", ks.p_value));
    }
    let xs = draw_samples(10_000, RngConfig::new(SEED, 100), |r| exp_sample(1.0, r)).map_err(err)?;
    let ys = draw_samples(10_000, RngConfig::new(SEED, 101), |r| exp_sample(2.0, r)).map_err(err)?;
    let control = ks_two_sample(&xs, &ys).map_err(err)?;
    ensure(control.p_value < 1e-6, || {
        format!("negative control p={}", control.p_value)
    })?;
    Ok(format!("{}; control p={:.1e}", summary.join(", "), control.p_value))
}

fn c9_tail_monte_carlo() -> Outcome {
    const SAMPLES: u64 = 100_000;
    let cases = [(1u64, "1", 2u64), (2, "1", 1), (2, "2", 3), (5, "3", 4)];
    let mut summary = Vec::new();
    for (i, (m, s, n)) in cases.into_iter().enumerate() {
        let s: Rational = s.parse().unwrap();
        let est = estimate_tail_prob(m, &s, n, SAMPLES, RngConfig::new(9_001, i as u64)).map_err(err)?;
        let z = est.z_score().ok_or("missing exact reference")?;
        ensure(z <= 4.0, || format!("m={m} s={s} n={n}: z={z}"))?;
        summary.push(format!("({m},{s},{n}) z={z:.2}"));
    }
    Ok(summary.join(", "))
}

fn run_simulate(args: &[&str]) -> Result<(i32, Vec<u8>), String> {
    let out = Command::new(env!("CARGO_BIN_EXE_binid"))
        .arg("simulate")
        .args(args)
        .env_remove("SOURCE_DATE_EPOCH")
        .env_remove("BINID_SEED")
        .output()
        .map_err(err)?;
    Ok((out.status.code().unwrap_or(-1), out.stdout))
}

fn c10_determinism() -> Outcome {
    let commands: [&[&str]; 4] = [
        &["--suite", "lemma1", "--n", "5", "--samples", "100000", "--seed", "42"],
        &[
            "--suite",
            "tail",
            "--m",
            "2",
            "--s",
            "1",
            "--n",
            "1",
            "--samples",
            "100000",
            "--seed",
            "7",
        ],
        &[
            "--suite",
            "laplace",
            "--s",
            "3/2",
            "--n",
            "1,4",
            "--samples",
            "20000",
            "--seed",
            "3",
            "--format",
            "csv",
        ],
        &[
            "--suite",
            "tail",
            "--m",
            "5",
            "--s",
            "3",
            "--n",
            "4",
            "--samples",
            "20000",
            "--format",
            "markdown",
        ],
    ];
    for args in commands {
        let (code_a, first) = run_simulate(args)?;
        let (code_b, second) = run_simulate(args)?;
        ensure(code_a == 0 && code_b == 0, || {
            format!("{args:?} exited {code_a}/{code_b}")
        })?;
        ensure(!first.is_empty() && first == second, || {
            format!("{args:?} reports differ")
        })?;
    }
    Ok(format!(
        "{} simulate commands byte-identical across reruns",
        commands.len()
    ))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 10] = [
        ("C1 basic identity exact on n 0..100 x s grid", c1_basic),
        (
            "C2 squared identity and f - s f' jet reconstruction",
            c2_squared_and_jet,
        ),
        ("C3 general-m identity, n 1..50, m 1..8", c3_general_m),
        (
            "C4 inversion identities and binomial-inversion involution",
            c4_inversions,
        ),
        ("C5 derivative identity against jet -g'(s)", c5_derivative),
        ("C6 tail probability route A = route B, m 1..8, n 1..50", c6_tail_routes),
        ("C7 quadrature routes within 1e-9 at tol 1e-10", c7_quadrature),
        (
            "C8 max vs sum-of-exponentials KS gate and negative control",
            c8_lemma1_ks,
        ),
        (
            "C9 Monte Carlo tail estimates within 4 standard errors",
            c9_tail_monte_carlo,
        ),
        ("C10 simulate reports byte-identical for a fixed seed", c10_determinism),
    ];
    let mut failures = 0;
    for (name, check) in criteria {
        let start = Instant::now();
        let outcome = check();
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS  {name}  [{detail}] ({secs:.1}s)"),
            Err(detail) => {
                failures += 1;
                println!("FAIL  {name}  [{detail}] ({secs:.1}s)");
            }
        }
    }
    println!("acceptance: {} passed, {failures} failed", criteria.len() - failures);
    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
