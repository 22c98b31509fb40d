//! Exact evaluators for both sides of each binomial identity, the registry that
//! keys them, and the sweep engine that checks them over parameter grids.
//!
//! Throughout, `f(s) = sum_k (-1)^k C(n,k) s/(s+k)` is the alternating-sum form
//! of the Laplace transform of the maximum of `n` unit exponentials and
//! `g(s) = prod_{k=1..n} k/(s+k)` is its product form. Empty sums are zero and
//! empty products are one, so every evaluator is defined at `n = 0`.

use std::fmt;
use std::ops::RangeInclusive;
use std::str::FromStr;

use num_bigint::BigInt;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::exact_arith::{binomial_row, factorial, rising_product, ArithError, Rational, RationalSum};
use crate::jets::{Jet, JetError};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum IdentityError {
    #[error("s must be positive, got {0}")]
    NonPositiveS(Rational),
    #[error("n must be at least 1 for this identity")]
    NRequired,
    #[error("m must be at least 1, got {0}")]
    InvalidM(u64),
    #[error("identity {0} needs the parameter m")]
    MissingM(IdentityId),
    #[error("binomial inversion of an empty sequence")]
    EmptySequence,
    #[error("unknown identity {0:?}")]
    UnknownIdentity(String),
    #[error("{0}")]
    InternalRouteMismatch(Box<RouteMismatch>),
    #[error(transparent)]
    Jet(#[from] JetError),
    #[error(transparent)]
    Arith(#[from] ArithError),
}

/// Two exact routes to the tail probability that should have agreed.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("tail probability routes disagree at m={m}, s={s}, n={n}: {route_a} vs {route_b}")]
pub struct RouteMismatch {
    pub m: u64,
    pub s: Rational,
    pub n: u64,
    pub route_a: Rational,
    pub route_b: Rational,
}

pub type Result<T, E = IdentityError> = std::result::Result<T, E>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IdentityId {
    Basic,
    Squared,
    GeneralM,
    InversionFirst,
    InversionSecond,
    DerivativeFG,
    TailDerivativeForm,
}

impl IdentityId {
    pub const ALL: [IdentityId; 7] = [
        IdentityId::Basic,
        IdentityId::Squared,
        IdentityId::GeneralM,
        IdentityId::InversionFirst,
        IdentityId::InversionSecond,
        IdentityId::DerivativeFG,
        IdentityId::TailDerivativeForm,
    ];

    pub fn name(self) -> &'static str {
        match self {
            IdentityId::Basic => "basic",
            IdentityId::Squared => "squared",
            IdentityId::GeneralM => "general_m",
            IdentityId::InversionFirst => "inversion_first",
            IdentityId::InversionSecond => "inversion_second",
            IdentityId::DerivativeFG => "derivative_fg",
            IdentityId::TailDerivativeForm => "tail_derivative_form",
        }
    }

    /// Whether the identity is parameterized by `m`.
    pub fn uses_m(self) -> bool {
        matches!(self, IdentityId::GeneralM | IdentityId::TailDerivativeForm)
    }

    pub fn min_n(self) -> u64 {
        match self {
            IdentityId::GeneralM => 1,
            _ => 0,
        }
    }
}

impl fmt::Display for IdentityId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for IdentityId {
    type Err = IdentityError;

    fn from_str(s: &str) -> Result<Self> {
        IdentityId::ALL
            .into_iter()
            .find(|id| id.name() == s)
            .ok_or_else(|| IdentityError::UnknownIdentity(s.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IdentityParams {
    pub s: Rational,
    pub n: u64,
    pub m: Option<u64>,
}

impl IdentityParams {
    pub fn new(s: Rational, n: u64) -> Self {
        IdentityParams { s, n, m: None }
    }

    pub fn with_m(s: Rational, n: u64, m: u64) -> Self {
        IdentityParams { s, n, m: Some(m) }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VerificationReport {
    pub identity: IdentityId,
    pub params: IdentityParams,
    pub lhs: Rational,
    pub rhs: Rational,
    pub equal: bool,
}

fn check_s(s: &Rational) -> Result<()> {
    if s.is_positive() {
        Ok(())
    } else {
        Err(IdentityError::NonPositiveS(s.clone()))
    }
}

fn check_m(m: u64) -> Result<()> {
    if m >= 1 {
        Ok(())
    } else {
        Err(IdentityError::InvalidM(m))
    }
}

/// `sum_{k=0..n} (-1)^k C(n,k) term(k)`.
fn alternating_binomial_sum(n: u64, mut term: impl FnMut(u64) -> Rational) -> Rational {
    let mut acc = RationalSum::new();
    for (k, c) in binomial_row(n).into_iter().enumerate() {
        let c = if k % 2 == 0 { c } else { -c };
        acc.add_scaled(&c, &term(k as u64));
    }
    acc.finish()
}

/// `s / (s + k)`.
fn ratio(s: &Rational, k: u64) -> Rational {
    s / (s + Rational::from(k))
}

/// Partial products `g_k(s) = prod_{j=1..k} j/(s+j)` for `k = 0..=n`.
fn partial_products(s: &Rational, n: u64) -> Vec<Rational> {
    let mut out = Vec::with_capacity(n as usize + 1);
    let mut acc = Rational::one();
    out.push(acc.clone());
    for j in 1..=n {
        let j = Rational::from(j);
        acc = acc * &j / (s + &j);
        out.push(acc.clone());
    }
    out
}

/// Left side of the basic identity, `f(s)`.
pub fn eval_basic_lhs(s: &Rational, n: u64) -> Result<Rational> {
    check_s(s)?;
    Ok(alternating_binomial_sum(n, |k| ratio(s, k)))
}

/// Right side of the basic identity, `g(s) = n! / ((s+1)...(s+n))`.
pub fn eval_basic_rhs(s: &Rational, n: u64) -> Result<Rational> {
    check_s(s)?;
    let denom = rising_product(s, n)?;
    Ok(Rational::from(factorial(n)).checked_div(&denom)?)
}

/// Jet of `f` at `s`, evaluated through the alternating sum itself.
pub fn eval_f_jet(s: &Rational, n: u64, order: usize) -> Result<Jet> {
    check_s(s)?;
    let v = Jet::variable(s.clone(), order);
    let mut terms = Vec::with_capacity(n as usize + 1);
    for (k, c) in binomial_row(n).into_iter().enumerate() {
        let term = v.div(&v.shift(&Rational::from(k as u64)))?;
        terms.push((if k % 2 == 0 { c } else { -c }, term));
    }
    Ok(Jet::linear_combination(s.clone(), order, &terms)?)
}

/// Jet of `g` at `s`, evaluated as `n! / ((v+1)(v+2)...(v+n))` with `v` the
/// jet variable.
pub fn eval_g_jet(s: &Rational, n: u64, order: usize) -> Result<Jet> {
    check_s(s)?;
    let v = Jet::variable(s.clone(), order);
    let mut denom = Jet::constant(Rational::one(), s.clone(), order);
    for k in 1..=n {
        denom = denom.mul(&v.shift(&Rational::from(k)))?;
    }
    let numer = Jet::constant(Rational::from(factorial(n)), s.clone(), order);
    Ok(numer.div(&denom)?)
}

/// `sum_{k=0..m-1} (-1)^k s^k/k! h^(k)(s)` from a jet of order at least `m - 1`.
///
/// With `h^(k)(s)/k!` stored directly in the jet this is
/// `sum (-s)^k coefficients[k]`.
fn derivative_form(jet: &Jet, m: u64) -> Result<Rational> {
    let needed = (m - 1) as usize;
    if jet.order() < needed {
        return Err(JetError::OrderExceeded {
            requested: needed,
            order: jet.order(),
        }
        .into());
    }
    let minus_s = -jet.base_point();
    let mut power = Rational::one();
    let mut acc = Rational::zero();
    for coeff in &jet.coefficients()[..=needed] {
        acc += &(coeff * &power);
        power *= &minus_s;
    }
    Ok(acc)
}

/// `P(T_m > X_(n))` for `T_m ~ Gamma(shape m, rate s)` and `X_(n)` the maximum
/// of `n` unit exponentials.
///
/// Computed twice: by the derivative series of `f` (conditioning on the
/// maximum) and by the direct sum `sum (-1)^k C(n,k) (s/(s+k))^m`
/// (conditioning on `T_m`). The routes must agree exactly.
pub fn tail_prob_exact(m: u64, s: &Rational, n: u64) -> Result<Rational> {
    check_s(s)?;
    check_m(m)?;
    let route_a = derivative_form(&eval_f_jet(s, n, (m - 1) as usize)?, m)?;
    let route_b = power_sum(s, n, m);
    if route_a != route_b {
        return Err(IdentityError::InternalRouteMismatch(Box::new(RouteMismatch {
            m,
            s: s.clone(),
            n,
            route_a,
            route_b,
        })));
    }
    Ok(route_a)
}

/// `sum_{k=0..n} (-1)^k C(n,k) (s/(s+k))^m`.
fn power_sum(s: &Rational, n: u64, m: u64) -> Rational {
    alternating_binomial_sum(n, |k| ratio(s, k).pow(m as u32))
}

/// Derivative-series form of the tail probability via `f` (left) and via `g`
/// (right).
pub fn eval_tail_derivative_form(s: &Rational, n: u64, m: u64) -> Result<(Rational, Rational)> {
    check_s(s)?;
    check_m(m)?;
    let order = (m - 1) as usize;
    let lhs = derivative_form(&eval_f_jet(s, n, order)?, m)?;
    let rhs = derivative_form(&eval_g_jet(s, n, order)?, m)?;
    // the left side is route A of `tail_prob_exact`; hold it to route B as well
    let direct = power_sum(s, n, m);
    if direct != lhs {
        return Err(IdentityError::InternalRouteMismatch(Box::new(RouteMismatch {
            m,
            s: s.clone(),
            n,
            route_a: lhs,
            route_b: direct,
        })));
    }
    Ok((lhs, rhs))
}

pub fn eval_squared_identity(s: &Rational, n: u64) -> Result<(Rational, Rational)> {
    check_s(s)?;
    let lhs = power_sum(s, n, 2);
    let harmonic: Rational = (0..=n).map(|j| ratio(s, j)).sum();
    let rhs = eval_basic_rhs(s, n)? * harmonic;
    Ok((lhs, rhs))
}

pub fn eval_general_m(s: &Rational, n: u64, m: u64) -> Result<(Rational, Rational)> {
    check_s(s)?;
    check_m(m)?;
    if n == 0 {
        return Err(IdentityError::NRequired);
    }
    let lhs = power_sum(s, n, m);
    // inner(j) summed over k = 0..m-1 of r^(k+1) with r = s/(s+j+1)
    let inner = alternating_binomial_sum(n - 1, |j| {
        let r = ratio(s, j + 1);
        let mut power = r.clone();
        let mut acc = Rational::zero();
        for _ in 0..m {
            acc += &power;
            power *= &r;
        }
        acc
    });
    let rhs = Rational::from(n) / s * inner;
    Ok((lhs, rhs))
}

pub fn eval_inversion_first(s: &Rational, n: u64) -> Result<(Rational, Rational)> {
    check_s(s)?;
    let products = partial_products(s, n);
    let lhs = alternating_binomial_sum(n, |k| products[k as usize].clone());
    Ok((lhs, ratio(s, n)))
}

pub fn eval_inversion_second(s: &Rational, n: u64) -> Result<(Rational, Rational)> {
    check_s(s)?;
    let products = partial_products(s, n);
    let mut harmonic = Vec::with_capacity(n as usize + 1);
    let mut acc = Rational::zero();
    for i in 0..=n {
        acc += &ratio(s, i);
        harmonic.push(acc.clone());
    }
    let lhs = alternating_binomial_sum(n, |k| &products[k as usize] * &harmonic[k as usize]);
    Ok((lhs, ratio(s, n).pow(2)))
}

/// Both sides equal `-g'(s)`; the inner sum on the left runs over `j = 1..n`.
pub fn eval_derivative_identity(s: &Rational, n: u64) -> Result<(Rational, Rational)> {
    check_s(s)?;
    let harmonic: Rational = (1..=n)
        .map(|j| (Rational::from(j) + s).checked_recip())
        .collect::<std::result::Result<Vec<_>, _>>()?
        .into_iter()
        .sum();
    let lhs = eval_basic_rhs(s, n)? * harmonic;
    let rhs = -alternating_binomial_sum(n, |k| {
        let k = Rational::from(k);
        let denom = (&k + s).pow(2);
        k / denom
    });
    Ok((lhs, rhs))
}

/// `b_n = sum_{k=0..n} (-1)^k C(n,k) a_k` for every prefix of `a`.
pub fn binomial_invert(a: &[Rational]) -> Result<Vec<Rational>> {
    if a.is_empty() {
        return Err(IdentityError::EmptySequence);
    }
    Ok((0..a.len() as u64)
        .map(|n| alternating_binomial_sum(n, |k| a[k as usize].clone()))
        .collect())
}

/// Evaluates both sides of `id` at `params`.
pub fn verify(id: IdentityId, params: &IdentityParams) -> Result<VerificationReport> {
    let IdentityParams { s, n, m } = params;
    let (s, n) = (s, *n);
    let need_m = || m.ok_or(IdentityError::MissingM(id));
    let (lhs, rhs) = match id {
        IdentityId::Basic => (eval_basic_lhs(s, n)?, eval_basic_rhs(s, n)?),
        IdentityId::Squared => eval_squared_identity(s, n)?,
        IdentityId::GeneralM => eval_general_m(s, n, need_m()?)?,
        IdentityId::InversionFirst => eval_inversion_first(s, n)?,
        IdentityId::InversionSecond => eval_inversion_second(s, n)?,
        IdentityId::DerivativeFG => eval_derivative_identity(s, n)?,
        IdentityId::TailDerivativeForm => eval_tail_derivative_form(s, n, need_m()?)?,
    };
    let equal = lhs == rhs;
    Ok(VerificationReport {
        identity: id,
        params: params.clone(),
        lhs,
        rhs,
        equal,
    })
}

/// Parameter grid for [`sweep`].
#[derive(Debug, Clone)]
pub struct SweepGrid {
    pub s_values: Vec<Rational>,
    pub n_range: RangeInclusive<u64>,
    pub m_range: RangeInclusive<u64>,
}

impl Default for SweepGrid {
    fn default() -> Self {
        SweepGrid {
            s_values: default_s_grid(),
            n_range: 0..=100,
            m_range: 1..=8,
        }
    }
}

pub fn default_s_grid() -> Vec<Rational> {
    ["1/7", "1/2", "1", "3/2", "2", "10", "1000/3"]
        .iter()
        .map(|t| t.parse().expect("static grid literal"))
        .collect()
}

impl SweepGrid {
    /// Grid points for one identity. Identities without `m` get a single point
    /// per `(s, n)`; values of `n` below the identity's domain are skipped.
    pub fn points(&self, id: IdentityId) -> Vec<IdentityParams> {
        let n_start = (*self.n_range.start()).max(id.min_n());
        let mut out = Vec::new();
        for n in n_start..=*self.n_range.end() {
            for s in &self.s_values {
                if id.uses_m() {
                    for m in self.m_range.clone() {
                        out.push(IdentityParams::with_m(s.clone(), n, m));
                    }
                } else {
                    out.push(IdentityParams::new(s.clone(), n));
                }
            }
        }
        out
    }
}

/// Verifies every identity in `ids` over `grid` in parallel. The output is
/// sorted by `(identity, n, m, s)` regardless of scheduling.
pub fn sweep(ids: &[IdentityId], grid: &SweepGrid) -> Result<Vec<VerificationReport>> {
    let jobs: Vec<(IdentityId, IdentityParams)> = ids
        .iter()
        .flat_map(|&id| grid.points(id).into_iter().map(move |p| (id, p)))
        .collect();
    let mut reports = jobs
        .into_par_iter()
        .map(|(id, p)| verify(id, &p))
        .collect::<Result<Vec<_>>>()?;
    reports.sort_by(|a, b| {
        (a.identity, a.params.n, a.params.m, &a.params.s).cmp(&(b.identity, b.params.n, b.params.m, &b.params.s))
    });
    Ok(reports)
}

/// Integer convenience for tests and callers holding small values.
pub fn rational_from_ratio(p: i64, q: i64) -> Rational {
    Rational::new(BigInt::from(p), BigInt::from(q)).expect("nonzero denominator")
}
