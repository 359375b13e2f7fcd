//! The closed catalog of integrands with exact cell envelopes.
//!
//! Integrands are a fixed family rather than arbitrary user code because
//! the non-convergence machinery needs exact per-cell envelopes: for each
//! cell the oracle returns bounds on the function over all real points of
//! the cell, plus a `tight` flag saying both bounds are attained (or
//! approached) there. Oscillation evidence is only ever drawn from tight
//! envelopes.
//!
//! The Dirichlet-like indicator evaluates to 1 at every rational, so
//! sampling alone can never expose its non-integrability; only its `(0, 1)`
//! envelope does. The spike integrand over `{t_n}` takes value `scale * n`
//! at `t_n` and 0 elsewhere; over `{1/n}` it is unbounded near 0 yet has
//! zero weighted sum whenever tags miss every point.

use std::fmt;
use std::ops::Add;
use std::str::FromStr;

use num::bigint::BigInt;
use serde::{Serialize, Serializer};
use thiserror::Error;

use crate::filters::{AvoidSet, FilterError, IndexInCell};
use crate::partition::Interval;
use crate::rational::Rational;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum IntegrandError {
    #[error("step table needs `values.len() == breakpoints.len() + 1`")]
    StepTableShape,
    #[error("step breakpoints must be strictly increasing")]
    StepBreakpointsNotIncreasing,
    #[error("spike scale must be positive (got {scale})")]
    NonPositiveScale { scale: Rational },
    #[error("unrecognized integrand `{0}`")]
    UnknownSpec(String),
    #[error(transparent)]
    Filter(#[from] FilterError),
}

/// A possibly infinite bound.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub enum Bound {
    NegInf,
    Finite(Rational),
    PosInf,
}

impl Bound {
    pub fn finite(&self) -> Option<&Rational> {
        match self {
            Bound::Finite(r) => Some(r),
            _ => None,
        }
    }

    pub fn is_finite(&self) -> bool {
        matches!(self, Bound::Finite(_))
    }

    /// Scales by an exact factor, flipping infinities on negative factors.
    pub fn scale(&self, factor: &Rational) -> Bound {
        if factor.is_zero() {
            return Bound::Finite(Rational::zero());
        }
        match self {
            Bound::Finite(r) => Bound::Finite(factor * r),
            Bound::PosInf => {
                if factor.is_positive() {
                    Bound::PosInf
                } else {
                    Bound::NegInf
                }
            }
            Bound::NegInf => {
                if factor.is_positive() {
                    Bound::NegInf
                } else {
                    Bound::PosInf
                }
            }
        }
    }
}

impl Add for Bound {
    type Output = Bound;

    /// Sum of bounds; adding opposite infinities never happens for sums of
    /// same-side envelope bounds and is a logic error.
    fn add(self, rhs: Bound) -> Bound {
        match (self, rhs) {
            (Bound::Finite(a), Bound::Finite(b)) => Bound::Finite(a + b),
            (Bound::PosInf, Bound::NegInf) | (Bound::NegInf, Bound::PosInf) => {
                panic!("indeterminate sum of opposite infinite bounds")
            }
            (Bound::PosInf, _) | (_, Bound::PosInf) => Bound::PosInf,
            (Bound::NegInf, _) | (_, Bound::NegInf) => Bound::NegInf,
        }
    }
}

impl fmt::Display for Bound {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Bound::NegInf => write!(f, "-inf"),
            Bound::Finite(r) => write!(f, "{r}"),
            Bound::PosInf => write!(f, "inf"),
        }
    }
}

impl Serialize for Bound {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.to_string())
    }
}

/// Bounds on an integrand over one cell.
///
/// `lower <= f(t) <= upper` for every rational `t` in the cell. When
/// `tight` is set, both bounds are the exact infimum and supremum of the
/// function over the real points of the cell.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CellEnvelope {
    pub lower: Bound,
    pub upper: Bound,
    pub tight: bool,
}

impl CellEnvelope {
    fn finite(lower: Rational, upper: Rational, tight: bool) -> Self {
        CellEnvelope {
            lower: Bound::Finite(lower),
            upper: Bound::Finite(upper),
            tight,
        }
    }

    fn point(value: Rational) -> Self {
        CellEnvelope::finite(value.clone(), value, true)
    }

    fn is_degenerate(&self) -> bool {
        self.lower == self.upper
    }
}

/// An exactly evaluable function from rationals to rationals, with a
/// per-cell envelope oracle.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Integrand {
    /// `f(t) = c`.
    Constant(Rational),
    /// `f(t) = t`.
    Identity,
    /// `f(t) = a_0 + a_1 t + ... + a_d t^d`.
    Polynomial(Vec<Rational>),
    /// Piecewise constant: `values[i]` on `[breakpoints[i-1], breakpoints[i])`,
    /// extended by the first and last values beyond the table.
    Step {
        breakpoints: Vec<Rational>,
        values: Vec<Rational>,
    },
    /// `f(t_n) = scale * n` on the points of `points`, 0 elsewhere.
    Spike { points: AvoidSet, scale: Rational },
    /// 1 at every rational, 0 at every irrational. Evaluation (on rationals)
    /// is constantly 1; the envelope is `(0, 1)` on every cell.
    DirichletLike,
    /// `alpha * f + beta * g`.
    Combination {
        alpha: Rational,
        f: Box<Integrand>,
        beta: Rational,
        g: Box<Integrand>,
    },
}

impl Integrand {
    pub fn constant(c: Rational) -> Self {
        Integrand::Constant(c)
    }

    pub fn identity() -> Self {
        Integrand::Identity
    }

    pub fn polynomial(coefficients: Vec<Rational>) -> Self {
        Integrand::Polynomial(coefficients)
    }

    pub fn step(
        breakpoints: Vec<Rational>,
        values: Vec<Rational>,
    ) -> Result<Self, IntegrandError> {
        if breakpoints.is_empty() || values.len() != breakpoints.len() + 1 {
            return Err(IntegrandError::StepTableShape);
        }
        if breakpoints.windows(2).any(|w| w[0] >= w[1]) {
            return Err(IntegrandError::StepBreakpointsNotIncreasing);
        }
        Ok(Integrand::Step {
            breakpoints,
            values,
        })
    }

    pub fn spike(points: AvoidSet, scale: Rational) -> Result<Self, IntegrandError> {
        if !scale.is_positive() {
            return Err(IntegrandError::NonPositiveScale { scale });
        }
        Ok(Integrand::Spike { points, scale })
    }

    pub fn dirichlet_like() -> Self {
        Integrand::DirichletLike
    }

    pub fn combination(alpha: Rational, f: Integrand, beta: Rational, g: Integrand) -> Self {
        Integrand::Combination {
            alpha,
            f: Box::new(f),
            beta,
            g: Box::new(g),
        }
    }

    /// Exact evaluation; total on all rationals.
    pub fn eval(&self, t: &Rational) -> Rational {
        match self {
            Integrand::Constant(c) => c.clone(),
            Integrand::Identity => t.clone(),
            Integrand::Polynomial(coeffs) => {
                let mut acc = Rational::zero();
                for c in coeffs.iter().rev() {
                    acc = acc * t + c;
                }
                acc
            }
            Integrand::Step {
                breakpoints,
                values,
            } => values[piece_index(breakpoints, t)].clone(),
            Integrand::Spike { points, scale } => match points.index_of(t) {
                Some(n) => scale * Rational::from(n),
                None => Rational::zero(),
            },
            Integrand::DirichletLike => Rational::one(),
            Integrand::Combination { alpha, f, beta, g } => {
                alpha * f.eval(t) + beta * g.eval(t)
            }
        }
    }

    /// Envelope of the function over the real points of `cell`.
    pub fn envelope(&self, cell: &Interval) -> CellEnvelope {
        match self {
            Integrand::Constant(c) => CellEnvelope::point(c.clone()),
            Integrand::Identity => {
                CellEnvelope::finite(cell.lo().clone(), cell.hi().clone(), true)
            }
            Integrand::Polynomial(coeffs) => polynomial_envelope(coeffs, cell),
            Integrand::Step {
                breakpoints,
                values,
            } => {
                let lo_piece = piece_index(breakpoints, cell.lo());
                let hi_piece = piece_index(breakpoints, cell.hi());
                let slice = &values[lo_piece..=hi_piece];
                let min = slice.iter().min().expect("nonempty").clone();
                let max = slice.iter().max().expect("nonempty").clone();
                CellEnvelope::finite(min, max, true)
            }
            Integrand::Spike { points, scale } => {
                let upper = match points.largest_index_in(cell.lo(), cell.hi()) {
                    IndexInCell::None => Bound::Finite(Rational::zero()),
                    IndexInCell::Largest(n) => Bound::Finite(scale * Rational::from(n)),
                    IndexInCell::Unbounded => Bound::PosInf,
                };
                CellEnvelope {
                    lower: Bound::Finite(Rational::zero()),
                    upper,
                    tight: true,
                }
            }
            Integrand::DirichletLike => {
                CellEnvelope::finite(Rational::zero(), Rational::one(), true)
            }
            Integrand::Combination { alpha, f, beta, g } => {
                let ef = scale_envelope(alpha, f.envelope(cell));
                let eg = scale_envelope(beta, g.envelope(cell));
                let tight = (ef.is_degenerate() && eg.tight)
                    || (eg.is_degenerate() && ef.tight)
                    || (ef.is_degenerate() && eg.is_degenerate());
                CellEnvelope {
                    lower: ef.lower + eg.lower,
                    upper: ef.upper + eg.upper,
                    tight,
                }
            }
        }
    }

    /// A bound on `|f|` over `domain` (an upper estimate; exact for tight
    /// envelopes). `PosInf` means the function is unbounded there.
    pub fn sup_abs(&self, domain: &Interval) -> Bound {
        let env = self.envelope(domain);
        match (env.lower, env.upper) {
            (Bound::Finite(lo), Bound::Finite(hi)) => Bound::Finite(lo.abs().max(hi.abs())),
            _ => Bound::PosInf,
        }
    }

    /// Whether the function is bounded on `domain`.
    pub fn is_bounded(&self, domain: &Interval) -> bool {
        self.sup_abs(domain).is_finite()
    }

    pub fn describe(&self) -> String {
        self.to_string()
    }
}

/// Index of the piece containing `t` for a step table.
fn piece_index(breakpoints: &[Rational], t: &Rational) -> usize {
    breakpoints.partition_point(|b| b <= t)
}

fn scale_envelope(factor: &Rational, env: CellEnvelope) -> CellEnvelope {
    if factor.is_negative() {
        CellEnvelope {
            lower: env.upper.scale(factor),
            upper: env.lower.scale(factor),
            tight: env.tight,
        }
    } else {
        CellEnvelope {
            lower: env.lower.scale(factor),
            upper: env.upper.scale(factor),
            tight: env.tight,
        }
    }
}

/// Exact rational interval product bounds.
fn interval_mul(
    (alo, ahi): (&Rational, &Rational),
    (blo, bhi): (&Rational, &Rational),
) -> (Rational, Rational) {
    let products = [alo * blo, alo * bhi, ahi * blo, ahi * bhi];
    let mut min = products[0].clone();
    let mut max = products[0].clone();
    for p in &products[1..] {
        min = min.min(p.clone());
        max = max.max(p.clone());
    }
    (min, max)
}

/// Envelope for a polynomial over a cell.
///
/// Monotone cases (affine, or all same-sign higher coefficients on a
/// nonnegative cell) give tight endpoint bounds; otherwise interval Horner
/// evaluation gives a sound but possibly loose bracket.
fn polynomial_envelope(coeffs: &[Rational], cell: &Interval) -> CellEnvelope {
    let eval = |t: &Rational| {
        let mut acc = Rational::zero();
        for c in coeffs.iter().rev() {
            acc = acc * t + c;
        }
        acc
    };
    if coeffs.len() <= 1 {
        let c = coeffs.first().cloned().unwrap_or_else(Rational::zero);
        return CellEnvelope::point(c);
    }
    let higher = &coeffs[1..];
    let affine = coeffs.len() == 2;
    let nonneg_cell = !cell.lo().is_negative();
    let increasing =
        (affine && !higher[0].is_negative()) || (nonneg_cell && higher.iter().all(|c| !c.is_negative()));
    let decreasing =
        (affine && !higher[0].is_positive()) || (nonneg_cell && higher.iter().all(|c| !c.is_positive()));
    if increasing {
        return CellEnvelope::finite(eval(cell.lo()), eval(cell.hi()), true);
    }
    if decreasing {
        return CellEnvelope::finite(eval(cell.hi()), eval(cell.lo()), true);
    }
    // Interval Horner.
    let mut lo = Rational::zero();
    let mut hi = Rational::zero();
    for c in coeffs.iter().rev() {
        let (mlo, mhi) = interval_mul((&lo, &hi), (cell.lo(), cell.hi()));
        lo = mlo + c;
        hi = mhi + c;
    }
    CellEnvelope::finite(lo, hi, false)
}

impl fmt::Display for Integrand {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Integrand::Constant(c) => write!(f, "constant:{c}"),
            Integrand::Identity => write!(f, "identity"),
            Integrand::Polynomial(coeffs) => {
                write!(f, "poly:")?;
                for (i, c) in coeffs.iter().enumerate() {
                    if i > 0 {
                        write!(f, ",")?;
                    }
                    write!(f, "{c}")?;
                }
                Ok(())
            }
            Integrand::Step {
                breakpoints,
                values,
            } => {
                write!(f, "step:")?;
                for (i, b) in breakpoints.iter().enumerate() {
                    if i > 0 {
                        write!(f, ",")?;
                    }
                    write!(f, "{b}")?;
                }
                write!(f, "=")?;
                for (i, v) in values.iter().enumerate() {
                    if i > 0 {
                        write!(f, ",")?;
                    }
                    write!(f, "{v}")?;
                }
                Ok(())
            }
            Integrand::Spike { points, scale } => {
                if scale == &Rational::one() {
                    write!(f, "spike:{points}")
                } else {
                    write!(f, "spike:{points}*{scale}")
                }
            }
            Integrand::DirichletLike => write!(f, "dirichlet"),
            Integrand::Combination { alpha, f: lf, beta, g } => {
                write!(f, "({alpha})*[{lf}] + ({beta})*[{g}]")
            }
        }
    }
}

impl FromStr for Integrand {
    type Err = IntegrandError;

    /// Parses the compact CLI form:
    /// `identity`, `dirichlet`, `constant:<r>`, `poly:<r>,<r>,...`,
    /// `step:<b>,...=<v>,...`, `spike`, `spike:1/n`, `spike:1/<m>n`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        match s {
            "identity" => return Ok(Integrand::Identity),
            "dirichlet" => return Ok(Integrand::DirichletLike),
            "spike" => {
                return Integrand::spike(AvoidSet::reciprocal_integers(), Rational::one())
            }
            _ => {}
        }
        if let Some(rest) = s.strip_prefix("constant:") {
            let c: Rational = rest
                .trim()
                .parse()
                .map_err(|_| IntegrandError::UnknownSpec(s.to_string()))?;
            return Ok(Integrand::Constant(c));
        }
        if let Some(rest) = s.strip_prefix("poly:") {
            let coeffs = rest
                .split(',')
                .map(|p| p.trim().parse::<Rational>())
                .collect::<Result<Vec<_>, _>>()
                .map_err(|_| IntegrandError::UnknownSpec(s.to_string()))?;
            return Ok(Integrand::Polynomial(coeffs));
        }
        if let Some(rest) = s.strip_prefix("step:") {
            let (bps, vals) = rest
                .split_once('=')
                .ok_or_else(|| IntegrandError::UnknownSpec(s.to_string()))?;
            let breakpoints = bps
                .split(',')
                .map(|p| p.trim().parse::<Rational>())
                .collect::<Result<Vec<_>, _>>()
                .map_err(|_| IntegrandError::UnknownSpec(s.to_string()))?;
            let values = vals
                .split(',')
                .map(|p| p.trim().parse::<Rational>())
                .collect::<Result<Vec<_>, _>>()
                .map_err(|_| IntegrandError::UnknownSpec(s.to_string()))?;
            return Integrand::step(breakpoints, values);
        }
        if let Some(rest) = s.strip_prefix("spike:") {
            let points: AvoidSet = rest
                .parse()
                .map_err(|_| IntegrandError::UnknownSpec(s.to_string()))?;
            return Integrand::spike(points, Rational::one());
        }
        Err(IntegrandError::UnknownSpec(s.to_string()))
    }
}

/// Largest spike value reachable at a point index, as a rational.
pub fn spike_value_at_index(scale: &Rational, n: &BigInt) -> Rational {
    scale * Rational::from(n.clone())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r(s: &str) -> Rational {
        s.parse().unwrap()
    }

    fn cell(lo: &str, hi: &str) -> Interval {
        Interval::new(r(lo), r(hi)).unwrap()
    }

    #[test]
    fn evaluation_across_the_catalog() {
        assert_eq!(Integrand::constant(r("3/2")).eval(&r("1/7")), r("3/2"));
        assert_eq!(Integrand::identity().eval(&r("2/5")), r("2/5"));
        let p = Integrand::polynomial(vec![r("1"), r("0"), r("2")]); // 1 + 2t^2
        assert_eq!(p.eval(&r("1/2")), r("3/2"));
        let step = Integrand::step(vec![r("1/2")], vec![r("-1"), r("1")]).unwrap();
        assert_eq!(step.eval(&r("1/4")), r("-1"));
        assert_eq!(step.eval(&r("1/2")), r("1")); // pieces are left-closed
        assert_eq!(step.eval(&r("3/4")), r("1"));
        let spike = Integrand::spike(AvoidSet::reciprocal_integers(), Rational::one()).unwrap();
        assert_eq!(spike.eval(&r("1/5")), r("5"));
        assert_eq!(spike.eval(&r("2/5")), r("0"));
        assert_eq!(Integrand::dirichlet_like().eval(&r("1/3")), r("1"));
    }

    #[test]
    fn spike_reaches_large_values_on_demand() {
        let spike = Integrand::spike(AvoidSet::reciprocal_integers(), Rational::one()).unwrap();
        let t = Rational::new(1, 1_000_000).unwrap();
        assert_eq!(spike.eval(&t), r("1000000"));
    }

    #[test]
    fn combination_is_exact_pointwise() {
        let f = Integrand::identity();
        let g = Integrand::constant(r("1"));
        let combo = Integrand::combination(r("2"), f.clone(), r("3"), g.clone());
        for t in ["0", "1/3", "1/2", "7/9"] {
            let t = r(t);
            assert_eq!(
                combo.eval(&t),
                r("2") * f.eval(&t) + r("3") * g.eval(&t)
            );
        }
    }

    #[test]
    fn envelopes_bracket_and_report_tightness() {
        let c = cell("1/4", "1/2");
        let id = Integrand::identity().envelope(&c);
        assert_eq!(id.lower, Bound::Finite(r("1/4")));
        assert_eq!(id.upper, Bound::Finite(r("1/2")));
        assert!(id.tight);

        let sq = Integrand::polynomial(vec![r("0"), r("0"), r("1")]).envelope(&c);
        assert_eq!(sq.lower, Bound::Finite(r("1/16")));
        assert_eq!(sq.upper, Bound::Finite(r("1/4")));
        assert!(sq.tight);

        let dir = Integrand::dirichlet_like().envelope(&c);
        assert_eq!(dir.lower, Bound::Finite(r("0")));
        assert_eq!(dir.upper, Bound::Finite(r("1")));
        assert!(dir.tight);
    }

    #[test]
    fn mixed_sign_polynomial_still_brackets() {
        // p(t) = t - t^2 peaks at t = 1/2 (irrational-free but non-monotone).
        let p = Integrand::polynomial(vec![r("0"), r("1"), r("-1")]);
        let c = cell("0", "1");
        let env = p.envelope(&c);
        assert!(!env.tight);
        for t in ["0", "1/4", "1/2", "3/4", "1"] {
            let v = p.eval(&r(t));
            assert!(Bound::Finite(v.clone()) >= env.lower && Bound::Finite(v) <= env.upper);
        }
    }

    #[test]
    fn spike_envelope_finds_the_largest_point() {
        let spike = Integrand::spike(AvoidSet::reciprocal_integers(), Rational::one()).unwrap();
        let env = spike.envelope(&cell("1/5", "1/2"));
        assert_eq!(env.upper, Bound::Finite(r("5")));
        assert_eq!(env.lower, Bound::Finite(r("0")));
        let unbounded = spike.envelope(&cell("0", "1/10"));
        assert_eq!(unbounded.upper, Bound::PosInf);
        let empty = spike.envelope(&cell("2/5", "9/20"));
        assert_eq!(empty.upper, Bound::Finite(r("0")));
    }

    #[test]
    fn boundedness_flags_per_kind() {
        let unit = Interval::unit();
        assert!(Integrand::identity().is_bounded(&unit));
        assert!(Integrand::dirichlet_like().is_bounded(&unit));
        let spike = Integrand::spike(AvoidSet::reciprocal_integers(), Rational::one()).unwrap();
        assert!(!spike.is_bounded(&unit));
        // Away from the accumulation point the same spike is bounded.
        let tail = Interval::new(r("1/3"), r("1")).unwrap();
        assert_eq!(spike.sup_abs(&tail), Bound::Finite(r("3")));
    }

    #[test]
    fn parsing_round_trips() {
        for s in [
            "identity",
            "dirichlet",
            "constant:3/2",
            "poly:0,0,1",
            "step:1/2=0,1",
            "spike:1/n",
        ] {
            let f: Integrand = s.parse().unwrap();
            assert_eq!(f.to_string(), s, "round trip of {s}");
        }
        let default_spike: Integrand = "spike".parse().unwrap();
        assert_eq!(default_spike.to_string(), "spike:1/n");
        assert!("nope".parse::<Integrand>().is_err());
        assert!("step:1/2,1/4=1,2,3".parse::<Integrand>().is_err());
    }
}
