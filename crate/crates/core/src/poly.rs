//! Univariate polynomials and piecewise-polynomial functions over exact
//! rationals, with exact integration, evaluation, and root isolation on
//! rational breakpoints.

use crate::error::{Error, Result};
use crate::rat::Rat;
use serde::{Deserialize, Serialize};
use std::fmt;

/// Dense polynomial c0 + c1 x + c2 x^2 + ... with rational coefficients.
#[derive(Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Poly {
    coeffs: Vec<Rat>,
}

impl Poly {
    pub fn new(mut coeffs: Vec<Rat>) -> Self {
        while coeffs.len() > 1 && coeffs.last().map_or(false, Rat::is_zero) {
            coeffs.pop();
        }
        if coeffs.is_empty() {
            coeffs.push(Rat::zero());
        }
        Poly { coeffs }
    }

    pub fn zero() -> Self {
        Poly::new(vec![])
    }

    pub fn constant(c: Rat) -> Self {
        Poly::new(vec![c])
    }

    pub fn coeffs(&self) -> &[Rat] {
        &self.coeffs
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(Rat::is_zero)
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn eval(&self, x: &Rat) -> Rat {
        // Horner
        let mut acc = Rat::zero();
        for c in self.coeffs.iter().rev() {
            acc = acc * x + c;
        }
        acc
    }

    pub fn derivative(&self) -> Poly {
        if self.coeffs.len() <= 1 {
            return Poly::zero();
        }
        let coeffs = self
            .coeffs
            .iter()
            .enumerate()
            .skip(1)
            .map(|(k, c)| Rat::from_int(k as i64) * c)
            .collect();
        Poly::new(coeffs)
    }

    /// Antiderivative with zero constant term.
    pub fn antiderivative(&self) -> Poly {
        let mut coeffs = Vec::with_capacity(self.coeffs.len() + 1);
        coeffs.push(Rat::zero());
        for (k, c) in self.coeffs.iter().enumerate() {
            coeffs.push(c / Rat::from_int(k as i64 + 1));
        }
        Poly::new(coeffs)
    }

    /// Definite integral over [a, b].
    pub fn integral(&self, a: &Rat, b: &Rat) -> Rat {
        let f = self.antiderivative();
        f.eval(b) - f.eval(a)
    }

    pub fn scale(&self, s: &Rat) -> Poly {
        Poly::new(self.coeffs.iter().map(|c| c * s).collect())
    }

    pub fn add(&self, other: &Poly) -> Poly {
        let n = self.coeffs.len().max(other.coeffs.len());
        let mut coeffs = vec![Rat::zero(); n];
        for (k, c) in self.coeffs.iter().enumerate() {
            coeffs[k] += c;
        }
        for (k, c) in other.coeffs.iter().enumerate() {
            coeffs[k] += c;
        }
        Poly::new(coeffs)
    }

    pub fn sub(&self, other: &Poly) -> Poly {
        self.add(&other.scale(&Rat::from_int(-1)))
    }

    pub fn mul(&self, other: &Poly) -> Poly {
        let mut coeffs = vec![Rat::zero(); self.coeffs.len() + other.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            for (j, b) in other.coeffs.iter().enumerate() {
                coeffs[i + j] += a * b;
            }
        }
        Poly::new(coeffs)
    }

    /// Compose with x -> x + a, i.e. return p(x + a).
    pub fn shift(&self, a: &Rat) -> Poly {
        let mut acc = Poly::zero();
        let base = Poly::new(vec![a.clone(), Rat::one()]);
        for c in self.coeffs.iter().rev() {
            acc = acc.mul(&base).add(&Poly::constant(c.clone()));
        }
        acc
    }

    /// Lagrange interpolation through distinct nodes.
    pub fn interpolate(points: &[(Rat, Rat)]) -> Poly {
        let mut acc = Poly::zero();
        for (i, (xi, yi)) in points.iter().enumerate() {
            let mut term = Poly::constant(yi.clone());
            for (j, (xj, _)) in points.iter().enumerate() {
                if i == j {
                    continue;
                }
                let denom = xi - xj;
                assert!(!denom.is_zero(), "interpolation nodes must be distinct");
                // (x - xj) / (xi - xj)
                term = term.mul(&Poly::new(vec![-xj / &denom, denom.recip()]));
            }
            acc = acc.add(&term);
        }
        acc
    }

    /// Euclidean remainder of self by d (d nonzero).
    fn rem(&self, d: &Poly) -> Poly {
        assert!(!d.is_zero());
        let mut r = self.coeffs.clone();
        let dd = d.degree();
        let lead = d.coeffs[dd].clone();
        while r.len() > dd && !(r.len() == 1 && r[0].is_zero()) {
            let k = r.len() - 1 - dd;
            let factor = &r[r.len() - 1] / &lead;
            if !factor.is_zero() {
                for (j, c) in d.coeffs.iter().enumerate() {
                    let v = c * &factor;
                    r[k + j] = &r[k + j] - &v;
                }
            }
            r.pop();
            while r.len() > 1 && r.last().map_or(false, Rat::is_zero) {
                r.pop();
            }
        }
        Poly::new(r)
    }

    fn gcd(&self, other: &Poly) -> Poly {
        let mut a = self.clone();
        let mut b = other.clone();
        while !b.is_zero() {
            let r = a.rem(&b);
            a = b;
            b = r;
        }
        a
    }

    /// Quotient in exact division (self must be divisible by d).
    fn div_exact(&self, d: &Poly) -> Poly {
        assert!(!d.is_zero());
        let mut r = self.coeffs.clone();
        let dd = d.degree();
        let lead = d.coeffs[dd].clone();
        if r.len() <= dd {
            return Poly::zero();
        }
        let mut q = vec![Rat::zero(); r.len() - dd];
        for k in (0..q.len()).rev() {
            let factor = &r[k + dd] / &lead;
            for (j, c) in d.coeffs.iter().enumerate() {
                let v = c * &factor;
                r[k + j] = &r[k + j] - &v;
            }
            q[k] = factor;
        }
        Poly::new(q)
    }

    /// Square-free part (distinct roots, multiplicity stripped).
    fn square_free(&self) -> Poly {
        let d = self.derivative();
        if d.is_zero() {
            return self.clone();
        }
        let g = self.gcd(&d);
        if g.degree() == 0 {
            return self.clone();
        }
        self.div_exact(&g)
    }

    /// Number of distinct real roots in the half-open interval (a, b],
    /// by Sturm's theorem on the square-free part.
    pub fn count_roots(&self, a: &Rat, b: &Rat) -> usize {
        assert!(a <= b);
        if self.is_zero() {
            panic!("root counting on the zero polynomial");
        }
        let chain = self.square_free().sturm_chain();
        let va = sign_variations(&chain, a);
        let vb = sign_variations(&chain, b);
        va.saturating_sub(vb)
    }

    fn sturm_chain(&self) -> Vec<Poly> {
        let mut chain = vec![self.clone(), self.derivative()];
        loop {
            let n = chain.len();
            if chain[n - 1].is_zero() {
                chain.pop();
                break;
            }
            let r = chain[n - 2].rem(&chain[n - 1]);
            if r.is_zero() {
                break;
            }
            chain.push(r.scale(&Rat::from_int(-1)));
        }
        chain
    }

    /// Smallest root in the half-open interval (a, b], or None. Errors when
    /// a root exists but is not rational (not representable here).
    pub fn first_root_in(&self, a: &Rat, b: &Rat) -> Result<Option<Rat>> {
        if self.is_zero() {
            return Err(Error::domain(
                "root isolation on an identically zero piece",
            ));
        }
        if self.count_roots(a, b) == 0 {
            return Ok(None);
        }
        if let Some(r) = self.rational_root_in(a, b) {
            return Ok(Some(r));
        }
        if self.degree() <= 2 {
            return Err(Error::domain(
                "leftmost root is not rational; not representable in exact output",
            ));
        }
        // Pin the leftmost root by Stern-Brocot pivoting: each pivot is the
        // simplest rational strictly inside the bracketing interval, so a
        // rational root is reached after its continued-fraction length many
        // steps, while an irrational root trips the cap.
        let mut lo = a.clone();
        let mut hi = b.clone();
        for _ in 0..10_000 {
            if self.eval(&hi).is_zero() && self.count_roots(&lo, &hi) == 1 {
                return Ok(Some(hi));
            }
            let pivot = simplest_strictly_between(&lo, &hi);
            if self.eval(&pivot).is_zero() {
                if self.count_roots(&lo, &pivot) == 1 {
                    return Ok(Some(pivot));
                }
                hi = pivot;
                continue;
            }
            if self.count_roots(&lo, &pivot) > 0 {
                hi = pivot;
            } else {
                lo = pivot;
            }
        }
        Err(Error::domain(
            "leftmost root is not rational; not representable in exact output",
        ))
    }

    /// Exact roots for degree <= 2 restricted to (lo, hi], smallest first.
    fn rational_root_in(&self, lo: &Rat, hi: &Rat) -> Option<Rat> {
        let d = self.degree();
        let c = &self.coeffs;
        let mut roots: Vec<Rat> = Vec::new();
        match d {
            0 => {}
            1 => roots.push(-&c[0] / &c[1]),
            2 => {
                let disc = &c[1] * &c[1] - Rat::from_int(4) * &c[0] * &c[2];
                let s = disc.sqrt_exact()?;
                let two_a = Rat::from_int(2) * &c[2];
                roots.push((-&c[1] - &s) / &two_a);
                roots.push((-&c[1] + &s) / &two_a);
            }
            _ => return None,
        }
        roots.retain(|r| r > lo && r <= hi);
        roots.sort();
        roots.into_iter().next()
    }
}

impl fmt::Debug for Poly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let terms: Vec<String> = self
            .coeffs
            .iter()
            .enumerate()
            .map(|(k, c)| format!("{c}*x^{k}"))
            .collect();
        write!(f, "{}", terms.join(" + "))
    }
}

/// The rational with the smallest denominator strictly between a and b.
fn simplest_strictly_between(a: &Rat, b: &Rat) -> Rat {
    assert!(a < b);
    let zero = Rat::zero();
    if *a < zero && zero < *b {
        return zero;
    }
    if *b <= zero {
        return -simplest_strictly_between(&-b, &-a);
    }
    // 0 <= a < b
    let fa = Rat::from_big(a.numer() / a.denom(), 1.into()).unwrap();
    let next_int = &fa + Rat::one();
    if &next_int > a && &next_int < b {
        return next_int;
    }
    if &fa > a && &fa < b {
        return fa;
    }
    // a and b share the integer part fa with a > fa
    let ra = a - &fa;
    let rb = b - &fa;
    if ra.is_zero() {
        // a integral: pick fa + 1/n with n the least integer above 1/rb
        let inv = rb.recip();
        let n = (inv.numer() / inv.denom()) + num::bigint::BigInt::from(1);
        return fa + Rat::from_big(1.into(), n).unwrap();
    }
    fa + simplest_strictly_between(&rb.recip(), &ra.recip()).recip()
}

fn sign_variations(chain: &[Poly], x: &Rat) -> usize {
    let mut prev = 0i8;
    let mut count = 0;
    for p in chain {
        let v = p.eval(x);
        let s = if v.is_zero() {
            0
        } else if v.is_positive() {
            1
        } else {
            -1
        };
        if s != 0 {
            if prev != 0 && s != prev {
                count += 1;
            }
            prev = s;
        }
    }
    count
}

/// Exact piecewise-polynomial function on [0, +inf).
///
/// Breakpoints start at 0; piece `i` covers [b_i, b_{i+1}] and is stored in
/// the monomial basis centered at the left breakpoint b_i, which keeps
/// coefficient growth bounded during integration. After the last breakpoint
/// the function is the constant `tail`.
#[derive(Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PiecewisePoly {
    breakpoints: Vec<Rat>,
    pieces: Vec<Poly>,
    tail: Rat,
}

impl PiecewisePoly {
    /// Build and validate. `breakpoints` must be strictly increasing and
    /// start at 0; `pieces.len() + 1 == breakpoints.len()`; adjacent pieces
    /// must agree at interior breakpoints and the final piece must agree
    /// with the tail constant.
    pub fn new(breakpoints: Vec<Rat>, pieces: Vec<Poly>, tail: Rat) -> Result<Self> {
        if breakpoints.is_empty() {
            return Err(Error::domain("piecewise function needs at least one breakpoint"));
        }
        if !breakpoints[0].is_zero() {
            return Err(Error::domain("piecewise function must start at 0"));
        }
        if pieces.len() + 1 != breakpoints.len() {
            return Err(Error::domain(
                "piece count must be one less than breakpoint count",
            ));
        }
        for w in breakpoints.windows(2) {
            if w[0] >= w[1] {
                return Err(Error::domain("breakpoints must be strictly increasing"));
            }
        }
        let f = PiecewisePoly {
            breakpoints,
            pieces,
            tail,
        };
        f.check_continuity()?;
        Ok(f)
    }

    /// The constant function with given value on [0, +inf).
    pub fn constant(value: Rat) -> Self {
        PiecewisePoly {
            breakpoints: vec![Rat::zero()],
            pieces: vec![],
            tail: value,
        }
    }

    fn check_continuity(&self) -> Result<()> {
        for i in 0..self.pieces.len() {
            let len = &self.breakpoints[i + 1] - &self.breakpoints[i];
            let right_value = self.pieces[i].eval(&len);
            let next_value = if i + 1 < self.pieces.len() {
                self.pieces[i + 1].eval(&Rat::zero())
            } else {
                self.tail.clone()
            };
            if right_value != next_value {
                return Err(Error::consistency(format!(
                    "piecewise function discontinuous at breakpoint {}",
                    self.breakpoints[i + 1]
                )));
            }
        }
        Ok(())
    }

    pub fn breakpoints(&self) -> &[Rat] {
        &self.breakpoints
    }

    pub fn pieces(&self) -> &[Poly] {
        &self.pieces
    }

    pub fn tail(&self) -> &Rat {
        &self.tail
    }

    pub fn last_breakpoint(&self) -> &Rat {
        self.breakpoints.last().unwrap()
    }

    pub fn eval(&self, x: &Rat) -> Result<Rat> {
        if x.is_negative() {
            return Err(Error::domain("evaluation below 0"));
        }
        if x >= self.last_breakpoint() {
            return Ok(self.tail.clone());
        }
        // last piece whose left breakpoint is <= x
        let i = match self.breakpoints.binary_search(x) {
            Ok(i) => i,
            Err(i) => i - 1,
        };
        Ok(self.pieces[i].eval(&(x - &self.breakpoints[i])))
    }

    /// Exact definite integral over [a, b]; additive over subdivision.
    pub fn integrate(&self, a: &Rat, b: &Rat) -> Result<Rat> {
        if a > b {
            return Err(Error::domain("reversed integration bounds"));
        }
        if a.is_negative() {
            return Err(Error::domain("integration below 0"));
        }
        let mut total = Rat::zero();
        for i in 0..self.pieces.len() {
            let lo = self.breakpoints[i].clone().max(a.clone());
            let hi = self.breakpoints[i + 1].clone().min(b.clone());
            if lo < hi {
                let base = &self.breakpoints[i];
                total += self.pieces[i].integral(&(&lo - base), &(&hi - base));
            }
        }
        let last = self.last_breakpoint();
        if b > last {
            let lo = a.clone().max(last.clone());
            total += &self.tail * (b - &lo);
        }
        Ok(total)
    }

    /// Integral over the whole support [0, last breakpoint]. The tail must
    /// vanish for this to be the integral over [0, +inf).
    pub fn integrate_support(&self) -> Result<Rat> {
        if !self.tail.is_zero() {
            return Err(Error::domain(
                "integral over [0, +inf) requires a vanishing tail",
            ));
        }
        self.integrate(&Rat::zero(), self.last_breakpoint())
    }

    /// Smallest x >= 0 with f(x) = 0 and f > 0 on [0, x), or None when f
    /// stays positive on its whole domain. Errors when f(0) <= 0.
    pub fn first_nonneg_root(&self) -> Result<Option<Rat>> {
        let at0 = self.eval(&Rat::zero())?;
        if !at0.is_positive() {
            return Err(Error::domain(
                "degenerate input: function is not positive at 0",
            ));
        }
        for i in 0..self.pieces.len() {
            let len = &self.breakpoints[i + 1] - &self.breakpoints[i];
            if let Some(r) = self.pieces[i].first_root_in(&Rat::zero(), &len)? {
                return Ok(Some(&self.breakpoints[i] + &r));
            }
        }
        if self.tail.is_zero() {
            // continuity forces the last piece to hit 0 at its right end,
            // which the loop above would have found; the only remaining case
            // is a function that is identically tail beyond b_0 = 0.
            return Ok(Some(self.last_breakpoint().clone()));
        }
        Ok(None)
    }

    pub fn scale(&self, s: &Rat) -> PiecewisePoly {
        PiecewisePoly {
            breakpoints: self.breakpoints.clone(),
            pieces: self.pieces.iter().map(|p| p.scale(s)).collect(),
            tail: &self.tail * s,
        }
    }
}

impl fmt::Debug for PiecewisePoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "PiecewisePoly {{ breakpoints: {:?}, pieces: {:?}, tail: {:?} }}",
            self.breakpoints, self.pieces, self.tail
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rat::{rat, ratio};

    // 9 - (1+x)^2 on [0,2], then 0: the shifted-basis piece at 0 is
    // 8 - 2u - u^2 with u = x - 0.
    fn vol_like() -> PiecewisePoly {
        PiecewisePoly::new(
            vec![ratio(0), ratio(2)],
            vec![Poly::new(vec![ratio(8), ratio(-2), ratio(-1)])],
            ratio(0),
        )
        .unwrap()
    }

    #[test]
    fn zero_integrand() {
        let f = PiecewisePoly::constant(ratio(0));
        assert_eq!(f.integrate(&ratio(0), &ratio(5)).unwrap(), ratio(0));
    }

    #[test]
    fn integral_of_shifted_quadratic() {
        // hand antiderivative 9x - (1+x)^3/3 evaluated 0 -> 2 gives 28/3
        let f = vol_like();
        assert_eq!(f.integrate(&ratio(0), &ratio(2)).unwrap(), rat(28, 3));
        assert_eq!(f.integrate_support().unwrap(), rat(28, 3));
    }

    #[test]
    fn integral_of_one_minus_x_squared() {
        // (1-x)^2 on [0,1]: antiderivative -(1-x)^3/3 gives 1/3
        let f = PiecewisePoly::new(
            vec![ratio(0), ratio(1)],
            vec![Poly::new(vec![ratio(1), ratio(-2), ratio(1)])],
            ratio(0),
        )
        .unwrap();
        assert_eq!(f.integrate(&ratio(0), &ratio(1)).unwrap(), rat(1, 3));
    }

    #[test]
    fn reversed_bounds_rejected() {
        let f = vol_like();
        assert!(f.integrate(&ratio(2), &ratio(1)).is_err());
    }

    #[test]
    fn additivity_over_subdivision() {
        let f = vol_like();
        let whole = f.integrate(&ratio(0), &ratio(2)).unwrap();
        let split = f.integrate(&ratio(0), &rat(7, 5)).unwrap()
            + f.integrate(&rat(7, 5), &ratio(2)).unwrap();
        assert_eq!(whole, split);
    }

    #[test]
    fn first_root_examples() {
        // 9 - (1+x)^2 -> 2
        assert_eq!(vol_like().first_nonneg_root().unwrap(), Some(ratio(2)));
        // 4 - x on [0,4] -> 4
        let lin = PiecewisePoly::new(
            vec![ratio(0), ratio(4)],
            vec![Poly::new(vec![ratio(4), ratio(-1)])],
            ratio(0),
        )
        .unwrap();
        assert_eq!(lin.first_nonneg_root().unwrap(), Some(ratio(4)));
        // constant 1 -> none
        let one = PiecewisePoly::constant(ratio(1));
        assert_eq!(one.first_nonneg_root().unwrap(), None);
    }

    #[test]
    fn degenerate_start_rejected() {
        let f = PiecewisePoly::constant(ratio(0));
        assert!(f.first_nonneg_root().is_err());
        let g = PiecewisePoly::new(
            vec![ratio(0), ratio(1)],
            vec![Poly::new(vec![ratio(-1), ratio(1)])],
            ratio(0),
        )
        .unwrap();
        assert!(g.first_nonneg_root().is_err());
    }

    #[test]
    fn interior_root_found_exactly() {
        // 9 - (1+x)^2 on a longer interval than its root
        let f = PiecewisePoly::new(
            vec![ratio(0), ratio(5)],
            vec![Poly::new(vec![ratio(8), ratio(-2), ratio(-1)])],
            ratio(-27),
        )
        .unwrap();
        assert_eq!(f.first_nonneg_root().unwrap(), Some(ratio(2)));
    }

    #[test]
    fn continuity_enforced() {
        let bad = PiecewisePoly::new(
            vec![ratio(0), ratio(1), ratio(2)],
            vec![Poly::constant(ratio(1)), Poly::constant(ratio(5))],
            ratio(5),
        );
        assert!(bad.is_err());
    }

    #[test]
    fn scaling_commutes_with_integration() {
        let f = vol_like();
        let s = rat(3, 7);
        assert_eq!(
            f.scale(&s).integrate(&ratio(0), &ratio(2)).unwrap(),
            s * f.integrate(&ratio(0), &ratio(2)).unwrap()
        );
    }

    #[test]
    fn sturm_counts() {
        // (x-1)(x-2) = 2 - 3x + x^2
        let p = Poly::new(vec![ratio(2), ratio(-3), ratio(1)]);
        assert_eq!(p.count_roots(&ratio(0), &ratio(3)), 2);
        assert_eq!(p.count_roots(&ratio(0), &rat(3, 2)), 1);
        assert_eq!(p.count_roots(&ratio(1), &ratio(3)), 1);
    }

    #[test]
    fn irrational_root_rejected() {
        // 2 - x^2 has first positive root sqrt(2)
        let f = PiecewisePoly::new(
            vec![ratio(0), ratio(2)],
            vec![Poly::new(vec![ratio(2), ratio(0), ratio(-1)])],
            ratio(-2),
        )
        .unwrap();
        assert!(f.first_nonneg_root().is_err());
    }

    #[test]
    fn interpolation_recovers_polynomial() {
        let p = Poly::new(vec![rat(1, 3), ratio(-2), rat(5, 7)]);
        let pts: Vec<(Rat, Rat)> = (0..3).map(|k| (ratio(k), p.eval(&ratio(k)))).collect();
        assert_eq!(Poly::interpolate(&pts), p);
    }
}
