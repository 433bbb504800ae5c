//! Exact rational oracles for the Poisson weights and cumulative pmf.

#![allow(dead_code)]

use num::bigint::BigInt;
use num::rational::BigRational;
use num::{One, ToPrimitive, Zero};

fn rational(x: f64) -> BigRational {
    BigRational::from_float(x).expect("finite input")
}

/// Bracket `[lo, hi]` around `e^lambda` from a partial Taylor sum and a
/// geometric bound on the remainder.
pub fn exp_bracket(lambda: &BigRational) -> (BigRational, BigRational) {
    let approx = lambda.to_f64().unwrap();
    let terms = (2.0 * approx).ceil() as usize + 200;
    let mut term = BigRational::one();
    let mut sum = BigRational::zero();
    for k in 0..=terms {
        if k > 0 {
            term = term * lambda / BigRational::from_integer(BigInt::from(k));
        }
        sum += &term;
    }
    let k_next = BigRational::from_integer(BigInt::from(terms + 1));
    let next = &term * lambda / &k_next;
    let ratio = lambda / (k_next + BigRational::one());
    let remainder = next / (BigRational::one() - ratio);
    let hi = &sum + remainder;
    (sum, hi)
}

/// Exact `lambda^i / i!` times bounds on `e^-lambda`, rounded to f64, for
/// `i = 0..=max_i`.
pub fn exact_weights(lambda: f64, max_i: u64) -> Vec<(f64, f64)> {
    let l = rational(lambda);
    let (lo, hi) = exp_bracket(&l);
    let (inv_hi, inv_lo) = (hi.recip(), lo.recip());
    let mut term = BigRational::one();
    let mut out = Vec::with_capacity(max_i as usize + 1);
    for k in 0..=max_i {
        if k > 0 {
            term = term * &l / BigRational::from_integer(BigInt::from(k));
        }
        let lower = (&term * &inv_hi).to_f64().unwrap();
        let upper = (&term * &inv_lo).to_f64().unwrap();
        out.push((lower, upper));
    }
    out
}

/// Smallest `R` with `P(N > R) <= epsilon` for `N ~ Poisson(lambda)`,
/// decided in exact arithmetic. Panics if a step cannot be decided with the
/// bracket on `e^lambda`.
pub fn exact_minimal_components(lambda: f64, epsilon: f64) -> usize {
    let l = rational(lambda);
    let keep = BigRational::one() - rational(epsilon);
    let (lo, hi) = exp_bracket(&l);
    let need_surely = &keep * &hi;
    let need_maybe = &keep * &lo;
    let mut term = BigRational::one();
    let mut cumulative = BigRational::zero();
    for r in 0usize.. {
        if r > 0 {
            term = term * &l / BigRational::from_integer(BigInt::from(r));
        }
        cumulative += &term;
        if cumulative >= need_surely {
            return r;
        }
        assert!(
            cumulative < need_maybe,
            "undecidable step at lambda={lambda}, epsilon={epsilon}, R={r}"
        );
    }
    unreachable!()
}
