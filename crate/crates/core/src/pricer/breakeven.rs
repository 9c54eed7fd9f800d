use std::cell::RefCell;

use crate::error::{Error, Result};
use crate::optim::brent_root;

/// Largest |spread| tried while bracketing: 1000% per annum.
const MAX_SPREAD: f64 = 10.0;

/// Spread at which `price(s)` vanishes.
///
/// Brackets the root around `guess` by expanding geometrically, then runs
/// Brent's method. `price` should evaluate on fixed random numbers so the
/// function is deterministic in `s`. The root is accepted when
/// `|V(s*)| <= notional * 1e-8`.
pub fn breakeven_spread(
    mut price: impl FnMut(f64) -> Result<f64>,
    notional: f64,
    guess: f64,
) -> Result<f64> {
    let failure: RefCell<Option<Error>> = RefCell::new(None);
    let mut f = |s: f64| match price(s) {
        Ok(v) => v,
        Err(e) => {
            failure.borrow_mut().get_or_insert(e);
            f64::NAN
        }
    };
    let guess = if guess.is_finite() { guess } else { 0.0 };
    let mut width = (guess.abs() * 0.05).max(1e-4);
    let (mut lo, mut hi) = (guess - width, guess + width);
    let (mut flo, mut fhi) = (f(lo), f(hi));
    while flo.signum() == fhi.signum() && flo != 0.0 && fhi != 0.0 {
        if !(flo.is_finite() && fhi.is_finite()) || width > MAX_SPREAD {
            break;
        }
        width *= 2.0;
        // Value falls as the spread rises: move towards the root.
        if flo > 0.0 {
            lo = hi;
            flo = fhi;
            hi = guess + width;
            fhi = f(hi);
        } else {
            hi = lo;
            fhi = flo;
            lo = guess - width;
            flo = f(lo);
        }
    }
    if let Some(e) = failure.take() {
        return Err(e);
    }
    if !(flo.signum() != fhi.signum() || flo == 0.0 || fhi == 0.0) {
        return Err(Error::NoBracket { lo, hi });
    }
    let root = brent_root(&mut f, lo, hi, 1e-15, 200)?;
    if let Some(e) = failure.take() {
        return Err(e);
    }
    let residual = f(root);
    if let Some(e) = failure.take() {
        return Err(e);
    }
    if residual.abs() > notional * 1e-8 {
        return Err(Error::NoRoot(format!(
            "value {residual:.3e} at spread {root} exceeds tolerance {:.3e}",
            notional * 1e-8
        )));
    }
    Ok(root)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn affine_root() {
        let s = breakeven_spread(|s| Ok(1e6 * (0.027 - s) * 4.3), 1e6, 0.01).unwrap();
        assert!((s - 0.027).abs() < 1e-13);
    }

    #[test]
    fn zero_protection_gives_zero_spread() {
        let s = breakeven_spread(|s| Ok(-1e6 * s * 4.3), 1e6, 0.0).unwrap();
        assert!(s.abs() < 1e-14);
    }

    #[test]
    fn flat_function_has_no_bracket() {
        assert!(matches!(
            breakeven_spread(|_| Ok(5.0), 1e6, 0.01),
            Err(Error::NoBracket { .. })
        ));
    }

    #[test]
    fn errors_propagate() {
        assert!(matches!(
            breakeven_spread(|_| Err(Error::NoRoot("x".into())), 1e6, 0.01),
            Err(Error::NoRoot(_))
        ));
    }
}
