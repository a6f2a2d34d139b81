//! Linear prediction by the autocorrelation method.

use thiserror::Error;

pub const LPC_ORDER: usize = crate::framestream::LPC_ORDER;

/// Multiplier on the lag-0 autocorrelation (white-noise correction).
pub const LAG0_REGULARIZATION: f64 = 1.0 + 1e-4;

const MIN_FRAME_ENERGY: f64 = 1e-12;

#[derive(Debug, Error, PartialEq)]
pub enum LpcError {
    #[error("frame energy below {MIN_FRAME_ENERGY:e}")]
    DegenerateFrame,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpcSolution {
    /// Predictor coefficients: `x[n] ~ sum_i coeffs[i] * x[n - 1 - i]`.
    pub coeffs: Vec<f64>,
    pub reflection: Vec<f64>,
    pub prediction_error: f64,
}

pub fn autocorrelation(frame: &[f64], max_lag: usize) -> Vec<f64> {
    (0..=max_lag)
        .map(|lag| {
            frame
                .iter()
                .zip(frame.iter().skip(lag))
                .map(|(a, b)| a * b)
                .sum()
        })
        .collect()
}

/// Levinson-Durbin recursion on `r[0..=order]`.
///
/// Every reflection coefficient of a positive-definite autocorrelation has
/// magnitude below one; this is checked as the recursion runs.
pub fn levinson_durbin(r: &[f64], order: usize) -> Result<LpcSolution, LpcError> {
    assert!(r.len() > order, "need {} autocorrelation lags", order + 1);
    if r[0] <= 0.0 {
        return Err(LpcError::DegenerateFrame);
    }
    let mut a = vec![0.0; order];
    let mut prev = vec![0.0; order];
    let mut reflection = Vec::with_capacity(order);
    let mut err = r[0];
    for i in 0..order {
        let mut acc = r[i + 1];
        for j in 0..i {
            acc -= a[j] * r[i - j];
        }
        let k = acc / err;
        debug_assert!(k.abs() < 1.0, "unstable reflection coefficient {k}");
        prev[..i].copy_from_slice(&a[..i]);
        a[i] = k;
        for j in 0..i {
            a[j] = prev[j] - k * prev[i - 1 - j];
        }
        err *= 1.0 - k * k;
        reflection.push(k);
    }
    Ok(LpcSolution {
        coeffs: a,
        reflection,
        prediction_error: err,
    })
}

/// Order-16 LPC of one frame with lag-0 regularization.
pub fn analyze_lpc(frame: &[f64]) -> Result<LpcSolution, LpcError> {
    let energy: f64 = frame.iter().map(|x| x * x).sum();
    if energy < MIN_FRAME_ENERGY {
        return Err(LpcError::DegenerateFrame);
    }
    let mut r = autocorrelation(frame, LPC_ORDER);
    r[0] *= LAG0_REGULARIZATION;
    levinson_durbin(&r, LPC_ORDER)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ideal_white_autocorrelation_gives_zero_predictor() {
        let mut r = vec![0.0; LPC_ORDER + 1];
        r[0] = 1.0;
        let sol = levinson_durbin(&r, LPC_ORDER).unwrap();
        assert!(sol.coeffs.iter().all(|&a| a == 0.0));
    }

    #[test]
    fn ar1_closed_form() {
        let r: Vec<f64> = (0..=LPC_ORDER).map(|k| 0.9f64.powi(k as i32)).collect();
        let sol = levinson_durbin(&r, LPC_ORDER).unwrap();
        assert!((sol.coeffs[0] - 0.9).abs() < 1e-12);
        assert!(sol.coeffs[1..].iter().all(|a| a.abs() < 1e-12));
        assert!((sol.prediction_error - 0.19).abs() < 1e-12);
    }

    #[test]
    fn degenerate_frame() {
        assert_eq!(analyze_lpc(&[0.0; 320]), Err(LpcError::DegenerateFrame));
        assert_eq!(analyze_lpc(&[1e-9; 320]), Err(LpcError::DegenerateFrame));
    }

    #[test]
    fn sinusoid_is_stable() {
        let x: Vec<f64> = (0..320).map(|n| (0.3 * n as f64).sin()).collect();
        let sol = analyze_lpc(&x).unwrap();
        assert!(sol.reflection.iter().all(|k| k.abs() < 1.0));
    }
}
