//! Prediction error measures and the constant-mean baseline.

use crate::error::{Result, ScormError};

pub fn mse(predicted: &[f64], observed: &[f64]) -> Result<f64> {
    if predicted.len() != observed.len() {
        return Err(ScormError::input(format!(
            "length mismatch: {} predictions, {} observations",
            predicted.len(),
            observed.len()
        )));
    }
    if predicted.is_empty() {
        return Err(ScormError::input("mean squared error of empty vectors"));
    }
    let sum: f64 = predicted.iter().zip(observed).map(|(p, o)| (p - o).powi(2)).sum();
    Ok(sum / predicted.len() as f64)
}

/// |predicted − observed| / observed × 100.
pub fn percent_error(predicted_total: f64, observed_total: f64) -> Result<f64> {
    if !(observed_total > 0.0) {
        return Err(ScormError::input(format!(
            "observed total must be positive, got {observed_total}"
        )));
    }
    Ok((predicted_total - observed_total).abs() / observed_total * 100.0)
}

/// ZeroR: the training mean, predicted for every case.
pub fn zeror_predict(training_costs: &[f64]) -> Result<f64> {
    if training_costs.is_empty() {
        return Err(ScormError::input("ZeroR needs at least one training cost"));
    }
    Ok(training_costs.iter().sum::<f64>() / training_costs.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mse_cases() {
        assert_eq!(mse(&[1.0, 2.0], &[1.0, 2.0]).unwrap(), 0.0);
        assert_eq!(mse(&[0.0], &[2.0]).unwrap(), 4.0);
        assert!(mse(&[1.0], &[1.0, 2.0]).is_err());
        assert!(mse(&[], &[]).is_err());
    }

    #[test]
    fn percent_error_cases() {
        assert_eq!(percent_error(10.0, 10.0).unwrap(), 0.0);
        assert!((percent_error(98.45, 100.0).unwrap() - 1.55).abs() < 1e-12);
        assert!(percent_error(1.0, 0.0).is_err());
        assert!(percent_error(1.0, -3.0).is_err());
    }

    #[test]
    fn zeror_cases() {
        assert_eq!(zeror_predict(&[5.0, 5.0, 5.0]).unwrap(), 5.0);
        let m = zeror_predict(&[0.0, 10.0]).unwrap();
        assert_eq!(m, 5.0);
        assert_eq!(mse(&[m, m], &[0.0, 10.0]).unwrap(), 25.0);
        assert!(zeror_predict(&[]).is_err());
    }
}
