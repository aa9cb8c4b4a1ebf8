use serde::{Deserialize, Serialize};

use super::dist::normal_two_sided_p;
use super::StatsError;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetaResult {
    pub beta: f64,
    pub se: f64,
    pub z: f64,
    pub p: f64,
}

/// Inverse-variance weighted fixed-effect pooling.
pub fn fixed_effect_meta(estimates: &[f64], ses: &[f64]) -> Result<MetaResult, StatsError> {
    if estimates.len() != ses.len() {
        return Err(StatsError::LengthMismatch(estimates.len(), ses.len()));
    }
    if estimates.is_empty() {
        return Err(StatsError::EmptyInput);
    }
    if ses.iter().any(|s| !(s.is_finite() && *s > 0.0)) {
        return Err(StatsError::BadSE);
    }
    let weights: Vec<f64> = ses.iter().map(|s| 1.0 / (s * s)).collect();
    let total: f64 = weights.iter().sum();
    let beta = estimates.iter().zip(&weights).map(|(b, w)| b * w).sum::<f64>() / total;
    let se = total.sqrt().recip();
    let z = beta / se;
    Ok(MetaResult {
        beta,
        se,
        z,
        p: normal_two_sided_p(z),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identities() {
        let one = fixed_effect_meta(&[0.7], &[0.3]).unwrap();
        assert!((one.beta - 0.7).abs() < 1e-12 && (one.se - 0.3).abs() < 1e-12);
        let two = fixed_effect_meta(&[0.7, 0.7], &[0.3, 0.3]).unwrap();
        assert!((two.beta - 0.7).abs() < 1e-12);
        assert!((two.se - 0.3 / 2f64.sqrt()).abs() < 1e-12);
        let avg = fixed_effect_meta(&[1.0, 3.0], &[1.0, 1.0]).unwrap();
        assert!((avg.beta - 2.0).abs() < 1e-12);
        assert_eq!(fixed_effect_meta(&[1.0], &[0.0]), Err(StatsError::BadSE));
    }

    #[test]
    fn z_and_p() {
        let r = fixed_effect_meta(&[1.96], &[1.0]).unwrap();
        assert!((r.p - 0.049_995_790_296_440_6).abs() < 1e-12);
    }
}
