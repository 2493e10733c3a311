//! Generalized advantage estimation.

use crate::error::{AgentError, Result};

/// `y[t] = sum_k d^k x[t + k]`
pub fn discount_cumsum(x: &[f64], d: f64) -> Vec<f64> {
    let mut out = vec![0.0; x.len()];
    let mut acc = 0.0;
    for t in (0..x.len()).rev() {
        acc = x[t] + d * acc;
        out[t] = acc;
    }
    out
}

/// Advantages and rewards-to-go for one trajectory segment. `last_value` is
/// the bootstrap for the state after the final step (0 for a true terminal).
pub fn compute_gae(rewards: &[f64], values: &[f64], last_value: f64, gamma: f64, lambda: f64) -> Result<(Vec<f64>, Vec<f64>)> {
    if rewards.is_empty() {
        return Err(AgentError::EmptyRollout);
    }
    if rewards.len() != values.len() {
        return Err(AgentError::Shape(format!("{} rewards but {} values", rewards.len(), values.len())));
    }
    let n = rewards.len();
    let deltas: Vec<f64> = (0..n)
        .map(|t| {
            let next = if t + 1 < n { values[t + 1] } else { last_value };
            rewards[t] + gamma * next - values[t]
        })
        .collect();
    let adv = discount_cumsum(&deltas, gamma * lambda);
    let mut r = rewards.to_vec();
    r.push(last_value);
    let mut ret = discount_cumsum(&r, gamma);
    ret.pop();
    Ok((adv, ret))
}

/// Shifts and scales to zero mean and unit (population) variance.
pub fn normalize(x: &mut [f64]) {
    let n = x.len() as f64;
    if x.is_empty() {
        return;
    }
    let mean = x.iter().sum::<f64>() / n;
    let var = x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    let std = var.sqrt() + 1e-8;
    x.iter_mut().for_each(|v| *v = (*v - mean) / std);
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn undiscounted_ones() {
        let (adv, ret) = compute_gae(&[1.0; 3], &[0.0; 3], 0.0, 1.0, 1.0).unwrap();
        assert_eq!(adv, vec![3.0, 2.0, 1.0]);
        assert_eq!(ret, vec![3.0, 2.0, 1.0]);
    }

    #[test]
    fn lambda_zero_is_td() {
        let r = [0.5, -1.0, 2.0];
        let v = [0.1, 0.4, -0.3];
        let (adv, _) = compute_gae(&r, &v, 0.7, 0.9, 0.0).unwrap();
        let next = [0.4, -0.3, 0.7];
        for t in 0..3 {
            assert!((adv[t] - (r[t] + 0.9 * next[t] - v[t])).abs() < 1e-15);
        }
    }

    #[test]
    fn empty_is_error() {
        assert!(compute_gae(&[], &[], 0.0, 0.99, 0.97).is_err());
    }

    #[test]
    fn normalized_moments() {
        let mut x = vec![1.0, 2.0, 3.0, 10.0];
        normalize(&mut x);
        let m: f64 = x.iter().sum::<f64>() / 4.0;
        let v: f64 = x.iter().map(|a| a * a).sum::<f64>() / 4.0;
        assert!(m.abs() < 1e-12 && (v - 1.0).abs() < 1e-6);
    }
}
