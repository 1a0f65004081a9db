use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
#[error("length mismatch: {rewards} rewards, {values} values (expected rewards + 1), {dones} done flags")]
pub struct LengthMismatch {
    pub rewards: usize,
    pub values: usize,
    pub dones: usize,
}

/// Generalized advantage estimates for one contiguous stretch of steps.
///
/// `values` has one more entry than `rewards`: the last is the bootstrap
/// value after the final step. `dones[t]` marks a true terminal after step
/// `t`, which cuts both the bootstrap and the advantage recursion. A stretch
/// ending in a truncation passes `dones[last] = false` and the value of the
/// cut state as bootstrap.
pub fn compute_gae(
    rewards: &[f64],
    values: &[f64],
    dones: &[bool],
    gamma: f64,
    gae_lambda: f64,
) -> Result<(Vec<f64>, Vec<f64>), LengthMismatch> {
    let n = rewards.len();
    if values.len() != n + 1 || dones.len() != n {
        return Err(LengthMismatch {
            rewards: n,
            values: values.len(),
            dones: dones.len(),
        });
    }
    let mut adv = vec![0.0; n];
    let mut next = 0.0;
    for t in (0..n).rev() {
        let live = if dones[t] { 0.0 } else { 1.0 };
        let delta = rewards[t] + gamma * values[t + 1] * live - values[t];
        next = delta + gamma * gae_lambda * live * next;
        adv[t] = next;
    }
    let returns = adv.iter().zip(values).map(|(a, v)| a + v).collect();
    Ok((adv, returns))
}
