use crate::policy::{ACTION, EOS, THOUGHT};

pub const DEFAULT_FORMAT_REWARD: f64 = 0.1;

/// Well-formedness of a raw response: some reasoning before a single
/// `action:` marker, followed by an action in the task's alphabet.
/// Returns the verdict and the bonus it earns.
pub fn format_judge<S: AsRef<str>>(
    words: &[S],
    parse: impl Fn(&[&str]) -> Option<String>,
    reward_value: f64,
) -> (bool, f64) {
    let words: Vec<&str> = words.iter().map(AsRef::as_ref).collect();
    let markers: Vec<usize> = words
        .iter()
        .enumerate()
        .filter(|(_, &w)| w == ACTION)
        .map(|(i, _)| i)
        .collect();
    let valid = match markers[..] {
        [m] => {
            let thought = words[..m].iter().any(|&w| w != THOUGHT && w != EOS);
            let end = words[m + 1..]
                .iter()
                .position(|&w| w == EOS)
                .map_or(words.len(), |p| m + 1 + p);
            thought && parse(&words[m + 1..end]).is_some()
        }
        _ => false,
    };
    (valid, if valid { reward_value } else { 0.0 })
}
