//! Deterministic corrector with access to the true state.

use super::{
    Correction, CorrectionOutcome, CorrectionRequest, CorrectionResponse, Corrector,
    CorrectorError, EpisodeContext, TargetFormula, Thought, ThoughtFields, Verdict,
};
use crate::envs::{basic_strategy, hand_total, GroundTruth};
use crate::miniworld::{
    object_type, plan_length, scripted_expert, subgoal_ladder, Capability, MiniworldSnapshot,
    Subgoal,
};
use crate::solver24::{complete_formula, find_formulas, smallest, Formula, FormulaRules};

#[derive(Debug, Clone, Copy, Default)]
pub struct OracleCorrector;

impl Corrector for OracleCorrector {
    fn correct(
        &self,
        request: &CorrectionRequest,
        ctx: &mut EpisodeContext,
    ) -> Result<CorrectionOutcome, CorrectorError> {
        let response = oracle_correct(&request.truth, &request.thought, request.format_valid, ctx)?;
        Ok(CorrectionOutcome {
            response,
            fallback_used: false,
            retries: 0,
        })
    }
}

/// Judges `thought` against the true state and updates the episode target.
pub fn oracle_correct<S: AsRef<str>>(
    truth: &GroundTruth,
    thought: &[S],
    format_valid: bool,
    ctx: &mut EpisodeContext,
) -> Result<CorrectionResponse, CorrectorError> {
    let fields = ThoughtFields::parse(thought);
    let mut r = match truth {
        GroundTruth::Cards {
            values,
            formula,
            rules,
        } => cards(values, formula, rules, &fields, ctx),
        GroundTruth::Numberline { target, current } => numberline(*current, *target, &fields),
        GroundTruth::Blackjack { player, dealer_up } => blackjack(player, *dealer_up, &fields),
        GroundTruth::Miniworld(snap) => miniworld(snap, &fields)?,
    };
    r.format_valid = format_valid;
    Ok(r)
}

fn yes_no(ok: bool) -> &'static str {
    if ok {
        "yes"
    } else {
        "no"
    }
}

fn finish(
    answers: Vec<String>,
    checks: &[bool],
    possible: bool,
    target: TargetFormula,
    canonical: Thought,
) -> CorrectionResponse {
    let ok = checks.iter().all(|&c| c);
    CorrectionResponse {
        answers,
        evaluation: Verdict::from_bool(ok),
        possible_solution: (!ok).then_some(Verdict::from_bool(possible)),
        target_formula: target,
        correction: (!ok).then(|| Correction::new(canonical)),
        format_valid: false,
    }
}

fn sorted<T: Ord + Clone>(v: &[T]) -> Vec<T> {
    let mut v = v.to_vec();
    v.sort();
    v
}

fn cards(
    values: &[u8],
    prefix: &Formula,
    rules: &FormulaRules,
    fields: &ThoughtFields,
    ctx: &mut EpisodeContext,
) -> CorrectionResponse {
    let solutions = find_formulas(values, rules);
    let compatible = |t: &Formula| t.starts_with(prefix);
    let reselect = !ctx.target.as_ref().is_some_and(compatible);
    let target = if reselect {
        let fits: Vec<Formula> = solutions.iter().filter(|f| compatible(f)).cloned().collect();
        smallest(&fits).cloned().or_else(|| witness(values, prefix, rules))
    } else {
        ctx.target.clone()
    };

    let cards_ok = fields
        .recognized_cards
        .as_ref()
        .is_some_and(|c| sorted(c) == sorted(values));
    let proposed = fields.proposed_formula.as_ref();
    let plan_ok = match (&target, proposed) {
        (None, Some(None)) => true,
        (Some(t), Some(Some(p))) => {
            p == t || (reselect && compatible(p) && solutions.contains(p))
        }
        _ => false,
    };
    // A correct alternative plan becomes the episode target.
    let target = match (plan_ok, proposed) {
        (true, Some(Some(p))) => Some(p.clone()),
        _ => target,
    };
    let expected = match &target {
        Some(t) if t.len() > prefix.len() => t.tokens()[prefix.len()].to_string(),
        _ => "=".to_string(),
    };
    let action_ok = fields.chosen_action.as_deref() == Some(expected.as_str());
    if target.is_some() {
        ctx.target = target.clone();
    }

    let answers = vec![
        format!(
            "cards {}; {} solutions",
            join(values),
            solutions.len()
        ),
        format!(
            "recognized {}; match {}",
            fields.recognized_cards.as_deref().map_or("nothing".into(), join),
            yes_no(cards_ok)
        ),
        format!(
            "proposed {}; match {}",
            match proposed {
                Some(Some(p)) => p.to_string(),
                Some(None) => "none".into(),
                None => "nothing".into(),
            },
            yes_no(plan_ok)
        ),
        format!(
            "chose {}; expected {expected}",
            fields.chosen_action.as_deref().unwrap_or("nothing")
        ),
    ];
    let canonical = Thought::Cards {
        cards: values.to_vec(),
        formula: target.clone(),
        next: expected,
    };
    let possible = target.is_some();
    finish(
        answers,
        &[cards_ok, plan_ok, action_ok],
        possible,
        target.into(),
        canonical,
    )
}

/// The prefix followed by its first completion, when it has one.
fn witness(values: &[u8], prefix: &Formula, rules: &FormulaRules) -> Option<Formula> {
    let rest = complete_formula(values, prefix, rules).ok()??;
    let mut f = prefix.clone();
    for t in rest {
        f.push(t);
    }
    Some(f.without_equals())
}

fn join(values: &[u8]) -> String {
    values
        .iter()
        .map(u8::to_string)
        .collect::<Vec<_>>()
        .join(" ")
}

fn numberline(current: u8, target: u8, fields: &ThoughtFields) -> CorrectionResponse {
    let expected = if current < target { "+" } else { "-" };
    let state_ok = fields.current_target == Some((current, target));
    let action_ok = fields.chosen_action.as_deref() == Some(expected);
    let answers = vec![
        format!("current {current} target {target}; match {}", yes_no(state_ok)),
        format!("expected {expected}; match {}", yes_no(action_ok)),
    ];
    let canonical = Thought::Numberline {
        current,
        target,
        next: expected.into(),
    };
    finish(
        answers,
        &[state_ok, action_ok],
        true,
        TargetFormula::NotDetermined,
        canonical,
    )
}

fn blackjack(player: &[u8], dealer_up: u8, fields: &ThoughtFields) -> CorrectionResponse {
    let (total, soft) = hand_total(player);
    let dealer = dealer_up.min(10);
    let expected = basic_strategy(total, soft, dealer_up);
    let hand_ok = fields.hand == Some((total, soft, dealer));
    let action_ok = fields.chosen_action.as_deref() == Some(expected);
    let answers = vec![
        format!(
            "player {total}{} dealer {dealer}; match {}",
            if soft { " soft" } else { "" },
            yes_no(hand_ok)
        ),
        format!("expected {expected}; match {}", yes_no(action_ok)),
    ];
    let canonical = Thought::Blackjack {
        player: total,
        soft,
        dealer,
        next: expected.into(),
    };
    finish(
        answers,
        &[hand_ok, action_ok],
        true,
        TargetFormula::NotDetermined,
        canonical,
    )
}

/// The sub-goal still ahead, as (verb, object type).
pub(crate) fn next_subgoal(snap: &MiniworldSnapshot) -> (String, String) {
    let task = &snap.scene.task;
    let obj = task.target_object.clone();
    match subgoal_ladder(task.kind).get(snap.state.subgoals_hit) {
        Some(Subgoal::Take | Subgoal::TakeSecond) => ("take".into(), obj),
        Some(Subgoal::Apply) => {
            let verb = match task.kind.capability() {
                Some(Capability::Heat) => "heat",
                Some(Capability::Cool) => "cool",
                _ => "clean",
            };
            (verb.into(), obj)
        }
        Some(Subgoal::Toggle) => (
            "toggle".into(),
            object_type(&task.target_receptacle).to_string(),
        ),
        Some(Subgoal::PlaceFirst) | None => ("put".into(), obj),
    }
}

fn miniworld(snap: &MiniworldSnapshot, fields: &ThoughtFields) -> Result<CorrectionResponse, CorrectorError> {
    let (scene, state) = (&snap.scene, &snap.state);
    let visible: Vec<String> = scene.visible(state).into_iter().map(str::to_string).collect();
    let holding = state.holding.clone();
    let seen_ok = fields.seen.as_ref().is_some_and(|s| sorted(s) == sorted(&visible))
        && fields.holding.as_ref() == Some(&holding);
    let subgoal = next_subgoal(snap);
    let subgoal_ok = fields.subgoal_claim.as_ref() == Some(&subgoal);
    let expert = scripted_expert(scene, state)?;
    let action_ok = match fields.chosen_action.as_deref() {
        Some(a) if a == expert => true,
        Some(a) if scene.admissible_actions(state).iter().any(|x| x == a) => {
            let before = plan_length(scene, state);
            let after = scene.apply(state, a).and_then(|s| plan_length(scene, &s));
            matches!((before, after), (Some(b), Some(n)) if n < b)
        }
        _ => false,
    };
    let answers = vec![
        format!(
            "see {}; holding {}; match {}",
            if visible.is_empty() { "nothing".into() } else { visible.join(", ") },
            holding.as_deref().unwrap_or("nothing"),
            yes_no(seen_ok)
        ),
        format!("sub-goal {} {}; match {}", subgoal.0, subgoal.1, yes_no(subgoal_ok)),
        format!(
            "chose {}; expert {expert}; acceptable {}",
            fields.chosen_action.as_deref().unwrap_or("nothing"),
            yes_no(action_ok)
        ),
    ];
    let canonical = Thought::Miniworld {
        see: visible,
        holding,
        subgoal,
        next: expert,
    };
    Ok(finish(
        answers,
        &[seen_ok, subgoal_ok, action_ok],
        true,
        TargetFormula::NotDetermined,
        canonical,
    ))
}
