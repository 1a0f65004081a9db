//! Chat-completion corrector. Points24 and household steps are sent to the
//! endpoint with the shipped prompt templates; other tasks have no template
//! and are judged by the oracle.

use std::time::Duration;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::{
    oracle_correct, parse_target, Correction, CorrectionOutcome, CorrectionRequest,
    CorrectionResponse, Corrector, CorrectorError, EpisodeContext, TargetFormula, Thought,
    ThoughtFields, Verdict,
};
use crate::envs::{GroundTruth, Symbols, Task};
use crate::solver24::{find_formulas, CardValue, FormulaRules};

pub const POINTS24_SYSTEM: &str = include_str!("../../data/prompts/points24_system.txt");
pub const POINTS24_QUERY: &str = include_str!("../../data/prompts/points24_query.txt");
pub const ALFWORLD_SYSTEM: &str = include_str!("../../data/prompts/alfworld_system.txt");
pub const ALFWORLD_QUERY: &str = include_str!("../../data/prompts/alfworld_query.txt");

pub const TOOL_NAME: &str = "find_all_correct_formulas";
pub const DEFAULT_API_KEY_ENV: &str = "GTR_CORRECTOR_API_KEY";
const MAX_TOOL_ROUNDS: usize = 4;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CorrectorEndpoint {
    pub base_url: String,
    pub model_name: String,
    pub api_key_env: String,
    pub timeout_secs: f64,
    pub max_retries: u32,
    pub temperature: f64,
    pub max_text_len: u32,
    /// Judge with the oracle when the endpoint keeps failing.
    pub fallback: bool,
    pub max_in_flight: usize,
}

impl Default for CorrectorEndpoint {
    fn default() -> Self {
        Self {
            base_url: "http://127.0.0.1:8000/v1".into(),
            model_name: "gpt-4o".into(),
            api_key_env: DEFAULT_API_KEY_ENV.into(),
            timeout_secs: 60.0,
            max_retries: 3,
            temperature: 0.4,
            max_text_len: 600,
            fallback: true,
            max_in_flight: 4,
        }
    }
}

impl CorrectorEndpoint {
    pub fn validate(&self) -> Result<(), String> {
        if !(self.timeout_secs.is_finite() && self.timeout_secs > 0.0) {
            return Err("corrector timeout must be positive".into());
        }
        if !(self.temperature.is_finite() && self.temperature >= 0.0) {
            return Err("corrector temperature must be non-negative".into());
        }
        if self.max_in_flight == 0 {
            return Err("corrector max_in_flight must be at least 1".into());
        }
        Ok(())
    }
}

pub struct RemoteCorrector {
    endpoint: CorrectorEndpoint,
    api_key: String,
    agent: ureq::Agent,
}

enum Failure {
    Transport(String),
    Schema(String),
}

impl RemoteCorrector {
    /// Reads the API key from the endpoint's environment variable.
    pub fn new(endpoint: CorrectorEndpoint) -> Result<Self, CorrectorError> {
        let api_key = std::env::var(&endpoint.api_key_env)
            .map_err(|_| CorrectorError::MissingApiKey(endpoint.api_key_env.clone()))?;
        Self::with_key(endpoint, api_key)
    }

    pub fn with_key(endpoint: CorrectorEndpoint, api_key: String) -> Result<Self, CorrectorError> {
        endpoint.validate().map_err(CorrectorError::BadRequest)?;
        let agent = ureq::Agent::config_builder()
            .timeout_global(Some(Duration::from_secs_f64(endpoint.timeout_secs)))
            .http_status_as_error(false)
            .build()
            .into();
        Ok(Self {
            endpoint,
            api_key,
            agent,
        })
    }

    fn post(&self, messages: &[Value], tools: bool) -> Result<Value, Failure> {
        let mut body = json!({
            "model": self.endpoint.model_name,
            "temperature": self.endpoint.temperature,
            "max_tokens": self.endpoint.max_text_len,
            "messages": messages,
        });
        if tools {
            body["tools"] = tool_spec();
        }
        let url = format!("{}/chat/completions", self.endpoint.base_url.trim_end_matches('/'));
        let mut resp = self
            .agent
            .post(&url)
            .header("Authorization", &format!("Bearer {}", self.api_key))
            .send_json(&body)
            .map_err(|e| Failure::Transport(e.to_string()))?;
        let status = resp.status().as_u16();
        let text = resp
            .body_mut()
            .read_to_string()
            .map_err(|e| Failure::Transport(e.to_string()))?;
        if status != 200 {
            return Err(Failure::Transport(format!("HTTP {status}: {text}")));
        }
        serde_json::from_str(&text).map_err(|e| Failure::Schema(format!("envelope: {e}")))
    }

    fn attempt(
        &self,
        request: &CorrectionRequest,
        ctx: &EpisodeContext,
    ) -> Result<CorrectionResponse, Failure> {
        let tools = request.task() == Task::Points24;
        let mut messages = build_messages(request, ctx).map_err(Failure::Schema)?;
        for _ in 0..=MAX_TOOL_ROUNDS {
            let v = self.post(&messages, tools)?;
            let msg = v["choices"][0]["message"].clone();
            if !msg.is_object() {
                return Err(Failure::Schema("no choices[0].message".into()));
            }
            match msg["tool_calls"].as_array() {
                Some(calls) if !calls.is_empty() => {
                    let replies: Vec<Value> = calls.iter().map(tool_reply).collect();
                    messages.push(msg);
                    messages.extend(replies);
                }
                _ => {
                    let content = msg["content"]
                        .as_str()
                        .ok_or_else(|| Failure::Schema("message has no content".into()))?;
                    let mut r = parse_reply(content, request.task()).map_err(Failure::Schema)?;
                    r.format_valid = request.format_valid;
                    return Ok(r);
                }
            }
        }
        Err(Failure::Schema("too many tool-call rounds".into()))
    }
}

impl Corrector for RemoteCorrector {
    fn correct(
        &self,
        request: &CorrectionRequest,
        ctx: &mut EpisodeContext,
    ) -> Result<CorrectionOutcome, CorrectorError> {
        if !matches!(request.task(), Task::Points24 | Task::Miniworld) {
            return oracle_fallback(request, ctx, 0);
        }
        let mut last = Failure::Transport("no attempt made".into());
        for attempt in 0..=self.endpoint.max_retries {
            match self.attempt(request, ctx) {
                Ok(response) => {
                    if let Some(t) = response.target_formula.concrete() {
                        ctx.target = Some(t.clone());
                    }
                    return Ok(CorrectionOutcome {
                        response,
                        fallback_used: false,
                        retries: attempt,
                    });
                }
                Err(e) => last = e,
            }
        }
        if self.endpoint.fallback {
            return oracle_fallback(request, ctx, self.endpoint.max_retries);
        }
        Err(match last {
            Failure::Transport(m) => CorrectorError::EndpointUnavailable(m),
            Failure::Schema(m) => CorrectorError::SchemaViolation(m),
        })
    }
}

fn oracle_fallback(
    request: &CorrectionRequest,
    ctx: &mut EpisodeContext,
    retries: u32,
) -> Result<CorrectionOutcome, CorrectorError> {
    let response = oracle_correct(&request.truth, &request.thought, request.format_valid, ctx)?;
    Ok(CorrectionOutcome {
        response,
        fallback_used: true,
        retries,
    })
}

pub fn tool_spec() -> Value {
    json!([{
        "type": "function",
        "function": {
            "name": TOOL_NAME,
            "description": "List every formula over the four card ranks that evaluates to 24. J, Q and K count as 10.",
            "parameters": {
                "type": "object",
                "properties": {
                    "cards": {
                        "type": "array",
                        "items": {"type": "integer", "minimum": 1, "maximum": 13},
                        "minItems": 4,
                        "maxItems": 4
                    }
                },
                "required": ["cards"]
            }
        }
    }])
}

/// Runs a tool call locally and wraps the result as a tool message.
fn tool_reply(call: &Value) -> Value {
    let id = call["id"].as_str().unwrap_or_default();
    let f = &call["function"];
    let args = match &f["arguments"] {
        Value::String(s) => serde_json::from_str(s).unwrap_or(Value::Null),
        other => other.clone(),
    };
    let content = if f["name"].as_str() != Some(TOOL_NAME) {
        json!({"error": format!("unknown tool {}", f["name"])})
    } else {
        match solve_tool(&args) {
            Ok(list) => json!({ "formulas": list }),
            Err(e) => json!({ "error": e }),
        }
    };
    json!({"role": "tool", "tool_call_id": id, "content": content.to_string()})
}

fn solve_tool(args: &Value) -> Result<Vec<String>, String> {
    let cards = args["cards"].as_array().ok_or("missing cards")?;
    let values = cards
        .iter()
        .map(|c| {
            let n = c
                .as_u64()
                .or_else(|| c.as_str().and_then(|s| s.parse().ok()))
                .ok_or("cards must be integers")?;
            let card = u8::try_from(n)
                .ok()
                .and_then(|n| CardValue::new(n).ok())
                .ok_or("card rank out of range")?;
            Ok(card.effective())
        })
        .collect::<Result<Vec<u8>, &str>>()?;
    if values.len() != 4 {
        return Err("exactly four cards are required".into());
    }
    Ok(find_formulas(&values, &FormulaRules::POINTS24)
        .iter()
        .map(|f| f.to_string())
        .collect())
}

fn fill(template: &str, slots: &[(&str, &str)]) -> String {
    slots.iter().fold(template.to_string(), |t, (k, v)| {
        t.replace(&format!("{{{{{k}}}}}"), v)
    })
}

/// System and user messages for one step. The symbolic observation stands
/// in for the image.
pub fn build_messages(request: &CorrectionRequest, ctx: &EpisodeContext) -> Result<Vec<Value>, String> {
    let thought = request.thought.join(" ");
    let (system, user) = match (&request.truth, &request.observation.symbols) {
        (GroundTruth::Cards { formula, .. }, Symbols::Cards(c)) => {
            let ranks: Vec<String> = c.ranks.iter().map(|r| r.to_string()).collect();
            let current = if formula.is_empty() {
                "(empty)".to_string()
            } else {
                formula.to_string()
            };
            let target = TargetFormula::from(ctx.target.clone()).to_string();
            let query = fill(
                POINTS24_QUERY,
                &[
                    ("current_formula", &current),
                    ("thought", &thought),
                    ("target_formula", &target),
                ],
            );
            (POINTS24_SYSTEM, format!("[Cards] {}\n{query}", ranks.join(" ")))
        }
        (GroundTruth::Miniworld(snap), _) => {
            let history = if snap.history.is_empty() {
                "none.".to_string()
            } else {
                format!("{}.", snap.history.join(", "))
            };
            let admissible = format!("{}.", snap.scene.admissible_actions(&snap.state).join(", "));
            let query = fill(
                ALFWORLD_QUERY,
                &[
                    ("task", &snap.scene.goal_text()),
                    ("history", &history),
                    ("admissible", &admissible),
                    ("thought", &thought),
                ],
            );
            (
                ALFWORLD_SYSTEM,
                format!("[Observation]\n{}\n{query}", request.observation.prompt_text),
            )
        }
        _ => return Err(format!("no prompt template for {}", request.task())),
    };
    Ok(vec![
        json!({"role": "system", "content": system.trim_end()}),
        json!({"role": "user", "content": user.trim_end()}),
    ])
}

fn verdict(v: &Value) -> Option<Verdict> {
    match v.as_str()?.trim().to_ascii_uppercase().as_str() {
        "YES" => Some(Verdict::Yes),
        "NO" => Some(Verdict::No),
        _ => None,
    }
}

fn is_none(v: &Value) -> bool {
    match v {
        Value::Null => true,
        Value::String(s) => matches!(s.trim().to_ascii_lowercase().as_str(), "" | "none" | "null"),
        _ => false,
    }
}

fn read_thought(v: &Value) -> Result<Thought, String> {
    if let Ok(t) = serde_json::from_value::<Thought>(v.clone()) {
        return Ok(t);
    }
    let text = match v {
        Value::String(s) => s.as_str(),
        Value::Object(m) => m
            .get("thought")
            .and_then(Value::as_str)
            .ok_or("correction object does not match the thought schema")?,
        _ => return Err("correction is neither an object nor text".into()),
    };
    let words: Vec<&str> = text.split_whitespace().collect();
    ThoughtFields::parse(&words)
        .to_thought()
        .ok_or_else(|| format!("correction text {text:?} does not parse as a thought"))
}

/// Parses the model's final JSON answer. Tolerates surrounding prose and
/// code fences.
pub fn parse_reply(content: &str, task: Task) -> Result<CorrectionResponse, String> {
    let start = content.find('{').ok_or("no JSON object in reply")?;
    let end = content.rfind('}').ok_or("no JSON object in reply")?;
    let v: Value = serde_json::from_str(&content[start..=end]).map_err(|e| format!("reply: {e}"))?;
    let answers = (1..=4)
        .filter_map(|i| match &v[format!("answer{i}")] {
            Value::Null => None,
            Value::String(s) => Some(s.clone()),
            other => Some(other.to_string()),
        })
        .collect();
    let evaluation = verdict(&v["evaluation"]).ok_or("evaluation must be YES or NO")?;
    let possible_solution = if is_none(&v["possible_solution"]) {
        None
    } else {
        Some(verdict(&v["possible_solution"]).ok_or("possible_solution must be YES, NO or None")?)
    };
    let target_formula = match &v["target_formula"] {
        Value::String(s) if task.is_card_formula() => parse_target(s)?,
        _ => TargetFormula::NotDetermined,
    };
    let correction = match evaluation {
        Verdict::Yes => None,
        Verdict::No if is_none(&v["correction"]) => None,
        Verdict::No => Some(Correction::new(read_thought(&v["correction"])?)),
    };
    if evaluation == Verdict::No && correction.is_none() && possible_solution != Some(Verdict::No) {
        return Err("a NO verdict needs a correction".into());
    }
    let r = CorrectionResponse {
        answers,
        evaluation,
        possible_solution,
        target_formula,
        correction,
        format_valid: false,
    };
    r.check()?;
    Ok(r)
}
