use std::fmt::Write;

use super::{Symbols, Task};

const SKELETON: &str = "Reply as \"thought: <reasoning> action: <action>\".";

fn join_nums(values: &[u8]) -> String {
    values
        .iter()
        .map(|v| v.to_string())
        .collect::<Vec<_>>()
        .join(" ")
}

/// Deterministic text prompt for an observation.
pub fn render_prompt(task: Task, symbols: &Symbols, history: &[String]) -> String {
    let mut out = String::new();
    match symbols {
        Symbols::Cards(c) => {
            let (ops, name) = match task {
                Task::Ezpoints => ("+ -", "EZPoints"),
                _ => ("+ - * / ( )", "Points24"),
            };
            let _ = writeln!(
                out,
                "Game: {name}. Build a formula equal to {} using every card once with {ops}, then press =.",
                c.target
            );
            let _ = writeln!(out, "Cards: {}", join_nums(&c.perceived));
            let formula = c.formula.concat();
            let shown = if formula.is_empty() { "(empty)" } else { &formula };
            let _ = writeln!(out, "Formula: {shown}");
            let _ = writeln!(out, "Action is one token: a card value, an operator or =.");
        }
        Symbols::Numberline { target, current } => {
            let _ = writeln!(out, "Game: Numberline. Make current equal target using + or -.");
            let _ = writeln!(out, "Target: {target}");
            let _ = writeln!(out, "Current: {current}");
        }
        Symbols::Blackjack {
            player,
            dealer_up,
            player_total,
            soft,
        } => {
            let _ = writeln!(out, "Game: Blackjack. Choose hit or stand to beat the dealer.");
            let _ = writeln!(
                out,
                "Player: {} (total {player_total}{})",
                join_nums(player),
                if *soft { ", soft" } else { "" }
            );
            let _ = writeln!(out, "Dealer shows: {dealer_up}");
        }
        Symbols::Miniworld(m) => {
            let _ = writeln!(out, "Household task: {}", m.goal_text);
            if let Some(all) = &m.description {
                let _ = writeln!(out, "Room contains: {}", all.join(", "));
            }
            let _ = writeln!(
                out,
                "Location: {}",
                m.location.as_deref().unwrap_or("middle of the room")
            );
            if let Some(open) = m.location_open {
                let _ = writeln!(out, "It is {}.", if open { "open" } else { "closed" });
            }
            let seen = if m.visible.is_empty() {
                "nothing".to_string()
            } else {
                m.visible.join(", ")
            };
            let _ = writeln!(out, "You see: {seen}");
            let _ = writeln!(
                out,
                "Holding: {}",
                m.holding.as_deref().unwrap_or("nothing")
            );
            let _ = writeln!(out, "History:");
            for (i, a) in history.iter().enumerate() {
                let _ = writeln!(out, "{}. {a}", i + 1);
            }
        }
    }
    out.push_str(SKELETON);
    out
}
