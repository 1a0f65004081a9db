use gtr_core::envs::{EnvConfig, Environment};
use gtr_core::miniworld::{
    expert_rollout, generate_scene, plan_length, scripted_expert, MiniworldEnv, MiniworldError,
    SceneConfig, TaskKind, STEP_CAP,
};
use proptest::prelude::*;

fn fixture(name: &str) -> SceneConfig {
    let path = format!("{}/data/scenes/{name}.json", env!("CARGO_MANIFEST_DIR"));
    SceneConfig::from_json(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn run(env: &mut MiniworldEnv, actions: &[&str]) -> Vec<f64> {
    actions.iter().map(|a| env.step(a).unwrap().reward).collect()
}

#[test]
fn heat_place_hand_trace() {
    let mut env = MiniworldEnv::with_scene(fixture("heat_apple"), &EnvConfig::default()).unwrap();
    env.reset(0);
    let rewards = run(
        &mut env,
        &[
            "go to fridge 1",
            "open fridge 1",
            "take apple 1 from fridge 1",
            "go to microwave 1",
            "heat apple 1 with microwave 1",
            "go to diningtable 1",
            "put apple 1 in/on diningtable 1",
        ],
    );
    assert_eq!(rewards, vec![0.0, 0.0, 1.0, 0.0, 1.0, 0.0, 50.0]);
    assert!(env.is_done() && !env.is_truncated());
}

#[test]
fn look_light_goal_coincides_with_last_subgoal() {
    let mut env = MiniworldEnv::with_scene(fixture("look_book"), &EnvConfig::default()).unwrap();
    env.reset(0);
    let rewards = run(
        &mut env,
        &[
            "go to drawer 1",
            "open drawer 1",
            "take book 1 from drawer 1",
            "go to desklamp 1",
            "toggle book 1 desklamp 1",
        ],
    );
    assert_eq!(rewards, vec![0.0, 0.0, 1.0, 0.0, 51.0]);
}

#[test]
fn pick_two_expert_trace() {
    let scene = fixture("two_mugs");
    let plan = expert_rollout(&scene).unwrap();
    assert_eq!(plan.first().unwrap(), "go to cabinet 1");
    let mut env = MiniworldEnv::with_scene(scene, &EnvConfig::default()).unwrap();
    env.reset(0);
    let refs: Vec<&str> = plan.iter().map(String::as_str).collect();
    let total: f64 = run(&mut env, &refs).iter().sum();
    assert_eq!(total, 53.0);
}

#[test]
fn subgoals_pay_once() {
    let mut env = MiniworldEnv::with_scene(fixture("heat_apple"), &EnvConfig::default()).unwrap();
    env.reset(0);
    let r = run(
        &mut env,
        &[
            "go to fridge 1",
            "open fridge 1",
            "take apple 1 from fridge 1",
            "put apple 1 in/on fridge 1",
            "take apple 1 from fridge 1",
        ],
    );
    assert_eq!(r, vec![0.0, 0.0, 1.0, 0.0, 0.0]);
}

#[test]
fn admissible_examples() {
    let scene = fixture("heat_apple");
    let mut s = scene.initial_state();
    assert!(scene.admissible_actions(&s).iter().all(|a| !a.starts_with("put")));
    s = scene.apply(&s, "go to countertop 1").unwrap();
    assert!(scene
        .admissible_actions(&s)
        .contains(&"take mug 1 from countertop 1".to_string()));
    for a in ["go to fridge 1", "open fridge 1", "take apple 1 from fridge 1"] {
        s = scene.apply(&s, a).unwrap();
    }
    let acts = scene.admissible_actions(&s);
    assert!(acts.contains(&"cool apple 1 with fridge 1".to_string()));
    assert!(!acts.iter().any(|a| a.starts_with("take")));
}

#[test]
fn inadmissible_action_changes_nothing_but_history() {
    let mut env = MiniworldEnv::with_scene(fixture("heat_apple"), &EnvConfig::default()).unwrap();
    env.reset(0);
    env.step("go to fridge 1").unwrap();
    let before = env.state().clone();
    let out = env.step("go to nowhere 9").unwrap();
    assert_eq!(out.reward, -1.0);
    assert_eq!(env.state(), &before);
    assert_eq!(env.history(), &["go to fridge 1", "go to nowhere 9"]);
}

#[test]
fn repeated_noop_truncates() {
    let config = EnvConfig {
        truncation: true,
        ..EnvConfig::default()
    };
    let mut env = MiniworldEnv::with_scene(fixture("heat_apple"), &config).unwrap();
    env.reset(0);
    assert!(!env.step("jump").unwrap().done);
    assert!(!env.step("jump").unwrap().done);
    let out = env.step("jump").unwrap();
    assert!(out.done && out.truncated);
}

#[test]
fn history_cap_truncates() {
    let config = EnvConfig {
        truncation: true,
        ..EnvConfig::default()
    };
    let mut env = MiniworldEnv::with_scene(fixture("heat_apple"), &config).unwrap();
    env.reset(0);
    let mut n = 0;
    while !env.is_done() {
        let a = if n % 2 == 0 { "go to countertop 1" } else { "go to diningtable 1" };
        env.step(a).unwrap();
        n += 1;
    }
    assert!(env.is_truncated());
    assert_eq!(n, config.max_history + 1);
}

#[test]
fn expert_solves_generated_scenes() {
    let mut solved = 0;
    for seed in 0..1000 {
        let scene = generate_scene(seed);
        let plan = expert_rollout(&scene).unwrap_or_else(|e| panic!("seed {seed}: {e}"));
        assert!(plan.len() < STEP_CAP, "seed {seed}: {} steps", plan.len());
        let mut env = MiniworldEnv::with_scene(scene, &EnvConfig::default()).unwrap();
        env.reset(0);
        for a in &plan {
            let out = env.step(a).unwrap();
            assert!(out.info.legal, "seed {seed}: {a}");
        }
        solved += usize::from(env.state().goal_reached);
    }
    assert_eq!(solved, 1000);
}

#[test]
fn missing_station_is_unsolvable() {
    let mut scene = fixture("heat_apple");
    scene.receptacles.retain(|r| r.name != "microwave 1");
    assert!(scene.validate().is_ok());
    let s = scene.initial_state();
    assert!(matches!(
        scripted_expert(&scene, &s),
        Err(MiniworldError::UnsolvableScene(_))
    ));
}

#[test]
fn all_task_kinds_are_generated() {
    let kinds: std::collections::BTreeSet<TaskKind> =
        (0..200).map(|s| generate_scene(s).task.kind).collect();
    assert_eq!(kinds.len(), 6);
}

#[test]
fn prompt_lists_history_in_order() {
    let mut env = MiniworldEnv::with_scene(fixture("heat_apple"), &EnvConfig::default()).unwrap();
    env.reset(0);
    env.step("go to fridge 1").unwrap();
    let obs = env.step("open fridge 1").unwrap().observation;
    let a = obs.prompt_text.find("1. go to fridge 1").unwrap();
    let b = obs.prompt_text.find("2. open fridge 1").unwrap();
    assert!(a < b);
    assert!(!obs.prompt_text.contains("Room contains"));
    let config = EnvConfig {
        text_description: true,
        ..EnvConfig::default()
    };
    let mut env = MiniworldEnv::with_scene(fixture("heat_apple"), &config).unwrap();
    assert!(env.reset(0).prompt_text.contains("Room contains"));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    // Random walks mixing admissible and junk actions: rewards stay in the
    // declared set, sub-goal bonus is bounded and the expert can always
    // finish from wherever the walk stopped.
    #[test]
    fn random_walk_invariants(seed in 0u64..10_000, picks in prop::collection::vec(0usize..64, 1..40)) {
        let mut env = MiniworldEnv::random(&EnvConfig::default());
        env.reset(seed);
        let ladder = gtr_core::miniworld::subgoal_ladder(env.scene().task.kind).len();
        let mut bonus = 0.0;
        for p in picks {
            if env.is_done() {
                break;
            }
            let acts = env.legal_actions();
            let a = if p % 7 == 0 { "look around".to_string() } else { acts[p % acts.len()].clone() };
            let out = env.step(&a).unwrap();
            prop_assert!(env.reward_set().contains(&out.reward));
            if out.info.subgoal_hit {
                bonus += 1.0;
            }
            if env.state().holding.is_some() {
                let held = env.state().holding.clone().unwrap();
                prop_assert_eq!(&env.state().object_at[&held], &gtr_core::miniworld::Place::Held);
            }
        }
        prop_assert!(bonus <= ladder as f64);
        if !env.state().goal_reached {
            prop_assert!(plan_length(env.scene(), env.state()).is_some());
        }
    }
}
