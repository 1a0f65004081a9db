use std::collections::{BTreeMap, BTreeSet};

use rand::seq::IndexedRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::MiniworldError;
use crate::seeding::rng_from_seed;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Capability {
    Heat,
    Cool,
    Clean,
    Light,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Receptacle {
    /// "<type> <n>", e.g. "fridge 1".
    pub name: String,
    #[serde(default)]
    pub openable: bool,
    #[serde(default)]
    pub capabilities: Vec<Capability>,
}

impl Receptacle {
    pub fn has(&self, cap: Capability) -> bool {
        self.capabilities.contains(&cap)
    }

    /// Lamps light things up but do not hold them.
    pub fn holds_objects(&self) -> bool {
        !self.has(Capability::Light)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SceneObject {
    pub name: String,
    pub receptacle: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TaskKind {
    PickPlace,
    CleanPlace,
    HeatPlace,
    CoolPlace,
    LookLight,
    PickTwo,
}

impl TaskKind {
    pub const ALL: [TaskKind; 6] = [
        TaskKind::PickPlace,
        TaskKind::CleanPlace,
        TaskKind::HeatPlace,
        TaskKind::CoolPlace,
        TaskKind::LookLight,
        TaskKind::PickTwo,
    ];

    pub fn capability(self) -> Option<Capability> {
        match self {
            TaskKind::CleanPlace => Some(Capability::Clean),
            TaskKind::HeatPlace => Some(Capability::Heat),
            TaskKind::CoolPlace => Some(Capability::Cool),
            TaskKind::LookLight => Some(Capability::Light),
            TaskKind::PickPlace | TaskKind::PickTwo => None,
        }
    }
}

/// `target_object` is an object type ("apple"); `target_receptacle` is a
/// receptacle name. For look_light the receptacle is the lamp to use.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TaskSpec {
    pub kind: TaskKind,
    pub target_object: String,
    pub target_receptacle: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SceneConfig {
    pub receptacles: Vec<Receptacle>,
    pub objects: Vec<SceneObject>,
    pub task: TaskSpec,
}

/// Type part of an instance name: "alarmclock 2" -> "alarmclock".
pub fn object_type(name: &str) -> &str {
    name.rsplit_once(' ').map_or(name, |(t, _)| t)
}

fn well_formed(name: &str) -> bool {
    match name.split_once(' ') {
        Some((t, n)) => {
            !t.is_empty()
                && t.chars().all(|c| c.is_ascii_lowercase())
                && n.parse::<u32>().is_ok_and(|n| n >= 1)
        }
        None => false,
    }
}

impl SceneConfig {
    pub fn from_json(text: &str) -> Result<Self, MiniworldError> {
        let scene: SceneConfig =
            serde_json::from_str(text).map_err(|e| MiniworldError::InvalidScene(e.to_string()))?;
        scene.validate()?;
        Ok(scene)
    }

    pub fn receptacle(&self, name: &str) -> Option<&Receptacle> {
        self.receptacles.iter().find(|r| r.name == name)
    }

    pub fn target_instances(&self) -> Vec<&str> {
        self.objects
            .iter()
            .filter(|o| object_type(&o.name) == self.task.target_object)
            .map(|o| o.name.as_str())
            .collect()
    }

    /// Structural checks. A missing capability is not an error here; the
    /// expert reports it as an unsolvable scene.
    pub fn validate(&self) -> Result<(), MiniworldError> {
        let bad = |m: String| Err(MiniworldError::InvalidScene(m));
        let mut seen = BTreeSet::new();
        for name in self
            .receptacles
            .iter()
            .map(|r| &r.name)
            .chain(self.objects.iter().map(|o| &o.name))
        {
            if !well_formed(name) {
                return bad(format!("name {name:?} is not \"<type> <n>\""));
            }
            if !seen.insert(name) {
                return bad(format!("duplicate name {name:?}"));
            }
        }
        for o in &self.objects {
            match self.receptacle(&o.receptacle) {
                None => return bad(format!("{} starts in unknown {}", o.name, o.receptacle)),
                Some(r) if !r.holds_objects() => {
                    return bad(format!("{} cannot hold {}", r.name, o.name))
                }
                Some(_) => {}
            }
        }
        let needed = if self.task.kind == TaskKind::PickTwo { 2 } else { 1 };
        if self.target_instances().len() < needed {
            return bad(format!(
                "task needs {needed} instance(s) of {}",
                self.task.target_object
            ));
        }
        match self.receptacle(&self.task.target_receptacle) {
            None => bad(format!("unknown target receptacle {}", self.task.target_receptacle)),
            Some(r) if self.task.kind == TaskKind::LookLight && !r.has(Capability::Light) => {
                bad(format!("{} is not a light", r.name))
            }
            Some(r) if self.task.kind != TaskKind::LookLight && !r.holds_objects() => {
                bad(format!("{} cannot hold objects", r.name))
            }
            Some(_) => Ok(()),
        }
    }

    pub fn goal_text(&self) -> String {
        let (obj, rec) = (&self.task.target_object, &self.task.target_receptacle);
        match self.task.kind {
            TaskKind::PickPlace => format!("put some {obj} in {rec}."),
            TaskKind::CleanPlace => format!("put a clean {obj} in {rec}."),
            TaskKind::HeatPlace => format!("put a hot {obj} in {rec}."),
            TaskKind::CoolPlace => format!("put a cool {obj} in {rec}."),
            TaskKind::LookLight => format!("examine the {obj} with the {rec}."),
            TaskKind::PickTwo => format!("put two {obj} in {rec}."),
        }
    }
}

const PLAIN: &[&str] = &[
    "armchair",
    "bed",
    "cabinet",
    "coffeetable",
    "countertop",
    "desk",
    "diningtable",
    "drawer",
    "dresser",
    "garbagecan",
    "shelf",
    "sidetable",
    "sofa",
];
const OPENABLE: &[&str] = &["cabinet", "drawer", "fridge", "microwave"];

fn station(cap: Capability) -> &'static str {
    match cap {
        Capability::Heat => "microwave",
        Capability::Cool => "fridge",
        Capability::Clean => "sinkbasin",
        Capability::Light => "desklamp",
    }
}

const HEATABLE: &[&str] = &["apple", "bread", "egg", "mug", "potato", "tomato"];
const COOLABLE: &[&str] = &["apple", "bread", "lettuce", "mug", "potato", "tomato"];
const CLEANABLE: &[&str] = &["apple", "bowl", "knife", "lettuce", "mug", "plate", "spoon"];
const EXAMINABLE: &[&str] = &["alarmclock", "book", "cd", "cellphone", "keychain", "pen", "pencil", "vase"];
const PORTABLE: &[&str] = &[
    "alarmclock", "apple", "book", "bowl", "bread", "cd", "cellphone", "egg", "keychain", "knife",
    "lettuce", "mug", "pen", "pencil", "plate", "potato", "spoon", "tomato", "vase",
];

/// Every receptacle and object type the generator can produce.
pub fn scene_vocabulary() -> Vec<&'static str> {
    let mut all: BTreeSet<&str> = PLAIN.iter().chain(PORTABLE).copied().collect();
    all.extend(
        [Capability::Heat, Capability::Cool, Capability::Clean, Capability::Light].map(station),
    );
    all.into_iter().collect()
}

fn make_receptacle(kind: &str, counts: &mut BTreeMap<String, u32>) -> Receptacle {
    let n = counts.entry(kind.to_string()).or_insert(0);
    *n += 1;
    let capabilities = [Capability::Heat, Capability::Cool, Capability::Clean, Capability::Light]
        .into_iter()
        .filter(|&c| station(c) == kind)
        .collect();
    Receptacle {
        name: format!("{kind} {n}"),
        openable: OPENABLE.contains(&kind),
        capabilities,
    }
}

/// Random solvable scene with 4..=8 receptacles and 3..=6 objects. The
/// target objects never start in the target receptacle.
pub fn generate_scene(seed: u64) -> SceneConfig {
    let mut rng = rng_from_seed(seed);
    let kind = TaskKind::ALL[rng.random_range(0..TaskKind::ALL.len())];
    let n_rec = rng.random_range(4..=8usize);
    let n_obj = rng.random_range(3..=6usize);

    let mut counts = BTreeMap::new();
    let mut receptacles = Vec::new();
    if let Some(cap) = kind.capability() {
        receptacles.push(make_receptacle(station(cap), &mut counts));
    }
    // At least two plain receptacles so targets can start somewhere else.
    for _ in 0..2 {
        let t = PLAIN.choose(&mut rng).unwrap();
        receptacles.push(make_receptacle(t, &mut counts));
    }
    let extras = ["fridge", "microwave", "sinkbasin"];
    while receptacles.len() < n_rec {
        let t = if rng.random_bool(0.25) {
            extras.choose(&mut rng).unwrap()
        } else {
            PLAIN.choose(&mut rng).unwrap()
        };
        receptacles.push(make_receptacle(t, &mut counts));
    }

    let plain: Vec<&Receptacle> = receptacles
        .iter()
        .filter(|r| r.capabilities.is_empty())
        .collect();
    let target_receptacle = match kind {
        TaskKind::LookLight => receptacles[0].name.clone(),
        _ => plain.choose(&mut rng).unwrap().name.clone(),
    };
    let pool = match kind {
        TaskKind::HeatPlace => HEATABLE,
        TaskKind::CoolPlace => COOLABLE,
        TaskKind::CleanPlace => CLEANABLE,
        TaskKind::LookLight => EXAMINABLE,
        TaskKind::PickPlace | TaskKind::PickTwo => PORTABLE,
    };
    let target_object = pool.choose(&mut rng).unwrap().to_string();

    let holders: Vec<&Receptacle> = receptacles.iter().filter(|r| r.holds_objects()).collect();
    let away: Vec<&&Receptacle> = holders
        .iter()
        .filter(|r| r.name != target_receptacle)
        .collect();
    let mut objects = Vec::new();
    let n_targets = if kind == TaskKind::PickTwo { 2 } else { 1 };
    for i in 1..=n_targets {
        objects.push(SceneObject {
            name: format!("{target_object} {i}"),
            receptacle: away.choose(&mut rng).unwrap().name.clone(),
        });
    }
    let distractors: Vec<&str> = PORTABLE
        .iter()
        .copied()
        .filter(|t| *t != target_object)
        .collect();
    let mut obj_counts: BTreeMap<&str, u32> = BTreeMap::new();
    while objects.len() < n_obj {
        let t = *distractors.choose(&mut rng).unwrap();
        let n = obj_counts.entry(t).or_insert(0);
        *n += 1;
        objects.push(SceneObject {
            name: format!("{t} {n}"),
            receptacle: holders.choose(&mut rng).unwrap().name.clone(),
        });
    }

    let scene = SceneConfig {
        receptacles,
        objects,
        task: TaskSpec {
            kind,
            target_object,
            target_receptacle,
        },
    };
    debug_assert!(scene.validate().is_ok());
    scene
}
