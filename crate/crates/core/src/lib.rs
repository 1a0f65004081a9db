//! Guided thought reinforcement at desk scale.

pub mod corrector;
pub mod envs;
pub mod miniworld;
pub mod policy;
pub mod seeding;
pub mod solver24;
pub mod trainer;
