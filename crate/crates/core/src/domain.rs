//! Roles and wellbeing labels shared by every stage of the pipeline.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::Error;

/// Job role of a participant. Networks route rows by role.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    Nurse,
    Doctor,
}

impl Role {
    pub const ALL: [Role; 2] = [Role::Nurse, Role::Doctor];

    pub fn index(self) -> usize {
        match self {
            Role::Nurse => 0,
            Role::Doctor => 1,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Role::Nurse => "nurse",
            Role::Doctor => "doctor",
        }
    }
}

impl fmt::Display for Role {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Role {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "nurse" | "n" => Ok(Role::Nurse),
            "doctor" | "d" => Ok(Role::Doctor),
            other => Err(Error::UnknownRole(other.to_string())),
        }
    }
}

/// The five self-reported wellbeing dimensions, in their fixed output order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Label {
    Alertness,
    Happiness,
    Energy,
    Health,
    Stress,
}

impl Label {
    pub const ALL: [Label; 5] = [
        Label::Alertness,
        Label::Happiness,
        Label::Energy,
        Label::Health,
        Label::Stress,
    ];
    pub const COUNT: usize = 5;

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Label::Alertness => "alertness",
            Label::Happiness => "happiness",
            Label::Energy => "energy",
            Label::Health => "health",
            Label::Stress => "stress",
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Label {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Label::ALL
            .iter()
            .copied()
            .find(|l| l.as_str() == s.trim().to_ascii_lowercase())
            .ok_or_else(|| Error::Config(format!("unknown label `{s}`")))
    }
}

/// Five wellbeing scores on the 0-100 scale, indexed by [`Label`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WellbeingLabels(pub [f64; Label::COUNT]);

impl WellbeingLabels {
    pub fn get(&self, label: Label) -> f64 {
        self.0[label.index()]
    }
}
