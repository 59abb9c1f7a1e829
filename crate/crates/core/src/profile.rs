//! User demographics supplied alongside the corpus.

use std::collections::HashMap;
use std::fmt;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Gender {
    F,
    M,
    Unknown,
}

impl Gender {
    pub fn name(self) -> &'static str {
        match self {
            Gender::F => "f",
            Gender::M => "m",
            Gender::Unknown => "unknown",
        }
    }

    pub fn from_token(tok: &str) -> Option<Gender> {
        match tok.to_ascii_lowercase().as_str() {
            "f" | "female" => Some(Gender::F),
            "m" | "male" => Some(Gender::M),
            "u" | "unknown" => Some(Gender::Unknown),
            _ => None,
        }
    }
}

impl fmt::Display for Gender {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Age bands used throughout the demographic breakdowns.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum AgeGroup {
    /// Under 20.
    Teen,
    /// 20 through 35.
    YoungAdult,
    /// 36 through 50.
    Adult,
    /// 51 and older.
    Mature,
}

impl AgeGroup {
    pub fn from_age(age_years: u32) -> AgeGroup {
        match age_years {
            0..=19 => AgeGroup::Teen,
            20..=35 => AgeGroup::YoungAdult,
            36..=50 => AgeGroup::Adult,
            _ => AgeGroup::Mature,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            AgeGroup::Teen => "teen",
            AgeGroup::YoungAdult => "young_adult",
            AgeGroup::Adult => "adult",
            AgeGroup::Mature => "mature",
        }
    }
}

impl fmt::Display for AgeGroup {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct UserProfile {
    pub user_id: String,
    pub age_years: u32,
    pub gender: Gender,
}

impl UserProfile {
    pub fn age_group(&self) -> AgeGroup {
        AgeGroup::from_age(self.age_years)
    }
}

pub type ProfileTable = HashMap<String, UserProfile>;
