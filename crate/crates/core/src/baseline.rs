//! Comparator scores: the LACE readmission index and the Charlson
//! comorbidity index.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct LaceInput {
    pub inpatient_los_days: i64,
    pub acute_admission: bool,
    pub cci: i64,
    pub ed_visits_6m: i64,
}

pub const LACE_MAX: u32 = 19;

fn los_points(days: i64) -> u32 {
    match days {
        0 => 0,
        1 => 1,
        2 => 2,
        3 => 3,
        4..=6 => 4,
        7..=13 => 5,
        _ => 7,
    }
}

fn cci_points(cci: i64) -> u32 {
    if cci >= 4 {
        5
    } else {
        cci as u32
    }
}

/// L + A + C + E.
pub fn lace_score(input: &LaceInput) -> Result<u32> {
    if input.inpatient_los_days < 0 || input.cci < 0 || input.ed_visits_6m < 0 {
        return Err(Error::Invalid(format!("LACE inputs must be non-negative: {input:?}")));
    }
    let acute = if input.acute_admission { 3 } else { 0 };
    let ed = input.ed_visits_6m.min(4) as u32;
    Ok(los_points(input.inpatient_los_days) + acute + cci_points(input.cci) + ed)
}

/// The conditions of the comorbidity index.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Comorbidity {
    MyocardialInfarction,
    CongestiveHeartFailure,
    PeripheralVascularDisease,
    CerebrovascularDisease,
    Dementia,
    ChronicPulmonaryDisease,
    RheumaticDisease,
    PepticUlcerDisease,
    MildLiverDisease,
    SevereLiverDisease,
    Diabetes,
    DiabetesWithComplications,
    Paralysis,
    RenalDisease,
    Cancer,
    MetastaticCancer,
    Aids,
}

impl Comorbidity {
    pub const ALL: [Comorbidity; 17] = [
        Comorbidity::MyocardialInfarction,
        Comorbidity::CongestiveHeartFailure,
        Comorbidity::PeripheralVascularDisease,
        Comorbidity::CerebrovascularDisease,
        Comorbidity::Dementia,
        Comorbidity::ChronicPulmonaryDisease,
        Comorbidity::RheumaticDisease,
        Comorbidity::PepticUlcerDisease,
        Comorbidity::MildLiverDisease,
        Comorbidity::SevereLiverDisease,
        Comorbidity::Diabetes,
        Comorbidity::DiabetesWithComplications,
        Comorbidity::Paralysis,
        Comorbidity::RenalDisease,
        Comorbidity::Cancer,
        Comorbidity::MetastaticCancer,
        Comorbidity::Aids,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Comorbidity::MyocardialInfarction => "myocardial_infarction",
            Comorbidity::CongestiveHeartFailure => "congestive_heart_failure",
            Comorbidity::PeripheralVascularDisease => "peripheral_vascular_disease",
            Comorbidity::CerebrovascularDisease => "cerebrovascular_disease",
            Comorbidity::Dementia => "dementia",
            Comorbidity::ChronicPulmonaryDisease => "chronic_pulmonary_disease",
            Comorbidity::RheumaticDisease => "rheumatic_disease",
            Comorbidity::PepticUlcerDisease => "peptic_ulcer_disease",
            Comorbidity::MildLiverDisease => "mild_liver_disease",
            Comorbidity::SevereLiverDisease => "severe_liver_disease",
            Comorbidity::Diabetes => "diabetes",
            Comorbidity::DiabetesWithComplications => "diabetes_with_complications",
            Comorbidity::Paralysis => "paralysis",
            Comorbidity::RenalDisease => "renal_disease",
            Comorbidity::Cancer => "cancer",
            Comorbidity::MetastaticCancer => "metastatic_cancer",
            Comorbidity::Aids => "aids",
        }
    }

    fn index(self) -> usize {
        self as usize
    }

    /// The milder condition this one supersedes, if any.
    pub fn supersedes(self) -> Option<Comorbidity> {
        match self {
            Comorbidity::MetastaticCancer => Some(Comorbidity::Cancer),
            Comorbidity::SevereLiverDisease => Some(Comorbidity::MildLiverDisease),
            Comorbidity::DiabetesWithComplications => Some(Comorbidity::Diabetes),
            _ => None,
        }
    }
}

impl fmt::Display for Comorbidity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Comorbidity {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Comorbidity::ALL
            .into_iter()
            .find(|c| c.as_str() == s)
            .ok_or_else(|| Error::Invalid(format!("unknown comorbidity `{s}`")))
    }
}

/// Presence flags, indexed like [`Comorbidity::ALL`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct ComorbidityFlags(pub [bool; 17]);

impl ComorbidityFlags {
    pub fn with(mut self, c: Comorbidity) -> Self {
        self.0[c.index()] = true;
        self
    }

    pub fn has(&self, c: Comorbidity) -> bool {
        self.0[c.index()]
    }

    pub fn set(&mut self, c: Comorbidity, present: bool) {
        self.0[c.index()] = present;
    }
}

/// Points per condition.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WeightMap(pub [u32; 17]);

impl Default for WeightMap {
    /// The 1987 weights, with AIDS at 6.
    fn default() -> Self {
        let mut w = [1u32; 17];
        for c in [
            Comorbidity::DiabetesWithComplications,
            Comorbidity::Paralysis,
            Comorbidity::RenalDisease,
            Comorbidity::Cancer,
        ] {
            w[c.index()] = 2;
        }
        w[Comorbidity::SevereLiverDisease.index()] = 3;
        w[Comorbidity::MetastaticCancer.index()] = 6;
        w[Comorbidity::Aids.index()] = 6;
        Self(w)
    }
}

impl WeightMap {
    pub fn weight(&self, c: Comorbidity) -> u32 {
        self.0[c.index()]
    }

    /// Starts from the default map and applies `(flag_name, weight)` overrides.
    pub fn from_pairs<S: AsRef<str>>(pairs: &[(S, u32)]) -> Result<Self> {
        let mut map = Self::default();
        let mut seen: Vec<Comorbidity> = Vec::new();
        for (name, weight) in pairs {
            let c: Comorbidity = name.as_ref().parse()?;
            if seen.contains(&c) {
                return Err(Error::Invalid(format!("weight for `{c}` given twice")));
            }
            seen.push(c);
            map.0[c.index()] = *weight;
        }
        Ok(map)
    }

    pub fn pairs(&self) -> Vec<(String, u32)> {
        Comorbidity::ALL.iter().map(|c| (String::from(c.as_str()), self.weight(*c))).collect()
    }
}

/// Weighted count of conditions; a superseding condition hides the milder one.
pub fn cci(flags: &ComorbidityFlags, weights: &WeightMap) -> u32 {
    Comorbidity::ALL
        .iter()
        .filter(|&&c| flags.has(c))
        .filter(|&&c| !Comorbidity::ALL.iter().any(|&s| s.supersedes() == Some(c) && flags.has(s)))
        .map(|&c| weights.weight(c))
        .sum()
}
