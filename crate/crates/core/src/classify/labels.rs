//! Household characteristic classes.
//!
//! Where the published class table overlaps at a boundary (age 30, area
//! 1800 sq ft) the value goes to the class defined with `>=`. Income of
//! exactly $150,000 counts as below.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::manifest::Characteristics;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Characteristic {
    Age,
    Area,
    Income,
    Floors,
    Rooms,
    Occupants,
}

impl Characteristic {
    pub const ALL: [Characteristic; 6] = [
        Characteristic::Age,
        Characteristic::Area,
        Characteristic::Income,
        Characteristic::Floors,
        Characteristic::Rooms,
        Characteristic::Occupants,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Characteristic::Age => "age",
            Characteristic::Area => "area",
            Characteristic::Income => "income",
            Characteristic::Floors => "floors",
            Characteristic::Rooms => "rooms",
            Characteristic::Occupants => "occupants",
        }
    }

    pub fn classes(self) -> &'static [&'static str] {
        match self {
            Characteristic::Age => &["Old", "New"],
            Characteristic::Area => &["Medium", "High"],
            Characteristic::Income => &["Below150k", "Above150k"],
            Characteristic::Floors => &["One", "TwoPlus"],
            Characteristic::Rooms => &["LE6", "SevenToEight", "GT8"],
            Characteristic::Occupants => &["LE2", "GT2"],
        }
    }

    /// Class of a raw numeric value.
    pub fn classify(self, value: f64) -> Result<&'static str> {
        if !(value >= 0.0) {
            return Err(Error::Validation(format!(
                "{} must be a non-negative number, got {value}",
                self.name()
            )));
        }
        let c = self.classes();
        Ok(match self {
            Characteristic::Age => if value >= 30.0 { c[0] } else { c[1] },
            Characteristic::Area => if value >= 1800.0 { c[1] } else { c[0] },
            Characteristic::Income => if value <= 150_000.0 { c[0] } else { c[1] },
            Characteristic::Floors => if value < 2.0 { c[0] } else { c[1] },
            Characteristic::Rooms => {
                if value <= 6.0 {
                    c[0]
                } else if value <= 8.0 {
                    c[1]
                } else {
                    c[2]
                }
            }
            Characteristic::Occupants => if value <= 2.0 { c[0] } else { c[1] },
        })
    }

    fn raw(self, meta: &Characteristics) -> Option<f64> {
        match self {
            Characteristic::Age => meta.age_years,
            Characteristic::Area => meta.area_sqft,
            Characteristic::Income => meta.income_usd_per_year,
            Characteristic::Floors => meta.floors,
            Characteristic::Rooms => meta.rooms,
            Characteristic::Occupants => meta.occupants,
        }
    }
}

impl std::fmt::Display for Characteristic {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Ground-truth labels for one home; absent numeric values give absent labels.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct HouseholdRecord {
    pub home_id: String,
    pub age: Option<String>,
    pub area: Option<String>,
    pub income: Option<String>,
    pub floors: Option<String>,
    pub rooms: Option<String>,
    pub occupants: Option<String>,
}

impl HouseholdRecord {
    pub fn label(&self, c: Characteristic) -> Option<&str> {
        match c {
            Characteristic::Age => self.age.as_deref(),
            Characteristic::Area => self.area.as_deref(),
            Characteristic::Income => self.income.as_deref(),
            Characteristic::Floors => self.floors.as_deref(),
            Characteristic::Rooms => self.rooms.as_deref(),
            Characteristic::Occupants => self.occupants.as_deref(),
        }
    }
}

pub fn label_characteristics(home_id: &str, meta: &Characteristics) -> Result<HouseholdRecord> {
    let get = |c: Characteristic| -> Result<Option<String>> {
        c.raw(meta).map(|v| c.classify(v).map(str::to_string)).transpose()
    };
    Ok(HouseholdRecord {
        home_id: home_id.to_string(),
        age: get(Characteristic::Age)?,
        area: get(Characteristic::Area)?,
        income: get(Characteristic::Income)?,
        floors: get(Characteristic::Floors)?,
        rooms: get(Characteristic::Rooms)?,
        occupants: get(Characteristic::Occupants)?,
    })
}
