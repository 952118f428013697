use std::fmt;
use std::str::FromStr;

use crate::regression::ExperimentTable;
use crate::{Error, Result};

const EXP1: &str = include_str!("../../fixtures/exp1.csv");
const EXP2: &str = include_str!("../../fixtures/exp2.csv");
const VALIDATION: &str = include_str!("../../fixtures/validation.csv");

/// Bundled measurement tables from the original study.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FixtureName {
    /// First factorial run, corners at coded ±1, plus the baseline.
    Exp1,
    /// Zoomed-in run, corners at coded ±0.5, plus the baseline.
    Exp2,
    /// Forty validation points: the centre, 19 mid-corners and 20 random points.
    Validation,
}

impl FixtureName {
    pub const ALL: [FixtureName; 3] = [FixtureName::Exp1, FixtureName::Exp2, FixtureName::Validation];

    pub fn name(self) -> &'static str {
        match self {
            FixtureName::Exp1 => "exp1",
            FixtureName::Exp2 => "exp2",
            FixtureName::Validation => "validation",
        }
    }

    pub fn csv(self) -> &'static str {
        match self {
            FixtureName::Exp1 => EXP1,
            FixtureName::Exp2 => EXP2,
            FixtureName::Validation => VALIDATION,
        }
    }

    pub fn load(self) -> ExperimentTable {
        ExperimentTable::from_csv_str(self.csv()).expect("bundled fixtures parse")
    }
}

impl fmt::Display for FixtureName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for FixtureName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        FixtureName::ALL
            .into_iter()
            .find(|f| f.name() == s)
            .ok_or_else(|| Error::UnknownFixture(s.to_string()))
    }
}

pub fn load_fixture(name: &str) -> Result<ExperimentTable> {
    Ok(name.parse::<FixtureName>()?.load())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn response(t: &ExperimentTable, std_order: u32) -> f64 {
        t.rows().iter().find(|r| r.std_order == std_order).unwrap().response
    }

    #[test]
    fn published_rows() {
        let exp1 = load_fixture("exp1").unwrap();
        assert_eq!(exp1.len(), 65);
        assert_eq!(response(&exp1, 9), 7365.33667);
        assert!(exp1.rows()[1..].iter().all(|r| r.coded.iter().all(|c| c.abs() == 1.0)));

        let exp2 = load_fixture("exp2").unwrap();
        assert_eq!(exp2.len(), 65);
        assert_eq!(response(&exp2, 1), 38.23649);
        assert_eq!(response(&exp2, 0), 34.04411);
        assert!(exp2.rows()[1..].iter().all(|r| r.coded.iter().all(|c| c.abs() == 0.5)));

        let v = load_fixture("validation").unwrap();
        assert_eq!(v.len(), 40);
        assert_eq!(response(&v, 29), 3.46581);
        assert_eq!(v.rows()[0].coded, vec![0.0; 6]);
        // the mid-corner set keeps depth at its centre
        assert!(v.rows()[..20].iter().all(|r| r.coded[1] == 0.0));
    }

    #[test]
    fn header_matches_factor_names() {
        for f in FixtureName::ALL {
            assert!(f.csv().starts_with("std_order,truth,depth,alts,weight,pop,answers,mape\n"));
            assert_eq!(f.load().factor_names().len(), 6);
        }
    }

    #[test]
    fn unknown_fixture() {
        assert!(matches!(load_fixture("exp3"), Err(Error::UnknownFixture(_))));
    }
}
