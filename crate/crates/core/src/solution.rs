//! Solved schedules: first-stage bids plus per-scenario recourse.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::instance::Instance;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct FirstStage {
    /// Market position, MWh.
    pub mp: Vec<f64>,
    pub ch_da: Vec<f64>,
    pub dis_da: Vec<f64>,
    pub el_da: Vec<f64>,
    pub x_e: Vec<f64>,
    pub x_b_da: Vec<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSolution {
    pub d: Vec<f64>,
    pub r: Vec<f64>,
    pub res: Vec<f64>,
    pub ch_b_plus: Vec<f64>,
    pub ch_b_minus: Vec<f64>,
    pub dis_b_plus: Vec<f64>,
    pub dis_b_minus: Vec<f64>,
    pub el_b_plus: Vec<f64>,
    pub el_b_minus: Vec<f64>,
    pub soe: Vec<f64>,
    /// `[t][j]`
    pub soe_seg: Vec<Vec<f64>>,
    pub x_b_b: Vec<f64>,
    pub hydrogen: Vec<f64>,
    pub el: Vec<f64>,
    pub el_net: Vec<f64>,
    pub omega: f64,
    pub z: Vec<f64>,
    pub y: Vec<f64>,
    pub mu1: Vec<f64>,
    pub mu2: Vec<f64>,
    pub xd1: Vec<f64>,
    pub xd2: Vec<f64>,
}

impl ScenarioSolution {
    pub(crate) fn series(&self) -> [(&'static str, &Vec<f64>); 20] {
        [
            ("d", &self.d),
            ("r", &self.r),
            ("res", &self.res),
            ("ch_b_plus", &self.ch_b_plus),
            ("ch_b_minus", &self.ch_b_minus),
            ("dis_b_plus", &self.dis_b_plus),
            ("dis_b_minus", &self.dis_b_minus),
            ("el_b_plus", &self.el_b_plus),
            ("el_b_minus", &self.el_b_minus),
            ("soe", &self.soe),
            ("x_b_b", &self.x_b_b),
            ("hydrogen", &self.hydrogen),
            ("el", &self.el),
            ("el_net", &self.el_net),
            ("z", &self.z),
            ("y", &self.y),
            ("mu1", &self.mu1),
            ("mu2", &self.mu2),
            ("xd1", &self.xd1),
            ("xd2", &self.xd2),
        ]
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Solution {
    pub gamma: usize,
    /// Solver objective, EUR.
    pub objective: f64,
    pub first_stage: FirstStage,
    pub scenarios: Vec<ScenarioSolution>,
}

impl Solution {
    pub fn n_periods(&self) -> usize {
        self.first_stage.mp.len()
    }

    pub fn n_scenarios(&self) -> usize {
        self.scenarios.len()
    }

    /// Checks that every series matches the instance dimensions.
    pub fn check_shape(&self, instance: &Instance) -> Result<()> {
        let n = instance.n_periods();
        let f = &self.first_stage;
        let first = [
            ("mp", &f.mp),
            ("ch_da", &f.ch_da),
            ("dis_da", &f.dis_da),
            ("el_da", &f.el_da),
            ("x_e", &f.x_e),
            ("x_b_da", &f.x_b_da),
        ];
        for (name, v) in first {
            if v.len() != n {
                return Err(Error::IncompleteSolution(format!(
                    "first_stage.{name} has {} entries, expected {n}",
                    v.len()
                )));
            }
        }
        if self.scenarios.len() != instance.n_scenarios() {
            return Err(Error::IncompleteSolution(format!(
                "{} scenarios, expected {}",
                self.scenarios.len(),
                instance.n_scenarios()
            )));
        }
        for (s, sc) in self.scenarios.iter().enumerate() {
            for (name, v) in sc.series() {
                if v.len() != n {
                    return Err(Error::IncompleteSolution(format!(
                        "scenarios[{s}].{name} has {} entries, expected {n}",
                        v.len()
                    )));
                }
            }
            if sc.soe_seg.len() != n {
                return Err(Error::IncompleteSolution(format!(
                    "scenarios[{s}].soe_seg has {} entries, expected {n}",
                    sc.soe_seg.len()
                )));
            }
        }
        Ok(())
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(self).expect("solution serialises")
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_json_string()).map_err(|e| Error::io(path, e))
    }

    pub fn from_json_str(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Parse {
            what: "solution".into(),
            message: e.to_string(),
        })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json_str(&text)
    }
}
