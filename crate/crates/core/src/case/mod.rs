//! Domain types for power networks and I/O for the MATPOWER case text
//! format.
//!
//! The supported subset of the format: sections `baseMVA`, `bus`
//! (13 columns), `gen` (at least 10 columns, extra columns preserved
//! opaquely), `branch` (13 columns) and the optional `gencost`
//! (4 + n columns). Matrices are whitespace-separated numeric rows
//! between `[` and `];`.

mod parse;
mod renumber;
mod write;

pub use parse::parse_case;
pub use renumber::renumber_buses;
pub use write::write_case;

use std::collections::{HashMap, HashSet};
use thiserror::Error;

/// MATPOWER bus type codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BusType {
    Pq,
    Pv,
    Ref,
    Isolated,
}

impl BusType {
    pub fn from_code(code: i64) -> Option<Self> {
        match code {
            1 => Some(BusType::Pq),
            2 => Some(BusType::Pv),
            3 => Some(BusType::Ref),
            4 => Some(BusType::Isolated),
            _ => None,
        }
    }

    pub fn code(self) -> i64 {
        match self {
            BusType::Pq => 1,
            BusType::Pv => 2,
            BusType::Ref => 3,
            BusType::Isolated => 4,
        }
    }
}

/// One row of the bus matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Bus {
    pub id: usize,
    pub bus_type: BusType,
    /// Active demand (MW).
    pub pd: f64,
    /// Reactive demand (MVAr).
    pub qd: f64,
    /// Shunt conductance (MW consumed at 1.0 pu voltage).
    pub gs: f64,
    /// Shunt susceptance (MVAr injected at 1.0 pu voltage).
    pub bs: f64,
    pub area: i64,
    /// Voltage magnitude (pu).
    pub vm: f64,
    /// Voltage angle (degrees).
    pub va: f64,
    pub base_kv: f64,
    pub zone: i64,
    pub vmax: f64,
    pub vmin: f64,
}

/// One row of the branch matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Branch {
    pub from_bus: usize,
    pub to_bus: usize,
    /// Series resistance (pu).
    pub r: f64,
    /// Series reactance (pu).
    pub x: f64,
    /// Total line charging susceptance (pu).
    pub b: f64,
    /// Long-term MVA rating; 0 means unlimited.
    pub rate_a: f64,
    pub rate_b: f64,
    pub rate_c: f64,
    /// Off-nominal turns ratio; 0 in the file means a nominal 1.0 ratio.
    pub tap: f64,
    /// Phase shift (degrees).
    pub shift: f64,
    pub status: bool,
    /// Angle-difference bounds (degrees); both 0 means unconstrained.
    pub angmin: f64,
    pub angmax: f64,
}

impl Branch {
    pub fn in_service(&self) -> bool {
        self.status
    }

    /// Effective turns ratio with the MATPOWER zero-means-nominal rule.
    pub fn tap_ratio(&self) -> f64 {
        if self.tap == 0.0 {
            1.0
        } else {
            self.tap
        }
    }

    /// Angle-difference bounds in radians, `None` when unconstrained.
    pub fn angle_bounds_rad(&self) -> Option<(f64, f64)> {
        if self.angmin == 0.0 && self.angmax == 0.0 {
            return None;
        }
        if self.angmin <= -360.0 && self.angmax >= 360.0 {
            return None;
        }
        Some((self.angmin.to_radians(), self.angmax.to_radians()))
    }
}

/// One row of the gen matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Generator {
    pub bus: usize,
    /// Active setpoint (MW).
    pub pg: f64,
    /// Reactive setpoint (MVAr).
    pub qg: f64,
    pub qmax: f64,
    pub qmin: f64,
    /// Voltage setpoint (pu).
    pub vg: f64,
    pub mbase: f64,
    pub status: bool,
    pub pmax: f64,
    pub pmin: f64,
    /// Columns beyond the first ten, preserved opaquely.
    pub extra: Vec<f64>,
}

impl Generator {
    pub fn in_service(&self) -> bool {
        self.status
    }
}

/// Generation cost model selector.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CostModel {
    PiecewiseLinear,
    Polynomial,
}

impl CostModel {
    pub fn from_code(code: i64) -> Option<Self> {
        match code {
            1 => Some(CostModel::PiecewiseLinear),
            2 => Some(CostModel::Polynomial),
            _ => None,
        }
    }

    pub fn code(self) -> i64 {
        match self {
            CostModel::PiecewiseLinear => 1,
            CostModel::Polynomial => 2,
        }
    }
}

/// One row of the gencost matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct GenCost {
    pub model: CostModel,
    pub startup: f64,
    pub shutdown: f64,
    /// Polynomial: coefficients highest degree first (c2, c1, c0 for a
    /// quadratic). Piecewise: 2n breakpoint values (x1, y1, ..., xn, yn).
    pub coefficients: Vec<f64>,
}

impl GenCost {
    /// Cost in $/h for an active dispatch in MW. Polynomial models only.
    pub fn eval(&self, p_mw: f64) -> f64 {
        debug_assert_eq!(self.model, CostModel::Polynomial);
        self.coefficients.iter().fold(0.0, |acc, &c| acc * p_mw + c)
    }

    /// (c2, c1, c0) for a polynomial of degree at most two.
    pub fn quadratic_terms(&self) -> Option<(f64, f64, f64)> {
        if self.model != CostModel::Polynomial || self.coefficients.len() > 3 {
            return None;
        }
        let mut c = [0.0; 3];
        let k = self.coefficients.len();
        c[3 - k..].copy_from_slice(&self.coefficients);
        Some((c[0], c[1], c[2]))
    }
}

/// A full network on a common MVA base.
#[derive(Debug, Clone, PartialEq)]
pub struct CaseData {
    pub name: String,
    pub base_mva: f64,
    pub buses: Vec<Bus>,
    pub branches: Vec<Branch>,
    pub generators: Vec<Generator>,
    /// Parallel to `generators`; empty when the case carries no cost data.
    pub gencosts: Vec<GenCost>,
}

/// Errors from parsing or validating case data.
#[derive(Debug, Error)]
pub enum CaseError {
    #[error("missing section `{0}`")]
    MissingSection(String),
    #[error("malformed row at line {line}: expected {expected} columns, found {found}")]
    MalformedRow {
        line: usize,
        expected: usize,
        found: usize,
    },
    #[error("invalid number `{token}` at line {line}")]
    InvalidNumber { line: usize, token: String },
    #[error("invalid {what} code {code} at line {line}")]
    InvalidCode {
        line: usize,
        what: &'static str,
        code: i64,
    },
    #[error("duplicate bus id {0}")]
    DuplicateBusId(usize),
    #[error("{kind} references unknown bus {bus}")]
    DanglingReference { kind: &'static str, bus: usize },
    #[error("gencost has {gencosts} rows for {generators} generators")]
    GenCostCountMismatch { gencosts: usize, generators: usize },
    #[error("case has {0} reference buses, expected exactly one")]
    RefBusCount(usize),
    #[error("graph induced by in-service branches is disconnected ({0} components)")]
    Disconnected(usize),
    #[error("bus {bus}: vmin {vmin} exceeds vmax {vmax}")]
    VoltageBounds { bus: usize, vmin: f64, vmax: f64 },
}

impl CaseData {
    pub fn bus_count(&self) -> usize {
        self.buses.len()
    }

    /// Index of a bus id into `buses`.
    pub fn bus_index(&self) -> HashMap<usize, usize> {
        self.buses
            .iter()
            .enumerate()
            .map(|(i, b)| (b.id, i))
            .collect()
    }

    /// True when bus ids are exactly 1..=n in file order.
    pub fn is_sequential(&self) -> bool {
        self.buses.iter().enumerate().all(|(i, b)| b.id == i + 1)
    }

    pub fn ref_bus(&self) -> Option<&Bus> {
        self.buses.iter().find(|b| b.bus_type == BusType::Ref)
    }

    /// Structural checks shared by the parser and by hand-built cases:
    /// unique bus ids, no dangling branch/generator references, gencost
    /// count, and voltage bounds.
    pub fn check_structure(&self) -> Result<(), CaseError> {
        let mut seen = HashSet::new();
        for bus in &self.buses {
            if !seen.insert(bus.id) {
                return Err(CaseError::DuplicateBusId(bus.id));
            }
            if bus.vmin > bus.vmax {
                return Err(CaseError::VoltageBounds {
                    bus: bus.id,
                    vmin: bus.vmin,
                    vmax: bus.vmax,
                });
            }
        }
        for br in &self.branches {
            if !seen.contains(&br.from_bus) {
                return Err(CaseError::DanglingReference {
                    kind: "branch",
                    bus: br.from_bus,
                });
            }
            if !seen.contains(&br.to_bus) {
                return Err(CaseError::DanglingReference {
                    kind: "branch",
                    bus: br.to_bus,
                });
            }
        }
        for gen in &self.generators {
            if !seen.contains(&gen.bus) {
                return Err(CaseError::DanglingReference {
                    kind: "generator",
                    bus: gen.bus,
                });
            }
        }
        if !self.gencosts.is_empty() && self.gencosts.len() != self.generators.len() {
            return Err(CaseError::GenCostCountMismatch {
                gencosts: self.gencosts.len(),
                generators: self.generators.len(),
            });
        }
        Ok(())
    }

    /// Full-network validation used at pipeline entry points: structural
    /// checks plus exactly one reference bus and a connected in-service
    /// graph. Regional sub-cases are exempt (only the slack region holds
    /// the reference bus).
    pub fn check_network(&self) -> Result<(), CaseError> {
        self.check_structure()?;
        let refs = self
            .buses
            .iter()
            .filter(|b| b.bus_type == BusType::Ref)
            .count();
        if refs != 1 {
            return Err(CaseError::RefBusCount(refs));
        }
        let components = self.connected_component_count();
        if components != 1 {
            return Err(CaseError::Disconnected(components));
        }
        Ok(())
    }

    /// Components of the graph induced by in-service branches.
    pub fn connected_component_count(&self) -> usize {
        let n = self.buses.len();
        if n == 0 {
            return 0;
        }
        let index = self.bus_index();
        let mut adj = vec![Vec::new(); n];
        for br in self.branches.iter().filter(|b| b.in_service()) {
            let (f, t) = (index[&br.from_bus], index[&br.to_bus]);
            adj[f].push(t);
            adj[t].push(f);
        }
        let mut seen = vec![false; n];
        let mut components = 0;
        for start in 0..n {
            if seen[start] {
                continue;
            }
            components += 1;
            let mut queue = vec![start];
            seen[start] = true;
            while let Some(u) = queue.pop() {
                for &v in &adj[u] {
                    if !seen[v] {
                        seen[v] = true;
                        queue.push(v);
                    }
                }
            }
        }
        components
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testutil::two_bus_case;

    #[test]
    fn structure_checks_pass_on_valid_case() {
        two_bus_case().check_network().unwrap();
    }

    #[test]
    fn duplicate_bus_id_detected() {
        let mut case = two_bus_case();
        case.buses[1].id = 1;
        assert!(matches!(
            case.check_structure(),
            Err(CaseError::DuplicateBusId(1))
        ));
    }

    #[test]
    fn dangling_branch_detected() {
        let mut case = two_bus_case();
        case.branches[0].to_bus = 7;
        assert!(matches!(
            case.check_structure(),
            Err(CaseError::DanglingReference { bus: 7, .. })
        ));
    }

    #[test]
    fn quadratic_terms_pads_short_polynomials() {
        let linear = GenCost {
            model: CostModel::Polynomial,
            startup: 0.0,
            shutdown: 0.0,
            coefficients: vec![12.5, 3.0],
        };
        assert_eq!(linear.quadratic_terms(), Some((0.0, 12.5, 3.0)));
        assert_eq!(linear.eval(10.0), 128.0);
    }

    #[test]
    fn cost_eval_quadratic() {
        let q = GenCost {
            model: CostModel::Polynomial,
            startup: 0.0,
            shutdown: 0.0,
            coefficients: vec![0.1, 20.0, 5.0],
        };
        assert_eq!(q.eval(10.0), 0.1 * 100.0 + 200.0 + 5.0);
    }
}
