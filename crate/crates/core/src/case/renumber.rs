//! Bus renumbering to contiguous 1..n ids.

use super::CaseData;
use std::collections::HashMap;

/// Renumber buses 1..n in file order of the bus rows and update all
/// branch and generator references. Returns the old-id → new-id mapping.
/// Already-sequential cases come back unchanged with an identity mapping.
pub fn renumber_buses(case: &CaseData) -> (CaseData, HashMap<usize, usize>) {
    let mapping: HashMap<usize, usize> = case
        .buses
        .iter()
        .enumerate()
        .map(|(i, b)| (b.id, i + 1))
        .collect();

    let mut out = case.clone();
    for (i, bus) in out.buses.iter_mut().enumerate() {
        bus.id = i + 1;
    }
    for br in &mut out.branches {
        br.from_bus = mapping[&br.from_bus];
        br.to_bus = mapping[&br.to_bus];
    }
    for g in &mut out.generators {
        g.bus = mapping[&g.bus];
    }
    (out, mapping)
}
