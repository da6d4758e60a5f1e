//! Writer for the MATPOWER case text format.

use super::CaseData;
use std::fmt::Write as _;

/// Serialize a case back to MATPOWER script text.
///
/// Numbers are written in the shortest decimal form that re-parses to the
/// identical bit pattern, so `parse_case(write_case(c)) == c` field for
/// field.
pub fn write_case(case: &CaseData) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "function mpc = {}", case.name);
    out.push_str("mpc.version = '2';\n");
    let _ = writeln!(out, "mpc.baseMVA = {};", fmt(case.base_mva));

    out.push_str("\n%% bus data\nmpc.bus = [\n");
    for b in &case.buses {
        let cols = [
            b.id as f64,
            b.bus_type.code() as f64,
            b.pd,
            b.qd,
            b.gs,
            b.bs,
            b.area as f64,
            b.vm,
            b.va,
            b.base_kv,
            b.zone as f64,
            b.vmax,
            b.vmin,
        ];
        push_row(&mut out, &cols);
    }
    out.push_str("];\n");

    out.push_str("\n%% generator data\nmpc.gen = [\n");
    for g in &case.generators {
        let mut cols = vec![
            g.bus as f64,
            g.pg,
            g.qg,
            g.qmax,
            g.qmin,
            g.vg,
            g.mbase,
            if g.status { 1.0 } else { 0.0 },
            g.pmax,
            g.pmin,
        ];
        cols.extend_from_slice(&g.extra);
        push_row(&mut out, &cols);
    }
    out.push_str("];\n");

    out.push_str("\n%% branch data\nmpc.branch = [\n");
    for br in &case.branches {
        let cols = [
            br.from_bus as f64,
            br.to_bus as f64,
            br.r,
            br.x,
            br.b,
            br.rate_a,
            br.rate_b,
            br.rate_c,
            br.tap,
            br.shift,
            if br.status { 1.0 } else { 0.0 },
            br.angmin,
            br.angmax,
        ];
        push_row(&mut out, &cols);
    }
    out.push_str("];\n");

    if !case.gencosts.is_empty() {
        out.push_str("\n%% generator cost data\nmpc.gencost = [\n");
        for gc in &case.gencosts {
            let n = match gc.model {
                super::CostModel::Polynomial => gc.coefficients.len(),
                super::CostModel::PiecewiseLinear => gc.coefficients.len() / 2,
            };
            let mut cols = vec![
                gc.model.code() as f64,
                gc.startup,
                gc.shutdown,
                n as f64,
            ];
            cols.extend_from_slice(&gc.coefficients);
            push_row(&mut out, &cols);
        }
        out.push_str("];\n");
    }

    out
}

fn push_row(out: &mut String, cols: &[f64]) {
    out.push('\t');
    for (i, v) in cols.iter().enumerate() {
        if i > 0 {
            out.push('\t');
        }
        out.push_str(&fmt(*v));
    }
    out.push_str(";\n");
}

/// Shortest round-trip decimal form of a finite f64.
fn fmt(v: f64) -> String {
    debug_assert!(v.is_finite());
    format!("{v}")
}

#[cfg(test)]
mod tests {
    use super::super::parse_case;
    use super::*;
    use crate::testutil::two_bus_case;

    #[test]
    fn round_trips_two_bus() {
        let case = two_bus_case();
        let text = write_case(&case);
        let reparsed = parse_case(&text).unwrap();
        assert_eq!(case, reparsed);
    }

    #[test]
    fn omits_empty_gencost() {
        let mut case = two_bus_case();
        case.gencosts.clear();
        let text = write_case(&case);
        assert!(!text.contains("gencost"));
        assert_eq!(parse_case(&text).unwrap(), case);
    }

    #[test]
    fn awkward_floats_round_trip_exactly() {
        let mut case = two_bus_case();
        case.branches[0].x = 0.1 + 1e-17;
        case.buses[1].pd = 1.0 / 3.0;
        case.buses[1].qd = -2.5e-13;
        case.base_mva = 100.000000001;
        let reparsed = parse_case(&write_case(&case)).unwrap();
        assert_eq!(case, reparsed);
    }
}
