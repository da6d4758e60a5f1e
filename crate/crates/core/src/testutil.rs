//! Shared fixtures for unit tests.

use crate::case::{Branch, Bus, BusType, CaseData, CostModel, GenCost, Generator};

pub fn pq_bus(id: usize, pd: f64, qd: f64) -> Bus {
    Bus {
        id,
        bus_type: BusType::Pq,
        pd,
        qd,
        gs: 0.0,
        bs: 0.0,
        area: 1,
        vm: 1.0,
        va: 0.0,
        base_kv: 230.0,
        zone: 1,
        vmax: 1.1,
        vmin: 0.9,
    }
}

pub fn ref_bus(id: usize) -> Bus {
    Bus {
        bus_type: BusType::Ref,
        ..pq_bus(id, 0.0, 0.0)
    }
}

pub fn line(from: usize, to: usize, x: f64) -> Branch {
    Branch {
        from_bus: from,
        to_bus: to,
        r: 0.0,
        x,
        b: 0.0,
        rate_a: 0.0,
        rate_b: 0.0,
        rate_c: 0.0,
        tap: 0.0,
        shift: 0.0,
        status: true,
        angmin: -360.0,
        angmax: 360.0,
    }
}

pub fn gen(bus: usize, pmin: f64, pmax: f64) -> Generator {
    Generator {
        bus,
        pg: 0.0,
        qg: 0.0,
        qmax: 300.0,
        qmin: -300.0,
        vg: 1.0,
        mbase: 100.0,
        status: true,
        pmax,
        pmin,
        extra: vec![],
    }
}

pub fn linear_cost(c1: f64) -> GenCost {
    GenCost {
        model: CostModel::Polynomial,
        startup: 0.0,
        shutdown: 0.0,
        coefficients: vec![0.0, c1, 0.0],
    }
}

pub fn quadratic_cost(c2: f64, c1: f64) -> GenCost {
    GenCost {
        model: CostModel::Polynomial,
        startup: 0.0,
        shutdown: 0.0,
        coefficients: vec![c2, c1, 0.0],
    }
}

/// Two buses, one generator at bus 1 (linear cost 10 $/MWh, 200 MW cap),
/// 100 MW + 20 MVAr load at bus 2, one lossless 0.1 pu line rated 200 MVA.
pub fn two_bus_case() -> CaseData {
    let mut branch = line(1, 2, 0.1);
    branch.rate_a = 200.0;
    CaseData {
        name: "two_bus".into(),
        base_mva: 100.0,
        buses: vec![ref_bus(1), pq_bus(2, 100.0, 20.0)],
        branches: vec![branch],
        generators: vec![gen(1, 0.0, 200.0)],
        gencosts: vec![linear_cost(10.0)],
    }
}

/// Two triangles {1,2,3} and {4,5,6} joined by the edge 3-4, generators
/// at buses 1 and 5.
pub fn barbell_case() -> CaseData {
    CaseData {
        name: "barbell".into(),
        base_mva: 100.0,
        buses: vec![
            ref_bus(1),
            pq_bus(2, 40.0, 5.0),
            pq_bus(3, 30.0, 5.0),
            pq_bus(4, 30.0, 5.0),
            {
                let mut b = pq_bus(5, 0.0, 0.0);
                b.bus_type = BusType::Pv;
                b
            },
            pq_bus(6, 40.0, 5.0),
        ],
        branches: vec![
            line(1, 2, 0.1),
            line(2, 3, 0.1),
            line(1, 3, 0.1),
            line(3, 4, 0.2),
            line(4, 5, 0.1),
            line(5, 6, 0.1),
            line(4, 6, 0.1),
        ],
        generators: vec![gen(1, 0.0, 250.0), gen(5, 0.0, 250.0)],
        gencosts: vec![quadratic_cost(0.02, 10.0), quadratic_cost(0.02, 15.0)],
    }
}

/// Build a case from an edge list for partitioning tests: unit loads on
/// non-generator buses, one generator per listed bus, REF at the first
/// generator bus.
pub fn graph_case(n: usize, edges: &[(usize, usize)], gen_buses: &[usize]) -> CaseData {
    let buses = (1..=n)
        .map(|id| {
            if id == gen_buses[0] {
                ref_bus(id)
            } else {
                pq_bus(id, 10.0, 0.0)
            }
        })
        .collect();
    CaseData {
        name: format!("graph{n}"),
        base_mva: 100.0,
        buses,
        branches: edges.iter().map(|&(f, t)| line(f, t, 0.1)).collect(),
        generators: gen_buses.iter().map(|&b| gen(b, 0.0, 500.0)).collect(),
        gencosts: gen_buses.iter().map(|_| linear_cost(10.0)).collect(),
    }
}
