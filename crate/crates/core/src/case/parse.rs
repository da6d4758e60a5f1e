//! Parser for the MATPOWER case text format.

use super::{
    Branch, Bus, BusType, CaseData, CaseError, CostModel, GenCost, Generator,
};

const BUS_COLS: usize = 13;
const GEN_COLS_MIN: usize = 10;
const BRANCH_COLS: usize = 13;
const GENCOST_COLS_MIN: usize = 4;

/// Parse a MATPOWER-style case script.
///
/// Comments (`%`) and blank lines are ignored; matrix rows may end with
/// `;`. The parser maps rows field-for-field and does not renumber buses.
pub fn parse_case(text: &str) -> Result<CaseData, CaseError> {
    let mut name = String::from("case");
    let mut base_mva: Option<f64> = None;
    let mut bus_rows: Option<Vec<Row>> = None;
    let mut gen_rows: Option<Vec<Row>> = None;
    let mut branch_rows: Option<Vec<Row>> = None;
    let mut gencost_rows: Option<Vec<Row>> = None;

    let mut lines = text.lines().enumerate();
    while let Some((idx, raw)) = lines.next() {
        let line = strip_comment(raw).trim();
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix("function") {
            if let Some(eq) = rest.find('=') {
                name = rest[eq + 1..].trim().trim_end_matches(';').to_string();
            }
            continue;
        }
        if let Some(value) = match_scalar(line, "baseMVA") {
            base_mva = Some(parse_number(value, idx + 1)?);
            continue;
        }
        if let Some(section) = match_matrix_open(line) {
            let mut rows = Vec::new();
            collect_rows(line, idx + 1, &mut lines, &mut rows)?;
            match section {
                "bus" => bus_rows = Some(rows),
                "gen" => gen_rows = Some(rows),
                "branch" => branch_rows = Some(rows),
                "gencost" => gencost_rows = Some(rows),
                _ => {}
            }
        }
    }

    let base_mva = base_mva.ok_or_else(|| CaseError::MissingSection("baseMVA".into()))?;
    let bus_rows = bus_rows.ok_or_else(|| CaseError::MissingSection("bus".into()))?;
    let gen_rows = gen_rows.ok_or_else(|| CaseError::MissingSection("gen".into()))?;
    let branch_rows = branch_rows.ok_or_else(|| CaseError::MissingSection("branch".into()))?;

    let buses = bus_rows
        .iter()
        .map(parse_bus)
        .collect::<Result<Vec<_>, _>>()?;
    let generators = gen_rows
        .iter()
        .map(parse_gen)
        .collect::<Result<Vec<_>, _>>()?;
    let branches = branch_rows
        .iter()
        .map(parse_branch)
        .collect::<Result<Vec<_>, _>>()?;
    let gencosts = gencost_rows
        .unwrap_or_default()
        .iter()
        .map(parse_gencost)
        .collect::<Result<Vec<_>, _>>()?;

    let case = CaseData {
        name,
        base_mva,
        buses,
        branches,
        generators,
        gencosts,
    };
    case.check_structure()?;
    Ok(case)
}

/// One matrix row: parsed numbers plus the 1-based source line.
struct Row {
    line: usize,
    values: Vec<f64>,
}

fn strip_comment(line: &str) -> &str {
    match line.find('%') {
        Some(pos) => &line[..pos],
        None => line,
    }
}

/// Matches `mpc.<key> = <value>;` for scalar assignments.
fn match_scalar<'a>(line: &'a str, key: &str) -> Option<&'a str> {
    let rest = line.strip_prefix("mpc.")?;
    let rest = rest.strip_prefix(key)?;
    let rest = rest.trim_start();
    let rest = rest.strip_prefix('=')?;
    Some(rest.trim().trim_end_matches(';').trim())
}

/// Matches `mpc.<name> = [` and returns the section name.
fn match_matrix_open(line: &str) -> Option<&str> {
    let rest = line.strip_prefix("mpc.")?;
    let eq = rest.find('=')?;
    let name = rest[..eq].trim();
    let after = rest[eq + 1..].trim_start();
    if after.starts_with('[') {
        Some(name)
    } else {
        None
    }
}

/// Collects numeric rows from the opening line until `];`.
fn collect_rows<'a>(
    open_line: &str,
    open_idx: usize,
    lines: &mut impl Iterator<Item = (usize, &'a str)>,
    rows: &mut Vec<Row>,
) -> Result<(), CaseError> {
    // Data may start on the opening line after `[`.
    let after = &open_line[open_line.find('[').unwrap() + 1..];
    if push_chunks(after, open_idx, rows)? {
        return Ok(());
    }
    for (idx, raw) in lines.by_ref() {
        let line = strip_comment(raw).trim();
        if line.is_empty() {
            continue;
        }
        if push_chunks(line, idx + 1, rows)? {
            return Ok(());
        }
    }
    Ok(())
}

/// Splits a line on `;` into row chunks; returns true when the section
/// terminator `];` was consumed.
fn push_chunks(line: &str, line_no: usize, rows: &mut Vec<Row>) -> Result<bool, CaseError> {
    let (body, done) = match line.find(']') {
        Some(pos) => (&line[..pos], true),
        None => (line, false),
    };
    for chunk in body.split(';') {
        let chunk = chunk.trim();
        if chunk.is_empty() {
            continue;
        }
        let values = chunk
            .split_whitespace()
            .map(|tok| parse_number(tok, line_no))
            .collect::<Result<Vec<_>, _>>()?;
        rows.push(Row {
            line: line_no,
            values,
        });
    }
    Ok(done)
}

fn parse_number(token: &str, line: usize) -> Result<f64, CaseError> {
    let cleaned = token.trim().trim_end_matches(';');
    cleaned.parse::<f64>().map_err(|_| CaseError::InvalidNumber {
        line,
        token: cleaned.to_string(),
    })
}

fn expect_cols(row: &Row, expected: usize) -> Result<(), CaseError> {
    if row.values.len() != expected {
        return Err(CaseError::MalformedRow {
            line: row.line,
            expected,
            found: row.values.len(),
        });
    }
    Ok(())
}

fn as_positive_int(value: f64, line: usize, what: &'static str) -> Result<usize, CaseError> {
    if value.fract() == 0.0 && value >= 1.0 && value <= u32::MAX as f64 {
        Ok(value as usize)
    } else {
        Err(CaseError::InvalidCode {
            line,
            what,
            code: value as i64,
        })
    }
}

fn parse_bus(row: &Row) -> Result<Bus, CaseError> {
    expect_cols(row, BUS_COLS)?;
    let v = &row.values;
    let bus_type = BusType::from_code(v[1] as i64).ok_or(CaseError::InvalidCode {
        line: row.line,
        what: "bus type",
        code: v[1] as i64,
    })?;
    Ok(Bus {
        id: as_positive_int(v[0], row.line, "bus id")?,
        bus_type,
        pd: v[2],
        qd: v[3],
        gs: v[4],
        bs: v[5],
        area: v[6] as i64,
        vm: v[7],
        va: v[8],
        base_kv: v[9],
        zone: v[10] as i64,
        vmax: v[11],
        vmin: v[12],
    })
}

fn parse_gen(row: &Row) -> Result<Generator, CaseError> {
    if row.values.len() < GEN_COLS_MIN {
        return Err(CaseError::MalformedRow {
            line: row.line,
            expected: GEN_COLS_MIN,
            found: row.values.len(),
        });
    }
    let v = &row.values;
    Ok(Generator {
        bus: as_positive_int(v[0], row.line, "generator bus")?,
        pg: v[1],
        qg: v[2],
        qmax: v[3],
        qmin: v[4],
        vg: v[5],
        mbase: v[6],
        status: v[7] != 0.0,
        pmax: v[8],
        pmin: v[9],
        extra: v[10..].to_vec(),
    })
}

fn parse_branch(row: &Row) -> Result<Branch, CaseError> {
    expect_cols(row, BRANCH_COLS)?;
    let v = &row.values;
    Ok(Branch {
        from_bus: as_positive_int(v[0], row.line, "branch from bus")?,
        to_bus: as_positive_int(v[1], row.line, "branch to bus")?,
        r: v[2],
        x: v[3],
        b: v[4],
        rate_a: v[5],
        rate_b: v[6],
        rate_c: v[7],
        tap: v[8],
        shift: v[9],
        status: v[10] != 0.0,
        angmin: v[11],
        angmax: v[12],
    })
}

fn parse_gencost(row: &Row) -> Result<GenCost, CaseError> {
    if row.values.len() < GENCOST_COLS_MIN {
        return Err(CaseError::MalformedRow {
            line: row.line,
            expected: GENCOST_COLS_MIN,
            found: row.values.len(),
        });
    }
    let v = &row.values;
    let model = CostModel::from_code(v[0] as i64).ok_or(CaseError::InvalidCode {
        line: row.line,
        what: "cost model",
        code: v[0] as i64,
    })?;
    let declared = v[3] as usize;
    let expected_vals = match model {
        CostModel::Polynomial => declared,
        CostModel::PiecewiseLinear => 2 * declared,
    };
    let coefficients = v[4..].to_vec();
    if coefficients.len() != expected_vals {
        return Err(CaseError::MalformedRow {
            line: row.line,
            expected: 4 + expected_vals,
            found: row.values.len(),
        });
    }
    Ok(GenCost {
        model,
        startup: v[1],
        shutdown: v[2],
        coefficients,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = "\
function mpc = two_bus
% minimal two-bus case
mpc.version = '2';
mpc.baseMVA = 100;
mpc.bus = [
    1  3  0    0   0  0  1  1  0  230  1  1.1  0.9;
    2  1  100  20  0  0  1  1  0  230  1  1.1  0.9;
];
mpc.gen = [
    1  0  0  100  -100  1  100  1  200  0;
];
mpc.branch = [
    1  2  0  0.1  0  200  0  0  0  0  1  -360  360;
];
mpc.gencost = [
    2  0  0  3  0  10  0;
];
";

    #[test]
    fn parses_minimal_two_bus() {
        let case = parse_case(MINIMAL).unwrap();
        assert_eq!(case.name, "two_bus");
        assert_eq!(case.base_mva, 100.0);
        assert_eq!(case.buses.len(), 2);
        assert_eq!(case.branches.len(), 1);
        assert_eq!(case.generators.len(), 1);
        assert_eq!(case.buses[0].bus_type, BusType::Ref);
        assert_eq!(case.buses[1].pd, 100.0);
        assert_eq!(case.branches[0].x, 0.1);
        assert_eq!(case.gencosts[0].coefficients, vec![0.0, 10.0, 0.0]);
    }

    #[test]
    fn missing_branch_section() {
        let text = MINIMAL
            .lines()
            .filter(|l| !l.contains("branch") && !l.contains("-360"))
            .collect::<Vec<_>>()
            .join("\n");
        // Removing the branch open/close leaves its row dangling; rebuild
        // a clean input instead.
        let text = text.replace("    1  2  0  0.1  0  200  0  0  0  0  1", "");
        match parse_case(&text) {
            Err(CaseError::MissingSection(s)) => assert_eq!(s, "branch"),
            other => panic!("expected MissingSection, got {other:?}"),
        }
    }

    #[test]
    fn preserves_nonsequential_ids() {
        let text = MINIMAL
            .replace("    2  1  100", "    9  1  100")
            .replace("    1  2  0  0.1", "    1  9  0  0.1");
        let case = parse_case(&text).unwrap();
        assert_eq!(case.buses[1].id, 9);
        assert_eq!(case.branches[0].to_bus, 9);
    }

    #[test]
    fn wrong_column_count_is_malformed() {
        let text = MINIMAL.replace(
            "    1  2  0  0.1  0  200  0  0  0  0  1  -360  360;",
            "    1  2  0  0.1  0  200;",
        );
        match parse_case(&text) {
            Err(CaseError::MalformedRow {
                expected, found, ..
            }) => {
                assert_eq!(expected, 13);
                assert_eq!(found, 6);
            }
            other => panic!("expected MalformedRow, got {other:?}"),
        }
    }

    #[test]
    fn duplicate_bus_id_rejected() {
        let text = MINIMAL.replace("    2  1  100", "    1  1  100");
        assert!(matches!(parse_case(&text), Err(CaseError::DuplicateBusId(1))));
    }

    #[test]
    fn dangling_gen_reference_rejected() {
        let text = MINIMAL.replace("    1  0  0  100", "    5  0  0  100");
        assert!(matches!(
            parse_case(&text),
            Err(CaseError::DanglingReference { bus: 5, .. })
        ));
    }

    #[test]
    fn gen_extra_columns_preserved() {
        let text = MINIMAL.replace(
            "    1  0  0  100  -100  1  100  1  200  0;",
            "    1  0  0  100  -100  1  100  1  200  0  0  0  17.5;",
        );
        let case = parse_case(&text).unwrap();
        assert_eq!(case.generators[0].extra, vec![0.0, 0.0, 17.5]);
    }

    #[test]
    fn gencost_optional() {
        let text: String = MINIMAL
            .lines()
            .take_while(|l| !l.contains("gencost"))
            .collect::<Vec<_>>()
            .join("\n");
        let case = parse_case(&text).unwrap();
        assert!(case.gencosts.is_empty());
    }

    #[test]
    fn piecewise_cost_parsed() {
        let text = MINIMAL.replace(
            "    2  0  0  3  0  10  0;",
            "    1  0  0  2  0  0  100  1500;",
        );
        let case = parse_case(&text).unwrap();
        assert_eq!(case.gencosts[0].model, CostModel::PiecewiseLinear);
        assert_eq!(case.gencosts[0].coefficients.len(), 4);
    }

    #[test]
    fn rows_may_share_a_line() {
        let text = MINIMAL.replace(
            "    1  3  0    0   0  0  1  1  0  230  1  1.1  0.9;\n    2  1  100  20  0  0  1  1  0  230  1  1.1  0.9;",
            "    1  3  0 0 0 0 1 1 0 230 1 1.1 0.9; 2 1 100 20 0 0 1 1 0 230 1 1.1 0.9;",
        );
        let case = parse_case(&text).unwrap();
        assert_eq!(case.buses.len(), 2);
    }
}
