//! Bit-stable exports of kernels, theta tables and lagrangian enumerations.

use std::path::Path;

use serde::Serialize;
use weil_core::heisenberg::HeisenbergElement;
use weil_core::intertwiner::{kernel, EnhancedPair};
use weil_core::symplectic::{EnhancedLagrangian, Lagrangian, SymplecticSpace};
use weil_core::tate::{theta_table, LaurentParams};
use weil_core::values::{RingValue, Sign};

use crate::cache;
use crate::config::{value_bytes, BudgetClock, Format};
use crate::{CliError, CliResult};

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum ExportKind {
    Kernel,
    ThetaTable,
    Lagrangians,
}

/// Selects `F_{N⁰,L⁰}` by indices into the lagrangian enumeration and signs.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PairSelection {
    pub n: usize,
    pub n_eps: Sign,
    pub l: usize,
    pub l_eps: Sign,
}

impl Default for PairSelection {
    fn default() -> Self {
        PairSelection { n: 0, n_eps: Sign::Plus, l: 0, l_eps: Sign::Plus }
    }
}

#[derive(Serialize)]
struct EnhancedRecord {
    id: usize,
    rows: Vec<Vec<u32>>,
    eps: i32,
}

#[derive(Serialize)]
struct KernelRow {
    m: Vec<u32>,
    a: u32,
    value: RingValue,
}

#[derive(Serialize)]
struct KernelExport {
    schema: &'static str,
    p: u32,
    d: usize,
    n: EnhancedRecord,
    l: EnhancedRecord,
    rows: Vec<KernelRow>,
}

#[derive(Serialize)]
struct ThetaRow {
    id: usize,
    rows: Vec<Vec<u32>>,
    eps: i32,
    stratum: usize,
    value: RingValue,
}

#[derive(Serialize)]
struct ThetaExport {
    schema: &'static str,
    p: u32,
    d: usize,
    level: usize,
    rows: Vec<ThetaRow>,
}

#[derive(Serialize)]
struct LagrangianRow {
    id: usize,
    rows: Vec<Vec<u32>>,
}

#[derive(Serialize)]
struct LagrangianExport {
    schema: &'static str,
    p: u32,
    d: usize,
    count: usize,
    lagrangians: Vec<LagrangianRow>,
}

fn json<T: Serialize>(v: &T) -> CliResult<String> {
    let mut s = serde_json::to_string_pretty(v).map_err(|e| CliError::Serialize(e.to_string()))?;
    s.push('\n');
    Ok(s)
}

fn csv_string(header: &[String], rows: impl IntoIterator<Item = Vec<String>>) -> CliResult<String> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
    let ser = |e: csv::Error| CliError::Serialize(e.to_string());
    w.write_record(header).map_err(ser)?;
    for r in rows {
        w.write_record(&r).map_err(ser)?;
    }
    let bytes = w.into_inner().map_err(|e| CliError::Serialize(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| CliError::Serialize(e.to_string()))
}

/// Rows of a lagrangian as `"1 0 0 2;0 1 2 0"`.
pub fn rows_cell(rows: &[Vec<u32>]) -> String {
    rows.iter()
        .map(|r| r.iter().map(u32::to_string).collect::<Vec<_>>().join(" "))
        .collect::<Vec<_>>()
        .join(";")
}

fn enumeration_budget(clock: &BudgetClock, space: SymplecticSpace) -> CliResult<u128> {
    let per = 64 + 4 * (space.dim() * space.d()) as u64;
    clock.reserve(space.lagrangian_count() as u64 * per, "lagrangian enumeration")?;
    Ok(u128::MAX)
}

/// Lagrangians through the cache, under the byte budget.
pub fn budgeted_lagrangians(clock: &BudgetClock, space: SymplecticSpace) -> CliResult<Vec<Lagrangian>> {
    let budget = enumeration_budget(clock, space)?;
    Ok(cache::lagrangians(space, budget)?)
}

fn select(lags: &[Lagrangian], idx: usize, eps: Sign) -> CliResult<EnhancedLagrangian> {
    lags.get(idx)
        .map(|l| EnhancedLagrangian::new(l.clone(), eps))
        .ok_or_else(|| CliError::Usage(format!("lagrangian index {idx} out of range 0..{}", lags.len())))
}

/// The kernel table of the selected pair, one row per element of `H` in table order.
pub fn export_kernel(space: SymplecticSpace, sel: PairSelection, format: Format, clock: &BudgetClock) -> CliResult<String> {
    let p = space.p();
    let size = (p as u64).pow(space.dim() as u32 + 1);
    clock.reserve(3 * size * value_bytes(p), "kernel table")?;
    let lags = budgeted_lagrangians(clock, space)?;
    let n0 = select(&lags, sel.n, sel.n_eps)?;
    let l0 = select(&lags, sel.l, sel.l_eps)?;
    let k = kernel(&EnhancedPair::new(n0.clone(), l0.clone()))?;
    let rows: Vec<KernelRow> = k
        .table
        .table()
        .iter()
        .enumerate()
        .map(|(i, v)| {
            let h = HeisenbergElement::from_index(space, i);
            KernelRow { m: h.m, a: h.a, value: v.clone() }
        })
        .collect();
    match format {
        Format::Json => json(&KernelExport {
            schema: "weil.kernel/1",
            p,
            d: space.d(),
            n: EnhancedRecord { id: sel.n, rows: n0.lag.rows(), eps: n0.eps.as_i32() },
            l: EnhancedRecord { id: sel.l, rows: l0.lag.rows(), eps: l0.eps.as_i32() },
            rows,
        }),
        Format::Csv => {
            let mut header: Vec<String> = (1..=space.dim()).map(|i| format!("m_{i}")).collect();
            header.extend(["a".to_string(), "value".to_string()]);
            csv_string(
                &header,
                rows.into_iter().map(|r| {
                    let mut cells: Vec<String> = r.m.iter().map(u32::to_string).collect();
                    cells.push(r.a.to_string());
                    cells.push(r.value.to_json());
                    cells
                }),
            )
        }
    }
}

/// The theta table at `level`, in enhanced enumeration order.
pub fn export_theta_table(p: u32, d: usize, level: usize, format: Format, clock: &BudgetClock) -> CliResult<String> {
    let params = LaurentParams::new(p, d, level)?;
    let space = params.truncate(level)?;
    let model = (p as u64).saturating_pow((space.d()) as u32);
    clock.reserve(2 * space.lagrangian_count() as u64 * value_bytes(p) + model * value_bytes(p), "theta table")?;
    let lags = budgeted_lagrangians(clock, space)?;
    let table = theta_table(&params, level)?;
    let rows: Vec<ThetaRow> = table
        .into_iter()
        .map(|e| {
            let id = lags.binary_search(&e.lagrangian.lag).expect("table covers the enumeration");
            ThetaRow { id, rows: e.lagrangian.lag.rows(), eps: e.lagrangian.eps.as_i32(), stratum: e.stratum, value: e.value }
        })
        .collect();
    match format {
        Format::Json => json(&ThetaExport { schema: "weil.theta-table/1", p, d, level, rows }),
        Format::Csv => csv_string(
            &["id", "rows", "eps", "stratum", "value"].map(String::from),
            rows.into_iter().map(|r| {
                vec![r.id.to_string(), rows_cell(&r.rows), r.eps.to_string(), r.stratum.to_string(), r.value.to_json()]
            }),
        ),
    }
}

/// All lagrangians of `space` in enumeration order.
pub fn export_lagrangians(space: SymplecticSpace, format: Format, clock: &BudgetClock) -> CliResult<String> {
    let lags = budgeted_lagrangians(clock, space)?;
    let rows: Vec<LagrangianRow> = lags.iter().enumerate().map(|(id, l)| LagrangianRow { id, rows: l.rows() }).collect();
    match format {
        Format::Json => json(&LagrangianExport { schema: "weil.lagrangians/1", p: space.p(), d: space.d(), count: rows.len(), lagrangians: rows }),
        Format::Csv => csv_string(&["id", "rows"].map(String::from), rows.into_iter().map(|r| vec![r.id.to_string(), rows_cell(&r.rows)])),
    }
}

/// Writes to `out`, or to stdout when `None`.
pub fn emit(content: &str, out: Option<&Path>) -> CliResult<()> {
    match out {
        Some(path) => std::fs::write(path, content).map_err(|source| CliError::Io { path: path.display().to_string(), source }),
        None => {
            use std::io::Write;
            let mut stdout = std::io::stdout().lock();
            stdout
                .write_all(content.as_bytes())
                .map_err(|source| CliError::Io { path: "<stdout>".into(), source })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::Budget;

    fn clock() -> BudgetClock {
        BudgetClock::start(Budget::default())
    }

    #[test]
    fn kernel_csv_has_one_row_per_group_element() {
        let space = SymplecticSpace::new(3, 1).unwrap();
        let sel = PairSelection { n: 0, n_eps: Sign::Plus, l: 3, l_eps: Sign::Minus };
        let csv = export_kernel(space, sel, Format::Csv, &clock()).unwrap();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "m_1,m_2,a,value");
        assert_eq!(lines.len(), 1 + 27);
        assert_eq!(csv, export_kernel(space, sel, Format::Csv, &clock()).unwrap());
    }

    #[test]
    fn theta_table_csv_rows() {
        let csv = export_theta_table(3, 1, 1, Format::Csv, &clock()).unwrap();
        assert_eq!(csv.lines().count(), 1 + 80);
        assert!(csv.starts_with("id,rows,eps,stratum,value\n0,"));
    }

    #[test]
    fn lagrangians_json_counts() {
        let space = SymplecticSpace::new(5, 1).unwrap();
        let js = export_lagrangians(space, Format::Json, &clock()).unwrap();
        let v: serde_json::Value = serde_json::from_str(&js).unwrap();
        assert_eq!(v["count"], 6);
        assert_eq!(v["lagrangians"].as_array().unwrap().len(), 6);
    }

    #[test]
    fn oversized_tables_are_refused_before_computing() {
        let tight = BudgetClock::start(Budget { max_table_bytes: 1000, max_seconds: None });
        let space = SymplecticSpace::new(3, 2).unwrap();
        assert!(matches!(export_kernel(space, PairSelection::default(), Format::Json, &tight), Err(CliError::Budget(_))));
        assert!(matches!(export_kernel(space, PairSelection::default(), Format::Json, &tight).unwrap_err().exit_code(), 3));
    }

    #[test]
    fn bad_indices_are_usage_errors() {
        let space = SymplecticSpace::new(3, 1).unwrap();
        let sel = PairSelection { n: 9, ..PairSelection::default() };
        assert_eq!(export_kernel(space, sel, Format::Json, &clock()).unwrap_err().exit_code(), 2);
    }
}
