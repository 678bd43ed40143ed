//! Text, CSV and JSON renderings.

use std::io::Write;

use rankopt::optimizer::{BatchEntry, Order, Solution, SolveStatus};
use rankopt::ranking::{RankingTable, WeightMode};
use rankopt::IndicatorMatrix;
use serde::{Deserialize, Serialize};

use crate::{CliError, OutputFormat};

#[derive(Serialize)]
struct RankRow<'a> {
    rank: usize,
    entity: &'a str,
    ci: f64,
    equal_weights_rank: usize,
}

pub(crate) fn write_ranking(
    out: &mut dyn Write,
    format: OutputFormat,
    table: &RankingTable,
    equal: &RankingTable,
) -> Result<(), CliError> {
    let rows: Vec<RankRow> = table
        .entries
        .iter()
        .map(|e| RankRow {
            rank: e.rank,
            entity: &e.name,
            ci: e.ci,
            equal_weights_rank: equal.rank_of(e.entity).expect("same entities"),
        })
        .collect();
    match format {
        OutputFormat::Text => {
            let width = name_width(rows.iter().map(|r| r.entity));
            writeln!(
                out,
                "{:<4}  {:<width$}  {:>5}  {:>8}",
                "Rank", "Entity", "CI", "EW rank"
            )?;
            for r in &rows {
                writeln!(
                    out,
                    "{:<4}  {:<width$}  {:>5.2}  {:>8}",
                    r.rank, r.entity, r.ci, r.equal_weights_rank
                )?;
            }
        }
        OutputFormat::Csv => {
            let mut w = csv::Writer::from_writer(out);
            for r in &rows {
                w.serialize(r)?;
            }
            w.flush()?;
        }
        OutputFormat::Json => {
            serde_json::to_writer_pretty(&mut *out, &rows)
                .map_err(|e| CliError::Output(e.to_string()))?;
            writeln!(out)?;
        }
    }
    Ok(())
}

fn name_width<'a>(names: impl Iterator<Item = &'a str>) -> usize {
    names.map(|n| n.chars().count()).max().unwrap_or(0).max(6)
}

fn status_name(status: SolveStatus) -> &'static str {
    match status {
        SolveStatus::Optimal => "optimal",
        SolveStatus::NodeBudget => "node_budget",
        SolveStatus::TimeLimit => "time_limit",
    }
}

fn order_number(order: Order) -> u8 {
    match order {
        Order::First => 1,
        Order::Second => 2,
    }
}

fn format_weight(mode: WeightMode, w: f64) -> String {
    match mode {
        WeightMode::Integer => format!("{w:.0}"),
        WeightMode::Continuous => format!("{w:.3}"),
    }
}

#[derive(Serialize)]
struct NamedWeight<'a> {
    dimension: &'a str,
    raw: f64,
    normalized: f64,
}

#[derive(Serialize)]
struct SolutionReport<'a> {
    entity: &'a str,
    mode: WeightMode,
    order: u8,
    direction: rankopt::optimizer::Direction,
    top_rank: usize,
    entities: usize,
    r_star: usize,
    distance: Option<f64>,
    weights: Vec<NamedWeight<'a>>,
    status: &'static str,
    proven: bool,
    nodes: u64,
    lp_solves: u64,
    root_bound: Option<f64>,
    wall_time_secs: f64,
}

pub(crate) fn write_solution(
    out: &mut dyn Write,
    format: OutputFormat,
    data: &IndicatorMatrix,
    s: &Solution,
) -> Result<(), CliError> {
    let report = SolutionReport {
        entity: &data.entity_names()[s.target],
        mode: s.mode,
        order: order_number(s.order),
        direction: s.direction,
        top_rank: s.rank,
        entities: data.num_entities(),
        r_star: s.r_star,
        distance: s.d_star,
        weights: data
            .dimension_names()
            .iter()
            .zip(s.weights.raw().iter().zip(s.weights.normalized()))
            .map(|(dimension, (&raw, &normalized))| NamedWeight {
                dimension,
                raw,
                normalized,
            })
            .collect(),
        status: status_name(s.status),
        proven: s.is_proven(),
        nodes: s.stats.nodes,
        lp_solves: s.stats.lp_solves,
        root_bound: s.stats.root_bound,
        wall_time_secs: s.stats.wall_time_secs,
    };
    match format {
        OutputFormat::Text => {
            writeln!(out, "Entity:     {}", report.entity)?;
            writeln!(
                out,
                "Problem:    {} weights, order {}, {} rank",
                report.mode,
                report.order,
                match report.direction {
                    rankopt::optimizer::Direction::Best => "best",
                    rankopt::optimizer::Direction::Worst => "worst",
                }
            )?;
            writeln!(
                out,
                "Top rank:   {} of {}",
                report.top_rank, report.entities
            )?;
            if let Some(d) = report.distance {
                writeln!(out, "Distance:   {d:.3}")?;
            }
            let width = name_width(report.weights.iter().map(|w| w.dimension));
            writeln!(out, "Weights:")?;
            for w in &report.weights {
                writeln!(
                    out,
                    "  {:<width$}  {:>6}  ({:.3})",
                    w.dimension,
                    format_weight(s.mode, w.raw),
                    w.normalized
                )?;
            }
            writeln!(
                out,
                "Status:     {}{}",
                report.status,
                if report.proven {
                    " (proven)"
                } else {
                    " (best incumbent, not proven)"
                }
            )?;
            writeln!(
                out,
                "Stats:      {} nodes, {} LP solves, {:.3} s",
                report.nodes, report.lp_solves, report.wall_time_secs
            )?;
        }
        OutputFormat::Csv => {
            let mut w = csv::Writer::from_writer(out);
            let mut header = vec![
                "entity",
                "mode",
                "order",
                "direction",
                "top_rank",
                "distance",
                "status",
            ];
            header.extend(data.dimension_names().iter().map(String::as_str));
            w.write_record(&header)?;
            let mut record = vec![
                report.entity.to_owned(),
                report.mode.to_string(),
                report.order.to_string(),
                format!("{:?}", report.direction).to_lowercase(),
                report.top_rank.to_string(),
                report.distance.map(|d| d.to_string()).unwrap_or_default(),
                report.status.to_owned(),
            ];
            record.extend(report.weights.iter().map(|w| w.raw.to_string()));
            w.write_record(&record)?;
            w.flush()?;
        }
        OutputFormat::Json => {
            serde_json::to_writer_pretty(&mut *out, &report)
                .map_err(|e| CliError::Output(e.to_string()))?;
            writeln!(out)?;
        }
    }
    Ok(())
}

/// One row of the batch table. Failed solves carry `error` and no rank.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableRow {
    pub entity: String,
    pub top_rank: Option<usize>,
    pub distance: Option<f64>,
    pub equal_weights_rank: usize,
    pub status: String,
    pub proven: bool,
    /// Raw weights in dataset dimension order.
    pub weights: Vec<f64>,
    pub error: Option<String>,
}

pub(crate) fn table_rows(
    data: &IndicatorMatrix,
    entries: &[BatchEntry],
    equal: &RankingTable,
) -> Vec<TableRow> {
    entries
        .iter()
        .map(|e| {
            let equal_weights_rank = equal.rank_of(e.entity).expect("same entities");
            match &e.result {
                Ok(s) => TableRow {
                    entity: e.name.clone(),
                    top_rank: Some(s.rank),
                    distance: s.d_star,
                    equal_weights_rank,
                    status: status_name(s.status).to_owned(),
                    proven: s.is_proven(),
                    weights: s.weights.raw().to_vec(),
                    error: None,
                },
                Err(err) => TableRow {
                    entity: e.name.clone(),
                    top_rank: None,
                    distance: None,
                    equal_weights_rank,
                    status: "error".to_owned(),
                    proven: false,
                    weights: vec![0.0; data.num_dimensions()],
                    error: Some(err.to_string()),
                },
            }
        })
        .collect()
}

const FIXED_COLUMNS: [&str; 5] = [
    "entity",
    "top_rank",
    "distance",
    "equal_weights_rank",
    "status",
];

pub(crate) fn write_table(
    out: &mut dyn Write,
    format: OutputFormat,
    data: &IndicatorMatrix,
    rows: &[TableRow],
) -> Result<(), CliError> {
    match format {
        OutputFormat::Text => {
            let width = name_width(rows.iter().map(|r| r.entity.as_str()));
            writeln!(
                out,
                "Weights in dimension order: {}",
                data.dimension_names().join(", ")
            )?;
            writeln!(
                out,
                "{:<width$}  {:>8}  {:>8}  {:>7}  Weights",
                "Entity", "Top rank", "Distance", "EW rank"
            )?;
            for r in rows {
                match (&r.error, r.top_rank) {
                    (Some(_), _) | (None, None) => {
                        let err = r.error.as_deref().unwrap_or("no result");
                        writeln!(out, "{:<width$}  {:>8}  {err}", r.entity, "ERROR")?;
                    }
                    (None, Some(rank)) => {
                        let marker = if r.proven { "" } else { "  (unproven)" };
                        let mode = if r.weights.iter().all(|w| w.fract() == 0.0) {
                            WeightMode::Integer
                        } else {
                            WeightMode::Continuous
                        };
                        let weights: Vec<String> =
                            r.weights.iter().map(|&w| format_weight(mode, w)).collect();
                        writeln!(
                            out,
                            "{:<width$}  {:>8}  {:>8}  {:>7}  {}{marker}",
                            r.entity,
                            rank,
                            r.distance
                                .map_or_else(|| "-".to_owned(), |d| format!("{d:.3}")),
                            r.equal_weights_rank,
                            weights.join(" ")
                        )?;
                    }
                }
            }
        }
        OutputFormat::Csv => {
            let mut w = csv::Writer::from_writer(out);
            let mut header: Vec<&str> = FIXED_COLUMNS.to_vec();
            header.extend(data.dimension_names().iter().map(String::as_str));
            header.push("error");
            w.write_record(&header)?;
            for r in rows {
                let mut record = vec![
                    r.entity.clone(),
                    r.top_rank.map(|x| x.to_string()).unwrap_or_default(),
                    // Shortest round-trip representation.
                    r.distance.map(|d| d.to_string()).unwrap_or_default(),
                    r.equal_weights_rank.to_string(),
                    r.status.clone(),
                ];
                record.extend(r.weights.iter().map(|x| x.to_string()));
                record.push(r.error.clone().unwrap_or_default());
                w.write_record(&record)?;
            }
            w.flush()?;
        }
        OutputFormat::Json => {
            serde_json::to_writer_pretty(&mut *out, rows)
                .map_err(|e| CliError::Output(e.to_string()))?;
            writeln!(out)?;
        }
    }
    Ok(())
}

/// Parses the CSV written by `rankopt table --format csv`. Returns the
/// dimension names and the rows.
pub fn parse_table_csv(text: &str) -> Result<(Vec<String>, Vec<TableRow>), String> {
    let mut reader = csv::Reader::from_reader(text.as_bytes());
    let header: Vec<String> = reader
        .headers()
        .map_err(|e| e.to_string())?
        .iter()
        .map(str::to_owned)
        .collect();
    if header.len() < FIXED_COLUMNS.len() + 1
        || header[..FIXED_COLUMNS.len()] != FIXED_COLUMNS
        || header.last().map(String::as_str) != Some("error")
    {
        return Err(format!("unexpected header: {}", header.join(",")));
    }
    let dims = header[FIXED_COLUMNS.len()..header.len() - 1].to_vec();
    let optional = |s: &str| (!s.is_empty()).then(|| s.to_owned());
    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| e.to_string())?;
        let field = |i: usize| record.get(i).unwrap_or("");
        let num = |i: usize| -> Result<f64, String> {
            field(i)
                .parse()
                .map_err(|_| format!("bad number `{}`", field(i)))
        };
        let status = field(4).to_owned();
        rows.push(TableRow {
            entity: field(0).to_owned(),
            top_rank: optional(field(1))
                .map(|s| s.parse().map_err(|_| format!("bad rank `{s}`")))
                .transpose()?,
            distance: optional(field(2))
                .map(|s| s.parse().map_err(|_| format!("bad distance `{s}`")))
                .transpose()?,
            equal_weights_rank: field(3)
                .parse()
                .map_err(|_| format!("bad rank `{}`", field(3)))?,
            proven: status == "optimal",
            status,
            weights: (0..dims.len())
                .map(|j| num(FIXED_COLUMNS.len() + j))
                .collect::<Result<_, _>>()?,
            error: optional(field(header.len() - 1)),
        });
    }
    Ok((dims, rows))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_round_trips_error_rows() {
        let data = IndicatorMatrix::from_entity_rows(
            vec!["a, b".into(), "c".into()],
            vec!["x".into(), "y".into()],
            &[vec![0.1, 0.2], vec![0.3, 0.4]],
        )
        .unwrap();
        let rows = vec![
            TableRow {
                entity: "y".into(),
                top_rank: Some(1),
                distance: Some(0.1 + 0.2),
                equal_weights_rank: 1,
                status: "optimal".into(),
                proven: true,
                weights: vec![2.0, 3.0],
                error: None,
            },
            TableRow {
                entity: "x".into(),
                top_rank: None,
                distance: None,
                equal_weights_rank: 2,
                status: "error".into(),
                proven: false,
                weights: vec![0.0, 0.0],
                error: Some("infeasible: \"quoted\", with comma".into()),
            },
        ];
        let mut buf = Vec::new();
        write_table(&mut buf, OutputFormat::Csv, &data, &rows).unwrap();
        let (dims, parsed) = parse_table_csv(std::str::from_utf8(&buf).unwrap()).unwrap();
        assert_eq!(dims, data.dimension_names());
        assert_eq!(parsed, rows);

        let mut text = Vec::new();
        write_table(&mut text, OutputFormat::Text, &data, &rows).unwrap();
        assert!(String::from_utf8(text)
            .unwrap()
            .lines()
            .any(|l| l.starts_with("x") && l.contains("ERROR")));
    }

    #[test]
    fn rejects_foreign_csv() {
        assert!(parse_table_csv("rank,entity,ci\n1,x,2\n").is_err());
    }
}
