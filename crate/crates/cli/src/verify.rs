//! `rankopt verify`: optimizer versus exhaustive reference, entity by entity.

use std::io::Write;

use rankopt::optimizer::{self, Direction, OptimizationSpec, Order};
use rankopt::oracle::{self, OracleError, OracleResult};
use rankopt::ranking::WeightMode;
use rankopt::IndicatorMatrix;

use crate::{find_entity, load_data, CliError, VerifyArgs, EXIT_OK, EXIT_PARTIAL};

const INTEGER_TOL: f64 = 1e-9;
const CONTINUOUS_TOL: f64 = 1e-7;

fn oracle_for(
    data: &IndicatorMatrix,
    target: usize,
    args: &VerifyArgs,
) -> Result<OracleResult, OracleError> {
    match (args.mode, args.direction) {
        (WeightMode::Integer, Direction::Best) => {
            oracle::brute_integer(data, target, args.cap, Order::Second, Direction::Best)
        }
        (WeightMode::Integer, Direction::Worst) => {
            oracle::brute_integer(data, target, args.cap, Order::First, Direction::Worst)
        }
        (WeightMode::Continuous, Direction::Best) => {
            oracle::brute_continuous_distance(data, target, 0.0)
        }
        (WeightMode::Continuous, Direction::Worst) => {
            oracle::brute_continuous_rank(data, target, 0.0, Direction::Worst)
        }
    }
}

fn fmt_d(d: Option<f64>) -> String {
    d.map_or_else(|| "-".to_owned(), |d| format!("{d:.6}"))
}

pub(crate) fn cmd_verify(args: &VerifyArgs, out: &mut dyn Write) -> Result<u8, CliError> {
    let instances: Vec<(String, IndicatorMatrix)> = match args.seed {
        Some(seed) => {
            if args.entities < 1 || args.dimensions < 1 {
                return Err(CliError::Usage(
                    "instances need at least one entity and dimension".into(),
                ));
            }
            (seed..seed.saturating_add(args.count))
                .map(|s| {
                    (
                        format!("seed {s}"),
                        oracle::random_instance(s, args.entities, args.dimensions, 2),
                    )
                })
                .collect()
        }
        None => vec![(crate::data_label(&args.data), load_data(&args.data)?)],
    };

    let mut checked = 0usize;
    let mut matched = 0usize;
    for (label, data) in &instances {
        let targets: Vec<usize> = match &args.entity {
            Some(name) => vec![find_entity(data, name)?],
            None => (0..data.num_entities()).collect(),
        };
        for target in targets {
            let reference =
                oracle_for(data, target, args).map_err(|e| CliError::Usage(e.to_string()))?;
            let spec = OptimizationSpec::new(target)
                .with_mode(args.mode)
                .with_direction(args.direction)
                .with_weight_cap(args.cap)
                .with_order(match args.direction {
                    Direction::Best => Order::Second,
                    Direction::Worst => Order::First,
                });
            let s = optimizer::solve(data, &spec)?;
            let tol = match args.mode {
                WeightMode::Integer => INTEGER_TOL,
                WeightMode::Continuous => CONTINUOUS_TOL,
            };
            let same_d = match (s.d_star, reference.d_star) {
                (Some(a), Some(b)) => (a - b).abs() <= tol,
                (None, None) => true,
                _ => false,
            };
            let ok = s.r_star == reference.r_star && same_d;
            checked += 1;
            matched += usize::from(ok);
            writeln!(
                out,
                "{label}, {}: optimizer R*={} D*={}  oracle R*={} D*={}  {}",
                data.entity_names()[target],
                s.r_star,
                fmt_d(s.d_star),
                reference.r_star,
                fmt_d(reference.d_star),
                if ok { "MATCH" } else { "MISMATCH" }
            )?;
        }
    }
    writeln!(out, "{matched}/{checked} MATCH")?;
    Ok(if matched == checked {
        EXIT_OK
    } else {
        EXIT_PARTIAL
    })
}
