use clap::Args;
use errcons_core::consistency::{bounds_cobs, bounds_cobs_from_accuracies, bounds_kappa, expected_overlap, kappa};
use errcons_core::report::format_float;
use errcons_core::{AccuracyPair, Kappa};

use crate::exit;

#[derive(Debug, Args)]
#[command(group = clap::ArgGroup::new("values").required(true).multiple(true))]
pub struct BoundsArgs {
    /// Expected overlap values.
    #[arg(long = "cexp", num_args = 1.., group = "values", allow_negative_numbers = true)]
    pub c_exp: Vec<String>,
    /// Accuracy pairs as `p,q`.
    #[arg(long = "acc", num_args = 1.., group = "values", allow_negative_numbers = true)]
    pub accuracies: Vec<String>,
}

const UNDEFINED: &str = "undefined";

fn kappa_text(k: Kappa<f64>) -> String {
    k.value().map_or_else(|| UNDEFINED.to_owned(), format_float)
}

fn cexp_row(raw: &str) -> anyhow::Result<String> {
    let c: f64 = raw.trim().parse().map_err(|_| anyhow::anyhow!("`{raw}` is not a number"))?;
    let cobs = bounds_cobs(c)?;
    let kappa_cols = match bounds_kappa(c) {
        Ok(k) => format!("{} {}", format_float(k.lo), format_float(k.hi)),
        Err(errcons_core::Error::UndefinedKappaBounds) => format!("{UNDEFINED} {UNDEFINED}"),
        Err(e) => return Err(e.into()),
    };
    Ok(format!(
        "{} {} {} {kappa_cols}",
        format_float(c),
        format_float(cobs.lo),
        format_float(cobs.hi)
    ))
}

fn acc_row(raw: &str) -> anyhow::Result<String> {
    let (p, q) = raw
        .split_once(',')
        .ok_or_else(|| anyhow::anyhow!("`{raw}` is not a `p,q` pair"))?;
    let parse = |s: &str| s.trim().parse::<f64>().map_err(|_| anyhow::anyhow!("`{s}` is not a number"));
    let acc = AccuracyPair::new(parse(p)?, parse(q)?)?;
    let c = expected_overlap(&acc)?;
    let cobs = bounds_cobs_from_accuracies(&acc)?;
    Ok(format!(
        "{} {} {} {} {} {} {}",
        format_float(acc.p_i),
        format_float(acc.p_j),
        format_float(c),
        format_float(cobs.lo),
        format_float(cobs.hi),
        kappa_text(kappa(cobs.lo, c)?),
        kappa_text(kappa(cobs.hi, c)?),
    ))
}

pub fn run(args: BoundsArgs) -> anyhow::Result<u8> {
    let mut failed = false;
    let mut section = |header: &str, inputs: &[String], row: fn(&str) -> anyhow::Result<String>| {
        if inputs.is_empty() {
            return;
        }
        println!("{header}");
        for raw in inputs {
            match row(raw) {
                Ok(line) => println!("{line}"),
                Err(e) => {
                    eprintln!("error: {raw}: {e:#}");
                    failed = true;
                }
            }
        }
    };
    section("c_exp cobs_lo cobs_hi kappa_lo kappa_hi", &args.c_exp, cexp_row);
    section("p_i p_j c_exp cobs_lo cobs_hi kappa_lo kappa_hi", &args.accuracies, acc_row);
    Ok(if failed { exit::DATA } else { exit::OK })
}
