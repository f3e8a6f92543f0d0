use clap::{Args, ValueEnum};
use loopsim::scaling::{self, SystemParams};
use loopsim::Exact;
use num_bigint::BigInt;
use num_traits::{Pow, ToPrimitive};
use serde::Serialize;

use crate::io::{print_json, CliError, CliResult};

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Preset {
    /// Optical (2e7 m/s, 100 µm) against biological (2 m/s, 10 µm).
    BioVsOptical,
    /// One million neurons at 20 MHz with 5e-14 J per firing.
    Power,
}

#[derive(Args, Debug)]
pub struct ScaleArgs {
    #[arg(long, value_enum)]
    pub preset: Option<Preset>,
    /// Signal velocity in m/s.
    #[arg(long)]
    pub v: Option<String>,
    /// Device size in m.
    #[arg(long)]
    pub w: Option<String>,
    /// Reference velocity for the pool ratio (default: biological 2 m/s).
    #[arg(long)]
    pub v_ref: Option<String>,
    /// Reference device size for the pool ratio (default: biological 10 µm).
    #[arg(long)]
    pub w_ref: Option<String>,
    /// Photon wavelength in m.
    #[arg(long)]
    pub wavelength: Option<String>,
    /// Neuron count for the power budget.
    #[arg(long)]
    pub n: Option<String>,
    /// Mean firing rate in Hz.
    #[arg(long)]
    pub rate: Option<String>,
    /// Energy per firing in J.
    #[arg(long)]
    pub energy: Option<String>,
    #[arg(long)]
    pub json: bool,
}

/// Parses a decimal literal such as `2e7`, `1.55e-6` or `-3.5` into an exact rational.
pub fn parse_exact(s: &str) -> Option<Exact> {
    let s = s.trim();
    let (mantissa, exp) = match s.find(['e', 'E']) {
        Some(i) => (&s[..i], s[i + 1..].parse::<i32>().ok()?),
        None => (s, 0),
    };
    let (neg, digits) = match mantissa.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, mantissa.strip_prefix('+').unwrap_or(mantissa)),
    };
    let (int_part, frac_part) = digits.split_once('.').unwrap_or((digits, ""));
    if int_part.is_empty() && frac_part.is_empty() {
        return None;
    }
    if !int_part.chars().chain(frac_part.chars()).all(|c| c.is_ascii_digit()) {
        return None;
    }
    let mut num: BigInt = format!("{int_part}{frac_part}0").parse().ok()?;
    num /= 10;
    let scale = exp - frac_part.len() as i32;
    let ten = BigInt::from(10);
    let mut q = if scale >= 0 {
        Exact::from_integer(num * Pow::pow(&ten, scale as u32))
    } else {
        Exact::new(num, Pow::pow(&ten, (-scale) as u32))
    };
    if neg {
        q = -q;
    }
    Some(q)
}

fn arg(name: &str, v: &Option<String>) -> CliResult<Option<Exact>> {
    v.as_deref()
        .map(|s| parse_exact(s).ok_or_else(|| CliError::user(format!("--{name}: not a number: {s:?}"))))
        .transpose()
}

#[derive(Debug, Serialize)]
struct Row {
    quantity: String,
    value: f64,
    /// Exact rational value, `p/q` or an integer.
    exact: String,
    unit: &'static str,
}

fn row(quantity: impl Into<String>, value: &Exact, unit: &'static str) -> Row {
    Row {
        quantity: quantity.into(),
        value: value.to_f64().unwrap_or(f64::NAN),
        exact: value.to_string(),
        unit,
    }
}

fn params(v: Exact, w: Exact) -> CliResult<SystemParams<Exact>> {
    SystemParams::new(v, w).map_err(|e| CliError::user(e.to_string()))
}

pub fn run(a: &ScaleArgs) -> CliResult<()> {
    let mut rows = Vec::new();
    let user = |e: scaling::ScalingError| CliError::user(e.to_string());

    let (v, w) = (arg("v", &a.v)?, arg("w", &a.w)?);
    let reference = match (arg("v-ref", &a.v_ref)?, arg("w-ref", &a.w_ref)?) {
        (None, None) => SystemParams::biological(),
        (vr, wr) => {
            let bio = SystemParams::<Exact>::biological();
            params(vr.unwrap_or(bio.velocity), wr.unwrap_or(bio.device_size))?
        }
    };
    let subject = match (a.preset, v, w) {
        (_, Some(v), Some(w)) => Some(params(v, w)?),
        (_, Some(_), None) | (_, None, Some(_)) => {
            return Err(CliError::user("--v and --w must be given together"));
        }
        (Some(Preset::BioVsOptical), None, None) => Some(SystemParams::optical()),
        (None, None, None) if a.wavelength.is_none() && a.n.is_none() && a.rate.is_none() && a.energy.is_none() => {
            Some(SystemParams::optical())
        }
        _ => None,
    };
    if let Some(s) = &subject {
        rows.push(row("velocity", &s.velocity, "m/s"));
        rows.push(row("device size", &s.device_size, "m"));
        rows.push(row("pool metric (v/w)^2", &scaling::pool_metric(s), "1/s^2"));
        rows.push(row("reference velocity", &reference.velocity, "m/s"));
        rows.push(row("reference device size", &reference.device_size, "m"));
        rows.push(row("reference pool metric", &scaling::pool_metric(&reference), "1/s^2"));
        rows.push(row("pool ratio", &scaling::pool_ratio(s, &reference), ""));
    }

    if let Some(lambda) = arg("wavelength", &a.wavelength)? {
        let e = scaling::photon_energy(lambda.clone()).map_err(user)?;
        rows.push(row("wavelength", &lambda, "m"));
        rows.push(row("photon energy", &e, "J"));
    }

    let power_inputs = match a.preset {
        Some(Preset::Power) => Some((
            Exact::from_integer(1_000_000.into()),
            Exact::from_integer(20_000_000.into()),
            parse_exact("5e-14").expect("literal"),
        )),
        _ => None,
    };
    let (n, rate, energy) = (arg("n", &a.n)?, arg("rate", &a.rate)?, arg("energy", &a.energy)?);
    let power_inputs = match (n, rate, energy) {
        (None, None, None) => power_inputs,
        (Some(n), Some(r), Some(e)) => Some((n, r, e)),
        _ => return Err(CliError::user("--n, --rate and --energy must be given together")),
    };
    if let Some((n, r, e)) = power_inputs {
        let p = scaling::power_budget(n.clone(), r.clone(), e.clone()).map_err(user)?;
        rows.push(row("neurons", &n, ""));
        rows.push(row("mean rate", &r, "Hz"));
        rows.push(row("energy per firing", &e, "J"));
        rows.push(row("power", &p, "W"));
    }

    if a.json {
        return print_json(&rows);
    }
    let width = rows.iter().map(|r| r.quantity.len()).max().unwrap_or(0);
    for r in &rows {
        println!("{:width$}  {:>13.6e}  {}", r.quantity, r.value, r.unit);
    }
    Ok(())
}
