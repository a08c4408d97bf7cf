//! Benchmark sweeps over the source uplink and their CSV form.

use std::fmt;
use std::io::{Read, Write};
use std::str::FromStr;

use crate::alloc::{wsdt, StaticScheme};
use crate::bound::wsdt_lower_bound;
use crate::dynamic::{simulate_dynamic, Mode};
use crate::error::Error;
use crate::model::{generate_case, BenchmarkCase, Network, Scenario, WeightProfile};

pub const CSV_HEADER: [&str; 7] = ["case", "n", "us", "scheme", "wsdt", "lower_bound", "ratio"];

/// Rounds to 12 significant digits.
pub fn round_sig(x: f64) -> f64 {
    if !x.is_finite() || x == 0.0 {
        return x;
    }
    format!("{x:.11e}").parse().unwrap_or(x)
}

/// Shortest text that parses back to `round_sig(x)`; infinities print as
/// `inf`.
pub fn format_num(x: f64) -> String {
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    format!("{}", round_sig(x))
}

pub fn parse_num(s: &str) -> Result<f64, Error> {
    let t = s.trim();
    match t.to_ascii_lowercase().as_str() {
        "inf" | "infinity" => Ok(f64::INFINITY),
        "-inf" | "-infinity" => Ok(f64::NEG_INFINITY),
        _ => t
            .parse()
            .map_err(|_| Error::Parse(format!("not a number: {s:?}"))),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SweepScheme {
    LowerBound,
    Static(StaticScheme),
    Dynamic(Mode),
}

impl SweepScheme {
    pub fn name(self) -> String {
        match self {
            SweepScheme::LowerBound => "lowerbound".into(),
            SweepScheme::Static(s) => s.name().into(),
            SweepScheme::Dynamic(m) => format!("dynamic-{m}"),
        }
    }

    pub fn is_static(self) -> bool {
        !matches!(self, SweepScheme::Dynamic(_))
    }
}

impl fmt::Display for SweepScheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name())
    }
}

impl FromStr for SweepScheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        let t = s.trim().to_ascii_lowercase();
        if t == "lowerbound" || t == "lower-bound" {
            return Ok(SweepScheme::LowerBound);
        }
        if let Some(mode) = t.strip_prefix("dynamic-") {
            return mode
                .parse()
                .map(SweepScheme::Dynamic)
                .map_err(|_| Error::UnknownScheme(s.to_string()));
        }
        t.parse().map(SweepScheme::Static)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum SweepSource {
    Case {
        case: BenchmarkCase,
        n: usize,
        weights: WeightProfile,
    },
    /// The scenario's own source uplink is replaced by each swept value.
    Scenario { label: String, scenario: Scenario },
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub source: SweepSource,
    pub source_uplinks: Vec<f64>,
    pub schemes: Vec<SweepScheme>,
    pub file_size: f64,
}

impl SweepSpec {
    pub fn validate(&self) -> Result<(), Error> {
        if self.schemes.is_empty() {
            return Err(Error::InvalidSweep("no schemes".into()));
        }
        if self.source_uplinks.is_empty() {
            return Err(Error::InvalidSweep("no source uplink values".into()));
        }
        if let Some(u) = self
            .source_uplinks
            .iter()
            .find(|u| !u.is_finite() || **u <= 0.0)
        {
            return Err(Error::InvalidSweep(format!(
                "source uplink {u} is not positive"
            )));
        }
        if self.source_uplinks.windows(2).any(|w| w[1] < w[0]) {
            return Err(Error::InvalidSweep(
                "source uplinks must be ascending".into(),
            ));
        }
        Ok(())
    }

    fn label(&self) -> String {
        match &self.source {
            SweepSource::Case { case, .. } => case.label().into(),
            SweepSource::Scenario { label, .. } => label.clone(),
        }
    }

    fn network(&self, us: f64) -> Result<Network, Error> {
        Ok(match &self.source {
            SweepSource::Case { case, n, weights } => {
                generate_case(*case, *n, us, weights, self.file_size)?
            }
            SweepSource::Scenario { scenario, .. } => {
                Network::new(us, scenario.peers.clone(), scenario.file_size)?
            }
        })
    }
}

/// `count` values spaced evenly in log scale from `lo` to `hi` inclusive.
pub fn log_space(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    match count {
        0 => Vec::new(),
        1 => vec![lo],
        _ => {
            let (a, b) = (lo.ln(), hi.ln());
            (0..count)
                .map(|k| (a + (b - a) * k as f64 / (count - 1) as f64).exp())
                .collect()
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub case: String,
    pub n: usize,
    pub us: f64,
    pub scheme: String,
    pub wsdt: f64,
    pub lower_bound: f64,
    pub ratio: f64,
}

fn ratio(value: f64, bound: f64) -> f64 {
    if bound == 0.0 {
        if value == 0.0 {
            1.0
        } else {
            f64::INFINITY
        }
    } else {
        value / bound
    }
}

pub fn evaluate(network: &Network, scheme: SweepScheme) -> Result<f64, Error> {
    Ok(match scheme {
        SweepScheme::LowerBound => wsdt_lower_bound(network).value,
        SweepScheme::Static(s) => {
            let out = s.allocate(network)?;
            wsdt(&out.flow_rates, &network.weights(), network.file_size()).unwrap_or(f64::INFINITY)
        }
        SweepScheme::Dynamic(mode) => simulate_dynamic(network, mode, &[])?.wsdt,
    })
}

/// One row per `(U_s, scheme)` in spec order. Values are rounded to the
/// 12 significant digits the CSV carries, so rows survive a round trip.
pub fn run_sweep(spec: &SweepSpec) -> Result<Vec<SweepRow>, Error> {
    spec.validate()?;
    let label = spec.label();
    let mut rows = Vec::with_capacity(spec.source_uplinks.len() * spec.schemes.len());
    for &us in &spec.source_uplinks {
        let net = spec.network(us)?;
        let bound = wsdt_lower_bound(&net).value;
        for &scheme in &spec.schemes {
            let value = evaluate(&net, scheme)?;
            rows.push(SweepRow {
                case: label.clone(),
                n: net.len(),
                us: round_sig(us),
                scheme: scheme.name(),
                wsdt: round_sig(value),
                lower_bound: round_sig(bound),
                ratio: round_sig(ratio(value, bound)),
            });
        }
    }
    Ok(rows)
}

pub fn write_csv<W: Write>(rows: &[SweepRow], out: W) -> Result<(), Error> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER)?;
    for r in rows {
        w.write_record([
            r.case.clone(),
            r.n.to_string(),
            format_num(r.us),
            r.scheme.clone(),
            format_num(r.wsdt),
            format_num(r.lower_bound),
            format_num(r.ratio),
        ])?;
    }
    w.flush().map_err(|e| Error::Io {
        path: "<csv>".into(),
        source: e,
    })?;
    Ok(())
}

pub fn to_csv_string(rows: &[SweepRow]) -> Result<String, Error> {
    let mut buf = Vec::new();
    write_csv(rows, &mut buf)?;
    String::from_utf8(buf).map_err(|e| Error::Parse(e.to_string()))
}

pub fn read_csv<R: Read>(input: R) -> Result<Vec<SweepRow>, Error> {
    let mut r = csv::Reader::from_reader(input);
    let header = r.headers()?.clone();
    if header.iter().ne(CSV_HEADER.iter().copied()) {
        return Err(Error::Parse(format!(
            "unexpected header {:?}",
            header.iter().collect::<Vec<_>>()
        )));
    }
    let mut rows = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        if rec.len() != CSV_HEADER.len() {
            return Err(Error::Parse(format!("row has {} fields", rec.len())));
        }
        rows.push(SweepRow {
            case: rec[0].to_string(),
            n: rec[1]
                .parse()
                .map_err(|_| Error::Parse(format!("bad peer count {:?}", &rec[1])))?,
            us: parse_num(&rec[2])?,
            scheme: rec[3].to_string(),
            wsdt: parse_num(&rec[4])?,
            lower_bound: parse_num(&rec[5])?,
            ratio: parse_num(&rec[6])?,
        });
    }
    Ok(rows)
}
