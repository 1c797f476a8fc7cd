//! Evaluating a scenario over its time grid and writing the result as CSV.

use std::io::Write;

use rayon::prelude::*;

use crate::aoi::aoi_at;
use crate::error::{Result, VoiError};
use crate::scenario::{Mode, Scenario, Units};
use crate::voi::{
    bound_general, bound_single, voi_closed, voi_direct, voi_markov, voi_single,
    voi_single_asymptotic, BoundTerms, VoiPoint,
};

/// CSV header, in column order.
pub const CSV_COLUMNS: [&str; 9] = [
    "t",
    "voi",
    "voi_ou",
    "voi_single",
    "voi_asymptotic",
    "bound_general",
    "bound_single",
    "aoi",
    "n_used",
];

/// Relative agreement demanded between the closed form and the log-det route.
pub const DUAL_PATH_REL_TOL: f64 = 1e-9;
/// Absolute floor for the dual-path comparison when the VoI itself is ~0.
pub const DUAL_PATH_ABS_FLOOR: f64 = 1e-12;

/// One grid point. Quantities are in nats; `None` marks an absent value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceRow {
    pub t: f64,
    pub voi: f64,
    pub voi_ou: f64,
    pub voi_single: Option<f64>,
    pub voi_asymptotic: Option<f64>,
    pub bound_general: f64,
    pub bound_single: Option<f64>,
    pub aoi: Option<f64>,
    pub n_used: usize,
    /// Both sides of the general bound (not part of the CSV).
    pub bound_terms: BoundTerms,
    /// The closed-form value when it was admissible (not part of the CSV).
    pub voi_closed: Option<f64>,
}

impl TraceRow {
    pub fn point(&self) -> VoiPoint {
        VoiPoint {
            t: self.t,
            voi: self.voi,
            voi_ou: self.voi_ou,
            bound_general: self.bound_general,
            bound_single: self.bound_single,
            n_used: self.n_used,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct VoiTrace {
    pub rows: Vec<TraceRow>,
}

/// Evaluates every VoI quantity at one instant.
pub fn evaluate_point(scenario: &Scenario, t: f64) -> Result<TraceRow> {
    let params = &scenario.params;
    let range = scenario.observations_at(t);
    let n_used = range.len();
    let aoi = aoi_at(&scenario.schedule, t).ok();
    if n_used == 0 {
        return Ok(TraceRow {
            t,
            voi: 0.0,
            voi_ou: 0.0,
            voi_single: None,
            voi_asymptotic: None,
            bound_general: 0.0,
            bound_single: None,
            aoi,
            n_used,
            bound_terms: BoundTerms {
                latent: 0.0,
                channel: 0.0,
            },
            voi_closed: None,
        });
    }
    let last = range.end - 1;
    let schedule = scenario.schedule.slice(range.clone());
    let noise = scenario.noise.slice(range);

    let voi = voi_direct(params, &schedule, &noise, t)?;
    let closed = if noise.variances(params, &schedule)?.iter().all(|&v| v > 0.0) {
        let c = voi_closed(params, &schedule, &noise, t)?;
        if (c - voi).abs() > DUAL_PATH_REL_TOL * voi.abs() + DUAL_PATH_ABS_FLOOR {
            return Err(VoiError::DualPathMismatch {
                t,
                closed: c,
                direct: voi,
            });
        }
        Some(c)
    } else {
        None
    };

    let t_n = scenario.schedule.sample_times()[last];
    let gamma = scenario.noise.gammas(params, &scenario.schedule)?[last];
    let terms = bound_general(params, &schedule, &noise, t)?;
    let single_scope = scenario.mode == Mode::SingleObservation || n_used == 1;
    let row = TraceRow {
        t,
        voi,
        voi_ou: voi_markov(params, t_n, t)?,
        voi_single: Some(voi_single(params, t_n, gamma, t)?),
        voi_asymptotic: Some(voi_single_asymptotic(params, t - t_n, gamma)?),
        bound_general: terms.value(),
        bound_single: if single_scope {
            Some(bound_single(params, t_n, gamma, t)?)
        } else {
            None
        },
        aoi,
        n_used,
        bound_terms: terms,
        voi_closed: closed,
    };
    row.point().validate()?;
    Ok(row)
}

/// Evaluates the scenario at every grid point. Points are independent and
/// evaluated in parallel; rows come back in grid order.
pub fn run_trace(scenario: &Scenario) -> Result<VoiTrace> {
    let rows = scenario
        .grid
        .points()
        .par_iter()
        .enumerate()
        .map(|(index, &t)| {
            evaluate_point(scenario, t).map_err(|e| VoiError::AtGridPoint {
                index,
                t,
                source: Box::new(e),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(VoiTrace { rows })
}

fn field(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// Writes `# `-prefixed provenance lines, the header and one line per row.
/// Rows are re-validated first; nothing is written if one fails.
pub fn write_csv<W: Write>(
    trace: &VoiTrace,
    units: Units,
    provenance: &[String],
    mut out: W,
) -> Result<()> {
    for (i, row) in trace.rows.iter().enumerate() {
        row.point().validate().map_err(|e| VoiError::AtGridPoint {
            index: i,
            t: row.t,
            source: Box::new(e),
        })?;
        if i > 0 && row.t < trace.rows[i - 1].t {
            return Err(VoiError::domain("trace rows are not sorted by t"));
        }
    }
    let mut text = comment_block(provenance);
    text.push_str(&CSV_COLUMNS.join(","));
    text.push('\n');
    let u = |x: f64| units.convert(x);
    for r in &trace.rows {
        let cells = [
            r.t.to_string(),
            u(r.voi).to_string(),
            u(r.voi_ou).to_string(),
            field(r.voi_single.map(u)),
            field(r.voi_asymptotic.map(u)),
            u(r.bound_general).to_string(),
            field(r.bound_single.map(u)),
            field(r.aoi),
            r.n_used.to_string(),
        ];
        text.push_str(&cells.join(","));
        text.push('\n');
    }
    out.write_all(text.as_bytes())?;
    Ok(())
}

/// Prefixes every line with `#`.
pub fn comment_block(lines: &[String]) -> String {
    let mut text = String::new();
    for l in lines.iter().flat_map(|line| line.lines()) {
        text.push('#');
        if !l.is_empty() {
            text.push(' ');
            text.push_str(l);
        }
        text.push('\n');
    }
    text
}

/// Provenance lines for a trace produced from `scenario`.
pub fn provenance(scenario: &Scenario, units: Units) -> Vec<String> {
    vec![
        format!("latent-voi {}", env!("CARGO_PKG_VERSION")),
        format!("units: {}", match units {
            Units::Nats => "nats",
            Units::Bits => "bits",
        }),
        "scenario:".to_string(),
        scenario.to_toml_string(),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scenario(extra: &str, noise: &str) -> Scenario {
        let text = format!(
            r#"
            {extra}
            [params]
            kappa = 0.15
            sigma = 10.0
            [schedule]
            sample_times = [1.0, 3.0, 5.0, 7.0, 9.0, 11.0, 13.0, 15.0, 17.0, 19.0]
            receive_times = [2.0, 4.2, 6.5, 8.0, 10.7, 12.1, 14.7, 16.2, 18.3, 20.5]
            [noise]
            {noise}
            [grid]
            start = 1.0
            stop = 21.5
            step = 0.05
            "#
        );
        Scenario::from_toml_str(&text).unwrap()
    }

    #[test]
    fn pre_reception_rows_are_zero_with_empty_fields() {
        let s = scenario("", "gamma = 1.5");
        let trace = run_trace(&s).unwrap();
        let first = trace.rows[0];
        assert_eq!(first.t, 1.0);
        assert_eq!((first.voi, first.n_used), (0.0, 0));
        assert!(first.aoi.is_none() && first.voi_single.is_none());
        let mut buf = Vec::new();
        write_csv(&trace, Units::Nats, &[], &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), CSV_COLUMNS.join(","));
        assert_eq!(lines.next().unwrap(), "1,0,0,,,0,,,0");
    }

    #[test]
    fn single_observation_spot_value() {
        let mut s = scenario("mode = \"single-observation\"", "gamma = 1.5");
        s.grid = crate::scenario::Grid::Explicit(vec![21.0]);
        let row = run_trace(&s).unwrap().rows[0];
        assert!((row.voi - 0.199_335_834_568_563_52).abs() < 1e-12);
        assert!((row.voi_single.unwrap() - row.voi).abs() < 1e-12);
        assert_eq!(row.aoi, Some(2.0));
        assert_eq!(row.n_used, 1);
        assert!(row.bound_single.is_some());
    }

    #[test]
    fn noiseless_uses_direct_path_only() {
        let s = scenario("", "gamma = inf");
        let trace = run_trace(&s).unwrap();
        let row = trace.rows.last().unwrap();
        assert!(row.voi_closed.is_none());
        assert!((row.voi - row.voi_ou).abs() < 1e-12);
    }

    #[test]
    fn bits_divide_by_ln2() {
        let mut s = scenario("", "gamma = 1.5");
        s.grid = crate::scenario::Grid::Explicit(vec![21.0]);
        let trace = run_trace(&s).unwrap();
        let mut nats = Vec::new();
        let mut bits = Vec::new();
        write_csv(&trace, Units::Nats, &[], &mut nats).unwrap();
        write_csv(&trace, Units::Bits, &[], &mut bits).unwrap();
        let col = |b: &[u8]| -> f64 {
            String::from_utf8(b.to_vec()).unwrap().lines().nth(1).unwrap().split(',').nth(1).unwrap().parse().unwrap()
        };
        assert!((col(&bits) - col(&nats) / std::f64::consts::LN_2).abs() < 1e-15);
    }

    #[test]
    fn writer_rejects_invalid_rows() {
        let s = scenario("", "gamma = 1.5");
        let mut trace = run_trace(&s).unwrap();
        let last = trace.rows.len() - 1;
        trace.rows[last].voi = trace.rows[last].voi_ou + 1.0;
        assert!(write_csv(&trace, Units::Nats, &[], Vec::new()).is_err());
    }
}
