//! Reproduction data for the four experiment figures.
//!
//! Each figure is driven by scenario files in `scenarios/`. The files are
//! compiled into the binary; pass a directory to [`FigureSet::from_dir`] to use
//! edited copies instead.
//!
//! | figure | files | output |
//! |--------|-------|--------|
//! | `fig4` | `fig4.toml` | one trace: OU, n-observation, single-observation and asymptotic curves |
//! | `fig5` | `fig5_gamma_*.toml` | per γ: VoI ratio against window size 1..n at the file's grid time |
//! | `fig6` | `fig6_good.toml`, `fig6_bad.toml` | per γ set: trace plus a bound-side table |
//! | `fig7` | `fig7_kappa_*.toml` | per κ: single-observation trace, plus a summary at t = 21 |

use std::fmt;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rayon::prelude::*;

use crate::error::{Result, VoiError};
use crate::scenario::{Scenario, Units};
use crate::trace::{comment_block, provenance, run_trace, write_csv, VoiTrace};
use crate::voi::BoundSide;

const BUILTIN: &[(&str, &str)] = &[
    ("fig4", include_str!("../scenarios/fig4.toml")),
    ("fig5_gamma_0.1", include_str!("../scenarios/fig5_gamma_0.1.toml")),
    ("fig5_gamma_0.5", include_str!("../scenarios/fig5_gamma_0.5.toml")),
    ("fig5_gamma_1.5", include_str!("../scenarios/fig5_gamma_1.5.toml")),
    ("fig5_gamma_5", include_str!("../scenarios/fig5_gamma_5.toml")),
    ("fig5_gamma_20", include_str!("../scenarios/fig5_gamma_20.toml")),
    ("fig6_good", include_str!("../scenarios/fig6_good.toml")),
    ("fig6_bad", include_str!("../scenarios/fig6_bad.toml")),
    ("fig7_kappa_0.05", include_str!("../scenarios/fig7_kappa_0.05.toml")),
    ("fig7_kappa_0.1", include_str!("../scenarios/fig7_kappa_0.1.toml")),
    ("fig7_kappa_0.15", include_str!("../scenarios/fig7_kappa_0.15.toml")),
    ("fig7_kappa_0.2", include_str!("../scenarios/fig7_kappa_0.2.toml")),
    ("fig7_kappa_0.4", include_str!("../scenarios/fig7_kappa_0.4.toml")),
];

/// Time of the fig7 summary table.
pub const FIG7_SUMMARY_T: f64 = 21.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Figure {
    Fig4,
    Fig5,
    Fig6,
    Fig7,
}

impl Figure {
    pub const ALL: [Figure; 4] = [Figure::Fig4, Figure::Fig5, Figure::Fig6, Figure::Fig7];

    pub fn name(self) -> &'static str {
        match self {
            Figure::Fig4 => "fig4",
            Figure::Fig5 => "fig5",
            Figure::Fig6 => "fig6",
            Figure::Fig7 => "fig7",
        }
    }

    /// Stems of the scenario files behind this figure, in output order.
    pub fn scenario_stems(self) -> Vec<&'static str> {
        let prefix = match self {
            Figure::Fig4 => "fig4",
            Figure::Fig5 => "fig5_",
            Figure::Fig6 => "fig6_",
            Figure::Fig7 => "fig7_",
        };
        BUILTIN
            .iter()
            .map(|(stem, _)| *stem)
            .filter(|stem| stem.starts_with(prefix))
            .collect()
    }
}

impl fmt::Display for Figure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Figure {
    type Err = VoiError;

    fn from_str(s: &str) -> Result<Self> {
        Figure::ALL
            .into_iter()
            .find(|f| f.name() == s)
            .ok_or_else(|| VoiError::UnknownFigure(s.to_string()))
    }
}

/// Where figure scenarios are read from.
#[derive(Debug, Clone, Default)]
pub struct FigureSet {
    dir: Option<PathBuf>,
}

impl FigureSet {
    /// The scenario files shipped with the crate.
    pub fn builtin() -> Self {
        FigureSet { dir: None }
    }

    /// Reads `<stem>.toml` files from `dir`.
    pub fn from_dir(dir: impl Into<PathBuf>) -> Self {
        FigureSet {
            dir: Some(dir.into()),
        }
    }

    pub fn scenario(&self, stem: &str) -> Result<Scenario> {
        match &self.dir {
            Some(dir) => crate::scenario::parse_scenario(dir.join(format!("{stem}.toml"))),
            None => {
                let (_, text) = BUILTIN
                    .iter()
                    .find(|(s, _)| *s == stem)
                    .ok_or_else(|| VoiError::UnknownFigure(stem.to_string()))?;
                Scenario::from_toml_str(text)
            }
        }
    }

    pub fn scenarios(&self, figure: Figure) -> Result<Vec<(&'static str, Scenario)>> {
        figure
            .scenario_stems()
            .into_iter()
            .map(|stem| Ok((stem, self.scenario(stem)?)))
            .collect()
    }
}

/// One curve family of a figure: a scenario and its trace.
#[derive(Debug, Clone)]
pub struct FigureCurve {
    pub stem: &'static str,
    pub scenario: Scenario,
    pub trace: VoiTrace,
}

/// VoI against window size at one instant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WindowPoint {
    pub window: usize,
    pub t: f64,
    pub voi: f64,
    pub voi_ou: f64,
}

impl WindowPoint {
    pub fn ratio(&self) -> f64 {
        self.voi / self.voi_ou
    }
}

/// Evaluates `scenario` at its first grid time for every window size `1..=n`.
pub fn window_sweep(scenario: &Scenario) -> Result<Vec<WindowPoint>> {
    let t = *scenario
        .grid
        .points()
        .first()
        .ok_or_else(|| VoiError::scenario("grid", "needs at least one time"))?;
    (1..=scenario.schedule.len())
        .into_par_iter()
        .map(|window| {
            let mut s = scenario.clone();
            s.window = Some(window);
            let row = crate::trace::evaluate_point(&s, t)?;
            Ok(WindowPoint {
                window,
                t,
                voi: row.voi,
                voi_ou: row.voi_ou,
            })
        })
        .collect()
}

/// Runs every scenario of a figure. fig5 scenarios are evaluated as given
/// (without the window sweep); use [`window_sweep`] for those.
pub fn figure_traces(figure: Figure, set: &FigureSet) -> Result<Vec<FigureCurve>> {
    set.scenarios(figure)?
        .into_par_iter()
        .map(|(stem, scenario)| {
            let trace = run_trace(&scenario)?;
            Ok(FigureCurve {
                stem,
                scenario,
                trace,
            })
        })
        .collect()
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    let mut f = std::fs::File::create(path)
        .map_err(|e| VoiError::Io(format!("{}: {e}", path.display())))?;
    f.write_all(text.as_bytes())?;
    Ok(())
}

fn header(scenario: &Scenario) -> String {
    comment_block(&provenance(scenario, Units::Nats))
}

fn write_trace(dir: &Path, curve: &FigureCurve) -> Result<PathBuf> {
    let path = dir.join(format!("{}.csv", curve.stem));
    let units = curve.scenario.units;
    let mut buf = Vec::new();
    write_csv(&curve.trace, units, &provenance(&curve.scenario, units), &mut buf)?;
    write_file(&path, &String::from_utf8_lossy(&buf))?;
    Ok(path)
}

fn side_name(side: BoundSide) -> &'static str {
    match side {
        BoundSide::Latent => "latent",
        BoundSide::Channel => "channel",
    }
}

/// Table of both bound terms and the side attaining the minimum.
pub fn bound_table(curve: &FigureCurve) -> String {
    let mut text = header(&curve.scenario);
    text.push_str("t,voi,bound_latent,bound_channel,bound_general,active,gap\n");
    for r in &curve.trace.rows {
        if r.n_used == 0 {
            continue;
        }
        let terms = r.bound_terms;
        text.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            r.t,
            r.voi,
            terms.latent,
            terms.channel,
            r.bound_general,
            side_name(terms.active()),
            r.bound_general - r.voi
        ));
    }
    text
}

/// Writes the CSV files of `figure` into `out_dir` (created if missing) and
/// returns their paths.
pub fn reproduce_figure(figure: Figure, set: &FigureSet, out_dir: &Path) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(out_dir)
        .map_err(|e| VoiError::Io(format!("{}: {e}", out_dir.display())))?;
    let mut written = Vec::new();
    match figure {
        Figure::Fig4 | Figure::Fig6 => {
            for curve in figure_traces(figure, set)? {
                written.push(write_trace(out_dir, &curve)?);
                if figure == Figure::Fig6 {
                    let path = out_dir.join(format!("{}_bounds.csv", curve.stem));
                    write_file(&path, &bound_table(&curve))?;
                    written.push(path);
                }
            }
        }
        Figure::Fig5 => {
            for (stem, scenario) in set.scenarios(figure)? {
                let mut text = header(&scenario);
                text.push_str("window,t,voi,voi_ou,ratio\n");
                for p in window_sweep(&scenario)? {
                    text.push_str(&format!(
                        "{},{},{},{},{}\n",
                        p.window,
                        p.t,
                        p.voi,
                        p.voi_ou,
                        p.ratio()
                    ));
                }
                let path = out_dir.join(format!("{stem}.csv"));
                write_file(&path, &text)?;
                written.push(path);
            }
        }
        Figure::Fig7 => {
            let curves = figure_traces(figure, set)?;
            let mut summary = String::from("kappa,t,voi_single,voi_ou\n");
            for curve in &curves {
                written.push(write_trace(out_dir, curve)?);
                let mut at = curve.scenario.clone();
                at.grid = crate::scenario::Grid::Explicit(vec![FIG7_SUMMARY_T]);
                let row = crate::trace::evaluate_point(&at, FIG7_SUMMARY_T)?;
                summary.push_str(&format!(
                    "{},{},{},{}\n",
                    curve.scenario.params.kappa(),
                    FIG7_SUMMARY_T,
                    row.voi,
                    row.voi_ou
                ));
            }
            let path = out_dir.join("fig7_summary.csv");
            write_file(&path, &summary)?;
            written.push(path);
        }
    }
    Ok(written)
}
