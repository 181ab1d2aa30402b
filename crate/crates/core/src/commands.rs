//! Subcommand pipelines: each turns a normalized configuration into a CSV
//! document. Writing files and process exit codes live in the binary.

use std::path::Path;

use crate::config::{Normalized, RunConfig};
use crate::dressed_hamiltonian::BuildOptions;
use crate::dressing_solver::{double_well_metrics, potential_curve, rwa_curve, track_levels, Label};
use crate::error::{Error, Result};
use crate::fitting::{fit_model, format_branch_tag, parse_branch_tag, FitResult, ResonanceDataset, ResonanceDatum};
use crate::output::{fmt12, Csv};
use crate::selftest::{self, SuiteReport};
use crate::spectroscopy::{scan_resonances, TransitionLine};
use crate::spin_algebra::HalfInt;

pub const DATASET_HEADER: [&str; 4] = ["I_RF_mA", "nu_kHz", "sigma_kHz", "branch"];

/// Command-line overrides applied before hashing, so the recorded hash
/// describes the configuration actually run.
#[derive(Clone, Copy, Debug, Default)]
pub struct Overrides {
    pub dn_max: Option<i32>,
    pub weight_floor: Option<f64>,
}

pub fn load_config(path: Option<&Path>, preset: Option<&str>, overrides: Overrides) -> Result<Normalized> {
    let raw = match (path, preset) {
        (Some(p), None) => {
            let text = std::fs::read_to_string(p).map_err(|e| Error::Io(format!("{}: {e}", p.display())))?;
            RunConfig::from_json(&text)?
        }
        (None, Some(name)) => RunConfig::preset(name)?,
        (None, None) => return Err(Error::InvalidConfig("one of --config or --preset is required".into())),
        (Some(_), Some(_)) => return Err(Error::InvalidConfig("--config and --preset are exclusive".into())),
    };
    let mut n = raw.normalize()?;
    if let Some(k) = overrides.dn_max {
        n.solver.dn_max = k;
    }
    if let Some(f) = overrides.weight_floor {
        n.solver.weight_floor = f;
    }
    n.validate()?;
    Ok(n)
}

fn khz(hz: f64) -> String {
    fmt12(hz * 1e-3)
}

fn um(m: f64) -> String {
    fmt12(m * 1e6)
}

fn half(x: HalfInt) -> String {
    fmt12(x.value())
}

/// Full and RWA potentials along the configured line for each requested
/// m̃, each relative to its own minimum, with a double-well metrics footer.
pub fn run_potential(cfg: &Normalized) -> Result<Csv> {
    let spec = cfg.potential.as_ref().ok_or_else(|| Error::InvalidConfig("config has no potential section".into()))?;
    let setup = cfg.setup()?;
    let grid = spec.line.build()?;
    let mut header = vec!["position_um".to_string()];
    let mut curves = Vec::new();
    for &m in &spec.m_tilde {
        let label = Label::from_f64(m, spec.kappa)?;
        let full = potential_curve(&setup, &grid, label)?;
        let rwa = rwa_curve(&setup, &grid, label)?;
        header.push(format!("V_full_kHz_m{}", fmt12(m)));
        header.push(format!("V_rwa_kHz_m{}", fmt12(m)));
        curves.push((label, full, rwa));
    }
    let mut csv = Csv::with_header(&cfg.hash(), header);
    csv.comment(format!("kappa={}", fmt12(spec.kappa)));
    let relative: Vec<(Vec<f64>, Vec<f64>)> = curves.iter().map(|(_, f, r)| (f.relative(), r.relative())).collect();
    for (i, &s) in grid.coords.iter().enumerate() {
        let mut row = vec![um(s)];
        for (f, r) in &relative {
            row.push(khz(f[i]));
            row.push(khz(r[i]));
        }
        csv.row(row);
    }
    csv.footer("metrics");
    csv.footer("m_tilde,splitting_um,splitting_rwa_um,barrier_full_kHz,barrier_rwa_kHz,status");
    for (label, full, rwa) in &curves {
        let line = match (double_well_metrics(full), double_well_metrics(rwa)) {
            (Ok(a), Ok(b)) => {
                format!("{},{},{},{},{},ok", half(label.m_tilde), um(a.splitting), um(b.splitting), khz(a.barrier), khz(b.barrier))
            }
            (a, b) => {
                let status = a.err().or(b.err()).map(|e| e.kind()).unwrap_or("error");
                format!("{},nan,nan,nan,nan,{status}", half(label.m_tilde))
            }
        };
        csv.footer(line);
    }
    Ok(csv)
}

/// Every labeled level of the requested κ-manifolds along the line.
pub fn run_levels(cfg: &Normalized) -> Result<Csv> {
    let spec = cfg.levels.as_ref().ok_or_else(|| Error::InvalidConfig("config has no levels section".into()))?;
    let setup = cfg.setup()?;
    let grid = spec.line.build()?;
    let mut labels = Vec::new();
    for &k in &spec.kappas {
        let kappa = HalfInt::from_f64(k).ok_or_else(|| Error::InvalidConfig(format!("bad κ {k}")))?;
        for m in setup.atom.spin.m_values() {
            labels.push(Label::new(m, kappa));
        }
    }
    let tracked = track_levels(&setup, &grid, &labels)?;
    let mut csv = Csv::new(&cfg.hash(), &["position_um", "kappa", "m_tilde", "energy_kHz"]);
    for (i, &s) in grid.coords.iter().enumerate() {
        for (b, label) in tracked.labels.iter().enumerate() {
            csv.row(vec![um(s), half(label.kappa), half(label.m_tilde), khz(tracked.energies[b][i])]);
        }
    }
    Ok(csv)
}

fn line_row(current: f64, model: &str, line: &TransitionLine, max_weight: f64, shift: Option<f64>) -> Vec<String> {
    vec![
        fmt12(current * 1e3),
        model.into(),
        khz(line.frequency),
        fmt12(if max_weight > 0.0 { line.weight / max_weight } else { 0.0 }),
        line.order.to_string(),
        line.branch.symbol().into(),
        half(line.to.m_tilde),
        half(line.to.kappa),
        shift.map(khz).unwrap_or_default(),
        "ok".into(),
    ]
}

/// Resonance map over the configured RF currents. Lines are evaluated at
/// each model's trapped-state minimum; failures become status rows.
pub fn run_scan(cfg: &Normalized) -> Result<Csv> {
    let spec = cfg.scan_spec()?;
    let setup = cfg.setup()?;
    let header = [
        "I_RF_mA",
        "model",
        "frequency_kHz",
        "weight",
        "n",
        "branch",
        "to_m_tilde",
        "to_kappa",
        "bs_shift_kHz",
        "status",
    ];
    let mut csv = Csv::new(&cfg.hash(), &header);
    csv.comment(format!("weight_floor={}", fmt12(spec.weight_floor)));
    csv.comment(format!("window_kHz={},{}", khz(spec.window.0), khz(spec.window.1)));
    if spec.currents.is_empty() {
        return Ok(csv);
    }
    let map = scan_resonances(&setup, &spec)?;
    for p in &map.points {
        match &p.outcome {
            Ok(r) => {
                let max = r.lines.iter().map(|l| l.weight).fold(0.0, f64::max);
                for l in &r.lines {
                    let shift = r.shifts.iter().find(|s| s.to == l.to && s.from == l.from).map(|s| s.shift);
                    csv.row(line_row(p.current, "full", l, max, shift));
                }
                let max = r.rwa_lines.iter().map(|l| l.weight).fold(0.0, f64::max);
                for l in &r.rwa_lines {
                    csv.row(line_row(p.current, "rwa", l, max, None));
                }
            }
            Err(e) => {
                let mut row = vec![fmt12(p.current * 1e3)];
                row.extend(std::iter::repeat(String::new()).take(8));
                row.push(format!("error:{}", e.kind()));
                csv.row(row);
            }
        }
    }
    Ok(csv)
}

/// Parses a dataset CSV (`#` comments allowed). Errors name the 1-based
/// data row and the column.
pub fn read_dataset(text: &str) -> Result<ResonanceDataset> {
    let mut reader = csv::ReaderBuilder::new().comment(Some(b'#')).trim(csv::Trim::All).from_reader(text.as_bytes());
    let headers = reader
        .headers()
        .map_err(|e| Error::Parse { row: 0, column: String::new(), message: e.to_string() })?
        .clone();
    let index = |name: &str| headers.iter().position(|h| h == name);
    let mut cols = [0usize; 3];
    for (k, name) in DATASET_HEADER[..3].iter().enumerate() {
        cols[k] = index(name).ok_or_else(|| Error::Parse {
            row: 0,
            column: name.to_string(),
            message: "missing column".into(),
        })?;
    }
    let branch_col = index("branch");
    let mut rows = Vec::new();
    for (r, record) in reader.records().enumerate() {
        let row = r + 1;
        let record = record.map_err(|e| Error::Parse { row, column: String::new(), message: e.to_string() })?;
        let number = |k: usize| -> Result<f64> {
            let name = DATASET_HEADER[k];
            let cell = record.get(cols[k]).unwrap_or("");
            cell.parse::<f64>().ok().filter(|v| v.is_finite()).ok_or_else(|| Error::Parse {
                row,
                column: name.to_string(),
                message: format!("not a finite number: {cell:?}"),
            })
        };
        let (current, nu, sigma) = (number(0)?, number(1)?, number(2)?);
        let branch = match branch_col {
            Some(c) => {
                let cell = record.get(c).unwrap_or("");
                parse_branch_tag(cell).ok_or_else(|| Error::Parse {
                    row,
                    column: "branch".into(),
                    message: format!("bad branch tag {cell:?} (expected e.g. 2+ or 1-)"),
                })?
            }
            None => None,
        };
        if !(sigma > 0.0) {
            return Err(Error::Parse { row, column: "sigma_kHz".into(), message: "must be positive".into() });
        }
        rows.push(ResonanceDatum { current: current * 1e-3, frequency: nu * 1e3, sigma: sigma * 1e3, branch });
    }
    ResonanceDataset::new(rows)
}

pub fn write_dataset(data: &ResonanceDataset, config_hash: &str) -> Csv {
    let mut csv = Csv::new(config_hash, &DATASET_HEADER);
    for d in &data.rows {
        csv.row(vec![fmt12(d.current * 1e3), khz(d.frequency), khz(d.sigma), format_branch_tag(d.branch)]);
    }
    csv
}

/// Fits the configured model to `data`. The report is returned even when
/// the fit did not converge; the caller maps that to a failure exit.
pub fn run_fit(cfg: &Normalized, data: &ResonanceDataset) -> Result<(Csv, FitResult)> {
    let (problem, options, initial) = cfg.fit_problem()?;
    let result = fit_model(&problem, data, &initial, &options)?;
    let header = [
        "I_RF_mA",
        "nu_kHz",
        "sigma_kHz",
        "branch",
        "model_kHz",
        "residual_kHz",
        "assigned",
        "flagged",
    ];
    let mut csv = Csv::new(&cfg.hash(), &header);
    let fit = cfg.fit.as_ref().expect("fit_problem checked the section");
    csv.comment(format!(
        "model={} scales={}",
        match fit.model {
            crate::config::FitModelKind::Rwa => "rwa",
            crate::config::FitModelKind::Full => "full",
        },
        match fit.scales {
            crate::config::FitScalesKind::Common => "common",
            crate::config::FitScalesKind::PerWire => "per_wire",
        }
    ));
    let params: Vec<String> = result.params.iter().map(|&p| fmt12(p)).collect();
    csv.comment(format!("params={}", params.join(";")));
    csv.comment(format!("rss={}", fmt12(result.rss)));
    csv.comment(format!("converged={} iterations={}", result.converged, result.iterations));
    let max_residual = result.residuals.iter().map(|r| r.abs()).fold(0.0, f64::max);
    csv.comment(format!("max_abs_residual_kHz={}", khz(max_residual)));
    for (i, d) in data.rows.iter().enumerate() {
        csv.row(vec![
            fmt12(d.current * 1e3),
            khz(d.frequency),
            khz(d.sigma),
            format_branch_tag(d.branch),
            khz(d.frequency + result.residuals[i]),
            khz(result.residuals[i]),
            format_branch_tag(Some(result.assigned[i])),
            result.flagged.contains(&i).to_string(),
        ]);
    }
    Ok((csv, result))
}

/// Options of the self-test run.
#[derive(Clone, Copy, Debug)]
pub struct SelftestOptions {
    /// Randomized cases per suite; 0 runs nothing.
    pub cases: usize,
    pub seed: u64,
    /// Mutation check: build with the counter-rotating block flipped.
    pub flip_counter_rotating: bool,
}

/// Oracle-equivalence and invariant suites. Deterministic suites run at a
/// fixed size unless `cases` is 0.
pub fn run_selftest(cfg: Option<&Normalized>, options: SelftestOptions) -> Result<Vec<SuiteReport>> {
    let n = options.cases;
    let build = BuildOptions { flip_counter_rotating: options.flip_counter_rotating };
    let mut reports = vec![
        selftest::oracle_equivalence(n, options.seed, build),
        selftest::rwa_exactness(n, options.seed),
        selftest::selection_rule(n, options.seed),
    ];
    if n == 0 {
        reports.push(selftest::bloch_siegert_two_level(0));
        return Ok(reports);
    }
    reports.push(selftest::bloch_siegert_two_level(5));
    let presets: Vec<Normalized> = match cfg {
        Some(c) => vec![c.clone()],
        None => crate::config::PRESETS
            .iter()
            .map(|(name, _)| RunConfig::preset(name).and_then(|r| r.normalize()))
            .collect::<Result<_>>()?,
    };
    reports.push(selftest::rwa_limit_scaling(&presets[0], 6));
    for p in &presets {
        reports.push(selftest::truncation_convergence(p));
    }
    Ok(reports)
}
