//! Run configuration. Files use lab units (gauss, micrometre, kilohertz,
//! milliampere, degrees); [`RunConfig::normalize`] converts them once to SI
//! and Hz, and everything downstream sees only [`Normalized`].

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::f64::consts::PI;

use crate::constants::AMU;
use crate::dressing_solver::{DressingSetup, Label, LabelOptions, LineGrid};
use crate::error::{Error, Result};
use crate::fitting::{FitOptions, FitProblem, FreeScales};
use crate::local_frame::Atom;
use crate::magnetostatics::{
    BiasField, CVec3, FieldModel, IoffeTrapModel, RfSource, SpectroscopySource, StaticModel, Vec3, WireRole, WireSpec,
};
use crate::spectroscopy::{LineModel, ScanSpec};
use num_complex::Complex64 as C64;

const GAUSS: f64 = 1e-4;
const UM: f64 = 1e-6;
const KHZ: f64 = 1e3;
const MA: f64 = 1e-3;
const DEG: f64 = PI / 180.0;

pub const PRESETS: [(&str, &str); 2] = [
    ("paper_fig1b", include_str!("../presets/paper_fig1b.json")),
    ("paper_fig4", include_str!("../presets/paper_fig4.json")),
];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub atom: AtomConfig,
    #[serde(rename = "static")]
    pub static_field: StaticConfig,
    pub rf: RfConfig,
    pub spectroscopy: SpectroscopyConfig,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub potential: Option<PotentialConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub levels: Option<LevelsConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scan: Option<ScanConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fit: Option<FitConfig>,
    #[serde(default = "default_output_dir")]
    pub output_dir: String,
}

fn default_output_dir() -> String {
    "out".into()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AtomConfig {
    pub f: f64,
    pub g_f: f64,
    pub mass_amu: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum StaticConfig {
    Ioffe {
        larmor_khz: f64,
        trap_frequency_perp_khz: f64,
        trap_frequency_axial_khz: f64,
        center_um: [f64; 3],
        ioffe_axis: [f64; 3],
        quadrupole_axis: [f64; 3],
    },
    Wires {
        wires: Vec<WireConfig>,
        #[serde(default)]
        bias_gauss: [f64; 3],
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WireConfig {
    pub position_um: [f64; 3],
    pub axis: [f64; 3],
    #[serde(default)]
    pub width_um: f64,
    #[serde(default = "default_normal")]
    pub plane_normal: [f64; 3],
    #[serde(default)]
    pub current_ma: f64,
    #[serde(default)]
    pub phase_deg: f64,
}

fn default_normal() -> [f64; 3] {
    [0.0, 1.0, 0.0]
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RfConfig {
    pub wire_a: WireConfig,
    pub wire_b: WireConfig,
    pub current_a_ma: f64,
    pub current_b_ma: f64,
    pub phase_deg: f64,
    pub frequency_khz: f64,
    #[serde(default = "one")]
    pub scale_a: f64,
    #[serde(default = "one")]
    pub scale_b: f64,
}

fn one() -> f64 {
    1.0
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SpectroscopyConfig {
    Wire { wire: WireConfig },
    /// Complex phasor components as `[re, im]` pairs.
    Vector { gauss: [[f64; 2]; 3] },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverConfig {
    #[serde(default = "default_dn_max")]
    pub dn_max: i32,
    #[serde(default = "default_floor")]
    pub weight_floor: f64,
    #[serde(default = "default_label_steps")]
    pub label_steps: usize,
    #[serde(default = "default_label_max_steps")]
    pub label_max_steps: usize,
}

fn default_dn_max() -> i32 {
    crate::dressed_hamiltonian::DEFAULT_DN_MAX
}
fn default_floor() -> f64 {
    crate::spectroscopy::DEFAULT_WEIGHT_FLOOR
}
fn default_label_steps() -> usize {
    LabelOptions::default().n_steps
}
fn default_label_max_steps() -> usize {
    LabelOptions::default().max_steps
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            dn_max: default_dn_max(),
            weight_floor: default_floor(),
            label_steps: default_label_steps(),
            label_max_steps: default_label_max_steps(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LineConfig {
    pub origin_um: [f64; 3],
    pub direction: [f64; 3],
    pub start_um: f64,
    pub stop_um: f64,
    pub points: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PotentialConfig {
    pub line: LineConfig,
    /// Effective quantum numbers to emit; defaults to m̃ = F.
    #[serde(default)]
    pub m_tilde: Vec<f64>,
    #[serde(default)]
    pub kappa: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LevelsConfig {
    pub line: LineConfig,
    pub kappas: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScanConfig {
    pub currents_ma: Vec<f64>,
    pub window_khz: [f64; 2],
    pub search: LineConfig,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FitModelKind {
    Rwa,
    Full,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FitScalesKind {
    Common,
    PerWire,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FitConfig {
    pub model: FitModelKind,
    pub scales: FitScalesKind,
    pub initial: Vec<f64>,
    pub search: LineConfig,
    #[serde(default = "default_fit_window")]
    pub window_khz: [f64; 2],
}

fn default_fit_window() -> [f64; 2] {
    [0.0, 1e9]
}

// Normalized form: SI lengths, tesla, amperes, radians, Hz.

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Normalized {
    pub atom: NAtom,
    pub static_field: NStatic,
    pub rf: NRf,
    pub spectroscopy: NSpectroscopy,
    pub solver: SolverConfig,
    pub potential: Option<NPotential>,
    pub levels: Option<NLevels>,
    pub scan: Option<NScan>,
    pub fit: Option<NFit>,
    pub output_dir: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NAtom {
    pub f: f64,
    pub g_f: f64,
    pub mass_kg: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum NStatic {
    Ioffe {
        larmor_hz: f64,
        omega_perp: f64,
        omega_axial: f64,
        center: [f64; 3],
        ioffe_axis: [f64; 3],
        quadrupole_axis: [f64; 3],
    },
    Wires {
        wires: Vec<NWire>,
        bias: [f64; 3],
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NWire {
    pub position: [f64; 3],
    pub axis: [f64; 3],
    pub width: f64,
    pub plane_normal: [f64; 3],
    pub current: f64,
    pub phase: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NRf {
    pub wire_a: NWire,
    pub wire_b: NWire,
    pub phase: f64,
    pub frequency: f64,
    pub scale_a: f64,
    pub scale_b: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum NSpectroscopy {
    Wire { wire: NWire },
    Vector { tesla: [[f64; 2]; 3] },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NLine {
    pub origin: [f64; 3],
    pub direction: [f64; 3],
    pub start: f64,
    pub stop: f64,
    pub points: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NPotential {
    pub line: NLine,
    pub m_tilde: Vec<f64>,
    pub kappa: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NLevels {
    pub line: NLine,
    pub kappas: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NScan {
    pub currents: Vec<f64>,
    pub window: [f64; 2],
    pub search: NLine,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NFit {
    pub model: FitModelKind,
    pub scales: FitScalesKind,
    pub initial: Vec<f64>,
    pub search: NLine,
    pub window: [f64; 2],
}

fn scaled(v: [f64; 3], k: f64) -> [f64; 3] {
    [v[0] * k, v[1] * k, v[2] * k]
}

fn finite(name: &str, xs: &[f64]) -> Result<()> {
    if xs.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(Error::InvalidConfig(format!("{name} must be finite")))
    }
}

impl WireConfig {
    fn normalize(&self, name: &str) -> Result<NWire> {
        finite(name, &[self.width_um, self.current_ma, self.phase_deg])?;
        finite(name, &self.position_um)?;
        finite(name, &self.axis)?;
        if self.width_um < 0.0 {
            return Err(Error::InvalidConfig(format!("{name}: width_um must be ≥ 0")));
        }
        Ok(NWire {
            position: scaled(self.position_um, UM),
            axis: self.axis,
            width: self.width_um * UM,
            plane_normal: self.plane_normal,
            current: self.current_ma * MA,
            phase: self.phase_deg * DEG,
        })
    }
}

impl LineConfig {
    fn normalize(&self, name: &str) -> Result<NLine> {
        finite(name, &[self.start_um, self.stop_um])?;
        finite(name, &self.origin_um)?;
        if self.points < 2 || !(self.stop_um > self.start_um) {
            return Err(Error::InvalidConfig(format!("{name}: need points ≥ 2 and stop_um > start_um")));
        }
        Ok(NLine {
            origin: scaled(self.origin_um, UM),
            direction: self.direction,
            start: self.start_um * UM,
            stop: self.stop_um * UM,
            points: self.points,
        })
    }
}

fn window(name: &str, w: [f64; 2]) -> Result<[f64; 2]> {
    if !(w[0] >= 0.0 && w[1] > w[0]) {
        return Err(Error::InvalidConfig(format!("{name}: window must satisfy 0 ≤ lo < hi")));
    }
    Ok([w[0] * KHZ, w[1] * KHZ])
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::InvalidConfig(e.to_string()))
    }

    pub fn preset(name: &str) -> Result<Self> {
        let (_, text) = PRESETS
            .iter()
            .find(|(n, _)| *n == name)
            .ok_or_else(|| Error::InvalidConfig(format!("unknown preset `{name}`")))?;
        Self::from_json(text)
    }

    pub fn normalize(&self) -> Result<Normalized> {
        let a = &self.atom;
        finite("atom", &[a.f, a.g_f, a.mass_amu])?;
        let static_field = match &self.static_field {
            StaticConfig::Ioffe {
                larmor_khz,
                trap_frequency_perp_khz,
                trap_frequency_axial_khz,
                center_um,
                ioffe_axis,
                quadrupole_axis,
            } => {
                finite("static", &[*larmor_khz, *trap_frequency_perp_khz, *trap_frequency_axial_khz])?;
                NStatic::Ioffe {
                    larmor_hz: larmor_khz * KHZ,
                    omega_perp: 2.0 * PI * trap_frequency_perp_khz * KHZ,
                    omega_axial: 2.0 * PI * trap_frequency_axial_khz * KHZ,
                    center: scaled(*center_um, UM),
                    ioffe_axis: *ioffe_axis,
                    quadrupole_axis: *quadrupole_axis,
                }
            }
            StaticConfig::Wires { wires, bias_gauss } => NStatic::Wires {
                wires: wires.iter().map(|w| w.normalize("static wire")).collect::<Result<_>>()?,
                bias: scaled(*bias_gauss, GAUSS),
            },
        };
        let r = &self.rf;
        finite("rf", &[r.current_a_ma, r.current_b_ma, r.phase_deg, r.frequency_khz, r.scale_a, r.scale_b])?;
        if !(r.frequency_khz > 0.0) {
            return Err(Error::InvalidConfig("rf.frequency_khz must be positive".into()));
        }
        let mut wire_a = r.wire_a.normalize("rf.wire_a")?;
        let mut wire_b = r.wire_b.normalize("rf.wire_b")?;
        wire_a.current = r.current_a_ma * MA;
        wire_b.current = r.current_b_ma * MA;
        let rf = NRf {
            wire_a,
            wire_b,
            phase: r.phase_deg * DEG,
            frequency: r.frequency_khz * KHZ,
            scale_a: r.scale_a,
            scale_b: r.scale_b,
        };
        let spectroscopy = match &self.spectroscopy {
            SpectroscopyConfig::Wire { wire } => NSpectroscopy::Wire { wire: wire.normalize("spectroscopy.wire")? },
            SpectroscopyConfig::Vector { gauss } => {
                finite("spectroscopy.gauss", &gauss.concat())?;
                NSpectroscopy::Vector { tesla: gauss.map(|[re, im]| [re * GAUSS, im * GAUSS]) }
            }
        };
        let s = &self.solver;
        if s.dn_max < 1 || !(s.weight_floor >= 0.0) || s.label_steps == 0 || s.label_max_steps < s.label_steps {
            return Err(Error::InvalidConfig("solver settings out of range".into()));
        }
        let potential = match &self.potential {
            Some(p) => Some(NPotential {
                line: p.line.normalize("potential.line")?,
                m_tilde: if p.m_tilde.is_empty() { vec![a.f] } else { p.m_tilde.clone() },
                kappa: p.kappa,
            }),
            None => None,
        };
        let levels = match &self.levels {
            Some(l) => Some(NLevels { line: l.line.normalize("levels.line")?, kappas: l.kappas.clone() }),
            None => None,
        };
        let scan = match &self.scan {
            Some(sc) => {
                finite("scan.currents_ma", &sc.currents_ma)?;
                Some(NScan {
                    currents: sc.currents_ma.iter().map(|c| c * MA).collect(),
                    window: window("scan", sc.window_khz)?,
                    search: sc.search.normalize("scan.search")?,
                })
            }
            None => None,
        };
        let fit = match &self.fit {
            Some(f) => Some(NFit {
                model: f.model,
                scales: f.scales,
                initial: f.initial.clone(),
                search: f.search.normalize("fit.search")?,
                window: window("fit", f.window_khz)?,
            }),
            None => None,
        };
        let n = Normalized {
            atom: NAtom { f: a.f, g_f: a.g_f, mass_kg: a.mass_amu * AMU },
            static_field,
            rf,
            spectroscopy,
            solver: s.clone(),
            potential,
            levels,
            scan,
            fit,
            output_dir: self.output_dir.clone(),
        };
        n.validate()?;
        Ok(n)
    }
}

fn vec3(v: [f64; 3]) -> Vec3 {
    Vec3::new(v[0], v[1], v[2])
}

impl NWire {
    fn build(&self, role: WireRole) -> Result<WireSpec> {
        WireSpec::new(
            vec3(self.position),
            vec3(self.axis),
            self.width,
            vec3(self.plane_normal),
            self.current,
            role,
            self.phase,
        )
    }
}

impl NLine {
    pub fn build(&self) -> Result<LineGrid> {
        LineGrid::uniform(vec3(self.origin), vec3(self.direction), self.start, self.stop, self.points)
    }
}

impl Normalized {
    pub fn from_json(text: &str) -> Result<Self> {
        let n: Normalized = serde_json::from_str(text).map_err(|e| Error::InvalidConfig(e.to_string()))?;
        n.validate()?;
        Ok(n)
    }

    /// Canonical JSON; identical configurations give identical bytes.
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("normalized config is always serializable")
    }

    /// SHA-256 of the canonical JSON, hex encoded.
    pub fn hash(&self) -> String {
        hex::encode(Sha256::digest(self.to_json().as_bytes()))
    }

    /// Builds every domain object once to surface configuration errors early.
    pub fn validate(&self) -> Result<()> {
        let setup = self.setup()?;
        for line in [
            self.potential.as_ref().map(|p| &p.line),
            self.levels.as_ref().map(|l| &l.line),
            self.scan.as_ref().map(|s| &s.search),
            self.fit.as_ref().map(|f| &f.search),
        ]
        .into_iter()
        .flatten()
        {
            line.build()?;
        }
        if let Some(p) = &self.potential {
            for &m in &p.m_tilde {
                Label::from_f64(m, p.kappa)?;
            }
        }
        if let Some(l) = &self.levels {
            for &k in &l.kappas {
                Label::from_f64(self.atom.f, k)?;
            }
        }
        if let Some(f) = &self.fit {
            let want = match f.scales {
                FitScalesKind::Common => 1,
                FitScalesKind::PerWire => 2,
            };
            if f.initial.len() != want {
                return Err(Error::InvalidConfig(format!("fit.initial needs {want} value(s)")));
            }
        }
        setup.basis()?;
        Ok(())
    }

    pub fn atom(&self) -> Result<Atom> {
        Atom::new(self.atom.f, self.atom.g_f, self.atom.mass_kg)
    }

    pub fn field_model(&self) -> Result<FieldModel> {
        let atom = self.atom()?;
        let static_model = match &self.static_field {
            NStatic::Ioffe { larmor_hz, omega_perp, omega_axial, center, ioffe_axis, quadrupole_axis } => {
                StaticModel::Ioffe(IoffeTrapModel::from_trap_frequencies(
                    *larmor_hz,
                    *omega_perp,
                    *omega_axial,
                    &atom,
                    vec3(*center),
                    vec3(*ioffe_axis),
                    vec3(*quadrupole_axis),
                )?)
            }
            NStatic::Wires { wires, bias } => StaticModel::Wires {
                wires: wires.iter().map(|w| w.build(WireRole::Static)).collect::<Result<_>>()?,
                bias: BiasField { vector: vec3(*bias) },
            },
        };
        let r = &self.rf;
        let rf = RfSource::new(r.wire_a.build(WireRole::RfA)?, r.wire_b.build(WireRole::RfB)?, r.phase, r.frequency)
            .with_scales(r.scale_a, r.scale_b);
        let spectroscopy = match &self.spectroscopy {
            NSpectroscopy::Wire { wire } => SpectroscopySource::Wire(wire.build(WireRole::Spectroscopy)?),
            NSpectroscopy::Vector { tesla } => {
                let c = tesla.map(|[re, im]| C64::new(re, im));
                SpectroscopySource::Vector(CVec3::new(c[0], c[1], c[2]))
            }
        };
        Ok(FieldModel { static_model, rf, spectroscopy })
    }

    pub fn label_options(&self) -> LabelOptions {
        LabelOptions {
            n_steps: self.solver.label_steps,
            max_steps: self.solver.label_max_steps,
            ..LabelOptions::default()
        }
    }

    pub fn setup(&self) -> Result<DressingSetup> {
        let mut s = DressingSetup::new(self.field_model()?, self.atom()?);
        s.dn_max = self.solver.dn_max;
        s.labels = self.label_options();
        Ok(s)
    }

    /// The trapped label m̃ = F in the central complete manifold.
    pub fn trapped_label(&self) -> Result<Label> {
        Ok(crate::spectroscopy::trapped_label(&self.atom()?))
    }

    pub fn scan_spec(&self) -> Result<ScanSpec> {
        let s = self.scan.as_ref().ok_or_else(|| Error::InvalidConfig("config has no scan section".into()))?;
        Ok(ScanSpec {
            currents: s.currents.clone(),
            window: (s.window[0], s.window[1]),
            weight_floor: self.solver.weight_floor,
            search: s.search.build()?,
            from: self.trapped_label()?,
        })
    }

    pub fn fit_problem(&self) -> Result<(FitProblem, FitOptions, Vec<f64>)> {
        let f = self.fit.as_ref().ok_or_else(|| Error::InvalidConfig("config has no fit section".into()))?;
        let problem = FitProblem {
            setup: self.setup()?,
            search: f.search.build()?,
            from: self.trapped_label()?,
            model: match f.model {
                FitModelKind::Rwa => LineModel::Rwa,
                FitModelKind::Full => LineModel::Full,
            },
            scales: match f.scales {
                FitScalesKind::Common => FreeScales::Common,
                FitScalesKind::PerWire => FreeScales::PerWire,
            },
        };
        let options = FitOptions {
            weight_floor: self.solver.weight_floor,
            window: (f.window[0], f.window[1]),
            ..FitOptions::default()
        };
        Ok((problem, options, f.initial.clone()))
    }
}

#[cfg(test)]
mod tests;
