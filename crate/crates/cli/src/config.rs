//! Run configuration. Every frequency is given in Hz and converted to rad/s
//! when the physics objects are built; unknown keys are rejected.

use qesr_core::dynamics::{CavityModel, ContourSettings, Method, OdeSettings, PulseEnvelope, PulseShape, SpectralMode};
use qesr_core::protocol::QubitChain;
use qesr_core::spin_model::{build_distribution, GridSpec, LineShape, Satellite, SpinDistribution, SpinLine};
use qesr_core::units::hz_to_rad;
use serde::{Deserialize, Serialize};

use crate::error::CliError;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub ensembles: Vec<EnsembleSpec>,
    #[serde(default)]
    pub cavity: CavitySpec,
    #[serde(default)]
    pub pulse: PulseSpec,
    #[serde(default)]
    pub qubit: QubitChain,
    #[serde(default)]
    pub spectrum: SpectrumSpec,
    #[serde(default)]
    pub swap: SwapSpec,
    #[serde(default)]
    pub transfer: TransferSpec,
    #[serde(default)]
    pub sensitivity: SensitivitySpec,
    #[serde(default)]
    pub numerics: NumericsSpec,
    #[serde(default)]
    pub output: OutputSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnsembleSpec {
    pub name: String,
    /// Reference frequency the line offsets, the cavity and the sweeps refer to.
    pub center_hz: f64,
    /// Collective coupling g_K / 2 pi.
    pub coupling_hz: f64,
    #[serde(default)]
    pub shape: LineShape,
    #[serde(default = "default_nodes")]
    pub nodes: usize,
    /// Node window around each line, in units of its FWHM.
    #[serde(default = "default_window")]
    pub window_fwhm: f64,
    pub lines: Vec<LineSpec>,
    #[serde(default)]
    pub satellites: Vec<SatelliteSpec>,
}

fn default_nodes() -> usize {
    5_000
}

fn default_window() -> f64 {
    8.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LineSpec {
    pub offset_hz: f64,
    pub fwhm_hz: f64,
    #[serde(default = "one")]
    pub weight: f64,
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SatelliteSpec {
    pub offset_hz: f64,
    pub weight: f64,
}

/// Cavity damping from either a quality factor or an explicit `kappa_hz`;
/// the cavity is tuned to each ensemble center plus `detuning_hz`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CavitySpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub quality_factor: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kappa_hz: Option<f64>,
    #[serde(default)]
    pub gamma_0_hz: f64,
    #[serde(default)]
    pub detuning_hz: f64,
}

impl Default for CavitySpec {
    fn default() -> Self {
        Self {
            quality_factor: Some(1e4),
            kappa_hz: None,
            gamma_0_hz: 0.0,
            detuning_hz: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PulseSpec {
    pub shape: PulseShape,
    pub fwhm_hz: f64,
    /// Only used by the rectangular shape.
    pub duration_s: f64,
}

impl Default for PulseSpec {
    fn default() -> Self {
        Self {
            shape: PulseShape::Lorentzian,
            fwhm_hz: 150e3,
            duration_s: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SpectrumSpec {
    /// Full sweep width centered on each ensemble.
    pub span_hz: f64,
    pub points: usize,
    /// Excitations put into the pulse mode per shot.
    pub n_p: f64,
    /// Fixed interaction time; the first swap minimum when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tau_s: Option<f64>,
}

impl Default for SpectrumSpec {
    fn default() -> Self {
        Self {
            span_hz: 12e6,
            points: 401,
            n_p: 15.0,
            tau_s: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SwapSpec {
    pub t_max_s: f64,
    pub points: usize,
}

impl Default for SwapSpec {
    fn default() -> Self {
        Self {
            t_max_s: 400e-9,
            points: 801,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TransferSpec {
    /// Pulse centers relative to the ensemble center.
    pub offsets_hz: Vec<f64>,
    pub t_max_s: f64,
    pub points: usize,
    pub method: Method,
}

impl Default for TransferSpec {
    fn default() -> Self {
        Self {
            offsets_hz: vec![0.0],
            t_max_s: 300e-9,
            points: 301,
            method: Method::Contour,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SensitivitySpec {
    /// Single-spin coupling g / 2 pi.
    pub g_hz: f64,
    /// Field linewidth converted to the dipole decay rate with `hz_per_mt`.
    pub linewidth_mt: f64,
    pub hz_per_mt: f64,
    pub kappa_over_delta: f64,
    pub n_threshold: f64,
    /// Spin count for the trajectory; N_min when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_spins: Option<f64>,
    pub table_g_hz: Vec<f64>,
    pub table_linewidth_mt: Vec<f64>,
    pub table_n_threshold: Vec<f64>,
}

impl Default for SensitivitySpec {
    fn default() -> Self {
        Self {
            g_hz: 10.0,
            linewidth_mt: 0.1,
            hz_per_mt: qesr_core::sensitivity::LINEWIDTH_HZ_PER_MT,
            kappa_over_delta: 0.01,
            n_threshold: 0.05,
            n_spins: None,
            table_g_hz: vec![1.0, 10.0, 100.0],
            table_linewidth_mt: vec![0.01, 0.1, 1.0],
            table_n_threshold: vec![0.01, 0.05, 0.2],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
pub struct NumericsSpec {
    pub mode: SpectralMode,
    pub contour: ContourSettings,
    pub ode: OdeSettings,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputSpec {
    pub dir: String,
}

impl Default for OutputSpec {
    fn default() -> Self {
        Self { dir: "out".into() }
    }
}

fn invalid(field: impl Into<String>, reason: impl Into<String>) -> CliError {
    CliError::Invalid {
        field: field.into(),
        reason: reason.into(),
    }
}

fn positive(field: &str, v: f64) -> Result<(), CliError> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(invalid(field, format!("must be > 0, got {v}")))
    }
}

fn non_negative(field: &str, v: f64) -> Result<(), CliError> {
    if v >= 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(invalid(field, format!("must be >= 0, got {v}")))
    }
}

pub fn parse_config(text: &str) -> Result<RunConfig, CliError> {
    if text.trim().is_empty() {
        return Err(invalid("config", "configuration is empty"));
    }
    let cfg: RunConfig = toml::from_str(text).map_err(|e| {
        let at = e
            .span()
            .map(|s| {
                let (line, col) = line_col(text, s.start);
                format!(" at line {line}, column {col}")
            })
            .unwrap_or_default();
        CliError::Parse(format!("{}{at}", e.message()))
    })?;
    cfg.validate()?;
    Ok(cfg)
}

fn line_col(text: &str, offset: usize) -> (usize, usize) {
    let before = &text[..offset.min(text.len())];
    let line = before.matches('\n').count() + 1;
    let col = before.len() - before.rfind('\n').map_or(0, |i| i + 1) + 1;
    (line, col)
}

impl RunConfig {
    pub fn validate(&self) -> Result<(), CliError> {
        if self.ensembles.is_empty() {
            return Err(invalid("ensembles", "at least one ensemble is required"));
        }
        for (i, e) in self.ensembles.iter().enumerate() {
            let at = |f: &str| format!("ensembles[{i}].{f}");
            if e.name.trim().is_empty() {
                return Err(invalid(at("name"), "must not be empty"));
            }
            if self.ensembles[..i].iter().any(|o| o.name == e.name) {
                return Err(invalid(at("name"), format!("duplicate ensemble name {:?}", e.name)));
            }
            positive(&at("center_hz"), e.center_hz)?;
            non_negative(&at("coupling_hz"), e.coupling_hz)?;
            positive(&at("window_fwhm"), e.window_fwhm)?;
            if e.nodes < 2 {
                return Err(invalid(at("nodes"), format!("need at least 2 nodes, got {}", e.nodes)));
            }
            if e.lines.is_empty() {
                return Err(invalid(at("lines"), "at least one line is required"));
            }
            for (j, l) in e.lines.iter().enumerate() {
                if !l.offset_hz.is_finite() {
                    return Err(invalid(at(&format!("lines[{j}].offset_hz")), format!("line {j}: must be finite")));
                }
                if !(l.fwhm_hz > 0.0 && l.fwhm_hz.is_finite()) {
                    return Err(invalid(
                        at(&format!("lines[{j}].fwhm_hz")),
                        format!("line {j}: fwhm must be > 0, got {}", l.fwhm_hz),
                    ));
                }
                if !(l.weight > 0.0 && l.weight.is_finite()) {
                    return Err(invalid(
                        at(&format!("lines[{j}].weight")),
                        format!("line {j}: weight must be > 0, got {}", l.weight),
                    ));
                }
            }
            let mut total = 0.0;
            for (j, s) in e.satellites.iter().enumerate() {
                if !(s.weight > 0.0 && s.offset_hz.is_finite()) {
                    return Err(invalid(at(&format!("satellites[{j}]")), "weight must be > 0 and offset finite"));
                }
                total += s.weight;
            }
            if total >= 1.0 {
                return Err(invalid(at("satellites"), format!("weights sum to {total}, must stay below 1")));
            }
        }
        match (self.cavity.quality_factor, self.cavity.kappa_hz) {
            (Some(q), None) => positive("cavity.quality_factor", q)?,
            (None, Some(k)) => non_negative("cavity.kappa_hz", k)?,
            _ => return Err(invalid("cavity", "set exactly one of quality_factor and kappa_hz")),
        }
        non_negative("cavity.gamma_0_hz", self.cavity.gamma_0_hz)?;
        if !self.cavity.detuning_hz.is_finite() {
            return Err(invalid("cavity.detuning_hz", "must be finite"));
        }
        match self.pulse.shape {
            PulseShape::Rectangular => positive("pulse.duration_s", self.pulse.duration_s)?,
            _ => positive("pulse.fwhm_hz", self.pulse.fwhm_hz)?,
        }
        self.qubit.validate().map_err(|e| invalid("qubit", e.to_string()))?;
        positive("spectrum.span_hz", self.spectrum.span_hz)?;
        if self.spectrum.points < 2 {
            return Err(invalid("spectrum.points", "need at least 2 points"));
        }
        non_negative("spectrum.n_p", self.spectrum.n_p)?;
        if let Some(t) = self.spectrum.tau_s {
            positive("spectrum.tau_s", t)?;
        }
        positive("swap.t_max_s", self.swap.t_max_s)?;
        if self.swap.points < 2 {
            return Err(invalid("swap.points", "need at least 2 points"));
        }
        positive("transfer.t_max_s", self.transfer.t_max_s)?;
        if self.transfer.points < 2 {
            return Err(invalid("transfer.points", "need at least 2 points"));
        }
        if self.transfer.offsets_hz.is_empty() {
            return Err(invalid("transfer.offsets_hz", "at least one offset is required"));
        }
        let s = &self.sensitivity;
        positive("sensitivity.g_hz", s.g_hz)?;
        positive("sensitivity.linewidth_mt", s.linewidth_mt)?;
        positive("sensitivity.hz_per_mt", s.hz_per_mt)?;
        positive("sensitivity.kappa_over_delta", s.kappa_over_delta)?;
        positive("sensitivity.n_threshold", s.n_threshold)?;
        if let Some(n) = s.n_spins {
            positive("sensitivity.n_spins", n)?;
        }
        for (name, v) in [
            ("sensitivity.table_g_hz", &s.table_g_hz),
            ("sensitivity.table_linewidth_mt", &s.table_linewidth_mt),
            ("sensitivity.table_n_threshold", &s.table_n_threshold),
        ] {
            for x in v {
                positive(name, *x)?;
            }
        }
        self.numerics.contour.validate().map_err(|e| invalid("numerics.contour", e.to_string()))?;
        positive("numerics.ode.rtol", self.numerics.ode.rtol)?;
        positive("numerics.ode.atol", self.numerics.ode.atol)?;
        if self.output.dir.is_empty() {
            return Err(invalid("output.dir", "must not be empty"));
        }
        Ok(())
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configuration serializes")
    }

    pub fn envelope(&self) -> PulseEnvelope {
        match self.pulse.shape {
            PulseShape::Lorentzian => PulseEnvelope::lorentzian(hz_to_rad(self.pulse.fwhm_hz)),
            PulseShape::Gaussian => PulseEnvelope::gaussian(hz_to_rad(self.pulse.fwhm_hz)),
            PulseShape::Rectangular => PulseEnvelope::rectangular(self.pulse.duration_s),
        }
    }

    /// Cavity tuned to the ensemble center plus the configured detuning.
    pub fn cavity_for(&self, e: &EnsembleSpec) -> CavityModel {
        let omega_c = hz_to_rad(e.center_hz + self.cavity.detuning_hz);
        let kappa = match (self.cavity.quality_factor, self.cavity.kappa_hz) {
            (_, Some(k)) => hz_to_rad(k),
            (Some(q), None) => omega_c / q,
            (None, None) => unreachable!("validated"),
        };
        CavityModel::new(omega_c, kappa, hz_to_rad(self.cavity.gamma_0_hz))
    }
}

impl EnsembleSpec {
    pub fn omega_k(&self) -> f64 {
        hz_to_rad(self.center_hz)
    }

    pub fn distribution(&self) -> Result<SpinDistribution, CliError> {
        let lines: Vec<SpinLine> = self
            .lines
            .iter()
            .map(|l| SpinLine::new(hz_to_rad(self.center_hz + l.offset_hz), hz_to_rad(l.fwhm_hz), l.weight))
            .collect();
        let satellites: Vec<Satellite> = self
            .satellites
            .iter()
            .map(|s| Satellite {
                offset: hz_to_rad(s.offset_hz),
                weight: s.weight,
            })
            .collect();
        let grid = GridSpec::covering(&lines, self.window_fwhm, self.nodes)?;
        Ok(build_distribution(&lines, hz_to_rad(self.coupling_hz), &satellites, grid, self.shape)?)
    }

    /// File-name friendly form of the ensemble name, e.g. `+I` -> `plus_I`.
    pub fn slug(&self) -> String {
        let mut out = String::new();
        for c in self.name.chars() {
            match c {
                '+' => out.push_str("plus_"),
                '-' => out.push_str("minus_"),
                c if c.is_ascii_alphanumeric() || c == '_' => out.push(c),
                _ => out.push('_'),
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
[[ensembles]]
name = "a"
center_hz = 2.9e9
coupling_hz = 1e6
lines = [{ offset_hz = 0.0, fwhm_hz = 1e6 }]
"#;

    #[test]
    fn minimal_config_takes_defaults() {
        let cfg = parse_config(MINIMAL).unwrap();
        assert_eq!(cfg.ensembles[0].nodes, 5_000);
        assert_eq!(cfg.spectrum.points, 401);
        assert_eq!(cfg.cavity.quality_factor, Some(1e4));
        assert_eq!(cfg.numerics.mode, SpectralMode::NarrowPulse);
    }

    #[test]
    fn effective_config_round_trips() {
        let cfg = parse_config(MINIMAL).unwrap();
        let text = cfg.to_toml();
        let again = parse_config(&text).unwrap();
        assert_eq!(cfg, again);
        assert_eq!(again.to_toml(), text);
    }

    #[test]
    fn unknown_key_is_rejected_with_position() {
        let text = MINIMAL.replace("coupling_hz", "colping_hz");
        match parse_config(&text) {
            Err(CliError::Parse(msg)) => assert!(msg.contains("line"), "{msg}"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn both_damping_forms_are_rejected() {
        let text = format!("{MINIMAL}\n[cavity]\nquality_factor = 1e4\nkappa_hz = 1e5\n");
        assert!(matches!(parse_config(&text), Err(CliError::Invalid { field, .. }) if field == "cavity"));
    }

    #[test]
    fn slugs() {
        let mut e = parse_config(MINIMAL).unwrap().ensembles.remove(0);
        e.name = "+III".into();
        assert_eq!(e.slug(), "plus_III");
        e.name = "x y".into();
        assert_eq!(e.slug(), "x_y");
    }
}
