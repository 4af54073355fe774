//! Experiment configuration files (TOML). Unknown keys are rejected and every
//! value is re-checked against the library's own validation on load.

use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;
use treig_core::analysis::FitWindow;
use treig_core::beyn::{BeynConfig, ContourSpec};
use treig_core::nep::{IndexMap, NepProblem, ToyKind};
use treig_core::tracker::{AdaptiveConfig, Tracker};

#[derive(Debug, Clone, PartialEq, Error)]
#[error("{}{message}", line.map(|l| format!("line {l}: ")).unwrap_or_default())]
pub struct ConfigError {
    pub line: Option<usize>,
    pub message: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GeometryName {
    Disk,
    Annulus,
    Toy,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ToyName {
    Crossing,
    Algebraic,
    Veering,
    Degenerate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemConfig {
    pub geometry: GeometryName,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub m: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r: Option<f64>,
    #[serde(default)]
    pub index_map: IndexMap,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub toy: Option<ToyName>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eps: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ContourConfig {
    pub center_re: f64,
    #[serde(default)]
    pub center_im: f64,
    pub radius: f64,
    pub n_quad: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BeynSection {
    pub hankel_blocks: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub probe_cols: Option<usize>,
    pub rank_tol: f64,
    pub residual_tol: f64,
    pub seed: u64,
}

impl Default for BeynSection {
    fn default() -> Self {
        let d = BeynConfig::default();
        BeynSection {
            hankel_blocks: d.hankel_blocks,
            probe_cols: d.probe_cols,
            rank_tol: d.rank_tol,
            residual_tol: d.residual_tol,
            seed: d.rng_seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrackerSection {
    pub p_min: f64,
    pub p_max: f64,
    #[serde(default = "defaults::tol")]
    pub tol: f64,
    #[serde(default = "defaults::spline_degree")]
    pub spline_degree: usize,
    #[serde(default = "defaults::max_samples")]
    pub max_samples: usize,
    #[serde(default = "defaults::initial_samples")]
    pub initial_samples: usize,
    #[serde(default = "defaults::boundary_band")]
    pub boundary_band: f64,
}

mod defaults {
    use treig_core::tracker::AdaptiveConfig;

    fn base() -> AdaptiveConfig {
        AdaptiveConfig::new(0.0, 1.0)
    }
    pub fn tol() -> f64 {
        base().tol
    }
    pub fn spline_degree() -> usize {
        base().spline_degree
    }
    pub fn max_samples() -> usize {
        base().max_samples
    }
    pub fn initial_samples() -> usize {
        base().initial_samples
    }
    pub fn boundary_band() -> f64 {
        base().boundary_band
    }
    pub fn directory() -> String {
        "out".into()
    }
    pub fn verify() -> usize {
        3
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFile {
    Trajectories,
    Events,
    Indicators,
    Reports,
    Plotdata,
}

impl OutputFile {
    pub const ALL: [OutputFile; 5] =
        [OutputFile::Trajectories, OutputFile::Events, OutputFile::Indicators, OutputFile::Reports, OutputFile::Plotdata];
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputsSection {
    #[serde(default = "defaults::directory")]
    pub directory: String,
    #[serde(default = "all_files")]
    pub files: Vec<OutputFile>,
}

fn all_files() -> Vec<OutputFile> {
    OutputFile::ALL.to_vec()
}

impl Default for OutputsSection {
    fn default() -> Self {
        OutputsSection { directory: defaults::directory(), files: all_files() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalysisSection {
    /// Absolute bound on `|Im κ|` for a real eigenvalue; defaults to
    /// `1e-6 · radius`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tol_real: Option<f64>,
    #[serde(default)]
    pub fit: FitWindow,
    /// Comparison parameter of the Dirichlet limit check; defaults to
    /// `p_max / 2`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub limit_p_tail: Option<f64>,
    /// Interior points per interval in the reconstruction check (0 skips).
    #[serde(default = "defaults::verify")]
    pub verify_per_interval: usize,
}

impl Default for AnalysisSection {
    fn default() -> Self {
        AnalysisSection { tol_real: None, fit: FitWindow::default(), limit_p_tail: None, verify_per_interval: 3 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub problem: ProblemConfig,
    pub contour: ContourConfig,
    #[serde(default)]
    pub beyn: BeynSection,
    pub tracker: TrackerSection,
    #[serde(default)]
    pub outputs: OutputsSection,
    #[serde(default)]
    pub analysis: AnalysisSection,
}

/// Line (1-based) holding `key` inside `[section]`, for error messages.
fn line_of(text: &str, section: &str, key: &str) -> Option<usize> {
    let mut current = String::new();
    let mut header = None;
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if let Some(name) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
            current = name.trim().to_string();
            if current == section {
                header = Some(i + 1);
            }
            continue;
        }
        if current == section {
            if let Some((k, _)) = line.split_once('=') {
                if k.trim() == key {
                    return Some(i + 1);
                }
            }
        }
    }
    header
}

fn offset_line(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].matches('\n').count() + 1
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let cfg: ExperimentConfig = toml::from_str(text).map_err(|e| ConfigError {
            line: e.span().map(|s| offset_line(text, s.start)),
            message: e.message().trim().to_string(),
        })?;
        cfg.validate().map_err(|(section, key, message)| ConfigError { line: line_of(text, section, key), message })?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError { line: None, message: format!("cannot read {}: {e}", path.display()) })?;
        Self::parse(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configuration serializes")
    }

    pub fn nep(&self) -> Result<NepProblem, (&'static str, &'static str, String)> {
        let p = &self.problem;
        let m = || p.m.ok_or(("problem", "geometry", "disk and annulus problems need `m`".to_string()));
        let nep = match p.geometry {
            GeometryName::Disk => NepProblem::disk(m()?),
            GeometryName::Annulus => {
                let r = p.r.ok_or(("problem", "geometry", "annulus problems need `r`".to_string()))?;
                NepProblem::annulus(m()?, r).map_err(|e| ("problem", "r", e.to_string()))?
            }
            GeometryName::Toy => {
                let kind = match p.toy.ok_or(("problem", "geometry", "toy problems need `toy`".to_string()))? {
                    ToyName::Crossing => ToyKind::Crossing,
                    ToyName::Algebraic => ToyKind::Algebraic,
                    ToyName::Degenerate => ToyKind::Degenerate,
                    ToyName::Veering => ToyKind::Veering {
                        eps: p.eps.ok_or(("problem", "toy", "the veering toy needs `eps`".to_string()))?,
                    },
                };
                NepProblem::toy(kind).map_err(|e| ("problem", "eps", e.to_string()))?
            }
        };
        Ok(nep.with_index_map(p.index_map))
    }

    pub fn contour(&self) -> Result<ContourSpec, (&'static str, &'static str, String)> {
        let c = &self.contour;
        ContourSpec::new(Complex64::new(c.center_re, c.center_im), c.radius, c.n_quad)
            .map_err(|e| ("contour", "radius", e.to_string()))
    }

    pub fn beyn(&self) -> BeynConfig {
        let b = &self.beyn;
        BeynConfig {
            hankel_blocks: b.hankel_blocks,
            probe_cols: b.probe_cols,
            rank_tol: b.rank_tol,
            residual_tol: b.residual_tol,
            rng_seed: b.seed,
        }
    }

    pub fn adaptive(&self) -> AdaptiveConfig {
        let t = &self.tracker;
        AdaptiveConfig {
            tol: t.tol,
            spline_degree: t.spline_degree,
            max_samples: t.max_samples,
            initial_samples: t.initial_samples,
            boundary_band: t.boundary_band,
            ..AdaptiveConfig::new(t.p_min, t.p_max)
        }
    }

    pub fn tracker(&self) -> Result<Tracker, ConfigError> {
        let fail = |(_, _, m): (&str, &str, String)| ConfigError { line: None, message: m };
        Tracker::new(self.nep().map_err(fail)?, self.contour().map_err(fail)?, self.beyn(), self.adaptive())
            .map_err(|e| ConfigError { line: None, message: e.to_string() })
    }

    pub fn tol_real(&self) -> f64 {
        self.analysis.tol_real.unwrap_or(1e-6 * self.contour.radius)
    }

    /// Applies `TREIG_SEED` when set.
    pub fn with_env_seed(mut self) -> Result<Self, ConfigError> {
        if let Ok(v) = std::env::var("TREIG_SEED") {
            self.beyn.seed = v
                .trim()
                .parse()
                .map_err(|_| ConfigError { line: None, message: format!("TREIG_SEED must be an unsigned integer, got `{v}`") })?;
        }
        Ok(self)
    }

    fn validate(&self) -> Result<(), (&'static str, &'static str, String)> {
        let nep = self.nep()?;
        let contour = self.contour()?;
        if nep.is_transmission() && contour.center.norm() <= contour.radius {
            return Err(("contour", "center_re", format!("contour disk of radius {} around {} contains κ = 0", contour.radius, contour.center)));
        }
        self.beyn().validate().map_err(|e| ("beyn", "hankel_blocks", e.to_string()))?;
        let t = &self.tracker;
        if !(t.p_min.is_finite() && t.p_max.is_finite() && t.p_min < t.p_max) {
            return Err(("tracker", "p_max", format!("need p_min < p_max, got [{}, {}]", t.p_min, t.p_max)));
        }
        self.adaptive().validate(&nep).map_err(|e| ("tracker", "p_min", e.to_string()))?;
        if let Some(tr) = self.analysis.tol_real {
            if !(tr > 0.0) {
                return Err(("analysis", "tol_real", format!("tol_real must be positive, got {tr}")));
            }
        }
        self.analysis.fit.validate().map_err(|e| ("analysis", "fit", e.to_string()))?;
        if self.outputs.files.is_empty() {
            return Err(("outputs", "files", "no output files selected".into()));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const DISK: &str = include_str!("../../../presets/disk_m0.conf");

    #[test]
    fn unknown_key_is_rejected_with_line() {
        let text = DISK.replace("radius = 1.5", "radius = 1.5\nradious = 2.0");
        let e = ExperimentConfig::parse(&text).unwrap_err();
        assert!(e.message.contains("radious"), "{e}");
        let want = text.lines().position(|l| l.starts_with("radious")).unwrap() + 1;
        assert_eq!(e.line, Some(want));
    }

    #[test]
    fn singular_parameter_is_named() {
        let text = DISK.replace("p_min = 1.01", "p_min = 0.5");
        let e = ExperimentConfig::parse(&text).unwrap_err();
        assert!(e.message.contains("p = 1"), "{e}");
        assert!(e.line.is_some());
    }

    #[test]
    fn missing_order_is_reported() {
        let text = DISK.replace("m = 0\n", "");
        assert!(ExperimentConfig::parse(&text).is_err());
    }
}
