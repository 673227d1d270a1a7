//! Flat `key = value` pipeline configuration.

use crate::CliError;
use hireg_core::hra::{Dilation, HraConfig, ZosrConfig};
use hireg_core::subdivision::Scheme;
use std::fmt::Display;
use std::path::{Path, PathBuf};
use std::str::FromStr;

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub template: Option<PathBuf>,
    pub target: Option<PathBuf>,
    pub landmarks: Option<PathBuf>,
    pub output: Option<PathBuf>,
    pub mesh_format: String,
    pub zosr: ZosrConfig,
    pub hra_enabled: bool,
    pub hra: HraConfig,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            template: None,
            target: None,
            landmarks: None,
            output: None,
            mesh_format: "obj".into(),
            zosr: ZosrConfig::default(),
            hra_enabled: true,
            hra: HraConfig::default(),
        }
    }
}

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T, CliError>
where
    T::Err: Display,
{
    value
        .parse()
        .map_err(|e| CliError::Input(format!("invalid value '{value}' for '{key}': {e}")))
}

impl PipelineConfig {
    /// Every key with its current value, in a stable order.
    pub fn entries(&self) -> Vec<(&'static str, String)> {
        let path = |p: &Option<PathBuf>| p.as_ref().map(|p| p.display().to_string()).unwrap_or_default();
        let z = &self.zosr;
        let h = &self.hra;
        let (mode, radius) = match h.dilation {
            Dilation::Fraction(r) => ("fraction", r),
            Dilation::Absolute(r) => ("absolute", r),
        };
        let f = &h.fit;
        vec![
            ("template", path(&self.template)),
            ("target", path(&self.target)),
            ("landmarks", path(&self.landmarks)),
            ("output", path(&self.output)),
            ("output.mesh_format", self.mesh_format.clone()),
            ("zoomout.k_start_template", z.k_start_template.to_string()),
            ("zoomout.k_start_target", z.k_start_target.to_string()),
            ("zoomout.k_end", z.k_end.to_string()),
            ("zoomout.step", z.step.to_string()),
            ("zoomout.regularization", z.regularization.to_string()),
            ("hra.enabled", self.hra_enabled.to_string()),
            ("hra.scheme", h.scheme.to_string()),
            ("hra.iterations", h.iterations.to_string()),
            ("hra.curvature_threshold", h.curvature_threshold.to_string()),
            ("hra.dilation", radius.to_string()),
            ("hra.dilation_mode", mode.to_string()),
            ("hra.localized", h.localized.to_string()),
            ("hra.allow_deep_bcs", h.allow_deep_bcs.to_string()),
            ("fit.data_weight", f.data_weight.to_string()),
            ("fit.arap_weight", f.arap_weight.to_string()),
            ("fit.max_distance", f.max_distance.to_string()),
            ("fit.normal_cos_min", f.normal_cos_min.to_string()),
            ("fit.max_iters", f.max_iters.to_string()),
            ("fit.rel_tol", f.rel_tol.to_string()),
            ("fit.icp_rounds", f.icp_rounds.to_string()),
        ]
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<(), CliError> {
        let path = || (!value.is_empty()).then(|| PathBuf::from(value));
        match key {
            "template" => self.template = path(),
            "target" => self.target = path(),
            "landmarks" => self.landmarks = path(),
            "output" => self.output = path(),
            "output.mesh_format" => match value {
                "obj" | "ply" => self.mesh_format = value.into(),
                _ => return Err(CliError::Input(format!("'{key}' must be obj or ply, got '{value}'"))),
            },
            "zoomout.k_start_template" => self.zosr.k_start_template = parse(key, value)?,
            "zoomout.k_start_target" => self.zosr.k_start_target = parse(key, value)?,
            "zoomout.k_end" => self.zosr.k_end = parse(key, value)?,
            "zoomout.step" => self.zosr.step = parse(key, value)?,
            "zoomout.regularization" => self.zosr.regularization = parse(key, value)?,
            "hra.enabled" => self.hra_enabled = parse(key, value)?,
            "hra.scheme" => self.hra.scheme = parse::<Scheme>(key, value)?,
            "hra.iterations" => self.hra.iterations = parse(key, value)?,
            "hra.curvature_threshold" => self.hra.curvature_threshold = parse(key, value)?,
            "hra.dilation" => {
                let r = parse(key, value)?;
                self.hra.dilation = match self.hra.dilation {
                    Dilation::Fraction(_) => Dilation::Fraction(r),
                    Dilation::Absolute(_) => Dilation::Absolute(r),
                }
            }
            "hra.dilation_mode" => {
                let (Dilation::Fraction(r) | Dilation::Absolute(r)) = self.hra.dilation;
                self.hra.dilation = match value {
                    "fraction" => Dilation::Fraction(r),
                    "absolute" => Dilation::Absolute(r),
                    _ => {
                        return Err(CliError::Input(format!(
                            "'{key}' must be fraction or absolute, got '{value}'"
                        )))
                    }
                }
            }
            "hra.localized" => self.hra.localized = parse(key, value)?,
            "hra.allow_deep_bcs" => self.hra.allow_deep_bcs = parse(key, value)?,
            "fit.data_weight" => self.hra.fit.data_weight = parse(key, value)?,
            "fit.arap_weight" => self.hra.fit.arap_weight = parse(key, value)?,
            "fit.max_distance" => self.hra.fit.max_distance = parse(key, value)?,
            "fit.normal_cos_min" => self.hra.fit.normal_cos_min = parse(key, value)?,
            "fit.max_iters" => self.hra.fit.max_iters = parse(key, value)?,
            "fit.rel_tol" => self.hra.fit.rel_tol = parse(key, value)?,
            "fit.icp_rounds" => self.hra.fit.icp_rounds = parse(key, value)?,
            _ => return Err(CliError::Input(format!("unknown config key '{key}'"))),
        }
        self.zosr.fit = self.hra.fit.clone();
        Ok(())
    }

    /// Applies `key = value` lines; `#` starts a comment.
    pub fn apply_text(&mut self, text: &str, origin: &str) -> Result<(), CliError> {
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| CliError::Input(format!("{origin}:{}: expected 'key = value'", n + 1)))?;
            self.set(key.trim(), value.trim())?;
        }
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Input(format!("cannot read config {}: {e}", path.display())))?;
        let mut cfg = PipelineConfig::default();
        cfg.apply_text(&text, &path.display().to_string())?;
        Ok(cfg)
    }

    /// Applies a `key=value` override.
    pub fn apply_override(&mut self, assignment: &str) -> Result<(), CliError> {
        let (key, value) = assignment
            .split_once('=')
            .ok_or_else(|| CliError::Input(format!("override '{assignment}' is not key=value")))?;
        self.set(key.trim(), value.trim())
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let z = &self.zosr;
        if z.k_start_template == 0 || z.k_start_target == 0 || z.step == 0 {
            return Err(CliError::Input("zoomout sizes and step must be at least 1".into()));
        }
        if z.k_end < z.k_start_template.max(z.k_start_target) {
            return Err(CliError::Input(format!(
                "zoomout.k_end ({}) is smaller than the start size",
                z.k_end
            )));
        }
        if !(z.regularization >= 0.0) {
            return Err(CliError::Input("zoomout.regularization must be non-negative".into()));
        }
        self.hra.validate()?;
        Ok(())
    }

    pub fn to_text(&self) -> String {
        self.entries().into_iter().map(|(k, v)| format!("{k} = {v}\n")).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_through_text() {
        let mut cfg = PipelineConfig::default();
        cfg.apply_text("hra.scheme = bcs # comment\nhra.iterations=2\n\nfit.icp_rounds = 1\nhra.dilation_mode = absolute\nhra.dilation = 0.01", "x")
            .unwrap();
        let mut again = PipelineConfig::default();
        again.apply_text(&cfg.to_text(), "y").unwrap();
        assert_eq!(cfg, again);
        assert_eq!(again.hra.dilation, Dilation::Absolute(0.01));
        assert_eq!(again.zosr.fit.icp_rounds, 1);
    }

    #[test]
    fn rejects_unknown_and_malformed() {
        let mut cfg = PipelineConfig::default();
        let err = cfg.apply_override("hra.nope=1").unwrap_err();
        assert!(err.to_string().contains("hra.nope"));
        assert!(cfg.apply_override("hra.iterations=many").is_err());
        assert!(cfg.apply_text("just words", "f").is_err());
        cfg.apply_override("hra.iterations=0").unwrap();
        assert!(cfg.validate().is_err());
    }
}
