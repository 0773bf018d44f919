//! Run configuration: a flat JSON object, with command-line flags on top.

use std::path::{Path, PathBuf};

use serde::Deserialize;
use zernike_turbulence::coupling::CouplingKey;
use zernike_turbulence::modes::ModeIndex;
use zernike_turbulence::oracle::QuadratureSpec;
use zernike_turbulence::turbulence::{AoConfig, AoMode, TurbulenceParams, Truncation};

/// Something the user asked for that cannot be run. Maps to exit code 2.
#[derive(Debug)]
pub struct InputError(pub String);

impl std::fmt::Display for InputError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<zernike_turbulence::Error> for InputError {
    fn from(e: zernike_turbulence::Error) -> Self {
        InputError(e.to_string())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Command {
    Coeff,
    Verify,
    Prob,
    Grid,
}

/// Quadrature overrides; anything left out keeps its default.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuadratureOverrides {
    pub radial_nodes: Option<usize>,
    pub angular_nodes: Option<usize>,
    pub q_max: Option<f64>,
    pub tail_averaging: Option<bool>,
}

/// Every field is optional here; flags fill in or override, and
/// [`RunConfig::resolve`] applies the defaults.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub command: Option<Command>,
    pub pump: Option<Vec<i64>>,
    /// `[N1, M1, N2, M2]` for `prob`, `[M1, M2]` for `grid`.
    pub detectors: Option<Vec<i64>>,
    pub n_max: Option<u32>,
    pub sigma_r: Option<f64>,
    pub k: Option<f64>,
    pub z: Option<f64>,
    pub r: Option<f64>,
    pub ao_mode: Option<String>,
    pub ao_cutoff: Option<u32>,
    pub order_max: Option<u32>,
    pub n5_max: Option<u32>,
    pub output_path: Option<PathBuf>,
    pub key: Option<Vec<i64>>,
    pub oracle: Option<bool>,
    pub order: Option<u32>,
    pub perturb: Option<bool>,
    pub quadrature: Option<QuadratureOverrides>,
}

macro_rules! overlay {
    ($dst:ident, $src:ident; $($f:ident),*) => {
        $( if $src.$f.is_some() { $dst.$f = $src.$f; } )*
    };
}

impl RunConfig {
    pub fn from_file(path: &Path) -> Result<Self, InputError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| InputError(format!("cannot read {}: {e}", path.display())))?;
        serde_json::from_str(&text)
            .map_err(|e| InputError(format!("bad config {}: {e}", path.display())))
    }

    /// Fields set in `top` win.
    pub fn overlay(mut self, top: RunConfig) -> Self {
        overlay!(self, top; command, pump, detectors, n_max, sigma_r, k, z, r, ao_mode,
            ao_cutoff, order_max, n5_max, output_path, key, oracle, order, perturb, quadrature);
        self
    }

    pub fn resolve(&self) -> Result<Resolved, InputError> {
        let command = self.command.ok_or_else(|| InputError("no command given".into()))?;
        let reference = TurbulenceParams::reference(0.0);
        let params = TurbulenceParams {
            k: self.k.unwrap_or(reference.k),
            z: self.z.unwrap_or(reference.z),
            r: self.r.unwrap_or(reference.r),
            sigma_r: self.sigma_r.unwrap_or(0.0),
        };
        params.validate()?;
        let mode = match self.ao_mode.as_deref() {
            Some(s) => s.parse::<AoMode>()?,
            None => AoMode::None,
        };
        let ao = AoConfig { mode, cutoff: self.ao_cutoff.unwrap_or(0) };
        let mut truncation = Truncation::with_order(self.order_max.unwrap_or(160));
        if let Some(n5) = self.n5_max {
            if n5 % 2 == 1 {
                return Err(InputError(format!("n5_max must be even, got {n5}")));
            }
            truncation.n5_max = n5;
        }
        let mut quadrature = QuadratureSpec::default();
        if let Some(q) = &self.quadrature {
            quadrature.radial_nodes = q.radial_nodes.unwrap_or(quadrature.radial_nodes);
            quadrature.angular_nodes = q.angular_nodes.unwrap_or(quadrature.angular_nodes);
            quadrature.q_max = q.q_max.unwrap_or(quadrature.q_max);
            quadrature.tail_averaging = q.tail_averaging.unwrap_or(quadrature.tail_averaging);
        }
        quadrature.validate()?;
        let pump = match &self.pump {
            Some(v) => mode_pair(v, "pump")?,
            None => ModeIndex::new(2, 0)?,
        };
        Ok(Resolved {
            command,
            pump,
            detectors: self.detectors.clone(),
            n_max: self.n_max.unwrap_or(9),
            params,
            ao,
            truncation,
            quadrature,
            output_path: self.output_path.clone(),
            key: self.key.clone(),
            oracle: self.oracle.unwrap_or(false),
            order: self.order.unwrap_or(6),
            perturb: self.perturb.unwrap_or(false),
        })
    }
}

/// A config with defaults applied and the physics validated.
#[derive(Debug, Clone)]
pub struct Resolved {
    pub command: Command,
    pub pump: ModeIndex,
    pub detectors: Option<Vec<i64>>,
    pub n_max: u32,
    pub params: TurbulenceParams,
    pub ao: AoConfig,
    pub truncation: Truncation,
    pub quadrature: QuadratureSpec,
    pub output_path: Option<PathBuf>,
    pub key: Option<Vec<i64>>,
    pub oracle: bool,
    pub order: u32,
    pub perturb: bool,
}

impl Resolved {
    pub fn coupling_key(&self) -> Result<CouplingKey, InputError> {
        let v = self.key.as_deref().ok_or_else(|| InputError("coeff needs --key".into()))?;
        let arr: [i64; 6] = v
            .try_into()
            .map_err(|_| InputError(format!("key needs 6 integers, got {}", v.len())))?;
        Ok(CouplingKey::from_ints(arr)?)
    }

    /// Full detector modes, for `prob`.
    pub fn detector_modes(&self) -> Result<(ModeIndex, ModeIndex), InputError> {
        match self.detectors.as_deref() {
            Some([n1, m1, n2, m2]) => Ok((ModeIndex::new(*n1, *m1)?, ModeIndex::new(*n2, *m2)?)),
            Some(v) => Err(InputError(format!("prob needs 4 detector integers, got {}", v.len()))),
            None => Ok((ModeIndex::new(1, 1)?, ModeIndex::new(1, -1)?)),
        }
    }

    /// Detector azimuths, for `grid`.
    pub fn detector_azimuths(&self) -> Result<(i32, i32), InputError> {
        let small = |v: i64| {
            i32::try_from(v).map_err(|_| InputError(format!("azimuthal index {v} out of range")))
        };
        match self.detectors.as_deref() {
            Some([m1, m2]) => Ok((small(*m1)?, small(*m2)?)),
            Some(v) => Err(InputError(format!("grid needs 2 detector azimuths, got {}", v.len()))),
            None => Ok((1, -1)),
        }
    }
}

fn mode_pair(v: &[i64], what: &str) -> Result<ModeIndex, InputError> {
    match v {
        [n, m] => Ok(ModeIndex::new(*n, *m)?),
        _ => Err(InputError(format!("{what} needs 2 integers, got {}", v.len()))),
    }
}

/// A comma-separated integer list from the command line.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Ints(pub Vec<i64>);

/// `"2,0"` or `"2 0"` into integers.
pub fn parse_ints(s: &str) -> Result<Ints, String> {
    s.split(|c: char| c == ',' || c.is_whitespace())
        .filter(|t| !t.is_empty())
        .map(|t| t.parse::<i64>().map_err(|e| format!("{t:?}: {e}")))
        .collect::<Result<Vec<_>, _>>()
        .map(Ints)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flags_override_file() {
        let file: RunConfig =
            serde_json::from_str(r#"{"command": "grid", "sigma_r": 0.5, "n_max": 7}"#).unwrap();
        let flags = RunConfig { sigma_r: Some(0.1), ..Default::default() };
        let r = file.overlay(flags).resolve().unwrap();
        assert_eq!(r.params.sigma_r, 0.1);
        assert_eq!(r.n_max, 7);
        assert_eq!(r.command, Command::Grid);
    }

    #[test]
    fn unknown_fields_are_rejected() {
        assert!(serde_json::from_str::<RunConfig>(r#"{"sigma": 0.1}"#).is_err());
    }

    #[test]
    fn bad_values_are_input_errors() {
        let c = RunConfig { command: Some(Command::Grid), sigma_r: Some(-1.0), ..Default::default() };
        assert!(c.resolve().is_err());
        let c = RunConfig { command: Some(Command::Grid), ao_mode: Some("full".into()), ..Default::default() };
        assert!(c.resolve().is_err());
        let c = RunConfig { command: Some(Command::Prob), pump: Some(vec![2, 1]), ..Default::default() };
        assert!(c.resolve().is_err());
    }

    #[test]
    fn integer_lists() {
        assert_eq!(parse_ints("2,0").unwrap().0, vec![2, 0]);
        assert_eq!(parse_ints("1, 1,1,-1").unwrap().0, vec![1, 1, 1, -1]);
        assert!(parse_ints("1,x").is_err());
    }
}
