//! Experiment configuration and its validation.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use herzlab::grid::Grid;
use herzlab::norms::ExponentVector;
use herzlab::HerzError;

/// Everything that determines the output of one run. The output directory is not part
/// of it, so identical configurations hash and serialize identically wherever they run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub grid: GridSpec,
    pub seed: u64,
    pub pipeline: Pipeline,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub dim: usize,
    /// Half-width `R`; `None` picks the default grid for `dim`.
    pub extent: Option<f64>,
    pub points: Option<usize>,
}

impl GridSpec {
    pub fn build(&self) -> Result<Grid, HerzError> {
        let desk = Grid::desk(self.dim)?;
        Grid::new(
            self.dim,
            self.extent.unwrap_or(desk.extent()),
            self.points.unwrap_or(desk.points_per_axis()),
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "command", rename_all = "lowercase", deny_unknown_fields)]
pub enum Pipeline {
    Norms {
        function: String,
        p: Vec<f64>,
        alpha: f64,
        q: f64,
        k_min: Option<i32>,
        k_max: Option<i32>,
    },
    Maximal {
        function: String,
        p: Vec<f64>,
        kernel: String,
        a: f64,
        b: f64,
        n: Option<usize>,
        j: Option<u32>,
        max_factor: f64,
    },
    Decompose {
        function: String,
        alpha: f64,
        q: f64,
        p: Vec<f64>,
        s: Option<usize>,
        eps: f64,
        k_min: Option<i32>,
        k_max: Option<i32>,
        restricted: bool,
    },
    Molecule {
        gamma: f64,
        width: f64,
        alpha: f64,
        q: f64,
        p: Vec<f64>,
        s: Option<usize>,
        eps: Option<f64>,
    },
    Operator {
        kernel: String,
        alpha: f64,
        q: f64,
        p: Vec<f64>,
        s: Option<usize>,
        delta: Option<f64>,
        scales: Vec<i32>,
        factor: f64,
    },
    Duality {
        function: String,
        alpha: f64,
        p: Vec<f64>,
        s: Option<usize>,
        radii: Vec<f64>,
        tol: f64,
    },
    Suite {
        refine: bool,
        criteria: Vec<u32>,
    },
}

impl Pipeline {
    pub fn command(&self) -> &'static str {
        match self {
            Self::Norms { .. } => "norms",
            Self::Maximal { .. } => "maximal",
            Self::Decompose { .. } => "decompose",
            Self::Molecule { .. } => "molecule",
            Self::Operator { .. } => "operator",
            Self::Duality { .. } => "duality",
            Self::Suite { .. } => "suite",
        }
    }
}

/// A configuration problem tied to one named field.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub field: String,
    pub message: String,
}

impl ConfigError {
    pub fn new(field: impl Into<String>, message: impl Into<String>) -> Self {
        Self {
            field: field.into(),
            message: message.into(),
        }
    }

    /// Attributes a core error to the field it names, or to `fallback`.
    pub fn from_core(e: HerzError, fallback: &str) -> Self {
        let field = match &e {
            HerzError::InvalidParameter { field, .. } => (*field).to_string(),
            HerzError::InvalidGrid(_) => "grid".into(),
            HerzError::ShellRange { .. } => "k_range".into(),
            HerzError::Window(_) => "alpha".into(),
            _ => fallback.into(),
        };
        Self::new(field, e.to_string())
    }

    /// `{"error":"invalid_config","field":...,"message":...}` on one line.
    pub fn to_json_line(&self) -> String {
        serde_json::json!({
            "error": "invalid_config",
            "field": self.field,
            "message": self.message,
        })
        .to_string()
    }
}

/// Parses `"2"`, `"2,3"` or `"2 3"` into an exponent list.
pub fn parse_p(raw: &str) -> Result<Vec<f64>, ConfigError> {
    let parts: Vec<&str> = raw
        .split(|c: char| c == ',' || c.is_whitespace())
        .filter(|s| !s.is_empty())
        .collect();
    if parts.is_empty() {
        return Err(ConfigError::new("p", "empty exponent vector"));
    }
    parts
        .iter()
        .map(|s| {
            s.parse::<f64>().map_err(|_| {
                ConfigError::new("p", format!("cannot parse exponent `{s}` in `{raw}`"))
            })
        })
        .collect()
}

/// Builds the exponent vector and checks it against the grid dimension.
pub fn exponents(p: &[f64], grid: &Grid) -> Result<ExponentVector, ConfigError> {
    let p = if p.len() == 1 && grid.dim() == 2 {
        vec![p[0]; 2]
    } else {
        p.to_vec()
    };
    let v = ExponentVector::new(p).map_err(|e| ConfigError::from_core(e, "p"))?;
    v.check_grid(grid)
        .map_err(|e| ConfigError::new("p", e.to_string()))?;
    Ok(v)
}

impl ExperimentConfig {
    /// Canonical JSON of the configuration.
    pub fn canonical_json(&self) -> String {
        let v = serde_json::to_value(self).expect("config serializes");
        serde_json::to_string(&v).expect("value serializes")
    }

    /// Git-style content hash: `sha256("blob <len>\0<canonical json>")`.
    pub fn content_hash(&self) -> String {
        let body = self.canonical_json();
        let mut h = Sha256::new();
        h.update(format!("blob {}\0", body.len()).as_bytes());
        h.update(body.as_bytes());
        hex::encode(h.finalize())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn p_parsing() {
        assert_eq!(parse_p("2").unwrap(), vec![2.0]);
        assert_eq!(parse_p("2,3").unwrap(), vec![2.0, 3.0]);
        assert_eq!(parse_p(" 1.5  4 ").unwrap(), vec![1.5, 4.0]);
        assert_eq!(parse_p("2,x").unwrap_err().field, "p");
        assert_eq!(parse_p("").unwrap_err().field, "p");
    }

    #[test]
    fn exponents_follow_the_grid() {
        let g2 = Grid::new(2, 4.0, 17).unwrap();
        assert_eq!(exponents(&[3.0], &g2).unwrap().as_slice(), &[3.0, 3.0]);
        let g1 = Grid::new(1, 4.0, 17).unwrap();
        assert_eq!(exponents(&[2.0, 3.0], &g1).unwrap_err().field, "p");
        assert_eq!(exponents(&[0.5], &g1).unwrap_err().field, "p");
    }

    #[test]
    fn hash_is_stable_and_sensitive() {
        let cfg = ExperimentConfig {
            grid: GridSpec {
                dim: 1,
                extent: None,
                points: None,
            },
            seed: 1,
            pipeline: Pipeline::Suite {
                refine: true,
                criteria: vec![],
            },
        };
        let h = cfg.content_hash();
        assert_eq!(h.len(), 64);
        assert_eq!(h, cfg.clone().content_hash());
        let other = ExperimentConfig { seed: 2, ..cfg };
        assert_ne!(h, other.content_hash());
    }

    #[test]
    fn config_json_round_trip() {
        let cfg = ExperimentConfig {
            grid: GridSpec {
                dim: 2,
                extent: Some(4.0),
                points: Some(65),
            },
            seed: 7,
            pipeline: Pipeline::Duality {
                function: "square".into(),
                alpha: 0.5,
                p: vec![2.0],
                s: None,
                radii: vec![0.5, 1.0],
                tol: 1e-3,
            },
        };
        let back: ExperimentConfig = serde_json::from_str(&cfg.canonical_json()).unwrap();
        assert_eq!(back, cfg);
    }
}
