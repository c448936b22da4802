//! Experiment configuration: structured TOML with nested sections, recipe
//! shorthands and dotted-path overrides.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub output_dir: PathBuf,
    pub system: SystemConfig,
    pub observation: ObservationConfig,
    pub simulate: SimulateConfig,
    pub covering: CoveringConfig,
    pub dimscan: DimscanConfig,
    pub dmaps: DmapsConfig,
    #[serde(default)]
    pub export: ExportConfig,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SystemConfig {
    Ks { mu: f64, n_modes: usize, dt: f64 },
    MackeyGlass { beta: f64, gamma: f64, eta: f64, tau: f64, dt: f64 },
    Analytic { map: String, params: Vec<f64> },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ObservationConfig {
    /// Projection onto the leading POD coefficients of a basis built at the
    /// reference parameter.
    Pod { k: usize, mu_ref: f64 },
    /// Equispaced delay samples over one delay interval.
    Delay { k: usize },
    /// States of analytic maps are observation-space points already.
    Identity,
}

impl ObservationConfig {
    pub fn k(&self) -> Option<usize> {
        match self {
            ObservationConfig::Pod { k, .. } | ObservationConfig::Delay { k } => Some(*k),
            ObservationConfig::Identity => None,
        }
    }
}

/// Trajectory generation for basis building (KS) or ensemble building (MG).
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateConfig {
    pub total_time: f64,
    pub stride: f64,
    /// Leading fraction of the run discarded as transient.
    pub transient_fraction: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CoveringMode {
    Subdivision,
    Classic,
    Sweep,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoveringConfig {
    pub mode: CoveringMode,
    /// Partition depth (number of bisections) of the final covering.
    pub depth: u32,
    /// Horizon of the time-T map driving subdivision/classic continuation.
    pub map_time: f64,
    /// Total integration time per test point in sweep mode.
    pub sweep_time: f64,
    /// Recording stride h in sweep mode; for Mackey-Glass it is also the
    /// spacing of ensemble states along the simulated trajectory.
    pub stride: f64,
    pub n_test_points: usize,
    pub points_per_box: usize,
    /// Partition level of the seed cell in classic continuation.
    pub seed_level: u32,
    /// Size of the initial perturbations around the seed state (sweep mode).
    pub perturbation: f64,
    /// Continuation seed in observation coordinates; defaults to the image
    /// of the system's distinguished steady state.
    #[serde(default)]
    pub seed_point: Option<Vec<f64>>,
    pub domain_center: Vec<f64>,
    pub domain_radius: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DimscanConfig {
    pub i_min: i32,
    pub i_max: i32,
    pub n_fine: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DmapsConfig {
    /// Kernel bandwidth; omit to use the tuned value from the dimension scan.
    #[serde(default)]
    pub epsilon: Option<f64>,
    pub alpha: f64,
    pub min_neighbors: usize,
    pub n_ev: usize,
    pub n_coords: usize,
    /// Anchor midpoints for the model (clamped to the covering size).
    pub m_anchors: usize,
    /// Extra midpoints embedded via extension.
    pub n_extend: usize,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExportConfig {
    /// Trajectory file to embed; defaults to the simulated states.
    #[serde(default)]
    pub input: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scale {
    Desk,
    Paper,
}

impl std::str::FromStr for Scale {
    type Err = anyhow::Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "desk" => Ok(Scale::Desk),
            "paper" => Ok(Scale::Paper),
            other => bail!("unknown scale `{other}` (expected desk|paper)"),
        }
    }
}

/// Desk scale divides the paper's point counts by 100 and shortens the
/// partition depth so runs fit on a workstation.
const DESK_DIVISOR: usize = 100;

/// Experiment preset for the Kuramoto-Sivashinsky unstable manifold.
pub fn recipe_ks(mu: f64, scale: Scale) -> ExperimentConfig {
    // the published bounding boxes of the embedded manifold per mu regime
    let (k, mu_ref, lo, hi): (usize, f64, Vec<f64>, Vec<f64>) = if mu >= 30.0 {
        (
            5,
            mu,
            vec![-13.0, -9.0, -6.0, -2.0, -2.0],
            vec![11.0, 9.0, 6.0, 7.0, 2.0],
        )
    } else if mu > 16.0 {
        (
            7,
            15.0,
            vec![-8.0, -8.0, -6.5, -6.0, -2.0, -2.0, -0.5],
            vec![8.0, 8.0, 6.5, 6.0, 2.0, 2.0, 0.5],
        )
    } else {
        (
            7,
            15.0,
            vec![-8.0, -8.0, -7.0, -6.0, -2.0, -2.0, -0.5],
            vec![8.0, 8.0, 7.0, 6.0, 2.0, 2.0, 0.5],
        )
    };
    let paper_depth = if mu >= 30.0 {
        45
    } else if mu > 16.0 {
        35
    } else {
        56
    };
    // desk depth is one full sweep (k bisections) deeper than counts/100
    // would suggest, so the covering still holds enough boxes to draw the
    // anchor midpoints from
    let (depth, n_test, m_anchors, n_extend) = match scale {
        Scale::Paper => (paper_depth, 100_000, 100_000, 500_000),
        Scale::Desk => (42, 100_000 / DESK_DIVISOR, 100_000 / DESK_DIVISOR, 500_000 / DESK_DIVISOR),
    };
    let center: Vec<f64> = lo.iter().zip(&hi).map(|(a, b)| 0.5 * (a + b)).collect();
    let radius: Vec<f64> = lo.iter().zip(&hi).map(|(a, b)| 0.5 * (b - a)).collect();

    ExperimentConfig {
        seed: 42,
        output_dir: PathBuf::from(format!("runs/ks_mu{mu:.2}")),
        system: SystemConfig::Ks { mu, n_modes: 128, dt: 0.05 },
        observation: ObservationConfig::Pod { k, mu_ref },
        simulate: SimulateConfig { total_time: 2000.0, stride: 0.2, transient_fraction: 0.25 },
        covering: CoveringConfig {
            mode: CoveringMode::Sweep,
            depth,
            map_time: 1.0,
            sweep_time: 800.0,
            stride: 0.2,
            n_test_points: n_test,
            points_per_box: 27,
            seed_level: k as u32,
            perturbation: 1e-4,
            seed_point: None,
            domain_center: center,
            domain_radius: radius,
        },
        dimscan: DimscanConfig { i_min: -30, i_max: 10, n_fine: 50 },
        dmaps: DmapsConfig {
            epsilon: None,
            alpha: 1.0,
            min_neighbors: 8,
            n_ev: 20,
            n_coords: 3,
            m_anchors,
            n_extend,
        },
        export: ExportConfig::default(),
    }
}

/// Experiment preset for the Mackey-Glass attractor.
pub fn recipe_mg(scale: Scale) -> ExperimentConfig {
    let (depth, m_anchors, n_test, n_extend) = match scale {
        Scale::Paper => (63, 100_000, 2_000_000, 500_000),
        Scale::Desk => (35, 5_000, 20_000, 5_000),
    };
    let stride = 0.5;
    // enough recorded trajectory for n_test ensemble windows after transient
    let record_time = stride * n_test as f64 + 10.0;
    let transient = 500.0;

    ExperimentConfig {
        seed: 42,
        output_dir: PathBuf::from("runs/mackey_glass"),
        system: SystemConfig::MackeyGlass {
            beta: 2.0,
            gamma: 1.0,
            eta: 9.65,
            tau: 2.0,
            dt: 0.02,
        },
        observation: ObservationConfig::Delay { k: 7 },
        simulate: SimulateConfig {
            total_time: record_time + transient,
            stride,
            transient_fraction: transient / (record_time + transient),
        },
        covering: CoveringConfig {
            mode: CoveringMode::Subdivision,
            depth,
            map_time: 1.0,
            sweep_time: 0.0,
            stride,
            n_test_points: n_test,
            // lifted selection maps each ensemble state at most once per
            // level, so a high cap costs nothing and keeps coarse levels
            // from starving
            points_per_box: 2000,
            seed_level: 7,
            perturbation: 1e-4,
            seed_point: None,
            domain_center: vec![0.75; 7],
            domain_radius: vec![0.75; 7],
        },
        dimscan: DimscanConfig { i_min: -30, i_max: 10, n_fine: 50 },
        dmaps: DmapsConfig {
            epsilon: None,
            alpha: 1.0,
            min_neighbors: 8,
            n_ev: 20,
            n_coords: 3,
            m_anchors,
            n_extend,
        },
        export: ExportConfig::default(),
    }
}

/// Load a config file, honoring the `recipe` shorthand and applying CLI
/// overrides. A file containing `recipe = "ks"` (plus `mu`) or
/// `recipe = "mg"` starts from the preset; explicit sections then override.
pub fn load_config(
    path: &Path,
    scale: Option<Scale>,
    seed: Option<u64>,
    overrides: &[String],
) -> Result<ExperimentConfig> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("cannot read config {}", path.display()))?;
    let mut table: toml::Table =
        text.parse().with_context(|| format!("malformed TOML in {}", path.display()))?;

    if let Some(recipe) = table.remove("recipe") {
        let name = recipe
            .as_str()
            .map(str::to_string)
            .ok_or_else(|| anyhow::anyhow!("`recipe` must be a string"))?;
        let scale = scale.unwrap_or(Scale::Desk);
        let base = match name.as_str() {
            "ks" => {
                let mu = table
                    .remove("mu")
                    .and_then(|v| v.as_float().or_else(|| v.as_integer().map(|i| i as f64)))
                    .unwrap_or(15.0);
                recipe_ks(mu, scale)
            }
            "mg" => recipe_mg(scale),
            other => bail!("unknown recipe `{other}` (expected ks|mg)"),
        };
        let mut base_table: toml::Table =
            toml::Table::try_from(&base).context("recipe serialization")?;
        merge_tables(&mut base_table, table);
        table = base_table;
    } else if scale.is_some() {
        bail!("--scale applies only to recipe-based configs");
    }

    if let Some(seed) = seed {
        table.insert("seed".into(), toml::Value::Integer(seed as i64));
    }
    for spec in overrides {
        apply_override(&mut table, spec)?;
    }
    let cfg: ExperimentConfig =
        table.try_into().context("config does not match the expected schema")?;
    validate(&cfg)?;
    Ok(cfg)
}

fn merge_tables(base: &mut toml::Table, extra: toml::Table) {
    for (key, value) in extra {
        match (base.get_mut(&key), value) {
            (Some(toml::Value::Table(bt)), toml::Value::Table(et)) => merge_tables(bt, et),
            (slot, value) => {
                if let Some(slot) = slot {
                    *slot = value;
                } else {
                    base.insert(key, value);
                }
            }
        }
    }
}

/// `section.key=value` with the value parsed as TOML.
fn apply_override(table: &mut toml::Table, spec: &str) -> Result<()> {
    let (path, raw) = spec
        .split_once('=')
        .with_context(|| format!("override `{spec}` is not of the form key=value"))?;
    let value: toml::Value = raw
        .parse()
        .or_else(|_| format!("\"{raw}\"").parse())
        .with_context(|| format!("cannot parse override value `{raw}`"))?;
    let mut cursor = table;
    let parts: Vec<&str> = path.split('.').collect();
    for part in &parts[..parts.len() - 1] {
        cursor = cursor
            .entry(part.to_string())
            .or_insert(toml::Value::Table(toml::Table::new()))
            .as_table_mut()
            .with_context(|| format!("override path `{path}` crosses a non-table"))?;
    }
    cursor.insert(parts[parts.len() - 1].to_string(), value);
    Ok(())
}

fn validate(cfg: &ExperimentConfig) -> Result<()> {
    let k = cfg.covering.domain_center.len();
    if cfg.covering.domain_radius.len() != k {
        bail!("covering domain center/radius dimensions disagree");
    }
    if let Some(obs_k) = cfg.observation.k() {
        if obs_k != k {
            bail!("observation dimension {obs_k} does not match the covering domain dimension {k}");
        }
    }
    if !cfg.covering.domain_radius.iter().all(|r| *r > 0.0) {
        bail!("covering domain radii must be positive");
    }
    if matches!(cfg.system, SystemConfig::MackeyGlass { .. })
        && !matches!(cfg.observation, ObservationConfig::Delay { .. })
    {
        bail!("Mackey-Glass runs use delay observations");
    }
    if matches!(cfg.system, SystemConfig::Ks { .. })
        && !matches!(cfg.observation, ObservationConfig::Pod { .. })
    {
        bail!("Kuramoto-Sivashinsky runs use POD observations");
    }
    Ok(())
}

/// Serialize the effective config (for `--config-dump` and hashing).
pub fn dump(cfg: &ExperimentConfig) -> String {
    toml::to_string_pretty(cfg).expect("config serializes")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn recipes_pin_the_published_constants() {
        let ks = recipe_ks(15.0, Scale::Paper);
        assert!(matches!(ks.observation, ObservationConfig::Pod { k: 7, .. }));
        assert_eq!(ks.covering.depth, 56);
        assert_eq!(ks.covering.sweep_time, 800.0);
        assert_eq!(ks.covering.stride, 0.2);
        assert_eq!(ks.covering.n_test_points, 100_000);
        assert_eq!(ks.dmaps.m_anchors, 100_000);
        assert_eq!(ks.dmaps.n_extend, 500_000);

        let desk = recipe_ks(15.0, Scale::Desk);
        assert_eq!(desk.covering.n_test_points, 1_000);
        assert_eq!(desk.covering.depth, 28);

        let oseberg = recipe_ks(32.0, Scale::Paper);
        assert!(matches!(oseberg.observation, ObservationConfig::Pod { k: 5, mu_ref } if mu_ref == 32.0));
        assert_eq!(oseberg.covering.depth, 45);

        let mg = recipe_mg(Scale::Paper);
        assert_eq!(mg.covering.depth, 63);
        assert_eq!(mg.dmaps.m_anchors, 100_000);
        let mg_desk = recipe_mg(Scale::Desk);
        assert_eq!(mg_desk.covering.depth, 35);
        assert_eq!(mg_desk.dmaps.m_anchors, 5_000);
    }

    #[test]
    fn recipe_config_roundtrips_through_toml() {
        let cfg = recipe_mg(Scale::Desk);
        let text = dump(&cfg);
        let back: ExperimentConfig = toml::from_str(&text).unwrap();
        assert_eq!(dump(&back), text);
    }

    #[test]
    fn overrides_reach_nested_fields() {
        let dir = std::env::temp_dir().join("atlas-config-test");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("cfg.toml");
        std::fs::write(&path, "recipe = \"mg\"\n").unwrap();
        let cfg = load_config(
            &path,
            Some(Scale::Desk),
            Some(7),
            &["dmaps.alpha=0.5".into(), "covering.depth=20".into()],
        )
        .unwrap();
        assert_eq!(cfg.seed, 7);
        assert_eq!(cfg.dmaps.alpha, 0.5);
        assert_eq!(cfg.covering.depth, 20);
    }
}
