//! Declarative scene configs and task execution.
//!
//! A scene is a JSON document with unit-suffixed keys (`_mm`, `_ghz`,
//! `_deg`); everything is converted to SI on load. Unknown keys are
//! rejected. Task outputs are byte-stable: identical configs produce
//! identical CSVs regardless of thread count.

use crate::channel::{optimize_placements, placement_report, AxisSegment, LinkSpec};
use crate::error::{Error, Result};
use crate::geometry::Shape;
use crate::metrics::{compare, ingest_measurement, main_lobe, normalize, side_lobes, Cut1D};
use crate::radiator::{azimuth_cut, directivity_pattern, equivalent_currents, full_pattern, CurrentSet, DirectivityMap};
use crate::waveguide::{incident_field, mode_constants, SignalSpec, WaveguideModel};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::fs;
use std::io::BufReader;
use std::path::{Path, PathBuf};
use std::time::Instant;

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct SceneConfig {
    pub signal: SignalCfg,
    pub waveguide: WaveguideCfg,
    pub pa: PaCfg,
    pub sampling: SamplingCfg,
    pub tasks: Vec<TaskCfg>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct SignalCfg {
    pub f_ghz: f64,
    #[serde(default = "default_amplitude")]
    pub amplitude: f64,
}

fn default_amplitude() -> f64 {
    1.0
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct WaveguideCfg {
    pub axis_point_m: [f64; 3],
    pub axis_direction: [f64; 3],
    pub radius_mm: f64,
    pub n_g: f64,
    #[serde(default)]
    pub feed_s_mm: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct PaCfg {
    pub shape: ShapeCfg,
    #[serde(default)]
    pub rotation_deg: f64,
    #[serde(default)]
    pub translation_m: [f64; 3],
    pub eps_r: f64,
    pub polarization: [f64; 3],
    #[serde(default)]
    pub depletion_per_mm: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ShapeCfg {
    Square {
        side_mm: f64,
        thickness_mm: f64,
    },
    Triangle {
        side_mm: f64,
        thickness_mm: f64,
    },
    Arc {
        outer_radius_mm: f64,
        #[serde(default = "default_inner_radius_mm")]
        inner_radius_mm: f64,
        #[serde(default = "default_span_deg")]
        span_deg: f64,
        #[serde(default)]
        rotation_deg: f64,
        thickness_mm: f64,
    },
    Polygon {
        vertices_mm: Vec<[f64; 2]>,
        thickness_mm: f64,
    },
}

// The reference arc geometry leaves the sector under-specified; these
// defaults are assumptions and are config-visible.
fn default_inner_radius_mm() -> f64 {
    9.0
}

fn default_span_deg() -> f64 {
    90.0
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct SamplingCfg {
    pub voxel_mm: f64,
    pub n_theta: usize,
    pub n_phi: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(tag = "type", rename_all = "kebab-case", deny_unknown_fields)]
pub enum TaskCfg {
    /// Full-sphere directivity map -> pattern.csv
    Pattern,
    /// Azimuth cut + lobe report -> cut_theta{N}.csv, lobes.txt
    Cut {
        #[serde(default = "default_theta_deg")]
        theta_deg: f64,
    },
    /// Arc rotation sweep -> one cut CSV per alpha + sweep_summary.csv
    SweepArc { alpha_list_deg: Vec<f64> },
    /// PA placement search -> beamform.txt
    Beamform {
        segment_m: [[f64; 3]; 2],
        m: usize,
        grid_mm: f64,
        user_xyz_m: [f64; 3],
        power_w: f64,
    },
    /// Measured-vs-simulated comparison -> compare.txt
    Compare {
        measured_csv: String,
        #[serde(default = "default_window_db")]
        window_db: f64,
    },
}

fn default_theta_deg() -> f64 {
    90.0
}

fn default_window_db() -> f64 {
    -10.0
}

/// Parses a scene config, reporting the JSON path of the offending key on
/// failure.
pub fn parse_scene(json: &str) -> Result<SceneConfig> {
    let de = &mut serde_json::Deserializer::from_str(json);
    let cfg: SceneConfig = serde_path_to_error::deserialize(de).map_err(|e| {
        Error::Config(format!("{}: {}", e.path(), e.inner()))
    })?;
    validate_scene(&cfg)?;
    Ok(cfg)
}

fn validate_scene(cfg: &SceneConfig) -> Result<()> {
    let bad = |key: &str, msg: String| Err(Error::Config(format!("{key}: {msg}")));
    if !(cfg.signal.f_ghz > 0.0) {
        return bad("signal.f_ghz", format!("must be positive, got {}", cfg.signal.f_ghz));
    }
    if !(cfg.waveguide.radius_mm > 0.0) {
        return bad(
            "waveguide.radius_mm",
            format!("must be positive, got {}", cfg.waveguide.radius_mm),
        );
    }
    if !(cfg.waveguide.n_g >= 1.0) {
        return bad(
            "waveguide.n_g",
            format!("must be >= 1 for a guided mode, got {}", cfg.waveguide.n_g),
        );
    }
    if !(cfg.pa.eps_r >= 1.0) {
        return bad("pa.eps_r", format!("must be >= 1, got {}", cfg.pa.eps_r));
    }
    if cfg.waveguide.n_g > cfg.pa.eps_r.sqrt() + 1e-12 {
        return bad(
            "waveguide.n_g",
            format!(
                "must not exceed sqrt(eps_r) = {:.4}, got {}",
                cfg.pa.eps_r.sqrt(),
                cfg.waveguide.n_g
            ),
        );
    }
    if !(cfg.sampling.voxel_mm > 0.0) {
        return bad(
            "sampling.voxel_mm",
            format!("must be positive, got {}", cfg.sampling.voxel_mm),
        );
    }
    if cfg.sampling.n_theta < 2 || cfg.sampling.n_phi < 2 {
        return bad(
            "sampling.n_theta",
            format!(
                "grid must be at least 2 x 2, got {} x {}",
                cfg.sampling.n_theta, cfg.sampling.n_phi
            ),
        );
    }
    if !(cfg.pa.depletion_per_mm >= 0.0) {
        return bad(
            "pa.depletion_per_mm",
            format!("must be non-negative, got {}", cfg.pa.depletion_per_mm),
        );
    }
    Ok(())
}

fn build_shape(cfg: &ShapeCfg, rotation_override_deg: Option<f64>) -> Result<Shape> {
    const MM: f64 = 1e-3;
    match cfg {
        ShapeCfg::Square { side_mm, thickness_mm } => {
            Shape::square(side_mm * MM, thickness_mm * MM)
        }
        ShapeCfg::Triangle { side_mm, thickness_mm } => {
            Shape::triangle(side_mm * MM, thickness_mm * MM)
        }
        ShapeCfg::Arc {
            outer_radius_mm,
            inner_radius_mm,
            span_deg,
            rotation_deg,
            thickness_mm,
        } => Shape::arc(
            outer_radius_mm * MM,
            inner_radius_mm * MM,
            span_deg.to_radians(),
            thickness_mm * MM,
            rotation_override_deg.unwrap_or(*rotation_deg).to_radians(),
        ),
        ShapeCfg::Polygon { vertices_mm, thickness_mm } => Shape::polygon(
            vertices_mm.iter().map(|v| [v[0] * MM, v[1] * MM]).collect(),
            thickness_mm * MM,
        ),
    }
}

/// Built scene, ready for task execution.
pub struct SceneContext {
    pub cfg: SceneConfig,
    pub signal: SignalSpec,
    pub waveguide: WaveguideModel,
}

impl SceneContext {
    pub fn new(cfg: SceneConfig) -> Result<SceneContext> {
        validate_scene(&cfg)?;
        let signal = SignalSpec::new(
            cfg.signal.f_ghz * 1e9,
            Complex64::new(cfg.signal.amplitude, 0.0),
        )?;
        let waveguide = WaveguideModel::new(
            cfg.waveguide.axis_point_m.into(),
            cfg.waveguide.axis_direction.into(),
            cfg.waveguide.radius_mm * 1e-3,
            cfg.waveguide.n_g,
            cfg.waveguide.feed_s_mm * 1e-3,
        )?;
        Ok(SceneContext { cfg, signal, waveguide })
    }

    /// Excitation and currents for the configured PA (optionally overriding
    /// the arc rotation angle, for sweeps).
    pub fn currents(&self, arc_rotation_deg: Option<f64>) -> Result<CurrentSet> {
        let shape = build_shape(&self.cfg.pa.shape, arc_rotation_deg)?.transformed(
            self.cfg.pa.rotation_deg.to_radians(),
            self.cfg.pa.translation_m.into(),
        );
        let mesh = shape.mesh(self.cfg.sampling.voxel_mm * 1e-3)?;
        let fields = incident_field(
            &mesh,
            &self.waveguide,
            &self.signal,
            self.cfg.pa.polarization.into(),
            self.cfg.pa.depletion_per_mm * 1e3,
        )?;
        equivalent_currents(&mesh, &fields, self.cfg.pa.eps_r, &self.signal)
    }

    pub fn directivity(&self, arc_rotation_deg: Option<f64>) -> Result<DirectivityMap> {
        let currents = self.currents(arc_rotation_deg)?;
        let pattern = full_pattern(
            &currents,
            &self.signal,
            self.cfg.sampling.n_theta,
            self.cfg.sampling.n_phi,
        )?;
        directivity_pattern(&pattern)
    }

    pub fn cut(&self, theta_deg: f64, arc_rotation_deg: Option<f64>) -> Result<Cut1D> {
        azimuth_cut(&self.directivity(arc_rotation_deg)?, theta_deg.to_radians())
    }
}

/// One executed task in the run manifest.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TaskRecord {
    pub task: String,
    pub wall_ms: f64,
    pub outputs: Vec<String>,
}

/// Run manifest: echoes the scene so a run is reproducible from the
/// manifest alone.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub scene: SceneConfig,
    pub tasks: Vec<TaskRecord>,
}

fn write_output(path: &Path, contents: &str, force: bool) -> Result<()> {
    if path.exists() && !force {
        return Err(Error::WouldOverwrite(path.display().to_string()));
    }
    fs::write(path, contents)?;
    Ok(())
}

fn lobe_text(cut: &Cut1D) -> Result<String> {
    let norm = normalize(cut);
    let report = main_lobe(&norm, -10.0)?;
    let lobes = side_lobes(&norm, 3.0, -10.0)?;
    let mut out = String::new();
    out.push_str(&format!("peak_angle_deg: {:.6}\n", report.peak_angle_deg));
    out.push_str(&format!(
        "peak_directivity_dbi: {:.6}\n",
        cut.values_db[cut.peak_index()]
    ));
    out.push_str(&format!("hpbw_deg: {:.6}\n", report.hpbw_deg));
    out.push_str(&format!(
        "main_lobe_extent_deg: {:.6} {:.6}\n",
        report.main_lobe_extent_deg.0, report.main_lobe_extent_deg.1
    ));
    out.push_str(&format!("side_lobe_count: {}\n", lobes.len()));
    for (i, (angle, level)) in lobes.iter().enumerate() {
        out.push_str(&format!(
            "side_lobe_{}: angle_deg {:.6} level_db {:.6}\n",
            i + 1,
            angle,
            level
        ));
    }
    Ok(out)
}

/// Executes every task of a parsed scene, writing artifacts into `out_dir`.
/// Returns the manifest (also written as manifest.json).
pub fn run_scene(cfg: SceneConfig, out_dir: &Path, force: bool) -> Result<Manifest> {
    fs::create_dir_all(out_dir)?;
    let ctx = SceneContext::new(cfg)?;
    let mut records = Vec::new();

    for task in ctx.cfg.tasks.clone() {
        let started = Instant::now();
        let mut outputs: Vec<PathBuf> = Vec::new();
        let name = match &task {
            TaskCfg::Pattern => {
                let map = ctx.directivity(None)?;
                let path = out_dir.join("pattern.csv");
                write_output(&path, &map.to_csv(), force)?;
                outputs.push(path);
                "pattern".to_string()
            }
            TaskCfg::Cut { theta_deg } => {
                let cut = ctx.cut(*theta_deg, None)?;
                let path = out_dir.join(format!("cut_theta{theta_deg:.0}.csv"));
                write_output(&path, &cut.to_csv(), force)?;
                outputs.push(path);
                let lobes_path = out_dir.join("lobes.txt");
                write_output(&lobes_path, &lobe_text(&cut)?, force)?;
                outputs.push(lobes_path);
                "cut".to_string()
            }
            TaskCfg::SweepArc { alpha_list_deg } => {
                if !matches!(ctx.cfg.pa.shape, ShapeCfg::Arc { .. }) {
                    return Err(Error::Config(
                        "tasks.sweep-arc: pa.shape.kind must be `arc`".into(),
                    ));
                }
                let mut summary = String::from("alpha_deg,peak_phi_deg\n");
                for &alpha in alpha_list_deg {
                    let cut = ctx.cut(90.0, Some(alpha))?;
                    let path = out_dir.join(format!("cut_alpha_{alpha:.1}.csv"));
                    write_output(&path, &cut.to_csv(), force)?;
                    outputs.push(path);
                    let peak_phi = cut.phi_deg[cut.peak_index()];
                    summary.push_str(&format!("{alpha:.6},{peak_phi:.6}\n"));
                }
                let path = out_dir.join("sweep_summary.csv");
                write_output(&path, &summary, force)?;
                outputs.push(path);
                "sweep-arc".to_string()
            }
            TaskCfg::Beamform { segment_m, m, grid_mm, user_xyz_m, power_w } => {
                let link = LinkSpec::new((*user_xyz_m).into(), ctx.signal.f_c, *power_w)?;
                let mc = mode_constants(ctx.waveguide.n_g, ctx.signal.wavelength())?;
                let segment = AxisSegment {
                    start: segment_m[0].into(),
                    end: segment_m[1].into(),
                };
                let feed = ctx.waveguide.axis_point
                    + ctx.waveguide.axis_direction * ctx.waveguide.feed_offset;
                let result =
                    optimize_placements(segment, grid_mm * 1e-3, *m, &link, feed, mc.lambda_g)?;
                let path = out_dir.join("beamform.txt");
                write_output(&path, &placement_report(&result, &link), force)?;
                outputs.push(path);
                "beamform".to_string()
            }
            TaskCfg::Compare { measured_csv, window_db } => {
                let file = fs::File::open(measured_csv)?;
                let measured = ingest_measurement(BufReader::new(file))?;
                let simulated = ctx.cut(90.0, None)?;
                let report = compare(&measured, &simulated, *window_db)?;
                let path = out_dir.join("compare.txt");
                write_output(&path, &report.to_text(), force)?;
                outputs.push(path);
                "compare".to_string()
            }
        };
        records.push(TaskRecord {
            task: name,
            wall_ms: started.elapsed().as_secs_f64() * 1e3,
            outputs: outputs.iter().map(|p| p.display().to_string()).collect(),
        });
    }

    let manifest = Manifest {
        tool: "pasim".to_string(),
        version: env!("CARGO_PKG_VERSION").to_string(),
        scene: ctx.cfg.clone(),
        tasks: records,
    };
    let manifest_json = serde_json::to_string_pretty(&manifest)
        .map_err(|e| Error::Config(format!("manifest serialization: {e}")))?;
    write_output(&out_dir.join("manifest.json"), &manifest_json, force)?;
    Ok(manifest)
}

/// Reference scene configs mirroring the studied PA geometries.
pub mod presets {
    use super::*;

    fn base(shape: ShapeCfg, tasks: Vec<TaskCfg>) -> SceneConfig {
        SceneConfig {
            signal: SignalCfg { f_ghz: 60.0, amplitude: 1.0 },
            waveguide: WaveguideCfg {
                axis_point_m: [0.0, 0.0, 0.0],
                axis_direction: [1.0, 0.0, 0.0],
                radius_mm: 1.5,
                n_g: 1.4,
                feed_s_mm: 0.0,
            },
            pa: PaCfg {
                shape,
                // a small skew breaks the mirror symmetry of an x-uniform
                // footprint, giving a unique main lobe
                rotation_deg: 15.0,
                // plate resting on top of the rod
                translation_m: [0.0, 0.0, 0.0015],
                eps_r: 2.1,
                polarization: [0.0, 1.0, 0.0],
                depletion_per_mm: 0.0,
            },
            sampling: SamplingCfg { voxel_mm: 1.0, n_theta: 91, n_phi: 180 },
            tasks,
        }
    }

    /// 12 mm square PA at 60 GHz on a 3 mm PTFE rod.
    pub fn square_scene() -> SceneConfig {
        base(
            ShapeCfg::Square { side_mm: 12.0, thickness_mm: 3.0 },
            vec![TaskCfg::Pattern, TaskCfg::Cut { theta_deg: 90.0 }],
        )
    }

    /// Regular triangular PA, side 12*sqrt(3) mm.
    pub fn triangle_scene() -> SceneConfig {
        base(
            ShapeCfg::Triangle { side_mm: 12.0 * 1.7320508075688772, thickness_mm: 3.0 },
            vec![TaskCfg::Pattern, TaskCfg::Cut { theta_deg: 90.0 }],
        )
    }

    /// Arc PA (15 mm outer radius) with the rotation-angle steering sweep.
    pub fn arc_scene() -> SceneConfig {
        let mut cfg = base(
            ShapeCfg::Arc {
                outer_radius_mm: 15.0,
                inner_radius_mm: default_inner_radius_mm(),
                span_deg: default_span_deg(),
                rotation_deg: 90.0,
                thickness_mm: 3.0,
            },
            vec![TaskCfg::SweepArc {
                alpha_list_deg: vec![60.0, 70.0, 80.0, 90.0, 100.0, 110.0, 120.0],
            }],
        );
        // sector opens toward +y; its centre sits below the axis so the
        // contact region follows the outer rim
        cfg.pa.rotation_deg = 0.0;
        cfg.pa.translation_m = [0.0, -0.012, 0.0015];
        cfg
    }
}
