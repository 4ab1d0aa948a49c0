//! Canned experiment definitions, parameter resolution, and deterministic
//! file outputs (CSV / PGM / manifest).
//!
//! Every run resolves to an [`ExperimentParams`] value first; the manifest
//! records that value in full (all defaults expanded), so feeding a manifest
//! back through the config loader reproduces the run bit for bit.

use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::agents::AgentParams;
use crate::config;
use crate::lattice::{CellRect, GridDims, Region};
use crate::measurement::{
    contrast_series, spacetime_matrix, DensityRecord, DensityRecorder, SnapshotRecorder,
};
use crate::pgm;
use crate::rng::RNG_ALGORITHM;
use crate::simulation::{self, ConfigError, HabitabilitySpec, SimConfig};
use crate::stimulus::{
    build_chevreul, build_sbc, chevreul_bar_columns, sbc_band_columns, StimulusEvent,
    StimulusImage, StimulusKind, StimulusSchedule, UNIFORM_MAGNITUDE,
};

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("config: {0}")]
    BadParams(String),
    #[error("config parse: {0}")]
    Parse(#[from] config::ParseError),
    #[error("i/o on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
}

impl RunError {
    /// Process exit code: 2 for configuration problems, 3 for I/O.
    pub fn exit_code(&self) -> u8 {
        match self {
            RunError::Io { .. } => 3,
            _ => 2,
        }
    }
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> RunError + '_ {
    move |source| RunError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// The four canned experiments plus fully user-specified runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExperimentKind {
    Li,
    La,
    Chevreul,
    Sbc,
    Custom,
}

impl ExperimentKind {
    pub fn name(&self) -> &'static str {
        match self {
            ExperimentKind::Li => "li",
            ExperimentKind::La => "la",
            ExperimentKind::Chevreul => "chevreul",
            ExperimentKind::Sbc => "sbc",
            ExperimentKind::Custom => "custom",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        match name {
            "li" => Some(ExperimentKind::Li),
            "la" => Some(ExperimentKind::La),
            "chevreul" => Some(ExperimentKind::Chevreul),
            "sbc" => Some(ExperimentKind::Sbc),
            "custom" => Some(ExperimentKind::Custom),
            _ => None,
        }
    }
}

/// Stimulus parameterization prior to resolution.
#[derive(Debug, Clone, PartialEq)]
pub enum StimSpec {
    Uniform {
        /// `None` derives the middle-third-of-habitable-rows rectangle.
        rect: Option<(u32, u32, u32, u32)>,
        magnitude: f64,
    },
    Adverse {
        rect: Option<(u32, u32, u32, u32)>,
    },
    Chevreul {
        n_bars: u32,
        border_width: u32,
        min_brightness: u8,
        max_brightness: u8,
    },
    Sbc {
        left_brightness: u8,
        right_brightness: u8,
        band_brightness: u8,
        band_width: u32,
    },
    ImageFile {
        path: PathBuf,
    },
    None,
}

impl StimSpec {
    pub fn kind_name(&self) -> Option<&'static str> {
        match self {
            StimSpec::Uniform { .. } => Some("uniform-attractant"),
            StimSpec::Adverse { .. } => Some("adverse"),
            StimSpec::Chevreul { .. } | StimSpec::Sbc { .. } | StimSpec::ImageFile { .. } => {
                Some("image-attractant")
            }
            StimSpec::None => None,
        }
    }

    pub fn kind_matches(&self, name: &str) -> bool {
        self.kind_name() == Some(name)
    }
}

/// Every knob of a run, with concrete values. Canned defaults come from
/// [`ExperimentParams::defaults`]; config files and `--override` pairs
/// mutate this struct before [`resolve`](ExperimentParams::resolve).
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentParams {
    pub kind: ExperimentKind,
    pub seed: u64,
    pub width: u32,
    pub height: u32,
    pub habitability: HabitabilitySpec,
    pub particle_count: usize,
    pub total_steps: u64,
    pub sample_interval: u64,
    pub agent_params: AgentParams,
    pub stim: StimSpec,
    pub stimulus_start: u64,
    /// `None` means "until total_steps".
    pub stimulus_end: Option<u64>,
    /// `None` derives per-kind defaults at resolve time.
    pub snapshot_steps: Option<Vec<u64>>,
    pub profile_steps: Option<Vec<u64>>,
    pub contrast_truncate: Option<u64>,
}

impl ExperimentParams {
    pub fn defaults(kind: ExperimentKind, seed: u64) -> Self {
        let base = ExperimentParams {
            kind,
            seed,
            width: 300,
            height: 100,
            habitability: HabitabilitySpec::Tube { wall_rows: 1 },
            particle_count: 8000,
            total_steps: 20_000,
            sample_interval: 10,
            agent_params: AgentParams::default(),
            stim: StimSpec::None,
            stimulus_start: 0,
            stimulus_end: None,
            snapshot_steps: None,
            profile_steps: None,
            contrast_truncate: None,
        };
        match kind {
            ExperimentKind::Li => ExperimentParams {
                stim: StimSpec::Uniform {
                    rect: None,
                    magnitude: UNIFORM_MAGNITUDE,
                },
                stimulus_start: 500,
                stimulus_end: Some(4000),
                ..base
            },
            ExperimentKind::La => ExperimentParams {
                stim: StimSpec::Adverse { rect: None },
                stimulus_start: 500,
                stimulus_end: Some(2500),
                total_steps: 18_000,
                ..base
            },
            ExperimentKind::Chevreul => ExperimentParams {
                width: 692,
                height: 288,
                habitability: HabitabilitySpec::Full,
                particle_count: 169_402,
                total_steps: 4000,
                stim: StimSpec::Chevreul {
                    n_bars: 8,
                    border_width: 50,
                    min_brightness: 25,
                    max_brightness: 200,
                },
                contrast_truncate: Some(550),
                ..base
            },
            ExperimentKind::Sbc => ExperimentParams {
                width: 600,
                height: 300,
                habitability: HabitabilitySpec::Full,
                particle_count: 153_000,
                total_steps: 800,
                stim: StimSpec::Sbc {
                    left_brightness: 64,
                    right_brightness: 192,
                    band_brightness: 128,
                    band_width: 60,
                },
                ..base
            },
            ExperimentKind::Custom => ExperimentParams {
                habitability: HabitabilitySpec::Full,
                particle_count: 1000,
                total_steps: 1000,
                ..base
            },
        }
    }

    /// Middle-third columns over the full-width habitable rows.
    fn middle_third_rect(&self, mask_rows: (u32, u32)) -> (u32, u32, u32, u32) {
        (self.width / 3, mask_rows.0, 2 * self.width / 3, mask_rows.1)
    }

    /// Build the runnable spec: stimulus image/region, schedule, derived
    /// measurement geometry, and the validated `SimConfig`.
    pub fn resolve(&self) -> Result<ExperimentSpec, RunError> {
        let dims = GridDims::new(self.width, self.height).map_err(ConfigError::Lattice)?;
        let mask = self
            .habitability
            .build(dims)
            .map_err(ConfigError::Lattice)?;
        let end = self.stimulus_end.unwrap_or(self.total_steps);

        let mut stimulus_region = None;
        let mut bar_columns = Vec::new();
        let mut band_columns = None;
        let mut stimulus_image = None;

        let event_kind = match &self.stim {
            StimSpec::Uniform { rect, magnitude } => {
                let r = rect.unwrap_or_else(|| self.middle_third_rect(mask.habitable_row_range()));
                let region = Region::rect(CellRect::new(r.0, r.1, r.2, r.3));
                stimulus_region = Some(region.clone());
                Some(StimulusKind::UniformAttractant {
                    region,
                    magnitude: *magnitude,
                })
            }
            StimSpec::Adverse { rect } => {
                let r = rect.unwrap_or_else(|| self.middle_third_rect(mask.habitable_row_range()));
                let region = Region::rect(CellRect::new(r.0, r.1, r.2, r.3));
                stimulus_region = Some(region.clone());
                Some(StimulusKind::Adverse { region })
            }
            StimSpec::Chevreul {
                n_bars,
                border_width,
                min_brightness,
                max_brightness,
            } => {
                let image = build_chevreul(
                    dims,
                    *n_bars,
                    *border_width,
                    *min_brightness,
                    *max_brightness,
                )
                .map_err(ConfigError::Stimulus)?;
                bar_columns = chevreul_bar_columns(dims, *n_bars, *border_width);
                stimulus_image = Some(image.clone());
                Some(StimulusKind::ImageAttractant { image })
            }
            StimSpec::Sbc {
                left_brightness,
                right_brightness,
                band_brightness,
                band_width,
            } => {
                let image = build_sbc(
                    dims,
                    *left_brightness,
                    *right_brightness,
                    *band_brightness,
                    *band_width,
                )
                .map_err(ConfigError::Stimulus)?;
                band_columns = Some(sbc_band_columns(dims, *band_width));
                stimulus_image = Some(image.clone());
                Some(StimulusKind::ImageAttractant { image })
            }
            StimSpec::ImageFile { path } => {
                let image = StimulusImage::read_pgm_file(path).map_err(ConfigError::Stimulus)?;
                stimulus_image = Some(image.clone());
                Some(StimulusKind::ImageAttractant { image })
            }
            StimSpec::None => None,
        };

        let schedule = StimulusSchedule::new(
            event_kind
                .map(|kind| StimulusEvent {
                    kind,
                    start_step: self.stimulus_start,
                    end_step: end,
                })
                .into_iter()
                .collect(),
        );

        let snapshot_steps = self.snapshot_steps.clone().unwrap_or_else(|| match self.kind {
            ExperimentKind::Chevreul => vec![400, self.total_steps],
            ExperimentKind::Sbc => vec![700],
            _ => vec![self.total_steps],
        });
        let profile_steps = self.profile_steps.clone().unwrap_or_else(|| match self.kind {
            ExperimentKind::Chevreul => vec![400, self.total_steps],
            ExperimentKind::Sbc => vec![700],
            _ => vec![],
        });

        let config = SimConfig {
            dims,
            habitability: self.habitability,
            particle_count: self.particle_count,
            agent_params: self.agent_params,
            schedule,
            seed: self.seed,
            total_steps: self.total_steps,
            sample_interval: self.sample_interval,
        };
        config.validate()?;

        Ok(ExperimentSpec {
            params: self.clone(),
            config,
            stimulus_region,
            bar_columns,
            band_columns,
            stimulus_image,
            snapshot_steps,
            profile_steps,
            contrast_truncate: self.contrast_truncate,
        })
    }
}

/// A resolved, validated experiment ready to execute.
#[derive(Debug, Clone)]
pub struct ExperimentSpec {
    pub params: ExperimentParams,
    pub config: SimConfig,
    /// Region of the uniform/adverse stimulus, when one exists.
    pub stimulus_region: Option<Region>,
    /// Per-bar column ranges for the staircase stimulus.
    pub bar_columns: Vec<(u32, u32)>,
    /// Left and right band column ranges for the two-square stimulus.
    pub band_columns: Option<((u32, u32), (u32, u32))>,
    pub stimulus_image: Option<StimulusImage>,
    pub snapshot_steps: Vec<u64>,
    pub profile_steps: Vec<u64>,
    pub contrast_truncate: Option<u64>,
}

pub fn make_li_experiment(seed: u64) -> ExperimentSpec {
    ExperimentParams::defaults(ExperimentKind::Li, seed)
        .resolve()
        .expect("canned li defaults are valid")
}

pub fn make_la_experiment(seed: u64) -> ExperimentSpec {
    ExperimentParams::defaults(ExperimentKind::La, seed)
        .resolve()
        .expect("canned la defaults are valid")
}

pub fn make_chevreul_experiment(seed: u64) -> ExperimentSpec {
    ExperimentParams::defaults(ExperimentKind::Chevreul, seed)
        .resolve()
        .expect("canned chevreul defaults are valid")
}

pub fn make_sbc_experiment(seed: u64) -> ExperimentSpec {
    ExperimentParams::defaults(ExperimentKind::Sbc, seed)
        .resolve()
        .expect("canned sbc defaults are valid")
}

/// Ordered key/value listing sufficient to bit-reproduce the run, plus the
/// checksums of every artifact written.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunManifest {
    pub entries: Vec<(String, String)>,
}

impl RunManifest {
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (k, v) in &self.entries {
            writeln!(out, "{k} = {v}").expect("string write");
        }
        out
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
    }
}

fn steps_list(steps: &[u64]) -> String {
    steps
        .iter()
        .map(|s| s.to_string())
        .collect::<Vec<_>>()
        .join(",")
}

/// Resolved-parameter listing written to the manifest; this is exactly the
/// key set the config loader accepts back.
pub fn params_entries(spec: &ExperimentSpec) -> Vec<(String, String)> {
    let p = &spec.params;
    let mut e: Vec<(String, String)> = Vec::new();
    let mut push = |k: &str, v: String| e.push((k.to_string(), v));

    push("experiment", p.kind.name().to_string());
    push("seed", p.seed.to_string());
    push("dims.width", p.width.to_string());
    push("dims.height", p.height.to_string());
    match p.habitability {
        HabitabilitySpec::Full => push("habitability", "full".to_string()),
        HabitabilitySpec::Tube { wall_rows } => {
            push("habitability", "tube".to_string());
            push("habitability.wall_rows", wall_rows.to_string());
        }
    }
    push("particle_count", p.particle_count.to_string());
    push("total_steps", p.total_steps.to_string());
    push("sample_interval", p.sample_interval.to_string());
    let a = &p.agent_params;
    push("agent_params.sensor_angle", a.sensor_angle.to_string());
    push("agent_params.rotation_angle", a.rotation_angle.to_string());
    push("agent_params.sensor_offset_min", a.sensor_offset_min.to_string());
    push("agent_params.sensor_offset_max", a.sensor_offset_max.to_string());
    push("agent_params.step_size", a.step_size.to_string());
    push("agent_params.deposit", a.deposit.to_string());

    if let Some(kind) = p.stim.kind_name() {
        push("stimulus.kind", kind.to_string());
    }
    match &p.stim {
        StimSpec::Uniform { magnitude, .. } => {
            if let Some(r) = &spec.stimulus_region {
                let rect = r.rects()[0];
                push(
                    "stimulus.rect",
                    format!("{},{},{},{}", rect.x0, rect.y0, rect.x1, rect.y1),
                );
            }
            push("stimulus.magnitude", magnitude.to_string());
        }
        StimSpec::Adverse { .. } => {
            if let Some(r) = &spec.stimulus_region {
                let rect = r.rects()[0];
                push(
                    "stimulus.rect",
                    format!("{},{},{},{}", rect.x0, rect.y0, rect.x1, rect.y1),
                );
            }
        }
        StimSpec::Chevreul {
            n_bars,
            border_width,
            min_brightness,
            max_brightness,
        } => {
            push("chevreul.n_bars", n_bars.to_string());
            push("chevreul.border_width", border_width.to_string());
            push("chevreul.min_brightness", min_brightness.to_string());
            push("chevreul.max_brightness", max_brightness.to_string());
        }
        StimSpec::Sbc {
            left_brightness,
            right_brightness,
            band_brightness,
            band_width,
        } => {
            push("sbc.left_brightness", left_brightness.to_string());
            push("sbc.right_brightness", right_brightness.to_string());
            push("sbc.band_brightness", band_brightness.to_string());
            push("sbc.band_width", band_width.to_string());
        }
        StimSpec::ImageFile { path } => {
            push("stimulus.image", path.display().to_string());
        }
        StimSpec::None => {}
    }
    if !matches!(p.stim, StimSpec::None) {
        push("stimulus.start_step", p.stimulus_start.to_string());
        push(
            "stimulus.end_step",
            p.stimulus_end.unwrap_or(p.total_steps).to_string(),
        );
    }
    push("snapshots", steps_list(&spec.snapshot_steps));
    push("profiles", steps_list(&spec.profile_steps));
    if let Some(t) = spec.contrast_truncate {
        push("contrast_truncate", t.to_string());
    }
    e
}

fn sha256_hex(bytes: &[u8]) -> String {
    let mut hasher = Sha256::new();
    hasher.update(bytes);
    hasher
        .finalize()
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

fn density_csv(record: &DensityRecord) -> Vec<u8> {
    let width = record.profiles.first().map_or(0, |p| p.counts.len());
    let mut out = String::new();
    out.push_str("step");
    for x in 0..width {
        let _ = write!(out, ",x{x}");
    }
    out.push('\n');
    for p in &record.profiles {
        let _ = write!(out, "{}", p.step);
        for c in &p.counts {
            let _ = write!(out, ",{c}");
        }
        out.push('\n');
    }
    out.into_bytes()
}

fn contrast_csv(series: &[(u64, u32)]) -> Vec<u8> {
    let mut out = String::from("step,range\n");
    for (step, range) in series {
        let _ = writeln!(out, "{step},{range}");
    }
    out.into_bytes()
}

fn profile_csv(counts: &[u32]) -> Vec<u8> {
    let mut out = String::from("x,count\n");
    for (x, c) in counts.iter().enumerate() {
        let _ = writeln!(out, "{x},{c}");
    }
    out.into_bytes()
}

/// Render the stimulus pattern as an image: uniform/adverse regions paint
/// 255, image stimuli contribute their brightness; overlaps take the max.
fn stimulus_pgm(spec: &ExperimentSpec) -> Vec<u8> {
    let dims = spec.config.dims;
    let mut pixels = vec![0u8; dims.cell_count()];
    for ev in &spec.config.schedule.events {
        match &ev.kind {
            StimulusKind::UniformAttractant { region, .. } | StimulusKind::Adverse { region } => {
                for (x, y) in region.cells() {
                    pixels[dims.idx(x, y)] = 255;
                }
            }
            StimulusKind::ImageAttractant { image } => {
                for (px, &b) in pixels.iter_mut().zip(image.pixels()) {
                    *px = (*px).max(b);
                }
            }
        }
    }
    let mut buf = Vec::new();
    pgm::write_p5(&mut buf, dims.width(), dims.height(), &pixels).expect("vec write");
    buf
}

/// Run the experiment and write all artifacts into `out_dir`:
/// `density.csv`, `contrast.csv` (plus a truncated view when configured),
/// `spacetime.pgm`, `snapshot_t{N}.pgm`, `profile_t{N}.csv`,
/// `stimulus.pgm`, and `manifest.txt`, all byte-deterministic for a fixed
/// `(spec, seed)`.
pub fn execute(spec: &ExperimentSpec, out_dir: &Path) -> Result<RunManifest, RunError> {
    fs::create_dir_all(out_dir).map_err(io_err(out_dir))?;

    let mut density = DensityRecorder::new(spec.config.sample_interval);
    let mut snapshots = SnapshotRecorder::new(spec.snapshot_steps.clone());
    simulation::run(&spec.config, &mut [&mut density, &mut snapshots])?;
    let record = density.into_record();
    let series = contrast_series(&record);

    let mut artifacts: Vec<(String, Vec<u8>)> = Vec::new();
    artifacts.push(("density.csv".into(), density_csv(&record)));
    artifacts.push(("contrast.csv".into(), contrast_csv(&series)));
    if let Some(cut) = spec.contrast_truncate {
        let truncated: Vec<(u64, u32)> =
            series.iter().copied().filter(|(s, _)| *s <= cut).collect();
        artifacts.push((format!("contrast_t{cut}.csv"), contrast_csv(&truncated)));
    }

    let matrix = spacetime_matrix(&record);
    let mut st = Vec::new();
    pgm::write_p5(
        &mut st,
        matrix.width as u32,
        matrix.rows.len() as u32,
        &matrix.to_grey_bytes(),
    )
    .expect("vec write");
    artifacts.push(("spacetime.pgm".into(), st));

    for (step, bytes) in snapshots.snapshots() {
        let mut buf = Vec::new();
        pgm::write_p5(
            &mut buf,
            spec.config.dims.width(),
            spec.config.dims.height(),
            bytes,
        )
        .expect("vec write");
        artifacts.push((format!("snapshot_t{step}.pgm"), buf));
    }

    for &step in &spec.profile_steps {
        if let Some(p) = record.profiles.iter().find(|p| p.step == step) {
            artifacts.push((format!("profile_t{step}.csv"), profile_csv(&p.counts)));
        }
    }

    artifacts.push(("stimulus.pgm".into(), stimulus_pgm(spec)));

    let mut entries = params_entries(spec);
    entries.push(("rng.algorithm".to_string(), RNG_ALGORITHM.to_string()));
    for (name, bytes) in &artifacts {
        let path = out_dir.join(name);
        fs::write(&path, bytes).map_err(io_err(&path))?;
        entries.push((format!("artifact.{name}"), format!("sha256:{}", sha256_hex(bytes))));
    }
    let manifest = RunManifest { entries };
    let path = out_dir.join("manifest.txt");
    fs::write(&path, manifest.to_text()).map_err(io_err(&path))?;
    Ok(manifest)
}
