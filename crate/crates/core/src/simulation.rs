//! Seeded simulation state and the per-step scheduler.
//!
//! One scheduler step executes, in this frozen order:
//!
//! 1. project active stimuli into the field;
//! 2. build the sensitivity and deposition maps for this step;
//! 3. shuffle particle indices with one Fisher-Yates pass;
//! 4. for each particle in shuffled order: draw its sensor offset, read
//!    sensors, steer, then attempt the motor step (sensory then motor per
//!    particle);
//! 5. run the diffusion/damping pass;
//! 6. increment the step counter.
//!
//! RNG draw order per step: `particle_count - 1` shuffle draws, then per
//! particle one offset draw, at most one steering coin, and at most one
//! collision-heading draw. All draws come from the single [`SimRng`]
//! stream, so identical `(config, seed)` replays bit-identically.

use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::agents::{self, AgentParams, MotorOutcome, Particle};
use crate::lattice::{
    diffuse_and_damp_into, ChemoField, DiffusionScratch, GridDims, HabitabilityMask, LatticeError,
    OccupancyGrid,
};
use crate::rng::SimRng;
use crate::stimulus::{StimulusError, StimulusSchedule};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error(transparent)]
    Lattice(#[from] LatticeError),
    #[error(transparent)]
    Stimulus(#[from] StimulusError),
    #[error("{particles} particles exceed the {habitable} habitable cells")]
    TooManyParticles { particles: usize, habitable: usize },
    #[error("agent params invalid: {0}")]
    BadAgentParams(String),
    #[error("sample_interval must be at least 1")]
    ZeroSampleInterval,
}

/// Habitability layout of the arena.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HabitabilitySpec {
    /// Every cell habitable; both axes periodic.
    Full,
    /// `wall_rows` inhabitable rows at top and bottom, columns periodic.
    Tube { wall_rows: u32 },
}

impl HabitabilitySpec {
    pub fn build(&self, dims: GridDims) -> Result<HabitabilityMask, LatticeError> {
        match *self {
            HabitabilitySpec::Full => Ok(HabitabilityMask::full(dims)),
            HabitabilitySpec::Tube { wall_rows } => HabitabilityMask::tube(dims, wall_rows),
        }
    }
}

/// Full description of one run.
#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub dims: GridDims,
    pub habitability: HabitabilitySpec,
    pub particle_count: usize,
    pub agent_params: AgentParams,
    pub schedule: StimulusSchedule,
    pub seed: u64,
    pub total_steps: u64,
    pub sample_interval: u64,
}

impl SimConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        let mask = self.habitability.build(self.dims)?;
        if self.particle_count > mask.habitable_count() {
            return Err(ConfigError::TooManyParticles {
                particles: self.particle_count,
                habitable: mask.habitable_count(),
            });
        }
        let p = &self.agent_params;
        if p.sensor_offset_min < 1 {
            return Err(ConfigError::BadAgentParams(
                "sensor_offset_min must be >= 1".into(),
            ));
        }
        if p.sensor_offset_max < p.sensor_offset_min {
            return Err(ConfigError::BadAgentParams(
                "sensor_offset_max must be >= sensor_offset_min".into(),
            ));
        }
        if p.step_size.is_nan() || p.step_size <= 0.0 {
            return Err(ConfigError::BadAgentParams("step_size must be > 0".into()));
        }
        if p.deposit.is_nan() || p.deposit < 0.0 {
            return Err(ConfigError::BadAgentParams("deposit must be >= 0".into()));
        }
        if self.sample_interval == 0 {
            return Err(ConfigError::ZeroSampleInterval);
        }
        self.schedule.validate(self.dims)?;
        Ok(())
    }
}

/// Per-step bookkeeping used by the invariant checks and the draw-order
/// contract tests.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct StepStats {
    /// Mass added by stimulus projection this step.
    pub stimulus_mass: f64,
    /// Mass deposited by moving particles this step.
    pub deposit_mass: f64,
    pub moved: u32,
    pub blocked: u32,
    /// Steering coin draws consumed (rule-2 readings).
    pub steer_draws: u32,
    /// Total RNG words consumed by this step.
    pub rng_draws: u64,
}

#[derive(Debug, Error, PartialEq)]
pub enum InvariantViolation {
    #[error("occupancy has {occupied} occupied cells but {particles} particles")]
    OccupancyCount { occupied: usize, particles: usize },
    #[error("particle {id} at cell ({x},{y}) does not match occupancy entry {entry:?}")]
    OccupancyMismatch {
        id: u32,
        x: u32,
        y: u32,
        entry: Option<u32>,
    },
    #[error("particle {id} occupies inhabitable cell ({x},{y})")]
    ParticleInWall { id: u32, x: u32, y: u32 },
    #[error("particle {id} has out-of-range position or heading")]
    BadParticleState { id: u32 },
    #[error("field holds a negative value {value} at ({x},{y})")]
    NegativeField { x: u32, y: u32, value: f64 },
    #[error("inhabitable cell ({x},{y}) holds {value} after diffusion")]
    WallNotSink { x: u32, y: u32, value: f64 },
}

/// Complete simulation state; supports deterministic replay from
/// `(config, seed)`.
#[derive(Debug, Clone)]
pub struct SimState {
    step: u64,
    field: ChemoField,
    occupancy: OccupancyGrid,
    mask: HabitabilityMask,
    particles: Vec<Particle>,
    rng: SimRng,
    params: AgentParams,
    // Reused per-step buffers.
    field_back: ChemoField,
    scratch: DiffusionScratch,
    order: Vec<u32>,
}

impl SimState {
    /// Build the initial state: zero field, particles placed on uniformly
    /// drawn habitable unoccupied cells (rejection sampling over the whole
    /// lattice), positioned at cell centers, headings uniform in [0, 360).
    ///
    /// Draw order per particle, in id order: cell draws until an empty
    /// habitable cell comes up, then one heading draw.
    pub fn init(config: &SimConfig) -> Result<Self, ConfigError> {
        config.validate()?;
        let dims = config.dims;
        let mask = config.habitability.build(dims)?;
        let mut rng = SimRng::new(config.seed);
        let mut occupancy = OccupancyGrid::empty(dims);
        let mut particles = Vec::with_capacity(config.particle_count);
        let w = dims.width();

        for id in 0..config.particle_count as u32 {
            let (cx, cy) = loop {
                let cell = rng.index_below(dims.cell_count());
                let x = (cell % w as usize) as u32;
                let y = (cell / w as usize) as u32;
                if mask.is_habitable(x, y) && occupancy.is_empty_cell(x, y) {
                    break (x, y);
                }
            };
            occupancy.place(cx, cy, id);
            particles.push(Particle {
                id,
                x: cx as f64 + 0.5,
                y: cy as f64 + 0.5,
                heading: rng.angle_deg(),
            });
        }

        Ok(SimState {
            step: 0,
            field: ChemoField::zeros(dims),
            occupancy,
            mask,
            particles,
            rng,
            params: config.agent_params,
            field_back: ChemoField::zeros(dims),
            scratch: DiffusionScratch::new(dims),
            order: (0..config.particle_count as u32).collect(),
        })
    }

    pub fn step_count(&self) -> u64 {
        self.step
    }

    pub fn field(&self) -> &ChemoField {
        &self.field
    }

    pub fn occupancy(&self) -> &OccupancyGrid {
        &self.occupancy
    }

    pub fn mask(&self) -> &HabitabilityMask {
        &self.mask
    }

    pub fn particles(&self) -> &[Particle] {
        &self.particles
    }

    pub fn params(&self) -> &AgentParams {
        &self.params
    }

    pub fn rng_draws(&self) -> u64 {
        self.rng.draw_count()
    }

    /// Execute one scheduler step.
    pub fn step(&mut self, schedule: &StimulusSchedule) -> StepStats {
        let draws_before = self.rng.draw_count();
        let mut stats = StepStats::default();
        let dims = self.field.dims();

        // (1) Stimuli. The schedule was validated at init; a dimension
        // mismatch here means the caller swapped schedules mid-run.
        stats.stimulus_mass = schedule
            .project(self.step, &mut self.field)
            .expect("schedule validated against lattice dims at init");

        // (2) Attenuation maps for this step.
        let sensitivity = schedule.sensitivity_map(self.step, dims);
        let deposition = schedule.deposition_map(self.step, dims);

        // (3) One shuffle pass.
        self.rng.shuffle(&mut self.order);

        // (4) Sensory then motor, per particle, in shuffled order.
        let params = self.params;
        for &idx in &self.order {
            let p = &mut self.particles[idx as usize];
            let offset = self
                .rng
                .int_in(params.sensor_offset_min, params.sensor_offset_max);
            let reading =
                agents::read_sensors(p, &self.field, &self.mask, &params, offset, &sensitivity);
            let rng = &mut self.rng;
            let mut steer_draws = 0u32;
            p.heading = agents::steer(p.heading, &reading, params.rotation_angle, || {
                steer_draws += 1;
                rng.coin()
            });
            stats.steer_draws += steer_draws;
            let rng = &mut self.rng;
            match agents::motor_step(
                p,
                &mut self.occupancy,
                &self.mask,
                &mut self.field,
                &params,
                &deposition,
                || rng.angle_deg(),
            ) {
                MotorOutcome::Moved { deposited } => {
                    stats.moved += 1;
                    stats.deposit_mass += deposited;
                }
                MotorOutcome::Blocked => stats.blocked += 1,
            }
        }

        // (5) Diffuse and damp into the back buffer, then swap.
        diffuse_and_damp_into(&self.field, &self.mask, &mut self.scratch, &mut self.field_back);
        std::mem::swap(&mut self.field, &mut self.field_back);

        // (6) Advance the clock.
        self.step += 1;
        stats.rng_draws = self.rng.draw_count() - draws_before;

        #[cfg(debug_assertions)]
        self.verify_invariants().expect("step invariant violated");

        stats
    }

    /// Check the structural invariants: occupancy/particle bijection,
    /// exclusion, habitability, field non-negativity, wall-as-sink.
    pub fn verify_invariants(&self) -> Result<(), InvariantViolation> {
        let dims = self.field.dims();
        if self.occupancy.occupied_count() != self.particles.len() {
            return Err(InvariantViolation::OccupancyCount {
                occupied: self.occupancy.occupied_count(),
                particles: self.particles.len(),
            });
        }
        for p in &self.particles {
            if !(0.0..dims.width() as f64).contains(&p.x)
                || !(0.0..dims.height() as f64).contains(&p.y)
                || !(0.0..360.0).contains(&p.heading)
            {
                return Err(InvariantViolation::BadParticleState { id: p.id });
            }
            let (x, y) = p.cell();
            if !self.mask.is_habitable(x, y) {
                return Err(InvariantViolation::ParticleInWall { id: p.id, x, y });
            }
            if self.occupancy.occupant(x, y) != Some(p.id) {
                return Err(InvariantViolation::OccupancyMismatch {
                    id: p.id,
                    x,
                    y,
                    entry: self.occupancy.occupant(x, y),
                });
            }
        }
        for y in 0..dims.height() {
            for x in 0..dims.width() {
                let v = self.field.get(x, y);
                if v < 0.0 {
                    return Err(InvariantViolation::NegativeField { x, y, value: v });
                }
                if !self.mask.is_habitable(x, y) && v != 0.0 {
                    return Err(InvariantViolation::WallNotSink { x, y, value: v });
                }
            }
        }
        Ok(())
    }

    /// SHA-256 over the canonical little-endian encoding of
    /// (field values row-major, then per particle in id order: x, y,
    /// heading). This is the golden-regression quantity.
    pub fn digest(&self) -> [u8; 32] {
        let mut hasher = Sha256::new();
        for v in self.field.values() {
            hasher.update(v.to_le_bytes());
        }
        for p in &self.particles {
            hasher.update(p.x.to_le_bytes());
            hasher.update(p.y.to_le_bytes());
            hasher.update(p.heading.to_le_bytes());
        }
        hasher.finalize().into()
    }

    pub fn digest_hex(&self) -> String {
        self.digest().iter().map(|b| format!("{b:02x}")).collect()
    }
}

/// Observes the state after init and after every `sample_interval`-th step.
pub trait Recorder {
    fn observe(&mut self, state: &SimState);
}

/// Run a config to completion, feeding every recorder at sample times.
pub fn run(
    config: &SimConfig,
    recorders: &mut [&mut dyn Recorder],
) -> Result<SimState, ConfigError> {
    let mut state = SimState::init(config)?;
    for r in recorders.iter_mut() {
        r.observe(&state);
    }
    for t in 1..=config.total_steps {
        state.step(&config.schedule);
        if t % config.sample_interval == 0 {
            for r in recorders.iter_mut() {
                r.observe(&state);
            }
        }
    }
    Ok(state)
}
