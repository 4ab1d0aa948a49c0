//! Column-density profiles, space-time matrices, region statistics, and the
//! density-range (contrast) series derived from them.

use thiserror::Error;

use crate::lattice::Region;
use crate::simulation::{Recorder, SimState};

#[derive(Debug, Error, PartialEq)]
pub enum MeasureError {
    #[error("column subset is empty")]
    EmptyColumns,
    #[error("region holds no cells")]
    EmptyRegion,
}

/// Particle counts per lattice column at one sampled step.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DensityProfile {
    pub step: u64,
    pub counts: Vec<u32>,
}

/// Time-ordered column-density samples, one per `sample_interval` steps.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DensityRecord {
    pub sample_interval: u64,
    pub profiles: Vec<DensityProfile>,
}

/// Mean particles-per-cell over a region at one step; bounded by [0, 1]
/// thanks to the one-particle-per-cell exclusion rule.
#[derive(Debug, Clone, PartialEq)]
pub struct RegionStat {
    pub region: Region,
    pub mean_density: f64,
    pub step: u64,
}

/// Count particles per column: `counts[x]` = particles whose cell column is `x`.
pub fn column_density(state: &SimState) -> DensityProfile {
    let mut counts = vec![0u32; state.field().dims().width() as usize];
    for p in state.particles() {
        let (x, _) = p.cell();
        counts[x as usize] += 1;
    }
    DensityProfile {
        step: state.step_count(),
        counts,
    }
}

/// `max - min` of the counts over the selected columns (all by default).
pub fn density_range(
    profile: &DensityProfile,
    columns: Option<&[u32]>,
) -> Result<u32, MeasureError> {
    let mut it: Box<dyn Iterator<Item = u32>> = match columns {
        None => Box::new(profile.counts.iter().copied()),
        Some(cols) => {
            if cols.is_empty() {
                return Err(MeasureError::EmptyColumns);
            }
            Box::new(cols.iter().map(|&c| profile.counts[c as usize]))
        }
    };
    let first = it.next().ok_or(MeasureError::EmptyColumns)?;
    let (mut lo, mut hi) = (first, first);
    for v in it {
        lo = lo.min(v);
        hi = hi.max(v);
    }
    Ok(hi - lo)
}

/// Mean particle density over the region's cells.
pub fn region_mean(state: &SimState, region: &Region) -> Result<RegionStat, MeasureError> {
    if region.is_empty() {
        return Err(MeasureError::EmptyRegion);
    }
    let inside = state
        .particles()
        .iter()
        .filter(|p| {
            let (x, y) = p.cell();
            region.contains(x, y)
        })
        .count();
    Ok(RegionStat {
        region: region.clone(),
        mean_density: inside as f64 / region.cell_count() as f64,
        step: state.step_count(),
    })
}

/// Stacked profiles: row `i` is sample `i`'s counts, time proceeding
/// downward. No resampling or smoothing.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SpacetimeMatrix {
    pub width: usize,
    pub rows: Vec<Vec<u32>>,
}

impl SpacetimeMatrix {
    /// Linear min-max normalization to 0-255 for image export; a flat
    /// matrix maps to all zeros.
    pub fn to_grey_bytes(&self) -> Vec<u8> {
        let lo = self
            .rows
            .iter()
            .flat_map(|r| r.iter().copied())
            .min()
            .unwrap_or(0);
        let hi = self
            .rows
            .iter()
            .flat_map(|r| r.iter().copied())
            .max()
            .unwrap_or(0);
        let span = (hi - lo) as f64;
        self.rows
            .iter()
            .flat_map(|r| r.iter())
            .map(|&v| {
                if span == 0.0 {
                    0
                } else {
                    ((v - lo) as f64 * 255.0 / span).round() as u8
                }
            })
            .collect()
    }
}

pub fn spacetime_matrix(record: &DensityRecord) -> SpacetimeMatrix {
    let width = record.profiles.first().map_or(0, |p| p.counts.len());
    SpacetimeMatrix {
        width,
        rows: record.profiles.iter().map(|p| p.counts.clone()).collect(),
    }
}

/// Per-sample `(step, density_range)` over all columns, in time order.
pub fn contrast_series(record: &DensityRecord) -> Vec<(u64, u32)> {
    record
        .profiles
        .iter()
        .map(|p| {
            (
                p.step,
                density_range(p, None).expect("profiles have full width"),
            )
        })
        .collect()
}

/// Recorder accumulating a [`DensityRecord`].
pub struct DensityRecorder {
    record: DensityRecord,
}

impl DensityRecorder {
    pub fn new(sample_interval: u64) -> Self {
        DensityRecorder {
            record: DensityRecord {
                sample_interval,
                profiles: Vec::new(),
            },
        }
    }

    pub fn into_record(self) -> DensityRecord {
        self.record
    }

    pub fn record(&self) -> &DensityRecord {
        &self.record
    }
}

impl Recorder for DensityRecorder {
    fn observe(&mut self, state: &SimState) {
        self.record.profiles.push(column_density(state));
    }
}

/// Recorder capturing 0/255 occupancy snapshots at chosen steps (which must
/// coincide with sample times to be seen).
pub struct SnapshotRecorder {
    wanted: Vec<u64>,
    snapshots: Vec<(u64, Vec<u8>)>,
}

impl SnapshotRecorder {
    pub fn new(mut wanted: Vec<u64>) -> Self {
        wanted.sort_unstable();
        wanted.dedup();
        SnapshotRecorder {
            wanted,
            snapshots: Vec::new(),
        }
    }

    pub fn snapshots(&self) -> &[(u64, Vec<u8>)] {
        &self.snapshots
    }
}

impl Recorder for SnapshotRecorder {
    fn observe(&mut self, state: &SimState) {
        if self.wanted.binary_search(&state.step_count()).is_ok() {
            let bytes = state
                .occupancy()
                .cells()
                .iter()
                .map(|&c| if c == crate::lattice::EMPTY { 0 } else { 255 })
                .collect();
            self.snapshots.push((state.step_count(), bytes));
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::agents::AgentParams;
    use crate::lattice::{CellRect, GridDims};
    use crate::simulation::{HabitabilitySpec, SimConfig, SimState};
    use crate::stimulus::StimulusSchedule;
    use proptest::prelude::*;

    fn state_with(particles: usize, seed: u64) -> SimState {
        SimState::init(&SimConfig {
            dims: GridDims::new(30, 10).unwrap(),
            habitability: HabitabilitySpec::Full,
            particle_count: particles,
            agent_params: AgentParams::default(),
            schedule: StimulusSchedule::empty(),
            seed,
            total_steps: 0,
            sample_interval: 10,
        })
        .unwrap()
    }

    #[test]
    fn column_density_counts_cells() {
        let state = state_with(0, 1);
        let profile = column_density(&state);
        assert!(profile.counts.iter().all(|&c| c == 0));
        assert_eq!(profile.counts.len(), 30);

        let state = state_with(25, 2);
        let profile = column_density(&state);
        assert_eq!(profile.counts.iter().sum::<u32>(), 25);
    }

    #[test]
    fn density_range_examples() {
        let p = DensityProfile {
            step: 0,
            counts: vec![2, 7, 4],
        };
        assert_eq!(density_range(&p, None).unwrap(), 5);

        let uniform = DensityProfile {
            step: 0,
            counts: vec![3; 10],
        };
        assert_eq!(density_range(&uniform, None).unwrap(), 0);

        assert_eq!(density_range(&p, Some(&[0, 2])).unwrap(), 2);
        assert_eq!(density_range(&p, Some(&[])), Err(MeasureError::EmptyColumns));
    }

    #[test]
    fn region_mean_bounds() {
        let state = state_with(0, 3);
        let region = Region::rect(CellRect::new(0, 0, 10, 10));
        assert_eq!(region_mean(&state, &region).unwrap().mean_density, 0.0);

        // Fully packed lattice: every region reads 1.0.
        let state = state_with(300, 4);
        let stat = region_mean(&state, &region).unwrap();
        assert_eq!(stat.mean_density, 1.0);

        let empty = Region::new(vec![]);
        assert_eq!(
            region_mean(&state, &empty),
            Err(MeasureError::EmptyRegion)
        );
    }

    #[test]
    fn spacetime_rows_mirror_profiles() {
        let record = DensityRecord {
            sample_interval: 10,
            profiles: vec![
                DensityProfile { step: 0, counts: vec![1, 2, 3] },
                DensityProfile { step: 10, counts: vec![4, 5, 6] },
            ],
        };
        let m = spacetime_matrix(&record);
        assert_eq!(m.width, 3);
        assert_eq!(m.rows, vec![vec![1, 2, 3], vec![4, 5, 6]]);

        let single = DensityRecord {
            sample_interval: 10,
            profiles: vec![DensityProfile { step: 0, counts: vec![9, 9] }],
        };
        assert_eq!(spacetime_matrix(&single).rows, vec![vec![9, 9]]);
    }

    #[test]
    fn spacetime_normalization() {
        let record = DensityRecord {
            sample_interval: 1,
            profiles: vec![DensityProfile { step: 0, counts: vec![10, 20, 30] }],
        };
        let bytes = spacetime_matrix(&record).to_grey_bytes();
        assert_eq!(bytes, vec![0, 128, 255]);

        let flat = DensityRecord {
            sample_interval: 1,
            profiles: vec![DensityProfile { step: 0, counts: vec![7, 7] }],
        };
        assert_eq!(spacetime_matrix(&flat).to_grey_bytes(), vec![0, 0]);
    }

    #[test]
    fn contrast_series_tracks_samples() {
        let record = DensityRecord {
            sample_interval: 10,
            profiles: vec![
                DensityProfile { step: 0, counts: vec![5, 5, 5] },
                DensityProfile { step: 10, counts: vec![2, 7, 4] },
            ],
        };
        assert_eq!(contrast_series(&record), vec![(0, 0), (10, 5)]);
    }

    proptest! {
        /// Range is invariant under column permutation and constant shifts.
        #[test]
        fn density_range_invariances(
            counts in proptest::collection::vec(0u32..1000, 1..64),
            shift in 0u32..1000,
            seed in proptest::num::u64::ANY,
        ) {
            let p = DensityProfile { step: 0, counts: counts.clone() };
            let base = density_range(&p, None).unwrap();

            let mut permuted = counts.clone();
            let mut s = seed;
            for i in (1..permuted.len()).rev() {
                s = s.wrapping_mul(6364136223846793005).wrapping_add(1);
                permuted.swap(i, (s % (i as u64 + 1)) as usize);
            }
            let pp = DensityProfile { step: 0, counts: permuted };
            prop_assert_eq!(density_range(&pp, None).unwrap(), base);

            let shifted: Vec<u32> = counts.iter().map(|&c| c + shift).collect();
            let ps = DensityProfile { step: 0, counts: shifted };
            prop_assert_eq!(density_range(&ps, None).unwrap(), base);
        }

        /// Every profile of a live record sums to the particle count.
        #[test]
        fn profile_sums_to_population(particles in 0usize..200, seed in proptest::num::u64::ANY) {
            let state = state_with(particles, seed);
            let profile = column_density(&state);
            prop_assert_eq!(profile.counts.iter().sum::<u32>() as usize, particles);
        }
    }
}
