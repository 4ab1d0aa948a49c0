//! Timed spatial stimuli and the Chevreul / brightness-contrast test images.
//!
//! Three stimulus kinds exist: uniform attractant over a cell region,
//! greyscale-image attractant over the whole lattice, and adverse
//! (simulated irradiation) over a region. Adverse stimuli never touch the
//! field; they attenuate sensor sensitivity and deposition to 0.2 while
//! active. Events are active on the half-open step interval
//! `[start_step, end_step)`.

use std::fs;
use std::io;
use std::path::Path;

use thiserror::Error;

use crate::lattice::{ChemoField, GridDims, MultiplierMap, Region};
use crate::pgm;

/// Units added per step per cell by a uniform attractant stimulus.
pub const UNIFORM_MAGNITUDE: f64 = 1.275;
/// Scale from image pixel brightness to attractant units per step.
pub const IMAGE_SCALE: f64 = 0.01;
/// Sensitivity/deposition multiplier inside an active adverse region.
pub const ADVERSE_FACTOR: f64 = 0.2;

#[derive(Debug, Error)]
pub enum StimulusError {
    #[error("event region exceeds the {}x{} lattice", dims.width(), dims.height())]
    RegionOutOfBounds { dims: GridDims },
    #[error("stimulus image is {img_w}x{img_h} but the lattice is {lat_w}x{lat_h}")]
    ImageDimsMismatch {
        img_w: u32,
        img_h: u32,
        lat_w: u32,
        lat_h: u32,
    },
    #[error("event has start_step {start} > end_step {end}")]
    BadWindow { start: u64, end: u64 },
    #[error("image too small: {0}")]
    ImageTooSmall(String),
    #[error("brightness bounds must differ between the two squares")]
    EqualSquares,
    #[error("band width {band} exceeds half width {half}")]
    BandTooWide { band: u32, half: u32 },
    #[error("uniform stimulus magnitude {0} must be finite and >= 0")]
    NegativeMagnitude(f64),
    #[error("failed to read {path}: {source}")]
    ImageRead {
        path: String,
        #[source]
        source: io::Error,
    },
    #[error("bad stimulus image {path}: {source}")]
    ImageDecode {
        path: String,
        #[source]
        source: pgm::PgmError,
    },
}

/// Greyscale stimulus image; brightness 0-255 per cell.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StimulusImage {
    dims: GridDims,
    pixels: Vec<u8>,
}

impl StimulusImage {
    pub fn new(dims: GridDims, pixels: Vec<u8>) -> Self {
        assert_eq!(pixels.len(), dims.cell_count());
        StimulusImage { dims, pixels }
    }

    pub fn dims(&self) -> GridDims {
        self.dims
    }

    #[inline]
    pub fn brightness(&self, x: u32, y: u32) -> u8 {
        self.pixels[self.dims.idx(x, y)]
    }

    pub fn pixels(&self) -> &[u8] {
        &self.pixels
    }

    pub fn write_pgm(&self, w: &mut impl io::Write, ascii: bool) -> io::Result<()> {
        if ascii {
            pgm::write_p2(w, self.dims.width(), self.dims.height(), &self.pixels)
        } else {
            pgm::write_p5(w, self.dims.width(), self.dims.height(), &self.pixels)
        }
    }

    /// Load from a P5/P2 PGM file.
    pub fn read_pgm_file(path: &Path) -> Result<Self, StimulusError> {
        let data = fs::read(path).map_err(|source| StimulusError::ImageRead {
            path: path.display().to_string(),
            source,
        })?;
        let img = pgm::read(&mut &data[..]).map_err(|source| StimulusError::ImageDecode {
            path: path.display().to_string(),
            source,
        })?;
        let dims = GridDims::new(img.width, img.height).map_err(|_| {
            StimulusError::ImageTooSmall(format!("{}x{}", img.width, img.height))
        })?;
        Ok(StimulusImage::new(dims, img.pixels))
    }
}

/// What an event does while active.
#[derive(Debug, Clone, PartialEq)]
pub enum StimulusKind {
    /// Add `magnitude` units to every cell of `region` each step.
    UniformAttractant { region: Region, magnitude: f64 },
    /// Add `brightness(cell) * 0.01` units to every cell each step.
    ImageAttractant { image: StimulusImage },
    /// Attenuate sensing and deposition to 0.2 inside `region`.
    Adverse { region: Region },
}

/// One timed stimulus, active while `start_step <= t < end_step`.
#[derive(Debug, Clone, PartialEq)]
pub struct StimulusEvent {
    pub kind: StimulusKind,
    pub start_step: u64,
    pub end_step: u64,
}

impl StimulusEvent {
    #[inline]
    pub fn active_at(&self, step: u64) -> bool {
        self.start_step <= step && step < self.end_step
    }
}

/// Ordered list of events; applied in list order each step.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct StimulusSchedule {
    pub events: Vec<StimulusEvent>,
}

impl StimulusSchedule {
    pub fn empty() -> Self {
        StimulusSchedule { events: Vec::new() }
    }

    pub fn new(events: Vec<StimulusEvent>) -> Self {
        StimulusSchedule { events }
    }

    /// Check every event against the lattice before a run starts.
    pub fn validate(&self, dims: GridDims) -> Result<(), StimulusError> {
        for ev in &self.events {
            if ev.start_step > ev.end_step {
                return Err(StimulusError::BadWindow {
                    start: ev.start_step,
                    end: ev.end_step,
                });
            }
            match &ev.kind {
                StimulusKind::UniformAttractant { region, magnitude } => {
                    if !region.fits(dims) {
                        return Err(StimulusError::RegionOutOfBounds { dims });
                    }
                    if !magnitude.is_finite() || *magnitude < 0.0 {
                        return Err(StimulusError::NegativeMagnitude(*magnitude));
                    }
                }
                StimulusKind::Adverse { region } => {
                    if !region.fits(dims) {
                        return Err(StimulusError::RegionOutOfBounds { dims });
                    }
                }
                StimulusKind::ImageAttractant { image } => {
                    if image.dims() != dims {
                        return Err(StimulusError::ImageDimsMismatch {
                            img_w: image.dims().width(),
                            img_h: image.dims().height(),
                            lat_w: dims.width(),
                            lat_h: dims.height(),
                        });
                    }
                }
            }
        }
        Ok(())
    }

    /// Add every active attractant contribution for `step` to the field.
    /// Returns the total mass added. Adverse events add nothing.
    pub fn project(&self, step: u64, field: &mut ChemoField) -> Result<f64, StimulusError> {
        let dims = field.dims();
        let mut added = 0.0;
        for ev in &self.events {
            if !ev.active_at(step) {
                continue;
            }
            match &ev.kind {
                StimulusKind::UniformAttractant { region, magnitude } => {
                    if !region.fits(dims) {
                        return Err(StimulusError::RegionOutOfBounds { dims });
                    }
                    for (x, y) in region.cells() {
                        field.add(x, y, *magnitude);
                        added += *magnitude;
                    }
                }
                StimulusKind::ImageAttractant { image } => {
                    if image.dims() != dims {
                        return Err(StimulusError::ImageDimsMismatch {
                            img_w: image.dims().width(),
                            img_h: image.dims().height(),
                            lat_w: dims.width(),
                            lat_h: dims.height(),
                        });
                    }
                    for (v, &b) in field.values_mut().iter_mut().zip(image.pixels()) {
                        let inc = b as f64 * IMAGE_SCALE;
                        *v += inc;
                        added += inc;
                    }
                }
                StimulusKind::Adverse { .. } => {}
            }
        }
        Ok(added)
    }

    /// 0.2 at cells covered by any active adverse event, 1.0 elsewhere.
    /// Overlapping adverse regions clamp at 0.2 (attenuation is a state,
    /// not a dose).
    pub fn sensitivity_map(&self, step: u64, dims: GridDims) -> MultiplierMap {
        self.adverse_map(step, dims)
    }

    /// Deposition attenuation; identical construction to `sensitivity_map`.
    pub fn deposition_map(&self, step: u64, dims: GridDims) -> MultiplierMap {
        self.adverse_map(step, dims)
    }

    fn adverse_map(&self, step: u64, dims: GridDims) -> MultiplierMap {
        let active: Vec<&Region> = self
            .events
            .iter()
            .filter(|ev| ev.active_at(step))
            .filter_map(|ev| match &ev.kind {
                StimulusKind::Adverse { region } => Some(region),
                _ => None,
            })
            .collect();
        if active.is_empty() {
            return MultiplierMap::uniform(dims);
        }
        let mut values = vec![1.0; dims.cell_count()];
        for region in active {
            for (x, y) in region.cells() {
                values[dims.idx(x, y)] = ADVERSE_FACTOR;
            }
        }
        MultiplierMap::from_values(dims, values)
    }
}

/// Build the staircase image: zero-brightness border bars of `border_width`
/// at the left and right, interior split into `n_bars` equal-width vertical
/// bars (leftover columns go to the rightmost bar), bar `k` at brightness
/// `round(min + k * (max - min) / (n_bars - 1))`.
pub fn build_chevreul(
    dims: GridDims,
    n_bars: u32,
    border_width: u32,
    min_brightness: u8,
    max_brightness: u8,
) -> Result<StimulusImage, StimulusError> {
    if n_bars < 2 {
        return Err(StimulusError::ImageTooSmall(format!(
            "need at least 2 bars, got {n_bars}"
        )));
    }
    let interior = dims
        .width()
        .checked_sub(2 * border_width)
        .filter(|&w| w >= n_bars)
        .ok_or_else(|| {
            StimulusError::ImageTooSmall(format!(
                "width {} cannot hold 2x{border_width} borders plus {n_bars} bars",
                dims.width()
            ))
        })?;
    let bar_width = interior / n_bars;

    let mut row = vec![0u8; dims.width() as usize];
    let span = max_brightness as f64 - min_brightness as f64;
    for k in 0..n_bars {
        let b = (min_brightness as f64 + k as f64 * span / (n_bars - 1) as f64).round() as u8;
        let x0 = border_width + k * bar_width;
        let x1 = if k == n_bars - 1 {
            dims.width() - border_width
        } else {
            x0 + bar_width
        };
        for x in x0..x1 {
            row[x as usize] = b;
        }
    }

    let mut pixels = Vec::with_capacity(dims.cell_count());
    for _ in 0..dims.height() {
        pixels.extend_from_slice(&row);
    }
    Ok(StimulusImage::new(dims, pixels))
}

/// Per-bar column ranges `[x0, x1)` of the Chevreul interior, left to right.
pub fn chevreul_bar_columns(dims: GridDims, n_bars: u32, border_width: u32) -> Vec<(u32, u32)> {
    let interior = dims.width() - 2 * border_width;
    let bar_width = interior / n_bars;
    (0..n_bars)
        .map(|k| {
            let x0 = border_width + k * bar_width;
            let x1 = if k == n_bars - 1 {
                dims.width() - border_width
            } else {
                x0 + bar_width
            };
            (x0, x1)
        })
        .collect()
}

/// Build the two-square brightness-contrast image: the left half uniformly
/// `left_brightness`, the right half `right_brightness`, and a
/// `band_width`-wide vertical band of `band_brightness` centered in each
/// half. The two bands are pixel-identical by construction.
pub fn build_sbc(
    dims: GridDims,
    left_brightness: u8,
    right_brightness: u8,
    band_brightness: u8,
    band_width: u32,
) -> Result<StimulusImage, StimulusError> {
    if left_brightness == right_brightness {
        return Err(StimulusError::EqualSquares);
    }
    let half = dims.width() / 2;
    if band_width > half {
        return Err(StimulusError::BandTooWide {
            band: band_width,
            half,
        });
    }
    let (left_band, right_band) = sbc_band_columns(dims, band_width);

    let mut row = vec![0u8; dims.width() as usize];
    for x in 0..dims.width() {
        let in_left_band = x >= left_band.0 && x < left_band.1;
        let in_right_band = x >= right_band.0 && x < right_band.1;
        row[x as usize] = if in_left_band || in_right_band {
            band_brightness
        } else if x < half {
            left_brightness
        } else {
            right_brightness
        };
    }

    let mut pixels = Vec::with_capacity(dims.cell_count());
    for _ in 0..dims.height() {
        pixels.extend_from_slice(&row);
    }
    Ok(StimulusImage::new(dims, pixels))
}

/// Column ranges `[x0, x1)` of the left and right bands.
pub fn sbc_band_columns(dims: GridDims, band_width: u32) -> ((u32, u32), (u32, u32)) {
    let half = dims.width() / 2;
    let pad = (half - band_width) / 2;
    ((pad, pad + band_width), (half + pad, half + pad + band_width))
}
