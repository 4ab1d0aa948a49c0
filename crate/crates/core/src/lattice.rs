//! 2D lattice state: the chemoattractant field, particle occupancy, the
//! habitability mask, and the periodic 5x5 mean-filter diffusion pass.
//!
//! Coordinate convention (frozen for reproducibility): `x` increases
//! rightward, `y` downward; a continuous position `(x, y)` belongs to the
//! cell `(floor(x), floor(y))`. Both axes wrap periodically.
//!
//! Inhabitable cells act as chemoattractant sinks: they contribute 0 to the
//! diffusion kernel regardless of their stored value (the denominator stays
//! 25) and are zeroed in the output of every pass.

use thiserror::Error;

/// Damping factor applied to the 5x5 kernel mean once per scheduler step.
pub const DIFFUSION_DAMP: f64 = 0.95;
/// Diffusion kernel radius; the kernel spans `2r + 1 = 5` cells per axis.
pub const KERNEL_RADIUS: u32 = 2;
/// Number of cells in the diffusion kernel.
pub const KERNEL_CELLS: f64 = 25.0;

/// Occupancy slot value for an empty cell.
pub const EMPTY: u32 = u32::MAX;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum LatticeError {
    #[error("lattice dims {width}x{height} too small; the 5x5 diffusion kernel needs at least 5x5")]
    DimsTooSmall { width: u32, height: u32 },
    #[error("wall rows ({wall_rows} per side) leave no habitable rows on a height-{height} lattice")]
    WallsTooThick { wall_rows: u32, height: u32 },
}

/// Lattice extent in cells.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GridDims {
    width: u32,
    height: u32,
}

impl GridDims {
    /// Both extents must be at least 5 so the diffusion kernel fits.
    pub fn new(width: u32, height: u32) -> Result<Self, LatticeError> {
        if width < 5 || height < 5 {
            return Err(LatticeError::DimsTooSmall { width, height });
        }
        Ok(GridDims { width, height })
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn cell_count(&self) -> usize {
        self.width as usize * self.height as usize
    }

    #[inline]
    pub fn idx(&self, x: u32, y: u32) -> usize {
        debug_assert!(x < self.width && y < self.height);
        y as usize * self.width as usize + x as usize
    }
}

/// Wrap a signed cell coordinate into `[0, extent)`.
#[inline]
pub fn wrap_cell(coord: i64, extent: u32) -> u32 {
    coord.rem_euclid(extent as i64) as u32
}

/// Wrap a continuous coordinate into `[0, extent)`.
///
/// `rem_euclid` can round up to `extent` itself for tiny negative inputs;
/// that case is folded back to 0 so `cell_of` stays in range.
#[inline]
pub fn wrap_coord(coord: f64, extent: u32) -> f64 {
    let e = extent as f64;
    let r = coord.rem_euclid(e);
    if r >= e {
        0.0
    } else {
        r
    }
}

/// Cell index of an already-wrapped continuous position.
#[inline]
pub fn cell_of(x: f64, y: f64) -> (u32, u32) {
    (x as u32, y as u32)
}

/// Half-open cell rectangle `[x0, x1) x [y0, y1)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CellRect {
    pub x0: u32,
    pub y0: u32,
    pub x1: u32,
    pub y1: u32,
}

impl CellRect {
    pub fn new(x0: u32, y0: u32, x1: u32, y1: u32) -> Self {
        debug_assert!(x0 <= x1 && y0 <= y1);
        CellRect { x0, y0, x1, y1 }
    }

    #[inline]
    pub fn contains(&self, x: u32, y: u32) -> bool {
        x >= self.x0 && x < self.x1 && y >= self.y0 && y < self.y1
    }

    pub fn cell_count(&self) -> usize {
        (self.x1 - self.x0) as usize * (self.y1 - self.y0) as usize
    }
}

/// A cell mask given as a union of disjoint rectangles.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Region {
    rects: Vec<CellRect>,
}

impl Region {
    pub fn new(rects: Vec<CellRect>) -> Self {
        Region { rects }
    }

    pub fn rect(r: CellRect) -> Self {
        Region { rects: vec![r] }
    }

    pub fn rects(&self) -> &[CellRect] {
        &self.rects
    }

    #[inline]
    pub fn contains(&self, x: u32, y: u32) -> bool {
        self.rects.iter().any(|r| r.contains(x, y))
    }

    pub fn cell_count(&self) -> usize {
        self.rects.iter().map(|r| r.cell_count()).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.cell_count() == 0
    }

    /// Cells in a fixed order: rect list order, row-major within each rect.
    pub fn cells(&self) -> impl Iterator<Item = (u32, u32)> + '_ {
        self.rects
            .iter()
            .flat_map(|r| (r.y0..r.y1).flat_map(move |y| (r.x0..r.x1).map(move |x| (x, y))))
    }

    /// True if every cell lies inside `dims`.
    pub fn fits(&self, dims: GridDims) -> bool {
        self.rects
            .iter()
            .all(|r| r.x1 <= dims.width() && r.y1 <= dims.height())
    }
}

/// Non-negative chemoattractant concentration per cell.
#[derive(Debug, Clone, PartialEq)]
pub struct ChemoField {
    dims: GridDims,
    values: Vec<f64>,
}

impl ChemoField {
    pub fn zeros(dims: GridDims) -> Self {
        ChemoField {
            dims,
            values: vec![0.0; dims.cell_count()],
        }
    }

    pub fn dims(&self) -> GridDims {
        self.dims
    }

    #[inline]
    pub fn get(&self, x: u32, y: u32) -> f64 {
        self.values[self.dims.idx(x, y)]
    }

    #[inline]
    pub fn set(&mut self, x: u32, y: u32, v: f64) {
        let i = self.dims.idx(x, y);
        self.values[i] = v;
    }

    #[inline]
    pub fn add(&mut self, x: u32, y: u32, v: f64) {
        let i = self.dims.idx(x, y);
        self.values[i] += v;
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    /// Row-major sum of all cell values.
    pub fn total_mass(&self) -> f64 {
        self.values.iter().sum()
    }
}

/// One particle slot per cell; at most one particle may occupy a cell.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OccupancyGrid {
    dims: GridDims,
    cells: Vec<u32>,
}

impl OccupancyGrid {
    pub fn empty(dims: GridDims) -> Self {
        OccupancyGrid {
            dims,
            cells: vec![EMPTY; dims.cell_count()],
        }
    }

    pub fn dims(&self) -> GridDims {
        self.dims
    }

    #[inline]
    pub fn occupant(&self, x: u32, y: u32) -> Option<u32> {
        let v = self.cells[self.dims.idx(x, y)];
        if v == EMPTY {
            None
        } else {
            Some(v)
        }
    }

    #[inline]
    pub fn is_empty_cell(&self, x: u32, y: u32) -> bool {
        self.cells[self.dims.idx(x, y)] == EMPTY
    }

    pub fn place(&mut self, x: u32, y: u32, id: u32) {
        let i = self.dims.idx(x, y);
        debug_assert_eq!(self.cells[i], EMPTY, "cell ({x},{y}) already occupied");
        self.cells[i] = id;
    }

    pub fn clear(&mut self, x: u32, y: u32) {
        let i = self.dims.idx(x, y);
        debug_assert_ne!(self.cells[i], EMPTY, "clearing empty cell ({x},{y})");
        self.cells[i] = EMPTY;
    }

    pub fn occupied_count(&self) -> usize {
        self.cells.iter().filter(|&&c| c != EMPTY).count()
    }

    pub fn cells(&self) -> &[u32] {
        &self.cells
    }
}

/// Per-cell habitability; particles never occupy or enter inhabitable cells.
#[derive(Debug, Clone, PartialEq)]
pub struct HabitabilityMask {
    dims: GridDims,
    habitable: Vec<bool>,
    // 1.0 for habitable cells, 0.0 for walls; used branch-free in diffusion.
    weights: Vec<f64>,
    habitable_count: usize,
}

impl HabitabilityMask {
    pub fn full(dims: GridDims) -> Self {
        HabitabilityMask {
            dims,
            habitable: vec![true; dims.cell_count()],
            weights: vec![1.0; dims.cell_count()],
            habitable_count: dims.cell_count(),
        }
    }

    /// Tube arena: `wall_rows` inhabitable rows at the top and bottom edges,
    /// all columns open (periodic left/right).
    pub fn tube(dims: GridDims, wall_rows: u32) -> Result<Self, LatticeError> {
        if 2 * wall_rows >= dims.height() {
            return Err(LatticeError::WallsTooThick {
                wall_rows,
                height: dims.height(),
            });
        }
        let mut mask = HabitabilityMask::full(dims);
        for y in (0..wall_rows).chain(dims.height() - wall_rows..dims.height()) {
            for x in 0..dims.width() {
                let i = dims.idx(x, y);
                mask.habitable[i] = false;
                mask.weights[i] = 0.0;
            }
        }
        mask.habitable_count = mask.habitable.iter().filter(|&&h| h).count();
        Ok(mask)
    }

    pub fn dims(&self) -> GridDims {
        self.dims
    }

    #[inline]
    pub fn is_habitable(&self, x: u32, y: u32) -> bool {
        self.habitable[self.dims.idx(x, y)]
    }

    pub fn habitable_count(&self) -> usize {
        self.habitable_count
    }

    /// Rows that are habitable across the full width (for `tube` masks the
    /// interior band, for `full` masks everything).
    pub fn habitable_row_range(&self) -> (u32, u32) {
        let mut first = self.dims.height();
        let mut last = 0;
        for y in 0..self.dims.height() {
            if self.is_habitable(0, y) {
                first = first.min(y);
                last = y + 1;
            }
        }
        (first, last)
    }
}

/// Per-cell multiplier map (sensor sensitivity / deposition attenuation).
///
/// `uniform` is the common no-adverse-stimulus case and avoids a dense
/// allocation per step.
#[derive(Debug, Clone, PartialEq)]
pub struct MultiplierMap {
    dims: GridDims,
    values: Option<Vec<f64>>,
}

impl MultiplierMap {
    pub fn uniform(dims: GridDims) -> Self {
        MultiplierMap { dims, values: None }
    }

    pub fn from_values(dims: GridDims, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), dims.cell_count());
        MultiplierMap {
            dims,
            values: Some(values),
        }
    }

    #[inline]
    pub fn at(&self, x: u32, y: u32) -> f64 {
        match &self.values {
            None => 1.0,
            Some(v) => v[self.dims.idx(x, y)],
        }
    }
}

/// Concentration at the cell under a (possibly unwrapped) position; walls
/// read as 0 regardless of their stored value.
pub fn sample_field(field: &ChemoField, mask: &HabitabilityMask, x: f64, y: f64) -> f64 {
    let dims = field.dims();
    let (cx, cy) = cell_of(wrap_coord(x, dims.width()), wrap_coord(y, dims.height()));
    if mask.is_habitable(cx, cy) {
        field.get(cx, cy)
    } else {
        0.0
    }
}

/// One diffusion/damping pass: every habitable cell receives
/// `0.95 * mean(5x5 periodic neighborhood)` of the input snapshot, walls are
/// zeroed and contribute 0 to the kernel sum.
///
/// Pure function of the input; the separable two-pass implementation below
/// fixes the per-cell summation order (left-to-right, then top-to-bottom),
/// so results are bit-identical across runs and translation-equivariant on
/// fully habitable lattices.
pub fn diffuse_and_damp(field: &ChemoField, mask: &HabitabilityMask) -> ChemoField {
    assert_eq!(field.dims(), mask.dims(), "field/mask dims mismatch");
    let mut out = ChemoField::zeros(field.dims());
    let mut scratch = DiffusionScratch::new(field.dims());
    diffuse_and_damp_into(field, mask, &mut scratch, &mut out);
    out
}

/// Reusable intermediate buffers for [`diffuse_and_damp_into`].
#[derive(Debug, Clone)]
pub struct DiffusionScratch {
    masked: Vec<f64>,
    rowsum: Vec<f64>,
}

impl DiffusionScratch {
    pub fn new(dims: GridDims) -> Self {
        DiffusionScratch {
            masked: vec![0.0; dims.cell_count()],
            rowsum: vec![0.0; dims.cell_count()],
        }
    }
}

/// In-place variant used by the scheduler hot loop. `dst` must not alias
/// `src`; the pass reads only the input snapshot.
pub fn diffuse_and_damp_into(
    src: &ChemoField,
    mask: &HabitabilityMask,
    scratch: &mut DiffusionScratch,
    dst: &mut ChemoField,
) {
    let dims = src.dims();
    debug_assert_eq!(dims, mask.dims());
    debug_assert_eq!(dims, dst.dims());
    let w = dims.width() as usize;
    let h = dims.height() as usize;

    // Wall cells contribute 0 to the kernel no matter what was written there.
    for (m, (&v, &wt)) in scratch
        .masked
        .iter_mut()
        .zip(src.values().iter().zip(mask.weights.iter()))
    {
        *m = v * wt;
    }

    // Horizontal 5-tap sums, wrapped; fixed left-to-right addition order.
    for y in 0..h {
        let row = &scratch.masked[y * w..(y + 1) * w];
        let out = &mut scratch.rowsum[y * w..(y + 1) * w];
        for (x, o) in out.iter_mut().enumerate() {
            let xm2 = if x >= 2 { x - 2 } else { x + w - 2 };
            let xm1 = if x >= 1 { x - 1 } else { x + w - 1 };
            let xp1 = if x + 1 < w { x + 1 } else { x + 1 - w };
            let xp2 = if x + 2 < w { x + 2 } else { x + 2 - w };
            *o = row[xm2] + row[xm1] + row[x] + row[xp1] + row[xp2];
        }
    }

    // Vertical 5-tap sums over the horizontal sums, then damp and re-mask.
    let damp_weights = &mask.weights;
    for y in 0..h {
        let ym2 = if y >= 2 { y - 2 } else { y + h - 2 };
        let ym1 = if y >= 1 { y - 1 } else { y + h - 1 };
        let yp1 = if y + 1 < h { y + 1 } else { y + 1 - h };
        let yp2 = if y + 2 < h { y + 2 } else { y + 2 - h };
        let r0 = &scratch.rowsum[ym2 * w..ym2 * w + w];
        let r1 = &scratch.rowsum[ym1 * w..ym1 * w + w];
        let r2 = &scratch.rowsum[y * w..y * w + w];
        let r3 = &scratch.rowsum[yp1 * w..yp1 * w + w];
        let r4 = &scratch.rowsum[yp2 * w..yp2 * w + w];
        let wrow = &damp_weights[y * w..y * w + w];
        let out = &mut dst.values_mut()[y * w..y * w + w];
        for x in 0..w {
            let s = r0[x] + r1[x] + r2[x] + r3[x] + r4[x];
            out[x] = (s * DIFFUSION_DAMP / KERNEL_CELLS) * wrow[x];
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn dims(w: u32, h: u32) -> GridDims {
        GridDims::new(w, h).unwrap()
    }

    /// Independent oracle: direct 25-term sum per cell in row-major kernel
    /// order, periodic wrapping, walls contribute 0 and are zeroed.
    fn brute_force_diffuse(field: &ChemoField, mask: &HabitabilityMask) -> ChemoField {
        let d = field.dims();
        let mut out = ChemoField::zeros(d);
        for y in 0..d.height() {
            for x in 0..d.width() {
                if !mask.is_habitable(x, y) {
                    continue;
                }
                let mut sum = 0.0;
                for dy in -2i64..=2 {
                    for dx in -2i64..=2 {
                        let nx = wrap_cell(x as i64 + dx, d.width());
                        let ny = wrap_cell(y as i64 + dy, d.height());
                        if mask.is_habitable(nx, ny) {
                            sum += field.get(nx, ny);
                        }
                    }
                }
                out.set(x, y, sum * DIFFUSION_DAMP / KERNEL_CELLS);
            }
        }
        out
    }

    #[test]
    fn dims_reject_kernel_underflow() {
        assert!(GridDims::new(4, 10).is_err());
        assert!(GridDims::new(10, 4).is_err());
        assert!(GridDims::new(5, 5).is_ok());
    }

    #[test]
    fn wrap_cell_examples() {
        assert_eq!(wrap_cell(-1, 300), 299);
        assert_eq!(wrap_cell(150, 300), 150);
        assert_eq!(wrap_cell(300, 300), 0);
        assert_eq!(wrap_cell(-301, 300), 299);
    }

    #[test]
    fn wrap_coord_examples() {
        assert!((wrap_coord(300.4, 300) - 0.4).abs() < 1e-12);
        assert_eq!(wrap_coord(150.0, 300), 150.0);
        assert!((wrap_coord(-0.5, 300) - 299.5).abs() < 1e-12);
        // Tiny negative values must not escape to `extent` itself.
        let w = wrap_coord(-1e-17, 300);
        assert!((0.0..300.0).contains(&w));
    }

    #[test]
    fn cell_of_examples() {
        assert_eq!(cell_of(3.9, 7.1), (3, 7));
        assert_eq!(cell_of(0.0, 0.0), (0, 0));
        assert_eq!(cell_of(299.999, 99.001), (299, 99));
    }

    #[test]
    fn diffuse_zero_fixed_point() {
        let d = dims(8, 6);
        let f = ChemoField::zeros(d);
        let out = diffuse_and_damp(&f, &HabitabilityMask::full(d));
        assert!(out.values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn diffuse_uniform_field_damps_exactly() {
        let d = dims(10, 7);
        let mut f = ChemoField::zeros(d);
        f.values_mut().fill(10.0);
        let out = diffuse_and_damp(&f, &HabitabilityMask::full(d));
        for &v in out.values() {
            assert_eq!(v, 9.5);
        }
    }

    #[test]
    fn diffuse_impulse_response() {
        let d = dims(7, 7);
        let mut f = ChemoField::zeros(d);
        f.set(3, 3, 25.0);
        let out = diffuse_and_damp(&f, &HabitabilityMask::full(d));
        for y in 0..7 {
            for x in 0..7 {
                let in_kernel = (1..=5).contains(&x) && (1..=5).contains(&y);
                if in_kernel {
                    assert_eq!(out.get(x, y), 0.95, "cell ({x},{y})");
                } else {
                    assert_eq!(out.get(x, y), 0.0, "cell ({x},{y})");
                }
            }
        }
    }

    #[test]
    fn diffuse_matches_brute_force_oracle() {
        let d = dims(16, 16);
        let mut f = ChemoField::zeros(d);
        let mut state = 0x1234_5678_u64;
        for v in f.values_mut() {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            *v = (state >> 11) as f64 / (1u64 << 53) as f64 * 100.0;
        }
        let fast = diffuse_and_damp(&f, &HabitabilityMask::full(d));
        let slow = brute_force_diffuse(&f, &HabitabilityMask::full(d));
        for (a, b) in fast.values().iter().zip(slow.values()) {
            let rel = (a - b).abs() / b.abs().max(1e-300);
            assert!(rel < 1e-12, "fast {a} vs brute {b}");
        }
    }

    #[test]
    fn diffuse_walls_are_sinks() {
        let d = dims(10, 8);
        let mask = HabitabilityMask::tube(d, 1).unwrap();
        let mut f = ChemoField::zeros(d);
        // Attractant written onto a wall cell must not spread.
        f.set(4, 0, 100.0);
        let out = diffuse_and_damp(&f, &mask);
        assert!(out.values().iter().all(|&v| v == 0.0));

        // Interior mass near a wall loses the wall share but walls stay 0.
        let mut g = ChemoField::zeros(d);
        g.set(4, 1, 25.0);
        let out = diffuse_and_damp(&g, &mask);
        for x in 0..10 {
            assert_eq!(out.get(x, 0), 0.0);
            assert_eq!(out.get(x, 7), 0.0);
        }
        assert_eq!(out.get(4, 1), 0.95);
        let brute = brute_force_diffuse(&g, &mask);
        for (a, b) in out.values().iter().zip(brute.values()) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn sample_field_examples() {
        let d = dims(300, 100);
        let mask = HabitabilityMask::tube(d, 1).unwrap();
        let mut f = ChemoField::zeros(d);
        f.set(5, 5, 3.2);
        assert_eq!(sample_field(&f, &mask, 5.7, 5.1), 3.2);
        // Wall cell reads 0 even if something was written there.
        f.set(7, 0, 9.9);
        assert_eq!(sample_field(&f, &mask, 7.5, 0.5), 0.0);
        f.set(299, 50, 1.5);
        assert_eq!(sample_field(&f, &mask, -0.5, 50.0), 1.5);
    }

    #[test]
    fn tube_mask_rows() {
        let d = dims(300, 100);
        let mask = HabitabilityMask::tube(d, 1).unwrap();
        assert_eq!(mask.habitable_count(), 300 * 98);
        assert!(!mask.is_habitable(0, 0));
        assert!(!mask.is_habitable(150, 99));
        assert!(mask.is_habitable(150, 1));
        assert_eq!(mask.habitable_row_range(), (1, 99));
        assert!(HabitabilityMask::tube(dims(10, 6), 3).is_err());
    }

    #[test]
    fn region_contains_and_count() {
        let r = Region::new(vec![
            CellRect::new(0, 1, 100, 99),
            CellRect::new(200, 1, 300, 99),
        ]);
        assert!(r.contains(0, 1));
        assert!(r.contains(299, 98));
        assert!(!r.contains(150, 50));
        assert_eq!(r.cell_count(), 2 * 100 * 98);
        assert_eq!(r.cells().count(), r.cell_count());
    }

    fn field_strategy(w: u32, h: u32) -> impl Strategy<Value = ChemoField> {
        proptest::collection::vec(0.0f64..1000.0, (w * h) as usize).prop_map(move |vals| {
            let mut f = ChemoField::zeros(dims(w, h));
            f.values_mut().copy_from_slice(&vals);
            f
        })
    }

    proptest! {
        #[test]
        fn mass_damps_by_exactly_095(f in field_strategy(12, 9)) {
            let out = diffuse_and_damp(&f, &HabitabilityMask::full(f.dims()));
            let expected = DIFFUSION_DAMP * f.total_mass();
            let rel = (out.total_mass() - expected).abs() / expected.abs().max(1.0);
            prop_assert!(rel < 1e-9);
        }

        #[test]
        fn nonnegativity_preserved(f in field_strategy(9, 9)) {
            let out = diffuse_and_damp(&f, &HabitabilityMask::full(f.dims()));
            prop_assert!(out.values().iter().all(|&v| v >= 0.0));
        }

        #[test]
        fn translation_equivariance(f in field_strategy(11, 8), sx in 0u32..11, sy in 0u32..8) {
            let d = f.dims();
            let mask = HabitabilityMask::full(d);
            // Cyclic shift of the input.
            let mut shifted = ChemoField::zeros(d);
            for y in 0..d.height() {
                for x in 0..d.width() {
                    let nx = (x + sx) % d.width();
                    let ny = (y + sy) % d.height();
                    shifted.set(nx, ny, f.get(x, y));
                }
            }
            let a = diffuse_and_damp(&shifted, &mask);
            let b = diffuse_and_damp(&f, &mask);
            for y in 0..d.height() {
                for x in 0..d.width() {
                    let nx = (x + sx) % d.width();
                    let ny = (y + sy) % d.height();
                    prop_assert_eq!(a.get(nx, ny), b.get(x, y));
                }
            }
        }
    }
}
