//! Per-particle behaviour: the three-sensor sensory stage and the
//! move/deposit/collision motor stage.
//!
//! Angles are degrees, measured counter-clockwise in the standard math
//! convention on `(x, y)` (x rightward, y downward). "Rotate right" means
//! `heading - RA`, "rotate left" means `heading + RA`, both mod 360.

use crate::lattice::{
    cell_of, sample_field, wrap_coord, ChemoField, HabitabilityMask, MultiplierMap, OccupancyGrid,
};

/// One agent: continuous position plus heading in `[0, 360)` degrees.
#[derive(Debug, Clone, PartialEq)]
pub struct Particle {
    pub id: u32,
    pub x: f64,
    pub y: f64,
    pub heading: f64,
}

impl Particle {
    /// Cell currently occupied (position is kept wrapped at all times).
    #[inline]
    pub fn cell(&self) -> (u32, u32) {
        cell_of(self.x, self.y)
    }
}

/// Steering and deposition parameters shared by the whole population.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AgentParams {
    /// Sensor angle SA: offset of the side sensors from the heading, degrees.
    pub sensor_angle: f64,
    /// Rotation angle RA: turn applied per steering decision, degrees.
    pub rotation_angle: f64,
    /// Sensor offset is drawn per particle per step from this inclusive range (pixels).
    pub sensor_offset_min: u32,
    pub sensor_offset_max: u32,
    /// Forward movement per motor step, pixels.
    pub step_size: f64,
    /// Chemoattractant units deposited on a successful move.
    pub deposit: f64,
}

impl Default for AgentParams {
    fn default() -> Self {
        AgentParams {
            sensor_angle: 60.0,
            rotation_angle: 60.0,
            sensor_offset_min: 1,
            sensor_offset_max: 20,
            step_size: 1.0,
            deposit: 5.0,
        }
    }
}

/// Concentrations seen by the left, front, and right sensors.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SensorReading {
    pub left: f64,
    pub front: f64,
    pub right: f64,
}

/// Sample the three offset sensors.
///
/// Sensor positions are `p + offset * (cos a, sin a)` for
/// `a = heading + SA` (left), `heading` (front), `heading - SA` (right),
/// wrapped into the lattice. Each reading is attenuated by the sensitivity
/// multiplier at the sensor's own cell (0.2 inside an active adverse
/// region), and walls read as 0.
pub fn read_sensors(
    p: &Particle,
    field: &ChemoField,
    mask: &HabitabilityMask,
    params: &AgentParams,
    offset: u32,
    sensitivity: &MultiplierMap,
) -> SensorReading {
    let dims = field.dims();
    let (sin_h, cos_h) = p.heading.to_radians().sin_cos();
    let (sin_sa, cos_sa) = params.sensor_angle.to_radians().sin_cos();
    let off = offset as f64;

    let sample = |cos_a: f64, sin_a: f64| {
        let sx = wrap_coord(p.x + off * cos_a, dims.width());
        let sy = wrap_coord(p.y + off * sin_a, dims.height());
        let (cx, cy) = cell_of(sx, sy);
        sample_field(field, mask, sx, sy) * sensitivity.at(cx, cy)
    };

    SensorReading {
        left: sample(
            cos_h * cos_sa - sin_h * sin_sa,
            sin_h * cos_sa + cos_h * sin_sa,
        ),
        front: sample(cos_h, sin_h),
        right: sample(
            cos_h * cos_sa + sin_h * sin_sa,
            sin_h * cos_sa - cos_h * sin_sa,
        ),
    }
}

/// Sensory-stage steering rule. Exactly one branch fires per reading:
///
/// 1. front strictly strongest: keep heading;
/// 2. front strictly weakest: rotate left or right by RA, chosen by one
///    fair coin draw (`true` = left);
/// 3. left < right: rotate right;
/// 4. right < left: rotate left;
/// 5. otherwise (ties): keep heading.
///
/// The coin closure is consumed only when branch 2 fires, so the caller's
/// draw accounting sees at most one steering draw per particle per step.
pub fn steer(
    heading: f64,
    r: &SensorReading,
    rotation_angle: f64,
    coin: impl FnOnce() -> bool,
) -> f64 {
    let turn = if r.front > r.left && r.front > r.right {
        return heading;
    } else if r.front < r.left && r.front < r.right {
        if coin() {
            rotation_angle
        } else {
            -rotation_angle
        }
    } else if r.left < r.right {
        -rotation_angle
    } else if r.right < r.left {
        rotation_angle
    } else {
        return heading;
    };
    wrap_coord(heading + turn, 360)
}

/// Outcome of a motor stage attempt.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MotorOutcome {
    /// Particle advanced (possibly within its own cell) and deposited
    /// `deposited` units at its destination cell.
    Moved { deposited: f64 },
    /// Destination occupied or inhabitable: no move, no deposit, heading
    /// replaced by a fresh uniform draw.
    Blocked,
}

impl MotorOutcome {
    pub fn moved(&self) -> bool {
        matches!(self, MotorOutcome::Moved { .. })
    }
}

/// Motor stage: attempt one forward step of `step_size` pixels.
///
/// A candidate landing in the particle's current cell counts as a
/// successful intra-cell move (no occupancy change). Deposition happens at
/// the destination cell, scaled by the deposition multiplier there. On a
/// blocked move the `fresh_heading` closure supplies one uniform angle.
pub fn motor_step(
    p: &mut Particle,
    occupancy: &mut OccupancyGrid,
    mask: &HabitabilityMask,
    field: &mut ChemoField,
    params: &AgentParams,
    deposition: &MultiplierMap,
    fresh_heading: impl FnOnce() -> f64,
) -> MotorOutcome {
    let dims = field.dims();
    let (sin_h, cos_h) = p.heading.to_radians().sin_cos();
    let nx = wrap_coord(p.x + params.step_size * cos_h, dims.width());
    let ny = wrap_coord(p.y + params.step_size * sin_h, dims.height());
    let (cx, cy) = cell_of(nx, ny);
    let (old_cx, old_cy) = p.cell();

    if (cx, cy) != (old_cx, old_cy) {
        if !mask.is_habitable(cx, cy) || !occupancy.is_empty_cell(cx, cy) {
            p.heading = fresh_heading();
            return MotorOutcome::Blocked;
        }
        occupancy.clear(old_cx, old_cy);
        occupancy.place(cx, cy, p.id);
    }
    p.x = nx;
    p.y = ny;
    let deposited = params.deposit * deposition.at(cx, cy);
    field.add(cx, cy, deposited);
    MotorOutcome::Moved { deposited }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::GridDims;
    use proptest::prelude::*;

    fn dims(w: u32, h: u32) -> GridDims {
        GridDims::new(w, h).unwrap()
    }

    fn particle(x: f64, y: f64, heading: f64) -> Particle {
        Particle { id: 0, x, y, heading }
    }

    fn no_coin() -> bool {
        panic!("steering coin must not be drawn for this reading");
    }

    #[test]
    fn sensor_geometry_heading_zero() {
        let d = dims(50, 50);
        let mask = HabitabilityMask::full(d);
        let mut field = ChemoField::zeros(d);
        let params = AgentParams::default();
        let p = particle(25.5, 25.5, 0.0);
        let off = 10.0;
        let (sin_sa, cos_sa) = 60f64.to_radians().sin_cos();

        // Mark each expected sensor cell with a distinct value.
        let (flx, fly) = cell_of(25.5 + off * cos_sa, 25.5 + off * sin_sa);
        let (fx, fy) = cell_of(25.5 + off, 25.5);
        let (frx, fry) = cell_of(25.5 + off * cos_sa, 25.5 - off * sin_sa);
        field.set(flx, fly, 1.0);
        field.set(fx, fy, 2.0);
        field.set(frx, fry, 3.0);

        let r = read_sensors(&p, &field, &mask, &params, 10, &MultiplierMap::uniform(d));
        assert_eq!(r.left, 1.0);
        assert_eq!(r.front, 2.0);
        assert_eq!(r.right, 3.0);
    }

    #[test]
    fn sensors_uniform_field() {
        let d = dims(30, 30);
        let mask = HabitabilityMask::full(d);
        let mut field = ChemoField::zeros(d);
        field.values_mut().fill(4.0);
        let p = particle(15.5, 15.5, 123.0);
        let r = read_sensors(
            &p,
            &field,
            &mask,
            &AgentParams::default(),
            7,
            &MultiplierMap::uniform(d),
        );
        assert_eq!((r.left, r.front, r.right), (4.0, 4.0, 4.0));
    }

    #[test]
    fn sensor_attenuated_in_adverse_cell() {
        let d = dims(40, 40);
        let mask = HabitabilityMask::full(d);
        let mut field = ChemoField::zeros(d);
        field.values_mut().fill(5.0);
        // Attenuate only the front sensor's cell (heading 0, offset 10).
        let mut mult = vec![1.0; d.cell_count()];
        mult[d.idx(30, 20)] = 0.2;
        let sens = MultiplierMap::from_values(d, mult);
        let p = particle(20.5, 20.5, 0.0);
        let r = read_sensors(&p, &field, &mask, &AgentParams::default(), 10, &sens);
        assert_eq!(r.front, 1.0);
        assert_eq!(r.left, 5.0);
        assert_eq!(r.right, 5.0);
    }

    #[test]
    fn steer_rule_table_exhaustive() {
        // All 13 order/tie patterns of (left, front, right), both coin draws.
        // Expected: U = unchanged, L = +RA, R = -RA, C = coin-decided.
        #[derive(PartialEq, Debug, Clone, Copy)]
        enum Exp {
            U,
            L,
            R,
            C,
        }
        let cases: [(f64, f64, f64, Exp); 13] = [
            (1.0, 2.0, 3.0, Exp::R), // FL < F < FR
            (1.0, 3.0, 2.0, Exp::U), // FL < FR < F
            (2.0, 1.0, 3.0, Exp::C), // F < FL < FR
            (3.0, 1.0, 2.0, Exp::C), // F < FR < FL
            (2.0, 3.0, 1.0, Exp::U), // FR < FL < F
            (3.0, 2.0, 1.0, Exp::L), // FR < F < FL
            (2.0, 2.0, 3.0, Exp::R), // FL = F < FR
            (2.0, 2.0, 1.0, Exp::L), // FR < FL = F
            (1.0, 2.0, 1.0, Exp::U), // FL = FR < F
            (2.0, 1.0, 2.0, Exp::C), // F < FL = FR
            (2.0, 1.0, 1.0, Exp::L), // F = FR < FL
            (1.0, 2.0, 2.0, Exp::R), // FL < F = FR
            (2.0, 2.0, 2.0, Exp::U), // FL = F = FR
        ];
        let heading = 90.0;
        let ra = 60.0;
        for (left, front, right, exp) in cases {
            let r = SensorReading { left, front, right };
            match exp {
                Exp::U => {
                    assert_eq!(steer(heading, &r, ra, no_coin), 90.0, "{r:?}");
                }
                Exp::L => {
                    assert_eq!(steer(heading, &r, ra, no_coin), 150.0, "{r:?}");
                }
                Exp::R => {
                    assert_eq!(steer(heading, &r, ra, no_coin), 30.0, "{r:?}");
                }
                Exp::C => {
                    assert_eq!(steer(heading, &r, ra, || true), 150.0, "{r:?} left");
                    assert_eq!(steer(heading, &r, ra, || false), 30.0, "{r:?} right");
                }
            }
        }
    }

    #[test]
    fn steer_spec_examples() {
        let r = SensorReading { left: 1.0, front: 5.0, right: 2.0 };
        assert_eq!(steer(90.0, &r, 60.0, no_coin), 90.0);

        let r = SensorReading { left: 5.0, front: 1.0, right: 2.0 };
        assert_eq!(steer(0.0, &r, 60.0, || true), 60.0);
        assert_eq!(steer(0.0, &r, 60.0, || false), 300.0);

        let r = SensorReading { left: 2.0, front: 3.0, right: 7.0 };
        assert_eq!(steer(0.0, &r, 60.0, no_coin), 300.0);
    }

    proptest! {
        /// Mirrored reading + mirrored coin gives the mirrored rotation.
        #[test]
        fn steer_mirror_symmetry(
            left in 0.0f64..10.0,
            front in 0.0f64..10.0,
            right in 0.0f64..10.0,
            coin in proptest::bool::ANY,
        ) {
            let heading = 90.0;
            let ra = 60.0;
            let r = SensorReading { left, front, right };
            let m = SensorReading { left: right, front, right: left };
            let out = steer(heading, &r, ra, || coin);
            let out_m = steer(heading, &m, ra, || !coin);
            let delta = (out - heading).rem_euclid(360.0);
            let delta_m = (out_m - heading).rem_euclid(360.0);
            prop_assert_eq!(delta, (360.0 - delta_m).rem_euclid(360.0));
        }
    }

    fn arena() -> (GridDims, HabitabilityMask, ChemoField, OccupancyGrid) {
        let d = dims(20, 20);
        (
            d,
            HabitabilityMask::full(d),
            ChemoField::zeros(d),
            OccupancyGrid::empty(d),
        )
    }

    #[test]
    fn motor_advances_and_deposits() {
        let (d, mask, mut field, mut occ) = arena();
        let mut p = particle(5.5, 5.5, 0.0);
        occ.place(5, 5, p.id);
        let out = motor_step(
            &mut p,
            &mut occ,
            &mask,
            &mut field,
            &AgentParams::default(),
            &MultiplierMap::uniform(d),
            || panic!("no collision draw expected"),
        );
        assert_eq!(out, MotorOutcome::Moved { deposited: 5.0 });
        assert_eq!(p.cell(), (6, 5));
        assert_eq!(field.get(6, 5), 5.0);
        assert_eq!(occ.occupant(6, 5), Some(0));
        assert!(occ.is_empty_cell(5, 5));
    }

    #[test]
    fn motor_blocked_by_occupied_cell() {
        let (d, mask, mut field, mut occ) = arena();
        let mut p = particle(5.5, 5.5, 0.0);
        occ.place(5, 5, 0);
        occ.place(6, 5, 1);
        let out = motor_step(
            &mut p,
            &mut occ,
            &mask,
            &mut field,
            &AgentParams::default(),
            &MultiplierMap::uniform(d),
            || 211.5,
        );
        assert_eq!(out, MotorOutcome::Blocked);
        assert_eq!(p.cell(), (5, 5));
        assert_eq!(p.heading, 211.5);
        assert_eq!(field.total_mass(), 0.0);
        assert_eq!(occ.occupant(5, 5), Some(0));
        assert_eq!(occ.occupant(6, 5), Some(1));
    }

    #[test]
    fn motor_blocked_by_wall() {
        let d = dims(20, 8);
        let mask = HabitabilityMask::tube(d, 1).unwrap();
        let mut field = ChemoField::zeros(d);
        let mut occ = OccupancyGrid::empty(d);
        // Heading 90 = +y (downward axis), aimed straight at the bottom wall.
        let mut p = particle(10.5, 6.5, 90.0);
        occ.place(10, 6, 0);
        let out = motor_step(
            &mut p,
            &mut occ,
            &mask,
            &mut field,
            &AgentParams::default(),
            &MultiplierMap::uniform(d),
            || 13.25,
        );
        assert_eq!(out, MotorOutcome::Blocked);
        assert_eq!(p.cell(), (10, 6));
        assert_eq!(p.heading, 13.25);
        assert_eq!(field.total_mass(), 0.0);
    }

    #[test]
    fn motor_intra_cell_move_deposits() {
        let (d, mask, mut field, mut occ) = arena();
        // Diagonal step from the cell corner lands in the same cell
        // (5.1 + cos45, 5.1 + sin45) ~ (5.81, 5.81).
        let mut p = particle(5.1, 5.1, 45.0);
        occ.place(5, 5, 0);
        let out = motor_step(
            &mut p,
            &mut occ,
            &mask,
            &mut field,
            &AgentParams::default(),
            &MultiplierMap::uniform(d),
            || panic!("no collision draw expected"),
        );
        assert_eq!(out, MotorOutcome::Moved { deposited: 5.0 });
        assert_eq!(p.cell(), (5, 5));
        assert!((p.x - (5.1 + 0.5f64.sqrt())).abs() < 1e-12);
        assert_eq!(field.get(5, 5), 5.0);
        assert_eq!(occ.occupant(5, 5), Some(0));
    }

    #[test]
    fn motor_deposit_attenuated_in_adverse_cell() {
        let (d, mask, mut field, mut occ) = arena();
        let mut p = particle(5.5, 5.5, 0.0);
        occ.place(5, 5, 0);
        let mut mult = vec![1.0; d.cell_count()];
        mult[d.idx(6, 5)] = 0.2;
        let depo = MultiplierMap::from_values(d, mult);
        let out = motor_step(
            &mut p,
            &mut occ,
            &mask,
            &mut field,
            &AgentParams::default(),
            &depo,
            || unreachable!(),
        );
        assert_eq!(out, MotorOutcome::Moved { deposited: 1.0 });
        assert_eq!(field.get(6, 5), 1.0);
    }
}
