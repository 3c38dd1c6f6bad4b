use crate::geometry::{point_segment_distance, Point};
use serde::{Deserialize, Serialize};

/// Three-tier target size. Values are circumradius targets in meters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SizeField {
    /// On building walls.
    pub lc_building: f64,
    /// In the gaps between buildings.
    pub lc_gap: f64,
    /// In the buffer zone towards the domain border.
    pub lc_far: f64,
    /// Distance from the nearest building within which `lc_gap` applies.
    pub gap_distance: f64,
}

impl SizeField {
    pub fn uniform(lc: f64) -> Self {
        Self {
            lc_building: lc,
            lc_gap: lc,
            lc_far: lc,
            gap_distance: 0.0,
        }
    }

    pub fn is_valid(&self) -> bool {
        self.lc_building > 0.0
            && self.lc_building <= self.lc_gap
            && self.lc_gap <= self.lc_far
            && self.gap_distance >= 0.0
            && self.lc_far.is_finite()
    }

    /// Target size at distance `d` from the nearest building wall.
    ///
    /// Blends linearly from `lc_building` at the wall to `lc_gap` over one
    /// gap length, holds `lc_gap` up to `gap_distance`, then blends to
    /// `lc_far` over one far length.
    pub fn at_distance(&self, d: f64) -> f64 {
        let ramp_in = self.lc_gap.min(self.gap_distance);
        if d <= ramp_in && ramp_in > 0.0 {
            self.lc_building + (self.lc_gap - self.lc_building) * (d / ramp_in)
        } else if d <= self.gap_distance {
            self.lc_gap
        } else if d <= self.gap_distance + self.lc_far {
            self.lc_gap + (self.lc_far - self.lc_gap) * ((d - self.gap_distance) / self.lc_far)
        } else {
            self.lc_far
        }
    }
}

/// A size field bound to concrete building walls.
#[derive(Debug, Clone)]
pub struct SizeFunction {
    field: SizeField,
    walls: Vec<(Point, Point)>,
}

impl SizeFunction {
    pub fn new(field: SizeField, rings: &[Vec<Point>]) -> Self {
        let walls = rings
            .iter()
            .flat_map(|ring| (0..ring.len()).map(move |i| (ring[i], ring[(i + 1) % ring.len()])))
            .collect();
        Self { field, walls }
    }

    pub fn wall_distance(&self, p: Point) -> f64 {
        self.walls
            .iter()
            .map(|&(a, b)| point_segment_distance(p, a, b))
            .fold(f64::INFINITY, f64::min)
    }

    pub fn at(&self, p: Point) -> f64 {
        if self.walls.is_empty() {
            return self.field.lc_far;
        }
        self.field.at_distance(self.wall_distance(p))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tiers_and_blending() {
        let f = SizeField {
            lc_building: 0.5,
            lc_gap: 1.0,
            lc_far: 4.0,
            gap_distance: 5.0,
        };
        assert_eq!(f.at_distance(0.0), 0.5);
        assert_eq!(f.at_distance(0.5), 0.75);
        assert_eq!(f.at_distance(3.0), 1.0);
        assert_eq!(f.at_distance(7.0), 2.5);
        assert_eq!(f.at_distance(100.0), 4.0);
        // Never coarser than the gap size inside the gap zone.
        for i in 0..=50 {
            assert!(f.at_distance(i as f64 * 0.1) <= 1.0);
        }
    }

    #[test]
    fn no_walls_means_far_size() {
        let f = SizeFunction::new(SizeField::uniform(2.0), &[]);
        assert_eq!(f.at([1.0, 1.0]), 2.0);
    }
}
