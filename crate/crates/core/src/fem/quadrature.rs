//! Symmetric Gaussian rules on triangles (Dunavant). Points are given in
//! barycentric coordinates and weights sum to one, so an integral is
//! `area * sum(w_i * f(x_i))`.

#[derive(Debug, Clone)]
pub struct QuadratureRule {
    pub points: Vec<[f64; 3]>,
    pub weights: Vec<f64>,
    /// Highest total polynomial degree integrated exactly.
    pub degree: usize,
}

impl QuadratureRule {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = ([f64; 3], f64)> + '_ {
        self.points.iter().copied().zip(self.weights.iter().copied())
    }
}

fn orbit3(a: f64) -> [[f64; 3]; 3] {
    let b = 1.0 - 2.0 * a;
    [[a, a, b], [a, b, a], [b, a, a]]
}

fn orbit6(a: f64, b: f64) -> [[f64; 3]; 6] {
    let c = 1.0 - a - b;
    [[a, b, c], [a, c, b], [b, a, c], [b, c, a], [c, a, b], [c, b, a]]
}

/// 6-point rule, exact to degree 4.
pub fn degree4() -> QuadratureRule {
    let mut points = Vec::with_capacity(6);
    let mut weights = Vec::with_capacity(6);
    for (a, w) in [(0.445_948_490_915_965, 0.223_381_589_678_011), (0.091_576_213_509_771, 0.109_951_743_655_322)] {
        points.extend(orbit3(a));
        weights.extend([w; 3]);
    }
    QuadratureRule {
        points,
        weights,
        degree: 4,
    }
}

/// 12-point rule, exact to degree 6.
pub fn degree6() -> QuadratureRule {
    let mut points = Vec::with_capacity(12);
    let mut weights = Vec::with_capacity(12);
    for (a, w) in [(0.249_286_745_170_910, 0.116_786_275_726_379), (0.063_089_014_491_502, 0.050_844_906_370_207)] {
        points.extend(orbit3(a));
        weights.extend([w; 3]);
    }
    points.extend(orbit6(0.053_145_049_844_817, 0.310_352_451_033_784));
    weights.extend([0.082_851_075_618_374; 6]);
    QuadratureRule {
        points,
        weights,
        degree: 6,
    }
}
