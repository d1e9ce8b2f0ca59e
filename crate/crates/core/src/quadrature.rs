//! Triangle quadrature rules in barycentric coordinates. Weights are
//! normalized to sum to one and must be multiplied by the element area.

/// Three edge-midpoint rule, exact for quadratics.
pub const EDGE_MIDPOINT: [([f64; 3], f64); 3] = [
    ([0.5, 0.5, 0.0], 1.0 / 3.0),
    ([0.0, 0.5, 0.5], 1.0 / 3.0),
    ([0.5, 0.0, 0.5], 1.0 / 3.0),
];

const A1: f64 = 0.059_715_871_789_769_820;
const B1: f64 = 0.470_142_064_105_115_090;
const W1: f64 = 0.132_394_152_788_506_181;
const A2: f64 = 0.797_426_985_353_087_322;
const B2: f64 = 0.101_286_507_323_456_339;
const W2: f64 = 0.125_939_180_544_827_153;

/// Seven-point rule exact for polynomials of degree five.
pub const DEGREE5: [([f64; 3], f64); 7] = [
    ([1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0], 0.225),
    ([A1, B1, B1], W1),
    ([B1, A1, B1], W1),
    ([B1, B1, A1], W1),
    ([A2, B2, B2], W2),
    ([B2, A2, B2], W2),
    ([B2, B2, A2], W2),
];

/// Cartesian point for barycentric coordinates `l` on triangle `v`.
#[inline]
pub fn map_point(v: &[[f64; 2]; 3], l: &[f64; 3]) -> [f64; 2] {
    [
        l[0] * v[0][0] + l[1] * v[1][0] + l[2] * v[2][0],
        l[0] * v[0][1] + l[1] * v[1][1] + l[2] * v[2][1],
    ]
}
