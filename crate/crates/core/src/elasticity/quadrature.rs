//! Quadrature rules and the quadratic Lagrange basis on triangles.

/// Degree-4 symmetric rule with 6 points: (barycentric coordinates, weight),
/// weights summing to one.
pub const TRI6: [([f64; 3], f64); 6] = {
    const W1: f64 = 0.223_381_589_678_011_465_944;
    const A1: f64 = 0.445_948_490_915_964_886_319;
    const B1: f64 = 0.108_103_018_168_070_227_363;
    const W2: f64 = 0.109_951_743_655_321_867_389;
    const A2: f64 = 0.091_576_213_509_770_743_460;
    const B2: f64 = 0.816_847_572_980_458_513_080;
    [
        ([A1, A1, B1], W1),
        ([A1, B1, A1], W1),
        ([B1, A1, A1], W1),
        ([A2, A2, B2], W2),
        ([A2, B2, A2], W2),
        ([B2, A2, A2], W2),
    ]
};

/// 3-point Gauss rule on `[0, 1]`: (abscissa, weight).
pub const GAUSS3: [(f64, f64); 3] = {
    const D: f64 = 0.387_298_334_620_741_688_518; // sqrt(3/5) / 2
    [(0.5 - D, 5.0 / 18.0), (0.5, 4.0 / 9.0), (0.5 + D, 5.0 / 18.0)]
};

/// Values of the six P2 basis functions: vertices 0..3, then edge
/// midpoints (0,1), (1,2), (2,0).
#[inline]
pub fn p2_values(l: [f64; 3]) -> [f64; 6] {
    [
        l[0] * (2.0 * l[0] - 1.0),
        l[1] * (2.0 * l[1] - 1.0),
        l[2] * (2.0 * l[2] - 1.0),
        4.0 * l[0] * l[1],
        4.0 * l[1] * l[2],
        4.0 * l[2] * l[0],
    ]
}

/// Cartesian gradients of the P2 basis given barycentric coordinates and
/// their (constant) gradients.
#[inline]
pub fn p2_gradients(l: [f64; 3], gl: &[[f64; 2]; 3]) -> [[f64; 2]; 6] {
    let mut g = [[0.0; 2]; 6];
    for k in 0..2 {
        g[0][k] = (4.0 * l[0] - 1.0) * gl[0][k];
        g[1][k] = (4.0 * l[1] - 1.0) * gl[1][k];
        g[2][k] = (4.0 * l[2] - 1.0) * gl[2][k];
        g[3][k] = 4.0 * (l[0] * gl[1][k] + l[1] * gl[0][k]);
        g[4][k] = 4.0 * (l[1] * gl[2][k] + l[2] * gl[1][k]);
        g[5][k] = 4.0 * (l[2] * gl[0][k] + l[0] * gl[2][k]);
    }
    g
}

#[cfg(test)]
mod tests {
    use super::*;

    fn factorial(n: u32) -> f64 {
        (1..=n).map(f64::from).product()
    }

    #[test]
    fn tri6_integrates_degree_four_exactly() {
        // reference triangle (0,0),(1,0),(0,1): ∫ x^a y^b = a! b! / (a+b+2)!
        for a in 0..=4u32 {
            for b in 0..=(4 - a) {
                let q: f64 = TRI6
                    .iter()
                    .map(|(l, w)| w * 0.5 * l[1].powi(a as i32) * l[2].powi(b as i32))
                    .sum();
                let exact = factorial(a) * factorial(b) / factorial(a + b + 2);
                assert!((q - exact).abs() < 1e-15, "x^{a} y^{b}: {q} vs {exact}");
            }
        }
    }

    #[test]
    fn gauss3_integrates_degree_five_exactly() {
        for k in 0..=5 {
            let q: f64 = GAUSS3.iter().map(|(x, w)| w * x.powi(k)).sum();
            assert!((q - 1.0 / (k as f64 + 1.0)).abs() < 1e-15);
        }
    }

    #[test]
    fn p2_basis_is_nodal_and_sums_to_one() {
        let nodes = [
            [1.0, 0.0, 0.0],
            [0.0, 1.0, 0.0],
            [0.0, 0.0, 1.0],
            [0.5, 0.5, 0.0],
            [0.0, 0.5, 0.5],
            [0.5, 0.0, 0.5],
        ];
        for (i, l) in nodes.iter().enumerate() {
            let v = p2_values(*l);
            for (j, vj) in v.iter().enumerate() {
                assert!((vj - if i == j { 1.0 } else { 0.0 }).abs() < 1e-15);
            }
        }
        let gl = [[-1.0, -1.0], [1.0, 0.0], [0.0, 1.0]];
        for (l, _) in TRI6 {
            assert!((p2_values(l).iter().sum::<f64>() - 1.0).abs() < 1e-15);
            let g = p2_gradients(l, &gl);
            for k in 0..2 {
                assert!(g.iter().map(|gi| gi[k]).sum::<f64>().abs() < 1e-14);
            }
        }
    }
}
