use serde::{Deserialize, Serialize};

use super::PhaseGrid;

/// The eight symmetries of the square.
///
/// Each element acts on centered pixel coordinates `(x, y)` by a signed
/// permutation matrix, so every transform is an exact index permutation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum D4Element {
    Identity,
    Rot90,
    Rot180,
    Rot270,
    /// Mirror `x -> -x`.
    FlipHorizontal,
    /// Mirror `y -> -y`.
    FlipVertical,
    /// Swap `x` and `y`.
    Transpose,
    /// Swap `x` and `y` with both negated.
    AntiTranspose,
}

impl D4Element {
    pub const ALL: [D4Element; 8] = [
        D4Element::Identity,
        D4Element::Rot90,
        D4Element::Rot180,
        D4Element::Rot270,
        D4Element::FlipHorizontal,
        D4Element::FlipVertical,
        D4Element::Transpose,
        D4Element::AntiTranspose,
    ];

    /// Matrix acting on `(x, y)` column vectors.
    pub fn matrix(self) -> [[i32; 2]; 2] {
        match self {
            D4Element::Identity => [[1, 0], [0, 1]],
            D4Element::Rot90 => [[0, -1], [1, 0]],
            D4Element::Rot180 => [[-1, 0], [0, -1]],
            D4Element::Rot270 => [[0, 1], [-1, 0]],
            D4Element::FlipHorizontal => [[-1, 0], [0, 1]],
            D4Element::FlipVertical => [[1, 0], [0, -1]],
            D4Element::Transpose => [[0, 1], [1, 0]],
            D4Element::AntiTranspose => [[0, -1], [-1, 0]],
        }
    }

    fn from_matrix(m: [[i32; 2]; 2]) -> Self {
        *Self::ALL
            .iter()
            .find(|e| e.matrix() == m)
            .expect("signed permutation matrices are closed under products")
    }

    /// `self ∘ other`: apply `other` first.
    pub fn compose(self, other: D4Element) -> D4Element {
        let a = self.matrix();
        let b = other.matrix();
        let mut m = [[0; 2]; 2];
        for (i, row) in m.iter_mut().enumerate() {
            for (j, v) in row.iter_mut().enumerate() {
                *v = a[i][0] * b[0][j] + a[i][1] * b[1][j];
            }
        }
        Self::from_matrix(m)
    }

    pub fn inverse(self) -> D4Element {
        let m = self.matrix();
        Self::from_matrix([[m[0][0], m[1][0]], [m[0][1], m[1][1]]])
    }
}

/// Applies a D4 element about the cell center.
pub fn transform_d4(grid: &PhaseGrid, element: D4Element) -> PhaseGrid {
    let r = grid.resolution() as i64;
    // Destination (x, y) reads source M^T (x, y), in doubled centered coordinates.
    let m = element.matrix();
    PhaseGrid::from_fn(grid.resolution(), |row, col| {
        let x = 2 * col as i64 + 1 - r;
        let y = 2 * row as i64 + 1 - r;
        let sx = m[0][0] as i64 * x + m[1][0] as i64 * y;
        let sy = m[0][1] as i64 * x + m[1][1] as i64 * y;
        grid.get((sy + r - 1) / 2, (sx + r - 1) / 2)
    })
}

/// `out[i][j] = in[(i + dy) mod R][(j + dx) mod R]`.
pub fn translate_periodic(grid: &PhaseGrid, dx: i64, dy: i64) -> PhaseGrid {
    PhaseGrid::from_fn(grid.resolution(), |row, col| {
        grid.get(row as i64 + dy, col as i64 + dx)
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::microstructure::{rasterize, FiberSpec, Phase};
    use proptest::prelude::*;

    fn random_grid(resolution: usize, bits: &[bool]) -> PhaseGrid {
        PhaseGrid::from_fn(resolution, |r, c| {
            if bits[(r * resolution + c) % bits.len()] {
                Phase::Fiber
            } else {
                Phase::Matrix
            }
        })
    }

    fn asymmetric() -> PhaseGrid {
        // An L-shaped blob: no nontrivial symmetry.
        PhaseGrid::from_fn(8, |r, c| {
            if (r < 5 && c == 1) || (r == 4 && c < 4) {
                Phase::Fiber
            } else {
                Phase::Matrix
            }
        })
    }

    #[test]
    fn identity_and_group_laws() {
        let g = asymmetric();
        assert_eq!(transform_d4(&g, D4Element::Identity), g);
        let mut r = g.clone();
        for _ in 0..4 {
            r = transform_d4(&r, D4Element::Rot90);
        }
        assert_eq!(r, g);
        let f = transform_d4(&g, D4Element::FlipHorizontal);
        assert_ne!(f, g);
        assert_eq!(transform_d4(&f, D4Element::FlipHorizontal), g);
    }

    #[test]
    fn elements_are_distinct() {
        let g = asymmetric();
        let images: Vec<_> = D4Element::ALL.iter().map(|&e| transform_d4(&g, e)).collect();
        for i in 0..8 {
            for j in i + 1..8 {
                assert_ne!(images[i], images[j], "{:?} {:?}", D4Element::ALL[i], D4Element::ALL[j]);
            }
        }
    }

    #[test]
    fn rot90_index_formula() {
        let g = asymmetric();
        let r = g.resolution() as i64;
        let t = transform_d4(&g, D4Element::Rot90);
        for row in 0..r {
            for col in 0..r {
                // source (x, y) = M^T (x', y') = (y', -x')
                assert_eq!(t.get(row, col), g.get(r - 1 - col, row));
            }
        }
    }

    #[test]
    fn group_table_is_consistent_with_action() {
        let g = asymmetric();
        for a in D4Element::ALL {
            assert_eq!(a.compose(a.inverse()), D4Element::Identity);
            for b in D4Element::ALL {
                let lhs = transform_d4(&transform_d4(&g, b), a);
                assert_eq!(lhs, transform_d4(&g, a.compose(b)), "{a:?} after {b:?}");
            }
        }
    }

    #[test]
    fn translation_examples() {
        let g = asymmetric();
        let r = g.resolution() as i64;
        assert_eq!(translate_periodic(&g, 0, 0), g);
        assert_eq!(translate_periodic(&g, r, r), g);
        assert_eq!(translate_periodic(&translate_periodic(&g, 5, 0), -5, 0), g);
    }

    proptest! {
        #[test]
        fn translations_form_a_group(
            bits in prop::collection::vec(any::<bool>(), 37),
            a in -40i64..40, b in -40i64..40, c in -40i64..40, d in -40i64..40,
        ) {
            let g = random_grid(12, &bits);
            let two = translate_periodic(&translate_periodic(&g, a, b), c, d);
            prop_assert_eq!(two, translate_periodic(&g, a + c, b + d));
        }

        #[test]
        fn raster_commutes_with_integral_shifts(
            // Dyadic centers keep the shifted coordinates exact.
            centers in prop::collection::vec((0u32..1024, 0u32..1024), 1..5),
            radius in 0.03..0.3f64,
            shift in 0i64..64,
        ) {
            let res = 64usize;
            let spec = FiberSpec {
                centers: centers.iter().map(|&(x, y)| (x as f64 / 1024.0, y as f64 / 1024.0)).collect(),
                radius,
            };
            let delta = shift as f64 / res as f64;
            let shifted = rasterize(&spec.shifted(delta, delta), res);
            prop_assert_eq!(rasterize(&spec, res), translate_periodic(&shifted, shift, shift));
        }
    }
}
