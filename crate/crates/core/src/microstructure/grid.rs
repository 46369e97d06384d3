use super::FiberSpec;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[repr(u8)]
pub enum Phase {
    Matrix = 0,
    Fiber = 1,
}

impl Phase {
    /// Scalar value fed to learning models: fiber `+0.5`, matrix `-0.5`.
    pub fn encoded(self) -> f32 {
        match self {
            Phase::Matrix => -0.5,
            Phase::Fiber => 0.5,
        }
    }
}

/// Square periodic raster of phase labels, row-major (`row * resolution + col`).
///
/// Rows run along y, columns along x; pixel `(row, col)` has its center at
/// `((col + 0.5) / R, (row + 0.5) / R)` in unit-cell coordinates.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct PhaseGrid {
    resolution: usize,
    labels: Vec<Phase>,
}

impl PhaseGrid {
    pub fn filled(resolution: usize, phase: Phase) -> Self {
        Self {
            resolution,
            labels: vec![phase; resolution * resolution],
        }
    }

    /// Builds a grid from `f(row, col)`.
    pub fn from_fn(resolution: usize, mut f: impl FnMut(usize, usize) -> Phase) -> Self {
        let mut labels = Vec::with_capacity(resolution * resolution);
        for row in 0..resolution {
            for col in 0..resolution {
                labels.push(f(row, col));
            }
        }
        Self { resolution, labels }
    }

    pub fn from_labels(resolution: usize, labels: Vec<Phase>) -> Self {
        assert_eq!(labels.len(), resolution * resolution, "label count");
        Self { resolution, labels }
    }

    /// Layers normal to x: the first `round(fraction * R)` columns are fiber.
    pub fn laminate(resolution: usize, fraction: f64) -> Self {
        let cols = (fraction * resolution as f64).round() as usize;
        Self::from_fn(resolution, |_, c| {
            if c < cols {
                Phase::Fiber
            } else {
                Phase::Matrix
            }
        })
    }

    pub fn checkerboard(resolution: usize) -> Self {
        Self::from_fn(resolution, |r, c| {
            if (r + c) % 2 == 0 {
                Phase::Fiber
            } else {
                Phase::Matrix
            }
        })
    }

    pub fn resolution(&self) -> usize {
        self.resolution
    }

    pub fn labels(&self) -> &[Phase] {
        &self.labels
    }

    /// Label at a wrapped position.
    pub fn get(&self, row: i64, col: i64) -> Phase {
        let r = self.resolution as i64;
        self.labels[(row.rem_euclid(r) * r + col.rem_euclid(r)) as usize]
    }

    pub fn fiber_count(&self) -> usize {
        self.labels.iter().filter(|&&p| p == Phase::Fiber).count()
    }

    /// True when both phases occur.
    pub fn is_two_phase(&self) -> bool {
        let n = self.fiber_count();
        n > 0 && n < self.labels.len()
    }

    /// `+0.5` / `-0.5` encoding, row-major.
    pub fn encoded(&self) -> Vec<f32> {
        self.labels.iter().map(|p| p.encoded()).collect()
    }

    pub(crate) fn labels_mut(&mut self) -> &mut [Phase] {
        &mut self.labels
    }
}

/// Fiber-pixel fraction.
pub fn measure_vf(grid: &PhaseGrid) -> f64 {
    grid.fiber_count() as f64 / grid.labels.len() as f64
}

/// Pixel-center membership: a pixel is fiber iff its center lies within the
/// periodic distance `radius` of some center.
///
/// Per axis, the nearest periodic image is found by wrapping the coordinate
/// difference into `[-0.5, 0.5]`, which equals the minimum over the nine
/// neighbouring images.
pub fn rasterize(spec: &FiberSpec, resolution: usize) -> PhaseGrid {
    let mut grid = PhaseGrid::filled(resolution, Phase::Matrix);
    let rf = resolution as f64;
    let r = spec.radius;
    if r <= 0.0 {
        return grid;
    }
    let r2 = r * r;
    let window = |c: f64| -> (i64, i64) {
        let lo = ((c - r) * rf - 0.5).floor() as i64;
        let hi = ((c + r) * rf - 0.5).ceil() as i64;
        if hi - lo + 1 >= resolution as i64 {
            (0, resolution as i64 - 1)
        } else {
            (lo, hi)
        }
    };
    let labels = grid.labels_mut();
    for &(cx, cy) in &spec.centers {
        let (row_lo, row_hi) = window(cy);
        let (col_lo, col_hi) = window(cx);
        for row in row_lo..=row_hi {
            let row = row.rem_euclid(resolution as i64) as usize;
            let mut dy = (row as f64 + 0.5) / rf - cy;
            dy -= dy.round();
            let dy2 = dy * dy;
            if dy2 > r2 {
                continue;
            }
            for col in col_lo..=col_hi {
                let col = col.rem_euclid(resolution as i64) as usize;
                let mut dx = (col as f64 + 0.5) / rf - cx;
                dx -= dx.round();
                if dx * dx + dy2 <= r2 {
                    labels[row * resolution + col] = Phase::Fiber;
                }
            }
        }
    }
    grid
}
