//! One-dimensional non-uniform grids, their tensor products, and the
//! randomized face perturbation used to build irregular meshes.
//!
//! Perturbed meshes are reproducible: the random stream is
//! `Xoshiro256PlusPlus` seeded through SplitMix64 (`seed_from_u64`), and each
//! interior face offset is `r * (2u - 1) * h` with `u = (next_u64 >> 11) * 2^-53`.
//! Faces are visited left to right, so face `i + 1/2` consumes the `i`-th draw.
//! For 2D meshes the x axis uses the seeded stream directly and the y axis uses
//! the same stream advanced by one `jump()` (2^128 draws), which keeps the two
//! axes independent while deriving everything from one seed.

use std::io::{Read, Write};

use rand::{Rng, SeedableRng};
use rand_xoshiro::Xoshiro256PlusPlus;
use thiserror::Error;

use crate::real::Real;

#[derive(Debug, Error)]
pub enum MeshError {
    #[error("grid needs at least one cell")]
    NoCells,
    #[error("domain bounds must satisfy a < b (got a={a}, b={b})")]
    EmptyDomain { a: f64, b: f64 },
    #[error("faces must be strictly increasing (face {index} = {value} does not exceed its predecessor)")]
    NonMonotoneFaces { index: usize, value: f64 },
    #[error("perturbation ratio must satisfy 0 <= r < 0.5 (got {0})")]
    InvalidRatio(f64),
    #[error("perturbation requires a uniform base grid")]
    NotUniform,
    #[error("cell {index} has no neighbour on both sides (grid has {cells} cells)")]
    NotInterior { index: usize, cells: usize },
    #[error("grid csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("grid csv: expected header `face`, found `{0}`")]
    BadHeader(String),
    #[error("grid csv: cannot parse `{value}` on line {line}")]
    BadValue { line: usize, value: String },
}

/// Cell geometry of a 1D grid: `n + 1` faces, `n` centers and sizes.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid1D<T> {
    faces: Vec<T>,
    centers: Vec<T>,
    sizes: Vec<T>,
    reference_size: T,
}

impl<T: Real> Grid1D<T> {
    /// Equally spaced cells on `[a, b]`.
    pub fn uniform(a: T, b: T, n: usize) -> Result<Self, MeshError> {
        if n == 0 {
            return Err(MeshError::NoCells);
        }
        if !(a < b) {
            return Err(MeshError::EmptyDomain {
                a: a.to_f64_lossy(),
                b: b.to_f64_lossy(),
            });
        }
        let nt = T::from_usize(n).unwrap();
        let faces = (0..=n)
            .map(|i| {
                if i == n {
                    b
                } else {
                    let frac = T::from_usize(i).unwrap() / nt;
                    a + (b - a) * frac
                }
            })
            .collect();
        Self::from_faces(faces)
    }

    /// Builds a grid from explicit face coordinates.
    pub fn from_faces(faces: Vec<T>) -> Result<Self, MeshError> {
        if faces.len() < 2 {
            return Err(MeshError::NoCells);
        }
        for (index, w) in faces.windows(2).enumerate() {
            if !(w[0] < w[1]) {
                return Err(MeshError::NonMonotoneFaces {
                    index: index + 1,
                    value: w[1].to_f64_lossy(),
                });
            }
        }
        let n = faces.len() - 1;
        let centers = faces.windows(2).map(|w| (w[0] + w[1]) * T::half()).collect();
        let sizes = faces.windows(2).map(|w| w[1] - w[0]).collect();
        let reference_size = (faces[n] - faces[0]) / T::from_usize(n).unwrap();
        Ok(Self {
            faces,
            centers,
            sizes,
            reference_size,
        })
    }

    /// Uniform grid on `[a, b]` with interior faces randomly displaced.
    pub fn perturbed(a: T, b: T, n: usize, params: PerturbationParams) -> Result<Self, MeshError> {
        Self::uniform(a, b, n)?.perturb(params)
    }

    /// Moves every interior face of a uniform grid by `r * delta`, `delta ~ U[-h, h]`.
    /// End points stay fixed.
    pub fn perturb(&self, params: PerturbationParams) -> Result<Self, MeshError> {
        let mut rng = params.rng();
        self.perturb_with(params.r, &mut rng)
    }

    pub(crate) fn perturb_with(&self, r: f64, rng: &mut Xoshiro256PlusPlus) -> Result<Self, MeshError> {
        if !self.is_uniform() {
            return Err(MeshError::NotUniform);
        }
        let h = self.reference_size;
        let r = T::lit(r);
        let n = self.len();
        let mut faces = self.faces.clone();
        for face in faces.iter_mut().take(n).skip(1) {
            let u: f64 = rng.random();
            let delta = T::lit(2.0 * u - 1.0) * h;
            *face += r * delta;
        }
        Self::from_faces(faces)
    }

    /// True when all sizes agree with the reference size to 1e-9 relative.
    pub fn is_uniform(&self) -> bool {
        let tol = T::lit(1e-9) * self.reference_size;
        self.sizes.iter().all(|&s| (s - self.reference_size).abs() <= tol)
    }

    pub fn len(&self) -> usize {
        self.sizes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sizes.is_empty()
    }

    pub fn faces(&self) -> &[T] {
        &self.faces
    }

    pub fn centers(&self) -> &[T] {
        &self.centers
    }

    pub fn sizes(&self) -> &[T] {
        &self.sizes
    }

    /// `h = (b - a) / n`.
    pub fn reference_size(&self) -> T {
        self.reference_size
    }

    pub fn lower(&self) -> T {
        self.faces[0]
    }

    pub fn upper(&self) -> T {
        self.faces[self.len()]
    }

    /// Geometric limiter parameters `(A, B)` of an interior cell.
    pub fn cell_params(&self, i: usize) -> Result<(T, T), MeshError> {
        if i == 0 || i + 1 >= self.len() {
            return Err(MeshError::NotInterior {
                index: i,
                cells: self.len(),
            });
        }
        Ok(cell_params(self.sizes[i - 1], self.sizes[i], self.sizes[i + 1]))
    }

    /// Returns a grid with the cell order reversed (sizes mirrored about the midpoint).
    pub fn mirrored(&self) -> Self {
        let (a, b) = (self.lower(), self.upper());
        let faces = self.faces.iter().rev().map(|&f| a + b - f).collect();
        Self::from_faces(faces).expect("mirroring preserves monotonicity")
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<(), MeshError> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["face"])?;
        for f in &self.faces {
            w.write_record([f.to_string()])?;
        }
        w.flush().map_err(csv::Error::from)?;
        Ok(())
    }

    pub fn read_csv<R: Read>(input: R) -> Result<Self, MeshError> {
        let mut rd = csv::ReaderBuilder::new().has_headers(true).from_reader(input);
        let header = rd.headers()?.clone();
        if header.len() != 1 || header.get(0) != Some("face") {
            return Err(MeshError::BadHeader(header.iter().collect::<Vec<_>>().join(",")));
        }
        let mut faces = Vec::new();
        for (k, rec) in rd.records().enumerate() {
            let rec = rec?;
            let raw = rec.get(0).unwrap_or("").trim();
            let value = raw
                .parse::<f64>()
                .ok()
                .and_then(T::from_f64)
                .ok_or_else(|| MeshError::BadValue {
                    line: k + 2,
                    value: raw.to_string(),
                })?;
            faces.push(value);
        }
        Self::from_faces(faces)
    }
}

/// `A = (dx_prev + dx) / (dx + dx_next)`, `B = 2 dx / (dx + dx_next)`.
#[inline]
pub fn cell_params<T: Real>(dx_prev: T, dx: T, dx_next: T) -> (T, T) {
    let right = dx + dx_next;
    ((dx_prev + dx) / right, T::two() * dx / right)
}

/// Tensor product of two 1D grids; cell `(i, j)` is x-cell `i` times y-cell `j`.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid2D<T> {
    pub x: Grid1D<T>,
    pub y: Grid1D<T>,
}

impl<T: Real> Grid2D<T> {
    pub fn new(x: Grid1D<T>, y: Grid1D<T>) -> Self {
        Self { x, y }
    }

    pub fn uniform(x_range: (T, T), y_range: (T, T), nx: usize, ny: usize) -> Result<Self, MeshError> {
        Ok(Self {
            x: Grid1D::uniform(x_range.0, x_range.1, nx)?,
            y: Grid1D::uniform(y_range.0, y_range.1, ny)?,
        })
    }

    /// Both axes perturbed independently from sub-streams of one seed.
    pub fn perturbed(
        x_range: (T, T),
        y_range: (T, T),
        nx: usize,
        ny: usize,
        params: PerturbationParams,
    ) -> Result<Self, MeshError> {
        let base = Self::uniform(x_range, y_range, nx, ny)?;
        let mut x_rng = params.rng();
        let mut y_rng = x_rng.clone();
        y_rng.jump();
        Ok(Self {
            x: base.x.perturb_with(params.r, &mut x_rng)?,
            y: base.y.perturb_with(params.r, &mut y_rng)?,
        })
    }

    pub fn nx(&self) -> usize {
        self.x.len()
    }

    pub fn ny(&self) -> usize {
        self.y.len()
    }
}

/// One grid per axis on `ranges`, uniform or perturbed. Axis `k` draws from the
/// seeded stream advanced by `k` jumps, so axes 0 and 1 match [`Grid2D::perturbed`].
pub fn axis_grids<T: Real>(
    ranges: &[(T, T)],
    cells: &[usize],
    perturbation: Option<PerturbationParams>,
) -> Result<Vec<Grid1D<T>>, MeshError> {
    ranges
        .iter()
        .zip(cells)
        .enumerate()
        .map(|(axis, (&(a, b), &n))| {
            let base = Grid1D::uniform(a, b, n)?;
            match perturbation {
                Some(p) => {
                    let mut rng = p.rng();
                    for _ in 0..axis {
                        rng.jump();
                    }
                    base.perturb_with(p.r, &mut rng)
                }
                None => Ok(base),
            }
        })
        .collect()
}

/// Ratio `r` in `[0, 0.5)` and the seed of the face-displacement stream.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PerturbationParams {
    r: f64,
    seed: u64,
}

impl PerturbationParams {
    pub fn new(r: f64, seed: u64) -> Result<Self, MeshError> {
        if !(0.0..0.5).contains(&r) {
            return Err(MeshError::InvalidRatio(r));
        }
        Ok(Self { r, seed })
    }

    pub fn r(&self) -> f64 {
        self.r
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    fn rng(&self) -> Xoshiro256PlusPlus {
        Xoshiro256PlusPlus::seed_from_u64(self.seed)
    }
}
