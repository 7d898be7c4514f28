//! External potential fields: synthetic analytic potentials, image-derived
//! edge maps, and the polar-frame quantities (e1, e2) that feed the
//! convexity certificate.

use nalgebra::{Matrix2, Vector2};

use crate::error::{Result, SnakeError};

pub type Point = Vector2<f64>;

/// Gradient magnitudes below this leave the isopotential normal undefined.
pub const GRADIENT_FLOOR: f64 = 1e-8;

/// A discrete 2-D potential with value, gradient and Hessian evaluation.
#[derive(Debug, Clone)]
pub enum ScalarField {
    /// P = (k/2)·‖x − c‖²
    Quadratic { center: Point, strength: f64 },
    /// P = −a·exp(−‖x − c‖² / (2 s²))
    Gaussian {
        center: Point,
        amplitude: f64,
        sigma: f64,
    },
    /// P = (k/2)·(‖x − c‖ − R)²
    Annulus {
        center: Point,
        strength: f64,
        radius: f64,
    },
    Grid(GridField),
}

/// Regular grid of samples with uniform spacing, row-major storage.
#[derive(Debug, Clone)]
pub struct GridField {
    width: usize,
    height: usize,
    spacing: f64,
    values: Vec<f64>,
}

impl GridField {
    pub fn new(width: usize, height: usize, spacing: f64, values: Vec<f64>) -> Result<Self> {
        // derivative sampling needs a 3x3 interior; value-only grids may be 2x2
        if width < 2 || height < 2 {
            return Err(SnakeError::InvalidSpec(format!(
                "grid must be at least 2x2, got {width}x{height}"
            )));
        }
        if !(spacing > 0.0) || !spacing.is_finite() {
            return Err(SnakeError::InvalidSpec(format!("spacing must be positive, got {spacing}")));
        }
        if values.len() != width * height {
            return Err(SnakeError::InvalidSpec(format!(
                "expected {} values, got {}",
                width * height,
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(SnakeError::InvalidSpec("non-finite grid value".into()));
        }
        Ok(Self {
            width,
            height,
            spacing,
            values,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    fn at(&self, col: usize, row: usize) -> f64 {
        self.values[row * self.width + col]
    }

    /// Central-difference gradient at a lattice node with 1-node margin.
    fn node_gradient(&self, col: usize, row: usize) -> Vector2<f64> {
        let h2 = 2.0 * self.spacing;
        Vector2::new(
            (self.at(col + 1, row) - self.at(col - 1, row)) / h2,
            (self.at(col, row + 1) - self.at(col, row - 1)) / h2,
        )
    }

    /// Central-difference Hessian (pxx, pxy, pyy) at a lattice node.
    fn node_hessian(&self, col: usize, row: usize) -> (f64, f64, f64) {
        let h = self.spacing;
        let hh = h * h;
        let pxx = (self.at(col + 1, row) - 2.0 * self.at(col, row) + self.at(col - 1, row)) / hh;
        let pyy = (self.at(col, row + 1) - 2.0 * self.at(col, row) + self.at(col, row - 1)) / hh;
        let pxy = (self.at(col + 1, row + 1) - self.at(col + 1, row - 1)
            - self.at(col - 1, row + 1)
            + self.at(col - 1, row - 1))
            / (4.0 * hh);
        (pxx, pxy, pyy)
    }
}

/// Value, gradient and symmetric Hessian of a field at one point.
#[derive(Debug, Clone, Copy)]
pub struct FieldSample {
    pub value: f64,
    pub gradient: Vector2<f64>,
    pub hessian: Matrix2<f64>,
}

impl FieldSample {
    fn from_parts(value: f64, gradient: Vector2<f64>, pxx: f64, pxy: f64, pyy: f64) -> Self {
        // single stored triangle: off-diagonals are the same f64
        Self {
            value,
            gradient,
            hessian: Matrix2::new(pxx, pxy, pxy, pyy),
        }
    }
}

fn check_param(name: &str, value: f64, must_be_positive: bool) -> Result<()> {
    if !value.is_finite() || (must_be_positive && !(value > 0.0)) {
        return Err(SnakeError::InvalidSpec(format!("{name} = {value}")));
    }
    Ok(())
}

impl ScalarField {
    pub fn quadratic(center: Point, strength: f64) -> Result<Self> {
        check_param("center.x", center.x, false)?;
        check_param("center.y", center.y, false)?;
        check_param("strength", strength, true)?;
        Ok(Self::Quadratic { center, strength })
    }

    pub fn gaussian(center: Point, amplitude: f64, sigma: f64) -> Result<Self> {
        check_param("center.x", center.x, false)?;
        check_param("center.y", center.y, false)?;
        check_param("amplitude", amplitude, false)?;
        check_param("sigma", sigma, true)?;
        Ok(Self::Gaussian {
            center,
            amplitude,
            sigma,
        })
    }

    pub fn annulus(center: Point, strength: f64, radius: f64) -> Result<Self> {
        check_param("center.x", center.x, false)?;
        check_param("center.y", center.y, false)?;
        check_param("strength", strength, true)?;
        check_param("radius", radius, true)?;
        Ok(Self::Annulus {
            center,
            strength,
            radius,
        })
    }

    /// A negated inverted copy is handy in tests; scaling by a finite factor
    /// stays within the analytic closed forms, so expose strength directly.
    pub fn grid(field: GridField) -> Self {
        Self::Grid(field)
    }

    pub fn as_grid(&self) -> Option<&GridField> {
        match self {
            Self::Grid(g) => Some(g),
            _ => None,
        }
    }

    /// Axis-aligned rectangle over which value sampling is defined, if the
    /// field is bounded (grid kind only).
    pub fn domain(&self) -> Option<(Point, Point)> {
        match self {
            Self::Grid(g) => Some((
                Point::new(0.0, 0.0),
                Point::new(
                    (g.width - 1) as f64 * g.spacing,
                    (g.height - 1) as f64 * g.spacing,
                ),
            )),
            _ => None,
        }
    }

    /// Bilinear value only; grid kind accepts any point in the full domain.
    pub fn value(&self, p: Point) -> Result<f64> {
        match self {
            Self::Grid(g) => {
                let (u, v) = (p.x / g.spacing, p.y / g.spacing);
                let (wm, hm) = ((g.width - 1) as f64, (g.height - 1) as f64);
                if !(0.0..=wm).contains(&u) || !(0.0..=hm).contains(&v) {
                    return Err(SnakeError::OutOfDomain { point: p });
                }
                let i0 = (u.floor() as usize).min(g.width - 2);
                let j0 = (v.floor() as usize).min(g.height - 2);
                let (fx, fy) = (u - i0 as f64, v - j0 as f64);
                let v00 = g.at(i0, j0);
                let v10 = g.at(i0 + 1, j0);
                let v01 = g.at(i0, j0 + 1);
                let v11 = g.at(i0 + 1, j0 + 1);
                Ok(v00 * (1.0 - fx) * (1.0 - fy)
                    + v10 * fx * (1.0 - fy)
                    + v01 * (1.0 - fx) * fy
                    + v11 * fx * fy)
            }
            _ => Ok(self.sample(p)?.value),
        }
    }

    /// Value, gradient and Hessian. Grid kind requires the point at least
    /// one pixel inside the border so the central-difference stencils fit.
    pub fn sample(&self, p: Point) -> Result<FieldSample> {
        match *self {
            Self::Quadratic { center, strength } => {
                let d = p - center;
                Ok(FieldSample::from_parts(
                    0.5 * strength * d.norm_squared(),
                    strength * d,
                    strength,
                    0.0,
                    strength,
                ))
            }
            Self::Gaussian {
                center,
                amplitude,
                sigma,
            } => {
                let d = p - center;
                let s2 = sigma * sigma;
                let g = (-d.norm_squared() / (2.0 * s2)).exp();
                let grad = (amplitude / s2) * g * d;
                let c = amplitude * g / s2;
                let q = amplitude * g / (s2 * s2);
                Ok(FieldSample::from_parts(
                    -amplitude * g,
                    grad,
                    c - q * d.x * d.x,
                    -q * d.x * d.y,
                    c - q * d.y * d.y,
                ))
            }
            Self::Annulus {
                center,
                strength,
                radius,
            } => {
                let d = p - center;
                let rho = d.norm();
                if rho < 1e-12 {
                    // gradient undefined at the annulus center
                    return Err(SnakeError::OutOfDomain { point: p });
                }
                let u = d / rho;
                let value = 0.5 * strength * (rho - radius) * (rho - radius);
                let grad = strength * (rho - radius) * u;
                // H = k u uᵀ + k (ρ−R)/ρ (I − u uᵀ)
                let t = strength * (rho - radius) / rho;
                let pxx = strength * u.x * u.x + t * (1.0 - u.x * u.x);
                let pyy = strength * u.y * u.y + t * (1.0 - u.y * u.y);
                let pxy = (strength - t) * u.x * u.y;
                Ok(FieldSample::from_parts(value, grad, pxx, pxy, pyy))
            }
            Self::Grid(ref g) => {
                let (u, v) = (p.x / g.spacing, p.y / g.spacing);
                let (lo, hi_u, hi_v) = (1.0, (g.width - 2) as f64, (g.height - 2) as f64);
                if !(lo..=hi_u).contains(&u) || !(lo..=hi_v).contains(&v) {
                    return Err(SnakeError::OutOfDomain { point: p });
                }
                let i0 = (u.floor() as usize).clamp(1, g.width.saturating_sub(3).max(1));
                let j0 = (v.floor() as usize).clamp(1, g.height.saturating_sub(3).max(1));
                let (fx, fy) = (u - i0 as f64, v - j0 as f64);
                let w = [
                    (1.0 - fx) * (1.0 - fy),
                    fx * (1.0 - fy),
                    (1.0 - fx) * fy,
                    fx * fy,
                ];
                let nodes = [(i0, j0), (i0 + 1, j0), (i0, j0 + 1), (i0 + 1, j0 + 1)];
                let mut grad = Vector2::zeros();
                let (mut pxx, mut pxy, mut pyy) = (0.0, 0.0, 0.0);
                let mut value = 0.0;
                for (wk, (i, j)) in w.iter().zip(nodes) {
                    if *wk == 0.0 {
                        // zero-weight corners may sit on the margin; skip them
                        continue;
                    }
                    value += wk * g.at(i, j);
                    grad += *wk * g.node_gradient(i, j);
                    let (a, b, c) = g.node_hessian(i, j);
                    pxx += wk * a;
                    pxy += wk * b;
                    pyy += wk * c;
                }
                Ok(FieldSample::from_parts(value, grad, pxx, pxy, pyy))
            }
        }
    }
}

/// Polar-frame quantities at a point: the frame is taken along the unit
/// gradient, r is the signed curvature radius of the isopotential
/// (infinite when the isopotential is locally straight).
#[derive(Debug, Clone, Copy)]
pub struct PolarFrame {
    pub r: f64,
    pub p_r: f64,
    pub p_rr: f64,
    pub e1: f64,
    pub e2: f64,
}

/// e1 = P_rr/2 and e2 = P_r/(2r) in the local polar frame of the
/// isopotential curve through `p`.
pub fn polar_quantities(field: &ScalarField, p: Point) -> Result<PolarFrame> {
    let s = field.sample(p)?;
    let gnorm = s.gradient.norm();
    if gnorm < GRADIENT_FLOOR {
        return Err(SnakeError::DegenerateFrame { magnitude: gnorm });
    }
    let n = s.gradient / gnorm;
    let p_r = gnorm;
    let p_rr = (n.transpose() * s.hessian * n)[(0, 0)];
    // implicit-curve curvature of the isopotential
    let (gx, gy) = (s.gradient.x, s.gradient.y);
    let kappa = (gx * gx * s.hessian[(1, 1)] - 2.0 * gx * gy * s.hessian[(0, 1)]
        + gy * gy * s.hessian[(0, 0)])
        / (gnorm * gnorm * gnorm);
    let (r, e2) = if kappa.abs() < 1e-300 {
        (f64::INFINITY, 0.0)
    } else {
        (1.0 / kappa, p_r * kappa / 2.0)
    };
    Ok(PolarFrame {
        r,
        p_r,
        p_rr,
        e1: p_rr / 2.0,
        e2,
    })
}

/// Sub-region R' of the field domain over which the convexity certificate
/// is evaluated.
#[derive(Debug, Clone)]
pub enum RegionShape {
    Rectangle { min: Point, max: Point },
    Disk { center: Point, radius: f64 },
}

#[derive(Debug, Clone)]
pub struct Region {
    pub shape: RegionShape,
    pub boundary_samples: usize,
}

impl Region {
    pub fn rectangle(min: Point, max: Point, boundary_samples: usize) -> Result<Self> {
        if !(max.x > min.x && max.y > min.y) {
            return Err(SnakeError::InvalidSpec("degenerate rectangle region".into()));
        }
        Ok(Self {
            shape: RegionShape::Rectangle { min, max },
            boundary_samples,
        })
    }

    pub fn disk(center: Point, radius: f64, boundary_samples: usize) -> Result<Self> {
        if !(radius > 0.0) || !radius.is_finite() {
            return Err(SnakeError::InvalidSpec("degenerate disk region".into()));
        }
        Ok(Self {
            shape: RegionShape::Disk { center, radius },
            boundary_samples,
        })
    }

    pub fn contains(&self, p: Point) -> bool {
        match self.shape {
            RegionShape::Rectangle { min, max } => {
                p.x >= min.x && p.x <= max.x && p.y >= min.y && p.y <= max.y
            }
            RegionShape::Disk { center, radius } => (p - center).norm() <= radius,
        }
    }

    pub fn bounding_box(&self) -> (Point, Point) {
        match self.shape {
            RegionShape::Rectangle { min, max } => (min, max),
            RegionShape::Disk { center, radius } => (
                Point::new(center.x - radius, center.y - radius),
                Point::new(center.x + radius, center.y + radius),
            ),
        }
    }

    /// Evenly spaced points on the region boundary.
    pub fn boundary_points(&self) -> Vec<Point> {
        let n = self.boundary_samples.max(4);
        match self.shape {
            RegionShape::Disk { center, radius } => (0..n)
                .map(|k| {
                    let a = 2.0 * std::f64::consts::PI * k as f64 / n as f64;
                    center + radius * Vector2::new(a.cos(), a.sin())
                })
                .collect(),
            RegionShape::Rectangle { min, max } => {
                let (w, h) = (max.x - min.x, max.y - min.y);
                let perim = 2.0 * (w + h);
                (0..n)
                    .map(|k| {
                        let mut t = perim * k as f64 / n as f64;
                        if t < w {
                            return Point::new(min.x + t, min.y);
                        }
                        t -= w;
                        if t < h {
                            return Point::new(max.x, min.y + t);
                        }
                        t -= h;
                        if t < w {
                            return Point::new(max.x - t, max.y);
                        }
                        t -= w;
                        Point::new(min.x, max.y - t)
                    })
                    .collect()
            }
        }
    }
}

/// Result of scanning min(e1, e2) over a region.
#[derive(Debug, Clone, Copy)]
pub struct RegionScan {
    /// A(R') = min over the sampling of min(e1, e2).
    pub a: f64,
    pub argmin: Point,
    pub skipped: usize,
    pub samples: usize,
}

fn region_lattice(region: &Region, grid_step: f64) -> Vec<Point> {
    let (min, max) = region.bounding_box();
    let nx = ((max.x - min.x) / grid_step).floor() as usize + 1;
    let ny = ((max.y - min.y) / grid_step).floor() as usize + 1;
    let mut pts = Vec::with_capacity(nx * ny);
    for j in 0..ny {
        for i in 0..nx {
            let p = Point::new(min.x + i as f64 * grid_step, min.y + j as f64 * grid_step);
            if region.contains(p) {
                pts.push(p);
            }
        }
    }
    pts
}

fn scan_point(field: &ScalarField, p: Point) -> Option<(f64, Point)> {
    polar_quantities(field, p).ok().map(|f| (f.e1.min(f.e2), p))
}

fn reduce_scan(
    results: impl Iterator<Item = Option<(f64, Point)>>,
) -> (Option<(f64, Point)>, usize) {
    let mut best: Option<(f64, Point)> = None;
    let mut skipped = 0usize;
    for r in results {
        match r {
            // ties keep the earliest (lowest row-major) sample
            Some((v, p)) => {
                if best.map_or(true, |(bv, _)| v < bv) {
                    best = Some((v, p));
                }
            }
            None => skipped += 1,
        }
    }
    (best, skipped)
}

/// Minimum of min(e1, e2) over a regular sampling of the region.
///
/// Degenerate-frame and out-of-domain samples are skipped and counted.
/// The result is deterministic regardless of the parallel feature: ties
/// are broken by the lowest row-major sample index.
pub fn region_min_a(field: &ScalarField, region: &Region, grid_step: f64) -> Result<RegionScan> {
    region_min_a_impl(field, region, grid_step, cfg!(feature = "parallel"))
}

#[doc(hidden)]
pub fn region_min_a_impl(
    field: &ScalarField,
    region: &Region,
    grid_step: f64,
    parallel: bool,
) -> Result<RegionScan> {
    if !(grid_step > 0.0) {
        return Err(SnakeError::Precondition(format!("grid_step = {grid_step}")));
    }
    let pts = region_lattice(region, grid_step);
    if pts.len() < 9 {
        return Err(SnakeError::Precondition(format!(
            "region sampling yields only {} points (need >= 9); shrink grid_step",
            pts.len()
        )));
    }
    let (best, skipped) = if parallel {
        scan_chunks(field, &pts)
    } else {
        reduce_scan(pts.iter().map(|&p| scan_point(field, p)))
    };
    match best {
        Some((a, argmin)) => Ok(RegionScan {
            a,
            argmin,
            skipped,
            samples: pts.len(),
        }),
        None => Err(SnakeError::NoValidSample { total: pts.len() }),
    }
}

#[cfg(feature = "parallel")]
fn scan_chunks(field: &ScalarField, pts: &[Point]) -> (Option<(f64, Point)>, usize) {
    use rayon::prelude::*;
    // chunk-local reductions keep the row-major tie-break deterministic
    let partials: Vec<_> = pts
        .par_chunks(1024)
        .map(|chunk| reduce_scan(chunk.iter().map(|&p| scan_point(field, p))))
        .collect();
    let mut best = None;
    let mut skipped = 0;
    for (b, s) in partials {
        skipped += s;
        if let Some((v, p)) = b {
            if best.map_or(true, |(bv, _): (f64, Point)| v < bv) {
                best = Some((v, p));
            }
        }
    }
    (best, skipped)
}

#[cfg(not(feature = "parallel"))]
fn scan_chunks(field: &ScalarField, pts: &[Point]) -> (Option<(f64, Point)>, usize) {
    reduce_scan(pts.iter().map(|&p| scan_point(field, p)))
}

/// Edge-map potential P = −‖∇(G_σ * I)‖² for a grid image.
pub fn edge_potential(image: &ScalarField, sigma: f64) -> Result<ScalarField> {
    let g = image
        .as_grid()
        .ok_or_else(|| SnakeError::Precondition("edge_potential requires a grid field".into()))?;
    if !(sigma >= 0.0) {
        return Err(SnakeError::Precondition(format!("sigma = {sigma}")));
    }
    let (w, h) = (g.width, g.height);
    let smoothed = if sigma > 0.0 {
        let radius = (3.0 * sigma).ceil() as i64;
        let mut kernel = Vec::with_capacity((2 * radius + 1) as usize);
        for k in -radius..=radius {
            kernel.push((-((k * k) as f64) / (2.0 * sigma * sigma)).exp());
        }
        let sum: f64 = kernel.iter().sum();
        for k in &mut kernel {
            *k /= sum;
        }
        let clamp = |v: i64, hi: usize| v.clamp(0, hi as i64 - 1) as usize;
        // separable blur with clamped-edge extension
        let mut tmp = vec![0.0; w * h];
        for row in 0..h {
            for col in 0..w {
                let mut acc = 0.0;
                for (idx, kv) in kernel.iter().enumerate() {
                    let c = clamp(col as i64 + idx as i64 - radius, w);
                    acc += kv * g.at(c, row);
                }
                tmp[row * w + col] = acc;
            }
        }
        let mut out = vec![0.0; w * h];
        for row in 0..h {
            for col in 0..w {
                let mut acc = 0.0;
                for (idx, kv) in kernel.iter().enumerate() {
                    let r = clamp(row as i64 + idx as i64 - radius, h);
                    acc += kv * tmp[r * w + col];
                }
                out[row * w + col] = acc;
            }
        }
        out
    } else {
        g.values.clone()
    };
    let at = |col: usize, row: usize| smoothed[row * w + col];
    let h2 = 2.0 * g.spacing;
    let mut out = vec![0.0; w * h];
    for row in 0..h {
        for col in 0..w {
            let cl = col.saturating_sub(1);
            let cr = (col + 1).min(w - 1);
            let rl = row.saturating_sub(1);
            let rr = (row + 1).min(h - 1);
            let gx = (at(cr, row) - at(cl, row)) / h2;
            let gy = (at(col, rr) - at(col, rl)) / h2;
            out[row * w + col] = -(gx * gx + gy * gy);
        }
    }
    Ok(ScalarField::Grid(GridField::new(w, h, g.spacing, out)?))
}

// ---------------------------------------------------------------------------
// PGM (P2/P5) reader and writer
// ---------------------------------------------------------------------------

struct PgmCursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> PgmCursor<'a> {
    fn err(&self, message: impl Into<String>) -> SnakeError {
        SnakeError::PgmParse {
            offset: self.pos,
            message: message.into(),
        }
    }

    /// Skip whitespace and '#' comments running to end of line.
    fn skip_separators(&mut self) {
        while self.pos < self.bytes.len() {
            let b = self.bytes[self.pos];
            if b.is_ascii_whitespace() {
                self.pos += 1;
            } else if b == b'#' {
                while self.pos < self.bytes.len() && self.bytes[self.pos] != b'\n' {
                    self.pos += 1;
                }
            } else {
                break;
            }
        }
    }

    fn token(&mut self) -> Result<&'a [u8]> {
        self.skip_separators();
        let start = self.pos;
        while self.pos < self.bytes.len() && !self.bytes[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(self.err("unexpected end of header"));
        }
        Ok(&self.bytes[start..self.pos])
    }

    fn number(&mut self, what: &str) -> Result<usize> {
        let tok = self.token()?;
        std::str::from_utf8(tok)
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| self.err(format!("invalid {what}")))
    }
}

/// Parse a P2 (ASCII) or P5 (binary) PGM stream into a grid field with
/// values normalized to [0, 1] and spacing 1.
pub fn load_pgm(bytes: &[u8]) -> Result<ScalarField> {
    let mut cur = PgmCursor { bytes, pos: 0 };
    let magic = cur.token()?;
    let binary = match magic {
        b"P2" => false,
        b"P5" => true,
        _ => {
            return Err(SnakeError::PgmParse {
                offset: 0,
                message: "expected P2 or P5 magic".into(),
            })
        }
    };
    let width = cur.number("width")?;
    let height = cur.number("height")?;
    let maxval = cur.number("maxval")?;
    if !(1..=65535).contains(&maxval) {
        return Err(cur.err(format!("maxval {maxval} out of range [1, 65535]")));
    }
    let count = width
        .checked_mul(height)
        .ok_or_else(|| cur.err("image dimensions overflow"))?;
    let mut raw = Vec::with_capacity(count);
    if binary {
        // exactly one whitespace byte after maxval
        if cur.pos >= bytes.len() || !bytes[cur.pos].is_ascii_whitespace() {
            return Err(cur.err("expected single whitespace after maxval"));
        }
        cur.pos += 1;
        let wide = maxval > 255;
        let need = count * if wide { 2 } else { 1 };
        if bytes.len() - cur.pos < need {
            cur.pos = bytes.len();
            return Err(cur.err("truncated pixel data"));
        }
        for k in 0..count {
            let v = if wide {
                let i = cur.pos + 2 * k;
                u16::from_be_bytes([bytes[i], bytes[i + 1]]) as usize
            } else {
                bytes[cur.pos + k] as usize
            };
            raw.push(v);
        }
        cur.pos += need;
    } else {
        for _ in 0..count {
            raw.push(cur.number("pixel value")?);
        }
    }
    if let Some(&bad) = raw.iter().find(|&&v| v > maxval) {
        return Err(cur.err(format!("pixel value {bad} exceeds maxval {maxval}")));
    }
    let values = raw.iter().map(|&v| v as f64 / maxval as f64).collect();
    Ok(ScalarField::Grid(GridField::new(width, height, 1.0, values)?))
}

/// Emit a grid as binary P5 with maxval 255, scaling values from
/// [lo, hi] to [0, 255].
pub fn write_pgm(grid: &GridField, lo: f64, hi: f64) -> Vec<u8> {
    let span = if hi > lo { hi - lo } else { 1.0 };
    let mut out = format!("P5\n{} {}\n255\n", grid.width, grid.height).into_bytes();
    for v in &grid.values {
        let scaled = ((v - lo) / span * 255.0).round().clamp(0.0, 255.0) as u8;
        out.push(scaled);
    }
    out
}
