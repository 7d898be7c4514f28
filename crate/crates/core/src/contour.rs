//! Discrete contour state, stiffness/mass matrix assembly, and the discrete
//! energies, gradients and Hessian of the potential energy.

use nalgebra::{DMatrix, DVector, Vector2};

use crate::error::{Result, SnakeError};
use crate::potential::{Point, ScalarField};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Topology {
    /// First and last points are fixed boundary points.
    OpenFixedEnds,
    Closed,
}

/// Ordered control points of the discrete curve.
#[derive(Debug, Clone, PartialEq)]
pub struct Contour {
    points: Vec<Point>,
    topology: Topology,
}

impl Contour {
    pub fn new(points: Vec<Point>, topology: Topology) -> Result<Self> {
        if points.len() < 4 {
            return Err(SnakeError::Size(format!(
                "contour needs at least 4 points, got {}",
                points.len()
            )));
        }
        if points.iter().any(|p| !p.x.is_finite() || !p.y.is_finite()) {
            return Err(SnakeError::InvalidSpec("non-finite contour coordinate".into()));
        }
        Ok(Self { points, topology })
    }

    /// Closed contour sampling a circle counterclockwise.
    pub fn circle(center: Point, radius: f64, n_points: usize) -> Result<Self> {
        let points = (0..n_points)
            .map(|k| {
                let a = 2.0 * std::f64::consts::PI * k as f64 / n_points as f64;
                center + radius * Vector2::new(a.cos(), a.sin())
            })
            .collect();
        Self::new(points, Topology::Closed)
    }

    /// Open contour with `n_points` evenly spaced points from `a` to `b`.
    pub fn line(a: Point, b: Point, n_points: usize) -> Result<Self> {
        let points = (0..n_points)
            .map(|k| {
                let t = k as f64 / (n_points - 1).max(1) as f64;
                a + t * (b - a)
            })
            .collect();
        Self::new(points, Topology::OpenFixedEnds)
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn topology(&self) -> Topology {
        self.topology
    }

    /// Segment count N: open contours have len−1 segments, closed len.
    pub fn n_segments(&self) -> usize {
        match self.topology {
            Topology::OpenFixedEnds => self.points.len() - 1,
            Topology::Closed => self.points.len(),
        }
    }

    pub fn free_count(&self) -> usize {
        match self.topology {
            Topology::OpenFixedEnds => self.points.len() - 2,
            Topology::Closed => self.points.len(),
        }
    }

    pub fn free_indices(&self) -> std::ops::Range<usize> {
        match self.topology {
            Topology::OpenFixedEnds => 1..self.points.len() - 1,
            Topology::Closed => 0..self.points.len(),
        }
    }

    pub fn is_fixed(&self, index: usize) -> bool {
        match self.topology {
            Topology::OpenFixedEnds => index == 0 || index == self.points.len() - 1,
            Topology::Closed => false,
        }
    }

    /// Free coordinates stacked as (all x, then all y).
    pub fn free_vector(&self) -> DVector<f64> {
        let m = self.free_count();
        let mut v = DVector::zeros(2 * m);
        for (slot, idx) in self.free_indices().enumerate() {
            v[slot] = self.points[idx].x;
            v[m + slot] = self.points[idx].y;
        }
        v
    }

    /// Rebuild a contour from a stacked free vector, keeping fixed points.
    pub fn with_free_vector(&self, v: &DVector<f64>) -> Result<Self> {
        let m = self.free_count();
        if v.len() != 2 * m {
            return Err(SnakeError::Dimension(format!(
                "free vector length {} != {}",
                v.len(),
                2 * m
            )));
        }
        let mut points = self.points.clone();
        for (slot, idx) in self.free_indices().enumerate() {
            points[idx] = Point::new(v[slot], v[m + slot]);
        }
        Self::new(points, self.topology)
    }

    /// Polyline length, including the closing segment for closed contours.
    pub fn length(&self) -> f64 {
        let n = self.points.len();
        let mut total = 0.0;
        for i in 0..n - 1 {
            total += (self.points[i + 1] - self.points[i]).norm();
        }
        if self.topology == Topology::Closed {
            total += (self.points[0] - self.points[n - 1]).norm();
        }
        total
    }

    /// Serialize to CSV: `index,x,y,fixed`, one row per point.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("index,x,y,fixed\n");
        for (i, p) in self.points.iter().enumerate() {
            out.push_str(&format!(
                "{},{},{},{}\n",
                i,
                p.x,
                p.y,
                u8::from(self.is_fixed(i))
            ));
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        match lines.next() {
            Some("index,x,y,fixed") => {}
            other => {
                return Err(SnakeError::InvalidSpec(format!(
                    "bad contour CSV header: {other:?}"
                )))
            }
        }
        let mut points = Vec::new();
        let mut fixed = Vec::new();
        for (lineno, line) in lines.enumerate() {
            if line.is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != 4 {
                return Err(SnakeError::InvalidSpec(format!(
                    "contour CSV line {}: expected 4 fields",
                    lineno + 2
                )));
            }
            let parse = |s: &str| {
                s.parse::<f64>().map_err(|_| {
                    SnakeError::InvalidSpec(format!("contour CSV line {}: bad number", lineno + 2))
                })
            };
            points.push(Point::new(parse(fields[1])?, parse(fields[2])?));
            fixed.push(fields[3].trim() == "1");
        }
        let topology = if fixed.iter().any(|&f| f) {
            let ok = fixed.first() == Some(&true)
                && fixed.last() == Some(&true)
                && fixed[1..fixed.len() - 1].iter().all(|&f| !f);
            if !ok {
                return Err(SnakeError::InvalidSpec(
                    "fixed flags must mark exactly the first and last points".into(),
                ));
            }
            Topology::OpenFixedEnds
        } else {
            Topology::Closed
        };
        Self::new(points, topology)
    }
}

/// Physical and numerical parameters of the snake.
#[derive(Debug, Clone, Copy)]
pub struct SnakeParams {
    pub omega1: f64,
    pub omega2: f64,
    pub mu: f64,
    pub gamma: f64,
    pub tau: f64,
}

impl SnakeParams {
    pub fn new(omega1: f64, omega2: f64, mu: f64, gamma: f64, tau: f64) -> Result<Self> {
        let p = Self {
            omega1,
            omega2,
            mu,
            gamma,
            tau,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |name: &str, v: f64| SnakeError::InvalidSpec(format!("{name} = {v}"));
        if !(self.omega1 >= 0.0) {
            return Err(bad("omega1", self.omega1));
        }
        if !(self.omega2 >= 0.0) {
            return Err(bad("omega2", self.omega2));
        }
        if !(self.mu > 0.0) {
            return Err(bad("mu", self.mu));
        }
        if !(self.gamma >= 0.0) {
            return Err(bad("gamma", self.gamma));
        }
        if !(self.tau > 0.0) {
            return Err(bad("tau", self.tau));
        }
        Ok(())
    }
}

/// Difference operators and derived matrices for a contour of N segments.
///
/// B1 is the symmetric Toeplitz tridiagonal first-difference form
/// (first row 2, −1, 0, …) and B2 = B1² exactly. K acts blockwise on
/// the stacked (x, y) free coordinates.
#[derive(Debug, Clone)]
pub struct StiffnessSet {
    topology: Topology,
    n: usize,
    omega1: f64,
    omega2: f64,
    b1: DMatrix<f64>,
    b2: DMatrix<f64>,
    m0: DMatrix<f64>,
    k: DMatrix<f64>,
}

impl StiffnessSet {
    /// Assemble the matrices for a contour with `n_points` points.
    pub fn build(n_points: usize, topology: Topology, params: &SnakeParams) -> Result<Self> {
        params.validate()?;
        let (n, m) = match topology {
            Topology::OpenFixedEnds => {
                if n_points < 3 {
                    return Err(SnakeError::Size(format!(
                        "open contour needs at least 3 points, got {n_points}"
                    )));
                }
                (n_points - 1, n_points - 2)
            }
            Topology::Closed => {
                if n_points < 3 {
                    return Err(SnakeError::Size(format!(
                        "closed contour needs at least 3 points, got {n_points}"
                    )));
                }
                (n_points, n_points)
            }
        };
        let mut b1 = DMatrix::zeros(m, m);
        for i in 0..m {
            b1[(i, i)] = 2.0;
            match topology {
                Topology::OpenFixedEnds => {
                    if i + 1 < m {
                        b1[(i, i + 1)] = -1.0;
                        b1[(i + 1, i)] = -1.0;
                    }
                }
                Topology::Closed => {
                    b1[(i, (i + 1) % m)] += -1.0;
                    b1[(i, (i + m - 1) % m)] += -1.0;
                }
            }
        }
        let b2 = &b1 * &b1;
        let nf = n as f64;
        let kb = params.omega1 * nf * &b1 + params.omega2 * nf.powi(3) * &b2;
        let mut k = DMatrix::zeros(2 * m, 2 * m);
        k.view_mut((0, 0), (m, m)).copy_from(&kb);
        k.view_mut((m, m), (m, m)).copy_from(&kb);
        let m0 = DMatrix::identity(2 * m, 2 * m) / nf;
        Ok(Self {
            topology,
            n,
            omega1: params.omega1,
            omega2: params.omega2,
            b1,
            b2,
            m0,
            k,
        })
    }

    /// Replace the point-mass M0 with an arbitrary SPD mass matrix.
    pub fn with_mass_matrix(mut self, m0: DMatrix<f64>) -> Result<Self> {
        let dim = self.k.nrows();
        if m0.nrows() != dim || m0.ncols() != dim {
            return Err(SnakeError::Dimension(format!(
                "mass matrix must be {dim}x{dim}"
            )));
        }
        if m0.clone().cholesky().is_none() {
            return Err(SnakeError::Definiteness("supplied M0".into()));
        }
        self.m0 = m0;
        Ok(self)
    }

    pub fn topology(&self) -> Topology {
        self.topology
    }

    /// Segment count N.
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn omega1(&self) -> f64 {
        self.omega1
    }

    pub fn omega2(&self) -> f64 {
        self.omega2
    }

    pub fn free_count(&self) -> usize {
        self.k.nrows() / 2
    }

    pub fn b1(&self) -> &DMatrix<f64> {
        &self.b1
    }

    pub fn b2(&self) -> &DMatrix<f64> {
        &self.b2
    }

    pub fn m0(&self) -> &DMatrix<f64> {
        &self.m0
    }

    /// K = ω1·N·A1 + ω2·N³·A2 on the stacked free coordinates.
    pub fn k(&self) -> &DMatrix<f64> {
        &self.k
    }

    fn check(&self, contour: &Contour) -> Result<()> {
        if contour.topology() != self.topology || contour.free_count() != self.free_count() {
            return Err(SnakeError::Dimension(format!(
                "contour ({:?}, {} free) does not match stiffness ({:?}, {} free)",
                contour.topology(),
                contour.free_count(),
                self.topology,
                self.free_count()
            )));
        }
        Ok(())
    }
}

fn segment_pairs(contour: &Contour) -> Vec<(usize, usize)> {
    let len = contour.points().len();
    match contour.topology() {
        Topology::OpenFixedEnds => (0..len - 1).map(|i| (i, i + 1)).collect(),
        Topology::Closed => (0..len).map(|i| (i, (i + 1) % len)).collect(),
    }
}

fn second_difference_centers(contour: &Contour) -> Vec<usize> {
    let len = contour.points().len();
    match contour.topology() {
        Topology::OpenFixedEnds => (1..len - 1).collect(),
        Topology::Closed => (0..len).collect(),
    }
}

/// E_e = ω1·N·Σ‖q_{i+1}−q_i‖² + ω2·N³·Σ‖q_{i+1}−2q_i+q_{i−1}‖²
pub fn elastic_energy(contour: &Contour, stiffness: &StiffnessSet) -> Result<f64> {
    stiffness.check(contour)?;
    let pts = contour.points();
    let len = pts.len();
    let mut sum1 = 0.0;
    for (i, j) in segment_pairs(contour) {
        sum1 += (pts[j] - pts[i]).norm_squared();
    }
    let mut sum2 = 0.0;
    for i in second_difference_centers(contour) {
        let prev = pts[(i + len - 1) % len];
        let next = pts[(i + 1) % len];
        sum2 += (next - 2.0 * pts[i] + prev).norm_squared();
    }
    let nf = stiffness.n as f64;
    Ok(stiffness.omega1 * nf * sum1 + stiffness.omega2 * nf.powi(3) * sum2)
}

/// E_c = (1/N)·Σ over free points of P(q_i)
pub fn field_energy(contour: &Contour, field: &ScalarField) -> Result<f64> {
    let nf = contour.n_segments() as f64;
    let mut sum = 0.0;
    for idx in contour.free_indices() {
        sum += field.value(contour.points()[idx]).map_err(|_| SnakeError::DomainExit {
            iteration: 0,
            index: idx,
        })?;
    }
    Ok(sum / nf)
}

/// E_p = E_e + E_c
pub fn total_energy(contour: &Contour, field: &ScalarField, stiffness: &StiffnessSet) -> Result<f64> {
    Ok(elastic_energy(contour, stiffness)? + field_energy(contour, field)?)
}

fn add_free(
    grad: &mut DVector<f64>,
    contour: &Contour,
    m: usize,
    idx: usize,
    contribution: Vector2<f64>,
) {
    if contour.is_fixed(idx) {
        return;
    }
    let slot = match contour.topology() {
        Topology::OpenFixedEnds => idx - 1,
        Topology::Closed => idx,
    };
    grad[slot] += contribution.x;
    grad[m + slot] += contribution.y;
}

/// Exact gradient of the elastic energy with respect to the free coordinates.
fn elastic_gradient(contour: &Contour, stiffness: &StiffnessSet) -> DVector<f64> {
    let pts = contour.points();
    let len = pts.len();
    let m = contour.free_count();
    let nf = stiffness.n as f64;
    let mut grad = DVector::zeros(2 * m);
    let c1 = 2.0 * stiffness.omega1 * nf;
    if c1 != 0.0 {
        for (i, j) in segment_pairs(contour) {
            let d = pts[j] - pts[i];
            add_free(&mut grad, contour, m, i, -c1 * d);
            add_free(&mut grad, contour, m, j, c1 * d);
        }
    }
    let c2 = 2.0 * stiffness.omega2 * nf.powi(3);
    if c2 != 0.0 {
        for i in second_difference_centers(contour) {
            let prev = (i + len - 1) % len;
            let next = (i + 1) % len;
            let s = pts[next] - 2.0 * pts[i] + pts[prev];
            add_free(&mut grad, contour, m, prev, c2 * s);
            add_free(&mut grad, contour, m, i, -2.0 * c2 * s);
            add_free(&mut grad, contour, m, next, c2 * s);
        }
    }
    grad
}

/// Gradient of the field energy: (1/N)·∇P(q_i) per free point.
fn field_gradient(contour: &Contour, field: &ScalarField) -> Result<DVector<f64>> {
    let m = contour.free_count();
    let nf = contour.n_segments() as f64;
    let mut grad = DVector::zeros(2 * m);
    for (slot, idx) in contour.free_indices().enumerate() {
        let s = field
            .sample(contour.points()[idx])
            .map_err(|_| SnakeError::DomainExit {
                iteration: 0,
                index: idx,
            })?;
        grad[slot] = s.gradient.x / nf;
        grad[m + slot] = s.gradient.y / nf;
    }
    Ok(grad)
}

/// Exact gradient of the total energy with respect to free coordinates,
/// stacked (all x, then all y).
pub fn energy_gradient(
    contour: &Contour,
    field: &ScalarField,
    stiffness: &StiffnessSet,
) -> Result<DVector<f64>> {
    stiffness.check(contour)?;
    Ok(elastic_gradient(contour, stiffness) + field_gradient(contour, field)?)
}

/// External force F = −∇_d E_c.
pub fn external_force(contour: &Contour, field: &ScalarField) -> Result<DVector<f64>> {
    Ok(-field_gradient(contour, field)?)
}

/// D²E_p = 2K + blockdiag of the scaled per-point field Hessians.
pub fn hessian_ep(
    contour: &Contour,
    field: &ScalarField,
    stiffness: &StiffnessSet,
) -> Result<DMatrix<f64>> {
    stiffness.check(contour)?;
    let m = contour.free_count();
    let nf = contour.n_segments() as f64;
    let mut h = 2.0 * &stiffness.k;
    for (slot, idx) in contour.free_indices().enumerate() {
        let s = field
            .sample(contour.points()[idx])
            .map_err(|_| SnakeError::DomainExit {
                iteration: 0,
                index: idx,
            })?;
        h[(slot, slot)] += s.hessian[(0, 0)] / nf;
        h[(m + slot, m + slot)] += s.hessian[(1, 1)] / nf;
        h[(slot, m + slot)] += s.hessian[(0, 1)] / nf;
        h[(m + slot, slot)] += s.hessian[(0, 1)] / nf;
    }
    Ok(h)
}
