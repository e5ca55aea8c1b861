//! Shared value types: operator parameters, grids, fields, growth weights,
//! and the hypothesis checks on the jump coefficient.

use crate::Error;
use serde::Serialize;
use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

/// Declared bounds for a variable jump coefficient: ellipticity window
/// [kappa0, kappa1], Holder constant kappa2 and exponent beta.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct KappaBounds {
    pub kappa0: f64,
    pub kappa1: f64,
    pub kappa2: f64,
    pub beta: f64,
}

/// Jump coefficient kappa(x, z). Either a constant or a caller-supplied
/// function with declared bounds; the library never infers beta.
#[derive(Clone)]
pub enum Kappa {
    Constant(f64),
    Callable {
        f: Arc<dyn Fn(&[f64], &[f64]) -> f64 + Send + Sync>,
        bounds: KappaBounds,
    },
}

impl Kappa {
    pub fn eval(&self, x: &[f64], z: &[f64]) -> f64 {
        match self {
            Kappa::Constant(c) => *c,
            Kappa::Callable { f, .. } => f(x, z),
        }
    }

    pub fn is_constant(&self) -> bool {
        matches!(self, Kappa::Constant(_))
    }

    pub fn bounds(&self) -> KappaBounds {
        match self {
            Kappa::Constant(c) => KappaBounds {
                kappa0: *c,
                kappa1: *c,
                kappa2: 0.0,
                beta: 1.0,
            },
            Kappa::Callable { bounds, .. } => *bounds,
        }
    }
}

impl fmt::Debug for Kappa {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Kappa::Constant(c) => write!(f, "Kappa::Constant({c})"),
            Kappa::Callable { bounds, .. } => write!(f, "Kappa::Callable({bounds:?})"),
        }
    }
}

/// Parameters of one nonlocal operator of order alpha in dimension dim.
///
/// alpha = 2 is admitted only as the Gaussian limit; singular-integral
/// paths reject it.
#[derive(Clone, Debug)]
pub struct KernelParams {
    pub alpha: f64,
    pub dim: usize,
    pub kappa: Kappa,
}

impl KernelParams {
    pub fn new(alpha: f64, dim: usize, kappa: Kappa) -> Result<Self, Error> {
        if !(alpha > 0.0 && alpha <= 2.0) {
            return Err(Error::InvalidParams(format!(
                "alpha must lie in (0, 2], got {alpha}"
            )));
        }
        if !(1..=3).contains(&dim) {
            return Err(Error::InvalidParams(format!("dim must be 1, 2 or 3, got {dim}")));
        }
        let b = kappa.bounds();
        if !(b.kappa0 > 0.0 && b.kappa1 >= b.kappa0 && b.kappa2 >= 0.0) {
            return Err(Error::InvalidParams(format!(
                "kappa bounds must satisfy 0 < kappa0 <= kappa1, kappa2 >= 0, got {b:?}"
            )));
        }
        if let Kappa::Callable { bounds, .. } = &kappa {
            if !(bounds.beta > 0.0 && bounds.beta < 1.0) {
                return Err(Error::InvalidParams(format!(
                    "Holder exponent beta must lie in (0,1), got {}",
                    bounds.beta
                )));
            }
        }
        Ok(KernelParams { alpha, dim, kappa })
    }

    /// Constant-coefficient operator with kappa = 1.
    pub fn isotropic(alpha: f64, dim: usize) -> Result<Self, Error> {
        KernelParams::new(alpha, dim, Kappa::Constant(1.0))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Topology {
    PeriodicTorus,
    TruncatedLine,
}

/// Uniform grid. Periodic grids have period 2*pi per axis, so Fourier
/// modes are integers; truncated-line grids carry an explicit half-width.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Grid {
    pub dim: usize,
    pub n_per_axis: usize,
    pub spacing: f64,
    pub extent: f64,
    pub topology: Topology,
}

impl Grid {
    pub fn torus(dim: usize, n_per_axis: usize) -> Result<Self, Error> {
        Self::check_axis(dim, n_per_axis)?;
        Ok(Grid {
            dim,
            n_per_axis,
            spacing: 2.0 * PI / n_per_axis as f64,
            extent: PI,
            topology: Topology::PeriodicTorus,
        })
    }

    pub fn line(dim: usize, n_per_axis: usize, half_width: f64) -> Result<Self, Error> {
        Self::check_axis(dim, n_per_axis)?;
        if !(half_width > 0.0) {
            return Err(Error::InvalidParams(format!(
                "half_width must be positive, got {half_width}"
            )));
        }
        Ok(Grid {
            dim,
            n_per_axis,
            spacing: 2.0 * half_width / n_per_axis as f64,
            extent: half_width,
            topology: Topology::TruncatedLine,
        })
    }

    fn check_axis(dim: usize, n: usize) -> Result<(), Error> {
        if !(1..=3).contains(&dim) {
            return Err(Error::InvalidParams(format!("dim must be 1, 2 or 3, got {dim}")));
        }
        if n < 8 || n % 2 != 0 {
            return Err(Error::InvalidParams(format!(
                "nodes per axis must be even and >= 8, got {n}"
            )));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.n_per_axis.pow(self.dim as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Coordinate of node index along one axis.
    pub fn axis_coord(&self, i: usize) -> f64 {
        match self.topology {
            Topology::PeriodicTorus => i as f64 * self.spacing,
            Topology::TruncatedLine => -self.extent + i as f64 * self.spacing,
        }
    }

    /// Full coordinates of a flattened node index (row major).
    pub fn coords(&self, mut flat: usize) -> Vec<f64> {
        let mut c = vec![0.0; self.dim];
        for ax in (0..self.dim).rev() {
            c[ax] = self.axis_coord(flat % self.n_per_axis);
            flat /= self.n_per_axis;
        }
        c
    }

    /// Distance from a node to the origin of the chart. On the torus this is
    /// the geodesic distance, min(|x|, 2*pi - |x|) per axis.
    pub fn dist_to_origin(&self, coords: &[f64]) -> f64 {
        let mut s = 0.0;
        for &x in coords {
            let d = match self.topology {
                Topology::PeriodicTorus => {
                    let w = x.rem_euclid(2.0 * PI);
                    w.min(2.0 * PI - w)
                }
                Topology::TruncatedLine => x.abs(),
            };
            s += d * d;
        }
        s.sqrt()
    }

    /// Does `fine` refine `self` by an integer factor with aligned nodes?
    pub fn refines(&self, fine: &Grid) -> bool {
        fine.dim == self.dim
            && fine.topology == self.topology
            && (fine.extent - self.extent).abs() < 1e-12
            && fine.n_per_axis % self.n_per_axis == 0
    }
}

/// Real-valued samples over a grid. Values stay finite; any operation that
/// could produce NaN/Inf is checked.
#[derive(Clone, Debug, PartialEq)]
pub struct Field {
    pub grid: Grid,
    values: Vec<f64>,
}

impl Field {
    pub fn from_values(grid: Grid, values: Vec<f64>) -> Result<Self, Error> {
        if values.len() != grid.len() {
            return Err(Error::InvalidParams(format!(
                "value count {} does not match grid size {}",
                values.len(),
                grid.len()
            )));
        }
        if let Some(bad) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Domain(format!(
                "non-finite field value {} at node {bad}",
                values[bad]
            )));
        }
        Ok(Field { grid, values })
    }

    pub fn from_fn<F: Fn(&[f64]) -> f64>(grid: Grid, f: F) -> Result<Self, Error> {
        let values = (0..grid.len()).map(|i| f(&grid.coords(i))).collect();
        Field::from_values(grid, values)
    }

    pub fn zeros(grid: Grid) -> Self {
        let n = grid.len();
        Field {
            grid,
            values: vec![0.0; n],
        }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn add(&self, other: &Field) -> Result<Field, Error> {
        self.zip(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Field) -> Result<Field, Error> {
        self.zip(other, |a, b| a - b)
    }

    pub fn scale(&self, k: f64) -> Result<Field, Error> {
        Field::from_values(self.grid.clone(), self.values.iter().map(|v| v * k).collect())
    }

    /// Pointwise real power. Negative bases with non-integer exponents are
    /// rejected rather than silently producing NaN.
    pub fn pointwise_pow(&self, p: f64) -> Result<Field, Error> {
        let vals: Vec<f64> = if p == p.round() && p >= 0.0 {
            self.values.iter().map(|v| v.powi(p as i32)).collect()
        } else {
            let mut out = Vec::with_capacity(self.values.len());
            for &v in &self.values {
                if v < 0.0 {
                    return Err(Error::Domain(format!(
                        "pointwise power {p} of negative value {v}"
                    )));
                }
                out.push(v.powf(p));
            }
            out
        };
        Field::from_values(self.grid.clone(), vals)
    }

    fn zip(&self, other: &Field, op: impl Fn(f64, f64) -> f64) -> Result<Field, Error> {
        if self.grid != other.grid {
            return Err(Error::InvalidParams("field grids differ".into()));
        }
        Field::from_values(
            self.grid.clone(),
            self.values
                .iter()
                .zip(other.values.iter())
                .map(|(&a, &b)| op(a, b))
                .collect(),
        )
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    /// Restrict to a coarser aligned grid by subsampling.
    pub fn restrict_to(&self, coarse: &Grid) -> Result<Field, Error> {
        if !coarse.refines(&self.grid) {
            return Err(Error::InvalidParams(
                "restriction target is not an aligned coarsening".into(),
            ));
        }
        let step = self.grid.n_per_axis / coarse.n_per_axis;
        let nc = coarse.n_per_axis;
        let nf = self.grid.n_per_axis;
        let mut out = Vec::with_capacity(coarse.len());
        match self.grid.dim {
            1 => {
                for i in 0..nc {
                    out.push(self.values[i * step]);
                }
            }
            2 => {
                for i in 0..nc {
                    for j in 0..nc {
                        out.push(self.values[i * step * nf + j * step]);
                    }
                }
            }
            3 => {
                for i in 0..nc {
                    for j in 0..nc {
                        for k in 0..nc {
                            out.push(self.values[(i * step * nf + j * step) * nf + k * step]);
                        }
                    }
                }
            }
            _ => unreachable!(),
        }
        Field::from_values(coarse.clone(), out)
    }
}

/// Polynomial growth weight w(x) = 1 + |x|^{alpha - epsilon}, epsilon in
/// (0, alpha). epsilon defaults to alpha/2 where a module needs a choice.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct GrowthWeight {
    pub alpha: f64,
    pub epsilon: f64,
}

impl GrowthWeight {
    pub fn new(alpha: f64, epsilon: f64) -> Result<Self, Error> {
        if !(epsilon > 0.0 && epsilon < alpha) {
            return Err(Error::InvalidParams(format!(
                "epsilon must lie in (0, alpha) = (0, {alpha}), got {epsilon}"
            )));
        }
        Ok(GrowthWeight { alpha, epsilon })
    }

    pub fn default_for(alpha: f64) -> Self {
        GrowthWeight {
            alpha,
            epsilon: 0.5 * alpha,
        }
    }

    pub fn eval(&self, dist: f64) -> f64 {
        1.0 + dist.powf(self.alpha - self.epsilon)
    }
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct FieldNorms {
    pub sup: f64,
    pub weighted_sup: f64,
}

/// Plain and weighted sup norms; the weighted one divides by w at each node.
pub fn field_norms(f: &Field, w: &GrowthWeight) -> FieldNorms {
    let mut sup = 0.0f64;
    let mut wsup = 0.0f64;
    for i in 0..f.grid.len() {
        let v = f.values()[i].abs();
        sup = sup.max(v);
        let d = f.grid.dist_to_origin(&f.grid.coords(i));
        wsup = wsup.max(v / w.eval(d));
    }
    FieldNorms {
        sup,
        weighted_sup: wsup,
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ConditionCheck {
    pub name: String,
    pub pass: bool,
    /// (x, z) of the first violating sample, if any.
    pub first_violation: Option<(Vec<f64>, Vec<f64>)>,
    pub detail: String,
}

/// Report from `validate_params`. Also carries the observed coefficient
/// statistics over the sampling lattice.
#[derive(Clone, Debug, Serialize)]
pub struct ValidationReport {
    pub pass: bool,
    pub checks: Vec<ConditionCheck>,
    pub observed_kappa0: f64,
    pub observed_kappa1: f64,
    pub observed_kappa2: f64,
}

/// Check the coefficient hypotheses on a dyadic sampling lattice of the
/// given level (2^level + 1 points per axis). Lattices nest across levels,
/// so enlarging the lattice can only add violations.
pub fn validate_params(p: &KernelParams, level: u32) -> ValidationReport {
    let b = p.kappa.bounds();
    let box_half = PI; // sampling box [-pi, pi]^d for both x and z
    let n = (1usize << level) + 1;
    let axis: Vec<f64> = (0..n)
        .map(|i| -box_half + 2.0 * box_half * i as f64 / (n - 1) as f64)
        .collect();

    // d-dimensional lattice points; for dim > 1 sample along each axis with
    // the other coordinates at a fixed dyadic offset to keep the count tame
    let points: Vec<Vec<f64>> = if p.dim == 1 {
        axis.iter().map(|&x| vec![x]).collect()
    } else {
        let mut pts = Vec::new();
        for &x in &axis {
            for ax in 0..p.dim {
                let mut q = vec![box_half / 2.0; p.dim];
                q[ax] = x;
                pts.push(q);
            }
        }
        pts
    };

    let mut k_min = f64::INFINITY;
    let mut k_max = f64::NEG_INFINITY;
    let mut holder_max = 0.0f64;

    let mut bounds_check = ConditionCheck {
        name: "ellipticity".into(),
        pass: true,
        first_violation: None,
        detail: format!("kappa0={} kappa1={}", b.kappa0, b.kappa1),
    };
    let mut sym_check = ConditionCheck {
        name: "symmetry".into(),
        pass: true,
        first_violation: None,
        detail: "kappa(x,z) = kappa(x,-z)".into(),
    };
    let mut holder_check = ConditionCheck {
        name: "holder".into(),
        pass: true,
        first_violation: None,
        detail: format!("kappa2={} beta={}", b.kappa2, b.beta),
    };

    for x in &points {
        for z in &points {
            let v = p.kappa.eval(x, z);
            k_min = k_min.min(v);
            k_max = k_max.max(v);
            if bounds_check.pass && !(v >= b.kappa0 && v <= b.kappa1) {
                bounds_check.pass = false;
                bounds_check.first_violation = Some((x.clone(), z.clone()));
                bounds_check.detail = format!("kappa={v} outside [{}, {}]", b.kappa0, b.kappa1);
            }
            let neg_z: Vec<f64> = z.iter().map(|zi| -zi).collect();
            let v_neg = p.kappa.eval(x, &neg_z);
            if sym_check.pass && v != v_neg {
                sym_check.pass = false;
                sym_check.first_violation = Some((x.clone(), z.clone()));
                sym_check.detail = format!("kappa(x,z)={v} but kappa(x,-z)={v_neg}");
            }
        }
    }

    // Holder modulus over lattice pairs in x at a few z values
    let z_probe: Vec<&Vec<f64>> = points.iter().step_by((points.len() / 9).max(1)).collect();
    for z in &z_probe {
        for (i, x) in points.iter().enumerate() {
            for y in points.iter().skip(i + 1) {
                let dx: f64 = x
                    .iter()
                    .zip(y.iter())
                    .map(|(a, c)| (a - c) * (a - c))
                    .sum::<f64>()
                    .sqrt();
                if dx == 0.0 {
                    continue;
                }
                let diff = (p.kappa.eval(x, z) - p.kappa.eval(y, z)).abs();
                let quotient = diff / dx.powf(b.beta);
                holder_max = holder_max.max(quotient);
                // small slack absorbs rounding in the quotient itself
                if holder_check.pass && quotient > b.kappa2 * (1.0 + 1e-12) + 1e-14 {
                    holder_check.pass = false;
                    holder_check.first_violation = Some(((*x).clone(), (*z).clone()));
                    holder_check.detail =
                        format!("|dk|/|dx|^beta = {quotient} exceeds kappa2 = {}", b.kappa2);
                }
            }
        }
    }

    let pass = bounds_check.pass && sym_check.pass && holder_check.pass;
    ValidationReport {
        pass,
        checks: vec![bounds_check, sym_check, holder_check],
        observed_kappa0: k_min,
        observed_kappa1: k_max,
        observed_kappa2: holder_max,
    }
}
