//! Uniform tensor grids on a rectangle `(0, Lx) × (0, Ly)` with homogeneous
//! Dirichlet boundary, the five-point Laplacian, rectangle-rule quadrature,
//! and the closed-form sine eigenbasis of the discrete operator.
//!
//! Only interior nodes are stored: `x_i = (i+1) hx` with `hx = Lx/(nx+1)`,
//! row-major layout `values[iy * nx + ix]`. The discrete sine modes
//! `φ_{k,l} = 2/√(Lx Ly) · sin(kπx/Lx) sin(lπy/Ly)` are exactly orthonormal
//! under this quadrature rule, which the spectral basis relies on.

use std::fmt::Write as _;
use std::path::Path;

use thiserror::Error;

use crate::model::{ModelError, NonlocalModel, ProblemSpec};

/// Largest per-axis size the dense spectral transform accepts.
pub const SPECTRAL_MAX_AXIS: usize = 64;

#[derive(Debug, Error)]
pub enum GridError {
    #[error("grid must have at least 3 interior nodes per axis, got nx = {nx}, ny = {ny}")]
    TooCoarse { nx: usize, ny: usize },
    #[error("domain extents must be finite and positive, got Lx = {lx}, Ly = {ly}")]
    BadExtent { lx: f64, ly: f64 },
    #[error("spectral basis limited to {SPECTRAL_MAX_AXIS} modes per axis, got nx = {nx}, ny = {ny}")]
    BasisTooLarge { nx: usize, ny: usize },
    #[error("grid functions live on different grids")]
    DomainMismatch,
    #[error("mode index out of range: k = {k}, l = {l} on a {nx} x {ny} grid")]
    ModeOutOfRange { k: usize, l: usize, nx: usize, ny: usize },
    #[error("field file: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Rectangle with a fixed interior grid. Cheap to copy; equality of all four
/// fields is what "same grid" means throughout the crate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RectDomain {
    pub lx: f64,
    pub ly: f64,
    pub nx: usize,
    pub ny: usize,
}

impl RectDomain {
    pub fn new(lx: f64, ly: f64, nx: usize, ny: usize) -> Result<Self, GridError> {
        if !(lx > 0.0 && ly > 0.0) || !lx.is_finite() || !ly.is_finite() {
            return Err(GridError::BadExtent { lx, ly });
        }
        if nx < 3 || ny < 3 {
            return Err(GridError::TooCoarse { nx, ny });
        }
        Ok(Self { lx, ly, nx, ny })
    }

    pub fn unit(n: usize) -> Result<Self, GridError> {
        Self::new(1.0, 1.0, n, n)
    }

    pub fn hx(&self) -> f64 {
        self.lx / (self.nx + 1) as f64
    }

    pub fn hy(&self) -> f64 {
        self.ly / (self.ny + 1) as f64
    }

    /// Physical coordinate of interior node `ix` (0-based).
    pub fn x(&self, ix: usize) -> f64 {
        (ix + 1) as f64 * self.hx()
    }

    pub fn y(&self, iy: usize) -> f64 {
        (iy + 1) as f64 * self.hy()
    }

    /// Relative coordinates in `(0,1)²`, the frame coefficient profiles use.
    pub fn rel(&self, ix: usize, iy: usize) -> (f64, f64) {
        (self.x(ix) / self.lx, self.y(iy) / self.ly)
    }

    pub fn n_total(&self) -> usize {
        self.nx * self.ny
    }

    /// Cell weight of the rectangle quadrature rule.
    pub fn cell(&self) -> f64 {
        self.hx() * self.hy()
    }
}

/// Nodal values of a function on the interior of a [`RectDomain`].
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction {
    pub domain: RectDomain,
    pub values: Vec<f64>,
}

impl GridFunction {
    pub fn zeros(domain: RectDomain) -> Self {
        Self {
            domain,
            values: vec![0.0; domain.n_total()],
        }
    }

    /// Sample `f(x, y)` at the interior nodes (physical coordinates).
    pub fn from_fn(domain: RectDomain, f: impl Fn(f64, f64) -> f64) -> Self {
        let mut values = Vec::with_capacity(domain.n_total());
        for iy in 0..domain.ny {
            let y = domain.y(iy);
            for ix in 0..domain.nx {
                values.push(f(domain.x(ix), y));
            }
        }
        Self { domain, values }
    }

    #[inline]
    pub fn idx(&self, ix: usize, iy: usize) -> usize {
        iy * self.domain.nx + ix
    }

    #[inline]
    pub fn get(&self, ix: usize, iy: usize) -> f64 {
        self.values[iy * self.domain.nx + ix]
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self {
            domain: self.domain,
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    /// `self += alpha * other`.
    pub fn axpy(&mut self, alpha: f64, other: &Self) {
        debug_assert_eq!(self.domain, other.domain);
        for (s, o) in self.values.iter_mut().zip(&other.values) {
            *s += alpha * o;
        }
    }

    pub fn scale(&mut self, alpha: f64) {
        for v in &mut self.values {
            *v *= alpha;
        }
    }

    pub fn scaled(&self, alpha: f64) -> Self {
        let mut out = self.clone();
        out.scale(alpha);
        out
    }

    pub fn linf(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }
}

/// `A u` where `A = −Δ_h` is the five-point Laplacian with zero Dirichlet
/// boundary (positive definite by this sign convention).
pub fn laplacian_apply(u: &GridFunction) -> GridFunction {
    let d = u.domain;
    let (nx, ny) = (d.nx, d.ny);
    let ihx2 = 1.0 / (d.hx() * d.hx());
    let ihy2 = 1.0 / (d.hy() * d.hy());
    let diag = 2.0 * (ihx2 + ihy2);
    let mut out = vec![0.0; u.values.len()];
    for iy in 0..ny {
        let row = iy * nx;
        for ix in 0..nx {
            let c = u.values[row + ix];
            let left = if ix > 0 { u.values[row + ix - 1] } else { 0.0 };
            let right = if ix + 1 < nx { u.values[row + ix + 1] } else { 0.0 };
            let down = if iy > 0 { u.values[row - nx + ix] } else { 0.0 };
            let up = if iy + 1 < ny { u.values[row + nx + ix] } else { 0.0 };
            out[row + ix] = diag * c - ihx2 * (left + right) - ihy2 * (down + up);
        }
    }
    GridFunction {
        domain: d,
        values: out,
    }
}

/// Rectangle-rule integral `hx hy Σ u_i` (boundary values are zero).
pub fn integrate(u: &GridFunction) -> f64 {
    u.domain.cell() * u.values.iter().sum::<f64>()
}

/// Discrete `L²` inner product `hx hy Σ u_i v_i`.
pub fn inner_l2(u: &GridFunction, v: &GridFunction) -> f64 {
    debug_assert_eq!(u.domain, v.domain);
    u.domain.cell()
        * u.values
            .iter()
            .zip(&v.values)
            .map(|(a, b)| a * b)
            .sum::<f64>()
}

pub fn norm_l2(u: &GridFunction) -> f64 {
    inner_l2(u, u).max(0.0).sqrt()
}

/// Dirichlet seminorm `‖∇u‖ = √⟨A u, u⟩`, the H¹ energy of the difference
/// stencil.
pub fn norm_h1(u: &GridFunction) -> f64 {
    inner_l2(&laplacian_apply(u), u).max(0.0).sqrt()
}

/// Energy `E(u) = ½‖∇u‖² − ∫ F(u)`, the Lyapunov function of the flow in the
/// saturated regime.
pub fn energy(u: &GridFunction, spec: &ProblemSpec) -> Result<f64, ModelError> {
    let kinetic = 0.5 * inner_l2(&laplacian_apply(u), u);
    let mut potential = 0.0;
    for &v in &u.values {
        potential += spec.f.big_f(v)?;
    }
    Ok(kinetic - u.domain.cell() * potential)
}

/// Nonlocal state `z = ∫ g(u) dx`; the flag reports clamped density values.
pub fn z_value(u: &GridFunction, g: &NonlocalModel) -> (f64, bool) {
    let mut sum = 0.0;
    let mut flagged = false;
    for &v in &u.values {
        let (gv, fl) = g.g_eval_flagged(v);
        sum += gv;
        flagged |= fl;
    }
    (u.domain.cell() * sum, flagged)
}

/// Eigenvalue of `−Δ_h` for the sine mode `(k, l)`, 1-based indices.
pub fn eigenvalue(domain: &RectDomain, k: usize, l: usize) -> f64 {
    let hx = domain.hx();
    let hy = domain.hy();
    let sx = (k as f64 * std::f64::consts::PI * hx / (2.0 * domain.lx)).sin();
    let sy = (l as f64 * std::f64::consts::PI * hy / (2.0 * domain.ly)).sin();
    4.0 / (hx * hx) * sx * sx + 4.0 / (hy * hy) * sy * sy
}

/// Quadrature-normalized sine mode `φ_{k,l}`, 1-based indices.
pub fn eigenmode(domain: &RectDomain, k: usize, l: usize) -> Result<GridFunction, GridError> {
    if k == 0 || l == 0 || k > domain.nx || l > domain.ny {
        return Err(GridError::ModeOutOfRange {
            k,
            l,
            nx: domain.nx,
            ny: domain.ny,
        });
    }
    let cx = (2.0 / domain.lx).sqrt();
    let cy = (2.0 / domain.ly).sqrt();
    Ok(GridFunction::from_fn(*domain, |x, y| {
        cx * cy
            * (k as f64 * std::f64::consts::PI * x / domain.lx).sin()
            * (l as f64 * std::f64::consts::PI * y / domain.ly).sin()
    }))
}

#[derive(Debug, Clone, Copy)]
pub struct Mode {
    pub k: usize,
    pub l: usize,
    pub lambda: f64,
}

/// Full sine eigenbasis of `−Δ_h`, modes sorted by ascending eigenvalue.
/// The transform factorizes over the axes, so both directions cost
/// `O(n³)` instead of the naive `O(n⁴)`.
#[derive(Debug, Clone)]
pub struct SpectralBasis {
    pub domain: RectDomain,
    pub modes: Vec<Mode>,
    /// `sx[k][i] = √(2/Lx) sin((k+1)π x_i / Lx)` — rows are modes.
    sx: Vec<Vec<f64>>,
    sy: Vec<Vec<f64>>,
}

impl SpectralBasis {
    pub fn new(domain: RectDomain) -> Result<Self, GridError> {
        if domain.nx > SPECTRAL_MAX_AXIS || domain.ny > SPECTRAL_MAX_AXIS {
            return Err(GridError::BasisTooLarge {
                nx: domain.nx,
                ny: domain.ny,
            });
        }
        let cx = (2.0 / domain.lx).sqrt();
        let sx: Vec<Vec<f64>> = (1..=domain.nx)
            .map(|k| {
                (0..domain.nx)
                    .map(|i| {
                        cx * (k as f64 * std::f64::consts::PI * domain.x(i) / domain.lx).sin()
                    })
                    .collect()
            })
            .collect();
        let cy = (2.0 / domain.ly).sqrt();
        let sy: Vec<Vec<f64>> = (1..=domain.ny)
            .map(|l| {
                (0..domain.ny)
                    .map(|j| {
                        cy * (l as f64 * std::f64::consts::PI * domain.y(j) / domain.ly).sin()
                    })
                    .collect()
            })
            .collect();
        let mut modes = Vec::with_capacity(domain.n_total());
        for k in 1..=domain.nx {
            for l in 1..=domain.ny {
                modes.push(Mode {
                    k,
                    l,
                    lambda: eigenvalue(&domain, k, l),
                });
            }
        }
        modes.sort_by(|a, b| {
            a.lambda
                .partial_cmp(&b.lambda)
                .unwrap()
                .then(a.k.cmp(&b.k))
                .then(a.l.cmp(&b.l))
        });
        Ok(Self {
            domain,
            modes,
            sx,
            sy,
        })
    }

    pub fn lambda_min(&self) -> f64 {
        self.modes[0].lambda
    }

    /// Coefficients `c_m = ⟨u, φ_m⟩` in the order of `self.modes`.
    pub fn to_coeffs(&self, u: &GridFunction) -> Vec<f64> {
        debug_assert_eq!(u.domain, self.domain);
        let (nx, ny) = (self.domain.nx, self.domain.ny);
        // tmp[k][iy] = hx Σ_ix sx[k][ix] u[iy, ix]
        let hx = self.domain.hx();
        let mut tmp = vec![0.0; nx * ny];
        for (k, sxk) in self.sx.iter().enumerate() {
            for iy in 0..ny {
                let row = &u.values[iy * nx..(iy + 1) * nx];
                let mut acc = 0.0;
                for ix in 0..nx {
                    acc += sxk[ix] * row[ix];
                }
                tmp[k * ny + iy] = hx * acc;
            }
        }
        let hy = self.domain.hy();
        let mut by_kl = vec![0.0; nx * ny];
        for k in 0..nx {
            for (l, syl) in self.sy.iter().enumerate() {
                let mut acc = 0.0;
                for iy in 0..ny {
                    acc += syl[iy] * tmp[k * ny + iy];
                }
                by_kl[k * ny + l] = hy * acc;
            }
        }
        self.modes
            .iter()
            .map(|m| by_kl[(m.k - 1) * ny + (m.l - 1)])
            .collect()
    }

    /// Reassemble `Σ c_m φ_m`.
    pub fn from_coeffs(&self, coeffs: &[f64]) -> GridFunction {
        assert_eq!(coeffs.len(), self.modes.len(), "one coefficient per mode");
        let (nx, ny) = (self.domain.nx, self.domain.ny);
        let mut by_kl = vec![0.0; nx * ny];
        for (m, &c) in self.modes.iter().zip(coeffs) {
            by_kl[(m.k - 1) * ny + (m.l - 1)] = c;
        }
        // tmp[k][iy] = Σ_l sy[l][iy] c_{k,l}
        let mut tmp = vec![0.0; nx * ny];
        for k in 0..nx {
            for iy in 0..ny {
                let mut acc = 0.0;
                for (l, syl) in self.sy.iter().enumerate() {
                    acc += syl[iy] * by_kl[k * ny + l];
                }
                tmp[k * ny + iy] = acc;
            }
        }
        let mut values = vec![0.0; nx * ny];
        for iy in 0..ny {
            for ix in 0..nx {
                let mut acc = 0.0;
                for (k, sxk) in self.sx.iter().enumerate() {
                    acc += sxk[ix] * tmp[k * ny + iy];
                }
                values[iy * nx + ix] = acc;
            }
        }
        GridFunction {
            domain: self.domain,
            values,
        }
    }
}

// ---------------------------------------------------------------------------
// Field files
// ---------------------------------------------------------------------------

/// Serialize a field: one header line `nx ny lx ly`, then row-major nodal
/// values one per line. Floats print in shortest round-trip form, so
/// write → read reproduces the field bit for bit.
pub fn field_to_string(u: &GridFunction) -> String {
    let d = u.domain;
    let mut s = String::with_capacity(16 * u.values.len() + 64);
    let _ = writeln!(s, "{} {} {} {}", d.nx, d.ny, d.lx, d.ly);
    for v in &u.values {
        let _ = writeln!(s, "{v}");
    }
    s
}

pub fn write_field(path: &Path, u: &GridFunction) -> Result<(), GridError> {
    std::fs::write(path, field_to_string(u))?;
    Ok(())
}

pub fn field_from_string(text: &str) -> Result<GridFunction, GridError> {
    let mut lines = text.lines();
    let header = lines
        .next()
        .ok_or_else(|| GridError::Format("empty field file".into()))?;
    let parts: Vec<&str> = header.split_whitespace().collect();
    if parts.len() != 4 {
        return Err(GridError::Format(format!(
            "header must be `nx ny lx ly`, got `{header}`"
        )));
    }
    let nx: usize = parts[0]
        .parse()
        .map_err(|e| GridError::Format(format!("nx: {e}")))?;
    let ny: usize = parts[1]
        .parse()
        .map_err(|e| GridError::Format(format!("ny: {e}")))?;
    let lx: f64 = parts[2]
        .parse()
        .map_err(|e| GridError::Format(format!("lx: {e}")))?;
    let ly: f64 = parts[3]
        .parse()
        .map_err(|e| GridError::Format(format!("ly: {e}")))?;
    let domain = RectDomain::new(lx, ly, nx, ny)?;
    let mut values = Vec::with_capacity(domain.n_total());
    for line in lines {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        values.push(
            line.parse::<f64>()
                .map_err(|e| GridError::Format(format!("value `{line}`: {e}")))?,
        );
    }
    if values.len() != domain.n_total() {
        return Err(GridError::Format(format!(
            "expected {} values, got {}",
            domain.n_total(),
            values.len()
        )));
    }
    Ok(GridFunction { domain, values })
}

pub fn read_field(path: &Path) -> Result<GridFunction, GridError> {
    field_from_string(&std::fs::read_to_string(path)?)
}

/// CSV dump `x,y,value` with physical node coordinates, row-major order.
pub fn field_to_csv(u: &GridFunction) -> String {
    let d = u.domain;
    let mut s = String::with_capacity(24 * u.values.len() + 16);
    s.push_str("x,y,value\n");
    for iy in 0..d.ny {
        for ix in 0..d.nx {
            let _ = writeln!(s, "{},{},{}", d.x(ix), d.y(iy), u.get(ix, iy));
        }
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Dense reassembly of the five-point operator for cross-checking.
    fn dense_laplacian_times(u: &GridFunction) -> Vec<f64> {
        let d = u.domain;
        let n = d.n_total();
        let ihx2 = 1.0 / (d.hx() * d.hx());
        let ihy2 = 1.0 / (d.hy() * d.hy());
        let mut a = vec![vec![0.0; n]; n];
        for iy in 0..d.ny {
            for ix in 0..d.nx {
                let i = iy * d.nx + ix;
                a[i][i] = 2.0 * (ihx2 + ihy2);
                if ix > 0 {
                    a[i][i - 1] = -ihx2;
                }
                if ix + 1 < d.nx {
                    a[i][i + 1] = -ihx2;
                }
                if iy > 0 {
                    a[i][i - d.nx] = -ihy2;
                }
                if iy + 1 < d.ny {
                    a[i][i + d.nx] = -ihy2;
                }
            }
        }
        (0..n)
            .map(|i| (0..n).map(|j| a[i][j] * u.values[j]).sum())
            .collect()
    }

    #[test]
    fn laplacian_matches_dense_matrix() {
        let d = RectDomain::new(1.3, 0.7, 4, 5).unwrap();
        let u = GridFunction::from_fn(d, |x, y| (3.1 * x).sin() + x * y * y - 0.4 * y);
        let fast = laplacian_apply(&u);
        let dense = dense_laplacian_times(&u);
        for (i, (a, b)) in fast.values.iter().zip(&dense).enumerate() {
            assert!(
                (a - b).abs() <= 1e-12 * b.abs().max(1.0),
                "entry {i}: stencil {a} vs dense {b}"
            );
        }
    }

    #[test]
    fn eigenmode_satisfies_eigen_relation() {
        let d = RectDomain::new(2.0, 1.0, 12, 9).unwrap();
        for &(k, l) in &[(1, 1), (3, 2), (12, 9)] {
            let phi = eigenmode(&d, k, l).unwrap();
            let lam = eigenvalue(&d, k, l);
            let aphi = laplacian_apply(&phi);
            for i in 0..phi.values.len() {
                let want = lam * phi.values[i];
                assert!(
                    (aphi.values[i] - want).abs() <= 1e-11 * lam.max(1.0),
                    "mode ({k},{l}) node {i}: A·phi = {} vs lambda·phi = {want}",
                    aphi.values[i]
                );
            }
        }
    }

    #[test]
    fn quadrature_of_one_is_exact() {
        let d = RectDomain::new(1.0, 1.0, 16, 16).unwrap();
        let one = GridFunction::from_fn(d, |_, _| 1.0);
        let expected = (16.0 / 17.0) * (16.0 / 17.0);
        assert!(
            (integrate(&one) - expected).abs() < 1e-14,
            "interior rectangle rule misses the boundary strip exactly"
        );
    }

    #[test]
    fn quadrature_is_second_order() {
        // ∫ sin(pi x) sin(pi y) over the unit square = 4/pi^2.
        let exact = 0.405_284_734_569_351_1;
        let err = |n: usize| {
            let d = RectDomain::unit(n).unwrap();
            let u = GridFunction::from_fn(d, |x, y| {
                (std::f64::consts::PI * x).sin() * (std::f64::consts::PI * y).sin()
            });
            (integrate(&u) - exact).abs()
        };
        let (e1, e2) = (err(16), err(32));
        let order = (e1 / e2).ln() / (33.0f64 / 17.0).ln();
        assert!(
            order > 1.9 && order < 2.1,
            "expected O(h^2) quadrature, observed order {order} (e16 = {e1:.3e}, e32 = {e2:.3e})"
        );
    }

    #[test]
    fn sine_modes_are_discretely_orthonormal() {
        let d = RectDomain::new(1.5, 0.8, 6, 5).unwrap();
        let basis = SpectralBasis::new(d).unwrap();
        for (m, mode) in basis.modes.iter().enumerate() {
            let phi = eigenmode(&d, mode.k, mode.l).unwrap();
            let coeffs = basis.to_coeffs(&phi);
            for (j, c) in coeffs.iter().enumerate() {
                let want = if j == m { 1.0 } else { 0.0 };
                assert!(
                    (c - want).abs() < 1e-12,
                    "Gram defect: <phi_{m}, phi_{j}> = {c}"
                );
            }
        }
    }

    #[test]
    fn spectral_round_trip_is_identity() {
        let d = RectDomain::new(1.0, 2.0, 8, 7).unwrap();
        let basis = SpectralBasis::new(d).unwrap();
        let u = GridFunction::from_fn(d, |x, y| x * (1.0 - x) * (7.0 * y).cos());
        let back = basis.from_coeffs(&basis.to_coeffs(&u));
        for (a, b) in u.values.iter().zip(&back.values) {
            assert!((a - b).abs() < 1e-10 * a.abs().max(1.0), "{a} vs {b}");
        }
    }

    #[test]
    fn basis_rejects_oversized_grids() {
        let d = RectDomain::new(1.0, 1.0, 65, 8).unwrap();
        assert!(matches!(
            SpectralBasis::new(d),
            Err(GridError::BasisTooLarge { .. })
        ));
    }

    #[test]
    fn field_file_round_trip_is_bitwise() {
        let d = RectDomain::new(1.0, 3.0, 5, 4).unwrap();
        let u = GridFunction::from_fn(d, |x, y| (x * 12.345).sin() * y.exp() - 0.1);
        let text = field_to_string(&u);
        let back = field_from_string(&text).unwrap();
        assert_eq!(back.domain, d);
        for (a, b) in u.values.iter().zip(&back.values) {
            assert_eq!(a.to_bits(), b.to_bits(), "round trip must be exact");
        }
    }

    #[test]
    fn field_reader_rejects_malformed_input() {
        assert!(field_from_string("").is_err());
        assert!(field_from_string("3 3 1.0").is_err(), "short header");
        assert!(
            field_from_string("3 3 1.0 1.0\n1\n2\n").is_err(),
            "value count mismatch"
        );
    }

    #[test]
    fn csv_has_header_and_coordinates() {
        let d = RectDomain::new(1.0, 1.0, 3, 3).unwrap();
        let u = GridFunction::from_fn(d, |x, y| x + y);
        let csv = field_to_csv(&u);
        let mut lines = csv.lines();
        assert_eq!(lines.next(), Some("x,y,value"));
        assert_eq!(lines.count(), 9, "one row per interior node");
    }

    proptest! {
        #[test]
        fn laplacian_is_symmetric(seed in 0u64..500) {
            let d = RectDomain::new(1.0, 1.4, 6, 5).unwrap();
            // Cheap deterministic fill from the seed.
            let mut s = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            let mut next = move || {
                s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                (s >> 11) as f64 / (1u64 << 53) as f64 - 0.5
            };
            let u = GridFunction { domain: d, values: (0..d.n_total()).map(|_| next()).collect() };
            let v = GridFunction { domain: d, values: (0..d.n_total()).map(|_| next()).collect() };
            let lhs = inner_l2(&laplacian_apply(&u), &v);
            let rhs = inner_l2(&u, &laplacian_apply(&v));
            prop_assert!((lhs - rhs).abs() <= 1e-11 * lhs.abs().max(1.0),
                "symmetry defect: {lhs} vs {rhs}");
        }

        #[test]
        fn poincare_lower_bound(seed in 0u64..500) {
            let d = RectDomain::new(1.0, 1.0, 7, 7).unwrap();
            let lam1 = eigenvalue(&d, 1, 1);
            let mut s = seed.wrapping_mul(2862933555777941757).wrapping_add(3037000493);
            let mut next = move || {
                s = s.wrapping_mul(2862933555777941757).wrapping_add(3037000493);
                (s >> 11) as f64 / (1u64 << 53) as f64 - 0.5
            };
            let u = GridFunction { domain: d, values: (0..d.n_total()).map(|_| next()).collect() };
            let dirichlet = inner_l2(&laplacian_apply(&u), &u);
            let mass = inner_l2(&u, &u);
            prop_assert!(dirichlet >= lam1 * mass * (1.0 - 1e-10),
                "Dirichlet energy {dirichlet} below lambda_1 * mass {}", lam1 * mass);
        }
    }
}
