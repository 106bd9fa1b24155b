//! Functions sampled on a uniform cubic grid `[-X, X]^d`, `d <= 3`, with the
//! convolution `(f ⋆ g)(x_i) = h^d Σ_j f(x_j) g(x_i - x_j)` truncated to
//! the same grid.

use std::fmt::Write as _;

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

use crate::error::{invalid, Error, Result};
use crate::stats::compensated_sum;

pub const MAX_GRID_DIM: usize = 3;

#[derive(Debug, Clone, PartialEq)]
pub struct GridFn {
    pub dim: usize,
    pub half_width: f64,
    pub spacing: f64,
    /// Points per axis (odd; the centre point is the origin).
    pub n: usize,
    /// Row-major values, last axis fastest.
    pub values: Vec<f64>,
    /// Declared invariant under each coordinate reflection.
    pub symmetric: bool,
}

impl GridFn {
    pub fn zeros(dim: usize, half_width: f64, spacing: f64) -> Result<Self> {
        if dim == 0 || dim > MAX_GRID_DIM {
            return Err(invalid(format!("grid dimension must be 1..={MAX_GRID_DIM}, got {dim}")));
        }
        if !(half_width > 0.0 && spacing > 0.0) {
            return Err(invalid("grid half-width and spacing must be positive"));
        }
        let cells = 2.0 * half_width / spacing;
        let rounded = cells.round();
        if (cells - rounded).abs() > 1e-9 * cells.max(1.0) {
            return Err(invalid(format!(
                "2X/h = {cells} must be an integer so the origin is a grid point"
            )));
        }
        let n = rounded as usize + 1;
        if n.pow(dim as u32) > 50_000_000 {
            return Err(Error::ResourceLimit(format!("{n}^{dim} grid points")));
        }
        Ok(GridFn {
            dim,
            half_width,
            spacing,
            n,
            values: vec![0.0; n.pow(dim as u32)],
            symmetric: true,
        })
    }

    pub fn from_fn<F: Fn(&[f64]) -> f64>(dim: usize, half_width: f64, spacing: f64, f: F) -> Result<Self> {
        let mut g = GridFn::zeros(dim, half_width, spacing)?;
        let mut x = vec![0.0; dim];
        for idx in 0..g.values.len() {
            g.coords_into(idx, &mut x);
            g.values[idx] = f(&x);
        }
        g.symmetric = g.check_symmetric(1e-12);
        Ok(g)
    }

    /// Radial function sampled on the grid.
    pub fn from_radial<F: Fn(f64) -> f64>(dim: usize, half_width: f64, spacing: f64, f: F) -> Result<Self> {
        Self::from_fn(dim, half_width, spacing, |x| f(x.iter().map(|c| c * c).sum::<f64>().sqrt()))
    }

    fn centre(&self) -> isize {
        (self.n as isize - 1) / 2
    }

    pub fn coords_into(&self, mut idx: usize, x: &mut [f64]) {
        for a in (0..self.dim).rev() {
            let i = idx % self.n;
            idx /= self.n;
            x[a] = (i as isize - self.centre()) as f64 * self.spacing;
        }
    }

    pub fn coords(&self, idx: usize) -> Vec<f64> {
        let mut x = vec![0.0; self.dim];
        self.coords_into(idx, &mut x);
        x
    }

    fn cell_volume(&self) -> f64 {
        self.spacing.powi(self.dim as i32)
    }

    pub fn same_grid(&self, other: &GridFn) -> bool {
        self.dim == other.dim && self.n == other.n && self.spacing == other.spacing
    }

    fn check_same(&self, other: &GridFn) -> Result<()> {
        if self.same_grid(other) {
            Ok(())
        } else {
            Err(invalid("grid functions live on different grids"))
        }
    }

    /// Riemann-sum integral.
    pub fn integral(&self) -> f64 {
        compensated_sum(self.values.iter().copied()) * self.cell_volume()
    }

    pub fn l1(&self) -> f64 {
        compensated_sum(self.values.iter().map(|v| v.abs())) * self.cell_volume()
    }

    pub fn sup(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// `max |x|^d |f(x)|` over grid points.
    pub fn weighted_sup(&self) -> f64 {
        let mut x = vec![0.0; self.dim];
        let mut best = 0.0f64;
        for (idx, v) in self.values.iter().enumerate() {
            self.coords_into(idx, &mut x);
            let r = x.iter().map(|c| c * c).sum::<f64>().sqrt();
            best = best.max(r.powi(self.dim as i32) * v.abs());
        }
        best
    }

    pub fn scale(&self, c: f64) -> GridFn {
        GridFn {
            values: self.values.iter().map(|v| c * v).collect(),
            ..self.clone()
        }
    }

    /// `a·self + b·other`.
    pub fn combine(&self, a: f64, other: &GridFn, b: f64) -> Result<GridFn> {
        self.check_same(other)?;
        Ok(GridFn {
            values: self.values.iter().zip(&other.values).map(|(x, y)| a * x + b * y).collect(),
            symmetric: self.symmetric && other.symmetric,
            ..self.clone()
        })
    }

    pub fn add(&self, other: &GridFn) -> Result<GridFn> {
        self.combine(1.0, other, 1.0)
    }

    pub fn sub(&self, other: &GridFn) -> Result<GridFn> {
        self.combine(1.0, other, -1.0)
    }

    /// Values invariant under negating each coordinate separately.
    pub fn check_symmetric(&self, tol: f64) -> bool {
        let n = self.n;
        let strides: Vec<usize> = (0..self.dim).map(|a| n.pow((self.dim - 1 - a) as u32)).collect();
        for idx in 0..self.values.len() {
            for &s in &strides {
                let i = (idx / s) % n;
                let mirrored = idx - i * s + (n - 1 - i) * s;
                if (self.values[idx] - self.values[mirrored]).abs() > tol * self.values[idx].abs().max(1.0) {
                    return false;
                }
            }
        }
        true
    }

    /// Header `# key = value` lines, then one value per line.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        writeln!(s, "# format = grid-function").unwrap();
        writeln!(s, "# dim = {}", self.dim).unwrap();
        writeln!(s, "# half_width = {}", self.half_width).unwrap();
        writeln!(s, "# spacing = {}", self.spacing).unwrap();
        writeln!(s, "# symmetric = {}", self.symmetric).unwrap();
        for v in &self.values {
            writeln!(s, "{v}").unwrap();
        }
        s
    }

    pub fn from_text(text: &str) -> Result<GridFn> {
        let (mut dim, mut x, mut h, mut sym) = (None, None, None, true);
        let mut values = Vec::new();
        for line in text.lines().map(str::trim).filter(|l| !l.is_empty()) {
            if let Some(rest) = line.strip_prefix('#') {
                if let Some((k, v)) = rest.split_once('=') {
                    let v = v.trim();
                    let bad = |e: &dyn std::fmt::Display| Error::Parse(format!("{}: {e}", k.trim()));
                    match k.trim() {
                        "dim" => dim = Some(v.parse::<usize>().map_err(|e| bad(&e))?),
                        "half_width" => x = Some(v.parse::<f64>().map_err(|e| bad(&e))?),
                        "spacing" => h = Some(v.parse::<f64>().map_err(|e| bad(&e))?),
                        "symmetric" => sym = v.parse::<bool>().map_err(|e| bad(&e))?,
                        _ => {}
                    }
                }
                continue;
            }
            values.push(line.parse::<f64>().map_err(|e| Error::Parse(format!("value {line:?}: {e}")))?);
        }
        let (Some(dim), Some(x), Some(h)) = (dim, x, h) else {
            return Err(Error::Parse("grid header needs dim, half_width and spacing".into()));
        };
        let mut g = GridFn::zeros(dim, x, h)?;
        if values.len() != g.values.len() {
            return Err(Error::Parse(format!("expected {} values, found {}", g.values.len(), values.len())));
        }
        g.values = values;
        g.symmetric = sym;
        Ok(g)
    }
}

/// `max(‖f‖₁, ‖f‖_∞, sup |x|^d |f(x)|)`.
pub fn banach_norm(f: &GridFn) -> f64 {
    f.l1().max(f.sup()).max(f.weighted_sup())
}

/// Direct `O(n^{2d})` summation; the reference for [`convolve`].
pub fn convolve_direct(f: &GridFn, g: &GridFn) -> Result<GridFn> {
    f.check_same(g)?;
    let n = f.n as isize;
    let c = f.centre();
    let d = f.dim;
    let mut out = GridFn {
        values: vec![0.0; f.values.len()],
        symmetric: f.symmetric && g.symmetric,
        ..f.clone()
    };
    let unflat = |mut idx: usize| -> [isize; MAX_GRID_DIM] {
        let mut v = [0isize; MAX_GRID_DIM];
        for a in (0..d).rev() {
            v[a] = (idx % f.n) as isize;
            idx /= f.n;
        }
        v
    };
    let vol = f.cell_volume();
    for i in 0..out.values.len() {
        let ii = unflat(i);
        let mut acc = 0.0;
        'inner: for j in 0..f.values.len() {
            let jj = unflat(j);
            let mut flat = 0usize;
            for a in 0..d {
                let k = ii[a] - jj[a] + c;
                if k < 0 || k >= n {
                    continue 'inner;
                }
                flat = flat * f.n + k as usize;
            }
            acc += f.values[j] * g.values[flat];
        }
        out.values[i] = acc * vol;
    }
    Ok(out)
}

/// In-place n-dimensional FFT of a cube with side `m`.
fn fft_nd(buf: &mut [Complex<f64>], m: usize, dim: usize, inverse: bool) {
    let mut planner = FftPlanner::new();
    let fft = if inverse { planner.plan_fft_inverse(m) } else { planner.plan_fft_forward(m) };
    let mut line = vec![Complex::new(0.0, 0.0); m];
    for axis in 0..dim {
        let stride = m.pow((dim - 1 - axis) as u32);
        let total = buf.len();
        for base in 0..total {
            // Visit each line once: its first element has index 0 along `axis`.
            if !(base / stride).is_multiple_of(m) {
                continue;
            }
            for (t, slot) in line.iter_mut().enumerate() {
                *slot = buf[base + t * stride];
            }
            fft.process(&mut line);
            for (t, v) in line.iter().enumerate() {
                buf[base + t * stride] = *v;
            }
        }
    }
}

/// Convolution via zero-padded FFT. Also returns the L¹ mass of the full
/// convolution that falls outside the grid (the truncation error).
pub fn convolve_with_report(f: &GridFn, g: &GridFn) -> Result<(GridFn, f64)> {
    f.check_same(g)?;
    let n = f.n;
    let d = f.dim;
    let m = (2 * n - 1).next_power_of_two();
    let size = m.pow(d as u32);
    let embed = |src: &GridFn| {
        let mut buf = vec![Complex::new(0.0, 0.0); size];
        for (idx, &v) in src.values.iter().enumerate() {
            let mut rem = idx;
            let mut flat = 0;
            let mut mul = 1;
            for _ in 0..d {
                flat += (rem % n) * mul;
                rem /= n;
                mul *= m;
            }
            buf[flat] = Complex::new(v, 0.0);
        }
        buf
    };
    let mut a = embed(f);
    let mut bb = embed(g);
    fft_nd(&mut a, m, d, false);
    fft_nd(&mut bb, m, d, false);
    for (x, y) in a.iter_mut().zip(&bb) {
        *x *= y;
    }
    fft_nd(&mut a, m, d, true);
    let norm = f.cell_volume() / size as f64;
    let c = f.centre() as usize;
    let mut out = GridFn {
        values: vec![0.0; f.values.len()],
        symmetric: f.symmetric && g.symmetric,
        ..f.clone()
    };
    let mut inside_l1 = 0.0;
    for (idx, slot) in out.values.iter_mut().enumerate() {
        let mut rem = idx;
        let mut flat = 0;
        let mut mul = 1;
        for _ in 0..d {
            flat += (rem % n + c) * mul;
            rem /= n;
            mul *= m;
        }
        *slot = a[flat].re * norm;
        inside_l1 += slot.abs();
    }
    let total_l1: f64 = a.iter().map(|z| (z.re * norm).abs()).sum();
    let outside = (total_l1 - inside_l1).max(0.0) * f.cell_volume();
    Ok((out, outside))
}

pub fn convolve(f: &GridFn, g: &GridFn) -> Result<GridFn> {
    Ok(convolve_with_report(f, g)?.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::paths::heat_kernel;

    #[test]
    fn origin_must_be_on_grid() {
        assert!(GridFn::zeros(1, 1.0, 0.3).is_err());
        assert!(GridFn::zeros(4, 1.0, 0.5).is_err());
        assert_eq!(GridFn::zeros(2, 1.0, 0.5).unwrap().n, 5);
    }

    #[test]
    fn gaussian_norm_is_its_mass() {
        let g = GridFn::from_fn(1, 12.0, 0.01, |x| heat_kernel(x, 1.0)).unwrap();
        assert!((banach_norm(&g) - 1.0).abs() < 1e-12);
        assert!((g.sup() - (2.0 * std::f64::consts::PI).powf(-0.5)).abs() < 1e-15);
        assert_eq!(banach_norm(&g.scale(-3.0)), 3.0 * banach_norm(&g));
        assert_eq!(banach_norm(&GridFn::zeros(2, 1.0, 0.25).unwrap()), 0.0);
    }

    #[test]
    fn fft_matches_direct_in_each_dimension() {
        for d in 1..=3 {
            let (x, h) = if d == 3 { (1.0, 0.25) } else { (2.0, 0.25) };
            let f = GridFn::from_fn(d, x, h, |p| (-(p.iter().map(|c| (c - 0.3).powi(2)).sum::<f64>())).exp()).unwrap();
            let g = GridFn::from_fn(d, x, h, |p| 1.0 / (1.0 + p.iter().map(|c| c * c * (1.0 + c)).sum::<f64>().abs())).unwrap();
            let fast = convolve(&f, &g).unwrap();
            let slow = convolve_direct(&f, &g).unwrap();
            for (a, b) in fast.values.iter().zip(&slow.values) {
                assert!((a - b).abs() < 1e-12, "d={d}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn text_round_trip() {
        let f = GridFn::from_fn(2, 1.0, 0.5, |p| p[0] * 0.1 + p[1] * p[1]).unwrap();
        let back = GridFn::from_text(&f.to_text()).unwrap();
        assert_eq!(back, f);
        assert!(!f.symmetric);
    }

    #[test]
    fn mismatched_grids_rejected() {
        let a = GridFn::zeros(1, 1.0, 0.5).unwrap();
        let b = GridFn::zeros(1, 1.0, 0.25).unwrap();
        assert!(convolve(&a, &b).is_err());
    }
}
