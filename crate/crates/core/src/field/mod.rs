//! Periodic grid fields with a spectral twin.
//!
//! The whole space is truncated to the cube `[-L, L)^n` with `N` samples per
//! axis. Samples are stored axis-0-fastest. The spectral twin keeps the
//! non-redundant half of the real transform: axis 0 holds `N/2 + 1` modes,
//! every other axis the full `N`. The forward transform is unnormalized and
//! the inverse divides by `N^n`, so a constant field `c` has the single
//! coefficient `c * N^n` at the zero mode.

mod fft;
pub mod snapshot;

use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Truncated periodic lattice on `[-L, L)^n`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    dim: usize,
    points: usize,
    half_extent: f64,
}

impl GridSpec {
    pub fn new(dim: usize, points: usize, half_extent: f64) -> Result<Self> {
        let mut problems = Vec::new();
        if !(2..=3).contains(&dim) {
            problems.push(format!("dimension must be 2 or 3, got {dim}"));
        }
        if !points.is_multiple_of(2) || points < 8 {
            problems.push(format!("points per axis must be even and >= 8, got {points}"));
        }
        if !(half_extent > 0.0 && half_extent.is_finite()) {
            problems.push(format!("half extent must be positive, got {half_extent}"));
        }
        if problems.is_empty() {
            Ok(Self {
                dim,
                points,
                half_extent,
            })
        } else {
            Err(Error::invalid(problems.join("; ")))
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn points(&self) -> usize {
        self.points
    }

    pub fn half_extent(&self) -> f64 {
        self.half_extent
    }

    pub fn spacing(&self) -> f64 {
        2.0 * self.half_extent / self.points as f64
    }

    /// Number of samples, `N^n`.
    pub fn len(&self) -> usize {
        self.points.pow(self.dim as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Number of stored spectral coefficients.
    pub fn spectral_len(&self) -> usize {
        (self.points / 2 + 1) * self.points.pow(self.dim as u32 - 1)
    }

    /// Coordinate of lattice index `j` along any axis.
    pub fn coordinate(&self, j: usize) -> f64 {
        -self.half_extent + j as f64 * self.spacing()
    }

    pub fn coordinates(&self) -> Vec<f64> {
        (0..self.points).map(|j| self.coordinate(j)).collect()
    }

    /// Lattice indices of flat sample index `flat`; unused axes are 0.
    pub fn unravel(&self, flat: usize) -> [usize; 3] {
        let n = self.points;
        let mut idx = [0usize; 3];
        let mut rest = flat;
        for slot in idx.iter_mut().take(self.dim) {
            *slot = rest % n;
            rest /= n;
        }
        idx
    }

    /// Position of flat sample index `flat`; unused axes are 0.
    pub fn position(&self, flat: usize) -> [f64; 3] {
        let idx = self.unravel(flat);
        let mut x = [0.0; 3];
        for a in 0..self.dim {
            x[a] = self.coordinate(idx[a]);
        }
        x
    }

    /// `pi / L`, the wavenumber of index 1.
    pub fn wavenumber_unit(&self) -> f64 {
        std::f64::consts::PI / self.half_extent
    }

    /// Largest wave index kept by the two-thirds rule.
    pub fn dealias_cutoff(&self) -> usize {
        self.points / 3
    }

    /// Mode descriptor of every stored spectral coefficient, in storage order.
    pub fn modes(&self) -> impl Iterator<Item = Mode> + '_ {
        let n = self.points;
        let half = n / 2 + 1;
        let unit = self.wavenumber_unit();
        let dim = self.dim;
        (0..self.spectral_len()).map(move |p| {
            let mut index = [0i64; 3];
            index[0] = (p % half) as i64;
            let mut rest = p / half;
            for slot in index.iter_mut().take(dim).skip(1) {
                let i = rest % n;
                rest /= n;
                *slot = if i <= n / 2 { i as i64 } else { i as i64 - n as i64 };
            }
            Mode {
                index,
                dim,
                nyquist: (n / 2) as i64,
                unit,
            }
        })
    }

    pub(crate) fn check_same(&self, other: &GridSpec) -> Result<()> {
        if self == other {
            Ok(())
        } else {
            Err(Error::GridMismatch(format!("{self:?} vs {other:?}")))
        }
    }
}

/// One stored Fourier mode.
#[derive(Clone, Copy, Debug)]
pub struct Mode {
    pub index: [i64; 3],
    dim: usize,
    nyquist: i64,
    unit: f64,
}

impl Mode {
    pub fn is_zero(&self) -> bool {
        self.index.iter().all(|&i| i == 0)
    }

    pub fn is_nyquist(&self, axis: usize) -> bool {
        self.index[axis].abs() == self.nyquist
    }

    /// Physical wavenumber along `axis`.
    pub fn k(&self, axis: usize) -> f64 {
        self.index[axis] as f64 * self.unit
    }

    /// Wavenumber seen by first (odd-order) derivatives: the Nyquist mode of
    /// a real field has no odd derivative.
    pub fn k_odd(&self, axis: usize) -> f64 {
        if self.is_nyquist(axis) {
            0.0
        } else {
            self.k(axis)
        }
    }

    /// `|k|^2`, the symbol of `-Laplacian`.
    pub fn k_sq(&self) -> f64 {
        (0..self.dim).map(|a| self.k(a).powi(2)).sum()
    }

    /// `|k|^2` built from odd-derivative wavenumbers; the denominator of
    /// projection-type multipliers.
    pub fn k_odd_sq(&self) -> f64 {
        (0..self.dim).map(|a| self.k_odd(a).powi(2)).sum()
    }

    pub fn is_dealiased_out(&self, cutoff: usize) -> bool {
        self.index[..self.dim]
            .iter()
            .any(|&i| i.unsigned_abs() as usize > cutoff)
    }

    /// Multiplier of `D^beta`: the product of `(i k_j)^{beta_j}`.
    pub fn derivative_symbol(&self, beta: MultiIndex) -> Complex64 {
        let mut sym = Complex64::new(1.0, 0.0);
        for a in 0..self.dim {
            let order = beta.0[a];
            if order == 0 {
                continue;
            }
            let k = if order % 2 == 1 { self.k_odd(a) } else { self.k(a) };
            sym *= Complex64::new(0.0, k).powu(order as u32);
        }
        sym
    }
}

/// Derivative multi-index `beta = (beta_1, .., beta_n)`; unused axes are 0.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct MultiIndex(pub [u8; 3]);

impl MultiIndex {
    pub const ZERO: MultiIndex = MultiIndex([0, 0, 0]);

    pub fn order(&self) -> usize {
        self.0.iter().map(|&b| b as usize).sum()
    }

    /// First derivative along `axis`.
    pub fn axis(axis: usize) -> Self {
        let mut b = [0u8; 3];
        b[axis] = 1;
        MultiIndex(b)
    }

    /// Second derivative `D_a D_b`.
    pub fn pair(a: usize, b: usize) -> Self {
        let mut m = [0u8; 3];
        m[a] += 1;
        m[b] += 1;
        MultiIndex(m)
    }

    /// All multi-indices in `dim` variables with order `<= max_order`,
    /// sorted by order then lexicographically descending.
    pub fn up_to(dim: usize, max_order: usize) -> Vec<MultiIndex> {
        let mut out = Vec::new();
        for order in 0..=max_order {
            let mut level = Vec::new();
            let range = 0..=(order as u8);
            for b0 in range.clone() {
                for b1 in range.clone() {
                    for b2 in range.clone() {
                        let b = [b0, b1, b2];
                        if b.iter().skip(dim).any(|&x| x != 0) {
                            continue;
                        }
                        if b.iter().map(|&x| x as usize).sum::<usize>() == order {
                            level.push(MultiIndex(b));
                        }
                    }
                }
            }
            level.sort_by(|a, b| b.cmp(a));
            out.extend(level);
        }
        out
    }

    pub fn label(&self, dim: usize) -> String {
        let parts: Vec<String> = self.0[..dim].iter().map(|b| b.to_string()).collect();
        format!("({})", parts.join(","))
    }
}

impl fmt::Display for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{},{})", self.0[0], self.0[1], self.0[2])
    }
}

/// Uniform time lattice on `[start, end]` with `nodes` nodes.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    start: f64,
    end: f64,
    nodes: usize,
}

impl TimeGrid {
    pub fn new(start: f64, end: f64, nodes: usize) -> Result<Self> {
        if !(end > start) || !start.is_finite() || !end.is_finite() {
            return Err(Error::invalid(format!(
                "time grid needs end > start, got [{start}, {end}]"
            )));
        }
        if nodes < 2 {
            return Err(Error::invalid(format!("time grid needs >= 2 nodes, got {nodes}")));
        }
        Ok(Self { start, end, nodes })
    }

    pub fn start(&self) -> f64 {
        self.start
    }

    pub fn end(&self) -> f64 {
        self.end
    }

    pub fn nodes(&self) -> usize {
        self.nodes
    }

    pub fn step(&self) -> f64 {
        (self.end - self.start) / (self.nodes - 1) as f64
    }

    pub fn time(&self, m: usize) -> f64 {
        if m + 1 == self.nodes {
            self.end
        } else {
            self.start + m as f64 * self.step()
        }
    }

    pub fn times(&self) -> Vec<f64> {
        (0..self.nodes).map(|m| self.time(m)).collect()
    }

    /// Same node count and spacing, relabelled to start at `start`.
    pub fn shifted_to(&self, start: f64) -> TimeGrid {
        TimeGrid {
            start,
            end: start + (self.end - self.start),
            nodes: self.nodes,
        }
    }
}

/// Half-spectrum coefficients of a real field.
#[derive(Clone, Debug, PartialEq)]
pub struct Spectrum {
    grid: GridSpec,
    coeffs: Vec<Complex64>,
}

impl Spectrum {
    pub fn zeros(grid: GridSpec) -> Self {
        Self {
            grid,
            coeffs: vec![Complex64::new(0.0, 0.0); grid.spectral_len()],
        }
    }

    pub fn from_coeffs(grid: GridSpec, coeffs: Vec<Complex64>) -> Result<Self> {
        if coeffs.len() != grid.spectral_len() {
            return Err(Error::GridMismatch(format!(
                "expected {} coefficients, got {}",
                grid.spectral_len(),
                coeffs.len()
            )));
        }
        Ok(Self { grid, coeffs })
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [Complex64] {
        &mut self.coeffs
    }

    /// Samples of the field this spectrum represents.
    pub fn to_samples(&self) -> Vec<f64> {
        fft::inverse(&self.grid, &self.coeffs)
    }

    pub fn to_field(&self, t: f64) -> ScalarField {
        ScalarField {
            grid: self.grid,
            samples: self.to_samples(),
            t,
        }
    }

    /// New spectrum with every coefficient multiplied by `symbol(mode)`.
    pub fn map_modes(&self, symbol: impl Fn(&Mode) -> Complex64) -> Spectrum {
        let coeffs = self
            .grid
            .modes()
            .zip(&self.coeffs)
            .map(|(m, &c)| c * symbol(&m))
            .collect();
        Spectrum {
            grid: self.grid,
            coeffs,
        }
    }

    pub fn derivative(&self, beta: MultiIndex) -> Spectrum {
        if beta.order() == 0 {
            return self.clone();
        }
        self.map_modes(|m| m.derivative_symbol(beta))
    }

    /// Two-thirds rule: zero every mode with some `|k_j|` index above `N/3`.
    pub fn dealias(&self) -> Spectrum {
        let cutoff = self.grid.dealias_cutoff();
        let mut out = self.clone();
        for (m, c) in self.grid.modes().zip(out.coeffs.iter_mut()) {
            if m.is_dealiased_out(cutoff) {
                *c = Complex64::new(0.0, 0.0);
            }
        }
        out
    }

    pub fn scaled(&self, factor: f64) -> Spectrum {
        Spectrum {
            grid: self.grid,
            coeffs: self.coeffs.iter().map(|c| c * factor).collect(),
        }
    }

    /// `self + factor * other`.
    pub fn axpy(&self, factor: f64, other: &Spectrum) -> Spectrum {
        Spectrum {
            grid: self.grid,
            coeffs: self
                .coeffs
                .iter()
                .zip(&other.coeffs)
                .map(|(a, b)| a + b * factor)
                .collect(),
        }
    }

    pub fn add_assign(&mut self, other: &Spectrum) {
        for (a, b) in self.coeffs.iter_mut().zip(&other.coeffs) {
            *a += b;
        }
    }

    /// Squared L2 norm over the cube, by Parseval on the half spectrum.
    pub fn l2_norm_sq(&self) -> f64 {
        let n = self.grid.points();
        let half = n / 2 + 1;
        let mut acc = 0.0;
        for (p, c) in self.coeffs.iter().enumerate() {
            let i0 = p % half;
            let weight = if i0 == 0 || i0 == n / 2 { 1.0 } else { 2.0 };
            acc += weight * c.norm_sqr();
        }
        let cells = self.grid.len() as f64;
        acc * self.grid.spacing().powi(self.grid.dim() as i32) / cells
    }

    /// Upper bound of the sample sup norm, `sum |c| / N^n` over the full spectrum.
    pub fn sup_bound(&self) -> f64 {
        let n = self.grid.points();
        let half = n / 2 + 1;
        let mut acc = 0.0;
        for (p, c) in self.coeffs.iter().enumerate() {
            let i0 = p % half;
            let weight = if i0 == 0 || i0 == n / 2 { 1.0 } else { 2.0 };
            acc += weight * c.norm();
        }
        acc / self.grid.len() as f64
    }
}

/// Real samples of one field at one time.
#[derive(Clone, Debug, PartialEq)]
pub struct ScalarField {
    grid: GridSpec,
    samples: Vec<f64>,
    t: f64,
}

impl ScalarField {
    pub fn new(grid: GridSpec, samples: Vec<f64>, t: f64) -> Result<Self> {
        if samples.len() != grid.len() {
            return Err(Error::GridMismatch(format!(
                "expected {} samples, got {}",
                grid.len(),
                samples.len()
            )));
        }
        if let Some(i) = samples.iter().position(|v| !v.is_finite()) {
            return Err(Error::invalid(format!("non-finite sample at index {i}")));
        }
        Ok(Self { grid, samples, t })
    }

    pub fn zeros(grid: GridSpec, t: f64) -> Self {
        Self {
            grid,
            samples: vec![0.0; grid.len()],
            t,
        }
    }

    pub fn constant(grid: GridSpec, value: f64, t: f64) -> Self {
        Self {
            grid,
            samples: vec![value; grid.len()],
            t,
        }
    }

    /// Samples `f` at every lattice point.
    pub fn from_fn(grid: GridSpec, t: f64, f: impl Fn([f64; 3]) -> f64) -> Self {
        let samples = (0..grid.len()).map(|p| f(grid.position(p))).collect();
        Self { grid, samples, t }
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn with_time(mut self, t: f64) -> Self {
        self.t = t;
        self
    }

    pub fn spectrum(&self) -> Spectrum {
        Spectrum {
            grid: self.grid,
            coeffs: fft::forward(&self.grid, &self.samples),
        }
    }

    /// Forward transform followed by the inverse.
    pub fn spectral_roundtrip(&self) -> ScalarField {
        self.spectrum().to_field(self.t)
    }

    /// Spectral `D^beta f` for `|beta| <= 2`.
    pub fn derivative(&self, beta: MultiIndex) -> Result<ScalarField> {
        if beta.order() > 2 {
            return Err(Error::invalid(format!(
                "derivative order {} exceeds 2",
                beta.order()
            )));
        }
        if beta.0.iter().skip(self.grid.dim()).any(|&b| b != 0) {
            return Err(Error::invalid(format!(
                "multi-index {beta} uses an axis beyond dimension {}",
                self.grid.dim()
            )));
        }
        if beta.order() == 0 {
            return Ok(self.clone());
        }
        Ok(self.spectrum().derivative(beta).to_field(self.t))
    }

    pub fn laplacian(&self) -> ScalarField {
        self.spectrum()
            .map_modes(|m| Complex64::new(-m.k_sq(), 0.0))
            .to_field(self.t)
    }

    pub fn dealiased(&self) -> ScalarField {
        self.spectrum().dealias().to_field(self.t)
    }

    pub fn sup_norm(&self) -> f64 {
        self.samples.iter().fold(0.0, |acc, v| acc.max(v.abs()))
    }

    /// Quadrature L2 norm, `sqrt(sum f^2 dx^n)`.
    pub fn l2_norm(&self) -> f64 {
        let sum: f64 = self.samples.iter().map(|v| v * v).sum();
        (sum * self.grid.spacing().powi(self.grid.dim() as i32)).sqrt()
    }

    pub fn scaled(&self, factor: f64) -> ScalarField {
        self.map(|v| v * factor)
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> ScalarField {
        ScalarField {
            grid: self.grid,
            samples: self.samples.iter().map(|&v| f(v)).collect(),
            t: self.t,
        }
    }

    pub fn zip_with(&self, other: &ScalarField, f: impl Fn(f64, f64) -> f64) -> Result<ScalarField> {
        self.grid.check_same(&other.grid)?;
        Ok(ScalarField {
            grid: self.grid,
            samples: self
                .samples
                .iter()
                .zip(&other.samples)
                .map(|(&a, &b)| f(a, b))
                .collect(),
            t: self.t,
        })
    }

    pub fn add(&self, other: &ScalarField) -> Result<ScalarField> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &ScalarField) -> Result<ScalarField> {
        self.zip_with(other, |a, b| a - b)
    }

    /// Value at lattice index triple `idx`.
    pub fn at(&self, idx: [usize; 3]) -> f64 {
        let n = self.grid.points();
        let mut flat = 0;
        for a in (0..self.grid.dim()).rev() {
            flat = flat * n + idx[a];
        }
        self.samples[flat]
    }
}

/// `n` scalar components sharing one grid and one time stamp.
#[derive(Clone, Debug, PartialEq)]
pub struct VectorField {
    components: Vec<ScalarField>,
}

impl VectorField {
    pub fn new(components: Vec<ScalarField>) -> Result<Self> {
        let first = components
            .first()
            .ok_or_else(|| Error::invalid("vector field needs components"))?;
        let grid = first.grid;
        if components.len() != grid.dim() {
            return Err(Error::invalid(format!(
                "vector field on a {}-d grid needs {} components, got {}",
                grid.dim(),
                grid.dim(),
                components.len()
            )));
        }
        for c in &components[1..] {
            grid.check_same(&c.grid)?;
            if c.t != first.t {
                return Err(Error::invalid("components carry different time stamps"));
            }
        }
        Ok(Self { components })
    }

    pub fn zeros(grid: GridSpec, t: f64) -> Self {
        Self {
            components: (0..grid.dim()).map(|_| ScalarField::zeros(grid, t)).collect(),
        }
    }

    pub fn from_fn(grid: GridSpec, t: f64, f: impl Fn([f64; 3]) -> [f64; 3]) -> Self {
        let values: Vec<[f64; 3]> = (0..grid.len()).map(|p| f(grid.position(p))).collect();
        let components = (0..grid.dim())
            .map(|i| ScalarField {
                grid,
                samples: values.iter().map(|v| v[i]).collect(),
                t,
            })
            .collect();
        Self { components }
    }

    pub fn from_spectra(spectra: &[Spectrum], t: f64) -> Result<Self> {
        Self::new(spectra.iter().map(|s| s.to_field(t)).collect())
    }

    pub fn grid(&self) -> &GridSpec {
        &self.components[0].grid
    }

    pub fn dim(&self) -> usize {
        self.components.len()
    }

    pub fn t(&self) -> f64 {
        self.components[0].t
    }

    pub fn with_time(self, t: f64) -> Self {
        Self {
            components: self.components.into_iter().map(|c| c.with_time(t)).collect(),
        }
    }

    pub fn components(&self) -> &[ScalarField] {
        &self.components
    }

    pub fn component(&self, i: usize) -> &ScalarField {
        &self.components[i]
    }

    pub fn into_components(self) -> Vec<ScalarField> {
        self.components
    }

    pub fn spectra(&self) -> Vec<Spectrum> {
        self.components.iter().map(ScalarField::spectrum).collect()
    }

    /// Spectral divergence.
    pub fn divergence(&self) -> ScalarField {
        let grid = *self.grid();
        let mut acc = Spectrum::zeros(grid);
        for (a, c) in self.components.iter().enumerate() {
            acc.add_assign(&c.spectrum().derivative(MultiIndex::axis(a)));
        }
        acc.to_field(self.t())
    }

    /// Largest component sup norm.
    pub fn sup_norm(&self) -> f64 {
        self.components
            .iter()
            .map(ScalarField::sup_norm)
            .fold(0.0, f64::max)
    }

    /// `sqrt(sum_i |v_i|^2_L2)`.
    pub fn l2_norm(&self) -> f64 {
        self.components
            .iter()
            .map(|c| c.l2_norm().powi(2))
            .sum::<f64>()
            .sqrt()
    }

    pub fn map_components(&self, f: impl Fn(&ScalarField) -> ScalarField) -> VectorField {
        VectorField {
            components: self.components.iter().map(f).collect(),
        }
    }

    pub fn scaled(&self, factor: f64) -> VectorField {
        self.map_components(|c| c.scaled(factor))
    }

    pub fn zip_with(&self, other: &VectorField, f: impl Fn(f64, f64) -> f64 + Copy) -> Result<VectorField> {
        self.grid().check_same(other.grid())?;
        let components = self
            .components
            .iter()
            .zip(&other.components)
            .map(|(a, b)| a.zip_with(b, f))
            .collect::<Result<Vec<_>>>()?;
        Ok(VectorField { components })
    }

    pub fn add(&self, other: &VectorField) -> Result<VectorField> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &VectorField) -> Result<VectorField> {
        self.zip_with(other, |a, b| a - b)
    }

    /// Largest sup norm of the componentwise gradient, `max_{i,j} |d_j v_i|`.
    pub fn gradient_sup(&self) -> f64 {
        let mut best: f64 = 0.0;
        for c in &self.components {
            let spec = c.spectrum();
            for a in 0..self.dim() {
                let d = spec.derivative(MultiIndex::axis(a)).to_samples();
                best = d.iter().fold(best, |acc, v| acc.max(v.abs()));
            }
        }
        best
    }
}

/// Spectral curl. Three components in 3-d; the single out-of-plane
/// component `d_1 v_2 - d_2 v_1` in 2-d.
pub fn curl(v: &VectorField) -> Vec<ScalarField> {
    let spectra = v.spectra();
    let d = |comp: usize, axis: usize| spectra[comp].derivative(MultiIndex::axis(axis));
    let t = v.t();
    let diff = |a: Spectrum, b: Spectrum| a.axpy(-1.0, &b).to_field(t);
    match v.dim() {
        2 => vec![diff(d(1, 0), d(0, 1))],
        _ => vec![
            diff(d(2, 1), d(1, 2)),
            diff(d(0, 2), d(2, 0)),
            diff(d(1, 0), d(0, 1)),
        ],
    }
}
