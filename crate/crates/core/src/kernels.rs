//! Heat kernel and semigroup, space-time Duhamel convolution, Leray
//! projection and the pressure-gradient term, all as spectral multipliers.
//!
//! The pointwise Gaussian exists for tests and the bound-integral evaluator;
//! every field-level action goes through Fourier space, where the time
//! integrals of the heat semigroup are smooth.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::field::{MultiIndex, ScalarField, Spectrum, TimeGrid, VectorField};
use crate::scheme::Trajectory;

/// Diffusivity `s` and elapsed time of one heat evolution.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HeatParams {
    pub diffusivity: f64,
    pub elapsed: f64,
}

impl HeatParams {
    pub fn new(diffusivity: f64, elapsed: f64) -> Result<Self> {
        if !(diffusivity > 0.0 && diffusivity.is_finite()) {
            return Err(Error::invalid(format!("diffusivity must be positive, got {diffusivity}")));
        }
        if !(elapsed >= 0.0 && elapsed.is_finite()) {
            return Err(Error::invalid(format!("elapsed time must be >= 0, got {elapsed}")));
        }
        Ok(Self {
            diffusivity,
            elapsed,
        })
    }
}

/// `(4 pi s dt)^{-n/2} exp(-r^2 / (4 s dt))`.
pub fn heat_kernel_point(dim: usize, hp: HeatParams, r: f64) -> Result<f64> {
    if hp.elapsed == 0.0 {
        return Err(Error::invalid(
            "heat kernel at zero elapsed time is a delta; use the semigroup identity",
        ));
    }
    let spread = 4.0 * hp.diffusivity * hp.elapsed;
    Ok((std::f64::consts::PI * spread).powf(-(dim as f64) / 2.0) * (-r * r / spread).exp())
}

/// Fields the heat semigroup can act on.
pub trait HeatPropagate: Sized {
    fn heat_propagate(&self, hp: HeatParams) -> Self;
}

pub(crate) fn heat_spectrum(spec: &Spectrum, hp: HeatParams) -> Spectrum {
    if hp.elapsed == 0.0 {
        return spec.clone();
    }
    let rate = hp.diffusivity * hp.elapsed;
    spec.map_modes(|m| Complex64::new((-rate * m.k_sq()).exp(), 0.0))
}

impl HeatPropagate for ScalarField {
    fn heat_propagate(&self, hp: HeatParams) -> Self {
        if hp.elapsed == 0.0 {
            return self.clone();
        }
        heat_spectrum(&self.spectrum(), hp).to_field(self.t())
    }
}

impl HeatPropagate for VectorField {
    fn heat_propagate(&self, hp: HeatParams) -> Self {
        self.map_components(|c| c.heat_propagate(hp))
    }
}

pub fn heat_propagate<F: HeatPropagate>(f: &F, hp: HeatParams) -> F {
    f.heat_propagate(hp)
}

/// `(1 - e^{-z}) / z`.
fn phi1(z: f64) -> f64 {
    if z < 1e-5 {
        1.0 - z / 2.0 + z * z / 6.0
    } else {
        -(-z).exp_m1() / z
    }
}

/// `(1 - e^{-z}(1 + z)) / z^2`, by its Taylor series below `z = 1`.
fn phi2(z: f64) -> f64 {
    if z < 1.0 {
        // sum_i (-1)^i (i+1)/(i+2)! z^i
        let mut sum = 0.0;
        let mut fact = 2.0; // (i+2)!
        let mut pow = 1.0;
        for i in 0..24 {
            let term = (i as f64 + 1.0) / fact * pow;
            sum += if i % 2 == 0 { term } else { -term };
            pow *= z;
            fact *= i as f64 + 3.0;
        }
        sum
    } else {
        (1.0 - (-z).exp() * (1.0 + z)) / (z * z)
    }
}

/// Per-mode exponential-integrator weights for one time step `dt`.
///
/// With the source linear in time between nodes, the mode `c` of
/// `g * G^s` advances as `c_{m+1} = decay c_m + prev g_m + next g_{m+1}`.
pub(crate) struct DuhamelWeights {
    decay: Vec<f64>,
    prev: Vec<f64>,
    next: Vec<f64>,
}

impl DuhamelWeights {
    pub(crate) fn new(grid: &crate::field::GridSpec, diffusivity: f64, dt: f64) -> Self {
        let len = grid.spectral_len();
        let mut decay = Vec::with_capacity(len);
        let mut prev = Vec::with_capacity(len);
        let mut next = Vec::with_capacity(len);
        for m in grid.modes() {
            let z = diffusivity * m.k_sq() * dt;
            let p1 = phi1(z);
            let p2 = phi2(z);
            decay.push((-z).exp());
            prev.push(dt * p2);
            next.push(dt * (p1 - p2));
        }
        Self { decay, prev, next }
    }

    /// Convolution values at every node for one component; node 0 is zero.
    pub(crate) fn integrate(&self, sources: &[&Spectrum]) -> Vec<Spectrum> {
        let grid = *sources[0].grid();
        let mut out = Vec::with_capacity(sources.len());
        let mut acc = Spectrum::zeros(grid);
        out.push(acc.clone());
        for w in sources.windows(2) {
            let (a, b) = (w[0].coeffs(), w[1].coeffs());
            for (p, c) in acc.coeffs_mut().iter_mut().enumerate() {
                *c = *c * self.decay[p] + a[p] * self.prev[p] + b[p] * self.next[p];
            }
            out.push(acc.clone());
        }
        out
    }
}

/// Space-time Duhamel convolution of per-node spectra `sources[m][i]`
/// (node, component) against the heat kernel with diffusivity `s`, at
/// every node of `times`, with kernel derivative `beta`.
pub(crate) fn duhamel_spectra(
    sources: &[Vec<Spectrum>],
    times: &TimeGrid,
    diffusivity: f64,
    beta: MultiIndex,
) -> Vec<Vec<Spectrum>> {
    let grid = *sources[0][0].grid();
    let weights = DuhamelWeights::new(&grid, diffusivity, times.step());
    let ncomp = sources[0].len();
    let mut per_comp: Vec<Vec<Spectrum>> = (0..ncomp)
        .map(|i| {
            let column: Vec<&Spectrum> = sources.iter().map(|frame| &frame[i]).collect();
            weights.integrate(&column)
        })
        .collect();
    if beta.order() > 0 {
        for column in &mut per_comp {
            for s in column.iter_mut() {
                *s = s.derivative(beta);
            }
        }
    }
    // transpose back to (node, component)
    (0..sources.len())
        .map(|m| per_comp.iter().map(|col| col[m].clone()).collect())
        .collect()
}

/// `g * G^s` evaluated at node `m_target` of the trajectory's time grid,
/// with the kernel differentiated by `beta` (`|beta| <= 1`).
pub fn duhamel(g: &Trajectory, diffusivity: f64, m_target: usize, beta: MultiIndex) -> Result<VectorField> {
    if beta.order() > 1 {
        return Err(Error::invalid("Duhamel kernel derivative is limited to order 1"));
    }
    if !(diffusivity > 0.0) {
        return Err(Error::invalid("diffusivity must be positive"));
    }
    let times = g.time_grid();
    if m_target >= times.nodes() {
        return Err(Error::invalid(format!(
            "node {m_target} outside a grid of {} nodes",
            times.nodes()
        )));
    }
    let t = times.time(m_target);
    let grid = *g.grid();
    if m_target == 0 {
        return Ok(VectorField::zeros(grid, t));
    }
    let sources: Vec<Vec<Spectrum>> = g.frames()[..=m_target].iter().map(|f| f.spectra()).collect();
    let sub = TimeGrid::new(times.start(), t, m_target + 1)?;
    let all = duhamel_spectra(&sources, &sub, diffusivity, beta);
    VectorField::from_spectra(&all[m_target], t)
}

/// Leray projector `delta_ij - k_i k_j / |k|^2`, identity at `k = 0`.
pub(crate) fn leray_spectra(v: &[Spectrum]) -> Vec<Spectrum> {
    let grid = *v[0].grid();
    let dim = v.len();
    let mut out: Vec<Spectrum> = v.to_vec();
    for (p, m) in grid.modes().enumerate() {
        let k2 = m.k_odd_sq();
        if k2 == 0.0 {
            continue;
        }
        let mut kdotv = Complex64::new(0.0, 0.0);
        for (a, s) in v.iter().enumerate() {
            kdotv += s.coeffs()[p] * m.k_odd(a);
        }
        for (a, s) in out.iter_mut().enumerate().take(dim) {
            s.coeffs_mut()[p] -= kdotv * (m.k_odd(a) / k2);
        }
    }
    out
}

pub fn leray_project(v: &VectorField) -> VectorField {
    VectorField::from_spectra(&leray_spectra(&v.spectra()), v.t()).expect("same shape as input")
}

/// Sampled velocity and gradients of the dealiased input, from which both
/// quadratic terms are formed.
struct DealiasedState {
    velocity: Vec<Vec<f64>>,
    /// `gradient[i][j] = d_j v_i`
    gradient: Vec<Vec<Vec<f64>>>,
}

fn dealiased_state(v: &[Spectrum]) -> DealiasedState {
    let dim = v.len();
    let mut velocity = Vec::with_capacity(dim);
    let mut gradient = Vec::with_capacity(dim);
    for s in v {
        let d = s.dealias();
        velocity.push(d.to_samples());
        gradient.push(
            (0..dim)
                .map(|j| d.derivative(MultiIndex::axis(j)).to_samples())
                .collect(),
        );
    }
    DealiasedState { velocity, gradient }
}

/// `-i k / |k|^2` applied to `q`: the gradient of the inverse Laplacian,
/// zero at `k = 0`.
fn pressure_from_source(q: &Spectrum, dim: usize) -> Vec<Spectrum> {
    (0..dim)
        .map(|a| {
            q.map_modes(|m| {
                let k2 = m.k_odd_sq();
                if k2 == 0.0 {
                    Complex64::new(0.0, 0.0)
                } else {
                    Complex64::new(0.0, -m.k_odd(a) / k2)
                }
            })
        })
        .collect()
}

fn pressure_source(state: &DealiasedState, grid: crate::field::GridSpec) -> Spectrum {
    let dim = state.velocity.len();
    let len = grid.len();
    let mut q = vec![0.0; len];
    for j in 0..dim {
        for m in 0..dim {
            let a = &state.gradient[m][j];
            let b = &state.gradient[j][m];
            for p in 0..len {
                q[p] += a[p] * b[p];
            }
        }
    }
    ScalarField::new(grid, q, 0.0)
        .expect("products of finite samples")
        .spectrum()
        .dealias()
}

/// Spectra of the advection term `(v . grad) v` and of the pressure-gradient
/// term, both dealiased.
pub(crate) fn quadratic_terms(v: &[Spectrum]) -> (Vec<Spectrum>, Vec<Spectrum>) {
    let grid = *v[0].grid();
    let dim = v.len();
    let state = dealiased_state(v);
    let len = grid.len();
    let advection = (0..dim)
        .map(|i| {
            let mut acc = vec![0.0; len];
            for j in 0..dim {
                let vj = &state.velocity[j];
                let dji = &state.gradient[i][j];
                for p in 0..len {
                    acc[p] += vj[p] * dji[p];
                }
            }
            ScalarField::new(grid, acc, 0.0)
                .expect("products of finite samples")
                .spectrum()
                .dealias()
        })
        .collect();
    let pressure = pressure_from_source(&pressure_source(&state, grid), dim);
    (advection, pressure)
}

/// Spectral form of the pressure integral against the Laplacian-kernel
/// gradient: component `i` is `K_{n,i} * sum_{j,m} v_{m,j} v_{j,m}`.
pub fn pressure_gradient_term(v: &VectorField) -> VectorField {
    let spectra = v.spectra();
    let state = dealiased_state(&spectra);
    let q = pressure_source(&state, *v.grid());
    VectorField::from_spectra(&pressure_from_source(&q, v.dim()), v.t()).expect("same shape as input")
}

/// `(v . grad) v` with dealiased inputs and output.
pub fn advection_term(v: &VectorField) -> VectorField {
    let (adv, _) = quadratic_terms(&v.spectra());
    VectorField::from_spectra(&adv, v.t()).expect("same shape as input")
}
