//! Initial data families and their function-space diagnostics.
//!
//! The singular family is built on
//! `g(r) = r cos(r^{-eps}) / (1 + r^2)^6` with `r` the distance to the
//! `x3`-axis. On the periodic cube the linear factor `x3` of the third
//! component is replaced by `(L/pi) sin(pi x3 / L)` (and its derivative
//! `cos(pi x3 / L)` multiplies the first two components), which agrees with
//! `x3` to first order at the core and keeps the field periodic.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{curl, GridSpec, MultiIndex, ScalarField, Spectrum, VectorField};

/// Below this distance to the axis a sample counts as on the axis.
const AXIS_RADIUS: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DataKind {
    Singular,
    Smooth,
    /// Field supplied by the caller, e.g. read from snapshots.
    Custom,
}

impl std::str::FromStr for DataKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "singular" => Ok(DataKind::Singular),
            "smooth" => Ok(DataKind::Smooth),
            "custom" => Ok(DataKind::Custom),
            other => Err(Error::invalid(format!("unknown data kind '{other}'"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DataParams {
    eps: f64,
    kind: DataKind,
    amplitude: f64,
}

impl DataParams {
    pub const DEFAULT_EPS: f64 = 0.1;
    pub const MAX_EPS: f64 = 0.25;

    pub fn new(eps: f64, kind: DataKind) -> Result<Self> {
        check_eps(eps)?;
        Ok(Self {
            eps,
            kind,
            amplitude: 1.0,
        })
    }

    pub fn singular(eps: f64) -> Result<Self> {
        Self::new(eps, DataKind::Singular)
    }

    pub fn smooth() -> Self {
        Self {
            eps: Self::DEFAULT_EPS,
            kind: DataKind::Smooth,
            amplitude: 1.0,
        }
    }

    /// Overall factor applied to the generated field.
    pub fn with_amplitude(mut self, amplitude: f64) -> Result<Self> {
        if !amplitude.is_finite() {
            return Err(Error::invalid("amplitude must be finite"));
        }
        self.amplitude = amplitude;
        Ok(self)
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    pub fn kind(&self) -> DataKind {
        self.kind
    }

    pub fn amplitude(&self) -> f64 {
        self.amplitude
    }
}

impl Default for DataParams {
    fn default() -> Self {
        Self {
            eps: Self::DEFAULT_EPS,
            kind: DataKind::Singular,
            amplitude: 1.0,
        }
    }
}

fn check_eps(eps: f64) -> Result<()> {
    if eps > 0.0 && eps <= DataParams::MAX_EPS {
        Ok(())
    } else {
        Err(Error::invalid(format!(
            "eps must lie in (0, {}], got {eps}",
            DataParams::MAX_EPS
        )))
    }
}

/// `(g, dg/dr)` for `g = r cos(r^{-eps}) / (1 + r^2)^6`.
///
/// At `r = 0` both are returned as 0: `g` vanishes there, and `dg/dr` has
/// no limit (it oscillates), but it only ever enters multiplied by a
/// positive power of `r`.
pub fn g_eps_eval(r: f64, eps: f64) -> Result<(f64, f64)> {
    if r.is_nan() || r < 0.0 {
        return Err(Error::invalid(format!("radius must be >= 0, got {r}")));
    }
    if r == 0.0 {
        return Ok((0.0, 0.0));
    }
    let p = Profile::new(r, eps, true);
    Ok((p.g, p.dg))
}

/// `g`, `g'` and `r g''` at one radius; `oscillating = false` replaces the
/// cosine factor by 1.
struct Profile {
    g: f64,
    dg: f64,
    r_d2g: f64,
}

impl Profile {
    fn new(r: f64, eps: f64, oscillating: bool) -> Self {
        // g = f rho with f = r cos(u), u = r^{-eps}
        let q = 1.0 + r * r;
        let rho = q.powi(-6);
        let drho = -12.0 * r * q.powi(-7);
        let d2rho = -12.0 * q.powi(-7) + 168.0 * r * r * q.powi(-8);
        let (f, df, r_d2f) = if oscillating {
            let u = r.powf(-eps);
            let (sin, cos) = u.sin_cos();
            (
                r * cos,
                cos + eps * u * sin,
                eps * u * ((1.0 - eps) * sin - eps * u * cos),
            )
        } else {
            (r, 1.0, 0.0)
        };
        Self {
            g: f * rho,
            dg: df * rho + f * drho,
            r_d2g: r_d2f * rho + 2.0 * r * df * drho + r * f * d2rho,
        }
    }
}

/// Closed-form singular velocity at a point of the cube `[-L, L)^3`.
pub fn singular_point(x: [f64; 3], eps: f64, half_extent: f64) -> Result<[f64; 3]> {
    check_eps(eps)?;
    let r = x[0].hypot(x[1]);
    if r < AXIS_RADIUS {
        return Ok([0.0; 3]);
    }
    let (g, dg) = g_eps_eval(r, eps)?;
    let w = PI / half_extent;
    let (sin, cos) = (w * x[2]).sin_cos();
    Ok([
        cos * x[0] * g,
        cos * x[1] * g,
        -(sin / w) * (2.0 * g + r * dg),
    ])
}

/// The planar field `(x1 g, x2 g)` sampled on a 2-D grid and replaced by its
/// spectral gradient part, so it is curl-free to roundoff.
fn planar_gradient(eps: f64, plane: GridSpec) -> (Vec<Spectrum>, Spectrum) {
    let sample = |axis: usize| {
        ScalarField::from_fn(plane, 0.0, |x| {
            let r = x[0].hypot(x[1]);
            if r < AXIS_RADIUS {
                0.0
            } else {
                x[axis] * Profile::new(r, eps, true).g
            }
        })
        .spectrum()
    };
    let raw = [sample(0), sample(1)];
    let mut grad = [Spectrum::zeros(plane), Spectrum::zeros(plane)];
    let mut div = Spectrum::zeros(plane);
    for (p, m) in plane.modes().enumerate() {
        let k2 = m.k_odd_sq();
        if k2 == 0.0 {
            continue;
        }
        let kdotp = raw[0].coeffs()[p] * m.k_odd(0) + raw[1].coeffs()[p] * m.k_odd(1);
        for (a, s) in grad.iter_mut().enumerate() {
            s.coeffs_mut()[p] = kdotp * (m.k_odd(a) / k2);
        }
        div.coeffs_mut()[p] = kdotp * Complex64::new(0.0, 1.0);
    }
    (grad.to_vec(), div)
}

/// The singular data on a 3-D grid.
///
/// The planar part `(x1 g, x2 g)` is taken as the gradient part of its
/// samples and the third component is built from its spectral divergence,
/// which makes the discrete field divergence-free and its `omega_3`
/// vanish to roundoff. Samples agree with [`singular_point`] up to the
/// spectral resolution of the profile.
pub fn make_singular_data(dp: &DataParams, grid: GridSpec) -> Result<VectorField> {
    if grid.dim() != 3 {
        return Err(Error::invalid(
            "the singular family is three-dimensional; use make_planar_data in 2-D",
        ));
    }
    let plane = GridSpec::new(2, grid.points(), grid.half_extent())?;
    let (grad, div) = planar_gradient(dp.eps, plane);
    let p1 = grad[0].to_samples();
    let p2 = grad[1].to_samples();
    let d = div.to_samples();
    let w = PI / grid.half_extent();
    let n = grid.points();
    let amp = dp.amplitude;
    let mut comps = vec![vec![0.0; grid.len()]; 3];
    for (j2, z) in grid.coordinates().into_iter().enumerate() {
        let (sin, cos) = (w * z).sin_cos();
        for q in 0..n * n {
            let p = j2 * n * n + q;
            comps[0][p] = amp * cos * p1[q];
            comps[1][p] = amp * cos * p2[q];
            comps[2][p] = -amp * (sin / w) * d[q];
        }
    }
    VectorField::new(
        comps
            .into_iter()
            .map(|c| ScalarField::new(grid, c, 0.0))
            .collect::<Result<_>>()?,
    )
}

/// Two-dimensional analogue `(x1 g, x2 g)`: curl-free but not
/// divergence-free.
pub fn make_planar_data(dp: &DataParams, grid: GridSpec) -> Result<VectorField> {
    if grid.dim() != 2 {
        return Err(Error::invalid("the planar analogue lives on a 2-D grid"));
    }
    let (grad, _) = planar_gradient(dp.eps, grid);
    VectorField::from_spectra(&grad, 0.0).map(|v| v.scaled(dp.amplitude))
}

/// Curl of the potential `A exp(-|x|^2 / 4)` (third component in 3-D, the
/// stream function in 2-D), computed spectrally.
pub fn make_smooth_data(grid: GridSpec, amplitude: f64) -> Result<VectorField> {
    let potential = ScalarField::from_fn(grid, 0.0, |x| {
        amplitude * (-(x[0] * x[0] + x[1] * x[1] + x[2] * x[2]) / 4.0).exp()
    });
    let d1 = potential.derivative(MultiIndex::axis(0))?;
    let d2 = potential.derivative(MultiIndex::axis(1))?;
    let mut comps = vec![d2, d1.scaled(-1.0)];
    if grid.dim() == 3 {
        comps.push(ScalarField::zeros(grid, 0.0));
    }
    VectorField::new(comps)
}

/// Data for `dp` on `grid`; custom data must be supplied by the caller.
pub fn make_data(dp: &DataParams, grid: GridSpec) -> Result<VectorField> {
    match (dp.kind, grid.dim()) {
        (DataKind::Singular, 3) => make_singular_data(dp, grid),
        (DataKind::Singular, _) => make_planar_data(dp, grid),
        (DataKind::Smooth, _) => make_smooth_data(grid, dp.amplitude),
        (DataKind::Custom, _) => Err(Error::invalid("custom data has no generator")),
    }
}

pub fn divergence_sup(v: &VectorField) -> f64 {
    v.divergence().sup_norm()
}

pub enum Vorticity {
    Spatial(VectorField),
    Planar(ScalarField),
}

impl Vorticity {
    /// The `omega_3` component.
    pub fn axial(&self) -> &ScalarField {
        match self {
            Vorticity::Spatial(w) => w.component(2),
            Vorticity::Planar(w) => w,
        }
    }

    pub fn sup_norm(&self) -> f64 {
        match self {
            Vorticity::Spatial(w) => w.sup_norm(),
            Vorticity::Planar(w) => w.sup_norm(),
        }
    }
}

pub fn vorticity(v: &VectorField) -> Vorticity {
    let mut parts = curl(v);
    if parts.len() == 1 {
        Vorticity::Planar(parts.pop().expect("one component"))
    } else {
        Vorticity::Spatial(VectorField::new(parts).expect("curl keeps the grid"))
    }
}

/// Smallest on-grid constants `c` with `|D^gamma f(x)| <= c / (1 + |x|^l)`
/// over the shell `1 <= |x| <= L - 1`.
#[derive(Clone, Debug, Serialize)]
pub struct DecayReport {
    pub order: u32,
    pub constants: Vec<(MultiIndex, f64)>,
    pub max_constant: f64,
    pub cap: f64,
    pub member: bool,
}

pub(crate) fn decay_constant(grid: &GridSpec, samples: &[f64], order: u32) -> f64 {
    let outer = grid.half_extent() - 1.0;
    let mut c: f64 = 0.0;
    for (p, v) in samples.iter().enumerate() {
        let x = grid.position(p);
        let r = (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).sqrt();
        if (1.0..=outer).contains(&r) {
            c = c.max(v.abs() * (1.0 + r.powi(order as i32)));
        }
    }
    c
}

pub fn decay_report(f: &ScalarField, order: u32, max_derivative: usize, cap: f64) -> Result<DecayReport> {
    if max_derivative > 2 {
        return Err(Error::invalid("decay classes are checked up to derivative order 2"));
    }
    let spec = f.spectrum();
    let constants: Vec<(MultiIndex, f64)> = MultiIndex::up_to(f.grid().dim(), max_derivative)
        .into_iter()
        .map(|b| {
            let d = spec.derivative(b).to_samples();
            (b, decay_constant(f.grid(), &d, order))
        })
        .collect();
    let max_constant = constants.iter().fold(0.0f64, |m, (_, c)| m.max(*c));
    Ok(DecayReport {
        order,
        constants,
        max_constant,
        cap,
        member: max_constant <= cap,
    })
}

/// Which closed form a scaling probe differentiates.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ProbeProfile {
    Singular,
    /// `cos(r^{-eps})` replaced by 1: the smooth control.
    EnvelopeOnly,
}

/// Geometric ladder of annuli `rho <= r <= 2 rho` around the axis.
#[derive(Clone, Debug)]
pub struct AnnulusLadder {
    pub radii: Vec<f64>,
    pub radial_samples: usize,
    pub angular_samples: usize,
    pub profile: ProbeProfile,
}

impl AnnulusLadder {
    /// `rho = 10^{-1}, 10^{-1.5}, ..., 10^{-12}`.
    pub fn half_decades() -> Self {
        Self {
            radii: (2..=24).map(|j| 10f64.powf(-(j as f64) / 2.0)).collect(),
            radial_samples: 64,
            angular_samples: 64,
            profile: ProbeProfile::Singular,
        }
    }

    pub fn with_profile(mut self, profile: ProbeProfile) -> Self {
        self.profile = profile;
        self
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct SingularityReport {
    pub radii: Vec<f64>,
    pub sup_second_derivative: Vec<f64>,
    pub fitted_slope: f64,
    pub alpha_estimate: f64,
}

/// `h_{1,11}` in the plane `x3 = 0` at polar position `(r, theta)`.
pub fn h1_11(r: f64, theta: f64, eps: f64, profile: ProbeProfile) -> f64 {
    let p = Profile::new(r, eps, profile == ProbeProfile::Singular);
    let (s, c) = theta.sin_cos();
    c * (2.0 * p.dg + p.dg * s * s + p.r_d2g * c * c)
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn loglog_slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}

/// Sup of `|h_{1,11}|` on each annulus of the ladder, from the closed form,
/// and the fitted power of `r`.
pub fn singularity_scaling(dp: &DataParams, ladder: &AnnulusLadder) -> Result<SingularityReport> {
    if ladder.radii.len() < 3 {
        return Err(Error::invalid("singularity scaling needs at least 3 annuli"));
    }
    if ladder.radii.windows(2).any(|w| w[1] >= w[0]) || ladder.radii.iter().any(|&r| r <= 0.0) {
        return Err(Error::invalid("annulus radii must be positive and strictly decreasing"));
    }
    if ladder.radial_samples < 2 || ladder.angular_samples < 1 {
        return Err(Error::invalid("each annulus needs at least 2 radial and 1 angular sample"));
    }
    let sups: Vec<f64> = ladder
        .radii
        .iter()
        .map(|&rho| {
            let mut sup: f64 = 0.0;
            for i in 0..ladder.radial_samples {
                let r = rho * 2f64.powf(i as f64 / (ladder.radial_samples - 1) as f64);
                for j in 0..ladder.angular_samples {
                    let theta = 2.0 * PI * j as f64 / ladder.angular_samples as f64;
                    sup = sup.max(h1_11(r, theta, dp.eps, ladder.profile).abs());
                }
            }
            sup
        })
        .collect();
    if sups.iter().any(|s| !(s.is_finite() && *s > 0.0)) {
        return Err(Error::invalid("annulus sups must be finite and positive"));
    }
    let fitted_slope = loglog_slope(&ladder.radii, &sups);
    Ok(SingularityReport {
        radii: ladder.radii.clone(),
        sup_second_derivative: sups,
        fitted_slope,
        alpha_estimate: 1.0 + fitted_slope,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn g_eps_direct_values() {
        for eps in [0.05, 0.1, 0.25] {
            let (g, _) = g_eps_eval(1.0, eps).unwrap();
            assert!((g - 1f64.cos() / 64.0).abs() < 1e-16);
        }
        assert_eq!(g_eps_eval(0.0, 0.1).unwrap(), (0.0, 0.0));
        assert!(g_eps_eval(10.0, 0.1).unwrap().0.abs() < 1e-11);
        assert!(g_eps_eval(-1.0, 0.1).is_err());
    }

    #[test]
    fn g_eps_derivative_matches_difference_quotient() {
        for r in [0.01, 0.3, 1.0, 2.5] {
            let h = 1e-6 * r;
            let (gp, _) = g_eps_eval(r + h, 0.1).unwrap();
            let (gm, _) = g_eps_eval(r - h, 0.1).unwrap();
            let (_, dg) = g_eps_eval(r, 0.1).unwrap();
            assert!(((gp - gm) / (2.0 * h) - dg).abs() < 1e-7, "r = {r}");
        }
    }

    #[test]
    fn second_radial_derivative_matches_difference_quotient() {
        for r in [0.003, 0.2, 1.3] {
            let h = 1e-5 * r;
            let dp = Profile::new(r + h, 0.1, true).dg;
            let dm = Profile::new(r - h, 0.1, true).dg;
            let want = r * (dp - dm) / (2.0 * h);
            assert!((Profile::new(r, 0.1, true).r_d2g - want).abs() < 1e-6, "r = {r}");
        }
    }

    #[test]
    fn point_values() {
        let h = singular_point([1.0, 0.0, 0.0], 0.1, 8.0).unwrap();
        assert!((h[0] - 1f64.cos() / 64.0).abs() < 1e-16);
        assert_eq!(h[1], 0.0);
        assert_eq!(h[2], 0.0);
        assert_eq!(singular_point([0.0, 0.0, 3.0], 0.1, 8.0).unwrap(), [0.0; 3]);
    }

    #[test]
    fn eps_range_is_enforced() {
        assert!(DataParams::singular(0.3).is_err());
        assert!(DataParams::singular(0.0).is_err());
        assert!(DataParams::singular(0.25).is_ok());
    }

    #[test]
    fn singular_data_is_exactly_solenoidal_and_irrotational_about_the_axis() {
        let grid = GridSpec::new(3, 32, 8.0).unwrap();
        let h = make_singular_data(&DataParams::default(), grid).unwrap();
        let scale = h.gradient_sup();
        assert!(divergence_sup(&h) <= 1e-12 * scale);
        assert!(vorticity(&h).axial().sup_norm() <= 1e-12 * scale);
    }

    #[test]
    fn smooth_data_is_zero_at_the_origin() {
        let grid = GridSpec::new(3, 16, 8.0).unwrap();
        let h = make_smooth_data(grid, 1.0).unwrap();
        let origin = [8, 8, 8];
        for c in h.components() {
            assert!(c.at(origin).abs() < 1e-15);
        }
        assert_eq!(make_smooth_data(grid, 0.0).unwrap().sup_norm(), 0.0);
    }

    #[test]
    fn decay_of_constants_and_envelopes() {
        let grid = GridSpec::new(3, 16, 8.0).unwrap();
        let zero = decay_report(&ScalarField::zeros(grid, 0.0), 2, 2, 10.0).unwrap();
        assert!(zero.constants.iter().all(|(_, c)| *c == 0.0));
        let one = decay_report(&ScalarField::constant(grid, 1.0, 0.0), 2, 0, 10.0).unwrap();
        assert!((one.max_constant - 50.0).abs() < 1e-9);
        assert!(!one.member);
    }

    #[test]
    fn envelope_control_has_no_singular_slope() {
        let ladder = AnnulusLadder::half_decades().with_profile(ProbeProfile::EnvelopeOnly);
        let rep = singularity_scaling(&DataParams::default(), &ladder).unwrap();
        assert!(rep.fitted_slope.abs() < 0.01, "{}", rep.fitted_slope);
    }
}
