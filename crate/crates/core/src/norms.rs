//! Sup-of-derivatives composite norm, `L^2` and `H^2` norms, and the
//! arctan compactification diagnostic.
//!
//! The composite norm is `sum_{|beta| <= 2} sup |D^beta f|`. Its
//! characteristic-function factor is not computable on samples, so
//! membership is reported as flags next to the unconditional sum.

use std::f64::consts::FRAC_PI_2;
use std::ops::Range;

use serde::Serialize;

use crate::data::decay_constant;
use crate::error::{Error, Result};
use crate::field::{GridSpec, MultiIndex, ScalarField, Spectrum, VectorField};
use crate::scheme::Trajectory;

/// Decay constants above this cap mark a field as outside the decay class.
pub const DEFAULT_DECAY_CAP: f64 = 1e6;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct MembershipFlags {
    /// Decay order `l = 2 (n + 1)` of the weighted class.
    pub decay_order: u32,
    /// Largest on-grid decay constant over `|beta| <= 2`.
    pub decay_constant: f64,
    pub decays: bool,
    /// All derivatives up to order two are finite on the grid.
    pub finite: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct NormReport {
    pub sup_by_multiindex: Vec<(MultiIndex, f64)>,
    pub l2: f64,
    pub h2: f64,
    pub composite: f64,
    pub membership: MembershipFlags,
}

impl NormReport {
    pub fn sup(&self, beta: MultiIndex) -> Option<f64> {
        self.sup_by_multiindex
            .iter()
            .find(|(b, _)| *b == beta)
            .map(|(_, v)| *v)
    }

    /// Rows `(k, node, multiindex, sup)` plus `l2`, `h2` and `composite`
    /// rows whose multiindex column names the quantity.
    pub fn csv_rows(&self, k: usize, node: usize, dim: usize) -> Vec<[String; 4]> {
        let mut rows: Vec<[String; 4]> = self
            .sup_by_multiindex
            .iter()
            .map(|(b, v)| [k.to_string(), node.to_string(), b.label(dim), format!("{v:.17e}")])
            .collect();
        for (name, v) in [("l2", self.l2), ("h2", self.h2), ("composite", self.composite)] {
            rows.push([k.to_string(), node.to_string(), name.to_string(), format!("{v:.17e}")]);
        }
        rows
    }
}

struct Accumulator {
    dim: usize,
    sups: Vec<(MultiIndex, f64)>,
    l2_sq: f64,
    h2_sq: f64,
    decay: f64,
    finite: bool,
}

impl Accumulator {
    fn new(dim: usize) -> Self {
        Self {
            dim,
            sups: MultiIndex::up_to(dim, 2).into_iter().map(|b| (b, 0.0)).collect(),
            l2_sq: 0.0,
            h2_sq: 0.0,
            decay: 0.0,
            finite: true,
        }
    }

    fn add_component(&mut self, spec: &Spectrum) {
        let grid = *spec.grid();
        let order = 2 * (grid.dim() as u32 + 1);
        for (b, sup) in self.sups.iter_mut() {
            let d = spec.derivative(*b);
            let samples = d.to_samples();
            let s = samples.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            if !s.is_finite() {
                self.finite = false;
            }
            *sup = sup.max(s);
            self.h2_sq += d.l2_norm_sq();
            self.decay = self.decay.max(decay_constant(&grid, &samples, order));
        }
        self.l2_sq += spec.l2_norm_sq();
    }

    fn finish(self) -> NormReport {
        let composite = self.sups.iter().map(|(_, v)| v).sum();
        NormReport {
            sup_by_multiindex: self.sups,
            l2: self.l2_sq.sqrt(),
            h2: self.h2_sq.sqrt(),
            composite,
            membership: MembershipFlags {
                decay_order: 2 * (self.dim as u32 + 1),
                decay_constant: self.decay,
                decays: self.decay <= DEFAULT_DECAY_CAP,
                finite: self.finite,
            },
        }
    }
}

/// Anything the norm suite can measure.
pub trait Normed {
    fn norm_suite(&self) -> NormReport;
}

impl Normed for ScalarField {
    fn norm_suite(&self) -> NormReport {
        let mut acc = Accumulator::new(self.grid().dim());
        acc.add_component(&self.spectrum());
        acc.finish()
    }
}

/// Vector fields: each sup entry is the max over components; `l2` and `h2`
/// are the norms of the vector.
impl Normed for VectorField {
    fn norm_suite(&self) -> NormReport {
        spectral_norm_suite(&self.spectra())
    }
}

pub fn norm_suite<F: Normed>(f: &F) -> NormReport {
    f.norm_suite()
}

pub(crate) fn spectral_norm_suite(v: &[Spectrum]) -> NormReport {
    let mut acc = Accumulator::new(v[0].grid().dim());
    for s in v {
        acc.add_component(s);
    }
    acc.finish()
}

/// Composite norm of a vector field in spectral form, without the other
/// entries of the suite.
pub(crate) fn composite_norm(v: &[Spectrum]) -> f64 {
    let dim = v[0].grid().dim();
    MultiIndex::up_to(dim, 2)
        .into_iter()
        .map(|b| {
            v.iter()
                .map(|s| s.derivative(b).to_samples().iter().fold(0.0f64, |m, x| m.max(x.abs())))
                .fold(0.0f64, f64::max)
        })
        .sum()
}

/// Entry-wise sup of the suites over a range of time nodes.
pub fn trajectory_norm_suite(traj: &Trajectory, nodes: Option<Range<usize>>) -> Result<NormReport> {
    let range = nodes.unwrap_or(0..traj.frames().len());
    if range.is_empty() || range.end > traj.frames().len() {
        return Err(Error::invalid(format!(
            "node range {range:?} is empty or outside 0..{}",
            traj.frames().len()
        )));
    }
    let mut reports = traj.frames()[range].iter().map(|f| f.norm_suite());
    let mut out = reports.next().expect("non-empty range");
    for r in reports {
        for ((_, a), (_, b)) in out.sup_by_multiindex.iter_mut().zip(&r.sup_by_multiindex) {
            *a = a.max(*b);
        }
        out.l2 = out.l2.max(r.l2);
        out.h2 = out.h2.max(r.h2);
        out.membership.decay_constant = out.membership.decay_constant.max(r.membership.decay_constant);
        out.membership.decays &= r.membership.decays;
        out.membership.finite &= r.membership.finite;
    }
    out.composite = out.sup_by_multiindex.iter().map(|(_, v)| v).sum();
    Ok(out)
}

/// A field resampled on the compactified cube `(-pi/2, pi/2)^n`.
pub struct ArctanEmbedding {
    /// Samples at `xi`, the field evaluated at `x = tan(xi)`.
    pub field: ScalarField,
    /// Sup over the two outermost layers of `xi` nodes.
    pub boundary_sup: f64,
    pub peak: f64,
    /// `boundary_sup <= threshold * peak`.
    pub embeds: bool,
}

/// Relative boundary level below which a field counts as vanishing on the
/// boundary of the compactified cube.
pub const EMBED_THRESHOLD: f64 = 1e-8;

/// Resample `f` at `x_i = tan(xi_i)` on a uniform `xi`-grid with the same
/// point count. Inside the truncation cube values are multilinearly
/// interpolated; outside it the value on the nearest face is used.
pub fn arctan_embed(f: &ScalarField) -> ArctanEmbedding {
    let grid = *f.grid();
    let xi_grid =
        GridSpec::new(grid.dim(), grid.points(), FRAC_PI_2).expect("same shape as a valid grid");
    let n = grid.points();
    let outer_layer = |idx: usize| idx <= 1 || idx >= n - 1;
    let mut boundary_sup: f64 = 0.0;
    let mut samples = Vec::with_capacity(xi_grid.len());
    for p in 0..xi_grid.len() {
        let xi = xi_grid.position(p);
        let mut x = [0.0; 3];
        for a in 0..grid.dim() {
            x[a] = xi[a].tan();
        }
        let v = interpolate(f, x);
        let idx = xi_grid.unravel(p);
        if idx[..grid.dim()].iter().any(|&i| outer_layer(i)) {
            boundary_sup = boundary_sup.max(v.abs());
        }
        samples.push(v);
    }
    let peak = f.sup_norm();
    let field = ScalarField::new(xi_grid, samples, f.t()).expect("interpolated finite samples");
    ArctanEmbedding {
        field,
        boundary_sup,
        peak,
        embeds: boundary_sup <= EMBED_THRESHOLD * peak,
    }
}

/// Multilinear interpolation with the point clamped into the sampled cube
/// `[-L, L - dx]`.
fn interpolate(f: &ScalarField, x: [f64; 3]) -> f64 {
    let grid = f.grid();
    let dim = grid.dim();
    let n = grid.points();
    let dx = grid.spacing();
    let mut base = [0usize; 3];
    let mut frac = [0.0; 3];
    for a in 0..dim {
        let u = ((x[a] + grid.half_extent()) / dx).clamp(0.0, (n - 1) as f64);
        let j = (u.floor() as usize).min(n - 2);
        base[a] = j;
        frac[a] = u - j as f64;
    }
    let mut acc = 0.0;
    for corner in 0..(1usize << dim) {
        let mut idx = [0usize; 3];
        let mut w = 1.0;
        for a in 0..dim {
            let up = (corner >> a) & 1;
            idx[a] = base[a] + up;
            w *= if up == 1 { frac[a] } else { 1.0 - frac[a] };
        }
        if w != 0.0 {
            acc += w * f.at(idx);
        }
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn zero_field_has_zero_report() {
        let grid = GridSpec::new(3, 16, 8.0).unwrap();
        let r = norm_suite(&ScalarField::zeros(grid, 0.0));
        assert_eq!(r.composite, 0.0);
        assert_eq!(r.l2, 0.0);
        assert!(r.sup_by_multiindex.iter().all(|(_, v)| *v == 0.0));
    }

    #[test]
    fn single_cosine_sups() {
        let grid = GridSpec::new(3, 16, 8.0).unwrap();
        let k = PI / 8.0;
        let f = ScalarField::from_fn(grid, 0.0, |x| (k * x[0]).cos());
        let r = norm_suite(&f);
        assert!((r.sup(MultiIndex::ZERO).unwrap() - 1.0).abs() < 1e-12);
        assert!((r.sup(MultiIndex::axis(0)).unwrap() - k).abs() < 1e-12);
        assert!((r.sup(MultiIndex::pair(0, 0)).unwrap() - k * k).abs() < 1e-12);
        assert!(r.sup(MultiIndex::axis(1)).unwrap() < 1e-14);
        let sum: f64 = r.sup_by_multiindex.iter().map(|(_, v)| v).sum();
        assert_eq!(r.composite, sum);
    }

    #[test]
    fn envelope_embeds_and_constants_do_not() {
        let grid = GridSpec::new(3, 32, 8.0).unwrap();
        let env = ScalarField::from_fn(grid, 0.0, |x| {
            (1.0 + x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).powi(-6)
        });
        let e = arctan_embed(&env);
        assert!(e.embeds, "{} vs {}", e.boundary_sup, e.peak);
        let one = arctan_embed(&ScalarField::constant(grid, 1.0, 0.0));
        assert!((one.boundary_sup - 1.0).abs() < 1e-15);
        assert!(!one.embeds);
        let zero = arctan_embed(&ScalarField::zeros(grid, 0.0));
        assert_eq!(zero.field.sup_norm(), 0.0);
    }
}
