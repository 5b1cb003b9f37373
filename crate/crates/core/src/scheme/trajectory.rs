use crate::error::{Error, Result};
use crate::field::{GridSpec, Spectrum, TimeGrid, VectorField};

/// A velocity field at every node of a time grid.
#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory {
    time_grid: TimeGrid,
    frames: Vec<VectorField>,
}

impl Trajectory {
    pub fn new(time_grid: TimeGrid, frames: Vec<VectorField>) -> Result<Self> {
        if frames.len() != time_grid.nodes() {
            return Err(Error::invalid(format!(
                "{} frames for {} time nodes",
                frames.len(),
                time_grid.nodes()
            )));
        }
        let grid = *frames[0].grid();
        let scale = time_grid.end().abs().max(time_grid.start().abs()).max(1.0);
        for (m, f) in frames.iter().enumerate() {
            grid.check_same(f.grid())?;
            if (f.t() - time_grid.time(m)).abs() > 1e-12 * scale {
                return Err(Error::invalid(format!(
                    "frame {m} stamped {} but node time is {}",
                    f.t(),
                    time_grid.time(m)
                )));
            }
        }
        Ok(Self { time_grid, frames })
    }

    /// `frames[m]` restamped with the node times.
    pub fn from_frames(time_grid: TimeGrid, frames: Vec<VectorField>) -> Result<Self> {
        let frames = frames
            .into_iter()
            .enumerate()
            .map(|(m, f)| f.with_time(time_grid.time(m)))
            .collect();
        Self::new(time_grid, frames)
    }

    pub fn zeros(grid: GridSpec, time_grid: TimeGrid) -> Self {
        let frames = time_grid.times().into_iter().map(|t| VectorField::zeros(grid, t)).collect();
        Self { time_grid, frames }
    }

    pub fn time_grid(&self) -> &TimeGrid {
        &self.time_grid
    }

    pub fn grid(&self) -> &GridSpec {
        self.frames[0].grid()
    }

    pub fn frames(&self) -> &[VectorField] {
        &self.frames
    }

    pub fn frame(&self, m: usize) -> &VectorField {
        &self.frames[m]
    }

    pub fn first(&self) -> &VectorField {
        &self.frames[0]
    }

    pub fn last(&self) -> &VectorField {
        self.frames.last().expect("at least two nodes")
    }

    pub fn into_frames(self) -> Vec<VectorField> {
        self.frames
    }

    pub fn scaled(&self, factor: f64) -> Trajectory {
        Trajectory {
            time_grid: self.time_grid,
            frames: self.frames.iter().map(|f| f.scaled(factor)).collect(),
        }
    }

    pub fn sub(&self, other: &Trajectory) -> Result<Trajectory> {
        if self.time_grid != other.time_grid {
            return Err(Error::invalid("trajectories live on different time grids"));
        }
        let frames = self
            .frames
            .iter()
            .zip(&other.frames)
            .map(|(a, b)| a.sub(b))
            .collect::<Result<_>>()?;
        Ok(Trajectory {
            time_grid: self.time_grid,
            frames,
        })
    }

    /// Largest sample-wise gap over all nodes.
    pub fn sup_gap(&self, other: &Trajectory) -> Result<f64> {
        Ok(self
            .sub(other)?
            .frames
            .iter()
            .map(|f| f.sup_norm())
            .fold(0.0, f64::max))
    }

    /// Frames in reverse node order on the same time grid:
    /// `w(t) = v(s + T - t)`.
    pub fn reflected(&self) -> Trajectory {
        let frames = self.frames.iter().rev().cloned().collect();
        Trajectory::from_frames(self.time_grid, frames).expect("same node count")
    }

    pub(crate) fn spectra(&self) -> Vec<Vec<Spectrum>> {
        self.frames.iter().map(|f| f.spectra()).collect()
    }

    pub(crate) fn from_spectra(time_grid: TimeGrid, frames: &[Vec<Spectrum>]) -> Trajectory {
        let frames = frames
            .iter()
            .enumerate()
            .map(|(m, f)| VectorField::from_spectra(f, time_grid.time(m)).expect("consistent spectra"))
            .collect();
        Trajectory { time_grid, frames }
    }
}

/// Relabel a trajectory on `[s, T]` to `[0, T - s]`; samples are untouched.
pub fn time_shift(traj: &Trajectory) -> Trajectory {
    shift_to(traj, 0.0)
}

/// Inverse of [`time_shift`]: relabel to start at `s`.
pub fn unshift(traj: &Trajectory, s: f64) -> Trajectory {
    shift_to(traj, s)
}

fn shift_to(traj: &Trajectory, start: f64) -> Trajectory {
    let time_grid = traj.time_grid.shifted_to(start);
    let frames = traj
        .frames
        .iter()
        .enumerate()
        .map(|(m, f)| f.clone().with_time(time_grid.time(m)))
        .collect();
    Trajectory { time_grid, frames }
}
