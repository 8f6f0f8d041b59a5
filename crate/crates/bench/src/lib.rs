//! Fixtures shared by the kernel benchmarks.

use fprinciple::experiment::{preset, Problem};
use fprinciple::spectral::{Grid, SampledField};

/// A trained-for-a-moment problem of the given hidden width on the desk setup.
pub fn problem(width: usize, steps: usize) -> Problem {
    let mut c = preset("three-tone-desk").expect("shipped preset");
    c.network = c.network.with_hidden_width(width).expect("width > 0");
    c.flow.steps = steps;
    c.flow.stride = steps.max(1);
    Problem::build(&c).expect("preset builds")
}

pub fn field(m: usize) -> SampledField {
    let grid = Grid::new(-8.0, 8.0, m).expect("even m");
    SampledField::from_fn(grid, |x| (x.sin() + (3.0 * x).sin() / 3.0) * (-x * x / 8.0).exp()).expect("finite")
}
