//! Worked team problems and their independent baselines.

mod discrete;
mod gaussian;
mod pomdp;

use std::io::{self, Write};

pub use discrete::{
    brute_force_optimum, build_discrete_witsenhausen, default_grid, refinement_sweep, DiscreteWitsenhausen,
    WitsenhausenDiscreteConfig,
};
pub use gaussian::{
    affine_cost, affine_second_gain, best_affine_gains, build_gaussian_witsenhausen, cell_of, density_ratio,
    gaussian_grid, monte_carlo_cost, nearest, normal_cdf, run_gaussian_case, uniform_grid, AffineBaseline,
    GaussianBins, GaussianCaseOutcome, GaussianWitsenhausen, WitsenhausenGaussianConfig,
};
pub use pomdp::{
    belief_value_iteration, build_pomdp_team, build_pomdp_team_with_cap, mdp_value, open_loop_value,
    pomdp_observation_team, tiger, uniformizer, PomdpSpec, Uniformizer,
};

/// One line of a parameter sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepRow {
    pub parameter: f64,
    pub optimum: f64,
    pub baseline: f64,
    /// `baseline − optimum`.
    pub gap: f64,
}

pub const SWEEP_CSV_HEADER: &str = "parameter,optimum,baseline,gap";

pub fn write_sweep_csv<W: Write>(rows: &[SweepRow], mut out: W) -> io::Result<()> {
    writeln!(out, "{SWEEP_CSV_HEADER}")?;
    for r in rows {
        writeln!(out, "{},{},{},{}", r.parameter, r.optimum, r.baseline, r.gap)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_layout() {
        let rows = [SweepRow {
            parameter: 0.5,
            optimum: 0.25,
            baseline: 0.25,
            gap: 0.0,
        }];
        let mut buf = Vec::new();
        write_sweep_csv(&rows, &mut buf).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "parameter,optimum,baseline,gap\n0.5,0.25,0.25,0\n"
        );
    }
}
