//! Run configuration: `key = value` text files with `#` comments. Unknown
//! keys are rejected, every diagnostic carries its line number, and omitted
//! keys fall back to the documented defaults.

use crate::assembly::CoefficientPoly;
use crate::error::{Error, Result};
use crate::solver::SolverOptions;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Scenario {
    /// Steady manufactured-solution verification problem.
    Mms,
    /// Hot left wall, cold right wall, insulated top and bottom.
    LeftHeated,
    /// Hot bottom, cold top, insulated sides.
    BottomHeated,
}

impl Scenario {
    pub fn name(&self) -> &'static str {
        match self {
            Scenario::Mms => "mms",
            Scenario::LeftHeated => "left_heated",
            Scenario::BottomHeated => "bottom_heated",
        }
    }
}

/// All run-time parameters. Fully deterministic: there is no seed anywhere.
#[derive(Clone, Debug)]
pub struct SimulationConfig {
    pub scenario: Scenario,
    pub ra: f64,
    pub chi_c0: f64,
    pub chi_c1: f64,
    pub chi_c2: f64,
    pub zeta_c0: f64,
    pub zeta_c1: f64,
    pub zeta_c2: f64,
    /// mesh cells per side
    pub n: usize,
    pub dt: f64,
    pub t_final: f64,
    pub steady_tol: f64,
    pub inner_tol: f64,
    pub max_inner: usize,
    pub max_steps: usize,
    pub quad_points: usize,
    /// amplitude of the two-cell mode added to the bottom-heated
    /// conduction profile
    pub perturb_amp: f64,
    pub output_dir: String,
}

impl SimulationConfig {
    pub fn defaults(scenario: Scenario) -> Self {
        SimulationConfig {
            scenario,
            ra: 100.0,
            chi_c0: 1.0,
            chi_c1: 0.0,
            chi_c2: 0.0,
            zeta_c0: 1.0,
            zeta_c1: 0.0,
            zeta_c2: 0.0,
            n: 64,
            dt: 1e-3,
            t_final: f64::INFINITY,
            steady_tol: 1e-6,
            inner_tol: 1e-8,
            max_inner: 5,
            max_steps: 200_000,
            quad_points: 4,
            perturb_amp: 0.1,
            output_dir: "out".into(),
        }
    }

    pub fn chi(&self) -> Result<CoefficientPoly> {
        CoefficientPoly::new(self.chi_c0, self.chi_c1, self.chi_c2)
    }

    pub fn zeta(&self) -> Result<CoefficientPoly> {
        CoefficientPoly::new(self.zeta_c0, self.zeta_c1, self.zeta_c2)
    }

    pub fn solver_options(&self) -> SolverOptions {
        SolverOptions::default()
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |message: &str| Error::Config {
            line: 0,
            message: message.into(),
        };
        if self.ra <= 0.0 {
            return Err(bad("ra must be positive"));
        }
        if self.n < 2 {
            return Err(bad("n must be at least 2"));
        }
        if self.dt <= 0.0 {
            return Err(bad("dt must be positive"));
        }
        if self.steady_tol <= 0.0 || self.inner_tol <= 0.0 {
            return Err(bad("tolerances must be positive"));
        }
        if self.max_inner == 0 || self.max_steps == 0 {
            return Err(bad("max_inner and max_steps must be at least 1"));
        }
        if !(1..=6).contains(&self.quad_points) {
            return Err(bad("quad_points must be between 1 and 6"));
        }
        self.chi()?;
        self.zeta()?;
        Ok(())
    }
}

/// Parse configuration text. Empty input or a missing scenario is an error.
pub fn parse_config(text: &str) -> Result<SimulationConfig> {
    let mut scenario: Option<(usize, Scenario)> = None;
    let mut pending: Vec<(usize, String, String)> = Vec::new();

    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = match raw.find('#') {
            Some(pos) => &raw[..pos],
            None => raw,
        }
        .trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| Error::Config {
            line: line_no,
            message: format!("expected `key = value`, got `{line}`"),
        })?;
        let key = key.trim();
        let value = value.trim();
        if value.is_empty() {
            return Err(Error::Config {
                line: line_no,
                message: format!("missing value for `{key}`"),
            });
        }
        if key == "scenario" {
            let s = match value {
                "mms" => Scenario::Mms,
                "left_heated" => Scenario::LeftHeated,
                "bottom_heated" => Scenario::BottomHeated,
                other => {
                    return Err(Error::Config {
                        line: line_no,
                        message: format!(
                            "unknown scenario `{other}` (expected mms, left_heated, bottom_heated)"
                        ),
                    })
                }
            };
            scenario = Some((line_no, s));
        } else {
            pending.push((line_no, key.to_string(), value.to_string()));
        }
    }

    let (_, scenario) = scenario.ok_or(Error::Config {
        line: 0,
        message: "scenario missing (mms, left_heated, or bottom_heated)".into(),
    })?;
    let mut config = SimulationConfig::defaults(scenario);

    for (line, key, value) in pending {
        let parse_f64 = |v: &str| -> Result<f64> {
            v.parse::<f64>().map_err(|_| Error::Config {
                line,
                message: format!("cannot parse `{v}` as a number for `{key}`"),
            })
        };
        let parse_usize = |v: &str| -> Result<usize> {
            v.parse::<usize>().map_err(|_| Error::Config {
                line,
                message: format!("cannot parse `{v}` as an integer for `{key}`"),
            })
        };
        match key.as_str() {
            "ra" => config.ra = parse_f64(&value)?,
            "chi_c0" => config.chi_c0 = parse_f64(&value)?,
            "chi_c1" => config.chi_c1 = parse_f64(&value)?,
            "chi_c2" => config.chi_c2 = parse_f64(&value)?,
            "zeta_c0" => config.zeta_c0 = parse_f64(&value)?,
            "zeta_c1" => config.zeta_c1 = parse_f64(&value)?,
            "zeta_c2" => config.zeta_c2 = parse_f64(&value)?,
            "n" => config.n = parse_usize(&value)?,
            "dt" => config.dt = parse_f64(&value)?,
            "t_final" => config.t_final = parse_f64(&value)?,
            "steady_tol" => config.steady_tol = parse_f64(&value)?,
            "inner_tol" => config.inner_tol = parse_f64(&value)?,
            "max_inner" => config.max_inner = parse_usize(&value)?,
            "max_steps" => config.max_steps = parse_usize(&value)?,
            "quad_points" => config.quad_points = parse_usize(&value)?,
            "perturb_amp" => config.perturb_amp = parse_f64(&value)?,
            "output_dir" => config.output_dir = value,
            other => {
                return Err(Error::Config {
                    line,
                    message: format!("unknown key `{other}`"),
                })
            }
        }
    }

    config.validate().map_err(|e| match e {
        // attach the file context to invariant failures
        Error::Config { message, .. } => Error::Config { line: 0, message },
        Error::CoefficientNotPositive { z, value } => Error::Config {
            line: 0,
            message: format!("coefficient not positive on [0,1]: value {value:.3e} at z = {z}"),
        },
        other => other,
    })?;
    Ok(config)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn case_one_preset() {
        let text = "scenario = bottom_heated\nra = 500\nchi_c1 = 1\nzeta_c1 = 1\nn = 64";
        let config = parse_config(text).unwrap();
        assert_eq!(config.scenario, Scenario::BottomHeated);
        assert_eq!(config.ra, 500.0);
        // chi(z) = 1 + z
        assert_eq!((config.chi_c0, config.chi_c1, config.chi_c2), (1.0, 1.0, 0.0));
        assert_eq!((config.zeta_c0, config.zeta_c1, config.zeta_c2), (1.0, 1.0, 0.0));
        assert_eq!(config.n, 64);
        // documented defaults
        assert_eq!(config.dt, 1e-3);
        assert_eq!(config.steady_tol, 1e-6);
        assert_eq!(config.max_inner, 5);
        assert_eq!(config.quad_points, 4);
        assert_eq!(config.perturb_amp, 0.1);
    }

    #[test]
    fn empty_file_missing_scenario() {
        match parse_config("") {
            Err(Error::Config { message, .. }) => assert!(message.contains("scenario")),
            other => panic!("expected config error, got {other:?}"),
        }
    }

    #[test]
    fn negative_ra_rejected() {
        let err = parse_config("scenario = left_heated\nra = -5");
        match err {
            Err(Error::Config { message, .. }) => assert!(message.contains("positive")),
            other => panic!("expected config error, got {other:?}"),
        }
    }

    #[test]
    fn unknown_key_reports_line() {
        let err = parse_config("scenario = mms\n\nwibble = 3");
        match err {
            Err(Error::Config { line, message }) => {
                assert_eq!(line, 3);
                assert!(message.contains("wibble"));
            }
            other => panic!("expected config error, got {other:?}"),
        }
    }

    #[test]
    fn unparsable_value_reports_line() {
        let err = parse_config("scenario = mms\nra = fast");
        match err {
            Err(Error::Config { line, .. }) => assert_eq!(line, 2),
            other => panic!("expected config error, got {other:?}"),
        }
    }

    #[test]
    fn comments_and_blank_lines_ignored() {
        let text = "# full line comment\nscenario = mms # trailing comment\n\nn = 8\n";
        let config = parse_config(text).unwrap();
        assert_eq!(config.scenario, Scenario::Mms);
        assert_eq!(config.n, 8);
    }

    #[test]
    fn nonpositive_coefficient_rejected() {
        let err = parse_config("scenario = bottom_heated\nchi_c1 = -2");
        assert!(err.is_err());
    }
}
