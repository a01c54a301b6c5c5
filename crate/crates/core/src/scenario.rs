//! Built-in scenarios.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::Grid1D;
use crate::hamiltonian::{HamiltonianSpec, PeriodicFunction, PotentialSpec};
use crate::sublevel::CaseTag;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ScenarioKind {
    /// The perturbed eikonal pipeline: classification, limits, discounted sweep, measures.
    Eikonal,
    /// The non-Tonelli torus example where the normalization condition fails.
    Appendix,
}

#[derive(Clone, Debug, Serialize)]
pub struct Scenario {
    pub name: &'static str,
    pub description: &'static str,
    pub kind: ScenarioKind,
    pub theta: f64,
    /// Bump potential `(center, half_width, amplitude)`, if any.
    pub bump: Option<(f64, f64, f64)>,
    pub eps1: Option<f64>,
    pub expected_case: Option<CaseTag>,
}

impl Scenario {
    pub fn spec(&self) -> HamiltonianSpec {
        match self.kind {
            ScenarioKind::Appendix => HamiltonianSpec::appendix(self.eps1.unwrap_or(1e-3)),
            ScenarioKind::Eikonal => {
                let v = match self.bump {
                    Some((c, w, a)) => PotentialSpec::bump(c, w, a),
                    None => PotentialSpec::zero(),
                };
                HamiltonianSpec::eikonal(self.theta, PeriodicFunction::cosine(), v)
            }
        }
    }

    pub fn default_grid(&self) -> Grid1D {
        Grid1D::with_spacing(-8.0, 9.0, 1.0 / 512.0).expect("static grid")
    }

    pub fn default_window(&self) -> (f64, f64) {
        (-2.0, 3.0)
    }
}

const BUMP: (f64, f64, f64) = (0.25, 0.15, 1.0 / 3.0);

pub fn scenarios() -> Vec<Scenario> {
    vec![
        Scenario {
            name: "E0",
            description: "periodic only, V = 0; case III (degenerate)",
            kind: ScenarioKind::Eikonal,
            theta: 0.0,
            bump: None,
            eps1: None,
            expected_case: Some(CaseTag::III),
        },
        Scenario {
            name: "E1",
            description: "theta = 0, well of depth 0.5 at x = 0.5; case I",
            kind: ScenarioKind::Eikonal,
            theta: 0.0,
            bump: Some((0.5, 0.1, -0.5)),
            eps1: None,
            expected_case: Some(CaseTag::I),
        },
        Scenario {
            name: "E2",
            description: "theta = 2, bump on [0.1, 0.4]; case II-A",
            kind: ScenarioKind::Eikonal,
            theta: 2.0,
            bump: Some(BUMP),
            eps1: None,
            expected_case: Some(CaseTag::IIA),
        },
        Scenario {
            name: "E2b",
            description: "theta = -2, mirrored bump on [-0.4, -0.1]; case II-B",
            kind: ScenarioKind::Eikonal,
            theta: -2.0,
            bump: Some((-BUMP.0, BUMP.1, BUMP.2)),
            eps1: None,
            expected_case: Some(CaseTag::IIB),
        },
        Scenario {
            name: "E3",
            description: "theta = 0, bump on [0.1, 0.4]; case III",
            kind: ScenarioKind::Eikonal,
            theta: 0.0,
            bump: Some(BUMP),
            eps1: None,
            expected_case: Some(CaseTag::III),
        },
        Scenario {
            name: "appendix",
            description: "non-Tonelli torus example, eps1 = 1e-3; condition (U) fails",
            kind: ScenarioKind::Appendix,
            theta: 0.0,
            bump: None,
            eps1: Some(1e-3),
            expected_case: None,
        },
    ]
}

pub fn scenario(name: &str) -> Result<Scenario> {
    scenarios()
        .into_iter()
        .find(|s| s.name.eq_ignore_ascii_case(name))
        .ok_or_else(|| Error::Config(format!("unknown scenario '{name}'")))
}

/// Fixed-width table of the built-ins.
pub fn list_scenarios() -> String {
    let mut out = format!("{:<10} {}\n", "name", "description");
    for s in scenarios() {
        out.push_str(&format!("{:<10} {}\n", s.name, s.description));
    }
    out
}
