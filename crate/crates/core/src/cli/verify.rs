//! The consolidated verification run behind `ringpot verify`.

use std::collections::BTreeMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::benchmarks::{closed_form_check, RadialPotential, Region};
use crate::field_analysis::{self as fa, AnnularWindow, Sampling, Subject};
use crate::geometry::RingSpec;
use crate::grid::{build_grid, Grid, NodeClass, ScalarField};
use crate::morph::MorphFamily;
use crate::p_solver::{self, PSolverConfig};
use crate::report::CheckReport;
use crate::streamline::{streamline_suite, TraceConfig};
use crate::{inf_solver, Error, Result, SolveStats, SolverChoice};

/// Every check `verify` knows, in report order.
pub const CHECKS: &[&str] = &[
    "closed_form",
    "max_principle",
    "laplacian_sign",
    "quasiconcavity",
    "level_sets",
    "comparison_with_cones",
    "mean_value",
    "eic_scaling",
    "eic_limit",
    "structural_inequality",
    "divergence_formula",
    "gradient_bounds",
    "hessian_budget",
    "monotonicity",
    "concavity",
    "c1_trend",
    "streamlines",
];

/// Finite exponents solved by continuation, each from the previous one.
const P_LADDER: [f64; 4] = [8.0, 16.0, 32.0, 64.0];
const LEVELS: [f64; 3] = [0.25, 0.5, 0.75];

#[derive(Debug, Clone, PartialEq)]
pub struct VerifyConfig {
    /// `(label, ring)` pairs; labels select ring-specific expected failures.
    pub rings: Vec<(String, RingSpec)>,
    pub h: f64,
    /// Check names, or `["all"]`.
    pub checks: Vec<String>,
    /// Entries `check` (every ring) or `label:check`.
    pub expected_fail: Vec<String>,
    pub seed: u64,
}

impl VerifyConfig {
    pub fn validate(&self) -> Result<()> {
        if self.rings.is_empty() {
            return Err(Error::Config("verify needs at least one --ring".into()));
        }
        if !(self.h > 0.0 && self.h.is_finite()) {
            return Err(Error::Config(format!("h must be positive, got {}", self.h)));
        }
        if self.checks.is_empty() {
            return Err(Error::Config("the check selection is empty".into()));
        }
        if let Some(c) = self.checks.iter().find(|c| c.as_str() != "all" && !CHECKS.contains(&c.as_str())) {
            return Err(Error::Config(format!("unknown check '{c}'")));
        }
        for e in &self.expected_fail {
            let check = e.rsplit(':').next().unwrap_or(e);
            if !CHECKS.contains(&check) {
                return Err(Error::Config(format!("unknown check '{check}' in expected-fail")));
            }
        }
        Ok(())
    }

    fn selects_all(&self) -> bool {
        self.checks.iter().any(|c| c == "all")
    }

    fn is_expected_fail(&self, label: &str, check: &str) -> bool {
        self.expected_fail.iter().any(|e| match e.split_once(':') {
            Some((l, c)) => l == label && c == check,
            None => e == check,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    Pass,
    Fail,
    ExpectedFail,
    UnexpectedPass,
    Error,
}

impl Outcome {
    pub fn is_success(self) -> bool {
        matches!(self, Outcome::Pass | Outcome::ExpectedFail)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Entry {
    pub outcome: Outcome,
    pub expected_fail: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub report: Option<CheckReport>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridInfo {
    pub h: f64,
    pub nx: usize,
    pub ny: usize,
    pub interior_nodes: usize,
    pub unmasked_nodes: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveSummary {
    pub iterations: usize,
    pub final_update: f64,
    pub final_residual: f64,
}

impl From<&SolveStats> for SolveSummary {
    fn from(s: &SolveStats) -> Self {
        Self { iterations: s.iterations, final_update: s.final_update, final_residual: s.final_residual }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RingReport {
    pub label: String,
    pub ring: RingSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<GridInfo>,
    pub solves: BTreeMap<String, SolveSummary>,
    pub entries: BTreeMap<String, Entry>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub toolkit_version: String,
    pub h: f64,
    pub seed: u64,
    pub inf_stencil_radius_cells: usize,
    pub checks: Vec<String>,
    pub expected_fail: Vec<String>,
    pub rings: Vec<RingReport>,
    pub pass: bool,
}

impl VerificationReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serialization") + "\n"
    }

    pub fn entry(&self, label: &str, check: &str) -> Option<&Entry> {
        self.rings.iter().find(|r| r.label == label)?.entries.get(check)
    }
}

/// Solutions on one grid, computed on first use.
struct Fields {
    grid: Arc<Grid>,
    inf: Option<std::result::Result<ScalarField, String>>,
    ladder: Vec<std::result::Result<ScalarField, String>>,
    p4: Option<std::result::Result<ScalarField, String>>,
    solves: BTreeMap<String, SolveSummary>,
}

impl Fields {
    fn new(grid: Arc<Grid>) -> Self {
        Self { grid, inf: None, ladder: Vec::new(), p4: None, solves: BTreeMap::new() }
    }

    fn inf(&mut self) -> Result<&ScalarField> {
        if self.inf.is_none() {
            let solved = inf_solver::solve_inf(&self.grid, &inf_solver::InfSolverConfig::default());
            if let Ok((_, s)) = &solved {
                self.solves.insert("inf".into(), s.into());
            }
            self.inf = Some(solved.map(|(u, _)| u).map_err(|e| e.to_string()));
        }
        self.inf.as_ref().expect("set above").as_ref().map_err(|e| Error::Precondition(format!("inf solve failed: {e}")))
    }

    fn p(&mut self, p: f64) -> Result<&ScalarField> {
        let idx = P_LADDER.iter().position(|&q| q == p).expect("p on the ladder");
        while self.ladder.len() <= idx {
            let q = P_LADDER[self.ladder.len()];
            let mut config = PSolverConfig::new(q);
            match self.ladder.last() {
                Some(Err(e)) => {
                    let e = e.clone();
                    self.ladder.push(Err(e));
                    continue;
                }
                Some(Ok(prev)) => config = config.with_initial(prev.clone()),
                None => {}
            }
            let solved = p_solver::solve_p(&self.grid, &config);
            if let Ok((_, s)) = &solved {
                self.solves.insert(format!("p{q}"), s.into());
            }
            self.ladder.push(solved.map(|(u, _)| u).map_err(|e| e.to_string()));
        }
        self.ladder[idx].as_ref().map_err(|e| Error::Precondition(format!("p = {p} solve failed: {e}")))
    }

    fn p4(&mut self) -> Result<&ScalarField> {
        if self.p4.is_none() {
            let solved = p_solver::solve_p(&self.grid, &PSolverConfig::new(4.0));
            if let Ok((_, s)) = &solved {
                self.solves.insert("p4".into(), s.into());
            }
            self.p4 = Some(solved.map(|(u, _)| u).map_err(|e| e.to_string()));
        }
        self.p4.as_ref().expect("set above").as_ref().map_err(|e| Error::Precondition(format!("p = 4 solve failed: {e}")))
    }
}

fn named(mut r: CheckReport, name: &str) -> CheckReport {
    r.name = name.to_string();
    r
}

fn applicable(check: &str, spec: &RingSpec) -> bool {
    match check {
        "closed_form" => spec.build().ok().and_then(|r| RadialPotential::for_ring(&r, None)).is_some(),
        "concavity" => matches!(spec.inner, crate::geometry::ShapeSpec::Point(_)),
        _ => true,
    }
}

fn run_check(check: &str, f: &mut Fields, seed: u64) -> Result<CheckReport> {
    let h = f.grid.h();
    let ring = f.grid.ring().clone();
    Ok(match check {
        "closed_form" => {
            let exact = RadialPotential::for_ring(&ring, None)
                .ok_or_else(|| Error::Precondition("the ring has no closed-form potential".into()))?;
            let exact4 = RadialPotential::for_ring(&ring, Some(4.0)).expect("same ring");
            let mut parts = vec![closed_form_check("inf", f.inf()?, &exact, 3.0 * h, Region::Unmasked)];
            let u4 = f.p4()?;
            if ring.inner_is_point() {
                parts.push(closed_form_check("p4_global", u4, &exact4, 5e-2, Region::Interior));
                parts.push(closed_form_check("p4_outside_collar", u4, &exact4, 1e-2, Region::BeyondInner(8.0 * h)));
            } else {
                parts.push(closed_form_check("p4", u4, &exact4, 1e-2, Region::Unmasked));
            }
            CheckReport::all_of(check, parts)
        }
        "max_principle" => CheckReport::all_of(
            check,
            vec![
                named(p_solver::max_principle_check(f.inf()?), "inf"),
                named(p_solver::max_principle_check(f.p(8.0)?), "p8"),
            ],
        ),
        "laplacian_sign" => named(p_solver::laplacian_sign_check(f.p(8.0)?), check),
        "quasiconcavity" => CheckReport::all_of(
            check,
            vec![
                named(p_solver::quasiconcavity_check(f.inf()?, &LEVELS), "inf"),
                named(p_solver::quasiconcavity_check(f.p(8.0)?, &LEVELS), "p8"),
            ],
        ),
        "level_sets" => {
            let inf = MorphFamily::from_field(f.inf()?, SolverChoice::Inf, &LEVELS)?.diagnostics();
            let p8 = MorphFamily::from_field(f.p(8.0)?, SolverChoice::P(8.0), &LEVELS)?.diagnostics();
            CheckReport::all_of(check, vec![named(inf, "inf"), named(p8, "p8")])
        }
        "comparison_with_cones" => inf_solver::comparison_with_cones_check(f.inf()?, 200, seed),
        "mean_value" => inf_solver::mean_value_check(f.inf()?, 100, seed),
        "eic_scaling" => {
            let low = f.p(8.0)?.clone();
            fa::eic_scaling_check(&low, f.p(16.0)?, (1.6, 2.9))
        }
        "eic_limit" => fa::eic_limit_check(f.inf()?, 10.0),
        "structural_inequality" => fa::structural_inequality_check(Subject::Field(f.p(8.0)?), Sampling::new(100_000, seed)),
        "divergence_formula" => fa::divergence_formula_check(Subject::Field(f.p(8.0)?), Sampling::new(100_000, seed)),
        "gradient_bounds" => fa::gradient_bounds_check(f.inf()?),
        "hessian_budget" => {
            let (z, r) = fa::hessian_window(&ring);
            let nodewise = named(fa::hessian_budget_check(f.p(8.0)?, &[(z, r)]), "nodewise_p8");
            let mut l1 = Vec::new();
            for p in [8.0, 16.0, 32.0] {
                l1.push((p, fa::hessian_window_l1(f.p(p)?, z, r)));
            }
            CheckReport::all_of(check, vec![nodewise, fa::cross_p_stability_check("window_l1", &l1, 2.0)])
        }
        "monotonicity" => CheckReport::all_of(
            check,
            vec![
                named(fa::monotonicity_check(f.inf()?, 20, seed), "inf"),
                named(fa::monotonicity_check(f.p(8.0)?, 20, seed), "p8"),
            ],
        ),
        "concavity" => fa::concavity_check(f.inf()?, 5000, seed),
        "c1_trend" => {
            let mut ladder = Vec::new();
            for p in P_LADDER {
                ladder.push((p, f.p(p)?.clone()));
            }
            let refs: Vec<(f64, &ScalarField)> = ladder.iter().map(|(p, u)| (*p, u)).collect();
            fa::c1_trend_check(f.inf()?, &refs, AnnularWindow::around_inner(&ring))
        }
        "streamlines" => streamline_suite(f.inf()?, 50, seed, &TraceConfig::default())?,
        other => return Err(Error::Config(format!("unknown check '{other}'"))),
    })
}

fn verify_ring(label: &str, spec: &RingSpec, config: &VerifyConfig) -> RingReport {
    let mut out = RingReport {
        label: label.to_string(),
        ring: spec.clone(),
        grid: None,
        solves: BTreeMap::new(),
        entries: BTreeMap::new(),
        error: None,
        pass: false,
    };
    let grid = match spec.build().and_then(|r| build_grid(&r, config.h)) {
        Ok(g) => g,
        Err(e) => {
            out.error = Some(e.to_string());
            return out;
        }
    };
    out.grid = Some(GridInfo {
        h: grid.h(),
        nx: grid.nx(),
        ny: grid.ny(),
        interior_nodes: grid.count(NodeClass::Interior),
        unmasked_nodes: grid.default_mask().count(),
    });
    let selected: Vec<&str> = if config.selects_all() {
        CHECKS.iter().copied().filter(|c| applicable(c, spec)).collect()
    } else {
        CHECKS.iter().copied().filter(|c| config.checks.iter().any(|s| s == c)).collect()
    };
    let mut fields = Fields::new(grid);
    for check in selected {
        let expected_fail = config.is_expected_fail(label, check);
        let entry = match run_check(check, &mut fields, config.seed) {
            Ok(report) => {
                let outcome = match (report.pass, expected_fail) {
                    (true, false) => Outcome::Pass,
                    (false, false) => Outcome::Fail,
                    (false, true) => Outcome::ExpectedFail,
                    (true, true) => Outcome::UnexpectedPass,
                };
                Entry { outcome, expected_fail, report: Some(report), error: None }
            }
            Err(e) => Entry { outcome: Outcome::Error, expected_fail, report: None, error: Some(e.to_string()) },
        };
        out.entries.insert(check.to_string(), entry);
    }
    out.solves = fields.solves;
    out.pass = out.entries.values().all(|e| e.outcome.is_success());
    out
}

/// Runs the selected checks on every ring. Check failures and errors are
/// recorded in the report; only an invalid configuration is an error.
pub fn verify(config: &VerifyConfig) -> Result<VerificationReport> {
    config.validate()?;
    let rings: Vec<RingReport> = config.rings.iter().map(|(label, spec)| verify_ring(label, spec, config)).collect();
    Ok(VerificationReport {
        toolkit_version: env!("CARGO_PKG_VERSION").to_string(),
        h: config.h,
        seed: config.seed,
        inf_stencil_radius_cells: inf_solver::InfSolverConfig::default().stencil_radius_cells,
        checks: config.checks.clone(),
        expected_fail: config.expected_fail.clone(),
        pass: rings.iter().all(|r| r.pass),
        rings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::benchmarks;

    fn config(checks: &[&str]) -> VerifyConfig {
        VerifyConfig {
            rings: vec![("disk".into(), benchmarks::punctured_disk().to_spec())],
            h: 1.0 / 32.0,
            checks: checks.iter().map(|s| s.to_string()).collect(),
            expected_fail: Vec::new(),
            seed: 3,
        }
    }

    #[test]
    fn selections_are_validated() {
        assert!(verify(&config(&[])).is_err());
        assert!(verify(&config(&["nonsense"])).is_err());
        let mut c = config(&["all"]);
        c.expected_fail = vec!["disk:nonsense".into()];
        assert!(verify(&c).is_err());
        c.rings.clear();
        c.expected_fail.clear();
        assert!(verify(&c).is_err());
    }

    #[test]
    fn expected_failures_invert_the_outcome() {
        let mut c = config(&["max_principle"]);
        c.expected_fail = vec!["disk:max_principle".into()];
        let r = verify(&c).unwrap();
        assert_eq!(r.entry("disk", "max_principle").unwrap().outcome, Outcome::UnexpectedPass);
        assert!(!r.pass);
        c.expected_fail = vec!["other:max_principle".into()];
        let r = verify(&c).unwrap();
        assert_eq!(r.entry("disk", "max_principle").unwrap().outcome, Outcome::Pass);
        assert!(r.pass);
    }

    #[test]
    fn inapplicable_and_failing_setups_are_recorded() {
        let mut c = config(&["closed_form"]);
        c.rings = vec![("square".into(), benchmarks::square_point().to_spec())];
        let r = verify(&c).unwrap();
        assert_eq!(r.entry("square", "closed_form").unwrap().outcome, Outcome::Error);
        assert!(!r.pass);
        c.h = 0.5;
        let r = verify(&c).unwrap();
        assert!(r.rings[0].error.is_some() && !r.pass);
    }

    #[test]
    fn all_skips_inapplicable_checks() {
        let mut c = config(&["all"]);
        c.rings = vec![("square".into(), benchmarks::square_point().to_spec())];
        c.h = 1.0 / 16.0;
        c.checks = vec!["all".into()];
        let r = verify(&c).unwrap();
        assert!(!r.rings[0].entries.contains_key("closed_form"));
        assert_eq!(r.rings[0].entries.len(), CHECKS.len() - 1);
    }
}
