//! One PASS/FAIL line per acceptance criterion. Exits non-zero on any failure
//! outside `KNOWN_UNATTAINABLE`.

use std::process::ExitCode;
use std::time::Instant;

use g2flow::report::{CheckResult, Status, VerificationReport};
use g2flow::verify::{run_suite, Suite, VerifyOptions};

/// The broken-Sasakian closed forms as stated assume `tr_{ω′}(dη) = 3`, which
/// fails on every genuine deformation. The `_trace` variants carry the
/// general coefficient and must pass in their place.
const KNOWN_UNATTAINABLE: [&str; 3] = ["broken.tau0", "broken.tau3", "broken.laplacian"];

struct Criterion {
    number: usize,
    title: &'static str,
    checks: Vec<CheckResult>,
    seconds: f64,
    budget: Option<f64>,
}

impl Criterion {
    fn new(number: usize, title: &'static str, report: &VerificationReport, seconds: f64, pick: impl Fn(&str) -> bool) -> Self {
        let checks: Vec<_> = report.checks.iter().filter(|c| pick(&c.check_id)).cloned().collect();
        Criterion { number, title, checks, seconds, budget: None }
    }

    fn within(mut self, budget: f64) -> Self {
        self.budget = Some(budget);
        self
    }

    fn failures(&self) -> Vec<&CheckResult> {
        self.checks.iter().filter(|c| c.status == Status::Fail).collect()
    }

    fn passed(&self) -> bool {
        !self.checks.is_empty() && self.failures().is_empty() && self.budget.is_none_or(|b| self.seconds < b)
    }

    fn line(&self) -> String {
        let worst = self.checks.iter().map(|c| c.residual / c.tolerance).fold(0.0, f64::max);
        let budget = self.budget.map_or(String::new(), |b| format!(" (budget {b} s)"));
        let mut s = format!(
            "{} criterion {}: {} — {} checks, worst residual/tolerance {:.2e}, {:.2} s{}",
            if self.passed() { "PASS" } else { "FAIL" },
            self.number,
            self.title,
            self.checks.len(),
            worst,
            self.seconds,
            budget,
        );
        for f in self.failures() {
            s += &format!("\n    failed {} residual {:.3e} (tol {:.0e}): {}", f.check_id, f.residual, f.tolerance, f.reference);
        }
        s
    }
}

fn timed(suite: Suite, opts: &VerifyOptions) -> (VerificationReport, f64) {
    let start = Instant::now();
    let report = run_suite(suite, opts);
    (report, start.elapsed().as_secs_f64())
}

fn main() -> ExitCode {
    let opts = VerifyOptions::default();
    let (algebra, t_algebra) = timed(Suite::Algebra, &opts);
    let (g2, t_g2) = timed(Suite::G2, &opts);
    let (torus, t_torus) = timed(Suite::Torus, &opts);
    let (ode, t_ode) = timed(Suite::Ode, &opts);

    let is = |ids: &'static [&'static str]| move |id: &str| ids.contains(&id);
    let criteria = [
        Criterion::new(1, "exact algebra corpus", &algebra, t_algebra, |_| true).within(1.0),
        Criterion::new(2, "metric recovery", &g2, t_g2, is(&["metric_standard", "metric_ansatz"])),
        Criterion::new(3, "torsion extraction", &g2, t_g2, is(&["torsion_coclosed", "ansatz_tau0", "ansatz_torsion_norm"])),
        Criterion::new(4, "torus closed forms", &torus, t_torus, |id| {
            ["product.", "ccy.", "broken.", "kahler."].iter().any(|p| id.starts_with(p))
        })
        .within(60.0),
        Criterion::new(5, "constraint slices and bidegree", &torus, t_torus, |id| {
            ["slice.", "flat_slice.", "combined."].iter().any(|p| id.starts_with(p)) || id == "bidegree"
        }),
        Criterion::new(6, "ODE suite", &ode, t_ode, is(&[
            "closed_form",
            "blowup_time",
            "constant_solution",
            "implicit_relation",
            "regime_table",
        ]))
        .within(10.0),
        Criterion::new(7, "singularity suite", &ode, t_ode, is(&["type_one_constant", "type_one_verdict", "balanced_no_singularity"])),
    ];

    println!("torsion cases {} at amplitude {}, torus grid {} with {} modes, seed {:#x}", opts.cases, opts.amplitude, opts.grid_n, opts.modes, opts.seed);
    let mut unexpected = Vec::new();
    for c in &criteria {
        println!("{}", c.line());
        if c.checks.is_empty() {
            unexpected.push(format!("criterion {} selected no checks", c.number));
        }
        if c.budget.is_some_and(|b| c.seconds >= b) {
            unexpected.push(format!("criterion {} over budget", c.number));
        }
        unexpected.extend(
            c.failures().into_iter().filter(|f| !KNOWN_UNATTAINABLE.contains(&f.check_id.as_str())).map(|f| f.check_id.clone()),
        );
    }

    // The known failures must stay failures, and their corrected forms must hold.
    for id in KNOWN_UNATTAINABLE {
        match torus.get(id) {
            Some(c) if c.status == Status::Fail => {}
            _ => unexpected.push(format!("{id} no longer fails; revisit KNOWN_UNATTAINABLE")),
        }
        let corrected = format!("{id}_trace");
        if torus.get(&corrected).is_none_or(|c| c.status != Status::Pass) {
            unexpected.push(format!("{corrected} does not pass"));
        }
    }

    let all_pass = criteria.iter().all(Criterion::passed);
    println!(
        "acceptance: {}/{} criteria pass",
        criteria.iter().filter(|c| c.passed()).count(),
        criteria.len()
    );
    if unexpected.is_empty() {
        if !all_pass {
            println!("remaining failures are confined to: {}", KNOWN_UNATTAINABLE.join(", "));
        }
        ExitCode::SUCCESS
    } else {
        println!("unexpected failures: {}", unexpected.join(", "));
        ExitCode::FAILURE
    }
}
