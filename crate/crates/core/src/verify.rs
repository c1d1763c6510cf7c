//! Acceptance criteria and the verification suites built from them.
//!
//! Every criterion returns an [`Outcome`] whose measurements carry their
//! own limits. Long runs are shared through a [`Lab`].

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;
use std::sync::{Arc, Mutex, OnceLock};
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::asymptotics::{eigen_residual_radial, EigenOptions};
use crate::config::{ExperimentConfig, Tolerances};
use crate::exact::{
    residual_at, Barenblatt, BlowUp, ExactSolution, Giant, GiantProfile, TravelingWave, DEFAULT_GIANT_NODES,
};
use crate::experiment::{execute, Run};
use crate::grid::{BoundaryData, Field, Grid, GridSolver, MaskSpec, SchemeParams};
use crate::operator::{eval_operator, GradientVector, Homogeneity, Mutation, SymmetricMatrix};
use crate::radial::{OuterBoundary, RadialProfile, RadialSolver};
use crate::report::{evaluate, giant_comparison, Check, Target};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Measurement {
    pub name: String,
    pub value: f64,
    /// Human-readable limit, e.g. `<= 1e-6`.
    pub limit: String,
    pub passed: bool,
}

impl Measurement {
    pub fn at_most(name: impl Into<String>, value: f64, bound: f64) -> Self {
        Self {
            name: name.into(),
            value,
            limit: format!("<= {bound:e}"),
            passed: value <= bound,
        }
    }

    pub fn at_least(name: impl Into<String>, value: f64, bound: f64) -> Self {
        Self {
            name: name.into(),
            value,
            limit: format!(">= {bound}"),
            passed: value >= bound,
        }
    }

    pub fn within(name: impl Into<String>, value: f64, target: f64, tol: f64) -> Self {
        Self {
            name: name.into(),
            value,
            limit: format!("{target:.6} +- {tol}"),
            passed: (value - target).abs() <= tol,
        }
    }

    pub fn flag(name: impl Into<String>, passed: bool) -> Self {
        Self {
            name: name.into(),
            value: if passed { 1.0 } else { 0.0 },
            limit: "true".into(),
            passed,
        }
    }

    pub fn info(name: impl Into<String>, value: f64) -> Self {
        Self {
            name: name.into(),
            value,
            limit: "info".into(),
            passed: true,
        }
    }

    fn failed(name: impl Into<String>, error: impl fmt::Display) -> Self {
        Self {
            name: format!("{}: {error}", name.into()),
            value: f64::NAN,
            limit: "no error".into(),
            passed: false,
        }
    }

    fn from_check(prefix: &str, c: &Check) -> Self {
        use crate::report::Rule;
        let limit = match c.rule {
            Rule::Within => format!("{:.6} +- {}", c.expected, c.tolerance),
            Rule::AtMost => format!("<= {:e}", c.tolerance),
            Rule::Below => format!("< {}", c.expected),
            Rule::Info => "info".into(),
        };
        Self {
            name: format!("{prefix}{}", c.quantity),
            value: c.measured,
            limit,
            passed: c.passed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Outcome {
    pub id: String,
    pub title: String,
    pub passed: bool,
    pub measurements: Vec<Measurement>,
    pub elapsed_s: f64,
}

impl Outcome {
    fn new(id: &str, title: &str, measurements: Vec<Measurement>, start: Instant) -> Self {
        Self {
            id: id.into(),
            title: title.into(),
            passed: !measurements.is_empty() && measurements.iter().all(|m| m.passed),
            measurements,
            elapsed_s: start.elapsed().as_secs_f64(),
        }
    }

    /// `PASS <id> <title>` followed by the worst measurement.
    pub fn line(&self) -> String {
        let status = if self.passed { "PASS" } else { "FAIL" };
        let detail = self
            .measurements
            .iter()
            .find(|m| !m.passed)
            .or_else(|| self.measurements.iter().find(|m| m.limit != "info"))
            .map(|m| format!("{} = {:.3e} ({})", m.name, m.value, m.limit))
            .unwrap_or_default();
        format!("{status} {} {} [{detail}] ({:.1}s)", self.id, self.title, self.elapsed_s)
    }
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{}", self.line())?;
        for m in &self.measurements {
            let status = if m.passed { "ok  " } else { "FAIL" };
            writeln!(f, "    {status} {} = {:.6e} ({})", m.name, m.value, m.limit)?;
        }
        Ok(())
    }
}

const HS: [f64; 4] = [1.5, 2.0, 3.0, 4.0];

fn hom(h: f64, mutation: Mutation) -> Homogeneity {
    Homogeneity::mutated(h, mutation).expect("h > 1")
}

fn random_unit(rng: &mut ChaCha8Rng, d: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..d).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if n > 1e-3 && n <= 1.0 {
            return v.into_iter().map(|x| x / n).collect();
        }
    }
}

fn scaled(dir: &[f64], r: f64) -> Vec<f64> {
    dir.iter().map(|x| r * x).collect()
}

/// Criterion 1: residuals of the four exact families at 100 random points
/// of their smooth regions (distance at least 0.1 from the singular sets).
pub fn exact_residuals(mutation: Mutation) -> Outcome {
    let start = Instant::now();
    let step = 1e-3;
    let tol = Tolerances::default().residual;
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0001);
    let mut out = Vec::new();
    for h in HS {
        let hom = hom(h, mutation);
        let profile = match GiantProfile::build(hom, DEFAULT_GIANT_NODES) {
            Ok(p) => Arc::new(p),
            Err(e) => {
                out.push(Measurement::failed(format!("giant profile h={h}"), e));
                continue;
            }
        };
        type Sampler<'a> = Box<dyn FnMut(&mut ChaCha8Rng) -> (ExactSolution, Vec<f64>, f64) + 'a>;
        let bar: ExactSolution = Barenblatt::new(1.0, hom).expect("R > 0").into();
        let giant = ExactSolution::giant(profile.clone(), 1.0, 0.0).expect("valid");
        let blow: ExactSolution = BlowUp::new(0.5, 2.0, hom).expect("valid").into();
        let families: Vec<(&str, Sampler)> = vec![
            (
                "barenblatt",
                Box::new(|rng| {
                    let t: f64 = rng.gen_range(0.5..2.0);
                    let rho = t.powf(1.0 / (2.0 * h));
                    let r = rng.gen_range(0.1..(rho - 0.1));
                    (bar.clone(), scaled(&random_unit(rng, 2), r), t)
                }),
            ),
            (
                "giant",
                Box::new(|rng| {
                    let t = rng.gen_range(0.5..2.0);
                    let r = if rng.gen_bool(0.7) {
                        rng.gen_range(0.1..1.9)
                    } else {
                        rng.gen_range(2.1..2.9)
                    };
                    (giant.clone(), scaled(&random_unit(rng, 3), r), t)
                }),
            ),
            (
                "blowup",
                Box::new(|rng| {
                    let t = rng.gen_range(-1.0..1.0);
                    let r = rng.gen_range(0.6..3.0);
                    (blow.clone(), scaled(&random_unit(rng, 3), r), t)
                }),
            ),
            (
                "wave",
                Box::new(|rng| {
                    let nu = random_unit(rng, 2);
                    let c: f64 = rng.gen_range(0.5..2.0) * if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
                    let t = rng.gen_range(0.5..2.0);
                    let behind = rng.gen_range(0.1..2.0);
                    let xi = c * t - c.signum() * behind;
                    let perp = [-nu[1], nu[0]];
                    let s = rng.gen_range(-1.0..1.0);
                    let x = vec![xi * nu[0] + s * perp[0], xi * nu[1] + s * perp[1]];
                    let w = TravelingWave::new(nu, c, hom).expect("unit direction");
                    (w.into(), x, t)
                }),
            ),
        ];
        for (name, mut sample) in families {
            let mut worst: f64 = 0.0;
            let mut error = None;
            for _ in 0..100 {
                let (sol, x, t) = sample(&mut rng);
                match residual_at(&sol, &x, t, step) {
                    Ok(r) => worst = worst.max(if r.is_nan() { f64::INFINITY } else { r }),
                    Err(e) => {
                        error = Some(e);
                        break;
                    }
                }
            }
            match error {
                Some(e) => out.push(Measurement::failed(format!("{name} h={h}"), e)),
                None => out.push(Measurement::at_most(format!("{name} h={h} max residual"), worst, tol)),
            }
        }
    }
    Outcome::new("1", "exact-solution residuals", out, start)
}

/// Criterion 2: flux identity of the giant profile.
pub fn giant_identity(mutation: Mutation) -> Outcome {
    let start = Instant::now();
    let mut out = Vec::new();
    for h in HS {
        match GiantProfile::build(hom(h, mutation), DEFAULT_GIANT_NODES) {
            Ok(p) => {
                let worst = p.flux_identity_residuals(0.05).iter().map(|(_, r)| r.abs()).fold(0.0, f64::max);
                out.push(Measurement::at_most(format!("h={h} flux identity"), worst, 1e-6));
            }
            Err(e) => out.push(Measurement::failed(format!("h={h}"), e)),
        }
    }
    Outcome::new("2", "giant ODE identity", out, start)
}

fn random_matrix(rng: &mut ChaCha8Rng, d: usize) -> SymmetricMatrix {
    let vals: Vec<f64> = (0..d * d).map(|_| rng.gen_range(-2.0..2.0)).collect();
    SymmetricMatrix::from_upper(d, |i, j| vals[i * d + j]).expect("finite")
}

fn random_vector(rng: &mut ChaCha8Rng, d: usize) -> GradientVector {
    let r = rng.gen_range(0.05..3.0);
    GradientVector::new(scaled(&random_unit(rng, d), r)).expect("finite")
}

/// Random orthogonal matrix by Gram-Schmidt, row-major.
fn random_orthogonal(rng: &mut ChaCha8Rng, d: usize) -> Vec<f64> {
    let mut rows: Vec<Vec<f64>> = Vec::new();
    while rows.len() < d {
        let mut v: Vec<f64> = (0..d).map(|_| rng.gen_range(-1.0..1.0)).collect();
        for r in &rows {
            let dot: f64 = v.iter().zip(r).map(|(a, b)| a * b).sum();
            v.iter_mut().zip(r).for_each(|(a, b)| *a -= dot * b);
        }
        let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if n > 1e-3 {
            rows.push(v.into_iter().map(|x| x / n).collect());
        }
    }
    rows.concat()
}

/// Criterion 3: operator algebra on 10^4 random instances per property.
/// Errors are measured relative to the natural scale `|M| |p|^(h-1)`.
pub fn operator_algebra() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0003);
    let n = 10_000;
    let (mut homog, mut rot, mut lin, mut cont): (f64, f64, f64, f64) = (0.0, 0.0, 0.0, 0.0);
    let mut odd_exact = true;
    for _ in 0..n {
        let d = rng.gen_range(2..=3);
        let h = rng.gen_range(1.05..5.0);
        let hom = Homogeneity::new(h).expect("h > 1");
        let m = random_matrix(&mut rng, d);
        let p = random_vector(&mut rng, d);
        let f = |m: &SymmetricMatrix, p: &GradientVector| eval_operator(m, p, &hom).expect("valid");
        let base = f(&m, &p);
        let scale = |m: &SymmetricMatrix, p: &GradientVector| m.norm() * p.norm().powf(h - 1.0);

        let s = rng.gen_range(0.1..10.0);
        let sp = p.scaled(s).expect("finite");
        homog = homog.max((f(&m, &sp) - s.powf(h - 1.0) * base).abs() / scale(&m, &sp));

        let o = random_orthogonal(&mut rng, d);
        let rm = SymmetricMatrix::from_upper(d, |i, j| {
            (0..d)
                .map(|k| (0..d).map(|l| o[i * d + k] * m.get(k, l) * o[j * d + l]).sum::<f64>())
                .sum()
        })
        .expect("finite");
        let rp = GradientVector::new((0..d).map(|i| (0..d).map(|k| o[i * d + k] * p.as_slice()[k]).sum()).collect())
            .expect("finite");
        rot = rot.max((f(&rm, &rp) - base).abs() / scale(&m, &p));

        let m2 = random_matrix(&mut rng, d);
        let (a, b) = (rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0));
        let comb = m.combine(a, &m2, b).expect("same shape");
        let lin_scale = (a.abs() * m.norm() + b.abs() * m2.norm()) * p.norm().powf(h - 1.0);
        lin = lin.max((f(&comb, &p) - (a * base + b * f(&m2, &p))).abs() / lin_scale);

        let neg_m = m.combine(-1.0, &m, 0.0).expect("same shape");
        let neg_p = p.scaled(-1.0).expect("finite");
        odd_exact &= f(&neg_m, &neg_p) == -base;

        if h < 3.0 {
            for k in 1..=12 {
                let q = GradientVector::new(scaled(&random_unit(&mut rng, d), 10f64.powi(-k))).expect("finite");
                let bound = m.norm() * q.norm().powf(h - 1.0);
                let v = f(&m, &q).abs();
                cont = cont.max((v - bound).max(0.0) / bound);
            }
        }
    }
    let out = vec![
        Measurement::at_most("homogeneity rel. error", homog, 1e-12),
        Measurement::at_most("rotation rel. error", rot, 1e-12),
        Measurement::at_most("linearity rel. error", lin, 1e-12),
        Measurement::at_most("continuity bound excess", cont, 1e-12),
        Measurement::flag("odd symmetry exact", odd_exact),
    ];
    Outcome::new("3", "operator algebra", out, start)
}

fn radial_barenblatt_error(hom: Homogeneity, n: usize) -> Result<f64, String> {
    let b = Barenblatt::new(1.0, hom).map_err(|e| e.to_string())?;
    let mut p = RadialProfile::from_fn(2.0, n, 1.0, OuterBoundary::ZeroFlux, |r| b.eval_radial(r, 1.0).unwrap_or(f64::NAN))
        .map_err(|e| e.to_string())?;
    RadialSolver::new(hom).evolve(&mut p, 2.0, &[], |_| {}).map_err(|e| e.to_string())?;
    Ok(p.radii()
        .zip(p.values())
        .map(|(r, v)| (v - b.eval_radial(r, 2.0).unwrap_or(f64::NAN)).abs())
        .fold(0.0, |a: f64, e| if e.is_nan() { f64::INFINITY } else { a.max(e) }))
}

/// Criterion 4: radial solver against the Barenblatt solution.
pub fn radial_barenblatt(mutation: Mutation) -> Outcome {
    let start = Instant::now();
    let hom = hom(3.0, mutation);
    let tol = Tolerances::default().radial_error;
    let mut out = Vec::new();
    let errors: Result<Vec<f64>, String> = [200, 800, 1600].iter().map(|&n| radial_barenblatt_error(hom, n)).collect();
    match errors {
        Ok(e) => {
            out.push(Measurement::info("error n=200", e[0]));
            out.push(Measurement::at_most("error n=800", e[1], tol));
            out.push(Measurement::info("error n=1600", e[2]));
            out.push(Measurement::at_least("order 200->1600", (e[0] / e[2]).log2() / 3.0, 0.8));
        }
        Err(e) => out.push(Measurement::failed("radial run", e)),
    }
    Outcome::new("4", "radial solver vs Barenblatt", out, start)
}

fn cauchy_config(h: f64) -> String {
    format!(
        r#"
name = "cauchy-bump-h{h}"
[equation]
h = {h:?}
[problem]
kind = "cauchy"
solver = "radial"
[geometry]
r_max = 20.0
[initial]
kind = "bump"
radius = 1.0
[grid]
n = 1000
[time]
t0 = 0.0
t_end = 1000.0
[time.snapshots]
kind = "geometric"
first = 10.0
"#
    )
}

fn two_bump_config() -> String {
    r#"
name = "cauchy-two-bump"
[equation]
h = 3.0
[problem]
kind = "cauchy"
solver = "radial"
[geometry]
r_max = 25.0
[initial]
kind = "bumps"
[[initial.bumps]]
radius = 1.0
[[initial.bumps]]
center = [3.0]
radius = 1.0
amplitude = 0.5
[grid]
n = 1250
[time]
t0 = 0.0
t_end = 1000.0
[time.snapshots]
kind = "geometric"
first = 10.0
"#
    .into()
}

/// Horizon of the Dirichlet runs.
pub const DIRICHLET_T_END: f64 = 2e6;

fn dirichlet_config(h: f64, second: bool) -> String {
    let mut times: Vec<f64> = (0..=(8.0 * DIRICHLET_T_END.log10()) as i32).map(|k| 10f64.powf(k as f64 / 8.0)).collect();
    times.push(DIRICHLET_T_END * (-(h - 1.0)).exp());
    times.sort_by(f64::total_cmp);
    let list = times.iter().map(|t| format!("{t:?}")).collect::<Vec<_>>().join(", ");
    let initial = if second {
        "kind = \"bump\"\nradius = 1.0\npower = 1.0\namplitude = 5.0"
    } else {
        "kind = \"bump\"\nradius = 1.0"
    };
    format!(
        r#"
name = "dirichlet-ball-h{h}-{tag}"
[equation]
h = {h:?}
[problem]
kind = "dirichlet"
solver = "radial"
[geometry]
r_max = 1.0
[initial]
{initial}
[grid]
n = 256
[time]
t0 = 0.0
t_end = {DIRICHLET_T_END:?}
[time.snapshots]
kind = "list"
times = [{list}]
"#,
        tag = if second { "b" } else { "a" }
    )
}

type RunCell = Arc<OnceLock<Result<Arc<Run>, String>>>;

/// Runs shared between criteria.
#[derive(Default)]
pub struct Lab {
    runs: Mutex<HashMap<String, RunCell>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum LabRun {
    Cauchy { h: u8 },
    TwoBump,
    Dirichlet { h: u8, second: bool },
}

impl LabRun {
    pub fn config(self) -> ExperimentConfig {
        let text = match self {
            LabRun::Cauchy { h } => cauchy_config(h as f64),
            LabRun::TwoBump => two_bump_config(),
            LabRun::Dirichlet { h, second } => dirichlet_config(h as f64, second),
        };
        ExperimentConfig::parse(&text).expect("built-in config is valid")
    }
}

impl Lab {
    pub fn new() -> Self {
        Self::default()
    }

    /// The shared process-wide lab.
    pub fn global() -> &'static Lab {
        static LAB: OnceLock<Lab> = OnceLock::new();
        LAB.get_or_init(Lab::new)
    }

    pub fn run(&self, which: LabRun) -> Result<Arc<Run>, String> {
        let cell = {
            let mut map = self.runs.lock().expect("lab lock");
            map.entry(format!("{which:?}")).or_default().clone()
        };
        cell.get_or_init(|| {
            let run = execute(&which.config()).map_err(|e| e.to_string())?;
            match &run.abort {
                Some(reason) => Err(format!("run aborted: {reason}")),
                None => Ok(Arc::new(run)),
            }
        })
        .clone()
    }
}

fn push_target(out: &mut Vec<Measurement>, prefix: &str, run: &Run, target: Target) {
    match evaluate(run, target) {
        Ok(checks) => out.extend(checks.iter().map(|c| Measurement::from_check(prefix, c))),
        Err(e) => out.push(Measurement::failed(prefix, e)),
    }
}

fn with_run(out: &mut Vec<Measurement>, lab: &Lab, which: LabRun, f: impl FnOnce(&mut Vec<Measurement>, &Run)) {
    match lab.run(which) {
        Ok(run) => f(out, &run),
        Err(e) => out.push(Measurement::failed(format!("{which:?}"), e)),
    }
}

/// Criterion 5: Cauchy decay and support exponents.
pub fn cauchy_decay(lab: &Lab) -> Outcome {
    let start = Instant::now();
    let mut out = Vec::new();
    for h in [2, 3] {
        with_run(&mut out, lab, LabRun::Cauchy { h }, |out, run| {
            push_target(out, &format!("h={h} "), run, Target::CauchyDecay);
            push_target(out, &format!("h={h} "), run, Target::SupportRate);
        });
    }
    Outcome::new("5", "Cauchy decay rate", out, start)
}

/// Criterion 6: relative Barenblatt gap strictly decreasing.
pub fn barenblatt_attraction(lab: &Lab) -> Outcome {
    let start = Instant::now();
    let mut out = Vec::new();
    with_run(&mut out, lab, LabRun::TwoBump, |out, run| {
        push_target(out, "", run, Target::BarenblattGap);
    });
    Outcome::new("6", "Barenblatt attraction", out, start)
}

/// Criterion 7: Dirichlet decay, giant profile and its uniqueness.
pub fn dirichlet_giant(lab: &Lab) -> Outcome {
    let start = Instant::now();
    let tol = Tolerances::default();
    let mut out = Vec::new();
    for h in [2, 3] {
        let mut profiles = Vec::new();
        for second in [false, true] {
            let tag = if second { "b" } else { "a" };
            with_run(&mut out, lab, LabRun::Dirichlet { h, second }, |out, run| {
                let prefix = format!("h={h} data {tag} ");
                if !second {
                    push_target(out, &prefix, run, Target::DirichletDecay);
                }
                match giant_comparison(run) {
                    Ok(cmp) => {
                        out.push(Measurement::info(format!("{prefix}stabilization"), cmp.estimate.stabilization));
                        if let Some(exact) = &cmp.exact {
                            let gap = cmp.estimate.g.iter().zip(exact).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
                            out.push(Measurement::at_most(format!("{prefix}giant gap"), gap, tol.giant_gap));
                        }
                        profiles.push(cmp.estimate.g);
                    }
                    Err(e) => out.push(Measurement::failed(prefix, e)),
                }
            });
        }
        if let [a, b] = profiles.as_slice() {
            let d = a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
            out.push(Measurement::at_most(format!("h={h} same limit"), d, tol.giant_uniqueness));
        }
    }
    Outcome::new("7", "Dirichlet decay and giant", out, start)
}

/// Sup of the eigenvalue residual of the exact scaled profile on a
/// cell-centred grid of `n` cells over the unit ball.
pub fn exact_eigen_residual(h: f64, n: usize, opts: &EigenOptions) -> Result<f64, String> {
    let hom = Homogeneity::new(h).map_err(|e| e.to_string())?;
    let p = Arc::new(GiantProfile::build(hom, DEFAULT_GIANT_NODES).map_err(|e| e.to_string())?);
    let g = Giant::new(p, 1.0, 0.0).map_err(|e| e.to_string())?;
    let c = (h - 1.0).powf(1.0 / (h - 1.0));
    let prof = RadialProfile::from_fn(1.0, n, 0.0, OuterBoundary::Dirichlet(0.0), |r| c * g.spatial_radial(r))
        .map_err(|e| e.to_string())?;
    Ok(eigen_residual_radial(&prof, &hom, opts).sup)
}

/// Criterion 8: eigenvalue residuals.
pub fn eigen_residuals(lab: &Lab) -> Outcome {
    let start = Instant::now();
    let tol = Tolerances::default();
    let opts = tol.eigen_options();
    let mut out = Vec::new();
    for h in HS {
        match exact_eigen_residual(h, 513, &opts) {
            Ok(r) => out.push(Measurement::at_most(format!("exact h={h} n=513"), r, tol.eigen_exact)),
            Err(e) => out.push(Measurement::failed(format!("exact h={h}"), e)),
        }
    }
    for h in [2, 3] {
        with_run(&mut out, lab, LabRun::Dirichlet { h, second: false }, |out, run| {
            push_target(out, &format!("extracted h={h} "), run, Target::EigenResidual);
        });
    }
    Outcome::new("8", "eigenvalue residual", out, start)
}

/// Criterion 9: homogeneity estimate on the runs of criteria 5 and 7.
pub fn benilan_crandall(lab: &Lab) -> Outcome {
    let start = Instant::now();
    let mut out = Vec::new();
    for h in [2, 3] {
        with_run(&mut out, lab, LabRun::Cauchy { h }, |out, run| {
            push_target(out, &format!("cauchy h={h} "), run, Target::BenilanCrandall);
        });
        for second in [false, true] {
            let tag = if second { "b" } else { "a" };
            with_run(&mut out, lab, LabRun::Dirichlet { h, second }, |out, run| {
                let prefix = format!("dirichlet h={h} {tag} ");
                push_target(out, &prefix, run, Target::BenilanCrandall);
                push_target(out, &prefix, run, Target::BcMonotonicity);
            });
        }
    }
    Outcome::new("9", "Benilan-Crandall estimate", out, start)
}

fn box_grid(n: usize) -> Arc<Grid> {
    Arc::new(Grid::new(&[-2.0, -2.0], &[2.0, 2.0], &[n, n], &MaskSpec::Box).expect("valid grid"))
}

/// Level-`level` crossing of the middle row, scanning along `+x`.
fn front_position(f: &Field, level: f64) -> f64 {
    let g = f.grid();
    let n = g.nodes()[0];
    let j = g.nodes()[1] / 2;
    let v = |i: usize| f.values()[g.index(&[i, j])];
    let mut last = 0;
    for i in 0..n {
        if v(i) > level {
            last = i;
        }
    }
    if last + 1 >= n {
        return g.coords(g.index(&[last, j]))[0];
    }
    let (a, b) = (v(last), v(last + 1));
    let w = (a - level) / (a - b);
    g.coords(g.index(&[last, j]))[0] + w * g.spacing()[0]
}

/// Criterion 10: 2-D grid solver sanity.
pub fn grid_sanity() -> Outcome {
    let start = Instant::now();
    let tol = Tolerances::default();
    let mut out = Vec::new();
    let hom3 = Homogeneity::new(3.0).expect("valid");

    // Barenblatt, gradient-aligned, zero data on a box far from the support
    let b = Barenblatt::new(1.0, hom3).expect("valid");
    let bar = BoundaryData::from_exact(b.into());
    let grid = box_grid(129);
    let params = SchemeParams::new(hom3, 0.0, 1e-3).expect("valid");
    let solver = GridSolver::new(params, BoundaryData::zero());
    let mut field = Field::sample(grid.clone(), &bar, 1.0).expect("finite");
    let initial_max = field.max_abs();
    let mut max_seen: f64 = 0.0;
    let mut min_seen = f64::INFINITY;
    match solver.evolve_with_diagnostics(&mut field, 2.0, &[], |_| {}, |d| {
        max_seen = max_seen.max(d.max_abs);
        min_seen = min_seen.min(d.min_u);
    }) {
        Ok(_) => {
            let err = field
                .active()
                .map(|(i, v)| (v - b.eval(&grid.coords(i)[..2], 2.0).expect("t > 0")).abs())
                .fold(0.0, f64::max);
            out.push(Measurement::at_most("barenblatt 129^2 max error", err, tol.grid_error));
            out.push(Measurement::at_most("max bound excess", max_seen - initial_max, 1e-10));
            out.push(Measurement::at_least("min value", min_seen, -1e-10));
        }
        Err(e) => out.push(Measurement::failed("barenblatt run", e)),
    }

    // traveling wave with exact time-dependent data
    let hom2 = Homogeneity::new(2.0).expect("valid");
    let wave: ExactSolution = TravelingWave::new(vec![1.0, 0.0], 1.0, hom2).expect("valid").into();
    let grid = box_grid(81);
    let data = BoundaryData::from_exact(wave);
    let solver = GridSolver::new(SchemeParams::new(hom2, 0.0, 1e-3).expect("valid"), data.clone());
    let mut field = Field::sample(grid.clone(), &data, 0.0).expect("finite");
    let before = front_position(&field, 1e-6);
    match solver.evolve(&mut field, 1.0, &[], |_| {}) {
        Ok(_) => {
            let after = front_position(&field, 1e-6);
            let dx = grid.spacing()[0];
            out.push(Measurement::at_most("wave front speed error / dx", ((after - before) - 1.0).abs() / dx, 2.0));
        }
        Err(e) => out.push(Measurement::failed("wave run", e)),
    }

    // ordering of two runs sharing dt
    let grid = box_grid(65);
    let lower = Field::sample(grid.clone(), &bar, 1.0).expect("finite");
    let big = BoundaryData::from_exact(Barenblatt::new(1.25, hom3).expect("valid").into());
    let upper = Field::sample(grid, &big, 1.0).expect("finite");
    out.push(ordering_check(hom3, 1e-3, lower, upper, 2.0));
    Outcome::new("10", "2-D grid solver sanity", out, start)
}

/// Evolves `lower <= upper` with shared steps and reports the worst
/// ordering violation.
pub fn ordering_check(hom: Homogeneity, delta: f64, mut lower: Field, mut upper: Field, t_end: f64) -> Measurement {
    let solver = GridSolver::new(SchemeParams::new(hom, 0.0, delta).expect("valid"), BoundaryData::zero());
    let mut worst: f64 = lower
        .values()
        .iter()
        .zip(upper.values())
        .map(|(a, b)| a - b)
        .fold(f64::NEG_INFINITY, f64::max);
    while lower.time() < t_end {
        let dt = solver.cfl_dt(&lower).min(solver.cfl_dt(&upper)).min(t_end - lower.time());
        if let Err(e) = solver.step(&mut lower, dt).and_then(|_| solver.step(&mut upper, dt)) {
            return Measurement::failed("ordering run", e);
        }
        worst = worst.max(
            lower
                .values()
                .iter()
                .zip(upper.values())
                .map(|(a, b)| a - b)
                .fold(f64::NEG_INFINITY, f64::max),
        );
    }
    Measurement::at_most("ordering violation", worst, 1e-10)
}

/// Criterion 11: each mutation must fail criterion 1, 2 or 4.
pub fn mutation_sensitivity() -> Outcome {
    let start = Instant::now();
    let out = [Mutation::AmplitudeConstant, Mutation::WaveConstant, Mutation::EvenFlux]
        .into_iter()
        .map(|m| {
            let tripped: Vec<&str> = [
                ("1", exact_residuals(m).passed),
                ("2", giant_identity(m).passed),
                ("4", radial_barenblatt(m).passed),
            ]
            .into_iter()
            .filter(|(_, passed)| !passed)
            .map(|(id, _)| id)
            .collect();
            let name = format!("{m:?} trips criteria [{}]", tripped.join(","));
            Measurement::flag(name, !tripped.is_empty())
        })
        .collect();
    Outcome::new("11", "mutation sensitivity", out, start)
}

/// Radial conservation and comparison properties.
pub fn radial_properties(mutation: Mutation) -> Outcome {
    let start = Instant::now();
    let hom = hom(3.0, mutation);
    let mut out = Vec::new();
    let b = Barenblatt::new(1.0, hom).expect("valid");
    let make = |scale: f64| {
        RadialProfile::from_fn(3.0, 400, 1.0, OuterBoundary::ZeroFlux, |r| scale * b.eval_radial(r, 1.0).unwrap_or(0.0))
            .expect("valid")
    };
    let solver = RadialSolver::new(hom);
    let (mut lo, mut hi) = (make(1.0), make(1.5));
    let m0 = lo.mass();
    let mut worst: f64 = 0.0;
    while lo.time() < 2.0 {
        let dt = solver.cfl_dt(&lo).min(solver.cfl_dt(&hi)).min(2.0 - lo.time());
        if let Err(e) = solver.step(&mut lo, dt).and_then(|_| solver.step(&mut hi, dt)) {
            out.push(Measurement::failed("radial run", e));
            return Outcome::new("radial", "radial conservation and comparison", out, start);
        }
        worst = worst.max(lo.values().iter().zip(hi.values()).map(|(a, b)| a - b).fold(f64::NEG_INFINITY, f64::max));
    }
    out.push(Measurement::at_most("mass drift per unit time", (lo.mass() - m0).abs(), 1e-10));
    out.push(Measurement::at_most("comparison violation", worst, 1e-12));
    Outcome::new("radial", "radial conservation and comparison", out, start)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Suite {
    Default,
    Operator,
    Exact,
    Giant,
    Radial,
    Grid,
    Cauchy,
    Dirichlet,
    Mutation,
    Acceptance,
}

impl Suite {
    pub const ALL: [Suite; 10] = [
        Suite::Default,
        Suite::Operator,
        Suite::Exact,
        Suite::Giant,
        Suite::Radial,
        Suite::Grid,
        Suite::Cauchy,
        Suite::Dirichlet,
        Suite::Mutation,
        Suite::Acceptance,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Suite::Default => "default",
            Suite::Operator => "operator",
            Suite::Exact => "exact",
            Suite::Giant => "giant",
            Suite::Radial => "radial",
            Suite::Grid => "grid",
            Suite::Cauchy => "cauchy",
            Suite::Dirichlet => "dirichlet",
            Suite::Mutation => "mutation",
            Suite::Acceptance => "acceptance",
        }
    }
}

impl FromStr for Suite {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Suite::ALL
            .into_iter()
            .find(|x| x.name() == s)
            .ok_or_else(|| format!("unknown suite {s:?}"))
    }
}

/// Runs `suite`; `mutation` corrupts the constants seen by the exact,
/// giant and radial checks.
pub fn run_suite(suite: Suite, mutation: Mutation) -> Vec<Outcome> {
    let lab = Lab::global();
    match suite {
        Suite::Default => vec![
            operator_algebra(),
            exact_residuals(mutation),
            giant_identity(mutation),
            radial_barenblatt(mutation),
            radial_properties(mutation),
        ],
        Suite::Operator => vec![operator_algebra()],
        Suite::Exact => vec![exact_residuals(mutation)],
        Suite::Giant => vec![giant_identity(mutation)],
        Suite::Radial => vec![radial_barenblatt(mutation), radial_properties(mutation)],
        Suite::Grid => vec![grid_sanity()],
        Suite::Cauchy => vec![cauchy_decay(lab), barenblatt_attraction(lab)],
        Suite::Dirichlet => vec![dirichlet_giant(lab), eigen_residuals(lab), benilan_crandall(lab)],
        Suite::Mutation => vec![mutation_sensitivity()],
        Suite::Acceptance => (1..=11).filter_map(|id| criterion(id, mutation)).collect(),
    }
}

/// Machine-readable suite result.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Summary {
    pub suite: Suite,
    pub mutation: Mutation,
    pub passed: bool,
    pub outcomes: Vec<Outcome>,
}

impl Summary {
    pub fn new(suite: Suite, mutation: Mutation, outcomes: Vec<Outcome>) -> Self {
        Self {
            suite,
            mutation,
            passed: outcomes.iter().all(|o| o.passed),
            outcomes,
        }
    }
}


/// Runs acceptance criterion `id` (1 to 11) on its own.
pub fn criterion(id: u8, mutation: Mutation) -> Option<Outcome> {
    let lab = Lab::global();
    Some(match id {
        1 => exact_residuals(mutation),
        2 => giant_identity(mutation),
        3 => operator_algebra(),
        4 => radial_barenblatt(mutation),
        5 => cauchy_decay(lab),
        6 => barenblatt_attraction(lab),
        7 => dirichlet_giant(lab),
        8 => eigen_residuals(lab),
        9 => benilan_crandall(lab),
        10 => grid_sanity(),
        11 => mutation_sensitivity(),
        _ => return None,
    })
}
