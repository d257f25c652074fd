use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use crate::chain::{
    foster_bound_check, mass_escape_profile, rec_law_calibration, return_tail_profile, trajectory_stats, verify_sd,
    ChainKernel, DriftFunction, ReflectedWalk, Translation,
};
use crate::counterexamples::{build_mass_escape_chain, demonstrate_empirical_escape, demonstrate_mass_escape, MassEscapeSchedule, ScheduleParams};
use crate::dist::{DriftSpec, FiniteDist};
use crate::drift::{
    calibrate_uniqueness, check_probable_decrease, check_variation, f_a, fa_drift_function, variation_constant,
    ExponentTable, LatticeWalk, MatrixMeasure, QuasiNormParams,
};
use crate::error::{Error, Result};
use crate::lattice::LatticeBasis;
use crate::rng::{derive_seed, stream};
use crate::scalar::fmt17;

use super::artifacts::ArtifactWriter;
use super::config::{ExperimentConfig, Kind, Model};
use super::sampling::sample_high_lattice;
use super::statistics::{occupation_experiment, siegel_equidistribution};

/// One pass/fail line of a run.
#[derive(Clone, Debug, PartialEq)]
pub struct Check {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunSummary {
    pub kind: Kind,
    pub config_hash: String,
    pub wall_time: f64,
    pub checks: Vec<Check>,
    pub stats: Vec<(String, f64)>,
    pub artifacts: Vec<PathBuf>,
}

impl RunSummary {
    pub fn pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    /// Plain-text summary. Only the last line (wall time) varies between
    /// identical runs.
    pub fn render(&self) -> String {
        let mut s = format!("{}\nkind = {}\nconfig = {}\n", crate::VERSION, self.kind.name(), self.config_hash);
        for c in &self.checks {
            s += &format!("check {} = {} ({})\n", c.name, if c.pass { "pass" } else { "fail" }, c.detail);
        }
        for (k, v) in &self.stats {
            s += &format!("stat {k} = {}\n", fmt17(*v));
        }
        for a in &self.artifacts {
            s += &format!("artifact {}\n", a.file_name().map(|n| n.to_string_lossy()).unwrap_or_default());
        }
        s += &format!("result = {}\n", if self.pass() { "pass" } else { "fail" });
        s += &format!("wall_time = {:.3} s\n", self.wall_time);
        s
    }
}

struct Ctx {
    writer: ArtifactWriter,
    checks: Vec<Check>,
    stats: Vec<(String, f64)>,
}

impl Ctx {
    fn check(&mut self, name: &str, pass: bool, detail: String) {
        self.checks.push(Check { name: name.into(), pass, detail });
    }

    fn stat(&mut self, name: &str, v: f64) {
        self.stats.push((name.into(), v));
    }

    fn csv(&mut self, name: &str, body: impl FnOnce(&mut Vec<u8>) -> Result<()>) -> Result<()> {
        self.writer.write(name, body).map(|_| ())
    }
}

/// Run experiment `kind` and write its artifacts and `summary.txt` into
/// `out`. A `kind` recorded in the config must match.
pub fn run(config: &ExperimentConfig, kind: Kind, out: &Path) -> Result<RunSummary> {
    if let Some(k) = config.kind {
        if k != kind {
            return Err(Error::Config {
                line: None,
                message: format!("config is for `{}`, not `{}`", k.name(), kind.name()),
            });
        }
    }
    let start = Instant::now();
    let hash = config.hash();
    let mut ctx = Ctx { writer: ArtifactWriter::new(out, &hash)?, checks: Vec::new(), stats: Vec::new() };
    ctx.csv("config.toml", |b| Ok(b.write_all(config.render().as_bytes())?))?;
    match kind {
        Kind::Simulate => with_chain(config, &mut ctx, Simulate)?,
        Kind::Returns => with_chain(config, &mut ctx, Returns)?,
        Kind::MassProfile => with_chain(config, &mut ctx, MassProfileTask)?,
        Kind::Occupation => with_chain(config, &mut ctx, Occupation)?,
        Kind::SdCheck => with_chain(config, &mut ctx, SdCheck)?,
        Kind::CounterexampleMass => counterexample_mass(config, &mut ctx)?,
        Kind::CounterexampleEmpirical => counterexample_empirical(config, &mut ctx)?,
        Kind::Lyapunov => lyapunov(config, &mut ctx)?,
        Kind::DriftEval => drift_eval(config, &mut ctx)?,
        Kind::DriftCheck => drift_check(config, &mut ctx)?,
        Kind::Equidistribute => equidistribute(config, &mut ctx)?,
    }
    let mut summary = RunSummary {
        kind,
        config_hash: hash,
        wall_time: 0.0,
        checks: ctx.checks,
        stats: ctx.stats,
        artifacts: ctx.writer.written().to_vec(),
    };
    summary.artifacts.push(out.join("summary.txt"));
    summary.wall_time = start.elapsed().as_secs_f64();
    let text = summary.render();
    ctx.writer.write("summary.txt", |b| Ok(b.write_all(text.as_bytes())?))?;
    Ok(summary)
}

struct ChainSetup<K: ChainKernel> {
    kernel: K,
    f: DriftFunction<K::State>,
    x0: K::State,
    /// States of `K = {f <= r0}` used as renewal starts.
    k_states: Vec<K::State>,
    probes: Vec<K::State>,
    /// Increment law outside `K`, when the model has one.
    spec: Option<DriftSpec<f64>>,
}

trait ChainTask {
    fn run<K: ChainKernel>(&self, cfg: &ExperimentConfig, ctx: &mut Ctx, chain: &ChainSetup<K>) -> Result<()>;
}

fn with_chain<T: ChainTask>(cfg: &ExperimentConfig, ctx: &mut Ctx, task: T) -> Result<()> {
    let c = &cfg.chain;
    match c.model {
        Model::Reflected => {
            let law = increment_law(cfg)?;
            if c.x0 < 0.0 || c.x0.fract() != 0.0 {
                return Err(Error::config(format!("chain.x0 must be a non-negative integer, got {}", c.x0)));
            }
            let to_state = |v: f64| v.max(0.0).round() as i64;
            let probes = if cfg.grid.probes.is_empty() {
                (0..=c.x0 as i64).collect()
            } else {
                cfg.grid.probes.iter().map(|&v| to_state(v)).collect()
            };
            let setup = ChainSetup {
                kernel: ReflectedWalk::new(law.clone())?,
                f: DriftFunction::integer_identity(),
                x0: c.x0 as i64,
                k_states: (0..=c.r0.floor().max(0.0) as i64).collect(),
                probes,
                spec: Some(drift_spec(cfg, &law)?),
            };
            task.run(cfg, ctx, &setup)
        }
        Model::Translation => {
            let probes = if cfg.grid.probes.is_empty() { vec![0.0, c.r0, c.x0] } else { cfg.grid.probes.clone() };
            let setup = ChainSetup {
                kernel: Translation::absorbed_at(c.shift, 0.0),
                f: DriftFunction::identity(),
                x0: c.x0,
                k_states: vec![0.0, c.r0.max(0.0)],
                probes,
                spec: Some(drift_spec(cfg, &FiniteDist::point(c.shift))?),
            };
            task.run(cfg, ctx, &setup)
        }
        Model::Lattice => {
            let mu = load_measure(cfg)?;
            let x0 = load_start(cfg, mu.dim())?;
            let params = lattice_params(cfg, &mu, ctx)?;
            let setup = ChainSetup {
                kernel: LatticeWalk::new(mu),
                f: fa_drift_function(params),
                k_states: vec![x0.clone()],
                probes: vec![x0.clone()],
                x0,
                spec: None,
            };
            task.run(cfg, ctx, &setup)
        }
    }
}

fn increment_law(cfg: &ExperimentConfig) -> Result<FiniteDist<f64>> {
    let c = &cfg.chain;
    if c.weights.is_empty() {
        FiniteDist::uniform(&c.increments)
    } else if c.weights.len() == c.increments.len() {
        FiniteDist::new(c.increments.iter().copied().zip(c.weights.iter().copied()))
    } else {
        Err(Error::config("chain.weights must match chain.increments"))
    }
}

fn drift_spec(cfg: &ExperimentConfig, increments: &FiniteDist<f64>) -> Result<DriftSpec<f64>> {
    let c = &cfg.chain;
    let z1 = if c.z1.is_empty() { increments.clone() } else { FiniteDist::uniform(&c.z1)? };
    DriftSpec::from_laws(c.r0, FiniteDist::uniform(&c.z0)?, z1)
}

fn load_measure(cfg: &ExperimentConfig) -> Result<MatrixMeasure<f64>> {
    match &cfg.walk.measure {
        Some(p) => MatrixMeasure::load(p),
        None => MatrixMeasure::elementary_unipotents(cfg.walk.d, cfg.walk.s),
    }
}

fn load_start(cfg: &ExperimentConfig, d: usize) -> Result<LatticeBasis<f64>> {
    let x0 = match &cfg.walk.x0 {
        Some(p) => LatticeBasis::load(p)?,
        None => LatticeBasis::standard(d),
    };
    if x0.dim() != d {
        return Err(Error::config(format!("walk.x0 has d = {}, the measure has d = {d}", x0.dim())));
    }
    Ok(x0)
}

fn exponents(cfg: &ExperimentConfig, mu: &MatrixMeasure<f64>, ctx: &mut Ctx) -> Result<Vec<f64>> {
    let w = &cfg.walk;
    if !w.exponents.is_empty() {
        return Ok(w.exponents.clone());
    }
    let table = ExponentTable::estimate(mu, w.lyapunov_steps, w.lyapunov_trials, derive_seed(cfg.seed, 0x1a))?;
    for (i, e) in &table.rows {
        ctx.stat(&format!("lambda_{i}"), e.estimate);
    }
    Ok(table.exponents())
}

fn lattice_params(cfg: &ExperimentConfig, mu: &MatrixMeasure<f64>, ctx: &mut Ctx) -> Result<QuasiNormParams<f64>> {
    QuasiNormParams::new(mu.dim(), cfg.drift.a, exponents(cfg, mu, ctx)?)
}

fn high_lattices(cfg: &ExperimentConfig, d: usize) -> Result<Vec<LatticeBasis<f64>>> {
    let mut rng = stream(derive_seed(cfg.seed, 0x1b), 0);
    (0..cfg.drift.lattices).map(|_| sample_high_lattice(d, cfg.drift.t_min, cfg.drift.t_max, &mut rng)).collect()
}

struct Simulate;

impl ChainTask for Simulate {
    fn run<K: ChainKernel>(&self, cfg: &ExperimentConfig, ctx: &mut Ctx, ch: &ChainSetup<K>) -> Result<()> {
        let n = cfg.chain.steps;
        let path = crate::chain::simulate(&ch.kernel, &ch.x0, n, cfg.seed);
        let stats = trajectory_stats(&ch.kernel, &ch.f, &ch.x0, n, cfg.seed, &cfg.grid.r, cfg.chain.r0);
        ctx.csv("trajectory.csv", |b| {
            writeln!(b, "k,f")?;
            for (k, x) in path.iter().enumerate() {
                writeln!(b, "{k},{}", fmt17(ch.f.eval(x)))?;
            }
            Ok(())
        })?;
        ctx.csv("occupation.csv", |b| {
            writeln!(b, "r,above")?;
            for (r, a) in stats.thresholds.iter().zip(&stats.above) {
                writeln!(b, "{},{a}", fmt17(*r))?;
            }
            Ok(())
        })?;
        ctx.stat("returns", stats.return_times.len() as f64);
        ctx.stat("terminal", stats.terminal);
        ctx.check("finite", path.iter().all(|x| ch.f.eval(x).is_finite()), format!("{n} steps"));
        Ok(())
    }
}

struct Returns;

impl ChainTask for Returns {
    fn run<K: ChainKernel>(&self, cfg: &ExperimentConfig, ctx: &mut Ctx, ch: &ChainSetup<K>) -> Result<()> {
        let g = &cfg.grid;
        let tail = return_tail_profile(&ch.kernel, &ch.f, cfg.chain.r0, &ch.probes, g.trials, g.horizon, cfg.seed, g.z)?;
        ctx.csv("returns.csv", |b| tail.write_csv(b, ""))?;
        ctx.stat("censored_fraction", tail.censored_fraction);
        if let Some(spec) = &ch.spec {
            let seed = derive_seed(cfg.seed, 0xf0);
            let r = foster_bound_check(&ch.kernel, &ch.f, spec, &ch.x0, g.trials, g.horizon, seed, g.slack, g.z)?;
            ctx.stat("mean_return_time", r.mean);
            ctx.stat("foster_bound", r.bound);
            ctx.check(
                "foster",
                r.pass,
                format!("mean {:.4} +- {:.4} vs f(x0)/lambda1 = {:.4}", r.mean, r.half_width, r.bound),
            );
        }
        Ok(())
    }
}

struct MassProfileTask;

impl ChainTask for MassProfileTask {
    fn run<K: ChainKernel>(&self, cfg: &ExperimentConfig, ctx: &mut Ctx, ch: &ChainSetup<K>) -> Result<()> {
        let g = &cfg.grid;
        let Some(spec) = &ch.spec else {
            for (k, &r) in g.r.iter().enumerate() {
                let p = mass_escape_profile(&ch.kernel, &ch.f, r, &ch.x0, &g.n, g.trials, derive_seed(cfg.seed, k as u64), None, g.z)?;
                ctx.csv(&format!("mass_profile_{k}.csv"), |b| p.write_csv(b, ""))?;
            }
            ctx.check("profiles", true, format!("{} levels", g.r.len()));
            return Ok(());
        };
        let cal = rec_law_calibration(
            &ch.kernel,
            &ch.f,
            spec.r0(),
            &ch.k_states,
            g.alpha,
            g.horizon,
            g.trials,
            derive_seed(cfg.seed, 0xca),
            &g.r,
            g.max_window,
            g.z,
        )?;
        ctx.csv("calibration.csv", |b| {
            writeln!(b, "r,excursion")?;
            for (r, p) in &cal.excursions {
                writeln!(b, "{},{}", fmt17(*r), fmt17(*p))?;
            }
            Ok(())
        })?;
        ctx.stat("window", cal.window as f64);
        ctx.stat("r", cal.r);
        ctx.stat("epsilon", cal.epsilon);
        let bound = Some((cal.epsilon, spec.lambda1()));
        let p = mass_escape_profile(&ch.kernel, &ch.f, cal.r, &ch.x0, &g.n, g.trials, cfg.seed, bound, g.z)?;
        ctx.csv("mass_profile.csv", |b| p.write_csv(b, ""))?;
        let v = p.violations();
        ctx.check("rec_law", v == 0, format!("{v} of {} grid points above the bound at R = {}", p.rows.len(), cal.r));
        Ok(())
    }
}

struct Occupation;

impl ChainTask for Occupation {
    fn run<K: ChainKernel>(&self, cfg: &ExperimentConfig, ctx: &mut Ctx, ch: &ChainSetup<K>) -> Result<()> {
        let steps = if cfg.chain.model == Model::Lattice { cfg.walk.steps } else { cfg.chain.steps };
        let t = occupation_experiment(&ch.kernel, &ch.f, &ch.x0, steps, &cfg.grid.r, cfg.seed)?;
        ctx.csv("occupation.csv", |b| t.write_csv(b, ""))?;
        let found = t.first_below(cfg.grid.alpha);
        if let Some(r) = found {
            ctx.stat("r", r);
        }
        ctx.check(
            "non_escape",
            found.is_some(),
            format!("smallest R with occupation of {{f > R}} below {}: {found:?}", cfg.grid.alpha),
        );
        Ok(())
    }
}

struct SdCheck;

impl ChainTask for SdCheck {
    fn run<K: ChainKernel>(&self, cfg: &ExperimentConfig, ctx: &mut Ctx, ch: &ChainSetup<K>) -> Result<()> {
        let spec = ch.spec.as_ref().ok_or_else(|| Error::config("sd-check needs model reflected or translation"))?;
        let g = &cfg.grid;
        let rep = verify_sd(&ch.kernel, &ch.f, spec, &ch.probes, g.trials, cfg.seed, g.confidence)?;
        ctx.csv("sd_check.csv", |b| {
            writeln!(b, "fx,in_k,escaped,dkw_eps,worst_gap,worst_t,pass")?;
            for p in &rep.probes {
                writeln!(
                    b,
                    "{},{},{},{},{},{},{}",
                    fmt17(p.fx),
                    u8::from(p.in_k),
                    fmt17(p.escaped),
                    fmt17(p.dkw_eps),
                    fmt17(p.worst_gap),
                    fmt17(p.worst_t),
                    u8::from(p.pass)
                )?;
            }
            Ok(())
        })?;
        ctx.stat("lambda1", spec.lambda1());
        let bad = rep.probes.iter().filter(|p| !p.pass).count();
        ctx.check("dominance", rep.pass, format!("{bad} of {} probes fail", rep.probes.len()));
        Ok(())
    }
}

fn counterexample_mass(cfg: &ExperimentConfig, ctx: &mut Ctx) -> Result<()> {
    let s = &cfg.schedule;
    let params = ScheduleParams {
        levels: s.levels,
        first_jump: s.first_jump,
        growth: s.growth,
        min_confidence: s.min_confidence,
        trials: s.trials,
        ..ScheduleParams::default()
    };
    let schedule = MassEscapeSchedule::greedy(&params, derive_seed(cfg.seed, 0x5c))?;
    ctx.csv("schedule.csv", |b| schedule.write_csv(b, ""))?;
    let chain = build_mass_escape_chain(schedule);
    let rep = demonstrate_mass_escape(&chain, s.r, s.demo_trials, cfg.seed, cfg.grid.z)?;
    ctx.csv("checkpoints.csv", |b| rep.write_csv(b, ""))?;
    for row in &rep.rows {
        ctx.stat(&format!("estimate_{}", row.i), row.estimate);
        ctx.stat(&format!("analytic_{}", row.i), row.analytic);
    }
    let consistent = rep.rows.iter().all(|r| r.consistent);
    ctx.check("analytic", consistent && !rep.rows.is_empty(), format!("{} checkpoints", rep.rows.len()));
    ctx.check("escape", rep.first_escape.is_some(), format!("first checkpoint with P(X > R) >= 1/2: {:?}", rep.first_escape));
    Ok(())
}

fn counterexample_empirical(cfg: &ExperimentConfig, ctx: &mut Ctx) -> Result<()> {
    let e = &cfg.empirical;
    let rep = demonstrate_empirical_escape(e.epsilon, e.r, e.horizon, e.trials, cfg.seed)?;
    ctx.csv("empirical.csv", |b| rep.write_csv(b, ""))?;
    ctx.stat("found_fraction", rep.found_fraction);
    ctx.stat("divergence", rep.divergence);
    ctx.check(
        "sparse_time",
        rep.found_fraction >= e.min_found,
        format!("found in {:.4} of trajectories, need {}", rep.found_fraction, e.min_found),
    );
    Ok(())
}

fn lyapunov(cfg: &ExperimentConfig, ctx: &mut Ctx) -> Result<()> {
    let mu = load_measure(cfg)?;
    let w = &cfg.walk;
    let table = ExponentTable::estimate(&mu, w.lyapunov_steps, w.lyapunov_trials, derive_seed(cfg.seed, 0x1a))?;
    ctx.csv("exponents.csv", |b| table.write_csv(b, ""))?;
    for (i, e) in &table.rows {
        ctx.stat(&format!("lambda_{i}"), e.estimate);
    }
    let positive = table.rows.iter().all(|(_, e)| e.estimate - e.ci > 0.0);
    ctx.check("positive", positive, "every exponent above its confidence band".into());
    if mu.is_symmetric() {
        let ratio = table.duality_ratio();
        ctx.stat("duality_ratio", ratio);
        ctx.check("duality", ratio <= cfg.grid.z, format!("|lambda_i - lambda_(d-i)| / ci = {ratio:.4}"));
    }
    Ok(())
}

fn drift_eval(cfg: &ExperimentConfig, ctx: &mut Ctx) -> Result<()> {
    let mu = load_measure(cfg)?;
    let params = lattice_params(cfg, &mu, ctx)?;
    let x0 = load_start(cfg, mu.dim())?;
    ctx.stat("f_a_x0", f_a(&x0, &params)?.value);
    ctx.stat("variation_constant", variation_constant(&params));
    let lattices = high_lattices(cfg, mu.dim())?;
    let values = lattices.iter().map(|x| f_a(x, &params)).collect::<Result<Vec<_>>>()?;
    ctx.csv("drift.csv", |b| {
        writeln!(b, "index,log_first_minimum,f_a,rank")?;
        for (k, (x, v)) in lattices.iter().zip(&values).enumerate() {
            let rank = v.maximizer.as_ref().map_or(0, |s| s.rank());
            writeln!(b, "{k},{},{},{rank}", fmt17(x.first_minimum()?.ln()), fmt17(v.value))?;
        }
        Ok(())
    })?;
    let above = values.iter().filter(|v| v.value > cfg.drift.a0).count();
    ctx.stat("above_a0", above as f64);
    ctx.check("finite", values.iter().all(|v| v.value.is_finite()), format!("{} lattices", values.len()));
    Ok(())
}

fn drift_check(cfg: &ExperimentConfig, ctx: &mut Ctx) -> Result<()> {
    let mu = load_measure(cfg)?;
    let dr = &cfg.drift;
    let base = lattice_params(cfg, &mu, ctx)?;
    let lattices = high_lattices(cfg, mu.dim())?;
    let cal = calibrate_uniqueness(&base, dr.a0, dr.a, &lattices, 1, 10)?;
    ctx.csv("calibration.csv", |b| {
        writeln!(b, "a,tested,violations")?;
        for s in &cal.log {
            writeln!(b, "{},{},{}", fmt17(s.a), s.tested, s.violations)?;
        }
        Ok(())
    })?;
    ctx.stat("a", cal.a);
    let last = cal.log.last().expect("calibration logs every step");
    ctx.check("uniqueness", last.violations == 0, format!("A = {}, {} lattices tested", cal.a, last.tested));

    let params = base.with_a(cal.a)?;
    let dec = check_probable_decrease(&mu, &params, dr.n, &lattices, dr.a0, dr.lambda, dr.trials, cfg.seed)?;
    ctx.csv("decrease.csv", |b| {
        writeln!(b, "index,f_before,fraction,mean_change")?;
        for (k, r) in dec.rows.iter().enumerate().filter(|(_, r)| !r.skipped) {
            writeln!(b, "{k},{},{},{}", fmt17(r.f_before), fmt17(r.fraction), fmt17(r.mean_change))?;
        }
        Ok(())
    })?;
    ctx.stat("lambda", dec.lambda);
    ctx.stat("tested", dec.tested() as f64);
    let min = dec.min_fraction();
    ctx.check(
        "decrease",
        dec.tested() > 0 && min.is_some_and(|m| m >= dr.min_fraction),
        format!("{} lattices above A0, min fraction {min:?}, need {}", dec.tested(), dr.min_fraction),
    );

    let var = check_variation(&mu, &params, dr.m, &lattices, dr.variation_samples, derive_seed(cfg.seed, 0x7a))?;
    ctx.stat("variation_pairs", var.pairs as f64);
    ctx.stat("variation_worst_excess", var.worst_excess);
    ctx.check("variation", var.violations == 0, format!("{} violations in {} pairs", var.violations, var.pairs));
    Ok(())
}

fn equidistribute(cfg: &ExperimentConfig, ctx: &mut Ctx) -> Result<()> {
    let mu = load_measure(cfg)?;
    let x0 = load_start(cfg, mu.dim())?;
    let e = &cfg.equidistribution;
    let rep = siegel_equidistribution(&mu, &x0, e.steps, e.radius, e.trials, cfg.seed)?;
    ctx.csv("equidistribution.csv", |b| rep.write_csv(b, ""))?;
    ctx.stat("average", rep.average);
    ctx.stat("reference", rep.reference);
    ctx.stat("relative_error", rep.relative_error);
    ctx.check(
        "siegel",
        rep.relative_error <= e.tolerance,
        format!("average {:.5} vs {:.5}, relative error {:.4}", rep.average, rep.reference, rep.relative_error),
    );
    Ok(())
}
