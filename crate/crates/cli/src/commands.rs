//! Subcommand implementations.

use std::f64::consts::PI;
use std::path::PathBuf;
use std::sync::Arc;

use peaklab::field::{field_catalog, GridField, ScalarField, SharedField};
use peaklab::geometry::{Domain, DomainSpec};
use peaklab::nonlinearity::{check_hypothesis_a, law_catalog, recover_f_from_radial, SharedLaw};
use peaklab::pohozaev::{
    audit_identity, ledger, ledger_catalog, refinement_ledgers, saddle_exclusion_test, IdentityAudit, LedgerInput,
    PohozaevLedger, PohozaevParams, SaddleExclusionReport, Side,
};
use peaklab::solver::{solver_catalog, BoundaryCondition, SolveOutcome, SolveRequest, SolverError};
use peaklab::topology::{
    analyze_critical_points, check_extremum_signs, check_level_disjointness, check_sign_change_curve, euler_count,
    extract_level_set, write_level_csv, CriticalKind, CriticalPoint, LevelComponent, Probe, TopologyParams,
};
use peaklab::verify::{check_neumann_constraint, uniqueness_check, verify_example1, VerificationReport};
use peaklab::Point;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Map, Value};

use crate::config::{Config, Format};
use crate::svg::{render_svg, Overlays};
use crate::{analysis, config_error, Artifacts, Cli, CliError, Command, Outcome};

const SVG_CELLS: usize = 96;

pub fn dispatch(cli: &Cli, cfg: &Config) -> Result<Outcome, CliError> {
    let dir = cfg.output.dir.clone().unwrap_or_else(|| PathBuf::from("peaklab-out"));
    let name = cli.command.name();
    if let Command::Catalog = cli.command {
        return Ok(catalog());
    }
    let mut art = Artifacts::new(&dir, name, cfg, cli.seed)?;
    let mut outcome = match &cli.command {
        Command::Solve => solve_cmd(cfg, &mut art)?,
        Command::Classify(f) => classify_cmd(cfg, f.field.as_deref(), &mut art)?,
        Command::Levels { field, t } => levels_cmd(cfg, field.field.as_deref(), t, &mut art)?,
        Command::Pohozaev {
            field,
            p,
            delta,
            side,
            path,
        } => pohozaev_cmd(cfg, field.field.as_deref(), p.as_deref(), delta, side.as_deref(), path.as_deref(), &mut art)?,
        Command::Hypothesis {
            family,
            m,
            a,
            c,
            lambda,
            value,
            lo,
            hi,
        } => {
            let mut params = Map::new();
            for (k, v) in [("m", m), ("a", a), ("c", c), ("lambda", lambda), ("value", value)] {
                if let Some(v) = v {
                    params.insert(k.into(), json!(v));
                }
            }
            hypothesis_cmd(cfg, family.as_deref(), Value::Object(params), (*lo, *hi), &mut art)?
        }
        Command::VerifyExample1 { radius } => verify_cmd(cfg, *radius, cli.junit, &mut art)?,
        Command::Audit(f) => audit_cmd(cfg, f.field.as_deref(), cli.seed, cli.junit, &mut art)?,
        Command::Catalog => unreachable!(),
    };
    for p in &art.written {
        outcome.lines.push(format!("wrote {}", p.display()));
    }
    Ok(outcome)
}

fn catalog() -> Outcome {
    let mut lines = Vec::new();
    let mut section = |title: &str, items: Vec<(&'static str, &'static str)>| {
        lines.push(format!("{title}:"));
        for (n, s) in items {
            lines.push(format!("  {n:<18} {s}"));
        }
    };
    section("fields", field_catalog().summaries().collect());
    section("nonlinearities", law_catalog().summaries().collect());
    section("solvers", solver_catalog().summaries().collect());
    section("ledger paths", ledger_catalog().summaries().collect());
    Outcome { pass: true, lines }
}

/// Domain a catalog field is usually studied on.
fn natural_domain(name: &str, params: &Value) -> DomainSpec {
    let disk = |r: f64| DomainSpec::Disk {
        center: [0.0, 0.0],
        radius: r,
    };
    match name {
        "coscos" => {
            let k = params.get("k").and_then(Value::as_f64).unwrap_or(1.0).abs().max(1e-12);
            DomainSpec::Rectangle {
                lo: [0.0, 0.0],
                hi: [2.0 * PI / k, 2.0 * PI / k],
            }
        }
        "saddle_xy" | "cubic_saddle" => DomainSpec::Rectangle {
            lo: [-1.0, -1.0],
            hi: [1.0, 1.0],
        },
        "example1" => disk(2.0),
        _ => disk(1.0),
    }
}

/// Field, domain and law for a run; the field is solved for when no source
/// is given.
pub struct Problem {
    pub domain: Domain,
    pub field: SharedField,
    pub law: Option<SharedLaw>,
    pub solved: Option<SolveOutcome>,
    pub source: String,
}

pub fn build_problem(cfg: &Config, field_flag: Option<&str>) -> Result<Problem, CliError> {
    let spec = match field_flag {
        Some(s) => Some((s.to_string(), cfg.field.as_ref().map(|f| f.params.clone()).unwrap_or(json!({})))),
        None => cfg.field.as_ref().map(|f| (f.source.clone(), f.params.clone())),
    };
    match spec {
        Some((source, params)) => {
            let (field, domain) = if let Some(name) = source.strip_prefix("catalog:") {
                let spec = cfg.domain.clone().unwrap_or_else(|| natural_domain(name, &params));
                let domain = Domain::from_spec(&spec).map_err(config_error)?;
                (field_catalog().build(name, &params).map_err(config_error)?, domain)
            } else if let Some(path) = source.strip_prefix("csv:") {
                let spec = cfg.domain.clone().ok_or_else(|| config_error("a csv field needs a domain"))?;
                let domain = Domain::from_spec(&spec).map_err(config_error)?;
                let file = std::fs::File::open(path).map_err(|e| config_error(format!("{path}: {e}")))?;
                let grid = GridField::read_csv(file, domain.clone()).map_err(config_error)?;
                (Arc::new(grid) as SharedField, domain)
            } else {
                return Err(config_error(format!("field source must start with catalog: or csv:, got '{source}'")));
            };
            let law = build_law(cfg, Some(field.as_ref()), &domain)?;
            Ok(Problem {
                domain,
                field,
                law,
                solved: None,
                source,
            })
        }
        None => {
            let spec = cfg.domain.clone().unwrap_or(DomainSpec::Disk {
                center: [0.0, 0.0],
                radius: 1.0,
            });
            let domain = Domain::from_spec(&spec).map_err(config_error)?;
            let law = build_law(cfg, None, &domain)?
                .ok_or_else(|| config_error("no field given and no nonlinearity to solve with"))?;
            let out = solve(cfg, &domain, &law)?;
            Ok(Problem {
                domain,
                field: out.field.clone(),
                law: Some(law),
                source: format!("solved:{}", out.log.solver),
                solved: Some(out),
            })
        }
    }
}

fn build_law(cfg: &Config, field: Option<&dyn ScalarField>, domain: &Domain) -> Result<Option<SharedLaw>, CliError> {
    let Some(nl) = &cfg.nonlinearity else {
        return Ok(None);
    };
    let family = nl.get("family").and_then(Value::as_str).unwrap_or("");
    if family == "recovered" {
        let radial = field.and_then(|f| f.radial());
        let (Some((center, profile)), Some((dc, r))) = (radial, domain.as_disk()) else {
            return Err(config_error("the recovered law needs a radial field on a disk"));
        };
        if (center - dc).norm() > 1e-12 * r {
            return Err(config_error("the recovered law needs the disk centred at the field's centre"));
        }
        let rec = recover_f_from_radial(profile, (0.0, r)).map_err(config_error)?;
        if !rec.autonomous {
            log::warn!("-Δu is not a single-valued function of u on this disk; using the first branch");
        }
        return Ok(Some(Arc::new(rec.law) as SharedLaw));
    }
    law_catalog().build(family, nl).map(Some).map_err(config_error)
}

fn solve(cfg: &Config, domain: &Domain, law: &SharedLaw) -> Result<SolveOutcome, CliError> {
    let solver = solver_catalog().build(&cfg.solver.method, &json!({})).map_err(config_error)?;
    let req = SolveRequest {
        domain: domain.clone(),
        law: law.clone(),
        bc: cfg.boundary,
        n: cfg.grid.n,
        params: cfg.solver.params.clone(),
        initial: None,
        center_guess: cfg.solver.center_guess,
    };
    solver.solve(&req).map_err(|e| match e {
        SolverError::InvalidParams(m) => CliError::Config(m),
        SolverError::NotADisk => CliError::Config(e.to_string()),
        e => CliError::Solver(e),
    })
}

fn topology_params(cfg: &Config) -> TopologyParams {
    TopologyParams {
        n: cfg.grid.n,
        tau_g: cfg.analysis.tau_g,
        deltas: cfg.analysis.deltas.clone(),
        ring_samples: cfg.analysis.ring_samples,
    }
}

fn csv_bytes(f: impl FnOnce(&mut Vec<u8>) -> Result<(), CliError>) -> Result<Vec<u8>, CliError> {
    let mut buf = Vec::new();
    f(&mut buf)?;
    Ok(buf)
}

fn grid_csv(grid: &GridField) -> Result<Vec<u8>, CliError> {
    csv_bytes(|b| grid.write_csv(b).map_err(analysis))
}

fn solve_cmd(cfg: &Config, art: &mut Artifacts) -> Result<Outcome, CliError> {
    let problem = build_problem(cfg, None)?;
    let out = problem.solved.as_ref().expect("solve always solves");
    let (lo, hi) = out
        .grid
        .values()
        .iter()
        .filter(|v| v.is_finite())
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(*v), b.max(*v)));
    if cfg.wants(Format::Csv) {
        art.bytes("solution.csv", &grid_csv(&out.grid)?)?;
    }
    if cfg.wants(Format::Json) {
        art.json(
            "convergence.json",
            &json!({"log": out.log, "h": out.grid.lattice().h, "min_u": lo, "max_u": hi}),
        )?;
    }
    if cfg.wants(Format::Svg) {
        art.bytes("solution.svg", render_svg(out.field.as_ref(), &problem.domain, SVG_CELLS, &Overlays::default()).as_bytes())?;
    }
    Ok(Outcome {
        pass: true,
        lines: vec![format!(
            "solved with {} in {} iterations, residual {:e}, u in [{lo:.6}, {hi:.6}]",
            out.log.solver,
            out.log.iterates.len(),
            out.log.final_residual
        )],
    })
}

#[derive(Serialize)]
struct Classification {
    source: String,
    h: f64,
    tau_g: f64,
    points: Vec<CriticalPoint>,
    critical_components: Vec<LevelComponent>,
    euler: peaklab::topology::EulerCount,
    extremum_signs: Option<Vec<peaklab::topology::ExtremumSignVerdict>>,
    disjointness: peaklab::topology::DisjointnessReport,
    pass: bool,
}

fn classify(problem: &Problem, tp: &TopologyParams) -> Result<Classification, CliError> {
    let probe = Probe::from_params(problem.field.as_ref(), &problem.domain, tp).map_err(analysis)?;
    let (points, comps) = analyze_critical_points(&probe, tp).map_err(analysis)?;
    let signs = problem
        .law
        .as_ref()
        .map(|law| check_extremum_signs(problem.field.as_ref(), law.as_ref(), &points));
    let disjointness = check_level_disjointness(&comps, probe.h());
    let pass = signs.iter().flatten().all(|v| v.pass != Some(false)) && disjointness.pass;
    Ok(Classification {
        source: problem.source.clone(),
        h: probe.h(),
        tau_g: probe.tau_g(tp),
        euler: euler_count(&points),
        points,
        critical_components: comps,
        extremum_signs: signs,
        disjointness,
        pass,
    })
}

fn count_line(c: &Classification) -> String {
    format!(
        "{} critical points: {} max, {} min, {} saddle, {} non-isolated components",
        c.points.len(),
        c.euler.maxima,
        c.euler.minima,
        c.euler.saddles,
        c.critical_components.len()
    )
}

fn classify_cmd(cfg: &Config, field: Option<&str>, art: &mut Artifacts) -> Result<Outcome, CliError> {
    let problem = build_problem(cfg, field)?;
    let tp = topology_params(cfg);
    let c = classify(&problem, &tp)?;
    if cfg.wants(Format::Json) {
        art.json("critical_points.json", &c)?;
    }
    if cfg.wants(Format::Svg) {
        let overlays = Overlays {
            contours: &c.critical_components,
            critical: &c.points,
            ..Default::default()
        };
        art.bytes(
            "critical_points.svg",
            render_svg(problem.field.as_ref(), &problem.domain, SVG_CELLS, &overlays).as_bytes(),
        )?;
    }
    Ok(Outcome {
        pass: c.pass,
        lines: vec![count_line(&c)],
    })
}

fn auto_levels(cfg: &Config, probe: &Probe) -> Vec<f64> {
    if !cfg.analysis.levels.is_empty() {
        return cfg.analysis.levels.clone();
    }
    let (lo, hi) = probe.range();
    let k = cfg.analysis.level_count;
    (0..k).map(|i| lo + (i as f64 + 0.5) / k as f64 * (hi - lo)).collect()
}

fn level_sets(probe: &Probe, levels: &[f64]) -> Result<Vec<LevelComponent>, CliError> {
    let per_level: Vec<Vec<LevelComponent>> = levels
        .par_iter()
        .map(|&t| extract_level_set(probe, t))
        .collect::<Result<_, _>>()
        .map_err(analysis)?;
    Ok(per_level.into_iter().flatten().collect())
}

#[derive(Serialize)]
struct LevelSummary {
    level: f64,
    components: usize,
    closed: usize,
    touching_boundary: usize,
    singletons: usize,
    critical: usize,
    total_length: f64,
}

fn summarize_levels(levels: &[f64], comps: &[LevelComponent]) -> Vec<LevelSummary> {
    levels
        .iter()
        .map(|&t| {
            let cs: Vec<&LevelComponent> = comps.iter().filter(|c| c.level == t).collect();
            LevelSummary {
                level: t,
                components: cs.len(),
                closed: cs.iter().filter(|c| c.closed).count(),
                touching_boundary: cs.iter().filter(|c| c.touches_boundary).count(),
                singletons: cs.iter().filter(|c| c.singleton).count(),
                critical: cs.iter().filter(|c| c.critical).count(),
                total_length: cs.iter().map(|c| c.length).sum(),
            }
        })
        .collect()
}

fn levels_cmd(cfg: &Config, field: Option<&str>, t: &[f64], art: &mut Artifacts) -> Result<Outcome, CliError> {
    let problem = build_problem(cfg, field)?;
    let tp = topology_params(cfg);
    let probe = Probe::from_params(problem.field.as_ref(), &problem.domain, &tp).map_err(analysis)?;
    let levels = if t.is_empty() { auto_levels(cfg, &probe) } else { t.to_vec() };
    let comps = level_sets(&probe, &levels)?;
    let summary = summarize_levels(&levels, &comps);
    if cfg.wants(Format::Csv) {
        art.bytes("levels.csv", &csv_bytes(|b| write_level_csv(&comps, b).map_err(analysis))?)?;
    }
    if cfg.wants(Format::Json) {
        art.json("levels.json", &json!({"source": problem.source, "h": probe.h(), "levels": summary}))?;
    }
    if cfg.wants(Format::Svg) {
        let overlays = Overlays {
            contours: &comps,
            ..Default::default()
        };
        art.bytes(
            "levels.svg",
            render_svg(problem.field.as_ref(), &problem.domain, SVG_CELLS, &overlays).as_bytes(),
        )?;
    }
    let lines = summary
        .iter()
        .map(|s| format!("level {:.6}: {} components", s.level, s.components))
        .collect();
    Ok(Outcome { pass: true, lines })
}

fn parse_point(s: &str) -> Result<[f64; 2], CliError> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    match parts.as_slice() {
        [x, y] => match (x.parse(), y.parse()) {
            (Ok(x), Ok(y)) => Ok([x, y]),
            _ => Err(config_error(format!("point '{s}' is not x,y"))),
        },
        _ => Err(config_error(format!("point '{s}' is not x,y"))),
    }
}

fn parse_side(s: &str) -> Result<Side, CliError> {
    serde_json::from_value(json!(s)).map_err(|_| config_error(format!("side must be plus, minus or whole, got '{s}'")))
}

#[derive(Serialize)]
struct LedgerEntry {
    p: [f64; 2],
    delta: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    ledger: Option<PohozaevLedger>,
    #[serde(skip_serializing_if = "Option::is_none")]
    refinement: Option<IdentityAudit>,
    #[serde(skip_serializing_if = "Option::is_none")]
    error: Option<String>,
}

impl LedgerEntry {
    fn oracle_ok(&self) -> bool {
        self.ledger.as_ref().is_some_and(|l| l.verdicts.oracle_identity)
    }
}

struct LedgerJob<'a> {
    problem: &'a Problem,
    law: &'a SharedLaw,
    side: Side,
    path: Option<&'a str>,
    params: PohozaevParams,
    refine: bool,
}

fn run_ledger(job: &LedgerJob, p: [f64; 2], delta: f64) -> Result<LedgerEntry, CliError> {
    let input = LedgerInput {
        field: job.problem.field.as_ref(),
        law: job.law.as_ref(),
        domain: &job.problem.domain,
        p: Point::new(p[0], p[1]),
        delta,
        side: job.side,
        params: &job.params,
    };
    let path = match job.path {
        Some(name) => Some(ledger_catalog().build(name, &Value::Null).map_err(config_error)?),
        None => None,
    };
    let result = match &path {
        Some(path) => path.ledger(&input),
        None => ledger(&input),
    };
    let mut entry = LedgerEntry {
        p,
        delta,
        ledger: None,
        refinement: None,
        error: None,
    };
    match result {
        Ok(l) => {
            if job.refine && l.path == "grid" && job.problem.field.is_analytic() {
                let grid = ledger_catalog().build("grid", &Value::Null).map_err(config_error)?;
                let base = (job.params.n / 4).max(16);
                match refinement_ledgers(grid.as_ref(), &input, base) {
                    Ok(ls) => entry.refinement = Some(audit_identity(&ls)),
                    Err(e) => entry.error = Some(format!("refinement: {e}")),
                }
            } else if job.refine {
                entry.refinement = Some(audit_identity(std::slice::from_ref(&l)));
            }
            entry.ledger = Some(l);
        }
        Err(e) => entry.error = Some(e.to_string()),
    }
    Ok(entry)
}

fn refinement_csv(entries: &[LedgerEntry]) -> Result<Vec<u8>, CliError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record([
        "p_x",
        "p_y",
        "delta",
        "path",
        "h",
        "V_E",
        "residual_printed",
        "residual_oracle",
        "printed_minus_energy",
        "green_residual",
    ])
    .map_err(analysis)?;
    for e in entries {
        let Some(audit) = &e.refinement else { continue };
        for r in &audit.rows {
            w.write_record([
                format!("{:.6}", e.p[0]),
                format!("{:.6}", e.p[1]),
                format!("{}", e.delta),
                audit.path.clone(),
                r.h.map(|h| format!("{h:e}")).unwrap_or_default(),
                format!("{:e}", r.energy),
                format!("{:e}", r.residual_printed),
                format!("{:e}", r.residual_oracle),
                format!("{:e}", r.printed_minus_energy),
                format!("{:e}", r.green_residual),
            ])
            .map_err(analysis)?;
        }
    }
    w.into_inner().map_err(analysis)
}

fn ball_defaults(cfg: &Config, domain: &Domain) -> (Vec<[f64; 2]>, Vec<f64>) {
    let (lo, hi) = domain.bbox();
    let points = if cfg.analysis.ledger.points.is_empty() {
        vec![[0.5 * (lo.x + hi.x), 0.5 * (lo.y + hi.y)]]
    } else {
        cfg.analysis.ledger.points.clone()
    };
    let deltas = if cfg.analysis.ledger.deltas.is_empty() {
        vec![0.25 * domain.diameter()]
    } else {
        cfg.analysis.ledger.deltas.clone()
    };
    (points, deltas)
}

fn pohozaev_params(cfg: &Config) -> PohozaevParams {
    PohozaevParams {
        n: cfg.analysis.ledger.n,
        tau_g: cfg.analysis.tau_g,
        arc_vertices: cfg.analysis.ledger.arc_vertices,
    }
}

fn pohozaev_cmd(
    cfg: &Config,
    field: Option<&str>,
    p: Option<&str>,
    delta: &[f64],
    side: Option<&str>,
    path: Option<&str>,
    art: &mut Artifacts,
) -> Result<Outcome, CliError> {
    let problem = build_problem(cfg, field)?;
    let law = problem
        .law
        .clone()
        .ok_or_else(|| config_error("the ledger needs a nonlinearity"))?;
    let (mut points, mut deltas) = ball_defaults(cfg, &problem.domain);
    if let Some(p) = p {
        points = vec![parse_point(p)?];
    }
    if !delta.is_empty() {
        deltas = delta.to_vec();
    }
    let side = match side {
        Some(s) => parse_side(s)?,
        None => cfg.analysis.ledger.side,
    };
    let job = LedgerJob {
        problem: &problem,
        law: &law,
        side,
        path: path.or(cfg.analysis.ledger.path.as_deref()),
        params: pohozaev_params(cfg),
        refine: cfg.analysis.ledger.refine,
    };
    let pairs: Vec<([f64; 2], f64)> = points.iter().flat_map(|p| deltas.iter().map(move |d| (*p, *d))).collect();
    let entries: Vec<LedgerEntry> = pairs
        .par_iter()
        .map(|(p, d)| run_ledger(&job, *p, *d))
        .collect::<Result<_, _>>()?;
    let pass = entries.iter().all(LedgerEntry::oracle_ok);
    if cfg.wants(Format::Json) {
        art.json("pohozaev.json", &json!({"source": problem.source, "entries": entries}))?;
    }
    if cfg.wants(Format::Csv) {
        art.bytes("pohozaev_refinement.csv", &refinement_csv(&entries)?)?;
    }
    let lines = entries
        .iter()
        .map(|e| match (&e.ledger, &e.error) {
            (Some(l), _) => format!(
                "p = ({:.6}, {:.6}), delta = {}: {} path, V_E = {:.9}, oracle residual {:e}, printed residual {:e}",
                e.p[0], e.p[1], e.delta, l.path, l.volume.energy, l.residual_oracle, l.residual_printed
            ),
            (None, Some(err)) => format!("p = ({:.6}, {:.6}), delta = {}: {err}", e.p[0], e.p[1], e.delta),
            _ => String::new(),
        })
        .collect();
    Ok(Outcome { pass, lines })
}

fn hypothesis_cmd(
    cfg: &Config,
    family: Option<&str>,
    params: Value,
    (lo, hi): (Option<f64>, Option<f64>),
    art: &mut Artifacts,
) -> Result<Outcome, CliError> {
    let law: SharedLaw = match family {
        Some(f) => law_catalog().build(f, &params).map_err(config_error)?,
        None => {
            let domain = Domain::from_spec(&cfg.domain.clone().unwrap_or(DomainSpec::Disk {
                center: [0.0, 0.0],
                radius: 1.0,
            }))
            .map_err(config_error)?;
            build_law(cfg, None, &domain)?.ok_or_else(|| config_error("give --family or a nonlinearity in the config"))?
        }
    };
    let [clo, chi] = cfg.analysis.hypothesis_interval.unwrap_or([0.0, 1.0]);
    let interval = (lo.unwrap_or(clo), hi.unwrap_or(chi));
    if !(interval.0 < interval.1) {
        return Err(config_error("interval must satisfy lo < hi"));
    }
    let report = check_hypothesis_a(law.as_ref(), interval, 1000).map_err(config_error)?;
    if cfg.wants(Format::Json) {
        art.json("hypothesis.json", &json!({"family": law.family(), "params": law.params(), "interval": interval, "report": report}))?;
    }
    let pass = report.verdict.overall;
    Ok(Outcome {
        pass,
        lines: vec![format!(
            "{} {} on ({}, {}]: {} (min A = {:e}, min f' = {:e})",
            law.family(),
            law.params(),
            interval.0,
            interval.1,
            if pass { "holds" } else { "fails" },
            report.min_a,
            report.min_fprime
        )],
    })
}

fn report_lines(r: &VerificationReport) -> Vec<String> {
    let mut lines: Vec<String> = r
        .checks
        .iter()
        .map(|c| format!("{} {}: {}", if c.pass { "PASS" } else { "FAIL" }, c.name, c.anchor))
        .collect();
    lines.extend(r.notes.iter().map(|n| format!("note: {n}")));
    lines
}

fn verify_cmd(cfg: &Config, radius: f64, junit: bool, art: &mut Artifacts) -> Result<Outcome, CliError> {
    let report = verify_example1(radius, cfg.grid.n).map_err(|e| match e {
        peaklab::verify::VerifyError::InvalidRadius(_) => config_error(e),
        e => analysis(e),
    })?;
    if cfg.wants(Format::Json) {
        art.json("verification.json", &report)?;
    }
    if junit {
        art.bytes("junit.xml", report.to_junit().as_bytes())?;
    }
    Ok(Outcome {
        pass: report.overall,
        lines: report_lines(&report),
    })
}

/// `count` points drawn uniformly from the domain interior.
fn sample_points(domain: &Domain, count: usize, seed: u64) -> Vec<[f64; 2]> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (lo, hi) = domain.bbox();
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let x = Point::new(rng.gen_range(lo.x..hi.x), rng.gen_range(lo.y..hi.y));
        if domain.signed_distance(x) < 0.0 {
            out.push([x.x, x.y]);
        }
    }
    out
}

fn audit_cmd(cfg: &Config, field: Option<&str>, seed: u64, junit: bool, art: &mut Artifacts) -> Result<Outcome, CliError> {
    let problem = build_problem(cfg, field)?;
    let tp = topology_params(cfg);
    let field = problem.field.as_ref();
    let domain = &problem.domain;
    let classification = classify(&problem, &tp)?;
    let probe = Probe::from_params(field, domain, &tp).map_err(analysis)?;
    let (m, big_m) = probe.range();
    let mut report = VerificationReport::new(format!("audit:{}", problem.source));
    let mut sections = Map::new();

    let check = |name: &str, anchor: &str, expected: &str, observed: Value, pass: bool| peaklab::verify::Check {
        name: name.into(),
        anchor: anchor.into(),
        expected: expected.into(),
        observed,
        tolerance: None,
        pass,
    };
    report.push(check(
        "extremum_signs",
        "f(u) >= 0 at maxima and <= 0 at minima",
        "no violations",
        serde_json::to_value(&classification.extremum_signs).map_err(analysis)?,
        classification.extremum_signs.iter().flatten().all(|v| v.pass != Some(false)),
    ));
    report.push(check(
        "level_disjointness",
        "distinct critical components do not meet",
        "no close pairs or crossings",
        json!({"components": classification.disjointness.components, "min_separation": classification.disjointness.min_separation}),
        classification.disjointness.pass,
    ));

    if let Some(law) = &problem.law {
        let law = law.as_ref();
        match check_sign_change_curve(&probe, law, probe.tau_g(&tp)) {
            Ok(r) => {
                sections.insert("sign_change_curve".into(), serde_json::to_value(&r).map_err(analysis)?);
            }
            Err(e) => {
                sections.insert("sign_change_curve".into(), json!({"error": e.to_string()}));
            }
        }
        let interval = match cfg.analysis.hypothesis_interval {
            Some([a, b]) => Some((a, b)),
            None if big_m > 0.0 => Some((m.max(0.0), big_m)),
            None => None,
        };
        if let Some(iv) = interval.filter(|iv| iv.0 < iv.1) {
            match check_hypothesis_a(law, iv, 1000) {
                Ok(h) => sections.insert("hypothesis".into(), json!({"interval": iv, "report": h})),
                Err(e) => sections.insert("hypothesis".into(), json!({"interval": iv, "error": e.to_string()})),
            };
        }
    }

    if cfg.boundary == BoundaryCondition::Dirichlet {
        let u = uniqueness_check(field, problem.law.as_deref(), domain, &tp).map_err(analysis)?;
        let preconditions_hold = u.preconditions.iter().all(|p| p.holds == Some(true));
        report.push(check(
            "single_maximum",
            "a positive solution with f(0) >= 0 and the growth condition has one maximum and no other critical points",
            "consistent whenever the preconditions hold",
            json!({"counts": u.counts, "consistent": u.consistent, "preconditions_hold": preconditions_hold}),
            u.consistent || !preconditions_hold,
        ));
        sections.insert("uniqueness".into(), serde_json::to_value(&u).map_err(analysis)?);
    } else if let Some(law) = &problem.law {
        let tol = problem.solved.as_ref().map(|s| s.log.final_residual.max(1e-12));
        let c = check_neumann_constraint(field, law.as_ref(), domain, cfg.grid.n, tol).map_err(analysis)?;
        report.push(check(
            "neumann_constraint",
            "the integral of f(u) vanishes for Neumann solutions",
            "|integral| < tolerance",
            serde_json::to_value(&c).map_err(analysis)?,
            c.pass,
        ));
    }

    let mut entries = Vec::new();
    let mut saddles = Vec::new();
    let mut balls = Vec::new();
    if let Some(law) = &problem.law {
        let (mut points, deltas) = ball_defaults(cfg, domain);
        points.extend(sample_points(domain, cfg.analysis.ledger.random_points, seed));
        let job = LedgerJob {
            problem: &problem,
            law,
            side: cfg.analysis.ledger.side,
            path: cfg.analysis.ledger.path.as_deref(),
            params: pohozaev_params(cfg),
            refine: false,
        };
        let pairs: Vec<([f64; 2], f64)> = points.iter().flat_map(|p| deltas.iter().map(move |d| (*p, *d))).collect();
        entries = pairs
            .par_iter()
            .map(|(p, d)| run_ledger(&job, *p, *d))
            .collect::<Result<Vec<_>, _>>()?;
        let computed: Vec<&LedgerEntry> = entries.iter().filter(|e| e.ledger.is_some()).collect();
        report.push(check(
            "ledger_oracle_identity",
            "the integral identity on balls closes to quadrature accuracy",
            "every computed ledger closes",
            json!({"ledgers": entries.len(), "computed": computed.len()}),
            computed.iter().all(|e| e.oracle_ok()),
        ));
        balls = pairs.iter().map(|(p, d)| (Point::new(p[0], p[1]), *d)).collect();
        let delta = deltas[0];
        for s in classification
            .points
            .iter()
            .filter(|c| c.kind == Some(CriticalKind::Saddle) && !c.on_boundary)
        {
            let r: Result<SaddleExclusionReport, _> =
                saddle_exclusion_test(field, law.as_ref(), domain, s.point(), delta, (m, big_m), &job.params);
            saddles.push(match r {
                Ok(r) => serde_json::to_value(&r).map_err(analysis)?,
                Err(e) => json!({"p": s.position, "error": e.to_string()}),
            });
        }
    }

    let levels = auto_levels(cfg, &probe);
    let mut contours = level_sets(&probe, &levels)?;
    contours.extend(classification.critical_components.iter().cloned());

    let summary = json!({
        "source": problem.source,
        "domain": domain.spec(),
        "range": [m, big_m],
        "convergence": problem.solved.as_ref().map(|s| &s.log),
        "classification": classification,
        "checks": report,
        "sections": sections,
        "ledgers": entries,
        "saddle_exclusion": saddles,
        "levels": summarize_levels(&levels, &contours),
    });
    if cfg.wants(Format::Json) {
        art.json("audit.json", &summary)?;
    }
    if cfg.wants(Format::Csv) {
        if let Some(s) = &problem.solved {
            art.bytes("solution.csv", &grid_csv(&s.grid)?)?;
        }
        art.bytes("levels.csv", &csv_bytes(|b| write_level_csv(&contours, b).map_err(analysis))?)?;
    }
    if cfg.wants(Format::Svg) {
        let overlays = Overlays {
            contours: &contours,
            critical: &classification.points,
            law: problem.law.as_deref(),
            balls: &balls,
        };
        art.bytes("audit.svg", render_svg(field, domain, SVG_CELLS, &overlays).as_bytes())?;
    }
    if junit {
        art.bytes("junit.xml", report.to_junit().as_bytes())?;
    }
    let mut lines = vec![count_line(&classification)];
    lines.extend(report_lines(&report));
    Ok(Outcome {
        pass: report.overall,
        lines,
    })
}
