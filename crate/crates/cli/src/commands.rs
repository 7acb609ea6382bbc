//! Subcommand runners. Each returns the files it wrote and an optional verdict.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use pdeclass_core::dynamics::{evolve_decimal, evolve_exact, DynamicsError, FlowValue, Provenance};
use pdeclass_core::jet::{derive_pde, error_constant, ErrorHypotheses, JetError};
use pdeclass_core::maxplus::{equivalent, tropical_constants, MaxPlusError};
use pdeclass_core::numeric::{format_float, Precision};
use pdeclass_core::relation::{certify_point, q_table, QFlavor, QParams, QTable, RelationError};
use pdeclass_core::rug::{Float, Rational};
use pdeclass_core::solutions::{
    witness_linear, witness_linear_with_pair, witness_translation, SolutionError, WitnessCertificate,
};
use pdeclass_core::{
    ApproximationData, Backend, BoundCertificate, ElementaryRational, Expression, GridFlow, Offset, Verdict, Window,
};
use thiserror::Error;

use crate::config::{ConfigError, ExperimentConfig, FlowConfig, RelationConfig, WitnessConfig};

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("{0}")]
    Schema(String),
    #[error("flow {flow}: {source}")]
    Dynamics { flow: String, source: DynamicsError },
    #[error(transparent)]
    Relation(#[from] RelationError),
    #[error(transparent)]
    Jet(#[from] JetError),
    #[error(transparent)]
    MaxPlus(#[from] MaxPlusError),
    #[error(transparent)]
    Solution(#[from] SolutionError),
    #[error("cannot write {path}: {source}")]
    Io { path: String, source: std::io::Error },
}

/// Verdict of a run on the computed solutions.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Finding {
    Related,
    Unrelated,
}

impl std::fmt::Display for Finding {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Finding::Related => "related",
            Finding::Unrelated => "unrelated",
        })
    }
}

#[derive(Debug, Default)]
pub struct Report {
    pub summary: Vec<String>,
    pub written: Vec<PathBuf>,
    pub finding: Option<Finding>,
}

impl Report {
    fn say(&mut self, line: impl Into<String>) {
        self.summary.push(line.into());
    }

    fn write(&mut self, dir: &Path, name: &str, body: &str) -> Result<(), CliError> {
        let path = dir.join(name);
        std::fs::write(&path, body).map_err(|source| CliError::Io {
            path: path.display().to_string(),
            source,
        })?;
        self.written.push(path);
        Ok(())
    }
}

fn need<'a, T>(v: Option<&'a T>, section: &str) -> Result<&'a T, CliError> {
    v.ok_or_else(|| CliError::Schema(format!("this subcommand needs a [{section}] section")))
}

fn window(cfg: &ExperimentConfig) -> Result<Window, CliError> {
    cfg.window.ok_or_else(|| CliError::Schema("this subcommand needs a [window] section".to_string()))
}

/// The compared pair: flows `z` and `w`, or the first two declared.
fn pair(cfg: &ExperimentConfig) -> Result<(&FlowConfig, &FlowConfig), CliError> {
    match (cfg.flow("z"), cfg.flow("w")) {
        (Some(z), Some(w)) => Ok((z, w)),
        _ if cfg.flows.len() >= 2 => Ok((&cfg.flows[0], &cfg.flows[1])),
        _ => Err(CliError::Schema("relations need two [flow.*] sections".to_string())),
    }
}

enum Grids {
    Exact(Vec<GridFlow<Rational>>),
    Decimal(Vec<GridFlow<Float>>),
}

fn evolve_flows(cfg: &ExperimentConfig, flows: &[&FlowConfig], w: Window) -> Result<Grids, CliError> {
    let err = |f: &FlowConfig| {
        let flow = f.name.clone();
        move |source| CliError::Dynamics { flow, source }
    };
    Ok(match cfg.backend() {
        Backend::Exact => Grids::Exact(
            flows
                .iter()
                .map(|f| evolve_exact(&f.spec, w).map_err(err(f)))
                .collect::<Result<_, _>>()?,
        ),
        Backend::Decimal(p) => Grids::Decimal(
            flows
                .iter()
                .map(|f| evolve_decimal(&f.spec, w, p).map_err(err(f)))
                .collect::<Result<_, _>>()?,
        ),
    })
}

fn backend_label(cfg: &ExperimentConfig) -> String {
    match cfg.backend() {
        Backend::Exact => "exact".to_string(),
        Backend::Decimal(p) => format!("decimal ({} digits)", p.decimal_digits()),
    }
}

pub fn evolve(cfg: &ExperimentConfig, out: &Path) -> Result<Report, CliError> {
    let w = window(cfg)?;
    if cfg.flows.is_empty() {
        return Err(CliError::Schema("evolve needs at least one [flow.*] section".to_string()));
    }
    let flows: Vec<&FlowConfig> = cfg.flows.iter().collect();
    let grids = evolve_flows(cfg, &flows, w)?;
    let digits = cfg.numerics.csv_digits;
    let bits = Precision::digits(digits).bits();
    let mut csv = String::from("flow,N,t,provenance,value\n");
    let mut exact = String::from("flow,N,t,value\n");
    let mut rep = Report::default();
    fn rows<V: FlowValue>(
        name: &str,
        g: &GridFlow<V>,
        bits: u32,
        digits: u32,
        csv: &mut String,
        exact: &mut String,
    ) -> usize {
        let mut cells = 0;
        for t in 0..g.rows() as u64 {
            for n in 0..g.row_len(t) as u64 {
                let v = g.get(n, t).expect("in range");
                let prov = match g.provenance(n, t).expect("in range") {
                    Provenance::Prescribed => "prescribed",
                    Provenance::Computed => "computed",
                };
                let _ = writeln!(csv, "{name},{n},{t},{prov},{}", format_float(&v.to_float(bits), digits));
                if let Some(r) = v.as_rational() {
                    let _ = writeln!(exact, "{name},{n},{t},{r}");
                }
                cells += 1;
            }
        }
        cells
    }
    for (i, f) in flows.iter().enumerate() {
        let cells = match &grids {
            Grids::Exact(g) => rows(&f.name, &g[i], bits, digits, &mut csv, &mut exact),
            Grids::Decimal(g) => rows(&f.name, &g[i], bits, digits, &mut csv, &mut exact),
        };
        rep.say(format!("flow {}: {cells} cells", f.name));
    }
    rep.say(format!("backend {}", backend_label(cfg)));
    rep.write(out, "grid.csv", &csv)?;
    if cfg.numerics.exact_text {
        if matches!(grids, Grids::Decimal(_)) {
            return Err(CliError::Schema("exact_text needs the exact backend".to_string()));
        }
        rep.write(out, "grid_exact.csv", &exact)?;
    }
    Ok(rep)
}

fn statistic_name(q: &QFlavor) -> &'static str {
    match q {
        QFlavor::Exponential => "e",
        QFlavor::DoubleExponential { .. } => "e^e",
    }
}

fn band(rel: &RelationConfig) -> Result<u64, CliError> {
    pdeclass_core::numeric::as_i64(&rel.class.l)
        .and_then(|l| u64::try_from(l).ok())
        .ok_or_else(|| CliError::Schema(format!("band L must be a natural number, got {}", rel.class.l)))
}

fn tables<V: FlowValue>(
    z: &GridFlow<V>,
    w: &GridFlow<V>,
    win: Window,
    rel: &RelationConfig,
) -> Result<Vec<(QFlavor, QTable)>, CliError> {
    let band = band(rel)?;
    rel.statistics
        .iter()
        .map(|flavor| {
            let params = QParams {
                eps: rel.extras.eps.clone(),
                band,
                flavor: flavor.clone(),
                precision: rel.extras.precision,
            };
            Ok((flavor.clone(), q_table(z, w, win.n_max, win.t_max, &params)?))
        })
        .collect()
}

fn certificates<V: FlowValue>(
    z: &GridFlow<V>,
    w: &GridFlow<V>,
    win: Window,
    rel: &RelationConfig,
) -> Result<Vec<BoundCertificate>, CliError> {
    let points: Vec<(u64, u64)> = match &rel.points {
        Some(p) => p.clone(),
        None => (0..=win.n_max).flat_map(|n| (0..=win.t_max).map(move |t| (n, t))).collect(),
    };
    points
        .into_iter()
        .map(|p| Ok(certify_point(z, w, p, &rel.class, rel.form, &rel.extras)?))
        .collect()
}

fn finding(certs: &[BoundCertificate]) -> Finding {
    if certs.iter().any(|c| c.verdict == Verdict::Violated) {
        Finding::Unrelated
    } else {
        Finding::Related
    }
}

fn certificate_file(cfg: &ExperimentConfig, rel: &RelationConfig, certs: &[BoundCertificate]) -> String {
    let violated: Vec<&BoundCertificate> = certs.iter().filter(|c| c.verdict == Verdict::Violated).collect();
    let mut s = String::new();
    let _ = writeln!(s, "experiment {}", cfg.name);
    let _ = writeln!(s, "backend {}", backend_label(cfg));
    let _ = writeln!(s, "form {}", rel.form);
    let _ = writeln!(s, "cells {} violated {} satisfied {}", certs.len(), violated.len(), certs.len() - violated.len());
    let _ = writeln!(s, "finding {}", finding(certs));
    if let Some(c) = violated.first() {
        let _ = writeln!(s, "first-violation N={} t={}", c.point.0, c.point.1);
    }
    for (i, c) in certs.iter().enumerate() {
        let _ = write!(s, "\n[certificate {}]\n{c}\n", i + 1);
    }
    s
}

struct Relation {
    tables: Vec<(QFlavor, QTable)>,
    certs: Vec<BoundCertificate>,
}

fn relation(cfg: &ExperimentConfig, with_tables: bool) -> Result<Relation, CliError> {
    let rel = need(cfg.relation.as_ref(), "relation")?;
    let win = window(cfg)?;
    let (z, w) = pair(cfg)?;
    let grids = evolve_flows(cfg, &[z, w], win)?;
    let run = |tabulate: &dyn Fn() -> Result<Vec<(QFlavor, QTable)>, CliError>,
               certify: &dyn Fn() -> Result<Vec<BoundCertificate>, CliError>| {
        Ok::<_, CliError>(Relation {
            tables: if with_tables { tabulate()? } else { Vec::new() },
            certs: certify()?,
        })
    };
    match &grids {
        Grids::Exact(g) => run(&|| tables(&g[0], &g[1], win, rel), &|| certificates(&g[0], &g[1], win, rel)),
        Grids::Decimal(g) => run(&|| tables(&g[0], &g[1], win, rel), &|| certificates(&g[0], &g[1], win, rel)),
    }
}

pub fn relate(cfg: &ExperimentConfig, out: &Path) -> Result<Report, CliError> {
    let rel = need(cfg.relation.as_ref(), "relation")?;
    let r = relation(cfg, true)?;
    let mut rep = Report::default();
    let digits = cfg.numerics.csv_digits;
    let mut csv = String::from("statistic,N,t,Q,log_ratio,rate_term\n");
    let mut md = String::new();
    for (flavor, table) in &r.tables {
        let name = statistic_name(flavor);
        for line in table.to_csv(digits).lines().skip(1) {
            let _ = writeln!(csv, "{name},{line}");
        }
        if !md.is_empty() {
            md.push('\n');
        }
        let _ = write!(md, "Q_{name}\n\n{}", table.to_markdown(rel.presentation));
        let max = table.values.iter().flatten().map(|q| q.value()).fold(None::<Float>, |a, v| match a {
            Some(a) if a >= v => Some(a),
            _ => Some(v),
        });
        rep.say(format!(
            "Q_{name}: {}x{} cells, max {}",
            table.n_max + 1,
            table.t_max + 1,
            max.map(|m| format_float(&m, 6)).unwrap_or_default()
        ));
    }
    rep.write(out, "qtable.csv", &csv)?;
    rep.write(out, "qtable.md", &md)?;
    let f = finding(&r.certs);
    rep.say(format!("bound {}: {} of {} cells violated", rel.form, r.certs.iter().filter(|c| c.verdict == Verdict::Violated).count(), r.certs.len()));
    rep.say(format!("finding {f}"));
    rep.finding = Some(f);
    Ok(rep)
}

pub fn certify(cfg: &ExperimentConfig, out: &Path) -> Result<Report, CliError> {
    let rel = need(cfg.relation.as_ref(), "relation")?;
    let r = relation(cfg, false)?;
    let mut rep = Report::default();
    let f = finding(&r.certs);
    if let Some(c) = r.certs.iter().find(|c| c.verdict == Verdict::Violated) {
        rep.say(format!("first violation at N={} t={} ({})", c.point.0, c.point.1, c.method));
    }
    rep.say(format!("finding {f}"));
    rep.finding = Some(f);
    rep.write(out, "certificates.txt", &certificate_file(cfg, rel, &r.certs))?;
    Ok(rep)
}

/// Maps named in `[equiv]`, or the recurrence rules of the flows.
fn maps(cfg: &ExperimentConfig) -> Result<Vec<(String, ElementaryRational)>, CliError> {
    if let Some(e) = &cfg.equiv {
        if !e.vars.is_empty() {
            let vars: Vec<&str> = e.vars.iter().map(String::as_str).collect();
            return Ok(vec![
                ("f".to_string(), ElementaryRational::from_symbols(&e.f, &vars)?),
                ("g".to_string(), ElementaryRational::from_symbols(&e.g, &vars)?),
            ]);
        }
        let parse = |key: &str, text: &str| {
            Expression::parse_with(text, e.convention).map_err(|err| {
                CliError::Config(ConfigError::Invalid {
                    section: "equiv".to_string(),
                    key: key.to_string(),
                    message: err.to_string(),
                })
            })
        };
        let (f, g) = (parse("f", &e.f)?, parse("g", &e.g)?);
        let stencil = union_stencil([&f, &g]);
        return Ok(vec![
            ("f".to_string(), ElementaryRational::from_rule(&f, &stencil, &cfg.parameters)?),
            ("g".to_string(), ElementaryRational::from_rule(&g, &stencil, &cfg.parameters)?),
        ]);
    }
    let rules: Vec<(&FlowConfig, &Expression)> = cfg.flows.iter().filter_map(|f| f.rule().map(|r| (f, r))).collect();
    if rules.is_empty() {
        return Err(CliError::Schema("needs an [equiv] section or [flow.*] recurrence rules".to_string()));
    }
    let stencil = union_stencil(rules.iter().map(|(_, r)| *r));
    rules
        .into_iter()
        .map(|(f, r)| Ok((f.name.clone(), ElementaryRational::from_rule(r, &stencil, &cfg.parameters)?)))
        .collect()
}

fn union_stencil<'a>(rules: impl IntoIterator<Item = &'a Expression>) -> Vec<Offset> {
    let mut all: Vec<Offset> = rules.into_iter().flat_map(|r| r.stencil()).collect();
    all.sort();
    all.dedup();
    all
}

pub fn equiv(cfg: &ExperimentConfig, out: &Path) -> Result<Report, CliError> {
    let maps = maps(cfg)?;
    if maps.len() != 2 {
        return Err(CliError::Schema(format!("equiv compares two maps, found {}", maps.len())));
    }
    let same = equivalent(&maps[0].1, &maps[1].1)?;
    let mut rep = Report::default();
    let mut body = String::new();
    for (name, m) in &maps {
        let _ = writeln!(body, "shadow {name} = {}", m.tropical_shadow());
    }
    let _ = writeln!(body, "equivalent {same}");
    rep.say(format!("equivalent({}, {}) = {same}", maps[0].0, maps[1].0));
    rep.write(out, "equiv.txt", &body)?;
    Ok(rep)
}

pub fn constants(cfg: &ExperimentConfig, out: &Path) -> Result<Report, CliError> {
    let mut rep = Report::default();
    let mut body = String::new();
    for (name, m) in maps(cfg)? {
        let tc = tropical_constants(&m);
        let mut line = format!("{name}: M_f = {}, c_f = {}", tc.m, tc.c);
        if let Some(rel) = &cfg.relation {
            let fits = tc.m <= rel.class.m && tc.c <= rel.class.c;
            let _ = write!(line, " (within class M={} c={}: {fits})", rel.class.m, rel.class.c);
        }
        let _ = writeln!(body, "{line}");
        rep.say(line);
    }
    rep.write(out, "constants.txt", &body)?;
    Ok(rep)
}

pub fn derive(cfg: &ExperimentConfig, out: &Path) -> Result<Report, CliError> {
    let d = need(cfg.derive.as_ref(), "derive")?;
    let mut rep = Report::default();
    let mut body = String::new();
    let rules: Vec<(&FlowConfig, &Expression)> = cfg.flows.iter().filter_map(|f| f.rule().map(|r| (f, r))).collect();
    if rules.is_empty() {
        return Err(CliError::Schema("derive needs [flow.*] sections with recurrence rules".to_string()));
    }
    let hyp = ErrorHypotheses {
        eps_max: d.eps_max.clone(),
        jet_positivity: true,
    };
    for (flow, rule) in rules {
        let stencil = rule.stencil();
        let map = ElementaryRational::from_rule(rule, &stencil, &cfg.parameters)?;
        let data = ApproximationData::new(stencil.clone(), d.scaling, d.alpha)?;
        let pde = derive_pde(&map, &data)?;
        let c = flow.symbol;
        let constant = match error_constant(&pde, &hyp) {
            Ok(r) => r.to_string(),
            Err(e) => format!("unavailable ({e})"),
        };
        let stencil_text: Vec<String> = stencil.iter().map(|o| o.to_string()).collect();
        let _ = writeln!(body, "[flow {}]", flow.name);
        let _ = writeln!(body, "rule {}", rule.source());
        let _ = writeln!(body, "stencil {}", stencil_text.join(" "));
        let _ = writeln!(body, "scaling (m,p,q) = ({}, {}, {}) alpha = {}", d.scaling.0, d.scaling.1, d.scaling.2, d.alpha);
        let _ = writeln!(body, "P = {}", pde.reduced.display_with(c));
        let _ = writeln!(body, "h = {}", pde.denominator.display_factored(c));
        let _ = writeln!(body, "equation {}", pde.display(c));
        let _ = writeln!(body, "leading {}", pde.leading.display_with(c));
        let _ = writeln!(body, "class (M,c,L,k,D) = {}", pde.class);
        let _ = writeln!(body, "consistent {}", pde.consistent);
        let _ = writeln!(body, "error constant (eps <= {}) = {constant}", d.eps_max);
        let _ = writeln!(body, "remainder terms {}", pde.remainder_monomials().len());
        body.push('\n');
        rep.say(format!("{}: P = {} over h = {}", flow.name, pde.reduced.display_with(c), pde.denominator.display_factored(c)));
    }
    rep.write(out, "derive.txt", &body)?;
    Ok(rep)
}

fn witness_block(s: &mut String, c: &WitnessCertificate) {
    let _ = writeln!(s, "ratio {}", c.ratio);
    for p in &c.bound.factors {
        let _ = writeln!(s, "bound factor ({})^({})", p.base, p.exponent);
    }
    let _ = writeln!(s, "log rhs {}", c.bound.log);
    let _ = writeln!(s, "method {}", c.method);
    let _ = writeln!(s, "verdict {}", c.verdict);
}

pub fn witness(cfg: &ExperimentConfig, out: &Path) -> Result<Report, CliError> {
    let wc = need(cfg.witness.as_ref(), "witness")?;
    let mut rep = Report::default();
    let mut s = String::new();
    let verdict = match wc {
        WitnessConfig::Linear { m, d, band, pair } => {
            let w = match pair {
                Some((a0, b0)) => witness_linear_with_pair(m, d, band, a0, b0)?,
                None => witness_linear(m, d, band)?,
            };
            let _ = writeln!(s, "witness linear");
            let _ = writeln!(s, "class M={} D={} L={} eps={}", w.m, w.d, w.band, w.eps);
            let _ = writeln!(s, "a0 {} b0 {} l {}", w.a0, w.b0, w.l);
            let _ = writeln!(s, "u = x^{0} + 1, v = (x - s)^{0} + 1 on (0, {1}) x [0, {2})", w.l, w.a0, w.b0);
            let _ = writeln!(s, "rate bound {}", w.rate_bound);
            witness_block(&mut s, &w.certificate);
            rep.say(format!("linear witness (a0, b0, l) = ({}, {}, {}): {}", w.a0, w.b0, w.l, w.certificate.verdict));
            w.certificate.verdict
        }
        WitnessConfig::Translation {
            delta0,
            delta,
            c,
            c_prime,
            eps,
            class,
        } => {
            let w = witness_translation(delta0, delta, c, c_prime, eps, class)?;
            let _ = writeln!(s, "witness translation");
            let _ = writeln!(s, "class M={} c={} D={} L={} eps={}", w.class.m, w.class.c, w.class.d, w.class.l, w.eps);
            let _ = writeln!(s, "delta0 {} delta {} C {} C' {}", w.delta0, w.delta, w.c, w.c_prime);
            let _ = writeln!(s, "I0 {}", w.i0);
            let _ = writeln!(s, "v(delta0, delta0) {}", w.v_at_point);
            let _ = writeln!(s, "rate bound {}", w.rate_bound);
            let _ = writeln!(s, "violation ratio {}", w.violation_ratio);
            witness_block(&mut s, &w.certificate);
            rep.say(format!("translation witness I0 = {}: {}", w.i0, w.certificate.verdict));
            w.certificate.verdict
        }
    };
    let f = match verdict {
        Verdict::Violated => Finding::Unrelated,
        Verdict::Satisfied => Finding::Related,
    };
    rep.say(format!("finding {f}"));
    rep.finding = Some(f);
    rep.write(out, "witness.txt", &s)?;
    Ok(rep)
}
