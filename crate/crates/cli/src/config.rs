//! Experiment configuration: flat sectioned text with expression strings.

use std::path::Path;
use std::str::FromStr;

use ini::Ini;
use pdeclass_core::dsl::eval_str;
use pdeclass_core::dynamics::{Backend, EvolutionSpec, Rule, Window};
use pdeclass_core::numeric::as_i64;
use pdeclass_core::relation::{BoundExtras, BoundForm, DomainKind, Flavor, Presentation, QFlavor, RelationClass};
use pdeclass_core::{Binding, CellConvention, Expression, Precision};
use pdeclass_core::rug::Rational;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("malformed config: {0}")]
    Syntax(String),
    #[error("missing section [{0}]")]
    MissingSection(String),
    #[error("missing key `{key}` in [{section}]")]
    MissingKey { section: String, key: String },
    #[error("invalid `{key}` in [{section}]: {message}")]
    Invalid { section: String, key: String, message: String },
    #[error("unknown key `{key}` in [{section}]")]
    UnknownKey { section: String, key: String },
    #[error("unknown section [{0}]")]
    UnknownSection(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Expectation {
    Related,
    Unrelated,
    None,
}

impl FromStr for Expectation {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "related" => Ok(Expectation::Related),
            "unrelated" => Ok(Expectation::Unrelated),
            "none" => Ok(Expectation::None),
            _ => Err(format!("expected related, unrelated or none, got `{s}`")),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BackendKind {
    Exact,
    Decimal,
}

impl FromStr for BackendKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "exact" => Ok(BackendKind::Exact),
            "decimal" => Ok(BackendKind::Decimal),
            _ => Err(format!("expected exact or decimal, got `{s}`")),
        }
    }
}

#[derive(Clone, Debug)]
pub struct Numerics {
    pub backend: Option<BackendKind>,
    pub precision: Precision,
    /// Significant digits of decimal CSV output.
    pub csv_digits: u32,
    /// Also write exact `p/q` grids.
    pub exact_text: bool,
}

#[derive(Clone, Debug)]
pub struct FlowConfig {
    pub name: String,
    pub spec: EvolutionSpec,
    /// Letter used for the unknown in derived PDEs.
    pub symbol: char,
}

impl FlowConfig {
    pub fn rule(&self) -> Option<&Expression> {
        match &self.spec.rule {
            Rule::Recurrence(e) => Some(e),
            Rule::ClosedForm => None,
        }
    }
}

#[derive(Clone, Debug)]
pub struct RelationConfig {
    pub class: RelationClass,
    pub form: BoundForm,
    pub extras: BoundExtras,
    /// Q statistics to tabulate, in order.
    pub statistics: Vec<QFlavor>,
    pub presentation: Presentation,
    /// Cells to certify; `None` means the whole window.
    pub points: Option<Vec<(u64, u64)>>,
}

#[derive(Clone, Debug)]
pub struct DeriveConfig {
    pub scaling: (u32, u32, u32),
    pub alpha: u32,
    pub eps_max: Rational,
}

#[derive(Clone, Debug)]
pub struct EquivConfig {
    pub f: String,
    pub g: String,
    /// Symbol names; empty when `f`, `g` are cell rules.
    pub vars: Vec<String>,
    pub convention: CellConvention,
}

#[derive(Clone, Debug)]
pub enum WitnessConfig {
    Linear {
        m: Rational,
        d: Rational,
        band: Rational,
        pair: Option<(Rational, Rational)>,
    },
    Translation {
        delta0: Rational,
        delta: Rational,
        c: Rational,
        c_prime: Rational,
        eps: Rational,
        class: RelationClass,
    },
}

#[derive(Clone, Debug)]
pub struct ExperimentConfig {
    pub name: String,
    pub parameters: Binding,
    pub numerics: Numerics,
    pub window: Option<Window>,
    pub flows: Vec<FlowConfig>,
    pub relation: Option<RelationConfig>,
    pub derive: Option<DeriveConfig>,
    pub equiv: Option<EquivConfig>,
    pub witness: Option<WitnessConfig>,
    pub expect: Expectation,
}

impl ExperimentConfig {
    pub fn backend(&self) -> Backend {
        let kind = self.numerics.backend.unwrap_or_else(|| {
            if self.flows.iter().all(|f| f.rule().is_none()) {
                BackendKind::Exact
            } else {
                BackendKind::Decimal
            }
        });
        match kind {
            BackendKind::Exact => Backend::Exact,
            BackendKind::Decimal => Backend::Decimal(self.numerics.precision),
        }
    }

    pub fn flow(&self, name: &str) -> Option<&FlowConfig> {
        self.flows.iter().find(|f| f.name == name)
    }
}

const SECTIONS: &[(&str, &[&str])] = &[
    ("experiment", &["name", "expect"]),
    ("numerics", &["backend", "precision", "csv_digits", "exact_text"]),
    ("window", &["n_max", "t_max"]),
    (
        "relation",
        &[
            "m", "c", "d", "l", "alpha", "flavor", "domain", "form", "eps", "k", "n", "error_constant", "c_prime",
            "statistics", "presentation", "points", "exact",
        ],
    ),
    ("derive", &["m", "p", "q", "alpha", "eps_max"]),
    ("equiv", &["f", "g", "vars", "convention"]),
    (
        "witness",
        &["kind", "m", "d", "l", "a0", "b0", "delta0", "delta", "c", "c_prime", "eps", "class_m", "class_c", "class_d", "class_l"],
    ),
];

const FLOW_KEYS: &[&str] = &["rule", "boundary", "convention", "symbol"];

/// Key lookup inside one section with typed parsing.
struct Section<'a> {
    name: &'a str,
    props: &'a ini::Properties,
    parameters: &'a Binding,
}

impl Section<'_> {
    fn raw(&self, key: &str) -> Option<&str> {
        self.props.get(key).map(str::trim)
    }

    fn invalid(&self, key: &str, message: impl ToString) -> ConfigError {
        ConfigError::Invalid {
            section: self.name.to_string(),
            key: key.to_string(),
            message: message.to_string(),
        }
    }

    fn required(&self, key: &str) -> Result<&str, ConfigError> {
        self.raw(key).ok_or_else(|| ConfigError::MissingKey {
            section: self.name.to_string(),
            key: key.to_string(),
        })
    }

    fn rational(&self, key: &str) -> Result<Option<Rational>, ConfigError> {
        self.raw(key)
            .map(|text| eval_str(text, self.parameters).map_err(|e| self.invalid(key, e)))
            .transpose()
    }

    fn rational_req(&self, key: &str) -> Result<Rational, ConfigError> {
        self.required(key)?;
        Ok(self.rational(key)?.expect("present"))
    }

    fn natural(&self, key: &str) -> Result<Option<u64>, ConfigError> {
        match self.rational(key)? {
            None => Ok(None),
            Some(r) => as_i64(&r)
                .and_then(|v| u64::try_from(v).ok())
                .map(Some)
                .ok_or_else(|| self.invalid(key, format!("expected a natural number, got {r}"))),
        }
    }

    fn small(&self, key: &str) -> Result<Option<u32>, ConfigError> {
        self.natural(key)?
            .map(|v| u32::try_from(v).map_err(|_| self.invalid(key, "too large")))
            .transpose()
    }

    fn parsed<T: FromStr<Err = String>>(&self, key: &str) -> Result<Option<T>, ConfigError> {
        self.raw(key).map(|v| v.parse().map_err(|e| self.invalid(key, e))).transpose()
    }

    fn boolean(&self, key: &str) -> Result<Option<bool>, ConfigError> {
        self.raw(key)
            .map(|v| match v {
                "true" | "yes" => Ok(true),
                "false" | "no" => Ok(false),
                _ => Err(self.invalid(key, format!("expected true or false, got `{v}`"))),
            })
            .transpose()
    }

    fn convention(&self, key: &str) -> Result<CellConvention, ConfigError> {
        match self.raw(key) {
            None | Some("target") => Ok(CellConvention::Target),
            Some("base") => Ok(CellConvention::Base),
            Some(v) => Err(self.invalid(key, format!("expected target or base, got `{v}`"))),
        }
    }
}

fn parse_flavor(s: &str) -> Result<Flavor, String> {
    match s {
        "e" => Ok(Flavor::Exponential),
        "e^e" => Ok(Flavor::DoubleExponential),
        _ => Err(format!("expected e or e^e, got `{s}`")),
    }
}

fn parse_form(s: &str) -> Result<BoundForm, String> {
    match s {
        "def21" => Ok(BoundForm::Def21),
        "thm31" => Ok(BoundForm::Thm31),
        "lemma35" => Ok(BoundForm::Lemma35),
        _ => Err(format!("expected def21, thm31 or lemma35, got `{s}`")),
    }
}

/// `significant:4`, `decimals:3` or `term-rounded:4`.
pub fn parse_presentation(s: &str) -> Result<Presentation, String> {
    let (kind, digits) = s.split_once(':').ok_or_else(|| format!("expected KIND:DIGITS, got `{s}`"))?;
    let d: u32 = digits.trim().parse().map_err(|_| format!("bad digit count `{digits}`"))?;
    match kind.trim() {
        "significant" => Ok(Presentation::SignificantDigits(d)),
        "decimals" => Ok(Presentation::FixedDecimals(d)),
        "term-rounded" => Ok(Presentation::TermRounded(d)),
        k => Err(format!("unknown presentation `{k}`")),
    }
}

fn parse_points(s: &str) -> Result<Option<Vec<(u64, u64)>>, String> {
    if s == "all" {
        return Ok(None);
    }
    s.split(';')
        .map(|p| {
            let (n, t) = p.split_once(',').ok_or_else(|| format!("expected N,t in `{p}`"))?;
            let num = |v: &str| v.trim().parse::<u64>().map_err(|_| format!("bad index `{v}`"));
            Ok((num(n)?, num(t)?))
        })
        .collect::<Result<Vec<_>, String>>()
        .map(Some)
}

fn parse_statistics(s: &str) -> Result<Vec<QFlavor>, String> {
    s.split(',')
        .map(|v| match v.trim() {
            "e" => Ok(QFlavor::Exponential),
            "e^e" => Ok(QFlavor::lemma35()),
            v => Err(format!("expected e or e^e, got `{v}`")),
        })
        .collect()
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let ini = Ini::load_from_str(text).map_err(|e| ConfigError::Syntax(e.to_string()))?;
        for (name, props) in ini.iter() {
            let Some(name) = name else {
                if let Some((key, _)) = props.iter().next() {
                    return Err(ConfigError::UnknownKey {
                        section: "<top>".to_string(),
                        key: key.to_string(),
                    });
                }
                continue;
            };
            if name == "parameters" {
                continue;
            }
            let allowed = if name.starts_with("flow.") {
                FLOW_KEYS
            } else {
                SECTIONS
                    .iter()
                    .find(|(s, _)| *s == name)
                    .map(|(_, k)| *k)
                    .ok_or_else(|| ConfigError::UnknownSection(name.to_string()))?
            };
            for (key, _) in props.iter() {
                if !allowed.contains(&key) {
                    return Err(ConfigError::UnknownKey {
                        section: name.to_string(),
                        key: key.to_string(),
                    });
                }
            }
        }

        let mut parameters = Binding::new();
        if let Some(props) = ini.section(Some("parameters")) {
            for (key, value) in props.iter() {
                let v = eval_str(value.trim(), &parameters).map_err(|e| ConfigError::Invalid {
                    section: "parameters".to_string(),
                    key: key.to_string(),
                    message: e.to_string(),
                })?;
                parameters.set(key, v);
            }
        }
        let empty = ini::Properties::new();
        let section = |name: &'static str| -> Option<Section<'_>> {
            ini.section(Some(name)).map(|props| Section {
                name,
                props,
                parameters: &parameters,
            })
        };
        let or_empty = |name: &'static str| -> Section<'_> {
            section(name).unwrap_or(Section {
                name,
                props: &empty,
                parameters: &parameters,
            })
        };

        let exp = or_empty("experiment");
        let name = exp.raw("name").unwrap_or("experiment").to_string();
        let expect = exp.parsed("expect")?.unwrap_or(Expectation::None);

        let num = or_empty("numerics");
        let numerics = Numerics {
            backend: num.parsed("backend")?,
            precision: Precision::digits(num.small("precision")?.unwrap_or(100)),
            csv_digits: num.small("csv_digits")?.unwrap_or(20),
            exact_text: num.boolean("exact_text")?.unwrap_or(false),
        };

        let window = match section("window") {
            None => None,
            Some(w) => Some(Window::new(
                w.natural("n_max")?.ok_or_else(|| w.invalid("n_max", "required"))?,
                w.natural("t_max")?.ok_or_else(|| w.invalid("t_max", "required"))?,
            )),
        };

        let mut flows = Vec::new();
        for (sname, props) in ini.iter() {
            let Some(flow) = sname.and_then(|s| s.strip_prefix("flow.")) else {
                continue;
            };
            let s = Section {
                name: sname.unwrap(),
                props,
                parameters: &parameters,
            };
            let convention = s.convention("convention")?;
            let rule = match s.required("rule")? {
                "closed-form" => Rule::ClosedForm,
                text => Rule::Recurrence(Expression::parse_with(text, convention).map_err(|e| s.invalid("rule", e))?),
            };
            let boundary = Expression::parse(s.required("boundary")?).map_err(|e| s.invalid("boundary", e))?;
            let symbol = match s.raw("symbol") {
                None => 'u',
                Some(v) if v.chars().count() == 1 && v.chars().all(|c| c.is_ascii_alphabetic()) => v.chars().next().unwrap(),
                Some(v) => return Err(s.invalid("symbol", format!("expected one letter, got `{v}`"))),
            };
            flows.push(FlowConfig {
                name: flow.to_string(),
                spec: EvolutionSpec {
                    rule,
                    boundary,
                    parameters: parameters.clone(),
                },
                symbol,
            });
        }

        let relation = section("relation").map(|r| parse_relation(&r, numerics.precision)).transpose()?;

        let derive = match section("derive") {
            None => None,
            Some(d) => Some(DeriveConfig {
                scaling: (
                    d.small("m")?.unwrap_or(1),
                    d.small("p")?.unwrap_or(1),
                    d.small("q")?.unwrap_or(1),
                ),
                alpha: d.small("alpha")?.unwrap_or(1),
                eps_max: d.rational("eps_max")?.unwrap_or_else(|| Rational::from(1)),
            }),
        };

        let equiv = match section("equiv") {
            None => None,
            Some(e) => Some(EquivConfig {
                f: e.required("f")?.to_string(),
                g: e.required("g")?.to_string(),
                vars: e
                    .raw("vars")
                    .map(|v| v.split(',').map(|s| s.trim().to_string()).filter(|s| !s.is_empty()).collect())
                    .unwrap_or_default(),
                convention: e.convention("convention")?,
            }),
        };

        let witness = section("witness").map(|w| parse_witness(&w)).transpose()?;

        Ok(ExperimentConfig {
            name,
            parameters,
            numerics,
            window,
            flows,
            relation,
            derive,
            equiv,
            witness,
            expect,
        })
    }
}

fn parse_relation(r: &Section<'_>, precision: Precision) -> Result<RelationConfig, ConfigError> {
    let flavor = r.parsed_with("flavor", parse_flavor)?.unwrap_or(Flavor::Exponential);
    let one = || Rational::from(1);
    let mut class = RelationClass::new(
        r.rational_req("m")?,
        r.rational("c")?.unwrap_or_else(one),
        r.rational("d")?.unwrap_or_else(one),
        r.rational("l")?.unwrap_or_default(),
        r.small("alpha")?.unwrap_or(1),
        flavor,
    )
    .map_err(|e| r.invalid("m", e))?;
    class.domain = match r.raw("domain") {
        None | Some("fin") => DomainKind::Finite,
        Some("inf") => DomainKind::Infinite,
        Some(v) => return Err(r.invalid("domain", format!("expected fin or inf, got `{v}`"))),
    };
    let eps = r
        .rational("eps")?
        .or_else(|| r.parameters.get("eps").cloned())
        .ok_or_else(|| r.invalid("eps", "needed in [relation] or [parameters]"))?;
    let mut extras = BoundExtras::new(eps);
    if let Some(k) = r.rational("k")? {
        extras.k = k;
    }
    if let Some(n) = r.rational("n")? {
        extras.n = n;
    }
    extras.error_constant = r.rational("error_constant")?;
    extras.c_prime = r.rational("c_prime")?;
    extras.precision = precision;
    extras.prefer_exact = r.boolean("exact")?.unwrap_or(true);
    Ok(RelationConfig {
        class,
        form: r.parsed_with("form", parse_form)?.unwrap_or(BoundForm::Def21),
        extras,
        statistics: r.parsed_with("statistics", parse_statistics)?.unwrap_or_else(|| vec![QFlavor::Exponential]),
        presentation: r
            .parsed_with("presentation", parse_presentation)?
            .unwrap_or(Presentation::SignificantDigits(4)),
        points: r.parsed_with("points", parse_points)?.unwrap_or(None),
    })
}

fn parse_witness(w: &Section<'_>) -> Result<WitnessConfig, ConfigError> {
    match w.required("kind")? {
        "linear" => {
            let pair = match (w.rational("a0")?, w.rational("b0")?) {
                (Some(a), Some(b)) => Some((a, b)),
                (None, None) => None,
                _ => return Err(w.invalid("a0", "a0 and b0 go together")),
            };
            Ok(WitnessConfig::Linear {
                m: w.rational_req("m")?,
                d: w.rational_req("d")?,
                band: w.rational_req("l")?,
                pair,
            })
        }
        "translation" => {
            let class = RelationClass::new(
                w.rational_req("class_m")?,
                w.rational_req("class_c")?,
                w.rational_req("class_d")?,
                w.rational_req("class_l")?,
                1,
                Flavor::DoubleExponential,
            )
            .map_err(|e| w.invalid("class_m", e))?;
            Ok(WitnessConfig::Translation {
                delta0: w.rational_req("delta0")?,
                delta: w.rational_req("delta")?,
                c: w.rational_req("c")?,
                c_prime: w.rational_req("c_prime")?,
                eps: w.rational_req("eps")?,
                class,
            })
        }
        k => Err(w.invalid("kind", format!("expected linear or translation, got `{k}`"))),
    }
}

impl Section<'_> {
    fn parsed_with<T>(&self, key: &str, f: impl Fn(&str) -> Result<T, String>) -> Result<Option<T>, ConfigError> {
        self.raw(key).map(|v| f(v).map_err(|e| self.invalid(key, e))).transpose()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use pdeclass_core::numeric::{int, rat};

    #[test]
    fn presentations_and_points() {
        assert_eq!(parse_presentation("decimals:3"), Ok(Presentation::FixedDecimals(3)));
        assert_eq!(parse_presentation("term-rounded:4"), Ok(Presentation::TermRounded(4)));
        assert!(parse_presentation("significant").is_err());
        assert_eq!(parse_points("all"), Ok(None));
        assert_eq!(parse_points("3,1; 4,2"), Ok(Some(vec![(3, 1), (4, 2)])));
        assert!(parse_points("3").is_err());
    }

    #[test]
    fn parameters_see_earlier_parameters() {
        let cfg = ExperimentConfig::parse("[parameters]\neps = 1/2\nl = 4\nk = l/eps\n").unwrap();
        assert_eq!(cfg.parameters.get("k"), Some(&int(8)));
        assert_eq!(cfg.expect, Expectation::None);
        assert!(cfg.relation.is_none());
    }

    #[test]
    fn relation_defaults() {
        let cfg = ExperimentConfig::parse("[parameters]\neps = 1/10\n[relation]\nm = 10^3\n").unwrap();
        let r = cfg.relation.unwrap();
        assert_eq!(r.class.m, 1000);
        assert_eq!((r.class.c.clone(), r.class.d.clone(), r.class.l.clone()), (int(1), int(1), int(0)));
        assert_eq!(r.extras.eps, rat(1, 10));
        assert_eq!(r.form, BoundForm::Def21);
        assert_eq!(r.statistics, vec![QFlavor::Exponential]);
    }

    #[test]
    fn backend_defaults_follow_the_rules() {
        let closed = "[flow.z]\nrule = closed-form\nboundary = 1\n";
        assert_eq!(ExperimentConfig::parse(closed).unwrap().backend(), Backend::Exact);
        let rec = "[flow.z]\nrule = z[0,-1]\nboundary = 1\n";
        assert_eq!(
            ExperimentConfig::parse(rec).unwrap().backend(),
            Backend::Decimal(Precision::digits(100))
        );
    }

    #[test]
    fn schema_violations() {
        for (text, want) in [
            ("[flow.z]\nboundary = 1\n", "missing key `rule` in [flow.z]"),
            ("[derive]\nalpha = -1\n", "invalid `alpha` in [derive]"),
            ("stray = 1\n", "unknown key `stray`"),
            ("[flow.z]\nrule = closed-form\nboundary = 1\nsymbol = uv\n", "invalid `symbol`"),
        ] {
            let e = ExperimentConfig::parse(text).unwrap_err().to_string();
            assert!(e.contains(want), "{e}");
        }
    }
}
