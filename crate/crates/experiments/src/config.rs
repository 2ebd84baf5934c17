//! Run configuration: a line-oriented `key = value` format with one level of
//! `[section]` headers.

use std::collections::BTreeSet;
use std::fmt;
use std::path::{Path, PathBuf};

use heatlab::expr::{self, BinOp, Expr};
use heatlab::field::{CoefficientField, DomainSpec, Table};
use heatlab::symbol::{SymbolError, SymbolSpec};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum ConfigError {
    #[error("line {line}, column {column}: {message}")]
    Syntax { line: usize, column: usize, message: String },
    #[error("line {line}: unknown key `{path}`")]
    UnknownKey { line: usize, path: String },
    #[error("line {line}: duplicate key `{path}`")]
    Duplicate { line: usize, path: String },
    #[error("line {line}, column {column}: `{path}`: {message}")]
    Expression { line: usize, column: usize, path: String, message: String },
    #[error("`{path}`: {message}")]
    Invalid { path: String, message: String },
    #[error("cannot read {path}: {message}")]
    Io { path: String, message: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scenario {
    Constants,
    Kernel,
    Distance,
    Kato,
    Twist,
    Verify,
}

impl Scenario {
    pub const ALL: [Scenario; 6] = [
        Scenario::Constants,
        Scenario::Kernel,
        Scenario::Distance,
        Scenario::Kato,
        Scenario::Twist,
        Scenario::Verify,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Scenario::Constants => "constants",
            Scenario::Kernel => "kernel",
            Scenario::Distance => "distance",
            Scenario::Kato => "kato",
            Scenario::Twist => "twist",
            Scenario::Verify => "verify",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|c| c.name() == s)
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum SymbolKind {
    /// `a(x) ξ^{2m}` in one dimension.
    Scalar,
    /// `a(x) |ξ|^{2m}`.
    Laplacian,
    /// `Σ_k w_k ξ_k^{2m}` with constant weights.
    Separable(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct KernelParams {
    pub times: Option<Vec<f64>>,
    pub t_window: Option<(f64, f64)>,
    pub t_count: usize,
    pub max_offset: Option<f64>,
    pub source: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DistanceParams {
    pub m_values: Vec<f64>,
    pub pairs: Vec<(f64, f64)>,
    pub neighbourhood: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct KatoParams {
    /// `V₋` to certify; defaults to the negative part of the potential.
    pub vminus: Option<CoefficientField>,
    pub epsilons: Vec<f64>,
    pub lambdas: Vec<f64>,
    pub deltas: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TwistParams {
    pub lambda_min: f64,
    pub lambda_max: f64,
    pub per_decade: usize,
    /// Twisting profile; defaults to the Finsler-optimal one.
    pub profile: Option<CoefficientField>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VerifyParams {
    pub tolerance: f64,
    pub slack: f64,
    pub perturbation: Option<CoefficientField>,
    pub deltas: Vec<f64>,
    pub delta: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub scenario: Scenario,
    pub m: u32,
    pub n: usize,
    pub domain: DomainSpec,
    pub points: Vec<usize>,
    pub symbol: SymbolKind,
    pub coefficient: CoefficientField,
    pub potential: Option<CoefficientField>,
    pub kernel: KernelParams,
    pub distance: DistanceParams,
    pub kato: KatoParams,
    pub twist: TwistParams,
    pub verify: VerifyParams,
    pub seed: u64,
    pub output: Option<PathBuf>,
}

impl RunConfig {
    /// Defaults for an `m`-th order problem on `domain` with `points` per axis.
    pub fn new(scenario: Scenario, m: u32, domain: DomainSpec, points: Vec<usize>) -> Self {
        let n = domain.dim();
        RunConfig {
            scenario,
            m,
            n,
            domain,
            points,
            symbol: if n == 1 { SymbolKind::Scalar } else { SymbolKind::Laplacian },
            coefficient: CoefficientField::Constant(1.0),
            potential: None,
            kernel: KernelParams {
                times: None,
                t_window: None,
                t_count: 8,
                max_offset: None,
                source: None,
            },
            distance: DistanceParams {
                m_values: vec![0.5, 1.0, 2.0, 5.0],
                pairs: Vec::new(),
                neighbourhood: 16,
            },
            kato: KatoParams {
                vminus: None,
                epsilons: (1..=9).map(|k| k as f64 / 10.0).collect(),
                lambdas: heatlab::kato::default_lambdas(),
                deltas: vec![0.02, 0.01, 0.005, 0.0025],
            },
            twist: TwistParams {
                lambda_min: 1.0,
                lambda_max: 10f64.powf(2.5),
                per_decade: 40,
                profile: None,
            },
            verify: VerifyParams {
                tolerance: 0.05,
                slack: 0.05,
                perturbation: None,
                deltas: vec![0.01, 0.05, 0.1],
                delta: 0.0,
            },
            seed: 0,
            output: None,
        }
    }

    pub fn domain_length(&self) -> f64 {
        (0..self.n)
            .map(|k| self.domain.hi[k] - self.domain.lo[k])
            .fold(f64::INFINITY, f64::min)
    }

    /// The small-time window `[1e−3, 1e−1]·(L/8)^{2m}` unless configured.
    pub fn t_window(&self) -> (f64, f64) {
        self.kernel.t_window.unwrap_or_else(|| {
            let s = (self.domain_length() / 8.0).powi(2 * self.m as i32);
            (1e-3 * s, 1e-1 * s)
        })
    }

    /// Configured times, or `t_count` log-spaced times over the window.
    pub fn times(&self) -> Vec<f64> {
        if let Some(t) = &self.kernel.times {
            return t.clone();
        }
        let (lo, hi) = self.t_window();
        let c = self.kernel.t_count.max(1);
        if c == 1 {
            return vec![lo];
        }
        (0..c)
            .map(|k| lo * (hi / lo).powf(k as f64 / (c - 1) as f64))
            .collect()
    }

    pub fn max_offset(&self) -> f64 {
        self.kernel.max_offset.unwrap_or(self.domain_length() / 4.0)
    }

    pub fn source(&self) -> Vec<f64> {
        self.kernel.source.clone().unwrap_or_else(|| {
            (0..self.n)
                .map(|k| 0.5 * (self.domain.lo[k] + self.domain.hi[k]))
                .collect()
        })
    }

    pub fn lambda_grid(&self) -> Vec<f64> {
        heatlab::twist::log_grid(self.twist.lambda_min, self.twist.lambda_max, self.twist.per_decade)
    }

    pub fn build_symbol(&self) -> Result<SymbolSpec, SymbolError> {
        self.build_symbol_with(&self.coefficient)
    }

    pub fn build_symbol_with(&self, a: &CoefficientField) -> Result<SymbolSpec, SymbolError> {
        match &self.symbol {
            SymbolKind::Scalar => SymbolSpec::scalar_1d(self.m, a.clone(), self.domain.clone()),
            SymbolKind::Laplacian => SymbolSpec::laplacian_power(self.m, a.clone(), self.domain.clone()),
            SymbolKind::Separable(w) => SymbolSpec::separable(self.m, w, self.domain.clone()),
        }
    }

    /// The coefficient `a + δ·p` for the configured perturbation `p`.
    pub fn perturbed_coefficient(&self, delta: f64) -> Result<CoefficientField, ConfigError> {
        let Some(p) = &self.verify.perturbation else {
            return Err(ConfigError::Invalid {
                path: "verify.perturbation".into(),
                message: "required for perturbation runs".into(),
            });
        };
        combine(&self.coefficient, p, delta, &self.domain)
    }
}

fn as_expr(f: &CoefficientField) -> Option<Expr> {
    match f {
        CoefficientField::Constant(c) => Some(Expr::Num(*c)),
        CoefficientField::Expr { expr, .. } => Some(expr.clone()),
        CoefficientField::Tabulated(_) => None,
    }
}

/// `a + δ·p`, symbolic when both are expressions, otherwise tabulated at the
/// resolution of the table.
fn combine(a: &CoefficientField, p: &CoefficientField, delta: f64, domain: &DomainSpec) -> Result<CoefficientField, ConfigError> {
    if delta == 0.0 {
        return Ok(a.clone());
    }
    if let (Some(ea), Some(ep)) = (as_expr(a), as_expr(p)) {
        let expr = Expr::Binary(
            BinOp::Add,
            Box::new(ea),
            Box::new(Expr::Binary(BinOp::Mul, Box::new(Expr::Num(delta)), Box::new(ep))),
        );
        return Ok(CoefficientField::Expr { source: expr.to_string(), expr });
    }
    let samples = [a, p]
        .iter()
        .filter_map(|f| match f {
            CoefficientField::Tabulated(t) => Some(t.shape()[0]),
            _ => None,
        })
        .max()
        .unwrap_or(2);
    let invalid = |e: heatlab::field::FieldError| ConfigError::Invalid {
        path: "verify.perturbation".into(),
        message: e.to_string(),
    };
    let table = Table::sample(domain, samples, |x| {
        a.eval(x).unwrap_or(f64::NAN) + delta * p.eval(x).unwrap_or(f64::NAN)
    })
    .map_err(invalid)?;
    Ok(CoefficientField::Tabulated(table))
}

#[derive(Debug, Clone, PartialEq)]
enum Item {
    Number(f64),
    Text(String),
    Word(String),
}

#[derive(Debug, Clone)]
struct Entry {
    path: String,
    line: usize,
    /// Column of the first character of each item.
    columns: Vec<usize>,
    items: Vec<Item>,
}

const KEYS: &[(&str, &[&str])] = &[
    ("", &["scenario", "m", "n", "seed"]),
    ("domain", &["lo", "hi", "points"]),
    ("operator", &["symbol", "a", "a_table", "weights", "potential"]),
    ("kernel", &["times", "t_min", "t_max", "t_count", "max_offset", "source"]),
    ("distance", &["m_values", "pairs", "neighbourhood"]),
    ("kato", &["vminus", "epsilons", "lambdas", "deltas"]),
    ("twist", &["lambda_min", "lambda_max", "per_decade", "profile"]),
    ("verify", &["tolerance", "slack", "perturbation", "perturbation_table", "deltas", "delta"]),
    ("output", &["dir"]),
];

fn is_ident(s: &str) -> bool {
    let mut chars = s.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_alphabetic() || c == '_')
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

fn parse_items(text: &str, line: usize, start_col: usize) -> Result<(Vec<Item>, Vec<usize>), ConfigError> {
    let chars: Vec<char> = text.chars().collect();
    let mut items = Vec::new();
    let mut columns = Vec::new();
    let mut i = 0;
    let err = |col: usize, message: String| ConfigError::Syntax { line, column: start_col + col, message };
    loop {
        while i < chars.len() && chars[i].is_whitespace() {
            i += 1;
        }
        if i >= chars.len() {
            return Err(err(i, "expected a value".into()));
        }
        columns.push(start_col + i);
        if chars[i] == '"' {
            let open = i;
            i += 1;
            let begin = i;
            while i < chars.len() && chars[i] != '"' {
                i += 1;
            }
            if i >= chars.len() {
                return Err(err(open, "unterminated string".into()));
            }
            items.push(Item::Text(chars[begin..i].iter().collect()));
            i += 1;
        } else {
            let begin = i;
            while i < chars.len() && chars[i] != ',' && !chars[i].is_whitespace() {
                i += 1;
            }
            let word: String = chars[begin..i].iter().collect();
            if let Ok(v) = word.parse::<f64>() {
                if !v.is_finite() {
                    return Err(err(begin, format!("non-finite number `{word}`")));
                }
                items.push(Item::Number(v));
            } else if is_ident(&word) {
                items.push(Item::Word(word));
            } else {
                return Err(err(begin, format!("cannot read `{word}` as a number, string or name")));
            }
        }
        while i < chars.len() && chars[i].is_whitespace() {
            i += 1;
        }
        if i >= chars.len() {
            return Ok((items, columns));
        }
        if chars[i] != ',' {
            return Err(err(i, format!("expected `,` or end of line, found `{}`", chars[i])));
        }
        i += 1;
    }
}

/// Strips a `#` comment that is not inside a string.
fn strip_comment(line: &str) -> &str {
    let mut quoted = false;
    for (k, c) in line.char_indices() {
        match c {
            '"' => quoted = !quoted,
            '#' if !quoted => return &line[..k],
            _ => {}
        }
    }
    line
}

fn parse_entries(text: &str) -> Result<Vec<Entry>, ConfigError> {
    let mut section = String::new();
    let mut entries: Vec<Entry> = Vec::new();
    let mut seen = BTreeSet::new();
    for (k, raw) in text.lines().enumerate() {
        let line = k + 1;
        let body = strip_comment(raw);
        let trimmed = body.trim();
        if trimmed.is_empty() {
            continue;
        }
        let indent = body.chars().take_while(|c| c.is_whitespace()).count();
        if let Some(rest) = trimmed.strip_prefix('[') {
            let Some(name) = rest.strip_suffix(']') else {
                return Err(ConfigError::Syntax { line, column: indent + 1, message: "unclosed section header".into() });
            };
            let name = name.trim();
            if !is_ident(name) {
                return Err(ConfigError::Syntax { line, column: indent + 2, message: format!("bad section name `{name}`") });
            }
            if !KEYS.iter().any(|(s, _)| *s == name) {
                return Err(ConfigError::UnknownKey { line, path: format!("[{name}]") });
            }
            section = name.to_string();
            continue;
        }
        let Some(eq) = body.find('=') else {
            return Err(ConfigError::Syntax { line, column: indent + 1, message: "expected `key = value`".into() });
        };
        let key = body[..eq].trim();
        if !is_ident(key) {
            return Err(ConfigError::Syntax { line, column: indent + 1, message: format!("bad key `{key}`") });
        }
        let path = if section.is_empty() { key.to_string() } else { format!("{section}.{key}") };
        let known = KEYS
            .iter()
            .find(|(s, _)| *s == section)
            .is_some_and(|(_, keys)| keys.contains(&key));
        if !known {
            return Err(ConfigError::UnknownKey { line, path });
        }
        if !seen.insert(path.clone()) {
            return Err(ConfigError::Duplicate { line, path });
        }
        let value_col = body[..eq + 1].chars().count() + 1;
        let (items, columns) = parse_items(&body[eq + 1..], line, value_col)?;
        entries.push(Entry { path, line, columns, items });
    }
    Ok(entries)
}

struct Reader {
    entries: Vec<Entry>,
}

impl Reader {
    fn get(&self, path: &str) -> Option<&Entry> {
        self.entries.iter().find(|e| e.path == path)
    }

    fn invalid(path: &str, message: impl Into<String>) -> ConfigError {
        ConfigError::Invalid { path: path.into(), message: message.into() }
    }

    fn numbers(&self, path: &str) -> Result<Option<Vec<f64>>, ConfigError> {
        let Some(e) = self.get(path) else { return Ok(None) };
        e.items
            .iter()
            .map(|it| match it {
                Item::Number(v) => Ok(*v),
                other => Err(Self::invalid(path, format!("expected numbers, found {other:?}"))),
            })
            .collect::<Result<Vec<_>, _>>()
            .map(Some)
    }

    fn number(&self, path: &str) -> Result<Option<f64>, ConfigError> {
        match self.numbers(path)? {
            None => Ok(None),
            Some(v) if v.len() == 1 => Ok(Some(v[0])),
            Some(_) => Err(Self::invalid(path, "expected a single number")),
        }
    }

    fn count(&self, path: &str) -> Result<Option<u64>, ConfigError> {
        match self.number(path)? {
            None => Ok(None),
            Some(v) if v >= 0.0 && v.fract() == 0.0 && v <= 9.0e15 => Ok(Some(v as u64)),
            Some(v) => Err(Self::invalid(path, format!("expected a non-negative integer, found {v}"))),
        }
    }

    fn word(&self, path: &str) -> Result<Option<String>, ConfigError> {
        let Some(e) = self.get(path) else { return Ok(None) };
        match e.items.as_slice() {
            [Item::Word(w)] | [Item::Text(w)] => Ok(Some(w.clone())),
            _ => Err(Self::invalid(path, "expected a single name")),
        }
    }

    /// A number or an expression string in `n` variables.
    fn field(&self, path: &str, n: usize) -> Result<Option<CoefficientField>, ConfigError> {
        let Some(e) = self.get(path) else { return Ok(None) };
        match e.items.as_slice() {
            [Item::Number(v)] => Ok(Some(CoefficientField::Constant(*v))),
            [Item::Text(s)] => match expr::parse(s, n) {
                Ok(expr) => Ok(Some(CoefficientField::Expr { source: s.clone(), expr })),
                Err(err) => Err(ConfigError::Expression {
                    line: e.line,
                    // past the opening quote
                    column: e.columns[0] + 1 + err.offset,
                    path: path.into(),
                    message: err.to_string(),
                }),
            },
            _ => Err(Self::invalid(path, "expected a number or a quoted expression")),
        }
    }
}

fn per_axis<T: Copy>(path: &str, v: Vec<T>, n: usize) -> Result<Vec<T>, ConfigError> {
    match v.len() {
        1 => Ok(vec![v[0]; n]),
        k if k == n => Ok(v),
        k => Err(Reader::invalid(path, format!("expected 1 or {n} values, found {k}"))),
    }
}

fn positive_list(path: &str, v: &[f64]) -> Result<(), ConfigError> {
    if v.is_empty() || v.iter().any(|x| !(*x > 0.0)) {
        return Err(Reader::invalid(path, "expected positive values"));
    }
    Ok(())
}

pub fn parse_config(text: &str) -> Result<RunConfig, ConfigError> {
    let r = Reader { entries: parse_entries(text)? };

    let scenario = match r.word("scenario")? {
        None => Scenario::Verify,
        Some(s) => Scenario::from_name(&s).ok_or_else(|| Reader::invalid("scenario", format!("unknown scenario `{s}`")))?,
    };
    let m = r.count("m")?.ok_or_else(|| Reader::invalid("m", "required"))?;
    if !(1..=4).contains(&m) {
        return Err(Reader::invalid("m", format!("order must be 1 to 4, found {m}")));
    }
    let m = m as u32;
    let n = r.count("n")?.unwrap_or(1) as usize;
    if !(1..=2).contains(&n) {
        return Err(Reader::invalid("n", format!("dimension must be 1 or 2, found {n}")));
    }

    let lo = per_axis("domain.lo", r.numbers("domain.lo")?.ok_or_else(|| Reader::invalid("domain.lo", "required"))?, n)?;
    let hi = per_axis("domain.hi", r.numbers("domain.hi")?.ok_or_else(|| Reader::invalid("domain.hi", "required"))?, n)?;
    let domain = DomainSpec::new(lo, hi).map_err(|e| Reader::invalid("domain", e.to_string()))?;
    let points = per_axis("domain.points", r.numbers("domain.points")?.unwrap_or(vec![200.0]), n)?;
    if points.iter().any(|p| !(*p >= 4.0) || p.fract() != 0.0) {
        return Err(Reader::invalid("domain.points", "expected integers of at least 4"));
    }
    let points: Vec<usize> = points.iter().map(|p| *p as usize).collect();

    let mut cfg = RunConfig::new(scenario, m, domain.clone(), points);
    if let Some(seed) = r.count("seed")? {
        cfg.seed = seed;
    }

    cfg.symbol = match r.word("operator.symbol")?.as_deref() {
        None => cfg.symbol,
        Some("scalar") if n == 1 => SymbolKind::Scalar,
        Some("scalar") => return Err(Reader::invalid("operator.symbol", "`scalar` needs n = 1")),
        Some("laplacian") => SymbolKind::Laplacian,
        Some("separable") => {
            let w = r.numbers("operator.weights")?.ok_or_else(|| Reader::invalid("operator.weights", "required for `separable`"))?;
            positive_list("operator.weights", &w)?;
            SymbolKind::Separable(per_axis("operator.weights", w, n)?)
        }
        Some(other) => return Err(Reader::invalid("operator.symbol", format!("unknown symbol `{other}`"))),
    };
    if r.get("operator.weights").is_some() && !matches!(cfg.symbol, SymbolKind::Separable(_)) {
        return Err(Reader::invalid("operator.weights", "only used with `symbol = separable`"));
    }
    match (r.field("operator.a", n)?, r.numbers("operator.a_table")?) {
        (Some(_), Some(_)) => return Err(Reader::invalid("operator.a_table", "give either `a` or `a_table`")),
        (Some(a), None) => cfg.coefficient = a,
        (None, Some(values)) => cfg.coefficient = table_field("operator.a_table", &domain, values)?,
        (None, None) => {}
    }
    cfg.potential = r.field("operator.potential", n)?;

    let (t_min, t_max) = (r.number("kernel.t_min")?, r.number("kernel.t_max")?);
    match (t_min, t_max) {
        (Some(a), Some(b)) if a > 0.0 && a <= b => cfg.kernel.t_window = Some((a, b)),
        (None, None) => {}
        _ => return Err(Reader::invalid("kernel.t_min", "need both t_min and t_max with 0 < t_min <= t_max")),
    }
    if let Some(t) = r.numbers("kernel.times")? {
        positive_list("kernel.times", &t)?;
        cfg.kernel.times = Some(t);
    }
    if let Some(c) = r.count("kernel.t_count")? {
        if c < 1 {
            return Err(Reader::invalid("kernel.t_count", "need at least one time"));
        }
        cfg.kernel.t_count = c as usize;
    }
    if let Some(o) = r.number("kernel.max_offset")? {
        positive_list("kernel.max_offset", &[o])?;
        cfg.kernel.max_offset = Some(o);
    }
    if let Some(s) = r.numbers("kernel.source")? {
        let s = per_axis("kernel.source", s, n)?;
        if s.iter().enumerate().any(|(k, v)| *v < domain.lo[k] || *v > domain.hi[k]) {
            return Err(Reader::invalid("kernel.source", "outside the domain"));
        }
        cfg.kernel.source = Some(s);
    }

    if let Some(mv) = r.numbers("distance.m_values")? {
        positive_list("distance.m_values", &mv)?;
        cfg.distance.m_values = mv;
    }
    if let Some(p) = r.numbers("distance.pairs")? {
        if p.len() % 2 != 0 {
            return Err(Reader::invalid("distance.pairs", "expected an even number of endpoints"));
        }
        cfg.distance.pairs = p.chunks(2).map(|c| (c[0], c[1])).collect();
    }
    if let Some(nb) = r.count("distance.neighbourhood")? {
        if nb != 16 && nb != 32 {
            return Err(Reader::invalid("distance.neighbourhood", "expected 16 or 32"));
        }
        cfg.distance.neighbourhood = nb as usize;
    }

    cfg.kato.vminus = r.field("kato.vminus", n)?;
    if let Some(e) = r.numbers("kato.epsilons")? {
        if e.is_empty() || e.iter().any(|x| !(*x > 0.0 && *x < 1.0)) {
            return Err(Reader::invalid("kato.epsilons", "expected values in (0, 1)"));
        }
        cfg.kato.epsilons = e;
    }
    if let Some(l) = r.numbers("kato.lambdas")? {
        positive_list("kato.lambdas", &l)?;
        cfg.kato.lambdas = l;
    }
    if let Some(d) = r.numbers("kato.deltas")? {
        positive_list("kato.deltas", &d)?;
        cfg.kato.deltas = d;
    }

    if let Some(v) = r.number("twist.lambda_min")? {
        cfg.twist.lambda_min = v;
    }
    if let Some(v) = r.number("twist.lambda_max")? {
        cfg.twist.lambda_max = v;
    }
    if !(cfg.twist.lambda_min > 0.0 && cfg.twist.lambda_max >= 10.0 * cfg.twist.lambda_min) {
        return Err(Reader::invalid("twist.lambda_max", "the sweep must span at least one decade above a positive minimum"));
    }
    if let Some(c) = r.count("twist.per_decade")? {
        if c < 2 {
            return Err(Reader::invalid("twist.per_decade", "need at least 2"));
        }
        cfg.twist.per_decade = c as usize;
    }
    cfg.twist.profile = r.field("twist.profile", n)?;

    if let Some(v) = r.number("verify.tolerance")? {
        positive_list("verify.tolerance", &[v])?;
        cfg.verify.tolerance = v;
    }
    if let Some(v) = r.number("verify.slack")? {
        if !(v >= 0.0) {
            return Err(Reader::invalid("verify.slack", "expected a non-negative number"));
        }
        cfg.verify.slack = v;
    }
    match (r.field("verify.perturbation", n)?, r.numbers("verify.perturbation_table")?) {
        (Some(_), Some(_)) => {
            return Err(Reader::invalid("verify.perturbation_table", "give either `perturbation` or `perturbation_table`"))
        }
        (Some(p), None) => cfg.verify.perturbation = Some(p),
        (None, Some(values)) => cfg.verify.perturbation = Some(table_field("verify.perturbation_table", &domain, values)?),
        (None, None) => {}
    }
    if let Some(d) = r.numbers("verify.deltas")? {
        positive_list("verify.deltas", &d)?;
        cfg.verify.deltas = d;
    }
    if let Some(d) = r.number("verify.delta")? {
        if !(d >= 0.0) {
            return Err(Reader::invalid("verify.delta", "expected a non-negative number"));
        }
        cfg.verify.delta = d;
    }

    cfg.output = r.word("output.dir")?.map(PathBuf::from);
    Ok(cfg)
}

fn table_field(path: &str, domain: &DomainSpec, values: Vec<f64>) -> Result<CoefficientField, ConfigError> {
    if domain.dim() != 1 {
        return Err(Reader::invalid(path, "tables are supported for n = 1"));
    }
    let len = values.len();
    Table::new(domain.lo.clone(), domain.hi.clone(), vec![len], values)
        .map(CoefficientField::Tabulated)
        .map_err(|e| Reader::invalid(path, e.to_string()))
}

pub fn load_config(path: &Path) -> Result<RunConfig, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    })?;
    parse_config(&text)
}
