//! Job parsing, dispatch, and report assembly for the `premaps` binary.
//!
//! A job is a single JSON document naming ensembles, trace expressions, and
//! the modes to run.  Values in reports are exact: rationals are rendered as
//! `"p/q"` strings and Laurent polynomials as `{"N^k": coeff}` maps (with a
//! `*c^j` suffix for aspect-ratio powers), so every report value re-parses
//! to exactly the original.

use std::collections::BTreeMap;
use std::str::FromStr;

use num::{BigRational, ToPrimitive};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use premaps::asymptotics::{
    freeness_defect, phi1, phi2, second_order_rhs, standard_pair, LimitValue, Provenance,
};
use premaps::ensembles::{
    exact_centred_cumulant, exact_moment, exact_trace_cumulant, EnsembleModel, Letter,
    ModelSet, RationalMatrix, TraceExpression,
};
use premaps::laurent::{CPolynomial, LaurentValue};
use premaps::montecarlo::{estimate, wishart_c_value, McFactor, McTarget};
use premaps::oracle::wick_expectation;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("schema error: {0}")]
    Schema(String),
    #[error("usage error: {0}")]
    Usage(String),
    #[error(transparent)]
    Core(#[from] premaps::Error),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

pub type CliResult<T> = Result<T, CliError>;

// ---------------------------------------------------------------------------
// Job specification
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JobSpec {
    pub ensembles: BTreeMap<String, EnsembleSpec>,
    #[serde(default)]
    pub expressions: Vec<ExpressionSpec>,
    #[serde(default = "default_modes")]
    pub modes: Vec<Mode>,
    #[serde(default = "default_n_values")]
    pub n_values: Vec<u64>,
    #[serde(default = "default_samples")]
    pub samples: u64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_threads")]
    pub threads: usize,
    #[serde(default)]
    pub output: Option<OutputSpec>,
}

fn default_modes() -> Vec<Mode> {
    vec![Mode::Exact]
}

fn default_n_values() -> Vec<u64> {
    vec![50, 100, 200]
}

fn default_samples() -> u64 {
    20_000
}

fn default_threads() -> usize {
    1
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum EnsembleSpec {
    Goe,
    Ginibre,
    Wishart {
        #[serde(default = "default_ratio")]
        c: String,
        #[serde(default)]
        d: DSpecJson,
    },
}

fn default_ratio() -> String {
    "1".to_string()
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum DSpecJson {
    Named(String),
    Explicit {
        matrices: BTreeMap<String, Vec<Vec<String>>>,
    },
}

impl Default for DSpecJson {
    fn default() -> Self {
        DSpecJson::Named("identity".to_string())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Exact,
    Asymptotic,
    Mc,
    Oracle,
    Verify,
}

impl FromStr for Mode {
    type Err = CliError;
    fn from_str(s: &str) -> CliResult<Self> {
        match s {
            "exact" => Ok(Mode::Exact),
            "asymptotic" => Ok(Mode::Asymptotic),
            "mc" => Ok(Mode::Mc),
            "oracle" => Ok(Mode::Oracle),
            "verify" => Ok(Mode::Verify),
            other => Err(CliError::Usage(format!("unknown mode {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LetterSpec {
    pub colour: String,
    #[serde(default = "default_label")]
    pub label: u32,
    #[serde(default)]
    pub transpose: bool,
}

fn default_label() -> u32 {
    1
}

impl LetterSpec {
    fn to_letter(&self) -> Letter {
        Letter {
            colour: self.colour.clone(),
            label: self.label,
            transpose: self.transpose,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ExprKind {
    Moment,
    Cumulant,
    CentredCumulant,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExpressionSpec {
    pub name: String,
    pub kind: ExprKind,
    #[serde(default)]
    pub traces: Vec<Vec<LetterSpec>>,
    #[serde(default)]
    pub groups: Vec<Vec<Vec<LetterSpec>>>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    pub path: String,
    #[serde(default = "default_format")]
    pub format: String,
}

fn default_format() -> String {
    "json".to_string()
}

pub fn parse_jobspec(text: &str) -> CliResult<JobSpec> {
    serde_json::from_str(text).map_err(|e| CliError::Schema(e.to_string()))
}

fn parse_rational(s: &str) -> CliResult<BigRational> {
    BigRational::from_str(s.trim())
        .map_err(|_| CliError::Schema(format!("bad rational {s:?}")))
}

pub fn build_models(spec: &JobSpec) -> CliResult<ModelSet> {
    let mut models = ModelSet::new();
    for (colour, espec) in &spec.ensembles {
        let model = match espec {
            EnsembleSpec::Goe => EnsembleModel::Goe,
            EnsembleSpec::Ginibre => EnsembleModel::Ginibre,
            EnsembleSpec::Wishart { c, d } => {
                let ratio = parse_rational(c)?;
                match d {
                    DSpecJson::Named(name) if name == "identity" => {
                        EnsembleModel::wishart_identity(ratio)
                    }
                    DSpecJson::Named(other) => {
                        return Err(CliError::Schema(format!(
                            "unknown D specification {other:?}"
                        )))
                    }
                    DSpecJson::Explicit { matrices } => {
                        let mut mats = BTreeMap::new();
                        for (label, rows) in matrices {
                            let label: u32 = label.parse().map_err(|_| {
                                CliError::Schema(format!("bad D label {label:?}"))
                            })?;
                            let rows: Vec<Vec<BigRational>> = rows
                                .iter()
                                .map(|row| {
                                    row.iter().map(|v| parse_rational(v)).collect::<CliResult<_>>()
                                })
                                .collect::<CliResult<_>>()?;
                            mats.insert(label, RationalMatrix::from_rows(rows)?);
                        }
                        EnsembleModel::wishart_explicit(ratio, mats)?
                    }
                }
            }
        };
        models.insert(colour, model);
    }
    Ok(models)
}

// ---------------------------------------------------------------------------
// Value rendering: exact round-trip serialization
// ---------------------------------------------------------------------------

fn monomial_key(n_exp: i64, c_exp: u32) -> String {
    if c_exp == 0 {
        format!("N^{n_exp}")
    } else {
        format!("N^{n_exp}*c^{c_exp}")
    }
}

pub fn render_laurent(v: &LaurentValue) -> BTreeMap<String, String> {
    v.terms()
        .map(|(&(n, c), coeff)| (monomial_key(n, c), coeff.to_string()))
        .collect()
}

pub fn parse_laurent(map: &BTreeMap<String, String>) -> CliResult<LaurentValue> {
    let mut v = LaurentValue::zero();
    for (key, coeff) in map {
        let (n_exp, c_exp) = parse_monomial_key(key)?;
        v.add_term(n_exp, c_exp, &parse_rational(coeff)?);
    }
    Ok(v)
}

fn parse_monomial_key(key: &str) -> CliResult<(i64, u32)> {
    let mut n_exp = 0i64;
    let mut c_exp = 0u32;
    for part in key.split('*') {
        if let Some(k) = part.strip_prefix("N^") {
            n_exp = k
                .parse()
                .map_err(|_| CliError::Schema(format!("bad key {key:?}")))?;
        } else if let Some(j) = part.strip_prefix("c^") {
            c_exp = j
                .parse()
                .map_err(|_| CliError::Schema(format!("bad key {key:?}")))?;
        } else {
            return Err(CliError::Schema(format!("bad key {key:?}")));
        }
    }
    Ok((n_exp, c_exp))
}

pub fn render_cpoly(v: &CPolynomial) -> BTreeMap<String, String> {
    v.terms()
        .map(|(&c, coeff)| (format!("c^{c}"), coeff.to_string()))
        .collect()
}

pub fn parse_cpoly(map: &BTreeMap<String, String>) -> CliResult<CPolynomial> {
    let mut v = CPolynomial::zero();
    for (key, coeff) in map {
        let c: u32 = key
            .strip_prefix("c^")
            .and_then(|j| j.parse().ok())
            .ok_or_else(|| CliError::Schema(format!("bad key {key:?}")))?;
        v.add_term(c, &parse_rational(coeff)?);
    }
    Ok(v)
}

// ---------------------------------------------------------------------------
// Report
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub expressions: Vec<ExpressionReport>,
    pub verify_pass: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct ExpressionReport {
    pub name: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub exact: Option<BTreeMap<String, String>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub asymptotic: Option<AsymptoticReport>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub mc: Vec<McRow>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub oracle: Vec<OracleRow>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub verify: Vec<VerifyRow>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub errors: Vec<String>,
    #[serde(skip_serializing_if = "std::ops::Not::not")]
    pub guard_exceeded: bool,
}

impl ExpressionReport {
    fn new(name: &str) -> Self {
        Self {
            name: name.to_string(),
            exact: None,
            asymptotic: None,
            mc: Vec::new(),
            oracle: Vec::new(),
            verify: Vec::new(),
            errors: Vec::new(),
            guard_exceeded: false,
        }
    }

    fn record_error(&mut self, err: &premaps::Error) {
        if matches!(err, premaps::Error::GuardExceeded { .. }) {
            self.guard_exceeded = true;
        }
        self.errors.push(err.to_string());
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct AsymptoticReport {
    pub value: BTreeMap<String, String>,
    pub provenance: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct McRow {
    pub n: u64,
    pub samples: u64,
    pub seed: u64,
    pub mean: f64,
    pub std_error: f64,
    pub exact: String,
    pub abs_z: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct VerifyRow {
    pub check: String,
    pub pass: bool,
    pub lhs: String,
    pub rhs: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct OracleRow {
    pub n: u64,
    pub value: String,
}

// ---------------------------------------------------------------------------
// Runner
// ---------------------------------------------------------------------------

struct ParsedExpression {
    kind: ExprKind,
    traces: Vec<Vec<Letter>>,
    groups: Vec<Vec<Vec<Letter>>>,
}

fn parse_expression(spec: &ExpressionSpec) -> CliResult<ParsedExpression> {
    match spec.kind {
        ExprKind::Moment | ExprKind::Cumulant => {
            if spec.traces.is_empty() && spec.kind == ExprKind::Cumulant {
                return Err(CliError::Schema(format!(
                    "expression {:?}: cumulant needs traces",
                    spec.name
                )));
            }
            if !spec.groups.is_empty() {
                return Err(CliError::Schema(format!(
                    "expression {:?}: groups only apply to centred_cumulant",
                    spec.name
                )));
            }
            Ok(ParsedExpression {
                kind: spec.kind,
                traces: spec
                    .traces
                    .iter()
                    .map(|t| t.iter().map(LetterSpec::to_letter).collect())
                    .collect(),
                groups: Vec::new(),
            })
        }
        ExprKind::CentredCumulant => {
            if spec.groups.is_empty() {
                return Err(CliError::Schema(format!(
                    "expression {:?}: centred_cumulant needs groups",
                    spec.name
                )));
            }
            Ok(ParsedExpression {
                kind: spec.kind,
                traces: Vec::new(),
                groups: spec
                    .groups
                    .iter()
                    .map(|g| {
                        g.iter()
                            .map(|f| f.iter().map(LetterSpec::to_letter).collect())
                            .collect()
                    })
                    .collect(),
            })
        }
    }
}

impl ParsedExpression {
    fn all_letters(&self) -> Vec<Letter> {
        match self.kind {
            ExprKind::Moment | ExprKind::Cumulant => {
                self.traces.iter().flatten().cloned().collect()
            }
            ExprKind::CentredCumulant => {
                self.groups.iter().flatten().flatten().cloned().collect()
            }
        }
    }

    /// The exact Laurent value in the normalization named by the kind:
    /// normalized-trace products for moments, unnormalized-trace cumulants
    /// otherwise.
    fn exact(&self, models: &ModelSet) -> premaps::Result<LaurentValue> {
        match self.kind {
            ExprKind::Moment => {
                exact_moment(&TraceExpression::new(self.traces.clone())?, models)
            }
            ExprKind::Cumulant => exact_trace_cumulant(&self.traces, models),
            ExprKind::CentredCumulant => exact_centred_cumulant(&self.groups, models),
        }
    }

    fn asymptotic(&self, models: &ModelSet) -> premaps::Result<LimitValue> {
        match self.kind {
            ExprKind::Moment if self.traces.len() == 1 && single_colour(&self.traces[0]) => {
                phi1(&self.traces[0], models)
            }
            ExprKind::Cumulant
                if self.traces.len() == 2
                    && single_colour(&self.traces[0])
                    && single_colour(&self.traces[1])
                    && self.traces[0][0].colour == self.traces[1][0].colour =>
            {
                phi2(&self.traces[0], &self.traces[1], models)
            }
            _ => Ok(LimitValue {
                value: self.exact(models)?.constant_term(),
                provenance: Provenance::ExactConstantTerm,
            }),
        }
    }

    /// Monte Carlo target plus the scale taking the estimator's output to
    /// the exact value's normalization.
    fn mc_target(&self, n: u64) -> premaps::Result<(McTarget, f64)> {
        let uncentred = |t: &Vec<Letter>| McFactor {
            letters: t.clone(),
            centred: false,
        };
        match self.kind {
            ExprKind::Moment => Ok((
                McTarget::MeanProduct(self.traces.iter().map(|t| vec![uncentred(t)]).collect()),
                1.0,
            )),
            ExprKind::Cumulant => match self.traces.len() {
                1 => Ok((
                    McTarget::MeanProduct(vec![vec![uncentred(&self.traces[0])]]),
                    n as f64,
                )),
                2 => Ok((
                    McTarget::Covariance(
                        vec![uncentred(&self.traces[0])],
                        vec![uncentred(&self.traces[1])],
                    ),
                    1.0,
                )),
                r => Err(premaps::Error::Unsupported(format!(
                    "Monte Carlo cumulants support r in {{1,2}}, got {r}"
                ))),
            },
            ExprKind::CentredCumulant => {
                let group = |g: &Vec<Vec<Letter>>| -> Vec<McFactor> {
                    g.iter()
                        .map(|f| McFactor {
                            letters: f.clone(),
                            centred: true,
                        })
                        .collect()
                };
                match self.groups.len() {
                    1 => Ok((
                        McTarget::MeanProduct(vec![group(&self.groups[0])]),
                        n as f64,
                    )),
                    2 => Ok((
                        McTarget::Covariance(group(&self.groups[0]), group(&self.groups[1])),
                        1.0,
                    )),
                    r => Err(premaps::Error::Unsupported(format!(
                        "Monte Carlo cumulants support r in {{1,2}}, got {r}"
                    ))),
                }
            }
        }
    }

    fn verify_rows(&self, models: &ModelSet) -> premaps::Result<Vec<VerifyRow>> {
        let mut rows = Vec::new();
        match self.kind {
            ExprKind::CentredCumulant if self.groups.len() == 1 => {
                let defect = freeness_defect(&self.groups[0], models)?;
                let limit = defect.constant_term();
                rows.push(VerifyRow {
                    check: "first-order zero limit".to_string(),
                    pass: limit.is_zero(),
                    lhs: limit.to_string(),
                    rhs: "0".to_string(),
                });
            }
            ExprKind::CentredCumulant if self.groups.len() == 2 => {
                let lhs = exact_centred_cumulant(&self.groups, models)?.constant_term();
                let rhs = second_order_rhs(&self.groups[0], &self.groups[1], models)?;
                let check = if self.groups[0].len() == self.groups[1].len() {
                    "second-order spoke identity"
                } else {
                    "zero-limit (p != q)"
                };
                rows.push(VerifyRow {
                    check: check.to_string(),
                    pass: lhs == rhs.value,
                    lhs: lhs.to_string(),
                    rhs: rhs.value.to_string(),
                });
            }
            ExprKind::Cumulant if self.traces.len() >= 3 => {
                let value = exact_trace_cumulant(&self.traces, models)?;
                let max_exp = value.max_n_exponent();
                rows.push(VerifyRow {
                    check: "higher-cumulant decay".to_string(),
                    pass: max_exp.map_or(true, |e| e < 0),
                    lhs: match max_exp {
                        Some(e) => format!("max N exponent {e}"),
                        None => "0".to_string(),
                    },
                    rhs: "all exponents < 0".to_string(),
                });
            }
            _ => {}
        }
        Ok(rows)
    }
}

fn single_colour(word: &[Letter]) -> bool {
    word.first()
        .map(|l| word.iter().all(|m| m.colour == l.colour))
        .unwrap_or(false)
}

pub fn run_job(spec: &JobSpec) -> CliResult<Report> {
    let models = build_models(spec)?;
    let mut expressions = Vec::new();
    for espec in &spec.expressions {
        let mut report = ExpressionReport::new(&espec.name);
        let parsed = match parse_expression(espec) {
            Ok(p) => p,
            Err(CliError::Schema(msg)) => return Err(CliError::Schema(msg)),
            Err(e) => return Err(e),
        };
        let letters = parsed.all_letters();

        // The exact value anchors the MC comparison, so compute it whenever
        // either mode is requested.
        let want_exact =
            spec.modes.contains(&Mode::Exact) || spec.modes.contains(&Mode::Mc);
        let exact_value = if want_exact {
            match parsed.exact(&models) {
                Ok(v) => {
                    if spec.modes.contains(&Mode::Exact) {
                        report.exact = Some(render_laurent(&v));
                    }
                    Some(v)
                }
                Err(e) => {
                    report.record_error(&e);
                    None
                }
            }
        } else {
            None
        };

        if spec.modes.contains(&Mode::Asymptotic) {
            match parsed.asymptotic(&models) {
                Ok(limit) => {
                    report.asymptotic = Some(AsymptoticReport {
                        value: render_cpoly(&limit.value),
                        provenance: format!("{:?}", limit.provenance),
                    });
                }
                Err(e) => report.record_error(&e),
            }
        }

        if spec.modes.contains(&Mode::Oracle) {
            let mut any = false;
            for &n in &spec.n_values {
                if n > premaps::oracle::ORACLE_MAX_N {
                    continue;
                }
                any = true;
                let expr = match parsed.kind {
                    ExprKind::Moment => TraceExpression::new(parsed.traces.clone()),
                    _ => Err(premaps::Error::Unsupported(
                        "oracle mode applies to moment expressions".to_string(),
                    )),
                };
                match expr.and_then(|e| wick_expectation(&e, &models, n)) {
                    Ok(v) => report.oracle.push(OracleRow {
                        n,
                        value: v.to_string(),
                    }),
                    Err(e) => report.record_error(&e),
                }
            }
            if !any {
                report.errors.push(format!(
                    "oracle mode needs some N <= {}",
                    premaps::oracle::ORACLE_MAX_N
                ));
            }
        }

        if spec.modes.contains(&Mode::Mc) {
            for &n in &spec.n_values {
                let run = || -> premaps::Result<McRow> {
                    let (target, scale) = parsed.mc_target(n)?;
                    let est = estimate(&target, &models, n, spec.samples, spec.seed, spec.threads)?;
                    let mean = est.mean * scale;
                    let std_error = est.std_error * scale;
                    let (exact_str, abs_z) = match &exact_value {
                        Some(v) => {
                            let c = wishart_c_value(&models, &letters, n)?;
                            let exact = v.eval(&num::BigRational::from_integer(n.into()), &c);
                            let exact_f = exact.to_f64().unwrap_or(f64::NAN);
                            let z = if std_error > 0.0 {
                                (mean - exact_f).abs() / std_error
                            } else if mean == exact_f {
                                0.0
                            } else {
                                f64::INFINITY
                            };
                            (exact.to_string(), z)
                        }
                        None => ("".to_string(), f64::NAN),
                    };
                    Ok(McRow {
                        n,
                        samples: spec.samples,
                        seed: spec.seed,
                        mean,
                        std_error,
                        exact: exact_str,
                        abs_z,
                    })
                };
                match run() {
                    Ok(row) => report.mc.push(row),
                    Err(e) => report.record_error(&e),
                }
            }
        }

        if spec.modes.contains(&Mode::Verify) {
            match parsed.verify_rows(&models) {
                Ok(rows) => report.verify.extend(rows),
                Err(e) => report.record_error(&e),
            }
        }

        expressions.push(report);
    }

    let verify_pass = expressions
        .iter()
        .flat_map(|e| &e.verify)
        .all(|row| row.pass);
    Ok(Report {
        expressions,
        verify_pass,
    })
}

/// Process exit code: 0 pass, 1 verification failure, 2 usage/schema error
/// (raised earlier), 3 guard exceeded for every expression.
pub fn exit_code(report: &Report) -> i32 {
    if !report.expressions.is_empty()
        && report
            .expressions
            .iter()
            .all(|e| e.guard_exceeded && e.exact.is_none())
    {
        return 3;
    }
    if !report.verify_pass {
        return 1;
    }
    0
}

pub fn render_report_json(report: &Report) -> String {
    serde_json::to_string_pretty(report).expect("report serializes")
}

/// CSV view of the Monte Carlo rows.
pub fn render_report_csv(report: &Report) -> String {
    let mut out = String::from("expression,N,samples,seed,mean,std_error,exact,abs_z\n");
    for expr in &report.expressions {
        for row in &expr.mc {
            let name = if expr.name.contains(',') || expr.name.contains('"') {
                format!("\"{}\"", expr.name.replace('"', "\"\""))
            } else {
                expr.name.clone()
            };
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{}\n",
                name, row.n, row.samples, row.seed, row.mean, row.std_error, row.exact, row.abs_z
            ));
        }
    }
    out
}

// ---------------------------------------------------------------------------
// Built-in verification suites
// ---------------------------------------------------------------------------

/// The first-order suite: every alternating centred word of length 2..=4
/// with factor lengths 1..=2 over the colour pair must have vanishing
/// constant term.
pub fn first_order_suite(kind1: &str, kind2: &str) -> CliResult<Vec<VerifyRow>> {
    let (models, c1, c2) = standard_pair(kind1, kind2)?;
    let mut rows = Vec::new();
    for p in 2..=4usize {
        for len_mask in 0..(1u32 << p) {
            let factors: Vec<Vec<Letter>> = (0..p)
                .map(|i| {
                    let colour = if i % 2 == 0 { &c1 } else { &c2 };
                    let len = if len_mask >> i & 1 == 1 { 2 } else { 1 };
                    vec![Letter::plain(colour); len]
                })
                .collect();
            let limit = freeness_defect(&factors, &models)?.constant_term();
            let lengths: Vec<usize> = factors.iter().map(|f| f.len()).collect();
            rows.push(VerifyRow {
                check: format!("first-order {kind1}/{kind2} p={p} lengths={lengths:?}"),
                pass: limit.is_zero(),
                lhs: limit.to_string(),
                rhs: "0".to_string(),
            });
        }
    }
    Ok(rows)
}

/// The second-order suite: the spoke identity on all p = q = 2 two-colour
/// cases with factor lengths 1..=2, plus one p != q zero case.
pub fn second_order_suite(kind1: &str, kind2: &str) -> CliResult<Vec<VerifyRow>> {
    let (models, c1, c2) = standard_pair(kind1, kind2)?;
    let mut rows = Vec::new();
    for mask in 0..(1u32 << 4) {
        let side = |offset: usize| -> Vec<Vec<Letter>> {
            (0..2)
                .map(|i| {
                    let colour = if i % 2 == 0 { &c1 } else { &c2 };
                    let len = if mask >> (offset + i) & 1 == 1 { 2 } else { 1 };
                    vec![Letter::plain(colour); len]
                })
                .collect()
        };
        let a = side(0);
        let b = side(2);
        let lhs = exact_centred_cumulant(&[a.clone(), b.clone()], &models)?.constant_term();
        let rhs = second_order_rhs(&a, &b, &models)?;
        rows.push(VerifyRow {
            check: format!("second-order {kind1}/{kind2} mask={mask:#06b}"),
            pass: lhs == rhs.value,
            lhs: lhs.to_string(),
            rhs: rhs.value.to_string(),
        });
    }
    // One p != q case.
    let a = vec![vec![Letter::plain(&c1)], vec![Letter::plain(&c2)]];
    let b = vec![
        vec![Letter::plain(&c1)],
        vec![Letter::plain(&c2)],
        vec![Letter::plain(&c1)],
        vec![Letter::plain(&c2)],
    ];
    let lhs = exact_centred_cumulant(&[a.clone(), b.clone()], &models)?.constant_term();
    let rhs = second_order_rhs(&a, &b, &models)?;
    rows.push(VerifyRow {
        check: format!("second-order {kind1}/{kind2} p=2 q=4 zero limit"),
        pass: lhs.is_zero() && rhs.value.is_zero(),
        lhs: lhs.to_string(),
        rhs: rhs.value.to_string(),
    });
    Ok(rows)
}

// ---------------------------------------------------------------------------
// Enumeration front end
// ---------------------------------------------------------------------------

pub struct EnumerationOutput {
    pub count: u128,
    pub members: Option<Vec<String>>,
}

pub fn enumerate(
    class: &str,
    n: Option<usize>,
    gamma: Option<&str>,
    members: bool,
) -> CliResult<EnumerationOutput> {
    use premaps::diagrams::{
        enumerate_ann_nc, enumerate_class, enumerate_disc_nc, visit_class, DiagramClass,
        DEFAULT_CLASS_GUARD,
    };
    use premaps::perm::parse_cycles;
    use std::collections::BTreeSet;

    let member_guard: u128 = 1 << 22;
    match class {
        "premaps" | "pairing-premaps" | "ginibre" => {
            let n = n.ok_or_else(|| CliError::Usage("this class needs --n".to_string()))?;
            let kind = match class {
                "premaps" => DiagramClass::AllPremaps,
                "pairing-premaps" => DiagramClass::PairingPremaps,
                _ => DiagramClass::GinibreClass,
            };
            let index: BTreeSet<i64> = (1..=n as i64).collect();
            if members {
                let list = enumerate_class(kind, &index, member_guard)?;
                Ok(EnumerationOutput {
                    count: list.len() as u128,
                    members: Some(list.iter().map(|p| p.to_string()).collect()),
                })
            } else {
                let mut count = 0u128;
                visit_class(kind, &index, DEFAULT_CLASS_GUARD, &mut |_| count += 1)?;
                Ok(EnumerationOutput {
                    count,
                    members: None,
                })
            }
        }
        "disc-nc" | "ann-nc" => {
            let text = match (gamma, n) {
                (Some(g), _) => g.to_string(),
                (None, Some(k)) if class == "disc-nc" => {
                    let cycle: Vec<String> = (1..=k).map(|i| i.to_string()).collect();
                    format!("({})", cycle.join(","))
                }
                _ => {
                    return Err(CliError::Usage(
                        "noncrossing classes need --gamma (or --n for disc-nc)".to_string(),
                    ))
                }
            };
            let (g, mentioned) = parse_cycles(&text)?;
            let list = if class == "disc-nc" {
                enumerate_disc_nc(&g, &mentioned, member_guard)?
            } else {
                enumerate_ann_nc(&g, &mentioned, member_guard)?
            };
            Ok(EnumerationOutput {
                count: list.len() as u128,
                members: members.then(|| list.iter().map(|p| p.to_string()).collect()),
            })
        }
        other => Err(CliError::Usage(format!("unknown class {other:?}"))),
    }
}
