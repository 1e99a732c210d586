//! JSON configuration files for shift specifications, spacetimes, and
//! one-dimensional languages, plus the embedded builtin corpus.
//!
//! Shift configs look like
//! `{"name": "...", "alphabet": {"modulus": 2}, "rule": {"type": "linear",
//! "terms": [{"offset": [0,0], "coeff": 1}, ...], "constant": 0}}` with
//! analogous `forbidden_patterns`, `group`, and `product` rules (product
//! factors are inline objects or paths to other config files). Spacetime
//! configs are `{"type": "spacetime", "rule": {"left_radius": L,
//! "right_radius": R, "table": [...]}, "base": {...}}`, and bare
//! one-dimensional languages are `{"type": "language", "language": {...}}`.
//! Parsing and serialization round-trip bit-exactly; unknown keys are
//! rejected; every schema violation reports a JSON-pointer location.

use crate::geometry::LatticePoint;
use crate::lang1d::{Language1D, PhaseConstraint, PhasedLanguage};
use crate::shifts::{
    Color, ForbiddenFamily, ForbiddenRule, GroupRule, GroupTable, LinearRule, ShiftSpec,
};
use crate::spacetime::{LocalRule, Spacetime};
use serde::{Deserialize, Serialize};

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("invalid JSON: {0}")]
    Syntax(String),
    #[error("config error at {pointer}: {message}")]
    Invalid { pointer: String, message: String },
}

fn invalid(pointer: impl Into<String>, message: impl Into<String>) -> ConfigError {
    ConfigError::Invalid {
        pointer: pointer.into(),
        message: message.into(),
    }
}

/// Work allowance for validating a spacetime rule against its base.
const VALIDATION_BUDGET: u64 = 1 << 20;

/// How deep product configs may nest (also bounds include chains).
const MAX_DEPTH: usize = 8;

// ---------------------------------------------------------------------------
// Parsed configurations
// ---------------------------------------------------------------------------

#[derive(Clone, Debug, PartialEq)]
pub enum ConfigPayload {
    Shift(ShiftSpec),
    Spacetime(Spacetime),
    Language(Language1D),
}

#[derive(Clone, Debug, PartialEq)]
pub struct ParsedConfig {
    pub name: Option<String>,
    pub payload: ConfigPayload,
}

impl ParsedConfig {
    pub fn as_shift(&self) -> Option<&ShiftSpec> {
        match &self.payload {
            ConfigPayload::Shift(s) => Some(s),
            _ => None,
        }
    }

    pub fn as_spacetime(&self) -> Option<&Spacetime> {
        match &self.payload {
            ConfigPayload::Spacetime(s) => Some(s),
            _ => None,
        }
    }

    pub fn as_language(&self) -> Option<&Language1D> {
        match &self.payload {
            ConfigPayload::Language(l) => Some(l),
            _ => None,
        }
    }
}

// ---------------------------------------------------------------------------
// Schema structs
// ---------------------------------------------------------------------------

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ShiftFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    name: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    alphabet: Option<AlphabetCfg>,
    rule: RuleCfg,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct AlphabetCfg {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    modulus: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    size: Option<u64>,
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "type", deny_unknown_fields, rename_all = "snake_case")]
enum RuleCfg {
    Linear {
        terms: Vec<TermCfg>,
        #[serde(default)]
        constant: u64,
    },
    ForbiddenPatterns {
        families: Vec<FamilyCfg>,
    },
    Group {
        group: GroupCfg,
        shape: Vec<[i64; 2]>,
        target: u64,
    },
    Product {
        factors: Vec<FactorCfg>,
    },
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TermCfg {
    offset: [i64; 2],
    coeff: u64,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct FamilyCfg {
    window: Vec<[i64; 2]>,
    forbidden: Vec<Vec<u64>>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct GroupCfg {
    order: u64,
    table: Vec<u64>,
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum FactorCfg {
    Path(String),
    Inline(Box<ShiftFile>),
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SpacetimeFile {
    #[serde(rename = "type")]
    kind: MustBeSpacetime,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    name: Option<String>,
    rule: SpacetimeRuleCfg,
    base: LanguageCfg,
}

#[derive(Serialize, Deserialize)]
enum MustBeSpacetime {
    #[serde(rename = "spacetime")]
    Spacetime,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SpacetimeRuleCfg {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    left_radius: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    right_radius: Option<u32>,
    /// Arbitrary window [lo, hi]; the alternative to the radius pair.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    window: Option<[i64; 2]>,
    table: Vec<u64>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct LanguageFile {
    #[serde(rename = "type")]
    kind: MustBeLanguage,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    name: Option<String>,
    language: LanguageCfg,
}

#[derive(Serialize, Deserialize)]
enum MustBeLanguage {
    #[serde(rename = "language")]
    Language,
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "type", deny_unknown_fields, rename_all = "snake_case")]
enum LanguageCfg {
    Full {
        alphabet: u64,
    },
    Sft {
        alphabet: u64,
        width: usize,
        allowed: Vec<Vec<u64>>,
    },
    Phased {
        alphabet: u64,
        period: usize,
        constraints: Vec<ConstraintCfg>,
    },
    Union {
        members: Vec<LanguageCfg>,
    },
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "type", deny_unknown_fields, rename_all = "snake_case")]
enum ConstraintCfg {
    Fixed { residue: usize, color: u64 },
    Equal { residue: usize, offset: i64 },
}

// ---------------------------------------------------------------------------
// Parsing
// ---------------------------------------------------------------------------

/// Parses a configuration file; relative product-factor paths resolve
/// against the file's directory.
pub fn parse_config(path: &std::path::Path) -> Result<ParsedConfig, ConfigError> {
    parse_at_depth(path, 0)
}

fn parse_at_depth(path: &std::path::Path, depth: usize) -> Result<ParsedConfig, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_str_at_depth(&text, path.parent(), depth)
}

/// Parses configuration text. `base_dir` anchors relative factor paths.
pub fn parse_config_str(
    text: &str,
    base_dir: Option<&std::path::Path>,
) -> Result<ParsedConfig, ConfigError> {
    parse_str_at_depth(text, base_dir, 0)
}

fn parse_str_at_depth(
    text: &str,
    base_dir: Option<&std::path::Path>,
    depth: usize,
) -> Result<ParsedConfig, ConfigError> {
    let value: serde_json::Value =
        serde_json::from_str(text).map_err(|e| ConfigError::Syntax(e.to_string()))?;
    let kind = value.get("type").and_then(|t| t.as_str());
    match kind {
        Some("spacetime") => {
            let file: SpacetimeFile = from_value(value)?;
            build_spacetime(file)
        }
        Some("language") => {
            let file: LanguageFile = from_value(value)?;
            Ok(ParsedConfig {
                name: file.name,
                payload: ConfigPayload::Language(build_language(&file.language, "/language")?),
            })
        }
        Some(other) => Err(invalid(
            "/type",
            format!("unknown config type {other:?} (expected \"spacetime\" or \"language\")"),
        )),
        None => {
            let file: ShiftFile = from_value(value)?;
            build_shift(file, base_dir, depth)
        }
    }
}

fn from_value<T: serde::de::DeserializeOwned>(value: serde_json::Value) -> Result<T, ConfigError> {
    serde_path_to_error::deserialize(value).map_err(|e| {
        let mut pointer = String::new();
        for seg in e.path().iter() {
            use serde_path_to_error::Segment;
            match seg {
                Segment::Seq { index } => pointer.push_str(&format!("/{index}")),
                Segment::Map { key } => pointer.push_str(&format!("/{key}")),
                Segment::Enum { variant } => pointer.push_str(&format!("/{variant}")),
                Segment::Unknown => pointer.push_str("/?"),
            }
        }
        if pointer.is_empty() {
            pointer.push('/');
        }
        invalid(pointer, e.inner().to_string())
    })
}

fn color_in(v: u64, alphabet: u64, pointer: &str) -> Result<Color, ConfigError> {
    if v >= alphabet {
        return Err(invalid(
            pointer,
            format!("color {v} out of range for alphabet of size {alphabet}"),
        ));
    }
    Ok(v as Color)
}

fn alphabet_size(v: u64, pointer: &str) -> Result<Color, ConfigError> {
    if v == 0 || v > u16::MAX as u64 + 1 {
        return Err(invalid(
            pointer,
            format!("alphabet size {v} out of range (1..=65536)"),
        ));
    }
    Ok(v as Color)
}

fn build_shift(
    file: ShiftFile,
    base_dir: Option<&std::path::Path>,
    depth: usize,
) -> Result<ParsedConfig, ConfigError> {
    let spec = build_rule(&file.rule, file.alphabet.as_ref(), base_dir, depth)?;
    Ok(ParsedConfig {
        name: file.name,
        payload: ConfigPayload::Shift(spec),
    })
}

fn build_rule(
    rule: &RuleCfg,
    alphabet: Option<&AlphabetCfg>,
    base_dir: Option<&std::path::Path>,
    depth: usize,
) -> Result<ShiftSpec, ConfigError> {
    match rule {
        RuleCfg::Linear { terms, constant } => {
            let modulus = alphabet
                .and_then(|a| a.modulus)
                .ok_or_else(|| invalid("/alphabet", "linear rules need {\"modulus\": p}"))?;
            if !is_prime(modulus) {
                return Err(invalid("/alphabet/modulus", "modulus must be prime"));
            }
            let terms: Vec<(LatticePoint, u64)> = terms
                .iter()
                .map(|t| (LatticePoint { i: t.offset[0], j: t.offset[1] }, t.coeff))
                .collect();
            let rule = LinearRule::new(modulus, terms, *constant)
                .map_err(|e| invalid("/rule", e.to_string()))?;
            Ok(ShiftSpec::Linear(rule))
        }
        RuleCfg::ForbiddenPatterns { families } => {
            let size = alphabet
                .and_then(|a| a.size)
                .ok_or_else(|| invalid("/alphabet", "forbidden-pattern rules need {\"size\": q}"))?;
            let q = alphabet_size(size, "/alphabet/size")?;
            let mut out = Vec::new();
            for (fi, fam) in families.iter().enumerate() {
                let at = |suffix: String| format!("/rule/families/{fi}{suffix}");
                if fam.window.is_empty() {
                    return Err(invalid(at("/window".into()), "window must be nonempty"));
                }
                let window: Vec<LatticePoint> = fam
                    .window
                    .iter()
                    .map(|&[i, j]| LatticePoint { i, j })
                    .collect();
                let mut seen = window.clone();
                seen.sort();
                seen.dedup();
                if seen.len() != window.len() {
                    return Err(invalid(at("/window".into()), "window has repeated cells"));
                }
                let mut forbidden = Vec::new();
                for (wi, word) in fam.forbidden.iter().enumerate() {
                    if word.len() != window.len() {
                        return Err(invalid(
                            at(format!("/forbidden/{wi}")),
                            format!("pattern length {} does not match window size {}", word.len(), window.len()),
                        ));
                    }
                    let mut w = Vec::with_capacity(word.len());
                    for (ci, &c) in word.iter().enumerate() {
                        w.push(color_in(c, q as u64, &at(format!("/forbidden/{wi}/{ci}")))?);
                    }
                    forbidden.push(w);
                }
                forbidden.sort();
                forbidden.dedup();
                out.push(ForbiddenFamily { window, forbidden });
            }
            Ok(ShiftSpec::Forbidden(ForbiddenRule {
                alphabet: q,
                families: out,
            }))
        }
        RuleCfg::Group { group, shape, target } => {
            let order = alphabet_size(group.order, "/rule/group/order")?;
            let mut table = Vec::with_capacity(group.table.len());
            for (ti, &v) in group.table.iter().enumerate() {
                table.push(color_in(v, order as u64, &format!("/rule/group/table/{ti}"))?);
            }
            let group = GroupTable::new(order, table)
                .map_err(|e| invalid("/rule/group", e.to_string()))?;
            if let Some(a) = alphabet {
                if a.size.is_some_and(|s| s != order as u64) || a.modulus.is_some() {
                    return Err(invalid(
                        "/alphabet",
                        "group rules take their alphabet from the group order",
                    ));
                }
            }
            if shape.is_empty() {
                return Err(invalid("/rule/shape", "shape must be nonempty"));
            }
            let shape: Vec<LatticePoint> =
                shape.iter().map(|&[i, j]| LatticePoint { i, j }).collect();
            let target = color_in(*target, order as u64, "/rule/target")?;
            Ok(ShiftSpec::Group(GroupRule { group, shape, target }))
        }
        RuleCfg::Product { factors } => {
            if factors.len() < 2 {
                return Err(invalid("/rule/factors", "products need at least two factors"));
            }
            if depth >= MAX_DEPTH {
                return Err(invalid(
                    "/rule/factors",
                    "config nesting exceeds the maximum depth (cyclic include?)",
                ));
            }
            let mut specs = Vec::new();
            for (k, f) in factors.iter().enumerate() {
                let at = format!("/rule/factors/{k}");
                let parsed = match f {
                    FactorCfg::Path(rel) => {
                        let path = match base_dir {
                            Some(dir) => dir.join(rel),
                            None => std::path::PathBuf::from(rel),
                        };
                        parse_at_depth(&path, depth + 1)?
                    }
                    FactorCfg::Inline(file) => {
                        let spec = build_rule(&file.rule, file.alphabet.as_ref(), base_dir, depth + 1)?;
                        ParsedConfig {
                            name: file.name.clone(),
                            payload: ConfigPayload::Shift(spec),
                        }
                    }
                };
                match parsed.payload {
                    ConfigPayload::Shift(s) => specs.push(s),
                    _ => {
                        return Err(invalid(at, "product factors must be shift specifications"));
                    }
                }
            }
            let mut iter = specs.into_iter();
            let first = iter.next().unwrap();
            iter.try_fold(first, |acc, next| {
                crate::shifts::product_shift(acc, next)
                    .map_err(|e| invalid("/rule/factors", e.to_string()))
            })
        }
    }
}

fn build_language(cfg: &LanguageCfg, pointer: &str) -> Result<Language1D, ConfigError> {
    match cfg {
        LanguageCfg::Full { alphabet } => {
            let q = alphabet_size(*alphabet, &format!("{pointer}/alphabet"))?;
            Ok(Language1D::Full { alphabet: q })
        }
        LanguageCfg::Sft {
            alphabet,
            width,
            allowed,
        } => {
            let q = alphabet_size(*alphabet, &format!("{pointer}/alphabet"))?;
            let mut words = Vec::new();
            for (wi, word) in allowed.iter().enumerate() {
                if word.len() != *width {
                    return Err(invalid(
                        format!("{pointer}/allowed/{wi}"),
                        format!("word length {} does not match width {width}", word.len()),
                    ));
                }
                let mut w = Vec::with_capacity(word.len());
                for (ci, &c) in word.iter().enumerate() {
                    w.push(color_in(c, q as u64, &format!("{pointer}/allowed/{wi}/{ci}"))?);
                }
                words.push(w);
            }
            Language1D::sft(q, *width, words)
                .map_err(|e| invalid(pointer.to_string(), e.to_string()))
        }
        LanguageCfg::Phased {
            alphabet,
            period,
            constraints,
        } => {
            let q = alphabet_size(*alphabet, &format!("{pointer}/alphabet"))?;
            if *period == 0 {
                return Err(invalid(format!("{pointer}/period"), "period must be positive"));
            }
            let mut out = Vec::new();
            for (ci, c) in constraints.iter().enumerate() {
                let at = format!("{pointer}/constraints/{ci}");
                out.push(match c {
                    ConstraintCfg::Fixed { residue, color } => {
                        if residue >= period {
                            return Err(invalid(at, "residue must be smaller than the period"));
                        }
                        PhaseConstraint::Fixed {
                            residue: *residue,
                            color: color_in(*color, q as u64, &at)?,
                        }
                    }
                    ConstraintCfg::Equal { residue, offset } => {
                        if residue >= period {
                            return Err(invalid(at, "residue must be smaller than the period"));
                        }
                        if *offset == 0 {
                            return Err(invalid(at, "offset must be nonzero"));
                        }
                        PhaseConstraint::Equal {
                            residue: *residue,
                            offset: *offset,
                        }
                    }
                });
            }
            Ok(Language1D::Phased(PhasedLanguage {
                alphabet: q,
                period: *period,
                constraints: out,
            }))
        }
        LanguageCfg::Union { members } => {
            if members.is_empty() {
                return Err(invalid(
                    format!("{pointer}/members"),
                    "unions need at least one member",
                ));
            }
            let langs = members
                .iter()
                .enumerate()
                .map(|(k, m)| build_language(m, &format!("{pointer}/members/{k}")))
                .collect::<Result<Vec<_>, _>>()?;
            Ok(Language1D::Union(langs))
        }
    }
}

fn build_spacetime(file: SpacetimeFile) -> Result<ParsedConfig, ConfigError> {
    let base = build_language(&file.base, "/base")?;
    if matches!(base, Language1D::Phased(_) | Language1D::Union(_)) {
        return Err(invalid(
            "/base",
            "spacetime bases must be full shifts or finite-type languages",
        ));
    }
    let q = base.alphabet();
    let (lo, hi) = match (&file.rule.window, file.rule.left_radius, file.rule.right_radius) {
        (Some([lo, hi]), None, None) => (*lo, *hi),
        (None, l, r) => (-(l.unwrap_or(0) as i64), r.unwrap_or(0) as i64),
        (Some(_), _, _) => {
            return Err(invalid(
                "/rule",
                "give either \"window\" or the radius pair, not both",
            ));
        }
    };
    let mut table = Vec::with_capacity(file.rule.table.len());
    for (ti, &v) in file.rule.table.iter().enumerate() {
        table.push(color_in(v, q as u64, &format!("/rule/table/{ti}"))?);
    }
    let rule = LocalRule::new(lo, hi, q, table).map_err(|e| invalid("/rule", e.to_string()))?;
    let st = Spacetime::new(base, rule, VALIDATION_BUDGET)
        .map_err(|e| invalid("/rule", e.to_string()))?;
    Ok(ParsedConfig {
        name: file.name,
        payload: ConfigPayload::Spacetime(st),
    })
}

fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    let mut d = 2;
    while d * d <= n {
        if n % d == 0 {
            return false;
        }
        d += 1;
    }
    true
}

// ---------------------------------------------------------------------------
// Serialization
// ---------------------------------------------------------------------------

/// Canonical JSON for a configuration (pretty-printed, newline-terminated).
/// Product factors serialize inline regardless of how they were loaded.
pub fn serialize_config(cfg: &ParsedConfig) -> String {
    let value = match &cfg.payload {
        ConfigPayload::Shift(spec) => {
            serde_json::to_value(shift_file_of(cfg.name.clone(), spec)).unwrap()
        }
        ConfigPayload::Spacetime(st) => serde_json::to_value(SpacetimeFile {
            kind: MustBeSpacetime::Spacetime,
            name: cfg.name.clone(),
            rule: spacetime_rule_cfg(&st.rule),
            base: language_cfg(&st.base),
        })
        .unwrap(),
        ConfigPayload::Language(lang) => serde_json::to_value(LanguageFile {
            kind: MustBeLanguage::Language,
            name: cfg.name.clone(),
            language: language_cfg(lang),
        })
        .unwrap(),
    };
    let mut out = serde_json::to_string_pretty(&value).unwrap();
    out.push('\n');
    out
}

fn shift_file_of(name: Option<String>, spec: &ShiftSpec) -> ShiftFile {
    let (alphabet, rule) = rule_cfg(spec);
    ShiftFile {
        name,
        alphabet,
        rule,
    }
}

fn rule_cfg(spec: &ShiftSpec) -> (Option<AlphabetCfg>, RuleCfg) {
    match spec {
        ShiftSpec::Linear(r) => (
            Some(AlphabetCfg {
                modulus: Some(r.modulus),
                size: None,
            }),
            RuleCfg::Linear {
                terms: r
                    .terms
                    .iter()
                    .map(|&(p, c)| TermCfg {
                        offset: [p.i, p.j],
                        coeff: c,
                    })
                    .collect(),
                constant: r.constant,
            },
        ),
        ShiftSpec::Forbidden(r) => (
            Some(AlphabetCfg {
                modulus: None,
                size: Some(r.alphabet as u64),
            }),
            RuleCfg::ForbiddenPatterns {
                families: r
                    .families
                    .iter()
                    .map(|f| FamilyCfg {
                        window: f.window.iter().map(|p| [p.i, p.j]).collect(),
                        forbidden: f
                            .forbidden
                            .iter()
                            .map(|w| w.iter().map(|&c| c as u64).collect())
                            .collect(),
                    })
                    .collect(),
            },
        ),
        ShiftSpec::Group(r) => (
            None,
            RuleCfg::Group {
                group: GroupCfg {
                    order: r.group.order as u64,
                    table: r.group.table.iter().map(|&c| c as u64).collect(),
                },
                shape: r.shape.iter().map(|p| [p.i, p.j]).collect(),
                target: r.target as u64,
            },
        ),
        ShiftSpec::Product(a, b) => (
            None,
            RuleCfg::Product {
                factors: vec![
                    FactorCfg::Inline(Box::new(shift_file_of(None, a))),
                    FactorCfg::Inline(Box::new(shift_file_of(None, b))),
                ],
            },
        ),
    }
}

fn spacetime_rule_cfg(rule: &LocalRule) -> SpacetimeRuleCfg {
    let table = rule.table().iter().map(|&c| c as u64).collect();
    if rule.lo <= 0 && rule.hi >= 0 {
        SpacetimeRuleCfg {
            left_radius: Some((-rule.lo) as u32),
            right_radius: Some(rule.hi as u32),
            window: None,
            table,
        }
    } else {
        SpacetimeRuleCfg {
            left_radius: None,
            right_radius: None,
            window: Some([rule.lo, rule.hi]),
            table,
        }
    }
}

fn language_cfg(lang: &Language1D) -> LanguageCfg {
    match lang {
        Language1D::Full { alphabet } => LanguageCfg::Full {
            alphabet: *alphabet as u64,
        },
        Language1D::Sft {
            alphabet,
            width,
            allowed,
        } => LanguageCfg::Sft {
            alphabet: *alphabet as u64,
            width: *width,
            allowed: allowed
                .iter()
                .map(|w| w.iter().map(|&c| c as u64).collect())
                .collect(),
        },
        Language1D::Phased(p) => LanguageCfg::Phased {
            alphabet: p.alphabet as u64,
            period: p.period,
            constraints: p
                .constraints
                .iter()
                .map(|c| match c {
                    PhaseConstraint::Fixed { residue, color } => ConstraintCfg::Fixed {
                        residue: *residue,
                        color: *color as u64,
                    },
                    PhaseConstraint::Equal { residue, offset } => ConstraintCfg::Equal {
                        residue: *residue,
                        offset: *offset,
                    },
                })
                .collect(),
        },
        Language1D::Union(members) => LanguageCfg::Union {
            members: members.iter().map(language_cfg).collect(),
        },
    }
}

// ---------------------------------------------------------------------------
// Builtins
// ---------------------------------------------------------------------------

const BUILTINS: &[(&str, &str)] = &[
    (
        "ledrappier",
        r#"{
  "name": "ledrappier",
  "alphabet": {"modulus": 2},
  "rule": {
    "type": "linear",
    "terms": [
      {"offset": [0, 0], "coeff": 1},
      {"offset": [1, 0], "coeff": 1},
      {"offset": [0, 1], "coeff": 1}
    ],
    "constant": 0
  }
}"#,
    ),
    (
        "full2",
        r#"{
  "name": "full2",
  "alphabet": {"size": 2},
  "rule": {"type": "forbidden_patterns", "families": []}
}"#,
    ),
    (
        "one-letter",
        r#"{
  "name": "one-letter",
  "alphabet": {"size": 1},
  "rule": {"type": "forbidden_patterns", "families": []}
}"#,
    ),
    (
        "stripes",
        r#"{
  "name": "stripes",
  "alphabet": {"modulus": 2},
  "rule": {
    "type": "linear",
    "terms": [
      {"offset": [0, 0], "coeff": 1},
      {"offset": [0, 1], "coeff": 1}
    ],
    "constant": 1
  }
}"#,
    ),
    (
        "constant2",
        r#"{
  "name": "constant2",
  "alphabet": {"size": 2},
  "rule": {
    "type": "forbidden_patterns",
    "families": [
      {"window": [[0, 0], [1, 0]], "forbidden": [[0, 1], [1, 0]]},
      {"window": [[0, 0], [0, 1]], "forbidden": [[0, 1], [1, 0]]}
    ]
  }
}"#,
    ),
    (
        "ledrappier-product",
        r#"{
  "name": "ledrappier-product",
  "rule": {
    "type": "product",
    "factors": [
      {
        "alphabet": {"modulus": 2},
        "rule": {
          "type": "linear",
          "terms": [
            {"offset": [0, 0], "coeff": 1},
            {"offset": [1, 0], "coeff": 1},
            {"offset": [0, 1], "coeff": 1}
          ],
          "constant": 0
        }
      },
      {
        "alphabet": {"modulus": 2},
        "rule": {
          "type": "linear",
          "terms": [
            {"offset": [0, 0], "coeff": 1},
            {"offset": [1, 0], "coeff": 1},
            {"offset": [0, 1], "coeff": 1}
          ],
          "constant": 0
        }
      }
    ]
  }
}"#,
    ),
    (
        "einsiedler-restriction",
        r#"{
  "type": "language",
  "name": "einsiedler-restriction",
  "language": {
    "type": "union",
    "members": [
      {
        "type": "phased",
        "alphabet": 2,
        "period": 2,
        "constraints": [{"type": "fixed", "residue": 0, "color": 0}]
      },
      {
        "type": "phased",
        "alphabet": 2,
        "period": 2,
        "constraints": [{"type": "fixed", "residue": 1, "color": 0}]
      },
      {
        "type": "phased",
        "alphabet": 2,
        "period": 2,
        "constraints": [{"type": "equal", "residue": 0, "offset": 1}]
      },
      {
        "type": "phased",
        "alphabet": 2,
        "period": 2,
        "constraints": [{"type": "equal", "residue": 0, "offset": -1}]
      }
    ]
  }
}"#,
    ),
    (
        "ledrappier-spacetime",
        r#"{
  "type": "spacetime",
  "name": "ledrappier-spacetime",
  "rule": {"left_radius": 0, "right_radius": 1, "table": [0, 1, 1, 0]},
  "base": {"type": "full", "alphabet": 2}
}"#,
    ),
    (
        "and-spacetime",
        r#"{
  "type": "spacetime",
  "name": "and-spacetime",
  "rule": {"left_radius": 0, "right_radius": 1, "table": [0, 0, 0, 1]},
  "base": {"type": "full", "alphabet": 2}
}"#,
    ),
];

/// Names of the embedded builtin configurations.
pub fn builtin_names() -> Vec<&'static str> {
    BUILTINS.iter().map(|&(n, _)| n).collect()
}

/// Raw JSON text of a builtin configuration.
pub fn builtin_text(name: &str) -> Option<&'static str> {
    BUILTINS
        .iter()
        .find(|&&(n, _)| n == name)
        .map(|&(_, text)| text)
}

/// Parses a builtin configuration by name.
pub fn builtin(name: &str) -> Option<ParsedConfig> {
    builtin_text(name).map(|text| parse_config_str(text, None).expect("builtins are valid"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lang1d::einsiedler_restriction;
    use crate::shifts::{ledrappier, stripes};
    use crate::spacetime::ledrappier_spacetime;

    #[test]
    fn builtins_parse_and_match_fixtures() {
        assert_eq!(
            builtin("ledrappier").unwrap().payload,
            ConfigPayload::Shift(ledrappier())
        );
        assert_eq!(
            builtin("stripes").unwrap().payload,
            ConfigPayload::Shift(stripes())
        );
        assert_eq!(
            builtin("einsiedler-restriction").unwrap().payload,
            ConfigPayload::Language(einsiedler_restriction())
        );
        let st = builtin("ledrappier-spacetime").unwrap();
        assert_eq!(
            st.payload,
            ConfigPayload::Spacetime(ledrappier_spacetime())
        );
        for name in builtin_names() {
            assert!(builtin(name).is_some(), "{name}");
        }
    }

    #[test]
    fn round_trips_are_bit_exact() {
        for name in builtin_names() {
            let first = builtin(name).unwrap();
            let s1 = serialize_config(&first);
            let second = parse_config_str(&s1, None).unwrap();
            assert_eq!(first, second, "{name}: value round trip");
            let s2 = serialize_config(&second);
            assert_eq!(s1, s2, "{name}: byte round trip");
        }
    }

    #[test]
    fn composite_modulus_is_rejected() {
        let text = r#"{"alphabet": {"modulus": 4}, "rule": {"type": "linear", "terms": [{"offset": [0,0], "coeff": 1}], "constant": 0}}"#;
        let err = parse_config_str(text, None).unwrap_err();
        match err {
            ConfigError::Invalid { pointer, message } => {
                assert_eq!(pointer, "/alphabet/modulus");
                assert!(message.contains("must be prime"), "{message}");
            }
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let text = r#"{"alphabet": {"modulus": 2}, "rule": {"type": "linear", "terms": [], "constant": 0}, "extra": 1}"#;
        assert!(matches!(
            parse_config_str(text, None),
            Err(ConfigError::Invalid { .. })
        ));
        let text = r#"{"alphabet": {"modulus": 2}, "rule": {"type": "linear", "terms": [{"offset": [0,0], "coeff": 1, "bogus": 2}]}}"#;
        let err = parse_config_str(text, None).unwrap_err();
        match err {
            ConfigError::Invalid { pointer, .. } => {
                assert!(pointer.starts_with("/rule"), "{pointer}");
            }
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn color_range_is_validated() {
        let text = r#"{"alphabet": {"size": 2}, "rule": {"type": "forbidden_patterns", "families": [{"window": [[0,0]], "forbidden": [[3]]}]}}"#;
        let err = parse_config_str(text, None).unwrap_err();
        match err {
            ConfigError::Invalid { pointer, .. } => {
                assert_eq!(pointer, "/rule/families/0/forbidden/0/0");
            }
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn product_of_files_parses() {
        let dir = std::env::temp_dir().join("shiftlab-config-test");
        std::fs::create_dir_all(&dir).unwrap();
        let led = dir.join("led.json");
        std::fs::write(&led, builtin_text("ledrappier").unwrap()).unwrap();
        let text = r#"{"rule": {"type": "product", "factors": ["led.json", "led.json"]}}"#;
        let cfg = parse_config_str(text, Some(&dir)).unwrap();
        assert_eq!(
            cfg.payload,
            ConfigPayload::Shift(
                crate::shifts::product_shift(ledrappier(), ledrappier()).unwrap()
            )
        );
        assert_eq!(
            cfg.payload,
            builtin("ledrappier-product").unwrap().payload
        );
    }

    #[test]
    fn invalid_spacetime_rule_is_rejected() {
        // XOR is not well defined on this golden-mean base.
        let text = r#"{
            "type": "spacetime",
            "rule": {"left_radius": 0, "right_radius": 1, "table": [0, 1, 1, 0]},
            "base": {"type": "sft", "alphabet": 2, "width": 2, "allowed": [[0,0],[0,1],[1,0]]}
        }"#;
        let err = parse_config_str(text, None).unwrap_err();
        match err {
            ConfigError::Invalid { pointer, message } => {
                assert_eq!(pointer, "/rule");
                assert!(message.contains("not well defined"), "{message}");
            }
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn window_form_rules_round_trip() {
        let st = ledrappier_spacetime().twist(1);
        let cfg = ParsedConfig {
            name: None,
            payload: ConfigPayload::Spacetime(st),
        };
        let s = serialize_config(&cfg);
        assert!(s.contains("\"window\""));
        let back = parse_config_str(&s, None).unwrap();
        assert_eq!(cfg, back);
    }

    #[test]
    fn syntax_errors_are_reported() {
        assert!(matches!(
            parse_config_str("{not json", None),
            Err(ConfigError::Syntax(_))
        ));
        assert!(matches!(
            parse_config_str(r#"{"type": "mystery"}"#, None),
            Err(ConfigError::Invalid { .. })
        ));
    }
}
