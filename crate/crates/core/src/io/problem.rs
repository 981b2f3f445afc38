//! Problem files: JSON input with field-level diagnostics.

use std::fmt;

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};
use sha2::{Digest, Sha256};

use crate::error::Result;
use crate::group::{GroupAction, GroupElement};
use crate::map::RationalMapSpec;
use crate::monomial::{Monomial, MonomialIdeal};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    Simplify,
    ResolveMap,
}

impl Mode {
    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Simplify => "simplify",
            Mode::ResolveMap => "resolve-map",
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A validated problem. Exponent vectors are kept exactly as written so that
/// emitting and re-parsing gives back the same value.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemFile {
    pub variables: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mode: Option<Mode>,
    #[serde(default)]
    pub ideals: Vec<Vec<Vec<u32>>>,
    #[serde(default)]
    pub group: Vec<GroupElement>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub map: Option<Vec<Vec<u32>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_steps: Option<usize>,
}

impl ProblemFile {
    pub fn arity(&self) -> usize {
        self.variables.len()
    }

    pub fn collection(&self) -> Result<Vec<MonomialIdeal>> {
        self.ideals
            .iter()
            .map(|gens| MonomialIdeal::minimalize(gens.iter().cloned().map(Monomial::new)))
            .collect()
    }

    pub fn group_action(&self) -> Result<GroupAction> {
        GroupAction::closure(self.group.clone(), self.arity())
    }

    pub fn map_spec(&self) -> Result<RationalMapSpec> {
        let coords = self.map.clone().unwrap_or_default();
        RationalMapSpec::new(
            coords.into_iter().map(Monomial::new).collect(),
            self.group_action()?,
        )
    }

    /// Compact JSON with fields in declaration order.
    pub fn canonical_bytes(&self) -> Vec<u8> {
        serde_json::to_vec(self).expect("problem serializes")
    }

    /// `sha256:` followed by the hex digest of [`Self::canonical_bytes`].
    pub fn input_hash(&self) -> String {
        let digest = Sha256::digest(self.canonical_bytes());
        let hex: String = digest.iter().map(|b| format!("{b:02x}")).collect();
        format!("sha256:{hex}")
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("problem serializes");
        s.push('\n');
        s
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DiagnosticCode {
    MalformedJson,
    WrongType,
    MissingField,
    UnknownField,
    BadMode,
    NegativeExponent,
    ExponentTooLarge,
    ArityMismatch,
    EmptyIdeal,
    BadPermutation,
    DuplicateVariable,
}

impl DiagnosticCode {
    pub fn as_str(self) -> &'static str {
        match self {
            DiagnosticCode::MalformedJson => "malformed-json",
            DiagnosticCode::WrongType => "wrong-type",
            DiagnosticCode::MissingField => "missing-field",
            DiagnosticCode::UnknownField => "unknown-field",
            DiagnosticCode::BadMode => "bad-mode",
            DiagnosticCode::NegativeExponent => "negative-exponent",
            DiagnosticCode::ExponentTooLarge => "exponent-too-large",
            DiagnosticCode::ArityMismatch => "arity-mismatch",
            DiagnosticCode::EmptyIdeal => "empty-ideal",
            DiagnosticCode::BadPermutation => "bad-permutation",
            DiagnosticCode::DuplicateVariable => "duplicate-variable",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Diagnostic {
    pub code: DiagnosticCode,
    pub path: String,
    pub reason: String,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "error[{}] at {}: {}",
            self.code.as_str(),
            self.path,
            self.reason
        )
    }
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
#[error("{}", .diagnostics.iter().map(ToString::to_string).collect::<Vec<_>>().join("\n"))]
pub struct ParseError {
    pub diagnostics: Vec<Diagnostic>,
}

impl ParseError {
    pub fn has(&self, code: DiagnosticCode, path: &str) -> bool {
        self.diagnostics
            .iter()
            .any(|d| d.code == code && d.path == path)
    }
}

const FIELDS: [&str; 6] = ["variables", "mode", "ideals", "group", "map", "max_steps"];

struct Checker {
    diagnostics: Vec<Diagnostic>,
}

impl Checker {
    fn report(&mut self, code: DiagnosticCode, path: impl Into<String>, reason: impl Into<String>) {
        self.diagnostics.push(Diagnostic {
            code,
            path: path.into(),
            reason: reason.into(),
        });
    }

    fn array<'v>(&mut self, v: &'v Value, path: &str) -> Option<&'v Vec<Value>> {
        let a = v.as_array();
        if a.is_none() {
            self.report(DiagnosticCode::WrongType, path, "expected an array");
        }
        a
    }

    /// An exponent vector of the given length.
    fn exponents(&mut self, v: &Value, path: &str, arity: Option<usize>) {
        let Some(entries) = self.array(v, path) else {
            return;
        };
        if let Some(n) = arity {
            if entries.len() != n {
                self.report(
                    DiagnosticCode::ArityMismatch,
                    path,
                    format!("{} exponents for {n} variables", entries.len()),
                );
            }
        }
        for (k, e) in entries.iter().enumerate() {
            match e {
                Value::Number(num) if num.is_u64() => {
                    if num.as_u64().is_some_and(|x| x > u64::from(u32::MAX)) {
                        self.report(
                            DiagnosticCode::ExponentTooLarge,
                            path,
                            format!("exponent {} is {num}", k + 1),
                        );
                    }
                }
                Value::Number(num) if num.is_i64() => {
                    self.report(
                        DiagnosticCode::NegativeExponent,
                        path,
                        format!("exponent {} is {num}", k + 1),
                    );
                }
                _ => self.report(
                    DiagnosticCode::WrongType,
                    path,
                    format!("exponent {} is not a non-negative integer", k + 1),
                ),
            }
        }
    }

    /// A one-based image list that must permute `1..=len`.
    fn permutation(&mut self, v: &Value, path: &str, len: usize) {
        let Some(entries) = self.array(v, path) else {
            return;
        };
        if entries.len() != len {
            self.report(
                DiagnosticCode::BadPermutation,
                path,
                format!("{} images where {len} are needed", entries.len()),
            );
            return;
        }
        let mut seen = vec![false; len];
        for e in entries {
            match e.as_u64() {
                Some(i) if (1..=len as u64).contains(&i) => {
                    if std::mem::replace(&mut seen[i as usize - 1], true) {
                        self.report(
                            DiagnosticCode::BadPermutation,
                            path,
                            format!("image {i} repeats"),
                        );
                    }
                }
                _ => self.report(
                    DiagnosticCode::BadPermutation,
                    path,
                    format!("image {e} is not in 1..={len}"),
                ),
            }
        }
    }
}

/// Parses and validates a problem. All problems found are reported together.
pub fn parse_problem(bytes: &[u8]) -> std::result::Result<ProblemFile, ParseError> {
    let mut c = Checker {
        diagnostics: Vec::new(),
    };
    let value: Value = match serde_json::from_slice(bytes) {
        Ok(v) => v,
        Err(e) => {
            c.report(DiagnosticCode::MalformedJson, "$", e.to_string());
            return Err(ParseError {
                diagnostics: c.diagnostics,
            });
        }
    };
    let Some(obj) = value.as_object() else {
        c.report(DiagnosticCode::WrongType, "$", "expected an object");
        return Err(ParseError {
            diagnostics: c.diagnostics,
        });
    };
    validate(&mut c, obj);
    if !c.diagnostics.is_empty() {
        return Err(ParseError {
            diagnostics: c.diagnostics,
        });
    }
    serde_json::from_value(value).map_err(|e| ParseError {
        diagnostics: vec![Diagnostic {
            code: DiagnosticCode::WrongType,
            path: "$".into(),
            reason: e.to_string(),
        }],
    })
}

fn validate(c: &mut Checker, obj: &Map<String, Value>) {
    for key in obj.keys() {
        if !FIELDS.contains(&key.as_str()) {
            c.report(
                DiagnosticCode::UnknownField,
                key.clone(),
                "not a problem field",
            );
        }
    }

    let mut arity = None;
    match obj.get("variables") {
        None => c.report(DiagnosticCode::MissingField, "variables", "required"),
        Some(v) => {
            if let Some(names) = c.array(v, "variables") {
                if names.is_empty() {
                    c.report(
                        DiagnosticCode::ArityMismatch,
                        "variables",
                        "at least one variable is needed",
                    );
                }
                let mut seen = std::collections::BTreeSet::new();
                for (i, n) in names.iter().enumerate() {
                    match n.as_str() {
                        Some(s) if !seen.insert(s) => c.report(
                            DiagnosticCode::DuplicateVariable,
                            format!("variables[{i}]"),
                            format!("{s} repeats"),
                        ),
                        Some(_) => {}
                        None => c.report(
                            DiagnosticCode::WrongType,
                            format!("variables[{i}]"),
                            "expected a string",
                        ),
                    }
                }
                arity = Some(names.len());
            }
        }
    }

    let mode = match obj.get("mode") {
        None => None,
        Some(Value::String(s)) if s == "simplify" => Some(Mode::Simplify),
        Some(Value::String(s)) if s == "resolve-map" => Some(Mode::ResolveMap),
        Some(other) => {
            c.report(
                DiagnosticCode::BadMode,
                "mode",
                format!("{other} is neither \"simplify\" nor \"resolve-map\""),
            );
            None
        }
    };

    let mut n_ideals = 0;
    if let Some(v) = obj.get("ideals") {
        if let Some(ideals) = c.array(v, "ideals") {
            n_ideals = ideals.len();
            for (i, ideal) in ideals.iter().enumerate() {
                let path = format!("ideals[{i}]");
                if let Some(gens) = c.array(ideal, &path) {
                    if gens.is_empty() {
                        c.report(
                            DiagnosticCode::EmptyIdeal,
                            &path,
                            "the zero ideal is not allowed",
                        );
                    }
                    for (j, g) in gens.iter().enumerate() {
                        c.exponents(g, &format!("{path}[{j}]"), arity);
                    }
                }
            }
        }
    }

    let mut n_coords = None;
    match obj.get("map") {
        None if mode == Some(Mode::ResolveMap) => c.report(
            DiagnosticCode::MissingField,
            "map",
            "required in resolve-map mode",
        ),
        None => {}
        Some(v) => {
            if let Some(coords) = c.array(v, "map") {
                if coords.is_empty() {
                    c.report(
                        DiagnosticCode::EmptyIdeal,
                        "map",
                        "a map needs at least one coordinate",
                    );
                }
                for (k, m) in coords.iter().enumerate() {
                    c.exponents(m, &format!("map[{k}]"), arity);
                }
                n_coords = Some(coords.len());
            }
        }
    }

    if let Some(v) = obj.get("group") {
        if let Some(elements) = c.array(v, "group") {
            for (g, el) in elements.iter().enumerate() {
                let path = format!("group[{g}]");
                let Some(fields) = el.as_object() else {
                    c.report(DiagnosticCode::WrongType, &path, "expected an object");
                    continue;
                };
                for key in fields.keys() {
                    if !["vars", "ideals", "coords"].contains(&key.as_str()) {
                        c.report(
                            DiagnosticCode::UnknownField,
                            format!("{path}.{key}"),
                            "not a group element field",
                        );
                    }
                }
                match (fields.get("vars"), arity) {
                    (None, _) => c.report(
                        DiagnosticCode::MissingField,
                        format!("{path}.vars"),
                        "required",
                    ),
                    (Some(p), Some(n)) => c.permutation(p, &format!("{path}.vars"), n),
                    (Some(_), None) => {}
                }
                if let Some(p) = fields.get("ideals") {
                    c.permutation(p, &format!("{path}.ideals"), n_ideals);
                }
                if let Some(p) = fields.get("coords") {
                    match n_coords {
                        Some(n) => c.permutation(p, &format!("{path}.coords"), n),
                        None => c.report(
                            DiagnosticCode::BadPermutation,
                            format!("{path}.coords"),
                            "the problem has no map",
                        ),
                    }
                }
            }
        }
    }

    if let Some(v) = obj.get("max_steps") {
        if !v.is_u64() {
            c.report(
                DiagnosticCode::WrongType,
                "max_steps",
                "expected a non-negative integer",
            );
        }
    }
}
