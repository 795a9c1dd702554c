//! Registry of propaganda techniques.
//!
//! The taxonomy ships as a JSON data file (`data/taxonomy.json`, schema in
//! `docs/taxonomy.md`). Names arrive in three spellings: the display form
//! ("Loaded Language"), the underscore form used inside prompts
//! ("Loaded_Language") and whatever the model writes back. [`TechniqueSet::normalize_name`]
//! folds all of them onto a stable [`TechniqueId`].

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

/// Number of techniques in the bundled taxonomy.
pub const EXPECTED_TECHNIQUES: usize = 14;

const BUNDLED: &str = include_str!("../data/taxonomy.json");

#[derive(Debug, thiserror::Error)]
pub enum TaxonomyError {
    #[error("malformed taxonomy: {0}")]
    Malformed(String),
    #[error("cannot read taxonomy file: {0}")]
    Io(#[from] std::io::Error),
    #[error("unknown technique: {0}")]
    NotFound(String),
}

/// Stable snake-case identifier of a technique, e.g. `loaded_language`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TechniqueId(String);

impl TechniqueId {
    pub fn new(id: impl Into<String>) -> Self {
        Self(id.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for TechniqueId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for TechniqueId {
    fn from(s: &str) -> Self {
        Self(s.to_string())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Technique {
    pub id: TechniqueId,
    pub display_name: String,
    pub prompt_name: String,
    pub definition: String,
    pub example: String,
    /// Extra spellings accepted by name normalization.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub aliases: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
struct TaxonomyFile {
    version: String,
    techniques: Vec<Technique>,
}

/// Ordered, immutable set of techniques. Order follows the data file.
#[derive(Debug, Clone)]
pub struct TechniqueSet {
    version: String,
    techniques: Vec<Technique>,
    by_id: HashMap<TechniqueId, usize>,
    // folded name -> index; components of compound names included
    by_name: HashMap<String, usize>,
}

impl PartialEq for TechniqueSet {
    fn eq(&self, other: &Self) -> bool {
        self.version == other.version && self.techniques == other.techniques
    }
}

/// Loads a taxonomy file and requires exactly [`EXPECTED_TECHNIQUES`] entries.
pub fn load_taxonomy(path: impl AsRef<Path>) -> Result<TechniqueSet, TaxonomyError> {
    let raw = std::fs::read_to_string(path)?;
    TechniqueSet::from_json(&raw, Some(EXPECTED_TECHNIQUES))
}

impl TechniqueSet {
    /// The bundled 14-technique taxonomy.
    pub fn bundled() -> Self {
        Self::from_json(BUNDLED, Some(EXPECTED_TECHNIQUES)).expect("bundled taxonomy is valid")
    }

    /// Parses a taxonomy document. `expected_count` pins the number of
    /// techniques; pass `None` to accept alternative taxonomies.
    pub fn from_json(raw: &str, expected_count: Option<usize>) -> Result<Self, TaxonomyError> {
        let file: TaxonomyFile =
            serde_json::from_str(raw).map_err(|e| TaxonomyError::Malformed(e.to_string()))?;
        Self::from_parts(file.version, file.techniques, expected_count)
    }

    fn from_parts(
        version: String,
        techniques: Vec<Technique>,
        expected_count: Option<usize>,
    ) -> Result<Self, TaxonomyError> {
        if let Some(n) = expected_count {
            if techniques.len() != n {
                return Err(TaxonomyError::Malformed(format!(
                    "expected {n} techniques, found {}",
                    techniques.len()
                )));
            }
        }
        if techniques.is_empty() {
            return Err(TaxonomyError::Malformed("no techniques".into()));
        }
        let mut by_id = HashMap::new();
        for (i, t) in techniques.iter().enumerate() {
            for (field, value) in [
                ("id", t.id.as_str()),
                ("display_name", &t.display_name),
                ("prompt_name", &t.prompt_name),
                ("definition", &t.definition),
                ("example", &t.example),
            ] {
                if value.trim().is_empty() {
                    return Err(TaxonomyError::Malformed(format!("technique #{i}: empty {field}")));
                }
            }
            if by_id.insert(t.id.clone(), i).is_some() {
                return Err(TaxonomyError::Malformed(format!("duplicate id {}", t.id)));
            }
        }

        // Full names first so that a full name always wins over a component
        // of some other technique's compound name.
        let mut by_name: HashMap<String, usize> = HashMap::new();
        let mut full: HashSet<String> = HashSet::new();
        for (i, t) in techniques.iter().enumerate() {
            let names = [t.id.as_str(), &t.display_name, &t.prompt_name]
                .into_iter()
                .chain(t.aliases.iter().map(String::as_str));
            for name in names {
                let key = fold(name);
                if let Some(&j) = by_name.get(&key) {
                    if j != i {
                        return Err(TaxonomyError::Malformed(format!(
                            "name {name:?} is ambiguous between {} and {}",
                            techniques[j].id, t.id
                        )));
                    }
                }
                by_name.insert(key.clone(), i);
                full.insert(key);
            }
        }
        for (i, t) in techniques.iter().enumerate() {
            let names = [t.display_name.as_str(), &t.prompt_name]
                .into_iter()
                .chain(t.aliases.iter().map(String::as_str));
            for name in names {
                for part in split_compound(name) {
                    let key = fold(part);
                    if key.is_empty() || full.contains(&key) {
                        continue;
                    }
                    by_name.entry(key).or_insert(i);
                }
            }
        }

        Ok(Self { version, techniques, by_id, by_name })
    }

    pub fn version(&self) -> &str {
        &self.version
    }

    pub fn len(&self) -> usize {
        self.techniques.len()
    }

    pub fn is_empty(&self) -> bool {
        self.techniques.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &Technique> {
        self.techniques.iter()
    }

    pub fn get(&self, id: &TechniqueId) -> Option<&Technique> {
        self.by_id.get(id).map(|&i| &self.techniques[i])
    }

    pub fn require(&self, id: &TechniqueId) -> Result<&Technique, TaxonomyError> {
        self.get(id).ok_or_else(|| TaxonomyError::NotFound(id.to_string()))
    }

    /// Position of `id` in taxonomy order.
    pub fn position(&self, id: &TechniqueId) -> Option<usize> {
        self.by_id.get(id).copied()
    }

    /// Resolves any spelling of a technique name to its id.
    ///
    /// Matching ignores case, treats `_`, `-` and whitespace as equivalent, and
    /// accepts any single component of a compound name ("Whataboutism" for
    /// "Whataboutism, Straw Men, Red Herring"). A raw compound name resolves
    /// through its first resolvable component.
    pub fn normalize_name(&self, raw: &str) -> Result<TechniqueId, TaxonomyError> {
        let whole = fold(raw);
        if whole.is_empty() {
            return Err(TaxonomyError::NotFound(raw.to_string()));
        }
        if let Some(&i) = self.by_name.get(&whole) {
            return Ok(self.techniques[i].id.clone());
        }
        split_compound(raw)
            .filter_map(|part| self.by_name.get(&fold(part)))
            .map(|&i| self.techniques[i].id.clone())
            .next()
            .ok_or_else(|| TaxonomyError::NotFound(raw.to_string()))
    }

    /// Definition and example text used when rendering prompts.
    pub fn technique_brief(&self, id: &TechniqueId) -> Result<(&str, &str), TaxonomyError> {
        let t = self.require(id)?;
        Ok((&t.definition, &t.example))
    }

    /// Serializes back to the data-file format.
    pub fn to_json(&self) -> String {
        let file = TaxonomyFile { version: self.version.clone(), techniques: self.techniques.clone() };
        serde_json::to_string_pretty(&file).expect("taxonomy serializes")
    }
}

fn split_compound(name: &str) -> impl Iterator<Item = &str> {
    name.split([',', '/']).map(str::trim).filter(|p| !p.is_empty())
}

/// Case-folds and collapses `_`, `-` and whitespace runs into single spaces.
/// Surrounding quotes and markdown emphasis are dropped.
fn fold(s: &str) -> String {
    let trimmed = s.trim_matches(|c: char| {
        c.is_whitespace() || matches!(c, '"' | '\'' | '*' | '`' | '“' | '”' | '‘' | '’' | '<' | '>' | '[' | ']' | '.')
    });
    let mut out = String::with_capacity(trimmed.len());
    let mut pending_space = false;
    for c in trimmed.chars() {
        if c == '_' || c == '-' || c == '‐' || c == '–' || c.is_whitespace() {
            pending_space = !out.is_empty();
            continue;
        }
        if pending_space {
            out.push(' ');
            pending_space = false;
        }
        let c = match c {
            'é' | 'É' => 'e',
            _ => c,
        };
        out.extend(c.to_lowercase());
    }
    out
}
