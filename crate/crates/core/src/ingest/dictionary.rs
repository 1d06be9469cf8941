use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::levenshtein::levenshtein;
use crate::error::{Error, Result};

/// Canonical spellings for one categorical column.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CategoryDictionary {
    canonical: Vec<String>,
    max_distance: usize,
}

impl CategoryDictionary {
    /// Canonical tokens are case-folded and deduplicated. Fails when two of
    /// them lie within `max_distance` of each other, since normalization
    /// would then be ambiguous.
    pub fn new<I, S>(canonical: I, max_distance: usize) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let mut tokens: Vec<String> = canonical
            .into_iter()
            .map(|s| fold(s.as_ref()))
            .collect();
        tokens.sort();
        tokens.dedup();
        for (i, a) in tokens.iter().enumerate() {
            for b in &tokens[i + 1..] {
                if levenshtein(a, b) <= max_distance {
                    return Err(Error::AmbiguousDictionary {
                        token: a.clone(),
                        first: a.clone(),
                        second: b.clone(),
                    });
                }
            }
        }
        Ok(CategoryDictionary {
            canonical: tokens,
            max_distance,
        })
    }

    pub fn canonical(&self) -> &[String] {
        &self.canonical
    }

    pub fn max_distance(&self) -> usize {
        self.max_distance
    }

    pub fn is_empty(&self) -> bool {
        self.canonical.is_empty()
    }
}

fn fold(token: &str) -> String {
    token.trim().to_lowercase()
}

/// Map a raw token to its canonical spelling by brute-force edit-distance
/// search. Returns `(token, false)` unchanged when nothing is within reach.
pub fn normalize_category(token: &str, dict: &CategoryDictionary) -> Result<(String, bool)> {
    if dict.is_empty() {
        return Err(Error::invalid("empty category dictionary"));
    }
    let folded = fold(token);
    let mut best: Option<(usize, &String)> = None;
    let mut tie: Option<&String> = None;
    for c in &dict.canonical {
        let d = levenshtein(&folded, c);
        match best {
            Some((bd, _)) if d > bd => {}
            Some((bd, _)) if d == bd => tie = Some(c),
            _ => {
                best = Some((d, c));
                tie = None;
            }
        }
    }
    let (d, c) = best.expect("dictionary is nonempty");
    if d > dict.max_distance {
        return Ok((token.to_owned(), false));
    }
    if let Some(other) = tie {
        return Err(Error::AmbiguousDictionary {
            token: token.to_owned(),
            first: c.clone(),
            second: other.clone(),
        });
    }
    Ok((c.clone(), true))
}

#[derive(Debug, Deserialize)]
struct DictionaryEntry {
    canonical: Vec<String>,
    max_distance: usize,
}

/// Column name -> dictionary.
pub type DictionarySet = BTreeMap<String, CategoryDictionary>;

/// Parse a dictionary JSON document: `{column: {canonical: [...], max_distance: k}}`.
pub fn parse_dictionaries(json: &str) -> Result<DictionarySet> {
    let raw: BTreeMap<String, DictionaryEntry> = serde_json::from_str(json)?;
    raw.into_iter()
        .map(|(col, e)| Ok((col, CategoryDictionary::new(e.canonical, e.max_distance)?)))
        .collect()
}

/// Load and merge every `*.json` dictionary file in a directory, in file
/// name order.
pub fn load_dictionaries(dir: &Path) -> Result<DictionarySet> {
    let mut paths: Vec<_> = fs::read_dir(dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "json"))
        .collect();
    paths.sort();
    let mut out = DictionarySet::new();
    for p in paths {
        out.extend(parse_dictionaries(&fs::read_to_string(&p)?)?);
    }
    Ok(out)
}

/// Serialize dictionaries in the same layout [`parse_dictionaries`] reads.
pub fn dictionaries_to_json(dicts: &DictionarySet) -> Result<String> {
    let value: BTreeMap<&String, serde_json::Value> = dicts
        .iter()
        .map(|(k, d)| {
            (
                k,
                serde_json::json!({"canonical": d.canonical, "max_distance": d.max_distance}),
            )
        })
        .collect();
    Ok(serde_json::to_string_pretty(&value)?)
}
