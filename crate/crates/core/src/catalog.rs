//! Bundled code catalog: the five-symbol source with its sixteen codes and
//! the English-alphabet source with three Huffman codes.

use serde::Deserialize;
use thiserror::Error;

use crate::codes::{CodeError, Codeword, SourceModel, VlcCode};

const BUILTIN: &str = include_str!("../data/codes.toml");

#[derive(Debug, Error)]
pub enum CatalogError {
    #[error("malformed catalog: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("code {id}: {source}")]
    Code {
        id: String,
        #[source]
        source: CodeError,
    },
    #[error("unknown code id {0:?}")]
    UnknownCode(String),
}

#[derive(Deserialize)]
struct RawCatalog {
    code: Vec<RawCode>,
}

#[derive(Deserialize)]
struct RawCode {
    id: String,
    source: String,
    entries: Vec<(String, String, String)>,
}

/// One code of the catalog together with the source it is designed for.
#[derive(Debug, Clone)]
pub struct CatalogEntry {
    pub id: String,
    pub source_name: String,
    pub source: SourceModel,
    pub code: VlcCode,
}

#[derive(Debug, Clone)]
pub struct Catalog {
    entries: Vec<CatalogEntry>,
}

impl Catalog {
    /// Parses a catalog document: `[[code]]` tables with `id`, `source` and
    /// `entries = [[symbol, probability, codeword], ...]`.
    pub fn parse(text: &str) -> Result<Self, CatalogError> {
        let raw: RawCatalog = toml::from_str(text)?;
        let entries = raw
            .code
            .into_iter()
            .map(|rc| {
                let wrap = |source| CatalogError::Code {
                    id: rc.id.clone(),
                    source,
                };
                let (symbols, probs): (Vec<String>, Vec<String>) = rc
                    .entries
                    .iter()
                    .map(|(s, p, _)| (s.clone(), p.clone()))
                    .unzip();
                let source = SourceModel::from_decimals(symbols, probs).map_err(wrap)?;
                let words = rc
                    .entries
                    .iter()
                    .map(|(_, _, w)| Codeword::parse(w))
                    .collect::<Result<Vec<_>, _>>()
                    .map_err(wrap)?;
                let code = VlcCode::new(words).map_err(wrap)?;
                Ok(CatalogEntry {
                    id: rc.id.clone(),
                    source_name: rc.source.clone(),
                    source,
                    code,
                })
            })
            .collect::<Result<Vec<_>, CatalogError>>()?;
        Ok(Self { entries })
    }

    pub fn builtin() -> Self {
        Self::parse(BUILTIN).expect("bundled catalog is valid")
    }

    pub fn entries(&self) -> &[CatalogEntry] {
        &self.entries
    }

    /// Looks up a code by id; matching is case-insensitive (`c5` finds `C5`).
    pub fn get(&self, id: &str) -> Result<&CatalogEntry, CatalogError> {
        self.entries
            .iter()
            .find(|e| e.id.eq_ignore_ascii_case(id))
            .ok_or_else(|| CatalogError::UnknownCode(id.to_string()))
    }
}
