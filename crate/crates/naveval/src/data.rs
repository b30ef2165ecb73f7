//! Bundled data lookup. `NAVEVAL_DATA_DIR` may hold replacements for the
//! built-in taxonomies (`taxonomies/<name>.json`), the verb lexicon
//! (`verbs.txt`) and default synonym groups (`synonyms.json`).

use std::env;
use std::path::{Path, PathBuf};

use naveval_core::{DirectionTaxonomy, SynonymGroups, VerbLexicon};

use crate::error::Result;
use crate::formats;

pub const DATA_DIR_ENV: &str = "NAVEVAL_DATA_DIR";

fn data_file(rel: &str) -> Option<PathBuf> {
    let dir = env::var_os(DATA_DIR_ENV)?;
    let path = Path::new(&dir).join(rel);
    path.is_file().then_some(path)
}

/// `r2r` and `urban` name bundled taxonomies; anything else is a file path.
pub fn taxonomy(name: &str) -> Result<DirectionTaxonomy> {
    match DirectionTaxonomy::builtin(name) {
        Some(builtin) => match data_file(&format!("taxonomies/{name}.json")) {
            Some(path) => formats::load_taxonomy_file(&path),
            None => Ok(builtin),
        },
        None => formats::load_taxonomy_file(Path::new(name)),
    }
}

pub fn verbs(path: Option<&Path>) -> Result<VerbLexicon> {
    match path
        .map(Path::to_path_buf)
        .or_else(|| data_file("verbs.txt"))
    {
        Some(p) => formats::load_verbs(&p),
        None => Ok(VerbLexicon::navigation()),
    }
}

pub fn synonyms(path: Option<&Path>) -> Result<SynonymGroups> {
    match path
        .map(Path::to_path_buf)
        .or_else(|| data_file("synonyms.json"))
    {
        Some(p) => formats::load_synonyms(&p),
        None => Ok(SynonymGroups::default()),
    }
}
