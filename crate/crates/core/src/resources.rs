//! Static chemistry tables shared by every stage: functional-group library,
//! species dictionary, and leaving-group rules.

use std::path::Path;

use thiserror::Error;

use crate::balance::{BalanceError, LeavingGroupTable};
use crate::condition::{SpeciesDictionary, SpeciesError};
use crate::tagger::{FgLibrary, TaggerError};

#[derive(Debug, Error)]
pub enum ResourceError {
    #[error(transparent)]
    Library(#[from] TaggerError),
    #[error(transparent)]
    Species(#[from] SpeciesError),
    #[error(transparent)]
    LeavingGroups(#[from] BalanceError),
}

#[derive(Debug, Clone)]
pub struct Resources {
    pub library: FgLibrary,
    pub species: SpeciesDictionary,
    pub leaving_groups: LeavingGroupTable,
}

impl Resources {
    pub fn bundled() -> Self {
        Resources {
            library: FgLibrary::bundled(),
            species: SpeciesDictionary::bundled(),
            leaving_groups: LeavingGroupTable::bundled(),
        }
    }

    /// Loads each table from its path, or the bundled default when `None`.
    pub fn load(
        library: Option<&Path>,
        species: Option<&Path>,
        leaving_groups: Option<&Path>,
    ) -> Result<Self, ResourceError> {
        Ok(Resources {
            library: library.map(FgLibrary::load).transpose()?.unwrap_or_else(FgLibrary::bundled),
            species: species.map(SpeciesDictionary::load).transpose()?.unwrap_or_else(SpeciesDictionary::bundled),
            leaving_groups: leaving_groups
                .map(LeavingGroupTable::load)
                .transpose()?
                .unwrap_or_else(LeavingGroupTable::bundled),
        })
    }
}
