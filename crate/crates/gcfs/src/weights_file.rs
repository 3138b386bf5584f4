//! `.gcfs` files on disk.

use std::path::Path;
use std::sync::Arc;

use gcfs_core::gcfsnet::{GcfsModel, Variant};
use gcfs_core::weights::WeightContainer;

use crate::error::{AppError, AppResult};

pub fn save_container(path: &Path, wc: &WeightContainer) -> AppResult<()> {
    std::fs::write(path, wc.encode()).map_err(|e| AppError::io(path, e))
}

pub fn load_container(path: &Path) -> AppResult<WeightContainer> {
    let bytes = std::fs::read(path).map_err(|e| AppError::io(path, e))?;
    WeightContainer::decode(&bytes).map_err(|e| AppError::Config(format!("{}: {e}", path.display())))
}

/// Loads a model and checks it is the expected variant.
pub fn load_model(path: &Path, variant: Variant) -> AppResult<Arc<GcfsModel>> {
    let wc = load_container(path)?;
    GcfsModel::from_container(&wc, Some(variant))
        .map(Arc::new)
        .map_err(|e| AppError::Config(format!("{}: {e}", path.display())))
}

#[cfg(test)]
mod tests {
    use super::*;
    use gcfs_core::gcfsnet::GcfsConfig;

    #[test]
    fn file_round_trip_is_bit_identical() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("m.gcfs");
        let (wc, _) = GcfsModel::random(GcfsConfig::binaural(), 3).unwrap().to_container();
        save_container(&p, &wc).unwrap();
        let first = std::fs::read(&p).unwrap();
        let loaded = load_container(&p).unwrap();
        assert_eq!(loaded, wc);
        save_container(&p, &loaded).unwrap();
        assert_eq!(std::fs::read(&p).unwrap(), first);
        assert!(load_model(&p, Variant::Binaural).is_ok());
        assert_eq!(load_model(&p, Variant::Monaural).unwrap_err().exit_code(), 3);
    }
}
