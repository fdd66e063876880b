//! Concrete problem instances, data synthesis and metrics.

mod csmri;
mod dictlearn;
mod lasso;
mod transforms;

pub use csmri::{
    add_noise_snr, generate_mask, make_csmri, phantom, psnr, CsMriInstance, CsMriOracle, CsMriParams,
    WaveletScad,
};
pub use dictlearn::{
    generate_synthetic_dl, make_dictionary_learning, DictConstraints, DictLearnInstance, DictLearnOracle,
    SyntheticDictionary,
};
pub use lasso::{make_lasso, synthetic_lasso, LassoInstance, LassoOracle};
pub use transforms::{
    centered_dct_position, haar_dwt2, haar_idwt2, CenteredDct2, DctMatrix, HaarTransform2,
};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Deterministic generator for every random draw in the crate.
pub fn seeded_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
