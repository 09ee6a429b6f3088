//! Objective evaluation measures.
//!
//! Paired measures compare a reference with a processed waveform
//! ([`seg_snr`], [`snr_improvement`], [`isd`]); distributional measures
//! compare two sets of clips through [`FeatureVector`]s ([`jsd_features`],
//! [`ndb`]) or Gaussian fits of embeddings ([`frechet_distance`]).

mod divergence;
mod features;
mod frechet;
mod snr;
mod table;

pub use divergence::{
    jsd_1d, jsd_features, kmeans, ndb, ndb_detail, HistogramSpec, KMeans, NdbConfig, NdbReport,
};
pub use features::{extract_features, FeatureVector, FEATURE_DIM, FEATURE_NAMES};
pub use frechet::{fit_gaussian, frechet_distance, GaussianFit};
pub use snr::{
    isd, seg_snr, seg_snr_active, seg_snr_clamped, snr_improvement, ACTIVE_FRAME_REL_THRESHOLD,
    SEGSNR_CLAMP_DB, SEGSNR_EPS, SEGSNR_FRAME_LEN,
};
pub use table::{read_features_csv, read_matrix_csv, write_features_csv, write_matrix_csv};
