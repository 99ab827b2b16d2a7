//! On-disk scene bundles, segmentation results and their binary rasters.

pub mod bundle;
pub mod formats;
pub mod tracks;

pub use bundle::{
    read_bundle, read_ground_truth, read_result_maps, write_bundle, write_ground_truth, write_result, BundleManifest,
    IoError, SegmentationResult,
};
pub use formats::FormatError;
pub use tracks::sanitize_tracks;
