//! Rectification, the homography baseline and photometric scoring.

mod homography;
mod photometric;
mod ransac;
mod raster;
mod tps;

pub use homography::{homography_dlt, Homography};
pub use photometric::{histogram_match, photometric_difference, photometric_filtering, seed_difference};
pub use ransac::{baseline_detect, ransac_homography, RansacConfig, RansacResult};
pub use raster::{encode_pnm, encode_pnm_ascii, parse_pnm, rasterize_polygon, read_pnm, write_pnm, Raster};
pub use tps::{tps_fit, tps_warp, warp_with, ThinPlateSpline};
