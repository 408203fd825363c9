//! Saliency-guided open-world detection toolkit: spectral-residual saliency,
//! saliency/image fusion, proposal relabeling, open-world dataset views and
//! a COCO-style evaluation engine with open-world metrics.

pub mod dataset;
pub mod error;
pub mod fft;
pub mod filter;
pub mod fusion;
pub mod geometry;
pub mod io;
pub mod metrics;
pub mod raster;
pub mod relabel;
pub mod saliency;

pub use error::{Error, Result};
pub use fusion::{merge, FusionWeights};
pub use geometry::{clip_box, iou, Annotation, BBox, CategoryId, Detection, InstanceId, SizeBucket};
pub use raster::{ImageBuffer, Plane, SaliencyMap};
pub use relabel::{relabel_dataset, relabel_image, ProposalSet, ProposalSource, RelabelConfig};
pub use saliency::{region_saliency, spectral_residual, SpectralConfig};
