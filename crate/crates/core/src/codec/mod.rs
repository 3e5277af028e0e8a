//! Trajectory ↔ frame-sequence conversion: 16-sector chain codes for
//! direction, 16 quantile bins for speed, one extra EOS class in each block.

mod freeman;
mod quantizer;
mod tracing;
mod trajectory;

pub use freeman::{angle_deg, displacements, freeman_encode, sector_center, Displacement, SECTOR_DEG};
pub use quantizer::{fit_speed_quantizer, QuantizerSpec};
pub use tracing::{decode_tracing, encode_tracing, fit_quantizer, EncodedTracing, Frame};
pub use trajectory::{Point, Trajectory};

pub const DIRECTION_LEVELS: usize = 16;
pub const SPEED_LEVELS: usize = 16;
/// Classes per block: 16 levels plus EOS.
pub const CLASSES: usize = 17;
/// Index of the EOS class inside each block.
pub const EOS: u8 = 16;
pub const FRAME_DIM: usize = 2 * CLASSES;
/// Longest accepted tracing, in displacement steps.
pub const MAX_STEPS: usize = 99;
/// Default decode step: 100 Hz sampling.
pub const DEFAULT_DT: f64 = 0.01;
