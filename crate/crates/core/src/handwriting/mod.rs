//! Online handwriting: pen-stream ingestion, stroke segmentation and
//! per-sample kinematics for both on-surface and in-air movement.

mod kinematics;
mod stream;

pub use kinematics::{kinematic_analysis, kinematic_features, Kinematics, Origin, KINEMATIC_NAMES};
pub use stream::{
    parse_pen_stream, read_pen_stream, segment_strokes, write_pen_stream, PenSample, PenState, Stroke,
};

pub const KINEMATIC_DIM: usize = 21;
/// Nominal tablet rate; timestamps decide the actual spacing.
pub const PEN_RATE: f64 = 180.0;
