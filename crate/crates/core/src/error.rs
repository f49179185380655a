use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },

    #[error("layer `{layer}`: {reason}")]
    InvalidLayer { layer: String, reason: String },

    #[error("duplicate layer name `{0}`")]
    DuplicateLayer(String),

    #[error("model `{0}` has no layers")]
    EmptyModel(String),

    #[error("dataflow `{dataflow}`: {reason}")]
    InvalidDataflow { dataflow: String, reason: String },

    #[error("dataflow `{dataflow}` does not map dimension {dim} of layer `{layer}`")]
    UncoveredDim {
        dataflow: String,
        layer: String,
        dim: String,
    },

    #[error("dataflow `{dataflow}` on layer `{layer}`: degenerate mapping: {reason}")]
    DegenerateMapping {
        dataflow: String,
        layer: String,
        reason: String,
    },

    #[error("{level} buffer overflow: {required} bytes required, {available} available")]
    BufferOverflow {
        level: &'static str,
        required: u64,
        available: u64,
    },

    #[error("invalid hardware configuration: {0}")]
    InvalidHardware(String),

    #[error("oracle cap exceeded: {0}")]
    OracleCap(String),

    #[error("invalid sweep configuration: {0}")]
    InvalidSweep(String),
}
