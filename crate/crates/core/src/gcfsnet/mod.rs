//! Group communication filter-and-sum network (GCFSnet) inference.
//!
//! Per frame and ear, the network maps the STFT of its feature channels to
//! complex filter-and-sum weights for the two ipsilateral microphones plus a
//! single-frame complex postfilter. Both ears run the same weights; only the
//! channel order of the features differs.

mod config;
mod layers;
mod model;
mod processor;

pub use config::{param_count, tensor_layout, GcfsConfig, MicRole, ParamKind, TensorSpec, Variant};
pub use layers::{fc_tanh, DelayLine, Dense, DsConv, GroupComm, Gru};
pub use model::{apply_filters, FilterSet, GcfsModel, GcfsState};
pub use processor::GcfsProcessor;
