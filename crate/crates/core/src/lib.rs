//! Semantic geocells, haversine label smoothing, cluster-retrieval
//! refinement and geolocalization metrics.

pub mod clustering;
pub mod eval;
pub mod geo;
pub mod geocell;
pub mod io;
pub mod labels;
pub mod par;
pub mod refine;
pub mod sample;
pub mod synth;
