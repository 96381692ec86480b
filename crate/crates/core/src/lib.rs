pub mod graph;
pub mod linalg;
pub mod group;
pub mod analysis;
pub mod tree;
pub mod fo;
pub mod witness;
pub mod repro;
