//! The bundled application models and scenario samplers.

mod mmcf;
mod opf;
mod sampler;
mod toy;

pub use mmcf::{build_mmcf, Commodity, MmcfInstance};
pub use opf::{build_opf, Bus, Generator, Line, OpfInstance};
pub use sampler::{draw_independent, BernoulliSampler};
pub use toy::{
    build_toy, pattern, pattern_of, table_loss, true_distribution, ToyNetworkInstance, ARCS,
    INCIDENT, MIDDLE, OUTER,
};
