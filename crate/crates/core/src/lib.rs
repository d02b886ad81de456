pub mod count_chain;
pub mod error;
pub mod params;
pub mod rng;
pub mod micro;
pub mod exact;
pub mod moments;
pub mod coarse;
pub mod scaling;
pub mod experiments;
