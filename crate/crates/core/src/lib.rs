pub mod benchmarks;
pub mod cga;
pub mod harness;
pub mod net;
pub mod protocol;
pub mod sim;
