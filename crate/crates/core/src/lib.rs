pub mod cli;
pub mod counts;
pub mod diagnostics;
pub mod jumps;
pub mod kernels;
pub mod mathkit;
pub mod partition;
pub mod random;
pub mod samplers;
