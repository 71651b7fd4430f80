pub mod config;
pub mod ergodics;
pub mod kernels;
pub mod optimizer;
pub mod rng;
pub mod runner;
pub mod trading;
pub mod walk;
