pub mod commands;
pub mod config;
pub mod constants;
pub mod dressed_hamiltonian;
pub mod dressing_solver;
pub mod error;
pub mod fitting;
pub mod local_frame;
pub mod magnetostatics;
pub mod output;
pub mod selftest;
pub mod spectroscopy;
pub mod spin_algebra;
