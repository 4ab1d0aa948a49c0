//! Deterministic multi-agent lattice simulation of a virtual plasmodium.
//!
//! A population of simple particles senses and deposits a diffusing
//! chemoattractant on a periodic 2D lattice. Spatial stimuli (uniform
//! attractant, greyscale images, simulated irradiation) drive collective
//! flux that enhances local contrast in population density and, for image
//! stimuli, produces the scalloped staircase and brightness-contrast
//! percepts. The measurement layer turns runs into column-density profiles,
//! space-time matrices, and contrast (density-range) series; the
//! experiments layer packages the four canned setups behind a CLI with
//! byte-deterministic outputs.

pub mod agents;
pub mod config;
pub mod experiments;
pub mod lattice;
pub mod measurement;
pub mod pgm;
pub mod rng;
pub mod simulation;
pub mod stimulus;
