//! Multi-period stockpile blending.
//!
//! Stockpiles of blended ore feed a processing plant in parcels. Each month
//! ore is hauled onto the stockpiles, then parcels draw from them; a plan
//! fixes, for every parcel, the fraction taken from each accessible stockpile
//! and how long the parcel runs. [`fitness::evaluate`] scores a plan, [`de`]
//! searches one month at a time and [`longterm`] chains months together.
//!
//! ```
//! use stockblend_core::de::{solve_one_month, DeConfig};
//! use stockblend_core::generate::{generate_instance, Shape};
//!
//! let instance = generate_instance(&Shape::new(1, &[2], &[3]).unwrap(), 7);
//! let config = DeConfig { max_evaluations: 200, ..DeConfig::default() };
//! let run = solve_one_month(&instance, 0, &instance.initial_state(), &config, None).unwrap();
//! assert_eq!(run.evaluations, 200);
//! assert!(run.best.fitness.is_feasible());
//! ```

pub mod baseline;
pub mod de;
pub mod error;
pub mod fitness;
pub mod generate;
pub mod harness;
pub mod instance;
pub mod longterm;
pub mod model;
pub mod process;
pub mod repair;
pub mod rng;
pub mod stats;

pub use error::{Error, Result};
