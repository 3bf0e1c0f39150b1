//! Bounded explicit-state checking of linearizability and relational-view proof outlines.

pub mod command_lang;
pub mod state_model;
pub mod monoid_dcsl;
pub mod monoid_rgsep;
pub mod logic;
pub mod linearizability;
pub mod views_core;
pub mod model_file;
pub mod fixtures;
