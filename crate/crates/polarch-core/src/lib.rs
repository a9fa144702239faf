//! Privacy policy and architecture conformance checking.
//!
//! Policies say which entities may hold or link which data, where it may be
//! stored and for how long, and what consent and purposes apply. An
//! architecture lists the actions a system performs. The engine tries to
//! prove, from the architecture, each goal derived from the policy and
//! classifies the outcome.

#![no_std]

extern crate alloc;

pub mod arch;
pub mod atom;
pub mod engine;
pub mod facts;
pub mod goals;
pub mod policy;
pub mod report;
pub mod rules;
pub mod term;
pub mod trace;
