//! Test generation for software enforcers derived from input/output
//! automata.
//!
//! The pipeline has four stages:
//!
//! 1. [`hsi`] derives the sequences of enforcer inputs worth covering.
//! 2. [`sut`] drives the system under test and taps the events it emits.
//! 3. [`ripping`] explores the GUI breadth-first and labels every
//!    transition with the monitored events it produced.
//! 4. [`testgen`] turns each sequence into a replayable list of UI actions
//!    with an oracle, and [`diffrun`] runs those tests with and without the
//!    enforcer.
//!
//! [`pipeline`] chains the stages and writes JSON artifacts.

pub mod automaton;
pub mod diffrun;
pub mod hsi;
pub mod pipeline;
pub mod ripping;
pub mod sut;
pub mod testgen;
