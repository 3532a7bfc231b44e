//! Generators and oracles shared by the property suites and the
//! acceptance run.
#![allow(dead_code)]

pub mod ground;
pub mod prime;
pub mod roundtrip;
pub mod fixture;
