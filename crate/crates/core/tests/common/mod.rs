#![allow(dead_code)]

pub mod rs_oracle;
pub mod nees;
pub mod tracking;
pub mod fsm;
pub mod runs;
