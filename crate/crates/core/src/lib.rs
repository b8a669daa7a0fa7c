#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod acs;
pub mod batch;
pub mod engine;
pub mod families;
pub mod fms;
pub mod geom;
pub mod log;
pub mod net;
pub mod par;
pub mod proto;
pub mod scenario;
pub mod snapshot;
pub mod world;
