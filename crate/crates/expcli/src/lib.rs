//! Config-driven experiment runner for `levy-expfun`.

pub mod acceptance;
pub mod config;
pub mod report;
pub mod run;
