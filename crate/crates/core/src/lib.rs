pub mod config;
pub mod expr;
pub mod model;
pub mod poly;
pub mod schur;
pub mod asymptotics;
pub mod geometry;
pub mod spectrum;
pub mod oracle;
pub mod plot;
pub mod cli;
