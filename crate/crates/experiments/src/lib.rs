pub mod config;
pub mod fit;
pub mod output;
pub mod pipeline;
pub mod scenarios;
