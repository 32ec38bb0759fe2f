pub mod category;
pub mod config;
pub mod dataflow;
pub mod detector;
pub mod ease;
pub mod error;
pub mod http;
pub mod keywords;
pub mod model;
pub mod pipeline;
pub mod pysyntax;
pub mod repo;
pub mod report;
pub mod risk;
