pub mod condexp;
pub mod convergence;
pub mod element;
pub mod error;
pub mod examples;
pub mod lsn;
pub mod model;
pub mod natset;
pub mod poisson;
pub mod product;
pub mod report;
pub mod scalar;
pub mod space;
pub mod stein;
