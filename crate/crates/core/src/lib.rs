pub mod config;
pub mod detector;
pub mod dynamics;
pub mod expr;
pub mod geometry;
pub mod linalg;
pub mod poisson;
pub mod reduction;
pub mod systems;
