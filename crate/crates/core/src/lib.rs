pub mod class_a;
pub mod class_b;
pub mod code;
pub mod gf;
pub mod linalg;
pub mod metrics;
pub mod model;
pub mod repair;
pub mod store;
