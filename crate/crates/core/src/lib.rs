pub mod cones;
pub mod convex;
pub mod error;
pub mod linalg;
pub mod lp;
pub mod lsq;
pub mod measures;
pub mod norms;
pub mod oracle;
pub mod partition;
pub mod renegar;
