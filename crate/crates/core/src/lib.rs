//! Structural analysis, balance checks, Lyapunov certificates and
//! simulation for mass-action reaction networks.

pub mod balance;
pub mod decompose;
pub mod exact;
pub mod lyapunov;
pub mod model;
pub mod netparse;
pub mod numeric;
pub mod simulate;
