//! Exact rectangle-complex half-translation surfaces, their vertical
//! foliations, interval exchanges, and limiting Teichmüller distances along
//! vertical stretch rays.

pub mod numeric;
pub mod fixtures;
pub mod surface;
pub mod iet;
pub mod foliation;
pub mod limitsurf;
pub mod asymptotics;
pub mod extremal;
