pub mod diagnose;
pub mod estimate;
pub mod reproduce;
pub mod simulate;
