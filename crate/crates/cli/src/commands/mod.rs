pub mod benchmark;
pub mod fit;
pub mod report;
pub mod simulate;
