pub mod datagen;
pub mod diff;
pub mod dsl;
pub mod equivalence;
pub mod gcd;
pub mod prompt;
pub mod stats;
pub mod wire;
