pub mod ar1;
pub mod cli;
pub mod dist;
pub mod error;
pub mod estimate;
pub mod power;
pub mod sim;
pub mod ttest;
