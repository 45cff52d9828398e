pub mod adapter;
pub mod algorithm;
pub mod bundle;
pub mod cli;
pub mod evaluation;
pub mod leaderboard;
pub mod model;
pub mod stream;
