//! Draws a base model and a drifted variant, then prints their footprints.
//!
//!     cargo run --example generate_models -- 7

use driftbench::model::{
    activity_overlap, directly_follows, generate_model_pair, play_out, GenerationConfig,
};

fn main() {
    let seed = std::env::args()
        .nth(1)
        .and_then(|s| s.parse().ok())
        .unwrap_or(7);
    let pair = generate_model_pair(&GenerationConfig::with_seed(seed)).expect("model pair");
    println!("p = {}", pair.p);
    println!("k = {}", pair.k.model);
    println!("w = {}", pair.w);
    println!("edit steps: {}", pair.k.steps.len());
    println!(
        "activity overlap {:.3}",
        activity_overlap(&pair.p, &pair.k.model)
    );

    let (dp, dk) = (directly_follows(&pair.p), directly_follows(&pair.k.model));
    println!(
        "df(p): {} pairs, df(k): {} pairs, shared: {}",
        dp.len(),
        dk.len(),
        dp.intersection(&dk).count()
    );

    for trace in play_out(&pair.p, 3, seed) {
        println!("  {}", trace.join(" "));
    }
}
