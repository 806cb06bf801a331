//! Runs a few simulations on the small preset and prints their trajectories.
//!
//!   [ILM_PRESET=large] cargo run --release -p ilm-core --example single_run -- [p] [runs] [n1 n2 n3]

use std::time::Instant;

use ilm_core::ilm::run_single;
use ilm_core::{Baselines, SimConfig};

fn main() -> ilm_core::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let p: f64 = args.first().and_then(|s| s.parse().ok()).unwrap_or(0.75);
    let runs: usize = args.get(1).and_then(|s| s.parse().ok()).unwrap_or(3);
    let mut config = match std::env::var("ILM_PRESET").as_deref() {
        Ok("large") => SimConfig::large(),
        _ => SimConfig::small(),
    };
    if args.len() >= 5 {
        config.n1 = args[2].parse().unwrap();
        config.n2 = args[3].parse().unwrap();
        config.n3 = args[4].parse().unwrap();
    }
    if let Some(l) = args.get(5).and_then(|s| ilm_core::Loss::parse(s)) {
        config.loss = l;
    }
    let start = Instant::now();
    let baselines = Baselines::estimate(config.n1, config.n3, config.baseline_samples.min(200), config.baseline_seed)?;
    println!("c0 = {:.5} ({:.2?})", baselines.c0.value, start.elapsed());
    for run in 0..runs {
        let start = Instant::now();
        let result = run_single(&config, p, run, 1, &baselines)?;
        println!("run {run} ({:.2?})", start.elapsed());
        for r in &result.trajectory.records {
            let m = &r.metrics;
            println!(
                "  g{:>2} x={:.3} c={:.3} s={} a={:.3} b={:.3}",
                r.generation,
                m.x,
                m.c,
                m.s.map(|s| format!("{s:.3}")).unwrap_or_else(|| "  -  ".into()),
                m.a,
                m.b
            );
        }
    }
    Ok(())
}
