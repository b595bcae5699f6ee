//! Runs every gradient verification suite and prints the worst case of each.
//!
//!     cargo run --release --example gradcheck [seed]

use spikegrad::harness::gradcheck::{run_suite, Suite};

fn main() -> spikegrad::Result<()> {
    let seed = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(0);
    for suite in [Suite::RelaxedFd, Suite::RtrlVsBptt, Suite::SpikepropFd, Suite::BetaPower] {
        let cases = run_suite(suite, seed)?;
        let worst = cases
            .iter()
            .max_by(|a, b| a.max_rel_err.total_cmp(&b.max_rel_err))
            .expect("suites are non-empty");
        let failed = cases.iter().filter(|c| !c.passed()).count();
        println!(
            "{:<14} {:>3} cases, {failed} failed, worst {:.2e} ({})",
            suite.name(),
            cases.len(),
            worst.max_rel_err,
            worst.name
        );
    }
    Ok(())
}
