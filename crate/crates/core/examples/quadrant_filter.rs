use camgraph::io::trajectory::{generate_trajectory, TrajectoryKind};
use camgraph::pairing::{select_pairs, PairingParams};
use camgraph::quadrant_filter::{filter_pairs, monte_carlo_filter_rate, FilterMode, StateTable};

fn main() -> camgraph::Result<()> {
    let table = StateTable::builtin();
    for mode in [FilterMode::Strict, FilterMode::Loose] {
        let rate = monte_carlo_filter_rate(&table, mode, 200_000, 1)?;
        println!(
            "{:>6}: {:2} admissible states, expected rate {:.4}, sampled {:.4}",
            mode.as_str(),
            table.admissible_count(mode),
            table.expected_filter_rate(mode),
            rate
        );
    }

    // A jittered grid looking down gives a mix of states.
    let poses = generate_trajectory(TrajectoryKind::Grid, 100, 0.3, 3)?;
    let pairs = select_pairs(&poses, &PairingParams::new(8, 10, 2)?)?;
    let (kept, report) = filter_pairs(&poses, &pairs, &table, FilterMode::Loose)?;
    println!(
        "grid: {} in, {} kept, {} filtered, {} bypassed",
        report.input_pairs,
        kept.len(),
        report.filtered,
        report.bypass
    );
    let busiest = report
        .histogram
        .iter()
        .enumerate()
        .max_by_key(|(_, c)| **c)
        .map(|(s, c)| (s, *c));
    if let Some((state, count)) = busiest {
        println!("most frequent state {state:06b} seen {count} times");
    }
    Ok(())
}
