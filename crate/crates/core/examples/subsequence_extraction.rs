//! Convergent subsequences of random and drifting channel sequences.

use qprob::channels::extract_convergent_subsequence;
use qprob::random::{random_sequence, Drift};

fn main() -> qprob::error::Result<()> {
    let seq = random_sequence(2, 2, 2, 200, 42, Drift::None)?;
    let x = extract_convergent_subsequence(&seq, 0.15, &[])?;
    println!(
        "200 independent draws, tol 0.15: kept {} terms, first indices {:?}",
        x.indices.len(),
        &x.indices[..x.indices.len().min(8)]
    );
    println!("limit valid: {}", x.limit.validate().ok);

    let drift = random_sequence(2, 2, 2, 60, 7, Drift::Shrink)?;
    let y = extract_convergent_subsequence(&drift, 0.05, &[])?;
    println!(
        "shrinking drift, tol 0.05: kept indices {}..={} ({} terms)",
        y.indices[0],
        y.indices[y.indices.len() - 1],
        y.indices.len()
    );
    let trace: Vec<String> = y.tail_gaps.iter().step_by(10).map(|g| format!("{g:.2e}")).collect();
    println!("tail gap trace (every 10th): {}", trace.join(" "));

    let again = extract_convergent_subsequence(&drift.subsequence(&y.indices)?, 0.05, &[])?;
    println!("re-extraction keeps everything: {}", again.indices.len() == y.indices.len());
    Ok(())
}
