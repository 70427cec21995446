//! Record one lossy trial as a JSON-lines trace, then replay it losslessly.
//!
//! `cargo run --release --example protocol_trace`

use redrec::sim::{trace_trial, LossParams, TrialOptions};
use redrec::trace::{read_trace, replay, write_trace};
use redrec::{GridSpec, Planner};

fn main() -> redrec::Result<()> {
    let spec = GridSpec::square(12, 24)?;
    let (record, events) =
        trace_trial(spec, &LossParams::experimental(), Planner::RedRec, &TrialOptions::default(), 9, 0)?;
    println!("trial: success {}, {} cycles, {} events", record.success, record.cycles, events.len());

    let mut buf = Vec::new();
    write_trace(&mut buf, &events)?;
    println!(
        "trace is {} bytes; first line:\n  {}",
        buf.len(),
        String::from_utf8_lossy(&buf).lines().next().unwrap_or("")
    );

    let back = read_trace(buf.as_slice())?;
    assert_eq!(back, events);
    for c in replay(&back)? {
        println!(
            "cycle {}: {} batches, lossless {} atoms, measured {:?}, consistent {}",
            c.cycle, c.batches, c.lossless_atoms, c.measured_atoms, c.consistent
        );
    }
    Ok(())
}
