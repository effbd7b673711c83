//! Convergence history export.
//!
//! Columns: `t,g,best_fitness,worst_fitness,kbest,best_position_0..best_position_{d-1}`.

use std::io::Write;

use crate::gsa::IterationRecord;

pub fn header(dims: usize) -> Vec<String> {
    let mut h: Vec<String> = ["t", "g", "best_fitness", "worst_fitness", "kbest"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    h.extend((0..dims).map(|j| format!("best_position_{j}")));
    h
}

/// Writes the history as CSV. `dims` fixes the number of position columns
/// even when a record has no best position yet.
pub fn write_csv<W: Write>(out: W, dims: usize, history: &[IterationRecord]) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(header(dims))?;
    for r in history {
        let mut row = vec![
            r.t.to_string(),
            r.g.to_string(),
            r.best_fitness.to_string(),
            r.worst_fitness.to_string(),
            r.kbest.to_string(),
        ];
        row.extend((0..dims).map(|j| {
            r.best_position
                .get(j)
                .map_or_else(String::new, |x| x.to_string())
        }));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}
