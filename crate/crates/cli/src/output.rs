use std::fs::OpenOptions;
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use mmdn::hybrid::{RunRecord, SummaryRow};

use crate::UsageError;

pub fn append_records(path: &Path, records: &[RunRecord]) -> Result<(), UsageError> {
    let mut file = OpenOptions::new()
        .create(true)
        .append(true)
        .open(path)
        .map_err(|e| UsageError(format!("cannot open {}: {e}", path.display())))?;
    let mut text = String::new();
    for r in records {
        text.push_str(&serde_json::to_string(r)?);
        text.push('\n');
    }
    file.write_all(text.as_bytes())?;
    Ok(())
}

pub fn read_records(paths: &[PathBuf]) -> Result<Vec<RunRecord>, UsageError> {
    let mut records = Vec::new();
    for path in paths {
        let file = std::fs::File::open(path).map_err(|e| UsageError(format!("cannot open {}: {e}", path.display())))?;
        for (i, line) in BufReader::new(file).lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let r = serde_json::from_str(&line)
                .map_err(|e| UsageError(format!("{}:{}: {e}", path.display(), i + 1)))?;
            records.push(r);
        }
    }
    Ok(records)
}

pub fn write_summary(path: &Path, rows: &[SummaryRow]) -> Result<(), UsageError> {
    let mut w = csv::Writer::from_path(path).map_err(|e| UsageError(format!("cannot write {}: {e}", path.display())))?;
    w.write_record(["problem", "mode", "seed-count", "median_d2", "q10_d2", "q90_d2", "median_budget"])?;
    for r in rows {
        w.write_record([
            r.problem.clone(),
            r.mode.clone(),
            r.seed_count.to_string(),
            r.median_d2.to_string(),
            r.q10_d2.to_string(),
            r.q90_d2.to_string(),
            r.median_budget.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn print_summary(rows: &[SummaryRow], wins: &[(String, f64, f64, bool)]) {
    println!("{:<10} {:<20} {:>5} {:>10} {:>10} {:>10} {:>12}", "problem", "mode", "seeds", "median", "q10", "q90", "budget");
    for r in rows {
        println!(
            "{:<10} {:<20} {:>5} {:>10.6} {:>10.6} {:>10.6} {:>12.1}",
            r.problem, r.mode, r.seed_count, r.median_d2, r.q10_d2, r.q90_d2, r.median_budget
        );
    }
    if !wins.is_empty() {
        let count = wins.iter().filter(|w| w.3).count();
        println!("hybrid beats the budget-matched baseline on {count} of {} problems", wins.len());
    }
}
