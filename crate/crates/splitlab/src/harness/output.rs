//! CSV and summary output.
//!
//! `rounds.csv` gets one row per global round, streamed as rounds finish;
//! `ledger.csv` gets the per-round per-cluster traffic counters; and
//! `summary.txt` the run's headline numbers. Output is a pure function
//! of the configuration, byte for byte.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use crate::error::Result;
use crate::events::{RoundRecord, RunSink, TamperEvent};
use crate::harness::{metrics, ExperimentConfig, RunOutput};

pub struct OutputWriter {
    dir: PathBuf,
    rounds: BufWriter<File>,
}

fn detections_cell(events: &[TamperEvent]) -> String {
    events
        .iter()
        .map(|e| {
            let flagged = e
                .flagged_clients
                .iter()
                .map(|c| (c + 1).to_string())
                .collect::<Vec<_>>()
                .join("+");
            let reselected = match e.reselected {
                Some(r) => (r + 1).to_string(),
                None => "x".to_string(),
            };
            format!("d{}:f{}:r{}", e.disqualified_cluster + 1, flagged, reselected)
        })
        .collect::<Vec<_>>()
        .join(";")
}

impl OutputWriter {
    /// Creates `rounds.csv` in `dir` with a header sized to the run's
    /// cluster count.
    pub fn create(dir: &Path, num_clusters: usize) -> Result<Self> {
        std::fs::create_dir_all(dir)?;
        let mut rounds = BufWriter::new(File::create(dir.join("rounds.csv"))?);
        let loss_cols: Vec<String> = (1..=num_clusters).map(|r| format!("loss_{r}")).collect();
        writeln!(
            rounds,
            "round,{},selected,selected_all_honest,val_loss_final,test_accuracy,grad_norm_sq,adopted_turns,detections",
            loss_cols.join(",")
        )?;
        Ok(OutputWriter {
            dir: dir.to_path_buf(),
            rounds,
        })
    }

    /// Writes `ledger.csv` and `summary.txt` and flushes everything.
    pub fn finish(mut self, config: &ExperimentConfig, output: &RunOutput) -> Result<()> {
        self.rounds.flush()?;

        let mut ledger = BufWriter::new(File::create(self.dir.join("ledger.csv"))?);
        writeln!(
            ledger,
            "round,cluster,cut_scalar_units,handoff_scalar_units,client_pass_units"
        )?;
        for ((round, cluster), counters) in output.ledger.rows() {
            writeln!(
                ledger,
                "{},{},{},{},{}",
                round,
                cluster + 1,
                counters.cut_scalar_units,
                counters.handoff_scalar_units,
                counters.client_pass_units
            )?;
        }
        ledger.flush()?;

        let mut summary = BufWriter::new(File::create(self.dir.join("summary.txt"))?);
        let accuracy_series: Vec<f64> =
            output.records.iter().map(|r| r.test_accuracy).collect();
        let final_accuracy = accuracy_series.last().copied().unwrap_or(f64::NAN);
        let final_ma = if accuracy_series.is_empty() {
            f64::NAN
        } else {
            *metrics::moving_average(&accuracy_series, 10)?
                .last()
                .expect("nonempty")
        };
        let detections: usize = output.records.iter().map(|r| r.detections.len()).sum();

        let mut histogram = vec![0usize; config.num_clusters()];
        for record in &output.records {
            histogram[record.selected] += 1;
        }
        let histogram_cell = histogram
            .iter()
            .enumerate()
            .map(|(r, count)| format!("{}:{}", r + 1, count))
            .collect::<Vec<_>>()
            .join(" ");

        let totals = output.ledger.total();
        writeln!(summary, "mode: {:?}", config.mode)?;
        writeln!(summary, "seed: {}", config.seed)?;
        writeln!(summary, "clients: {}", config.clients)?;
        writeln!(summary, "rounds: {}", config.rounds)?;
        writeln!(summary, "final_test_accuracy: {final_accuracy}")?;
        writeln!(summary, "final_moving_average_accuracy_w10: {final_ma}")?;
        writeln!(summary, "detections: {detections}")?;
        writeln!(summary, "selection_histogram: {histogram_cell}")?;
        writeln!(summary, "cut_scalar_units: {}", totals.cut_scalar_units)?;
        writeln!(
            summary,
            "handoff_scalar_units: {}",
            totals.handoff_scalar_units
        )?;
        writeln!(summary, "client_pass_units: {}", totals.client_pass_units)?;
        writeln!(
            summary,
            "expected_comm_total_per_round: {}",
            output.expected_per_round.comm_total
        )?;
        writeln!(
            summary,
            "expected_compute_total_per_round: {}",
            output.expected_per_round.compute_total
        )?;
        writeln!(
            summary,
            "ledger_matches_expected: {}",
            output.ledger_matches_expected
        )?;
        summary.flush()?;
        Ok(())
    }
}

impl RunSink for OutputWriter {
    fn on_round(&mut self, record: &RoundRecord) {
        let losses = record
            .cluster_losses
            .iter()
            .map(f64::to_string)
            .collect::<Vec<_>>()
            .join(",");
        // Surfacing write errors at flush time keeps the sink trait
        // infallible on the hot path.
        let _ = writeln!(
            self.rounds,
            "{},{},{},{},{},{},{},{},{}",
            record.round,
            losses,
            record.selected + 1,
            u8::from(record.selected_all_honest),
            record.final_validation_loss,
            record.test_accuracy,
            record.grad_norm_sq,
            record.adopted_turns,
            detections_cell(&record.detections),
        );
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ledger::Counters;

    #[test]
    fn detections_cell_format() {
        let events = vec![TamperEvent {
            disqualified_cluster: 1,
            flagged_clients: vec![0, 3],
            reselected: Some(2),
        }];
        assert_eq!(detections_cell(&events), "d2:f1+4:r3");
        assert_eq!(detections_cell(&[]), "");
    }

    #[test]
    fn rounds_csv_row_shape() {
        let dir = tempfile::tempdir().unwrap();
        let mut writer = OutputWriter::create(dir.path(), 2).unwrap();
        writer.on_round(&RoundRecord {
            round: 1,
            cluster_losses: vec![0.5, 0.25],
            selected: 1,
            selected_all_honest: true,
            final_validation_loss: 0.25,
            test_accuracy: 0.75,
            grad_norm_sq: 0.001,
            adopted_turns: 2,
            detections: vec![],
            ledger_total: Counters::default(),
        });
        writer.rounds.flush().unwrap();
        let text = std::fs::read_to_string(dir.path().join("rounds.csv")).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(
            lines[0],
            "round,loss_1,loss_2,selected,selected_all_honest,val_loss_final,test_accuracy,grad_norm_sq,adopted_turns,detections"
        );
        assert_eq!(lines[1], "1,0.5,0.25,2,1,0.25,0.75,0.001,2,");
    }
}
