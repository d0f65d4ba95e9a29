use std::io::{BufRead, Write};

use super::TrainError;

#[derive(Debug, Clone, PartialEq)]
pub struct EpochRecord {
    /// 1-based.
    pub epoch: usize,
    pub train_loss: f64,
    pub validation_loss: f64,
    pub seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct TrainHistory {
    pub epochs: Vec<EpochRecord>,
    /// Epoch with the minimal validation loss; 0 when no epoch completed.
    pub best_epoch: usize,
    pub stopped_early: bool,
    /// Set when training stopped on a non-finite loss or gradient.
    pub aborted: Option<String>,
}

impl TrainHistory {
    pub fn best(&self) -> Option<&EpochRecord> {
        self.epochs.iter().find(|e| e.epoch == self.best_epoch)
    }

    /// Same history without wall-clock times, for reproducibility checks.
    pub fn without_timing(&self) -> Self {
        let mut h = self.clone();
        h.epochs.iter_mut().for_each(|e| e.seconds = 0.0);
        h
    }
}

/// Patience-based stopping on strictly improving validation loss.
#[derive(Debug, Clone, PartialEq)]
pub struct EarlyStopping {
    patience: usize,
    best: f64,
    best_epoch: usize,
    stale: usize,
}

impl EarlyStopping {
    pub fn new(patience: usize) -> Self {
        Self {
            patience,
            best: f64::INFINITY,
            best_epoch: 0,
            stale: 0,
        }
    }

    /// Records `epoch`'s validation loss; returns whether it is the new best.
    pub fn observe(&mut self, epoch: usize, loss: f64) -> bool {
        if loss < self.best {
            self.best = loss;
            self.best_epoch = epoch;
            self.stale = 0;
            true
        } else {
            self.stale += 1;
            false
        }
    }

    pub fn should_stop(&self) -> bool {
        self.stale >= self.patience
    }

    pub fn best_epoch(&self) -> usize {
        self.best_epoch
    }

    pub fn best_loss(&self) -> f64 {
        self.best
    }
}

const HEADER: &str = "#epoch\ttrain_loss\tvalidation_loss\tseconds\tbest";

/// Tab-separated history; `best` marks the selected epoch. Trailing comment
/// lines record early stopping and aborts.
pub fn write_history<W: Write>(mut w: W, h: &TrainHistory) -> std::io::Result<()> {
    writeln!(w, "{HEADER}")?;
    for e in &h.epochs {
        writeln!(
            w,
            "{}\t{}\t{}\t{:.3}\t{}",
            e.epoch,
            e.train_loss,
            e.validation_loss,
            e.seconds,
            u8::from(e.epoch == h.best_epoch)
        )?;
    }
    writeln!(w, "# stopped_early\t{}", h.stopped_early)?;
    if let Some(msg) = &h.aborted {
        writeln!(w, "# aborted\t{msg}")?;
    }
    Ok(())
}

pub fn read_history<R: BufRead>(r: R) -> Result<TrainHistory, TrainError> {
    let mut h = TrainHistory::default();
    for (i, line) in r.lines().enumerate() {
        let line = line.map_err(|e| TrainError::History {
            line: i + 1,
            msg: e.to_string(),
        })?;
        let err = |msg: String| TrainError::History { line: i + 1, msg };
        if let Some(rest) = line.strip_prefix("# stopped_early\t") {
            h.stopped_early = rest == "true";
            continue;
        }
        if let Some(rest) = line.strip_prefix("# aborted\t") {
            h.aborted = Some(rest.to_string());
            continue;
        }
        if line.starts_with('#') || line.is_empty() {
            continue;
        }
        let c: Vec<&str> = line.split('\t').collect();
        let [epoch, tl, vl, secs, best] = c[..] else {
            return Err(err(format!("expected 5 columns, got {}", c.len())));
        };
        let f = |s: &str| s.parse::<f64>().map_err(|e| err(format!("`{s}`: {e}")));
        let epoch: usize = epoch.parse().map_err(|e| err(format!("`{epoch}`: {e}")))?;
        if best == "1" {
            h.best_epoch = epoch;
        }
        h.epochs.push(EpochRecord {
            epoch,
            train_loss: f(tl)?,
            validation_loss: f(vl)?,
            seconds: f(secs)?,
        });
    }
    Ok(h)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run(losses: &[f64], patience: usize) -> (usize, usize) {
        let mut es = EarlyStopping::new(patience);
        for (i, &l) in losses.iter().enumerate() {
            es.observe(i + 1, l);
            if es.should_stop() {
                return (i + 1, es.best_epoch());
            }
        }
        (losses.len(), es.best_epoch())
    }

    #[test]
    fn stopping_rule() {
        let decreasing: Vec<f64> = (0..100).map(|i| 100.0 - i as f64).collect();
        assert_eq!(run(&decreasing, 10), (100, 100));
        let flat: Vec<f64> = (1..=100)
            .map(|e| if e <= 5 { 10.0 - e as f64 } else { 5.0 })
            .collect();
        assert_eq!(run(&flat, 10), (15, 5));
    }

    #[test]
    fn history_round_trip() {
        let h = TrainHistory {
            epochs: vec![
                EpochRecord {
                    epoch: 1,
                    train_loss: 0.9,
                    validation_loss: 0.8,
                    seconds: 0.0,
                },
                EpochRecord {
                    epoch: 2,
                    train_loss: 0.5,
                    validation_loss: 0.85,
                    seconds: 0.0,
                },
            ],
            best_epoch: 1,
            stopped_early: true,
            aborted: Some("non-finite loss at epoch 3".into()),
        };
        let mut buf = Vec::new();
        write_history(&mut buf, &h).unwrap();
        assert_eq!(read_history(buf.as_slice()).unwrap(), h);
    }
}
