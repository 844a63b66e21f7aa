use std::io::Write;

use super::{ExperimentConfig, ExperimentError};

pub const CSV_HEADER: [&str; 14] = [
    "kb_size",
    "c",
    "alpha",
    "seed",
    "rep",
    "T_seconds",
    "L",
    "N",
    "sigma_pre",
    "sigma_post_dr",
    "delta_sigma_dr",
    "sigma_post_ssr",
    "delta_sigma_ssr",
    "timeout_flag",
];

/// One repetition. Measurements are `None` when the repetition timed out.
/// Deltas are in percentage points.
#[derive(Clone, Debug, PartialEq)]
pub struct MetricsRow {
    pub kb_size: usize,
    pub c: f64,
    pub alpha: f64,
    pub seed: u64,
    pub rep: usize,
    pub t_seconds: Option<f64>,
    pub l: Option<usize>,
    pub n: Option<usize>,
    pub sigma_pre: Option<f64>,
    pub sigma_post_dr: Option<f64>,
    pub delta_sigma_dr: Option<f64>,
    pub sigma_post_ssr: Option<f64>,
    pub delta_sigma_ssr: Option<f64>,
    pub timeout: bool,
}

impl MetricsRow {
    pub fn timed_out(config: &ExperimentConfig, rep: usize) -> Self {
        MetricsRow {
            kb_size: config.kb_size,
            c: config.conflict_fraction,
            alpha: config.alpha,
            seed: config.seed,
            rep,
            t_seconds: None,
            l: None,
            n: None,
            sigma_pre: None,
            sigma_post_dr: None,
            delta_sigma_dr: None,
            sigma_post_ssr: None,
            delta_sigma_ssr: None,
            timeout: true,
        }
    }

    pub fn fields(&self) -> [String; 14] {
        fn num(v: Option<f64>, places: usize) -> String {
            v.map_or_else(String::new, |x| format!("{x:.places$}"))
        }
        fn count(v: Option<usize>) -> String {
            v.map_or_else(String::new, |x| x.to_string())
        }
        [
            self.kb_size.to_string(),
            format!("{:.2}", self.c),
            format!("{:.2}", self.alpha),
            self.seed.to_string(),
            self.rep.to_string(),
            num(self.t_seconds, 6),
            count(self.l),
            count(self.n),
            num(self.sigma_pre, 6),
            num(self.sigma_post_dr, 6),
            num(self.delta_sigma_dr, 4),
            num(self.sigma_post_ssr, 6),
            num(self.delta_sigma_ssr, 4),
            u8::from(self.timeout).to_string(),
        ]
    }
}

/// Streams rows to a CSV writer, header first.
pub struct CsvSink<W: Write> {
    writer: csv::Writer<W>,
}

impl<W: Write> CsvSink<W> {
    pub fn new(out: W) -> Result<Self, ExperimentError> {
        let mut writer = csv::Writer::from_writer(out);
        writer.write_record(CSV_HEADER)?;
        Ok(CsvSink { writer })
    }

    pub fn write(&mut self, row: &MetricsRow) -> Result<(), ExperimentError> {
        self.writer.write_record(row.fields())?;
        self.writer.flush()?;
        Ok(())
    }

    pub fn into_inner(self) -> Result<W, ExperimentError> {
        self.writer.into_inner().map_err(|e| ExperimentError::Io(e.into_error()))
    }
}

pub fn write_csv<W: Write>(out: W, rows: &[MetricsRow]) -> Result<W, ExperimentError> {
    let mut sink = CsvSink::new(out)?;
    for row in rows {
        sink.write(row)?;
    }
    sink.into_inner()
}
