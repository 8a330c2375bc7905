use std::fs;
use std::io::Write;
use std::path::Path;

use crate::dynamics::EnergyReport;
use crate::error::Result;

/// Header plus string cells, written as comma-separated text.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Table {
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> String {
        let mut s = self.header.join(",");
        s.push('\n');
        for r in &self.rows {
            s.push_str(&r.join(","));
            s.push('\n');
        }
        s
    }
}

pub fn num(x: f64) -> String {
    format!("{x:.10e}")
}

/// Everything a study leaves on disk.
#[derive(Clone, Debug)]
pub struct StudyReport {
    pub name: &'static str,
    pub passed: bool,
    /// Human-readable verdict line, e.g. `slope = 0.51 >= 0.45`.
    pub verdict: String,
    pub summary: Table,
    /// Two-column plot data: file stem and `(parameter, value)` pairs.
    pub series: Vec<(String, Vec<(f64, f64)>)>,
    pub ledgers: Vec<(String, EnergyReport)>,
}

impl StudyReport {
    /// Writes `summary.csv`, `verdict.txt`, `<series>.dat` and `ledgers/<run>.csv` under `dir`.
    pub fn write(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir)?;
        fs::write(dir.join("summary.csv"), self.summary.to_csv())?;
        fs::write(
            dir.join("verdict.txt"),
            format!(
                "study {}\nstatus {}\n{}\n",
                self.name,
                if self.passed { "pass" } else { "fail" },
                self.verdict
            ),
        )?;
        for (stem, pts) in &self.series {
            let mut f = fs::File::create(dir.join(format!("{stem}.dat")))?;
            writeln!(f, "# {stem}")?;
            for (x, y) in pts {
                writeln!(f, "{x:.10e} {y:.10e}")?;
            }
        }
        if !self.ledgers.is_empty() {
            let ld = dir.join("ledgers");
            fs::create_dir_all(&ld)?;
            for (label, rep) in &self.ledgers {
                let f = std::io::BufWriter::new(fs::File::create(ld.join(format!("{label}.csv")))?);
                rep.write_csv(f)?;
            }
        }
        Ok(())
    }
}
