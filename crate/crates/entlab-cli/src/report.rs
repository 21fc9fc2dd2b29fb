//! Run reports and file artifacts.
//!
//! The JSON report serializes with struct fields in declaration order and
//! every float printed with 17 significant digits, so two runs of the same
//! scenario produce comparable documents. CSV output uses the same float
//! format, which makes the time series byte-reproducible for a fixed seed.

use std::io::{self, Write};
use std::path::{Path, PathBuf};

use entlab::continuum::TwoBodyRun;
use entlab::dynamics::EvolutionTrace;
use serde::Serialize;

pub const FINITE_CSV_HEADER: &str =
    "t,purity,schmidt1,schmidt2,coupling_C,fichtre_residual,fidelity_meanfield";
pub const CONTINUUM_CSV_HEADER: &str =
    "t,norm,energy,entropy,mean_xA,mean_xB,classical_xA,classical_xB";

#[derive(Serialize, Clone, Debug)]
pub struct CheckRecord {
    pub name: String,
    pub measured: f64,
    pub threshold: f64,
    pub passed: bool,
}

impl CheckRecord {
    /// Passes when the measured value stays at or below the threshold.
    pub fn upper_bound(name: &str, measured: f64, threshold: f64) -> Self {
        Self {
            name: name.into(),
            measured,
            threshold,
            passed: measured <= threshold,
        }
    }

    /// Passes when the measured value reaches at least the threshold.
    pub fn lower_bound(name: &str, measured: f64, threshold: f64) -> Self {
        Self {
            name: name.into(),
            measured,
            threshold,
            passed: measured >= threshold,
        }
    }

    /// Passes when the measured value sits within `threshold` of `target`;
    /// the record keeps the raw measured value, not the deviation.
    pub fn within(name: &str, measured: f64, target: f64, threshold: f64) -> Self {
        Self {
            name: name.into(),
            measured,
            threshold,
            passed: (measured - target).abs() <= threshold,
        }
    }
}

#[derive(Serialize)]
pub struct RunReport {
    pub scenario: String,
    pub wall_time_seconds: f64,
    pub passed: bool,
    pub checks: Vec<CheckRecord>,
    pub outputs: Vec<String>,
}

impl RunReport {
    pub fn new(
        scenario: &str,
        wall_time_seconds: f64,
        checks: Vec<CheckRecord>,
        outputs: Vec<String>,
    ) -> Self {
        let passed = checks.iter().all(|c| c.passed);
        Self {
            scenario: scenario.into(),
            wall_time_seconds,
            passed,
            checks,
            outputs,
        }
    }

    pub fn to_json(&self) -> String {
        let mut buf = Vec::new();
        let mut ser = serde_json::Serializer::with_formatter(&mut buf, SciFormatter);
        self.serialize(&mut ser)
            .expect("report serialization cannot fail");
        buf.push(b'\n');
        String::from_utf8(buf).expect("JSON is UTF-8")
    }
}

/// Compact JSON with floats at 17 significant digits. Non-finite values
/// have no JSON encoding; they become null rather than invalid output.
struct SciFormatter;

impl serde_json::ser::Formatter for SciFormatter {
    fn write_f64<W: ?Sized + Write>(&mut self, writer: &mut W, value: f64) -> io::Result<()> {
        if value.is_finite() {
            write!(writer, "{value:.16e}")
        } else {
            writer.write_all(b"null")
        }
    }
}

fn push_row(out: &mut String, values: &[f64]) {
    for (k, v) in values.iter().enumerate() {
        if k > 0 {
            out.push(',');
        }
        out.push_str(&format!("{v:.16e}"));
    }
    out.push('\n');
}

pub fn finite_csv(trace: &EvolutionTrace) -> String {
    let mut out = String::from(FINITE_CSV_HEADER);
    out.push('\n');
    for k in 0..trace.times.len() {
        let (s1, s2) = trace.schmidt_top2[k];
        push_row(
            &mut out,
            &[
                trace.times[k],
                trace.purity[k],
                s1,
                s2,
                trace.coupling_c[k],
                trace.fichtre_residual[k],
                trace.fidelity_meanfield[k],
            ],
        );
    }
    out
}

pub fn continuum_csv(run: &TwoBodyRun) -> String {
    let mut out = String::from(CONTINUUM_CSV_HEADER);
    out.push('\n');
    for k in 0..run.times.len() {
        push_row(
            &mut out,
            &[
                run.times[k],
                run.norm[k],
                run.energy[k],
                run.entropy[k],
                run.mean_a[k],
                run.mean_b[k],
                run.newton_a[k],
                run.newton_b[k],
            ],
        );
    }
    out
}

/// Writes through a sibling temp file and a rename, so a crash mid-write
/// never leaves a truncated artifact under the final name.
pub fn write_atomic(path: &Path, contents: &str) -> io::Result<()> {
    let mut tmp: PathBuf = path.to_path_buf();
    let mut name = path
        .file_name()
        .ok_or_else(|| io::Error::new(io::ErrorKind::InvalidInput, "path has no file name"))?
        .to_os_string();
    name.push(".tmp");
    tmp.set_file_name(name);
    std::fs::write(&tmp, contents)?;
    std::fs::rename(&tmp, path)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn json_floats_carry_seventeen_significant_digits() {
        let report = RunReport::new(
            "demo",
            0.125,
            vec![CheckRecord::upper_bound(
                "norm-conservation",
                1.0 / 3.0,
                1e-10,
            )],
            vec!["demo.csv".into()],
        );
        let json = report.to_json();
        assert!(json.contains("3.3333333333333331e-1"), "json was {json}");
        assert!(json.contains("\"passed\":false"));
        // Field order is declaration order.
        let scenario_at = json.find("\"scenario\"").unwrap();
        let checks_at = json.find("\"checks\"").unwrap();
        let outputs_at = json.find("\"outputs\"").unwrap();
        assert!(scenario_at < checks_at && checks_at < outputs_at);
    }

    #[test]
    fn check_constructors_grade_in_the_right_direction() {
        assert!(CheckRecord::upper_bound("a", 1e-12, 1e-10).passed);
        assert!(!CheckRecord::upper_bound("a", 1e-9, 1e-10).passed);
        assert!(CheckRecord::lower_bound("b", 0.3, 0.1).passed);
        assert!(!CheckRecord::lower_bound("b", 0.05, 0.1).passed);
        assert!(CheckRecord::within("c", -3.9995, -4.0, 1e-3).passed);
        assert!(!CheckRecord::within("c", -3.99, -4.0, 1e-3).passed);
    }

    #[test]
    fn atomic_writes_leave_no_temp_files() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("out.csv");
        write_atomic(&path, "t\n0\n").unwrap();
        assert_eq!(std::fs::read_to_string(&path).unwrap(), "t\n0\n");
        let leftovers: Vec<_> = std::fs::read_dir(dir.path())
            .unwrap()
            .map(|e| e.unwrap().file_name())
            .collect();
        assert_eq!(leftovers, vec![std::ffi::OsString::from("out.csv")]);
    }
}
