//! Sample sets and the sample CSV schema
//! `t,q1..qn,qd1..qdn,v1..vn,scenario`.

use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use nalgebra::DVector;

use crate::dynamics::JointState;
use crate::error::{check_len, Error, Result, SchemaError};

/// Default linearity threshold `q̇⁺`, rad/s.
pub const DEFAULT_QD_THRESHOLD: f64 = 0.17;
/// Largest deviation from the nominal period still counted as uniform, s.
pub const PERIOD_TOLERANCE: f64 = 1e-9;

/// Payload condition of a recording: `a` without, `b` with payload.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scenario {
    A,
    B,
}

impl Scenario {
    pub fn tag(self) -> &'static str {
        match self {
            Scenario::A => "a",
            Scenario::B => "b",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s.trim() {
            "a" | "A" => Some(Scenario::A),
            "b" | "B" => Some(Scenario::B),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Source {
    Measured,
    Simulated,
}

/// A uniformly sampled recording. Accelerations are always derived.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleSet {
    pub t: Vec<f64>,
    pub q: Vec<DVector<f64>>,
    pub qd: Vec<DVector<f64>>,
    pub qdd: Vec<DVector<f64>>,
    pub v: Vec<DVector<f64>>,
    pub scenario: Scenario,
    pub source: Source,
    /// Linearity threshold `q̇⁺`, rad/s.
    pub qd_threshold: f64,
}

impl SampleSet {
    /// Builds a set from measured channels, deriving `q̈` by backward Euler.
    pub fn from_measurements(
        t: Vec<f64>,
        q: Vec<DVector<f64>>,
        qd: Vec<DVector<f64>>,
        v: Vec<DVector<f64>>,
        scenario: Scenario,
    ) -> Result<Self> {
        let period = check_timestamps(&t)?;
        let qdd = differentiate(&qd, period)?;
        let set = Self {
            t,
            q,
            qd,
            qdd,
            v,
            scenario,
            source: Source::Measured,
            qd_threshold: DEFAULT_QD_THRESHOLD,
        };
        set.check_shapes()?;
        Ok(set)
    }

    pub(crate) fn check_shapes(&self) -> Result<()> {
        let m = self.t.len();
        check_len("position samples", m, self.q.len())?;
        check_len("velocity samples", m, self.qd.len())?;
        check_len("acceleration samples", m, self.qdd.len())?;
        check_len("current samples", m, self.v.len())?;
        let n = self.dof();
        for k in 0..m {
            check_len("position width", n, self.q[k].len())?;
            check_len("velocity width", n, self.qd[k].len())?;
            check_len("acceleration width", n, self.qdd[k].len())?;
            check_len("current width", n, self.v[k].len())?;
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }

    pub fn dof(&self) -> usize {
        self.q.first().map_or(0, |q| q.len())
    }

    /// Mean sample period; `None` with fewer than two samples.
    pub fn period(&self) -> Option<f64> {
        let m = self.t.len();
        (m >= 2).then(|| (self.t[m - 1] - self.t[0]) / (m - 1) as f64)
    }

    pub fn state(&self, k: usize) -> JointState {
        JointState {
            q: self.q[k].clone(),
            qd: self.qd[k].clone(),
            qdd: self.qdd[k].clone(),
        }
    }

    /// `|q̇_j| > q̇⁺` at sample `k`.
    pub fn in_linear_region(&self, k: usize, j: usize) -> bool {
        self.qd[k][j].abs() > self.qd_threshold
    }

    /// Indices of samples in joint `j`'s linearity region.
    pub fn linear_indices(&self, j: usize) -> Vec<usize> {
        (0..self.len()).filter(|&k| self.in_linear_region(k, j)).collect()
    }

    /// Indices of samples outside joint `j`'s linearity region.
    pub fn nonlinear_indices(&self, j: usize) -> Vec<usize> {
        (0..self.len()).filter(|&k| !self.in_linear_region(k, j)).collect()
    }

    /// Channel `j` of the currents as a series.
    pub fn current_channel(&self, j: usize) -> Vec<f64> {
        self.v.iter().map(|v| v[j]).collect()
    }

    /// Zero-phase low-pass of `q̇` (and optionally `v`), then `q̈` re-derived.
    pub fn filtered(&self, cutoff_hz: f64, filter_currents: bool) -> Result<Self> {
        let period = self
            .period()
            .ok_or_else(|| Error::InvalidInput("filtering needs at least two samples".into()))?;
        let rate = 1.0 / period;
        let mut out = self.clone();
        out.qd = super::filter::lowpass_channels(&self.qd, cutoff_hz, rate)?;
        if filter_currents {
            out.v = super::filter::lowpass_channels(&self.v, cutoff_hz, rate)?;
        }
        out.qdd = differentiate(&out.qd, period)?;
        Ok(out)
    }

    /// The samples at `idx`; the uniform-period invariant no longer applies.
    pub fn select(&self, idx: &[usize]) -> Self {
        let pick = |xs: &Vec<DVector<f64>>| idx.iter().map(|&k| xs[k].clone()).collect();
        Self {
            t: idx.iter().map(|&k| self.t[k]).collect(),
            q: pick(&self.q),
            qd: pick(&self.qd),
            qdd: pick(&self.qdd),
            v: pick(&self.v),
            ..*self
        }
    }
}

/// Checks monotone, uniform timestamps; returns the period.
pub fn check_timestamps(t: &[f64]) -> Result<f64> {
    if t.len() < 2 {
        return Err(Error::InvalidInput("need at least two samples".into()));
    }
    let period = (t[t.len() - 1] - t[0]) / (t.len() - 1) as f64;
    if !(period > 0.0) {
        return Err(SchemaError::NonUniformPeriod { line: 2 }.into());
    }
    for k in 1..t.len() {
        let dt = t[k] - t[k - 1];
        if (dt - period).abs() > PERIOD_TOLERANCE.max(1e-12 * t[k].abs()) {
            // header is line 1, sample k is line k + 2
            return Err(SchemaError::NonUniformPeriod { line: k + 2 }.into());
        }
    }
    Ok(period)
}

/// Backward Euler: `q̈[k] = (q̇[k] − q̇[k−1]) / period`, `q̈[0] = q̈[1]`.
pub fn differentiate(qd: &[DVector<f64>], period: f64) -> Result<Vec<DVector<f64>>> {
    if qd.len() < 2 {
        return Err(Error::InvalidInput("differentiation needs at least two samples".into()));
    }
    if !(period > 0.0 && period.is_finite()) {
        return Err(Error::InvalidInput(format!("bad sample period {period}")));
    }
    let mut out = Vec::with_capacity(qd.len());
    out.push(DVector::zeros(qd[0].len()));
    for k in 1..qd.len() {
        out.push((&qd[k] - &qd[k - 1]) / period);
    }
    out[0] = out[1].clone();
    Ok(out)
}

fn column_names(n: usize) -> Vec<String> {
    let mut names = vec!["t".to_string()];
    for prefix in ["q", "qd", "v"] {
        names.extend((1..=n).map(|j| format!("{prefix}{j}")));
    }
    names.push("scenario".into());
    names
}

/// Writes the set as CSV. Floats use the shortest representation that
/// round-trips exactly.
pub fn write_samples_to(mut w: impl Write, set: &SampleSet) -> Result<()> {
    let n = set.dof();
    let mut out = String::new();
    out.push_str(&column_names(n).join(","));
    out.push('\n');
    for k in 0..set.len() {
        out.push_str(&format!("{}", set.t[k]));
        for ch in [&set.q[k], &set.qd[k], &set.v[k]] {
            for x in ch.iter() {
                out.push_str(&format!(",{x}"));
            }
        }
        out.push(',');
        out.push_str(set.scenario.tag());
        out.push('\n');
    }
    w.write_all(out.as_bytes()).map_err(|e| Error::Io {
        path: "<writer>".into(),
        source: e,
    })
}

pub fn write_samples(path: &Path, set: &SampleSet) -> Result<()> {
    let f = File::create(path).map_err(|e| io_err(path, e))?;
    write_samples_to(std::io::BufWriter::new(f), set).map_err(|e| match e {
        Error::Io { source, .. } => io_err(path, source),
        other => other,
    })
}

pub fn read_samples(path: &Path) -> Result<SampleSet> {
    let f = File::open(path).map_err(|e| io_err(path, e))?;
    read_samples_from(f)
}

fn io_err(path: &Path, source: std::io::Error) -> Error {
    Error::Io {
        path: path.display().to_string(),
        source,
    }
}

/// Parses the sample CSV. Columns may appear in any order; `q̈` is derived.
pub fn read_samples_from(r: impl Read) -> Result<SampleSet> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(r);
    let header: Vec<String> = rdr
        .headers()
        .map_err(|e| SchemaError::MalformedHeader(e.to_string()))?
        .iter()
        .map(str::to_string)
        .collect();
    let n = header
        .iter()
        .filter(|h| h.len() > 1 && h.starts_with('q') && h[1..].chars().all(|c| c.is_ascii_digit()))
        .count();
    if n == 0 {
        return Err(SchemaError::MalformedHeader("no position columns q1..qn".into()).into());
    }
    let expected = column_names(n);
    let mut pos = Vec::with_capacity(expected.len());
    for name in &expected {
        match header.iter().position(|h| h == name) {
            Some(p) => pos.push(p),
            None => return Err(SchemaError::MissingColumn(name.clone()).into()),
        }
    }
    if header.len() != expected.len() {
        let extra: Vec<&String> = header.iter().filter(|h| !expected.contains(h)).collect();
        return Err(SchemaError::MalformedHeader(format!("unexpected columns {extra:?}")).into());
    }

    let mut t = Vec::new();
    let (mut q, mut qd, mut v) = (Vec::new(), Vec::new(), Vec::new());
    let mut scenario: Option<Scenario> = None;
    for rec in rdr.records() {
        let rec = rec.map_err(|e| SchemaError::MalformedHeader(e.to_string()))?;
        let line = rec.position().map_or(0, |p| p.line() as usize);
        if rec.len() != header.len() {
            return Err(SchemaError::RaggedRow {
                line,
                expected: header.len(),
                got: rec.len(),
            }
            .into());
        }
        let num = |i: usize| -> Result<f64> {
            let raw = &rec[pos[i]];
            let x: f64 = raw.parse().map_err(|_| SchemaError::BadNumber {
                line,
                column: expected[i].clone(),
                value: raw.to_string(),
            })?;
            if !x.is_finite() {
                return Err(SchemaError::NonFinite {
                    line,
                    column: expected[i].clone(),
                }
                .into());
            }
            Ok(x)
        };
        t.push(num(0)?);
        let block = |b: usize| -> Result<DVector<f64>> {
            let vals: Result<Vec<f64>> = (0..n).map(|j| num(1 + b * n + j)).collect();
            Ok(DVector::from_vec(vals?))
        };
        q.push(block(0)?);
        qd.push(block(1)?);
        v.push(block(2)?);
        let tag = &rec[pos[expected.len() - 1]];
        let s = Scenario::parse(tag).ok_or_else(|| SchemaError::BadScenario {
            line,
            value: tag.to_string(),
        })?;
        match scenario {
            None => scenario = Some(s),
            Some(prev) if prev != s => return Err(SchemaError::MixedScenario.into()),
            _ => {}
        }
    }
    let scenario = scenario.ok_or_else(|| SchemaError::MalformedHeader("no data rows".into()))?;
    SampleSet::from_measurements(t, q, qd, v, scenario)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn small_set() -> SampleSet {
        let m = 6;
        let t: Vec<f64> = (0..m).map(|k| k as f64 * 0.008).collect();
        let q = (0..m).map(|k| DVector::from_vec(vec![0.1 * k as f64, -0.3])).collect();
        let qd = (0..m).map(|k| DVector::from_vec(vec![1.0 / 3.0, 0.05 * k as f64])).collect();
        let v = (0..m).map(|k| DVector::from_vec(vec![std::f64::consts::PI, -1e-17 * k as f64])).collect();
        SampleSet::from_measurements(t, q, qd, v, Scenario::B).unwrap()
    }

    #[test]
    fn constant_velocity_has_zero_acceleration() {
        let qd = vec![DVector::from_element(2, 0.7); 5];
        assert!(differentiate(&qd, 0.008).unwrap().iter().all(|a| a.amax() == 0.0));
    }

    #[test]
    fn ramp_gives_slope() {
        let qd: Vec<_> = (0..10).map(|k| DVector::from_element(1, 0.5 * k as f64 * 0.01)).collect();
        let qdd = differentiate(&qd, 0.01).unwrap();
        for a in &qdd {
            assert_relative_eq!(a[0], 0.5, epsilon = 1e-12);
        }
    }

    #[test]
    fn sine_derivative_is_first_order_accurate() {
        let h = 1e-3;
        let qd: Vec<_> = (0..2000).map(|k| DVector::from_element(1, (k as f64 * h).sin())).collect();
        let qdd = differentiate(&qd, h).unwrap();
        for k in 1..2000 {
            assert!((qdd[k][0] - (k as f64 * h).cos()).abs() < h);
        }
    }

    #[test]
    fn csv_round_trip_is_exact() {
        let set = small_set();
        let mut buf = Vec::new();
        write_samples_to(&mut buf, &set).unwrap();
        let back = read_samples_from(buf.as_slice()).unwrap();
        assert_eq!(back, set);
        assert_eq!(back.scenario, Scenario::B);
    }

    #[test]
    fn schema_errors_are_distinct() {
        let parse = |s: &str| match read_samples_from(s.as_bytes()) {
            Err(Error::Schema(e)) => e,
            other => panic!("expected schema error, got {other:?}"),
        };
        assert_eq!(
            parse("t,q1,qd1,scenario\n0,0,0,a\n"),
            SchemaError::MissingColumn("v1".into())
        );
        assert!(matches!(
            parse("t,q1,qd1,v1,scenario\n0,0,0,0,a\n0.1,0,0,a\n"),
            SchemaError::RaggedRow { line: 3, .. }
        ));
        assert!(matches!(
            parse("t,q1,qd1,v1,scenario\n0,NaN,0,0,a\n"),
            SchemaError::NonFinite { line: 2, .. }
        ));
        assert!(matches!(
            parse("t,q1,qd1,v1,scenario\n0,x,0,0,a\n"),
            SchemaError::BadNumber { .. }
        ));
        assert!(matches!(
            parse("t,q1,qd1,v1,scenario\n0,0,0,0,c\n"),
            SchemaError::BadScenario { .. }
        ));
        assert_eq!(
            parse("t,q1,qd1,v1,scenario\n0,0,0,0,a\n0.1,0,0,0,b\n"),
            SchemaError::MixedScenario
        );
        assert!(matches!(
            parse("t,q1,qd1,v1,scenario\n0,0,0,0,a\n0.1,0,0,0,a\n0.3,0,0,0,a\n"),
            SchemaError::NonUniformPeriod { .. }
        ));
        assert!(matches!(parse("t,x,scenario\n0,0,a\n"), SchemaError::MalformedHeader(_)));
    }

    #[test]
    fn linearity_mask_follows_threshold() {
        let set = small_set();
        assert!(set.in_linear_region(0, 0));
        assert!(!set.in_linear_region(3, 1));
        assert!(set.in_linear_region(4, 1));
        assert_eq!(set.linear_indices(1), vec![4, 5]);
    }
}
