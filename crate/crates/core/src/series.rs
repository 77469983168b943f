//! `(n, value, stderr)` sequences of TV distances or beta-mixing
//! coefficients, and their CSV form.

use std::collections::BTreeMap;
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::fmt_f64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SeriesKind {
    /// `int pi(dx) ||P^n(x, .) - pi||`.
    TvProfilePi,
    /// `||mu P^n - pi||` for a start state or distribution `mu`.
    TvProfileMu,
    BetaStationary,
    BetaGeneral,
    LiebscherBound,
}

impl SeriesKind {
    pub fn as_str(self) -> &'static str {
        match self {
            SeriesKind::TvProfilePi => "tv_profile_pi",
            SeriesKind::TvProfileMu => "tv_profile_mu",
            SeriesKind::BetaStationary => "beta_stationary",
            SeriesKind::BetaGeneral => "beta_general",
            SeriesKind::LiebscherBound => "liebscher_bound",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        Ok(match s {
            "tv_profile_pi" => SeriesKind::TvProfilePi,
            "tv_profile_mu" => SeriesKind::TvProfileMu,
            "beta_stationary" => SeriesKind::BetaStationary,
            "beta_general" => SeriesKind::BetaGeneral,
            "liebscher_bound" => SeriesKind::LiebscherBound,
            other => return Err(Error::invalid(format!("unknown series kind '{other}'"))),
        })
    }

    /// Largest admissible value: 2 for TV distances, 1 for beta.
    pub fn upper(self) -> f64 {
        match self {
            SeriesKind::TvProfilePi | SeriesKind::TvProfileMu => 2.0,
            SeriesKind::BetaStationary | SeriesKind::BetaGeneral => 1.0,
            SeriesKind::LiebscherBound => f64::INFINITY,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    Exact,
    MonteCarlo,
}

impl Provenance {
    pub fn as_str(self) -> &'static str {
        match self {
            Provenance::Exact => "exact",
            Provenance::MonteCarlo => "monte_carlo",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "exact" => Ok(Provenance::Exact),
            "monte_carlo" => Ok(Provenance::MonteCarlo),
            other => Err(Error::invalid(format!("unknown provenance '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeriesEntry {
    pub n: u64,
    pub value: f64,
    pub stderr: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixingSeries {
    pub kind: SeriesKind,
    pub provenance: Provenance,
    pub entries: Vec<SeriesEntry>,
    /// Value below which the series carries no information about the
    /// asymptotic decay (truncation or Monte Carlo bias floor); 0 if unknown.
    #[serde(default)]
    pub floor: f64,
    #[serde(default)]
    pub metadata: BTreeMap<String, String>,
}

#[derive(Debug, Deserialize)]
struct CsvRow {
    n: u64,
    value: f64,
    stderr: f64,
    kind: String,
    provenance: String,
}

impl MixingSeries {
    pub fn new(kind: SeriesKind, provenance: Provenance) -> Self {
        MixingSeries {
            kind,
            provenance,
            entries: Vec::new(),
            floor: 0.0,
            metadata: BTreeMap::new(),
        }
    }

    pub fn push(&mut self, n: u64, value: f64, stderr: f64) {
        self.entries.push(SeriesEntry { n, value, stderr });
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn ns(&self) -> Vec<u64> {
        self.entries.iter().map(|e| e.n).collect()
    }

    pub fn values(&self) -> Vec<f64> {
        self.entries.iter().map(|e| e.value).collect()
    }

    pub fn value_at(&self, n: u64) -> Option<f64> {
        self.entries.iter().find(|e| e.n == n).map(|e| e.value)
    }

    /// Checks value ranges (up to `tol` of rounding) and strictly increasing `n`.
    pub fn validate(&self, tol: f64) -> Result<()> {
        let upper = self.kind.upper();
        for w in self.entries.windows(2) {
            if w[1].n <= w[0].n {
                return Err(Error::invalid("series n must be strictly increasing"));
            }
        }
        for e in &self.entries {
            if !(e.value >= -tol && e.value <= upper + tol) || e.value.is_nan() {
                return Err(Error::invalid(format!(
                    "{} value {} at n={} outside [0, {upper}]",
                    self.kind.as_str(),
                    e.value,
                    e.n
                )));
            }
            if !(e.stderr >= 0.0) {
                return Err(Error::invalid(format!("negative stderr at n={}", e.n)));
            }
        }
        Ok(())
    }

    /// Columns `n,value,stderr,kind,provenance`, LF line endings, shortest
    /// round-trip floats.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(w);
        out.write_record(["n", "value", "stderr", "kind", "provenance"])?;
        for e in &self.entries {
            out.write_record([
                e.n.to_string(),
                fmt_f64(e.value),
                fmt_f64(e.stderr),
                self.kind.as_str().to_string(),
                self.provenance.as_str().to_string(),
            ])?;
        }
        out.flush().map_err(|e| Error::io("<series csv>", e))?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> Result<String> {
        let mut buf = Vec::new();
        self.write_csv(&mut buf)?;
        Ok(String::from_utf8(buf).expect("csv output is ASCII"))
    }

    pub fn read_csv<R: Read>(r: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(r);
        let headers = rdr.headers()?.clone();
        let want = ["n", "value", "stderr", "kind", "provenance"];
        if headers.iter().collect::<Vec<_>>() != want {
            return Err(Error::invalid(format!(
                "series CSV header must be {}, got {}",
                want.join(","),
                headers.iter().collect::<Vec<_>>().join(",")
            )));
        }
        let mut series: Option<MixingSeries> = None;
        for row in rdr.deserialize() {
            let row: CsvRow = row?;
            let kind = SeriesKind::parse(&row.kind)?;
            let prov = Provenance::parse(&row.provenance)?;
            let s = series.get_or_insert_with(|| MixingSeries::new(kind, prov));
            if s.kind != kind || s.provenance != prov {
                return Err(Error::invalid("series CSV mixes kinds or provenances"));
            }
            s.push(row.n, row.value, row.stderr);
        }
        let s = series.ok_or_else(|| Error::invalid("series CSV has no rows"))?;
        s.validate(1e-9)?;
        Ok(s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> MixingSeries {
        let mut s = MixingSeries::new(SeriesKind::BetaStationary, Provenance::Exact);
        for n in 1..=5u64 {
            s.push(n, 0.5f64.powi(n as i32 + 1), 0.0);
        }
        s.push(6, 0.1 + 0.2, 1e-300);
        s
    }

    #[test]
    fn csv_round_trip_is_exact() {
        let s = sample();
        let text = s.to_csv_string().unwrap();
        assert!(text.starts_with("n,value,stderr,kind,provenance\n1,0.25,0.0,beta_stationary,exact\n"));
        assert!(!text.contains('\r'));
        let back = MixingSeries::read_csv(text.as_bytes()).unwrap();
        assert_eq!(back.entries, s.entries);
        assert_eq!(back.to_csv_string().unwrap(), text);
    }

    #[test]
    fn rejects_bad_csv() {
        assert!(MixingSeries::read_csv("n,value\n1,0.5\n".as_bytes()).is_err());
        let mixed = "n,value,stderr,kind,provenance\n1,0.5,0,beta_stationary,exact\n2,0.4,0,tv_profile_pi,exact\n";
        assert!(MixingSeries::read_csv(mixed.as_bytes()).is_err());
        let range = "n,value,stderr,kind,provenance\n1,1.5,0,beta_stationary,exact\n";
        assert!(MixingSeries::read_csv(range.as_bytes()).is_err());
        let order = "n,value,stderr,kind,provenance\n2,0.5,0,beta_stationary,exact\n1,0.4,0,beta_stationary,exact\n";
        assert!(MixingSeries::read_csv(order.as_bytes()).is_err());
    }
}
