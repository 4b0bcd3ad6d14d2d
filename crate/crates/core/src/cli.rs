//! Population files, synthetic populations and report tables.
//!
//! Population files are comma-separated with a header row:
//!
//! ```text
//! unit_id,outcome,score_s,score_t
//! unit_id,outcome,rank_s,rank_t
//! ```
//!
//! Each method is given either by a score column (higher is better) or by a
//! rank column (a permutation of `1..=N`, 1 is best). Reports are written as
//! comma-separated tables with values rendered to 12 significant digits.

use std::collections::{HashMap, HashSet};
use std::fmt::Write as _;
use std::fs;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::combinatorics::m_distribution;
use crate::error::{Error, Result};
use crate::montecarlo::MonteCarlo;
use crate::population::{Population, Unit};
use crate::precision::PrecisionCurve;
use crate::rct::{analysis_from_curves, simulate_rct};
use crate::survey::{build_survey_design, exact_survey_distribution};
use crate::targeting::{ranking_from_keyed, TargetingMethod, TieBreak};

/// How one method is specified in a population file.
#[derive(Debug, Clone, PartialEq)]
pub enum MethodColumn {
    Scores(Vec<f64>),
    Ranks(Vec<usize>),
}

impl MethodColumn {
    fn header(&self, suffix: &str) -> String {
        match self {
            MethodColumn::Scores(_) => format!("score_{suffix}"),
            MethodColumn::Ranks(_) => format!("rank_{suffix}"),
        }
    }

    fn render(&self, row: usize) -> String {
        match self {
            // Display for f64 is the shortest string that parses back exactly.
            MethodColumn::Scores(v) => v[row].to_string(),
            MethodColumn::Ranks(v) => v[row].to_string(),
        }
    }

    fn to_method(&self, population: &Population, tie_break: TieBreak) -> Result<TargetingMethod> {
        match self {
            MethodColumn::Scores(scores) => ranking_from_keyed(
                population,
                scores.iter().copied().zip(0..).collect(),
                tie_break,
            ),
            MethodColumn::Ranks(ranks) => {
                let mut order = vec![0; ranks.len()];
                for (unit, &rank) in ranks.iter().enumerate() {
                    order[rank - 1] = unit;
                }
                TargetingMethod::from_order(population, order)
            }
        }
    }
}

/// In-memory form of a population file.
#[derive(Debug, Clone, PartialEq)]
pub struct PopulationFile {
    pub ids: Vec<String>,
    pub outcomes: Vec<u8>,
    pub s: MethodColumn,
    pub t: MethodColumn,
}

/// A parsed population with both targeting methods resolved.
#[derive(Debug, Clone)]
pub struct Ingested {
    pub population: Population,
    pub s: TargetingMethod,
    pub t: TargetingMethod,
}

enum Pending {
    Scores(Vec<f64>),
    Ranks(Vec<usize>),
}

impl PopulationFile {
    pub fn parse<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(true)
            .trim(csv::Trim::None)
            .from_reader(reader);
        let headers: Vec<String> = rdr.headers()?.iter().map(str::to_owned).collect();
        let column_kind = |name: &str, suffix: &str| -> Result<Pending> {
            if name == format!("score_{suffix}") {
                Ok(Pending::Scores(Vec::new()))
            } else if name == format!("rank_{suffix}") {
                Ok(Pending::Ranks(Vec::new()))
            } else {
                Err(Error::Invalid(format!(
                    "expected column `score_{suffix}` or `rank_{suffix}`, found `{name}`"
                )))
            }
        };
        if headers.len() != 4 || headers[0] != "unit_id" || headers[1] != "outcome" {
            return Err(Error::Invalid(format!(
                "header must be `unit_id,outcome,score_s|rank_s,score_t|rank_t`, found `{}`",
                headers.join(",")
            )));
        }
        let mut s = column_kind(&headers[2], "s")?;
        let mut t = column_kind(&headers[3], "t")?;

        let mut ids = Vec::new();
        let mut outcomes = Vec::new();
        let mut seen = HashSet::new();
        for (i, record) in rdr.records().enumerate() {
            // Line 1 is the header.
            let row = i + 2;
            let record = record?;
            let bad = |message: String| Error::Row { row, message };
            if record.len() != 4 {
                return Err(bad(format!("expected 4 fields, found {}", record.len())));
            }
            let id = record[0].to_owned();
            if id.is_empty() {
                return Err(bad("empty unit_id".into()));
            }
            if !seen.insert(id.clone()) {
                return Err(bad(format!("duplicate unit_id `{id}`")));
            }
            let outcome = match &record[1] {
                "0" => 0,
                "1" => 1,
                other => return Err(bad(format!("outcome must be 0 or 1, found `{other}`"))),
            };
            for (column, field, name) in [(&mut s, &record[2], &headers[2]), (&mut t, &record[3], &headers[3])] {
                match column {
                    Pending::Scores(v) => {
                        let score: f64 = field
                            .parse()
                            .map_err(|_| bad(format!("{name} `{field}` is not a number")))?;
                        if score.is_nan() {
                            return Err(bad(format!("{name} is NaN")));
                        }
                        v.push(score);
                    }
                    Pending::Ranks(v) => {
                        let rank: usize = field
                            .parse()
                            .map_err(|_| bad(format!("{name} `{field}` is not a positive integer")))?;
                        v.push(rank);
                    }
                }
            }
            ids.push(id);
            outcomes.push(outcome);
        }

        let n = ids.len();
        let finish = |column: Pending, name: &str| -> Result<MethodColumn> {
            match column {
                Pending::Scores(v) => Ok(MethodColumn::Scores(v)),
                Pending::Ranks(v) => {
                    let mut holder: Vec<Option<usize>> = vec![None; n];
                    for (i, &rank) in v.iter().enumerate() {
                        let row = i + 2;
                        if rank == 0 || rank > n {
                            return Err(Error::Row {
                                row,
                                message: format!("{name} {rank} is outside 1..={n}"),
                            });
                        }
                        if let Some(prev) = holder[rank - 1] {
                            return Err(Error::Row {
                                row,
                                message: format!(
                                    "{name} {rank} already used on row {}; ranks must be a permutation",
                                    prev + 2
                                ),
                            });
                        }
                        holder[rank - 1] = Some(i);
                    }
                    Ok(MethodColumn::Ranks(v))
                }
            }
        };
        Ok(Self {
            s: finish(s, &headers[2])?,
            t: finish(t, &headers[3])?,
            ids,
            outcomes,
        })
    }

    pub fn read(path: &Path) -> Result<Self> {
        Self::parse(fs::File::open(path)?)
    }

    /// Canonical text form; newline-terminated rows.
    pub fn render(&self) -> String {
        let mut out = format!("unit_id,outcome,{},{}\n", self.s.header("s"), self.t.header("t"));
        for (i, id) in self.ids.iter().enumerate() {
            let _ = writeln!(
                out,
                "{id},{},{},{}",
                self.outcomes[i],
                self.s.render(i),
                self.t.render(i)
            );
        }
        out
    }

    pub fn write<W: Write>(&self, mut writer: W) -> Result<()> {
        writer.write_all(self.render().as_bytes())?;
        Ok(())
    }

    /// Resolve the population and both methods.
    pub fn resolve(&self, tie_break: TieBreak) -> Result<Ingested> {
        let units = self
            .ids
            .iter()
            .zip(&self.outcomes)
            .map(|(id, &y)| Unit::new(id.clone(), y))
            .collect::<Result<Vec<_>>>()?;
        let population = Population::new(units)?;
        let s = self.s.to_method(&population, tie_break)?;
        let t = self.t.to_method(&population, tie_break)?;
        Ok(Ingested { population, s, t })
    }
}

/// Read and resolve a population file.
pub fn ingest(path: &Path, tie_break: TieBreak) -> Result<Ingested> {
    PopulationFile::read(path)?.resolve(tie_break)
}

/// Parameters of a synthetic population.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SynthConfig {
    pub n: usize,
    pub positive_rate: f64,
    /// Association between `S` scores and outcomes, in `[0, 1]`.
    pub correlation: f64,
    /// Association between `T` scores and outcomes, in `[0, 1]`.
    pub t_correlation: f64,
    pub seed: u64,
}

/// Synthetic population with two score columns.
///
/// Exactly `round(positive_rate * N)` units are positive, placed uniformly
/// at random. Each method scores unit `i` as `c * y_i + (1 - c) * u_i` with
/// `u_i` uniform on `[0, 1)`: `c = 0` is random targeting (flat precision
/// curve in expectation), `c = 1` ranks every positive first.
pub fn synth(config: &SynthConfig) -> Result<PopulationFile> {
    let SynthConfig {
        n,
        positive_rate,
        correlation,
        t_correlation,
        seed,
    } = *config;
    if n < 2 || n % 2 != 0 {
        return Err(Error::Invalid(format!("N must be even and at least 2, got {n}")));
    }
    for (name, v) in [
        ("positive rate", positive_rate),
        ("correlation", correlation),
        ("t correlation", t_correlation),
    ] {
        if !(0.0..=1.0).contains(&v) {
            return Err(Error::Invalid(format!("{name} must lie in [0, 1], got {v}")));
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let positives = (positive_rate * n as f64).round() as usize;
    let mut outcomes = vec![0u8; n];
    let mut slots: Vec<usize> = (0..n).collect();
    slots.shuffle(&mut rng);
    for &i in &slots[..positives] {
        outcomes[i] = 1;
    }
    let mut score = |c: f64, y: u8| c * f64::from(y) + (1.0 - c) * rng.random::<f64>();
    let mut s = Vec::with_capacity(n);
    let mut t = Vec::with_capacity(n);
    for &y in &outcomes {
        s.push(score(correlation, y));
        t.push(score(t_correlation, y));
    }
    let width = n.to_string().len();
    Ok(PopulationFile {
        ids: (1..=n).map(|i| format!("u{i:0width$}")).collect(),
        outcomes,
        s: MethodColumn::Scores(s),
        t: MethodColumn::Scores(t),
    })
}

/// `%.12g`-style rendering.
pub fn format_value(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    let sci = format!("{:.11e}", x);
    let (mantissa, exp) = sci.split_once('e').expect("scientific notation");
    let exp: i32 = exp.parse().expect("exponent");
    if (-5..12).contains(&exp) {
        let decimals = (11 - exp).max(0) as usize;
        let fixed = format!("{:.*}", decimals, x);
        trim_zeros(&fixed)
    } else {
        format!("{}e{}", trim_zeros(mantissa), exp)
    }
}

fn trim_zeros(s: &str) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_owned()
    } else {
        s.to_owned()
    }
}

/// A named comma-separated table.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub name: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    fn new(name: &str, header: &[&str]) -> Self {
        Self {
            name: name.to_owned(),
            header: header.iter().map(|h| (*h).to_owned()).collect(),
            rows: Vec::new(),
        }
    }

    fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn file_name(&self) -> String {
        format!("{}.csv", self.name)
    }

    pub fn render(&self) -> String {
        let mut out = self.header.join(",");
        out.push('\n');
        for row in &self.rows {
            out.push_str(&row.join(","));
            out.push('\n');
        }
        out
    }

    /// Column by header name, parsed as numbers.
    pub fn numeric_column(&self, name: &str) -> Option<Vec<f64>> {
        let idx = self.header.iter().position(|h| h == name)?;
        self.rows.iter().map(|r| r[idx].parse().ok()).collect()
    }
}

/// Which designs a run evaluates.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Design {
    Rct,
    Survey,
    Both,
}

/// Settings shared by the report-producing commands.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub k: usize,
    pub design: Design,
    pub replicates: usize,
    pub seed: u64,
    pub workers: Option<usize>,
    pub tie_break: TieBreak,
    pub out: PathBuf,
}

pub fn precision_table(inputs: &Ingested) -> Result<Table> {
    let cs = PrecisionCurve::new(&inputs.s, &inputs.population)?;
    let ct = PrecisionCurve::new(&inputs.t, &inputs.population)?;
    let mut table = Table::new("precision_curves", &["j", "precision_s", "precision_t"]);
    for (j, (ps, pt)) in cs.values().iter().zip(ct.values()).enumerate() {
        table.push(vec![(j + 1).to_string(), format_value(*ps), format_value(*pt)]);
    }
    Ok(table)
}

pub fn m_pmf_table(n: usize, k: usize) -> Result<Table> {
    let law = m_distribution::<f64>(n, k)?;
    let mut table = Table::new("m_pmf", &["m", "probability"]);
    for (m, p) in law.iter() {
        table.push(vec![m.to_string(), format_value(*p)]);
    }
    Ok(table)
}

/// Expected RCT estimates and truth for every even `k` in the range.
pub fn bias_curve_table(inputs: &Ingested, k_min: usize, k_max: usize) -> Result<Table> {
    let pop = &inputs.population;
    pop.require_even()?;
    if k_min > k_max {
        return Err(Error::Invalid(format!("k-min {k_min} exceeds k-max {k_max}")));
    }
    let cs = PrecisionCurve::new(&inputs.s, pop)?;
    let ct = PrecisionCurve::new(&inputs.t, pop)?;
    let mut table = Table::new(
        "bias_curve",
        &[
            "k",
            "true_precision_s",
            "expected_rct_precision_s",
            "bias_s",
            "relative_bias_s",
            "true_precision_t",
            "expected_rct_precision_t",
            "bias_t",
            "true_delta",
            "expected_rct_delta",
            "delta_bias",
        ],
    );
    let start = k_min.max(2) + k_min.max(2) % 2;
    for k in (start..=k_max).step_by(2) {
        let law = m_distribution::<f64>(pop.len(), k)?;
        let a = analysis_from_curves(&cs, &ct, &law)?;
        let mu_s = cs.precision(k)?;
        let mu_t = ct.precision(k)?;
        let bias_s = a.expected_precision_s - mu_s;
        let relative = if mu_s == 0.0 { f64::NAN } else { bias_s / mu_s };
        table.push(vec![
            k.to_string(),
            format_value(mu_s),
            format_value(a.expected_precision_s),
            format_value(bias_s),
            format_value(relative),
            format_value(mu_t),
            format_value(a.expected_precision_t),
            format_value(a.expected_precision_t - mu_t),
            format_value(a.true_delta),
            format_value(a.expected_delta),
            format_value(a.bias),
        ]);
    }
    if table.rows.is_empty() {
        return Err(Error::Invalid(format!(
            "no even k in [{k_min}, {k_max}] within 2..={}",
            pop.len()
        )));
    }
    Ok(table)
}

const SUMMARY_HEADER: [&str; 7] = [
    "design",
    "mean",
    "std_dev",
    "bias",
    "expected",
    "true_delta",
    "std_error",
];

/// Report tables for the selected designs at `config.k`.
pub fn run(config: &RunConfig, inputs: &Ingested) -> Result<Vec<Table>> {
    let pop = &inputs.population;
    let (s, t) = (&inputs.s, &inputs.t);
    let k = config.k;
    let mut tables = Vec::new();
    let mut summary = Table::new("summary", &SUMMARY_HEADER);

    if matches!(config.design, Design::Rct | Design::Both) {
        pop.require_even()?;
        let cs = PrecisionCurve::new(s, pop)?;
        let ct = PrecisionCurve::new(t, pop)?;
        let law = m_distribution::<f64>(pop.len(), k)?;
        let analysis = analysis_from_curves(&cs, &ct, &law)?;
        let mut mc = MonteCarlo::new(config.replicates, config.seed);
        mc.workers = config.workers;
        let draws = simulate_rct(s, t, pop, k, &mc)?;

        if config.design == Design::Both {
            tables.push(precision_table(inputs)?);
            let mut m_table = Table::new("m_pmf", &["m", "probability"]);
            for (m, p) in law.iter() {
                m_table.push(vec![m.to_string(), format_value(*p)]);
            }
            tables.push(m_table);
        }
        let mut dist = Table::new("rct_distribution", &["value", "count", "frequency"]);
        let total = draws.replicates() as f64;
        for (v, c) in draws.tallies() {
            dist.push(vec![format_value(v), c.to_string(), format_value(c as f64 / total)]);
        }
        tables.push(dist);
        summary.push(vec![
            "rct".into(),
            format_value(draws.mean()),
            format_value(draws.std_dev()),
            format_value(analysis.bias),
            format_value(analysis.expected_delta),
            format_value(analysis.true_delta),
            format_value(draws.std_error()),
        ]);
    }

    if matches!(config.design, Design::Survey | Design::Both) {
        let design = build_survey_design(s, t, pop, k)?;
        let law = exact_survey_distribution::<f64>(&design)?;
        let truth: f64 = crate::precision::delta_true(s, t, pop, k)?;
        let mut dist = Table::new("survey_distribution", &["value", "probability"]);
        for (v, p) in law.iter() {
            dist.push(vec![format_value(*v), format_value(*p)]);
        }
        tables.push(dist);
        summary.push(vec![
            "survey".into(),
            format_value(*law.mean()),
            format_value(law.std_dev()),
            format_value(law.mean() - truth),
            format_value(*law.mean()),
            format_value(truth),
            "0".into(),
        ]);
    }
    tables.push(summary);
    Ok(tables)
}

/// Write tables into `dir`; on failure, remove whatever was written.
pub fn write_tables(dir: &Path, tables: &[Table]) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let mut written = Vec::with_capacity(tables.len());
    for table in tables {
        let path = dir.join(table.file_name());
        if let Err(e) = fs::write(&path, table.render()) {
            for p in written.iter().chain(std::iter::once(&path)) {
                let _ = fs::remove_file(p);
            }
            return Err(e.into());
        }
        written.push(path);
    }
    Ok(written)
}

/// Score map keyed by unit id, for callers that hold scores separately.
pub fn scores_by_id(file: &PopulationFile, method: char) -> Option<HashMap<String, f64>> {
    let column = match method {
        's' => &file.s,
        't' => &file.t,
        _ => return None,
    };
    match column {
        MethodColumn::Scores(v) => Some(file.ids.iter().cloned().zip(v.iter().copied()).collect()),
        MethodColumn::Ranks(_) => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn value_formatting() {
        assert_eq!(format_value(0.0), "0");
        assert_eq!(format_value(0.5), "0.5");
        assert_eq!(format_value(1.0), "1");
        assert_eq!(format_value(-0.15), "-0.15");
        assert_eq!(format_value(2.0 / 3.0), "0.666666666667");
        assert_eq!(format_value(1234.5), "1234.5");
        assert_eq!(format_value(1.5e-7), "1.5e-7");
        assert_eq!(format_value(123456789012345.0), "1.23456789012e14");
        assert_eq!(format_value(0.85), "0.85");
    }

    #[test]
    fn parse_rank_file() {
        let text = "unit_id,outcome,rank_s,rank_t\na,1,1,4\nb,0,2,3\nc,1,3,2\nd,0,4,1\n";
        let file = PopulationFile::parse(text.as_bytes()).unwrap();
        let got = file.resolve(TieBreak::Id).unwrap();
        assert_eq!(got.t, got.s.reversed());
        assert_eq!(file.render(), text);
    }

    #[test]
    fn parse_errors_carry_rows() {
        let dup = "unit_id,outcome,score_s,score_t\na,1,0.1,0.2\na,0,0.3,0.4\n";
        let err = PopulationFile::parse(dup.as_bytes()).unwrap_err();
        assert!(err.to_string().contains("row 3") && err.to_string().contains("`a`"), "{err}");

        let nonbinary = "unit_id,outcome,score_s,score_t\na,2,0.1,0.2\nb,0,0.3,0.4\n";
        let err = PopulationFile::parse(nonbinary.as_bytes()).unwrap_err();
        assert!(err.to_string().contains("row 2"), "{err}");

        let badrank = "unit_id,outcome,rank_s,rank_t\na,1,1,1\nb,0,1,2\n";
        let err = PopulationFile::parse(badrank.as_bytes()).unwrap_err();
        assert!(err.to_string().contains("row 3"), "{err}");

        let header = "id,outcome,score_s,score_t\na,1,1,1\n";
        assert!(PopulationFile::parse(header.as_bytes()).is_err());
        let header = "unit_id,outcome,score_s,rank_s\na,1,1,1\n";
        assert!(PopulationFile::parse(header.as_bytes()).is_err());
    }

    #[test]
    fn mixed_columns_per_method() {
        let text = "unit_id,outcome,score_s,rank_t\na,1,0.5,2\nb,0,0.5,1\n";
        let got = PopulationFile::parse(text.as_bytes())
            .unwrap()
            .resolve(TieBreak::Id)
            .unwrap();
        assert_eq!(got.s.order(), &[0, 1]);
        assert_eq!(got.t.order(), &[1, 0]);
    }

    #[test]
    fn synth_is_deterministic_and_validated() {
        let cfg = SynthConfig {
            n: 40,
            positive_rate: 0.25,
            correlation: 0.5,
            t_correlation: 0.0,
            seed: 9,
        };
        assert_eq!(synth(&cfg).unwrap().render(), synth(&cfg).unwrap().render());
        let file = synth(&cfg).unwrap();
        assert_eq!(file.outcomes.iter().filter(|&&y| y == 1).count(), 10);
        assert!(synth(&SynthConfig { n: 41, ..cfg }).is_err());
        assert!(synth(&SynthConfig { positive_rate: 1.5, ..cfg }).is_err());
        assert!(synth(&SynthConfig { correlation: -0.1, ..cfg }).is_err());
        assert!(scores_by_id(&file, 's').unwrap().contains_key("u01"));
        assert!(scores_by_id(&file, 'x').is_none());
    }

    #[test]
    fn write_tables_cleans_up_on_failure() {
        let dir = tempfile::tempdir().unwrap();
        let mut t = Table::new("ok", &["a"]);
        t.push(vec!["1".into()]);
        let bad = Table::new("missing/dir/table", &["a"]);
        let err = write_tables(dir.path(), &[t.clone(), bad]);
        assert!(err.is_err());
        assert!(!dir.path().join("ok.csv").exists());
        let written = write_tables(dir.path(), &[t]).unwrap();
        assert_eq!(fs::read_to_string(&written[0]).unwrap(), "a\n1\n");
    }
}
