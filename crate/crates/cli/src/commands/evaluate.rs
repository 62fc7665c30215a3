use std::collections::{BTreeMap, HashMap};
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::Deserialize;
use sparsecast_core::metrics::{aggregate, evaluate, write_report_csv, MetricReport};
use sparsecast_core::tensor::io::read_kruskal;
use sparsecast_core::{Error, Result};

use crate::args::EvaluateArgs;
use crate::manifest::{prepare_out, Manifest};

type Key = (usize, usize, usize);

/// `(slice, predicted, truth)` rows of one (client, transaction) pair.
type PairRows = Vec<(usize, f64, f64)>;

#[derive(Debug, Deserialize)]
struct PredictionRow {
    client: usize,
    transaction: usize,
    slice: usize,
    predicted: f64,
}

#[derive(Debug, Deserialize)]
struct TruthRow {
    client: usize,
    transaction: usize,
    slice: usize,
    #[serde(alias = "actual")]
    value: f64,
}

fn read_predictions(path: &Path) -> Result<Vec<(Key, f64)>> {
    let mut rdr = csv::Reader::from_path(path)?;
    let mut out = Vec::new();
    for row in rdr.deserialize() {
        let r: PredictionRow = row?;
        out.push(((r.client, r.transaction, r.slice), r.predicted));
    }
    Ok(out)
}

enum Truth {
    Factors(sparsecast_core::tensor::KruskalTensor),
    Table(HashMap<Key, f64>),
}

impl Truth {
    fn load(path: &Path) -> Result<Self> {
        let mut r = BufReader::new(File::open(path)?);
        let is_kruskal = r.fill_buf()?.starts_with(b"kruskal");
        if is_kruskal {
            return Ok(Truth::Factors(read_kruskal(r)?));
        }
        let mut rdr = csv::Reader::from_reader(r);
        let mut table = HashMap::new();
        for row in rdr.deserialize() {
            let t: TruthRow = row?;
            table.insert((t.client, t.transaction, t.slice), t.value);
        }
        Ok(Truth::Table(table))
    }

    fn get(&self, (i, j, k): Key) -> Option<f64> {
        match self {
            Truth::Factors(f) => {
                let [ni, nj, nk] = f.shape();
                (i < ni && j < nj && k < nk).then(|| f.value_at(i, j, k))
            }
            Truth::Table(t) => t.get(&(i, j, k)).copied(),
        }
    }
}

pub fn run(a: &EvaluateArgs) -> Result<()> {
    let preds = read_predictions(&a.predictions).map_err(super::with_path(&a.predictions))?;
    if preds.is_empty() {
        return Err(Error::Argument("prediction file has no rows".into()));
    }
    let truth = Truth::load(&a.truth).map_err(super::with_path(&a.truth))?;

    let mut missing = Vec::new();
    let mut pairs: BTreeMap<(usize, usize), PairRows> = BTreeMap::new();
    for &(key, p) in &preds {
        match truth.get(key) {
            Some(t) => pairs.entry((key.0, key.1)).or_default().push((key.2, p, t)),
            None => missing.push(key),
        }
    }
    if !missing.is_empty() {
        let shown: Vec<String> = missing
            .iter()
            .take(10)
            .map(|(i, j, k)| format!("({i},{j},{k})"))
            .collect();
        return Err(Error::Argument(format!(
            "{} of {} predictions have no truth value: {}{}",
            missing.len(),
            preds.len(),
            shown.join(" "),
            if missing.len() > 10 { " …" } else { "" }
        )));
    }

    let mut by_transaction: BTreeMap<usize, Vec<MetricReport>> = BTreeMap::new();
    let mut all = Vec::with_capacity(pairs.len());
    for ((_, j), mut rows) in pairs {
        rows.sort_by_key(|r| r.0);
        let p: Vec<f64> = rows.iter().map(|r| r.1).collect();
        let t: Vec<f64> = rows.iter().map(|r| r.2).collect();
        let report = evaluate(&p, &t)?;
        by_transaction.entry(j).or_default().push(report);
        all.push(report);
    }
    let mut scoped: Vec<(String, MetricReport)> = Vec::new();
    for (j, reports) in &by_transaction {
        scoped.push((j.to_string(), aggregate(reports)?));
    }
    scoped.push(("ALL".into(), aggregate(&all)?));

    prepare_out(&a.out)?;
    let mut m = Manifest::new("evaluate", a);
    let mut w = BufWriter::new(File::create(m.output(&a.out, "report.csv"))?);
    write_report_csv(scoped.iter().map(|(s, r)| (s.as_str(), r)), &mut w)?;
    w.flush()?;
    m.write(&a.out)?;
    let total = &scoped.last().expect("ALL row").1;
    println!(
        "ALL: mae={} jaccard_dist={} cosine_sim={} rmse={} n={}",
        total.mae, total.jaccard_dist, total.cosine_sim, total.rmse, total.n
    );
    Ok(())
}
