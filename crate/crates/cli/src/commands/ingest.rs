use std::io::Write;

use sparsecast_core::ingest::{
    build_tensor, load_records, restrict_to_clients, select_top_clients, CsvSchema, TensorSpec,
};
use sparsecast_core::tensor::io::save_coo;
use sparsecast_core::Result;

use crate::args::IngestArgs;
use crate::manifest::{prepare_out, Manifest};

pub fn run(a: &IngestArgs) -> Result<()> {
    let schema = CsvSchema::load(&a.schema).map_err(super::with_path(&a.schema))?;
    let report = load_records(&a.csv, &schema).map_err(super::with_path(&a.csv))?;
    if report.malformed > 0 {
        eprintln!("skipped {} malformed of {} rows", report.malformed, report.rows);
    }
    let clients = select_top_clients(&report.records, a.clients)?;
    let records = restrict_to_clients(&report.records, &clients);
    let spec = TensorSpec::new(clients, schema.labels.len(), schema.n_slices)?;
    let tensor = build_tensor(&records, &spec)?;

    prepare_out(&a.out)?;
    let mut m = Manifest::new("ingest", a);
    save_coo(&tensor, m.output(&a.out, "tensor.coo"))?;
    let mut ids = std::io::BufWriter::new(std::fs::File::create(m.output(&a.out, "clients.txt"))?);
    for id in spec.clients.ids() {
        writeln!(ids, "{id}")?;
    }
    ids.flush()?;
    m.details = serde_json::json!({
        "rows": report.rows,
        "malformed": report.malformed,
        "shape": spec.shape(),
        "nnz": tensor.nnz(),
    });
    m.write(&a.out)?;
    println!("wrote {} nonzeros of a {:?} tensor to {}", tensor.nnz(), spec.shape(), a.out.display());
    Ok(())
}
