use sparsecast_core::ingest::{synth_generate, SynthConfig};
use sparsecast_core::tensor::io::{save_coo, save_kruskal};
use sparsecast_core::Result;

use crate::args::SynthArgs;
use crate::manifest::{prepare_out, Manifest};

pub fn run(a: &SynthArgs) -> Result<()> {
    let cfg = SynthConfig {
        shape: a.shape,
        true_rank: a.rank,
        noise_sigma: a.noise,
        sparsity: a.sparsity,
        seed: a.seed,
        period: a.period,
    };
    cfg.validate()?;
    let (tensor, truth) = synth_generate(&cfg)?;
    prepare_out(&a.out)?;
    let mut m = Manifest::new("synth", a);
    save_coo(&tensor, m.output(&a.out, "tensor.coo"))?;
    save_kruskal(&truth, m.output(&a.out, "truth.kruskal"))?;
    m.details = serde_json::json!({ "nnz": tensor.nnz(), "seed": a.seed });
    m.write(&a.out)?;
    println!("wrote {} nonzeros of a {:?} tensor to {}", tensor.nnz(), a.shape, a.out.display());
    Ok(())
}
