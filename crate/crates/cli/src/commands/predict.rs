use std::fs::File;
use std::io::{BufWriter, Write};

use sparsecast_core::tensor::io::load_kruskal;
use sparsecast_core::{Error, Result};
use sparsecast_predict::{build_dataset, predict_rolling, train, RollMode, TrainConfig};

use crate::args::PredictArgs;
use crate::manifest::{prepare_out, Manifest};

pub fn run(a: &PredictArgs) -> Result<()> {
    if a.horizon == 0 {
        return Err(Error::Argument("horizon must be at least 1".into()));
    }
    let k = load_kruskal(&a.factors).map_err(super::with_path(&a.factors))?;
    let ds = build_dataset(&k, a.window, a.train_slices.clone())?;
    let cfg = TrainConfig {
        epochs: a.epochs,
        seed: a.seed,
        ..TrainConfig::default()
    };
    let model = train(a.model, &ds, &cfg)?;
    let mode = if a.open_loop {
        RollMode::OpenLoop
    } else {
        RollMode::ClosedLoop
    };
    let origin = a.train_slices.end;
    let [ni, nj, nk] = k.shape();

    prepare_out(&a.out)?;
    let mut m = Manifest::new("predict", a);
    let kind = a.model.as_str();
    let mut w = BufWriter::new(File::create(m.output(&a.out, format!("predictions_{kind}.csv")))?);
    writeln!(w, "client,transaction,slice,predicted,actual")?;
    for i in 0..ni {
        for j in 0..nj {
            let forecast = predict_rolling(&model, &k, (i, j), a.horizon, a.window, origin, mode)?;
            for (step, y) in forecast.iter().enumerate() {
                let slice = origin + step;
                let actual = if slice < nk {
                    k.value_at(i, j, slice).to_string()
                } else {
                    String::new()
                };
                writeln!(w, "{i},{j},{slice},{y},{actual}")?;
            }
        }
    }
    w.flush()?;

    model.save(m.output(&a.out, format!("model_{kind}.json")))?;
    let mut lw = BufWriter::new(File::create(m.output(&a.out, format!("loss_{kind}.csv")))?);
    writeln!(lw, "epoch,loss")?;
    for (e, l) in model.loss_history().iter().enumerate() {
        writeln!(lw, "{},{l}", e + 1)?;
    }
    lw.flush()?;

    m.details = serde_json::json!({
        "samples": ds.len(),
        "final_loss": model.loss_history().last(),
        "origin": origin,
    });
    m.write(&a.out)?;
    println!(
        "{kind}: trained on {} windows, wrote {} forecasts to {}",
        ds.len(),
        ni * nj * a.horizon,
        a.out.display()
    );
    Ok(())
}
