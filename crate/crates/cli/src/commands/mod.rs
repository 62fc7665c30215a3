pub mod decompose;
pub mod evaluate;
pub mod ingest;
pub mod predict;
pub mod synth;

use std::path::Path;

use sparsecast_core::Error;

/// Names the offending file in IO errors.
pub(crate) fn with_path(path: &Path) -> impl FnOnce(Error) -> Error + '_ {
    move |e| match e {
        Error::Io(io) => Error::Io(std::io::Error::new(io.kind(), format!("{}: {io}", path.display()))),
        other => other,
    }
}
