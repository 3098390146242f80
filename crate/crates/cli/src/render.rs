use std::io::Write;
use std::path::Path;

use dogfight::explain::{read_grid_json, write_heatmaps};

use crate::error::CliError;

pub fn run(
    grid_path: &Path,
    slice_axis: Option<&str>,
    stem: Option<&str>,
    out: &Path,
    io: &mut dyn Write,
) -> Result<(), CliError> {
    let grid = read_grid_json(grid_path)?;
    if grid.axes.cell_count() == 0 {
        return Err(CliError::Config(format!(
            "{} has no cells to render",
            grid_path.display()
        )));
    }
    // Grids are always sliced along their third axis; the flag is a guard
    // against rendering the wrong family of figures.
    if let Some(axis) = slice_axis {
        if axis != grid.axes.names[2] {
            return Err(CliError::Config(format!(
                "grid slices along its third axis '{}', not '{axis}'",
                grid.axes.names[2]
            )));
        }
    }
    let stem = match stem {
        Some(s) => s.to_string(),
        None => grid_path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "grid".to_string()),
    };
    let paths = write_heatmaps(&grid, out, &stem)?;
    for p in &paths {
        writeln!(io, "wrote {}", p.display())?;
    }
    Ok(())
}
