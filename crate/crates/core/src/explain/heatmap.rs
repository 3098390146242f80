//! SVG heatmaps of an explanation grid.
//!
//! One image per value of the third axis; within an image, axis 0 runs
//! down the rows and axis 1 across the columns. Cells are colored by
//! argmax mode, tied cells get a diagonal overlay, empty cells render as
//! "no data", and the exact counts ride along in hover titles. Rendering
//! is pure string building, so bytes are reproducible.

use std::path::{Path, PathBuf};

use crate::engine::Mode;

use super::grid::ExplanationGrid;
use super::ExplainError;

const CELL: i64 = 34;
const MARGIN_LEFT: i64 = 74;
const MARGIN_TOP: i64 = 46;
const MARGIN_BOTTOM: i64 = 58;
const LEGEND_WIDTH: i64 = 140;

const NO_DATA_FILL: &str = "#c7c7c7";
const TIE_SWATCH_FILL: &str = "#8a8a8a";

fn mode_fill(mode: Mode) -> &'static str {
    match mode {
        Mode::Attack => "#d62728",
        Mode::Engage => "#1f77b4",
        Mode::Defend => "#2ca02c",
    }
}

fn escape(text: &str) -> String {
    text.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Renders the slice at `slice` along axis 2 as a standalone SVG document.
pub fn render_heatmap_slice(
    grid: &ExplanationGrid,
    slice: usize,
) -> Result<String, ExplainError> {
    grid.verify()?;
    let [n0, n1, n2] = grid.axes.shape();
    if slice >= n2 {
        return Err(ExplainError::Spec(format!(
            "slice {slice} out of range for a {n2}-deep axis"
        )));
    }

    let grid_w = n1 as i64 * CELL;
    let grid_h = n0 as i64 * CELL;
    let legend_x = MARGIN_LEFT + grid_w + 24;
    let legend_entries: [(&str, &str, bool); 5] = [
        ("attack", mode_fill(Mode::Attack), false),
        ("engage", mode_fill(Mode::Engage), false),
        ("defend", mode_fill(Mode::Defend), false),
        ("tie", TIE_SWATCH_FILL, true),
        ("no data", NO_DATA_FILL, false),
    ];
    let legend_h = legend_entries.len() as i64 * 24;
    let width = legend_x + LEGEND_WIDTH;
    let height = (MARGIN_TOP + grid_h + MARGIN_BOTTOM).max(MARGIN_TOP + legend_h + 16);

    let mut svg = String::new();
    svg.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{width}\" height=\"{height}\" \
         viewBox=\"0 0 {width} {height}\">\n"
    ));
    let slice_label = escape(&grid.axes.values[2][slice]);
    let slice_name = escape(&grid.axes.names[2]);
    svg.push_str(&format!("<title>argmax mode, {slice_name} = {slice_label}</title>\n"));
    svg.push_str(
        "<style>text { font-family: monospace; font-size: 12px; fill: #222222; }</style>\n",
    );
    svg.push_str(&format!(
        "<rect x=\"0\" y=\"0\" width=\"{width}\" height=\"{height}\" fill=\"#ffffff\"/>\n"
    ));
    svg.push_str(&format!(
        "<text x=\"{}\" y=\"24\" text-anchor=\"middle\">{} = {}</text>\n",
        MARGIN_LEFT + grid_w / 2,
        slice_name,
        slice_label
    ));

    for r in 0..n0 {
        for c in 0..n1 {
            let cell = grid.cell([r, c, slice]);
            let x = MARGIN_LEFT + c as i64 * CELL;
            let y = MARGIN_TOP + r as i64 * CELL;
            let fill = if cell.samples == 0 { NO_DATA_FILL } else { mode_fill(cell.argmax) };
            let hover = format!(
                "attack={} engage={} defend={} samples={}",
                cell.counts[0], cell.counts[1], cell.counts[2], cell.samples
            );
            let tie_overlay = if cell.tie && cell.samples > 0 {
                format!(
                    "<line x1=\"{x}\" y1=\"{y}\" x2=\"{}\" y2=\"{}\" \
                     stroke=\"#ffffff\" stroke-width=\"2\"/>",
                    x + CELL,
                    y + CELL
                )
            } else {
                String::new()
            };
            let class = if cell.tie && cell.samples > 0 { " class=\"tie\"" } else { "" };
            svg.push_str(&format!(
                "<g{class}><title>{hover}</title>\
                 <rect x=\"{x}\" y=\"{y}\" width=\"{CELL}\" height=\"{CELL}\" \
                 fill=\"{fill}\" stroke=\"#ffffff\" stroke-width=\"1\"/>{tie_overlay}</g>\n"
            ));
        }
    }

    for (r, label) in grid.axes.values[0].iter().enumerate() {
        svg.push_str(&format!(
            "<text x=\"{}\" y=\"{}\" text-anchor=\"end\">{}</text>\n",
            MARGIN_LEFT - 8,
            MARGIN_TOP + r as i64 * CELL + CELL / 2 + 4,
            escape(label)
        ));
    }
    for (c, label) in grid.axes.values[1].iter().enumerate() {
        svg.push_str(&format!(
            "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\">{}</text>\n",
            MARGIN_LEFT + c as i64 * CELL + CELL / 2,
            MARGIN_TOP + grid_h + 18,
            escape(label)
        ));
    }
    svg.push_str(&format!(
        "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\">{}</text>\n",
        MARGIN_LEFT + grid_w / 2,
        MARGIN_TOP + grid_h + 40,
        escape(&grid.axes.names[1])
    ));
    let axis0_y = MARGIN_TOP + grid_h / 2;
    svg.push_str(&format!(
        "<text x=\"18\" y=\"{axis0_y}\" text-anchor=\"middle\" \
         transform=\"rotate(-90 18 {axis0_y})\">{}</text>\n",
        escape(&grid.axes.names[0])
    ));

    for (i, (label, fill, hatched)) in legend_entries.iter().enumerate() {
        let y = MARGIN_TOP + i as i64 * 24;
        svg.push_str(&format!(
            "<rect x=\"{legend_x}\" y=\"{y}\" width=\"16\" height=\"16\" fill=\"{fill}\" \
             stroke=\"#ffffff\" stroke-width=\"1\"/>"
        ));
        if *hatched {
            svg.push_str(&format!(
                "<line x1=\"{legend_x}\" y1=\"{y}\" x2=\"{}\" y2=\"{}\" \
                 stroke=\"#ffffff\" stroke-width=\"2\"/>",
                legend_x + 16,
                y + 16
            ));
        }
        svg.push_str(&format!(
            "<text x=\"{}\" y=\"{}\">{label}</text>\n",
            legend_x + 24,
            y + 13
        ));
    }

    svg.push_str("</svg>\n");
    Ok(svg)
}

fn sanitize(label: &str) -> String {
    label
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '.' || c == '-' || c == '_' { c } else { '-' })
        .collect()
}

/// Writes one SVG per third-axis value into `dir`, named
/// `{stem}_{axis2_name}_{value}.svg`, and returns the paths in slice order.
pub fn write_heatmaps(
    grid: &ExplanationGrid,
    dir: &Path,
    stem: &str,
) -> Result<Vec<PathBuf>, ExplainError> {
    grid.verify()?;
    let mut paths = Vec::new();
    for (slice, value) in grid.axes.values[2].iter().enumerate() {
        let svg = render_heatmap_slice(grid, slice)?;
        let name = format!(
            "{}_{}_{}.svg",
            sanitize(stem),
            sanitize(&grid.axes.names[2]),
            sanitize(value)
        );
        let path = dir.join(name);
        std::fs::write(&path, svg)?;
        paths.push(path);
    }
    Ok(paths)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::{AircraftId, AircraftType, Composition};
    use crate::explain::grid::aggregate_global;
    use crate::explain::records::{GlobalRecord, OpponentStrategy};
    use crate::explain::sweep::GlobalSweepSpec;

    fn spec() -> GlobalSweepSpec {
        GlobalSweepSpec {
            strategies: vec![OpponentStrategy::Attack, OpponentStrategy::Mixed],
            differences: vec![-1, 0],
            sensing: vec![1, 2],
            episodes_per_cell: 1,
            composition: Composition::HomogeneousAc1,
            baseline_opponents: 2,
            max_ticks: 20,
            seed: 0,
        }
    }

    fn record(strategy: OpponentStrategy, difference: i64, m: usize, mode: Mode) -> GlobalRecord {
        GlobalRecord {
            strategy,
            difference,
            m,
            episode: 0,
            step: 0,
            agent: AircraftId(0),
            aircraft_type: AircraftType::Ac1,
            mode,
        }
    }

    /// A grid with a clear winner, a tie, and untouched (empty) cells.
    fn sample_grid() -> ExplanationGrid {
        let records = vec![
            record(OpponentStrategy::Attack, -1, 1, Mode::Defend),
            record(OpponentStrategy::Attack, -1, 1, Mode::Defend),
            record(OpponentStrategy::Attack, -1, 1, Mode::Attack),
            record(OpponentStrategy::Attack, 0, 1, Mode::Attack),
            record(OpponentStrategy::Attack, 0, 1, Mode::Engage),
            record(OpponentStrategy::Mixed, 0, 2, Mode::Engage),
        ];
        aggregate_global(&records, &spec()).unwrap()
    }

    #[test]
    fn one_file_per_slice_in_axis_order() {
        let grid = sample_grid();
        let dir = tempfile::tempdir().unwrap();
        let paths = write_heatmaps(&grid, dir.path(), "global").unwrap();
        assert_eq!(paths.len(), 2);
        assert_eq!(paths[0].file_name().unwrap(), "global_m_1.svg");
        assert_eq!(paths[1].file_name().unwrap(), "global_m_2.svg");
        for p in &paths {
            assert!(p.exists());
        }
    }

    #[test]
    fn rendering_is_byte_deterministic() {
        let grid = sample_grid();
        assert_eq!(
            render_heatmap_slice(&grid, 0).unwrap(),
            render_heatmap_slice(&grid, 0).unwrap()
        );
        assert_ne!(
            render_heatmap_slice(&grid, 0).unwrap(),
            render_heatmap_slice(&grid, 1).unwrap()
        );
    }

    #[test]
    fn svg_colors_ties_and_legend_are_present() {
        let grid = sample_grid();
        let slice0 = render_heatmap_slice(&grid, 0).unwrap();

        // Winner fill and tie overlay for the m = 1 slice.
        assert!(slice0.contains("#2ca02c"), "defend win missing");
        assert!(slice0.contains("class=\"tie\""), "tie overlay missing");
        assert!(slice0.contains("attack=1 engage=1 defend=0 samples=2"));
        assert!(slice0.contains(NO_DATA_FILL), "empty cells should render as no data");
        for label in ["attack", "engage", "defend", "tie", "no data"] {
            assert!(slice0.contains(&format!(">{label}</text>")), "legend misses {label}");
        }
        // Axis furniture.
        assert!(slice0.contains("m = 1"));
        assert!(slice0.contains(">strategy</text>"));
        assert!(slice0.contains(">difference</text>"));
        assert!(slice0.contains(">mixed</text>"));
        assert!(slice0.contains(">-1</text>"));
    }

    #[test]
    fn tie_overlay_counts_match_tied_visible_cells() {
        let grid = sample_grid();
        let slice0 = render_heatmap_slice(&grid, 0).unwrap();
        let ties = slice0.matches("class=\"tie\"").count();
        let expected = grid
            .cells
            .iter()
            .filter(|c| c.coords[2] == 0 && c.tie && c.samples > 0)
            .count();
        assert_eq!(ties, expected);
        assert_eq!(ties, 1);
    }

    #[test]
    fn out_of_range_slices_are_rejected() {
        let grid = sample_grid();
        assert!(matches!(
            render_heatmap_slice(&grid, 2),
            Err(ExplainError::Spec(_))
        ));
    }
}
