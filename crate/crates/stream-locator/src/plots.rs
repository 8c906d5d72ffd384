//! SVG histograms of per-video metrics.

use std::path::Path;

use plotters::prelude::*;
use stream_locator_core::eval::EvalReport;

use crate::error::{Error, Result};

const BINS: u32 = 20;

fn histogram(path: &Path, title: &str, values: &[f64]) -> Result<()> {
    let mut counts = vec![0u32; BINS as usize];
    for v in values {
        let b = ((v.clamp(0.0, 1.0) * f64::from(BINS)) as u32).min(BINS - 1);
        counts[b as usize] += 1;
    }
    let top = counts.iter().copied().max().unwrap_or(0).max(1);
    let plot_err = |e: &dyn std::fmt::Display| Error::Plot(format!("{}: {e}", path.display()));
    let root = SVGBackend::new(path, (640, 400)).into_drawing_area();
    root.fill(&WHITE).map_err(|e| plot_err(&e))?;
    let mut chart = ChartBuilder::on(&root)
        .caption(title, ("sans-serif", 20))
        .margin(10)
        .x_label_area_size(30)
        .y_label_area_size(40)
        .build_cartesian_2d((0u32..BINS).into_segmented(), 0u32..top + top / 10 + 1)
        .map_err(|e| plot_err(&e))?;
    chart
        .configure_mesh()
        .x_desc(format!("bin (width 1/{BINS})"))
        .y_desc("videos")
        .draw()
        .map_err(|e| plot_err(&e))?;
    chart
        .draw_series(
            Histogram::vertical(&chart)
                .style(BLUE.filled())
                .data(counts.iter().enumerate().map(|(i, &c)| (i as u32, c))),
        )
        .map_err(|e| plot_err(&e))?;
    root.present().map_err(|e| plot_err(&e))?;
    Ok(())
}

/// Write `iou_histogram.svg` and `frames_ratio_histogram.svg` into `dir`.
pub fn write_plots(report: &EvalReport, dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let ious: Vec<f64> = report.per_video.iter().map(|r| r.iou).collect();
    let ratios: Vec<f64> = report.per_video.iter().map(|r| r.frames_ratio()).collect();
    histogram(&dir.join("iou_histogram.svg"), "temporal IoU", &ious)?;
    histogram(&dir.join("frames_ratio_histogram.svg"), "frames scored / full scan", &ratios)?;
    Ok(())
}
