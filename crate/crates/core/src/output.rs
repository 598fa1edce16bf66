//! Byte-stable file writers: NDJSON event streams, CSV tables, and portable
//! pixmaps.
//!
//! All numeric formatting goes through `Display` (shortest round-trip for
//! floats), so identical data always serializes to identical bytes; that is
//! what makes manifest-based reproduction checkable by digest.

use std::io::{self, Write};

use crate::config::Color;
use crate::engine::{GenerationStats, LatticeState, RunObserver, RunSummary};
use crate::experiments::{Estimator, ReplicationOutcome, SweepResult};
use crate::shape::{ShapeEstimate, SpeedComparison};

// ---------------------------------------------------------------------------
// NDJSON
// ---------------------------------------------------------------------------

fn json_opt(v: Option<u64>) -> String {
    v.map_or_else(|| "null".to_string(), |x| x.to_string())
}

/// One event-log line per generation.
pub fn event_log_line(stats: &GenerationStats) -> String {
    format!(
        concat!(
            "{{\"generation\":{},\"total_red\":{},\"total_blue\":{},",
            "\"total_particles\":{},\"newly_colored_red\":{},\"newly_colored_blue\":{},",
            "\"colored_red\":{},\"colored_blue\":{},\"max_radius_red\":{},",
            "\"max_radius_blue\":{},\"visited_sites\":{}}}"
        ),
        stats.generation,
        stats.total_red,
        stats.total_blue,
        stats.total_particles(),
        stats.newly_colored_red,
        stats.newly_colored_blue,
        stats.colored_red,
        stats.colored_blue,
        json_opt(stats.max_colored_radius_red),
        json_opt(stats.max_colored_radius_blue),
        stats.visited_sites,
    )
}

/// Observer that appends one NDJSON line per generation to a writer.
pub struct EventLogObserver<W: Write> {
    writer: W,
}

impl<W: Write> EventLogObserver<W> {
    pub fn new(writer: W) -> Self {
        EventLogObserver { writer }
    }

    pub fn into_inner(self) -> W {
        self.writer
    }
}

impl<W: Write> RunObserver for EventLogObserver<W> {
    fn on_generation(&mut self, state: &LatticeState) -> io::Result<()> {
        writeln!(self.writer, "{}", event_log_line(state.stats()))
    }
}

/// One NDJSON line per replication outcome. Runtime is deliberately
/// excluded: serialized records must be reproducible byte-for-byte.
pub fn outcome_ndjson_line(outcome: &ReplicationOutcome) -> String {
    match outcome {
        ReplicationOutcome::Classified(r) => format!(
            concat!(
                "{{\"replication\":{},\"seed\":{},\"proxy_g_r\":{},\"proxy_g_b\":{},",
                "\"proxy_c\":{},\"colored_red\":{},\"colored_blue\":{},",
                "\"max_radius_red\":{},\"max_radius_blue\":{},\"approximate\":{}}}"
            ),
            r.replication,
            r.seed,
            r.proxy_g_r,
            r.proxy_g_b,
            r.proxy_c,
            r.colored_red,
            r.colored_blue,
            json_opt(r.max_radius_red),
            json_opt(r.max_radius_blue),
            r.approximate,
        ),
        ReplicationOutcome::Failed { replication, error } => format!(
            "{{\"replication\":{},\"failed\":true,\"error\":{}}}",
            replication,
            json_string(error),
        ),
    }
}

fn json_string(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push('"');
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            c if (c as u32) < 0x20 => out.push_str(&format!("\\u{:04x}", c as u32)),
            c => out.push(c),
        }
    }
    out.push('"');
    out
}

// ---------------------------------------------------------------------------
// CSV
// ---------------------------------------------------------------------------

fn csv_field(s: &str) -> String {
    if s.contains(',') || s.contains('"') || s.contains('\n') {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

fn opt_field(v: Option<u64>) -> String {
    v.map_or_else(String::new, |x| x.to_string())
}

/// Per-replication summary table.
pub fn summary_csv(summaries: &[RunSummary]) -> String {
    let mut out = String::from(
        "replication,seed,horizon,total_red,total_blue,colored_red,colored_blue,\
         max_radius_red,max_radius_blue,visited_sites,approximate\n",
    );
    for s in summaries {
        let stats = s.final_stats();
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{},{}\n",
            s.replication,
            s.seed,
            s.horizon,
            stats.total_red,
            stats.total_blue,
            stats.colored_red,
            stats.colored_blue,
            opt_field(stats.max_colored_radius_red),
            opt_field(stats.max_colored_radius_blue),
            stats.visited_sites,
            s.state.approximate,
        ));
    }
    out
}

/// Sweep table: one row per (p, estimator), annotated with the exact axis
/// threshold when one exists.
pub fn sweep_csv(sweep: &SweepResult) -> String {
    let (threshold, direction) = match &sweep.threshold {
        Some(t) => (
            t.report
                .p_threshold
                .as_ref()
                .map_or_else(|| "none".to_string(), |p| p.to_string()),
            t.report.direction.to_string(),
        ),
        None => ("none".to_string(), String::new()),
    };
    let mut out = String::from(
        "p,estimator,estimate,ci_low,ci_high,replications,failures,p_threshold,threshold_direction\n",
    );
    for row in &sweep.rows {
        let table = row.run.table();
        for estimator in Estimator::ALL {
            let r = table
                .rows
                .iter()
                .find(|r| r.estimator == estimator)
                .expect("all estimators present");
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{},{}\n",
                csv_field(&row.p.to_string()),
                estimator.name(),
                r.interval.estimate,
                r.interval.low,
                r.interval.high,
                table.replications,
                table.failures,
                csv_field(&threshold),
                csv_field(&direction),
            ));
        }
    }
    out
}

fn direction_columns(dim: usize) -> String {
    (0..dim)
        .map(|i| format!("x{i}"))
        .collect::<Vec<_>>()
        .join(",")
}

fn direction_values(site: &crate::lattice::Site) -> String {
    site.coords()
        .iter()
        .map(|c| c.to_string())
        .collect::<Vec<_>>()
        .join(",")
}

/// Radial shape profile: direction components, radial value, standard error.
pub fn shape_csv(estimate: &ShapeEstimate) -> String {
    let dim = estimate
        .directions
        .first()
        .map_or(0, crate::lattice::Site::dim);
    let mut out = format!("{},radial,se\n", direction_columns(dim));
    for (i, dir) in estimate.directions.iter().enumerate() {
        out.push_str(&format!(
            "{},{},{}\n",
            direction_values(dir),
            estimate.radial[i],
            estimate.standard_error[i],
        ));
    }
    out
}

/// Paired speed comparisons per direction.
pub fn speeds_csv(comparisons: &[SpeedComparison]) -> String {
    let dim = comparisons
        .first()
        .map_or(0, |c| c.direction.dim());
    let mut out = format!(
        "{},tau_red,se_red,tau_blue,se_blue,z\n",
        direction_columns(dim)
    );
    for c in comparisons {
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            direction_values(&c.direction),
            c.tau_red,
            c.se_red,
            c.tau_blue,
            c.se_blue,
            c.z_score,
        ));
    }
    out
}

// ---------------------------------------------------------------------------
// Portable pixmaps
// ---------------------------------------------------------------------------

const WHITE: [u8; 3] = [255, 255, 255];
const RED: [u8; 3] = [255, 0, 0];
const BLUE: [u8; 3] = [0, 0, 255];

/// Writes a binary pixmap of a 2-dimensional state: white for uncolored
/// sites, red/blue by site color, over the bounding box of colored sites.
pub fn write_pixmap<W: Write>(writer: &mut W, state: &LatticeState) -> io::Result<()> {
    if state.dimension != 2 {
        return Err(io::Error::new(
            io::ErrorKind::InvalidInput,
            format!("pixmap export requires dimension 2, state has {}", state.dimension),
        ));
    }
    let (mut min_x, mut max_x, mut min_y, mut max_y) = (0i64, 0i64, 0i64, 0i64);
    let mut any = false;
    for site in state.cells.keys() {
        let c = site.coords();
        let (x, y) = (i64::from(c[0]), i64::from(c[1]));
        if !any {
            (min_x, max_x, min_y, max_y) = (x, x, y, y);
            any = true;
        } else {
            min_x = min_x.min(x);
            max_x = max_x.max(x);
            min_y = min_y.min(y);
            max_y = max_y.max(y);
        }
    }
    let width = (max_x - min_x + 1) as usize;
    let height = (max_y - min_y + 1) as usize;
    let mut pixels = vec![WHITE; width * height];
    for (site, cell) in &state.cells {
        let c = site.coords();
        let col = (i64::from(c[0]) - min_x) as usize;
        // Row 0 is the top of the image (largest y).
        let row = (max_y - i64::from(c[1])) as usize;
        pixels[row * width + col] = match cell.color {
            Color::Red => RED,
            Color::Blue => BLUE,
        };
    }
    write!(writer, "P6\n{width} {height}\n255\n")?;
    for px in &pixels {
        writer.write_all(px)?;
    }
    Ok(())
}

/// Rasterizes the radial profile of a 2-dimensional shape estimate as a
/// closed polygon over light axes.
pub fn write_shape_overlay<W: Write>(writer: &mut W, estimate: &ShapeEstimate) -> io::Result<()> {
    const SIZE: usize = 512;
    const MARGIN: f64 = 24.0;
    let dim = estimate.directions.first().map_or(0, |d| d.dim());
    if dim != 2 {
        return Err(io::Error::new(
            io::ErrorKind::InvalidInput,
            "shape overlay requires dimension 2",
        ));
    }
    let max_radial = estimate
        .radial
        .iter()
        .fold(0.0f64, |acc, &v| acc.max(v))
        .max(1e-9);
    let scale = (SIZE as f64 / 2.0 - MARGIN) / max_radial;
    let center = SIZE as f64 / 2.0;

    // Points ordered by angle for a closed polygon.
    let mut points: Vec<(f64, f64, f64)> = estimate
        .directions
        .iter()
        .zip(&estimate.radial)
        .map(|(dir, &r)| {
            let c = dir.coords();
            let norm = dir.norm2();
            let ux = f64::from(c[0]) / norm;
            let uy = f64::from(c[1]) / norm;
            (uy.atan2(ux), center + ux * r * scale, center - uy * r * scale)
        })
        .collect();
    points.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("finite angles"));

    let mut pixels = vec![WHITE; SIZE * SIZE];
    let mut put = |x: i64, y: i64, color: [u8; 3]| {
        if (0..SIZE as i64).contains(&x) && (0..SIZE as i64).contains(&y) {
            pixels[y as usize * SIZE + x as usize] = color;
        }
    };
    // Axes.
    const AXIS: [u8; 3] = [200, 200, 200];
    for i in 0..SIZE as i64 {
        put(i, center as i64, AXIS);
        put(center as i64, i, AXIS);
    }
    // Polygon edges.
    const EDGE: [u8; 3] = [0, 0, 0];
    for i in 0..points.len() {
        let (_, x0, y0) = points[i];
        let (_, x1, y1) = points[(i + 1) % points.len()];
        let steps = ((x1 - x0).abs().max((y1 - y0).abs()).ceil() as usize).max(1);
        for s in 0..=steps {
            let t = s as f64 / steps as f64;
            put(
                (x0 + (x1 - x0) * t).round() as i64,
                (y0 + (y1 - y0) * t).round() as i64,
                EDGE,
            );
        }
    }

    write!(writer, "P6\n{SIZE} {SIZE}\n255\n")?;
    for px in &pixels {
        writer.write_all(px)?;
    }
    Ok(())
}
