//! Trajectory output: CSV with header `k,node,x,z` (17 significant digits,
//! exact round trip) and a static two-panel SVG plot.

use std::fmt::Write as _;
use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::Path;

use crate::dynamics::{CoupledState, Trajectory};
use crate::error::{Error, Result};

fn csv_err(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::Schema(format!("trajectory csv: {other:?}")),
    }
}

/// Writes one row per recorded state and node, sorted by `(k, node)`.
pub fn write_trajectory_csv<W: Write>(states: &[CoupledState<f64>], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["k", "node", "x", "z"]).map_err(csv_err)?;
    for s in states {
        let k = s.k.to_string();
        for (i, (x, z)) in s.x.iter().zip(&s.z).enumerate() {
            w.write_record([
                k.as_str(),
                &i.to_string(),
                &format!("{x:.16e}"),
                &format!("{z:.16e}"),
            ])
            .map_err(csv_err)?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn write_trajectory(traj: &Trajectory<f64>, path: impl AsRef<Path>) -> Result<()> {
    if traj.states.is_empty() {
        return Err(Error::precondition("empty trajectory"));
    }
    write_trajectory_csv(&traj.states, BufWriter::new(File::create(path)?))
}

/// Parses CSV written by [`write_trajectory_csv`] back into states.
pub fn read_trajectory_csv<R: Read>(input: R) -> Result<Vec<CoupledState<f64>>> {
    let mut r = csv::Reader::from_reader(input);
    let header = r.headers().map_err(csv_err)?.clone();
    if header.iter().collect::<Vec<_>>() != ["k", "node", "x", "z"] {
        return Err(Error::Schema(format!(
            "trajectory csv: unexpected header {header:?}"
        )));
    }
    let mut states: Vec<CoupledState<f64>> = Vec::new();
    for (line, rec) in r.records().enumerate() {
        let rec = rec.map_err(csv_err)?;
        let bad =
            |what: &str| Error::Schema(format!("trajectory csv row {}: bad {what}", line + 2));
        let k: u64 = rec[0].parse().map_err(|_| bad("k"))?;
        let node: usize = rec[1].parse().map_err(|_| bad("node"))?;
        let x: f64 = rec[2].parse().map_err(|_| bad("x"))?;
        let z: f64 = rec[3].parse().map_err(|_| bad("z"))?;
        match states.last_mut() {
            Some(s) if s.k == k => {
                if node != s.x.len() {
                    return Err(bad("node order"));
                }
                s.x.push(x);
                s.z.push(z);
            }
            last => {
                if node != 0 || last.is_some_and(|s| s.k >= k) {
                    return Err(bad("row order"));
                }
                states.push(CoupledState {
                    x: vec![x],
                    z: vec![z],
                    k,
                });
            }
        }
    }
    if states.windows(2).any(|w| w[0].x.len() != w[1].x.len()) {
        return Err(Error::Schema(
            "trajectory csv: node count changes between steps".into(),
        ));
    }
    Ok(states)
}

pub fn read_trajectory(path: impl AsRef<Path>) -> Result<Vec<CoupledState<f64>>> {
    read_trajectory_csv(File::open(path)?)
}

const PALETTE: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf",
];

/// Two stacked panels, `x_i(k)` above and `z_i(k)` below, one polyline per
/// node on a fixed `[0, 1]` vertical axis.
pub fn render_svg(states: &[CoupledState<f64>]) -> Result<String> {
    let (first, last) = match (states.first(), states.last()) {
        (Some(f), Some(l)) => (f, l),
        _ => return Err(Error::precondition("empty trajectory")),
    };
    let n = first.x.len();
    let (width, panel_h, left, top, gap) = (720.0, 260.0, 60.0, 30.0, 60.0);
    let plot_w = width - left - 20.0;
    let height = top + 2.0 * panel_h + gap + 40.0;
    let k0 = first.k as f64;
    let span = ((last.k - first.k) as f64).max(1.0);
    let sx = |k: u64| left + (k as f64 - k0) / span * plot_w;

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="12">"#
    );
    svg.push_str("<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n");
    for (p, (label, pick)) in [("infection x(k)", 0usize), ("opinion z(k)", 1)]
        .into_iter()
        .enumerate()
    {
        let y0 = top + p as f64 * (panel_h + gap);
        let sy = |v: f64| y0 + (1.0 - v) * panel_h;
        let _ = writeln!(
            svg,
            r##"<rect x="{left}" y="{y0}" width="{plot_w}" height="{panel_h}" fill="none" stroke="#444"/>"##
        );
        for tick in [0.0, 0.5, 1.0] {
            let y = sy(tick);
            let _ = writeln!(
                svg,
                r#"<text x="{}" y="{}" text-anchor="end">{tick}</text>"#,
                left - 6.0,
                y + 4.0
            );
        }
        let _ = writeln!(svg, r#"<text x="{left}" y="{}">{label}</text>"#, y0 - 8.0);
        let _ = writeln!(
            svg,
            r#"<text x="{}" y="{}" text-anchor="middle">k</text>"#,
            left + plot_w / 2.0,
            y0 + panel_h + 30.0
        );
        let _ = writeln!(
            svg,
            r#"<text x="{left}" y="{}" text-anchor="start">{}</text><text x="{}" y="{}" text-anchor="end">{}</text>"#,
            y0 + panel_h + 16.0,
            first.k,
            left + plot_w,
            y0 + panel_h + 16.0,
            last.k
        );
        for i in 0..n {
            let mut pts = String::new();
            for s in states {
                let v = if pick == 0 { s.x[i] } else { s.z[i] };
                let _ = write!(pts, "{:.2},{:.2} ", sx(s.k), sy(v));
            }
            let _ = writeln!(
                svg,
                r#"<polyline fill="none" stroke="{}" stroke-width="1" points="{}"/>"#,
                PALETTE[i % PALETTE.len()],
                pts.trim_end()
            );
        }
    }
    svg.push_str("</svg>\n");
    Ok(svg)
}

pub fn emit_plot(traj: &Trajectory<f64>, path: impl AsRef<Path>) -> Result<()> {
    std::fs::write(path, render_svg(&traj.states)?)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn states() -> Vec<CoupledState<f64>> {
        vec![
            CoupledState {
                x: vec![0.1, 1.0 / 3.0],
                z: vec![0.0, 0.7],
                k: 0,
            },
            CoupledState {
                x: vec![std::f64::consts::PI / 10.0, 1e-300],
                z: vec![0.25, 1.0],
                k: 5,
            },
        ]
    }

    #[test]
    fn csv_round_trip_is_exact() {
        let mut buf = Vec::new();
        write_trajectory_csv(&states(), &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("k,node,x,z\n"));
        assert_eq!(text.lines().count(), 1 + 2 * 2);
        assert_eq!(read_trajectory_csv(buf.as_slice()).unwrap(), states());
    }

    #[test]
    fn malformed_csv_rejected() {
        let text = "k,node,x,z\n0,1,0.5,0.5\n";
        assert!(read_trajectory_csv(text.as_bytes()).is_err());
        let text = "k,node,x\n0,0,0.5\n";
        assert!(read_trajectory_csv(text.as_bytes()).is_err());
    }

    #[test]
    fn flat_trajectory_plots_flat_lines() {
        let zero = vec![
            CoupledState {
                x: vec![0.0; 2],
                z: vec![0.0; 2],
                k: 0,
            },
            CoupledState {
                x: vec![0.0; 2],
                z: vec![0.0; 2],
                k: 1,
            },
        ];
        let svg = render_svg(&zero).unwrap();
        assert_eq!(svg.matches("<polyline").count(), 4);
        // value 0 sits on the bottom edge of each panel
        assert!(svg.contains("points=\"60.00,290.00 700.00,290.00\""));
        assert!(svg.contains("points=\"60.00,610.00 700.00,610.00\""));
        assert!(render_svg(&[]).is_err());
    }
}
