//! Selection-probability wheel export: an ordered CSV table and a static SVG
//! with one ring for the shared component and one per view.

use std::fmt::Write as _;
use std::path::Path;

use crate::stability::SelectionProfile;
use crate::{Error, Result};

/// Ring colors at probability 1: shared first, then views in order. Views
/// beyond the palette reuse it cyclically.
const SHARED_RGB: (u8, u8, u8) = (0, 200, 70);
const VIEW_RGB: [(u8, u8, u8); 6] = [
    (255, 215, 0),
    (160, 60, 220),
    (0, 210, 230),
    (255, 120, 40),
    (230, 40, 120),
    (90, 140, 255),
];

/// Variables ordered for display, with one probability per ring.
#[derive(Debug, Clone, PartialEq)]
pub struct SpowExport {
    pub variables: Vec<String>,
    pub ring_labels: Vec<String>,
    /// `values[i]` holds the shared probability followed by each view's.
    pub values: Vec<Vec<f64>>,
}

impl SpowExport {
    /// Sorts variables by shared probability (descending, ties by name
    /// ascending) and keeps the first `top_n` when given.
    pub fn from_profile(profile: &SelectionProfile, top_n: Option<usize>) -> Result<Self> {
        let p = profile.n_vars();
        if profile.shared_prob.len() != p || profile.view_prob.iter().any(|v| v.len() != p) {
            return Err(Error::ShapeMismatch("profile vectors differ in length".into()));
        }
        if profile.view_labels.len() != profile.view_prob.len() {
            return Err(Error::ShapeMismatch("one label per view is required".into()));
        }
        let mut order: Vec<usize> = (0..p).collect();
        order.sort_by(|&a, &b| {
            profile.shared_prob[b]
                .total_cmp(&profile.shared_prob[a])
                .then_with(|| profile.variable_names[a].cmp(&profile.variable_names[b]))
        });
        if let Some(n) = top_n {
            order.truncate(n);
        }
        let mut ring_labels = vec!["shared".to_string()];
        ring_labels.extend(profile.view_labels.iter().cloned());
        Ok(SpowExport {
            variables: order.iter().map(|&j| profile.variable_names[j].clone()).collect(),
            ring_labels,
            values: order
                .iter()
                .map(|&j| {
                    std::iter::once(profile.shared_prob[j])
                        .chain(profile.view_prob.iter().map(|v| v[j]))
                        .collect()
                })
                .collect(),
        })
    }

    pub fn n_slices(&self) -> usize {
        self.variables.len()
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        let mut header = vec!["variable".to_string()];
        header.extend(self.ring_labels.iter().cloned());
        w.write_record(&header)?;
        for (name, vals) in self.variables.iter().zip(&self.values) {
            let mut row = vec![name.clone()];
            row.extend(vals.iter().map(|v| v.to_string()));
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }

    /// Renders the wheel. Slice `i` spans angles `[i, i + 1) * 360 / n`,
    /// starting at 12 o'clock and running clockwise; rings go from the
    /// shared ring in the middle outward through the views.
    pub fn to_svg(&self) -> String {
        let size = 600.0;
        let c = size / 2.0;
        let hole = 60.0;
        let rings = self.ring_labels.len();
        let width = (c - hole - 40.0) / rings as f64;
        let n = self.n_slices();
        let mut out = String::new();
        let _ = writeln!(
            out,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{size}" height="{size}" viewBox="0 0 {size} {size}">"#
        );
        let _ = writeln!(out, r##"<rect width="100%" height="100%" fill="#ffffff"/>"##);
        for (k, label) in self.ring_labels.iter().enumerate() {
            let r0 = hole + k as f64 * width;
            let r1 = r0 + width;
            let _ = writeln!(out, r#"<g class="ring" data-ring="{}">"#, escape(label));
            if n == 0 {
                let fill = ring_color(k, 0.0);
                let _ = writeln!(out, "{}", annulus(c, r0, r1, &fill));
            }
            for (i, (name, vals)) in self.variables.iter().zip(&self.values).enumerate() {
                let a0 = i as f64 / n as f64;
                let a1 = (i + 1) as f64 / n as f64;
                let fill = ring_color(k, vals[k]);
                if n == 1 {
                    let _ = writeln!(out, "{}", annulus(c, r0, r1, &fill));
                } else {
                    let _ = writeln!(
                        out,
                        r#"<path class="slice" d="{}" fill="{fill}"><title>{}: {}</title></path>"#,
                        sector(c, r0, r1, a0, a1),
                        escape(name),
                        vals[k]
                    );
                }
            }
            let _ = writeln!(out, "</g>");
        }
        for (k, label) in self.ring_labels.iter().enumerate() {
            let _ = writeln!(
                out,
                r#"<text x="10" y="{}" font-family="sans-serif" font-size="12" fill="{}">{}</text>"#,
                20 + 16 * k,
                ring_color(k, 1.0),
                escape(label)
            );
        }
        out.push_str("</svg>\n");
        out
    }

    pub fn write_svg(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_svg())?;
        Ok(())
    }
}

/// Linear ramp from black at 0 to the ring's hue at 1.
fn ring_color(ring: usize, prob: f64) -> String {
    let (r, g, b) = if ring == 0 {
        SHARED_RGB
    } else {
        VIEW_RGB[(ring - 1) % VIEW_RGB.len()]
    };
    let t = prob.clamp(0.0, 1.0);
    let s = |x: u8| (x as f64 * t).round() as u8;
    format!("#{:02x}{:02x}{:02x}", s(r), s(g), s(b))
}

fn point(c: f64, r: f64, frac: f64) -> (f64, f64) {
    let theta = frac * std::f64::consts::TAU;
    (c + r * theta.sin(), c - r * theta.cos())
}

fn sector(c: f64, r0: f64, r1: f64, a0: f64, a1: f64) -> String {
    let large = if a1 - a0 > 0.5 { 1 } else { 0 };
    let (x0, y0) = point(c, r1, a0);
    let (x1, y1) = point(c, r1, a1);
    let (x2, y2) = point(c, r0, a1);
    let (x3, y3) = point(c, r0, a0);
    format!(
        "M{x0:.3} {y0:.3}A{r1:.3} {r1:.3} 0 {large} 1 {x1:.3} {y1:.3}L{x2:.3} {y2:.3}A{r0:.3} {r0:.3} 0 {large} 0 {x3:.3} {y3:.3}Z"
    )
}

fn annulus(c: f64, r0: f64, r1: f64, fill: &str) -> String {
    format!(
        r#"<path class="slice" fill-rule="evenodd" fill="{fill}" d="M{a:.3} {c:.3}A{r1:.3} {r1:.3} 0 1 1 {b:.3} {c:.3}A{r1:.3} {r1:.3} 0 1 1 {a:.3} {c:.3}ZM{d:.3} {c:.3}A{r0:.3} {r0:.3} 0 1 1 {e:.3} {c:.3}A{r0:.3} {r0:.3} 0 1 1 {d:.3} {c:.3}Z"/>"#,
        a = c - r1,
        b = c + r1,
        d = c - r0,
        e = c + r0,
    )
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

/// Writes `<stem>.csv` and `<stem>.svg` into `dir`.
pub fn export_spow(
    profile: &SelectionProfile,
    dir: impl AsRef<Path>,
    stem: &str,
    top_n: Option<usize>,
) -> Result<SpowExport> {
    let export = SpowExport::from_profile(profile, top_n)?;
    let dir = dir.as_ref();
    std::fs::create_dir_all(dir)?;
    export.write_csv(dir.join(format!("{stem}.csv")))?;
    export.write_svg(dir.join(format!("{stem}.svg")))?;
    Ok(export)
}
