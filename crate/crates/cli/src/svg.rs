//! Minimal static SVG plots: line charts and a log-colour heatmap.

use std::fmt::Write;

const WIDTH: f64 = 800.0;
const HEIGHT: f64 = 500.0;
const LEFT: f64 = 80.0;
const RIGHT: f64 = 150.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 60.0;
const MAX_POINTS: usize = 2_000;
const COLORS: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#17becf"];

pub struct Series<'a> {
    pub label: &'a str,
    pub x: &'a [f64],
    pub y: &'a [f64],
}

struct Axis {
    lo: f64,
    hi: f64,
    log: bool,
}

impl Axis {
    fn new(values: impl Iterator<Item = f64>, log: bool) -> Self {
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for v in values.filter(|v| v.is_finite() && (!log || *v > 0.0)) {
            let v = if log { v.log10() } else { v };
            lo = lo.min(v);
            hi = hi.max(v);
        }
        if !lo.is_finite() {
            (lo, hi) = (0.0, 1.0);
        }
        if hi - lo < 1e-300 {
            lo -= 0.5;
            hi += 0.5;
        }
        Self { lo, hi, log }
    }

    fn frac(&self, v: f64) -> Option<f64> {
        let v = if self.log {
            if v <= 0.0 {
                return None;
            }
            v.log10()
        } else {
            v
        };
        v.is_finite().then(|| (v - self.lo) / (self.hi - self.lo))
    }

    fn ticks(&self) -> Vec<(f64, String)> {
        if self.log {
            let (a, b) = (self.lo.ceil() as i32, self.hi.floor() as i32);
            let step = ((b - a) / 6).max(1);
            return (a..=b).step_by(step as usize).map(|e| (e as f64, format!("1e{e}"))).collect();
        }
        let raw = (self.hi - self.lo) / 5.0;
        let mag = 10f64.powf(raw.log10().floor());
        let step = [1.0, 2.0, 5.0, 10.0].iter().map(|m| m * mag).find(|s| *s >= raw).unwrap_or(10.0 * mag);
        let mut v = (self.lo / step).ceil() * step;
        let mut out = Vec::new();
        while v <= self.hi + 1e-9 * step {
            out.push((v, format!("{}", (v / step).round() * step)));
            v += step;
        }
        out
    }

    /// Position along the axis for a tick value already in axis units.
    fn tick_frac(&self, v: f64) -> f64 {
        (v - self.lo) / (self.hi - self.lo)
    }
}

fn header(out: &mut String, title: &str) {
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(out, r#"<text x="{}" y="24" text-anchor="middle" font-size="15">{}</text>"#, WIDTH / 2.0, escape(title));
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn frame(out: &mut String, x: &Axis, y: &Axis, xlabel: &str, ylabel: &str) {
    let (pw, ph) = (WIDTH - LEFT - RIGHT, HEIGHT - TOP - BOTTOM);
    let _ = writeln!(out, r#"<rect x="{LEFT}" y="{TOP}" width="{pw}" height="{ph}" fill="none" stroke="black"/>"#);
    for (v, label) in x.ticks() {
        let px = LEFT + x.tick_frac(v) * pw;
        let _ = writeln!(
            out,
            r#"<line x1="{px:.1}" y1="{b}" x2="{px:.1}" y2="{b2}" stroke="black"/><text x="{px:.1}" y="{t}" text-anchor="middle">{label}</text>"#,
            b = TOP + ph,
            b2 = TOP + ph + 5.0,
            t = TOP + ph + 18.0
        );
    }
    for (v, label) in y.ticks() {
        let py = TOP + (1.0 - y.tick_frac(v)) * ph;
        let _ = writeln!(
            out,
            r#"<line x1="{a}" y1="{py:.1}" x2="{LEFT}" y2="{py:.1}" stroke="black"/><text x="{t}" y="{ty:.1}" text-anchor="end">{label}</text>"#,
            a = LEFT - 5.0,
            t = LEFT - 8.0,
            ty = py + 4.0
        );
    }
    let _ = writeln!(out, r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#, LEFT + pw / 2.0, HEIGHT - 15.0, escape(xlabel));
    let _ = writeln!(
        out,
        r#"<text x="20" y="{cy}" text-anchor="middle" transform="rotate(-90 20 {cy})">{}</text>"#,
        escape(ylabel),
        cy = TOP + ph / 2.0
    );
}

pub fn line_plot(title: &str, xlabel: &str, ylabel: &str, series: &[Series], log_y: bool) -> String {
    let x = Axis::new(series.iter().flat_map(|s| s.x.iter().copied()), false);
    let y = Axis::new(series.iter().flat_map(|s| s.y.iter().copied()), log_y);
    let (pw, ph) = (WIDTH - LEFT - RIGHT, HEIGHT - TOP - BOTTOM);
    let mut out = String::new();
    header(&mut out, title);
    frame(&mut out, &x, &y, xlabel, ylabel);
    for (i, s) in series.iter().enumerate() {
        let color = COLORS[i % COLORS.len()];
        let stride = (s.x.len() / MAX_POINTS).max(1);
        let mut path = String::new();
        let mut pen_down = false;
        for j in (0..s.x.len()).step_by(stride).chain(std::iter::once(s.x.len().saturating_sub(1))) {
            match (x.frac(s.x[j]), y.frac(s.y[j])) {
                (Some(fx), Some(fy)) => {
                    let _ = write!(path, "{}{:.2},{:.2} ", if pen_down { "L" } else { "M" }, LEFT + fx * pw, TOP + (1.0 - fy) * ph);
                    pen_down = true;
                }
                _ => pen_down = false,
            }
        }
        let _ = writeln!(out, r#"<path d="{}" fill="none" stroke="{color}" stroke-width="1.5"/>"#, path.trim_end());
        let ly = TOP + 15.0 + 18.0 * i as f64;
        let _ = writeln!(
            out,
            r#"<line x1="{a}" y1="{ly}" x2="{b}" y2="{ly}" stroke="{color}" stroke-width="2"/><text x="{c}" y="{ty}">{}</text>"#,
            escape(s.label),
            a = WIDTH - RIGHT + 10.0,
            b = WIDTH - RIGHT + 30.0,
            c = WIDTH - RIGHT + 35.0,
            ty = ly + 4.0
        );
    }
    out.push_str("</svg>\n");
    out
}

/// Colour ramp from dark blue through green to yellow, `f` in `[0, 1]`.
fn ramp(f: f64) -> String {
    const STOPS: [(f64, f64, f64); 4] = [(68.0, 1.0, 84.0), (59.0, 82.0, 139.0), (33.0, 145.0, 140.0), (253.0, 231.0, 37.0)];
    let f = f.clamp(0.0, 1.0) * (STOPS.len() - 1) as f64;
    let i = (f.floor() as usize).min(STOPS.len() - 2);
    let w = f - i as f64;
    let (a, b) = (STOPS[i], STOPS[i + 1]);
    format!(
        "rgb({:.0},{:.0},{:.0})",
        a.0 + w * (b.0 - a.0),
        a.1 + w * (b.1 - a.1),
        a.2 + w * (b.2 - a.2)
    )
}

/// Heatmap of `z[row][col]` with rows `ks` (upwards) and columns `times`,
/// coloured by `log10 z` over the top `decades` decades.
pub fn heatmap(title: &str, times: &[f64], ks: &[u64], z: &[Vec<f64>], decades: f64) -> String {
    let (pw, ph) = (WIDTH - LEFT - RIGHT, HEIGHT - TOP - BOTTOM);
    let x = Axis::new(times.iter().copied(), false);
    let y = Axis::new(ks.iter().map(|&k| k as f64), false);
    let top = z.iter().flatten().copied().filter(|v| *v > 0.0).fold(f64::MIN_POSITIVE, f64::max).log10();
    let bottom = top - decades;
    let col_step = times.len().div_ceil(250).max(1);
    let row_step = ks.len().div_ceil(200).max(1);
    let cw = pw / times.len().div_ceil(col_step).max(1) as f64;
    let rh = ph / ks.len().div_ceil(row_step).max(1) as f64;

    let mut out = String::new();
    header(&mut out, title);
    for (ri, r) in (0..ks.len()).step_by(row_step).enumerate() {
        for (ci, c) in (0..times.len()).step_by(col_step).enumerate() {
            let v = z[r][c];
            if v <= 0.0 {
                continue;
            }
            let f = (v.log10() - bottom) / decades;
            if f < 0.0 {
                continue;
            }
            let _ = writeln!(
                out,
                r#"<rect x="{:.2}" y="{:.2}" width="{:.2}" height="{:.2}" fill="{}"/>"#,
                LEFT + ci as f64 * cw,
                TOP + ph - (ri + 1) as f64 * rh,
                cw + 0.3,
                rh + 0.3,
                ramp(f)
            );
        }
    }
    frame(&mut out, &x, &y, "t (days)", "k");
    for i in 0..=4 {
        let f = i as f64 / 4.0;
        let py = TOP + (1.0 - f) * 200.0;
        let _ = writeln!(
            out,
            r#"<rect x="{a}" y="{py:.1}" width="15" height="50" fill="{}"/><text x="{b}" y="{ty:.1}">1e{:.0}</text>"#,
            ramp(f),
            bottom + f * decades,
            a = WIDTH - RIGHT + 10.0,
            b = WIDTH - RIGHT + 30.0,
            ty = py + 4.0
        );
    }
    out.push_str("</svg>\n");
    out
}
