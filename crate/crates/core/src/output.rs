//! CSV tables and SVG plots. Numbers carry 9 significant digits so that
//! identical runs produce identical bytes.

use std::fmt::Write as _;

use crate::band::BandPoint;
use crate::emissivity::{Channel, EmissivityMap};
use crate::error::{Error, Result};
use crate::mie::CrossSections;
use crate::scene::Units;

pub fn num(x: f64) -> String {
    if x == 0.0 {
        // no negative zero
        return "0.00000000e0".into();
    }
    format!("{x:.8e}")
}

fn csv_table(header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<String> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::CRLF)
        .from_writer(Vec::new());
    let io = |e: csv::Error| Error::Io(e.to_string());
    w.write_record(header).map_err(io)?;
    for r in rows {
        w.write_record(&r).map_err(io)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Io(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| Error::Internal(e.to_string()))
}

/// Long-format table: one row per `(ω, θ, polarization)`.
pub fn map_csv(map: &EmissivityMap, units: Units) -> Result<String> {
    let mut rows = Vec::new();
    for i in 0..map.omega.len() {
        for j in 0..map.theta.len() {
            for p in map.point(i, j) {
                rows.push(vec![
                    num(units.from_angular(p.omega)),
                    num(p.theta.to_degrees()),
                    p.pol.name().to_string(),
                    num(p.r),
                    num(p.t),
                    num(p.a),
                    num(p.e),
                ]);
            }
        }
    }
    csv_table(&[units.header(), "theta [deg]", "pol", "R", "T", "A", "E"], rows)
}

/// Planck-weighted spectra: `E(ω) b(ω/x₀)` per angle and channel.
pub fn planck_csv(rows: &[(f64, f64, Channel, f64)], units: Units, x0: f64, coverage: f64) -> Result<String> {
    csv_table(
        &[
            units.header(),
            "theta [deg]",
            "pol",
            &format!("E*b(omega/{x0}) [coverage {coverage:.4}]"),
        ],
        rows.iter().map(|(w, t, c, v)| {
            vec![
                num(units.from_angular(*w)),
                num(t.to_degrees()),
                c.name().into(),
                num(*v),
            ]
        }),
    )
}

/// Bands: one row per mode with `Re kz d / π`, `Im kz d`.
pub fn band_csv(points: &[BandPoint], units: Units) -> Result<String> {
    let mut rows = Vec::new();
    for p in points {
        let mut modes: Vec<(f64, f64, bool)> =
            p.kz.iter()
                .zip(&p.propagating)
                .map(|(k, pr)| (k.re * p.period / std::f64::consts::PI, k.im * p.period, *pr))
                .collect();
        modes.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.total_cmp(&b.0)));
        for (m, (re, im, pr)) in modes.into_iter().enumerate() {
            rows.push(vec![
                num(units.from_angular(p.omega)),
                m.to_string(),
                num(re),
                num(im),
                (if pr { "1" } else { "0" }).to_string(),
            ]);
        }
    }
    csv_table(&[units.header(), "mode", "Re kz*d/pi", "Im kz*d", "propagating"], rows)
}

pub fn mie_csv(rows: &[(f64, CrossSections)], units: Units) -> Result<String> {
    csv_table(
        &[units.header(), "Q_ext", "Q_sca", "Q_abs"],
        rows.iter().map(|(w, cs)| {
            let mut r = vec![num(units.from_angular(*w))];
            match cs {
                CrossSections::Defined(e) => r.extend([num(e.ext), num(e.sca), num(e.abs)]),
                CrossSections::NotApplicable => r.extend(["n/a".to_string(), "n/a".into(), "n/a".into()]),
            }
            r
        }),
    )
}

/// Sequential colour map from dark blue through green to yellow.
fn colour(v: f64) -> String {
    const STOPS: [(f64, [f64; 3]); 5] = [
        (0.0, [68.0, 1.0, 84.0]),
        (0.25, [59.0, 82.0, 139.0]),
        (0.5, [33.0, 145.0, 140.0]),
        (0.75, [94.0, 201.0, 98.0]),
        (1.0, [253.0, 231.0, 37.0]),
    ];
    let v = v.clamp(0.0, 1.0);
    let i = STOPS.iter().rposition(|(x, _)| *x <= v).unwrap().min(STOPS.len() - 2);
    let (x0, c0) = STOPS[i];
    let (x1, c1) = STOPS[i + 1];
    let t = (v - x0) / (x1 - x0);
    let c: Vec<u8> = (0..3).map(|k| (c0[k] + t * (c1[k] - c0[k])).round() as u8).collect();
    format!("#{:02x}{:02x}{:02x}", c[0], c[1], c[2])
}

fn cell_edges(v: &[f64]) -> Vec<f64> {
    if v.len() == 1 {
        return vec![v[0] - 0.5, v[0] + 0.5];
    }
    let mut e = vec![v[0] - 0.5 * (v[1] - v[0])];
    e.extend(v.windows(2).map(|w| 0.5 * (w[0] + w[1])));
    e.push(v[v.len() - 1] + 0.5 * (v[v.len() - 1] - v[v.len() - 2]));
    e
}

/// Heatmap of one channel: angle across, frequency up, colour limits
/// printed on the colour bar.
pub fn map_svg(map: &EmissivityMap, channel: Channel, units: Units, title: &str) -> String {
    let (w, h) = (520.0, 420.0);
    let (x0, y0, pw, ph) = (70.0, 30.0, 340.0, 340.0);
    let th: Vec<f64> = map.theta.iter().map(|t| t.to_degrees()).collect();
    let om: Vec<f64> = map.omega.iter().map(|o| units.from_angular(*o)).collect();
    let tx = cell_edges(&th);
    let oy = cell_edges(&om);
    let (tmin, tmax) = (tx[0].min(tx[tx.len() - 1]), tx[0].max(tx[tx.len() - 1]));
    let (omin, omax) = (oy[0].min(oy[oy.len() - 1]), oy[0].max(oy[oy.len() - 1]));
    let sx = |t: f64| x0 + pw * (t - tmin) / (tmax - tmin);
    let sy = |o: f64| y0 + ph * (1.0 - (o - omin) / (omax - omin));
    let vals: Vec<f64> = (0..om.len())
        .flat_map(|i| (0..th.len()).map(move |j| (i, j)))
        .map(|(i, j)| map.e(channel, i, j))
        .collect();
    let vmin = vals.iter().cloned().fold(f64::INFINITY, f64::min);
    let vmax = vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let span = if vmax > vmin { vmax - vmin } else { 1.0 };

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<?xml version="1.0" encoding="UTF-8"?>
<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{w}" height="{h}" viewBox="0 0 {w} {h}" font-family="sans-serif" font-size="12">
<text x="{}" y="18" text-anchor="middle">{}</text>"#,
        x0 + pw / 2.0,
        escape(title)
    );
    for i in 0..om.len() {
        for j in 0..th.len() {
            let (xa, xb) = (sx(tx[j]), sx(tx[j + 1]));
            let (ya, yb) = (sy(oy[i + 1]), sy(oy[i]));
            let v = (map.e(channel, i, j) - vmin) / span;
            let _ = writeln!(
                s,
                r#"<rect x="{:.2}" y="{:.2}" width="{:.2}" height="{:.2}" fill="{}"/>"#,
                xa.min(xb),
                ya.min(yb),
                (xb - xa).abs() + 0.3,
                (yb - ya).abs() + 0.3,
                colour(v)
            );
        }
    }
    axes(
        &mut s,
        (x0, y0, pw, ph),
        (tmin, tmax),
        (omin, omax),
        "angle [deg]",
        units.header(),
    );
    // colour bar
    let (cx, cw) = (x0 + pw + 30.0, 18.0);
    for k in 0..100 {
        let v = k as f64 / 99.0;
        let _ = writeln!(
            s,
            r#"<rect x="{cx}" y="{:.2}" width="{cw}" height="{:.2}" fill="{}"/>"#,
            y0 + ph * (1.0 - (k + 1) as f64 / 100.0),
            ph / 100.0 + 0.3,
            colour(v)
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}">{}</text>
<text x="{}" y="{}">{}</text>
<text x="{}" y="{}">E ({})</text>
</svg>"#,
        cx + cw + 4.0,
        y0 + 10.0,
        num(vmax),
        cx + cw + 4.0,
        y0 + ph,
        num(vmin),
        cx,
        y0 + ph + 30.0,
        channel.name()
    );
    s
}

fn escape(t: &str) -> String {
    t.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn ticks(lo: f64, hi: f64) -> Vec<f64> {
    let raw = (hi - lo) / 5.0;
    let mag = 10f64.powf(raw.log10().floor());
    let step = [1.0, 2.0, 5.0, 10.0]
        .iter()
        .map(|m| m * mag)
        .find(|s| *s >= raw)
        .unwrap_or(10.0 * mag);
    let mut t = (lo / step).ceil() * step;
    let mut out = Vec::new();
    while t <= hi + 1e-9 * step {
        out.push(t);
        t += step;
    }
    out
}

fn axes(s: &mut String, frame: (f64, f64, f64, f64), xr: (f64, f64), yr: (f64, f64), xl: &str, yl: &str) {
    let (x0, y0, pw, ph) = frame;
    let _ = writeln!(
        s,
        r#"<rect x="{x0}" y="{y0}" width="{pw}" height="{ph}" fill="none" stroke="black"/>"#
    );
    for t in ticks(xr.0, xr.1) {
        let x = x0 + pw * (t - xr.0) / (xr.1 - xr.0);
        let _ = writeln!(
            s,
            r#"<line x1="{x:.2}" y1="{}" x2="{x:.2}" y2="{}" stroke="black"/><text x="{x:.2}" y="{}" text-anchor="middle">{}</text>"#,
            y0 + ph,
            y0 + ph + 5.0,
            y0 + ph + 18.0,
            trim(t)
        );
    }
    for t in ticks(yr.0, yr.1) {
        let y = y0 + ph * (1.0 - (t - yr.0) / (yr.1 - yr.0));
        let _ = writeln!(
            s,
            r#"<line x1="{}" y1="{y:.2}" x2="{x0}" y2="{y:.2}" stroke="black"/><text x="{}" y="{:.2}" text-anchor="end">{}</text>"#,
            x0 - 5.0,
            x0 - 8.0,
            y + 4.0,
            trim(t)
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" text-anchor="middle">{}</text>
<text transform="translate({},{}) rotate(-90)" text-anchor="middle">{}</text>"#,
        x0 + pw / 2.0,
        y0 + ph + 34.0,
        escape(xl),
        x0 - 48.0,
        y0 + ph / 2.0,
        escape(yl)
    );
}

fn trim(t: f64) -> String {
    let s = format!("{:.3}", t);
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" {
        "0".into()
    } else {
        s.into()
    }
}

/// Band structure (left: `Re kz d/π` and `-Im kz d` against frequency)
/// beside the transmittance of the finite film (right).
pub fn band_svg(points: &[BandPoint], transmission: &[(f64, f64)], units: Units, title: &str) -> String {
    let (w, h) = (640.0, 440.0);
    let frame_l = (70.0, 30.0, 320.0, 360.0);
    let frame_r = (440.0, 30.0, 160.0, 360.0);
    let om: Vec<f64> = points.iter().map(|p| units.from_angular(p.omega)).collect();
    let (omin, omax) = match (om.first(), om.last()) {
        (Some(a), Some(b)) if b > a => (*a, *b),
        (Some(a), _) => (a - 0.5, a + 0.5),
        _ => (0.0, 1.0),
    };
    const IM_RANGE: f64 = 2.0;
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<?xml version="1.0" encoding="UTF-8"?>
<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{w}" height="{h}" viewBox="0 0 {w} {h}" font-family="sans-serif" font-size="12">
<text x="{}" y="18" text-anchor="middle">{}</text>"#,
        w / 2.0,
        escape(title)
    );
    let (x0, y0, pw, ph) = frame_l;
    let sy = |o: f64| y0 + ph * (1.0 - (o - omin) / (omax - omin));
    // x from -IM_RANGE (decay, left of zero) to 1 (Re kz d/π)
    let sx = |v: f64| x0 + pw * (v + IM_RANGE) / (IM_RANGE + 1.0);
    for (p, o) in points.iter().zip(&om) {
        for (k, pr) in p.kz.iter().zip(&p.propagating) {
            let re = (k.re * p.period / std::f64::consts::PI).abs();
            let im = k.im * p.period;
            if *pr || im < 1e-9 {
                let _ = writeln!(
                    s,
                    r#"<circle cx="{:.2}" cy="{:.2}" r="1.5" fill="black"/>"#,
                    sx(re),
                    sy(*o)
                );
            } else if im <= IM_RANGE {
                let _ = writeln!(
                    s,
                    r#"<circle cx="{:.2}" cy="{:.2}" r="1.5" fill="red"/>"#,
                    sx(-im),
                    sy(*o)
                );
            }
        }
    }
    let _ = writeln!(
        s,
        r#"<line x1="{:.2}" y1="{y0}" x2="{:.2}" y2="{}" stroke="gray" stroke-dasharray="3,3"/>"#,
        sx(0.0),
        sx(0.0),
        y0 + ph
    );
    axes(
        &mut s,
        frame_l,
        (-IM_RANGE, 1.0),
        (omin, omax),
        "-Im kz*d (red) | Re kz*d/pi (black)",
        units.header(),
    );

    let (x1, y1, pw1, ph1) = frame_r;
    let tx = |t: f64| x1 + pw1 * t.clamp(0.0, 1.0);
    let ty = |o: f64| y1 + ph1 * (1.0 - (o - omin) / (omax - omin));
    let path: Vec<String> = transmission
        .iter()
        .map(|(o, t)| format!("{:.2},{:.2}", tx(*t), ty(units.from_angular(*o))))
        .collect();
    let _ = writeln!(
        s,
        r#"<polyline points="{}" fill="none" stroke="blue"/>"#,
        path.join(" ")
    );
    axes(&mut s, frame_r, (0.0, 1.0), (omin, omax), "T", "");
    s.push_str("</svg>\n");
    s
}

/// Line plot of emissivity spectra, one curve per angle.
pub fn spectrum_svg(map: &EmissivityMap, channel: Channel, units: Units, title: &str) -> String {
    let (w, h) = (560.0, 400.0);
    let frame = (70.0, 30.0, 440.0, 320.0);
    let (x0, y0, pw, ph) = frame;
    let om: Vec<f64> = map.omega.iter().map(|o| units.from_angular(*o)).collect();
    let (omin, omax) = if om.len() > 1 {
        (om[0], om[om.len() - 1])
    } else {
        (om[0] - 0.5, om[0] + 0.5)
    };
    let sx = |o: f64| x0 + pw * (o - omin) / (omax - omin);
    let sy = |e: f64| y0 + ph * (1.0 - e.clamp(0.0, 1.0));
    const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<?xml version="1.0" encoding="UTF-8"?>
<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{w}" height="{h}" viewBox="0 0 {w} {h}" font-family="sans-serif" font-size="12">
<text x="{}" y="18" text-anchor="middle">{}</text>"#,
        x0 + pw / 2.0,
        escape(title)
    );
    for j in 0..map.theta.len() {
        let c = PALETTE[j % PALETTE.len()];
        let pts: Vec<String> = (0..om.len())
            .map(|i| format!("{:.2},{:.2}", sx(om[i]), sy(map.e(channel, i, j))))
            .collect();
        let _ = writeln!(s, r#"<polyline points="{}" fill="none" stroke="{c}"/>"#, pts.join(" "));
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}" fill="{c}">{} deg</text>"#,
            x0 + pw - 60.0,
            y0 + 16.0 + 14.0 * j as f64,
            trim(map.theta[j].to_degrees())
        );
    }
    axes(
        &mut s,
        frame,
        (omin, omax),
        (0.0, 1.0),
        units.header(),
        &format!("E ({})", channel.name()),
    );
    s.push_str("</svg>\n");
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stack::{Pol, SpectrumPoint};

    fn tiny_map() -> EmissivityMap {
        let mut points = Vec::new();
        for (i, w) in [1.0, 2.0].iter().enumerate() {
            for (j, t) in [0.0, 0.5].iter().enumerate() {
                let e = 0.1 * (i + 2 * j) as f64;
                points.push([Pol::S, Pol::P].map(|pol| SpectrumPoint {
                    omega: *w,
                    theta: *t,
                    phi: 0.0,
                    pol,
                    r: 1.0 - e,
                    t: 0.0,
                    a: e,
                    e,
                }));
            }
        }
        EmissivityMap {
            omega: vec![1.0, 2.0],
            theta: vec![0.0, 0.5],
            points,
        }
    }

    #[test]
    fn numbers_have_nine_digits() {
        assert_eq!(num(1.0 / 3.0), "3.33333333e-1");
        assert_eq!(num(-0.0), "0.00000000e0");
        assert_eq!(num(2.27), "2.27000000e0");
    }

    #[test]
    fn csv_is_quoted_and_headed() {
        let t = map_csv(&tiny_map(), Units::Ordinary).unwrap();
        let first = t.lines().next().unwrap();
        assert_eq!(first, "freq [f*a/c],theta [deg],pol,R,T,A,E");
        assert_eq!(t.lines().count(), 1 + 2 * 2 * 2);
        assert!(t.contains("\r\n"));
        let q = csv_table(&["a,b", "c"], vec![vec!["x\"y".into(), "z".into()]]).unwrap();
        assert_eq!(q, "\"a,b\",c\r\n\"x\"\"y\",z\r\n");
    }

    #[test]
    fn heatmap_prints_colour_limits() {
        let svg = map_svg(&tiny_map(), Channel::Average, Units::Angular, "test");
        assert!(svg.contains(&num(0.0)) && svg.contains(&num(0.3)));
        assert!(svg.starts_with("<?xml") && svg.trim_end().ends_with("</svg>"));
        assert_eq!(svg.matches("<rect").count(), 4 + 100 + 1);
    }

    #[test]
    fn tick_marks() {
        assert_eq!(ticks(0.0, 60.0), vec![0.0, 20.0, 40.0, 60.0]);
        assert_eq!(ticks(1.4, 3.2).first(), Some(&1.5));
    }
}
