//! Line chart of the cumulative decomposition.

use std::fmt::Write as _;
use std::path::Path;

use crate::decomposition::{check_row_sum, CumulativeFrame, CUMULATIVE_IDENTITY_TOL};
use crate::error::{Error, Result};

const WIDTH: f64 = 1000.0;
const HEIGHT: f64 = 560.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 190.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 50.0;

/// (element id suffix, legend label, stroke colour)
const SERIES: [(&str, &str, &str); 6] = [
    ("di5y_change_cum", "DI5Y change", "#000000"),
    ("const_cum", "Constant", "#7f7f7f"),
    ("macro_cum", "MacroBR", "#1f77b4"),
    ("riscobr_cum", "RiscoBR", "#d62728"),
    ("global_cum", "Global", "#2ca02c"),
    ("residual_cum", "Residual", "#ff7f0e"),
];

fn columns(c: &CumulativeFrame) -> [&[f64]; 6] {
    [
        &c.di5y_change_cum,
        &c.const_cum,
        &c.macro_cum,
        &c.riscobr_cum,
        &c.global_cum,
        &c.residual_cum,
    ]
}

/// Round step (1, 2 or 5 times a power of ten) giving about `target` ticks.
fn nice_step(span: f64, target: f64) -> f64 {
    let raw = span / target;
    let mag = 10f64.powf(raw.log10().floor());
    let norm = raw / mag;
    let m = if norm <= 1.0 {
        1.0
    } else if norm <= 2.0 {
        2.0
    } else if norm <= 5.0 {
        5.0
    } else {
        10.0
    };
    m * mag
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Renders the chart as a standalone SVG document.
pub fn render_svg(c: &CumulativeFrame, title: &str) -> Result<String> {
    if c.len() < 2 {
        return Err(Error::InsufficientData {
            what: "decomposition chart".into(),
            needed: 2,
            got: c.len(),
        });
    }
    let last = c.last().expect("non-empty");
    check_row_sum(last.di5y_change_cum, &last.components(), CUMULATIVE_IDENTITY_TOL)?;

    let cols = columns(c);
    let (mut lo, mut hi) = (0.0f64, 0.0f64);
    for v in cols.iter().flat_map(|c| c.iter()) {
        lo = lo.min(*v);
        hi = hi.max(*v);
    }
    if hi - lo < 1e-9 {
        hi = lo + 1.0;
    }
    let step = nice_step(hi - lo, 8.0);
    let lo = (lo / step).floor() * step;
    let hi = (hi / step).ceil() * step;

    let t0 = c.dates[0].ordinal() as f64;
    let t1 = c.dates[c.len() - 1].ordinal() as f64;
    let plot_w = WIDTH - LEFT - RIGHT;
    let plot_h = HEIGHT - TOP - BOTTOM;
    let x = |t: f64| LEFT + (t - t0) / (t1 - t0) * plot_w;
    let y = |v: f64| TOP + (hi - v) / (hi - lo) * plot_h;

    let mut s = String::new();
    writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    )
    .unwrap();
    writeln!(s, r##"<rect width="100%" height="100%" fill="#ffffff"/>"##).unwrap();
    writeln!(
        s,
        r#"<text x="{:.2}" y="22" text-anchor="middle" font-size="15">{}</text>"#,
        LEFT + plot_w / 2.0,
        escape(title)
    )
    .unwrap();

    // value axis
    s.push_str("<g id=\"y-axis\" stroke=\"#dddddd\">\n");
    let mut v = lo;
    while v <= hi + step * 1e-6 {
        let yy = y(v);
        writeln!(
            s,
            r##"<line x1="{LEFT:.2}" y1="{yy:.2}" x2="{:.2}" y2="{yy:.2}"/><text x="{:.2}" y="{:.2}" text-anchor="end" stroke="none" fill="#333333">{}</text>"##,
            LEFT + plot_w,
            LEFT - 6.0,
            yy + 4.0,
            crate::ingestion::market::format_value(v, Some(if step >= 1.0 { 0 } else { 2 }))
        )
        .unwrap();
        v += step;
    }
    s.push_str("</g>\n");
    writeln!(
        s,
        r#"<text x="16" y="{:.2}" transform="rotate(-90 16 {:.2})" text-anchor="middle">bps</text>"#,
        TOP + plot_h / 2.0,
        TOP + plot_h / 2.0
    )
    .unwrap();

    // date axis: one tick per January 1st inside the range
    s.push_str("<g id=\"x-axis\" stroke=\"#333333\">\n");
    writeln!(
        s,
        r#"<line x1="{LEFT:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}"/>"#,
        TOP + plot_h,
        LEFT + plot_w,
        TOP + plot_h
    )
    .unwrap();
    let (y0, y1) = (c.dates[0].year(), c.dates[c.len() - 1].year());
    for year in y0..=y1 {
        let Some(jan1) = chrono::NaiveDate::from_ymd_opt(year, 1, 1) else {
            continue;
        };
        let t = crate::series::TradingDate::from(jan1).ordinal() as f64;
        if t < t0 || t > t1 {
            continue;
        }
        let xx = x(t);
        writeln!(
            s,
            r##"<line x1="{xx:.2}" y1="{:.2}" x2="{xx:.2}" y2="{:.2}"/><text x="{xx:.2}" y="{:.2}" text-anchor="middle" stroke="none" fill="#333333">{year}</text>"##,
            TOP + plot_h,
            TOP + plot_h + 5.0,
            TOP + plot_h + 19.0
        )
        .unwrap();
    }
    s.push_str("</g>\n");

    if lo < 0.0 && hi > 0.0 {
        writeln!(
            s,
            r##"<line id="zero" x1="{LEFT:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="#999999" stroke-dasharray="4 3"/>"##,
            y(0.0),
            LEFT + plot_w,
            y(0.0)
        )
        .unwrap();
    }

    for ((id, _, colour), values) in SERIES.iter().zip(cols) {
        let width = if *id == "di5y_change_cum" { 2.0 } else { 1.2 };
        write!(
            s,
            r#"<polyline id="series-{id}" fill="none" stroke="{colour}" stroke-width="{width}" points=""#
        )
        .unwrap();
        for (i, (d, v)) in c.dates.iter().zip(values).enumerate() {
            if i > 0 {
                s.push(' ');
            }
            write!(s, "{:.2},{:.2}", x(d.ordinal() as f64), y(*v)).unwrap();
        }
        s.push_str("\"/>\n");
    }

    s.push_str("<g id=\"legend\">\n");
    for (i, (id, label, colour)) in SERIES.iter().enumerate() {
        let ly = TOP + 10.0 + i as f64 * 20.0;
        let lx = WIDTH - RIGHT + 20.0;
        writeln!(
            s,
            r#"<line x1="{lx:.2}" y1="{ly:.2}" x2="{:.2}" y2="{ly:.2}" stroke="{colour}" stroke-width="2"/><text id="legend-{id}" x="{:.2}" y="{:.2}">{label}</text>"#,
            lx + 22.0,
            lx + 28.0,
            ly + 4.0
        )
        .unwrap();
    }
    s.push_str("</g>\n</svg>\n");
    Ok(s)
}

pub fn emit_svg(c: &CumulativeFrame, path: &Path) -> Result<()> {
    let doc = render_svg(c, "Cumulative decomposition of DI5Y changes (bps)")?;
    std::fs::write(path, doc).map_err(|e| Error::io(path, e))
}
