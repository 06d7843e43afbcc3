//! Minimal SVG bar charts with interval whiskers.

use std::fmt::Write as _;

pub struct Bar {
    pub label: String,
    pub value: f64,
    /// Optional whisker `(lo, hi)`.
    pub interval: Option<(f64, f64)>,
}

fn esc(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Vertical bars over a shared axis from `min(0, lowest)` to the highest whisker.
pub fn bar_chart(title: &str, y_label: &str, bars: &[Bar]) -> String {
    let (w_bar, gap, left, top, plot_h, bottom) = (36.0, 18.0, 60.0, 40.0, 260.0, 150.0);
    let width = left + bars.len().max(1) as f64 * (w_bar + gap) + gap;
    let height = top + plot_h + bottom;

    let hi = bars
        .iter()
        .map(|b| b.interval.map_or(b.value, |(_, h)| h.max(b.value)))
        .fold(0.0f64, f64::max);
    let lo = bars
        .iter()
        .map(|b| b.interval.map_or(b.value, |(l, _)| l.min(b.value)))
        .fold(0.0f64, f64::min);
    let span = if hi - lo > 0.0 { hi - lo } else { 1.0 };
    let y = |v: f64| top + plot_h * (hi - v) / span;

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width:.0}" height="{height:.0}" font-family="sans-serif" font-size="11">"#
    );
    let _ = writeln!(s, r#"<text x="{:.1}" y="20" font-size="14">{}</text>"#, left, esc(title));
    let _ = writeln!(
        s,
        r#"<text x="14" y="{:.1}" transform="rotate(-90 14 {:.1})">{}</text>"#,
        top + plot_h / 2.0,
        top + plot_h / 2.0,
        esc(y_label)
    );
    let _ = writeln!(
        s,
        r#"<line x1="{left}" y1="{top}" x2="{left}" y2="{:.1}" stroke="black"/>"#,
        top + plot_h
    );
    for tick in 0..=4 {
        let v = lo + span * tick as f64 / 4.0;
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="end">{v:.3}</text>"#,
            left - 4.0,
            y(v) + 4.0
        );
    }
    let _ = writeln!(
        s,
        r##"<line x1="{left}" y1="{:.1}" x2="{width:.1}" y2="{:.1}" stroke="#888"/>"##,
        y(0.0),
        y(0.0)
    );
    for (i, b) in bars.iter().enumerate() {
        let x = left + gap + i as f64 * (w_bar + gap);
        let (y0, y1) = (y(b.value.max(0.0)), y(b.value.min(0.0)));
        let _ = writeln!(
            s,
            r##"<rect x="{x:.1}" y="{y0:.1}" width="{w_bar}" height="{:.1}" fill="#4c78a8"/>"##,
            (y1 - y0).max(0.5)
        );
        if let Some((l, h)) = b.interval {
            let cx = x + w_bar / 2.0;
            let _ = writeln!(
                s,
                r#"<line x1="{cx:.1}" y1="{:.1}" x2="{cx:.1}" y2="{:.1}" stroke="black"/>"#,
                y(l),
                y(h)
            );
        }
        let lx = x + w_bar / 2.0;
        let ly = top + plot_h + 10.0;
        let _ = writeln!(
            s,
            r#"<text x="{lx:.1}" y="{ly:.1}" transform="rotate(60 {lx:.1} {ly:.1})">{}</text>"#,
            esc(&b.label)
        );
    }
    s.push_str("</svg>\n");
    s
}
