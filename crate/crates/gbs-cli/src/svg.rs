//! Minimal static SVG line charts for the CSV artifacts. No interactivity,
//! no dependencies: a fixed palette, axes with min/max labels, one polyline
//! per numeric column.

const WIDTH: f64 = 860.0;
const HEIGHT: f64 = 520.0;
const MARGIN_L: f64 = 70.0;
const MARGIN_R: f64 = 160.0;
const MARGIN_T: f64 = 40.0;
const MARGIN_B: f64 = 50.0;

const PALETTE: [&str; 8] = [
    "#d62728", "#1f77b4", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#e377c2", "#17becf",
];

/// Parse a CSV with optional `#` comment lines and a header row into
/// (x values, named numeric series). Non-numeric first columns fall back to
/// the row index.
fn parse_table(text: &str) -> Option<(Vec<String>, Vec<Vec<Option<f64>>>)> {
    let mut header: Option<Vec<String>> = None;
    let mut rows: Vec<Vec<Option<f64>>> = Vec::new();
    for line in text.lines() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if header.is_none() {
            header = Some(fields.iter().map(|s| s.to_string()).collect());
            continue;
        }
        rows.push(fields.iter().map(|f| f.trim().parse::<f64>().ok()).collect());
    }
    header.map(|h| (h, rows))
}

/// Render one chart; returns None when the table has no plottable series.
pub fn render_csv(title: &str, text: &str, log_y: bool) -> Option<String> {
    let (header, rows) = parse_table(text)?;
    if rows.is_empty() || header.len() < 2 {
        return None;
    }
    // x axis: first column when numeric on every row, otherwise the row index
    let x_numeric = rows.iter().all(|r| r.first().copied().flatten().is_some());
    let xs: Vec<f64> = if x_numeric {
        rows.iter().map(|r| r[0].unwrap()).collect()
    } else {
        (0..rows.len()).map(|i| i as f64).collect()
    };
    let mut series: Vec<(String, Vec<(f64, f64)>)> = Vec::new();
    for col in 1..header.len() {
        let mut points = Vec::new();
        for (ri, row) in rows.iter().enumerate() {
            if let Some(Some(v)) = row.get(col) {
                let y = if log_y {
                    if *v > 0.0 {
                        v.log10()
                    } else {
                        continue;
                    }
                } else {
                    *v
                };
                points.push((xs[ri], y));
            }
        }
        if points.len() >= 2 {
            series.push((header[col].clone(), points));
        }
    }
    if series.is_empty() {
        return None;
    }
    let y_label = if log_y { "log10(value)" } else { "value" };
    Some(line_chart(title, &header[0], y_label, &series))
}

pub fn line_chart(
    title: &str,
    x_label: &str,
    y_label: &str,
    series: &[(String, Vec<(f64, f64)>)],
) -> String {
    let mut x_min = f64::INFINITY;
    let mut x_max = f64::NEG_INFINITY;
    let mut y_min = f64::INFINITY;
    let mut y_max = f64::NEG_INFINITY;
    for (_, pts) in series {
        for &(x, y) in pts {
            x_min = x_min.min(x);
            x_max = x_max.max(x);
            y_min = y_min.min(y);
            y_max = y_max.max(y);
        }
    }
    if !(x_max > x_min) {
        x_max = x_min + 1.0;
    }
    if !(y_max > y_min) {
        y_max = y_min + 1.0;
    }
    let plot_w = WIDTH - MARGIN_L - MARGIN_R;
    let plot_h = HEIGHT - MARGIN_T - MARGIN_B;
    let sx = |x: f64| MARGIN_L + (x - x_min) / (x_max - x_min) * plot_w;
    let sy = |y: f64| MARGIN_T + (1.0 - (y - y_min) / (y_max - y_min)) * plot_h;

    let mut s = String::new();
    s.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{HEIGHT}\" viewBox=\"0 0 {WIDTH} {HEIGHT}\">\n"
    ));
    s.push_str("<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n");
    s.push_str(&format!(
        "<text x=\"{}\" y=\"24\" font-family=\"sans-serif\" font-size=\"16\" text-anchor=\"middle\">{}</text>\n",
        WIDTH / 2.0,
        escape(title)
    ));
    // axes
    s.push_str(&format!(
        "<line x1=\"{MARGIN_L}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"black\"/>\n",
        HEIGHT - MARGIN_B,
        WIDTH - MARGIN_R,
        HEIGHT - MARGIN_B
    ));
    s.push_str(&format!(
        "<line x1=\"{MARGIN_L}\" y1=\"{MARGIN_T}\" x2=\"{MARGIN_L}\" y2=\"{}\" stroke=\"black\"/>\n",
        HEIGHT - MARGIN_B
    ));
    // axis labels and bounds
    let fmt = |v: f64| {
        if v == 0.0 || (v.abs() >= 0.01 && v.abs() < 10_000.0) {
            format!("{v:.3}")
        } else {
            format!("{v:.2e}")
        }
    };
    s.push_str(&format!(
        "<text x=\"{MARGIN_L}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"11\">{}</text>\n",
        HEIGHT - MARGIN_B + 16.0,
        fmt(x_min)
    ));
    s.push_str(&format!(
        "<text x=\"{}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"11\" text-anchor=\"end\">{}</text>\n",
        WIDTH - MARGIN_R,
        HEIGHT - MARGIN_B + 16.0,
        fmt(x_max)
    ));
    s.push_str(&format!(
        "<text x=\"{}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"11\" text-anchor=\"end\">{}</text>\n",
        MARGIN_L - 6.0,
        HEIGHT - MARGIN_B,
        fmt(y_min)
    ));
    s.push_str(&format!(
        "<text x=\"{}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"11\" text-anchor=\"end\">{}</text>\n",
        MARGIN_L - 6.0,
        MARGIN_T + 10.0,
        fmt(y_max)
    ));
    s.push_str(&format!(
        "<text x=\"{}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"12\" text-anchor=\"middle\">{}</text>\n",
        MARGIN_L + plot_w / 2.0,
        HEIGHT - 12.0,
        escape(x_label)
    ));
    s.push_str(&format!(
        "<text x=\"16\" y=\"{}\" font-family=\"sans-serif\" font-size=\"12\" transform=\"rotate(-90 16 {})\" text-anchor=\"middle\">{}</text>\n",
        MARGIN_T + plot_h / 2.0,
        MARGIN_T + plot_h / 2.0,
        escape(y_label)
    ));
    // series + legend
    for (idx, (label, pts)) in series.iter().enumerate() {
        let color = PALETTE[idx % PALETTE.len()];
        let path: Vec<String> = pts
            .iter()
            .map(|&(x, y)| format!("{:.2},{:.2}", sx(x), sy(y)))
            .collect();
        s.push_str(&format!(
            "<polyline points=\"{}\" fill=\"none\" stroke=\"{color}\" stroke-width=\"1.5\"/>\n",
            path.join(" ")
        ));
        let ly = MARGIN_T + 16.0 * idx as f64;
        s.push_str(&format!(
            "<line x1=\"{}\" y1=\"{ly}\" x2=\"{}\" y2=\"{ly}\" stroke=\"{color}\" stroke-width=\"3\"/>\n",
            WIDTH - MARGIN_R + 10.0,
            WIDTH - MARGIN_R + 30.0
        ));
        s.push_str(&format!(
            "<text x=\"{}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"11\">{}</text>\n",
            WIDTH - MARGIN_R + 36.0,
            ly + 4.0,
            escape(label)
        ));
    }
    s.push_str("</svg>\n");
    s
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
