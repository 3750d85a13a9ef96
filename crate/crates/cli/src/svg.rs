//! Minimal native SVG line plots: series with error bars plus overlay
//! curves, optional log2 x axis. No external renderer; output is plain
//! deterministic markup.

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 480.0;
const ML: f64 = 72.0;
const MR: f64 = 24.0;
const MT: f64 = 42.0;
const MB: f64 = 58.0;

const PALETTE: [&str; 6] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b",
];

pub fn palette(i: usize) -> &'static str {
    PALETTE[i % PALETTE.len()]
}

/// Scatter-with-line series; `y_err` entries of zero draw no bar.
pub struct Series {
    pub label: String,
    pub color_index: usize,
    pub points: Vec<(f64, f64)>,
    pub y_err: Vec<f64>,
}

/// Overlay curve, typically an analytic bound; drawn without markers.
pub struct Curve {
    pub label: String,
    pub color_index: usize,
    pub dashed: bool,
    pub points: Vec<(f64, f64)>,
}

pub struct Plot {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub log2_x: bool,
    pub series: Vec<Series>,
    pub curves: Vec<Curve>,
}

fn esc(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn fmt_tick(v: f64) -> String {
    if v == 0.0 {
        return "0".to_string();
    }
    let a = v.abs();
    if (v - v.round()).abs() < 1e-9 && a < 1e6 {
        format!("{}", v.round() as i64)
    } else if (1e-3..1e4).contains(&a) {
        let s = format!("{v:.4}");
        let s = s.trim_end_matches('0').trim_end_matches('.').to_string();
        s
    } else {
        format!("{v:.2e}")
    }
}

struct Frame {
    xmin: f64,
    xmax: f64,
    ymin: f64,
    ymax: f64,
}

impl Frame {
    fn px(&self, tx: f64) -> f64 {
        ML + (tx - self.xmin) / (self.xmax - self.xmin) * (WIDTH - ML - MR)
    }
    fn py(&self, y: f64) -> f64 {
        MT + (1.0 - (y - self.ymin) / (self.ymax - self.ymin)) * (HEIGHT - MT - MB)
    }
}

impl Plot {
    fn tx(&self, x: f64) -> f64 {
        if self.log2_x {
            x.log2()
        } else {
            x
        }
    }

    fn frame(&self) -> Frame {
        let mut xs: Vec<f64> = Vec::new();
        let mut ys: Vec<f64> = Vec::new();
        for s in &self.series {
            for (i, &(x, y)) in s.points.iter().enumerate() {
                xs.push(self.tx(x));
                let e = s.y_err.get(i).copied().unwrap_or(0.0);
                ys.push(y - e);
                ys.push(y + e);
            }
        }
        for c in &self.curves {
            for &(x, y) in &c.points {
                xs.push(self.tx(x));
                ys.push(y);
            }
        }
        let (mut xmin, mut xmax) = bounds(&xs);
        let (mut ymin, mut ymax) = bounds(&ys);
        if xmax - xmin < 1e-12 {
            xmin -= 0.5;
            xmax += 0.5;
        } else {
            let pad = 0.04 * (xmax - xmin);
            xmin -= pad;
            xmax += pad;
        }
        if ymax - ymin < 1e-12 {
            ymin -= 0.5;
            ymax += 0.5;
        } else {
            let pad = 0.06 * (ymax - ymin);
            ymin -= pad;
            ymax += pad;
        }
        Frame { xmin, xmax, ymin, ymax }
    }

    pub fn to_svg(&self) -> String {
        let f = self.frame();
        let mut out = String::new();
        out.push_str(&format!(
            "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{HEIGHT}\" \
             viewBox=\"0 0 {WIDTH} {HEIGHT}\" font-family=\"sans-serif\">\n"
        ));
        out.push_str(&format!(
            "<rect x=\"0\" y=\"0\" width=\"{WIDTH}\" height=\"{HEIGHT}\" fill=\"white\"/>\n"
        ));
        out.push_str(&format!(
            "<rect x=\"{ML}\" y=\"{MT}\" width=\"{:.1}\" height=\"{:.1}\" fill=\"none\" \
             stroke=\"#333\" stroke-width=\"1\"/>\n",
            WIDTH - ML - MR,
            HEIGHT - MT - MB
        ));
        out.push_str(&format!(
            "<text x=\"{:.1}\" y=\"24\" text-anchor=\"middle\" font-size=\"15\">{}</text>\n",
            (ML + WIDTH - MR) / 2.0,
            esc(&self.title)
        ));

        self.axes(&f, &mut out);
        for c in &self.curves {
            self.draw_curve(&f, c, &mut out);
        }
        for s in &self.series {
            self.draw_series(&f, s, &mut out);
        }
        self.legend(&mut out);

        out.push_str("</svg>\n");
        out
    }

    fn axes(&self, f: &Frame, out: &mut String) {
        let bottom = HEIGHT - MB;
        let x_ticks: Vec<(f64, String)> = if self.log2_x {
            let mut raw: Vec<f64> = self
                .series
                .iter()
                .flat_map(|s| s.points.iter().map(|p| p.0))
                .chain(self.curves.iter().flat_map(|c| c.points.iter().map(|p| p.0)))
                .collect();
            raw.sort_by(f64::total_cmp);
            raw.dedup_by(|a, b| (*a - *b).abs() < 1e-9);
            raw.into_iter().map(|x| (self.tx(x), fmt_tick(x))).collect()
        } else {
            (0..=4)
                .map(|i| {
                    let tx = f.xmin + (f.xmax - f.xmin) * i as f64 / 4.0;
                    (tx, fmt_tick(tx))
                })
                .collect()
        };
        for (tx, label) in &x_ticks {
            let px = f.px(*tx);
            out.push_str(&format!(
                "<line x1=\"{px:.1}\" y1=\"{bottom:.1}\" x2=\"{px:.1}\" y2=\"{:.1}\" \
                 stroke=\"#333\" stroke-width=\"1\"/>\n",
                bottom + 5.0
            ));
            out.push_str(&format!(
                "<text x=\"{px:.1}\" y=\"{:.1}\" text-anchor=\"middle\" font-size=\"12\">{}</text>\n",
                bottom + 19.0,
                esc(label)
            ));
        }
        for i in 0..=4 {
            let y = f.ymin + (f.ymax - f.ymin) * i as f64 / 4.0;
            let py = f.py(y);
            out.push_str(&format!(
                "<line x1=\"{:.1}\" y1=\"{py:.1}\" x2=\"{ML}\" y2=\"{py:.1}\" \
                 stroke=\"#333\" stroke-width=\"1\"/>\n",
                ML - 5.0
            ));
            out.push_str(&format!(
                "<text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"end\" font-size=\"12\">{}</text>\n",
                ML - 8.0,
                py + 4.0,
                esc(&fmt_tick(y))
            ));
        }
        out.push_str(&format!(
            "<text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"middle\" font-size=\"13\">{}</text>\n",
            (ML + WIDTH - MR) / 2.0,
            HEIGHT - 14.0,
            esc(&self.x_label)
        ));
        out.push_str(&format!(
            "<text x=\"18\" y=\"{:.1}\" text-anchor=\"middle\" font-size=\"13\" \
             transform=\"rotate(-90 18 {:.1})\">{}</text>\n",
            (MT + HEIGHT - MB) / 2.0,
            (MT + HEIGHT - MB) / 2.0,
            esc(&self.y_label)
        ));
    }

    fn draw_series(&self, f: &Frame, s: &Series, out: &mut String) {
        let color = palette(s.color_index);
        let pts: Vec<String> = s
            .points
            .iter()
            .map(|&(x, y)| format!("{:.2},{:.2}", f.px(self.tx(x)), f.py(y)))
            .collect();
        if pts.len() > 1 {
            out.push_str(&format!(
                "<polyline points=\"{}\" fill=\"none\" stroke=\"{color}\" stroke-width=\"1.5\"/>\n",
                pts.join(" ")
            ));
        }
        for (i, &(x, y)) in s.points.iter().enumerate() {
            let px = f.px(self.tx(x));
            let py = f.py(y);
            let e = s.y_err.get(i).copied().unwrap_or(0.0);
            if e > 0.0 {
                let lo = f.py(y - e);
                let hi = f.py(y + e);
                out.push_str(&format!(
                    "<line x1=\"{px:.2}\" y1=\"{lo:.2}\" x2=\"{px:.2}\" y2=\"{hi:.2}\" \
                     stroke=\"{color}\" stroke-width=\"1\"/>\n"
                ));
                for cap in [lo, hi] {
                    out.push_str(&format!(
                        "<line x1=\"{:.2}\" y1=\"{cap:.2}\" x2=\"{:.2}\" y2=\"{cap:.2}\" \
                         stroke=\"{color}\" stroke-width=\"1\"/>\n",
                        px - 3.0,
                        px + 3.0
                    ));
                }
            }
            out.push_str(&format!(
                "<circle cx=\"{px:.2}\" cy=\"{py:.2}\" r=\"3\" fill=\"{color}\"/>\n"
            ));
        }
    }

    fn draw_curve(&self, f: &Frame, c: &Curve, out: &mut String) {
        let color = palette(c.color_index);
        let pts: Vec<String> = c
            .points
            .iter()
            .map(|&(x, y)| format!("{:.2},{:.2}", f.px(self.tx(x)), f.py(y)))
            .collect();
        let dash = if c.dashed { " stroke-dasharray=\"6 4\"" } else { "" };
        out.push_str(&format!(
            "<polyline points=\"{}\" fill=\"none\" stroke=\"{color}\" stroke-width=\"1.2\"{dash}/>\n",
            pts.join(" ")
        ));
    }

    fn legend(&self, out: &mut String) {
        let entries: Vec<(String, usize, bool)> = self
            .series
            .iter()
            .map(|s| (s.label.clone(), s.color_index, false))
            .chain(self.curves.iter().map(|c| (c.label.clone(), c.color_index, c.dashed)))
            .collect();
        if entries.is_empty() {
            return;
        }
        let x0 = WIDTH - MR - 190.0;
        let y0 = MT + 10.0;
        let h = 17.0 * entries.len() as f64 + 10.0;
        out.push_str(&format!(
            "<rect x=\"{x0:.1}\" y=\"{y0:.1}\" width=\"182\" height=\"{h:.1}\" fill=\"white\" \
             fill-opacity=\"0.85\" stroke=\"#999\" stroke-width=\"0.5\"/>\n"
        ));
        for (i, (label, ci, dashed)) in entries.iter().enumerate() {
            let y = y0 + 14.0 + 17.0 * i as f64;
            let color = palette(*ci);
            let dash = if *dashed { " stroke-dasharray=\"6 4\"" } else { "" };
            out.push_str(&format!(
                "<line x1=\"{:.1}\" y1=\"{y:.1}\" x2=\"{:.1}\" y2=\"{y:.1}\" stroke=\"{color}\" \
                 stroke-width=\"1.5\"{dash}/>\n",
                x0 + 8.0,
                x0 + 34.0
            ));
            out.push_str(&format!(
                "<text x=\"{:.1}\" y=\"{:.1}\" font-size=\"12\">{}</text>\n",
                x0 + 40.0,
                y + 4.0,
                esc(label)
            ));
        }
    }
}

fn bounds(v: &[f64]) -> (f64, f64) {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for &x in v {
        if x.is_finite() {
            lo = lo.min(x);
            hi = hi.max(x);
        }
    }
    if !lo.is_finite() {
        (0.0, 1.0)
    } else {
        (lo, hi)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn renders_wellformed_markup() {
        let plot = Plot {
            title: "demo & test".to_string(),
            x_label: "x".to_string(),
            y_label: "y".to_string(),
            log2_x: true,
            series: vec![Series {
                label: "k=1".to_string(),
                color_index: 0,
                points: vec![(2.0, 0.5), (4.0, 0.4), (8.0, 0.3)],
                y_err: vec![0.05, 0.04, 0.03],
            }],
            curves: vec![Curve {
                label: "bound".to_string(),
                color_index: 0,
                dashed: true,
                points: vec![(2.0, 0.6), (4.0, 0.5), (8.0, 0.4)],
            }],
        };
        let svg = plot.to_svg();
        assert!(svg.starts_with("<svg"));
        assert!(svg.trim_end().ends_with("</svg>"));
        assert!(svg.contains("demo &amp; test"));
        assert!(svg.contains("stroke-dasharray"));
        assert_eq!(svg.matches("<circle").count(), 3);
        assert_eq!(svg, plot.to_svg());
    }
}
