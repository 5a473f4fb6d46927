//! Reliability-diagram export: a structured JSON document per diagram
//! plus a dependency-free SVG rendering of paired accuracy/confidence
//! bars with the diagonal reference and per-bin weights.

use calim_core::{ece, mce, ReliabilityTable, TableMode};
use serde::Serialize;

/// Serialized form of one reliability table.
#[derive(Debug, Clone, Serialize)]
pub struct DiagramFile {
    pub mode: String,
    /// 1-based class index, present only for classwise diagrams.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub class: Option<usize>,
    pub m: usize,
    pub scheme: String,
    pub bins: Vec<DiagramBin>,
    pub n: usize,
    pub ece: f64,
    pub mce: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct DiagramBin {
    pub lower: f64,
    pub upper: f64,
    pub count: usize,
    pub weight: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub accuracy: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub confidence: Option<f64>,
}

impl DiagramFile {
    pub fn from_table(table: &ReliabilityTable) -> Self {
        let (mode, class) = match table.mode {
            TableMode::TopLabel => ("top-label".to_string(), None),
            TableMode::Classwise(j) => ("classwise".to_string(), Some(j + 1)),
        };
        let bins = table
            .bins
            .iter()
            .enumerate()
            .map(|(m, b)| {
                let (lower, upper) = table.edges.interval(m);
                DiagramBin {
                    lower,
                    upper,
                    count: b.count,
                    weight: b.count as f64 / table.n as f64,
                    accuracy: b.accuracy,
                    confidence: b.confidence,
                }
            })
            .collect();
        DiagramFile {
            mode,
            class,
            m: table.edges.bin_count(),
            scheme: table.edges.scheme().to_string(),
            bins,
            n: table.n,
            ece: ece(table),
            mce: mce(table).unwrap_or(0.0),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("diagram serialization cannot fail")
    }
}

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 540.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 30.0;
const TOP: f64 = 50.0;
const BOTTOM: f64 = 70.0;

struct Plot {
    svg: String,
}

impl Plot {
    fn x(&self, v: f64) -> f64 {
        LEFT + v * (WIDTH - LEFT - RIGHT)
    }

    fn y(&self, v: f64) -> f64 {
        HEIGHT - BOTTOM - v * (HEIGHT - TOP - BOTTOM)
    }

    fn rect(&mut self, x0: f64, x1: f64, v: f64, fill: &str, opacity: f64) {
        let (x, w) = (self.x(x0), self.x(x1) - self.x(x0));
        let (y, h) = (self.y(v), self.y(0.0) - self.y(v));
        self.svg.push_str(&format!(
            "  <rect x=\"{x:.2}\" y=\"{y:.2}\" width=\"{w:.2}\" height=\"{h:.2}\" \
             fill=\"{fill}\" fill-opacity=\"{opacity}\" stroke=\"none\"/>\n"
        ));
    }

    fn line(&mut self, x0: f64, y0: f64, x1: f64, y1: f64, stroke: &str, dash: &str) {
        let dash_attr = if dash.is_empty() {
            String::new()
        } else {
            format!(" stroke-dasharray=\"{dash}\"")
        };
        self.svg.push_str(&format!(
            "  <line x1=\"{:.2}\" y1=\"{:.2}\" x2=\"{:.2}\" y2=\"{:.2}\" stroke=\"{stroke}\"{dash_attr}/>\n",
            self.x(x0), self.y(y0), self.x(x1), self.y(y1)
        ));
    }

    fn text(&mut self, px: f64, py: f64, anchor: &str, size: u32, content: &str) {
        self.svg.push_str(&format!(
            "  <text x=\"{px:.2}\" y=\"{py:.2}\" text-anchor=\"{anchor}\" \
             font-family=\"sans-serif\" font-size=\"{size}\">{content}</text>\n"
        ));
    }
}

/// Renders paired accuracy/confidence bars per bin, the diagonal
/// reference, and per-bin weight bars.
pub fn render_svg(diagram: &DiagramFile) -> String {
    let mut p = Plot {
        svg: format!(
            "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{HEIGHT}\" \
             viewBox=\"0 0 {WIDTH} {HEIGHT}\">\n  <rect width=\"{WIDTH}\" height=\"{HEIGHT}\" fill=\"white\"/>\n"
        ),
    };

    // Bars: accuracy on the left half of the bin, confidence on the
    // right half, weight as a narrow center bar.
    for bin in &diagram.bins {
        let (lo, hi) = (bin.lower, bin.upper);
        let mid = (lo + hi) / 2.0;
        let inset = (hi - lo) * 0.06;
        if let (Some(acc), Some(conf)) = (bin.accuracy, bin.confidence) {
            p.rect(lo + inset, mid, acc, "#4878a8", 0.9);
            p.rect(mid, hi - inset, conf, "#c44e52", 0.9);
        }
        if bin.count > 0 {
            let w = (hi - lo) * 0.12;
            p.rect(mid - w / 2.0, mid + w / 2.0, bin.weight, "#444444", 0.95);
        }
    }

    // Diagonal reference and frame.
    p.line(0.0, 0.0, 1.0, 1.0, "#888888", "6,4");
    p.line(0.0, 0.0, 1.0, 0.0, "black", "");
    p.line(0.0, 0.0, 0.0, 1.0, "black", "");
    p.line(0.0, 1.0, 1.0, 1.0, "#dddddd", "");
    p.line(1.0, 0.0, 1.0, 1.0, "#dddddd", "");

    // Ticks every 0.2 on both axes.
    for step in 0..=5 {
        let v = step as f64 / 5.0;
        let label = format!("{v:.1}");
        let (tx, ty) = (p.x(v), p.y(0.0));
        p.svg.push_str(&format!(
            "  <line x1=\"{tx:.2}\" y1=\"{ty:.2}\" x2=\"{tx:.2}\" y2=\"{:.2}\" stroke=\"black\"/>\n",
            ty + 5.0
        ));
        p.text(tx, ty + 20.0, "middle", 12, &label);
        let (lx, ly) = (p.x(0.0), p.y(v));
        p.svg.push_str(&format!(
            "  <line x1=\"{lx:.2}\" y1=\"{ly:.2}\" x2=\"{:.2}\" y2=\"{ly:.2}\" stroke=\"black\"/>\n",
            lx - 5.0
        ));
        p.text(lx - 9.0, ly + 4.0, "end", 12, &label);
    }

    // Bin-edge ticks along the x axis.
    for bin in &diagram.bins {
        let tx = p.x(bin.lower);
        let ty = p.y(0.0);
        p.svg.push_str(&format!(
            "  <line x1=\"{tx:.2}\" y1=\"{ty:.2}\" x2=\"{tx:.2}\" y2=\"{:.2}\" stroke=\"#aaaaaa\"/>\n",
            ty + 3.0
        ));
    }

    let title = match diagram.class {
        Some(j) => format!("Reliability diagram (classwise, class {j})"),
        None => "Reliability diagram (top-label)".to_string(),
    };
    p.text(WIDTH / 2.0, 26.0, "middle", 16, &title);
    p.text(
        WIDTH / 2.0,
        HEIGHT - 12.0,
        "middle",
        13,
        &format!(
            "n = {}, M = {} ({}), ECE = {:.2}%, MCE = {:.2}%",
            diagram.n,
            diagram.m,
            diagram.scheme,
            100.0 * diagram.ece,
            100.0 * diagram.mce
        ),
    );
    p.text(WIDTH / 2.0, p.y(0.0) + 40.0, "middle", 12, "confidence");
    p.svg.push_str(&format!(
        "  <text x=\"18\" y=\"{:.2}\" text-anchor=\"middle\" font-family=\"sans-serif\" \
         font-size=\"12\" transform=\"rotate(-90 18 {:.2})\">accuracy / frequency</text>\n",
        p.y(0.5),
        p.y(0.5)
    ));

    // Legend.
    let (lx, ly) = (LEFT + 12.0, TOP + 8.0);
    for (i, (color, label)) in [
        ("#4878a8", "accuracy"),
        ("#c44e52", "confidence"),
        ("#444444", "bin weight"),
    ]
    .iter()
    .enumerate()
    {
        let y = ly + 18.0 * i as f64;
        p.svg.push_str(&format!(
            "  <rect x=\"{lx}\" y=\"{y:.2}\" width=\"12\" height=\"12\" fill=\"{color}\"/>\n"
        ));
        p.text(lx + 18.0, y + 10.0, "start", 12, label);
    }

    p.svg.push_str("</svg>\n");
    p.svg
}
