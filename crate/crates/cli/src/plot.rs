//! Gnuplot script generation. Scripts only reference the bundle's CSV
//! files by name; no data is copied into them.

use std::fmt::Write as _;

use crate::bundle::ResultBundle;
use crate::error::{CliError, CliResult};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Style {
    Lines,
    Points,
    LinesPoints,
    /// `x:y:z` colour map.
    Image,
}

impl Style {
    fn keyword(self) -> &'static str {
        match self {
            Self::Lines => "lines",
            Self::Points => "points pt 7 ps 0.6",
            Self::LinesPoints => "linespoints pt 7 ps 0.6",
            Self::Image => "image",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PlotSpec {
    pub title: String,
    pub x: String,
    pub ys: Vec<String>,
    /// Colour column for [`Style::Image`].
    pub z: Option<String>,
    pub style: Style,
    pub logx: bool,
    pub logy: bool,
    /// Plot `log10` of the colour column.
    pub logz: bool,
}

impl PlotSpec {
    pub fn lines(title: &str, x: &str, ys: &[&str]) -> Self {
        Self {
            title: title.into(),
            x: x.into(),
            ys: ys.iter().map(|s| s.to_string()).collect(),
            z: None,
            style: Style::Lines,
            logx: false,
            logy: false,
            logz: false,
        }
    }

    pub fn points(title: &str, x: &str, y: &str) -> Self {
        Self { style: Style::Points, ..Self::lines(title, x, &[y]) }
    }

    pub fn map(title: &str, x: &str, y: &str, z: &str) -> Self {
        Self { z: Some(z.into()), style: Style::Image, ..Self::lines(title, x, &[y]) }
    }

    pub fn style(mut self, style: Style) -> Self {
        self.style = style;
        self
    }

    pub fn log_x(mut self) -> Self {
        self.logx = true;
        self
    }

    pub fn log_y(mut self) -> Self {
        self.logy = true;
        self
    }

    pub fn log_z(mut self) -> Self {
        self.logz = true;
        self
    }
}

fn quote(s: &str) -> String {
    format!("\"{}\"", s.replace('\\', "\\\\").replace('"', "\\\""))
}

/// Script that renders one PNG per plottable table.
pub fn emit_plot_script(bundle: &ResultBundle) -> CliResult<String> {
    let plotted: Vec<_> = bundle.outcome.tables.iter().filter_map(|t| t.plot.as_ref().map(|p| (t, p))).collect();
    if plotted.is_empty() {
        return Err(CliError::UnsupportedTable);
    }
    let mut s = String::new();
    let _ = writeln!(s, "# imstark {} plot script for '{}'.", bundle.metadata.version, bundle.metadata.experiment);
    let _ = writeln!(s, "# Run with gnuplot from the bundle directory; it reads the CSV files alongside.");
    let _ = writeln!(s, "set datafile separator \",\"");
    let _ = writeln!(s, "set datafile columnheaders");
    let _ = writeln!(s, "set terminal pngcairo size 900,640 noenhanced");
    let _ = writeln!(s, "set key outside right");
    for (table, p) in plotted {
        let file = quote(&table.file_name());
        let _ = writeln!(s);
        let _ = writeln!(s, "set output {}", quote(&format!("{}.png", table.name)));
        let _ = writeln!(s, "set title {}", quote(&p.title));
        let _ = writeln!(s, "set xlabel {}", quote(&p.x));
        let _ = writeln!(s, "set ylabel {}", quote(&p.ys.join(", ")));
        let _ = writeln!(s, "unset logscale");
        if p.logx {
            let _ = writeln!(s, "set logscale x");
        }
        if p.logy {
            let _ = writeln!(s, "set logscale y");
        }
        if let Some(z) = &p.z {
            let colour = if p.logz {
                format!("(log10(column({}) + 1e-300))", quote(z))
            } else {
                format!("(column({}))", quote(z))
            };
            let _ = writeln!(s, "set cblabel {}", quote(&if p.logz { format!("log10 {z}") } else { z.clone() }));
            let _ = writeln!(
                s,
                "plot {file} using (column({})):(column({})):{colour} with {} notitle",
                quote(&p.x),
                quote(&p.ys[0]),
                p.style.keyword()
            );
        } else {
            let series: Vec<String> = p
                .ys
                .iter()
                .enumerate()
                .map(|(k, y)| {
                    let src = if k == 0 { file.clone() } else { "\"\"".to_string() };
                    format!("{src} using (column({})):(column({})) with {} title {}", quote(&p.x), quote(y), p.style.keyword(), quote(y))
                })
                .collect();
            let _ = writeln!(s, "plot {}", series.join(", \\\n     "));
        }
    }
    let _ = writeln!(s, "\nunset output");
    Ok(s)
}
