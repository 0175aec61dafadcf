//! Gnuplot scripts that read an emitted CSV and nothing else.

use std::fmt::Write as _;

use crate::error::CliError;

pub enum Series {
    /// One curve per distinct value of column `by`.
    Grouped {
        x: &'static str,
        y: &'static str,
        by: &'static str,
        groups: Vec<String>,
    },
    /// One curve per suffix matched inside column `by`.
    Suffixed {
        x: &'static str,
        y: &'static str,
        by: &'static str,
        suffixes: Vec<String>,
    },
}

pub struct Plot {
    /// File stem of the script and of the image it renders.
    pub name: String,
    pub title: String,
    pub xlabel: String,
    pub ylabel: String,
    pub log_y: bool,
    pub series: Series,
}

fn column(header: &[String], name: &str) -> Result<usize, CliError> {
    header
        .iter()
        .position(|h| h == name)
        .map(|i| i + 1)
        .ok_or_else(|| CliError::Config(format!("plot column '{name}' is not in the CSV header")))
}

fn quoted(s: &str) -> String {
    format!("\"{}\"", s.replace('\\', "\\\\").replace('"', "\\\""))
}

impl Plot {
    /// Renders the script for `csv_file`, whose first line is `header`.
    pub fn render(&self, csv_file: &str, header: &[String]) -> Result<String, CliError> {
        let mut s = String::new();
        writeln!(s, "# Renders {}.png from {csv_file}.", self.name).unwrap();
        writeln!(s, "set datafile separator \",\"").unwrap();
        writeln!(s, "set terminal pngcairo size 900,600").unwrap();
        writeln!(s, "set output {}", quoted(&format!("{}.png", self.name))).unwrap();
        writeln!(s, "set title {}", quoted(&self.title)).unwrap();
        writeln!(s, "set xlabel {}", quoted(&self.xlabel)).unwrap();
        writeln!(s, "set ylabel {}", quoted(&self.ylabel)).unwrap();
        writeln!(s, "set key outside right").unwrap();
        writeln!(s, "set grid").unwrap();
        if self.log_y {
            writeln!(s, "set logscale y").unwrap();
        }

        let (x, y, by, labels, matcher): (_, _, _, &Vec<String>, fn(usize, &str) -> String) =
            match &self.series {
                Series::Grouped { x, y, by, groups } => (x, y, by, groups, |c, g| {
                    format!("strcol({c}) eq {}", quoted(g))
                }),
                Series::Suffixed { x, y, by, suffixes } => (x, y, by, suffixes, |c, g| {
                    format!("strstrt(strcol({c}), {}) > 0", quoted(g))
                }),
            };
        let (xc, yc, bc) = (column(header, x)?, column(header, y)?, column(header, by)?);
        let positive = if self.log_y {
            format!(" && ${yc} > 0")
        } else {
            String::new()
        };
        let lines: Vec<String> = labels
            .iter()
            .map(|g| {
                format!(
                    "  {} every ::1 using {xc}:({}{positive} ? ${yc} : 1/0) with linespoints title {}",
                    quoted(csv_file),
                    matcher(bc, g),
                    quoted(g)
                )
            })
            .collect();
        writeln!(s, "plot \\\n{}", lines.join(", \\\n")).unwrap();
        Ok(s)
    }
}
