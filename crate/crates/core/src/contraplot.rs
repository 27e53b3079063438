//! Contra plots: per-study interval estimates of the relative difference in
//! means beside a table of study metadata, with an optional shaded region
//! marking the negligible-effect threshold.

use std::collections::{HashSet, VecDeque};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::effectsize::EffectSizeSummary;
use crate::ingest::StudySummary;

pub const MIN_ROW_HEIGHT_PX: u32 = 12;
const MIN_PLOT_WIDTH_PX: f64 = 120.0;

/// Tick positions on the untransformed (fractional) scale.
pub const AXIS_TICKS: [f64; 7] = [-0.75, -0.5, -0.25, 0.0, 1.0 / 3.0, 1.0, 3.0];

#[derive(Debug, Error, PartialEq)]
pub enum PlotError {
    #[error("relative difference {0} is below -100%")]
    Domain(f64),
    #[error("empty plot")]
    Empty,
    #[error("row {row}: summary is for study {summary_id} but the row holds study {study_id}")]
    MismatchedRow {
        row: usize,
        study_id: u32,
        summary_id: u32,
    },
    #[error("threshold must be positive, got {0}")]
    NonPositiveThreshold(f64),
    #[error("row height {0}px is below the {MIN_ROW_HEIGHT_PX}px minimum")]
    RowTooShort(u32),
    #[error("width {0}px leaves no room for the interval panel")]
    TooNarrow(u32),
}

/// Maps a relative difference onto the plot axis so that reciprocal changes
/// (e.g. −50% and +100%) sit at mirrored distances from zero.
///
/// `f(x) = x` for `x ≤ 0` and `x / (x + 1)` for `x > 0`.
pub fn axis_transform(x: f64) -> Result<f64, PlotError> {
    if x < -1.0 || x.is_nan() {
        return Err(PlotError::Domain(x));
    }
    Ok(if x <= 0.0 { x } else { x / (x + 1.0) })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MetadataColumn {
    Id,
    Study,
    Year,
    GroupX,
    GroupY,
    Units,
    Species,
    Pmid,
    Loc,
    LsPct,
    MsPct,
}

impl MetadataColumn {
    pub const DEFAULT: [MetadataColumn; 8] = [
        MetadataColumn::Id,
        MetadataColumn::Study,
        MetadataColumn::Year,
        MetadataColumn::Species,
        MetadataColumn::GroupX,
        MetadataColumn::GroupY,
        MetadataColumn::LsPct,
        MetadataColumn::MsPct,
    ];

    pub fn header(self) -> &'static str {
        match self {
            MetadataColumn::Id => "ID",
            MetadataColumn::Study => "Study",
            MetadataColumn::Year => "Year",
            MetadataColumn::GroupX => "Ctrl",
            MetadataColumn::GroupY => "Tx",
            MetadataColumn::Units => "Units",
            MetadataColumn::Species => "Sp",
            MetadataColumn::Pmid => "PMID",
            MetadataColumn::Loc => "Loc",
            MetadataColumn::LsPct => "Ls%",
            MetadataColumn::MsPct => "Ms%",
        }
    }

    /// Maximum characters shown before truncation.
    pub fn max_chars(self) -> usize {
        match self {
            MetadataColumn::Id => 4,
            MetadataColumn::Study => 10,
            MetadataColumn::Year => 4,
            MetadataColumn::GroupX | MetadataColumn::GroupY => 20,
            MetadataColumn::Units => 8,
            MetadataColumn::Species => 3,
            MetadataColumn::Pmid => 9,
            MetadataColumn::Loc => 5,
            MetadataColumn::LsPct | MetadataColumn::MsPct => 8,
        }
    }

    fn width_px(self) -> f64 {
        // 11px monospace glyphs are ~6.6px wide.
        (self.max_chars().max(self.header().chars().count()) as f64) * 6.6 + 10.0
    }

    fn right_aligned(self) -> bool {
        matches!(
            self,
            MetadataColumn::Id | MetadataColumn::LsPct | MetadataColumn::MsPct
        )
    }

    pub fn cell(self, s: &StudySummary, e: &EffectSizeSummary) -> String {
        match self {
            MetadataColumn::Id => s.id.to_string(),
            MetadataColumn::Study => s.study_label.clone(),
            MetadataColumn::Year => s.year.to_string(),
            MetadataColumn::GroupX => s.group_x_label.clone(),
            MetadataColumn::GroupY => s.group_y_label.clone(),
            MetadataColumn::Units => s.units.clone(),
            MetadataColumn::Species => s.species.clone(),
            MetadataColumn::Pmid => s.pmid.clone(),
            MetadataColumn::Loc => s.loc.clone(),
            MetadataColumn::LsPct => format!("{:.1}", e.ls_pct),
            MetadataColumn::MsPct => format!("{:.1}", e.ms_pct),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ContraPlotSpec {
    pub studies: Vec<(StudySummary, EffectSizeSummary)>,
    pub negligible_threshold: Option<f64>,
    pub meaningful_threshold: Option<f64>,
    pub metadata_columns: Vec<MetadataColumn>,
    pub width_px: u32,
    pub row_height_px: u32,
    pub title: String,
}

impl ContraPlotSpec {
    pub fn new(studies: Vec<(StudySummary, EffectSizeSummary)>) -> Self {
        ContraPlotSpec {
            studies,
            negligible_threshold: None,
            meaningful_threshold: None,
            metadata_columns: MetadataColumn::DEFAULT.to_vec(),
            width_px: 1100,
            row_height_px: 18,
            title: String::from("Relative difference in means"),
        }
    }

    pub fn validate(&self) -> Result<(), PlotError> {
        if self.studies.is_empty() {
            return Err(PlotError::Empty);
        }
        for (row, (s, e)) in self.studies.iter().enumerate() {
            if s.id != e.study_id {
                return Err(PlotError::MismatchedRow {
                    row,
                    study_id: s.id,
                    summary_id: e.study_id,
                });
            }
        }
        for t in [self.negligible_threshold, self.meaningful_threshold]
            .into_iter()
            .flatten()
        {
            if !(t > 0.0) {
                return Err(PlotError::NonPositiveThreshold(t));
            }
        }
        if self.row_height_px < MIN_ROW_HEIGHT_PX {
            return Err(PlotError::RowTooShort(self.row_height_px));
        }
        Ok(())
    }
}

/// Vertical band a study falls into.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum Band {
    Negative,
    Null,
    Positive,
}

fn band(e: &EffectSizeSummary) -> Band {
    if e.ci_hi < 0.0 {
        Band::Negative
    } else if e.ci_lo > 0.0 {
        Band::Positive
    } else {
        Band::Null
    }
}

/// Top-to-bottom display order of `summaries`, as indices into the slice.
///
/// Intervals entirely below zero come first (Ls% descending), then intervals
/// spanning zero arranged center-out by Ms% (smallest in the middle, the rest
/// alternating above then below), then intervals entirely above zero (Ls%
/// ascending). Ties go to the lower study id.
pub fn display_order(summaries: &[&EffectSizeSummary]) -> Vec<usize> {
    let mut negative = Vec::new();
    let mut null = Vec::new();
    let mut positive = Vec::new();
    for (i, e) in summaries.iter().enumerate() {
        match band(e) {
            Band::Negative => negative.push(i),
            Band::Null => null.push(i),
            Band::Positive => positive.push(i),
        }
    }
    let by = |key: fn(&EffectSizeSummary) -> f64, descending: bool| {
        move |a: &usize, b: &usize| {
            let (ea, eb) = (summaries[*a], summaries[*b]);
            let ord = key(ea).total_cmp(&key(eb));
            let ord = if descending { ord.reverse() } else { ord };
            ord.then(ea.study_id.cmp(&eb.study_id))
        }
    };
    negative.sort_by(by(|e| e.ls_pct, true));
    null.sort_by(by(|e| e.ms_pct, false));
    positive.sort_by(by(|e| e.ls_pct, false));

    let mut center: VecDeque<usize> = VecDeque::with_capacity(null.len());
    for (rank, idx) in null.into_iter().enumerate() {
        if rank % 2 == 1 {
            center.push_front(idx);
        } else {
            center.push_back(idx);
        }
    }

    negative.into_iter().chain(center).chain(positive).collect()
}

/// Reorders rows into contra-plot display order.
pub fn sort_studies(
    rows: Vec<(StudySummary, EffectSizeSummary)>,
) -> Vec<(StudySummary, EffectSizeSummary)> {
    let order = {
        let summaries: Vec<&EffectSizeSummary> = rows.iter().map(|(_, e)| e).collect();
        display_order(&summaries)
    };
    let mut slots: Vec<Option<(StudySummary, EffectSizeSummary)>> =
        rows.into_iter().map(Some).collect();
    order
        .into_iter()
        .map(|i| slots[i].take().expect("display order is a permutation"))
        .collect()
}

fn escape(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    for c in text.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&apos;"),
            c if c.is_control() => {}
            c => out.push(c),
        }
    }
    out
}

fn truncate(text: &str, max: usize) -> String {
    if text.chars().count() <= max {
        text.to_string()
    } else {
        let mut t: String = text.chars().take(max.saturating_sub(1)).collect();
        t.push('…');
        t
    }
}

fn tick_label(x: f64) -> String {
    let pct = (x * 100.0).round() as i64;
    if pct > 0 {
        format!("+{pct}%")
    } else if pct == 0 {
        "0".into()
    } else {
        format!("{pct}%")
    }
}

struct Layout {
    plot_x0: f64,
    plot_w: f64,
    plot_top: f64,
    row_h: f64,
    rows: usize,
}

impl Layout {
    /// Pixel x of a transformed coordinate in [-1, 1].
    fn x(&self, t: f64) -> f64 {
        self.plot_x0 + (t + 1.0) / 2.0 * self.plot_w
    }

    /// Pixel x of an untransformed relative difference, clamped to the axis.
    fn x_of(&self, r: f64) -> f64 {
        self.x(axis_transform(r.max(-1.0)).expect("clamped into the transform domain"))
    }

    fn row_mid(&self, row: usize) -> f64 {
        self.plot_top + (row as f64 + 0.5) * self.row_h
    }

    fn plot_bottom(&self) -> f64 {
        self.plot_top + self.rows as f64 * self.row_h
    }
}

/// Renders the plot as a self-contained SVG document. Identical specs give
/// byte-identical output.
pub fn render_contra_plot(spec: &ContraPlotSpec) -> Result<String, PlotError> {
    spec.validate()?;

    const MARGIN: f64 = 10.0;
    const TITLE_H: f64 = 28.0;
    const AXIS_H: f64 = 40.0;
    const GAP: f64 = 16.0;

    let row_h = f64::from(spec.row_height_px);
    let width = f64::from(spec.width_px);
    let table_w: f64 = spec.metadata_columns.iter().map(|c| c.width_px()).sum();
    let plot_x0 = MARGIN + table_w + GAP;
    let plot_w = width - MARGIN - 20.0 - plot_x0;
    if plot_w < MIN_PLOT_WIDTH_PX {
        return Err(PlotError::TooNarrow(spec.width_px));
    }
    let header_y = MARGIN + TITLE_H;
    let layout = Layout {
        plot_x0,
        plot_w,
        plot_top: header_y + row_h,
        row_h,
        rows: spec.studies.len(),
    };
    let height = layout.plot_bottom() + AXIS_H + MARGIN;

    let mut svg = String::new();
    // fmt::Write into a String cannot fail.
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h:.0}" viewBox="0 0 {w} {h:.0}" font-family="monospace" font-size="11">"#,
        w = spec.width_px,
        h = height
    );
    let _ = writeln!(
        svg,
        r##"<rect width="100%" height="100%" fill="#ffffff"/>"##
    );
    let _ = writeln!(
        svg,
        r#"<text class="title" x="{MARGIN}" y="{:.2}" font-size="14" font-weight="bold">{}</text>"#,
        MARGIN + 16.0,
        escape(&spec.title)
    );

    // Column headers.
    let mut col_x = MARGIN;
    let _ = writeln!(svg, r#"<g class="table-header" font-weight="bold">"#);
    for col in &spec.metadata_columns {
        let (x, anchor) = if col.right_aligned() {
            (col_x + col.width_px() - 8.0, "end")
        } else {
            (col_x, "start")
        };
        let _ = writeln!(
            svg,
            r#"<text x="{x:.2}" y="{:.2}" text-anchor="{anchor}">{}</text>"#,
            header_y + row_h * 0.75,
            escape(col.header())
        );
        col_x += col.width_px();
    }
    let _ = writeln!(svg, "</g>");

    if let Some(delta) = spec.negligible_threshold {
        let x0 = layout.x_of(-delta);
        let x1 = layout.x_of(delta);
        let _ = writeln!(
            svg,
            r##"<rect class="negligible-band" data-threshold="{delta}" x="{x0:.2}" y="{:.2}" width="{:.2}" height="{:.2}" fill="#d9d9d9" fill-opacity="0.7"/>"##,
            layout.plot_top,
            x1 - x0,
            layout.plot_bottom() - layout.plot_top
        );
    }

    let zero = layout.x(0.0);
    let _ = writeln!(
        svg,
        r##"<line class="zero-line" x1="{zero:.2}" y1="{:.2}" x2="{zero:.2}" y2="{:.2}" stroke="#000000" stroke-width="1"/>"##,
        layout.plot_top,
        layout.plot_bottom()
    );

    if let Some(t) = spec.meaningful_threshold {
        for side in [-t, t] {
            let x = layout.x_of(side);
            let _ = writeln!(
                svg,
                r##"<line class="meaningful-line" data-threshold="{side}" x1="{x:.2}" y1="{:.2}" x2="{x:.2}" y2="{:.2}" stroke="#b8860b" stroke-width="1.5" stroke-dasharray="4 3"/>"##,
                layout.plot_top,
                layout.plot_bottom()
            );
        }
    }

    for (row, (s, e)) in spec.studies.iter().enumerate() {
        let y = layout.row_mid(row);
        let _ = writeln!(svg, r#"<g class="study-row" data-study-id="{}">"#, s.id);
        let mut col_x = MARGIN;
        for col in &spec.metadata_columns {
            let (x, anchor) = if col.right_aligned() {
                (col_x + col.width_px() - 8.0, "end")
            } else {
                (col_x, "start")
            };
            let text = truncate(&col.cell(s, e), col.max_chars());
            let _ = writeln!(
                svg,
                r#"<text x="{x:.2}" y="{:.2}" text-anchor="{anchor}">{}</text>"#,
                y + 4.0,
                escape(&text)
            );
            col_x += col.width_px();
        }
        let x_lo = layout.x_of(e.ci_lo);
        let x_hi = layout.x_of(e.ci_hi);
        let _ = writeln!(
            svg,
            r##"<line class="interval" x1="{x_lo:.2}" y1="{y:.2}" x2="{x_hi:.2}" y2="{y:.2}" stroke="#1f4e79" stroke-width="2"/>"##
        );
        if e.ci_lo < -1.0 {
            // Lower bound runs off the axis.
            let _ = writeln!(
                svg,
                r##"<path class="clipped" d="M{:.2} {y:.2} l6 -4 v8 z" fill="#1f4e79"/>"##,
                x_lo
            );
        }
        let _ = writeln!(
            svg,
            r##"<circle class="estimate" cx="{:.2}" cy="{y:.2}" r="3" fill="#000000"/>"##,
            layout.x_of(e.point_estimate)
        );
        let _ = writeln!(svg, "</g>");
    }

    let axis_y = layout.plot_bottom() + 4.0;
    let _ = writeln!(svg, r#"<g class="axis">"#);
    let _ = writeln!(
        svg,
        r##"<line x1="{:.2}" y1="{axis_y:.2}" x2="{:.2}" y2="{axis_y:.2}" stroke="#000000"/>"##,
        layout.x(-1.0),
        layout.x(1.0)
    );
    for tick in AXIS_TICKS {
        let x = layout.x_of(tick);
        let _ = writeln!(
            svg,
            r##"<line x1="{x:.2}" y1="{axis_y:.2}" x2="{x:.2}" y2="{:.2}" stroke="#000000"/>"##,
            axis_y + 5.0
        );
        let _ = writeln!(
            svg,
            r#"<text x="{x:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
            axis_y + 18.0,
            tick_label(tick)
        );
    }
    let _ = writeln!(
        svg,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">Relative difference in means</text>"#,
        layout.x(0.0),
        axis_y + 34.0
    );
    let _ = writeln!(svg, "</g>");
    svg.push_str("</svg>\n");

    debug_assert_eq!(
        spec.studies
            .iter()
            .map(|(s, _)| s.id)
            .collect::<HashSet<_>>()
            .len(),
        spec.studies.len()
    );
    Ok(svg)
}
