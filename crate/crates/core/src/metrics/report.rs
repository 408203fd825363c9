use std::io;

use serde::Serialize;
use serde_json::ser::{Formatter, PrettyFormatter};

use crate::error::Result;

use super::coco::MetricsReport;
use super::openworld::{OseReport, WildernessReport};

/// Pretty JSON formatter that prints every float with six decimals.
/// Non-finite floats come out as `null`.
pub struct FixedPointFormatter<'a>(PrettyFormatter<'a>);

impl Default for FixedPointFormatter<'_> {
    fn default() -> Self {
        FixedPointFormatter(PrettyFormatter::new())
    }
}

impl Formatter for FixedPointFormatter<'_> {
    fn write_f64<W: ?Sized + io::Write>(&mut self, w: &mut W, v: f64) -> io::Result<()> {
        write!(w, "{v:.6}")
    }

    fn write_f32<W: ?Sized + io::Write>(&mut self, w: &mut W, v: f32) -> io::Result<()> {
        write!(w, "{v:.6}")
    }

    fn begin_array<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_array(w)
    }

    fn end_array<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array(w)
    }

    fn begin_array_value<W: ?Sized + io::Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_array_value(w, first)
    }

    fn end_array_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array_value(w)
    }

    fn begin_object<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object(w)
    }

    fn end_object<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object(w)
    }

    fn begin_object_key<W: ?Sized + io::Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_object_key(w, first)
    }

    fn begin_object_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object_value(w)
    }

    fn end_object_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object_value(w)
    }
}

/// Serializes with [`FixedPointFormatter`] and a trailing newline.
pub fn to_fixed_json<T: Serialize + ?Sized>(value: &T) -> Result<String> {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, FixedPointFormatter::default());
    value.serialize(&mut ser)?;
    buf.push(b'\n');
    Ok(String::from_utf8(buf).expect("serde_json emits UTF-8"))
}

fn cell(v: Option<f64>) -> String {
    v.map_or_else(|| "-".to_string(), |v| format!("{v:.6}"))
}

/// Left-aligned first column, right-aligned others.
fn table(rows: &[Vec<String>]) -> String {
    let cols = rows.iter().map(Vec::len).max().unwrap_or(0);
    let widths: Vec<usize> = (0..cols)
        .map(|c| rows.iter().filter_map(|r| r.get(c)).map(String::len).max().unwrap_or(0))
        .collect();
    let mut out = String::new();
    for r in rows {
        let line: Vec<String> = r
            .iter()
            .enumerate()
            .map(|(c, s)| if c == 0 { format!("{s:<w$}", w = widths[c]) } else { format!("{s:>w$}", w = widths[c]) })
            .collect();
        out.push_str(line.join("  ").trim_end());
        out.push('\n');
    }
    out
}

pub fn metrics_table(r: &MetricsReport) -> String {
    let row = |name: &str, v: Option<f64>| vec![name.to_string(), cell(v)];
    let mut out = table(&[
        vec!["metric".into(), "value".into()],
        row("AP_all", r.ap_all),
        row("AP50", r.ap50),
        row("AP75", r.ap75),
        row("AP_s", r.ap_s),
        row("AP_m", r.ap_m),
        row("AP_l", r.ap_l),
        row("AR_all", r.ar_all),
        row("AR_s", r.ar_s),
        row("AR_m", r.ar_m),
        row("AR_l", r.ar_l),
    ]);
    out.push('\n');
    let mut rows = vec![vec!["iou".to_string(), "AP".into(), "AR".into()]];
    rows.extend(
        r.per_threshold
            .iter()
            .map(|t| vec![format!("{:.2}", t.iou_threshold), cell(t.ap), cell(t.ar)]),
    );
    out.push_str(&table(&rows));
    if !r.per_category.is_empty() {
        out.push('\n');
        let mut rows = vec![vec!["category".to_string(), "truth".into(), "AP".into(), "AP50".into()]];
        rows.extend(r.per_category.iter().map(|c| {
            vec![c.category_id.to_string(), c.num_truth.to_string(), cell(c.ap), cell(c.ap50)]
        }));
        out.push_str(&table(&rows));
    }
    out.push_str(&format!(
        "\nimages {}  detections {}  truth {}  max detections {}{}\n",
        r.num_images,
        r.num_detections,
        r.num_truth,
        r.max_detections,
        if r.class_agnostic { "  class-agnostic" } else { "" }
    ));
    out
}

pub fn wilderness_table(w: &WildernessReport) -> String {
    let mut rows = vec![
        vec!["score cut".to_string(), "P_K".into(), "P_KU".into(), "WI".into()],
        vec![format!("{:.6}", w.score_threshold), cell(Some(w.p_known)), cell(Some(w.p_mixed)), cell(Some(w.wi))],
    ];
    if let Some(op) = &w.at_recall {
        rows.push(vec![
            format!("{:.6} (recall {:.2})", op.score_threshold, op.recall_level),
            cell(Some(op.p_known)),
            cell(Some(op.p_mixed)),
            cell(op.wi),
        ]);
    }
    table(&rows)
}

pub fn ose_table(o: &OseReport) -> String {
    let mut rows = vec![vec!["class".to_string(), "absorbed".into()]];
    rows.extend(o.per_class.iter().map(|(c, n)| vec![c.to_string(), n.to_string()]));
    rows.push(vec!["A-OSE".into(), o.a_ose.to_string()]);
    table(&rows)
}
