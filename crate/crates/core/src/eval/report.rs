use std::collections::BTreeSet;
use std::fmt::Write;

use super::{EvalReport, MISS, SPURIOUS};

fn pct(x: f64) -> String {
    format!("{:.2}", 100.0 * x)
}

fn opt_pct(x: Option<f64>) -> String {
    x.map_or_else(|| "-".to_string(), pct)
}

impl EvalReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// Aligned per-class table followed by the summary scores.
    pub fn to_table(&self) -> String {
        let width = self
            .per_class
            .keys()
            .map(|k| k.chars().count())
            .chain([5])
            .max()
            .unwrap_or(5);
        let mut out = String::new();
        let _ = writeln!(
            out,
            "{:<width$}  {:>9}  {:>9}  {:>9}  {:>6}  {:>6}",
            "class", "precision", "recall", "f1", "gold", "pred"
        );
        for (label, c) in &self.per_class {
            let _ = writeln!(
                out,
                "{:<width$}  {:>9}  {:>9}  {:>9}  {:>6}  {:>6}",
                label,
                pct(c.precision),
                pct(c.recall),
                pct(c.f1),
                c.gold_count,
                c.pred_count
            );
        }
        out.push('\n');
        for (name, v) in [
            ("macro f1", pct(self.macro_f1)),
            ("micro f1", pct(self.micro_f1)),
            ("boundary f1", pct(self.boundary_f1)),
            ("clean macro f1", opt_pct(self.clean_macro_f1)),
            ("noisy macro f1", opt_pct(self.noisy_macro_f1)),
        ] {
            let _ = writeln!(out, "{name:<15} {v:>7}");
        }
        out
    }

    /// Gold labels as rows (plus `SPURIOUS` last), predicted labels as
    /// columns (plus `MISS` last).
    pub fn confusion_csv(&self) -> String {
        let mut rows: Vec<&str> = self
            .confusion
            .keys()
            .map(String::as_str)
            .filter(|k| *k != SPURIOUS)
            .collect();
        rows.push(SPURIOUS);
        let mut cols: Vec<&str> = self
            .confusion
            .values()
            .flat_map(|m| m.keys().map(String::as_str))
            .filter(|k| *k != MISS)
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect();
        cols.push(MISS);
        let mut out = String::from("gold\\pred");
        for c in &cols {
            out.push(',');
            out.push_str(c);
        }
        out.push('\n');
        for r in rows {
            out.push_str(r);
            for c in &cols {
                let n = self
                    .confusion
                    .get(r)
                    .and_then(|m| m.get(*c))
                    .copied()
                    .unwrap_or(0);
                let _ = write!(out, ",{n}");
            }
            out.push('\n');
        }
        out
    }
}
