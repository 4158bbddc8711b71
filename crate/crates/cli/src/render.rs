use qflow_core::sim::Histogram;

pub const MIN_WIDTH: usize = 20;

/// One line per outcome, most frequent first, with a bar scaled so the
/// largest count spans `width` characters.
pub fn render_histogram(h: &Histogram, width: usize) -> String {
    if h.is_empty() {
        return "(no counts)\n".to_string();
    }
    let width = width.max(MIN_WIDTH);
    let mut rows: Vec<(&String, u64)> = h.counts().iter().map(|(k, &v)| (k, v)).collect();
    rows.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));
    let top = rows[0].1 as f64;
    let count_width = rows[0].1.to_string().len();
    let mut out = String::new();
    for (key, count) in rows {
        let len = (width as f64 * count as f64 / top).round() as usize;
        let pct = 100.0 * count as f64 / h.shots() as f64;
        out.push_str(&format!(
            "{key} |{bar:<width$}| {count:>count_width$} ({pct:5.1}%)\n",
            bar = "#".repeat(len)
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeMap;

    fn bar_len(line: &str) -> usize {
        line.chars().filter(|&c| c == '#').count()
    }

    #[test]
    fn bars_scale_with_counts() {
        let counts = BTreeMap::from([("00".to_string(), 75), ("11".to_string(), 25)]);
        let h = Histogram::from_counts(2, counts).unwrap();
        let text = render_histogram(&h, 60);
        let lines: Vec<&str> = text.lines().collect();
        assert!(lines[0].starts_with("00 "));
        assert_eq!(bar_len(lines[0]), 3 * bar_len(lines[1]));
        assert!(lines[0].ends_with("75 ( 75.0%)"));
        assert!(lines[1].ends_with("25 ( 25.0%)"));
    }

    #[test]
    fn empty_and_narrow() {
        let h = Histogram::from_counts(3, BTreeMap::new()).unwrap();
        assert_eq!(render_histogram(&h, 40), "(no counts)\n");
        let h = Histogram::from_values(1, [0, 0, 1]);
        let text = render_histogram(&h, 5);
        assert_eq!(bar_len(text.lines().next().unwrap()), MIN_WIDTH);
    }

    #[test]
    fn ties_sorted_by_key() {
        let h = Histogram::from_values(2, [3, 1, 1, 3, 0]);
        let text = render_histogram(&h, 20);
        let keys: Vec<&str> = text.lines().map(|l| &l[..2]).collect();
        assert_eq!(keys, ["01", "11", "00"]);
    }
}
