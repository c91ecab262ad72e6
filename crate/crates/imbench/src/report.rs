//! Plain-text rank tables.
//!
//! Rendering is deterministic: identical summaries produce byte-identical
//! text. Ranks print with two decimals; letter groups are contiguous
//! lowercase strings.

use crate::metrics::MetricKind;
use crate::stats::{AdjustMethod, RankSummary};

fn pad(s: &str, width: usize) -> String {
    format!("{s:<width$}")
}

/// Rows sorted by mean rank: `algorithm  rank  sig`.
pub fn render_rank_table(metric: MetricKind, group_label: &str, summary: &RankSummary) -> String {
    let mut order: Vec<usize> = (0..summary.columns.len()).collect();
    order.sort_by(|&a, &b| {
        summary.mean_ranks[a]
            .partial_cmp(&summary.mean_ranks[b])
            .unwrap()
            .then(summary.columns[a].cmp(&summary.columns[b]))
    });

    let name_width = summary
        .columns
        .iter()
        .map(String::len)
        .chain(["algorithm".len()])
        .max()
        .unwrap();

    let mut out = String::new();
    out.push_str(&format!(
        "# metric: {metric}  group: {group_label}  rows: {}\n",
        summary.n_rows
    ));
    match (
        summary.friedman_statistic,
        summary.friedman_p,
        summary.adjustment,
    ) {
        (Some(stat), Some(p), Some(adjust)) => {
            let adjust = match adjust {
                AdjustMethod::BergmannHommel => "bergmann-hommel",
                AdjustMethod::Holm => "holm",
            };
            out.push_str(&format!(
                "# friedman: {stat:.4}  p: {p:.4}  adjust: {adjust}\n"
            ));
        }
        _ => {
            if let Some((stat, p)) = summary.wilcoxon {
                out.push_str(&format!("# wilcoxon: {stat}  p: {p:.4}\n"));
            }
        }
    }
    out.push_str(&format!("{}  rank  sig\n", pad("algorithm", name_width)));
    for &i in &order {
        out.push_str(&format!(
            "{}  {:.2}  {}\n",
            pad(&summary.columns[i], name_width),
            summary.mean_ranks[i],
            summary.letters[i]
        ));
    }
    out
}

/// Two-solution Wilcoxon table: mean ranks side by side plus the p-value.
pub fn render_pair_table(metric: MetricKind, summary: &RankSummary) -> String {
    let (_, p) = summary.wilcoxon.unwrap_or((0.0, 1.0));
    let a = &summary.columns[0];
    let b = &summary.columns[1];
    let wa = a.len().max("a".len());
    let wb = b.len().max("b".len());
    let mut out = String::new();
    out.push_str(&format!("# metric: {metric}  rows: {}\n", summary.n_rows));
    out.push_str(&format!(
        "{}  rank.a  {}  rank.b  p.value\n",
        pad("a", wa),
        pad("b", wb)
    ));
    out.push_str(&format!(
        "{}  {:.2}    {}  {:.2}    {:.2e}\n",
        pad(a, wa),
        summary.mean_ranks[0],
        pad(b, wb),
        summary.mean_ranks[1],
        p
    ));
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn summary() -> RankSummary {
        RankSummary {
            columns: vec![
                "baseline".into(),
                "weight".into(),
                "smote".into(),
                "underbagging".into(),
            ],
            mean_ranks: vec![2.97, 3.0, 2.57, 1.46],
            n_rows: 24,
            friedman_statistic: Some(31.2),
            friedman_p: Some(0.0001),
            pairwise_p: None,
            adjustment: Some(AdjustMethod::BergmannHommel),
            wilcoxon: None,
            letters: vec!["c".into(), "c".into(), "b".into(), "a".into()],
        }
    }

    #[test]
    fn rank_table_sorted_and_stable() {
        let a = render_rank_table(MetricKind::Gmean, "strategies", &summary());
        let b = render_rank_table(MetricKind::Gmean, "strategies", &summary());
        assert_eq!(a, b);
        let lines: Vec<&str> = a.lines().collect();
        assert!(lines[3].starts_with("underbagging"));
        assert!(lines[3].contains("1.46"));
        assert!(lines[4].starts_with("smote"));
    }

    #[test]
    fn pair_table_contains_p_value() {
        let s = RankSummary {
            columns: vec!["rf_baseline".into(), "rusboost".into()],
            mean_ranks: vec![1.21, 1.79],
            n_rows: 40,
            friedman_statistic: None,
            friedman_p: None,
            pairwise_p: None,
            adjustment: None,
            wilcoxon: Some((12.0, 1.5e-4)),
            letters: vec!["a".into(), "b".into()],
        };
        let text = render_pair_table(MetricKind::Auc, &s);
        assert!(text.contains("rf_baseline"));
        assert!(text.contains("1.21"));
        assert!(text.contains("1.5e-4") || text.contains("1.50e-4"));
    }
}
