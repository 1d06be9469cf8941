//! One-hot encoding of categorical columns.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::table::{Column, ColumnMeta, FieldTable};

/// Level given to missing categorical cells.
pub const UNKNOWN_LEVEL: &str = "unknown";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EncodingPolicy {
    FullOneHot,
    /// Proppant names collapse to their manufacturer before one-hot.
    Reduced,
}

/// Lowercased text before the first space, hyphen or slash.
pub fn manufacturer_prefix(token: &str) -> String {
    let t = token.trim();
    let end = t.find([' ', '-', '/']).unwrap_or(t.len());
    t[..end].to_lowercase()
}

fn is_proppant_name(column: &str) -> bool {
    column.to_ascii_lowercase().contains("proppant")
}

/// Replace every categorical column by one binary column per level, named
/// `column=level`, at the position of the original column. Levels are sorted;
/// missing cells become [`UNKNOWN_LEVEL`].
pub fn encode_categories(table: &FieldTable, policy: EncodingPolicy) -> Result<FieldTable> {
    let mut out = Vec::with_capacity(table.n_cols());
    for col in table.columns() {
        if col.is_numeric() {
            out.push(col.clone());
            continue;
        }
        let reduce = policy == EncodingPolicy::Reduced && is_proppant_name(col.name());
        let values: Vec<String> = (0..col.len())
            .map(|r| match col.cat(r) {
                None => UNKNOWN_LEVEL.to_string(),
                Some(v) if reduce => manufacturer_prefix(v),
                Some(v) => v.to_string(),
            })
            .collect();
        let levels: BTreeSet<&String> = values.iter().collect();
        for level in levels {
            let meta = ColumnMeta::numeric(format!("{}={}", col.name(), level), col.meta.group);
            out.push(Column::dense(
                meta,
                values.iter().map(|v| if v == level { 1.0 } else { 0.0 }).collect(),
            ));
        }
    }
    FieldTable::new(table.keys().to_vec(), out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::table::ColumnGroup;

    fn cat_table(name: &str, vals: &[Option<&str>]) -> FieldTable {
        FieldTable::with_row_numbers(vec![
            Column::dense(ColumnMeta::numeric("x", ColumnGroup::Design), vec![1.0; vals.len()]),
            Column::from_categorical(
                ColumnMeta::categorical(name, ColumnGroup::Design),
                vals.iter().map(|v| v.map(str::to_string)).collect(),
            ),
        ])
        .unwrap()
    }

    #[test]
    fn full_one_hot_counts_levels() {
        let t = cat_table("fluid", &[Some("a"), Some("b"), Some("a")]);
        let e = encode_categories(&t, EncodingPolicy::FullOneHot).unwrap();
        assert_eq!(e.n_cols(), 3);
        assert_eq!(e.column("fluid=a").unwrap().observed(), vec![1.0, 0.0, 1.0]);
    }

    #[test]
    fn reduced_keeps_manufacturer() {
        let t = cat_table("proppant_s1", &[Some("Acme-16/20"), Some("Acme-20/40")]);
        let e = encode_categories(&t, EncodingPolicy::Reduced).unwrap();
        assert_eq!(e.n_cols(), 2);
        assert_eq!(e.column("proppant_s1=acme").unwrap().observed(), vec![1.0, 1.0]);
        let full = encode_categories(&t, EncodingPolicy::FullOneHot).unwrap();
        assert_eq!(full.n_cols(), 3);
    }

    #[test]
    fn missing_becomes_unknown() {
        let t = cat_table("fluid", &[Some("a"), None]);
        let e = encode_categories(&t, EncodingPolicy::FullOneHot).unwrap();
        assert_eq!(e.column("fluid=unknown").unwrap().observed(), vec![0.0, 1.0]);
    }

    #[test]
    fn numeric_table_unchanged() {
        let t = FieldTable::with_row_numbers(vec![Column::dense(
            ColumnMeta::numeric("x", ColumnGroup::Well),
            vec![1.0, 2.0],
        )])
        .unwrap();
        let e = encode_categories(&t, EncodingPolicy::Reduced).unwrap();
        assert_eq!(e.columns(), t.columns());
    }

    #[test]
    fn prefix_rule() {
        assert_eq!(manufacturer_prefix("Acme 20/40"), "acme");
        assert_eq!(manufacturer_prefix("bolt/x"), "bolt");
        assert_eq!(manufacturer_prefix("plain"), "plain");
    }

    proptest::proptest! {
        #[test]
        fn reduced_never_widens(
            vals in proptest::collection::vec(proptest::option::of("(acme|bolt|Acme)[ /-]?[0-9]{0,2}"), 1..30),
            name in "(proppant_s1|fluid)",
        ) {
            let t = cat_table(&name, &vals.iter().map(|v| v.as_deref()).collect::<Vec<_>>());
            let full = encode_categories(&t, EncodingPolicy::FullOneHot).unwrap();
            let reduced = encode_categories(&t, EncodingPolicy::Reduced).unwrap();
            proptest::prop_assert!(reduced.n_cols() <= full.n_cols());
            // each row sets exactly one level of the encoded column
            for e in [&full, &reduced] {
                for r in 0..vals.len() {
                    let hot: f64 = e.columns()[1..].iter().map(|c| c.num(r).unwrap()).sum();
                    proptest::prop_assert_eq!(hot, 1.0);
                }
            }
        }
    }
}
