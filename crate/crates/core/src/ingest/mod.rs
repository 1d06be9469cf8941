//! Parsing, cleaning and merging of the heterogeneous source documents.

mod cells;
mod dictionary;
mod encode;
mod levenshtein;
mod logs;
mod merge;
mod production;
mod sources;
mod stages;

pub use cells::parse_cell;
pub use dictionary::{
    dictionaries_to_json, load_dictionaries, normalize_category, parse_dictionaries, CategoryDictionary,
    DictionarySet,
};
pub use encode::{encode_categories, manufacturer_prefix, EncodingPolicy, UNKNOWN_LEVEL};
pub use levenshtein::levenshtein;
pub use logs::{aggregate_well_logs, LogInterval, ScopeFeatures, Summary, WellLogFeatures, LOG_RESOLUTION_M};
pub use merge::{merge_sources, merge_sources_logged, MergeLog};
pub use production::{
    compute_production_targets, format_date, format_month, month_index, month_of_day, parse_date, parse_month,
    MonthlyRecord, ProductionRecord, TARGET_COLUMN, WINDOWS,
};
pub use sources::{read_source_dir, SourceDoc, SourceKind};
pub use stages::{
    consolidate_stages, is_per_stage_category, stage_column, stage_rule, OperationRecord, StageLayout, StageRecord,
    StageRule, STAGE_COUNT_COLUMN,
};
